use ndarray::{Array2, Array3};
use proptest::prelude::*;

use motret::data::{aggregate_body_parts, pad_and_mask, SkeletonSequence, SkeletonTopology};
use motret::eval::{mean_median_rank, ndcg, recall_at_k};
use motret::index::EmbeddingStore;
use motret::space::{infonce_loss, similarity_matrix, triplet_loss};

fn matrix(n: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| Array2::from_shape_vec((n, n), v).unwrap())
}

fn frames(t: usize, j: usize) -> impl Strategy<Value = Array3<f32>> {
    prop::collection::vec(-4.0f32..4.0, t * j * 9).prop_map(move |v| Array3::from_shape_vec((t, j, 9), v).unwrap())
}

proptest! {
    #[test]
    fn aggregation_is_linear(a in frames(3, 21), b in frames(3, 21), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let topo = SkeletonTopology::kit21();
        let agg = |f: Array3<f32>| aggregate_body_parts(&SkeletonSequence::new("m", f, 20.0).unwrap(), &topo).unwrap();
        // Mix in f64 from f32 inputs that are exact in both precisions.
        let (xa, yb) = (a.mapv(|v| v as f64) * x, b.mapv(|v| v as f64) * y);
        let mixed = (&xa + &yb).mapv(|v| v as f32);
        let lhs = agg(mixed.clone());
        let exact = agg(a) * x + agg(b) * y;
        let rounding = (&xa + &yb).iter().zip(&mixed).map(|(e, m)| (e - *m as f64).abs()).fold(0.0, f64::max);
        for (l, r) in lhs.iter().zip(&exact) {
            prop_assert!((l - r).abs() <= 1e-12 + rounding, "{l} vs {r}");
        }
    }

    #[test]
    fn padding_restores_the_cropped_input(lens in prop::collection::vec(1usize..12, 1..5), max_len in 1usize..8) {
        let topo = SkeletonTopology::kit21();
        let seqs: Vec<_> = lens
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let f = Array3::from_shape_fn((t, 21, 9), |(a, b, c)| (i * 1000 + a * 100 + b * 9 + c) as f32);
                aggregate_body_parts(&SkeletonSequence::new("m", f, 20.0).unwrap(), &topo).unwrap()
            })
            .collect();
        let batch = pad_and_mask(&seqs, max_len).unwrap();
        for (i, s) in seqs.iter().enumerate() {
            let t = s.dim().0;
            let kept = t.min(max_len);
            let start = (t - kept) / 2;
            prop_assert_eq!(batch.lengths[i], kept);
            prop_assert_eq!(batch.real_frames(i), s.slice(ndarray::s![start..start + kept, .., ..]).to_owned());
            prop_assert!(batch.mask.row(i).iter().enumerate().all(|(f, &m)| m == (f < kept)));
        }
    }

    #[test]
    fn losses_ignore_a_global_shift(s in (2usize..9).prop_flat_map(matrix), c in -5.0f64..5.0, tau in 0.01f64..2.0) {
        let shifted = s.mapv(|v| v + c);
        prop_assert!((triplet_loss(&s, 0.2).unwrap() - triplet_loss(&shifted, 0.2).unwrap()).abs() <= 1e-9);
        prop_assert!((infonce_loss(&s, tau).unwrap() - infonce_loss(&shifted, tau).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn infonce_is_non_negative(s in (1usize..9).prop_flat_map(matrix), tau in 0.01f64..2.0) {
        prop_assert!(infonce_loss(&s, tau).unwrap() >= 0.0);
    }

    #[test]
    fn losses_are_invariant_to_joint_pair_permutation(s in (2usize..7).prop_flat_map(matrix), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let n = s.nrows();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let p = Array2::from_shape_fn((n, n), |(i, j)| s[[perm[i], perm[j]]]);
        prop_assert!((triplet_loss(&s, 0.2).unwrap() - triplet_loss(&p, 0.2).unwrap()).abs() <= 1e-12);
        prop_assert!((infonce_loss(&s, 0.1).unwrap() - infonce_loss(&p, 0.1).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn cosine_matrix_is_bounded(a in prop::collection::vec(0.1f64..1.0, 12), b in prop::collection::vec(-1.0f64..1.0, 12)) {
        let m = Array2::from_shape_vec((3, 4), a).unwrap();
        let c = Array2::from_shape_vec((3, 4), b).unwrap();
        if let Ok(s) = similarity_matrix(&m, &c) {
            prop_assert!(s.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn recall_is_monotone_in_k(ranks in prop::collection::vec(1usize..50, 1..40)) {
        let mut prev = 0.0;
        for k in 1..55 {
            let r = recall_at_k(&ranks, k);
            prop_assert!(r >= prev && (0.0..=100.0).contains(&r));
            prev = r;
        }
        prop_assert_eq!(prev, 100.0);
        let (mean, median) = mean_median_rank(&ranks);
        let lo = *ranks.iter().min().unwrap() as f64;
        let hi = *ranks.iter().max().unwrap() as f64;
        prop_assert!(lo <= mean && mean <= hi && lo <= median && median <= hi);
    }

    #[test]
    fn ndcg_is_bounded_and_maximal_when_sorted(rels in prop::collection::vec(0u8..5, 1..30), p in 1usize..40) {
        let mut r: Vec<f64> = rels.iter().map(|&v| v as f64 / 4.0).collect();
        let v = ndcg(&r, p).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        r.sort_by(|a, b| b.total_cmp(a));
        let best = ndcg(&r, p).unwrap();
        prop_assert!(best >= v - 1e-12);
        if r[0] > 0.0 {
            prop_assert!((best - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn index_results_ignore_insertion_order(
        vs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..30),
        q in prop::collection::vec(-1.0f64..1.0, 4),
        k in 1usize..35,
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        prop_assume!(q.iter().any(|&x| x != 0.0));
        let entries: Vec<(String, Vec<f64>)> = vs
            .into_iter()
            .enumerate()
            .filter(|(_, v)| v.iter().any(|&x| x != 0.0))
            .map(|(i, v)| (format!("m{i:03}"), v))
            .collect();
        prop_assume!(!entries.is_empty());
        let mut shuffled = entries.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = EmbeddingStore::build(4, entries).unwrap().knn_query("q", &q, k).unwrap();
        let b = EmbeddingStore::build(4, shuffled).unwrap().knn_query("q", &q, k).unwrap();
        prop_assert_eq!(a, b);
    }
}
