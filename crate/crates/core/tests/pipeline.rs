use motret::config::TrainConfig;
use motret::data::synthetic::assign_splits;
use motret::data::{generate_synthetic, CaptionRecord, Dataset, Split};
use motret::eval::{Provenance, RelevanceMatrix};
use motret::motion_encoder::MotionVariant;
use motret::pipeline::{encode_captions, encode_motions, evaluate_split, training_pairs, TextInputs};
use motret::space::{fit, LossKind, TrainState};
use motret::sweep::{run_sweep, SweepGrid};
use motret::text::HashedFeaturizer;

fn tiny(variant: MotionVariant) -> TrainConfig {
    let mut c = TrainConfig::default();
    c.motion.variant = variant;
    c.motion.hidden = 8;
    c.motion.ffn_hidden = 8;
    c.motion.depth = 1;
    c.motion.heads = 2;
    c.motion.model_dim = 8;
    c.motion.mot_ffn = 16;
    c.motion.output_dim = 16;
    c.motion.max_len = 48;
    c.text.hidden = 16;
    c.text.featurizer_dim = 16;
    c.d_common = 16;
    c.adam.lr = 3e-3;
    c.batch_size = 8;
    c
}

#[test]
fn two_hundred_steps_reduce_infonce_on_eight_pairs() {
    let data = generate_synthetic(8, 7).unwrap();
    let cfg = tiny(MotionVariant::Mot);
    let model = cfg.init_model(&data, &TextInputs::Free).unwrap();
    let pairs = training_pairs(&model, &data, Split::Train, &TextInputs::Free).unwrap();
    let mut state = TrainState::new(model, cfg.adam, cfg.seed);
    let log = fit(&mut state, &pairs, cfg.schedule(pairs.len()).with_steps(200)).unwrap();
    assert_eq!(log.losses.len(), 200);
    let head: f64 = log.losses[..50].iter().sum::<f64>() / 50.0;
    assert!(log.tail_mean(50).unwrap() < head, "{head} -> {:?}", log.tail_mean(50));
    assert!(*log.losses.last().unwrap() < log.losses[0]);
}

#[test]
fn singleton_collection_scores_perfectly() {
    let mut data = generate_synthetic(1, 0).unwrap();
    data.manifest.entries[0].split = Split::Test;
    let cfg = tiny(MotionVariant::Bigru);
    let model = cfg.init_model(&generate_synthetic(1, 0).unwrap(), &TextInputs::Free).unwrap();
    let r = evaluate_split(&model, &data, Split::Test, &TextInputs::Free, &[], true).unwrap();
    assert_eq!(r.recall_at(1), Some(100.0));
    assert_eq!((r.mean_rank, r.median_rank), (1.0, 1.0));
    assert_eq!(r.ndcg_for(Provenance::Lexical).unwrap().full, 1.0);
}

#[test]
fn precomputed_sentences_match_the_featurizer() {
    let data = generate_synthetic(5, 2).unwrap();
    let captions = data.captions();
    let f = HashedFeaturizer::new(16, 0);
    let sentences = TextInputs::sentences(f.sentence_records(&captions).unwrap());
    let cfg = tiny(MotionVariant::UpperLowerGru);
    let free = cfg.init_model(&data, &TextInputs::Free).unwrap();
    let pre = cfg.init_model(&data, &sentences).unwrap();
    assert_eq!(free.params, pre.params);
    let a = encode_captions(&free, &TextInputs::Free, &captions).unwrap();
    let b = encode_captions(&pre, &sentences, &captions).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(x.embedding.iter().zip(&y.embedding).all(|(u, v)| (u - v).abs() < 1e-6));
    }
}

#[test]
fn missing_caption_embedding_is_reported() {
    let data = generate_synthetic(2, 2).unwrap();
    let f = HashedFeaturizer::new(16, 0);
    let captions = data.captions();
    let inputs = TextInputs::sentences(f.sentence_records(&captions[..1]).unwrap());
    let model = tiny(MotionVariant::Mot).init_model(&data, &inputs).unwrap();
    let err = encode_captions(&model, &inputs, &captions).unwrap_err().to_string();
    assert!(err.contains(&captions[1].caption_id), "{err}");
}

#[test]
fn motion_store_covers_the_split() {
    let data = generate_synthetic(6, 1).unwrap();
    let model = tiny(MotionVariant::Mot).init_model(&data, &TextInputs::Free).unwrap();
    let (ids, _) = data.split(Split::Train);
    let store = encode_motions(&model, &data, &ids).unwrap();
    assert_eq!(store.ids(), ids.as_slice());
    assert_eq!(store.dim(), 16);
}

#[test]
fn duplicate_captions_are_one_query_with_every_motion_relevant() {
    let mut data = generate_synthetic(3, 4).unwrap();
    let text = data.manifest.entries[0].captions[0].text.clone();
    let id = data.manifest.entries[1].motion_id.clone();
    data.manifest.entries[1].captions = vec![CaptionRecord::new(format!("{id}-0"), id, text.to_uppercase()).unwrap()];
    let data = Dataset::new(data.manifest.clone(), data.motions.into_values().collect()).unwrap();
    let (_, queries, gt) = motret::pipeline::split_queries(&data, Split::Train);
    assert_eq!(queries.len(), 2);
    assert_eq!(gt.get(&queries[0].caption_id).unwrap().len(), 2);
}

#[test]
fn sweep_emits_one_valid_report_per_cell() {
    let mut data = generate_synthetic(12, 3).unwrap();
    assign_splits(&mut data, 0.0, 0.25, 1);
    let mut base = tiny(MotionVariant::Mot);
    base.steps = 3;
    let grid = SweepGrid {
        d_common: vec![4, 8],
        losses: vec![LossKind::Infonce, LossKind::Triplet],
        encoders: vec![MotionVariant::Bigru],
    };
    let mut seen = 0;
    let res = run_sweep(&base, &grid, &data, &TextInputs::Free, Split::Test, &[], |_| seen += 1).unwrap();
    assert_eq!((seen, res.cells.len()), (4, 4));
    for c in &res.cells {
        c.report.validate().unwrap();
        assert_eq!(c.report.collection, 3);
    }
    let csv = res.to_delimited(',');
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("encoder,loss,d_common,r1,r5,r10,mean,med"));
    let json = serde_json::to_string(&res).unwrap();
    assert_eq!(serde_json::from_str::<motret::sweep::SweepResult>(&json).unwrap(), res);
}

#[test]
fn external_relevance_must_cover_every_query() {
    let data = generate_synthetic(3, 5).unwrap();
    let model = tiny(MotionVariant::Bigru).init_model(&data, &TextInputs::Free).unwrap();
    let rel = RelevanceMatrix::new(
        Provenance::ExternalSpice,
        vec!["nobody".into()],
        vec!["synth-000".into()],
        ndarray::Array2::ones((1, 1)),
    )
    .unwrap();
    assert!(evaluate_split(&model, &data, Split::Train, &TextInputs::Free, &[rel], false).is_err());
}
