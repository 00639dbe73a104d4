mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #[test]
    fn motion_files_round_trip(m in motion()) {
        check_motion(&m)?;
    }

    #[test]
    fn token_files_round_trip(r in token_records()) {
        check_tokens(&r)?;
    }

    #[test]
    fn sentence_files_round_trip(r in sentence_records()) {
        check_sentences(&r)?;
    }

    #[test]
    fn checkpoint_containers_round_trip(c in container()) {
        check_container(&c)?;
    }

    #[test]
    fn index_files_round_trip(s in store()) {
        check_store(&s)?;
    }

    #[test]
    fn relevance_files_round_trip(m in relevance()) {
        check_relevance(&m)?;
    }

    #[test]
    fn truncated_motion_is_rejected(m in motion(), cut in 1usize..16) {
        let bytes = m.encode();
        let cut = cut.min(bytes.len());
        prop_assert!(motret::data::SkeletonSequence::decode("x", &bytes[..bytes.len() - cut]).is_err());
    }
}

#[test]
fn files_on_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let seq = motret::data::generate_synthetic(1, 3).unwrap().motions.into_values().next().unwrap();
    let path = dir.path().join("m.motr");
    motret::data::save_motion(&seq, &path).unwrap();
    let topo = motret::data::SkeletonTopology::for_joint_count(seq.joint_count()).unwrap();
    assert_eq!(motret::data::load_motion(&path, &topo).unwrap().frames, seq.frames);

    let store = motret::index::EmbeddingStore::build(2, [("a", vec![1.0, 2.0]), ("b", vec![0.0, -1.0])]).unwrap();
    let p = dir.path().join("i.midx");
    store.save(&p).unwrap();
    assert_eq!(motret::index::EmbeddingStore::load(&p).unwrap(), store);
}
