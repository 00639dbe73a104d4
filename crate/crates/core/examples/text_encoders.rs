//! The three text paths: an affine map over sentence vectors, an LSTM over
//! token vectors, and a self-contained encoder with its own vocabulary.
//! Sentence and token vectors come from the hashed featurizer here; real
//! runs read them from `SENT` / `TOKE` files.
//!
//! cargo run -p motret --example text_encoders

use motret::text::embeddings::{load_sentence_file, save_sentence_file};
use motret::text::{HashedFeaturizer, TextBatch, TextEncoder, TextEncoderConfig, Vocabulary};
use motret::text::{SentenceEmbedding, TokenEmbeddingSequence};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> motret::Result<()> {
    let captions = [
        "a person walks forward",
        "someone jumps in place",
        "a person walks in a counterclockwise circle",
    ];
    let feat = HashedFeaturizer::new(32, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let sentences = captions
        .iter()
        .enumerate()
        .map(|(i, t)| {
            Ok(SentenceEmbedding {
                caption_id: format!("c{i}"),
                vector: feat.sentence(t)?,
            })
        })
        .collect::<motret::Result<Vec<_>>>()?;
    let path = std::env::temp_dir().join("motret-example.sent");
    save_sentence_file(&path, &sentences)?;
    let loaded = load_sentence_file(&path)?;
    println!("wrote and reread {} sentence vectors ({})", loaded.len(), path.display());

    let affine = TextEncoder::init(TextEncoderConfig::affine(32, 16), &mut rng)?;
    let batch = TextBatch::from_sentence_records(&loaded.iter().collect::<Vec<_>>())?;
    println!("affine: {:?}", affine.encode(&batch)?.dim());

    let tokens = captions
        .iter()
        .enumerate()
        .map(|(i, t)| TokenEmbeddingSequence::new(format!("c{i}"), feat.tokens(t)?))
        .collect::<motret::Result<Vec<_>>>()?;
    let lstm = TextEncoder::init(TextEncoderConfig::lstm_aggregator(32, 16), &mut rng)?;
    let batch = TextBatch::from_token_records(&tokens.iter().collect::<Vec<_>>());
    println!("lstm aggregator over {:?} tokens: {:?}", tokens.iter().map(|t| t.len()).collect::<Vec<_>>(), lstm.encode(&batch)?.dim());

    let vocab = Vocabulary::build(captions);
    println!("self-contained vocabulary: {} entries", vocab.len());
    let own = TextEncoder::init(TextEncoderConfig::self_contained(vocab, 16, 16), &mut rng)?;
    let batch = own.token_ids(&["a person walks backward", "someone jumps"])?;
    println!("self-contained (with an unseen word): {:?}", own.encode(&batch)?.dim());
    Ok(())
}
