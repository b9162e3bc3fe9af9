//! Topic mining over streamed short texts.
//!
//! The crate covers the full path from a raw tweet stream to an inspectable
//! topic model: a single-node append-only log broker with a line-based TCP
//! protocol, keyword-filtered ingestion, deterministic text preprocessing
//! (cleaning, tokenization, stopwords, bigram phrases, Porter stemming),
//! bag-of-words and tf-idf corpus construction, three topic models (LSA via
//! randomized SVD, NMF via multiplicative updates, LDA via collapsed Gibbs
//! sampling), topic coherence scoring (UMass, sliding-window c_v, embedding
//! similarity over in-crate skip-gram vectors) with automatic selection of
//! the topic count, accuracy evaluation against hand-labeled documents, and
//! a static export of an intertopic-distance visualization.
//!
//! Every randomized stage takes an explicit seed and identical inputs plus
//! identical seeds reproduce results bit for bit.
//!
//! The best starting point is the `examples/` directory; each example is
//! runnable on bundled sample data:
//!
//! - Broker and ingestion
//!   - `broker_roundtrip` - publish/fetch/topics over the TCP line protocol
//!   - `ingest_replay` - replay a tweet capture file through the broker
//! - Preprocessing
//!   - `preprocess_pipeline` - cleaning, tokens, phrases, stems step by step
//! - Topic models
//!   - `train_lsa` - truncated SVD of the tf-idf matrix, top terms per topic
//!   - `train_nmf` - multiplicative updates, objective trace, top terms
//!   - `train_lda` - collapsed Gibbs sampling, top terms and document mixes
//! - Model selection and evaluation
//!   - `select_k_sweep` - coherence across a range of topic counts
//!   - `infer_and_eval` - fold-in inference, accuracy against gold labels
//! - Visualization
//!   - `export_vis` - topic proportions, intertopic map, term saliency
//! - Everything at once
//!   - `end_to_end` - tweet file to broker to models to report
//!
//! Run one with `cargo run --example <name>`. The thin `topiclab` binary
//! exposes the same stages as subcommands for shell pipelines; see the
//! crate README for the command reference.

pub mod broker;
pub mod cli;
pub mod coherence;
pub mod corpus;
pub mod eval;
pub mod ingest;
pub mod lda;
mod linalg;
pub mod lsa;
pub mod model_io;
pub mod nmf;
pub mod preprocess;
pub mod synth;
pub mod visexport;
