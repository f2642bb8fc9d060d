//! Core of the pseudobridge code-retrieval toolkit.
//!
//! Everything in this crate is pure computation over in-memory values and
//! builds without `std`: the hashed-subword encoder, the two contrastive
//! objectives with their analytic gradients, the optimizer and training
//! loops, exact dense retrieval, ranking metrics, and the deterministic
//! offline synthesis backend with its evaluate-refine loop. File formats are
//! exposed as byte encoders/decoders; the companion `pseudobridge` crate owns
//! the filesystem, HTTP, and CLI.

#![no_std]

extern crate alloc;

pub mod bytes;
pub mod corpus;
pub mod encoder;
pub mod experiment;
pub mod grad;
pub mod loss;
pub mod metrics;
pub mod optim;
pub mod retrieval;
pub mod sample;
pub mod synth;
pub mod tokenizer;
pub mod toy;
pub mod train;

pub use corpus::{filter_corpus, split_corpus, FilterConfig, FilterReport};
pub use encoder::{encode, similarity, EncoderConfig, EncoderParams, Embedding};
pub use loss::{loss_stage1, loss_stage2, Batch, LossKind};
pub use metrics::{evaluate, mrr, recall_at_k, EvalReport};
pub use retrieval::{build_index, rank_of, search_topk, Index, RankedResult};
pub use sample::{Provenance, Sample};
pub use tokenizer::Tokenizer;
pub use train::{train_stage1, train_stage2, TrainConfig};
