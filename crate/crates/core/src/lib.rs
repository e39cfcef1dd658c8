//! Graph-based dependency parsing with a four-directional Tensor-LSTM edge
//! scorer, plus cross-lingual projection of edge scores through sentence and
//! word alignments.
//!
//! The pipeline: [`corpus_io`] reads treebanks and embeddings, [`encoder`]
//! turns a sentence into a `w × (w+1)` [`ScoreMatrix`], [`decoder`] extracts
//! the maximum spanning tree, [`trainer`] fits the encoder under
//! [`losses`], and [`projection`] transfers source-language scores to
//! unannotated target sentences.

pub mod autodiff;
pub mod corpus_io;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod losses;
pub mod model_file;
pub mod projection;
pub mod scores;
pub mod synthetic;
pub mod tensor;
pub mod trainer;

pub use decoder::{decode, ParseTree};
pub use encoder::{FeatureMatrix, ModelDims, ModelParams};
pub use error::{Error, Result};
pub use scores::ScoreMatrix;
pub use tensor::DenseTensor;
