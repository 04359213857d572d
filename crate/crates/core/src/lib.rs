//! Orthogonal Tucker decomposition with modewise random embeddings.
//!
//! The crate provides dense tensor algebra ([`tensor`], [`matrix`]), the
//! Tucker model ([`tucker`]), oblivious JL embeddings ([`embeddings`]), the
//! HOSVD / HOOI / HOOI-RE / HOOI-RE* decomposers ([`decompose`]), a Monte
//! Carlo harness for the distortion bounds ([`verify`]) and the benchmark
//! runner behind the command-line tool ([`bench`]).

pub mod bench;
pub mod decompose;
pub mod embeddings;
pub mod error;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod rng;
pub mod tensor;
pub mod tucker;
pub mod verify;


pub use decompose::{DecomposerConfig, Init, Method, RunReport, StageTimes};
pub use embeddings::{EmbeddingKind, MixOperators, ModewiseEmbedding};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use tensor::DenseTensor;
pub use tucker::{CoherenceReport, TuckerDecomposition};
