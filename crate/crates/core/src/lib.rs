//! Incremental cross-modal hashing.
//!
//! Two modalities (say image features `X` and text features `Y`) are mapped to
//! a shared Hamming space `{-1,+1}^q` in two stages:
//!
//! 1. [`codegen`] learns relaxed codes `A`, `B` for the training pairs by
//!    projected gradient descent on a label-similarity factorization, either
//!    from scratch or with the codes of retained exemplars held fixed.
//! 2. Hash functions map raw features to those codes: per-bit ridge regression
//!    ([`linfn`], with three proximal variants for incremental updates) or a
//!    small two-headed MLP ([`mlp`], with classifier expansion, class-weighted
//!    cross-entropy and a class-balanced sampler).
//!
//! [`protocol`] drives class-incremental experiments (retrain-everything,
//! frozen base model, and exemplar-based adaptation) and [`eval`] scores the
//! resulting codes with Hamming ranking and mean average precision.
//!
//! The runnable programs under `examples/` walk through each capability.

pub mod cli;
pub mod codegen;
pub mod codes;
pub mod data;
pub mod error;
pub mod eval;
pub mod linfn;
pub mod mlp;
pub mod persist;
pub mod protocol;

pub use codes::{quantize, BinaryCodeMatrix, RelaxedCodeMatrix};
pub use data::{build_similarity, FeatureMatrix, LabelVector, PairedDataset, SimilarityMatrix};
pub use error::{Error, Result};
