//! Toolkit for response process data — timestamped action sequences from
//! human–computer interaction logs.
//!
//! The crate covers the full workflow:
//!
//! - [`model`] / [`summary`] / [`ops`] — the process data model, descriptive
//!   statistics, and sequence-manipulation operations for cleaning.
//! - [`io`] — CSV ingestion and serialization in two layouts ("single" and
//!   "multiple"), round-trippable bit-faithfully.
//! - [`gen`] — synthetic process generators (simulated item, Markov chain,
//!   recurrent network).
//! - [`dissim`] — pairwise dissimilarities between processes (optimal symbol
//!   similarity on actions, optionally time-weighted).
//! - [`mds`] — latent features via classical multidimensional scaling or a
//!   subset-anchored large-n algorithm, with cross-validated dimension choice.
//! - [`nn`] — a self-contained micro neural stack: embeddings, GRU/LSTM cells,
//!   dense heads, exact backpropagation through time, and four optimizers.
//! - [`seqae`] — sequence autoencoders for unsupervised feature extraction.
//! - [`seqm`] — supervised sequence models predicting a binary or numeric
//!   response from a process plus optional covariates.
//! - [`logit`] — a logistic-regression helper for feature→outcome pipelines.
//! - [`archive`] — versioned plain-text persistence for trained models.

pub mod archive;
pub mod dissim;
pub mod error;
pub mod gen;
pub mod io;
pub mod logit;
pub mod mds;
pub mod model;
pub mod nn;
pub mod ops;
pub mod optim;
pub mod rng;
pub mod seqae;
pub mod seqm;
pub mod summary;

pub use error::{Error, ErrorClass, Result};
pub use model::{ProcessSet, Selection};
pub use summary::{summarize, ProcessSummary};
