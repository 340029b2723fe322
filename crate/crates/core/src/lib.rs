//! Fake-news detection over short social-media posts.
//!
//! The crate is organised around the stages of the pipeline:
//!
//! * [`corpus`] loads labelled post collections and their splits,
//! * [`preprocess`] cleans and tokenizes text,
//! * [`handcrafted`] and [`lsa`] build the two in-house representations,
//! * [`embeddings`] ingests dense vectors produced by external encoders,
//! * [`linear`] trains SGD linear classifiers used as base models and stackers,
//! * [`meta`] holds the neural and linear stacking meta-models,
//! * [`eval`] provides splits, cross-validation, grid search and metrics,
//! * [`pipeline`] wires representations and classifiers into trainable base models.

pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod handcrafted;
pub mod io;
pub mod linear;
pub mod lsa;
pub mod meta;
pub mod pipeline;
pub mod preprocess;
pub mod seed;

pub use corpus::{Dataset, Label, Record};
pub use error::{Error, Result};
