//! Unsupervised relation learning for decision-focused meeting summaries.
//!
//! Decision documents (time-ordered clusters of decision-related dialogue
//! acts) are explained by a generative model over latent indicator-argument
//! relation instances. Inference is mean-field variational coordinate descent
//! whose posterior over instances is projected onto a set of expectation
//! constraints. The highest-probability instance of each relation type forms
//! the summary of a document.

pub mod baselines;
pub mod corpus;
pub mod features;
pub mod inference;
pub mod model;
pub mod pipeline;
pub mod rouge;
pub mod text;
