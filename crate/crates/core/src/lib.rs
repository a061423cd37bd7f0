//! Sparse Bayesian learning toolkit.
//!
//! Implements the relevance vector machine (type-II maximum likelihood and
//! fully Bayesian Gibbs variants), an RKHS classification model with
//! loss-based likelihoods, and, gating all of it, posterior-propriety
//! checks for the hyperparameter configurations these models are run with.
//! A numerical lab verifies the bounds behind the propriety rules and
//! exhibits impropriety through truncated-mass divergence probes.

pub mod classifier;
pub mod error;
pub mod gibbs;
pub mod kernel;
pub mod lab;
pub mod linalg;
pub mod mcmc;
pub mod propriety;
pub mod quadrature;
pub mod record;
pub mod regression;

pub use error::{Error, Result};
