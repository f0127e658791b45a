//! Copula estimation for data with arbitrary margins.
//!
//! `tiecop` fits parametric copula families to multivariate samples whose
//! margins may be continuous, discrete or mixed. Ties and atoms are handled
//! by likelihoods built from rectangle probabilities instead of densities,
//! so count data, zero-inflated data and rounded data are all first-class
//! inputs. The crate also ships an identifiability auditor for the copula
//! parameters under discretized margins, a seeded Monte Carlo harness for
//! validating estimator bias, and a small drought-analysis pipeline built on
//! a standardized precipitation index.
//!
//! Entry points:
//! - [`copulas::CopulaSpec`]: evaluate, differentiate and sample a family;
//! - [`margins`]: empirical and parametric margins, pseudo-observations;
//! - [`likelihood::Evaluator`]: tie-aware pseudo log-likelihoods;
//! - [`estimation::fit`]: multistart maximum pseudo-likelihood;
//! - [`identifiability::audit`]: rank diagnostics on the checkable grid;
//! - [`simulation`]: bias/RMSE experiments with known margins;
//! - [`hydro`]: SPI, drought extraction and duration-severity models.

pub mod copulas;
pub mod error;
pub mod estimation;
pub mod hydro;
pub mod identifiability;
pub mod likelihood;
pub mod margins;
pub mod numeric;
pub mod simulation;

pub use error::{Error, Result};
