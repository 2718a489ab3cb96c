pub mod error;
pub mod harness;
pub mod model;
pub mod optimal;
pub mod perturbation;
pub mod sim;
pub mod theory;

pub use error::{Error, Result};
pub use model::{
    classify_phase, sigma_tilde, Architecture, Diagnostics, ModelKind, Phase, Scenario,
    SigmaTilde, TheoryResult,
};
