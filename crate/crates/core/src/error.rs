use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {context}: {message}")]
    Parse { context: String, message: String },

    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("degenerate wave indices: {0}")]
    DegenerateInput(String),

    #[error(
        "eps_x = {eps_x} and eps_y = {eps_y} are degenerate; use the isotropic Fresnel formulas instead"
    )]
    IsotropicDegeneracy { eps_x: f64, eps_y: f64 },

    #[error("averaged orientation is undefined: arccos argument {argument} lies outside [-1, 1]")]
    InversionDomain { argument: f64 },

    #[error("Fresnel denominator {denominator:e} is singular")]
    SingularDenominator { denominator: f64 },

    #[error("det(I - r1 r2 exp(-2 k3 a)) = {0:e} is not positive")]
    NonPositiveDeterminant(f64),

    #[error(
        "Matsubara sum did not converge within {terms} terms (last |term|/|sum| = {last_ratio:e})"
    )]
    Convergence { terms: usize, last_ratio: f64 },

    #[error("Fourier order {order} aliases on a {points}-point grid (need order < points / 2)")]
    Aliasing { order: usize, points: usize },

    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
