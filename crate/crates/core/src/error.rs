use thiserror::Error;

use crate::blocksolve::{ConfigError, SolveReport};
use crate::elements::ElementError;
use crate::linalg::LinalgError;
use crate::mesh::MeshError;
use crate::problem::ProblemError;
use crate::spectrum::SpectrumError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("{0}")]
    Assembly(String),
    #[error("solver did not converge: {} iterations, relative residual {:.3e}", .0.stats.iterations, .0.stats.rel_residual)]
    NotConverged(Box<SolveReport>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
