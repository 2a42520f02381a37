//! Crate-wide error type.

use thiserror::Error;

use crate::dielectric::DielectricError;
use crate::fitting::FitError;
use crate::forces::ForceError;
use crate::io::IoError;
use crate::lifshitz::LifshitzError;
use crate::pipeline::PipelineError;
use crate::quadrature::QuadratureError;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dielectric(#[from] DielectricError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Lifshitz(#[from] LifshitzError),
    #[error(transparent)]
    Force(#[from] ForceError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Broad failure class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Bad parameters or configuration.
    Config,
    /// A numerical method failed to converge.
    Numerical,
    /// Input data could not be read or analyzed.
    Data,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Config => 2,
            Self::Numerical => 3,
            Self::Data => 4,
        }
    }
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Self::Dielectric(DielectricError::Parse { .. }) => Category::Data,
            Self::Dielectric(_) | Self::Force(_) | Self::Synth(SynthError::InvalidParams(_)) => {
                Category::Config
            }
            Self::Quadrature(_) | Self::Fit(_) => Category::Numerical,
            Self::Lifshitz(e) | Self::Synth(SynthError::Lifshitz(e)) => match e {
                LifshitzError::Quadrature { .. } | LifshitzError::NotConverged { .. } => {
                    Category::Numerical
                }
                _ => Category::Config,
            },
            Self::Pipeline(e) | Self::Synth(SynthError::Trace(e)) => match e {
                PipelineError::FitFailed { .. } => Category::Numerical,
                _ => Category::Data,
            },
            Self::Io(IoError::Lifshitz(_) | IoError::Force(_)) => Category::Data,
            Self::Io(_) => Category::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
