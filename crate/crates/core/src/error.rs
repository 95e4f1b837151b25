use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::kernel::KernelError;
use crate::linalg::LinalgError;
use crate::mesh::MeshError;
use crate::stepper::StepError;

/// Any failure of a solver pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("reference solution has zero norm")]
    ZeroReference,
    #[error("{0}")]
    Invalid(String),
}
