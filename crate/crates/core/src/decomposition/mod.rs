//! Generalized Fourier transforms for the operator family: the continuous
//! line transform against Baker-Akhiezer eigenfunctions with the spectral
//! weight, the discrete Bloch series at a fixed unitary multiplier, the
//! kernel split into classical and correction parts, and the singular-class
//! decompositions through the indefinite inner product.

mod continuous;
mod discrete;
mod phi;

pub use continuous::{
    forward_continuous, kernel_split_continuous, reconstruct_continuous, ContinuousModel,
    KernelSplit, LameContinuum,
};
pub use discrete::{
    decaying_reconstruct, kernel_split_discrete, singular_reconstruct, sinh_bound_state,
    DiscreteMode, DiscreteTransform, SingularDecomposition,
};
pub use phi::{phi1, AsymptoticCoefficient};
