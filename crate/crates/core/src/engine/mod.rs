//! Lindblad time evolution and steady states.

mod dopri;
mod evolve;
mod fit;
mod generator;
mod steady;

pub use evolve::{
    evolve, evolve_with, propagate, propagate_batch, Drive, EvolveOptions, LindbladProblem, Method, Segment,
    Trajectory, CLIP_TOL, TRACE_TOL,
};
pub use fit::{decay_rate_fit, fit_decay_series, DecayFit};
pub use generator::{unitary_superop, unvectorize, vectorize, Envelope, Generator};
pub use steady::{steady_state, steady_state_fast, UNIQUENESS_RATIO};

#[cfg(test)]
mod tests;
