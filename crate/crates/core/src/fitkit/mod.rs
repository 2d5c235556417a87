//! Parameter estimation: Nelder–Mead, linear and simplex-constrained
//! least squares, and the standard model fits.

mod fits;
pub mod lsq;
mod models;
mod nelder_mead;

pub use fits::{
    crossing_branches, fit_avoided_crossing, fit_by_kind, fit_exp_decay, fit_fringes, fit_gauss_decay,
    fit_lorentzian_psd, fit_power_law, select_decay_model, CrossingFit, DecayShape, FringeFit,
};
pub use models::{fit_model, linear_fit, FitResult, ModelFn, ModelKind, SigmaMethod};
pub use nelder_mead::{nelder_mead, NmOptions, NmResult};
