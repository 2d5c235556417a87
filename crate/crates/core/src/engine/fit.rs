use serde::{Deserialize, Serialize};

use super::evolve::Trajectory;
use crate::fitkit::fit_exp_decay;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub tau: f64,
    pub tau_sigma: f64,
    pub amplitude: f64,
    pub amplitude_sigma: f64,
    pub residual: f64,
}

/// Fits a·e^(−t/τ) to the named observable (the first one if `label` is None).
pub fn decay_rate_fit(traj: &Trajectory, label: Option<&str>) -> Result<DecayFit> {
    let y = match label {
        Some(l) => traj.series(l)?,
        None => traj
            .values
            .first()
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::InvalidInput("trajectory has no observables".into()))?,
    };
    fit_decay_series(&traj.times, y)
}

pub fn fit_decay_series(t: &[f64], y: &[f64]) -> Result<DecayFit> {
    let f = fit_exp_decay(t, y, false)?;
    let p = |n: &str| f.get(n).unwrap_or(f64::NAN);
    let s = |n: &str| f.sigma_of(n).unwrap_or(f64::NAN);
    Ok(DecayFit {
        tau: p("tau"),
        tau_sigma: s("tau"),
        amplitude: p("amplitude"),
        amplitude_sigma: s("amplitude"),
        residual: f.residual,
    })
}
