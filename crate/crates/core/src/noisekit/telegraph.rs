//! Random telegraph processes and log-uniform fluctuator ensembles.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

/// Symmetric two-state frequency noise ±ν with switching rate γ in each
/// direction. Its autocorrelation is ν²e^(−2γ|τ|), i.e. a Lorentzian PSD
/// with knee at 2γ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Telegrapher {
    pub nu: f64,
    pub gamma: f64,
    /// Initial state, +1 or −1. None draws it from the stationary 50/50
    /// distribution.
    pub state0: Option<i8>,
}

impl Telegrapher {
    pub fn new(nu: f64, gamma: f64) -> Result<Self> {
        let t = Self {
            nu,
            gamma,
            state0: None,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidInput("telegrapher gamma must be > 0".into()));
        }
        if !self.nu.is_finite() {
            return Err(Error::InvalidInput("telegrapher nu must be finite".into()));
        }
        if let Some(s) = self.state0 {
            if s != 1 && s != -1 {
                return Err(Error::InvalidInput("state0 must be +1 or -1".into()));
            }
        }
        Ok(())
    }

    /// Rate of the Lorentzian 2γ₁/(γ₁²+ω²) describing this process.
    pub fn lorentzian_rate(&self) -> f64 {
        2.0 * self.gamma
    }

    fn initial<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.state0 {
            Some(s) => s as f64,
            None => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    /// Switching times in (0, duration] and the initial sign.
    fn switches<R: Rng>(&self, duration: f64, rng: &mut R) -> (f64, Vec<f64>) {
        let s0 = self.initial(rng);
        let exp = Exp::new(self.gamma).expect("gamma validated");
        let mut out = Vec::new();
        let mut t = exp.sample(rng);
        while t <= duration {
            out.push(t);
            t += exp.sample(rng);
        }
        (s0, out)
    }

    /// Adds ν·s(t) sampled at k·dt into `acc`.
    fn add_series<R: Rng>(&self, acc: &mut [f64], dt: f64, rng: &mut R) {
        let duration = dt * acc.len() as f64;
        let (mut s, sw) = self.switches(duration, rng);
        let mut next = 0;
        for (k, a) in acc.iter_mut().enumerate() {
            let t = k as f64 * dt;
            while next < sw.len() && sw[next] <= t {
                s = -s;
                next += 1;
            }
            *a += self.nu * s;
        }
    }

    /// Adds the accumulated phase ∫₀ᵗ ν s dt′ at each (sorted) time.
    fn add_phase<R: Rng>(&self, acc: &mut [f64], times: &[f64], rng: &mut R) {
        let duration = times.last().copied().unwrap_or(0.0);
        let (mut s, sw) = self.switches(duration, rng);
        let mut phi = 0.0;
        let mut t_prev = 0.0;
        let mut next = 0;
        for (a, &t) in acc.iter_mut().zip(times) {
            while next < sw.len() && sw[next] <= t {
                phi += s * (sw[next] - t_prev);
                t_prev = sw[next];
                s = -s;
                next += 1;
            }
            *a += self.nu * (phi + s * (t - t_prev));
        }
    }
}

/// Fluctuators drawn from P(ν,γ) = ξ/(γν²) on [ν_min,∞)×[γ_min,γ_max].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluctuatorEnsemble {
    pub members: Vec<Telegrapher>,
    pub xi: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub nu_min: f64,
    pub seed: u64,
}

pub const DEFAULT_GAMMA_MAX: f64 = 1e5;
pub const DEFAULT_GAMMA_MIN: f64 = 1e-3;

impl FluctuatorEnsemble {
    /// Samples `n` members. ν_min is fixed so that the quasi-static Ramsey
    /// decay of the finite ensemble equals ξ·ln(γmax/γmin): each member
    /// contributes (π/2)ν_min·t to the decay exponent, so
    /// ν_min = 2ξ·ln(γmax/γmin)/(πN).
    pub fn sample(xi: f64, gamma_min: f64, gamma_max: f64, n: usize, seed: u64) -> Result<Self> {
        if !(gamma_min > 0.0 && gamma_min <= gamma_max) {
            return Err(Error::InvalidInput("need 0 < gamma_min <= gamma_max".into()));
        }
        if !(xi >= 0.0) {
            return Err(Error::InvalidInput("xi must be >= 0".into()));
        }
        let ln_r = (gamma_max / gamma_min).ln();
        if xi == 0.0 || n == 0 || ln_r == 0.0 {
            return Ok(Self {
                members: Vec::new(),
                xi,
                gamma_min,
                gamma_max,
                nu_min: 0.0,
                seed,
            });
        }
        let nu_min = 2.0 * xi * ln_r / (std::f64::consts::PI * n as f64);
        let mut rng = seed::rng(seed);
        let members = (0..n)
            .map(|_| {
                let g = (gamma_min.ln() + rng.random::<f64>() * ln_r).exp();
                // inverse CDF of 1/ν² on [ν_min, ∞); U in (0, 1]
                let u = 1.0 - rng.random::<f64>();
                Telegrapher {
                    nu: nu_min / u,
                    gamma: g,
                    state0: None,
                }
            })
            .collect();
        Ok(Self {
            members,
            xi,
            gamma_min,
            gamma_max,
            nu_min,
            seed,
        })
    }

    pub fn ln_ratio(&self) -> f64 {
        (self.gamma_max / self.gamma_min).ln()
    }

    fn max_rate(&self) -> f64 {
        self.members.iter().map(|m| m.gamma).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug)]
pub enum NoiseModel<'a> {
    Single(&'a Telegrapher),
    Ensemble(&'a FluctuatorEnsemble),
}

impl<'a> From<&'a Telegrapher> for NoiseModel<'a> {
    fn from(t: &'a Telegrapher) -> Self {
        NoiseModel::Single(t)
    }
}

impl<'a> From<&'a FluctuatorEnsemble> for NoiseModel<'a> {
    fn from(e: &'a FluctuatorEnsemble) -> Self {
        NoiseModel::Ensemble(e)
    }
}

impl NoiseModel<'_> {
    fn members(&self) -> &[Telegrapher] {
        match self {
            NoiseModel::Single(t) => std::slice::from_ref(*t),
            NoiseModel::Ensemble(e) => &e.members,
        }
    }

    fn max_rate(&self) -> f64 {
        match self {
            NoiseModel::Single(t) => t.gamma,
            NoiseModel::Ensemble(e) => e.max_rate(),
        }
    }
}

/// Frequency offset δω(k·dt), k = 0..⌊duration/dt⌋.
pub fn sample_trajectory<'a>(model: impl Into<NoiseModel<'a>>, duration: f64, dt: f64, seed: u64) -> Result<Vec<f64>> {
    let model = model.into();
    if !(dt > 0.0 && duration >= 0.0) {
        return Err(Error::InvalidInput("need dt > 0 and duration >= 0".into()));
    }
    if dt > 0.1 / model.max_rate() {
        return Err(Error::InvalidInput(format!(
            "dt={dt:e} s too coarse for switching rate {:e} 1/s (need dt <= 0.1/gamma)",
            model.max_rate()
        )));
    }
    for m in model.members() {
        m.validate()?;
    }
    let n = (duration / dt).floor() as usize + 1;
    let mut out = vec![0.0; n];
    let mut rng = seed::rng(seed);
    for m in model.members() {
        m.add_series(&mut out, dt, &mut rng);
    }
    Ok(out)
}

/// Accumulated phase at the given sorted times for one realisation.
pub fn sample_phase<'a>(model: impl Into<NoiseModel<'a>>, times: &[f64], seed: u64) -> Vec<f64> {
    let model = model.into();
    let mut out = vec![0.0; times.len()];
    let mut rng = seed::rng(seed);
    for m in model.members() {
        m.add_phase(&mut out, times, &mut rng);
    }
    out
}

/// One shot of accumulated phase. With `redraw_members` an ensemble first
/// redraws its members from P(ν,γ) using a stream derived from `seed`.
pub fn sample_shot_phase<'a>(
    model: impl Into<NoiseModel<'a>>,
    times: &[f64],
    seed: u64,
    redraw_members: bool,
) -> Vec<f64> {
    match model.into() {
        NoiseModel::Ensemble(e) if redraw_members && e.xi > 0.0 && !e.members.is_empty() => {
            let fresh =
                FluctuatorEnsemble::sample(e.xi, e.gamma_min, e.gamma_max, e.members.len(), seed::derive(seed, 1))
                    .expect("bounds already validated");
            sample_phase(&fresh, times, seed)
        }
        m => sample_phase(m, times, seed),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    Ramsey,
    Echo,
}

/// Monte-Carlo coherence Re⟨e^{iφ(t)}⟩ over `n_traj` trajectories. For the
/// echo the π pulse sits at t/2, so φ_E(t) = 2φ(t/2) − φ(t).
///
/// Every trajectory redraws the switching history. With `redraw_members`
/// an ensemble also redraws its members from P(ν,γ), so the average runs
/// over the defect distribution rather than one frozen configuration; a
/// handful of rare strong members otherwise dominates the decay.
pub fn monte_carlo_coherence<'a>(
    model: impl Into<NoiseModel<'a>>,
    times: &[f64],
    kind: SequenceKind,
    n_traj: usize,
    redraw_members: bool,
    seed: u64,
) -> Vec<f64> {
    let model = model.into();
    let grid: Vec<f64> = match kind {
        SequenceKind::Ramsey => times.to_vec(),
        SequenceKind::Echo => {
            let mut g: Vec<f64> = times.iter().map(|t| t / 2.0).chain(times.iter().copied()).collect();
            g.sort_by(f64::total_cmp);
            g
        }
    };
    let pos = |t: f64| grid.partition_point(|&x| x < t);
    let shots: Vec<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|k| {
            let phi = sample_shot_phase(model, &grid, seed::derive(seed, k as u64), redraw_members);
            times
                .iter()
                .map(|&t| {
                    let p = match kind {
                        SequenceKind::Ramsey => phi[pos(t)],
                        SequenceKind::Echo => 2.0 * phi[pos(t / 2.0)] - phi[pos(t)],
                    };
                    p.cos()
                })
                .collect()
        })
        .collect();
    // Summed in index order so the result does not depend on the pool size.
    let mut sums = vec![0.0; times.len()];
    for s in &shots {
        for (a, b) in sums.iter_mut().zip(s) {
            *a += b;
        }
    }
    sums.into_iter().map(|s| s / n_traj as f64).collect()
}

/// Superposition of telegraphers with log-uniform rates on [γ_lo, γ_hi] and
/// equal amplitudes; the summed PSD approximates 1/f between the bounds.
pub fn one_over_f_ensemble(nu: f64, gamma_lo: f64, gamma_hi: f64, n: usize, seed: u64) -> Result<FluctuatorEnsemble> {
    if !(gamma_lo > 0.0 && gamma_lo < gamma_hi && n > 0) {
        return Err(Error::InvalidInput("need 0 < gamma_lo < gamma_hi and n > 0".into()));
    }
    let mut rng = seed::rng(seed);
    let ln_r = (gamma_hi / gamma_lo).ln();
    let members = (0..n)
        .map(|i| Telegrapher {
            nu,
            // stratified so that every decade is covered
            gamma: (gamma_lo.ln() + (i as f64 + rng.random::<f64>()) / n as f64 * ln_r).exp(),
            state0: None,
        })
        .collect();
    Ok(FluctuatorEnsemble {
        members,
        // equal-amplitude members do not follow ξ/(γν²)
        xi: 0.0,
        gamma_min: gamma_lo,
        gamma_max: gamma_hi,
        nu_min: nu,
        seed,
    })
}
