//! Piecewise master-equation evolution.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dopri::{Dopri, StepControl};
use super::generator::{unvectorize, vectorize, Envelope, Generator};
use crate::model::CollapseOp;
use crate::qops::linalg::{expm, hermitian_deviation, trace};
use crate::qops::{DensityMatrix, Operator};
use crate::{CMat, Error, Result, C64};

/// Positivity violations smaller than this are clipped, larger ones abort.
pub const CLIP_TOL: f64 = 1e-8;
/// Allowed trace drift per segment.
pub const TRACE_TOL: f64 = 1e-8;
const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exponential propagation when the segment is time independent and the
    /// Liouvillian is small enough, otherwise Runge–Kutta.
    #[default]
    Auto,
    RungeKutta,
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub method: Method,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            method: Method::Auto,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Drive {
    pub operator: Operator,
    /// Peak amplitude multiplying `operator`, rad/s.
    pub amplitude: f64,
    pub envelope: Envelope,
}

#[derive(Clone, Debug)]
pub struct Segment {
    pub duration: f64,
    pub hamiltonian: Operator,
    pub drive: Option<Drive>,
    /// Replaces the problem-wide collapse list for this segment.
    pub collapse: Option<Vec<CollapseOp>>,
}

impl Segment {
    pub fn new(duration: f64, hamiltonian: Operator) -> Self {
        Self {
            duration,
            hamiltonian,
            drive: None,
            collapse: None,
        }
    }

    pub fn with_drive(mut self, operator: Operator, amplitude: f64, envelope: Envelope) -> Self {
        self.drive = Some(Drive {
            operator,
            amplitude,
            envelope,
        });
        self
    }

    pub fn with_collapse(mut self, collapse: Vec<CollapseOp>) -> Self {
        self.collapse = Some(collapse);
        self
    }
}

#[derive(Clone, Debug)]
pub struct LindbladProblem {
    pub segments: Vec<Segment>,
    pub collapse: Vec<CollapseOp>,
    pub rho0: DensityMatrix,
    pub rtol: f64,
    pub atol: f64,
    pub observables: Vec<(String, Operator)>,
    /// Absolute times from the start of the first segment.
    pub sample_times: Vec<f64>,
    pub method: Method,
}

impl LindbladProblem {
    pub fn new(rho0: DensityMatrix) -> Self {
        Self {
            segments: Vec::new(),
            collapse: Vec::new(),
            rho0,
            rtol: 1e-8,
            atol: 1e-10,
            observables: Vec::new(),
            sample_times: Vec::new(),
            method: Method::Auto,
        }
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    fn validate(&self) -> Result<()> {
        let space = self.rho0.space();
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(Error::InvalidInput(format!("segment {i}: duration must be > 0")));
            }
            if s.hamiltonian.space() != space {
                return Err(Error::SpaceMismatch);
            }
            if let Some(d) = &s.drive {
                if d.operator.space() != space {
                    return Err(Error::SpaceMismatch);
                }
            }
        }
        let all_c = self
            .collapse
            .iter()
            .chain(self.segments.iter().flat_map(|s| s.collapse.iter().flatten()));
        for c in all_c {
            if c.op.space() != space {
                return Err(Error::SpaceMismatch);
            }
            if !(c.rate >= 0.0 && c.rate.is_finite()) {
                return Err(Error::InvalidInput(format!("collapse '{}' has invalid rate", c.label)));
            }
        }
        for (l, o) in &self.observables {
            if o.space() != space {
                return Err(Error::InvalidInput(format!("observable '{l}' lives on another space")));
            }
        }
        let total = self.total_time();
        let mut prev = f64::NEG_INFINITY;
        for &t in &self.sample_times {
            if t < prev || t < 0.0 || t > total * (1.0 + 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "sample time {t:e} outside [0, {total:e}] or unsorted"
                )));
            }
            prev = t;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// values[j][k]: observable j at times[k].
    pub values: Vec<Vec<f64>>,
    pub final_state: DensityMatrix,
}

impl Trajectory {
    pub fn series(&self, label: &str) -> Result<&[f64]> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|j| self.values[j].as_slice())
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "time_s")?;
        for l in &self.labels {
            write!(w, ",{l}")?;
        }
        writeln!(w)?;
        for (k, t) in self.times.iter().enumerate() {
            write!(w, "{t:e}")?;
            for v in &self.values {
                write!(w, ",{:e}", v[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }
}

fn check_hermitian(h: &CMat, what: &str) -> Result<()> {
    let dev = hermitian_deviation(h);
    let scale = h.iter().map(|v| v.norm()).fold(1.0, f64::max);
    if dev > HERMITIAN_TOL * scale {
        log::debug!("{what} is not Hermitian");
        return Err(Error::NonHermitian(dev));
    }
    Ok(())
}

fn expect_all(rho: &CMat, obs: &[&CMat]) -> Vec<f64> {
    obs.iter().map(|o| crate::qops::trace_product(o, rho).re).collect()
}

/// Propagates `rho` under one generator for `duration`, recording the
/// observables at the given offsets (sorted, within [0, duration]).
pub fn propagate(
    gen: &Generator,
    rho: &CMat,
    duration: f64,
    sample_offsets: &[f64],
    observables: &[&CMat],
    opts: &EvolveOptions,
) -> Result<(CMat, Vec<Vec<f64>>)> {
    let d = rho.nrows();
    let tr0 = trace(rho).re;
    let use_exp = match opts.method {
        Method::Exponential => {
            if gen.is_time_dependent() {
                return Err(Error::InvalidInput(
                    "exponential propagation needs a time-independent segment".into(),
                ));
            }
            true
        }
        Method::RungeKutta => false,
        Method::Auto => prefer_exponential(gen, duration, sample_offsets.len()),
    };
    let mut samples = Vec::with_capacity(sample_offsets.len());
    let mut y = rho.clone();
    if use_exp {
        let l = gen.liouvillian();
        let mut cache: HashMap<u64, CMat> = HashMap::new();
        let mut v = vectorize(&y);
        let mut t = 0.0;
        let mut step = |v: &mut crate::CVec, dt: f64| {
            if dt <= 0.0 {
                return;
            }
            // Quantise so equal spacings share a propagator.
            let key = (dt * 1e15).round() as u64;
            let p = cache.entry(key).or_insert_with(|| expm(&(&l * C64::new(dt, 0.0))));
            *v = &*p * &*v;
        };
        for &ts in sample_offsets {
            step(&mut v, ts - t);
            t = ts;
            samples.push(expect_all(&unvectorize(&v, d), observables));
        }
        step(&mut v, duration - t);
        y = unvectorize(&v, d);
    } else {
        let mut dp = Dopri::new(
            gen,
            StepControl {
                rtol: opts.rtol,
                atol: opts.atol,
                max_steps: opts.max_steps,
            },
        );
        let mut t = 0.0;
        for &ts in sample_offsets {
            dp.advance(&mut y, t, ts)?;
            t = ts;
            samples.push(expect_all(&y, observables));
        }
        dp.advance(&mut y, t, duration)?;
        log::trace!(
            "segment of {duration:e} s: {} steps, {} rejected",
            dp.steps,
            dp.rejected
        );
    }
    let drift = (trace(&y).re - tr0).abs();
    if drift > TRACE_TOL {
        return Err(Error::Integration(format!(
            "trace drifted by {drift:.3e} over a segment of {duration:e} s"
        )));
    }
    Ok((y, samples))
}

/// Propagates several initial states under one generator, returning
/// `Tr(obs·ρ)` at the sample times for each. Small time-independent
/// problems share one propagator per distinct interval; otherwise each state
/// goes through [`propagate`].
pub fn propagate_batch(
    gen: &Generator,
    states: &[CMat],
    times: &[f64],
    obs: &CMat,
    opts: &EvolveOptions,
) -> Result<Vec<Vec<f64>>> {
    let d = gen.dim();
    let end = times.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let shared = match opts.method {
        Method::RungeKutta => false,
        Method::Exponential => true,
        Method::Auto => !gen.is_time_dependent() && prefer_exponential(gen, end, times.len()),
    };
    if !shared || gen.is_time_dependent() {
        return states
            .par_iter()
            .map(|s| {
                Ok(propagate(gen, s, end, times, &[obs], opts)?
                    .1
                    .into_iter()
                    .map(|v| v[0])
                    .collect())
            })
            .collect();
    }
    let l = gen.liouvillian();
    let mut cols = CMat::zeros(d * d, states.len());
    for (j, s) in states.iter().enumerate() {
        if s.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: s.nrows(),
            });
        }
        cols.set_column(j, &vectorize(s));
    }
    // Tr(O ρ) = vec(Oᵀ)·vec(ρ)
    let probe = vectorize(&obs.transpose());
    let mut out = vec![Vec::with_capacity(times.len()); states.len()];
    let mut cache: Vec<(f64, CMat)> = Vec::new();
    let mut t = 0.0;
    for &ts in times {
        let dt = ts - t;
        if dt > 0.0 {
            let idx = match cache.iter().position(|(h, _)| (h - dt).abs() <= 1e-12 * dt) {
                Some(i) => i,
                None => {
                    cache.push((dt, expm(&(&l * C64::new(dt, 0.0)))));
                    cache.len() - 1
                }
            };
            cols = &cache[idx].1 * &cols;
        }
        t = ts;
        for (j, o) in out.iter_mut().enumerate() {
            o.push(probe.dot(&cols.column(j)).re);
        }
    }
    Ok(out)
}

/// Cost model: one Padé expm on the d²×d² Liouvillian versus the number of
/// RK steps needed to resolve the fastest rate.
fn prefer_exponential(gen: &Generator, duration: f64, n_samples: usize) -> bool {
    if gen.is_time_dependent() {
        return false;
    }
    let d = gen.dim() as f64;
    let n = d * d;
    if n > 900.0 {
        return false;
    }
    let steps = (duration * gen.rate_scale() / 2.0).max(10.0);
    let rk_cost = steps * 7.0 * 2.0 * d * d * d;
    let distinct = (n_samples.min(3) + 1) as f64;
    let exp_cost = distinct * 14.0 * n * n * n + (n_samples as f64 + 1.0) * n * n;
    exp_cost < rk_cost
}

fn finish_state(space: &crate::qops::CompositeSpace, y: CMat) -> Result<DensityMatrix> {
    let mut st = DensityMatrix::new_unchecked(space.clone(), y)?;
    let min = st.clip_positive(CLIP_TOL)?;
    if min < 0.0 {
        log::warn!("clipped negative eigenvalue {min:.2e}");
    }
    Ok(st)
}

pub fn evolve(problem: &LindbladProblem) -> Result<Trajectory> {
    evolve_with(
        problem,
        &EvolveOptions {
            rtol: problem.rtol,
            atol: problem.atol,
            method: problem.method,
            ..EvolveOptions::default()
        },
    )
}

pub fn evolve_with(problem: &LindbladProblem, opts: &EvolveOptions) -> Result<Trajectory> {
    problem.validate()?;
    let space = problem.rho0.space().clone();
    let obs: Vec<&CMat> = problem.observables.iter().map(|(_, o)| o.matrix()).collect();
    let mut y = problem.rho0.matrix().clone();
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(problem.sample_times.len()); obs.len()];
    let mut t0 = 0.0;
    let mut next = 0;
    let n_seg = problem.segments.len();
    for (si, seg) in problem.segments.iter().enumerate() {
        check_hermitian(seg.hamiltonian.matrix(), "segment Hamiltonian")?;
        if let Some(d) = &seg.drive {
            check_hermitian(d.operator.matrix(), "drive operator")?;
        }
        let cl = seg.collapse.as_ref().unwrap_or(&problem.collapse);
        let pairs: Vec<(&CMat, f64)> = cl.iter().map(|c| (c.op.matrix(), c.rate)).collect();
        let gen = Generator::new(
            seg.hamiltonian.matrix(),
            seg.drive
                .as_ref()
                .map(|d| (d.operator.matrix(), d.amplitude, d.envelope)),
            &pairs,
        );
        let t1 = t0 + seg.duration;
        let last = si + 1 == n_seg;
        let mut offs = Vec::new();
        while next < problem.sample_times.len() {
            let ts = problem.sample_times[next];
            let inside = if last { ts <= t1 * (1.0 + 1e-12) } else { ts < t1 };
            if !inside {
                break;
            }
            offs.push((ts - t0).clamp(0.0, seg.duration));
            next += 1;
        }
        let (ynew, s) = propagate(&gen, &y, seg.duration, &offs, &obs, opts)?;
        for row in s {
            for (j, v) in row.into_iter().enumerate() {
                values[j].push(v);
            }
        }
        y = finish_state(&space, ynew)?.into_matrix();
        t0 = t1;
    }
    let final_state = finish_state(&space, y)?;
    // Samples at t=0 with no segments at all.
    while next < problem.sample_times.len() {
        for (j, o) in obs.iter().enumerate() {
            values[j].push(final_state.expect(&Operator::new(space.clone(), (*o).clone())?)?.re);
        }
        next += 1;
    }
    Ok(Trajectory {
        times: problem.sample_times.clone(),
        labels: problem.observables.iter().map(|(l, _)| l.clone()).collect(),
        values,
        final_state,
    })
}
