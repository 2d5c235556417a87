//! Ramsey, Hahn-echo and Carr–Purcell sequences on a mechanical mode.
//!
//! The mode's π/2 pulses and refocusing go through the qubit: a qubit
//! rotation followed by a swap writes the qubit state into the mode, and a
//! refocusing pulse is swap → qubit π → swap.
//!
//! Classical frequency noise on the mode enters as a random rotation
//! exp(−iφN) generated by the total excitation number N. That rotation
//! commutes with the excitation-conserving Lindbladian, so each noisy wait
//! factorises into the deterministic propagator and a phase kick. The
//! state is carried as blocks of fixed N-difference, each tagged with the
//! differences picked up at every wait; a shot then only needs the phases
//! of its noise realisation. [`Evaluation::Exact`] instead integrates every
//! shot with a piecewise-constant detuning on the mode alone.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scan::{scan, Axis, ScanResult};
use super::sequence::Runner;
use crate::noisekit::{sample_shot_phase, NoiseModel};
use crate::{seed, CMat, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoherenceKind {
    Ramsey,
    Echo,
    /// Carr–Purcell with `n` refocusing pulses.
    Cp {
        n: usize,
    },
}

impl CoherenceKind {
    fn refocus_count(self) -> Result<usize> {
        match self {
            CoherenceKind::Ramsey => Ok(0),
            CoherenceKind::Echo => Ok(1),
            CoherenceKind::Cp { n } if n >= 1 => Ok(n),
            CoherenceKind::Cp { .. } => Err(Error::InvalidInput("cp(n) needs n >= 1".into())),
        }
    }
}

/// How a π/2 rotation of the mode is built from qubit operations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechPulse {
    /// Qubit π/2, then a full swap.
    #[default]
    QubitHalfPiSwap,
    /// Qubit π, then a half-duration swap.
    PiHalfSwap,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Evaluation {
    #[default]
    Factorised,
    /// Per-shot integration with the detuning held constant over steps of
    /// at most `dt`.
    Exact { dt: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceConfig {
    pub mech: String,
    pub kind: CoherenceKind,
    /// Total free-evolution times, s.
    pub delays: Vec<f64>,
    /// Offset of the rotating frame from the mode, rad/s; fringes appear at
    /// this frequency.
    pub detuning: f64,
    /// Qubit detuning from the mode while idle, rad/s.
    pub park_detuning: f64,
    pub shots: usize,
    /// Redraw ensemble members for every shot.
    pub redraw_members: bool,
    pub pulse: MechPulse,
    pub evaluation: Evaluation,
    pub seed: u64,
}

impl CoherenceConfig {
    pub fn new(mech: &str, kind: CoherenceKind, delays: Vec<f64>) -> Self {
        Self {
            mech: mech.to_string(),
            kind,
            delays,
            detuning: 0.0,
            park_detuning: crate::units::hz(-150e6),
            shots: 1000,
            redraw_members: true,
            pulse: MechPulse::default(),
            evaluation: Evaluation::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Pulse {
        theta: f64,
    },
    Swap {
        fraction: f64,
    },
    /// Free evolution exposed to the noise.
    Wait(f64),
}

fn build_ops(cfg: &CoherenceConfig, delay: f64) -> Result<(Vec<Op>, Vec<Op>)> {
    let n = cfg.kind.refocus_count()?;
    let (prep, read) = match cfg.pulse {
        MechPulse::QubitHalfPiSwap => (
            vec![Op::Pulse { theta: FRAC_PI_2 }, Op::Swap { fraction: 1.0 }],
            vec![Op::Swap { fraction: 1.0 }, Op::Pulse { theta: FRAC_PI_2 }],
        ),
        MechPulse::PiHalfSwap => (
            vec![Op::Pulse { theta: PI }, Op::Swap { fraction: 0.5 }],
            vec![Op::Swap { fraction: 0.5 }],
        ),
    };
    let mut ops = prep;
    if n == 0 {
        ops.push(Op::Wait(delay));
    } else {
        let unit = delay / n as f64;
        ops.push(Op::Wait(0.5 * unit));
        for k in 0..n {
            ops.extend([
                Op::Swap { fraction: 1.0 },
                Op::Pulse { theta: PI },
                Op::Swap { fraction: 1.0 },
            ]);
            ops.push(Op::Wait(if k + 1 == n { 0.5 * unit } else { unit }));
        }
    }
    Ok((ops, read))
}

/// Readout phases: P(0), P(π/2), P(π), P(3π/2).
const READ_PHASES: [f64; 4] = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];

struct Setup {
    runner: Runner,
    rho0: CMat,
    t_swap: f64,
}

fn setup(dev: &crate::model::DeviceSpec, cfg: &CoherenceConfig, noisy: bool) -> Result<Setup> {
    let d = dev.select(&cfg.mech, false)?;
    let wm = d.mechanics[0].omega_m;
    let mut runner = Runner::new(&d, wm + cfg.detuning)?;
    if noisy {
        runner = runner.without_mech_dephasing();
    }
    runner.set_detuning(None, cfg.park_detuning)?;
    let rho0 = runner.thermal_state()?;
    let t_swap = runner.swap_time(&cfg.mech)?;
    Ok(Setup { runner, rho0, t_swap })
}

fn apply(s: &mut Setup, mech: &str, rho: &mut CMat, op: Op) -> Result<()> {
    match op {
        Op::Pulse { theta } => s.runner.pulse(rho, theta, 0.0),
        Op::Swap { fraction } => s.runner.swap(rho, mech, Some(fraction * s.t_swap)),
        Op::Wait(t) => s.runner.wait(rho, t),
    }
}

fn duration(s: &Setup, op: Op) -> f64 {
    match op {
        Op::Pulse { .. } => 0.0,
        Op::Swap { fraction } => fraction * s.t_swap,
        Op::Wait(t) => t,
    }
}

/// Start and end times of every noisy wait on the sequence clock.
fn wait_windows(s: &Setup, ops: &[Op]) -> Vec<(f64, f64)> {
    let mut t = 0.0;
    let mut out = Vec::new();
    for &op in ops {
        let d = duration(s, op);
        if let Op::Wait(_) = op {
            out.push((t, t + d));
        }
        t += d;
    }
    out
}

struct Branch {
    deltas: Vec<i32>,
    /// Tr(P_e·block) for each readout phase.
    weight: [C64; 4],
}

/// Propagates the N-difference blocks through the sequence.
fn branches(s: &mut Setup, cfg: &CoherenceConfig, ops: &[Op], read: &[Op]) -> Result<Vec<Branch>> {
    let n_tot: Vec<i32> = s.runner.excitation_numbers().iter().map(|v| v.round() as i32).collect();
    let d = n_tot.len();
    let mut live: Vec<(Vec<i32>, CMat)> = vec![(Vec::new(), s.rho0.clone())];
    for &op in ops {
        for (_, m) in live.iter_mut() {
            apply(s, &cfg.mech, m, op)?;
        }
        if let Op::Wait(_) = op {
            let mut next = Vec::new();
            for (tags, m) in live {
                let mut blocks: std::collections::BTreeMap<i32, CMat> = std::collections::BTreeMap::new();
                for j in 0..d {
                    for i in 0..d {
                        let v = m[(i, j)];
                        if v.norm() > 1e-15 {
                            blocks.entry(n_tot[i] - n_tot[j]).or_insert_with(|| CMat::zeros(d, d))[(i, j)] = v;
                        }
                    }
                }
                for (delta, b) in blocks {
                    let mut t = tags.clone();
                    t.push(delta);
                    next.push((t, b));
                }
            }
            live = next;
        }
    }
    let mut out = Vec::with_capacity(live.len());
    for (tags, m) in live {
        let mut weight = [C64::new(0.0, 0.0); 4];
        for (w, &ph) in weight.iter_mut().zip(&READ_PHASES) {
            let mut x = m.clone();
            s.runner.rotate(&mut x, ph);
            for &op in read {
                apply(s, &cfg.mech, &mut x, op)?;
            }
            *w = s.runner.excited_overlap(&x);
        }
        out.push(Branch { deltas: tags, weight });
    }
    Ok(out)
}

/// Shot-averaged P_e at the four readout phases from precomputed branches.
fn factorised(
    br: &[Branch],
    win: &[(f64, f64)],
    cfg: &CoherenceConfig,
    noise: Option<NoiseModel<'_>>,
    point_seed: u64,
) -> [f64; 4] {
    let eval = |phases: &[f64]| {
        let mut p = [0.0; 4];
        for b in br {
            let arg: f64 = b.deltas.iter().zip(phases).map(|(d, ph)| *d as f64 * ph).sum();
            let rot = C64::from_polar(1.0, -arg);
            for (acc, w) in p.iter_mut().zip(&b.weight) {
                *acc += (w * rot).re;
            }
        }
        p
    };
    let Some(model) = noise else {
        return eval(&vec![0.0; win.len()]);
    };
    let mut grid: Vec<f64> = win.iter().flat_map(|(a, b)| [*a, *b]).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let pos = |t: f64| grid.partition_point(|&x| x < t);
    let shots: Vec<[f64; 4]> = (0..cfg.shots)
        .into_par_iter()
        .map(|j| {
            let phi = sample_shot_phase(model, &grid, seed::derive(point_seed, j as u64), cfg.redraw_members);
            let phases: Vec<f64> = win.iter().map(|(a, b)| phi[pos(*b)] - phi[pos(*a)]).collect();
            eval(&phases)
        })
        .collect();
    average(&shots)
}

fn average(shots: &[[f64; 4]]) -> [f64; 4] {
    let mut acc = [0.0; 4];
    for s in shots {
        for (a, v) in acc.iter_mut().zip(s) {
            *a += v;
        }
    }
    acc.map(|a| a / shots.len().max(1) as f64)
}

/// Per-shot integration with the noise as a detuning of the mode only.
fn exact(
    s: &mut Setup,
    cfg: &CoherenceConfig,
    delay: f64,
    noise: NoiseModel<'_>,
    dt: f64,
    point_seed: u64,
) -> Result<[f64; 4]> {
    let (ops, read) = build_ops(cfg, delay)?;
    let win = wait_windows(s, &ops);
    let mut shots = Vec::with_capacity(cfg.shots);
    for j in 0..cfg.shots {
        // Phase samples on a fine grid inside each window, from the same
        // stream the factorised path uses.
        let mut grid: Vec<f64> = Vec::new();
        for &(a, b) in &win {
            let n = ((b - a) / dt).ceil().max(1.0) as usize;
            grid.extend((0..=n).map(|k| a + (b - a) * k as f64 / n as f64));
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let phi = sample_shot_phase(noise, &grid, seed::derive(point_seed, j as u64), cfg.redraw_members);
        let mut rho = s.rho0.clone();
        let mut w = 0;
        for &op in &ops {
            match op {
                Op::Wait(_) => {
                    let (a, b) = win[w];
                    w += 1;
                    let lo = grid.partition_point(|&x| x < a);
                    let hi = grid.partition_point(|&x| x < b);
                    for k in lo..hi {
                        let h = grid[k + 1] - grid[k];
                        let detuning = (phi[k + 1] - phi[k]) / h;
                        s.runner.wait_shifted(&mut rho, h, &cfg.mech, detuning)?;
                    }
                }
                _ => apply(s, &cfg.mech, &mut rho, op)?,
            }
        }
        let mut p = [0.0; 4];
        for (acc, &ph) in p.iter_mut().zip(&READ_PHASES) {
            let mut x = rho.clone();
            s.runner.rotate(&mut x, ph);
            for &op in &read {
                apply(s, &cfg.mech, &mut x, op)?;
            }
            *acc = s.runner.excited_population(&x);
        }
        shots.push(p);
    }
    Ok(average(&shots))
}

/// Coherence scan over `cfg.delays`. Values are P_e at zero readout phase;
/// the `contrast` column is the phase-independent fringe amplitude
/// √((P₀ − P_π)² + (P_{π/2} − P_{3π/2})²).
pub fn coherence_sequence(
    dev: &crate::model::DeviceSpec,
    cfg: &CoherenceConfig,
    noise: Option<NoiseModel<'_>>,
) -> Result<ScanResult> {
    cfg.kind.refocus_count()?;
    if noise.is_some() && cfg.shots == 0 {
        return Err(Error::InvalidInput("noise averaging needs shots >= 1".into()));
    }
    if cfg.delays.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
        return Err(Error::InvalidInput("delays must be non-negative".into()));
    }
    let base = setup(dev, cfg, noise.is_some())?;
    let base = std::sync::Mutex::new(base);
    scan(
        vec![Axis::new("delay_s", cfg.delays.clone())],
        "p_e",
        &["contrast"],
        cfg.seed,
        |x, point_seed| {
            let p = match (cfg.evaluation, noise) {
                (Evaluation::Exact { dt }, Some(n)) => {
                    let mut s = base.lock().expect("setup lock");
                    exact(&mut s, cfg, x[0], n, dt, point_seed)?
                }
                _ => {
                    // The lock is released before the shot loop fans out.
                    let (br, win) = {
                        let mut s = base.lock().expect("setup lock");
                        let (ops, read) = build_ops(cfg, x[0])?;
                        let win = wait_windows(&s, &ops);
                        (branches(&mut s, cfg, &ops, &read)?, win)
                    };
                    factorised(&br, &win, cfg, noise, point_seed)
                }
            };
            Ok(vec![p[0], ((p[0] - p[2]).powi(2) + (p[1] - p[3]).powi(2)).sqrt()])
        },
    )
}
