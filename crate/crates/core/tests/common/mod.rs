//! Property checks shared by the proptest suite and the acceptance run.

#![allow(dead_code)]

use cqad::engine::{evolve_with, EvolveOptions, LindbladProblem, Method, Segment};
use cqad::experiments::{scan, Axis, ScanResult};
use cqad::model::{build_hamiltonian, collapse_ops, device_space, excitation_number, DeviceSpec, RotatingFrame};
use cqad::qops::DensityMatrix;
use cqad::units::hz;
use cqad::{CMat, C64};
use rand::Rng;

/// Knobs for a randomised qubit–mode device.
#[derive(Clone, Copy, Debug)]
pub struct DeviceCase {
    pub fock: usize,
    pub levels: usize,
    pub g_hz: f64,
    pub detuning_hz: f64,
    pub qubit_t1: f64,
    /// T2* as a fraction of 2·T1.
    pub t2_fraction: f64,
    pub mech_t1: f64,
    pub qubit_pop: f64,
    pub mech_pop: f64,
    pub duration: f64,
    pub state_seed: u64,
}

impl DeviceCase {
    pub fn random(rng: &mut impl Rng) -> Self {
        Self {
            fock: rng.random_range(2..=4),
            levels: rng.random_range(2..=3),
            g_hz: rng.random_range(20e3..600e3),
            detuning_hz: rng.random_range(-2e6..2e6),
            qubit_t1: rng.random_range(0.3e-6..5e-6),
            t2_fraction: rng.random_range(0.2..1.0),
            mech_t1: rng.random_range(5e-6..1e-3),
            qubit_pop: rng.random_range(0.0..0.3),
            mech_pop: rng.random_range(0.0..0.5),
            duration: rng.random_range(0.05e-6..3e-6),
            state_seed: rng.random(),
        }
    }

    pub fn device(&self) -> DeviceSpec {
        let mut d = DeviceSpec::reference().select("A", false).expect("mode A");
        d.fock_dim = self.fock;
        d.transmon.levels = self.levels;
        d.transmon.t1 = self.qubit_t1;
        d.transmon.t2_star = 2.0 * self.qubit_t1 * self.t2_fraction;
        d.transmon.thermal_pop = self.qubit_pop;
        let m = &mut d.mechanics[0];
        m.g0 = hz(self.g_hz) / d.v_dc;
        m.t1 = self.mech_t1;
        m.t2_star = None;
        m.qubit_t1 = None;
        m.qubit_t2_star = None;
        m.thermal_pop = self.mech_pop;
        d.transmon.omega_q = m.omega_m + hz(self.detuning_hz);
        d
    }
}

/// Random full-rank density matrix ρ = AA†/Tr(AA†) with Gaussian A.
pub fn random_state(dim: usize, seed: u64) -> CMat {
    let mut rng = cqad::seed::rng(seed);
    let normal = rand_distr::StandardNormal;
    let a = CMat::from_fn(dim, dim, |_, _| C64::new(rng.sample(normal), rng.sample(normal)));
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

pub fn random_pure_state(dim: usize, seed: u64) -> CMat {
    let mut rng = cqad::seed::rng(seed);
    let normal = rand_distr::StandardNormal;
    let psi = cqad::CVec::from_fn(dim, |_, _| C64::new(rng.sample(normal), rng.sample(normal)));
    let psi = psi.normalize();
    &psi * psi.adjoint()
}

fn problem(case: &DeviceCase, closed: bool, pure: bool) -> Result<(LindbladProblem, DeviceSpec), String> {
    let d = case.device();
    let space = device_space(&d).map_err(|e| e.to_string())?;
    let h = build_hamiltonian(&d, &RotatingFrame::at(d.mechanics[0].omega_m)).map_err(|e| e.to_string())?;
    let rho = if pure {
        random_pure_state(space.dim(), case.state_seed)
    } else {
        random_state(space.dim(), case.state_seed)
    };
    let mut p = LindbladProblem::new(DensityMatrix::new(space.clone(), rho).map_err(|e| e.to_string())?);
    p.segments.push(Segment::new(case.duration, h));
    if !closed {
        p.collapse = collapse_ops(&d).map_err(|e| e.to_string())?;
    }
    p.observables = vec![(
        "n_exc".into(),
        excitation_number(&d, &space).map_err(|e| e.to_string())?,
    )];
    p.sample_times = (0..=8).map(|k| case.duration * k as f64 / 8.0).collect();
    Ok((p, d))
}

fn options(method: Method) -> EvolveOptions {
    EvolveOptions {
        method,
        ..EvolveOptions::default()
    }
}

/// Open evolution keeps ρ a density matrix: unit trace, Hermitian, PSD.
pub fn check_open_evolution(case: &DeviceCase, method: Method) -> Result<(), String> {
    let (p, _) = problem(case, false, false)?;
    let tr = evolve_with(&p, &options(method)).map_err(|e| e.to_string())?;
    let rho = &tr.final_state;
    let m = rho.matrix();
    let trace = rho.trace();
    if (trace - 1.0).abs() > 1e-9 {
        return Err(format!("trace drifted to {trace}"));
    }
    let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > 1e-10 {
        return Err(format!("Hermiticity lost: {herm:e}"));
    }
    let lo = rho.min_eigenvalue();
    if lo < -1e-9 {
        return Err(format!("negative eigenvalue {lo:e}"));
    }
    Ok(())
}

/// Without dissipation the exchange Hamiltonian conserves the total
/// excitation number and the purity of the state.
pub fn check_closed_evolution(case: &DeviceCase, method: Method) -> Result<(), String> {
    let (p, _) = problem(case, true, true)?;
    // The f level rotates at ~2α, thousands of radians over the run; the
    // default tolerance would let the purity wander at the 1e-6 level.
    let opts = EvolveOptions {
        rtol: 1e-11,
        atol: 1e-13,
        ..options(method)
    };
    let tr = evolve_with(&p, &opts).map_err(|e| e.to_string())?;
    let n = tr.series("n_exc").map_err(|e| e.to_string())?;
    let spread = n.iter().map(|v| (v - n[0]).abs()).fold(0.0, f64::max);
    if spread > 1e-7 * n[0].abs().max(1.0) {
        return Err(format!("excitation number moved by {spread:e}"));
    }
    let purity = tr.final_state.purity();
    if (purity - 1.0).abs() > 1e-7 {
        return Err(format!("purity {purity}"));
    }
    Ok(())
}

fn seeded_scan(master: u64, n: usize) -> ScanResult {
    scan(
        vec![Axis::linspace("x", 0.0, 1.0, n), Axis::new("y", vec![1.0, 2.0, 3.0])],
        "v",
        &["w"],
        master,
        |x, s| {
            let mut rng = cqad::seed::rng(s);
            let u: f64 = rng.random();
            Ok(vec![x[0] * u + x[1], u])
        },
    )
    .expect("scan")
}

/// Same grid and master seed on pools of different size give equal results.
pub fn check_scan_determinism(master: u64, n: usize, workers: &[usize]) -> Result<(), String> {
    let runs: Vec<ScanResult> = workers
        .iter()
        .map(|&w| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .expect("pool")
                .install(|| seeded_scan(master, n))
        })
        .collect();
    for (w, r) in workers.iter().zip(&runs).skip(1) {
        if r != &runs[0] || r.to_csv() != runs[0].to_csv() {
            return Err(format!("{w} workers differ from {}", workers[0]));
        }
    }
    Ok(())
}
