use std::f64::consts::PI;

use super::*;
use crate::model::CollapseOp;
use crate::qops::{annihilation, embed, number, CompositeSpace, DensityMatrix, Operator};
use crate::{CMat, C64};

fn qm_space(nm: usize) -> CompositeSpace {
    CompositeSpace::new([("q", 2), ("m", nm)]).unwrap()
}

fn lowering(space: &CompositeSpace, label: &str) -> Operator {
    embed(&annihilation(space.dim_of(label).unwrap()).unwrap(), space, label).unwrap()
}

fn num(space: &CompositeSpace, label: &str) -> Operator {
    embed(&number(space.dim_of(label).unwrap()).unwrap(), space, label).unwrap()
}

fn jc(space: &CompositeSpace, g: f64) -> Operator {
    let a = lowering(space, "q");
    let b = lowering(space, "m");
    (&a.dagger() * &b + &a * &b.dagger()).scale(g)
}

fn collapse(label: &str, op: Operator, rate: f64) -> CollapseOp {
    CollapseOp {
        label: label.into(),
        op,
        rate,
    }
}

#[test]
fn jc_swap_follows_cos_squared() {
    let g = 2.0 * PI * 230e3;
    let sp = qm_space(3);
    let rho0 = DensityMatrix::basis(&sp, &[1, 0]).unwrap();
    let mut p = LindbladProblem::new(rho0);
    let t_swap = PI / (2.0 * g);
    assert!((t_swap - 1.087e-6).abs() < 1e-9);
    p.segments.push(Segment::new(2.0 * t_swap, jc(&sp, g)));
    p.observables.push(("pe".into(), num(&sp, "q")));
    p.sample_times = (0..=40).map(|k| k as f64 * 2.0 * t_swap / 40.0).collect();
    for m in [Method::RungeKutta, Method::Exponential] {
        p.method = m;
        let tr = evolve(&p).unwrap();
        for (t, v) in tr.times.iter().zip(tr.series("pe").unwrap()) {
            assert!((v - (g * t).cos().powi(2)).abs() < 1e-7, "{m:?} t={t}");
        }
        assert!(tr.series("pe").unwrap()[20] < 1e-7);
    }
}

#[test]
fn qubit_decay_is_exponential() {
    let t1 = 1.7e-6;
    let sp = CompositeSpace::single("q", 2).unwrap();
    let mut p = LindbladProblem::new(DensityMatrix::basis(&sp, &[1]).unwrap());
    p.segments.push(Segment::new(5e-6, Operator::zeros(&sp)));
    p.collapse.push(collapse("t1", lowering(&sp, "q"), 1.0 / t1));
    p.observables.push(("pe".into(), num(&sp, "q")));
    p.sample_times = (0..=25).map(|k| k as f64 * 0.2e-6).collect();
    p.method = Method::RungeKutta;
    let tr = evolve(&p).unwrap();
    for (t, v) in tr.times.iter().zip(&tr.values[0]) {
        assert!((v - (-t / t1).exp()).abs() < 1e-7);
    }
    let f = decay_rate_fit(&tr, Some("pe")).unwrap();
    assert!((f.tau / t1 - 1.0).abs() < 1e-5);
}

#[test]
fn damped_mode_thermalises() {
    let nth = 0.02;
    let t1 = 20e-3;
    let sp = CompositeSpace::single("m", 4).unwrap();
    let b = lowering(&sp, "m");
    let cl = vec![
        collapse("down", b.clone(), (1.0 + nth) / t1),
        collapse("up", b.dagger(), nth / t1),
    ];
    let h = num(&sp, "m").scale(2.0 * PI * 1e3);
    let mut p = LindbladProblem::new(DensityMatrix::basis(&sp, &[0]).unwrap());
    p.segments.push(Segment::new(0.5, h.clone()));
    p.collapse = cl.clone();
    p.observables.push(("n".into(), num(&sp, "m")));
    p.sample_times = vec![0.5];
    let tr = evolve(&p).unwrap();
    assert!((tr.values[0][0] - nth).abs() < 1e-4);

    let ss = steady_state(&h, &cl).unwrap();
    let want = crate::qops::thermal(4, nth).unwrap();
    assert!((ss.matrix() - want).norm() < 1e-9);
    let fast = steady_state_fast(&h, &cl).unwrap();
    assert!((fast.matrix() - ss.matrix()).norm() < 1e-9);
}

#[test]
fn closed_system_without_dissipation_is_ambiguous() {
    let sp = qm_space(2);
    let e = steady_state(&jc(&sp, 1e6), &[]);
    assert!(matches!(e, Err(crate::Error::AmbiguousSteadyState { .. })));
}

/// Two-level Bloch steady state, solved by hand.
fn bloch_pe(delta: f64, omega: f64, g1: f64, g2: f64) -> f64 {
    let s = omega * omega * g2 / g1;
    0.5 * s / (delta * delta + g2 * g2 + s)
}

#[test]
fn driven_qubit_lorentzian() {
    let g1 = 1.0 / 1.7e-6;
    let gphi = 3e5;
    let g2 = g1 / 2.0 + gphi;
    let omega = 2.0 * PI * 50e3;
    let sp = CompositeSpace::single("q", 2).unwrap();
    let a = lowering(&sp, "q");
    let n = num(&sp, "q");
    let cl = vec![collapse("t1", a.clone(), g1), collapse("phi", n.clone(), 2.0 * gphi)];
    let hw = (g2 * g2 + omega * omega * g2 / g1).sqrt();
    for k in -10..=10 {
        let delta = k as f64 * 0.3 * hw;
        let h = n.scale(delta) + (&a + &a.dagger()).scale(omega / 2.0);
        let pe = steady_state(&h, &cl).unwrap().population("q", 1).unwrap();
        assert!((pe - bloch_pe(delta, omega, g1, g2)).abs() < 1e-10);
    }
    // half maximum sits at the predicted half-width
    let pe0 = bloch_pe(0.0, omega, g1, g2);
    assert!((bloch_pe(hw, omega, g1, g2) - pe0 / 2.0).abs() < 1e-15);
}

#[test]
fn probe_spectrum_splits_at_crossing() {
    // qubit resonant with a defect, mechanics far away: the two peaks sit at
    // the eigenvalues of the one-excitation block.
    let g_tls = 2.0 * PI * 1e6;
    let g_m = 2.0 * PI * 0.2e6;
    let sp = CompositeSpace::new([("q", 2), ("m", 2), ("t", 2)]).unwrap();
    let (a, b, s) = (lowering(&sp, "q"), lowering(&sp, "m"), lowering(&sp, "t"));
    let det_m = 2.0 * PI * 20e6;
    let coupling =
        (&a.dagger() * &b + &a * &b.dagger()).scale(g_m) + (&a.dagger() * &s + &a * &s.dagger()).scale(g_tls);
    let cl = vec![
        collapse("q", a.clone(), 1.0 / 1.7e-6),
        collapse("t", s.clone(), 1.0 / 0.5e-6),
        collapse("m", b.clone(), 1.0 / 20e-3),
    ];
    let omega = 2.0 * PI * 20e3;
    let probe: Vec<f64> = (-300..=300).map(|k| 2.0 * PI * k as f64 * 1e4).collect();
    let pe: Vec<f64> = probe
        .iter()
        .map(|&wp| {
            let h = num(&sp, "q").scale(-wp)
                + num(&sp, "m").scale(det_m - wp)
                + num(&sp, "t").scale(-wp)
                + coupling.clone()
                + (&a + &a.dagger()).scale(omega / 2.0);
            steady_state_fast(&h, &cl).unwrap().population("q", 1).unwrap()
        })
        .collect();
    let mut peaks: Vec<f64> = (1..pe.len() - 1)
        .filter(|&i| pe[i] > pe[i - 1] && pe[i] >= pe[i + 1] && pe[i] > 0.2 * pe.iter().cloned().fold(0.0, f64::max))
        .map(|i| probe[i])
        .collect();
    peaks.sort_by(f64::total_cmp);
    assert_eq!(peaks.len(), 2, "{peaks:?}");
    let block = nalgebra::Matrix3::new(0.0, g_m, g_tls, g_m, det_m, 0.0, g_tls, 0.0, 0.0);
    let mut ev: Vec<f64> = block.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    assert!((peaks[0] - ev[0]).abs() < 2.0 * PI * 20e3);
    assert!((peaks[1] - ev[1]).abs() < 2.0 * PI * 20e3);
    assert!(((peaks[1] - peaks[0]) / (2.0 * g_tls) - 1.0).abs() < 0.03);
}

/// Superoperator assembled column by column from its action on E_ij.
fn brute_liouvillian(h: &CMat, ls: &[(CMat, f64)]) -> CMat {
    let d = h.nrows();
    let mut out = CMat::zeros(d * d, d * d);
    let i = C64::new(0.0, 1.0);
    for c in 0..d {
        for r in 0..d {
            let mut e = CMat::zeros(d, d);
            e[(r, c)] = C64::new(1.0, 0.0);
            let mut v = -(h * &e - &e * h) * i;
            for (l, g) in ls {
                let ld = l.adjoint();
                v += (l * &e * &ld - (&ld * l * &e + &e * &ld * l) * C64::new(0.5, 0.0)) * C64::new(*g, 0.0);
            }
            for (k, x) in v.as_slice().iter().enumerate() {
                out[(k, c * d + r)] = *x;
            }
        }
    }
    out
}

#[test]
fn rk_matches_liouvillian_exponential() {
    let sp = qm_space(3);
    let g = 2.0 * PI * 200e3;
    let h = jc(&sp, g) + num(&sp, "q").scale(2.0 * PI * 150e3);
    let a = lowering(&sp, "q");
    let b = lowering(&sp, "m");
    let cl = vec![
        collapse("q", a.clone(), 1.0 / 1.7e-6),
        collapse("qphi", num(&sp, "q"), 4e5),
        collapse("m", b.clone(), 1e4),
        collapse("mup", b.dagger(), 2e3),
    ];
    let rho0 = DensityMatrix::basis(&sp, &[1, 1]).unwrap();
    let mut p = LindbladProblem::new(rho0.clone());
    let total = 3e-6;
    p.segments.push(Segment::new(total, h.clone()));
    p.collapse = cl.clone();
    p.method = Method::RungeKutta;
    let tr = evolve(&p).unwrap();
    let pairs: Vec<(CMat, f64)> = cl.iter().map(|c| (c.op.matrix().clone(), c.rate)).collect();
    let l = brute_liouvillian(h.matrix(), &pairs);
    let prop = (l * C64::new(total, 0.0)).exp();
    let v = prop * vectorize(rho0.matrix());
    let want = unvectorize(&v, 6);
    assert!((tr.final_state.matrix() - want).camax() < 1e-6);
}

#[test]
fn closed_evolution_conserves_trace_and_purity() {
    let sp = qm_space(4);
    let h = jc(&sp, 2.0 * PI * 230e3) + num(&sp, "m").scale(2.0 * PI * 90e3);
    let psi = {
        let mut v = crate::CVec::zeros(8);
        v[1] = C64::new(0.6, 0.0);
        v[4] = C64::new(0.0, 0.8);
        v
    };
    let rho0 = DensityMatrix::from_pure(sp.clone(), &psi).unwrap();
    let mut p = LindbladProblem::new(rho0);
    for k in 0..3 {
        p.segments.push(Segment::new(0.7e-6 * (k + 1) as f64, h.clone()));
    }
    p.method = Method::RungeKutta;
    let tr = evolve(&p).unwrap();
    assert!((tr.final_state.trace() - 1.0).abs() < 1e-8);
    let pu = tr.final_state.purity();
    assert!((pu - 1.0).abs() < 1e-8, "{pu}");
}

#[test]
fn tolerance_halving_converges() {
    let sp = qm_space(3);
    let h = jc(&sp, 2.0 * PI * 230e3) + num(&sp, "q").scale(2.0 * PI * 300e3);
    let drive = (&lowering(&sp, "q") + &lowering(&sp, "q").dagger()).scale(0.5);
    let mut p = LindbladProblem::new(DensityMatrix::basis(&sp, &[0, 0]).unwrap());
    p.segments
        .push(Segment::new(4e-6, h).with_drive(drive, 2.0 * PI * 1e6, Envelope::gaussian_for(4e-6)));
    p.collapse.push(collapse("q", lowering(&sp, "q"), 1.0 / 1.7e-6));
    p.observables.push(("pm".into(), num(&sp, "m")));
    p.sample_times = vec![4e-6];
    let a = evolve(&p).unwrap().values[0][0];
    p.rtol /= 2.0;
    p.atol /= 2.0;
    let b = evolve(&p).unwrap().values[0][0];
    assert!((a - b).abs() < 10.0 * 1e-8);
}

#[test]
fn gaussian_pulse_area() {
    // ∫Ω e(t) dt = π over a truncated Gaussian flips the qubit up to the
    // area lost in the tails.
    let sigma = 50e-9;
    let area_unit = sigma * (2.0 * PI).sqrt() * libm_erf(2.0 / 2f64.sqrt());
    let omega = PI / area_unit;
    let sp = CompositeSpace::single("q", 2).unwrap();
    let a = lowering(&sp, "q");
    let drive = (&a + &a.dagger()).scale(0.5);
    let mut p = LindbladProblem::new(DensityMatrix::basis(&sp, &[0]).unwrap());
    p.segments
        .push(Segment::new(4.0 * sigma, Operator::zeros(&sp)).with_drive(
            drive,
            omega,
            Envelope::gaussian_for(4.0 * sigma),
        ));
    let tr = evolve(&p).unwrap();
    assert!((tr.final_state.population("q", 1).unwrap() - 1.0).abs() < 1e-7);
}

fn libm_erf(x: f64) -> f64 {
    // Abramowitz–Stegun 7.1.26 is too coarse here; integrate instead.
    let n = 20000;
    let h = x / n as f64;
    let f = |t: f64| (-t * t).exp();
    let mut s = f(0.0) + f(x);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    s * h / 3.0 * 2.0 / PI.sqrt()
}

#[test]
fn non_hermitian_segment_rejected() {
    let sp = CompositeSpace::single("q", 2).unwrap();
    let mut p = LindbladProblem::new(DensityMatrix::basis(&sp, &[0]).unwrap());
    p.segments.push(Segment::new(1e-6, lowering(&sp, "q").scale(1e6)));
    assert!(matches!(evolve(&p), Err(crate::Error::NonHermitian(_))));
}

#[test]
fn invalid_problem_rejected() {
    let sp = CompositeSpace::single("q", 2).unwrap();
    let mut p = LindbladProblem::new(DensityMatrix::basis(&sp, &[0]).unwrap());
    p.segments.push(Segment::new(0.0, Operator::zeros(&sp)));
    assert!(evolve(&p).is_err());
    p.segments[0].duration = 1e-6;
    p.rtol = 0.0;
    assert!(evolve(&p).is_err());
}

#[test]
fn inverse_purcell_lifetime() {
    let g = 2.0 * PI * 200e3;
    let delta = 2.0 * PI * 5e6;
    let kappa = 1.0 / 1.7e-6;
    let sp = qm_space(2);
    let h = jc(&sp, g) + num(&sp, "q").scale(delta);
    let mut p = LindbladProblem::new(DensityMatrix::basis(&sp, &[0, 1]).unwrap());
    p.segments.push(Segment::new(4e-3, h));
    p.collapse.push(collapse("q", lowering(&sp, "q"), kappa));
    p.observables.push(("nm".into(), num(&sp, "m")));
    p.sample_times = (1..=40).map(|k| k as f64 * 1e-4).collect();
    let tr = evolve(&p).unwrap();
    let f = decay_rate_fit(&tr, None).unwrap();
    let want = 1.0 / crate::model::analytics::inverse_purcell_rate(g, delta, kappa);
    assert!((want * 941.0 - 1.0).abs() < 0.01);
    assert!((f.tau / want - 1.0).abs() < 0.05, "tau {} vs {}", f.tau, want);
}

#[test]
fn csv_export() {
    let sp = CompositeSpace::single("q", 2).unwrap();
    let mut p = LindbladProblem::new(DensityMatrix::basis(&sp, &[1]).unwrap());
    p.segments.push(Segment::new(1e-6, Operator::zeros(&sp)));
    p.observables.push(("pe".into(), num(&sp, "q")));
    p.sample_times = vec![0.0, 1e-6];
    let csv = evolve(&p).unwrap().to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "time_s,pe");
    assert_eq!(lines.len(), 3);
}

fn dephased_jc(nm: usize, gamma_phi: f64) -> Generator {
    let s = qm_space(nm);
    let h = jc(&s, 2.0 * PI * 230e3);
    let a = lowering(&s, "q");
    let z = num(&s, "m").scale(std::f64::consts::SQRT_2);
    let jumps = [(a.matrix(), 6.5e5), (z.matrix(), gamma_phi)];
    Generator::new(h.matrix(), None, &jumps)
}

#[test]
fn strong_number_dephasing_keeps_trace() {
    // Large n²-weighted dephasing used to amplify roundoff in the
    // anti-Hermitian part until the trace drifted.
    let gen = dephased_jc(20, 1.5e4);
    let mut rho = CMat::zeros(40, 40);
    for n in 0..20 {
        rho[(20 + n, 20 + n)] = C64::new(1.0 / 20.0, 0.0);
    }
    let opts = EvolveOptions {
        method: Method::RungeKutta,
        ..Default::default()
    };
    let (y, _) = propagate(&gen, &rho, 4e-6, &[], &[], &opts).unwrap();
    assert!((crate::qops::linalg::trace(&y).re - 1.0).abs() < 1e-10);
    assert!(crate::qops::linalg::hermitian_deviation(&y) < 1e-12);
}

#[test]
fn runge_kutta_propagates_coherence_blocks() {
    let gen = dephased_jc(4, 3e5);
    // |g,0⟩⟨e,1|-type block: not Hermitian
    let mut x = CMat::zeros(8, 8);
    x[(0, 5)] = C64::new(0.3, 0.1);
    x[(1, 6)] = C64::new(-0.2, 0.4);
    let opts = EvolveOptions {
        method: Method::RungeKutta,
        ..Default::default()
    };
    let (y, _) = propagate(&gen, &x, 1.5e-6, &[], &[], &opts).unwrap();
    let l = gen.liouvillian();
    let exact = unvectorize(&((l * C64::new(1.5e-6, 0.0)).exp() * vectorize(&x)), 8);
    assert!((y - exact).camax() < 1e-8);
}
