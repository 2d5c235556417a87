use std::f64::consts::{FRAC_2_PI, PI};

use approx::assert_relative_eq;

use super::*;
use crate::model::params::fixtures::device;
use crate::qops::{coherent, diag, fock};
use crate::C64;

fn times() -> Vec<f64> {
    (0..=80).map(|k| k as f64 * 5e-8).collect()
}

fn dist(p: &[f64]) -> FockDistribution {
    FockDistribution::new(p.to_vec()).unwrap()
}

#[test]
fn parity_of_simple_states() {
    assert_eq!(parity(&dist(&[1.0, 0.0, 0.0])), 1.0);
    assert_eq!(parity(&dist(&[0.0, 1.0, 0.0])), -1.0);
    // Σ(−1)ⁿe^{−1}/n! = e^{−2}
    let p = poisson(1.0, 40);
    let s: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|v| v / s).collect();
    assert_relative_eq!(parity(&dist(&p)), (-2.0f64).exp(), max_relative = 1e-12);
}

#[test]
// The printed scale factor, kept as the literal rather than 2/π.
#[allow(clippy::approx_constant)]
fn wigner_point_scaling() {
    assert_relative_eq!(wigner_point(1.0).unwrap(), 0.63662, epsilon = 1e-5);
    assert_relative_eq!(wigner_point(-1.0).unwrap(), -0.63662, epsilon = 1e-5);
    assert!(wigner_point(1.2).is_err());
}

#[test]
fn laguerre_matches_explicit_polynomials() {
    for &x in &[0.0, 0.3, 1.7, 5.0] {
        assert_relative_eq!(laguerre(0, x), 1.0);
        assert_relative_eq!(laguerre(1, x), 1.0 - x, epsilon = 1e-14);
        assert_relative_eq!(laguerre(2, x), 1.0 - 2.0 * x + 0.5 * x * x, epsilon = 1e-13);
        assert_relative_eq!(
            laguerre(3, x),
            1.0 - 3.0 * x + 1.5 * x * x - x * x * x / 6.0,
            epsilon = 1e-12
        );
    }
}

#[test]
fn fock_wigner_is_normalised() {
    for n in 0..6 {
        let (v, _) = crate::noisekit::quad::integrate(|r| 2.0 * PI * r * wigner_fock(n, r), 0.0, 8.0, 1e-12, 1e-14);
        assert_relative_eq!(v, 1.0, epsilon = 1e-9);
    }
}

#[test]
fn closed_form_matches_displaced_parity_at_any_phase() {
    for n in 0..4 {
        let rho = fock(n + 1, n).unwrap();
        for &r in &[0.0, 0.4, 1.1, 2.0] {
            let w0 = wigner_fock(n, r);
            for k in 0..5 {
                let a = C64::from_polar(r, 2.0 * PI * k as f64 / 5.0 + 0.3);
                let w = wigner_from_state(&rho, a, 40).unwrap();
                assert!((w - w0).abs() < 1e-6, "n={n} r={r} k={k}: {w} vs {w0}");
            }
        }
    }
}

#[test]
fn coherent_state_wigner_is_gaussian() {
    let alpha = C64::new(0.7, -0.4);
    let rho = coherent(30, alpha).unwrap();
    let beta = C64::new(0.2, 0.5);
    let w = wigner_from_state(&rho, beta, 30).unwrap();
    assert_relative_eq!(w, FRAC_2_PI * (-2.0 * (beta - alpha).norm_sqr()).exp(), epsilon = 1e-8);
}

#[test]
fn decompose_recovers_single_phonon() {
    let dev = device();
    let t = times();
    let basis = simulate_rabi_basis(&dev, "B", &t, 4).unwrap();
    let p_e = rabi_trace(&dev, "B", &fock(4, 1).unwrap(), &t).unwrap();
    let d = decompose_rabi(&RabiTrace::new(t, p_e, 0.0, true).unwrap(), &basis).unwrap();
    assert!((d.p[1] - 1.0).abs() < 0.02, "{:?}", d.p);
    for (n, p) in d.p.iter().enumerate() {
        if n != 1 {
            assert!(p.abs() < 0.02);
        }
    }
    assert!(d.residual < 1e-8, "{}", d.residual);
}

#[test]
fn flat_trace_is_vacuum() {
    let dev = device();
    let t = times();
    let basis = simulate_rabi_basis(&dev, "B", &t, 3).unwrap();
    // Only the thermal qubit: P_e stays near its bath value.
    let p_e = rabi_trace(&dev, "B", &fock(4, 0).unwrap(), &t).unwrap();
    assert!(p_e.iter().all(|p| *p < 0.03));
    let d = decompose_rabi(&RabiTrace::new(t, p_e, 0.0, true).unwrap(), &basis).unwrap();
    assert!(d.p[0] > 0.99);
}

#[test]
fn displaced_vacuum_is_poissonian() {
    let mut dev = device();
    dev.fock_dim = 14;
    let t = times();
    let basis = simulate_rabi_basis(&dev, "B", &t, 9).unwrap();
    let r = 0.9;
    let coh = coherent(14, C64::new(r, 0.0)).unwrap();
    // Phase randomisation keeps only the Fock diagonal.
    let pa = diag(&(0..14).map(|n| coh[(n, n)].re).collect::<Vec<_>>());
    let p_e = rabi_trace(&dev, "B", &pa, &t).unwrap();
    let d = decompose_rabi(&RabiTrace::new(t, p_e, r, true).unwrap(), &basis).unwrap();
    let q = poisson(r * r, d.p.len());
    assert!(kl_divergence(&d.p, &q) < 1e-3, "{:?}", d.p);
    let nbar = fit_poisson(&d.p).unwrap();
    assert_relative_eq!(nbar, r * r, max_relative = 0.02);
}

#[test]
fn degenerate_basis_is_rejected() {
    let t = times();
    let c: Vec<f64> = t.iter().map(|x| (x * 1e6).sin().powi(2)).collect();
    let basis = RabiBasis {
        times: t.clone(),
        curves: vec![c.clone(), c.clone()],
        qubit_pop: 0.0,
    };
    let trace = RabiTrace::new(t, c, 0.0, false).unwrap();
    assert!(matches!(decompose_rabi(&trace, &basis), Err(Error::IllConditioned(_))));
}

#[test]
fn trace_validation() {
    assert!(RabiTrace::new(vec![0.0, 1.0], vec![0.1], 0.0, false).is_err());
    assert!(RabiTrace::new(vec![0.0], vec![1.3], 0.0, false).is_err());
    assert!(FockDistribution::new(vec![0.5, 0.4]).is_err());
    assert!(FockDistribution::new(vec![1.1, -0.1]).is_err());
}

fn exact_tomogram(p: &[f64], sigma: f64) -> WignerTomogram {
    let radii = radii_grid(DEFAULT_RADII_COUNT, DEFAULT_RADIUS_MAX);
    let w = radii.iter().map(|r| FRAC_2_PI * displaced_parity(p, *r)).collect();
    WignerTomogram::new(radii.clone(), w, vec![sigma; radii.len()]).unwrap()
}

#[test]
fn reconstructs_vacuum_and_single_phonon() {
    let r = reconstruct(&exact_tomogram(&[1.0], 0.01), 5, 0, 1).unwrap();
    assert!((r.p[0] - 1.0).abs() < 1e-3);
    let r = reconstruct(&exact_tomogram(&[0.0, 1.0], 0.01), 5, 0, 1).unwrap();
    assert!(r.p[1] >= 0.99);
    assert!(r.p.iter().all(|v| *v >= 0.0));
    assert_relative_eq!(r.p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
}

#[test]
fn reconstruction_constraints_hold_for_noisy_data() {
    let mut t = exact_tomogram(&[0.2, 0.7, 0.1], 0.02);
    let mut rng = crate::seed::rng(9);
    for w in &mut t.w {
        let z: f64 = StandardNormal.sample(&mut rng);
        *w += 0.02 * z;
    }
    let r = reconstruct(&t, 6, 50, 3).unwrap();
    assert!(r.p.iter().all(|v| *v >= 0.0));
    assert_relative_eq!(r.p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    assert!(r.sigma.iter().all(|s| s.is_finite()));
    assert!((r.p[1] - 0.7).abs() < 4.0 * r.sigma[1].max(0.02));
}

#[test]
fn too_few_radii_is_an_error() {
    let t = WignerTomogram::new(vec![0.0, 1.0], vec![0.5, 0.0], vec![0.01; 2]).unwrap();
    assert!(reconstruct(&t, 4, 0, 0).is_err());
}

#[test]
fn bootstrap_sigma_scales_with_shots() {
    let p = [0.3, 0.6, 0.1];
    let shots = [100.0, 400.0, 1600.0, 6400.0];
    let sig: Vec<f64> = shots
        .iter()
        .map(|n: &f64| {
            let t = exact_tomogram(&p, 0.5 / n.sqrt());
            reconstruct(&t, 4, 400, 11).unwrap().sigma[1]
        })
        .collect();
    let lx: Vec<f64> = shots.iter().map(|n| n.ln()).collect();
    let ly: Vec<f64> = sig.iter().map(|s| s.ln()).collect();
    let fit = crate::fitkit::linear_fit(&lx, &ly).unwrap();
    let slope = fit.get("slope").unwrap();
    assert!((slope + 0.5).abs() < 0.05, "slope {slope}");
}

#[test]
fn tomogram_bound_and_csv() {
    assert!(WignerTomogram::new(vec![0.0], vec![0.9], vec![0.01]).is_err());
    let t = WignerTomogram::new(vec![0.0], vec![0.9], vec![0.1]).unwrap();
    assert!(t.to_csv().starts_with("r,w,sigma\n0e0,"));
}

#[test]
fn fidelities() {
    let space = crate::qops::CompositeSpace::single("m", 3).unwrap();
    let rho = DensityMatrix::new(space, fock(3, 1).unwrap()).unwrap();
    let psi = fock(3, 1).unwrap().column(1).into_owned();
    assert_relative_eq!(fidelity(&rho, &psi).unwrap(), 1.0, epsilon = 1e-12);
    assert_relative_eq!(fock_fidelity(&[0.4, 0.36], 1), 0.6);
}

#[test]
fn displacement_calibration_through_origin() {
    let amps = [0.5f64, 1.0, 1.5];
    let nbar: Vec<f64> = amps.iter().map(|a| (0.8 * a).powi(2)).collect();
    assert_relative_eq!(calibrate_displacement(&amps, &nbar).unwrap(), 0.8, epsilon = 1e-12);
}
