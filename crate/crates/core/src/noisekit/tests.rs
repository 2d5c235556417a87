use std::f64::consts::PI;

use super::*;
use crate::units::{HBAR, K_B};

#[test]
fn telegrapher_occupancy_and_rate() {
    let t = Telegrapher::new(1.0, 10.0).unwrap();
    let dt = 1e-3;
    let s = sample_trajectory(&t, 1100.0, dt, 3).unwrap();
    let up = s.iter().filter(|v| **v > 0.0).count() as f64 / s.len() as f64;
    // correlated samples: ~ 20 samples per correlation time
    assert!((up - 0.5).abs() < 0.02, "{up}");
    let crossings = s.windows(2).filter(|w| w[0] != w[1]).count() as f64;
    assert!(crossings > 1e4);
    let gamma_hat = crossings / (s.len() as f64 * dt);
    assert!((gamma_hat / 10.0 - 1.0).abs() < 0.05, "{gamma_hat}");
}

#[test]
fn telegrapher_autocorrelation() {
    let nu = 2.0;
    let gamma = 5.0;
    let dt = 0.005;
    let t = Telegrapher::new(nu, gamma).unwrap();
    let taus = [0.0, 0.05, 0.1, 0.2];
    let n = 10_000;
    let mut acc = [0.0; 4];
    let mut count = 0.0;
    for k in 0..n {
        let s = sample_trajectory(&t, 1.0, dt, crate::seed::derive(11, k)).unwrap();
        let span = s.len() - 41;
        for (a, tau) in acc.iter_mut().zip(taus) {
            let j = (tau / dt).round() as usize;
            *a += (0..span).map(|i| s[i] * s[i + j]).sum::<f64>();
        }
        count += span as f64;
    }
    for (a, tau) in acc.iter().zip(taus) {
        let want = nu * nu * (-2.0 * gamma * tau).exp();
        assert!((a / count / want - 1.0).abs() < 0.05, "tau={tau}");
    }
}

#[test]
fn empty_ensemble_is_silent() {
    let e = FluctuatorEnsemble::sample(0.0, 1e-3, 1e5, 100, 1).unwrap();
    assert!(e.members.is_empty());
    let s = sample_trajectory(&e, 1e-3, 1e-6, 1).unwrap();
    assert!(s.iter().all(|v| *v == 0.0));
}

#[test]
fn coarse_sampling_rejected() {
    let t = Telegrapher::new(1.0, 100.0).unwrap();
    assert!(sample_trajectory(&t, 1.0, 2e-3, 0).is_err());
    assert!(Telegrapher::new(1.0, 0.0).is_err());
}

#[test]
fn lorentzian_values() {
    assert_eq!(psd_lorentzian(3.0, 0.0), 2.0 / 3.0);
    assert!((psd_lorentzian(3.0, 3.0) - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn white_noise_parseval() {
    use rand_distr::{Distribution, Normal};
    let sigma = 0.7;
    let mut rng = crate::seed::rng(5);
    let nd = Normal::new(0.0, sigma).unwrap();
    let x: Vec<f64> = (0..1 << 15).map(|_| nd.sample(&mut rng)).collect();
    let psd = psd_estimate(
        &x,
        0.01,
        &PsdOptions {
            segment: Some(1024),
            hann: false,
        },
    )
    .unwrap();
    let p = psd.tabulated_power().unwrap();
    assert!((p / (sigma * sigma) - 1.0).abs() < 0.1, "{p}");
    // flat at σ²·dt/2π
    let (_, s) = psd.table().unwrap();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    assert!((mean / (sigma * sigma * 0.01 / (2.0 * PI)) - 1.0).abs() < 0.05);
}

#[test]
fn too_short_series_rejected() {
    assert!(psd_estimate(&[0.0; 10], 1.0, &PsdOptions::default()).is_err());
}

#[test]
fn power_law_slope_recovered() {
    let mut rng = crate::seed::rng(8);
    let dt = 20.0;
    let x = synthesize_power_law(1e-6, 1.0, 1 << 16, dt, &mut rng);
    let psd = psd_estimate(
        &x,
        dt,
        &PsdOptions {
            segment: Some(4096),
            hann: true,
        },
    )
    .unwrap();
    let f = fit_psd_power_law(&psd, 2.0 * PI / (4096.0 * dt) * 4.0, PI / dt).unwrap();
    let alpha = f.get("alpha").unwrap();
    assert!((alpha - 1.0).abs() < 0.1, "{alpha}");
}

#[test]
fn telegrapher_knee() {
    let gamma1 = 2.0 * PI * 1e-4;
    let t = Telegrapher::new(1.0, gamma1 / 2.0).unwrap();
    let dt = 20.0;
    let x = sample_trajectory(&t, dt * (1 << 17) as f64, dt, 21).unwrap();
    let psd = psd_estimate(
        &x,
        dt,
        &PsdOptions {
            segment: Some(8192),
            hann: false,
        },
    )
    .unwrap();
    let f = fit_psd_lorentzian(&psd, None).unwrap();
    let g = f.get("gamma1").unwrap();
    assert!((g / gamma1 - 1.0).abs() < 0.2, "{g} vs {gamma1}");
}

#[test]
fn superposed_lorentzians_give_one_over_f() {
    let e = one_over_f_ensemble(1.0, 1e-3, 1.0, 24, 4).unwrap();
    // analytic PSD of the superposition, fitted across the middle decades
    let w: Vec<f64> = (0..60).map(|k| 10f64.powf(-2.5 + 2.0 * k as f64 / 59.0)).collect();
    let s: Vec<f64> = w
        .iter()
        .map(|&w| e.members.iter().map(|m| psd_lorentzian(m.lorentzian_rate(), w)).sum())
        .collect();
    let f = crate::fitkit::fit_power_law(&w, &s).unwrap();
    let a = f.get("alpha").unwrap();
    assert!((0.9..=1.1).contains(&a), "{a}");
}

#[test]
fn one_over_f_closed_forms() {
    let a = 3e7;
    for t in [1e-6, 1e-5, 1e-4] {
        let xe = gaussian_decay(
            &SpectralDensity::OneOverF { a },
            t,
            SequenceKind::Echo,
            None,
            IrCutoff::Window,
        )
        .unwrap();
        let want = -a * t * t * 2f64.ln();
        assert!((xe / want - 1.0).abs() < 1e-6, "{xe} {want}");
        for r in [1e-3, 1e-4, 1e-5] {
            let ir = r / t;
            let xr = gaussian_decay(
                &SpectralDensity::OneOverF { a },
                t,
                SequenceKind::Ramsey,
                Some(ir),
                IrCutoff::Window,
            )
            .unwrap();
            let want = -a * t * t * (1.0 / r).ln();
            assert!((xr / want - 1.0).abs() < 0.05);
        }
    }
    // the hard cut leaves an O(1) additive constant
    let t = 1e-5;
    let xr = gaussian_decay(
        &SpectralDensity::OneOverF { a },
        t,
        SequenceKind::Ramsey,
        Some(1e-3 / t),
        IrCutoff::Hard,
    )
    .unwrap();
    let rel = xr / (-a * t * t * 1e3f64.ln()) - 1.0;
    assert!(rel > 0.1 && rel < 0.16, "{rel}");
    assert!(gaussian_decay(
        &SpectralDensity::OneOverF { a },
        t,
        SequenceKind::Ramsey,
        None,
        IrCutoff::Window
    )
    .is_err());
}

#[test]
fn white_noise_is_linear_in_t() {
    let s0 = 1e3;
    for t in [1e-6, 1e-4, 1e-2] {
        let x = gaussian_decay(
            &SpectralDensity::White { s0 },
            t,
            SequenceKind::Ramsey,
            None,
            IrCutoff::Window,
        )
        .unwrap();
        assert!((x / (-PI * s0 * t) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn echo_beats_ramsey_for_low_frequency_noise() {
    let specs = [
        SpectralDensity::Lorentzian {
            gamma1: 1e3,
            weight: 1e6,
        },
        SpectralDensity::OneOverF { a: 1e6 },
        SpectralDensity::Tabulated {
            omega: vec![0.0, 1e3, 1e4],
            s: vec![3.0, 2.0, 0.0],
        },
    ];
    for s in &specs {
        for t in [1e-6, 1e-4, 1e-3] {
            let r = gaussian_decay(s, t, SequenceKind::Ramsey, Some(1e-2), IrCutoff::Window).unwrap();
            let e = gaussian_decay(s, t, SequenceKind::Echo, Some(1e-2), IrCutoff::Window).unwrap();
            assert!(e >= r, "{s:?} t={t}");
        }
    }
}

#[test]
fn lorentzian_ramsey_matches_telegraph_closed_form() {
    // Gaussian phase with autocorrelation C(τ)=σ²e^{−γ|τ|}:
    // x = −σ²(γt − 1 + e^{−γt})/γ².
    let gamma = 2e4;
    let var = 1e8;
    let s = SpectralDensity::Lorentzian {
        gamma1: gamma,
        weight: var / (2.0 * PI),
    };
    for t in [1e-5, 1e-4, 1e-3] {
        let x = gaussian_decay(&s, t, SequenceKind::Ramsey, None, IrCutoff::Window).unwrap();
        let want = -var * (gamma * t - 1.0 + (-gamma * t).exp()) / (gamma * gamma);
        assert!((x / want - 1.0).abs() < 1e-6, "{x} {want}");
    }
}

#[test]
fn ensemble_prediction() {
    let gmax = 1e5;
    let gmin = gmax * (-20f64).exp();
    // ξ chosen so that T2E ≈ 500 µs
    let xi = 1.0 / (500e-6 * (gmax * 500e-6f64).ln());
    let p = ensemble_decay_predict_params(xi, gmin, gmax).unwrap();
    assert!((p.t2_echo / 500e-6 - 1.0).abs() < 1e-9);
    assert!((p.efficiency - 5.11).abs() < 0.01, "{}", p.efficiency);
    assert!((echo_efficiency(20.0, gmax, 500e-6) - 5.11).abs() < 0.01);
    assert!(p.echo(5e-6).is_err());
    let flat = ensemble_decay_predict_params(xi, 1.0, 1.0).unwrap();
    assert_eq!(flat.ramsey_rate, 0.0);
}

#[test]
fn monte_carlo_ramsey_small() {
    let gmax = 1e5;
    let gmin = gmax * (-20f64).exp();
    let xi = 1.0 / (64e-6 * 20.0);
    let e = FluctuatorEnsemble::sample(xi, gmin, gmax, 300, 9).unwrap();
    let p = ensemble_decay_predict(&e).unwrap();
    let times: Vec<f64> = (1..=10).map(|k| k as f64 * 10e-6).collect();
    let c = monte_carlo_coherence(&e, &times, SequenceKind::Ramsey, 1000, true, 2);
    let (lt, ly): (Vec<f64>, Vec<f64>) = times.iter().zip(&c).map(|(t, v)| (*t, v.ln())).unzip();
    let f = crate::fitkit::linear_fit(&lt, &ly).unwrap();
    let rate = -f.get("slope").unwrap();
    assert!((rate / p.ramsey_rate - 1.0).abs() < 0.15, "{rate} {}", p.ramsey_rate);
    // reproducible
    assert_eq!(
        c,
        monte_carlo_coherence(&e, &times, SequenceKind::Ramsey, 1000, true, 2)
    );
}

#[test]
fn resonant_sum_closed_vs_brute() {
    let cases = [
        (2.0 * PI * 1e6, 2.0 * PI * 70e6, 0.5, 1.0 / 400e-6, 0.0),
        (2.0 * PI * 1e6, 2.0 * PI * 70e6, 0.1, 1e6, 3e5),
        (2.0 * PI * 0.3e6, 2.0 * PI * 5e6, 0.0, 1e7, 0.0),
    ];
    for (g, d, frac, g1, gp) in cases {
        let a = resonant_tls_loss(g, d, frac * d, g1, gp).unwrap();
        let b = resonant_tls_loss_brute(g, d, frac * d, g1, gp, 1_000_000).unwrap();
        assert!((a / b - 1.0).abs() < 1e-9, "{a} {b}");
    }
}

#[test]
fn single_resonant_defect() {
    let g = 2.0 * PI * 1e6;
    let g1 = 1e5;
    let v = resonant_tls_loss(g, 1e15, 0.0, g1, 0.0).unwrap();
    assert!((v / (4.0 * g * g / g1) - 1.0).abs() < 1e-9);
    assert!(resonant_tls_loss(g, 1.0, 0.6, g1, 0.0).is_err());
}

#[test]
fn resonant_loss_weak_coupling_regime() {
    let d = 2.0 * PI * 70e6;
    let v = resonant_tls_loss(2.0 * PI * 1e6, d, d / 2.0, 1.0 / 400e-6, 0.0).unwrap();
    let hz = v / (2.0 * PI);
    assert!(hz > 0.4 && hz < 1.6, "{hz}");
}

#[test]
fn full_form_reduces_to_comb() {
    let g = 2.0 * PI * 1e6;
    let d = 2.0 * PI * 70e6;
    let g1 = 1e6;
    let list: Vec<ResonantTls> = (-2000i64..=2000)
        .map(|k| ResonantTls {
            g,
            detuning: k as f64 * d + 0.3 * d,
            omega: 2.0 * PI * 5e9,
            gamma1: g1,
            gamma_phi: 0.0,
        })
        .collect();
    let full = resonant_tls_loss_full(&list, 0.0).unwrap();
    let comb = resonant_tls_loss(g, d, 0.3 * d, g1, 0.0).unwrap();
    assert!((full / comb - 1.0).abs() < 1e-3);
    let warm = resonant_tls_loss_full(&list, 0.1).unwrap();
    let th = (HBAR * 2.0 * PI * 5e9 / (2.0 * K_B * 0.1)).tanh();
    assert!((warm / full - th).abs() < 1e-12);
}

#[test]
fn relaxation_damping_limits() {
    let tls = [LongitudinalTls {
        g_long: 2.0 * PI * 0.6e6,
        omega: 2.0 * PI * 1e9,
        gamma1: 1e6,
    }];
    let wm = 2.0 * PI * 4.9e9;
    assert!(relaxation_damping(&tls, wm, 1e-4).unwrap() < 1e-150);
    let t = HBAR * tls[0].omega / K_B;
    let at = relaxation_damping(&tls, wm, t).unwrap();
    let zero = relaxation_damping(&[LongitudinalTls { omega: 0.0, ..tls[0] }], wm, t).unwrap();
    let sech = 1.0 / 0.5f64.cosh();
    assert!((at / zero - sech * sech).abs() < 1e-12);
    assert!((sech * sech - 0.7864).abs() < 1e-4);
}

#[test]
fn relaxation_damping_defect_comb() {
    let g1 = (1e6f64 * 1e7).sqrt();
    let tls: Vec<LongitudinalTls> = (1..=20)
        .map(|k| LongitudinalTls {
            g_long: 2.0 * PI * 0.6e6,
            omega: 2.0 * PI * 70e6 * k as f64,
            gamma1: g1,
        })
        .collect();
    let v = relaxation_damping(&tls, 2.0 * PI * 4.9176e9, 0.070).unwrap() / (2.0 * PI);
    assert!(v > 0.7 / 3.0 && v < 0.7 * 3.0, "{v}");
}

#[test]
fn density_bound() {
    let b = tls_density_bound(60, 5.0, 0.22e9).unwrap();
    assert!((b - 54.545).abs() < 0.01);
    assert_eq!(tls_density_bound(0, 5.0, 0.22e9).unwrap(), 0.0);
    assert!((tls_density_bound(60, 10.0, 0.22e9).unwrap() * 2.0 - b).abs() < 1e-12);
}
