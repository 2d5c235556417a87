//! Downhill simplex with standard coefficients and a single restart.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NmOptions {
    pub max_eval: usize,
    /// Simplex diameter threshold (infinity norm).
    pub xtol: f64,
    /// Objective spread threshold.
    pub ftol: f64,
    /// Per-coordinate initial steps; defaults to 5% of |x0| (or 2.5e-4 at zero).
    pub initial_step: Option<Vec<f64>>,
    pub restart: bool,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self {
            max_eval: 20_000,
            xtol: 1e-10,
            ftol: 1e-14,
            initial_step: None,
            restart: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub n_eval: usize,
    pub converged: bool,
}

const RHO: f64 = 1.0;
const CHI: f64 = 2.0;
const PSI: f64 = 0.5;
const SIGMA: f64 = 0.5;

/// Minimise `f` from `x0`.
///
/// Non-finite objective values are treated as +∞ so that constraints can
/// be expressed by returning NaN or infinity.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NmOptions) -> Result<NmResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut n_eval = 0usize;
    let mut eval = |x: &[f64], n_eval: &mut usize| {
        *n_eval += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let f0 = eval(x0, &mut n_eval);
    if !f0.is_finite() {
        return Err(Error::InvalidInput(
            "objective is not finite at the starting point".into(),
        ));
    }
    let steps = match &opts.initial_step {
        Some(s) if s.len() == x0.len() => s.clone(),
        Some(s) => {
            return Err(Error::DimensionMismatch {
                expected: x0.len(),
                got: s.len(),
            })
        }
        None => x0.iter().map(|&v| if v != 0.0 { 0.05 * v } else { 2.5e-4 }).collect(),
    };
    let mut best = run(&mut eval, x0, f0, &steps, opts, &mut n_eval)?;
    if opts.restart && best.converged {
        // Restart from the optimum with a fresh simplex to escape a
        // premature collapse; keep the better of the two.
        let steps2: Vec<f64> = best
            .x
            .iter()
            .zip(&steps)
            .map(|(&v, &s)| if v != 0.0 { 0.05 * v } else { s })
            .collect();
        let again = run(&mut eval, &best.x.clone(), best.fx, &steps2, opts, &mut n_eval)?;
        if again.fx <= best.fx {
            best = again;
        }
    }
    best.n_eval = n_eval;
    Ok(best)
}

fn run<E>(eval: &mut E, x0: &[f64], f0: f64, steps: &[f64], opts: &NmOptions, n_eval: &mut usize) -> Result<NmResult>
where
    E: FnMut(&[f64], &mut usize) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    let mut fs = vec![f0];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        fs.push(eval(&x, n_eval));
        simplex.push(x);
    }
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fs[a].partial_cmp(&fs[b]).unwrap());
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fs = order.iter().map(|&i| fs[i]).collect();

        let diam = simplex[1..]
            .iter()
            .flat_map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = fs[n] - fs[0];
        if diam <= opts.xtol && spread <= opts.ftol.max(opts.ftol * fs[0].abs()) {
            return Ok(NmResult {
                x: simplex[0].clone(),
                fx: fs[0],
                n_eval: *n_eval,
                converged: true,
            });
        }
        if *n_eval >= opts.max_eval {
            return Err(Error::MaxEvaluations(opts.max_eval));
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = along(RHO);
        let fr = eval(&xr, n_eval);
        if fr < fs[0] {
            let xe = along(RHO * CHI);
            let fe = eval(&xe, n_eval);
            if fe < fr {
                simplex[n] = xe;
                fs[n] = fe;
            } else {
                simplex[n] = xr;
                fs[n] = fr;
            }
            continue;
        }
        if fr < fs[n - 1] {
            simplex[n] = xr;
            fs[n] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < fs[n] {
            let xc = along(PSI * RHO);
            let fc = eval(&xc, n_eval);
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = along(-PSI);
            let fc = eval(&xc, n_eval);
            let ok = fc < fs[n];
            (xc, fc, ok)
        };
        if accept {
            simplex[n] = xc;
            fs[n] = fc;
            continue;
        }
        for i in 1..=n {
            let x: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(xi, x0)| x0 + SIGMA * (xi - x0))
                .collect();
            fs[i] = eval(&x, n_eval);
            simplex[i] = x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let r = nelder_mead(|x| (x[0] - 3.0).powi(2), &[0.0], &NmOptions::default()).unwrap();
        assert!((r.x[0] - 3.0).abs() < 1e-6);
        assert!(r.converged);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let r = nelder_mead(f, &[-1.2, 1.0], &NmOptions::default()).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn budget_exhaustion() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let opts = NmOptions {
            max_eval: 20,
            ..Default::default()
        };
        assert!(matches!(
            nelder_mead(f, &[-1.2, 1.0], &opts),
            Err(Error::MaxEvaluations(20))
        ));
    }

    #[test]
    fn non_finite_start_rejected() {
        assert!(nelder_mead(|_| f64::NAN, &[0.0], &NmOptions::default()).is_err());
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(4) + (x[1] + 2.0).powi(2) + x[0] * x[1];
        let a = nelder_mead(f, &[0.3, 0.1], &NmOptions::default()).unwrap();
        let b = nelder_mead(f, &[0.3, 0.1], &NmOptions::default()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.n_eval, b.n_eval);
    }
}
