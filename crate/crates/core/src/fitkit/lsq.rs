//! Linear least squares and simplex-constrained least squares.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Ratio of largest to smallest singular value.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Unconstrained least squares via SVD. Returns (x, residual sum of squares).
pub fn linear_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(b, 1e-13 * svd.singular_values.max())
        .map_err(|e| Error::FitFailure(e.to_string()))?;
    let r = a * &x - b;
    Ok((x, r.norm_squared()))
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// Result of a simplex-constrained fit.
#[derive(Clone, Debug)]
pub struct SimplexFit {
    pub x: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// min ‖Ax − b‖² subject to x ≥ 0 and Σx = 1.
///
/// Accelerated projected gradient followed by an exact equality-constrained
/// solve on the detected support. The returned vector satisfies both
/// constraints exactly (up to one rounding in the final normalisation).
pub fn simplex_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<SimplexFit> {
    let n = a.ncols();
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    if n == 0 {
        return Err(Error::Infeasible("no unknowns".into()));
    }
    let ata = a.transpose() * a;
    let atb = a.transpose() * b;
    let lip = ata.clone().symmetric_eigenvalues().max().max(1e-300);
    let step = 1.0 / lip;
    let grad = |x: &DVector<f64>| &ata * x - &atb;

    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    for k in 0..50_000 {
        iterations = k + 1;
        let xn = project_simplex(&(&y - grad(&y) * step));
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let diff = (&xn - &x).amax();
        y = &xn + (&xn - &x) * ((t - 1.0) / tn);
        x = xn;
        t = tn;
        if diff < 1e-15 {
            break;
        }
        // Occasional restart keeps momentum from overshooting.
        if k % 500 == 499 {
            y = x.clone();
            t = 1.0;
        }
    }

    if let Some(p) = polish(&ata, &atb, &x) {
        x = p;
    }
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    let s = x.sum();
    if s <= 0.0 {
        return Err(Error::Infeasible("degenerate simplex solution".into()));
    }
    x /= s;
    let residual = (a * &x - b).norm_squared();
    Ok(SimplexFit {
        x,
        residual,
        iterations,
    })
}

fn polish(ata: &DMatrix<f64>, atb: &DVector<f64>, x: &DVector<f64>) -> Option<DVector<f64>> {
    let n = x.len();
    let support: Vec<usize> = (0..n).filter(|&i| x[i] > 1e-10).collect();
    let m = support.len();
    if m == 0 {
        return None;
    }
    let mut kkt = DMatrix::zeros(m + 1, m + 1);
    let mut rhs = DVector::zeros(m + 1);
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            kkt[(r, c)] = ata[(i, j)];
        }
        kkt[(r, m)] = 1.0;
        kkt[(m, r)] = 1.0;
        rhs[r] = atb[i];
    }
    rhs[m] = 1.0;
    let sol = kkt.lu().solve(&rhs)?;
    if sol.iter().take(m).any(|&v| v < 0.0 || !v.is_finite()) {
        return None;
    }
    let mut out = DVector::zeros(n);
    for (r, &i) in support.iter().enumerate() {
        out[i] = sol[r];
    }
    // Dual feasibility for the inactive coordinates: gradient + μ ≥ 0.
    let mu = -sol[m];
    let g = ata * &out - atb;
    let scale = g.amax().max(atb.amax()).max(1e-300);
    for i in 0..n {
        if !support.contains(&i) && g[i] - mu < -1e-9 * scale {
            return None;
        }
    }
    Some(out)
}
