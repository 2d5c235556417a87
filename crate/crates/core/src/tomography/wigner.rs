//! Wigner functions of Fock-diagonal and general mechanical states.

use std::f64::consts::FRAC_2_PI;

use crate::qops::displacement;
use crate::{CMat, Error, Result, C64};

pub const DEFAULT_RADII_COUNT: usize = 12;
pub const DEFAULT_RADIUS_MAX: f64 = 2.4;

/// Laguerre polynomial Lₙ(x) by the three-term recurrence.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, 1.0 - x);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        let k = k as f64;
        let c = ((2.0 * k + 1.0 - x) * b - k * a) / (k + 1.0);
        a = b;
        b = c;
    }
    b
}

/// Wigner function of |n⟩ at |α| = r: (2/π)(−1)ⁿe^{−2r²}Lₙ(4r²).
pub fn wigner_fock(n: usize, r: f64) -> f64 {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    FRAC_2_PI * sign * (-2.0 * r * r).exp() * laguerre(n, 4.0 * r * r)
}

/// Phase-averaged displaced parity of a Fock-diagonal state.
pub fn displaced_parity(p: &[f64], r: f64) -> f64 {
    p.iter().enumerate().map(|(n, v)| v * wigner_fock(n, r)).sum::<f64>() / FRAC_2_PI
}

/// W(α) = (2/π)Tr[D(−α)ρD(α)Π], summing the parity over `pad` levels
/// beyond the support of ρ.
pub fn wigner_from_state(rho: &CMat, alpha: C64, pad: usize) -> Result<f64> {
    let m = rho.nrows();
    if rho.ncols() != m || m == 0 {
        return Err(Error::InvalidInput("state must be a non-empty square matrix".into()));
    }
    let dim = m + pad;
    let mut big = CMat::zeros(dim, dim);
    big.view_mut((0, 0), (m, m)).copy_from(rho);
    let d = displacement(dim, -alpha)?;
    let shifted = &d * big * d.adjoint();
    Ok(FRAC_2_PI
        * (0..dim)
            .map(|n| {
                if n % 2 == 0 {
                    shifted[(n, n)].re
                } else {
                    -shifted[(n, n)].re
                }
            })
            .sum::<f64>())
}
