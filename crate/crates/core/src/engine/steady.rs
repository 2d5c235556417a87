//! Steady state of a time-independent Liouvillian.

use super::generator::{unvectorize, Generator};
use crate::model::CollapseOp;
use crate::qops::linalg::{hermitize, trace};
use crate::qops::{DensityMatrix, Operator};
use crate::{CMat, CVec, Error, Result, C64};

/// Required ratio between the two smallest singular values.
pub const UNIQUENESS_RATIO: f64 = 1e3;

fn generator(h: &Operator, collapse: &[CollapseOp]) -> Result<Generator> {
    for c in collapse {
        if c.op.space() != h.space() {
            return Err(Error::SpaceMismatch);
        }
    }
    let dev = h.hermitian_deviation();
    if dev > 1e-10 * h.matrix().iter().map(|v| v.norm()).fold(1.0, f64::max) {
        return Err(Error::NonHermitian(dev));
    }
    let pairs: Vec<(&CMat, f64)> = collapse.iter().map(|c| (c.op.matrix(), c.rate)).collect();
    Ok(Generator::new(h.matrix(), None, &pairs))
}

fn to_state(h: &Operator, v: &CVec) -> Result<DensityMatrix> {
    let d = h.dim();
    let m = unvectorize(v, d);
    let tr = trace(&m);
    let m = hermitize(&(m / tr));
    let mut st = DensityMatrix::new_unchecked(h.space().clone(), m)?;
    st.clip_positive(1e-8)?;
    Ok(st)
}

/// Null vector of the Liouvillian, with the uniqueness check on its
/// singular values.
pub fn steady_state(h: &Operator, collapse: &[CollapseOp]) -> Result<DensityMatrix> {
    let gen = generator(h, collapse)?;
    let l = gen.liouvillian();
    let n = l.nrows();
    let svd = l.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Integration("SVD failed".into()))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let s0 = svd.singular_values[idx[0]];
    let s1 = if n > 1 {
        svd.singular_values[idx[1]]
    } else {
        f64::INFINITY
    };
    if !(s1 > UNIQUENESS_RATIO * s0) {
        return Err(Error::AmbiguousSteadyState {
            smallest: s0,
            second: s1,
        });
    }
    let v: CVec = vt.row(idx[0]).adjoint();
    to_state(h, &v)
}

/// Replaces one Liouvillian row by the trace functional and solves by LU.
/// Skips the uniqueness check; intended for dense parameter scans.
pub fn steady_state_fast(h: &Operator, collapse: &[CollapseOp]) -> Result<DensityMatrix> {
    let gen = generator(h, collapse)?;
    let d = h.dim();
    let mut l = gen.liouvillian();
    let mut rhs = CVec::zeros(d * d);
    for c in 0..d * d {
        l[(0, c)] = C64::new(0.0, 0.0);
    }
    for i in 0..d {
        l[(0, i * d + i)] = C64::new(1.0, 0.0);
    }
    rhs[0] = C64::new(1.0, 0.0);
    let v = l.lu().solve(&rhs).ok_or_else(|| Error::AmbiguousSteadyState {
        smallest: 0.0,
        second: 0.0,
    })?;
    to_state(h, &v)
}
