use nalgebra::SymmetricEigen;

use super::linalg;
use super::operator::{annihilation, Operator};
use super::space::CompositeSpace;
use crate::{CMat, CVec, Error, Result, C64};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const EIGEN_TOL: f64 = 1e-9;

/// Validated density matrix on a composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: CompositeSpace,
    matrix: CMat,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity.
    pub fn new(space: CompositeSpace, matrix: CMat) -> Result<Self> {
        let rho = Self::new_unchecked(space, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape check only. Used by integrators that validate at segment ends.
    pub fn new_unchecked(space: CompositeSpace, matrix: CMat) -> Result<Self> {
        let n = space.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.nrows(),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn validate(&self) -> Result<()> {
        let h = linalg::hermitian_deviation(&self.matrix);
        if h > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {h:.2e})")));
        }
        let tr = linalg::trace(&self.matrix).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue();
        if min < -EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn from_pure(space: CompositeSpace, psi: &CVec) -> Result<Self> {
        let nrm = psi.norm();
        if nrm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = psi.unscale(nrm);
        Self::new(space, &v * v.adjoint())
    }

    /// Product basis state with the given level on each factor.
    pub fn basis(space: &CompositeSpace, levels: &[usize]) -> Result<Self> {
        let idx = space.flat_index(levels)?;
        let n = space.dim();
        let mut m = CMat::zeros(n, n);
        m[(idx, idx)] = C64::new(1.0, 0.0);
        Ok(Self {
            space: space.clone(),
            matrix: m,
        })
    }

    /// Tensor product of local states. Factors without an entry start in |0⟩.
    pub fn product(space: &CompositeSpace, locals: &[(&str, CMat)]) -> Result<Self> {
        for (l, _) in locals {
            space.index_of(l)?;
        }
        let mut m: Option<CMat> = None;
        for (label, &d) in space.labels().iter().zip(space.dims()) {
            let local = match locals.iter().find(|(l, _)| l == label) {
                Some((_, r)) => {
                    if r.nrows() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: r.nrows(),
                        });
                    }
                    r.clone()
                }
                None => fock(d, 0)?,
            };
            m = Some(match m {
                None => local,
                Some(acc) => linalg::kron(&acc, &local),
            });
        }
        Self::new(space.clone(), m.expect("non-empty space"))
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = linalg::hermitize(&self.matrix);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn expect(&self, op: &Operator) -> Result<C64> {
        if op.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(trace_product(op.matrix(), &self.matrix))
    }

    /// Population of `level` on factor `label`.
    pub fn population(&self, label: &str, level: usize) -> Result<f64> {
        let k = self.space.index_of(label)?;
        let d = self.space.dims()[k];
        if level >= d {
            return Err(Error::InvalidState(format!("level {level} >= dim {d}")));
        }
        let mut p = 0.0;
        for i in 0..self.dim() {
            if self.space.levels(i)[k] == level {
                p += self.matrix[(i, i)].re;
            }
        }
        Ok(p)
    }

    /// Diagonal populations of one factor.
    pub fn populations(&self, label: &str) -> Result<Vec<f64>> {
        let k = self.space.index_of(label)?;
        let mut p = vec![0.0; self.space.dims()[k]];
        for i in 0..self.dim() {
            p[self.space.levels(i)[k]] += self.matrix[(i, i)].re;
        }
        Ok(p)
    }

    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::InvalidInput(
                "partial trace needs at least one kept label".into(),
            ));
        }
        let sub = self.space.subspace(keep)?;
        let kept: Vec<usize> = (0..self.space.dims().len())
            .filter(|&k| keep.contains(&self.space.labels()[k].as_str()))
            .collect();
        let traced: Vec<usize> = (0..self.space.dims().len()).filter(|k| !kept.contains(k)).collect();
        let dims = self.space.dims();
        let n_keep: usize = kept.iter().map(|&k| dims[k]).product();
        let n_tr: usize = traced.iter().map(|&k| dims[k]).product();
        let mut index = vec![0usize; n_keep * n_tr];
        let mut levels = vec![0usize; dims.len()];
        for a in 0..n_keep {
            let mut r = a;
            for &k in kept.iter().rev() {
                levels[k] = r % dims[k];
                r /= dims[k];
            }
            for t in 0..n_tr {
                let mut r = t;
                for &k in traced.iter().rev() {
                    levels[k] = r % dims[k];
                    r /= dims[k];
                }
                index[a * n_tr + t] = self.space.flat_index(&levels)?;
            }
        }
        let mut out = CMat::zeros(n_keep, n_keep);
        for a in 0..n_keep {
            for b in 0..n_keep {
                let mut s = C64::new(0.0, 0.0);
                for t in 0..n_tr {
                    s += self.matrix[(index[a * n_tr + t], index[b * n_tr + t])];
                }
                out[(a, b)] = s;
            }
        }
        Ok(DensityMatrix {
            space: sub,
            matrix: out,
        })
    }

    /// Fidelity ⟨ψ|ρ|ψ⟩ with a pure state (not square-rooted).
    pub fn overlap_pure(&self, psi: &CVec) -> Result<f64> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.len(),
            });
        }
        Ok((psi.adjoint() * &self.matrix * psi)[(0, 0)].re)
    }

    /// Clip tiny negative eigenvalues in [−tol, 0) to zero and renormalise.
    /// Returns the most negative eigenvalue found.
    pub fn clip_positive(&mut self, tol: f64) -> Result<f64> {
        let h = linalg::hermitize(&self.matrix);
        let eig = SymmetricEigen::new(h.clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e} beyond clipping tolerance {tol:.1e}"
            )));
        }
        if min < 0.0 {
            let vals = eig.eigenvalues.map(|v| C64::new(v.max(0.0), 0.0));
            let q = &eig.eigenvectors;
            let mut m = q * CMat::from_diagonal(&vals) * q.adjoint();
            let tr = linalg::trace(&m).re;
            m /= C64::new(tr, 0.0);
            self.matrix = m;
        } else {
            self.matrix = h;
        }
        Ok(min)
    }
}

/// Tr(AB) without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

/// |n⟩⟨n| on a `dim`-level factor.
pub fn fock(dim: usize, n: usize) -> Result<CMat> {
    if n >= dim {
        return Err(Error::InvalidState(format!("Fock level {n} >= dim {dim}")));
    }
    let mut m = CMat::zeros(dim, dim);
    m[(n, n)] = C64::new(1.0, 0.0);
    Ok(m)
}

/// Truncated Bose–Einstein state with mean occupation `nbar`, renormalised.
pub fn thermal(dim: usize, nbar: f64) -> Result<CMat> {
    if nbar < 0.0 || !nbar.is_finite() {
        return Err(Error::InvalidState(format!("thermal occupation {nbar} invalid")));
    }
    let mut p: Vec<f64> = if nbar == 0.0 {
        let mut v = vec![0.0; dim];
        v[0] = 1.0;
        v
    } else {
        let q = nbar / (1.0 + nbar);
        (0..dim).map(|n| q.powi(n as i32)).collect()
    };
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    Ok(diag(&p))
}

/// Qubit-like state with excited population `p_e` on levels 0 and 1 and,
/// for `dim` > 2, Boltzmann-consistent populations on higher levels.
pub fn qubit_thermal(dim: usize, p_e: f64) -> Result<CMat> {
    if !(0.0..0.5).contains(&p_e) {
        return Err(Error::InvalidState(format!("qubit population {p_e} outside [0, 0.5)")));
    }
    let r = p_e / (1.0 - p_e);
    let mut p: Vec<f64> = (0..dim).map(|n| r.powi(n as i32)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    Ok(diag(&p))
}

pub fn diag(p: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(p.len(), p.iter().map(|&x| C64::new(x, 0.0))))
}

/// Displacement operator exp(αb† − α*b) evaluated on a padded truncation
/// and cut back to `dim` levels, so that low-lying columns are exact.
pub fn displacement(dim: usize, alpha: C64) -> Result<CMat> {
    let pad = dim + 30 + (6.0 * alpha.norm_sqr()).ceil() as usize;
    let b = annihilation(pad)?.into_matrix();
    let gen = b.adjoint() * alpha - &b * alpha.conj();
    let d = linalg::expm(&gen);
    Ok(d.view((0, 0), (dim, dim)).into_owned())
}

/// Coherent-state projector |α⟩⟨α| truncated to `dim` levels and renormalised.
pub fn coherent(dim: usize, alpha: C64) -> Result<CMat> {
    let d = displacement(dim, alpha)?;
    let mut v: CVec = d.column(0).into_owned();
    let nrm = v.norm();
    v.unscale_mut(nrm);
    Ok(&v * v.adjoint())
}
