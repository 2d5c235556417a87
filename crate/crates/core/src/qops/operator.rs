use std::ops::{Add, Mul, Sub};

use super::linalg;
use super::space::CompositeSpace;
use crate::{CMat, Error, Result, C64};

/// A square operator on a composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: CompositeSpace,
    matrix: CMat,
}

impl Operator {
    pub fn new(space: CompositeSpace, matrix: CMat) -> Result<Self> {
        let n = space.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { space, matrix })
    }

    /// Local operator on an anonymous single factor.
    pub fn local(matrix: CMat) -> Result<Self> {
        let space = CompositeSpace::single("local", matrix.nrows())?;
        Self::new(space, matrix)
    }

    pub fn identity(space: &CompositeSpace) -> Self {
        let n = space.dim();
        Self {
            space: space.clone(),
            matrix: CMat::identity(n, n),
        }
    }

    pub fn zeros(space: &CompositeSpace) -> Self {
        let n = space.dim();
        Self {
            space: space.clone(),
            matrix: CMat::zeros(n, n),
        }
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

    pub fn dagger(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.scale(s),
        }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self {
            space: self.space.clone(),
            matrix: &self.matrix * s,
        }
    }

    pub fn hermitian_deviation(&self) -> f64 {
        linalg::hermitian_deviation(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: linalg::commutator(&self.matrix, &other.matrix),
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr for &Operator {
            type Output = Operator;
            /// Panics on mismatched spaces; use the `try_` methods to recover.
            fn $f(self, rhs: &Operator) -> Operator {
                assert_eq!(self.space, rhs.space, "operator space mismatch");
                Operator {
                    space: self.space.clone(),
                    matrix: &self.matrix $op &rhs.matrix,
                }
            }
        }
        impl $tr for Operator {
            type Output = Operator;
            fn $f(self, rhs: Operator) -> Operator {
                (&self).$f(&rhs)
            }
        }
    };
}
binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

fn ladder(dim: usize, name: &str) -> Result<CMat> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("{name} needs dim >= 2, got {dim}")));
    }
    let mut m = CMat::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(m)
}

/// Truncated bosonic lowering operator, ⟨n−1|b|n⟩ = √n.
pub fn annihilation(dim: usize) -> Result<Operator> {
    Operator::local(ladder(dim, "annihilation")?)
}

pub fn creation(dim: usize) -> Result<Operator> {
    Ok(annihilation(dim)?.dagger())
}

pub fn number(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("number needs dim >= 2, got {dim}")));
    }
    Operator::local(CMat::from_diagonal(&nalgebra::DVector::from_fn(dim, |n, _| {
        C64::new(n as f64, 0.0)
    })))
}

/// |i⟩⟨j| on a `dim`-level system.
pub fn transition(dim: usize, i: usize, j: usize) -> Result<Operator> {
    if i >= dim || j >= dim {
        return Err(Error::InvalidDimension(format!(
            "transition |{i}><{j}| outside dimension {dim}"
        )));
    }
    let mut m = CMat::zeros(dim, dim);
    m[(i, j)] = C64::new(1.0, 0.0);
    Operator::local(m)
}

/// Pauli matrices in the basis (|0⟩, |1⟩).
pub fn pauli_x() -> Operator {
    let mut m = CMat::zeros(2, 2);
    m[(0, 1)] = C64::new(1.0, 0.0);
    m[(1, 0)] = C64::new(1.0, 0.0);
    Operator::local(m).expect("2x2")
}

pub fn pauli_y() -> Operator {
    let mut m = CMat::zeros(2, 2);
    m[(0, 1)] = C64::new(0.0, -1.0);
    m[(1, 0)] = C64::new(0.0, 1.0);
    Operator::local(m).expect("2x2")
}

pub fn pauli_z() -> Operator {
    let mut m = CMat::zeros(2, 2);
    m[(0, 0)] = C64::new(1.0, 0.0);
    m[(1, 1)] = C64::new(-1.0, 0.0);
    Operator::local(m).expect("2x2")
}

/// Physical qubit z operator with basis index = excitation number, so
/// σz|e⟩ = +|e⟩ for |e⟩ = |1⟩.
pub fn sigma_z_excitation(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("sigma_z needs dim >= 2, got {dim}")));
    }
    let mut m = CMat::zeros(dim, dim);
    m[(0, 0)] = C64::new(-1.0, 0.0);
    m[(1, 1)] = C64::new(1.0, 0.0);
    Operator::local(m)
}

/// Place a local operator on factor `target` with identities elsewhere.
pub fn embed(op: &Operator, space: &CompositeSpace, target: &str) -> Result<Operator> {
    let k = space.index_of(target)?;
    let d = space.dims()[k];
    if op.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: op.dim(),
        });
    }
    let before: usize = space.dims()[..k].iter().product();
    let after: usize = space.dims()[k + 1..].iter().product();
    let mut m = op.matrix.clone();
    if after > 1 {
        m = linalg::kron(&m, &CMat::identity(after, after));
    }
    if before > 1 {
        m = linalg::kron(&CMat::identity(before, before), &m);
    }
    Operator::new(space.clone(), m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_entries() {
        let b = annihilation(2).unwrap();
        assert_eq!(b.matrix()[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(b.matrix()[(1, 0)], C64::new(0.0, 0.0));
        let b3 = annihilation(3).unwrap();
        assert!((b3.matrix()[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(annihilation(1), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn commutator_has_corner_defect() {
        let d = 6;
        let b = annihilation(d).unwrap();
        let c = b.commutator(&b.dagger()).unwrap();
        for i in 0..d {
            for j in 0..d {
                let want = match (i == j, i) {
                    (true, i) if i == d - 1 => -((d - 1) as f64),
                    (true, _) => 1.0,
                    _ => 0.0,
                };
                assert!((c.matrix()[(i, j)].re - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn number_diagonal() {
        let b = annihilation(7).unwrap();
        let n = &b.dagger() * &b;
        assert!((n.matrix() - number(7).unwrap().matrix()).norm() < 1e-12);
    }

    #[test]
    fn embed_pauli_z_qubit_outer() {
        let s = CompositeSpace::new([("qubit", 2), ("mech", 3)]).unwrap();
        let z = embed(&pauli_z(), &s, "qubit").unwrap();
        let diag: Vec<f64> = z.matrix().diagonal().iter().map(|c| c.re).collect();
        assert_eq!(diag, vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        assert!(z.hermitian_deviation() == 0.0);
    }

    #[test]
    fn embed_identity_and_commuting_factors() {
        let s = CompositeSpace::new([("qubit", 2), ("mech", 3)]).unwrap();
        let id = embed(&Operator::local(CMat::identity(3, 3)).unwrap(), &s, "mech").unwrap();
        assert_eq!(id, Operator::identity(&s));
        let b = embed(&annihilation(3).unwrap(), &s, "mech").unwrap();
        let sp = embed(&transition(2, 1, 0).unwrap(), &s, "qubit").unwrap();
        assert_eq!(&b * &sp, &sp * &b);
    }

    #[test]
    fn embed_errors() {
        let s = CompositeSpace::new([("qubit", 2), ("mech", 3)]).unwrap();
        assert!(matches!(
            embed(&pauli_z(), &s, "mech"),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(embed(&pauli_z(), &s, "tls"), Err(Error::UnknownLabel(_))));
    }
}
