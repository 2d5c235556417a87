//! Lindblad generator: right-hand side for the integrator and the dense
//! Liouvillian for exponential propagation.

use serde::{Deserialize, Serialize};

use crate::{CMat, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Envelope {
    Constant,
    /// Gaussian centred at `center` (relative to segment start), cut to
    /// zero beyond ±2σ.
    Gaussian {
        sigma: f64,
        center: f64,
    },
}

impl Envelope {
    /// Gaussian filling a segment of length 4σ.
    pub fn gaussian_for(duration: f64) -> Self {
        Envelope::Gaussian {
            sigma: duration / 4.0,
            center: duration / 2.0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => 1.0,
            Envelope::Gaussian { sigma, center } => {
                let x = (t - center) / sigma;
                if x.abs() > 2.0 {
                    0.0
                } else {
                    (-0.5 * x * x).exp()
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Envelope::Constant)
    }
}

/// Sparse jump operator with its rate folded in (√γ·L).
#[derive(Clone, Debug)]
struct Jump {
    entries: Vec<(usize, usize, C64)>,
}

#[derive(Clone, Debug)]
pub struct Generator {
    d: usize,
    /// −i·H_eff with H_eff = H − (i/2)Σγ L†L.
    a0: CMat,
    /// −i·Ω·D for a time-dependent drive.
    drive: Option<(CMat, Envelope)>,
    jumps: Vec<Jump>,
    dense_jumps: Vec<CMat>,
    norm: f64,
}

impl Generator {
    /// `h`: static Hamiltonian. `drive`: (operator, amplitude, envelope).
    /// `collapse`: (L, γ).
    pub fn new(h: &CMat, drive: Option<(&CMat, f64, Envelope)>, collapse: &[(&CMat, f64)]) -> Self {
        let d = h.nrows();
        let mut heff = h.clone();
        let mut td = None;
        if let Some((op, amp, env)) = drive {
            if env.is_constant() {
                heff += op * C64::new(amp, 0.0);
            } else {
                td = Some((op * C64::new(0.0, -amp), env));
            }
        }
        let mut jumps = Vec::new();
        let mut dense_jumps = Vec::new();
        for &(l, rate) in collapse {
            if rate == 0.0 {
                continue;
            }
            heff -= (l.adjoint() * l) * C64::new(0.0, 0.5 * rate);
            let s = rate.sqrt();
            let mut entries = Vec::new();
            for j in 0..d {
                for i in 0..d {
                    let v = l[(i, j)];
                    if v != C64::new(0.0, 0.0) {
                        entries.push((i, j, v * s));
                    }
                }
            }
            dense_jumps.push(l * C64::new(s, 0.0));
            jumps.push(Jump { entries });
        }
        let a0 = heff * C64::new(0.0, -1.0);
        let mut norm = crate::qops::linalg::norm1(&a0);
        if let Some((dm, _)) = &td {
            norm += crate::qops::linalg::norm1(dm);
        }
        for j in &jumps {
            norm += j.entries.iter().map(|e| e.2.norm_sqr()).sum::<f64>();
        }
        Self {
            d,
            a0,
            drive: td,
            jumps,
            dense_jumps,
            norm,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_time_dependent(&self) -> bool {
        self.drive.is_some()
    }

    /// Rough bound on the generator's spectral radius.
    pub fn rate_scale(&self) -> f64 {
        self.norm
    }

    /// dρ/dt at time `t` (relative to segment start), written into `out`.
    pub fn rhs(&self, t: f64, rho: &CMat, out: &mut CMat) {
        let d = self.d;
        // Density matrices take the Hermitian shortcut Aρ + (Aρ)†, applied to
        // the Hermitian part so roundoff cannot grow in the anti-Hermitian
        // one. Coherence blocks (non-Hermitian) get the general form.
        let hermitian = crate::qops::linalg::hermitian_deviation(rho) <= 1e-10 * rho.camax();
        let sym;
        let rho = if hermitian {
            sym = crate::qops::linalg::hermitize(rho);
            &sym
        } else {
            rho
        };
        let mut a_rho = &self.a0 * rho;
        if let Some((dm, env)) = &self.drive {
            let e = env.value(t);
            if e != 0.0 {
                a_rho += (dm * rho) * C64::new(e, 0.0);
            }
        }
        if hermitian {
            for j in 0..d {
                for i in 0..d {
                    out[(i, j)] = a_rho[(i, j)] + a_rho[(j, i)].conj();
                }
            }
        } else {
            let mut rho_a = rho * self.a0.adjoint();
            if let Some((dm, env)) = &self.drive {
                let e = env.value(t);
                if e != 0.0 {
                    rho_a += (rho * dm.adjoint()) * C64::new(e, 0.0);
                }
            }
            out.copy_from(&(a_rho + rho_a));
        }
        let mut m = CMat::zeros(d, d);
        for jump in &self.jumps {
            // M = Lρ, then out += M L†.
            m.fill(C64::new(0.0, 0.0));
            for &(i, k, v) in &jump.entries {
                for c in 0..d {
                    m[(i, c)] += v * rho[(k, c)];
                }
            }
            for &(j, k, v) in &jump.entries {
                let vc = v.conj();
                for r in 0..d {
                    out[(r, j)] += m[(r, k)] * vc;
                }
            }
        }
        if hermitian {
            for j in 0..d {
                for i in 0..j {
                    let v = 0.5 * (out[(i, j)] + out[(j, i)].conj());
                    out[(i, j)] = v;
                    out[(j, i)] = v.conj();
                }
                out[(j, j)].im = 0.0;
            }
        }
    }

    /// Dense Liouvillian acting on column-stacked vec(ρ). Only valid for a
    /// time-independent generator.
    pub fn liouvillian(&self) -> CMat {
        assert!(self.drive.is_none(), "Liouvillian of a time-dependent generator");
        let d = self.d;
        let id = CMat::identity(d, d);
        // vec(AXB) = (Bᵀ ⊗ A) vec(X)
        let mut l = id.kronecker(&self.a0) + self.a0.conjugate().kronecker(&id);
        for lj in &self.dense_jumps {
            l += lj.conjugate().kronecker(lj);
        }
        l
    }
}

pub fn vectorize(rho: &CMat) -> crate::CVec {
    crate::CVec::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &crate::CVec, d: usize) -> CMat {
    CMat::from_column_slice(d, d, v.as_slice())
}

/// Superoperator of ρ ↦ UρU† on vec(ρ).
pub fn unitary_superop(u: &CMat) -> CMat {
    u.conjugate().kronecker(u)
}
