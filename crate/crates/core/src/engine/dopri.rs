//! Dormand–Prince 5(4) with FSAL and standard step control, specialised to
//! density matrices.

use super::generator::Generator;
use crate::{CMat, Error, Result, C64};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Local error target relative to the requested tolerances; keeps the
/// accumulated global error over a segment near the requested level.
const TIGHTEN: f64 = 0.1;

#[derive(Clone, Copy, Debug)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

/// Adaptive integrator state carried across output points so the step size
/// persists between them.
pub struct Dopri<'a> {
    gen: &'a Generator,
    ctl: StepControl,
    h: Option<f64>,
    k1: Option<CMat>,
    pub steps: usize,
    pub rejected: usize,
}

fn axpy(acc: &mut CMat, a: f64, x: &CMat) {
    let s = C64::new(a, 0.0);
    for (o, v) in acc.iter_mut().zip(x.iter()) {
        *o += v * s;
    }
}

impl<'a> Dopri<'a> {
    pub fn new(gen: &'a Generator, ctl: StepControl) -> Self {
        Self {
            gen,
            ctl,
            h: None,
            k1: None,
            steps: 0,
            rejected: 0,
        }
    }

    fn err_norm(&self, err: &CMat, y0: &CMat, y1: &CMat) -> f64 {
        let mut s = 0.0;
        for ((e, a), b) in err.iter().zip(y0.iter()).zip(y1.iter()) {
            let sc = TIGHTEN * (self.ctl.atol + self.ctl.rtol * a.norm().max(b.norm()));
            s += (e.norm() / sc).powi(2);
        }
        (s / err.len() as f64).sqrt()
    }

    fn initial_step(&self, t: f64, y: &CMat, f0: &CMat) -> f64 {
        let scale = |m: &CMat| {
            let mut s = 0.0;
            for (v, yv) in m.iter().zip(y.iter()) {
                let sc = self.ctl.atol + self.ctl.rtol * yv.norm();
                s += (v.norm() / sc).powi(2);
            }
            (s / m.len() as f64).sqrt()
        };
        let d0 = scale(y);
        let d1 = scale(f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let mut y1 = y.clone();
        axpy(&mut y1, h0, f0);
        let mut f1 = CMat::zeros(y.nrows(), y.ncols());
        self.gen.rhs(t + h0, &y1, &mut f1);
        let d2 = scale(&(f1 - f0)) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    /// Advance `y` from `t0` to exactly `t1`.
    pub fn advance(&mut self, y: &mut CMat, t0: f64, t1: f64) -> Result<()> {
        let d = y.nrows();
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        let mut t = t0;
        let mut k1 = match self.k1.take() {
            Some(k) => k,
            None => {
                let mut k = CMat::zeros(d, d);
                self.gen.rhs(t, y, &mut k);
                k
            }
        };
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(t, y, &k1),
        };
        let mut ks: Vec<CMat> = (0..6).map(|_| CMat::zeros(d, d)).collect();
        let mut tmp = CMat::zeros(d, d);
        let mut ynew = CMat::zeros(d, d);
        let mut last_accepted_h = h;
        while t < t1 {
            let remaining = t1 - t;
            let landing = h >= remaining * (1.0 - 1e-12);
            let hs = if landing { remaining } else { h };
            if hs <= 1e-14 * t.abs().max(span) && !landing {
                return Err(Error::Integration(format!(
                    "step size underflow at t={t:.6e} s (h={hs:.3e} s, {} steps, {} rejected)",
                    self.steps, self.rejected
                )));
            }
            if self.steps + self.rejected > self.ctl.max_steps {
                return Err(Error::Integration(format!(
                    "step budget {} exhausted at t={t:.6e} s (h={hs:.3e} s)",
                    self.ctl.max_steps
                )));
            }
            // stages 2..7; ks[0..6] hold k2..k7
            let rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
            for (s, a) in rows.iter().enumerate() {
                tmp.copy_from(y);
                axpy(&mut tmp, hs * a[0], &k1);
                for (j, &aj) in a.iter().enumerate().skip(1) {
                    if aj != 0.0 {
                        axpy(&mut tmp, hs * aj, &ks[j - 1]);
                    }
                }
                let (_, rest) = ks.split_at_mut(s);
                self.gen.rhs(t + C[s + 1] * hs, &tmp, &mut rest[0]);
            }
            ynew.copy_from(y);
            axpy(&mut ynew, hs * B[0], &k1);
            for j in 1..6 {
                if B[j] != 0.0 {
                    axpy(&mut ynew, hs * B[j], &ks[j - 1]);
                }
            }
            {
                let (_, rest) = ks.split_at_mut(5);
                self.gen.rhs(t + hs, &ynew, &mut rest[0]);
            }
            tmp.fill(C64::new(0.0, 0.0));
            axpy(&mut tmp, hs * E[0], &k1);
            for j in 1..7 {
                if E[j] != 0.0 {
                    axpy(&mut tmp, hs * E[j], &ks[j - 1]);
                }
            }
            let err = self.err_norm(&tmp, y, &ynew);
            if !err.is_finite() {
                self.rejected += 1;
                h = hs * 0.2;
                continue;
            }
            if err <= 1.0 {
                t = if landing { t1 } else { t + hs };
                std::mem::swap(y, &mut ynew);
                std::mem::swap(&mut k1, &mut ks[5]);
                self.steps += 1;
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !landing {
                    last_accepted_h = hs;
                }
                h = hs * fac;
                if landing {
                    // Keep the pre-landing step so short output intervals
                    // do not shrink the step for the next span.
                    h = h.max(last_accepted_h);
                }
            } else {
                self.rejected += 1;
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
        }
        self.h = Some(h);
        self.k1 = Some(k1);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rabi_oscillation_accuracy() {
        // H = (Ω/2)σx on a qubit: P_e = sin²(Ωt/2).
        let om = 2.0 * std::f64::consts::PI * 1e6;
        let mut h = CMat::zeros(2, 2);
        h[(0, 1)] = C64::new(om / 2.0, 0.0);
        h[(1, 0)] = C64::new(om / 2.0, 0.0);
        let g = Generator::new(&h, None, &[]);
        let mut y = CMat::zeros(2, 2);
        y[(0, 0)] = C64::new(1.0, 0.0);
        let mut dp = Dopri::new(
            &g,
            StepControl {
                rtol: 1e-8,
                atol: 1e-10,
                max_steps: 100_000,
            },
        );
        let mut t = 0.0;
        for k in 1..=20 {
            let t1 = k as f64 * 0.137e-6;
            dp.advance(&mut y, t, t1).unwrap();
            t = t1;
            let want = (om * t / 2.0).sin().powi(2);
            assert!((y[(1, 1)].re - want).abs() < 1e-7, "{k}");
        }
    }
}
