//! Device parameters. All values SI: angular frequencies in rad/s, times in
//! s, energies E/h in Hz, capacitances in F.

use serde::{Deserialize, Serialize};

use crate::units::TWO_PI;
use crate::{Error, Result};

fn default_levels() -> usize {
    2
}

fn default_stark_pop() -> f64 {
    0.039
}

fn default_fock() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonSpec {
    /// Josephson energy E_J/h at maximum, Hz.
    pub ej_max: f64,
    /// Charging energy E_C/h, Hz.
    pub ec: f64,
    /// Current transition frequency, rad/s.
    pub omega_q: f64,
    /// Anharmonicity ω_ef − ω_ge, rad/s (negative for a transmon).
    pub anharmonicity: f64,
    pub t1: f64,
    pub t2_star: f64,
    /// Equilibrium excited-state population.
    pub thermal_pop: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Excited-state population while an ac-Stark tone is applied.
    #[serde(default = "default_stark_pop")]
    pub stark_thermal_pop: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechSpec {
    pub label: String,
    pub omega_m: f64,
    pub t1: f64,
    /// Ramsey coherence time; defaults to 2·T1 (no pure dephasing).
    #[serde(default)]
    pub t2_star: Option<f64>,
    /// Coupling per volt, rad/s/V.
    pub g0: f64,
    /// Motional capacitance, F.
    #[serde(default)]
    pub cm: f64,
    /// External coupling to a waveguide, rad/s.
    #[serde(default)]
    pub kappa_e: f64,
    /// Mean thermal phonon number.
    #[serde(default)]
    pub thermal_pop: f64,
    /// Qubit T1 when tuned near this mode (overrides the transmon value).
    #[serde(default)]
    pub qubit_t1: Option<f64>,
    /// Qubit T2* when tuned near this mode.
    #[serde(default)]
    pub qubit_t2_star: Option<f64>,
}

impl MechSpec {
    pub fn t2_star(&self) -> f64 {
        self.t2_star.unwrap_or(2.0 * self.t1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsSpec {
    pub label: String,
    /// Bias at which the defect crosses its mechanical mode, V.
    pub v0: f64,
    /// Tuning rate, Hz/V (signed).
    pub lambda: f64,
    /// Transverse coupling, rad/s.
    pub g_tls: f64,
    /// Longitudinal coupling, rad/s.
    #[serde(default)]
    pub g_tls_long: f64,
    pub gamma1: f64,
    #[serde(default)]
    pub gamma_phi: f64,
    /// Index of the mechanical mode the defect lives in.
    #[serde(default)]
    pub mode: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub transmon: TransmonSpec,
    #[serde(default)]
    pub mechanics: Vec<MechSpec>,
    #[serde(default)]
    pub tls: Vec<TlsSpec>,
    pub v_dc: f64,
    #[serde(default = "default_fock")]
    pub fock_dim: usize,
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::spec(field, format!("must be positive, got {v}")))
    }
}

impl TransmonSpec {
    pub fn validate(&self) -> Result<()> {
        positive("transmon.ec", self.ec)?;
        positive("transmon.ej_max", self.ej_max)?;
        positive("transmon.omega_q", self.omega_q)?;
        positive("transmon.t1", self.t1)?;
        positive("transmon.t2_star", self.t2_star)?;
        if self.t2_star > 2.0 * self.t1 * (1.0 + 1e-12) {
            return Err(Error::spec("transmon.t2_star", "exceeds 2·T1"));
        }
        for (name, p) in [
            ("transmon.thermal_pop", self.thermal_pop),
            ("transmon.stark_thermal_pop", self.stark_thermal_pop),
        ] {
            if !(0.0..0.5).contains(&p) {
                return Err(Error::spec(name, format!("must lie in [0, 0.5), got {p}")));
            }
        }
        if self.levels != 2 && self.levels != 3 {
            return Err(Error::spec("transmon.levels", "must be 2 or 3"));
        }
        if !self.anharmonicity.is_finite() {
            return Err(Error::spec("transmon.anharmonicity", "not finite"));
        }
        Ok(())
    }
}

impl MechSpec {
    pub fn validate(&self, i: usize) -> Result<()> {
        let f = |s: &str| format!("mechanics[{i}].{s}");
        positive(&f("omega_m"), self.omega_m)?;
        positive(&f("t1"), self.t1)?;
        if let Some(t2) = self.t2_star {
            positive(&f("t2_star"), t2)?;
            if t2 > 2.0 * self.t1 * (1.0 + 1e-12) {
                return Err(Error::spec(f("t2_star"), "exceeds 2·T1"));
            }
        }
        if !(self.g0 >= 0.0) {
            return Err(Error::spec(f("g0"), "must be non-negative"));
        }
        if !(self.cm >= 0.0) || !(self.kappa_e >= 0.0) {
            return Err(Error::spec(f("cm/kappa_e"), "must be non-negative"));
        }
        if !(self.thermal_pop >= 0.0) || !self.thermal_pop.is_finite() {
            return Err(Error::spec(f("thermal_pop"), "must be non-negative"));
        }
        for (name, v) in [("qubit_t1", self.qubit_t1), ("qubit_t2_star", self.qubit_t2_star)] {
            if let Some(v) = v {
                positive(&f(name), v)?;
            }
        }
        if self.label.is_empty() || self.label == "qubit" {
            return Err(Error::spec(f("label"), "must be non-empty and not `qubit`"));
        }
        Ok(())
    }
}

impl TlsSpec {
    pub fn validate(&self, i: usize, n_mech: usize) -> Result<()> {
        let f = |s: &str| format!("tls[{i}].{s}");
        positive(&f("gamma1"), self.gamma1)?;
        if !(self.gamma_phi >= 0.0) {
            return Err(Error::spec(f("gamma_phi"), "must be non-negative"));
        }
        if self.mode >= n_mech {
            return Err(Error::spec(
                f("mode"),
                format!("refers to missing mechanics mode {}", self.mode),
            ));
        }
        if !self.lambda.is_finite() || !self.v0.is_finite() || !self.g_tls.is_finite() {
            return Err(Error::spec(f("v0/lambda/g_tls"), "not finite"));
        }
        Ok(())
    }
}

impl DeviceSpec {
    pub fn validate(&self) -> Result<()> {
        self.transmon.validate()?;
        for (i, m) in self.mechanics.iter().enumerate() {
            m.validate(i)?;
        }
        for (i, t) in self.tls.iter().enumerate() {
            t.validate(i, self.mechanics.len())?;
        }
        let mut labels: Vec<&str> = self.mechanics.iter().map(|m| m.label.as_str()).collect();
        labels.extend(self.tls.iter().map(|t| t.label.as_str()));
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::spec("labels", "mechanics and TLS labels must be unique"));
        }
        if !(self.v_dc >= 0.0) {
            return Err(Error::spec("v_dc", "must be non-negative"));
        }
        if self.fock_dim < 2 {
            return Err(Error::spec("fock_dim", "must be at least 2"));
        }
        Ok(())
    }

    pub fn mech_index(&self, label: &str) -> Result<usize> {
        self.mechanics
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Coupling of mechanics mode `i` at the current bias.
    pub fn g_em(&self, i: usize) -> f64 {
        super::circuit::g_em(&self.mechanics[i], self.v_dc)
    }

    /// Transition frequency of defect `i` at the current bias, rad/s.
    pub fn tls_omega(&self, i: usize) -> f64 {
        let t = &self.tls[i];
        self.mechanics[t.mode].omega_m + TWO_PI * t.lambda * (self.v_dc - t.v0)
    }

    /// Copy keeping a single mechanics mode (and optionally its defects).
    pub fn select(&self, mech: &str, keep_tls: bool) -> Result<DeviceSpec> {
        let i = self.mech_index(mech)?;
        let tls = if keep_tls {
            self.tls
                .iter()
                .filter(|t| t.mode == i)
                .cloned()
                .map(|mut t| {
                    t.mode = 0;
                    t
                })
                .collect()
        } else {
            Vec::new()
        };
        let m = &self.mechanics[i];
        let mut transmon = self.transmon.clone();
        if let Some(t1) = m.qubit_t1 {
            transmon.t1 = t1;
        }
        if let Some(t2) = m.qubit_t2_star {
            transmon.t2_star = t2;
        }
        transmon.validate()?;
        Ok(DeviceSpec {
            transmon,
            mechanics: vec![self.mechanics[i].clone()],
            tls,
            v_dc: self.v_dc,
            fock_dim: self.fock_dim,
        })
    }
}

/// Mechanical bath temperature of the reference device, K.
pub const REFERENCE_MECH_TEMPERATURE: f64 = 0.072;

impl DeviceSpec {
    /// The characterised two-mode device: transmon at 5.1071 GHz (60 mK
    /// residual population), modes A and B at 50 V with a 72 mK bath.
    pub fn reference() -> Self {
        use crate::units::hz;
        DeviceSpec {
            transmon: TransmonSpec {
                ej_max: 15.9e9,
                ec: 0.226e9,
                omega_q: hz(5.1071e9),
                anharmonicity: hz(-226e6),
                t1: 1.7e-6,
                t2_star: 1.3e-6,
                thermal_pop: 0.0166,
                levels: 2,
                stark_thermal_pop: 0.039,
            },
            mechanics: vec![
                MechSpec {
                    label: "A".into(),
                    omega_m: hz(4.9176e9),
                    t1: 19.3e-3,
                    t2_star: Some(64e-6),
                    g0: hz(4.0e3),
                    cm: 0.15e-15,
                    kappa_e: 0.0,
                    thermal_pop: crate::units::bose(hz(4.9176e9), REFERENCE_MECH_TEMPERATURE),
                    qubit_t1: Some(1.70e-6),
                    qubit_t2_star: Some(1.30e-6),
                },
                MechSpec {
                    label: "B".into(),
                    omega_m: hz(4.7667e9),
                    t1: 21.1e-3,
                    t2_star: Some(67e-6),
                    g0: hz(4.6e3),
                    cm: 0.15e-15,
                    kappa_e: 0.0,
                    thermal_pop: crate::units::bose(hz(4.7667e9), REFERENCE_MECH_TEMPERATURE),
                    qubit_t1: Some(1.55e-6),
                    qubit_t2_star: Some(1.05e-6),
                },
            ],
            tls: vec![],
            v_dc: 50.0,
            fock_dim: 5,
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Reference device with cold mechanics and a small Fock space.
    pub fn device() -> DeviceSpec {
        let mut d = DeviceSpec::reference();
        for m in &mut d.mechanics {
            m.thermal_pop = 0.0;
        }
        d.fock_dim = 4;
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_valid() {
        fixtures::device().validate().unwrap();
    }

    #[test]
    fn rejects_t2_above_2t1() {
        let mut d = fixtures::device();
        d.transmon.t2_star = 4e-6;
        match d.validate() {
            Err(Error::InvalidSpec { field, .. }) => assert_eq!(field, "transmon.t2_star"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tls_frequency_linear_in_bias() {
        let mut d = fixtures::device();
        d.tls.push(TlsSpec {
            label: "t0".into(),
            v0: 37.0,
            lambda: 0.3e9,
            g_tls: hz(0.5e6),
            g_tls_long: 0.0,
            gamma1: 2500.0,
            gamma_phi: 0.0,
            mode: 0,
        });
        d.v_dc = 37.0;
        let w0 = d.tls_omega(0);
        assert_eq!(w0, d.mechanics[0].omega_m);
        d.v_dc = 37.01;
        let w1 = d.tls_omega(0);
        assert!(((w1 - w0) / 0.01 / (TWO_PI * 0.3e9) - 1.0).abs() < 1e-6);
    }

    use crate::units::hz;
}
