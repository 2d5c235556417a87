//! TOML run configuration. Physical values are numbers in SI base units or
//! strings with a unit suffix ("5.1 GHz", "1.7 us", "60 mK"); they are
//! normalised here so the library only sees SI.

use std::collections::BTreeSet;
use std::fmt;

use cqad::model::{DeviceSpec, MechSpec, TlsSpec, TransmonSpec};
use cqad::units::{bose, hz, two_level_population};
use serde::Deserialize;

/// A user-facing configuration problem (exit status 2).
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub type CfgResult<T> = std::result::Result<T, Invalid>;

fn invalid<T>(msg: impl Into<String>) -> CfgResult<T> {
    Err(Invalid(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim {
    Time,
    Frequency,
    FrequencyPerVolt,
    Temperature,
    Voltage,
    Capacitance,
    // No device field is an inductance yet; kept so "pH" parses like the rest.
    #[allow(dead_code)]
    Inductance,
    Rate,
}

impl Dim {
    /// Suffixes with their power of ten.
    fn units(self) -> &'static [(&'static str, i32)] {
        match self {
            Dim::Time => &[("s", 0), ("ms", -3), ("us", -6), ("µs", -6), ("ns", -9)],
            Dim::Frequency => &[("Hz", 0), ("kHz", 3), ("MHz", 6), ("GHz", 9)],
            Dim::FrequencyPerVolt => &[("Hz/V", 0), ("kHz/V", 3), ("MHz/V", 6), ("GHz/V", 9)],
            Dim::Temperature => &[("K", 0), ("mK", -3), ("uK", -6)],
            Dim::Voltage => &[("V", 0), ("mV", -3)],
            Dim::Capacitance => &[("F", 0), ("pF", -12), ("fF", -15), ("aF", -18)],
            Dim::Inductance => &[("H", 0), ("nH", -9), ("pH", -12)],
            Dim::Rate => &[("1/s", 0), ("/s", 0)],
        }
    }

    /// Physical durations, temperatures and rates cannot be negative.
    fn non_negative(self) -> bool {
        matches!(
            self,
            Dim::Time | Dim::Temperature | Dim::Rate | Dim::Capacitance | Dim::Inductance
        )
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Quantity {
    Num(f64),
    Text(String),
}

impl Quantity {
    /// Value in SI base units. Frequencies stay in Hz here.
    pub fn si(&self, field: &str, dim: Dim) -> CfgResult<f64> {
        let v = match self {
            Quantity::Num(v) => *v,
            Quantity::Text(s) => parse_with_unit(s.trim(), dim)
                .ok_or_else(|| Invalid(format!("`{field}`: cannot read \"{s}\" as a {dim:?} value")))?,
        };
        if !v.is_finite() {
            return invalid(format!("`{field}`: value must be finite"));
        }
        if dim.non_negative() && v < 0.0 {
            return invalid(format!("`{field}`: must not be negative, got {v}"));
        }
        Ok(v)
    }

    /// Angular frequency (rad/s) from a value given in Hz.
    pub fn omega(&self, field: &str) -> CfgResult<f64> {
        Ok(hz(self.si(field, Dim::Frequency)?))
    }
}

fn parse_with_unit(s: &str, dim: Dim) -> Option<f64> {
    // Longest suffix first so "mK" wins over "K".
    let mut units: Vec<_> = dim.units().to_vec();
    units.sort_by_key(|(u, _)| std::cmp::Reverse(u.len()));
    for (u, exp) in units {
        if let Some(num) = s.strip_suffix(u) {
            let num = num.trim_end();
            if num.is_empty() {
                return None;
            }
            // Dividing by an exact power of ten keeps "1.7 us" == 1.7e-6.
            let p = 10f64.powi(exp.abs());
            return num.parse::<f64>().ok().map(|v| if exp < 0 { v / p } else { v * p });
        }
    }
    s.parse::<f64>().ok()
}

/// `count` points from `start` to `stop` inclusive.
#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct Range {
    pub start: Quantity,
    pub stop: Quantity,
    pub count: usize,
}

impl Range {
    pub fn values(&self, field: &str, dim: Dim) -> CfgResult<Vec<f64>> {
        let a = self.start.si(&format!("{field}.start"), dim)?;
        let b = self.stop.si(&format!("{field}.stop"), dim)?;
        match self.count {
            0 => invalid(format!("`{field}.count` must be at least 1")),
            1 => Ok(vec![a]),
            n => Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()),
        }
    }
}

fn range(start: f64, stop: f64, count: usize) -> Range {
    Range {
        start: Quantity::Num(start),
        stop: Quantity::Num(stop),
        count,
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct TransmonCfg {
    pub ej_max: Quantity,
    pub ec: Quantity,
    pub freq: Quantity,
    pub anharmonicity: Quantity,
    pub t1: Quantity,
    pub t2_star: Quantity,
    pub temperature: Option<Quantity>,
    pub thermal_pop: Option<f64>,
    pub levels: Option<usize>,
    pub stark_thermal_pop: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct MechCfg {
    pub label: String,
    pub freq: Quantity,
    pub t1: Quantity,
    pub t2_star: Option<Quantity>,
    /// Coupling per volt, Hz/V.
    pub g0: Quantity,
    pub cm: Option<Quantity>,
    pub kappa_e: Option<Quantity>,
    pub temperature: Option<Quantity>,
    pub thermal_pop: Option<f64>,
    pub qubit_t1: Option<Quantity>,
    pub qubit_t2_star: Option<Quantity>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct TlsCfg {
    pub label: String,
    pub v0: Quantity,
    pub lambda: Quantity,
    pub g_tls: Quantity,
    pub g_tls_long: Option<Quantity>,
    pub gamma1: Quantity,
    pub gamma_phi: Option<Quantity>,
    /// Label of the host mode; the first mode when absent.
    pub mode: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct DeviceCfg {
    pub v_dc: Quantity,
    pub fock_dim: Option<usize>,
    pub transmon: TransmonCfg,
    #[serde(default)]
    pub mechanics: Vec<MechCfg>,
    #[serde(default)]
    pub tls: Vec<TlsCfg>,
}

fn opt_si(q: &Option<Quantity>, field: &str, dim: Dim) -> CfgResult<Option<f64>> {
    q.as_ref().map(|q| q.si(field, dim)).transpose()
}

impl DeviceCfg {
    pub fn to_spec(&self) -> CfgResult<DeviceSpec> {
        let t = &self.transmon;
        let omega_q = t.freq.omega("device.transmon.freq")?;
        let thermal_pop = match (&t.temperature, t.thermal_pop) {
            (Some(_), Some(_)) => {
                return invalid("`device.transmon`: give either `temperature` or `thermal_pop`, not both")
            }
            (Some(q), None) => two_level_population(omega_q, q.si("device.transmon.temperature", Dim::Temperature)?),
            (None, Some(p)) => p,
            (None, None) => 0.0,
        };
        let transmon = TransmonSpec {
            ej_max: t.ej_max.si("device.transmon.ej_max", Dim::Frequency)?,
            ec: t.ec.si("device.transmon.ec", Dim::Frequency)?,
            omega_q,
            anharmonicity: t.anharmonicity.omega("device.transmon.anharmonicity")?,
            t1: t.t1.si("device.transmon.t1", Dim::Time)?,
            t2_star: t.t2_star.si("device.transmon.t2_star", Dim::Time)?,
            thermal_pop,
            levels: t.levels.unwrap_or(2),
            stark_thermal_pop: t.stark_thermal_pop.unwrap_or(0.039),
        };
        let mut mechanics = Vec::new();
        for (i, m) in self.mechanics.iter().enumerate() {
            let f = |k: &str| format!("device.mechanics[{i}].{k}");
            let omega_m = m.freq.omega(&f("freq"))?;
            let thermal_pop = match (&m.temperature, m.thermal_pop) {
                (Some(_), Some(_)) => {
                    return invalid(format!("`{}`: give either `temperature` or `thermal_pop`", f("")))
                }
                (Some(q), None) => bose(omega_m, q.si(&f("temperature"), Dim::Temperature)?),
                (None, Some(p)) => p,
                (None, None) => 0.0,
            };
            mechanics.push(MechSpec {
                label: m.label.clone(),
                omega_m,
                t1: m.t1.si(&f("t1"), Dim::Time)?,
                t2_star: opt_si(&m.t2_star, &f("t2_star"), Dim::Time)?,
                g0: hz(m.g0.si(&f("g0"), Dim::FrequencyPerVolt)?),
                cm: opt_si(&m.cm, &f("cm"), Dim::Capacitance)?.unwrap_or(0.0),
                kappa_e: opt_si(&m.kappa_e, &f("kappa_e"), Dim::Frequency)?
                    .map(hz)
                    .unwrap_or(0.0),
                thermal_pop,
                qubit_t1: opt_si(&m.qubit_t1, &f("qubit_t1"), Dim::Time)?,
                qubit_t2_star: opt_si(&m.qubit_t2_star, &f("qubit_t2_star"), Dim::Time)?,
            });
        }
        let mut tls = Vec::new();
        for (i, d) in self.tls.iter().enumerate() {
            let f = |k: &str| format!("device.tls[{i}].{k}");
            let mode = match &d.mode {
                None => 0,
                Some(l) => mechanics
                    .iter()
                    .position(|m| &m.label == l)
                    .ok_or_else(|| Invalid(format!("`{}`: no mechanics mode `{l}`", f("mode"))))?,
            };
            tls.push(TlsSpec {
                label: d.label.clone(),
                v0: d.v0.si(&f("v0"), Dim::Voltage)?,
                lambda: d.lambda.si(&f("lambda"), Dim::FrequencyPerVolt)?,
                g_tls: d.g_tls.omega(&f("g_tls"))?,
                g_tls_long: opt_si(&d.g_tls_long, &f("g_tls_long"), Dim::Frequency)?
                    .map(hz)
                    .unwrap_or(0.0),
                gamma1: d.gamma1.si(&f("gamma1"), Dim::Rate)?,
                gamma_phi: opt_si(&d.gamma_phi, &f("gamma_phi"), Dim::Rate)?.unwrap_or(0.0),
                mode,
            });
        }
        let spec = DeviceSpec {
            transmon,
            mechanics,
            tls,
            v_dc: self.v_dc.si("device.v_dc", Dim::Voltage)?,
            fock_dim: self.fock_dim.unwrap_or(5),
        };
        spec.validate().map_err(|e| Invalid(format!("device: {e}")))?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct OutputCfg {
    pub dir: Option<String>,
    pub format: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct RabiCfg {
    pub mech: Option<String>,
    pub duration: Option<Quantity>,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct LifetimeCfg {
    pub mech: Option<String>,
    pub delays: Option<Range>,
    pub park_detuning: Option<Quantity>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct CoherenceCfg {
    pub mech: Option<String>,
    /// "ramsey", "echo" or "cp".
    pub kind: Option<String>,
    pub cp_pulses: Option<usize>,
    pub delays: Option<Range>,
    pub detuning: Option<Quantity>,
    pub park_detuning: Option<Quantity>,
    pub shots: Option<usize>,
    /// "qubit_half_pi_swap" or "pi_half_swap".
    pub pulse: Option<String>,
    /// Piecewise-constant step for exact evaluation; factorised when absent.
    pub exact_dt: Option<Quantity>,
    /// Average over the `[noise]` model.
    pub with_noise: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct ThermometryCfg {
    /// "qubit" or a mechanics label.
    pub target: Option<String>,
    pub rabi_amplitude: Option<Quantity>,
    pub duration: Option<Quantity>,
    pub samples: Option<usize>,
    pub stark_population: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct StarkCfg {
    pub mech: Option<String>,
    pub detuning: Option<Quantity>,
    pub fringe: Option<Quantity>,
    /// Thermal occupation of the mode at the first delay.
    pub initial_phonons: Option<f64>,
    pub delays: Option<Range>,
    pub anharmonic: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct SpectroscopyCfg {
    /// "qubit_freq" or "voltage".
    pub control: Option<String>,
    pub control_range: Option<Range>,
    pub probe: Option<Range>,
    pub amplitude: Option<Quantity>,
    /// Keep only this mode (and its defects).
    pub mech: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct TomographyCfg {
    pub mech: Option<String>,
    pub fock: Option<usize>,
    pub radii: Option<usize>,
    pub r_max: Option<f64>,
    pub resamples: Option<usize>,
    pub shots: Option<usize>,
    pub basis_fock: Option<usize>,
    pub pad_dim: Option<usize>,
    pub recon_fock: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct NoiseCfg {
    /// "ensemble" or "telegrapher".
    pub model: Option<String>,
    pub xi: Option<Quantity>,
    pub gamma_min: Option<Quantity>,
    pub gamma_max: Option<Quantity>,
    pub members: Option<usize>,
    /// Telegrapher half-splitting, Hz.
    pub nu: Option<Quantity>,
    pub gamma: Option<Quantity>,
    pub times: Option<Range>,
    pub trajectories: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct FitCfg {
    pub input: Option<String>,
    pub x: Option<String>,
    pub y: Option<String>,
    /// exp_decay, gauss_decay, fringes, linear, crossing, lorentzian_psd, power_law
    pub model: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Config {
    pub seed: Option<u64>,
    pub device: DeviceCfg,
    #[serde(default)]
    pub output: OutputCfg,
    #[serde(default)]
    pub rabi: RabiCfg,
    #[serde(default)]
    pub lifetime: LifetimeCfg,
    #[serde(default)]
    pub coherence: CoherenceCfg,
    #[serde(default)]
    pub thermometry: ThermometryCfg,
    #[serde(default)]
    pub stark: StarkCfg,
    #[serde(default)]
    pub spectroscopy: SpectroscopyCfg,
    #[serde(default)]
    pub tomography: TomographyCfg,
    #[serde(default)]
    pub noise: NoiseCfg,
    #[serde(default)]
    pub fit: FitCfg,
}

pub fn default_delays(start: f64, stop: f64, count: usize) -> Range {
    range(start, stop, count)
}

/// Applies `a.b.c=value` overrides. Values are read as TOML literals and
/// fall back to plain strings ("5 MHz").
pub fn apply_override(doc: &mut toml::Table, spec: &str) -> CfgResult<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Invalid(format!("override `{spec}` is not key=value")))?;
    let value = parse_literal(raw.trim());
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return invalid(format!("override key `{key}` is malformed"));
    }
    let mut cur = doc;
    for p in &parts[..parts.len() - 1] {
        let (name, idx) = split_index(p)?;
        let entry = cur
            .entry(name.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let node = match idx {
            None => entry,
            Some(i) => entry
                .as_array_mut()
                .and_then(|a| a.get_mut(i))
                .ok_or_else(|| Invalid(format!("override `{key}`: no element {i} in `{name}`")))?,
        };
        cur = node
            .as_table_mut()
            .ok_or_else(|| Invalid(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn split_index(p: &str) -> CfgResult<(&str, Option<usize>)> {
    match p.split_once('[') {
        None => Ok((p, None)),
        Some((name, rest)) => {
            let i = rest
                .strip_suffix(']')
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Invalid(format!("bad index in `{p}`")))?;
            Ok((name, Some(i)))
        }
    }
}

pub fn parse_literal(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Deserialises the document, rejecting every key no field consumes.
pub fn from_table(doc: &toml::Table) -> CfgResult<Config> {
    let mut unknown = BTreeSet::new();
    let de = toml::Value::Table(doc.clone());
    let cfg: Config = serde_ignored::deserialize(de, |path| {
        unknown.insert(path.to_string());
    })
    .map_err(|e| Invalid(format!("config: {e}")))?;
    if !unknown.is_empty() {
        let list: Vec<String> = unknown.into_iter().collect();
        return invalid(format!("unknown config keys: {}", list.join(", ")));
    }
    Ok(cfg)
}

pub fn parse_document(text: &str) -> CfgResult<toml::Table> {
    text.parse::<toml::Table>()
        .map_err(|e| Invalid(format!("config is not valid TOML: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_suffixes() {
        let q = |s: &str| Quantity::Text(s.into());
        assert_eq!(q("1.7 us").si("t", Dim::Time).unwrap(), 1.7e-6);
        assert_eq!(q("60mK").si("t", Dim::Temperature).unwrap(), 0.060);
        assert_eq!(q("0.3 GHz/V").si("l", Dim::FrequencyPerVolt).unwrap(), 0.3e9);
        assert_eq!(q("40 pF").si("c", Dim::Capacitance).unwrap(), 40e-12);
        assert_eq!(q("26 pH").si("l", Dim::Inductance).unwrap(), 26e-12);
        assert_eq!(Quantity::Num(5.0).si("v", Dim::Voltage).unwrap(), 5.0);
        assert!(q("5 MHz").si("t", Dim::Time).is_err());
        assert!(q("−1s").si("t", Dim::Time).unwrap_err().0.contains("`t`"));
        assert!(q("-1 s").si("t", Dim::Time).is_err());
        assert_eq!(q("-226 MHz").si("a", Dim::Frequency).unwrap(), -226e6);
    }

    #[test]
    fn overrides_reach_nested_arrays() {
        let mut doc = parse_document("[device]\nv_dc = 50\n[[device.mechanics]]\nlabel = \"A\"\n").unwrap();
        apply_override(&mut doc, "device.v_dc=\"5 V\"").unwrap();
        apply_override(&mut doc, "device.mechanics[0].label=B").unwrap();
        apply_override(&mut doc, "rabi.samples=11").unwrap();
        assert_eq!(doc["device"]["v_dc"].as_str(), Some("5 V"));
        assert_eq!(doc["device"]["mechanics"][0]["label"].as_str(), Some("B"));
        assert_eq!(doc["rabi"]["samples"].as_integer(), Some(11));
        assert!(apply_override(&mut doc, "device.mechanics[3].label=C").is_err());
        assert!(apply_override(&mut doc, "novalue").is_err());
    }
}
