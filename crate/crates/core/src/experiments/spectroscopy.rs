//! Weak-probe qubit spectroscopy against qubit frequency or bias voltage,
//! with peak extraction and avoided-crossing fits.

use serde::{Deserialize, Serialize};

use super::scan::{scan, Axis, ScanResult};
use crate::engine::steady_state_fast;
use crate::fitkit::{fit_avoided_crossing, CrossingFit};
use crate::model::{
    build_hamiltonian, collapse_ops_with_qubit_pop, device_space, qubit_bath_population, qubit_projector, DeviceSpec,
    RotatingFrame, Transition,
};
use crate::units::TWO_PI;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    /// Control values are qubit frequencies, Hz.
    QubitFrequency,
    /// Control values are bias voltages, V.
    Voltage,
}

impl Control {
    pub fn axis_name(self) -> &'static str {
        match self {
            Control::QubitFrequency => "qubit_freq_hz",
            Control::Voltage => "v_dc_v",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyConfig {
    pub control: Control,
    pub control_values: Vec<f64>,
    /// Probe frequencies, Hz.
    pub probe: Vec<f64>,
    /// Probe Rabi frequency, rad/s.
    pub amplitude: f64,
}

/// Steady-state qubit P_e under a weak probe, over (control, probe) with
/// the probe axis fastest. Mechanical modes appear as features wherever
/// they hybridise with the qubit.
pub fn spectroscopy_scan(dev: &DeviceSpec, cfg: &SpectroscopyConfig) -> Result<ScanResult> {
    dev.validate()?;
    if cfg.control_values.is_empty() || cfg.probe.is_empty() {
        return Err(Error::InvalidInput(
            "spectroscopy needs non-empty control and probe axes".into(),
        ));
    }
    if !(cfg.amplitude > 0.0) {
        return Err(Error::InvalidInput("probe amplitude must be positive".into()));
    }
    if cfg.amplitude * dev.transmon.t2_star > 1.0 {
        log::warn!(
            "probe Ω·T2* = {:.2}; the line will be power broadened",
            cfg.amplitude * dev.transmon.t2_star
        );
    }
    let axes = vec![
        Axis::new(cfg.control.axis_name(), cfg.control_values.clone()),
        Axis::new("probe_hz", cfg.probe.clone()),
    ];
    let space = device_space(dev)?;
    let p_e = qubit_projector(dev, &space, 1)?;
    scan(axes, "p_e", &[], 0, |c, _| {
        let mut d = dev.clone();
        match cfg.control {
            Control::QubitFrequency => d.transmon.omega_q = TWO_PI * c[0],
            Control::Voltage => d.v_dc = c[0],
        }
        let frame = RotatingFrame::at(TWO_PI * c[1]).with_drive(cfg.amplitude, 0.0, Transition::Ge);
        let h = build_hamiltonian(&d, &frame)?;
        let cs = collapse_ops_with_qubit_pop(&d, qubit_bath_population(dev, d.transmon.omega_q))?;
        let rho = steady_state_fast(&h, &cs)?;
        Ok(vec![rho.expect(&p_e)?.re])
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub position: f64,
    pub height: f64,
}

/// Local maxima above `rel_threshold`·max(y), refined by a parabola through
/// the neighbouring samples.
pub fn find_peaks(x: &[f64], y: &[f64], rel_threshold: f64) -> Vec<Peak> {
    let n = x.len().min(y.len());
    if n < 3 {
        return Vec::new();
    }
    let top = y[..n].iter().copied().fold(f64::MIN, f64::max);
    let mut out = Vec::new();
    for i in 1..n - 1 {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > rel_threshold * top) {
            continue;
        }
        let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
        let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let a = (d12 - d01) / (x2 - x0);
        let (position, height) = if a < 0.0 {
            let b = d01 - a * (x0 + x1);
            let xv = (-b / (2.0 * a)).clamp(x0, x2);
            (xv, y1 + (xv - x1) * (d01 + a * (xv - x0)))
        } else {
            (x1, y1)
        };
        out.push(Peak { position, height });
    }
    out
}

/// Merges peaks closer than `resolution`, keeping the tallest of each group.
pub fn resolved_peaks(peaks: &[Peak], resolution: f64) -> Vec<Peak> {
    let mut sorted = peaks.to_vec();
    sorted.sort_by(|a, b| a.position.total_cmp(&b.position));
    let mut out: Vec<Peak> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for p in sorted {
        match out.last_mut() {
            Some(q) if p.position - last < resolution => {
                if p.height > q.height {
                    *q = p;
                }
            }
            _ => out.push(p),
        }
        last = p.position;
    }
    out
}

/// Full width of the bare qubit line, 2/T2* converted to Hz.
pub fn qubit_linewidth_hz(dev: &DeviceSpec) -> f64 {
    2.0 / dev.transmon.t2_star / TWO_PI
}

/// Peak positions (probe axis units) for each control value of a
/// two-axis spectroscopy scan.
pub fn peak_tracks(s: &ScanResult, rel_threshold: f64) -> Result<Vec<(f64, Vec<Peak>)>> {
    s.validate()?;
    if s.axes.len() != 2 {
        return Err(Error::InvalidInput(
            "peak tracking needs a (control, probe) scan".into(),
        ));
    }
    let probe = &s.axes[1].values;
    let m = probe.len();
    Ok(s.axes[0]
        .values
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, find_peaks(probe, &s.values[i * m..(i + 1) * m], rel_threshold)))
        .collect())
}

/// Avoided-crossing fit to the peaks of a spectroscopy scan. Coupling and
/// centre come back in Hz, slope in Hz per control unit.
pub fn fit_scan_crossing(s: &ScanResult, rel_threshold: f64) -> Result<CrossingFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (c, peaks) in peak_tracks(s, rel_threshold)? {
        for p in peaks {
            x.push(c);
            y.push(p.position);
        }
    }
    if x.is_empty() {
        return Err(Error::FitFailure("no peaks in the scan".into()));
    }
    // Centre both coordinates so the fit works on the crossing scale.
    let xm = x.iter().sum::<f64>() / x.len() as f64;
    let ym = y.iter().sum::<f64>() / y.len() as f64;
    let xs: Vec<f64> = x.iter().map(|v| v - xm).collect();
    let ys: Vec<f64> = y.iter().map(|v| v - ym).collect();
    let mut fit = fit_avoided_crossing(&xs, &ys)?;
    fit.x0 += xm;
    fit.center += ym;
    Ok(fit)
}
