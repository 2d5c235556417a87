//! Experiment dispatch: config sections to library calls, results to tables.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use anyhow::{anyhow, bail, Context, Result};
use cqad::experiments::{
    coherence_sequence, fit_scan_crossing, mech_lifetime, peak_tracks, qubit_linewidth_hz, resolved_peaks,
    rpm_thermometry, spectroscopy_scan, stark_decay, tomography_pipeline, vacuum_rabi, CoherenceConfig, CoherenceKind,
    Control, Evaluation, MechPulse, RpmConfig, ScanResult, SpectroscopyConfig, StarkConfig, ThermometryTarget,
    TomographyConfig,
};
use cqad::fitkit::{
    fit_avoided_crossing, fit_by_kind, fit_fringes, fit_lorentzian_psd, fit_power_law, select_decay_model, DecayShape,
    FitResult, ModelKind,
};
use cqad::model::{cooperativities, equivalent_circuit, g_em, transmon_derived, DeviceSpec};
use cqad::noisekit::{
    ensemble_decay_predict, monte_carlo_coherence, FluctuatorEnsemble, NoiseModel, SequenceKind, Telegrapher,
    DEFAULT_GAMMA_MAX,
};
use cqad::tomography::radii_grid;
use cqad::units::hz;
use serde_json::{json, Value};

use crate::config::{default_delays, Config, Dim, Invalid, Quantity, Range};

pub const EXPERIMENTS: &[&str] = &[
    "rabi",
    "lifetime",
    "coherence",
    "thermometry",
    "stark",
    "spectroscopy",
    "tomography",
    "noise",
    "circuit",
    "fit",
];

/// Column-oriented numeric table; column names carry their unit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Per-row seeds, written as a trailing integer `seed` column.
    pub seeds: Option<Vec<u64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            seeds: None,
        }
    }

    fn from_scan(s: &ScanResult) -> Self {
        let mut columns: Vec<String> = s.axes.iter().map(|a| a.name.clone()).collect();
        columns.push(s.value_name.clone());
        columns.extend(s.columns.iter().map(|(n, _)| n.clone()));
        let rows = (0..s.len())
            .map(|i| {
                let mut r = s.coords(i);
                r.push(s.values[i]);
                r.extend(s.columns.iter().map(|(_, c)| c[i]));
                r
            })
            .collect();
        Self {
            columns,
            rows,
            seeds: Some(s.seed_map.clone()),
        }
    }
}

/// What one experiment produces: a data table and a JSON summary whose
/// numeric entries double as scan metrics.
#[derive(Clone, Debug, Default)]
pub struct Artifact {
    pub table: Table,
    pub summary: BTreeMap<String, Value>,
}

impl Artifact {
    fn put(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.to_string(), v.into());
    }

    /// Finite numeric summary entries.
    pub fn metrics(&self) -> BTreeMap<String, f64> {
        self.summary
            .iter()
            .filter_map(|(k, v)| v.as_f64().filter(|x| x.is_finite()).map(|x| (k.clone(), x)))
            .collect()
    }
}

pub fn run_experiment(name: &str, cfg: &Config, seed: u64) -> Result<Artifact> {
    if name == "fit" {
        return fit(cfg);
    }
    let dev = cfg.device.to_spec()?;
    match name {
        "rabi" => rabi(cfg, &dev),
        "lifetime" => lifetime(cfg, &dev),
        "coherence" => coherence(cfg, &dev, seed),
        "thermometry" => thermometry(cfg, &dev),
        "stark" => stark(cfg, &dev),
        "spectroscopy" => spectroscopy(cfg, &dev),
        "tomography" => tomography(cfg, &dev, seed),
        "noise" => noise(cfg, seed),
        "circuit" => circuit(&dev),
        other => Err(Invalid(format!("unknown experiment `{other}`")).into()),
    }
}

fn mech_label(dev: &DeviceSpec, requested: &Option<String>) -> Result<String> {
    match requested {
        Some(l) => {
            dev.mech_index(l)?;
            Ok(l.clone())
        }
        None => dev
            .mechanics
            .first()
            .map(|m| m.label.clone())
            .ok_or_else(|| Invalid("device has no mechanics modes".into()).into()),
    }
}

fn q_or(q: &Option<Quantity>, field: &str, dim: Dim, default: f64) -> Result<f64> {
    Ok(match q {
        Some(q) => q.si(field, dim)?,
        None => default,
    })
}

fn hz_or(q: &Option<Quantity>, field: &str, default_hz: f64) -> Result<f64> {
    Ok(hz(q_or(q, field, Dim::Frequency, default_hz)?))
}

fn values_or(r: &Option<Range>, field: &str, dim: Dim, default: Range) -> Result<Vec<f64>> {
    Ok(r.as_ref().unwrap_or(&default).values(field, dim)?)
}

fn rabi(cfg: &Config, dev: &DeviceSpec) -> Result<Artifact> {
    let c = &cfg.rabi;
    let mech = mech_label(dev, &c.mech)?;
    let duration = q_or(&c.duration, "rabi.duration", Dim::Time, 3e-6)?;
    let samples = c.samples.unwrap_or(301);
    let tr = vacuum_rabi(dev, &mech, duration, samples)?;
    let mut art = Artifact::default();
    let mut cols = vec!["time_s".to_string()];
    cols.extend(tr.labels.iter().cloned());
    art.table.columns = cols;
    art.table.rows = (0..tr.times.len())
        .map(|k| {
            std::iter::once(tr.times[k])
                .chain(tr.values.iter().map(|v| v[k]))
                .collect()
        })
        .collect();
    let pe = tr.series("p_e")?;
    // First local minimum of P_e marks the completed swap.
    if let Some(k) = (1..pe.len().saturating_sub(1)).find(|&k| pe[k] <= pe[k - 1] && pe[k] < pe[k + 1]) {
        art.put("swap_time_s", tr.times[k]);
        art.put("p_e_at_swap", pe[k]);
    }
    art.put("g_hz", dev.g_em(dev.mech_index(&mech)?) / TAU);
    art.put("mech", mech);
    Ok(art)
}

fn lifetime(cfg: &Config, dev: &DeviceSpec) -> Result<Artifact> {
    let c = &cfg.lifetime;
    let mech = mech_label(dev, &c.mech)?;
    let delays = values_or(&c.delays, "lifetime.delays", Dim::Time, default_delays(0.0, 60e-3, 13))?;
    let park = hz_or(&c.park_detuning, "lifetime.park_detuning", -150e6)?;
    let r = mech_lifetime(dev, &mech, &delays, park)?;
    let mut art = Artifact {
        table: Table::from_scan(&r.scan),
        ..Default::default()
    };
    art.put("tau_s", r.tau);
    art.put("tau_sigma_s", r.tau_sigma);
    art.put("predicted_tau_s", r.predicted_tau);
    art.put("mech", mech);
    Ok(art)
}

fn coherence_kind(s: Option<&str>, n: Option<usize>) -> Result<CoherenceKind> {
    Ok(match s.unwrap_or("ramsey") {
        "ramsey" => CoherenceKind::Ramsey,
        "echo" => CoherenceKind::Echo,
        "cp" => CoherenceKind::Cp { n: n.unwrap_or(2) },
        other => bail!(Invalid(format!(
            "`coherence.kind`: expected ramsey, echo or cp, got `{other}`"
        ))),
    })
}

enum OwnedNoise {
    Single(Telegrapher),
    Ensemble(FluctuatorEnsemble),
}

impl OwnedNoise {
    fn model(&self) -> NoiseModel<'_> {
        match self {
            OwnedNoise::Single(t) => NoiseModel::Single(t),
            OwnedNoise::Ensemble(e) => NoiseModel::Ensemble(e),
        }
    }
}

fn build_noise(cfg: &Config, seed: u64) -> Result<OwnedNoise> {
    let n = &cfg.noise;
    match n.model.as_deref().unwrap_or("ensemble") {
        "ensemble" => {
            let gmax = q_or(&n.gamma_max, "noise.gamma_max", Dim::Rate, DEFAULT_GAMMA_MAX)?;
            let gmin = q_or(&n.gamma_min, "noise.gamma_min", Dim::Rate, gmax * (-20f64).exp())?;
            let xi = q_or(&n.xi, "noise.xi", Dim::Rate, 1e3)?;
            let members = n.members.unwrap_or(200);
            Ok(OwnedNoise::Ensemble(FluctuatorEnsemble::sample(
                xi, gmin, gmax, members, seed,
            )?))
        }
        "telegrapher" => {
            let nu = hz_or(&n.nu, "noise.nu", 10e3)?;
            let gamma = q_or(&n.gamma, "noise.gamma", Dim::Rate, 1e4)?;
            Ok(OwnedNoise::Single(Telegrapher::new(nu, gamma)?))
        }
        other => bail!(Invalid(format!(
            "`noise.model`: expected ensemble or telegrapher, got `{other}`"
        ))),
    }
}

fn coherence(cfg: &Config, dev: &DeviceSpec, seed: u64) -> Result<Artifact> {
    let c = &cfg.coherence;
    let mech = mech_label(dev, &c.mech)?;
    let kind = coherence_kind(c.kind.as_deref(), c.cp_pulses)?;
    let delays = values_or(
        &c.delays,
        "coherence.delays",
        Dim::Time,
        default_delays(0.0, 200e-6, 41),
    )?;
    let mut cc = CoherenceConfig::new(&mech, kind, delays);
    cc.detuning = hz_or(&c.detuning, "coherence.detuning", 50e3)?;
    cc.park_detuning = hz_or(&c.park_detuning, "coherence.park_detuning", -150e6)?;
    cc.shots = c.shots.unwrap_or(cc.shots);
    cc.seed = seed;
    cc.pulse = match c.pulse.as_deref() {
        None | Some("qubit_half_pi_swap") => MechPulse::QubitHalfPiSwap,
        Some("pi_half_swap") => MechPulse::PiHalfSwap,
        Some(other) => bail!(Invalid(format!("`coherence.pulse`: unknown strategy `{other}`"))),
    };
    if let Some(dt) = &c.exact_dt {
        cc.evaluation = Evaluation::Exact {
            dt: dt.si("coherence.exact_dt", Dim::Time)?,
        };
    }
    let noise = if c.with_noise.unwrap_or(false) {
        Some(build_noise(cfg, seed)?)
    } else {
        None
    };
    let s = coherence_sequence(dev, &cc, noise.as_ref().map(|n| n.model()))?;
    let mut art = Artifact {
        table: Table::from_scan(&s),
        ..Default::default()
    };
    if let Ok(contrast) = s.column("contrast") {
        match select_decay_model(&s.axes[0].values, contrast, true) {
            Ok((shape, e, g)) => {
                let (best, name) = match shape {
                    DecayShape::Exponential => (&e, "exponential"),
                    DecayShape::Gaussian => (&g, "gaussian"),
                };
                art.put("decay_shape", name);
                art.put("t2_s", best.get("tau").unwrap_or(f64::NAN));
                art.put("t2_exp_s", e.get("tau").unwrap_or(f64::NAN));
                art.put("t2_gauss_s", g.get("tau").unwrap_or(f64::NAN));
            }
            Err(e) => log::warn!("coherence decay fit failed: {e}"),
        }
    }
    art.put("mech", mech);
    Ok(art)
}

fn thermometry(cfg: &Config, dev: &DeviceSpec) -> Result<Artifact> {
    let c = &cfg.thermometry;
    let target = match c.target.as_deref() {
        None | Some("qubit") => ThermometryTarget::Qubit,
        Some(label) => {
            dev.mech_index(label)?;
            ThermometryTarget::Mech(label.to_string())
        }
    };
    let mut rc = RpmConfig::default();
    if let Some(a) = &c.rabi_amplitude {
        rc.rabi_amplitude = a.omega("thermometry.rabi_amplitude")?;
    }
    rc.duration = q_or(&c.duration, "thermometry.duration", Dim::Time, rc.duration)?;
    rc.samples = c.samples.unwrap_or(rc.samples);
    rc.stark_population = c.stark_population;
    // The protocol needs the f level; the device truncation may omit it.
    let mut dev = dev.clone();
    if target == ThermometryTarget::Qubit {
        dev.transmon.levels = dev.transmon.levels.max(3);
    }
    let t = rpm_thermometry(&dev, &target, &rc)?;
    let mut art = Artifact::default();
    art.table = Table::new(&["population", "temperature_k", "amplitude_1", "amplitude_2", "phonons"]);
    art.table.rows.push(vec![
        t.population,
        t.temperature,
        t.amplitudes[0],
        t.amplitudes[1],
        t.phonons.unwrap_or(f64::NAN),
    ]);
    art.put("population", t.population);
    art.put("temperature_k", t.temperature);
    if let Some(n) = t.phonons {
        art.put("phonons", n);
    }
    art.put(
        "target",
        match target {
            ThermometryTarget::Qubit => "qubit".to_string(),
            ThermometryTarget::Mech(l) => l,
        },
    );
    Ok(art)
}

fn stark(cfg: &Config, dev: &DeviceSpec) -> Result<Artifact> {
    let c = &cfg.stark;
    let mech = mech_label(dev, &c.mech)?;
    let mut sc = StarkConfig::new(&mech, hz_or(&c.detuning, "stark.detuning", 5e6)?);
    sc.fringe = q_or(&c.fringe, "stark.fringe", Dim::Frequency, sc.fringe)?;
    sc.anharmonic = c.anharmonic.unwrap_or(false);
    let n0 = c.initial_phonons.unwrap_or(1.5);
    if !(n0 >= 0.0) {
        bail!(Invalid(format!(
            "`stark.initial_phonons` must be non-negative, got {n0}"
        )));
    }
    let delays = values_or(&c.delays, "stark.delays", Dim::Time, default_delays(0.0, 100e-3, 11))?;
    let rho0 = cqad::qops::thermal(dev.fock_dim, n0)?;
    let d = stark_decay(dev, &sc, &rho0, &delays)?;
    let mut art = Artifact::default();
    art.table = Table::new(&["delay_s", "phonons"]);
    art.table.rows = d.delays.iter().zip(&d.phonons).map(|(t, n)| vec![*t, *n]).collect();
    art.put("tau_s", d.tau);
    art.put("tau_sigma_s", d.fit.sigma_of("tau").unwrap_or(f64::NAN));
    art.put("initial_phonons", d.phonons.first().copied().unwrap_or(f64::NAN));
    art.put("mech", mech);
    Ok(art)
}

fn spectroscopy(cfg: &Config, dev: &DeviceSpec) -> Result<Artifact> {
    let c = &cfg.spectroscopy;
    let dev = match &c.mech {
        Some(l) => dev.select(l, true)?,
        None => dev.clone(),
    };
    let f_m = dev
        .mechanics
        .first()
        .map(|m| m.omega_m / TAU)
        .unwrap_or(dev.transmon.omega_q / TAU);
    let control = match c.control.as_deref() {
        None | Some("voltage") => Control::Voltage,
        Some("qubit_freq") => Control::QubitFrequency,
        Some(other) => bail!(Invalid(format!(
            "`spectroscopy.control`: expected voltage or qubit_freq, got `{other}`"
        ))),
    };
    let (dim, default) = match control {
        Control::Voltage => (Dim::Voltage, default_delays(dev.v_dc, dev.v_dc, 1)),
        Control::QubitFrequency => (Dim::Frequency, default_delays(f_m, f_m, 1)),
    };
    let control_values = values_or(&c.control_range, "spectroscopy.control_range", dim, default)?;
    let probe = values_or(
        &c.probe,
        "spectroscopy.probe",
        Dim::Frequency,
        default_delays(f_m - 1e6, f_m + 1e6, 401),
    )?;
    let amplitude = hz_or(&c.amplitude, "spectroscopy.amplitude", 5e3)?;
    let sc = SpectroscopyConfig {
        control,
        control_values,
        probe,
        amplitude,
    };
    let s = spectroscopy_scan(&dev, &sc)?;
    let mut art = Artifact {
        table: Table::from_scan(&s),
        ..Default::default()
    };
    let resolution = qubit_linewidth_hz(&dev);
    let tracks = peak_tracks(&s, 0.1)?;
    let per_control: Vec<Value> = tracks
        .iter()
        .map(|(x, p)| {
            let r = resolved_peaks(p, resolution);
            json!({"control": x, "peaks_hz": r.iter().map(|k| k.position).collect::<Vec<_>>()})
        })
        .collect();
    if let Some((_, p)) = tracks.first() {
        let r = resolved_peaks(p, resolution);
        art.put("resolved_peaks", r.len() as f64);
        if r.len() >= 2 {
            art.put("splitting_hz", r[r.len() - 1].position - r[0].position);
        }
    }
    if tracks.len() >= 3 {
        match fit_scan_crossing(&s, 1e-3) {
            Ok(f) => {
                art.put("crossing_g_hz", f.g);
                art.put("crossing_slope", f.slope);
                art.put("crossing_x0", f.x0);
            }
            Err(e) => log::info!("no avoided crossing fitted: {e}"),
        }
    }
    art.put("resolution_hz", resolution);
    art.put("peaks", Value::Array(per_control));
    Ok(art)
}

fn tomography(cfg: &Config, dev: &DeviceSpec, seed: u64) -> Result<Artifact> {
    let c = &cfg.tomography;
    let mech = mech_label(dev, &c.mech)?;
    let mut tc = TomographyConfig::new(&mech, c.fock.unwrap_or(1));
    if c.radii.is_some() || c.r_max.is_some() {
        let n = c.radii.unwrap_or(tc.radii.len());
        let r_max = c.r_max.unwrap_or(*tc.radii.last().unwrap_or(&2.4));
        if n < 2 || !(r_max > 0.0) {
            bail!(Invalid(
                "`tomography.radii` needs at least 2 radii and `r_max` > 0".into()
            ));
        }
        tc.radii = radii_grid(n, r_max);
    }
    tc.resamples = c.resamples.unwrap_or(tc.resamples);
    tc.shots = c.shots;
    tc.basis_fock = c.basis_fock.unwrap_or(tc.basis_fock);
    tc.pad_dim = c.pad_dim.unwrap_or(tc.pad_dim);
    tc.recon_fock = c.recon_fock.unwrap_or(tc.recon_fock);
    tc.seed = seed;
    let run = tomography_pipeline(dev, &tc)?;
    let mut art = Artifact::default();
    art.table = Table::new(&["radius", "wigner", "wigner_sigma"]);
    let t = &run.tomogram;
    art.table.rows = (0..t.radii.len())
        .map(|k| vec![t.radii[k], t.w[k], t.sigma[k]])
        .collect();
    art.put("prepared_fidelity", run.prepared_fidelity);
    art.put("w_origin", run.w_origin());
    art.put("w_origin_sigma", t.sigma[0]);
    let rec = &run.reconstruction;
    for (n, (p, s)) in rec.p.iter().zip(&rec.sigma).enumerate() {
        art.put(&format!("p{n}"), *p);
        art.put(&format!("p{n}_sigma"), *s);
    }
    art.put("radii", json!(tc.radii));
    art.put("mech", mech);
    Ok(art)
}

fn noise(cfg: &Config, seed: u64) -> Result<Artifact> {
    let n = &cfg.noise;
    let model = build_noise(cfg, seed)?;
    let times = values_or(&n.times, "noise.times", Dim::Time, default_delays(0.0, 200e-6, 41))?;
    let traj = n.trajectories.unwrap_or(2000);
    if traj == 0 {
        bail!(Invalid("`noise.trajectories` must be at least 1".into()));
    }
    let redraw = matches!(model, OwnedNoise::Ensemble(_));
    let ramsey = monte_carlo_coherence(model.model(), &times, SequenceKind::Ramsey, traj, redraw, seed);
    let echo = monte_carlo_coherence(model.model(), &times, SequenceKind::Echo, traj, redraw, seed ^ 0x5eed);
    let mut art = Artifact::default();
    match &model {
        OwnedNoise::Ensemble(e) => {
            let p = ensemble_decay_predict(e)?;
            art.table = Table::new(&["time_s", "ramsey", "echo", "ramsey_predicted", "echo_predicted"]);
            art.table.rows = times
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let echo_p = p.echo(t).map(f64::exp).unwrap_or(f64::NAN);
                    vec![t, ramsey[k], echo[k], p.ramsey(t).exp(), echo_p]
                })
                .collect();
            art.put("t2_ramsey_s", p.t2_ramsey);
            art.put("t2_echo_s", p.t2_echo);
            art.put("echo_efficiency", p.efficiency);
            art.put("ln_ratio", p.ln_ratio);
            art.put("nu_min", e.nu_min);
        }
        OwnedNoise::Single(_) => {
            art.table = Table::new(&["time_s", "ramsey", "echo"]);
            art.table.rows = times
                .iter()
                .enumerate()
                .map(|(k, &t)| vec![t, ramsey[k], echo[k]])
                .collect();
        }
    }
    if let Ok(f) = fit_by_kind(ModelKind::ExpDecay, &times, &ramsey) {
        art.put("ramsey_mc_tau_s", f.get("tau").unwrap_or(f64::NAN));
    }
    Ok(art)
}

fn circuit(dev: &DeviceSpec) -> Result<Artifact> {
    let mut art = Artifact::default();
    art.table = Table::new(&["mode", "g_em_hz", "ck_f", "lk_h", "cm_f", "c_t1", "c_t2"]);
    for (i, m) in dev.mechanics.iter().enumerate() {
        let g = g_em(m, dev.v_dc);
        let c = equivalent_circuit(m, g, &dev.transmon)?;
        let co = cooperativities(dev, i, None)?;
        art.table
            .rows
            .push(vec![i as f64, g / TAU, c.ck, c.lk, c.cm, co.c_t1, co.c_t2]);
        for (k, v) in [
            ("g_em_hz", g / TAU),
            ("ck_f", c.ck),
            ("lk_h", c.lk),
            ("c_t1", co.c_t1),
            ("c_t2", co.c_t2),
        ] {
            art.put(&format!("{}.{k}", m.label), v);
        }
    }
    let t = transmon_derived(&dev.transmon);
    art.put("omega_q_max_hz", t.omega_q_max / TAU);
    art.put("z_ohm", t.z);
    art.put("c_sigma_f", t.c_sigma);
    art.put(
        "modes",
        json!(dev.mechanics.iter().map(|m| m.label.clone()).collect::<Vec<_>>()),
    );
    Ok(art)
}

fn read_columns(path: &str, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading fit input {path}"))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let head: Vec<&str> = lines
        .next()
        .ok_or_else(|| anyhow!("{path} is empty"))?
        .split(',')
        .map(str::trim)
        .collect();
    let col = |name: &str| {
        head.iter().position(|h| *h == name).ok_or_else(|| {
            Invalid(format!(
                "`fit`: column `{name}` not in {path} (have {})",
                head.join(", ")
            ))
        })
    };
    let (ix, iy) = (col(x)?, col(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (k, l) in lines.enumerate() {
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        let get = |i: usize| -> Result<f64> {
            f.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Invalid(format!("`fit`: bad number on data row {} of {path}", k + 1)).into())
        };
        xs.push(get(ix)?);
        ys.push(get(iy)?);
    }
    Ok((xs, ys))
}

fn fit(cfg: &Config) -> Result<Artifact> {
    let c = &cfg.fit;
    let input = c
        .input
        .as_deref()
        .ok_or_else(|| Invalid("`fit.input` is required".into()))?;
    let x = c.x.as_deref().unwrap_or("x");
    let y = c.y.as_deref().unwrap_or("y");
    let (xs, ys) = read_columns(input, x, y)?;
    let model = c.model.as_deref().unwrap_or("exp_decay");
    let res: FitResult = match model {
        "fringes" => {
            let f = fit_fringes(&xs, &ys)?;
            FitResult {
                names: ["amplitude", "decay", "frequency", "phase", "offset"]
                    .map(String::from)
                    .to_vec(),
                params: vec![f.amplitude, f.decay, f.frequency, f.phase, f.offset],
                sigma: vec![f.amplitude_sigma, f64::NAN, f.frequency_sigma, f64::NAN, f64::NAN],
                residual: f.residual,
                converged: f.identifiable,
                n_eval: 0,
                sigma_method: cqad::fitkit::SigmaMethod::Jacobian,
            }
        }
        "crossing" => {
            let f = fit_avoided_crossing(&xs, &ys)?;
            FitResult {
                names: ["center", "g", "slope", "x0"].map(String::from).to_vec(),
                params: vec![f.center, f.g, f.slope, f.x0],
                sigma: vec![f64::NAN, f.g_sigma, f.slope_sigma, f.x0_sigma],
                residual: f.residual,
                converged: true,
                n_eval: 0,
                sigma_method: f.sigma_method,
            }
        }
        "lorentzian_psd" => fit_lorentzian_psd(&xs, &ys)?,
        "power_law" => fit_power_law(&xs, &ys)?,
        other => {
            let kind: ModelKind = serde_json::from_value(Value::String(other.to_string())).map_err(|_| {
                Invalid(format!(
                    "`fit.model`: unknown model `{other}` (exp_decay, gauss_decay, damped_sinusoid, linear, \
                     lorentzian_plus_powerlaw, fringes, crossing, lorentzian_psd, power_law)"
                ))
            })?;
            fit_by_kind(kind, &xs, &ys)?
        }
    };
    let mut art = Artifact::default();
    art.table = Table::new(&["index", "value", "sigma"]);
    for (i, (name, (p, s))) in res.names.iter().zip(res.params.iter().zip(&res.sigma)).enumerate() {
        art.table.rows.push(vec![i as f64, *p, *s]);
        art.put(name, *p);
        art.put(&format!("{name}_sigma"), *s);
    }
    art.put("parameters", json!(res.names));
    art.put("residual", res.residual);
    art.put("converged", res.converged);
    art.put("model", model);
    Ok(art)
}
