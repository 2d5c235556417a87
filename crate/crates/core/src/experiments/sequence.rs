//! Pulse sequences and the device runner that executes them.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::engine::{propagate, unvectorize, vectorize, EvolveOptions, Generator};
use crate::model::{
    build_hamiltonian, collapse_ops_with_qubit_pop, device_space, drive_operator, excitation_number, pulse_unitary,
    qubit_bath_population, qubit_projector, DeviceSpec, RotatingFrame, Transition, QUBIT,
};
use crate::qops::linalg::expm;
use crate::qops::{displacement, embed, number, thermal, CompositeSpace, DensityMatrix, Operator};
use crate::{CMat, Error, Result, C64};

/// Superoperators are cached for Liouvillians up to this dimension.
const SUPEROP_LIMIT: usize = 900;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    /// Park the qubit at `detuning` from a mechanical mode (the first mode
    /// when `target` is absent).
    SetDetuning {
        detuning: f64,
        #[serde(default)]
        target: Option<String>,
    },
    PiPulse {
        #[serde(default)]
        phase: f64,
    },
    HalfPiPulse {
        #[serde(default)]
        phase: f64,
    },
    Wait {
        duration: f64,
    },
    /// Resonant exchange with `target`; the duration defaults to π/(2g).
    Swap {
        target: String,
        #[serde(default)]
        duration: Option<f64>,
    },
    /// Ideal displacement D(α) of `target`, α = amplitude·e^{iφ}.
    Displace {
        target: String,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    Measure,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub steps: Vec<Step>,
}

impl PulseSequence {
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        let s = Self { steps };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.last() != Some(&Step::Measure) {
            return Err(Error::InvalidInput("a pulse sequence must end with measure".into()));
        }
        for (i, s) in self.steps.iter().enumerate() {
            let bad = match s {
                Step::Wait { duration } => !(*duration >= 0.0 && duration.is_finite()),
                Step::Swap { duration: Some(d), .. } => !(*d >= 0.0 && d.is_finite()),
                Step::Displace { amplitude, .. } => !amplitude.is_finite(),
                Step::SetDetuning { detuning, .. } => !detuning.is_finite(),
                _ => false,
            };
            if bad {
                return Err(Error::InvalidInput(format!("step {i} has an invalid parameter")));
            }
        }
        Ok(())
    }
}

fn key(v: f64) -> u64 {
    v.to_bits()
}

/// Executes sequences on a device held in a frame rotating at `reference`.
///
/// The qubit bath temperature is held fixed, so its equilibrium population
/// follows the qubit frequency. Generators and wait propagators are cached
/// by (qubit frequency, extra mechanics detuning, duration).
pub struct Runner {
    base: DeviceSpec,
    dev: DeviceSpec,
    space: CompositeSpace,
    reference: f64,
    p_e: CMat,
    n_tot: Vec<f64>,
    mech_numbers: Vec<CMat>,
    drop_mech_dephasing: bool,
    opts: EvolveOptions,
    gens: HashMap<(u64, u64, usize), Generator>,
    superops: HashMap<(u64, u64, usize, u64), CMat>,
    /// Replaces the default π/(2g) swap duration for every mode.
    pub swap_override: Option<f64>,
}

impl Runner {
    pub fn new(dev: &DeviceSpec, reference: f64) -> Result<Self> {
        dev.validate()?;
        let space = device_space(dev)?;
        let p_e = qubit_projector(dev, &space, 1)?.into_matrix();
        let n_tot = excitation_number(dev, &space)?
            .matrix()
            .diagonal()
            .iter()
            .map(|v| v.re)
            .collect();
        let mech_numbers = dev
            .mechanics
            .iter()
            .map(|m| Ok(embed(&number(dev.fock_dim)?, &space, &m.label)?.into_matrix()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            base: dev.clone(),
            dev: dev.clone(),
            space,
            reference,
            p_e,
            n_tot,
            mech_numbers,
            drop_mech_dephasing: false,
            opts: EvolveOptions::default(),
            gens: HashMap::new(),
            superops: HashMap::new(),
            swap_override: None,
        })
    }

    /// Omit the intrinsic mechanics dephasing dissipator, for runs where a
    /// classical noise model supplies the dephasing instead.
    pub fn without_mech_dephasing(mut self) -> Self {
        self.drop_mech_dephasing = true;
        self.gens.clear();
        self.superops.clear();
        self
    }

    pub fn with_options(mut self, opts: EvolveOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn device(&self) -> &DeviceSpec {
        &self.dev
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn reference(&self) -> f64 {
        self.reference
    }

    pub fn qubit_frequency(&self) -> f64 {
        self.dev.transmon.omega_q
    }

    pub fn set_qubit_frequency(&mut self, omega: f64) {
        self.dev.transmon.omega_q = omega;
    }

    fn mode(&self, target: Option<&str>) -> Result<usize> {
        match target {
            Some(l) => self.dev.mech_index(l),
            None if !self.dev.mechanics.is_empty() => Ok(0),
            None => Err(Error::InvalidInput("device has no mechanical mode".into())),
        }
    }

    pub fn set_detuning(&mut self, target: Option<&str>, detuning: f64) -> Result<()> {
        let i = self.mode(target)?;
        self.set_qubit_frequency(self.dev.mechanics[i].omega_m + detuning);
        Ok(())
    }

    /// Equilibrium qubit population at the current qubit frequency.
    pub fn qubit_population(&self) -> f64 {
        qubit_bath_population(&self.base, self.qubit_frequency())
    }

    /// Product of the qubit and mode equilibrium states (defects in ground).
    pub fn thermal_state(&self) -> Result<CMat> {
        let lv = self.dev.transmon.levels;
        let mut locals: Vec<(&str, CMat)> = vec![(QUBIT, crate::qops::qubit_thermal(lv, self.qubit_population())?)];
        for m in &self.dev.mechanics {
            locals.push((m.label.as_str(), thermal(self.dev.fock_dim, m.thermal_pop)?));
        }
        Ok(DensityMatrix::product(&self.space, &locals)?.into_matrix())
    }

    pub fn swap_time(&self, target: &str) -> Result<f64> {
        if let Some(t) = self.swap_override {
            return Ok(t);
        }
        let g = self.dev.g_em(self.dev.mech_index(target)?);
        if g == 0.0 {
            return Err(Error::InvalidInput(format!(
                "mode `{target}` is uncoupled, cannot swap"
            )));
        }
        Ok(FRAC_PI_2 / g.abs())
    }

    fn generator_key(&self, extra: Option<(usize, f64)>) -> (u64, u64, usize) {
        let (i, d) = extra.unwrap_or((usize::MAX, 0.0));
        (key(self.qubit_frequency()), key(d), i)
    }

    fn ensure_generator(&mut self, extra: Option<(usize, f64)>) -> Result<(u64, u64, usize)> {
        let k = self.generator_key(extra);
        if !self.gens.contains_key(&k) {
            let mut h = build_hamiltonian(&self.dev, &RotatingFrame::at(self.reference))?.into_matrix();
            if let Some((i, d)) = extra {
                h += &self.mech_numbers[i] * C64::new(d, 0.0);
            }
            let mut cs = collapse_ops_with_qubit_pop(&self.dev, self.qubit_population())?;
            if self.drop_mech_dephasing {
                let labels: Vec<String> = self
                    .dev
                    .mechanics
                    .iter()
                    .map(|m| format!("{}_dephasing", m.label))
                    .collect();
                cs.retain(|c| !labels.contains(&c.label));
            }
            let jumps: Vec<(&CMat, f64)> = cs.iter().map(|c| (c.op.matrix(), c.rate)).collect();
            self.gens.insert(k, Generator::new(&h, None, &jumps));
        }
        Ok(k)
    }

    fn evolve_inner(&mut self, rho: &mut CMat, duration: f64, extra: Option<(usize, f64)>) -> Result<()> {
        if duration <= 0.0 {
            return Ok(());
        }
        let gk = self.ensure_generator(extra)?;
        let d = rho.nrows();
        if d * d <= SUPEROP_LIMIT {
            let sk = (gk.0, gk.1, gk.2, key(duration));
            if !self.superops.contains_key(&sk) {
                let l = self.gens[&gk].liouvillian();
                self.superops.insert(sk, expm(&(l * C64::new(duration, 0.0))));
            }
            *rho = unvectorize(&(&self.superops[&sk] * vectorize(rho)), d);
        } else {
            *rho = propagate(&self.gens[&gk], rho, duration, &[], &[], &self.opts)?.0;
        }
        Ok(())
    }

    /// Free evolution at the current qubit frequency.
    pub fn wait(&mut self, rho: &mut CMat, duration: f64) -> Result<()> {
        self.evolve_inner(rho, duration, None)
    }

    /// Free evolution with mode `target` shifted by `detuning`.
    pub fn wait_shifted(&mut self, rho: &mut CMat, duration: f64, target: &str, detuning: f64) -> Result<()> {
        let i = self.dev.mech_index(target)?;
        self.evolve_inner(rho, duration, Some((i, detuning)))
    }

    /// Instantaneous g–e rotation by `theta` about an equatorial axis.
    pub fn pulse(&self, rho: &mut CMat, theta: f64, phase: f64) -> Result<()> {
        let u = pulse_unitary(&drive_operator(&self.dev, &self.space, Transition::Ge, phase)?, theta);
        *rho = &u * &*rho * u.adjoint();
        Ok(())
    }

    /// Rotation on the e–f transition (three-level qubits).
    pub fn pulse_ef(&self, rho: &mut CMat, theta: f64, phase: f64) -> Result<()> {
        let u = pulse_unitary(&drive_operator(&self.dev, &self.space, Transition::Ef, phase)?, theta);
        *rho = &u * &*rho * u.adjoint();
        Ok(())
    }

    /// Brings the qubit onto resonance with `target` for the swap time
    /// (or `duration`) and returns it to its previous frequency.
    pub fn swap(&mut self, rho: &mut CMat, target: &str, duration: Option<f64>) -> Result<()> {
        let t = match duration {
            Some(t) => t,
            None => self.swap_time(target)?,
        };
        let saved = self.qubit_frequency();
        let i = self.dev.mech_index(target)?;
        self.set_qubit_frequency(self.dev.mechanics[i].omega_m);
        let r = self.wait(rho, t);
        self.set_qubit_frequency(saved);
        r
    }

    pub fn displace(&self, rho: &mut CMat, target: &str, alpha: C64) -> Result<()> {
        let d = Operator::local(displacement(self.dev.fock_dim, alpha)?)?;
        let u = embed(&d, &self.space, target)?.into_matrix();
        *rho = &u * &*rho * u.adjoint();
        Ok(())
    }

    /// exp(−iφN)ρ exp(iφN) with N the total excitation number.
    pub fn rotate(&self, rho: &mut CMat, phi: f64) {
        let d = rho.nrows();
        for j in 0..d {
            for i in 0..d {
                rho[(i, j)] *= C64::from_polar(1.0, -phi * (self.n_tot[i] - self.n_tot[j]));
            }
        }
    }

    /// Diagonal of the total excitation number.
    pub fn excitation_numbers(&self) -> &[f64] {
        &self.n_tot
    }

    pub fn excited_population(&self, rho: &CMat) -> f64 {
        crate::qops::trace_product(&self.p_e, rho).re
    }

    /// Tr(P_e·X) for an arbitrary (possibly non-Hermitian) block X.
    pub fn excited_overlap(&self, x: &CMat) -> C64 {
        crate::qops::trace_product(&self.p_e, x)
    }

    pub fn apply(&mut self, rho: &mut CMat, step: &Step) -> Result<Option<f64>> {
        match step {
            Step::SetDetuning { detuning, target } => self.set_detuning(target.as_deref(), *detuning)?,
            Step::PiPulse { phase } => self.pulse(rho, PI, *phase)?,
            Step::HalfPiPulse { phase } => self.pulse(rho, FRAC_PI_2, *phase)?,
            Step::Wait { duration } => self.wait(rho, *duration)?,
            Step::Swap { target, duration } => self.swap(rho, target, *duration)?,
            Step::Displace {
                target,
                amplitude,
                phase,
            } => self.displace(rho, target, C64::from_polar(*amplitude, *phase))?,
            Step::Measure => return Ok(Some(self.excited_population(rho))),
        }
        Ok(None)
    }

    /// Runs `seq` from `rho`, returning every measured P_e.
    pub fn run(&mut self, seq: &PulseSequence, rho: &mut CMat) -> Result<Vec<f64>> {
        seq.validate()?;
        let mut out = Vec::new();
        for s in &seq.steps {
            if let Some(p) = self.apply(rho, s)? {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Reduced state of one mechanical mode.
    pub fn mode_state(&self, rho: &CMat, target: &str) -> Result<CMat> {
        let dm = DensityMatrix::new_unchecked(self.space.clone(), rho.clone())?;
        Ok(dm.partial_trace(&[target])?.into_matrix())
    }
}
