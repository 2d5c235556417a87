//! Classical frequency noise, filter-function dephasing and defect loss.

mod filter;
mod psd;
pub mod quad;
mod telegraph;
mod tls;

pub use filter::{
    echo_efficiency, ensemble_decay_predict, ensemble_decay_predict_params, filter, gaussian_decay, EnsemblePrediction,
    IrCutoff,
};
pub use psd::{
    fit_psd_lorentzian, fit_psd_power_law, psd_estimate, psd_lorentzian, synthesize_power_law, PsdOptions,
    SpectralDensity, MIN_PSD_SAMPLES,
};
pub use telegraph::{
    monte_carlo_coherence, one_over_f_ensemble, sample_phase, sample_shot_phase, sample_trajectory, FluctuatorEnsemble,
    NoiseModel, SequenceKind, Telegrapher, DEFAULT_GAMMA_MAX, DEFAULT_GAMMA_MIN,
};
pub use tls::{
    relaxation_damping, resonant_tls_loss, resonant_tls_loss_brute, resonant_tls_loss_full, tls_density_bound,
    LongitudinalTls, ResonantTls,
};

#[cfg(test)]
mod tests;
