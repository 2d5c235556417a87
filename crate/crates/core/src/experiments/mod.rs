//! Measurement protocols built on the engine: vacuum Rabi, state
//! preparation, mechanical T1, Ramsey/echo/CP, RPM thermometry, Stark
//! phonon counting, spectroscopy and the Wigner tomography pipeline.

mod coherence;
mod rabi;
mod scan;
mod sequence;
mod spectroscopy;
mod stark;
mod thermometry;
mod tomography;

pub use coherence::{coherence_sequence, CoherenceConfig, CoherenceKind, Evaluation, MechPulse};
pub use rabi::{mech_lifetime, prepare_fock, vacuum_rabi, LifetimeResult, PrepConfig, Prepared};
pub use scan::{scan, Axis, ScanResult};
pub use sequence::{PulseSequence, Runner, Step};
pub use spectroscopy::{
    find_peaks, fit_scan_crossing, peak_tracks, qubit_linewidth_hz, resolved_peaks, spectroscopy_scan, Control, Peak,
    SpectroscopyConfig,
};
pub use stark::{
    mode_decay, phonons_from_shift, ramsey_frequencies, stark_decay, stark_phonon_readout, PhononDecay, StarkConfig,
    StarkReadout,
};
pub use thermometry::{rpm_thermometry, RpmConfig, SwapMap, Thermometry, ThermometryTarget};
pub use tomography::{phase_averaged_displacement, tomography_pipeline, TomographyConfig, TomographyRun};
