//! Device parameters to Hamiltonians, dissipators and circuit quantities.

pub mod analytics;
mod circuit;
mod hamiltonian;
pub(crate) mod params;

pub use circuit::{
    cooperativities, equivalent_circuit, g_em, g_from_circuit, transmon_derived, Cooperativities, EquivalentCircuit,
    TransmonDerived,
};
pub use hamiltonian::{
    bath_occupation, build_hamiltonian, collapse_ops, collapse_ops_with_qubit_pop, device_space, drive_operator,
    excitation_number, pulse_unitary, qubit_bath_population, qubit_lowering, qubit_projector, CollapseOp, QubitDrive,
    RotatingFrame, Transition, QUBIT,
};
pub use params::{DeviceSpec, MechSpec, TlsSpec, TransmonSpec, REFERENCE_MECH_TEMPERATURE};
