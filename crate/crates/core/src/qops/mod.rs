//! Dense linear algebra on small composite Hilbert spaces.

pub mod linalg;
mod operator;
mod space;
mod state;

pub use operator::{
    annihilation, creation, embed, number, pauli_x, pauli_y, pauli_z, sigma_z_excitation, transition, Operator,
};
pub use space::CompositeSpace;
pub use state::{coherent, diag, displacement, fock, qubit_thermal, thermal, trace_product, DensityMatrix};
