//! Qubit thermal machine coupled to two reservoirs of possibly coherent
//! ancilla qubits, modelled by repeated collisions and by its short-collision
//! master equation.

pub mod analysis;
pub mod collision;
pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod model;
pub mod output;
pub mod thermo;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityMatrix, C64};
pub use lindblad::{steady_state_analytic, steady_state_numeric, SteadyState};
pub use model::{Bath, BathSpec, MachineParams};
pub use thermo::{steady_report, ThermoReport};
