pub mod circle_map;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod solenoid;
pub mod stats;
pub mod symbolic;
pub mod thermo;
pub mod twisted;

pub use circle_map::{coefficient_table, CirclePoint, PerturbationSpec};
pub use error::{Error, Result};
pub use grid::GridFunction;
pub use solenoid::SolenoidPoint;
pub use symbolic::{Cylinder, Word};
pub use thermo::{EquilibriumData, Potential};
