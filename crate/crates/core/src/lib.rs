pub mod config;
pub mod error;
pub mod fluid;
pub mod grid;
pub mod hydro;
pub mod params;
pub mod relativity;
pub mod runner;
pub mod schrodinger;
pub mod snapshot;
pub mod spectral;
pub mod trajectory;
pub mod verify;
pub mod vortex;

pub use error::{Error, Result};
pub use grid::{ComplexField, Grid, ScalarField};
pub use params::{CharacteristicScales, PhysicalParams};
