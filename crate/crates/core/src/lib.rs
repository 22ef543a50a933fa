//! Numerical toolkit for spin-direction carriers whose information ordering
//! reverses when a second copy is supplied.

pub mod ensembles;
pub mod error;
pub mod measures;
pub mod morphisms;
pub mod qmat;
pub mod report;
pub mod sphere;
pub mod strategies;

pub use ensembles::{Ensemble, Family};
pub use error::{Result, SnqiError};
pub use measures::{MeasureResult, SnqiVerdict, SweepRecord};
pub use morphisms::{PositivityReport, Superoperator};
pub use qmat::{ComplexMatrix, DensityOperator, Spectrum};
pub use report::{Check, Suite, VerifyReport};
pub use sphere::{Direction, QuadratureSettings, Rotation, SphereQuadrature};
pub use strategies::{CovariantPovm, FinitePovm, MeasurementStrategy};
