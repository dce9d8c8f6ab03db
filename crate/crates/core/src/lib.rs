//! Imaginarity of qubit states, complementarity bounds over mutually
//! unbiased bases, and the nonlocal advantage of quantum imaginarity (NAQI)
//! for two-qubit states.

pub mod complementarity;
pub mod error;
pub mod frames;
pub mod imaginarity;
pub mod naqi;
pub mod optimize;
pub mod qmat;
pub mod sampling;
pub mod scenarios;

pub use complementarity::{bound_constant, maximize_sum_over_states, mub_imaginarity_sum, BoundConstant, Provenance};
pub use error::{Error, Result};
pub use frames::{mub_triple, mub_triple_with_phase, projector_pair, MeasurementSet, MubTriple, ProjectorPair};
pub use imaginarity::{imag_measure, ImaginarityMeasure, OrthonormalBasis};
pub use naqi::{naqi_value, reduced_state_lower_bound, witness, NaqiConfig, NaqiResult};
pub use optimize::{bisect_threshold, maximize, Interval, OptimizerConfig};
pub use qmat::{BlochVector, ComplexMatrix, DensityMatrix, TwoQubitPauliForm, C64};
pub use scenarios::{build_state, FamilyKind, StateFamily, ThreeQubitParams};
