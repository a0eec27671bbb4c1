//! Conditional preparation of vacuum/one-photon superpositions with linear
//! optics and on/off photodetectors.
//!
//! [`fock`], [`optics`] and [`detection`] make up a small exact simulator on
//! truncated Fock spaces. [`scheme`] holds the closed forms for the heralded
//! qubit next to the brute-force pipeline, and [`sweep`], [`design`] and
//! [`verify`] drive both over parameter grids.

pub mod design;
pub mod detection;
pub mod error;
pub mod fock;
pub mod optics;
pub mod scheme;
pub mod sweep;
pub mod verify;

pub use detection::{DetectorModel, Outcome, OutcomePattern};
pub use error::{Error, Result};
pub use fock::{DensityOperator, FockState, ModeIndex};
pub use num_complex::Complex64;
pub use optics::ModeTransform;
pub use scheme::{Cutoff, Herald, QubitCoefficients, SchemeParams, SchemeResult, TargetQubit};
pub use sweep::{AxisRange, EvalMode, SweepRecord, SweepSpec};
