//! Core of the condensa simulator: a class-indexed growth engine for the
//! superlinear preferential attachment tree, online martingale tracking,
//! the asymptotic coefficient engine and the statistics used to compare the
//! two.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, parallel
//! ensembles and the command line live in the `condensa` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod asymptotics;
pub mod ensemble;
pub mod engine;
pub mod error;
pub mod gamma;
pub mod martingale;
pub mod oracle;
pub mod series;
pub mod stats;
pub mod trajectory;

mod sum;

pub use asymptotics::{CoefficientTable, DriftModel, Regime, RegimeInfo, Scale};
pub use engine::{Choice, GraphState, Mode};
pub use asymptotics::Target;
pub use ensemble::{EnsembleConfig, EnsembleResult, FluctuationSample, Quantity};
pub use oracle::OracleDistribution;
pub use error::{Error, Result};
pub use gamma::WeightExponent;
pub use martingale::{MartingaleSnapshot, MartingaleState};
pub use series::{AsymptoticSeries, Exponent, Gauge};
pub use trajectory::{Checkpoint, CheckpointSchedule, SimulationConfig, Trajectory};
