//! Command line, file formats, parallel ensembles and the verification
//! battery for [`condensa_core`].

pub mod cli;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod verify;
