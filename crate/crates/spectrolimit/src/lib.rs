//! Configuration, sweeps, CSV output and figure packs on top of
//! `spectrolimit-core`.

pub mod config;
pub mod error;
pub mod figures;
pub mod mc;
pub mod record;
pub mod sweep;

pub use config::Config;
pub use error::CliError;
