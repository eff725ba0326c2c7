//! Files, datasets and the command line around `blurev-core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod events_io;
pub mod image_io;
pub mod manifest;
pub mod trajectory_io;

pub use error::{Error, Result};
