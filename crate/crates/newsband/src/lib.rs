//! File formats, batch commands and the annotation service built on
//! `newsband-core`.

pub mod batch;
pub mod config;
pub mod error;
pub mod formats;
pub mod imageio;
pub mod server;

pub use error::{Error, Result};
