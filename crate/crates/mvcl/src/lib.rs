//! File formats, parallel benchmark driver and command-line front end for
//! [`mvcl_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod model;
pub mod report;
pub mod run;

pub use error::{Error, Result};
