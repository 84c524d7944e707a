pub mod autotune;
pub mod boundary;
pub mod collision;
pub mod config;
pub mod decomp;
pub mod error;
pub mod ib;
pub mod lattice;
pub mod layout;
pub mod output;
pub mod run;
pub mod solver;
pub mod tracer;

pub use error::{Error, Result};
