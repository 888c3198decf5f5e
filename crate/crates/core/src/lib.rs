pub mod cli;
pub mod covpath;
pub mod error;
pub mod estimation;
pub mod index;
pub mod matrix;
pub mod mc;
pub mod oirf;
pub mod var;

pub use error::{Error, Result};
