pub mod bell;
pub mod chsh;
pub mod cli;
pub mod error;
pub mod factory;
pub mod fock;
pub mod gaussian;
pub mod kernel;
pub mod marginal;
pub mod optimize;
pub mod oracle;
pub mod teleport;

pub use error::{Error, Result};
