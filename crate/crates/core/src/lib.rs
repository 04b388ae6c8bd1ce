pub mod error;
pub mod gibbs;
pub mod lindblad;
pub mod models;
pub mod observables;
pub mod operator;
pub mod runner;
pub mod sectors;

pub use error::{Error, Result};
