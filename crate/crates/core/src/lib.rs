pub mod cli;
pub mod error;
pub mod io;
pub mod martingale;
pub mod psi;
pub mod riesz;
pub mod rudin_shapiro;
pub mod trig;
pub mod walsh;

pub use error::{Error, Result};
