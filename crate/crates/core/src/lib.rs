pub mod classify;
pub mod confounders;
pub mod error;
pub mod evaluate;
pub mod featurize;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
