pub mod cli;
pub mod error;
pub mod extension;
pub mod factory;
pub mod identities;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod report;
pub mod representation;
pub mod specfile;
pub mod tensorspace;
pub mod wold;

pub use error::{Error, Result};
