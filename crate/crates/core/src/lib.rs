pub mod analysis;
pub mod cli;
pub mod decode;
pub mod error;
pub mod model;
pub mod numerics;
pub mod syntax;
pub mod synthetic;
pub mod treebank;
pub mod vocab;

pub use error::{Error, Result};
