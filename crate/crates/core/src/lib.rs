//! Activity-diagram documentation for `//$`-annotated C++ sources.

pub mod activity;
pub mod annotations;
pub mod cli;
pub mod cxx;
pub mod diag;
pub mod error;
pub mod flowdb;
mod fsio;
pub mod html;
pub mod linkcheck;
pub mod pipeline;
pub mod plantuml;
pub mod scanner;

pub use diag::{Diagnostic, Severity};
pub use error::{Error, Result};
