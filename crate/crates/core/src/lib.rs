//! Turns (question, program, input) triples into execution-grounded
//! step-by-step supervision data.
//!
//! The flow is: parse and validate a program ([`lang`]), run it under the
//! tracer ([`runtime`]), gate it ([`filters`]), turn the trace into prose
//! ([`naturalizer`], optionally through [`gateway`]), assemble dataset files
//! ([`dataset`]) and re-check them ([`verifier`]). [`pipeline`] wires these
//! over a corpus directory.

pub mod dataset;
mod error;
pub mod filters;
pub mod gateway;
pub mod lang;
pub mod naturalizer;
pub mod pipeline;
pub mod prompts;
pub mod runtime;
pub mod samples;
pub mod verifier;

pub use error::{Error, Result};
