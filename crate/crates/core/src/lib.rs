//! Continuous-variable quantum-state tomography from balanced-homodyne data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod io;
pub mod maxlik;
pub mod pattern;
pub mod pipeline;
pub mod radon;
pub mod sampler;
pub mod spatial;
pub mod special;
pub mod states;

pub use error::{Error, Result};
