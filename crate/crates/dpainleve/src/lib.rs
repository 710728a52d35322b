//! Positive solutions of the discrete Painlevé I equation
//! v_{n+1} + v_{n-1} + 1 = ε(n+1)/v_n, v_{-1} = 0.

pub mod cfrac;
pub mod dpi_core;
pub mod error;
pub mod fixed_point;
pub mod geometry;
pub mod painleve_v;
pub mod poly;
pub mod scalar;
pub mod special_fn;
pub mod wronskian;

pub use error::{Error, Result};
