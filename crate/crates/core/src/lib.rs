//! Virtual patient cohorts from 1D pulse-wave simulation of the aorto-iliac
//! bifurcation, and stenosis classifiers trained on them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod error;
pub mod ml;
pub mod model;
pub mod rng;
pub mod solver;
pub mod tasks;
pub mod vpd;

pub use error::{Error, ErrorKind, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod chapter1 {}
    #[doc = include_str!("../../../book/src/network.md")]
    pub mod chapter2 {}
    #[doc = include_str!("../../../book/src/cohorts.md")]
    pub mod chapter3 {}
    #[doc = include_str!("../../../book/src/classifiers.md")]
    pub mod chapter4 {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub mod chapter5 {}
    #[doc = include_str!("../../../book/src/command_line.md")]
    pub mod chapter6 {}
}
