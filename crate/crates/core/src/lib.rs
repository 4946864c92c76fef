// `!(v > 0.0)` is used on purpose so that NaN is rejected; index loops over
// several parallel arrays read better than zipped iterators.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod averaging;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod rng;
pub mod spectral;
pub mod stable_noise;
pub mod stats;

pub use error::{Error, Result};
