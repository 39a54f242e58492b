#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod attractor;
pub mod cone;
pub mod error;
pub mod format;
pub mod geometry;
mod hull;
pub mod lp;
pub mod onedim;
pub mod product;
pub mod rational;
pub mod render;
pub mod spectral;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use rational::{Rat, RatMatrix};
