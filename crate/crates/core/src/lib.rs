//! DNSP: single-image super-resolution with a 3-layer convolutional network
//! trained under two structural priors (a smooth rank surrogate and a
//! variance-of-Laplacian sharpness term), with every gradient derived and
//! implemented by hand.

pub mod error;
pub mod linalg;
pub mod imaging;
pub mod metrics;
pub mod network;
pub mod priors;
pub mod training;
pub mod verify;

pub use error::{Error, Result};
