//! Numerical curvature of direct-image bundles for families of flat tori.

pub mod bundles;
pub mod dolbeault;
pub mod error;
pub mod family;
pub mod forms;
pub mod harness;
pub mod geometry;
pub mod linalg;
pub mod oracle;
pub mod curvature;

pub use error::{Error, Result};
