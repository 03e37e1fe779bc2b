//! Equilibrium search and pricing in markets where buyers do not know how
//! many firms actually sell the product.

pub mod equilibrium;
pub mod error;
pub mod extensions;
pub mod hypergeom;
pub mod optimize;
pub mod oracle;
pub mod outcomes;
pub mod poly;
pub mod pricing;
pub mod quadrature;

pub use error::{ModelError, Result};
