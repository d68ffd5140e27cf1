//! Superfast solvers for Toeplitz and Toeplitz-like systems.
//!
//! A Toeplitz matrix `T` is mapped to the Cauchy-like matrix `C = F T F^*`,
//! compressed into HODLR or HSS form with Zolotarev-shifted factored ADI,
//! and solved with a ULV factorization.

pub mod dense;
pub mod error;
pub mod fadi;
pub mod hierarchy;
pub mod hodlr;
pub mod hss;
pub mod oracle;
pub mod pipeline;
pub mod spectral;
pub mod toeplitz;
pub mod ulv;
pub mod zolotarev;

pub use dense::{Mat, C64};
pub use error::{Error, Result};
