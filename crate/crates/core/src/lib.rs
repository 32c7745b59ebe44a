//! Integral representation formulas for holomorphic functions on domains in
//! `C^n` and on model coverings of annuli.

pub mod covering;
pub mod error;
pub mod fiber;
pub mod forms;
pub mod quadrature;
pub mod representations;
pub mod testfn;

pub use covering::*;
pub use error::{Error, Result};
pub use fiber::*;
pub use forms::*;
pub use quadrature::*;
pub use representations::*;
pub use testfn::*;
