//! Numerical backbone: special functions, quadrature, root finding,
//! derivative-free optimization, and shared statistical helpers.

pub mod optim;
pub mod quad;
pub mod roots;
pub mod special;
pub mod stats;
