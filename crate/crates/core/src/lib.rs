//! Witten-deformed de Rham complexes on the circle, their transferred A∞
//! products, and the gradient-tree counts those products converge to as
//! `ħ → 0`.
//!
//! The pipeline runs [`derham`] (grid operators) → [`spectral`] (small
//! eigenspaces, Green operator, homotopy) → [`ainfty`] (tree sums) →
//! [`asymptotics`] (fits against [`morse`] data). [`wkb`] holds the Laplace
//! and transport side. The guide chapters under [`guide`] are compiled as
//! doc-tests.

pub mod ainfty;
pub mod dd;
pub mod asymptotics;
pub mod derham;
pub mod error;
pub mod linalg;
pub mod morse;
pub mod ode;
pub mod quad;
pub mod real;
pub mod spectral;
pub mod trees;
pub mod wkb;

pub use dd::Dd;
pub use error::{Error, Result};
pub use real::Real;

/// Guide chapters, kept here so their snippets run with `cargo test --doc`.
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/witten-complex.md")]
    pub mod witten_complex {}
    #[doc = include_str!("../../../book/src/morse-trees.md")]
    pub mod morse_trees {}
    #[doc = include_str!("../../../book/src/spectral-retract.md")]
    pub mod spectral_retract {}
    #[doc = include_str!("../../../book/src/products.md")]
    pub mod products {}
    #[doc = include_str!("../../../book/src/asymptotics.md")]
    pub mod asymptotics {}
    #[doc = include_str!("../../../book/src/wkb.md")]
    pub mod wkb {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
