//! Phase-space and Fock-basis engines for the strongly-driven micromaser.

// `!(x > 0.0)` style guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charfn;
pub mod coherent;
pub mod correlations;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod params;
pub mod propagator;
pub mod special;
pub mod wigner;

pub use charfn::{CharFn, ClickKind, SharedCharFn, Vacuum};
pub use coherent::{CoherentOpSum, Dyad};
pub use error::{Result, SdmError};
pub use params::{PhasePoint, SdmParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
