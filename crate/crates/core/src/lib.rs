//! Two-state (pre- and post-selected) quantum dynamics at desk scale.
//!
//! The crate is `no_std` and needs only `alloc`. It provides:
//!
//! - [`hilbert`]: kets and operators on explicitly factored tensor-product
//!   spaces, partial traces and unitary evolution;
//! - [`twostate`]: two-states, pre/post-selected probability rules, weak
//!   values, reduction over an environment and effective density matrices;
//! - [`spinbath`]: one spin coupled to `n` spins through `Σ g_k σ_z σ_z^(k)`,
//!   with closed forms and an independent joint-space oracle;
//! - [`liouville`]: the second-order modified Liouville equation for reduced
//!   two-states, its integrator and closed-form spin solution, and the
//!   burst-interaction model.
//!
//! `ħ = 1` throughout.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod liouville;
pub mod sampling;
pub mod spinbath;
pub mod twostate;

pub use error::{Error, Result};
pub use hilbert::{HilbertSpace, Ket, Operator, Side, Tensor};
pub use linalg::{CMatrix, Modulus};
pub use twostate::{EffectiveDensity, ProjectorSet, TwoState};

pub type C64 = num_complex::Complex<f64>;
