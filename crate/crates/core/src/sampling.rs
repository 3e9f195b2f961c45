//! Random draws used by the verification drivers and tests.
//!
//! Everything is generic over [`rand::Rng`]; callers pick the generator.
//! The CLI uses ChaCha8 seeded with `seed_from_u64`, which is portable.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::hilbert::{HilbertSpace, Ket, Operator};
use crate::linalg::CMatrix;
use crate::spinbath::SpinState;
use crate::C64;

/// Standard complex normal sample (Box–Muller).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    let r = libm::sqrt(-2.0 * libm::log(u1));
    C64::new(r * libm::cos(2.0 * PI * u2), r * libm::sin(2.0 * PI * u2)) * core::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random normalized ket.
pub fn random_ket<R: Rng + ?Sized>(rng: &mut R, space: HilbertSpace) -> Ket {
    let amps = (0..space.dim()).map(|_| complex_normal(rng)).collect();
    Ket::new(space, amps).expect("length matches").normalized().expect("nonzero")
}

/// Operator with independent complex normal entries.
pub fn random_operator<R: Rng + ?Sized>(rng: &mut R, space: HilbertSpace) -> Operator {
    let n = space.dim();
    let mat = CMatrix::from_fn(n, n, |_, _| complex_normal(rng));
    Operator::new(space, mat).expect("square")
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, space: HilbertSpace) -> Operator {
    let m = random_operator(rng, space);
    m.add(&m.adjoint()).expect("same space").scale(C64::new(0.5, 0.0))
}

/// Haar-random orthonormal basis (Gram–Schmidt on complex normal vectors).
pub fn random_orthonormal_basis<R: Rng + ?Sized>(rng: &mut R, space: HilbertSpace) -> Vec<Ket> {
    let mut basis: Vec<Ket> = Vec::with_capacity(space.dim());
    while basis.len() < space.dim() {
        let mut v = random_ket(rng, space.clone());
        // two passes keep orthogonality at machine precision
        for _ in 0..2 {
            for b in &basis {
                let p = b.inner(&v).expect("same space");
                let amps = v.amps().iter().zip(b.amps()).map(|(x, y)| x - y * p).collect();
                v = Ket::new(space.clone(), amps).expect("same space");
            }
        }
        if v.norm_sqr() > 1e-6 {
            basis.push(v.normalized().expect("nonzero"));
        }
    }
    basis
}

/// Spin-1/2 state drawn uniformly on the Bloch sphere.
pub fn bloch_uniform<R: Rng + ?Sized>(rng: &mut R) -> SpinState {
    let cos_theta: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let half = libm::acos(cos_theta) / 2.0;
    SpinState::new(C64::new(libm::cos(half), 0.0), crate::linalg::cis(phi) * libm::sin(half))
}
