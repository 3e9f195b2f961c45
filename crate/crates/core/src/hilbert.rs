//! Kets and operators over explicitly factored tensor-product spaces.
//!
//! Basis indices are row-major over the factors: the first factor is the
//! most significant digit, so `|i⟩ ⊗ |j⟩` sits at `i * d_2 + j`.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::{Error, Result, C64};

/// Tolerance used when checking that a Hamiltonian is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance used by [`Ket::is_normalized`].
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Kept dimension, traced dimension, and `(kept, traced)` per basis index.
type IndexSplit = (usize, usize, Vec<(usize, usize)>);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    factor_dims: Vec<usize>,
    total_dim: usize,
}

impl HilbertSpace {
    /// Every factor must have dimension at least two.
    pub fn new(factor_dims: impl Into<Vec<usize>>) -> Result<Self> {
        let factor_dims = factor_dims.into();
        if factor_dims.is_empty() {
            return Err(Error::InvalidSpace("no factors"));
        }
        if factor_dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidSpace("factor dimension below 2"));
        }
        let total_dim = factor_dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or(Error::InvalidSpace("dimension overflow"))?;
        Ok(HilbertSpace { factor_dims, total_dim })
    }

    pub fn qubit() -> Self {
        HilbertSpace { factor_dims: vec![2], total_dim: 2 }
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn dim(&self) -> usize {
        self.total_dim
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut factor_dims = self.factor_dims.clone();
        factor_dims.extend_from_slice(&other.factor_dims);
        HilbertSpace { factor_dims, total_dim: self.total_dim * other.total_dim }
    }

    /// The space made of the listed factors, in the order given.
    pub fn subspace(&self, factors: &[usize]) -> Result<Self> {
        let dims = factors
            .iter()
            .map(|&k| {
                self.factor_dims.get(k).copied().ok_or(Error::InvalidFactor { index: k, factors: self.num_factors() })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }

    /// Number of leading factors left over when `env` is the trailing part
    /// of `self`. Fails unless `self = S ⊗ env` with `S` nonempty.
    pub fn system_factor_count(&self, env: &Self) -> Result<usize> {
        let (n, m) = (self.num_factors(), env.num_factors());
        if m >= n || self.factor_dims[n - m..] != env.factor_dims[..] {
            return Err(Error::DimensionMismatch { expected: self.total_dim, found: env.total_dim });
        }
        Ok(n - m)
    }

    /// Split every basis index into (kept index, traced index) with the
    /// kept factors in ascending order.
    fn index_split(&self, keep: &[usize]) -> Result<IndexSplit> {
        let n = self.num_factors();
        if keep.is_empty() {
            return Err(Error::Empty("kept factor set"));
        }
        let mut is_kept = vec![false; n];
        for &k in keep {
            if k >= n {
                return Err(Error::InvalidFactor { index: k, factors: n });
            }
            if is_kept[k] {
                return Err(Error::InvalidSpace("repeated factor index"));
            }
            is_kept[k] = true;
        }
        let kept_dim: usize = (0..n).filter(|&k| is_kept[k]).map(|k| self.factor_dims[k]).product();
        let traced_dim = self.total_dim / kept_dim;
        let mut split = Vec::with_capacity(self.total_dim);
        for idx in 0..self.total_dim {
            let (mut rem, mut kept, mut traced) = (idx, 0usize, 0usize);
            let (mut kept_w, mut traced_w) = (1usize, 1usize);
            for k in (0..n).rev() {
                let d = self.factor_dims[k];
                let digit = rem % d;
                rem /= d;
                if is_kept[k] {
                    kept += digit * kept_w;
                    kept_w *= d;
                } else {
                    traced += digit * traced_w;
                    traced_w *= d;
                }
            }
            split.push((kept, traced));
        }
        Ok((kept_dim, traced_dim, split))
    }

    /// Full basis index for each (traced, kept) pair: `table[traced][kept]`.
    fn regroup(&self, keep: &[usize]) -> Result<(usize, Vec<Vec<usize>>)> {
        let (kept_dim, traced_dim, split) = self.index_split(keep)?;
        let mut table = vec![vec![0usize; kept_dim]; traced_dim];
        for (full, (k, t)) in split.into_iter().enumerate() {
            table[t][k] = full;
        }
        Ok((kept_dim, table))
    }

    fn kept_space(&self, keep: &[usize]) -> Result<Self> {
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        self.subspace(&sorted)
    }
}

/// A (not necessarily normalized) state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    space: HilbertSpace,
    amps: Vec<C64>,
}

impl Ket {
    pub fn new(space: HilbertSpace, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: amps.len() });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidParameter { field: "amps", reason: "non-finite amplitude" });
        }
        Ok(Ket { space, amps })
    }

    /// Single-factor ket with the given amplitudes.
    pub fn from_amps(amps: Vec<C64>) -> Result<Self> {
        Self::new(HilbertSpace::new(vec![amps.len()])?, amps)
    }

    pub fn qubit(up: C64, down: C64) -> Self {
        Ket { space: HilbertSpace::qubit(), amps: vec![up, down] }
    }

    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self> {
        if index >= space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: index });
        }
        let mut amps = vec![ZERO; space.dim()];
        amps[index] = ONE;
        Ok(Ket { space, amps })
    }

    pub fn up() -> Self {
        Self::qubit(ONE, ZERO)
    }

    pub fn down() -> Self {
        Self::qubit(ZERO, ONE)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        libm::fabs(self.norm_sqr() - 1.0) < NORMALIZATION_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = libm::sqrt(self.norm_sqr());
        if n == 0.0 {
            return Err(Error::ZeroTrace);
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        Ket { space: self.space.clone(), amps: self.amps.iter().map(|a| a * c).collect() }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        check_same(&self.space, &other.space)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|self⟩⟨other|`.
    pub fn outer(&self, other: &Ket) -> Result<Operator> {
        check_same(&self.space, &other.space)?;
        let mat = CMatrix::from_fn(self.amps.len(), other.amps.len(), |i, j| self.amps[i] * other.amps[j].conj());
        Ok(Operator { space: self.space.clone(), mat })
    }

    /// `|self⟩⟨self|`.
    pub fn projector(&self) -> Operator {
        self.outer(self).expect("same space")
    }

    /// Applies a single-factor operator to factor `factor` of this ket.
    pub fn apply_local(&self, op: &Operator, factor: usize) -> Result<Ket> {
        let dims = self.space.factor_dims();
        let d = *dims.get(factor).ok_or(Error::InvalidFactor { index: factor, factors: dims.len() })?;
        if op.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: op.dim() });
        }
        let stride: usize = dims[factor + 1..].iter().product();
        let block = d * stride;
        let mut out = vec![ZERO; self.amps.len()];
        for base in (0..self.amps.len()).step_by(block) {
            for inner in 0..stride {
                for r in 0..d {
                    let mut s = ZERO;
                    for c in 0..d {
                        s += op.mat[(r, c)] * self.amps[base + c * stride + inner];
                    }
                    out[base + r * stride + inner] = s;
                }
            }
        }
        Ok(Ket { space: self.space.clone(), amps: out })
    }
}

/// A square matrix acting on a [`HilbertSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    mat: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, mat: CMatrix) -> Result<Self> {
        if !mat.is_square() || mat.rows() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: mat.rows() });
        }
        Ok(Operator { space, mat })
    }

    /// Single-factor operator from a square matrix.
    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        Self::new(HilbertSpace::new(vec![mat.rows()])?, mat)
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let mat = CMatrix::identity(space.dim());
        Operator { space, mat }
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let mat = CMatrix::zeros(space.dim(), space.dim());
        Operator { space, mat }
    }

    pub fn sigma_x() -> Self {
        Self::qubit_op([[0.0, 1.0], [1.0, 0.0]].map(|r| r.map(|x| C64::new(x, 0.0))))
    }

    pub fn sigma_y() -> Self {
        Self::qubit_op([[ZERO, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), ZERO]])
    }

    pub fn sigma_z() -> Self {
        Self::qubit_op([[1.0, 0.0], [0.0, -1.0]].map(|r| r.map(|x| C64::new(x, 0.0))))
    }

    fn qubit_op(m: [[C64; 2]; 2]) -> Self {
        Operator {
            space: HilbertSpace::qubit(),
            mat: CMatrix::from_row_major(2, 2, vec![m[0][0], m[0][1], m[1][0], m[1][1]]),
        }
    }

    /// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` on factor `factor` of `space`.
    pub fn embed(op: &Operator, factor: usize, space: &HilbertSpace) -> Result<Self> {
        let dims = space.factor_dims();
        let d = *dims.get(factor).ok_or(Error::InvalidFactor { index: factor, factors: dims.len() })?;
        if op.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: op.dim() });
        }
        let before: usize = dims[..factor].iter().product();
        let after: usize = dims[factor + 1..].iter().product();
        let mat = CMatrix::identity(before).kron(&op.mat).kron(&CMatrix::identity(after));
        Ok(Operator { space: space.clone(), mat })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Operator { space: self.space.clone(), mat: self.mat.adjoint() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Operator { space: self.space.clone(), mat: self.mat.scale(c) }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn mul(&self, rhs: &Operator) -> Result<Operator> {
        check_same(&self.space, &rhs.space)?;
        Ok(Operator { space: self.space.clone(), mat: self.mat.matmul(&rhs.mat) })
    }

    pub fn add(&self, rhs: &Operator) -> Result<Operator> {
        check_same(&self.space, &rhs.space)?;
        Ok(Operator { space: self.space.clone(), mat: &self.mat + &rhs.mat })
    }

    pub fn sub(&self, rhs: &Operator) -> Result<Operator> {
        check_same(&self.space, &rhs.space)?;
        Ok(Operator { space: self.space.clone(), mat: &self.mat - &rhs.mat })
    }

    pub fn commutator(&self, rhs: &Operator) -> Result<Operator> {
        check_same(&self.space, &rhs.space)?;
        Ok(Operator { space: self.space.clone(), mat: self.mat.commutator(&rhs.mat) })
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        check_same(&self.space, &ket.space)?;
        Ok(Ket { space: self.space.clone(), amps: self.mat.matvec(&ket.amps) })
    }

    /// `⟨bra|self|ket⟩`.
    pub fn sandwich(&self, bra: &Ket, ket: &Ket) -> Result<C64> {
        bra.inner(&self.apply(ket)?)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.mat.is_hermitian(tol)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.mat.matmul(&self.mat.adjoint()).max_abs_diff(&CMatrix::identity(self.dim())) <= tol
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.mat.max_abs_diff(&other.mat)
    }

    /// Eigenvalues (ascending) and eigenvectors of a Hermitian operator.
    pub fn eigh(&self) -> Result<(Vec<f64>, Vec<Ket>)> {
        if !self.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NotHermitian { tol: HERMITIAN_TOL });
        }
        let (vals, vecs) = linalg::hermitian_eigen(&self.mat);
        let n = self.dim();
        let kets =
            (0..n).map(|k| Ket { space: self.space.clone(), amps: (0..n).map(|i| vecs[(i, k)]).collect() }).collect();
        Ok((vals, kets))
    }

    /// Partial trace keeping the listed factors (returned in ascending
    /// factor order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Operator> {
        let (kept_dim, table) = self.space.regroup(keep)?;
        let mut out = CMatrix::zeros(kept_dim, kept_dim);
        for row in &table {
            for (a, &ra) in row.iter().enumerate() {
                for (b, &rb) in row.iter().enumerate() {
                    out[(a, b)] += self.mat[(ra, rb)];
                }
            }
        }
        Ok(Operator { space: self.space.kept_space(keep)?, mat: out })
    }
}

/// `tr_traced(|left⟩⟨right|)` without materializing the outer product.
pub fn partial_trace_outer(left: &Ket, right: &Ket, keep: &[usize]) -> Result<Operator> {
    check_same(&left.space, &right.space)?;
    let (kept_dim, table) = left.space.regroup(keep)?;
    let mut out = CMatrix::zeros(kept_dim, kept_dim);
    for row in &table {
        for (a, &ra) in row.iter().enumerate() {
            let l = left.amps[ra];
            for (b, &rb) in row.iter().enumerate() {
                out[(a, b)] += l * right.amps[rb].conj();
            }
        }
    }
    Ok(Operator { space: left.space.kept_space(keep)?, mat: out })
}

/// Tensor product of two kets or two operators.
pub trait Tensor {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for Ket {
    fn tensor(&self, other: &Ket) -> Ket {
        let amps = self.amps.iter().flat_map(|a| other.amps.iter().map(move |b| a * b)).collect();
        Ket { space: self.space.tensor(&other.space), amps }
    }
}

impl Tensor for Operator {
    fn tensor(&self, other: &Operator) -> Operator {
        Operator { space: self.space.tensor(&other.space), mat: self.mat.kron(&other.mat) }
    }
}

/// `tr(r1† r2)`.
pub fn two_state_inner(r1: &Operator, r2: &Operator) -> Result<C64> {
    check_same(&r1.space, &r2.space)?;
    Ok(r1.mat.as_slice().iter().zip(r2.mat.as_slice()).map(|(a, b)| a.conj() * b).sum())
}

/// Which side of an operator the propagator multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `U(t) · M`
    Left,
    /// `M · U(t)†`
    Right,
}

/// `U(t) = exp(-i h t)` for Hermitian `h`.
pub fn propagator(h: &Operator, t: f64) -> Result<Operator> {
    if !h.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NotHermitian { tol: HERMITIAN_TOL });
    }
    let mat = linalg::expm(&h.mat.scale(C64::new(0.0, -t)));
    Ok(Operator { space: h.space.clone(), mat })
}

pub fn evolve_ket(h: &Operator, t: f64, ket: &Ket) -> Result<Ket> {
    propagator(h, t)?.apply(ket)
}

pub fn evolve_operator(h: &Operator, t: f64, m: &Operator, side: Side) -> Result<Operator> {
    let u = propagator(h, t)?;
    match side {
        Side::Left => u.mul(m),
        Side::Right => m.mul(&u.adjoint()),
    }
}

pub(crate) fn check_same(a: &HilbertSpace, b: &HilbertSpace) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Modulus;
    use crate::sampling::{random_hermitian, random_ket, random_operator};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn rejects_degenerate_spaces() {
        assert!(HilbertSpace::new(vec![2, 1]).is_err());
        assert!(HilbertSpace::new(Vec::new()).is_err());
        assert_eq!(HilbertSpace::new(vec![2, 3, 4]).unwrap().dim(), 24);
    }

    #[test]
    fn identity_tensor_identity() {
        let i2 = Operator::identity(HilbertSpace::qubit());
        let i4 = i2.tensor(&i2);
        assert_eq!(i4, Operator::identity(HilbertSpace::qubits(2).unwrap()));
    }

    #[test]
    fn sigma_z_tensor_sigma_z_is_diagonal() {
        let zz = Operator::sigma_z().tensor(&Operator::sigma_z());
        let expect = CMatrix::from_diagonal(&[c(1.0), c(-1.0), c(-1.0), c(1.0)]);
        assert_eq!(zz.matrix(), &expect);
    }

    #[test]
    fn tensor_acts_factorwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_operator(&mut rng, HilbertSpace::qubit());
        let b = random_operator(&mut rng, HilbertSpace::new(vec![3]).unwrap());
        let u = random_ket(&mut rng, HilbertSpace::qubit());
        let v = random_ket(&mut rng, HilbertSpace::new(vec![3]).unwrap());
        let lhs = a.tensor(&b).apply(&u.tensor(&v)).unwrap();
        // per-index oracle: (A⊗B)(u⊗v)[3i+k] = (Σ_j A_ij u_j)(Σ_l B_kl v_l)
        for i in 0..2 {
            for k in 0..3 {
                let au: C64 = (0..2).map(|j| a.entry(i, j) * u.amps()[j]).sum();
                let bv: C64 = (0..3).map(|l| b.entry(k, l) * v.amps()[l]).sum();
                assert!((lhs.amps()[3 * i + k] - au * bv).modulus() < 1e-14);
            }
        }
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_operator(&mut rng, HilbertSpace::new(vec![3]).unwrap());
        let b = random_operator(&mut rng, HilbertSpace::qubit());
        let ab = a.tensor(&b);
        let ra = ab.partial_trace(&[0]).unwrap();
        assert!(ra.max_abs_diff(&a.scale(b.trace())) < 1e-14);
        let rb = ab.partial_trace(&[1]).unwrap();
        assert!(rb.max_abs_diff(&b.scale(a.trace())) < 1e-14);
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let s = C64::new(libm::sqrt(0.5), 0.0);
        let bell = Ket::new(HilbertSpace::qubits(2).unwrap(), vec![s, ZERO, ZERO, s]).unwrap();
        let r = bell.projector().partial_trace(&[1]).unwrap();
        let half = Operator::identity(HilbertSpace::qubit()).scale(c(0.5));
        assert!(r.max_abs_diff(&half) < 1e-15);
    }

    #[test]
    fn partial_trace_matches_index_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let space = HilbertSpace::new(vec![4, 2]).unwrap();
        let m = random_operator(&mut rng, space);
        let keep_first = m.partial_trace(&[0]).unwrap();
        let keep_second = m.partial_trace(&[1]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let s: C64 = (0..2).map(|k| m.entry(2 * i + k, 2 * j + k)).sum();
                assert!((keep_first.entry(i, j) - s).modulus() < 1e-13);
            }
        }
        for k in 0..2 {
            for l in 0..2 {
                let s: C64 = (0..4).map(|i| m.entry(2 * i + k, 2 * i + l)).sum();
                assert!((keep_second.entry(k, l) - s).modulus() < 1e-13);
            }
        }
    }

    #[test]
    fn partial_trace_middle_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_operator(&mut rng, HilbertSpace::qubit());
        let b = random_operator(&mut rng, HilbertSpace::new(vec![3]).unwrap());
        let d = random_operator(&mut rng, HilbertSpace::qubit());
        let abd = a.tensor(&b).tensor(&d);
        let r = abd.partial_trace(&[0, 2]).unwrap();
        assert!(r.max_abs_diff(&a.tensor(&d).scale(b.trace())) < 1e-13);
        assert!(abd.partial_trace(&[3]).is_err());
        assert!(abd.partial_trace(&[]).is_err());
    }

    #[test]
    fn outer_partial_trace_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let space = HilbertSpace::new(vec![2, 3, 2]).unwrap();
        let l = random_ket(&mut rng, space.clone());
        let r = random_ket(&mut rng, space);
        let dense = l.outer(&r).unwrap().partial_trace(&[0]).unwrap();
        let lean = partial_trace_outer(&l, &r, &[0]).unwrap();
        assert!(dense.max_abs_diff(&lean) < 1e-14);
    }

    #[test]
    fn inner_product_basics() {
        let space = HilbertSpace::qubit();
        let basis: Vec<Operator> = (0..2)
            .flat_map(|a| (0..2).map(move |b| (a, b)))
            .map(|(a, b)| Ket::basis(space.clone(), a).unwrap().outer(&Ket::basis(space.clone(), b).unwrap()).unwrap())
            .collect();
        for (i, x) in basis.iter().enumerate() {
            for (j, y) in basis.iter().enumerate() {
                let expect = if i == j { ONE } else { ZERO };
                assert_eq!(two_state_inner(x, y).unwrap(), expect);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let r1 = random_operator(&mut rng, HilbertSpace::new(vec![3]).unwrap());
        let r2 = random_operator(&mut rng, HilbertSpace::new(vec![3]).unwrap());
        let oracle: C64 =
            (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| r1.entry(i, j).conj() * r2.entry(i, j)).sum();
        let via_trace = r1.adjoint().mul(&r2).unwrap().trace();
        assert!((two_state_inner(&r1, &r2).unwrap() - oracle).modulus() < 1e-13);
        assert!((via_trace - oracle).modulus() < 1e-13);
        assert!(two_state_inner(&r1, &Operator::identity(HilbertSpace::qubit())).is_err());
    }

    #[test]
    fn evolution_at_zero_time_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let h = random_hermitian(&mut rng, HilbertSpace::qubits(2).unwrap());
        let psi = random_ket(&mut rng, HilbertSpace::qubits(2).unwrap());
        assert!(evolve_ket(&h, 0.0, &psi)
            .unwrap()
            .amps()
            .iter()
            .zip(psi.amps())
            .all(|(a, b)| (a - b).modulus() < 1e-15));
    }

    #[test]
    fn diagonal_hamiltonian_gives_phases() {
        let h = Operator::new(HilbertSpace::new(vec![3]).unwrap(), CMatrix::from_diagonal(&[c(0.5), c(-1.25), c(2.0)]))
            .unwrap();
        let psi = Ket::from_amps(vec![c(0.6), C64::new(0.0, 0.8), c(0.0)]).unwrap();
        let t = 0.7;
        let out = evolve_ket(&h, t, &psi).unwrap();
        for k in 0..3 {
            let expect = psi.amps()[k] * linalg::cis(-h.entry(k, k).re * t);
            assert!((out.amps()[k] - expect).modulus() < 1e-15);
        }
    }

    #[test]
    fn random_evolution_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h = random_hermitian(&mut rng, HilbertSpace::qubits(2).unwrap());
        let u = propagator(&h, 1.3).unwrap();
        assert!(u.is_unitary(1e-11));
        // oracle: spectral route exp(-iht) = V e^{-iDt} V†
        let (vals, vecs) = linalg::hermitian_eigen(h.matrix());
        let d = CMatrix::from_diagonal(&vals.iter().map(|&e| linalg::cis(-e * 1.3)).collect::<Vec<_>>());
        let spectral = vecs.matmul(&d).matmul(&vecs.adjoint());
        assert!(u.matrix().max_abs_diff(&spectral) < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let m = random_operator(&mut rng, HilbertSpace::qubit());
        assert!(matches!(propagator(&m, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn operator_evolution_sides() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let space = HilbertSpace::new(vec![3]).unwrap();
        let h = random_hermitian(&mut rng, space.clone());
        let m = random_operator(&mut rng, space);
        let u = propagator(&h, 0.4).unwrap();
        let left = evolve_operator(&h, 0.4, &m, Side::Left).unwrap();
        let right = evolve_operator(&h, 0.4, &m, Side::Right).unwrap();
        assert!(left.max_abs_diff(&u.mul(&m).unwrap()) < 1e-14);
        assert!(right.max_abs_diff(&m.mul(&u.adjoint()).unwrap()) < 1e-14);
    }

    #[test]
    fn apply_local_matches_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let space = HilbertSpace::new(vec![2, 3, 2]).unwrap();
        let psi = random_ket(&mut rng, space.clone());
        let op = random_operator(&mut rng, HilbertSpace::new(vec![3]).unwrap());
        let dense = Operator::embed(&op, 1, &space).unwrap().apply(&psi).unwrap();
        let local = psi.apply_local(&op, 1).unwrap();
        assert!(dense.amps().iter().zip(local.amps()).all(|(a, b)| (a - b).modulus() < 1e-14));
    }
}
