//! Dense row-major complex matrices and the handful of factorizations the
//! rest of the crate needs: matrix exponential, Hermitian eigensolver,
//! singular values and an LU solve.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::C64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// `e^{iθ}` via libm so results do not depend on the platform math library.
#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::new(libm::cos(theta), libm::sin(theta))
}

#[inline]
pub fn cexp(z: C64) -> C64 {
    cis(z.im) * libm::exp(z.re)
}

/// `|z|` via libm; `Complex::norm` switches to the platform `hypot` when
/// another crate in the build enables `num-traits/std`.
pub trait Modulus {
    fn modulus(&self) -> f64;
}

impl Modulus for C64 {
    #[inline]
    fn modulus(&self) -> f64 {
        libm::hypot(self.re, self.im)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        CMatrix { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.modulus()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).modulus()).fold(0.0, f64::max)
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self[(i, j)].modulus()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// Kronecker product; the left operand indexes the most significant digit.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (r, c) = (self.rows * rhs.rows, self.cols * rhs.cols);
        Self::from_fn(r, c, |i, j| self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)])
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (i..self.cols).all(|j| (self[(i, j)] - self[(j, i)].conj()).modulus() <= tol))
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].modulus() <= tol))
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Neg for CMatrix {
    type Output = CMatrix;
    fn neg(mut self) -> CMatrix {
        self.data.iter_mut().for_each(|x| *x = -*x);
        self
    }
}

/// Solves `a · x = b` by LU decomposition with partial pivoting.
/// Returns `None` when `a` is numerically singular.
pub fn lu_solve(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    let n = a.rows;
    assert!(a.is_square() && b.rows == n);
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let (piv, pmax) =
            (k..n).map(|i| (i, lu[(i, k)].modulus())).fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if pmax == 0.0 || !pmax.is_finite() {
            return None;
        }
        lu.swap_rows(k, piv);
        x.swap_rows(k, piv);
        let inv = ONE / lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] * inv;
            if f == ZERO {
                continue;
            }
            for j in k..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= f * v;
            }
            for j in 0..x.cols {
                let v = x[(k, j)];
                x[(i, j)] -= f * v;
            }
        }
    }
    for k in (0..n).rev() {
        let inv = ONE / lu[(k, k)];
        for j in 0..x.cols {
            let mut s = x[(k, j)];
            for m in (k + 1)..n {
                s -= lu[(k, m)] * x[(m, j)];
            }
            x[(k, j)] = s * inv;
        }
    }
    Some(x)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant. Diagonal inputs take an exact elementwise path.
pub fn expm(a: &CMatrix) -> CMatrix {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.rows;
    if a.is_diagonal(1e-14) {
        return CMatrix::from_diagonal(&a.diagonal().into_iter().map(cexp).collect::<Vec<_>>());
    }
    let norm = a.norm_one();
    let s = if norm > THETA13 { libm::ceil(libm::log2(norm / THETA13)) as i32 } else { 0 };
    let a = a.scale_real(libm::pow(2.0, -(s as f64)));
    let id = CMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let b = &PADE13;
    let lin = |m: &CMatrix, c: f64| m.scale_real(c);
    let u_inner = &(&lin(&a6, b[13]) + &lin(&a4, b[11])) + &lin(&a2, b[9]);
    let u_tail = &(&(&lin(&a6, b[7]) + &lin(&a4, b[5])) + &lin(&a2, b[3])) + &lin(&id, b[1]);
    let u = a.matmul(&(&a6.matmul(&u_inner) + &u_tail));
    let v_inner = &(&lin(&a6, b[12]) + &lin(&a4, b[10])) + &lin(&a2, b[8]);
    let v_tail = &(&(&lin(&a6, b[6]) + &lin(&a4, b[4])) + &lin(&a2, b[2])) + &lin(&id, b[0]);
    let v = &a6.matmul(&v_inner) + &v_tail;
    let mut r = lu_solve(&(&v - &u), &(&v + &u)).expect("Padé denominator is nonsingular after scaling");
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r
}

/// Unitary `G` on the `(p, q)` plane such that `G† [[a, b], [b*, d]] G`
/// is diagonal. Returned as `(g_pp, g_pq, g_qp, g_qq)`.
fn jacobi_rotation(a: f64, d: f64, b: C64) -> (C64, C64, C64, C64) {
    let abs_b = b.modulus();
    let phase = b / abs_b;
    let tau = (d - a) / (2.0 * abs_b);
    let t = if tau >= 0.0 {
        1.0 / (tau + libm::sqrt(1.0 + tau * tau))
    } else {
        -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
    };
    let c = 1.0 / libm::sqrt(1.0 + t * t);
    let s = t * c;
    let ph = phase.conj();
    (C64::new(c, 0.0), C64::new(s, 0.0), ph * (-s), ph * c)
}

fn rotate_columns(m: &mut CMatrix, p: usize, q: usize, g: (C64, C64, C64, C64)) {
    let (gpp, gpq, gqp, gqq) = g;
    for i in 0..m.rows {
        let (xp, xq) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = xp * gpp + xq * gqp;
        m[(i, q)] = xp * gpq + xq * gqq;
    }
}

fn rotate_rows_adjoint(m: &mut CMatrix, p: usize, q: usize, g: (C64, C64, C64, C64)) {
    let (gpp, gpq, gqp, gqq) = g;
    for j in 0..m.cols {
        let (xp, xq) = (m[(p, j)], m[(q, j)]);
        m[(p, j)] = gpp.conj() * xp + gqp.conj() * xq;
        m[(q, j)] = gpq.conj() * xp + gqq.conj() * xq;
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// the columns of a unitary matrix.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    assert!(h.is_square());
    let n = h.rows;
    let mut a = h.clone();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if libm::sqrt(off) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].modulus() <= 1e-300 {
                    continue;
                }
                let g = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, a[(p, q)]);
                rotate_columns(&mut a, p, q, g);
                rotate_rows_adjoint(&mut a, p, q, g);
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                rotate_columns(&mut v, p, q, g);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    (values, vectors)
}

/// Singular values in descending order, by one-sided (Hestenes) Jacobi.
/// Small singular values keep high relative accuracy, which the rank-one
/// tests rely on.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut a = if m.rows >= m.cols { m.clone() } else { m.adjoint() };
    let n = a.cols;
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, ZERO);
                for i in 0..a.rows {
                    let (x, y) = (a[(i, p)], a[(i, q)]);
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                if gamma.modulus() <= 1e-16 * libm::sqrt(alpha * beta) || gamma.modulus() == 0.0 {
                    continue;
                }
                rotated = true;
                let g = jacobi_rotation(alpha, beta, gamma);
                rotate_columns(&mut a, p, q, g);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|j| libm::sqrt((0..a.rows).map(|i| a[(i, j)].norm_sqr()).sum())).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample_hermitian() -> CMatrix {
        let m = CMatrix::from_row_major(
            3,
            3,
            vec![
                c(1.0, 0.0),
                c(0.3, -0.2),
                c(-0.5, 0.1),
                c(0.0, 0.7),
                c(2.0, 0.4),
                c(0.2, 0.0),
                c(0.1, 0.1),
                c(-0.3, 0.0),
                c(-1.0, 0.2),
            ],
        );
        (&m + &m.adjoint()).scale_real(0.5)
    }

    #[test]
    fn expm_matches_taylor_series() {
        let h = sample_hermitian();
        let a = h.scale(c(0.0, -0.8));
        let mut term = CMatrix::identity(3);
        let mut sum = term.clone();
        for k in 1..40 {
            term = term.matmul(&a).scale_real(1.0 / k as f64);
            sum = &sum + &term;
        }
        assert!(expm(&a).max_abs_diff(&sum) < 1e-13);
    }

    #[test]
    fn expm_large_norm_uses_squaring() {
        let h = sample_hermitian();
        let u = expm(&h.scale(c(0.0, -40.0)));
        let uu = u.matmul(&u.adjoint());
        assert!(uu.max_abs_diff(&CMatrix::identity(3)) < 1e-11);
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let h = sample_hermitian();
        let (vals, vecs) = hermitian_eigen(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMatrix::from_diagonal(&vals.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
        let back = vecs.matmul(&d).matmul(&vecs.adjoint());
        assert!(back.max_abs_diff(&h) < 1e-13);
    }

    #[test]
    fn singular_values_of_rank_one_are_sharp() {
        let u = [c(0.3, 0.1), c(-0.7, 0.2)];
        let v = [c(0.5, -0.5), c(0.1, 0.9)];
        let m = CMatrix::from_fn(2, 2, |i, j| u[i] * v[j].conj());
        let sv = singular_values(&m);
        assert!(sv[1] < 1e-15 * sv[0]);
        let expect =
            libm::sqrt(u.iter().map(|x| x.norm_sqr()).sum::<f64>() * v.iter().map(|x| x.norm_sqr()).sum::<f64>());
        assert!((sv[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn lu_solve_detects_singular() {
        let m = CMatrix::from_row_major(2, 2, vec![ONE, ONE, ONE, ONE]);
        assert!(lu_solve(&m, &CMatrix::identity(2)).is_none());
    }
}
