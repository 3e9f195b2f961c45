//! Second-order perturbative dynamics of a reduced two-state.
//!
//! For `H_int = λ Σ_i Q_i ⊗ L_i` with free environment conditions `e1`, `e2`
//! the reduced two-state obeys, to `O(λ²)`,
//!
//! ```text
//! ∂_t ϱ = −iλ (L_i)_w [Q_i, ϱ] − λ² Δ_ij [Q_i, t Q_j ϱ + (T−t) ϱ Q_j]
//! Δ_ij  = (L_i L_j)_w − (L_i)_w (L_j)_w
//! ```
//!
//! For `Q = σ_z` the solution is closed:
//! `ϱ_↑↓(t) = exp[−2iλL_w t − 2λ²Δ(t² − Tt)] ϱ_↑↓(0)`, `ϱ_↓↑` with `+2iλL_w t`,
//! diagonals constant.
//!
//! The burst model couples `σ ⊗ L_n` only during `[nτ, (n+1)τ)`, `T = Nτ`.
//! Gating each channel by `f_n(t)` and replacing `t`, `T−t` by the elapsed
//! and remaining interaction time of the partner channel gives
//!
//! ```text
//! ∂_t ϱ = −iλ f_n (L_n)_w [σ, ϱ]
//!         − λ² Δ_nn [σ, (t−nτ) σϱ + ((n+1)τ−t) ϱσ]
//!         − λ² τ Σ_{m<n} Δ_nm [σ, σϱ] − λ² τ Σ_{m>n} Δ_nm [σ, ϱσ]
//! ```
//!
//! with `n` the active window. Free Hamiltonians commuting with the
//! interaction are handled in the interaction picture.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::hilbert::{self, HilbertSpace, Ket, Operator, Tensor, HERMITIAN_TOL};
use crate::linalg::{cexp, CMatrix, Modulus, ZERO};
use crate::spinbath::SpinBathParams;
use crate::twostate::{env_two_state, purity, weak_evolution_operator, weak_value_in, TwoState, ENV_OVERLAP_TOL};
use crate::{Error, Result, C64};

/// Continuous coupling is trusted for `λT` below this.
pub const CONTINUOUS_LIMIT: f64 = 1.0;
/// Burst coupling is trusted for `λτ` below this.
pub const BURST_LIMIT: f64 = 0.1;
pub const COMMUTATION_TOL: f64 = 1e-10;
pub const MIN_STEPS: usize = 10;
pub const DEFAULT_STEPS: usize = 2000;

const I: C64 = C64::new(0.0, 1.0);

/// Free environment: pre-selected `e1`, post-selected `e2`, Hamiltonian `h_e`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeEnvironment {
    pub e1: Ket,
    pub e2: Ket,
    pub h_e: Operator,
}

impl FreeEnvironment {
    pub fn new(e1: Ket, e2: Ket, h_e: Operator) -> Result<Self> {
        hilbert::check_same(e1.space(), e2.space())?;
        hilbert::check_same(e1.space(), h_e.space())?;
        if !h_e.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NotHermitian { tol: HERMITIAN_TOL });
        }
        Ok(FreeEnvironment { e1, e2, h_e })
    }

    /// `H_e = 0`.
    pub fn static_conditions(e1: Ket, e2: Ket) -> Result<Self> {
        let h_e = Operator::zeros(e1.space().clone());
        Self::new(e1, e2, h_e)
    }

    pub fn space(&self) -> &HilbertSpace {
        self.e1.space()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousSpec {
    pub lambda: f64,
    pub t_final: f64,
    pub q_ops: Vec<Operator>,
    pub l_ops: Vec<Operator>,
    pub env: FreeEnvironment,
    /// System Hamiltonian; must commute with the interaction.
    pub h_s: Option<Operator>,
}

/// Environment conditions for the burst model.
#[derive(Clone, Debug, PartialEq)]
pub enum BurstEnvironment {
    /// One ket pair per particle; `L_n` acts on particle `n` alone.
    Product { pre: Vec<Ket>, post: Vec<Ket> },
    /// Arbitrary (possibly correlated) conditions; `L_n` acts on the whole
    /// environment space.
    Joint { e1: Ket, e2: Ket },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BurstSpec {
    pub lambda: f64,
    pub tau: f64,
    pub sigma: Operator,
    pub l_ops: Vec<Operator>,
    pub env: BurstEnvironment,
}

impl BurstSpec {
    pub fn n_particles(&self) -> usize {
        self.l_ops.len()
    }

    pub fn t_final(&self) -> f64 {
        self.tau * self.l_ops.len() as f64
    }

    /// Index of the window containing `t`; `t = Nτ` belongs to the last one.
    pub fn window(&self, t: f64) -> usize {
        let n = libm::floor(t / self.tau);
        if n < 0.0 {
            0
        } else {
            (n as usize).min(self.n_particles() - 1)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InteractionKind {
    Continuous(ContinuousSpec),
    Burst(BurstSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct InteractionSpec {
    kind: InteractionKind,
    allow_strong_coupling: bool,
}

/// Weak-coupling check outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Validity {
    pub quantity: &'static str,
    pub value: f64,
    pub limit: f64,
}

impl Validity {
    pub fn holds(&self) -> bool {
        self.value < self.limit
    }
}

fn check_hermitian(ops: &[Operator]) -> Result<()> {
    for op in ops {
        if !op.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NotHermitian { tol: HERMITIAN_TOL });
        }
    }
    Ok(())
}

fn check_coupling(lambda: f64, span: f64, field: &'static str) -> Result<()> {
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter { field: "lambda", reason: "must be finite" });
    }
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::InvalidParameter { field, reason: "must be positive and finite" });
    }
    Ok(())
}

impl InteractionSpec {
    pub fn continuous(spec: ContinuousSpec) -> Result<Self> {
        check_coupling(spec.lambda, spec.t_final, "t_final")?;
        if spec.q_ops.is_empty() {
            return Err(Error::Empty("q_ops"));
        }
        if spec.q_ops.len() != spec.l_ops.len() {
            return Err(Error::InvalidParameter { field: "l_ops", reason: "one L per Q required" });
        }
        let sys = spec.q_ops[0].space().clone();
        for q in &spec.q_ops {
            hilbert::check_same(&sys, q.space())?;
        }
        for l in &spec.l_ops {
            hilbert::check_same(spec.env.space(), l.space())?;
        }
        check_hermitian(&spec.q_ops)?;
        check_hermitian(&spec.l_ops)?;
        if let Some(h) = &spec.h_s {
            hilbert::check_same(&sys, h.space())?;
            check_hermitian(core::slice::from_ref(h))?;
        }
        let h_s = spec.h_s.clone().unwrap_or_else(|| Operator::zeros(sys.clone()));
        let h0 = h_s
            .tensor(&Operator::identity(spec.env.space().clone()))
            .add(&Operator::identity(sys.clone()).tensor(&spec.env.h_e))?;
        let mut h_int = Operator::zeros(h0.space().clone());
        for (q, l) in spec.q_ops.iter().zip(&spec.l_ops) {
            h_int = h_int.add(&q.tensor(l))?;
        }
        let deviation = h0.commutator(&h_int)?.matrix().max_abs();
        if deviation > COMMUTATION_TOL {
            return Err(Error::NonCommuting { deviation });
        }
        Ok(InteractionSpec { kind: InteractionKind::Continuous(spec), allow_strong_coupling: false })
    }

    pub fn burst(spec: BurstSpec) -> Result<Self> {
        check_coupling(spec.lambda, spec.tau, "tau")?;
        if spec.l_ops.is_empty() {
            return Err(Error::Empty("l_ops"));
        }
        check_hermitian(core::slice::from_ref(&spec.sigma))?;
        check_hermitian(&spec.l_ops)?;
        match &spec.env {
            BurstEnvironment::Product { pre, post } => {
                if pre.len() != spec.l_ops.len() || post.len() != spec.l_ops.len() {
                    return Err(Error::InvalidParameter {
                        field: "env",
                        reason: "one condition pair per particle required",
                    });
                }
                for ((l, a), b) in spec.l_ops.iter().zip(pre).zip(post) {
                    hilbert::check_same(l.space(), a.space())?;
                    hilbert::check_same(l.space(), b.space())?;
                }
            }
            BurstEnvironment::Joint { e1, e2 } => {
                hilbert::check_same(e1.space(), e2.space())?;
                for l in &spec.l_ops {
                    hilbert::check_same(e1.space(), l.space())?;
                }
            }
        }
        Ok(InteractionSpec { kind: InteractionKind::Burst(spec), allow_strong_coupling: false })
    }

    /// Lets [`integrate`] run outside the weak-coupling regime; the
    /// trajectory then carries a warning.
    pub fn acknowledge_strong_coupling(mut self) -> Self {
        self.allow_strong_coupling = true;
        self
    }

    pub fn kind(&self) -> &InteractionKind {
        &self.kind
    }

    pub fn lambda(&self) -> f64 {
        match &self.kind {
            InteractionKind::Continuous(c) => c.lambda,
            InteractionKind::Burst(b) => b.lambda,
        }
    }

    pub fn t_final(&self) -> f64 {
        match &self.kind {
            InteractionKind::Continuous(c) => c.t_final,
            InteractionKind::Burst(b) => b.t_final(),
        }
    }

    pub fn system_space(&self) -> &HilbertSpace {
        match &self.kind {
            InteractionKind::Continuous(c) => c.q_ops[0].space(),
            InteractionKind::Burst(b) => b.sigma.space(),
        }
    }

    /// `λT < 1` (continuous) or `λτ < 0.1` (burst).
    pub fn validity(&self) -> Validity {
        match &self.kind {
            InteractionKind::Continuous(c) => {
                Validity { quantity: "lambda*T", value: libm::fabs(c.lambda) * c.t_final, limit: CONTINUOUS_LIMIT }
            }
            InteractionKind::Burst(b) => {
                Validity { quantity: "lambda*tau", value: libm::fabs(b.lambda) * b.tau, limit: BURST_LIMIT }
            }
        }
    }
}

/// `(L_i)_w` and `Δ_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakMoments {
    pub l_w: Vec<C64>,
    pub delta: CMatrix,
}

impl WeakMoments {
    /// Single channel.
    pub fn scalar(l_w: C64, delta: C64) -> Self {
        WeakMoments { l_w: vec![l_w], delta: CMatrix::from_diagonal(&[delta]) }
    }
}

fn moments_from(ops: &[Operator], env_ts: &Operator) -> Result<WeakMoments> {
    let l_w = ops.iter().map(|l| weak_value_in(l, env_ts)).collect::<Result<Vec<_>>>()?;
    let mut delta = CMatrix::zeros(ops.len(), ops.len());
    for (i, li) in ops.iter().enumerate() {
        for (j, lj) in ops.iter().enumerate() {
            delta[(i, j)] = weak_value_in(&li.mul(lj)?, env_ts)? - l_w[i] * l_w[j];
        }
    }
    Ok(WeakMoments { l_w, delta })
}

fn product_moments(ops: &[Operator], pre: &[Ket], post: &[Ket]) -> Result<WeakMoments> {
    let n = ops.len();
    let mut overlap = Vec::with_capacity(n);
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for ((l, a), b) in ops.iter().zip(pre).zip(post) {
        let ov = b.inner(a)?;
        if ov.modulus() <= ENV_OVERLAP_TOL {
            return Err(Error::OrthogonalEnvironment { norm: ov.modulus() });
        }
        overlap.push(ov);
        first.push(l.sandwich(b, a)?);
        second.push(l.mul(l)?.sandwich(b, a)?);
    }
    let total: C64 = overlap.iter().product();
    // each moment is a full product over particles, with L inserted where it acts
    let others = |skip: &[usize]| -> C64 {
        overlap.iter().enumerate().filter(|(k, _)| !skip.contains(k)).map(|(_, o)| *o).product()
    };
    let l_w: Vec<C64> = (0..n).map(|k| first[k] * others(&[k]) / total).collect();
    let mut delta = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let joint = if i == j { second[i] * others(&[i]) } else { first[i] * first[j] * others(&[i, j]) };
            delta[(i, j)] = joint / total - l_w[i] * l_w[j];
        }
    }
    Ok(WeakMoments { l_w, delta })
}

/// Weak moments of the environment operators in the free environment
/// two-state.
pub fn weak_moments(spec: &InteractionSpec) -> Result<WeakMoments> {
    match &spec.kind {
        InteractionKind::Continuous(c) => {
            let env_ts = env_two_state(&c.env.e1, &c.env.e2, &c.env.h_e, c.t_final)?;
            moments_from(&c.l_ops, &env_ts)
        }
        InteractionKind::Burst(b) => match &b.env {
            BurstEnvironment::Product { pre, post } => product_moments(&b.l_ops, pre, post),
            BurstEnvironment::Joint { e1, e2 } => moments_from(&b.l_ops, &e1.outer(e2)?),
        },
    }
}

/// `(L_w, Δ)` for `L = Σ_k g_k σ_z^(k)` in the spin-bath conditions, so that
/// `H_int = σ_z ⊗ L` with unit coupling.
pub fn spin_bath_moments(p: &SpinBathParams) -> Result<WeakMoments> {
    let mut l_w = ZERO;
    let mut delta = ZERO;
    for ((g, pre), post) in p.g.iter().zip(&p.bath_pre).zip(&p.bath_post) {
        let up = pre.up * post.up.conj();
        let down = pre.down * post.down.conj();
        let ov = up + down;
        if ov.modulus() <= ENV_OVERLAP_TOL {
            return Err(Error::OrthogonalEnvironment { norm: ov.modulus() });
        }
        let w = (up - down) / ov;
        l_w += w * *g;
        delta += (C64::new(1.0, 0.0) - w * w) * (g * g);
    }
    Ok(WeakMoments::scalar(l_w, delta))
}

/// One coupling channel with its gating and the interaction time it has
/// accumulated before `t` and will accumulate after.
struct Channel<'a> {
    q: &'a CMatrix,
    active: bool,
    before: f64,
    after: f64,
}

fn generic_rhs(lambda: f64, rho: &CMatrix, channels: &[Channel], m: &WeakMoments) -> CMatrix {
    let mut out = CMatrix::zeros(rho.rows(), rho.cols());
    let mut acc = |term: &CMatrix, c: C64| {
        for (o, x) in out.as_mut_slice().iter_mut().zip(term.as_slice()) {
            *o += c * x;
        }
    };
    for (i, ci) in channels.iter().enumerate() {
        if !ci.active {
            continue;
        }
        acc(&ci.q.commutator(rho), -I * lambda * m.l_w[i]);
        for (j, cj) in channels.iter().enumerate() {
            let d = m.delta[(i, j)];
            if d == ZERO || (cj.before == 0.0 && cj.after == 0.0) {
                continue;
            }
            let inner = &cj.q.matmul(rho).scale_real(cj.before) + &rho.matmul(cj.q).scale_real(cj.after);
            acc(&ci.q.commutator(&inner), -d * (lambda * lambda));
        }
    }
    out
}

fn check_rho(rho: &Operator, spec: &InteractionSpec) -> Result<()> {
    hilbert::check_same(spec.system_space(), rho.space())
}

fn check_time(t: f64, t_max: f64) -> Result<()> {
    if !(0.0..=t_max).contains(&t) {
        return Err(Error::TimeOutOfRange { t, t_max });
    }
    Ok(())
}

/// Right-hand side of the continuous modified Liouville equation.
pub fn rhs_modified(t: f64, rho: &Operator, spec: &InteractionSpec, moments: &WeakMoments) -> Result<Operator> {
    let InteractionKind::Continuous(c) = &spec.kind else {
        return Err(Error::KindMismatch("continuous"));
    };
    check_rho(rho, spec)?;
    Ok(op_like(rho, continuous_rhs(c, t, rho.matrix(), moments)))
}

fn continuous_rhs(c: &ContinuousSpec, t: f64, rho: &CMatrix, m: &WeakMoments) -> CMatrix {
    let channels: Vec<Channel> =
        c.q_ops.iter().map(|q| Channel { q: q.matrix(), active: true, before: t, after: c.t_final - t }).collect();
    generic_rhs(c.lambda, rho, &channels, m)
}

/// Right-hand side of the burst equation at `t ∈ [0, Nτ]`.
pub fn rhs_burst(t: f64, rho: &Operator, spec: &InteractionSpec, moments: &WeakMoments) -> Result<Operator> {
    let InteractionKind::Burst(b) = &spec.kind else {
        return Err(Error::KindMismatch("burst"));
    };
    check_rho(rho, spec)?;
    check_time(t, b.t_final())?;
    Ok(op_like(rho, burst_rhs(b, b.window(t), t, rho.matrix(), moments)))
}

fn burst_rhs(b: &BurstSpec, window: usize, t: f64, rho: &CMatrix, m: &WeakMoments) -> CMatrix {
    let tau = b.tau;
    let q = b.sigma.matrix();
    let channels: Vec<Channel> = (0..b.n_particles())
        .map(|n| {
            let start = n as f64 * tau;
            Channel {
                q,
                active: n == window,
                before: (t - start).clamp(0.0, tau),
                after: (start + tau - t).clamp(0.0, tau),
            }
        })
        .collect();
    generic_rhs(b.lambda, rho, &channels, m)
}

fn op_like(like: &Operator, mat: CMatrix) -> Operator {
    Operator::new(like.space().clone(), mat).expect("same shape")
}

/// `ϱ_↑↓` and `ϱ_↓↑` carried by `exp[∓2iλL_w t − 2λ²Δ(t² − Tt)]`, diagonals
/// unchanged.
pub fn closed_form_spin(rs0: &TwoState, l_w: C64, delta_l: C64, lambda: f64, big_t: f64, t: f64) -> Result<TwoState> {
    hilbert::check_same(rs0.space(), &HilbertSpace::qubit())?;
    let second = -delta_l * (2.0 * lambda * lambda * (t * t - big_t * t));
    let first = I * (2.0 * lambda * t) * l_w;
    let mut m = rs0.operator().matrix().clone();
    m[(0, 1)] *= cexp(second - first);
    m[(1, 0)] *= cexp(second + first);
    TwoState::new(Operator::from_matrix(m)?, rs0.t1(), rs0.t2(), t)
}

/// Exact reduced two-states at every burst boundary `t = kτ`, `k = 0..=N`,
/// for a product environment:
///
/// ```text
/// ϱ(kτ) = M_{k−1}⋯M_0 |s1⟩⟨s2| M_{N−1}⋯M_k
/// M_n   = ⟨e2_n| e^{−iλτ σ⊗L_n} |e1_n⟩ / ⟨e2_n|e1_n⟩
/// ```
pub fn product_burst_boundaries(spec: &InteractionSpec, s1: &Ket, s2: &Ket) -> Result<Vec<TwoState>> {
    let InteractionKind::Burst(b) = &spec.kind else {
        return Err(Error::KindMismatch("burst"));
    };
    let BurstEnvironment::Product { pre, post } = &b.env else {
        return Err(Error::KindMismatch("burst with product environment"));
    };
    hilbert::check_same(b.sigma.space(), s1.space())?;
    hilbert::check_same(b.sigma.space(), s2.space())?;
    let ms = b
        .l_ops
        .iter()
        .zip(pre.iter().zip(post))
        .map(|(l, (e1, e2))| {
            let h = b.sigma.tensor(l).scale(C64::new(b.lambda, 0.0));
            weak_evolution_operator(&h, &Operator::zeros(l.space().clone()), e1, e2, 0.0, b.tau)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = ms.len();
    let big_t = b.t_final();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut left = s1.clone();
        for m in &ms[..k] {
            left = m.apply(&left)?;
        }
        let mut right = s2.clone();
        for m in ms[k..].iter().rev() {
            right = m.adjoint().apply(&right)?;
        }
        let t = if k == n { big_t } else { b.tau * k as f64 };
        out.push(TwoState::new(left.outer(&right)?, 0.0, big_t, t)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    /// `|ϱ_ij|` for `i < j`, row by row.
    pub coherence: Vec<f64>,
    /// Singular values of `ϱ`, descending.
    pub schmidt: Vec<f64>,
    /// Purity of `ϱϱ†` normalized to unit trace.
    pub purity: f64,
}

impl Diagnostics {
    pub fn of(ts: &TwoState) -> Result<Self> {
        let n = ts.space().dim();
        let mut coherence = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                coherence.push(ts.entry(i, j).modulus());
            }
        }
        Ok(Diagnostics { coherence, schmidt: ts.schmidt_spectrum(), purity: purity(&ts.rho_in())? })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TwoState>,
    pub diagnostics: Vec<Diagnostics>,
    pub warnings: Vec<String>,
    h_s: Option<Operator>,
}

impl Trajectory {
    /// States mapped back from the interaction picture,
    /// `e^{−iH_s t} ϱ_I e^{iH_s t}`. Identity when there is no `H_s`.
    pub fn to_schrodinger(&self) -> Result<Vec<TwoState>> {
        let Some(h) = &self.h_s else {
            return Ok(self.states.clone());
        };
        self.states
            .iter()
            .map(|s| {
                let u = hilbert::propagator(h, s.time())?;
                let op = u.mul(s.operator())?.mul(&u.adjoint())?;
                TwoState::new(op, s.t1(), s.t2(), s.time())
            })
            .collect()
    }

    pub fn last(&self) -> &TwoState {
        self.states.last().expect("non-empty")
    }
}

fn rk4_step(f: &dyn Fn(f64, &CMatrix) -> CMatrix, t: f64, h: f64, y: &CMatrix) -> CMatrix {
    let k1 = f(t, y);
    let k2 = f(t + h / 2.0, &(y + &k1.scale_real(h / 2.0)));
    let k3 = f(t + h / 2.0, &(y + &k2.scale_real(h / 2.0)));
    let k4 = f(t + h, &(y + &k3.scale_real(h)));
    let sum = &(&k1 + &k2.scale_real(2.0)) + &(&k3.scale_real(2.0) + &k4);
    y + &sum.scale_real(h / 6.0)
}

/// Classical RK4 on `[0, T]` with `steps` fixed steps. Burst runs round the
/// step count up to a whole number of steps per window so that no step
/// straddles a window boundary. `rs0` must be given at `t = 0`.
pub fn integrate(rs0: &TwoState, spec: &InteractionSpec, steps: usize) -> Result<Trajectory> {
    if steps < MIN_STEPS {
        return Err(Error::TooFewSteps(steps));
    }
    check_rho(rs0.operator(), spec)?;
    if rs0.time() != 0.0 {
        return Err(Error::InvalidParameter { field: "rs0", reason: "must be given at t = 0" });
    }
    let mut warnings = Vec::new();
    let v = spec.validity();
    if !v.holds() {
        if !spec.allow_strong_coupling {
            return Err(Error::WeakCouplingViolated { quantity: v.quantity, value: v.value, limit: v.limit });
        }
        warnings.push(format!(
            "outside the weak-coupling regime: {} = {} >= {}; second-order dynamics may be inaccurate",
            v.quantity, v.value, v.limit
        ));
    }
    let m = weak_moments(spec)?;
    let big_t = spec.t_final();
    let (total, per_window) = match &spec.kind {
        InteractionKind::Continuous(_) => (steps, steps),
        InteractionKind::Burst(b) => {
            let per = steps.div_ceil(b.n_particles());
            (per * b.n_particles(), per)
        }
    };
    let h = big_t / total as f64;
    let time_at = |k: usize| if k == total { big_t } else { big_t * k as f64 / total as f64 };

    let mut y = rs0.operator().matrix().clone();
    let mut times = Vec::with_capacity(total + 1);
    let mut mats = Vec::with_capacity(total + 1);
    times.push(0.0);
    mats.push(y.clone());
    for k in 0..total {
        let t = time_at(k);
        y = match &spec.kind {
            InteractionKind::Continuous(c) => rk4_step(&|s, r| continuous_rhs(c, s, r, &m), t, h, &y),
            InteractionKind::Burst(b) => {
                let window = k / per_window;
                rk4_step(&|s, r| burst_rhs(b, window, s, r, &m), t, h, &y)
            }
        };
        times.push(time_at(k + 1));
        mats.push(y.clone());
    }

    let space = rs0.space().clone();
    let mut states = Vec::with_capacity(mats.len());
    let mut diagnostics = Vec::with_capacity(mats.len());
    for (t, mat) in times.iter().zip(mats) {
        let ts = TwoState::new(Operator::new(space.clone(), mat)?, 0.0, big_t, *t)?;
        diagnostics.push(Diagnostics::of(&ts)?);
        states.push(ts);
    }
    let h_s = match &spec.kind {
        InteractionKind::Continuous(c) => c.h_s.clone(),
        InteractionKind::Burst(_) => None,
    };
    Ok(Trajectory { times, states, diagnostics, warnings, h_s })
}
