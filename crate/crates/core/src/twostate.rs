//! Two-states and the probability rules built on them.
//!
//! A two-state `ϱ` is an operator carrying the initial condition in its left
//! slot and the final condition in its right slot. For a closed system with
//! conditions `|ψ_in⟩` at `t1` and `|ψ_out⟩` at `t2`,
//! `ϱ(t) = U(t−t1)|ψ_in⟩⟨ψ_out|U(t2−t)`, which satisfies `i∂ϱ = [H, ϱ]`.

use alloc::vec::Vec;

use crate::hilbert::{self, check_same, partial_trace_outer, two_state_inner, HilbertSpace, Ket, Operator, Tensor};
use crate::linalg::{singular_values, Modulus};
use crate::{Error, Result, C64};

/// Relative size of the second singular value below which a two-state is
/// treated as rank one.
pub const GENERIC_TOL: f64 = 1e-9;
/// Overlap modulus below which boundary conditions count as orthogonal.
pub const ORTHOGONAL_TOL: f64 = 1e-14;
/// `|N|` below which free environment conditions count as orthogonal.
pub const ENV_OVERLAP_TOL: f64 = 1e-12;
/// Smallest admissible `Σ_a |⟨P_a, ϱ⟩|²`.
pub const AMPLITUDE_FLOOR: f64 = 1e-24;
/// Tolerance for projector and basis validation.
pub const PROJECTOR_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct TwoState {
    op: Operator,
    t1: f64,
    t2: f64,
    t: f64,
    orthogonal: bool,
}

impl TwoState {
    /// Wraps an operator as a two-state at time `t` between `t1` and `t2`.
    pub fn new(op: Operator, t1: f64, t2: f64, t: f64) -> Result<Self> {
        if !(t1 <= t && t <= t2) {
            return Err(Error::TimeOrder);
        }
        let norm = op.matrix().frobenius_norm();
        if !(norm.is_finite() && norm > f64::MIN_POSITIVE) {
            return Err(Error::VanishingTwoState);
        }
        Ok(TwoState { op, t1, t2, t, orthogonal: false })
    }

    /// `U(t−t1)|ψ_in⟩⟨ψ_out|U(t2−t)` for Hamiltonian `h`.
    ///
    /// Orthogonal conditions (`|⟨ψ_out|U(t2−t1)|ψ_in⟩| < 1e-14`) still yield a
    /// two-state, but it is flagged and the pre/post probability rule refuses it.
    pub fn from_conditions(psi_in: &Ket, psi_out: &Ket, h: &Operator, t1: f64, t2: f64, t: f64) -> Result<Self> {
        if !(t1 <= t && t <= t2) {
            return Err(Error::TimeOrder);
        }
        check_same(psi_in.space(), h.space())?;
        check_same(psi_out.space(), h.space())?;
        let left = hilbert::evolve_ket(h, t - t1, psi_in)?;
        let right = hilbert::evolve_ket(h, t - t2, psi_out)?;
        let overlap = right.inner(&left)?.modulus();
        let mut ts = Self::new(left.outer(&right)?, t1, t2, t)?;
        ts.orthogonal = overlap < ORTHOGONAL_TOL;
        Ok(ts)
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn space(&self) -> &HilbertSpace {
        self.op.space()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.op.entry(i, j)
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Set when the boundary conditions this two-state was built from are
    /// orthogonal.
    pub fn conditions_orthogonal(&self) -> bool {
        self.orthogonal
    }

    /// Singular values of the two-state operator, descending.
    pub fn schmidt_spectrum(&self) -> Vec<f64> {
        singular_values(self.op.matrix())
    }

    /// Rank one within [`GENERIC_TOL`] (relative).
    pub fn is_generic(&self) -> bool {
        let sv = self.schmidt_spectrum();
        sv.len() < 2 || sv[1] < GENERIC_TOL * sv[0]
    }

    /// `ϱϱ†`, the density matrix implied by the initial condition alone.
    pub fn rho_in(&self) -> Operator {
        self.op.mul(&self.op.adjoint()).expect("same space")
    }

    pub fn scaled(&self, c: C64) -> Result<Self> {
        let mut ts = Self::new(self.op.scale(c), self.t1, self.t2, self.t)?;
        ts.orthogonal = self.orthogonal;
        Ok(ts)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    pub value: f64,
    pub op: Operator,
}

/// A complete family of orthogonal projectors `{P_a}`, i.e. the spectral
/// family of an observable `A = Σ a P_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorSet {
    items: Vec<Projector>,
}

impl ProjectorSet {
    pub fn new(items: Vec<(f64, Operator)>) -> Result<Self> {
        let first = items.first().ok_or(Error::Empty("projector set"))?;
        let space = first.1.space().clone();
        let mut sum = Operator::zeros(space.clone());
        for (_, p) in &items {
            check_same(p.space(), &space)?;
            if !p.is_hermitian(PROJECTOR_TOL) {
                return Err(Error::InvalidProjectors("projector not Hermitian"));
            }
            if p.mul(p)?.max_abs_diff(p) > PROJECTOR_TOL {
                return Err(Error::InvalidProjectors("projector not idempotent"));
            }
            sum = sum.add(p)?;
        }
        if sum.max_abs_diff(&Operator::identity(space)) > PROJECTOR_TOL {
            return Err(Error::InvalidProjectors("projectors do not sum to identity"));
        }
        for (i, (_, p)) in items.iter().enumerate() {
            for (_, q) in &items[i + 1..] {
                if p.mul(q)?.matrix().max_abs() > PROJECTOR_TOL {
                    return Err(Error::InvalidProjectors("projectors not mutually orthogonal"));
                }
            }
        }
        Ok(ProjectorSet { items: items.into_iter().map(|(value, op)| Projector { value, op }).collect() })
    }

    /// Rank-one projectors onto a complete orthonormal basis, labelled by
    /// position.
    pub fn from_basis(basis: &[Ket]) -> Result<Self> {
        check_basis(basis)?;
        Self::new(basis.iter().enumerate().map(|(i, k)| (i as f64, k.projector())).collect())
    }

    /// Spectral projectors of a Hermitian observable; eigenvalues closer
    /// than `1e-9` are merged.
    pub fn spectral(a: &Operator) -> Result<Self> {
        let (vals, vecs) = a.eigh()?;
        let mut items: Vec<(f64, Operator)> = Vec::new();
        for (v, k) in vals.into_iter().zip(vecs) {
            match items.last_mut() {
                Some((last, p)) if libm::fabs(v - *last) < 1e-9 => *p = p.add(&k.projector())?,
                _ => items.push((v, k.projector())),
            }
        }
        Self::new(items)
    }

    pub fn sigma_x() -> Self {
        Self::spectral(&Operator::sigma_x()).expect("valid observable")
    }

    pub fn sigma_y() -> Self {
        Self::spectral(&Operator::sigma_y()).expect("valid observable")
    }

    pub fn sigma_z() -> Self {
        Self::spectral(&Operator::sigma_z()).expect("valid observable")
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Projector> {
        self.items.iter()
    }

    pub fn values(&self) -> Vec<f64> {
        self.items.iter().map(|p| p.value).collect()
    }

    pub fn space(&self) -> &HilbertSpace {
        self.items[0].op.space()
    }

    /// `P_a ⊗ I_env` for every projector.
    pub fn extend(&self, env: &HilbertSpace) -> ProjectorSet {
        let id = Operator::identity(env.clone());
        ProjectorSet { items: self.items.iter().map(|p| Projector { value: p.value, op: p.op.tensor(&id) }).collect() }
    }
}

fn check_basis(basis: &[Ket]) -> Result<()> {
    let first = basis.first().ok_or(Error::Empty("basis"))?;
    let space = first.space();
    if basis.len() != space.dim() {
        return Err(Error::InvalidBasis { tol: PROJECTOR_TOL });
    }
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            let expect = if i == j { 1.0 } else { 0.0 };
            if (a.inner(b)? - C64::new(expect, 0.0)).modulus() > PROJECTOR_TOL {
                return Err(Error::InvalidBasis { tol: PROJECTOR_TOL });
            }
        }
    }
    Ok(())
}

fn amplitudes(ts: &TwoState, ps: &ProjectorSet) -> Result<Vec<C64>> {
    ps.iter().map(|p| two_state_inner(&p.op, ts.operator())).collect()
}

fn normalize(weights: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= AMPLITUDE_FLOOR {
        return Err(Error::ForbiddenMeasurement);
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Pre- and post-selected rule: `Prob(a) = |⟨P_a,ϱ⟩|² / Σ_a' |⟨P_a',ϱ⟩|²`.
pub fn prob_pre_post(ts: &TwoState, ps: &ProjectorSet) -> Result<Vec<f64>> {
    check_same(ts.space(), ps.space())?;
    if ts.conditions_orthogonal() {
        return Err(Error::OrthogonalConditions { overlap: 0.0 });
    }
    normalize(amplitudes(ts, ps)?.iter().map(|a| a.norm_sqr()).collect())
}

/// The same rule written through `ρ(a) = ϱ P_a ϱ†`:
/// `Prob(a) = tr(P_a ρ(a)) / Σ_a' tr(P_a' ρ(a'))`.
pub fn prob_pre_post_density_form(ts: &TwoState, ps: &ProjectorSet) -> Result<Vec<f64>> {
    check_same(ts.space(), ps.space())?;
    if ts.conditions_orthogonal() {
        return Err(Error::OrthogonalConditions { overlap: 0.0 });
    }
    let rho = ts.operator();
    let rho_dag = rho.adjoint();
    let weights =
        ps.iter().map(|p| Ok(p.op.mul(&rho.mul(&p.op)?.mul(&rho_dag)?)?.trace().re)).collect::<Result<Vec<_>>>()?;
    normalize(weights)
}

/// Pre-selected-only rule: `⟨ϱ, P_a ϱ⟩ / ⟨ϱ, ϱ⟩ = tr(P_a ϱϱ†) / tr(ϱϱ†)`.
pub fn prob_pre_only(ts: &TwoState, ps: &ProjectorSet) -> Result<Vec<f64>> {
    check_same(ts.space(), ps.space())?;
    let rho = ts.operator();
    let norm = two_state_inner(rho, rho)?.re;
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::ZeroTrace);
    }
    ps.iter().map(|p| Ok(two_state_inner(rho, &p.op.mul(rho)?)?.re / norm)).collect()
}

/// `Prob(a) = Σ_s2 |⟨P_a,ϱ(s2)⟩|² / Σ_{s2,a'} |⟨P_a',ϱ(s2)⟩|²` over a family of
/// two-states, one per final system condition `|s2⟩`.
pub fn prob_summed_over_finals(family: &[TwoState], ps: &ProjectorSet) -> Result<Vec<f64>> {
    if family.is_empty() {
        return Err(Error::Empty("two-state family"));
    }
    let mut weights = alloc::vec![0.0; ps.len()];
    for ts in family {
        check_same(ts.space(), ps.space())?;
        for (w, a) in weights.iter_mut().zip(amplitudes(ts, ps)?) {
            *w += a.norm_sqr();
        }
    }
    normalize(weights)
}

/// `ϱ_e0 = |e1⟩⟨e2| e^{−i h_e T}`, the free environment two-state referred to
/// the initial time.
pub fn env_two_state(e1: &Ket, e2: &Ket, h_e: &Operator, duration: f64) -> Result<Operator> {
    let back = hilbert::evolve_ket(h_e, -duration, e2)?;
    e1.outer(&back)
}

/// `O_w = tr(O ϱ_e0) / tr(ϱ_e0)`.
pub fn weak_value_in(o: &Operator, env_ts: &Operator) -> Result<C64> {
    let denom = env_ts.trace();
    if denom.modulus() <= ENV_OVERLAP_TOL {
        return Err(Error::OrthogonalEnvironment { norm: denom.modulus() });
    }
    Ok(o.mul(env_ts)?.trace() / denom)
}

/// Weak value of `o` for the free environment conditions `e1` at `t1` and
/// `e2` at `t2`: `⟨e2|U_e(t2−t1) O|e1⟩ / ⟨e2|U_e(t2−t1)|e1⟩`.
pub fn weak_value(o: &Operator, e1: &Ket, e2: &Ket, h_e: &Operator, t1: f64, t2: f64) -> Result<C64> {
    weak_value_in(o, &env_two_state(e1, e2, h_e, t2 - t1)?)
}

/// `N = ⟨e2| e^{−i h_e (t2−t1)} |e1⟩`.
pub fn env_normalization(e1: &Ket, e2: &Ket, h_e: &Operator, t1: f64, t2: f64) -> Result<C64> {
    let n = e2.inner(&hilbert::evolve_ket(h_e, t2 - t1, e1)?)?;
    if n.modulus() <= ENV_OVERLAP_TOL {
        return Err(Error::OrthogonalEnvironment { norm: n.modulus() });
    }
    Ok(n)
}

/// `ϱ_s = tr_E(ϱ_{s+e}) / N`. The environment is the trailing factor block of
/// the joint space matching `e1`'s space.
pub fn reduce_over_environment(joint: &TwoState, h_e: &Operator, e1: &Ket, e2: &Ket) -> Result<TwoState> {
    check_same(e1.space(), e2.space())?;
    check_same(e1.space(), h_e.space())?;
    let n_sys = joint.space().system_factor_count(e1.space())?;
    let norm = env_normalization(e1, e2, h_e, joint.t1(), joint.t2())?;
    let keep: Vec<usize> = (0..n_sys).collect();
    let reduced = joint.operator().partial_trace(&keep)?.scale(C64::new(1.0, 0.0) / norm);
    let mut ts = TwoState::new(reduced, joint.t1(), joint.t2(), joint.time())?;
    ts.orthogonal = joint.conditions_orthogonal();
    Ok(ts)
}

/// Weak evolution operator on the system:
/// `Û_w = ⟨e2| U_tot(T) |e1⟩ / ⟨e2| e^{−i h_e T} |e1⟩`, `T = t2 − t1`.
///
/// The numerator is the environment matrix element of the joint evolution,
/// an operator on the system. With it the reduced two-state at the
/// boundaries is `ϱ_s(t2) = Û_w|s1⟩⟨s2|` and `ϱ_s(t1) = |s1⟩⟨s2|Û_w`.
pub fn weak_evolution_operator(
    h_tot: &Operator,
    h_e: &Operator,
    e1: &Ket,
    e2: &Ket,
    t1: f64,
    t2: f64,
) -> Result<Operator> {
    let n_sys = h_tot.space().system_factor_count(e1.space())?;
    let norm = env_normalization(e1, e2, h_e, t1, t2)?;
    let sys_space = h_tot.space().subspace(&(0..n_sys).collect::<Vec<_>>())?;
    let env_flip = Operator::identity(sys_space).tensor(&e1.outer(e2)?);
    let u = hilbert::propagator(h_tot, t2 - t1)?;
    let keep: Vec<usize> = (0..n_sys).collect();
    Ok(u.mul(&env_flip)?.partial_trace(&keep)?.scale(C64::new(1.0, 0.0) / norm))
}

/// Per-outcome effective density matrices `ρ(a) = Σ_s2 ϱ(s2) P_a ϱ†(s2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveDensity {
    values: Vec<f64>,
    rhos: Vec<Operator>,
    a_independence: f64,
}

impl EffectiveDensity {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rhos(&self) -> &[Operator] {
        &self.rhos
    }

    /// Largest Frobenius distance between trace-normalized `ρ(a)`, `ρ(b)`.
    /// Outcomes with `tr ρ(a) ≤ 1e-14 · max_b tr ρ(b)` cannot occur and are
    /// left out of the comparison.
    pub fn a_independence(&self) -> f64 {
        self.a_independence
    }

    /// `tr(P_a ρ(a)) / Σ_a' tr(P_a' ρ(a'))`.
    pub fn probabilities(&self, ps: &ProjectorSet) -> Result<Vec<f64>> {
        if ps.len() != self.rhos.len() {
            return Err(Error::DimensionMismatch { expected: self.rhos.len(), found: ps.len() });
        }
        normalize(ps.iter().zip(&self.rhos).map(|(p, r)| Ok(p.op.mul(r)?.trace().re)).collect::<Result<Vec<_>>>()?)
    }

    /// Smallest eigenvalue over all `ρ(a)`; nonnegative up to rounding.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut lo = f64::INFINITY;
        for r in &self.rhos {
            lo = lo.min(r.eigh()?.0[0]);
        }
        Ok(lo)
    }
}

pub fn effective_density(two_states: &[TwoState], ps: &ProjectorSet) -> Result<EffectiveDensity> {
    let first = two_states.first().ok_or(Error::Empty("two-state list"))?;
    for ts in two_states {
        check_same(ts.space(), first.space())?;
        if ts.time() != first.time() {
            return Err(Error::TimeOrder);
        }
    }
    check_same(first.space(), ps.space())?;
    let mut rhos = Vec::with_capacity(ps.len());
    for p in ps.iter() {
        let mut acc = Operator::zeros(first.space().clone());
        for ts in two_states {
            let r = ts.operator();
            acc = acc.add(&r.mul(&p.op)?.mul(&r.adjoint())?)?;
        }
        rhos.push(acc);
    }
    let traces: Vec<f64> = rhos.iter().map(|r| r.trace().re).collect();
    let max_tr = traces.iter().cloned().fold(0.0, f64::max);
    let normalized: Vec<Operator> = rhos
        .iter()
        .zip(&traces)
        .filter(|(_, &t)| t > 1e-14 * max_tr && t > 0.0)
        .map(|(r, &t)| r.scale(C64::new(1.0 / t, 0.0)))
        .collect();
    let mut score: f64 = 0.0;
    for (i, a) in normalized.iter().enumerate() {
        for b in &normalized[i + 1..] {
            score = score.max(a.sub(b)?.matrix().frobenius_norm());
        }
    }
    Ok(EffectiveDensity { values: ps.values(), rhos, a_independence: score })
}

/// `tr(ρ²) / tr(ρ)²`.
pub fn purity(rho: &Operator) -> Result<f64> {
    let tr = rho.trace();
    if tr.modulus().is_nan() || tr.modulus() <= f64::MIN_POSITIVE {
        return Err(Error::ZeroTrace);
    }
    Ok((rho.mul(rho)?.trace() / (tr * tr)).re)
}

/// A system coupled to an environment, with the system pre-selected in `s1`
/// and the environment pre- and post-selected in `e1`, `e2`. The final
/// system condition is left open and summed over.
#[derive(Clone, Debug)]
pub struct PostSelectedEnvironment {
    h_tot: Operator,
    h_e: Operator,
    s1: Ket,
    e1: Ket,
    e2: Ket,
    t1: f64,
    t2: f64,
}

impl PostSelectedEnvironment {
    pub fn new(h_tot: Operator, h_e: Operator, s1: Ket, e1: Ket, e2: Ket, t1: f64, t2: f64) -> Result<Self> {
        if t1.is_nan() || t2.is_nan() || t1 > t2 {
            return Err(Error::TimeOrder);
        }
        check_same(e1.space(), e2.space())?;
        check_same(e1.space(), h_e.space())?;
        check_same(&s1.space().tensor(e1.space()), h_tot.space())?;
        env_normalization(&e1, &e2, &h_e, t1, t2)?;
        Ok(PostSelectedEnvironment { h_tot, h_e, s1, e1, e2, t1, t2 })
    }

    pub fn system_space(&self) -> &HilbertSpace {
        self.s1.space()
    }

    /// Reduced two-state at `t` for final system condition `s2`.
    pub fn reduced(&self, s2: &Ket, t: f64) -> Result<TwoState> {
        let psi1 = self.s1.tensor(&self.e1);
        let psi2 = s2.tensor(&self.e2);
        let joint = TwoState::from_conditions(&psi1, &psi2, &self.h_tot, self.t1, self.t2, t)?;
        reduce_over_environment(&joint, &self.h_e, &self.e1, &self.e2)
    }

    pub fn family(&self, basis: &[Ket], t: f64) -> Result<Vec<TwoState>> {
        check_basis(basis)?;
        check_same(basis[0].space(), self.system_space())?;
        basis.iter().map(|s2| self.reduced(s2, t)).collect()
    }

    /// Probability of each outcome at `t` with only the environment
    /// post-selected. Independent of the choice of `basis`.
    pub fn probabilities(&self, basis: &[Ket], ps: &ProjectorSet, t: f64) -> Result<Vec<f64>> {
        prob_summed_over_finals(&self.family(basis, t)?, ps)
    }

    /// Memory-lean reduction used when the joint operator would be large.
    pub fn reduced_lean(&self, s2: &Ket, t: f64) -> Result<TwoState> {
        let left = hilbert::evolve_ket(&self.h_tot, t - self.t1, &self.s1.tensor(&self.e1))?;
        let right = hilbert::evolve_ket(&self.h_tot, t - self.t2, &s2.tensor(&self.e2))?;
        let n_sys = self.s1.space().num_factors();
        let norm = env_normalization(&self.e1, &self.e2, &self.h_e, self.t1, self.t2)?;
        let op = partial_trace_outer(&left, &right, &(0..n_sys).collect::<Vec<_>>())?;
        TwoState::new(op.scale(C64::new(1.0, 0.0) / norm), self.t1, self.t2, t)
    }
}
