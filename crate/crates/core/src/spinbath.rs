//! One spin-1/2 system coupled to `n` environment spins by
//! `H_int = Σ_k g_k σ_z σ_z^(k)` with vanishing free Hamiltonians.
//!
//! Conditions are product states: `(a|↑⟩ + b|↓⟩) Π_k (α_k|↑⟩ + β_k|↓⟩)` at
//! `t = 0` and `(a'|↑⟩ + b'|↓⟩) Π_k (α'_k|↑⟩ + β'_k|↓⟩)` at `t = T`.
//!
//! Everything closed-form is expressed through
//!
//! ```text
//! χ(x) = Π_k ( α_k α'*_k e^{−i g_k x} + β_k β'*_k e^{+i g_k x} ),
//! ```
//!
//! the free-environment weak value of `exp(−i x Σ g_k σ_z^(k))` times
//! `χ(0) = ⟨e2|e1⟩`. With evolution `e^{−iHt}` the reduced two-state is
//!
//! ```text
//! ϱ_s(t) = [ a a'* χ(T) |↑⟩⟨↑| + b b'* χ(−T) |↓⟩⟨↓|
//!          + a b'* χ(2t−T) |↑⟩⟨↓| + b a'* χ(T−2t) |↓⟩⟨↑| ] / χ(0)
//! ```
//!
//! and the weak evolution operator is `Û_w = χ(σ_z T)/χ(0)`.
//!
//! [`brute_force_reduced`] rebuilds the same object in the full
//! `2^(n+1)`-dimensional space without touching `χ`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::hilbert::{partial_trace_outer, HilbertSpace, Ket, Operator, Tensor};
use crate::linalg::{cis, CMatrix, Modulus, ZERO};
use crate::twostate::{ProjectorSet, TwoState, ENV_OVERLAP_TOL};
use crate::{sampling, Error, Result, C64};

/// Largest bath handled by the joint-space oracle.
pub const MAX_SPINS: usize = 12;

/// Amplitudes of a spin-1/2 state in the `σ_z` basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinState {
    pub up: C64,
    pub down: C64,
}

impl SpinState {
    pub const fn new(up: C64, down: C64) -> Self {
        SpinState { up, down }
    }

    pub fn z_up() -> Self {
        Self::new(C64::new(1.0, 0.0), ZERO)
    }

    pub fn z_down() -> Self {
        Self::new(ZERO, C64::new(1.0, 0.0))
    }

    /// `σ_x = +1` eigenstate.
    pub fn x_up() -> Self {
        let s = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(s, s)
    }

    pub fn ket(&self) -> Ket {
        Ket::qubit(self.up, self.down)
    }

    pub fn norm_deviation(&self) -> f64 {
        libm::fabs(self.up.norm_sqr() + self.down.norm_sqr() - 1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinBathParams {
    /// Couplings `g_k`.
    pub g: Vec<f64>,
    /// `(a, b)`.
    pub system_pre: SpinState,
    /// `(a', b')`; `None` when only the environment is post-selected.
    pub system_post: Option<SpinState>,
    /// `(α_k, β_k)`.
    pub bath_pre: Vec<SpinState>,
    /// `(α'_k, β'_k)`.
    pub bath_post: Vec<SpinState>,
    /// `T > 0`.
    pub t_final: f64,
}

const NORM_TOL: f64 = 1e-12;

impl SpinBathParams {
    pub fn new(
        g: Vec<f64>,
        system_pre: SpinState,
        system_post: Option<SpinState>,
        bath_pre: Vec<SpinState>,
        bath_post: Vec<SpinState>,
        t_final: f64,
    ) -> Result<Self> {
        let p = SpinBathParams { g, system_pre, system_post, bath_pre, bath_post, t_final };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.g.len();
        if n == 0 || n > MAX_SPINS {
            return Err(Error::InvalidParameter { field: "g", reason: "bath size must be between 1 and 12" });
        }
        if self.g.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter { field: "g", reason: "non-finite coupling" });
        }
        if self.bath_pre.len() != n {
            return Err(Error::InvalidParameter { field: "alpha/beta", reason: "length differs from g" });
        }
        if self.bath_post.len() != n {
            return Err(Error::InvalidParameter { field: "alpha_post/beta_post", reason: "length differs from g" });
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter { field: "t_final", reason: "must be positive and finite" });
        }
        let check = |s: &SpinState, what| {
            let dev = s.norm_deviation();
            if dev < NORM_TOL {
                Ok(())
            } else {
                Err(Error::NotNormalized { what, deviation: dev })
            }
        };
        check(&self.system_pre, "a/b")?;
        if let Some(s) = &self.system_post {
            check(s, "a_post/b_post")?;
        }
        for s in &self.bath_pre {
            check(s, "alpha/beta")?;
        }
        for s in &self.bath_post {
            check(s, "alpha_post/beta_post")?;
        }
        let chi0 = chi(self, 0.0).modulus();
        if chi0 <= ENV_OVERLAP_TOL {
            return Err(Error::OrthogonalEnvironment { norm: chi0 });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    /// Random draw: every spin state uniform on the Bloch sphere, couplings
    /// uniform in `[0.1, 2.0] / T`. Redraws in the (measure-zero) event that
    /// the environment conditions are orthogonal.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, t_final: f64, with_system_post: bool) -> Self {
        loop {
            let g = (0..n).map(|_| rng.gen_range(0.1..=2.0) / t_final).collect();
            let system_pre = sampling::bloch_uniform(rng);
            let system_post = if with_system_post { Some(sampling::bloch_uniform(rng)) } else { None };
            let bath_pre = (0..n).map(|_| sampling::bloch_uniform(rng)).collect();
            let bath_post = (0..n).map(|_| sampling::bloch_uniform(rng)).collect();
            let p = SpinBathParams { g, system_pre, system_post, bath_pre, bath_post, t_final };
            if p.validate().is_ok() {
                return p;
            }
        }
    }

    /// Environment pre- and post-selected kets `|e1⟩`, `|e2⟩`.
    pub fn bath_kets(&self) -> (Ket, Ket) {
        let product = |states: &[SpinState]| states.iter().skip(1).fold(states[0].ket(), |acc, s| acc.tensor(&s.ket()));
        (product(&self.bath_pre), product(&self.bath_post))
    }

    fn require_post(&self) -> Result<SpinState> {
        self.system_post
            .ok_or(Error::InvalidParameter { field: "system_post", reason: "system post-selection required" })
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_final).contains(&t) {
            return Err(Error::TimeOrder);
        }
        Ok(())
    }
}

/// `χ(x) = Π_k (α_k α'*_k e^{−i g_k x} + β_k β'*_k e^{+i g_k x})`.
pub fn chi(p: &SpinBathParams, x: f64) -> C64 {
    p.g.iter()
        .zip(p.bath_pre.iter().zip(&p.bath_post))
        .map(|(&g, (pre, post))| pre.up * post.up.conj() * cis(-g * x) + pre.down * post.down.conj() * cis(g * x))
        .product()
}

fn chi0(p: &SpinBathParams) -> Result<C64> {
    let c = chi(p, 0.0);
    if c.modulus() <= ENV_OVERLAP_TOL {
        return Err(Error::OrthogonalEnvironment { norm: c.modulus() });
    }
    Ok(c)
}

fn qubit_operator(m: [C64; 4]) -> Operator {
    Operator::from_matrix(CMatrix::from_row_major(2, 2, m.to_vec())).expect("2x2")
}

/// Closed-form reduced two-state at `t ∈ [0, T]`. Needs system post-selection.
pub fn exact_reduced_two_state(p: &SpinBathParams, t: f64) -> Result<TwoState> {
    p.check_time(t)?;
    let post = p.require_post()?;
    let inv = C64::new(1.0, 0.0) / chi0(p)?;
    let (a, b) = (p.system_pre.up, p.system_pre.down);
    let (ap, bp) = (post.up.conj(), post.down.conj());
    let big_t = p.t_final;
    let op = qubit_operator([
        a * ap * chi(p, big_t) * inv,
        a * bp * chi(p, 2.0 * t - big_t) * inv,
        b * ap * chi(p, big_t - 2.0 * t) * inv,
        b * bp * chi(p, -big_t) * inv,
    ]);
    TwoState::new(op, 0.0, big_t, t)
}

/// Energy of each joint basis state; the system spin is the most
/// significant digit, bath spin `k` the `(k+1)`-th.
fn joint_energies(p: &SpinBathParams) -> Vec<f64> {
    let n = p.n();
    (0..1usize << (n + 1))
        .map(|idx| {
            let sigma = if (idx >> n) & 1 == 0 { 1.0 } else { -1.0 };
            let bath: f64 =
                p.g.iter().enumerate().map(|(k, g)| if (idx >> (n - 1 - k)) & 1 == 0 { *g } else { -*g }).sum();
            sigma * bath
        })
        .collect()
}

fn phase_evolve(ket: &Ket, energies: &[f64], t: f64) -> Ket {
    let amps = ket.amps().iter().zip(energies).map(|(a, e)| a * cis(-e * t)).collect();
    Ket::new(ket.space().clone(), amps).expect("same length")
}

struct JointKets {
    /// `U(t)|ψ1⟩`
    left: Ket,
    /// `U(t−T)|ψ2⟩`, so that `⟨right| = ⟨ψ2|U(T−t)`.
    right: Ket,
}

fn joint_kets(p: &SpinBathParams, post: SpinState, t: f64) -> JointKets {
    let (e1, e2) = p.bath_kets();
    let energies = joint_energies(p);
    let psi1 = p.system_pre.ket().tensor(&e1);
    let psi2 = post.ket().tensor(&e2);
    JointKets { left: phase_evolve(&psi1, &energies, t), right: phase_evolve(&psi2, &energies, t - p.t_final) }
}

fn bath_overlap(p: &SpinBathParams) -> Result<C64> {
    let (e1, e2) = p.bath_kets();
    let n = e2.inner(&e1)?;
    if n.modulus() <= ENV_OVERLAP_TOL {
        return Err(Error::OrthogonalEnvironment { norm: n.modulus() });
    }
    Ok(n)
}

/// Joint-space oracle: evolves the `2^(n+1)`-dimensional boundary kets with
/// exact per-basis-state phases, traces out the bath and divides by
/// `⟨e2|e1⟩`.
pub fn brute_force_reduced(p: &SpinBathParams, t: f64) -> Result<TwoState> {
    if p.n() > MAX_SPINS {
        return Err(Error::InvalidParameter { field: "g", reason: "bath too large for the joint-space oracle" });
    }
    p.check_time(t)?;
    let post = p.require_post()?;
    let norm = bath_overlap(p)?;
    let jk = joint_kets(p, post, t);
    let op = partial_trace_outer(&jk.left, &jk.right, &[0])?.scale(C64::new(1.0, 0.0) / norm);
    TwoState::new(op, 0.0, p.t_final, t)
}

fn joint_amplitudes(p: &SpinBathParams, post: SpinState, t: f64, ps: &ProjectorSet) -> Result<Vec<C64>> {
    let jk = joint_kets(p, post, t);
    ps.iter().map(|proj| jk.right.inner(&jk.left.apply_local(&proj.op, 0)?)).collect()
}

fn normalized(weights: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= crate::twostate::AMPLITUDE_FLOOR {
        return Err(Error::ForbiddenMeasurement);
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Pre/post-selected probabilities from joint amplitudes
/// `⟨ψ2|U(T−t)(P_a ⊗ 1)U(t)|ψ1⟩`, never forming a reduced two-state.
pub fn brute_force_prob_pre_post(p: &SpinBathParams, t: f64, ps: &ProjectorSet) -> Result<Vec<f64>> {
    p.check_time(t)?;
    let post = p.require_post()?;
    normalized(joint_amplitudes(p, post, t, ps)?.iter().map(|a| a.norm_sqr()).collect())
}

/// Environment-only post-selection in the joint space: each final system
/// outcome `|↑⟩`, `|↓⟩` is post-selected jointly with the bath and the
/// results are marginalized.
pub fn brute_force_prob_env_post(p: &SpinBathParams, t: f64, ps: &ProjectorSet) -> Result<Vec<f64>> {
    p.check_time(t)?;
    let mut weights = vec![0.0; ps.len()];
    for s2 in [SpinState::z_up(), SpinState::z_down()] {
        for (w, a) in weights.iter_mut().zip(joint_amplitudes(p, s2, t, ps)?) {
            *w += a.norm_sqr();
        }
    }
    normalized(weights)
}

/// `(ϱ_s(t,↑), ϱ_s(t,↓))`: the reduced two-states for final system outcomes
/// `σ_z = ±1` when only the bath is post-selected. Any system
/// post-selection in `p` is ignored.
pub fn env_postselected_two_states(p: &SpinBathParams, t: f64) -> Result<[TwoState; 2]> {
    p.check_time(t)?;
    let inv = C64::new(1.0, 0.0) / chi0(p)?;
    let (a, b) = (p.system_pre.up, p.system_pre.down);
    let big_t = p.t_final;
    let up = qubit_operator([a * chi(p, big_t) * inv, ZERO, b * chi(p, big_t - 2.0 * t) * inv, ZERO]);
    let down = qubit_operator([ZERO, a * chi(p, 2.0 * t - big_t) * inv, ZERO, b * chi(p, -big_t) * inv]);
    Ok([TwoState::new(up, 0.0, big_t, t)?, TwoState::new(down, 0.0, big_t, t)?])
}

/// Effective density matrix for `σ_x`/`σ_y` measurements with only the bath
/// post-selected, `½ Σ_{s2=↑,↓} ϱ_s(s2) ϱ_s(s2)†`, in closed form:
///
/// ```text
/// ρ_↑↑ = |a|² (|χ(T)|² + |χ(2t−T)|²)
/// ρ_↓↓ = |b|² (|χ(−T)|² + |χ(T−2t)|²)
/// ρ_↑↓ = a b* (χ(T) χ*(T−2t) + χ(2t−T) χ*(−T))
/// ρ_↓↑ = ρ_↑↓*
/// ```
///
/// all over `2|χ(0)|²`.
pub fn rho_eff_xy(p: &SpinBathParams, t: f64) -> Result<Operator> {
    p.check_time(t)?;
    let c0 = chi0(p)?;
    let big_t = p.t_final;
    let (a, b) = (p.system_pre.up, p.system_pre.down);
    let (c_t, c_mt) = (chi(p, big_t), chi(p, -big_t));
    let (c_x, c_mx) = (chi(p, 2.0 * t - big_t), chi(p, big_t - 2.0 * t));
    let k = 1.0 / (2.0 * c0.norm_sqr());
    let uu = a.norm_sqr() * (c_t.norm_sqr() + c_x.norm_sqr()) * k;
    let dd = b.norm_sqr() * (c_mt.norm_sqr() + c_mx.norm_sqr()) * k;
    let ud = a * b.conj() * (c_t * c_mx.conj() + c_x * c_mt.conj()) * k;
    Ok(qubit_operator([C64::new(uu, 0.0), ud, ud.conj(), C64::new(dd, 0.0)]))
}

/// `Û_w = diag(χ(T), χ(−T)) / χ(0)`.
pub fn weak_evolution_closed(p: &SpinBathParams) -> Result<Operator> {
    let inv = C64::new(1.0, 0.0) / chi0(p)?;
    Ok(qubit_operator([chi(p, p.t_final) * inv, ZERO, ZERO, chi(p, -p.t_final) * inv]))
}

/// Bath pre- and post-selected in `σ_x^(k) = +1` for every spin, which makes
/// `χ(x) = Π cos(g_k x)` and `Û_w ∝ 1`. The system starts in `σ_x = +1` and
/// is not post-selected; change `system_pre` as needed.
pub fn suppression_scenario(g: Vec<f64>, t_final: f64) -> Result<SpinBathParams> {
    let n = g.len();
    SpinBathParams::new(g, SpinState::x_up(), None, vec![SpinState::x_up(); n], vec![SpinState::x_up(); n], t_final)
}

/// `Σ_k g_k σ_z ⊗ σ_z^(k)` as a dense operator on the joint space.
pub fn interaction_hamiltonian(p: &SpinBathParams) -> Result<Operator> {
    let space = HilbertSpace::qubits(p.n() + 1)?;
    let diag: Vec<C64> = joint_energies(p).into_iter().map(|e| C64::new(e, 0.0)).collect();
    Operator::new(space, CMatrix::from_diagonal(&diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twostate::{effective_density, purity};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chi_at_zero_is_bath_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = SpinBathParams::random(&mut rng, 4, 1.0, true);
        let direct: C64 =
            p.bath_pre.iter().zip(&p.bath_post).map(|(a, b)| a.up * b.up.conj() + a.down * b.down.conj()).product();
        assert!((chi(&p, 0.0) - direct).modulus() < 1e-15);
        assert!((chi(&p, 0.0) - bath_overlap(&p).unwrap()).modulus() < 1e-14);
    }

    #[test]
    fn identical_conditions_normalize_chi() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = SpinBathParams::random(&mut rng, 5, 1.0, true);
        p.bath_post = p.bath_pre.clone();
        assert!((chi(&p, 0.0) - C64::new(1.0, 0.0)).modulus() < 1e-15);
    }

    #[test]
    fn sigma_x_selection_gives_cosines() {
        let p = suppression_scenario(vec![0.3, 1.1, 0.7], 2.0).unwrap();
        for &x in &[0.0, 0.4, -0.4, 1.9] {
            let expect: f64 = p.g.iter().map(|g| libm::cos(g * x)).product();
            let got = chi(&p, x);
            assert!((got.re - expect).abs() < 1e-15 && got.im.abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_forms_are_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = SpinBathParams::random(&mut rng, 3, 1.5, true);
        let post = p.system_post.unwrap();
        let inv = C64::new(1.0, 0.0) / chi(&p, 0.0);
        let big_t = p.t_final;
        // t = 0: |s1⟩ (a'* χ(T) ⟨↑| + b'* χ(−T) ⟨↓|) / χ(0)
        let bra0 = Ket::qubit(
            (post.up.conj() * chi(&p, big_t) * inv).conj(),
            (post.down.conj() * chi(&p, -big_t) * inv).conj(),
        );
        let start = p.system_pre.ket().outer(&bra0).unwrap();
        assert!(exact_reduced_two_state(&p, 0.0).unwrap().operator().max_abs_diff(&start) < 1e-14);
        // t = T: (a χ(T) |↑⟩ + b χ(−T) |↓⟩) ⟨s2| / χ(0)
        let ket_t = Ket::qubit(p.system_pre.up * chi(&p, big_t) * inv, p.system_pre.down * chi(&p, -big_t) * inv);
        let end = ket_t.outer(&post.ket()).unwrap();
        assert!(exact_reduced_two_state(&p, big_t).unwrap().operator().max_abs_diff(&end) < 1e-14);
    }

    #[test]
    fn decoupled_bath_is_generic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut p = SpinBathParams::random(&mut rng, 3, 1.0, true);
        p.g = vec![0.0; 3];
        let free = p.system_pre.ket().outer(&p.system_post.unwrap().ket()).unwrap();
        for &t in &[0.0, 0.25, 0.5, 1.0] {
            let ts = brute_force_reduced(&p, t).unwrap();
            assert!(ts.is_generic());
            assert!(ts.operator().max_abs_diff(&free) < 1e-14);
        }
    }

    #[test]
    fn single_spin_hand_computation() {
        // one bath spin in σ_x = +1 before and after, g T = π/2, generic system
        let big_t = 1.0;
        let g = core::f64::consts::FRAC_PI_2 / big_t;
        let s = |up: f64, down: f64| SpinState::new(C64::new(up, 0.0), C64::new(down, 0.0));
        let p = SpinBathParams::new(
            vec![g],
            s(0.6, 0.8),
            Some(s(0.8, -0.6)),
            vec![SpinState::x_up()],
            vec![SpinState::x_up()],
            big_t,
        )
        .unwrap();
        // χ(x) = cos(g x): χ(±T) = cos(π/2) = 0, χ(0) = 1
        let ts = brute_force_reduced(&p, big_t / 2.0).unwrap();
        assert!(ts.entry(0, 0).modulus() < 1e-15 && ts.entry(1, 1).modulus() < 1e-15);
        assert!((ts.entry(0, 1) - C64::new(0.6 * -0.6, 0.0)).modulus() < 1e-15);
        assert!((ts.entry(1, 0) - C64::new(0.8 * 0.8, 0.0)).modulus() < 1e-15);
    }

    #[test]
    fn closed_form_matches_joint_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = SpinBathParams::random(&mut rng, 6, 1.0, true);
        let t = 0.37;
        let exact = exact_reduced_two_state(&p, t).unwrap();
        let brute = brute_force_reduced(&p, t).unwrap();
        assert!(exact.operator().max_abs_diff(brute.operator()) < 1e-11);
    }

    #[test]
    fn diagonal_entries_do_not_move() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = SpinBathParams::random(&mut rng, 4, 2.0, true);
        let first = exact_reduced_two_state(&p, 0.0).unwrap();
        for k in 1..=10 {
            let ts = exact_reduced_two_state(&p, 0.2 * k as f64).unwrap();
            assert!((ts.entry(0, 0) - first.entry(0, 0)).modulus() < 1e-13);
            assert!((ts.entry(1, 1) - first.entry(1, 1)).modulus() < 1e-13);
        }
    }

    #[test]
    fn env_post_two_states_free_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut p = SpinBathParams::random(&mut rng, 2, 1.0, false);
        p.g = vec![0.0, 0.0];
        let [up, _] = env_postselected_two_states(&p, 0.4).unwrap();
        let expect = p.system_pre.ket().outer(&Ket::up()).unwrap();
        assert!(up.operator().max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn env_post_midpoint_coherence_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = SpinBathParams::random(&mut rng, 3, 1.0, false);
        let [_, down] = env_postselected_two_states(&p, 0.5).unwrap();
        // χ(2t − T) = χ(0) at the midpoint
        assert!((down.entry(0, 1) - p.system_pre.up).modulus() < 1e-14);
    }

    #[test]
    fn rho_eff_closed_form_matches_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = SpinBathParams::random(&mut rng, 4, 1.0, false);
        for &t in &[0.0, 0.2, 0.5, 0.9, 1.0] {
            let fam = env_postselected_two_states(&p, t).unwrap();
            let sum = fam[0].rho_in().add(&fam[1].rho_in()).unwrap().scale(C64::new(0.5, 0.0));
            let closed = rho_eff_xy(&p, t).unwrap();
            assert!(closed.max_abs_diff(&sum) < 1e-14);
            assert!(closed.is_hermitian(1e-15));
            // for σ_x and σ_y every ρ(a) is proportional to the same matrix
            for ps in [ProjectorSet::sigma_x(), ProjectorSet::sigma_y()] {
                let ed = effective_density(&fam, &ps).unwrap();
                assert!(ed.a_independence() < 1e-12);
                for r in ed.rhos() {
                    assert!(r.max_abs_diff(&closed) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn rho_eff_boundaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = SpinBathParams::random(&mut rng, 3, 1.0, false);
        let c0 = chi(&p, 0.0).norm_sqr();
        let big_t = p.t_final;
        let (a, b) = (p.system_pre.up, p.system_pre.down);
        let end = Ket::qubit(a * chi(&p, big_t), b * chi(&p, -big_t)).projector().scale(C64::new(1.0 / c0, 0.0));
        assert!(rho_eff_xy(&p, big_t).unwrap().max_abs_diff(&end) < 1e-14);
        let w = (chi(&p, big_t).norm_sqr() + chi(&p, -big_t).norm_sqr()) / (2.0 * c0);
        let start = p.system_pre.ket().projector().scale(C64::new(w, 0.0));
        assert!(rho_eff_xy(&p, 0.0).unwrap().max_abs_diff(&start) < 1e-14);
        assert!((purity(&rho_eff_xy(&p, 0.0).unwrap()).unwrap() - 1.0).abs() < 1e-10);
        assert!((purity(&rho_eff_xy(&p, big_t).unwrap()).unwrap() - 1.0).abs() < 1e-10);
        assert!(purity(&rho_eff_xy(&p, big_t / 2.0).unwrap()).unwrap() < 1.0 - 1e-6);
    }

    #[test]
    fn suppression_weak_evolution_is_scalar() {
        let p = suppression_scenario(vec![0.4, 0.9, 1.3], 1.0).unwrap();
        let uw = weak_evolution_closed(&p).unwrap();
        let c: f64 = p.g.iter().map(|g| libm::cos(g * p.t_final)).product();
        let id = Operator::identity(HilbertSpace::qubit()).scale(C64::new(c, 0.0));
        assert!(uw.max_abs_diff(&id) < 1e-15);
    }

    #[test]
    fn validation_names_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p = SpinBathParams::random(&mut rng, 2, 1.0, true);
        p.bath_pre[1].up *= 1.1;
        assert!(matches!(p.validate(), Err(Error::NotNormalized { what: "alpha/beta", .. })));
        let mut q = SpinBathParams::random(&mut rng, 2, 1.0, true);
        q.bath_post = vec![SpinState::z_down(); 2];
        q.bath_pre = vec![SpinState::z_up(); 2];
        assert!(matches!(q.validate(), Err(Error::OrthogonalEnvironment { .. })));
        let mut r = SpinBathParams::random(&mut rng, 2, 1.0, true);
        r.system_post = None;
        assert!(exact_reduced_two_state(&r, 0.5).is_err());
    }
}
