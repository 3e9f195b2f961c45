//! Randomized cross-checks of closed forms against independent oracles.
//!
//! Every check draws its parameters from `ChaCha8Rng::seed_from_u64(seed)`,
//! so a `(check, seed, trials)` triple reproduces bit for bit. Checks that
//! share a draw sequence (`spinbath_exact`, `recoherence`) see the same
//! draws for the same seed.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use twostate_core::hilbert::{self, HilbertSpace, Ket, Operator};
use twostate_core::liouville::{self, BurstEnvironment, BurstSpec, ContinuousSpec, FreeEnvironment, InteractionSpec};
use twostate_core::sampling::{bloch_uniform, random_hermitian, random_ket, random_orthonormal_basis};
use twostate_core::spinbath::{self, SpinBathParams, SpinState};
use twostate_core::twostate::{
    self, effective_density, prob_pre_only, prob_pre_post, prob_pre_post_density_form, prob_summed_over_finals, purity,
    PostSelectedEnvironment, ProjectorSet, TwoState,
};
use twostate_core::Modulus;
use twostate_core::{Error, C64};

use crate::config::{cx, SpinBathConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Check {
    SpinbathExact,
    Recoherence,
    Probability,
    BasisIndependence,
    EffectivePurity,
    Suppression,
    Perturbative,
    Integrator,
    Burst,
    All,
}

impl Check {
    pub const EACH: [Check; 9] = [
        Check::SpinbathExact,
        Check::Recoherence,
        Check::Probability,
        Check::BasisIndependence,
        Check::EffectivePurity,
        Check::Suppression,
        Check::Perturbative,
        Check::Integrator,
        Check::Burst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::SpinbathExact => "spinbath_exact",
            Check::Recoherence => "recoherence",
            Check::Probability => "probability",
            Check::BasisIndependence => "basis_independence",
            Check::EffectivePurity => "effective_purity",
            Check::Suppression => "suppression",
            Check::Perturbative => "perturbative",
            Check::Integrator => "integrator",
            Check::Burst => "burst",
            Check::All => "all",
        }
    }
}

/// `All` expanded, duplicates dropped, order kept.
pub fn expand(checks: &[Check]) -> Vec<Check> {
    let mut out = Vec::new();
    for c in checks {
        let items: &[Check] = if *c == Check::All { &Check::EACH } else { core::slice::from_ref(c) };
        for i in items {
            if !out.contains(i) {
                out.push(*i);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Limit {
    AtMost(f64),
    AtLeast(f64),
}

impl Limit {
    fn admits(self, v: f64) -> bool {
        match self {
            Limit::AtMost(x) => v <= x,
            Limit::AtLeast(x) => v >= x,
        }
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Limit::AtMost(x) => write!(f, "<= {x:e}"),
            Limit::AtLeast(x) => write!(f, ">= {x:e}"),
        }
    }
}

/// Worst value of one quantity across trials.
#[derive(Clone, Debug, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub limit: Limit,
}

impl Metric {
    pub fn passed(&self) -> bool {
        self.limit.admits(self.value)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub trial: usize,
    pub reason: String,
    pub draw: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub check: Check,
    pub seed: u64,
    pub trials: usize,
    pub metrics: Vec<Metric>,
    pub failures: Vec<Failure>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.metrics.iter().all(Metric::passed)
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![format!(
            "check {} (seed {}, {} trials): {}",
            self.check.name(),
            self.seed,
            self.trials,
            if self.passed() { "ok" } else { "FAILED" }
        )];
        for m in &self.metrics {
            out.push(format!(
                "  {}: {:.3e} ({}){}",
                m.name,
                m.value,
                m.limit,
                if m.passed() { "" } else { " violated" }
            ));
        }
        out
    }

    /// One line per failing trial, draw serialized as compact JSON.
    pub fn failure_lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .failures
            .iter()
            .map(|f| format!("{} trial {}: {}; draw: {}", self.check.name(), f.trial, f.reason, f.draw))
            .collect();
        for m in self.metrics.iter().filter(|m| !m.passed()) {
            out.push(format!("{}: {} = {:e} violates {}", self.check.name(), m.name, m.value, m.limit));
        }
        out
    }
}

/// Accumulates the worst value of a metric and the trials that break it.
struct Tracker {
    name: &'static str,
    limit: Limit,
    worst: Option<f64>,
}

impl Tracker {
    fn max(name: &'static str, bound: f64) -> Self {
        Tracker { name, limit: Limit::AtMost(bound), worst: None }
    }

    fn min(name: &'static str, bound: f64) -> Self {
        Tracker { name, limit: Limit::AtLeast(bound), worst: None }
    }

    /// Records `v`; returns a failure reason if it breaks the limit.
    fn see(&mut self, v: f64) -> Option<String> {
        let worse = match (self.worst, self.limit) {
            (None, _) => true,
            (Some(w), Limit::AtMost(_)) => v > w || v.is_nan(),
            (Some(w), Limit::AtLeast(_)) => v < w || v.is_nan(),
        };
        if worse {
            self.worst = Some(v);
        }
        (!self.limit.admits(v)).then(|| format!("{} = {v:e} violates {}", self.name, self.limit))
    }

    fn metric(&self) -> Metric {
        Metric { name: self.name.to_string(), value: self.worst.unwrap_or(f64::NAN), limit: self.limit }
    }
}

struct Run {
    check: Check,
    seed: u64,
    trials: usize,
    trackers: Vec<Tracker>,
    failures: Vec<Failure>,
    extra: Vec<Metric>,
}

impl Run {
    fn new(check: Check, seed: u64, trials: usize, trackers: Vec<Tracker>) -> Self {
        Run { check, seed, trials, trackers, failures: Vec::new(), extra: Vec::new() }
    }

    /// Feeds one trial's values (in tracker order) or its error.
    fn trial(&mut self, trial: usize, values: Result<Vec<f64>, Error>, draw: impl FnOnce() -> Value) {
        let reasons: Vec<String> = match values {
            Ok(vs) => self.trackers.iter_mut().zip(vs).filter_map(|(t, v)| t.see(v)).collect(),
            Err(e) => vec![format!("formalism error: {e}")],
        };
        if !reasons.is_empty() {
            self.failures.push(Failure { trial, reason: reasons.join("; "), draw: draw() });
        }
    }

    fn finish(self) -> CheckReport {
        let mut metrics: Vec<Metric> = self.trackers.iter().map(Tracker::metric).collect();
        metrics.extend(self.extra);
        CheckReport { check: self.check, seed: self.seed, trials: self.trials, metrics, failures: self.failures }
    }
}

pub fn run_check(check: Check, seed: u64, trials: usize) -> CheckReport {
    match check {
        Check::SpinbathExact => spinbath_exact(seed, trials),
        Check::Recoherence => recoherence(seed, trials),
        Check::Probability => probability(seed, trials),
        Check::BasisIndependence => basis_independence(seed, trials),
        Check::EffectivePurity => effective_purity(seed, trials),
        Check::Suppression => suppression(seed, trials),
        Check::Perturbative => perturbative(seed, trials),
        Check::Integrator => integrator(seed, trials),
        Check::Burst => burst(seed, trials),
        Check::All => unreachable!("expand `all` before running"),
    }
}

fn ket_json(k: &Ket) -> Vec<[f64; 2]> {
    k.amps().iter().map(|z| cx(*z)).collect()
}

fn op_json(o: &Operator) -> Vec<Vec<[f64; 2]>> {
    let n = o.dim();
    (0..n).map(|i| (0..n).map(|j| cx(o.entry(i, j))).collect()).collect()
}

fn spin_draw(p: &SpinBathParams) -> Value {
    json!({ "t_final": p.t_final, "spinbath": SpinBathConfig::from_params(p) })
}

/// Time samples per spin-bath draw.
pub const SPINBATH_SAMPLES: usize = 20;

fn spinbath_draws(seed: u64, trials: usize) -> Vec<SpinBathParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let n = rng.gen_range(1..=8);
            let t_final = rng.gen_range(0.5..=2.0);
            SpinBathParams::random(&mut rng, n, t_final, true)
        })
        .collect()
}

fn sample_times(t_final: f64, samples: usize) -> Vec<f64> {
    (0..samples).map(|k| if k + 1 == samples { t_final } else { t_final * k as f64 / (samples - 1) as f64 }).collect()
}

fn spinbath_exact(seed: u64, trials: usize) -> CheckReport {
    let mut run =
        Run::new(Check::SpinbathExact, seed, trials, vec![Tracker::max("max entrywise |closed - joint|", 1e-11)]);
    for (i, p) in spinbath_draws(seed, trials).iter().enumerate() {
        let dev = sample_times(p.t_final, SPINBATH_SAMPLES).into_iter().try_fold(0.0f64, |acc, t| {
            let a = spinbath::exact_reduced_two_state(p, t)?;
            let b = spinbath::brute_force_reduced(p, t)?;
            Ok(acc.max(a.operator().max_abs_diff(b.operator())))
        });
        run.trial(i, dev.map(|d| vec![d]), || spin_draw(p));
    }
    run.finish()
}

fn sv_ratio(ts: &TwoState) -> f64 {
    let sv = ts.schmidt_spectrum();
    sv[1] / sv[0]
}

fn recoherence(seed: u64, trials: usize) -> CheckReport {
    let mut run = Run::new(Check::Recoherence, seed, trials, vec![Tracker::max("boundary sv2/sv1", 1e-9)]);
    let mut entangled = 0usize;
    for (i, p) in spinbath_draws(seed, trials).iter().enumerate() {
        let times = sample_times(p.t_final, SPINBATH_SAMPLES);
        let ratios: Result<Vec<f64>, Error> =
            times.iter().map(|t| spinbath::exact_reduced_two_state(p, *t).map(|ts| sv_ratio(&ts))).collect();
        if let Ok(r) = &ratios {
            if r[1..r.len() - 1].iter().any(|x| *x > 1e-3) {
                entangled += 1;
            }
        }
        run.trial(i, ratios.map(|r| vec![r[0].max(r[r.len() - 1])]), || spin_draw(p));
    }
    run.extra.push(Metric {
        name: "fraction of draws with interior sv2/sv1 > 1e-3".into(),
        value: entangled as f64 / trials as f64,
        limit: Limit::AtLeast(0.9),
    });
    run.finish()
}

/// The basis projectors and, for `dim >= 3`, a coarse-grained set with the
/// first two outcomes merged into one degenerate projector.
fn projector_draw(basis: &[Ket]) -> Result<Vec<ProjectorSet>, Error> {
    let mut sets = vec![ProjectorSet::from_basis(basis)?];
    if basis.len() >= 3 {
        let merged = basis[0].projector().add(&basis[1].projector())?;
        let mut items = vec![(0.0, merged)];
        items.extend(basis[2..].iter().enumerate().map(|(k, b)| ((k + 1) as f64, b.projector())));
        sets.push(ProjectorSet::new(items)?);
    }
    Ok(sets)
}

fn probability(seed: u64, trials: usize) -> CheckReport {
    let mut run = Run::new(
        Check::Probability,
        seed,
        trials,
        vec![
            Tracker::max("max |amplitude rule - density rule| (rank-one projectors)", 1e-12),
            Tracker::max("max |pre-only - Born|", 1e-12),
            Tracker::max("max |sum - 1|", 1e-12),
        ],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..trials {
        let dim = rng.gen_range(2..=4);
        let space = HilbertSpace::new(vec![dim]).expect("dim >= 2");
        let h = random_hermitian(&mut rng, space.clone());
        let psi_in = random_ket(&mut rng, space.clone());
        let psi_out = random_ket(&mut rng, space.clone());
        let t = rng.gen_range(0.0..=1.0);
        let basis = random_orthonormal_basis(&mut rng, space);
        let values = (|| {
            let sets = projector_draw(&basis)?;
            let ts = TwoState::from_conditions(&psi_in, &psi_out, &h, 0.0, 1.0, t)?;
            let psi_t = hilbert::evolve_ket(&h, t, &psi_in)?;
            let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let dual = gap(&prob_pre_post(&ts, &sets[0])?, &prob_pre_post_density_form(&ts, &sets[0])?);
            let (mut born_gap, mut sums): (f64, f64) = (0.0, 0.0);
            for ps in &sets {
                let two = prob_pre_post(&ts, ps)?;
                let dens = prob_pre_post_density_form(&ts, ps)?;
                let pre = prob_pre_only(&ts, ps)?;
                let born =
                    ps.iter().map(|p| p.op.sandwich(&psi_t, &psi_t).map(|z| z.re)).collect::<Result<Vec<_>, _>>()?;
                born_gap = born_gap.max(gap(&pre, &born));
                for d in [&two, &dens, &pre] {
                    sums = sums.max((d.iter().sum::<f64>() - 1.0).abs());
                }
            }
            Ok(vec![dual, born_gap, sums])
        })();
        run.trial(i, values, || {
            json!({
                "dim": dim, "h": op_json(&h), "psi_in": ket_json(&psi_in), "psi_out": ket_json(&psi_out),
                "t1": 0.0, "t2": 1.0, "t": t, "basis": basis.iter().map(ket_json).collect::<Vec<_>>(),
            })
        });
    }
    run.finish()
}

fn env_post_draw(rng: &mut ChaCha8Rng, max_spins: usize) -> SpinBathParams {
    let n = rng.gen_range(1..=max_spins);
    let t_final = rng.gen_range(0.5..=2.0);
    SpinBathParams::random(rng, n, t_final, false)
}

fn joint_model(p: &SpinBathParams) -> Result<PostSelectedEnvironment, Error> {
    let (e1, e2) = p.bath_kets();
    let h_e = Operator::zeros(e1.space().clone());
    PostSelectedEnvironment::new(spinbath::interaction_hamiltonian(p)?, h_e, p.system_pre.ket(), e1, e2, 0.0, p.t_final)
}

/// Random final-system bases per basis-independence draw.
pub const ROTATED_BASES: usize = 20;

fn basis_independence(seed: u64, trials: usize) -> CheckReport {
    let mut run = Run::new(
        Check::BasisIndependence,
        seed,
        trials,
        vec![
            Tracker::max("max |P(rotated basis) - P(z basis)|", 1e-10),
            Tracker::max("max |P(joint z basis) - P(closed form)|", 1e-10),
        ],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z_basis = [Ket::up(), Ket::down()];
    for i in 0..trials {
        let p = env_post_draw(&mut rng, 4);
        let t = rng.gen_range(0.0..=p.t_final);
        let ps = ProjectorSet::from_basis(&random_orthonormal_basis(&mut rng, HilbertSpace::qubit())).expect("basis");
        let bases: Vec<Vec<Ket>> =
            (0..ROTATED_BASES).map(|_| random_orthonormal_basis(&mut rng, HilbertSpace::qubit())).collect();
        let values = (|| {
            let model = joint_model(&p)?;
            let reference = model.probabilities(&z_basis, &ps, t)?;
            let closed = prob_summed_over_finals(&spinbath::env_postselected_two_states(&p, t)?, &ps)?;
            let mut rotated: f64 = 0.0;
            for b in &bases {
                let probs = model.probabilities(b, &ps, t)?;
                rotated = probs.iter().zip(&reference).map(|(x, y)| (x - y).abs()).fold(rotated, f64::max);
            }
            let vs_closed = closed.iter().zip(&reference).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            Ok(vec![rotated, vs_closed])
        })();
        run.trial(i, values, || json!({ "t": t, "draw": spin_draw(&p) }));
    }
    run.finish()
}

fn effective_purity(seed: u64, trials: usize) -> CheckReport {
    let mut run = Run::new(
        Check::EffectivePurity,
        seed,
        trials,
        vec![
            Tracker::max("a-independence at t2", 1e-10),
            Tracker::max("|purity - 1| at t2", 1e-10),
            Tracker::max("|purity(rho_eff_xy) - 1| at t1 and t2", 1e-10),
        ],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..trials {
        let p = env_post_draw(&mut rng, 4);
        let ps = ProjectorSet::from_basis(&random_orthonormal_basis(&mut rng, HilbertSpace::qubit())).expect("basis");
        let basis = random_orthonormal_basis(&mut rng, HilbertSpace::qubit());
        let values = (|| {
            let family = joint_model(&p)?.family(&basis, p.t_final)?;
            let ed = effective_density(&family, &ps)?;
            let mut rho = family[0].rho_in();
            for ts in &family[1..] {
                rho = rho.add(&ts.rho_in())?;
            }
            let closed = [0.0, p.t_final]
                .iter()
                .map(|t| spinbath::rho_eff_xy(&p, *t).and_then(|r| purity(&r)).map(|x| (x - 1.0).abs()))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(vec![ed.a_independence(), (purity(&rho)? - 1.0).abs(), closed[0].max(closed[1])])
        })();
        run.trial(i, values, || spin_draw(&p));
    }
    run.finish()
}

/// Random measurements per suppression draw.
pub const SUPPRESSION_MEASUREMENTS: usize = 5;

fn suppression(seed: u64, trials: usize) -> CheckReport {
    let mut run = Run::new(
        Check::Suppression,
        seed,
        trials,
        vec![
            Tracker::max("max |U_w U_w^dagger - c I|", 1e-10),
            Tracker::max("max |U_w(joint) - U_w(closed)|", 1e-10),
            Tracker::max("a-independence at t1", 1e-10),
        ],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z_basis = [Ket::up(), Ket::down()];
    for i in 0..trials {
        let n = rng.gen_range(1..=5);
        let t_final = rng.gen_range(0.5..=2.0);
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..=2.0) / t_final).collect();
        let system = bloch_uniform(&mut rng);
        let measurements: Vec<ProjectorSet> = (0..SUPPRESSION_MEASUREMENTS)
            .map(|_| {
                ProjectorSet::from_basis(&random_orthonormal_basis(&mut rng, HilbertSpace::qubit())).expect("basis")
            })
            .collect();
        let mut p = match spinbath::suppression_scenario(g, t_final) {
            Ok(p) => p,
            Err(e) => {
                run.trial(i, Err(e), || Value::Null);
                continue;
            }
        };
        p.system_pre = system;
        let values = (|| {
            let (e1, e2) = p.bath_kets();
            let h_e = Operator::zeros(e1.space().clone());
            let uw = twostate::weak_evolution_operator(
                &spinbath::interaction_hamiltonian(&p)?,
                &h_e,
                &e1,
                &e2,
                0.0,
                t_final,
            )?;
            let uu = uw.mul(&uw.adjoint())?;
            let c = uu.trace() / C64::new(2.0, 0.0);
            let scalar = uu.max_abs_diff(&Operator::identity(HilbertSpace::qubit()).scale(c));
            let vs_closed = uw.max_abs_diff(&spinbath::weak_evolution_closed(&p)?);
            let family = joint_model(&p)?.family(&z_basis, 0.0)?;
            let mut a_indep: f64 = 0.0;
            for ps in &measurements {
                a_indep = a_indep.max(effective_density(&family, ps)?.a_independence());
            }
            Ok(vec![scalar, vs_closed, a_indep])
        })();
        run.trial(i, values, || spin_draw(&p));
    }
    run.finish()
}

/// Lower bound on `|⟨post|pre⟩|` per bath spin in the perturbative draws,
/// keeping every weak value within modulus 2.
pub const MIN_BATH_OVERLAP: f64 = 0.5;

fn overlap(a: &SpinState, b: &SpinState) -> f64 {
    (b.up.conj() * a.up + b.down.conj() * a.down).modulus()
}

/// Time samples for the perturbative order test.
pub const PERTURBATIVE_SAMPLES: usize = 21;

/// `E(λ)`: largest entrywise deviation of the second-order closed form from
/// the exact spin-bath solution with couplings `λ ĝ_k`.
pub fn perturbative_error(p_hat: &SpinBathParams, lambda: f64) -> Result<f64, Error> {
    let mut p = p_hat.clone();
    p.g.iter_mut().for_each(|g| *g *= lambda);
    let m = liouville::spin_bath_moments(p_hat)?;
    let rs0 = spinbath::exact_reduced_two_state(&p, 0.0)?;
    sample_times(p.t_final, PERTURBATIVE_SAMPLES).into_iter().try_fold(0.0f64, |acc, t| {
        let approx = liouville::closed_form_spin(&rs0, m.l_w[0], m.delta[(0, 0)], lambda, p.t_final, t)?;
        let exact = spinbath::exact_reduced_two_state(&p, t)?;
        Ok(acc.max(approx.operator().max_abs_diff(exact.operator())))
    })
}

fn perturbative(seed: u64, trials: usize) -> CheckReport {
    let mut run = Run::new(
        Check::Perturbative,
        seed,
        trials,
        vec![Tracker::min("min E(lambda)/E(lambda/2)", 5.0), Tracker::max("max E(lambda)/E(lambda/2)", 12.0)],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..trials {
        let n = rng.gen_range(1..=4);
        let t_final = rng.gen_range(0.5..=2.0);
        // Σ ĝ_k = 1 so that λ is the operator norm of λL, λT ∈ [0.02, 0.2]
        let mut p_hat = SpinBathParams::random(&mut rng, n, t_final, true);
        let total: f64 = p_hat.g.iter().sum();
        p_hat.g.iter_mut().for_each(|g| *g /= total);
        for (pre, post) in p_hat.bath_pre.iter().zip(p_hat.bath_post.iter_mut()) {
            while overlap(pre, post) < MIN_BATH_OVERLAP {
                *post = bloch_uniform(&mut rng);
            }
        }
        let lambda = rng.gen_range(0.02..=0.2) / t_final;
        let values = perturbative_error(&p_hat, lambda)
            .and_then(|big| perturbative_error(&p_hat, lambda / 2.0).map(|small| big / small))
            .map(|r| vec![r, r]);
        run.trial(i, values, || json!({ "lambda": lambda, "draw": spin_draw(&p_hat) }));
    }
    run.finish()
}

/// Real qubit state at angle `theta` on the x-z great circle.
fn real_qubit(theta: f64) -> Ket {
    Ket::qubit(C64::new(libm::cos(theta), 0.0), C64::new(libm::sin(theta), 0.0))
}

/// Real pre/post pair with `|⟨post|pre⟩| ≥ 1/2`: weak values of real
/// symmetric operators are then real and bounded.
fn real_condition_pair(rng: &mut ChaCha8Rng) -> (Ket, Ket) {
    let a = rng.gen_range(0.0..core::f64::consts::PI);
    let b = a + rng.gen_range(-core::f64::consts::FRAC_PI_3..=core::f64::consts::FRAC_PI_3);
    (real_qubit(a), real_qubit(b))
}

fn integrator(seed: u64, trials: usize) -> CheckReport {
    let mut run = Run::new(
        Check::Integrator,
        seed,
        trials,
        vec![
            Tracker::max("max |integrated - closed form|", 1e-9),
            Tracker::max("max diagonal drift", 1e-12),
            Tracker::max("||rho_ud(T)| - |rho_ud(0)||", 1e-12),
            Tracker::max("|endpoint(N) - endpoint(N/2)|", 1e-8),
        ],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..trials {
        let t_final = rng.gen_range(0.5..=2.0);
        let lambda = 0.1 / t_final;
        let (e1, e2) = real_condition_pair(&mut rng);
        let s1 = random_ket(&mut rng, HilbertSpace::qubit());
        let s2 = random_ket(&mut rng, HilbertSpace::qubit());
        let values = (|| {
            let spec = InteractionSpec::continuous(ContinuousSpec {
                lambda,
                t_final,
                q_ops: vec![Operator::sigma_z()],
                l_ops: vec![Operator::sigma_z()],
                env: FreeEnvironment::static_conditions(e1.clone(), e2.clone())?,
                h_s: None,
            })?;
            let m = liouville::weak_moments(&spec)?;
            let rs0 = TwoState::new(s1.outer(&s2)?, 0.0, t_final, 0.0)?;
            let traj = liouville::integrate(&rs0, &spec, liouville::DEFAULT_STEPS)?;
            let half = liouville::integrate(&rs0, &spec, liouville::DEFAULT_STEPS / 2)?;
            let mut closed_dev: f64 = 0.0;
            let mut diag: f64 = 0.0;
            for s in &traj.states {
                let c = liouville::closed_form_spin(&rs0, m.l_w[0], m.delta[(0, 0)], lambda, t_final, s.time())?;
                closed_dev = closed_dev.max(s.operator().max_abs_diff(c.operator()));
                diag = diag
                    .max((s.entry(0, 0) - rs0.entry(0, 0)).modulus())
                    .max((s.entry(1, 1) - rs0.entry(1, 1)).modulus());
            }
            let end = (traj.last().entry(0, 1).modulus() - rs0.entry(0, 1).modulus()).abs();
            let halving = traj.last().operator().max_abs_diff(half.last().operator());
            Ok(vec![closed_dev, diag, end, halving])
        })();
        run.trial(i, values, || {
            json!({ "lambda": lambda, "t_final": t_final, "e1": ket_json(&e1), "e2": ket_json(&e2), "s1": ket_json(&s1), "s2": ket_json(&s2) })
        });
    }
    run.finish()
}

/// Integration steps per burst window.
pub const STEPS_PER_BURST: usize = 100;

fn burst(seed: u64, trials: usize) -> CheckReport {
    let mut run = Run::new(
        Check::Burst,
        seed,
        trials,
        vec![
            Tracker::max("max boundary coherence drift / (5 lambda^2 tau^2)", 1.0),
            Tracker::max("max exact boundary coherence drift / (5 lambda^2 tau^2)", 1.0),
            Tracker::max("max boundary purity drift / (5 lambda^2 tau^2)", 1.0),
            Tracker::max("max |delta_nm| (n != m)", 1e-13),
            Tracker::max("max boundary |integrated - exact| / (lambda tau)^3", 10.0),
        ],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..trials {
        let n = rng.gen_range(1..=20);
        let tau = rng.gen_range(0.05..=0.5);
        let lt = rng.gen_range(0.005..=0.05);
        let lambda = lt / tau;
        let pairs: Vec<(Ket, Ket)> = (0..n).map(|_| real_condition_pair(&mut rng)).collect();
        let ops: Vec<Operator> = (0..n)
            .map(|_| {
                let (a, b, c) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                let m = twostate_core::CMatrix::from_row_major(
                    2,
                    2,
                    vec![C64::new(a, 0.0), C64::new(b, 0.0), C64::new(b, 0.0), C64::new(c, 0.0)],
                );
                Operator::from_matrix(m).expect("square")
            })
            .collect();
        let s1 = random_ket(&mut rng, HilbertSpace::qubit());
        let s2 = random_ket(&mut rng, HilbertSpace::qubit());
        let values = (|| {
            let spec = InteractionSpec::burst(BurstSpec {
                lambda,
                tau,
                sigma: Operator::sigma_z(),
                l_ops: ops.clone(),
                env: BurstEnvironment::Product {
                    pre: pairs.iter().map(|p| p.0.clone()).collect(),
                    post: pairs.iter().map(|p| p.1.clone()).collect(),
                },
            })?;
            let m = liouville::weak_moments(&spec)?;
            let exact = liouville::product_burst_boundaries(&spec, &s1, &s2)?;
            let traj = liouville::integrate(&exact[0], &spec, STEPS_PER_BURST * n)?;
            let bound = 5.0 * lt * lt;
            let coh0 = exact[0].entry(0, 1).modulus();
            let (mut coh, mut coh_exact, mut pur, mut dev): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
            for (k, ex) in exact.iter().enumerate() {
                let idx = k * STEPS_PER_BURST;
                coh = coh.max((traj.states[idx].entry(0, 1).modulus() - coh0).abs());
                coh_exact = coh_exact.max((ex.entry(0, 1).modulus() - coh0).abs());
                pur = pur.max((traj.diagnostics[idx].purity - 1.0).abs());
                dev = dev.max(traj.states[idx].operator().max_abs_diff(ex.operator()));
            }
            let mut cross: f64 = 0.0;
            for a in 0..n {
                for b in 0..n {
                    if a != b {
                        cross = cross.max(m.delta[(a, b)].modulus());
                    }
                }
            }
            Ok(vec![coh / bound, coh_exact / bound, pur / bound, cross, dev / (lt * lt * lt)])
        })();
        run.trial(i, values, || {
            json!({
                "lambda": lambda,
                "tau": tau,
                "s1": ket_json(&s1),
                "s2": ket_json(&s2),
                "particles": pairs.iter().zip(&ops).map(|((a, b), l)| json!({ "pre": ket_json(a), "post": ket_json(b), "l_op": op_json(l) })).collect::<Vec<_>>(),
            })
        });
    }
    run.finish()
}
