//! TOML scenario configuration.
//!
//! Complex numbers are `[re, im]` pairs. Unknown keys are rejected, and every
//! normalization and shape requirement is checked before any computation,
//! with errors naming the offending field.

use std::path::Path;

use serde::{Deserialize, Serialize};
use twostate_core::hilbert::{HilbertSpace, Ket, Operator};
use twostate_core::spinbath::{SpinBathParams, SpinState, MAX_SPINS};
use twostate_core::twostate::ProjectorSet;
use twostate_core::Modulus;
use twostate_core::{CMatrix, C64};

use crate::error::CliError;
use crate::verify::Check;

pub type Cx = [f64; 2];

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SpinbathExact,
    SpinbathEnvPost,
    PerturbativeSpin,
    Burst,
    Verify,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::SpinbathExact => "spinbath_exact",
            ScenarioKind::SpinbathEnvPost => "spinbath_env_post",
            ScenarioKind::PerturbativeSpin => "perturbative_spin",
            ScenarioKind::Burst => "burst",
            ScenarioKind::Verify => "verify",
        }
    }

    fn section(self) -> &'static str {
        match self {
            ScenarioKind::SpinbathExact | ScenarioKind::SpinbathEnvPost => "spinbath",
            ScenarioKind::PerturbativeSpin => "perturbative",
            ScenarioKind::Burst => "burst",
            ScenarioKind::Verify => "verify",
        }
    }
}

/// Measurement used for effective density matrices and a-independence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    #[default]
    SigmaX,
    SigmaY,
    SigmaZ,
}

impl Observable {
    pub fn projectors(self) -> ProjectorSet {
        match self {
            Observable::SigmaX => ProjectorSet::sigma_x(),
            Observable::SigmaY => ProjectorSet::sigma_y(),
            Observable::SigmaZ => ProjectorSet::sigma_z(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t1: f64,
    pub t2: f64,
    pub samples: usize,
}

impl TimeGrid {
    pub fn span(&self) -> f64 {
        self.t2 - self.t1
    }

    /// Sample offsets from `t1`; the last one is exactly `t2 − t1`.
    pub fn offsets(&self) -> Vec<f64> {
        let n = self.samples - 1;
        (0..=n).map(|k| if k == n { self.span() } else { self.span() * k as f64 / n as f64 }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinBathConfig {
    pub a: Cx,
    pub b: Cx,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_post: Option<Cx>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_post: Option<Cx>,
    pub g: Vec<f64>,
    pub alpha: Vec<Cx>,
    pub beta: Vec<Cx>,
    pub alpha_post: Vec<Cx>,
    pub beta_post: Vec<Cx>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbativeConfig {
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    pub system_pre: Vec<Cx>,
    pub system_post: Vec<Cx>,
    pub env_pre: Vec<Cx>,
    pub env_post: Vec<Cx>,
    /// Environment operator `L`, row-major.
    pub l_op: Vec<Vec<Cx>>,
    #[serde(default)]
    pub allow_strong_coupling: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub pre: Vec<Cx>,
    pub post: Vec<Cx>,
    pub l_op: Vec<Vec<Cx>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurstConfig {
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    pub system_pre: Vec<Cx>,
    pub system_post: Vec<Cx>,
    pub particles: Vec<ParticleConfig>,
    #[serde(default)]
    pub allow_strong_coupling: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub checks: Vec<Check>,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub time: TimeGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(default)]
    pub observable: Observable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spinbath: Option<SpinBathConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbative: Option<PerturbativeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burst: Option<BurstConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
}

fn bad(field: impl Into<String>, reason: impl core::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {reason}", field.into()))
}

pub fn c64(x: Cx) -> C64 {
    C64::new(x[0], x[1])
}

pub fn cx(z: C64) -> Cx {
    [z.re, z.im]
}

fn check_finite(field: &str, values: impl IntoIterator<Item = f64>) -> Result<(), CliError> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(bad(field, "non-finite value"))
    }
}

fn check_norm(field: &str, amps: &[Cx]) -> Result<(), CliError> {
    check_finite(field, amps.iter().flatten().copied())?;
    let norm: f64 = amps.iter().map(|a| a[0] * a[0] + a[1] * a[1]).sum();
    let dev = (norm - 1.0).abs();
    if dev >= NORM_TOL {
        return Err(bad(field, format!("not normalized (|norm^2 - 1| = {dev:e})")));
    }
    Ok(())
}

fn check_ket(field: &str, amps: &[Cx], dim: Option<usize>) -> Result<(), CliError> {
    if amps.len() < 2 {
        return Err(bad(field, "need at least 2 amplitudes"));
    }
    if let Some(d) = dim {
        if amps.len() != d {
            return Err(bad(field, format!("expected {d} amplitudes, found {}", amps.len())));
        }
    }
    check_norm(field, amps)
}

fn check_hermitian_matrix(field: &str, m: &[Vec<Cx>], dim: usize) -> Result<(), CliError> {
    if m.len() != dim || m.iter().any(|r| r.len() != dim) {
        return Err(bad(field, format!("expected a {dim}x{dim} matrix")));
    }
    check_finite(field, m.iter().flatten().flatten().copied())?;
    for (i, row) in m.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            let (x, y) = (c64(*entry), c64(m[j][i]).conj());
            if (x - y).modulus() > HERMITIAN_TOL {
                return Err(bad(field, format!("not Hermitian at [{i}][{j}]")));
            }
        }
    }
    Ok(())
}

pub fn ket(amps: &[Cx]) -> Ket {
    Ket::from_amps(amps.iter().copied().map(c64).collect()).expect("validated")
}

pub fn operator(m: &[Vec<Cx>]) -> Operator {
    let n = m.len();
    let data = m.iter().flatten().copied().map(c64).collect();
    Operator::new(HilbertSpace::new(vec![n]).expect("validated"), CMatrix::from_row_major(n, n, data)).expect("square")
}

fn state(up: Cx, down: Cx) -> SpinState {
    SpinState::new(c64(up), c64(down))
}

impl SpinBathConfig {
    fn validate(&self, need_post: bool) -> Result<(), CliError> {
        let n = self.g.len();
        if n == 0 || n > MAX_SPINS {
            return Err(bad("spinbath.g", format!("bath size must be between 1 and {MAX_SPINS}")));
        }
        check_finite("spinbath.g", self.g.iter().copied())?;
        for (name, list) in [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("alpha_post", &self.alpha_post),
            ("beta_post", &self.beta_post),
        ] {
            if list.len() != n {
                return Err(bad(
                    format!("spinbath.{name}"),
                    format!("expected {n} entries (one per coupling), found {}", list.len()),
                ));
            }
        }
        check_norm("spinbath.a/b", &[self.a, self.b])?;
        match (self.a_post, self.b_post) {
            (Some(a), Some(b)) => check_norm("spinbath.a_post/b_post", &[a, b])?,
            (None, None) if !need_post => {}
            (None, None) => return Err(bad("spinbath.a_post", "required by this scenario")),
            _ => return Err(bad("spinbath.a_post/b_post", "give both or neither")),
        }
        for k in 0..n {
            check_norm(&format!("spinbath.alpha[{k}]/beta[{k}]"), &[self.alpha[k], self.beta[k]])?;
            check_norm(&format!("spinbath.alpha_post[{k}]/beta_post[{k}]"), &[self.alpha_post[k], self.beta_post[k]])?;
        }
        Ok(())
    }

    pub fn params(&self, t_final: f64) -> Result<SpinBathParams, CliError> {
        let system_post = match (self.a_post, self.b_post) {
            (Some(a), Some(b)) => Some(state(a, b)),
            _ => None,
        };
        let bath = |up: &[Cx], down: &[Cx]| up.iter().zip(down).map(|(u, d)| state(*u, *d)).collect();
        Ok(SpinBathParams::new(
            self.g.clone(),
            state(self.a, self.b),
            system_post,
            bath(&self.alpha, &self.beta),
            bath(&self.alpha_post, &self.beta_post),
            t_final,
        )?)
    }

    pub fn from_params(p: &SpinBathParams) -> Self {
        SpinBathConfig {
            a: cx(p.system_pre.up),
            b: cx(p.system_pre.down),
            a_post: p.system_post.map(|s| cx(s.up)),
            b_post: p.system_post.map(|s| cx(s.down)),
            g: p.g.clone(),
            alpha: p.bath_pre.iter().map(|s| cx(s.up)).collect(),
            beta: p.bath_pre.iter().map(|s| cx(s.down)).collect(),
            alpha_post: p.bath_post.iter().map(|s| cx(s.up)).collect(),
            beta_post: p.bath_post.iter().map(|s| cx(s.down)).collect(),
        }
    }
}

fn check_steps(field: &str, steps: Option<usize>) -> Result<(), CliError> {
    match steps {
        Some(s) if s < twostate_core::liouville::MIN_STEPS => Err(bad(field, "must be at least 10")),
        _ => Ok(()),
    }
}

impl PerturbativeConfig {
    fn validate(&self) -> Result<(), CliError> {
        check_finite("perturbative.lambda", [self.lambda])?;
        check_steps("perturbative.steps", self.steps)?;
        check_ket("perturbative.system_pre", &self.system_pre, Some(2))?;
        check_ket("perturbative.system_post", &self.system_post, Some(2))?;
        check_ket("perturbative.env_pre", &self.env_pre, None)?;
        let d = self.env_pre.len();
        check_ket("perturbative.env_post", &self.env_post, Some(d))?;
        check_hermitian_matrix("perturbative.l_op", &self.l_op, d)
    }
}

impl BurstConfig {
    fn validate(&self, time: &TimeGrid) -> Result<(), CliError> {
        check_finite("burst.lambda", [self.lambda])?;
        check_steps("burst.steps", self.steps)?;
        check_ket("burst.system_pre", &self.system_pre, Some(2))?;
        check_ket("burst.system_post", &self.system_post, Some(2))?;
        if self.particles.is_empty() {
            return Err(bad("burst.particles", "at least one particle required"));
        }
        for (k, p) in self.particles.iter().enumerate() {
            check_ket(&format!("burst.particles[{k}].pre"), &p.pre, None)?;
            check_ket(&format!("burst.particles[{k}].post"), &p.post, Some(p.pre.len()))?;
            check_hermitian_matrix(&format!("burst.particles[{k}].l_op"), &p.l_op, p.pre.len())?;
        }
        if !(time.samples - 1).is_multiple_of(self.particles.len()) {
            return Err(bad("time.samples", "samples - 1 must be a multiple of the particle count"));
        }
        Ok(())
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            let msg = e.message().replace('\n', " ");
            match line {
                Some(l) => CliError::Config(format!("line {l}: {msg}")),
                None => CliError::Config(msg),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.time;
        check_finite("time.t1", [t.t1])?;
        check_finite("time.t2", [t.t2])?;
        if t.t2 <= t.t1 {
            return Err(bad("time.t2", "must exceed time.t1"));
        }
        if t.samples < 2 {
            return Err(bad("time.samples", "must be at least 2"));
        }
        let wanted = self.scenario.section();
        let present = [
            ("spinbath", self.spinbath.is_some()),
            ("perturbative", self.perturbative.is_some()),
            ("burst", self.burst.is_some()),
            ("verify", self.verify.is_some()),
        ];
        for (name, there) in present {
            if there && name != wanted {
                return Err(bad(name, format!("section not used by scenario {}", self.scenario.name())));
            }
            if !there && name == wanted {
                return Err(bad(name, format!("section required by scenario {}", self.scenario.name())));
            }
        }
        match self.scenario {
            ScenarioKind::SpinbathExact => self.spinbath.as_ref().expect("checked").validate(true),
            ScenarioKind::SpinbathEnvPost => self.spinbath.as_ref().expect("checked").validate(false),
            ScenarioKind::PerturbativeSpin => self.perturbative.as_ref().expect("checked").validate(),
            ScenarioKind::Burst => self.burst.as_ref().expect("checked").validate(t),
            ScenarioKind::Verify => {
                let v = self.verify.as_ref().expect("checked");
                if v.checks.is_empty() {
                    return Err(bad("verify.checks", "at least one check required"));
                }
                if v.trials == 0 {
                    return Err(bad("verify.trials", "must be at least 1"));
                }
                if self.seed.is_none() {
                    return Err(bad("seed", "required by scenario verify"));
                }
                Ok(())
            }
        }
    }
}
