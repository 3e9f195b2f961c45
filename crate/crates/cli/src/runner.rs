//! `run`: evaluates one scenario on an evenly spaced time grid.

use twostate_core::hilbert::{Operator, Tensor};
use twostate_core::liouville::{
    self, BurstEnvironment, BurstSpec, ContinuousSpec, FreeEnvironment, InteractionSpec, Trajectory,
};
use twostate_core::spinbath;
use twostate_core::twostate::{self, effective_density, purity, ProjectorSet, TwoState};
use twostate_core::Modulus;
use twostate_core::C64;

use crate::config::{ket, operator, BurstConfig, PerturbativeConfig, ScenarioConfig, ScenarioKind, SpinBathConfig};
use crate::error::CliError;
use crate::table::{Cell, Table};
use crate::verify;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub table: Table,
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
    /// Failure descriptions from a `verify` scenario.
    pub failures: Vec<String>,
}

pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, CliError> {
    match cfg.scenario {
        ScenarioKind::SpinbathExact => spinbath_exact(cfg, cfg.spinbath.as_ref().expect("validated")),
        ScenarioKind::SpinbathEnvPost => spinbath_env_post(cfg, cfg.spinbath.as_ref().expect("validated")),
        ScenarioKind::PerturbativeSpin => perturbative(cfg, cfg.perturbative.as_ref().expect("validated")),
        ScenarioKind::Burst => burst(cfg, cfg.burst.as_ref().expect("validated")),
        ScenarioKind::Verify => verify_scenario(cfg),
    }
}

fn entry_columns(prefix: &str, dim: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(2 * dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            out.push(format!("{prefix}{i}{j}_re"));
            out.push(format!("{prefix}{i}{j}_im"));
        }
    }
    out
}

fn entry_cells(op: &Operator) -> Vec<Cell> {
    op.matrix().as_slice().iter().flat_map(|z| [Cell::Num(z.re), Cell::Num(z.im)]).collect()
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Per-row quantities shared by all trajectory scenarios.
struct RowStats {
    sv: Vec<f64>,
    coh: f64,
    purity: f64,
    a_indep: f64,
}

fn stats_for(family: &[TwoState], ps: &ProjectorSet, sv: Vec<f64>, coh: f64) -> Result<RowStats, CliError> {
    let mut rho = family[0].rho_in();
    for ts in &family[1..] {
        rho = rho.add(&ts.rho_in())?;
    }
    let ed = effective_density(family, ps)?;
    Ok(RowStats { sv, coh, purity: purity(&rho)?, a_indep: ed.a_independence() })
}

fn single(ts: &TwoState, ps: &ProjectorSet) -> Result<RowStats, CliError> {
    stats_for(core::slice::from_ref(ts), ps, ts.schmidt_spectrum(), ts.entry(0, 1).modulus())
}

fn stat_cells(s: &RowStats) -> Vec<Cell> {
    vec![Cell::Num(s.sv[0]), Cell::Num(s.sv[1]), Cell::Num(s.coh), Cell::Num(s.purity), Cell::Num(s.a_indep)]
}

const STAT_COLUMNS: [&str; 5] = ["sv1", "sv2", "coh_mag", "purity_eff", "a_indep_score"];

fn ratio(sv: &[f64]) -> f64 {
    if sv[0] > 0.0 {
        sv[1] / sv[0]
    } else {
        0.0
    }
}

fn rank(sv: &[f64]) -> usize {
    sv.iter().filter(|s| **s > RANK_TOL * sv[0]).count()
}

fn standard_summary(cfg: &ScenarioConfig, times: &[f64], stats: &[RowStats]) -> Vec<String> {
    let (first, last) = (&stats[0], &stats[stats.len() - 1]);
    let mid = (stats.len() - 1) / 2;
    let max_a = stats.iter().map(|s| s.a_indep).fold(0.0, f64::max);
    vec![
        format!("scenario {}: {} rows", cfg.scenario.name(), stats.len()),
        format!(
            "boundary schmidt rank: t1 {} (sv2/sv1 {:.3e}), t2 {} (sv2/sv1 {:.3e})",
            rank(&first.sv),
            ratio(&first.sv),
            rank(&last.sv),
            ratio(&last.sv)
        ),
        format!("midpoint entanglement: t {:.6} sv2/sv1 {:.6e}", times[mid], ratio(&stats[mid].sv)),
        format!("max a-independence score: {max_a:.3e}"),
    ]
}

fn spinbath_exact(cfg: &ScenarioConfig, sb: &SpinBathConfig) -> Result<RunOutput, CliError> {
    let p = sb.params(cfg.time.span())?;
    let ps = cfg.observable.projectors();
    let mut header = strings(&["t"]);
    header.extend(entry_columns("ts_", 2));
    header.extend(strings(&STAT_COLUMNS));
    let mut table = Table::new(header);
    let mut stats = Vec::new();
    let mut times = Vec::new();
    for dt in cfg.time.offsets() {
        let ts = spinbath::exact_reduced_two_state(&p, dt)?;
        let s = single(&ts, &ps)?;
        let mut row = vec![Cell::Num(cfg.time.t1 + dt)];
        row.extend(entry_cells(ts.operator()));
        row.extend(stat_cells(&s));
        table.push(row);
        stats.push(s);
        times.push(cfg.time.t1 + dt);
    }
    let summary = standard_summary(cfg, &times, &stats);
    Ok(RunOutput { table, summary, ..Default::default() })
}

fn spinbath_env_post(cfg: &ScenarioConfig, sb: &SpinBathConfig) -> Result<RunOutput, CliError> {
    let p = sb.params(cfg.time.span())?;
    let ps = cfg.observable.projectors();
    let mut header = strings(&["t"]);
    header.extend(entry_columns("ts_up_", 2));
    header.extend(entry_columns("ts_dn_", 2));
    header.extend(strings(&STAT_COLUMNS));
    let mut table = Table::new(header);
    let mut stats = Vec::new();
    let mut times = Vec::new();
    let mut closed_dev: f64 = 0.0;
    for dt in cfg.time.offsets() {
        let fam = spinbath::env_postselected_two_states(&p, dt)?;
        let rho = fam[0].rho_in().add(&fam[1].rho_in())?;
        let tr = rho.trace();
        let normalized = rho.scale(C64::new(1.0, 0.0) / tr);
        let closed = spinbath::rho_eff_xy(&p, dt)?;
        let closed_n = closed.scale(C64::new(1.0, 0.0) / closed.trace());
        closed_dev = closed_dev.max(normalized.max_abs_diff(&closed_n));
        // eigenvalues of the normalized effective density, descending
        let sv = twostate_core::linalg::singular_values(normalized.matrix());
        let s = stats_for(&fam, &ps, sv, normalized.entry(0, 1).modulus())?;
        let mut row = vec![Cell::Num(cfg.time.t1 + dt)];
        row.extend(entry_cells(fam[0].operator()));
        row.extend(entry_cells(fam[1].operator()));
        row.extend(stat_cells(&s));
        table.push(row);
        stats.push(s);
        times.push(cfg.time.t1 + dt);
    }
    let mut summary = standard_summary(cfg, &times, &stats);
    summary.push(format!("max |rho_eff - closed form| (trace-normalized): {closed_dev:.3e}"));
    Ok(RunOutput { table, summary, ..Default::default() })
}

fn grid_steps(requested: Option<usize>, samples: usize) -> (usize, usize) {
    let intervals = samples - 1;
    let steps = requested.unwrap_or(liouville::DEFAULT_STEPS);
    let stride = steps.div_ceil(intervals);
    (stride * intervals, stride)
}

fn trajectory_rows(
    cfg: &ScenarioConfig,
    traj: &Trajectory,
    stride: usize,
    ps: &ProjectorSet,
) -> Result<(Table, Vec<RowStats>, Vec<f64>), CliError> {
    let mut header = strings(&["t"]);
    header.extend(entry_columns("ts_", 2));
    header.extend(strings(&STAT_COLUMNS));
    let mut table = Table::new(header);
    let mut stats = Vec::new();
    let mut times = Vec::new();
    for k in 0..cfg.time.samples {
        let ts = &traj.states[k * stride];
        let t = cfg.time.t1 + traj.times[k * stride];
        let s = single(ts, ps)?;
        let mut row = vec![Cell::Num(t)];
        row.extend(entry_cells(ts.operator()));
        row.extend(stat_cells(&s));
        table.push(row);
        stats.push(s);
        times.push(t);
    }
    Ok((table, stats, times))
}

fn perturbative(cfg: &ScenarioConfig, pc: &PerturbativeConfig) -> Result<RunOutput, CliError> {
    let big_t = cfg.time.span();
    let (s1, s2) = (ket(&pc.system_pre), ket(&pc.system_post));
    let (e1, e2) = (ket(&pc.env_pre), ket(&pc.env_post));
    let l = operator(&pc.l_op);
    let sz = Operator::sigma_z();
    let h_tot = sz.tensor(&l).scale(C64::new(pc.lambda, 0.0));
    let h_e = Operator::zeros(e1.space().clone());
    let exact_at = |t: f64| -> Result<TwoState, CliError> {
        let joint = TwoState::from_conditions(&s1.tensor(&e1), &s2.tensor(&e2), &h_tot, 0.0, big_t, t)?;
        Ok(twostate::reduce_over_environment(&joint, &h_e, &e1, &e2)?)
    };
    let mut spec = InteractionSpec::continuous(ContinuousSpec {
        lambda: pc.lambda,
        t_final: big_t,
        q_ops: vec![sz.clone()],
        l_ops: vec![l.clone()],
        env: FreeEnvironment::static_conditions(e1.clone(), e2.clone())?,
        h_s: None,
    })?;
    if pc.allow_strong_coupling {
        spec = spec.acknowledge_strong_coupling();
    }
    let m = liouville::weak_moments(&spec)?;
    let rs0 = exact_at(0.0)?;
    let (steps, stride) = grid_steps(pc.steps, cfg.time.samples);
    let traj = liouville::integrate(&rs0, &spec, steps)?;
    let ps = cfg.observable.projectors();
    let (table, stats, times) = trajectory_rows(cfg, &traj, stride, &ps)?;
    let (mut closed_dev, mut exact_dev): (f64, f64) = (0.0, 0.0);
    for k in 0..cfg.time.samples {
        let ts = &traj.states[k * stride];
        let closed = liouville::closed_form_spin(&rs0, m.l_w[0], m.delta[(0, 0)], pc.lambda, big_t, ts.time())?;
        closed_dev = closed_dev.max(ts.operator().max_abs_diff(closed.operator()));
        exact_dev = exact_dev.max(ts.operator().max_abs_diff(exact_at(ts.time())?.operator()));
    }
    let mut summary = standard_summary(cfg, &times, &stats);
    summary.push(format!(
        "weak moments: L_w {:.6e}{:+.6e}i, delta {:.6e}{:+.6e}i",
        m.l_w[0].re,
        m.l_w[0].im,
        m.delta[(0, 0)].re,
        m.delta[(0, 0)].im
    ));
    summary.push(format!("integration steps: {steps}"));
    summary.push(format!("max |integrated - closed form|: {closed_dev:.3e}"));
    summary.push(format!("max |integrated - exact|: {exact_dev:.3e}"));
    Ok(RunOutput { table, summary, warnings: traj.warnings.clone(), failures: Vec::new() })
}

fn burst(cfg: &ScenarioConfig, bc: &BurstConfig) -> Result<RunOutput, CliError> {
    let n = bc.particles.len();
    let tau = cfg.time.span() / n as f64;
    let (s1, s2) = (ket(&bc.system_pre), ket(&bc.system_post));
    let mut spec = InteractionSpec::burst(BurstSpec {
        lambda: bc.lambda,
        tau,
        sigma: Operator::sigma_z(),
        l_ops: bc.particles.iter().map(|p| operator(&p.l_op)).collect(),
        env: BurstEnvironment::Product {
            pre: bc.particles.iter().map(|p| ket(&p.pre)).collect(),
            post: bc.particles.iter().map(|p| ket(&p.post)).collect(),
        },
    })?;
    if bc.allow_strong_coupling {
        spec = spec.acknowledge_strong_coupling();
    }
    let m = liouville::weak_moments(&spec)?;
    let exact = liouville::product_burst_boundaries(&spec, &s1, &s2)?;
    let (steps, stride) = grid_steps(bc.steps, cfg.time.samples);
    let traj = liouville::integrate(&exact[0], &spec, steps)?;
    let ps = cfg.observable.projectors();
    let (table, stats, times) = trajectory_rows(cfg, &traj, stride, &ps)?;

    let per_window = steps / n;
    let coh0 = traj.states[0].entry(0, 1).modulus();
    let (mut coh_drift, mut purity_drift, mut exact_dev): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (k, ex) in exact.iter().enumerate() {
        let idx = k * per_window;
        coh_drift = coh_drift.max((traj.states[idx].entry(0, 1).modulus() - coh0).abs());
        purity_drift = purity_drift.max((traj.diagnostics[idx].purity - 1.0).abs());
        exact_dev = exact_dev.max(traj.states[idx].operator().max_abs_diff(ex.operator()));
    }
    let mut cross: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                cross = cross.max(m.delta[(i, j)].modulus());
            }
        }
    }
    let bound = 5.0 * (bc.lambda * tau) * (bc.lambda * tau);
    let mut summary = standard_summary(cfg, &times, &stats);
    summary.push(format!("bursts: {n}, tau {tau:.6e}, lambda*tau {:.6e}", bc.lambda * tau));
    summary.push(format!("max coherence drift at burst boundaries: {coh_drift:.3e} (5 lambda^2 tau^2 = {bound:.3e})"));
    summary.push(format!("max purity drift at burst boundaries: {purity_drift:.3e}"));
    summary.push(format!("max |integrated - exact| at burst boundaries: {exact_dev:.3e}"));
    summary.push(format!("max |delta_nm| (n != m): {cross:.3e}"));
    Ok(RunOutput { table, summary, warnings: traj.warnings.clone(), failures: Vec::new() })
}

fn verify_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, CliError> {
    let v = cfg.verify.as_ref().expect("validated");
    let seed = cfg.seed.expect("validated");
    let mut table = Table::new(strings(&["check", "metric", "value", "limit", "passed"]));
    let mut out = RunOutput::default();
    for check in verify::expand(&v.checks) {
        let report = verify::run_check(check, seed, v.trials);
        for m in &report.metrics {
            table.push(vec![
                Cell::Text(check.name().to_string()),
                Cell::Text(m.name.clone()),
                Cell::Num(m.value),
                Cell::Text(m.limit.to_string()),
                Cell::Text(m.passed().to_string()),
            ]);
        }
        out.summary.extend(report.lines());
        out.failures.extend(report.failure_lines());
    }
    out.table = table;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_steps_divisible() {
        assert_eq!(grid_steps(None, 21), (2000, 100));
        assert_eq!(grid_steps(Some(1000), 31), (1020, 34));
    }

    #[test]
    fn rank_counts_relative() {
        assert_eq!(rank(&[1.0, 1e-12]), 1);
        assert_eq!(rank(&[1.0, 1e-3]), 2);
    }
}
