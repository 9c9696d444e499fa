use std::collections::HashSet;
use std::path::PathBuf;

use asl_core::actor_lab::train_actor;
use asl_core::info_metrics::{analyze_joint, verify_exact_decomposition};
use asl_core::line1d::{line_info_report, line_mixed_policy_eval};
use asl_core::mixed_policy::{build_mixed_policy, evaluate_tasks, sample_tasks, TaskSample};
use asl_core::rep_library::TemplateName;
use asl_core::rng::{stream, Domain};
use asl_core::stats::spearman;
use asl_core::verify::Fault;
use asl_core::{
    baselines, compute_oracle, run_verification, sample_library, Analyzer, CubeEnv, LinePhi,
    OracleTables, RepresentationSpec, VerifyOptions,
};
use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_csv, write_json, AppendTable, MetricsRow};

const LIBRARY_CHUNK: usize = 64;

struct Lab {
    env: CubeEnv,
    oracle: OracleTables,
}

impl Lab {
    fn new(cfg: &ExperimentConfig) -> CliResult<Self> {
        let env = CubeEnv::new(cfg.grid_size)?;
        let oracle = compute_oracle(&env);
        Ok(Self { env, oracle })
    }
}

struct Stages<'a> {
    cfg: &'a ExperimentConfig,
    analyzer: Analyzer<'a>,
    tasks: TaskSample,
}

impl<'a> Stages<'a> {
    fn new(cfg: &'a ExperimentConfig, lab: &'a Lab) -> CliResult<Self> {
        Ok(Self {
            cfg,
            analyzer: Analyzer::new(&lab.env, &lab.oracle)?,
            tasks: sample_tasks(&cfg.rollout, &lab.env, &lab.oracle)?,
        })
    }

    fn row(&self, spec: &RepresentationSpec, rollout: bool, actor: bool) -> CliResult<MetricsRow> {
        let z = self.analyzer.rep_ids(spec)?;
        let a = analyze_joint(&self.analyzer.joint, &z)?;
        let r = a.report;
        let mut row = MetricsRow {
            spec_id: spec.id.clone(),
            template: spec.template_name().to_string(),
            delta_a: r.delta_a,
            delta_v: r.delta_v,
            i_az_sv: r.i_az_sv,
            i_ag_sv: r.i_ag_sv,
            i_av_sz: r.i_av_sz,
            h_a_sg: r.h_a_sg,
            chain_residual: verify_exact_decomposition(&a),
            success_rate: None,
            off_support_steps: None,
            nll: None,
            excess: None,
            modeling_error: None,
            iterations: None,
            converged: None,
            seed: self.cfg.seed,
            log_base: "e".into(),
        };
        if rollout {
            let table = build_mixed_policy(
                spec,
                self.analyzer.env,
                self.analyzer.oracle,
                &self.analyzer.features,
                self.cfg.rollout.support,
            )?;
            let out = evaluate_tasks(&self.cfg.rollout, self.analyzer.env, &table, &self.tasks)?;
            row.success_rate = Some(out.success_rate);
            row.off_support_steps = Some(out.off_support_steps);
        }
        if actor {
            let t = train_actor(&self.analyzer.joint, &z, &self.cfg.actor)?;
            row.nll = Some(t.last.loss);
            row.excess = Some(t.excess);
            row.modeling_error = Some(t.last.modeling_error);
            row.iterations = Some(t.iterations);
            row.converged = Some(t.converged);
        }
        Ok(row)
    }
}

fn out_path(cfg: &ExperimentConfig, name: &str) -> CliResult<PathBuf> {
    ensure_dir(&cfg.out_dir)?;
    Ok(cfg.out_dir.join(name))
}

fn write_config(cfg: &ExperimentConfig) -> CliResult<()> {
    let path = out_path(cfg, "config.json")?;
    crate::output::write_text(&path, &(cfg.to_json() + "\n"))
}

#[derive(Serialize)]
struct EnvReport {
    grid_size: u8,
    states: usize,
    goals: usize,
    valid_pairs: usize,
    unreachable_pairs: usize,
    max_distance: u16,
}

pub fn env_report(cfg: &ExperimentConfig) -> CliResult<()> {
    let lab = Lab::new(cfg)?;
    let report = EnvReport {
        grid_size: cfg.grid_size,
        states: lab.env.num_states(),
        goals: lab.env.num_goals(),
        valid_pairs: lab.env.pairs().len(),
        unreachable_pairs: lab.oracle.unreachable_pairs(&lab.env),
        max_distance: lab.oracle.max_finite_dist(),
    };
    write_config(cfg)?;
    write_json(&out_path(cfg, "env_report.json")?, &report)?;
    println!(
        "states {}  goals {}  valid pairs {}  unreachable pairs {}",
        report.states, report.goals, report.valid_pairs, report.unreachable_pairs
    );
    Ok(())
}

fn bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

pub fn baselines_cmd(cfg: &ExperimentConfig) -> CliResult<()> {
    write_config(cfg)?;
    let lab = Lab::new(cfg)?;
    let stages = Stages::new(cfg, &lab)?;
    let rows = baselines()
        .iter()
        .map(|spec| stages.row(spec, true, true))
        .collect::<CliResult<Vec<_>>>()?;
    write_csv(&out_path(cfg, "baselines.csv")?, &cfg.hash(), &rows)?;
    println!("{:<12} {:>10} {:>10} {:>10} {:>10} {:>8}", "spec", "dA nats", "dA bits", "dV nats", "dV bits", "success");
    for r in &rows {
        println!(
            "{:<12} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>8.4}",
            r.spec_id,
            r.delta_a,
            bits(r.delta_a),
            r.delta_v,
            bits(r.delta_v),
            r.success_rate.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

/// `k` spec indices stratified by template (largest remainder allocation),
/// drawn without replacement within each template.
pub fn stratified_subset(specs: &[RepresentationSpec], k: usize, seed: u64) -> HashSet<usize> {
    if k >= specs.len() {
        return (0..specs.len()).collect();
    }
    let groups: Vec<Vec<usize>> = TemplateName::ALL
        .iter()
        .map(|t| (0..specs.len()).filter(|&i| specs[i].template_name() == t.name()).collect())
        .collect();
    let n = specs.len();
    let mut quota: Vec<usize> = groups.iter().map(|g| g.len() * k / n).collect();
    let mut remainders: Vec<(usize, usize)> =
        groups.iter().enumerate().map(|(i, g)| (g.len() * k % n, i)).collect();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut left = k - quota.iter().sum::<usize>();
    for &(_, i) in &remainders {
        if left == 0 {
            break;
        }
        if quota[i] < groups[i].len() {
            quota[i] += 1;
            left -= 1;
        }
    }
    let mut chosen = HashSet::new();
    for (t, g) in groups.iter().enumerate() {
        let mut rng = stream(seed, Domain::Subset, 0, t as u32);
        for j in index::sample(&mut rng, g.len(), quota[t]) {
            chosen.insert(g[j]);
        }
    }
    chosen
}

fn library_specs(cfg: &ExperimentConfig) -> CliResult<Vec<RepresentationSpec>> {
    let specs = sample_library(cfg.library_size, cfg.seed)?;
    write_json(&out_path(cfg, "library_specs.json")?, &specs)?;
    Ok(specs)
}

fn rollout_mask(cfg: &ExperimentConfig, specs: &[RepresentationSpec]) -> HashSet<usize> {
    stratified_subset(specs, cfg.rollout_subset.unwrap_or(specs.len()), cfg.seed)
}

pub fn library(cfg: &ExperimentConfig) -> CliResult<()> {
    write_config(cfg)?;
    let lab = Lab::new(cfg)?;
    let stages = Stages::new(cfg, &lab)?;
    let specs = library_specs(cfg)?;
    let subset = rollout_mask(cfg, &specs);
    let path = out_path(cfg, "library.csv")?;
    let (mut table, done) = AppendTable::open(&path, &cfg.hash())?;
    let todo: Vec<usize> = (0..specs.len()).filter(|&i| !done.contains(&specs[i].id)).collect();
    if todo.len() < specs.len() {
        eprintln!("resuming: {} of {} rows present", specs.len() - todo.len(), specs.len());
    }
    for (c, chunk) in todo.chunks(LIBRARY_CHUNK).enumerate() {
        let rows = chunk
            .par_iter()
            .map(|&i| stages.row(&specs[i], subset.contains(&i), cfg.train_actors))
            .collect::<CliResult<Vec<_>>>()?;
        for row in &rows {
            table.append(row)?;
        }
        table.flush()?;
        eprintln!("library: {}/{}", (c * LIBRARY_CHUNK + chunk.len()).min(todo.len()), todo.len());
    }
    summarise(cfg, &crate::output::read_metrics(&path)?);
    Ok(())
}

fn summarise(cfg: &ExperimentConfig, rows: &[MetricsRow]) {
    let with_success: Vec<&MetricsRow> = rows.iter().filter(|r| r.success_rate.is_some()).collect();
    let success: Vec<f64> = with_success.iter().map(|r| r.success_rate.unwrap_or(0.0)).collect();
    let neg = |f: fn(&MetricsRow) -> f64| -> Vec<f64> { with_success.iter().map(|r| -f(r)).collect() };
    let fmt = |x: Option<f64>| x.map_or("undefined".to_string(), |v| format!("{v:.4}"));
    let worst = rows.iter().map(|r| r.chain_residual).fold(0.0, f64::max);
    println!("rows {}  worst chain-rule residual {worst:.3e}", rows.len());
    if with_success.len() >= 2 {
        println!("spearman(success, -dA) {}", fmt(spearman(&success, &neg(|r| r.delta_a))));
        println!("spearman(success, -dV) {}", fmt(spearman(&success, &neg(|r| r.delta_v))));
        let near: Vec<&&MetricsRow> =
            with_success.iter().filter(|r| r.delta_v < cfg.value_sufficiency_threshold).collect();
        let s: Vec<f64> = near.iter().map(|r| r.success_rate.unwrap_or(0.0)).collect();
        let i: Vec<f64> = near.iter().map(|r| r.i_az_sv).collect();
        println!(
            "spearman(success, I(A;Z|S,V)) over {} rows with dV < {}: {}",
            near.len(),
            cfg.value_sufficiency_threshold,
            fmt(spearman(&s, &i))
        );
    }
}

#[derive(Serialize)]
struct RolloutRow {
    spec_id: String,
    template: String,
    success_rate: f64,
    successes: u64,
    total_rollouts: u64,
    off_support_steps: u64,
    tasks_with_replacement: bool,
    seed: u64,
}

pub fn rollout(cfg: &ExperimentConfig) -> CliResult<()> {
    write_config(cfg)?;
    let lab = Lab::new(cfg)?;
    let stages = Stages::new(cfg, &lab)?;
    let lib = library_specs(cfg)?;
    let subset = rollout_mask(cfg, &lib);
    let mut specs = baselines();
    specs.extend(lib.into_iter().enumerate().filter(|(i, _)| subset.contains(i)).map(|(_, s)| s));
    let rows = specs
        .par_iter()
        .map(|spec| {
            let table = build_mixed_policy(spec, &lab.env, &lab.oracle, &stages.analyzer.features, cfg.rollout.support)?;
            let out = evaluate_tasks(&cfg.rollout, &lab.env, &table, &stages.tasks)?;
            Ok(RolloutRow {
                spec_id: spec.id.clone(),
                template: spec.template_name().to_string(),
                success_rate: out.success_rate,
                successes: out.successes,
                total_rollouts: out.total_rollouts,
                off_support_steps: out.off_support_steps,
                tasks_with_replacement: out.tasks_with_replacement,
                seed: cfg.seed,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_csv(&out_path(cfg, "rollout.csv")?, &cfg.hash(), &rows)?;
    for r in rows.iter().take(4) {
        println!("{:<12} success {:.4}", r.spec_id, r.success_rate);
    }
    println!("{} specs evaluated", rows.len());
    Ok(())
}

#[derive(Serialize)]
struct ActorRow {
    spec_id: String,
    template: String,
    delta_a: f64,
    h_a_sg: f64,
    nll: f64,
    excess: f64,
    modeling_error: f64,
    iterations: usize,
    converged: bool,
    max_loss_identity_residual: f64,
    max_risk_identity_residual: f64,
    max_bound_violation: f64,
    seed: u64,
    log_base: String,
}

pub fn actor(cfg: &ExperimentConfig) -> CliResult<()> {
    write_config(cfg)?;
    let lab = Lab::new(cfg)?;
    let analyzer = Analyzer::new(&lab.env, &lab.oracle)?;
    let mut specs = baselines();
    specs.extend(sample_library(cfg.library_size, cfg.seed)?.into_iter().take(cfg.actor_specs));
    let rows = specs
        .par_iter()
        .map(|spec| {
            let z = analyzer.rep_ids(spec)?;
            let t = train_actor(&analyzer.joint, &z, &cfg.actor)?;
            Ok(ActorRow {
                spec_id: spec.id.clone(),
                template: spec.template_name().to_string(),
                delta_a: t.delta_a,
                h_a_sg: t.h_a_sg,
                nll: t.last.loss,
                excess: t.excess,
                modeling_error: t.last.modeling_error,
                iterations: t.iterations,
                converged: t.converged,
                max_loss_identity_residual: t.max_loss_identity_residual,
                max_risk_identity_residual: t.max_risk_identity_residual,
                max_bound_violation: t.max_bound_violation,
                seed: cfg.seed,
                log_base: "e".into(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_csv(&out_path(cfg, "actor.csv")?, &cfg.hash(), &rows)?;
    let bad: Vec<&str> = rows
        .iter()
        .filter(|r| {
            r.max_loss_identity_residual > 1e-8
                || r.max_risk_identity_residual > 1e-8
                || r.max_bound_violation > 1e-7
        })
        .map(|r| r.spec_id.as_str())
        .collect();
    println!("{} actors trained, {} converged", rows.len(), rows.iter().filter(|r| r.converged).count());
    if !bad.is_empty() {
        return Err(CliError::Verification(format!("actor identities broken for {}", bad.join(", "))));
    }
    Ok(())
}

#[derive(Serialize)]
struct LineRow {
    phi: &'static str,
    distance_class: u32,
    tasks: usize,
    success_rate: f64,
    exact_success_rate: f64,
    delta_a: f64,
    delta_v: f64,
    i_az_sv: f64,
}

pub fn line1d(cfg: &ExperimentConfig) -> CliResult<()> {
    write_config(cfg)?;
    let mut rows = Vec::new();
    for phi in LinePhi::ALL {
        let info = line_info_report(&cfg.line, phi)?.report;
        for r in line_mixed_policy_eval(&cfg.line, phi)? {
            rows.push(LineRow {
                phi: phi.name(),
                distance_class: r.distance,
                tasks: r.tasks,
                success_rate: r.success_rate,
                exact_success_rate: r.exact_success_rate,
                delta_a: info.delta_a,
                delta_v: info.delta_v,
                i_az_sv: info.i_az_sv,
            });
        }
        println!("phi_{:<5} dA {:.6}  dV {:.6}  I(A;Z|S,V) {:.6}", phi.name(), info.delta_a, info.delta_v, info.i_az_sv);
    }
    write_csv(&out_path(cfg, "line1d.csv")?, &cfg.hash(), &rows)
}

pub fn verify(cfg: &ExperimentConfig, fault: Option<Fault>) -> CliResult<()> {
    let opts = VerifyOptions {
        grid_size: cfg.grid_size,
        library_size: 50,
        seed: cfg.seed,
        fault,
        ..Default::default()
    };
    let report = run_verification(&opts)?;
    write_json(&out_path(cfg, "verify.json")?, &report)?;
    for c in &report.checks {
        println!("{:<6} {:<28} {:.3e} (tol {:.0e})  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance, c.detail);
    }
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

pub fn all(cfg: &ExperimentConfig, fault: Option<Fault>) -> CliResult<()> {
    env_report(cfg)?;
    baselines_cmd(cfg)?;
    library(cfg)?;
    line1d(cfg)?;
    verify(cfg, fault)
}
