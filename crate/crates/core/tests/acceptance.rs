//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! fails. Runs with `cargo test -p asl-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use asl_core::info_metrics::{
    analyze_joint, pinsker_lower_bound, value_functional_dependence, verify_exact_decomposition,
    InfoAnalysis, ValueDependence,
};
use asl_core::line1d::{dist_collisions, line_info_report, line_mixed_policy_eval};
use asl_core::mixed_policy::{build_mixed_policy, evaluate_tasks, sample_tasks, TaskSample};
use asl_core::stats::spearman;
use asl_core::verify::reference_comparison;
use asl_core::{
    baselines, compute_oracle, sample_library, train_actor, ActorConfig, Analyzer, BaselineKind,
    CubeEnv, LineConfig, LinePhi, RepresentationSpec, RolloutConfig, TrainReport,
};
use rayon::prelude::*;
use serde::Serialize;

const EXACT_TOL: f64 = 1e-12;
const CHAIN_TOL: f64 = 1e-9;
const PINSKER_TOL: f64 = 1e-9;
const BOUND_TOL: f64 = 1e-7;
const CONVERGENCE_TOL: f64 = 1e-5;
const IDENTITY_TOL: f64 = 1e-8;
const REFERENCE_TOL: f64 = 1e-10;
const LINE_MC_TOL: f64 = 0.03;
const LIBRARY_SIZE: usize = 2000;
const ACTOR_LIBRARY_SPECS: usize = 50;
const SEED: u64 = 0;
const LN2: f64 = std::f64::consts::LN_2;

struct Suite {
    failed: usize,
    total: usize,
}

impl Suite {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.total += 1;
        if !pass {
            self.failed += 1;
        }
        println!("{} {name:<26} {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

#[derive(Serialize)]
struct Row {
    id: String,
    analysis: InfoAnalysis,
    chain_residual: f64,
    value_dependence: ValueDependence,
    success_rate: f64,
}

fn evaluate(
    spec: &RepresentationSpec,
    analyzer: &Analyzer<'_>,
    rollout: &RolloutConfig,
    tasks: &TaskSample,
) -> Row {
    let z = analyzer.rep_ids(spec).unwrap();
    let analysis = analyze_joint(&analyzer.joint, &z).unwrap();
    let table =
        build_mixed_policy(spec, analyzer.env, analyzer.oracle, &analyzer.features, rollout.support).unwrap();
    Row {
        id: spec.id.clone(),
        chain_residual: verify_exact_decomposition(&analysis),
        value_dependence: value_functional_dependence(&analyzer.joint, &z, analysis.report.delta_v),
        success_rate: evaluate_tasks(rollout, analyzer.env, &table, tasks).unwrap().success_rate,
        analysis,
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn main() -> ExitCode {
    let mut suite = Suite { failed: 0, total: 0 };

    // Environment counts.
    let t = Instant::now();
    let env = CubeEnv::new(4).unwrap();
    let counts = (env.num_states(), env.num_goals(), env.pairs().len());
    let elapsed = t.elapsed();
    suite.check(
        "env_counts",
        counts == (4352, 32, 120_960) && elapsed < Duration::from_secs(1),
        format!("states/goals/pairs {counts:?} in {}", secs(elapsed)),
    );

    // Exact zeros of the baselines.
    let t = Instant::now();
    let oracle = compute_oracle(&env);
    let analyzer = Analyzer::new(&env, &oracle).unwrap();
    let base = baselines();
    let base_reports: Vec<_> = base.iter().map(|s| analyzer.analyze(s).unwrap().report).collect();
    let elapsed = t.elapsed();
    let [full, signs, value_only, distances] = [0, 1, 2, 3].map(|i| base_reports[i]);
    let zeros = [full.delta_a, full.delta_v, value_only.delta_v, distances.delta_v];
    let worst = zeros.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    suite.check(
        "baseline_exact_zeros",
        worst <= EXACT_TOL && elapsed < Duration::from_secs(30),
        format!("largest of dA(full), dV(full), dV(value_only), dV(distances) = {worst:.1e} in {}", secs(elapsed)),
    );

    // Baseline magnitudes, nats with bits alongside.
    let intervals = [
        ("dA(signs)", signs.delta_a, 0.0, 0.01),
        ("dV(signs)", signs.delta_v, 0.5, 1.5),
        ("dA(value_only)", value_only.delta_a, 0.15, 0.30),
        ("dA(distances)", distances.delta_a, 0.05, 0.12),
    ];
    let ok = intervals.iter().all(|&(_, x, lo, hi)| (lo..=hi).contains(&x));
    let detail = intervals
        .iter()
        .map(|&(name, x, _, _)| format!("{name} {x:.6} nats / {:.6} bits", x / LN2))
        .collect::<Vec<_>>()
        .join(", ");
    suite.check("baseline_intervals", ok, detail);

    // One pass over the library feeds the chain rule, value dependence,
    // control ordering and the correlation summary.
    let t = Instant::now();
    let library = sample_library(LIBRARY_SIZE, SEED).unwrap();
    let rollout = RolloutConfig { seed: SEED, ..RolloutConfig::default() };
    let tasks = sample_tasks(&rollout, &env, &oracle).unwrap();
    let base_rows: Vec<Row> = base.par_iter().map(|s| evaluate(s, &analyzer, &rollout, &tasks)).collect();
    let base_elapsed = t.elapsed();
    let lib_rows: Vec<Row> = library.par_iter().map(|s| evaluate(s, &analyzer, &rollout, &tasks)).collect();
    let elapsed = t.elapsed();
    let all_rows = || base_rows.iter().chain(&lib_rows);

    let worst = all_rows().map(|r| r.chain_residual).fold(0.0, f64::max);
    suite.check(
        "chain_rule",
        worst < CHAIN_TOL && elapsed < Duration::from_secs(300),
        format!("worst residual {worst:.1e} over {} specs in {}", base_rows.len() + lib_rows.len(), secs(elapsed)),
    );

    let checked = all_rows().filter(|r| r.value_dependence == ValueDependence::Holds).count();
    let violated = all_rows().filter(|r| r.value_dependence == ValueDependence::Violated).count();
    suite.check(
        "value_functional_dependence",
        violated == 0 && checked >= 3,
        format!("{checked} value-sufficient specs, {violated} with mixed values in an (s,z) class"),
    );

    // Pinsker lower bound for the singleton action events.
    let pinsker = pinsker_lower_bound(&analyzer.joint).unwrap();
    let ok = pinsker.per_action.iter().all(|&b| b > 0.0 && b <= pinsker.i_ag_sv + PINSKER_TOL);
    suite.check(
        "pinsker",
        ok,
        format!(
            "per-action bounds {:?} against I(A;G|S,V) {:.6}",
            pinsker.per_action.map(|b| (b * 1e6).round() / 1e6),
            pinsker.i_ag_sv
        ),
    );

    // Actor training on the baselines and the first library specs.
    let actor_specs: Vec<&RepresentationSpec> =
        base.iter().chain(library.iter().take(ACTOR_LIBRARY_SPECS)).collect();
    let reports: Vec<TrainReport> = actor_specs
        .par_iter()
        .map(|s| train_actor(&analyzer.joint, &analyzer.rep_ids(s).unwrap(), &ActorConfig::default()).unwrap())
        .collect();
    let violation = reports.iter().map(|r| r.max_bound_violation).fold(f64::NEG_INFINITY, f64::max);
    let gap = reports.iter().map(|r| (r.excess - r.delta_a).abs()).fold(0.0, f64::max);
    let unconverged = reports.iter().filter(|r| !r.converged).count();
    suite.check(
        "actor_bound",
        violation <= BOUND_TOL && gap < CONVERGENCE_TOL && unconverged == 0,
        format!(
            "{} actors: worst dA - (NLL - H(A|S,G)) {violation:.1e}, worst |excess - dA| {gap:.1e}, {unconverged} unconverged",
            reports.len()
        ),
    );
    let identity = reports
        .iter()
        .map(|r| r.max_loss_identity_residual + r.max_risk_identity_residual)
        .fold(0.0, f64::max);
    suite.check(
        "actor_identity",
        identity < IDENTITY_TOL,
        format!("worst |NLL - H(A|S,G) - (modeling error + dA)| {identity:.1e} over every iterate"),
    );

    // Independent forward-search implementation on the 2x2 grid.
    let small = CubeEnv::new(2).unwrap();
    let mut specs = baselines();
    specs.extend(sample_library(20, SEED).unwrap());
    let (mismatches, gap) = reference_comparison(&small, &specs).unwrap();
    suite.check(
        "reference_equivalence",
        mismatches == 0 && gap <= REFERENCE_TOL,
        format!("{mismatches} distance mismatches, worst entropy gap {gap:.1e} over {} specs", specs.len()),
    );

    let success = |k: BaselineKind| base_rows[k as usize].success_rate;
    let (sf, ss, sv, sd) = (
        success(BaselineKind::Full),
        success(BaselineKind::Signs),
        success(BaselineKind::ValueOnly),
        success(BaselineKind::Distances),
    );
    suite.check(
        "control_ordering",
        sf >= 0.99 && sf - sv >= 0.15 && ss >= sd && sd >= sv && base_elapsed < Duration::from_secs(120),
        format!("full {sf:.4}, signs {ss:.4}, distances {sd:.4}, value_only {sv:.4} in {}", secs(base_elapsed)),
    );

    let succ: Vec<f64> = lib_rows.iter().map(|r| r.success_rate).collect();
    let neg = |f: fn(&Row) -> f64| lib_rows.iter().map(|r| -f(r)).collect::<Vec<_>>();
    let rho_a = spearman(&succ, &neg(|r| r.analysis.report.delta_a));
    let rho_v = spearman(&succ, &neg(|r| r.analysis.report.delta_v));
    let near: Vec<&Row> = lib_rows.iter().filter(|r| r.analysis.report.delta_v < 0.2).collect();
    let rho_w = spearman(
        &near.iter().map(|r| r.success_rate).collect::<Vec<_>>(),
        &near.iter().map(|r| r.analysis.report.i_az_sv).collect::<Vec<_>>(),
    );
    let ok = match (rho_a, rho_v, rho_w) {
        (Some(a), Some(v), Some(w)) => a.abs() > v.abs() && w > 0.0,
        _ => false,
    };
    suite.check(
        "library_correlation",
        ok,
        format!(
            "rho(success,-dA) {rho_a:.4?}, rho(success,-dV) {rho_v:.4?}, rho(success,I(A;Z|S,V)) {rho_w:.4?} over {} specs with dV < 0.2",
            near.len()
        ),
    );

    // Integer line.
    let line = LineConfig::default();
    let collisions = dist_collisions(&line);
    let sign = line_info_report(&line, LinePhi::Sign).unwrap().report;
    let dist = line_info_report(&line, LinePhi::Dist).unwrap().report;
    let sign_eval = line_mixed_policy_eval(&line, LinePhi::Sign).unwrap();
    let dist_eval = line_mixed_policy_eval(&line, LinePhi::Dist).unwrap();
    // Pairs farther apart than the horizon cannot be solved by any policy.
    let sign_success =
        sign_eval.iter().filter(|c| c.distance <= line.horizon).all(|c| c.success_rate == 1.0);
    let d1 = dist_eval.iter().find(|c| c.distance == 1).unwrap();
    let mc_gap = (d1.success_rate - d1.exact_success_rate).abs();
    suite.check(
        "line_example",
        collisions.len() == line.num_states() - 2
            && dist.delta_v == 0.0
            && dist.i_az_sv == 0.0
            && sign.delta_a == 0.0
            && sign_success
            && mc_gap <= LINE_MC_TOL,
        format!(
            "{} collisions over {} interior states, dV(dist) {}, I(A;Z|S,V)(dist) {}, dA(sign) {}, sign success 1 up to distance {}: {sign_success}, dist d=1 success {:.4} vs exact {:.4}",
            collisions.len(),
            line.num_states() - 2,
            dist.delta_v,
            dist.i_az_sv,
            sign.delta_a,
            line.horizon,
            d1.success_rate,
            d1.exact_success_rate
        ),
    );

    // Rerun a slice of the pipeline from scratch and compare serialized output.
    let first = serde_json::to_string(&(&base_rows, &lib_rows[..40])).unwrap();
    let env2 = CubeEnv::new(4).unwrap();
    let oracle2 = compute_oracle(&env2);
    let analyzer2 = Analyzer::new(&env2, &oracle2).unwrap();
    let tasks2 = sample_tasks(&rollout, &env2, &oracle2).unwrap();
    let library2 = sample_library(40, SEED).unwrap();
    let base2: Vec<Row> = baselines().iter().map(|s| evaluate(s, &analyzer2, &rollout, &tasks2)).collect();
    let lib2: Vec<Row> = library2.iter().map(|s| evaluate(s, &analyzer2, &rollout, &tasks2)).collect();
    let second = serde_json::to_string(&(&base2, &lib2[..])).unwrap();
    suite.check(
        "determinism",
        first == second,
        format!("{} bytes of serialized metrics, sequential rerun against parallel run", first.len()),
    );

    println!("{} of {} criteria passed", suite.total - suite.failed, suite.total);
    if suite.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
