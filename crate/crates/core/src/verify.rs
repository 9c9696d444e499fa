//! Self-checks of the whole pipeline, reported as named pass/fail results.

use serde::{Deserialize, Serialize};

use crate::actor_lab::{train_actor, ActorConfig};
use crate::cube_env::{CubeEnv, GoalIndex, StateIndex};
use crate::error::Result;
use crate::info_metrics::{
    min_quantity, pinsker_lower_bound, route_disagreement, value_functional_dependence,
    verify_exact_decomposition, Analyzer, InfoReport,
};
use crate::line1d::{dist_collisions, line_info_report, LineConfig, LinePhi};
use crate::oracle::{compute_oracle, OracleTables};
use crate::reference::{forward_distance, ReferenceInfo, ReferenceJoint};
use crate::rep_library::{baseline, baselines, sample_library, BaselineKind, RepresentationSpec};

pub const EXACT_TOL: f64 = 1e-12;
pub const IDENTITY_TOL: f64 = 1e-9;
pub const REFERENCE_TOL: f64 = 1e-10;
pub const ACTOR_GAP_TOL: f64 = 1e-5;

/// Deliberate corruption applied before checking, so that tests can confirm
/// the checks notice it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Adds one step to the distance of the first filtered pair.
    Distance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub grid_size: u8,
    pub library_size: usize,
    pub seed: u64,
    /// Actors are trained for this many of the checked specs, baselines
    /// first.
    pub actor_specs: usize,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { grid_size: 4, library_size: 50, seed: 0, actor_specs: 8, fault: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn at_most(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Self { name: name.into(), passed: value <= tolerance, value, tolerance, detail }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub grid_size: u8,
    pub specs_checked: usize,
    pub fault: Option<Fault>,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Closed-form `(states, goals, filtered pairs)` for an `n x n` grid.
pub fn expected_counts(n: u8) -> (usize, usize, usize) {
    let c = (n as usize).pow(2);
    let triples = c * (c - 1) * (c - 2);
    (c * c * (c + 1), 2 * c, 2 * c * triples + 4 * triples)
}

fn reference_gap(fast: &InfoReport, slow: &ReferenceInfo) -> f64 {
    [
        fast.delta_a - slow.delta_a,
        fast.delta_v - slow.delta_v,
        fast.i_az_sv - slow.i_az_sv,
        fast.i_ag_sv - slow.i_ag_sv,
        fast.i_av_sz - slow.i_av_sz,
        fast.h_a_sg - slow.h_a_sg,
        fast.h_a_sz - slow.h_a_sz,
        fast.h_v_sz - slow.h_v_sz,
        fast.h_a_sv - slow.h_a_sv,
        fast.h_a_svz - slow.h_a_svz,
    ]
    .iter()
    .map(|d| d.abs())
    .fold(0.0, f64::max)
}

/// Compares the fast oracle and information quantities with the reference
/// implementations on `env`; returns `(distance mismatches, worst info gap)`.
pub fn reference_comparison(env: &CubeEnv, specs: &[RepresentationSpec]) -> Result<(usize, f64)> {
    let oracle = compute_oracle(env);
    let n = env.grid_size();
    let mut mismatches = 0;
    for (si, s) in env.states().iter().enumerate() {
        for (gi, g) in env.goals().iter().enumerate() {
            let fast = oracle.dist(StateIndex(si as u32), GoalIndex(gi as u32)).map(u32::from);
            mismatches += usize::from(fast != forward_distance(*s, g, n));
        }
    }
    let analyzer = Analyzer::new(env, &oracle)?;
    let mut worst: f64 = 0.0;
    for spec in specs {
        let fast = analyzer.report(spec)?;
        let slow = ReferenceJoint::new(env, spec)?.info();
        worst = worst.max(reference_gap(&fast, &slow));
    }
    Ok((mismatches, worst))
}

fn apply_fault(fault: Option<Fault>, env: &CubeEnv, oracle: &mut OracleTables) {
    if let Some(Fault::Distance) = fault {
        if let Some((s, g)) = env.pairs().iter().next() {
            let d = oracle.raw_dist(s, g);
            oracle.corrupt_distance(s, g, d + 1);
        }
    }
}

/// Runs every check on an `opts.grid_size` grid.
pub fn run_verification(opts: &VerifyOptions) -> Result<VerifyReport> {
    let env = CubeEnv::new(opts.grid_size)?;
    let mut oracle = compute_oracle(&env);
    apply_fault(opts.fault, &env, &mut oracle);
    let mut checks = Vec::new();

    let expected = expected_counts(opts.grid_size);
    let got = (env.num_states(), env.num_goals(), env.pairs().len());
    checks.push(CheckResult {
        name: "env_counts".into(),
        passed: got == expected,
        value: (got != expected) as u8 as f64,
        tolerance: 0.0,
        detail: format!("states/goals/pairs {got:?}, expected {expected:?}"),
    });

    let violations = oracle.bellman_violations(&env) + oracle.unreachable_pairs(&env);
    checks.push(CheckResult::at_most(
        "oracle_bellman",
        violations as f64,
        0.0,
        format!("{violations} entries break the optimality equations or are unreachable"),
    ));

    let small = CubeEnv::new(2)?;
    let mut small_specs = baselines();
    small_specs.extend(sample_library(20, opts.seed)?);
    let (mismatches, gap) = reference_comparison(&small, &small_specs)?;
    checks.push(CheckResult::at_most(
        "reference_distances",
        mismatches as f64,
        0.0,
        format!("{mismatches} distance mismatches against forward search on the 2x2 grid"),
    ));
    checks.push(CheckResult::at_most(
        "reference_information",
        gap,
        REFERENCE_TOL,
        format!("worst gap over {} specs on the 2x2 grid", small_specs.len()),
    ));

    let analyzer = Analyzer::new(&env, &oracle)?;
    let zero_terms = [
        (BaselineKind::Full, true),
        (BaselineKind::Full, false),
        (BaselineKind::ValueOnly, false),
        (BaselineKind::Distances, false),
    ];
    let mut worst_zero: f64 = 0.0;
    for (kind, action) in zero_terms {
        let r = analyzer.report(&baseline(kind))?;
        worst_zero = worst_zero.max(if action { r.delta_a.abs() } else { r.delta_v.abs() });
    }
    checks.push(CheckResult::at_most(
        "baseline_exact_zeros",
        worst_zero,
        EXACT_TOL,
        "dA(full), dV(full), dV(value_only), dV(distances)".into(),
    ));

    let mut specs = baselines();
    specs.extend(sample_library(opts.library_size, opts.seed)?);
    let mut chain: f64 = 0.0;
    let mut routes: f64 = 0.0;
    let mut negative: f64 = 0.0;
    let mut dependence_failures = 0;
    for spec in &specs {
        let z = analyzer.rep_ids(spec)?;
        let a = crate::info_metrics::analyze_joint(&analyzer.joint, &z)?;
        chain = chain.max(verify_exact_decomposition(&a));
        routes = routes.max(route_disagreement(&a));
        negative = negative.min(min_quantity(&a));
        if !value_functional_dependence(&analyzer.joint, &z, a.report.delta_v).passed() {
            dependence_failures += 1;
        }
    }
    checks.push(CheckResult::at_most(
        "chain_rule",
        chain,
        IDENTITY_TOL,
        format!("worst residual over {} specs", specs.len()),
    ));
    checks.push(CheckResult::at_most(
        "route_agreement",
        routes,
        IDENTITY_TOL,
        "entropy differences against expected KL divergences".into(),
    ));
    checks.push(CheckResult::at_most(
        "non_negativity",
        -negative,
        EXACT_TOL,
        "most negative entropy or information term".into(),
    ));
    checks.push(CheckResult::at_most(
        "value_functional_dependence",
        dependence_failures as f64,
        0.0,
        "specs with zero value information whose classes mix values".into(),
    ));

    let mut identity: f64 = 0.0;
    let mut violation = f64::NEG_INFINITY;
    let mut convergence: f64 = 0.0;
    for spec in specs.iter().take(opts.actor_specs) {
        let z = analyzer.rep_ids(spec)?;
        let r = train_actor(&analyzer.joint, &z, &ActorConfig::default())?;
        identity = identity.max(r.max_loss_identity_residual).max(r.max_risk_identity_residual);
        violation = violation.max(r.max_bound_violation);
        convergence = convergence.max(if r.converged { (r.excess - r.delta_a).abs() } else { f64::INFINITY });
    }
    let trained = opts.actor_specs.min(specs.len());
    checks.push(CheckResult::at_most(
        "actor_identities",
        identity,
        IDENTITY_TOL,
        format!("loss and risk identities at every iterate of {trained} actors"),
    ));
    checks.push(CheckResult::at_most(
        "actor_lower_bound",
        violation,
        IDENTITY_TOL,
        "largest dA - (loss - H(A|S,G)) over iterates".into(),
    ));
    checks.push(CheckResult::at_most(
        "actor_convergence",
        convergence,
        ACTOR_GAP_TOL,
        "largest |excess - dA| at convergence".into(),
    ));

    let line = LineConfig::default();
    let sign = line_info_report(&line, LinePhi::Sign)?.report;
    let dist = line_info_report(&line, LinePhi::Dist)?.report;
    let collisions = dist_collisions(&line).len();
    let line_worst = sign.delta_a.abs().max(dist.delta_v.abs()).max(dist.i_az_sv.abs());
    checks.push(CheckResult {
        name: "line_example".into(),
        passed: line_worst <= EXACT_TOL
            && dist.delta_a > 0.0
            && collisions == line.num_states() - 2,
        value: line_worst,
        tolerance: EXACT_TOL,
        detail: format!(
            "dA(sign) {}, dV(dist) {}, I(A;Z|S,V)(dist) {}, {collisions} collisions",
            sign.delta_a, dist.delta_v, dist.i_az_sv
        ),
    });

    let pinsker = pinsker_lower_bound(&analyzer.joint)?;
    let slack = pinsker.per_action.iter().map(|b| b - pinsker.i_ag_sv).fold(f64::MIN, f64::max);
    checks.push(CheckResult {
        name: "pinsker".into(),
        passed: pinsker.bound > 0.0 && slack <= IDENTITY_TOL,
        value: slack,
        tolerance: IDENTITY_TOL,
        detail: format!("largest bound {:.6} against I(A;G|S,V) {:.6}", pinsker.bound, pinsker.i_ag_sv),
    });

    Ok(VerifyReport {
        grid_size: opts.grid_size,
        specs_checked: specs.len(),
        fault: opts.fault,
        checks,
    })
}
