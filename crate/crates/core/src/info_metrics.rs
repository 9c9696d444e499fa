//! Exact information quantities under the uniform law on filtered pairs.
//!
//! Everything is computed by grouping the pairs of each state: by goal (the
//! pairs themselves), by representation value `z`, by value level `v`, and by
//! `(v, z)`. Entropies are in nats with `0 ln 0 = 0`.
//!
//! Two independent routes are provided. The entropy route
//! ([`InfoReport`]) differences grouped conditional entropies. The KL route
//! ([`KlRoute`]) averages pointwise KL divergences between nested group
//! laws. They agree only through the chain rule, which is what the
//! decomposition check exercises.

use serde::{Deserialize, Serialize};

use crate::cube_env::{CubeEnv, Goal, GoalIndex, StateIndex, NUM_ACTIONS};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::oracle::OracleTables;
use crate::rep_library::{RepValue, RepresentationSpec};

/// Tolerance below which a quantity counts as zero in sufficiency checks.
pub const ZERO_TOL: f64 = 1e-9;

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// `KL(p || q)` in nats; infinite when `q` misses mass of `p`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| if b > 0.0 { a * (a / b).ln() } else { f64::INFINITY })
        .sum()
}

fn log_law<const K: usize>(p: &[f64; K]) -> [f64; K] {
    std::array::from_fn(|a| if p[a] > 0.0 { p[a].ln() } else { f64::NEG_INFINITY })
}

/// `sum_a p_a * log_q_a` over the support of `p`.
fn cross<const K: usize>(p: &[f64; K], log_q: &[f64; K]) -> f64 {
    let mut acc = 0.0;
    for a in 0..K {
        if p[a] > 0.0 {
            acc += p[a] * log_q[a];
        }
    }
    acc
}

/// Per-pair optimal-action laws and value levels, grouped by state. This is
/// the joint table of `(S, G, A, V)` under the uniform pair law.
#[derive(Clone, Debug)]
pub struct JointTable<const K: usize> {
    offsets: Vec<usize>,
    action: Vec<[f64; K]>,
    log_action: Vec<[f64; K]>,
    value: Vec<i64>,
    by_g: Vec<Groups<K>>,
    by_v: Vec<Groups<K>>,
}

impl<const K: usize> JointTable<K> {
    /// Builds from per-state lists of `(action law, value level)`.
    pub fn from_states(states: Vec<Vec<([f64; K], i64)>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(states.len() + 1);
        let mut action = Vec::new();
        let mut value = Vec::new();
        offsets.push(0);
        for rows in states {
            for (p, v) in rows {
                action.push(p);
                value.push(v);
            }
            offsets.push(action.len());
        }
        if action.is_empty() {
            return Err(Error::EmptyPairs);
        }
        let log_action: Vec<[f64; K]> = action.iter().map(log_law).collect();
        let mut by_g = Vec::with_capacity(offsets.len() - 1);
        let mut by_v = Vec::with_capacity(offsets.len() - 1);
        for w in offsets.windows(2) {
            let r = w[0]..w[1];
            by_g.push(Groups::singles(&action[r.clone()], &log_action[r.clone()]));
            by_v.push(Groups::build(&value[r.clone()], &action[r.clone()], &log_action[r]));
        }
        Ok(Self { offsets, action, log_action, value, by_g, by_v })
    }

    pub fn num_pairs(&self) -> usize {
        self.action.len()
    }

    pub fn num_states(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn state_range(&self, s: usize) -> std::ops::Range<usize> {
        self.offsets[s]..self.offsets[s + 1]
    }

    pub fn action(&self, pair: usize) -> &[f64; K] {
        &self.action[pair]
    }

    pub fn value(&self, pair: usize) -> i64 {
        self.value[pair]
    }
}

/// Joint table of the Discrete Cube over the filtered pairs, in
/// [`crate::cube_env::PairSet`] order.
pub fn cube_joint_table(env: &CubeEnv, oracle: &OracleTables) -> Result<JointTable<NUM_ACTIONS>> {
    let pairs = env.pairs();
    let mut states = Vec::with_capacity(env.num_states());
    for s in 0..env.num_states() {
        let s = StateIndex(s as u32);
        let mut rows = Vec::with_capacity(pairs.goals_of(s).len());
        for &g in pairs.goals_of(s) {
            // Filtered pairs never include success states; a success pair here
            // is a filter bug, surfaced as an error.
            let p = oracle.optimal_policy(s, g)?;
            rows.push((p, oracle.value(s, g)? as i64));
        }
        states.push(rows);
    }
    JointTable::from_states(states)
}

/// Entropy-route quantities, all in nats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    /// `I(A;G|S,Z) = H(A|S,Z) - H(A|S,G)`.
    pub delta_a: f64,
    /// `I(V;G|S,Z) = H(V|S,Z)`.
    pub delta_v: f64,
    pub i_az_sv: f64,
    pub i_ag_sv: f64,
    pub i_av_sz: f64,
    pub h_a_sg: f64,
    pub h_a_sz: f64,
    pub h_v_sz: f64,
    pub h_a_sv: f64,
    pub h_a_svz: f64,
}

/// KL-route quantities: each is an expectation of a pointwise divergence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlRoute {
    /// `E[KL(P(A|s,g) || P(A|s,z))]`.
    pub delta_a: f64,
    /// `E[-ln P(v|s,z)]`.
    pub delta_v: f64,
    /// `E[KL(P(A|s,v,z) || P(A|s,v))]`.
    pub i_az_sv: f64,
    /// `E[KL(P(A|s,g) || P(A|s,v))]`.
    pub i_ag_sv: f64,
    /// `E[KL(P(A|s,v,z) || P(A|s,z))]`.
    pub i_av_sz: f64,
}

/// Both routes for one representation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoAnalysis {
    pub report: InfoReport,
    pub kl: KlRoute,
}

/// Group ids of `keys` (dense, in order of first appearance).
fn group_ids<T: PartialEq + Copy>(keys: &[T], out: &mut Vec<usize>) -> usize {
    let mut reps: Vec<T> = Vec::new();
    out.clear();
    for k in keys {
        let id = match reps.iter().position(|r| r == k) {
            Some(i) => i,
            None => {
                reps.push(*k);
                reps.len() - 1
            }
        };
        out.push(id);
    }
    reps.len()
}

#[derive(Clone, Debug)]
struct Groups<const K: usize> {
    id: Vec<usize>,
    count: Vec<f64>,
    mean: Vec<[f64; K]>,
    log_mean: Vec<[f64; K]>,
    entropy: Vec<f64>,
}

impl<const K: usize> Groups<K> {
        fn build<T: PartialEq + Copy>(keys: &[T], laws: &[[f64; K]], logs: &[[f64; K]]) -> Self {
        let mut id = Vec::new();
        let n = group_ids(keys, &mut id);
        let mut count = vec![0.0; n];
        let mut mean = vec![[0.0; K]; n];
        for (i, &g) in id.iter().enumerate() {
            count[g] += 1.0;
            for a in 0..K {
                mean[g][a] += laws[i][a];
            }
        }
        for g in 0..n {
            for a in 0..K {
                mean[g][a] /= count[g];
            }
        }
        // Singleton groups reuse the pair's own logs.
        let mut log_mean: Vec<[f64; K]> = Vec::with_capacity(n);
        let mut first = vec![usize::MAX; n];
        for (i, &g) in id.iter().enumerate() {
            if first[g] == usize::MAX {
                first[g] = i;
            }
        }
        for g in 0..n {
            log_mean.push(if count[g] == 1.0 { logs[first[g]] } else { log_law(&mean[g]) });
        }
        let entropy = mean.iter().zip(&log_mean).map(|(m, l)| -cross(m, l)).collect();
        Self { id, count, mean, log_mean, entropy }
    }

    /// Singleton groups, one per pair.
    fn singles(laws: &[[f64; K]], logs: &[[f64; K]]) -> Self {
        Self {
            id: (0..laws.len()).collect(),
            count: vec![1.0; laws.len()],
            mean: laws.to_vec(),
            log_mean: logs.to_vec(),
            entropy: laws.iter().zip(logs).map(|(m, l)| -cross(m, l)).collect(),
        }
    }

    fn weighted_entropy(&self) -> f64 {
        self.count.iter().zip(&self.entropy).map(|(&c, h)| c * h).sum()
    }

    /// `KL(p || mean of group g)` given `p` and its logs.
    fn kl_from(&self, p: &[f64; K], log_p: &[f64; K], g: usize) -> f64 {
        cross(p, log_p) - cross(p, &self.log_mean[g])
    }
}

/// Weighted entropy of coarse groups minus that of the finer groups nested in
/// them; each coarse group contributes exactly zero when it is not split.
fn nested_gap<const K: usize>(coarse: &Groups<K>, fine: &Groups<K>) -> f64 {
    let mut per_group = vec![0.0; coarse.count.len()];
    let mut seen = vec![false; fine.count.len()];
    for (i, &f) in fine.id.iter().enumerate() {
        if !seen[f] {
            seen[f] = true;
            per_group[coarse.id[i]] -= fine.count[f] * fine.entropy[f];
        }
    }
    per_group
        .iter()
        .enumerate()
        .map(|(g, &fine)| coarse.count[g] * coarse.entropy[g] + fine)
        .sum()
}

/// Both information routes for representation ids `z` (one per pair, equal
/// ids mean equal representation values).
pub fn analyze_joint<const K: usize>(joint: &JointTable<K>, z: &[u32]) -> Result<InfoAnalysis> {
    if joint.num_pairs() == 0 {
        return Err(Error::EmptyPairs);
    }
    assert_eq!(z.len(), joint.num_pairs(), "one representation id per pair");
    let total = joint.num_pairs() as f64;

    let mut h_sg = CompensatedSum::default();
    let mut h_sz = CompensatedSum::default();
    let mut h_sv = CompensatedSum::default();
    let mut h_svz = CompensatedSum::default();
    let mut h_v_sz = CompensatedSum::default();
    let mut gap_a = CompensatedSum::default();
    let mut gap_ag_sv = CompensatedSum::default();
    let mut gap_az_sv = CompensatedSum::default();
    let mut gap_av_sz = CompensatedSum::default();

    let mut kl_a = CompensatedSum::default();
    let mut kl_v = CompensatedSum::default();
    let mut kl_az_sv = CompensatedSum::default();
    let mut kl_ag_sv = CompensatedSum::default();
    let mut kl_av_sz = CompensatedSum::default();

    for s in 0..joint.num_states() {
        let r = joint.state_range(s);
        if r.is_empty() {
            continue;
        }
        let laws = &joint.action[r.clone()];
        let logs = &joint.log_action[r.clone()];
        let zs = &z[r.clone()];
        let vs = &joint.value[r.clone()];
        let vz: Vec<(i64, u32)> = vs.iter().copied().zip(zs.iter().copied()).collect();

        let by_z = Groups::build(zs, laws, logs);
        let by_v = &joint.by_v[s];
        let by_vz = Groups::build(&vz, laws, logs);
        let by_g = &joint.by_g[s];

        h_sg.add(by_g.weighted_entropy());
        h_sz.add(by_z.weighted_entropy());
        h_sv.add(by_v.weighted_entropy());
        h_svz.add(by_vz.weighted_entropy());

        gap_a.add(nested_gap(&by_z, by_g));
        gap_ag_sv.add(nested_gap(by_v, by_g));
        gap_az_sv.add(nested_gap(by_v, &by_vz));
        gap_av_sz.add(nested_gap(&by_z, &by_vz));

        // H(V | S, Z): value histogram inside each z group.
        let mut hv = 0.0;
        let mut seen = vec![false; by_vz.count.len()];
        for i in 0..laws.len() {
            let f = by_vz.id[i];
            if !seen[f] {
                seen[f] = true;
                let c = by_vz.count[f];
                hv -= c * (c / by_z.count[by_z.id[i]]).ln();
            }
        }
        h_v_sz.add(hv);

        let mut kl = [0.0; 5];
        for i in 0..laws.len() {
            let (gz, gv, gvz) = (by_z.id[i], by_v.id[i], by_vz.id[i]);
            let (mvz, log_mvz) = (&by_vz.mean[gvz], &by_vz.log_mean[gvz]);
            kl[0] += by_z.kl_from(&laws[i], &logs[i], gz);
            kl[1] += by_v.kl_from(&laws[i], &logs[i], gv);
            kl[2] += by_v.kl_from(mvz, log_mvz, gv);
            kl[3] += by_z.kl_from(mvz, log_mvz, gz);
            kl[4] -= (by_vz.count[gvz] / by_z.count[gz]).ln();
        }
        kl_a.add(kl[0]);
        kl_ag_sv.add(kl[1]);
        kl_az_sv.add(kl[2]);
        kl_av_sz.add(kl[3]);
        kl_v.add(kl[4]);
    }

    let avg = |x: CompensatedSum| x.value() / total;
    let report = InfoReport {
        delta_a: avg(gap_a),
        delta_v: avg(h_v_sz),
        i_az_sv: avg(gap_az_sv),
        i_ag_sv: avg(gap_ag_sv),
        i_av_sz: avg(gap_av_sz),
        h_a_sg: avg(h_sg),
        h_a_sz: avg(h_sz),
        h_v_sz: avg(h_v_sz),
        h_a_sv: avg(h_sv),
        h_a_svz: avg(h_svz),
    };
    let kl = KlRoute {
        delta_a: avg(kl_a),
        delta_v: avg(kl_v),
        i_az_sv: avg(kl_az_sv),
        i_ag_sv: avg(kl_ag_sv),
        i_av_sz: avg(kl_av_sz),
    };
    Ok(InfoAnalysis { report, kl })
}

/// Shared, read-only inputs for evaluating many representations.
#[derive(Debug)]
pub struct Analyzer<'a> {
    pub env: &'a CubeEnv,
    pub oracle: &'a OracleTables,
    pub features: FeatureTable,
    pub joint: JointTable<NUM_ACTIONS>,
}

impl<'a> Analyzer<'a> {
    pub fn new(env: &'a CubeEnv, oracle: &'a OracleTables) -> Result<Self> {
        Ok(Self {
            env,
            oracle,
            features: FeatureTable::new(env, oracle),
            joint: cube_joint_table(env, oracle)?,
        })
    }

    /// Representation id of every filtered pair. Ids are dense within each
    /// state and only comparable between pairs of the same state.
    pub fn rep_ids(&self, spec: &RepresentationSpec) -> Result<Vec<u32>> {
        let mut ids = Vec::with_capacity(self.joint.num_pairs());
        let mut seen: Vec<RepValue> = Vec::new();
        for s in 0..self.env.num_states() {
            let s = StateIndex(s as u32);
            seen.clear();
            for &g in self.env.pairs().goals_of(s) {
                let z = spec.encode(self.features.get(s, g)?);
                let id = match seen.iter().position(|x| *x == z) {
                    Some(i) => i,
                    None => {
                        seen.push(z);
                        seen.len() - 1
                    }
                };
                ids.push(id as u32);
            }
        }
        Ok(ids)
    }

    pub fn analyze(&self, spec: &RepresentationSpec) -> Result<InfoAnalysis> {
        analyze_joint(&self.joint, &self.rep_ids(spec)?)
    }

    pub fn report(&self, spec: &RepresentationSpec) -> Result<InfoReport> {
        Ok(self.analyze(spec)?.report)
    }
}

/// Exact [`InfoReport`] of `spec` on the filtered pairs.
pub fn info_report(spec: &RepresentationSpec, env: &CubeEnv, oracle: &OracleTables) -> Result<InfoReport> {
    Analyzer::new(env, oracle)?.report(spec)
}

/// `|ΔA - (I(A;G|S,V) - I(A;Z|S,V) + I(A;V|S,Z))|` with every term taken
/// from the KL route.
pub fn verify_exact_decomposition(a: &InfoAnalysis) -> f64 {
    let k = &a.kl;
    (k.delta_a - (k.i_ag_sv - k.i_az_sv + k.i_av_sz)).abs()
}

/// Largest disagreement between the entropy and KL routes.
pub fn route_disagreement(a: &InfoAnalysis) -> f64 {
    let (r, k) = (&a.report, &a.kl);
    [
        r.delta_a - k.delta_a,
        r.delta_v - k.delta_v,
        r.i_az_sv - k.i_az_sv,
        r.i_ag_sv - k.i_ag_sv,
        r.i_av_sz - k.i_av_sz,
    ]
    .iter()
    .map(|d| d.abs())
    .fold(0.0, f64::max)
}

/// Most negative entry among all reported quantities (0 if none negative).
pub fn min_quantity(a: &InfoAnalysis) -> f64 {
    let r = &a.report;
    [
        r.delta_a, r.delta_v, r.i_az_sv, r.i_ag_sv, r.i_av_sz, r.h_a_sg, r.h_a_sz, r.h_v_sz, r.h_a_sv,
        r.h_a_svz, a.kl.delta_a, a.kl.delta_v, a.kl.i_az_sv, a.kl.i_ag_sv, a.kl.i_av_sz,
    ]
    .into_iter()
    .fold(0.0, f64::min)
}

/// Outcome of the value-measurability check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueDependence {
    /// `ΔV` is zero and `V*` is constant on every `(s, z)` group.
    Holds,
    /// `ΔV` is zero yet some `(s, z)` group mixes values.
    Violated,
    /// `ΔV` is not zero; nothing to check.
    Skipped,
}

impl ValueDependence {
    pub fn passed(self) -> bool {
        self != ValueDependence::Violated
    }
}

/// When `ΔV < 1e-9`, checks that `V*` is a function of `(s, z)`.
pub fn value_functional_dependence<const K: usize>(
    joint: &JointTable<K>,
    z: &[u32],
    delta_v: f64,
) -> ValueDependence {
    if delta_v >= ZERO_TOL {
        return ValueDependence::Skipped;
    }
    for s in 0..joint.num_states() {
        let r = joint.state_range(s);
        let mut seen: Vec<(u32, i64)> = Vec::new();
        for i in r {
            match seen.iter().find(|(zz, _)| *zz == z[i]) {
                Some(&(_, v)) if v != joint.value[i] => return ValueDependence::Violated,
                Some(_) => {}
                None => seen.push((z[i], joint.value[i])),
            }
        }
    }
    ValueDependence::Holds
}

pub fn verify_value_functional_dependence(
    spec: &RepresentationSpec,
    analyzer: &Analyzer<'_>,
) -> Result<ValueDependence> {
    let z = analyzer.rep_ids(spec)?;
    let report = analyze_joint(&analyzer.joint, &z)?.report;
    Ok(value_functional_dependence(&analyzer.joint, &z, report.delta_v))
}

/// Result of probing a goal-only encoder for strict value sufficiency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Strictness {
    /// The encoder is injective on goals.
    Injective,
    /// Goals `g1 != g2` collide, and at `state` their optimal values differ.
    Witness { g1: GoalIndex, g2: GoalIndex, state: StateIndex, v1: i32, v2: i32 },
    /// Goals collide but share the optimal value everywhere.
    NoWitness { g1: GoalIndex, g2: GoalIndex },
}

/// For a goal-only encoder `psi`, finds two colliding goals and a state where
/// their optimal values differ. Success states of `g1` are tried first.
pub fn check_goal_only_strictness<F, Z>(psi: F, env: &CubeEnv, oracle: &OracleTables) -> Strictness
where
    F: Fn(&Goal) -> Z,
    Z: PartialEq,
{
    let codes: Vec<Z> = env.goals().iter().map(&psi).collect();
    let mut first_collision = None;
    for i in 0..codes.len() {
        for j in (i + 1)..codes.len() {
            if codes[i] != codes[j] {
                continue;
            }
            let (g1, g2) = (GoalIndex(i as u32), GoalIndex(j as u32));
            first_collision.get_or_insert((g1, g2));
            let states = (0..env.num_states()).map(|s| StateIndex(s as u32));
            let success_first = states
                .clone()
                .filter(|&s| env.is_success(s, g1))
                .chain(states.filter(|&s| !env.is_success(s, g1)));
            for s in success_first {
                if let (Ok(v1), Ok(v2)) = (oracle.value(s, g1), oracle.value(s, g2)) {
                    if v1 != v2 {
                        return Strictness::Witness { g1, g2, state: s, v1, v2 };
                    }
                }
            }
        }
    }
    match first_collision {
        None => Strictness::Injective,
        Some((g1, g2)) => Strictness::NoWitness { g1, g2 },
    }
}

/// Conditional-variance lower bound on `I(A;G|S,V)` for the singleton action
/// events `B = {a}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinskerBound {
    /// `2 E[Var(P(A=a|S,V,G) | S,V)]` per action.
    pub per_action: [f64; NUM_ACTIONS],
    /// Largest per-action bound.
    pub bound: f64,
    pub i_ag_sv: f64,
}

impl PinskerBound {
    pub fn holds(&self) -> bool {
        self.per_action.iter().all(|&b| b <= self.i_ag_sv + ZERO_TOL)
    }
}

/// Per-action variance bounds and `I(A;G|S,V)` for a joint table with `K`
/// actions. Returns `(per_action_bounds, i_ag_sv)`.
pub fn pinsker_bounds<const K: usize>(joint: &JointTable<K>) -> Result<([f64; K], f64)> {
    let total = joint.num_pairs() as f64;
    if total == 0.0 {
        return Err(Error::EmptyPairs);
    }
    let mut var = [CompensatedSum::default(); K];
    for s in 0..joint.num_states() {
        let r = joint.state_range(s);
        let laws = &joint.action[r];
        let by_v = &joint.by_v[s];
        for (i, law) in laws.iter().enumerate() {
            let m = &by_v.mean[by_v.id[i]];
            for a in 0..K {
                let d = law[a] - m[a];
                var[a].add(d * d);
            }
        }
    }
    let per_action = var.map(|v| 2.0 * v.value() / total);
    let z: Vec<u32> = vec![0; joint.num_pairs()];
    let i_ag_sv = analyze_joint(joint, &z)?.report.i_ag_sv;
    Ok((per_action, i_ag_sv))
}

/// Singleton-event bound on the Discrete Cube joint table.
pub fn pinsker_lower_bound(joint: &JointTable<NUM_ACTIONS>) -> Result<PinskerBound> {
    let (per_action, i_ag_sv) = pinsker_bounds(joint)?;
    let bound = per_action.iter().copied().fold(0.0, f64::max);
    Ok(PinskerBound { per_action, bound, i_ag_sv })
}

/// Fraction of `k`-step-apart trajectory pairs whose later value is strictly
/// higher: `1/(T-k+1) Σ_{t=0}^{T-k} 1[V_{t+k} > V_t]`, where `values` holds
/// `V_0..=V_T`.
pub fn order_consistency_ratio(values: &[f64], k: usize) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let t_len = values.len() - 1;
    if k == 0 || t_len < k {
        return Err(Error::InvalidArgument(format!(
            "step gap {k} needs 1 <= k <= T = {t_len}"
        )));
    }
    let hits = (0..=t_len - k).filter(|&t| values[t + k] > values[t]).count();
    Ok(hits as f64 / (t_len - k + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_joint() -> JointTable<2> {
        // Two states; state 0 has four goals, two value levels with opposite actions.
        JointTable::from_states(vec![
            vec![([1.0, 0.0], -1), ([0.0, 1.0], -1), ([1.0, 0.0], -2), ([0.5, 0.5], -2)],
            vec![([1.0, 0.0], -3), ([0.0, 1.0], -4)],
        ])
        .unwrap()
    }

    #[test]
    fn entropy_conventions() {
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
        assert!((entropy(&[0.5, 0.5]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).is_infinite());
    }

    #[test]
    fn identity_representation_is_sufficient() {
        let j = toy_joint();
        let z: Vec<u32> = (0..j.num_pairs() as u32).collect();
        let a = analyze_joint(&j, &z).unwrap();
        assert_eq!(a.report.delta_a, 0.0);
        assert_eq!(a.report.delta_v, 0.0);
        assert!(verify_exact_decomposition(&a) < 1e-12);
    }

    #[test]
    fn constant_representation_on_toy() {
        let j = toy_joint();
        let z = vec![0u32; j.num_pairs()];
        let a = analyze_joint(&j, &z).unwrap();
        // Hand computation, state 0: mean law (0.625, 0.375); state 1: (0.5, 0.5).
        let h0 = entropy(&[0.625, 0.375]);
        let h_sz = (4.0 * h0 + 2.0 * 2f64.ln()) / 6.0;
        let h_sg = 2f64.ln() / 6.0;
        assert!((a.report.h_a_sz - h_sz).abs() < 1e-15);
        assert!((a.report.h_a_sg - h_sg).abs() < 1e-15);
        assert!((a.report.delta_a - (h_sz - h_sg)).abs() < 1e-15);
        // H(V|S,Z): state 0 two levels of two each, state 1 two singletons.
        let hv = (4.0 * 2f64.ln() + 2.0 * 2f64.ln()) / 6.0;
        assert!((a.report.delta_v - hv).abs() < 1e-15);
        assert!(route_disagreement(&a) < 1e-12);
        assert!(verify_exact_decomposition(&a) < 1e-12);
    }

    #[test]
    fn value_coded_representation_is_value_sufficient() {
        let j = toy_joint();
        let z: Vec<u32> = (0..j.num_pairs()).map(|i| (-j.value(i)) as u32).collect();
        let a = analyze_joint(&j, &z).unwrap();
        assert_eq!(a.report.delta_v, 0.0);
        assert_eq!(a.report.i_az_sv, 0.0);
        assert_eq!(a.report.i_av_sz, 0.0);
        assert!((a.report.delta_a - a.report.i_ag_sv).abs() < 1e-15);
        assert_eq!(value_functional_dependence(&j, &z, a.report.delta_v), ValueDependence::Holds);
    }

    #[test]
    fn functional_dependence_skips_when_value_insufficient() {
        let j = toy_joint();
        let z = vec![0u32; j.num_pairs()];
        assert_eq!(value_functional_dependence(&j, &z, 0.5), ValueDependence::Skipped);
        // A zero ΔV claim with mixed groups is flagged.
        assert_eq!(value_functional_dependence(&j, &z, 0.0), ValueDependence::Violated);
    }

    #[test]
    fn pinsker_on_toy() {
        let j = toy_joint();
        let (b, i) = pinsker_bounds(&j).unwrap();
        assert!(b[0] > 0.0 && b[0] <= i);
        // Level sets of size one carry no variance.
        let single = JointTable::from_states(vec![vec![([1.0, 0.0], -1), ([0.0, 1.0], -2)]]).unwrap();
        let (b, i) = pinsker_bounds(&single).unwrap();
        assert_eq!(b, [0.0, 0.0]);
        assert_eq!(i, 0.0);
    }

    #[test]
    fn empty_joint_rejected() {
        assert!(matches!(JointTable::<2>::from_states(vec![vec![]]), Err(Error::EmptyPairs)));
    }

    #[test]
    fn order_consistency_examples() {
        assert_eq!(order_consistency_ratio(&[1.0, 2.0, 3.0, 4.0], 1).unwrap(), 1.0);
        assert_eq!(order_consistency_ratio(&[2.0; 5], 1).unwrap(), 0.0);
        assert_eq!(order_consistency_ratio(&[1.0, 0.0, 2.0], 1).unwrap(), 0.5);
        assert_eq!(order_consistency_ratio(&[1.0, 0.0, 2.0], 2).unwrap(), 1.0);
        assert!(order_consistency_ratio(&[1.0, 2.0], 2).is_err());
        assert!(order_consistency_ratio(&[], 1).is_err());
    }

    #[test]
    fn group_ids_first_appearance() {
        let mut out = Vec::new();
        let n = group_ids(&[5, 3, 5, 9, 3], &mut out);
        assert_eq!(n, 3);
        assert_eq!(out, vec![0, 1, 0, 2, 1]);
    }
}
