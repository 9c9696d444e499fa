//! Tabular goal-conditioned actors trained on the exact expected NLL.
//!
//! The actor keeps one logit vector per `(s, z)` class and is fit to the
//! optimal action laws of every pair in the class. Because the objective is
//! an exact expectation, the loss, its excess over `H(A|S,G)` and the
//! modeling error can all be evaluated exactly at every iterate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info_metrics::{analyze_joint, kl_divergence, CompensatedSum, JointTable};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActorConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once the loss decreases by less than this.
    pub tol: f64,
    /// Largest change of a single logit in one step.
    pub max_step: f64,
}

impl Default for ActorConfig {
    fn default() -> Self {
        Self { learning_rate: 1.0, max_iters: 5000, tol: 1e-10, max_step: 10.0 }
    }
}

impl ActorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        if !(self.tol >= 0.0 && self.max_step > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be non-negative".into()));
        }
        Ok(())
    }
}

/// Softmax actor over `(s, z)` classes.
#[derive(Clone, Debug)]
pub struct TabularActor<const K: usize> {
    /// Class of every pair.
    class_of: Vec<usize>,
    /// Number of pairs per class.
    weight: Vec<f64>,
    /// Mean optimal law of each class.
    target: Vec<[f64; K]>,
    logits: Vec<[f64; K]>,
}

fn log_softmax<const K: usize>(theta: &[f64; K]) -> [f64; K] {
    let m = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + theta.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
    theta.map(|t| t - lse)
}

/// `-sum_a p_a log pi_a`.
fn cross_entropy<const K: usize>(p: &[f64; K], log_pi: &[f64; K]) -> f64 {
    let mut acc = 0.0;
    for a in 0..K {
        if p[a] > 0.0 {
            acc -= p[a] * log_pi[a];
        }
    }
    acc
}

impl<const K: usize> TabularActor<K> {
    /// Uniform actor over the classes induced by ids `z` (comparable within a
    /// state).
    pub fn new(joint: &JointTable<K>, z: &[u32]) -> Result<Self> {
        if joint.num_pairs() == 0 {
            return Err(Error::EmptyPairs);
        }
        if z.len() != joint.num_pairs() {
            return Err(Error::InvalidArgument("one representation id per pair".into()));
        }
        let mut class_of = Vec::with_capacity(joint.num_pairs());
        let mut weight = Vec::new();
        let mut target: Vec<[f64; K]> = Vec::new();
        let mut local: Vec<(u32, usize)> = Vec::new();
        for s in 0..joint.num_states() {
            local.clear();
            for i in joint.state_range(s) {
                let c = match local.iter().find(|(k, _)| *k == z[i]) {
                    Some(&(_, c)) => c,
                    None => {
                        weight.push(0.0);
                        target.push([0.0; K]);
                        local.push((z[i], weight.len() - 1));
                        weight.len() - 1
                    }
                };
                weight[c] += 1.0;
                for a in 0..K {
                    target[c][a] += joint.action(i)[a];
                }
                class_of.push(c);
            }
        }
        for (t, w) in target.iter_mut().zip(&weight) {
            for x in t.iter_mut() {
                *x /= w;
            }
        }
        let logits = vec![[0.0; K]; weight.len()];
        Ok(Self { class_of, weight, target, logits })
    }

    pub fn num_classes(&self) -> usize {
        self.weight.len()
    }

    /// `log pi(. | class)`.
    pub fn log_policy(&self, class: usize) -> [f64; K] {
        log_softmax(&self.logits[class])
    }

    pub fn class_of(&self, pair: usize) -> usize {
        self.class_of[pair]
    }

    /// Expected NLL, accumulated per class from the mean targets.
    pub fn loss(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for c in 0..self.num_classes() {
            acc.add(self.weight[c] * cross_entropy(&self.target[c], &self.log_policy(c)));
        }
        acc.value() / self.class_of.len() as f64
    }

    fn row_loss(&self, c: usize, theta: &[f64; K]) -> f64 {
        cross_entropy(&self.target[c], &log_softmax(theta))
    }

    /// One preconditioned gradient step per class. A class halves its rate
    /// until its loss does not increase and keeps the reduced rate.
    fn step(&mut self, rates: &mut [f64], max_step: f64) {
        for c in 0..self.num_classes() {
            let old = self.row_loss(c, &self.logits[c]);
            let log_pi = self.log_policy(c);
            // Gradient of the class loss is w (pi - p); dividing by w pi gives
            // p / pi - 1.
            let dir: [f64; K] = std::array::from_fn(|a| {
                let ratio = if self.target[c][a] > 0.0 {
                    (self.target[c][a].ln() - log_pi[a]).exp()
                } else {
                    0.0
                };
                ratio - 1.0
            });
            let mut lr = rates[c];
            for _ in 0..60 {
                let cand: [f64; K] = std::array::from_fn(|a| {
                    self.logits[c][a] + (lr * dir[a]).clamp(-max_step, max_step)
                });
                if self.row_loss(c, &cand) <= old {
                    self.logits[c] = cand;
                    break;
                }
                lr *= 0.5;
            }
            rates[c] = lr;
        }
    }
}

/// Exact quantities of one actor, all in nats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorSnapshot {
    /// Expected NLL `L_act`.
    pub loss: f64,
    /// `E[KL(P*(.|s,g) || pi(.|s,z))]`, summed per pair.
    pub risk: f64,
    /// `E[KL(P(.|s,z) || pi(.|s,z))]`.
    pub modeling_error: f64,
}

impl ActorSnapshot {
    pub fn of<const K: usize>(actor: &TabularActor<K>, joint: &JointTable<K>) -> Self {
        let n = joint.num_pairs() as f64;
        let logs: Vec<[f64; K]> = (0..actor.num_classes()).map(|c| actor.log_policy(c)).collect();
        let pis: Vec<[f64; K]> = logs.iter().map(|l| l.map(f64::exp)).collect();
        let mut risk = CompensatedSum::default();
        for i in 0..joint.num_pairs() {
            risk.add(kl_divergence(joint.action(i), &pis[actor.class_of(i)]));
        }
        let mut me = CompensatedSum::default();
        for c in 0..actor.num_classes() {
            me.add(actor.weight[c] * kl_divergence(&actor.target[c], &pis[c]));
        }
        Self { loss: actor.loss(), risk: risk.value() / n, modeling_error: me.value() / n }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub iterations: usize,
    pub converged: bool,
    pub initial: ActorSnapshot,
    pub last: ActorSnapshot,
    /// `H(A|S,G)`.
    pub h_a_sg: f64,
    /// `I(A;G|S,Z)` of the representation.
    pub delta_a: f64,
    /// `L_act - H(A|S,G)` at the last iterate.
    pub excess: f64,
    /// Largest `|L_act - H(A|S,G) - risk|` over iterates.
    pub max_loss_identity_residual: f64,
    /// Largest `|risk - modeling_error - delta_a|` over iterates.
    pub max_risk_identity_residual: f64,
    /// Largest `delta_a - (L_act - H(A|S,G))` over iterates; never positive
    /// beyond rounding.
    pub max_bound_violation: f64,
    pub loss_trace: Vec<f64>,
}

impl TrainReport {
    /// Whether every per-iterate identity and the lower bound held within
    /// `tol`.
    pub fn checks_hold(&self, tol: f64) -> bool {
        self.max_loss_identity_residual <= tol
            && self.max_risk_identity_residual <= tol
            && self.max_bound_violation <= tol
    }
}

/// Trains a fresh uniform actor on ids `z`.
pub fn train_actor<const K: usize>(
    joint: &JointTable<K>,
    z: &[u32],
    cfg: &ActorConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    let analysis = analyze_joint(joint, z)?;
    let h_a_sg = analysis.report.h_a_sg;
    let delta_a = analysis.report.delta_a;
    let mut actor = TabularActor::new(joint, z)?;
    let mut rates = vec![cfg.learning_rate; actor.num_classes()];

    let mut max_loss_res: f64 = 0.0;
    let mut max_risk_res: f64 = 0.0;
    let mut max_violation = f64::NEG_INFINITY;
    let mut check = |snap: &ActorSnapshot| {
        max_loss_res = max_loss_res.max((snap.loss - h_a_sg - snap.risk).abs());
        max_risk_res = max_risk_res.max((snap.risk - snap.modeling_error - delta_a).abs());
        max_violation = max_violation.max(delta_a - (snap.loss - h_a_sg));
    };

    let initial = ActorSnapshot::of(&actor, joint);
    check(&initial);
    let mut last = initial;
    let mut trace = vec![initial.loss];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        actor.step(&mut rates, cfg.max_step);
        iterations += 1;
        let snap = ActorSnapshot::of(&actor, joint);
        if !snap.loss.is_finite() {
            return Err(Error::Divergence { iteration: iterations });
        }
        check(&snap);
        trace.push(snap.loss);
        let decrease = last.loss - snap.loss;
        last = snap;
        if decrease.abs() < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(TrainReport {
        iterations,
        converged,
        initial,
        last,
        h_a_sg,
        delta_a,
        excess: last.loss - h_a_sg,
        max_loss_identity_residual: max_loss_res,
        max_risk_identity_residual: max_risk_res,
        max_bound_violation: max_violation,
        loss_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (JointTable<3>, Vec<u32>) {
        let joint = JointTable::from_states(vec![
            vec![([1.0, 0.0, 0.0], -1), ([0.0, 1.0, 0.0], -1), ([0.5, 0.5, 0.0], -2)],
            vec![([0.0, 0.0, 1.0], -1), ([0.0, 0.0, 1.0], -3)],
        ])
        .unwrap();
        (joint, vec![0, 0, 1, 0, 1])
    }

    #[test]
    fn log_softmax_normalises() {
        let l = log_softmax(&[1.0, 2.0, -700.0]);
        let total: f64 = l.iter().map(|x| x.exp()).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_actor_loss_is_log_k() {
        let (joint, z) = toy();
        let actor = TabularActor::new(&joint, &z).unwrap();
        assert_eq!(actor.num_classes(), 4);
        assert!((actor.loss() - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn training_reaches_conditional_entropy() {
        let (joint, z) = toy();
        let r = train_actor(&joint, &z, &ActorConfig::default()).unwrap();
        assert!(r.converged);
        // Classes {0, 1} and {2} both have law (1/2, 1/2, 0); the rest are
        // pure: H(A|S,Z) = 3 ln 2 / 5, H(A|S,G) = ln 2 / 5.
        let h_sz = 3.0 * 2f64.ln() / 5.0;
        assert!((r.h_a_sg - 2f64.ln() / 5.0).abs() < 1e-15);
        assert!((r.last.loss - h_sz).abs() < 1e-8);
        assert!((r.excess - r.delta_a).abs() < 1e-8);
        assert!(r.checks_hold(1e-12));
        for w in r.loss_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let (joint, z) = toy();
        let cfg = ActorConfig { learning_rate: 0.0, ..Default::default() };
        assert!(matches!(train_actor(&joint, &z, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn rejects_mismatched_ids() {
        let (joint, _) = toy();
        assert!(TabularActor::new(&joint, &[0, 1]).is_err());
    }
}
