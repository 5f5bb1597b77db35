//! Reading the outcome off a simulated trajectory, the static limit
//! functional, and reconciliation of prediction against observation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::signed_graph::SignedMatrix;
use crate::topology::{static_predict, CampPartition, StaticPrediction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeKind {
    Stabilizing,
    Consensus,
    Polarization,
    /// Common limit modulus, type not resolved.
    ModulusConsensus,
    NoModulusConsensus,
    Inconclusive,
}

impl OutcomeKind {
    pub fn is_bipartite(self) -> bool {
        matches!(self, OutcomeKind::Consensus | OutcomeKind::Polarization)
    }

    /// Every kind that implies modulus consensus.
    pub fn is_modulus_consensus(self) -> bool {
        matches!(
            self,
            OutcomeKind::Stabilizing
                | OutcomeKind::Consensus
                | OutcomeKind::Polarization
                | OutcomeKind::ModulusConsensus
        )
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub x_star: Option<f64>,
    pub rho: Option<Vec<f64>>,
    pub camps: Option<CampPartition>,
}

impl Outcome {
    pub fn of_kind(kind: OutcomeKind) -> Self {
        let x_star = (kind == OutcomeKind::Stabilizing).then_some(0.0);
        Self {
            kind,
            x_star,
            rho: None,
            camps: None,
        }
    }

    pub fn bipartite(rho: Vec<f64>, x_star: Option<f64>) -> Self {
        let kind = if rho.iter().all(|&r| r == rho[0]) {
            OutcomeKind::Consensus
        } else {
            OutcomeKind::Polarization
        };
        let camps = camps_from_signs(&rho);
        Self {
            kind,
            x_star,
            rho: Some(rho),
            camps: Some(camps),
        }
    }

    pub fn from_static(p: &StaticPrediction) -> Self {
        match (&p.rho, p.outcome.is_bipartite()) {
            (Some(rho), true) => Self::bipartite(rho.clone(), None),
            _ => Self::of_kind(p.outcome),
        }
    }
}

/// Camp 1 holds node 0 and everyone sharing its sign.
fn camps_from_signs(rho: &[f64]) -> CampPartition {
    let (camp1, camp2) = (0..rho.len()).partition(|&i| rho[i] == rho[0]);
    CampPartition { camp1, camp2 }
}

pub const MIN_TAIL_SAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    pub tol: f64,
    pub tail_fraction: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            tail_fraction: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub tail_samples: usize,
    pub tail_start: f64,
    /// Largest least-squares slope of `|x_i|` over the tail.
    pub drift: f64,
    /// `max |x_i| - min |x_i|` at the final sample.
    pub spread: f64,
    /// Smallest spread within each half of the tail.
    pub min_spread_halves: [f64; 2],
    pub tail_mean_modulus: f64,
    pub signs_stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub outcome: Outcome,
    pub diagnostics: Diagnostics,
}

fn spread(x: &[f64]) -> f64 {
    let (lo, hi) = x.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
        (lo.min(v.abs()), hi.max(v.abs()))
    });
    hi - lo
}

fn slope(t: &[f64], y: impl Iterator<Item = f64>) -> f64 {
    let y: Vec<f64> = y.collect();
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (ti, yi) in t.iter().zip(&y) {
        num += (ti - tm) * (yi - ym);
        den += (ti - tm) * (ti - tm);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn classify(traj: &Trajectory, cfg: &ClassifierConfig) -> Result<Classification> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {}", cfg.tol)));
    }
    if !(cfg.tail_fraction > 0.0 && cfg.tail_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tail_fraction must lie in (0, 1), got {}",
            cfg.tail_fraction
        )));
    }
    let len = traj.samples.len();
    let tail_len = (cfg.tail_fraction * len as f64).ceil() as usize;
    if tail_len < MIN_TAIL_SAMPLES {
        return Err(Error::TrajectoryTooShort {
            tail: tail_len,
            required: MIN_TAIL_SAMPLES,
        });
    }
    let tail = &traj.samples[len - tail_len..];
    let n = traj.n;
    let times: Vec<f64> = tail.iter().map(|s| s.t).collect();

    let drift = (0..n)
        .map(|i| slope(&times, tail.iter().map(|s| s.x[i].abs())).abs())
        .fold(0.0f64, f64::max);
    let last = &tail[tail_len - 1].x;
    let final_spread = spread(last);
    let half = tail_len / 2;
    let min_spread = |part: &[crate::dynamics::OpinionState]| {
        part.iter().map(|s| spread(&s.x)).fold(f64::INFINITY, f64::min)
    };
    let halves = [min_spread(&tail[..half]), min_spread(&tail[half..])];
    let tail_mean = tail
        .iter()
        .map(|s| s.x.iter().map(|v| v.abs()).sum::<f64>())
        .sum::<f64>()
        / (tail_len * n) as f64;
    let rho: Vec<f64> = last.iter().map(|&v| sign(v)).collect();
    let signs_stable = rho.iter().all(|&r| r != 0.0)
        && tail
            .iter()
            .all(|s| s.x.iter().zip(&rho).all(|(&v, &r)| sign(v) == r));

    let tol = cfg.tol;
    let settled = drift < tol;
    let outcome = if settled && final_spread < tol {
        if tail_mean < tol {
            Outcome::of_kind(OutcomeKind::Stabilizing)
        } else if signs_stable {
            Outcome::bipartite(rho, Some(tail_mean))
        } else {
            Outcome {
                kind: OutcomeKind::ModulusConsensus,
                x_star: Some(tail_mean),
                rho: None,
                camps: None,
            }
        }
    } else if settled {
        Outcome::of_kind(OutcomeKind::NoModulusConsensus)
    } else {
        // A spread that stays bounded away from zero at a steady level is a
        // limit cycle, not slow convergence.
        let half_duration = (times[tail_len - 1] - times[0]) / 2.0;
        let persistent = halves[0] >= tol
            && halves[1] >= tol
            && (halves[0] - halves[1]).abs() / half_duration < tol;
        Outcome::of_kind(if persistent {
            OutcomeKind::NoModulusConsensus
        } else {
            OutcomeKind::Inconclusive
        })
    };

    Ok(Classification {
        outcome,
        diagnostics: Diagnostics {
            tail_samples: tail_len,
            tail_start: times[0],
            drift,
            spread: final_spread,
            min_spread_halves: halves,
            tail_mean_modulus: tail_mean,
            signs_stable,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitFunctional {
    /// `lim x(t) = rho (v . x0)`.
    Bipartite { rho: Vec<f64>, v: Vec<f64> },
    Stabilizing,
    NoModulusConsensus,
}

impl LimitFunctional {
    pub fn limit(&self, x0: &[f64]) -> Option<Vec<f64>> {
        match self {
            LimitFunctional::Bipartite { rho, v } => {
                let s: f64 = v.iter().zip(x0).map(|(a, b)| a * b).sum();
                Some(rho.iter().map(|r| r * s).collect())
            }
            LimitFunctional::Stabilizing => Some(vec![0.0; x0.len()]),
            LimitFunctional::NoModulusConsensus => None,
        }
    }
}

pub fn limit_functional(a: &SignedMatrix) -> Result<LimitFunctional> {
    let p = static_predict(a)?;
    Ok(match (p.outcome, p.rho, p.v) {
        (OutcomeKind::Stabilizing, _, _) => LimitFunctional::Stabilizing,
        (kind, Some(rho), Some(v)) if kind.is_bipartite() => LimitFunctional::Bipartite { rho, v },
        _ => LimitFunctional::NoModulusConsensus,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Agree,
    /// The prediction left the type open and the observation resolves it.
    Refine,
    Conflict,
    /// The observation itself is inconclusive.
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reconciliation {
    pub predicted: Outcome,
    pub observed: Outcome,
    pub verdict: Verdict,
    pub differences: Vec<String>,
}

fn same_up_to_flip(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && (a.iter().zip(b).all(|(x, y)| x == y) || a.iter().zip(b).all(|(x, y)| *x == -*y))
}

pub fn reconcile(predicted: &Outcome, observed: &Outcome) -> Reconciliation {
    use OutcomeKind::*;
    let mut differences = Vec::new();
    let verdict = match (predicted.kind, observed.kind) {
        (_, Inconclusive) => {
            differences.push("observation is inconclusive; try a longer horizon".into());
            Verdict::Undetermined
        }
        (p, o) if p == o => match (&predicted.rho, &observed.rho) {
            (Some(rp), Some(ro)) if !same_up_to_flip(rp, ro) => {
                differences.push(format!("sign pattern: predicted {rp:?}, observed {ro:?}"));
                Verdict::Conflict
            }
            _ => Verdict::Agree,
        },
        (ModulusConsensus, Stabilizing | Consensus | Polarization) => Verdict::Refine,
        (Stabilizing | Consensus | Polarization, ModulusConsensus) => {
            differences.push(format!(
                "observed modulus consensus without a stable sign pattern; predicted {}",
                predicted.kind
            ));
            Verdict::Agree
        }
        (Inconclusive, _) => Verdict::Refine,
        (p, o) => {
            differences.push(format!("kind: predicted {p}, observed {o}"));
            Verdict::Conflict
        }
    };
    Reconciliation {
        predicted: predicted.clone(),
        observed: observed.clone(),
        verdict,
        differences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegratorConfig, OpinionState, TrajectoryMeta};
    use crate::signed_graph::Schedule;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> SignedMatrix {
        SignedMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn run(a: SignedMatrix, x0: &[f64], t_end: f64) -> Trajectory {
        integrate(&Schedule::constant(a), x0, t_end, &IntegratorConfig::default()).unwrap()
    }

    fn synthetic(n: usize, len: usize, f: impl Fn(f64) -> Vec<f64>) -> Trajectory {
        Trajectory {
            n,
            samples: (0..len)
                .map(|k| {
                    let t = k as f64 * 0.01;
                    OpinionState { t, x: f(t) }
                })
                .collect(),
            meta: TrajectoryMeta {
                protocol: "synthetic".into(),
                step: 0.01,
                t_end: (len - 1) as f64 * 0.01,
                scenario_hash: None,
                monitor: Default::default(),
            },
        }
    }

    #[test]
    fn antagonistic_pair_polarizes() {
        let c = classify(&run(m(&[&[0.0, -1.0], &[-1.0, 0.0]]), &[1.0, 0.0], 30.0), &Default::default())
            .unwrap();
        assert_eq!(c.outcome.kind, OutcomeKind::Polarization);
        assert_relative_eq!(c.outcome.x_star.unwrap(), 0.5, epsilon = 1e-6);
        assert_eq!(c.outcome.rho, Some(vec![1.0, -1.0]));
        assert_eq!(c.outcome.camps.unwrap().camp2, vec![1]);
    }

    #[test]
    fn example1_has_no_modulus_consensus() {
        let a = m(&[&[0.0, -1.0, 0.0], &[-1.0, 0.0, 0.0], &[1.0, 1.0, 0.0]]);
        let c = classify(&run(a, &[1.0, -1.0, 0.3], 30.0), &Default::default()).unwrap();
        assert_eq!(c.outcome.kind, OutcomeKind::NoModulusConsensus);
    }

    #[test]
    fn unbalanced_cycle_stabilizes() {
        let a = m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[-1.0, 0.0, 0.0]]);
        let c = classify(&run(a, &[1.0, 0.5, -0.2], 60.0), &Default::default()).unwrap();
        assert_eq!(c.outcome.kind, OutcomeKind::Stabilizing);
        assert_eq!(c.outcome.x_star, Some(0.0));
    }

    #[test]
    fn limit_cycle_is_not_inconclusive() {
        let traj = synthetic(2, 20_000, |t| vec![1.0, 0.5 * t.sin()]);
        let c = classify(&traj, &Default::default()).unwrap();
        assert_eq!(c.outcome.kind, OutcomeKind::NoModulusConsensus);
    }

    #[test]
    fn slow_decay_is_inconclusive() {
        let traj = synthetic(2, 2_000, |t| vec![1.0, 1.0 - 0.5 * (-0.01 * t).exp()]);
        let c = classify(&traj, &Default::default()).unwrap();
        assert_eq!(c.outcome.kind, OutcomeKind::Inconclusive);
    }

    #[test]
    fn sign_flipping_modulus_consensus() {
        let traj = synthetic(2, 2_000, |t| {
            let s = if (t * 10.0) as i64 % 2 == 0 { 1.0 } else { -1.0 };
            vec![0.7, 0.7 * s]
        });
        let c = classify(&traj, &Default::default()).unwrap();
        assert_eq!(c.outcome.kind, OutcomeKind::ModulusConsensus);
        assert_relative_eq!(c.outcome.x_star.unwrap(), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn too_short_and_bad_parameters() {
        let traj = synthetic(2, 50, |_| vec![1.0, 1.0]);
        assert!(matches!(
            classify(&traj, &Default::default()),
            Err(Error::TrajectoryTooShort { .. })
        ));
        let long = synthetic(2, 1000, |_| vec![1.0, 1.0]);
        let bad = ClassifierConfig { tol: 0.0, tail_fraction: 0.2 };
        assert!(classify(&long, &bad).is_err());
        let bad = ClassifierConfig { tol: 1e-6, tail_fraction: 1.0 };
        assert!(classify(&long, &bad).is_err());
    }

    #[test]
    fn limit_functional_examples() {
        match limit_functional(&m(&[&[0.0, -1.0], &[-1.0, 0.0]])).unwrap() {
            LimitFunctional::Bipartite { rho, v } => {
                assert_eq!(rho, vec![1.0, -1.0]);
                assert_relative_eq!(v[0], 0.5, epsilon = 1e-12);
                assert_relative_eq!(v[1], -0.5, epsilon = 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let tri = m(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        match limit_functional(&tri).unwrap() {
            LimitFunctional::Bipartite { rho, v } => {
                assert_eq!(rho, vec![1.0; 3]);
                for vi in v {
                    assert_relative_eq!(vi, 1.0 / 3.0, epsilon = 1e-12);
                }
            }
            other => panic!("{other:?}"),
        }
        let ex1 = m(&[&[0.0, -1.0, 0.0], &[-1.0, 0.0, 0.0], &[1.0, 1.0, 0.0]]);
        assert_eq!(limit_functional(&ex1).unwrap(), LimitFunctional::NoModulusConsensus);
    }

    #[test]
    fn reconcile_rules() {
        let pol = Outcome::bipartite(vec![1.0, -1.0], None);
        let flipped = Outcome::bipartite(vec![-1.0, 1.0], Some(0.5));
        assert_eq!(reconcile(&pol, &flipped).verdict, Verdict::Agree);

        let other = Outcome::bipartite(vec![1.0, -1.0, 1.0], None);
        let observed = Outcome::bipartite(vec![1.0, 1.0, -1.0], None);
        assert_eq!(reconcile(&other, &observed).verdict, Verdict::Conflict);

        let mc = Outcome::of_kind(OutcomeKind::ModulusConsensus);
        let stab = Outcome::of_kind(OutcomeKind::Stabilizing);
        assert_eq!(reconcile(&mc, &stab).verdict, Verdict::Refine);
        let r = reconcile(&stab, &pol);
        assert_eq!(r.verdict, Verdict::Conflict);
        assert_eq!(r.differences.len(), 1);
        let inc = Outcome::of_kind(OutcomeKind::Inconclusive);
        assert_eq!(reconcile(&stab, &inc).verdict, Verdict::Undetermined);
        assert_eq!(reconcile(&inc, &stab).verdict, Verdict::Refine);
    }
}
