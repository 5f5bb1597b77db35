//! JSON reports. Node indices are 1-based here and only here.

use serde::Serialize;

use signed_consensus::classification::{Classification, Diagnostics, Outcome, Reconciliation, Verdict};
use signed_consensus::signed_graph::Schedule;
use signed_consensus::time_varying::{ComponentPrediction, ConnectivityReport, WindowCheck};
use signed_consensus::topology::{
    hostile_camps, is_quasi_strongly_connected, strongly_connected_components, CampPartition,
    StaticPrediction,
};

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Camps {
    pub camp1: Vec<usize>,
    pub camp2: Vec<usize>,
}

impl From<&CampPartition> for Camps {
    fn from(c: &CampPartition) -> Self {
        Self {
            camp1: one_based(&c.camp1),
            camp2: one_based(&c.camp2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeReport {
    pub kind: String,
    pub x_star: Option<f64>,
    pub rho: Option<Vec<f64>>,
    pub camps: Option<Camps>,
}

impl From<&Outcome> for OutcomeReport {
    fn from(o: &Outcome) -> Self {
        Self {
            kind: o.kind.to_string(),
            x_star: o.x_star,
            rho: o.rho.clone(),
            camps: o.camps.as_ref().map(Camps::from),
        }
    }
}

/// Findings for a constant matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaticReport {
    pub scc: Vec<Vec<usize>>,
    pub roots: Vec<usize>,
    pub qsc: bool,
    pub balanced: bool,
    pub camps: Option<Camps>,
    pub isb_witness: Option<Vec<usize>>,
    /// `[re, im]` pairs, sorted by real part.
    pub spectrum: Vec<[f64; 2]>,
    pub hurwitz: bool,
    pub rho: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
    pub prediction: String,
}

impl StaticReport {
    pub fn new(scc: &[Vec<usize>], p: &StaticPrediction, balanced: bool) -> Self {
        Self {
            scc: scc.iter().map(|c| one_based(c)).collect(),
            roots: one_based(&p.roots),
            qsc: !p.roots.is_empty(),
            balanced,
            camps: p.camps.as_ref().map(Camps::from),
            isb_witness: p.isb_witness.as_deref().map(one_based),
            spectrum: p.spectrum.iter().map(|z| [z.re, z.im]).collect(),
            hurwitz: p.spectrum.iter().all(|z| z.re > signed_consensus::topology::DEFAULT_HURWITZ_TOL),
            rho: p.rho.clone(),
            v: p.v.clone(),
            prediction: p.outcome.to_string(),
        }
    }
}

/// Instantaneous findings for one segment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentReport {
    pub t_start: f64,
    pub t_end: f64,
    pub qsc: bool,
    pub roots: Vec<usize>,
    pub balanced: bool,
    pub camps: Option<Camps>,
}

pub fn segment_reports(schedule: &Schedule) -> Vec<SegmentReport> {
    schedule
        .segments()
        .iter()
        .map(|s| {
            let roots = is_quasi_strongly_connected(&s.matrix);
            let balance = hostile_camps(&s.matrix);
            SegmentReport {
                t_start: s.t_start,
                t_end: s.t_end,
                qsc: roots.qsc,
                roots: one_based(&roots.roots),
                balanced: balance.is_balanced(),
                camps: balance.camps().map(Camps::from),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowReport {
    pub holds: bool,
    pub failing_t: Option<f64>,
}

impl From<&WindowCheck> for WindowReport {
    fn from(w: &WindowCheck) -> Self {
        Self {
            holds: w.holds,
            failing_t: w.failing_t,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EssentialEdge {
    /// The listening node.
    pub j: usize,
    /// The node listened to.
    pub k: usize,
    /// `coop`, `comp`, or both when both signs recur forever.
    pub tags: Vec<&'static str>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentReport {
    pub nodes: Vec<usize>,
    pub kind: String,
    pub camps: Option<Camps>,
}

impl From<&ComponentPrediction> for ComponentReport {
    fn from(c: &ComponentPrediction) -> Self {
        Self {
            nodes: one_based(&c.nodes),
            kind: c.kind.to_string(),
            camps: c.camps.as_ref().map(Camps::from),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub scenario_hash: String,
    pub n: usize,
    pub protocol: &'static str,
    pub periodic: bool,
    #[serde(flatten)]
    pub static_report: Option<StaticReport>,
    pub segments: Vec<SegmentReport>,
    pub window: f64,
    pub epsilon: f64,
    pub usc: WindowReport,
    pub uqsc: WindowReport,
    pub esc: bool,
    pub eqsc: bool,
    #[serde(rename = "cut_balance_K")]
    pub cut_balance_k: Option<f64>,
    #[serde(rename = "type_symmetry_K")]
    pub type_symmetry_k: Option<f64>,
    pub essential_edges: Vec<EssentialEdge>,
    pub essential_scc: Vec<Vec<usize>>,
    pub component_predictions: Option<Vec<ComponentReport>>,
    pub prediction: OutcomeReport,
}

pub struct AnalysisInputs<'a> {
    pub hash: &'a str,
    pub protocol: &'static str,
    pub schedule: &'a Schedule,
    pub static_prediction: Option<&'a StaticPrediction>,
    pub connectivity: &'a ConnectivityReport,
    pub components: Option<&'a [ComponentPrediction]>,
    pub prediction: &'a Outcome,
}

impl AnalysisReport {
    pub fn new(i: AnalysisInputs<'_>) -> Self {
        let c = i.connectivity;
        let static_report = i.schedule.constant_matrix().zip(i.static_prediction).map(|(a, p)| {
            let scc = strongly_connected_components(a);
            StaticReport::new(&scc.components, p, hostile_camps(a).is_balanced())
        });
        let essential_edges = c
            .essential
            .edges
            .iter()
            .map(|e| {
                let mut tags = Vec::new();
                if c.essential.coop.contains(e) {
                    tags.push("coop");
                }
                if c.essential.comp.contains(e) {
                    tags.push("comp");
                }
                EssentialEdge {
                    j: e.0 + 1,
                    k: e.1 + 1,
                    tags,
                }
            })
            .collect();
        Self {
            scenario_hash: i.hash.to_string(),
            n: i.schedule.n(),
            protocol: i.protocol,
            periodic: i.schedule.is_periodic(),
            static_report,
            segments: segment_reports(i.schedule),
            window: c.usc.window,
            epsilon: c.usc.epsilon,
            usc: (&c.usc).into(),
            uqsc: (&c.uqsc).into(),
            esc: c.esc,
            eqsc: c.eqsc,
            cut_balance_k: c.cut_balance_k,
            type_symmetry_k: c.type_symmetry_k,
            essential_edges,
            essential_scc: c.essential.components.components.iter().map(|s| one_based(s)).collect(),
            component_predictions: i
                .components
                .map(|cs| cs.iter().map(ComponentReport::from).collect()),
            prediction: i.prediction.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconciliationReport {
    pub predicted: OutcomeReport,
    pub observed: OutcomeReport,
    pub verdict: Verdict,
    pub differences: Vec<String>,
}

impl From<&Reconciliation> for ReconciliationReport {
    fn from(r: &Reconciliation) -> Self {
        Self {
            predicted: (&r.predicted).into(),
            observed: (&r.observed).into(),
            verdict: r.verdict,
            differences: r.differences.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub scenario_hash: String,
    pub protocol: &'static str,
    pub t_end: f64,
    pub step: f64,
    #[serde(flatten)]
    pub observed: OutcomeReport,
    pub diagnostics: Diagnostics,
    pub reconciliation: ReconciliationReport,
}

impl VerifyReport {
    pub fn new(
        scenario: &str,
        hash: &str,
        protocol: &'static str,
        t_end: f64,
        step: f64,
        c: &Classification,
        r: &Reconciliation,
    ) -> Self {
        Self {
            scenario: scenario.to_string(),
            scenario_hash: hash.to_string(),
            protocol,
            t_end,
            step,
            observed: (&c.outcome).into(),
            diagnostics: c.diagnostics.clone(),
            reconciliation: r.into(),
        }
    }
}
