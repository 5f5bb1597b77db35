//! Connectivity and cut-balance analysis of schedules, the essential graph,
//! and outcome predictors for time-varying topologies.
//!
//! Window integrals `W(t) = ∫_t^{t+T} |A|` of a piecewise-constant schedule
//! are piecewise affine in `t` with breaks where `t` or `t + T` meets a
//! switching time. Refining those breaks with the times where an entry of
//! `W` crosses `ε` makes the `ε`-skeleton constant on each open interval and
//! only larger at the interval ends, so checking interval midpoints decides
//! uniform connectivity exactly.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::classification::{Outcome, OutcomeKind};
use crate::dynamics::GainFunction;
use crate::error::{Error, Result};
use crate::signed_graph::{integrate_abs, integrate_mapped, Schedule, SignedMatrix};
use crate::topology::{
    hostile_camps, hostile_camps_within, roots_of, scc_from_arcs, static_predict, Balance,
    CampPartition, SccDecomposition,
};

/// Largest agent count for the partition enumeration.
pub const MAX_CUT_BALANCE_NODES: usize = 20;

/// Per-period integrals above this count as divergent.
pub const ESSENTIAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowCheck {
    pub holds: bool,
    pub window: f64,
    pub epsilon: f64,
    /// Start of a window whose skeleton fails, when one exists.
    pub failing_t: Option<f64>,
}

/// `t -> ∫_0^t |A|`, evaluated from prefix sums at the switching times.
struct Cumulative<'a> {
    schedule: &'a Schedule,
    starts: Vec<f64>,
    prefix: Vec<DMatrix<f64>>,
}

impl<'a> Cumulative<'a> {
    fn new(schedule: &'a Schedule) -> Self {
        let n = schedule.n();
        let mut starts = Vec::with_capacity(schedule.segments().len() + 1);
        let mut prefix = Vec::with_capacity(schedule.segments().len() + 1);
        let mut acc = DMatrix::zeros(n, n);
        for s in schedule.segments() {
            starts.push(s.t_start);
            prefix.push(acc.clone());
            acc += s.matrix.abs().entries() * (s.t_end - s.t_start);
        }
        starts.push(schedule.horizon());
        prefix.push(acc);
        Self {
            schedule,
            starts,
            prefix,
        }
    }

    fn within(&self, t: f64) -> DMatrix<f64> {
        let segs = self.schedule.segments();
        let i = self.starts.partition_point(|&s| s <= t).saturating_sub(1);
        if i >= segs.len() {
            let last = &segs[segs.len() - 1];
            return &self.prefix[segs.len()] + last.matrix.abs().entries() * (t - last.t_end);
        }
        &self.prefix[i] + segs[i].matrix.abs().entries() * (t - segs[i].t_start)
    }

    fn at(&self, t: f64) -> DMatrix<f64> {
        if self.schedule.is_periodic() {
            let p = self.schedule.horizon();
            let cycles = (t / p).floor();
            let local = t - cycles * p;
            &self.prefix[self.prefix.len() - 1] * cycles + self.within(local)
        } else {
            self.within(t)
        }
    }

    fn window(&self, t: f64, width: f64) -> DMatrix<f64> {
        self.at(t + width) - self.at(t)
    }
}

fn skeleton_arcs(w: &DMatrix<f64>, eps: f64) -> Vec<(usize, usize)> {
    let n = w.nrows();
    let mut arcs = Vec::new();
    for j in 0..n {
        for k in 0..n {
            if j != k && w[(j, k)] >= eps {
                arcs.push((k, j));
            }
        }
    }
    arcs
}

fn sorted_dedup(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Times at which every window skeleton is tested.
fn window_probes(schedule: &Schedule, width: f64, eps: f64, cum: &Cumulative) -> Vec<f64> {
    let h = schedule.horizon();
    let mut bounds: Vec<f64> = schedule.segments().iter().map(|s| s.t_start).collect();
    bounds.push(h);
    let mut grid = Vec::with_capacity(2 * bounds.len());
    if schedule.is_periodic() {
        for &b in &bounds {
            grid.push(b);
            let shifted = b - width;
            grid.push(shifted - (shifted / h).floor() * h);
        }
    } else {
        for &b in &bounds {
            grid.push(b);
            if b - width > 0.0 {
                grid.push(b - width);
            }
        }
    }
    let grid = sorted_dedup(grid);

    let n = schedule.n();
    let mut refined = grid.clone();
    let mut prev = cum.window(grid[0], width);
    for pair in grid.windows(2) {
        let (t0, t1) = (pair[0], pair[1]);
        let next = cum.window(t1, width);
        for j in 0..n {
            for k in 0..n {
                let (w0, w1) = (prev[(j, k)], next[(j, k)]);
                if (w0 - eps) * (w1 - eps) < 0.0 {
                    refined.push(t0 + (eps - w0) / (w1 - w0) * (t1 - t0));
                }
            }
        }
        prev = next;
    }
    let refined = sorted_dedup(refined);
    let mut probes: Vec<f64> = refined.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    if !schedule.is_periodic() {
        // every later window sees only the held matrix
        probes.push(h + 1.0);
    }
    probes
}

fn check_windows(
    schedule: &Schedule,
    width: f64,
    eps: f64,
    connected: impl Fn(&SccDecomposition) -> bool,
) -> Result<WindowCheck> {
    if !(width > 0.0 && width.is_finite()) || !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "window checks need T > 0 and epsilon > 0, got T = {width}, epsilon = {eps}"
        )));
    }
    let cum = Cumulative::new(schedule);
    let n = schedule.n();
    let failing_t = window_probes(schedule, width, eps, &cum)
        .into_iter()
        .find(|&t| !connected(&scc_from_arcs(n, &skeleton_arcs(&cum.window(t, width), eps))));
    Ok(WindowCheck {
        holds: failing_t.is_none(),
        window: width,
        epsilon: eps,
        failing_t,
    })
}

/// Uniform strong connectivity with constants `(T, ε)`.
pub fn check_usc(schedule: &Schedule, window: f64, eps: f64) -> Result<WindowCheck> {
    check_windows(schedule, window, eps, |s| s.is_strongly_connected())
}

/// Uniform quasi-strong connectivity with constants `(T, ε)`.
pub fn check_uqsc(schedule: &Schedule, window: f64, eps: f64) -> Result<WindowCheck> {
    check_windows(schedule, window, eps, |s| roots_of(s).qsc)
}

/// Default `(T, ε)`: one period for periodic schedules, otherwise twice the
/// horizon (at least 2), so that every window contains a stretch of the held
/// matrix at least half as long as the reference window. `ε` is half the
/// smallest positive entry of the reference window integral.
pub fn auto_window(schedule: &Schedule) -> (f64, f64) {
    let (width, reference) = if schedule.is_periodic() {
        let p = schedule.horizon();
        (p, integrate_abs(schedule, 0.0, p))
    } else {
        let width = 2.0 * schedule.horizon().max(1.0);
        let tail = schedule.tail_matrix().expect("non-periodic").abs();
        (width, tail.map(|v| v * width))
    };
    let smallest = reference
        .entries()
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let eps = if smallest.is_finite() { 0.5 * smallest } else { 1.0 };
    (width, eps)
}

/// Segment matrices with consecutive repeats dropped.
fn distinct_matrices(schedule: &Schedule) -> Vec<&SignedMatrix> {
    let mut out: Vec<&SignedMatrix> = Vec::new();
    for s in schedule.segments() {
        if out.last().is_none_or(|m| **m != s.matrix) {
            out.push(&s.matrix);
        }
    }
    out
}

/// Smallest `K` with `flow(S -> V\S) <= K flow(V\S -> S)` over every
/// partition of one matrix; `None` when some cut carries one-sided flow.
fn cut_balance_of(a: &SignedMatrix) -> Option<f64> {
    let n = a.n();
    let w = |j: usize, k: usize| a.get(j, k).abs();
    let mut inside = vec![false; n];
    inside[0] = true;
    // `into` is the influence received by S from outside, `out` the reverse;
    // the counters track how many arcs carry each so that zero is exact.
    let (mut into, mut out) = (0.0, 0.0);
    let (mut into_arcs, mut out_arcs) = (0usize, 0usize);
    for k in 1..n {
        into += w(0, k);
        into_arcs += (w(0, k) > 0.0) as usize;
        out += w(k, 0);
        out_arcs += (w(k, 0) > 0.0) as usize;
    }
    let mut k_max = 1.0f64;
    let total = 1u64 << (n - 1);
    for i in 0..total {
        if i > 0 {
            // Gray code: flip the bit that changes between i-1 and i
            let v = 1 + i.trailing_zeros() as usize;
            let entering = !inside[v];
            for u in 0..n {
                if u == v {
                    continue;
                }
                let (a_uv, a_vu) = (w(u, v), w(v, u));
                let (c_uv, c_vu) = ((a_uv > 0.0) as usize, (a_vu > 0.0) as usize);
                match (entering, inside[u]) {
                    // v joins S: arcs to/from members become internal
                    (true, true) => {
                        into -= a_uv;
                        into_arcs -= c_uv;
                        out -= a_vu;
                        out_arcs -= c_vu;
                    }
                    (true, false) => {
                        into += a_vu;
                        into_arcs += c_vu;
                        out += a_uv;
                        out_arcs += c_uv;
                    }
                    (false, true) => {
                        into += a_uv;
                        into_arcs += c_uv;
                        out += a_vu;
                        out_arcs += c_vu;
                    }
                    (false, false) => {
                        into -= a_vu;
                        into_arcs -= c_vu;
                        out -= a_uv;
                        out_arcs -= c_uv;
                    }
                }
            }
            inside[v] = entering;
        }
        if inside.iter().all(|&b| b) {
            continue;
        }
        match (into_arcs > 0, out_arcs > 0) {
            (false, false) => {}
            (true, true) => k_max = k_max.max(into / out).max(out / into),
            _ => return None,
        }
    }
    Some(k_max)
}

/// Cut-balance constant of the whole schedule (maximum over its matrices).
pub fn cut_balance_constant(schedule: &Schedule) -> Result<Option<f64>> {
    let n = schedule.n();
    if n > MAX_CUT_BALANCE_NODES {
        return Err(Error::CapExceeded(format!(
            "cut-balance enumeration supports at most {MAX_CUT_BALANCE_NODES} agents, got {n}"
        )));
    }
    let mut k = 1.0f64;
    for m in distinct_matrices(schedule) {
        match cut_balance_of(m) {
            Some(km) => k = k.max(km),
            None => return Ok(None),
        }
    }
    Ok(Some(k))
}

/// Smallest `K` with `|a_jk| <= K |a_kj|` for every pair and every matrix.
pub fn type_symmetry_constant(schedule: &Schedule) -> Option<f64> {
    let n = schedule.n();
    let mut k_max = 1.0f64;
    for m in distinct_matrices(schedule) {
        for j in 0..n {
            for k in j + 1..n {
                let (x, y) = (m.get(j, k).abs(), m.get(k, j).abs());
                match (x > 0.0, y > 0.0) {
                    (false, false) => {}
                    (true, true) => k_max = k_max.max(x / y).max(y / x),
                    _ => return None,
                }
            }
        }
    }
    Some(k_max)
}

/// Pairs `(j, k)` with divergent `∫|a_jk|`, split by the sign of the part
/// that diverges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EssentialGraph {
    pub n: usize,
    pub edges: BTreeSet<(usize, usize)>,
    pub coop: BTreeSet<(usize, usize)>,
    pub comp: BTreeSet<(usize, usize)>,
    pub components: SccDecomposition,
}

impl EssentialGraph {
    pub fn is_strongly_connected(&self) -> bool {
        self.components.is_strongly_connected()
    }

    pub fn is_quasi_strongly_connected(&self) -> bool {
        roots_of(&self.components).qsc
    }

    /// `𝒢^±` on the given nodes: `+1` on cooperative, `-1` on competitive
    /// arcs. `None` if some arc inside is both.
    pub fn signed_unit_graph(&self, nodes: &[usize]) -> Option<SignedMatrix> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(j, k) in &self.edges {
            if !(nodes.contains(&j) && nodes.contains(&k)) {
                continue;
            }
            match (self.coop.contains(&(j, k)), self.comp.contains(&(j, k))) {
                (true, true) => return None,
                (true, false) => m[(j, k)] = 1.0,
                (false, true) => m[(j, k)] = -1.0,
                (false, false) => unreachable!("essential edges are cooperative or competitive"),
            }
        }
        Some(SignedMatrix::from_dmatrix(m))
    }
}

pub fn essential_graph(schedule: &Schedule) -> EssentialGraph {
    let n = schedule.n();
    let (abs, pos, neg) = if schedule.is_periodic() {
        let p = schedule.horizon();
        (
            integrate_abs(schedule, 0.0, p),
            integrate_mapped(schedule, 0.0, p, |v| v.max(0.0)),
            integrate_mapped(schedule, 0.0, p, |v| (-v).max(0.0)),
        )
    } else {
        let tail = schedule.tail_matrix().expect("non-periodic");
        (tail.abs(), tail.map(|v| v.max(0.0)), tail.map(|v| (-v).max(0.0)))
    };
    let mut edges = BTreeSet::new();
    let mut coop = BTreeSet::new();
    let mut comp = BTreeSet::new();
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            if abs.get(j, k) > ESSENTIAL_TOL {
                edges.insert((j, k));
            }
            if pos.get(j, k) > ESSENTIAL_TOL {
                coop.insert((j, k));
            }
            if neg.get(j, k) > ESSENTIAL_TOL {
                comp.insert((j, k));
            }
        }
    }
    let arcs: Vec<(usize, usize)> = edges.iter().map(|&(j, k)| (k, j)).collect();
    EssentialGraph {
        n,
        components: scc_from_arcs(n, &arcs),
        edges,
        coop,
        comp,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConnectivityReport {
    pub usc: WindowCheck,
    pub uqsc: WindowCheck,
    pub esc: bool,
    pub eqsc: bool,
    pub cut_balance_k: Option<f64>,
    pub type_symmetry_k: Option<f64>,
    pub essential: EssentialGraph,
}

impl ConnectivityReport {
    /// The implications that hold between the flags for every schedule.
    pub fn check_implications(&self) -> Result<()> {
        let rules = [
            (self.usc.holds && !self.uqsc.holds, "USC without UQSC"),
            (self.usc.holds && !self.esc, "USC without ESC"),
            (self.uqsc.holds && !self.eqsc, "UQSC without EQSC"),
            (self.esc && !self.eqsc, "ESC without EQSC"),
            (
                self.type_symmetry_k.is_some() && self.cut_balance_k.is_none(),
                "type-symmetric but not cut-balanced",
            ),
            (
                self.cut_balance_k.is_some() && self.eqsc && !self.esc,
                "cut-balanced and EQSC but not ESC",
            ),
        ];
        match rules.iter().find(|(broken, _)| *broken) {
            Some((_, what)) => Err(Error::NumericalFailure(format!(
                "inconsistent connectivity report: {what}"
            ))),
            None => Ok(()),
        }
    }
}

/// All connectivity findings; `(T, ε)` defaults to [`auto_window`].
pub fn analyze_schedule(schedule: &Schedule, window: Option<(f64, f64)>) -> Result<ConnectivityReport> {
    let (width, eps) = window.unwrap_or_else(|| auto_window(schedule));
    let essential = essential_graph(schedule);
    let report = ConnectivityReport {
        usc: check_usc(schedule, width, eps)?,
        uqsc: check_uqsc(schedule, width, eps)?,
        esc: essential.is_strongly_connected(),
        eqsc: essential.is_quasi_strongly_connected(),
        cut_balance_k: cut_balance_constant(schedule)?,
        type_symmetry_k: type_symmetry_constant(schedule),
        essential,
    };
    report.check_implications()?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentPrediction {
    pub nodes: Vec<usize>,
    /// `Consensus` or `Polarization` within the component, or `Stabilizing`
    /// when its opinions vanish.
    pub kind: OutcomeKind,
    pub camps: Option<CampPartition>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutBalancedPrediction {
    pub cut_balance_k: f64,
    pub components: Vec<ComponentPrediction>,
    pub global: Outcome,
}

pub fn predict_cut_balanced(schedule: &Schedule) -> Result<CutBalancedPrediction> {
    let k = cut_balance_constant(schedule)?.ok_or_else(|| {
        Error::NotApplicable("the schedule is not cut-balanced".into())
    })?;
    let g = essential_graph(schedule);
    let components: Vec<ComponentPrediction> = g
        .components
        .components
        .iter()
        .map(|nodes| {
            let balance = g
                .signed_unit_graph(nodes)
                .map(|m| hostile_camps_within(&m, nodes));
            match balance {
                Some(Balance::Balanced(camps)) => ComponentPrediction {
                    nodes: nodes.clone(),
                    kind: if camps.camp2.is_empty() {
                        OutcomeKind::Consensus
                    } else {
                        OutcomeKind::Polarization
                    },
                    camps: Some(camps),
                },
                _ => ComponentPrediction {
                    nodes: nodes.clone(),
                    kind: OutcomeKind::Stabilizing,
                    camps: None,
                },
            }
        })
        .collect();

    let global = if let [only] = components.as_slice() {
        match &only.camps {
            Some(camps) => Outcome::bipartite(camps.signs(g.n), None),
            None => Outcome::of_kind(OutcomeKind::Stabilizing),
        }
    } else if components.iter().all(|c| c.kind == OutcomeKind::Stabilizing) {
        Outcome::of_kind(OutcomeKind::Stabilizing)
    } else {
        Outcome::of_kind(OutcomeKind::NoModulusConsensus)
    };
    Ok(CutBalancedPrediction {
        cut_balance_k: k,
        components,
        global,
    })
}

/// Camps respected by every matrix of the schedule at once, if any: the
/// union of all sign constraints must itself be balanced and must not
/// contain a pair that is both positive and negative.
pub fn common_camps(schedule: &Schedule) -> Option<CampPartition> {
    let n = schedule.n();
    let mut union = DMatrix::<f64>::zeros(n, n);
    for m in distinct_matrices(schedule) {
        for j in 0..n {
            for k in 0..n {
                let s = m.get(j, k).signum() * (m.get(j, k) != 0.0) as i32 as f64;
                if s == 0.0 {
                    continue;
                }
                if union[(j, k)] == -s {
                    return None;
                }
                union[(j, k)] = s;
            }
        }
    }
    match hostile_camps(&SignedMatrix::from_dmatrix(union)) {
        Balance::Balanced(c) => Some(c),
        Balance::Unbalanced { .. } => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UscPrediction {
    pub usc: WindowCheck,
    pub uqsc: WindowCheck,
    pub common_camps: Option<CampPartition>,
    pub outcome: Outcome,
}

pub fn predict_usc(schedule: &Schedule, window: f64, eps: f64) -> Result<UscPrediction> {
    let usc = check_usc(schedule, window, eps)?;
    let uqsc = check_uqsc(schedule, window, eps)?;
    let camps = common_camps(schedule);
    let outcome = match &camps {
        // UQSC makes the union support connected, so every node has a camp
        Some(c) if uqsc.holds => Outcome::bipartite(c.signs(schedule.n()), None),
        _ if usc.holds => Outcome::of_kind(OutcomeKind::ModulusConsensus),
        _ => Outcome::of_kind(OutcomeKind::Inconclusive),
    };
    Ok(UscPrediction {
        usc,
        uqsc,
        common_camps: camps,
        outcome,
    })
}

/// Prediction for the linear protocol, using the strongest applicable
/// result: the static theorem for constant schedules, the cut-balanced
/// characterization when it applies, and the uniform-connectivity
/// sufficient conditions otherwise.
pub fn predict_schedule(schedule: &Schedule) -> Result<Outcome> {
    if let Some(a) = schedule.constant_matrix() {
        return Ok(Outcome::from_static(&static_predict(a)?));
    }
    if schedule.n() <= MAX_CUT_BALANCE_NODES && cut_balance_constant(schedule)?.is_some() {
        return Ok(predict_cut_balanced(schedule)?.global);
    }
    let (width, eps) = auto_window(schedule);
    Ok(predict_usc(schedule, width, eps)?.outcome)
}

/// Prediction for the nonlinear protocols. Their effective gains keep the
/// sign pattern of `A` and stay within constant multiples of `|A|`, so the
/// uniform-connectivity conditions carry over; nothing sharper is claimed.
pub fn predict_nonlinear(schedule: &Schedule) -> Result<Outcome> {
    let (width, eps) = auto_window(schedule);
    Ok(predict_usc(schedule, width, eps)?.outcome)
}

/// Prediction for a gain flow from its guaranteed skeleton, if declared.
pub fn predict_gain_flow(f: &dyn GainFunction) -> Result<Outcome> {
    match f.guaranteed_skeleton() {
        Some(s) => predict_nonlinear(&Schedule::constant(s)),
        None => Ok(Outcome::of_kind(OutcomeKind::Inconclusive)),
    }
}
