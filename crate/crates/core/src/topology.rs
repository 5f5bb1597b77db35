//! Static graph analysis: strongly connected components, roots, structural
//! balance, in-isolated structurally balanced (ISB) subgraphs, the Laplacian
//! spectrum, and the static outcome predictor.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use nalgebra::Complex;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::classification::OutcomeKind;
use crate::error::{Error, Result};
use crate::signed_graph::{laplacian, SignedMatrix};

/// Largest number of strongly connected components the ISB search will
/// enumerate subsets of.
pub const MAX_ISB_COMPONENTS: usize = 20;

pub const DEFAULT_HURWITZ_TOL: f64 = 1e-9;

/// SCCs in topological order of the condensation (influencers first).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SccDecomposition {
    pub components: Vec<Vec<usize>>,
    pub component_of: Vec<usize>,
    /// Condensation arcs `(from, to)`: some member of `to` listens to `from`.
    pub edges: BTreeSet<(usize, usize)>,
}

impl SccDecomposition {
    pub fn is_strongly_connected(&self) -> bool {
        self.components.len() == 1
    }

    /// Components with no incoming condensation arc.
    pub fn sources(&self) -> Vec<usize> {
        (0..self.components.len())
            .filter(|&c| !self.edges.iter().any(|&(_, to)| to == c))
            .collect()
    }
}

/// SCCs of the digraph on `0..n` with the given `(from, to)` arcs.
pub(crate) fn scc_from_arcs(n: usize, arcs: &[(usize, usize)]) -> SccDecomposition {
    let mut g = DiGraph::<(), ()>::with_capacity(n, arcs.len());
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for &(from, to) in arcs {
        g.add_edge(nodes[from], nodes[to], ());
    }
    let raw: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|ix| ix.index()).collect();
            c.sort_unstable();
            c
        })
        .collect();

    let mut raw_of = vec![0; n];
    for (ci, c) in raw.iter().enumerate() {
        for &v in c {
            raw_of[v] = ci;
        }
    }
    let mut raw_edges = BTreeSet::new();
    for &(from, to) in arcs {
        let (cf, ct) = (raw_of[from], raw_of[to]);
        if cf != ct {
            raw_edges.insert((cf, ct));
        }
    }

    // Kahn's algorithm, breaking ties by the smallest member node.
    let mut indegree = vec![0usize; raw.len()];
    for &(_, ct) in &raw_edges {
        indegree[ct] += 1;
    }
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..raw.len())
        .filter(|&c| indegree[c] == 0)
        .map(|c| Reverse((raw[c][0], c)))
        .collect();
    let mut order = Vec::with_capacity(raw.len());
    while let Some(Reverse((_, c))) = ready.pop() {
        order.push(c);
        for &(cf, ct) in raw_edges.range((c, 0)..=(c, usize::MAX)) {
            debug_assert_eq!(cf, c);
            indegree[ct] -= 1;
            if indegree[ct] == 0 {
                ready.push(Reverse((raw[ct][0], ct)));
            }
        }
    }
    let mut rank = vec![0; raw.len()];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    let components = order.iter().map(|&c| raw[c].clone()).collect();
    let component_of = raw_of.iter().map(|&c| rank[c]).collect();
    let edges = raw_edges
        .into_iter()
        .map(|(cf, ct)| (rank[cf], rank[ct]))
        .collect();
    SccDecomposition {
        components,
        component_of,
        edges,
    }
}

/// Influence arcs `k -> j` for every `a_jk != 0`.
pub(crate) fn influence_arcs(a: &SignedMatrix) -> Vec<(usize, usize)> {
    let n = a.n();
    let mut arcs = Vec::new();
    for j in 0..n {
        for k in 0..n {
            if a.has_arc(j, k) {
                arcs.push((k, j));
            }
        }
    }
    arcs
}

pub fn strongly_connected_components(a: &SignedMatrix) -> SccDecomposition {
    scc_from_arcs(a.n(), &influence_arcs(a))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RootReport {
    pub qsc: bool,
    pub roots: Vec<usize>,
}

/// A root reaches every node; a graph is QSC iff it has one. The roots are
/// exactly the members of the unique source component, when unique.
pub fn is_quasi_strongly_connected(a: &SignedMatrix) -> RootReport {
    roots_of(&strongly_connected_components(a))
}

pub(crate) fn roots_of(scc: &SccDecomposition) -> RootReport {
    match scc.sources().as_slice() {
        [only] => RootReport {
            qsc: true,
            roots: scc.components[*only].clone(),
        },
        _ => RootReport {
            qsc: false,
            roots: Vec::new(),
        },
    }
}

/// Two hostile camps. `camp1` always holds the lowest-indexed node of each
/// connected piece of the support.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CampPartition {
    pub camp1: Vec<usize>,
    pub camp2: Vec<usize>,
}

impl CampPartition {
    /// Gauge signs: `+1` on camp 1, `-1` on camp 2, `0` elsewhere.
    pub fn signs(&self, n: usize) -> Vec<f64> {
        let mut s = vec![0.0; n];
        for &i in &self.camp1 {
            s[i] = 1.0;
        }
        for &i in &self.camp2 {
            s[i] = -1.0;
        }
        s
    }

    /// Same split up to swapping the camps.
    pub fn same_split(&self, other: &CampPartition) -> bool {
        (self.camp1 == other.camp1 && self.camp2 == other.camp2)
            || (self.camp1 == other.camp2 && self.camp2 == other.camp1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Balance {
    Balanced(CampPartition),
    /// `cycle` lists the nodes of a closed walk on the support whose sign
    /// constraints cannot be met.
    Unbalanced { cycle: Vec<usize> },
}

impl Balance {
    pub fn is_balanced(&self) -> bool {
        matches!(self, Balance::Balanced(_))
    }

    pub fn camps(&self) -> Option<&CampPartition> {
        match self {
            Balance::Balanced(c) => Some(c),
            Balance::Unbalanced { .. } => None,
        }
    }
}

pub fn hostile_camps(a: &SignedMatrix) -> Balance {
    let all: Vec<usize> = (0..a.n()).collect();
    hostile_camps_within(a, &all)
}

/// Balance of the subgraph induced by `nodes`.
pub fn hostile_camps_within(a: &SignedMatrix, nodes: &[usize]) -> Balance {
    let n = a.n();
    let mut member = vec![false; n];
    for &v in nodes {
        member[v] = true;
    }
    let mut color = vec![0i8; n];
    let mut parent = vec![usize::MAX; n];
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();

    for &start in &sorted {
        if color[start] != 0 {
            continue;
        }
        color[start] = 1;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for w in 0..n {
                if w == u || !member[w] {
                    continue;
                }
                let (x, y) = (a.get(u, w), a.get(w, u));
                if x == 0.0 && y == 0.0 {
                    continue;
                }
                if x * y < 0.0 {
                    return Balance::Unbalanced { cycle: vec![u, w] };
                }
                let sign: i8 = if x > 0.0 || y > 0.0 { 1 } else { -1 };
                let want = color[u] * sign;
                if color[w] == 0 {
                    color[w] = want;
                    parent[w] = u;
                    queue.push_back(w);
                } else if color[w] != want {
                    return Balance::Unbalanced {
                        cycle: tree_cycle(&parent, u, w),
                    };
                }
            }
        }
    }
    let camp1 = sorted.iter().copied().filter(|&v| color[v] > 0).collect();
    let camp2 = sorted.iter().copied().filter(|&v| color[v] < 0).collect();
    Balance::Balanced(CampPartition { camp1, camp2 })
}

/// Closes the BFS-tree paths from `u` and `w` at their common ancestor.
fn tree_cycle(parent: &[usize], u: usize, w: usize) -> Vec<usize> {
    let path = |mut v: usize| {
        let mut p = vec![v];
        while parent[v] != usize::MAX {
            v = parent[v];
            p.push(v);
        }
        p
    };
    let pu = path(u);
    let pw = path(w);
    let lca = *pu.iter().find(|v| pw.contains(v)).expect("same BFS tree");
    let mut cycle: Vec<usize> = pu.iter().copied().take_while(|&v| v != lca).collect();
    cycle.push(lca);
    let back: Vec<usize> = pw.iter().copied().take_while(|&v| v != lca).collect();
    cycle.extend(back.into_iter().rev());
    cycle
}

/// Whether every directed cycle has positive weight product. Only defined
/// for digon sign-symmetric strongly connected graphs, where it agrees with
/// [`hostile_camps`]. Works on directed arcs alone: it propagates a sign
/// potential along a DFS tree and checks every arc against it.
pub fn cycle_sign_check(a: &SignedMatrix) -> Result<bool> {
    if !a.is_digon_sign_symmetric() {
        return Err(Error::InvalidInput(
            "cycle sign check needs a digon sign-symmetric graph".into(),
        ));
    }
    if !strongly_connected_components(a).is_strongly_connected() {
        return Err(Error::InvalidInput(
            "cycle sign check needs a strongly connected graph".into(),
        ));
    }
    let n = a.n();
    let mut potential = vec![0i8; n];
    potential[0] = 1;
    let mut stack = vec![0usize];
    while let Some(k) = stack.pop() {
        // arcs k -> j
        for j in 0..n {
            let w = a.get(j, k);
            if w == 0.0 {
                continue;
            }
            let want = potential[k] * if w > 0.0 { 1 } else { -1 };
            if potential[j] == 0 {
                potential[j] = want;
                stack.push(j);
            } else if potential[j] != want {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Every non-empty node set `S` with no arc entering it from outside
/// (`a_jk = 0` for `j` in `S`, `k` outside), as unions of SCCs closed under
/// predecessors. Sorted by size, then lexicographically.
pub fn in_isolated_sets(a: &SignedMatrix) -> Result<Vec<Vec<usize>>> {
    let scc = strongly_connected_components(a);
    let c = scc.components.len();
    if c > MAX_ISB_COMPONENTS {
        return Err(Error::CapExceeded(format!(
            "{c} strongly connected components exceed the ISB search cap of {MAX_ISB_COMPONENTS}"
        )));
    }
    let mut pred_mask = vec![0u32; c];
    for &(from, to) in &scc.edges {
        pred_mask[to] |= 1 << from;
    }
    let mut sets = Vec::new();
    for mask in 1u32..(1u32 << c) {
        let closed = (0..c)
            .filter(|&ci| mask & (1 << ci) != 0)
            .all(|ci| pred_mask[ci] & !mask == 0);
        if closed {
            let mut set: Vec<usize> = (0..c)
                .filter(|&ci| mask & (1 << ci) != 0)
                .flat_map(|ci| scc.components[ci].iter().copied())
                .collect();
            set.sort_unstable();
            sets.push(set);
        }
    }
    sets.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
    Ok(sets)
}

/// An in-isolated set inducing a structurally balanced subgraph, if any.
/// The full node set is preferred when the whole graph is balanced,
/// otherwise the smallest such set is returned.
pub fn has_isb_subgraph(a: &SignedMatrix) -> Result<Option<Vec<usize>>> {
    if hostile_camps(a).is_balanced() {
        return Ok(Some((0..a.n()).collect()));
    }
    Ok(in_isolated_sets(a)?
        .into_iter()
        .find(|s| hostile_camps_within(a, s).is_balanced()))
}

/// Eigenvalues of `L[A]`, sorted by real then imaginary part.
pub fn laplacian_spectrum(a: &SignedMatrix) -> Result<Vec<Complex<f64>>> {
    let n = a.n();
    let l = laplacian(a).entries().clone();
    let schur = nalgebra::linalg::Schur::try_new(l, f64::EPSILON, 10_000 * n).ok_or_else(|| {
        Error::NumericalFailure("Schur decomposition did not converge".into())
    })?;
    let mut eig: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalue".into()));
    }
    eig.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(eig)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HurwitzReport {
    /// Whether `-L[A]` is Hurwitz.
    pub hurwitz: bool,
    /// Spectrum of `L[A]`.
    pub spectrum: Vec<Complex<f64>>,
}

/// `-L[A]` is Hurwitz iff every eigenvalue of `L[A]` has real part `> tol`.
pub fn is_hurwitz(a: &SignedMatrix, tol: f64) -> Result<HurwitzReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Hurwitz tolerance must be positive, got {tol}"
        )));
    }
    let spectrum = laplacian_spectrum(a)?;
    let hurwitz = spectrum.iter().all(|z| z.re > tol);
    Ok(HurwitzReport { hurwitz, spectrum })
}

/// Outcome of the constant protocol read off the graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaticPrediction {
    pub outcome: OutcomeKind,
    pub camps: Option<CampPartition>,
    pub isb_witness: Option<Vec<usize>>,
    pub roots: Vec<usize>,
    /// Right null vector of `L` (camp signs), bipartite cases only.
    pub rho: Option<Vec<f64>>,
    /// Left null vector of `L`, normalized so that `v . rho = 1`.
    pub v: Option<Vec<f64>>,
    pub spectrum: Vec<Complex<f64>>,
}

impl StaticPrediction {
    /// `lim x(t) = rho v^T x0` in the bipartite cases; zero when stabilizing.
    pub fn predicted_limit(&self, x0: &[f64]) -> Option<Vec<f64>> {
        match (self.outcome, &self.rho, &self.v) {
            (OutcomeKind::Stabilizing, _, _) => Some(vec![0.0; x0.len()]),
            (_, Some(rho), Some(v)) => {
                let s: f64 = v.iter().zip(x0).map(|(a, b)| a * b).sum();
                Some(rho.iter().map(|r| r * s).collect())
            }
            _ => None,
        }
    }
}

pub fn static_predict(a: &SignedMatrix) -> Result<StaticPrediction> {
    let spectrum = laplacian_spectrum(a)?;
    let roots = is_quasi_strongly_connected(a);
    let balance = hostile_camps(a);

    let prediction = match balance {
        Balance::Balanced(camps) if roots.qsc => {
            let rho = camps.signs(a.n());
            let v = left_null_vector(a, &rho)?;
            let outcome = if camps.camp2.is_empty() {
                OutcomeKind::Consensus
            } else {
                OutcomeKind::Polarization
            };
            StaticPrediction {
                outcome,
                camps: Some(camps),
                isb_witness: Some((0..a.n()).collect()),
                roots: roots.roots,
                rho: Some(rho),
                v: Some(v),
                spectrum,
            }
        }
        Balance::Balanced(camps) => StaticPrediction {
            outcome: OutcomeKind::NoModulusConsensus,
            camps: Some(camps),
            isb_witness: Some((0..a.n()).collect()),
            roots: roots.roots,
            rho: None,
            v: None,
            spectrum,
        },
        Balance::Unbalanced { .. } => {
            let isb = has_isb_subgraph(a)?;
            let outcome = if isb.is_some() {
                OutcomeKind::NoModulusConsensus
            } else {
                OutcomeKind::Stabilizing
            };
            StaticPrediction {
                outcome,
                camps: None,
                isb_witness: isb,
                roots: roots.roots,
                rho: None,
                v: None,
                spectrum,
            }
        }
    };
    Ok(prediction)
}

fn left_null_vector(a: &SignedMatrix, rho: &[f64]) -> Result<Vec<f64>> {
    let n = a.n();
    let lt = laplacian(a).entries().transpose();
    let scale = lt.amax().max(1.0);
    let svd = lt.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::NumericalFailure("SVD returned no singular vectors".into()))?;
    let (idx, &sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty spectrum");
    if sigma > 1e-8 * scale {
        return Err(Error::NumericalFailure(format!(
            "Laplacian of a balanced graph has no null vector (smallest singular value {sigma:e})"
        )));
    }
    let raw: Vec<f64> = (0..n).map(|i| v_t[(idx, i)]).collect();
    let dot: f64 = raw.iter().zip(rho).map(|(x, r)| x * r).sum();
    if dot.abs() < 1e-12 {
        return Err(Error::NumericalFailure(
            "left null vector is orthogonal to the camp vector".into(),
        ));
    }
    Ok(raw.into_iter().map(|x| x / dot).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> SignedMatrix {
        SignedMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn example1() -> SignedMatrix {
        m(&[&[0.0, -1.0, 0.0], &[-1.0, 0.0, 0.0], &[1.0, 1.0, 0.0]])
    }

    fn negative_cycle() -> SignedMatrix {
        // a12 = a23 = 1, a31 = -1
        m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[-1.0, 0.0, 0.0]])
    }

    fn block_diag() -> SignedMatrix {
        m(&[
            &[0.0, 1.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, -1.0],
            &[0.0, 0.0, -1.0, 0.0],
        ])
    }

    /// Brute-force reachability along influence arcs.
    fn reaches_all(a: &SignedMatrix, root: usize) -> bool {
        let n = a.n();
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(k) = stack.pop() {
            for j in 0..n {
                if a.has_arc(j, k) && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    #[test]
    fn scc_examples() {
        let full = SignedMatrix::from_fn(3, |_, _| 1.0).unwrap();
        assert!(strongly_connected_components(&full).is_strongly_connected());

        let s = strongly_connected_components(&example1());
        assert_eq!(s.components, vec![vec![0, 1], vec![2]]);
        assert_eq!(s.edges, BTreeSet::from([(0, 1)]));

        let s = strongly_connected_components(&block_diag());
        assert_eq!(s.components, vec![vec![0, 1], vec![2, 3]]);
        assert!(s.edges.is_empty());
    }

    #[test]
    fn roots_match_brute_force() {
        let r = is_quasi_strongly_connected(&example1());
        assert!(r.qsc);
        assert_eq!(r.roots, vec![0, 1]);
        let brute: Vec<usize> = (0..3).filter(|&v| reaches_all(&example1(), v)).collect();
        assert_eq!(r.roots, brute);

        let r = is_quasi_strongly_connected(&negative_cycle());
        assert_eq!(r.roots, vec![0, 1, 2]);

        let r = is_quasi_strongly_connected(&block_diag());
        assert!(!r.qsc);
        assert!(r.roots.is_empty());
    }

    #[test]
    fn camps_examples() {
        let pos = SignedMatrix::from_fn(3, |j, k| (j + k) as f64 * 0.5).unwrap();
        assert_eq!(
            hostile_camps(&pos),
            Balance::Balanced(CampPartition { camp1: vec![0, 1, 2], camp2: vec![] })
        );
        let pair = m(&[&[0.0, -1.0], &[-1.0, 0.0]]);
        assert_eq!(
            hostile_camps(&pair),
            Balance::Balanced(CampPartition { camp1: vec![0], camp2: vec![1] })
        );
        match hostile_camps(&example1()) {
            Balance::Unbalanced { cycle } => {
                let set: BTreeSet<_> = cycle.iter().copied().collect();
                assert_eq!(set, BTreeSet::from([0, 1, 2]));
            }
            b => panic!("expected unbalanced, got {b:?}"),
        }
        // components are colored independently, lowest node first
        match hostile_camps(&block_diag()) {
            Balance::Balanced(c) => {
                assert_eq!(c.camp1, vec![0, 1, 2]);
                assert_eq!(c.camp2, vec![3]);
            }
            b => panic!("{b:?}"),
        }
    }

    #[test]
    fn opposite_digon_is_unbalanced() {
        let a = m(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert_eq!(hostile_camps(&a), Balance::Unbalanced { cycle: vec![0, 1] });
    }

    #[test]
    fn cycle_signs() {
        let pos = m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
        assert_eq!(cycle_sign_check(&pos), Ok(true));
        assert_eq!(cycle_sign_check(&negative_cycle()), Ok(false));
        assert_eq!(cycle_sign_check(&m(&[&[0.0, -1.0], &[-1.0, 0.0]])), Ok(true));
        assert!(matches!(cycle_sign_check(&example1()), Err(Error::InvalidInput(_))));
        assert!(matches!(
            cycle_sign_check(&m(&[&[0.0, 1.0], &[-1.0, 0.0]])),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn in_isolated_examples() {
        assert_eq!(in_isolated_sets(&example1()).unwrap(), vec![vec![0, 1], vec![0, 1, 2]]);
        assert_eq!(in_isolated_sets(&negative_cycle()).unwrap(), vec![vec![0, 1, 2]]);
        assert_eq!(
            in_isolated_sets(&block_diag()).unwrap(),
            vec![vec![0, 1], vec![2, 3], vec![0, 1, 2, 3]]
        );
        for a in [example1(), negative_cycle(), block_diag()] {
            for s in in_isolated_sets(&a).unwrap() {
                for &j in &s {
                    for k in (0..a.n()).filter(|k| !s.contains(k)) {
                        assert_eq!(a.get(j, k), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn isb_cap() {
        let z = SignedMatrix::zeros(MAX_ISB_COMPONENTS + 2).unwrap();
        // zero matrix is balanced, so the cap is only hit on the unbalanced path
        assert!(has_isb_subgraph(&z).unwrap().is_some());
        let mut rows = z.to_rows();
        rows[0][1] = 1.0;
        rows[1][0] = -1.0;
        let a = SignedMatrix::from_rows(&rows).unwrap();
        assert!(matches!(in_isolated_sets(&a), Err(Error::CapExceeded(_))));
        assert!(matches!(has_isb_subgraph(&a), Err(Error::CapExceeded(_))));
    }

    #[test]
    fn isb_examples() {
        assert_eq!(has_isb_subgraph(&example1()).unwrap(), Some(vec![0, 1]));
        assert_eq!(has_isb_subgraph(&negative_cycle()).unwrap(), None);
        let pair = m(&[&[0.0, -1.0], &[-1.0, 0.0]]);
        assert_eq!(has_isb_subgraph(&pair).unwrap(), Some(vec![0, 1]));
    }

    #[test]
    fn hurwitz_examples() {
        let h = is_hurwitz(&negative_cycle(), DEFAULT_HURWITZ_TOL).unwrap();
        assert!(h.hurwitz);
        // M = L - I satisfies M^3 = I, so spec(L) = 1 + cube roots of unity
        let expected = [
            Complex::new(0.5, -(3f64.sqrt()) / 2.0),
            Complex::new(0.5, 3f64.sqrt() / 2.0),
            Complex::new(2.0, 0.0),
        ];
        for (z, e) in h.spectrum.iter().zip(expected) {
            assert_relative_eq!(z.re, e.re, epsilon = 1e-12);
            assert_relative_eq!(z.im, e.im, epsilon = 1e-12);
        }
        assert!(!is_hurwitz(&m(&[&[0.0, -1.0], &[-1.0, 0.0]]), 1e-9).unwrap().hurwitz);
        assert!(!is_hurwitz(&example1(), 1e-9).unwrap().hurwitz);
        assert!(is_hurwitz(&example1(), 0.0).is_err());
    }

    #[test]
    fn static_predictions() {
        let p = static_predict(&m(&[&[0.0, -1.0], &[-1.0, 0.0]])).unwrap();
        assert_eq!(p.outcome, OutcomeKind::Polarization);
        assert_eq!(p.rho.as_deref(), Some(&[1.0, -1.0][..]));
        let v = p.v.clone().unwrap();
        assert_relative_eq!(v[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(v[1], -0.5, epsilon = 1e-12);
        let lim = p.predicted_limit(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(lim[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(lim[1], -0.5, epsilon = 1e-12);

        let p = static_predict(&example1()).unwrap();
        assert_eq!(p.outcome, OutcomeKind::NoModulusConsensus);
        assert_eq!(p.isb_witness, Some(vec![0, 1]));

        let p = static_predict(&negative_cycle()).unwrap();
        assert_eq!(p.outcome, OutcomeKind::Stabilizing);
        assert_eq!(p.isb_witness, None);

        let p = static_predict(&SignedMatrix::from_fn(3, |_, _| 1.0).unwrap()).unwrap();
        assert_eq!(p.outcome, OutcomeKind::Consensus);
        for x in p.v.unwrap() {
            assert_relative_eq!(x, 1.0 / 3.0, epsilon = 1e-12);
        }

        // balanced but not QSC
        let p = static_predict(&block_diag()).unwrap();
        assert_eq!(p.outcome, OutcomeKind::NoModulusConsensus);
        assert!(p.rho.is_none());
    }
}
