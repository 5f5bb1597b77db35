//! Signed adjacency matrices, the signed Laplacian, ε-skeletons and
//! piecewise-constant time-varying schedules.
//!
//! Index convention: `a[j][k] != 0` means agent `j` listens to agent `k`,
//! i.e. there is an arc `k -> j`. All indices are zero-based in the API.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible |a_jk| for user-supplied matrices.
pub const MAX_WEIGHT: f64 = 1e6;

/// Dense signed adjacency matrix with zero diagonal and finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedMatrix {
    entries: DMatrix<f64>,
}

impl SignedMatrix {
    /// Builds a matrix from rows, rejecting anything [`validate`] would flag
    /// (digon sign-symmetry is not required).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let report = validate(rows, false);
        if let Some(v) = report.violations.first() {
            return Err(Error::InvalidMatrix(v.to_string()));
        }
        let n = rows.len();
        Ok(Self {
            entries: DMatrix::from_fn(n, n, |j, k| rows[j][k]),
        })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|k| if j == k { 0.0 } else { f(j, k) }).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_fn(n, |_, _| 0.0)
    }

    /// Derived matrices (integrals, gauged copies) skip the weight cap but
    /// keep the structural invariants.
    pub(crate) fn from_dmatrix(entries: DMatrix<f64>) -> Self {
        debug_assert!(entries.is_square());
        debug_assert!((0..entries.nrows()).all(|j| entries[(j, j)] == 0.0));
        debug_assert!(entries.iter().all(|v| v.is_finite()));
        Self { entries }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[(j, k)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|j| (0..self.n()).map(|k| self.get(j, k)).collect())
            .collect()
    }

    /// True iff `j` listens to `k`.
    #[inline]
    pub fn has_arc(&self, j: usize, k: usize) -> bool {
        self.entries[(j, k)] != 0.0
    }

    pub fn abs(&self) -> SignedMatrix {
        Self::from_dmatrix(self.entries.abs())
    }

    /// Induced `|A|_inf`: the largest absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.entries
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|&v| v >= 0.0)
    }

    pub fn is_digon_sign_symmetric(&self) -> bool {
        let n = self.n();
        (0..n).all(|j| (j + 1..n).all(|k| self.get(j, k) * self.get(k, j) >= 0.0))
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> SignedMatrix {
        let n = self.n();
        Self::from_dmatrix(DMatrix::from_fn(n, n, |j, k| {
            if j == k {
                0.0
            } else {
                f(self.get(j, k))
            }
        }))
    }

    pub fn validate(&self, require_digon_symmetry: bool) -> ValidationReport {
        validate(&self.to_rows(), require_digon_symmetry)
    }
}

/// Signed Laplacian: `L_jk = -a_jk` off the diagonal, `L_jj = sum_m |a_jm|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Laplacian {
    entries: DMatrix<f64>,
}

impl Laplacian {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[(j, k)]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.entries * DVector::from_column_slice(x))
            .iter()
            .copied()
            .collect()
    }
}

pub fn laplacian(a: &SignedMatrix) -> Laplacian {
    let n = a.n();
    let mut entries = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = 0.0;
        for k in 0..n {
            if j != k {
                let w = a.get(j, k);
                entries[(j, k)] = -w;
                diag += w.abs();
            }
        }
        entries[(j, j)] = diag;
    }
    Laplacian { entries }
}

/// Keeps the entries with `|a_ij| >= eps`.
pub fn epsilon_skeleton(a: &SignedMatrix, eps: f64) -> Result<SignedMatrix> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "skeleton threshold must be positive, got {eps}"
        )));
    }
    Ok(a.map(|v| if v.abs() >= eps { v } else { 0.0 }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    TooSmall { n: usize },
    NotSquare { row: usize, len: usize, expected: usize },
    Diagonal { index: usize, value: f64 },
    NonFinite { row: usize, col: usize },
    Magnitude { row: usize, col: usize, value: f64 },
    Digon { j: usize, k: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooSmall { n } => write!(f, "need at least 2 agents, got {n}"),
            Violation::NotSquare { row, len, expected } => {
                write!(f, "row [{row}] has {len} entries, expected {expected}")
            }
            Violation::Diagonal { index, value } => {
                write!(f, "diagonal entry [{index}][{index}] is {value}, must be 0")
            }
            Violation::NonFinite { row, col } => write!(f, "entry [{row}][{col}] is not finite"),
            Violation::Magnitude { row, col, value } => {
                write!(f, "entry [{row}][{col}] = {value} exceeds |a| <= {MAX_WEIGHT:e}")
            }
            Violation::Digon { j, k } => {
                write!(f, "opposite arcs [{j}][{k}] and [{k}][{j}] have opposite signs")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every violation of the matrix invariants in `rows`.
pub fn validate(rows: &[Vec<f64>], require_digon_symmetry: bool) -> ValidationReport {
    let n = rows.len();
    let mut violations = Vec::new();
    if n < 2 {
        violations.push(Violation::TooSmall { n });
    }
    for (row, r) in rows.iter().enumerate() {
        if r.len() != n {
            violations.push(Violation::NotSquare {
                row,
                len: r.len(),
                expected: n,
            });
        }
    }
    if !violations.iter().all(|v| matches!(v, Violation::TooSmall { .. })) {
        return ValidationReport { violations };
    }
    for (j, r) in rows.iter().enumerate() {
        for (k, &v) in r.iter().enumerate() {
            if !v.is_finite() {
                violations.push(Violation::NonFinite { row: j, col: k });
            } else if j == k && v != 0.0 {
                violations.push(Violation::Diagonal { index: j, value: v });
            } else if v.abs() > MAX_WEIGHT {
                violations.push(Violation::Magnitude { row: j, col: k, value: v });
            }
        }
    }
    if require_digon_symmetry {
        for j in 0..n {
            for k in j + 1..n {
                if rows[j][k] * rows[k][j] < 0.0 {
                    violations.push(Violation::Digon { j, k });
                }
            }
        }
    }
    ValidationReport { violations }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub matrix: SignedMatrix,
}

/// Piecewise-constant `A(t)`. Non-periodic schedules hold their last matrix
/// past the horizon; periodic ones repeat with period equal to the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    segments: Vec<Segment>,
    periodic: bool,
    labels: Option<Vec<String>>,
}

const PERIOD_MATCH_TOL: f64 = 1e-9;

impl Schedule {
    pub fn new(segments: Vec<Segment>, period: Option<f64>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidSchedule("schedule has no segments".into()))?;
        let n = first.matrix.n();
        if first.t_start != 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "segments[0].t_start must be 0, got {}",
                first.t_start
            )));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.t_start.is_finite() && s.t_end.is_finite()) || s.t_start >= s.t_end {
                return Err(Error::InvalidSchedule(format!(
                    "segments[{i}]: need t_start < t_end, got [{}, {})",
                    s.t_start, s.t_end
                )));
            }
            if s.matrix.n() != n {
                return Err(Error::InvalidSchedule(format!(
                    "segments[{i}].matrix: expected {n}x{n}, got {m}x{m}",
                    m = s.matrix.n()
                )));
            }
            if i > 0 && s.t_start != segments[i - 1].t_end {
                return Err(Error::InvalidSchedule(format!(
                    "segments[{i}].t_start = {} does not continue previous t_end = {}",
                    s.t_start,
                    segments[i - 1].t_end
                )));
            }
        }
        let horizon = segments.last().map(|s| s.t_end).unwrap_or(0.0);
        if let Some(p) = period {
            if !(p > 0.0) || (p - horizon).abs() > PERIOD_MATCH_TOL * p.max(1.0) {
                return Err(Error::InvalidSchedule(format!(
                    "period {p} must be positive and equal the segment span {horizon}"
                )));
            }
        }
        Ok(Self {
            segments,
            periodic: period.is_some(),
            labels: None,
        })
    }

    /// A constant matrix, represented as one held unit segment.
    pub fn constant(matrix: SignedMatrix) -> Self {
        Self {
            segments: vec![Segment {
                t_start: 0.0,
                t_end: 1.0,
                matrix,
            }],
            periodic: false,
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Option<Vec<String>>) -> Self {
        self.labels = labels;
        self
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn n(&self) -> usize {
        self.segments[0].matrix.n()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn period(&self) -> Option<f64> {
        self.periodic.then(|| self.horizon())
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn horizon(&self) -> f64 {
        self.segments[self.segments.len() - 1].t_end
    }

    /// The single matrix when every segment carries the same one.
    pub fn constant_matrix(&self) -> Option<&SignedMatrix> {
        let m = &self.segments[0].matrix;
        self.segments.iter().all(|s| &s.matrix == m).then_some(m)
    }

    /// Matrix that stays in force after the horizon (non-periodic only).
    pub fn tail_matrix(&self) -> Option<&SignedMatrix> {
        (!self.periodic).then(|| &self.segments[self.segments.len() - 1].matrix)
    }

    fn segment_index_at(&self, local: f64) -> usize {
        let idx = self.segments.partition_point(|s| s.t_end <= local);
        idx.min(self.segments.len() - 1)
    }

    pub fn matrix_at(&self, t: f64) -> &SignedMatrix {
        let local = if self.periodic {
            let p = self.horizon();
            t - (t / p).floor() * p
        } else {
            t
        };
        &self.segments[self.segment_index_at(local)].matrix
    }

    /// First time strictly after `t` at which `A` switches to a different
    /// matrix, if any. Boundaries between equal matrices are skipped.
    pub fn next_boundary_after(&self, t: f64) -> Option<f64> {
        let slack = 1e-12 * t.abs().max(1.0);
        let count = self.segments.len();
        let switches = |i: usize| {
            let next = if i + 1 < count {
                Some(&self.segments[i + 1])
            } else if self.periodic {
                Some(&self.segments[0])
            } else {
                None
            };
            next.is_some_and(|s| s.matrix != self.segments[i].matrix)
        };
        if self.periodic {
            let p = self.horizon();
            let q = (t / p).floor();
            for cycle in [q, q + 1.0] {
                for (i, s) in self.segments.iter().enumerate() {
                    let b = cycle * p + s.t_end;
                    if b > t + slack && switches(i) {
                        return Some(b);
                    }
                }
            }
            None
        } else {
            self.segments
                .iter()
                .enumerate()
                .find(|&(i, s)| s.t_end > t + slack && switches(i))
                .map(|(_, s)| s.t_end)
        }
    }

    /// Calls `f(start, end, matrix)` for each constant piece of `[a, b]`.
    pub fn for_each_piece(&self, a: f64, b: f64, mut f: impl FnMut(f64, f64, &SignedMatrix)) {
        if b <= a {
            return;
        }
        if self.periodic {
            let p = self.horizon();
            let mut cycle = (a / p).floor();
            while cycle * p < b {
                let base = cycle * p;
                for s in &self.segments {
                    let lo = (base + s.t_start).max(a);
                    let hi = (base + s.t_end).min(b);
                    if hi > lo {
                        f(lo, hi, &s.matrix);
                    }
                }
                cycle += 1.0;
            }
        } else {
            let start = self.segments.partition_point(|s| s.t_end <= a);
            for s in &self.segments[start..] {
                if s.t_start >= b {
                    break;
                }
                let lo = s.t_start.max(a);
                let hi = s.t_end.min(b);
                if hi > lo {
                    f(lo, hi, &s.matrix);
                }
            }
            let h = self.horizon();
            if b > h {
                f(a.max(h), b, &self.segments[self.segments.len() - 1].matrix);
            }
        }
    }

    pub fn map_matrices(&self, mut f: impl FnMut(&SignedMatrix) -> SignedMatrix) -> Schedule {
        Schedule {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    t_start: s.t_start,
                    t_end: s.t_end,
                    matrix: f(&s.matrix),
                })
                .collect(),
            periodic: self.periodic,
            labels: self.labels.clone(),
        }
    }

    pub fn to_file(&self) -> ScheduleFile {
        ScheduleFile {
            n: self.n(),
            segments: self
                .segments
                .iter()
                .map(|s| SegmentFile {
                    t_start: s.t_start,
                    t_end: s.t_end,
                    matrix: s.matrix.to_rows(),
                })
                .collect(),
            period: self.period(),
            labels: self.labels.clone(),
        }
    }
}

/// `∫_t^{t+T} abs A(s) ds`, exact for piecewise-constant schedules.
pub fn window_integral(schedule: &Schedule, t: f64, window: f64) -> Result<SignedMatrix> {
    if !(t >= 0.0) || !(window > 0.0) || !t.is_finite() || !window.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "window needs t >= 0 and T > 0, got t = {t}, T = {window}"
        )));
    }
    Ok(integrate_abs(schedule, t, t + window))
}

pub(crate) fn integrate_abs(schedule: &Schedule, a: f64, b: f64) -> SignedMatrix {
    integrate_mapped(schedule, a, b, f64::abs)
}

/// `∫_a^b f(A(s)) ds` applied entry-wise.
pub(crate) fn integrate_mapped(
    schedule: &Schedule,
    a: f64,
    b: f64,
    f: impl Fn(f64) -> f64,
) -> SignedMatrix {
    let n = schedule.n();
    let mut acc = DMatrix::zeros(n, n);
    schedule.for_each_piece(a, b, |lo, hi, m| {
        let len = hi - lo;
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    acc[(j, k)] += len * f(m.get(j, k));
                }
            }
        }
    });
    SignedMatrix::from_dmatrix(acc)
}

/// On-disk schedule: `n`, `segments[{t_start, t_end, matrix}]`, optional
/// `period` and `labels`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub n: usize,
    pub segments: Vec<SegmentFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentFile {
    pub t_start: f64,
    pub t_end: f64,
    pub matrix: Vec<Vec<f64>>,
}

impl ScheduleFile {
    pub fn into_schedule(self) -> Result<Schedule> {
        let mut segments = Vec::with_capacity(self.segments.len());
        for (i, s) in self.segments.into_iter().enumerate() {
            if s.matrix.len() != self.n {
                return Err(Error::InvalidSchedule(format!(
                    "segments[{i}].matrix: expected {} rows, got {}",
                    self.n,
                    s.matrix.len()
                )));
            }
            let matrix = SignedMatrix::from_rows(&s.matrix).map_err(|e| {
                Error::InvalidSchedule(format!("segments[{i}].matrix: {}", strip_prefix(&e)))
            })?;
            segments.push(Segment {
                t_start: s.t_start,
                t_end: s.t_end,
                matrix,
            });
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.n {
                return Err(Error::InvalidSchedule(format!(
                    "labels: expected {} names, got {}",
                    self.n,
                    labels.len()
                )));
            }
        }
        Ok(Schedule::new(segments, self.period)?.with_labels(self.labels))
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::InvalidMatrix(m) => m.clone(),
        other => other.to_string(),
    }
}
