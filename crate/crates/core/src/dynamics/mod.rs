//! Fixed-step integration of the linear protocol `x' = -L[A(t)] x`, the two
//! additive nonlinear protocols and the nonlinear Laplacian flow.
//!
//! Steps are classic fourth-order Runge-Kutta of length `step`, shortened so
//! that no step straddles a switching time of the schedule. Every step is
//! checked against two properties of the exact flow:
//!
//! * the largest modulus `max_i |x_i|` never increases;
//! * over a constant piece `[t0, t1]` with `|A|_inf <= R` and
//!   `theta = exp(-R (t1 - t0))`,
//!   `|x_k(t)| <= theta |x_k(t0)| + (1 - theta) |x(t0)|_inf`.
//!
//! Both checks allow the RK4 local truncation bound plus a rounding
//! allowance; a violation means the step is too large for the gains.

mod gain;
mod nonlinearity;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

pub use gain::{ConstantGain, CosineGain, FnGain, GainFunction, SinSquaredGain};
pub use nonlinearity::{
    divided_difference, MonotoneSpline, Nonlinearity, NonlinearitySpec, SplineKnots,
    DIVIDED_DIFFERENCE_SWITCH,
};

use crate::error::{Error, Result};
use crate::signed_graph::{laplacian, Schedule, Segment, SignedMatrix};

pub const DEFAULT_STEP: f64 = 1e-3;

/// Bound on `|x' + L[gain] x|_inf` for the additive protocols.
pub const TECH2_RESIDUAL_TOL: f64 = 1e-8;

/// Per-step rounding allowance, relative to the current modulus.
const ROUNDING_SLACK: f64 = 64.0 * f64::EPSILON;

/// Ceiling on the relative truncation allowance, so that a step far outside
/// the stability region of the scheme cannot excuse itself.
const TRUNCATION_CAP: f64 = 1e-6;

/// Fallback horizon when the spectrum gives no decay rate.
pub const DEFAULT_T_END: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub step: f64,
    /// Keep every `record_every`-th state (the final state is always kept).
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_monitor")]
    pub monitor: bool,
}

fn default_record_every() -> usize {
    1
}

fn default_monitor() -> bool {
    true
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            record_every: 1,
            monitor: true,
        }
    }
}

impl IntegratorConfig {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }
}

/// Where the nonlinearity of an additive protocol is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdditiveVariant {
    /// `sum_j |a_ij| (h_ij(x_j sgn a_ij) - h_ij(x_i))`
    NodeEvaluated,
    /// `sum_j |a_ij| h_ij(x_j sgn a_ij - x_i)`
    EdgeEvaluated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpinionState {
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MonitorSummary {
    pub steps: usize,
    /// Largest one-step change of `max_i |x_i|` (non-positive for the exact flow).
    pub max_modulus_increase: f64,
    /// Number of constant pieces checked against the contraction estimate.
    pub theta_windows: usize,
    /// Smallest slack left by the contraction estimate over all checks.
    pub min_theta_margin: f64,
    pub max_tech2_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub protocol: String,
    pub step: f64,
    pub t_end: f64,
    pub scenario_hash: Option<String>,
    pub monitor: MonitorSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub n: usize,
    pub samples: Vec<OpinionState>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn last(&self) -> &OpinionState {
        self.samples.last().expect("trajectory has the initial sample")
    }

    /// State at the first sample with `t >= time`, if any.
    pub fn at(&self, time: f64) -> Option<&OpinionState> {
        let i = self.samples.partition_point(|s| s.t < time);
        self.samples.get(i)
    }

    /// CSV with header `t,x1,...,xN`, 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * (self.n + 1) * 24);
        out.push('t');
        for i in 1..=self.n {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!("{:.16e}", s.t));
            for v in &s.x {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Mirror<'a> {
            n: usize,
            meta: &'a TrajectoryMeta,
            t: Vec<f64>,
            x: Vec<&'a [f64]>,
        }
        let mirror = Mirror {
            n: self.n,
            meta: &self.meta,
            t: self.samples.iter().map(|s| s.t).collect(),
            x: self.samples.iter().map(|s| s.x.as_slice()).collect(),
        };
        serde_json::to_string(&mirror).expect("trajectory serializes")
    }
}

/// Output of a nonlinear run: the trajectory plus the recorded effective
/// gain matrix, one per accepted step, as a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearRun {
    pub trajectory: Trajectory,
    pub gains: Schedule,
}

#[inline]
fn signed(x: f64, w: f64) -> f64 {
    if w > 0.0 {
        x
    } else {
        -x
    }
}

fn rhs_linear_into(a: &SignedMatrix, x: &[f64], out: &mut [f64]) {
    let n = a.n();
    for j in 0..n {
        let mut acc = 0.0;
        for k in 0..n {
            let w = a.get(j, k);
            if w == 0.0 {
                continue;
            }
            acc += w.abs() * (signed(x[k], w) - x[j]);
        }
        out[j] = acc;
    }
}

/// `x'_j = sum_k |a_jk| (x_k sgn a_jk - x_j)`, which equals `-L[A] x`.
pub fn rhs_linear(a: &SignedMatrix, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.n(), x.len(), "dimension mismatch");
    let mut out = vec![0.0; x.len()];
    rhs_linear_into(a, x, &mut out);
    debug_assert!({
        let lx = laplacian(a).apply(x);
        let scale = 1.0 + a.inf_norm() * x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        out.iter()
            .zip(&lx)
            .all(|(f, l)| (f + l).abs() <= 1e-12 * scale)
    });
    out
}

/// `a'_jk = d_j a_jk d_k` for signs `d_i = ±1`.
pub fn gauge_transform(signs: &[f64], a: &SignedMatrix) -> Result<SignedMatrix> {
    check_signs(signs, a.n())?;
    let n = a.n();
    Ok(SignedMatrix::from_dmatrix(DMatrix::from_fn(n, n, |j, k| {
        signs[j] * a.get(j, k) * signs[k]
    })))
}

pub fn gauge_schedule(signs: &[f64], schedule: &Schedule) -> Result<Schedule> {
    check_signs(signs, schedule.n())?;
    Ok(schedule.map_matrices(|m| gauge_transform(signs, m).expect("signs checked")))
}

fn check_signs(signs: &[f64], n: usize) -> Result<()> {
    if signs.len() != n || signs.iter().any(|d| d.abs() != 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gauge needs {n} signs of modulus 1"
        )));
    }
    Ok(())
}

/// `50 / lambda` for the smallest positive real part `lambda` of the
/// spectrum, or [`DEFAULT_T_END`] when there is none.
pub fn default_t_end(spectrum: &[Complex<f64>]) -> f64 {
    spectrum
        .iter()
        .map(|z| z.re)
        .filter(|&re| re > 1e-9)
        .min_by(f64::total_cmp)
        .map(|lambda| 50.0 / lambda)
        .unwrap_or(DEFAULT_T_END)
}

trait Field {
    fn n(&self) -> usize;

    /// Called before each step with the step midpoint.
    fn begin_step(&mut self, _t_mid: f64) {}

    /// Writes `f(t, x)` and returns `|A_eff|_inf` at `(t, x)`.
    fn eval(&mut self, t: f64, x: &[f64], out: &mut [f64]) -> Result<f64>;

    fn gain(&mut self, _t: f64, _x: &[f64]) -> Result<Option<SignedMatrix>> {
        Ok(None)
    }

    fn residual(&mut self, _t: f64, _x: &[f64]) -> Result<Option<f64>> {
        Ok(None)
    }
}

struct LinearField<'a> {
    schedule: &'a Schedule,
    current: &'a SignedMatrix,
    norm: f64,
}

impl Field for LinearField<'_> {
    fn n(&self) -> usize {
        self.schedule.n()
    }

    fn begin_step(&mut self, t_mid: f64) {
        let m = self.schedule.matrix_at(t_mid);
        if !std::ptr::eq(m, self.current) {
            self.current = m;
            self.norm = m.inf_norm();
        }
    }

    fn eval(&mut self, _t: f64, x: &[f64], out: &mut [f64]) -> Result<f64> {
        rhs_linear_into(self.current, x, out);
        Ok(self.norm)
    }
}

struct AdditiveField<'a> {
    schedule: &'a Schedule,
    spec: &'a NonlinearitySpec,
    variant: AdditiveVariant,
    current: &'a SignedMatrix,
    with_norm: bool,
}

impl AdditiveField<'_> {
    #[inline]
    fn pair_gain(&self, h: &Nonlinearity, xi: f64, xj_signed: f64) -> f64 {
        match self.variant {
            AdditiveVariant::NodeEvaluated => divided_difference(h, xj_signed, xi),
            AdditiveVariant::EdgeEvaluated => divided_difference(h, xj_signed - xi, 0.0),
        }
    }

    fn effective_gain(&self, x: &[f64]) -> SignedMatrix {
        let a = self.current;
        let n = a.n();
        SignedMatrix::from_dmatrix(DMatrix::from_fn(n, n, |i, j| {
            let w = a.get(i, j);
            if i == j || w == 0.0 {
                0.0
            } else {
                w * self.pair_gain(self.spec.get(i, j), x[i], signed(x[j], w))
            }
        }))
    }
}

impl Field for AdditiveField<'_> {
    fn n(&self) -> usize {
        self.schedule.n()
    }

    fn begin_step(&mut self, t_mid: f64) {
        self.current = self.schedule.matrix_at(t_mid);
    }

    fn eval(&mut self, _t: f64, x: &[f64], out: &mut [f64]) -> Result<f64> {
        let a = self.current;
        let n = a.n();
        let mut norm = 0.0f64;
        for i in 0..n {
            let mut acc = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                let w = a.get(i, j);
                if w == 0.0 {
                    continue;
                }
                let h = self.spec.get(i, j);
                let xj = signed(x[j], w);
                acc += match self.variant {
                    AdditiveVariant::NodeEvaluated => w.abs() * (h.eval(xj) - h.eval(x[i])),
                    AdditiveVariant::EdgeEvaluated => w.abs() * h.eval(xj - x[i]),
                };
                if self.with_norm {
                    row += w.abs() * self.pair_gain(h, x[i], xj);
                }
            }
            out[i] = acc;
            norm = norm.max(row);
        }
        Ok(norm)
    }

    fn gain(&mut self, _t: f64, x: &[f64]) -> Result<Option<SignedMatrix>> {
        Ok(Some(self.effective_gain(x)))
    }

    fn residual(&mut self, t: f64, x: &[f64]) -> Result<Option<f64>> {
        let mut direct = vec![0.0; x.len()];
        self.eval(t, x, &mut direct)?;
        let via_gain = rhs_linear(&self.effective_gain(x), x);
        Ok(Some(
            direct
                .iter()
                .zip(&via_gain)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())),
        ))
    }
}

struct GainField<'a> {
    f: &'a dyn GainFunction,
}

impl GainField<'_> {
    fn matrix(&self, t: f64, x: &[f64]) -> Result<SignedMatrix> {
        let n = self.f.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = self.f.weight(t, x, i, j);
                if !w.is_finite() {
                    return Err(Error::GainEvaluation {
                        t,
                        detail: format!("F[{i}][{j}] = {w}"),
                    });
                }
                m[(i, j)] = w;
            }
        }
        Ok(SignedMatrix::from_dmatrix(m))
    }
}

impl Field for GainField<'_> {
    fn n(&self) -> usize {
        self.f.n()
    }

    fn eval(&mut self, t: f64, x: &[f64], out: &mut [f64]) -> Result<f64> {
        let a = self.matrix(t, x)?;
        rhs_linear_into(&a, x, out);
        Ok(a.inf_norm())
    }

    fn gain(&mut self, t: f64, x: &[f64]) -> Result<Option<SignedMatrix>> {
        self.matrix(t, x).map(Some)
    }
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Contraction-estimate bookkeeping for one constant piece.
struct ThetaWindow {
    t0: f64,
    t1: f64,
    start_abs: Vec<f64>,
    start_max: f64,
    rate: f64,
    tol: f64,
}

struct Engine<'a> {
    cfg: &'a IntegratorConfig,
    protocol: &'static str,
    /// Next switching time after `t`; `None` means the field is constant
    /// from here on. Ignored when `windows_per_step` is set.
    next_boundary: &'a dyn Fn(f64) -> Option<f64>,
    /// Treat each step as its own constant piece (state-dependent gains).
    windows_per_step: bool,
    record_gains: bool,
}

impl Engine<'_> {
    fn run<F: Field>(
        &self,
        field: &mut F,
        x0: &[f64],
        t_end: f64,
    ) -> Result<(Trajectory, Option<Schedule>)> {
        let n = field.n();
        let h = self.cfg.step;
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidParameter(format!("t_end must be positive, got {t_end}")));
        }
        if self.cfg.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be at least 1".into()));
        }
        if x0.len() != n {
            return Err(Error::InvalidParameter(format!(
                "initial state has {} entries, expected {n}",
                x0.len()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("initial state must be finite".into()));
        }

        let trunc = 10.0 * h.powi(5);
        let snap = 1e-9 * h;
        let mut t = 0.0;
        let mut x = x0.to_vec();
        let mut samples = vec![OpinionState { t, x: x.clone() }];
        let mut gain_segments = Vec::new();
        let mut summary = MonitorSummary {
            max_modulus_increase: f64::NEG_INFINITY,
            min_theta_margin: f64::INFINITY,
            ..MonitorSummary::default()
        };
        let mut window: Option<ThetaWindow> = None;

        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        let mut x_new = vec![0.0; n];
        let mut steps = 0usize;

        while t < t_end {
            let boundary = if self.windows_per_step { None } else { (self.next_boundary)(t) };
            let mut t_next = t + h;
            if let Some(b) = boundary {
                if b <= t_next + snap {
                    t_next = b;
                }
            }
            if t_next >= t_end - snap {
                t_next = t_end;
            }
            let dt = t_next - t;
            field.begin_step(t + 0.5 * dt);

            if let Some(r) = field.residual(t, &x)? {
                let m = summary.max_tech2_residual.get_or_insert(0.0);
                *m = m.max(r);
            }
            let gain_now = if self.record_gains { field.gain(t, &x)? } else { None };

            let r1 = field.eval(t, &x, &mut k1)?;
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * dt * k1[i];
            }
            let r2 = field.eval(t + 0.5 * dt, &tmp, &mut k2)?;
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * dt * k2[i];
            }
            let r3 = field.eval(t + 0.5 * dt, &tmp, &mut k3)?;
            for i in 0..n {
                tmp[i] = x[i] + dt * k3[i];
            }
            let r4 = field.eval(t_next, &tmp, &mut k4)?;
            for i in 0..n {
                x_new[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if x_new.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { t: t_next });
            }

            if self.cfg.monitor {
                let rate = r1.max(r2).max(r3).max(r4);
                let m_old = max_abs(&x);
                let m_new = max_abs(&x_new);
                let step_tol =
                    ((trunc * (2.0 * rate).powi(5)).min(TRUNCATION_CAP) + ROUNDING_SLACK) * m_old;
                summary.max_modulus_increase = summary.max_modulus_increase.max(m_new - m_old);
                if m_new > m_old + step_tol {
                    return Err(Error::IntegratorInstability {
                        t: t_next,
                        detail: format!(
                            "max modulus grew from {m_old:e} to {m_new:e} (allowed {step_tol:e})"
                        ),
                    });
                }

                let w = window.get_or_insert_with(|| ThetaWindow {
                    t0: t,
                    t1: if self.windows_per_step {
                        t_next
                    } else {
                        boundary.map_or(t_end, |b| b.min(t_end))
                    },
                    start_abs: x.iter().map(|v| v.abs()).collect(),
                    start_max: m_old,
                    rate: 0.0,
                    tol: 0.0,
                });
                w.rate = w.rate.max(rate);
                w.tol += step_tol;
                let theta = (-w.rate * (w.t1 - w.t0)).exp();
                for k in 0..n {
                    let bound = theta * w.start_abs[k] + (1.0 - theta) * w.start_max;
                    let margin = bound + w.tol - x_new[k].abs();
                    summary.min_theta_margin = summary.min_theta_margin.min(margin);
                    if margin < 0.0 {
                        return Err(Error::IntegratorInstability {
                            t: t_next,
                            detail: format!(
                                "|x_{}| = {:e} exceeds contraction bound {bound:e} on [{}, {}]",
                                k + 1,
                                x_new[k].abs(),
                                w.t0,
                                w.t1
                            ),
                        });
                    }
                }
                if t_next >= w.t1 {
                    window = None;
                    summary.theta_windows += 1;
                }
            }

            if let Some(g) = gain_now {
                gain_segments.push(Segment {
                    t_start: t,
                    t_end: t_next,
                    matrix: g,
                });
            }
            std::mem::swap(&mut x, &mut x_new);
            t = t_next;
            steps += 1;
            if steps % self.cfg.record_every == 0 || t >= t_end {
                samples.push(OpinionState { t, x: x.clone() });
            }
        }
        if window.is_some() {
            summary.theta_windows += 1;
        }
        summary.steps = steps;

        let gains = if self.record_gains {
            Some(Schedule::new(gain_segments, None)?)
        } else {
            None
        };
        let trajectory = Trajectory {
            n,
            samples,
            meta: TrajectoryMeta {
                protocol: self.protocol.to_string(),
                step: h,
                t_end,
                scenario_hash: None,
                monitor: summary,
            },
        };
        Ok((trajectory, gains))
    }
}

/// Integrates the linear protocol over a piecewise-constant schedule.
pub fn integrate(
    schedule: &Schedule,
    x0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let current = schedule.matrix_at(0.0);
    let mut field = LinearField {
        schedule,
        current,
        norm: current.inf_norm(),
    };
    let next = |t: f64| schedule.next_boundary_after(t);
    let engine = Engine {
        cfg,
        protocol: "linear",
        next_boundary: &next,
        windows_per_step: false,
        record_gains: false,
    };
    Ok(engine.run(&mut field, x0, t_end)?.0)
}

/// Integrates an additive nonlinear protocol and records its effective gain
/// matrix `a_ij * H_ij[...]`, under which `x' = -L[gain] x`.
pub fn integrate_nonlinear_additive(
    schedule: &Schedule,
    spec: &NonlinearitySpec,
    x0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
    variant: AdditiveVariant,
) -> Result<NonlinearRun> {
    if spec.n() != schedule.n() {
        return Err(Error::InvalidParameter(format!(
            "nonlinearity spec is for {} agents, schedule has {}",
            spec.n(),
            schedule.n()
        )));
    }
    let mut field = AdditiveField {
        schedule,
        spec,
        variant,
        current: schedule.matrix_at(0.0),
        with_norm: cfg.monitor,
    };
    let next = |t: f64| schedule.next_boundary_after(t);
    let engine = Engine {
        cfg,
        protocol: match variant {
            AdditiveVariant::NodeEvaluated => "nonlinear-additive-node",
            AdditiveVariant::EdgeEvaluated => "nonlinear-additive-edge",
        },
        next_boundary: &next,
        windows_per_step: false,
        record_gains: true,
    };
    let (trajectory, gains) = engine.run(&mut field, x0, t_end)?;
    Ok(NonlinearRun {
        trajectory,
        gains: gains.expect("gains recorded"),
    })
}

/// Integrates `x_i' = sum_j |F_ij(t,x)| (x_j sgn F_ij(t,x) - x_i)` with `F`
/// evaluated at every stage, recording `F(t_m, x_m)` per step.
pub fn integrate_gain_flow(
    f: &dyn GainFunction,
    x0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<NonlinearRun> {
    let mut field = GainField { f };
    let next = |_: f64| None;
    let engine = Engine {
        cfg,
        protocol: "gain-flow",
        next_boundary: &next,
        windows_per_step: true,
        record_gains: true,
    };
    let (trajectory, gains) = engine.run(&mut field, x0, t_end)?;
    Ok(NonlinearRun {
        trajectory,
        gains: gains.expect("gains recorded"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> SignedMatrix {
        SignedMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn pair() -> SignedMatrix {
        m(&[&[0.0, -1.0], &[-1.0, 0.0]])
    }

    fn chain() -> SignedMatrix {
        m(&[&[0.0, -1.0, 0.0], &[-1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]])
    }

    fn example2() -> Schedule {
        let t0 = 3f64.ln();
        let a = m(&[&[0.0, -1.0, 0.0], &[-1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        let b = m(&[&[0.0, -1.0, 0.0], &[-1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        Schedule::new(
            vec![
                Segment { t_start: 0.0, t_end: t0, matrix: a },
                Segment { t_start: t0, t_end: 2.0 * t0, matrix: b },
            ],
            Some(2.0 * t0),
        )
        .unwrap()
    }

    #[test]
    fn rhs_examples() {
        assert_eq!(rhs_linear(&pair(), &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(rhs_linear(&pair(), &[1.0, -1.0]), vec![0.0, 0.0]);
        let a = example2().segments()[0].matrix.clone();
        assert_eq!(rhs_linear(&a, &[1.0, -1.0, -0.5]), vec![0.0, 0.0, 1.5]);
    }

    #[test]
    fn antagonistic_pair_limit() {
        // exp(-Lt) = I - L (1 - e^{-2t}) / 2
        let s = Schedule::constant(pair());
        let (a, b) = (0.8, -0.3);
        let traj = integrate(&s, &[a, b], 30.0, &IntegratorConfig::default()).unwrap();
        let x = &traj.last().x;
        assert_relative_eq!(x[0], (a - b) / 2.0, epsilon = 1e-6);
        assert_relative_eq!(x[1], (b - a) / 2.0, epsilon = 1e-6);
        // closed form mid-run
        let mid = traj.at(0.5).unwrap();
        let decay = (1.0 - (-2.0 * mid.t).exp()) / 2.0;
        assert_relative_eq!(mid.x[0], a - (a + b) * decay, epsilon = 1e-10);
    }

    #[test]
    fn example2_is_periodic() {
        let t0 = 3f64.ln();
        let traj = integrate(&example2(), &[1.0, -1.0, -0.5], 2.0 * t0, &IntegratorConfig::default())
            .unwrap();
        let at = |time: f64| {
            traj.samples
                .iter()
                .find(|s| (s.t - time).abs() < 1e-12)
                .expect("boundary is a sample")
        };
        assert_relative_eq!(at(t0).x[2], 0.5, epsilon = 1e-9);
        assert_relative_eq!(at(2.0 * t0).x[2], -0.5, epsilon = 1e-9);
        for s in &traj.samples {
            assert_eq!(s.x[0], 1.0);
            assert_eq!(s.x[1], -1.0);
        }
    }

    #[test]
    fn chain_limit_preserves_gauged_average() {
        let x0 = [0.3, -0.7, 1.1];
        let c = (-x0[0] + x0[1] + x0[2]) / 3.0;
        let traj = integrate(&Schedule::constant(chain()), &x0, 40.0, &IntegratorConfig::default())
            .unwrap();
        let x = &traj.last().x;
        assert_relative_eq!(x[0], -c, epsilon = 1e-6);
        assert_relative_eq!(x[1], c, epsilon = 1e-6);
        assert_relative_eq!(x[2], c, epsilon = 1e-6);
    }

    #[test]
    fn gauge_examples() {
        let a = chain();
        assert_eq!(gauge_transform(&[1.0, 1.0, 1.0], &a).unwrap(), a);
        let g = gauge_transform(&[1.0, -1.0], &pair()).unwrap();
        assert!(g.is_nonnegative());
        assert!(gauge_transform(&[1.0, 0.5], &pair()).is_err());
        assert!(gauge_transform(&[1.0], &pair()).is_err());
    }

    #[test]
    fn gauge_conjugates_trajectories() {
        let d = [1.0, -1.0, -1.0];
        let s = example2();
        let x0 = [0.4, 0.1, -0.9];
        let dx0: Vec<f64> = x0.iter().zip(&d).map(|(x, s)| x * s).collect();
        let cfg = IntegratorConfig::default();
        let plain = integrate(&s, &x0, 3.0, &cfg).unwrap();
        let gauged = integrate(&gauge_schedule(&d, &s).unwrap(), &dx0, 3.0, &cfg).unwrap();
        assert_eq!(plain.samples.len(), gauged.samples.len());
        for (p, g) in plain.samples.iter().zip(&gauged.samples) {
            for i in 0..3 {
                assert!((d[i] * p.x[i] - g.x[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let traj = integrate(&example2(), &[0.0; 3], 5.0, &IntegratorConfig::default()).unwrap();
        assert!(traj.samples.iter().all(|s| s.x.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn parameter_errors() {
        let s = Schedule::constant(pair());
        let cfg = IntegratorConfig::default();
        assert!(integrate(&s, &[1.0, 0.0], 0.0, &cfg).is_err());
        assert!(integrate(&s, &[1.0], 1.0, &cfg).is_err());
        assert!(integrate(&s, &[f64::NAN, 0.0], 1.0, &cfg).is_err());
        assert!(integrate(&s, &[1.0, 0.0], 1.0, &IntegratorConfig::with_step(0.0)).is_err());
    }

    #[test]
    fn oversized_step_trips_monitor() {
        let big = m(&[&[0.0, 50.0], &[50.0, 0.0]]);
        let err = integrate(&Schedule::constant(big), &[1.0, -1.0], 5.0, &IntegratorConfig::with_step(0.1))
            .unwrap_err();
        assert!(matches!(err, Error::IntegratorInstability { .. }), "{err:?}");
    }

    #[test]
    fn diverging_state_is_reported_without_monitor() {
        let big = m(&[&[0.0, 50.0], &[50.0, 0.0]]);
        let cfg = IntegratorConfig { step: 0.1, record_every: 1, monitor: false };
        let err = integrate(&Schedule::constant(big), &[1.0, -1.0], 2000.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err:?}");
    }

    #[test]
    fn identity_nonlinearity_is_bit_compatible() {
        let s = example2();
        let spec = NonlinearitySpec::uniform(3, Nonlinearity::Identity).unwrap();
        let cfg = IntegratorConfig::default();
        let x0 = [0.9, -0.2, 0.4];
        let lin = integrate(&s, &x0, 4.0, &cfg).unwrap();
        for variant in [AdditiveVariant::NodeEvaluated, AdditiveVariant::EdgeEvaluated] {
            let run = integrate_nonlinear_additive(&s, &spec, &x0, 4.0, &cfg, variant).unwrap();
            assert_eq!(run.trajectory.samples, lin.samples);
        }
    }

    #[test]
    fn constant_gain_matches_linear() {
        let cfg = IntegratorConfig::default();
        let x0 = [0.1, 0.5, -0.8];
        let lin = integrate(&Schedule::constant(chain()), &x0, 3.0, &cfg).unwrap();
        let run = integrate_gain_flow(&ConstantGain(chain()), &x0, 3.0, &cfg).unwrap();
        assert_eq!(run.trajectory.samples, lin.samples);
        assert_eq!(run.gains.segments().len(), run.trajectory.meta.monitor.steps);
    }

    #[test]
    fn non_finite_gain_is_an_error() {
        let f = FnGain::new(2, |t, _x: &[f64], _i, _j| if t > 0.5 { f64::NAN } else { 1.0 });
        let err = integrate_gain_flow(&f, &[1.0, 0.0], 1.0, &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(err, Error::GainEvaluation { .. }), "{err:?}");
    }

    #[test]
    fn gain_trace_keeps_sign_pattern() {
        let s = example2();
        let spec = NonlinearitySpec::uniform(3, Nonlinearity::CubicLinear { beta: 1.0 }).unwrap();
        let run = integrate_nonlinear_additive(
            &s,
            &spec,
            &[1.0, -0.5, 0.2],
            3.0,
            &IntegratorConfig::default(),
            AdditiveVariant::NodeEvaluated,
        )
        .unwrap();
        // |x| <= 1, so H lies in [1, 1 + 3 * 2^2] on the reachable box
        for seg in run.gains.segments() {
            let a = s.matrix_at(0.5 * (seg.t_start + seg.t_end));
            for i in 0..3 {
                for j in 0..3 {
                    let (w, g) = (a.get(i, j), seg.matrix.get(i, j));
                    assert_eq!(w.signum() * (w != 0.0) as i32 as f64, g.signum() * (g != 0.0) as i32 as f64);
                    if w != 0.0 {
                        assert!(g.abs() >= w.abs() && g.abs() <= 13.0 * w.abs());
                    }
                }
            }
        }
        assert!(run.trajectory.meta.monitor.max_tech2_residual.unwrap() < TECH2_RESIDUAL_TOL);
    }

    #[test]
    fn csv_and_json_exports() {
        let traj = integrate(&Schedule::constant(pair()), &[1.0, 0.0], 0.002, &IntegratorConfig::default())
            .unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x1,x2"));
        assert_eq!(lines.next(), Some("0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0"));
        assert_eq!(csv.lines().count(), 4);
        let v: serde_json::Value = serde_json::from_str(&traj.to_json()).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["t"].as_array().unwrap().len(), 3);
        assert_eq!(v["meta"]["protocol"], "linear");
    }

    #[test]
    fn record_stride_keeps_final_state() {
        let cfg = IntegratorConfig { step: 1e-3, record_every: 7, monitor: true };
        let traj = integrate(&Schedule::constant(pair()), &[1.0, 0.0], 1.0, &cfg).unwrap();
        assert_eq!(traj.last().t, 1.0);
        assert_eq!(traj.samples.len(), 1 + 1000 / 7 + 1);
    }

    #[test]
    fn default_horizon() {
        assert_eq!(default_t_end(&[Complex::new(0.0, 0.0), Complex::new(2.0, 1.0)]), 25.0);
        assert_eq!(default_t_end(&[Complex::new(0.0, 0.0)]), DEFAULT_T_END);
    }
}
