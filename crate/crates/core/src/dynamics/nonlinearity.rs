//! Registry of monotone coupling nonlinearities `h` with `h(0) = 0`,
//! `h' > 0`, and their divided differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this separation the divided difference switches to `h'`.
pub const DIVIDED_DIFFERENCE_SWITCH: f64 = 1e-8;

const CHECK_GRID_HALF_WIDTH: f64 = 10.0;
const CHECK_GRID_POINTS: usize = 2001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Nonlinearity {
    Identity,
    /// `x + alpha * atan(x)`, `alpha > -1`.
    ArctanLinear { alpha: f64 },
    /// `x + beta * x^3`, `beta >= 0`.
    CubicLinear { beta: f64 },
    Tabulated(MonotoneSpline),
}

impl Nonlinearity {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Nonlinearity::Identity => x,
            Nonlinearity::ArctanLinear { alpha } => x + alpha * x.atan(),
            Nonlinearity::CubicLinear { beta } => x + beta * x * x * x,
            Nonlinearity::Tabulated(s) => s.eval(x),
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Nonlinearity::Identity => 1.0,
            Nonlinearity::ArctanLinear { alpha } => 1.0 + alpha / (1.0 + x * x),
            Nonlinearity::CubicLinear { beta } => 1.0 + 3.0 * beta * x * x,
            Nonlinearity::Tabulated(s) => s.derivative(x),
        }
    }

    /// Checks parameters, then `h(0) = 0` and `h' > 0` with strict increase
    /// on a sample grid over `[-10, 10]`.
    pub fn check(&self) -> Result<()> {
        match self {
            Nonlinearity::ArctanLinear { alpha } if !(*alpha > -1.0) || !alpha.is_finite() => {
                return Err(Error::InvalidParameter(format!(
                    "arctan-linear needs alpha > -1, got {alpha}"
                )))
            }
            Nonlinearity::CubicLinear { beta } if !(*beta >= 0.0) || !beta.is_finite() => {
                return Err(Error::InvalidParameter(format!(
                    "cubic-linear needs beta >= 0, got {beta}"
                )))
            }
            _ => {}
        }
        if self.eval(0.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "nonlinearity must vanish at 0, h(0) = {}",
                self.eval(0.0)
            )));
        }
        let step = 2.0 * CHECK_GRID_HALF_WIDTH / (CHECK_GRID_POINTS - 1) as f64;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..CHECK_GRID_POINTS {
            let x = -CHECK_GRID_HALF_WIDTH + i as f64 * step;
            let (y, d) = (self.eval(x), self.derivative(x));
            if !(d > 0.0) || !(y > prev) || !y.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "nonlinearity is not strictly increasing near x = {x}"
                )));
            }
            prev = y;
        }
        Ok(())
    }
}

/// `H[y, z] = (h(y) - h(z)) / (y - z)`, or `h'` at the midpoint when
/// `|y - z|` is below [`DIVIDED_DIFFERENCE_SWITCH`].
#[inline]
pub fn divided_difference(h: &Nonlinearity, y: f64, z: f64) -> f64 {
    if let Nonlinearity::Identity = h {
        return 1.0;
    }
    let d = y - z;
    if d.abs() < DIVIDED_DIFFERENCE_SWITCH {
        h.derivative(0.5 * (y + z))
    } else {
        (h.eval(y) - h.eval(z)) / d
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes),
/// extended linearly beyond the outer knots. C¹ everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineKnots", into = "SplineKnots")]
pub struct MonotoneSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplineKnots {
    pub knots: Vec<[f64; 2]>,
}

impl TryFrom<SplineKnots> for MonotoneSpline {
    type Error = Error;
    fn try_from(k: SplineKnots) -> Result<Self> {
        MonotoneSpline::new(&k.knots)
    }
}

impl From<MonotoneSpline> for SplineKnots {
    fn from(s: MonotoneSpline) -> Self {
        SplineKnots {
            knots: s.xs.iter().zip(&s.ys).map(|(&x, &y)| [x, y]).collect(),
        }
    }
}

impl MonotoneSpline {
    pub fn new(knots: &[[f64; 2]]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidParameter("spline needs at least 2 knots".into()));
        }
        for w in knots.windows(2) {
            if !(w[1][0] > w[0][0]) || !(w[1][1] > w[0][1]) {
                return Err(Error::InvalidParameter(
                    "spline knots must be strictly increasing in x and y".into(),
                ));
            }
        }
        let xs: Vec<f64> = knots.iter().map(|k| k[0]).collect();
        let ys: Vec<f64> = knots.iter().map(|k| k[1]).collect();
        let m = xs.len();
        let secant: Vec<f64> = (0..m - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; m];
        slopes[0] = secant[0];
        slopes[m - 1] = secant[m - 2];
        for i in 1..m - 1 {
            // harmonic mean keeps slopes positive and inside the monotone region
            slopes[i] = 2.0 / (1.0 / secant[i - 1] + 1.0 / secant[i]);
        }
        for i in 0..m - 1 {
            let (a, b) = (slopes[i] / secant[i], slopes[i + 1] / secant[i]);
            let r = (a * a + b * b).sqrt();
            if r > 3.0 {
                slopes[i] *= 3.0 / r;
                slopes[i + 1] *= 3.0 / r;
            }
        }
        let s = Self { xs, ys, slopes };
        Nonlinearity::Tabulated(s.clone()).check()?;
        Ok(s)
    }

    fn interval(&self, x: f64) -> usize {
        self.xs
            .partition_point(|&k| k <= x)
            .saturating_sub(1)
            .min(self.xs.len() - 2)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let last = self.xs.len() - 1;
        if x <= self.xs[0] {
            return self.ys[0] + self.slopes[0] * (x - self.xs[0]);
        }
        if x >= self.xs[last] {
            return self.ys[last] + self.slopes[last] * (x - self.xs[last]);
        }
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let last = self.xs.len() - 1;
        if x <= self.xs[0] {
            return self.slopes[0];
        }
        if x >= self.xs[last] {
            return self.slopes[last];
        }
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        d00 * self.ys[i] + d10 * self.slopes[i] + d01 * self.ys[i + 1] + d11 * self.slopes[i + 1]
    }
}

/// Per-pair nonlinearities `h_ij`: a default plus explicit overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearitySpec {
    n: usize,
    funcs: Vec<Nonlinearity>,
    table: Vec<usize>,
}

impl NonlinearitySpec {
    pub fn uniform(n: usize, h: Nonlinearity) -> Result<Self> {
        Self::new(n, h, Vec::new())
    }

    /// `overrides` holds `(i, j, h_ij)` with zero-based indices.
    pub fn new(n: usize, default: Nonlinearity, overrides: Vec<(usize, usize, Nonlinearity)>) -> Result<Self> {
        default.check()?;
        let mut funcs = vec![default];
        let mut table = vec![0; n * n];
        for (i, j, h) in overrides {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidParameter(format!(
                    "nonlinearity override for pair ({i}, {j}) is out of range"
                )));
            }
            h.check()?;
            funcs.push(h);
            table[i * n + j] = funcs.len() - 1;
        }
        Ok(Self { n, funcs, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Nonlinearity {
        &self.funcs[self.table[i * self.n + j]]
    }

    pub fn is_identity(&self) -> bool {
        self.funcs.iter().all(|h| matches!(h, Nonlinearity::Identity))
    }
}
