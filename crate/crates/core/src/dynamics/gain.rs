//! State-dependent coupling gains `F_ij(t, x)` for the nonlinear Laplacian
//! flow.

use crate::signed_graph::SignedMatrix;

/// A gain map `(t, x) -> F(t, x)`. Implementations must be locally bounded
/// on compacts; the diagonal is never queried.
pub trait GainFunction: Send + Sync {
    fn n(&self) -> usize;

    /// `F_ij(t, x)` for `i != j`.
    fn weight(&self, t: f64, x: &[f64], i: usize, j: usize) -> f64;

    /// A matrix `S` with `sgn F = sgn S` and `|S| <= |F| <= c |S|` for all
    /// `(t, x)` and some constant `c`, when the gain admits one.
    fn guaranteed_skeleton(&self) -> Option<SignedMatrix> {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantGain(pub SignedMatrix);

impl GainFunction for ConstantGain {
    fn n(&self) -> usize {
        self.0.n()
    }

    fn weight(&self, _t: f64, _x: &[f64], i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    fn guaranteed_skeleton(&self) -> Option<SignedMatrix> {
        Some(self.0.clone())
    }
}

/// `F_ij = s_ij * (1 + sin²(x_i - x_j))` on a fixed support `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SinSquaredGain {
    pub support: SignedMatrix,
}

impl GainFunction for SinSquaredGain {
    fn n(&self) -> usize {
        self.support.n()
    }

    fn weight(&self, _t: f64, x: &[f64], i: usize, j: usize) -> f64 {
        let s = self.support.get(i, j);
        if s == 0.0 {
            return 0.0;
        }
        let d = (x[i] - x[j]).sin();
        s * (1.0 + d * d)
    }

    fn guaranteed_skeleton(&self) -> Option<SignedMatrix> {
        Some(self.support.clone())
    }
}

/// `F_ij = s_ij * cos(x_i - x_j)`; the sign of each arc follows the state.
#[derive(Clone, Debug, PartialEq)]
pub struct CosineGain {
    pub support: SignedMatrix,
}

impl GainFunction for CosineGain {
    fn n(&self) -> usize {
        self.support.n()
    }

    fn weight(&self, _t: f64, x: &[f64], i: usize, j: usize) -> f64 {
        self.support.get(i, j) * (x[i] - x[j]).cos()
    }
}

/// Wraps a closure as a gain function.
pub struct FnGain<F> {
    n: usize,
    f: F,
}

impl<F> FnGain<F>
where
    F: Fn(f64, &[f64], usize, usize) -> f64 + Send + Sync,
{
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F> GainFunction for FnGain<F>
where
    F: Fn(f64, &[f64], usize, usize) -> f64 + Send + Sync,
{
    fn n(&self) -> usize {
        self.n
    }

    fn weight(&self, t: f64, x: &[f64], i: usize, j: usize) -> f64 {
        (self.f)(t, x, i, j)
    }
}
