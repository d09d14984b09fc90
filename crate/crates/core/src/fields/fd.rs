//! Finite-difference stencils.
//!
//! Weights come from Fornberg's recursion, so central and shifted
//! (one-sided) stencils share one code path. Central weights for the
//! default orders are cached per policy.

use serde::{Deserialize, Serialize};

/// How far a stencil may reach and how accurate it is.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdPolicy {
    /// Accuracy order of the central stencils (2, 4 or 6).
    pub order: usize,
    /// Explicit step. `None` picks `max(1e-4, eps^(1/6) * scale)`.
    pub step: Option<f64>,
}

impl Default for FdPolicy {
    fn default() -> Self {
        Self { order: 4, step: None }
    }
}

impl FdPolicy {
    pub fn with_order(order: usize) -> Self {
        assert!(matches!(order, 2 | 4 | 6), "FD order must be 2, 4 or 6");
        Self { order, step: None }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = Some(step);
        self
    }

    /// Step length for a domain of the given diameter.
    pub fn step_for(&self, scale: f64) -> f64 {
        self.step
            .unwrap_or_else(|| f64::max(1e-4, f64::EPSILON.powf(1.0 / 6.0) * scale))
    }

    /// Half-width of the central stencil, in steps.
    pub fn reach(&self) -> usize {
        self.order / 2
    }
}

/// Fornberg weights for the `m`-th derivative at 0 on the given offsets
/// (in units of the step).
pub fn fornberg(m: usize, offsets: &[f64]) -> Vec<f64> {
    let n = offsets.len();
    assert!(n > m, "stencil too short for derivative order");
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// A one-dimensional stencil: integer offsets and matching weights.
#[derive(Clone, Debug)]
pub struct Stencil {
    pub offsets: Vec<i32>,
    pub weights: Vec<f64>,
}

impl Stencil {
    /// Central stencil of the given accuracy order for derivative `m` (1 or 2).
    pub fn central(m: usize, order: usize) -> Self {
        let k = (order / 2) as i32;
        let offsets: Vec<i32> = (-k..=k).collect();
        Self::from_offsets(m, offsets)
    }

    /// Stencil with the same accuracy as `central(m, order)` whose offsets
    /// all lie in `[min_off, max_off]`. Returns `None` when the window is too
    /// narrow.
    pub fn fitted(m: usize, order: usize, min_off: i32, max_off: i32) -> Option<Self> {
        let k = (order / 2) as i32;
        if min_off <= -k && max_off >= k {
            return Some(Self::central(m, order));
        }
        // A one-sided stencil needs order + m points to keep the central order.
        let len = (order + m) as i32;
        if max_off - min_off + 1 < len {
            return None;
        }
        let start = if min_off > -k { min_off } else { max_off - len + 1 };
        let offsets: Vec<i32> = (start..start + len).collect();
        Some(Self::from_offsets(m, offsets))
    }

    fn from_offsets(m: usize, offsets: Vec<i32>) -> Self {
        let xs: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
        let weights = fornberg(m, &xs);
        Self { offsets, weights }
    }
}
