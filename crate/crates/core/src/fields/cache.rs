use std::f64::consts::PI;

use super::{Bounds, FieldFn, ScalarField};
use crate::error::{Error, Result};

/// Tensor-product Chebyshev interpolant of a field on a box.
///
/// Nodes are first-kind Chebyshev points, so the box faces are never
/// sampled. Evaluation is barycentric in every axis.
pub struct ChebyshevCache {
    lo: Vec<f64>,
    hi: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<f64>,
}

impl ChebyshevCache {
    pub fn build(field: &ScalarField, bounds: &Bounds, n: usize) -> Result<Self> {
        let dim = field.dim();
        if bounds.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: bounds.dim(),
            });
        }
        if !(2..=256).contains(&n) || dim > 3 {
            return Err(Error::InvalidArgument(format!(
                "Chebyshev cache supports 2..=256 nodes and at most 3 axes (got {n} nodes, {dim} axes)"
            )));
        }
        let nodes: Vec<f64> = (0..n)
            .map(|j| ((2 * j + 1) as f64 * PI / (2 * n) as f64).cos())
            .collect();
        let weights: Vec<f64> = (0..n)
            .map(|j| {
                let s = ((2 * j + 1) as f64 * PI / (2 * n) as f64).sin();
                if j % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        let total = n.pow(dim as u32);
        let mut values = Vec::with_capacity(total);
        let mut x = vec![0.0; dim];
        for flat in 0..total {
            let mut rest = flat;
            for (axis, xa) in x.iter_mut().enumerate() {
                let j = rest % n;
                rest /= n;
                let (a, b) = (bounds.lo[axis], bounds.hi[axis]);
                *xa = 0.5 * (a + b) + 0.5 * (b - a) * nodes[j];
            }
            values.push(field.eval(&x)?);
        }
        Ok(Self {
            lo: bounds.lo.clone(),
            hi: bounds.hi.clone(),
            nodes,
            weights,
            values,
        })
    }

    fn axis_coefficients(&self, axis: usize, x: f64) -> Vec<f64> {
        let t = (2.0 * x - self.lo[axis] - self.hi[axis]) / (self.hi[axis] - self.lo[axis]);
        let n = self.nodes.len();
        if let Some(j) = self.nodes.iter().position(|&xj| xj == t) {
            let mut c = vec![0.0; n];
            c[j] = 1.0;
            return c;
        }
        let mut c: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&xj, &wj)| wj / (t - xj))
            .collect();
        let s: f64 = c.iter().sum();
        c.iter_mut().for_each(|v| *v /= s);
        c
    }
}

impl FieldFn for ChebyshevCache {
    fn value(&self, x: &[f64]) -> f64 {
        let n = self.nodes.len();
        let coeffs: Vec<Vec<f64>> = x
            .iter()
            .enumerate()
            .map(|(axis, &v)| self.axis_coefficients(axis, v))
            .collect();
        let mut acc = 0.0;
        for (flat, &v) in self.values.iter().enumerate() {
            let mut rest = flat;
            let mut w = 1.0;
            for c in &coeffs {
                w *= c[rest % n];
                rest /= n;
            }
            acc += w * v;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_field() {
        let f = ScalarField::new(2, "e^x cos y", |x| x[0].exp() * x[1].cos());
        let b = Bounds::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let cached = f.sampled(&b, 20).unwrap();
        for &(a, c) in &[(0.1, 0.2), (0.77, -0.93), (0.5, 0.0)] {
            assert!((cached.value(&[a, c]) - f.value(&[a, c])).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_too_many_axes() {
        let f = ScalarField::zero(4);
        let b = Bounds::new(vec![0.0; 4], vec![1.0; 4]).unwrap();
        assert!(ChebyshevCache::build(&f, &b, 4).is_err());
    }
}
