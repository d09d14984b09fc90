use nalgebra::{DMatrix, DVector};

use crate::fields::{FieldFn, ScalarField};

/// Polynomial Σ c·x^powers with exact derivatives of every order.
#[derive(Clone, Debug)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<(f64, Vec<u32>)>) -> Self {
        let terms = terms.into_iter().filter(|(c, _)| *c != 0.0).collect();
        Self { dim, terms }
    }

    /// One-variable polynomial from ascending coefficients.
    pub fn from_coeffs(coeffs: &[f64]) -> Self {
        Self::new(
            1,
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| (c, vec![k as u32]))
                .collect(),
        )
    }

    fn derivative(&self, axis: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|(_, p)| p[axis] > 0)
            .map(|(c, p)| {
                let mut q = p.clone();
                q[axis] -= 1;
                (c * p[axis] as f64, q)
            })
            .collect();
        Polynomial::new(self.dim, terms)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, p)| c * p.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn into_field(self, label: impl Into<String>) -> ScalarField {
        let dim = self.dim;
        let grads: Vec<Polynomial> = (0..dim).map(|a| self.derivative(a)).collect();
        let hess: Vec<Vec<Polynomial>> = grads
            .iter()
            .map(|g| (0..dim).map(|b| g.derivative(b)).collect())
            .collect();
        ScalarField::from_fn_impl(dim, label, PolyField { poly: self, grads, hess })
    }
}

struct PolyField {
    poly: Polynomial,
    grads: Vec<Polynomial>,
    hess: Vec<Vec<Polynomial>>,
}

impl FieldFn for PolyField {
    fn value(&self, x: &[f64]) -> f64 {
        self.poly.eval(x)
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        Some(DVector::from_iterator(
            self.grads.len(),
            self.grads.iter().map(|g| g.eval(x)),
        ))
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let n = self.grads.len();
        Some(DMatrix::from_fn(n, n, |i, j| self.hess[i][j].eval(x)))
    }
    fn laplacian(&self) -> Option<ScalarField> {
        let terms = (0..self.poly.dim)
            .flat_map(|a| self.hess[a][a].terms.clone())
            .collect();
        Some(Polynomial::new(self.poly.dim, terms).into_field("Δpoly"))
    }
}
