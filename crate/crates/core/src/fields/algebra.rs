//! Sum, product and scaling nodes. Analytic derivatives propagate when every
//! operand has them; Laplacians of sums and multiples stay structural so
//! nested recursions never take more FD layers than they need.

use nalgebra::{DMatrix, DVector};

use super::{FieldFn, Reach, ScalarField};

pub(super) struct Constant {
    pub dim: usize,
    pub c: f64,
}

impl FieldFn for Constant {
    fn value(&self, _x: &[f64]) -> f64 {
        self.c
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn gradient(&self, _x: &[f64]) -> Option<DVector<f64>> {
        Some(DVector::zeros(self.dim))
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn hessian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(self.dim, self.dim))
    }
    fn laplacian(&self) -> Option<ScalarField> {
        Some(ScalarField::zero(self.dim))
    }
}

fn inherit(out: ScalarField, from: &ScalarField, other: Option<&ScalarField>) -> ScalarField {
    let support = from
        .support
        .clone()
        .or_else(|| other.and_then(|o| o.support.clone()));
    out.with_fd(from.fd).with_support_arc(support)
}

struct Sum {
    a: ScalarField,
    b: ScalarField,
    sign: f64,
}

impl FieldFn for Sum {
    fn value(&self, x: &[f64]) -> f64 {
        self.a.value(x) + self.sign * self.b.value(x)
    }
    fn has_gradient(&self) -> bool {
        self.a.inner.has_gradient() && self.b.inner.has_gradient()
    }
    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        Some(self.a.inner.gradient(x)? + self.b.inner.gradient(x)? * self.sign)
    }
    fn has_hessian(&self) -> bool {
        self.a.inner.has_hessian() && self.b.inner.has_hessian()
    }
    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.a.inner.hessian(x)? + self.b.inner.hessian(x)? * self.sign)
    }
    fn laplacian(&self) -> Option<ScalarField> {
        Some(sum(&self.a.laplacian(), &self.b.laplacian(), self.sign))
    }
}

pub(super) fn sum(a: &ScalarField, b: &ScalarField, sign: f64) -> ScalarField {
    let op = if sign > 0.0 { "+" } else { "-" };
    let f = ScalarField::from_fn_impl(
        a.dim,
        format!("({} {op} {})", a.label, b.label),
        Sum {
            a: a.clone(),
            b: b.clone(),
            sign,
        },
    );
    inherit(f, a, Some(b))
}

struct Scale {
    a: ScalarField,
    c: f64,
}

impl FieldFn for Scale {
    fn value(&self, x: &[f64]) -> f64 {
        self.c * self.a.value(x)
    }
    fn has_gradient(&self) -> bool {
        self.a.inner.has_gradient()
    }
    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        Some(self.a.inner.gradient(x)? * self.c)
    }
    fn has_hessian(&self) -> bool {
        self.a.inner.has_hessian()
    }
    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.a.inner.hessian(x)? * self.c)
    }
    fn laplacian(&self) -> Option<ScalarField> {
        Some(scale(&self.a.laplacian(), self.c))
    }
}

pub(super) fn scale(a: &ScalarField, c: f64) -> ScalarField {
    let f = ScalarField::from_fn_impl(
        a.dim,
        format!("{c}·{}", a.label),
        Scale { a: a.clone(), c },
    );
    inherit(f, a, None)
}

struct Product {
    a: ScalarField,
    b: ScalarField,
}

impl FieldFn for Product {
    fn value(&self, x: &[f64]) -> f64 {
        self.a.value(x) * self.b.value(x)
    }
    fn has_gradient(&self) -> bool {
        self.a.inner.has_gradient() && self.b.inner.has_gradient()
    }
    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        let ga = self.a.inner.gradient(x)?;
        let gb = self.b.inner.gradient(x)?;
        Some(ga * self.b.value(x) + gb * self.a.value(x))
    }
    fn has_hessian(&self) -> bool {
        self.has_gradient() && self.a.inner.has_hessian() && self.b.inner.has_hessian()
    }
    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let (va, vb) = (self.a.value(x), self.b.value(x));
        let ga = self.a.inner.gradient(x)?;
        let gb = self.b.inner.gradient(x)?;
        let ha = self.a.inner.hessian(x)?;
        let hb = self.b.inner.hessian(x)?;
        let cross = &ga * gb.transpose();
        Some(ha * vb + hb * va + &cross + cross.transpose())
    }
}

pub(super) fn product(a: &ScalarField, b: &ScalarField) -> ScalarField {
    let f = ScalarField::from_fn_impl(
        a.dim,
        format!("{}·{}", a.label, b.label),
        Product {
            a: a.clone(),
            b: b.clone(),
        },
    );
    inherit(f, a, Some(b))
}

/// Lazy Laplacian by finite differences; stencils shift inward near the edge
/// of the support so coefficient fields stay evaluable up to ∂ω.
pub(super) struct FdLaplacian {
    pub base: ScalarField,
}

impl FieldFn for FdLaplacian {
    fn value(&self, x: &[f64]) -> f64 {
        self.base.fd_laplacian_value(x, Reach::Shift).unwrap_or(f64::NAN)
    }
}

/// Laplacian as the trace of an analytic Hessian.
pub(super) struct HessianTrace {
    pub base: ScalarField,
}

impl FieldFn for HessianTrace {
    fn value(&self, x: &[f64]) -> f64 {
        self.base.inner.hessian(x).map_or(f64::NAN, |h| h.trace())
    }
}
