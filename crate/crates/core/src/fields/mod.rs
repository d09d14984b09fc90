//! Scalar fields over the cross-section with value, gradient, Hessian and
//! Laplacian access.
//!
//! A [`ScalarField`] wraps an immutable evaluator. Derivatives come from
//! analytic callables when the evaluator supplies them, otherwise from
//! central finite differences governed by an [`FdPolicy`]. Laplacians are
//! lazy: `f.laplacian().laplacian()` is a new field that differentiates on
//! demand and memoizes nothing.

use std::fmt;
use std::ops::{Add, Deref, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

mod algebra;
mod cache;
pub mod fd;

pub use cache::ChebyshevCache;
pub use fd::{FdPolicy, Stencil};

/// A point of the cross-section (the coordinates x′).
#[derive(Clone, Debug, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Self(vec![x])
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

/// Axis-aligned box. FD stencils of fields carrying a support box never
/// sample outside it.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "box corners must have equal positive length, got {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::InvalidArgument(format!("degenerate box {lo:?} .. {hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }
}

/// Evaluator behind a [`ScalarField`].
///
/// `value` must be deterministic and side-effect free. Failures (points
/// outside the natural domain) are reported as non-finite values.
pub trait FieldFn: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    fn has_gradient(&self) -> bool {
        false
    }

    fn gradient(&self, _x: &[f64]) -> Option<DVector<f64>> {
        None
    }

    fn has_hessian(&self) -> bool {
        false
    }

    fn hessian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Analytic Laplacian, if the evaluator knows one.
    fn laplacian(&self) -> Option<ScalarField> {
        None
    }
}

/// Which derivative path a field uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeStrategy {
    Analytic,
    FiniteDifference,
}

/// How a stencil near the edge of the support is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Reach {
    /// Central stencils only; leaving the support is an error.
    Strict,
    /// Shift stencils inward near the support edge.
    Shift,
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;
type HessFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// A real-valued function on the cross-section.
#[derive(Clone)]
pub struct ScalarField {
    inner: Arc<dyn FieldFn>,
    dim: usize,
    label: Arc<str>,
    fd: FdPolicy,
    support: Option<Arc<Bounds>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("strategy", &self.strategy())
            .finish()
    }
}

impl ScalarField {
    /// Wraps an evaluator.
    pub fn from_fn_impl(dim: usize, label: impl Into<String>, inner: impl FieldFn + 'static) -> Self {
        Self {
            inner: Arc::new(inner),
            dim,
            label: Arc::from(label.into()),
            fd: FdPolicy::default(),
            support: None,
        }
    }

    /// Field with finite-difference derivatives only.
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::from_fn_impl(dim, label, Closure { f: Box::new(f) })
    }

    /// Starts a field with analytic derivative callables.
    pub fn analytic(
        dim: usize,
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> AnalyticBuilder {
        AnalyticBuilder {
            dim,
            label: label.into(),
            value: Box::new(f),
            gradient: None,
            hessian: None,
            laplacian: None,
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::from_fn_impl(dim, format!("{c}"), algebra::Constant { dim, c })
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(dim, 0.0)
    }

    /// Replaces the FD policy.
    pub fn with_fd(mut self, fd: FdPolicy) -> Self {
        self.fd = fd;
        self
    }

    /// Attaches a support box that FD stencils must stay inside.
    pub fn with_support(mut self, support: Bounds) -> Self {
        self.support = Some(Arc::new(support));
        self
    }

    pub(crate) fn with_support_arc(mut self, support: Option<Arc<Bounds>>) -> Self {
        self.support = support;
        self
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = Arc::from(label.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn fd_policy(&self) -> FdPolicy {
        self.fd
    }

    pub fn support(&self) -> Option<&Bounds> {
        self.support.as_deref()
    }

    pub fn strategy(&self) -> DerivativeStrategy {
        if self.inner.has_gradient() {
            DerivativeStrategy::Analytic
        } else {
            DerivativeStrategy::FiniteDifference
        }
    }

    /// FD step used by this field.
    pub fn step(&self) -> f64 {
        let scale = self.support.as_ref().map_or(1.0, |b| b.diameter());
        self.fd.step_for(scale)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Unchecked evaluation used on hot paths.
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x)
    }

    /// Evaluates the field, checking the dimension and finiteness.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let v = self.inner.value(x);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                field: self.label.to_string(),
                at: x.to_vec(),
            });
        }
        Ok(v)
    }

    /// Gradient: analytic if available, else central differences.
    pub fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        match self.inner.gradient(x) {
            Some(g) => Ok(g),
            None => self.fd_gradient_with(x, Reach::Strict),
        }
    }

    /// Hessian: analytic if available, else symmetrized central differences.
    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        match self.inner.hessian(x) {
            Some(h) => Ok(h),
            None => self.fd_hessian_with(x, Reach::Strict),
        }
    }

    /// Gradient by finite differences regardless of analytic availability.
    pub fn fd_gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        self.fd_gradient_with(x, Reach::Strict)
    }

    /// Hessian by finite differences regardless of analytic availability.
    pub fn fd_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        self.fd_hessian_with(x, Reach::Strict)
    }

    /// Gradient that shifts stencils inward near the support edge.
    pub(crate) fn gradient_near_edge(&self, x: &[f64]) -> Result<DVector<f64>> {
        match self.inner.gradient(x) {
            Some(g) => Ok(g),
            None => self.fd_gradient_with(x, Reach::Shift),
        }
    }

    pub(crate) fn hessian_near_edge(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match self.inner.hessian(x) {
            Some(h) => Ok(h),
            None => self.fd_hessian_with(x, Reach::Shift),
        }
    }

    /// The Laplacian as a new lazy field.
    ///
    /// Resolution order: analytic Laplacian, trace of the analytic Hessian,
    /// finite differences.
    pub fn laplacian(&self) -> ScalarField {
        if let Some(l) = self.inner.laplacian() {
            return l;
        }
        let label = format!("Δ({})", self.label);
        let lap = if self.inner.has_hessian() {
            Self::from_fn_impl(self.dim, label, algebra::HessianTrace { base: self.clone() })
        } else {
            Self::from_fn_impl(self.dim, label, algebra::FdLaplacian { base: self.clone() })
        };
        lap.with_fd(self.fd).with_support_arc(self.support.clone())
    }

    /// Laplacian value at a point.
    pub fn laplacian_at(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.laplacian().eval(x)
    }

    /// Third-order sums `∇(Δf)(x) / 6`.
    ///
    /// Component m equals Σ_k f_kkm where f_ijk are the symmetric cubic
    /// Taylor coefficients of f at x.
    pub fn third_order_sums(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(self.laplacian().gradient(x)? / 6.0)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        algebra::scale(self, c)
    }

    pub fn powi(&self, k: u32) -> ScalarField {
        (0..k).fold(ScalarField::constant(self.dim, 1.0), |acc, _| &acc * self)
    }

    /// Opt-in tensor Chebyshev sample cache of this field on `bounds`.
    pub fn sampled(&self, bounds: &Bounds, nodes_per_axis: usize) -> Result<ScalarField> {
        let cache = ChebyshevCache::build(self, bounds, nodes_per_axis)?;
        Ok(
            Self::from_fn_impl(self.dim, format!("cached({})", self.label), cache)
                .with_fd(self.fd)
                .with_support(bounds.clone()),
        )
    }

    fn axis_stencil(&self, x: &[f64], axis: usize, m: usize, h: f64, reach: Reach) -> Result<Stencil> {
        let k = self.fd.reach() as i32;
        let Some(b) = self.support.as_deref() else {
            return Ok(Stencil::central(m, self.fd.order));
        };
        // Offsets whose nodes stay inside the closed support, with a hair of slack
        // so rounding never places a node outside.
        let left = ((x[axis] - b.lo[axis]) / h - 1e-9).floor() as i32;
        let right = ((b.hi[axis] - x[axis]) / h - 1e-9).floor() as i32;
        let exits = Error::StencilExits {
            field: self.label.to_string(),
            axis,
            coord: x[axis],
        };
        if left >= k && right >= k {
            return Ok(Stencil::central(m, self.fd.order));
        }
        match reach {
            Reach::Strict => Err(exits),
            Reach::Shift => Stencil::fitted(m, self.fd.order, -left.max(0), right.max(0)).ok_or(exits),
        }
    }

    pub(crate) fn fd_gradient_with(&self, x: &[f64], reach: Reach) -> Result<DVector<f64>> {
        let h = self.step();
        let mut g = DVector::zeros(self.dim);
        let mut y = x.to_vec();
        for axis in 0..self.dim {
            let st = self.axis_stencil(x, axis, 1, h, reach)?;
            let mut acc = 0.0;
            for (&o, &w) in st.offsets.iter().zip(&st.weights) {
                if w == 0.0 {
                    continue;
                }
                y[axis] = x[axis] + o as f64 * h;
                acc += w * self.inner.value(&y);
            }
            y[axis] = x[axis];
            g[axis] = acc / h;
        }
        Ok(g)
    }

    pub(crate) fn fd_second(&self, x: &[f64], axis: usize, reach: Reach) -> Result<f64> {
        let h = self.step();
        let st = self.axis_stencil(x, axis, 2, h, reach)?;
        let mut y = x.to_vec();
        let mut acc = 0.0;
        for (&o, &w) in st.offsets.iter().zip(&st.weights) {
            y[axis] = x[axis] + o as f64 * h;
            acc += w * self.inner.value(&y);
        }
        Ok(acc / (h * h))
    }

    pub(crate) fn fd_hessian_with(&self, x: &[f64], reach: Reach) -> Result<DMatrix<f64>> {
        let n = self.dim;
        let h = self.step();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.fd_second(x, i, reach)?;
        }
        let mut y = x.to_vec();
        for i in 0..n {
            let si = self.axis_stencil(x, i, 1, h, reach)?;
            for j in (i + 1)..n {
                let sj = self.axis_stencil(x, j, 1, h, reach)?;
                let mut acc = 0.0;
                for (&oi, &wi) in si.offsets.iter().zip(&si.weights) {
                    if wi == 0.0 {
                        continue;
                    }
                    for (&oj, &wj) in sj.offsets.iter().zip(&sj.weights) {
                        if wj == 0.0 {
                            continue;
                        }
                        y[i] = x[i] + oi as f64 * h;
                        y[j] = x[j] + oj as f64 * h;
                        acc += wi * wj * self.inner.value(&y);
                    }
                }
                y[i] = x[i];
                y[j] = x[j];
                let v = acc / (h * h);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }

    pub(crate) fn fd_laplacian_value(&self, x: &[f64], reach: Reach) -> Result<f64> {
        (0..self.dim).try_fold(0.0, |acc, axis| Ok(acc + self.fd_second(x, axis, reach)?))
    }
}

struct Closure {
    f: Box<ValueFn>,
}

impl FieldFn for Closure {
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Builder for fields with analytic derivatives.
pub struct AnalyticBuilder {
    dim: usize,
    label: String,
    value: Box<ValueFn>,
    gradient: Option<Box<GradFn>>,
    hessian: Option<Box<HessFn>>,
    laplacian: Option<ScalarField>,
}

impl AnalyticBuilder {
    pub fn gradient(mut self, g: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Box::new(g));
        self
    }

    pub fn hessian(mut self, h: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Box::new(h));
        self
    }

    pub fn laplacian(mut self, lap: ScalarField) -> Self {
        self.laplacian = Some(lap);
        self
    }

    pub fn build(self) -> ScalarField {
        let dim = self.dim;
        let label = self.label.clone();
        ScalarField::from_fn_impl(
            dim,
            label,
            Analytic {
                value: self.value,
                gradient: self.gradient,
                hessian: self.hessian,
                laplacian: self.laplacian,
            },
        )
    }
}

struct Analytic {
    value: Box<ValueFn>,
    gradient: Option<Box<GradFn>>,
    hessian: Option<Box<HessFn>>,
    laplacian: Option<ScalarField>,
}

impl FieldFn for Analytic {
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }
    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }
    fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }
    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        self.hessian.as_ref().map(|h| h(x))
    }
    fn laplacian(&self) -> Option<ScalarField> {
        self.laplacian.clone()
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        algebra::sum(self, rhs, 1.0)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        algebra::sum(self, rhs, -1.0)
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        algebra::product(self, rhs)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, c: f64) -> ScalarField {
        algebra::scale(self, c)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        algebra::scale(self, -1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ScalarField {
        ScalarField::new(1, "x^2", |x| x[0] * x[0])
    }

    #[test]
    fn eval_polynomial() {
        assert_eq!(square().eval(&[2.0]).unwrap(), 4.0);
    }

    #[test]
    fn eval_rejects_wrong_dimension() {
        let err = square().eval(&[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::Dimension { expected: 1, got: 2 }));
    }

    #[test]
    fn gradient_and_hessian_of_square() {
        let f = square();
        assert!((f.gradient(&[3.0]).unwrap()[0] - 6.0).abs() < 1e-8);
        assert!((f.hessian(&[0.7]).unwrap()[(0, 0)] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn mixed_hessian_of_xy() {
        let f = ScalarField::new(2, "xy", |x| x[0] * x[1]);
        let h = f.hessian(&[0.3, -0.2]).unwrap();
        assert!(h[(0, 0)].abs() < 1e-8 && h[(1, 1)].abs() < 1e-8);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-8 && (h[(1, 0)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn laplacians_of_polynomials() {
        let f = ScalarField::new(2, "x^2+y^2", |x| x[0] * x[0] + x[1] * x[1]);
        assert!((f.laplacian_at(&[0.1, 0.5]).unwrap() - 4.0).abs() < 1e-8);
        let q = ScalarField::new(1, "x^4", |x| x[0].powi(4));
        let bi = q.laplacian().laplacian();
        assert!((bi.eval(&[0.4]).unwrap() - 24.0).abs() < 1e-4);
    }

    #[test]
    fn third_order_sums_of_cubic() {
        let f = ScalarField::new(1, "x^3", |x| x[0].powi(3));
        let s = f.third_order_sums(&[0.25]).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-5, "{}", s[0]);
    }

    #[test]
    fn strict_stencil_reports_offending_axis() {
        let f = square().with_support(Bounds::interval(0.0, 1.0).unwrap());
        match f.gradient(&[1e-5]).unwrap_err() {
            Error::StencilExits { axis, coord, .. } => {
                assert_eq!(axis, 0);
                assert_eq!(coord, 1e-5);
            }
            e => panic!("unexpected {e}"),
        }
        // the lazy Laplacian shifts its stencil instead
        assert!((f.laplacian().eval(&[1e-5]).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn analytic_gradient_is_preferred() {
        let f = ScalarField::analytic(1, "sin", |x| x[0].sin())
            .gradient(|x| DVector::from_element(1, x[0].cos()))
            .build();
        assert_eq!(f.strategy(), DerivativeStrategy::Analytic);
        assert_eq!(f.gradient(&[0.3]).unwrap()[0], 0.3f64.cos());
        let fd = f.fd_gradient(&[0.3]).unwrap()[0];
        assert!((fd - 0.3f64.cos()).abs() < 1e-9);
    }
}
