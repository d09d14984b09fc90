//! Thin-domain profiles: a cross-section ω with lower and upper heights
//! h₋, h₊ and the derived fields d = h₊ − h₋, p = h₊h₋ and H = h₊ + h₋.

mod builtin;
mod config;
mod poly;
mod spline;

use std::fmt;
use std::sync::Arc;

use log::warn;

use crate::error::{Error, Result};
use crate::fields::{Bounds, ScalarField};

pub use builtin::{builtin, ellipsoid_exact_max, Builtin};
pub use config::{
    load_profile, load_profile_file, save_profile, HeightSpec, Monomial, OmegaSpec, PolySpec,
    ProfileConfig, TableSpec,
};
pub use poly::Polynomial;
pub use spline::NaturalSpline;

/// Where a point sits relative to a cross-section.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// The bounding box itself.
    Box,
    /// Centered ellipsoid inscribed in the bounding box.
    Ellipsoid { semi_axes: Vec<f64> },
}

/// The cross-section ω ⊂ ℝⁿ⁻¹.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSection {
    bounds: Bounds,
    shape: Shape,
}

impl CrossSection {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Ok(Self::boxed(Bounds::interval(lo, hi)?))
    }

    pub fn boxed(bounds: Bounds) -> Self {
        Self {
            bounds,
            shape: Shape::Box,
        }
    }

    pub fn ellipsoid(semi_axes: Vec<f64>) -> Result<Self> {
        if semi_axes.is_empty() || semi_axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Profile(format!(
                "semi-axes must be finite and positive, got {semi_axes:?}"
            )));
        }
        if semi_axes.len() == 1 {
            return Self::interval(-semi_axes[0], semi_axes[0]);
        }
        let lo = semi_axes.iter().map(|a| -a).collect();
        let bounds = Bounds::new(lo, semi_axes.clone())?;
        Ok(Self {
            bounds,
            shape: Shape::Ellipsoid { semi_axes },
        })
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Signed clearance: positive inside, roughly the distance to ∂ω.
    pub fn clearance(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Box => (0..self.dim())
                .map(|k| (x[k] - self.bounds.lo[k]).min(self.bounds.hi[k] - x[k]))
                .fold(f64::INFINITY, f64::min),
            Shape::Ellipsoid { semi_axes } => {
                let r = semi_axes
                    .iter()
                    .zip(x)
                    .map(|(a, v)| (v / a).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let amin = semi_axes.iter().cloned().fold(f64::INFINITY, f64::min);
                (1.0 - r) * amin
            }
        }
    }

    pub fn membership(&self, x: &[f64], tol: f64) -> Membership {
        let c = self.clearance(x);
        if c > tol {
            Membership::Interior
        } else if c >= -tol {
            Membership::Boundary
        } else {
            Membership::Exterior
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.clearance(x) > 0.0
    }

    /// Integration limits along axis `prefix.len()` given the earlier
    /// coordinates, for nested quadrature.
    pub fn axis_limits(&self, prefix: &[f64]) -> (f64, f64) {
        let k = prefix.len();
        match &self.shape {
            Shape::Box => (self.bounds.lo[k], self.bounds.hi[k]),
            Shape::Ellipsoid { semi_axes } => {
                let used: f64 = prefix
                    .iter()
                    .zip(semi_axes)
                    .map(|(v, a)| (v / a).powi(2))
                    .sum();
                let half = semi_axes[k] * (1.0 - used).max(0.0).sqrt();
                (-half, half)
            }
        }
    }

    /// Tensor grid of strictly interior points, `per_axis` per axis,
    /// kept at least `margin` (as a fraction of each axis) from the faces.
    pub fn interior_grid(&self, per_axis: usize, margin: f64) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let axis: Vec<Vec<f64>> = (0..dim)
            .map(|k| {
                let (a, b) = (self.bounds.lo[k], self.bounds.hi[k]);
                let (a, b) = (a + margin * (b - a), b - margin * (b - a));
                (0..per_axis)
                    .map(|i| a + (b - a) * (i as f64 + 0.5) / per_axis as f64)
                    .collect()
            })
            .collect();
        let total = per_axis.pow(dim as u32);
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rest = flat;
            let x: Vec<f64> = axis
                .iter()
                .map(|ax| {
                    let v = ax[rest % per_axis];
                    rest /= per_axis;
                    v
                })
                .collect();
            if self.clearance(&x) > 0.0 {
                out.push(x);
            }
        }
        out
    }

    /// Points on ∂ω.
    pub fn boundary_samples(&self, count: usize) -> Vec<Vec<f64>> {
        let dim = self.dim();
        match &self.shape {
            Shape::Box if dim == 1 => vec![vec![self.bounds.lo[0]], vec![self.bounds.hi[0]]],
            Shape::Box => {
                let per = (count / (2 * dim)).max(1);
                let mut out = Vec::new();
                for face in 0..2 * dim {
                    let axis = face / 2;
                    for i in 0..per {
                        let mut x: Vec<f64> = (0..dim)
                            .map(|k| {
                                let t = ((i * (k + 1) * 7919) % per) as f64 + 0.5;
                                let (a, b) = (self.bounds.lo[k], self.bounds.hi[k]);
                                a + (b - a) * t / per as f64
                            })
                            .collect();
                        x[axis] = if face % 2 == 0 {
                            self.bounds.lo[axis]
                        } else {
                            self.bounds.hi[axis]
                        };
                        out.push(x);
                    }
                }
                out
            }
            Shape::Ellipsoid { semi_axes } => {
                // Fibonacci-style directions, projected onto the ellipsoid.
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..count.max(1))
                    .map(|i| {
                        let mut dir = vec![0.0; dim];
                        if dim == 2 {
                            let t = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                            dir[0] = t.cos();
                            dir[1] = t.sin();
                        } else {
                            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                            let r = (1.0 - z * z).sqrt();
                            let t = golden * i as f64;
                            dir[0] = r * t.cos();
                            dir[1] = r * t.sin();
                            dir[2] = z;
                            let n: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                            dir.iter_mut().for_each(|v| *v /= n);
                        }
                        dir.iter().zip(semi_axes).map(|(v, a)| v * a).collect()
                    })
                    .collect()
            }
        }
    }
}

/// Origin of a profile, kept so it can be saved or recognised by solvers.
#[derive(Clone, Debug)]
pub enum ProfileSource {
    Builtin(Builtin),
    Config(ProfileConfig),
    Custom,
}

/// Outcome of the sampled checks run when a profile is assembled.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub samples: usize,
    pub min_interior_thickness: f64,
    pub max_boundary_thickness: f64,
    pub max_identity_residual: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone)]
pub struct DomainProfile {
    name: String,
    omega: Arc<CrossSection>,
    h_minus: ScalarField,
    h_plus: ScalarField,
    d: ScalarField,
    p: ScalarField,
    thickness: ScalarField,
    source: ProfileSource,
    tabulated: bool,
    report: ValidationReport,
}

impl fmt::Debug for DomainProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainProfile")
            .field("name", &self.name)
            .field("omega", &self.omega)
            .field("tabulated", &self.tabulated)
            .finish_non_exhaustive()
    }
}

/// Profile from explicit heights; d, p and H are derived by field algebra.
pub fn make_profile(
    omega: CrossSection,
    h_minus: ScalarField,
    h_plus: ScalarField,
) -> Result<DomainProfile> {
    DomainProfile::from_heights("custom", omega, h_minus, h_plus, ProfileSource::Custom, false)
}

impl DomainProfile {
    pub(crate) fn from_heights(
        name: &str,
        omega: CrossSection,
        h_minus: ScalarField,
        h_plus: ScalarField,
        source: ProfileSource,
        tabulated: bool,
    ) -> Result<Self> {
        let dim = omega.dim();
        for (f, which) in [(&h_minus, "h_minus"), (&h_plus, "h_plus")] {
            if f.dim() != dim {
                return Err(Error::Profile(format!(
                    "{which} has dimension {} but omega has {dim}",
                    f.dim()
                )));
            }
        }
        let bounds = omega.bounds().clone();
        let h_minus = h_minus.with_support(bounds.clone()).relabel("h₋");
        let h_plus = h_plus.with_support(bounds).relabel("h₊");
        let d = (&h_plus - &h_minus).relabel("d");
        let p = (&h_plus * &h_minus).relabel("p");
        let thickness = (&h_plus + &h_minus).relabel("H");
        Self::assemble(name, omega, h_minus, h_plus, d, p, thickness, source, tabulated)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        name: &str,
        omega: CrossSection,
        h_minus: ScalarField,
        h_plus: ScalarField,
        d: ScalarField,
        p: ScalarField,
        thickness: ScalarField,
        source: ProfileSource,
        tabulated: bool,
    ) -> Result<Self> {
        let bounds = omega.bounds().clone();
        let attach = |f: ScalarField| f.with_support(bounds.clone());
        let mut profile = Self {
            name: name.to_string(),
            omega: Arc::new(omega),
            h_minus: attach(h_minus),
            h_plus: attach(h_plus),
            d: attach(d),
            p: attach(p),
            thickness: attach(thickness),
            source,
            tabulated,
            report: ValidationReport::default(),
        };
        profile.report = profile.validate()?;
        for w in &profile.report.warnings {
            warn!("profile {}: {w}", profile.name);
        }
        Ok(profile)
    }

    fn validate(&self) -> Result<ValidationReport> {
        let per_axis = match self.dim() {
            1 => 401,
            2 => 45,
            _ => 13,
        };
        let interior = self.omega.interior_grid(per_axis, 0.0);
        let mut report = ValidationReport {
            samples: interior.len(),
            min_interior_thickness: f64::INFINITY,
            ..Default::default()
        };
        let mut near_zero = 0usize;
        let mut max_thickness: f64 = 0.0;
        for x in &interior {
            let hm = self.h_minus.eval(x)?;
            let hp = self.h_plus.eval(x)?;
            let h = self.thickness.eval(x)?;
            let d = self.d.eval(x)?;
            let p = self.p.eval(x)?;
            if h < -1e-12 {
                return Err(Error::Profile(format!("H = {h:e} < 0 at interior point {x:?}")));
            }
            if h <= 1e-12 {
                near_zero += 1;
            }
            report.min_interior_thickness = report.min_interior_thickness.min(h);
            max_thickness = max_thickness.max(h);
            let scale = 1.0f64.max(h * h);
            let residual = ((d * d + 4.0 * p - h * h).abs() / scale)
                .max((hp - hm - d).abs())
                .max((hp + hm - h).abs());
            report.max_identity_residual = report.max_identity_residual.max(residual);
        }
        if near_zero > 0 {
            report
                .warnings
                .push(format!("H ≈ 0 at {near_zero} interior samples"));
        }
        if report.max_identity_residual > 1e-8 {
            report.warnings.push(format!(
                "d² + 4p − H² identity residual {:e}",
                report.max_identity_residual
            ));
        }
        // Boundary samples are only on ∂ω up to rounding, which square-root
        // profiles amplify to √eps.
        let tol = self.boundary_tolerance() + f64::EPSILON.sqrt() * max_thickness;
        for x in self.omega.boundary_samples(64) {
            let h = self.thickness.eval(&x).unwrap_or(f64::NAN);
            if h.is_finite() {
                report.max_boundary_thickness = report.max_boundary_thickness.max(h.abs());
            }
        }
        if report.max_boundary_thickness > tol {
            report.warnings.push(format!(
                "H = {:e} on ∂ω exceeds boundary tolerance {tol:e}",
                report.max_boundary_thickness
            ));
        }
        Ok(report)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    pub fn omega(&self) -> &CrossSection {
        &self.omega
    }

    pub fn h_minus(&self) -> &ScalarField {
        &self.h_minus
    }

    pub fn h_plus(&self) -> &ScalarField {
        &self.h_plus
    }

    pub fn d(&self) -> &ScalarField {
        &self.d
    }

    pub fn p(&self) -> &ScalarField {
        &self.p
    }

    /// The local thickness H = h₊ + h₋.
    pub fn thickness(&self) -> &ScalarField {
        &self.thickness
    }

    pub fn source(&self) -> &ProfileSource {
        &self.source
    }

    pub fn is_tabulated(&self) -> bool {
        self.tabulated
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    /// Tolerance for H = 0 on ∂ω; spline endpoints carry interpolation error.
    pub fn boundary_tolerance(&self) -> f64 {
        if self.tabulated {
            1e-4
        } else {
            1e-8
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Ω_ε = {(x′, xₙ): x′ ∈ ω, −εh₋(x′) < xₙ < εh₊(x′)}.
#[derive(Clone, Debug)]
pub struct ThinDomain {
    profile: DomainProfile,
    epsilon: f64,
}

impl ThinDomain {
    pub fn new(profile: DomainProfile, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Self { profile, epsilon })
    }

    pub fn profile(&self) -> &DomainProfile {
        &self.profile
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Vertical extent (−εh₋, εh₊) above x′.
    pub fn height_limits(&self, x: &[f64]) -> (f64, f64) {
        (
            -self.epsilon * self.profile.h_minus.value(x),
            self.epsilon * self.profile.h_plus.value(x),
        )
    }

    /// Membership for a physical point (x′, xₙ).
    pub fn contains(&self, point: &[f64]) -> bool {
        let n = self.profile.dim();
        if point.len() != n + 1 || !self.profile.omega.contains(&point[..n]) {
            return false;
        }
        let (lo, hi) = self.height_limits(&point[..n]);
        lo < point[n] && point[n] < hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lens_height() -> ScalarField {
        Polynomial::from_coeffs(&[0.5, 0.0, -0.5]).into_field("h")
    }

    #[test]
    fn symmetric_heights_give_zero_d() {
        let omega = CrossSection::interval(-1.0, 1.0).unwrap();
        let prof = make_profile(omega, lens_height(), lens_height()).unwrap();
        for &x in &[-0.9, -0.2, 0.0, 0.4] {
            assert_eq!(prof.d().value(&[x]), 0.0);
            let expect = (1.0 - x * x).powi(2) / 4.0;
            assert!((prof.p().value(&[x]) - expect).abs() < 1e-15);
            assert!((prof.thickness().value(&[x]) - (1.0 - x * x)).abs() < 1e-15);
        }
        assert!(prof.report().warnings.is_empty());
    }

    #[test]
    fn asymmetric_heights() {
        let omega = CrossSection::interval(-1.0, 1.0).unwrap();
        let hp = Polynomial::from_coeffs(&[2.0, 0.0, -2.0]).into_field("h+");
        let hm = Polynomial::from_coeffs(&[1.0, 0.0, -1.0]).into_field("h-");
        let prof = make_profile(omega, hm, hp).unwrap();
        let x = [0.3];
        let q = 1.0 - 0.09;
        assert!((prof.d().value(&x) - q).abs() < 1e-15);
        assert!((prof.p().value(&x) - 2.0 * q * q).abs() < 1e-15);
        assert!((prof.thickness().value(&x) - 3.0 * q).abs() < 1e-15);
    }

    #[test]
    fn negative_thickness_is_rejected() {
        let omega = CrossSection::interval(-1.0, 1.0).unwrap();
        let hm = ScalarField::constant(1, -1.0);
        assert!(make_profile(omega, hm, lens_height()).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let omega = CrossSection::interval(-1.0, 1.0).unwrap();
        assert!(make_profile(omega, ScalarField::zero(2), lens_height()).is_err());
    }

    #[test]
    fn thin_domain_membership() {
        let omega = CrossSection::interval(-1.0, 1.0).unwrap();
        let prof = make_profile(omega, lens_height(), lens_height()).unwrap();
        let dom = ThinDomain::new(prof, 0.5).unwrap();
        assert!(dom.contains(&[0.0, 0.2]));
        assert!(!dom.contains(&[0.0, 0.3]));
        assert!(!dom.contains(&[1.2, 0.0]));
        assert!(ThinDomain::new(dom.profile().clone(), 0.0).is_err());
    }

    #[test]
    fn ellipse_cross_section() {
        let om = CrossSection::ellipsoid(vec![2.0, 1.0]).unwrap();
        assert_eq!(om.membership(&[0.0, 0.0], 1e-9), Membership::Interior);
        assert_eq!(om.membership(&[2.0, 0.0], 1e-9), Membership::Boundary);
        assert_eq!(om.membership(&[1.9, 0.9], 1e-9), Membership::Exterior);
        let (lo, hi) = om.axis_limits(&[1.0]);
        assert!((hi - (0.75f64).sqrt()).abs() < 1e-15 && lo == -hi);
        for x in om.boundary_samples(16) {
            assert_eq!(om.membership(&x, 1e-12), Membership::Boundary);
        }
    }
}
