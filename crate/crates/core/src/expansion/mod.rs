//! Two-scale expansion uε ≈ Σⱼ ε²ʲ u₂ⱼ(x′, ξ) with ξ = xₙ/ε and
//! u₂ⱼ = Σᵢ αᵢ⁽²ʲ⁾(x′) ξⁱ.
//!
//! The base level is u₂ = −ξ² + dξ + p. Higher levels follow from
//! ∂²u₂ⱼ/∂ξ² = −Δu₂ⱼ₋₂ with u₂ⱼ vanishing at ξ = h₊ and ξ = −h₋.

mod closed_form;

use log::warn;

use crate::error::{Error, Result};
use crate::fields::{FieldFn, ScalarField};
use crate::geometry::DomainProfile;

pub use closed_form::{closed_form_u, ClosedForms};

/// Below this thickness the inner sum for α₁ is taken term by term.
const GEOMETRIC_SUM_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default)]
pub struct BuildOptions {
    /// Allow N > 3 on tabulated profiles.
    pub force: bool,
}

/// Polynomial in ξ with field coefficients.
#[derive(Clone, Debug)]
pub struct XiPolynomial {
    coeffs: Vec<ScalarField>,
}

impl XiPolynomial {
    pub fn new(coeffs: Vec<ScalarField>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[ScalarField] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coefficients_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.coeffs.iter().map(|c| c.eval(x)).collect()
    }

    pub fn eval(&self, x: &[f64], xi: f64) -> Result<f64> {
        Ok(horner(&self.coefficients_at(x)?, xi))
    }
}

pub(crate) fn horner(c: &[f64], xi: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * xi + a)
}

/// Exact ∫ Σ cᵢ ξⁱ dξ over [a, b].
pub(crate) fn integrate_poly(c: &[f64], a: f64, b: f64) -> f64 {
    c.iter()
        .enumerate()
        .map(|(i, &ci)| {
            let k = (i + 1) as i32;
            ci * (b.powi(k) - a.powi(k)) / k as f64
        })
        .sum()
}

/// α₁ = −Σᵢ≥₂ αᵢ Sᵢ with Sᵢ = Σₘ h₊ᵐ(−h₋)ⁱ⁻ᵐ⁻¹ = (h₊ⁱ − (−h₋)ⁱ)/H.
struct Alpha1 {
    upper: Vec<ScalarField>, // α₂ … α₂ⱼ
    h_plus: ScalarField,
    h_minus: ScalarField,
}

pub(crate) fn inner_sum(i: usize, hp: f64, hm: f64) -> f64 {
    let big_h = hp + hm;
    if big_h.abs() >= GEOMETRIC_SUM_GUARD {
        (hp.powi(i as i32) - (-hm).powi(i as i32)) / big_h
    } else {
        (0..i)
            .map(|m| hp.powi(m as i32) * (-hm).powi((i - m - 1) as i32))
            .sum()
    }
}

impl FieldFn for Alpha1 {
    fn value(&self, x: &[f64]) -> f64 {
        let hp = self.h_plus.value(x);
        let hm = self.h_minus.value(x);
        -self
            .upper
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let v = a.value(x);
                if v == 0.0 {
                    0.0
                } else {
                    v * inner_sum(k + 2, hp, hm)
                }
            })
            .sum::<f64>()
    }
}

/// α₀ = −Σᵢ≥₁ αᵢ h₊ⁱ, so that u₂ⱼ(x′, h₊) = 0.
struct Alpha0 {
    rest: Vec<ScalarField>, // α₁ … α₂ⱼ
    h_plus: ScalarField,
}

impl FieldFn for Alpha0 {
    fn value(&self, x: &[f64]) -> f64 {
        let hp = self.h_plus.value(x);
        let mut acc = 0.0;
        let mut pow = hp;
        for a in &self.rest {
            acc += a.value(x) * pow;
            pow *= hp;
        }
        -acc
    }
}

/// Coefficients αᵢ⁽²ʲ⁾ for j = 1..N, i = 0..2j.
///
/// The top entry i = 2j is kept as a guard; it vanishes identically.
#[derive(Clone, Debug)]
pub struct ExpansionSeries {
    profile: DomainProfile,
    coeffs: Vec<Vec<ScalarField>>,
    laplacians: Vec<Vec<ScalarField>>,
}

pub fn build_expansion(profile: &DomainProfile, order: usize) -> Result<ExpansionSeries> {
    build_expansion_with(profile, order, BuildOptions::default())
}

pub fn build_expansion_with(
    profile: &DomainProfile,
    order: usize,
    options: BuildOptions,
) -> Result<ExpansionSeries> {
    if order == 0 {
        return Err(Error::Expansion("order must be at least 1".into()));
    }
    if profile.is_tabulated() && order > 2 {
        if order > 3 && !options.force {
            return Err(Error::Expansion(format!(
                "order {order} needs {} derivative orders that tabulated data cannot supply; force to override",
                2 * (order - 1)
            )));
        }
        warn!(
            "profile {}: order {order} on tabulated data relies on nested finite differences",
            profile.name()
        );
    } else if order > 3 {
        warn!("order {order} > 3: accuracy limited by nested finite differences");
    }
    let dim = profile.dim();
    let base = vec![
        profile.p().clone().relabel("α0^(2)"),
        profile.d().clone().relabel("α1^(2)"),
        ScalarField::constant(dim, -1.0).relabel("α2^(2)"),
    ];
    let mut coeffs = vec![base];
    for j in 2..=order {
        let prev = &coeffs[j - 2];
        let upper: Vec<ScalarField> = (2..=2 * j)
            .map(|i| {
                let c = -1.0 / (i * (i - 1)) as f64;
                prev[i - 2]
                    .laplacian()
                    .scale(c)
                    .relabel(format!("α{i}^({})", 2 * j))
            })
            .collect();
        let support = profile.omega().bounds().clone();
        let fd = profile.p().fd_policy();
        let a1 = ScalarField::from_fn_impl(
            dim,
            format!("α1^({})", 2 * j),
            Alpha1 {
                upper: upper.clone(),
                h_plus: profile.h_plus().clone(),
                h_minus: profile.h_minus().clone(),
            },
        )
        .with_fd(fd)
        .with_support(support.clone());
        let mut rest = vec![a1.clone()];
        rest.extend(upper.iter().cloned());
        let a0 = ScalarField::from_fn_impl(
            dim,
            format!("α0^({})", 2 * j),
            Alpha0 {
                rest,
                h_plus: profile.h_plus().clone(),
            },
        )
        .with_fd(fd)
        .with_support(support);
        let mut level = vec![a0, a1];
        level.extend(upper);
        coeffs.push(level);
    }
    let laplacians = coeffs
        .iter()
        .map(|level| level.iter().map(|c| c.laplacian()).collect())
        .collect();
    Ok(ExpansionSeries {
        profile: profile.clone(),
        coeffs,
        laplacians,
    })
}

/// All coefficient values above one point x′.
#[derive(Clone, Debug)]
pub struct CoefficientColumn {
    pub values: Vec<Vec<f64>>,
}

impl CoefficientColumn {
    /// u₂ⱼ(x′, ξ) for j = 1..N.
    pub fn term(&self, j: usize, xi: f64) -> f64 {
        horner(&self.values[j - 1], xi)
    }

    /// Σⱼ ε²ʲ u₂ⱼ; depends on ε only through ε².
    pub fn eval(&self, xi: f64, epsilon: f64) -> f64 {
        let e2 = epsilon * epsilon;
        let mut scale = 1.0;
        let mut acc = 0.0;
        for level in &self.values {
            scale *= e2;
            acc += scale * horner(level, xi);
        }
        acc
    }

    /// ∂/∂ξ and ∂²/∂ξ² of the series, exact.
    pub fn xi_derivatives(&self, xi: f64, epsilon: f64) -> (f64, f64) {
        let e2 = epsilon * epsilon;
        let mut scale = 1.0;
        let (mut d1, mut d2) = (0.0, 0.0);
        for level in &self.values {
            scale *= e2;
            for (i, &a) in level.iter().enumerate().skip(1) {
                d1 += scale * a * i as f64 * xi.powi(i as i32 - 1);
                if i >= 2 {
                    d2 += scale * a * (i * (i - 1)) as f64 * xi.powi(i as i32 - 2);
                }
            }
        }
        (d1, d2)
    }
}

impl ExpansionSeries {
    pub fn profile(&self) -> &DomainProfile {
        &self.profile
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// αᵢ⁽²ʲ⁾ for 1 ≤ j ≤ N and 0 ≤ i ≤ 2j.
    pub fn coefficient(&self, j: usize, i: usize) -> &ScalarField {
        &self.coeffs[j - 1][i]
    }

    /// u₂ⱼ as a polynomial in ξ.
    pub fn term(&self, j: usize) -> XiPolynomial {
        XiPolynomial::new(self.coeffs[j - 1].clone())
    }

    pub fn coefficients_at(&self, x: &[f64]) -> Result<CoefficientColumn> {
        let values = self
            .coeffs
            .iter()
            .map(|level| level.iter().map(|c| c.eval(x)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(CoefficientColumn { values })
    }

    fn check_inside(&self, x: &[f64], xi: f64) -> Result<()> {
        let omega = self.profile.omega();
        if x.len() != omega.dim() {
            return Err(Error::Dimension {
                expected: omega.dim(),
                got: x.len(),
            });
        }
        let outside = || Error::OutsideDomain {
            point: x.iter().cloned().chain(std::iter::once(xi)).collect(),
        };
        if !omega.contains(x) {
            return Err(outside());
        }
        let hp = self.profile.h_plus().eval(x)?;
        let hm = self.profile.h_minus().eval(x)?;
        let tol = 1e-12 * (hp + hm).abs().max(1.0);
        if xi > hp + tol || xi < -hm - tol {
            return Err(outside());
        }
        Ok(())
    }

    /// uε^N(x′, ξ) = Σⱼ ε²ʲ u₂ⱼ(x′, ξ) in the scaled variable ξ = xₙ/ε.
    pub fn eval_u(&self, x: &[f64], xi: f64, epsilon: f64) -> Result<f64> {
        self.check_inside(x, xi)?;
        Ok(self.coefficients_at(x)?.eval(xi, epsilon))
    }

    /// sup over samples of |(−ε²Δ − ∂²/∂ξ²) uε^N − 2ε²|.
    pub fn pde_residual(&self, epsilon: f64, samples: &[(Vec<f64>, f64)]) -> Result<f64> {
        let e2 = epsilon * epsilon;
        let mut worst: f64 = 0.0;
        for (x, xi) in samples {
            self.check_inside(x, *xi)?;
            let column = self.coefficients_at(x)?;
            let (_, d2) = column.xi_derivatives(*xi, epsilon);
            let mut lap = 0.0;
            let mut scale = 1.0;
            for level in &self.laplacians {
                scale *= e2;
                let vals: Vec<f64> = level.iter().map(|l| l.value(x)).collect();
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        field: "Laplacian of an expansion coefficient".into(),
                        at: x.clone(),
                    });
                }
                lap += scale * horner(&vals, *xi);
            }
            let r = (-e2 * lap - d2 - 2.0 * e2).abs();
            worst = worst.max(r);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{builtin, make_profile, CrossSection, Polynomial};

    #[test]
    fn base_level_is_u2() {
        let prof = builtin("folium", &[]).unwrap();
        let s = build_expansion(&prof, 1).unwrap();
        let x = [0.4];
        let (xi, p) = (0.05, prof.p().value(&x));
        let u = s.eval_u(&x, xi, 1.0).unwrap();
        assert!((u - (-xi * xi + p)).abs() < 1e-16);
    }

    #[test]
    fn folium_peak_value() {
        let prof = builtin("folium", &[]).unwrap();
        let s = build_expansion(&prof, 1).unwrap();
        let xb = 1.0 / 3f64.sqrt();
        let u = s.eval_u(&[xb], 0.0, 1.0).unwrap();
        assert!((u - (2.0 * 3f64.sqrt() - 3.0) / 9.0).abs() < 1e-15);
    }

    #[test]
    fn constant_profile_has_no_corrections() {
        // validation is irrelevant here: p constant, d zero
        let omega = CrossSection::interval(0.0, 1.0).unwrap();
        let h = ScalarField::constant(1, 0.5);
        let prof = make_profile(omega, h.clone(), h).unwrap();
        let s = build_expansion(&prof, 3).unwrap();
        for j in 2..=3 {
            for i in 0..=2 * j {
                assert_eq!(s.coefficient(j, i).value(&[0.3]), 0.0, "α{i}^({})", 2 * j);
            }
        }
    }

    #[test]
    fn boundary_values_vanish() {
        let prof = builtin("lemniscate", &[]).unwrap();
        let s = build_expansion(&prof, 3).unwrap();
        for &x in &[0.2, 0.5, 0.8] {
            let c = s.coefficients_at(&[x]).unwrap();
            let hp = prof.h_plus().value(&[x]);
            for j in 1..=3 {
                assert!(c.term(j, hp).abs() < 1e-9);
                assert!(c.term(j, -hp).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn outside_points_are_rejected() {
        let prof = builtin("folium", &[]).unwrap();
        let s = build_expansion(&prof, 2).unwrap();
        assert!(matches!(s.eval_u(&[1.2], 0.0, 0.1), Err(Error::OutsideDomain { .. })));
        assert!(matches!(s.eval_u(&[0.5], 1.0, 0.1), Err(Error::OutsideDomain { .. })));
        assert!(build_expansion(&prof, 0).is_err());
    }

    #[test]
    fn residual_vanishes_for_affine_data() {
        let omega = CrossSection::interval(-1.0, 1.0).unwrap();
        let hp = Polynomial::from_coeffs(&[1.0, 0.25]).into_field("h+");
        let hm = Polynomial::from_coeffs(&[1.0, -0.25]).into_field("h-");
        // d = x/2 affine, p = 1 − x²/16 is not; use heights with affine d, p
        let prof = make_profile(omega.clone(), hm, hp).unwrap();
        let s = build_expansion(&prof, 1).unwrap();
        let r = s.pde_residual(0.3, &[(vec![0.1], 0.2)]).unwrap();
        assert!((r - 0.3f64.powi(4) / 8.0).abs() < 1e-12); // |ε⁴ Δp| = ε⁴/8

        let one = ScalarField::constant(1, 1.0);
        let hp = Polynomial::from_coeffs(&[1.0, 0.25]).into_field("h+");
        let prof = make_profile(omega, one, hp).unwrap(); // p = h₊ affine, d affine
        let s = build_expansion(&prof, 1).unwrap();
        assert_eq!(s.pde_residual(0.3, &[(vec![0.1], 0.2), (vec![-0.4], -0.5)]).unwrap(), 0.0);
    }

    #[test]
    fn inner_sum_paths_agree() {
        for i in 2..7 {
            let (hp, hm): (f64, f64) = (0.7, 0.4);
            let direct: f64 = (0..i)
                .map(|m| hp.powi(m as i32) * (-hm).powi((i - m - 1) as i32))
                .sum();
            assert!((inner_sum(i, hp, hm) - direct).abs() < 1e-15);
        }
        assert_eq!(inner_sum(3, 0.0, 0.0), 0.0);
    }
}
