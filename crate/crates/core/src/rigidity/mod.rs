//! Torsional rigidity ∫uε ≈ c₃ε³ + c₅ε⁵ + c₇ε⁷ and the volume of Ωε.

mod quadrature;

use crate::error::Result;
use crate::expansion::{integrate_poly, ClosedForms, ExpansionSeries};
use crate::geometry::DomainProfile;

pub use quadrature::{integrate, integrate_1d, quadrature, Quadrature};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorsionSeries {
    pub c3: f64,
    pub c5: f64,
    /// NaN when the source series stops before order 3.
    pub c7: f64,
    pub quadrature_error_estimate: f64,
}

impl TorsionSeries {
    pub fn coefficients(&self) -> [f64; 3] {
        [self.c3, self.c5, self.c7]
    }

    /// Σ c₂ⱼ₊₁ ε²ʲ⁺¹ over the first `terms` coefficients.
    pub fn partial_sum(&self, epsilon: f64, terms: usize) -> f64 {
        self.coefficients()
            .iter()
            .take(terms)
            .enumerate()
            .map(|(k, c)| c * epsilon.powi(2 * k as i32 + 3))
            .sum()
    }

    pub fn value(&self, epsilon: f64) -> f64 {
        self.partial_sum(epsilon, 3)
    }
}

/// Default absolute quadrature tolerance for a profile.
pub fn default_tolerance(profile: &DomainProfile) -> f64 {
    if profile.is_tabulated() {
        1e-6
    } else {
        1e-9
    }
}

/// Coefficients from the closed-form integrands:
///   c₃ = ∫H³/6, c₅ = ∫H³(dΔd + 2Δp)/24 and
///   c₇ = ∫ (H³d³ + 3dp²H)Δ²d/720 + (H³d² + pH(p − d²))Δ²p/120
///          − (H³d − 2dpH)ΔA/144 − (H³ − 3pH)ΔB/36 + dHα₁⁶/2 + Hα₀⁶.
pub fn torsion_series(profile: &DomainProfile) -> Result<TorsionSeries> {
    torsion_series_with_tol(profile, default_tolerance(profile))
}

pub fn torsion_series_with_tol(profile: &DomainProfile, tol: f64) -> Result<TorsionSeries> {
    let cf = ClosedForms::new(profile);
    let omega = profile.omega();
    let big_h = profile.thickness();
    let (d, p) = (profile.d(), profile.p());

    let q3 = integrate(|x| Ok(big_h.eval(x)?.powi(3) / 6.0), omega, tol)?;
    let q5 = integrate(
        |x| {
            let h = big_h.eval(x)?;
            Ok(h.powi(3) * (d.eval(x)? * cf.lap_d.eval(x)? + 2.0 * cf.lap_p.eval(x)?) / 24.0)
        },
        omega,
        tol,
    )?;
    let q7 = integrate(
        |x| {
            let h = big_h.eval(x)?;
            let (dv, pv) = (d.eval(x)?, p.eval(x)?);
            let (la, lb) = (cf.lap_a.eval(x)?, cf.lap_b.eval(x)?);
            let (bd, bp) = (cf.bilap_d.eval(x)?, cf.bilap_p.eval(x)?);
            let h3 = h.powi(3);
            let d2 = dv * dv;
            let a1 = dv * lb / 12.0 + (d2 + pv) * la / 36.0
                - dv * (d2 + 2.0 * pv) * bp / 24.0
                - (d2 * d2 + 3.0 * d2 * pv + pv * pv) * bd / 120.0;
            let a0 = pv * lb / 12.0 + dv * pv * la / 36.0
                - pv * (d2 + pv) * bp / 24.0
                - dv * pv * (d2 + 2.0 * pv) * bd / 120.0;
            Ok((h3 * d2 * dv + 3.0 * dv * pv * pv * h) * bd / 720.0
                + (h3 * d2 + pv * h * (pv - d2)) * bp / 120.0
                - (h3 * dv - 2.0 * dv * pv * h) * la / 144.0
                - (h3 - 3.0 * pv * h) * lb / 36.0
                + 0.5 * dv * h * a1
                + h * a0)
        },
        omega,
        tol,
    )?;
    Ok(TorsionSeries {
        c3: q3.value,
        c5: q5.value,
        c7: q7.value,
        quadrature_error_estimate: q3.error + q5.error + q7.error,
    })
}

/// Coefficients by integrating each u₂ⱼ exactly in ξ over (−h₋, h₊) and
/// then over ω.
pub fn torsion_series_direct(series: &ExpansionSeries) -> Result<TorsionSeries> {
    let profile = series.profile();
    torsion_series_direct_with_tol(series, default_tolerance(profile))
}

pub fn torsion_series_direct_with_tol(series: &ExpansionSeries, tol: f64) -> Result<TorsionSeries> {
    let profile = series.profile();
    let mut c = [f64::NAN; 3];
    let mut err = 0.0;
    for j in 1..=series.order().min(3) {
        let q = integrate(
            |x| Ok(xi_integral(series, j, x)?),
            profile.omega(),
            tol,
        )?;
        c[j - 1] = q.value;
        err += q.error;
    }
    Ok(TorsionSeries {
        c3: c[0],
        c5: c[1],
        c7: c[2],
        quadrature_error_estimate: err,
    })
}

/// ∫ u₂ⱼ(x′, ξ) dξ over (−h₋(x′), h₊(x′)).
pub fn xi_integral(series: &ExpansionSeries, j: usize, x: &[f64]) -> Result<f64> {
    let profile = series.profile();
    let coeffs = series.term(j).coefficients_at(x)?;
    let hp = profile.h_plus().eval(x)?;
    let hm = profile.h_minus().eval(x)?;
    Ok(integrate_poly(&coeffs, -hm, hp))
}

/// |Ωε| = ε∫_ω H.
pub fn volume(profile: &DomainProfile, epsilon: f64) -> Result<f64> {
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    let q = quadrature(profile.thickness(), profile.omega(), default_tolerance(profile))?;
    Ok(epsilon * q.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::build_expansion;
    use crate::geometry::builtin;
    use std::f64::consts::PI;

    #[test]
    fn disc_coefficients() {
        let prof = builtin("disc", &[]).unwrap();
        let t = torsion_series(&prof).unwrap();
        assert!((t.c3 - PI / 2.0).abs() < 1e-8);
        assert!((t.c5 + PI / 2.0).abs() < 1e-8);
        assert!((t.c7 - PI / 2.0).abs() < 1e-8, "{}", t.c7);
    }

    #[test]
    fn folium_leading_coefficient() {
        let prof = builtin("folium", &[]).unwrap();
        let t = torsion_series(&prof).unwrap();
        let c3 = 16.0 * PI / (243.0 * 3f64.sqrt()) - 1.0 / 9.0;
        assert!((t.c3 - c3).abs() < 1e-10);
    }

    #[test]
    fn direct_path_agrees_on_lemniscate() {
        let prof = builtin("lemniscate", &[]).unwrap();
        let s = build_expansion(&prof, 3).unwrap();
        let a = torsion_series(&prof).unwrap();
        let b = torsion_series_direct(&s).unwrap();
        for (x, y) in a.coefficients().iter().zip(b.coefficients()) {
            assert!((x - y).abs() < 1e-7, "{x} vs {y}");
        }
    }

    #[test]
    fn u2_integrates_to_h_cubed_over_six() {
        let prof = builtin("folium", &[]).unwrap();
        let s = build_expansion(&prof, 1).unwrap();
        let x = [0.37];
        let h = prof.thickness().value(&x);
        assert!((xi_integral(&s, 1, &x).unwrap() - h.powi(3) / 6.0).abs() < 1e-15);
    }

    #[test]
    fn volumes() {
        let disc = builtin("disc", &[]).unwrap();
        assert!((volume(&disc, 0.3).unwrap() - 0.3 * PI).abs() < 1e-9);
        let lens = builtin("parabolic-lens", &[]).unwrap();
        assert!((volume(&lens, 0.5).unwrap() - 0.5 * 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(volume(&lens, 0.0).unwrap(), 0.0);
    }
}
