use super::XiPolynomial;
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::geometry::DomainProfile;

/// Hand-expanded u₂, u₄, u₆ in terms of d, p and their Laplacians.
///
/// With A = (d²+p)Δd + 3dΔp and B = dpΔd + 3pΔp:
///   u₄ = B/6 + (A/6)ξ − (Δp/2)ξ² − (Δd/6)ξ³
///   u₆ = α₀⁶ + α₁⁶ξ − (ΔB/12)ξ² − (ΔA/36)ξ³ + (Δ²p/24)ξ⁴ + (Δ²d/120)ξ⁵
#[derive(Clone, Debug)]
pub struct ClosedForms {
    pub d: ScalarField,
    pub p: ScalarField,
    pub lap_d: ScalarField,
    pub lap_p: ScalarField,
    pub a: ScalarField,
    pub b: ScalarField,
    pub lap_a: ScalarField,
    pub lap_b: ScalarField,
    pub bilap_d: ScalarField,
    pub bilap_p: ScalarField,
}

impl ClosedForms {
    pub fn new(profile: &DomainProfile) -> Self {
        let d = profile.d().clone();
        let p = profile.p().clone();
        let lap_d = d.laplacian();
        let lap_p = p.laplacian();
        let d2_plus_p = &(&d * &d) + &p;
        let a = &(&d2_plus_p * &lap_d) + &(&(&d * &lap_p) * 3.0);
        let b = &(&(&d * &p) * &lap_d) + &(&(&p * &lap_p) * 3.0);
        let lap_a = a.laplacian();
        let lap_b = b.laplacian();
        let bilap_d = lap_d.laplacian();
        let bilap_p = lap_p.laplacian();
        Self {
            d,
            p,
            lap_d,
            lap_p,
            a,
            b,
            lap_a,
            lap_b,
            bilap_d,
            bilap_p,
        }
    }

    pub fn alpha1_4(&self) -> ScalarField {
        self.a.scale(1.0 / 6.0)
    }

    pub fn alpha0_4(&self) -> ScalarField {
        self.b.scale(1.0 / 6.0)
    }

    /// α₁⁶ = dΔB/12 + (d²+p)ΔA/36 − d(d²+2p)Δ²p/24 − (d⁴+3d²p+p²)Δ²d/120
    pub fn alpha1_6(&self) -> ScalarField {
        let (d, p) = (&self.d, &self.p);
        let d2 = d * d;
        let t1 = &(d * &self.lap_b) * (1.0 / 12.0);
        let t2 = &(&(&d2 + p) * &self.lap_a) * (1.0 / 36.0);
        let t3 = &(&(d * &(&d2 + &(p * 2.0))) * &self.bilap_p) * (1.0 / 24.0);
        let quartic = &(&(&d2 * &d2) + &(&(&d2 * p) * 3.0)) + &(p * p);
        let t4 = &(&quartic * &self.bilap_d) * (1.0 / 120.0);
        &(&(&t1 + &t2) - &t3) - &t4
    }

    /// α₀⁶ = pΔB/12 + dpΔA/36 − p(d²+p)Δ²p/24 − dp(d²+2p)Δ²d/120
    pub fn alpha0_6(&self) -> ScalarField {
        let (d, p) = (&self.d, &self.p);
        let d2 = d * d;
        let dp = d * p;
        let t1 = &(p * &self.lap_b) * (1.0 / 12.0);
        let t2 = &(&dp * &self.lap_a) * (1.0 / 36.0);
        let t3 = &(&(p * &(&d2 + p)) * &self.bilap_p) * (1.0 / 24.0);
        let t4 = &(&(&dp * &(&d2 + &(p * 2.0))) * &self.bilap_d) * (1.0 / 120.0);
        &(&(&t1 + &t2) - &t3) - &t4
    }

    pub fn u(&self, j: usize) -> Result<XiPolynomial> {
        let dim = self.d.dim();
        let coeffs = match j {
            1 => vec![
                self.p.clone(),
                self.d.clone(),
                ScalarField::constant(dim, -1.0),
            ],
            2 => vec![
                self.alpha0_4(),
                self.alpha1_4(),
                self.lap_p.scale(-0.5),
                self.lap_d.scale(-1.0 / 6.0),
            ],
            3 => vec![
                self.alpha0_6(),
                self.alpha1_6(),
                self.lap_b.scale(-1.0 / 12.0),
                self.lap_a.scale(-1.0 / 36.0),
                self.bilap_p.scale(1.0 / 24.0),
                self.bilap_d.scale(1.0 / 120.0),
            ],
            _ => {
                return Err(Error::Expansion(format!(
                    "closed forms exist for j = 1, 2, 3 only (got {j})"
                )))
            }
        };
        Ok(XiPolynomial::new(coeffs))
    }
}

/// u₂ⱼ from the closed forms, independent of the recursion.
pub fn closed_form_u(profile: &DomainProfile, j: usize) -> Result<XiPolynomial> {
    ClosedForms::new(profile).u(j)
}
