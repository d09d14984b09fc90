use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{CrossSection, DomainProfile, Polynomial, ProfileSource};
use crate::error::{Error, Result};
use crate::fields::{Bounds, FieldFn, ScalarField};

/// Profiles with closed-form heights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    /// h± = x√((1−x)/(1+3x)) on (0, 1).
    Folium,
    /// p = −1/2 − x² + √(1+8x²)/2 on (0, 1).
    Lemniscate,
    /// h± = (1−x²)/2 on (−1, 1).
    ParabolicLens,
    /// h± = aₙ√(1 − Σ xⱼ²/aⱼ²) over the ellipsoid with semi-axes a₁…aₙ₋₁.
    Ellipsoid { semi_axes: Vec<f64>, thin: f64 },
}

impl Builtin {
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let no_params = |b: Builtin| {
            if params.is_empty() {
                Ok(b)
            } else {
                Err(Error::InvalidArgument(format!("{name} takes no parameters")))
            }
        };
        match name {
            "folium" => no_params(Builtin::Folium),
            "lemniscate" => no_params(Builtin::Lemniscate),
            "parabolic-lens" | "lens" => no_params(Builtin::ParabolicLens),
            "disc" | "disk" => no_params(Builtin::Ellipsoid {
                semi_axes: vec![1.0],
                thin: 1.0,
            }),
            "ellipsoid" | "ball" => {
                let params = if params.is_empty() { &[1.0, 1.0][..] } else { params };
                if params.len() < 2 {
                    return Err(Error::InvalidArgument(
                        "ellipsoid needs semi-axes a1, ..., a(n-1), a_n".into(),
                    ));
                }
                if params.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(Error::Profile(format!(
                        "ellipsoid semi-axes must be positive, got {params:?}"
                    )));
                }
                let (thin, rest) = params.split_last().unwrap();
                Ok(Builtin::Ellipsoid {
                    semi_axes: rest.to_vec(),
                    thin: *thin,
                })
            }
            other => Err(Error::UnknownBuiltin(other.to_string())),
        }
    }

    pub fn profile(&self) -> Result<DomainProfile> {
        match self {
            Builtin::Folium => folium(),
            Builtin::Lemniscate => lemniscate(),
            Builtin::ParabolicLens => parabolic_lens(),
            Builtin::Ellipsoid { semi_axes, thin } => ellipsoid(semi_axes, *thin),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Folium => write!(f, "folium"),
            Builtin::Lemniscate => write!(f, "lemniscate"),
            Builtin::ParabolicLens => write!(f, "parabolic-lens"),
            Builtin::Ellipsoid { semi_axes, thin } => {
                let all: Vec<String> = semi_axes
                    .iter()
                    .chain(std::iter::once(thin))
                    .map(|a| a.to_string())
                    .collect();
                write!(f, "ellipsoid:{}", all.join(","))
            }
        }
    }
}

/// Accepts `name` or `name:p1,p2,...`.
impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = match s.split_once(':') {
            Some((n, rest)) => {
                let params = rest
                    .split(',')
                    .map(|t| {
                        t.trim().parse::<f64>().map_err(|_| {
                            Error::InvalidArgument(format!("bad builtin parameter {t:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                (n, params)
            }
            None => (s, Vec::new()),
        };
        Builtin::from_name(name.trim(), &params)
    }
}

pub fn builtin(name: &str, params: &[f64]) -> Result<DomainProfile> {
    Builtin::from_name(name, params)?.profile()
}

/// Exact max of the torsion function on the ellipsoid with semi-axes
/// a₁…aₙ₋₁ and thin semi-axis εaₙ (attained at the centre).
pub fn ellipsoid_exact_max(semi_axes: &[f64], thin: f64, epsilon: f64) -> f64 {
    let s: f64 = semi_axes.iter().map(|a| a.powi(-2)).sum();
    1.0 / (s + (epsilon * thin).powi(-2))
}

/// h = √max(p, 0) with derivatives from those of p.
struct SqrtOf {
    p: ScalarField,
}

impl FieldFn for SqrtOf {
    fn value(&self, x: &[f64]) -> f64 {
        self.p.value(x).max(0.0).sqrt()
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        let h = self.value(x);
        Some(self.p.gradient(x).ok()? / (2.0 * h))
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let h = self.value(x);
        let g = self.p.gradient(x).ok()?;
        let hp = self.p.hessian(x).ok()?;
        Some(hp / (2.0 * h) - (&g * g.transpose()) / (4.0 * h * h * h))
    }
}

/// Symmetric profile h₊ = h₋ = √p, d ≡ 0, H = 2√p.
fn symmetric(name: &str, omega: CrossSection, p: ScalarField, source: Builtin) -> Result<DomainProfile> {
    let dim = omega.dim();
    let p = p.with_support(omega.bounds().clone());
    let h = ScalarField::from_fn_impl(dim, "h", SqrtOf { p: p.clone() });
    let thickness = h.scale(2.0);
    DomainProfile::assemble(
        name,
        omega,
        h.clone(),
        h,
        ScalarField::zero(dim),
        p,
        thickness,
        ProfileSource::Builtin(source),
        false,
    )
}

fn one_d(
    label: &str,
    bounds: &Bounds,
    f: fn(f64) -> f64,
    df: fn(f64) -> f64,
    d2f: fn(f64) -> f64,
) -> ScalarField {
    let lap = ScalarField::new(1, format!("Δ{label}"), move |x| d2f(x[0])).with_support(bounds.clone());
    ScalarField::analytic(1, label, move |x| f(x[0]))
        .gradient(move |x| DVector::from_element(1, df(x[0])))
        .hessian(move |x| DMatrix::from_element(1, 1, d2f(x[0])))
        .laplacian(lap)
        .build()
        .with_support(bounds.clone())
}

fn folium() -> Result<DomainProfile> {
    let omega = CrossSection::interval(0.0, 1.0)?;
    let p = one_d(
        "p",
        omega.bounds(),
        |x| (1.0 - x) * x * x / (3.0 * x + 1.0),
        |x| (2.0 * x - 6.0 * x.powi(3)) / (3.0 * x + 1.0).powi(2),
        |x| -2.0 * (9.0 * x.powi(3) + 9.0 * x * x + 3.0 * x - 1.0) / (3.0 * x + 1.0).powi(3),
    );
    symmetric("folium", omega, p, Builtin::Folium)
}

fn lemniscate() -> Result<DomainProfile> {
    let omega = CrossSection::interval(0.0, 1.0)?;
    let p = one_d(
        "p",
        omega.bounds(),
        |x| -0.5 - x * x + 0.5 * (1.0 + 8.0 * x * x).sqrt(),
        |x| -2.0 * x + 4.0 * x / (1.0 + 8.0 * x * x).sqrt(),
        |x| -2.0 + 4.0 / (1.0 + 8.0 * x * x).powf(1.5),
    );
    symmetric("lemniscate", omega, p, Builtin::Lemniscate)
}

fn parabolic_lens() -> Result<DomainProfile> {
    let omega = CrossSection::interval(-1.0, 1.0)?;
    let h = Polynomial::from_coeffs(&[0.5, 0.0, -0.5]).into_field("h");
    let p = Polynomial::from_coeffs(&[0.25, 0.0, -0.5, 0.0, 0.25]).into_field("p");
    let thickness = Polynomial::from_coeffs(&[1.0, 0.0, -1.0]).into_field("H");
    DomainProfile::assemble(
        "parabolic-lens",
        omega,
        h.clone(),
        h,
        ScalarField::zero(1),
        p,
        thickness,
        ProfileSource::Builtin(Builtin::ParabolicLens),
        false,
    )
}

fn ellipsoid(semi_axes: &[f64], thin: f64) -> Result<DomainProfile> {
    if semi_axes.is_empty() || !(thin.is_finite() && thin > 0.0) {
        return Err(Error::Profile("ellipsoid needs positive semi-axes".into()));
    }
    let omega = CrossSection::ellipsoid(semi_axes.to_vec())?;
    let dim = semi_axes.len();
    // p = aₙ²(1 − Σ xⱼ²/aⱼ²)
    let mut terms = vec![(thin * thin, vec![0u32; dim])];
    for (j, a) in semi_axes.iter().enumerate() {
        let mut pw = vec![0u32; dim];
        pw[j] = 2;
        terms.push((-(thin / a).powi(2), pw));
    }
    let p = Polynomial::new(dim, terms).into_field("p");
    let name = Builtin::Ellipsoid {
        semi_axes: semi_axes.to_vec(),
        thin,
    };
    symmetric(&name.to_string(), omega, p, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folium_values() {
        let f = builtin("folium", &[]).unwrap();
        assert!((f.p().value(&[1.0 / 3.0]) - 1.0 / 27.0).abs() < 1e-15);
        let x: f64 = 0.4;
        let h = 2.0 * x * ((1.0 - x) / (1.0 + 3.0 * x)).sqrt();
        assert!((f.thickness().value(&[x]) - h).abs() < 1e-15);
        assert_eq!(f.d().value(&[x]), 0.0);
        assert!((f.p().laplacian_at(&[0.5]).unwrap() + 0.496).abs() < 1e-14);
        assert!(f.report().warnings.is_empty(), "{:?}", f.report().warnings);
    }

    #[test]
    fn lemniscate_thickness_at_peak() {
        let f = builtin("lemniscate", &[]).unwrap();
        let xb = 3f64.sqrt() / (2.0 * 2f64.sqrt());
        assert!((f.thickness().value(&[xb]) - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(f.report().warnings.is_empty(), "{:?}", f.report().warnings);
    }

    #[test]
    fn lens_hessian() {
        let f = builtin("parabolic-lens", &[]).unwrap();
        assert_eq!(f.p().hessian(&[0.0]).unwrap()[(0, 0)], -1.0);
    }

    #[test]
    fn disc_heights() {
        let f = builtin("ellipsoid", &[1.0, 1.0]).unwrap();
        for &x in &[-0.7, 0.0, 0.3] {
            let h: f64 = (1.0 - x * x as f64).sqrt();
            assert!((f.h_plus().value(&[x]) - h).abs() < 1e-15);
            assert!((f.h_minus().value(&[x]) - h).abs() < 1e-15);
        }
    }

    #[test]
    fn ellipsoid_in_three_dimensions() {
        let f = builtin("ellipsoid", &[2.0, 1.0, 0.5]).unwrap();
        assert_eq!(f.dim(), 2);
        assert!((f.thickness().value(&[0.0, 0.0]) - 1.0).abs() < 1e-15);
        let g = f.thickness().gradient(&[0.5, 0.2]).unwrap();
        let fd = f.thickness().fd_gradient(&[0.5, 0.2]).unwrap();
        // step ≈ 0.011 here, so O(h⁴) ≈ 1e-8
        assert!((&g - &fd).norm() < 1e-7, "{g} {fd}");
        assert!(f.report().warnings.is_empty(), "{:?}", f.report().warnings);
    }

    #[test]
    fn parsing_and_errors() {
        assert_eq!("folium".parse::<Builtin>().unwrap(), Builtin::Folium);
        let e: Builtin = "ellipsoid:1,2,0.5".parse().unwrap();
        assert_eq!(e.to_string(), "ellipsoid:1,2,0.5");
        assert!(matches!(builtin("cardioid", &[]), Err(Error::UnknownBuiltin(_))));
        assert!(builtin("ellipsoid", &[1.0, -1.0]).is_err());
        assert!(builtin("folium", &[2.0]).is_err());
    }

    #[test]
    fn exact_ellipsoid_max() {
        // ball of radius ε in the plane: ε²/2 at ε = 1
        assert!((ellipsoid_exact_max(&[1.0], 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((ellipsoid_exact_max(&[1.0, 1.0], 1.0, 1.0) - 1.0 / 3.0).abs() < 1e-15);
    }
}
