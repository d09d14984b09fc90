//! JSON profile documents.
//!
//! ```json
//! { "name": "lens",
//!   "omega": [-1, 1],
//!   "h_plus":  { "poly": [0.5, 0, -0.5] },
//!   "h_minus": { "table": { "x": [...], "y": [...] } } }
//! ```
//!
//! `omega` is `[lo, hi]` for one axis or `[[lo, hi], ...]` for several.
//! `poly` takes ascending coefficients (one axis) or a list of
//! `{"coef": c, "powers": [k1, ...]}` monomials. Tables are one-axis only.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CrossSection, DomainProfile, NaturalSpline, Polynomial, ProfileSource};
use crate::error::{Error, Result};
use crate::fields::{Bounds, ScalarField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub name: String,
    pub omega: OmegaSpec,
    pub h_plus: HeightSpec,
    pub h_minus: HeightSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    Interval([f64; 2]),
    Box(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum HeightSpec {
    Poly(PolySpec),
    Table(TableSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolySpec {
    Coefficients(Vec<f64>),
    Monomials(Vec<Monomial>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl OmegaSpec {
    fn bounds(&self) -> Result<Bounds> {
        match self {
            OmegaSpec::Interval([lo, hi]) => Bounds::interval(*lo, *hi),
            OmegaSpec::Box(axes) => {
                if axes.is_empty() {
                    return Err(Error::Config("omega has no axes".into()));
                }
                Bounds::new(
                    axes.iter().map(|a| a[0]).collect(),
                    axes.iter().map(|a| a[1]).collect(),
                )
            }
        }
        .map_err(|e| Error::Config(format!("omega: {e}")))
    }
}

impl HeightSpec {
    fn field(&self, which: &str, bounds: &Bounds) -> Result<ScalarField> {
        let dim = bounds.dim();
        match self {
            HeightSpec::Poly(PolySpec::Coefficients(c)) => {
                if dim != 1 {
                    return Err(Error::Config(format!(
                        "{which}: coefficient lists need a one-axis omega; use monomials"
                    )));
                }
                if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config(format!("{which}: coefficients must be finite and non-empty")));
                }
                Ok(Polynomial::from_coeffs(c).into_field(which))
            }
            HeightSpec::Poly(PolySpec::Monomials(terms)) => {
                for t in terms {
                    if t.powers.len() != dim || !t.coef.is_finite() {
                        return Err(Error::Config(format!(
                            "{which}: monomial {t:?} does not match {dim} axes"
                        )));
                    }
                }
                Ok(Polynomial::new(dim, terms.iter().map(|t| (t.coef, t.powers.clone())).collect())
                    .into_field(which))
            }
            HeightSpec::Table(t) => {
                if dim != 1 {
                    return Err(Error::Config(format!("{which}: tables need a one-axis omega")));
                }
                let spline = NaturalSpline::new(t.x.clone(), t.y.clone())
                    .map_err(|e| Error::Config(format!("{which}: {e}")))?;
                let (xs, _) = spline.knots();
                let span = bounds.hi[0] - bounds.lo[0];
                if xs[0] > bounds.lo[0] + 1e-9 * span || xs[xs.len() - 1] < bounds.hi[0] - 1e-9 * span {
                    return Err(Error::Config(format!("{which}: table does not cover omega")));
                }
                Ok(ScalarField::from_fn_impl(1, which, spline))
            }
        }
    }

    fn is_table(&self) -> bool {
        matches!(self, HeightSpec::Table(_))
    }
}

impl ProfileConfig {
    pub fn build(&self) -> Result<DomainProfile> {
        let bounds = self.omega.bounds()?;
        let hp = self.h_plus.field("h_plus", &bounds)?;
        let hm = self.h_minus.field("h_minus", &bounds)?;
        let tabulated = self.h_plus.is_table() || self.h_minus.is_table();
        DomainProfile::from_heights(
            &self.name,
            CrossSection::boxed(bounds),
            hm,
            hp,
            ProfileSource::Config(self.clone()),
            tabulated,
        )
    }
}

pub fn load_profile(document: &str) -> Result<DomainProfile> {
    let cfg: ProfileConfig =
        serde_json::from_str(document).map_err(|e| Error::Config(format!("profile document: {e}")))?;
    cfg.build()
}

pub fn load_profile_file(path: impl AsRef<Path>) -> Result<DomainProfile> {
    load_profile(&std::fs::read_to_string(path)?)
}

/// Serialises a profile that was loaded from a document.
pub fn save_profile(profile: &DomainProfile) -> Result<String> {
    match profile.source() {
        ProfileSource::Config(cfg) => Ok(serde_json::to_string_pretty(cfg)?),
        _ => Err(Error::InvalidArgument(format!(
            "profile {} was not loaded from a document and cannot be saved",
            profile.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::builtin;

    const LENS: &str = r#"{"name": "lens", "omega": [-1, 1],
        "h_plus": {"poly": [0.5, 0, -0.5]}, "h_minus": {"poly": [0.5, 0, -0.5]}}"#;

    #[test]
    fn polynomial_lens() {
        let p = load_profile(LENS).unwrap();
        assert_eq!(p.d().value(&[0.3]), 0.0);
        assert!((p.thickness().value(&[0.3]) - 0.91).abs() < 1e-15);
        assert!((p.p().hessian(&[0.0]).unwrap()[(0, 0)] + 1.0).abs() < 1e-14);
        assert!(!p.is_tabulated());
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(load_profile(""), Err(Error::Config(_))));
        assert!(matches!(load_profile("{}"), Err(Error::Config(_))));
        let extra = LENS.replace("\"name\"", "\"colour\": 1, \"name\"");
        assert!(matches!(load_profile(&extra), Err(Error::Config(_))));
    }

    #[test]
    fn monomials_in_two_axes() {
        let doc = r#"{"name": "dome", "omega": [[-1, 1], [-1, 1]],
            "h_plus": {"poly": [{"coef": 1, "powers": [0, 0]}, {"coef": -1, "powers": [2, 0]}]},
            "h_minus": {"poly": [{"coef": 0, "powers": [0, 0]}]}}"#;
        let p = load_profile(doc).unwrap();
        assert!((p.thickness().value(&[0.5, 0.1]) - 0.75).abs() < 1e-15);
        assert!(!p.report().warnings.is_empty()); // H ≠ 0 on the y faces
    }

    #[test]
    fn tabulated_folium() {
        let reference = builtin("folium", &[]).unwrap();
        let n = 200;
        let x: Vec<f64> = (0..n)
            .map(|k| 0.5 - 0.5 * (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos())
            .collect();
        let y: Vec<f64> = x.iter().map(|&v| reference.h_plus().value(&[v])).collect();
        let cfg = ProfileConfig {
            name: "folium-table".into(),
            omega: OmegaSpec::Interval([0.0, 1.0]),
            h_plus: HeightSpec::Table(TableSpec { x: x.clone(), y: y.clone() }),
            h_minus: HeightSpec::Table(TableSpec { x, y }),
        };
        let tab = cfg.build().unwrap();
        assert!(tab.is_tabulated());
        let mut worst: f64 = 0.0;
        for k in 0..=960 {
            let v = 0.02 + 0.96 * k as f64 / 960.0;
            worst = worst.max((tab.thickness().value(&[v]) - reference.thickness().value(&[v])).abs());
        }
        assert!(worst < 1e-6, "max deviation {worst:e}");
    }

    #[test]
    fn round_trip() {
        let p = load_profile(LENS).unwrap();
        let q = load_profile(&save_profile(&p).unwrap()).unwrap();
        for k in 0..50 {
            let x = [-0.98 + 1.96 * k as f64 / 49.0];
            assert_eq!(p.thickness().value(&x), q.thickness().value(&x));
        }
        assert!(save_profile(&builtin("folium", &[]).unwrap()).is_err());
    }

    #[test]
    fn negative_table_is_rejected() {
        let doc = r#"{"name": "bad", "omega": [0, 1],
            "h_plus": {"table": {"x": [0, 0.25, 0.5, 0.75, 1], "y": [0, -1, -1, -1, 0]}},
            "h_minus": {"poly": [0]}}"#;
        assert!(load_profile(doc).is_err());
    }
}
