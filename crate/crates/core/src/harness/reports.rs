//! Serialisable summaries behind each command-line subcommand.

use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::Result;
use crate::expansion::{build_expansion, ExpansionSeries};
use crate::extrema::max_series;
use crate::geometry::{load_profile_file, Builtin, DomainProfile};
use crate::rigidity::{torsion_series, torsion_series_direct};
use crate::solvers::{torsion_from_grid, GridSolution, WosEstimate};

/// A builtin spec such as `folium` or `ellipsoid:1,2,0.5`, or a path to a
/// profile document.
pub fn resolve_profile(arg: &str) -> Result<DomainProfile> {
    if Path::new(arg).is_file() {
        return load_profile_file(arg);
    }
    Builtin::from_str(arg)?.profile()
}

#[derive(Clone, Debug, Serialize)]
pub struct AlphaRow {
    pub x: Vec<f64>,
    pub j: usize,
    /// αᵢ⁽²ʲ⁾ for i = 0..2j.
    pub alpha: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointValue {
    pub x: Vec<f64>,
    pub xi: f64,
    pub epsilon: f64,
    pub u: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpandReport {
    pub profile: String,
    pub order: usize,
    pub alpha: Vec<AlphaRow>,
    pub values: Vec<PointValue>,
}

/// Coefficient table at `table_points`, plus uε^N at (x′, ξ) pairs.
pub fn expand_report(
    series: &ExpansionSeries,
    table_points: &[Vec<f64>],
    evaluate: &[(Vec<f64>, f64)],
    epsilon: f64,
) -> Result<ExpandReport> {
    let mut alpha = Vec::new();
    for x in table_points {
        let col = series.coefficients_at(x)?;
        for (j, level) in col.values.into_iter().enumerate() {
            alpha.push(AlphaRow {
                x: x.clone(),
                j: j + 1,
                alpha: level,
            });
        }
    }
    let values = evaluate
        .iter()
        .map(|(x, xi)| {
            Ok(PointValue {
                x: x.clone(),
                xi: *xi,
                epsilon,
                u: series.eval_u(x, *xi, epsilon)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpandReport {
        profile: series.profile().name().to_string(),
        order: series.order(),
        alpha,
        values,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxReport {
    pub profile: String,
    pub x_bar: Vec<f64>,
    pub h0: f64,
    pub c2: f64,
    pub c4: f64,
    pub xm2: Vec<f64>,
    pub xi_n2: f64,
    pub jet_identity_residual: f64,
    pub epsilon: Option<f64>,
    pub value: Option<f64>,
    pub maximizer: Option<(Vec<f64>, f64)>,
}

pub fn max_report(profile: &DomainProfile, epsilon: Option<f64>) -> Result<MaxReport> {
    let m = max_series(profile)?;
    Ok(MaxReport {
        profile: profile.name().to_string(),
        x_bar: m.jet.x_bar.iter().cloned().collect(),
        h0: m.jet.h0,
        c2: m.c2,
        c4: m.c4,
        xm2: m.xm2.iter().cloned().collect(),
        xi_n2: m.xi_n2,
        jet_identity_residual: m.jet.identity_residual().norm(),
        epsilon,
        value: epsilon.map(|e| m.value(e)),
        maximizer: epsilon.map(|e| m.maximizer(e)),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TorsionReport {
    pub profile: String,
    pub c3: f64,
    pub c5: f64,
    pub c7: f64,
    /// Coefficients from integrating the recursion's u₂ⱼ directly.
    pub direct: [f64; 3],
    /// Largest |closed form − direct| over the three coefficients.
    pub dual_path_delta: f64,
    pub quadrature_error_estimate: f64,
    pub epsilon: Option<f64>,
    pub value: Option<f64>,
}

pub fn torsion_report(profile: &DomainProfile, epsilon: Option<f64>) -> Result<TorsionReport> {
    let t = torsion_series(profile)?;
    let series = build_expansion(profile, 3)?;
    let d = torsion_series_direct(&series)?;
    let delta = t
        .coefficients()
        .iter()
        .zip(d.coefficients())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(TorsionReport {
        profile: profile.name().to_string(),
        c3: t.c3,
        c5: t.c5,
        c7: t.c7,
        direct: d.coefficients(),
        dual_path_delta: delta,
        quadrature_error_estimate: t.quadrature_error_estimate + d.quadrature_error_estimate,
        epsilon,
        value: epsilon.map(|e| t.value(e)),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GridReport {
    pub profile: String,
    pub epsilon: f64,
    pub resolution: usize,
    pub spacing: (f64, f64),
    pub interior_nodes: usize,
    pub iterations: usize,
    pub relative_residual: f64,
    pub max_value: f64,
    pub torsion: f64,
}

pub fn grid_report(grid: &GridSolution) -> GridReport {
    GridReport {
        profile: grid.profile_name.clone(),
        epsilon: grid.epsilon,
        resolution: grid.shape.0 - 1,
        spacing: grid.spacing,
        interior_nodes: grid.interior_nodes(),
        iterations: grid.iterations,
        relative_residual: grid.relative_residual,
        max_value: grid.max_value(),
        torsion: torsion_from_grid(grid),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WosReport {
    pub profile: String,
    pub epsilon: f64,
    pub start: Vec<f64>,
    #[serde(flatten)]
    pub estimate: WosEstimate,
}
