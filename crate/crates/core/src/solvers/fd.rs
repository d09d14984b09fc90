//! Five-point finite differences for −Δu = 2 on a planar thin domain, with
//! Shortley–Weller legs where the boundary cuts grid lines.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::linalg::{bicgstab, CsrMatrix, Ilu0};
use crate::error::{Error, Result};
use crate::expansion::ExpansionSeries;
use crate::geometry::DomainProfile;

/// Relative residual the linear solve is driven to.
pub const SOLVE_TOL: f64 = 1e-10;
/// Legs shorter than this fraction of the spacing pin the node to zero.
const MIN_LEG: f64 = 1e-6;
const BISECTION_TOL: f64 = 1e-12;
const MIN_COLUMNS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryTreatment {
    ShortleyWeller,
}

/// Grid values over the bounding box of Ωε. Nodes outside Ωε hold zero.
#[derive(Clone, Debug)]
pub struct GridSolution {
    pub profile_name: String,
    pub epsilon: f64,
    pub origin: (f64, f64),
    pub spacing: (f64, f64),
    /// Node counts (columns, rows).
    pub shape: (usize, usize),
    /// Row-major: node (i, k) at index k·nx + i.
    pub values: Vec<f64>,
    pub boundary_treatment: BoundaryTreatment,
    pub iterations: usize,
    pub relative_residual: f64,
    inside: Vec<bool>,
    /// (−εh₋, εh₊) for every column strictly inside ω, NaN elsewhere.
    column_limits: Vec<(f64, f64)>,
    weights: Vec<f64>,
}

impl GridSolution {
    pub fn node(&self, i: usize, k: usize) -> (f64, f64) {
        (
            self.origin.0 + i as f64 * self.spacing.0,
            self.origin.1 + k as f64 * self.spacing.1,
        )
    }

    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[k * self.shape.0 + i]
    }

    pub fn is_inside(&self, i: usize, k: usize) -> bool {
        self.inside[k * self.shape.0 + i]
    }

    pub fn interior_nodes(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Node value and quadrature weight for every node inside Ωε.
    fn weighted_nodes(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        let nx = self.shape.0;
        (0..self.values.len())
            .filter(move |&idx| self.inside[idx])
            .map(move |idx| (idx % nx, idx / nx, self.values[idx], self.weights[idx]))
    }

    /// Piecewise linear in y along each column (zero on the boundary),
    /// then linear in x.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        let (nx, _) = self.shape;
        let s = (x - self.origin.0) / self.spacing.0;
        if !(s >= 0.0 && s <= (nx - 1) as f64) {
            return 0.0;
        }
        let i0 = (s.floor() as usize).min(nx - 2);
        let t = s - i0 as f64;
        (1.0 - t) * self.column_value(i0, y) + t * self.column_value(i0 + 1, y)
    }

    fn column_value(&self, i: usize, y: f64) -> f64 {
        let (lo, hi) = self.column_limits[i];
        if !(lo < y && y < hi) {
            return 0.0;
        }
        let hy = self.spacing.1;
        let s = (y - self.origin.1) / hy;
        let k0 = s.floor() as usize;
        let (ya, va) = if self.is_inside(i, k0) {
            (self.node(i, k0).1, self.value(i, k0))
        } else {
            (lo, 0.0)
        };
        let k1 = k0 + 1;
        let (yb, vb) = if k1 < self.shape.1 && self.is_inside(i, k1) {
            (self.node(i, k1).1, self.value(i, k1))
        } else {
            (hi, 0.0)
        };
        if yb <= ya {
            return va;
        }
        va + (vb - va) * (y - ya) / (yb - ya)
    }

    /// Writes `x,y,value` for every node inside Ωε.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "value"])?;
        for (i, k, v, _) in self.weighted_nodes() {
            let (x, y) = self.node(i, k);
            w.write_record([x.to_string(), y.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

struct Geometry<'a> {
    profile: &'a DomainProfile,
    eps: f64,
    a: f64,
    b: f64,
}

impl Geometry<'_> {
    /// Signed margin of (x, y): positive strictly inside Ωε.
    fn margin(&self, x: f64, y: f64) -> f64 {
        if !(self.a < x && x < self.b) {
            return -1.0;
        }
        let hp = self.eps * self.profile.h_plus().value(&[x]);
        let hm = self.eps * self.profile.h_minus().value(&[x]);
        (hp - y).min(y + hm)
    }

    /// Distance from an inside point along the x-axis to the boundary,
    /// searching up to `reach` in direction `dir`.
    fn horizontal_leg(&self, x: f64, y: f64, dir: f64, reach: f64) -> f64 {
        let (mut inside, mut outside) = (0.0, reach);
        while outside - inside > BISECTION_TOL {
            let mid = 0.5 * (inside + outside);
            if self.margin(x + dir * mid, y) > 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    }
}

fn max_height(f: &crate::fields::ScalarField, a: f64, b: f64) -> f64 {
    let m = 4096;
    (1..m)
        .map(|i| f.value(&[a + (b - a) * i as f64 / m as f64]))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}

/// Solves −Δu = 2 in Ωε, u = 0 on ∂Ωε, with `resolution` intervals per axis.
pub fn solve_fd(profile: &DomainProfile, epsilon: f64, resolution: usize) -> Result<GridSolution> {
    if profile.dim() != 1 {
        return Err(Error::InvalidArgument(format!(
            "the finite-difference solver is planar; profile `{}` has a {}-dimensional cross-section",
            profile.name(),
            profile.dim()
        )));
    }
    if resolution < 32 {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be at least 32, got {resolution}"
        )));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let (a, b) = profile.omega().axis_limits(&[]);
    let geo = Geometry { profile, eps: epsilon, a, b };
    let r = resolution as f64;
    // Pad the box so its top and bottom rows lie outside Ωε.
    let top = epsilon * max_height(profile.h_plus(), a, b) * (1.0 + 2.0 / r);
    let bottom = -epsilon * max_height(profile.h_minus(), a, b) * (1.0 + 2.0 / r);
    if !(top > bottom) {
        return Err(Error::DegenerateGrid(format!("profile `{}` has no thickness", profile.name())));
    }
    let nx = resolution + 1;
    let ny = resolution + 1;
    let hx = (b - a) / r;
    let hy = (top - bottom) / r;
    let node = |i: usize, k: usize| (a + i as f64 * hx, bottom + k as f64 * hy);

    let column_limits: Vec<(f64, f64)> = (0..nx)
        .map(|i| {
            let x = node(i, 0).0;
            if 0 < i && i < nx - 1 {
                (
                    -epsilon * profile.h_minus().value(&[x]),
                    epsilon * profile.h_plus().value(&[x]),
                )
            } else {
                (f64::NAN, f64::NAN)
            }
        })
        .collect();
    let mut inside = vec![false; nx * ny];
    for i in 1..nx - 1 {
        let (lo, hi) = column_limits[i];
        for k in 1..ny - 1 {
            let y = node(i, k).1;
            inside[k * nx + i] = lo < y && y < hi;
        }
    }
    let columns = (0..nx).filter(|&i| (0..ny).any(|k| inside[k * nx + i])).count();
    if columns < MIN_COLUMNS {
        return Err(Error::DegenerateGrid(format!(
            "only {columns} grid columns meet the domain; increase the resolution"
        )));
    }

    // Legs (east, west, north, south) for every inside node.
    let mut legs = vec![[0.0f64; 4]; nx * ny];
    let mut pinned = vec![false; nx * ny];
    for k in 0..ny {
        for i in 0..nx {
            let idx = k * nx + i;
            if !inside[idx] {
                continue;
            }
            let (x, y) = node(i, k);
            let (lo, hi) = column_limits[i];
            let l = [
                if inside[idx + 1] { hx } else { geo.horizontal_leg(x, y, 1.0, hx) },
                if inside[idx - 1] { hx } else { geo.horizontal_leg(x, y, -1.0, hx) },
                if inside[idx + nx] { hy } else { hi - y },
                if inside[idx - nx] { hy } else { y - lo },
            ];
            pinned[idx] = l[0].min(l[1]) < MIN_LEG * hx || l[2].min(l[3]) < MIN_LEG * hy;
            legs[idx] = l;
        }
    }

    // Unknowns ordered column by column so vertical neighbours are adjacent.
    let mut unknown = vec![usize::MAX; nx * ny];
    let mut order = Vec::new();
    for i in 0..nx {
        for k in 0..ny {
            let idx = k * nx + i;
            if inside[idx] && !pinned[idx] {
                unknown[idx] = order.len();
                order.push(idx);
            }
        }
    }
    if order.is_empty() {
        return Err(Error::DegenerateGrid("no interior unknowns; increase the resolution".into()));
    }

    let mut rows = Vec::with_capacity(order.len());
    for &idx in &order {
        let [he, hw, hn, hs] = legs[idx];
        let mut row = vec![(unknown[idx], 2.0 / (he * hw) + 2.0 / (hn * hs))];
        let neighbours = [
            (idx + 1, he, -2.0 / (he * (he + hw))),
            (idx - 1, hw, -2.0 / (hw * (he + hw))),
            (idx + nx, hn, -2.0 / (hn * (hn + hs))),
            (idx - nx, hs, -2.0 / (hs * (hn + hs))),
        ];
        for (nb, _, coef) in neighbours {
            if unknown[nb] != usize::MAX {
                row.push((unknown[nb], coef));
            }
        }
        rows.push(row);
    }
    // Full legs to a pinned or outside neighbour carry zero Dirichlet data;
    // shortened legs end on the boundary itself. Either way the rhs stays 2.
    let matrix = CsrMatrix::from_rows(rows);
    let rhs = vec![2.0; order.len()];
    // Leading-order guess (εh₊ − y)(y + εh₋).
    let mut sol: Vec<f64> = order
        .iter()
        .map(|&idx| {
            let (i, k) = (idx % nx, idx / nx);
            let y = node(i, k).1;
            let (lo, hi) = column_limits[i];
            (hi - y) * (y - lo)
        })
        .collect();
    let pre = Ilu0::new(&matrix)?;
    let stats = bicgstab(&matrix, &pre, &rhs, &mut sol, SOLVE_TOL, 20_000)?;

    let mut values = vec![0.0; nx * ny];
    for (u, &idx) in sol.iter().zip(&order) {
        values[idx] = *u;
    }

    // Trapezoid weights along each column, boundary points included with
    // value zero, times hx across columns.
    let mut weights = vec![0.0; nx * ny];
    for i in 1..nx - 1 {
        let (lo, hi) = column_limits[i];
        let ks: Vec<usize> = (0..ny).filter(|&k| inside[k * nx + i]).collect();
        for (m, &k) in ks.iter().enumerate() {
            let below = if m == 0 { lo } else { node(i, ks[m - 1]).1 };
            let above = if m + 1 == ks.len() { hi } else { node(i, ks[m + 1]).1 };
            weights[k * nx + i] = hx * 0.5 * (above - below).max(0.0);
        }
    }

    Ok(GridSolution {
        profile_name: profile.name().to_string(),
        epsilon,
        origin: (a, bottom),
        spacing: (hx, hy),
        shape: (nx, ny),
        values,
        boundary_treatment: BoundaryTreatment::ShortleyWeller,
        iterations: stats.iterations,
        relative_residual: stats.relative_residual,
        inside,
        column_limits,
        weights,
    })
}

/// ∫Ωε u from the grid: trapezoid along columns with cut end cells, then
/// across columns.
pub fn torsion_from_grid(grid: &GridSolution) -> f64 {
    grid.weighted_nodes().map(|(_, _, v, w)| v * w).sum()
}

/// ‖u_series − u_grid‖ / ‖u_grid‖ in L²(Ωε), with the series evaluated at
/// ξ = y/ε on the grid nodes.
pub fn l2_relative_error(series: &ExpansionSeries, grid: &GridSolution) -> Result<f64> {
    let profile = series.profile();
    if profile.name() != grid.profile_name || profile.dim() != 1 {
        return Err(Error::InvalidArgument(format!(
            "series for `{}` does not match grid for `{}`",
            profile.name(),
            grid.profile_name
        )));
    }
    let eps = grid.epsilon;
    let (nx, ny) = grid.shape;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 1..nx - 1 {
        let ks: Vec<usize> = (0..ny).filter(|&k| grid.is_inside(i, k)).collect();
        if ks.is_empty() {
            continue;
        }
        let x = grid.node(i, 0).0;
        let column = series.coefficients_at(&[x])?;
        for k in ks {
            let idx = k * nx + i;
            let (u, w) = (grid.values[idx], grid.weights[idx]);
            let s = column.eval(grid.node(i, k).1 / eps, eps);
            num += w * (s - u).powi(2);
            den += w * u * u;
        }
    }
    if den == 0.0 {
        return Err(Error::DegenerateGrid("grid solution vanishes identically".into()));
    }
    Ok((num / den).sqrt())
}
