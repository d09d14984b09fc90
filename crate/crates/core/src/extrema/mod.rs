//! Peak of the thickness H and the two-term series for max uε and its
//! maximizer, plus a direct maximization of the evaluated series.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::expansion::{CoefficientColumn, ExpansionSeries};
use crate::fields::{Point, ScalarField, Stencil};
use crate::geometry::DomainProfile;

const STARTS: usize = 16;
const ASCENT_TOL: f64 = 1e-6;
const NEWTON_TOL: f64 = 1e-12;
const SAME_PEAK_REL: f64 = 1e-9;

/// Local data of d, p and H at the thickness maximizer x̄.
///
/// D₂, P₂, H₂ are half-Hessians; Σδ, Σπ are ∇(Δd)/6 and ∇(Δp)/6.
#[derive(Clone, Debug)]
pub struct PeakJet {
    pub x_bar: Point,
    pub h0: f64,
    pub d0: f64,
    pub p0: f64,
    pub d1: DVector<f64>,
    pub p1: DVector<f64>,
    pub grad_h: DVector<f64>,
    pub d2: DMatrix<f64>,
    pub p2: DMatrix<f64>,
    pub h2: DMatrix<f64>,
    pub sigma_delta: DVector<f64>,
    pub sigma_pi: DVector<f64>,
}

impl PeakJet {
    /// d₀D₂ + 2P₂ + ½d₁d₁ᵀ − H₀H₂, which vanishes identically.
    pub fn identity_residual(&self) -> DMatrix<f64> {
        &self.d2 * self.d0 + &self.p2 * 2.0 + (&self.d1 * self.d1.transpose()) * 0.5
            - &self.h2 * self.h0
    }

    /// p₁ + ½d₀d₁, which vanishes at the peak.
    pub fn gradient_residual(&self) -> DVector<f64> {
        &self.p1 + &self.d1 * (0.5 * self.d0)
    }
}

/// max uε ≈ c₂ε² + c₄ε⁴ at (x̄ + x̄₂ε², d₀/2 + ξₙ₂ε²).
#[derive(Clone, Debug)]
pub struct MaxExpansion {
    pub jet: PeakJet,
    pub c2: f64,
    pub c4: f64,
    pub xm2: DVector<f64>,
    pub xi_n2: f64,
}

impl MaxExpansion {
    pub fn value(&self, epsilon: f64) -> f64 {
        let e2 = epsilon * epsilon;
        self.c2 * e2 + self.c4 * e2 * e2
    }

    /// Predicted maximizer (x′, ξ) in scaled coordinates.
    pub fn maximizer(&self, epsilon: f64) -> (Vec<f64>, f64) {
        let e2 = epsilon * epsilon;
        let x = self
            .jet
            .x_bar
            .iter()
            .zip(self.xm2.iter())
            .map(|(a, b)| a + b * e2)
            .collect();
        (x, 0.5 * self.jet.d0 + self.xi_n2 * e2)
    }
}

/// Result of maximizing the evaluated series directly.
#[derive(Clone, Debug)]
pub struct NumericMax {
    pub x: Point,
    pub xi: f64,
    pub value: f64,
    pub iterations: usize,
}

fn start_points(profile: &DomainProfile) -> Vec<Vec<f64>> {
    let dim = profile.dim();
    let per_axis = (STARTS as f64).powf(1.0 / dim as f64).ceil() as usize;
    profile.omega().interior_grid(per_axis.max(2), 0.0)
}

fn ascend(h: &ScalarField, profile: &DomainProfile, start: Vec<f64>) -> Option<Vec<f64>> {
    let omega = profile.omega();
    let value = |x: &[f64]| {
        if omega.contains(x) {
            let v = h.value(x);
            if v.is_finite() {
                return v;
            }
        }
        f64::NEG_INFINITY
    };
    let mut x = start;
    let mut fx = value(&x);
    if !fx.is_finite() || fx <= 0.0 {
        return None;
    }
    let scale = omega.bounds().diameter();
    let mut t = 0.1 * scale;
    for _ in 0..5000 {
        let g = h.gradient_near_edge(&x).ok()?;
        let gn = g.norm();
        if gn < ASCENT_TOL {
            return Some(x);
        }
        // Newton direction when the Hessian is negative definite, else gradient.
        let newton = h.hessian_near_edge(&x).ok().and_then(|hs| {
            let hs = (&hs + hs.transpose()) * 0.5;
            let eig = SymmetricEigen::new(hs.clone());
            if eig.eigenvalues.iter().all(|&l| l < 0.0) {
                hs.lu().solve(&(-&g))
            } else {
                None
            }
        });
        let mut accepted = false;
        if let Some(step) = newton {
            let mut lam = 1.0;
            for _ in 0..40 {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + lam * s).collect();
                let ft = value(&trial);
                if ft >= fx {
                    x = trial;
                    fx = ft;
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
        }
        if !accepted {
            let dir = &g / gn;
            let mut tries = 0;
            loop {
                let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, s)| a + t * s).collect();
                let ft = value(&trial);
                if ft > fx {
                    x = trial;
                    fx = ft;
                    t *= 2.0;
                    break;
                }
                t *= 0.5;
                tries += 1;
                if tries > 80 || t < 1e-15 * scale {
                    // No uphill progress possible: accept only if stationary enough.
                    return (gn < 1e3 * ASCENT_TOL).then_some(x);
                }
            }
        }
    }
    None
}

fn polish(h: &ScalarField, mut x: Vec<f64>) -> Result<Vec<f64>> {
    for _ in 0..50 {
        let g = h.gradient(&x)?;
        if g.norm() < NEWTON_TOL {
            break;
        }
        let hs = h.hessian(&x)?;
        let step = hs
            .lu()
            .solve(&(-&g))
            .ok_or_else(|| Error::NoPeak("singular Hessian of H during Newton polish".into()))?;
        x.iter_mut().zip(step.iter()).for_each(|(a, s)| *a += s);
        if step.norm() < 1e-15 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            break;
        }
    }
    Ok(x)
}

/// Interior maximizer x̄ of H.
pub fn find_peak(profile: &DomainProfile) -> Result<Point> {
    let h = profile.thickness();
    let scale = profile.omega().bounds().diameter();
    let mut found: Vec<(Vec<f64>, f64)> = Vec::new();
    for start in start_points(profile) {
        let Some(x) = ascend(h, profile, start) else {
            continue;
        };
        let x = match polish(h, x.clone()) {
            Ok(p) if profile.omega().contains(&p) => p,
            _ => x,
        };
        let v = h.value(&x);
        let dup = found.iter().any(|(y, _)| {
            x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < 1e-3 * scale
        });
        if !dup {
            found.push((x, v));
        }
    }
    if found.is_empty() {
        return Err(Error::NoPeak(format!(
            "no interior stationary point of H found for profile {}",
            profile.name()
        )));
    }
    found.sort_by(|a, b| b.1.total_cmp(&a.1));
    let top = found[0].1;
    // Degenerate tops are diagnosed first: their polished iterates would
    // otherwise look like several tied peaks. Curvature negligible on the
    // scale H₀/diam² counts as singular.
    let hs = h.hessian(&found[0].0)?;
    let eig = SymmetricEigen::new((&hs + hs.transpose()) * 0.5);
    let floor = 1e-6 * top.abs() / (scale * scale);
    if eig.eigenvalues.iter().any(|&l| l >= -floor) {
        return Err(Error::HypothesisH2(eig.eigenvalues.iter().cloned().collect()));
    }
    let ties: Vec<Vec<f64>> = found
        .iter()
        .filter(|(_, v)| (top - v).abs() <= SAME_PEAK_REL * top.abs())
        .map(|(x, _)| x.clone())
        .collect();
    if ties.len() > 1 {
        return Err(Error::MultiplePeaks(ties));
    }
    let x_bar = found.swap_remove(0).0;
    Ok(Point::new(x_bar))
}

pub fn peak_jet(profile: &DomainProfile) -> Result<PeakJet> {
    let x_bar = find_peak(profile)?;
    let x: &[f64] = &x_bar;
    let (d, p, h) = (profile.d(), profile.p(), profile.thickness());
    let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.25;
    Ok(PeakJet {
        h0: h.eval(x)?,
        d0: d.eval(x)?,
        p0: p.eval(x)?,
        d1: d.gradient(x)?,
        p1: p.gradient(x)?,
        grad_h: h.gradient(x)?,
        d2: sym(d.hessian(x)?),
        p2: sym(p.hessian(x)?),
        h2: sym(h.hessian(x)?),
        sigma_delta: d.third_order_sums(x)?,
        sigma_pi: p.third_order_sums(x)?,
        x_bar,
    })
}

pub fn max_series(profile: &DomainProfile) -> Result<MaxExpansion> {
    max_series_from_jet(peak_jet(profile)?)
}

pub fn max_series_from_jet(jet: PeakJet) -> Result<MaxExpansion> {
    let h0 = jet.h0;
    let tr_d2 = jet.d2.trace();
    let tr_p2 = jet.p2.trace();
    let c2 = 0.25 * h0 * h0;
    let c4 = 0.125 * h0 * h0 * (jet.d0 * tr_d2 + 2.0 * tr_p2);
    let h2_inv = jet.h2.clone().try_inverse().ok_or_else(|| {
        Error::HypothesisH2(SymmetricEigen::new(jet.h2.clone()).eigenvalues.iter().cloned().collect())
    })?;
    let w = &jet.sigma_pi + &jet.sigma_delta * (0.5 * jet.d0);
    let hd1 = &h2_inv * &jet.d1;
    let hw = &h2_inv * &w;
    let xm2 = (&hd1 * (0.5 * tr_d2) + &hw * 3.0) * (-0.25 * h0);
    let xi_n2 = -0.125 * h0 * (0.5 * tr_d2 * jet.d1.dot(&hd1) + 3.0 * jet.d1.dot(&hw))
        + h0 * h0 * tr_d2 / 24.0;
    Ok(MaxExpansion {
        jet,
        c2,
        c4,
        xm2,
        xi_n2,
    })
}

/// Samples the series column at x′ + offsets along one or two axes.
struct Probe<'a> {
    series: &'a ExpansionSeries,
    h: f64,
    first: Stencil,
    second: Stencil,
}

impl Probe<'_> {
    fn column(&self, x: &[f64], shifts: &[(usize, i32)]) -> Result<CoefficientColumn> {
        let mut y = x.to_vec();
        for &(axis, k) in shifts {
            y[axis] += k as f64 * self.h;
        }
        if !self.series.profile().omega().contains(&y) {
            return Err(Error::OutsideDomain { point: y });
        }
        self.series.coefficients_at(&y)
    }

    /// Value, gradient and Hessian of uε in (x′, ξ).
    fn derivatives(&self, x: &[f64], xi: f64, eps: f64) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        let m = x.len();
        let centre = self.column(x, &[])?;
        let value = centre.eval(xi, eps);
        let (u_xi, u_xixi) = centre.xi_derivatives(xi, eps);
        let mut g = DVector::zeros(m + 1);
        let mut hs = DMatrix::zeros(m + 1, m + 1);
        g[m] = u_xi;
        hs[(m, m)] = u_xixi;
        let mut shifted = Vec::with_capacity(m);
        for a in 0..m {
            let cols: Vec<(i32, CoefficientColumn)> = self
                .second
                .offsets
                .iter()
                .map(|&k| Ok((k, if k == 0 { centre.clone() } else { self.column(x, &[(a, k)])? })))
                .collect::<Result<_>>()?;
            let at = |k: i32| &cols.iter().find(|(o, _)| *o == k).unwrap().1;
            let mut ga = 0.0;
            let mut gx = 0.0;
            for (&k, &w) in self.first.offsets.iter().zip(&self.first.weights) {
                ga += w * at(k).eval(xi, eps);
                gx += w * at(k).xi_derivatives(xi, eps).0;
            }
            let mut haa = 0.0;
            for (&k, &w) in self.second.offsets.iter().zip(&self.second.weights) {
                haa += w * at(k).eval(xi, eps);
            }
            g[a] = ga / self.h;
            hs[(a, a)] = haa / (self.h * self.h);
            hs[(a, m)] = gx / self.h;
            hs[(m, a)] = gx / self.h;
            shifted.push(cols);
        }
        for a in 0..m {
            for b in a + 1..m {
                let mut v = 0.0;
                for (&ka, &wa) in self.first.offsets.iter().zip(&self.first.weights) {
                    for (&kb, &wb) in self.first.offsets.iter().zip(&self.first.weights) {
                        v += wa * wb * self.column(x, &[(a, ka), (b, kb)])?.eval(xi, eps);
                    }
                }
                hs[(a, b)] = v / (self.h * self.h);
                hs[(b, a)] = hs[(a, b)];
            }
        }
        Ok((value, g, hs))
    }
}

/// Maximizes uε^N by damped Newton from the leading-order seed (x̄, d₀/2).
pub fn numeric_max(series: &ExpansionSeries, epsilon: f64) -> Result<NumericMax> {
    let jet = peak_jet(series.profile())?;
    numeric_max_from(series, epsilon, jet.x_bar.to_vec(), 0.5 * jet.d0)
}

pub fn numeric_max_from(
    series: &ExpansionSeries,
    epsilon: f64,
    seed_x: Vec<f64>,
    seed_xi: f64,
) -> Result<NumericMax> {
    let profile = series.profile();
    let policy = profile.p().fd_policy();
    let probe = Probe {
        series,
        h: policy.step_for(profile.omega().bounds().diameter()),
        first: Stencil::central(1, policy.order),
        second: Stencil::central(2, policy.order),
    };
    let m = seed_x.len();
    let mut x = seed_x;
    let mut xi = seed_xi;
    let inside = |x: &[f64], xi: f64| -> bool {
        profile.omega().contains(x)
            && xi < profile.h_plus().value(x)
            && xi > -profile.h_minus().value(x)
    };
    let (mut f, mut g, mut hs) = probe.derivatives(&x, xi, epsilon)?;
    for it in 0..200 {
        let eig = SymmetricEigen::new(hs.clone());
        let step = if eig.eigenvalues.iter().all(|&l| l < 0.0) {
            hs.clone().lu().solve(&(-&g)).unwrap_or_else(|| g.clone())
        } else {
            let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
            &g / lmax.max(1e-300)
        };
        let mut lam = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let tx: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + lam * s).collect();
            let txi = xi + lam * step[m];
            if inside(&tx, txi) {
                if let Ok((tf, tg, th)) = probe.derivatives(&tx, txi, epsilon) {
                    // Near the top, values stall at rounding level; accept
                    // steps that shrink the gradient instead.
                    if tf > f || (tf >= f - 1e-15 * f.abs() && tg.norm() < g.norm()) {
                        x = tx;
                        xi = txi;
                        f = tf;
                        g = tg;
                        hs = th;
                        moved = true;
                        break;
                    }
                }
            }
            lam *= 0.5;
        }
        let size = (lam * step.norm()).abs();
        if !moved || size < 1e-13 {
            if !moved && g.norm() > 1e-8 * f.abs().max(1e-300) {
                return Err(Error::NoConvergence {
                    what: "numeric_max",
                    detail: format!("stalled at x = {x:?}, ξ = {xi}, |∇u| = {:e}", g.norm()),
                });
            }
            return Ok(NumericMax {
                x: Point::new(x),
                xi,
                value: f,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "numeric_max",
        detail: "iteration budget exhausted".into(),
    })
}
