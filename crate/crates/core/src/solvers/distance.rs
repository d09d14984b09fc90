//! Conservative distances to ∂Ωε for walk-on-spheres.
//!
//! Radii only need to be lower bounds: a sphere that fits inside Ωε keeps
//! the estimator unbiased, a smaller one merely costs extra steps.

use crate::error::{Error, Result};
use crate::geometry::{Builtin, DomainProfile, ProfileSource, ThinDomain};

pub trait BoundaryDistance: Send + Sync {
    /// Ambient dimension n.
    fn dim(&self) -> usize;
    /// Lower bound on the distance from an interior point to ∂Ωε.
    fn distance(&self, point: &[f64]) -> f64;
}

/// Distance lower bound for the thin ellipsoid with semi-axes bⱼ: if
/// ρ = |B⁻¹p| < 1 then the ball of radius (1 − ρ)·min bⱼ about p fits inside.
#[derive(Clone, Debug)]
pub struct EllipsoidDistance {
    axes: Vec<f64>,
    min_axis: f64,
}

impl EllipsoidDistance {
    pub fn new(axes: Vec<f64>) -> Self {
        let min_axis = axes.iter().cloned().fold(f64::INFINITY, f64::min);
        Self { axes, min_axis }
    }
}

impl BoundaryDistance for EllipsoidDistance {
    fn dim(&self) -> usize {
        self.axes.len()
    }

    fn distance(&self, p: &[f64]) -> f64 {
        let rho = p
            .iter()
            .zip(&self.axes)
            .map(|(x, a)| (x / a).powi(2))
            .sum::<f64>()
            .sqrt();
        ((1.0 - rho) * self.min_axis).max(0.0)
    }
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    p: [f64; 2],
    q: [f64; 2],
    /// Bound on how far the true boundary strays from the chord.
    slack: f64,
}

impl Segment {
    fn distance(&self, x: [f64; 2]) -> f64 {
        let d = [self.q[0] - self.p[0], self.q[1] - self.p[1]];
        let w = [x[0] - self.p[0], x[1] - self.p[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 > 0.0 {
            ((w[0] * d[0] + w[1] * d[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (w[0] - t * d[0]).hypot(w[1] - t * d[1])
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    lo: [f64; 2],
    hi: [f64; 2],
    slack: f64,
    /// Children, or a segment range for leaves.
    left: usize,
    right: usize,
    leaf: bool,
}

const LEAF_SIZE: usize = 4;

/// Planar boundary as an adaptively refined polyline under a bounding-box
/// tree.
#[derive(Clone, Debug)]
pub struct PolylineDistance {
    segments: Vec<Segment>,
    nodes: Vec<Node>,
}

impl PolylineDistance {
    /// Refines each curve until every chord is within `tol` of the curve.
    pub fn from_domain(domain: &ThinDomain, tol: f64) -> Result<Self> {
        let profile = domain.profile();
        if profile.dim() != 1 {
            return Err(Error::DistanceUnavailable(profile.name().to_string()));
        }
        let eps = domain.epsilon();
        let (a, b) = profile.omega().axis_limits(&[]);
        let upper = |t: f64| [t, eps * profile.h_plus().value(&[t])];
        let lower = |t: f64| [t, -eps * profile.h_minus().value(&[t])];
        let mut segments = Vec::new();
        refine_curve(&upper, a, b, tol, &mut segments);
        refine_curve(&lower, a, b, tol, &mut segments);
        // Lateral walls where H does not vanish on ∂ω.
        for x in [a, b] {
            let (p, q) = (lower(x), upper(x));
            if q[1] - p[1] > 0.0 {
                segments.push(Segment { p, q, slack: 0.0 });
            }
        }
        if segments.iter().any(|s| !(s.p.iter().chain(&s.q).all(|v| v.is_finite()))) {
            return Err(Error::NonFinite {
                field: format!("boundary of `{}`", profile.name()),
                at: vec![],
            });
        }
        let mut tree = Self {
            segments,
            nodes: Vec::new(),
        };
        let n = tree.segments.len();
        tree.build(0, n);
        Ok(tree)
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    fn build(&mut self, lo: usize, hi: usize) -> usize {
        let segs = &self.segments[lo..hi];
        let mut bl = [f64::INFINITY; 2];
        let mut bh = [f64::NEG_INFINITY; 2];
        let mut slack: f64 = 0.0;
        for s in segs {
            for v in [s.p, s.q] {
                for ax in 0..2 {
                    bl[ax] = bl[ax].min(v[ax]);
                    bh[ax] = bh[ax].max(v[ax]);
                }
            }
            slack = slack.max(s.slack);
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo: bl,
            hi: bh,
            slack,
            left: lo,
            right: hi,
            leaf: true,
        });
        if hi - lo > LEAF_SIZE {
            let mid = lo + (hi - lo) / 2;
            let l = self.build(lo, mid);
            let r = self.build(mid, hi);
            self.nodes[id].left = l;
            self.nodes[id].right = r;
            self.nodes[id].leaf = false;
        }
        id
    }

    fn box_distance(n: &Node, x: [f64; 2]) -> f64 {
        let dx = (n.lo[0] - x[0]).max(x[0] - n.hi[0]).max(0.0);
        let dy = (n.lo[1] - x[1]).max(x[1] - n.hi[1]).max(0.0);
        dx.hypot(dy)
    }
}

fn refine_curve<F: Fn(f64) -> [f64; 2]>(c: &F, a: f64, b: f64, tol: f64, out: &mut Vec<Segment>) {
    const START: usize = 256;
    for i in 0..START {
        let t0 = a + (b - a) * i as f64 / START as f64;
        let t1 = a + (b - a) * (i + 1) as f64 / START as f64;
        split(c, t0, t1, tol, 0, out);
    }
}

fn split<F: Fn(f64) -> [f64; 2]>(c: &F, t0: f64, t1: f64, tol: f64, depth: usize, out: &mut Vec<Segment>) {
    let chord = Segment {
        p: c(t0),
        q: c(t1),
        slack: 0.0,
    };
    let dev = [0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875]
        .iter()
        .map(|s| chord.distance(c(t0 + s * (t1 - t0))))
        .fold(0.0, f64::max);
    if dev <= tol || depth >= 60 || t1 - t0 <= f64::EPSILON * t0.abs().max(1.0) {
        out.push(Segment {
            slack: 2.0 * dev,
            ..chord
        });
        return;
    }
    let tm = 0.5 * (t0 + t1);
    split(c, t0, tm, tol, depth + 1, out);
    split(c, tm, t1, tol, depth + 1, out);
}

impl BoundaryDistance for PolylineDistance {
    fn dim(&self) -> usize {
        2
    }

    fn distance(&self, point: &[f64]) -> f64 {
        let x = [point[0], point[1]];
        let mut best = f64::INFINITY;
        // The tree is balanced, so its depth stays far below the stack size.
        let mut stack = [0usize; 128];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let id = stack[top];
            let node = &self.nodes[id];
            if Self::box_distance(node, x) - node.slack >= best {
                continue;
            }
            if node.leaf {
                for s in &self.segments[node.left..node.right] {
                    best = best.min(s.distance(x) - s.slack);
                }
            } else {
                let (l, r) = (node.left, node.right);
                let dl = Self::box_distance(&self.nodes[l], x);
                let dr = Self::box_distance(&self.nodes[r], x);
                // Nearer child popped first.
                let (first, second) = if dl < dr { (r, l) } else { (l, r) };
                stack[top] = first;
                stack[top + 1] = second;
                top += 2;
            }
        }
        best.max(0.0)
    }
}

/// Boundary distance for the profile at thickness ε: planar profiles use a
/// refined polyline, ellipsoids in any dimension the inscribed-ball bound.
pub fn boundary_distance(domain: &ThinDomain) -> Result<Box<dyn BoundaryDistance>> {
    let profile = domain.profile();
    if profile.dim() == 1 {
        let tol = 1e-9 * domain_scale(domain);
        return Ok(Box::new(PolylineDistance::from_domain(domain, tol)?));
    }
    match profile.source() {
        ProfileSource::Builtin(Builtin::Ellipsoid { semi_axes, thin }) => {
            let mut axes = semi_axes.clone();
            axes.push(domain.epsilon() * thin);
            Ok(Box::new(EllipsoidDistance::new(axes)))
        }
        _ => Err(Error::DistanceUnavailable(profile.name().to_string())),
    }
}

/// Largest extent of the bounding box of Ωε.
pub fn domain_scale(domain: &ThinDomain) -> f64 {
    let profile: &DomainProfile = domain.profile();
    let bounds = profile.omega().bounds();
    let span = bounds
        .lo
        .iter()
        .zip(&bounds.hi)
        .map(|(lo, hi)| hi - lo)
        .fold(0.0, f64::max);
    let thick = profile
        .omega()
        .interior_grid(33, 0.0)
        .iter()
        .map(|x| profile.thickness().value(x))
        .filter(|h| h.is_finite())
        .fold(0.0, f64::max);
    span.max(domain.epsilon() * thick)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::builtin;

    #[test]
    fn disc_distance_matches_radius_gap() {
        let d = ThinDomain::new(builtin("disc", &[]).unwrap(), 1.0).unwrap();
        let dist = boundary_distance(&d).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.3, -0.2), (-0.7, 0.5), (0.99, 0.0)] {
            let exact = 1.0 - f64::hypot(x, y);
            let got = dist.distance(&[x, y]);
            assert!(got <= exact + 1e-12 && got > exact - 1e-8, "{got} vs {exact}");
        }
    }

    #[test]
    fn ellipsoid_bound_is_exact_for_balls() {
        let d = EllipsoidDistance::new(vec![1.0; 3]);
        assert!((d.distance(&[0.2, 0.3, -0.1]) - (1.0 - 0.14f64.sqrt())).abs() < 1e-15);
        let thin = EllipsoidDistance::new(vec![1.0, 0.5]);
        // Never exceeds the true gap along the short axis.
        assert!(thin.distance(&[0.0, 0.25]) <= 0.25);
    }

    #[test]
    fn non_ellipsoid_in_higher_dimension_is_unavailable() {
        let prof = crate::geometry::make_profile(
            crate::geometry::CrossSection::ellipsoid(vec![1.0, 1.0]).unwrap(),
            crate::geometry::Polynomial::new(2, vec![(1.0, vec![0, 0]), (-1.0, vec![2, 0]), (-1.0, vec![0, 2])])
                .into_field("h"),
            crate::geometry::Polynomial::new(2, vec![(1.0, vec![0, 0]), (-1.0, vec![2, 0]), (-1.0, vec![0, 2])])
                .into_field("h"),
        )
        .unwrap();
        let d = ThinDomain::new(prof, 0.5).unwrap();
        assert!(matches!(boundary_distance(&d), Err(Error::DistanceUnavailable(_))));
    }
}
