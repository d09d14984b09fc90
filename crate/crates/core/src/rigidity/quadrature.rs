//! Globally adaptive Gauss–Kronrod (7/15) quadrature. Nodes are interior to
//! every panel, so integrands are never sampled on ∂ω.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::geometry::CrossSection;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Panels allowed per one-dimensional integral.
const MAX_PANELS: usize = 4000;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx)? + f(c + dx)?;
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

/// ∫ₐᵇ f to absolute tolerance `tol`.
pub fn integrate_1d<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(Quadrature::default());
    }
    let mut evals = 0usize;
    let mut checked = |x: f64| -> Result<f64> {
        evals += 1;
        let v = f(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                field: "quadrature integrand".into(),
                at: vec![x],
            })
        }
    };
    let (v, e) = kronrod(&mut checked, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut err = e;
    while err > tol {
        if heap.len() >= MAX_PANELS {
            return Err(Error::NoConvergence {
                what: "quadrature",
                detail: format!("error estimate {err:e} above {tol:e} after {MAX_PANELS} panels on [{a}, {b}]"),
            });
        }
        let worst = heap.pop().unwrap();
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // Panel too narrow to split; its error is as good as it gets.
            heap.push(Panel { error: 0.0, ..worst });
            err = heap.iter().map(|p| p.error).sum();
            continue;
        }
        let (v1, e1) = kronrod(&mut checked, worst.a, m)?;
        let (v2, e2) = kronrod(&mut checked, m, worst.b)?;
        err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: worst.b, value: v2, error: e2 });
        if heap.len() % 64 == 0 {
            // Running sums drift; refresh them now and then.
            err = heap.iter().map(|p| p.error).sum();
        }
    }
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let total: f64 = panels.iter().map(|p| p.value).sum();
    Ok(Quadrature {
        value: total,
        error: err,
        evaluations: evals,
    })
}

fn nested<F>(f: &F, omega: &CrossSection, prefix: &mut Vec<f64>, tol: f64) -> Result<Quadrature>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let (a, b) = omega.axis_limits(prefix);
    let last = prefix.len() + 1 == omega.dim();
    let mut evals = 0;
    let inner_tol = tol / (2.0 * (b - a).abs().max(1e-300));
    let q = integrate_1d(
        |t| {
            prefix.push(t);
            let r = if last {
                evals += 1;
                f(prefix)
            } else {
                nested(f, omega, prefix, inner_tol).map(|q| {
                    evals += q.evaluations;
                    q.value
                })
            };
            prefix.pop();
            r
        },
        a,
        b,
        if last { tol } else { tol / 2.0 },
    )?;
    Ok(Quadrature {
        value: q.value,
        error: q.error + if last { 0.0 } else { tol / 2.0 },
        evaluations: if last { q.evaluations } else { evals },
    })
}

/// ∫_ω f by nested adaptive quadrature.
pub fn integrate<F>(f: F, omega: &CrossSection, tol: f64) -> Result<Quadrature>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut prefix = Vec::with_capacity(omega.dim());
    nested(&f, omega, &mut prefix, tol)
}

/// ∫_ω field.
pub fn quadrature(field: &ScalarField, omega: &CrossSection, tol: f64) -> Result<Quadrature> {
    if field.dim() != omega.dim() {
        return Err(Error::Dimension {
            expected: omega.dim(),
            got: field.dim(),
        });
    }
    integrate(|x| field.eval(x), omega, tol)
}
