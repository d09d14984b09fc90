//! Acceptance criteria, one PASS/FAIL line each.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thin_torsion::expansion::{build_expansion, closed_form_u};
use thin_torsion::extrema::max_series;
use thin_torsion::geometry::{builtin, ellipsoid_exact_max, DomainProfile};
use thin_torsion::harness::{sweep, SweepOptions, SweepRow};
use thin_torsion::rigidity::torsion_series;
use thin_torsion::solvers::{solve_fd, torsion_from_grid, wos_exit_time};

type Outcome = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Least-squares slope of ln y against ln x.
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn profile(name: &str) -> Result<DomainProfile, String> {
    name.parse::<thin_torsion::geometry::Builtin>()
        .and_then(|b| b.profile())
        .map_err(err)
}

fn closed_form_coefficients() -> Outcome {
    let r3 = 3f64.sqrt();
    let l = (2.0 + r3).ln();
    let k = 16.0 * PI / (243.0 * r3);
    let folium = builtin("folium", &[]).map_err(err)?;
    let lemniscate = builtin("lemniscate", &[]).map_err(err)?;
    let fm = max_series(&folium).map_err(err)?;
    let lm = max_series(&lemniscate).map_err(err)?;
    let ft = torsion_series(&folium).map_err(err)?;
    let lt = torsion_series(&lemniscate).map_err(err)?;
    let checks = [
        ("folium c2", fm.c2, (2.0 * r3 - 3.0) / 9.0),
        ("folium c4", fm.c4, (12.0 - 7.0 * r3) / 9.0),
        ("lemniscate c2", lm.c2, 0.125),
        ("lemniscate c4", lm.c4, -3.0 / 32.0),
        ("folium c3", ft.c3, k - 1.0 / 9.0),
        ("folium c5", ft.c5, -(k - 37.0 / 315.0)),
        ("folium c7", ft.c7, 80.0 * PI / (2187.0 * r3) - 593.0 / 9009.0),
        ("lemniscate c3", lt.c3, (3.0 * PI - 8.0) / 48.0),
        ("lemniscate c5", lt.c5, r3 / 4.0 * l - 3.0 * PI / 16.0),
        ("lemniscate c7", lt.c7, 13.0 / 18.0 + 5.0 * PI / 16.0 - 20.0 * r3 / 27.0 * l),
    ];
    let (worst_name, worst) = checks
        .iter()
        .map(|(n, got, want)| (*n, (got - want).abs()))
        .fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    Ok((worst <= 1e-6, format!("10 coefficients, max |Δ| = {worst:.2e} ({worst_name})")))
}

fn recursion_matches_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [0.0f64; 3];
    for name in ["folium", "lemniscate"] {
        let prof = builtin(name, &[]).map_err(err)?;
        let series = build_expansion(&prof, 3).map_err(err)?;
        let closed: Vec<_> = (1..=3).map(|j| closed_form_u(&prof, j)).collect::<Result<_, _>>().map_err(err)?;
        let (a, b) = prof.omega().axis_limits(&[]);
        for _ in 0..100 {
            let x = [rng.random_range(a..b)];
            let (hp, hm) = (prof.h_plus().value(&x), prof.h_minus().value(&x));
            let xi = rng.random_range(-hm..=hp);
            for j in 1..=3 {
                let r = series.term(j).eval(&x, xi).map_err(err)?;
                let c = closed[j - 1].eval(&x, xi).map_err(err)?;
                worst[j - 1] = worst[j - 1].max((r - c).abs());
            }
        }
    }
    Ok((
        worst[0] <= 1e-8 && worst[1] <= 1e-8 && worst[2] <= 1e-6,
        format!("100 samples each on folium and lemniscate, max |Δ| j=1,2,3: {:.1e}, {:.1e}, {:.1e}", worst[0], worst[1], worst[2]),
    ))
}

fn boundary_and_parity() -> Outcome {
    let (mut boundary, mut odd) = (0.0f64, 0.0f64);
    for name in ["folium", "lemniscate", "parabolic-lens", "disc", "ellipsoid:2,1.5,1"] {
        let prof = profile(name)?;
        let series = build_expansion(&prof, 3).map_err(err)?;
        for x in prof.omega().interior_grid(7, 0.02) {
            if !prof.omega().contains(&x) {
                continue;
            }
            let (hp, hm) = (prof.h_plus().value(&x), prof.h_minus().value(&x));
            for j in 1..=3 {
                let term = series.term(j);
                boundary = boundary
                    .max(term.eval(&x, hp).map_err(err)?.abs())
                    .max(term.eval(&x, -hm).map_err(err)?.abs());
                // Every builtin has h₊ = h₋.
                for i in (1..=2 * j).step_by(2) {
                    odd = odd.max(series.coefficient(j, i).eval(&x).map_err(err)?.abs());
                }
            }
        }
    }
    Ok((
        boundary < 1e-9 && odd < 1e-10,
        format!("max |u₂ⱼ| on ξ = h₊, −h₋: {boundary:.1e}; max odd-ξ coefficient: {odd:.1e}"),
    ))
}

fn residual_order() -> Outcome {
    let prof = builtin("lemniscate", &[]).map_err(err)?;
    let mut samples = Vec::new();
    for k in 1..=9 {
        let x = 0.1 * k as f64;
        let hp = prof.h_plus().value(&[x]);
        for f in [-0.8, -0.3, 0.0, 0.4, 0.9] {
            samples.push((vec![x], f * hp));
        }
    }
    let eps: [f64; 3] = [0.4, 0.2, 0.1];
    let mut ok = true;
    let mut parts = Vec::new();
    for n in 1..=3 {
        let series = build_expansion(&prof, n).map_err(err)?;
        let res = eps
            .iter()
            .map(|&e| series.pde_residual(e, &samples))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let slope = loglog_slope(&eps, &res);
        ok &= (slope - (2 * n + 2) as f64).abs() <= 0.3;
        parts.push(format!("N={n}: {slope:.3}"));
    }
    Ok((ok, format!("lemniscate residual slopes {}", parts.join(", "))))
}

fn jet_identity() -> Outcome {
    let mut worst = 0.0f64;
    let names = [
        "folium",
        "lemniscate",
        "parabolic-lens",
        "disc",
        "ellipsoid:2,0.5",
        "ellipsoid:2,1.5,1",
        "ellipsoid:1.5,1,2,0.7",
    ];
    for name in names {
        let m = max_series(&profile(name)?).map_err(err)?;
        worst = worst.max(m.jet.identity_residual().norm());
    }
    Ok((worst <= 1e-8, format!("{} builtins, max ‖d₀D₂ + 2P₂ + ½d₁d₁ᵀ − H₀H₂‖ = {worst:.1e}", names.len())))
}

fn disc_torsion() -> Outcome {
    let t = torsion_series(&builtin("disc", &[]).map_err(err)?).map_err(err)?;
    let coef = (t.c3 - PI / 2.0).abs().max((t.c5 + PI / 2.0).abs()).max((t.c7 - PI / 2.0).abs());
    let eps: [f64; 3] = [0.4, 0.2, 0.1];
    let rel: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let exact = PI * e.powi(3) / (2.0 * (1.0 + e * e));
            (t.value(e) - exact).abs() / exact
        })
        .collect();
    let slope = loglog_slope(&eps, &rel);
    Ok((
        coef <= 1e-8 && (slope - 6.0).abs() <= 0.3,
        format!("max |c − (±π/2)| = {coef:.1e}; relative error slope {slope:.3}"),
    ))
}

fn ellipsoid_max_bound() -> Outcome {
    let eps: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let mut grids: Vec<(Vec<f64>, f64)> = Vec::new();
    for a1 in [1.0, 1.5, 2.0, 4.0] {
        for an in [0.25, 0.5, 1.0] {
            if an <= a1 {
                grids.push((vec![a1], an));
            }
        }
    }
    for a1 in [1.0, 2.0, 3.0] {
        for a2 in [1.0, 2.0, 3.0] {
            for an in [0.5, 1.0] {
                grids.push((vec![a1, a2], an));
            }
        }
    }
    let (mut violations, mut cases, mut ball_gap) = (0, 0, 0.0f64);
    for (axes, an) in &grids {
        let params: Vec<f64> = axes.iter().cloned().chain(std::iter::once(*an)).collect();
        let m = max_series(&builtin("ellipsoid", &params).map_err(err)?).map_err(err)?;
        let n = axes.len() + 1;
        let is_ball = axes.iter().all(|a| a == an);
        for &e in &eps {
            let exact = ellipsoid_exact_max(axes, *an, e);
            let em = (exact - m.value(e)) / exact;
            let bound = e.powi(4) * ((n - 1) * (n - 1)) as f64;
            cases += 1;
            if em < -1e-12 || em > bound * (1.0 + 1e-9) + 1e-14 {
                violations += 1;
            }
            if is_ball {
                ball_gap = ball_gap.max((em - bound).abs() / bound);
            }
        }
    }
    Ok((
        violations == 0 && ball_gap < 1e-8,
        format!("{cases} cases (n = 2, 3), {violations} outside [0, ε⁴(n−1)²]; balls meet the bound to {ball_gap:.1e}"),
    ))
}

fn solver_cross_validation() -> Outcome {
    let start = Instant::now();
    let disc = builtin("disc", &[]).map_err(err)?;
    let res = [64usize, 128, 256, 512];
    let (mut h, mut centre, mut torsion) = (Vec::new(), Vec::new(), Vec::new());
    for &r in &res {
        let g = solve_fd(&disc, 1.0, r).map_err(err)?;
        h.push(g.spacing.0);
        centre.push((g.value_at(0.0, 0.0) - 0.5).abs());
        torsion.push((torsion_from_grid(&g) - PI / 4.0).abs());
    }
    let centre_ok = centre.iter().zip(&h).all(|(e, h)| *e <= h * h);
    let slope = loglog_slope(&h, &torsion);
    let thin = solve_fd(&disc, 0.5, 256).map_err(err)?;
    let thin_err = (thin.value_at(0.0, 0.0) - 0.2).abs();
    let w = wos_exit_time(&disc, 0.5, &[0.0, 0.0], 1_000_000, 20_240_601, None).map_err(err)?;
    let z = (w.mean - 0.2).abs() / w.std_error;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        centre_ok && thin_err <= thin.spacing.0.powi(2) && (slope - 2.0).abs() <= 0.2 && z <= 3.0 && secs < 300.0,
        format!(
            "FD disc centre |u − 1/2| ≤ {:.1e} (h ≥ {:.1e}); grid-torsion slope {slope:.3}; thin-disc FD origin error {thin_err:.1e}; WoS {:.5} ± {:.5} ({z:.2}σ, 10⁶ walks); {secs:.0} s",
            centre.iter().cloned().fold(0.0, f64::max),
            h[h.len() - 1],
            w.mean,
            w.std_error
        ),
    ))
}

fn figure_reproduction() -> Outcome {
    let start = Instant::now();
    let opts = SweepOptions {
        order: 3,
        resolution: 512,
        reproducible: false,
    };
    let eps: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let folium = sweep(&builtin("folium", &[]).map_err(err)?, &eps, &opts).map_err(err)?;
    let lemniscate = sweep(&builtin("lemniscate", &[]).map_err(err)?, &eps[5..], &opts).map_err(err)?;
    let small_ok = folium
        .iter()
        .filter(|r| r.epsilon <= 0.6 + 1e-12)
        .all(|r| r.l2_rel_err < 0.05 && r.torsion_rel_err < 0.05);
    let worst_small = folium
        .iter()
        .filter(|r| r.epsilon <= 0.6 + 1e-12)
        .map(|r| r.l2_rel_err.max(r.torsion_rel_err))
        .fold(0.0, f64::max);
    let at_one: &SweepRow = folium.last().unwrap();
    let one_ok = (0.01..=0.05).contains(&at_one.torsion_rel_err);
    let larger = lemniscate.iter().all(|l| {
        folium
            .iter()
            .find(|f| (f.epsilon - l.epsilon).abs() < 1e-12)
            .is_some_and(|f| l.l2_rel_err > f.l2_rel_err && l.torsion_rel_err > f.torsion_rel_err)
    });
    let secs = start.elapsed().as_secs_f64();
    Ok((
        small_ok && one_ok && larger && secs < 600.0,
        format!(
            "folium ε ≤ 0.6 worst error {worst_small:.2e}; folium torsion error at ε = 1: {:.3}; lemniscate above folium for ε = 0.6..1: {larger}; {secs:.0} s",
            at_one.torsion_rel_err
        ),
    ))
}

fn run_cli(args: &[&str], out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_thintor"))
        .args(args)
        .arg("--output")
        .arg(out)
        .status()
        .map_err(err)?;
    if !status.success() {
        return Err(format!("thintor {args:?} exited with {status}"));
    }
    std::fs::read(out).map_err(err)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let runs: [&[&str]; 2] = [
        &["sweep", "--profile", "folium", "--epsilon", "0.2,0.5,0.8", "--grid", "128", "--reproducible"],
        &["solve-wos", "--profile", "folium", "--epsilon", "0.5", "--samples", "20000", "--seed", "11"],
    ];
    let mut same = true;
    for (k, args) in runs.iter().enumerate() {
        let a = run_cli(args, &dir.path().join(format!("{k}a")))?;
        let b = run_cli(args, &dir.path().join(format!("{k}b")))?;
        same &= !a.is_empty() && a == b;
    }
    Ok((same, "sweep and solve-wos reruns byte-identical".to_string()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed-form coefficients", closed_form_coefficients),
        ("recursion matches closed forms", recursion_matches_closed_form),
        ("boundary and parity", boundary_and_parity),
        ("residual order", residual_order),
        ("jet identity", jet_identity),
        ("disc torsion series", disc_torsion),
        ("ellipsoid max bound", ellipsoid_max_bound),
        ("solver cross-validation", solver_cross_validation),
        ("figure-level errors", figure_reproduction),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
