//! Cross-checks between the two reference solvers and the expansion.

use thin_torsion::expansion::build_expansion;
use thin_torsion::geometry::builtin;
use thin_torsion::solvers::{l2_relative_error, solve_fd, wos_exit_time};

#[test]
fn fd_and_walks_agree_on_the_folium() {
    let prof = builtin("folium", &[]).unwrap();
    let eps = 0.5;
    let grid = solve_fd(&prof, eps, 256).unwrap();
    let (nx, ny) = grid.shape;
    let h2 = grid.spacing.0.powi(2) + grid.spacing.1.powi(2);
    // Five interior nodes spread along the midline and off it.
    let picks = [(0.2, 0.5), (0.35, 0.3), (0.5, 0.5), (0.6, 0.7), (0.8, 0.5)];
    for (seed, (sx, sy)) in picks.into_iter().enumerate() {
        let i = (sx * (nx - 1) as f64) as usize;
        let x = grid.node(i, 0).0;
        let hp = prof.h_plus().eval(&[x]).unwrap();
        let hm = prof.h_minus().eval(&[x]).unwrap();
        let y_target = eps * (-hm + sy * (hp + hm));
        let k = (0..ny)
            .filter(|&k| grid.is_inside(i, k))
            .min_by(|&a, &b| {
                let da = (grid.node(i, a).1 - y_target).abs();
                let db = (grid.node(i, b).1 - y_target).abs();
                da.total_cmp(&db)
            })
            .unwrap();
        let (x, y) = grid.node(i, k);
        let est = wos_exit_time(&prof, eps, &[x, y], 20_000, seed as u64, None).unwrap();
        let diff = (est.mean - grid.value(i, k)).abs();
        assert!(
            diff <= 3.0 * est.std_error + h2,
            "at ({x:.3}, {y:.4}): walks {} ± {}, grid {}",
            est.mean,
            est.std_error,
            grid.value(i, k)
        );
    }
}

#[test]
fn disc_l2_error_falls_like_epsilon_to_the_sixth() {
    let prof = builtin("disc", &[]).unwrap();
    let series = build_expansion(&prof, 3).unwrap();
    let eps = [0.4, 0.3, 0.2];
    let errs: Vec<f64> = eps
        .iter()
        .map(|&e| l2_relative_error(&series, &solve_fd(&prof, e, 256).unwrap()).unwrap())
        .collect();
    let slope = (errs[0] / errs[2]).ln() / (eps[0] / eps[2]).ln();
    assert!((slope - 6.0).abs() < 0.5, "slope {slope}, errors {errs:?}");
}

#[test]
fn walks_do_not_depend_on_the_thread_count() {
    let prof = builtin("lens", &[]).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| wos_exit_time(&prof, 0.3, &[0.1, 0.05], 5_000, 42, None).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
}

#[test]
fn fd_satisfies_the_maximum_principle() {
    let prof = builtin("lemniscate", &[]).unwrap();
    let grid = solve_fd(&prof, 0.4, 128).unwrap();
    let (nx, ny) = grid.shape;
    for k in 0..ny {
        for i in 0..nx {
            if grid.is_inside(i, k) {
                assert!(grid.value(i, k) > 0.0, "node ({i}, {k}) = {}", grid.value(i, k));
            }
        }
    }
}
