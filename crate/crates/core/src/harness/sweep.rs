use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{build_expansion, ExpansionSeries};
use crate::extrema::{max_series, MaxExpansion};
use crate::geometry::DomainProfile;
use crate::rigidity::{torsion_series, TorsionSeries};
use crate::solvers::{l2_relative_error, solve_fd, torsion_from_grid};

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_RESOLUTION: usize = 512;
pub const DEFAULT_SAMPLES: usize = 100_000;

/// One ε of a sweep. Errors are relative to the finite-difference solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    #[serde(rename = "order_N")]
    pub order_n: usize,
    pub l2_rel_err: f64,
    pub torsion_rel_err: f64,
    /// Two-term maximum expansion against the largest grid value; NaN when
    /// the profile violates the peak hypotheses.
    pub max_rel_err: f64,
    pub fd_resolution: usize,
    pub runtime_ms: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub order: usize,
    pub resolution: usize,
    /// Write zero runtimes so reruns give byte-identical files.
    pub reproducible: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER,
            resolution: DEFAULT_RESOLUTION,
            reproducible: false,
        }
    }
}

/// Parses `a:b:step`, a comma list, or a single value.
pub fn parse_epsilons(spec: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::InvalidArgument(format!("bad epsilon list {spec:?}: {what}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(&format!("{t:?} is not a number")));
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !(b >= a) {
            return Err(bad("need stop ≥ start and a positive step"));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        // Round away the binary residue of a + k·step so 0.1:1:0.1 gives 0.3, not 0.30000000000000004.
        return Ok((0..count)
            .map(|k| {
                let v = a + k as f64 * step;
                format!("{v:.12}").parse::<f64>().unwrap_or(v)
            })
            .collect());
    }
    spec.split(',').map(num).collect()
}

fn check_epsilons(eps: &[f64]) -> Result<()> {
    for (k, &e) in eps.iter().enumerate() {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon {e} outside (0, 1]")));
        }
        if k > 0 && e <= eps[k - 1] {
            return Err(Error::InvalidArgument(format!(
                "epsilons must increase strictly, got {} then {e}",
                eps[k - 1]
            )));
        }
    }
    Ok(())
}

struct Prepared {
    series: ExpansionSeries,
    torsion: TorsionSeries,
    max: Option<MaxExpansion>,
}

fn row(profile: &DomainProfile, prep: &Prepared, eps: f64, opts: &SweepOptions) -> Result<SweepRow> {
    let start = Instant::now();
    let grid = solve_fd(profile, eps, opts.resolution)?;
    let l2 = l2_relative_error(&prep.series, &grid)?;
    let t_grid = torsion_from_grid(&grid);
    let t_series = prep.torsion.partial_sum(eps, opts.order.min(3));
    let grid_max = grid.max_value();
    let max_rel_err = match &prep.max {
        Some(m) => (m.value(eps) - grid_max).abs() / grid_max,
        None => f64::NAN,
    };
    Ok(SweepRow {
        epsilon: eps,
        order_n: opts.order,
        l2_rel_err: l2,
        torsion_rel_err: (t_series - t_grid).abs() / t_grid,
        max_rel_err,
        fd_resolution: opts.resolution,
        runtime_ms: if opts.reproducible {
            0
        } else {
            start.elapsed().as_millis() as u64
        },
    })
}

/// Series against finite differences for each ε. The series, torsion
/// coefficients and peak expansion are built once; a row that fails is
/// kept with NaN errors.
pub fn sweep(profile: &DomainProfile, epsilons: &[f64], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    check_epsilons(epsilons)?;
    if epsilons.is_empty() {
        return Ok(Vec::new());
    }
    let series = build_expansion(profile, opts.order)?;
    let torsion = torsion_series(profile)?;
    let max = match max_series(profile) {
        Ok(m) => Some(m),
        Err(e) => {
            log::warn!("no maximum expansion for {}: {e}", profile.name());
            None
        }
    };
    let prep = Prepared { series, torsion, max };
    Ok(epsilons
        .par_iter()
        .map(|&eps| {
            row(profile, &prep, eps, opts).unwrap_or_else(|e| {
                log::warn!("sweep row at epsilon {eps} failed: {e}");
                SweepRow {
                    epsilon: eps,
                    order_n: opts.order,
                    l2_rel_err: f64::NAN,
                    torsion_rel_err: f64::NAN,
                    max_rel_err: f64::NAN,
                    fd_resolution: opts.resolution,
                    runtime_ms: 0,
                }
            })
        })
        .collect())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([
        "epsilon",
        "order_N",
        "l2_rel_err",
        "torsion_rel_err",
        "max_rel_err",
        "fd_resolution",
        "runtime_ms",
    ])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::builtin;

    #[test]
    fn epsilon_ranges() {
        let e = parse_epsilons("0.1:1.0:0.1").unwrap();
        assert_eq!(e.len(), 10);
        assert_eq!(e[2], 0.3);
        assert_eq!(e[9], 1.0);
        assert_eq!(parse_epsilons("0.2, 0.5").unwrap(), vec![0.2, 0.5]);
        assert_eq!(parse_epsilons("0.4").unwrap(), vec![0.4]);
        assert!(parse_epsilons("0.1:0.5").is_err());
        assert!(parse_epsilons("1:0.5:0.1").is_err());
        assert!(parse_epsilons("a,b").is_err());
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let lens = builtin("parabolic-lens", &[]).unwrap();
        let rows = sweep(&lens, &[], &SweepOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epsilon,order_N,l2_rel_err,torsion_rel_err,max_rel_err,fd_resolution,runtime_ms\n"
        );
    }

    #[test]
    fn rejects_unordered_epsilons() {
        let lens = builtin("parabolic-lens", &[]).unwrap();
        assert!(sweep(&lens, &[0.5, 0.2], &SweepOptions::default()).is_err());
        assert!(sweep(&lens, &[0.5, 1.5], &SweepOptions::default()).is_err());
    }

    #[test]
    fn small_lens_sweep() {
        let lens = builtin("parabolic-lens", &[]).unwrap();
        let opts = SweepOptions {
            resolution: 64,
            reproducible: true,
            ..Default::default()
        };
        let rows = sweep(&lens, &[0.2, 0.4], &opts).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!(r.l2_rel_err >= 0.0 && r.torsion_rel_err >= 0.0 && r.max_rel_err >= 0.0);
            assert!(r.torsion_rel_err < 0.05, "{r:?}");
            assert_eq!(r.runtime_ms, 0);
        }
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        assert_eq!(read_sweep_csv(&buf[..]).unwrap(), rows);
    }
}
