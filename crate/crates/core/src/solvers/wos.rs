//! Walk-on-spheres estimate of the expected exit time u(x) of Brownian
//! motion, i.e. the torsion function with −Δu = 2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::{boundary_distance, domain_scale, BoundaryDistance};
use crate::error::{Error, Result};
use crate::geometry::{DomainProfile, ThinDomain};

/// Default shell width relative to the domain scale.
pub const DEFAULT_SHELL: f64 = 1e-5;
/// Walks per independently seeded chunk. Chunks, not threads, own the
/// random streams, so results do not depend on the worker count.
const CHUNK: usize = 1024;
const MAX_STEPS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WosEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub shell_width: f64,
    pub seed: u64,
    pub mean_steps: f64,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
    steps: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
            steps: self.steps + other.steps,
        }
    }
}

fn walk(dist: &dyn BoundaryDistance, start: &[f64], shell: f64, rng: &mut ChaCha8Rng, pos: &mut [f64], dir: &mut [f64]) -> (f64, usize) {
    let n = start.len();
    pos.copy_from_slice(start);
    let mut time = 0.0;
    for step in 0..MAX_STEPS {
        let r = dist.distance(pos);
        if r < shell {
            return (time, step);
        }
        time += r * r / n as f64;
        if n == 2 {
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            pos[0] += r * theta.cos();
            pos[1] += r * theta.sin();
        } else {
            let mut norm2 = 0.0;
            while norm2 == 0.0 {
                for d in dir.iter_mut() {
                    *d = rng.sample(StandardNormal);
                }
                norm2 = dir.iter().map(|d| d * d).sum::<f64>();
            }
            let scale = r / norm2.sqrt();
            for (p, d) in pos.iter_mut().zip(dir.iter()) {
                *p += scale * d;
            }
        }
    }
    log::warn!("walk from {start:?} hit the {MAX_STEPS}-step cap");
    (time, MAX_STEPS)
}

/// Mean exit time from `start` over `samples` walks. `shell` defaults to
/// 1e−5 of the domain scale.
pub fn wos_exit_time(
    profile: &DomainProfile,
    epsilon: f64,
    start: &[f64],
    samples: usize,
    seed: u64,
    shell: Option<f64>,
) -> Result<WosEstimate> {
    let domain = ThinDomain::new(profile.clone(), epsilon)?;
    if start.len() != profile.dim() + 1 {
        return Err(Error::Dimension {
            expected: profile.dim() + 1,
            got: start.len(),
        });
    }
    if !domain.contains(start) {
        return Err(Error::OutsideDomain {
            point: start.to_vec(),
        });
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one walk is needed".into()));
    }
    let shell = shell.unwrap_or(DEFAULT_SHELL * domain_scale(&domain));
    if !(shell.is_finite() && shell > 0.0) {
        return Err(Error::InvalidArgument(format!("shell width must be positive, got {shell}")));
    }
    let dist = boundary_distance(&domain)?;
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut pos = vec![0.0; start.len()];
            let mut dir = vec![0.0; start.len()];
            let mut m = Moments::default();
            let walks = CHUNK.min(samples - c * CHUNK);
            for _ in 0..walks {
                let (t, steps) = walk(dist.as_ref(), start, shell, &mut rng, &mut pos, &mut dir);
                m.push(t);
                m.steps += steps as f64;
            }
            m
        })
        .collect();
    let total = partial.into_iter().fold(Moments::default(), Moments::merge);
    let var = if total.count > 1.0 {
        total.m2 / (total.count - 1.0)
    } else {
        0.0
    };
    Ok(WosEstimate {
        mean: total.mean,
        std_error: (var / total.count).sqrt(),
        samples,
        shell_width: shell,
        seed,
        mean_steps: total.steps / total.count,
    })
}
