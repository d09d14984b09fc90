//! Reference solutions: finite differences on the planar domain and
//! walk-on-spheres in any dimension.

mod distance;
mod fd;
mod linalg;
mod wos;

pub use distance::{boundary_distance, domain_scale, BoundaryDistance, EllipsoidDistance, PolylineDistance};
pub use fd::{l2_relative_error, solve_fd, torsion_from_grid, BoundaryTreatment, GridSolution, SOLVE_TOL};
pub use linalg::{bicgstab, CsrMatrix, Ilu0, SolveStats};
pub use wos::{wos_exit_time, WosEstimate, DEFAULT_SHELL};
