//! Pseudorange trilateration by Gauss–Newton with a step-halving line search.
//!
//! Observation model: ρ_i = ‖x − s_i‖ + b, where b is the receiver clock
//! bias expressed in metres. With `solve_bias = false` the bias is held at
//! zero and three satellites suffice; otherwise four are needed.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{FixSolution, GeoError, SatelliteObs};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Converged once the Gauss–Newton step is shorter than this (m).
    pub step_tolerance: f64,
    pub max_halvings: usize,
    pub max_condition: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 50,
            step_tolerance: 1e-9,
            max_halvings: 8,
            max_condition: 1e12,
        }
    }
}

/// Noisy pseudoranges from `truth` to each satellite.
pub fn synthesize_obs(
    truth: &Vector3<f64>,
    truth_bias_m: f64,
    sat_positions: &[Vector3<f64>],
    noise_sigma_m: f64,
    seed: u64,
) -> Result<Vec<SatelliteObs>, GeoError> {
    if sat_positions.is_empty() {
        return Err(GeoError::InsufficientSatellites { needed: 1, got: 0 });
    }
    if !(noise_sigma_m >= 0.0 && noise_sigma_m.is_finite()) {
        return Err(GeoError::InvalidObservation("noise sigma must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma_m).expect("validated sigma");
    sat_positions
        .iter()
        .map(|s| {
            let range = (truth - s).norm();
            if range < 1e-9 {
                return Err(GeoError::DegenerateGeometry);
            }
            let noise = if noise_sigma_m > 0.0 {
                normal.sample(&mut rng)
            } else {
                0.0
            };
            Ok(SatelliteObs {
                position: *s,
                pseudorange: range + truth_bias_m + noise,
            })
        })
        .collect()
}

/// `n` satellites on a sphere of `radius` around the origin, at least
/// `min_elevation_deg` above the local horizon plane.
pub fn random_shell_satellites<R: Rng>(
    rng: &mut R,
    n: usize,
    radius: f64,
    min_elevation_deg: f64,
) -> Vec<Vector3<f64>> {
    let min_sin = min_elevation_deg.to_radians().sin();
    (0..n)
        .map(|_| {
            let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
            let sin_el: f64 = rng.random_range(min_sin..1.0);
            let cos_el = (1.0 - sin_el * sin_el).sqrt();
            Vector3::new(
                radius * cos_el * azimuth.cos(),
                radius * cos_el * azimuth.sin(),
                radius * sin_el,
            )
        })
        .collect()
}

/// Relative decrease in squared residual below which a rejected step counts
/// as floating-point noise.
const STATIONARY_RTOL: f64 = 1e-10;

fn residuals(obs: &[SatelliteObs], x: &Vector3<f64>, bias: f64) -> DVector<f64> {
    DVector::from_iterator(
        obs.len(),
        obs.iter().map(|o| (x - o.position).norm() + bias - o.pseudorange),
    )
}

/// Solves for position (and clock bias when `solve_bias`).
pub fn trilaterate(obs: &[SatelliteObs], solve_bias: bool) -> Result<FixSolution, GeoError> {
    trilaterate_with(obs, solve_bias, &SolverConfig::default())
}

pub fn trilaterate_with(
    obs: &[SatelliteObs],
    solve_bias: bool,
    cfg: &SolverConfig,
) -> Result<FixSolution, GeoError> {
    let unknowns = if solve_bias { 4 } else { 3 };
    if obs.len() < unknowns {
        return Err(GeoError::InsufficientSatellites {
            needed: unknowns,
            got: obs.len(),
        });
    }
    if obs
        .iter()
        .any(|o| !o.pseudorange.is_finite() || o.pseudorange <= 0.0 || !o.position.iter().all(|v| v.is_finite()))
    {
        return Err(GeoError::InvalidObservation("pseudoranges must be positive and finite"));
    }

    let centroid = obs.iter().map(|o| o.position).sum::<Vector3<f64>>() / obs.len() as f64;
    match gauss_newton(obs, solve_bias, cfg, centroid) {
        // With exactly three satellites the centroid lies in their plane,
        // where the Jacobian is rank-deficient. Retry once from the local
        // origin, which sits on the receiver's side of the constellation.
        Err((GeoError::SingularGeometry(_), 1)) => gauss_newton(obs, solve_bias, cfg, Vector3::zeros()).map_err(|(e, _)| e),
        other => other.map_err(|(e, _)| e),
    }
}

/// Iterates from `x0`. Errors carry the iteration they occurred in.
fn gauss_newton(
    obs: &[SatelliteObs],
    solve_bias: bool,
    cfg: &SolverConfig,
    x0: Vector3<f64>,
) -> Result<FixSolution, (GeoError, usize)> {
    let unknowns = if solve_bias { 4 } else { 3 };
    let mut x = x0;
    let mut bias = 0.0;
    let mut r = residuals(obs, &x, bias);
    let mut norm = r.norm();

    for iter in 1..=cfg.max_iterations {
        let mut jac = DMatrix::<f64>::zeros(obs.len(), unknowns);
        for (i, o) in obs.iter().enumerate() {
            let d = x - o.position;
            let range = d.norm();
            if range < 1e-9 {
                return Err((GeoError::SingularGeometry(f64::INFINITY), iter));
            }
            for k in 0..3 {
                jac[(i, k)] = d[k] / range;
            }
            if solve_bias {
                jac[(i, 3)] = 1.0;
            }
        }

        let normal = jac.transpose() * &jac;
        let eig = normal.clone().symmetric_eigen().eigenvalues;
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(cond <= cfg.max_condition) {
            return Err((GeoError::SingularGeometry(cond), iter));
        }

        let rhs = -(jac.transpose() * &r);
        let step = normal
            .cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or((GeoError::SingularGeometry(cond), iter))?;
        let dx = Vector3::new(step[0], step[1], step[2]);
        let db = if solve_bias { step[3] } else { 0.0 };

        if step.norm() < cfg.step_tolerance {
            x += dx;
            bias += db;
            r = residuals(obs, &x, bias);
            return Ok(FixSolution {
                position: x,
                clock_bias_m: bias,
                residual_norm: r.norm(),
                iterations: iter,
                converged: true,
            });
        }

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=cfg.max_halvings {
            let cand_x = x + dx * scale;
            let cand_b = bias + db * scale;
            let cand_r = residuals(obs, &cand_x, cand_b);
            let cand_norm = cand_r.norm();
            if cand_norm <= norm {
                x = cand_x;
                bias = cand_b;
                r = cand_r;
                norm = cand_norm;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            // Nothing along the step lowers the residual. If the linear model
            // itself promised no more than rounding noise, this is the minimum.
            let predicted = norm * norm - (&r + &jac * &step).norm_squared();
            if predicted <= STATIONARY_RTOL * norm * norm {
                return Ok(FixSolution {
                    position: x,
                    clock_bias_m: bias,
                    residual_norm: norm,
                    iterations: iter,
                    converged: true,
                });
            }
            return Err((
                GeoError::NonConvergence(FixSolution {
                    position: x,
                    clock_bias_m: bias,
                    residual_norm: norm,
                    iterations: iter,
                    converged: false,
                }),
                iter,
            ));
        }
    }

    Err((
        GeoError::NonConvergence(FixSolution {
            position: x,
            clock_bias_m: bias,
            residual_norm: norm,
            iterations: cfg.max_iterations,
            converged: false,
        }),
        cfg.max_iterations,
    ))
}
