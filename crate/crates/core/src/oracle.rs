//! Brute-force reconstruction of the `ψ` density.
//!
//! The energy deltas of the click rate are replaced by Gaussians of width
//! `η` and the starting phase-space integral over `|k₁|` and `cos θ` is done
//! numerically for every `ψ`, without using the on-shell reductions. Only the
//! integration windows are placed with the local Jacobians `dE/dk = k/E` and
//! `dE_{p−k}/d cos θ = −Pk/E_{p−k}`, at `±8η` in energy.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{uniform_grid, DistributionContext, TabulatedDensity};
use crate::error::{Error, Result};
use crate::kinematics::{validate_params, Branch, DetectorPair, ProcessParams, Vec3};
use crate::quadrature::{trapezoid, GaussLegendre};
use crate::statistics::{sup_distance, tv_distance};

/// Half-width of the integration windows in units of `η`.
pub const WINDOW_SIGMAS: f64 = 8.0;

/// Largest relative change tolerated when the `(k, cos θ)` grids are doubled.
pub const REFINEMENT_TOL: f64 = 1e-3;

const PANEL_NODES: usize = 16;

/// `exp(−x²/2η²) / (η √2π)`.
pub fn nascent_delta(x: f64, eta: f64) -> f64 {
    let z = x / eta;
    (-0.5 * z * z).exp() / (eta * TAU.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Integrator {
    /// Composite Gauss–Legendre on the `(k, cos θ)` windows.
    TensorGrid,
    /// Stratified Monte Carlo: one stratum per `(k, cos θ)` grid cell.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSettings {
    /// Width of the nascent deltas, energy units.
    pub eta: f64,
    pub n_k: usize,
    pub n_cos: usize,
    pub n_psi: usize,
    pub integrator: Integrator,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            eta: 0.01,
            n_k: 64,
            n_cos: 64,
            n_psi: 512,
            integrator: Integrator::TensorGrid,
        }
    }
}

impl OracleSettings {
    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {}", self.eta)));
        }
        if self.n_k < 64 || self.n_cos < 64 {
            return Err(Error::InvalidArgument(format!(
                "radial and polar grids need >= 64 points, got {} x {}",
                self.n_k, self.n_cos
            )));
        }
        if self.n_psi < 256 {
            return Err(Error::InvalidArgument(format!(
                "output grid needs >= 256 points, got {}",
                self.n_psi
            )));
        }
        if let Integrator::MonteCarlo { samples, .. } = self.integrator {
            if samples == 0 {
                return Err(Error::InvalidArgument("Monte Carlo needs samples > 0".into()));
            }
        }
        Ok(())
    }

    fn refined(&self) -> Self {
        Self {
            n_k: 2 * self.n_k,
            n_cos: 2 * self.n_cos,
            ..*self
        }
    }
}

/// Integration geometry of one branch: a window in `k` and, for every `k`,
/// a window in `cos θ` around the energy shell of the second particle.
struct BranchWindow {
    delta_i: f64,
    delta_j: f64,
    k_lo: f64,
    k_hi: f64,
}

struct Integrand<'a> {
    process: &'a ProcessParams,
    separation: Vec3,
    eta: f64,
}

impl Integrand<'_> {
    fn windows(&self, detectors: &DetectorPair) -> Vec<BranchWindow> {
        let m = self.process.m;
        Branch::ALL
            .iter()
            .filter_map(|&branch| {
                let (delta_i, delta_j) = detectors.gaps(branch);
                // E_k reaches Δ_i − 8η only when that is above the rest mass.
                let e_lo = (delta_i - WINDOW_SIGMAS * self.eta).max(m);
                let e_hi = delta_i + WINDOW_SIGMAS * self.eta;
                if e_hi <= m {
                    return None;
                }
                let k_lo = ((e_lo - m) * (e_lo + m)).max(0.0).sqrt();
                let k_hi = ((e_hi - m) * (e_hi + m)).sqrt();
                Some(BranchWindow {
                    delta_i,
                    delta_j,
                    k_lo,
                    k_hi,
                })
            })
            .collect()
    }

    /// `cos θ` window at radial momentum `k`, clipped to `[−1, 1]`.
    fn cos_window(&self, k: f64, delta_j: f64) -> Option<(f64, f64)> {
        let p = self.process.momentum;
        let m = self.process.m;
        if k == 0.0 {
            return None;
        }
        let center = (m * m + p * p + k * k - delta_j * delta_j) / (2.0 * p * k);
        let half = WINDOW_SIGMAS * self.eta * delta_j / (p * k);
        let lo = (center - half).max(-1.0);
        let hi = (center + half).min(1.0);
        (lo < hi).then_some((lo, hi))
    }

    /// `k²/(4E_k E_{p−k}) · K · δ_η(E_k − Δ_i) δ_η(E_{p−k} − Δ_j)` at `(k, cos θ, ψ)`.
    fn value(&self, k: f64, cos_theta: f64, psi: f64, delta_i: f64, delta_j: f64) -> f64 {
        let m = self.process.m;
        let p = self.process.momentum;
        let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        let (s, c) = psi.sin_cos();
        let k1 = k * Vec3::new(sin_theta * c, sin_theta * s, cos_theta);
        let k2 = self.process.momentum_vector() - k1;
        let e1 = m.hypot(k);
        let e2 = (m * m + p * p + k * k - 2.0 * p * k * cos_theta).max(m * m).sqrt();
        let interference = 2.0 + 2.0 * (k1 - k2).dot(self.separation).cos();
        k * k / (4.0 * e1 * e2)
            * interference
            * nascent_delta(e1 - delta_i, self.eta)
            * nascent_delta(e2 - delta_j, self.eta)
    }

    fn tensor(&self, windows: &[BranchWindow], psi: f64, n_k: usize, n_cos: usize, rule: &GaussLegendre) -> f64 {
        let k_panels = n_k.div_ceil(PANEL_NODES);
        let c_panels = n_cos.div_ceil(PANEL_NODES);
        windows
            .iter()
            .map(|w| {
                rule.composite(w.k_lo, w.k_hi, k_panels, |k| match self.cos_window(k, w.delta_j) {
                    Some((lo, hi)) => rule.composite(lo, hi, c_panels, |c| {
                        self.value(k, c, psi, w.delta_i, w.delta_j)
                    }),
                    None => 0.0,
                })
            })
            .sum()
    }

    fn monte_carlo(&self, windows: &[BranchWindow], psi: f64, settings: &OracleSettings, rng: &mut ChaCha8Rng) -> f64 {
        let Integrator::MonteCarlo { samples, .. } = settings.integrator else {
            unreachable!("monte_carlo called with a grid integrator")
        };
        let strata = settings.n_k * settings.n_cos;
        let per_stratum = samples.div_ceil(strata).max(1);
        windows
            .iter()
            .map(|w| {
                let dk = (w.k_hi - w.k_lo) / settings.n_k as f64;
                let du = 1.0 / settings.n_cos as f64;
                let mut sum = 0.0;
                for a in 0..settings.n_k {
                    for b in 0..settings.n_cos {
                        for _ in 0..per_stratum {
                            let k = w.k_lo + (a as f64 + rng.gen::<f64>()) * dk;
                            let Some((lo, hi)) = self.cos_window(k, w.delta_j) else {
                                continue;
                            };
                            let u = (b as f64 + rng.gen::<f64>()) * du;
                            let c = lo + u * (hi - lo);
                            sum += (hi - lo) * self.value(k, c, psi, w.delta_i, w.delta_j);
                        }
                    }
                }
                sum * dk * du / per_stratum as f64
            })
            .sum()
    }
}

/// Unnormalized oracle weight on a closed uniform `ψ` grid of `settings.n_psi` points.
///
/// No feasibility gate is applied: kinematically forbidden parameters simply
/// produce (numerically) zero weight.
pub fn brute_force_unnormalized(
    process: &ProcessParams,
    detectors: &DetectorPair,
    settings: &OracleSettings,
) -> Result<Vec<f64>> {
    settings.validate()?;
    if !(process.momentum > 0.0) {
        return Err(Error::DegenerateGeometry("oracle frame needs P > 0".into()));
    }
    let integrand = Integrand {
        process,
        separation: detectors.separation(),
        eta: settings.eta,
    };
    let windows = integrand.windows(detectors);
    let rule = GaussLegendre::new(PANEL_NODES);
    let grid = uniform_grid(settings.n_psi);
    Ok(grid
        .par_iter()
        .enumerate()
        .map(|(index, &psi)| match settings.integrator {
            Integrator::TensorGrid => integrand.tensor(&windows, psi, settings.n_k, settings.n_cos, &rule),
            Integrator::MonteCarlo { seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(index as u64);
                integrand.monte_carlo(&windows, psi, settings, &mut rng)
            }
        })
        .collect())
}

/// Total oracle weight `∫ dψ` of [`brute_force_unnormalized`].
pub fn brute_force_mass(
    process: &ProcessParams,
    detectors: &DetectorPair,
    settings: &OracleSettings,
) -> Result<f64> {
    let values = brute_force_unnormalized(process, detectors, settings)?;
    Ok(trapezoid(&values, TAU / (settings.n_psi - 1) as f64))
}

/// Normalized oracle density. The `(k, cos θ)` grids are doubled once and the
/// run fails if the normalized result moves by more than [`REFINEMENT_TOL`]
/// (relative to its peak).
pub fn brute_force_density(
    process: &ProcessParams,
    detectors: &DetectorPair,
    settings: &OracleSettings,
) -> Result<TabulatedDensity> {
    let report = validate_params(process, detectors);
    if !report.feasible {
        return Err(Error::Infeasible(Box::new(report)));
    }
    let coarse = normalized(brute_force_unnormalized(process, detectors, settings)?, settings.n_psi)?;
    if matches!(settings.integrator, Integrator::TensorGrid) {
        let fine = normalized(
            brute_force_unnormalized(process, detectors, &settings.refined())?,
            settings.n_psi,
        )?;
        let peak = fine.values.iter().cloned().fold(0.0, f64::max);
        let disagreement = sup_distance(&coarse, &fine)? / peak;
        if disagreement > REFINEMENT_TOL {
            return Err(Error::Resolution { disagreement });
        }
        return Ok(fine);
    }
    Ok(coarse)
}

fn normalized(values: Vec<f64>, n_psi: usize) -> Result<TabulatedDensity> {
    let step = TAU / (n_psi - 1) as f64;
    let mass = trapezoid(&values, step);
    if !(mass > 0.0) {
        return Err(Error::DegenerateGeometry(
            "oracle weight vanishes on the whole grid".into(),
        ));
    }
    let values = values.into_iter().map(|v| v / mass).collect();
    Ok(TabulatedDensity::from_values(uniform_grid(n_psi), values))
}

/// Analytic pipeline against the oracle on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub eta: f64,
    pub n_psi: usize,
    pub tv: f64,
    pub sup: f64,
    pub analytic_seconds: f64,
    pub oracle_seconds: f64,
}

pub fn oracle_compare(
    process: &ProcessParams,
    detectors: &DetectorPair,
    settings: &OracleSettings,
) -> Result<OracleReport> {
    settings.validate()?;
    let started = Instant::now();
    let analytic = DistributionContext::new(*process, *detectors)?.tabulate_on(settings.n_psi);
    let analytic_seconds = started.elapsed().as_secs_f64();
    let started = Instant::now();
    let oracle = brute_force_density(process, detectors, settings)?;
    let oracle_seconds = started.elapsed().as_secs_f64();
    Ok(OracleReport {
        eta: settings.eta,
        n_psi: settings.n_psi,
        tv: tv_distance(&analytic, &oracle)?,
        sup: sup_distance(&analytic, &oracle)?,
        analytic_seconds,
        oracle_seconds,
    })
}

/// [`oracle_compare`] for each width in `etas`.
pub fn eta_scan(
    process: &ProcessParams,
    detectors: &DetectorPair,
    settings: &OracleSettings,
    etas: &[f64],
) -> Result<Vec<OracleReport>> {
    etas.iter()
        .map(|&eta| oracle_compare(process, detectors, &settings.with_eta(eta)))
        .collect()
}

/// True when, ordered by decreasing `η`, each TV distance is at most
/// `(1 + slack)` times the previous one.
pub fn is_monotone_refinement(scan: &[OracleReport], slack: f64) -> bool {
    let mut rows: Vec<&OracleReport> = scan.iter().collect();
    rows.sort_by(|a, b| b.eta.total_cmp(&a.eta));
    rows.windows(2).all(|w| w[1].tv <= (1.0 + slack) * w[0].tv)
}
