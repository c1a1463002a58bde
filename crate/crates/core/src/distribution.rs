//! Conditional density of the azimuth `ψ` of `k₁` about the incoming momentum,
//! given that both detectors clicked.
//!
//! Each open branch `(i, j)` contributes `1 + cos(A_ij + B_ij cos ψ)`. The
//! interference factor is `K_ij = 2 + 2 cos(·)`; its factor two, the coupling
//! prefactor, the energy delta, the constant `|ℳ|²` and all phase-space
//! Jacobians are common to both branches and drop out on normalization, so
//! none of them is ever materialized.
//!
//! Extended (spherical) detectors multiply a branch by `F(κ_i) F(κ_j)` with
//! `F(k) = |χ̃(k)|²`. The form factors are evaluated on shell, which makes
//! them per-branch constants: they never introduce any `ψ` dependence. Only
//! a non-constant `|ℳ(ψ)|²` or the Mott filter does.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::{
    validate_params_with, Branch, BranchKinematics, DetectorPair, ProcessParams, Vec3,
    DEFAULT_CLOSURE_TOLERANCE,
};
use crate::quadrature::{periodic_trapezoid, pow2_at_least, trapezoid, Refined, MAX_PERIODIC_POINTS};
use crate::specfun::{bessel_j0, spherical_j1_over_x};

/// Relative change under grid doubling accepted by [`DistributionContext::normalization_numeric`].
pub const NUMERIC_NORMALIZATION_TOL: f64 = 1e-9;

/// Default angular width of the Mott filter, radians.
pub const DEFAULT_SIGMA_ANGLE: f64 = 0.3;

/// Grid size used by the sampling convenience paths.
pub const DEFAULT_TABULATION_POINTS: usize = 4096;

/// Smallest tabulation accepted by [`DistributionContext::tabulate`].
pub const MIN_TABULATION_POINTS: usize = 1024;

/// `sin α`, `cos α` with exact zeros at `α ∈ {0, π/2, π}`.
pub(crate) fn tilt_sin_cos(alpha: f64) -> (f64, f64) {
    if alpha == 0.0 {
        (0.0, 1.0)
    } else if alpha == FRAC_PI_2 {
        (1.0, 0.0)
    } else if alpha == PI {
        (0.0, -1.0)
    } else {
        alpha.sin_cos()
    }
}

/// Phase `(2k₁ − p)·r = A + B cos ψ` of one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseCoefficients {
    pub a: f64,
    pub b: f64,
}

impl PhaseCoefficients {
    pub fn phase(&self, psi: f64) -> f64 {
        self.a + self.b * psi.cos()
    }
}

/// `K = 2 + 2 cos((k₁ − k₂)·(x₁ − x₂))`.
pub fn interference_factor(k1: Vec3, k2: Vec3, separation: Vec3) -> f64 {
    2.0 + 2.0 * (k1 - k2).dot(separation).cos()
}

pub fn phase_coefficients(
    process: &ProcessParams,
    detectors: &DetectorPair,
    branch: Branch,
) -> Result<PhaseCoefficients> {
    let kin = BranchKinematics::compute(process, detectors, branch);
    if !kin.open {
        return Err(Error::InfeasibleBranch(branch));
    }
    Ok(phase_from_kinematics(process, detectors, &kin))
}

fn phase_from_kinematics(
    process: &ProcessParams,
    detectors: &DetectorPair,
    kin: &BranchKinematics,
) -> PhaseCoefficients {
    let (sin_a, cos_a) = tilt_sin_cos(detectors.alpha);
    let r = detectors.r;
    PhaseCoefficients {
        a: r * cos_a * (2.0 * kin.kappa_i * kin.cos_theta - process.momentum),
        b: 2.0 * kin.kappa_i * r * kin.sin_theta * sin_a,
    }
}

/// `|χ̃(k)|²` of a uniform ball of radius `a`: `χ̃(k) = 4πa³ j₁(ka)/(ka)`.
pub fn spherical_form_factor(k: f64, radius: f64) -> Result<f64> {
    let chi = 4.0 * PI * radius.powi(3) * spherical_j1_over_x(k * radius)?;
    Ok(chi * chi)
}

/// `|ℳ(ψ)|²` model.
#[derive(Clone, Default)]
pub enum MatrixElement {
    /// `ψ`-independent amplitude; admits the closed-form normalization.
    #[default]
    Constant,
    /// Arbitrary non-negative weight in `ψ`.
    Weight(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl MatrixElement {
    pub fn weight(&self, psi: f64) -> f64 {
        match self {
            MatrixElement::Constant => 1.0,
            MatrixElement::Weight(f) => f(psi),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, MatrixElement::Constant)
    }
}

impl fmt::Debug for MatrixElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixElement::Constant => f.write_str("Constant"),
            MatrixElement::Weight(_) => f.write_str("Weight(<fn>)"),
        }
    }
}

/// Gaussian suppression of momenta that are not aligned with the detector separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MottFilter {
    pub sigma_angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NormalizationSource {
    Analytic,
    Numeric { points: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalization {
    pub value: f64,
    pub source: NormalizationSource,
}

/// One open branch with everything the density needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchTerm {
    pub kinematics: BranchKinematics,
    pub phase: PhaseCoefficients,
    /// `F(κ_i) F(κ_j)`, or 1 for point-like detectors.
    pub form_weight: f64,
}

impl BranchTerm {
    /// `1 + cos(A + B cos ψ)`, half of `K_ij`.
    pub fn interference(&self, psi: f64) -> f64 {
        1.0 + self.phase.phase(psi).cos()
    }
}

/// Everything required to evaluate the normalized density.
#[derive(Debug, Clone)]
pub struct DistributionContext {
    process: ProcessParams,
    detectors: DetectorPair,
    branches: Vec<BranchTerm>,
    matrix_element: MatrixElement,
    filter: Option<MottFilter>,
    form_factors: bool,
    separation_dir: Option<Vec3>,
    normalization: Normalization,
}

#[derive(Debug, Clone)]
pub struct ContextBuilder {
    process: ProcessParams,
    detectors: DetectorPair,
    matrix_element: MatrixElement,
    filter: Option<MottFilter>,
    form_factors: bool,
    closure_tolerance: f64,
}

impl ContextBuilder {
    pub fn matrix_element(mut self, model: MatrixElement) -> Self {
        self.matrix_element = model;
        self
    }

    pub fn mott_filter(mut self, sigma_angle: f64) -> Self {
        self.filter = Some(MottFilter { sigma_angle });
        self
    }

    pub fn filter(mut self, filter: Option<MottFilter>) -> Self {
        self.filter = filter;
        self
    }

    pub fn form_factors(mut self, enabled: bool) -> Self {
        self.form_factors = enabled;
        self
    }

    pub fn closure_tolerance(mut self, rel: f64) -> Self {
        self.closure_tolerance = rel;
        self
    }

    pub fn build(self) -> Result<DistributionContext> {
        let report = validate_params_with(&self.process, &self.detectors, self.closure_tolerance);
        if !report.feasible {
            return Err(Error::Infeasible(Box::new(report)));
        }
        if let Some(MottFilter { sigma_angle }) = self.filter {
            if !(sigma_angle > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "filter width must be positive, got {sigma_angle}"
                )));
            }
            if self.detectors.r == 0.0 {
                return Err(Error::DegenerateGeometry(
                    "Mott filter needs a separation direction but r = 0".into(),
                ));
            }
        }
        let radius = match (self.form_factors, self.detectors.radius_a) {
            (true, None) => {
                return Err(Error::InvalidArgument(
                    "form factors requested for point-like detectors (no radius)".into(),
                ))
            }
            (true, Some(a)) if !(a >= 0.0) => {
                return Err(Error::InvalidArgument(format!("detector radius must be >= 0, got {a}")))
            }
            (true, Some(a)) => Some(a),
            (false, _) => None,
        };

        let mut branches = Vec::with_capacity(2);
        for branch in Branch::ALL {
            let kinematics = BranchKinematics::compute(&self.process, &self.detectors, branch);
            if !kinematics.open {
                continue;
            }
            let form_weight = match radius {
                Some(a) => {
                    spherical_form_factor(kinematics.kappa_i, a)?
                        * spherical_form_factor(kinematics.kappa_j, a)?
                }
                None => 1.0,
            };
            branches.push(BranchTerm {
                kinematics,
                phase: phase_from_kinematics(&self.process, &self.detectors, &kinematics),
                form_weight,
            });
        }
        if branches.is_empty() {
            return Err(Error::Infeasible(Box::new(report)));
        }

        let separation_dir = (self.detectors.r > 0.0).then(|| {
            let (s, c) = tilt_sin_cos(self.detectors.alpha);
            Vec3::new(s, 0.0, c)
        });

        let mut ctx = DistributionContext {
            process: self.process,
            detectors: self.detectors,
            branches,
            matrix_element: self.matrix_element,
            filter: self.filter,
            form_factors: self.form_factors,
            separation_dir,
            normalization: Normalization {
                value: f64::NAN,
                source: NormalizationSource::Analytic,
            },
        };
        let normalization = if ctx.admits_analytic_normalization() {
            Normalization {
                value: ctx.normalization_analytic()?,
                source: NormalizationSource::Analytic,
            }
        } else {
            let Refined { value, points } = ctx.normalization_numeric_refined(256)?;
            Normalization {
                value,
                source: NormalizationSource::Numeric { points },
            }
        };
        if !(normalization.value > 0.0) || !normalization.value.is_finite() {
            return Err(Error::DegenerateGeometry(format!(
                "normalization is not positive ({:e})",
                normalization.value
            )));
        }
        ctx.normalization = normalization;
        Ok(ctx)
    }
}

impl DistributionContext {
    pub fn builder(process: ProcessParams, detectors: DetectorPair) -> ContextBuilder {
        ContextBuilder {
            process,
            detectors,
            matrix_element: MatrixElement::Constant,
            filter: None,
            form_factors: false,
            closure_tolerance: DEFAULT_CLOSURE_TOLERANCE,
        }
    }

    /// Point-like detectors, constant amplitude, no filter.
    pub fn new(process: ProcessParams, detectors: DetectorPair) -> Result<Self> {
        Self::builder(process, detectors).build()
    }

    pub fn process(&self) -> &ProcessParams {
        &self.process
    }

    pub fn detectors(&self) -> &DetectorPair {
        &self.detectors
    }

    pub fn branches(&self) -> &[BranchTerm] {
        &self.branches
    }

    pub fn branch(&self, branch: Branch) -> Option<&BranchTerm> {
        self.branches.iter().find(|t| t.kinematics.branch == branch)
    }

    pub fn filter(&self) -> Option<MottFilter> {
        self.filter
    }

    pub fn form_factors_enabled(&self) -> bool {
        self.form_factors
    }

    pub fn matrix_element(&self) -> &MatrixElement {
        &self.matrix_element
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn open_branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Largest `B_ij` over open branches.
    pub fn max_phase_amplitude(&self) -> f64 {
        self.branches.iter().map(|t| t.phase.b.abs()).fold(0.0, f64::max)
    }

    /// True when every weight is independent of `ψ`.
    pub fn admits_analytic_normalization(&self) -> bool {
        self.matrix_element.is_constant() && self.filter.is_none()
    }

    /// Rough count of Fourier modes carried by the integrand, used to seed
    /// grid sizes.
    pub(crate) fn bandwidth(&self) -> f64 {
        let filter_modes = self.filter.map_or(0.0, |f| 40.0 / f.sigma_angle.min(1.0));
        1.25 * self.max_phase_amplitude() + filter_modes + 64.0
    }

    /// Mott weight `exp(−β²/2σ²)` of one branch, where `β` is the angle between
    /// the branch's `k₁(ψ)` and the separation direction.
    pub fn mott_filter_weight(&self, psi: f64, branch: Branch, sigma_angle: f64) -> Result<f64> {
        let term = self.branch(branch).ok_or(Error::InfeasibleBranch(branch))?;
        let dir = self.separation_dir.ok_or_else(|| {
            Error::DegenerateGeometry("separation direction undefined at r = 0".into())
        })?;
        Ok(mott_weight(term, dir, psi, sigma_angle))
    }

    /// Branch sum without normalization; at least zero everywhere.
    pub fn density_unnormalized(&self, psi: f64) -> f64 {
        let amplitude = self.matrix_element.weight(psi);
        let sum: f64 = self
            .branches
            .iter()
            .map(|term| {
                let filter = match (self.filter, self.separation_dir) {
                    (Some(f), Some(dir)) => mott_weight(term, dir, psi, f.sigma_angle),
                    _ => 1.0,
                };
                term.interference(psi) * term.form_weight * filter
            })
            .sum();
        amplitude * sum
    }

    /// Normalized density on `[0, 2π]`.
    pub fn density(&self, psi: f64) -> f64 {
        self.density_unnormalized(psi) / self.normalization.value
    }

    /// `2π Σ F_ij [1 + cos(A_ij) J₀(B_ij)]` over open branches.
    ///
    /// Valid only when no weight depends on `ψ`; the on-shell form-factor
    /// constants are carried along.
    pub fn normalization_analytic(&self) -> Result<f64> {
        if !self.admits_analytic_normalization() {
            return Err(Error::ContractViolation(
                "closed-form normalization requires a constant amplitude and no filter".into(),
            ));
        }
        let mut sum = 0.0;
        for term in &self.branches {
            sum += term.form_weight * (1.0 + term.phase.a.cos() * bessel_j0(term.phase.b)?);
        }
        Ok(TAU * sum)
    }

    /// Trapezoid integral of the unnormalized density over one period,
    /// doubled until successive estimates agree to 1e-9 relative.
    pub fn normalization_numeric(&self, n_grid: usize) -> Result<f64> {
        self.normalization_numeric_refined(n_grid).map(|r| r.value)
    }

    pub fn normalization_numeric_refined(&self, n_grid: usize) -> Result<Refined> {
        if n_grid < 64 {
            return Err(Error::InvalidArgument(format!("n_grid must be >= 64, got {n_grid}")));
        }
        let start = pow2_at_least((n_grid as f64).max(self.bandwidth()));
        periodic_trapezoid(
            start,
            MAX_PERIODIC_POINTS,
            |psi| self.density_unnormalized(psi),
            |prev, next| (next - prev).abs() <= NUMERIC_NORMALIZATION_TOL * next.abs(),
        )
    }

    /// Density on `n ≥ 1024` uniform points covering `[0, 2π]` inclusive.
    pub fn tabulate(&self, n: usize) -> Result<TabulatedDensity> {
        if n < MIN_TABULATION_POINTS {
            return Err(Error::InvalidArgument(format!(
                "tabulation needs at least {MIN_TABULATION_POINTS} points, got {n}"
            )));
        }
        Ok(self.tabulate_on(n))
    }

    /// Tabulation without the size floor, used when matching foreign grids.
    pub fn tabulate_on(&self, n: usize) -> TabulatedDensity {
        let grid = uniform_grid(n);
        let values = grid.iter().map(|&psi| self.density(psi)).collect();
        TabulatedDensity::from_values(grid, values)
    }
}

fn mott_weight(term: &BranchTerm, separation_dir: Vec3, psi: f64, sigma_angle: f64) -> f64 {
    let cos_beta = term.kinematics.direction(psi).dot(separation_dir).clamp(-1.0, 1.0);
    let beta = cos_beta.acos();
    (-beta * beta / (2.0 * sigma_angle * sigma_angle)).exp()
}

/// `n` uniform points on `[0, 2π]`, both ends included.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    let step = TAU / (n - 1) as f64;
    (0..n)
        .map(|k| if k + 1 == n { TAU } else { k as f64 * step })
        .collect()
}

/// Density samples on a closed uniform grid with their running integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabulatedDensity {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Cumulative trapezoid integral scaled so that the last entry is 1.
    pub cdf: Vec<f64>,
}

impl TabulatedDensity {
    /// Builds the CDF from density samples on `grid` (uniform, ascending).
    pub fn from_values(grid: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len(), "grid and values differ in length");
        assert!(grid.len() >= 2, "tabulation needs at least two points");
        let mut cdf = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for k in 1..values.len() {
            acc += 0.5 * (values[k - 1] + values[k]) * (grid[k] - grid[k - 1]);
            cdf.push(acc);
        }
        if acc > 0.0 {
            for c in &mut cdf {
                *c /= acc;
            }
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Self { grid, values, cdf }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Trapezoid integral of the stored values.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.step())
    }

    /// Piecewise-linear interpolation of the CDF.
    pub fn cdf_at(&self, psi: f64) -> f64 {
        let (first, last) = (self.grid[0], self.grid[self.len() - 1]);
        if psi <= first {
            return 0.0;
        }
        if psi >= last {
            return 1.0;
        }
        let pos = (psi - first) / self.step();
        let j = (pos.floor() as usize).min(self.len() - 2);
        let t = pos - j as f64;
        self.cdf[j] + t * (self.cdf[j + 1] - self.cdf[j])
    }

    /// Inverse of [`Self::cdf_at`] for `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.len();
        let j = self.cdf.partition_point(|&c| c <= u).clamp(1, n - 1) - 1;
        let width = self.cdf[j + 1] - self.cdf[j];
        let t = if width > 0.0 {
            ((u - self.cdf[j]) / width).clamp(0.0, 1.0)
        } else {
            0.0
        };
        self.grid[j] + t * (self.grid[j + 1] - self.grid[j])
    }

    /// Kolmogorov–Smirnov distance between the empirical CDF of `samples`
    /// and the tabulated CDF.
    pub fn ks_distance(&self, samples: &[f64]) -> f64 {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = self.cdf_at(x);
                let below = i as f64 / n;
                let above = (i + 1) as f64 / n;
                (above - f).max(f - below)
            })
            .fold(0.0, f64::max)
    }
}

/// `count` inverse-CDF draws, reproducible for a given `seed`.
pub fn sample(tab: &TabulatedDensity, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(tab, count, &mut rng)
}

pub fn sample_with<R: Rng + ?Sized>(tab: &TabulatedDensity, count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| tab.quantile(rng.gen::<f64>())).collect()
}
