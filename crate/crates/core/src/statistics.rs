//! Figures of merit of the detector pair as functions of the geometry.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{ContextBuilder, DistributionContext, TabulatedDensity};
use crate::error::{Error, Result};
use crate::kinematics::{DetectorPair, ProcessParams};
use crate::quadrature::{periodic_trapezoid, periodic_trapezoid_confirmed, pow2_at_least, trapezoid, GaussLegendre, MAX_PERIODIC_POINTS};

/// Default half-width of the best-guess window, radians.
pub const DEFAULT_EPSILON: f64 = 0.3;

/// Absolute change between successive entropy refinements at convergence.
/// Two consecutive doublings must stay below it.
pub const ENTROPY_TOL: f64 = 1e-9;

/// `−p ln p` loses smoothness where the density touches zero, which happens
/// at every node of `1 + cos(B cos ψ)` for perpendicular geometries; the
/// trapezoid error then falls only like `h³` and large `B` needs fine grids.
const ENTROPY_MAX_POINTS: usize = 1 << 25;

/// Window masses closer than this are treated as ties.
const TIE_TOL: f64 = 1e-12;

/// Number of equal log-r windows used to extract the decay envelope.
pub const ENVELOPE_WINDOWS: usize = 10;

/// Differential entropy of the uniform density on `[0, 2π]`.
pub fn uniform_entropy() -> f64 {
    TAU.ln()
}

/// Best-guess probability of the uniform density, `2ε/2π`.
pub fn uniform_best_guess(epsilon: f64) -> f64 {
    epsilon / PI
}

/// `h = −∫ p ln p dψ` in nats, with `0 ln 0 = 0`.
///
/// The result never exceeds `ln 2π`; rounding on an exactly uniform density
/// is clipped to that bound.
pub fn shannon_entropy(ctx: &DistributionContext) -> Result<f64> {
    let start = pow2_at_least(1024f64.max(4.0 * ctx.bandwidth()));
    periodic_trapezoid_confirmed(
        start,
        ENTROPY_MAX_POINTS,
        2,
        |psi| {
            let p = ctx.density(psi);
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        },
        |prev, next| (next - prev).abs() <= ENTROPY_TOL,
    )
    .map(|r| r.value.min(uniform_entropy()))
}

/// Most probable window `[ψ₀ − ε, ψ₀ + ε]` and its probability mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestGuess {
    pub center: f64,
    pub probability: f64,
}

/// Running integral of the normalized density, extended periodically.
struct CumulativeMass<'a> {
    ctx: &'a DistributionContext,
    rule: GaussLegendre,
    cell: f64,
    prefix: Vec<f64>,
}

impl<'a> CumulativeMass<'a> {
    fn new(ctx: &'a DistributionContext) -> Self {
        // Cells narrow enough that the phase B cos ψ moves by at most 2 rad.
        let filter_cells = ctx.filter().map_or(0.0, |f| 8.0 * TAU / f.sigma_angle);
        let cells = pow2_at_least(1024f64.max(PI * ctx.max_phase_amplitude()).max(filter_cells));
        let cell = TAU / cells as f64;
        let rule = GaussLegendre::new(16);
        let mut prefix = Vec::with_capacity(cells + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for k in 0..cells {
            let lo = k as f64 * cell;
            acc += rule.integrate(lo, lo + cell, |psi| ctx.density(psi));
            prefix.push(acc);
        }
        Self {
            ctx,
            rule,
            cell,
            prefix,
        }
    }

    fn cells(&self) -> usize {
        self.prefix.len() - 1
    }

    fn total(&self) -> f64 {
        self.prefix[self.cells()]
    }

    /// `∫₀^x p dψ` for any real `x`.
    fn at(&self, x: f64) -> f64 {
        let turns = (x / TAU).floor();
        let y = x - turns * TAU;
        let j = ((y / self.cell) as usize).min(self.cells() - 1);
        let lo = j as f64 * self.cell;
        let partial = self.rule.integrate(lo, y, |psi| self.ctx.density(psi));
        turns * self.total() + self.prefix[j] + partial
    }

    fn window(&self, center: f64, half_width: f64) -> f64 {
        self.at(center + half_width) - self.at(center - half_width)
    }
}

/// Maximizes the mass in `[ψ₀ − ε, ψ₀ + ε]` over `ψ₀ ∈ [0, 2π)` with periodic
/// wrap-around. Ties resolve to the smallest center.
pub fn best_guess(ctx: &DistributionContext, epsilon: f64) -> Result<BestGuess> {
    if !(epsilon > 0.0 && epsilon < PI) {
        return Err(Error::InvalidArgument(format!(
            "best-guess half-width must lie in (0, π), got {epsilon}"
        )));
    }
    let mass = CumulativeMass::new(ctx);
    let (mut best_k, mut best) = (0usize, f64::NEG_INFINITY);
    for k in 0..mass.cells() {
        let w = mass.window(k as f64 * mass.cell, epsilon);
        if w > best + TIE_TOL {
            best = w;
            best_k = k;
        }
    }
    let coarse = best_k as f64 * mass.cell;
    let (refined_center, refined) = golden_maximize(
        |c| mass.window(c, epsilon),
        coarse - mass.cell,
        coarse + mass.cell,
        1e-12,
    );
    let (center, probability) = if refined > best + TIE_TOL {
        (refined_center.rem_euclid(TAU), refined)
    } else {
        (coarse, best)
    };
    Ok(BestGuess {
        center,
        probability: probability.clamp(0.0, 1.0),
    })
}

fn golden_maximize(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// One row of a geometry sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatRow {
    pub r: f64,
    pub alpha: f64,
    pub entropy: f64,
    pub best_guess_prob: f64,
    pub best_guess_center: f64,
    pub normalization: f64,
}

pub fn stat_row(ctx: &DistributionContext, epsilon: f64) -> Result<StatRow> {
    let guess = best_guess(ctx, epsilon)?;
    Ok(StatRow {
        r: ctx.detectors().r,
        alpha: ctx.detectors().alpha,
        entropy: shannon_entropy(ctx)?,
        best_guess_prob: guess.probability,
        best_guess_center: guess.center,
        normalization: ctx.normalization().value,
    })
}

/// Evaluates [`stat_row`] on every `(α, r)` pair, in parallel, ordered by α then r.
///
/// `configure` receives a builder for each grid point and may attach the
/// filter, form factors or amplitude model.
pub fn sweep<F>(
    process: &ProcessParams,
    template: &DetectorPair,
    alphas: &[f64],
    r_values: &[f64],
    epsilon: f64,
    configure: F,
) -> Result<Vec<StatRow>>
where
    F: Fn(ContextBuilder) -> ContextBuilder + Sync,
{
    let points: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| r_values.iter().map(move |&r| (a, r)))
        .collect();
    points
        .par_iter()
        .map(|&(alpha, r)| {
            let det = template.with_geometry(r, alpha);
            let ctx = configure(DistributionContext::builder(*process, det)).build()?;
            stat_row(&ctx, epsilon)
        })
        .collect()
}

/// Location of the smallest entropy along a sweep at fixed α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyMinimum {
    pub index: usize,
    pub r: f64,
    pub entropy: f64,
    /// The minimum is not at either end and is strictly below both neighbours.
    pub strict_interior: bool,
}

/// Finds the entropy minimum in a sequence of rows sharing one α, sorted by r.
pub fn entropy_minimum(rows: &[StatRow]) -> Option<EntropyMinimum> {
    let (index, row) = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.entropy.total_cmp(&b.1.entropy))?;
    let strict_interior = index > 0
        && index + 1 < rows.len()
        && rows[index - 1].entropy > row.entropy
        && rows[index + 1].entropy > row.entropy;
    Some(EntropyMinimum {
        index,
        r: row.r,
        entropy: row.entropy,
        strict_interior,
    })
}

/// Quantity whose large-r decay is fitted by [`decay_exponent`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayObservable {
    /// `|N(r) − N_∞|` with `N_∞ = 2π` per open branch.
    NormalizationGap,
    /// `|∫ cos(nψ) p_r dψ|`, the distance of one Fourier moment from its uniform value 0.
    CosineMoment(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// `(r, d(r))` at each window maximum used in the fit.
    pub envelope: Vec<(f64, f64)>,
}

/// Fits `log d(r) ≈ slope · log r + intercept` to the upper envelope of the
/// observable `d` sampled on `r_values`.
///
/// `d(r)` oscillates through zeros under its envelope, so the log-r axis is cut
/// into [`ENVELOPE_WINDOWS`] equal windows and only each window's maximum enters
/// the least-squares fit.
pub fn decay_exponent(
    process: &ProcessParams,
    template: &DetectorPair,
    r_values: &[f64],
    observable: DecayObservable,
) -> Result<DecayFit> {
    if r_values.len() < 40 {
        return Err(Error::InvalidArgument(format!(
            "need at least 40 separations, got {}",
            r_values.len()
        )));
    }
    if r_values.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("separations must be positive".into()));
    }
    let (r_min, r_max) = r_values
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    if r_max / r_min < 100.0 {
        return Err(Error::InvalidArgument(format!(
            "separations must span two decades, got [{r_min}, {r_max}]"
        )));
    }
    let probe = DistributionContext::new(*process, template.with_geometry(r_min, template.alpha))?;
    if probe.max_phase_amplitude() == 0.0 {
        return Err(Error::NoDecay(format!(
            "B vanishes at alpha = {}; the density is uniform at every separation",
            template.alpha
        )));
    }

    let samples: Vec<(f64, f64)> = r_values
        .par_iter()
        .map(|&r| {
            let ctx = DistributionContext::new(*process, template.with_geometry(r, template.alpha))?;
            let d = match observable {
                DecayObservable::NormalizationGap => {
                    let uniform = TAU * ctx.open_branch_count() as f64;
                    (ctx.normalization_numeric(256)? - uniform).abs()
                }
                DecayObservable::CosineMoment(n) => cosine_moment(&ctx, n)?.abs(),
            };
            Ok((r, d))
        })
        .collect::<Result<_>>()?;

    let (lo, hi) = (r_min.ln(), r_max.ln());
    let width = (hi - lo) / ENVELOPE_WINDOWS as f64;
    let mut envelope: Vec<Option<(f64, f64)>> = vec![None; ENVELOPE_WINDOWS];
    for &(r, d) in &samples {
        let w = (((r.ln() - lo) / width) as usize).min(ENVELOPE_WINDOWS - 1);
        match envelope[w] {
            Some((_, best)) if best >= d => {}
            _ => envelope[w] = Some((r, d)),
        }
    }
    let envelope: Vec<(f64, f64)> = envelope.into_iter().flatten().filter(|&(_, d)| d > 0.0).collect();
    if envelope.len() < 3 {
        return Err(Error::NoDecay(format!(
            "only {} populated envelope windows with nonzero signal",
            envelope.len()
        )));
    }
    let (slope, intercept) = least_squares(envelope.iter().map(|&(r, d)| (r.ln(), d.ln())));
    Ok(DecayFit {
        slope,
        intercept,
        envelope,
    })
}

/// `∫₀^{2π} cos(nψ) p(ψ) dψ`.
pub fn cosine_moment(ctx: &DistributionContext, harmonic: u32) -> Result<f64> {
    let n = harmonic as f64;
    let start = pow2_at_least(256f64.max(ctx.bandwidth() + 2.0 * n));
    periodic_trapezoid(
        start,
        MAX_PERIODIC_POINTS,
        |psi| (n * psi).cos() * ctx.density(psi),
        |a, b| (a - b).abs() <= 1e-13,
    )
    .map(|r| r.value)
}

fn least_squares(points: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = points.collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Total-variation distance `½ ∫ |a − b| dψ` between two tabulations on one grid.
pub fn tv_distance(a: &TabulatedDensity, b: &TabulatedDensity) -> Result<f64> {
    check_same_grid(a, b)?;
    let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).collect();
    Ok(0.5 * trapezoid(&diff, a.step()))
}

/// `max |a − b|` over a shared grid.
pub fn sup_distance(a: &TabulatedDensity, b: &TabulatedDensity) -> Result<f64> {
    check_same_grid(a, b)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

fn check_same_grid(a: &TabulatedDensity, b: &TabulatedDensity) -> Result<()> {
    let same = a.len() == b.len()
        && a
            .grid
            .iter()
            .zip(&b.grid)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0));
    if same {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{} points vs {} points",
            a.len(),
            b.len()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::uniform_grid;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn process() -> ProcessParams {
        ProcessParams::new(1.0, 4.0, 3.0)
    }

    fn ctx(r: f64, alpha: f64) -> DistributionContext {
        DistributionContext::new(process(), DetectorPair::new(2.0, 3.0, r, alpha)).unwrap()
    }

    #[test]
    fn uniform_entropy_and_best_guess() {
        let c = ctx(5.0, 0.0);
        assert!((shannon_entropy(&c).unwrap() - uniform_entropy()).abs() <= 1e-9);
        let g = best_guess(&c, 0.3).unwrap();
        assert!((g.probability - 0.3 / PI).abs() <= 1e-9);
        assert_eq!(g.center, 0.0);
    }

    #[test]
    fn full_window_holds_all_mass() {
        let c = ctx(5.0, FRAC_PI_2);
        let g = best_guess(&c, PI - 1e-9).unwrap();
        assert!((g.probability - 1.0).abs() < 1e-8);
        assert!(best_guess(&c, PI).is_err());
        assert!(best_guess(&c, 0.0).is_err());
    }

    #[test]
    fn structured_density_beats_baselines() {
        let c = ctx(1.1, FRAC_PI_2);
        let h = shannon_entropy(&c).unwrap();
        assert!(h < uniform_entropy() - 0.05);
        let g = best_guess(&c, 0.3).unwrap();
        assert!(g.probability > 0.3 / PI);
        // window mass is symmetric about π, so the mirrored center does equally well
        let mirrored = best_guess_mass(&c, TAU - g.center, 0.3);
        assert_relative_eq!(mirrored, g.probability, epsilon = 1e-10);
    }

    fn best_guess_mass(c: &DistributionContext, center: f64, eps: f64) -> f64 {
        CumulativeMass::new(c).window(center, eps)
    }

    #[test]
    fn best_guess_center_regression() {
        // The optimum sits at π/2 here, not on the symmetry axis {0, π}.
        let g = best_guess(&ctx(1.09, FRAC_PI_2), 0.3).unwrap();
        assert_relative_eq!(g.center, FRAC_PI_2, epsilon = 1e-3);
        assert_relative_eq!(g.probability, 0.2809, epsilon = 1e-3);
    }

    #[test]
    fn best_guess_window_matches_brute_force() {
        let c = ctx(3.0, 1.0);
        let g = best_guess(&c, 0.4).unwrap();
        // independent scan: fine trapezoid window sums over a dense center grid
        let n = 20_000;
        let h = TAU / n as f64;
        let p: Vec<f64> = (0..n).map(|k| c.density(k as f64 * h)).collect();
        let w = (0.4 / h).round() as usize;
        let mut best: f64 = 0.0;
        for k in 0..n {
            let mut s = 0.5 * (p[(k + n - w) % n] + p[(k + w) % n]);
            for j in 1..2 * w {
                s += p[(k + n - w + j) % n];
            }
            best = best.max(s * h);
        }
        assert_relative_eq!(g.probability, best, epsilon = 1e-4);
    }

    #[test]
    fn best_guess_grows_with_window() {
        let c = ctx(2.3, 1.2);
        let mut prev = 0.0;
        for k in 1..30 {
            let eps = k as f64 * 0.1;
            let g = best_guess(&c, eps).unwrap();
            assert!(g.probability >= prev - 1e-12);
            assert!(g.probability >= eps / PI - 1e-12);
            prev = g.probability;
        }
    }

    #[test]
    fn perpendicular_large_separation_entropy_limit() {
        // At α = π/2 both branches share one phase, so p ∝ 1 + cos(B cos ψ) keeps
        // oscillating between 0 and twice its mean; its entropy tends to
        // ln 2π − ⟨(1 + cos u) ln(1 + cos u)⟩ = ln 2π − (1 − ln 2).
        let h = shannon_entropy(&ctx(1e4, FRAC_PI_2)).unwrap();
        let limit = uniform_entropy() - (1.0 - 2f64.ln());
        assert!((h - limit).abs() < 1e-2, "h = {h}, limit {limit}");
    }

    #[test]
    fn cosine_moment_vanishes_identically() {
        // A₁₂ = −A₂₁ and B₁₂ = B₂₁, so the first moment cancels between branches.
        for (r, alpha) in [(1.0, 0.4), (5.0, 1.3), (40.0, 2.5)] {
            assert!(cosine_moment(&ctx(r, alpha), 1).unwrap().abs() < 1e-12);
            assert!(cosine_moment(&ctx(r, alpha), 2).unwrap().abs() > 1e-6);
        }
    }

    #[test]
    fn decay_exponent_rejects_flat_geometry() {
        let r: Vec<f64> = (0..40).map(|k| 10f64.powf(2.0 + 2.0 * k as f64 / 39.0)).collect();
        let err = decay_exponent(&process(), &DetectorPair::new(2.0, 3.0, 1.0, 0.0), &r, DecayObservable::NormalizationGap)
            .unwrap_err();
        assert!(matches!(err, Error::NoDecay(_)));
        let few = &r[..10];
        assert!(decay_exponent(&process(), &DetectorPair::new(2.0, 3.0, 1.0, 1.0), few, DecayObservable::NormalizationGap).is_err());
    }

    #[test]
    fn second_moment_decays_like_inverse_square_root() {
        let r: Vec<f64> = (0..200).map(|k| 10f64.powf(2.0 + 2.0 * k as f64 / 199.0)).collect();
        let fit = decay_exponent(
            &process(),
            &DetectorPair::new(2.0, 3.0, 1.0, FRAC_PI_2),
            &r,
            DecayObservable::CosineMoment(2),
        )
        .unwrap();
        assert!((-0.65..=-0.35).contains(&fit.slope), "slope {}", fit.slope);
    }

    #[test]
    fn tv_distance_cases() {
        let a = ctx(5.0, FRAC_PI_2).tabulate(1024).unwrap();
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(sup_distance(&a, &a).unwrap(), 0.0);

        let grid = uniform_grid(4096);
        let uniform = TabulatedDensity::from_values(grid.clone(), vec![1.0 / TAU; 4096]);
        let width: f64 = 1e-2;
        let spike: Vec<f64> = grid
            .iter()
            .map(|&x| (-(x - PI).powi(2) / (2.0 * width * width)).exp() / (width * TAU.sqrt()))
            .collect();
        let spike = TabulatedDensity::from_values(grid, spike);
        assert!(tv_distance(&uniform, &spike).unwrap() > 0.98);

        let other = ctx(5.0, FRAC_PI_2).tabulate(2048).unwrap();
        assert!(matches!(tv_distance(&a, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn sweep_preserves_order() {
        let rows = sweep(&process(), &DetectorPair::new(2.0, 3.0, 1.0, 0.0), &[0.5, 1.5], &[0.5, 1.0, 2.0], 0.3, |b| b).unwrap();
        let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r.alpha, r.r)).collect();
        assert_eq!(keys, vec![(0.5, 0.5), (0.5, 1.0), (0.5, 2.0), (1.5, 0.5), (1.5, 1.0), (1.5, 2.0)]);
        for row in rows {
            assert!(row.entropy <= uniform_entropy() + 1e-9);
            assert!((0.0..=1.0).contains(&row.best_guess_prob));
        }
    }
}
