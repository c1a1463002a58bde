//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.
//!
//! Run with `cargo test -p udw-core --test acceptance`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use udw_core::kinematics::DEFAULT_CLOSURE_TOLERANCE;
use udw_core::oracle::{eta_scan, is_monotone_refinement};
use udw_core::statistics::{entropy_minimum, sweep, uniform_best_guess, uniform_entropy, DEFAULT_EPSILON};
use udw_core::*;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

fn default_process() -> ProcessParams {
    ProcessParams::new(1.0, 4.0, 3.0)
}

fn default_detectors(r: f64, alpha: f64) -> DetectorPair {
    DetectorPair::new(2.0, 3.0, r, alpha)
}

/// Feasible `(process, gaps)` with `P` drawn inside the band and `M` fixed by closure.
fn feasible_draw(rng: &mut ChaCha8Rng) -> (ProcessParams, f64, f64) {
    let m: f64 = rng.gen_range(0.2..3.0);
    let d1 = m * rng.gen_range(1.05..5.0);
    let d2 = m * rng.gen_range(1.05..5.0);
    let (k1, k2) = ((d1 * d1 - m * m).sqrt(), (d2 * d2 - m * m).sqrt());
    let lo = (k1 - k2).abs();
    let hi = k1 + k2;
    let p = lo + (hi - lo) * rng.gen_range(0.02..0.98);
    let mass_parent = ((d1 + d2).powi(2) - p * p).sqrt();
    (ProcessParams::new(m, mass_parent, p), d1, d2)
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.abs().max(f64::MIN_POSITIVE)
}

fn constraint_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut disagreements, mut feasible_count) = (0, 0);
    let mut worst_balance: f64 = 0.0;
    for draw in 0..1000 {
        let (process, detectors) = if draw % 2 == 0 {
            let (process, d1, d2) = feasible_draw(&mut rng);
            (process, DetectorPair::new(d1, d2, rng.gen_range(0.0..100.0), rng.gen_range(0.0..=PI)))
        } else {
            let m: f64 = rng.gen_range(0.2..3.0);
            let d1 = m * rng.gen_range(0.5..4.0);
            let d2 = m * rng.gen_range(0.5..4.0);
            let mass_parent = m * rng.gen_range(1.0..6.0);
            let p = if rng.gen_bool(0.5) {
                ((d1 + d2).powi(2) - mass_parent * mass_parent).max(0.0).sqrt()
            } else {
                rng.gen_range(0.0..10.0)
            };
            let r = rng.gen_range(-1.0..100.0);
            let alpha = rng.gen_range(-0.5..PI + 0.5);
            (ProcessParams::new(m, mass_parent, p), DetectorPair::new(d1, d2, r, alpha))
        };

        let ProcessParams {
            m,
            mass_parent,
            momentum: p,
        } = process;
        let (d1, d2) = (detectors.delta1, detectors.delta2);
        let total = (d1 + d2).powi(2);
        let closure = (p * p + mass_parent * mass_parent - total).abs() <= DEFAULT_CLOSURE_TOLERANCE * total;
        let band = if d1 > m && d2 > m {
            let (k1, k2) = ((d1 * d1 - m * m).sqrt(), (d2 * d2 - m * m).sqrt());
            (k1 - k2).abs() <= p && p <= k1 + k2
        } else {
            false
        };
        let expected = m > 0.0
            && d1 > m
            && d2 > m
            && mass_parent >= 2.0 * m
            && p > 0.0
            && closure
            && band
            && detectors.r >= 0.0
            && (0.0..=PI).contains(&detectors.alpha);
        let report = validate_params(&process, &detectors);
        if report.feasible != expected {
            disagreements += 1;
        }
        if !report.feasible {
            continue;
        }
        feasible_count += 1;
        let (k1, k2) = (kappa(d1, m).unwrap(), kappa(d2, m).unwrap());
        let c12 = cos_theta(p, k1, k2).unwrap();
        let c21 = cos_theta(p, k2, k1).unwrap();
        let (s12, s21) = ((1.0 - c12 * c12).sqrt(), (1.0 - c21 * c21).sqrt());
        let scale = k1.max(k2);
        worst_balance = worst_balance
            .max(rel(k1 * c12 + k2 * c21, p, p))
            .max(rel(k1 * s12, k2 * s21, scale));
    }
    Outcome::new(
        disagreements == 0 && worst_balance <= 1e-12 && feasible_count >= 500,
        format!(
            "1000 draws, {feasible_count} feasible, {disagreements} disagreements, worst balance residual {worst_balance:.2e}"
        ),
    )
}

fn normalization_cross_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..200 {
        let (process, d1, d2) = feasible_draw(&mut rng);
        let det = DetectorPair::new(d1, d2, rng.gen_range(0.0..=1e3), rng.gen_range(0.0..=PI));
        let outcome = DistributionContext::new(process, det).and_then(|ctx| {
            let analytic = ctx.normalization_analytic()?;
            let numeric = ctx.normalization_numeric(256)?;
            Ok(rel(analytic, numeric, numeric))
        });
        match outcome {
            Ok(e) => worst = worst.max(e),
            Err(_) => failures += 1,
        }
    }
    Outcome::new(
        failures == 0 && worst <= 1e-8,
        format!("200 contexts, worst relative gap {worst:.2e}, {failures} errors"),
    )
}

fn uniform_limits() -> Outcome {
    let eps = DEFAULT_EPSILON;
    let mut density_err: f64 = 0.0;
    let mut entropy_err: f64 = 0.0;
    let mut guess_err: f64 = 0.0;
    for r in [0.0, 1.0, 5.0, 50.0, 1e3] {
        let ctx = DistributionContext::new(default_process(), default_detectors(r, 0.0)).unwrap();
        for i in 0..1000 {
            let psi = TAU * i as f64 / 1000.0;
            density_err = density_err.max((ctx.density(psi) - 1.0 / TAU).abs());
        }
        entropy_err = entropy_err.max((shannon_entropy(&ctx).unwrap() - uniform_entropy()).abs());
        guess_err = guess_err.max((best_guess(&ctx, eps).unwrap().probability - uniform_best_guess(eps)).abs());
    }
    Outcome::new(
        density_err <= 1e-12 && entropy_err <= 1e-9 && guess_err <= 1e-9,
        format!("density {density_err:.1e}, entropy {entropy_err:.1e}, best guess {guess_err:.1e}"),
    )
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn asymptotic_rate() -> Outcome {
    let r = log_spaced(1e2, 1e4, 400);
    match decay_exponent(
        &default_process(),
        &default_detectors(1.0, FRAC_PI_2),
        &r,
        DecayObservable::NormalizationGap,
    ) {
        Ok(fit) => Outcome::new(
            (-0.65..=-0.35).contains(&fit.slope),
            format!("slope {:.4} over {} envelope windows", fit.slope, fit.envelope.len()),
        ),
        Err(e) => Outcome::new(false, format!("error: {e}")),
    }
}

fn oracle_equivalence() -> Outcome {
    let settings = OracleSettings::default();
    let mut worst: f64 = 0.0;
    for alpha in [FRAC_PI_4, FRAC_PI_2] {
        for r in [2.0, 5.0, 10.0] {
            match oracle_compare(&default_process(), &default_detectors(r, alpha), &settings) {
                Ok(report) => worst = worst.max(report.tv),
                Err(e) => return Outcome::new(false, format!("r={r}, alpha={alpha}: {e}")),
            }
        }
    }
    let etas = [0.04, 0.02, 0.01, 0.005];
    let scan = match eta_scan(&default_process(), &default_detectors(5.0, FRAC_PI_2), &settings, &etas) {
        Ok(scan) => scan,
        Err(e) => return Outcome::new(false, format!("eta scan: {e}")),
    };
    let monotone = is_monotone_refinement(&scan, 0.1);
    let tvs: Vec<String> = scan.iter().map(|s| format!("{:.2e}", s.tv)).collect();
    Outcome::new(
        worst < 0.05 && monotone,
        format!("worst tv {worst:.2e}; eta scan tv [{}] monotone={monotone}", tvs.join(", ")),
    )
}

fn entropy_minimum_shape() -> Outcome {
    let mut r: Vec<f64> = (1..=100).map(|i| 0.05 * i as f64).collect();
    r.extend((11..=100).map(|i| 0.5 * i as f64));
    let eps = DEFAULT_EPSILON;
    let baseline = uniform_best_guess(eps);
    let mut lines = Vec::new();
    let mut argmins = Vec::new();
    let mut ok = true;
    for alpha in [FRAC_PI_2, FRAC_PI_4] {
        let rows = match sweep(&default_process(), &default_detectors(1.0, alpha), &[alpha], &r, eps, |b| b) {
            Ok(rows) => rows,
            Err(e) => return Outcome::new(false, format!("sweep: {e}")),
        };
        let min = entropy_minimum(&rows).expect("non-empty sweep");
        let lift = rows[min.index].best_guess_prob / baseline;
        ok &= min.strict_interior && lift >= 1.2;
        argmins.push(min.r);
        lines.push(format!(
            "alpha={alpha:.4}: argmin r={:.2}, h={:.4}, M/baseline={lift:.3}",
            min.r, min.entropy
        ));
    }
    ok &= argmins[1] > argmins[0];
    Outcome::new(ok, lines.join("; "))
}

fn sampling_fidelity() -> Outcome {
    let ctx = DistributionContext::new(default_process(), default_detectors(5.0, FRAC_PI_2)).unwrap();
    let tab = ctx.tabulate(udw_core::distribution::DEFAULT_TABULATION_POINTS).unwrap();
    let a = sample(&tab, 1_000_000, 7);
    let b = sample(&tab, 1_000_000, 7);
    let c = sample(&tab, 1000, 8);
    let ks = tab.ks_distance(&a);
    let deterministic = a == b && a[..1000] != c[..];
    Outcome::new(
        ks < 2e-3 && deterministic,
        format!("KS {ks:.2e}, deterministic={deterministic}"),
    )
}

fn classical_solver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut empty_solvable = 0;
    for _ in 0..100 {
        let m: f64 = rng.gen_range(0.2..3.0);
        let d1: f64 = rng.gen_range(0.1..5.0);
        let d2: f64 = rng.gen_range(0.1..5.0);
        let (r1, r2) = ((2.0 * m * d1).sqrt(), (2.0 * m * d2).sqrt());
        let big_p = (r1 - r2).abs() + (r1 + r2 - (r1 - r2).abs()) * rng.gen_range(0.0..=1.0);
        let phi = rng.gen_range(0.0..TAU);
        let p = [big_p * phi.cos(), big_p * phi.sin()];
        let solutions = solve_classical_2d(p, m, d1, d2);
        if solutions.is_empty() {
            empty_solvable += 1;
        }
        let scale = r1.max(r2).max(big_p);
        for s in solutions {
            let (da, db) = if s.swapped { (d2, d1) } else { (d1, d2) };
            let residuals = [
                (s.k1[0] + s.k2[0] - p[0]).abs() / scale,
                (s.k1[1] + s.k2[1] - p[1]).abs() / scale,
                rel(s.k1[0].powi(2) + s.k1[1].powi(2), 2.0 * m * da, 2.0 * m * da),
                rel(s.k2[0].powi(2) + s.k2[1].powi(2), 2.0 * m * db, 2.0 * m * db),
            ];
            worst = residuals.iter().fold(worst, |w, &x| w.max(x));
        }
    }
    // Circle gaps: |p| beyond r1 + r2, and |p| short of |r1 − r2|.
    let gaps = [
        solve_classical_2d([5.0, 0.0], 1.0, 1.0, 2.0),
        solve_classical_2d([0.0, 0.3], 1.0, 0.5, 4.5),
        solve_classical_2d([0.0, 0.0], 1.0, 1.0, 2.0),
    ];
    let gaps_empty = gaps.iter().all(Vec::is_empty);
    Outcome::new(
        worst < 1e-12 && empty_solvable == 0 && gaps_empty,
        format!("worst residual {worst:.2e}, {empty_solvable} solvable instances unsolved, gaps empty={gaps_empty}"),
    )
}

fn filter_behavior() -> Outcome {
    let det = default_detectors(5.0, FRAC_PI_2);
    let eps = DEFAULT_EPSILON;
    let bare = DistributionContext::new(default_process(), det).unwrap();
    let filtered = DistributionContext::builder(default_process(), det)
        .mott_filter(0.3)
        .build()
        .unwrap();
    let wide = DistributionContext::builder(default_process(), det)
        .mott_filter(1e9)
        .build()
        .unwrap();
    let m_bare = best_guess(&bare, eps).unwrap().probability;
    let m_filtered = best_guess(&filtered, eps).unwrap().probability;
    let gap = (0..4096)
        .map(|i| TAU * i as f64 / 4096.0)
        .map(|psi| (wide.density(psi) - bare.density(psi)).abs())
        .fold(0.0, f64::max);
    Outcome::new(
        m_filtered >= m_bare && gap <= 1e-10,
        format!("M filtered {m_filtered:.4} vs bare {m_bare:.4}; wide-filter gap {gap:.1e}"),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, Duration); 9] = [
        ("constraint suite", constraint_suite, Duration::from_secs(1)),
        ("normalization cross-check", normalization_cross_check, Duration::from_secs(10)),
        ("uniform limits", uniform_limits, Duration::MAX),
        ("asymptotic rate", asymptotic_rate, Duration::from_secs(30)),
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(300)),
        ("entropy minimum", entropy_minimum_shape, Duration::from_secs(60)),
        ("sampling fidelity", sampling_fidelity, Duration::MAX),
        ("classical 2d solver", classical_solver, Duration::MAX),
        ("filter behavior", filter_behavior, Duration::MAX),
    ];
    let mut failed = 0;
    for (index, (name, check, budget)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = check();
        let elapsed = started.elapsed();
        let in_budget = elapsed <= *budget;
        let passed = outcome.passed && in_budget;
        if !passed {
            failed += 1;
        }
        let budget_note = if *budget == Duration::MAX {
            String::new()
        } else {
            format!(" (budget {}s)", budget.as_secs())
        };
        println!(
            "{} {}. {name}: {} [{:.2}s{budget_note}]",
            if passed { "PASS" } else { "FAIL" },
            index + 1,
            outcome.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
