use std::path::Path;

use serde::Serialize;
use udw_core::oracle::{eta_scan, is_monotone_refinement};
use udw_core::statistics::{entropy_minimum, sweep, uniform_best_guess, uniform_entropy};
use udw_core::{
    oracle_compare, sample, solve_classical_2d, validate_params, ClassicalSolution, ContextBuilder,
    DistributionContext, Integrator, OracleSettings, StatRow, ValidationReport,
};

use crate::config::{Format, RunConfig};
use crate::failure::Failure;
use crate::output::{prepare_dir, to_json, write_text, Table, SCHEMA_VERSION};

/// Largest tolerated `|∫ p dψ − 1|` for an emitted density column.
pub const COLUMN_NORMALIZATION_TOL: f64 = 1e-6;

/// Oracle agreement threshold recorded in the report.
pub const ORACLE_TV_TOL: f64 = 0.05;

/// Relative slack allowed in the η-scan monotonicity check.
pub const ETA_SCAN_SLACK: f64 = 0.1;

pub struct Invocation<'a> {
    pub config: &'a RunConfig,
    pub out_dir: &'a Path,
    pub seed: u64,
    pub json: bool,
}

fn configure(config: &RunConfig) -> impl Fn(ContextBuilder) -> ContextBuilder + Sync + '_ {
    move |builder| {
        let builder = if config.model.filter {
            builder.mott_filter(config.model.sigma_angle)
        } else {
            builder
        };
        builder.form_factors(config.model.form_factors)
    }
}

/// Every `(α, r)` the config will touch, in output order.
fn geometries(config: &RunConfig) -> Result<Vec<(f64, f64)>, Failure> {
    let mut r = config.sweep_r()?;
    r.push(config.detectors.r);
    if config.oracle.enabled {
        r.extend(config.oracle_r());
    }
    r.sort_by(f64::total_cmp);
    r.dedup();
    let alphas = config.alphas()?;
    Ok(alphas.iter().flat_map(|&a| r.iter().map(move |&r| (a, r))).collect())
}

/// Validates every geometry; returns the first infeasible report, if any, and
/// the report of the first geometry otherwise.
fn check_all(config: &RunConfig) -> Result<(ValidationReport, usize, bool), Failure> {
    let template = config.detectors()?;
    let process = config.process();
    let points = geometries(config)?;
    let mut first = None;
    for &(alpha, r) in &points {
        let report = validate_params(&process, &template.with_geometry(r, alpha));
        if !report.feasible {
            return Ok((report, points.len(), false));
        }
        first.get_or_insert(report);
    }
    Ok((first.expect("at least one geometry"), points.len(), true))
}

fn preflight(config: &RunConfig) -> Result<(), Failure> {
    let (report, _, feasible) = check_all(config)?;
    if feasible {
        Ok(())
    } else {
        Err(Failure::infeasible(format!("infeasible parameters\n{report}")))
    }
}

#[derive(Serialize)]
struct ValidateJson<'a> {
    schema_version: u32,
    feasible: bool,
    geometries_checked: usize,
    report: &'a ValidationReport,
}

pub fn validate(inv: &Invocation) -> Result<(), Failure> {
    let (report, checked, feasible) = check_all(inv.config)?;
    if inv.json {
        print!(
            "{}",
            to_json(&ValidateJson {
                schema_version: SCHEMA_VERSION,
                feasible,
                geometries_checked: checked,
                report: &report,
            })
        );
    } else {
        println!("{report}");
        println!("geometries checked: {checked}");
    }
    if feasible {
        Ok(())
    } else {
        Err(Failure::infeasible("parameters are infeasible"))
    }
}

fn model_comments(table: &mut Table, config: &RunConfig) {
    let p = &config.process;
    let d = &config.detectors;
    table.comment(format!("m = {}, M = {}, P = {}", p.m, p.mass_parent, p.momentum));
    table.comment(format!("delta1 = {}, delta2 = {}", d.delta1, d.delta2));
    table.comment(format!(
        "filter = {}, sigma_angle = {}, form_factors = {}, radius_a = {}",
        config.model.filter,
        config.model.sigma_angle,
        config.model.form_factors,
        d.radius_a.map_or("none".to_string(), |a| a.to_string())
    ));
}

fn column_name(base: &str, index: usize) -> String {
    if index == 0 {
        base.to_string()
    } else {
        format!("{base}_alpha{}", index + 1)
    }
}

#[derive(Serialize)]
struct DistributionColumn {
    alpha: f64,
    normalization: f64,
    density: Vec<f64>,
}

#[derive(Serialize)]
struct DistributionJson {
    schema_version: u32,
    r: f64,
    psi: Vec<f64>,
    columns: Vec<DistributionColumn>,
}

pub fn distribution(inv: &Invocation) -> Result<(), Failure> {
    let config = inv.config;
    preflight(config)?;
    let alphas = config.alphas()?;
    let process = config.process();
    let template = config.detectors()?;
    let r = config.detectors.r;

    let mut tabs = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let ctx = configure(config)(DistributionContext::builder(process, template.with_geometry(r, alpha))).build()?;
        let tab = ctx.tabulate(config.stats.psi_grid)?;
        let integral = tab.integral();
        if (integral - 1.0).abs() > COLUMN_NORMALIZATION_TOL {
            return Err(Failure::numerical(format!(
                "density column failed its normalization check\n  alpha = {alpha}\n  r = {r}\n  \
                 trapezoid integral = {integral:.16e}\n  normalization = {:?}\n  grid points = {}",
                ctx.normalization(),
                tab.len()
            )));
        }
        tabs.push((alpha, ctx.normalization().value, tab));
    }

    prepare_dir(inv.out_dir)?;
    let mut written = Vec::new();
    if config.wants(Format::Csv) {
        let columns: Vec<String> = std::iter::once("psi".to_string())
            .chain((0..alphas.len()).map(|i| column_name("density", i)))
            .collect();
        let mut table = Table::new(columns.clone());
        table.comment("command = distribution");
        model_comments(&mut table, config);
        table.comment(format!("r = {r}"));
        for (i, (alpha, _, _)) in tabs.iter().enumerate() {
            table.comment(format!("{}: alpha = {alpha}", columns[i + 1]));
        }
        let grid = &tabs[0].2.grid;
        for (j, &psi) in grid.iter().enumerate() {
            let mut row = vec![psi];
            row.extend(tabs.iter().map(|t| t.2.values[j]));
            table.push(row);
        }
        written.push(write_text(inv.out_dir, "distribution.csv", &table.render())?);
    }
    if config.wants(Format::Json) {
        let doc = DistributionJson {
            schema_version: SCHEMA_VERSION,
            r,
            psi: tabs[0].2.grid.clone(),
            columns: tabs
                .iter()
                .map(|(alpha, n, tab)| DistributionColumn {
                    alpha: *alpha,
                    normalization: *n,
                    density: tab.values.clone(),
                })
                .collect(),
        };
        written.push(write_text(inv.out_dir, "distribution.json", &to_json(&doc))?);
    }
    if config.output.samples > 0 {
        let columns: Vec<String> = (0..alphas.len()).map(|i| column_name("psi", i)).collect();
        let draws: Vec<Vec<f64>> = tabs
            .iter()
            .enumerate()
            .map(|(i, (_, _, tab))| sample(tab, config.output.samples, inv.seed.wrapping_add(i as u64)))
            .collect();
        let mut table = Table::new(columns.clone());
        table.comment("command = distribution (inverse-CDF samples)");
        table.comment(format!("seed = {}; column i uses seed + i", inv.seed));
        for (i, (alpha, _, _)) in tabs.iter().enumerate() {
            table.comment(format!("{}: alpha = {alpha}", columns[i]));
        }
        for j in 0..config.output.samples {
            table.push(draws.iter().map(|d| d[j]).collect());
        }
        written.push(write_text(inv.out_dir, "samples.csv", &table.render())?);
    }
    report_written(&written);
    Ok(())
}

fn report_written(paths: &[std::path::PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

#[derive(Serialize)]
struct MinimumJson {
    alpha: f64,
    r: f64,
    entropy: f64,
    strict_interior: bool,
}

#[derive(Serialize)]
struct StatsJson<'a> {
    schema_version: u32,
    epsilon: f64,
    baseline_entropy: f64,
    baseline_best_guess: f64,
    rows: &'a [StatRow],
    minima: Vec<MinimumJson>,
}

pub fn stats(inv: &Invocation) -> Result<(), Failure> {
    let config = inv.config;
    preflight(config)?;
    let alphas = config.alphas()?;
    let r_values = config.sweep_r()?;
    let eps = config.stats.epsilon;
    let rows = sweep(
        &config.process(),
        &config.detectors()?,
        &alphas,
        &r_values,
        eps,
        configure(config),
    )?;
    let minima: Vec<MinimumJson> = rows
        .chunks(r_values.len())
        .zip(&alphas)
        .filter_map(|(chunk, &alpha)| {
            entropy_minimum(chunk).map(|m| MinimumJson {
                alpha,
                r: m.r,
                entropy: m.entropy,
                strict_interior: m.strict_interior,
            })
        })
        .collect();

    prepare_dir(inv.out_dir)?;
    let mut written = Vec::new();
    if config.wants(Format::Csv) {
        let columns = ["r", "alpha", "entropy", "best_guess_prob", "best_guess_center"];
        let mut table = Table::new(columns.iter().map(|c| c.to_string()).collect());
        table.comment("command = stats");
        model_comments(&mut table, config);
        table.comment(format!("epsilon = {eps}"));
        table.comment(format!("baseline_entropy = ln(2 pi) = {:.16e}", uniform_entropy()));
        table.comment(format!("baseline_best_guess = epsilon / pi = {:.16e}", uniform_best_guess(eps)));
        for row in &rows {
            table.push(vec![
                row.r,
                row.alpha,
                row.entropy,
                row.best_guess_prob,
                row.best_guess_center,
            ]);
        }
        written.push(write_text(inv.out_dir, "stats.csv", &table.render())?);
    }
    if config.wants(Format::Json) {
        let doc = StatsJson {
            schema_version: SCHEMA_VERSION,
            epsilon: eps,
            baseline_entropy: uniform_entropy(),
            baseline_best_guess: uniform_best_guess(eps),
            rows: &rows,
            minima,
        };
        written.push(write_text(inv.out_dir, "stats.json", &to_json(&doc))?);
    } else {
        for m in &minima {
            println!(
                "alpha = {}: entropy minimum {:.6} at r = {}{}",
                m.alpha,
                m.entropy,
                m.r,
                if m.strict_interior { "" } else { " (not interior)" }
            );
        }
    }
    report_written(&written);
    Ok(())
}

#[derive(Serialize)]
struct OracleCase {
    r: f64,
    alpha: f64,
    tv: f64,
    sup: f64,
    pass: bool,
}

#[derive(Serialize)]
struct EtaRow {
    eta: f64,
    tv: f64,
    sup: f64,
}

#[derive(Serialize)]
struct EtaScanJson {
    r: f64,
    alpha: f64,
    rows: Vec<EtaRow>,
    monotone: bool,
}

#[derive(Serialize)]
struct OracleJson {
    schema_version: u32,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    settings: Option<OracleSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tv_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    cases: Vec<OracleCase>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta_scan: Option<EtaScanJson>,
}

pub fn oracle(inv: &Invocation) -> Result<(), Failure> {
    let config = inv.config;
    let section = &config.oracle;
    if !section.enabled {
        prepare_dir(inv.out_dir)?;
        let doc = OracleJson {
            schema_version: SCHEMA_VERSION,
            status: "skipped",
            settings: None,
            tv_tolerance: None,
            cases: Vec::new(),
            eta_scan: None,
        };
        let path = write_text(inv.out_dir, "oracle_compare.json", &to_json(&doc))?;
        println!("oracle disabled: skipped");
        report_written(&[path]);
        return Ok(());
    }
    preflight(config)?;
    if config.model.filter || config.model.form_factors {
        eprintln!("note: the oracle compares the point-like, unfiltered density; model options are ignored");
    }
    let settings = OracleSettings {
        eta: section.eta,
        n_k: section.n_k,
        n_cos: section.n_cos,
        n_psi: section.n_psi,
        integrator: match section.mc_samples {
            Some(samples) => Integrator::MonteCarlo {
                samples,
                seed: inv.seed,
            },
            None => Integrator::TensorGrid,
        },
    };
    settings.validate()?;
    let process = config.process();
    let template = config.detectors()?;

    let mut cases = Vec::new();
    let mut scan_at = None;
    for &alpha in &config.alphas()? {
        for &r in &config.oracle_r() {
            let det = template.with_geometry(r, alpha);
            let report = oracle_compare(&process, &det, &settings)?;
            eprintln!(
                "oracle r = {r}, alpha = {alpha}: tv = {:.3e} (analytic {:.3}s, oracle {:.3}s)",
                report.tv, report.analytic_seconds, report.oracle_seconds
            );
            if scan_at.is_none() && DistributionContext::new(process, det)?.max_phase_amplitude() > 0.0 {
                scan_at = Some((r, alpha));
            }
            cases.push(OracleCase {
                r,
                alpha,
                tv: report.tv,
                sup: report.sup,
                pass: report.tv < ORACLE_TV_TOL,
            });
        }
    }

    let eta_scan_json = match (scan_at.or_else(|| cases.first().map(|c| (c.r, c.alpha))), section.eta_scan.len()) {
        (Some((r, alpha)), n) if n >= 2 => {
            let scan = eta_scan(&process, &template.with_geometry(r, alpha), &settings, &section.eta_scan)?;
            for row in &scan {
                eprintln!("eta scan eta = {}: tv = {:.3e} ({:.3}s)", row.eta, row.tv, row.oracle_seconds);
            }
            Some(EtaScanJson {
                r,
                alpha,
                monotone: is_monotone_refinement(&scan, ETA_SCAN_SLACK),
                rows: scan
                    .iter()
                    .map(|s| EtaRow {
                        eta: s.eta,
                        tv: s.tv,
                        sup: s.sup,
                    })
                    .collect(),
            })
        }
        _ => None,
    };

    let all_pass = cases.iter().all(|c| c.pass);
    let monotone = eta_scan_json.as_ref().map_or(true, |s| s.monotone);
    let doc = OracleJson {
        schema_version: SCHEMA_VERSION,
        status: "ok",
        settings: Some(settings),
        tv_tolerance: Some(ORACLE_TV_TOL),
        cases,
        eta_scan: eta_scan_json,
    };
    prepare_dir(inv.out_dir)?;
    let path = write_text(inv.out_dir, "oracle_compare.json", &to_json(&doc))?;
    if inv.json {
        print!("{}", to_json(&doc));
    } else {
        println!("oracle agreement (tv < {ORACLE_TV_TOL}): {}", if all_pass { "yes" } else { "NO" });
        println!("eta scan monotone: {}", if monotone { "yes" } else { "NO" });
    }
    report_written(&[path]);
    Ok(())
}

#[derive(Serialize)]
struct ClassicalJson {
    schema_version: u32,
    p: [f64; 2],
    m: f64,
    delta1: f64,
    delta2: f64,
    solutions: Vec<ClassicalSolution>,
}

pub fn classical2d(inv: &Invocation) -> Result<(), Failure> {
    let config = inv.config;
    let section = config.classical2d.clone().unwrap_or_default();
    let p = section.p.unwrap_or([config.process.momentum, 0.0]);
    let m = section.m.unwrap_or(config.process.m);
    let delta1 = section.delta1.unwrap_or(config.detectors.delta1);
    let delta2 = section.delta2.unwrap_or(config.detectors.delta2);
    if !(m > 0.0 && delta1 > 0.0 && delta2 > 0.0) {
        return Err(Failure::usage("classical2d needs m > 0 and positive energies"));
    }
    let solutions = solve_classical_2d(p, m, delta1, delta2);
    if inv.json {
        print!(
            "{}",
            to_json(&ClassicalJson {
                schema_version: SCHEMA_VERSION,
                p,
                m,
                delta1,
                delta2,
                solutions,
            })
        );
        return Ok(());
    }
    if solutions.is_empty() {
        println!("no solution: the momentum circles do not intersect");
        return Ok(());
    }
    println!(
        "{:<8} {:>24} {:>24} {:>24} {:>24}",
        "labels", "k1_x", "k1_y", "k2_x", "k2_y"
    );
    for s in &solutions {
        println!(
            "{:<8} {:>24.16e} {:>24.16e} {:>24.16e} {:>24.16e}",
            if s.swapped { "swapped" } else { "direct" },
            s.k1[0],
            s.k1[1],
            s.k2[0],
            s.k2[1]
        );
    }
    Ok(())
}
