use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use extremal_core::{
    default_t_grid, distribution, monotonicity_report, residual_report, solve, Discretization,
    DistributionCurve, NodePoint, ResidualReport, SolveReport,
};

use crate::args::VerifyArgs;
use crate::config::{merged_entries, RunConfig, Settings};
use crate::output::{
    distributions_csv, monotonicity_csv, num, per_exponent, read_solution, report_csv,
    residuals_csv, solution_csv, write_atomic,
};
use crate::{CliError, Outcome};

fn outcome(ok: bool) -> Outcome {
    if ok {
        Outcome::Success
    } else {
        Outcome::NotConverged
    }
}

fn single_exponent(cfg: &RunConfig, command: &str) -> Result<f64, CliError> {
    match cfg.exponents[..] {
        [p] => Ok(p),
        _ => Err(CliError::Usage(format!(
            "{command} takes a single exponent; use sweep for several"
        ))),
    }
}

fn describe(report: &SolveReport) -> String {
    format!(
        "p={} status={} converged={} iterations={} Cp={} Lambda={} residual={}",
        report.spec.p,
        report.status,
        report.converged,
        report.iterations,
        num(report.cp),
        num(report.lambda),
        num(report.residuals.mean_abs_normalized)
    )
}

/// Solve one exponent; writes `solution.csv` and `report.csv`.
pub fn run_solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = single_exponent(cfg, "solve")?;
    let report = solve(&cfg.spec(p))?;
    write_atomic(&cfg.out_dir.join("solution.csv"), &solution_csv(&report))?;
    write_atomic(&cfg.out_dir.join("report.csv"), &report_csv(&report))?;
    println!("{}", describe(&report));
    Ok(outcome(report.converged))
}

/// Everything a sweep produces, in exponent order.
#[derive(Debug)]
pub struct SweepResult {
    pub reports: Vec<(f64, Result<SolveReport, CliError>)>,
    pub curves: Vec<DistributionCurve>,
    pub summary: String,
}

type Solved = Result<(SolveReport, Option<DistributionCurve>), CliError>;

/// Solve every exponent (concurrently), then compare the distribution
/// functions of the converged solutions. `summary.txt` is written last.
pub fn sweep(cfg: &RunConfig) -> Result<SweepResult, CliError> {
    let mut exponents = cfg.exponents.clone();
    exponents.sort_by(f64::total_cmp);
    if exponents.len() < 2 || exponents.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Usage(
            "sweep needs at least two distinct exponents".into(),
        ));
    }
    let grid = default_t_grid();
    let results: Vec<(f64, Solved)> = exponents
        .par_iter()
        .map(|&p| {
            let run = || -> Result<_, CliError> {
                let report = solve(&cfg.spec(p))?;
                write_atomic(
                    &per_exponent(&cfg.out_dir, "solution", p),
                    &solution_csv(&report),
                )?;
                write_atomic(
                    &per_exponent(&cfg.out_dir, "report", p),
                    &report_csv(&report),
                )?;
                let curve = if report.converged {
                    Some(distribution(&report.space, &report.normalized, &grid, p)?)
                } else {
                    None
                };
                Ok((report, curve))
            };
            (p, run())
        })
        .collect();
    let mut reports = Vec::new();
    let mut curves = Vec::new();
    for (p, r) in results {
        match r {
            Ok((report, curve)) => {
                curves.extend(curve);
                reports.push((p, Ok(report)));
            }
            Err(e) => reports.push((p, Err(e))),
        }
    }
    let mono = if curves.len() >= 2 {
        Some(monotonicity_report(&curves)?)
    } else {
        None
    };
    write_atomic(
        &cfg.out_dir.join("distributions.csv"),
        &distributions_csv(&curves),
    )?;
    write_atomic(
        &cfg.out_dir.join("monotonicity.csv"),
        &monotonicity_csv(mono.as_ref()),
    )?;

    let mut summary = String::new();
    writeln!(summary, "domain={}", cfg.domain).unwrap();
    for (p, r) in &reports {
        match r {
            Ok(report) => {
                let mu = curves.iter().find(|c| c.p == *p).and_then(|c| c.at(0.5));
                let mu = mu.map(num).unwrap_or_else(|| "none".into());
                writeln!(summary, "{} mu(0.5)={mu}", describe(report)).unwrap();
            }
            Err(e) => writeln!(summary, "p={p} status=error message={e}").unwrap(),
        }
    }
    match &mono {
        Some(m) => {
            let tested: usize = m.pairs.iter().map(|pc| pc.tested()).sum();
            writeln!(
                summary,
                "pairs={} tested={tested} violations={} floor={}",
                m.pairs.len(),
                m.violation_count(),
                num(m.floor)
            )
            .unwrap();
            writeln!(summary, "verdict={}", m.verdict).unwrap();
        }
        None => writeln!(
            summary,
            "verdict=NOT-CONSISTENT fewer than two converged exponents"
        )
        .unwrap(),
    }
    write_atomic(&cfg.out_dir.join("summary.txt"), &summary)?;
    Ok(SweepResult {
        reports,
        curves,
        summary,
    })
}

pub fn run_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let result = sweep(cfg)?;
    print!("{}", result.summary);
    let all = result
        .reports
        .iter()
        .all(|(_, r)| matches!(r, Ok(report) if report.converged));
    Ok(outcome(all))
}

/// Residual report for a solution file or a fresh solve.
pub fn verify(args: &VerifyArgs, out_dir: &Path) -> Result<(ResidualReport, Settings), CliError> {
    let entries = merged_entries(&args.problem)?;
    let settings = Settings::resolve(&entries)?;
    let (space, mut u, lambda, p) = match &args.solution {
        Some(path) => {
            let file = read_solution(path)?;
            let input = |message: String| CliError::Input {
                path: path.clone(),
                message,
            };
            let space = file.domain.discretize().map_err(|e| input(e.to_string()))?;
            check_points(&space, &file.points).map_err(input)?;
            (space, file.u, file.lambda, file.p)
        }
        None => {
            let cfg = RunConfig::resolve(&entries, out_dir)?;
            let p = single_exponent(&cfg, "verify")?;
            let report = solve(&cfg.spec(p))?;
            let space = (*report.space).clone();
            (space, report.normalized.into_inner(), report.lambda, p)
        }
    };
    if args.corrupt {
        u.iter_mut().for_each(|v| *v *= *v);
    }
    if settings.test_functions == 0 {
        return Err(CliError::Usage("test_functions must be at least 1".into()));
    }
    let report = residual_report(
        &space,
        &u,
        lambda,
        p,
        settings.seed,
        settings.test_functions,
    )?;
    write_atomic(&out_dir.join("residuals.csv"), &residuals_csv(&report))?;
    Ok((report, settings))
}

fn check_points(space: &Discretization, points: &[Vec<f64>]) -> Result<(), String> {
    if points.len() != space.num_nodes() {
        return Err(format!(
            "file has {} rows, the domain has {} nodes",
            points.len(),
            space.num_nodes()
        ));
    }
    for (i, pt) in points.iter().enumerate() {
        let expected = match space.node_point(i) {
            NodePoint::Planar { x, y } => vec![x, y],
            NodePoint::Radial { r } => vec![r],
        };
        let close = pt.len() == expected.len()
            && pt
                .iter()
                .zip(&expected)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs().max(1.0));
        if !close {
            return Err(format!("row {} does not match node {i}", i + 1));
        }
    }
    Ok(())
}

pub fn run_verify(args: &VerifyArgs, out_dir: &Path) -> Result<Outcome, CliError> {
    let (report, settings) = verify(args, out_dir)?;
    println!(
        "count={} mean_abs={} max_abs={} mean_abs_normalized={} max_abs_normalized={}",
        report.count(),
        num(report.mean_abs),
        num(report.max_abs),
        num(report.mean_abs_normalized),
        num(report.max_abs_normalized)
    );
    Ok(outcome(report.mean_abs_normalized <= settings.residual_tol))
}
