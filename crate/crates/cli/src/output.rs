//! CSV payloads. Numbers use `{:.16e}` (17 significant digits), fields are
//! separated by `,`, lines end in `\n`, and every file is written to a
//! temporary name and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use extremal_core::analysis::MonotonicityReport;
use extremal_core::{
    constants, Discretization, DistributionCurve, Domain, NodePoint, ResidualReport, SolveReport,
};

use crate::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `contents` to `path` through a sibling temporary file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

/// Sup-normalized solution with its constants in comment lines.
pub fn solution_csv(report: &SolveReport) -> String {
    let space = &report.space;
    let mut s = String::new();
    writeln!(s, "# domain={}", space.domain()).unwrap();
    writeln!(s, "# p={}", num(report.spec.p)).unwrap();
    writeln!(s, "# n={}", space.dimension()).unwrap();
    writeln!(s, "# Cp={}", num(report.cp)).unwrap();
    writeln!(s, "# Lambda={}", num(report.lambda)).unwrap();
    match **space {
        Discretization::Planar(_) => s.push_str("x,y,u\n"),
        Discretization::Radial(_) => s.push_str("r,u\n"),
    }
    for (i, u) in report.normalized.iter().enumerate() {
        match space.node_point(i) {
            NodePoint::Planar { x, y } => writeln!(s, "{},{},{}", num(x), num(y), num(*u)),
            NodePoint::Radial { r } => writeln!(s, "{},{}", num(r), num(*u)),
        }
        .unwrap();
    }
    s
}

/// Solve diagnostics, then the energy history.
pub fn report_csv(report: &SolveReport) -> String {
    let mut s = String::new();
    let r = &report.residuals;
    writeln!(s, "# domain={}", report.space.domain()).unwrap();
    writeln!(s, "# p={}", num(report.spec.p)).unwrap();
    writeln!(s, "# status={}", report.status).unwrap();
    writeln!(s, "# converged={}", report.converged).unwrap();
    writeln!(s, "# iterations={}", report.iterations).unwrap();
    writeln!(s, "# descent_norm={}", num(report.descent_norm)).unwrap();
    writeln!(s, "# peak={}", num(report.peak)).unwrap();
    writeln!(s, "# Cp={}", num(report.cp)).unwrap();
    writeln!(s, "# Lambda={}", num(report.lambda)).unwrap();
    if let Ok(c) = constants(&report.space, &report.normalized, report.spec.p) {
        if let Some(t) = c.torsional_rigidity {
            writeln!(s, "# torsional_rigidity={}", num(t)).unwrap();
        }
        if let Some(f) = c.principal_frequency {
            writeln!(s, "# principal_frequency={}", num(f)).unwrap();
        }
    }
    write_residual_summary(&mut s, r);
    s.push_str("iteration,energy,halvings\n");
    for (k, e) in report.energy_history.iter().enumerate() {
        let h = if k == 0 { 0 } else { report.halvings[k - 1] };
        writeln!(s, "{k},{},{h}", num(*e)).unwrap();
    }
    s
}

fn write_residual_summary(s: &mut String, r: &ResidualReport) {
    writeln!(s, "# residual_seed={}", r.seed).unwrap();
    writeln!(s, "# residual_count={}", r.count()).unwrap();
    writeln!(s, "# residual_mean_abs={}", num(r.mean_abs)).unwrap();
    writeln!(s, "# residual_max_abs={}", num(r.max_abs)).unwrap();
    writeln!(
        s,
        "# residual_mean_abs_normalized={}",
        num(r.mean_abs_normalized)
    )
    .unwrap();
    writeln!(
        s,
        "# residual_max_abs_normalized={}",
        num(r.max_abs_normalized)
    )
    .unwrap();
}

pub fn residuals_csv(r: &ResidualReport) -> String {
    let mut s = String::new();
    write_residual_summary(&mut s, r);
    s.push_str("seed,WT,WT_normalized\n");
    for (i, (v, w)) in r.values.iter().zip(&r.normalized).enumerate() {
        let seed = r.seed.wrapping_add(i as u64);
        writeln!(s, "{seed},{},{}", num(*v), num(*w)).unwrap();
    }
    s
}

pub fn distributions_csv(curves: &[DistributionCurve]) -> String {
    let mut s = String::from("p,t,mu\n");
    for c in curves {
        for (t, mu) in c.t_grid.iter().zip(&c.mu) {
            writeln!(s, "{},{},{}", num(c.p), num(*t), num(*mu)).unwrap();
        }
    }
    s
}

pub fn monotonicity_csv(report: Option<&MonotonicityReport>) -> String {
    let mut s = String::from("p_low,p_high,t,mu_low_minus_mu_high,ok\n");
    for pair in report.iter().flat_map(|r| &r.pairs) {
        for row in &pair.rows {
            writeln!(
                s,
                "{},{},{},{},{}",
                num(pair.p_low),
                num(pair.p_high),
                num(row.t),
                num(row.difference),
                row.ok
            )
            .unwrap();
        }
    }
    s
}

/// Contents of a solution file.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub domain: Domain,
    pub p: f64,
    pub lambda: f64,
    pub cp: f64,
    /// Coordinates of each row (`[x, y]` or `[r]`).
    pub points: Vec<Vec<f64>>,
    pub u: Vec<f64>,
}

pub fn read_solution(path: &Path) -> Result<SolutionFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_solution(&text).map_err(|message| CliError::Input {
        path: path.to_path_buf(),
        message,
    })
}

pub fn parse_solution(text: &str) -> Result<SolutionFile, String> {
    let mut domain = None;
    let (mut p, mut lambda, mut cp) = (None, None, None);
    let mut columns = None;
    let (mut points, mut u) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        if let Some(meta) = line.strip_prefix("# ") {
            let (k, v) = meta
                .split_once('=')
                .ok_or(format!("line {}: bad comment", i + 1))?;
            let real = || {
                v.parse::<f64>()
                    .map_err(|_| format!("line {}: bad {k}", i + 1))
            };
            match k {
                "domain" => domain = Some(v.parse::<Domain>().map_err(|e| e.to_string())?),
                "p" => p = Some(real()?),
                "Lambda" => lambda = Some(real()?),
                "Cp" => cp = Some(real()?),
                _ => {}
            }
            continue;
        }
        if columns.is_none() {
            columns = Some(match line {
                "x,y,u" => 3,
                "r,u" => 2,
                other => return Err(format!("line {}: unexpected header {other:?}", i + 1)),
            });
            continue;
        }
        let vals = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| format!("line {}: bad number", i + 1))?;
        if Some(vals.len()) != columns {
            return Err(format!("line {}: wrong number of fields", i + 1));
        }
        u.push(vals[vals.len() - 1]);
        points.push(vals[..vals.len() - 1].to_vec());
    }
    Ok(SolutionFile {
        domain: domain.ok_or("missing domain line")?,
        p: p.ok_or("missing p line")?,
        lambda: lambda.ok_or("missing Lambda line")?,
        cp: cp.ok_or("missing Cp line")?,
        points,
        u,
    })
}

/// Per-exponent file name inside a sweep directory.
pub fn per_exponent(dir: &Path, stem: &str, p: f64) -> PathBuf {
    dir.join(format!("{stem}_p{p}.csv"))
}
