//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use extremal_cli::commands::sweep;
use extremal_cli::{Cli, Preset, RunConfig, Settings};
use extremal_core::mesh_fem::{assemble_stiffness, build_rect_mesh};
use extremal_core::mountain_pass::{
    derivative, descent_direction, energy, nehari_defect, nehari_project,
};
use extremal_core::verify::analytic_extremal;
use extremal_core::{
    compute_lambda, residual_report, solve, solve_eigen_p2, solve_torsion_p1, Domain, NodePoint,
    ProblemSpec, SolveReport, Verdict,
};

type Outcome = Result<(bool, String), String>;

const TWO_PI_SQ: f64 = 19.739208802178717;
const RECT_EIGEN: f64 = 10.486454676157444;
const EIGHT_OVER_PI: f64 = 2.5464790894703255;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn run(spec: ProblemSpec) -> Result<SolveReport, String> {
    solve(&spec).map_err(|e| e.to_string())
}

fn ball4_spec(p: f64) -> ProblemSpec {
    Settings::resolve(&[("preset".to_string(), "ball4".to_string())].into())
        .unwrap()
        .spec(Preset::Ball4.domain(), p)
}

fn torsion_disk() -> Outcome {
    let t = Instant::now();
    let r = solve_torsion_p1(&ProblemSpec::new(Domain::unit_ball(2, 64), 1.0))
        .map_err(|e| e.to_string())?;
    let elapsed = t.elapsed().as_secs_f64();
    let mut linf = 0.0f64;
    for i in 0..r.normalized.len() {
        let NodePoint::Radial { r: x } = r.space.node_point(i) else {
            unreachable!()
        };
        linf = linf.max((r.normalized[i] - (1.0 - x * x)).abs());
    }
    let cp_err = rel(r.cp, EIGHT_OVER_PI);
    Ok((
        linf <= 1e-8 && cp_err <= 1e-6 && elapsed < 1.0,
        format!(
            "Linf={linf:.2e} C1={:.10} relerr={cp_err:.2e} time={elapsed:.3}s",
            r.cp
        ),
    ))
}

fn eigen() -> Outcome {
    let t = Instant::now();
    let sq = solve_eigen_p2(&ProblemSpec::new(Domain::unit_square(64), 2.0))
        .map_err(|e| e.to_string())?;
    let rect = solve_eigen_p2(&ProblemSpec::new(
        Domain::Rectangle {
            width: 1.0,
            height: 4.0,
            nx: 16,
            ny: 64,
        },
        2.0,
    ))
    .map_err(|e| e.to_string())?;
    let ball_domain = Domain::unit_ball(4, 64);
    let ball = solve_eigen_p2(&ProblemSpec::new(ball_domain, 2.0)).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed().as_secs_f64();
    let profile = analytic_extremal(&ball_domain, 2.0)
        .and_then(|a| a.interpolate(&ball.space))
        .map_err(|e| e.to_string())?;
    let linf = profile
        .iter()
        .zip(ball.normalized.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let (e1, e2) = (rel(sq.lambda, TWO_PI_SQ), rel(rect.lambda, RECT_EIGEN));
    let ok = sq.converged && rect.converged && ball.converged;
    Ok((
        ok && e1 <= 1e-3 && e2 <= 1e-3 && linf <= 1e-3 && elapsed < 30.0,
        format!(
            "square={:.8} ({e1:.1e}) rect={:.8} ({e2:.1e}) ball4 profile Linf={linf:.1e} time={elapsed:.2}s",
            sq.lambda, rect.lambda
        ),
    ))
}

fn square_p4(coarse: &SolveReport) -> Outcome {
    let fine = run(ProblemSpec::new(Domain::unit_square(64), 4.0))?;
    let imax = (0..coarse.solution.len())
        .max_by(|&a, &b| coarse.solution[a].total_cmp(&coarse.solution[b]))
        .unwrap();
    let NodePoint::Planar { x, y } = coarse.space.node_point(imax) else {
        unreachable!()
    };
    let h = 1.0 / 32.0;
    let centred = (x - 0.5).abs() <= h && (y - 0.5).abs() <= h;
    let diff = rel(coarse.cp, fine.cp);
    Ok((
        coarse.converged
            && coarse.descent_norm <= 1e-6
            && coarse.iterations <= 500
            && diff < 1e-2
            && centred,
        format!(
            "iterations={} 2lambda={:.2e} C4(32)={:.8} C4(64)={:.8} diff={diff:.1e} peak=({x}, {y})",
            coarse.iterations, coarse.descent_norm, coarse.cp, fine.cp
        ),
    ))
}

fn weak_test(gauge_report: &SolveReport, solved: &mut Vec<SolveReport>) -> Outcome {
    let gauge = gauge_report.residuals.mean_abs_normalized;
    let mut ok = gauge_report.converged;
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for p in [1.0, 2.0, 3.0] {
        let r = run(ProblemSpec::new(Domain::unit_square(32), p))?;
        solved.push(r);
    }
    for p in [1.0, 2.0, 2.5, 3.0, 3.5] {
        solved.push(run(ball4_spec(p))?);
    }
    for r in solved.iter() {
        let m = r.residuals.mean_abs_normalized;
        worst = worst.max(m / gauge);
        ok &= r.converged && m <= 10.0 * gauge;
        if !r.converged || m > 10.0 * gauge {
            lines.push(format!("{} p={}", r.space.domain(), r.spec.p));
        }
    }
    let corrupt = |r: &SolveReport| -> Result<f64, String> {
        let u: Vec<f64> = r.normalized.iter().map(|v| v * v).collect();
        residual_report(&r.space, &u, r.lambda, r.spec.p, r.spec.seed, 20)
            .map(|rr| rr.mean_abs_normalized)
            .map_err(|e| e.to_string())
    };
    let c_square = corrupt(gauge_report)?;
    let c_ball = corrupt(&solved[3])?;
    let control = c_square.min(c_ball) / gauge;
    ok &= control >= 100.0;
    Ok((
        ok,
        format!(
            "gauge={gauge:.2e} worst/gauge={worst:.2} corrupted/gauge={control:.1e} failing=[{}]",
            lines.join("; ")
        ),
    ))
}

fn sweeps(dir: &Path) -> Result<(Outcome, Outcome, Vec<String>), String> {
    let t = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    let mut property_notes = Vec::new();
    let mut ball_mu = Vec::new();
    for (name, preset) in [
        ("ball4", Preset::Ball4),
        ("square", Preset::Square),
        ("rect1x4", Preset::Rect1x4),
    ] {
        let entries = [("preset".to_string(), name.to_string())].into();
        let cfg = RunConfig::resolve(&entries, &dir.join(name)).map_err(|e| e.to_string())?;
        let result = sweep(&cfg).map_err(|e| e.to_string())?;
        let converged = result
            .reports
            .iter()
            .all(|(_, r)| matches!(r, Ok(rep) if rep.converged));
        let mono = extremal_core::monotonicity_report(&result.curves).map_err(|e| e.to_string())?;
        let every_pair_tested = mono.pairs.iter().all(|p| p.tested() > 0);
        let pass = converged
            && result.curves.len() == preset.exponents().len()
            && mono.violation_count() == 0
            && every_pair_tested
            && mono.verdict == Verdict::Consistent;
        ok &= pass;
        notes.push(format!(
            "{name}: {} violations={}",
            mono.verdict,
            mono.violation_count()
        ));
        let monotone = result
            .curves
            .iter()
            .all(|c| c.mu.windows(2).all(|w| w[1] <= w[0]));
        property_notes.push(format!("{name} curves non-increasing={monotone}"));
        if preset == Preset::Ball4 {
            ball_mu = result
                .curves
                .iter()
                .map(|c| (c.p, c.at(0.5).unwrap()))
                .collect();
        }
    }
    let elapsed = t.elapsed().as_secs_f64();
    ok &= elapsed < 600.0;
    let five = Ok((ok, format!("{} time={elapsed:.1}s", notes.join(", "))));
    let decreasing = ball_mu.windows(2).all(|w| w[1].1 < w[0].1);
    let ratio = ball_mu.last().map(|l| l.1).unwrap_or(f64::NAN) / ball_mu[0].1;
    let six = Ok((
        decreasing && ratio < 0.25 && ball_mu.len() == 4,
        format!(
            "mu(0.5)=[{}] ratio={ratio:.3e}",
            ball_mu
                .iter()
                .map(|(p, m)| format!("{p}:{m:.4e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    ));
    Ok((five, six, property_notes))
}

fn faber_krahn() -> Outcome {
    let square = run(ProblemSpec::new(Domain::unit_square(32), 3.0))?;
    let disk = run(ProblemSpec::new(
        Domain::Ball {
            n: 2,
            radius: 1.0 / PI.sqrt(),
            nr: 256,
        },
        3.0,
    ))?;
    let margin = square.cp / disk.cp - 1.0;
    Ok((
        square.converged && disk.converged && margin >= 0.01,
        format!(
            "C3(square)={:.8} C3(disk)={:.8} margin={:.2}%",
            square.cp,
            disk.cp,
            100.0 * margin
        ),
    ))
}

fn properties(solved: &[SolveReport], curve_notes: &[String], dir: &Path) -> Outcome {
    let mut failures = Vec::new();
    let s = Domain::unit_square(8)
        .discretize()
        .map_err(|e| e.to_string())?;
    let guess = s.initial_guess();

    // Nehari projection kills scale
    for p in [2.5, 4.0, 8.0] {
        let a = nehari_project(&s, &guess, p).map_err(|e| e.to_string())?;
        for c in [0.1, 10.0, 1e3] {
            let b = nehari_project(&s, &guess.scaled(c), p).map_err(|e| e.to_string())?;
            let err = a
                .iter()
                .zip(b.iter())
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            if err > 1e-12 * a.max_abs() {
                failures.push(format!("projection scale p={p} c={c}"));
            }
        }
        if nehari_defect(&s, &a, p).map_err(|e| e.to_string())? > 1e-8 {
            failures.push(format!("nehari defect p={p}"));
        }
    }

    // strict descent on every accepted step
    for r in solved.iter().filter(|r| r.spec.p > 2.0) {
        if r.energy_changes.iter().any(|c| !(*c < 0.0)) {
            failures.push(format!("descent {} p={}", r.space.domain(), r.spec.p));
        }
    }

    // descent pairing and the −2λ + O(ε) expansion
    let p = 3.0;
    let u = nehari_project(&s, &guess, p).map_err(|e| e.to_string())?;
    let d = descent_direction(&s, &u, p, 1e-12).map_err(|e| e.to_string())?;
    let pairing = derivative(&s, &u, &d.direction, p).map_err(|e| e.to_string())?;
    if rel(-pairing, d.slope()) > 1e-8 {
        failures.push("pairing".into());
    }
    let e0 = energy(&s, &u, p).map_err(|e| e.to_string())?;
    let q = |eps: f64| -> Result<f64, String> {
        Ok(
            (energy(&s, &u.add_scaled(eps, &d.direction), p).map_err(|e| e.to_string())? - e0)
                / eps,
        )
    };
    let (r3, r4) = (q(1e-3)? + d.slope(), q(1e-4)? + d.slope());
    let fd_slope = (r3.abs() / r4.abs()).log10();
    if (fd_slope - 1.0).abs() > 0.05 {
        failures.push(format!("finite-difference slope {fd_slope}"));
    }

    // Λ from the constants formula against the rescaling route
    let mut worst_lambda = 0.0f64;
    for r in solved {
        let direct =
            compute_lambda(&r.space, &r.normalized, r.spec.p).map_err(|e| e.to_string())?;
        worst_lambda = worst_lambda.max(rel(direct, r.lambda));
    }
    if worst_lambda > 1e-6 {
        failures.push(format!("lambda identity {worst_lambda:.1e}"));
    }

    for note in curve_notes {
        if note.ends_with("false") {
            failures.push(note.clone());
        }
    }

    // stiffness annihilates constants
    for (w, h, nx, ny) in [(1.0, 1.0, 8, 8), (1.0, 4.0, 4, 16), (0.3, 2.0, 3, 7)] {
        let m = build_rect_mesh(w, h, nx, ny).map_err(|e| e.to_string())?;
        let k = assemble_stiffness(&m);
        if k.mul_vec(&vec![1.0; m.num_nodes()])
            .iter()
            .any(|v| v.abs() > 1e-12)
        {
            failures.push(format!("constants {w}x{h}"));
        }
    }

    // byte-identical reruns through the command line front end
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.join("rerun").join(run);
        let cli = Cli::try_parse_from([
            "extremal",
            "--out-dir",
            out.to_str().unwrap(),
            "solve",
            "--preset",
            "square",
            "--p",
            "4",
        ])
        .map_err(|e| e.to_string())?;
        extremal_cli::run(&cli).map_err(|e| e.to_string())?;
        let read = |f: &str| std::fs::read(out.join(f)).map_err(|e| e.to_string());
        outputs.push((read("solution.csv")?, read("report.csv")?));
    }
    if outputs[0] != outputs[1] {
        failures.push("rerun bytes differ".into());
    }

    Ok((
        failures.is_empty(),
        format!(
            "fd slope={fd_slope:.3} lambda identity worst={worst_lambda:.1e} failing=[{}]",
            failures.join("; ")
        ),
    ))
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();

    results.push((1, "torsion on the unit disk", torsion_disk()));
    results.push((2, "principal eigenpairs", eigen()));

    let gauge = run(ProblemSpec::new(Domain::unit_square(32), 4.0));
    let mut solved = Vec::new();
    match gauge {
        Ok(g) => {
            results.push((3, "mountain pass on the square, p = 4", square_p4(&g)));
            let wt = weak_test(&g, &mut solved);
            solved.push(g);
            results.push((4, "weak-form residuals against the p = 4 gauge", wt));
        }
        Err(e) => {
            results.push((3, "mountain pass on the square, p = 4", Err(e.clone())));
            results.push((4, "weak-form residuals against the p = 4 gauge", Err(e)));
        }
    }

    let mut curve_notes = Vec::new();
    match sweeps(dir.path()) {
        Ok((five, six, notes)) => {
            results.push((5, "distribution ordering on every preset", five));
            results.push((6, "concentration on the 4-ball", six));
            curve_notes = notes;
        }
        Err(e) => {
            results.push((5, "distribution ordering on every preset", Err(e.clone())));
            results.push((6, "concentration on the 4-ball", Err(e)));
        }
    }
    results.push((7, "Faber-Krahn for p = 3", faber_krahn()));
    results.push((
        8,
        "property suites",
        properties(&solved, &curve_notes, dir.path()),
    ));

    let mut failed = 0;
    for (id, name, outcome) in &results {
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (*pass, detail.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id}: {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
