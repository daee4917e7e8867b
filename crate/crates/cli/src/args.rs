use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Extremal Sobolev functions: solves, p-sweeps and weak-form checks.
#[derive(Debug, Parser)]
#[command(name = "extremal", version)]
pub struct Cli {
    /// Directory for all output files.
    #[arg(long, global = true, env = "EXTREMAL_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for one exponent and write solution.csv and report.csv.
    Solve(ProblemArgs),
    /// Solve for several exponents and compare their distribution functions.
    Sweep(ProblemArgs),
    /// Evaluate the weak-form residual of a solution file, or of a fresh solve.
    Verify(VerifyArgs),
}

/// Problem description. Every flag overrides the same key from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct ProblemArgs {
    /// key=value file with any of the options below (underscored names).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// ball4, square or rect1x4.
    #[arg(long)]
    pub preset: Option<String>,
    /// square, rect or ball.
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    /// Ball dimension.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Radial elements.
    #[arg(long)]
    pub nr: Option<usize>,
    /// Exponent, or a comma-separated list for sweeps.
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<String>,
    #[arg(long)]
    pub descent_tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub max_halvings: Option<usize>,
    #[arg(long)]
    pub linear_tol: Option<f64>,
    #[arg(long)]
    pub eigen_tol: Option<f64>,
    #[arg(long)]
    pub residual_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random test functions per residual report.
    #[arg(long)]
    pub test_functions: Option<usize>,
}

impl ProblemArgs {
    /// Flags that were given, keyed like the config file.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("preset", self.preset.clone());
        put("domain", self.domain.clone());
        put("width", self.width.map(|v| v.to_string()));
        put("height", self.height.map(|v| v.to_string()));
        put("nx", self.nx.map(|v| v.to_string()));
        put("ny", self.ny.map(|v| v.to_string()));
        put("n", self.n.map(|v| v.to_string()));
        put("radius", self.radius.map(|v| v.to_string()));
        put("nr", self.nr.map(|v| v.to_string()));
        put("p", self.p.clone());
        put("descent_tol", self.descent_tol.map(|v| v.to_string()));
        put("max_iters", self.max_iters.map(|v| v.to_string()));
        put("max_halvings", self.max_halvings.map(|v| v.to_string()));
        put("linear_tol", self.linear_tol.map(|v| v.to_string()));
        put("eigen_tol", self.eigen_tol.map(|v| v.to_string()));
        put("residual_tol", self.residual_tol.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("test_functions", self.test_functions.map(|v| v.to_string()));
        m
    }
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// solution.csv written by `solve` or `sweep`. Without it, the problem
    /// options are solved first.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    /// Replace u by u² before testing.
    #[arg(long)]
    pub corrupt: bool,
    #[command(flatten)]
    pub problem: ProblemArgs,
}
