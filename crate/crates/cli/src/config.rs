use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use extremal_core::{Domain, ProblemSpec};

use crate::args::ProblemArgs;
use crate::CliError;

pub const KEYS: [&str; 18] = [
    "preset",
    "domain",
    "width",
    "height",
    "nx",
    "ny",
    "n",
    "radius",
    "nr",
    "p",
    "descent_tol",
    "max_iters",
    "max_halvings",
    "linear_tol",
    "eigen_tol",
    "residual_tol",
    "seed",
    "test_functions",
];

/// Named experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Unit ball in ℝ⁴, radial mesh of 256 elements.
    Ball4,
    /// Unit square, 32 × 32.
    Square,
    /// 1 × 4 rectangle, 16 × 64.
    Rect1x4,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "ball4" => Ok(Preset::Ball4),
            "square" => Ok(Preset::Square),
            "rect1x4" => Ok(Preset::Rect1x4),
            other => Err(CliError::Usage(format!(
                "unknown preset {other:?}; expected ball4, square or rect1x4"
            ))),
        }
    }

    pub fn domain(self) -> Domain {
        match self {
            Preset::Ball4 => Domain::unit_ball(4, 256),
            Preset::Square => Domain::unit_square(32),
            Preset::Rect1x4 => rect_default(),
        }
    }

    pub fn exponents(self) -> Vec<f64> {
        match self {
            Preset::Ball4 => vec![2.5, 3.0, 3.5, 3.8],
            Preset::Square => vec![2.5, 3.0, 4.0, 6.0, 8.0],
            Preset::Rect1x4 => vec![2.0, 3.0, 4.0, 6.0, 8.0],
        }
    }

    fn settings(self) -> Settings {
        let mut s = Settings::default();
        if self == Preset::Ball4 {
            // p = 2.5 needs several hundred steps past the default cap
            s.max_iters = 2000;
        }
        s
    }
}

fn rect_default() -> Domain {
    Domain::Rectangle {
        width: 1.0,
        height: 4.0,
        nx: 16,
        ny: 64,
    }
}

fn default_domain(kind: &str) -> Result<Domain, CliError> {
    match kind {
        "square" => Ok(Domain::unit_square(32)),
        "rect" | "rectangle" => Ok(rect_default()),
        "ball" => Ok(Domain::unit_ball(4, 256)),
        other => Err(CliError::Usage(format!(
            "unknown domain {other:?}; expected square, rect or ball"
        ))),
    }
}

/// Solver settings shared by every exponent of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub descent_tol: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
    pub linear_tol: f64,
    pub eigen_tol: f64,
    pub residual_tol: f64,
    pub seed: u64,
    pub test_functions: usize,
}

impl Default for Settings {
    fn default() -> Self {
        let d = ProblemSpec::new(Domain::unit_square(1), 3.0);
        Self {
            descent_tol: d.descent_tol,
            max_iters: d.max_iters,
            max_halvings: d.max_halvings,
            linear_tol: d.linear_tol,
            eigen_tol: d.eigen_tol,
            residual_tol: d.residual_tol,
            seed: d.seed,
            test_functions: d.test_functions,
        }
    }
}

impl Settings {
    fn apply(&mut self, entries: &BTreeMap<String, String>) -> Result<(), CliError> {
        if let Some(v) = entries.get("descent_tol") {
            self.descent_tol = parse_value("descent_tol", v)?;
        }
        if let Some(v) = entries.get("max_iters") {
            self.max_iters = parse_value("max_iters", v)?;
        }
        if let Some(v) = entries.get("max_halvings") {
            self.max_halvings = parse_value("max_halvings", v)?;
        }
        if let Some(v) = entries.get("linear_tol") {
            self.linear_tol = parse_value("linear_tol", v)?;
        }
        if let Some(v) = entries.get("eigen_tol") {
            self.eigen_tol = parse_value("eigen_tol", v)?;
        }
        if let Some(v) = entries.get("residual_tol") {
            self.residual_tol = parse_value("residual_tol", v)?;
        }
        if let Some(v) = entries.get("seed") {
            self.seed = parse_value("seed", v)?;
        }
        if let Some(v) = entries.get("test_functions") {
            self.test_functions = parse_value("test_functions", v)?;
        }
        Ok(())
    }

    /// Settings alone, for commands that take the domain from a file.
    pub fn resolve(entries: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut s = match entries.get("preset") {
            Some(name) => Preset::parse(name)?.settings(),
            None => Settings::default(),
        };
        s.apply(entries)?;
        Ok(s)
    }

    pub fn spec(&self, domain: Domain, p: f64) -> ProblemSpec {
        let mut spec = ProblemSpec::new(domain, p);
        spec.descent_tol = self.descent_tol;
        spec.max_iters = self.max_iters;
        spec.max_halvings = self.max_halvings;
        spec.linear_tol = self.linear_tol;
        spec.eigen_tol = self.eigen_tol;
        spec.residual_tol = self.residual_tol;
        spec.seed = self.seed;
        spec.test_functions = self.test_functions;
        spec
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value {v:?} for {key}")))
}

/// Comma-separated exponents.
pub fn parse_exponents(v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',')
        .map(|s| parse_value::<f64>("p", s))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|ps| {
            if ps.is_empty() {
                Err(CliError::Usage("empty exponent list".into()))
            } else {
                Ok(ps)
            }
        })
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "config line {}: unknown key {key:?}",
                i + 1
            )));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

/// Config file entries with flag values laid over them.
pub fn merged_entries(args: &ProblemArgs) -> Result<BTreeMap<String, String>, CliError> {
    let mut entries = match &args.config {
        Some(path) => read_config(path)?,
        None => BTreeMap::new(),
    };
    entries.extend(args.entries());
    Ok(entries)
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config_text(&text)
}

/// Fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: Domain,
    pub exponents: Vec<f64>,
    pub settings: Settings,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Start from the preset (if any), then apply the domain keys, the
    /// exponent list and the solver settings. Every exponent is checked
    /// before anything is solved.
    pub fn resolve(entries: &BTreeMap<String, String>, out_dir: &Path) -> Result<Self, CliError> {
        let preset = entries
            .get("preset")
            .map(|n| Preset::parse(n))
            .transpose()?;
        let mut domain = match (entries.get("domain"), preset) {
            (Some(kind), _) => default_domain(kind)?,
            (None, Some(p)) => p.domain(),
            (None, None) => {
                return Err(CliError::Usage(
                    "no domain given; use --preset or --domain".into(),
                ))
            }
        };
        match &mut domain {
            Domain::Rectangle {
                width,
                height,
                nx,
                ny,
            } => {
                for key in ["n", "radius", "nr"] {
                    if entries.contains_key(key) {
                        return Err(CliError::Usage(format!(
                            "{key} does not apply to rectangles"
                        )));
                    }
                }
                if let Some(v) = entries.get("width") {
                    *width = parse_value("width", v)?;
                }
                if let Some(v) = entries.get("height") {
                    *height = parse_value("height", v)?;
                }
                if let Some(v) = entries.get("nx") {
                    *nx = parse_value("nx", v)?;
                }
                if let Some(v) = entries.get("ny") {
                    *ny = parse_value("ny", v)?;
                }
            }
            Domain::Ball { n, radius, nr } => {
                for key in ["width", "height", "nx", "ny"] {
                    if entries.contains_key(key) {
                        return Err(CliError::Usage(format!("{key} does not apply to balls")));
                    }
                }
                if let Some(v) = entries.get("n") {
                    *n = parse_value("n", v)?;
                }
                if let Some(v) = entries.get("radius") {
                    *radius = parse_value("radius", v)?;
                }
                if let Some(v) = entries.get("nr") {
                    *nr = parse_value("nr", v)?;
                }
            }
        }
        check_domain(&domain)?;
        let exponents = match (entries.get("p"), preset) {
            (Some(v), _) => parse_exponents(v)?,
            (None, Some(p)) => p.exponents(),
            (None, None) => return Err(CliError::Usage("no exponent given; use --p".into())),
        };
        let settings = Settings::resolve(entries)?;
        for &p in &exponents {
            settings
                .spec(domain, p)
                .validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
        Ok(Self {
            domain,
            exponents,
            settings,
            out_dir: out_dir.to_path_buf(),
        })
    }

    pub fn spec(&self, p: f64) -> ProblemSpec {
        self.settings.spec(self.domain, p)
    }
}

fn check_domain(domain: &Domain) -> Result<(), CliError> {
    let bad = |m: &str| Err(CliError::Usage(m.into()));
    match *domain {
        Domain::Rectangle {
            width,
            height,
            nx,
            ny,
        } => {
            if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
                return bad("rectangle sides must be positive");
            }
            if nx == 0 || ny == 0 {
                return bad("nx and ny must be at least 1");
            }
        }
        Domain::Ball { n, radius, nr } => {
            if n < 1 {
                return bad("ball dimension must be at least 1");
            }
            if !(radius > 0.0 && radius.is_finite()) {
                return bad("radius must be positive");
            }
            if nr == 0 {
                return bad("nr must be at least 1");
            }
        }
    }
    Ok(())
}
