//! Run configuration: defaults, overridden by a flat key=value config file,
//! overridden by command-line flags.

use std::path::{Path, PathBuf};

use crate::output::Format;
use crate::CliError;

/// Covariance families reachable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Sinc,
    Cosine,
    TrigPoly,
}

impl ModelKind {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "sinc" => Ok(ModelKind::Sinc),
            "cosine" => Ok(ModelKind::Cosine),
            "trig-poly" | "trig_poly" => Ok(ModelKind::TrigPoly),
            other => Err(CliError::Usage(format!(
                "unknown model `{other}` (expected sinc, cosine, or trig-poly)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Sinc => "sinc",
            ModelKind::Cosine => "cosine",
            ModelKind::TrigPoly => "trig-poly",
        }
    }
}

/// Optional values gathered from the command line; `None` falls through to
/// the config file and then to the defaults.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct CommonArgs {
    /// Flat key=value configuration file; flags take precedence over it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// RNG seed; required for commands that simulate paths.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for parallel sections; defaults to all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Number of Monte Carlo paths.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Covariance model: sinc, cosine, or trig-poly.
    #[arg(long)]
    pub model: Option<String>,
    /// Trigonometric polynomial degree.
    #[arg(long)]
    pub n: Option<usize>,
    /// Observation window length for stationary models.
    #[arg(long)]
    pub window: Option<f64>,
    /// Sampling grid step for stationary models.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Monte Carlo sample count for Gaussian absolute-moment integrals.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Quadrature truncation radius for the limiting-constant integrals.
    #[arg(long)]
    pub truncation: Option<f64>,
    /// Highest cumulant order.
    #[arg(long)]
    pub p_max: Option<usize>,
    /// Comma-separated evaluation nodes for density commands.
    #[arg(long)]
    pub nodes: Option<String>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub workers: Option<usize>,
    pub paths: usize,
    pub model: ModelKind,
    pub n: usize,
    pub window: f64,
    pub grid_step: f64,
    /// `None` defers to the per-command default.
    pub mc_samples: Option<usize>,
    pub truncation: f64,
    pub p_max: usize,
    pub nodes: Option<Vec<f64>>,
}

/// Per-command defaults that the file and flags override.
#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    pub model: ModelKind,
    pub paths: usize,
    pub n: usize,
    pub p_max: usize,
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value `{value}` for `{key}`")))
}

fn parse_nodes(value: &str) -> Result<Vec<f64>, CliError> {
    let nodes: Result<Vec<f64>, _> = value
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect();
    match nodes {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(CliError::Usage(format!(
            "invalid node list `{value}` (expected comma-separated finite numbers)"
        ))),
    }
}

impl Settings {
    pub fn resolve(args: &CommonArgs, defaults: Defaults) -> Result<Self, CliError> {
        let mut s = Settings {
            seed: None,
            out: args.out.clone(),
            format: Format::Json,
            workers: None,
            paths: defaults.paths,
            model: defaults.model,
            n: defaults.n,
            window: 50.0,
            grid_step: 0.05,
            mc_samples: None,
            truncation: 40.0,
            p_max: defaults.p_max,
            nodes: None,
        };
        if let Some(path) = &args.config {
            s.apply_file(path)?;
        }
        s.apply_flags(args)?;
        s.validate()?;
        Ok(s)
    }

    fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "config line {}: expected key=value, got `{line}`",
                    lineno + 1
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "seed" => self.seed = Some(parse_num(key, value)?),
                "format" => {
                    self.format = Format::parse(value)
                        .ok_or_else(|| CliError::Usage(format!("invalid format `{value}`")))?
                }
                "workers" => self.workers = Some(parse_num(key, value)?),
                "paths" => self.paths = parse_num(key, value)?,
                "model" => self.model = ModelKind::parse(value)?,
                "n" => self.n = parse_num(key, value)?,
                "window" => self.window = parse_num(key, value)?,
                "grid_step" => self.grid_step = parse_num(key, value)?,
                "mc_samples" => self.mc_samples = Some(parse_num(key, value)?),
                "truncation" => self.truncation = parse_num(key, value)?,
                "p_max" => self.p_max = parse_num(key, value)?,
                "nodes" => self.nodes = Some(parse_nodes(value)?),
                "out" => self.out = Some(PathBuf::from(value)),
                other => {
                    return Err(CliError::Usage(format!(
                        "config line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(())
    }

    fn apply_flags(&mut self, args: &CommonArgs) -> Result<(), CliError> {
        if let Some(v) = args.seed {
            self.seed = Some(v);
        }
        if let Some(v) = &args.out {
            self.out = Some(v.clone());
        }
        if let Some(v) = args.format {
            self.format = v;
        }
        if let Some(v) = args.workers {
            self.workers = Some(v);
        }
        if let Some(v) = args.paths {
            self.paths = v;
        }
        if let Some(v) = &args.model {
            self.model = ModelKind::parse(v)?;
        }
        if let Some(v) = args.n {
            self.n = v;
        }
        if let Some(v) = args.window {
            self.window = v;
        }
        if let Some(v) = args.grid_step {
            self.grid_step = v;
        }
        if let Some(v) = args.mc_samples {
            self.mc_samples = Some(v);
        }
        if let Some(v) = args.truncation {
            self.truncation = v;
        }
        if let Some(v) = args.p_max {
            self.p_max = v;
        }
        if let Some(v) = &args.nodes {
            self.nodes = Some(parse_nodes(v)?);
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.n == 0 {
            return Err(CliError::Usage("n must be positive".into()));
        }
        if !(self.window > 0.0) {
            return Err(CliError::Usage("window must be positive".into()));
        }
        if !(self.grid_step > 0.0) {
            return Err(CliError::Usage("grid-step must be positive".into()));
        }
        if self.mc_samples == Some(0) {
            return Err(CliError::Usage("mc-samples must be positive".into()));
        }
        if !(self.truncation > 0.0) {
            return Err(CliError::Usage("truncation must be positive".into()));
        }
        Ok(())
    }

    /// The seed, required: simulation output is meaningless without a
    /// reproducible seed.
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::Usage("this command simulates paths; --seed is required".into())
        })
    }
}
