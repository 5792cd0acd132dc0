//! Experiment settings from a TOML file merged with command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;
use stickygas_core::{IncrementModel, ModelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Exact,
    Dynamics,
    Hull,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Flags shared by every subcommand. Each experiment reads the ones it needs.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// Experiment file (TOML); flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// poisson | exponential | deterministic | uniform | uniform-interval:A | pareto:ALPHA[:FLOOR]
    #[arg(long)]
    pub model: Option<String>,
    /// Number of particles.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated list of particle numbers.
    #[arg(long, value_name = "LIST")]
    pub n_list: Option<String>,
    /// Monte Carlo replicates.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "STICKYGAS_THREADS")]
    pub threads: Option<usize>,
    /// Output directory; without it the table goes to stdout.
    #[arg(long, env = "STICKYGAS_OUT_DIR")]
    pub out: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum)]
    pub engine: Option<Engine>,
    /// Times as START:STEP:END or a comma-separated list.
    #[arg(long)]
    pub grid: Option<String>,
    /// Time pairs as S:T,S:T,...
    #[arg(long)]
    pub pairs: Option<String>,
    /// A single time.
    #[arg(long)]
    pub t: Option<f64>,
    /// Boundary index `j` (between particles j and j+1).
    #[arg(long)]
    pub j: Option<usize>,
    /// Comma-separated walk lengths.
    #[arg(long, value_name = "LIST")]
    pub k_list: Option<String>,
    /// Walk horizon.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Comma-separated window radii.
    #[arg(long, value_name = "LIST")]
    pub radii: Option<String>,
    /// Reference value of a(t) for the CLT check.
    #[arg(long)]
    pub a_ref: Option<f64>,
}

/// The TOML experiment file. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<String>,
    pub model: Option<String>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub engine: Option<Engine>,
    pub grid: Option<GridValue>,
    pub pairs: Option<Vec<[f64; 2]>>,
    pub t: Option<f64>,
    pub j: Option<usize>,
    pub k_list: Option<Vec<usize>>,
    pub k_max: Option<usize>,
    pub radii: Option<Vec<usize>>,
    pub a_ref: Option<f64>,
    pub force: Option<bool>,
}

/// A grid given either as a range string or as a list of numbers.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Spec(String),
    List(Vec<f64>),
}

/// Fully merged settings; missing values are reported when an experiment
/// asks for them.
#[derive(Debug, Default)]
pub struct Settings {
    pub model: Option<ModelSpec>,
    /// The model as written by the user, echoed into summaries.
    pub model_name: Option<String>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub replicates: Option<usize>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub force: bool,
    pub format: Format,
    pub engine: Option<Engine>,
    pub grid: Option<Vec<f64>>,
    pub pairs: Option<Vec<(f64, f64)>>,
    pub t: Option<f64>,
    pub j: Option<usize>,
    pub k_list: Option<Vec<usize>>,
    pub k_max: Option<usize>,
    pub radii: Option<Vec<usize>>,
    pub a_ref: Option<f64>,
}

impl Settings {
    pub fn resolve(experiment: &str, flags: &Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => read_config(path)?,
            None => FileConfig::default(),
        };
        if let Some(name) = &file.experiment {
            if name != experiment {
                bail!("config file is for experiment `{name}`, not `{experiment}`");
            }
        }
        let model_name = flags.model.clone().or(file.model);
        let model = match model_name.as_deref() {
            Some(m) => Some(parse_model(m)?),
            None => None,
        };
        let grid = match (&flags.grid, file.grid) {
            (Some(g), _) => Some(parse_grid(g)?),
            (None, Some(GridValue::Spec(g))) => Some(parse_grid(&g)?),
            (None, Some(GridValue::List(g))) => Some(check_grid(g)?),
            (None, None) => None,
        };
        let pairs = match (&flags.pairs, file.pairs) {
            (Some(p), _) => Some(parse_pairs(p)?),
            (None, Some(p)) => Some(p.into_iter().map(|[s, t]| (s, t)).collect()),
            (None, None) => None,
        };
        let list = |flag: &Option<String>, file: Option<Vec<usize>>, what: &str| -> Result<Option<Vec<usize>>> {
            match flag {
                Some(s) => parse_usize_list(s).with_context(|| format!("invalid --{what}")).map(Some),
                None => Ok(file),
            }
        };
        let settings = Settings {
            model,
            model_name,
            n: flags.n.or(file.n),
            n_list: list(&flags.n_list, file.n_list, "n-list")?,
            replicates: flags.reps.or(file.replicates),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            threads: flags.threads.or(file.threads),
            out: flags.out.clone().or(file.out),
            force: flags.force || file.force.unwrap_or(false),
            format: flags.format.or(file.format).unwrap_or_default(),
            engine: flags.engine.or(file.engine),
            grid,
            pairs,
            t: flags.t.or(file.t),
            j: flags.j.or(file.j),
            k_list: list(&flags.k_list, file.k_list, "k-list")?,
            k_max: flags.k_max.or(file.k_max),
            radii: list(&flags.radii, file.radii, "radii")?,
            a_ref: flags.a_ref.or(file.a_ref),
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<()> {
        if self.n.is_some_and(|n| n < 2) {
            bail!("--n must be at least 2");
        }
        if self.threads == Some(0) {
            bail!("--threads must be at least 1");
        }
        if self.replicates == Some(0) {
            bail!("--reps must be at least 1");
        }
        if let Some(t) = self.t {
            if !(t >= 0.0 && t.is_finite()) {
                bail!("--t must be finite and non-negative");
            }
        }
        Ok(())
    }

    /// The chosen model, Poisson when none is given.
    pub fn model(&self) -> ModelSpec {
        self.model.unwrap_or_else(ModelSpec::poisson)
    }

    pub fn model_label(&self) -> &str {
        self.model_name.as_deref().unwrap_or("poisson")
    }

    pub fn n(&self) -> Result<usize> {
        self.n.ok_or_else(|| anyhow!("missing --n"))
    }

    pub fn replicates(&self) -> Result<usize> {
        self.replicates.ok_or_else(|| anyhow!("missing --reps"))
    }

    pub fn t(&self) -> Result<f64> {
        self.t.ok_or_else(|| anyhow!("missing --t"))
    }

    pub fn j(&self) -> Result<usize> {
        self.j.ok_or_else(|| anyhow!("missing --j"))
    }

    pub fn grid(&self) -> Result<&[f64]> {
        self.grid.as_deref().ok_or_else(|| anyhow!("missing --grid"))
    }
}

fn read_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

pub fn parse_model(s: &str) -> Result<ModelSpec> {
    let mut parts = s.split(':');
    let name = parts.next().unwrap_or_default();
    let args: Vec<f64> = parts
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("invalid model parameter `{p}`")))
        .collect::<Result<_>>()?;
    let arity = |lo: usize, hi: usize| -> Result<()> {
        if (lo..=hi).contains(&args.len()) {
            Ok(())
        } else {
            Err(anyhow!("model `{name}` takes {lo} to {hi} parameters, got {}", args.len()))
        }
    };
    let model = match name {
        "poisson" | "exponential" => {
            arity(0, 0)?;
            ModelSpec::Id(IncrementModel::exponential())
        }
        "deterministic" => {
            arity(0, 0)?;
            ModelSpec::Id(IncrementModel::deterministic())
        }
        "uniform" => {
            arity(0, 0)?;
            ModelSpec::Uniform
        }
        "uniform-interval" => {
            arity(1, 1)?;
            ModelSpec::Id(IncrementModel::uniform_interval(args[0])?)
        }
        "pareto" => {
            arity(1, 2)?;
            ModelSpec::Id(IncrementModel::pareto_shifted(args[0], args.get(1).copied().unwrap_or(0.0))?)
        }
        other => bail!("unknown model `{other}`"),
    };
    Ok(model)
}

fn check_grid(grid: Vec<f64>) -> Result<Vec<f64>> {
    if grid.is_empty() {
        bail!("grid is empty");
    }
    if let Some(t) = grid.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        bail!("grid times must be finite and non-negative, got {t}");
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        bail!("grid must be strictly ascending");
    }
    Ok(grid)
}

/// `START:STEP:END` (inclusive, END snapped when within a millionth of a step)
/// or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let num = |p: &str| p.trim().parse::<f64>().with_context(|| format!("invalid number `{p}` in grid"));
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, end] => {
            let (start, step, end) = (num(start)?, num(step)?, num(end)?);
            if !(step > 0.0 && end >= start) {
                bail!("grid range needs step > 0 and end >= start");
            }
            let count = ((end - start) / step + 1e-6).floor() as usize;
            if count > 10_000_000 {
                bail!("grid has too many points");
            }
            (0..=count).map(|i| start + step * i as f64).collect()
        }
        [_] => s.split(',').map(num).collect::<Result<_>>()?,
        _ => bail!("grid must be START:STEP:END or a comma-separated list"),
    };
    check_grid(grid)
}

pub fn parse_pairs(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|pair| {
            let (a, b) = pair.split_once(':').ok_or_else(|| anyhow!("pair `{pair}` is not S:T"))?;
            let a = a.trim().parse::<f64>().with_context(|| format!("invalid time in `{pair}`"))?;
            let b = b.trim().parse::<f64>().with_context(|| format!("invalid time in `{pair}`"))?;
            Ok((a, b))
        })
        .collect()
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("invalid integer `{p}`")))
        .collect()
}
