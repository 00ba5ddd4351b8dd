//! Command-line flags and `--config` overrides.
//!
//! Every command's flags form a serializable struct. A `--config` file is a
//! JSON object whose keys (flag names, kebab-case) replace the values given
//! on the command line. The merged struct is echoed into reports.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use kscale_core::datasets::Protocol;
use kscale_core::scale_baselines::{DEFAULT_MAXMIN_C, DEFAULT_ZELNIK_R};
use kscale_core::{class_scale, linear_grid, log_grid, Matrix};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::io::LabelColumn;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "KSCALE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "kscale", version, about = "Diffusion-maps kernel scale selection")]
pub struct Cli {
    /// JSON object of flag values that override the command line.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Select a kernel scale.
    Scale(ScaleArgs),
    /// Write diffusion-maps coordinates.
    Embed(EmbedArgs),
    /// Estimate intrinsic dimension.
    Dim(DimArgs),
    /// Classification accuracy and criteria over an eps grid.
    Sweep(SweepArgs),
}

impl Serialize for LabelColumn {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            LabelColumn::None => s.serialize_str("none"),
            LabelColumn::First => s.serialize_str("first"),
            LabelColumn::Last => s.serialize_str("last"),
            LabelColumn::Index(i) => s.serialize_str(&i.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for LabelColumn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        let s = match &v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => return Err(serde::de::Error::custom("label column must be a string or index")),
        };
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct InputArgs {
    /// Data file (CSV, one sample per row).
    pub input: PathBuf,

    /// Skip the first non-comment row.
    #[arg(long)]
    #[serde(default)]
    pub header: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GridArgs {
    /// Smallest eps of an explicit grid (needs --eps-max).
    #[arg(long)]
    pub eps_min: Option<f64>,

    #[arg(long)]
    pub eps_max: Option<f64>,

    /// Grid size.
    #[arg(long, default_value_t = 40)]
    pub eps_count: usize,

    #[arg(long, default_value = "log", value_parser = ["log", "linear"])]
    pub spacing: String,
}

impl GridArgs {
    /// The explicit grid, if one was requested.
    pub fn explicit(&self) -> CliResult<Option<Vec<f64>>> {
        match (self.eps_min, self.eps_max) {
            (None, None) => Ok(None),
            (Some(lo), Some(hi)) => {
                let g = match self.spacing.as_str() {
                    "log" => log_grid(lo, hi, self.eps_count),
                    "linear" => linear_grid(lo, hi, self.eps_count),
                    other => return Err(CliError::Usage(format!("unknown grid spacing {other:?}"))),
                };
                let g = g.map_err(|e| CliError::Usage(e.to_string()))?;
                if g.iter().any(|&e| e.is_nan() || e <= 0.0) {
                    return Err(CliError::Usage("grid values must be positive".into()));
                }
                Ok(Some(g))
            }
            _ => Err(CliError::Usage("--eps-min and --eps-max go together".into())),
        }
    }

    /// Explicit grid, or the median-distance grid used by the class criteria.
    pub fn resolve(&self, x: &Matrix) -> CliResult<Vec<f64>> {
        match self.explicit()? {
            Some(g) => Ok(g),
            None => Ok(class_scale::default_grid(x, self.eps_count)?),
        }
    }
}

pub const GEN_KINDS: [&str; 4] = ["swiss", "swiss-noisy", "mixture", "spiral"];

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenArgs {
    #[arg(value_parser = GEN_KINDS)]
    pub kind: String,

    /// Output CSV; parameters go to `<out>.params.json`.
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Swiss roll sample count.
    #[arg(long, default_value_t = kscale_core::datasets::SWISS_ROLL_N)]
    pub n: usize,

    /// Projected dimension of the noisy roll.
    #[arg(long, default_value_t = 10)]
    pub d1: usize,

    /// Pure-noise dimensions of the noisy roll.
    #[arg(long, default_value_t = 10)]
    pub d2: usize,

    #[arg(long, default_value_t = 1.0)]
    pub sigma_t: f64,

    #[arg(long, default_value_t = 2.0)]
    pub sigma_n: f64,

    /// Spread of mixture class centres.
    #[arg(long, default_value_t = 3.0)]
    pub sigma_m: f64,

    /// Within-class spread of the mixture.
    #[arg(long, default_value_t = 0.5)]
    pub sigma_v: f64,

    #[arg(long, default_value_t = 100)]
    pub n_per_class: usize,

    #[arg(long, default_value_t = 6)]
    pub dim: usize,

    #[arg(long, default_value_t = 2)]
    pub classes: usize,

    /// Spiral class count.
    #[arg(long, default_value_t = 4)]
    pub nc: usize,

    /// Spiral points per class.
    #[arg(long, default_value_t = 100)]
    pub np: usize,

    #[arg(long, default_value_t = 0.02)]
    pub gap: f64,

    /// Spiral noise.
    #[arg(long, default_value_t = 0.4)]
    pub sigma: f64,
}

pub const METHODS: [&str; 9] =
    ["std", "std-inverse", "maxmin", "singer", "zelnik", "manifold", "rho_psi", "ge", "rho_p"];

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ScaleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,

    /// Label column: none, first, last or a zero-based index.
    #[arg(long, default_value = "none")]
    pub labels: LabelColumn,

    #[arg(long, value_parser = METHODS)]
    pub method: String,

    /// MaxMin multiplier.
    #[arg(long, default_value_t = DEFAULT_MAXMIN_C)]
    pub c: f64,

    /// Neighbour rank for local scales.
    #[arg(long, default_value_t = DEFAULT_ZELNIK_R)]
    pub r: usize,

    /// Neighbourhood size of the dimension estimator.
    #[arg(long, default_value_t = kscale_core::intrinsic_dim::DEFAULT_ELL)]
    pub ell: usize,

    #[arg(long)]
    pub max_dim: Option<usize>,

    /// Points per axis of the manifold pair search.
    #[arg(long, default_value_t = 32)]
    pub grid_points: usize,

    /// Target dimension instead of estimating it.
    #[arg(long)]
    pub d_hat: Option<usize>,

    /// Keep the original feature order in the greedy pass.
    #[arg(long)]
    #[serde(default)]
    pub no_permute: bool,

    /// Embedding dimension for rho_psi (default: number of classes).
    #[arg(long)]
    pub d: Option<usize>,

    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// JSON report path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// CSV of the curve behind the choice.
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EmbedArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,

    /// Label column, copied to the output when present.
    #[arg(long, default_value = "none")]
    pub labels: LabelColumn,

    #[arg(long)]
    pub eps: f64,

    /// Per-feature scales, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub scaling: Option<Vec<f64>>,

    #[arg(long, default_value_t = 2)]
    pub d: usize,

    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct DimArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,

    #[arg(long, default_value = "none")]
    pub labels: LabelColumn,

    #[arg(long, default_value_t = kscale_core::intrinsic_dim::DEFAULT_ELL)]
    pub ell: usize,

    #[arg(long)]
    pub max_dim: Option<usize>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,

    #[arg(long, default_value = "last")]
    pub labels: LabelColumn,

    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,

    /// Neighbours in the k-NN vote.
    #[arg(long, default_value_t = 1)]
    pub k: usize,

    /// `loo` or `kfold:N`.
    #[arg(long, default_value = "loo")]
    pub protocol: String,

    /// Embedding dimension (default: number of classes).
    #[arg(long)]
    pub d: Option<usize>,

    /// Classify in the embedding or in the input space.
    #[arg(long, default_value = "embedding", value_parser = ["embedding", "ambient"])]
    pub space: String,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Optional JSON report with the per-criterion argmax.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

impl SweepArgs {
    pub fn protocol(&self) -> CliResult<Protocol> {
        let p = self.protocol.as_str();
        if p == "loo" {
            return Ok(Protocol::LeaveOneOut);
        }
        p.strip_prefix("kfold:")
            .and_then(|k| k.parse().ok())
            .map(Protocol::KFold)
            .ok_or_else(|| CliError::Usage(format!("protocol must be loo or kfold:N, got {p:?}")))
    }
}

/// Applies the keys of a JSON config file on top of `args`.
pub fn apply_config<T: Serialize + DeserializeOwned>(args: T, config: Option<&Path>) -> CliResult<T> {
    let Some(path) = config else { return Ok(args) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let patch: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let Value::Object(patch) = patch else {
        return Err(CliError::Usage(format!("{}: config must be a JSON object", path.display())));
    };
    let mut merged = serde_json::to_value(args).expect("flag structs serialize");
    let obj = merged.as_object_mut().expect("flag structs are objects");
    for (k, v) in patch {
        let key = k.replace('_', "-");
        if !obj.contains_key(&key) {
            return Err(CliError::Usage(format!("{}: unknown option {k:?}", path.display())));
        }
        obj.insert(key, v);
    }
    serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Thread count from the environment, if set.
pub fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
    }
}
