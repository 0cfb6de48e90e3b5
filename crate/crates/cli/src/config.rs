//! Experiment configuration: a TOML file with one section per parameter
//! block, overlaid by command-line flags.
//!
//! ```toml
//! seed = 7
//! threads = 2
//!
//! [model]
//! ehm = "0,0.5,0"      # or schrodinger_cos = 1.0, or custom = "c.txt"
//! alpha = "golden"     # golden | sqrt2m1 | decimal | rule:<rule>
//! theta = "random:8"   # value | random:K | grid:K | list:a,b,..
//!
//! [cocycle]
//! op = "lyapunov"
//! energies = "spectrum:8"
//! n = 100000
//! ```
//!
//! Every key of a section is also a flag of the matching subcommand
//! (`energies` is `--E`, `t_decades` is `--T-decades`, underscores become
//! dashes elsewhere). Flags win over the file.

use clap::Args;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Extended Harper couplings `l1,l2,l3`.
    #[arg(long)]
    pub ehm: Option<String>,
    /// Schrodinger operator with `v = 2 lambda cos 2 pi theta`, `w = 1`.
    #[arg(allow_hyphen_values = true, long = "schrodinger-cos")]
    pub schrodinger_cos: Option<f64>,
    /// Fourier coefficients of `c` (lines `k re im`), with `v = 2 cos`.
    #[arg(long)]
    pub custom: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<String>,
    /// `value`, `random:K`, `grid:K` or `list:a,b,..`.
    #[arg(allow_hyphen_values = true, long)]
    pub theta: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct FreqParams {
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, num_args = 0, default_missing_value = "true")]
    pub json: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Emit coefficients for sites `a:b` as CSV.
    #[arg(allow_hyphen_values = true, long)]
    pub sites: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct CocycleParams {
    /// `lyapunov`, `trace-scan` or `regularity`.
    #[arg(long)]
    pub op: Option<String>,
    /// `value`, `a:b:K`, `list:a,b,..` or `spectrum:K`.
    #[arg(allow_hyphen_values = true, long = "E")]
    pub energies: Option<String>,
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long)]
    pub q: Option<i64>,
    #[arg(long = "m-window")]
    pub m_window: Option<i64>,
    /// Defaults to the measured value.
    #[arg(allow_hyphen_values = true, long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Defaults to `0.9 ln(q_{k+1}) / q_k` for `q = q_k`.
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct BoundsParams {
    /// `ap`, `lb`, `aj09` or `certify`.
    #[arg(long)]
    pub check: Option<String>,
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "window-cap")]
    pub window_cap: Option<u64>,
    #[arg(allow_hyphen_values = true, long)]
    pub lambda: Option<f64>,
    /// `weights` or `potential` (for `ap`).
    #[arg(long)]
    pub sequence: Option<String>,
    /// Ceiling on the sine-product constant (for `aj09`).
    #[arg(long = "c-max")]
    pub c_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SpectralParams {
    /// `m`, `M`, `gamma-scan`, `jl` or `powerlaw`.
    #[arg(long)]
    pub op: Option<String>,
    #[arg(allow_hyphen_values = true, long = "E")]
    pub energies: Option<String>,
    /// `a:b` for `eps` from `10^-a` down to `10^-b`.
    #[arg(allow_hyphen_values = true, long = "eps-decades")]
    pub eps_decades: Option<String>,
    #[arg(long = "eps-per-decade")]
    pub eps_per_decade: Option<usize>,
    #[arg(allow_hyphen_values = true, long = "gamma-grid")]
    pub gamma_grid: Option<String>,
    #[arg(allow_hyphen_values = true, long)]
    pub phi: Option<f64>,
    /// `right` or `left`.
    #[arg(long)]
    pub side: Option<String>,
    #[arg(long = "n-phi")]
    pub n_phi: Option<usize>,
    #[arg(long = "max-len")]
    pub max_len: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct GrowthParams {
    /// `decompose`, `interval`, `density`, `sums` or `sublevel`.
    #[arg(long)]
    pub op: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(allow_hyphen_values = true, long = "E")]
    pub energy: Option<f64>,
    #[arg(allow_hyphen_values = true, long)]
    pub a: Option<f64>,
    #[arg(long = "dump-grid", num_args = 0, default_missing_value = "true")]
    pub dump_grid: Option<bool>,
    /// `q_n` for `density`.
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long)]
    pub windows: Option<usize>,
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long)]
    pub gain: Option<f64>,
    /// Ascending real coefficients for `sublevel`.
    #[arg(allow_hyphen_values = true, long)]
    pub poly: Option<String>,
    /// Upper level `b` for `sublevel` (`a` is the lower one).
    #[arg(allow_hyphen_values = true, long)]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct TransportParams {
    #[arg(long)]
    pub p: Option<f64>,
    /// `a:b` for `T` from `10^a` to `10^b`.
    #[arg(allow_hyphen_values = true, long = "T-decades")]
    pub t_decades: Option<String>,
    #[arg(long = "per-decade")]
    pub per_decade: Option<usize>,
    /// `auto` or a half-width `L`.
    #[arg(long = "box")]
    pub box_size: Option<String>,
    #[arg(long = "min-decades")]
    pub min_decades: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub model: Option<ModelSpec>,
    pub freq: Option<FreqParams>,
    #[serde(rename = "model_output")]
    pub model_output: Option<ModelParams>,
    pub cocycle: Option<CocycleParams>,
    pub bounds: Option<BoundsParams>,
    pub spectral: Option<SpectralParams>,
    pub growth: Option<GrowthParams>,
    pub transport: Option<TransportParams>,
}

fn overlay(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => overlay(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config("config", e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// `self` with every value set in `top` taking precedence.
    pub fn merged(&self, top: &ExperimentConfig) -> Result<Self, CliError> {
        let mut base = toml::Value::try_from(self).map_err(|e| CliError::config("config", e.to_string()))?;
        let top = toml::Value::try_from(top).map_err(|e| CliError::config("config", e.to_string()))?;
        overlay(&mut base, top);
        base.try_into().map_err(|e: toml::de::Error| CliError::config("config", e.to_string()))
    }
}
