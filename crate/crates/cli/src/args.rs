use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hraid_core::{FailureModel, HraidConfig};

use crate::error::CliError;

pub const THREADS_ENV: &str = "HRAID_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hraid-lab", version, about = "Hierarchical RAID reliability lab")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Flags override `--config`, which
/// overrides the defaults.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Storage nodes (N)
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Disks per node (M)
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Tolerated node failures
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Tolerated disk failures per node
    #[arg(long = "l", global = true)]
    pub ell: Option<usize>,
    /// Disk failure rate per hour
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Controller failure rate per hour
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat JSON object with RunConfig field names
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo MTTDL of one configuration
    Simulate {
        /// Dump traced replays of the first trials as JSON lines
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        trace_trials: u64,
    },
    /// MTTDL for every k, l in 0..=3
    Sweep,
    /// Closed-form reliability figures
    Analytic {
        #[arg(value_enum, default_value_t = AnalyticTopic::All)]
        topic: AnalyticTopic,
        /// Disk unreliability for reliability values
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
    },
    /// Exact enumeration and Markov chain results
    Oracle {
        #[arg(value_enum, default_value_t = OracleTopic::Mttdl)]
        topic: OracleTopic,
    },
    /// Emit or verify a strip layout
    Layout {
        /// Verify a JSON layout document instead of generating one
        #[arg(long)]
        verify: Option<PathBuf>,
    },
    /// Encode random data, erase strips on disk, recover and compare
    CodecDemo {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = hraid_core::layout::DEFAULT_STRIP_SIZE)]
        strip_size: usize,
        /// Node to erase entirely (repeatable)
        #[arg(long)]
        erase_node: Vec<usize>,
        /// Disk to erase, as NODE:POS (repeatable)
        #[arg(long)]
        erase_disk: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalyticTopic {
    All,
    Reliability,
    LeadingTerm,
    Compare,
    SixthFailure,
    Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleTopic {
    Poly,
    Mttdl,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub ell: Option<usize>,
    pub delta_per_hour: Option<f64>,
    pub gamma_per_hour: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub output_format: Option<OutputFormat>,
    pub output_path: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }
}

/// Effective run settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub ell: usize,
    pub delta_per_hour: f64,
    pub gamma_per_hour: f64,
    pub trials: u64,
    pub seed: u64,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 12,
            m: 12,
            k: 1,
            ell: 1,
            delta_per_hour: 1e-6,
            gamma_per_hour: 0.0,
            trials: 100_000,
            seed: 1,
            output_format: OutputFormat::Table,
            output_path: None,
        }
    }
}

impl RunConfig {
    pub fn hraid(&self) -> Result<HraidConfig, CliError> {
        Ok(HraidConfig::new(self.n, self.m, self.k, self.ell)?)
    }

    pub fn rates(&self) -> Result<FailureModel, CliError> {
        Ok(FailureModel::new(self.delta_per_hour, self.gamma_per_hour)?)
    }

    pub fn trials(&self) -> Result<u64, CliError> {
        if self.trials == 0 {
            return Err(CliError::Validation("violated bound `trials >= 1`: trials=0".into()));
        }
        Ok(self.trials)
    }
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let d = RunConfig::default();
        Ok(RunConfig {
            n: self.n.or(file.n).unwrap_or(d.n),
            m: self.m.or(file.m).unwrap_or(d.m),
            k: self.k.or(file.k).unwrap_or(d.k),
            ell: self.ell.or(file.ell).unwrap_or(d.ell),
            delta_per_hour: self.delta.or(file.delta_per_hour).unwrap_or(d.delta_per_hour),
            gamma_per_hour: self.gamma.or(file.gamma_per_hour).unwrap_or(d.gamma_per_hour),
            trials: self.trials.or(file.trials).unwrap_or(d.trials),
            seed: self.seed.or(file.seed).unwrap_or(d.seed),
            output_format: self.format.or(file.output_format).unwrap_or(d.output_format),
            output_path: self.out.clone().or(file.output_path),
        })
    }
}

/// Worker count from `HRAID_LAB_THREADS`; 0 or unset lets rayon decide.
pub fn worker_threads() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={v} is not a thread count"))),
        Err(_) => Ok(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(extra: &[&str]) -> Cli {
        let mut argv = vec!["hraid-lab"];
        argv.extend_from_slice(extra);
        Cli::try_parse_from(argv).unwrap()
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"n": 8, "m": 6, "seed": 99, "output_format": "csv"}"#).unwrap();
        let cli = parse(&["sweep", "--config", path.to_str().unwrap(), "--m", "5"]);
        let rc = cli.common.resolve().unwrap();
        assert_eq!((rc.n, rc.m, rc.seed), (8, 5, 99));
        assert_eq!(rc.output_format, OutputFormat::Csv);
        assert_eq!(rc.trials, RunConfig::default().trials);
    }

    #[test]
    fn unknown_config_fields_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"nodes": 8}"#).unwrap();
        let cli = parse(&["sweep", "--config", path.to_str().unwrap()]);
        assert!(matches!(cli.common.resolve(), Err(CliError::Validation(_))));
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = parse(&["analytic", "compare", "--n", "12", "--m", "12"]);
        assert_eq!(cli.common.n, Some(12));
        assert!(matches!(
            cli.command,
            Command::Analytic { topic: AnalyticTopic::Compare, .. }
        ));
    }
}
