use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use snsradar::scenario::{ChannelModel, ScenarioFile};

use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "snsradar", version, about = "Sub-Nyquist OFDM radar simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write its profile, report and IQ capture.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Monte-Carlo sweep over sub-sampling ratios.
    SweepL {
        scenario: PathBuf,
        /// Comma-separated ratios; falls back to `sweep.ratios` in the file.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<usize>>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Post-cancellation SNR over a (ratio, normalized Doppler) grid.
    SweepDoppler {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<usize>>,
        /// Comma-separated normalized Doppler values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        doppler: Option<Vec<f64>>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Process a recorded capture taken at the decimated rate.
    Ingest {
        capture: PathBuf,
        /// Symbol seed, or a symbol file written by `run`.
        #[arg(long)]
        symbols: SymbolSource,
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a scenario and print its canonical form.
    Validate {
        scenario: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Flags that take precedence over the scenario file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Base RNG seed; trial t uses seed + t.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sub-sampling ratio.
    #[arg(long = "l", value_name = "L")]
    pub ratio: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_parser = ChannelModel::from_str)]
    pub channel: Option<ChannelModel>,
    #[arg(long, allow_negative_numbers = true)]
    pub noise_dbm: Option<f64>,
    /// Convergence threshold in dB.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub no_smnc: bool,
    /// Directory for output files; created if missing.
    #[arg(short = 'o', long, default_value = ".")]
    pub out_dir: PathBuf,
}

impl Overrides {
    pub fn apply(&self, f: &mut ScenarioFile) {
        if let Some(v) = self.seed {
            f.radar.rng_seed = v;
        }
        if let Some(v) = self.ratio {
            f.radar.sub_sampling_ratio = v;
        }
        if let Some(v) = self.trials {
            f.trials = v;
        }
        if let Some(v) = self.channel {
            f.channel_model = v;
        }
        if let Some(v) = self.noise_dbm {
            f.noise_dbm = v;
        }
        if let Some(v) = self.epsilon {
            f.smnc.epsilon_db = v;
        }
        if self.no_smnc {
            f.smnc.enabled = false;
        }
    }

    pub fn out_dir(&self) -> Result<&Path, Failure> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| Failure::io(&self.out_dir, e))?;
        Ok(&self.out_dir)
    }
}

#[derive(Debug, Clone)]
pub enum SymbolSource {
    Seed(u64),
    File(PathBuf),
}

impl FromStr for SymbolSource {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(s.parse().map_or_else(|_| Self::File(s.into()), Self::Seed))
    }
}
