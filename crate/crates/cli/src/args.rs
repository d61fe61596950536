use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use glfa::runspec::parse_config;
use glfa::{Command, RunSpec};

#[derive(Debug, Parser)]
#[command(name = "glfa", version, about = "Graph-incorporated latent factor analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Split a ratings file into train and test matrices.
    Split(Opts),
    /// Mine the high-confidence high-order interactions of a matrix.
    HoiStats(Opts),
    /// Train a BLF model, or GLFA with --glfa.
    Train(Opts),
    /// Score a model on a test matrix.
    Evaluate(Opts),
    /// Predict values for a list of pairs.
    Predict(Opts),
    /// Compare BLF and GLFA over several seeds.
    Bench(Opts),
}

impl Cmd {
    pub fn parts(&self) -> (Command, &Opts) {
        match self {
            Cmd::Split(o) => (Command::Split, o),
            Cmd::HoiStats(o) => (Command::HoiStats, o),
            Cmd::Train(o) => (Command::Train, o),
            Cmd::Evaluate(o) => (Command::Evaluate, o),
            Cmd::Predict(o) => (Command::Predict, o),
            Cmd::Bench(o) => (Command::Bench, o),
        }
    }
}

/// Every flag mirrors a run-spec key; flags win over `--config`.
#[derive(Debug, Args)]
pub struct Opts {
    /// Flat key=value file providing defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub ids: Option<PathBuf>,
    /// matrix, movielens, tsv or csv.
    #[arg(long)]
    pub format: Option<String>,
    /// The ratings file starts with a header line.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub header: Option<bool>,
    /// Share of the entries kept for training by `split` and `bench`.
    #[arg(long, allow_hyphen_values = true)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Embedding dimension.
    #[arg(long)]
    pub f: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Comma-separated α candidates for `bench`.
    #[arg(long)]
    pub alphas: Option<String>,
    #[arg(long)]
    pub n_rounds: Option<usize>,
    #[arg(long)]
    pub max_order: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub val_fraction: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub warm_start: Option<bool>,
    #[arg(long, allow_hyphen_values = true)]
    pub r_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r_max: Option<f64>,
    /// Train with the recurrent HOI rounds instead of the basic model.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub glfa: Option<bool>,
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Apply the clamping activation to predictions.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub clamp: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Opts {
    fn flag_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_owned(), v);
            }
        };
        let p = |v: &Option<PathBuf>| v.as_ref().map(|p| p.display().to_string());
        put("input", p(&self.input));
        put("test", p(&self.test));
        put("model", p(&self.model));
        put("pairs", p(&self.pairs));
        put("ids", p(&self.ids));
        put("out", p(&self.out));
        put("format", self.format.clone());
        put("alphas", self.alphas.clone());
        put("header", self.header.map(|v| v.to_string()));
        put("fraction", self.fraction.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("f", self.f.map(|v| v.to_string()));
        put("eta", self.eta.map(|v| v.to_string()));
        put("lambda", self.lambda.map(|v| v.to_string()));
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("n_rounds", self.n_rounds.map(|v| v.to_string()));
        put("max_order", self.max_order.map(|v| v.to_string()));
        put("max_epochs", self.max_epochs.map(|v| v.to_string()));
        put("tol", self.tol.map(|v| v.to_string()));
        put("patience", self.patience.map(|v| v.to_string()));
        put("val_fraction", self.val_fraction.map(|v| v.to_string()));
        put("warm_start", self.warm_start.map(|v| v.to_string()));
        put("r_min", self.r_min.map(|v| v.to_string()));
        put("r_max", self.r_max.map(|v| v.to_string()));
        put("glfa", self.glfa.map(|v| v.to_string()));
        put("seeds", self.seeds.map(|v| v.to_string()));
        put("clamp", self.clamp.map(|v| v.to_string()));
        m
    }

    /// Config file first, then flags on top.
    pub fn resolve(&self, command: Command) -> Result<RunSpec> {
        let mut map = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                parse_config(&text).with_context(|| format!("in config {}", path.display()))?
            }
            None => BTreeMap::new(),
        };
        // A single --alpha replaces the candidate list unless both are given.
        if self.alpha.is_some() && self.alphas.is_none() {
            map.remove("alphas");
        }
        map.extend(self.flag_map());
        Ok(RunSpec::from_map(command, &map)?)
    }
}
