//! Fully resolved run description and its flat `key=value` file form.
//!
//! Every pipeline run writes its resolved spec next to its artifacts; feeding
//! that file back reproduces the run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::data::{RatingFormat, ValueRange};
use crate::error::{Error, Result};
use crate::recurrent::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Split,
    HoiStats,
    Train,
    Evaluate,
    Predict,
    Bench,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Split => "split",
            Command::HoiStats => "hoi-stats",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Predict => "predict",
            Command::Bench => "bench",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "split" => Command::Split,
            "hoi-stats" => Command::HoiStats,
            "train" => Command::Train,
            "evaluate" => Command::Evaluate,
            "predict" => Command::Predict,
            "bench" => Command::Bench,
            other => return Err(Error::InvalidArgument(format!("unknown command {other:?}"))),
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How an input file is laid out: the canonical matrix form or raw ratings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Matrix,
    Ratings(RatingFormat),
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "matrix" {
            Ok(InputFormat::Matrix)
        } else {
            s.parse().map(InputFormat::Ratings)
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputFormat::Matrix => f.write_str("matrix"),
            InputFormat::Ratings(r) => r.fmt(f),
        }
    }
}

/// Every key a run spec may carry.
pub const KEYS: &[&str] = &[
    "command",
    "input",
    "test",
    "model",
    "pairs",
    "ids",
    "format",
    "header",
    "fraction",
    "seed",
    "f",
    "eta",
    "lambda",
    "alpha",
    "alphas",
    "n_rounds",
    "max_order",
    "max_epochs",
    "tol",
    "patience",
    "val_fraction",
    "warm_start",
    "r_min",
    "r_max",
    "glfa",
    "seeds",
    "clamp",
    "out",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub ids: Option<PathBuf>,
    pub format: InputFormat,
    pub has_header: bool,
    pub fraction: f64,
    pub train: TrainConfig,
    /// Candidate aggregation coefficients tried by `bench`.
    pub alphas: Vec<f64>,
    pub glfa: bool,
    pub seeds: usize,
    pub clamp: bool,
    pub out: PathBuf,
}

impl RunSpec {
    pub fn new(command: Command) -> Self {
        let train = TrainConfig::default();
        RunSpec {
            command,
            input: None,
            test: None,
            model: None,
            pairs: None,
            ids: None,
            format: match command {
                Command::Split | Command::Bench => InputFormat::Ratings(RatingFormat::MovieLens),
                _ => InputFormat::Matrix,
            },
            has_header: false,
            fraction: 0.2,
            alphas: vec![train.alpha],
            train,
            glfa: false,
            seeds: 5,
            clamp: false,
            out: PathBuf::from("out"),
        }
    }

    /// Defaults for `command`, overridden by `map`. Unknown keys are rejected.
    pub fn from_map(command: Command, map: &BTreeMap<String, String>) -> Result<Self> {
        let mut spec = RunSpec::new(command);
        if let Some(c) = map.get("command") {
            let c: Command = c.parse()?;
            if c != command {
                return Err(Error::InvalidArgument(format!(
                    "spec is for `{c}`, not `{command}`"
                )));
            }
        }
        let (mut r_min, mut r_max) = (None, None);
        for (key, value) in map {
            let v = value.as_str();
            match key.as_str() {
                "command" => {}
                "input" => spec.input = path(v),
                "test" => spec.test = path(v),
                "model" => spec.model = path(v),
                "pairs" => spec.pairs = path(v),
                "ids" => spec.ids = path(v),
                "format" => spec.format = v.parse()?,
                "header" => spec.has_header = parse(key, v)?,
                "fraction" => spec.fraction = parse(key, v)?,
                "seed" => spec.train.seed = parse(key, v)?,
                "f" => spec.train.dim = parse(key, v)?,
                "eta" => spec.train.eta = parse(key, v)?,
                "lambda" => spec.train.lambda = parse(key, v)?,
                "alpha" => spec.train.alpha = parse(key, v)?,
                "alphas" => {
                    spec.alphas = v
                        .split(',')
                        .map(|a| parse(key, a.trim()))
                        .collect::<Result<_>>()?
                }
                "n_rounds" => spec.train.n_rounds = parse(key, v)?,
                "max_order" => spec.train.max_order = parse(key, v)?,
                "max_epochs" => spec.train.max_epochs = parse(key, v)?,
                "tol" => spec.train.tol = parse(key, v)?,
                "patience" => spec.train.patience = parse(key, v)?,
                "val_fraction" => spec.train.val_fraction = parse(key, v)?,
                "warm_start" => spec.train.warm_start = parse(key, v)?,
                "r_min" => r_min = Some(parse::<f64>(key, v)?),
                "r_max" => r_max = Some(parse::<f64>(key, v)?),
                "glfa" => spec.glfa = parse(key, v)?,
                "seeds" => spec.seeds = parse(key, v)?,
                "clamp" => spec.clamp = parse(key, v)?,
                "out" => spec.out = PathBuf::from(v),
                other => return Err(Error::InvalidArgument(format!("unknown key {other:?}"))),
            }
        }
        if !map.contains_key("alphas") {
            spec.alphas = vec![spec.train.alpha];
        }
        spec.train.range = match (r_min, r_max) {
            (None, None) => None,
            (Some(lo), Some(hi)) => Some(ValueRange::new(lo, hi)?),
            _ => {
                return Err(Error::InvalidArgument(
                    "r_min and r_max must be given together".into(),
                ))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "fraction must be in (0, 1), got {}",
                self.fraction
            )));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidArgument("alphas must be non-negative reals".into()));
        }
        if self.seeds == 0 {
            return Err(Error::InvalidArgument("seeds must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_owned(), v);
        };
        put("command", self.command.to_string());
        for (k, p) in [
            ("input", &self.input),
            ("test", &self.test),
            ("model", &self.model),
            ("pairs", &self.pairs),
            ("ids", &self.ids),
        ] {
            if let Some(p) = p {
                put(k, p.display().to_string());
            }
        }
        put("format", self.format.to_string());
        put("header", self.has_header.to_string());
        put("fraction", self.fraction.to_string());
        let t = &self.train;
        put("seed", t.seed.to_string());
        put("f", t.dim.to_string());
        put("eta", t.eta.to_string());
        put("lambda", t.lambda.to_string());
        put("alpha", t.alpha.to_string());
        put(
            "alphas",
            self.alphas.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        );
        put("n_rounds", t.n_rounds.to_string());
        put("max_order", t.max_order.to_string());
        put("max_epochs", t.max_epochs.to_string());
        put("tol", t.tol.to_string());
        put("patience", t.patience.to_string());
        put("val_fraction", t.val_fraction.to_string());
        put("warm_start", t.warm_start.to_string());
        if let Some(r) = t.range {
            put("r_min", r.min().to_string());
            put("r_max", r.max().to_string());
        }
        put("glfa", self.glfa.to_string());
        put("seeds", self.seeds.to_string());
        put("clamp", self.clamp.to_string());
        put("out", self.out.display().to_string());
        m
    }

    /// `key=value` lines in key order.
    pub fn to_config_string(&self) -> String {
        self.to_map()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

fn path(v: &str) -> Option<PathBuf> {
    if v.is_empty() {
        None
    } else {
        Some(PathBuf::from(v))
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value {v:?} for {key}")))
}

/// Parses a flat config: `key=value` per line, `#` comments, blank lines ignored.
/// Keys must be known and may appear once.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(lineno, "expected key=value"))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::parse(lineno, format!("unknown key {key:?}")));
        }
        if map.insert(key.to_owned(), value.trim().to_owned()).is_some() {
            return Err(Error::parse(lineno, format!("key {key:?} given twice")));
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        for cmd in [Command::Split, Command::Train, Command::Bench, Command::Predict] {
            let spec = RunSpec::new(cmd);
            let text = spec.to_config_string();
            let back = RunSpec::from_map(cmd, &parse_config(&text).unwrap()).unwrap();
            assert_eq!(back, spec);
        }
    }

    #[test]
    fn overrides_apply() {
        let text = "# run\nf = 8\neta=0.005\nr_min=1\nr_max=5\nalphas=0.05,0.1,0.2\nwarm_start=false\n";
        let spec = RunSpec::from_map(Command::Train, &parse_config(text).unwrap()).unwrap();
        assert_eq!(spec.train.dim, 8);
        assert_eq!(spec.train.eta, 0.005);
        assert_eq!(spec.alphas, vec![0.05, 0.1, 0.2]);
        assert!(!spec.train.warm_start);
        assert_eq!(spec.train.range.unwrap().max(), 5.0);
    }

    #[test]
    fn rejects_malformed_configs() {
        assert!(parse_config("novalue\n").is_err());
        assert!(parse_config("bogus=1\n").is_err());
        assert!(parse_config("f=1\nf=2\n").is_err());
        let map = parse_config("r_min=1\n").unwrap();
        assert!(RunSpec::from_map(Command::Train, &map).is_err());
        let map = parse_config("command=split\n").unwrap();
        assert!(RunSpec::from_map(Command::Train, &map).is_err());
        let map = parse_config("eta=-1\n").unwrap();
        assert!(RunSpec::from_map(Command::Train, &map).is_err());
    }
}
