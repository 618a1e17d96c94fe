use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Evolve,
    Kernel,
    Lln,
    LocalEq,
    Hydro,
    Laplace,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Kernel => "kernel",
            Command::Lln => "lln",
            Command::LocalEq => "local-eq",
            Command::Hydro => "hydro",
            Command::Laplace => "laplace",
        }
    }

    /// Tolerance names the command understands, with their defaults.
    pub fn default_tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            Command::Evolve | Command::Kernel => &[],
            Command::Lln => &[("ks_max", 0.03)],
            Command::LocalEq => &[("tv_max", 1.0)],
            Command::Hydro => &[("relative_error", 0.05), ("abs_error", 1e-9)],
            Command::Laplace => &[("z_score", 3.0)],
        }
    }

    fn is_stochastic(self) -> bool {
        matches!(self, Command::LocalEq | Command::Hydro | Command::Laplace)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Config(format!("unknown output format `{other}` (expected csv or json)"))),
        }
    }
}

/// A single scale or an increasing list of scales.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scales {
    One(u64),
    List(Vec<u64>),
}

impl Scales {
    pub fn as_slice(&self) -> &[u64] {
        match self {
            Scales::One(n) => std::slice::from_ref(n),
            Scales::List(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Scales>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_fn_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Laplace exponent, site → weight.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lambda: BTreeMap<String, f64>,
    /// Not part of the provenance header: two runs differing only in where
    /// they write must produce identical bytes.
    #[serde(default, skip_serializing)]
    pub output_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_format: Option<OutputFormat>,
    /// Directory against which relative paths are resolved.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Some(out) = &cfg.output_path {
            cfg.output_path = Some(cfg.resolve(out));
        }
        Ok(cfg)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn format(&self) -> OutputFormat {
        if let Some(f) = self.output_format {
            return f;
        }
        match self.output_path.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }

    /// Configured tolerance, falling back to the command default.
    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances.get(name).copied().unwrap_or_else(|| {
            self.command
                .default_tolerances()
                .iter()
                .find(|(k, _)| *k == name)
                .map(|&(_, v)| v)
                .expect("tolerance name is one of the command defaults")
        })
    }

    /// Tolerances with defaults filled in, as written to output headers.
    pub fn resolved_tolerances(&self) -> BTreeMap<String, f64> {
        self.command
            .default_tolerances()
            .iter()
            .map(|&(k, _)| (k.to_string(), self.tolerance(k)))
            .collect()
    }

    pub fn lambda_pairs(&self) -> Result<Vec<(i64, f64)>, CliError> {
        self.lambda
            .iter()
            .map(|(k, &v)| {
                k.trim()
                    .parse::<i64>()
                    .map(|site| (site, v))
                    .map_err(|_| CliError::Config(format!("lambda key `{k}` is not an integer site")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cmd = self.command;
        let missing = |field: &str| CliError::Config(format!("`{cmd}` needs `{field}`"));
        for (name, &value) in &self.tolerances {
            if !cmd.default_tolerances().iter().any(|(k, _)| k == name) {
                return Err(CliError::Config(format!("`{cmd}` has no tolerance named `{name}`")));
            }
            if !(value > 0.0 && value.is_finite()) {
                return Err(CliError::Config(format!("tolerance `{name}` must be positive, got {value}")));
            }
        }
        if let Some(t) = self.t {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!("t must be positive, got {t}")));
            }
        }
        if let Some(x) = self.x {
            if !x.is_finite() {
                return Err(CliError::Config(format!("x must be finite, got {x}")));
            }
        }
        if cmd.is_stochastic() {
            match self.replicas {
                None => return Err(missing("replicas")),
                Some(0) => return Err(CliError::Config("replicas must be positive".into())),
                Some(_) => {}
            }
            if self.t.is_none() {
                return Err(missing("t"));
            }
            if self.profile_path.is_none() {
                return Err(missing("profile_path"));
            }
        }
        let scales = self.n.as_ref().map(Scales::as_slice).unwrap_or(&[]);
        if scales.contains(&0) {
            return Err(CliError::Config("scales must be positive".into()));
        }
        match cmd {
            Command::Evolve => {
                if self.steps.is_none() && scales.len() != 1 {
                    return Err(missing("steps"));
                }
                if let Some(c) = &self.coin {
                    c.parse::<qwalk::CoinTag>().map_err(|e| CliError::Config(e.to_string()))?;
                }
            }
            Command::Kernel | Command::Laplace => {
                if scales.len() != 1 {
                    return Err(CliError::Config(format!("`{cmd}` needs a single scale `n`")));
                }
            }
            Command::Lln | Command::LocalEq | Command::Hydro => {
                if scales.len() < 2 || scales.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CliError::Config(format!(
                        "`{cmd}` needs `n` as an increasing list of at least two scales"
                    )));
                }
            }
        }
        if cmd == Command::Hydro && self.test_fn_path.is_none() {
            return Err(missing("test_fn_path"));
        }
        if cmd == Command::Laplace {
            if self.lambda.is_empty() {
                return Err(missing("lambda"));
            }
            for (_, v) in self.lambda_pairs()? {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!("lambda weights must be nonnegative, got {v}")));
                }
            }
        }
        Ok(())
    }
}
