//! The TOML experiment configuration.
//!
//! Top-level keys describe the instance family (`n`, `epsilon`, `N`,
//! `eps_ST_N`, `eps_S_N`, `eps_T_N`, `alpha`, `bernoulli_q`, `setting`,
//! `seed`). Any key left out is derived from `n` and `epsilon`; any key given
//! overrides the derived value and must still satisfy the parameter
//! invariants. An optional `[instance]` table fixes `S` and `T`, and an
//! optional `[experiment]` table configures transformations and sampling.

use std::path::Path;
use std::str::FromStr;

use mechlab_core::adversarial::{sample_valid_pair, PairDistribution, ValidPair};
use mechlab_core::analysis::{AttackConfig, WelfareMethod};
use mechlab_core::domain::{default_epsilon, ParamOverrides, Params, PriorDistribution, Setting};
use mechlab_core::transform::{FeasibilityMode, Transformation};
use mechlab_core::{IndexSet, Rational};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for `{key}`: {message}")]
    Value { key: &'static str, message: String },
    #[error(transparent)]
    Model(#[from] mechlab_core::Error),
}

fn bad(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value { key, message: message.into() }
}

/// Parses `"a/b"`, a decimal such as `"0.05"`, or an integer, exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b) = (a.trim().parse::<i64>().ok()?, b.trim().parse::<i64>().ok()?);
        return (b != 0).then(|| Rational::new(a, b));
    }
    let (sign, digits) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if frac.len() > 15 || (int.is_empty() && frac.is_empty()) {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let den = 10i64.checked_pow(frac.len() as u32)?;
    let int: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    Some(Rational::new(sign * int.checked_mul(den)?.checked_add(frac)?, den))
}

/// A rational written as an integer, a decimal, or a string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RationalValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl RationalValue {
    fn resolve(&self, key: &'static str) -> Result<Rational, ConfigError> {
        match self {
            RationalValue::Int(i) => Ok(Rational::from_integer(*i)),
            RationalValue::Float(f) => parse_rational(&f.to_string()).ok_or_else(|| bad(key, format!("{f} is not a finite decimal"))),
            RationalValue::Text(s) => parse_rational(s).ok_or_else(|| bad(key, format!("`{s}` is not a rational"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SettingName {
    #[default]
    SingleParameter,
    MultiDimensional,
}

impl From<SettingName> for Setting {
    fn from(s: SettingName) -> Setting {
        match s {
            SettingName::SingleParameter => Setting::SingleParameter,
            SettingName::MultiDimensional => Setting::MultiDimensional,
        }
    }
}

pub fn setting_name(s: Setting) -> &'static str {
    match s {
        Setting::SingleParameter => "single-parameter",
        Setting::MultiDimensional => "multi-dimensional",
    }
}

/// The parameter keys shared by experiment configs and fixture files.
#[derive(Debug, Clone, Deserialize)]
#[allow(non_snake_case)]
pub struct ParamsSpec {
    pub n: usize,
    pub epsilon: Option<RationalValue>,
    pub N: Option<usize>,
    pub eps_ST_N: Option<usize>,
    pub eps_S_N: Option<usize>,
    pub eps_T_N: Option<usize>,
    pub alpha: Option<RationalValue>,
    pub bernoulli_q: Option<RationalValue>,
    #[serde(default)]
    pub setting: SettingName,
    #[serde(default)]
    pub seed: u64,
}

impl ParamsSpec {
    pub fn params(&self) -> Result<Params, ConfigError> {
        let epsilon = match &self.epsilon {
            Some(e) => e.resolve("epsilon")?,
            None => default_epsilon(),
        };
        let overrides = ParamOverrides {
            max_support: self.N,
            overlap: self.eps_ST_N,
            s_threshold: self.eps_S_N,
            t_threshold: self.eps_T_N,
            alpha: self.alpha.as_ref().map(|a| a.resolve("alpha")).transpose()?,
            activation_prob: self.bernoulli_q.as_ref().map(|q| q.resolve("bernoulli_q")).transpose()?,
        };
        Ok(Params::resolve(self.n, epsilon, &overrides)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[allow(non_snake_case)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub S: Vec<usize>,
    pub T: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub transformation: String,
    pub q: usize,
    pub mode: String,
    pub budget: Option<usize>,
    pub rows: usize,
    pub pair_seed: Option<u64>,
    pub mechanism_seed: Option<u64>,
    pub samples: usize,
    pub welfare: String,
    pub ic_domain: usize,
    pub overlap_trials: usize,
    /// Seeds swept when verifying a transformation.
    pub seeds: usize,
    /// Largest exhaustive subset size for the matching check.
    pub subset_size: usize,
    /// Random subsets added to the matching check.
    pub random_subsets: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            transformation: "presampled-range".into(),
            q: 32,
            mode: "downward-closed".into(),
            budget: None,
            rows: 4,
            pair_seed: None,
            mechanism_seed: None,
            samples: 2000,
            welfare: "monte-carlo".into(),
            ic_domain: 24,
            overlap_trials: 0,
            seeds: 1,
            subset_size: 2,
            random_subsets: 200,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ConfigFile {
    #[serde(flatten)]
    pub params: ParamsSpec,
    pub instance: Option<InstanceSpec>,
    #[serde(default)]
    pub experiment: ExperimentSpec,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub params: Params,
    pub setting: Setting,
    pub seed: u64,
    pub instance: Option<ValidPair>,
    pub experiment: ExperimentSpec,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub budget: Option<usize>,
    pub mode: Option<String>,
}

pub fn read_to_string(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })
}

impl Config {
    pub fn load(path: &Path, cli: &CliOverrides) -> Result<Self, ConfigError> {
        Self::parse(&read_to_string(path)?, cli)
    }

    pub fn parse(text: &str, cli: &CliOverrides) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(text)?;
        let params = file.params.params()?;
        let instance = match &file.instance {
            Some(spec) => {
                let set = |key: &'static str, v: &[usize]| -> Result<IndexSet, ConfigError> {
                    if let Some(&i) = v.iter().find(|&&i| i >= params.n) {
                        return Err(bad(key, format!("index {i} is out of range for n = {}", params.n)));
                    }
                    Ok(IndexSet::from_indices(params.n, v.iter().copied()))
                };
                Some(ValidPair::new(set("S", &spec.S)?, set("T", &spec.T)?, params.clone())?)
            }
            None => None,
        };
        let mut experiment = file.experiment;
        if let Some(s) = cli.samples {
            experiment.samples = s;
        }
        if let Some(b) = cli.budget {
            experiment.budget = Some(b);
        }
        if let Some(m) = &cli.mode {
            experiment.mode = m.clone();
        }
        let config =
            Config { params, setting: file.params.setting.into(), seed: cli.seed.unwrap_or(file.params.seed), instance, experiment };
        config.transformation()?;
        config.mode()?;
        config.welfare_method()?;
        Ok(config)
    }

    pub fn transformation(&self) -> Result<Transformation, ConfigError> {
        let t =
            Transformation::parse(&self.experiment.transformation, self.experiment.q).map_err(|e| bad("transformation", e.to_string()))?;
        if matches!(t, Transformation::PresampledRange { q: 0 }) {
            return Err(bad("q", "must be positive"));
        }
        Ok(t)
    }

    pub fn mode(&self) -> Result<FeasibilityMode, ConfigError> {
        FeasibilityMode::from_str(&self.experiment.mode).map_err(|e| bad("mode", e.to_string()))
    }

    pub fn welfare_method(&self) -> Result<WelfareMethod, ConfigError> {
        match self.experiment.welfare.as_str() {
            "exact" => Ok(WelfareMethod::Exact),
            "monte-carlo" => Ok(WelfareMethod::MonteCarlo),
            other => Err(bad("welfare", format!("`{other}` is neither `exact` nor `monte-carlo`"))),
        }
    }

    pub fn pair_seed(&self) -> u64 {
        self.experiment.pair_seed.unwrap_or(self.seed)
    }

    pub fn mechanism_seed(&self) -> u64 {
        self.experiment.mechanism_seed.unwrap_or(self.seed)
    }

    pub fn prior(&self) -> PriorDistribution {
        PriorDistribution::new(self.params.clone(), self.setting, self.seed)
    }

    /// The configured instance, or the first draw of the pair stream.
    pub fn pair(&self) -> Result<ValidPair, ConfigError> {
        match &self.instance {
            Some(p) => Ok(p.clone()),
            None => Ok(sample_valid_pair(&PairDistribution::uniform(self.params.clone(), self.pair_seed()), 0)?),
        }
    }

    pub fn attack_config(&self) -> Result<AttackConfig, ConfigError> {
        let e = &self.experiment;
        let mut c = AttackConfig::new(self.params.clone(), self.setting, self.transformation()?);
        c.mode = self.mode()?;
        c.budget = e.budget;
        c.rows = e.rows;
        c.pair_seed = self.pair_seed();
        c.prior_seed = self.seed;
        c.mechanism_seed = self.mechanism_seed();
        c.samples = e.samples;
        c.welfare_method = self.welfare_method()?;
        c.ic_domain = e.ic_domain;
        c.overlap_trials = e.overlap_trials;
        Ok(c)
    }
}
