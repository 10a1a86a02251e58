//! Experiment configuration: TOML schema and construction of the objects it
//! names. Relative paths resolve against the config file's directory.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use semival::arith::{parse_q, Q};
use semival::environment::table::read_table;
use semival::environment::{
    mixture, perilous, procrastination, ConstantPolicy, Environment, Policy, UniformPolicy,
};
use semival::planning::read_policy;
use semival::random::{random_environment, random_rewards, EnvSpec};
use semival::utility::tabled::read_tabled;
use semival::utility::{
    ConstantUtility, DiscountSchedule, ProcrastinationUtility, ReturnUtility, Utility,
};
use semival::value::Semantics;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Syntax {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Text,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub horizon: usize,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_semantics")]
    pub semantics: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_format")]
    pub format: Format,
    #[serde(default = "default_policies")]
    pub policies: Vec<String>,
    pub environment: EnvConfig,
    #[serde(default)]
    pub utility: UtilityConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
}

fn default_mode() -> Mode {
    Mode::Rational
}

fn default_semantics() -> Vec<String> {
    Semantics::ALL.iter().map(|s| s.to_string()).collect()
}

fn default_format() -> Format {
    Format::Csv
}

fn default_policies() -> Vec<String> {
    vec!["plan".to_string()]
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub builtin: Option<String>,
    pub table: Option<PathBuf>,
    pub random: Option<RandomEnvConfig>,
    pub mixture: Option<Vec<ComponentConfig>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub weight: String,
    pub builtin: Option<String>,
    pub table: Option<PathBuf>,
    pub random: Option<RandomEnvConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomEnvConfig {
    pub actions: usize,
    pub percepts: usize,
    pub horizon: usize,
    #[serde(default)]
    pub rewards: Vec<String>,
    #[serde(default = "yes")]
    pub defective: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase", tag = "kind")]
pub enum UtilityConfig {
    #[default]
    Return,
    Procrastination { acting: String },
    Constant { value: String },
    Table { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase", tag = "kind")]
pub enum ScheduleConfig {
    Geometric { scale: String, ratio: String },
    Explicit { head: Vec<String>, ratio: String },
    Undiscounted { horizon: usize },
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig::Geometric {
            scale: "1".into(),
            ratio: "1/2".into(),
        }
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let config: ExperimentConfig = toml::from_str(&text).map_err(|e| ConfigError::Syntax {
        path: path.to_path_buf(),
        source: Box::new(e),
    })?;
    if config.horizon == 0 {
        return Err(field("horizon", "must be at least 1"));
    }
    Ok(config)
}

fn rational(name: &str, text: &str) -> Result<Q, ConfigError> {
    parse_q(text).map_err(|e| field(name, format!("{text:?}: {e}")))
}

/// Files named by the config, resolved relative to its directory.
pub struct Resolver {
    base: PathBuf,
}

impl Resolver {
    pub fn new(config_path: &Path) -> Self {
        Self {
            base: config_path
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_default(),
        }
    }

    pub fn open(&self, name: &str, path: &Path) -> Result<File, ConfigError> {
        let full = self.base.join(path);
        File::open(&full).map_err(|e| field(name, format!("{}: {e}", full.display())))
    }
}

pub type SharedEnv = Arc<dyn Environment>;

fn single_env(
    name: &str,
    builtin: &Option<String>,
    table: &Option<PathBuf>,
    random: &Option<RandomEnvConfig>,
    seed: u64,
    files: &Resolver,
) -> Result<SharedEnv, ConfigError> {
    let given = [builtin.is_some(), table.is_some(), random.is_some()]
        .iter()
        .filter(|b| **b)
        .count();
    if given != 1 {
        return Err(field(name, "give exactly one of builtin, table, random or mixture"));
    }
    if let Some(b) = builtin {
        return match b.as_str() {
            "perilous" => Ok(Arc::new(perilous())),
            "procrastination" => Ok(Arc::new(procrastination().0)),
            other => Err(field(
                &format!("{name}.builtin"),
                format!("unknown environment {other:?} (expected perilous or procrastination)"),
            )),
        };
    }
    if let Some(path) = table {
        let f = files.open(&format!("{name}.table"), path)?;
        let env = read_table(f).map_err(|e| field(&format!("{name}.table"), e.to_string()))?;
        return Ok(Arc::new(env));
    }
    let r = random.as_ref().expect("counted above");
    let key = format!("{name}.random");
    if r.actions == 0 || r.percepts == 0 {
        return Err(field(&key, "alphabets must be nonempty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rewards = if r.rewards.is_empty() {
        None
    } else {
        let set = r
            .rewards
            .iter()
            .map(|t| rational(&format!("{key}.rewards"), t))
            .collect::<Result<Vec<Q>, _>>()?;
        Some(random_rewards(&mut rng, r.percepts, &set, true))
    };
    let spec = EnvSpec {
        actions: r.actions,
        percepts: r.percepts,
        horizon: r.horizon,
        rewards,
        defective: r.defective,
    };
    let env = random_environment(&mut rng, &spec).map_err(|e| field(&key, e.to_string()))?;
    Ok(Arc::new(env))
}

pub fn build_env(config: &ExperimentConfig, files: &Resolver) -> Result<SharedEnv, ConfigError> {
    let e = &config.environment;
    let Some(parts) = &e.mixture else {
        return single_env("environment", &e.builtin, &e.table, &e.random, config.seed, files);
    };
    if e.builtin.is_some() || e.table.is_some() || e.random.is_some() {
        return Err(field("environment", "a mixture cannot also name a single environment"));
    }
    let mut components = Vec::new();
    for (i, c) in parts.iter().enumerate() {
        let name = format!("environment.mixture[{i}]");
        let w = rational(&format!("{name}.weight"), &c.weight)?;
        let seed = config.seed.wrapping_add(i as u64);
        components.push((w, single_env(&name, &c.builtin, &c.table, &c.random, seed, files)?));
    }
    let mix = mixture(components).map_err(|e| field("environment.mixture", e.to_string()))?;
    Ok(Arc::new(mix))
}

pub fn build_schedule(config: &ScheduleConfig) -> Result<DiscountSchedule, ConfigError> {
    let err = |e: semival::utility::UtilityError| field("schedule", e.to_string());
    match config {
        ScheduleConfig::Geometric { scale, ratio } => DiscountSchedule::geometric(
            rational("schedule.scale", scale)?,
            rational("schedule.ratio", ratio)?,
        )
        .map_err(err),
        ScheduleConfig::Explicit { head, ratio } => {
            let head = head
                .iter()
                .map(|t| rational("schedule.head", t))
                .collect::<Result<Vec<Q>, _>>()?;
            DiscountSchedule::explicit(head, rational("schedule.ratio", ratio)?).map_err(err)
        }
        ScheduleConfig::Undiscounted { horizon } => {
            DiscountSchedule::undiscounted(Some(*horizon)).map_err(err)
        }
    }
}

pub fn build_utility(
    config: &ExperimentConfig,
    env: &dyn Environment,
    files: &Resolver,
) -> Result<Box<dyn Utility>, ConfigError> {
    match &config.utility {
        UtilityConfig::Return => {
            let schedule = build_schedule(&config.schedule)?;
            let u = ReturnUtility::from_percepts(schedule, env.percepts())
                .map_err(|e| field("utility", e.to_string()))?;
            Ok(Box::new(u))
        }
        UtilityConfig::Procrastination { acting } => {
            let a = env
                .actions()
                .index_of(acting)
                .ok_or_else(|| field("utility.acting", format!("unknown action {acting:?}")))?;
            Ok(Box::new(ProcrastinationUtility::new(a)))
        }
        UtilityConfig::Constant { value } => {
            Ok(Box::new(ConstantUtility::new(rational("utility.value", value)?)))
        }
        UtilityConfig::Table { path } => {
            let f = files.open("utility.path", path)?;
            let name = path
                .file_stem()
                .map_or_else(|| "table".to_string(), |s| s.to_string_lossy().into_owned());
            let u = read_tabled(f, name, env.actions(), env.percepts().alphabet())
                .map_err(|e| field("utility.path", e.to_string()))?;
            Ok(Box::new(u))
        }
    }
}

pub fn parse_semantics(names: &[String]) -> Result<Vec<Semantics>, ConfigError> {
    if names.is_empty() {
        return Err(field("semantics", "list at least one semantics"));
    }
    names
        .iter()
        .map(|n| n.parse::<Semantics>().map_err(|e| field("semantics", e.to_string())))
        .collect()
}

/// A policy entry from the config.
pub enum PolicySpec {
    Fixed { label: String, policy: Box<dyn Policy> },
    Plan,
}

pub fn build_policies(
    config: &ExperimentConfig,
    env: &dyn Environment,
    files: &Resolver,
) -> Result<Vec<PolicySpec>, ConfigError> {
    if config.policies.is_empty() {
        return Err(field("policies", "list at least one policy"));
    }
    config
        .policies
        .iter()
        .map(|spec| {
            let label = spec.clone();
            let (kind, arg) = spec.split_once(':').unwrap_or((spec.as_str(), ""));
            let policy: Box<dyn Policy> = match kind {
                "plan" if arg.is_empty() => return Ok(PolicySpec::Plan),
                "uniform" if arg.is_empty() => Box::new(UniformPolicy),
                "always" => {
                    let a = env.actions().index_of(arg).ok_or_else(|| {
                        field("policies", format!("{spec:?}: unknown action {arg:?}"))
                    })?;
                    Box::new(ConstantPolicy::new(a))
                }
                "table" => {
                    let f = files.open("policies", Path::new(arg))?;
                    let p = read_policy(f, env.actions(), env.percepts().alphabet())
                        .map_err(|e| field("policies", format!("{spec:?}: {e}")))?;
                    Box::new(p)
                }
                _ => {
                    return Err(field(
                        "policies",
                        format!("{spec:?} (expected plan, uniform, always:<action> or table:<path>)"),
                    ))
                }
            };
            Ok(PolicySpec::Fixed { label, policy })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ExperimentConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse("horizon = 3\n[environment]\nbuiltin = \"perilous\"\n");
        assert_eq!(c.mode, Mode::Rational);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.policies, ["plan"]);
        assert_eq!(parse_semantics(&c.semantics).unwrap(), Semantics::ALL);
        assert!(matches!(c.utility, UtilityConfig::Return));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: Result<ExperimentConfig, _> =
            toml::from_str("horizon = 3\ncolour = 1\n[environment]\nbuiltin = \"perilous\"\n");
        assert!(r.is_err());
    }

    #[test]
    fn builds_mixtures_and_schedules() {
        let c = parse(
            "horizon = 2\nseed = 4\n[[environment.mixture]]\nweight = \"1/2\"\nrandom = { actions = 2, percepts = 2, horizon = 3, rewards = [\"1\"] }\n\
             [[environment.mixture]]\nweight = \"1/4\"\nrandom = { actions = 2, percepts = 2, horizon = 2, rewards = [\"1\"] }\n\
             [schedule]\nkind = \"explicit\"\nhead = [\"1\", \"1/2\"]\nratio = \"1/3\"\n",
        );
        let files = Resolver::new(Path::new("x.toml"));
        let env = build_env(&c, &files).unwrap();
        assert!(env.name().starts_with("mixture("));
        assert!(build_utility(&c, env.as_ref(), &files).is_ok());
    }

    #[test]
    fn reports_the_failing_field() {
        let c = parse("horizon = 2\npolicies = [\"always:7\"]\n[environment]\nbuiltin = \"perilous\"\n");
        let files = Resolver::new(Path::new("x.toml"));
        let env = build_env(&c, &files).unwrap();
        let err = build_policies(&c, env.as_ref(), &files).err().unwrap();
        assert!(err.to_string().starts_with("field `policies`"));
        let c = parse("horizon = 2\n[environment]\nbuiltin = \"perilous\"\ntable = \"t.csv\"\n");
        assert!(build_env(&c, &files).is_err());
    }
}
