use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use semival::arith::{Scalar, Q};
use semival::environment::{Environment, Policy};
use semival::planning::{expectimax, write_policy, PlanError, PolicyTree};
use semival::utility::Utility;
use semival::value::{evaluate, self_check, Semantics, ValueError, ValueReport, CSV_HEADER};

use crate::config::{self, ConfigError, Format, Mode, PolicySpec, Resolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eval,
    Plan,
    Compare,
}

#[derive(Debug, Clone)]
pub struct Options {
    pub config: PathBuf,
    pub semantics: Option<Vec<String>>,
    pub horizon: Option<usize>,
    pub mode: Option<Mode>,
    pub self_check: bool,
    pub out: Option<PathBuf>,
    pub policy_out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("inconsistent: {0}")]
    Inconsistent(String),
    #[error("{0}")]
    Eval(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Inconsistent(_) => 3,
            RunError::Eval(_) | RunError::Io(_) => 1,
        }
    }
}

impl From<ValueError> for RunError {
    fn from(e: ValueError) -> Self {
        match e {
            ValueError::Numeric(m) => RunError::Inconsistent(m),
            other => RunError::Eval(other.to_string()),
        }
    }
}

impl From<PlanError> for RunError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Value(v) => v.into(),
            other => RunError::Eval(other.to_string()),
        }
    }
}

/// One output row.
struct Cell {
    fields: [String; 7],
    lower: f64,
    upper: f64,
}

struct Setup {
    env: config::SharedEnv,
    utility: Box<dyn Utility>,
    policies: Vec<PolicySpec>,
    semantics: Vec<Semantics>,
    horizon: usize,
    mode: Mode,
    format: Format,
}

fn setup(command: Command, opts: &Options) -> Result<Setup, ConfigError> {
    let cfg = config::load(&opts.config)?;
    let files = Resolver::new(&opts.config);
    let env = config::build_env(&cfg, &files)?;
    let utility = config::build_utility(&cfg, env.as_ref(), &files)?;
    let policies = match command {
        Command::Plan => vec![PolicySpec::Plan],
        _ => config::build_policies(&cfg, env.as_ref(), &files)?,
    };
    let names = match (&opts.semantics, command) {
        (Some(list), Command::Compare) => list.clone(),
        _ => cfg.semantics.clone(),
    };
    let horizon = opts.horizon.unwrap_or(cfg.horizon);
    if horizon == 0 {
        return Err(ConfigError::Field {
            field: "horizon".into(),
            message: "must be at least 1".into(),
        });
    }
    Ok(Setup {
        env,
        utility,
        policies,
        semantics: config::parse_semantics(&names)?,
        horizon,
        mode: opts.mode.unwrap_or(cfg.mode),
        format: cfg.format,
    })
}

fn row<S: Scalar>(env: &str, policy: &str, utility: &str, report: &ValueReport<S>) -> Cell {
    Cell {
        fields: report.csv_record(env, policy, utility),
        lower: report.lower.to_f64(),
        upper: report.upper.to_f64(),
    }
}

fn check_routes<S: Scalar>(
    s: &Setup,
    label: &str,
    policy: &dyn Policy,
) -> Result<(), RunError> {
    let mismatches = self_check::<S>(s.env.as_ref(), policy, s.utility.as_ref(), s.horizon)?;
    if let Some(m) = mismatches.first() {
        return Err(RunError::Inconsistent(format!(
            "policy {label}: {} fails ({} vs {})",
            m.check, m.left, m.right
        )));
    }
    Ok(())
}

type Plans = Vec<(Semantics, PolicyTree)>;

fn cells<S: Scalar>(s: &Setup, self_checking: bool) -> Result<(Vec<Cell>, Plans), RunError> {
    let env: &dyn Environment = s.env.as_ref();
    let u: &dyn Utility = s.utility.as_ref();
    let env_name = env.name();
    let u_name = u.name();
    let mut out = Vec::new();
    let mut plans = Vec::new();
    for spec in &s.policies {
        match spec {
            PolicySpec::Fixed { label, policy } => {
                for &sem in &s.semantics {
                    let r = evaluate::<S>(env, policy.as_ref(), u, sem, s.horizon)?;
                    out.push(row(&env_name, label, &u_name, &r));
                }
                if self_checking {
                    check_routes::<S>(s, label, policy.as_ref())?;
                }
            }
            PolicySpec::Plan => {
                for &sem in &s.semantics {
                    let plan = expectimax::<S>(env, u, sem, s.horizon)?;
                    if self_checking {
                        let again = evaluate::<S>(env, &plan.policy, u, sem, s.horizon)?;
                        if !again.lower.agrees_with(&plan.value.lower)
                            || !again.upper.agrees_with(&plan.value.upper)
                        {
                            return Err(RunError::Inconsistent(format!(
                                "{sem} plan value {} differs from its evaluation {}",
                                plan.value.lower.render(),
                                again.lower.render()
                            )));
                        }
                        check_routes::<S>(s, "plan", &plan.policy)?;
                    }
                    out.push(row(&env_name, "plan", &u_name, &plan.value));
                    plans.push((sem, plan.policy));
                }
            }
        }
    }
    Ok((out, plans))
}

fn write_cells(format: Format, cells: &[Cell], out: &mut dyn Write) -> Result<(), RunError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let mut header: Vec<&str> = CSV_HEADER.to_vec();
            header.extend(["lower_approx", "upper_approx"]);
            w.write_record(&header).map_err(csv_err)?;
            for c in cells {
                let mut rec: Vec<String> = c.fields.to_vec();
                rec.push(format!("{:.12}", c.lower));
                rec.push(format!("{:.12}", c.upper));
                w.write_record(&rec).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Format::Text => {
            for c in cells {
                let named: Vec<String> = CSV_HEADER
                    .iter()
                    .zip(c.fields.iter())
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect();
                writeln!(out, "{} approx=[{:.6}, {:.6}]", named.join(" "), c.lower, c.upper)?;
            }
        }
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> RunError {
    RunError::Io(std::io::Error::other(e))
}

fn policy_path(base: &Path, sem: Semantics, many: bool) -> PathBuf {
    if !many {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let ext = base.extension().map_or_else(String::new, |e| format!(".{}", e.to_string_lossy()));
    base.with_file_name(format!("{stem}.{sem}{ext}"))
}

pub fn run(command: Command, opts: &Options, stdout: &mut dyn Write) -> Result<(), RunError> {
    let s = setup(command, opts)?;
    let (rows, plans) = match s.mode {
        Mode::Rational => cells::<Q>(&s, opts.self_check)?,
        Mode::Float => cells::<f64>(&s, opts.self_check)?,
    };
    match &opts.out {
        Some(path) => write_cells(s.format, &rows, &mut File::create(path)?)?,
        None => write_cells(s.format, &rows, stdout)?,
    }
    if command == Command::Plan {
        let actions = s.env.actions();
        let percepts = s.env.percepts().alphabet();
        for (sem, tree) in &plans {
            match &opts.policy_out {
                Some(base) => {
                    let f = File::create(policy_path(base, *sem, plans.len() > 1))?;
                    write_policy(tree, actions, percepts, f).map_err(|e| RunError::Eval(e.to_string()))?;
                }
                None if s.format == Format::Text => {
                    writeln!(stdout, "# {sem} policy")?;
                    stdout.write_all(tree.render(actions, percepts).as_bytes())?;
                }
                None => {}
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_error_kind() {
        let cfg = RunError::Config(ConfigError::Field {
            field: "horizon".into(),
            message: "x".into(),
        });
        assert_eq!(cfg.exit_code(), 2);
        assert_eq!(RunError::from(ValueError::Numeric("nan".into())).exit_code(), 3);
        assert_eq!(RunError::from(ValueError::MissingRewards).exit_code(), 1);
    }

    #[test]
    fn policy_files_get_a_semantics_suffix() {
        let base = Path::new("/tmp/out/policy.csv");
        assert_eq!(policy_path(base, Semantics::Death, false), base);
        assert_eq!(
            policy_path(base, Semantics::Choquet, true),
            Path::new("/tmp/out/policy.choquet.csv")
        );
    }
}
