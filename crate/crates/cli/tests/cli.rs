use std::path::Path;
use std::process::{Command, Output};

fn semival(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semival"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const PERILOUS: &str = r#"
horizon = 12
policies = ["always:1", "always:2", "plan"]
[environment]
builtin = "perilous"
"#;

#[test]
fn eval_is_deterministic_and_self_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", PERILOUS);
    let a = semival(&["eval", "--self-check"], &cfg);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = semival(&["eval", "--self-check"], &cfg);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    // Header plus 3 policies × 4 semantics.
    assert_eq!(text.lines().count(), 13);
    assert!(text.starts_with("env,policy,utility,semantics,horizon,lower,upper"));
}

#[test]
fn float_mode_matches_rational_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", PERILOUS);
    let approx = |mode: &str| -> Vec<String> {
        let out = semival(&["eval", "--mode", mode], &cfg);
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.rsplitn(3, ',').take(2).collect::<Vec<_>>().join(","))
            .collect()
    };
    assert_eq!(approx("rational"), approx("float"));
}

#[test]
fn plan_writes_policy_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.toml",
        "horizon = 4\nsemantics = [\"death\", \"choquet\"]\n[environment]\nbuiltin = \"perilous\"\n",
    );
    let base = dir.path().join("policy.csv");
    let out = semival(&["plan", "--policy-out", base.to_str().unwrap()], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let death = std::fs::read_to_string(dir.path().join("policy.death.csv")).unwrap();
    let choquet = std::fs::read_to_string(dir.path().join("policy.choquet.csv")).unwrap();
    assert!(death.lines().nth(1).unwrap().starts_with("ε,1"));
    assert!(choquet.lines().nth(1).unwrap().starts_with("ε,2"));
}

#[test]
fn text_plan_prints_the_tree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.toml",
        "horizon = 3\nformat = \"text\"\nsemantics = [\"death\"]\n\
         [environment]\nbuiltin = \"procrastination\"\n[utility]\nkind = \"procrastination\"\nacting = \"1\"\n",
    );
    let out = semival(&["plan"], &cfg);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("lower=2/3"), "{text}");
    assert!(text.contains("# death policy"));
}

#[test]
fn config_problems_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write(
        dir.path(),
        "m.toml",
        "horizon = 2\n[environment]\ntable = \"nowhere.csv\"\n",
    );
    assert_eq!(semival(&["eval"], &missing).status.code(), Some(2));
    let unknown = write(dir.path(), "u.toml", "horizon = 2\ncolour = 3\n[environment]\nbuiltin = \"perilous\"\n");
    assert_eq!(semival(&["eval"], &unknown).status.code(), Some(2));
    let bad_sem = write(dir.path(), "s.toml", PERILOUS);
    let out = Command::new(env!("CARGO_BIN_EXE_semival"))
        .args(["compare", "--semantics", "optimistic", "--config"])
        .arg(&bad_sem)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
