use std::collections::BTreeMap;
use std::io::{Read, Write};

use thiserror::Error;

use crate::environment::{EnvError, History, Policy};
use crate::semimeasure::Alphabet;

/// A deterministic policy given as one action per decision history.
/// Histories outside the table are rejected when queried.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicyTree {
    actions: BTreeMap<History, usize>,
    label: Option<String>,
}

impl PolicyTree {
    pub fn new(actions: BTreeMap<History, usize>) -> Self {
        Self {
            actions,
            label: None,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.label = Some(name.into());
        self
    }

    pub fn action(&self, history: &History) -> Option<usize> {
        self.actions.get(history).copied()
    }

    pub fn assignments(&self) -> &BTreeMap<History, usize> {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// `history → action` lines in canonical order.
    pub fn render(&self, actions: &Alphabet, percepts: &Alphabet) -> String {
        self.actions
            .iter()
            .map(|(h, a)| format!("{} → {}\n", render_history(h, actions, percepts), actions.symbol(*a)))
            .collect()
    }
}

impl Policy for PolicyTree {
    fn distribution(&self, history: &History, n_actions: usize) -> Result<Vec<crate::arith::Q>, EnvError> {
        match self.actions.get(history) {
            Some(&a) if a < n_actions => Ok(crate::environment::unit_vector(a, n_actions)),
            Some(&a) => Err(EnvError::AlphabetMismatch(format!(
                "policy action {a} at {history} outside {n_actions} actions"
            ))),
            None => Err(EnvError::NoDecision(history.clone())),
        }
    }

    fn name(&self) -> String {
        self.label.clone().unwrap_or_else(|| "policy-tree".to_string())
    }
}

fn render_history(h: &History, actions: &Alphabet, percepts: &Alphabet) -> String {
    if h.is_empty() {
        "ε".to_string()
    } else {
        h.render(actions, percepts)
    }
}

#[derive(Debug, Error)]
pub enum PolicyIoError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
}

/// Writes `history,action` rows using symbol names.
pub fn write_policy<W: Write>(
    policy: &PolicyTree,
    actions: &Alphabet,
    percepts: &Alphabet,
    out: W,
) -> Result<(), PolicyIoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["history", "action"])?;
    for (h, a) in &policy.actions {
        w.write_record([render_history(h, actions, percepts), actions.symbol(*a).to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_policy<R: Read>(
    input: R,
    actions: &Alphabet,
    percepts: &Alphabet,
) -> Result<PolicyTree, PolicyIoError> {
    let mut r = csv::Reader::from_reader(input);
    let mut map = BTreeMap::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| PolicyIoError::Malformed { line, message };
        if record.len() != 2 {
            return Err(bad("expected history,action".into()));
        }
        let h = History::parse(&record[0], actions, percepts)
            .ok_or_else(|| bad(format!("unknown history {:?}", &record[0])))?;
        let a = actions
            .index_of(record[1].trim())
            .ok_or_else(|| bad(format!("unknown action {:?}", &record[1])))?;
        if map.insert(h, a).is_some() {
            return Err(bad(format!("duplicate history {:?}", &record[0])));
        }
    }
    Ok(PolicyTree::new(map))
}
