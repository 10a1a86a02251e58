//! Tabled environments and their text form.
//!
//! ```text
//! #actions,1,2
//! #percepts,r1,r2
//! #rewards,1/1,2/1
//! #horizon,2
//! history,action,percept,numerator,denominator
//! ,2,r2,1,2
//! 2:r2,2,r2,1,2
//! ```
//!
//! One record per nonzero percept mass; percepts omitted for a listed
//! `(history, action)` pair have mass 0. Pairs that are not listed at all are
//! undefined and querying them is an error.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use super::{EnvError, Environment, History, PerceptSpace};
use crate::arith::{parse_q, render_q, Q};
use crate::semimeasure::{Alphabet, AlphabetError};

#[derive(Debug, Clone, PartialEq)]
pub struct TableEnvironment {
    actions: Alphabet,
    percepts: PerceptSpace,
    horizon: usize,
    rows: BTreeMap<(History, usize), Vec<Q>>,
    name: String,
}

pub struct TableBuilder {
    env: TableEnvironment,
    error: Option<EnvError>,
}

impl TableBuilder {
    pub fn row(mut self, history: History, action: usize, masses: Vec<Q>) -> Self {
        if self.error.is_some() {
            return self;
        }
        if let Err(e) = self.env.check_row(&history, action, &masses) {
            self.error = Some(e);
            return self;
        }
        self.env.rows.insert((history, action), masses);
        self
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.env.name = name.into();
        self
    }

    pub fn build(self) -> Result<TableEnvironment, EnvError> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.env),
        }
    }
}

impl TableEnvironment {
    pub fn builder(actions: Alphabet, percepts: PerceptSpace, horizon: usize) -> TableBuilder {
        TableBuilder {
            env: TableEnvironment {
                actions,
                percepts,
                horizon,
                rows: BTreeMap::new(),
                name: "table".to_string(),
            },
            error: None,
        }
    }

    fn check_row(&self, history: &History, action: usize, masses: &[Q]) -> Result<(), EnvError> {
        if history.len() >= self.horizon {
            return Err(EnvError::BeyondHorizon {
                depth: history.len() + 1,
                horizon: self.horizon,
            });
        }
        let bad_symbol = history
            .steps()
            .iter()
            .any(|s| s.action >= self.actions.len() || s.percept >= self.percepts.len());
        if bad_symbol || action >= self.actions.len() {
            return Err(EnvError::AlphabetMismatch(format!(
                "row ({history}, {action}) uses an unknown symbol"
            )));
        }
        if masses.len() != self.percepts.len() {
            return Err(EnvError::WrongLength {
                expected: self.percepts.len(),
                got: masses.len(),
            });
        }
        if let Some(percept) = masses.iter().position(|m| m < &Q::zero()) {
            return Err(EnvError::NegativeMass {
                history: history.clone(),
                action,
                percept,
            });
        }
        Ok(())
    }

    pub fn rows(&self) -> &BTreeMap<(History, usize), Vec<Q>> {
        &self.rows
    }

    /// Tabulates any environment over its histories of positive mass up to
    /// `horizon` steps.
    pub fn tabulate(env: &dyn Environment, horizon: usize) -> Result<Self, EnvError> {
        let mut builder = Self::builder(env.actions().clone(), env.percepts().clone(), horizon)
            .name(env.name());
        let mut stack = vec![History::empty()];
        while let Some(h) = stack.pop() {
            if h.len() >= horizon {
                continue;
            }
            for a in 0..env.actions().len() {
                let c = super::checked_conditional(env, &h, a)?;
                for (e, m) in c.iter().enumerate() {
                    if !m.is_zero() {
                        stack.push(h.extended(super::Step::new(a, e)));
                    }
                }
                builder = builder.row(h.clone(), a, c);
            }
        }
        builder.build()
    }
}

impl Environment for TableEnvironment {
    fn actions(&self) -> &Alphabet {
        &self.actions
    }

    fn percepts(&self) -> &PerceptSpace {
        &self.percepts
    }

    fn conditional(&self, history: &History, action: usize) -> Result<Vec<Q>, EnvError> {
        self.rows
            .get(&(history.clone(), action))
            .cloned()
            .ok_or_else(|| EnvError::Undefined {
                history: history.clone(),
                action,
            })
    }

    fn horizon(&self) -> Option<usize> {
        Some(self.horizon)
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

#[derive(Debug, Error)]
pub enum TableIoError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

pub fn write_table<W: Write>(env: &TableEnvironment, out: W) -> Result<(), TableIoError> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let percepts = env.percepts.alphabet();
    let mut rec = vec!["#actions".to_string()];
    rec.extend(env.actions.symbols().iter().cloned());
    w.write_record(&rec)?;
    let mut rec = vec!["#percepts".to_string()];
    rec.extend(percepts.symbols().iter().cloned());
    w.write_record(&rec)?;
    if let Some(r) = env.percepts.rewards() {
        let mut rec = vec!["#rewards".to_string()];
        rec.extend(r.iter().map(render_q));
        w.write_record(&rec)?;
    }
    w.write_record(["#horizon".to_string(), env.horizon.to_string()])?;
    w.write_record(["history", "action", "percept", "numerator", "denominator"])?;
    for ((h, a), masses) in &env.rows {
        for (e, m) in masses.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            w.write_record([
                h.render(&env.actions, percepts),
                env.actions.symbol(*a).to_string(),
                percepts.symbol(e).to_string(),
                m.numer().to_string(),
                m.denom().to_string(),
            ])?;
        }
        if masses.iter().all(Zero::is_zero) {
            // Keep the pair defined even though every percept has mass 0.
            w.write_record([
                h.render(&env.actions, percepts),
                env.actions.symbol(*a).to_string(),
                percepts.symbol(0).to_string(),
                "0".to_string(),
                "1".to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_table<R: Read>(input: R) -> Result<TableEnvironment, TableIoError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut actions = None;
    let mut percepts = None;
    let mut rewards = None;
    let mut horizon = None;
    let mut entries: Vec<(u64, String, String, String, Q)> = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: &str| TableIoError::Malformed {
            line,
            message: message.to_string(),
        };
        match record.get(0).unwrap_or("") {
            "#actions" => actions = Some(Alphabet::new(record.iter().skip(1))?),
            "#percepts" => percepts = Some(Alphabet::new(record.iter().skip(1))?),
            "#rewards" => {
                let r: Result<Vec<Q>, _> = record.iter().skip(1).map(parse_q).collect();
                rewards = Some(r.map_err(|e| bad(&e.to_string()))?);
            }
            "#horizon" => {
                horizon = Some(
                    record
                        .get(1)
                        .and_then(|h| h.trim().parse::<usize>().ok())
                        .ok_or_else(|| bad("horizon must be a nonnegative integer"))?,
                )
            }
            "history" => {}
            _ => {
                if record.len() != 5 {
                    return Err(bad("expected history,action,percept,numerator,denominator"));
                }
                let n = BigInt::from_str(record[3].trim()).map_err(|_| bad("bad numerator"))?;
                let d = BigInt::from_str(record[4].trim()).map_err(|_| bad("bad denominator"))?;
                if d.is_zero() {
                    return Err(bad("zero denominator"));
                }
                entries.push((
                    line,
                    record[0].to_string(),
                    record[1].trim().to_string(),
                    record[2].trim().to_string(),
                    Q::new(n, d),
                ));
            }
        }
    }
    let missing = |what: &str| TableIoError::Malformed {
        line: 0,
        message: format!("missing {what} record"),
    };
    let actions = actions.ok_or_else(|| missing("#actions"))?;
    let percepts = percepts.ok_or_else(|| missing("#percepts"))?;
    let horizon = horizon.ok_or_else(|| missing("#horizon"))?;
    let space = PerceptSpace::new(percepts.clone(), rewards)?;

    let mut rows: BTreeMap<(History, usize), Vec<Q>> = BTreeMap::new();
    for (line, h, a, e, m) in entries {
        let bad = |message: String| TableIoError::Malformed { line, message };
        let history =
            History::parse(&h, &actions, &percepts).ok_or_else(|| bad(format!("bad history {h:?}")))?;
        let a = actions
            .index_of(&a)
            .ok_or_else(|| bad(format!("unknown action {a:?}")))?;
        let e = percepts
            .index_of(&e)
            .ok_or_else(|| bad(format!("unknown percept {e:?}")))?;
        let row = rows
            .entry((history, a))
            .or_insert_with(|| vec![Q::zero(); percepts.len()]);
        row[e] += m;
    }
    let mut builder = TableEnvironment::builder(actions, space, horizon);
    for ((h, a), masses) in rows {
        builder = builder.row(h, a, masses);
    }
    Ok(builder.build()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;
    use crate::environment::{chronology_check, perilous, Step};

    #[test]
    fn tabulated_perilous_round_trips() {
        let env = TableEnvironment::tabulate(&perilous(), 2).unwrap();
        assert_eq!(env.rows().len(), 2 + 2 * 2);
        let mut buf = Vec::new();
        write_table(&env, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#actions,1,2\n#percepts,r1,r2\n#rewards,1/1,2/1\n#horizon,2\n"));
        assert!(text.contains("\n2:r2,2,r2,1,2\n"));
        let back = read_table(buf.as_slice()).unwrap();
        assert_eq!(back.rows(), env.rows());
        assert_eq!(back.percepts(), env.percepts());
        let mut again = Vec::new();
        write_table(&back, &mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn unlisted_pairs_are_undefined() {
        let env = TableEnvironment::tabulate(&perilous(), 1).unwrap();
        let h = History::new(vec![Step::new(0, 0)]);
        assert!(matches!(
            env.conditional(&h, 0),
            Err(EnvError::Undefined { .. })
        ));
        assert!(chronology_check(&env, 1).unwrap().is_empty());
    }

    #[test]
    fn negative_mass_is_rejected() {
        let res = TableEnvironment::builder(
            Alphabet::indexed(1),
            PerceptSpace::without_rewards(Alphabet::binary()),
            1,
        )
        .row(History::empty(), 0, vec![q(-1, 2), q(1, 2)])
        .build();
        assert!(matches!(res, Err(EnvError::NegativeMass { .. })));
    }
}
