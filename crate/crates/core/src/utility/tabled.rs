//! Utilities given by an explicit table over every history up to a depth.
//!
//! Rows carry the terminated value and bounds over infinite continuations.
//! Histories deeper than the table inherit the row of their depth-`D`
//! prefix. Values may be negative.
//!
//! ```text
//! #depth,1
//! history,value,lo,hi
//! ,0/1,-1/1,1/1
//! 1:r1,1/2,0/1,1/1
//! ```

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use super::{Bounds, Utility, UtilityError};
use crate::arith::{parse_q, render_q, Q};
use crate::environment::{History, HistoryLayout};
use crate::semimeasure::Alphabet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub value: Q,
    pub bounds: Bounds,
}

/// Envelope and oscillation at one history for a fixed target depth.
#[derive(Debug, Clone)]
struct Spread {
    envelope: Bounds,
    oscillation: Bounds,
}

#[derive(Debug)]
pub struct TabledUtility {
    name: String,
    layout: HistoryLayout,
    depth: usize,
    rows: BTreeMap<History, Row>,
    finite_range: BTreeMap<History, Bounds>,
    spreads: Mutex<HashMap<usize, Arc<BTreeMap<History, Spread>>>>,
}

impl Clone for TabledUtility {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            layout: self.layout,
            depth: self.depth,
            rows: self.rows.clone(),
            finite_range: self.finite_range.clone(),
            spreads: Mutex::new(HashMap::new()),
        }
    }
}

impl PartialEq for TabledUtility {
    fn eq(&self, other: &Self) -> bool {
        self.layout == other.layout && self.depth == other.depth && self.rows == other.rows
    }
}

impl TabledUtility {
    /// Validates completeness up to `depth`, `lo ≤ hi`, and nesting of the
    /// bounds under one-step extension.
    pub fn new(
        name: impl Into<String>,
        layout: HistoryLayout,
        depth: usize,
        rows: BTreeMap<History, Row>,
    ) -> Result<Self, UtilityError> {
        let table_err = |history: &History, message: &str| UtilityError::Table {
            history: history.clone(),
            message: message.to_string(),
        };
        let mut expected = 0usize;
        for len in 0..=depth {
            for h in layout.continuations(&History::empty(), len) {
                expected += 1;
                let row = rows.get(&h).ok_or_else(|| table_err(&h, "missing row"))?;
                if row.bounds.lo > row.bounds.hi {
                    return Err(table_err(&h, "lo exceeds hi"));
                }
                if let Some(parent) = (len > 0).then(|| h.prefix(len - 1)) {
                    let p = &rows[&parent].bounds;
                    if row.bounds.lo < p.lo || row.bounds.hi > p.hi {
                        return Err(table_err(&h, "bounds are not nested in the parent's"));
                    }
                }
            }
        }
        if rows.len() != expected {
            let extra = rows
                .keys()
                .find(|h| h.len() > depth || h.steps().iter().any(|s| s.action >= layout.actions || s.percept >= layout.percepts))
                .cloned()
                .unwrap_or_default();
            return Err(table_err(&extra, "row outside the table"));
        }

        let mut finite_range: BTreeMap<History, Bounds> = BTreeMap::new();
        for (h, row) in rows.iter().rev() {
            // Reverse canonical order visits every extension before its prefix.
            let mut range = Bounds::point(row.value.clone());
            if h.len() < depth {
                for s in 0..layout.symbols() {
                    let child = h.extended(layout.decode_step(s));
                    range = range.hull(&finite_range[&child]);
                }
            }
            finite_range.insert(h.clone(), range);
        }

        Ok(Self {
            name: name.into(),
            layout,
            depth,
            rows,
            finite_range,
            spreads: Mutex::new(HashMap::new()),
        })
    }

    /// Builds a table from `f(h) = (value, lo, hi)`.
    pub fn tabulate(
        name: impl Into<String>,
        layout: HistoryLayout,
        depth: usize,
        f: impl Fn(&History) -> (Q, Q, Q),
    ) -> Result<Self, UtilityError> {
        let mut rows = BTreeMap::new();
        for len in 0..=depth {
            for h in layout.continuations(&History::empty(), len) {
                let (value, lo, hi) = f(&h);
                if lo > hi {
                    return Err(UtilityError::Table {
                        history: h,
                        message: "lo exceeds hi".into(),
                    });
                }
                rows.insert(h, Row {
                    value,
                    bounds: Bounds { lo, hi },
                });
            }
        }
        Self::new(name, layout, depth, rows)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn layout(&self) -> HistoryLayout {
        self.layout
    }

    pub fn rows(&self) -> &BTreeMap<History, Row> {
        &self.rows
    }

    fn row(&self, history: &History) -> &Row {
        let h = if history.len() > self.depth {
            history.prefix(self.depth)
        } else {
            history.clone()
        };
        &self.rows[&h]
    }

    fn spreads(&self, target: usize) -> Arc<BTreeMap<History, Spread>> {
        let mut cache = self.spreads.lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry(target)
            .or_insert_with(|| {
                let mut out: BTreeMap<History, Spread> = BTreeMap::new();
                for (h, row) in self.rows.range(..).rev() {
                    if h.len() > target {
                        continue;
                    }
                    let spread = if h.len() == target {
                        Spread {
                            envelope: row.bounds.clone(),
                            oscillation: row.bounds.clone(),
                        }
                    } else {
                        let children: Vec<&Spread> = (0..self.layout.symbols())
                            .map(|s| &out[&h.extended(self.layout.decode_step(s))])
                            .collect();
                        let lo = children.iter().map(|c| &c.envelope.lo).min().unwrap().clone();
                        let hi = children.iter().map(|c| &c.envelope.hi).min().unwrap().clone();
                        let osc = children
                            .iter()
                            .skip(1)
                            .fold(children[0].oscillation.clone(), |acc, c| acc.hull(&c.oscillation));
                        Spread {
                            envelope: Bounds { lo, hi },
                            oscillation: osc,
                        }
                    };
                    out.insert(h.clone(), spread);
                }
                Arc::new(out)
            })
            .clone()
    }

    fn spread(&self, history: &History, depth: usize) -> Result<Spread, UtilityError> {
        if history.len() > depth {
            return Err(UtilityError::PrefixTooLong {
                len: history.len(),
                depth,
            });
        }
        let target = depth.min(self.depth);
        if history.len() >= target {
            let b = self.row(history).bounds.clone();
            return Ok(Spread {
                envelope: b.clone(),
                oscillation: b,
            });
        }
        Ok(self.spreads(target)[history].clone())
    }
}

impl Utility for TabledUtility {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn on_finite(&self, history: &History) -> Q {
        self.row(history).value.clone()
    }

    fn bounds(&self, history: &History) -> Bounds {
        self.row(history).bounds.clone()
    }

    fn extended_bounds(&self, history: &History) -> Bounds {
        let row = self.row(history);
        if history.len() >= self.depth {
            return row.bounds.hull(&Bounds::point(row.value.clone()));
        }
        row.bounds.hull(&self.finite_range[history])
    }

    fn envelope(
        &self,
        history: &History,
        depth: usize,
        _layout: HistoryLayout,
    ) -> Result<Bounds, UtilityError> {
        Ok(self.spread(history, depth)?.envelope)
    }

    fn oscillation(
        &self,
        history: &History,
        depth: usize,
        _layout: HistoryLayout,
    ) -> Result<Bounds, UtilityError> {
        Ok(self.spread(history, depth)?.oscillation)
    }
}

#[derive(Debug, Error)]
pub enum TabledIoError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Utility(#[from] UtilityError),
}

pub fn write_tabled<W: Write>(
    u: &TabledUtility,
    actions: &Alphabet,
    percepts: &Alphabet,
    out: W,
) -> Result<(), TabledIoError> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(["#depth".to_string(), u.depth.to_string()])?;
    w.write_record(["history", "value", "lo", "hi"])?;
    for (h, row) in &u.rows {
        w.write_record([
            h.render(actions, percepts),
            render_q(&row.value),
            render_q(&row.bounds.lo),
            render_q(&row.bounds.hi),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_tabled<R: Read>(
    input: R,
    name: impl Into<String>,
    actions: &Alphabet,
    percepts: &Alphabet,
) -> Result<TabledUtility, TabledIoError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut depth = None;
    let mut rows = BTreeMap::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| TabledIoError::Malformed { line, message };
        match record.get(0).unwrap_or("") {
            "#depth" => {
                depth = Some(
                    record
                        .get(1)
                        .and_then(|d| d.trim().parse::<usize>().ok())
                        .ok_or_else(|| bad("depth must be a nonnegative integer".into()))?,
                );
            }
            "history" => {}
            text => {
                if record.len() != 4 {
                    return Err(bad("expected history,value,lo,hi".into()));
                }
                let h = History::parse(text, actions, percepts)
                    .ok_or_else(|| bad(format!("bad history {text:?}")))?;
                let num = |i: usize| parse_q(&record[i]).map_err(|e| bad(e.to_string()));
                let (value, lo, hi) = (num(1)?, num(2)?, num(3)?);
                if lo > hi {
                    return Err(bad("lo exceeds hi".into()));
                }
                if rows
                    .insert(h, Row {
                        value,
                        bounds: Bounds { lo, hi },
                    })
                    .is_some()
                {
                    return Err(bad(format!("duplicate history {text:?}")));
                }
            }
        }
    }
    let depth = depth.ok_or(TabledIoError::Malformed {
        line: 0,
        message: "missing #depth record".into(),
    })?;
    let layout = HistoryLayout::new(actions.len(), percepts.len());
    Ok(TabledUtility::new(name, layout, depth, rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{q, qi};
    use crate::utility::for_each_continuation;

    /// Signed table on a 2×1 layout: bounds shrink by the first two actions.
    fn sample() -> TabledUtility {
        let layout = HistoryLayout::new(2, 1);
        TabledUtility::tabulate("sample", layout, 2, |h| {
            let ones = h.steps().iter().filter(|s| s.action == 1).count() as i64;
            let zeros = h.len() as i64 - ones;
            let value = qi(ones) - qi(2 * zeros);
            let lo = qi(-2) + qi(ones);
            let hi = qi(2) - qi(zeros);
            (value, lo, hi)
        })
        .unwrap()
    }

    #[test]
    fn envelope_matches_enumeration() {
        let u = sample();
        let layout = u.layout();
        for target in 0..4 {
            for len in 0..=target.min(2) {
                for h in layout.continuations(&History::empty(), len) {
                    let mut lo: Option<Q> = None;
                    let mut hi_min: Option<Q> = None;
                    let mut osc: Option<Bounds> = None;
                    for_each_continuation(&h, target, layout, |c| {
                        let b = u.bounds(c);
                        lo = Some(lo.take().map_or(b.lo.clone(), |l| l.min(b.lo.clone())));
                        hi_min = Some(hi_min.take().map_or(b.hi.clone(), |m| m.min(b.hi.clone())));
                        osc = Some(osc.take().map_or(b.clone(), |o| o.hull(&b)));
                    })
                    .unwrap();
                    let env = u.envelope(&h, target, layout).unwrap();
                    assert_eq!(env, Bounds::new(lo.unwrap(), hi_min.unwrap()));
                    assert_eq!(u.oscillation(&h, target, layout).unwrap(), osc.unwrap());
                }
            }
        }
    }

    #[test]
    fn extended_bounds_include_deeper_finite_values() {
        let u = sample();
        let b = u.extended_bounds(&History::empty());
        assert_eq!(b, Bounds::new(qi(-4), qi(2)));
        let deep = History::from_pairs(&[(1, 0), (1, 0), (0, 0)]);
        assert_eq!(u.on_finite(&deep), qi(2));
        assert_eq!(u.bounds(&deep), Bounds::new(qi(0), qi(2)));
    }

    #[test]
    fn unnested_tables_are_rejected() {
        let layout = HistoryLayout::new(1, 1);
        let res = TabledUtility::tabulate("bad", layout, 1, |h| {
            if h.is_empty() {
                (qi(0), qi(0), qi(1))
            } else {
                (qi(0), q(-1, 2), qi(1))
            }
        });
        assert!(matches!(res, Err(UtilityError::Table { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let u = sample();
        let a = Alphabet::new(["x", "y"]).unwrap();
        let e = Alphabet::new(["o"]).unwrap();
        let mut buf = Vec::new();
        write_tabled(&u, &a, &e, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#depth,2\nhistory,value,lo,hi\n,0/1,-2/1,2/1\n"));
        let back = read_tabled(buf.as_slice(), "sample", &a, &e).unwrap();
        assert_eq!(back, u);
    }
}
