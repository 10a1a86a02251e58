//! Canonical text table for rational trees.
//!
//! ```text
//! #alphabet,0,1
//! #horizon,2
//! node,numerator,denominator
//! ,1,1
//! 0,1,4
//! 0.0,1,8
//! ```
//!
//! Nodes are written as dotted symbol indices (empty for the root) in
//! canonical order; rewriting a parsed file reproduces it byte for byte.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use super::{Alphabet, AlphabetError, FiniteString, PreSemimeasureTree, TreeError};
use crate::arith::Q;

#[derive(Debug, Error)]
pub enum TreeIoError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

pub fn write_tree<W: Write>(tree: &PreSemimeasureTree<Q>, out: W) -> Result<(), TreeIoError> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let mut header = vec!["#alphabet".to_string()];
    header.extend(tree.alphabet().symbols().iter().cloned());
    w.write_record(&header)?;
    w.write_record(["#horizon", &tree.horizon().to_string()])?;
    w.write_record(["node", "numerator", "denominator"])?;
    for (x, m) in tree.nodes() {
        w.write_record([x.to_indices(), m.numer().to_string(), m.denom().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tree<R: Read>(input: R) -> Result<PreSemimeasureTree<Q>, TreeIoError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut alphabet = None;
    let mut horizon = None;
    let mut masses = BTreeMap::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: &str| TreeIoError::Malformed {
            line,
            message: message.to_string(),
        };
        match record.get(0).unwrap_or("") {
            "#alphabet" => {
                alphabet = Some(Alphabet::new(record.iter().skip(1))?);
            }
            "#horizon" => {
                let h = record
                    .get(1)
                    .and_then(|h| h.trim().parse::<usize>().ok())
                    .ok_or_else(|| bad("horizon must be a nonnegative integer"))?;
                horizon = Some(h);
            }
            "node" => {}
            node => {
                if record.len() != 3 {
                    return Err(bad("expected node,numerator,denominator"));
                }
                let x = FiniteString::parse_indices(node).ok_or_else(|| bad("bad node"))?;
                let n = BigInt::from_str(record[1].trim()).map_err(|_| bad("bad numerator"))?;
                let d = BigInt::from_str(record[2].trim()).map_err(|_| bad("bad denominator"))?;
                if d.is_zero() {
                    return Err(bad("zero denominator"));
                }
                if masses.insert(x, Q::new(n, d)).is_some() {
                    return Err(bad("duplicate node"));
                }
            }
        }
    }
    let alphabet = alphabet.ok_or(TreeIoError::Malformed {
        line: 0,
        message: "missing #alphabet record".into(),
    })?;
    let horizon = horizon.ok_or(TreeIoError::Malformed {
        line: 0,
        message: "missing #horizon record".into(),
    })?;
    Ok(PreSemimeasureTree::new(alphabet, horizon, masses)?)
}

#[cfg(test)]
mod tests {
    use super::super::tests::example8;
    use super::*;

    #[test]
    fn example8_table_is_canonical() {
        let mut buf = Vec::new();
        write_tree(&example8(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "#alphabet,0,1\n#horizon,2\nnode,numerator,denominator\n,1,1\n0,1,4\n0.0,1,8\n0.1,1,8\n1,1,4\n1.0,1,8\n1.1,1,8\n"
        );
        let back = read_tree(buf.as_slice()).unwrap();
        assert_eq!(back, example8());
    }

    #[test]
    fn malformed_rows_are_reported() {
        let text = "#alphabet,0,1\n#horizon,1\n,1,1\n0,1\n";
        assert!(matches!(
            read_tree(text.as_bytes()),
            Err(TreeIoError::Malformed { .. })
        ));
        let missing = "#alphabet,0,1\n#horizon,1\n,1,1\n0,1,2\n";
        assert!(matches!(
            read_tree(missing.as_bytes()),
            Err(TreeIoError::Tree(TreeError::MissingNode(_)))
        ));
    }
}
