//! CSV exports of sampling traces and visit-state snapshots.
//!
//! Trace: `iteration,sample_id,difficulty,strategy`, one row per drawn sample.
//! Visits: `iteration,class,count`, one row per class per snapshot.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Strategy, VisitState};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: u64,
    pub sample_id: String,
    pub difficulty: f64,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitRow {
    pub iteration: u64,
    pub class: String,
    pub count: u64,
}

impl VisitRow {
    /// One row per class for the given state.
    pub fn snapshot(state: &VisitState, classes: &[String]) -> Vec<VisitRow> {
        classes
            .iter()
            .zip(state.counts())
            .map(|(class, &count)| VisitRow {
                iteration: state.iteration(),
                class: class.clone(),
                count,
            })
            .collect()
    }
}

pub fn write_rows<T: Serialize>(out: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(input: impl Read) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_header_matches_schema() {
        let rows = vec![TraceRow {
            iteration: 3,
            sample_id: "s1".into(),
            difficulty: -0.25,
            strategy: Strategy::DiverseCurriculum,
        }];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "iteration,sample_id,difficulty,strategy\n3,s1,-0.25,diverse_curriculum\n"
        );
        let back: Vec<TraceRow> = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn visit_snapshot_rows() {
        let state = VisitState::from_parts(vec![5, 0], 2);
        let rows = VisitRow::snapshot(&state, &["person".into(), "table".into()]);
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iteration,class,count\n2,person,5\n2,table,0\n"
        );
    }
}
