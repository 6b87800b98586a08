//! Convergence traces as CSV with header `iter,rel_primal,rel_dual,rel_gap,kkt`.

use std::io::{Read, Write};
use std::path::Path;

use olpdhg_core::solver::TracePoint;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Row {
    iter: usize,
    rel_primal: f64,
    rel_dual: f64,
    rel_gap: f64,
    kkt: f64,
}

impl From<&TracePoint> for Row {
    fn from(t: &TracePoint) -> Self {
        Row {
            iter: t.iter,
            rel_primal: t.rel_primal,
            rel_dual: t.rel_dual,
            rel_gap: t.rel_gap,
            kkt: t.kkt,
        }
    }
}

pub fn write_trace<W: Write>(out: W, trace: &[TracePoint]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if trace.is_empty() {
        w.write_record(["iter", "rel_primal", "rel_dual", "rel_gap", "kkt"])?;
    }
    for t in trace {
        w.serialize(Row::from(t))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &[TracePoint]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    write_trace(std::fs::File::create(path)?, trace)?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> csv::Result<Vec<TracePoint>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<Row>()
        .map(|row| {
            row.map(|r| TracePoint {
                iter: r.iter,
                rel_primal: r.rel_primal,
                rel_dual: r.rel_dual,
                rel_gap: r.rel_gap,
                kkt: r.kkt,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_round_trip() {
        let pts = vec![
            TracePoint {
                iter: 10,
                rel_primal: 0.5,
                rel_dual: 1e-3,
                rel_gap: 0.0,
                kkt: 0.500_000_999_999,
            },
            TracePoint {
                iter: 20,
                rel_primal: 1e-5,
                rel_dual: 2e-5,
                rel_gap: 3e-5,
                kkt: 3.7416573867739413e-5,
            },
        ];
        let mut buf = Vec::new();
        write_trace(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("iter,rel_primal,rel_dual,rel_gap,kkt\n"));
        assert_eq!(read_trace(buf.as_slice()).unwrap(), pts);

        let mut empty = Vec::new();
        write_trace(&mut empty, &[]).unwrap();
        assert_eq!(
            String::from_utf8(empty).unwrap(),
            "iter,rel_primal,rel_dual,rel_gap,kkt\n"
        );
    }
}
