//! Metric CSV files.
//!
//! Floats use Rust's shortest round-trip formatting, which is locale
//! independent; lines end in `\n`.

use std::path::Path;

use crate::error::{Result, ZodiacError};
use crate::optimizer::MetricsRow;

pub const METRICS_HEADER: [&str; 9] = [
    "k",
    "mean_loss",
    "stat_sq",
    "stat_1pg_sq",
    "consensus_err",
    "subopt",
    "oracle_calls",
    "test_acc",
    "wall_ms",
];

fn writer<W: std::io::Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

pub fn write_metrics_csv<W: std::io::Write>(rows: &[MetricsRow<f64>], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            r.mean_loss.to_string(),
            r.stat_sq.to_string(),
            r.stat_1pg_sq.to_string(),
            r.consensus_err.to_string(),
            r.subopt.to_string(),
            r.oracle_calls.to_string(),
            r.test_acc.map(|a| a.to_string()).unwrap_or_default(),
            r.wall_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_file(rows: &[MetricsRow<f64>], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| ZodiacError::Io(format!("{}: {e}", path.display())))?;
    write_metrics_csv(rows, std::io::BufWriter::new(file))
}

/// Per-row arithmetic mean across runs recorded at the same rounds.
pub fn average_rows(runs: &[&[MetricsRow<f64>]]) -> Result<Vec<MetricsRow<f64>>> {
    let first = runs
        .first()
        .ok_or_else(|| ZodiacError::InvalidArgument("nothing to average".into()))?;
    if runs.iter().any(|r| r.len() != first.len()) {
        return Err(ZodiacError::InvalidArgument("runs recorded different row counts".into()));
    }
    let m = runs.len() as f64;
    let mean = |f: &dyn Fn(&MetricsRow<f64>) -> f64, i: usize| runs.iter().map(|r| f(&r[i])).sum::<f64>() / m;
    (0..first.len())
        .map(|i| {
            let k = first[i].k;
            if runs.iter().any(|r| r[i].k != k) {
                return Err(ZodiacError::InvalidArgument(format!("row {i} has mismatched rounds")));
            }
            let acc = runs
                .iter()
                .map(|r| r[i].test_acc)
                .collect::<Option<Vec<f64>>>()
                .map(|v| v.iter().sum::<f64>() / m);
            Ok(MetricsRow {
                k,
                mean_loss: mean(&|r| r.mean_loss, i),
                stat_sq: mean(&|r| r.stat_sq, i),
                stat_1pg_sq: mean(&|r| r.stat_1pg_sq, i),
                consensus_err: mean(&|r| r.consensus_err, i),
                subopt: mean(&|r| r.subopt, i),
                oracle_calls: runs.iter().map(|r| r[i].oracle_calls).sum::<u64>() / runs.len() as u64,
                test_acc: acc,
                wall_ms: runs.iter().map(|r| r[i].wall_ms).sum::<u64>() / runs.len() as u64,
                dual_drift: mean(&|r| r.dual_drift, i),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize, loss: f64, acc: Option<f64>) -> MetricsRow<f64> {
        MetricsRow {
            k,
            mean_loss: loss,
            stat_sq: 2.0 * loss,
            stat_1pg_sq: 3.0 * loss,
            consensus_err: 0.5,
            subopt: 0.0,
            oracle_calls: 10 * k as u64,
            test_acc: acc,
            wall_ms: 0,
            dual_drift: 0.0,
        }
    }

    #[test]
    fn header_and_formatting() {
        let mut buf = Vec::new();
        write_metrics_csv(&[row(0, 0.1, None), row(5, 1e-20, Some(0.75))], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], "k,mean_loss,stat_sq,stat_1pg_sq,consensus_err,subopt,oracle_calls,test_acc,wall_ms");
        assert_eq!(lines[1], "0,0.1,0.2,0.30000000000000004,0.5,0,0,,0");
        assert_eq!(lines[2], "5,0.00000000000000000001,0.00000000000000000002,0.000000000000000000029999999999999997,0.5,0,50,0.75,0");
        assert_eq!(lines[3], "");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn averaging_is_the_arithmetic_mean() {
        let a = [row(0, 1.0, Some(0.5)), row(10, 3.0, Some(1.0))];
        let b = [row(0, 2.0, Some(0.7)), row(10, 5.0, None)];
        let avg = average_rows(&[&a, &b]).unwrap();
        assert_eq!(avg[0].mean_loss, 1.5);
        assert_eq!(avg[1].stat_sq, 8.0);
        assert!((avg[0].test_acc.unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(avg[1].test_acc, None);
        assert_eq!(avg[1].oracle_calls, 100);
        let c = [row(0, 1.0, None)];
        assert!(average_rows(&[&a, &c]).is_err());
    }
}
