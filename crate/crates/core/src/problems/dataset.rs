//! Dataset CSV: `agent_id,label,f0,...,f{p-1}`, one row per sample.
//!
//! Held-out test samples use `agent_id = -1`. Values use Rust's shortest
//! round-trip float formatting, so a re-import reproduces the samples bit for
//! bit.

use std::path::Path;

use super::{sigmoid, OracleProblem, Sample};
use crate::error::{Result, ZodiacError};
use crate::scalar::Scalar;

/// `agent_id` marking a held-out test sample.
pub const DATASET_TEST_AGENT: i64 = -1;

pub fn write_dataset_csv<T: Scalar, W: std::io::Write>(problem: &OracleProblem<T>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["agent_id".to_string(), "label".to_string()];
    header.extend((0..problem.dim()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    let mut emit = |agent: i64, s: &Sample<T>| -> Result<()> {
        let mut row = vec![agent.to_string(), s.label.to_string()];
        row.extend(s.features.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
        Ok(())
    };
    for agent in 0..problem.n_agents() {
        for s in problem.samples(agent) {
            emit(agent as i64, s)?;
        }
    }
    for s in problem.test_set() {
        emit(DATASET_TEST_AGENT, s)?;
    }
    w.flush()?;
    Ok(())
}

/// Rebuilds a sigmoid least-squares problem from an exported dataset.
/// Agent ids must be contiguous from zero.
pub fn read_sigmoid_dataset<T: Scalar>(path: &Path) -> Result<OracleProblem<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let dim = r.headers()?.len().checked_sub(2).filter(|d| *d > 0).ok_or_else(|| {
        ZodiacError::InvalidArgument("dataset header needs agent_id, label and features".into())
    })?;
    let mut pools: Vec<Vec<Sample<T>>> = Vec::new();
    let mut test_set = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| ZodiacError::InvalidArgument(format!("dataset row {}: bad {what}", line + 2));
        let agent: i64 = rec[0].trim().parse().map_err(|_| bad("agent_id"))?;
        let label: usize = rec[1].trim().parse().map_err(|_| bad("label"))?;
        let features = rec
            .iter()
            .skip(2)
            .map(|v| v.trim().parse::<f64>().map(T::of).map_err(|_| bad("feature")))
            .collect::<Result<Vec<T>>>()?;
        let sample = Sample { features, label };
        if agent == DATASET_TEST_AGENT {
            test_set.push(sample);
        } else if agent >= 0 {
            let a = agent as usize;
            if pools.len() <= a {
                pools.resize_with(a + 1, Vec::new);
            }
            pools[a].push(sample);
        } else {
            return Err(bad("agent_id"));
        }
    }
    sigmoid::from_samples(dim, pools, test_set)
}
