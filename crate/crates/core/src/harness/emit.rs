//! Result tables and trace files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::experiment::ExperimentOutput;
use crate::harness::metrics::MetricsRecord;
use crate::primal_dual::{IterationRecord, RunReport};

pub fn write_records_csv(records: &[MetricsRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records_csv(path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Serialize, Deserialize)]
pub struct TraceDocument {
    pub key: String,
    pub records: Vec<IterationRecord>,
}

pub fn write_trace_json(key: &str, records: &[IterationRecord], path: &Path) -> Result<()> {
    let doc = TraceDocument {
        key: key.to_string(),
        records: records.to_vec(),
    };
    let text = serde_json::to_string_pretty(&doc)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_trace_json(path: &Path) -> Result<TraceDocument> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_report_json(report: &RunReport, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `results.csv` and one trace file per iterative run under
/// `dir/traces`.
pub fn emit_experiment(output: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_records_csv(&output.records(), &dir.join("results.csv"))?;
    let traces = dir.join("traces");
    if output.runs.iter().any(|r| r.trace.is_some()) {
        fs::create_dir_all(&traces).map_err(|e| Error::io(&traces, e))?;
    }
    for run in &output.runs {
        if let Some(trace) = &run.trace {
            let key = run.key();
            write_trace_json(&key, trace, &traces.join(format!("{key}.json")))?;
        }
    }
    Ok(())
}
