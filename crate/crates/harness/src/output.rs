//! CSV output. Floats are written as `{:.11e}` (12 significant digits), `\n` endings,
//! header always present.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::aggregate::Summary;
use crate::error::{HarnessError, Result};
use crate::records::{ScanRow, TrialRecord};

pub const RECORD_HEADER: [&str; 4] = ["trial_id", "t", "metric_name", "value"];
pub const SCAN_HEADER: [&str; 5] = ["lambda", "tau", "value", "bound", "pass"];
pub const SUMMARY_HEADER: [&str; 7] = ["metric_name", "t", "count", "median", "mean", "q10", "q90"];

pub fn format_float(x: f64) -> String {
    format!("{x:.11e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn write_records<W: Write>(w: W, records: &[TrialRecord]) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(RECORD_HEADER)?;
    for r in records {
        out.write_record([
            r.trial_id.to_string(),
            r.t.to_string(),
            r.metric.name().to_owned(),
            format_float(r.value),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_scan<W: Write>(w: W, rows: &[ScanRow]) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(SCAN_HEADER)?;
    for r in rows {
        out.write_record([
            format_float(r.lambda),
            format_float(r.tau),
            format_float(r.value),
            format_float(r.bound),
            r.pass.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(w: W, rows: &[Summary]) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for s in rows {
        out.write_record([
            s.metric.name().to_owned(),
            s.t.to_string(),
            s.count.to_string(),
            format_float(s.median),
            format_float(s.mean),
            format_float(s.q10),
            format_float(s.q90),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_owned(),
        source,
    }
}

pub fn write_records_file(path: &Path, records: &[TrialRecord]) -> Result<()> {
    write_records(std::io::BufWriter::new(create(path)?), records).map_err(csv_err(path))
}

pub fn write_scan_file(path: &Path, rows: &[ScanRow]) -> Result<()> {
    write_scan(std::io::BufWriter::new(create(path)?), rows).map_err(csv_err(path))
}

pub fn write_summary_file(path: &Path, rows: &[Summary]) -> Result<()> {
    write_summary(std::io::BufWriter::new(create(path)?), rows).map_err(csv_err(path))
}

/// Reads back a file written by [`write_records_file`].
pub fn read_records_file(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err(path))?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let parse_err = |what: &str| HarnessError::Config(format!("{}: bad {what} in row {:?}", path.display(), row));
        out.push(TrialRecord {
            trial_id: field(0).parse().map_err(|_| parse_err("trial_id"))?,
            t: field(1).parse().map_err(|_| parse_err("t"))?,
            metric: field(2).parse().map_err(|_| parse_err("metric_name"))?,
            value: field(3).parse().map_err(|_| parse_err("value"))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::Metric;

    #[test]
    fn header_and_line_endings() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[TrialRecord::new(3, 2, Metric::Alpha, 0.5)]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "trial_id,t,metric_name,value\n3,2,alpha,5.00000000000e-1\n");
    }

    #[test]
    fn empty_output_keeps_header() {
        let mut buf = Vec::new();
        write_scan(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "lambda,tau,value,bound,pass\n");
    }
}
