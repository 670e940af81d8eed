//! JSON and CSV report files.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use curvdecay::report::{Status, VerificationReport};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    fn file_name(self) -> &'static str {
        match self {
            Format::Json => "reports.json",
            Format::Csv => "reports.csv",
        }
    }
}

/// Seventeen significant digits: enough to round-trip every `f64`, and
/// the same text on every platform.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty printer that writes floats with [`format_f64`].
struct FixedDigits<'a>(PrettyFormatter<'a>);

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_f64(v).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json(reports: &[VerificationReport]) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits(PrettyFormatter::new()));
    reports.serialize(&mut ser).expect("reports serialize to memory");
    buf.push(b'\n');
    buf
}

fn status_str(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::NumericalFailure => "NUMERICAL_FAILURE",
    }
}

pub fn write_csv<W: Write>(reports: &[VerificationReport], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["scenario_id", "key", "value", "status"])?;
    for r in reports {
        for (k, v) in &r.computed {
            out.write_record([r.scenario_id.as_str(), k, &format_f64(*v), status_str(r.status)])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Write `reports.json` or `reports.csv` into `out_dir`, creating it if needed.
pub fn emit_report(reports: &[VerificationReport], format: Format, out_dir: &Path) -> Result<PathBuf, CliError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let path = out_dir.join(format.file_name());
    match format {
        Format::Json => fs::write(&path, to_json(reports)).map_err(io_err(&path))?,
        Format::Csv => {
            let file = File::create(&path).map_err(io_err(&path))?;
            write_csv(reports, BufWriter::new(file)).map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(source) => CliError::Io { path: path.clone(), source },
                other => CliError::Runtime(format!("{}: {other:?}", path.display())),
            })?;
        }
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str) -> VerificationReport {
        let mut r = VerificationReport::new("constants");
        r.scenario_id = id.into();
        r.inputs = serde_json::json!({ "profile": { "kind": "euler", "params": [2.0] } });
        r.record("b1", 0.1 + 0.2).record("B", 2.0).tolerance("equality", 1e-8);
        r
    }

    #[test]
    fn json_round_trips_exactly() {
        let reps = vec![sample("a")];
        let text = to_json(&reps);
        let back: Vec<VerificationReport> = serde_json::from_slice(&text).unwrap();
        assert_eq!(back, reps);
        let s = String::from_utf8(text).unwrap();
        assert!(s.contains("3.0000000000000004e-1"), "{s}");
        assert!(s.contains("\"status\": \"PASS\""));
    }

    #[test]
    fn empty_outputs() {
        assert_eq!(String::from_utf8(to_json(&[])).unwrap(), "[]\n");
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "scenario_id,key,value,status\n");
    }

    #[test]
    fn csv_rows_follow_report_and_key_order() {
        let mut buf = Vec::new();
        let mut c = sample("c");
        c.fail("x");
        write_csv(&[sample("b"), sample("a"), c], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[1], "b,B,2.0000000000000000e0,PASS");
        assert_eq!(lines[4], "a,b1,3.0000000000000004e-1,PASS");
        assert_eq!(lines[6], "c,b1,3.0000000000000004e-1,FAIL");
    }
}
