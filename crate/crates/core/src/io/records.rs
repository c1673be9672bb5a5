use std::path::Path;

use serde::Serialize;

use super::{write_text, DataError};
use crate::spectra::{RecordFlag, SpectrumRecord};

pub const CSV_HEADER: &str = "q,alpha,p,n_simplices,betti,lambda_min_nonzero";

/// Shortest-form rendering with 6 significant digits, in the manner of C's `%g`.
pub fn format_g(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn sorted(records: &[SpectrumRecord]) -> Vec<&SpectrumRecord> {
    let mut out: Vec<&SpectrumRecord> = records.iter().collect();
    out.sort_by(|a, b| a.q.cmp(&b.q).then(a.alpha.total_cmp(&b.alpha)));
    out
}

/// CSV text, rows sorted by `(q, alpha)`. A `flags` column (values joined by
/// `;`) is appended only when some record carries a flag.
pub fn format_spectra_csv(records: &[SpectrumRecord]) -> String {
    let with_flags = records.iter().any(|r| !r.flags.is_empty());
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let mut header: Vec<&str> = CSV_HEADER.split(',').collect();
    if with_flags {
        header.push("flags");
    }
    w.write_record(&header).expect("in-memory write");
    for r in sorted(records) {
        let mut row = vec![
            r.q.to_string(),
            format_g(r.alpha),
            format_g(r.p),
            r.n_simplices.to_string(),
            r.betti.to_string(),
            r.lambda_min_nonzero.map(format_g).unwrap_or_default(),
        ];
        if with_flags {
            row.push(r.flags.iter().map(RecordFlag::as_str).collect::<Vec<_>>().join(";"));
        }
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

pub fn write_spectra_csv(records: &[SpectrumRecord], path: impl AsRef<Path>) -> Result<(), DataError> {
    write_text(path.as_ref(), &format_spectra_csv(records))
}

pub fn read_spectra_csv(path: impl AsRef<Path>) -> Result<Vec<SpectrumRecord>, DataError> {
    parse_spectra_csv(&super::read_text(path.as_ref())?)
}

/// Inverse of [`format_spectra_csv`]. Eigenvalue lists are not stored in CSV
/// and come back empty.
pub fn parse_spectra_csv(text: &str) -> Result<Vec<SpectrumRecord>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 1;
        let row = row.map_err(|e| DataError::Parse { line, message: e.to_string() })?;
        if i == 0 {
            let header: Vec<&str> = row.iter().collect();
            let base: Vec<&str> = CSV_HEADER.split(',').collect();
            if header[..header.len().min(6)] != base[..] || header.len() > 7 {
                return Err(DataError::Parse { line, message: "unexpected header".into() });
            }
            continue;
        }
        let field = |k: usize| row.get(k).ok_or_else(|| DataError::Parse { line, message: format!("missing field {k}") });
        let int = |k: usize| -> Result<usize, DataError> {
            field(k)?.parse().map_err(|_| DataError::Parse { line, message: format!("invalid integer in field {k}") })
        };
        let float = |k: usize| -> Result<f64, DataError> {
            field(k)?.parse().map_err(|_| DataError::Parse { line, message: format!("invalid number in field {k}") })
        };
        let lambda = if field(5)?.is_empty() { None } else { Some(float(5)?) };
        let flags = match row.get(6) {
            Some(s) if !s.is_empty() => s
                .split(';')
                .map(|f| RecordFlag::parse(f).ok_or_else(|| DataError::Parse { line, message: format!("unknown flag {f:?}") }))
                .collect::<Result<Vec<_>, _>>()?,
            _ => Vec::new(),
        };
        out.push(SpectrumRecord {
            q: int(0)?,
            alpha: float(1)?,
            p: float(2)?,
            eigenvalues: Vec::new(),
            betti: int(4)?,
            lambda_min_nonzero: lambda,
            n_simplices: int(3)?,
            flags,
            failure: None,
        });
    }
    Ok(out)
}

/// How the α values of a run were chosen.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    Uniform { min: f64, max: f64, step: f64 },
    Critical { extra: Vec<f64> },
    List { values: Vec<f64> },
}

/// Run metadata carried in the JSON envelope.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunInfo {
    pub input_sha256: String,
    pub grid: GridSpec,
    pub p: f64,
    pub q: Vec<usize>,
    pub seed: u64,
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    #[serde(flatten)]
    info: &'a RunInfo,
    records: Vec<JsonRecord<'a>>,
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    q: usize,
    alpha: f64,
    p: f64,
    n_simplices: usize,
    betti: usize,
    lambda_min_nonzero: Option<f64>,
    eigenvalues: &'a [f64],
    flags: Vec<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<&'a str>,
}

/// The CSV rows plus full eigenvalue lists, wrapped with run metadata.
pub fn spectra_json(records: &[SpectrumRecord], info: &RunInfo) -> Result<String, DataError> {
    let envelope = Envelope {
        tool: "pslap",
        version: env!("CARGO_PKG_VERSION"),
        info,
        records: sorted(records)
            .into_iter()
            .map(|r| JsonRecord {
                q: r.q,
                alpha: r.alpha,
                p: r.p,
                n_simplices: r.n_simplices,
                betti: r.betti,
                lambda_min_nonzero: r.lambda_min_nonzero,
                eigenvalues: &r.eigenvalues,
                flags: r.flags.iter().map(RecordFlag::as_str).collect(),
                failure: r.failure.as_deref(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    Ok(text)
}

pub fn write_spectra_json(records: &[SpectrumRecord], info: &RunInfo, path: impl AsRef<Path>) -> Result<(), DataError> {
    write_text(path.as_ref(), &spectra_json(records, info)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(q: usize, alpha: f64, betti: usize, lambda: Option<f64>) -> SpectrumRecord {
        SpectrumRecord {
            q,
            alpha,
            p: 0.0,
            eigenvalues: vec![0.0, 1.0],
            betti,
            lambda_min_nonzero: lambda,
            n_simplices: 6,
            flags: Vec::new(),
            failure: None,
        }
    }

    #[test]
    fn g_formatting() {
        assert_eq!(format_g(0.6), "0.6");
        assert_eq!(format_g(1.0), "1");
        assert_eq!(format_g(0.9999999999), "1");
        assert_eq!(format_g(1.585786437626905), "1.58579");
        assert_eq!(format_g(123456789.0), "1.23457e8");
        assert_eq!(format_g(0.000012345678), "1.23457e-5");
        assert_eq!(format_g(-2.5), "-2.5");
        assert_eq!(format_g(-0.0), "0");
        assert_eq!(format_g(100000.0), "100000");
    }

    #[test]
    fn header_only_when_empty() {
        assert_eq!(format_spectra_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn rows_sorted_and_flag_column() {
        let mut recs = vec![record(2, 0.6, 0, Some(3.0)), record(0, 0.6, 1, Some(1.0)), record(0, 0.2, 6, None)];
        let text = format_spectra_csv(&recs);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, [CSV_HEADER, "0,0.2,0,6,6,", "0,0.6,0,6,1,1", "2,0.6,0,6,0,3"]);
        recs[0].flags.push(RecordFlag::GapAmbiguous);
        let text = format_spectra_csv(&recs);
        assert!(text.starts_with(&format!("{CSV_HEADER},flags\n")));
        assert!(text.contains("2,0.6,0,6,0,3,gap_ambiguous\n"));
        assert!(text.contains("0,0.6,0,6,1,1,\n"));
    }

    #[test]
    fn round_trip() {
        let mut recs = vec![record(1, 0.83, 0, Some(2.0 - std::f64::consts::SQRT_2)), record(0, 1.0 / 3.0, 2, None)];
        recs[1].flags = vec![RecordFlag::NotPsd, RecordFlag::PartialSpectrum];
        let once = parse_spectra_csv(&format_spectra_csv(&recs)).unwrap();
        let twice = parse_spectra_csv(&format_spectra_csv(&once)).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once[0].q, 0);
        assert_eq!(once[0].flags, recs[1].flags);
        let lambda = once[1].lambda_min_nonzero.unwrap();
        assert!((lambda - (2.0 - std::f64::consts::SQRT_2)).abs() < 1e-6);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_spectra_csv("a,b\n").is_err());
        assert!(parse_spectra_csv(&format!("{CSV_HEADER}\nx,0.1,0,1,1,\n")).is_err());
    }

    #[test]
    fn json_envelope() {
        let info = RunInfo {
            input_sha256: "ab".into(),
            grid: GridSpec::Uniform { min: 1.0, max: 2.0, step: 0.5 },
            p: 0.0,
            q: vec![0],
            seed: 0,
        };
        let text = spectra_json(&[record(0, 0.6, 1, None)], &info).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["tool"], "pslap");
        assert_eq!(v["grid"]["kind"], "uniform");
        assert_eq!(v["records"][0]["eigenvalues"][1], 1.0);
        assert!(v["records"][0]["lambda_min_nonzero"].is_null());
    }
}
