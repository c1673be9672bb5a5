use std::io::Write;
use std::path::{Path, PathBuf};

use pslap_core::alpha::{assign_filtration, critical_alphas, FiltrationError};
use pslap_core::geometry::{delaunay, GeometryError};
use pslap_core::io::{self, CurveStyle, DataError, GridSpec, RunInfo};
use pslap_core::oracle::triple_agreement;
use pslap_core::spectra::{accumulated_laplacian_diagonal, detect_anomalies, sweep};
use pslap_core::{FilteredComplex, PointSet, RecordFlag, SpectralPolicy, SpectrumRecord};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::args::{AccumulateArgs, AnomalyArgs, Format, GridArgs, InputArgs, SpectraArgs, ValidateArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Filtration(#[from] FiltrationError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{failed} of {total} spectra failed; first failure: {first}")]
    Solver { failed: usize, total: usize, first: String },
    #[error("{disagreeing} of {total} cells disagree")]
    Disagreement { disagreeing: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Data(DataError::Geometry(_)) | CliError::Geometry(_) | CliError::Filtration(_) => 2,
            CliError::Data(_) | CliError::Usage(_) | CliError::Write { .. } => 1,
            CliError::Solver { .. } => 3,
            CliError::Disagreement { .. } => 4,
        }
    }
}

struct Loaded {
    points: PointSet,
    complex: FilteredComplex,
    sha256: String,
}

fn load(args: &InputArgs) -> Result<Loaded, CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let bytes = std::fs::read(&args.input)
        .map_err(|source| DataError::Io { path: args.input.clone(), source })?;
    let sha256: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Usage(format!("{} is not valid UTF-8", args.input.display())))?;
    let format = args.format.unwrap_or_else(|| infer_format(&args.input));
    let points = match format {
        Format::Xyz => io::parse_xyz(&text)?,
        Format::Pdb => io::parse_pdb_ca(&text, args.chain)?,
    };
    let tess = delaunay(&points, args.seed)?;
    let complex = assign_filtration(&tess, &points)?;
    Ok(Loaded { points, complex, sha256 })
}

fn infer_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("pdb" | "ent") => Format::Pdb,
        _ => Format::Xyz,
    }
}

fn alpha_values(grid: &GridArgs, complex: &FilteredComplex) -> Result<(Vec<f64>, GridSpec), CliError> {
    if grid.alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(CliError::Usage("--alpha values must be finite and non-negative".into()));
    }
    if grid.critical {
        let mut values = critical_alphas(complex);
        values.extend(&grid.alpha);
        values.sort_by(f64::total_cmp);
        values.dedup();
        return Ok((values, GridSpec::Critical { extra: grid.alpha.clone() }));
    }
    if !grid.alpha.is_empty() {
        let mut values = grid.alpha.clone();
        values.sort_by(f64::total_cmp);
        values.dedup();
        return Ok((values, GridSpec::List { values: grid.alpha.clone() }));
    }
    let (min, max, step) = (grid.alpha_min, grid.alpha_max, grid.step);
    if !(min.is_finite() && max.is_finite() && min >= 0.0 && max >= min) {
        return Err(CliError::Usage("need 0 <= --alpha-min <= --alpha-max".into()));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(CliError::Usage("--step must be positive".into()));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize + 1;
    let values = (0..n).map(|i| min + i as f64 * step).collect();
    Ok((values, GridSpec::Uniform { min, max, step }))
}

fn check_orders(q: &[usize]) -> Result<(), CliError> {
    if q.is_empty() || q.iter().any(|&q| q > pslap_core::MAX_DIM) {
        return Err(CliError::Usage(format!("--q entries must lie in 0..={}", pslap_core::MAX_DIM)));
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Write { path: path.to_owned(), source })
}

fn stdout_text(text: &str) -> Result<(), CliError> {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|source| CliError::Write { path: "<stdout>".into(), source })
}

fn svg_path(base: &Path, q: usize, several: bool) -> PathBuf {
    if !several {
        return base.to_owned();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_q{q}.{}", ext.to_string_lossy()),
        None => format!("{stem}_q{q}"),
    };
    base.with_file_name(name)
}

fn fixed4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

fn show_record(r: &SpectrumRecord) -> String {
    let spectrum: Vec<String> = r.eigenvalues.iter().copied().map(fixed4).collect();
    let lambda = r.lambda_min_nonzero.map_or("-".to_string(), fixed4);
    let mut line = format!(
        "q={} alpha={} p={} n={} betti={} lambda={} spectrum={{{}}}",
        r.q,
        io::format_g(r.alpha),
        io::format_g(r.p),
        r.n_simplices,
        r.betti,
        lambda,
        spectrum.join(", ")
    );
    if !r.flags.is_empty() {
        let flags: Vec<&str> = r.flags.iter().map(RecordFlag::as_str).collect();
        line.push_str(&format!(" flags={}", flags.join(";")));
    }
    line
}

pub fn spectra(args: &SpectraArgs) -> Result<(), CliError> {
    check_orders(&args.q)?;
    if !(args.p.is_finite() && args.p >= 0.0) {
        return Err(CliError::Usage("--p must be finite and non-negative".into()));
    }
    let loaded = load(&args.input)?;
    let (alphas, grid) = alpha_values(&args.grid, &loaded.complex)?;
    let policy = SpectralPolicy { seed: args.input.seed, ..SpectralPolicy::default() };
    let records = sweep(&loaded.complex, &alphas, &args.q, args.p, &policy);

    let csv = io::format_spectra_csv(&records);
    match &args.out {
        Some(path) => write_file(path, &csv)?,
        None if !args.show_spectra => stdout_text(&csv)?,
        None => {}
    }
    if args.show_spectra {
        let lines: String = records.iter().map(|r| show_record(r) + "\n").collect();
        stdout_text(&lines)?;
    }
    if let Some(base) = &args.svg {
        let mut orders = args.q.clone();
        orders.sort_unstable();
        orders.dedup();
        for &q in &orders {
            let subset: Vec<SpectrumRecord> = records.iter().filter(|r| r.q == q).cloned().collect();
            let style = CurveStyle { title: Some(format!("q = {q}, p = {}", io::format_g(args.p))), ..CurveStyle::default() };
            write_file(&svg_path(base, q, orders.len() > 1), &io::curves_svg(&subset, &style)?)?;
        }
    }
    if let Some(path) = &args.json {
        let info = RunInfo { input_sha256: loaded.sha256.clone(), grid, p: args.p, q: args.q.clone(), seed: args.input.seed };
        write_file(path, &io::spectra_json(&records, &info)?)?;
    }

    let failed: Vec<&SpectrumRecord> = records.iter().filter(|r| r.has_flag(RecordFlag::Failed)).collect();
    if let Some(first) = failed.first() {
        return Err(CliError::Solver {
            failed: failed.len(),
            total: records.len(),
            first: first.failure.clone().unwrap_or_default(),
        });
    }
    Ok(())
}

pub fn validate(args: &ValidateArgs) -> Result<(), CliError> {
    check_orders(&args.q)?;
    let loaded = load(&args.input)?;
    let c = &loaded.complex;
    let alphas = critical_alphas(c);
    let p_list = if args.p.is_empty() {
        let span = alphas.last().copied().unwrap_or(0.0) - alphas.first().copied().unwrap_or(0.0);
        vec![0.0, span / 3.0, 2.0 * span / 3.0]
    } else {
        args.p.clone()
    };
    let policy = SpectralPolicy { seed: args.input.seed, ..SpectralPolicy::default() };
    let cells = triple_agreement(c, &args.q, &alphas, &p_list, &policy);

    let mut out = String::new();
    out.push_str("q\talpha\tp\tspectral\tbarcode\texact\tstatus\n");
    for cell in &cells {
        if args.quiet && cell.agrees() {
            continue;
        }
        out.push_str(&format!(
            "{}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}\n",
            cell.q,
            cell.alpha,
            cell.p,
            cell.spectral,
            cell.barcode,
            cell.exact.map_or("-".to_string(), |e| e.to_string()),
            if cell.agrees() { "PASS" } else { "FAIL" }
        ));
    }
    let mut orders = args.q.clone();
    orders.sort_unstable();
    orders.dedup();
    for q in orders {
        let at_zero: Vec<_> = cells.iter().filter(|c| c.q == q && c.p == 0.0).collect();
        for (i, cell) in at_zero.iter().enumerate() {
            if cell.barcode == 0 || (i > 0 && at_zero[i - 1].barcode == cell.barcode) {
                continue;
            }
            let end = at_zero[i + 1..].iter().find(|c| c.barcode != cell.barcode);
            out.push_str(&format!(
                "beta_{q} = {} on [{:.6}, {})\n",
                cell.barcode,
                cell.alpha,
                end.map_or("inf".to_string(), |e| format!("{:.6}", e.alpha))
            ));
        }
    }
    let disagreeing = cells.iter().filter(|c| !c.agrees()).count();
    let skipped = cells.iter().filter(|c| c.exact.is_none()).count();
    if disagreeing == 0 {
        out.push_str(&format!("PASS: {} cells agree", cells.len()));
    } else {
        out.push_str(&format!("FAIL: {disagreeing} of {} cells disagree", cells.len()));
    }
    if skipped > 0 {
        out.push_str(&format!(" ({skipped} without exact rank: size limit)"));
    }
    out.push('\n');
    stdout_text(&out)?;
    if disagreeing > 0 {
        return Err(CliError::Disagreement { disagreeing, total: cells.len() });
    }
    Ok(())
}

fn label(points: &PointSet, i: usize) -> String {
    points.labels().map_or_else(|| i.to_string(), |l| l[i].clone())
}

pub fn anomaly(args: &AnomalyArgs) -> Result<(), CliError> {
    if !(args.threshold.is_finite() && args.threshold > 0.0) {
        return Err(CliError::Usage("--threshold must be positive".into()));
    }
    let loaded = load(&args.input)?;
    let found = detect_anomalies(&loaded.complex, &loaded.points, args.threshold);
    let mut out = String::new();
    if found.is_empty() {
        out.push_str("no anomalies\n");
    }
    for a in &found {
        out.push_str(&format!("{}\t{}\t{:.6}\n", label(&loaded.points, a.a), label(&loaded.points, a.b), a.distance));
    }
    stdout_text(&out)
}

pub fn accumulate(args: &AccumulateArgs) -> Result<(), CliError> {
    let loaded = load(&args.input)?;
    let (alphas, _) = alpha_values(&args.grid, &loaded.complex)?;
    let values = accumulated_laplacian_diagonal(&loaded.complex, &alphas);
    let mut out = String::from("vertex,label,x,y,z,value\n");
    for (i, v) in values.iter().enumerate() {
        let p = loaded.points.point(i);
        let l = loaded.points.labels().map_or("", |l| l[i].as_str());
        out.push_str(&format!("{i},{l},{},{},{},{v}\n", p[0], p[1], p[2]));
    }
    match &args.out {
        Some(path) => write_file(path, &out),
        None => stdout_text(&out),
    }
}
