use std::path::Path;

use super::{read_text, DataError};
use crate::geometry::PointSet;

pub fn read_xyz(path: impl AsRef<Path>) -> Result<PointSet, DataError> {
    parse_xyz(&read_text(path.as_ref())?)
}

/// One point per line, 2 or 3 whitespace-separated numbers. Blank lines and
/// lines starting with `#` are skipped; the first data line fixes the dimension.
pub fn parse_xyz(text: &str) -> Result<PointSet, DataError> {
    let mut dim = None;
    let mut coords = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let found = fields.len();
        if found != 2 && found != 3 {
            return Err(DataError::Parse { line: i + 1, message: format!("expected 2 or 3 fields, found {found}") });
        }
        let expected = *dim.get_or_insert(found);
        if found != expected {
            return Err(DataError::MixedDimensions { line: i + 1, expected, found });
        }
        let mut p = [0.0; 3];
        for (k, f) in fields.iter().enumerate() {
            p[k] = parse_number(f, i + 1)?;
        }
        coords.push(p);
    }
    Ok(PointSet::new(dim.unwrap_or(3), coords)?)
}

fn parse_number(field: &str, line: usize) -> Result<f64, DataError> {
    let v: f64 = field.parse().map_err(|_| DataError::Parse { line, message: format!("invalid number {field:?}") })?;
    if !v.is_finite() {
        return Err(DataError::Parse { line, message: format!("non-finite number {field:?}") });
    }
    Ok(v)
}

pub fn read_pdb_ca(path: impl AsRef<Path>, chain: Option<char>) -> Result<PointSet, DataError> {
    parse_pdb_ca(&read_text(path.as_ref())?, chain)
}

/// Alpha carbons of the first model. Only `ATOM` records with atom name `CA`
/// and alternate location blank or `A` are kept. Fields are read from their
/// fixed columns. Labels are chain identifier plus residue number and
/// insertion code.
pub fn parse_pdb_ca(text: &str, chain: Option<char>) -> Result<PointSet, DataError> {
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let record = columns(line, 1, 6);
        if record.starts_with("ENDMDL") {
            break;
        }
        if record != "ATOM  " && record.trim_end() != "ATOM" {
            continue;
        }
        if !line.is_ascii() {
            return Err(DataError::Parse { line: lineno, message: "non-ASCII ATOM record".into() });
        }
        if columns(line, 13, 16).trim() != "CA" {
            continue;
        }
        let alt_loc = columns(line, 17, 17);
        if !(alt_loc.is_empty() || alt_loc == " " || alt_loc == "A") {
            continue;
        }
        let chain_id = columns(line, 22, 22).chars().next().unwrap_or(' ');
        if chain.is_some_and(|c| c != chain_id) {
            continue;
        }
        if line.len() < 54 {
            return Err(DataError::Parse { line: lineno, message: "ATOM record shorter than 54 columns".into() });
        }
        let mut p = [0.0; 3];
        for (k, start) in [31, 39, 47].into_iter().enumerate() {
            p[k] = parse_number(columns(line, start, start + 7).trim(), lineno)?;
        }
        let res_seq = columns(line, 23, 26).trim();
        let insertion = columns(line, 27, 27).trim();
        coords.push(p);
        labels.push(format!("{}{}{}", chain_id.to_string().trim(), res_seq, insertion));
    }
    if coords.is_empty() {
        return Err(DataError::NoCAAtoms);
    }
    Ok(PointSet::new(3, coords)?.with_labels(labels)?)
}

/// 1-based inclusive column range, clipped to the line.
fn columns(line: &str, first: usize, last: usize) -> &str {
    let end = last.min(line.len());
    let start = (first - 1).min(end);
    line.get(start..end).unwrap_or("")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_basic_and_comments() {
        let p = parse_xyz("0 0\n1 0\n0 1\n").unwrap();
        assert_eq!((p.dim(), p.len()), (2, 3));
        let p = parse_xyz("# header\n\n1 2 3\n  # indented comment\n4 5 6\n").unwrap();
        assert_eq!((p.dim(), p.len()), (3, 2));
        assert_eq!(p.point(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn xyz_errors() {
        assert!(matches!(
            parse_xyz("0 0\n1 0 0\n"),
            Err(DataError::MixedDimensions { line: 2, expected: 2, found: 3 })
        ));
        assert!(matches!(parse_xyz("0 0\n1 x\n"), Err(DataError::Parse { line: 2, .. })));
        assert!(matches!(parse_xyz("1\n"), Err(DataError::Parse { line: 1, .. })));
        assert!(matches!(parse_xyz("1 inf\n"), Err(DataError::Parse { line: 1, .. })));
    }

    const PDB: &str = "\
HEADER    SYNTHETIC
ATOM      1  N   GLY A   1      10.000  20.000  30.000  1.00  0.00           N
ATOM      2  CA  GLY A   1      11.000  21.000  31.000  1.00  0.00           C
ATOM      3  CA AALA A   2     -12.500-122.250   3.125  0.50  0.00           C
ATOM      4  CA BALA A   2      99.000  99.000  99.000  0.50  0.00           C
HETATM    5  CA  CA  A 101       1.000   2.000   3.000  1.00  0.00          CA
ATOM      6  CA  GLY B   7A      1.000   1.000   1.000  1.00  0.00           C
ENDMDL
ATOM      7  CA  GLY A   9       5.000   5.000   5.000  1.00  0.00           C
";

    #[test]
    fn pdb_fixed_columns() {
        let p = parse_pdb_ca(PDB, None).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.point(0), &[11.0, 21.0, 31.0]);
        // Touching coordinate fields are split by column, not whitespace.
        assert_eq!(p.point(1), &[-12.5, -122.25, 3.125]);
        assert_eq!(p.labels().unwrap(), ["A1", "A2", "B7A"]);
    }

    #[test]
    fn pdb_chain_filter_and_empty() {
        let p = parse_pdb_ca(PDB, Some('B')).unwrap();
        assert_eq!(p.len(), 1);
        assert!(matches!(parse_pdb_ca(PDB, Some('Z')), Err(DataError::NoCAAtoms)));
        assert!(matches!(parse_pdb_ca("HEADER x\n", None), Err(DataError::NoCAAtoms)));
    }

    #[test]
    fn pdb_bad_coordinate() {
        let bad = "ATOM      2  CA  GLY A   1      11.0x0  21.000  31.000  1.00  0.00           C\n";
        assert!(matches!(parse_pdb_ca(bad, None), Err(DataError::Parse { line: 1, .. })));
        let short = "ATOM      2  CA  GLY A   1      11.000  21.000\n";
        assert!(matches!(parse_pdb_ca(short, None), Err(DataError::Parse { line: 1, .. })));
    }
}
