//! Plain-text file formats for design matrices and signal vectors, plus
//! atomic file writing (temp + rename) so partial runs never leave corrupt
//! artifacts.
//!
//! Design matrix format: header `design kind=<kind> N=<N> M=<M>` followed by
//! N lines of M space-separated values. Vector format: header `vector N=<N>`
//! followed by a single line of N values. Values carry 17 significant digits
//! so f64 round-trips exactly.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::designs::{DesignKind, DesignMatrix};
use crate::error::{Error, Result};

/// Formats with 17 significant digits (exact f64 round trip).
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes via a temporary file in the target directory and renames into
/// place, so readers never observe a partially written file.
pub fn atomic_write(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::domain(format!("not a writable path: {}", path.display())))?;
    let tmp_name = format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id());
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => tmp_name.clone().into(),
    };
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn design_to_text(design: &DesignMatrix) -> String {
    let (n, m) = (design.n(), design.m());
    let mut out = format!("design kind={} N={n} M={m}\n", design.kind().as_str());
    for i in 0..n {
        let row: Vec<String> = (0..m).map(|j| fmt_full(design.matrix()[[i, j]])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parses a design file, re-validating column norms and the kind's shape rule.
pub fn parse_design(text: &str) -> Result<DesignMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("empty design file"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("design") {
        return Err(Error::parse(format!("expected `design` header, got `{header}`")));
    }
    let mut kind = None;
    let mut n = None;
    let mut m = None;
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("malformed header field `{field}`")))?;
        match key {
            "kind" => kind = Some(DesignKind::parse(value)?),
            "N" => n = Some(parse_usize(value, "N")?),
            "M" => m = Some(parse_usize(value, "M")?),
            _ => return Err(Error::parse(format!("unknown header key `{key}`"))),
        }
    }
    let (kind, n, m) = match (kind, n, m) {
        (Some(kind), Some(n), Some(m)) => (kind, n, m),
        _ => return Err(Error::parse("header must define kind, N, and M")),
    };

    let mut columns = Array2::zeros((n, m));
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        if i >= n {
            return Err(Error::parse(format!("more than the declared N={n} rows")));
        }
        let values = parse_row(line, m, i)?;
        for (j, v) in values.into_iter().enumerate() {
            columns[[i, j]] = v;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::parse(format!("found {rows} rows, header declares N={n}")));
    }
    DesignMatrix::from_columns(kind, columns)
}

pub fn write_design(path: impl AsRef<Path>, design: &DesignMatrix) -> Result<()> {
    atomic_write(path, &design_to_text(design))
}

pub fn read_design(path: impl AsRef<Path>) -> Result<DesignMatrix> {
    parse_design(&fs::read_to_string(path.as_ref())?)
}

pub fn vector_to_text(v: &Array1<f64>) -> String {
    let values: Vec<String> = v.iter().map(|&x| fmt_full(x)).collect();
    format!("vector N={}\n{}\n", v.len(), values.join(" "))
}

pub fn parse_vector(text: &str) -> Result<Array1<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("empty vector file"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("vector") {
        return Err(Error::parse(format!("expected `vector` header, got `{header}`")));
    }
    let n = match fields.next().and_then(|f| f.split_once('=')) {
        Some(("N", value)) => parse_usize(value, "N")?,
        _ => return Err(Error::parse("vector header must define N")),
    };
    let line = lines
        .next()
        .ok_or_else(|| Error::parse("vector file has no value row"))?;
    let values = parse_row(line, n, 0)?;
    if lines.next().is_some() {
        return Err(Error::parse("vector file has more than one value row"));
    }
    Ok(Array1::from_vec(values))
}

pub fn write_vector(path: impl AsRef<Path>, v: &Array1<f64>) -> Result<()> {
    atomic_write(path, &vector_to_text(v))
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Array1<f64>> {
    parse_vector(&fs::read_to_string(path.as_ref())?)
}

fn parse_usize(value: &str, key: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::parse(format!("invalid integer for {key}: `{value}`")))
}

fn parse_row(line: &str, expected: usize, row: usize) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(expected);
    for tok in line.split_whitespace() {
        if values.len() >= expected {
            return Err(Error::parse(format!(
                "row {} has more than the expected {expected} values",
                row + 1
            )));
        }
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::parse(format!("invalid number `{tok}` in row {}", row + 1)))?;
        if !v.is_finite() {
            return Err(Error::validation(format!("non-finite value in row {}", row + 1)));
        }
        values.push(v);
    }
    if values.len() != expected {
        return Err(Error::parse(format!(
            "row {} has {} values, expected {expected}",
            row + 1,
            values.len()
        )));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{simplex_design, steiner_pairs_incidence, sylvester_hadamard, steiner_etf};

    #[test]
    fn design_round_trip_is_exact() {
        let inc = steiner_pairs_incidence(4).unwrap();
        let h = sylvester_hadamard(2).unwrap();
        let f = steiner_etf(&inc, &h).unwrap();
        let parsed = parse_design(&design_to_text(&f)).unwrap();
        assert_eq!(parsed.kind(), f.kind());
        assert_eq!(parsed.matrix(), f.matrix());
        assert!((parsed.mu() - f.mu()).abs() < 1e-12);
    }

    #[test]
    fn simplex_round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("simplex.txt");
        let f = simplex_design(5).unwrap();
        write_design(&path, &f).unwrap();
        let back = read_design(&path).unwrap();
        assert_eq!(back.matrix(), f.matrix());
    }

    #[test]
    fn vector_round_trip() {
        let v = Array1::from_vec(vec![0.25, -1.5e-7, 3.0]);
        let back = parse_vector(&vector_to_text(&v)).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn truncated_design_is_parse_error() {
        let text = "design kind=orthogonal N=3 M=3\n1 0 0\n0 1 0\n";
        assert!(matches!(parse_design(text), Err(Error::Parse(_))));
    }

    #[test]
    fn header_kind_must_be_known() {
        let text = "design kind=fancy N=1 M=1\n1\n";
        assert!(matches!(parse_design(text), Err(Error::Parse(_))));
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        atomic_write(&path, "first").unwrap();
        atomic_write(&path, "second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        // No leftover temp files.
        let leftovers: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().contains("tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }
}
