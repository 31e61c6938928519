//! Block/point incidence matrices of (2,k,v)-Steiner systems.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// b x v incidence matrix of a (2,k,v)-Steiner system: rows are blocks,
/// columns are points, and every pair of points lies in exactly one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SteinerIncidence {
    v: usize,
    k: usize,
    b: usize,
    r: usize,
    entries: Array2<u8>,
}

impl SteinerIncidence {
    /// Point count v.
    pub fn v(&self) -> usize {
        self.v
    }

    /// Block size k.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Block count b = v(v-1)/(k(k-1)).
    pub fn b(&self) -> usize {
        self.b
    }

    /// Replication number r = (v-1)/(k-1): ones per point column.
    pub fn r(&self) -> usize {
        self.r
    }

    /// b x v matrix of 0/1 entries.
    pub fn entries(&self) -> &Array2<u8> {
        &self.entries
    }

    /// Block rows containing point `j` (0-based column), in increasing order.
    pub fn blocks_of_point(&self, j: usize) -> Vec<usize> {
        (0..self.b).filter(|&i| self.entries[[i, j]] == 1).collect()
    }

    /// Serializes to the incidence text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("steiner v={} k={} b={}\n", self.v, self.k, self.b);
        for i in 0..self.b {
            let row: Vec<String> = (0..self.v).map(|j| self.entries[[i, j]].to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Builds from raw parts, re-verifying every structural invariant.
    pub fn from_entries(v: usize, k: usize, entries: Array2<u8>) -> Result<Self> {
        if v < 2 || k < 2 {
            return Err(Error::domain(format!(
                "steiner system requires v >= 2 and k >= 2, got v={v} k={k}"
            )));
        }
        if k > v {
            return Err(Error::domain(format!("block size k={k} exceeds point count v={v}")));
        }
        if (v - 1) % (k - 1) != 0 || (v * (v - 1)) % (k * (k - 1)) != 0 {
            return Err(Error::validation(format!(
                "no (2,{k},{v})-Steiner system: divisibility conditions fail"
            )));
        }
        let r = (v - 1) / (k - 1);
        let b = v * (v - 1) / (k * (k - 1));
        if entries.ncols() != v || entries.nrows() != b {
            return Err(Error::validation(format!(
                "incidence must be {b}x{v} for a (2,{k},{v}) system, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let inc = SteinerIncidence { v, k, b, r, entries };
        inc.validate()?;
        Ok(inc)
    }

    /// Checks row weights, column replication, and the t=2 pair property.
    fn validate(&self) -> Result<()> {
        for i in 0..self.b {
            let w: usize = (0..self.v).map(|j| usize::from(self.entries[[i, j]])).sum();
            if w != self.k {
                return Err(Error::validation(format!(
                    "block row {} has {} points, expected k={}",
                    i + 1,
                    w,
                    self.k
                )));
            }
        }
        // Count, block by block, how often each point pair co-occurs. This runs
        // before the column check so a bad file is reported by the pair it breaks.
        let mut pair_counts = vec![0u32; self.v * self.v];
        for i in 0..self.b {
            let ones: Vec<usize> = (0..self.v).filter(|&j| self.entries[[i, j]] == 1).collect();
            for a in 0..ones.len() {
                for b in (a + 1)..ones.len() {
                    pair_counts[ones[a] * self.v + ones[b]] += 1;
                }
            }
        }
        for a in 0..self.v {
            for b in (a + 1)..self.v {
                let c = pair_counts[a * self.v + b];
                if c != 1 {
                    return Err(Error::validation(format!(
                        "columns {} and {} share {} common blocks, expected exactly 1",
                        a + 1,
                        b + 1,
                        c
                    )));
                }
            }
        }
        for j in 0..self.v {
            let w: usize = (0..self.b).map(|i| usize::from(self.entries[[i, j]])).sum();
            if w != self.r {
                return Err(Error::validation(format!(
                    "point column {} appears in {} blocks, expected r={}",
                    j + 1,
                    w,
                    self.r
                )));
            }
        }
        Ok(())
    }
}

/// The (2,2,v)-Steiner system: one block per unordered point pair, ordered
/// lexicographically (1,2),(1,3),...,(1,v),(2,3),...
pub fn steiner_pairs_incidence(v: usize) -> Result<SteinerIncidence> {
    if v < 2 {
        return Err(Error::domain(format!("pair system requires v >= 2, got {v}")));
    }
    let b = v * (v - 1) / 2;
    let mut entries = Array2::zeros((b, v));
    let mut row = 0;
    for i in 0..v {
        for j in (i + 1)..v {
            entries[[row, i]] = 1;
            entries[[row, j]] = 1;
            row += 1;
        }
    }
    Ok(SteinerIncidence { v, k: 2, b, r: v - 1, entries })
}

/// Parses the incidence text format and re-verifies all invariants.
///
/// Format: header `steiner v=<v> k=<k> b=<b>`, then b lines of v
/// space-separated 0/1 digits.
pub fn parse_steiner_incidence(text: &str) -> Result<SteinerIncidence> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("empty incidence file"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("steiner") {
        return Err(Error::parse(format!("expected `steiner` header, got `{header}`")));
    }
    let mut v = None;
    let mut k = None;
    let mut b = None;
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("malformed header field `{field}`")))?;
        let value: usize = value
            .parse()
            .map_err(|_| Error::parse(format!("invalid integer in header field `{field}`")))?;
        match key {
            "v" => v = Some(value),
            "k" => k = Some(value),
            "b" => b = Some(value),
            _ => return Err(Error::parse(format!("unknown header key `{key}`"))),
        }
    }
    let (v, k, b) = match (v, k, b) {
        (Some(v), Some(k), Some(b)) => (v, k, b),
        _ => return Err(Error::parse("header must define v, k, and b")),
    };

    let mut entries = Array2::zeros((b, v));
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        if i >= b {
            return Err(Error::parse(format!("more than the declared {b} block rows")));
        }
        let mut cols = 0;
        for (j, tok) in line.split_whitespace().enumerate() {
            if j >= v {
                return Err(Error::parse(format!("row {} has more than v={v} entries", i + 1)));
            }
            entries[[i, j]] = match tok {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::parse(format!(
                        "row {} entry {} must be 0 or 1, got `{other}`",
                        i + 1,
                        j + 1
                    )))
                }
            };
            cols += 1;
        }
        if cols != v {
            return Err(Error::parse(format!("row {} has {cols} entries, expected v={v}", i + 1)));
        }
        rows += 1;
    }
    if rows != b {
        return Err(Error::parse(format!("found {rows} block rows, header declares b={b}")));
    }

    let inc = SteinerIncidence::from_entries(v, k, entries)?;
    if inc.b() != b {
        return Err(Error::validation(format!(
            "header declares b={b} but a (2,{k},{v}) system has b={}",
            inc.b()
        )));
    }
    Ok(inc)
}

/// Reads an incidence file from disk. See [`parse_steiner_incidence`].
pub fn load_steiner_incidence(path: impl AsRef<Path>) -> Result<SteinerIncidence> {
    let text = fs::read_to_string(path.as_ref())?;
    parse_steiner_incidence(&text)
}
