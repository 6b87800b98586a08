//! MPS reader and writer.
//!
//! Free format (whitespace separated, names without spaces) is the default
//! and also reads every fixed-format file whose names contain no blanks.
//! [`MpsFormat::Fixed`] slices the classic column positions instead, for
//! files with blanks inside names.
//!
//! `OBJSENSE MAX` is handled by negating the objective, so the returned
//! problem is always a minimisation. Integrality markers are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use olpdhg_core::lp::{GeneralLp, RowSense};
use olpdhg_core::sparse::SparseMatrix;

#[derive(Debug, thiserror::Error)]
pub enum MpsError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid model: {0}")]
    Model(#[from] olpdhg_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MpsFormat {
    #[default]
    Free,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

fn err(line: usize, msg: impl Into<String>) -> MpsError {
    MpsError::Parse { line, msg: msg.into() }
}

/// Reads `path`, decompressing gzip input (detected by magic bytes).
pub fn read_mps(path: impl AsRef<Path>) -> Result<GeneralLp, MpsError> {
    let path = path.as_ref();
    let io = |source| MpsError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut raw = Vec::new();
    BufReader::new(File::open(path).map_err(io)?)
        .read_to_end(&mut raw)
        .map_err(io)?;
    let text = if raw.starts_with(&[0x1f, 0x8b]) {
        let mut s = String::new();
        GzDecoder::new(raw.as_slice()).read_to_string(&mut s).map_err(io)?;
        s
    } else {
        String::from_utf8(raw).map_err(|e| io(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?
    };
    let mut lp = parse_mps(&text)?;
    if lp.name.is_empty() {
        lp.name = instance_name(path);
    }
    Ok(lp)
}

/// File name without `.mps`/`.mps.gz`/`.gz`.
pub fn instance_name(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    for ext in [".mps.gz", ".MPS.gz", ".gz", ".mps", ".MPS"] {
        if let Some(stem) = name.strip_suffix(ext) {
            return stem.to_string();
        }
    }
    name
}

pub fn parse_mps(text: &str) -> Result<GeneralLp, MpsError> {
    parse_mps_with(text, MpsFormat::Free)
}

struct Builder {
    name: String,
    maximize: bool,
    objective_name: Option<String>,
    row_index: HashMap<String, usize>,
    row_names: Vec<String>,
    senses: Vec<RowSense>,
    free_rows: Vec<String>,
    col_index: HashMap<String, usize>,
    col_names: Vec<String>,
    objective: Vec<f64>,
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
    offset: f64,
    ranges: Vec<Option<f64>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs_set: Option<String>,
    range_set: Option<String>,
    bound_set: Option<String>,
}

enum RowRef {
    Objective,
    Free,
    Row(usize),
}

impl Builder {
    fn row(&self, name: &str, line: usize) -> Result<RowRef, MpsError> {
        if self.objective_name.as_deref() == Some(name) {
            return Ok(RowRef::Objective);
        }
        if let Some(&i) = self.row_index.get(name) {
            return Ok(RowRef::Row(i));
        }
        if self.free_rows.iter().any(|r| r == name) {
            return Ok(RowRef::Free);
        }
        Err(err(line, format!("undeclared row '{name}'")))
    }

    fn col(&self, name: &str, line: usize) -> Result<usize, MpsError> {
        self.col_index
            .get(name)
            .copied()
            .ok_or_else(|| err(line, format!("undeclared column '{name}'")))
    }

    fn add_col(&mut self, name: &str) -> usize {
        if let Some(&j) = self.col_index.get(name) {
            return j;
        }
        let j = self.col_names.len();
        self.col_index.insert(name.to_string(), j);
        self.col_names.push(name.to_string());
        self.objective.push(0.0);
        self.lower.push(0.0);
        self.upper.push(f64::INFINITY);
        j
    }
}

fn number(tok: &str, line: usize) -> Result<f64, MpsError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| err(line, format!("expected a number, found '{tok}'")))?;
    if v.is_nan() {
        return Err(err(line, "NaN value"));
    }
    Ok(v)
}

/// The six fixed-format fields of a data line, trimmed.
fn fixed_fields(line: &str) -> Vec<String> {
    const SPANS: [(usize, usize); 6] = [(1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61)];
    let chars: Vec<char> = line.chars().collect();
    SPANS
        .iter()
        .map(|&(a, b)| {
            if a >= chars.len() {
                String::new()
            } else {
                chars[a..b.min(chars.len())]
                    .iter()
                    .collect::<String>()
                    .trim()
                    .to_string()
            }
        })
        .collect()
}

/// Tokens of a fixed-format line in the layout the free-format parser
/// expects for `section`.
fn fixed_tokens(line: &str, section: Section) -> Vec<String> {
    let f = fixed_fields(line);
    let mut toks: Vec<String> = match section {
        Section::Rows => f[..2].to_vec(),
        Section::Columns | Section::Rhs | Section::Ranges => f[1..].to_vec(),
        Section::Bounds => f[..4].to_vec(),
        _ => f.into_iter().filter(|t| !t.is_empty()).collect(),
    };
    while toks.last().is_some_and(|s| s.is_empty()) {
        toks.pop();
    }
    toks
}

/// Set name plus `(name, value)` pairs of a RHS or RANGES line.
fn pairs<'a>(toks: &'a [&'a str], line: usize) -> Result<(Option<&'a str>, Vec<(&'a str, &'a str)>), MpsError> {
    let (set, rest) = if toks.len() % 2 == 1 {
        (Some(toks[0]), &toks[1..])
    } else {
        (None, toks)
    };
    if rest.is_empty() {
        return Err(err(line, "missing entries"));
    }
    Ok((set, rest.chunks(2).map(|c| (c[0], c[1])).collect()))
}

fn same_set(stored: &mut Option<String>, found: Option<&str>, what: &str, line: usize) -> bool {
    let found = found.unwrap_or("");
    match stored {
        None => {
            *stored = Some(found.to_string());
            true
        }
        Some(s) if s == found => true,
        Some(s) => {
            log::warn!("line {line}: ignoring {what} set '{found}', using '{s}'");
            false
        }
    }
}

pub fn parse_mps_with(text: &str, format: MpsFormat) -> Result<GeneralLp, MpsError> {
    let mut b = Builder {
        name: String::new(),
        maximize: false,
        objective_name: None,
        row_index: HashMap::new(),
        row_names: Vec::new(),
        senses: Vec::new(),
        free_rows: Vec::new(),
        col_index: HashMap::new(),
        col_names: Vec::new(),
        objective: Vec::new(),
        triplets: Vec::new(),
        rhs: Vec::new(),
        offset: 0.0,
        ranges: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
        rhs_set: None,
        range_set: None,
        bound_set: None,
    };
    let mut section = Section::None;
    let mut seen_any = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let is_header = !raw.starts_with(' ') && !raw.starts_with('\t');
        if is_header {
            let mut toks = raw.split_whitespace();
            let key = toks.next().unwrap_or("").to_ascii_uppercase();
            section = match key.as_str() {
                "NAME" => {
                    b.name = toks.collect::<Vec<_>>().join(" ");
                    Section::Name
                }
                "OBJSENSE" => {
                    if let Some(s) = toks.next() {
                        b.maximize = parse_sense(s, line)?;
                    }
                    Section::ObjSense
                }
                "OBJSENCE" => Section::ObjSense,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                _ => return Err(err(line, format!("unknown section '{}'", raw.trim()))),
            };
            seen_any = true;
            if section == Section::End {
                break;
            }
            continue;
        }
        if !seen_any {
            return Err(err(line, "data before the first section header"));
        }
        let owned;
        let toks: Vec<&str> = match format {
            MpsFormat::Free => raw.split_whitespace().collect(),
            MpsFormat::Fixed => {
                owned = fixed_tokens(raw, section);
                owned.iter().map(String::as_str).collect()
            }
        };
        match section {
            Section::None | Section::End => unreachable!(),
            Section::Name => return Err(err(line, "unexpected data after NAME")),
            Section::ObjSense => {
                b.maximize = parse_sense(toks[0], line)?;
            }
            Section::Rows => {
                let (sense, name) = match toks.as_slice() {
                    [s, n] => (*s, *n),
                    _ => return Err(err(line, "ROWS entry needs a sense and a name")),
                };
                if b.row_index.contains_key(name) || b.objective_name.as_deref() == Some(name) {
                    return Err(err(line, format!("duplicate row '{name}'")));
                }
                let sense = match sense.to_ascii_uppercase().as_str() {
                    "N" => {
                        if b.objective_name.is_none() {
                            b.objective_name = Some(name.to_string());
                        } else {
                            b.free_rows.push(name.to_string());
                        }
                        continue;
                    }
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    other => return Err(err(line, format!("unknown row sense '{other}'"))),
                };
                b.row_index.insert(name.to_string(), b.senses.len());
                b.row_names.push(name.to_string());
                b.senses.push(sense);
                b.rhs.push(0.0);
                b.ranges.push(None);
            }
            Section::Columns => {
                if toks.len() >= 3 && toks[1].trim_matches('\'').eq_ignore_ascii_case("MARKER") {
                    // integrality markers; the LP relaxation is solved
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(err(
                        line,
                        "COLUMNS entry needs a column and one or two (row, value) pairs",
                    ));
                }
                let j = b.add_col(toks[0]);
                for pair in toks[1..].chunks(2) {
                    let v = number(pair[1], line)?;
                    match b.row(pair[0], line)? {
                        RowRef::Objective => b.objective[j] += v,
                        RowRef::Free => {}
                        RowRef::Row(i) => b.triplets.push((i, j, v)),
                    }
                }
            }
            Section::Rhs => {
                let (set, entries) = pairs(&toks, line)?;
                if !same_set(&mut b.rhs_set, set, "RHS", line) {
                    continue;
                }
                for (row, val) in entries {
                    let v = number(val, line)?;
                    match b.row(row, line)? {
                        RowRef::Objective => b.offset = -v,
                        RowRef::Free => {}
                        RowRef::Row(i) => b.rhs[i] = v,
                    }
                }
            }
            Section::Ranges => {
                let (set, entries) = pairs(&toks, line)?;
                if !same_set(&mut b.range_set, set, "RANGES", line) {
                    continue;
                }
                for (row, val) in entries {
                    let v = number(val, line)?;
                    match b.row(row, line)? {
                        RowRef::Row(i) => b.ranges[i] = Some(v),
                        _ => return Err(err(line, format!("range on objective or free row '{row}'"))),
                    }
                }
            }
            Section::Bounds => parse_bound(&mut b, &toks, line)?,
        }
    }
    if section != Section::End {
        log::warn!("MPS input has no ENDATA line");
    }
    build(b)
}

fn parse_sense(tok: &str, line: usize) -> Result<bool, MpsError> {
    match tok.to_ascii_uppercase().as_str() {
        "MAX" | "MAXIMIZE" => Ok(true),
        "MIN" | "MINIMIZE" => Ok(false),
        other => Err(err(line, format!("unknown objective sense '{other}'"))),
    }
}

fn parse_bound(b: &mut Builder, toks: &[&str], line: usize) -> Result<(), MpsError> {
    let Some(kind) = toks.first().map(|k| k.to_ascii_uppercase()) else {
        return Err(err(line, "empty BOUNDS entry"));
    };
    let needs_value = !matches!(kind.as_str(), "FR" | "MI" | "PL" | "BV");
    let (set, col, val) = match (needs_value, toks.len()) {
        (true, 4) => (Some(toks[1]), toks[2], Some(toks[3])),
        (true, 3) => (None, toks[1], Some(toks[2])),
        (false, 4) => (Some(toks[1]), toks[2], None),
        (false, 3) => (Some(toks[1]), toks[2], None),
        (false, 2) => (None, toks[1], None),
        _ => return Err(err(line, format!("malformed {kind} bound"))),
    };
    if !same_set(&mut b.bound_set, set, "BOUNDS", line) {
        return Ok(());
    }
    let j = b.col(col, line)?;
    let value = match val {
        Some(v) => number(v, line)?,
        None => 0.0,
    };
    match kind.as_str() {
        "UP" | "UI" => {
            if value < 0.0 && b.lower[j] == 0.0 {
                log::warn!("line {line}: negative upper bound on '{col}' with zero lower bound, lower set to -inf");
                b.lower[j] = f64::NEG_INFINITY;
            }
            b.upper[j] = value;
        }
        "LO" | "LI" => b.lower[j] = value,
        "FX" => {
            b.lower[j] = value;
            b.upper[j] = value;
        }
        "FR" => {
            b.lower[j] = f64::NEG_INFINITY;
            b.upper[j] = f64::INFINITY;
        }
        "MI" => b.lower[j] = f64::NEG_INFINITY,
        "PL" => b.upper[j] = f64::INFINITY,
        "BV" => {
            b.lower[j] = 0.0;
            b.upper[j] = 1.0;
        }
        other => return Err(err(line, format!("unsupported bound type '{other}'"))),
    }
    Ok(())
}

/// Expands ranged rows into two rows and assembles the problem.
fn build(mut b: Builder) -> Result<GeneralLp, MpsError> {
    let m0 = b.senses.len();
    let mut extra_rows: Vec<(usize, RowSense, f64)> = Vec::new();
    for i in 0..m0 {
        let Some(r) = b.ranges[i] else { continue };
        let rhs = b.rhs[i];
        let (keep, other) = match b.senses[i] {
            RowSense::Le => ((RowSense::Le, rhs), (RowSense::Ge, rhs - r.abs())),
            RowSense::Ge => ((RowSense::Ge, rhs), (RowSense::Le, rhs + r.abs())),
            RowSense::Eq if r >= 0.0 => ((RowSense::Ge, rhs), (RowSense::Le, rhs + r)),
            RowSense::Eq => ((RowSense::Le, rhs), (RowSense::Ge, rhs + r)),
        };
        b.senses[i] = keep.0;
        b.rhs[i] = keep.1;
        extra_rows.push((i, other.0, other.1));
    }
    for (k, &(src, sense, rhs)) in extra_rows.iter().enumerate() {
        let new_row = m0 + k;
        let copies: Vec<(usize, usize, f64)> = b
            .triplets
            .iter()
            .filter(|t| t.0 == src)
            .map(|&(_, j, v)| (new_row, j, v))
            .collect();
        b.triplets.extend(copies);
        b.senses.push(sense);
        b.rhs.push(rhs);
        b.row_names.push(format!("{}_range", b.row_names[src]));
    }
    let m = b.senses.len();
    let n = b.col_names.len();
    let matrix = SparseMatrix::from_triplets(m, n, &b.triplets)?;
    let (objective, offset) = if b.maximize {
        (b.objective.iter().map(|c| -c).collect(), -b.offset)
    } else {
        (b.objective, b.offset)
    };
    let lp = GeneralLp {
        name: b.name,
        objective,
        objective_offset: offset,
        matrix,
        senses: b.senses,
        rhs: b.rhs,
        lower: b.lower,
        upper: b.upper,
        row_names: b.row_names,
        col_names: b.col_names,
    };
    lp.validate()?;
    Ok(lp)
}

/// Free-format MPS text for `lp`. Missing names are generated as `R<i>` and
/// `C<j>`.
pub fn write_mps(lp: &GeneralLp) -> String {
    let rname = |i: usize| lp.row_names.get(i).cloned().unwrap_or_else(|| format!("R{i}"));
    let cname = |j: usize| lp.col_names.get(j).cloned().unwrap_or_else(|| format!("C{j}"));
    let mut obj = String::from("OBJ");
    while (0..lp.num_rows()).any(|i| rname(i) == obj) {
        obj.push('_');
    }
    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", lp.name);
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N {obj}");
    for (i, s) in lp.senses.iter().enumerate() {
        let tag = match s {
            RowSense::Le => "L",
            RowSense::Eq => "E",
            RowSense::Ge => "G",
        };
        let _ = writeln!(out, " {tag} {}", rname(i));
    }
    out.push_str("COLUMNS\n");
    for j in 0..lp.num_cols() {
        let _ = writeln!(out, " {} {obj} {}", cname(j), lp.objective[j]);
        for (i, v) in lp.matrix.col(j) {
            let _ = writeln!(out, " {} {} {}", cname(j), rname(i), v);
        }
    }
    out.push_str("RHS\n");
    if lp.objective_offset != 0.0 {
        let _ = writeln!(out, " RHS {obj} {}", -lp.objective_offset);
    }
    for (i, r) in lp.rhs.iter().enumerate() {
        if *r != 0.0 {
            let _ = writeln!(out, " RHS {} {}", rname(i), r);
        }
    }
    out.push_str("BOUNDS\n");
    for j in 0..lp.num_cols() {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let c = cname(j);
        if l == u {
            let _ = writeln!(out, " FX BND {c} {l}");
            continue;
        }
        if l == f64::NEG_INFINITY && u == f64::INFINITY {
            let _ = writeln!(out, " FR BND {c}");
            continue;
        }
        if l == f64::NEG_INFINITY {
            let _ = writeln!(out, " MI BND {c}");
        } else if l != 0.0 {
            let _ = writeln!(out, " LO BND {c} {l}");
        }
        if u.is_finite() {
            let _ = writeln!(out, " UP BND {c} {u}");
        }
    }
    out.push_str("ENDATA\n");
    out
}
