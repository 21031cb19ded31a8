//! Matrix Market, CSV and LIBSVM readers and writers, plus the on-disk
//! layout of a separable NMF instance.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use countgauss_core::nmf::SeparableInstance;
use countgauss_core::{DenseMatrix, SparseMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    MatrixMarket,
    Csv,
}

impl MatrixFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("mtx") | Some("mm") => Ok(MatrixFormat::MatrixMarket),
            Some("csv") => Ok(MatrixFormat::Csv),
            _ => Err(CliError::Usage(format!(
                "cannot infer matrix format of {}; use a .mtx or .csv extension",
                path.display()
            ))),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// 1-based column of the first character of the `k`-th whitespace token.
fn token_col(line: &str, k: usize) -> u64 {
    let mut seen = 0;
    let mut in_token = false;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            in_token = false;
        } else if !in_token {
            if seen == k {
                return i as u64 + 1;
            }
            seen += 1;
            in_token = true;
        }
    }
    line.len() as u64 + 1
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum MmField {
    Real,
    Pattern,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum MmSymmetry {
    General,
    Symmetric,
    Skew,
}

/// Reads a Matrix Market `coordinate` (real, integer or pattern; general,
/// symmetric or skew-symmetric) or `array` (real or integer, general) file.
pub fn read_matrix_market<R: BufRead>(reader: R, context: &str) -> Result<SparseMatrix> {
    let err = |line: u64, col: u64, msg: String| CliError::parse(context, line, col, msg);
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i as u64 + 1, l));
    let (ln, header) = match lines.next() {
        Some((ln, l)) => (ln, l.map_err(|e| err(ln, 1, e.to_string()))?),
        None => return Err(err(1, 1, "empty input".into())),
    };
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(err(ln, 1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'".into()));
    }
    let coordinate = match words[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(err(ln, token_col(&header, 2), format!("unsupported format '{other}'"))),
    };
    let field = match words[3].as_str() {
        "real" | "integer" | "double" => MmField::Real,
        "pattern" if coordinate => MmField::Pattern,
        other => return Err(err(ln, token_col(&header, 3), format!("unsupported field '{other}'"))),
    };
    let symmetry = match words[4].as_str() {
        "general" => MmSymmetry::General,
        "symmetric" if coordinate => MmSymmetry::Symmetric,
        "skew-symmetric" if coordinate => MmSymmetry::Skew,
        other => return Err(err(ln, token_col(&header, 4), format!("unsupported symmetry '{other}'"))),
    };

    let mut body = lines.filter_map(|(ln, l)| match l {
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('%') => None,
        other => Some((ln, other)),
    });
    let (size_ln, size_line) = match body.next() {
        Some((ln, l)) => (ln, l.map_err(|e| err(ln, 1, e.to_string()))?),
        None => return Err(err(ln + 1, 1, "missing size line".into())),
    };
    let parse_usize = |line: &str, ln: u64, k: usize, tok: &str| -> Result<usize> {
        tok.parse::<usize>()
            .map_err(|_| err(ln, token_col(line, k), format!("expected a nonnegative integer, found '{tok}'")))
    };
    let sizes: Vec<&str> = size_line.split_whitespace().collect();
    let expected = if coordinate { 3 } else { 2 };
    if sizes.len() != expected {
        return Err(err(size_ln, 1, format!("size line needs {expected} integers")));
    }
    let rows = parse_usize(&size_line, size_ln, 0, sizes[0])?;
    let cols = parse_usize(&size_line, size_ln, 1, sizes[1])?;
    let entries = if coordinate {
        parse_usize(&size_line, size_ln, 2, sizes[2])?
    } else {
        rows * cols
    };

    let mut triplets = Vec::with_capacity(entries);
    let mut last_ln = size_ln;
    for idx in 0..entries {
        let (ln, line) = match body.next() {
            Some((ln, l)) => (ln, l.map_err(|e| err(ln, 1, e.to_string()))?),
            None => return Err(err(last_ln + 1, 1, format!("expected {entries} entries, found {idx}"))),
        };
        last_ln = ln;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let parse_f64 = |k: usize| -> Result<f64> {
            let tok = toks.get(k).ok_or_else(|| err(ln, line.len() as u64 + 1, "missing value".into()))?;
            let v: f64 = tok
                .parse()
                .map_err(|_| err(ln, token_col(&line, k), format!("expected a number, found '{tok}'")))?;
            if !v.is_finite() {
                return Err(err(ln, token_col(&line, k), "non-finite value".into()));
            }
            Ok(v)
        };
        if coordinate {
            let want = if field == MmField::Pattern { 2 } else { 3 };
            if toks.len() != want {
                return Err(err(ln, 1, format!("expected {want} fields, found {}", toks.len())));
            }
            let i = parse_usize(&line, ln, 0, toks[0])?;
            let j = parse_usize(&line, ln, 1, toks[1])?;
            if i == 0 || i > rows {
                return Err(err(ln, token_col(&line, 0), format!("row index {i} outside 1..={rows}")));
            }
            if j == 0 || j > cols {
                return Err(err(ln, token_col(&line, 1), format!("column index {j} outside 1..={cols}")));
            }
            let v = if field == MmField::Pattern { 1.0 } else { parse_f64(2)? };
            triplets.push((i - 1, j - 1, v));
            if i != j {
                match symmetry {
                    MmSymmetry::General => {}
                    MmSymmetry::Symmetric => triplets.push((j - 1, i - 1, v)),
                    MmSymmetry::Skew => triplets.push((j - 1, i - 1, -v)),
                }
            }
        } else {
            if toks.len() != 1 {
                return Err(err(ln, 1, format!("expected 1 field, found {}", toks.len())));
            }
            let v = parse_f64(0)?;
            if v != 0.0 {
                triplets.push((idx % rows, idx / rows, v));
            }
        }
    }
    if let Some((ln, _)) = body.next() {
        return Err(err(ln, 1, format!("more than the declared {entries} entries")));
    }
    Ok(SparseMatrix::from_triplets(rows, cols, &triplets)?)
}

/// Writes a `coordinate real general` file. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_matrix_market<W: Write>(mut w: W, m: &SparseMatrix) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for i in 0..m.rows() {
        let (idx, vals) = m.row(i);
        for (&j, &v) in idx.iter().zip(vals) {
            writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
        }
    }
    w.flush()
}

/// Reads a numeric CSV. A first record that does not parse entirely as
/// numbers is taken as a header and skipped.
pub fn read_csv_matrix<R: Read>(reader: R, context: &str) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::parse(context, line, 1, e.to_string())
        })?;
        let line = rec.position().map_or(k as u64 + 1, |p| p.line());
        let parsed: Vec<std::result::Result<f64, usize>> = rec
            .iter()
            .enumerate()
            .map(|(c, f)| f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(c))
            .collect();
        if k == 0 && parsed.iter().all(|p| p.is_err()) {
            continue;
        }
        let mut row = Vec::with_capacity(parsed.len());
        for p in parsed {
            match p {
                Ok(v) => row.push(v),
                Err(c) => {
                    return Err(CliError::parse(
                        context,
                        line,
                        c as u64 + 1,
                        format!("expected a finite number, found '{}'", &rec[c]),
                    ))
                }
            }
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(CliError::parse(context, line, 1, format!("expected {w} fields, found {}", row.len())))
            }
            _ => {}
        }
        rows.push(row);
    }
    let Some(w) = width else {
        return Err(CliError::parse(context, 1, 1, "empty input"));
    };
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DenseMatrix::from_row_major(rows.len(), w, &flat)?)
}

pub fn write_csv_matrix<W: Write>(w: W, m: &DenseMatrix) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..m.rows() {
        wtr.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    wtr.flush().map_err(|e| CliError::io("<csv output>", e))?;
    Ok(())
}

/// Reads a matrix, choosing the format from the file extension.
pub fn load_matrix(path: &Path) -> Result<SparseMatrix> {
    let ctx = path.display().to_string();
    match MatrixFormat::from_path(path)? {
        MatrixFormat::MatrixMarket => read_matrix_market(open(path)?, &ctx),
        MatrixFormat::Csv => Ok(SparseMatrix::from_dense(&read_csv_matrix(open(path)?, &ctx)?)),
    }
}

pub fn save_matrix(path: &Path, m: &SparseMatrix) -> Result<()> {
    match MatrixFormat::from_path(path)? {
        MatrixFormat::MatrixMarket => write_matrix_market(create(path)?, m).map_err(|e| CliError::io(path, e)),
        MatrixFormat::Csv => write_csv_matrix(create(path)?, &m.to_dense()),
    }
}

/// Labelled samples from a LIBSVM file: `label idx:val idx:val ...` with
/// 1-based, strictly increasing feature indices.
#[derive(Clone, Debug, PartialEq)]
pub struct LibsvmData {
    /// `N x d`, one sample per row.
    pub x: SparseMatrix,
    pub y: Vec<f64>,
}

/// `features` pads (or checks) the feature count; otherwise it is the
/// largest index seen.
pub fn read_libsvm<R: BufRead>(reader: R, context: &str, features: Option<usize>) -> Result<LibsvmData> {
    let err = |line: u64, col: u64, msg: String| CliError::parse(context, line, col, msg);
    let mut y = Vec::new();
    let mut triplets = Vec::new();
    let mut max_idx = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let ln = i as u64 + 1;
        let line = line.map_err(|e| err(ln, 1, e.to_string()))?;
        let content = line.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        let Some(label) = toks.next() else { continue };
        let lv: f64 = label
            .parse()
            .map_err(|_| err(ln, token_col(&line, 0), format!("expected a label, found '{label}'")))?;
        if lv != 1.0 && lv != -1.0 {
            return Err(err(ln, token_col(&line, 0), format!("labels must be +1 or -1, found '{label}'")));
        }
        let row = y.len();
        y.push(lv);
        let mut prev = 0usize;
        for (k, tok) in toks.enumerate() {
            let col = token_col(&line, k + 1);
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(ln, col, format!("expected index:value, found '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(ln, col, format!("bad feature index '{idx}'")))?;
            if idx == 0 {
                return Err(err(ln, col, "feature indices are 1-based".into()));
            }
            if idx <= prev {
                return Err(err(ln, col, "feature indices must be strictly increasing".into()));
            }
            prev = idx;
            let v: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| err(ln, col, format!("bad feature value '{val}'")))?;
            max_idx = max_idx.max(idx);
            triplets.push((row, idx - 1, v));
        }
    }
    if y.is_empty() {
        return Err(err(1, 1, "no samples".into()));
    }
    let d = match features {
        Some(d) if d < max_idx => {
            return Err(CliError::Usage(format!(
                "{context}: feature index {max_idx} exceeds the declared {d} features"
            )))
        }
        Some(d) => d,
        None => max_idx,
    };
    Ok(LibsvmData {
        x: SparseMatrix::from_triplets(y.len(), d, &triplets)?,
        y,
    })
}

pub fn write_libsvm<W: Write>(mut w: W, data: &LibsvmData) -> std::io::Result<()> {
    for (i, label) in data.y.iter().enumerate() {
        write!(w, "{}", if *label > 0.0 { "+1" } else { "-1" })?;
        let (idx, vals) = data.x.row(i);
        for (&j, &v) in idx.iter().zip(vals) {
            write!(w, " {}:{}", j + 1, v)?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn load_libsvm(path: &Path, features: Option<usize>) -> Result<LibsvmData> {
    read_libsvm(open(path)?, &path.display().to_string(), features)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub d: usize,
    pub n: usize,
    pub k: usize,
    pub anchors: Vec<usize>,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Writes `X.mtx`, `X.csv`, `H.mtx` (when known) and `meta.json` into `dir`.
pub fn save_instance(dir: &Path, inst: &SeparableInstance) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let x = SparseMatrix::from_dense(&inst.x);
    save_matrix(&dir.join("X.mtx"), &x)?;
    write_csv_matrix(create(&dir.join("X.csv"))?, &inst.x)?;
    if let Some(h) = &inst.h_true {
        save_matrix(&dir.join("H.mtx"), &SparseMatrix::from_dense(h))?;
    }
    let meta = InstanceMeta {
        d: inst.x.rows(),
        n: inst.x.cols(),
        k: inst.anchors.len(),
        anchors: inst.anchors.clone(),
        noise_sigma: inst.noise_sigma,
        seed: inst.seed,
    };
    let path = dir.join("meta.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &meta)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))
}

pub fn load_instance(dir: &Path) -> Result<SeparableInstance> {
    let meta_path = dir.join("meta.json");
    let meta: InstanceMeta = serde_json::from_reader(open(&meta_path)?)?;
    let x = load_matrix(&dir.join("X.mtx"))?.to_dense();
    if x.shape() != (meta.d, meta.n) {
        return Err(CliError::Usage(format!(
            "{}: X is {}x{} but meta.json declares {}x{}",
            dir.display(),
            x.rows(),
            x.cols(),
            meta.d,
            meta.n
        )));
    }
    let h_path = dir.join("H.mtx");
    let h_true = if h_path.exists() {
        Some(load_matrix(&h_path)?.to_dense())
    } else {
        None
    };
    Ok(SeparableInstance {
        x,
        anchors: meta.anchors,
        h_true,
        noise_sigma: meta.noise_sigma,
        seed: meta.seed,
    })
}
