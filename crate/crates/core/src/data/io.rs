//! Plain-text formats.
//!
//! Matrix files: a `<rows> <cols>` header line, then `rows` lines of `cols`
//! whitespace-separated decimal reals. Label files: one integer per line.
//! Key-value files (dataset manifests, metadata): `key=value` lines, `#`
//! comments and blank lines ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::{FeatureMatrix, LabelVector, PairedDataset};
use crate::error::{Error, Result};

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (header_line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(Error::Parse {
            line: header_line,
            message: format!("header must be `<rows> <cols>`, got {header:?}"),
        });
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            line: header_line,
            message: format!("invalid dimension {s:?}"),
        })
    };
    let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);

    let mut values = Vec::with_capacity(rows * cols);
    let mut row = 0;
    for (line_no, line) in lines {
        row += 1;
        if row > rows {
            return Err(Error::Parse {
                line: line_no,
                message: format!("more than the declared {rows} rows"),
            });
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != cols {
            return Err(Error::Parse {
                line: line_no,
                message: format!("row {row} has {} tokens, expected {cols}", tokens.len()),
            });
        }
        for tok in tokens {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("unparseable token {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite value {tok:?}"),
                });
            }
            values.push(v);
        }
    }
    if row != rows {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!("found {row} rows, header declares {rows}"),
        });
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// Shortest round-trip decimal representation of every entry.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    parse_matrix(&read(path.as_ref())?)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    FeatureMatrix::new(read_matrix(path)?)
}

pub fn save_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    write(path.as_ref(), &format_matrix(m))
}

pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("invalid label {:?}", l.trim()),
            })
        })
        .collect()
}

pub fn load_labels(path: impl AsRef<Path>, class_count: usize) -> Result<LabelVector> {
    LabelVector::new(parse_labels(&read(path.as_ref())?)?, class_count)
}

pub fn save_labels(path: impl AsRef<Path>, labels: &LabelVector) -> Result<()> {
    let mut out = String::new();
    for l in labels.as_slice() {
        let _ = writeln!(out, "{l}");
    }
    write(path.as_ref(), &out)
}

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(Error::Parse {
            line: i + 1,
            message: format!("expected key=value, got {line:?}"),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn read_key_values(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    parse_key_values(&read(path.as_ref())?)
}

/// Writes pairs in the given order.
pub fn write_key_values<K: AsRef<str>, V: AsRef<str>>(
    path: impl AsRef<Path>,
    pairs: &[(K, V)],
) -> Result<()> {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{}={}", k.as_ref(), v.as_ref());
    }
    write(path.as_ref(), &out)
}

/// Loads a dataset from a manifest with `x_path`, `y_path`, `labels_path` and
/// `class_count`. Relative paths resolve against the manifest's directory.
pub fn load_dataset(manifest: impl AsRef<Path>) -> Result<PairedDataset> {
    let manifest = manifest.as_ref();
    let kv = read_key_values(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let get = |key: &str| {
        kv.get(key).ok_or_else(|| {
            Error::InvalidArgument(format!("{}: missing key `{key}`", manifest.display()))
        })
    };
    let resolve = |key: &str| -> Result<PathBuf> {
        let p = PathBuf::from(get(key)?);
        Ok(if p.is_absolute() { p } else { base.join(p) })
    };
    let class_count: usize = get("class_count")?.parse().map_err(|_| {
        Error::InvalidArgument(format!("{}: invalid class_count", manifest.display()))
    })?;
    let x = load_matrix(resolve("x_path")?)?;
    let y = load_matrix(resolve("y_path")?)?;
    let labels = load_labels(resolve("labels_path")?, class_count)?;
    PairedDataset::new(x, y, labels)
}

/// Writes `<name>_x.txt`, `<name>_y.txt`, `<name>_labels.txt` and
/// `<name>.manifest` into `dir`, returning the manifest path.
pub fn save_dataset(dir: impl AsRef<Path>, name: &str, data: &PairedDataset) -> Result<PathBuf> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ));
    }
    let x_name = format!("{name}_x.txt");
    let y_name = format!("{name}_y.txt");
    let l_name = format!("{name}_labels.txt");
    save_matrix(dir.join(&x_name), data.x.as_matrix())?;
    save_matrix(dir.join(&y_name), data.y.as_matrix())?;
    save_labels(dir.join(&l_name), &data.labels)?;
    let manifest = dir.join(format!("{name}.manifest"));
    write_key_values(
        &manifest,
        &[
            ("x_path", x_name),
            ("y_path", y_name),
            ("labels_path", l_name),
            ("class_count", data.class_count().to_string()),
        ],
    )?;
    Ok(manifest)
}
