use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, DatasetBuilder, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// `label idx:val idx:val ...` with 1-based feature indices.
    Libsvm,
    /// Header row, one column holding the label, the others dense features.
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "libsvm" | "svmlight" => Ok(Format::Libsvm),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown data format `{other}` (expected libsvm or csv)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Feature dimension. Inferred from the data (LibSVM) or header (CSV)
    /// when absent.
    pub dim: Option<usize>,
    /// Name of the CSV label column.
    pub label_column: String,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            dim: None,
            label_column: "label".into(),
        }
    }
}

/// Reads a LibSVM or CSV file. Labels are remapped to `1..=Q` in ascending
/// (numeric when every label parses as a number) order; the mapping is
/// kept in the provenance.
pub fn load_sparse_text(path: &Path, format: Format, options: &LoadOptions) -> Result<Dataset, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (rows, raw_labels, inferred_dim) = match format {
        Format::Libsvm => parse_libsvm(&text)?,
        Format::Csv => parse_csv(&text, &options.label_column)?,
    };
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    let dim = match options.dim {
        Some(d) if d < inferred_dim && format == Format::Libsvm => {
            return Err(DataError::Config(format!(
                "file uses feature {inferred_dim} but dimension was set to {d}"
            )))
        }
        Some(d) => d,
        None => inferred_dim,
    };

    let label_map = label_mapping(&raw_labels);
    let mut builder = DatasetBuilder::new(dim);
    for ((line, entries), raw) in rows.iter().zip(&raw_labels) {
        let class = label_map
            .iter()
            .find(|(name, _)| name == raw)
            .map(|(_, c)| *c)
            .expect("every label is mapped");
        builder.push_row(entries, class).map_err(|e| match e {
            DataError::InvalidRow { message, .. } => DataError::Parse { line: *line, message },
            other => other,
        })?;
    }
    builder.finish(
        Some(label_map.len()),
        Provenance::File {
            path: path.display().to_string(),
            format,
            label_map,
        },
    )
}

type Parsed = (Vec<(usize, Vec<(usize, f64)>)>, Vec<String>, usize);

fn parse_libsvm(text: &str) -> Result<Parsed, DataError> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0;
    for (k, raw_line) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = tokens.next().expect("nonempty line");
        if label.contains(':') {
            return Err(DataError::Parse {
                line: line_no,
                message: format!("expected a label, found `{label}`"),
            });
        }
        let mut entries = Vec::new();
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| DataError::Parse {
                line: line_no,
                message: format!("expected `index:value`, found `{tok}`"),
            })?;
            let idx: usize = idx.parse().map_err(|_| DataError::Parse {
                line: line_no,
                message: format!("bad feature index `{idx}`"),
            })?;
            if idx == 0 {
                return Err(DataError::Parse {
                    line: line_no,
                    message: "feature indices are 1-based".into(),
                });
            }
            let val: f64 = parse_value(val, line_no)?;
            dim = dim.max(idx);
            entries.push((idx - 1, val));
        }
        rows.push((line_no, entries));
        labels.push(normalize_label(label));
    }
    Ok((rows, labels, dim))
}

fn parse_csv(text: &str, label_column: &str) -> Result<Parsed, DataError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(DataError::Empty)?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let label_pos = columns.iter().position(|c| *c == label_column).ok_or_else(|| DataError::Parse {
        line: 1,
        message: format!("no `{label_column}` column in header"),
    })?;
    let dim = columns.len() - 1;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (k, line) in lines {
        let line_no = k + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(DataError::Parse {
                line: line_no,
                message: format!("expected {} fields, found {}", columns.len(), cells.len()),
            });
        }
        let mut entries = Vec::with_capacity(dim);
        let mut feature = 0;
        for (c, cell) in cells.iter().enumerate() {
            if c == label_pos {
                continue;
            }
            entries.push((feature, parse_value(cell, line_no)?));
            feature += 1;
        }
        rows.push((line_no, entries));
        labels.push(normalize_label(cells[label_pos]));
    }
    Ok((rows, labels, dim))
}

fn parse_value(s: &str, line: usize) -> Result<f64, DataError> {
    // Accept the Unicode minus sign some exports use.
    let cleaned = s.replace('\u{2212}', "-");
    cleaned.parse::<f64>().map_err(|_| DataError::Parse {
        line,
        message: format!("bad value `{s}`"),
    })
}

fn normalize_label(s: &str) -> String {
    let s = s.trim().replace('\u{2212}', "-");
    s.strip_prefix('+').map(str::to_owned).unwrap_or(s)
}

fn label_mapping(raw: &[String]) -> Vec<(String, u32)> {
    let distinct: BTreeSet<&String> = raw.iter().collect();
    let mut names: Vec<&String> = distinct.into_iter().collect();
    let numeric: Option<Vec<f64>> = names.iter().map(|s| s.parse::<f64>().ok()).collect();
    if let Some(values) = numeric {
        let mut paired: Vec<(f64, &String)> = values.into_iter().zip(names).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0));
        names = paired.into_iter().map(|(_, s)| s).collect();
    }
    names
        .into_iter()
        .enumerate()
        .map(|(k, s)| (s.clone(), k as u32 + 1))
        .collect()
}

/// Writes `dataset` with labels as class numbers `1..=Q`. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_sparse_text(dataset: &Dataset, path: &Path, format: Format) -> Result<(), DataError> {
    let io_err = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    match format {
        Format::Libsvm => {
            for i in 0..dataset.n() {
                write!(w, "{}", dataset.label(i)).map_err(io_err)?;
                for (j, v) in dataset.row(i).iter() {
                    write!(w, " {}:{}", j + 1, v).map_err(io_err)?;
                }
                writeln!(w).map_err(io_err)?;
            }
        }
        Format::Csv => {
            write!(w, "label").map_err(io_err)?;
            for j in 0..dataset.dim() {
                write!(w, ",x{}", j + 1).map_err(io_err)?;
            }
            writeln!(w).map_err(io_err)?;
            for i in 0..dataset.n() {
                write!(w, "{}", dataset.label(i)).map_err(io_err)?;
                for v in dataset.dense_row(i) {
                    write!(w, ",{v}").map_err(io_err)?;
                }
                writeln!(w).map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn libsvm_line_is_parsed_with_zero_based_indices() {
        let f = file_with("2 1:0.5 7:\u{2212}1.0\n1 2:3\n");
        let ds = load_sparse_text(f.path(), Format::Libsvm, &LoadOptions::default()).unwrap();
        assert_eq!(ds.row(0).indices, &[0, 6]);
        assert_eq!(ds.row(0).values, &[0.5, -1.0]);
        assert_eq!(ds.label(0), 2);
        assert_eq!(ds.dim(), 7);
    }

    #[test]
    fn signed_labels_are_remapped() {
        let f = file_with("+1 1:1\n-1 1:2\n+1 2:1\n");
        let ds = load_sparse_text(f.path(), Format::Libsvm, &LoadOptions::default()).unwrap();
        assert_eq!(ds.labels(), &[2, 1, 2]);
        match ds.provenance() {
            Provenance::File { label_map, .. } => {
                assert_eq!(label_map, &vec![("-1".to_string(), 1), ("1".to_string(), 2)]);
            }
            other => panic!("unexpected provenance {other:?}"),
        }
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let f = file_with("1 1:0.5\n\n2 3:abc\n");
        match load_sparse_text(f.path(), Format::Libsvm, &LoadOptions::default()) {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let dup = file_with("1 1:0.5 1:0.7\n");
        assert!(matches!(
            load_sparse_text(dup.path(), Format::Libsvm, &LoadOptions::default()),
            Err(DataError::Parse { line: 1, .. })
        ));
        let empty = file_with("\n  \n");
        assert!(matches!(
            load_sparse_text(empty.path(), Format::Libsvm, &LoadOptions::default()),
            Err(DataError::Empty)
        ));
    }

    #[test]
    fn csv_with_named_label_column() {
        let f = file_with("a,class,b\n0.5,cat,0\n1,dog,2\n");
        let opts = LoadOptions {
            label_column: "class".into(),
            ..LoadOptions::default()
        };
        let ds = load_sparse_text(f.path(), Format::Csv, &opts).unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.labels(), &[1, 2]);
        assert_eq!(ds.dense_row(0), vec![0.5, 0.0]);
        assert_eq!(ds.dense_row(1), vec![1.0, 2.0]);
        let short = file_with("label,a\n1\n");
        assert!(matches!(load_sparse_text(short.path(), Format::Csv, &LoadOptions::default()), Err(DataError::Parse { line: 2, .. })));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_sparse_text(Path::new("/nonexistent/x.svm"), Format::Libsvm, &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, DataError::Io { .. }));
    }
}
