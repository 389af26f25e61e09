use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::data::{Dataset, SparseRow};
use crate::prox::GroupNorm;

use super::loss::logits_into;
use super::penalty::{PenaltyConfig, PenaltyKind};
use super::MlrError;

/// Model parameters `(W, b, t)`. `W` is `d × Q`, stored row-major so that
/// row `j` (the group of feature `j`) is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub d: usize,
    pub classes: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub t: Vec<f64>,
}

impl ModelState {
    pub fn zeros(d: usize, classes: usize) -> Self {
        ModelState {
            d,
            classes,
            w: vec![0.0; d * classes],
            b: vec![0.0; classes],
            t: vec![0.0; d],
        }
    }

    /// Length of the flat layout `[W | b | t]`.
    pub fn flat_len(d: usize, classes: usize) -> usize {
        d * classes + classes + d
    }

    pub fn from_flat(d: usize, classes: usize, x: &[f64]) -> Self {
        assert_eq!(x.len(), Self::flat_len(d, classes), "flat model length");
        let (w, rest) = x.split_at(d * classes);
        let (b, t) = rest.split_at(classes);
        ModelState {
            d,
            classes,
            w: w.to_vec(),
            b: b.to_vec(),
            t: t.to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(Self::flat_len(self.d, self.classes));
        x.extend_from_slice(&self.w);
        x.extend_from_slice(&self.b);
        x.extend_from_slice(&self.t);
        x
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.w[j * self.classes..(j + 1) * self.classes]
    }

    /// Sets `t_j = ‖W_j‖_q` for every row.
    pub fn refresh_t(&mut self, q: GroupNorm) {
        for j in 0..self.d {
            self.t[j] = q.norm(&self.w[j * self.classes..(j + 1) * self.classes]);
        }
    }

    /// Rows with some entry above `threshold` in magnitude.
    pub fn selected_rows(&self, threshold: f64) -> Vec<usize> {
        (0..self.d)
            .filter(|&j| self.row(j).iter().any(|w| w.abs() > threshold))
            .collect()
    }

    /// Zero-based class with the largest score; ties go to the smallest index.
    pub fn predict(&self, x: SparseRow<'_>) -> usize {
        let mut s = vec![0.0; self.classes];
        logits_into(&self.w, &self.b, x, &mut s);
        let mut best = 0;
        for k in 1..self.classes {
            if s[k] > s[best] {
                best = k;
            }
        }
        best
    }

    /// Fraction of rows of `data` predicted correctly.
    pub fn accuracy(&self, data: &Dataset) -> f64 {
        let correct = (0..data.n())
            .filter(|&i| self.predict(data.row(i)) == data.class_index(i))
            .count();
        correct as f64 / data.n() as f64
    }
}

const MAGIC: &str = "sdca-mlr-model 1";

/// A trained model plus the settings it was trained with.
///
/// On disk: UTF-8 header lines `key value` starting with the magic line and
/// ending with `end`, followed by `d·Q` little-endian `f64` values of `W`
/// (row-major) and `Q` values of `b`.
///
/// ```text
/// sdca-mlr-model 1
/// d 50
/// classes 4
/// q 2
/// penalty exponential
/// alpha 5
/// lambda 0.01
/// rho 26.1
/// end
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: ModelState,
    pub penalty: PenaltyConfig,
    pub rho: f64,
}

impl ModelFile {
    pub fn save(&self, path: &Path) -> Result<(), MlrError> {
        let io = |source| MlrError::Io {
            path: path.to_path_buf(),
            source,
        };
        let m = &self.model;
        let mut buf = Vec::with_capacity(256 + 8 * (m.w.len() + m.b.len()));
        writeln!(buf, "{MAGIC}").map_err(io)?;
        writeln!(buf, "d {}", m.d).map_err(io)?;
        writeln!(buf, "classes {}", m.classes).map_err(io)?;
        writeln!(buf, "q {}", self.penalty.q).map_err(io)?;
        writeln!(buf, "penalty {}", self.penalty.kind).map_err(io)?;
        writeln!(buf, "alpha {}", self.penalty.alpha).map_err(io)?;
        writeln!(buf, "lambda {}", self.penalty.lambda).map_err(io)?;
        writeln!(buf, "rho {}", self.rho).map_err(io)?;
        writeln!(buf, "end").map_err(io)?;
        for v in m.w.iter().chain(&m.b) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, buf).map_err(io)
    }

    pub fn load(path: &Path) -> Result<ModelFile, MlrError> {
        let io = |source| MlrError::Io {
            path: path.to_path_buf(),
            source,
        };
        let bad = |msg: String| MlrError::ModelFormat(msg);
        let mut reader = BufReader::new(fs::File::open(path).map_err(io)?);
        let mut line = String::new();
        let mut read_line = |line: &mut String| -> Result<String, MlrError> {
            line.clear();
            if reader.read_line(line).map_err(io)? == 0 {
                return Err(bad("header ends before `end`".into()));
            }
            Ok(line.trim_end().to_string())
        };
        if read_line(&mut line)? != MAGIC {
            return Err(bad("not a model file (bad magic line)".into()));
        }
        let (mut d, mut classes, mut q, mut kind, mut alpha, mut lambda, mut rho) = (None, None, None, None, None, None, None);
        loop {
            let l = read_line(&mut line)?;
            if l == "end" {
                break;
            }
            let (key, value) = l.split_once(' ').ok_or_else(|| bad(format!("bad header line `{l}`")))?;
            let num = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("bad number in `{l}`")));
            let count = |v: &str| v.parse::<usize>().map_err(|_| bad(format!("bad count in `{l}`")));
            match key {
                "d" => d = Some(count(value)?),
                "classes" => classes = Some(count(value)?),
                "q" => q = Some(value.parse::<GroupNorm>().map_err(bad)?),
                "penalty" => kind = Some(value.parse::<PenaltyKind>().map_err(bad)?),
                "alpha" => alpha = Some(num(value)?),
                "lambda" => lambda = Some(num(value)?),
                "rho" => rho = Some(num(value)?),
                _ => {} // unknown keys are metadata
            }
        }
        let need = |name: &str| bad(format!("header is missing `{name}`"));
        let d = d.ok_or_else(|| need("d"))?;
        let classes = classes.ok_or_else(|| need("classes"))?;
        let penalty = PenaltyConfig::new(
            kind.ok_or_else(|| need("penalty"))?,
            alpha.ok_or_else(|| need("alpha"))?,
            lambda.ok_or_else(|| need("lambda"))?,
            q.ok_or_else(|| need("q"))?,
        )?;
        let rho = rho.ok_or_else(|| need("rho"))?;

        let mut body = Vec::new();
        reader.read_to_end(&mut body).map_err(io)?;
        let expected = 8 * (d * classes + classes);
        if body.len() != expected {
            return Err(bad(format!("expected {expected} bytes of parameters, found {}", body.len())));
        }
        let values: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(bad(format!("non-finite parameter at position {pos}")));
        }
        let mut model = ModelState::zeros(d, classes);
        model.w.copy_from_slice(&values[..d * classes]);
        model.b.copy_from_slice(&values[d * classes..]);
        model.refresh_t(penalty.q);
        Ok(ModelFile { model, penalty, rho })
    }
}
