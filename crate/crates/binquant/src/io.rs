//! File formats: feature matrices (`BQF1`), packed code sets (`BQC1`),
//! fitted models (`BQM1`), IDX image/label ingestion, and the results CSV.
//!
//! All three custom formats are little-endian and fully specified here so
//! other implementations can reproduce them byte for byte.
//!
//! `BQF1`: magic, d (u32), n (u64), element-size tag (u8: 4 = f32, 8 = f64),
//! then d·n values column-major (one sample per column).
//!
//! `BQC1`: magic, r (u32), n (u64), then n·ceil(r/64) u64 code words in the
//! index module's bit order; padding bits must be zero.
//!
//! `BQM1`: magic, method tag (u8), preprocessing kind (u8), d (u32),
//! r (u32), seed (u64), mean (d×f64), scale (d×f64), W (d·r f64
//! column-major), b (r×f64), then method extras: nothing for LSH/ATQ, the
//! bandwidth γ (f64) for CQ, the PCA basis (npca u32, d·npca f64) plus r
//! modes (direction u32, k u32, eigenvalue f64) for SH, and the r·r rotation
//! for ITQ.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::baselines::{BaselineExtras, BaselineModel, ShMode};
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::index::BinaryCodeSet;
use crate::model::{Method, Model};
use crate::primitives::{FeatureMatrix, Preprocess, PreprocessKind, ProjectionModel};

const FEATURE_MAGIC: &[u8; 4] = b"BQF1";
const CODE_MAGIC: &[u8; 4] = b"BQC1";
const MODEL_MAGIC: &[u8; 4] = b"BQM1";
const IDX_IMAGES_MAGIC: u32 = 2051;
const IDX_LABELS_MAGIC: u32 = 2049;

/// Bounds-checked little-endian reader over an in-memory file image;
/// error messages carry the byte offset of the failure.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], path: &'a Path) -> Self {
        Reader { buf, pos: 0, path }
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let available = self.buf.len() - self.pos;
        if len > available {
            return Err(Error::format(
                self.path,
                format!(
                    "truncated at byte offset {}: {what} needs {len} bytes, {available} remain",
                    self.pos
                ),
            ));
        }
        let out = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32_le(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u32_be(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64_le(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64_le(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = self.take(
            count
                .checked_mul(8)
                .ok_or_else(|| Error::format(self.path, format!("{what} count overflows")))?,
            what,
        )?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn expect_magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != magic {
            return Err(Error::format(
                self.path,
                format!(
                    "bad magic at byte offset 0: expected {:?}, got {:?}",
                    String::from_utf8_lossy(magic),
                    String::from_utf8_lossy(got)
                ),
            ));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(
                self.path,
                format!(
                    "{} trailing bytes after byte offset {}",
                    self.buf.len() - self.pos,
                    self.pos
                ),
            ));
        }
        Ok(())
    }

    fn count(&self, value: u64, what: &str) -> Result<usize> {
        usize::try_from(value)
            .map_err(|_| Error::format(self.path, format!("{what} {value} exceeds address space")))
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}

/// Save a feature matrix as `BQF1` with f64 payload (lossless round trip).
pub fn save_features(path: &Path, x: &FeatureMatrix) -> Result<()> {
    let mut out = Vec::with_capacity(17 + 8 * x.d() * x.n());
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&(x.d() as u32).to_le_bytes());
    out.extend_from_slice(&(x.n() as u64).to_le_bytes());
    out.push(8);
    for v in x.data().iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_file(path, &out)
}

fn parse_features(bytes: &[u8], path: &Path) -> Result<FeatureMatrix> {
    let mut r = Reader::new(bytes, path);
    r.expect_magic(FEATURE_MAGIC)?;
    let d = r.u32_le("feature dimension")? as usize;
    let n_raw = r.u64_le("sample count")?;
    let n = r.count(n_raw, "sample count")?;
    let elem = r.u8("element-size tag")?;
    let count = d
        .checked_mul(n)
        .ok_or_else(|| Error::format(path, "d*n overflows"))?;
    let values = match elem {
        8 => r.f64_vec(count, "f64 payload")?,
        4 => {
            let bytes = r.take(
                count
                    .checked_mul(4)
                    .ok_or_else(|| Error::format(path, "payload size overflows"))?,
                "f32 payload",
            )?;
            bytes
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
                .collect()
        }
        other => {
            return Err(Error::format(
                path,
                format!("unknown element-size tag {other} (expected 4 or 8)"),
            ))
        }
    };
    r.finish()?;
    FeatureMatrix::from_column_major(d, n, &values)
}

fn parse_csv_features(bytes: &[u8], path: &Path) -> Result<FeatureMatrix> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::format(path, "neither a BQF1 file nor UTF-8 text"))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::format(
                    path,
                    format!("line {}: '{}' is not a number", lineno + 1, field.trim()),
                )
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::format(
                    path,
                    format!(
                        "line {}: {} fields, expected {}",
                        lineno + 1,
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(path, "no data rows"));
    }
    let n = rows.len();
    let d = rows[0].len();
    // CSV rows are samples; the matrix stores one sample per column.
    let data = DMatrix::from_fn(d, n, |i, j| rows[j][i]);
    FeatureMatrix::new(data)
}

/// Load a `BQF1` feature file, falling back to CSV (one sample per line,
/// comma-separated) when the magic is absent.
pub fn load_features(path: &Path) -> Result<FeatureMatrix> {
    let bytes = read_file(path)?;
    if bytes.len() >= 4 && &bytes[..4] == FEATURE_MAGIC {
        parse_features(&bytes, path)
    } else {
        parse_csv_features(&bytes, path)
    }
}

/// Load any supported dataset file by sniffing its leading bytes: `BQF1`
/// features, IDX images, or CSV text.
pub fn load_dataset(path: &Path) -> Result<FeatureMatrix> {
    let bytes = read_file(path)?;
    if bytes.len() >= 4 && &bytes[..4] == FEATURE_MAGIC {
        return parse_features(&bytes, path);
    }
    if bytes.len() >= 4 && u32::from_be_bytes(bytes[..4].try_into().unwrap()) == IDX_IMAGES_MAGIC {
        return parse_idx_images(&bytes, path);
    }
    parse_csv_features(&bytes, path)
}

fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<FeatureMatrix> {
    let mut r = Reader::new(bytes, path);
    let magic = r.u32_be("IDX magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::format(
            path,
            format!("IDX image magic should be {IDX_IMAGES_MAGIC}, got {magic}"),
        ));
    }
    let n = r.u32_be("image count")? as usize;
    let rows = r.u32_be("row count")? as usize;
    let cols = r.u32_be("column count")? as usize;
    let d = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::format(path, "rows*cols overflows"))?;
    let payload = r.take(
        d.checked_mul(n)
            .ok_or_else(|| Error::format(path, "pixel count overflows"))?,
        "pixel payload",
    )?;
    r.finish()?;
    if d == 0 {
        return Err(Error::format(path, "zero-sized images"));
    }
    // One image per column, pixels row-major within the column, scaled to
    // [0, 1] so downstream cosine arguments stay in a sane range.
    let data = DMatrix::from_fn(d, n, |i, j| f64::from(payload[j * d + i]) / 255.0);
    FeatureMatrix::new(data)
}

/// Load an IDX image file (magic 2051) as a feature matrix: images become
/// columns of rows·cols pixel features scaled to [0, 1].
pub fn load_idx_images(path: &Path) -> Result<FeatureMatrix> {
    parse_idx_images(&read_file(path)?, path)
}

/// Load an IDX label file (magic 2049) as a byte vector.
pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_file(path)?;
    let mut r = Reader::new(&bytes, path);
    let magic = r.u32_be("IDX magic")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::format(
            path,
            format!("IDX label magic should be {IDX_LABELS_MAGIC}, got {magic}"),
        ));
    }
    let n = r.u32_be("label count")? as usize;
    let labels = r.take(n, "label payload")?.to_vec();
    r.finish()?;
    Ok(labels)
}

/// Save packed codes as `BQC1`.
pub fn save_codes(path: &Path, codes: &BinaryCodeSet) -> Result<()> {
    let mut out = Vec::with_capacity(16 + 8 * codes.words().len());
    out.extend_from_slice(CODE_MAGIC);
    out.extend_from_slice(&(codes.r() as u32).to_le_bytes());
    out.extend_from_slice(&(codes.len() as u64).to_le_bytes());
    for w in codes.words() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    write_file(path, &out)
}

/// Load a `BQC1` code file; padding bits are validated zero.
pub fn load_codes(path: &Path) -> Result<BinaryCodeSet> {
    let bytes = read_file(path)?;
    let mut rd = Reader::new(&bytes, path);
    rd.expect_magic(CODE_MAGIC)?;
    let r = rd.u32_le("code width")? as usize;
    let n_raw = rd.u64_le("code count")?;
    let n = rd.count(n_raw, "code count")?;
    let words_per_code = r.div_ceil(64);
    let total = n
        .checked_mul(words_per_code)
        .ok_or_else(|| Error::format(path, "word count overflows"))?;
    let raw = rd.take(
        total
            .checked_mul(8)
            .ok_or_else(|| Error::format(path, "payload size overflows"))?,
        "code words",
    )?;
    let words: Vec<u64> = raw
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    rd.finish()?;
    BinaryCodeSet::from_words(r, n, words)
}

fn push_matrix(out: &mut Vec<u8>, m: &DMatrix<f64>) {
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn push_vector(out: &mut Vec<u8>, v: &DVector<f64>) {
    for x in v.iter() {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

/// Save a fitted model as `BQM1`.
pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    let (w, b, seed, prep) = match model {
        Model::Atq(m) => (&m.w, &m.b, m.seed, &m.preprocess),
        Model::Baseline(m) => (&m.w, &m.b, m.seed, &m.preprocess),
    };
    let d = w.nrows();
    let r = w.ncols();
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.push(model.method().tag());
    out.push(match prep.kind {
        PreprocessKind::None => 0,
        PreprocessKind::Center => 1,
        PreprocessKind::Zscore => 2,
    });
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&(r as u32).to_le_bytes());
    out.extend_from_slice(&seed.to_le_bytes());
    push_vector(&mut out, &prep.mean);
    push_vector(&mut out, &prep.scale);
    push_matrix(&mut out, w);
    push_vector(&mut out, b);
    if let Model::Baseline(m) = model {
        match &m.extras {
            BaselineExtras::Lsh => {}
            BaselineExtras::Cq { gamma } => out.extend_from_slice(&gamma.to_le_bytes()),
            BaselineExtras::Sh { basis, modes } => {
                out.extend_from_slice(&(basis.ncols() as u32).to_le_bytes());
                push_matrix(&mut out, basis);
                for mode in modes {
                    out.extend_from_slice(&(mode.direction as u32).to_le_bytes());
                    out.extend_from_slice(&(mode.k as u32).to_le_bytes());
                    out.extend_from_slice(&mode.eigenvalue.to_le_bytes());
                }
            }
            BaselineExtras::Itq { rotation } => push_matrix(&mut out, rotation),
        }
    }
    write_file(path, &out)
}

fn finite_or_err(values: &[f64], path: &Path, what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::format(
            path,
            format!("{what} contains a non-finite value"),
        ));
    }
    Ok(())
}

/// Load a `BQM1` model file.
pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = read_file(path)?;
    let mut rd = Reader::new(&bytes, path);
    rd.expect_magic(MODEL_MAGIC)?;
    let method =
        Method::from_tag(rd.u8("method tag")?).map_err(|e| Error::format(path, e.to_string()))?;
    let kind = match rd.u8("preprocessing kind")? {
        0 => PreprocessKind::None,
        1 => PreprocessKind::Center,
        2 => PreprocessKind::Zscore,
        other => {
            return Err(Error::format(
                path,
                format!("unknown preprocessing kind {other}"),
            ))
        }
    };
    let d = rd.u32_le("dimension d")? as usize;
    let r = rd.u32_le("code width r")? as usize;
    if d == 0 || r == 0 {
        return Err(Error::format(
            path,
            format!("degenerate model shape {d}x{r}"),
        ));
    }
    let seed = rd.u64_le("seed")?;
    let mean = rd.f64_vec(d, "preprocessing mean")?;
    let scale = rd.f64_vec(d, "preprocessing scale")?;
    finite_or_err(&mean, path, "preprocessing mean")?;
    finite_or_err(&scale, path, "preprocessing scale")?;
    if scale.contains(&0.0) {
        return Err(Error::format(path, "preprocessing scale contains zero"));
    }
    let w_values = rd.f64_vec(d * r, "projection W")?;
    finite_or_err(&w_values, path, "projection W")?;
    let b_values = rd.f64_vec(r, "offset b")?;
    finite_or_err(&b_values, path, "offset b")?;

    let preprocess = Preprocess {
        kind,
        mean: DVector::from_vec(mean),
        scale: DVector::from_vec(scale),
    };
    let w = DMatrix::from_column_slice(d, r, &w_values);
    let b = DVector::from_vec(b_values);

    let extras = match method {
        Method::Atq => {
            rd.finish()?;
            return Ok(Model::Atq(ProjectionModel::new(w, b, seed, preprocess)?));
        }
        Method::Lsh => BaselineExtras::Lsh,
        Method::Cq => {
            let gamma = rd.f64_le("bandwidth gamma")?;
            if !gamma.is_finite() {
                return Err(Error::format(path, "bandwidth gamma is non-finite"));
            }
            BaselineExtras::Cq { gamma }
        }
        Method::Sh => {
            let npca = rd.u32_le("PCA width")? as usize;
            if npca == 0 || npca > d {
                return Err(Error::format(
                    path,
                    format!("PCA width {npca} out of range"),
                ));
            }
            let basis_values = rd.f64_vec(d * npca, "PCA basis")?;
            finite_or_err(&basis_values, path, "PCA basis")?;
            let mut modes = Vec::with_capacity(r);
            for _ in 0..r {
                let direction = rd.u32_le("mode direction")? as usize;
                let k = rd.u32_le("mode index")? as usize;
                let eigenvalue = rd.f64_le("mode eigenvalue")?;
                if direction >= npca || k == 0 || !eigenvalue.is_finite() {
                    return Err(Error::format(path, "invalid spectral mode entry"));
                }
                modes.push(ShMode {
                    direction,
                    k,
                    eigenvalue,
                });
            }
            BaselineExtras::Sh {
                basis: DMatrix::from_column_slice(d, npca, &basis_values),
                modes,
            }
        }
        Method::Itq => {
            let rot_values = rd.f64_vec(r * r, "rotation")?;
            finite_or_err(&rot_values, path, "rotation")?;
            BaselineExtras::Itq {
                rotation: DMatrix::from_column_slice(r, r, &rot_values),
            }
        }
    };
    rd.finish()?;
    Ok(Model::Baseline(BaselineModel {
        w,
        b,
        seed,
        preprocess,
        extras,
    }))
}

/// Write evaluation reports as CSV, sorted by (method, bits, neighbors).
///
/// Timing columns are zeroed unless `include_timings` is set, keeping the
/// default output byte-identical across machines and runs.
pub fn write_results_csv(
    path: &Path,
    reports: &[&EvalReport],
    include_timings: bool,
) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("no reports to write".into()));
    }
    let mut sorted: Vec<&EvalReport> = reports.to_vec();
    sorted.sort_by(|a, b| {
        a.method
            .name()
            .cmp(b.method.name())
            .then(a.bits.cmp(&b.bits))
            .then(a.neighbors.cmp(&b.neighbors))
    });
    let mut out = String::from("method,bits,neighbors,seed,map,fit_ms,encode_ms,query_ms\n");
    for rep in sorted {
        let (fit, encode, query) = if include_timings {
            (rep.fit_ms, rep.encode_ms, rep.query_ms)
        } else {
            (0.0, 0.0, 0.0)
        };
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.3},{:.3},{:.3}\n",
            rep.method.name(),
            rep.bits,
            rep.neighbors,
            rep.seed,
            rep.map,
            fit,
            encode,
            query
        ));
    }
    write_file(path, out.as_bytes())
}
