//! Core numeric types and the elementary maps every quantizer is built from:
//! row centering, the cosine map, sign quantization, and Gaussian draws.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::index::BinaryCodeSet;
use crate::rng::RandomSource;

/// A dataset held column-wise: `d` feature rows by `n` sample columns.
///
/// Entries are validated finite at construction. `n = 0` is permitted — an
/// empty query set is legal input to encoding and serialization — while
/// training operations impose their own lower bounds on `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::InvalidInput(
                "feature matrix needs at least one feature row (d >= 1)".into(),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "feature matrix contains a non-finite entry".into(),
            ));
        }
        Ok(FeatureMatrix { data })
    }

    /// Build from column-major values (sample vectors concatenated).
    pub fn from_column_major(d: usize, n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != d * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {}x{} = {} values, got {}",
                d,
                n,
                d * n,
                values.len()
            )));
        }
        FeatureMatrix::new(DMatrix::from_column_slice(d, n, values))
    }

    pub fn d(&self) -> usize {
        self.data.nrows()
    }

    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Copy of the columns selected by `ids`, in the given order.
    pub fn select_columns(&self, ids: &[usize]) -> Result<Self> {
        for &i in ids {
            if i >= self.n() {
                return Err(Error::InvalidInput(format!(
                    "column id {} out of range for n = {}",
                    i,
                    self.n()
                )));
            }
        }
        Ok(FeatureMatrix {
            data: self.data.select_columns(ids.iter()),
        })
    }
}

/// Per-feature preprocessing choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocessKind {
    None,
    Center,
    Zscore,
}

impl PreprocessKind {
    pub fn name(self) -> &'static str {
        match self {
            PreprocessKind::None => "none",
            PreprocessKind::Center => "center",
            PreprocessKind::Zscore => "zscore",
        }
    }
}

impl std::str::FromStr for PreprocessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PreprocessKind::None),
            "center" => Ok(PreprocessKind::Center),
            "zscore" => Ok(PreprocessKind::Zscore),
            other => Err(Error::InvalidInput(format!(
                "unknown preprocessing '{other}' (expected none, center or zscore)"
            ))),
        }
    }
}

/// Fitted preprocessing parameters, stored in every model so that encoding
/// new data applies exactly the transform seen at fit time.
///
/// The mean and scale vectors are always materialized (zeros/ones when
/// unused) so serialization is uniform across kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocess {
    pub kind: PreprocessKind,
    pub mean: DVector<f64>,
    pub scale: DVector<f64>,
}

impl Preprocess {
    /// Fit preprocessing statistics on training data.
    ///
    /// Z-scoring uses the sample standard deviation (n − 1 denominator);
    /// constant features keep scale 1 so they pass through centered only.
    pub fn fit(kind: PreprocessKind, x: &FeatureMatrix) -> Result<Self> {
        if x.n() == 0 {
            return Err(Error::InvalidInput(
                "cannot fit preprocessing on an empty sample set".into(),
            ));
        }
        let d = x.d();
        let mut mean = DVector::zeros(d);
        let mut scale = DVector::from_element(d, 1.0);
        if kind != PreprocessKind::None {
            for (i, row) in x.data().row_iter().enumerate() {
                mean[i] = row.sum() / x.n() as f64;
            }
        }
        if kind == PreprocessKind::Zscore && x.n() >= 2 {
            for (i, row) in x.data().row_iter().enumerate() {
                let ss: f64 = row.iter().map(|v| (v - mean[i]) * (v - mean[i])).sum();
                let sd = (ss / (x.n() - 1) as f64).sqrt();
                if sd > 0.0 {
                    scale[i] = sd;
                }
            }
        }
        Ok(Preprocess { kind, mean, scale })
    }

    /// Identity preprocessing for a given dimension.
    pub fn identity(d: usize) -> Self {
        Preprocess {
            kind: PreprocessKind::None,
            mean: DVector::zeros(d),
            scale: DVector::from_element(d, 1.0),
        }
    }

    pub fn d(&self) -> usize {
        self.mean.len()
    }

    /// Apply the stored transform to a feature set.
    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.d() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "preprocessing was fitted on d = {}, data has d = {}",
                self.d(),
                x.d()
            )));
        }
        if self.kind == PreprocessKind::None {
            return Ok(x.clone());
        }
        let mut data = x.data().clone();
        for (i, mut row) in data.row_iter_mut().enumerate() {
            let (m, s) = (self.mean[i], self.scale[i]);
            for v in row.iter_mut() {
                *v = (*v - m) / s;
            }
        }
        Ok(FeatureMatrix { data })
    }
}

/// A trained cosine mapping: `r` projection columns, per-bit offsets, the
/// seed that produced it, and the preprocessing it expects.
///
/// `b` is unconstrained here (the cosine map is 2π-periodic in each offset);
/// the offset-training stage additionally guarantees entries in (−π/2, π/2].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionModel {
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
    pub seed: u64,
    pub preprocess: Preprocess,
}

impl ProjectionModel {
    pub fn new(
        w: DMatrix<f64>,
        b: DVector<f64>,
        seed: u64,
        preprocess: Preprocess,
    ) -> Result<Self> {
        if w.nrows() == 0 || w.ncols() == 0 {
            return Err(Error::InvalidInput(
                "projection matrix must be at least 1x1".into(),
            ));
        }
        if w.ncols() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "projection has r = {} columns but offset vector has {} entries",
                w.ncols(),
                b.len()
            )));
        }
        if preprocess.d() != w.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "preprocessing dimension {} does not match projection d = {}",
                preprocess.d(),
                w.nrows()
            )));
        }
        if w.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "projection model contains a non-finite entry".into(),
            ));
        }
        Ok(ProjectionModel {
            w,
            b,
            seed,
            preprocess,
        })
    }

    pub fn d(&self) -> usize {
        self.w.nrows()
    }

    pub fn r(&self) -> usize {
        self.w.ncols()
    }

    /// Encode features to binary codes: preprocess, cosine map, sign.
    pub fn encode(&self, x: &FeatureMatrix) -> Result<BinaryCodeSet> {
        let xp = self.preprocess.apply(x)?;
        sign_quantize(&cos_features(&self.w, &self.b, xp.data()))
    }
}

/// Subtract each row's mean: the alignment (centering) operator applied on
/// the right, computed in O(rn) without materializing an n×n matrix.
pub fn center_rows(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::InvalidInput("cannot center an empty matrix".into()));
    }
    let n = m.ncols() as f64;
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        // Constant rows are annihilated exactly; the summed mean would leave
        // a rounding residue and downstream code relies on exact zeros here
        // (a constant row means "this bit never varies", gradient included).
        let first = row[0];
        if row.iter().all(|&v| v == first) {
            row.fill(0.0);
            continue;
        }
        let mean = row.sum() / n;
        for v in row.iter_mut() {
            *v -= mean;
        }
    }
    Ok(out)
}

/// cos(Wᵀ X + b 1ᵀ) for raw matrices; shared by the model-level map and the
/// quantizers that use the same encode rule.
pub(crate) fn cos_features(w: &DMatrix<f64>, b: &DVector<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = w.transpose() * x;
    for (j, mut row) in p.row_iter_mut().enumerate() {
        let offset = b[j];
        for v in row.iter_mut() {
            *v = (*v + offset).cos();
        }
    }
    p
}

/// The mapped values cos(w_jᵀ x_i + b_j), one row per projection.
///
/// Operates on `x` as given; preprocessing is the caller's business (encode
/// applies the model's stored transform before calling this).
pub fn cos_map(model: &ProjectionModel, x: &FeatureMatrix) -> Result<DMatrix<f64>> {
    if model.d() != x.d() {
        return Err(Error::DimensionMismatch(format!(
            "model expects d = {}, features have d = {}",
            model.d(),
            x.d()
        )));
    }
    Ok(cos_features(&model.w, &model.b, x.data()))
}

/// Threshold a real matrix at zero into packed codes; bit (j, i) is 1 iff
/// entry (j, i) ≥ 0 (the sign convention assigns 0 to the positive side).
pub fn sign_quantize(v: &DMatrix<f64>) -> Result<BinaryCodeSet> {
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidInput(
            "cannot sign-quantize a NaN entry".into(),
        ));
    }
    Ok(BinaryCodeSet::from_bit_fn(v.nrows(), v.ncols(), |j, i| {
        v[(j, i)] >= 0.0
    }))
}

/// d×r matrix of i.i.d. standard normal draws, filled column by column (the
/// draw order is part of the determinism contract).
pub fn gaussian_matrix(rng: &mut RandomSource, d: usize, r: usize) -> Result<DMatrix<f64>> {
    if d == 0 || r == 0 {
        return Err(Error::InvalidInput(format!(
            "gaussian matrix dimensions must be positive, got {d}x{r}"
        )));
    }
    let mut m = DMatrix::zeros(d, r);
    for j in 0..r {
        for i in 0..d {
            m[(i, j)] = rng.normal();
        }
    }
    Ok(m)
}
