//! The four comparison quantizers — LSH, CQ, SH, ITQ — under one fit/encode
//! contract.
//!
//! Every model reduces to a projection W, per-bit offsets b, and an encode
//! rule that is either linear (sgn(wᵀx + b): LSH, ITQ) or cosine
//! (sgn(cos(wᵀx + b)): CQ, SH). SH's sinusoid eigenfunctions and ITQ's
//! rotated principal components fold their internal means and phases into
//! (W, b) exactly, so the model shape is uniform; method-specific artifacts
//! (PCA basis, mode selection, rotation) ride along as extras.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::index::BinaryCodeSet;
use crate::model::Method;
use crate::primitives::{
    cos_features, gaussian_matrix, sign_quantize, FeatureMatrix, Preprocess, PreprocessKind,
};
use crate::rng::RandomSource;

/// Cap on the seeded subsample used for the CQ median-distance heuristic.
const MEDIAN_SUBSAMPLE: usize = 1000;

/// One selected spectral-hashing mode: the `k`-th sinusoid along principal
/// direction `direction`, with analytic eigenvalue (kπ/R)².
#[derive(Debug, Clone, PartialEq)]
pub struct ShMode {
    pub direction: usize,
    pub k: usize,
    pub eigenvalue: f64,
}

/// Method-specific model payload beyond the shared (W, b).
#[derive(Debug, Clone, PartialEq)]
pub enum BaselineExtras {
    Lsh,
    /// The bandwidth actually used to scale W, kept for reproducibility.
    Cq {
        gamma: f64,
    },
    /// PCA basis (d × npca) and the r selected modes, eigenvalues ascending.
    Sh {
        basis: DMatrix<f64>,
        modes: Vec<ShMode>,
    },
    /// The learned orthogonal rotation (r × r).
    Itq {
        rotation: DMatrix<f64>,
    },
}

/// A fitted baseline quantizer.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
    pub seed: u64,
    pub preprocess: Preprocess,
    pub extras: BaselineExtras,
}

impl BaselineModel {
    pub fn method(&self) -> Method {
        match self.extras {
            BaselineExtras::Lsh => Method::Lsh,
            BaselineExtras::Cq { .. } => Method::Cq,
            BaselineExtras::Sh { .. } => Method::Sh,
            BaselineExtras::Itq { .. } => Method::Itq,
        }
    }

    pub fn d(&self) -> usize {
        self.w.nrows()
    }

    pub fn r(&self) -> usize {
        self.w.ncols()
    }
}

fn linear_features(w: &DMatrix<f64>, b: &DVector<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = w.tr_mul(x);
    for (j, mut row) in p.row_iter_mut().enumerate() {
        let offset = b[j];
        for v in row.iter_mut() {
            *v += offset;
        }
    }
    p
}

fn check_fit_args(x: &FeatureMatrix, r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidInput("code width r must be >= 1".into()));
    }
    if x.n() == 0 {
        return Err(Error::InvalidInput(
            "cannot fit a quantizer on an empty sample set".into(),
        ));
    }
    Ok(())
}

/// Random-projection hashing: seeded Gaussian directions, zero offsets,
/// encode rule sgn(wᵀx).
pub fn lsh_fit(
    x: &FeatureMatrix,
    r: usize,
    seed: u64,
    preprocess: PreprocessKind,
) -> Result<BaselineModel> {
    check_fit_args(x, r)?;
    let prep = Preprocess::fit(preprocess, x)?;
    let mut rng = RandomSource::new(seed);
    let w = gaussian_matrix(&mut rng, x.d(), r)?;
    Ok(BaselineModel {
        w,
        b: DVector::zeros(r),
        seed,
        preprocess: prep,
        extras: BaselineExtras::Lsh,
    })
}

/// Cosine quantization: sgn(cos(wᵀx + b)) with Gaussian directions scaled by
/// a bandwidth γ and offsets uniform on [0, 2π).
///
/// When `gamma` is `None` the bandwidth defaults to the reciprocal of the
/// median pairwise Euclidean distance over a seeded subsample of at most
/// 1000 training points (even pair counts average the two middle distances);
/// a vanishing or undefined median falls back to γ = 1. The draw order —
/// Gaussian matrix, then offsets, then the subsample permutation — is part
/// of the determinism contract.
pub fn cq_fit(
    x: &FeatureMatrix,
    r: usize,
    seed: u64,
    gamma: Option<f64>,
    preprocess: PreprocessKind,
) -> Result<BaselineModel> {
    check_fit_args(x, r)?;
    if let Some(g) = gamma {
        if !g.is_finite() || g < 0.0 {
            return Err(Error::InvalidInput(format!(
                "bandwidth gamma must be finite and non-negative, got {g}"
            )));
        }
    }
    let prep = Preprocess::fit(preprocess, x)?;
    let xp = prep.apply(x)?;
    let mut rng = RandomSource::new(seed);
    let g = gaussian_matrix(&mut rng, x.d(), r)?;
    let b = DVector::from_fn(r, |_, _| rng.uniform() * 2.0 * std::f64::consts::PI);
    let gamma = match gamma {
        Some(v) => v,
        None => {
            let perm = rng.permutation(x.n());
            1.0 / median_pairwise_distance(xp.data(), &perm[..x.n().min(MEDIAN_SUBSAMPLE)])
        }
    };
    Ok(BaselineModel {
        w: g * gamma,
        b,
        seed,
        preprocess: prep,
        extras: BaselineExtras::Cq { gamma },
    })
}

/// Median Euclidean distance over all pairs of the selected columns; 1.0
/// when fewer than two points or when the median vanishes (duplicates).
fn median_pairwise_distance(x: &DMatrix<f64>, ids: &[usize]) -> f64 {
    let mut dists = Vec::with_capacity(ids.len().saturating_sub(1) * ids.len() / 2);
    for (a, &i) in ids.iter().enumerate() {
        for &j in &ids[a + 1..] {
            dists.push((x.column(i) - x.column(j)).norm());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(|p, q| p.partial_cmp(q).expect("finite distances"));
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        (dists[mid - 1] + dists[mid]) / 2.0
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Principal directions of the (internally centered) data: eigenvectors of
/// the d×d sample covariance, eigenvalues descending. Errors name the
/// achieved rank when fewer than `take` directions carry variance.
fn pca(
    x: &DMatrix<f64>,
    take: usize,
    method: &str,
) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    let n = x.ncols();
    let d = x.nrows();
    let mut mu = DVector::zeros(d);
    for (i, row) in x.row_iter().enumerate() {
        mu[i] = row.sum() / n as f64;
    }
    let mut xc = x.clone();
    for (i, mut row) in xc.row_iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v -= mu[i];
        }
    }
    let cov = &xc * xc.transpose() / (n - 1) as f64;
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let lead = eig.eigenvalues[order[0]].max(0.0);
    let tol = 1e-9 * lead.max(f64::MIN_POSITIVE);
    let rank = order
        .iter()
        .take_while(|&&i| eig.eigenvalues[i] > tol)
        .count();
    if rank < take {
        return Err(Error::InvalidInput(format!(
            "{method} needs {take} principal directions but the covariance has rank {rank}"
        )));
    }
    let basis = DMatrix::from_fn(d, take, |i, j| eig.eigenvectors[(i, order[j])]);
    let values = DVector::from_fn(take, |j, _| eig.eigenvalues[order[j]]);
    Ok((basis, values, mu))
}

/// Spectral hashing: PCA to min(r, d) directions, analytic sinusoid modes
/// enumerated per direction, and the r smallest-eigenvalue modes kept.
///
/// Along direction i with projected range [mn_i, mn_i + R_i], mode k is the
/// eigenfunction sin(π/2 + kπ(y − mn_i)/R_i) with eigenvalue (kπ/R_i)²; its
/// sign equals sgn(cos(wᵀx + b)) for w = (kπ/R_i)·a_i and a matching offset,
/// so the fitted model uses the shared cosine encode rule.
pub fn sh_fit(
    x: &FeatureMatrix,
    r: usize,
    seed: u64,
    preprocess: PreprocessKind,
) -> Result<BaselineModel> {
    check_fit_args(x, r)?;
    if x.n() <= r {
        return Err(Error::InvalidInput(format!(
            "spectral hashing needs n > r, got n = {} for r = {r}",
            x.n()
        )));
    }
    let prep = Preprocess::fit(preprocess, x)?;
    let xp = prep.apply(x)?;
    let npca = r.min(x.d());
    let (basis, _values, mu) = pca(xp.data(), npca, "spectral hashing")?;

    let mut y = basis.tr_mul(xp.data());
    let proj_mu = basis.tr_mul(&mu);
    let mut mins = vec![f64::INFINITY; npca];
    let mut ranges = vec![0.0f64; npca];
    for (i, mut row) in y.row_iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v -= proj_mu[i];
        }
        let mn = row.min();
        let mx = row.max();
        mins[i] = mn;
        ranges[i] = mx - mn;
    }
    let r_max = ranges.iter().copied().fold(0.0f64, f64::max);
    if r_max <= 0.0 {
        return Err(Error::InvalidInput(
            "spectral hashing needs spread in the projected data".into(),
        ));
    }

    // Enumerate candidate modes; the direction with the widest range alone
    // contributes r of them, so at least r candidates always exist.
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &range) in ranges.iter().enumerate() {
        if range <= 0.0 {
            continue;
        }
        let max_mode = ((r + 1) as f64 * range / r_max).ceil() as usize;
        for k in 1..max_mode {
            let omega = k as f64 * std::f64::consts::PI / range;
            candidates.push((omega * omega, i, k));
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite eigenvalues")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    candidates.truncate(r);
    if candidates.len() < r {
        return Err(Error::InvalidInput(format!(
            "spectral hashing enumerated only {} modes for r = {r}",
            candidates.len()
        )));
    }

    let mut w = DMatrix::zeros(x.d(), r);
    let mut b = DVector::zeros(r);
    let mut modes = Vec::with_capacity(r);
    for (j, &(eigenvalue, i, k)) in candidates.iter().enumerate() {
        let omega = k as f64 * std::f64::consts::PI / ranges[i];
        let a_i = basis.column(i);
        w.set_column(j, &(a_i * omega));
        b[j] = -omega * (a_i.dot(&mu) + mins[i]);
        modes.push(ShMode {
            direction: i,
            k,
            eigenvalue,
        });
    }
    Ok(BaselineModel {
        w,
        b,
        seed,
        preprocess: prep,
        extras: BaselineExtras::Sh { basis, modes },
    })
}

/// Iterative-quantization inner loop: alternate B = sgn(VR) with the
/// orthogonal-Procrustes update of R, returning the final rotation and the
/// per-iteration quantization losses ‖B − VR‖²_F (non-increasing).
///
/// Exposed separately from [`itq_fit`] so the loss sequence can be checked
/// without storing it in the model.
pub fn itq_train(
    v: &DMatrix<f64>,
    r0: &DMatrix<f64>,
    iters: usize,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let r = v.ncols();
    if r0.nrows() != r || r0.ncols() != r {
        return Err(Error::DimensionMismatch(format!(
            "rotation must be {r}x{r} to match {} projected dimensions",
            r
        )));
    }
    let mut rot = r0.clone();
    let mut losses = Vec::with_capacity(iters);
    for _ in 0..iters {
        let vr = v * &rot;
        let bmat = vr.map(|t| if t >= 0.0 { 1.0 } else { -1.0 });
        losses.push((&bmat - &vr).norm_squared());
        let svd = bmat.tr_mul(v).svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        rot = v_t.transpose() * u.transpose();
    }
    Ok((rot, losses))
}

/// ITQ: PCA to r dimensions, then a learned orthogonal rotation minimizing
/// the binary quantization loss, seeded from a random orthogonal start.
pub fn itq_fit(
    x: &FeatureMatrix,
    r: usize,
    seed: u64,
    iters: usize,
    preprocess: PreprocessKind,
) -> Result<BaselineModel> {
    check_fit_args(x, r)?;
    if x.n() <= r {
        return Err(Error::InvalidInput(format!(
            "iterative quantization needs n > r, got n = {} for r = {r}",
            x.n()
        )));
    }
    if r > x.d() {
        return Err(Error::InvalidInput(format!(
            "iterative quantization needs r <= d, got r = {r} for d = {}",
            x.d()
        )));
    }
    let prep = Preprocess::fit(preprocess, x)?;
    let xp = prep.apply(x)?;
    let (basis, _values, mu) = pca(xp.data(), r, "iterative quantization")?;

    let mut xc = xp.data().clone();
    for (i, mut row) in xc.row_iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v -= mu[i];
        }
    }
    let v = xc.tr_mul(&basis); // n×r projected data

    let mut rng = RandomSource::new(seed);
    let g = gaussian_matrix(&mut rng, r, r)?;
    let r0 = g.qr().q();
    let (rot, _losses) = itq_train(&v, &r0, iters)?;

    let w = &basis * &rot;
    let b = -w.tr_mul(&mu);
    Ok(BaselineModel {
        w,
        b,
        seed,
        preprocess: prep,
        extras: BaselineExtras::Itq { rotation: rot },
    })
}

/// Encode features with a fitted baseline: apply the stored preprocessing,
/// project, and quantize under the method's rule (linear sign for LSH/ITQ,
/// cosine sign for CQ/SH).
pub fn baseline_encode(model: &BaselineModel, x: &FeatureMatrix) -> Result<BinaryCodeSet> {
    let xp = model.preprocess.apply(x)?;
    let features = match model.extras {
        BaselineExtras::Lsh | BaselineExtras::Itq { .. } => {
            linear_features(&model.w, &model.b, xp.data())
        }
        BaselineExtras::Cq { .. } | BaselineExtras::Sh { .. } => {
            cos_features(&model.w, &model.b, xp.data())
        }
    };
    sign_quantize(&features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::ProjectionModel;
    use approx::assert_abs_diff_eq;

    fn random_features(seed: u64, d: usize, n: usize) -> FeatureMatrix {
        let mut rng = RandomSource::new(seed);
        FeatureMatrix::new(gaussian_matrix(&mut rng, d, n).unwrap()).unwrap()
    }

    #[test]
    fn lsh_shapes_and_zero_offsets() {
        let x = random_features(1, 5, 20);
        let m = lsh_fit(&x, 8, 3, PreprocessKind::Center).unwrap();
        assert_eq!(m.w.shape(), (5, 8));
        assert!(m.b.iter().all(|&v| v == 0.0));
        assert_eq!(m.method(), Method::Lsh);
    }

    #[test]
    fn lsh_is_deterministic_and_seed_sensitive() {
        let x = random_features(1, 4, 15);
        let a = lsh_fit(&x, 6, 9, PreprocessKind::None).unwrap();
        let b = lsh_fit(&x, 6, 9, PreprocessKind::None).unwrap();
        let c = lsh_fit(&x, 6, 10, PreprocessKind::None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.w, c.w);
    }

    #[test]
    fn lsh_codes_of_negated_data_are_complementary() {
        let x = random_features(2, 6, 25);
        let neg = FeatureMatrix::new(-x.data().clone()).unwrap();
        let m = lsh_fit(&x, 16, 4, PreprocessKind::None).unwrap();
        let cx = baseline_encode(&m, &x).unwrap();
        let cn = baseline_encode(&m, &neg).unwrap();
        for i in 0..25 {
            for j in 0..16 {
                assert_ne!(cx.get_bit(i, j), cn.get_bit(i, j));
            }
        }
    }

    #[test]
    fn cq_offsets_live_in_the_principal_circle() {
        let x = random_features(3, 5, 30);
        let m = cq_fit(&x, 16, 11, None, PreprocessKind::Center).unwrap();
        assert_eq!(m.b.len(), 16);
        for &b in m.b.iter() {
            assert!((0.0..2.0 * std::f64::consts::PI).contains(&b));
        }
        match m.extras {
            BaselineExtras::Cq { gamma } => assert!(gamma > 0.0),
            _ => panic!("wrong extras"),
        }
    }

    #[test]
    fn cq_is_deterministic() {
        let x = random_features(4, 4, 40);
        let a = cq_fit(&x, 8, 5, None, PreprocessKind::Center).unwrap();
        let b = cq_fit(&x, 8, 5, None, PreprocessKind::Center).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cq_zero_bandwidth_gives_constant_bits() {
        let x = random_features(5, 3, 12);
        let m = cq_fit(&x, 6, 2, Some(0.0), PreprocessKind::None).unwrap();
        assert!(m.w.iter().all(|&v| v == 0.0));
        let codes = baseline_encode(&m, &x).unwrap();
        for j in 0..6 {
            let first = codes.get_bit(0, j);
            for i in 1..12 {
                assert_eq!(codes.get_bit(i, j), first, "bit {j} not constant");
            }
        }
    }

    #[test]
    fn cq_median_bandwidth_matches_hand_computed_distances() {
        // Three 1-D points {0, 1, 3}: pairwise distances {1, 2, 3}, median 2,
        // so gamma = 1/2 and W is exactly half the raw Gaussian draw.
        let x = FeatureMatrix::from_column_major(1, 3, &[0.0, 1.0, 3.0]).unwrap();
        let m = cq_fit(&x, 4, 7, None, PreprocessKind::None).unwrap();
        let mut rng = RandomSource::new(7);
        let g = gaussian_matrix(&mut rng, 1, 4).unwrap();
        assert_eq!(m.w, g * 0.5);

        // Four points {0, 1, 2, 4}: sorted distances {1, 1, 2, 2, 3, 4},
        // median (2+2)/2 = 2 again.
        let x4 = FeatureMatrix::from_column_major(1, 4, &[0.0, 1.0, 2.0, 4.0]).unwrap();
        let m4 = cq_fit(&x4, 4, 7, None, PreprocessKind::None).unwrap();
        match m4.extras {
            BaselineExtras::Cq { gamma } => assert_abs_diff_eq!(gamma, 0.5, epsilon = 1e-15),
            _ => panic!("wrong extras"),
        }
    }

    #[test]
    fn cq_encode_equals_the_core_composition() {
        let x = random_features(6, 5, 35);
        let m = cq_fit(&x, 12, 8, None, PreprocessKind::Zscore).unwrap();
        let as_projection =
            ProjectionModel::new(m.w.clone(), m.b.clone(), m.seed, m.preprocess.clone()).unwrap();
        let direct = baseline_encode(&m, &x).unwrap();
        let composed = as_projection.encode(&x).unwrap();
        assert_eq!(direct, composed);
    }

    #[test]
    fn sh_single_bit_splits_a_line_at_its_middle() {
        // 30 evenly spaced points along a 2-D segment; the first sinusoid
        // mode changes sign exactly once, at the segment's midpoint.
        let n = 30;
        let mut values = Vec::with_capacity(2 * n);
        for i in 0..n {
            let t = i as f64 / (n - 1) as f64;
            values.push(3.0 * t + 0.5);
            values.push(4.0 * t - 1.0);
        }
        let x = FeatureMatrix::from_column_major(2, n, &values).unwrap();
        let m = sh_fit(&x, 1, 0, PreprocessKind::None).unwrap();
        let codes = baseline_encode(&m, &x).unwrap();
        let bits: Vec<bool> = (0..n).map(|i| codes.get_bit(i, 0)).collect();
        let transitions: Vec<usize> = (0..n - 1).filter(|&i| bits[i] != bits[i + 1]).collect();
        assert_eq!(transitions, vec![14], "split not at the midpoint: {bits:?}");
    }

    #[test]
    fn sh_mode_eigenvalues_are_ascending_and_r_long() {
        let x = random_features(7, 6, 80);
        let m = sh_fit(&x, 10, 0, PreprocessKind::Center).unwrap();
        match &m.extras {
            BaselineExtras::Sh { basis, modes } => {
                assert_eq!(basis.shape(), (6, 6)); // npca = min(r, d) = 6
                assert_eq!(modes.len(), 10);
                for pair in modes.windows(2) {
                    assert!(pair[0].eigenvalue <= pair[1].eigenvalue);
                }
            }
            _ => panic!("wrong extras"),
        }
    }

    #[test]
    fn sh_is_deterministic() {
        let x = random_features(8, 5, 50);
        let a = sh_fit(&x, 8, 0, PreprocessKind::Center).unwrap();
        let b = sh_fit(&x, 8, 0, PreprocessKind::Center).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sh_names_the_rank_on_degenerate_covariance() {
        // Rank-1 data (a line in 2-D) cannot supply two principal directions.
        let mut values = Vec::new();
        for i in 0..10 {
            values.push(i as f64);
            values.push(2.0 * i as f64);
        }
        let x = FeatureMatrix::from_column_major(2, 10, &values).unwrap();
        match sh_fit(&x, 2, 0, PreprocessKind::None) {
            Err(Error::InvalidInput(msg)) => assert!(msg.contains("rank 1"), "message: {msg}"),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn sh_rejects_identical_data() {
        let x = FeatureMatrix::from_column_major(2, 6, &[1.0; 12]).unwrap();
        assert!(sh_fit(&x, 1, 0, PreprocessKind::None).is_err());
    }

    #[test]
    fn itq_rotation_is_orthogonal() {
        let x = random_features(9, 8, 100);
        let m = itq_fit(&x, 6, 21, 50, PreprocessKind::Center).unwrap();
        match &m.extras {
            BaselineExtras::Itq { rotation } => {
                let gram = rotation.tr_mul(rotation);
                let eye = DMatrix::identity(6, 6);
                assert!((gram - eye).norm() <= 1e-8);
            }
            _ => panic!("wrong extras"),
        }
    }

    #[test]
    fn itq_loss_sequence_is_non_increasing() {
        let mut rng = RandomSource::new(10);
        let v = gaussian_matrix(&mut rng, 60, 5).unwrap(); // n×r projected data
        let r0 = gaussian_matrix(&mut rng, 5, 5).unwrap().qr().q();
        let (rot, losses) = itq_train(&v, &r0, 50).unwrap();
        assert_eq!(losses.len(), 50);
        for pair in losses.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "loss increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
        let gram = rot.tr_mul(&rot);
        assert!((gram - DMatrix::identity(5, 5)).norm() <= 1e-8);
    }

    #[test]
    fn itq_binary_data_with_identity_start_is_a_fixed_point() {
        let mut rng = RandomSource::new(11);
        let v = gaussian_matrix(&mut rng, 20, 4)
            .unwrap()
            .map(|t| if t >= 0.0 { 1.0 } else { -1.0 });
        let (_, losses) = itq_train(&v, &DMatrix::identity(4, 4), 10).unwrap();
        // The first pass is exactly lossless; later passes may carry SVD
        // rounding at the 1e-29 scale but never leave the fixed point.
        assert_eq!(losses[0], 0.0);
        assert!(losses.iter().all(|&l| l <= 1e-20), "losses: {losses:?}");
    }

    #[test]
    fn itq_is_deterministic_and_consistent_with_its_training_codes() {
        let x = random_features(12, 7, 90);
        let a = itq_fit(&x, 5, 33, 50, PreprocessKind::Center).unwrap();
        let b = itq_fit(&x, 5, 33, 50, PreprocessKind::Center).unwrap();
        assert_eq!(a, b);

        // The folded (W, b) encode must agree with sgn of the rotated PCA
        // projection Rᵀ·basisᵀ·(x − μ) computed by hand (skipping entries
        // within rounding distance of the sign boundary).
        let codes = baseline_encode(&a, &x).unwrap();
        let xp = a.preprocess.apply(&x).unwrap();
        let n = x.n();
        let mut mu = DVector::zeros(7);
        for (i, row) in xp.data().row_iter().enumerate() {
            mu[i] = row.sum() / n as f64;
        }
        for i in 0..n {
            let centered = xp.data().column(i) - &mu;
            for j in 0..5 {
                let v = a.w.column(j).dot(&centered);
                if v.abs() > 1e-9 {
                    assert_eq!(codes.get_bit(i, j), v >= 0.0, "code {i} bit {j}");
                }
            }
        }
    }

    #[test]
    fn itq_requires_enough_samples_and_rank() {
        let x = random_features(13, 4, 4);
        assert!(itq_fit(&x, 4, 0, 50, PreprocessKind::None).is_err()); // n == r
        let wide = random_features(13, 3, 30);
        assert!(itq_fit(&wide, 4, 0, 50, PreprocessKind::None).is_err()); // r > d
    }

    #[test]
    fn baseline_encode_is_stateless_and_handles_empty_input() {
        let x = random_features(14, 5, 18);
        let m = lsh_fit(&x, 7, 2, PreprocessKind::Center).unwrap();
        let once = baseline_encode(&m, &x).unwrap();
        let twice = baseline_encode(&m, &x).unwrap();
        assert_eq!(once, twice);

        let empty = FeatureMatrix::new(DMatrix::zeros(5, 0)).unwrap();
        let codes = baseline_encode(&m, &empty).unwrap();
        assert_eq!(codes.len(), 0);
        assert_eq!(codes.r(), 7);

        let bad = random_features(14, 4, 3);
        assert!(baseline_encode(&m, &bad).is_err());
    }
}
