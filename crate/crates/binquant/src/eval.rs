//! Retrieval evaluation: exact Euclidean ground truth, average precision,
//! and the two benchmark sweeps (varying code bits, varying neighbor count).

use std::collections::HashSet;
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::index::{rank_all, RankedResult};
use crate::model::{fit, FitConfig, Method, Model};
use crate::primitives::FeatureMatrix;
use crate::rng::derive_seed;

/// Per-query relevant sets: the k nearest database points by Euclidean
/// distance, ties broken by ascending database id. Ids are stored sorted
/// ascending within each query's set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub k: usize,
    pub relevant: Vec<Vec<usize>>,
}

impl GroundTruth {
    pub fn queries(&self) -> usize {
        self.relevant.len()
    }
}

/// Exact k-nearest-neighbor ground truth in feature space.
///
/// `query_db_ids`, when given, maps each query to its own database id so a
/// query never counts itself as relevant; pass `None` when the sets are
/// disjoint (or when self-matches are intended, e.g. querying a set against
/// itself as a sanity check).
pub fn ground_truth_knn(
    x_db: &FeatureMatrix,
    x_q: &FeatureMatrix,
    k: usize,
    query_db_ids: Option<&[usize]>,
) -> Result<GroundTruth> {
    if x_db.d() != x_q.d() {
        return Err(Error::DimensionMismatch(format!(
            "database has d = {}, queries have d = {}",
            x_db.d(),
            x_q.d()
        )));
    }
    if k == 0 || k >= x_db.n() {
        return Err(Error::InvalidInput(format!(
            "neighbor count must satisfy 1 <= k < n_db, got k = {k} for n_db = {}",
            x_db.n()
        )));
    }
    if let Some(ids) = query_db_ids {
        if ids.len() != x_q.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} exclusion ids for {} queries",
                ids.len(),
                x_q.n()
            )));
        }
        if let Some(&bad) = ids.iter().find(|&&id| id >= x_db.n()) {
            return Err(Error::InvalidInput(format!(
                "exclusion id {bad} out of range for n_db = {}",
                x_db.n()
            )));
        }
    }

    let db = x_db.data();
    let one_query = |qi: usize| -> Vec<usize> {
        let q = x_q.data().column(qi);
        let skip = query_db_ids.map(|ids| ids[qi]);
        let mut order: Vec<(f64, usize)> = (0..x_db.n())
            .filter(|&i| Some(i) != skip)
            .map(|i| ((db.column(i) - q).norm_squared(), i))
            .collect();
        order.sort_unstable_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite distances")
                .then(a.1.cmp(&b.1))
        });
        let mut ids: Vec<usize> = order[..k].iter().map(|&(_, i)| i).collect();
        ids.sort_unstable();
        ids
    };

    #[cfg(feature = "parallel")]
    let relevant: Vec<Vec<usize>> = (0..x_q.n()).into_par_iter().map(one_query).collect();
    #[cfg(not(feature = "parallel"))]
    let relevant: Vec<Vec<usize>> = (0..x_q.n()).map(one_query).collect();

    Ok(GroundTruth { k, relevant })
}

/// Average precision of one ranking against a non-empty relevant set:
/// AP = (1/|relevant|) · Σ over relevant ranks p of (hits through p)/p.
///
/// The ranking must cover every relevant id (rankings from `rank_all` cover
/// the whole database).
pub fn average_precision(ranking: &RankedResult, relevant: &[usize]) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::InvalidInput(
            "average precision needs a non-empty relevant set".into(),
        ));
    }
    let set: HashSet<usize> = relevant.iter().copied().collect();
    if set.len() != relevant.len() {
        return Err(Error::InvalidInput(
            "relevant set contains duplicate ids".into(),
        ));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (p, (id, _)) in ranking.entries.iter().enumerate() {
        if set.contains(id) {
            hits += 1;
            sum += hits as f64 / (p + 1) as f64;
        }
    }
    if hits != set.len() {
        return Err(Error::InvalidInput(format!(
            "ranking covers only {hits} of {} relevant ids",
            set.len()
        )));
    }
    Ok(sum / set.len() as f64)
}

/// Arithmetic mean of per-query average precisions.
pub fn mean_ap(aps: &[f64]) -> Result<f64> {
    if aps.is_empty() {
        return Err(Error::InvalidInput(
            "mean average precision needs at least one query".into(),
        ));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// One evaluated (method, bits, neighbors) cell.
///
/// `seed` is the master sweep seed; the cell's own randomness comes from
/// `derive_seed(seed, [method tag, bits, neighbors])`.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub method: Method,
    pub bits: usize,
    pub neighbors: usize,
    pub seed: u64,
    pub ap: Vec<f64>,
    pub map: f64,
    pub fit_ms: f64,
    pub encode_ms: f64,
    pub query_ms: f64,
}

/// A sweep cell's identity plus its outcome; failed fits are flagged here
/// rather than aborting the sweep.
#[derive(Debug)]
pub struct SweepCell {
    pub method: Method,
    pub bits: usize,
    pub neighbors: usize,
    pub outcome: Result<EvalReport>,
}

fn cell_seed(master: u64, method: Method, bits: usize, neighbors: usize) -> u64 {
    derive_seed(
        master,
        &[method.tag() as u64, bits as u64, neighbors as u64],
    )
}

fn evaluate_cell(
    method: Method,
    x_db: &FeatureMatrix,
    x_q: &FeatureMatrix,
    bits: usize,
    gt: &GroundTruth,
    master_seed: u64,
    config: &FitConfig,
) -> Result<EvalReport> {
    let seed = cell_seed(master_seed, method, bits, gt.k);

    let t = Instant::now();
    let model: Model = fit(method, x_db, bits, seed, config)?;
    let fit_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let db_codes = model.encode(x_db)?;
    let q_codes = model.encode(x_q)?;
    let encode_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let one_query = |qi: usize| -> Result<f64> {
        let ranking = rank_all(&db_codes, q_codes.code(qi), qi)?;
        average_precision(&ranking, &gt.relevant[qi])
    };
    #[cfg(feature = "parallel")]
    let ap: Vec<f64> = (0..x_q.n())
        .into_par_iter()
        .map(one_query)
        .collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let ap: Vec<f64> = (0..x_q.n()).map(one_query).collect::<Result<_>>()?;
    let query_ms = t.elapsed().as_secs_f64() * 1e3;

    let map = mean_ap(&ap)?;
    Ok(EvalReport {
        method,
        bits,
        neighbors: gt.k,
        seed: master_seed,
        ap,
        map,
        fit_ms,
        encode_ms,
        query_ms,
    })
}

fn check_sweep_args(methods: &[Method], x_q: &FeatureMatrix) -> Result<()> {
    if methods.is_empty() {
        return Err(Error::InvalidInput("no methods requested".into()));
    }
    if x_q.n() == 0 {
        return Err(Error::InvalidInput("no queries supplied".into()));
    }
    Ok(())
}

/// Fit/encode/rank every method at every requested code width against a
/// fixed-k ground truth. Cells are ordered method-major, then by bits; a
/// failing cell is flagged and the sweep continues.
pub fn sweep_bits(
    x_db: &FeatureMatrix,
    x_q: &FeatureMatrix,
    methods: &[Method],
    bits: &[usize],
    k: usize,
    seed: u64,
    config: &FitConfig,
) -> Result<Vec<SweepCell>> {
    check_sweep_args(methods, x_q)?;
    if bits.is_empty() {
        return Err(Error::InvalidInput("empty bit list".into()));
    }
    let gt = ground_truth_knn(x_db, x_q, k, None)?;
    let mut cells = Vec::with_capacity(methods.len() * bits.len());
    for &method in methods {
        for &r in bits {
            cells.push(SweepCell {
                method,
                bits: r,
                neighbors: k,
                outcome: evaluate_cell(method, x_db, x_q, r, &gt, seed, config),
            });
        }
    }
    Ok(cells)
}

/// Fit/encode/rank every method at a fixed code width against ground truths
/// of varying k (recomputed per k). Cells are ordered method-major, then by
/// neighbor count, mirroring [`sweep_bits`].
pub fn sweep_neighbors(
    x_db: &FeatureMatrix,
    x_q: &FeatureMatrix,
    methods: &[Method],
    neighbor_counts: &[usize],
    bits: usize,
    seed: u64,
    config: &FitConfig,
) -> Result<Vec<SweepCell>> {
    check_sweep_args(methods, x_q)?;
    if neighbor_counts.is_empty() {
        return Err(Error::InvalidInput("empty neighbor list".into()));
    }
    let mut truths = Vec::with_capacity(neighbor_counts.len());
    for &k in neighbor_counts {
        truths.push(ground_truth_knn(x_db, x_q, k, None)?);
    }
    let mut cells = Vec::with_capacity(methods.len() * neighbor_counts.len());
    for &method in methods {
        for gt in &truths {
            cells.push(SweepCell {
                method,
                bits,
                neighbors: gt.k,
                outcome: evaluate_cell(method, x_db, x_q, bits, gt, seed, config),
            });
        }
    }
    Ok(cells)
}
