//! Adaptively trained cosine quantization: stage 1 learns the projection by
//! conjugate-gradient descent on a grouping objective over centered cosine
//! features; stage 2 fits each bit's offset in closed form.
//!
//! The two stages are deliberately independent — the offset is held at zero
//! while W trains, then each offset is chosen to maximize the per-bit squared
//! cosine response with W frozen. No joint objective is attempted.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::optim::{cg_minimize, CgParams, CgTrace};
use crate::primitives::{
    center_rows, gaussian_matrix, FeatureMatrix, Preprocess, PreprocessKind, ProjectionModel,
};
use crate::rng::{derive_seed, RandomSource};

/// Relative magnitude of (C, S) below which the offset objective is treated
/// as constant in b and the offset falls back to zero.
const DEGENERATE_TOL: f64 = 1e-12;

fn check_stage1_args(w: &DMatrix<f64>, x: &FeatureMatrix) -> Result<()> {
    if w.nrows() != x.d() {
        return Err(Error::DimensionMismatch(format!(
            "projection has d = {} rows but features have d = {}",
            w.nrows(),
            x.d()
        )));
    }
    if w.ncols() == 0 {
        return Err(Error::InvalidInput(
            "projection needs at least one column".into(),
        ));
    }
    if x.n() < 2 {
        return Err(Error::InvalidInput(format!(
            "stage-1 objective needs n >= 2 samples (centering annihilates n = 1), got {}",
            x.n()
        )));
    }
    Ok(())
}

/// Row-centered cosine features Π-aligned: rows are cos(w_jᵀ x_i) minus the
/// row mean. Caller guarantees non-empty shapes.
fn centered_cos(w: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let c = (w.transpose() * x).map(f64::cos);
    center_rows(&c).expect("shapes validated before stage-1 evaluation")
}

fn objective_inner(w: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    centered_cos(w, x).norm_squared()
}

fn gradient_inner(w: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let p = w.transpose() * x;
    let centered = center_rows(&p.map(f64::cos)).expect("shapes validated");
    let weighted = p.map(f64::sin).component_mul(&centered);
    x * weighted.transpose() * -2.0
}

/// Stage-1 grouping objective: the summed per-column quadratic form of the
/// centering operator over cosine features, Σ_j c_jᵀ Π c_j with c_j the j-th
/// row of the cosine map at zero offset. Always ≥ 0; zero exactly when every
/// bit responds identically across samples.
pub fn atq_objective(w: &DMatrix<f64>, x: &FeatureMatrix) -> Result<f64> {
    check_stage1_args(w, x)?;
    Ok(objective_inner(w, x.data()))
}

/// Gradient of [`atq_objective`] in W: column j is
/// −2·X·Diag(sin(w_jᵀX))·Π·cos(w_jᵀX), evaluated for all columns at once.
pub fn atq_gradient(w: &DMatrix<f64>, x: &FeatureMatrix) -> Result<DMatrix<f64>> {
    check_stage1_args(w, x)?;
    Ok(gradient_inner(w, x.data()))
}

/// Stage 1: minimize the grouping objective from a seeded Gaussian start.
///
/// Returns the trained projection along with the optimizer trace; the final
/// objective never exceeds the objective at the random initialization.
pub fn fit_mapping(
    x: &FeatureMatrix,
    r: usize,
    seed: u64,
    params: &CgParams,
) -> Result<(DMatrix<f64>, CgTrace)> {
    if r == 0 {
        return Err(Error::InvalidInput("code width r must be >= 1".into()));
    }
    if x.n() < 2 {
        return Err(Error::InvalidInput(format!(
            "stage-1 training needs n >= 2 samples, got {}",
            x.n()
        )));
    }
    let mut rng = RandomSource::new(seed);
    let mut w0 = gaussian_matrix(&mut rng, x.d(), r)?;
    // An exactly-zero column would make its bit constant forever (zero
    // gradient); unreachable in practice for Gaussian draws, redrawn anyway.
    for j in 0..r {
        while w0.column(j).iter().all(|&v| v == 0.0) {
            for i in 0..x.d() {
                w0[(i, j)] = rng.normal();
            }
        }
    }
    let xd = x.data();
    cg_minimize(
        |w| objective_inner(w, xd),
        |w| gradient_inner(w, xd),
        &w0,
        params,
    )
}

/// [`fit_mapping`] restarted from `restarts` independent seeded
/// initializations, keeping the run with the lowest final objective. The
/// first restart uses `seed` itself, so `restarts = 1` reproduces
/// [`fit_mapping`] exactly; later restarts derive their seeds from it.
pub fn fit_mapping_with_restarts(
    x: &FeatureMatrix,
    r: usize,
    seed: u64,
    params: &CgParams,
    restarts: usize,
) -> Result<(DMatrix<f64>, CgTrace)> {
    if restarts == 0 {
        return Err(Error::InvalidInput("restarts must be >= 1".into()));
    }
    let mut best: Option<(DMatrix<f64>, CgTrace)> = None;
    for t in 0..restarts {
        let seed_t = if t == 0 {
            seed
        } else {
            derive_seed(seed, &[t as u64])
        };
        let run = fit_mapping(x, r, seed_t, params)?;
        let better = match &best {
            None => true,
            Some((_, trace)) => run.1.final_objective() < trace.final_objective(),
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// Stage-2 result for one bit.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetSolution {
    /// Chosen offset, in (−π/2, π/2].
    pub b: f64,
    /// C = Σ_i cos(2 wᵀx_i).
    pub c: f64,
    /// S = Σ_i sin(2 wᵀx_i).
    pub s: f64,
    /// Σ_i cos²(wᵀx_i + b) at the chosen offset; equals n/2 + ½√(C²+S²)
    /// up to rounding unless degenerate.
    pub objective: f64,
    /// True when C and S both vanish, i.e. the objective is constant in b
    /// and the zero offset was kept by convention.
    pub degenerate: bool,
}

/// Stage 2 for a single projection column: choose b maximizing
/// Σ_i cos²(wᵀx_i + b) in closed form.
///
/// Writing the objective as n/2 + ½(C·cos 2b − S·sin 2b), the maximizer is
/// b = −½·atan2(S, C), folded into (−π/2, π/2] (the objective is π-periodic
/// in b, so nothing is lost). When C ≈ S ≈ 0 the objective is flat and the
/// solution degenerates to b = 0.
pub fn fit_offset(w: &DVector<f64>, x: &FeatureMatrix) -> Result<OffsetSolution> {
    if w.len() != x.d() {
        return Err(Error::DimensionMismatch(format!(
            "projection column has d = {} but features have d = {}",
            w.len(),
            x.d()
        )));
    }
    if x.n() == 0 {
        return Err(Error::InvalidInput(
            "offset training needs at least one sample".into(),
        ));
    }
    let z = x.data().tr_mul(w); // n×1 of wᵀx_i
    let mut c = 0.0;
    let mut s = 0.0;
    for &zi in z.iter() {
        c += (2.0 * zi).cos();
        s += (2.0 * zi).sin();
    }
    let n = x.n() as f64;
    let degenerate = c.hypot(s) < DEGENERATE_TOL * n;
    let b = if degenerate {
        0.0
    } else {
        let mut b = -0.5 * s.atan2(c);
        if b <= -std::f64::consts::FRAC_PI_2 {
            b += std::f64::consts::PI;
        }
        b
    };
    let objective = z.iter().map(|&zi| (zi + b).cos().powi(2)).sum();
    Ok(OffsetSolution {
        b,
        c,
        s,
        objective,
        degenerate,
    })
}

/// The full two-stage pipeline: fit preprocessing, train W on the
/// preprocessed data, then fit each bit's offset on the same data.
///
/// Returns the finished model alongside the stage-1 optimizer trace.
pub fn fit_atq(
    x: &FeatureMatrix,
    r: usize,
    seed: u64,
    preprocess: PreprocessKind,
    params: &CgParams,
) -> Result<(ProjectionModel, CgTrace)> {
    fit_atq_with_restarts(x, r, seed, preprocess, params, 1)
}

/// [`fit_atq`] with stage 1 restarted from `restarts` independent
/// initializations (see [`fit_mapping_with_restarts`]).
pub fn fit_atq_with_restarts(
    x: &FeatureMatrix,
    r: usize,
    seed: u64,
    preprocess: PreprocessKind,
    params: &CgParams,
    restarts: usize,
) -> Result<(ProjectionModel, CgTrace)> {
    let prep = Preprocess::fit(preprocess, x)?;
    let xp = prep.apply(x)?;
    let (w, trace) = fit_mapping_with_restarts(&xp, r, seed, params, restarts)?;
    let mut b = DVector::zeros(r);
    for j in 0..r {
        let sol = fit_offset(&w.column(j).into_owned(), &xp)?;
        b[j] = sol.b;
    }
    let model = ProjectionModel::new(w, b, seed, prep)?;
    Ok((model, trace))
}
