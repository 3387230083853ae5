//! Conjugate-gradient minimization over matrix iterates: Fletcher–Reeves
//! directions, Armijo backtracking, and the objective-decrease stopping rule.
//!
//! The minimizer is generic over the objective; the quantizer training in
//! [`crate::atq`] is its only in-crate client, but nothing here knows that.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Line-search and termination constants.
#[derive(Debug, Clone)]
pub struct CgParams {
    /// Armijo sufficient-decrease constant, in (0, 1).
    pub lambda: f64,
    /// Stopping constant: terminate when the latest objective decrease falls
    /// to `epsilon` times the largest decrease seen. In (0, 1).
    pub epsilon: f64,
    /// Initial step size tried at every iteration.
    pub alpha0: f64,
    /// Backtracking shrink factor, in (0, 1).
    pub beta: f64,
    /// Hard cap on accepted iterations.
    pub max_iters: usize,
    /// Step-size halvings allowed per line search before giving up.
    pub max_backtracks: usize,
    /// Record every accepted iterate in the trace (diagnostic; costs memory).
    pub record_iterates: bool,
}

impl Default for CgParams {
    fn default() -> Self {
        CgParams {
            lambda: 0.01,
            epsilon: 0.01,
            alpha0: 1.0,
            beta: 0.5,
            max_iters: 200,
            max_backtracks: 50,
            record_iterates: false,
        }
    }
}

impl CgParams {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.lambda) {
            return Err(Error::InvalidInput(format!(
                "lambda must lie in (0, 1), got {}",
                self.lambda
            )));
        }
        if !in_unit(self.epsilon) {
            return Err(Error::InvalidInput(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !in_unit(self.beta) {
            return Err(Error::InvalidInput(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "alpha0 must be positive and finite, got {}",
                self.alpha0
            )));
        }
        if self.max_iters == 0 || self.max_backtracks == 0 {
            return Err(Error::InvalidInput(
                "max_iters and max_backtracks must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Why the minimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The latest decrease fell below epsilon times the best decrease.
    NumericalStop,
    /// Iteration cap reached.
    MaxIters,
    /// No step satisfied the Armijo condition.
    LineSearchFailure,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::NumericalStop => "numerical-stop",
            StopReason::MaxIters => "max-iters",
            StopReason::LineSearchFailure => "line-search-failure",
        }
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Record of one minimization run.
#[derive(Debug, Clone)]
pub struct CgTrace {
    /// Objective at the start point followed by each accepted iterate;
    /// non-increasing by construction.
    pub objective: Vec<f64>,
    /// Per-accepted-iteration decreases J(W_t) − J(W_{t+1}), all positive.
    pub decreases: Vec<f64>,
    /// Number of accepted iterations.
    pub iterations: usize,
    /// Termination cause. Inside a numerical-failure error this holds the
    /// value at the time of abort and carries no meaning.
    pub stop: StopReason,
    /// Accepted iterates including the start point; populated only when
    /// `CgParams::record_iterates` is set.
    pub iterates: Vec<DMatrix<f64>>,
}

impl CgTrace {
    fn new() -> Self {
        CgTrace {
            objective: Vec::new(),
            decreases: Vec::new(),
            iterations: 0,
            stop: StopReason::MaxIters,
            iterates: Vec::new(),
        }
    }

    pub fn initial_objective(&self) -> f64 {
        self.objective.first().copied().unwrap_or(f64::NAN)
    }

    pub fn final_objective(&self) -> f64 {
        self.objective.last().copied().unwrap_or(f64::NAN)
    }
}

/// Fletcher–Reeves direction-mixing coefficient ‖g_t‖²/‖g_prev‖² (Frobenius
/// norms). `None` signals a vanished previous gradient, i.e. convergence.
pub fn fletcher_reeves(g_t: &DMatrix<f64>, g_prev: &DMatrix<f64>) -> Option<f64> {
    let denom = g_prev.norm_squared();
    if denom == 0.0 {
        return None;
    }
    Some(g_t.norm_squared() / denom)
}

/// Conjugate direction s_t = −g_t + θ·s_prev, with steepest descent on the
/// first iteration (`prev = None`) and a steepest-descent restart whenever
/// the mixed direction fails to point downhill (⟨s_t, g_t⟩ ≥ 0).
pub fn cg_direction(
    g_t: &DMatrix<f64>,
    prev: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
) -> Result<DMatrix<f64>> {
    let Some((g_prev, s_prev)) = prev else {
        return Ok(-g_t);
    };
    if g_t.shape() != g_prev.shape() || g_t.shape() != s_prev.shape() {
        return Err(Error::DimensionMismatch(format!(
            "gradient/direction shapes disagree: {:?} vs {:?} vs {:?}",
            g_t.shape(),
            g_prev.shape(),
            s_prev.shape()
        )));
    }
    let theta = fletcher_reeves(g_t, g_prev).ok_or_else(|| {
        Error::InvalidInput("previous gradient is zero; iteration already converged".into())
    })?;
    let s = s_prev * theta - g_t;
    if s.dot(g_t) >= 0.0 {
        return Ok(-g_t);
    }
    Ok(s)
}

/// Backtracking line search under the Armijo condition
/// J(W + αs) − J(W) ≤ λ·α·⟨g, s⟩ (Frobenius inner product).
///
/// `j_w` is the objective value at `w` (passed in so callers that already
/// know it are not charged a redundant evaluation). Returns the first
/// accepted `(alpha, w_next, j_next)` scanning α0, α0β, α0β², …
pub fn armijo_backtrack<J>(
    j_fn: &J,
    g: &DMatrix<f64>,
    w: &DMatrix<f64>,
    j_w: f64,
    s: &DMatrix<f64>,
    params: &CgParams,
) -> Result<(f64, DMatrix<f64>, f64)>
where
    J: Fn(&DMatrix<f64>) -> f64,
{
    let slope = g.dot(s);
    if slope >= 0.0 {
        return Err(Error::InvalidInput(format!(
            "not a descent direction: <g, s> = {slope} >= 0"
        )));
    }
    let mut alpha = params.alpha0;
    for _ in 0..=params.max_backtracks {
        let w_next = w + s * alpha;
        let j_next = j_fn(&w_next);
        if !j_next.is_finite() {
            return Err(Error::NumericalFailure {
                message: format!("objective returned {j_next} at step size {alpha}"),
                trace: Box::new(CgTrace::new()),
            });
        }
        if j_next - j_w <= params.lambda * alpha * slope {
            return Ok((alpha, w_next, j_next));
        }
        alpha *= params.beta;
    }
    Err(Error::LineSearchFailure {
        backtracks: params.max_backtracks,
        smallest_step: alpha / params.beta,
    })
}

/// Objective-decrease stopping rule: true once the latest decrease is at
/// most `epsilon` times the largest prior decrease. Vacuously false until
/// two accepted iterations exist.
pub fn numerical_stop(decreases: &[f64], epsilon: f64) -> bool {
    let Some((last, prior)) = decreases.split_last() else {
        return false;
    };
    if prior.is_empty() {
        return false;
    }
    let max_prior = prior.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    *last <= epsilon * max_prior
}

/// Minimize `j_fn` from `w0` by conjugate gradient.
///
/// Returns the best iterate seen together with the run trace. Termination is
/// by the numerical stopping rule, the iteration cap, or line-search failure
/// (the latter still returns the current best, not an error). A start point
/// with zero gradient returns immediately with zero iterations. Non-finite
/// objective or gradient values abort with a numerical-failure error that
/// carries the trace accumulated so far.
pub fn cg_minimize<J, G>(
    j_fn: J,
    grad_fn: G,
    w0: &DMatrix<f64>,
    params: &CgParams,
) -> Result<(DMatrix<f64>, CgTrace)>
where
    J: Fn(&DMatrix<f64>) -> f64,
    G: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    params.validate()?;
    if w0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "start point contains a non-finite entry".into(),
        ));
    }

    let mut trace = CgTrace::new();

    let grad_at = |w: &DMatrix<f64>, trace: &CgTrace| -> Result<DMatrix<f64>> {
        let g = grad_fn(w);
        if g.shape() != w.shape() {
            return Err(Error::DimensionMismatch(format!(
                "gradient shape {:?} does not match iterate shape {:?}",
                g.shape(),
                w.shape()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure {
                message: "gradient contains a non-finite entry".into(),
                trace: Box::new(trace.clone()),
            });
        }
        Ok(g)
    };

    let mut w = w0.clone();
    let mut j = j_fn(&w);
    if !j.is_finite() {
        return Err(Error::NumericalFailure {
            message: format!("objective is {j} at the start point"),
            trace: Box::new(trace),
        });
    }
    trace.objective.push(j);
    if params.record_iterates {
        trace.iterates.push(w.clone());
    }

    let mut g = grad_at(&w, &trace)?;
    if g.norm_squared() == 0.0 {
        trace.stop = StopReason::NumericalStop;
        return Ok((w, trace));
    }

    let mut best_w = w.clone();
    let mut best_j = j;
    let mut s = cg_direction(&g, None)?;
    let mut stop = None;

    for _ in 0..params.max_iters {
        match armijo_backtrack(&j_fn, &g, &w, j, &s, params) {
            Ok((_alpha, w_next, j_next)) => {
                trace.decreases.push(j - j_next);
                w = w_next;
                j = j_next;
                trace.objective.push(j);
                trace.iterations += 1;
                if params.record_iterates {
                    trace.iterates.push(w.clone());
                }
                if j < best_j {
                    best_j = j;
                    best_w = w.clone();
                }
                if numerical_stop(&trace.decreases, params.epsilon) {
                    stop = Some(StopReason::NumericalStop);
                    break;
                }
                let g_next = grad_at(&w, &trace)?;
                if g_next.norm_squared() == 0.0 {
                    stop = Some(StopReason::NumericalStop);
                    break;
                }
                s = cg_direction(&g_next, Some((&g, &s)))?;
                g = g_next;
            }
            Err(Error::LineSearchFailure { .. }) => {
                stop = Some(StopReason::LineSearchFailure);
                break;
            }
            Err(Error::NumericalFailure { message, .. }) => {
                return Err(Error::NumericalFailure {
                    message,
                    trace: Box::new(trace),
                });
            }
            Err(other) => return Err(other),
        }
    }

    trace.stop = stop.unwrap_or(StopReason::MaxIters);
    Ok((best_w, trace))
}
