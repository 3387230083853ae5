//! Method names, the unified model wrapper, and the fit-configuration
//! bundle shared by the evaluation sweeps and the CLI.

use crate::atq::fit_atq_with_restarts;
use crate::baselines::{baseline_encode, cq_fit, itq_fit, lsh_fit, sh_fit, BaselineModel};
use crate::error::{Error, Result};
use crate::index::BinaryCodeSet;
use crate::optim::{CgParams, CgTrace};
use crate::primitives::{FeatureMatrix, Preprocess, PreprocessKind, ProjectionModel};

/// The five quantization methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Lsh,
    Cq,
    Sh,
    Itq,
    Atq,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Lsh,
        Method::Cq,
        Method::Sh,
        Method::Itq,
        Method::Atq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lsh => "lsh",
            Method::Cq => "cq",
            Method::Sh => "sh",
            Method::Itq => "itq",
            Method::Atq => "atq",
        }
    }

    /// Stable numeric tag used in model files and seed derivation.
    pub fn tag(self) -> u8 {
        match self {
            Method::Lsh => 0,
            Method::Cq => 1,
            Method::Sh => 2,
            Method::Itq => 3,
            Method::Atq => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == tag)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method tag {tag}")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown method '{s}' (expected lsh, cq, sh, itq or atq)"
                ))
            })
    }
}

/// Everything a fit needs beyond (data, bits, seed). Defaults follow the
/// evaluation protocol: centering, λ = ε = 0.01, α₀ = 1, β = 0.5, the
/// median-heuristic CQ bandwidth, 50 ITQ iterations, one training restart.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub preprocess: PreprocessKind,
    pub cg: CgParams,
    /// CQ bandwidth override; `None` selects the median heuristic.
    pub cq_gamma: Option<f64>,
    pub itq_iters: usize,
    pub atq_restarts: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            preprocess: PreprocessKind::Center,
            cg: CgParams::default(),
            cq_gamma: None,
            itq_iters: 50,
            atq_restarts: 1,
        }
    }
}

/// A fitted quantizer of any method.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// The adaptively trained cosine mapping.
    Atq(ProjectionModel),
    /// One of the four comparison methods.
    Baseline(BaselineModel),
}

impl Model {
    pub fn method(&self) -> Method {
        match self {
            Model::Atq(_) => Method::Atq,
            Model::Baseline(m) => m.method(),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Model::Atq(m) => m.d(),
            Model::Baseline(m) => m.d(),
        }
    }

    pub fn r(&self) -> usize {
        match self {
            Model::Atq(m) => m.r(),
            Model::Baseline(m) => m.r(),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Model::Atq(m) => m.seed,
            Model::Baseline(m) => m.seed,
        }
    }

    pub fn preprocess(&self) -> &Preprocess {
        match self {
            Model::Atq(m) => &m.preprocess,
            Model::Baseline(m) => &m.preprocess,
        }
    }

    pub fn encode(&self, x: &FeatureMatrix) -> Result<BinaryCodeSet> {
        match self {
            Model::Atq(m) => m.encode(x),
            Model::Baseline(m) => baseline_encode(m, x),
        }
    }
}

/// Fit `method` on `x` with `r` bits; for ATQ the stage-1 optimizer trace is
/// returned alongside the model.
pub fn fit_with_trace(
    method: Method,
    x: &FeatureMatrix,
    r: usize,
    seed: u64,
    config: &FitConfig,
) -> Result<(Model, Option<CgTrace>)> {
    match method {
        Method::Lsh => Ok((
            Model::Baseline(lsh_fit(x, r, seed, config.preprocess)?),
            None,
        )),
        Method::Cq => Ok((
            Model::Baseline(cq_fit(x, r, seed, config.cq_gamma, config.preprocess)?),
            None,
        )),
        Method::Sh => Ok((
            Model::Baseline(sh_fit(x, r, seed, config.preprocess)?),
            None,
        )),
        Method::Itq => Ok((
            Model::Baseline(itq_fit(x, r, seed, config.itq_iters, config.preprocess)?),
            None,
        )),
        Method::Atq => {
            let (model, trace) = fit_atq_with_restarts(
                x,
                r,
                seed,
                config.preprocess,
                &config.cg,
                config.atq_restarts,
            )?;
            Ok((Model::Atq(model), Some(trace)))
        }
    }
}

/// [`fit_with_trace`] without the trace.
pub fn fit(
    method: Method,
    x: &FeatureMatrix,
    r: usize,
    seed: u64,
    config: &FitConfig,
) -> Result<Model> {
    fit_with_trace(method, x, r, seed, config).map(|(model, _)| model)
}
