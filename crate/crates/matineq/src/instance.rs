//! Problem description files.
//!
//! Linear SDPs travel as SDPA files. Bilinear problems are plain data and are
//! stored in a JSON document as is. Nonlinear problems carry callbacks, so a
//! file only names a gallery instance and its parameters; the instance is
//! rebuilt when the file is read.

use matineq_core::gallery;
use matineq_core::linalg::SymMatrix;
use matineq_core::model::{BmiData, ProblemSpec};
use serde::{Deserialize, Serialize};

use crate::error::IoError;
use crate::sdpa::parse_sdpa;

pub const INSTANCE_FORMAT: &str = "matineq-instance";
pub const INSTANCE_VERSION: u32 = 1;

/// Source of the matrix to approximate in the correlation problems: the
/// built-in 6×6 example unless `n` is given, in which case a perturbed
/// random correlation matrix is generated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CorrSource {
    pub fn matrix(&self) -> SymMatrix {
        match self.n {
            None => gallery::h_ext(),
            Some(n) => gallery::gen_perturbed_corr(n, self.noise.unwrap_or(0.1), self.seed.unwrap_or(0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Named {
    NearestCorr {
        #[serde(flatten)]
        source: CorrSource,
    },
    CorrCond {
        kappa: f64,
        #[serde(flatten)]
        source: CorrSource,
    },
    Spline {
        points: usize,
        intervals: usize,
        seed: u64,
    },
}

impl Named {
    pub fn build(&self) -> Result<ProblemSpec, IoError> {
        Ok(match self {
            Named::NearestCorr { source } => ProblemSpec::Nlp(gallery::build_nearest_corr(&source.matrix())),
            Named::CorrCond { kappa, source } => {
                if !(*kappa >= 1.0) {
                    return Err(IoError::Instance(format!("kappa must be at least 1, got {kappa}")));
                }
                ProblemSpec::Nlp(gallery::build_corr_cond(&source.matrix(), *kappa))
            }
            Named::Spline { points, intervals, seed } => {
                let knots = gallery::uniform_knots(*intervals);
                ProblemSpec::Nlp(gallery::build_spline(&knots, &gallery::cosine_samples(*points, *seed))?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instance {
    Bmi { data: BmiData },
    Named(Named),
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    format: String,
    version: u32,
    #[serde(flatten)]
    instance: Instance,
}

pub fn write_instance(inst: &Instance) -> String {
    let doc = InstanceDoc { format: INSTANCE_FORMAT.into(), version: INSTANCE_VERSION, instance: inst.clone() };
    let mut s = serde_json::to_string_pretty(&doc).expect("instance document always serializes");
    s.push('\n');
    s
}

pub fn read_instance(text: &str) -> Result<Instance, IoError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    if doc.format != INSTANCE_FORMAT {
        return Err(IoError::Instance(format!("expected format {INSTANCE_FORMAT:?}, found {:?}", doc.format)));
    }
    if doc.version != INSTANCE_VERSION {
        return Err(IoError::Instance(format!("unsupported version {}", doc.version)));
    }
    Ok(doc.instance)
}

/// Builds a problem from file contents: a JSON description when the text
/// starts with `{`, an SDPA file otherwise.
pub fn load_problem(text: &str, path: &std::path::Path) -> Result<ProblemSpec, IoError> {
    if text.trim_start().starts_with('{') {
        let spec = match read_instance(text)? {
            Instance::Bmi { data } => ProblemSpec::Bmi(data),
            Instance::Named(named) => named.build()?,
        };
        spec.validate()?;
        Ok(spec)
    } else {
        let p = parse_sdpa(text).map_err(|source| IoError::Parse { path: path.to_path_buf(), source })?;
        p.validate()?;
        Ok(ProblemSpec::Linear(p))
    }
}
