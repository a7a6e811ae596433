//! Versioned JSON form of a [`SolveReport`].
//!
//! Finite numbers are written as JSON numbers with round-trip precision.
//! Non-finite ones (an unconstrained problem has `max_violation = −∞`) are
//! written as the strings `"inf"`, `"-inf"` and `"nan"`.

use matineq_core::driver::{DimacsErrors, FeasibilityVerdict, TraceRow};
use matineq_core::linalg::SymMatrix;
use matineq_core::subsolver::NewtonStats;
use matineq_core::{SolveReport, SolveStatus};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::IoError;

pub const REPORT_FORMAT: &str = "matineq-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(f64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(v) => Ok(Num(v)),
            Raw::S(s) => match s.as_str() {
                "inf" => Ok(Num(f64::INFINITY)),
                "-inf" => Ok(Num(f64::NEG_INFINITY)),
                "nan" => Ok(Num(f64::NAN)),
                _ => Err(serde::de::Error::custom(format!("not a number: {s:?}"))),
            },
        }
    }
}

fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

fn floats(v: Vec<Num>) -> Vec<f64> {
    v.into_iter().map(|n| n.0).collect()
}

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    dim: usize,
    /// Lower triangle, row by row.
    packed: Vec<Num>,
}

#[derive(Serialize, Deserialize)]
struct StatsDoc {
    newton_steps: usize,
    cg_steps: usize,
    factorizations: usize,
    last_gradient_norm: Num,
    shifts_applied: Vec<Num>,
}

#[derive(Serialize, Deserialize)]
struct DimacsDoc {
    err1: Num,
    err2: Num,
    err3: Num,
    err4: Num,
    err5: Num,
    err6: Num,
}

#[derive(Serialize, Deserialize)]
struct TraceDoc {
    iteration: usize,
    objective: Num,
    grad_norm: Num,
    newton: usize,
    cg: usize,
}

#[derive(Serialize, Deserialize)]
struct ReportDoc {
    format: String,
    version: u32,
    status: SolveStatus,
    objective: Num,
    x: Vec<Num>,
    u: Vec<MatrixDoc>,
    v: Vec<Num>,
    outer_iterations: usize,
    restarts: usize,
    penalty: Num,
    max_violation: Num,
    equality_residual: Num,
    stats: StatsDoc,
    dimacs: Option<DimacsDoc>,
    verdict: Option<FeasibilityVerdict>,
    trace: Vec<TraceDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    iterates: Vec<Vec<Num>>,
}

/// Pretty-printed JSON document for `r`.
pub fn write_report(r: &SolveReport) -> String {
    let doc = ReportDoc {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        status: r.status.clone(),
        objective: Num(r.objective),
        x: nums(&r.x),
        u: r.u.iter().map(|m| MatrixDoc { dim: m.dim(), packed: nums(m.packed()) }).collect(),
        v: nums(&r.v),
        outer_iterations: r.outer_iterations,
        restarts: r.restarts,
        penalty: Num(r.penalty),
        max_violation: Num(r.max_violation),
        equality_residual: Num(r.equality_residual),
        stats: StatsDoc {
            newton_steps: r.stats.newton_steps,
            cg_steps: r.stats.cg_steps,
            factorizations: r.stats.factorizations,
            last_gradient_norm: Num(r.stats.last_gradient_norm),
            shifts_applied: nums(&r.stats.shifts_applied),
        },
        dimacs: r.dimacs.map(|d| DimacsDoc {
            err1: Num(d.err1),
            err2: Num(d.err2),
            err3: Num(d.err3),
            err4: Num(d.err4),
            err5: Num(d.err5),
            err6: Num(d.err6),
        }),
        verdict: r.verdict,
        trace: r
            .trace
            .iter()
            .map(|t| TraceDoc {
                iteration: t.iteration,
                objective: Num(t.objective),
                grad_norm: Num(t.grad_norm),
                newton: t.newton,
                cg: t.cg,
            })
            .collect(),
        iterates: r.iterates.iter().map(|x| nums(x)).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report document always serializes");
    s.push('\n');
    s
}

/// Reads a document produced by [`write_report`].
pub fn read_report(text: &str) -> Result<SolveReport, IoError> {
    let doc: ReportDoc = serde_json::from_str(text)?;
    if doc.format != REPORT_FORMAT {
        return Err(IoError::Instance(format!("expected format {REPORT_FORMAT:?}, found {:?}", doc.format)));
    }
    if doc.version != REPORT_VERSION {
        return Err(IoError::ReportVersion(doc.version));
    }
    let u = doc
        .u
        .into_iter()
        .map(|m| SymMatrix::from_packed(m.dim, floats(m.packed)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SolveReport {
        status: doc.status,
        objective: doc.objective.0,
        x: floats(doc.x),
        u,
        v: floats(doc.v),
        outer_iterations: doc.outer_iterations,
        restarts: doc.restarts,
        penalty: doc.penalty.0,
        max_violation: doc.max_violation.0,
        equality_residual: doc.equality_residual.0,
        stats: NewtonStats {
            newton_steps: doc.stats.newton_steps,
            cg_steps: doc.stats.cg_steps,
            factorizations: doc.stats.factorizations,
            last_gradient_norm: doc.stats.last_gradient_norm.0,
            shifts_applied: floats(doc.stats.shifts_applied),
        },
        dimacs: doc.dimacs.map(|d| DimacsErrors {
            err1: d.err1.0,
            err2: d.err2.0,
            err3: d.err3.0,
            err4: d.err4.0,
            err5: d.err5.0,
            err6: d.err6.0,
        }),
        verdict: doc.verdict,
        trace: doc
            .trace
            .into_iter()
            .map(|t| TraceRow {
                iteration: t.iteration,
                objective: t.objective.0,
                grad_norm: t.grad_norm.0,
                newton: t.newton,
                cg: t.cg,
            })
            .collect(),
        iterates: doc.iterates.into_iter().map(floats).collect(),
    })
}
