//! Reduction of a general positive SDP to the normalized special form, and
//! pullback of special-form solutions to the original instance.
//!
//! The reduction runs in stages:
//! 1. prune constraints with `b_i = 0` (trivially satisfied) and constraints
//!    whose matrix has mass outside the support of C (their dual variable is
//!    forced to 0 by `sum y_i A_i <= C` restricted to the kernel of C);
//! 2. normalize `A'_i = C^{-1/2} A_i C^{-1/2} / b_i`, using the pseudo-inverse
//!    square root on the support of C;
//! 3. pad the constraint list to `m >= n` by repeating the first retained
//!    constraint;
//! 4. clip each `A'_i`'s eigenvalues into `[eps*beta/m, beta*m/eps]` where
//!    `beta = min_i ||A'_i||` (values above the window saturate, values below
//!    drop to zero), bounding the nonzero spectral spread by `m^2/eps^2`;
//! 5. rescale by `t = max_i ||A''_i||` so the largest operator norm is 1.
//!
//! Clipping changes the optimum by at most a factor `1+eps`, and a
//! `(1+eps)`-optimal special-form solution pulls back to a feasible solution
//! of the original program with objective at most `(1+eps)^2` times optimal.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::instance::{
    self, InstanceError, InstanceMetadata, PositiveSdpInstance, SpecialFormInstance,
    SPECIAL_FEAS_TOL,
};
use crate::spectra::{self, eigh, HermitianMatrix, SpectraError};

pub const TRANSFORM_FORMAT: &str = "psdp-transform/v1";
pub const PULLBACK_FORMAT: &str = "psdp-pullback/v1";

/// Relative tolerance used when cross-checking a deserialized record against
/// a freshly recomputed reduction of the same instance.
const RECORD_MATCH_TOL: f64 = 1e-9;

/// Feasibility tolerance for the pulled-back solution on the original
/// (general-form) constraints: two spectral conjugations each contribute
/// roundoff proportional to the data scale.
pub fn general_feas_tol(max_b: f64) -> f64 {
    1e-7 * (1.0 + max_b)
}

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
    #[error("constraint {constraint} is unsatisfiable on the support of C: A[{constraint}] projects to zero there while b[{constraint}] > 0")]
    InfeasibleStructure { constraint: usize },
    #[error("no constraint survives pruning; the program is trivial")]
    AllConstraintsTrivial,
    #[error("candidate solution infeasible for the special form: {reason}")]
    InfeasibleInput { reason: String },
    #[error("transform record does not match the instance: {0}")]
    InconsistentRecord(String),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Everything needed to pull a special-form solution back to the original
/// instance, plus the clipping data for auditability.
#[derive(Debug, Clone)]
pub struct TransformRecord {
    c_inv_sqrt: HermitianMatrix,
    removed_constraints: Vec<usize>,
    padding_count: usize,
    beta: f64,
    clip_hi: f64,
    clip_lo: f64,
    scale_t: f64,
    epsilon: f64,
    eigbases: Vec<DMatrix<Complex64>>,
}

impl TransformRecord {
    /// Pseudo-inverse square root of C on its support.
    pub fn c_inv_sqrt(&self) -> &HermitianMatrix {
        &self.c_inv_sqrt
    }

    /// Original indices of pruned constraints, ascending.
    pub fn removed_constraints(&self) -> &[usize] {
        &self.removed_constraints
    }

    /// Number of times the first retained constraint was repeated to reach
    /// m >= n. Dual weights for the copies accumulate onto that constraint.
    pub fn padding_count(&self) -> usize {
        self.padding_count
    }

    /// min_i ‖A'_i‖ over the padded, normalized constraints.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Upper clip bound β·m/ε.
    pub fn clip_hi(&self) -> f64 {
        self.clip_hi
    }

    /// Lower clip bound ε·β/m; eigenvalues below it drop to zero.
    pub fn clip_lo(&self) -> f64 {
        self.clip_lo
    }

    /// t = max_i ‖A''_i‖, the final normalization factor.
    pub fn scale_t(&self) -> f64 {
        self.scale_t
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Per-constraint eigenvector bases in which the clipping was applied.
    pub fn eigbases(&self) -> &[DMatrix<Complex64>] {
        &self.eigbases
    }
}

/// Feasible solution for the original instance recovered from a special-form
/// solution.
#[derive(Debug, Clone)]
pub struct PullbackResult {
    /// PSD matrix satisfying every retained constraint of the original
    /// instance within [`general_feas_tol`].
    pub x: HermitianMatrix,
    /// tr(C·X).
    pub objective: f64,
    /// The approximation factor carried by the reduction: (1+ε)².
    pub factor_bound: f64,
}

pub fn to_special_form(
    inst: &PositiveSdpInstance,
    epsilon: f64,
) -> Result<(SpecialFormInstance, TransformRecord), TransformError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(TransformError::BadEpsilon(epsilon));
    }
    let n = inst.n();

    // Support of C and its pseudo-inverse square root.
    let c_decomp = eigh(inst.c())?;
    let c_norm = c_decomp.spectral_norm();
    let support_threshold = spectra::psd_tol(c_norm) * c_norm;
    let support_count = c_decomp
        .eigenvalues()
        .iter()
        .filter(|&&lambda| lambda > support_threshold)
        .count();
    let v_c = c_decomp.eigenvector_matrix();
    let inv_sqrt_diag = DMatrix::from_fn(n, n, |i, j| {
        if i == j && i < support_count {
            Complex64::new(1.0 / c_decomp.eigenvalues()[i].sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let c_inv_sqrt =
        HermitianMatrix::symmetrized(v_c * inv_sqrt_diag * v_c.adjoint())?;

    // Prune: b_i = 0, then support mismatches. A PSD matrix has mass outside
    // the support of C exactly when its trace against the kernel projector is
    // positive; if additionally its projection onto the support vanishes, the
    // reduced constraint is unsatisfiable there.
    let kernel_columns = v_c.columns(support_count, n - support_count).into_owned();
    let mut removed_constraints = Vec::new();
    let mut retained = Vec::new();
    for (i, a_i) in inst.a().iter().enumerate() {
        if inst.b()[i] == 0.0 {
            removed_constraints.push(i);
            continue;
        }
        let trace = a_i.trace();
        let kernel_mass = if n > support_count {
            let projected = a_i.as_matrix() * &kernel_columns;
            (kernel_columns.adjoint() * projected)
                .diagonal()
                .iter()
                .map(|z| z.re)
                .sum::<f64>()
        } else {
            0.0
        };
        let mass_tol = spectra::psd_tol(a_i.max_abs_entry());
        if kernel_mass > mass_tol {
            if trace - kernel_mass <= mass_tol {
                return Err(TransformError::InfeasibleStructure { constraint: i });
            }
            removed_constraints.push(i);
            continue;
        }
        retained.push(i);
    }
    if retained.is_empty() {
        return Err(TransformError::AllConstraintsTrivial);
    }

    // Normalize and pad.
    let mut a_prime: Vec<HermitianMatrix> = Vec::with_capacity(retained.len().max(n));
    for &i in &retained {
        let product =
            c_inv_sqrt.as_matrix() * inst.a()[i].as_matrix() * c_inv_sqrt.as_matrix();
        let normalized = HermitianMatrix::symmetrized(product)?.scaled(1.0 / inst.b()[i]);
        a_prime.push(normalized);
    }
    let padding_count = n.saturating_sub(a_prime.len());
    for _ in 0..padding_count {
        a_prime.push(a_prime[0].clone());
    }
    let m_prime = a_prime.len();

    // Clip the spectra into [eps*beta/m, beta*m/eps] and rescale to norm 1.
    let decomps: Vec<_> = a_prime
        .iter()
        .map(eigh)
        .collect::<Result<Vec<_>, _>>()?;
    let beta = decomps
        .iter()
        .map(|d| d.max_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    if !(beta > 0.0) {
        // Retained constraints have positive mass on the support of C, so a
        // non-positive norm can only arise from numerical breakdown.
        return Err(TransformError::InconsistentRecord(format!(
            "normalized constraint norms degenerate (beta = {beta})"
        )));
    }
    let clip_hi = beta * m_prime as f64 / epsilon;
    let clip_lo = epsilon * beta / m_prime as f64;

    let mut eigbases = Vec::with_capacity(m_prime);
    let mut a_clipped = Vec::with_capacity(m_prime);
    let mut scale_t: f64 = 0.0;
    for decomp in &decomps {
        let basis = decomp.eigenvector_matrix().clone();
        let clipped: Vec<f64> = decomp
            .eigenvalues()
            .iter()
            .map(|&lambda| {
                if lambda > clip_hi {
                    clip_hi
                } else if lambda < clip_lo {
                    0.0
                } else {
                    lambda
                }
            })
            .collect();
        scale_t = scale_t.max(clipped[0]);
        let diag = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(clipped[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let rebuilt = &basis * diag * basis.adjoint();
        a_clipped.push(HermitianMatrix::symmetrized(rebuilt)?);
        eigbases.push(basis);
    }

    let a_hat: Vec<HermitianMatrix> = a_clipped
        .iter()
        .map(|a| a.scaled(1.0 / scale_t))
        .collect();
    let gamma = (m_prime as f64 / epsilon).powi(2);

    let metadata = InstanceMetadata {
        name: format!("{}-special", inst.metadata().name),
        kind: instance::InstanceKind::Special,
        seed: inst.metadata().seed,
        provenance: Some(format!("reduced from general form at epsilon {epsilon}")),
    };
    let special = SpecialFormInstance::new(a_hat, gamma, metadata)?;
    let record = TransformRecord {
        c_inv_sqrt,
        removed_constraints,
        padding_count,
        beta,
        clip_hi,
        clip_lo,
        scale_t,
        epsilon,
        eigbases,
    };
    Ok((special, record))
}

/// Pulls a feasible special-form solution back to the original instance:
/// X = C^{-1/2}·(X̂/t)·C^{-1/2}.
///
/// The reduction is recomputed from the instance and cross-checked against
/// the record, so a record belonging to a different instance (or epsilon) is
/// rejected rather than silently producing garbage.
pub fn pull_back(
    x_hat: &HermitianMatrix,
    record: &TransformRecord,
    inst: &PositiveSdpInstance,
) -> Result<PullbackResult, TransformError> {
    let (special, recomputed) = to_special_form(inst, record.epsilon)?;
    check_record_consistency(record, &recomputed)?;

    if x_hat.dim() != special.n() {
        return Err(TransformError::InfeasibleInput {
            reason: format!(
                "candidate has dimension {}, instance needs {}",
                x_hat.dim(),
                special.n()
            ),
        });
    }
    let x_hat_decomp = eigh(x_hat)?;
    let min_eig = x_hat_decomp.min_eigenvalue();
    if min_eig < -spectra::psd_tol(x_hat_decomp.spectral_norm()) {
        return Err(TransformError::InfeasibleInput {
            reason: format!("candidate not PSD (smallest eigenvalue {min_eig})"),
        });
    }
    for (i, a_hat_i) in special.a_hat().iter().enumerate() {
        let achieved = a_hat_i.trace_product(x_hat)?;
        if achieved < 1.0 - SPECIAL_FEAS_TOL {
            return Err(TransformError::InfeasibleInput {
                reason: format!(
                    "tr(A_hat[{i}] X) = {achieved} falls short of 1 beyond tolerance {SPECIAL_FEAS_TOL}"
                ),
            });
        }
    }

    let x_double_prime = x_hat.scaled(1.0 / record.scale_t);
    let product =
        record.c_inv_sqrt.as_matrix() * x_double_prime.as_matrix() * record.c_inv_sqrt.as_matrix();
    let x = HermitianMatrix::symmetrized(product)?;
    let objective = inst.c().trace_product(&x)?;

    // Feasibility of the pullback on retained constraints is a theorem of
    // the construction; a violation here means the record and instance have
    // drifted apart numerically.
    let feas_tol = general_feas_tol(inst.b().iter().cloned().fold(0.0, f64::max));
    for (i, (a_i, &b_i)) in inst.a().iter().zip(inst.b().iter()).enumerate() {
        if record.removed_constraints.contains(&i) {
            continue;
        }
        let achieved = a_i.trace_product(&x)?;
        if achieved < b_i - feas_tol {
            return Err(TransformError::InconsistentRecord(format!(
                "pulled-back solution violates retained constraint {i}: tr(A X) = {achieved} < b = {b_i}"
            )));
        }
    }

    let factor_bound = (1.0 + record.epsilon).powi(2);
    Ok(PullbackResult {
        x,
        objective,
        factor_bound,
    })
}

fn check_record_consistency(
    record: &TransformRecord,
    recomputed: &TransformRecord,
) -> Result<(), TransformError> {
    let close = |a: f64, b: f64| (a - b).abs() <= RECORD_MATCH_TOL * (1.0 + a.abs().max(b.abs()));
    if record.removed_constraints != recomputed.removed_constraints {
        return Err(TransformError::InconsistentRecord(
            "pruned constraint sets differ".into(),
        ));
    }
    if record.padding_count != recomputed.padding_count {
        return Err(TransformError::InconsistentRecord(
            "padding counts differ".into(),
        ));
    }
    for (name, a, b) in [
        ("beta", record.beta, recomputed.beta),
        ("clip_hi", record.clip_hi, recomputed.clip_hi),
        ("clip_lo", record.clip_lo, recomputed.clip_lo),
        ("scale_t", record.scale_t, recomputed.scale_t),
    ] {
        if !close(a, b) {
            return Err(TransformError::InconsistentRecord(format!(
                "{name} mismatch: record {a}, recomputed {b}"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sidecar serialization
// ---------------------------------------------------------------------------

pub fn transform_record_to_json_string(record: &TransformRecord) -> String {
    let mut obj = Map::new();
    obj.insert("format".into(), json!(TRANSFORM_FORMAT));
    obj.insert("epsilon".into(), instance::float_to_json(record.epsilon));
    obj.insert("beta".into(), instance::float_to_json(record.beta));
    obj.insert("clip_hi".into(), instance::float_to_json(record.clip_hi));
    obj.insert("clip_lo".into(), instance::float_to_json(record.clip_lo));
    obj.insert("scale_t".into(), instance::float_to_json(record.scale_t));
    obj.insert(
        "removed_constraints".into(),
        Value::Array(
            record
                .removed_constraints
                .iter()
                .map(|&i| json!(i))
                .collect(),
        ),
    );
    obj.insert("padding_count".into(), json!(record.padding_count));
    obj.insert(
        "c_inv_sqrt".into(),
        instance::matrix_to_json(&record.c_inv_sqrt),
    );
    obj.insert(
        "eigbases".into(),
        Value::Array(
            record
                .eigbases
                .iter()
                .map(instance::complex_matrix_to_json)
                .collect(),
        ),
    );
    let mut text = serde_json::to_string_pretty(&Value::Object(obj))
        .expect("record JSON has no non-finite numbers");
    text.push('\n');
    text
}

pub fn write_transform_record(record: &TransformRecord, path: &Path) -> Result<(), TransformError> {
    fs::write(path, transform_record_to_json_string(record)).map_err(InstanceError::Io)?;
    Ok(())
}

pub fn read_transform_record(path: &Path) -> Result<TransformRecord, TransformError> {
    let text = fs::read_to_string(path).map_err(InstanceError::Io)?;
    transform_record_from_json_str(&text)
}

pub fn transform_record_from_json_str(text: &str) -> Result<TransformRecord, TransformError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| InstanceError::Parse("top level must be a JSON object".into()))?;
    let format = obj
        .get("format")
        .and_then(Value::as_str)
        .ok_or_else(|| InstanceError::Parse("missing string field \"format\"".into()))?;
    if format != TRANSFORM_FORMAT {
        return Err(TransformError::Instance(InstanceError::Parse(format!(
            "unsupported format \"{format}\", expected \"{TRANSFORM_FORMAT}\""
        ))));
    }
    let number = |key: &str| -> Result<f64, TransformError> {
        obj.get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| InstanceError::Parse(format!("missing numeric field \"{key}\"")).into())
    };
    let epsilon = number("epsilon")?;
    let beta = number("beta")?;
    let clip_hi = number("clip_hi")?;
    let clip_lo = number("clip_lo")?;
    let scale_t = number("scale_t")?;
    let removed_constraints = obj
        .get("removed_constraints")
        .and_then(Value::as_array)
        .ok_or_else(|| InstanceError::Parse("missing array field \"removed_constraints\"".into()))?
        .iter()
        .map(|v| {
            v.as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| InstanceError::Parse("removed_constraints entries must be integers".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let padding_count = obj
        .get("padding_count")
        .and_then(Value::as_u64)
        .ok_or_else(|| InstanceError::Parse("missing integer field \"padding_count\"".into()))?
        as usize;
    let c_inv_sqrt_raw = obj
        .get("c_inv_sqrt")
        .ok_or_else(|| InstanceError::Parse("missing field \"c_inv_sqrt\"".into()))?;
    let c_inv_sqrt_mat = instance::complex_matrix_from_json(c_inv_sqrt_raw, "c_inv_sqrt")?;
    let dim = c_inv_sqrt_mat.nrows();
    if c_inv_sqrt_mat.ncols() != dim {
        return Err(TransformError::Instance(InstanceError::Parse(
            "c_inv_sqrt must be square".into(),
        )));
    }
    let c_inv_sqrt = HermitianMatrix::symmetrized(c_inv_sqrt_mat)?;
    let eigbases = obj
        .get("eigbases")
        .and_then(Value::as_array)
        .ok_or_else(|| InstanceError::Parse("missing array field \"eigbases\"".into()))?
        .iter()
        .enumerate()
        .map(|(i, v)| instance::complex_matrix_from_json(v, &format!("eigbases[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TransformRecord {
        c_inv_sqrt,
        removed_constraints,
        padding_count,
        beta,
        clip_hi,
        clip_lo,
        scale_t,
        epsilon,
        eigbases,
    })
}

pub fn pullback_to_json_string(result: &PullbackResult) -> String {
    let mut obj = Map::new();
    obj.insert("format".into(), json!(PULLBACK_FORMAT));
    obj.insert(
        "objective".into(),
        instance::float_to_json(result.objective),
    );
    obj.insert(
        "factor_bound".into(),
        instance::float_to_json(result.factor_bound),
    );
    obj.insert("x".into(), instance::matrix_to_json(&result.x));
    let mut text = serde_json::to_string_pretty(&Value::Object(obj))
        .expect("pullback JSON has no non-finite numbers");
    text.push('\n');
    text
}

pub fn write_pullback(result: &PullbackResult, path: &Path) -> Result<(), TransformError> {
    fs::write(path, pullback_to_json_string(result)).map_err(InstanceError::Io)?;
    Ok(())
}
