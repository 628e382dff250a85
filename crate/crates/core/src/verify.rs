//! Certificate verification and reference oracles.
//!
//! Verification recomputes every trace and eigenvalue from the certificate's
//! X* and y* directly; nothing is trusted from the solve that produced them.
//! Two oracles provide ground truth for testing: an exact LP solve for
//! instances whose matrices are all diagonal (the commuting case collapses to
//! a positive linear program over the diagonals), and a bisection bracket for
//! tiny dense instances driven by an ellipsoid feasibility search that shares
//! no code with the iterative solver.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::instance::{
    self, Instance, InstanceError, PositiveSdpInstance, SpecialFormInstance, SPECIAL_FEAS_TOL,
};
use crate::solver::Certificate;
use crate::spectra::{eigh, HermitianMatrix, SpectraError};
use crate::transform::general_feas_tol;

pub const VERIFY_FORMAT: &str = "psdp-verify/v1";

/// Slack allowed on the approximation-ratio test beyond the guarantee.
const GAP_SLACK: f64 = 1e-9;

/// Off-diagonal tolerance for the commuting-case oracle, scaled by the data.
const DIAG_TOL: f64 = 1e-12;

/// Relative tolerance of the LP oracle's feasibility and optimum.
const LP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("certificate does not fit the instance: {message}")]
    DimensionMismatch { message: String },
    #[error("certificate is structurally invalid: {message}")]
    BadCertificate { message: String },
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("constraint data is not diagonal: {message}")]
    NotDiagonal { message: String },
    #[error("induced linear program is infeasible (row {row} cannot be satisfied)")]
    OracleInfeasible { row: usize },
    #[error("bracket width {width} still exceeds resolution {resolution} at the iteration budget")]
    ResolutionUnreachable { width: f64, resolution: f64 },
    #[error("bracket oracle supports n <= 4 and m <= 4, got n={n}, m={m}")]
    TooLarge { n: usize, m: usize },
    #[error("oracle parameter out of range: {message}")]
    BadParameter { message: String },
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Certified,
    FeasibilityFail,
    GapFail,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Certified => "certified",
            Verdict::FeasibilityFail => "feasibility_fail",
            Verdict::GapFail => "gap_fail",
        }
    }
}

/// Outcome of an independent certificate check.
///
/// Feasibility residuals are signed: negative means violated by that amount.
/// The primal residual is the worst constraint slack, floored at the smallest
/// eigenvalue of X* so that a non-PSD matrix cannot certify; the dual
/// residual is likewise floored at the smallest weight so that negative
/// weights cannot certify.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub primal_feasibility: f64,
    pub dual_feasibility: f64,
    pub gap_ratio: f64,
    /// Approximation factor promised at the certificate's epsilon: 1 + 5√ε.
    pub guarantee: f64,
    pub verdict: Verdict,
}

/// Checks a certificate against an instance from scratch.
///
/// The verdict is certified exactly when both residuals clear −feas_tol and
/// the recomputed objective ratio clears the guarantee; a non-positive dual
/// value is reported as a gap failure since the ratio is then meaningless.
/// Feasibility failures win over gap failures when both occur.
pub fn verify_certificate(
    inst: &Instance,
    cert: &Certificate,
) -> Result<VerificationReport, VerifyError> {
    if !(cert.epsilon > 0.0 && cert.epsilon < 1.0) {
        return Err(VerifyError::BadCertificate {
            message: format!("epsilon must lie in (0, 1), got {}", cert.epsilon),
        });
    }
    if let Some(bad) = cert.y_star.iter().find(|v| !v.is_finite()) {
        return Err(VerifyError::BadCertificate {
            message: format!("y_star contains a non-finite entry {bad}"),
        });
    }
    let guarantee = 1.0 + 5.0 * cert.epsilon.sqrt();
    let (primal_feasibility, dual_feasibility, primal_value, dual_value, feas_tol) = match inst {
        Instance::Special(special) => special_residuals(special, cert)?,
        Instance::General(general) => general_residuals(general, cert)?,
    };

    let feasible =
        primal_feasibility >= -feas_tol && dual_feasibility >= -feas_tol;
    let (gap_ratio, gap_ok) = if dual_value > 0.0 {
        let ratio = primal_value / dual_value;
        (ratio, ratio <= guarantee + GAP_SLACK)
    } else {
        (f64::INFINITY, false)
    };
    let verdict = if !feasible {
        Verdict::FeasibilityFail
    } else if !gap_ok {
        Verdict::GapFail
    } else {
        Verdict::Certified
    };
    Ok(VerificationReport {
        primal_feasibility,
        dual_feasibility,
        gap_ratio,
        guarantee,
        verdict,
    })
}

fn special_residuals(
    inst: &SpecialFormInstance,
    cert: &Certificate,
) -> Result<(f64, f64, f64, f64, f64), VerifyError> {
    check_dims(inst.n(), inst.m(), cert)?;
    let x_decomp = eigh(&cert.x_star)?;
    let mut primal = f64::INFINITY;
    for a_i in inst.a_hat() {
        primal = primal.min(a_i.trace_product(&cert.x_star)? - 1.0);
    }
    primal = primal.min(x_decomp.min_eigenvalue());
    let mut dual_op = HermitianMatrix::zeros(inst.n());
    for (a_i, &w) in inst.a_hat().iter().zip(&cert.y_star) {
        dual_op.add_assign_scaled(w, a_i)?;
    }
    let mut dual = 1.0 - eigh(&dual_op)?.max_eigenvalue();
    dual = dual.min(cert.y_star.iter().cloned().fold(f64::INFINITY, f64::min));
    let primal_value = cert.x_star.trace();
    let dual_value: f64 = cert.y_star.iter().sum();
    Ok((primal, dual, primal_value, dual_value, SPECIAL_FEAS_TOL))
}

fn general_residuals(
    inst: &PositiveSdpInstance,
    cert: &Certificate,
) -> Result<(f64, f64, f64, f64, f64), VerifyError> {
    check_dims(inst.n(), inst.m(), cert)?;
    let x_decomp = eigh(&cert.x_star)?;
    let mut primal = f64::INFINITY;
    for (a_i, &b_i) in inst.a().iter().zip(inst.b()) {
        primal = primal.min(a_i.trace_product(&cert.x_star)? - b_i);
    }
    primal = primal.min(x_decomp.min_eigenvalue());
    let mut slack = inst.c().clone();
    for (a_i, &w) in inst.a().iter().zip(&cert.y_star) {
        slack.add_assign_scaled(-w, a_i)?;
    }
    let mut dual = eigh(&slack)?.min_eigenvalue();
    dual = dual.min(cert.y_star.iter().cloned().fold(f64::INFINITY, f64::min));
    let primal_value = inst.c().trace_product(&cert.x_star)?;
    let dual_value: f64 = cert
        .y_star
        .iter()
        .zip(inst.b())
        .map(|(y, b)| y * b)
        .sum();
    let max_b = inst.b().iter().cloned().fold(0.0, f64::max);
    Ok((primal, dual, primal_value, dual_value, general_feas_tol(max_b)))
}

fn check_dims(n: usize, m: usize, cert: &Certificate) -> Result<(), VerifyError> {
    if cert.x_star.dim() != n {
        return Err(VerifyError::DimensionMismatch {
            message: format!("X_star has dimension {}, instance has n = {n}", cert.x_star.dim()),
        });
    }
    if cert.y_star.len() != m {
        return Err(VerifyError::DimensionMismatch {
            message: format!("y_star has {} entries, instance has m = {m}", cert.y_star.len()),
        });
    }
    Ok(())
}

pub fn report_to_json_string(report: &VerificationReport) -> String {
    let mut obj = Map::new();
    obj.insert("format".into(), json!(VERIFY_FORMAT));
    obj.insert(
        "primal_feasibility".into(),
        instance::float_to_json(report.primal_feasibility),
    );
    obj.insert(
        "dual_feasibility".into(),
        instance::float_to_json(report.dual_feasibility),
    );
    // The ratio is infinite when the dual value is non-positive; encode that
    // as a string since JSON has no infinity literal.
    let gap = if report.gap_ratio.is_finite() {
        instance::float_to_json(report.gap_ratio)
    } else {
        json!("infinite")
    };
    obj.insert("gap_ratio".into(), gap);
    obj.insert("guarantee".into(), instance::float_to_json(report.guarantee));
    obj.insert("verdict".into(), json!(report.verdict.as_str()));
    let mut text =
        serde_json::to_string_pretty(&Value::Object(obj)).expect("report fields are finite");
    text.push('\n');
    text
}

pub fn write_report(report: &VerificationReport, path: &Path) -> Result<(), InstanceError> {
    fs::write(path, report_to_json_string(report))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Diagonal LP oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    DiagonalLp,
    DenseBracket,
}

impl OracleMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            OracleMethod::DiagonalLp => "diagonal_lp",
            OracleMethod::DenseBracket => "dense_bracket",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub optimum: f64,
    pub method: OracleMethod,
    pub tolerance: f64,
}

/// Exact optimum for instances whose matrices are all diagonal.
///
/// Such an instance is a positive linear program over the diagonals:
/// min Σ c_j x_j s.t. Σ_j a_{ij} x_j ≥ b_i, x ≥ 0. The optimum is computed
/// by enumerating basis vertices of the feasible polyhedron, which is exact
/// at desk scale and shares nothing with the iterative solver.
pub fn diagonal_lp_oracle(inst: &Instance) -> Result<OracleResult, OracleError> {
    let (objective, rows, rhs) = match inst {
        Instance::General(general) => {
            let c = require_diagonal(general.c(), "C")?;
            let rows = general
                .a()
                .iter()
                .enumerate()
                .map(|(i, a_i)| require_diagonal(a_i, &format!("A[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            (c, rows, general.b().to_vec())
        }
        Instance::Special(special) => {
            let rows = special
                .a_hat()
                .iter()
                .enumerate()
                .map(|(i, a_i)| require_diagonal(a_i, &format!("A[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            (vec![1.0; special.n()], rows, vec![1.0; special.m()])
        }
    };
    let optimum = min_positive_lp(&objective, &rows, &rhs)?;
    Ok(OracleResult {
        optimum,
        method: OracleMethod::DiagonalLp,
        tolerance: LP_TOL * (1.0 + optimum.abs()),
    })
}

fn require_diagonal(mat: &HermitianMatrix, label: &str) -> Result<Vec<f64>, OracleError> {
    let tol = DIAG_TOL * (1.0 + mat.max_abs_entry());
    if mat.max_offdiag_abs() > tol {
        return Err(OracleError::NotDiagonal {
            message: format!(
                "{label} has off-diagonal mass {} above tolerance {tol}",
                mat.max_offdiag_abs()
            ),
        });
    }
    Ok(mat.diagonal_real())
}

/// min c·x subject to rows·x ≥ rhs, x ≥ 0, by enumerating all candidate
/// vertices (every choice of nv active constraints from the m + nv available
/// ones). The objective is non-negative on the feasible cone, so a finite
/// optimum is attained at a vertex.
fn min_positive_lp(c: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> Result<f64, OracleError> {
    let nv = c.len();
    let m = rows.len();
    for (i, row) in rows.iter().enumerate() {
        let zero_row = row.iter().all(|&a| a.abs() <= 1e-14 * (1.0 + rhs[i].abs()));
        if zero_row && rhs[i] > 0.0 {
            return Err(OracleError::OracleInfeasible { row: i });
        }
    }
    let mut best: Option<f64> = None;
    let mut active = vec![0usize; nv];
    enumerate_combinations(m + nv, nv, &mut active, 0, 0, &mut |chosen| {
        // Active set: indices < m pick constraint rows with equality, the
        // rest pin coordinates at zero.
        let mut system = DMatrix::<f64>::zeros(nv, nv);
        let mut target = DVector::<f64>::zeros(nv);
        for (r, &pick) in chosen.iter().enumerate() {
            if pick < m {
                for j in 0..nv {
                    system[(r, j)] = rows[pick][j];
                }
                target[r] = rhs[pick];
            } else {
                system[(r, pick - m)] = 1.0;
                target[r] = 0.0;
            }
        }
        let Some(x) = system.lu().solve(&target) else {
            return;
        };
        let scale = 1.0 + x.amax();
        if x.iter().any(|&v| v < -LP_TOL * scale) {
            return;
        }
        for (i, row) in rows.iter().enumerate() {
            let lhs: f64 = row.iter().zip(x.iter()).map(|(a, v)| a * v).sum();
            if lhs < rhs[i] - LP_TOL * (1.0 + rhs[i].abs() + lhs.abs()) {
                return;
            }
        }
        let value: f64 = c.iter().zip(x.iter()).map(|(cj, v)| cj * v).sum();
        best = Some(match best {
            Some(b) => b.min(value),
            None => value,
        });
    });
    best.ok_or(OracleError::OracleInfeasible { row: 0 })
}

/// Visits every k-subset of 0..pool in lexicographic order.
fn enumerate_combinations(
    pool: usize,
    k: usize,
    scratch: &mut [usize],
    depth: usize,
    start: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if depth == k {
        visit(scratch);
        return;
    }
    for candidate in start..pool {
        if pool - candidate < k - depth {
            break;
        }
        scratch[depth] = candidate;
        enumerate_combinations(pool, k, scratch, depth + 1, candidate + 1, visit);
    }
}

// ---------------------------------------------------------------------------
// Dense bracket oracle
// ---------------------------------------------------------------------------

/// Brackets the optimum of a tiny special-form instance by bisecting on the
/// objective value. Each probe asks an ellipsoid search whether some PSD X
/// with tr X ≤ v satisfies all constraints; failure to find a point within
/// the volume budget certifies that no ball of radius r_min fits inside the
/// feasible set, which bounds the optimum from below once r_min is tied to
/// the probe margin. The returned midpoint carries tolerance (hi − lo)/2.
pub fn bracket_oracle(
    inst: &SpecialFormInstance,
    resolution: f64,
) -> Result<OracleResult, OracleError> {
    let n = inst.n();
    let m = inst.m();
    if n > 4 || m > 4 {
        return Err(OracleError::TooLarge { n, m });
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(OracleError::BadParameter {
            message: format!("resolution must be positive and finite, got {resolution}"),
        });
    }
    // Scaled identity is feasible: X = I/s with s the smallest constraint
    // trace meets every constraint with equality or better.
    let min_constraint_trace = inst
        .a_hat()
        .iter()
        .map(HermitianMatrix::trace)
        .fold(f64::INFINITY, f64::min);
    if !(min_constraint_trace > 0.0) {
        return Err(OracleError::OracleInfeasible { row: 0 });
    }
    let mut hi = n as f64 / min_constraint_trace;
    let mut lo = 0.0f64;

    // A probe at v >= opt + resolution/2 admits a feasibility ball of radius
    // at least this r_min (perturbations of X* + cI with c = resolution/4n).
    let probe_margin = resolution / 2.0;
    let r_min =
        probe_margin * min_constraint_trace.min(1.0) / (2.0 * (n as f64).powf(1.5));
    if r_min <= 1e-12 {
        return Err(OracleError::ResolutionUnreachable {
            width: hi - lo,
            resolution,
        });
    }

    let vectors: Vec<DVector<f64>> = inst.a_hat().iter().map(hermitian_to_real_vec).collect();
    let mut bisections = 0usize;
    while hi - lo > resolution / 2.0 {
        bisections += 1;
        if bisections > 200 {
            return Err(OracleError::ResolutionUnreachable {
                width: hi - lo,
                resolution,
            });
        }
        let v = 0.5 * (lo + hi);
        if ellipsoid_feasible(inst, &vectors, v, r_min)? {
            hi = v;
        } else {
            lo = v;
        }
    }
    // Failed probes only certify opt > v − probe_margin.
    let lo_adjusted = (lo - probe_margin).max(0.0);
    Ok(OracleResult {
        optimum: 0.5 * (lo_adjusted + hi),
        method: OracleMethod::DenseBracket,
        tolerance: 0.5 * (hi - lo_adjusted),
    })
}

/// Searches for a PSD X with tr X ≤ v and all constraint traces ≥ 1 via the
/// central-cut ellipsoid method over the real coordinates of Hermitian
/// matrices. Returns false when the volume budget rules out any feasible
/// ball of radius r_min.
fn ellipsoid_feasible(
    inst: &SpecialFormInstance,
    constraint_vecs: &[DVector<f64>],
    v: f64,
    r_min: f64,
) -> Result<bool, OracleError> {
    let n = inst.n();
    let d = n * n;
    let radius = 2.0 * (v + 1.0);
    let budget =
        (2.0 * d as f64 * (d as f64 + 1.0) * (radius / r_min).ln()).ceil() as usize + 8 * d;

    let identity_vec = hermitian_to_real_vec(&HermitianMatrix::identity(n));
    let mut center = DVector::<f64>::zeros(d);
    let mut shape = DMatrix::<f64>::identity(d, d) * radius * radius;

    for _ in 0..budget {
        // Find a violated constraint in a fixed order; the eigensolve runs
        // last because it is the expensive check.
        let mut cut: Option<DVector<f64>> = None;
        if center.dot(&identity_vec) > v {
            cut = Some(identity_vec.clone());
        }
        if cut.is_none() {
            for vec_a in constraint_vecs {
                if center.dot(vec_a) < 1.0 {
                    cut = Some(-vec_a);
                    break;
                }
            }
        }
        if cut.is_none() {
            let x = real_vec_to_hermitian(&center, n);
            let decomp = eigh(&x)?;
            if decomp.min_eigenvalue() < 0.0 {
                let basis = decomp.eigenvector_matrix();
                let bottom = basis.column(n - 1).into_owned();
                let dyad = &bottom * bottom.adjoint();
                let dyad = HermitianMatrix::symmetrized(dyad)?;
                cut = Some(-hermitian_to_real_vec(&dyad));
            } else {
                return Ok(true);
            }
        }
        let a = cut.expect("some branch set the cut");
        let qa = &shape * &a;
        let denom_sq = a.dot(&qa);
        if denom_sq <= 0.0 {
            // The ellipsoid has collapsed along the cut direction.
            return Ok(false);
        }
        let denom = denom_sq.sqrt();
        let dd = d as f64;
        center -= (1.0 / (dd + 1.0)) * &qa / denom;
        let outer = &qa * qa.transpose();
        shape = (dd * dd / (dd * dd - 1.0)) * (shape - (2.0 / (dd + 1.0)) * outer / denom_sq);
        // Symmetry erodes under repeated rank-one downdates.
        shape = (&shape + shape.transpose()) * 0.5;
    }
    Ok(false)
}

/// Isometric real coordinates for Hermitian matrices: diagonal entries, then
/// √2-scaled real and imaginary parts of the upper triangle. Inner products
/// of coordinate vectors equal trace products of the matrices.
fn hermitian_to_real_vec(mat: &HermitianMatrix) -> DVector<f64> {
    let n = mat.dim();
    let mut out = DVector::<f64>::zeros(n * n);
    let mut idx = 0;
    for i in 0..n {
        out[idx] = mat.entry(i, i).re;
        idx += 1;
    }
    let root2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = mat.entry(i, j);
            out[idx] = root2 * z.re;
            out[idx + 1] = root2 * z.im;
            idx += 2;
        }
    }
    out
}

fn real_vec_to_hermitian(vec: &DVector<f64>, n: usize) -> HermitianMatrix {
    use num_complex::Complex64;
    let mut data = DMatrix::<Complex64>::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        data[(i, i)] = Complex64::new(vec[idx], 0.0);
        idx += 1;
    }
    let inv_root2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = num_complex::Complex64::new(vec[idx] * inv_root2, vec[idx + 1] * inv_root2);
            data[(i, j)] = z;
            data[(j, i)] = z.conj();
            idx += 2;
        }
    }
    HermitianMatrix::symmetrized(data).expect("constructed exactly Hermitian")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_diagonal, gen_identity, InstanceMetadata};
    use crate::solver::{solve, Certificate, SolverParams};
    use crate::transform::to_special_form;
    use num_complex::Complex64;

    #[test]
    fn identity_certificate_is_certified() {
        let inst = gen_identity(2, 3);
        let params = SolverParams::for_instance(&inst, 0.04).expect("valid");
        let result = solve(&inst, &params).expect("solves");
        let cert = Certificate::from_result(&result, &params, false);
        let report =
            verify_certificate(&Instance::Special(inst), &cert).expect("dims match");
        assert_eq!(report.verdict, Verdict::Certified);
        assert!(report.gap_ratio <= report.guarantee + 1e-9);
        assert!(report.primal_feasibility >= -1e-7);
        assert!(report.dual_feasibility >= -1e-7);
    }

    #[test]
    fn halved_primal_matrix_fails_feasibility() {
        let inst = gen_identity(2, 3);
        let params = SolverParams::for_instance(&inst, 0.04).expect("valid");
        let result = solve(&inst, &params).expect("solves");
        let mut cert = Certificate::from_result(&result, &params, false);
        cert.x_star = cert.x_star.scaled(0.5);
        let report =
            verify_certificate(&Instance::Special(inst), &cert).expect("dims match");
        assert_eq!(report.verdict, Verdict::FeasibilityFail);
        assert!(report.primal_feasibility < -1e-7);
    }

    #[test]
    fn inflated_dual_weights_fail_feasibility() {
        let inst = gen_identity(2, 3);
        let params = SolverParams::for_instance(&inst, 0.04).expect("valid");
        let result = solve(&inst, &params).expect("solves");
        let mut cert = Certificate::from_result(&result, &params, false);
        let factor = 1.0 / (1.0 - 0.2);
        for w in &mut cert.y_star {
            *w *= factor;
        }
        let report =
            verify_certificate(&Instance::Special(inst), &cert).expect("dims match");
        assert_eq!(report.verdict, Verdict::FeasibilityFail);
        assert!(report.dual_feasibility < -1e-7);
    }

    #[test]
    fn oversized_primal_value_fails_the_gap() {
        let inst = gen_identity(2, 3);
        let params = SolverParams::for_instance(&inst, 0.04).expect("valid");
        let result = solve(&inst, &params).expect("solves");
        let mut cert = Certificate::from_result(&result, &params, false);
        // Scaling X* up keeps it feasible but ruins the objective ratio.
        cert.x_star = cert.x_star.scaled(10.0);
        let report =
            verify_certificate(&Instance::Special(inst), &cert).expect("dims match");
        assert_eq!(report.verdict, Verdict::GapFail);
    }

    #[test]
    fn zero_dual_weights_fail_the_gap_defensively() {
        let inst = gen_identity(2, 3);
        let params = SolverParams::for_instance(&inst, 0.04).expect("valid");
        let result = solve(&inst, &params).expect("solves");
        let mut cert = Certificate::from_result(&result, &params, false);
        cert.y_star = vec![0.0; 3];
        let report =
            verify_certificate(&Instance::Special(inst), &cert).expect("dims match");
        assert_eq!(report.verdict, Verdict::GapFail);
        assert!(report.gap_ratio.is_infinite());
    }

    #[test]
    fn general_form_certificate_checks_both_sides() {
        // C = I, single constraint tr X >= 1. X = I/2 is exactly feasible
        // with objective 1; y = 1/2 leaves C - y A = I/2 PSD with value 1/2.
        let inst = PositiveSdpInstance::new(
            HermitianMatrix::identity(2),
            vec![HermitianMatrix::identity(2)],
            vec![1.0],
            InstanceMetadata::general("hand"),
        )
        .expect("valid");
        let result = solve(
            &gen_identity(2, 2),
            &SolverParams::for_instance(&gen_identity(2, 2), 0.1).expect("valid"),
        )
        .expect("solves");
        let mut cert = Certificate::from_result(
            &result,
            &SolverParams::for_instance(&gen_identity(2, 2), 0.1).expect("valid"),
            false,
        );
        cert.x_star = HermitianMatrix::identity(2).scaled(0.5);
        cert.y_star = vec![0.5];
        let report =
            verify_certificate(&Instance::General(inst), &cert).expect("dims match");
        assert_eq!(report.verdict, Verdict::Certified);
        assert!((report.gap_ratio - 2.0).abs() < 1e-12);
        assert!(report.primal_feasibility.abs() < 1e-12);
        assert!((report.dual_feasibility - 0.5).abs() < 1e-12);
    }

    #[test]
    fn report_serializes_every_field() {
        let report = VerificationReport {
            primal_feasibility: -1e-3,
            dual_feasibility: 2e-9,
            gap_ratio: 1.07,
            guarantee: 1.5,
            verdict: Verdict::FeasibilityFail,
        };
        let text = report_to_json_string(&report);
        let value: Value = serde_json::from_str(&text).expect("valid JSON");
        assert_eq!(value["format"], VERIFY_FORMAT);
        assert_eq!(value["verdict"], "feasibility_fail");
        assert_eq!(value["gap_ratio"].as_f64(), Some(1.07));
    }

    #[test]
    fn lp_oracle_returns_one_for_identity_constraints() {
        let inst = gen_identity(3, 4);
        let result = diagonal_lp_oracle(&Instance::Special(inst)).expect("diagonal");
        assert!((result.optimum - 1.0).abs() < 1e-9, "got {}", result.optimum);
        assert_eq!(result.method, OracleMethod::DiagonalLp);
    }

    #[test]
    fn lp_oracle_solves_the_two_constraint_scalar_program() {
        // min x s.t. 0.5 x >= 1 and x >= 1: optimum 2.
        let a_hat = vec![
            HermitianMatrix::from_diagonal(&[0.5]),
            HermitianMatrix::from_diagonal(&[1.0]),
        ];
        let inst = SpecialFormInstance::new(a_hat, 4.0, InstanceMetadata::special("scalar"))
            .expect("valid");
        let result = diagonal_lp_oracle(&Instance::Special(inst)).expect("diagonal");
        assert!((result.optimum - 2.0).abs() < 1e-9);
    }

    #[test]
    fn lp_oracle_agrees_with_independent_dual_enumeration() {
        for seed in [7u64, 8, 9, 10] {
            let inst = gen_diagonal(3, 4, seed);
            let primal = diagonal_lp_oracle(&Instance::General(inst.clone()))
                .expect("diagonal")
                .optimum;
            let dual = dual_lp_optimum_by_enumeration(&inst);
            assert!(
                (primal - dual).abs() <= 1e-9 * (1.0 + primal.abs()),
                "seed {seed}: primal {primal} vs dual {dual}"
            );
        }
    }

    #[test]
    fn lp_oracle_rejects_non_diagonal_data() {
        let general = PositiveSdpInstance::new(
            HermitianMatrix::identity(2),
            vec![HermitianMatrix::from_rows(&[
                vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)],
                vec![Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0)],
            ])
            .expect("Hermitian")],
            vec![1.0],
            InstanceMetadata::general("dense"),
        )
        .expect("valid");
        let err = diagonal_lp_oracle(&Instance::General(general)).expect_err("dense");
        assert!(matches!(err, OracleError::NotDiagonal { .. }));
    }

    #[test]
    fn lp_oracle_reports_infeasible_zero_rows() {
        let general = PositiveSdpInstance::new(
            HermitianMatrix::identity(2),
            vec![HermitianMatrix::zeros(2)],
            vec![1.0],
            InstanceMetadata::general("impossible"),
        )
        .expect("zero constraint matrices are valid general-form data");
        let err = diagonal_lp_oracle(&Instance::General(general)).expect_err("infeasible");
        assert!(matches!(err, OracleError::OracleInfeasible { row: 0 }));
    }

    #[test]
    fn solver_values_sandwich_the_lp_optimum_on_diagonal_instances() {
        for seed in [1u64, 2, 3] {
            let general = gen_diagonal(3, 4, seed);
            let epsilon = 0.1;
            let (special, _) = to_special_form(&general, epsilon).expect("reduces");
            let lp = diagonal_lp_oracle(&Instance::Special(special.clone()))
                .expect("transform preserves diagonality")
                .optimum;
            let params = SolverParams::for_instance(&special, epsilon).expect("valid");
            let result = solve(&special, &params).expect("solves");
            assert!(
                result.dual_value <= lp + 1e-7,
                "seed {seed}: dual {} above optimum {lp}",
                result.dual_value
            );
            assert!(
                result.primal_value >= lp - 1e-7,
                "seed {seed}: primal {} below optimum {lp}",
                result.primal_value
            );
        }
    }

    #[test]
    fn bracket_oracle_contains_one_for_identity_constraints() {
        let inst = gen_identity(2, 2);
        let result = bracket_oracle(&inst, 1e-2).expect("in range");
        assert_eq!(result.method, OracleMethod::DenseBracket);
        assert!(
            (result.optimum - 1.0).abs() <= result.tolerance + 1e-12,
            "bracket [{} ± {}] misses 1",
            result.optimum,
            result.tolerance
        );
        assert!(result.tolerance <= 1e-2);
    }

    #[test]
    fn bracket_oracle_matches_the_lp_oracle_on_a_diagonal_instance() {
        let a_hat = vec![
            HermitianMatrix::from_diagonal(&[1.0, 0.3]),
            HermitianMatrix::from_diagonal(&[0.4, 0.9]),
        ];
        let inst = SpecialFormInstance::new(a_hat, 10.0, InstanceMetadata::special("tiny"))
            .expect("valid");
        let lp = diagonal_lp_oracle(&Instance::Special(inst.clone()))
            .expect("diagonal")
            .optimum;
        let bracket = bracket_oracle(&inst, 5e-3).expect("in range");
        assert!(
            (bracket.optimum - lp).abs() <= bracket.tolerance + 1e-9,
            "bracket [{} ± {}] misses LP optimum {lp}",
            bracket.optimum,
            bracket.tolerance
        );
    }

    #[test]
    fn bracket_oracle_matches_the_rank_one_cross_fixture() {
        // Constraints |0><0| and |+><+|: the optimum solves a 2x2 problem
        // with closed form 4 - 2*sqrt(2).
        let e0 = HermitianMatrix::from_diagonal(&[1.0, 0.0]);
        let plus = HermitianMatrix::from_rows(&[
            vec![Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)],
            vec![Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)],
        ])
        .expect("Hermitian");
        let inst = SpecialFormInstance::new(
            vec![e0, plus],
            1.0,
            InstanceMetadata::special("cross"),
        )
        .expect("valid");
        let analytic = 4.0 - 2.0 * 2.0f64.sqrt();
        let grid = cross_fixture_optimum_by_grid();
        assert!(
            (grid - analytic).abs() < 2e-3,
            "grid search {grid} vs closed form {analytic}"
        );
        let bracket = bracket_oracle(&inst, 1e-3).expect("in range");
        assert!(
            (bracket.optimum - analytic).abs() <= bracket.tolerance + 1e-9,
            "bracket [{} ± {}] misses {analytic}",
            bracket.optimum,
            bracket.tolerance
        );
        assert!(bracket.tolerance <= 1e-3);
    }

    #[test]
    fn bracket_oracle_rejects_large_instances() {
        let inst = gen_identity(5, 5);
        let err = bracket_oracle(&inst, 1e-2).expect_err("too large");
        assert!(matches!(err, OracleError::TooLarge { n: 5, m: 5 }));
    }

    #[test]
    fn real_coordinates_are_trace_isometric() {
        use rand::prelude::*;
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_hermitian(&mut rng, 3);
            let b = random_hermitian(&mut rng, 3);
            let va = hermitian_to_real_vec(&a);
            let vb = hermitian_to_real_vec(&b);
            let direct = a.trace_product(&b).expect("dims");
            assert!(
                (va.dot(&vb) - direct).abs() < 1e-10,
                "coordinates broke the trace product"
            );
            let back = real_vec_to_hermitian(&va, 3);
            assert!((back.as_matrix() - a.as_matrix()).norm() < 1e-12);
        }
    }

    // -----------------------------------------------------------------------
    // Test fixtures
    // -----------------------------------------------------------------------

    /// Maximizes b·y subject to Σ_i y_i a_{ij} ≤ c_j and y ≥ 0 by vertex
    /// enumeration over the dual polyhedron, written independently of the
    /// primal path above.
    fn dual_lp_optimum_by_enumeration(inst: &PositiveSdpInstance) -> f64 {
        let m = inst.m();
        let nv = inst.n();
        let c = inst.c().diagonal_real();
        let cols: Vec<Vec<f64>> = inst.a().iter().map(|a| a.diagonal_real()).collect();
        let b = inst.b();
        // Constraint rows over y: nv rows "Σ_i y_i a_{ij} <= c_j" plus m
        // non-negativity rows.
        let mut best = f64::NEG_INFINITY;
        let mut scratch = vec![0usize; m];
        enumerate_combinations(nv + m, m, &mut scratch, 0, 0, &mut |chosen| {
            let mut system = DMatrix::<f64>::zeros(m, m);
            let mut target = DVector::<f64>::zeros(m);
            for (r, &pick) in chosen.iter().enumerate() {
                if pick < nv {
                    for i in 0..m {
                        system[(r, i)] = cols[i][pick];
                    }
                    target[r] = c[pick];
                } else {
                    system[(r, pick - nv)] = 1.0;
                    target[r] = 0.0;
                }
            }
            let Some(y) = system.lu().solve(&target) else {
                return;
            };
            let scale = 1.0 + y.amax();
            if y.iter().any(|&v| v < -1e-9 * scale) {
                return;
            }
            for j in 0..nv {
                let lhs: f64 = (0..m).map(|i| y[i] * cols[i][j]).sum();
                if lhs > c[j] + 1e-9 * (1.0 + c[j].abs() + lhs.abs()) {
                    return;
                }
            }
            let value: f64 = (0..m).map(|i| y[i] * b[i]).sum();
            best = best.max(value);
        });
        assert!(best.is_finite(), "dual polyhedron always contains y = 0");
        best
    }

    /// Direct discretized search over the 2x2 PSD cone for the two-constraint
    /// cross fixture: X = [[a, z], [z, b]] with the off-diagonal pushed to
    /// its PSD limit √(ab), which only helps the second constraint.
    fn cross_fixture_optimum_by_grid() -> f64 {
        let mut best = f64::INFINITY;
        let steps = 1500;
        for ia in 0..=steps {
            let a = 1.0 + 0.5 * ia as f64 / steps as f64;
            for ib in 0..=steps {
                let b = 0.5 * ib as f64 / steps as f64;
                let z = (a * b).sqrt();
                if a >= 1.0 && 0.5 * (a + b) + z >= 1.0 {
                    best = best.min(a + b);
                }
            }
        }
        best
    }

    fn random_hermitian(rng: &mut impl rand::Rng, n: usize) -> HermitianMatrix {
        let g = nalgebra::DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        HermitianMatrix::symmetrized(&g * g.adjoint()).expect("Hermitian")
    }
}
