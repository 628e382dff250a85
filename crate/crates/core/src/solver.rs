//! Width-free matrix multiplicative-weights solver for special-form positive
//! SDPs: min tr X s.t. tr(Â_i X) ≥ 1, X ⪰ 0, with every ‖Â_i‖ ≤ 1.
//!
//! The algorithm maintains a diagonal dual weight Y_t = exp(−Φ(X_t)) over the
//! m constraints and grows the primal X_t by multiples of spectral projectors
//! of Φ*(Y_t) = Σᵢ Y_t(i)·Â_i. A phase exponent k tracks ‖Φ*(Y_t)‖ on the
//! ladder (1+ε₀)^k; within each iteration a threshold exponent thr ≤ k is
//! lowered until the eigenvalue mass of Φ*(Y_t) stops growing by the factor
//! 1+2ε/5 per rung, and the update projector Π_t spans the eigenspaces above
//! (1+ε₀)^thr. The step size λ_t is chosen from a sorted prefix rule so that
//! both a heavy and a light fraction of the weighted constraint mass move by
//! a controlled amount. No instance-dependent width parameter enters any
//! bound.
//!
//! Per iteration exactly one eigendecomposition is performed (of Φ*(Y_t));
//! the norm, the eigenvalue masses, and Π_t are all read from it. Y_t is
//! kept as an m-vector and never materialized as a matrix.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::instance::{self, InstanceError, SpecialFormInstance};
use crate::spectra::{eigh, HermitianMatrix, Projector, SpectraError, SpectralDecomposition};

pub const CERTIFICATE_FORMAT: &str = "psdp-certificate/v1";

/// Default iteration safety cap. The theoretical iteration bound is
/// polylogarithmic but with enormous constants; desk-scale runs finish in
/// hundreds of iterations, so the cap only catches runaway inputs.
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// Relative slack for the per-iteration dual-norm bound
/// ‖Φ*(Y_t)‖ ≤ (1+ε₀)^thr·(1+ε₁).
const NORM_BOUND_SLACK: f64 = 1e-8;

/// Relative slack for the per-iteration trace decrease
/// tr Y_{t+1} ≤ tr Y_t − λ_t(1−4√ε)‖Φ*(Y_t)‖·tr Π_t.
const TRACE_DECREASE_SLACK: f64 = 1e-8;

/// Relative slack for the two weighted-mass conditions of the step-size rule.
const SPLIT_MASS_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("bad solver parameters: {message}")]
    BadParams { message: String },
    #[error("iteration cap {cap} exceeded before the stopping rule fired")]
    MaxIterationsExceeded {
        cap: usize,
        /// Records for all completed iterations, for post-mortem inspection.
        trace: Vec<IterationRecord>,
    },
    #[error("invariant check \"{check}\" failed at iteration {}", record.t)]
    InvariantViolation {
        check: String,
        record: Box<IterationRecord>,
    },
    #[error("threshold search from k = {start_k} exceeded its guaranteed bound of {bound} decrements")]
    ThrSearchOverrun { start_k: i64, bound: usize },
    #[error("update projector carries no weighted constraint mass")]
    DegenerateProjector,
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

fn bad_params(message: impl Into<String>) -> SolverError {
    SolverError::BadParams {
        message: message.into(),
    }
}

/// All run parameters, with the derived quantities precomputed once.
///
/// ln n is floored at 1 when deriving ε₀ and ε₁ so that tiny dimensions do
/// not inflate the tolerances past usefulness; the derivation below records
/// the effective value through the stored fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Target accuracy ε ∈ (0,1).
    pub epsilon: f64,
    /// Ladder base offset ε₀ = ε²/ln²n.
    pub epsilon0: f64,
    /// Norm-bound slack factor ε₁ = 3ε/ln n.
    pub epsilon1: f64,
    /// ε′ = ε₀/(1+ε₀), the relative eigenvalue drop of one ladder rung.
    pub eps_prime: f64,
    /// Stopping rule: iterate while tr Y_t > m^{−1/ε}.
    pub stop_threshold: f64,
    /// Projector split level 2√ε used by the step-size rule.
    pub projector_split: f64,
    /// Safety cap on iterations.
    pub max_iterations: usize,
    /// Abort the run if a per-iteration invariant check fails.
    pub assert_invariants: bool,
}

impl SolverParams {
    /// Derives all parameters for an n-dimensional instance with m
    /// constraints at accuracy epsilon.
    pub fn derive(epsilon: f64, n: usize, m: usize) -> Result<Self, SolverError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(bad_params(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if n < 2 {
            return Err(bad_params(format!("dimension must be at least 2, got {n}")));
        }
        if m < n {
            return Err(bad_params(format!("need m >= n, got m={m}, n={n}")));
        }
        let ln_eff = (n as f64).ln().max(1.0);
        let epsilon0 = epsilon * epsilon / (ln_eff * ln_eff);
        let params = Self {
            epsilon,
            epsilon0,
            epsilon1: 3.0 * epsilon / ln_eff,
            eps_prime: epsilon0 / (1.0 + epsilon0),
            stop_threshold: (m as f64).powf(-1.0 / epsilon),
            projector_split: 2.0 * epsilon.sqrt(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            assert_invariants: true,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn for_instance(inst: &SpecialFormInstance, epsilon: f64) -> Result<Self, SolverError> {
        Self::derive(epsilon, inst.n(), inst.m())
    }

    pub fn with_max_iterations(mut self, cap: usize) -> Self {
        self.max_iterations = cap;
        self
    }

    pub fn with_assert_invariants(mut self, on: bool) -> Self {
        self.assert_invariants = on;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(bad_params(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.epsilon0 > 0.0 && self.epsilon1 > 0.0) {
            return Err(bad_params("epsilon0 and epsilon1 must be positive"));
        }
        if !(self.stop_threshold > 0.0 && self.stop_threshold < 1.0) {
            return Err(bad_params(format!(
                "stop threshold must lie in (0, 1), got {} (epsilon too small for this m?)",
                self.stop_threshold
            )));
        }
        if self.max_iterations == 0 {
            return Err(bad_params("max_iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Mutable run state; one instance lives for the duration of a solve call.
///
/// Invariants maintained across iterations: `y_diag[i]` equals
/// `exp(-phi_x_diag[i])` (the diagonal of exp(−Φ(X_t))), `x` is a sum of
/// non-negative multiples of projectors and hence PSD, and `k` never
/// increases.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub t: usize,
    pub k: i64,
    pub thr: i64,
    pub x: HermitianMatrix,
    pub phi_x_diag: Vec<f64>,
    pub y_diag: Vec<f64>,
}

/// One row of the solve trace. All scalars are finite on every successful
/// run; the flags record the outcome of each named per-iteration check
/// whether or not the run was configured to abort on failure.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    pub k: i64,
    pub thr: i64,
    pub lambda_t: f64,
    pub tr_pi_t: f64,
    pub tr_y: f64,
    pub norm_phi_star_y: f64,
    pub ratio_tr_over_norm: f64,
    pub invariant_flags: BTreeMap<String, bool>,
}

/// Iteration count for one maximal run of a fixed phase exponent k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseCount {
    pub k: i64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Primal solution X* = X_{t_f}/α with min_i tr(Â_i X*) = 1 up to
    /// rounding.
    pub x_star: HermitianMatrix,
    /// Dual weights y* = Y_{t'}/‖Φ*(Y_{t'})‖ for the ratio-maximizing t'.
    pub y_star: Vec<f64>,
    /// Minimum of tr(Â_i X_{t_f}) over i; positive on termination.
    pub alpha: f64,
    /// tr X*.
    pub primal_value: f64,
    /// Σ y*_i.
    pub dual_value: f64,
    pub trace: Vec<IterationRecord>,
    pub phase_summary: Vec<PhaseCount>,
}

/// Φ(X): the m-vector of constraint traces tr(Â_i X).
pub fn phi(inst: &SpecialFormInstance, x: &HermitianMatrix) -> Result<Vec<f64>, SolverError> {
    inst.a_hat()
        .iter()
        .map(|a_i| a_i.trace_product(x).map_err(SolverError::from))
        .collect()
}

/// Φ*(y) = Σ y_i Â_i, the adjoint of Φ applied to a non-negative weight
/// vector. PSD whenever y ≥ 0.
pub fn phi_star(inst: &SpecialFormInstance, y: &[f64]) -> Result<HermitianMatrix, SolverError> {
    if y.len() != inst.m() {
        return Err(bad_params(format!(
            "weight vector has {} entries, instance has m = {}",
            y.len(),
            inst.m()
        )));
    }
    if let Some(bad) = y.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(bad_params(format!("weights must be finite and >= 0, got {bad}")));
    }
    Ok(weighted_constraint_sum(inst.a_hat(), y, inst.n()))
}

fn weighted_constraint_sum(a: &[HermitianMatrix], y: &[f64], n: usize) -> HermitianMatrix {
    let mut acc = HermitianMatrix::zeros(n);
    for (a_i, &w) in a.iter().zip(y) {
        if w != 0.0 {
            acc.add_assign_scaled(w, a_i)
                .expect("constraint dimensions agree with the accumulator");
        }
    }
    acc
}

/// (1+ε₀)^j evaluated in log space so that ladder rungs far from 0 stay
/// consistent with each other.
fn ladder_power(j: i64, ln_base: f64) -> f64 {
    (j as f64 * ln_base).exp()
}

/// Largest integer k with (1+ε₀)^k ≤ value, i.e. the bracketing
/// (1+ε₀)^k ≤ value < (1+ε₀)^{k+1}. Closed-form floor first, then a
/// verification loop settles the boundary against the actual ladder floats.
fn bracket_power(value: f64, ln_base: f64) -> i64 {
    let mut k = (value.ln() / ln_base).floor() as i64;
    while ladder_power(k, ln_base) > value {
        k -= 1;
    }
    while ladder_power(k + 1, ln_base) <= value {
        k += 1;
    }
    k
}

/// Starting phase exponent: k_s with (1+ε₀)^{k_s} ≤ ‖Φ*(𝟙)‖ < (1+ε₀)^{k_s+1},
/// where 𝟙 is the all-ones weight vector (Y₀ = I). The bracketing pins k_s
/// uniquely; on valid instances ‖Φ*(𝟙)‖ ≥ max_i ‖Â_i‖ = 1, so k_s ≥ 0.
pub fn initial_k(inst: &SpecialFormInstance, epsilon0: f64) -> Result<i64, SolverError> {
    if !(epsilon0 > 0.0) {
        return Err(bad_params(format!("epsilon0 must be positive, got {epsilon0}")));
    }
    let ones = vec![1.0; inst.m()];
    let op = phi_star(inst, &ones)?;
    let norm = eigh(&op)?.max_eigenvalue();
    Ok(bracket_power(norm, ln_base(epsilon0)))
}

fn ln_base(epsilon0: f64) -> f64 {
    epsilon0.ln_1p()
}

/// Lowers k until (1+ε₀)^k ≤ norm; never raises it. Equivalent to repeating
/// "if ‖Φ*(Y_t)‖ < (1+ε₀)^k then k ← k−1" one step at a time, including the
/// boundary convention that equality stops the descent.
pub fn descend_k(k: i64, norm: f64, epsilon0: f64) -> i64 {
    bracket_power(norm, ln_base(epsilon0)).min(k)
}

/// Threshold search: starting at thr' = k, decrement while the eigenvalue
/// mass N_l (the sum of eigenvalues at or above the rung) grows by at least
/// the factor 1+2ε/5 from one rung down. Each decrement certifies that
/// growth, and the mass tops out at n times the leading rung, so the loop is
/// bounded by ⌈ln n/ln(1+2ε/5)⌉; running past that bound means the masses
/// are numerically inconsistent.
pub fn find_thr(
    decomp: &SpectralDecomposition,
    k: i64,
    params: &SolverParams,
) -> Result<i64, SolverError> {
    let base = ln_base(params.epsilon0);
    let n = decomp.eigenvalues().len();
    let growth = 1.0 + 0.4 * params.epsilon;
    let bound = ((n as f64).ln() / (0.4 * params.epsilon).ln_1p()).ceil() as usize;
    let mut thr = k;
    let mut decrements = 0usize;
    loop {
        let mass_here = decomp.mass_at_least(ladder_power(thr, base));
        let mass_below = decomp.mass_at_least(ladder_power(thr - 1, base));
        if mass_below >= growth * mass_here {
            thr -= 1;
            decrements += 1;
            if decrements > bound {
                return Err(SolverError::ThrSearchOverrun { start_k: k, bound });
            }
        } else {
            return Ok(thr);
        }
    }
}

/// Outcome of the step-size rule.
#[derive(Debug, Clone)]
pub struct LambdaChoice {
    /// λ_t = 2√ε / tr(Â_{j_r} Π_t).
    pub lambda_t: f64,
    /// 1-based rank r of the pivot in the sorted order.
    pub r_index: usize,
    /// Constraint indices sorted by tr(Â_i Π_t) non-increasing, ties broken
    /// by ascending original index.
    pub order: Vec<usize>,
    /// tr(Â_i Π_t) per original constraint index.
    pub traces: Vec<f64>,
    /// Σ_i y_i·tr(Â_i Π_t), summed in sorted order.
    pub total_weighted: f64,
    /// tr(Â_{j_r} Π_t), the pivot trace.
    pub split_trace: f64,
}

/// Step-size rule: sort the projected constraint traces, take the smallest
/// prefix whose weighted mass reaches √ε of the total, and scale so the
/// pivot constraint moves by exactly 2√ε. The minimality of the prefix
/// makes the complementary suffix carry at least (1−√ε) of the total, so
/// both sides of the 2√ε split are guaranteed their share of mass.
pub fn select_lambda(
    inst: &SpecialFormInstance,
    y: &[f64],
    pi: &Projector,
    epsilon: f64,
) -> Result<LambdaChoice, SolverError> {
    if y.len() != inst.m() {
        return Err(bad_params(format!(
            "weight vector has {} entries, instance has m = {}",
            y.len(),
            inst.m()
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(bad_params(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let m = inst.m();
    let sqrt_eps = epsilon.sqrt();
    let traces = inst
        .a_hat()
        .iter()
        .map(|a_i| a_i.trace_product(pi.matrix()))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| traces[j].total_cmp(&traces[i]).then(i.cmp(&j)));
    let mut total_weighted = 0.0;
    for &j in &order {
        total_weighted += y[j] * traces[j];
    }
    if !(total_weighted > 0.0) {
        return Err(SolverError::DegenerateProjector);
    }
    let target = sqrt_eps * total_weighted;
    let mut cumulative = 0.0;
    let mut r_index = 0usize;
    let mut split_trace = 0.0;
    for (rank, &j) in order.iter().enumerate() {
        cumulative += y[j] * traces[j];
        if cumulative >= target {
            r_index = rank + 1;
            split_trace = traces[j];
            break;
        }
    }
    // √ε < 1 makes the full prefix reach the target, and the first crossing
    // has a strictly positive increment, so the pivot trace is positive.
    if r_index == 0 || !(split_trace > 0.0) {
        return Err(SolverError::DegenerateProjector);
    }
    Ok(LambdaChoice {
        lambda_t: 2.0 * sqrt_eps / split_trace,
        r_index,
        order,
        traces,
        total_weighted,
        split_trace,
    })
}

/// Runs the full algorithm on a special-form instance.
///
/// On success, X* satisfies every constraint within rounding, Φ*(y*) has
/// operator norm 1 by construction, and dual_value ≤ opt ≤ primal_value
/// sandwiches the optimum with primal/dual ratio at most 1+5√ε.
pub fn solve(inst: &SpecialFormInstance, params: &SolverParams) -> Result<SolveResult, SolverError> {
    params.validate()?;
    let n = inst.n();
    let m = inst.m();
    if n < 2 {
        return Err(bad_params(format!("dimension must be at least 2, got {n}")));
    }
    let a = inst.a_hat();
    let sqrt_eps = params.epsilon.sqrt();
    let base = ln_base(params.epsilon0);

    let mut state = SolverState {
        t: 0,
        k: initial_k(inst, params.epsilon0)?,
        thr: 0,
        x: HermitianMatrix::zeros(n),
        phi_x_diag: vec![0.0; m],
        y_diag: vec![1.0; m],
    };
    let mut tr_y = m as f64;
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut best_ratio = f64::NEG_INFINITY;
    let mut best_y: Vec<f64> = state.y_diag.clone();
    let mut best_norm = f64::NAN;

    loop {
        let phi_star_y = weighted_constraint_sum(a, &state.y_diag, n);
        let decomp = eigh(&phi_star_y)?;
        let norm = decomp.max_eigenvalue();
        if norm > 0.0 {
            // Track the dual candidate at every time step, including the
            // final one where the stopping rule fires.
            let ratio = tr_y / norm;
            if ratio > best_ratio {
                best_ratio = ratio;
                best_y.clone_from(&state.y_diag);
                best_norm = norm;
            }
        }
        if tr_y <= params.stop_threshold {
            break;
        }
        if norm <= 0.0 {
            return Err(SolverError::DegenerateProjector);
        }
        if state.t >= params.max_iterations {
            return Err(SolverError::MaxIterationsExceeded {
                cap: params.max_iterations,
                trace,
            });
        }

        state.k = descend_k(state.k, norm, params.epsilon0);
        state.thr = find_thr(&decomp, state.k, params)?;
        let pi = decomp.projector_at_least(ladder_power(state.thr, base));
        let choice = select_lambda(inst, &state.y_diag, &pi, params.epsilon)?;
        let tr_pi = pi.trace();

        // Named per-iteration checks. Flags are recorded unconditionally so
        // that a run with assertions off produces the identical trace.
        let mut flags = BTreeMap::new();
        let norm_limit = ladder_power(state.thr, base) * (1.0 + params.epsilon1);
        flags.insert(
            "norm_bound".to_string(),
            norm <= norm_limit * (1.0 + NORM_BOUND_SLACK),
        );
        let mut heavy_mass = 0.0;
        let mut light_mass = 0.0;
        for i in 0..m {
            let w = state.y_diag[i] * choice.traces[i];
            // The pivot sits in both sides: the split level 2√ε is reached
            // with equality there.
            if choice.traces[i] >= choice.split_trace {
                heavy_mass += w;
            }
            if choice.traces[i] <= choice.split_trace {
                light_mass += w;
            }
        }
        let total = choice.total_weighted;
        flags.insert(
            "split_mass_heavy".to_string(),
            heavy_mass >= (sqrt_eps - SPLIT_MASS_SLACK) * total,
        );
        flags.insert(
            "split_mass_light".to_string(),
            light_mass >= (1.0 - sqrt_eps - SPLIT_MASS_SLACK) * total,
        );

        state.x.add_assign_scaled(choice.lambda_t, pi.matrix())?;
        let mut tr_y_next = 0.0;
        for i in 0..m {
            state.phi_x_diag[i] += choice.lambda_t * choice.traces[i];
            state.y_diag[i] = (-state.phi_x_diag[i]).exp();
            tr_y_next += state.y_diag[i];
        }
        let decrease_floor =
            tr_y - choice.lambda_t * (1.0 - 4.0 * sqrt_eps) * norm * tr_pi;
        flags.insert(
            "trace_decrease".to_string(),
            tr_y_next <= decrease_floor + TRACE_DECREASE_SLACK * tr_y,
        );

        let record = IterationRecord {
            t: state.t,
            k: state.k,
            thr: state.thr,
            lambda_t: choice.lambda_t,
            tr_pi_t: tr_pi,
            tr_y,
            norm_phi_star_y: norm,
            ratio_tr_over_norm: tr_y / norm,
            invariant_flags: flags,
        };
        if params.assert_invariants {
            if let Some((check, _)) = record.invariant_flags.iter().find(|(_, ok)| !**ok) {
                let check = check.clone();
                return Err(SolverError::InvariantViolation {
                    check,
                    record: Box::new(record),
                });
            }
        }
        trace.push(record);
        tr_y = tr_y_next;
        state.t += 1;
    }

    // alpha is recomputed from the materialized accumulator, not the running
    // diagonal, so the output feasibility claim rests on X itself.
    let mut alpha = f64::INFINITY;
    for a_i in a {
        alpha = alpha.min(a_i.trace_product(&state.x)?);
    }
    assert!(
        alpha > 0.0,
        "termination forces every constraint trace above ln(m)/epsilon, got {alpha}"
    );
    let x_star = state.x.scaled(1.0 / alpha);
    assert!(
        best_norm.is_finite() && best_norm > 0.0,
        "ratio tracking saw at least the t = 0 candidate"
    );
    let y_star: Vec<f64> = best_y.iter().map(|w| w / best_norm).collect();
    let primal_value = x_star.trace();
    let dual_value = y_star.iter().sum();

    let mut phase_summary: Vec<PhaseCount> = Vec::new();
    for record in &trace {
        match phase_summary.last_mut() {
            Some(phase) if phase.k == record.k => phase.count += 1,
            _ => phase_summary.push(PhaseCount {
                k: record.k,
                count: 1,
            }),
        }
    }

    Ok(SolveResult {
        x_star,
        y_star,
        alpha,
        primal_value,
        dual_value,
        trace,
        phase_summary,
    })
}

// ---------------------------------------------------------------------------
// Certificate serialization
// ---------------------------------------------------------------------------

/// Solve outcome in file form, as exchanged with the verifier.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub epsilon: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap_ratio: f64,
    pub alpha: f64,
    pub x_star: HermitianMatrix,
    pub y_star: Vec<f64>,
    pub iterations: usize,
    pub phases: Vec<PhaseCount>,
    pub invariants_checked: bool,
    pub trace: Option<Vec<IterationRecord>>,
}

impl Certificate {
    pub fn from_result(result: &SolveResult, params: &SolverParams, include_trace: bool) -> Self {
        Self {
            epsilon: params.epsilon,
            primal_value: result.primal_value,
            dual_value: result.dual_value,
            gap_ratio: result.primal_value / result.dual_value,
            alpha: result.alpha,
            x_star: result.x_star.clone(),
            y_star: result.y_star.clone(),
            iterations: result.trace.len(),
            phases: result.phase_summary.clone(),
            invariants_checked: params.assert_invariants,
            trace: include_trace.then(|| result.trace.clone()),
        }
    }
}

pub fn certificate_to_json_string(cert: &Certificate) -> String {
    let mut obj = Map::new();
    obj.insert("format".into(), json!(CERTIFICATE_FORMAT));
    obj.insert("epsilon".into(), instance::float_to_json(cert.epsilon));
    obj.insert(
        "primal_value".into(),
        instance::float_to_json(cert.primal_value),
    );
    obj.insert(
        "dual_value".into(),
        instance::float_to_json(cert.dual_value),
    );
    obj.insert("gap_ratio".into(), instance::float_to_json(cert.gap_ratio));
    obj.insert("alpha".into(), instance::float_to_json(cert.alpha));
    obj.insert("X_star".into(), instance::matrix_to_json(&cert.x_star));
    obj.insert(
        "y_star".into(),
        Value::Array(cert.y_star.iter().map(|&v| instance::float_to_json(v)).collect()),
    );
    obj.insert("iterations".into(), json!(cert.iterations));
    obj.insert(
        "phases".into(),
        Value::Array(
            cert.phases
                .iter()
                .map(|p| json!({"k": p.k, "count": p.count}))
                .collect(),
        ),
    );
    obj.insert("invariants_checked".into(), json!(cert.invariants_checked));
    if let Some(trace) = &cert.trace {
        obj.insert(
            "trace".into(),
            Value::Array(trace.iter().map(record_to_json).collect()),
        );
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(obj))
        .expect("certificate values are finite");
    text.push('\n');
    text
}

fn record_to_json(record: &IterationRecord) -> Value {
    let mut obj = Map::new();
    obj.insert("t".into(), json!(record.t));
    obj.insert("k".into(), json!(record.k));
    obj.insert("thr".into(), json!(record.thr));
    obj.insert("lambda_t".into(), instance::float_to_json(record.lambda_t));
    obj.insert("tr_pi_t".into(), instance::float_to_json(record.tr_pi_t));
    obj.insert("tr_y".into(), instance::float_to_json(record.tr_y));
    obj.insert(
        "norm_phi_star_y".into(),
        instance::float_to_json(record.norm_phi_star_y),
    );
    obj.insert(
        "ratio_tr_over_norm".into(),
        instance::float_to_json(record.ratio_tr_over_norm),
    );
    let flags: Map<String, Value> = record
        .invariant_flags
        .iter()
        .map(|(name, ok)| (name.clone(), Value::Bool(*ok)))
        .collect();
    obj.insert("invariant_flags".into(), Value::Object(flags));
    Value::Object(obj)
}

pub fn write_certificate(cert: &Certificate, path: &Path) -> Result<(), InstanceError> {
    fs::write(path, certificate_to_json_string(cert))?;
    Ok(())
}

pub fn read_certificate(path: &Path) -> Result<Certificate, InstanceError> {
    let text = fs::read_to_string(path)?;
    certificate_from_json_str(&text)
}

pub fn certificate_from_json_str(text: &str) -> Result<Certificate, InstanceError> {
    let value: Value = serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| InstanceError::Parse("top level must be a JSON object".into()))?;
    let format = obj
        .get("format")
        .and_then(Value::as_str)
        .ok_or_else(|| InstanceError::Parse("missing string field \"format\"".into()))?;
    if format != CERTIFICATE_FORMAT {
        return Err(InstanceError::Parse(format!(
            "unsupported format \"{format}\", expected \"{CERTIFICATE_FORMAT}\""
        )));
    }
    let number = |key: &str| -> Result<f64, InstanceError> {
        obj.get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| InstanceError::Parse(format!("missing numeric field \"{key}\"")))
    };
    let x_star_raw = obj
        .get("X_star")
        .ok_or_else(|| InstanceError::Parse("missing field \"X_star\"".into()))?;
    let x_star_mat = instance::complex_matrix_from_json(x_star_raw, "X_star")?;
    if x_star_mat.nrows() != x_star_mat.ncols() {
        return Err(InstanceError::Parse("X_star must be square".into()));
    }
    let x_star = HermitianMatrix::symmetrized(x_star_mat)
        .map_err(|e| InstanceError::Parse(format!("X_star: {e}")))?;
    let y_star = obj
        .get("y_star")
        .and_then(Value::as_array)
        .ok_or_else(|| InstanceError::Parse("missing array field \"y_star\"".into()))?
        .iter()
        .map(|v| {
            v.as_f64()
                .ok_or_else(|| InstanceError::Parse("y_star entries must be numbers".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let iterations = obj
        .get("iterations")
        .and_then(Value::as_u64)
        .ok_or_else(|| InstanceError::Parse("missing integer field \"iterations\"".into()))?
        as usize;
    let phases = obj
        .get("phases")
        .and_then(Value::as_array)
        .ok_or_else(|| InstanceError::Parse("missing array field \"phases\"".into()))?
        .iter()
        .map(|p| {
            let k = p.get("k").and_then(Value::as_i64);
            let count = p.get("count").and_then(Value::as_u64);
            match (k, count) {
                (Some(k), Some(count)) => Ok(PhaseCount {
                    k,
                    count: count as usize,
                }),
                _ => Err(InstanceError::Parse(
                    "phase entries need integer \"k\" and \"count\"".into(),
                )),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let invariants_checked = obj
        .get("invariants_checked")
        .and_then(Value::as_bool)
        .ok_or_else(|| InstanceError::Parse("missing boolean field \"invariants_checked\"".into()))?;
    let trace = match obj.get("trace") {
        None => None,
        Some(raw) => {
            let rows = raw
                .as_array()
                .ok_or_else(|| InstanceError::Parse("\"trace\" must be an array".into()))?;
            Some(
                rows.iter()
                    .map(record_from_json)
                    .collect::<Result<Vec<_>, _>>()?,
            )
        }
    };
    Ok(Certificate {
        epsilon: number("epsilon")?,
        primal_value: number("primal_value")?,
        dual_value: number("dual_value")?,
        gap_ratio: number("gap_ratio")?,
        alpha: number("alpha")?,
        x_star,
        y_star,
        iterations,
        phases,
        invariants_checked,
        trace,
    })
}

fn record_from_json(value: &Value) -> Result<IterationRecord, InstanceError> {
    let obj = value
        .as_object()
        .ok_or_else(|| InstanceError::Parse("trace rows must be objects".into()))?;
    let number = |key: &str| -> Result<f64, InstanceError> {
        obj.get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| InstanceError::Parse(format!("trace row missing numeric \"{key}\"")))
    };
    let integer = |key: &str| -> Result<i64, InstanceError> {
        obj.get(key)
            .and_then(Value::as_i64)
            .ok_or_else(|| InstanceError::Parse(format!("trace row missing integer \"{key}\"")))
    };
    let mut invariant_flags = BTreeMap::new();
    if let Some(flags) = obj.get("invariant_flags").and_then(Value::as_object) {
        for (name, flag) in flags {
            let ok = flag.as_bool().ok_or_else(|| {
                InstanceError::Parse(format!("invariant flag \"{name}\" must be a boolean"))
            })?;
            invariant_flags.insert(name.clone(), ok);
        }
    }
    Ok(IterationRecord {
        t: integer("t")? as usize,
        k: integer("k")?,
        thr: integer("thr")?,
        lambda_t: number("lambda_t")?,
        tr_pi_t: number("tr_pi_t")?,
        tr_y: number("tr_y")?,
        norm_phi_star_y: number("norm_phi_star_y")?,
        ratio_tr_over_norm: number("ratio_tr_over_norm")?,
        invariant_flags,
    })
}
