//! Problem data model, JSON instance format, and seeded test generators.
//!
//! Two instance shapes exist. The general form carries an objective matrix C,
//! constraint matrices A_i, and right-hand sides b_i, all PSD / non-negative.
//! The special form is the normalized shape the iteration consumes: objective
//! tr X, every right-hand side 1, max_i ‖Â_i‖ = 1, and every nonzero
//! eigenvalue of every Â_i bounded below by 1/γ.
//!
//! File format "psdp-instance/v1" (JSON): complex entries serialize as
//! `[re, im]` pairs, real entries may be bare numbers, and the numeric
//! payload round-trips bit-exactly.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::spectra::{self, eigh, HermitianMatrix, SpectraError};

pub const INSTANCE_FORMAT: &str = "psdp-instance/v1";

/// Absolute slack allowed on the special-form norm and eigenvalue-floor
/// checks (constraint matrices are normalized to unit scale).
pub const SPECIAL_FORM_TOL: f64 = 1e-9;

/// Absolute feasibility tolerance for special-form constraints. Right-hand
/// sides are normalized to 1, so an absolute tolerance is appropriate.
pub const SPECIAL_FEAS_TOL: f64 = 1e-7;

/// Eigenvalue range the generators clamp constraint matrices into, keeping
/// desk-scale instances clear of the reduction's clipping path.
pub const GEN_EIG_FLOOR: f64 = 1e-3;
pub const GEN_EIG_CEIL: f64 = 2.0;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error at {field}: {message}")]
    Validation { field: String, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl InstanceError {
    fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        InstanceError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    General,
    Special,
}

impl InstanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InstanceKind::General => "general",
            InstanceKind::Special => "special",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMetadata {
    pub name: String,
    pub kind: InstanceKind,
    pub seed: Option<u64>,
    pub provenance: Option<String>,
}

impl InstanceMetadata {
    pub fn general(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: InstanceKind::General,
            seed: None,
            provenance: None,
        }
    }

    pub fn special(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: InstanceKind::Special,
            seed: None,
            provenance: None,
        }
    }
}

/// General-form positive SDP: minimize tr(C X) subject to tr(A_i X) ≥ b_i
/// and X ⪰ 0, with C and all A_i PSD and all b_i ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveSdpInstance {
    n: usize,
    m: usize,
    c: HermitianMatrix,
    a: Vec<HermitianMatrix>,
    b: Vec<f64>,
    metadata: InstanceMetadata,
}

impl PositiveSdpInstance {
    pub fn new(
        c: HermitianMatrix,
        a: Vec<HermitianMatrix>,
        b: Vec<f64>,
        metadata: InstanceMetadata,
    ) -> Result<Self, InstanceError> {
        let n = c.dim();
        let m = a.len();
        if m == 0 {
            return Err(InstanceError::validation("A", "at least one constraint required"));
        }
        if b.len() != m {
            return Err(InstanceError::validation(
                "b",
                format!("expected {m} entries matching A, got {}", b.len()),
            ));
        }
        if metadata.kind != InstanceKind::General {
            return Err(InstanceError::validation(
                "metadata.kind",
                "general instance requires kind \"general\"",
            ));
        }
        check_psd(&c, "C")?;
        for (i, a_i) in a.iter().enumerate() {
            if a_i.dim() != n {
                return Err(InstanceError::validation(
                    format!("A[{i}]"),
                    format!("dimension {} does not match C dimension {n}", a_i.dim()),
                ));
            }
            check_psd(a_i, &format!("A[{i}]"))?;
        }
        for (i, &b_i) in b.iter().enumerate() {
            if !b_i.is_finite() {
                return Err(InstanceError::validation(format!("b[{i}]"), "non-finite value"));
            }
            if b_i < 0.0 {
                return Err(InstanceError::validation(
                    format!("b[{i}]"),
                    format!("negative value {b_i}"),
                ));
            }
        }
        Ok(Self { n, m, c, a, b, metadata })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn c(&self) -> &HermitianMatrix {
        &self.c
    }

    pub fn a(&self) -> &[HermitianMatrix] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn metadata(&self) -> &InstanceMetadata {
        &self.metadata
    }
}

/// Special-form positive SDP: minimize tr X subject to tr(Â_i X) ≥ 1 and
/// X ⪰ 0, with max_i ‖Â_i‖ = 1 and nonzero eigenvalues bounded below by 1/γ.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecialFormInstance {
    n: usize,
    m: usize,
    a_hat: Vec<HermitianMatrix>,
    gamma: f64,
    metadata: InstanceMetadata,
}

impl SpecialFormInstance {
    pub fn new(
        a_hat: Vec<HermitianMatrix>,
        gamma: f64,
        metadata: InstanceMetadata,
    ) -> Result<Self, InstanceError> {
        let m = a_hat.len();
        if m == 0 {
            return Err(InstanceError::validation("A", "at least one constraint required"));
        }
        let n = a_hat[0].dim();
        if m < n {
            return Err(InstanceError::validation(
                "A",
                format!("special form requires m >= n, got m={m}, n={n}"),
            ));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(InstanceError::validation("gamma", "must be finite and positive"));
        }
        if metadata.kind != InstanceKind::Special {
            return Err(InstanceError::validation(
                "metadata.kind",
                "special instance requires kind \"special\"",
            ));
        }
        let floor = 1.0 / gamma - SPECIAL_FORM_TOL;
        let mut max_norm: f64 = 0.0;
        for (i, a_i) in a_hat.iter().enumerate() {
            let field = format!("A[{i}]");
            if a_i.dim() != n {
                return Err(InstanceError::validation(
                    field,
                    format!("dimension {} does not match A[0] dimension {n}", a_i.dim()),
                ));
            }
            check_psd(a_i, &field)?;
            let decomposition = eigh(a_i).map_err(|e| spectra_error(&field, e))?;
            let norm = decomposition.spectral_norm();
            if norm > 1.0 + SPECIAL_FORM_TOL {
                return Err(InstanceError::validation(
                    field,
                    format!("operator norm {norm} exceeds 1"),
                ));
            }
            max_norm = max_norm.max(norm);
            if norm < floor {
                // A constraint matrix with no spectral mass cannot reach
                // tr(A X) >= 1 for any X with bounded trace.
                return Err(InstanceError::validation(
                    field,
                    format!("operator norm {norm} below floor 1/gamma = {}", 1.0 / gamma),
                ));
            }
            let zero_floor = spectra::psd_tol(norm);
            for &lambda in decomposition.eigenvalues() {
                if lambda > zero_floor && lambda < floor {
                    return Err(InstanceError::validation(
                        field,
                        format!("nonzero eigenvalue {lambda} below floor 1/gamma = {}", 1.0 / gamma),
                    ));
                }
            }
        }
        if max_norm < 1.0 - SPECIAL_FORM_TOL {
            return Err(InstanceError::validation(
                "A",
                format!("no constraint attains operator norm 1 (max is {max_norm})"),
            ));
        }
        Ok(Self { n, m, a_hat, gamma, metadata })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn a_hat(&self) -> &[HermitianMatrix] {
        &self.a_hat
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn metadata(&self) -> &InstanceMetadata {
        &self.metadata
    }
}

/// Either instance shape, as stored in a "psdp-instance/v1" file.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    General(PositiveSdpInstance),
    Special(SpecialFormInstance),
}

impl Instance {
    pub fn kind(&self) -> InstanceKind {
        match self {
            Instance::General(_) => InstanceKind::General,
            Instance::Special(_) => InstanceKind::Special,
        }
    }

    pub fn metadata(&self) -> &InstanceMetadata {
        match self {
            Instance::General(inst) => inst.metadata(),
            Instance::Special(inst) => inst.metadata(),
        }
    }
}

fn check_psd(matrix: &HermitianMatrix, field: &str) -> Result<(), InstanceError> {
    let decomposition = eigh(matrix).map_err(|e| spectra_error(field, e))?;
    let min = decomposition.min_eigenvalue();
    let tol = spectra::psd_tol(decomposition.spectral_norm());
    if min < -tol {
        return Err(InstanceError::validation(
            field,
            format!("not PSD (smallest eigenvalue {min})"),
        ));
    }
    Ok(())
}

fn spectra_error(field: &str, err: SpectraError) -> InstanceError {
    InstanceError::validation(field, err.to_string())
}

// ---------------------------------------------------------------------------
// JSON reading and writing
// ---------------------------------------------------------------------------

pub fn read_instance(path: &Path) -> Result<Instance, InstanceError> {
    let text = fs::read_to_string(path)?;
    read_instance_str(&text)
}

pub fn read_instance_str(text: &str) -> Result<Instance, InstanceError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| InstanceError::Parse("top level must be a JSON object".into()))?;

    let format = require_str(obj, "format")?;
    if format != INSTANCE_FORMAT {
        return Err(InstanceError::Parse(format!(
            "unsupported format \"{format}\", expected \"{INSTANCE_FORMAT}\""
        )));
    }
    let kind = match require_str(obj, "kind")? {
        "general" => InstanceKind::General,
        "special" => InstanceKind::Special,
        other => {
            return Err(InstanceError::Parse(format!(
                "unknown kind \"{other}\", expected \"general\" or \"special\""
            )))
        }
    };
    let n = require_usize(obj, "n")?;
    let m = require_usize(obj, "m")?;

    let a_value = obj
        .get("A")
        .ok_or_else(|| InstanceError::Parse("missing field \"A\"".into()))?;
    let a_rows = a_value
        .as_array()
        .ok_or_else(|| InstanceError::Parse("field \"A\" must be an array of matrices".into()))?;
    if a_rows.len() != m {
        return Err(InstanceError::validation(
            "A",
            format!("expected {m} matrices, got {}", a_rows.len()),
        ));
    }
    let mut a = Vec::with_capacity(m);
    for (i, matrix) in a_rows.iter().enumerate() {
        a.push(matrix_from_json(matrix, &format!("A[{i}]"), n)?);
    }

    let metadata_seed = obj.get("metadata").and_then(|meta| meta.as_object());
    let metadata = {
        let name = metadata_seed
            .and_then(|meta| meta.get("name"))
            .and_then(Value::as_str)
            .unwrap_or("unnamed")
            .to_string();
        let seed = metadata_seed
            .and_then(|meta| meta.get("seed"))
            .and_then(Value::as_u64);
        let provenance = metadata_seed
            .and_then(|meta| meta.get("provenance"))
            .and_then(Value::as_str)
            .map(str::to_string);
        InstanceMetadata { name, kind, seed, provenance }
    };

    match kind {
        InstanceKind::General => {
            let c_value = obj
                .get("C")
                .ok_or_else(|| InstanceError::Parse("missing field \"C\" for general kind".into()))?;
            let c = matrix_from_json(c_value, "C", n)?;
            let b_value = obj
                .get("b")
                .ok_or_else(|| InstanceError::Parse("missing field \"b\" for general kind".into()))?;
            let b_rows = b_value
                .as_array()
                .ok_or_else(|| InstanceError::Parse("field \"b\" must be an array".into()))?;
            let mut b = Vec::with_capacity(b_rows.len());
            for (i, entry) in b_rows.iter().enumerate() {
                b.push(entry.as_f64().ok_or_else(|| {
                    InstanceError::validation(format!("b[{i}]"), "must be a number")
                })?);
            }
            Ok(Instance::General(PositiveSdpInstance::new(c, a, b, metadata)?))
        }
        InstanceKind::Special => {
            let gamma = obj
                .get("gamma")
                .and_then(Value::as_f64)
                .ok_or_else(|| InstanceError::Parse("missing numeric field \"gamma\" for special kind".into()))?;
            Ok(Instance::Special(SpecialFormInstance::new(a, gamma, metadata)?))
        }
    }
}

pub fn write_instance(instance: &Instance, path: &Path) -> Result<(), InstanceError> {
    fs::write(path, instance_to_json_string(instance))?;
    Ok(())
}

/// Canonical serialization: fixed key order, shortest round-trip floats,
/// two-space indentation, trailing newline. Identical instances serialize to
/// identical bytes.
pub fn instance_to_json_string(instance: &Instance) -> String {
    let mut obj = Map::new();
    obj.insert("format".into(), json!(INSTANCE_FORMAT));
    obj.insert("kind".into(), json!(instance.kind().as_str()));
    match instance {
        Instance::General(inst) => {
            obj.insert("n".into(), json!(inst.n()));
            obj.insert("m".into(), json!(inst.m()));
            obj.insert("C".into(), matrix_to_json(inst.c()));
            obj.insert(
                "A".into(),
                Value::Array(inst.a().iter().map(matrix_to_json).collect()),
            );
            obj.insert(
                "b".into(),
                Value::Array(inst.b().iter().map(|&x| float_to_json(x)).collect()),
            );
            obj.insert("metadata".into(), metadata_to_json(inst.metadata()));
        }
        Instance::Special(inst) => {
            obj.insert("n".into(), json!(inst.n()));
            obj.insert("m".into(), json!(inst.m()));
            obj.insert(
                "A".into(),
                Value::Array(inst.a_hat().iter().map(matrix_to_json).collect()),
            );
            obj.insert("gamma".into(), float_to_json(inst.gamma()));
            obj.insert("metadata".into(), metadata_to_json(inst.metadata()));
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(obj))
        .expect("instance JSON has no non-finite numbers");
    text.push('\n');
    text
}

fn metadata_to_json(metadata: &InstanceMetadata) -> Value {
    let mut obj = Map::new();
    obj.insert("name".into(), json!(metadata.name));
    if let Some(seed) = metadata.seed {
        obj.insert("seed".into(), json!(seed));
    }
    if let Some(provenance) = &metadata.provenance {
        obj.insert("provenance".into(), json!(provenance));
    }
    Value::Object(obj)
}

pub(crate) fn float_to_json(x: f64) -> Value {
    Value::Number(serde_json::Number::from_f64(x).expect("finite float"))
}

/// A complex entry serializes as a bare number when the imaginary part is
/// bitwise +0.0, otherwise as an `[re, im]` pair.
fn entry_to_json(value: Complex64) -> Value {
    if value.im.to_bits() == 0 {
        float_to_json(value.re)
    } else {
        Value::Array(vec![float_to_json(value.re), float_to_json(value.im)])
    }
}

pub(crate) fn matrix_to_json(matrix: &HermitianMatrix) -> Value {
    complex_matrix_to_json(matrix.as_matrix())
}

pub(crate) fn complex_matrix_to_json(matrix: &nalgebra::DMatrix<Complex64>) -> Value {
    let mut rows = Vec::with_capacity(matrix.nrows());
    for i in 0..matrix.nrows() {
        let mut row = Vec::with_capacity(matrix.ncols());
        for j in 0..matrix.ncols() {
            row.push(entry_to_json(matrix[(i, j)]));
        }
        rows.push(Value::Array(row));
    }
    Value::Array(rows)
}

pub(crate) fn complex_matrix_from_json(
    value: &Value,
    field: &str,
) -> Result<nalgebra::DMatrix<Complex64>, InstanceError> {
    let rows = value
        .as_array()
        .ok_or_else(|| InstanceError::validation(field, "matrix must be an array of rows"))?;
    if rows.is_empty() {
        return Err(InstanceError::validation(field, "matrix must have at least one row"));
    }
    let mut entries: Vec<Complex64> = Vec::new();
    let mut ncols = None;
    for (i, row) in rows.iter().enumerate() {
        let cells = row.as_array().ok_or_else(|| {
            InstanceError::validation(format!("{field}[{i}]"), "row must be an array")
        })?;
        match ncols {
            None => ncols = Some(cells.len()),
            Some(expected) if cells.len() != expected => {
                return Err(InstanceError::validation(
                    format!("{field}[{i}]"),
                    format!("expected {expected} columns, got {}", cells.len()),
                ));
            }
            _ => {}
        }
        for (j, cell) in cells.iter().enumerate() {
            entries.push(entry_from_json(cell, &format!("{field}[{i}][{j}]"))?);
        }
    }
    let ncols = ncols.expect("at least one row");
    if ncols == 0 {
        return Err(InstanceError::validation(field, "matrix rows must be non-empty"));
    }
    Ok(nalgebra::DMatrix::from_row_slice(rows.len(), ncols, &entries))
}

fn require_str<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a str, InstanceError> {
    obj.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| InstanceError::Parse(format!("missing string field \"{key}\"")))
}

fn require_usize(obj: &Map<String, Value>, key: &str) -> Result<usize, InstanceError> {
    let value = obj
        .get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| InstanceError::Parse(format!("missing non-negative integer field \"{key}\"")))?;
    Ok(value as usize)
}

fn entry_from_json(value: &Value, field: &str) -> Result<Complex64, InstanceError> {
    match value {
        Value::Number(number) => {
            let re = number
                .as_f64()
                .ok_or_else(|| InstanceError::validation(field, "number out of f64 range"))?;
            Ok(Complex64::new(re, 0.0))
        }
        Value::Array(pair) if pair.len() == 2 => {
            let re = pair[0]
                .as_f64()
                .ok_or_else(|| InstanceError::validation(field, "real part must be a number"))?;
            let im = pair[1]
                .as_f64()
                .ok_or_else(|| InstanceError::validation(field, "imaginary part must be a number"))?;
            Ok(Complex64::new(re, im))
        }
        _ => Err(InstanceError::validation(
            field,
            "entry must be a number or a [re, im] pair",
        )),
    }
}

pub(crate) fn matrix_from_json(
    value: &Value,
    field: &str,
    expected_dim: usize,
) -> Result<HermitianMatrix, InstanceError> {
    let rows = value
        .as_array()
        .ok_or_else(|| InstanceError::validation(field, "matrix must be an array of rows"))?;
    if rows.len() != expected_dim {
        return Err(InstanceError::validation(
            field,
            format!("expected {expected_dim} rows, got {}", rows.len()),
        ));
    }
    let mut entries = Vec::with_capacity(expected_dim * expected_dim);
    for (i, row) in rows.iter().enumerate() {
        let cells = row.as_array().ok_or_else(|| {
            InstanceError::validation(format!("{field}[{i}]"), "row must be an array")
        })?;
        if cells.len() != expected_dim {
            return Err(InstanceError::validation(
                format!("{field}[{i}]"),
                format!("expected {expected_dim} columns, got {}", cells.len()),
            ));
        }
        for (j, cell) in cells.iter().enumerate() {
            entries.push(entry_from_json(cell, &format!("{field}[{i}][{j}]"))?);
        }
    }
    HermitianMatrix::from_entries(expected_dim, &entries)
        .map_err(|e| spectra_error(field, e))
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Diagonal (pairwise-commuting) instance: C and A_i diagonal with entries
/// uniform on [0.1, 2], b uniform on [0.5, 2]. Deterministic per seed.
pub fn gen_diagonal(n: usize, m: usize, seed: u64) -> PositiveSdpInstance {
    assert!(n >= 1 && m >= 1, "dimensions must be at least 1");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let diag = |rng: &mut ChaCha20Rng| -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(0.1..2.0)).collect()
    };
    let c = HermitianMatrix::from_diagonal(&diag(&mut rng));
    let a: Vec<HermitianMatrix> = (0..m)
        .map(|_| HermitianMatrix::from_diagonal(&diag(&mut rng)))
        .collect();
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..2.0)).collect();
    let metadata = InstanceMetadata {
        name: format!("diag-n{n}-m{m}-s{seed}"),
        kind: InstanceKind::General,
        seed: Some(seed),
        provenance: Some("gen_diagonal".into()),
    };
    PositiveSdpInstance::new(c, a, b, metadata).expect("generated diagonal instance is valid")
}

/// Rank profile for [`gen_random_psd`] constraint matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankProfile {
    Full,
    Low(usize),
}

/// Dense random instance: A_i = G_i·G_i† from seeded Gaussians with spectrum
/// clamped into [[`GEN_EIG_FLOOR`], [`GEN_EIG_CEIL`]] on the intended rank;
/// C = G·G† + 0.1·I so it is strictly positive definite. b uniform on
/// [0.5, 2]. Deterministic per seed.
pub fn gen_random_psd(n: usize, m: usize, seed: u64, rank_profile: RankProfile) -> PositiveSdpInstance {
    assert!(n >= 1 && m >= 1, "dimensions must be at least 1");
    let rank = match rank_profile {
        RankProfile::Full => n,
        RankProfile::Low(r) => r.clamp(1, n),
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    let c = {
        let g = gaussian_matrix(n, n, &mut rng);
        let product = &g * g.adjoint();
        let raw = HermitianMatrix::symmetrized(product).expect("finite product");
        let norm = raw.spectral_norm().expect("decomposable");
        let scale = if norm > GEN_EIG_CEIL - 0.1 {
            (GEN_EIG_CEIL - 0.1) / norm
        } else {
            1.0
        };
        raw.scaled(scale)
            .add(&HermitianMatrix::identity(n).scaled(0.1))
            .expect("same dimension")
    };

    let a: Vec<HermitianMatrix> = (0..m)
        .map(|_| {
            let g = gaussian_matrix(n, rank, &mut rng);
            let product = &g * g.adjoint();
            let raw = HermitianMatrix::symmetrized(product).expect("finite product");
            clamp_spectrum(&raw, rank)
        })
        .collect();
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..2.0)).collect();

    let rank_tag = match rank_profile {
        RankProfile::Full => "full".to_string(),
        RankProfile::Low(r) => format!("low{r}"),
    };
    let metadata = InstanceMetadata {
        name: format!("rand-n{n}-m{m}-s{seed}-{rank_tag}"),
        kind: InstanceKind::General,
        seed: Some(seed),
        provenance: Some("gen_random_psd".into()),
    };
    PositiveSdpInstance::new(c, a, b, metadata).expect("generated random instance is valid")
}

/// Known-optimum fixture: every Â_i = I_n, so the special-form optimum is
/// exactly 1 (primal: tr X ≥ 1; dual: Σ y_i·I ⪯ I forces Σ y_i ≤ 1).
pub fn gen_identity(n: usize, m: usize) -> SpecialFormInstance {
    assert!(m >= n && n >= 1, "special form requires m >= n >= 1");
    let a_hat = vec![HermitianMatrix::identity(n); m];
    let metadata = InstanceMetadata {
        name: format!("identity-n{n}-m{m}"),
        kind: InstanceKind::Special,
        seed: None,
        provenance: Some("gen_identity".into()),
    };
    SpecialFormInstance::new(a_hat, 1.0, metadata).expect("identity instance is valid")
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> nalgebra::DMatrix<Complex64> {
    nalgebra::DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// Clamps the top `rank` eigenvalues into [[`GEN_EIG_FLOOR`], [`GEN_EIG_CEIL`]]
/// and zeroes the rest, preserving the eigenbasis.
fn clamp_spectrum(matrix: &HermitianMatrix, rank: usize) -> HermitianMatrix {
    let decomposition = eigh(matrix).expect("generated matrix decomposes");
    let n = matrix.dim();
    let v = decomposition.eigenvector_matrix();
    let clamped = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let lambda = if i < rank {
                decomposition.eigenvalues()[i].clamp(GEN_EIG_FLOOR, GEN_EIG_CEIL)
            } else {
                0.0
            };
            Complex64::new(lambda, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let rebuilt = v * clamped * v.adjoint();
    HermitianMatrix::symmetrized(rebuilt).expect("finite rebuilt matrix")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reads_minimal_general_instance() {
        let text = r#"{
            "format": "psdp-instance/v1",
            "kind": "general",
            "n": 2, "m": 1,
            "C": [[1, 0], [0, 1]],
            "A": [[[1, 0], [0, 1]]],
            "b": [1],
            "metadata": {"name": "tiny"}
        }"#;
        let instance = read_instance_str(text).expect("valid instance");
        let Instance::General(inst) = instance else {
            panic!("expected general instance");
        };
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.m(), 1);
        assert_eq!(inst.b(), &[1.0]);
        assert_eq!(inst.metadata().name, "tiny");
    }

    #[test]
    fn rejects_negative_rhs_naming_the_entry() {
        let text = r#"{
            "format": "psdp-instance/v1",
            "kind": "general",
            "n": 1, "m": 1,
            "C": [[1]],
            "A": [[[1]]],
            "b": [-1]
        }"#;
        let err = read_instance_str(text).expect_err("negative b");
        let InstanceError::Validation { field, message } = &err else {
            panic!("expected validation error, got {err:?}");
        };
        assert_eq!(field, "b[0]");
        assert!(message.contains("negative"), "message: {message}");
    }

    #[test]
    fn rejects_non_psd_constraint_naming_the_matrix() {
        let text = r#"{
            "format": "psdp-instance/v1",
            "kind": "general",
            "n": 2, "m": 1,
            "C": [[1, 0], [0, 1]],
            "A": [[[0, 1], [1, 0]]],
            "b": [1]
        }"#;
        let err = read_instance_str(text).expect_err("Pauli-X constraint");
        let InstanceError::Validation { field, message } = &err else {
            panic!("expected validation error, got {err:?}");
        };
        assert_eq!(field, "A[0]");
        assert!(message.contains("not PSD"), "message: {message}");
    }

    #[test]
    fn accepts_complex_pairs_and_bare_reals() {
        let text = r#"{
            "format": "psdp-instance/v1",
            "kind": "general",
            "n": 2, "m": 1,
            "C": [[2, [0, -1]], [[0, 1], 2]],
            "A": [[[1, 0], [0, 1]]],
            "b": [0.5]
        }"#;
        let instance = read_instance_str(text).expect("valid instance");
        let Instance::General(inst) = instance else {
            panic!("expected general instance");
        };
        assert_eq!(inst.c().entry(0, 1), c64(0.0, -1.0));
        assert_eq!(inst.c().entry(1, 0), c64(0.0, 1.0));
    }

    #[test]
    fn identity_instance_round_trips() {
        let inst = Instance::Special(gen_identity(2, 3));
        let text = instance_to_json_string(&inst);
        assert!(text.contains("\"kind\": \"special\""));
        let back = read_instance_str(&text).expect("round trip");
        assert_eq!(back, inst);
    }

    #[test]
    fn random_instance_round_trips_bit_exactly() {
        let inst = Instance::General(gen_random_psd(3, 4, 11, RankProfile::Full));
        let text = instance_to_json_string(&inst);
        let back = read_instance_str(&text).expect("round trip");
        let Instance::General(original) = &inst else { unreachable!() };
        let Instance::General(reread) = &back else {
            panic!("kind changed in round trip");
        };
        for (left, right) in original.a().iter().zip(reread.a().iter()) {
            for (x, y) in left.entries_row_major().iter().zip(right.entries_row_major()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
        assert_eq!(original.b(), reread.b());
        // And the serialized form itself is reproducible.
        assert_eq!(text, instance_to_json_string(&back));
    }

    #[test]
    fn gen_diagonal_is_deterministic_and_commuting() {
        let first = gen_diagonal(3, 4, 7);
        let second = gen_diagonal(3, 4, 7);
        assert_eq!(first, second);
        for a_i in first.a() {
            assert_eq!(a_i.max_offdiag_abs(), 0.0);
        }
        for a_i in first.a() {
            for a_j in first.a() {
                let commutator = a_i.as_matrix() * a_j.as_matrix() - a_j.as_matrix() * a_i.as_matrix();
                assert_eq!(commutator.norm(), 0.0);
            }
        }
    }

    #[test]
    fn gen_random_psd_full_rank_is_nonsingular() {
        let inst = gen_random_psd(4, 3, 5, RankProfile::Full);
        for a_i in inst.a() {
            let min = a_i.min_eigenvalue().expect("decomposable");
            assert!(min >= GEN_EIG_FLOOR - 1e-12, "min eigenvalue {min}");
        }
        let c_min = inst.c().min_eigenvalue().expect("decomposable");
        assert!(c_min >= 0.1 - 1e-12);
    }

    #[test]
    fn gen_random_psd_low_rank_has_rank_one_constraints() {
        let inst = gen_random_psd(4, 3, 5, RankProfile::Low(1));
        for a_i in inst.a() {
            let decomposition = eigh(a_i).expect("decomposable");
            assert!(decomposition.eigenvalues()[0] >= GEN_EIG_FLOOR - 1e-12);
            for &rest in &decomposition.eigenvalues()[1..] {
                assert!(rest.abs() < 1e-10, "unexpected second eigenvalue {rest}");
            }
        }
    }

    #[test]
    fn generated_instances_pass_reader_validation() {
        for seed in [0, 1, 2] {
            let diag = Instance::General(gen_diagonal(3, 5, seed));
            read_instance_str(&instance_to_json_string(&diag)).expect("diag validates");
            let dense = Instance::General(gen_random_psd(3, 5, seed, RankProfile::Full));
            read_instance_str(&instance_to_json_string(&dense)).expect("dense validates");
        }
        let special = Instance::Special(gen_identity(2, 4));
        read_instance_str(&instance_to_json_string(&special)).expect("special validates");
    }

    #[test]
    fn fixed_seed_gives_byte_identical_json() {
        let first = instance_to_json_string(&Instance::General(gen_random_psd(
            3,
            4,
            11,
            RankProfile::Full,
        )));
        let second = instance_to_json_string(&Instance::General(gen_random_psd(
            3,
            4,
            11,
            RankProfile::Full,
        )));
        assert_eq!(first, second);
    }

    #[test]
    fn special_form_rejects_norm_above_one() {
        let a_hat = vec![HermitianMatrix::from_diagonal(&[1.5, 0.5]); 2];
        let err = SpecialFormInstance::new(a_hat, 1.0, InstanceMetadata::special("bad"))
            .expect_err("norm over 1");
        assert!(matches!(err, InstanceError::Validation { .. }));
    }

    #[test]
    fn special_form_rejects_eigenvalue_below_floor() {
        // gamma = 4 means nonzero eigenvalues must be >= 0.25.
        let a_hat = vec![
            HermitianMatrix::from_diagonal(&[1.0, 0.1]),
            HermitianMatrix::from_diagonal(&[1.0, 0.5]),
        ];
        let err = SpecialFormInstance::new(a_hat, 4.0, InstanceMetadata::special("bad"))
            .expect_err("eigenvalue below 1/gamma");
        let InstanceError::Validation { field, .. } = &err else {
            panic!("expected validation error");
        };
        assert_eq!(field, "A[0]");
    }

    #[test]
    fn special_form_rejects_zero_constraint_matrix() {
        let a_hat = vec![HermitianMatrix::identity(2), HermitianMatrix::zeros(2)];
        let err = SpecialFormInstance::new(a_hat, 4.0, InstanceMetadata::special("bad"))
            .expect_err("zero matrix makes its constraint unsatisfiable");
        let InstanceError::Validation { field, .. } = &err else {
            panic!("expected validation error");
        };
        assert_eq!(field, "A[1]");
    }

    #[test]
    fn special_form_requires_m_at_least_n() {
        let a_hat = vec![HermitianMatrix::identity(3)];
        let err = SpecialFormInstance::new(a_hat, 1.0, InstanceMetadata::special("thin"))
            .expect_err("m < n");
        assert!(matches!(err, InstanceError::Validation { .. }));
    }
}
