//! JSON file formats: instance specs, instances, solver configs, condition
//! reports and run summaries. Dense matrices are row-major nested arrays.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use madmm::instances::{Dims, Envelope, Family, Instance, InstanceSpec, NonsmoothKind, SetDescriptor};
use madmm::{Matrix, Vector};

use crate::error::CliError;

// ---------------------------------------------------------------------------
// I/O helpers
// ---------------------------------------------------------------------------

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut de = serde_json::Deserializer::from_slice(&bytes);
    serde_path_to_error::deserialize(&mut de).map_err(|e| CliError::Schema {
        path: path.to_path_buf(),
        detail: format!("`{}`: {}", e.path(), e.inner()),
    })
}

/// Deterministic pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable file types");
    out.push(b'\n');
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    std::fs::write(path, to_json_bytes(value)).map_err(|e| CliError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

// matrix/vector conversions ---------------------------------------------------

pub fn mat_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn rows_to_mat(rows: &[Vec<f64>], field: &str) -> Result<Matrix, CliError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(CliError::Input(format!("field `{field}`: empty matrix")));
    }
    let cols = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(CliError::Input(format!(
                "field `{field}`: ragged matrix (row {i} has {} entries, expected {cols})",
                r.len()
            )));
        }
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn vec_to_vector(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}

pub fn vector_to_vec(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

// ---------------------------------------------------------------------------
// Shared tags
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    AnalyticTiny,
    QuadraticCoupled,
    ProjectionPenalty,
    SeparableRecovery,
}

impl From<FamilyTag> for Family {
    fn from(t: FamilyTag) -> Family {
        match t {
            FamilyTag::AnalyticTiny => Family::AnalyticTiny,
            FamilyTag::QuadraticCoupled => Family::QuadraticCoupled,
            FamilyTag::ProjectionPenalty => Family::ProjectionPenalty,
            FamilyTag::SeparableRecovery => Family::SeparableRecovery,
        }
    }
}

impl From<Family> for FamilyTag {
    fn from(f: Family) -> FamilyTag {
        match f {
            Family::AnalyticTiny => FamilyTag::AnalyticTiny,
            Family::QuadraticCoupled => FamilyTag::QuadraticCoupled,
            Family::ProjectionPenalty => FamilyTag::ProjectionPenalty,
            Family::SeparableRecovery => FamilyTag::SeparableRecovery,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsFile {
    pub u: usize,
    pub v: usize,
    pub x: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TermFile {
    Zero,
    L1 { lambda: f64 },
    Box { lo: f64, hi: f64 },
    Nonneg,
    Ball { radius: f64 },
}

impl From<&TermFile> for NonsmoothKind {
    fn from(t: &TermFile) -> NonsmoothKind {
        match t {
            TermFile::Zero => NonsmoothKind::Zero,
            TermFile::L1 { lambda } => NonsmoothKind::L1 { lambda: *lambda },
            TermFile::Box { lo, hi } => NonsmoothKind::Box { lo: *lo, hi: *hi },
            TermFile::Nonneg => NonsmoothKind::Nonneg,
            TermFile::Ball { radius } => NonsmoothKind::Ball { radius: *radius },
        }
    }
}

impl From<&NonsmoothKind> for TermFile {
    fn from(k: &NonsmoothKind) -> TermFile {
        match k {
            NonsmoothKind::Zero => TermFile::Zero,
            NonsmoothKind::L1 { lambda } => TermFile::L1 { lambda: *lambda },
            NonsmoothKind::Box { lo, hi } => TermFile::Box { lo: *lo, hi: *hi },
            NonsmoothKind::Nonneg => TermFile::Nonneg,
            NonsmoothKind::Ball { radius } => TermFile::Ball { radius: *radius },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetFile {
    Box { lo: f64, hi: f64 },
    Ball { radius: f64 },
    Nonneg,
}

impl From<&SetFile> for SetDescriptor {
    fn from(s: &SetFile) -> SetDescriptor {
        match s {
            SetFile::Box { lo, hi } => SetDescriptor::Box { lo: *lo, hi: *hi },
            SetFile::Ball { radius } => SetDescriptor::Ball { radius: *radius },
            SetFile::Nonneg => SetDescriptor::Nonneg,
        }
    }
}

impl From<&SetDescriptor> for SetFile {
    fn from(s: &SetDescriptor) -> SetFile {
        match s {
            SetDescriptor::Box { lo, hi } => SetFile::Box { lo: *lo, hi: *hi },
            SetDescriptor::Ball { radius } => SetFile::Ball { radius: *radius },
            SetDescriptor::Nonneg => SetFile::Nonneg,
        }
    }
}

/// An indicator term rendered as a set descriptor (for the `sets` echo).
fn indicator_set(kind: &NonsmoothKind) -> Option<SetFile> {
    match kind {
        NonsmoothKind::Box { lo, hi } => Some(SetFile::Box { lo: *lo, hi: *hi }),
        NonsmoothKind::Nonneg => Some(SetFile::Nonneg),
        NonsmoothKind::Ball { radius } => Some(SetFile::Ball { radius: *radius }),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Instance spec file (input of `generate`)
// ---------------------------------------------------------------------------

fn default_conditioning() -> f64 {
    10.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub family: FamilyTag,
    pub dims: DimsFile,
    pub seed: u64,
    #[serde(default = "default_conditioning")]
    pub conditioning: f64,
    #[serde(default)]
    pub sparsity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<TermFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<TermFile>,
    #[serde(rename = "K1", default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<SetFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

impl SpecFile {
    pub fn to_core(&self) -> InstanceSpec {
        InstanceSpec {
            family: self.family.into(),
            dims: Dims {
                u: self.dims.u,
                v: self.dims.v,
                x: self.dims.x,
            },
            seed: self.seed,
            conditioning: self.conditioning,
            sparsity: self.sparsity,
            p: self.p.as_ref().map(NonsmoothKind::from),
            q: self.q.as_ref().map(NonsmoothKind::from),
            k1: self.k1.as_ref().map(SetDescriptor::from),
            rho: self.rho,
        }
    }
}

// ---------------------------------------------------------------------------
// Instance file
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatricesFile {
    #[serde(rename = "Qtilde", default, skip_serializing_if = "Option::is_none")]
    pub q_tilde: Option<Vec<Vec<f64>>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorsFile {
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QBlocksFile {
    pub q11: Vec<Vec<f64>>,
    pub q12: Vec<Vec<f64>>,
    pub q22: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeFile {
    #[serde(rename = "Q_blocks")]
    pub q_blocks: QBlocksFile,
    #[serde(rename = "D1")]
    pub d1: Vec<Vec<f64>>,
    #[serde(rename = "D2")]
    pub d2: Vec<Vec<f64>>,
    pub eta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonsmoothFile {
    pub p: TermFile,
    pub q: TermFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetsFile {
    #[serde(rename = "K1", default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<SetFile>,
    #[serde(rename = "K2", default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<SetFile>,
    #[serde(rename = "K3", default, skip_serializing_if = "Option::is_none")]
    pub k3: Option<SetFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleFile {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub x: Vec<f64>,
}

impl TripleFile {
    pub fn to_reference(&self) -> madmm::ReferenceTriple {
        madmm::ReferenceTriple {
            u: vec_to_vector(&self.u),
            v: vec_to_vector(&self.v),
            x: vec_to_vector(&self.x),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub family: FamilyTag,
    pub dims: DimsFile,
    pub seed: u64,
    pub matrices: MatricesFile,
    pub vectors: VectorsFile,
    pub envelope: EnvelopeFile,
    pub nonsmooth: NonsmoothFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sets: Option<SetsFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<TripleFile>,
}

impl InstanceFile {
    pub fn from_core(inst: &Instance) -> Self {
        let k2 = indicator_set(&inst.p);
        let k3 = indicator_set(&inst.q);
        let k1 = inst.k1.as_ref().map(SetFile::from);
        let sets = if k1.is_some() || k2.is_some() || k3.is_some() {
            Some(SetsFile { k1, k2, k3 })
        } else {
            None
        };
        Self {
            family: inst.family.into(),
            dims: DimsFile {
                u: inst.dims.u,
                v: inst.dims.v,
                x: inst.dims.x,
            },
            seed: inst.seed,
            matrices: MatricesFile {
                q_tilde: inst.q_tilde.as_ref().map(mat_to_rows),
                a: mat_to_rows(&inst.a),
                b: mat_to_rows(&inst.b),
            },
            vectors: VectorsFile {
                c: vector_to_vec(&inst.c),
            },
            envelope: EnvelopeFile {
                q_blocks: QBlocksFile {
                    q11: mat_to_rows(&inst.envelope.q11),
                    q12: mat_to_rows(&inst.envelope.q12),
                    q22: mat_to_rows(&inst.envelope.q22),
                },
                d1: mat_to_rows(&inst.envelope.d1),
                d2: mat_to_rows(&inst.envelope.d2),
                eta: inst.envelope.eta,
            },
            nonsmooth: NonsmoothFile {
                p: (&inst.p).into(),
                q: (&inst.q).into(),
            },
            sets,
            rho: inst.rho,
            solution: inst.solution.as_ref().map(|(u, v, x)| TripleFile {
                u: vector_to_vec(u),
                v: vector_to_vec(v),
                x: vector_to_vec(x),
            }),
        }
    }

    pub fn to_core(&self) -> Result<Instance, CliError> {
        let envelope = Envelope {
            q11: rows_to_mat(&self.envelope.q_blocks.q11, "envelope.Q_blocks.q11")?,
            q12: rows_to_mat(&self.envelope.q_blocks.q12, "envelope.Q_blocks.q12")?,
            q22: rows_to_mat(&self.envelope.q_blocks.q22, "envelope.Q_blocks.q22")?,
            d1: rows_to_mat(&self.envelope.d1, "envelope.D1")?,
            d2: rows_to_mat(&self.envelope.d2, "envelope.D2")?,
            eta: self.envelope.eta,
        };
        let q_tilde = match &self.matrices.q_tilde {
            Some(rows) => Some(rows_to_mat(rows, "matrices.Qtilde")?),
            None => None,
        };
        Ok(Instance {
            family: self.family.into(),
            dims: Dims {
                u: self.dims.u,
                v: self.dims.v,
                x: self.dims.x,
            },
            seed: self.seed,
            a: rows_to_mat(&self.matrices.a, "matrices.A")?,
            b: rows_to_mat(&self.matrices.b, "matrices.B")?,
            c: vec_to_vector(&self.vectors.c),
            q_tilde,
            envelope,
            p: (&self.nonsmooth.p).into(),
            q: (&self.nonsmooth.q).into(),
            k1: self
                .sets
                .as_ref()
                .and_then(|s| s.k1.as_ref())
                .map(SetDescriptor::from),
            rho: self.rho,
            solution: self
                .solution
                .as_ref()
                .map(|t| (vec_to_vector(&t.u), vec_to_vector(&t.v), vec_to_vector(&t.x))),
        })
    }
}

// ---------------------------------------------------------------------------
// Solver config file
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OpSpecFile {
    #[default]
    Auto,
    Zero,
    ScaledIdentity {
        scale: f64,
    },
    Dense {
        matrix: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BackendTag {
    /// Linear solves for zero nonsmooth terms, the prox reduction otherwise.
    #[default]
    Auto,
    ProxIdentity,
    LinearSolve,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BackendFile {
    #[serde(default)]
    pub u: BackendTag,
    #[serde(default)]
    pub v: BackendTag,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub sigma: f64,
    /// Absent: choose 1.61 when the large-step conditions verify, else 1.0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(rename = "S", default)]
    pub s: OpSpecFile,
    #[serde(rename = "T", default)]
    pub t: OpSpecFile,
    #[serde(default)]
    pub backend: BackendFile,
    pub max_iters: usize,
    pub kkt_tol: f64,
    /// Absent: every iterate for total dimension <= 200, stride 10 above.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_cap: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

// ---------------------------------------------------------------------------
// Report / summary / certificate files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryFile {
    pub clause: String,
    pub description: String,
    pub requirement: String,
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_direction: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReportFile {
    pub schema: String,
    pub clause_set: String,
    pub applicable: bool,
    pub pass: bool,
    pub unverified: bool,
    pub entries: Vec<EntryFile>,
}

impl CheckReportFile {
    pub fn from_core(report: &madmm::conditions::ConditionReport) -> Self {
        Self {
            schema: "madmm.check.v1".into(),
            clause_set: report.clause_set.clone(),
            applicable: report.applicable,
            pass: report.pass,
            unverified: report.unverified,
            entries: report
                .entries
                .iter()
                .map(|e| EntryFile {
                    clause: e.clause.clone(),
                    description: e.description.clone(),
                    requirement: format!("{:?}", e.requirement),
                    verdict: format!("{:?}", e.verdict),
                    lambda_min: e.lambda_min,
                    lambda_max: e.lambda_max,
                    kernel_direction: e.kernel_direction.as_ref().map(vector_to_vec),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigEchoFile {
    pub sigma: f64,
    pub tau: f64,
    pub tau_source: String,
    #[serde(rename = "S")]
    pub s: OpSpecFile,
    #[serde(rename = "T")]
    pub t: OpSpecFile,
    pub backend_u: String,
    pub backend_v: String,
    pub max_iters: usize,
    pub kkt_tol: f64,
    pub record_every: usize,
    pub seed: u64,
    pub force: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictsFile {
    /// `Phi_{k+1} <= Phi_k + 1e-8` across the recorded run.
    pub phi_monotone: bool,
    /// `Psi_{k+1} + Xi_{k+1} <= Psi_k + Xi_k + 1e-8` for `k >= 1`.
    pub psi_xi_monotone: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryFile {
    pub schema: String,
    pub instance_hash: String,
    pub config: ConfigEchoFile,
    pub status: String,
    pub iterations: usize,
    pub rows_written: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kkt_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feas: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_point: Option<TripleFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diverged_at: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<VerdictsFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateFile {
    pub schema: String,
    pub iterations: usize,
    pub probes_per_iteration: usize,
    pub seed: u64,
    pub evaluated: usize,
    pub skipped: usize,
    pub checked_first: bool,
    pub checked_second: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_slack_first: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_slack_second: Option<f64>,
    pub rel_slack_tolerance: f64,
    pub pass: bool,
}
