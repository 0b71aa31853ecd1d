//! The majorized ADMM iteration.
//!
//! One iteration majorizes `phi` at the current pair `w^k = (u^k, v^k)`,
//! minimizes the majorized augmented Lagrangian in `u` then in `v` (each with
//! an optional semi-proximal term), and finishes with the multiplier step
//! `x^{k+1} = x^k + tau * sigma * (A* u^{k+1} + B* v^{k+1} - c)`.
//!
//! Subproblems are solved exactly through one of two backends:
//!
//! - `ProxIdentity`: requires the assembled operator
//!   `sigma A A* + Q11 + D1 + S` to equal `alpha I`, reducing the update to a
//!   single prox call. The `Auto` weight picks `S = alpha I - (…)` with
//!   `alpha = lambda_max(…)`, the smallest scaling the reduction allows.
//! - `LinearSolve`: requires the nonsmooth term to be zero or quadratic and
//!   factors the iteration-independent system matrix once.

use nalgebra::{Cholesky, Dyn};

use crate::conditions;
use crate::diagnostics::{self, LyapunovRecord};
use crate::error::{Error, Result};
use crate::linop::{SelfAdjointOp, DEFAULT_DENSE_CAP};
use crate::model::{stack, CoupledProblem, ProxKind};
use crate::{Matrix, Vector};

/// Upper bound of the admissible step-length interval, `(1 + sqrt 5) / 2`.
pub fn tau_limit() -> f64 {
    0.5 * (1.0 + 5.0f64.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    ProxIdentity,
    LinearSolve,
}

/// Specification of a semi-proximal weight (`S` on the u block, `T` on v).
#[derive(Debug, Clone)]
pub enum ProxWeightSpec {
    /// Backend-dependent default: the prox-identity tuner for
    /// [`Backend::ProxIdentity`], zero for [`Backend::LinearSolve`].
    Auto,
    Zero,
    ScaledIdentity(f64),
    Explicit(SelfAdjointOp),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub sigma: f64,
    /// Step length in `(0, (1+sqrt 5)/2)`.
    pub tau: f64,
    pub s_op: ProxWeightSpec,
    pub t_op: ProxWeightSpec,
    pub u_backend: Backend,
    pub v_backend: Backend,
    pub max_iters: usize,
    /// Stop once `sqrt(dual^2 + feas^2)` of the KKT witness falls below this.
    pub kkt_tol: f64,
    /// Record stride for the history (iterate 1 and the final iterate are
    /// always recorded). Ergodic averages stay exact regardless of stride.
    pub record_every: usize,
    pub dense_cap: usize,
    /// Skip the convergence-condition gate.
    pub force: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            tau: 1.0,
            s_op: ProxWeightSpec::Auto,
            t_op: ProxWeightSpec::Auto,
            u_backend: Backend::ProxIdentity,
            v_backend: Backend::ProxIdentity,
            max_iters: 10_000,
            kkt_tol: 1e-9,
            record_every: 1,
            dense_cap: DEFAULT_DENSE_CAP,
            force: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma.is_nan() || self.sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.tau > 0.0 && self.tau < tau_limit()) {
            return Err(Error::InvalidParameter(format!(
                "tau must lie in (0, {:.6}), got {}",
                tau_limit(),
                self.tau
            )));
        }
        if self.kkt_tol <= 0.0 {
            return Err(Error::InvalidParameter("kkt_tol must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Resolved per-run parameters; `s_op`/`t_op` are concrete operators.
#[derive(Debug, Clone)]
pub struct SolverParams {
    pub sigma: f64,
    pub tau: f64,
    pub s_op: SelfAdjointOp,
    pub t_op: SelfAdjointOp,
}

/// One iterate `(u^k, v^k, x^k)` with its cached constraint residual and
/// coupling gradient. Both caches are recomputed at construction, never
/// carried stale.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub k: usize,
    pub u: Vector,
    pub v: Vector,
    pub x: Vector,
    /// `A* u + B* v - c`.
    pub residual: Vector,
    /// Stacked `grad phi(u, v)`.
    pub grad: Vector,
}

impl IterateState {
    pub fn new(prob: &CoupledProblem, k: usize, u: Vector, v: Vector, x: Vector) -> Result<Self> {
        if x.len() != prob.x_dim() {
            return Err(Error::DimMismatch {
                context: "IterateState: multiplier",
                expected: prob.x_dim(),
                got: x.len(),
            });
        }
        let residual = prob.residual(&u, &v)?;
        let grad = prob.phi().gradient(&stack(&u, &v))?;
        Ok(Self {
            k,
            u,
            v,
            x,
            residual,
            grad,
        })
    }

    pub fn origin(prob: &CoupledProblem) -> Result<Self> {
        Self::new(
            prob,
            0,
            Vector::zeros(prob.u_dim()),
            Vector::zeros(prob.v_dim()),
            Vector::zeros(prob.x_dim()),
        )
    }

    pub fn w(&self) -> Vector {
        stack(&self.u, &self.v)
    }

    pub fn grad_u(&self) -> Vector {
        Vector::from(self.grad.rows(0, self.u.len()))
    }

    pub fn grad_v(&self) -> Vector {
        Vector::from(self.grad.rows(self.u.len(), self.v.len()))
    }
}

/// A known (usually high-accuracy) KKT triple used as the reference point of
/// the Lyapunov sequences.
#[derive(Debug, Clone)]
pub struct ReferenceTriple {
    pub u: Vector,
    pub v: Vector,
    pub x: Vector,
}

/// Ergodic averages at ergodic index `k` (means of iterates `2..=k+1` and of
/// the auxiliary multipliers `x~`).
#[derive(Debug, Clone)]
pub struct ErgodicRecord {
    pub k: usize,
    pub u_hat: Vector,
    pub v_hat: Vector,
    pub x_hat: Vector,
    pub feas: f64,
    pub objective: f64,
}

/// Per-iteration diagnostics snapshot.
#[derive(Debug, Clone)]
pub struct HistoryRecord {
    pub k: usize,
    pub u: Vector,
    pub v: Vector,
    pub x: Vector,
    /// `x~^k = x^{k-1} + sigma * residual^k`.
    pub x_tilde: Vector,
    pub feas: f64,
    /// Squared KKT residual bound between iterates `k-1` and `k`.
    pub kkt_bound_sq: f64,
    pub theta: f64,
    pub xi: f64,
    pub objective: f64,
    pub phi: Option<f64>,
    pub psi: Option<f64>,
    pub ergodic: Option<ErgodicRecord>,
}

#[derive(Debug, Clone)]
pub struct RunHistory {
    pub init: IterateState,
    pub params: SolverParams,
    pub reference: Option<ReferenceTriple>,
    pub records: Vec<HistoryRecord>,
    pub record_every: usize,
    /// Worst scaled subproblem optimality residual seen across the run.
    pub max_subproblem_residual: f64,
}

impl RunHistory {
    pub fn record_at(&self, k: usize) -> Option<&HistoryRecord> {
        self.records.iter().find(|r| r.k == k)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: Vector,
    pub v: Vector,
    pub x: Vector,
    pub iterations: usize,
    pub converged: bool,
    /// `sqrt(dual^2 + feas^2)` of the final KKT witness (absent for zero-iteration runs).
    pub kkt_bound: Option<f64>,
    pub objective: f64,
}

// ---------------------------------------------------------------------------
// Subproblem machinery
// ---------------------------------------------------------------------------

enum Subproblem {
    ProxIdentity {
        alpha: f64,
    },
    Linear {
        factor: Cholesky<f64, Dyn>,
        m_mat: Matrix,
        lin: Vector,
    },
}

impl Subproblem {
    /// Applies the curvature `M = sigma A A* + Q_ii + D_i + S` of the block.
    fn m_apply(&self, d: &Vector) -> Vector {
        match self {
            Subproblem::ProxIdentity { alpha } => d * *alpha,
            Subproblem::Linear { m_mat, .. } => m_mat * d,
        }
    }
}

/// Solver with resolved weights and factored subproblems; build once per run.
pub struct PreparedSolver {
    params: SolverParams,
    u_sub: Subproblem,
    v_sub: Subproblem,
}

fn resolve_weight(
    spec: &ProxWeightSpec,
    backend: Backend,
    base: &SelfAdjointOp,
    dim: usize,
    cap: usize,
    block: &'static str,
) -> Result<SelfAdjointOp> {
    let op = match spec {
        ProxWeightSpec::Auto => match backend {
            Backend::ProxIdentity => {
                let alpha = base.max_eigenvalue(cap)?;
                base.identity_shift_minus(alpha)
            }
            Backend::LinearSolve => SelfAdjointOp::zero(dim),
        },
        ProxWeightSpec::Zero => SelfAdjointOp::zero(dim),
        ProxWeightSpec::ScaledIdentity(s) => {
            if *s < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{block} weight must be PSD; got scaled identity with scale {s}"
                )));
            }
            SelfAdjointOp::scaled_identity(dim, *s)
        }
        ProxWeightSpec::Explicit(op) => {
            if op.dim() != dim {
                return Err(Error::DimMismatch {
                    context: "explicit semi-proximal weight",
                    expected: dim,
                    got: op.dim(),
                });
            }
            op.clone()
        }
    };
    Ok(op)
}

fn u_base(prob: &CoupledProblem, sigma: f64) -> Result<SelfAdjointOp> {
    let phi = prob.phi();
    SelfAdjointOp::sum_of(vec![
        prob.a().gram(sigma),
        phi.q().q11().clone(),
        phi.d1().clone(),
    ])
}

fn v_base(prob: &CoupledProblem, sigma: f64) -> Result<SelfAdjointOp> {
    let phi = prob.phi();
    SelfAdjointOp::sum_of(vec![
        prob.b().gram(sigma),
        phi.q().q22().clone(),
        phi.d2().clone(),
    ])
}

/// Resolves `Auto` weights into concrete operators without building backends.
pub fn resolve_params(prob: &CoupledProblem, cfg: &SolverConfig) -> Result<SolverParams> {
    cfg.validate()?;
    let s_op = resolve_weight(
        &cfg.s_op,
        cfg.u_backend,
        &u_base(prob, cfg.sigma)?,
        prob.u_dim(),
        cfg.dense_cap,
        "S",
    )?;
    let t_op = resolve_weight(
        &cfg.t_op,
        cfg.v_backend,
        &v_base(prob, cfg.sigma)?,
        prob.v_dim(),
        cfg.dense_cap,
        "T",
    )?;
    Ok(SolverParams {
        sigma: cfg.sigma,
        tau: cfg.tau,
        s_op,
        t_op,
    })
}

fn build_subproblem(
    backend: Backend,
    base: &SelfAdjointOp,
    weight: &SelfAdjointOp,
    term: &ProxKind,
    cap: usize,
    block: &'static str,
) -> Result<Subproblem> {
    let assembled = SelfAdjointOp::sum_of(vec![base.clone(), weight.clone()])?;
    match backend {
        Backend::ProxIdentity => {
            let m = assembled.materialize(cap)?;
            let n = m.nrows();
            let alpha = m.diagonal().sum() / n as f64;
            if alpha.is_nan() || alpha <= 0.0 {
                return Err(Error::BackendConfig(format!(
                    "{block}-subproblem operator has nonpositive scale {alpha}; prox_identity needs alpha > 0"
                )));
            }
            let tol = 1e-8 * alpha.abs().max(1.0);
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { alpha } else { 0.0 };
                    if (m[(i, j)] - want).abs() > tol {
                        return Err(Error::BackendConfig(format!(
                            "{block}-subproblem operator is not a scaled identity (entry ({i},{j}) = {}, alpha = {alpha}); \
                             choose the auto weight or the linear_solve backend",
                            m[(i, j)]
                        )));
                    }
                }
            }
            Ok(Subproblem::ProxIdentity { alpha })
        }
        Backend::LinearSolve => {
            let (p_mat, lin) = match term {
                ProxKind::Zero => (None, Vector::zeros(base.dim())),
                ProxKind::Quadratic { p, b } => (Some(p.clone()), b.clone()),
                other => {
                    return Err(Error::BackendConfig(format!(
                        "linear_solve backend requires a zero or quadratic nonsmooth term on the {block} block, got {other:?}"
                    )));
                }
            };
            let m_mat = assembled.materialize(cap)?;
            let mut sys = m_mat.clone();
            if let Some(p) = p_mat {
                sys += p;
            }
            let sys = (&sys + sys.transpose()) * 0.5;
            let factor = Cholesky::new(sys).ok_or_else(|| {
                Error::BackendConfig(format!(
                    "{block}-subproblem system matrix is not positive definite"
                ))
            })?;
            Ok(Subproblem::Linear { factor, m_mat, lin })
        }
    }
}

impl PreparedSolver {
    pub fn new(prob: &CoupledProblem, cfg: &SolverConfig) -> Result<Self> {
        let params = resolve_params(prob, cfg)?;
        let base_u = u_base(prob, cfg.sigma)?;
        let base_v = v_base(prob, cfg.sigma)?;
        let u_sub = build_subproblem(
            cfg.u_backend,
            &base_u,
            &params.s_op,
            prob.p().kind(),
            cfg.dense_cap,
            "u",
        )?;
        let v_sub = build_subproblem(
            cfg.v_backend,
            &base_v,
            &params.t_op,
            prob.q().kind(),
            cfg.dense_cap,
            "v",
        )?;
        Ok(Self {
            params,
            u_sub,
            v_sub,
        })
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    /// Gradient of the smooth part of the u subproblem at `u^k`.
    fn u_gradient(&self, prob: &CoupledProblem, state: &IterateState) -> Result<Vector> {
        let a = prob.a();
        Ok(state.grad_u() + a.apply(&state.x)? + a.apply(&state.residual)? * self.params.sigma)
    }

    /// Gradient of the smooth part of the v subproblem at `v^k`; the coupling
    /// gradient stays anchored at `w^k`.
    fn v_gradient(
        &self,
        prob: &CoupledProblem,
        state: &IterateState,
        u_next: &Vector,
    ) -> Result<Vector> {
        let b = prob.b();
        let r_mid = prob.residual(u_next, &state.v)?;
        let du = u_next - &state.u;
        Ok(state.grad_v()
            + b.apply(&state.x)?
            + b.apply(&r_mid)? * self.params.sigma
            + prob.phi().q().q12().apply_adjoint(&du)?)
    }

    pub fn u_step(&self, prob: &CoupledProblem, state: &IterateState) -> Result<Vector> {
        let g = self.u_gradient(prob, state)?;
        solve_block(&self.u_sub, prob.p(), &state.u, &g)
    }

    pub fn v_step(
        &self,
        prob: &CoupledProblem,
        state: &IterateState,
        u_next: &Vector,
    ) -> Result<Vector> {
        let g = self.v_gradient(prob, state, u_next)?;
        solve_block(&self.v_sub, prob.q(), &state.v, &g)
    }

    /// Scaled optimality residual of a block update, via the prox
    /// characterization `s in d(term)(t)  <=>  t = prox(t + s, 1)`.
    fn block_residual(
        &self,
        sub: &Subproblem,
        term: &crate::model::ProxTerm,
        prev: &Vector,
        next: &Vector,
        g: &Vector,
    ) -> Result<f64> {
        let s = -(g + sub.m_apply(&(next - prev)));
        let back = term.prox(&(next + &s), 1.0)?;
        Ok((next - back).norm() / (1.0 + next.norm()))
    }
}

fn solve_block(
    sub: &Subproblem,
    term: &crate::model::ProxTerm,
    prev: &Vector,
    g: &Vector,
) -> Result<Vector> {
    match sub {
        Subproblem::ProxIdentity { alpha } => term.prox(&(prev - g / *alpha), *alpha),
        Subproblem::Linear { factor, m_mat, lin } => {
            let rhs = m_mat * prev - g - lin;
            Ok(factor.solve(&rhs))
        }
    }
}

// ---------------------------------------------------------------------------
// Public single-step operations
// ---------------------------------------------------------------------------

/// One u update from `state`; builds the backend on the fly. Use
/// [`PreparedSolver`] inside loops.
pub fn solve_u_step(
    prob: &CoupledProblem,
    cfg: &SolverConfig,
    state: &IterateState,
) -> Result<Vector> {
    PreparedSolver::new(prob, cfg)?.u_step(prob, state)
}

/// One v update given `u_next`.
pub fn solve_v_step(
    prob: &CoupledProblem,
    cfg: &SolverConfig,
    state: &IterateState,
    u_next: &Vector,
) -> Result<Vector> {
    PreparedSolver::new(prob, cfg)?.v_step(prob, state, u_next)
}

/// `x^{k+1} = x + tau * sigma * (A* u_next + B* v_next - c)`.
pub fn multiplier_step(
    cfg: &SolverConfig,
    u_next: &Vector,
    v_next: &Vector,
    x: &Vector,
    prob: &CoupledProblem,
) -> Result<Vector> {
    let r = prob.residual(u_next, v_next)?;
    Ok(x + r * (cfg.tau * cfg.sigma))
}

// ---------------------------------------------------------------------------
// The driver
// ---------------------------------------------------------------------------

const DIVERGENCE_NORM: f64 = 1e12;

fn divergence_guard(k: usize, u: &Vector, v: &Vector, x: &Vector) -> Result<()> {
    let finite = u.iter().chain(v.iter()).chain(x.iter()).all(|t| t.is_finite());
    if !finite {
        return Err(Error::Diverged {
            iteration: k,
            reason: "non-finite iterate component".into(),
        });
    }
    let n = (u.norm_squared() + v.norm_squared() + x.norm_squared()).sqrt();
    if n > DIVERGENCE_NORM {
        return Err(Error::Diverged {
            iteration: k,
            reason: format!(
                "iterate norm {n:.3e} exceeds the divergence guard {DIVERGENCE_NORM:.0e}"
            ),
        });
    }
    Ok(())
}

struct ErgodicAccumulator {
    count: usize,
    sum_u: Vector,
    sum_v: Vector,
    sum_xt: Vector,
}

impl ErgodicAccumulator {
    fn new(prob: &CoupledProblem) -> Self {
        Self {
            count: 0,
            sum_u: Vector::zeros(prob.u_dim()),
            sum_v: Vector::zeros(prob.v_dim()),
            sum_xt: Vector::zeros(prob.x_dim()),
        }
    }

    fn push(&mut self, u: &Vector, v: &Vector, x_tilde: &Vector) {
        self.count += 1;
        self.sum_u += u;
        self.sum_v += v;
        self.sum_xt += x_tilde;
    }

    fn snapshot(&self, prob: &CoupledProblem) -> Result<Option<ErgodicRecord>> {
        if self.count == 0 {
            return Ok(None);
        }
        let n = self.count as f64;
        let u_hat = &self.sum_u / n;
        let v_hat = &self.sum_v / n;
        let x_hat = &self.sum_xt / n;
        let feas = prob.residual(&u_hat, &v_hat)?.norm();
        let objective = prob.objective(&u_hat, &v_hat)?;
        Ok(Some(ErgodicRecord {
            k: self.count,
            u_hat,
            v_hat,
            x_hat,
            feas,
            objective,
        }))
    }
}

/// Runs the iteration until the KKT residual bound falls below `cfg.kkt_tol`
/// or `cfg.max_iters` is reached. Deterministic: identical inputs produce
/// identical histories.
pub fn run(
    prob: &CoupledProblem,
    cfg: &SolverConfig,
    init: IterateState,
) -> Result<(Solution, RunHistory)> {
    run_with_reference(prob, cfg, init, None)
}

/// [`run`] with a reference triple enabling the Lyapunov columns
/// (`Phi_k`, `Psi_k`) of the history.
pub fn run_with_reference(
    prob: &CoupledProblem,
    cfg: &SolverConfig,
    init: IterateState,
    reference: Option<ReferenceTriple>,
) -> Result<(Solution, RunHistory)> {
    let prepared = PreparedSolver::new(prob, cfg)?;
    let params = prepared.params().clone();

    if !cfg.force {
        let report = if cfg.tau <= 1.0 {
            conditions::check_global_small_step(prob, &params, cfg.dense_cap)?
        } else {
            conditions::check_global_large_step(prob, &params, cfg.dense_cap)?
        };
        if !report.pass {
            return Err(Error::ConditionsFailed {
                clause: report.clause_set,
            });
        }
    }

    // normalize the initial state: index 0, caches recomputed
    let init = IterateState::new(prob, 0, init.u, init.v, init.x)?;
    let mut state = init.clone();
    let mut erg = ErgodicAccumulator::new(prob);
    let mut records: Vec<HistoryRecord> = Vec::new();
    let mut max_sub_resid = 0.0f64;
    let mut converged = false;
    let mut final_bound: Option<f64> = None;
    let stride = cfg.record_every;

    let mut pending: Option<HistoryRecord> = None;
    for k in 1..=cfg.max_iters {
        let g_u = prepared.u_gradient(prob, &state)?;
        let u_next = solve_block(&prepared.u_sub, prob.p(), &state.u, &g_u)?;
        let g_v = prepared.v_gradient(prob, &state, &u_next)?;
        let v_next = solve_block(&prepared.v_sub, prob.q(), &state.v, &g_v)?;

        let r_next = prob.residual(&u_next, &v_next)?;
        let x_next = &state.x + &r_next * (params.tau * params.sigma);
        let x_tilde = &state.x + &r_next * params.sigma;
        divergence_guard(k, &u_next, &v_next, &x_next)?;

        let ru = prepared.block_residual(&prepared.u_sub, prob.p(), &state.u, &u_next, &g_u)?;
        let rv = prepared.block_residual(&prepared.v_sub, prob.q(), &state.v, &v_next, &g_v)?;
        max_sub_resid = max_sub_resid.max(ru).max(rv);

        let next = IterateState {
            k,
            residual: r_next,
            grad: prob.phi().gradient(&stack(&u_next, &v_next))?,
            u: u_next,
            v: v_next,
            x: x_next,
        };

        let witness = diagnostics::kkt_witness(prob, &params, &state, &next)?;
        let lyap: LyapunovRecord =
            diagnostics::lyapunov(prob, &params, &state, &next, reference.as_ref())?;

        if k >= 2 {
            erg.push(&next.u, &next.v, &x_tilde);
        }

        let record = HistoryRecord {
            k,
            u: next.u.clone(),
            v: next.v.clone(),
            x: next.x.clone(),
            x_tilde,
            feas: next.residual.norm(),
            kkt_bound_sq: witness.bound_sq,
            theta: lyap.theta,
            xi: lyap.xi,
            objective: prob.objective(&next.u, &next.v)?,
            phi: lyap.phi,
            psi: lyap.psi,
            ergodic: erg.snapshot(prob)?,
        };
        final_bound = Some(witness.bound_sq.sqrt());
        if k == 1 || k % stride == 0 {
            records.push(record);
            pending = None;
        } else {
            pending = Some(record);
        }

        state = next;
        if witness.bound_sq.sqrt() <= cfg.kkt_tol {
            converged = true;
            break;
        }
    }
    if let Some(rec) = pending {
        records.push(rec);
    }

    let objective = prob.objective(&state.u, &state.v)?;
    let solution = Solution {
        u: state.u.clone(),
        v: state.v.clone(),
        x: state.x.clone(),
        iterations: state.k,
        converged,
        kkt_bound: final_bound,
        objective,
    };
    let history = RunHistory {
        init,
        params,
        reference,
        records,
        record_every: stride,
        max_subproblem_residual: max_sub_resid,
    };
    Ok((solution, history))
}
