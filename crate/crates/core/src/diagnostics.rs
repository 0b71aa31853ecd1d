//! Measurement machinery: the constructed KKT element with its residual
//! bound, the Lyapunov sequences, per-iteration descent certificates, ergodic
//! averages, epsilon-approximation probing, and the complexity constants of
//! the O(1/k) envelopes.

use nalgebra::linalg::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linop::seminorm_sq;
use crate::model::{split, stack, CoupledProblem};
use crate::sampling::{normal_vector, uniform_ball};
use crate::solver::{tau_limit, IterateState, ReferenceTriple, RunHistory, SolverParams};
use crate::{Matrix, Vector};

/// Relative slack allowed when checking the per-iteration descent
/// inequalities: a probe passes when `lhs - rhs <= DESCENT_REL_SLACK * (1 + |rhs|)`.
pub const DESCENT_REL_SLACK: f64 = 1e-7;

// ---------------------------------------------------------------------------
// KKT witness
// ---------------------------------------------------------------------------

/// A concrete element of the optimality set-valued map at the current
/// iterate, assembled from two consecutive iterates. Its norm upper-bounds
/// the distance to optimality:
/// `bound_sq >= dist^2(0, F(u,v,x)) + ||A*u + B*v - c||^2`.
#[derive(Debug, Clone)]
pub struct KKTWitness {
    pub dual_u: Vector,
    pub dual_v: Vector,
    /// `A* u + B* v - c` at the current iterate.
    pub primal: Vector,
    /// `||dual||^2 + ||primal||^2`.
    pub bound_sq: f64,
}

/// Assembles the witness between consecutive iterates `prev` (index k) and
/// `curr` (index k+1):
///
/// ```text
/// u row: -(1-tau) sigma A r - sigma A B*(v^k - v^{k+1}) - S(u^{k+1}-u^k) + Q12(v^{k+1}-v^k)
/// v row: -(1-tau) sigma B r - T(v^{k+1}-v^k)
/// both:  -(Q+H)(w^{k+1}-w^k) + grad phi(w^{k+1}) - grad phi(w^k)
/// ```
pub fn kkt_witness(
    prob: &CoupledProblem,
    params: &SolverParams,
    prev: &IterateState,
    curr: &IterateState,
) -> Result<KKTWitness> {
    if curr.k != prev.k + 1 {
        return Err(Error::NonConsecutiveIterates {
            prev: prev.k,
            curr: curr.k,
        });
    }
    let phi = prob.phi();
    let r = &curr.residual;
    let du = &curr.u - &prev.u;
    let dv = &curr.v - &prev.v;
    let dv_rev = &prev.v - &curr.v;
    let dw = stack(&du, &dv);
    let coef = -(1.0 - params.tau) * params.sigma;

    let mut dual_u = prob.a().apply(r)? * coef
        - prob.a().apply(&prob.b().apply_adjoint(&dv_rev)?)? * params.sigma
        - params.s_op.apply(&du)?
        + phi.q().q12().apply(&dv)?;
    let mut dual_v = prob.b().apply(r)? * coef - params.t_op.apply(&dv)?;

    let qh = phi.q().apply(&dw)? + phi.h_op().apply(&dw)?;
    let corr = (&curr.grad - &prev.grad) - qh;
    let (cu, cv) = split(&corr, prob.u_dim());
    dual_u += cu;
    dual_v += cv;

    let bound_sq = dual_u.norm_squared() + dual_v.norm_squared() + r.norm_squared();
    Ok(KKTWitness {
        dual_u,
        dual_v,
        primal: r.clone(),
        bound_sq,
    })
}

// ---------------------------------------------------------------------------
// Lyapunov quantities
// ---------------------------------------------------------------------------

/// All scalar diagnostics indexed at the current iterate. `theta`, `xi` and
/// `gamma` measure successive displacements; `phi`/`psi` are the Lyapunov
/// values at the reference triple; `lambda`/`lambda_bar` drive the ergodic
/// objective bounds.
#[derive(Debug, Clone)]
pub struct LyapunovRecord {
    pub theta: f64,
    pub xi: f64,
    pub gamma: f64,
    pub phi: Option<f64>,
    pub psi: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_bar: Option<f64>,
}

/// `Phi_k(u,v,x)` evaluated with iterate `state` (index k) at the probe:
///
/// ```text
/// (tau sigma)^-1 ||x^k - x||^2 + ||u^k - u||^2_{D1+S} + ||v^k - v||^2_{Q22+D2+T}
///   + 0.5 ||w^k - w||^2_Q + sigma ||A* u + B* v^k - c||^2
/// ```
pub fn phi_value(
    prob: &CoupledProblem,
    params: &SolverParams,
    state: &IterateState,
    pu: &Vector,
    pv: &Vector,
    px: &Vector,
) -> Result<f64> {
    let phi = prob.phi();
    let du = &state.u - pu;
    let dv = &state.v - pv;
    let dw = stack(&du, &dv);
    let dx = &state.x - px;

    let mixed = prob.a().apply_adjoint(pu)? + prob.b().apply_adjoint(&state.v)? - prob.c();
    Ok(dx.norm_squared() / (params.tau * params.sigma)
        + seminorm_sq(phi.d1(), &du)?
        + seminorm_sq(&params.s_op, &du)?
        + seminorm_sq(phi.q().q22(), &dv)?
        + seminorm_sq(phi.d2(), &dv)?
        + seminorm_sq(&params.t_op, &dv)?
        + 0.5 * dw.dot(&phi.q().apply(&dw)?)
        + params.sigma * mixed.norm_squared())
}

/// `Psi_k = Phi_k + ||w^k - w||^2_Q + max(1-tau, 1-1/tau) sigma ||A*u^k + B*v^k - c||^2`.
pub fn psi_value(
    prob: &CoupledProblem,
    params: &SolverParams,
    state: &IterateState,
    pu: &Vector,
    pv: &Vector,
    px: &Vector,
) -> Result<f64> {
    let phi = prob.phi();
    let dw = stack(&(&state.u - pu), &(&state.v - pv));
    let extra = (1.0 - params.tau).max(1.0 - 1.0 / params.tau);
    Ok(phi_value(prob, params, state, pu, pv, px)?
        + dw.dot(&phi.q().apply(&dw)?)
        + extra * params.sigma * state.residual.norm_squared())
}

/// Computes the displacement quantities at `curr` (and the Lyapunov values at
/// the reference, when one is supplied).
pub fn lyapunov(
    prob: &CoupledProblem,
    params: &SolverParams,
    prev: &IterateState,
    curr: &IterateState,
    reference: Option<&ReferenceTriple>,
) -> Result<LyapunovRecord> {
    if curr.k != prev.k + 1 {
        return Err(Error::NonConsecutiveIterates {
            prev: prev.k,
            curr: curr.k,
        });
    }
    let phi = prob.phi();
    let eta = phi.eta();
    let du = &curr.u - &prev.u;
    let dv = &curr.v - &prev.v;
    let dw = stack(&du, &dv);

    let s_du = seminorm_sq(&params.s_op, &du)?;
    let t_dv = seminorm_sq(&params.t_op, &dv)?;
    let d1_du = seminorm_sq(phi.d1(), &du)?;
    let d2_dv = seminorm_sq(phi.d2(), &dv)?;
    let q_dw = dw.dot(&phi.q().apply(&dw)?).max(0.0);

    let theta = s_du + t_dv + 0.25 * q_dw;
    let xi = d2_dv + t_dv + eta * d1_du;

    let tau = params.tau;
    let rho = tau.min(1.0 + tau - tau * tau);
    let bbt_dv = prob.b().apply_adjoint(&dv)?.norm_squared() * params.sigma;
    let gamma = theta + rho * bbt_dv - eta * d1_du - eta * d2_dv;

    let (mut phi_v, mut psi_v, mut lambda, mut lambda_bar) = (None, None, None, None);
    if let Some(r) = reference {
        phi_v = Some(phi_value(prob, params, curr, &r.u, &r.v, &r.x)?);
        psi_v = Some(psi_value(prob, params, curr, &r.u, &r.v, &r.x)?);

        let ue = &curr.u - &r.u;
        let ve = &curr.v - &r.v;
        let we = stack(&ue, &ve);
        let lam = seminorm_sq(phi.d1(), &ue)?
            + seminorm_sq(&params.s_op, &ue)?
            + seminorm_sq(phi.d2(), &ve)?
            + seminorm_sq(&params.t_op, &ve)?
            + seminorm_sq(phi.q().q22(), &ve)?
            + params.sigma * prob.b().apply_adjoint(&ve)?.norm_squared()
            + curr.x.norm_squared() / (tau * params.sigma);
        let extra = (1.0 - tau).max(1.0 - 1.0 / tau);
        let lam_bar = lam
            + xi
            + we.dot(&phi.q().apply(&we)?)
            + extra * params.sigma * curr.residual.norm_squared();
        lambda = Some(lam);
        lambda_bar = Some(lam_bar);
    }

    Ok(LyapunovRecord {
        theta,
        xi,
        gamma,
        phi: phi_v,
        psi: psi_v,
        lambda,
        lambda_bar,
    })
}

// ---------------------------------------------------------------------------
// Descent certificates
// ---------------------------------------------------------------------------

/// The variational-inequality expression of the descent inequalities at a
/// probe `(u, v, x)`:
///
/// ```text
/// (p(u^{k+1}) + q(v^{k+1})) - (p(u) + q(v)) + <w^{k+1} - w, grad phi(w)>
///   + <u^{k+1} - u, A x> + <v^{k+1} - v, B x> - <x~^{k+1} - x, A*u + B*v - c>
/// ```
pub fn vi_term(
    prob: &CoupledProblem,
    params: &SolverParams,
    prev: &IterateState,
    curr: &IterateState,
    pu: &Vector,
    pv: &Vector,
    px: &Vector,
) -> Result<f64> {
    let x_tilde = &prev.x + &curr.residual * params.sigma;
    let w_probe = stack(pu, pv);
    let grad_probe = prob.phi().gradient(&w_probe)?;
    let dw = stack(&(&curr.u - pu), &(&curr.v - pv));
    let probe_feas = prob.a().apply_adjoint(pu)? + prob.b().apply_adjoint(pv)? - prob.c();

    Ok(prob.p().value(&curr.u)? + prob.q().value(&curr.v)?
        - prob.p().value(pu)?
        - prob.q().value(pv)?
        + dw.dot(&grad_probe)
        + (&curr.u - pu).dot(&prob.a().apply(px)?)
        + (&curr.v - pv).dot(&prob.b().apply(px)?)
        - (x_tilde - px).dot(&probe_feas))
}

/// Outcome of evaluating the two descent inequalities over a probe set.
#[derive(Debug, Clone)]
pub struct DescentReport {
    pub evaluated: usize,
    pub skipped: usize,
    pub checked_first: bool,
    pub checked_second: bool,
    /// Worst `lhs - rhs` over probes for each inequality (negative is slack).
    pub worst_slack_first: Option<f64>,
    pub worst_slack_second: Option<f64>,
    pub pass: bool,
}

/// Evaluates the per-iteration descent inequalities at the supplied probes.
///
/// The first inequality (valid for `tau <= 1`, any `k >= 0`) uses the pair
/// `(prev, curr)`. The second (any `tau`, `k >= 1`) additionally needs the
/// iterate before `prev` to form `Xi_k`; pass it as `prev2`.
pub fn descent_certificate(
    prob: &CoupledProblem,
    params: &SolverParams,
    prev2: Option<&IterateState>,
    prev: &IterateState,
    curr: &IterateState,
    probes: &[(Vector, Vector, Vector)],
) -> Result<DescentReport> {
    if curr.k != prev.k + 1 {
        return Err(Error::NonConsecutiveIterates {
            prev: prev.k,
            curr: curr.k,
        });
    }
    if let Some(p2) = prev2 {
        if prev.k != p2.k + 1 {
            return Err(Error::NonConsecutiveIterates {
                prev: p2.k,
                curr: prev.k,
            });
        }
    }
    let tau = params.tau;
    let sigma = params.sigma;
    let lyap_curr = lyapunov(prob, params, prev, curr, None)?;

    let check_first = tau <= 1.0;
    let mid = prob.residual(&curr.u, &prev.v)?;
    let rhs_first = -0.5
        * (lyap_curr.theta
            + sigma * mid.norm_squared()
            + (1.0 - tau) * sigma * curr.residual.norm_squared());

    let check_second = prev2.is_some();
    let rhs_second = -0.5
        * (lyap_curr.gamma
            + (1.0f64).min(1.0 + 1.0 / tau - tau) * sigma * curr.residual.norm_squared());
    let xi_prev = match prev2 {
        Some(p2) => Some(lyapunov(prob, params, p2, prev, None)?.xi),
        None => None,
    };

    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    let mut worst_first: Option<f64> = None;
    let mut worst_second: Option<f64> = None;
    let mut pass = true;

    for (pu, pv, px) in probes {
        if !prob.p().value(pu)?.is_finite() || !prob.q().value(pv)?.is_finite() {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        let vi = vi_term(prob, params, prev, curr, pu, pv, px)?;

        if check_first {
            let lhs = vi
                + 0.5
                    * (phi_value(prob, params, curr, pu, pv, px)?
                        - phi_value(prob, params, prev, pu, pv, px)?);
            let slack = lhs - rhs_first;
            worst_first = Some(worst_first.map_or(slack, |w: f64| w.max(slack)));
            if slack > DESCENT_REL_SLACK * (1.0 + rhs_first.abs()) {
                pass = false;
            }
        }
        if check_second {
            let lhs = vi
                + 0.5
                    * ((psi_value(prob, params, curr, pu, pv, px)? + lyap_curr.xi)
                        - (psi_value(prob, params, prev, pu, pv, px)?
                            + xi_prev.expect("prev2 present")));
            let slack = lhs - rhs_second;
            worst_second = Some(worst_second.map_or(slack, |w: f64| w.max(slack)));
            if slack > DESCENT_REL_SLACK * (1.0 + rhs_second.abs()) {
                pass = false;
            }
        }
    }
    Ok(DescentReport {
        evaluated,
        skipped,
        checked_first: check_first,
        checked_second: check_second,
        worst_slack_first: worst_first,
        worst_slack_second: worst_second,
        pass,
    })
}

/// Draws probe triples from `dom(p) x dom(q) x X` using the domain samplers.
pub fn sample_probes(
    prob: &CoupledProblem,
    n: usize,
    seed: u64,
    x_scale: f64,
) -> Vec<(Vector, Vector, Vector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u = prob.p().sample(&mut rng);
            let v = prob.q().sample(&mut rng);
            let x = normal_vector(&mut rng, prob.x_dim()) * x_scale;
            (u, v, x)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Ergodic averages
// ---------------------------------------------------------------------------

/// Recomputes the ergodic triple `(u^, v^, x^)` by direct summation over the
/// stored records (iterates `2..=n`, auxiliary multipliers `x~`). Requires a
/// stride-1 history; the incremental averages in the records stay exact under
/// any stride.
pub fn ergodic_state(history: &RunHistory) -> Result<(Vector, Vector, Vector)> {
    if history.record_every != 1 {
        return Err(Error::Inapplicable(
            "direct ergodic summation needs a stride-1 history".into(),
        ));
    }
    if history.records.len() < 2 {
        return Err(Error::HistoryIncomplete("at least two recorded iterations"));
    }
    for (i, r) in history.records.iter().enumerate() {
        if r.k != i + 1 {
            return Err(Error::HistoryIncomplete("contiguous records"));
        }
    }
    let mut su = Vector::zeros(history.records[0].u.len());
    let mut sv = Vector::zeros(history.records[0].v.len());
    let mut sx = Vector::zeros(history.records[0].x.len());
    let mut count = 0f64;
    for r in history.records.iter().filter(|r| r.k >= 2) {
        su += &r.u;
        sv += &r.v;
        sx += &r.x_tilde;
        count += 1.0;
    }
    Ok((su / count, sv / count, sx / count))
}

// ---------------------------------------------------------------------------
// Epsilon-approximation probing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EpsilonProbeReport {
    /// Largest gap seen; a lower bound on the supremum over the unit ball.
    pub max_gap: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Samples the unit ball around the candidate intersected with
/// `dom(p) x dom(q) x X` and evaluates the approximation gap at each probe.
/// The returned maximum is a lower bound on the true supremum.
pub fn epsilon_approx_probe(
    prob: &CoupledProblem,
    candidate: (&Vector, &Vector, &Vector),
    n_probes: usize,
    seed: u64,
) -> Result<EpsilonProbeReport> {
    let (cu, cv, cx) = candidate;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = prob.u_dim() + prob.v_dim() + prob.x_dim();
    let w_tilde = stack(cu, cv);
    let p_cand = prob.p().value(cu)?;
    let q_cand = prob.q().value(cv)?;

    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    let mut max_gap = f64::NEG_INFINITY;
    for _ in 0..n_probes {
        let d = uniform_ball(&mut rng, total, 1.0);
        let pu = cu + Vector::from(d.rows(0, prob.u_dim()));
        let pv = cv + Vector::from(d.rows(prob.u_dim(), prob.v_dim()));
        let px = cx + Vector::from(d.rows(prob.u_dim() + prob.v_dim(), prob.x_dim()));
        if !prob.p().value(&pu)?.is_finite() || !prob.q().value(&pv)?.is_finite() {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        let w_probe = stack(&pu, &pv);
        let grad_probe = prob.phi().gradient(&w_probe)?;
        let probe_feas = prob.a().apply_adjoint(&pu)? + prob.b().apply_adjoint(&pv)? - prob.c();
        let gap = p_cand + q_cand - prob.p().value(&pu)? - prob.q().value(&pv)?
            + (&w_tilde - &w_probe).dot(&grad_probe)
            + (cu - &pu).dot(&prob.a().apply(&px)?)
            + (cv - &pv).dot(&prob.b().apply(&px)?)
            - (cx - &px).dot(&probe_feas);
        max_gap = max_gap.max(gap);
    }
    if evaluated == 0 {
        return Err(Error::AllProbesInfeasible { attempts: n_probes });
    }
    Ok(EpsilonProbeReport {
        max_gap,
        evaluated,
        skipped,
    })
}

// ---------------------------------------------------------------------------
// Complexity constants
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityCase {
    /// `tau <= 1` with `O1 = Q/4 + Diag(S + (1-tau) sigma A A*, T + (1-tau) sigma B B*) > 0`.
    SmallStep,
    /// `tau < (1+sqrt 5)/2` with `Q/4 + Diag(S - eta D1, T - eta D2) >= 0` and
    /// `O2 = Q/4 + Diag(S + sigma A A* - eta D1, T + sigma B B* - eta D2) > 0`.
    LargeStep,
}

/// Everything needed to instantiate the non-ergodic and ergodic rate bounds.
#[derive(Debug, Clone)]
pub struct ComplexityConstants {
    pub case: ComplexityCase,
    pub c1: f64,
    pub c2: f64,
    /// The constant of the non-ergodic bound `min_i(...) <= c * rate_numerator / k`.
    pub c: f64,
    /// `Phi_1` (case I) or `Psi_1 + Xi_1` (case II) at the reference.
    pub rate_numerator: f64,
    /// `c * rate_numerator`.
    pub bound_numerator: f64,
    /// Ergodic feasibility constant: `||A*u^ + B*v^ - c|| <= sqrt(c3)/k`.
    pub c3: f64,
    pub d1: f64,
    /// Ergodic variational-inequality constant: the gap over the unit ball
    /// around the ergodic triple is `<= d2 / k`. Available for the small-step
    /// branch, where the bounding constant has a closed expression.
    pub d2: Option<f64>,
    /// Ergodic objective constant: `|theta(u^, v^) - theta(ref)| <= d3 / k`.
    pub d3: f64,
    pub phi1: f64,
    pub psi1: f64,
    pub xi1: f64,
    pub lambda1: f64,
    pub lambda_bar1: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    pub norm_h: f64,
    pub norm_s: f64,
    pub norm_t: f64,
    pub norm_q12: f64,
}

fn sym_eigen(m: &Matrix) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new((m + m.transpose()) * 0.5)
}

fn spectral_norm(m: &Matrix) -> f64 {
    sym_eigen(m)
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, &l| a.max(l.abs()))
}

fn sqrt_psd(m: &Matrix) -> Matrix {
    let eig = sym_eigen(m);
    let d = Matrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn inv_sqrt_pd(m: &Matrix, name: &str) -> Result<Matrix> {
    let eig = sym_eigen(m);
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &l| a.min(l));
    if min <= 1e-9 * max.max(1.0) {
        return Err(Error::ConstantsUndefined(format!(
            "{name} is not positive definite (lambda_min = {min:.3e})"
        )));
    }
    let d = Matrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

fn block_diag_mat(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = Matrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// Computes the constants of the rate bounds from the run history and a
/// reference solution. `case` defaults to the small-step branch when
/// `tau <= 1`, the large-step branch otherwise.
pub fn complexity_constants(
    prob: &CoupledProblem,
    params: &SolverParams,
    history: &RunHistory,
    reference: &ReferenceTriple,
    case: Option<ComplexityCase>,
    cap: usize,
) -> Result<ComplexityConstants> {
    let tau = params.tau;
    let sigma = params.sigma;
    let phi = prob.phi();
    let eta = phi.eta();

    let rec1 = history
        .record_at(1)
        .ok_or(Error::HistoryIncomplete("iterate 1"))?;
    let state1 = IterateState::new(prob, 1, rec1.u.clone(), rec1.v.clone(), rec1.x.clone())?;
    let lyap1 = lyapunov(prob, params, &history.init, &state1, Some(reference))?;
    let phi1 = lyap1.phi.expect("reference supplied");
    let psi1 = lyap1.psi.expect("reference supplied");
    let xi1 = lyap1.xi;
    let lambda1 = lyap1.lambda.expect("reference supplied");
    let lambda_bar1 = lyap1.lambda_bar.expect("reference supplied");

    let norm_a = prob.a().operator_norm(cap)?;
    let norm_b = prob.b().operator_norm(cap)?;
    let norm_s = params.s_op.operator_norm(cap)?;
    let norm_t = params.t_op.operator_norm(cap)?;
    let norm_h = phi.d1().operator_norm(cap)?.max(phi.d2().operator_norm(cap)?);
    let norm_q12 = phi.q().q12().operator_norm(cap)?;

    let c1 = 5.0
        * (sigma * norm_a * norm_a)
            .max(norm_q12)
            .max(norm_h)
            .max(norm_s)
            .max(norm_t);
    let c2 = 5.0 * (1.0 - tau).powi(2) * sigma * sigma * (norm_a * norm_a + norm_b * norm_b) + 1.0;

    // dense pieces
    let s_mat = params.s_op.materialize(cap)?;
    let t_mat = params.t_op.materialize(cap)?;
    let d1_mat = phi.d1().materialize(cap)?;
    let d2_mat = phi.d2().materialize(cap)?;
    let q_mat = phi.q().as_operator().materialize(cap)?;
    let aat = prob.a().gram(1.0).materialize(cap)?;
    let bbt = prob.b().gram(1.0).materialize(cap)?;
    let q12_mat = phi.q().q12().materialize(cap)?;
    let sqrt_q12 = sqrt_psd(&(q12_mat.transpose() * &q12_mat));

    let o_hat = block_diag_mat(
        &(&d1_mat + &s_mat),
        &(&d2_mat + &t_mat + &bbt * sigma + sqrt_q12),
    );

    let case = case.unwrap_or(if tau <= 1.0 {
        ComplexityCase::SmallStep
    } else {
        ComplexityCase::LargeStep
    });

    let x1e = &state1.x - &reference.x;
    let ts = tau * sigma;

    let (c, rate_numerator, c3) = match case {
        ComplexityCase::SmallStep => {
            if tau > 1.0 {
                return Err(Error::ConstantsUndefined(format!(
                    "the small-step branch needs tau <= 1, got {tau}"
                )));
            }
            let o1 = &q_mat * 0.25
                + block_diag_mat(
                    &(&s_mat + &aat * ((1.0 - tau) * sigma)),
                    &(&t_mat + &bbt * ((1.0 - tau) * sigma)),
                );
            let o1_inv_sqrt = inv_sqrt_pd(&o1, "O1")?;
            let ratio = spectral_norm(&(&o1_inv_sqrt * &o_hat * &o1_inv_sqrt));
            let c = if (1.0 - tau).abs() < 1e-14 {
                let zb = block_diag_mat(&Matrix::zeros(prob.u_dim(), prob.u_dim()), &bbt);
                let nb = spectral_norm(&(&o1_inv_sqrt * zb * &o1_inv_sqrt));
                c1 * (9.0 - 4.0 * tau) * ratio + c2 * (2.0 / sigma + (18.0 - 8.0 * tau) * nb)
            } else {
                c1 * (9.0 - 4.0 * tau) * ratio + c2 / ((1.0 - tau) * sigma)
            };
            let c3 = 2.0 * phi1 / ts + 2.0 * (x1e.norm() / ts).powi(2);
            (c, phi1, c3)
        }
        ComplexityCase::LargeStep => {
            if tau >= tau_limit() {
                return Err(Error::ConstantsUndefined(format!(
                    "the large-step branch needs tau < {:.6}, got {tau}",
                    tau_limit()
                )));
            }
            let m_mat = &q_mat * 0.25
                + block_diag_mat(&(&s_mat - &d1_mat * eta), &(&t_mat - &d2_mat * eta));
            let m_eig = sym_eigen(&m_mat);
            let m_min = m_eig.eigenvalues.iter().fold(f64::INFINITY, |a, &l| a.min(l));
            let m_max = m_eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l));
            if m_min < -1e-9 * m_max.max(1.0) {
                return Err(Error::ConstantsUndefined(format!(
                    "Q/4 + Diag(S - eta D1, T - eta D2) is not PSD (lambda_min = {m_min:.3e})"
                )));
            }
            let o2 = &m_mat + block_diag_mat(&(&aat * sigma), &(&bbt * sigma));
            let o2_inv_sqrt = inv_sqrt_pd(&o2, "O2")?;
            let ratio = spectral_norm(&(&o2_inv_sqrt * &o_hat * &o2_inv_sqrt));
            let rho = tau.min(1.0 + tau - tau * tau);
            let c = c1 * ratio * (1.0 + (6.0 * tau + 3.0) / rho) + c2 * tau / (sigma * rho);
            let numerator = psi1 + xi1;
            let c3 = 2.0 * numerator / ts + 2.0 * (x1e.norm() / ts).powi(2);
            (c, numerator, c3)
        }
    };

    // ergodic variational-inequality constant (small-step branch): any probe
    // in the unit ball around the ergodic triple has its initial Lyapunov
    // value bounded by c5, so the averaged gap is at most c5 / 2k
    let d2 = match case {
        ComplexityCase::SmallStep => {
            let (ud, vd) = (prob.u_dim(), prob.v_dim());
            let q22_blk = Matrix::from(q_mat.view((ud, ud), (vd, vd)));
            let c4_op = &q_mat * 0.5
                + block_diag_mat(
                    &(&d1_mat + &s_mat + &aat * (2.0 * sigma)),
                    &(q22_blk + &d2_mat + &t_mat),
                );
            let c4 = (1.0 / ts).max(spectral_norm(&c4_op));
            let c5 = (12.0 + 24.0 * (1.0 / tau - 1.0).powi(2)) * phi1 + 3.0 * c4 + 3.0 * c3;
            Some(0.5 * c5)
        }
        ComplexityCase::LargeStep => None,
    };
    // two-sided ergodic objective constant
    let upper = match case {
        ComplexityCase::SmallStep => lambda1,
        ComplexityCase::LargeStep => lambda_bar1,
    };
    let d3 = 0.5 * upper.max(reference.x.norm_squared() + c3);

    Ok(ComplexityConstants {
        case,
        c1,
        c2,
        c,
        rate_numerator,
        bound_numerator: c * rate_numerator,
        c3,
        d1: c3.sqrt(),
        d2,
        d3,
        phi1,
        psi1,
        xi1,
        lambda1,
        lambda_bar1,
        norm_a,
        norm_b,
        norm_h,
        norm_s,
        norm_t,
        norm_q12,
    })
}
