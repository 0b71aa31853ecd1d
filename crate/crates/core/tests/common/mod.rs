//! Shared fixtures for the integration suites: the instance corpus, oracle
//! reference solvers, and config helpers.

use madmm::instances::{
    self, Dims, Family, Instance, InstanceSpec, NonsmoothKind, SetDescriptor,
};
use madmm::linop::SelfAdjointOp;
use madmm::solver::{
    self, Backend, IterateState, ProxWeightSpec, ReferenceTriple, SolverConfig,
};
use madmm::{Matrix, Vector};

/// Independent oracle for smooth quadratic instances: solve the dense KKT
/// linear system `[[W, G]; [G^T, 0]] [w; x] = [0; c]` directly.
pub fn dense_kkt_reference(inst: &Instance) -> ReferenceTriple {
    let qt = inst
        .q_tilde
        .clone()
        .expect("dense KKT oracle needs a quadratic coupling");
    let (u, v, x) = (inst.dims.u, inst.dims.v, inst.dims.x);
    let n = u + v;
    let mut kkt = Matrix::zeros(n + x, n + x);
    kkt.view_mut((0, 0), (n, n)).copy_from(&qt);
    let mut g = Matrix::zeros(n, x);
    g.view_mut((0, 0), (u, x)).copy_from(&inst.a);
    g.view_mut((u, 0), (v, x)).copy_from(&inst.b);
    kkt.view_mut((0, n), (n, x)).copy_from(&g);
    kkt.view_mut((n, 0), (x, n)).copy_from(&g.transpose());
    let mut rhs = Vector::zeros(n + x);
    rhs.rows_mut(n, x).copy_from(&inst.c);
    let sol = kkt
        .full_piv_lu()
        .solve(&rhs)
        .expect("KKT system is solvable for generated instances");
    ReferenceTriple {
        u: Vector::from(sol.rows(0, u)),
        v: Vector::from(sol.rows(u, v)),
        x: Vector::from(sol.rows(n, x)),
    }
}

fn is_zero(kind: &NonsmoothKind) -> bool {
    matches!(kind, NonsmoothKind::Zero)
}

/// Per-block backend choice: exact linear solves for smooth blocks, the
/// prox-identity reduction otherwise.
pub fn default_cfg(inst: &Instance) -> SolverConfig {
    let (ub, sw) = if is_zero(&inst.p) {
        (Backend::LinearSolve, ProxWeightSpec::Zero)
    } else {
        (Backend::ProxIdentity, ProxWeightSpec::Auto)
    };
    let (vb, tw) = if is_zero(&inst.q) {
        (Backend::LinearSolve, ProxWeightSpec::Zero)
    } else {
        (Backend::ProxIdentity, ProxWeightSpec::Auto)
    };
    SolverConfig {
        sigma: 1.0,
        tau: 1.0,
        s_op: sw,
        t_op: tw,
        u_backend: ub,
        v_backend: vb,
        max_iters: 10_000,
        kkt_tol: 1e-9,
        record_every: 1,
        dense_cap: 2000,
        force: true,
    }
}

/// Reference triple at tolerance 1e-12: the embedded analytic solution, the
/// dense KKT oracle for smooth quadratics, or a high-accuracy run otherwise.
pub fn reference_for(inst: &Instance) -> ReferenceTriple {
    if let Some(r) = inst.reference_solution() {
        return r;
    }
    if is_zero(&inst.p) && is_zero(&inst.q) && inst.q_tilde.is_some() && inst.k1.is_none() {
        return dense_kkt_reference(inst);
    }
    let prob = inst.problem().unwrap();
    let cfg = SolverConfig {
        kkt_tol: 1e-12,
        max_iters: 500_000,
        record_every: usize::MAX,
        ..default_cfg(inst)
    };
    let (sol, _) = solver::run(&prob, &cfg, IterateState::origin(&prob).unwrap()).unwrap();
    assert!(
        sol.converged,
        "reference run failed to reach 1e-12 on {:?} seed {}",
        inst.family, inst.seed
    );
    ReferenceTriple {
        u: sol.u,
        v: sol.v,
        x: sol.x,
    }
}

/// Semi-proximal weights `(lambda_max(base) + extra) I - base` for both
/// blocks. They keep the prox-identity reduction exact while dominating the
/// curvature gap by `extra` (used to satisfy `S - eta D >= 0` on
/// projection-penalty instances).
pub fn inflated_weights(
    inst: &Instance,
    sigma: f64,
    extra: f64,
) -> (SelfAdjointOp, SelfAdjointOp) {
    let prob = inst.problem().unwrap();
    let phi = prob.phi();
    let base_u = SelfAdjointOp::sum_of(vec![
        prob.a().gram(sigma),
        phi.q().q11().clone(),
        phi.d1().clone(),
    ])
    .unwrap();
    let base_v = SelfAdjointOp::sum_of(vec![
        prob.b().gram(sigma),
        phi.q().q22().clone(),
        phi.d2().clone(),
    ])
    .unwrap();
    let au = base_u.max_eigenvalue(2000).unwrap() + extra;
    let av = base_v.max_eigenvalue(2000).unwrap() + extra;
    (
        base_u.identity_shift_minus(au),
        base_v.identity_shift_minus(av),
    )
}

fn quad_spec(seed: u64, dims: Dims, cond: f64, p: NonsmoothKind, q: NonsmoothKind) -> InstanceSpec {
    InstanceSpec {
        conditioning: cond,
        p: Some(p),
        q: Some(q),
        ..InstanceSpec::new(Family::QuadraticCoupled, dims, seed)
    }
}

fn proj_spec(seed: u64, dims: Dims, k1: SetDescriptor) -> InstanceSpec {
    InstanceSpec {
        conditioning: 5.0,
        rho: Some(0.04),
        k1: Some(k1),
        ..InstanceSpec::new(Family::ProjectionPenalty, dims, seed)
    }
}

fn sep_spec(seed: u64, n: usize, p: NonsmoothKind, q: NonsmoothKind) -> InstanceSpec {
    InstanceSpec {
        p: Some(p),
        q: Some(q),
        ..InstanceSpec::new(Family::SeparableRecovery, Dims { u: n, v: n, x: n }, seed)
    }
}

/// The standard corpus: one analytic instance, six quadratic couplings, four
/// projection penalties, four separable instances.
pub fn corpus() -> Vec<Instance> {
    let mut out = vec![instances::make_analytic_tiny()];
    let quads = [
        quad_spec(11, Dims { u: 4, v: 3, x: 2 }, 4.0, NonsmoothKind::Zero, NonsmoothKind::Zero),
        quad_spec(12, Dims { u: 5, v: 4, x: 3 }, 8.0, NonsmoothKind::Zero, NonsmoothKind::Zero),
        quad_spec(
            13,
            Dims { u: 4, v: 4, x: 2 },
            4.0,
            NonsmoothKind::L1 { lambda: 0.05 },
            NonsmoothKind::L1 { lambda: 0.08 },
        ),
        quad_spec(
            14,
            Dims { u: 3, v: 3, x: 2 },
            6.0,
            NonsmoothKind::L1 { lambda: 0.1 },
            NonsmoothKind::Nonneg,
        ),
        quad_spec(
            15,
            Dims { u: 4, v: 3, x: 3 },
            5.0,
            NonsmoothKind::Box { lo: -1.0, hi: 1.0 },
            NonsmoothKind::Zero,
        ),
        quad_spec(
            16,
            Dims { u: 3, v: 4, x: 2 },
            3.0,
            NonsmoothKind::Zero,
            NonsmoothKind::Ball { radius: 2.0 },
        ),
    ];
    let projs = [
        proj_spec(21, Dims { u: 3, v: 3, x: 2 }, SetDescriptor::Box { lo: 0.0, hi: 1.0 }),
        proj_spec(22, Dims { u: 4, v: 3, x: 2 }, SetDescriptor::Ball { radius: 1.5 }),
        proj_spec(23, Dims { u: 3, v: 2, x: 2 }, SetDescriptor::Nonneg),
        proj_spec(24, Dims { u: 2, v: 2, x: 2 }, SetDescriptor::Box { lo: -0.5, hi: 0.5 }),
    ];
    let seps = [
        sep_spec(31, 4, NonsmoothKind::L1 { lambda: 0.1 }, NonsmoothKind::Nonneg),
        sep_spec(32, 5, NonsmoothKind::L1 { lambda: 0.2 }, NonsmoothKind::L1 { lambda: 0.15 }),
        sep_spec(33, 4, NonsmoothKind::Box { lo: -1.0, hi: 2.0 }, NonsmoothKind::Nonneg),
        sep_spec(34, 5, NonsmoothKind::Nonneg, NonsmoothKind::L1 { lambda: 0.05 }),
    ];
    out.extend(quads.iter().map(|s| instances::generate(s).unwrap()));
    out.extend(projs.iter().map(|s| instances::generate(s).unwrap()));
    out.extend(seps.iter().map(|s| instances::generate(s).unwrap()));
    out
}

/// Rebuilds a full `IterateState` (caches recomputed) from a history record.
pub fn state_from_record(
    prob: &madmm::CoupledProblem,
    rec: &madmm::solver::HistoryRecord,
) -> IterateState {
    IterateState::new(prob, rec.k, rec.u.clone(), rec.v.clone(), rec.x.clone()).unwrap()
}
