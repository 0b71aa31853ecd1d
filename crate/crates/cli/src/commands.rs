//! Command implementations. Each returns the process exit code.

use std::path::Path;
use std::time::Instant;

use madmm::conditions::{self, RateCase};
use madmm::diagnostics::{self, ComplexityCase};
use madmm::instances::{self, Instance, NonsmoothKind};
use madmm::linop::SelfAdjointOp;
use madmm::model::CoupledProblem;
use madmm::solver::{
    self, Backend, IterateState, ProxWeightSpec, ReferenceTriple, RunHistory, SolverConfig,
};

use crate::error::CliError;
use crate::exit_code;
use crate::schema::*;

fn fmt_f(v: f64) -> String {
    serde_json::Number::from_f64(v)
        .map(|n| n.to_string())
        .unwrap_or_default()
}

// ---------------------------------------------------------------------------
// Config resolution
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Clone)]
pub struct SolveOverrides {
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub force: bool,
}

fn backend_for(tag: BackendTag, kind: &NonsmoothKind) -> Backend {
    match tag {
        BackendTag::ProxIdentity => Backend::ProxIdentity,
        BackendTag::LinearSolve => Backend::LinearSolve,
        BackendTag::Auto => {
            if matches!(kind, NonsmoothKind::Zero) {
                Backend::LinearSolve
            } else {
                Backend::ProxIdentity
            }
        }
    }
}

fn weight_for(spec: &OpSpecFile, name: &str) -> Result<ProxWeightSpec, CliError> {
    Ok(match spec {
        OpSpecFile::Auto => ProxWeightSpec::Auto,
        OpSpecFile::Zero => ProxWeightSpec::Zero,
        OpSpecFile::ScaledIdentity { scale } => ProxWeightSpec::ScaledIdentity(*scale),
        OpSpecFile::Dense { matrix } => {
            let m = rows_to_mat(matrix, name)?;
            ProxWeightSpec::Explicit(SelfAdjointOp::from_matrix(&m)?)
        }
    })
}

/// Resolves the file config plus flag overrides into a runnable
/// [`SolverConfig`] and its echo. An absent step length resolves to 1.61 when
/// the large-step conditions verify and 1.0 otherwise.
pub fn resolve_config(
    file: &ConfigFile,
    inst: &Instance,
    prob: &CoupledProblem,
    ov: &SolveOverrides,
) -> Result<(SolverConfig, ConfigEchoFile), CliError> {
    let total_dim = inst.dims.u + inst.dims.v + inst.dims.x;
    let record_every = file
        .record_every
        .unwrap_or(if total_dim <= 200 { 1 } else { 10 });
    let mut cfg = SolverConfig {
        sigma: ov.sigma.unwrap_or(file.sigma),
        tau: 1.0,
        s_op: weight_for(&file.s, "S.matrix")?,
        t_op: weight_for(&file.t, "T.matrix")?,
        u_backend: backend_for(file.backend.u, &inst.p),
        v_backend: backend_for(file.backend.v, &inst.q),
        max_iters: ov.max_iters.unwrap_or(file.max_iters),
        kkt_tol: ov.tol.unwrap_or(file.kkt_tol),
        record_every,
        dense_cap: file.dense_cap.unwrap_or(madmm::linop::DEFAULT_DENSE_CAP),
        force: ov.force,
    };
    let (tau, tau_source) = match ov.tau.or(file.tau) {
        Some(t) => (t, if ov.tau.is_some() { "flag" } else { "config" }),
        None => {
            let params = solver::resolve_params(prob, &cfg)?;
            (
                conditions::recommended_tau(prob, &params, cfg.dense_cap)?,
                "auto",
            )
        }
    };
    cfg.tau = tau;
    cfg.validate()?;
    let echo = ConfigEchoFile {
        sigma: cfg.sigma,
        tau,
        tau_source: tau_source.into(),
        s: file.s.clone(),
        t: file.t.clone(),
        backend_u: format!("{:?}", cfg.u_backend),
        backend_v: format!("{:?}", cfg.v_backend),
        max_iters: cfg.max_iters,
        kkt_tol: cfg.kkt_tol,
        record_every,
        seed: file.seed,
        force: ov.force,
    };
    Ok((cfg, echo))
}

fn load_instance(path: &Path) -> Result<(Instance, Vec<u8>), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut de = serde_json::Deserializer::from_slice(&bytes);
    let file: InstanceFile =
        serde_path_to_error::deserialize(&mut de).map_err(|e| CliError::Schema {
            path: path.to_path_buf(),
            detail: format!("`{}`: {}", e.path(), e.inner()),
        })?;
    Ok((file.to_core()?, bytes))
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

pub fn cmd_generate(spec_path: &Path, out: &Path) -> Result<i32, CliError> {
    let spec: SpecFile = read_json(spec_path)?;
    let inst = instances::generate(&spec.to_core())?;
    write_json(out, &InstanceFile::from_core(&inst))?;
    Ok(exit_code::OK)
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

pub fn cmd_check(
    instance: &Path,
    config: &Path,
    clause: &str,
    out: Option<&Path>,
) -> Result<i32, CliError> {
    let (inst, _) = load_instance(instance)?;
    let prob = inst.problem()?;
    let cfg_file: ConfigFile = read_json(config)?;
    let (cfg, _) = resolve_config(&cfg_file, &inst, &prob, &SolveOverrides::default())?;
    let params = solver::resolve_params(&prob, &cfg)?;
    let cap = cfg.dense_cap;

    let report = match clause {
        "auto" | "global" => {
            if cfg.tau <= 1.0 {
                conditions::check_global_small_step(&prob, &params, cap)?
            } else {
                conditions::check_global_large_step(&prob, &params, cap)?
            }
        }
        "rate" => {
            let case = if cfg.tau <= 1.0 {
                RateCase::SmallStep
            } else {
                RateCase::LargeStep
            };
            conditions::check_rate_conditions(&prob, &params, case, cap)?
        }
        "quadratic" => {
            let qs = inst.quadratic_structure().ok_or_else(|| {
                CliError::Input(
                    "the quadratic clause applies only to purely quadratic couplings".into(),
                )
            })?;
            conditions::check_quadratic_coupling(&qs, prob.a(), prob.b(), &params, cap)?
        }
        other => {
            return Err(CliError::Input(format!(
                "unknown clause `{other}` (expected auto, global, rate or quadratic)"
            )))
        }
    };

    let file = CheckReportFile::from_core(&report);
    match out {
        Some(p) => write_json(p, &file)?,
        None => println!("{}", String::from_utf8_lossy(&to_json_bytes(&file))),
    }
    Ok(if report.unverified {
        exit_code::UNVERIFIED
    } else if report.pass {
        exit_code::OK
    } else {
        exit_code::CONDITION_FAIL
    })
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn write_series(path: &Path, hist: &RunHistory) -> Result<usize, CliError> {
    let mut s = String::new();
    s.push_str("# schema=madmm.series.v1\n");
    s.push_str("k,feas,kkt_bound_sq,theta_k,xi_k,phi_k,psi_k,objective,erg_feas\n");
    for r in &hist.records {
        let phi = r.phi.map(fmt_f).unwrap_or_default();
        let psi = r.psi.map(fmt_f).unwrap_or_default();
        let erg = r
            .ergodic
            .as_ref()
            .map(|e| fmt_f(e.feas))
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.k,
            fmt_f(r.feas),
            fmt_f(r.kkt_bound_sq),
            fmt_f(r.theta),
            fmt_f(r.xi),
            phi,
            psi,
            fmt_f(r.objective),
            erg,
        ));
    }
    std::fs::write(path, &s).map_err(|e| CliError::io(path, e))?;
    Ok(hist.records.len())
}

fn monotonicity_verdicts(prob: &CoupledProblem, hist: &RunHistory) -> Option<VerdictsFile> {
    let rf = hist.reference.as_ref()?;
    let mut phi_ok = true;
    let mut psi_ok = true;
    let mut prev_phi =
        diagnostics::phi_value(prob, &hist.params, &hist.init, &rf.u, &rf.v, &rf.x).ok()?;
    let mut prev_psi_xi: Option<f64> = None;
    for r in &hist.records {
        if let Some(phi) = r.phi {
            if phi > prev_phi + 1e-8 {
                phi_ok = false;
            }
            prev_phi = phi;
        }
        if let Some(psi) = r.psi {
            let val = psi + r.xi;
            if let Some(prev) = prev_psi_xi {
                if val > prev + 1e-8 {
                    psi_ok = false;
                }
            }
            prev_psi_xi = Some(val);
        }
    }
    Some(VerdictsFile {
        phi_monotone: phi_ok,
        psi_xi_monotone: psi_ok,
    })
}

pub fn cmd_solve(
    instance: &Path,
    config: &Path,
    overrides: &SolveOverrides,
    reference: Option<&Path>,
    out_dir: &Path,
) -> Result<i32, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let (inst, inst_bytes) = load_instance(instance)?;
    let prob = inst.problem()?;
    let cfg_file: ConfigFile = read_json(config)?;
    let (cfg, echo) = resolve_config(&cfg_file, &inst, &prob, overrides)?;
    let rf = match reference {
        Some(p) => Some(read_json::<TripleFile>(p)?.to_reference()),
        None => None,
    };

    let started = Instant::now();
    let init = IterateState::origin(&prob)?;
    let outcome = solver::run_with_reference(&prob, &cfg, init, rf);
    let elapsed = started.elapsed().as_secs_f64();
    eprintln!("solve finished in {elapsed:.3}s");

    let summary_path = out_dir.join("summary.json");
    match outcome {
        Ok((sol, hist)) => {
            let rows = write_series(&out_dir.join("series.csv"), &hist)?;
            let verdicts = monotonicity_verdicts(&prob, &hist);
            let feas = prob.residual(&sol.u, &sol.v)?.norm();
            let summary = SummaryFile {
                schema: "madmm.summary.v1".into(),
                instance_hash: sha256_hex(&inst_bytes),
                config: echo,
                status: if sol.converged {
                    "converged".into()
                } else {
                    "max_iters".into()
                },
                iterations: sol.iterations,
                rows_written: rows,
                kkt_bound: sol.kkt_bound,
                feas: Some(feas),
                objective: Some(sol.objective),
                final_point: Some(TripleFile {
                    u: vector_to_vec(&sol.u),
                    v: vector_to_vec(&sol.v),
                    x: vector_to_vec(&sol.x),
                }),
                diverged_at: None,
                verdicts,
            };
            write_json(&summary_path, &summary)?;
            Ok(exit_code::OK)
        }
        Err(madmm::Error::Diverged { iteration, reason }) => {
            let summary = SummaryFile {
                schema: "madmm.summary.v1".into(),
                instance_hash: sha256_hex(&inst_bytes),
                config: echo,
                status: "diverged".into(),
                iterations: iteration,
                rows_written: 0,
                kkt_bound: None,
                feas: None,
                objective: None,
                final_point: None,
                diverged_at: Some(iteration),
                verdicts: None,
            };
            write_json(&summary_path, &summary)?;
            eprintln!("divergence at iteration {iteration}: {reason}");
            Ok(exit_code::DIVERGENCE)
        }
        Err(e) => Err(e.into()),
    }
}

// ---------------------------------------------------------------------------
// rate-study
// ---------------------------------------------------------------------------

pub fn cmd_rate_study(
    instance: &Path,
    config: &Path,
    kmax: usize,
    reference: Option<&Path>,
    out_dir: &Path,
) -> Result<i32, CliError> {
    if kmax == 0 {
        return Err(CliError::Input("kmax must be >= 1".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let (inst, _) = load_instance(instance)?;
    let prob = inst.problem()?;
    let cfg_file: ConfigFile = read_json(config)?;
    let (mut cfg, _) = resolve_config(&cfg_file, &inst, &prob, &SolveOverrides::default())?;
    cfg.max_iters = kmax + 1;
    cfg.record_every = 1;
    cfg.force = true;

    // the study needs a reference solution; compute one when absent
    let rf = match reference {
        Some(p) => read_json::<TripleFile>(p)?.to_reference(),
        None => match inst.reference_solution() {
            Some(r) => r,
            None => {
                let pre = SolverConfig {
                    kkt_tol: 1e-12,
                    max_iters: 500_000,
                    record_every: usize::MAX,
                    force: true,
                    ..cfg.clone()
                };
                let (sol, _) = solver::run(&prob, &pre, IterateState::origin(&prob)?)?;
                if !sol.converged {
                    return Err(CliError::Input(
                        "preliminary high-accuracy run did not reach 1e-12; supply --reference"
                            .into(),
                    ));
                }
                eprintln!("reference computed by a preliminary run ({} iterations)", sol.iterations);
                ReferenceTriple {
                    u: sol.u,
                    v: sol.v,
                    x: sol.x,
                }
            }
        },
    };

    let started = Instant::now();
    let (_, hist) =
        solver::run_with_reference(&prob, &cfg, IterateState::origin(&prob)?, Some(rf.clone()))?;
    let case = if cfg.tau <= 1.0 {
        ComplexityCase::SmallStep
    } else {
        ComplexityCase::LargeStep
    };
    let cc =
        diagnostics::complexity_constants(&prob, &hist.params, &hist, &rf, Some(case), cfg.dense_cap)?;
    eprintln!("rate study finished in {:.3}s", started.elapsed().as_secs_f64());

    let mut s = String::new();
    s.push_str("# schema=madmm.rate.v1\n");
    s.push_str(&format!(
        "# case={}\n",
        match case {
            ComplexityCase::SmallStep => "small_step",
            ComplexityCase::LargeStep => "large_step",
        }
    ));
    s.push_str(&format!("# C={}\n", fmt_f(cc.c)));
    s.push_str(&format!("# D1={}\n", fmt_f(cc.d1)));
    s.push_str(&format!("# rate_numerator={}\n", fmt_f(cc.rate_numerator)));
    s.push_str(&format!("# bound={}\n", fmt_f(cc.bound_numerator)));
    s.push_str("k,min_bound_sq_times_k,feas_times_k,erg_feas_times_k\n");
    let recs = &hist.records;
    let mut running_min = f64::INFINITY;
    #[allow(clippy::needless_range_loop)]
    for k in 1..recs.len().min(kmax + 1) {
        running_min = running_min.min(recs[k].kkt_bound_sq);
        let erg = recs[k]
            .ergodic
            .as_ref()
            .map(|e| fmt_f(e.feas * e.k as f64))
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{}\n",
            k,
            fmt_f(running_min * k as f64),
            fmt_f(recs[k].feas * k as f64),
            erg,
        ));
    }
    let path = out_dir.join("rate.csv");
    std::fs::write(&path, &s).map_err(|e| CliError::io(&path, e))?;
    Ok(exit_code::OK)
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

pub fn cmd_certify(
    instance: &Path,
    config: &Path,
    probes: usize,
    seed: u64,
    iters: usize,
    out: &Path,
) -> Result<i32, CliError> {
    let (inst, _) = load_instance(instance)?;
    let prob = inst.problem()?;
    let cfg_file: ConfigFile = read_json(config)?;
    let (mut cfg, _) = resolve_config(&cfg_file, &inst, &prob, &SolveOverrides::default())?;
    cfg.max_iters = iters;
    cfg.record_every = 1;
    cfg.kkt_tol = 1e-300;
    cfg.force = true;

    let (_, hist) = solver::run(&prob, &cfg, IterateState::origin(&prob)?)?;
    let params = &hist.params;
    let mut states = vec![hist.init.clone()];
    for r in &hist.records {
        states.push(IterateState::new(&prob, r.k, r.u.clone(), r.v.clone(), r.x.clone())?);
    }

    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    let mut checked_first = false;
    let mut checked_second = false;
    let mut worst_first: Option<f64> = None;
    let mut worst_second: Option<f64> = None;
    let mut pass = true;
    for k in 1..states.len() {
        let probe_set = diagnostics::sample_probes(&prob, probes, seed.wrapping_add(k as u64), 1.5);
        let prev2 = if k >= 2 { Some(&states[k - 2]) } else { None };
        let rep = diagnostics::descent_certificate(
            &prob,
            params,
            prev2,
            &states[k - 1],
            &states[k],
            &probe_set,
        )?;
        evaluated += rep.evaluated;
        skipped += rep.skipped;
        checked_first |= rep.checked_first;
        checked_second |= rep.checked_second;
        worst_first = match (worst_first, rep.worst_slack_first) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        worst_second = match (worst_second, rep.worst_slack_second) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        pass &= rep.pass;
    }
    if evaluated == 0 {
        return Err(CliError::Input(
            "all probes fell outside dom(p) x dom(q); supply a domain-aware sampler".into(),
        ));
    }

    let file = CertificateFile {
        schema: "madmm.certify.v1".into(),
        iterations: states.len() - 1,
        probes_per_iteration: probes,
        seed,
        evaluated,
        skipped,
        checked_first,
        checked_second,
        worst_slack_first: worst_first,
        worst_slack_second: worst_second,
        rel_slack_tolerance: diagnostics::DESCENT_REL_SLACK,
        pass,
    };
    write_json(out, &file)?;
    Ok(if pass {
        exit_code::OK
    } else {
        exit_code::CONDITION_FAIL
    })
}
