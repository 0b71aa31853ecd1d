//! Problem representation: prox-capable nonsmooth terms, the smooth coupling
//! with its curvature envelope `(Q, H, eta)`, constraint data, and a
//! proximal-operator toolbox.
//!
//! Extended-real values use `f64::INFINITY` as the explicit sentinel;
//! arithmetic with it propagates, so indicators are first-class.

use std::fmt;
use std::sync::Arc;

use nalgebra::Cholesky;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linop::{seminorm_sq, BlockCurvature, LinearMap, SelfAdjointOp};
use crate::sampling::{normal_vector, uniform_ball};
use crate::{Matrix, Vector};

type ValueFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
type ProxFn = Arc<dyn Fn(&Vector, f64) -> Vector + Send + Sync>;
type SampleFn = Arc<dyn Fn(&mut ChaCha8Rng) -> Vector + Send + Sync>;
type GradFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// Stacks `(u, v)` into a single product-space vector `w`.
pub fn stack(u: &Vector, v: &Vector) -> Vector {
    let mut w = Vector::zeros(u.len() + v.len());
    w.rows_mut(0, u.len()).copy_from(u);
    w.rows_mut(u.len(), v.len()).copy_from(v);
    w
}

/// Splits a product-space vector back into `(u, v)`.
pub fn split(w: &Vector, u_dim: usize) -> (Vector, Vector) {
    (
        Vector::from(w.rows(0, u_dim)),
        Vector::from(w.rows(u_dim, w.len() - u_dim)),
    )
}

// ---------------------------------------------------------------------------
// Proximal toolbox
// ---------------------------------------------------------------------------

/// Componentwise soft thresholding; the prox of `lambda ||.||_1`.
pub fn soft_threshold(z: &Vector, lambda: f64) -> Result<Vector> {
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "soft_threshold needs lambda >= 0, got {lambda}"
        )));
    }
    Ok(z.map(|zi| {
        if zi > lambda {
            zi - lambda
        } else if zi < -lambda {
            zi + lambda
        } else {
            0.0
        }
    }))
}

/// Componentwise clamp onto `[lo, hi]`.
pub fn project_box(z: &Vector, lo: &Vector, hi: &Vector) -> Result<Vector> {
    if lo.len() != z.len() || hi.len() != z.len() {
        return Err(Error::DimMismatch {
            context: "project_box",
            expected: z.len(),
            got: lo.len().min(hi.len()),
        });
    }
    for i in 0..z.len() {
        if lo[i] > hi[i] {
            return Err(Error::InvalidParameter(format!(
                "project_box needs lo <= hi componentwise; component {i} has lo={} hi={}",
                lo[i], hi[i]
            )));
        }
    }
    Ok(Vector::from_fn(z.len(), |i, _| z[i].max(lo[i]).min(hi[i])))
}

pub fn project_nonneg(z: &Vector) -> Vector {
    z.map(|zi| zi.max(0.0))
}

/// Radial projection onto the closed ball `{t : ||t - center|| <= radius}`.
pub fn project_ball(z: &Vector, center: &Vector, radius: f64) -> Result<Vector> {
    if radius <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "project_ball needs radius > 0, got {radius}"
        )));
    }
    if center.len() != z.len() {
        return Err(Error::DimMismatch {
            context: "project_ball",
            expected: z.len(),
            got: center.len(),
        });
    }
    let d = z - center;
    let n = d.norm();
    if n <= radius {
        Ok(z.clone())
    } else {
        Ok(center + d * (radius / n))
    }
}

// ---------------------------------------------------------------------------
// ProxTerm
// ---------------------------------------------------------------------------

/// Closed-form families for the nonsmooth terms. The tag drives the
/// linear-solve backend dispatch and file serialization.
#[derive(Debug, Clone)]
pub enum ProxKind {
    Zero,
    L1 { lambda: f64 },
    BoxIndicator { lo: Vector, hi: Vector },
    NonnegIndicator,
    BallIndicator { center: Vector, radius: f64 },
    /// `t -> 0.5 <t, P t> + <b, t>` with `P` positive semidefinite.
    Quadratic { p: Matrix, b: Vector },
    Custom,
}

/// A closed proper convex term with an exact prox oracle and a seeded sampler
/// of points with finite value.
#[derive(Clone)]
pub struct ProxTerm {
    dim: usize,
    kind: ProxKind,
    value: ValueFn,
    prox: ProxFn,
    sampler: SampleFn,
}

impl fmt::Debug for ProxTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProxTerm(dim {}, {:?})", self.dim, self.kind)
    }
}

impl ProxTerm {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            kind: ProxKind::Zero,
            value: Arc::new(|_| 0.0),
            prox: Arc::new(|z, _| z.clone()),
            sampler: Arc::new(move |rng| normal_vector(rng, dim)),
        }
    }

    pub fn l1(dim: usize, lambda: f64) -> Result<Self> {
        if lambda < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "l1 weight must be nonnegative, got {lambda}"
            )));
        }
        Ok(Self {
            dim,
            kind: ProxKind::L1 { lambda },
            value: Arc::new(move |t: &Vector| lambda * t.iter().map(|x| x.abs()).sum::<f64>()),
            prox: Arc::new(move |z: &Vector, alpha: f64| {
                soft_threshold(z, lambda / alpha).expect("lambda/alpha >= 0")
            }),
            sampler: Arc::new(move |rng| normal_vector(rng, dim)),
        })
    }

    pub fn box_indicator(lo: Vector, hi: Vector) -> Result<Self> {
        let dim = lo.len();
        project_box(&Vector::zeros(dim), &lo, &hi)?; // validates bounds
        let (l2, h2) = (lo.clone(), hi.clone());
        let (l3, h3) = (lo.clone(), hi.clone());
        Ok(Self {
            dim,
            kind: ProxKind::BoxIndicator { lo: lo.clone(), hi: hi.clone() },
            value: Arc::new(move |t: &Vector| {
                let tol = 1e-9;
                for i in 0..t.len() {
                    let scale = 1.0 + lo[i].abs().max(hi[i].abs());
                    if t[i] < lo[i] - tol * scale || t[i] > hi[i] + tol * scale {
                        return f64::INFINITY;
                    }
                }
                0.0
            }),
            prox: Arc::new(move |z: &Vector, _| project_box(z, &l2, &h2).expect("validated bounds")),
            sampler: Arc::new(move |rng| {
                Vector::from_fn(dim, |i, _| {
                    let t: f64 = rand::Rng::random(rng);
                    l3[i] + t * (h3[i] - l3[i])
                })
            }),
        })
    }

    pub fn nonneg(dim: usize) -> Self {
        Self {
            dim,
            kind: ProxKind::NonnegIndicator,
            value: Arc::new(|t: &Vector| {
                if t.iter().all(|&x| x >= -1e-9) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }),
            prox: Arc::new(|z, _| project_nonneg(z)),
            sampler: Arc::new(move |rng| normal_vector(rng, dim).map(|x| x.abs())),
        }
    }

    pub fn ball_indicator(center: Vector, radius: f64) -> Result<Self> {
        let dim = center.len();
        project_ball(&Vector::zeros(dim), &center, radius)?; // validates radius
        let (c2, c3, c4) = (center.clone(), center.clone(), center.clone());
        Ok(Self {
            dim,
            kind: ProxKind::BallIndicator { center, radius },
            value: Arc::new(move |t: &Vector| {
                if (t - &c2).norm() <= radius * (1.0 + 1e-9) + 1e-9 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }),
            prox: Arc::new(move |z: &Vector, _| project_ball(z, &c3, radius).expect("validated")),
            sampler: Arc::new(move |rng| &c4 + uniform_ball(rng, dim, radius * 0.9)),
        })
    }

    pub fn quadratic(p: Matrix, b: Vector) -> Result<Self> {
        if p.nrows() != p.ncols() || p.nrows() != b.len() {
            return Err(Error::DimMismatch {
                context: "ProxTerm::quadratic",
                expected: b.len(),
                got: p.nrows(),
            });
        }
        let dim = b.len();
        let sym = (&p + p.transpose()) * 0.5;
        let (p2, b2) = (sym.clone(), b.clone());
        let (p3, b3) = (sym.clone(), b.clone());
        Ok(Self {
            dim,
            kind: ProxKind::Quadratic { p: sym, b },
            value: Arc::new(move |t: &Vector| 0.5 * t.dot(&(&p2 * t)) + b2.dot(t)),
            prox: Arc::new(move |z: &Vector, alpha: f64| {
                let m = &p3 + Matrix::identity(dim, dim) * alpha;
                let rhs = z * alpha - &b3;
                Cholesky::new(m)
                    .expect("P psd and alpha > 0 make P + alpha I positive definite")
                    .solve(&rhs)
            }),
            sampler: Arc::new(move |rng| normal_vector(rng, dim)),
        })
    }

    pub fn custom<V, P, S>(dim: usize, value: V, prox: P, sampler: S) -> Self
    where
        V: Fn(&Vector) -> f64 + Send + Sync + 'static,
        P: Fn(&Vector, f64) -> Vector + Send + Sync + 'static,
        S: Fn(&mut ChaCha8Rng) -> Vector + Send + Sync + 'static,
    {
        Self {
            dim,
            kind: ProxKind::Custom,
            value: Arc::new(value),
            prox: Arc::new(prox),
            sampler: Arc::new(sampler),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ProxKind {
        &self.kind
    }

    /// Extended-real value; `f64::INFINITY` outside the domain.
    pub fn value(&self, t: &Vector) -> Result<f64> {
        if t.len() != self.dim {
            return Err(Error::DimMismatch {
                context: "ProxTerm::value",
                expected: self.dim,
                got: t.len(),
            });
        }
        Ok((self.value)(t))
    }

    /// `argmin_t { value(t) + (alpha/2) ||t - z||^2 }` with `alpha > 0`.
    pub fn prox(&self, z: &Vector, alpha: f64) -> Result<Vector> {
        if z.len() != self.dim {
            return Err(Error::DimMismatch {
                context: "ProxTerm::prox",
                expected: self.dim,
                got: z.len(),
            });
        }
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "prox weight must be positive, got {alpha}"
            )));
        }
        Ok((self.prox)(z, alpha))
    }

    /// Seeded draw from the domain (finite value guaranteed by construction).
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vector {
        (self.sampler)(rng)
    }

    pub fn sample_seeded(&self, seed: u64) -> Vector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample(&mut rng)
    }
}

// ---------------------------------------------------------------------------
// SmoothCoupling
// ---------------------------------------------------------------------------

/// Data of a quadratically coupled smooth objective
/// `phi(w) = 0.5 <w, Qt w> + f(u) + g(v)` with quadratic separable parts
/// `f(u) = 0.5 <u, Sigma_f u>`, `g(v) = 0.5 <v, Sigma_g v>`.
#[derive(Debug, Clone)]
pub struct QuadraticStructure {
    pub q_tilde: Matrix,
    pub sigma_f: Matrix,
    pub sigma_g: Matrix,
    pub u_dim: usize,
}

impl QuadraticStructure {
    pub fn pure(q_tilde: Matrix, u_dim: usize) -> Self {
        let n = q_tilde.nrows();
        let v_dim = n - u_dim;
        Self {
            q_tilde,
            sigma_f: Matrix::zeros(u_dim, u_dim),
            sigma_g: Matrix::zeros(v_dim, v_dim),
            u_dim,
        }
    }

    /// Full (constant) Hessian `Qt + Diag(Sigma_f, Sigma_g)`.
    pub fn hessian(&self) -> Matrix {
        let mut w = self.q_tilde.clone();
        let u = self.u_dim;
        let v = self.q_tilde.nrows() - u;
        for i in 0..u {
            for j in 0..u {
                w[(i, j)] += self.sigma_f[(i, j)];
            }
        }
        for i in 0..v {
            for j in 0..v {
                w[(u + i, u + j)] += self.sigma_g[(i, j)];
            }
        }
        w
    }
}

/// The smooth convex coupling `phi` with its curvature envelope.
///
/// The envelope consists of block curvature `Q` (lower bound), the
/// block-diagonal gap `H = Diag(D1, D2)` and the cross-term constant
/// `eta in [0, 1]`; `eta = 1` is always admissible, `eta = 0` is exact for
/// quadratic couplings.
#[derive(Clone)]
pub struct SmoothCoupling {
    u_dim: usize,
    v_dim: usize,
    value: ValueFn,
    gradient: GradFn,
    q_lower: BlockCurvature,
    d1: SelfAdjointOp,
    d2: SelfAdjointOp,
    eta: f64,
    constant_hessian: Option<Arc<Matrix>>,
}

impl fmt::Debug for SmoothCoupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "SmoothCoupling(u_dim {}, v_dim {}, eta {})",
            self.u_dim, self.v_dim, self.eta
        )
    }
}

impl SmoothCoupling {
    #[allow(clippy::too_many_arguments)]
    pub fn new<V, G>(
        u_dim: usize,
        v_dim: usize,
        value: V,
        gradient: G,
        q_lower: BlockCurvature,
        d1: SelfAdjointOp,
        d2: SelfAdjointOp,
        eta: f64,
    ) -> Result<Self>
    where
        V: Fn(&Vector) -> f64 + Send + Sync + 'static,
        G: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        if q_lower.u_dim() != u_dim || q_lower.v_dim() != v_dim {
            return Err(Error::DimMismatch {
                context: "SmoothCoupling: Q blocks",
                expected: u_dim + v_dim,
                got: q_lower.dim(),
            });
        }
        if d1.dim() != u_dim || d2.dim() != v_dim {
            return Err(Error::DimMismatch {
                context: "SmoothCoupling: H blocks",
                expected: u_dim + v_dim,
                got: d1.dim() + d2.dim(),
            });
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!(
                "eta must lie in [0, 1], got {eta}"
            )));
        }
        Ok(Self {
            u_dim,
            v_dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            q_lower,
            d1,
            d2,
            eta,
            constant_hessian: None,
        })
    }

    /// Identically zero coupling (separable problems).
    pub fn zero(u_dim: usize, v_dim: usize) -> Self {
        let dim = u_dim + v_dim;
        Self::new(
            u_dim,
            v_dim,
            |_| 0.0,
            move |_| Vector::zeros(dim),
            BlockCurvature::zero(u_dim, v_dim),
            SelfAdjointOp::zero(u_dim),
            SelfAdjointOp::zero(v_dim),
            0.0,
        )
        .expect("zero coupling is well formed")
        .with_constant_hessian(Matrix::zeros(dim, dim))
    }

    /// Quadratic coupling; the envelope is exact (`H = 0`) and `eta = 0`.
    pub fn quadratic(qs: &QuadraticStructure) -> Result<Self> {
        let w_mat = qs.hessian();
        let n = w_mat.nrows();
        if qs.u_dim == 0 || qs.u_dim >= n {
            return Err(Error::InvalidParameter(format!(
                "quadratic coupling needs 0 < u_dim < {n}, got {}",
                qs.u_dim
            )));
        }
        let sym = (&w_mat + w_mat.transpose()) * 0.5;
        let q_lower = BlockCurvature::from_matrix(&sym, qs.u_dim)?;
        let v_dim = n - qs.u_dim;
        let m1 = Arc::new(sym.clone());
        let m2 = Arc::clone(&m1);
        let this = Self::new(
            qs.u_dim,
            v_dim,
            move |w: &Vector| 0.5 * w.dot(&(&*m1 * w)),
            move |w: &Vector| &*m2 * w,
            q_lower,
            SelfAdjointOp::zero(qs.u_dim),
            SelfAdjointOp::zero(v_dim),
            0.0,
        )?;
        Ok(this.with_constant_hessian(sym))
    }

    /// Records the exact constant Hessian (quadratic couplings only), which
    /// enables the exact cross-term validation path.
    pub fn with_constant_hessian(mut self, w: Matrix) -> Self {
        self.constant_hessian = Some(Arc::new(w));
        self
    }

    pub fn u_dim(&self) -> usize {
        self.u_dim
    }

    pub fn v_dim(&self) -> usize {
        self.v_dim
    }

    pub fn w_dim(&self) -> usize {
        self.u_dim + self.v_dim
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn q(&self) -> &BlockCurvature {
        &self.q_lower
    }

    pub fn d1(&self) -> &SelfAdjointOp {
        &self.d1
    }

    pub fn d2(&self) -> &SelfAdjointOp {
        &self.d2
    }

    pub fn constant_hessian(&self) -> Option<&Matrix> {
        self.constant_hessian.as_deref()
    }

    /// `H = Diag(D1, D2)` assembled on the product space.
    pub fn h_op(&self) -> SelfAdjointOp {
        SelfAdjointOp::block_diag(&self.d1, &self.d2)
    }

    pub fn value(&self, w: &Vector) -> Result<f64> {
        if w.len() != self.w_dim() {
            return Err(Error::DimMismatch {
                context: "SmoothCoupling::value",
                expected: self.w_dim(),
                got: w.len(),
            });
        }
        Ok((self.value)(w))
    }

    pub fn value_uv(&self, u: &Vector, v: &Vector) -> Result<f64> {
        self.value(&stack(u, v))
    }

    pub fn gradient(&self, w: &Vector) -> Result<Vector> {
        if w.len() != self.w_dim() {
            return Err(Error::DimMismatch {
                context: "SmoothCoupling::gradient",
                expected: self.w_dim(),
                got: w.len(),
            });
        }
        Ok((self.gradient)(w))
    }
}

/// The quadratic majorant `phi_hat(w; anchor) = phi(anchor)
/// + <grad phi(anchor), w - anchor> + 0.5 ||w - anchor||^2_{Q+H}`.
pub fn majorized_phi(phi: &SmoothCoupling, w: &Vector, anchor: &Vector) -> Result<f64> {
    if w.len() != phi.w_dim() || anchor.len() != phi.w_dim() {
        return Err(Error::DimMismatch {
            context: "majorized_phi",
            expected: phi.w_dim(),
            got: w.len().min(anchor.len()),
        });
    }
    let d = w - anchor;
    let g = phi.gradient(anchor)?;
    let quad = d.dot(&phi.q().apply(&d)?) + seminorm_sq(&phi.h_op(), &d)?;
    Ok(phi.value(anchor)? + g.dot(&d) + 0.5 * quad)
}

// ---------------------------------------------------------------------------
// Envelope validation
// ---------------------------------------------------------------------------

/// Result of the cross-term (`eta`) validation.
#[derive(Debug, Clone)]
pub enum CrossTermCheck {
    /// Exact path for quadratic couplings: `W12 - Q12` compared densely.
    ExactQuadratic { worst_excess: f64, failures: usize },
    /// Finite-difference secant sampling; violations are warnings because the
    /// true generalized Hessian is unavailable at kink points.
    SampledSecant { worst_excess: f64, warnings: usize },
}

/// Report of the majorization-sandwich validation.
#[derive(Debug, Clone)]
pub struct EnvelopeReport {
    pub samples: usize,
    pub lower_failures: usize,
    pub upper_failures: usize,
    /// Most positive violation of the lower (convexity) bound.
    pub worst_lower_violation: f64,
    /// Most positive violation of the upper (majorization) bound.
    pub worst_upper_violation: f64,
    pub cross: CrossTermCheck,
    pub pass: bool,
}

/// Samples pairs `(w, w')` and asserts the majorization sandwich
///
/// ```text
/// phi(w') + <grad phi(w'), w - w'> + 0.5 ||w - w'||_Q^2  <=  phi(w)  <=  phi_hat(w; w')
/// ```
///
/// within `1e-8 * (1 + |phi(w)|)`, and validates the declared `eta` bound on
/// the cross term.
pub fn validate_envelope(phi: &SmoothCoupling, sampler_seed: u64, n_samples: usize) -> Result<EnvelopeReport> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampler_seed);
    let dim = phi.w_dim();

    let mut lower_failures = 0usize;
    let mut upper_failures = 0usize;
    let mut worst_lower = f64::NEG_INFINITY;
    let mut worst_upper = f64::NEG_INFINITY;

    for _ in 0..n_samples {
        let w = normal_vector(&mut rng, dim) * 2.0;
        let anchor = normal_vector(&mut rng, dim) * 2.0;
        let fw = phi.value(&w)?;
        let tol = 1e-8 * (1.0 + fw.abs());

        let d = &w - &anchor;
        let lower =
            phi.value(&anchor)? + phi.gradient(&anchor)?.dot(&d) + 0.5 * d.dot(&phi.q().apply(&d)?);
        let lower_violation = lower - fw; // positive => convexity lower bound broken
        worst_lower = worst_lower.max(lower_violation);
        if lower_violation > tol {
            lower_failures += 1;
        }

        let upper = majorized_phi(phi, &w, &anchor)?;
        let upper_violation = fw - upper; // positive => majorization broken
        worst_upper = worst_upper.max(upper_violation);
        if upper_violation > tol {
            upper_failures += 1;
        }
    }

    let cross = validate_cross_term(phi, &mut rng, n_samples)?;
    let cross_ok = match &cross {
        CrossTermCheck::ExactQuadratic { failures, .. } => *failures == 0,
        CrossTermCheck::SampledSecant { .. } => true, // warnings only
    };

    Ok(EnvelopeReport {
        samples: n_samples,
        lower_failures,
        upper_failures,
        worst_lower_violation: worst_lower,
        worst_upper_violation: worst_upper,
        cross,
        pass: lower_failures == 0 && upper_failures == 0 && cross_ok,
    })
}

fn cross_excess(
    phi: &SmoothCoupling,
    w12_minus_q12: &Matrix,
    u: &Vector,
    v: &Vector,
) -> Result<f64> {
    let lhs = u.dot(&(w12_minus_q12 * v)).abs();
    let rhs = 0.5
        * phi.eta()
        * (seminorm_sq(phi.d1(), u)? + seminorm_sq(phi.d2(), v)?);
    Ok(lhs - rhs - 1e-10 * (1.0 + lhs.abs()))
}

fn validate_cross_term(
    phi: &SmoothCoupling,
    rng: &mut ChaCha8Rng,
    n_samples: usize,
) -> Result<CrossTermCheck> {
    let (ud, vd) = (phi.u_dim(), phi.v_dim());
    let q12_mat = phi.q().q12().materialize(crate::linop::DEFAULT_DENSE_CAP)?;

    if let Some(w_mat) = phi.constant_hessian() {
        let w12 = Matrix::from(w_mat.view((0, ud), (ud, vd)));
        let diff = &w12 - &q12_mat;
        let mut worst = f64::NEG_INFINITY;
        let mut failures = 0usize;
        for _ in 0..n_samples {
            let u = normal_vector(rng, ud);
            let v = normal_vector(rng, vd);
            let e = cross_excess(phi, &diff, &u, &v)?;
            worst = worst.max(e);
            if e > 0.0 {
                failures += 1;
            }
        }
        return Ok(CrossTermCheck::ExactQuadratic {
            worst_excess: worst,
            failures,
        });
    }

    // Secant sampling: approximate a generalized Hessian at a few base
    // points by finite differences of the gradient, then test the bound.
    let bases = n_samples.clamp(1, 16);
    let mut worst = f64::NEG_INFINITY;
    let mut warnings = 0usize;
    for _ in 0..bases {
        let w0 = normal_vector(rng, ud + vd) * 2.0;
        let g0 = phi.gradient(&w0)?;
        let eps = 1e-6 * (1.0 + w0.norm());
        let mut w_fd = Matrix::zeros(ud + vd, ud + vd);
        let mut e = Vector::zeros(ud + vd);
        for j in 0..(ud + vd) {
            e[j] = eps;
            let gj = phi.gradient(&(&w0 + &e))?;
            w_fd.set_column(j, &((gj - &g0) / eps));
            e[j] = 0.0;
        }
        let w12 = Matrix::from(w_fd.view((0, ud), (ud, vd)));
        let diff = &w12 - &q12_mat;
        for _ in 0..4 {
            let u = normal_vector(rng, ud);
            let v = normal_vector(rng, vd);
            // secant tolerance is looser than the exact path
            let e = cross_excess(phi, &diff, &u, &v)? - 1e-4 * (1.0 + u.norm() * v.norm());
            worst = worst.max(e);
            if e > 0.0 {
                warnings += 1;
            }
        }
    }
    Ok(CrossTermCheck::SampledSecant {
        worst_excess: worst,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// CoupledProblem
// ---------------------------------------------------------------------------

/// The full instance: nonsmooth terms, smooth coupling, constraints.
#[derive(Debug, Clone)]
pub struct CoupledProblem {
    p: ProxTerm,
    q: ProxTerm,
    phi: SmoothCoupling,
    a: LinearMap,
    b: LinearMap,
    c: Vector,
}

impl CoupledProblem {
    pub fn new(
        p: ProxTerm,
        q: ProxTerm,
        phi: SmoothCoupling,
        a: LinearMap,
        b: LinearMap,
        c: Vector,
    ) -> Result<Self> {
        if p.dim() != phi.u_dim() || a.out_dim() != p.dim() {
            return Err(Error::DimMismatch {
                context: "CoupledProblem: u side",
                expected: phi.u_dim(),
                got: p.dim().min(a.out_dim()),
            });
        }
        if q.dim() != phi.v_dim() || b.out_dim() != q.dim() {
            return Err(Error::DimMismatch {
                context: "CoupledProblem: v side",
                expected: phi.v_dim(),
                got: q.dim().min(b.out_dim()),
            });
        }
        if a.in_dim() != c.len() || b.in_dim() != c.len() {
            return Err(Error::DimMismatch {
                context: "CoupledProblem: multiplier space",
                expected: c.len(),
                got: a.in_dim().min(b.in_dim()),
            });
        }
        Ok(Self { p, q, phi, a, b, c })
    }

    pub fn u_dim(&self) -> usize {
        self.p.dim()
    }

    pub fn v_dim(&self) -> usize {
        self.q.dim()
    }

    pub fn x_dim(&self) -> usize {
        self.c.len()
    }

    pub fn p(&self) -> &ProxTerm {
        &self.p
    }

    pub fn q(&self) -> &ProxTerm {
        &self.q
    }

    pub fn phi(&self) -> &SmoothCoupling {
        &self.phi
    }

    pub fn a(&self) -> &LinearMap {
        &self.a
    }

    pub fn b(&self) -> &LinearMap {
        &self.b
    }

    pub fn c(&self) -> &Vector {
        &self.c
    }

    /// `theta(u, v) = p(u) + q(v) + phi(u, v)`; `+inf` propagates.
    pub fn objective(&self, u: &Vector, v: &Vector) -> Result<f64> {
        let pv = self.p.value(u)?;
        let qv = self.q.value(v)?;
        if pv.is_infinite() || qv.is_infinite() {
            return Ok(f64::INFINITY);
        }
        Ok(pv + qv + self.phi.value_uv(u, v)?)
    }

    /// Constraint residual `A* u + B* v - c`.
    pub fn residual(&self, u: &Vector, v: &Vector) -> Result<Vector> {
        Ok(self.a.apply_adjoint(u)? + self.b.apply_adjoint(v)? - &self.c)
    }
}
