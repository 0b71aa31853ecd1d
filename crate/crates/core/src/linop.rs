//! Matrix-free linear-operator algebra.
//!
//! Operators are represented by their action, with optional dense
//! materialization for desk-scale spectral checks. The curvature operators
//! consumed by the solver and the condition checker are all built from the
//! two types here: [`LinearMap`] (a general map with adjoint) and
//! [`SelfAdjointOp`] (a self-adjoint map on a single space). The 2x2 block
//! structure of the coupling curvature lives in [`BlockCurvature`].

use std::fmt;
use std::sync::Arc;

use nalgebra::linalg::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sampling::normal_vector;
use crate::{Matrix, Vector};

/// Default cap on dense materialization. Checks above this dimension are
/// refused rather than approximated.
pub const DEFAULT_DENSE_CAP: usize = 2000;

type VecFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}

/// A linear map `A: X -> U` together with its adjoint `A*: U -> X`.
///
/// `apply` realizes `A x`; `apply_adjoint` realizes `A* u`. The constraint
/// operators of the problem family are stored in this orientation, so the
/// feasibility residual reads `a.apply_adjoint(u) + b.apply_adjoint(v) - c`.
#[derive(Clone)]
pub struct LinearMap {
    in_dim: usize,
    out_dim: usize,
    fwd: VecFn,
    adj: VecFn,
}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LinearMap({} -> {})", self.in_dim, self.out_dim)
    }
}

impl LinearMap {
    pub fn new<F, G>(in_dim: usize, out_dim: usize, fwd: F, adj: G) -> Self
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
        G: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        assert!(in_dim > 0 && out_dim > 0, "operator dimensions must be positive");
        Self {
            in_dim,
            out_dim,
            fwd: Arc::new(fwd),
            adj: Arc::new(adj),
        }
    }

    /// Map defined by a dense matrix (`out_dim x in_dim`); the adjoint is the
    /// transpose.
    pub fn from_matrix(m: Matrix) -> Self {
        let mt = m.transpose();
        let (out_dim, in_dim) = (m.nrows(), m.ncols());
        let m = Arc::new(m);
        let mt = Arc::new(mt);
        Self {
            in_dim,
            out_dim,
            fwd: Arc::new(move |x: &Vector| &*m * x),
            adj: Arc::new(move |y: &Vector| &*mt * y),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, dim, |x| x.clone(), |y| y.clone())
    }

    pub fn zero(in_dim: usize, out_dim: usize) -> Self {
        Self::new(
            in_dim,
            out_dim,
            move |_| Vector::zeros(out_dim),
            move |_| Vector::zeros(in_dim),
        )
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim("LinearMap::apply", self.in_dim, x.len())?;
        Ok((self.fwd)(x))
    }

    pub fn apply_adjoint(&self, y: &Vector) -> Result<Vector> {
        check_dim("LinearMap::apply_adjoint", self.out_dim, y.len())?;
        Ok((self.adj)(y))
    }

    /// Column-by-column reconstruction of the matrix of the map.
    pub fn materialize(&self, cap: usize) -> Result<Matrix> {
        let dim = self.in_dim.max(self.out_dim);
        if dim > cap {
            return Err(Error::DenseCapExceeded { dim, cap });
        }
        let mut m = Matrix::zeros(self.out_dim, self.in_dim);
        let mut e = Vector::zeros(self.in_dim);
        for j in 0..self.in_dim {
            e[j] = 1.0;
            let col = self.apply(&e)?;
            m.set_column(j, &col);
            e[j] = 0.0;
        }
        Ok(m)
    }

    /// Largest singular value, computed as `sqrt(lambda_max(M^T M))` on the
    /// materialized matrix.
    pub fn operator_norm(&self, cap: usize) -> Result<f64> {
        let m = self.materialize(cap)?;
        let gram = m.transpose() * &m;
        let eig = SymmetricEigen::new(symmetrize(&gram));
        Ok(eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l)).max(0.0).sqrt())
    }

    /// `scale * A A*` as a self-adjoint operator on the output space.
    pub fn gram(&self, scale: f64) -> SelfAdjointOp {
        let fwd = Arc::clone(&self.fwd);
        let adj = Arc::clone(&self.adj);
        SelfAdjointOp::new(self.out_dim, move |y: &Vector| fwd(&adj(y)) * scale)
    }

    /// Checks `<A x, y> = <x, A* y>` on seeded random probes.
    pub fn verify_adjoint(&self, probes: usize, seed: u64, rel_tol: f64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..probes {
            let x = normal_vector(&mut rng, self.in_dim);
            let y = normal_vector(&mut rng, self.out_dim);
            let lhs = self.apply(&x)?.dot(&y);
            let rhs = x.dot(&self.apply_adjoint(&y)?);
            let scale = 1.0 + lhs.abs().max(rhs.abs()) + x.norm() * y.norm();
            if (lhs - rhs).abs() > rel_tol * scale {
                return Err(Error::InvalidParameter(format!(
                    "adjoint inconsistency: <Ax,y> = {lhs}, <x,A*y> = {rhs}"
                )));
            }
        }
        Ok(())
    }
}

/// A self-adjoint map on one space, represented by its action.
#[derive(Clone)]
pub struct SelfAdjointOp {
    dim: usize,
    f: VecFn,
}

impl fmt::Debug for SelfAdjointOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SelfAdjointOp(dim {})", self.dim)
    }
}

impl SelfAdjointOp {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        assert!(dim > 0, "operator dimension must be positive");
        Self { dim, f: Arc::new(f) }
    }

    /// Operator backed by a dense symmetric matrix. The matrix is symmetrized
    /// to guard against asymmetric rounding in the caller.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimMismatch {
                context: "SelfAdjointOp::from_matrix",
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let sym = Arc::new(symmetrize(m));
        Ok(Self {
            dim: sym.nrows(),
            f: Arc::new(move |x: &Vector| &*sym * x),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, |x| x.clone())
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, move |_| Vector::zeros(dim))
    }

    pub fn scaled_identity(dim: usize, alpha: f64) -> Self {
        Self::new(dim, move |x| x * alpha)
    }

    pub fn from_diagonal(d: &Vector) -> Self {
        let d = d.clone();
        Self::new(d.len(), move |x| x.component_mul(&d))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim("SelfAdjointOp::apply", self.dim, x.len())?;
        Ok((self.f)(x))
    }

    /// Pointwise sum of operators on the same space.
    pub fn sum_of(parts: Vec<SelfAdjointOp>) -> Result<Self> {
        let dim = match parts.first() {
            Some(p) => p.dim,
            None => return Err(Error::InvalidParameter("sum_of needs at least one operator".into())),
        };
        for p in &parts {
            check_dim("SelfAdjointOp::sum_of", dim, p.dim)?;
        }
        Ok(Self::new(dim, move |x: &Vector| {
            let mut acc = Vector::zeros(x.len());
            for p in &parts {
                acc += (p.f)(x);
            }
            acc
        }))
    }

    /// `alpha * self`. A negative `alpha` keeps self-adjointness but of course
    /// not semidefiniteness.
    pub fn scale(&self, alpha: f64) -> Self {
        let f = Arc::clone(&self.f);
        Self::new(self.dim, move |x: &Vector| f(x) * alpha)
    }

    /// `alpha I - self`, used by the prox-identity auto-tuner.
    pub fn identity_shift_minus(&self, alpha: f64) -> Self {
        let f = Arc::clone(&self.f);
        Self::new(self.dim, move |x: &Vector| x * alpha - f(x))
    }

    /// Block-diagonal operator `Diag(a, b)` on the product space.
    pub fn block_diag(a: &SelfAdjointOp, b: &SelfAdjointOp) -> Self {
        let (fa, fb) = (Arc::clone(&a.f), Arc::clone(&b.f));
        let (da, db) = (a.dim, b.dim);
        Self::new(da + db, move |w: &Vector| {
            let top = fa(&Vector::from(w.rows(0, da)));
            let bot = fb(&Vector::from(w.rows(da, db)));
            let mut out = Vector::zeros(da + db);
            out.rows_mut(0, da).copy_from(&top);
            out.rows_mut(da, db).copy_from(&bot);
            out
        })
    }

    pub fn materialize(&self, cap: usize) -> Result<Matrix> {
        if self.dim > cap {
            return Err(Error::DenseCapExceeded { dim: self.dim, cap });
        }
        let mut m = Matrix::zeros(self.dim, self.dim);
        let mut e = Vector::zeros(self.dim);
        for j in 0..self.dim {
            e[j] = 1.0;
            m.set_column(j, &self.apply(&e)?);
            e[j] = 0.0;
        }
        Ok(m)
    }

    /// Smallest and largest eigenvalue of the symmetrized materialization.
    pub fn eig_range(&self, cap: usize) -> Result<EigRange> {
        let m = self.materialize(cap)?;
        let eig = SymmetricEigen::new(symmetrize(&m));
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &l in eig.eigenvalues.iter() {
            min = min.min(l);
            max = max.max(l);
        }
        Ok(EigRange { min, max })
    }

    pub fn min_eigenvalue(&self, cap: usize) -> Result<f64> {
        Ok(self.eig_range(cap)?.min)
    }

    pub fn max_eigenvalue(&self, cap: usize) -> Result<f64> {
        Ok(self.eig_range(cap)?.max)
    }

    /// Smallest eigenvalue together with its eigenvector (kernel witness for
    /// failed definiteness checks).
    pub fn min_eigenpair(&self, cap: usize) -> Result<(f64, Vector)> {
        let m = self.materialize(cap)?;
        let eig = SymmetricEigen::new(symmetrize(&m));
        let mut idx = 0;
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l < eig.eigenvalues[idx] {
                idx = i;
            }
        }
        Ok((eig.eigenvalues[idx], Vector::from(eig.eigenvectors.column(idx))))
    }

    /// Spectral norm `max |lambda|`.
    pub fn operator_norm(&self, cap: usize) -> Result<f64> {
        let r = self.eig_range(cap)?;
        Ok(r.min.abs().max(r.max.abs()))
    }

    /// Checks `<Gx, y> = <x, Gy>` on seeded random probes.
    pub fn verify_symmetry(&self, probes: usize, seed: u64, rel_tol: f64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..probes {
            let x = normal_vector(&mut rng, self.dim);
            let y = normal_vector(&mut rng, self.dim);
            let lhs = self.apply(&x)?.dot(&y);
            let rhs = x.dot(&self.apply(&y)?);
            let scale = 1.0 + lhs.abs().max(rhs.abs()) + x.norm() * y.norm();
            if (lhs - rhs).abs() > rel_tol * scale {
                return Err(Error::InvalidParameter(format!(
                    "symmetry violation: <Gx,y> = {lhs}, <x,Gy> = {rhs}"
                )));
            }
        }
        Ok(())
    }

    /// Checks `<x, Gx> >= -tol * ||x||^2` on seeded random probes.
    pub fn verify_psd_sampled(&self, probes: usize, seed: u64, tol: f64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..probes {
            let x = normal_vector(&mut rng, self.dim);
            let q = x.dot(&self.apply(&x)?);
            if q < -tol * x.norm_squared() {
                return Err(Error::InvalidParameter(format!(
                    "negative curvature on probe: <x,Gx> = {q}"
                )));
            }
        }
        Ok(())
    }
}

/// `||x||_G^2 = <x, Gx>`, with values in `[-1e-12 ||x||^2, 0)` clamped to 0.
pub fn seminorm_sq(g: &SelfAdjointOp, x: &Vector) -> Result<f64> {
    check_dim("seminorm_sq", g.dim(), x.len())?;
    let q = x.dot(&g.apply(x)?);
    if q < 0.0 && q >= -1e-12 * x.norm_squared() {
        return Ok(0.0);
    }
    Ok(q)
}

/// Eigenvalue range of a symmetric operator.
#[derive(Debug, Clone, Copy)]
pub struct EigRange {
    pub min: f64,
    pub max: f64,
}

/// Relative eigenvalue thresholds for definiteness verdicts.
#[derive(Debug, Clone, Copy)]
pub struct EigThresholds {
    /// Strict positive definiteness: `lambda_min > strict_rel * max(1, lambda_max)`.
    pub strict_rel: f64,
    /// Positive semidefiniteness: `lambda_min >= -semi_rel * max(1, lambda_max)`.
    pub semi_rel: f64,
}

impl Default for EigThresholds {
    fn default() -> Self {
        Self {
            strict_rel: 1e-9,
            semi_rel: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
}

pub fn classify_definiteness(r: EigRange, t: EigThresholds) -> Definiteness {
    let scale = 1.0f64.max(r.max);
    if r.min > t.strict_rel * scale {
        Definiteness::PositiveDefinite
    } else if r.min >= -t.semi_rel * scale {
        Definiteness::PositiveSemidefinite
    } else {
        Definiteness::Indefinite
    }
}

fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// The 2x2 block curvature `Q = [Q11 Q12; Q12* Q22]` on the product space
/// `U x V`. `q12` maps `V -> U`.
#[derive(Debug, Clone)]
pub struct BlockCurvature {
    q11: SelfAdjointOp,
    q22: SelfAdjointOp,
    q12: LinearMap,
}

impl BlockCurvature {
    pub fn new(q11: SelfAdjointOp, q22: SelfAdjointOp, q12: LinearMap) -> Result<Self> {
        check_dim("BlockCurvature: q12 input vs q22", q22.dim(), q12.in_dim())?;
        check_dim("BlockCurvature: q12 output vs q11", q11.dim(), q12.out_dim())?;
        Ok(Self { q11, q22, q12 })
    }

    pub fn zero(u_dim: usize, v_dim: usize) -> Self {
        Self {
            q11: SelfAdjointOp::zero(u_dim),
            q22: SelfAdjointOp::zero(v_dim),
            q12: LinearMap::zero(v_dim, u_dim),
        }
    }

    /// Splits a dense symmetric matrix on the product space into blocks.
    pub fn from_matrix(q: &Matrix, u_dim: usize) -> Result<Self> {
        if q.nrows() != q.ncols() || q.nrows() <= u_dim {
            return Err(Error::DimMismatch {
                context: "BlockCurvature::from_matrix",
                expected: u_dim + 1,
                got: q.nrows(),
            });
        }
        let v_dim = q.nrows() - u_dim;
        let sym = symmetrize(q);
        let q11 = SelfAdjointOp::from_matrix(&Matrix::from(sym.view((0, 0), (u_dim, u_dim))))?;
        let q22 = SelfAdjointOp::from_matrix(&Matrix::from(sym.view((u_dim, u_dim), (v_dim, v_dim))))?;
        let q12 = LinearMap::from_matrix(Matrix::from(sym.view((0, u_dim), (u_dim, v_dim))));
        Self::new(q11, q22, q12)
    }

    pub fn u_dim(&self) -> usize {
        self.q11.dim()
    }

    pub fn v_dim(&self) -> usize {
        self.q22.dim()
    }

    pub fn dim(&self) -> usize {
        self.u_dim() + self.v_dim()
    }

    pub fn q11(&self) -> &SelfAdjointOp {
        &self.q11
    }

    pub fn q22(&self) -> &SelfAdjointOp {
        &self.q22
    }

    pub fn q12(&self) -> &LinearMap {
        &self.q12
    }

    /// Applies the assembled block operator to `(u, v)`.
    pub fn apply_block(&self, u: &Vector, v: &Vector) -> Result<(Vector, Vector)> {
        let top = self.q11.apply(u)? + self.q12.apply(v)?;
        let bot = self.q12.apply_adjoint(u)? + self.q22.apply(v)?;
        Ok((top, bot))
    }

    pub fn apply(&self, w: &Vector) -> Result<Vector> {
        check_dim("BlockCurvature::apply", self.dim(), w.len())?;
        let u = Vector::from(w.rows(0, self.u_dim()));
        let v = Vector::from(w.rows(self.u_dim(), self.v_dim()));
        let (top, bot) = self.apply_block(&u, &v)?;
        let mut out = Vector::zeros(self.dim());
        out.rows_mut(0, self.u_dim()).copy_from(&top);
        out.rows_mut(self.u_dim(), self.v_dim()).copy_from(&bot);
        Ok(out)
    }

    /// The assembled operator on the product space.
    pub fn as_operator(&self) -> SelfAdjointOp {
        let this = self.clone();
        SelfAdjointOp::new(self.dim(), move |w: &Vector| {
            this.apply(w).expect("dims checked at construction")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn seminorm_identity_and_zero() {
        let id = SelfAdjointOp::identity(2);
        let x = Vector::from_vec(vec![3.0, 4.0]);
        assert_relative_eq!(seminorm_sq(&id, &x).unwrap(), 25.0);

        let z = SelfAdjointOp::zero(2);
        assert_eq!(seminorm_sq(&z, &x).unwrap(), 0.0);
    }

    #[test]
    fn seminorm_diagonal_matches_dense_oracle() {
        let g = SelfAdjointOp::from_diagonal(&Vector::from_vec(vec![2.0, 1.0]));
        let x = Vector::from_vec(vec![1.0, 1.0]);
        // oracle: x^T diag(2,1) x computed by a dense matrix-vector product
        let dense = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let oracle = x.dot(&(&dense * &x));
        assert_relative_eq!(seminorm_sq(&g, &x).unwrap(), oracle);
        assert_relative_eq!(oracle, 3.0);
    }

    #[test]
    fn seminorm_clamps_tiny_negative() {
        let g = SelfAdjointOp::scaled_identity(1, -1e-14);
        let x = Vector::from_vec(vec![1.0]);
        assert_eq!(seminorm_sq(&g, &x).unwrap(), 0.0);
        // a genuinely negative value passes through for the caller to see
        let g = SelfAdjointOp::scaled_identity(1, -1.0);
        assert!(seminorm_sq(&g, &x).unwrap() < -0.5);
    }

    #[test]
    fn seminorm_dim_mismatch_is_an_error() {
        let g = SelfAdjointOp::identity(2);
        let x = Vector::from_vec(vec![1.0]);
        assert!(matches!(
            seminorm_sq(&g, &x),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn materialize_identity_and_zero() {
        let id = SelfAdjointOp::identity(3);
        assert_eq!(id.materialize(10).unwrap(), Matrix::identity(3, 3));
        let z = SelfAdjointOp::zero(2);
        assert_eq!(z.materialize(10).unwrap(), Matrix::zeros(2, 2));
    }

    #[test]
    fn materialize_respects_cap() {
        let id = SelfAdjointOp::identity(5);
        match id.materialize(4) {
            Err(Error::DenseCapExceeded { dim: 5, cap: 4 }) => {}
            other => panic!("expected cap refusal, got {other:?}"),
        }
    }

    #[test]
    fn gram_of_column_map_is_rank_one() {
        // A: R^1 -> R^2 with column (1, 1); A A* = [[1,1],[1,1]].
        let a = LinearMap::from_matrix(Matrix::from_column_slice(2, 1, &[1.0, 1.0]));
        let g = a.gram(1.0).materialize(10).unwrap();
        // oracle: dense product m m^T
        let m = a.materialize(10).unwrap();
        let oracle = &m * m.transpose();
        assert_relative_eq!(g, oracle, epsilon = 1e-14);
        assert_relative_eq!(g, Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]), epsilon = 1e-14);
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert_relative_eq!(SelfAdjointOp::identity(4).min_eigenvalue(10).unwrap(), 1.0);
        let d = SelfAdjointOp::from_diagonal(&Vector::from_vec(vec![0.0, 5.0]));
        assert_relative_eq!(d.min_eigenvalue(10).unwrap(), 0.0, epsilon = 1e-12);

        let m = SelfAdjointOp::from_matrix(&Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        // oracle: roots of the characteristic polynomial of a 2x2 symmetric matrix
        let (tr, det) = (4.0f64, 3.0f64);
        let disc = (tr * tr - 4.0 * det).sqrt();
        let lo = (tr - disc) / 2.0;
        assert_relative_eq!(lo, 1.0);
        assert_relative_eq!(m.min_eigenvalue(10).unwrap(), lo, max_relative = 1e-9);
        assert_relative_eq!(m.max_eigenvalue(10).unwrap(), (tr + disc) / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn operator_norm_examples() {
        assert_relative_eq!(LinearMap::identity(3).operator_norm(10).unwrap(), 1.0);
        assert_relative_eq!(LinearMap::zero(2, 2).operator_norm(10).unwrap(), 0.0);
        let a = LinearMap::from_matrix(Matrix::from_row_slice(1, 2, &[3.0, 4.0]));
        assert_relative_eq!(a.operator_norm(10).unwrap(), 5.0, max_relative = 1e-9);
    }

    #[test]
    fn block_curvature_assembles_symmetric_psd() {
        let q = Matrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 3.0]);
        let b = BlockCurvature::from_matrix(&q, 2).unwrap();
        let assembled = b.as_operator().materialize(10).unwrap();
        assert_relative_eq!(assembled, q, epsilon = 1e-14);
        b.as_operator().verify_symmetry(50, 7, 1e-10).unwrap();
        assert!(b.as_operator().min_eigenvalue(10).unwrap() > 0.0);
    }

    #[test]
    fn adjoint_consistency_check_catches_bad_maps() {
        let good = LinearMap::from_matrix(Matrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 4.0]));
        good.verify_adjoint(100, 3, 1e-10).unwrap();

        let bad = LinearMap::new(2, 2, |x| x.clone(), |y| y * 2.0);
        assert!(bad.verify_adjoint(10, 3, 1e-10).is_err());
    }

    #[test]
    fn definiteness_classification_thresholds() {
        let t = EigThresholds::default();
        let pd = classify_definiteness(EigRange { min: 0.25, max: 1.0 }, t);
        assert_eq!(pd, Definiteness::PositiveDefinite);
        let psd = classify_definiteness(EigRange { min: -1e-12, max: 1.0 }, t);
        assert_eq!(psd, Definiteness::PositiveSemidefinite);
        let indef = classify_definiteness(EigRange { min: -1e-3, max: 1.0 }, t);
        assert_eq!(indef, Definiteness::Indefinite);
    }

    #[test]
    fn materialize_agrees_with_apply_on_probes() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let raw = Matrix::from_fn(6, 6, |_, _| crate::sampling::standard_normal(&mut rng));
        let op = SelfAdjointOp::from_matrix(&(&raw * raw.transpose())).unwrap();
        let m = op.materialize(100).unwrap();
        for _ in 0..100 {
            let x = normal_vector(&mut rng, 6);
            let direct = op.apply(&x).unwrap();
            let via = &m * &x;
            for i in 0..6 {
                assert!((direct[i] - via[i]).abs() <= 1e-12);
            }
        }
    }
}
