//! Geometry of the symplectic group and the symplectic Stiefel manifold.
//!
//! Points are `2n × 2k` matrices `U` with `UᵀJU = J`. Tangent vectors are
//! stored as ambient matrices together with their base point. The metric is
//! the one induced by the right-invariant metric on the symplectic group,
//! so the Gram matrix `UᵀU` (and its Cholesky factor) is needed at every
//! point and is cached once at construction.

use std::sync::Arc;

use crate::error::{Result, SpstError};
use crate::matrix::{lu_solve, Cholesky, DenseMatrix, Seed};

/// Feasibility tolerance used when certifying a point.
pub const TOL_FEAS: f64 = 1e-8;
/// Relative tangency tolerance used when certifying a tangent vector.
pub const TOL_TAN: f64 = 1e-8;

/// The structure matrix `J_{2m} = [[0, I_m], [-I_m, 0]]`.
pub fn j_matrix(m: usize) -> DenseMatrix {
    let mut j = DenseMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = 1.0;
        j[(m + i, i)] = -1.0;
    }
    j
}

/// `J W` without forming `J`. Swaps the row halves and negates the lower one.
pub fn j_left(w: &DenseMatrix) -> DenseMatrix {
    let (r, c) = w.shape();
    assert!(r % 2 == 0, "j_left needs an even row count");
    let m = r / 2;
    DenseMatrix::from_fn(r, c, |i, j| if i < m { w[(m + i, j)] } else { -w[(i - m, j)] })
}

/// `W J` without forming `J`.
pub fn j_right(w: &DenseMatrix) -> DenseMatrix {
    let (r, c) = w.shape();
    assert!(c % 2 == 0, "j_right needs an even column count");
    let m = c / 2;
    DenseMatrix::from_fn(r, c, |i, j| if j < m { -w[(i, m + j)] } else { w[(i, j - m)] })
}

/// `Jᵀ W = -J W`.
pub fn jt_left(w: &DenseMatrix) -> DenseMatrix {
    -&j_left(w)
}

/// The selector `E = [e_1 … e_k, e_{n+1} … e_{n+k}]`, the canonical point of SpSt(2n, 2k).
pub fn selector(n: usize, k: usize) -> DenseMatrix {
    assert!(k <= n, "selector needs k <= n");
    let mut e = DenseMatrix::zeros(2 * n, 2 * k);
    for i in 0..k {
        e[(i, i)] = 1.0;
        e[(n + i, k + i)] = 1.0;
    }
    e
}

/// Symplectic inverse `W⁺ = J_{2l}ᵀ Wᵀ J_{2m}` of a `2m × 2l` matrix.
pub fn sympl_inverse(w: &DenseMatrix) -> Result<DenseMatrix> {
    let (r, c) = w.shape();
    if r % 2 != 0 || c % 2 != 0 {
        return Err(SpstError::OddDimension(r, c));
    }
    Ok(jt_left(&j_right(&w.transpose())))
}

fn sinv(w: &DenseMatrix) -> DenseMatrix {
    jt_left(&j_right(&w.transpose()))
}

/// Feasibility `‖U⁺U − I‖_F` of an arbitrary `2n × 2k` matrix.
pub fn check_point(u: &DenseMatrix) -> Result<f64> {
    let (r, c) = u.shape();
    if r % 2 != 0 || c % 2 != 0 {
        return Err(SpstError::OddDimension(r, c));
    }
    if c > r {
        return Err(SpstError::ShapeMismatch {
            expected: (r, r),
            got: (r, c),
        });
    }
    let p = &sinv(u) * u;
    Ok(p.identity_minus().frob_norm())
}

#[derive(Debug)]
struct PointData {
    u: DenseMatrix,
    n: usize,
    k: usize,
    gram: DenseMatrix,
    chol: Cholesky,
}

/// A point of SpSt(2n, 2k) with its Gram matrix `UᵀU` factored.
///
/// Cheap to clone.
#[derive(Debug, Clone)]
pub struct ManifoldPoint(Arc<PointData>);

impl ManifoldPoint {
    /// Certify `u` against [`TOL_FEAS`].
    pub fn new(u: DenseMatrix) -> Result<Self> {
        let feas = check_point(&u)?;
        if !(feas <= TOL_FEAS) {
            return Err(SpstError::InfeasibleBase(feas));
        }
        Self::new_unchecked(u)
    }

    /// Skip the feasibility check. Still requires full column rank.
    pub fn new_unchecked(u: DenseMatrix) -> Result<Self> {
        let (r, c) = u.shape();
        if r % 2 != 0 || c % 2 != 0 {
            return Err(SpstError::OddDimension(r, c));
        }
        let gram = u.gram();
        let chol = Cholesky::factor(&gram)?;
        Ok(Self(Arc::new(PointData {
            n: r / 2,
            k: c / 2,
            u,
            gram,
            chol,
        })))
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.0.u
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn k(&self) -> usize {
        self.0.k
    }

    /// `UᵀU`.
    pub fn gram(&self) -> &DenseMatrix {
        &self.0.gram
    }

    /// `(UᵀU)⁻¹ B`.
    pub fn gram_solve(&self, b: &DenseMatrix) -> DenseMatrix {
        self.0.chol.solve(b).expect("Gram factor was validated at construction")
    }

    /// `B (UᵀU)⁻¹`.
    pub fn gram_solve_right(&self, b: &DenseMatrix) -> DenseMatrix {
        self.0
            .chol
            .solve_right(b)
            .expect("Gram factor was validated at construction")
    }

    pub fn feasibility(&self) -> f64 {
        check_point(self.u()).unwrap_or(f64::INFINITY)
    }

    /// Manifold dimension `(4n − 2k + 1) k`.
    pub fn dim(&self) -> usize {
        manifold_dim(self.n(), self.k())
    }

    pub fn same_as(&self, other: &ManifoldPoint) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.u() == other.u()
    }

    fn check_shape(&self, v: &DenseMatrix) -> Result<()> {
        if v.shape() != self.u().shape() {
            return Err(SpstError::ShapeMismatch {
                expected: self.u().shape(),
                got: v.shape(),
            });
        }
        Ok(())
    }
}

impl PartialEq for ManifoldPoint {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

pub fn manifold_dim(n: usize, k: usize) -> usize {
    (4 * n - 2 * k + 1) * k
}

/// A tangent vector `Δ ∈ T_U SpSt(2n, 2k)`.
#[derive(Debug, Clone)]
pub struct TangentVector {
    delta: DenseMatrix,
    base: ManifoldPoint,
}

impl TangentVector {
    /// Certify tangency against [`TOL_TAN`].
    pub fn new(base: &ManifoldPoint, delta: DenseMatrix) -> Result<Self> {
        base.check_shape(&delta)?;
        let res = (&proj_raw(base, &delta) - &delta).frob_norm();
        if !(res <= TOL_TAN * (1.0 + delta.frob_norm())) {
            return Err(SpstError::NotTangent(res));
        }
        Ok(Self::new_unchecked(base, delta))
    }

    pub fn new_unchecked(base: &ManifoldPoint, delta: DenseMatrix) -> Self {
        debug_assert_eq!(delta.shape(), base.u().shape());
        Self {
            delta,
            base: base.clone(),
        }
    }

    pub fn zero(base: &ManifoldPoint) -> Self {
        let (r, c) = base.u().shape();
        Self::new_unchecked(base, DenseMatrix::zeros(r, c))
    }

    pub fn delta(&self) -> &DenseMatrix {
        &self.delta
    }

    pub fn into_delta(self) -> DenseMatrix {
        self.delta
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self::new_unchecked(&self.base, self.delta.scale(alpha))
    }

    /// `alpha * self + beta * other`.
    pub fn lin_comb(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if !self.base.same_as(&other.base) {
            return Err(SpstError::BaseMismatch);
        }
        Ok(Self::new_unchecked(
            &self.base,
            DenseMatrix::lin_comb(alpha, &self.delta, beta, &other.delta),
        ))
    }

    /// Norm induced by the metric.
    pub fn norm(&self) -> f64 {
        metric_raw(&self.base, &self.delta, &self.delta).max(0.0).sqrt()
    }

    pub fn frob_norm(&self) -> f64 {
        self.delta.frob_norm()
    }

    /// Tangency residual `‖P_U(Δ) − Δ‖_F`.
    pub fn tangency_residual(&self) -> f64 {
        (&proj_raw(&self.base, &self.delta) - &self.delta).frob_norm()
    }
}

/// `g_U(X1, X2) = tr(X1ᵀ X2 G⁻¹) − ½ tr(a1ᵀ G⁻¹ a2 G⁻¹)` with `G = UᵀU`, `a_i = UᵀJX_i`.
///
/// Works for any ambient `X1, X2` of the right shape.
pub fn metric_raw(u: &ManifoldPoint, x1: &DenseMatrix, x2: &DenseMatrix) -> f64 {
    let x2g = u.gram_solve_right(x2);
    let t1 = x1.frob_dot(&x2g);
    let a1 = u.u().t_matmul(&j_left(x1));
    let a2 = u.u().t_matmul(&j_left(x2));
    let ga2g = u.gram_solve(&u.gram_solve_right(&a2));
    t1 - 0.5 * a1.frob_dot(&ga2g)
}

pub fn metric(x1: &TangentVector, x2: &TangentVector) -> Result<f64> {
    if !x1.base.same_as(&x2.base) {
        return Err(SpstError::BaseMismatch);
    }
    Ok(metric_raw(&x1.base, &x1.delta, &x2.delta))
}

/// Right-invariant metric on the symplectic group, `½ tr((X1 M⁺)ᵀ X2 M⁺)`.
pub fn metric_sp(m: &DenseMatrix, x1: &DenseMatrix, x2: &DenseMatrix) -> Result<f64> {
    let mi = sympl_inverse(m)?;
    Ok(0.5 * (x1 * &mi).frob_dot(&(x2 * &mi)))
}

/// Orthogonal projection onto `T_M Sp(2n)`: `½V − ½ M V⁺ M`.
pub fn proj_sp(m: &DenseMatrix, v: &DenseMatrix) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(SpstError::ShapeMismatch {
            expected: (m.rows(), m.rows()),
            got: m.shape(),
        });
    }
    if v.shape() != m.shape() {
        return Err(SpstError::ShapeMismatch {
            expected: m.shape(),
            got: v.shape(),
        });
    }
    let feas = check_point(m)?;
    if !(feas <= TOL_FEAS) {
        return Err(SpstError::InfeasibleBase(feas));
    }
    let mvm = &(m * &sinv(v)) * m;
    Ok(DenseMatrix::lin_comb(0.5, v, -0.5, &mvm))
}

fn proj_raw(u: &ManifoldPoint, v: &DenseMatrix) -> DenseMatrix {
    // V − ½(Uᵀ)⁺((UᵀU)⁺)⁻¹(V⁺U + U⁺V) = V + ½ J U G⁻¹ J_{2k} (V⁺U + U⁺V)
    let uu = u.u();
    let s = &(&sinv(v) * uu) + &(&sinv(uu) * v);
    let corr = j_left(&(uu * &u.gram_solve(&j_left(&s))));
    let mut out = v.clone();
    out.axpy(0.5, &corr);
    out
}

/// Orthogonal projection of an ambient `V` onto `T_U SpSt(2n, 2k)`.
pub fn proj_spst(u: &ManifoldPoint, v: &DenseMatrix) -> Result<TangentVector> {
    u.check_shape(v)?;
    Ok(TangentVector::new_unchecked(u, proj_raw(u, v)))
}

/// Riemannian gradient from the Euclidean one: `∇f UᵀU + J U ∇fᵀ J U`.
pub fn egrad_to_rgrad(u: &ManifoldPoint, egrad: &DenseMatrix) -> Result<TangentVector> {
    u.check_shape(egrad)?;
    Ok(TangentVector::new_unchecked(u, rgrad_raw(u.u(), u.gram(), egrad)))
}

pub fn rgrad_raw(u: &DenseMatrix, gram: &DenseMatrix, egrad: &DenseMatrix) -> DenseMatrix {
    let t = j_left(&(u * &egrad.t_matmul(&j_left(u))));
    &(egrad * gram) + &t
}

/// Horizontal lift `Ω̄(Δ)` of a tangent vector, in factored form `Ω̄ = Y Xᵀ`.
///
/// With `Δ̄ = Ω̄ᵀU = UA + H` (where `U⁺H = 0`):
/// `X = [(I − ½UU⁺)Δ̄, −U]`, `Y = [JᵀUJ_{2k}, ((Δ̄)⁺(I − ½UU⁺))ᵀ]`.
#[derive(Debug, Clone)]
pub struct HorizontalLift {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
    pub a: DenseMatrix,
    pub h: DenseMatrix,
}

impl HorizontalLift {
    /// Materialize the `2n × 2n` matrix `Ω̄`.
    pub fn dense(&self) -> DenseMatrix {
        self.y.matmul_t(&self.x)
    }

    /// `Ω̄ W`.
    pub fn apply(&self, w: &DenseMatrix) -> DenseMatrix {
        &self.y * &self.x.t_matmul(w)
    }

    /// `Ω̄ᵀ W`.
    pub fn apply_t(&self, w: &DenseMatrix) -> DenseMatrix {
        &self.x * &self.y.t_matmul(w)
    }

    /// `(Ω̄ − Ω̄ᵀ) W`.
    pub fn apply_skew(&self, w: &DenseMatrix) -> DenseMatrix {
        &self.apply(w) - &self.apply_t(w)
    }

    /// `Ω̄ᵀU`, equal to `UA + H`.
    pub fn delta_bar(&self, u: &ManifoldPoint) -> DenseMatrix {
        &(u.u() * &self.a) + &self.h
    }
}

/// Low-rank horizontal lift of `Δ`.
pub fn omega_bar(delta: &TangentVector) -> HorizontalLift {
    let u = delta.base();
    let uu = u.u();
    let d = delta.delta();
    let jk = |w: &DenseMatrix| j_right(w);
    // G⁻¹ Δᵀ U, G⁻¹ Δᵀ Jᵀ U G⁻¹ J_{2k}, J_{2k} Uᵀ Δ G⁻¹ J_{2k}
    let ginv_dt_u = u.gram_solve(&d.t_matmul(uu));
    let dg = u.gram_solve_right(d);
    let t1 = j_left(&jk(&uu.t_matmul(&dg)));
    let t3 = jk(&u.gram_solve_right(&u.gram_solve(&d.t_matmul(&jt_left(uu)))));
    let a = &(&t1 + &ginv_dt_u) - &t3;
    // H = (I − UU⁺) J Δ G⁻¹ J_{2k}
    let w = jk(&j_left(&dg));
    let h = &w - &(uu * &(&sinv(uu) * &w));

    let ua = uu * &a;
    let mut x1 = h.clone();
    x1.axpy(0.5, &ua);
    let dbar = &ua + &h;
    // ((Δ̄)⁺ (I − ½UU⁺))ᵀ = (Δ̄⁺)ᵀ − ½ (U⁺)ᵀ Uᵀ (Δ̄⁺)ᵀ
    let dbar_pt = sinv(&dbar).transpose();
    let upt = sinv(uu).transpose();
    let mut y2 = dbar_pt.clone();
    y2.axpy(-0.5, &(&upt * &uu.t_matmul(&dbar_pt)));
    let y1 = jt_left(&jk(uu));
    let mu = -uu;
    HorizontalLift {
        x: DenseMatrix::hstack(&[&x1, &mu]),
        y: DenseMatrix::hstack(&[&y1, &y2]),
        a,
        h,
    }
}

/// Dense horizontal lift from the defining formula
/// `Δ G⁻¹ Uᵀ + J U G⁻¹ Δᵀ (I − Jᵀ U G⁻¹ Uᵀ J) J`.
pub fn omega_bar_dense(delta: &TangentVector) -> DenseMatrix {
    let u = delta.base();
    let uu = u.u();
    let d = delta.delta();
    let first = u.gram_solve_right(d).matmul_t(uu);
    let jtu = jt_left(uu);
    // (UᵀJ) = (JᵀU)ᵀ
    let p = (&jtu * &u.gram_solve(&jtu.transpose())).identity_minus();
    let mid = &(&j_left(uu) * &u.gram_solve(&d.transpose())) * &p;
    &first + &j_right(&mid)
}

/// `cay(Ω) E` with `Ω` a random Hamiltonian matrix of Frobenius norm `scale`.
fn cayley_of_selector(n: usize, k: usize, scale: f64, rng: &mut impl rand::Rng) -> DenseMatrix {
    let mut s = DenseMatrix::randn(2 * n, 2 * n, rng);
    s.symmetrize();
    let mut omega = j_left(&s);
    omega = omega.scale(scale / omega.frob_norm().max(f64::MIN_POSITIVE));
    let e = selector(n, k);
    let rhs = &e + &(&omega * &e);
    lu_solve(&omega.identity_minus(), &rhs).expect("I − Ω is invertible for ‖Ω‖ < 1")
}

/// Seeded random point `cay(Ω) E`, `Ω` a random Hamiltonian with `‖Ω‖_F = 0.5`.
pub fn random_point(n: usize, k: usize, seed: Seed) -> ManifoldPoint {
    assert!(k >= 1 && k <= n, "random_point needs 1 <= k <= n");
    let mut rng = seed.rng();
    let u = cayley_of_selector(n, k, 0.5, &mut rng);
    ManifoldPoint::new(u).expect("Cayley image of the selector is feasible")
}

/// Seeded tangent vector of unit Frobenius norm.
pub fn random_tangent(u: &ManifoldPoint, seed: Seed) -> TangentVector {
    let mut rng = seed.rng();
    let (r, c) = u.u().shape();
    loop {
        let v = DenseMatrix::randn(r, c, &mut rng);
        let p = proj_raw(u, &v);
        let nrm = p.frob_norm();
        if nrm > 1e-8 {
            return TangentVector::new_unchecked(u, p.scale(1.0 / nrm));
        }
    }
}

/// Normal vector `J U T (UᵀU)` for skew `T`.
pub fn normal_vector(u: &ManifoldPoint, t: &DenseMatrix) -> DenseMatrix {
    j_left(&(&(u.u() * t) * u.gram()))
}
