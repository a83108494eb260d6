//! Curves on SpSt(2n, 2k): exact geodesics, the simple Cayley retraction,
//! the two-factor Cayley retraction and vector transports.
//!
//! The Cayley variants are evaluated through small `2k`, `4k` and `8k`
//! systems so that no `2n × 2n` matrix is ever formed. A singular small
//! system means the step hit a pole of the Cayley transform and is reported
//! as [`SpstError::CayleyPoleHit`] so callers can shrink the step.

use crate::error::{Result, SpstError};
use crate::manifold::{omega_bar, proj_spst, sympl_inverse, HorizontalLift, ManifoldPoint, TangentVector};
use crate::matrix::{expm, DenseMatrix, Lu};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RetractionKind {
    Geodesic,
    CayleySimple,
    #[default]
    CayleyGeodesicLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportKind {
    #[default]
    DiffRetraction,
    Projection,
}

fn lu_pole(a: &DenseMatrix) -> Result<Lu> {
    Lu::factor(a).map_err(SpstError::pole)
}

fn solve_pole(lu: &Lu, b: &DenseMatrix) -> Result<DenseMatrix> {
    lu.solve(b).map_err(SpstError::pole)
}

fn finite_point(u: DenseMatrix) -> Result<ManifoldPoint> {
    if !u.is_finite() {
        return Err(SpstError::CayleyPoleHit);
    }
    ManifoldPoint::new_unchecked(u).map_err(|_| SpstError::CayleyPoleHit)
}

/// `expm(t(Ω̄ − Ω̄ᵀ)) expm(tΩ̄ᵀ) U` as a raw matrix (no feasibility guarantee for large `t`).
pub fn geodesic_matrix(delta: &TangentVector, t: f64) -> Result<DenseMatrix> {
    let u = delta.base().u();
    if t == 0.0 {
        return Ok(u.clone());
    }
    let om = omega_bar(delta).dense();
    let omt = om.transpose();
    let right = &expm(&omt.scale(t))? * u;
    Ok(&expm(&(&om - &omt).scale(t))? * &right)
}

pub fn geodesic(delta: &TangentVector, t: f64) -> Result<ManifoldPoint> {
    ManifoldPoint::new_unchecked(geodesic_matrix(delta, t)?)
}

/// `cay((t/2)Ω̄) U = U + tY(I_{4k} − (t/2)XᵀY)⁻¹XᵀU`.
pub fn cayley_simple_matrix(delta: &TangentVector, t: f64) -> Result<DenseMatrix> {
    let u = delta.base().u();
    if t == 0.0 {
        return Ok(u.clone());
    }
    let lift = omega_bar(delta);
    let k4 = lift.x.t_matmul(&lift.y).scale(0.5 * t).identity_minus();
    let z = solve_pole(&lu_pole(&k4)?, &lift.x.t_matmul(u))?;
    let mut out = u.clone();
    out.axpy(t, &(&lift.y * &z));
    Ok(out)
}

pub fn cayley_simple(delta: &TangentVector, t: f64) -> Result<ManifoldPoint> {
    finite_point(cayley_simple_matrix(delta, t)?)
}

/// Factors of the two-factor Cayley retraction at step `t`.
///
/// `X̂ = [Y, −X]`, `Ŷ = [X, Y]` so that `Ω̄ − Ω̄ᵀ = X̂Ŷᵀ`, and
/// `Θ = I − (t/2)A + (t²/4)H⁺H`.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    pub xhat: DenseMatrix,
    pub yhat: DenseMatrix,
    pub theta: DenseMatrix,
    pub a: DenseMatrix,
    pub h: DenseMatrix,
}

/// One evaluation of the two-factor Cayley retraction, kept around so the
/// differentiated retraction at the same `(U, η, t)` reuses its factors.
#[derive(Debug, Clone)]
pub struct CayleyStep {
    eta: TangentVector,
    t: f64,
    lift: HorizontalLift,
    factors: LowRankFactors,
    // I − (t/2) ŶᵀX̂
    k8: Lu,
    // I − (t/2) YᵀX
    k4: Lu,
    // cay((t/2)Ω̄ᵀ) U
    right: DenseMatrix,
    // (I − (t/2)Ω̄ᵀ)⁻¹ U
    half_inv_u: DenseMatrix,
    point: ManifoldPoint,
}

impl CayleyStep {
    pub fn new(eta: &TangentVector, t: f64) -> Result<Self> {
        let base = eta.base();
        let u = base.u();
        let lift = omega_bar(eta);
        let xhat = DenseMatrix::hstack(&[&lift.y, &(-&lift.x)]);
        let yhat = DenseMatrix::hstack(&[&lift.x, &lift.y]);
        let hp = sympl_inverse(&lift.h)?;
        let mut theta = DenseMatrix::identity(lift.a.rows());
        theta.axpy(-0.5 * t, &lift.a);
        theta.axpy(0.25 * t * t, &(&hp * &lift.h));
        // right factor: −U + (tH + 2U)Θ⁻¹
        let mut th2u = lift.h.scale(t);
        th2u.axpy(2.0, u);
        let theta_t = lu_pole(&theta.transpose())?;
        let w2 = solve_pole(&theta_t, &th2u.transpose())?.transpose();
        let right = &w2 - u;
        let half_inv_u = w2.scale(0.5);

        let k8 = lu_pole(&yhat.t_matmul(&xhat).scale(0.5 * t).identity_minus())?;
        let k4 = lu_pole(&lift.y.t_matmul(&lift.x).scale(0.5 * t).identity_minus())?;
        let factors = LowRankFactors {
            xhat,
            yhat,
            theta,
            a: lift.a.clone(),
            h: lift.h.clone(),
        };
        let mut step = Self {
            eta: eta.clone(),
            t,
            lift,
            factors,
            k8,
            k4,
            point: base.clone(),
            half_inv_u,
            right: right.clone(),
        };
        let out = if t == 0.0 { u.clone() } else { step.cay_left(&right)? };
        step.point = finite_point(out)?;
        Ok(step)
    }

    pub fn point(&self) -> &ManifoldPoint {
        &self.point
    }

    pub fn into_point(self) -> ManifoldPoint {
        self.point
    }

    pub fn factors(&self) -> &LowRankFactors {
        &self.factors
    }

    pub fn lift(&self) -> &HorizontalLift {
        &self.lift
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn eta(&self) -> &TangentVector {
        &self.eta
    }

    fn k8_apply(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        let z = solve_pole(&self.k8, &self.factors.yhat.t_matmul(w))?;
        Ok(&self.factors.xhat * &z)
    }

    /// `cay((t/2)X̂Ŷᵀ) W = W + tX̂K₈⁻¹ŶᵀW`.
    fn cay_left(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        let mut out = w.clone();
        out.axpy(self.t, &self.k8_apply(w)?);
        Ok(out)
    }

    /// `(I − (t/2)X̂Ŷᵀ)⁻¹ W = W + (t/2)X̂K₈⁻¹ŶᵀW`.
    fn inv_left(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        let mut out = w.clone();
        out.axpy(0.5 * self.t, &self.k8_apply(w)?);
        Ok(out)
    }

    /// `(I − (t/2)Ω̄ᵀ)⁻¹ W = W + (t/2)XK₄⁻¹YᵀW`.
    fn inv_right(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        let z = solve_pole(&self.k4, &self.lift.y.t_matmul(w))?;
        let mut out = w.clone();
        out.axpy(0.5 * self.t, &(&self.lift.x * &z));
        Ok(out)
    }

    /// Directional derivative `d/ds R_U(tη + sξ)` at `s = 0`, a tangent at [`Self::point`].
    pub fn differential(&self, xi: &TangentVector) -> Result<TangentVector> {
        if !xi.base().same_as(self.eta.base()) {
            return Err(SpstError::BaseMismatch);
        }
        let lx = omega_bar(xi);
        let first = self.inv_left(&lx.apply_skew(&self.inv_left(&self.right)?))?;
        let second = self.cay_left(&self.inv_right(&lx.apply_t(&self.half_inv_u))?)?;
        Ok(TangentVector::new_unchecked(&self.point, &first + &second))
    }

    /// Differentiated-retraction transport rescaled to preserve the metric norm.
    pub fn isometric_transport(&self, xi: &TangentVector) -> Result<TangentVector> {
        rescale(xi, self.differential(xi)?)
    }
}

/// Two-factor Cayley retraction `cay((t/2)(Ω̄ − Ω̄ᵀ)) cay((t/2)Ω̄ᵀ) U`.
pub fn cayley_retraction(delta: &TangentVector, t: f64) -> Result<ManifoldPoint> {
    if t == 0.0 {
        return Ok(delta.base().clone());
    }
    Ok(CayleyStep::new(delta, t)?.into_point())
}

pub fn retract(kind: RetractionKind, delta: &TangentVector, t: f64) -> Result<ManifoldPoint> {
    match kind {
        RetractionKind::Geodesic => geodesic(delta, t),
        RetractionKind::CayleySimple => cayley_simple(delta, t),
        RetractionKind::CayleyGeodesicLike => cayley_retraction(delta, t),
    }
}

/// Differentiated two-factor Cayley retraction, `D R_U(tη)[ξ]`.
pub fn diff_retraction(eta: &TangentVector, xi: &TangentVector, t: f64) -> Result<TangentVector> {
    CayleyStep::new(eta, t)?.differential(xi)
}

/// Transport by orthogonal projection onto the tangent space at `target`.
pub fn transport_proj(target: &ManifoldPoint, xi: &TangentVector) -> Result<TangentVector> {
    proj_spst(target, xi.delta())
}

/// Rescale `out` so its metric norm equals that of `xi`.
///
/// A source vector with metric norm below `1e-15` maps to the zero tangent at `out`'s base.
pub fn rescale(xi: &TangentVector, out: TangentVector) -> Result<TangentVector> {
    let nx = xi.norm();
    if nx < 1e-15 {
        return Ok(TangentVector::zero(out.base()));
    }
    let no = out.norm();
    if !(no > 0.0) || !no.is_finite() {
        return Err(SpstError::ZeroVector);
    }
    Ok(out.scale(nx / no))
}

/// Transport `ξ` from `U` to `R_U(tη)`, then rescale so `‖out‖ = ‖ξ‖_U`.
///
/// A vector with metric norm below `1e-15` transports to the zero tangent.
pub fn isometric_transport(
    eta: &TangentVector,
    xi: &TangentVector,
    t: f64,
    kind: TransportKind,
) -> Result<TangentVector> {
    let step = CayleyStep::new(eta, t)?;
    match kind {
        TransportKind::DiffRetraction => step.isometric_transport(xi),
        TransportKind::Projection => rescale(xi, transport_proj(step.point(), xi)?),
    }
}

/// Dense reference evaluation of `cay(M) W = (I − M)⁻¹(I + M)W`.
pub fn dense_cayley_apply(m: &DenseMatrix, w: &DenseMatrix) -> Result<DenseMatrix> {
    let rhs = w + &(m * w);
    crate::matrix::lu_solve(&m.identity_minus(), &rhs).map_err(SpstError::pole)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{metric, random_point, random_tangent, TOL_TAN};
    use crate::matrix::Seed;

    fn setup(n: usize, k: usize, s: u64) -> (ManifoldPoint, TangentVector) {
        let u = random_point(n, k, Seed(s));
        let d = random_tangent(&u, Seed(s + 1000));
        (u, d)
    }

    #[test]
    fn zero_step_is_identity() {
        let (u, d) = setup(6, 2, 1);
        assert_eq!(geodesic_matrix(&d, 0.0).unwrap(), *u.u());
        assert_eq!(cayley_simple_matrix(&d, 0.0).unwrap(), *u.u());
        assert_eq!(cayley_retraction(&d, 0.0).unwrap().u(), u.u());
        let step = CayleyStep::new(&d, 0.0).unwrap();
        assert_eq!(step.point().u(), u.u());
    }

    #[test]
    fn simple_matches_dense() {
        let (u, d) = setup(10, 3, 2);
        let om = omega_bar(&d).dense();
        for t in [0.1, 0.7, 2.0] {
            let lr = cayley_simple_matrix(&d, t).unwrap();
            let dense = dense_cayley_apply(&om.scale(0.5 * t), u.u()).unwrap();
            assert!((&lr - &dense).frob_norm() <= 1e-10 * dense.frob_norm(), "t = {t}");
        }
    }

    #[test]
    fn two_factor_matches_dense() {
        let (u, d) = setup(10, 3, 3);
        let om = omega_bar(&d).dense();
        let omt = om.transpose();
        let skew = &om - &omt;
        for t in [0.1, 0.7, 2.0] {
            let step = CayleyStep::new(&d, t).unwrap();
            let f = step.factors();
            assert!((&f.xhat.matmul_t(&f.yhat) - &skew).frob_norm() <= 1e-10 * skew.frob_norm());
            let right = dense_cayley_apply(&omt.scale(0.5 * t), u.u()).unwrap();
            let dense = dense_cayley_apply(&skew.scale(0.5 * t), &right).unwrap();
            let lr = step.point().u();
            assert!((lr - &dense).frob_norm() <= 1e-10 * dense.frob_norm(), "t = {t}");
        }
    }

    #[test]
    fn retractions_are_feasible_and_first_order() {
        let (u, d) = setup(8, 2, 4);
        let mut prev = [0.0; 3];
        for (i, t) in [1e-2, 5e-3].into_iter().enumerate() {
            let pts = [
                geodesic_matrix(&d, t).unwrap(),
                cayley_simple_matrix(&d, t).unwrap(),
                cayley_retraction(&d, t).unwrap().u().clone(),
            ];
            for (j, p) in pts.iter().enumerate() {
                let mut lin = u.u().clone();
                lin.axpy(t, d.delta());
                let err = (p - &lin).frob_norm();
                if i == 1 {
                    let ratio = prev[j] / err;
                    assert!((3.5..4.5).contains(&ratio), "kind {j}: ratio {ratio}");
                }
                prev[j] = err;
            }
        }
        for t in [0.01, 0.5, 1.0] {
            assert!(cayley_simple(&d, t).unwrap().feasibility() <= 1e-12);
            assert!(cayley_retraction(&d, t).unwrap().feasibility() <= 1e-12);
        }
    }

    #[test]
    fn geodesic_velocity() {
        let (_, d) = setup(6, 2, 5);
        let h = 1e-5;
        let fd = (&geodesic_matrix(&d, h).unwrap() - &geodesic_matrix(&d, -h).unwrap()).scale(0.5 / h);
        assert!((&fd - d.delta()).frob_norm() <= 1e-6);
    }

    #[test]
    fn differential_at_zero_is_identity() {
        let (u, _) = setup(6, 2, 6);
        let xi = random_tangent(&u, Seed(7));
        let out = diff_retraction(&TangentVector::zero(&u), &xi, 0.0).unwrap();
        assert!((out.delta() - xi.delta()).frob_norm() <= 1e-14);
    }

    #[test]
    fn differential_matches_finite_difference() {
        let (u, eta) = setup(7, 2, 8);
        let xi = random_tangent(&u, Seed(9));
        let t = 0.8;
        let h = 1e-5;
        let at = |s: f64| {
            let v = eta.scale(t).lin_comb(1.0, &xi, s).unwrap();
            cayley_retraction(&v, 1.0).unwrap().u().clone()
        };
        let fd = (&at(h) - &at(-h)).scale(0.5 / h);
        let step = CayleyStep::new(&eta, t).unwrap();
        // d/ds R(tη + sξ) with t folded into η
        let scaled = CayleyStep::new(&eta.scale(t), 1.0).unwrap();
        let dr = scaled.differential(&xi).unwrap();
        assert!(
            (dr.delta() - &fd).frob_norm() <= 1e-6,
            "{}",
            (dr.delta() - &fd).frob_norm()
        );
        let dr2 = step.differential(&xi).unwrap();
        assert!((dr2.delta() - &fd).frob_norm() <= 1e-6);
        assert!(dr2.tangency_residual() <= TOL_TAN * (1.0 + dr2.frob_norm()));
    }

    #[test]
    fn differential_is_linear() {
        let (u, eta) = setup(6, 2, 10);
        let a = random_tangent(&u, Seed(11));
        let b = random_tangent(&u, Seed(12));
        let step = CayleyStep::new(&eta, 0.6).unwrap();
        let lhs = step.differential(&a.lin_comb(2.0, &b, -3.0).unwrap()).unwrap();
        let ta = step.differential(&a).unwrap();
        let tb = step.differential(&b).unwrap();
        let rhs = ta.lin_comb(2.0, &tb, -3.0).unwrap();
        assert!((lhs.delta() - rhs.delta()).frob_norm() <= 1e-10 * (1.0 + rhs.frob_norm()));
    }

    #[test]
    fn projection_transport() {
        let (u, eta) = setup(6, 2, 13);
        let xi = random_tangent(&u, Seed(14));
        let same = transport_proj(&u, &xi).unwrap();
        assert!((same.delta() - xi.delta()).frob_norm() <= 1e-10);
        let target = cayley_retraction(&eta, 0.5).unwrap();
        let moved = transport_proj(&target, &xi).unwrap();
        assert!(moved.tangency_residual() <= TOL_TAN * (1.0 + moved.frob_norm()));
    }

    #[test]
    fn isometric_rescaling() {
        let (u, eta) = setup(6, 2, 15);
        let xi = random_tangent(&u, Seed(16)).scale(3.0);
        for kind in [TransportKind::DiffRetraction, TransportKind::Projection] {
            let out = isometric_transport(&eta, &xi, 0.4, kind).unwrap();
            assert!((out.norm() - xi.norm()).abs() <= 1e-12 * xi.norm());
        }
        let id = isometric_transport(&TangentVector::zero(&u), &xi, 0.4, TransportKind::Projection).unwrap();
        assert!((id.delta() - xi.delta()).frob_norm() <= 1e-10 * xi.frob_norm());
        let z = isometric_transport(&eta, &TangentVector::zero(&u), 0.4, TransportKind::DiffRetraction).unwrap();
        assert_eq!(z.frob_norm(), 0.0);
        let g = metric(&xi, &xi).unwrap();
        assert!(g > 0.0);
    }

    #[test]
    fn pole_is_reported() {
        let e = DenseMatrix::identity(2);
        let u = ManifoldPoint::new(e).unwrap();
        // Ω̄ = diag(1, −1) for Δ = diag(1, −1) at U = I; cay(Ω̄) has a pole at t = 2
        let d = TangentVector::new(&u, DenseMatrix::from_diag(&[1.0, -1.0])).unwrap();
        assert_eq!(cayley_simple(&d, 2.0).unwrap_err(), SpstError::CayleyPoleHit);
    }
}
