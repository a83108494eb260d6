//! Second-order geometry: the Christoffel form of the right-invariant
//! metric, the exact Riemannian Hessian and its projected-Euclidean
//! approximation.
//!
//! Inputs to the Christoffel form are always normalized to unit Frobenius
//! norm and the result rescaled by bilinearity; the quadratic form grows
//! quickly with the input scale and this keeps its evaluation accurate.

use crate::error::Result;
use crate::manifold::{egrad_to_rgrad, j_left, omega_bar, proj_spst, rgrad_raw, ManifoldPoint, TangentVector};
use crate::matrix::DenseMatrix;
use crate::problems::Objective;
use crate::retraction::geodesic_matrix;

/// `−(Ω̄ − Ω̄ᵀ)(Δ + Ω̄ᵀU) − (Ω̄ᵀ)²U` for `Ω̄ = Ω̄(Δ)`, no rescaling.
fn christoffel_raw(delta: &TangentVector) -> DenseMatrix {
    let lift = omega_bar(delta);
    let dbar = lift.delta_bar(delta.base());
    let v = delta.delta() + &dbar;
    let mut out = -&lift.apply_skew(&v);
    out -= &lift.apply_t(&dbar);
    out
}

/// `Γ(Δ, Δ)`.
pub fn christoffel_same(delta: &TangentVector) -> DenseMatrix {
    let nrm = delta.frob_norm();
    if nrm == 0.0 {
        let (r, c) = delta.delta().shape();
        return DenseMatrix::zeros(r, c);
    }
    christoffel_raw(&delta.scale(1.0 / nrm)).scale(nrm * nrm)
}

/// `Γ(Δ, Ξ)` by polarization of [`christoffel_same`].
pub fn christoffel(delta: &TangentVector, xi: &TangentVector) -> Result<DenseMatrix> {
    let (na, nb) = (delta.frob_norm(), xi.frob_norm());
    if na == 0.0 || nb == 0.0 {
        let (r, c) = delta.delta().shape();
        return Ok(DenseMatrix::zeros(r, c));
    }
    let plus = delta.lin_comb(1.0 / na, xi, 1.0 / nb)?;
    let minus = delta.lin_comb(1.0 / na, xi, -1.0 / nb)?;
    let diff = &christoffel_same(&plus) - &christoffel_same(&minus);
    Ok(diff.scale(0.25 * na * nb))
}

/// Second derivative at `t = 0` of the geodesic through `U` with velocity `Δ`,
/// `(Ω̄ − Ω̄ᵀ)(Δ + Ω̄ᵀU) + (Ω̄ᵀ)²U`.
pub fn geodesic_acceleration(delta: &TangentVector) -> DenseMatrix {
    -&christoffel_raw(delta)
}

/// Product-rule derivative of the Riemannian gradient field along `Δ`:
/// `∇²f[Δ]UᵀU + ∇f(ΔᵀU + UᵀΔ) + JΔ∇fᵀJU + JU(∇²f[Δ])ᵀJU + JU∇fᵀJΔ`.
pub fn dgrad(u: &ManifoldPoint, egrad: &DenseMatrix, ehess_d: &DenseMatrix, d: &DenseMatrix) -> DenseMatrix {
    let uu = u.u();
    let ju = j_left(uu);
    let jd = j_left(d);
    let mut sym = d.t_matmul(uu);
    sym += &uu.t_matmul(d);
    let mut out = ehess_d * u.gram();
    out += &(egrad * &sym);
    out += &j_left(&(d * &egrad.t_matmul(&ju)));
    out += &j_left(&(uu * &ehess_d.t_matmul(&ju)));
    out += &j_left(&(uu * &egrad.t_matmul(&jd)));
    out
}

/// `P_U(D(grad f)(U)[Δ] + Γ(grad f(U), Δ))`.
pub fn rhess_exact(prob: &dyn Objective, delta: &TangentVector) -> Result<TangentVector> {
    let u = delta.base();
    let eg = prob.egrad(u.u());
    let rg = egrad_to_rgrad(u, &eg)?;
    rhess_exact_with(prob, &eg, &rg, delta)
}

fn rhess_exact_with(
    prob: &dyn Objective,
    eg: &DenseMatrix,
    rg: &TangentVector,
    delta: &TangentVector,
) -> Result<TangentVector> {
    let u = delta.base();
    let eh = prob.ehess(u.u(), delta.delta());
    let mut v = dgrad(u, eg, &eh, delta.delta());
    v += &christoffel(rg, delta)?;
    proj_spst(u, &v)
}

/// `P_U(D(grad f)(U)[Δ])`.
pub fn rhess_projected(prob: &dyn Objective, delta: &TangentVector) -> Result<TangentVector> {
    let u = delta.base();
    let eg = prob.egrad(u.u());
    rhess_projected_with(prob, &eg, delta)
}

fn rhess_projected_with(prob: &dyn Objective, eg: &DenseMatrix, delta: &TangentVector) -> Result<TangentVector> {
    let u = delta.base();
    let eh = prob.ehess(u.u(), delta.delta());
    proj_spst(u, &dgrad(u, eg, &eh, delta.delta()))
}

/// Central difference of `t ↦ grad f(γ(t))` along the exact geodesic at `t = 0`.
///
/// Ambient and unprojected, so it is directly comparable with [`dgrad`].
pub fn fd_hess_oracle(prob: &dyn Objective, delta: &TangentVector, h: f64) -> Result<DenseMatrix> {
    let rgrad_at = |m: &DenseMatrix| rgrad_raw(m, &m.gram(), &prob.egrad(m));
    let plus = rgrad_at(&geodesic_matrix(delta, h)?);
    let minus = rgrad_at(&geodesic_matrix(delta, -h)?);
    Ok((&plus - &minus).scale(0.5 / h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HessianKind {
    #[default]
    ExactMetric,
    ProjectedEuclidean,
}

/// Hessian action at a fixed base point; the gradients are computed once.
pub struct HessianOperator<'a> {
    kind: HessianKind,
    base: ManifoldPoint,
    problem: &'a dyn Objective,
    egrad: DenseMatrix,
    rgrad: TangentVector,
}

impl<'a> HessianOperator<'a> {
    pub fn new(kind: HessianKind, base: &ManifoldPoint, problem: &'a dyn Objective) -> Result<Self> {
        let egrad = problem.egrad(base.u());
        let rgrad = egrad_to_rgrad(base, &egrad)?;
        Ok(Self {
            kind,
            base: base.clone(),
            problem,
            egrad,
            rgrad,
        })
    }

    pub fn kind(&self) -> HessianKind {
        self.kind
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn rgrad(&self) -> &TangentVector {
        &self.rgrad
    }

    pub fn apply(&self, delta: &TangentVector) -> Result<TangentVector> {
        match self.kind {
            HessianKind::ExactMetric => rhess_exact_with(self.problem, &self.egrad, &self.rgrad, delta),
            HessianKind::ProjectedEuclidean => rhess_projected_with(self.problem, &self.egrad, delta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{metric, random_point, random_tangent, TOL_TAN};
    use crate::matrix::Seed;
    use crate::problems::NearestProblem;

    struct Constant;

    impl Objective for Constant {
        fn name(&self) -> &'static str {
            "constant"
        }
        fn cost(&self, _u: &DenseMatrix) -> f64 {
            3.0
        }
        fn egrad(&self, u: &DenseMatrix) -> DenseMatrix {
            DenseMatrix::zeros(u.rows(), u.cols())
        }
        fn ehess(&self, u: &DenseMatrix, _d: &DenseMatrix) -> DenseMatrix {
            DenseMatrix::zeros(u.rows(), u.cols())
        }
    }

    #[test]
    fn christoffel_zero_and_scaling() {
        let u = random_point(6, 2, Seed(1));
        let d = random_tangent(&u, Seed(2));
        assert_eq!(christoffel_same(&TangentVector::zero(&u)).frob_norm(), 0.0);
        let g1 = christoffel_same(&d);
        let g3 = christoffel_same(&d.scale(3.0));
        assert!((&g3 - &g1.scale(9.0)).frob_norm() <= 1e-10 * g3.frob_norm());
        assert_eq!(christoffel(&d, &TangentVector::zero(&u)).unwrap().frob_norm(), 0.0);
    }

    #[test]
    fn christoffel_polarization_and_symmetry() {
        let u = random_point(6, 2, Seed(3));
        let a = random_tangent(&u, Seed(4));
        let b = random_tangent(&u, Seed(5)).scale(2.0);
        let aa = christoffel(&a, &a).unwrap();
        assert!((&aa - &christoffel_same(&a)).frob_norm() <= 1e-10 * aa.frob_norm());
        let ab = christoffel(&a, &b).unwrap();
        let ba = christoffel(&b, &a).unwrap();
        assert!((&ab - &ba).frob_norm() <= 1e-10 * ab.frob_norm());
    }

    #[test]
    fn christoffel_geodesic_identity() {
        let u = random_point(8, 3, Seed(6));
        let d = random_tangent(&u, Seed(7));
        let gam = christoffel_same(&d);
        let h = 1e-3;
        let g0 = u.u();
        let gp = geodesic_matrix(&d, h).unwrap();
        let gm = geodesic_matrix(&d, -h).unwrap();
        let mut acc = &gp + &gm;
        acc.axpy(-2.0, g0);
        let acc = acc.scale(1.0 / (h * h));
        assert!((&acc + &gam).frob_norm() <= 1e-5 * (1.0 + gam.frob_norm()));
        assert!((&geodesic_acceleration(&d) + &gam).frob_norm() <= 1e-12 * (1.0 + gam.frob_norm()));
    }

    #[test]
    fn constant_objective_has_zero_hessian() {
        let u = random_point(5, 2, Seed(8));
        let d = random_tangent(&u, Seed(9));
        assert_eq!(rhess_exact(&Constant, &d).unwrap().frob_norm(), 0.0);
        assert_eq!(rhess_projected(&Constant, &d).unwrap().frob_norm(), 0.0);
    }

    #[test]
    fn exact_hessian_self_adjoint_and_tangent() {
        let u = random_point(7, 2, Seed(10));
        let prob = NearestProblem::random(7, 2, Seed(11));
        let op = HessianOperator::new(HessianKind::ExactMetric, &u, &prob).unwrap();
        let a = random_tangent(&u, Seed(12));
        let b = random_tangent(&u, Seed(13));
        let ha = op.apply(&a).unwrap();
        let hb = op.apply(&b).unwrap();
        let x = metric(&ha, &b).unwrap();
        let y = metric(&hb, &a).unwrap();
        assert!((x - y).abs() <= 1e-8 * (x.abs() + y.abs()), "{x} vs {y}");
        assert!(ha.tangency_residual() <= TOL_TAN * (1.0 + ha.frob_norm()));
    }

    #[test]
    fn dgrad_matches_oracle() {
        let u = random_point(6, 2, Seed(14));
        let prob = NearestProblem::random(6, 2, Seed(15));
        let d = random_tangent(&u, Seed(16));
        let eg = prob.egrad(u.u());
        let exact = dgrad(&u, &eg, &prob.ehess(u.u(), d.delta()), d.delta());
        let e1 = (&fd_hess_oracle(&prob, &d, 1e-3).unwrap() - &exact).frob_norm();
        let e2 = (&fd_hess_oracle(&prob, &d, 5e-4).unwrap() - &exact).frob_norm();
        assert!((3.5..4.5).contains(&(e1 / e2)), "ratio {}", e1 / e2);
        assert_eq!(
            fd_hess_oracle(&prob, &TangentVector::zero(&u), 1e-4)
                .unwrap()
                .frob_norm(),
            0.0
        );
    }
}
