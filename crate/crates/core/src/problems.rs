//! Benchmark objectives, their test-data generators and the
//! symplectic-eigenvalue oracle.

use crate::error::{Result, SpstError};
use crate::manifold::{j_left, j_matrix, j_right, jt_left, random_point, sympl_inverse};
use crate::matrix::{complex_qr_unitary, sym_eig_jacobi, DenseMatrix, Seed};

/// A smooth cost on `ℝ^{2n×2k}` with Euclidean gradient and Hessian action.
pub trait Objective: Send + Sync {
    fn name(&self) -> &'static str;
    fn cost(&self, u: &DenseMatrix) -> f64;
    fn egrad(&self, u: &DenseMatrix) -> DenseMatrix;
    /// `∇²f(U)[Δ]`.
    fn ehess(&self, u: &DenseMatrix, d: &DenseMatrix) -> DenseMatrix;
}

/// `f(U) = ½‖A − U‖_F²`.
#[derive(Debug, Clone)]
pub struct NearestProblem {
    target: DenseMatrix,
}

pub fn nearest_problem(a: DenseMatrix) -> Result<NearestProblem> {
    let (r, c) = a.shape();
    if r % 2 != 0 || c % 2 != 0 {
        return Err(SpstError::OddDimension(r, c));
    }
    Ok(NearestProblem { target: a })
}

impl NearestProblem {
    /// Random target of unit Frobenius norm.
    pub fn random(n: usize, k: usize, seed: Seed) -> Self {
        let a = DenseMatrix::randn(2 * n, 2 * k, &mut seed.rng());
        let nrm = a.frob_norm();
        Self {
            target: a.scale(1.0 / nrm),
        }
    }

    pub fn target(&self) -> &DenseMatrix {
        &self.target
    }
}

impl Objective for NearestProblem {
    fn name(&self) -> &'static str {
        "nearest"
    }

    fn cost(&self, u: &DenseMatrix) -> f64 {
        0.5 * (&self.target - u).frob_norm().powi(2)
    }

    fn egrad(&self, u: &DenseMatrix) -> DenseMatrix {
        u - &self.target
    }

    fn ehess(&self, _u: &DenseMatrix, d: &DenseMatrix) -> DenseMatrix {
        d.clone()
    }
}

/// Brockett cost `f(X) = tr(XᵀAX)` with `A` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct BrockettProblem {
    a: DenseMatrix,
}

pub fn brockett_problem(a: DenseMatrix) -> Result<BrockettProblem> {
    if !a.is_square() {
        return Err(SpstError::ShapeMismatch {
            expected: (a.rows(), a.rows()),
            got: a.shape(),
        });
    }
    let asym = a.asymmetry();
    if asym > 1e-12 * a.frob_norm() {
        return Err(SpstError::NotSymmetric(asym));
    }
    Ok(BrockettProblem { a })
}

impl BrockettProblem {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }
}

impl Objective for BrockettProblem {
    fn name(&self) -> &'static str {
        "brockett"
    }

    fn cost(&self, x: &DenseMatrix) -> f64 {
        x.frob_dot(&(&self.a * x))
    }

    fn egrad(&self, x: &DenseMatrix) -> DenseMatrix {
        (&self.a * x).scale(2.0)
    }

    fn ehess(&self, _x: &DenseMatrix, d: &DenseMatrix) -> DenseMatrix {
        (&self.a * d).scale(2.0)
    }
}

/// Proper symplectic decomposition error `f(U) = ‖S − UU⁺S‖_F²`.
#[derive(Debug, Clone)]
pub struct PsdProblem {
    s: DenseMatrix,
    // S Sᵀ, cached once
    sst: DenseMatrix,
}

pub fn psd_problem(s: DenseMatrix) -> Result<PsdProblem> {
    let (r, c) = s.shape();
    if r % 2 != 0 {
        return Err(SpstError::OddDimension(r, c));
    }
    let mut sst = s.matmul_t(&s);
    sst.symmetrize();
    Ok(PsdProblem { s, sst })
}

impl PsdProblem {
    pub fn snapshots(&self) -> &DenseMatrix {
        &self.s
    }

    // (I − UU⁺) W
    fn p_apply(u: &DenseMatrix, up: &DenseMatrix, w: &DenseMatrix) -> DenseMatrix {
        w - &(u * &(up * w))
    }

    // (I − UU⁺)ᵀ W = W − (U⁺)ᵀ Uᵀ W
    fn pt_apply(u: &DenseMatrix, up: &DenseMatrix, w: &DenseMatrix) -> DenseMatrix {
        w - &up.t_matmul(&u.t_matmul(w))
    }
}

impl Objective for PsdProblem {
    fn name(&self) -> &'static str {
        "psd"
    }

    fn cost(&self, u: &DenseMatrix) -> f64 {
        let up = sympl_inverse(u).expect("even shape checked by caller");
        (&self.s - &(u * &(&up * &self.s))).frob_norm().powi(2)
    }

    /// `−2(P SSᵀ JᵀUJ − J SSᵀ PᵀUJ)` with `P = I − UU⁺`.
    fn egrad(&self, u: &DenseMatrix) -> DenseMatrix {
        let up = sympl_inverse(u).expect("even shape checked by caller");
        let jtuj = j_right(&jt_left(u));
        let t1 = Self::p_apply(u, &up, &(&self.sst * &jtuj));
        let t2 = j_left(&(&self.sst * &Self::pt_apply(u, &up, &j_right(u))));
        (&t1 - &t2).scale(-2.0)
    }

    /// Directional derivative of [`Self::egrad`]:
    /// `−2(A SSᵀJᵀUJ + P SSᵀJᵀΔJ − J SSᵀAᵀUJ − J SSᵀPᵀΔJ)`, `A = −ΔU⁺ − UΔ⁺`.
    fn ehess(&self, u: &DenseMatrix, d: &DenseMatrix) -> DenseMatrix {
        let up = sympl_inverse(u).expect("even shape checked by caller");
        let dp = sympl_inverse(d).expect("even shape checked by caller");
        let a_apply = |w: &DenseMatrix| -> DenseMatrix { -&(&(d * &(&up * w)) + &(u * &(&dp * w))) };
        let at_apply =
            |w: &DenseMatrix| -> DenseMatrix { -&(&up.t_matmul(&d.t_matmul(w)) + &dp.t_matmul(&u.t_matmul(w))) };
        let t1 = a_apply(&(&self.sst * &j_right(&jt_left(u))));
        let t2 = Self::p_apply(u, &up, &(&self.sst * &j_right(&jt_left(d))));
        let t3 = j_left(&(&self.sst * &at_apply(&j_right(u))));
        let t4 = j_left(&(&self.sst * &Self::pt_apply(u, &up, &j_right(d))));
        (&(&t1 + &t2) - &(&t3 + &t4)).scale(-2.0)
    }
}

/// Test matrix with known symplectic spectrum `1, …, n`.
#[derive(Debug, Clone)]
pub struct WilliamsonInstance {
    pub n: usize,
    pub d: Vec<f64>,
    pub s: DenseMatrix,
    pub a: DenseMatrix,
    pub l: usize,
    pub c: f64,
    pub gauss_d: f64,
}

/// Symplectic Gauss transformation `L = [[C, B], [0, C⁻¹]]`.
///
/// `C` is the identity except for `c` at (1-based) positions `l−1` and `l`;
/// `B` is zero except for `d` at `(l−1, l)` and `(l, l−1)`.
pub fn gauss_transformation(n: usize, l: usize, c: f64, d: f64) -> Result<DenseMatrix> {
    if l < 2 || l > n {
        return Err(SpstError::BadGaussParams(format!(
            "need 2 <= l <= n, got l = {l}, n = {n}"
        )));
    }
    if c == 0.0 || !c.is_finite() || !d.is_finite() {
        return Err(SpstError::BadGaussParams(format!(
            "need finite c != 0 and finite d, got c = {c}, d = {d}"
        )));
    }
    let mut m = DenseMatrix::identity(2 * n);
    let (i, j) = (l - 2, l - 1);
    m[(i, i)] = c;
    m[(j, j)] = c;
    m[(n + i, n + i)] = 1.0 / c;
    m[(n + j, n + j)] = 1.0 / c;
    m[(i, n + j)] = d;
    m[(j, n + i)] = d;
    Ok(m)
}

/// `A = S blkdiag(D, D) Sᵀ` with `D = diag(1, …, n)` and `S = J K L(l, c, d)`.
pub fn gen_williamson(n: usize, l: usize, c: f64, d: f64, seed: Seed) -> Result<WilliamsonInstance> {
    let lmat = gauss_transformation(n, l, c, d)?;
    let (re, im) = complex_qr_unitary(n, seed)?;
    let mut k = DenseMatrix::zeros(2 * n, 2 * n);
    k.set_block(0, 0, &re);
    k.set_block(0, n, &(-&im));
    k.set_block(n, 0, &im);
    k.set_block(n, n, &re);
    let s = j_left(&(&k * &lmat));
    let diag: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let dd: Vec<f64> = diag.iter().chain(diag.iter()).copied().collect();
    let mut a = (&s * &DenseMatrix::from_diag(&dd)).matmul_t(&s);
    a.symmetrize();
    Ok(WilliamsonInstance {
        n,
        d: diag,
        s,
        a,
        l,
        c,
        gauss_d: d,
    })
}

/// Symplectic eigenvalues of an SPD matrix, ascending.
///
/// With `M = B^{1/2} J B^{1/2}` the eigenvalues of `MMᵀ` are the squared
/// symplectic eigenvalues, each appearing twice.
pub fn symplectic_eigs(b: &DenseMatrix) -> Result<Vec<f64>> {
    let (r, c) = b.shape();
    if r != c || r % 2 != 0 {
        return Err(SpstError::OddDimension(r, c));
    }
    let eig = sym_eig_jacobi(b)?;
    if !(eig.values[0] > 0.0) {
        return Err(SpstError::NotPositiveDefinite);
    }
    let sq: Vec<f64> = eig.values.iter().map(|v| v.sqrt()).collect();
    let v = &eig.vectors;
    let half = (v * &DenseMatrix::from_diag(&sq)).matmul_t(v);
    let m = &(&half * &j_matrix(r / 2)) * &half;
    let mut mmt = m.matmul_t(&m);
    mmt.symmetrize();
    let ev = sym_eig_jacobi(&mmt)?.values;
    let top = ev.last().copied().unwrap_or(1.0).abs();
    let mut out = Vec::with_capacity(r / 2);
    for pair in ev.chunks(2) {
        let gap = (pair[0] - pair[1]).abs() / top;
        if gap > 1e-6 {
            return Err(SpstError::PairingFailure(gap));
        }
        out.push((0.5 * (pair[0] + pair[1])).max(0.0).sqrt());
    }
    Ok(out)
}

/// Snapshot data of rank `2r` lying in the span of a symplectic basis.
#[derive(Debug, Clone)]
pub struct PsdInstance {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub t: DenseMatrix,
    pub c: DenseMatrix,
    pub s: DenseMatrix,
}

pub fn gen_psd_instance(n: usize, m: usize, r: usize, seed: Seed) -> Result<PsdInstance> {
    if r == 0 || r > n || m == 0 {
        return Err(SpstError::InvalidParameter(format!(
            "need 1 <= r <= n and m >= 1, got n = {n}, m = {m}, r = {r}"
        )));
    }
    let t = random_point(n, r, seed.derive(0)).u().clone();
    let c = DenseMatrix::randn(2 * r, 2 * m, &mut seed.derive(1).rng());
    let c = c.scale(1.0 / c.frob_norm());
    let s = &t * &c;
    Ok(PsdInstance { n, m, r, t, c, s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{check_point, random_tangent, selector};

    fn fd_grad(obj: &dyn Objective, u: &DenseMatrix, v: &DenseMatrix, h: f64) -> f64 {
        let mut up = u.clone();
        up.axpy(h, v);
        let mut um = u.clone();
        um.axpy(-h, v);
        (obj.cost(&up) - obj.cost(&um)) / (2.0 * h)
    }

    fn check_derivatives(obj: &dyn Objective, n: usize, k: usize, gtol: f64, htol: f64) {
        for s in 0..5 {
            let u = random_point(n, k, Seed(500 + s));
            let v = DenseMatrix::randn(2 * n, 2 * k, &mut Seed(600 + s).rng());
            let g = obj.egrad(u.u());
            let exact = g.frob_dot(&v);
            let fd = fd_grad(obj, u.u(), &v, 1e-6);
            assert!(
                (exact - fd).abs() <= gtol * (1.0 + exact.abs()),
                "{}: {exact} vs {fd}",
                obj.name()
            );
            let h = 1e-5;
            let mut up = u.u().clone();
            up.axpy(h, &v);
            let mut um = u.u().clone();
            um.axpy(-h, &v);
            let fdh = (&obj.egrad(&up) - &obj.egrad(&um)).scale(0.5 / h);
            let hv = obj.ehess(u.u(), &v);
            assert!(
                (&hv - &fdh).frob_norm() <= htol * (1.0 + hv.frob_norm()),
                "{}: {}",
                obj.name(),
                (&hv - &fdh).frob_norm()
            );
        }
    }

    #[test]
    fn nearest_basics() {
        let u = random_point(5, 2, Seed(1));
        let p = nearest_problem(u.u().clone()).unwrap();
        assert_eq!(p.cost(u.u()), 0.0);
        assert_eq!(p.egrad(u.u()).frob_norm(), 0.0);
        let q = NearestProblem::random(5, 2, Seed(2));
        assert!((q.target().frob_norm() - 1.0).abs() < 1e-14);
        check_derivatives(&q, 5, 2, 1e-6, 1e-6);
    }

    #[test]
    fn brockett_basics() {
        let p = brockett_problem(DenseMatrix::identity(8)).unwrap();
        let x = DenseMatrix::randn(8, 4, &mut Seed(3).rng());
        assert!((p.cost(&x) - x.frob_norm().powi(2)).abs() < 1e-12);
        let w = gen_williamson(4, 3, 2.0, 1.0, Seed(4)).unwrap();
        let b = brockett_problem(w.a.clone()).unwrap();
        check_derivatives(&b, 4, 2, 1e-6, 1e-6);
        assert!(matches!(
            brockett_problem(DenseMatrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]])),
            Err(SpstError::NotSymmetric(_))
        ));
    }

    #[test]
    fn psd_basics() {
        let u = random_point(6, 2, Seed(5));
        let c = DenseMatrix::randn(4, 7, &mut Seed(6).rng());
        let p = psd_problem(u.u() * &c).unwrap();
        assert!(p.cost(u.u()) <= 1e-20);
        let inst = gen_psd_instance(6, 5, 3, Seed(7)).unwrap();
        let q = psd_problem(inst.s.clone()).unwrap();
        check_derivatives(&q, 6, 2, 1e-5, 1e-4);
    }

    #[test]
    fn gauss_identity_case() {
        let l = gauss_transformation(4, 3, 1.0, 0.0).unwrap();
        assert_eq!(l, DenseMatrix::identity(8));
        assert!(check_point(&gauss_transformation(4, 3, 2.0, 1.0).unwrap()).unwrap() < 1e-14);
        assert!(matches!(
            gauss_transformation(4, 1, 2.0, 1.0),
            Err(SpstError::BadGaussParams(_))
        ));
        assert!(matches!(
            gauss_transformation(4, 3, 0.0, 1.0),
            Err(SpstError::BadGaussParams(_))
        ));
    }

    #[test]
    fn williamson_instance() {
        let w = gen_williamson(6, 3, 2.0, 1.0, Seed(8)).unwrap();
        assert!(check_point(&w.s).unwrap() <= 1e-8);
        let eigs = symplectic_eigs(&w.a).unwrap();
        for (i, e) in eigs.iter().enumerate() {
            assert!((e - (i + 1) as f64).abs() <= 1e-8, "{eigs:?}");
        }
    }

    #[test]
    fn symplectic_eigs_normal_forms() {
        let e = symplectic_eigs(&DenseMatrix::identity(6)).unwrap();
        assert!(e.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let e = symplectic_eigs(&DenseMatrix::from_diag(&[1.0, 2.0, 3.0, 1.0, 2.0, 3.0])).unwrap();
        for (i, v) in e.iter().enumerate() {
            assert!((v - (i + 1) as f64).abs() < 1e-12);
        }
        assert_eq!(
            symplectic_eigs(&DenseMatrix::from_diag(&[1.0, -1.0])).unwrap_err(),
            SpstError::NotPositiveDefinite
        );
        assert!(matches!(
            symplectic_eigs(&DenseMatrix::zeros(3, 3)),
            Err(SpstError::OddDimension(3, 3))
        ));
    }

    #[test]
    fn brockett_lower_bound() {
        let w = gen_williamson(5, 3, 2.0, 1.0, Seed(9)).unwrap();
        let b = brockett_problem(w.a.clone()).unwrap();
        let e = selector(5, 2);
        for s in 0..5 {
            let d = random_tangent(&crate::manifold::ManifoldPoint::new(e.clone()).unwrap(), Seed(s));
            let x = crate::retraction::cayley_retraction(&d, 1.0).unwrap();
            assert!(b.cost(x.u()) >= 2.0 * (1.0 + 2.0) - 1e-10);
        }
    }

    #[test]
    fn psd_instance_properties() {
        let inst = gen_psd_instance(8, 6, 3, Seed(10)).unwrap();
        assert!((inst.c.frob_norm() - 1.0).abs() <= 1e-14);
        let ev = sym_eig_jacobi(&inst.s.gram()).unwrap().values;
        // eigenvalues of SᵀS are squared singular values
        let rank = ev.iter().filter(|&&v| v > 1e-10).count();
        assert_eq!(rank, 6);
    }
}
