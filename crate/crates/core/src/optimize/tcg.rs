use crate::error::{Result, SpstError};
use crate::manifold::{metric, TangentVector};

use super::TrustRegionConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcgStop {
    BoundaryHit,
    NegativeCurvature,
    ResidualSmall,
    ModelIncreased,
    MaxInner,
}

impl TcgStop {
    pub fn as_str(self) -> &'static str {
        match self {
            TcgStop::BoundaryHit => "boundary",
            TcgStop::NegativeCurvature => "negative_curvature",
            TcgStop::ResidualSmall => "residual",
            TcgStop::ModelIncreased => "model_increased",
            TcgStop::MaxInner => "max_inner",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TcgResult {
    pub xi: TangentVector,
    /// `H(ξ)`.
    pub h_xi: TangentVector,
    /// `m(0) − m(ξ)`.
    pub model_decrease: f64,
    pub inner: usize,
    pub stop: TcgStop,
    /// The Cauchy point beat the CG iterate.
    pub cauchy: bool,
    /// `ξ` lies on the trust-region boundary.
    pub on_boundary: bool,
}

/// `g(grad, ξ) + ½ g(Hξ, ξ)`.
fn model(grad: &TangentVector, xi: &TangentVector, h_xi: &TangentVector) -> Result<f64> {
    Ok(metric(grad, xi)? + 0.5 * metric(xi, h_xi)?)
}

/// Truncated conjugate gradients for `min m(ξ)` subject to `‖ξ‖_g ≤ radius`.
///
/// The result never does worse than the Cauchy point along `−grad`.
pub fn tcg_subproblem<F>(grad: &TangentVector, hess: F, radius: f64, cfg: &TrustRegionConfig) -> Result<TcgResult>
where
    F: Fn(&TangentVector) -> Result<TangentVector>,
{
    if !(radius > 0.0) {
        return Err(SpstError::InvalidParameter(format!(
            "trust radius must be positive, got {radius}"
        )));
    }
    let base = grad.base();
    let max_inner = cfg.tcg_max_inner.unwrap_or_else(|| base.dim());
    let r0 = metric(grad, grad)?;
    let norm_r0 = r0.max(0.0).sqrt();
    let zero = TangentVector::zero(base);
    if norm_r0 == 0.0 {
        return Ok(TcgResult {
            xi: zero.clone(),
            h_xi: zero,
            model_decrease: 0.0,
            inner: 0,
            stop: TcgStop::ResidualSmall,
            cauchy: false,
            on_boundary: false,
        });
    }
    let r2 = radius * radius;
    let mut eta = zero.clone();
    let mut h_eta = zero;
    let mut r = grad.clone();
    let mut r_r = r0;
    let mut delta = grad.scale(-1.0);
    let (mut e_pe, mut e_pd, mut d_pd) = (0.0, 0.0, r_r);
    let mut model_value = 0.0;
    let mut stop = TcgStop::MaxInner;
    let mut inner = 0;
    while inner < max_inner {
        inner += 1;
        let h_delta = hess(&delta)?;
        let d_hd = metric(&delta, &h_delta)?;
        let alpha = r_r / d_hd;
        let e_pe_new = e_pe + 2.0 * alpha * e_pd + alpha * alpha * d_pd;
        if !(d_hd > 0.0) || e_pe_new >= r2 {
            let tau = (-e_pd + (e_pd * e_pd + d_pd * (r2 - e_pe)).max(0.0).sqrt()) / d_pd;
            eta = eta.lin_comb(1.0, &delta, tau)?;
            h_eta = h_eta.lin_comb(1.0, &h_delta, tau)?;
            stop = if d_hd > 0.0 {
                TcgStop::BoundaryHit
            } else {
                TcgStop::NegativeCurvature
            };
            break;
        }
        let eta_new = eta.lin_comb(1.0, &delta, alpha)?;
        let h_eta_new = h_eta.lin_comb(1.0, &h_delta, alpha)?;
        let model_new = model(grad, &eta_new, &h_eta_new)?;
        if model_new >= model_value {
            stop = TcgStop::ModelIncreased;
            break;
        }
        e_pe = e_pe_new;
        eta = eta_new;
        h_eta = h_eta_new;
        model_value = model_new;

        r = r.lin_comb(1.0, &h_delta, alpha)?;
        let r_r_new = metric(&r, &r)?;
        let norm_r = r_r_new.max(0.0).sqrt();
        if norm_r <= norm_r0 * norm_r0.powf(cfg.tcg_theta).min(cfg.tcg_kappa) {
            stop = TcgStop::ResidualSmall;
            break;
        }
        let beta = r_r_new / r_r;
        r_r = r_r_new;
        delta = r.lin_comb(-1.0, &delta, beta)?;
        e_pd = beta * (e_pd + alpha * d_pd);
        d_pd = r_r + beta * beta * d_pd;
    }
    let m_eta = model(grad, &eta, &h_eta)?;
    let on_boundary = matches!(stop, TcgStop::BoundaryHit | TcgStop::NegativeCurvature);

    let h_grad = hess(grad)?;
    let g_hg = metric(grad, &h_grad)?;
    let t_max = radius / norm_r0;
    let t_c = if g_hg > 0.0 { (r0 / g_hg).min(t_max) } else { t_max };
    let m_c = -t_c * r0 + 0.5 * t_c * t_c * g_hg;
    if m_c < m_eta || !m_eta.is_finite() {
        return Ok(TcgResult {
            xi: grad.scale(-t_c),
            h_xi: h_grad.scale(-t_c),
            model_decrease: -m_c,
            inner,
            stop,
            cauchy: true,
            on_boundary: t_c == t_max,
        });
    }
    Ok(TcgResult {
        xi: eta,
        h_xi: h_eta,
        model_decrease: -m_eta,
        inner,
        stop,
        cauchy: false,
        on_boundary,
    })
}
