//! Trust-region subproblem solver and radius management.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, dot, norm};
use crate::scalar::Scalar;

/// Curvature `dᵀBd ≤ ZERO_CURVATURE·‖d‖²` is treated as non-positive.
pub const ZERO_CURVATURE: f64 = 1e-14;
/// Absolute floor on the CG residual tolerance.
pub const MIN_CG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrustRegionParams {
    /// Step acceptance threshold on ρ.
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub gamma1: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub delta0: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl Default for TrustRegionParams {
    fn default() -> Self {
        TrustRegionParams {
            eta1: 1e-4,
            eta2: 0.75,
            eta3: 0.1,
            gamma1: 0.5,
            zeta1: 2.0,
            zeta2: 0.5,
            delta0: 1.0,
            delta_min: 1e-12,
            delta_max: 1e12,
        }
    }
}

impl TrustRegionParams {
    pub fn validate(&self) -> Result<()> {
        let p = self;
        let ok = 0.0 <= p.eta3
            && p.eta3 < p.eta2
            && p.eta2 < 1.0
            && p.eta1 > 0.0
            && p.eta1 <= p.eta2
            && p.gamma1 > 0.0
            && p.gamma1 < 1.0
            && p.zeta1 > 1.0
            && p.zeta2 > 0.0
            && p.zeta2 < 1.0
            && p.delta_min > 0.0
            && p.delta_min <= p.delta_max
            && p.delta0 >= p.delta_min
            && p.delta0 <= p.delta_max;
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("inconsistent trust-region parameters {p:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustRegionState {
    pub delta: f64,
    pub rho: f64,
    pub params: TrustRegionParams,
}

impl TrustRegionState {
    pub fn new(params: TrustRegionParams) -> Result<Self> {
        params.validate()?;
        Ok(TrustRegionState {
            delta: params.delta0,
            rho: 0.0,
            params,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrBranch {
    /// Very successful, step well inside the region.
    Keep,
    /// Very successful, step near the boundary.
    Expand,
    /// Moderately successful.
    Hold,
    /// Unsuccessful.
    Shrink,
}

pub fn tr_branch(params: &TrustRegionParams, delta: f64, rho: f64, step_norm: f64) -> TrBranch {
    if rho > params.eta2 {
        if step_norm <= params.gamma1 * delta {
            TrBranch::Keep
        } else {
            TrBranch::Expand
        }
    } else if params.eta3 <= rho && rho <= params.eta2 {
        TrBranch::Hold
    } else {
        TrBranch::Shrink
    }
}

/// Next radius; NaN `ρ` falls through to the shrink branch.
pub fn adjust_tr(state: TrustRegionState, rho: f64, step_norm: f64) -> TrustRegionState {
    let p = state.params;
    let delta = match tr_branch(&p, state.delta, rho, step_norm) {
        TrBranch::Keep | TrBranch::Hold => state.delta,
        TrBranch::Expand => p.zeta1 * state.delta,
        TrBranch::Shrink => p.zeta2 * state.delta,
    };
    TrustRegionState {
        delta: delta.clamp(p.delta_min, p.delta_max),
        rho,
        params: p,
    }
}

/// `min(0.1, √‖g‖)·‖g‖`, floored at [`MIN_CG_TOL`].
pub fn cg_tolerance<T: Scalar>(grad_norm: T) -> T {
    let f = T::lit(0.1).min(grad_norm.sqrt());
    (f * grad_norm).max(T::lit(MIN_CG_TOL))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMode {
    PositiveRoot,
    ModelArgmin,
}

/// Restriction of the model to the line `z + τd`:
/// `m(z + τd) − m(z) = τ·slope + ½τ²·curvature`.
#[derive(Debug, Clone, Copy)]
pub struct LineModel<T> {
    pub slope: T,
    pub curvature: T,
}

impl<T: Scalar> LineModel<T> {
    pub fn at(&self, tau: T) -> T {
        tau * self.slope + T::lit(0.5) * tau * tau * self.curvature
    }
}

/// `τ ≥ 0` with `‖z + τd‖ = Δ`.
///
/// In `ModelArgmin` mode both real roots are considered, the nonnegative
/// ones are kept and the one with the lower model value wins. With `z`
/// strictly inside the region the roots have opposite signs, so both modes
/// agree.
pub fn boundary_tau<T: Scalar>(z: &[T], dvec: &[T], delta: T, mode: TauMode, model: Option<LineModel<T>>) -> Result<T> {
    let a = dot(dvec, dvec);
    if !(a > T::zero()) {
        return Err(invalid("boundary search along a zero direction"));
    }
    let b = T::lit(2.0) * dot(z, dvec);
    let c = dot(z, z) - delta * delta;
    let disc = (b * b - T::lit(4.0) * a * c).max(T::zero());
    let sq = disc.sqrt();
    // cancellation-free pair of roots
    let qf = if b >= T::zero() {
        -(b + sq) / T::lit(2.0)
    } else {
        (sq - b) / T::lit(2.0)
    };
    let (r1, r2) = if qf == T::zero() {
        (T::zero(), T::zero())
    } else {
        (qf / a, c / qf)
    };
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    if hi < T::zero() {
        return Err(Error::Numerical {
            what: "no nonnegative boundary root".into(),
            iterate_norm: norm(z).as_f64(),
        });
    }
    match (mode, model) {
        (TauMode::ModelArgmin, Some(mdl)) if lo >= T::zero() => Ok(if mdl.at(lo) < mdl.at(hi) { lo } else { hi }),
        _ => Ok(hi),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgStatus {
    InteriorConverged,
    BoundaryNegativeCurvature,
    BoundaryRadius,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct CgResult<T> {
    pub p: Vec<T>,
    pub status: CgStatus,
    /// Hessian-vector products requested.
    pub iterations: usize,
    /// `m(0) − m(p)`.
    pub model_decrease: T,
    /// Model values `m(z_0), m(z_1), …` including the returned step.
    pub model_trace: Vec<T>,
    /// Vector-arithmetic flops spent outside the callback.
    pub flops: u64,
}

/// Truncated CG for `min gᵀp + ½pᵀBp` subject to `‖p‖ ≤ Δ`.
///
/// `hessvec` is the only access to `B`; errors from it abort the solve.
pub fn cg_steihaug<T, E, F>(grad: &[T], mut hessvec: F, delta: T, eps: T, max_iter: usize) -> Result<CgResult<T>, E>
where
    T: Scalar,
    E: From<Error>,
    F: FnMut(&[T]) -> Result<Vec<T>, E>,
{
    if !(delta > T::zero()) || !(eps > T::zero()) {
        return Err(invalid(format!(
            "cg_steihaug needs delta > 0 and eps > 0 (delta={delta}, eps={eps})"
        ))
        .into());
    }
    let n = grad.len();
    let nf = n as u64;
    let mut z = vec![T::zero(); n];
    let mut r = grad.to_vec();
    let mut rr = dot(&r, &r);
    let mut flops = 2 * nf;
    let mut model = T::zero();
    let mut trace = vec![model];
    let finish = |p: Vec<T>, status, iterations, model: T, trace, flops| CgResult {
        p,
        status,
        iterations,
        model_decrease: -model,
        model_trace: trace,
        flops,
    };
    if rr.sqrt() < eps {
        return Ok(finish(z, CgStatus::InteriorConverged, 0, model, trace, flops));
    }
    let mut d: Vec<T> = r.iter().map(|&x| -x).collect();
    let zero_curv = T::lit(ZERO_CURVATURE);
    let half = T::lit(0.5);
    for it in 0..max_iter {
        let bd = hessvec(&d)?;
        if bd.len() != n {
            return Err(invalid(format!("hessvec returned {} entries, expected {n}", bd.len())).into());
        }
        let dbd = dot(&d, &bd);
        let dd = dot(&d, &d);
        let dr = dot(&d, &r);
        flops += 6 * nf;
        let line = LineModel {
            slope: dr,
            curvature: dbd,
        };
        if dbd <= zero_curv * dd {
            let tau = boundary_tau(&z, &d, delta, TauMode::ModelArgmin, Some(line))?;
            axpy(tau, &d, &mut z);
            model = model + line.at(tau);
            trace.push(model);
            flops += 8 * nf;
            return Ok(finish(
                z,
                CgStatus::BoundaryNegativeCurvature,
                it + 1,
                model,
                trace,
                flops,
            ));
        }
        let alpha = rr / dbd;
        let z_next: Vec<T> = z.iter().zip(&d).map(|(&a, &b)| a + alpha * b).collect();
        flops += 4 * nf;
        if norm(&z_next) >= delta {
            let tau = boundary_tau(&z, &d, delta, TauMode::PositiveRoot, None)?;
            axpy(tau, &d, &mut z);
            model = model + line.at(tau);
            trace.push(model);
            flops += 10 * nf;
            return Ok(finish(z, CgStatus::BoundaryRadius, it + 1, model, trace, flops));
        }
        z = z_next;
        model = model + alpha * dr + half * alpha * alpha * dbd;
        trace.push(model);
        axpy(alpha, &bd, &mut r);
        let rr_next = dot(&r, &r);
        flops += 6 * nf;
        if rr_next.sqrt() < eps {
            return Ok(finish(z, CgStatus::InteriorConverged, it + 1, model, trace, flops));
        }
        let beta = rr_next / rr;
        rr = rr_next;
        for (di, &ri) in d.iter_mut().zip(&r) {
            *di = beta * *di - ri;
        }
        flops += 2 * nf;
    }
    Ok(finish(z, CgStatus::MaxIter, max_iter, model, trace, flops))
}
