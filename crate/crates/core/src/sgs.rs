//! Residual-based dynamic sub-grid viscosity.
//!
//! `mu_SGS = max(0, min(mu_max, mu_res))` per element, with
//! `mu_res = D^2 max(|R_H|_e / |H - mean H|, |R_HU|_e / |HU - mean HU|)` and
//! `mu_max = 0.5 D max_e(|u| + sqrt(g h))`, all norms being max norms.

use crate::error::{Result, SweError};
use crate::galerkin::SemiDiscreteOp;
use crate::mesh::{FilterWidth, Mesh};

/// Relative size below which a denominator is treated as zero.
pub const DENOMINATOR_GUARD: f64 = 1e-14;

/// Residual entries below this fraction of the flux scale over the filter
/// width are round-off and count as zero. The flux scale is `max h lambda`
/// for mass and `max h lambda^2` for momentum.
pub const ROUNDOFF_GUARD: f64 = 1e-12;

/// Per-element viscosity together with its ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct SgsFields {
    pub mu: Vec<f64>,
    pub mu_res: Vec<f64>,
    pub mu_max: Vec<f64>,
}

impl SgsFields {
    pub fn max_mu(&self) -> f64 {
        self.mu.iter().copied().fold(0.0, f64::max)
    }
}

/// Strong-form residual `(q_n - q_prev)/dt + div F(q_n) - S(q_n)`.
///
/// Without history the time derivative is taken as zero. Entries at round-off
/// level (see [`ROUNDOFF_GUARD`]) are set to zero.
pub fn residuals(op: &SemiDiscreteOp, q_n: &[f64], prev: Option<(&[f64], f64)>) -> Result<Vec<f64>> {
    if q_n.len() != op.len() {
        return Err(SweError::SizeMismatch {
            expected: op.len(),
            got: q_n.len(),
        });
    }
    let mut r = op.inviscid_divergence_minus_source(q_n);
    if let Some((q_prev, dt)) = prev {
        if !(dt > 0.0) {
            return Err(SweError::InvalidArgument(format!(
                "residual time step {dt} must be positive"
            )));
        }
        if q_prev.len() != q_n.len() {
            return Err(SweError::SizeMismatch {
                expected: q_n.len(),
                got: q_prev.len(),
            });
        }
        for ((ri, a), b) in r.iter_mut().zip(q_n).zip(q_prev) {
            *ri += (a - b) / dt;
        }
    }
    let n = op.mesh().n_local();
    let lam = op.wave_speeds(q_n);
    let (mut fm, mut fu) = (0.0f64, 0.0f64);
    for k in 0..n {
        fm = fm.max(q_n[k] * lam[k]);
        fu = fu.max(q_n[k] * lam[k] * lam[k]);
    }
    let width = op.mesh().filter_width().min();
    for (i, ri) in r.iter_mut().enumerate() {
        let floor = ROUNDOFF_GUARD * if i < n { fm } else { fu } / width;
        if ri.abs() <= floor {
            *ri = 0.0;
        }
    }
    Ok(r)
}

/// `max |f - mean(f)|` over the domain, the mean being mass weighted.
pub fn deviation_from_mean(mesh: &Mesh, field: &[f64]) -> f64 {
    let mass = mesh.mass();
    let total: f64 = mass.iter().sum();
    let mean = field.iter().zip(mass).map(|(f, m)| f * m).sum::<f64>() / total;
    field.iter().map(|f| (f - mean).abs()).fold(0.0, f64::max)
}

fn guarded_denominator(mesh: &Mesh, field: &[f64]) -> Option<f64> {
    let dev = deviation_from_mean(mesh, field);
    let scale = field.iter().map(|f| f.abs()).fold(1.0, f64::max);
    (dev >= DENOMINATOR_GUARD * scale).then_some(dev)
}

/// Element-wise `mu_res` from nodal residuals `r` of the state `q`.
pub fn mu_res(mesh: &Mesh, q: &[f64], r: &[f64], filter: &FilterWidth) -> Vec<f64> {
    let n = mesh.n_local();
    let npe = mesh.npe();
    let nvar = q.len() / n;
    let denoms: Vec<Option<f64>> = (0..nvar)
        .map(|v| guarded_denominator(mesh, &q[v * n..(v + 1) * n]))
        .collect();
    (0..mesh.n_elements())
        .map(|e| {
            let mut ratio: f64 = 0.0;
            for (v, den) in denoms.iter().enumerate() {
                let Some(den) = den else { continue };
                let rv = &r[v * n + e * npe..v * n + (e + 1) * npe];
                let num = rv.iter().map(|x| x.abs()).fold(0.0, f64::max);
                ratio = ratio.max(num / den);
            }
            let d = filter.get(e);
            d * d * ratio
        })
        .collect()
}

/// Element-wise `mu_max = 0.5 D max_e lambda` from nodal wave speeds.
pub fn mu_max(mesh: &Mesh, wave_speeds: &[f64], filter: &FilterWidth) -> Vec<f64> {
    let npe = mesh.npe();
    (0..mesh.n_elements())
        .map(|e| {
            let lam = wave_speeds[e * npe..(e + 1) * npe].iter().copied().fold(0.0, f64::max);
            0.5 * filter.get(e) * lam
        })
        .collect()
}

/// `max(0, min(mu_max, mu_res))` element-wise.
pub fn mu_sgs(mu_res: &[f64], mu_max: &[f64]) -> Vec<f64> {
    mu_res.iter().zip(mu_max).map(|(r, m)| r.min(*m).max(0.0)).collect()
}

/// Full viscosity evaluation for the current state and its predecessor.
pub fn dyn_sgs(op: &SemiDiscreteOp, q_n: &[f64], prev: Option<(&[f64], f64)>) -> Result<SgsFields> {
    let mesh = op.mesh();
    let filter = mesh.filter_width();
    let r = residuals(op, q_n, prev)?;
    let res = mu_res(mesh, q_n, &r, &filter);
    let max = mu_max(mesh, &op.wave_speeds(q_n), &filter);
    Ok(SgsFields {
        mu: mu_sgs(&res, &max),
        mu_res: res,
        mu_max: max,
    })
}
