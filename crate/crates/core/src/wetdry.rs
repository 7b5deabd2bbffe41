//! Wetting and drying: a permanent thin water layer on dry ground plus the
//! mean-preserving positivity rescale of the element heights, applied to
//! element-local data for both DG and CG. For CG the limited copies of a
//! shared node are merged afterwards by a mass-weighted average, which keeps
//! the global quadrature mass unchanged.
//!
//! Elements touching the film, or with a very uneven depth, move with a
//! single mass-weighted velocity, capped by the dam-break front speed of the
//! surrounding water. Water added to keep the film is taken back from the wet
//! column so the total stays fixed.

use crate::error::{Result, SweError};
use crate::galerkin::Method;
use crate::mesh::Mesh;
use crate::swe::{velocity, State, GRAVITY};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WetDryConfig {
    /// Thin-layer height kept on dry ground (m).
    pub epsilon: f64,
    /// Nodes below `dry_factor * epsilon` are treated as dry: zero velocity,
    /// frozen momentum.
    pub dry_factor: f64,
    /// Below `velocity_factor * epsilon` velocities are desingularized and the
    /// element counts as thin.
    pub velocity_factor: f64,
    /// Elements whose smallest height is below this fraction of their largest
    /// also count as thin.
    pub thin_ratio: f64,
}

impl Default for WetDryConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            dry_factor: 2.0,
            velocity_factor: 10.0,
            thin_ratio: 0.1,
        }
    }
}

impl WetDryConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        let cfg = Self {
            epsilon,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(SweError::InvalidArgument(format!(
                "wet threshold must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.dry_factor >= 1.0) {
            return Err(SweError::InvalidArgument(format!(
                "dry factor must be >= 1, got {}",
                self.dry_factor
            )));
        }
        if !(self.velocity_factor >= self.dry_factor) {
            return Err(SweError::InvalidArgument(format!(
                "velocity factor {} must be at least the dry factor {}",
                self.velocity_factor, self.dry_factor
            )));
        }
        if !(0.0..1.0).contains(&self.thin_ratio) {
            return Err(SweError::InvalidArgument(format!(
                "thin ratio must lie in [0, 1), got {}",
                self.thin_ratio
            )));
        }
        Ok(())
    }

    /// Depth below which velocities are desingularized.
    pub fn velocity_depth(&self) -> f64 {
        self.epsilon * self.velocity_factor
    }

    /// Height below which a node counts as dry.
    pub fn dry_cutoff(&self) -> f64 {
        self.epsilon * self.dry_factor
    }
}

/// Counters reported by a limiting pass.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LimiterStats {
    pub elements_limited: usize,
    pub nodes_clamped: usize,
    /// Elements whose mean fell below the thin layer and were reset to it.
    pub floor_resets: usize,
    /// Mass injected by floor resets and clamps (m or m^2 times height). It
    /// is withdrawn again from the water above the thin layer.
    pub mass_added: f64,
}

impl LimiterStats {
    pub fn merge(&mut self, other: &LimiterStats) {
        self.elements_limited += other.elements_limited;
        self.nodes_clamped += other.nodes_clamped;
        self.floor_resets += other.floor_resets;
        self.mass_added += other.mass_added;
    }

    pub fn modified(&self) -> bool {
        self.elements_limited + self.nodes_clamped + self.floor_resets > 0
    }
}

/// Raises every height below `epsilon` to `epsilon` and zeroes its momentum.
/// Returns the number of clamped nodes.
pub fn apply_thin_layer(state: &mut State, cfg: &WetDryConfig) -> usize {
    let n = state.n_nodes();
    let dim = state.dim();
    let mut clamped = Vec::new();
    for (k, h) in state.h_mut().iter_mut().enumerate() {
        if *h < cfg.epsilon || h.is_nan() {
            *h = cfg.epsilon;
            clamped.push(k);
        }
    }
    for a in 0..dim {
        let m = state.mom_mut(a);
        for &k in &clamped {
            m[k] = 0.0;
        }
    }
    debug_assert!(clamped.iter().all(|&k| k < n));
    clamped.len()
}

/// Rescales heights about `mean` so the minimum reaches `floor`:
/// `h_i <- mean + theta (h_i - mean)` with `theta = min(1, (mean - floor) / (mean - min))`.
/// Returns `theta` (1 when nothing was changed).
pub fn positivity_limiter(h: &mut [f64], mean: f64, floor: f64) -> Result<f64> {
    if !(mean > 0.0) {
        return Err(SweError::LimiterPrecondition {
            element: usize::MAX,
            mean,
        });
    }
    let m = h.iter().copied().fold(f64::INFINITY, f64::min);
    if m >= floor {
        return Ok(1.0);
    }
    let theta = ((mean - floor) / (mean - m)).clamp(0.0, 1.0);
    for v in h.iter_mut() {
        *v = mean + theta * (*v - mean);
    }
    Ok(theta)
}

/// Quadrature mean of `h` over one element.
pub fn element_mean(h: &[f64], mass: &[f64]) -> f64 {
    let num: f64 = h.iter().zip(mass).map(|(a, w)| a * w).sum();
    let den: f64 = mass.iter().sum();
    num / den
}

/// Limits every element so all heights are at least `epsilon`, preserving
/// element means (DG) or the global quadrature mass (CG).
pub fn limit_all(state: &mut State, mesh: &Mesh, method: Method, cfg: &WetDryConfig) -> Result<LimiterStats> {
    let npe = mesh.npe();
    let n = state.n_nodes();
    let dim = state.dim();
    let cutoff = cfg.dry_cutoff();
    let mass = mesh.mass();
    let mut stats = LimiterStats::default();
    let mut touched = Vec::new();
    let mut h_old = vec![0.0; npe];

    for e in 0..mesh.n_elements() {
        let r = e * npe..(e + 1) * npe;
        let hs = &state.h()[r.clone()];
        let m = hs.iter().copied().fold(f64::INFINITY, f64::min);
        if m >= cfg.epsilon {
            continue;
        }
        let mean = element_mean(hs, &mass[r.clone()]);
        if !(mean > 0.0) {
            return Err(SweError::LimiterPrecondition { element: e, mean });
        }
        h_old.copy_from_slice(hs);
        let data = state.as_mut_slice();
        if mean >= cfg.epsilon {
            positivity_limiter(&mut data[r.clone()], mean, cfg.epsilon)?;
            for k in r.clone() {
                data[k] = data[k].max(cfg.epsilon);
            }
            for a in 0..dim {
                let off = (a + 1) * n;
                for (l, k) in r.clone().enumerate() {
                    let u = velocity(h_old[l], data[off + k], cutoff);
                    data[off + k] = data[k] * u;
                }
            }
            stats.elements_limited += 1;
        } else {
            let w: f64 = mass[r.clone()].iter().sum();
            stats.mass_added += (cfg.epsilon - mean) * w;
            stats.floor_resets += 1;
            for k in r.clone() {
                data[k] = cfg.epsilon;
                for a in 0..dim {
                    data[(a + 1) * n + k] = 0.0;
                }
            }
        }
        touched.push(e);
    }

    if method == Method::Cg && !touched.is_empty() {
        restore_continuity(state, mesh, &touched);
    }
    let deficit: f64 = state
        .h()
        .iter()
        .zip(mass)
        .filter(|(h, _)| **h < cfg.epsilon)
        .map(|(h, w)| (cfg.epsilon - h) * w)
        .sum();
    stats.nodes_clamped += apply_thin_layer(state, cfg);
    stats.mass_added += deficit;
    if stats.mass_added > 0.0 {
        withdraw_mass(state, mass, cfg.epsilon, stats.mass_added);
    }
    // Heights are final here, so a second pass leaves velocities alone.
    flatten_thin_velocities(state, mesh, method, cfg);
    Ok(stats)
}

/// Nodes that move with one velocity. `nodes` holds `(node, weight)`;
/// `depth` is the largest height in the owning element and its face neighbours.
struct ThinGroup {
    nodes: Vec<(usize, f64)>,
    depth: f64,
}

/// Each thin element (DG), or for CG the global nodes of each thin element not
/// already taken by an earlier one, every global node appearing once via one
/// of its copies.
fn thin_groups(h: &[f64], mesh: &Mesh, method: Method, cfg: &WetDryConfig) -> Vec<ThinGroup> {
    let npe = mesh.npe();
    let ne = mesh.n_elements();
    let (hv, ratio) = (cfg.velocity_depth(), cfg.thin_ratio);
    let top: Vec<f64> = (0..ne)
        .map(|e| h[e * npe..(e + 1) * npe].iter().copied().fold(0.0, f64::max))
        .collect();
    let mut near = top.clone();
    for f in mesh.interior_faces() {
        near[f.left] = near[f.left].max(top[f.right]);
        near[f.right] = near[f.right].max(top[f.left]);
    }
    let thin: Vec<bool> = (0..ne)
        .map(|e| {
            let lo = h[e * npe..(e + 1) * npe].iter().copied().fold(f64::INFINITY, f64::min);
            lo < hv.max(ratio * top[e])
        })
        .collect();
    if method == Method::Dg {
        return (0..ne)
            .filter(|&e| thin[e])
            .map(|e| ThinGroup {
                nodes: (e * npe..(e + 1) * npe).map(|k| (k, mesh.mass()[k])).collect(),
                depth: near[e],
            })
            .collect();
    }
    // Each global node joins the first thin element that contains it.
    let ids = mesh.cg_ids();
    let gmass = mesh.global_mass();
    let mut claimed = vec![false; mesh.n_global()];
    let mut groups = Vec::new();
    for e in (0..ne).filter(|&e| thin[e]) {
        let mut group = Vec::new();
        for k in e * npe..(e + 1) * npe {
            let g = ids[k];
            if !claimed[g] {
                claimed[g] = true;
                group.push((k, gmass[g]));
            }
        }
        if !group.is_empty() {
            groups.push(ThinGroup {
                nodes: group,
                depth: near[e],
            });
        }
    }
    groups
}

/// Gives every wet node of a thin group the group's mass-weighted mean
/// velocity, which keeps the wet momentum of the group. The mean speed is
/// capped at `2 sqrt(g H)`, `H` the deepest height around the owning element:
/// the front speed of water released from rest at that depth.
fn flatten_thin_velocities(state: &mut State, mesh: &Mesh, method: Method, cfg: &WetDryConfig) {
    let n = state.n_nodes();
    let dim = state.dim();
    let cutoff = cfg.dry_cutoff();
    let groups = thin_groups(state.h(), mesh, method, cfg);
    if groups.is_empty() {
        return;
    }
    let data = state.as_mut_slice();
    let mut ubar = [0.0; 2];
    for group in &groups {
        let wet = || group.nodes.iter().filter(|(k, _)| data[*k] >= cutoff);
        let wh: f64 = wet().map(|&(k, w)| w * data[k]).sum();
        if !(wh > 0.0) {
            continue;
        }
        for (a, ub) in ubar.iter_mut().enumerate().take(dim) {
            *ub = wet().map(|&(k, w)| w * data[(a + 1) * n + k]).sum::<f64>() / wh;
        }
        let speed = ubar[..dim].iter().map(|u| u * u).sum::<f64>().sqrt();
        let cap = 2.0 * (GRAVITY * group.depth).sqrt();
        if speed > cap {
            ubar.iter_mut().for_each(|u| *u *= cap / speed);
        }
        let nodes: Vec<usize> = wet().map(|&(k, _)| k).collect();
        for k in nodes {
            for (a, ub) in ubar.iter().enumerate().take(dim) {
                data[(a + 1) * n + k] = data[k] * ub;
            }
        }
    }
    if method == Method::Cg {
        // Copy the group values to every copy of the grouped nodes.
        let ids = mesh.cg_ids();
        let mut rep = vec![usize::MAX; mesh.n_global()];
        for group in &groups {
            for &(k, _) in &group.nodes {
                rep[ids[k]] = k;
            }
        }
        for k in 0..n {
            let r = rep[ids[k]];
            if r != usize::MAX && r != k {
                for a in 0..dim {
                    data[(a + 1) * n + k] = data[(a + 1) * n + r];
                }
            }
        }
    }
}

/// Removes `amount` of water from the part of the column above the thin layer,
/// `h <- eps + (1 - alpha) (h - eps)`, keeping nodal velocities. The factor is
/// global, so continuous fields stay continuous.
fn withdraw_mass(state: &mut State, mass: &[f64], eps: f64, amount: f64) {
    let n = state.n_nodes();
    let dim = state.dim();
    let avail: f64 = state.h().iter().zip(mass).map(|(h, w)| w * (h - eps).max(0.0)).sum();
    if !(avail > amount) {
        return;
    }
    let alpha = amount / avail;
    let data = state.as_mut_slice();
    for k in 0..n {
        let h = data[k];
        if h <= eps {
            continue;
        }
        let hn = eps + (1.0 - alpha) * (h - eps);
        for a in 0..dim {
            data[(a + 1) * n + k] *= hn / h;
        }
        data[k] = hn;
    }
}

/// Mass-weighted average of all copies of the global nodes owned by `elements`.
fn restore_continuity(state: &mut State, mesh: &Mesh, elements: &[usize]) {
    let npe = mesh.npe();
    let ids = mesh.cg_ids();
    let mass = mesh.mass();
    let gmass = mesh.global_mass();
    let mut affected = vec![false; mesh.n_global()];
    for &e in elements {
        for k in e * npe..(e + 1) * npe {
            affected[ids[k]] = true;
        }
    }
    let nvar = state.nvar();
    let n = state.n_nodes();
    let data = state.as_mut_slice();
    let mut acc = vec![0.0; mesh.n_global()];
    for v in 0..nvar {
        let field = &mut data[v * n..(v + 1) * n];
        acc.iter_mut().for_each(|a| *a = 0.0);
        for k in 0..n {
            let g = ids[k];
            if affected[g] {
                acc[g] += mass[k] * field[k];
            }
        }
        for k in 0..n {
            let g = ids[k];
            if affected[g] {
                field[k] = acc[g] / gmass[g];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSet;
    use crate::mesh::BoundaryKind;

    #[test]
    fn thin_layer_clamps() {
        let mut s = State::from_vec(1, 3, vec![-1e-6, 0.5, 1e-3, 4.0, 5.0, 6.0]).unwrap();
        let n = apply_thin_layer(&mut s, &WetDryConfig::default());
        assert_eq!(n, 1);
        assert_eq!(s.h(), &[1e-3, 0.5, 1e-3]);
        assert_eq!(s.mom(0), &[0.0, 5.0, 6.0]);
        assert_eq!(apply_thin_layer(&mut s, &WetDryConfig::default()), 0);
    }

    #[test]
    fn rescale_identity_when_positive() {
        let mut h = vec![0.2, 0.3, 0.4];
        let theta = positivity_limiter(&mut h, 0.3, 1e-3).unwrap();
        assert_eq!(theta, 1.0);
        assert_eq!(h, vec![0.2, 0.3, 0.4]);
    }

    #[test]
    fn rescale_to_zero_floor() {
        let mut h = vec![-0.5, 1.5, 0.5];
        let theta = positivity_limiter(&mut h, 0.5, 0.0).unwrap();
        assert!((theta - 0.5).abs() < 1e-15);
        assert!(h[0].abs() < 1e-15);
    }

    #[test]
    fn rescale_rejects_nonpositive_mean() {
        let mut h = vec![-0.5, 0.1];
        assert!(matches!(
            positivity_limiter(&mut h, -0.2, 0.0),
            Err(SweError::LimiterPrecondition { .. })
        ));
    }

    #[test]
    fn limit_all_preserves_element_mass_and_is_idempotent() {
        let mesh = Mesh::new_1d(0.0, 2.0, 2, BasisSet::new(4).unwrap(), [BoundaryKind::Wall; 2]).unwrap();
        let n = mesh.n_local();
        let h: Vec<f64> = mesh.coords().iter().map(|c| 0.9 - 0.5 * c[0]).collect();
        let hu = vec![0.1; n];
        let mut s = State::from_vec(1, n, [h, hu].concat()).unwrap();
        for method in [Method::Dg, Method::Cg] {
            let mut s1 = s.clone();
            let npe = mesh.npe();
            let before: Vec<f64> = (0..2)
                .map(|e| element_mean(&s1.h()[e * npe..(e + 1) * npe], &mesh.mass()[e * npe..(e + 1) * npe]))
                .collect();
            let mass0: f64 = s1.h().iter().zip(mesh.mass()).map(|(a, b)| a * b).sum();
            let stats = limit_all(&mut s1, &mesh, method, &WetDryConfig::default()).unwrap();
            assert!(stats.elements_limited + stats.floor_resets > 0);
            assert!(s1.h().iter().all(|&v| v >= 1e-3));
            let mass1: f64 = s1.h().iter().zip(mesh.mass()).map(|(a, b)| a * b).sum();
            assert!((mass1 - mass0).abs() < 1e-14, "{} {}", mass1 - mass0, stats.mass_added);
            if method == Method::Dg && stats.floor_resets == 0 {
                for e in 0..2 {
                    let m = element_mean(&s1.h()[e * npe..(e + 1) * npe], &mesh.mass()[e * npe..(e + 1) * npe]);
                    assert!((m - before[e]).abs() < 1e-15);
                }
            }
            let mut s2 = s1.clone();
            limit_all(&mut s2, &mesh, method, &WetDryConfig::default()).unwrap();
            assert_eq!(s1, s2);
        }
        s.h_mut()[0] = 0.0;
        assert!(limit_all(&mut s, &mesh, Method::Dg, &WetDryConfig::default()).is_ok());
    }

    #[test]
    fn limit_all_reports_precondition_violation() {
        let mesh = Mesh::new_1d(0.0, 1.0, 1, BasisSet::new(2).unwrap(), [BoundaryKind::Wall; 2]).unwrap();
        let mut s = State::from_vec(1, 3, vec![-1.0, -1.0, 0.5, 0.0, 0.0, 0.0]).unwrap();
        let err = limit_all(&mut s, &mesh, Method::Dg, &WetDryConfig::default()).unwrap_err();
        assert!(matches!(err, SweError::LimiterPrecondition { element: 0, .. }));
    }
}
