//! Pointwise physics of the viscous shallow water system: conserved state,
//! flux tensor in well-balanced (pressure-difference) form, bathymetry
//! source, wave speed and primitive recovery.
//!
//! Conventions: `h` is the water column height, `b` the bed elevation and
//! `datum` a fixed reference level. The still-water depth is `D = datum - b`
//! and the free-surface elevation above the datum is `h - D`. The momentum
//! flux carries `g/2 (h^2 - D^2)` and the source `-g (h - D) grad b`, which
//! together equal `-g h grad(h + b)` while cancelling exactly for a lake at
//! rest.

use crate::error::{Result, SweError};
use crate::mesh::Mesh;

/// Gravitational acceleration, m s^-2.
pub const GRAVITY: f64 = 9.81;

/// Nodal conserved variables `[h, hu (, hv)]` in element-local storage,
/// stored variable-major: `data[v * n_nodes + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    dim: usize,
    n_nodes: usize,
    data: Vec<f64>,
}

impl State {
    pub fn zeros(dim: usize, n_nodes: usize) -> Self {
        Self {
            dim,
            n_nodes,
            data: vec![0.0; (dim + 1) * n_nodes],
        }
    }

    pub fn from_vec(dim: usize, n_nodes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != (dim + 1) * n_nodes {
            return Err(SweError::SizeMismatch {
                expected: (dim + 1) * n_nodes,
                got: data.len(),
            });
        }
        Ok(Self { dim, n_nodes, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nvar(&self) -> usize {
        self.dim + 1
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn h(&self) -> &[f64] {
        &self.data[..self.n_nodes]
    }

    pub fn h_mut(&mut self) -> &mut [f64] {
        &mut self.data[..self.n_nodes]
    }

    /// Momentum component `a` (0 = x, 1 = y).
    pub fn mom(&self, a: usize) -> &[f64] {
        &self.data[(a + 1) * self.n_nodes..(a + 2) * self.n_nodes]
    }

    pub fn mom_mut(&mut self, a: usize) -> &mut [f64] {
        let n = self.n_nodes;
        &mut self.data[(a + 1) * n..(a + 2) * n]
    }

    pub fn var(&self, v: usize) -> &[f64] {
        &self.data[v * self.n_nodes..(v + 1) * self.n_nodes]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Bed elevation and derived fields at every element-local node.
#[derive(Debug, Clone)]
pub struct Bathymetry {
    datum: f64,
    bed: Vec<f64>,
    still_depth: Vec<f64>,
    /// `grad[d][k]`: element-local nodal derivative of the bed.
    grad: [Vec<f64>; 2],
}

impl Bathymetry {
    /// Evaluates `bed(x, y)` at the mesh nodes; gradients come from nodal
    /// differentiation inside each element.
    pub fn from_fn(mesh: &Mesh, datum: f64, bed: impl Fn(f64, f64) -> f64) -> Self {
        let values: Vec<f64> = mesh.coords().iter().map(|c| bed(c[0], c[1])).collect();
        Self::from_nodal(mesh, datum, values)
    }

    pub fn from_nodal(mesh: &Mesh, datum: f64, bed: Vec<f64>) -> Self {
        let grad = [
            nodal_derivative(mesh, &bed, 0),
            if mesh.dim() == 2 {
                nodal_derivative(mesh, &bed, 1)
            } else {
                vec![0.0; bed.len()]
            },
        ];
        let still_depth = bed.iter().map(|b| datum - b).collect();
        Self {
            datum,
            bed,
            still_depth,
            grad,
        }
    }

    /// Raises the still depth to at least `film`, so ground above the datum
    /// carries a film at rest instead of a negative depth.
    pub fn with_film(mut self, film: f64) -> Self {
        for d in &mut self.still_depth {
            *d = d.max(film);
        }
        self
    }

    pub fn datum(&self) -> f64 {
        self.datum
    }

    pub fn bed(&self) -> &[f64] {
        &self.bed
    }

    pub fn still_depth(&self) -> &[f64] {
        &self.still_depth
    }

    pub fn grad(&self, d: usize) -> &[f64] {
        &self.grad[d]
    }
}

/// Strong (collocation) derivative of an element-local field along `dir`.
pub fn nodal_derivative(mesh: &Mesh, field: &[f64], dir: usize) -> Vec<f64> {
    let np = mesh.np();
    let npe = mesh.npe();
    let basis = mesh.basis();
    let scale = 2.0 / mesh.h()[dir];
    let stride = if dir == 0 { 1 } else { np };
    let mut out = vec![0.0; field.len()];
    for e in 0..mesh.n_elements() {
        let base = e * npe;
        for k in 0..npe {
            let (i, j) = (k % np, k / np);
            let along = if dir == 0 { i } else { j };
            let start = base + k - along * stride;
            let mut s = 0.0;
            for m in 0..np {
                s += basis.d(along, m) * field[start + m * stride];
            }
            out[base + k] = scale * s;
        }
    }
    out
}

/// Velocity recovered from momentum; zero below the dry `threshold`.
#[inline]
pub fn velocity(h: f64, hu: f64, threshold: f64) -> f64 {
    if h < threshold || h <= 0.0 {
        0.0
    } else {
        hu / h
    }
}

/// Velocity `sqrt(2) h hu / sqrt(h^4 + max(h^4, hv^4))`: equal to `hu / h`
/// for `h >= hv` and damped towards zero in thinner layers.
#[inline]
pub fn desingularized_velocity(h: f64, hu: f64, hv: f64) -> f64 {
    if h >= hv {
        return hu / h;
    }
    let h4 = h.powi(4);
    std::f64::consts::SQRT_2 * h * hu / (h4 + hv.powi(4)).sqrt()
}

/// Characteristic speed `|u| + sqrt(g h)`.
pub fn wave_speed(depth: f64, vel: [f64; 2]) -> Result<f64> {
    if depth < 0.0 || !depth.is_finite() {
        return Err(SweError::NonPhysical(format!(
            "negative water depth {depth} in wave speed"
        )));
    }
    Ok(wave_speed_unchecked(depth, vel))
}

#[inline]
pub(crate) fn wave_speed_unchecked(depth: f64, vel: [f64; 2]) -> f64 {
    vel[0].hypot(vel[1]) + (GRAVITY * depth.max(0.0)).sqrt()
}

/// Flux tensor at a point: `f[dir][var]`, variables `[h, hu, hv]`.
///
/// `vel` is the (possibly dry-clamped) velocity used for advection.
#[inline]
pub fn flux_point(h: f64, vel: [f64; 2], still_depth: f64, dim: usize) -> [[f64; 3]; 2] {
    let p = 0.5 * GRAVITY * (h * h - still_depth * still_depth);
    let mut f = [[0.0; 3]; 2];
    for d in 0..dim {
        f[d][0] = h * vel[d];
        for a in 0..dim {
            f[d][a + 1] = h * vel[a] * vel[d];
        }
        f[d][d + 1] += p;
    }
    f
}

/// Momentum source `-g (h - D) grad b` at a point.
#[inline]
pub fn source_point(h: f64, still_depth: f64, grad_bed: [f64; 2]) -> [f64; 2] {
    let surface = h - still_depth;
    [-GRAVITY * surface * grad_bed[0], -GRAVITY * surface * grad_bed[1]]
}

/// Nodal flux tensor of a whole state, `out[dir]` shaped like the state.
/// Fails if any node has non-positive height.
pub fn flux(state: &State, bathy: &Bathymetry, dry_threshold: f64) -> Result<[Vec<f64>; 2]> {
    let n = state.n_nodes();
    let dim = state.dim();
    let mut out = [vec![0.0; state.nvar() * n], vec![0.0; state.nvar() * n]];
    for k in 0..n {
        let h = state.h()[k];
        if h <= 0.0 {
            return Err(SweError::NonPhysical(format!(
                "non-positive height {h} at node {k}; limiter failed upstream"
            )));
        }
        let mut vel = [0.0; 2];
        for a in 0..dim {
            vel[a] = velocity(h, state.mom(a)[k], dry_threshold);
        }
        let f = flux_point(h, vel, bathy.still_depth()[k], dim);
        for d in 0..dim {
            for v in 0..state.nvar() {
                out[d][v * n + k] = f[d][v];
            }
        }
    }
    Ok(out)
}

/// Nodal source (zero mass source, momentum `-g (h - D) grad b`).
pub fn source(state: &State, bathy: &Bathymetry) -> Vec<f64> {
    let n = state.n_nodes();
    let dim = state.dim();
    let mut out = vec![0.0; state.nvar() * n];
    for k in 0..n {
        let s = source_point(
            state.h()[k],
            bathy.still_depth()[k],
            [bathy.grad(0)[k], bathy.grad(1)[k]],
        );
        for a in 0..dim {
            out[(a + 1) * n + k] = s[a];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lake_at_rest_flux_vanishes() {
        let f = flux_point(1.0, [0.0, 0.0], 1.0, 1);
        assert_eq!(f[0][0], 0.0);
        assert_eq!(f[0][1], 0.0);
    }

    #[test]
    fn one_d_flux_values() {
        let f = flux_point(2.0, [3.0, 0.0], 0.0, 1);
        assert!((f[0][0] - 6.0).abs() < 1e-14);
        assert!((f[0][1] - 37.62).abs() < 1e-12);
    }

    #[test]
    fn two_d_flux_tensor() {
        let f = flux_point(1.0, [1.0, 0.0], 0.0, 2);
        assert!((f[0][1] - 5.905).abs() < 1e-14);
        assert_eq!(f[0][2], 0.0);
        assert_eq!(f[1][1], 0.0);
        assert!((f[1][2] - 4.905).abs() < 1e-14);
    }

    #[test]
    fn source_values() {
        assert_eq!(source_point(1.0, 0.0, [0.0, 0.0]), [0.0, 0.0]);
        let s = source_point(1.0, 0.0, [0.1, 0.0]);
        assert!((s[0].abs() - 0.981).abs() < 1e-14);
    }

    #[test]
    fn wave_speed_values() {
        assert!((wave_speed(0.32, [0.0, 0.0]).unwrap() - 1.771779).abs() < 1e-6);
        assert_eq!(wave_speed(0.0, [0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(wave_speed(0.0, [3.0, 4.0]).unwrap(), 5.0);
        assert!(wave_speed(-0.1, [0.0, 0.0]).is_err());
    }

    #[test]
    fn velocity_clamp() {
        assert_eq!(velocity(2.0, 6.0, 1e-3), 3.0);
        assert_eq!(velocity(1e-3, 0.0, 1e-3), 0.0);
        assert_eq!(velocity(5e-4, 17.0, 1e-3), 0.0);
    }

    #[test]
    fn state_flux_rejects_dry_nodes() {
        use crate::basis::BasisSet;
        use crate::mesh::{BoundaryKind, Mesh};
        let mesh = Mesh::new_1d(0.0, 1.0, 1, BasisSet::new(1).unwrap(), [BoundaryKind::Wall; 2]).unwrap();
        let bathy = Bathymetry::from_fn(&mesh, 0.0, |_, _| -1.0);
        let s = State::from_vec(1, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(flux(&s, &bathy, 1e-3).is_err());
        let s = State::from_vec(1, 2, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(flux(&s, &bathy, 1e-3).is_ok());
    }

    #[test]
    fn bed_gradient_exact_for_quadratics() {
        use crate::basis::BasisSet;
        use crate::mesh::{BoundaryKind, Mesh};
        let mesh = Mesh::new_1d(-1.0, 1.0, 3, BasisSet::new(4).unwrap(), [BoundaryKind::Wall; 2]).unwrap();
        let bathy = Bathymetry::from_fn(&mesh, 0.0, |x, _| 2.0 * x * x - 0.5);
        for (k, c) in mesh.coords().iter().enumerate() {
            assert!((bathy.grad(0)[k] - 4.0 * c[0]).abs() < 1e-12);
        }
    }
}
