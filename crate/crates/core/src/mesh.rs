//! Uniform tensor-product meshes of intervals (1D) or quadrilaterals (2D)
//! with LGL nodes, the continuous-Galerkin global numbering used by direct
//! stiffness summation, and face connectivity for the DG coupling.
//!
//! Element-local storage is used everywhere: a nodal field has
//! `n_elements * nodes_per_element` entries, element `e` owning the slice
//! `e * npe .. (e + 1) * npe`. Inside an element node `(i, j)` sits at
//! `i + (N + 1) * j`, `i` running along x.

use crate::basis::BasisSet;
use crate::error::{Result, SweError};

/// Boundary treatment attached to a domain side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Reflective solid wall: normal momentum mirrored.
    Wall,
    /// Zero-gradient outflow: ghost copies the interior trace.
    Outflow,
}

/// Boundary kinds for the sides `[x_lo, x_hi, y_lo, y_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundarySides(pub [BoundaryKind; 4]);

impl BoundarySides {
    pub fn walls() -> Self {
        Self([BoundaryKind::Wall; 4])
    }

    pub fn side(&self, face: usize) -> BoundaryKind {
        self.0[face]
    }
}

/// Interior face shared by two elements. `normal` points out of `left`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorFace {
    pub left: usize,
    pub left_face: usize,
    pub right: usize,
    pub right_face: usize,
    pub dir: usize,
    pub normal: [f64; 2],
}

/// Face lying on the domain boundary. `normal` is outward.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFace {
    pub element: usize,
    pub face: usize,
    pub dir: usize,
    pub normal: [f64; 2],
    pub kind: BoundaryKind,
}

/// Per-element filter width `min(dx, dy) / (N + 1)` in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterWidth(pub Vec<f64>);

impl FilterWidth {
    pub fn get(&self, e: usize) -> f64 {
        self.0[e]
    }

    /// Smallest width over the mesh.
    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    counts: [usize; 2],
    lower: [f64; 2],
    upper: [f64; 2],
    h: [f64; 2],
    basis: BasisSet,
    coords: Vec<[f64; 2]>,
    cg_id: Vec<usize>,
    n_global: usize,
    mass: Vec<f64>,
    global_mass: Vec<f64>,
    interior: Vec<InteriorFace>,
    boundary: Vec<BoundaryFace>,
}

impl Mesh {
    /// Uniform 1D mesh of `n` elements on `[x0, x1]`.
    pub fn new_1d(x0: f64, x1: f64, n: usize, basis: BasisSet, bc: [BoundaryKind; 2]) -> Result<Self> {
        Self::build(
            1,
            [x0, 0.0],
            [x1, 1.0],
            [n, 1],
            basis,
            BoundarySides([bc[0], bc[1], BoundaryKind::Wall, BoundaryKind::Wall]),
        )
    }

    /// Uniform 2D mesh of `nx * ny` quadrilaterals on `[x0, x1] x [y0, y1]`.
    pub fn new_2d(
        lower: [f64; 2],
        upper: [f64; 2],
        counts: [usize; 2],
        basis: BasisSet,
        bc: BoundarySides,
    ) -> Result<Self> {
        Self::build(2, lower, upper, counts, basis, bc)
    }

    fn build(
        dim: usize,
        lower: [f64; 2],
        upper: [f64; 2],
        counts: [usize; 2],
        basis: BasisSet,
        bc: BoundarySides,
    ) -> Result<Self> {
        for d in 0..dim {
            if counts[d] == 0 {
                return Err(SweError::InvalidArgument("element count must be at least 1".into()));
            }
            if !(lower[d].is_finite() && upper[d].is_finite()) || upper[d] <= lower[d] {
                return Err(SweError::InvalidArgument(format!(
                    "degenerate extent [{}, {}] in direction {d}",
                    lower[d], upper[d]
                )));
            }
        }
        let n = basis.order();
        let np = n + 1;
        let mut h = [1.0; 2];
        for d in 0..dim {
            h[d] = (upper[d] - lower[d]) / counts[d] as f64;
        }
        let counts = if dim == 1 { [counts[0], 1] } else { counts };
        let gx = counts[0] * n + 1;
        let gy = if dim == 2 { counts[1] * n + 1 } else { 1 };
        let n_global = gx * gy;

        // Global coordinates computed once per global node so shared nodes agree bitwise.
        let xi = basis.nodes();
        let gcoord = |ecount: usize, lo: f64, hd: f64, g: usize| -> f64 {
            let (e, i) = if g == ecount * n {
                (ecount - 1, n)
            } else {
                (g / n, g % n)
            };
            lo + e as f64 * hd + 0.5 * (1.0 + xi[i]) * hd
        };
        let xs: Vec<f64> = (0..gx).map(|g| gcoord(counts[0], lower[0], h[0], g)).collect();
        let ys: Vec<f64> = if dim == 2 {
            (0..gy).map(|g| gcoord(counts[1], lower[1], h[1], g)).collect()
        } else {
            vec![0.0]
        };

        let npe = if dim == 2 { np * np } else { np };
        let ne = counts[0] * counts[1];
        let mut coords = Vec::with_capacity(ne * npe);
        let mut cg_id = Vec::with_capacity(ne * npe);
        let mut mass = Vec::with_capacity(ne * npe);
        let jac: f64 = (0..dim).map(|d| 0.5 * h[d]).product();
        let w = basis.weights();
        for ey in 0..counts[1] {
            for ex in 0..counts[0] {
                for k in 0..npe {
                    let (i, j) = (k % np, k / np);
                    let gi = ex * n + i;
                    let gj = if dim == 2 { ey * n + j } else { 0 };
                    coords.push([xs[gi], ys[gj]]);
                    cg_id.push(gi + gx * gj);
                    let wk = if dim == 2 { w[i] * w[j] } else { w[i] };
                    mass.push(wk * jac);
                }
            }
        }
        let mut global_mass = vec![0.0; n_global];
        for (k, &g) in cg_id.iter().enumerate() {
            global_mass[g] += mass[k];
        }

        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for ey in 0..counts[1] {
            for ex in 0..counts[0] {
                let e = ex + counts[0] * ey;
                // x-direction faces
                if ex == 0 {
                    boundary.push(BoundaryFace {
                        element: e,
                        face: 0,
                        dir: 0,
                        normal: [-1.0, 0.0],
                        kind: bc.side(0),
                    });
                }
                if ex + 1 == counts[0] {
                    boundary.push(BoundaryFace {
                        element: e,
                        face: 1,
                        dir: 0,
                        normal: [1.0, 0.0],
                        kind: bc.side(1),
                    });
                } else {
                    interior.push(InteriorFace {
                        left: e,
                        left_face: 1,
                        right: e + 1,
                        right_face: 0,
                        dir: 0,
                        normal: [1.0, 0.0],
                    });
                }
                if dim == 2 {
                    if ey == 0 {
                        boundary.push(BoundaryFace {
                            element: e,
                            face: 2,
                            dir: 1,
                            normal: [0.0, -1.0],
                            kind: bc.side(2),
                        });
                    }
                    if ey + 1 == counts[1] {
                        boundary.push(BoundaryFace {
                            element: e,
                            face: 3,
                            dir: 1,
                            normal: [0.0, 1.0],
                            kind: bc.side(3),
                        });
                    } else {
                        interior.push(InteriorFace {
                            left: e,
                            left_face: 3,
                            right: e + counts[0],
                            right_face: 2,
                            dir: 1,
                            normal: [0.0, 1.0],
                        });
                    }
                }
            }
        }

        Ok(Self {
            dim,
            counts,
            lower,
            upper,
            h,
            basis,
            coords,
            cg_id,
            n_global,
            mass,
            global_mass,
            interior,
            boundary,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn np(&self) -> usize {
        self.basis.np()
    }

    /// Nodes per element, `(N + 1)^d`.
    pub fn npe(&self) -> usize {
        self.np().pow(self.dim as u32)
    }

    pub fn n_elements(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    pub fn counts(&self) -> [usize; 2] {
        self.counts
    }

    /// Total element-local nodes.
    pub fn n_local(&self) -> usize {
        self.n_elements() * self.npe()
    }

    pub fn n_global(&self) -> usize {
        self.n_global
    }

    /// Element side lengths `[dx, dy]` (dy = 1 in 1D).
    pub fn h(&self) -> [f64; 2] {
        self.h
    }

    pub fn lower(&self) -> [f64; 2] {
        self.lower
    }

    pub fn upper(&self) -> [f64; 2] {
        self.upper
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn cg_ids(&self) -> &[usize] {
        &self.cg_id
    }

    /// Diagonal element mass (quadrature weight times Jacobian) per local node.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Assembled diagonal CG mass per global node.
    pub fn global_mass(&self) -> &[f64] {
        &self.global_mass
    }

    pub fn interior_faces(&self) -> &[InteriorFace] {
        &self.interior
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary
    }

    /// Domain measure (length or area).
    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|d| self.upper[d] - self.lower[d]).product()
    }

    /// Local node indices on face `face` (= 2 * dir + side), ordered by
    /// increasing transverse index so paired faces match node-for-node.
    pub fn face_nodes(&self, face: usize) -> Vec<usize> {
        let np = self.np();
        let n = np - 1;
        let dir = face / 2;
        let fixed = (face % 2) * n;
        if self.dim == 1 {
            return vec![fixed];
        }
        (0..np)
            .map(|t| if dir == 0 { fixed + np * t } else { t + np * fixed })
            .collect()
    }

    /// Quadrature weight of a face node along the face (1 in 1D).
    pub fn face_weight(&self, dir: usize, t: usize) -> f64 {
        if self.dim == 1 {
            1.0
        } else {
            let other = 1 - dir;
            self.basis.weights()[t] * 0.5 * self.h[other]
        }
    }

    /// Element index and reference coordinates containing the point.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 2])> {
        let mut idx = [0usize; 2];
        let mut xi = [0.0; 2];
        for d in 0..self.dim {
            if p[d] < self.lower[d] - 1e-12 * self.h[d] || p[d] > self.upper[d] + 1e-12 * self.h[d] {
                return None;
            }
            let s = (p[d] - self.lower[d]) / self.h[d];
            let e = (s.floor().max(0.0) as usize).min(self.counts[d] - 1);
            idx[d] = e;
            xi[d] = (2.0 * (s - e as f64) - 1.0).clamp(-1.0, 1.0);
        }
        Some((idx[0] + self.counts[0] * idx[1], xi))
    }

    /// Interpolates an element-local nodal field at a physical point.
    pub fn evaluate(&self, field: &[f64], p: [f64; 2]) -> Option<f64> {
        let (e, xi) = self.locate(p)?;
        let np = self.np();
        let lx = self.basis.cardinal_values(xi[0]);
        let base = e * self.npe();
        if self.dim == 1 {
            return Some((0..np).map(|i| lx[i] * field[base + i]).sum());
        }
        let ly = self.basis.cardinal_values(xi[1]);
        let mut v = 0.0;
        for j in 0..np {
            for i in 0..np {
                v += lx[i] * ly[j] * field[base + i + np * j];
            }
        }
        Some(v)
    }

    /// Filter width `min(dx, dy) / (N + 1)` per element.
    pub fn filter_width(&self) -> FilterWidth {
        let hmin = (0..self.dim).map(|d| self.h[d]).fold(f64::INFINITY, f64::min);
        FilterWidth(vec![hmin / self.np() as f64; self.n_elements()])
    }

    /// Direct stiffness summation: adds element contributions into global DOFs.
    pub fn dss(&self, local: &[f64]) -> Result<Vec<f64>> {
        if local.len() != self.n_local() {
            return Err(SweError::SizeMismatch {
                expected: self.n_local(),
                got: local.len(),
            });
        }
        let mut global = vec![0.0; self.n_global];
        for (k, &g) in self.cg_id.iter().enumerate() {
            global[g] += local[k];
        }
        Ok(global)
    }

    /// Gathers a global field back to element-local storage.
    pub fn scatter(&self, global: &[f64]) -> Result<Vec<f64>> {
        if global.len() != self.n_global {
            return Err(SweError::SizeMismatch {
                expected: self.n_global,
                got: global.len(),
            });
        }
        Ok(self.cg_id.iter().map(|&g| global[g]).collect())
    }

    /// Replaces each shared node value by the mass-weighted average of its copies.
    pub fn average_shared(&self, local: &mut [f64]) {
        let mut acc = vec![0.0; self.n_global];
        for (k, &g) in self.cg_id.iter().enumerate() {
            acc[g] += self.mass[k] * local[k];
        }
        for (k, &g) in self.cg_id.iter().enumerate() {
            local[k] = acc[g] / self.global_mass[g];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh1d(n: usize, order: usize) -> Mesh {
        Mesh::new_1d(-1.0, 1.0, n, BasisSet::new(order).unwrap(), [BoundaryKind::Wall; 2]).unwrap()
    }

    fn mesh2d(nx: usize, ny: usize, order: usize) -> Mesh {
        Mesh::new_2d(
            [0.0, 0.0],
            [1.0, 1.0],
            [nx, ny],
            BasisSet::new(order).unwrap(),
            BoundarySides::walls(),
        )
        .unwrap()
    }

    #[test]
    fn one_d_global_count_and_coords() {
        let m = mesh1d(2, 1);
        assert_eq!(m.n_global(), 3);
        let xs: Vec<f64> = m.coords().iter().map(|c| c[0]).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 0.0, 1.0]);
        assert_eq!(m.cg_ids(), &[0, 1, 1, 2]);
    }

    #[test]
    fn two_d_counts() {
        let m = mesh2d(2, 2, 4);
        assert_eq!(m.n_global(), 81);
        assert_eq!(m.interior_faces().len(), 4);
        assert_eq!(m.boundary_faces().len(), 8);
    }

    #[test]
    fn rejects_bad_input() {
        let b = BasisSet::new(2).unwrap();
        assert!(Mesh::new_1d(0.0, 1.0, 0, b.clone(), [BoundaryKind::Wall; 2]).is_err());
        assert!(Mesh::new_1d(1.0, 1.0, 3, b.clone(), [BoundaryKind::Wall; 2]).is_err());
        assert!(Mesh::new_2d([0.0, 0.0], [1.0, f64::NAN], [1, 1], b, BoundarySides::walls()).is_err());
    }

    #[test]
    fn filter_width_examples() {
        let m = Mesh::new_2d(
            [0.0, 0.0],
            [1.0, 1.0],
            [2, 2],
            BasisSet::new(4).unwrap(),
            BoundarySides::walls(),
        )
        .unwrap();
        assert!((m.filter_width().get(0) - 0.1).abs() < 1e-15);
        let m = Mesh::new_2d(
            [0.0, 0.0],
            [0.2, 0.4],
            [1, 1],
            BasisSet::new(3).unwrap(),
            BoundarySides::walls(),
        )
        .unwrap();
        assert!((m.filter_width().get(0) - 0.05).abs() < 1e-15);
        let m = Mesh::new_1d(0.0, 10.0, 1, BasisSet::new(4).unwrap(), [BoundaryKind::Wall; 2]).unwrap();
        assert!((m.filter_width().get(0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dss_multiplicity() {
        let m = mesh1d(2, 1);
        assert_eq!(m.dss(&[1.0; 4]).unwrap(), vec![1.0, 2.0, 1.0]);
        assert!(m.dss(&[1.0; 3]).is_err());

        let m = mesh2d(2, 2, 2);
        let g = m.dss(&vec![1.0; m.n_local()]).unwrap();
        // centre node (1,1) of the 5x5 global grid is shared by four elements
        assert_eq!(g[2 + 5 * 2], 4.0);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[2], 2.0);

        let global: Vec<f64> = (0..m.n_global()).map(|i| i as f64).collect();
        let back = m.dss(&m.scatter(&global).unwrap()).unwrap();
        let mult = m.dss(&vec![1.0; m.n_local()]).unwrap();
        for i in 0..m.n_global() {
            assert_eq!(back[i], global[i] * mult[i]);
        }
    }

    #[test]
    fn paired_faces_have_opposite_normals_and_matching_nodes() {
        let m = mesh2d(3, 2, 3);
        for f in m.interior_faces() {
            let ln = m.face_nodes(f.left_face);
            let rn = m.face_nodes(f.right_face);
            let npe = m.npe();
            for (a, b) in ln.iter().zip(&rn) {
                assert_eq!(m.coords()[f.left * npe + a], m.coords()[f.right * npe + b]);
            }
            assert_eq!(f.left_face / 2, f.dir);
        }
        // every interior face appears exactly once
        let mut seen = std::collections::HashSet::new();
        for f in m.interior_faces() {
            assert!(seen.insert((f.left.min(f.right), f.left.max(f.right))));
        }
    }

    #[test]
    fn evaluate_reproduces_polynomials() {
        let m = mesh2d(2, 3, 4);
        let f: Vec<f64> = m.coords().iter().map(|c| c[0] * c[0] * c[1] - c[1].powi(3)).collect();
        let p = [0.37, 0.81];
        let v = m.evaluate(&f, p).unwrap();
        assert!((v - (p[0] * p[0] * p[1] - p[1].powi(3))).abs() < 1e-13);
        assert!(m.evaluate(&f, [2.0, 0.0]).is_none());
    }
}
