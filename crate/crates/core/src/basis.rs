//! Legendre-Gauss-Lobatto quadrature, nodal Lagrange bases and
//! differentiation matrices on the reference interval [-1, 1].
//!
//! Quadrature and interpolation points coincide (inexact integration), so
//! element mass matrices are diagonal with entries `w_i * |J|`.

use crate::error::{Result, SweError};

/// Nodal basis of order `N` on `N + 1` LGL points.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Row-major `(N+1) x (N+1)`; `diff[i * np + j] = l_j'(x_i)`.
    diff: Vec<f64>,
}

impl BasisSet {
    pub fn new(order: usize) -> Result<Self> {
        let (nodes, weights) = lgl_nodes(order)?;
        let diff = diff_matrix(&nodes)?;
        Ok(Self {
            order,
            nodes,
            weights,
            diff,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of points per direction, `N + 1`.
    pub fn np(&self) -> usize {
        self.order + 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Derivative of cardinal function `j` at node `i`.
    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.diff[i * (self.order + 1) + j]
    }

    pub fn diff_matrix(&self) -> &[f64] {
        &self.diff
    }

    /// Values of all cardinal functions at a reference point `xi`.
    pub fn cardinal_values(&self, xi: f64) -> Vec<f64> {
        lagrange_values(&self.nodes, xi)
    }
}

/// Legendre polynomial `P_n(x)` together with `P_{n-1}(x)`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    (p, p_prev)
}

/// Legendre polynomial `P_n(x)`.
pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_pair(n, x).0
}

/// LGL nodes (roots of `(1 - x^2) P_N'(x)`) and weights `2 / (N (N+1) P_N(x_i)^2)`.
pub fn lgl_nodes(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order == 0 {
        return Err(SweError::InvalidArgument("LGL order must be at least 1".into()));
    }
    let n = order;
    let np = n + 1;
    let nf = n as f64;
    let mut nodes = vec![0.0; np];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    // Interior roots of P_N' by Newton iteration from Chebyshev-Gauss-Lobatto
    // points. Uses (1-x^2) P_N'(x) = N (P_{N-1} - x P_N).
    for (i, node) in nodes.iter_mut().enumerate().take(n).skip(1) {
        let mut x = -(std::f64::consts::PI * i as f64 / nf).cos();
        for _ in 0..100 {
            let (p, pm1) = legendre_pair(n, x);
            // g(x) = P_{N-1} - x P_N has the interior LGL points as roots.
            let g = pm1 - x * p;
            // g'(x) = P_{N-1}' - P_N - x P_N' = -(N+1) P_N  (on roots of g)
            let dg = -(nf + 1.0) * p;
            let dx = g / dg;
            x -= dx;
            if dx.abs() < 1e-14 {
                break;
            }
        }
        *node = x;
    }
    // Enforce exact symmetry.
    for i in 0..np / 2 {
        let s = 0.5 * (nodes[n - i] - nodes[i]);
        nodes[i] = -s;
        nodes[n - i] = s;
    }
    if np % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let p = legendre(n, x);
            2.0 / (nf * (nf + 1.0) * p * p)
        })
        .collect();
    Ok((nodes, weights))
}

/// Differentiation matrix `D[i][j] = l_j'(x_i)` of the Lagrange cardinals on `nodes`,
/// stored row-major.
pub fn diff_matrix(nodes: &[f64]) -> Result<Vec<f64>> {
    let np = nodes.len();
    if np < 2 {
        return Err(SweError::InvalidArgument("need at least two nodes".into()));
    }
    for i in 0..np {
        for j in (i + 1)..np {
            if nodes[i] == nodes[j] {
                return Err(SweError::InvalidArgument(format!(
                    "duplicate nodes at positions {i} and {j}"
                )));
            }
        }
    }
    // Barycentric weights.
    let bary: Vec<f64> = (0..np)
        .map(|j| {
            let prod: f64 = (0..np).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product();
            1.0 / prod
        })
        .collect();
    let mut d = vec![0.0; np * np];
    for i in 0..np {
        let mut row_sum = 0.0;
        for j in 0..np {
            if i != j {
                let v = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                d[i * np + j] = v;
                row_sum += v;
            }
        }
        // Negative-sum trick: rows annihilate constants to round-off.
        d[i * np + i] = -row_sum;
    }
    Ok(d)
}

/// Values of the Lagrange cardinal functions on `nodes` at `x`.
pub fn lagrange_values(nodes: &[f64], x: f64) -> Vec<f64> {
    let np = nodes.len();
    (0..np)
        .map(|j| {
            (0..np)
                .filter(|&k| k != j)
                .map(|k| (x - nodes[k]) / (nodes[j] - nodes[k]))
                .product()
        })
        .collect()
}
