//! Randomized invariants spanning several modules.

use proptest::prelude::*;

use crate::analysis::energy_spectrum;
use crate::basis::BasisSet;
use crate::galerkin::{rusanov, Method, Trace};
use crate::mesh::{BoundaryKind, BoundarySides, Mesh};
use crate::swe::State;
use crate::wetdry::{element_mean, limit_all, positivity_limiter, WetDryConfig};

fn mesh_1d(ne: usize) -> Mesh {
    Mesh::new_1d(0.0, 1.0, ne, BasisSet::new(3).unwrap(), [BoundaryKind::Wall; 2]).unwrap()
}

fn mesh_2d() -> Mesh {
    Mesh::new_2d(
        [0.0, 0.0],
        [2.0, 1.0],
        [3, 2],
        BasisSet::new(2).unwrap(),
        BoundarySides::walls(),
    )
    .unwrap()
}

/// Nodal depths from dry to deep; momentum of either sign.
fn depth_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), -2e-3..2e-3f64, 1e-3..0.05f64, 0.05..2.0f64,]
}

fn local_state(mesh: &Mesh, method: Method, h: &[f64], mom: &[f64]) -> State {
    let dim = mesh.dim();
    let n = mesh.n_local();
    let gather = |v: &[f64]| -> Vec<f64> {
        match method {
            Method::Cg => mesh.scatter(&v[..mesh.n_global()]).unwrap(),
            Method::Dg => v[..n].to_vec(),
        }
    };
    let mut data = gather(h);
    for a in 0..dim {
        let m = gather(&mom[a * n..]);
        data.extend(m);
    }
    State::from_vec(dim, n, data).unwrap()
}

fn means_positive(state: &State, mesh: &Mesh) -> bool {
    let npe = mesh.npe();
    (0..mesh.n_elements()).all(|e| {
        let r = e * npe..(e + 1) * npe;
        element_mean(&state.h()[r.clone()], &mesh.mass()[r]) > 0.0
    })
}

fn quad_mass(state: &State, mesh: &Mesh) -> f64 {
    state.h().iter().zip(mesh.mass()).map(|(h, w)| h * w).sum()
}

fn check_limiter(mesh: &Mesh, method: Method, h: &[f64], mom: &[f64]) -> Result<(), TestCaseError> {
    let cfg = WetDryConfig::default();
    let mut s = local_state(mesh, method, h, mom);
    prop_assume!(means_positive(&s, mesh));
    let m0 = quad_mass(&s, mesh);
    prop_assume!(m0 > 0.05 * mesh.measure());
    limit_all(&mut s, mesh, method, &cfg).unwrap();
    prop_assert!(s.h().iter().all(|&v| v >= cfg.epsilon));
    let m1 = quad_mass(&s, mesh);
    prop_assert!((m1 - m0).abs() <= 1e-12 * m0, "mass {m0} -> {m1}");
    if method == Method::Cg {
        for v in 0..s.nvar() {
            let field = &s.as_slice()[v * s.n_nodes()..(v + 1) * s.n_nodes()];
            let mut again = field.to_vec();
            mesh.average_shared(&mut again);
            for (a, b) in field.iter().zip(&again) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }
    }
    let once = s.clone();
    let stats = limit_all(&mut s, mesh, method, &cfg).unwrap();
    prop_assert!(!stats.modified());
    for (a, b) in once.as_slice().iter().zip(s.as_slice()) {
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
    Ok(())
}

proptest! {
    #[test]
    fn rescale_keeps_mean_and_floor(h in prop::collection::vec(-0.5..2.0f64, 5), floor in 0.0..1e-2f64) {
        let w = [0.1, 0.5, 0.8, 0.5, 0.1];
        let mean = element_mean(&h, &w);
        prop_assume!(mean > floor + 1e-9);
        let mut v = h.clone();
        let theta = positivity_limiter(&mut v, mean, floor).unwrap();
        prop_assert!((0.0..=1.0).contains(&theta));
        prop_assert!((element_mean(&v, &w) - mean).abs() <= 1e-13 * (1.0 + mean));
        prop_assert!(v.iter().all(|&x| x >= floor - 1e-13));
    }

    #[test]
    fn limiter_dg_1d(h in prop::collection::vec(depth_value(), 24), mom in prop::collection::vec(-1.0..1.0f64, 24)) {
        check_limiter(&mesh_1d(6), Method::Dg, &h, &mom)?;
    }

    #[test]
    fn limiter_cg_1d(h in prop::collection::vec(depth_value(), 19), mom in prop::collection::vec(-1.0..1.0f64, 24)) {
        check_limiter(&mesh_1d(6), Method::Cg, &h, &mom)?;
    }

    #[test]
    fn limiter_dg_2d(h in prop::collection::vec(depth_value(), 54), mom in prop::collection::vec(-1.0..1.0f64, 108)) {
        check_limiter(&mesh_2d(), Method::Dg, &h, &mom)?;
    }

    #[test]
    fn limiter_cg_2d(h in prop::collection::vec(depth_value(), 35), mom in prop::collection::vec(-1.0..1.0f64, 108)) {
        check_limiter(&mesh_2d(), Method::Cg, &h, &mom)?;
    }

    #[test]
    fn dss_is_linear(x in prop::collection::vec(-5.0..5.0f64, 54), y in prop::collection::vec(-5.0..5.0f64, 54), a in -3.0..3.0f64) {
        let mesh = mesh_2d();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + q).collect();
        let lhs = mesh.dss(&combo).unwrap();
        let (dx, dy) = (mesh.dss(&x).unwrap(), mesh.dss(&y).unwrap());
        for ((l, p), q) in lhs.iter().zip(&dx).zip(&dy) {
            prop_assert!((l - (a * p + q)).abs() <= 1e-12);
        }
    }

    #[test]
    fn parseval(u in prop::collection::vec(-10.0..10.0f64, 8..200), len in 0.1..100.0f64) {
        let spectrum = energy_spectrum(&u, len).unwrap();
        let total: f64 = spectrum.iter().map(|(_, e)| e).sum();
        let half_mean_sq = 0.5 * u.iter().map(|v| v * v).sum::<f64>() / u.len() as f64;
        prop_assert!((total - half_mean_sq).abs() <= 1e-12 * (1.0 + half_mean_sq));
    }

    #[test]
    fn rusanov_antisymmetric(
        hl in 0.01..3.0f64, hr in 0.01..3.0f64,
        ul in prop::array::uniform2(-2.0..2.0f64), ur in prop::array::uniform2(-2.0..2.0f64),
        angle in 0.0..std::f64::consts::TAU, d in 0.0..2.0f64,
    ) {
        let tr = |h: f64, u: [f64; 2]| Trace { h, mom: [h * u[0], h * u[1]], vel: u, still_depth: d };
        let n = [angle.cos(), angle.sin()];
        let f = rusanov(&tr(hl, ul), &tr(hr, ur), n, 2);
        let g = rusanov(&tr(hr, ur), &tr(hl, ul), [-n[0], -n[1]], 2);
        for v in 0..3 {
            prop_assert!((f[v] + g[v]).abs() <= 1e-12 * (1.0 + f[v].abs()));
        }
    }
}
