//! Time integration: three-stage ESDIRK with Jacobian-free Newton-Krylov
//! stage solves, plus classical RK4 with CFL step control.

use crate::error::{Result, SweError};
use crate::galerkin::SemiDiscreteOp;
use crate::swe::State;
use crate::wetdry::{limit_all, LimiterStats};

/// Butcher tableau of the explicit-first-stage SDIRK scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ButcherTableau {
    pub a: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
}

pub fn esdirk_tableau() -> ButcherTableau {
    let s2 = std::f64::consts::SQRT_2;
    let g = 1.0 - 1.0 / s2;
    let b1 = 1.0 / (2.0 * s2);
    ButcherTableau {
        a: [[0.0, 0.0, 0.0], [g, g, 0.0], [b1, b1, g]],
        b: [b1, b1, g],
        c: [0.0, 2.0 - s2, 1.0],
    }
}

/// Rational stability function of [`esdirk_tableau`] for `q' = z q`.
pub fn esdirk_stability(z: f64) -> f64 {
    let t = esdirk_tableau();
    let g = t.a[1][1];
    let den = 1.0 - z * g;
    let y2 = (1.0 + z * t.a[1][0]) / den;
    (1.0 + z * t.a[2][0] + z * t.a[2][1] * y2) / den
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub tol: f64,
    pub restart: usize,
    pub max_restarts: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            restart: 30,
            max_restarts: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative residual reduction `|G(Q_k)| / |G(Q_0)|`.
    pub newton_tol: f64,
    /// Absolute RMS residual accepted without further iterations.
    pub newton_abs_tol: f64,
    pub newton_max_iters: usize,
    pub fd_epsilon: f64,
    pub gmres: GmresConfig,
    pub line_search: bool,
    /// Maximum number of dt halvings after a failed step.
    pub max_retries: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-8,
            newton_abs_tol: 1e-12,
            newton_max_iters: 20,
            fd_epsilon: 1e-7,
            gmres: GmresConfig::default(),
            line_search: true,
            max_retries: 6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(SweError::InvalidArgument(format!("{name} = {v} must lie in (0, 1)")))
            }
        };
        unit("newton_tol", self.newton_tol)?;
        unit("gmres_tol", self.gmres.tol)?;
        unit("fd_epsilon", self.fd_epsilon)?;
        if !(self.newton_abs_tol >= 0.0) {
            return Err(SweError::InvalidArgument("newton_abs_tol must be non-negative".into()));
        }
        if self.newton_max_iters == 0 || self.gmres.restart == 0 || self.gmres.max_restarts == 0 {
            return Err(SweError::InvalidArgument("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(SweError::NotFinite(what.to_string()))
    }
}

/// Directional difference `(G(q + e v) - G(q)) / e` with `e = fd_eps (1 + |q|) / |v|`.
pub fn jacobian_vector<G>(g: &G, q: &[f64], gq: &[f64], v: &[f64], fd_eps: f64) -> Result<Vec<f64>>
where
    G: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    let nv = norm(v);
    if nv == 0.0 {
        return Err(SweError::InvalidArgument(
            "directional derivative along a zero vector".into(),
        ));
    }
    let eps = fd_eps * (1.0 + norm(q)) / nv;
    let qp: Vec<f64> = q.iter().zip(v).map(|(a, b)| a + eps * b).collect();
    let mut gp = vec![0.0; q.len()];
    g(&qp, &mut gp)?;
    Ok(gp.iter().zip(gq).map(|(a, b)| (a - b) / eps).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations, starting from zero.
pub fn gmres<A>(mut apply: A, b: &[f64], cfg: &GmresConfig) -> Result<GmresResult>
where
    A: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = b.len();
    check_finite(b, "GMRES right-hand side")?;
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(GmresResult {
            x,
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        });
    }
    let m = cfg.restart.min(n.max(1));
    let mut iterations = 0;
    let mut rel = 1.0;
    for _ in 0..cfg.max_restarts {
        let r: Vec<f64> = if iterations == 0 {
            b.to_vec()
        } else {
            let ax = apply(&x)?;
            b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
        };
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= cfg.tol {
            return Ok(GmresResult {
                x,
                iterations,
                relative_residual: rel,
                converged: true,
            });
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut hess = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut gvec = vec![0.0; m + 1];
        gvec[0] = beta;
        let mut k_used = 0;
        for j in 0..m {
            let mut w = apply(&basis[j])?;
            check_finite(&w, "GMRES operator application")?;
            for (i, vi) in basis.iter().enumerate() {
                let hij = dot(&w, vi);
                hess[i][j] = hij;
                w.iter_mut().zip(vi).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let hn = norm(&w);
            hess[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let den = hess[j][j].hypot(hess[j + 1][j]);
            if den == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = hess[j][j] / den;
                sn[j] = hess[j + 1][j] / den;
            }
            hess[j][j] = cs[j] * hess[j][j] + sn[j] * hess[j + 1][j];
            hess[j + 1][j] = 0.0;
            gvec[j + 1] = -sn[j] * gvec[j];
            gvec[j] *= cs[j];
            iterations += 1;
            k_used = j + 1;
            rel = gvec[j + 1].abs() / bnorm;
            if rel <= cfg.tol || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|wk| wk / hn).collect());
        }
        // Back substitution on the triangular system.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = gvec[i];
            for l in i + 1..k_used {
                s -= hess[i][l] * y[l];
            }
            y[i] = if hess[i][i] != 0.0 { s / hess[i][i] } else { 0.0 };
        }
        for (yi, vi) in y.iter().zip(&basis) {
            x.iter_mut().zip(vi).for_each(|(xk, vk)| *xk += yi * vk);
        }
        if rel <= cfg.tol {
            return Ok(GmresResult {
                x,
                iterations,
                relative_residual: rel,
                converged: true,
            });
        }
    }
    Ok(GmresResult {
        x,
        iterations,
        relative_residual: rel,
        converged: false,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonStats {
    pub iterations: usize,
    pub gmres_iterations: usize,
    pub residual_ratio: f64,
}

/// Newton iteration for `G(Q) = 0` from `q`, updated in place.
pub fn newton_solve<G>(g: &G, q: &mut [f64], cfg: &SolverConfig) -> Result<NewtonStats>
where
    G: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    let n = q.len();
    check_finite(q, "Newton initial guess")?;
    let mut r = vec![0.0; n];
    g(q, &mut r)?;
    check_finite(&r, "Newton residual")?;
    let r0 = norm(&r);
    let mut stats = NewtonStats {
        residual_ratio: 0.0,
        ..Default::default()
    };
    let done = |rn: f64| rn <= cfg.newton_tol * r0 || rn / (n.max(1) as f64).sqrt() <= cfg.newton_abs_tol;
    let mut rn = r0;
    if done(rn) {
        return Ok(stats);
    }
    let mut trial = vec![0.0; n];
    let mut rt = vec![0.0; n];
    while stats.iterations < cfg.newton_max_iters {
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        let q_cur = q.to_vec();
        let r_cur = r.clone();
        let sol = gmres(
            |v| jacobian_vector(g, &q_cur, &r_cur, v, cfg.fd_epsilon),
            &neg,
            &cfg.gmres,
        )?;
        stats.gmres_iterations += sol.iterations;
        stats.iterations += 1;
        let mut lambda = 1.0;
        loop {
            for k in 0..n {
                trial[k] = q_cur[k] + lambda * sol.x[k];
            }
            let ok = g(&trial, &mut rt).is_ok() && rt.iter().all(|x| x.is_finite());
            let rtn = if ok { norm(&rt) } else { f64::INFINITY };
            if !cfg.line_search || rtn < rn || lambda < 1.0 / 64.0 {
                if !rtn.is_finite() {
                    return Err(SweError::Nonconvergence(
                        "Newton update produced a non-finite residual".into(),
                    ));
                }
                q.copy_from_slice(&trial);
                r.copy_from_slice(&rt);
                rn = rtn;
                break;
            }
            lambda *= 0.5;
        }
        stats.residual_ratio = if r0 > 0.0 { rn / r0 } else { 0.0 };
        if done(rn) {
            return Ok(stats);
        }
    }
    Err(SweError::Nonconvergence(format!(
        "Newton reached {} iterations with relative residual {:.3e}",
        cfg.newton_max_iters, stats.residual_ratio
    )))
}

/// An autonomous or time-dependent ODE system with an optional post-stage projection.
pub trait OdeSystem {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn rhs(&self, t: f64, q: &[f64], out: &mut [f64]) -> Result<()>;
    /// Maps a stage value onto the admissible set (positivity limiting).
    fn project(&mut self, _q: &mut [f64]) -> Result<()> {
        Ok(())
    }
}

/// Linear or nonlinear system given by a closure, without projection.
pub struct FnSystem<F> {
    pub n: usize,
    pub f: F,
}

impl<F> OdeSystem for FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    fn len(&self) -> usize {
        self.n
    }

    fn rhs(&self, t: f64, q: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(t, q, out)
    }
}

/// The shallow water operator as an ODE system, limiting every stage.
pub struct SweSystem<'a> {
    pub op: &'a SemiDiscreteOp,
    pub limiter: LimiterStats,
}

impl<'a> SweSystem<'a> {
    pub fn new(op: &'a SemiDiscreteOp) -> Self {
        Self {
            op,
            limiter: LimiterStats::default(),
        }
    }
}

impl OdeSystem for SweSystem<'_> {
    fn len(&self) -> usize {
        self.op.len()
    }

    fn rhs(&self, _t: f64, q: &[f64], out: &mut [f64]) -> Result<()> {
        self.op.rhs(q, out)
    }

    fn project(&mut self, q: &mut [f64]) -> Result<()> {
        check_finite(q, "stage state")?;
        let mut s = State::from_vec(self.op.dim(), self.op.mesh().n_local(), q.to_vec())?;
        let stats = limit_all(&mut s, self.op.mesh(), self.op.method(), self.op.wet_config())?;
        self.limiter.merge(&stats);
        q.copy_from_slice(s.as_slice());
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub newton_iterations: [usize; 2],
    pub gmres_iterations: usize,
}

/// One ESDIRK step of size `dt` from `q` (overwritten).
///
/// `k1` may carry `rhs(t, q)` from the end of the previous step.
pub fn esdirk_step<S: OdeSystem>(
    sys: &mut S,
    t: f64,
    dt: f64,
    q: &mut [f64],
    k1: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<StepStats> {
    if !(dt > 0.0) {
        return Err(SweError::InvalidArgument(format!("time step {dt} must be positive")));
    }
    let n = sys.len();
    if q.len() != n {
        return Err(SweError::SizeMismatch {
            expected: n,
            got: q.len(),
        });
    }
    let tab = esdirk_tableau();
    let gamma = tab.a[1][1];
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(3);
    match k1 {
        Some(k) if k.len() == n => ks.push(k.to_vec()),
        _ => {
            let mut k = vec![0.0; n];
            sys.rhs(t, q, &mut k)?;
            ks.push(k);
        }
    }
    check_finite(&ks[0], "first stage derivative")?;
    let q_n = q.to_vec();
    let mut stage = q_n.clone();
    let mut stats = StepStats::default();
    for i in 1..3 {
        let known: Vec<f64> = (0..n)
            .map(|k| q_n[k] + dt * (0..i).map(|j| tab.a[i][j] * ks[j][k]).sum::<f64>())
            .collect();
        let ti = t + tab.c[i] * dt;
        let sys_ref = &*sys;
        let g = |x: &[f64], out: &mut [f64]| -> Result<()> {
            sys_ref.rhs(ti, x, out)?;
            for k in 0..n {
                out[k] = x[k] - known[k] - dt * gamma * out[k];
            }
            Ok(())
        };
        let ns = newton_solve(&g, &mut stage, cfg)?;
        stats.newton_iterations[i - 1] = ns.iterations;
        stats.gmres_iterations += ns.gmres_iterations;
        sys.project(&mut stage)?;
        check_finite(&stage, "stage value")?;
        if i < 2 {
            let mut k = vec![0.0; n];
            sys.rhs(ti, &stage, &mut k)?;
            ks.push(k);
        }
    }
    q.copy_from_slice(&stage);
    Ok(stats)
}

/// Classical four-stage Runge-Kutta step with projection after each stage.
pub fn rk4_step<S: OdeSystem>(sys: &mut S, t: f64, dt: f64, q: &mut [f64]) -> Result<()> {
    if !(dt > 0.0) {
        return Err(SweError::InvalidArgument(format!("time step {dt} must be positive")));
    }
    let n = sys.len();
    if q.len() != n {
        return Err(SweError::SizeMismatch {
            expected: n,
            got: q.len(),
        });
    }
    let q0 = q.to_vec();
    let mut k = vec![vec![0.0; n]; 4];
    let mut stage = q0.clone();
    let coef = [0.5, 0.5, 1.0];
    for s in 0..4 {
        let ts = t + if s == 0 { 0.0 } else { coef[s - 1] * dt };
        sys.rhs(ts, &stage, &mut k[s])?;
        check_finite(&k[s], "RK4 stage derivative")?;
        if s < 3 {
            for i in 0..n {
                stage[i] = q0[i] + coef[s] * dt * k[s][i];
            }
            sys.project(&mut stage)?;
        }
    }
    for i in 0..n {
        q[i] = q0[i] + dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
    sys.project(q)?;
    check_finite(q, "RK4 update")
}

/// `dt = CFL min(D / lambda)` over wet nodes.
pub fn compute_dt(op: &SemiDiscreteOp, q: &[f64], cfl: f64) -> Result<f64> {
    if !(cfl > 0.0) {
        return Err(SweError::InvalidArgument(format!("CFL {cfl} must be positive")));
    }
    let filter = op.mesh().filter_width();
    let npe = op.mesh().npe();
    let lam = op.wave_speeds(q);
    let mut best = f64::INFINITY;
    for (k, &l) in lam.iter().enumerate() {
        if l > 0.0 {
            best = best.min(filter.get(k / npe) / l);
        }
    }
    if !best.is_finite() {
        return Err(SweError::NonPhysical("no wet node to set the time step".into()));
    }
    Ok(cfl * best)
}
