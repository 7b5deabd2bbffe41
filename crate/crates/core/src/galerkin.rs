//! Semi-discrete right-hand sides for the continuous (spectral element) and
//! discontinuous Galerkin forms, with Rusanov interface fluxes, symmetric
//! interior penalty viscous coupling and wall/outflow boundaries.
//!
//! Both methods share the element kernels. The weak volume term of node `i`
//! along a line is `(2/h) sum_m (w_m D_mi / w_i) F_m`, already divided by
//! the diagonal mass. CG then sums mass-weighted element contributions over
//! shared nodes (direct stiffness summation) and divides by the assembled
//! mass; DG adds the numerical-flux surface terms instead.

use crate::error::{Result, SweError};
use crate::mesh::{BoundaryKind, Mesh};
use crate::swe::{desingularized_velocity, flux_point, source_point, wave_speed_unchecked, Bathymetry, State};
use crate::wetdry::WetDryConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Cg,
    Dg,
}

impl std::str::FromStr for Method {
    type Err = SweError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cg" => Ok(Method::Cg),
            "dg" => Ok(Method::Dg),
            other => Err(SweError::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Cg => "CG",
            Method::Dg => "DG",
        })
    }
}

/// One side of a face: conserved values, advective velocity and still-water depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trace {
    pub h: f64,
    pub mom: [f64; 2],
    pub vel: [f64; 2],
    pub still_depth: f64,
}

impl Trace {
    fn q(&self) -> [f64; 3] {
        [self.h, self.mom[0], self.mom[1]]
    }
}

/// Rusanov flux `1/2 (F_L + F_R) n - 1/2 lambda_max (q_R - q_L)`.
pub fn rusanov(l: &Trace, r: &Trace, n: [f64; 2], dim: usize) -> [f64; 3] {
    let fl = flux_point(l.h, l.vel, l.still_depth, dim);
    let fr = flux_point(r.h, r.vel, r.still_depth, dim);
    let lam = wave_speed_unchecked(l.h, l.vel).max(wave_speed_unchecked(r.h, r.vel));
    let (ql, qr) = (l.q(), r.q());
    let mut out = [0.0; 3];
    for v in 0..=dim {
        let mut fn_avg = 0.0;
        for d in 0..dim {
            fn_avg += 0.5 * (fl[d][v] + fr[d][v]) * n[d];
        }
        out[v] = fn_avg - 0.5 * lam * (qr[v] - ql[v]);
    }
    out
}

/// Ghost trace for a boundary face with outward normal `n`.
pub fn apply_bc(kind: BoundaryKind, t: &Trace, n: [f64; 2]) -> Trace {
    match kind {
        BoundaryKind::Outflow => *t,
        BoundaryKind::Wall => {
            let mn = t.mom[0] * n[0] + t.mom[1] * n[1];
            let un = t.vel[0] * n[0] + t.vel[1] * n[1];
            Trace {
                h: t.h,
                mom: [t.mom[0] - 2.0 * mn * n[0], t.mom[1] - 2.0 * mn * n[1]],
                vel: [t.vel[0] - 2.0 * un * n[0], t.vel[1] - 2.0 * un * n[1]],
                still_depth: t.still_depth,
            }
        }
    }
}

/// Smallest admissible penalty constant `C` in `sigma = C (N+1)^2 / h`.
pub const SIP_PENALTY_FLOOR: f64 = 1.0;

/// Interior penalty coefficient `C (N+1)^2 / h` (to be scaled by the diffusivity).
pub fn sip_penalty(c: f64, order: usize, h_face: f64) -> Result<f64> {
    if !(c >= SIP_PENALTY_FLOOR) {
        return Err(SweError::InvalidArgument(format!(
            "SIP penalty constant {c} below stability floor {SIP_PENALTY_FLOOR}"
        )));
    }
    let np = (order + 1) as f64;
    Ok(c * np * np / h_face)
}

/// Normal viscous numerical flux `{kappa grad w} . n - sigma [w]` seen from the left side.
#[inline]
pub fn sip_flux(w_l: f64, w_r: f64, kgrad_l: f64, kgrad_r: f64, sigma: f64) -> f64 {
    0.5 * (kgrad_l + kgrad_r) - sigma * (w_l - w_r)
}

/// Frozen per-step data: element viscosities and an optional dry-node mask.
#[derive(Debug, Clone, PartialEq)]
pub struct StepContext {
    pub mu: Vec<f64>,
    pub dry: Option<Vec<bool>>,
}

/// Spatial operator `dq/dt = L(q)` on a fixed mesh and bed.
#[derive(Debug, Clone)]
pub struct SemiDiscreteOp {
    method: Method,
    mesh: Mesh,
    bathy: Bathymetry,
    wet: WetDryConfig,
    mass_diffusion: bool,
    penalty: [f64; 2],
    ctx: StepContext,
    dhat: Vec<f64>,
}

impl SemiDiscreteOp {
    pub fn new(method: Method, mesh: Mesh, bathy: Bathymetry, wet: WetDryConfig) -> Result<Self> {
        Self::with_penalty(method, mesh, bathy, wet, 2.0)
    }

    pub fn with_penalty(
        method: Method,
        mesh: Mesh,
        bathy: Bathymetry,
        wet: WetDryConfig,
        penalty_c: f64,
    ) -> Result<Self> {
        wet.validate()?;
        if bathy.bed().len() != mesh.n_local() {
            return Err(SweError::SizeMismatch {
                expected: mesh.n_local(),
                got: bathy.bed().len(),
            });
        }
        let h = mesh.h();
        let penalty = [
            sip_penalty(penalty_c, mesh.order(), h[0])?,
            sip_penalty(penalty_c, mesh.order(), h[1])?,
        ];
        let basis = mesh.basis();
        let np = basis.np();
        let w = basis.weights();
        let mut dhat = vec![0.0; np * np];
        for i in 0..np {
            for m in 0..np {
                dhat[i * np + m] = w[m] * basis.d(m, i) / w[i];
            }
        }
        let ne = mesh.n_elements();
        Ok(Self {
            method,
            mesh,
            bathy,
            wet,
            mass_diffusion: false,
            penalty,
            ctx: StepContext {
                mu: vec![0.0; ne],
                dry: None,
            },
            dhat,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn bathymetry(&self) -> &Bathymetry {
        &self.bathy
    }

    pub fn wet_config(&self) -> &WetDryConfig {
        &self.wet
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn nvar(&self) -> usize {
        self.mesh.dim() + 1
    }

    /// Length of a flat state vector.
    pub fn len(&self) -> usize {
        self.nvar() * self.mesh.n_local()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Enables the `delta` mass-diffusion switch.
    pub fn set_mass_diffusion(&mut self, on: bool) {
        self.mass_diffusion = on;
    }

    pub fn mass_diffusion(&self) -> bool {
        self.mass_diffusion
    }

    pub fn context(&self) -> &StepContext {
        &self.ctx
    }

    pub fn viscosity(&self) -> &[f64] {
        &self.ctx.mu
    }

    pub fn set_viscosity(&mut self, mu: Vec<f64>) -> Result<()> {
        if mu.len() != self.mesh.n_elements() {
            return Err(SweError::SizeMismatch {
                expected: self.mesh.n_elements(),
                got: mu.len(),
            });
        }
        self.ctx.mu = mu;
        Ok(())
    }

    /// Freezes the dry mask from `q` for the coming step.
    pub fn freeze_dry_mask(&mut self, q: &[f64]) {
        let n = self.mesh.n_local();
        let cut = self.wet.dry_cutoff();
        self.ctx.dry = Some(q[..n].iter().map(|&h| h < cut).collect());
    }

    pub fn clear_dry_mask(&mut self) {
        self.ctx.dry = None;
    }

    fn is_dry(&self, k: usize, h: f64) -> bool {
        match &self.ctx.dry {
            Some(mask) => mask[k],
            None => h < self.wet.dry_cutoff(),
        }
    }

    /// Advective velocities per node (zero on dry nodes).
    pub fn velocities(&self, q: &[f64]) -> [Vec<f64>; 2] {
        let n = self.mesh.n_local();
        let dim = self.dim();
        let hv = self.wet.velocity_depth();
        let mut vel = [vec![0.0; n], vec![0.0; n]];
        for k in 0..n {
            let h = q[k];
            if self.is_dry(k, h) || h <= 0.0 {
                continue;
            }
            for a in 0..dim {
                vel[a][k] = desingularized_velocity(h, q[(a + 1) * n + k], hv);
            }
        }
        vel
    }

    /// Nodal wave speeds, zero on dry nodes.
    pub fn wave_speeds(&self, q: &[f64]) -> Vec<f64> {
        let n = self.mesh.n_local();
        let vel = self.velocities(q);
        (0..n)
            .map(|k| {
                if self.is_dry(k, q[k]) {
                    0.0
                } else {
                    wave_speed_unchecked(q[k], [vel[0][k], vel[1][k]])
                }
            })
            .collect()
    }

    fn line(&self, k: usize, dir: usize) -> (usize, usize, usize) {
        // (first node of the line through k, stride, position of k on it)
        let np = self.mesh.np();
        let npe = self.mesh.npe();
        let base = (k / npe) * npe;
        let l = k - base;
        let (i, j) = (l % np, l / np);
        if dir == 0 {
            (base + np * j, 1, i)
        } else {
            (base + i, np, j)
        }
    }

    fn fluxes(&self, q: &[f64], vel: &[Vec<f64>; 2]) -> [Vec<f64>; 2] {
        let n = self.mesh.n_local();
        let dim = self.dim();
        let nvar = self.nvar();
        let d_still = self.bathy.still_depth();
        let mut f = [vec![0.0; nvar * n], vec![0.0; nvar * n]];
        for k in 0..n {
            let fp = flux_point(q[k], [vel[0][k], vel[1][k]], d_still[k], dim);
            for d in 0..dim {
                for v in 0..nvar {
                    f[d][v * n + k] = fp[d][v];
                }
            }
        }
        f
    }

    fn add_source(&self, q: &[f64], out: &mut [f64]) {
        let n = self.mesh.n_local();
        let dim = self.dim();
        let d_still = self.bathy.still_depth();
        for k in 0..n {
            let s = source_point(q[k], d_still[k], [self.bathy.grad(0)[k], self.bathy.grad(1)[k]]);
            for a in 0..dim {
                out[(a + 1) * n + k] += s[a];
            }
        }
    }

    /// Strong-form nodal divergence of a flux field.
    fn strong_divergence(&self, f: &[Vec<f64>; 2], nvar: usize, out: &mut [f64]) {
        let n = self.mesh.n_local();
        let np = self.mesh.np();
        let basis = self.mesh.basis();
        for d in 0..self.dim() {
            let scale = 2.0 / self.mesh.h()[d];
            for v in 0..nvar {
                let fv = &f[d][v * n..(v + 1) * n];
                let o = &mut out[v * n..(v + 1) * n];
                for k in 0..n {
                    let (start, stride, pos) = self.line(k, d);
                    let mut s = 0.0;
                    for m in 0..np {
                        s += basis.d(pos, m) * fv[start + m * stride];
                    }
                    o[k] += scale * s;
                }
            }
        }
    }

    /// Strong residual of the inviscid spatial operator, `div F(q) - S(q)`, per node.
    pub fn inviscid_divergence_minus_source(&self, q: &[f64]) -> Vec<f64> {
        let (mut div, src) = self.inviscid_parts(q);
        for (o, si) in div.iter_mut().zip(&src) {
            *o -= si;
        }
        div
    }

    /// Nodal `div F(q)` and `S(q)` separately.
    pub fn inviscid_parts(&self, q: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let vel = self.velocities(q);
        let f = self.fluxes(q, &vel);
        let mut div = vec![0.0; q.len()];
        self.strong_divergence(&f, self.nvar(), &mut div);
        let mut src = vec![0.0; q.len()];
        self.add_source(q, &mut src);
        (div, src)
    }

    /// Diffused variables: `(variable index, nodal w, nodal kappa)`.
    fn diffusion_terms(&self, q: &[f64], vel: &[Vec<f64>; 2]) -> Vec<(usize, Vec<f64>, Vec<f64>)> {
        let n = self.mesh.n_local();
        let npe = self.mesh.npe();
        let mu = &self.ctx.mu;
        let mut terms = Vec::new();
        if self.mass_diffusion {
            let kappa = (0..n).map(|k| mu[k / npe]).collect();
            terms.push((0, q[..n].to_vec(), kappa));
        }
        let kappa: Vec<f64> = (0..n).map(|k| mu[k / npe] * q[k].max(0.0)).collect();
        for a in 0..self.dim() {
            terms.push((a + 1, vel[a].clone(), kappa.clone()));
        }
        terms
    }

    /// Strong nodal gradient of `w`, skipped where `kappa` vanishes.
    fn gradient(&self, w: &[f64], kappa: &[f64]) -> [Vec<f64>; 2] {
        let n = self.mesh.n_local();
        let np = self.mesh.np();
        let basis = self.mesh.basis();
        let mut g = [vec![0.0; n], vec![0.0; n]];
        for d in 0..self.dim() {
            let scale = 2.0 / self.mesh.h()[d];
            for k in 0..n {
                if kappa[k] == 0.0 {
                    continue;
                }
                let (start, stride, pos) = self.line(k, d);
                let mut s = 0.0;
                for m in 0..np {
                    s += basis.d(pos, m) * w[start + m * stride];
                }
                g[d][k] = scale * s;
            }
        }
        g
    }

    /// Adds the mass-divided weak volume term of one variable's flux.
    fn weak_volume(&self, f: [&[f64]; 2], out: &mut [f64]) {
        let n = self.mesh.n_local();
        let np = self.mesh.np();
        for d in 0..self.dim() {
            let scale = 2.0 / self.mesh.h()[d];
            let fv = f[d];
            for k in 0..n {
                let (start, stride, pos) = self.line(k, d);
                let row = &self.dhat[pos * np..(pos + 1) * np];
                let mut s = 0.0;
                for m in 0..np {
                    s += row[m] * fv[start + m * stride];
                }
                out[k] += scale * s;
            }
        }
    }

    /// Interior penalty face terms of `div(kappa grad w)` for one variable.
    fn sip_faces(&self, w: &[f64], kappa: &[f64], g: &[Vec<f64>; 2], out: &mut [f64]) {
        let mesh = &self.mesh;
        let np = mesh.np();
        let npe = mesh.npe();
        let basis = mesh.basis();
        let wq = basis.weights();
        for face in mesh.interior_faces() {
            let dir = face.dir;
            let hd = mesh.h()[dir];
            let factor = 2.0 / (hd * wq[0]);
            let lift = 2.0 / hd;
            let sig = self.penalty[dir];
            for (&a, &b) in mesh
                .face_nodes(face.left_face)
                .iter()
                .zip(&mesh.face_nodes(face.right_face))
            {
                let kl = face.left * npe + a;
                let kr = face.right * npe + b;
                let (kap_l, kap_r) = (kappa[kl], kappa[kr]);
                if kap_l == 0.0 && kap_r == 0.0 {
                    continue;
                }
                let jump = w[kl] - w[kr];
                let vh = sip_flux(
                    w[kl],
                    w[kr],
                    kap_l * g[dir][kl],
                    kap_r * g[dir][kr],
                    sig * kap_l.min(kap_r),
                );
                out[kl] += factor * vh;
                out[kr] -= factor * vh;
                // Symmetrising terms lifted along the lines normal to the face.
                let (sl, stl, _) = self.line(kl, dir);
                let (sr, str_, _) = self.line(kr, dir);
                for i in 0..np {
                    let c = lift * lift / wq[i];
                    out[sl + i * stl] += 0.5 * kap_l * jump * basis.d(np - 1, i) * c;
                    out[sr + i * str_] += 0.5 * kap_r * jump * basis.d(0, i) * c;
                }
            }
        }
    }

    /// Mass-weighted direct stiffness summation of a nodal tendency.
    fn assemble(&self, out: &mut [f64], acc: &mut [f64]) {
        let ids = self.mesh.cg_ids();
        let mass = self.mesh.mass();
        let gm = self.mesh.global_mass();
        acc.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..out.len() {
            acc[ids[k]] += mass[k] * out[k];
        }
        for k in 0..out.len() {
            out[k] = acc[ids[k]] / gm[ids[k]];
        }
    }

    /// Discrete `div(kappa grad w)` with homogeneous Neumann boundaries, using
    /// the same viscous discretization as [`Self::rhs`].
    pub fn diffusion_operator(&self, w: &[f64], kappa: &[f64]) -> Result<Vec<f64>> {
        let n = self.mesh.n_local();
        if w.len() != n || kappa.len() != n {
            return Err(SweError::SizeMismatch {
                expected: n,
                got: w.len().min(kappa.len()),
            });
        }
        let g = self.gradient(w, kappa);
        let f: Vec<Vec<f64>> = (0..2).map(|d| (0..n).map(|k| -kappa[k] * g[d][k]).collect()).collect();
        let mut out = vec![0.0; n];
        self.weak_volume([&f[0], &f[1]], &mut out);
        match self.method {
            Method::Dg => self.sip_faces(w, kappa, &g, &mut out),
            Method::Cg => self.assemble(&mut out, &mut vec![0.0; self.mesh.n_global()]),
        }
        Ok(out)
    }

    /// Power-iteration estimate of the spectral radius of the unit-coefficient
    /// diffusion operator, scaled up by 10% to stay on the safe side.
    pub fn diffusion_spectral_radius(&self, iterations: usize) -> f64 {
        let n = self.mesh.n_local();
        let kappa = vec![1.0; n];
        let mut v: Vec<f64> = (0..n)
            .map(|k| ((k * 7919) % 13) as f64 - 6.0 + 0.01 * k as f64)
            .collect();
        if self.method == Method::Cg {
            self.mesh.average_shared(&mut v);
        }
        let mut rho = 0.0;
        for _ in 0..iterations.max(1) {
            let lv = self.diffusion_operator(&v, &kappa).expect("sizes match");
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nl = lv.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(nl > 0.0) {
                return 0.0;
            }
            rho = nl / nv;
            v = lv.into_iter().map(|x| x / nl).collect();
        }
        1.1 * rho
    }

    /// Evaluates `dq/dt` for the flat state `q` into `out`.
    pub fn rhs(&self, q: &[f64], out: &mut [f64]) -> Result<()> {
        let len = self.len();
        if q.len() != len || out.len() != len {
            return Err(SweError::SizeMismatch {
                expected: len,
                got: q.len().min(out.len()),
            });
        }
        let mesh = &self.mesh;
        let n = mesh.n_local();
        let dim = self.dim();
        let nvar = self.nvar();
        let npe = mesh.npe();
        let hsz = mesh.h();

        let vel = self.velocities(q);
        let mut f = self.fluxes(q, &vel);

        // Viscous contributions enter the volume term as -kappa grad w.
        let viscous = self.ctx.mu.iter().any(|&m| m > 0.0);
        let mut diff_terms = Vec::new();
        let mut grads = Vec::new();
        if viscous {
            diff_terms = self.diffusion_terms(q, &vel);
            for (v, wv, kappa) in &diff_terms {
                let g = self.gradient(wv, kappa);
                for d in 0..dim {
                    for k in 0..n {
                        f[d][v * n + k] -= kappa[k] * g[d][k];
                    }
                }
                grads.push(g);
            }
        }

        out.iter_mut().for_each(|o| *o = 0.0);
        for v in 0..nvar {
            let r = v * n..(v + 1) * n;
            self.weak_volume([&f[0][r.clone()], &f[1][r.clone()]], &mut out[r]);
        }

        let d_still = self.bathy.still_depth();
        let trace = |k: usize| Trace {
            h: q[k],
            mom: [q[n + k], if dim == 2 { q[2 * n + k] } else { 0.0 }],
            vel: [vel[0][k], vel[1][k]],
            still_depth: d_still[k],
        };
        let w_end = mesh.basis().weights()[0];

        if self.method == Method::Dg {
            for face in mesh.interior_faces() {
                let factor = 2.0 / (hsz[face.dir] * w_end);
                let ln = mesh.face_nodes(face.left_face);
                let rn = mesh.face_nodes(face.right_face);
                for (&a, &b) in ln.iter().zip(&rn) {
                    let kl = face.left * npe + a;
                    let kr = face.right * npe + b;
                    let fh = rusanov(&trace(kl), &trace(kr), face.normal, dim);
                    for v in 0..nvar {
                        out[v * n + kl] -= factor * fh[v];
                        out[v * n + kr] += factor * fh[v];
                    }
                }
            }
            for ((v, wv, kappa), g) in diff_terms.iter().zip(&grads) {
                self.sip_faces(wv, kappa, g, &mut out[v * n..(v + 1) * n]);
            }
        }

        for bf in mesh.boundary_faces() {
            let factor = 2.0 / (hsz[bf.dir] * w_end);
            for &a in &mesh.face_nodes(bf.face) {
                let k = bf.element * npe + a;
                let inner = trace(k);
                let ghost = apply_bc(bf.kind, &inner, bf.normal);
                let fh = rusanov(&inner, &ghost, bf.normal, dim);
                for v in 0..nvar {
                    out[v * n + k] -= factor * fh[v];
                }
            }
        }

        // Element-local bed gradients may differ across shared nodes, so the
        // source is assembled together with the fluxes.
        self.add_source(q, out);

        if self.method == Method::Cg {
            let mut acc = vec![0.0; mesh.n_global()];
            for v in 0..nvar {
                self.assemble(&mut out[v * n..(v + 1) * n], &mut acc);
            }
        }

        // Dry nodes keep their momentum frozen.
        for k in 0..n {
            if self.is_dry(k, q[k]) {
                for a in 0..dim {
                    out[(a + 1) * n + k] = 0.0;
                }
            }
        }
        Ok(())
    }

    /// Convenience wrapper allocating the output.
    pub fn eval(&self, state: &State) -> Result<State> {
        let mut out = vec![0.0; self.len()];
        self.rhs(state.as_slice(), &mut out)?;
        State::from_vec(self.dim(), self.mesh.n_local(), out)
    }
}
