//! Time loop around the spatial operator and the integrator.

use crate::cases::{CaseConfig, CaseSetup, Integrator};
use crate::error::{Result, SweError};
use crate::galerkin::{Method, SemiDiscreteOp};
use crate::sgs::{dyn_sgs, SgsFields};
use crate::swe::State;
use crate::timeint::{compute_dt, esdirk_step, rk4_step, SolverConfig, SweSystem};
use crate::wetdry::{limit_all, LimiterStats};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub integrator: Integrator,
    pub cfl: f64,
    pub viscous: bool,
    pub mass_diffusion: bool,
    pub solver: SolverConfig,
    /// Speeds above this are reported as a blow-up (m/s).
    pub max_speed: f64,
    pub sip_penalty: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            integrator: Integrator::Rk4,
            cfl: 0.2,
            viscous: true,
            mass_diffusion: false,
            solver: SolverConfig::default(),
            max_speed: 100.0,
            sip_penalty: 2.0,
        }
    }
}

impl SimConfig {
    pub fn from_case(cfg: &CaseConfig) -> Self {
        Self {
            integrator: cfg.integrator,
            cfl: cfg.cfl,
            viscous: cfg.viscous,
            mass_diffusion: cfg.mass_diffusion,
            ..Self::default()
        }
    }
}

/// Per-step record.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub newton_iterations: [usize; 2],
    pub gmres_iterations: usize,
    pub retries: usize,
    pub min_h: f64,
    pub max_mu: f64,
    pub mu_bound_ok: bool,
    /// The explicit step was shortened by the viscous stability bound.
    pub viscous_limited: bool,
    pub limiter: LimiterStats,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    op: SemiDiscreteOp,
    q: Vec<f64>,
    prev: Option<(Vec<f64>, f64)>,
    t: f64,
    step: usize,
    cfg: SimConfig,
    sgs: Option<SgsFields>,
    limiter_total: LimiterStats,
    diffusion_radius: Option<f64>,
}

/// Real-axis stability limit of classical RK4 with a 10% margin.
const RK4_DIFFUSIVE_LIMIT: f64 = 0.9 * 2.785;

impl Simulation {
    pub fn new(method: Method, setup: CaseSetup, cfg: SimConfig) -> Result<Self> {
        cfg.solver.validate()?;
        let CaseSetup {
            mesh,
            bathy,
            mut initial,
            wet,
        } = setup;
        let mut op = SemiDiscreteOp::with_penalty(method, mesh, bathy, wet, cfg.sip_penalty)?;
        op.set_mass_diffusion(cfg.mass_diffusion);
        if method == Method::Cg {
            for v in 0..initial.nvar() {
                let n = initial.n_nodes();
                op.mesh()
                    .average_shared(&mut initial.as_mut_slice()[v * n..(v + 1) * n]);
            }
        }
        let limiter_total = limit_all(&mut initial, op.mesh(), method, &wet)?;
        Ok(Self {
            op,
            q: initial.into_vec(),
            prev: None,
            t: 0.0,
            step: 0,
            cfg,
            sgs: None,
            limiter_total,
            diffusion_radius: None,
        })
    }

    pub fn from_case(cfg: &CaseConfig) -> Result<Self> {
        let setup = crate::cases::build(cfg)?;
        Self::new(cfg.method, setup, SimConfig::from_case(cfg))
    }

    pub fn op(&self) -> &SemiDiscreteOp {
        &self.op
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn state(&self) -> State {
        State::from_vec(self.op.dim(), self.op.mesh().n_local(), self.q.clone()).expect("consistent sizes")
    }

    pub fn sgs(&self) -> Option<&SgsFields> {
        self.sgs.as_ref()
    }

    pub fn limiter_totals(&self) -> &LimiterStats {
        &self.limiter_total
    }

    /// Water surface `h + b` at every node.
    pub fn surface(&self) -> Vec<f64> {
        let n = self.op.mesh().n_local();
        self.q[..n]
            .iter()
            .zip(self.op.bathymetry().bed())
            .map(|(h, b)| h + b)
            .collect()
    }

    /// Quadrature integral of the depth.
    pub fn total_mass(&self) -> f64 {
        let n = self.op.mesh().n_local();
        self.q[..n].iter().zip(self.op.mesh().mass()).map(|(h, m)| h * m).sum()
    }

    pub fn stable_dt(&self) -> Result<f64> {
        compute_dt(&self.op, &self.q, self.cfg.cfl)
    }

    /// Advances one step, never beyond `t_stop`.
    pub fn step(&mut self, t_stop: Option<f64>) -> Result<StepReport> {
        let fields = if self.cfg.viscous {
            let prev = self.prev.as_ref().map(|(q, dt)| (q.as_slice(), *dt));
            let f = dyn_sgs(&self.op, &self.q, prev)?;
            self.op.set_viscosity(f.mu.clone())?;
            Some(f)
        } else {
            None
        };
        let mut dt = self.stable_dt()?;
        let mut viscous_limited = false;
        if let (Some(f), Integrator::Rk4) = (&fields, self.cfg.integrator) {
            let mu = f.max_mu();
            if mu > 0.0 {
                let op = &self.op;
                let rho = *self
                    .diffusion_radius
                    .get_or_insert_with(|| op.diffusion_spectral_radius(200));
                let dt_visc = RK4_DIFFUSIVE_LIMIT / (rho * mu);
                if dt_visc < dt {
                    dt = dt_visc;
                    viscous_limited = true;
                }
            }
        }
        if let Some(ts) = t_stop {
            let left = ts - self.t;
            if !(left > 0.0) {
                return Err(SweError::InvalidArgument(format!("already at t = {} >= {ts}", self.t)));
            }
            // Avoid a sliver step at the end.
            if left < 1.5 * dt {
                dt = if left <= dt { left } else { 0.5 * left };
            }
        }
        self.op.freeze_dry_mask(&self.q);

        let mut retries = 0;
        let (q_new, newton, gmres, limiter) = loop {
            let mut q = self.q.clone();
            let mut sys = SweSystem::new(&self.op);
            let res = match self.cfg.integrator {
                Integrator::Rk4 => rk4_step(&mut sys, self.t, dt, &mut q).map(|_| ([0, 0], 0)),
                Integrator::Esdirk => esdirk_step(&mut sys, self.t, dt, &mut q, None, &self.cfg.solver)
                    .map(|s| (s.newton_iterations, s.gmres_iterations)),
            };
            match res {
                Ok((nw, gm)) => break (q, nw, gm, sys.limiter),
                Err(e @ (SweError::Nonconvergence(_) | SweError::NotFinite(_)))
                    if self.cfg.integrator == Integrator::Esdirk && retries < self.cfg.solver.max_retries =>
                {
                    log::debug!("step {} rejected at dt = {dt:.3e}: {e}", self.step + 1);
                    retries += 1;
                    dt *= 0.5;
                }
                Err(SweError::NotFinite(m)) => {
                    return Err(SweError::Blowup(format!("t = {:.4}: {m}", self.t)));
                }
                Err(e) => return Err(e),
            }
        };
        self.op.clear_dry_mask();

        let max_speed = self.max_speed(&q_new);
        if !max_speed.is_finite() || max_speed > self.cfg.max_speed {
            return Err(SweError::Blowup(format!(
                "speed {max_speed:.3e} m/s exceeds {} m/s at t = {:.4}",
                self.cfg.max_speed,
                self.t + dt
            )));
        }

        let q_old = std::mem::replace(&mut self.q, q_new);
        self.prev = Some((q_old, dt));
        self.t += dt;
        self.step += 1;
        self.limiter_total.merge(&limiter);
        let n = self.op.mesh().n_local();
        let min_h = self.q[..n].iter().copied().fold(f64::INFINITY, f64::min);
        let (max_mu, mu_bound_ok) = match &fields {
            Some(f) => (
                f.max_mu(),
                f.mu.iter().zip(&f.mu_max).all(|(m, mx)| *m >= 0.0 && m <= mx),
            ),
            None => (0.0, true),
        };
        self.sgs = fields;
        Ok(StepReport {
            step: self.step,
            t: self.t,
            dt,
            newton_iterations: newton,
            gmres_iterations: gmres,
            retries,
            min_h,
            max_mu,
            mu_bound_ok,
            viscous_limited,
            limiter,
        })
    }

    fn max_speed(&self, q: &[f64]) -> f64 {
        let n = self.op.mesh().n_local();
        let cut = self.op.wet_config().dry_cutoff();
        let mut m: f64 = 0.0;
        for k in 0..n {
            if !q[k].is_finite() {
                return f64::NAN;
            }
            if q[k] < cut {
                continue;
            }
            let mut s2 = 0.0;
            for a in 0..self.op.dim() {
                let u = q[(a + 1) * n + k] / q[k];
                s2 += u * u;
            }
            if !s2.is_finite() {
                return f64::NAN;
            }
            m = m.max(s2.sqrt());
        }
        m
    }

    /// Steps until `t_end`, calling `observe` after every step.
    pub fn run_until(
        &mut self,
        t_end: f64,
        mut observe: impl FnMut(&Simulation, &StepReport) -> Result<()>,
    ) -> Result<()> {
        while self.t < t_end - 1e-12 * t_end.abs().max(1.0) {
            let rep = self.step(Some(t_end))?;
            observe(self, &rep)?;
        }
        Ok(())
    }
}
