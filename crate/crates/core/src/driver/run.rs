//! Run orchestration and CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::analysis::{convergence_rate, l2_error, ConvergenceFit};
use crate::cases::{bowl_surface, build, CaseConfig, CaseId};
use crate::error::{Result, SweError};
use crate::galerkin::Method;

use super::{RunManifest, Simulation, StepReport};

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// The solver stopped; the message names the reason.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub dir: PathBuf,
    pub hash: String,
    pub t: f64,
    pub steps: usize,
    pub mass_drift: f64,
    pub min_h: f64,
    pub max_mu: f64,
    /// L2 surface error against the exact solution (bowl only).
    pub exact_error: Option<f64>,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> SweError {
    SweError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

/// CSV writer whose file starts with `# manifest <hash>`.
fn csv_writer(path: &Path, hash: &str, extra: &[String]) -> Result<csv::Writer<BufWriter<File>>> {
    let mut f = create(path)?;
    writeln!(f, "# manifest {hash}").map_err(|e| io_err(path, e))?;
    for line in extra {
        writeln!(f, "# {line}").map_err(|e| io_err(path, e))?;
    }
    Ok(csv::Writer::from_writer(f))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> SweError + '_ {
    move |e| io_err(path, e)
}

/// Writes the nodal fields of `sim` with coordinates.
pub fn write_snapshot(sim: &Simulation, path: &Path, hash: &str) -> Result<()> {
    let mesh = sim.op().mesh();
    let n = mesh.n_local();
    let q = sim.q();
    let vel = sim.op().velocities(q);
    let bed = sim.op().bathymetry().bed();
    let npe = mesh.npe();
    let mu = sim.op().viscosity();
    let mut w = csv_writer(path, hash, &[format!("t = {}", sim.time())])?;
    let err = csv_err(path);
    w.write_record(["x", "y", "bed", "h", "surface", "u", "v", "mu"])
        .map_err(&err)?;
    for k in 0..n {
        let c = mesh.coords()[k];
        let row = [
            c[0],
            c[1],
            bed[k],
            q[k],
            q[k] + bed[k],
            vel[0][k],
            vel[1][k],
            mu[k / npe],
        ];
        w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(&err)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// L2 error of the water surface against the exact bowl solution.
pub fn bowl_error(sim: &Simulation, case: &CaseConfig) -> Result<f64> {
    let mesh = sim.op().mesh();
    let exact: Vec<f64> = mesh
        .coords()
        .iter()
        .map(|c| bowl_surface(c[0], sim.time(), case.bowl_amplitude, case.wet.epsilon))
        .collect();
    l2_error(mesh, &sim.surface(), &exact)
}

const SERIES_HEADER: [&str; 15] = [
    "step",
    "t",
    "dt",
    "mass",
    "min_h",
    "max_mu",
    "mu_bound_ok",
    "viscous_limited",
    "newton_stage2",
    "newton_stage3",
    "gmres",
    "retries",
    "elements_limited",
    "nodes_clamped",
    "floor_resets",
];

fn series_row(r: &StepReport, mass: f64) -> Vec<String> {
    vec![
        r.step.to_string(),
        format!("{:e}", r.t),
        format!("{:e}", r.dt),
        format!("{mass:e}"),
        format!("{:e}", r.min_h),
        format!("{:e}", r.max_mu),
        r.mu_bound_ok.to_string(),
        r.viscous_limited.to_string(),
        r.newton_iterations[0].to_string(),
        r.newton_iterations[1].to_string(),
        r.gmres_iterations.to_string(),
        r.retries.to_string(),
        r.limiter.elements_limited.to_string(),
        r.limiter.nodes_clamped.to_string(),
        r.limiter.floor_resets.to_string(),
    ]
}

/// Executes a manifest below `root`, writing `manifest.txt`, snapshots,
/// `timeseries.csv`, `run.log` and `summary.txt`. Solver failures are
/// recorded in the outcome; only configuration and I/O problems are errors.
pub fn run(manifest: &RunManifest, root: &Path) -> Result<RunOutcome> {
    manifest.validate()?;
    let hash = manifest.hash();
    let dir = manifest.run_dir(root);
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;

    let mpath = dir.join("manifest.txt");
    let mut mf = create(&mpath)?;
    write!(mf, "# manifest {hash}\n{}", manifest.to_text()).map_err(|e| io_err(&mpath, e))?;
    mf.flush().map_err(|e| io_err(&mpath, e))?;

    let lpath = dir.join("run.log");
    let mut log = create(&lpath)?;
    let mut logln = |s: String| -> Result<()> {
        log::info!("{s}");
        writeln!(log, "{s}").map_err(|e| io_err(&lpath, e))
    };
    logln(format!("# manifest {hash}"))?;

    let case = &manifest.case;
    let setup = build(case)?;
    let mut sim = Simulation::new(case.method, setup, manifest.sim_config())?;
    let mass0 = sim.total_mass();
    logln(format!(
        "start case={} method={} nodes={} mass={mass0:e}",
        case.case,
        case.method,
        sim.op().mesh().n_local()
    ))?;

    let spath = dir.join("timeseries.csv");
    let mut series = csv_writer(&spath, &hash, &[])?;
    series.write_record(SERIES_HEADER).map_err(csv_err(&spath))?;
    write_snapshot(&sim, &dir.join("snapshot_000.csv"), &hash)?;

    let mut min_h = sim.q()[..sim.op().mesh().n_local()]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let mut max_mu: f64 = 0.0;
    let mut status = RunStatus::Completed;
    let count = manifest.snapshots.max(1);
    for i in 1..=count {
        let target = case.t_end * i as f64 / count as f64;
        let mut io_failure = None;
        let res = sim.run_until(target, |s, r| {
            min_h = min_h.min(r.min_h);
            max_mu = max_mu.max(r.max_mu);
            if let Err(e) = series.write_record(series_row(r, s.total_mass())) {
                io_failure = Some(io_err(&spath, e));
            }
            Ok(())
        });
        if let Some(e) = io_failure {
            return Err(e);
        }
        if let Err(e) = res {
            if let SweError::Io(_) = e {
                return Err(e);
            }
            let msg = e.to_string();
            logln(format!("failure t={:e} step={} reason: {msg}", sim.time(), sim.steps()))?;
            status = RunStatus::Failed(msg);
            break;
        }
        if manifest.snapshots > 0 {
            write_snapshot(&sim, &dir.join(format!("snapshot_{i:03}.csv")), &hash)?;
        }
        logln(format!(
            "t={:e} steps={} mass={:e}",
            sim.time(),
            sim.steps(),
            sim.total_mass()
        ))?;
    }
    series.flush().map_err(|e| io_err(&spath, e))?;

    let mass_drift = (sim.total_mass() - mass0) / mass0;
    let exact_error = if case.case == CaseId::Bowl1d {
        Some(bowl_error(&sim, case)?)
    } else {
        None
    };
    let totals = *sim.limiter_totals();
    let sum_path = dir.join("summary.txt");
    let mut sf = create(&sum_path)?;
    let mut summary = format!(
        "# manifest {hash}\nstatus={}\nt={:e}\nsteps={}\nmass_drift={mass_drift:e}\nmin_h={min_h:e}\nmax_mu={max_mu:e}\nelements_limited={}\nnodes_clamped={}\nfloor_resets={}\nmass_added={:e}\n",
        match &status {
            RunStatus::Completed => "completed",
            RunStatus::Failed(_) => "failed",
        },
        sim.time(),
        sim.steps(),
        totals.elements_limited,
        totals.nodes_clamped,
        totals.floor_resets,
        totals.mass_added,
    );
    if let Some(e) = exact_error {
        summary.push_str(&format!("l2_error={e:e}\n"));
    }
    if let RunStatus::Failed(m) = &status {
        summary.push_str(&format!("failure={m}\n"));
    }
    sf.write_all(summary.as_bytes()).map_err(|e| io_err(&sum_path, e))?;
    sf.flush().map_err(|e| io_err(&sum_path, e))?;
    logln(format!("end status={:?} drift={mass_drift:e}", status))?;

    Ok(RunOutcome {
        status,
        dir,
        hash,
        t: sim.time(),
        steps: sim.steps(),
        mass_drift,
        min_h,
        max_mu,
        exact_error,
    })
}

/// Element counts of the bowl refinement study.
pub const CONVERGENCE_LEVELS: [usize; 5] = [8, 16, 32, 64, 128];

/// One bowl resolution: element count and the surface error or failure.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceEntry {
    pub elements: usize,
    pub error: std::result::Result<f64, String>,
}

/// Runs the bowl at each element count and returns the errors.
pub fn bowl_convergence(base: &CaseConfig, levels: &[usize]) -> Vec<ConvergenceEntry> {
    levels
        .iter()
        .map(|&ne| {
            let mut cfg = base.clone();
            cfg.case = CaseId::Bowl1d;
            cfg.elements = [ne, 1];
            let error = Simulation::from_case(&cfg)
                .and_then(|mut sim| {
                    sim.run_until(cfg.t_end, |_, _| Ok(()))?;
                    bowl_error(&sim, &cfg)
                })
                .map_err(|e| e.to_string());
            ConvergenceEntry { elements: ne, error }
        })
        .collect()
}

/// Least-squares rate over the successful entries of a study.
pub fn fitted_rate(entries: &[ConvergenceEntry]) -> Result<ConvergenceFit> {
    let (h, e): (Vec<f64>, Vec<f64>) = entries
        .iter()
        .filter_map(|c| c.error.as_ref().ok().map(|&e| (2.0 / c.elements as f64, e)))
        .unzip();
    convergence_rate(&h, &e)
}

/// Method, viscosity flag and entries of one refinement study.
pub type ConvergenceStudy = (Method, bool, Vec<ConvergenceEntry>);

/// Bowl refinement for both methods with and without viscosity; writes
/// `convergence.csv` and `rates.csv` below `root/convergence`.

pub fn convergence_suite(root: &Path, levels: &[usize]) -> Result<Vec<ConvergenceStudy>> {
    let dir = root.join("convergence");
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let base = RunManifest::new(CaseId::Bowl1d);
    let hash = base.hash();
    let tpath = dir.join("convergence.csv");
    let rpath = dir.join("rates.csv");
    let mut table = csv_writer(&tpath, &hash, &["bowl refinement study, water surface L2 error".into()])?;
    let mut rates = csv_writer(&rpath, &hash, &[])?;
    table
        .write_record(["method", "viscous", "elements", "h", "l2_error", "status"])
        .map_err(csv_err(&tpath))?;
    rates
        .write_record(["method", "viscous", "rate", "monotone", "levels"])
        .map_err(csv_err(&rpath))?;
    let mut all = Vec::new();
    for method in [Method::Cg, Method::Dg] {
        for viscous in [false, true] {
            let mut cfg = base.case.clone();
            cfg.method = method;
            cfg.viscous = viscous;
            let entries = bowl_convergence(&cfg, levels);
            for c in &entries {
                let (err, status) = match &c.error {
                    Ok(e) => (format!("{e:e}"), "ok".to_string()),
                    Err(m) => (String::new(), m.clone()),
                };
                table
                    .write_record([
                        method.to_string(),
                        viscous.to_string(),
                        c.elements.to_string(),
                        format!("{:e}", 2.0 / c.elements as f64),
                        err,
                        status,
                    ])
                    .map_err(csv_err(&tpath))?;
            }
            let fit = fitted_rate(&entries);
            let ok = entries.iter().filter(|c| c.error.is_ok()).count();
            let (rate, mono) = match &fit {
                Ok(f) => (format!("{:.4}", f.rate), f.monotone.to_string()),
                Err(_) => ("nan".into(), "false".into()),
            };
            rates
                .write_record([method.to_string(), viscous.to_string(), rate, mono, ok.to_string()])
                .map_err(csv_err(&rpath))?;
            all.push((method, viscous, entries));
        }
    }
    table.flush().map_err(|e| io_err(&tpath, e))?;
    rates.flush().map_err(|e| io_err(&rpath, e))?;
    Ok(all)
}

/// Runs every benchmark with its defaults below `root/benchmarks`.
pub fn benchmark_suite(root: &Path, overrides: &[String]) -> Result<Vec<RunOutcome>> {
    let dir = root.join("benchmarks");
    let mut out = Vec::new();
    for case in CaseId::ALL {
        let mut settings = vec![format!("case={case}")];
        settings.extend(overrides.iter().cloned());
        let m = RunManifest::parse(&settings.join("\n"), &[])?;
        out.push(run(&m, &dir)?);
    }
    let spath = dir.join("benchmarks.csv");
    let mut w = csv_writer(&spath, "suite", &[])?;
    w.write_record([
        "case",
        "manifest",
        "status",
        "t",
        "steps",
        "mass_drift",
        "min_h",
        "max_mu",
    ])
    .map_err(csv_err(&spath))?;
    for (case, o) in CaseId::ALL.iter().zip(&out) {
        w.write_record([
            case.to_string(),
            o.hash.clone(),
            match &o.status {
                RunStatus::Completed => "completed".to_string(),
                RunStatus::Failed(m) => format!("failed: {m}"),
            },
            format!("{:e}", o.t),
            o.steps.to_string(),
            format!("{:e}", o.mass_drift),
            format!("{:e}", o.min_h),
            format!("{:e}", o.max_mu),
        ])
        .map_err(csv_err(&spath))?;
    }
    w.flush().map_err(|e| io_err(&spath, e))?;
    Ok(out)
}
