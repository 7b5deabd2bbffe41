//! Plain-text run configuration.
//!
//! A configuration is a list of `key=value` tokens separated by whitespace or
//! newlines; `#` starts a comment. Command-line overrides use the same keys.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::cases::{CaseConfig, CaseId};
use crate::error::{Result, SweError};
use crate::timeint::SolverConfig;

use super::SimConfig;

/// Keys understood by [`RunManifest::apply`], in manifest order.
pub const KEYS: &[&str] = &[
    "case",
    "method",
    "order",
    "elements",
    "cfl",
    "t_end",
    "integrator",
    "viscous",
    "mass_diffusion",
    "epsilon",
    "dry_factor",
    "velocity_factor",
    "thin_ratio",
    "literal_wave",
    "bowl_amplitude",
    "paraboloid_amplitude",
    "dam_x",
    "dam_depth",
    "beach_slope",
    "sip_penalty",
    "max_speed",
    "newton_tol",
    "newton_abs_tol",
    "newton_max_iters",
    "fd_epsilon",
    "gmres_tol",
    "gmres_restart",
    "gmres_max_restarts",
    "line_search",
    "max_retries",
    "snapshots",
    "output",
];

/// Fully resolved description of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub case: CaseConfig,
    pub solver: SolverConfig,
    pub sip_penalty: f64,
    pub max_speed: f64,
    /// Number of evenly spaced snapshots after the initial one.
    pub snapshots: usize,
    /// Run directory name below the output root; defaults to the case name.
    pub output: Option<String>,
}

/// One `key=value` setting with the line it came from (0 for overrides).
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Splits configuration text into settings.
pub fn tokenize(text: &str) -> Result<Vec<Setting>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            out.push(parse_token(tok, i + 1)?);
        }
    }
    Ok(out)
}

/// Parses one `key=value` (or `--key=value`) token.
pub fn parse_token(tok: &str, line: usize) -> Result<Setting> {
    let t = tok.strip_prefix("--").unwrap_or(tok);
    match t.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok(Setting {
            key: k.to_string(),
            value: v.to_string(),
            line,
        }),
        _ => Err(SweError::Config {
            line,
            msg: format!("expected key=value, got '{tok}'"),
        }),
    }
}

fn value<T: FromStr>(s: &Setting) -> Result<T> {
    s.value.parse().map_err(|_| SweError::Config {
        line: s.line,
        msg: format!("invalid value '{}' for key '{}'", s.value, s.key),
    })
}

fn boolean(s: &Setting) -> Result<bool> {
    match s.value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(SweError::Config {
            line: s.line,
            msg: format!("invalid boolean '{}' for key '{}'", s.value, s.key),
        }),
    }
}

fn elements(s: &Setting) -> Result<[usize; 2]> {
    let parts: Vec<&str> = s.value.split(['x', ',']).collect();
    let bad = || SweError::Config {
        line: s.line,
        msg: format!("invalid element counts '{}'", s.value),
    };
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match nums.as_slice() {
        [n] => Ok([*n, 1]),
        [a, b] => Ok([*a, *b]),
        _ => Err(bad()),
    }
}

impl RunManifest {
    /// Defaults for `case`.
    pub fn new(case: CaseId) -> Self {
        let sim = SimConfig::default();
        Self {
            case: CaseConfig::new(case),
            solver: SolverConfig::default(),
            sip_penalty: sim.sip_penalty,
            max_speed: sim.max_speed,
            snapshots: 10,
            output: None,
        }
    }

    /// Builds a manifest from file settings followed by overrides. The `case`
    /// key is required and selects the defaults the other keys modify.
    pub fn from_settings(settings: &[Setting]) -> Result<Self> {
        let case_setting = settings
            .iter()
            .rev()
            .find(|s| s.key == "case")
            .ok_or(SweError::Config {
                line: 0,
                msg: "missing required key 'case'".into(),
            })?;
        let case: CaseId = case_setting.value.parse().map_err(|_| SweError::Config {
            line: case_setting.line,
            msg: format!("unknown case '{}'", case_setting.value),
        })?;
        let mut m = Self::new(case);
        for s in settings {
            m.apply(s)?;
        }
        m.validate()?;
        Ok(m)
    }

    /// Reads a configuration file and applies `overrides` on top.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SweError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut settings = tokenize(text)?;
        for o in overrides {
            settings.push(parse_token(o, 0)?);
        }
        Self::from_settings(&settings)
    }

    /// Applies one setting.
    pub fn apply(&mut self, s: &Setting) -> Result<()> {
        let c = &mut self.case;
        match s.key.as_str() {
            "case" => {
                let id: CaseId = value(s)?;
                if id != c.case {
                    return Err(SweError::Config {
                        line: s.line,
                        msg: format!("case '{id}' conflicts with '{}'", c.case),
                    });
                }
            }
            "method" => c.method = value(s)?,
            "order" => c.order = value(s)?,
            "elements" => c.elements = elements(s)?,
            "cfl" => c.cfl = value(s)?,
            "t_end" => c.t_end = value(s)?,
            "integrator" => c.integrator = value(s)?,
            "viscous" => c.viscous = boolean(s)?,
            "mass_diffusion" => c.mass_diffusion = boolean(s)?,
            "epsilon" => c.wet.epsilon = value(s)?,
            "dry_factor" => c.wet.dry_factor = value(s)?,
            "velocity_factor" => c.wet.velocity_factor = value(s)?,
            "thin_ratio" => c.wet.thin_ratio = value(s)?,
            "literal_wave" => c.literal_wave = boolean(s)?,
            "bowl_amplitude" => c.bowl_amplitude = value(s)?,
            "paraboloid_amplitude" => c.paraboloid_amplitude = value(s)?,
            "dam_x" => c.dam_x = value(s)?,
            "dam_depth" => c.dam_depth = value(s)?,
            "beach_slope" => c.beach_slope = value(s)?,
            "sip_penalty" => self.sip_penalty = value(s)?,
            "max_speed" => self.max_speed = value(s)?,
            "newton_tol" => self.solver.newton_tol = value(s)?,
            "newton_abs_tol" => self.solver.newton_abs_tol = value(s)?,
            "newton_max_iters" => self.solver.newton_max_iters = value(s)?,
            "fd_epsilon" => self.solver.fd_epsilon = value(s)?,
            "gmres_tol" => self.solver.gmres.tol = value(s)?,
            "gmres_restart" => self.solver.gmres.restart = value(s)?,
            "gmres_max_restarts" => self.solver.gmres.max_restarts = value(s)?,
            "line_search" => self.solver.line_search = boolean(s)?,
            "max_retries" => self.solver.max_retries = value(s)?,
            "snapshots" => self.snapshots = value(s)?,
            "output" => self.output = Some(s.value.clone()),
            other => {
                return Err(SweError::Config {
                    line: s.line,
                    msg: format!("unknown key '{other}'"),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.case.validate()?;
        self.solver.validate()?;
        if !(self.sip_penalty >= crate::galerkin::SIP_PENALTY_FLOOR) {
            return Err(SweError::InvalidArgument(format!(
                "SIP penalty constant must be at least {}, got {}",
                crate::galerkin::SIP_PENALTY_FLOOR,
                self.sip_penalty
            )));
        }
        if !(self.max_speed > 0.0) {
            return Err(SweError::InvalidArgument("max_speed must be positive".into()));
        }
        if let Some(o) = &self.output {
            if o.contains(['/', '\\']) || o == ".." {
                return Err(SweError::InvalidArgument(format!(
                    "output must be a plain name, got '{o}'"
                )));
            }
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            integrator: self.case.integrator,
            cfl: self.case.cfl,
            viscous: self.case.viscous,
            mass_diffusion: self.case.mass_diffusion,
            solver: self.solver,
            max_speed: self.max_speed,
            sip_penalty: self.sip_penalty,
        }
    }

    /// Canonical `key=value` listing of every setting, one per line.
    pub fn to_text(&self) -> String {
        let c = &self.case;
        let s = &self.solver;
        let [nx, ny] = c.elements;
        let elements = if c.case.dim() == 2 {
            format!("{nx}x{ny}")
        } else {
            nx.to_string()
        };
        let values: Vec<String> = vec![
            c.case.to_string(),
            c.method.to_string(),
            c.order.to_string(),
            elements,
            c.cfl.to_string(),
            c.t_end.to_string(),
            c.integrator.to_string(),
            c.viscous.to_string(),
            c.mass_diffusion.to_string(),
            c.wet.epsilon.to_string(),
            c.wet.dry_factor.to_string(),
            c.wet.velocity_factor.to_string(),
            c.wet.thin_ratio.to_string(),
            c.literal_wave.to_string(),
            c.bowl_amplitude.to_string(),
            c.paraboloid_amplitude.to_string(),
            c.dam_x.to_string(),
            c.dam_depth.to_string(),
            c.beach_slope.to_string(),
            self.sip_penalty.to_string(),
            self.max_speed.to_string(),
            s.newton_tol.to_string(),
            s.newton_abs_tol.to_string(),
            s.newton_max_iters.to_string(),
            s.fd_epsilon.to_string(),
            s.gmres.tol.to_string(),
            s.gmres.restart.to_string(),
            s.gmres.max_restarts.to_string(),
            s.line_search.to_string(),
            s.max_retries.to_string(),
            self.snapshots.to_string(),
            self.output_name(),
        ];
        debug_assert_eq!(values.len(), KEYS.len());
        let mut out = String::new();
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of [`Self::to_text`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn output_name(&self) -> String {
        self.output.clone().unwrap_or_else(|| self.case.case.name().to_string())
    }

    /// Run directory below `root`.
    pub fn run_dir(&self, root: &Path) -> PathBuf {
        root.join(self.output_name())
    }
}

/// Output root: `GSWE_OUTPUT_DIR` if set, else `./output`.
pub fn output_root() -> PathBuf {
    std::env::var_os("GSWE_OUTPUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("output"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::Method;

    #[test]
    fn parses_inline_settings() {
        let m = RunManifest::parse("case=bowl_1d method=CG order=4 elements=128", &[]).unwrap();
        assert_eq!(m.case.case, CaseId::Bowl1d);
        assert_eq!(m.case.method, Method::Cg);
        assert_eq!(m.case.elements, [128, 1]);
        assert_eq!(m.case.cfl, 0.2);
    }

    #[test]
    fn rejects_order_zero() {
        assert!(RunManifest::parse("case=bowl_1d order=0", &[]).is_err());
    }

    #[test]
    fn flag_overrides_file() {
        let text = "# comment\ncase=cone_island\ncfl=0.3 # trailing\n";
        let m = RunManifest::parse(text, &["--cfl=1.8".into()]).unwrap();
        assert_eq!(m.case.cfl, 1.8);
        assert!(m.to_text().contains("cfl=1.8\n"));
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RunManifest::parse("case=bowl_1d\n\nfoo=1\n", &[]).unwrap_err();
        assert_eq!(
            err,
            SweError::Config {
                line: 3,
                msg: "unknown key 'foo'".into()
            }
        );
    }

    #[test]
    fn type_mismatch_and_missing_case() {
        let err = RunManifest::parse("case=bowl_1d\norder=four", &[]).unwrap_err();
        assert!(matches!(err, SweError::Config { line: 2, .. }));
        let err = RunManifest::parse("order=4", &[]).unwrap_err();
        assert!(matches!(err, SweError::Config { line: 0, .. }));
        assert!(RunManifest::parse("case=bowl_1d junk", &[]).is_err());
    }

    #[test]
    fn two_dimensional_elements() {
        let m = RunManifest::parse("case=cone_island elements=8x10", &[]).unwrap();
        assert_eq!(m.case.elements, [8, 10]);
        let m2 = RunManifest::parse(&m.to_text(), &[]).unwrap();
        assert_eq!(m2.case, m.case);
    }

    #[test]
    fn round_trip_and_hash() {
        let m = RunManifest::parse("case=three_mounds method=DG viscous=false", &[]).unwrap();
        let again = RunManifest::parse(&m.to_text(), &[]).unwrap();
        assert_eq!(again.to_text(), m.to_text());
        assert_eq!(again.hash(), m.hash());
        assert_eq!(m.hash().len(), 16);
        let other = RunManifest::parse("case=three_mounds method=DG viscous=true", &[]).unwrap();
        assert_ne!(other.hash(), m.hash());
    }
}
