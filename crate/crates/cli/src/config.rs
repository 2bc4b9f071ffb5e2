//! Run configuration: a flat key-value file with dotted sections and strict
//! unknown-key rejection. Numeric values accept pi-literals (`16*pi`, `pi/2`)
//! so volumes in the natural regime stay exact in the reports.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use vortex_sphere::fields::VortexConfig;
use vortex_sphere::solver::{InitStrategy, SolveOptions};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Tolerance names that may be overridden from the config file; each matches
/// a report record name.
pub const KNOWN_TOLERANCES: &[&str] = &[
    "quadrature_volume",
    "quadrature_fs_mass",
    "gauss_bonnet",
    "psi0_mean",
    "phi_psi0_mixed",
    "eigenfunction_phi0",
    "poincare_lelong",
    "poincare_lelong_fd",
    "dbar_psi0",
    "structural_first",
    "structural_section",
    "structural_mixed",
    "phi_eta_dbar",
    "phi_eta_normalization",
    "phi_eta_scaling",
    "classical_futaki",
    "laplacian_selfadjoint",
    "laplacian_negative",
    "poisson_roundtrip",
    "residual_compat",
    "invariance",
    "oracle",
    "conserved",
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: u32,
    pub ell: u32,
    pub tau: f64,
    pub volume: f64,
    /// Explicit coupling if the file supplied one; validated against 2/N.
    pub coupling: Option<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
    pub solver: SolveOptions,
    pub seeds: Vec<u64>,
    pub n_samples: usize,
    pub output_dir: Option<PathBuf>,
    /// Interior band lower edge as a fraction of π (upper edge mirrors it).
    pub band_fraction: f64,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 2,
            ell: 1,
            tau: 1.0,
            volume: 16.0 * PI,
            coupling: None,
            n_theta: 64,
            n_phi: 64,
            solver: SolveOptions::default(),
            seeds: vec![2024],
            n_samples: 10,
            output_dir: None,
            band_fraction: 0.1,
            tolerances: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    /// Parse the flat key-value text format. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected `key = value`", lineno + 1));
            };
            let key = key.trim();
            let value = value.trim();
            cfg.set(key, value)
                .map_err(|e| ConfigError(format!("line {}: {}", lineno + 1, e.0)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "config.n" => self.n = parse_uint(value)? as u32,
            "config.ell" => self.ell = parse_uint(value)? as u32,
            "config.tau" => self.tau = parse_pi_expr(value)?,
            "config.volume" => self.volume = parse_pi_expr(value)?,
            "config.a" => self.coupling = Some(parse_pi_expr(value)?),
            "grid.n_theta" => self.n_theta = parse_uint(value)?,
            "grid.n_phi" => self.n_phi = parse_uint(value)?,
            "solver.max_newton_iters" => self.solver.max_newton_iters = parse_uint(value)?,
            "solver.newton_tol" => self.solver.newton_tol = parse_pi_expr(value)?,
            "solver.linear_tol" => self.solver.linear_tol = parse_pi_expr(value)?,
            "solver.damping" => self.solver.damping = parse_pi_expr(value)?,
            "solver.continuation_steps" => self.solver.continuation_steps = parse_uint(value)?,
            "solver.init_strategy" => {
                self.solver.init_strategy = match value {
                    "flat" => InitStrategy::Flat,
                    "radial_seed" => InitStrategy::RadialSeed,
                    other => return err(format!("unknown init strategy `{other}`")),
                }
            }
            "seeds" => {
                let mut seeds = Vec::new();
                for part in value.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    seeds.push(
                        part.parse::<u64>()
                            .map_err(|_| ConfigError(format!("bad seed `{part}`")))?,
                    );
                }
                if seeds.is_empty() {
                    return err("seeds list is empty");
                }
                self.seeds = seeds;
            }
            "futaki.n_samples" => self.n_samples = parse_uint(value)?,
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "verify.band_fraction" => self.band_fraction = parse_pi_expr(value)?,
            _ => {
                if let Some(name) = key.strip_prefix("tolerances.") {
                    if !KNOWN_TOLERANCES.contains(&name) {
                        return err(format!("unknown tolerance name `{name}`"));
                    }
                    self.tolerances
                        .insert(name.to_string(), parse_pi_expr(value)?);
                } else {
                    return err(format!("unknown key `{key}`"));
                }
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.n_theta < 8 || self.n_phi < 8 {
            return err(format!(
                "grid too coarse: need n_theta >= 8 and n_phi >= 8, got {} x {}",
                self.n_theta, self.n_phi
            ));
        }
        if self.n_samples < 2 {
            return err("futaki.n_samples must be at least 2");
        }
        if !(self.band_fraction > 0.0 && self.band_fraction < 0.5) {
            return err("verify.band_fraction must lie in (0, 0.5)");
        }
        // Build the vortex configuration once to surface its own validation;
        // an explicit coupling must satisfy the quantisation condition.
        self.vortex_config().map(|_| ())
    }

    pub fn vortex_config(&self) -> Result<VortexConfig, ConfigError> {
        let r = match self.coupling {
            Some(a) => VortexConfig::with_coupling(self.n, self.ell, self.tau, self.volume, a),
            None => VortexConfig::new(self.n, self.ell, self.tau, self.volume),
        };
        r.map_err(|e| ConfigError(e.to_string()))
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }
}

fn parse_uint(s: &str) -> Result<usize, ConfigError> {
    s.parse::<usize>()
        .map_err(|_| ConfigError(format!("expected a non-negative integer, got `{s}`")))
}

/// Parse `<num>`, `pi`, `<num>*pi`, `pi/<num>`, or `<num>*pi/<num>`.
pub fn parse_pi_expr(s: &str) -> Result<f64, ConfigError> {
    let s = s.trim();
    let (mantissa, rest) = match s.split_once('*') {
        Some((m, rest)) => {
            let m = m.trim();
            let v = m
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("bad number `{m}`")))?;
            (v, rest.trim())
        }
        None => (1.0, s),
    };
    let value = if let Some(stripped) = rest.strip_prefix("pi") {
        let tail = stripped.trim();
        if tail.is_empty() {
            mantissa * PI
        } else if let Some(d) = tail.strip_prefix('/') {
            let d = d.trim();
            let div = d
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("bad divisor `{d}`")))?;
            mantissa * PI / div
        } else {
            return err(format!("malformed pi expression `{s}`"));
        }
    } else if mantissa != 1.0 || s.contains('*') {
        return err(format!("malformed pi expression `{s}`"));
    } else {
        rest.parse::<f64>()
            .map_err(|_| ConfigError(format!("bad number `{s}`")))?
    };
    if !value.is_finite() {
        return err(format!("non-finite value `{s}`"));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_expressions() {
        assert_eq!(parse_pi_expr("16*pi").unwrap(), 16.0 * PI);
        assert_eq!(parse_pi_expr("pi").unwrap(), PI);
        assert_eq!(parse_pi_expr("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_pi_expr("3*pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_pi_expr("2.5").unwrap(), 2.5);
        assert_eq!(parse_pi_expr("1e-8").unwrap(), 1e-8);
        assert!(parse_pi_expr("pi*2").is_err());
        assert!(parse_pi_expr("two").is_err());
    }

    #[test]
    fn parse_round_trip_and_strictness() {
        let text = "
            # reference case
            config.n = 2
            config.ell = 1
            config.tau = 1
            config.volume = 16*pi
            grid.n_theta = 48
            grid.n_phi = 40
            seeds = 7, 8, 9
            tolerances.poincare_lelong = 1e-6
        ";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.n, 2);
        assert_eq!(cfg.n_theta, 48);
        assert_eq!(cfg.seeds, vec![7, 8, 9]);
        assert_eq!(cfg.tolerance("poincare_lelong", 0.0), 1e-6);

        assert!(RunConfig::parse("bogus.key = 1").is_err());
        assert!(RunConfig::parse("tolerances.not_a_check = 1e-3").is_err());
        assert!(RunConfig::parse("grid.n_theta = 4").is_err());
    }

    #[test]
    fn coupling_is_quantised() {
        // a = 2/N accepted, anything else refused at parse time.
        let ok = RunConfig::parse("config.n = 4\nconfig.ell = 2\nconfig.a = 0.5");
        assert!(ok.is_ok());
        let bad = RunConfig::parse("config.n = 4\nconfig.ell = 2\nconfig.a = 0.7");
        assert!(bad.is_err());
    }
}
