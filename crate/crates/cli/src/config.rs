//! Run configuration: flat `section.key = value` text with defaults for
//! every key. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use sha2::{Digest, Sha256};
use warpnls::lab::{DatumFamily, LabConfig};
use warpnls::solver::TimeProfile;
use warpnls::{
    CoefficientFunction, FourierField, ProblemSpec, SolveConfig, TimeCoefficient, TimeWarp,
    TorusGrid,
};

use crate::CliError;

const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "20240601"),
    ("output.dir", "out"),
    ("problem.dim", "2"),
    ("problem.power", "3"),
    ("problem.warp", "cubic"),
    ("problem.coefficient", "warp"),
    ("problem.coupling", "1"),
    ("problem.datum", "plane"),
    ("problem.mode", "1,0"),
    ("problem.amplitude", "0.5"),
    ("problem.radius", "2"),
    ("solver.method", "split_step"),
    ("solver.s", "0"),
    ("solver.eps", "0.03125"),
    ("solver.delta", "0.5"),
    ("solver.c_prime", "auto"),
    ("solver.max_iter", "12"),
    ("solver.tol", "1e-10"),
    ("solver.dt", "0.001"),
    ("solver.t_start", "-1"),
    ("solver.t_end", "1"),
    ("solver.nodes", "21"),
    (
        "experiment.substitution_warps",
        "identity,cubic,power:alpha=2",
    ),
    (
        "experiment.substitution_families",
        "dirichlet,random_phase,gaussian_bell",
    ),
    ("experiment.substitution_ns", "4,8,16"),
    ("experiment.window", "0,1"),
    ("experiment.growth_ns", "4,8,16,32"),
    ("experiment.growth_oracle_max", "8"),
    ("experiment.bilinear_warp", "cubic"),
    ("experiment.bilinear_n1s", "8,16,32,64"),
    ("experiment.bilinear_n2", "2"),
    ("experiment.bilinear_diagonal", "2,4,8,16"),
    ("experiment.eps", "0.03125"),
    ("experiment.s", "0.5"),
    ("experiment.delta", "0.25"),
    ("experiment.xsb_warp", "cubic"),
    ("experiment.delta_sweep", "0.1,0.2,0.4"),
    ("reduce.coefficients", "cos:2,1"),
    ("reduce.resolution", "128"),
    ("reduce.tol", "1e-13"),
    ("norms.s", "0.5"),
    ("norms.b", "0.53125"),
    ("norms.p", "4"),
    ("norms.delta", "0.25"),
];

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            values: DEFAULTS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

fn invalid(key: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{key}: {reason}"))
}

impl RunConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = RunConfig::default();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Validation(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    number + 1
                ))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(CliError::Validation(format!(
                "unknown configuration key `{key}`"
            ))),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("{key} has a default"))
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get(key)
            .parse()
            .map_err(|_| invalid(key, format!("cannot parse `{}`", self.get(key))))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        self.get(key)
            .split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| invalid(key, format!("cannot parse list entry `{v}`")))
            })
            .collect()
    }

    fn labels(&self, key: &str) -> Vec<String> {
        self.get(key)
            .split(',')
            .map(|v| v.trim().to_string())
            .collect()
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.number("seed")
    }

    /// Canonical text of every key in sorted order.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn warp(&self) -> Result<TimeWarp, CliError> {
        Ok(TimeWarp::parse(self.get("problem.warp"))?)
    }

    pub fn problem(&self) -> Result<ProblemSpec, CliError> {
        let coefficient = match self.get("problem.coefficient") {
            "warp" => TimeCoefficient::Warp,
            "unit" => TimeCoefficient::Unit,
            other => match other.strip_prefix("scaled:") {
                Some(profile) => TimeCoefficient::Scaled(TimeProfile::parse(profile)?),
                None => {
                    return Err(invalid(
                        "problem.coefficient",
                        format!("`{other}` is not warp, unit or scaled:<profile>"),
                    ))
                }
            },
        };
        let spec = ProblemSpec::new(
            self.number("problem.dim")?,
            self.number("problem.power")?,
            self.warp()?,
            coefficient,
        )?;
        Ok(spec.with_coupling(self.number("problem.coupling")?))
    }

    /// Grid radius `N` of the datum.
    pub fn radius(&self) -> Result<usize, CliError> {
        let n: usize = self.number("problem.radius")?;
        if n == 0 {
            return Err(invalid("problem.radius", "must be at least 1"));
        }
        Ok(n)
    }

    pub fn grid(&self) -> Result<TorusGrid, CliError> {
        Ok(TorusGrid::dealiased(
            self.number("problem.dim")?,
            self.radius()?,
            self.number("problem.power")?,
        )?)
    }

    pub fn plane_mode(&self) -> Result<[i64; 2], CliError> {
        let mode: Vec<i64> = self.list("problem.mode")?;
        let dim: usize = self.number("problem.dim")?;
        match (dim, mode.as_slice()) {
            (1, [k]) | (1, [k, 0]) => Ok([*k, 0]),
            (2, [k0, k1]) => Ok([*k0, *k1]),
            _ => Err(invalid(
                "problem.mode",
                format!("needs {dim} integer component(s)"),
            )),
        }
    }

    pub fn amplitude(&self) -> Result<f64, CliError> {
        self.number("problem.amplitude")
    }

    /// The initial datum on [`RunConfig::grid`].
    pub fn datum(&self) -> Result<FourierField, CliError> {
        let grid = self.grid()?;
        let n = self.radius()?;
        let amplitude = self.amplitude()?;
        let field = match self.get("problem.datum") {
            "plane" => {
                let k = self.plane_mode()?;
                if (k[0] * k[0] + k[1] * k[1]) as usize > n * n {
                    return Err(invalid(
                        "problem.mode",
                        format!("mode {k:?} lies outside B(0,{n}); raise problem.radius"),
                    ));
                }
                FourierField::plane_wave(grid, k, Complex64::new(amplitude, 0.0))?
            }
            "bell" => FourierField::from_modes(grid, |k| {
                let r2 = (k[0] * k[0] + k[1] * k[1]) as f64;
                if r2 <= (n * n) as f64 {
                    Complex64::new(amplitude * grid.volume() * (-r2 / 2.0).exp(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
            family => DatumFamily::parse(family, self.seed()?)?
                .datum(&grid, n)?
                .scaled(Complex64::new(amplitude, 0.0)),
        };
        Ok(field)
    }

    pub fn solve_config(&self) -> Result<SolveConfig, CliError> {
        let c_prime = match self.get("solver.c_prime") {
            "auto" => None,
            _ => Some(self.number("solver.c_prime")?),
        };
        let config = SolveConfig {
            s: self.number("solver.s")?,
            eps: self.number("solver.eps")?,
            delta: self.number("solver.delta")?,
            c_prime,
            max_iter: self.number("solver.max_iter")?,
            tol: self.number("solver.tol")?,
            dt_warped: self.number("solver.dt")?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn method(&self) -> Result<Method, CliError> {
        match self.get("solver.method") {
            "split_step" => Ok(Method::SplitStep),
            "picard" => Ok(Method::Picard),
            other => Err(invalid(
                "solver.method",
                format!("`{other}` is not split_step or picard"),
            )),
        }
    }

    /// Output lattice `(t_start, t_end, nodes)`.
    pub fn output_times(&self) -> Result<(f64, f64, usize), CliError> {
        Ok((
            self.number("solver.t_start")?,
            self.number("solver.t_end")?,
            self.number("solver.nodes")?,
        ))
    }

    pub fn lab(&self) -> Result<LabConfig, CliError> {
        let window: Vec<f64> = self.list("experiment.window")?;
        let [w0, w1] = window[..] else {
            return Err(invalid("experiment.window", "needs two numbers"));
        };
        let config = LabConfig {
            seed: self.seed()?,
            substitution_warps: self.labels("experiment.substitution_warps"),
            substitution_families: self.labels("experiment.substitution_families"),
            substitution_ns: self.list("experiment.substitution_ns")?,
            window: (w0, w1),
            growth_ns: self.list("experiment.growth_ns")?,
            growth_oracle_max: self.number("experiment.growth_oracle_max")?,
            bilinear_warp: self.get("experiment.bilinear_warp").to_string(),
            bilinear_n1s: self.list("experiment.bilinear_n1s")?,
            bilinear_n2: self.number("experiment.bilinear_n2")?,
            bilinear_diagonal: self.list("experiment.bilinear_diagonal")?,
            eps: self.number("experiment.eps")?,
            s: self.number("experiment.s")?,
            delta: self.number("experiment.delta")?,
            xsb_warp: self.get("experiment.xsb_warp").to_string(),
            delta_sweep: self.list("experiment.delta_sweep")?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn coefficients(&self) -> Result<Vec<CoefficientFunction>, CliError> {
        self.get("reduce.coefficients")
            .split(';')
            .map(|c| CoefficientFunction::parse(c).map_err(CliError::from))
            .collect()
    }

    pub fn reduce_resolution(&self) -> Result<(usize, f64), CliError> {
        Ok((
            self.number("reduce.resolution")?,
            self.number("reduce.tol")?,
        ))
    }

    /// `(s, b, p, delta)` of the `norms` subcommand.
    pub fn norm_params(&self) -> Result<(f64, f64, f64, f64), CliError> {
        Ok((
            self.number("norms.s")?,
            self.number("norms.b")?,
            self.number("norms.p")?,
            self.number("norms.delta")?,
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    SplitStep,
    Picard,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_library_defaults() {
        let config = RunConfig::default();
        assert_eq!(config.lab().unwrap(), LabConfig::default());
        assert_eq!(config.solve_config().unwrap(), SolveConfig::default());
    }

    #[test]
    fn unknown_keys_and_bad_lines_are_rejected() {
        assert!(RunConfig::parse("solver.eps = 0.01\n# comment\n\n").is_ok());
        assert!(matches!(
            RunConfig::parse("solver.epsilon = 0.01"),
            Err(CliError::Validation(_))
        ));
        assert!(matches!(
            RunConfig::parse("just text"),
            Err(CliError::Validation(_))
        ));
    }

    #[test]
    fn eps_outside_range_names_the_range() {
        let config = RunConfig::parse("solver.eps = 0.1").unwrap();
        match config.solve_config() {
            Err(CliError::Validation(message)) => {
                assert!(message.contains("(0, 1/16)"), "{message}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.set("seed", "7").unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn datum_respects_radius() {
        let mut config = RunConfig::default();
        config.set("problem.mode", "3,0").unwrap();
        assert!(config.datum().is_err());
        config.set("problem.radius", "3").unwrap();
        assert_eq!(config.datum().unwrap().active_radius(), 3);
    }
}
