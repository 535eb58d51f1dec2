//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Overrides given on the
//! command line use the same syntax and are applied after the file, later
//! ones winning.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{Params, State};
use crate::grid::Grid;
use crate::presets::{self, Preset, PresetOptions};
use crate::timestepper::{Scheme, StepConfig, TimeStep};

use super::checkpoint;

/// Overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "PEQ_OUTPUT_DIR";
/// Caps the worker thread count.
pub const THREADS_ENV: &str = "PEQ_THREADS";

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Preset(Preset),
    Checkpoint(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub params: Params,
    pub step: StepConfig,
    pub init: InitialCondition,
    pub preset: PresetOptions,
    /// Diagnostics row every this many steps; the final state is always logged.
    pub output_every: usize,
    /// Checkpoint every this many steps, 0 for the final state only.
    pub checkpoint_every: usize,
    pub output_dir: PathBuf,
    pub deterministic: bool,
    /// Perturbation size for twin runs.
    pub delta: f64,
    /// Regularization values for the epsilon study.
    pub eps_list: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nx: 16,
            ny: 16,
            nz: 16,
            params: Params::default(),
            step: StepConfig::default(),
            init: InitialCondition::Preset(Preset::RandomH),
            preset: PresetOptions::default(),
            output_every: 1,
            checkpoint_every: 0,
            output_dir: PathBuf::from("out"),
            deterministic: false,
            delta: 1e-5,
            eps_list: vec![0.0, 1e-4, 1e-3, 1e-2],
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for key `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse `{value}` for key `{key}` as a boolean"))),
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 25] = [
        "nx",
        "ny",
        "nz",
        "h",
        "f0",
        "nu_h",
        "nu_z",
        "kappa_h",
        "eps",
        "dt",
        "cfl",
        "t_end",
        "scheme",
        "resymmetrize_every",
        "blowup_guard",
        "init",
        "seed",
        "modes",
        "amplitude",
        "output_every",
        "checkpoint_every",
        "output_dir",
        "deterministic",
        "delta",
        "eps_list",
    ];

    /// Sets one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "nx" => self.nx = parse(key, v)?,
            "ny" => self.ny = parse(key, v)?,
            "nz" => self.nz = parse(key, v)?,
            "h" => self.params.h = parse(key, v)?,
            "f0" => self.params.f0 = parse(key, v)?,
            "nu_h" => self.params.nu_h = parse(key, v)?,
            "nu_z" => self.params.nu_z = parse(key, v)?,
            "kappa_h" => self.params.kappa_h = parse(key, v)?,
            "eps" => self.params.eps = parse(key, v)?,
            "dt" => {
                self.step.dt = if v.eq_ignore_ascii_case("auto") {
                    TimeStep::Auto
                } else {
                    TimeStep::Fixed(parse(key, v)?)
                }
            }
            "cfl" => self.step.cfl = parse(key, v)?,
            "t_end" => self.step.t_end = parse(key, v)?,
            "scheme" => self.step.scheme = v.parse::<Scheme>()?,
            "resymmetrize_every" => self.step.resymmetrize_every = parse(key, v)?,
            "blowup_guard" => self.step.blowup_guard = parse(key, v)?,
            "init" => {
                self.init = match v.strip_prefix("checkpoint:") {
                    Some(path) => InitialCondition::Checkpoint(PathBuf::from(path)),
                    None => InitialCondition::Preset(v.parse()?),
                }
            }
            "seed" => self.preset.seed = parse(key, v)?,
            "modes" => self.preset.modes = parse(key, v)?,
            "amplitude" => self.preset.amplitude = parse(key, v)?,
            "output_every" => self.output_every = parse(key, v)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "deterministic" => self.deterministic = parse_bool(key, v)?,
            "delta" => self.delta = parse(key, v)?,
            "eps_list" => {
                self.eps_list = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies one `key=value` assignment.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{assignment}`")))?;
        self.set(k, v)
    }

    /// Parses configuration text on top of the defaults.
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            c.apply(line)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(c)
    }

    /// Reads `path` (if any), then the environment, then `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
        let mut c = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                RunConfig::parse_str(&text)?
            }
            None => RunConfig::default(),
        };
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                c.output_dir = PathBuf::from(dir);
            }
        }
        for o in overrides {
            c.apply(o)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.step.validate()?;
        if self.output_every == 0 {
            return Err(Error::Config("output_every must be at least 1".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Config(format!("delta = {} must be >= 0", self.delta)));
        }
        if self.eps_list.iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
            return Err(Error::Config("eps_list values must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.nx, self.ny, self.nz, self.params.h)
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Builds the initial state. A checkpoint replaces the grid and
    /// parameters stored in it.
    pub fn initial_state(&mut self) -> Result<State> {
        match &self.init {
            InitialCondition::Preset(p) => presets::build(&self.grid()?, *p, &self.preset),
            InitialCondition::Checkpoint(path) => {
                let (s, p) = checkpoint::read(path)?;
                let g = s.grid();
                (self.nx, self.ny, self.nz) = (g.nx(), g.ny(), g.nz());
                self.params = p;
                Ok(s)
            }
        }
    }

    /// Canonical text form; parsing it gives back the same configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let init = match &self.init {
            InitialCondition::Preset(p) => p.name().to_string(),
            InitialCondition::Checkpoint(path) => format!("checkpoint:{}", path.display()),
        };
        let dt = match self.step.dt {
            TimeStep::Auto => "auto".to_string(),
            TimeStep::Fixed(dt) => format!("{dt:?}"),
        };
        let eps: Vec<String> = self.eps_list.iter().map(|e| format!("{e:?}")).collect();
        for (k, v) in [
            ("nx", self.nx.to_string()),
            ("ny", self.ny.to_string()),
            ("nz", self.nz.to_string()),
            ("h", format!("{:?}", p.h)),
            ("f0", format!("{:?}", p.f0)),
            ("nu_h", format!("{:?}", p.nu_h)),
            ("nu_z", format!("{:?}", p.nu_z)),
            ("kappa_h", format!("{:?}", p.kappa_h)),
            ("eps", format!("{:?}", p.eps)),
            ("dt", dt),
            ("cfl", format!("{:?}", self.step.cfl)),
            ("t_end", format!("{:?}", self.step.t_end)),
            ("scheme", self.step.scheme.name().to_string()),
            ("resymmetrize_every", self.step.resymmetrize_every.to_string()),
            ("blowup_guard", format!("{:?}", self.step.blowup_guard)),
            ("init", init),
            ("seed", self.preset.seed.to_string()),
            ("modes", self.preset.modes.to_string()),
            ("amplitude", format!("{:?}", self.preset.amplitude)),
            ("output_every", self.output_every.to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("deterministic", self.deterministic.to_string()),
            ("delta", format!("{:?}", self.delta)),
            ("eps_list", eps.join(",")),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_assignment_wins() {
        let mut c = RunConfig::parse_str("nx = 8\n# comment\nnx=12 # trailing\n").unwrap();
        assert_eq!(c.nx, 12);
        c.apply("nx=32").unwrap();
        assert_eq!(c.nx, 32);
    }

    #[test]
    fn text_roundtrip() {
        let mut c = RunConfig::default();
        c.apply("dt=0.003").unwrap();
        c.apply("init=checkpoint:/tmp/a.peqc").unwrap();
        c.apply("eps_list=0,1e-3").unwrap();
        c.apply("scheme=rk2-imf").unwrap();
        let back = RunConfig::parse_str(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(RunConfig::KEYS.len(), c.to_text().lines().count());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse_str("nx").is_err());
        assert!(RunConfig::parse_str("colour = red").is_err());
        assert!(RunConfig::parse_str("nu_h = fast").is_err());
        let c = RunConfig::parse_str("kappa_h = -1").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = RunConfig::parse_str("f0 = -3").unwrap();
        assert!(c.validate().is_ok());
    }
}
