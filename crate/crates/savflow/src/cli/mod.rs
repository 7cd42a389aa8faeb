//! Experiment drivers, configuration parsing and artifact emission.
//!
//! Config files are line-oriented `key = value` with `#` comments; command
//! line flags override file values. Unknown keys are rejected with the list
//! of valid keys. Runs write three artifacts into the output directory:
//! per-step CSV(s), a summary, and an echo of the effective configuration
//! (which re-parses to an identical configuration). Files are written
//! atomically via a temp file and rename.

mod artifacts;
mod experiments;

pub use artifacts::{write_atomic, CsvWriter};
pub use experiments::{
    cylinder_inflow, manufactured_forcing, manufactured_solution, offset_circles_forcing,
    run_convergence, run_cylinder, run_offset_circles, verify_manufactured_forcing,
    ConvergenceRow, ConvergenceSummary, CylinderSummary, ExperimentError, OffsetCirclesSummary,
    SeriesStats, TABLE1_ERRORS,
};

use crate::solver::LinearSolver;
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const VALID_KEYS: &[&str] = &[
    "experiment",
    "n0",
    "levels",
    "h_target",
    "dt",
    "t_end",
    "nu",
    "reynolds",
    "alpha1_mode",
    "alpha2",
    "sav",
    "compare_nosav",
    "outdir",
    "solver",
    "gmres_tol",
    "gmres_max_iter",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown key '{key}' (valid keys: {})", VALID_KEYS.join(", "))]
    UnknownKey { key: String },
    #[error("bad value '{value}' for key '{key}': {expected}")]
    TypeMismatch {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("missing required key '{0}'")]
    MissingKey(&'static str),
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("config line {line}: expected `key = value`, got '{content}'")]
    Malformed { line: usize, content: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Convergence,
    Cylinder,
    OffsetCircles,
}

impl Experiment {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "convergence" => Some(Self::Convergence),
            "cylinder" => Some(Self::Cylinder),
            "offset-circles" | "offset_circles" => Some(Self::OffsetCircles),
            _ => None,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Convergence => "convergence",
            Self::Cylinder => "cylinder",
            Self::OffsetCircles => "offset-circles",
        };
        write!(f, "{s}")
    }
}

/// How the artificial viscosity is derived from the mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha1Mode {
    /// `alpha1 = h^2` with the mesh's nominal size, one value everywhere.
    UniformH2,
    /// `alpha1|_K = h_K^2` with the element's longest edge.
    PerElementH2,
    Explicit(f64),
}

impl Alpha1Mode {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "uniform_h2" => Some(Self::UniformH2),
            "per_element_h2" => Some(Self::PerElementH2),
            v => v.parse::<f64>().ok().map(Self::Explicit),
        }
    }
}

impl fmt::Display for Alpha1Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UniformH2 => write!(f, "uniform_h2"),
            Self::PerElementH2 => write!(f, "per_element_h2"),
            Self::Explicit(v) => write!(f, "{v:.16e}"),
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// base grid resolution of the convergence study (`h = 1/n0`)
    pub n0: usize,
    /// number of simultaneous `(h, dt)` halvings in the convergence study
    pub levels: usize,
    /// target mesh size for the unstructured domains
    pub h_target: f64,
    pub dt: f64,
    pub t_end: f64,
    pub nu: f64,
    pub alpha1_mode: Alpha1Mode,
    pub alpha2: f64,
    pub sav_enabled: bool,
    /// offset-circles: also run the scheme without the subgrid terms
    pub compare_nosav: bool,
    pub output_dir: PathBuf,
    pub solver: LinearSolver,
}

impl ExperimentConfig {
    /// Paper defaults per experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        match experiment {
            Experiment::Convergence => Self {
                experiment,
                n0: 4,
                levels: 4,
                h_target: 0.0,
                dt: 0.01,
                t_end: 0.01,
                nu: 1.0,
                alpha1_mode: Alpha1Mode::UniformH2,
                alpha2: 1.0,
                sav_enabled: true,
                compare_nosav: false,
                output_dir: PathBuf::from("out/convergence"),
                solver: LinearSolver::DirectLu,
            },
            Experiment::Cylinder => Self {
                experiment,
                n0: 0,
                levels: 0,
                h_target: 0.026,
                dt: 0.01,
                t_end: 8.0,
                nu: 1e-3,
                alpha1_mode: Alpha1Mode::UniformH2,
                alpha2: 0.001,
                sav_enabled: true,
                compare_nosav: false,
                output_dir: PathBuf::from("out/cylinder"),
                solver: LinearSolver::DirectLu,
            },
            Experiment::OffsetCircles => Self {
                experiment,
                n0: 0,
                levels: 0,
                h_target: 0.07,
                dt: 0.025,
                t_end: 5.0,
                nu: 1.0 / 200.0,
                alpha1_mode: Alpha1Mode::UniformH2,
                alpha2: 1.0,
                sav_enabled: true,
                compare_nosav: true,
                output_dir: PathBuf::from("out/offset-circles"),
                solver: LinearSolver::DirectLu,
            },
        }
    }

    /// Applies `key = value` pairs on top of this configuration.
    pub fn apply(&mut self, pairs: &[(String, String)]) -> Result<(), ConfigError> {
        let mut gmres_tol: Option<f64> = None;
        let mut gmres_max_iter: Option<usize> = None;
        let mut want_gmres = matches!(self.solver, LinearSolver::Gmres { .. });
        for (key, value) in pairs {
            match key.as_str() {
                "experiment" => {
                    let e = Experiment::parse(value).ok_or_else(|| ConfigError::TypeMismatch {
                        key: key.clone(),
                        value: value.clone(),
                        expected: "convergence | cylinder | offset-circles",
                    })?;
                    if e != self.experiment {
                        return Err(ConfigError::Validation(format!(
                            "config file is for experiment '{e}', but '{}' was requested",
                            self.experiment
                        )));
                    }
                }
                "n0" => self.n0 = parse_num(key, value)?,
                "levels" => self.levels = parse_num(key, value)?,
                "h_target" => self.h_target = parse_num(key, value)?,
                "dt" => self.dt = parse_num(key, value)?,
                "t_end" => self.t_end = parse_num(key, value)?,
                "nu" => self.nu = parse_num(key, value)?,
                "reynolds" => {
                    let re: f64 = parse_num(key, value)?;
                    if re <= 0.0 {
                        return Err(ConfigError::Validation(
                            "reynolds must be positive".into(),
                        ));
                    }
                    self.nu = 1.0 / re;
                }
                "alpha1_mode" => {
                    self.alpha1_mode =
                        Alpha1Mode::parse(value).ok_or_else(|| ConfigError::TypeMismatch {
                            key: key.clone(),
                            value: value.clone(),
                            expected: "uniform_h2 | per_element_h2 | <number>",
                        })?;
                }
                "alpha2" => self.alpha2 = parse_num(key, value)?,
                "sav" => self.sav_enabled = parse_bool(key, value)?,
                "compare_nosav" => self.compare_nosav = parse_bool(key, value)?,
                "outdir" => self.output_dir = PathBuf::from(value),
                "solver" => match value.as_str() {
                    "lu" => {
                        self.solver = LinearSolver::DirectLu;
                        want_gmres = false;
                    }
                    "gmres" => want_gmres = true,
                    _ => {
                        return Err(ConfigError::TypeMismatch {
                            key: key.clone(),
                            value: value.clone(),
                            expected: "lu | gmres",
                        })
                    }
                },
                "gmres_tol" => gmres_tol = Some(parse_num(key, value)?),
                "gmres_max_iter" => gmres_max_iter = Some(parse_num(key, value)?),
                _ => {
                    return Err(ConfigError::UnknownKey { key: key.clone() });
                }
            }
        }
        if want_gmres {
            let (mut tol, mut max_iter) = (1e-10, 2000);
            if let LinearSolver::Gmres {
                tol: t,
                max_iter: m,
            } = self.solver
            {
                tol = t;
                max_iter = m;
            }
            self.solver = LinearSolver::Gmres {
                tol: gmres_tol.unwrap_or(tol),
                max_iter: gmres_max_iter.unwrap_or(max_iter),
            };
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("dt", self.dt),
            ("t_end", self.t_end),
            ("nu", self.nu),
        ];
        for (k, v) in positive {
            if !(v > 0.0) {
                return Err(ConfigError::Validation(format!(
                    "{k} must be positive, got {v}"
                )));
            }
        }
        if self.alpha2 < 0.0 {
            return Err(ConfigError::Validation(format!(
                "alpha2 must be nonnegative, got {}",
                self.alpha2
            )));
        }
        if let Alpha1Mode::Explicit(v) = self.alpha1_mode {
            if v < 0.0 {
                return Err(ConfigError::Validation(format!(
                    "alpha1 must be nonnegative, got {v}"
                )));
            }
        }
        match self.experiment {
            Experiment::Convergence => {
                if self.n0 == 0 || self.levels == 0 {
                    return Err(ConfigError::Validation(
                        "convergence needs n0 >= 1 and levels >= 1".into(),
                    ));
                }
            }
            _ => {
                if !(self.h_target > 0.0) {
                    return Err(ConfigError::Validation(format!(
                        "h_target must be positive, got {}",
                        self.h_target
                    )));
                }
            }
        }
        Ok(())
    }

    /// Serializes the effective configuration; parsing the result yields an
    /// identical configuration.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        out.push_str("# effective configuration\n");
        out.push_str(&format!("experiment = {}\n", self.experiment));
        if self.experiment == Experiment::Convergence {
            out.push_str(&format!("n0 = {}\n", self.n0));
            out.push_str(&format!("levels = {}\n", self.levels));
        } else {
            out.push_str(&format!("h_target = {:.16e}\n", self.h_target));
        }
        out.push_str(&format!("dt = {:.16e}\n", self.dt));
        out.push_str(&format!("t_end = {:.16e}\n", self.t_end));
        out.push_str(&format!("nu = {:.16e}\n", self.nu));
        out.push_str(&format!("alpha1_mode = {}\n", self.alpha1_mode));
        out.push_str(&format!("alpha2 = {:.16e}\n", self.alpha2));
        out.push_str(&format!("sav = {}\n", self.sav_enabled));
        out.push_str(&format!("compare_nosav = {}\n", self.compare_nosav));
        out.push_str(&format!("outdir = {}\n", self.output_dir.display()));
        match self.solver {
            LinearSolver::DirectLu => out.push_str("solver = lu\n"),
            LinearSolver::Gmres { tol, max_iter } => {
                out.push_str("solver = gmres\n");
                out.push_str(&format!("gmres_tol = {tol:.16e}\n"));
                out.push_str(&format!("gmres_max_iter = {max_iter}\n"));
            }
        }
        out
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::TypeMismatch {
        key: key.to_string(),
        value: value.to_string(),
        expected: "a number",
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::TypeMismatch {
            key: key.to_string(),
            value: value.to_string(),
            expected: "true | false",
        }),
    }
}

/// Reads `key = value` pairs from a config file; `#` starts a comment.
pub fn parse_config(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let content = std::fs::read_to_string(path)?;
    parse_config_str(&content)
}

pub fn parse_config_str(content: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Malformed {
                line: i + 1,
                content: raw.to_string(),
            });
        };
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Loads defaults for `experiment`, then file values, then flag overrides.
pub fn resolve_config(
    experiment: Experiment,
    config_path: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::defaults(experiment);
    if let Some(path) = config_path {
        let pairs = parse_config(path)?;
        cfg.apply(&pairs)?;
    }
    cfg.apply(&overrides.to_vec())?;
    Ok(cfg)
}

/// Paths of the artifacts a run produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub step_csvs: Vec<PathBuf>,
    pub summary: PathBuf,
    pub config_echo: PathBuf,
}

pub(crate) fn echo_config(cfg: &ExperimentConfig) -> Result<PathBuf, ConfigError> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join("config_echo.cfg");
    write_atomic(&path, cfg.echo().as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_paper_parameters() {
        let c = ExperimentConfig::defaults(Experiment::Cylinder);
        assert_eq!(c.nu, 1e-3);
        assert_eq!(c.alpha2, 0.001);
        assert_eq!(c.dt, 0.01);
        assert_eq!(c.t_end, 8.0);
        let o = ExperimentConfig::defaults(Experiment::OffsetCircles);
        assert_eq!(o.dt, 0.025);
        assert_eq!(o.t_end, 5.0);
        assert_eq!(o.nu, 1.0 / 200.0);
        let v = ExperimentConfig::defaults(Experiment::Convergence);
        assert_eq!(v.nu, 1.0);
        assert_eq!(v.alpha2, 1.0);
        assert_eq!(v.dt, 0.01);
        assert_eq!(v.t_end, 0.01);
    }

    #[test]
    fn override_alpha2() {
        let mut c = ExperimentConfig::defaults(Experiment::Cylinder);
        c.apply(&[("alpha2".into(), "0.5".into())]).unwrap();
        assert_eq!(c.alpha2, 0.5);
    }

    #[test]
    fn negative_dt_rejected() {
        let mut c = ExperimentConfig::defaults(Experiment::Cylinder);
        let err = c.apply(&[("dt".into(), "-1".into())]).unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)));
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let mut c = ExperimentConfig::defaults(Experiment::Cylinder);
        let err = c
            .apply(&[("alpha3".into(), "1".into())])
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("alpha3"));
        assert!(msg.contains("alpha2"));
        assert!(msg.contains("h_target"));
    }

    #[test]
    fn reynolds_sets_nu() {
        let mut c = ExperimentConfig::defaults(Experiment::OffsetCircles);
        c.apply(&[("reynolds".into(), "800".into())]).unwrap();
        assert!((c.nu - 1.0 / 800.0).abs() < 1e-18);
    }

    #[test]
    fn echo_round_trips() {
        for exp in [
            Experiment::Convergence,
            Experiment::Cylinder,
            Experiment::OffsetCircles,
        ] {
            let mut cfg = ExperimentConfig::defaults(exp);
            cfg.apply(&[
                ("alpha2".into(), "0.125".into()),
                ("sav".into(), "false".into()),
            ])
            .unwrap();
            let echoed = cfg.echo();
            let pairs = parse_config_str(&echoed).unwrap();
            let mut back = ExperimentConfig::defaults(exp);
            back.apply(&pairs).unwrap();
            assert_eq!(cfg, back, "round trip for {exp}");
        }
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let pairs = parse_config_str("# header\n\n dt = 0.5 # trailing\n").unwrap();
        assert_eq!(pairs, vec![("dt".into(), "0.5".into())]);
    }

    #[test]
    fn malformed_line_reports_position() {
        let err = parse_config_str("dt 0.5\n").unwrap_err();
        assert!(matches!(err, ConfigError::Malformed { line: 1, .. }));
    }
}
