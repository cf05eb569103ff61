//! Strict `key = value` configuration with `[section]` headers.
//!
//! Lines are trimmed; `#` starts a comment. Every key must belong to the
//! section it appears in, and may appear once. Values are scalars or
//! comma-separated lists. Missing keys take their defaults, so a file naming
//! only the potential and the grid is already complete.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use qball::dynamics::{Perturbation, Sponge};
use qball::potential::{AlphaPolicy, PotentialSpec, Preset};
use qball::solver::SolveOptions;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: unknown key `{key}` in section [{section}]")]
    UnknownKey {
        line: usize,
        column: usize,
        section: String,
        key: String,
    },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
}

/// Keys accepted in each section.
const SCHEMA: &[(&str, &[&str])] = &[
    (
        "potential",
        &["preset", "coefficients", "m", "growth_exponent", "alpha_policy", "alpha_floor"],
    ),
    ("grid", &["r_max", "n"]),
    ("hylomorphy", &["radii", "q_list", "calibration_q"]),
    (
        "solver",
        &[
            "q",
            "q_range",
            "q_count",
            "omega_list",
            "delta_list",
            "init_radius",
            "bracket",
            "scan_points",
            "damping",
            "max_iterations",
            "tolerance",
            "tail_tolerance",
            "flow_max_iterations",
            "flow_gradient_tolerance",
            "flow_collapse_fraction",
            "flow_tail_tolerance",
        ],
    ),
    (
        "dynamics",
        &[
            "q",
            "omega",
            "t_final",
            "dt",
            "sample_every",
            "eps_list",
            "modes",
            "sponge",
            "sponge_fraction",
            "sponge_strength",
        ],
    ),
    ("run", &["out", "workers", "seed"]),
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
    /// Column of the first character of the value.
    column: usize,
}

/// Raw sectioned map produced by the parser, before typing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawConfig {
    entries: BTreeMap<(String, String), Entry>,
}

/// Parses the text into a sectioned map, rejecting unknown keys.
pub fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::default();
    let mut section: Option<String> = None;
    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let content = full.split('#').next().unwrap_or("");
        let indent = content.len() - content.trim_start().len();
        let body = content.trim();
        if body.is_empty() {
            continue;
        }
        let col = indent + 1;
        if let Some(rest) = body.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(ConfigError::Parse {
                    line,
                    column: col,
                    message: "section header must end with `]`".into(),
                });
            };
            let name = name.trim();
            if !SCHEMA.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::Parse {
                    line,
                    column: col + 1,
                    message: format!("unknown section [{name}]"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(ConfigError::Parse {
                line,
                column: col,
                message: "expected `key = value`".into(),
            });
        };
        let key = body[..eq].trim();
        let value = body[eq + 1..].trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ConfigError::Parse {
                line,
                column: col,
                message: format!("malformed key `{key}`"),
            });
        }
        let Some(sec) = &section else {
            return Err(ConfigError::Parse {
                line,
                column: col,
                message: format!("key `{key}` appears before any section header"),
            });
        };
        let allowed = SCHEMA.iter().find(|(s, _)| s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                column: col,
                section: sec.clone(),
                key: key.to_string(),
            });
        }
        let value_col = col + eq + 1 + (body[eq + 1..].len() - body[eq + 1..].trim_start().len());
        let entry = Entry {
            value: value.to_string(),
            line,
            column: value_col,
        };
        if raw.entries.insert((sec.clone(), key.to_string()), entry).is_some() {
            return Err(ConfigError::Parse {
                line,
                column: col,
                message: format!("duplicate key `{key}` in section [{sec}]"),
            });
        }
    }
    Ok(raw)
}

impl RawConfig {
    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn bad(e: &Entry, section: &str, key: &str, what: &str) -> ConfigError {
        ConfigError::Parse {
            line: e.line,
            column: e.column,
            message: format!("`{section}.{key}` expects {what}, got `{}`", e.value),
        }
    }

    fn f64(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(section, key)
            .map(|e| e.value.parse::<f64>().map_err(|_| Self::bad(e, section, key, "a number")))
            .transpose()
    }

    fn usize(&self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        self.get(section, key)
            .map(|e| {
                e.value
                    .parse::<usize>()
                    .map_err(|_| Self::bad(e, section, key, "a nonnegative integer"))
            })
            .transpose()
    }

    fn u64(&self, section: &str, key: &str) -> Result<Option<u64>, ConfigError> {
        self.get(section, key)
            .map(|e| {
                e.value
                    .parse::<u64>()
                    .map_err(|_| Self::bad(e, section, key, "a nonnegative integer"))
            })
            .transpose()
    }

    fn bool(&self, section: &str, key: &str) -> Result<Option<bool>, ConfigError> {
        self.get(section, key)
            .map(|e| match e.value.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Self::bad(e, section, key, "`true` or `false`")),
            })
            .transpose()
    }

    fn str(&self, section: &str, key: &str) -> Option<&str> {
        self.get(section, key).map(|e| e.value.as_str())
    }

    fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.get(section, key)
            .map(|e| {
                if e.value.is_empty() {
                    return Ok(Vec::new());
                }
                e.value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| Self::bad(e, section, key, "a comma-separated list of numbers"))
            })
            .transpose()
    }

    fn words(&self, section: &str, key: &str) -> Option<Vec<String>> {
        self.get(section, key).map(|e| {
            e.value
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConfig {
    pub spec: PotentialSpec,
    pub policy: AlphaPolicy,
    /// Floor handed to the admissibility check.
    pub alpha_floor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub r_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HylomorphyConfig {
    pub radii: Vec<f64>,
    pub q_list: Vec<f64>,
    pub calibration_q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Couplings of the family sweep, ascending.
    pub q_values: Vec<f64>,
    pub omega_list: Vec<f64>,
    pub delta_list: Vec<f64>,
    /// Radius of the test state that starts the gradient flow.
    pub init_radius: f64,
    pub options: SolveOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsConfig {
    pub q: f64,
    pub omega: f64,
    pub t_final: f64,
    pub dt: Option<f64>,
    pub sample_every: usize,
    pub eps_list: Vec<f64>,
    pub modes: Vec<Perturbation>,
    pub sponge: Option<Sponge>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub out: PathBuf,
    pub workers: usize,
    pub seed: u64,
}

/// Validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    pub grid: GridConfig,
    pub hylomorphy: HylomorphyConfig,
    pub solver: SolverConfig,
    pub dynamics: DynamicsConfig,
    pub run: RunSection,
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn check_finite(field: &str, values: &[f64]) -> Result<(), ConfigError> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(invalid(field, "values must be finite"))
    }
}

fn check_nonnegative(field: &str, values: &[f64]) -> Result<(), ConfigError> {
    check_finite(field, values)?;
    if values.iter().all(|&x| x >= 0.0) {
        Ok(())
    } else {
        Err(invalid(field, "values must be nonnegative"))
    }
}

fn check_positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    /// Reads and validates a config file. Relative `run.out` paths resolve
    /// against the current directory.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&parse_raw(text)?)
    }

    fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        // [potential]
        let preset_name = raw.str("potential", "preset").unwrap_or("default");
        let coefficients = raw.list("potential", "coefficients")?.unwrap_or_default();
        let preset = Preset::from_name(preset_name, &coefficients)
            .map_err(|e| invalid("potential.preset", e.to_string()))?;
        let m = raw.f64("potential", "m")?.unwrap_or(1.0);
        check_positive("potential.m", m)?;
        let mut spec = PotentialSpec::new(m, preset).map_err(|e| invalid("potential.m", e.to_string()))?;
        if let Some(p) = raw.f64("potential", "growth_exponent")? {
            spec = spec
                .with_growth_exponent(p)
                .map_err(|e| invalid("potential.growth_exponent", e.to_string()))?;
        }
        let alpha_floor = raw.f64("potential", "alpha_floor")?.unwrap_or(0.25 * m);
        if !(alpha_floor >= 0.0 && alpha_floor < m) {
            return Err(invalid("potential.alpha_floor", format!("must lie in [0, m), got {alpha_floor}")));
        }
        let policy = match raw.str("potential", "alpha_policy").unwrap_or("min-ratio") {
            "min-ratio" => AlphaPolicy::min_ratio(alpha_floor),
            "max-threshold" => AlphaPolicy::MaxThreshold,
            other => {
                return Err(invalid(
                    "potential.alpha_policy",
                    format!("expected `min-ratio` or `max-threshold`, got `{other}`"),
                ))
            }
        };

        // [grid]
        let r_max = raw.f64("grid", "r_max")?.unwrap_or(40.0 / m);
        check_positive("grid.r_max", r_max)?;
        let n = raw.usize("grid", "n")?.unwrap_or(4000);
        if n < 3 {
            return Err(invalid("grid.n", format!("needs at least 3 nodes, got {n}")));
        }

        // [hylomorphy]
        let radii = raw
            .list("hylomorphy", "radii")?
            .unwrap_or_else(|| qball::hylomorphy::DEFAULT_R_LIST.to_vec());
        check_finite("hylomorphy.radii", &radii)?;
        if radii.is_empty() || radii.iter().any(|&r| r <= 0.0) {
            return Err(invalid("hylomorphy.radii", "needs at least one positive radius"));
        }
        let default_q = qball::hylomorphy::DEFAULT_CALIBRATION_Q.to_vec();
        let q_list = raw.list("hylomorphy", "q_list")?.unwrap_or_else(|| default_q.clone());
        check_nonnegative("hylomorphy.q_list", &q_list)?;
        if q_list.is_empty() {
            return Err(invalid("hylomorphy.q_list", "must not be empty"));
        }
        let calibration_q = raw.list("hylomorphy", "calibration_q")?.unwrap_or(default_q);
        check_nonnegative("hylomorphy.calibration_q", &calibration_q)?;
        if !calibration_q.iter().any(|&q| q > 0.0) {
            return Err(invalid("hylomorphy.calibration_q", "needs at least one positive coupling"));
        }

        // [solver]
        let q_values = match (raw.list("solver", "q")?, raw.list("solver", "q_range")?) {
            (Some(_), Some(_)) => {
                return Err(invalid("solver.q_range", "give either `q` or `q_range`, not both"))
            }
            (Some(q), None) => {
                check_nonnegative("solver.q", &q)?;
                if q.is_empty() {
                    return Err(invalid("solver.q", "must not be empty"));
                }
                q
            }
            (None, Some(range)) => {
                check_nonnegative("solver.q_range", &range)?;
                let &[lo, hi] = range.as_slice() else {
                    return Err(invalid("solver.q_range", "expects `lo, hi`"));
                };
                if lo > hi {
                    return Err(invalid("solver.q_range", format!("lower end {lo} exceeds upper end {hi}")));
                }
                let count = raw.usize("solver", "q_count")?.unwrap_or(if lo == hi { 1 } else { 2 });
                if count == 0 || (count == 1 && lo != hi) {
                    return Err(invalid("solver.q_count", "a proper range needs at least 2 points"));
                }
                if count == 1 {
                    vec![lo]
                } else {
                    (0..count)
                        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
                        .collect()
                }
            }
            (None, None) => vec![0.0, 0.02],
        };
        if raw.get("solver", "q_count").is_some() && raw.get("solver", "q_range").is_none() {
            return Err(invalid("solver.q_count", "only meaningful together with `q_range`"));
        }
        let mut q_values = q_values;
        q_values.sort_by(f64::total_cmp);
        q_values.dedup();
        let omega_list = raw
            .list("solver", "omega_list")?
            .unwrap_or_else(|| vec![0.5, 0.6, 0.7, 0.8, 0.9]);
        check_finite("solver.omega_list", &omega_list)?;
        let delta_list = raw.list("solver", "delta_list")?.unwrap_or_else(|| vec![1e-5, 1e-4]);
        check_finite("solver.delta_list", &delta_list)?;
        if delta_list.iter().any(|&d| d <= 0.0) {
            return Err(invalid("solver.delta_list", "penalty weights must be positive"));
        }
        let init_radius = raw.f64("solver", "init_radius")?.unwrap_or(10.0);
        check_positive("solver.init_radius", init_radius)?;
        if init_radius + 1.0 >= r_max {
            return Err(invalid("solver.init_radius", "test state must fit inside r_max − 1"));
        }
        let mut options = SolveOptions::default();
        if let Some(b) = raw.list("solver", "bracket")? {
            let &[lo, hi] = b.as_slice() else {
                return Err(invalid("solver.bracket", "expects `lo, hi`"));
            };
            options.bracket = Some((lo, hi));
        }
        if let Some(v) = raw.usize("solver", "scan_points")? {
            options.scan_points = v;
        }
        if let Some(v) = raw.f64("solver", "damping")? {
            options.damping = v;
        }
        if let Some(v) = raw.usize("solver", "max_iterations")? {
            options.max_iterations = v;
        }
        if let Some(v) = raw.f64("solver", "tolerance")? {
            options.tolerance = v;
        }
        if let Some(v) = raw.f64("solver", "tail_tolerance")? {
            options.tail_tolerance = v;
        }
        if let Some(v) = raw.usize("solver", "flow_max_iterations")? {
            options.flow.max_iterations = v;
        }
        if let Some(v) = raw.f64("solver", "flow_gradient_tolerance")? {
            options.flow.gradient_tolerance = v;
        }
        if let Some(v) = raw.f64("solver", "flow_collapse_fraction")? {
            options.flow.collapse_fraction = v;
        }
        if let Some(v) = raw.f64("solver", "flow_tail_tolerance")? {
            options.flow.tail_tolerance = v;
        }
        options.validate().map_err(|e| invalid("solver", e.to_string()))?;

        // [dynamics]
        let dq = raw.f64("dynamics", "q")?.unwrap_or(0.02);
        check_nonnegative("dynamics.q", &[dq])?;
        let omega = raw.f64("dynamics", "omega")?.unwrap_or(0.8 * m);
        if !(omega > 0.0 && omega < m) {
            return Err(invalid("dynamics.omega", format!("must lie in (0, m), got {omega}")));
        }
        let t_final = raw.f64("dynamics", "t_final")?.unwrap_or(200.0 / m);
        check_positive("dynamics.t_final", t_final)?;
        let dr = r_max / (n - 1) as f64;
        let dt = raw.f64("dynamics", "dt")?;
        if let Some(dt) = dt {
            if !(dt > 0.0 && dt <= 0.5 * dr) {
                return Err(invalid("dynamics.dt", format!("must satisfy 0 < dt ≤ 0.5·dr = {}", 0.5 * dr)));
            }
        }
        let sample_every = raw.usize("dynamics", "sample_every")?.unwrap_or(100);
        if sample_every == 0 {
            return Err(invalid("dynamics.sample_every", "must be positive"));
        }
        let eps_list = raw.list("dynamics", "eps_list")?.unwrap_or_else(|| vec![0.0, 0.01]);
        check_nonnegative("dynamics.eps_list", &eps_list)?;
        if eps_list.is_empty() {
            return Err(invalid("dynamics.eps_list", "must not be empty"));
        }
        let modes = match raw.words("dynamics", "modes") {
            None => Perturbation::ALL.to_vec(),
            Some(words) => {
                let mut modes = Vec::new();
                for w in &words {
                    let mode = Perturbation::from_name(w).ok_or_else(|| {
                        invalid("dynamics.modes", format!("unknown mode `{w}` (amplitude, velocity, noise)"))
                    })?;
                    if !modes.contains(&mode) {
                        modes.push(mode);
                    }
                }
                if modes.is_empty() {
                    return Err(invalid("dynamics.modes", "must name at least one mode"));
                }
                modes
            }
        };
        let sponge = if raw.bool("dynamics", "sponge")?.unwrap_or(true) {
            let d = Sponge::default();
            let s = Sponge {
                fraction: raw.f64("dynamics", "sponge_fraction")?.unwrap_or(d.fraction),
                strength: raw.f64("dynamics", "sponge_strength")?.unwrap_or(d.strength),
            };
            if !(s.fraction > 0.0 && s.fraction < 1.0) {
                return Err(invalid("dynamics.sponge_fraction", "must lie in (0, 1)"));
            }
            if !(s.strength >= 0.0 && s.strength.is_finite()) {
                return Err(invalid("dynamics.sponge_strength", "must be nonnegative"));
            }
            Some(s)
        } else {
            None
        };

        // [run]
        let out = PathBuf::from(raw.str("run", "out").unwrap_or("qball-out"));
        let workers = raw.usize("run", "workers")?.unwrap_or(1);
        let seed = raw.u64("run", "seed")?.unwrap_or(0);
        let config = RunConfig {
            potential: PotentialConfig {
                spec,
                policy,
                alpha_floor,
            },
            grid: GridConfig { r_max, n },
            hylomorphy: HylomorphyConfig {
                radii,
                q_list,
                calibration_q,
            },
            solver: SolverConfig {
                q_values,
                omega_list,
                delta_list,
                init_radius,
                options,
            },
            dynamics: DynamicsConfig {
                q: dq,
                omega,
                t_final,
                dt,
                sample_every,
                eps_list,
                modes,
                sponge,
            },
            run: RunSection { out, workers, seed },
        };
        config.validate_run()?;
        Ok(config)
    }

    /// Checks the run section; also used after command-line overrides.
    pub fn validate_run(&self) -> Result<(), ConfigError> {
        if self.run.workers == 0 {
            return Err(invalid("run.workers", "must be at least 1"));
        }
        if self.run.out.as_os_str().is_empty() {
            return Err(invalid("run.out", "must not be empty"));
        }
        let parent = match self.run.out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        if !parent.is_dir() {
            return Err(invalid(
                "run.out",
                format!("parent directory {} does not exist", parent.display()),
            ));
        }
        if self.run.out.exists() && !self.run.out.is_dir() {
            return Err(invalid("run.out", "exists and is not a directory"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "[potential]\npreset = default\n[grid]\nr_max = 40\nn = 4000\n";

    #[test]
    fn minimal_file_fills_defaults() {
        let c = RunConfig::from_text(MINIMAL).unwrap();
        assert_eq!(c.potential.spec, PotentialSpec::default());
        assert_eq!(c.grid, GridConfig { r_max: 40.0, n: 4000 });
        assert_eq!(c.solver.q_values, vec![0.0, 0.02]);
        assert_eq!(c.solver.omega_list, vec![0.5, 0.6, 0.7, 0.8, 0.9]);
        assert_eq!(c.dynamics.modes.len(), 3);
        assert_eq!(c.run.workers, 1);
        assert_eq!(c.run.seed, 0);
        assert_eq!(c.hylomorphy.radii, vec![2.0, 5.0, 10.0, 20.0, 40.0]);
    }

    #[test]
    fn empty_file_is_the_default_configuration() {
        assert_eq!(RunConfig::from_text("").unwrap(), RunConfig::from_text(MINIMAL).unwrap());
    }

    #[test]
    fn reversed_q_range_names_the_field() {
        let text = format!("{MINIMAL}[solver]\nq_range = 0.2, 0.1\n");
        match RunConfig::from_text(&text) {
            Err(ConfigError::Validation { field, .. }) => assert_eq!(field, "solver.q_range"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_position() {
        let text = format!("{MINIMAL}[solver]\n  omega_typo = 0.8\n");
        match RunConfig::from_text(&text) {
            Err(ConfigError::UnknownKey {
                line,
                column,
                section,
                key,
            }) => {
                assert_eq!((line, column), (7, 3));
                assert_eq!(section, "solver");
                assert_eq!(key, "omega_typo");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn q_range_expands_evenly() {
        let text = "[solver]\nq_range = 0, 0.01\nq_count = 3\n";
        let c = RunConfig::from_text(text).unwrap();
        assert_eq!(c.solver.q_values, vec![0.0, 0.005, 0.01]);
    }

    #[test]
    fn parse_errors_carry_line_and_column() {
        let cases = [
            ("[grid\n", 1, 1),
            ("[grid]\nr_max 40\n", 2, 1),
            ("[grid]\nr_max = forty\n", 2, 9),
            ("r_max = 40\n", 1, 1),
            ("[nowhere]\n", 1, 2),
            ("[grid]\nn = 10\nn = 20\n", 3, 1),
        ];
        for (text, l, c) in cases {
            match parse_raw(text).and_then(|r| RunConfig::from_raw(&r).map(|_| r)) {
                Err(ConfigError::Parse { line, column, .. }) => {
                    assert_eq!((line, column), (l, c), "{text:?}")
                }
                other => panic!("{text:?}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# header\n\n[grid]  # trailing\nn = 101 # nodes\n";
        assert_eq!(RunConfig::from_text(text).unwrap().grid.n, 101);
    }

    #[test]
    fn field_specific_validation() {
        let cases = [
            ("[run]\nworkers = 0\n", "run.workers"),
            ("[potential]\npreset = quartic\n", "potential.preset"),
            ("[dynamics]\ndt = 1\n", "dynamics.dt"),
            ("[dynamics]\nmodes = amplitude, kick\n", "dynamics.modes"),
            ("[solver]\nq = 0.1\nq_range = 0, 1\n", "solver.q_range"),
            ("[solver]\ndelta_list = 0\n", "solver.delta_list"),
            ("[dynamics]\nomega = 1.5\n", "dynamics.omega"),
            ("[run]\nout = /nonexistent/dir/out\n", "run.out"),
        ];
        for (text, expected) in cases {
            match RunConfig::from_text(text) {
                Err(ConfigError::Validation { field, .. }) => assert_eq!(field, expected, "{text:?}"),
                other => panic!("{text:?}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn out_of_window_frequency_is_allowed_in_sweeps() {
        let c = RunConfig::from_text("[solver]\nomega_list = 0.8, 1.5\n").unwrap();
        assert_eq!(c.solver.omega_list, vec![0.8, 1.5]);
    }

    proptest! {
        #[test]
        fn parser_never_panics(text in "(\\[[a-z]{0,10}\\]?\n|[a-z_ ]{0,12}=?[0-9a-z., -]{0,12}\n|#.{0,5}\n){0,8}") {
            let _ = RunConfig::from_text(&text);
        }
    }
}
