//! Flat `key=value` configuration with per-subcommand `[section]` overrides.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use viscowave::data::{DataSpectrum, V2Spec};
use viscowave::experiments::{ExperimentConfig, ModeSolver};
use viscowave::fit::log_space;
use viscowave::spectrum::{Equation, FrequencyGrid, Zones};

use crate::error::CliError;

/// Keys accepted in a config file, globally or inside a section.
pub const KNOWN_KEYS: &[&str] = &[
    "gamma",
    "tau",
    "n",
    "s",
    "seed",
    "equation",
    "solver",
    "allow_outside_hypotheses",
    "data.u0",
    "data.u1",
    "data.v2",
    "grid.t",
    "grid.r",
    "zones.eps",
    "zones.n",
    "fit.window",
    "tau_list",
    "probe_time",
    "energy_times",
    "history_points",
    "oracle.modes",
    "oracle.t_max",
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// Effective key-value pairs for one subcommand: global entries with the
/// matching section applied on top.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
}

impl Config {
    pub fn parse(text: &str, section: &str) -> Result<Self, CliError> {
        let mut globals = BTreeMap::new();
        let mut overrides = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| CliError::Syntax {
                    line,
                    msg: format!("unterminated section header `{body}`"),
                })?;
                let name = name.trim();
                if name.is_empty() {
                    return Err(CliError::Syntax { line, msg: "empty section name".into() });
                }
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| CliError::Syntax {
                line,
                msg: format!("expected `key=value`, got `{body}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Key {
                    line,
                    key: key.to_string(),
                    msg: "unknown key".into(),
                });
            }
            let entry = Entry { value: value.to_string(), line };
            match current.as_deref() {
                None => {
                    globals.insert(key.to_string(), entry);
                }
                Some(s) if s == section => {
                    overrides.insert(key.to_string(), entry);
                }
                Some(_) => {}
            }
        }
        globals.extend(overrides);
        Ok(Self { entries: globals })
    }

    pub fn load(path: &Path, section: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, section)
    }

    /// `(key, value)` pairs in key order, for metadata echo.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e.value.as_str()))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.entries
            .get(key)
            .map(|e| {
                e.value.parse::<T>().map_err(|err| CliError::Key {
                    line: e.line,
                    key: key.to_string(),
                    msg: err.to_string(),
                })
            })
            .transpose()
    }

    fn get_with<T>(&self, key: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, CliError> {
        self.entries
            .get(key)
            .map(|e| {
                f(&e.value).map_err(|msg| CliError::Key {
                    line: e.line,
                    key: key.to_string(),
                    msg,
                })
            })
            .transpose()
    }

    fn key_error(&self, key: &str, msg: String) -> CliError {
        CliError::Key {
            line: self.entries.get(key).map_or(0, |e| e.line),
            key: key.to_string(),
            msg,
        }
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        Ok(self.get("seed")?.unwrap_or(0))
    }

    pub fn equation(&self) -> Result<Equation, CliError> {
        self.get_with("equation", |v| match v {
            "vdw" => Ok(Equation::Vdw),
            "mgt" => Ok(Equation::Mgt),
            other => Err(format!("expected `vdw` or `mgt`, got `{other}`")),
        })
        .map(|e| e.unwrap_or(Equation::Vdw))
    }

    pub fn oracle_modes(&self) -> Result<usize, CliError> {
        Ok(self.get("oracle.modes")?.unwrap_or(50))
    }

    pub fn oracle_t_max(&self) -> Result<f64, CliError> {
        Ok(self.get("oracle.t_max")?.unwrap_or(20.0))
    }

    /// Builds the experiment configuration over the library defaults.
    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(g) = self.get("gamma")? {
            cfg.params.gamma = g;
        }
        cfg.params.tau = self.get("tau")?;
        cfg.params.validate().map_err(|e| self.key_error("gamma", e.to_string()))?;
        if let Some(n) = self.get("n")? {
            cfg.n = n;
        }
        if let Some(s) = self.get("s")? {
            cfg.s = s;
        }
        if let Some(d) = self.get::<DataSpectrum>("data.u0")? {
            cfg.u0 = d;
        }
        if let Some(d) = self.get::<DataSpectrum>("data.u1")? {
            cfg.u1 = d;
        }
        if let Some(d) = self.get::<V2Spec>("data.v2")? {
            cfg.v2 = d;
        }
        if let Some(t) = self.get_with("grid.t", parse_points)? {
            cfg.t_grid = t;
        }
        let zones = Zones::new(
            self.get("zones.eps")?.unwrap_or(cfg.r_grid.eps_cut),
            self.get("zones.n")?.unwrap_or(cfg.r_grid.n_cut),
        )
        .map_err(|e| self.key_error("zones.eps", e.to_string()))?;
        if let Some(nodes) = self.get_with("grid.r", parse_points)? {
            cfg.r_grid = FrequencyGrid::from_nodes(nodes, zones).map_err(|e| self.key_error("grid.r", e.to_string()))?;
        }
        cfg.set_zones(zones);
        if let Some(w) = self.get_with("fit.window", |v| {
            let p = parse_list(v)?;
            match p.as_slice() {
                [lo, hi] => Ok((*lo, *hi)),
                _ => Err(format!("expected `lo,hi`, got `{v}`")),
            }
        })? {
            cfg.fit_window = w;
        }
        if let Some(t) = self.get_with("tau_list", parse_points)? {
            cfg.tau_list = t;
        }
        if let Some(t) = self.get("probe_time")? {
            cfg.probe_time = t;
        }
        if let Some(t) = self.get_with("energy_times", parse_points)? {
            cfg.energy_times = t;
        }
        if let Some(h) = self.get("history_points")? {
            cfg.history_points = h;
        }
        if let Some(s) = self.get_with("solver", |v| match v {
            "kernel" => Ok(ModeSolver::Kernel),
            "oracle" => Ok(ModeSolver::Oracle),
            other => Err(format!("expected `kernel` or `oracle`, got `{other}`")),
        })? {
            cfg.solver = s;
        }
        if let Some(b) = self.get("allow_outside_hypotheses")? {
            cfg.allow_outside_hypotheses = b;
        }
        cfg.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
        Ok(cfg)
    }
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{}`: {e}", p.trim())))
        .collect()
}

/// `log:lo,hi,count` or an explicit comma-separated list.
fn parse_points(v: &str) -> Result<Vec<f64>, String> {
    if let Some(rest) = v.strip_prefix("log:") {
        let p = parse_list(rest)?;
        return match p.as_slice() {
            [lo, hi, count] if *lo > 0.0 && hi > lo && count.fract() == 0.0 && *count >= 2.0 => {
                Ok(log_space(*lo, *hi, *count as usize))
            }
            _ => Err(format!("expected `log:lo,hi,count` with 0 < lo < hi and count >= 2, got `{v}`")),
        };
    }
    parse_list(v)
}
