//! Run configuration: command-line flags merged over an optional key-value file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

/// Flag values as given; `None` means "not given".
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub types: Option<String>,
    pub p: Option<String>,
    pub m: Option<String>,
    pub seed: Option<String>,
    pub samples: Option<String>,
    pub budget: Option<String>,
    pub size: Option<String>,
    pub alpha: Option<String>,
    pub f_degree: Option<String>,
    pub q: Option<String>,
    pub group: Option<String>,
    pub degree: Option<String>,
    pub tables: Option<String>,
    pub model: Option<String>,
    pub max_precision: Option<String>,
    pub exhaustive: Option<String>,
    pub report: Option<String>,
    pub data_dir: Option<String>,
}

const KEYS: [&str; 18] = [
    "types",
    "p",
    "m",
    "seed",
    "samples",
    "budget",
    "size",
    "alpha",
    "f-degree",
    "q",
    "group",
    "degree",
    "tables",
    "model",
    "max-precision",
    "exhaustive",
    "report",
    "data-dir",
];

impl Flags {
    fn slot(&mut self, key: &str) -> Option<&mut Option<String>> {
        Some(match key {
            "types" | "type" => &mut self.types,
            "p" => &mut self.p,
            "m" => &mut self.m,
            "seed" => &mut self.seed,
            "samples" => &mut self.samples,
            "budget" => &mut self.budget,
            "size" => &mut self.size,
            "alpha" => &mut self.alpha,
            "f-degree" => &mut self.f_degree,
            "q" => &mut self.q,
            "group" => &mut self.group,
            "degree" => &mut self.degree,
            "tables" => &mut self.tables,
            "model" => &mut self.model,
            "max-precision" => &mut self.max_precision,
            "exhaustive" => &mut self.exhaustive,
            "report" => &mut self.report,
            "data-dir" => &mut self.data_dir,
            _ => return None,
        })
    }

    /// Fill unset flags from `key = value` lines; `#` starts a comment.
    pub fn merge_file_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| ConfigError(format!("config line {}: expected key = value", n + 1)))?;
            let key = k.trim().replace('_', "-");
            let slot = self.slot(&key).ok_or_else(|| {
                ConfigError(format!("config line {}: unknown key {key:?}; known keys: {}", n + 1, KEYS.join(", ")))
            })?;
            if slot.is_none() {
                *slot = Some(v.trim().to_string());
            }
        }
        Ok(())
    }

    /// Flags in the key-value file format.
    #[cfg(test)]
    pub fn to_file_text(&self) -> String {
        let mut copy = self.clone();
        let mut out = String::new();
        for key in KEYS {
            if let Some(Some(v)) = copy.slot(key).map(|s| s.clone()) {
                out.push_str(&format!("{key} = {v}\n"));
            }
        }
        out
    }
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Vec<String>,
    pub types: Vec<String>,
    pub primes: Vec<u64>,
    pub precisions: Vec<u32>,
    pub seed: u64,
    pub samples: usize,
    pub budget: usize,
    pub size: usize,
    pub alpha: Option<usize>,
    pub f_degree: usize,
    pub q: Option<u64>,
    pub group: String,
    pub degree: usize,
    pub tables: PathBuf,
    pub model: Option<PathBuf>,
    pub max_precision: u32,
    pub exhaustive: bool,
    pub report: PathBuf,
    pub data_dir: PathBuf,
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    v.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| ConfigError(format!("{key}: cannot parse {s:?}"))))
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &Option<String>, default: T) -> Result<T, ConfigError> {
    match v {
        None => Ok(default),
        Some(s) => s.trim().parse::<T>().map_err(|_| ConfigError(format!("{key}: cannot parse {s:?}"))),
    }
}

fn parse_opt<T: std::str::FromStr>(key: &str, v: &Option<String>) -> Result<Option<T>, ConfigError> {
    v.as_ref().map(|s| s.trim().parse::<T>().map_err(|_| ConfigError(format!("{key}: cannot parse {s:?}")))).transpose()
}

fn parse_bool(key: &str, v: &Option<String>) -> Result<bool, ConfigError> {
    match v.as_deref().map(str::trim) {
        None | Some("false") | Some("0") | Some("no") => Ok(false),
        Some("true") | Some("1") | Some("yes") | Some("") => Ok(true),
        Some(s) => Err(ConfigError(format!("{key}: expected true or false, got {s:?}"))),
    }
}

/// Per-command grid defaults.
struct Defaults {
    types: &'static str,
    primes: &'static str,
    precisions: &'static str,
    samples: usize,
}

fn defaults(command: &[String]) -> Defaults {
    let c: Vec<&str> = command.iter().map(String::as_str).collect();
    match c.as_slice() {
        ["check", "matrix-identity"] => Defaults { types: "", primes: "5,7,13", precisions: "3,4,5", samples: 1000 },
        ["check", _] | ["spaces"] => Defaults { types: "A1,A2,B2,G2", primes: "5,7,13", precisions: "3,4", samples: 1 },
        ["decompose"] | ["examples", "sl2"] => {
            Defaults { types: "A1,A2,A3,B2,G2,D4", primes: "13,17", precisions: "1", samples: 1 }
        }
        ["examples", "ntorus"] => Defaults { types: "A2,B2,G2", primes: "13", precisions: "1", samples: 1 },
        ["examples", "f4"] => Defaults { types: "F4", primes: "31", precisions: "1", samples: 1 },
        ["oddness"] => Defaults { types: "A1,A2,A3,B2,G2,D4,F4", primes: "13", precisions: "1", samples: 1 },
        ["levi-bound"] => Defaults { types: "A1,A2,B2", primes: "31", precisions: "1", samples: 200 },
        ["cohomology"] => Defaults { types: "", primes: "5", precisions: "1", samples: 1 },
        _ => Defaults { types: "A1", primes: "13", precisions: "3", samples: 1 },
    }
}

impl RunConfig {
    pub fn resolve(command: Vec<String>, flags: &Flags) -> Result<Self, ConfigError> {
        let d = defaults(&command);
        let data_dir = PathBuf::from(flags.data_dir.clone().unwrap_or_else(|| "data".into()));
        let types: Vec<String> = parse_list("types", flags.types.as_deref().unwrap_or(d.types))?;
        let primes: Vec<u64> = parse_list("p", flags.p.as_deref().unwrap_or(d.primes))?;
        let precisions: Vec<u32> = parse_list("m", flags.m.as_deref().unwrap_or(d.precisions))?;
        if primes.is_empty() {
            return Err(ConfigError("at least one prime is required".into()));
        }
        let tables = flags.tables.as_ref().map(PathBuf::from).unwrap_or_else(|| data_dir.join("atlas"));
        let model = flags.model.as_ref().map(|m| resolve_model(m, &data_dir));
        Ok(RunConfig {
            types,
            primes,
            precisions,
            seed: parse_one("seed", &flags.seed, 0)?,
            samples: parse_one("samples", &flags.samples, d.samples)?,
            budget: parse_one("budget", &flags.budget, 2000)?,
            size: parse_one("size", &flags.size, 8)?,
            alpha: parse_opt("alpha", &flags.alpha)?,
            f_degree: parse_one("f-degree", &flags.f_degree, 1)?,
            q: parse_opt("q", &flags.q)?,
            group: flags.group.clone().unwrap_or_else(|| "cyclic".into()),
            degree: parse_one("degree", &flags.degree, 1)?,
            tables,
            model,
            max_precision: parse_one("max-precision", &flags.max_precision, 5)?,
            exhaustive: parse_bool("exhaustive", &flags.exhaustive)?,
            report: PathBuf::from(flags.report.clone().unwrap_or_else(|| "chevlift-report.json".into())),
            data_dir,
            command,
        })
    }
}

/// A model path as given, or else under the data directory's models folder.
fn resolve_model(m: &str, data_dir: &Path) -> PathBuf {
    let direct = PathBuf::from(m);
    if direct.exists() {
        return direct;
    }
    let under = data_dir.join("models").join(m);
    if under.exists() {
        under
    } else {
        direct
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_fills_only_unset_flags() {
        let mut f = Flags { p: Some("7".into()), ..Default::default() };
        f.merge_file_text("p = 5\nseed = 9 # comment\n\nmax_precision = 4\n").unwrap();
        assert_eq!(f.p.as_deref(), Some("7"));
        assert_eq!(f.seed.as_deref(), Some("9"));
        assert_eq!(f.max_precision.as_deref(), Some("4"));
        assert!(f.merge_file_text("colour = red").is_err());
        assert!(f.merge_file_text("no equals sign").is_err());
    }

    #[test]
    fn flags_round_trip_through_the_file_format() {
        let f =
            Flags { types: Some("A1,B2".into()), seed: Some("3".into()), exhaustive: Some("true".into()), ..Default::default() };
        let mut back = Flags::default();
        back.merge_file_text(&f.to_file_text()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cmd = vec!["check".to_string(), "stability".to_string()];
        let c = RunConfig::resolve(cmd, &Flags::default()).unwrap();
        assert_eq!(c.types, vec!["A1", "A2", "B2", "G2"]);
        let json = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn bad_values_are_config_errors() {
        let f = Flags { p: Some("five".into()), ..Default::default() };
        assert!(RunConfig::resolve(vec!["spaces".into()], &f).is_err());
        let f = Flags { exhaustive: Some("maybe".into()), ..Default::default() };
        assert!(RunConfig::resolve(vec!["spaces".into()], &f).is_err());
    }
}
