//! Experiment configuration: a small TOML file plus command-line overrides.
//!
//! ```toml
//! experiment = "bs-price"
//! seed = 42
//! replicates = 1000000   # optional, per-experiment default otherwise
//! output = "runs/bs"     # optional directory
//! format = "json"        # optional, json | csv
//!
//! [params]
//! spot = 100.0
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use toml::Value;

use crate::experiments::{find, Experiment};
use crate::params::{parse_override, Params};
use crate::report::Override;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("key 'format': expected \"json\" or \"csv\", got \"{s}\"")),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Values given on the command line; each wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Flags {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub fresh_seed: bool,
    pub replicates: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub sets: Vec<String>,
}

#[derive(Debug, Default)]
struct FileConfig {
    experiment: Option<String>,
    seed: Option<u64>,
    replicates: Option<usize>,
    output: Option<String>,
    format: Option<Format>,
    params: BTreeMap<String, Value>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: &'static Experiment,
    pub seed: u64,
    pub seed_source: &'static str,
    pub replicates: usize,
    pub params: Params,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub overrides: Vec<Override>,
}

fn nonneg_int(key: &str, v: &Value) -> Result<u64, String> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        other => Err(format!("key '{key}': expected a nonnegative integer, got {other}")),
    }
}

fn string(key: &str, v: &Value) -> Result<String, String> {
    v.as_str().map(str::to_string).ok_or_else(|| format!("key '{key}': expected a string, got {v}"))
}

fn parse_file(text: &str) -> Result<FileConfig, String> {
    let table: toml::Table = toml::from_str(text).map_err(|e| format!("malformed config: {}", e.message()))?;
    let mut cfg = FileConfig::default();
    for (key, v) in table {
        match key.as_str() {
            "experiment" => cfg.experiment = Some(string(&key, &v)?),
            "seed" => cfg.seed = Some(nonneg_int(&key, &v)?),
            "replicates" => cfg.replicates = Some(nonneg_int(&key, &v)? as usize),
            "output" => cfg.output = Some(string(&key, &v)?),
            "format" => cfg.format = Some(Format::parse(&string(&key, &v)?)?),
            "params" => match v {
                Value::Table(t) => cfg.params = t.into_iter().collect(),
                other => return Err(format!("key 'params': expected a table, got {other}")),
            },
            other => {
                return Err(format!(
                    "unknown key '{other}' in config (accepted: experiment, seed, replicates, output, format, params)"
                ))
            }
        }
    }
    Ok(cfg)
}

fn fresh_seed() -> u64 {
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0) as u64;
    // splitmix finalizer so nearby clocks give unrelated seeds
    let mut z = nanos.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Merges an optional config file with flags. Flags win; every flag that
/// replaced a file value is recorded.
pub fn parse_config(text: Option<&str>, flags: &Flags) -> Result<ExperimentConfig, String> {
    let file = match text {
        Some(t) => parse_file(t)?,
        None => FileConfig::default(),
    };
    let mut overrides = Vec::new();
    let mut note = |key: &str, file_value: Option<String>, flag_value: String| {
        overrides.push(Override { key: key.to_string(), file_value, flag_value });
    };

    let tag = match (&flags.experiment, &file.experiment) {
        (Some(f), old) => {
            note("experiment", old.clone(), f.clone());
            f.clone()
        }
        (None, Some(t)) => t.clone(),
        (None, None) => return Err("missing required key 'experiment'".into()),
    };
    let experiment = find(&tag).ok_or_else(|| format!("unknown experiment '{tag}' (see list-experiments)"))?;

    let (seed, seed_source) = if flags.fresh_seed {
        let s = fresh_seed();
        note("seed", file.seed.map(|v| v.to_string()), format!("{s} (fresh)"));
        (s, "fresh")
    } else if let Some(s) = flags.seed {
        note("seed", file.seed.map(|v| v.to_string()), s.to_string());
        (s, "flag")
    } else if let Some(s) = file.seed {
        (s, "config")
    } else {
        return Err("missing required key 'seed' (set it in the config or pass --seed / --fresh-seed)".into());
    };

    let replicates = match flags.replicates {
        Some(r) => {
            note("replicates", file.replicates.map(|v| v.to_string()), r.to_string());
            r
        }
        None => file.replicates.unwrap_or(experiment.replicates),
    };
    if replicates == 0 {
        return Err("key 'replicates': must be at least 1".into());
    }

    let output = match &flags.out {
        Some(p) => {
            note("output", file.output.clone(), p.display().to_string());
            Some(p.clone())
        }
        None => file.output.as_ref().map(PathBuf::from),
    };
    let format = match flags.format {
        Some(f) => {
            note("format", file.format.map(|f| f.name().to_string()), f.name().to_string());
            f
        }
        None => file.format.unwrap_or(Format::Json),
    };

    let mut given = file.params.clone();
    for s in &flags.sets {
        let (key, value) = parse_override(s)?;
        note(&format!("params.{key}"), file.params.get(&key).map(|v| v.to_string()), value.to_string());
        given.insert(key, value);
    }
    let params = Params::resolve(experiment.params, &given).map_err(|e| format!("{tag}: {e}"))?;

    Ok(ExperimentConfig { experiment, seed, seed_source, replicates, params, output, format, overrides })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BS: &str = "experiment = \"bs-price\"\nseed = 42\n[params]\nspot = 100.0\nstrike = 100\n";

    #[test]
    fn minimal_bs_config() {
        let c = parse_config(Some(BS), &Flags::default()).unwrap();
        assert_eq!(c.experiment.tag, "bs-price");
        assert_eq!((c.seed, c.seed_source), (42, "config"));
        assert_eq!(c.params.num("strike"), 100.0);
        assert_eq!(c.replicates, c.experiment.replicates);
        assert!(c.overrides.is_empty());
    }

    #[test]
    fn missing_seed_is_named() {
        let e = parse_config(Some("experiment = \"bs-price\"\n"), &Flags::default()).unwrap_err();
        assert!(e.contains("'seed'"), "{e}");
        let flags = Flags { fresh_seed: true, ..Flags::default() };
        let c = parse_config(Some("experiment = \"bs-price\"\n"), &flags).unwrap();
        assert_eq!(c.seed_source, "fresh");
    }

    #[test]
    fn distinct_errors_name_the_key() {
        let e = parse_config(Some("experiment = \"nope\"\nseed = 1\n"), &Flags::default()).unwrap_err();
        assert!(e.contains("unknown experiment 'nope'"));
        let e = parse_config(Some("experiment = \"bs-price\"\nseed = 1\ncolor = 3\n"), &Flags::default()).unwrap_err();
        assert!(e.contains("unknown key 'color'"));
        let e = parse_config(Some("experiment = \"bs-price\"\nseed = -4\n"), &Flags::default()).unwrap_err();
        assert!(e.contains("key 'seed'"));
        let e = parse_config(Some("experiment = \"bs-price\"\nseed = 1\n[params]\nspot = \"high\"\n"), &Flags::default())
            .unwrap_err();
        assert!(e.contains("parameter 'spot'"), "{e}");
        let e = parse_config(Some("experiment = \"bs-price\"\nseed = 1\n[params]\nspott = 1\n"), &Flags::default())
            .unwrap_err();
        assert!(e.contains("unknown parameter 'spott'"), "{e}");
    }

    #[test]
    fn flags_win_and_are_recorded() {
        let flags = Flags { seed: Some(7), sets: vec!["spot=120".into()], ..Flags::default() };
        let c = parse_config(Some(BS), &flags).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.params.num("spot"), 120.0);
        assert_eq!(c.overrides.len(), 2);
        assert_eq!(c.overrides[1].key, "params.spot");
        assert_eq!(c.overrides[1].file_value.as_deref(), Some("100.0"));
    }
}
