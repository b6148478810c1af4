use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tolerance {
    /// Reported without a pass/fail judgement.
    ReportOnly,
    AtMost { bound: f64 },
    AtLeast { bound: f64 },
    Interval { lo: f64, hi: f64 },
    /// `|value - target| <= abs`
    Absolute { target: f64, abs: f64 },
    /// `|value - target| <= rel |target|`
    Relative { target: f64, rel: f64 },
    /// `|value - target| <= k * std_error`
    StdErrors { target: f64, k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub tolerance: Tolerance,
    pub pass: Option<bool>,
    /// How the value was obtained, e.g. `monte-carlo` or `closed-form`.
    pub source: &'static str,
}

impl Metric {
    pub fn new(name: impl Into<String>, value: f64, std_error: Option<f64>, tolerance: Tolerance, source: &'static str) -> Self {
        let pass = match tolerance {
            Tolerance::ReportOnly => None,
            Tolerance::AtMost { bound } => Some(value <= bound),
            Tolerance::AtLeast { bound } => Some(value >= bound),
            Tolerance::Interval { lo, hi } => Some(lo <= value && value <= hi),
            Tolerance::Absolute { target, abs } => Some((value - target).abs() <= abs),
            Tolerance::Relative { target, rel } => Some((value - target).abs() <= rel * target.abs()),
            Tolerance::StdErrors { target, k } => Some((value - target).abs() <= k * std_error.unwrap_or(0.0)),
        };
        Metric { name: name.into(), value, std_error, tolerance, pass, source }
    }

    pub fn info(name: impl Into<String>, value: f64, source: &'static str) -> Self {
        Metric::new(name, value, None, Tolerance::ReportOnly, source)
    }
}

/// A CSV side table written next to the envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub content: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Override {
    pub key: String,
    pub file_value: Option<String>,
    pub flag_value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub experiment: String,
    pub seed: u64,
    /// `config`, `flag` or `fresh`.
    pub seed_source: &'static str,
    pub replicates: usize,
    pub params: BTreeMap<String, toml::Value>,
    pub overrides: Vec<Override>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Runtime {
    pub workers: Option<usize>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEnvelope {
    pub config: ConfigEcho,
    pub metrics: Vec<Metric>,
    pub pass: bool,
    pub formulas: Vec<String>,
    pub tables: Vec<String>,
    pub runtime: Runtime,
}

impl ReportEnvelope {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serializes") + "\n"
    }

    /// One row per metric; config and runtime go in leading `#` comments.
    pub fn to_csv(&self) -> Result<String, String> {
        let mut out = format!(
            "# experiment={} seed={} replicates={} pass={} wall_time_s={}\n",
            self.config.experiment, self.config.seed, self.config.replicates, self.pass, self.runtime.wall_time_s
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| e.to_string();
        w.write_record(["metric", "value", "std_error", "tolerance", "pass", "source"]).map_err(err)?;
        for m in &self.metrics {
            let tol = serde_json::to_string(&m.tolerance).unwrap();
            w.write_record([
                m.name.clone(),
                m.value.to_string(),
                m.std_error.map(|s| s.to_string()).unwrap_or_default(),
                tol,
                m.pass.map(|p| p.to_string()).unwrap_or_default(),
                m.source.to_string(),
            ])
            .map_err(err)?;
        }
        out.push_str(&String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).unwrap());
        Ok(out)
    }
}

/// Renders rows of numbers under `header`.
pub fn numeric_table(name: &str, header: &[&str], rows: &[Vec<f64>]) -> Table {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(r.iter().map(f64::to_string)).unwrap();
    }
    Table { name: name.to_string(), content: w.into_inner().unwrap() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_judgement() {
        assert_eq!(Metric::new("a", 1.0, None, Tolerance::AtMost { bound: 1.0 }, "x").pass, Some(true));
        assert_eq!(Metric::new("a", 1.1, Some(0.01), Tolerance::StdErrors { target: 1.0, k: 3.0 }, "x").pass, Some(false));
        assert_eq!(Metric::new("a", 0.95, None, Tolerance::Interval { lo: 0.94, hi: 0.96 }, "x").pass, Some(true));
        assert_eq!(Metric::info("a", 3.0, "x").pass, None);
        assert_eq!(Metric::new("a", 1.015, None, Tolerance::Relative { target: 1.0, rel: 0.02 }, "x").pass, Some(true));
    }

    #[test]
    fn table_rendering() {
        let t = numeric_table("t", &["a", "b"], &[vec![1.0, 2.5]]);
        assert_eq!(String::from_utf8(t.content).unwrap(), "a,b\n1,2.5\n");
    }
}
