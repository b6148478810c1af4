//! Declared experiment parameters. Every key an experiment reads is listed
//! with a default whose shape fixes the accepted type, so typos and
//! malformed values are caught before anything runs.

use std::collections::BTreeMap;

use toml::Value;

#[derive(Debug, Clone, Copy)]
pub enum Default {
    Num(f64),
    Int(u64),
    Text(&'static str),
    Nums(&'static [f64]),
    Ints(&'static [u64]),
    /// Optional file path; absent unless given.
    Path,
}

pub type Decl = (&'static str, Default);

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    values: BTreeMap<String, Value>,
}

fn describe(v: &Value) -> String {
    match v {
        Value::String(s) => format!("\"{s}\""),
        other => other.to_string(),
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) if x.is_finite() => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn check(key: &str, kind: Default, v: &Value) -> Result<Value, String> {
    let bad = |want: &str| Err(format!("parameter '{key}': expected {want}, got {}", describe(v)));
    match kind {
        Default::Num(_) => match as_f64(v) {
            Some(x) => Ok(Value::Float(x)),
            None => bad("a finite number"),
        },
        Default::Int(_) => match v {
            Value::Integer(i) if *i >= 0 => Ok(v.clone()),
            _ => bad("a nonnegative integer"),
        },
        Default::Text(_) | Default::Path => match v {
            Value::String(_) => Ok(v.clone()),
            _ => bad("a string"),
        },
        Default::Nums(_) => match v {
            Value::Array(a) if a.iter().all(|x| as_f64(x).is_some()) => {
                Ok(Value::Array(a.iter().map(|x| Value::Float(as_f64(x).unwrap())).collect()))
            }
            _ => bad("an array of numbers"),
        },
        Default::Ints(_) => match v {
            Value::Array(a) if a.iter().all(|x| matches!(x, Value::Integer(i) if *i >= 0)) => Ok(v.clone()),
            _ => bad("an array of nonnegative integers"),
        },
    }
}

fn default_value(kind: Default) -> Option<Value> {
    Some(match kind {
        Default::Num(x) => Value::Float(x),
        Default::Int(i) => Value::Integer(i as i64),
        Default::Text(s) => Value::String(s.into()),
        Default::Nums(xs) => Value::Array(xs.iter().map(|&x| Value::Float(x)).collect()),
        Default::Ints(xs) => Value::Array(xs.iter().map(|&x| Value::Integer(x as i64)).collect()),
        Default::Path => return None,
    })
}

impl Params {
    /// Defaults overlaid by `given`, rejecting undeclared keys and wrong types.
    pub fn resolve(decls: &[Decl], given: &BTreeMap<String, Value>) -> Result<Params, String> {
        for key in given.keys() {
            if !decls.iter().any(|d| d.0 == key) {
                let known: Vec<&str> = decls.iter().map(|d| d.0).collect();
                return Err(format!("unknown parameter '{key}' (accepted: {})", known.join(", ")));
            }
        }
        let mut values = BTreeMap::new();
        for &(key, kind) in decls {
            let v = match given.get(key) {
                Some(v) => Some(check(key, kind, v)?),
                None => default_value(kind),
            };
            if let Some(v) = v {
                values.insert(key.to_string(), v);
            }
        }
        Ok(Params { values })
    }

    pub fn as_map(&self) -> &BTreeMap<String, Value> {
        &self.values
    }

    fn get(&self, key: &str) -> &Value {
        self.values.get(key).unwrap_or_else(|| panic!("parameter '{key}' read but not declared"))
    }

    pub fn num(&self, key: &str) -> f64 {
        as_f64(self.get(key)).unwrap()
    }

    pub fn int(&self, key: &str) -> usize {
        self.get(key).as_integer().unwrap() as usize
    }

    pub fn text(&self, key: &str) -> &str {
        self.get(key).as_str().unwrap()
    }

    pub fn nums(&self, key: &str) -> Vec<f64> {
        self.get(key).as_array().unwrap().iter().map(|v| as_f64(v).unwrap()).collect()
    }

    pub fn ints(&self, key: &str) -> Vec<usize> {
        self.get(key).as_array().unwrap().iter().map(|v| v.as_integer().unwrap() as usize).collect()
    }

    pub fn path(&self, key: &str) -> Option<&str> {
        self.values.get(key).and_then(Value::as_str)
    }
}

/// Parses the right-hand side of `--set key=value` as a TOML value; bare
/// words fall back to strings.
pub fn parse_override(text: &str) -> Result<(String, Value), String> {
    let (key, raw) = text.split_once('=').ok_or_else(|| format!("--set expects key=value, got '{text}'"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(format!("--set expects key=value, got '{text}'"));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<BTreeMap<String, Value>>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DECLS: &[Decl] = &[("n", Default::Int(5)), ("delta", Default::Num(0.05)), ("cs", Default::Nums(&[0.1]))];

    #[test]
    fn defaults_and_types() {
        let mut given = BTreeMap::new();
        given.insert("delta".to_string(), Value::Integer(1));
        let p = Params::resolve(DECLS, &given).unwrap();
        assert_eq!(p.int("n"), 5);
        assert_eq!(p.num("delta"), 1.0);
        given.insert("n".into(), Value::String("five".into()));
        let e = Params::resolve(DECLS, &given).unwrap_err();
        assert!(e.contains("'n'"), "{e}");
        given.clear();
        given.insert("m".into(), Value::Integer(1));
        assert!(Params::resolve(DECLS, &given).unwrap_err().contains("unknown parameter 'm'"));
    }

    #[test]
    fn overrides() {
        assert_eq!(parse_override("n=7").unwrap(), ("n".into(), Value::Integer(7)));
        assert_eq!(parse_override("cs=[0.1, 0.2]").unwrap().1.as_array().unwrap().len(), 2);
        assert_eq!(parse_override("family=gamma").unwrap().1, Value::String("gamma".into()));
        assert!(parse_override("nokey").is_err());
    }
}
