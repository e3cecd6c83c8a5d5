use std::fmt;
use std::path::Path;

use congestion_core::State;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// A failed run: one line for stderr, exit code 1.
#[derive(Debug)]
pub struct Failure(pub String);

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<congestion_core::Error> for Failure {
    fn from(e: congestion_core::Error) -> Self {
        Failure(e.to_string())
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

pub fn fail<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure(msg.into()))
}

/// Everything a subcommand produces: text for stdout and the `results`
/// section of the JSON report. Input files are hashed as they are read.
pub struct Run {
    pub text: String,
    pub results: serde_json::Map<String, Value>,
    hasher: Sha256,
    inputs: Vec<String>,
}

impl Run {
    pub fn new() -> Self {
        Run {
            text: String::new(),
            results: serde_json::Map::new(),
            hasher: Sha256::new(),
            inputs: Vec::new(),
        }
    }

    pub fn read(&mut self, path: &Path) -> Outcome<String> {
        let bytes = std::fs::read(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))?;
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(&bytes);
        self.inputs.push(path.display().to_string());
        String::from_utf8(bytes).map_err(|_| Failure(format!("{} is not UTF-8", path.display())))
    }

    pub fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    pub fn set(&mut self, key: &str, v: Value) {
        self.results.insert(key.to_string(), v);
    }

    pub fn into_report(self, argv: &[String]) -> Value {
        let digest: String = self.hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        json!({
            "command": argv,
            "inputs": self.inputs,
            "input_digest": format!("sha256:{digest}"),
            "results": self.results,
        })
    }
}

pub fn write_file(path: &Path, contents: &str) -> Outcome {
    std::fs::write(path, contents).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
}

/// JSON number, with non-finite values as strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn parse_exponent(s: &str) -> Result<f64, String> {
    let p = match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => f64::INFINITY,
        t => t.parse::<f64>().map_err(|_| format!("{s:?} is not a number or \"inf\""))?,
    };
    if p.is_nan() || p < 1.0 {
        return Err(format!("exponent must be >= 1, got {s}"));
    }
    Ok(p)
}

pub fn parse_state(s: &str) -> Result<State, String> {
    let body = s.trim().trim_start_matches('(').trim_end_matches(')');
    if body.trim().is_empty() {
        return Err("empty state".into());
    }
    body.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("{t:?} is not a strategy index")))
        .collect::<Result<Vec<_>, _>>()
        .map(State)
}

pub fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("{t:?} is not a finite number")),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents() {
        assert_eq!(parse_exponent("inf"), Ok(f64::INFINITY));
        assert_eq!(parse_exponent("2.5"), Ok(2.5));
        assert!(parse_exponent("0.5").is_err());
        assert!(parse_exponent("nan").is_err());
        assert!(parse_exponent("x").is_err());
    }

    #[test]
    fn states() {
        assert_eq!(parse_state("(0,1)"), Ok(State(vec![0, 1])));
        assert_eq!(parse_state("2, 0"), Ok(State(vec![2, 0])));
        assert!(parse_state("").is_err());
        assert!(parse_state("a").is_err());
    }

    #[test]
    fn non_finite_numbers() {
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(1.5), json!(1.5));
    }
}
