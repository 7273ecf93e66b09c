use std::collections::BTreeMap;
use std::fmt::Write as _;

use qdfs_core::matrixkit::{CMatrix, C64};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Check(bool),
    Value(f64),
}

/// Outcome of one command. Boolean verdicts decide the exit code; numeric
/// ones are informational.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub inputs: Option<Value>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub details: BTreeMap<String, Value>,
    pub artifacts: Vec<String>,
    pub error: Option<String>,
    input_error: bool,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: None,
            verdicts: BTreeMap::new(),
            details: BTreeMap::new(),
            artifacts: Vec::new(),
            error: None,
            input_error: false,
        }
    }

    pub fn input_error(command: &str, message: impl Into<String>) -> Self {
        let mut r = Self::new(command);
        r.error = Some(message.into());
        r.input_error = true;
        r
    }

    pub fn check(&mut self, name: &str, ok: bool) -> &mut Self {
        self.verdicts.insert(name.to_string(), Verdict::Check(ok));
        self
    }

    pub fn value(&mut self, name: &str, v: f64) -> &mut Self {
        self.verdicts.insert(name.to_string(), Verdict::Value(v));
        self
    }

    pub fn detail(&mut self, name: &str, v: Value) -> &mut Self {
        self.details.insert(name.to_string(), v);
        self
    }

    /// Records a failure that is a verdict, not an input problem.
    pub fn fail(&mut self, name: &str, message: impl Into<String>) -> &mut Self {
        self.check(name, false);
        self.error = Some(message.into());
        self
    }

    pub fn number(&self, name: &str) -> Option<f64> {
        match self.verdicts.get(name) {
            Some(Verdict::Value(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn passed(&self, name: &str) -> Option<bool> {
        match self.verdicts.get(name) {
            Some(Verdict::Check(b)) => Some(*b),
            _ => None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.input_error {
            2
        } else if self.verdicts.values().any(|v| *v == Verdict::Check(false)) {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> Value {
        let verdicts: serde_json::Map<String, Value> = self
            .verdicts
            .iter()
            .map(|(k, v)| {
                let v = match v {
                    Verdict::Check(b) => Value::Bool(*b),
                    Verdict::Value(x) => number(*x),
                };
                (k.clone(), v)
            })
            .collect();
        let mut out = json!({
            "command": self.command,
            "verdicts": verdicts,
            "details": self.details,
            "artifacts": self.artifacts,
            "exit_code": self.exit_code(),
        });
        if let Some(inputs) = &self.inputs {
            out["inputs"] = inputs.clone();
        }
        if let Some(e) = &self.error {
            out["error"] = Value::String(e.clone());
        }
        out
    }

    /// Canonical text: sorted keys, two-space indentation, trailing newline.
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).unwrap_or_default();
        s.push('\n');
        s
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.command);
        let width = self.verdicts.keys().map(|k| k.len()).max().unwrap_or(0);
        for (k, v) in &self.verdicts {
            let shown = match v {
                Verdict::Check(true) => "pass".to_string(),
                Verdict::Check(false) => "FAIL".to_string(),
                Verdict::Value(x) => format!("{x:.10e}"),
            };
            let _ = writeln!(out, "  {k:<width$}  {shown}");
        }
        for a in &self.artifacts {
            let _ = writeln!(out, "  wrote {a}");
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "  error: {e}");
        }
        let _ = writeln!(out, "  exit {}", self.exit_code());
        out
    }
}

pub fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn complex(z: C64) -> Value {
    json!([number(z.re), number(z.im)])
}

pub fn complex_list(zs: &[C64]) -> Value {
    Value::Array(zs.iter().map(|z| complex(*z)).collect())
}

pub fn matrix(m: &CMatrix) -> Value {
    Value::Array((0..m.rows()).map(|i| Value::Array((0..m.cols()).map(|j| complex(m[(i, j)])).collect())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_verdicts() {
        let mut r = RunReport::new("check");
        r.value("residual", 1e-3);
        assert_eq!(r.exit_code(), 0);
        r.check("realizable", false);
        assert_eq!(r.exit_code(), 1);
        assert_eq!(RunReport::input_error("check", "bad").exit_code(), 2);
    }

    #[test]
    fn rendering_is_sorted() {
        let mut r = RunReport::new("x");
        r.check("zeta", true).check("alpha", true);
        let text = r.render();
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
        assert!(text.find("\"artifacts\"").unwrap() < text.find("\"command\"").unwrap());
        assert_eq!(text, r.render());
    }
}
