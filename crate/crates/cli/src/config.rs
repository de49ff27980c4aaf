//! JSON run configurations, turned into an ordinary argument vector so that
//! one parser validates both routes.
//!
//! ```json
//! {
//!   "schema": "v1",
//!   "subcommand": "simulate",
//!   "model": {"kind": "exponential", "params": {"lambda": 1.0}},
//!   "params": {"x": 50, "n": 100000, "event": ["z1>=1.5"]},
//!   "seed": 7,
//!   "workers": 2,
//!   "output": {"path": "tail.json", "format": "json"}
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use renewal_ldp::HoldingTimeModel;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub schema: Option<String>,
    pub subcommand: String,
    /// A descriptor object or the `kind:params` string.
    #[serde(default)]
    pub model: Option<Value>,
    /// Remaining flags by name (`x_grid` or `x-grid`). Arrays repeat the flag,
    /// `true` sets a switch.
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Option<String>,
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| usage(format!("invalid run configuration {}: {e}", path.display())))?;
        if let Some(s) = &cfg.schema {
            if s != "v1" {
                return Err(usage(format!(
                    "unsupported configuration schema {s:?}, expected \"v1\""
                )));
            }
        }
        Ok(cfg)
    }

    pub fn to_args(&self) -> Result<Vec<String>, CliError> {
        let mut args = vec!["renewal-ldp".to_string(), self.subcommand.clone()];
        if let Some(m) = &self.model {
            let text = match m {
                Value::String(s) => s.clone(),
                other => serde_json::from_value::<HoldingTimeModel>(other.clone())
                    .map_err(|e| usage(format!("invalid model descriptor: {e}")))?
                    .to_string(),
            };
            args.extend(["--model".into(), text]);
        }
        if let Some(s) = self.seed {
            args.extend(["--seed".into(), s.to_string()]);
        }
        if let Some(w) = self.workers {
            args.extend(["--workers".into(), w.to_string()]);
        }
        if let Some(out) = &self.output {
            if let Some(p) = &out.path {
                args.extend(["--out".into(), p.clone()]);
            }
            if let Some(f) = &out.format {
                args.extend(["--format".into(), f.clone()]);
            }
        }
        for (key, value) in &self.params {
            let flag = format!("--{}", key.replace('_', "-"));
            push_param(&mut args, &flag, value)?;
        }
        Ok(args)
    }
}

fn scalar(flag: &str, v: &Value) -> Result<String, CliError> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        other => Err(usage(format!(
            "parameter {flag} must be a number or string, found {other}"
        ))),
    }
}

fn push_param(args: &mut Vec<String>, flag: &str, v: &Value) -> Result<(), CliError> {
    match v {
        Value::Bool(true) => args.push(flag.to_string()),
        Value::Bool(false) => {}
        Value::Array(items) => {
            for item in items {
                args.extend([flag.to_string(), scalar(flag, item)?]);
            }
        }
        other => args.extend([flag.to_string(), scalar(flag, other)?]),
    }
    Ok(())
}
