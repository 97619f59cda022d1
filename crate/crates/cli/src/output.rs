//! Deterministic output writers.
//!
//! Every payload embeds the fully resolved configuration and a schema
//! version. Identical resolved configs produce byte-identical payloads: no
//! timestamps, stable key order (BTreeMap), and Rust's shortest-roundtrip
//! float formatting.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::CliError;
use addfunc_core::RiskReport;

pub const SCHEMA_VERSION: u32 = 1;

/// The resolved key-value configuration echoed into every artifact.
#[derive(Default)]
pub struct ResolvedConfig(BTreeMap<String, Value>);

impl ResolvedConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).expect("config value must serialize");
        self.0.insert(key.to_string(), v);
        self
    }

    fn as_line(&self) -> String {
        self.0
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}={s}"),
                other => format!("{k}={other}"),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    schema_version: u32,
    config: BTreeMap<String, Value>,
    result: T,
}

/// Serializes the JSON envelope and delivers it to `--out` or stdout.
pub fn emit_json<T: Serialize>(
    out: Option<&Path>,
    config: ResolvedConfig,
    result: T,
) -> Result<(), CliError> {
    let envelope = Envelope {
        schema_version: SCHEMA_VERSION,
        config: config.0,
        result,
    };
    let mut payload = serde_json::to_string_pretty(&envelope)
        .map_err(|e| CliError::num(format!("serialization failed: {e}")))?;
    payload.push('\n');
    deliver(out, payload.as_bytes())
}

pub const RISK_CSV_HEADER: &str =
    "d,s,M,c,F,noise_mode,theta_label,n_reps,seed,mse,se_mse,bias_sq,variance,rate_upper,rate_lower,ratio";

/// Renders risk reports in the stable CSV schema, prefixed by comment lines
/// carrying the schema version and the resolved config.
pub fn risk_csv(config: &ResolvedConfig, reports: &[RiskReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# schema_version={SCHEMA_VERSION}\n"));
    out.push_str(&format!("# config {}\n", config.as_line()));
    out.push_str(RISK_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.config.d,
            r.config.s,
            r.config.m,
            r.config.c,
            r.config.functional,
            r.config.noise_mode,
            r.theta_label,
            r.config.n_reps,
            r.config.seed,
            r.mse,
            r.se_mse,
            r.bias_sq,
            r.variance,
            r.rate_upper,
            r.rate_lower,
            r.ratio
        ));
    }
    out
}

pub fn deliver(out: Option<&Path>, payload: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent).map_err(|e| {
                        CliError::num(format!("cannot create {}: {e}", parent.display()))
                    })?;
                }
            }
            std::fs::write(path, payload)
                .map_err(|e| CliError::num(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(payload)
            .map_err(|e| CliError::num(format!("cannot write payload: {e}"))),
    }
}
