//! Command-line front end: a JSON config in, a JSON report out.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{n1_bound, BoundCertificate};
use crate::error::{Error, Result};
use crate::pipeline::{brute_force, solve, ProblemInstance, DEFAULT_BRUTE_LIMIT, DEFAULT_SEARCH_TUPLES};
use crate::recurrence::{RecurrenceParams, RecurrenceSpec};
use crate::reduction::{cf_expand, gamma_real, reduce_cascade, ReductionOptions, DEFAULT_CAP_BITS, DEFAULT_START_BITS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;
pub const EXIT_RESOURCE: i32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Bound,
    Reduce,
    Search,
    Cf,
}

fn default_p() -> u64 {
    3
}
fn default_t() -> u32 {
    3
}
fn default_brute_limit() -> u64 {
    DEFAULT_BRUTE_LIMIT
}
fn default_cap() -> u32 {
    DEFAULT_CAP_BITS
}
fn default_cf_terms() -> usize {
    30
}
fn default_tuples() -> u64 {
    DEFAULT_SEARCH_TUPLES
}
fn default_mode() -> Mode {
    Mode::Solve
}

/// Run configuration. Every field has a default; the defaults describe
/// balancing numbers with `p = 3`, `t = 3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "P", default = "default_params_p")]
    pub recurrence_p: i64,
    #[serde(rename = "Q", default = "default_params_q")]
    pub recurrence_q: i64,
    #[serde(default)]
    pub u0: i64,
    #[serde(default = "default_u1")]
    pub u1: i64,
    #[serde(default = "default_p")]
    pub p: u64,
    #[serde(default = "default_t")]
    pub t: u32,
    #[serde(default = "default_brute_limit")]
    pub brute_limit: u64,
    #[serde(default = "default_cap")]
    pub precision_cap_bits: u32,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Search range for `search` mode; defaults to `brute_limit`.
    #[serde(default)]
    pub n_max: Option<u64>,
    /// Certificate for `reduce` mode; computed when absent.
    #[serde(default)]
    pub certificate_path: Option<PathBuf>,
    #[serde(default = "default_cf_terms")]
    pub cf_terms: usize,
    #[serde(default = "default_tuples")]
    pub search_tuple_limit: u64,
    /// Adds wall-clock time to the report, which then differs between runs.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_params_p() -> i64 {
    RecurrenceParams::BALANCING.p
}
fn default_params_q() -> i64 {
    RecurrenceParams::BALANCING.q
}
fn default_u1() -> i64 {
    RecurrenceParams::BALANCING.u1
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    pub fn params(&self) -> RecurrenceParams {
        RecurrenceParams::new(self.recurrence_p, self.recurrence_q, self.u0, self.u1)
    }

    fn reduction_options(&self) -> Result<ReductionOptions> {
        if self.precision_cap_bits < DEFAULT_START_BITS {
            return Err(Error::InvalidInput(format!(
                "precision_cap_bits must be at least {DEFAULT_START_BITS}"
            )));
        }
        Ok(ReductionOptions {
            cap_bits: self.precision_cap_bits,
            ..ReductionOptions::default()
        })
    }

    fn instance(&self) -> Result<ProblemInstance> {
        let spec = RecurrenceSpec::new(self.params())?;
        let mut inst = ProblemInstance::new(spec, self.p, self.t, self.brute_limit)?;
        inst.search_tuple_limit = self.search_tuple_limit;
        Ok(inst)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) => EXIT_CONFIG,
        Error::Degenerate(_) | Error::Domain(_) => EXIT_DEGENERATE,
        Error::ReductionInconclusive(_) | Error::RationalGamma => EXIT_INCONCLUSIVE,
        Error::Resource(_) => EXIT_RESOURCE,
        Error::Internal(_) => EXIT_OTHER,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "invalid_config",
        Error::Degenerate(_) => "degenerate",
        Error::Domain(_) => "domain",
        Error::ReductionInconclusive(_) => "reduction_inconclusive",
        Error::RationalGamma => "rational_gamma",
        Error::Resource(_) => "resource",
        Error::Internal(_) => "internal",
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Internal(format!("serialization: {e}")))
}

fn n_min(spec: &RecurrenceSpec) -> u64 {
    u64::from(spec.params.u0 == 0)
}

fn certificate_for(cfg: &RunConfig, spec: &RecurrenceSpec) -> Result<BoundCertificate> {
    match &cfg.certificate_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
            let cert: BoundCertificate = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidInput(format!("certificate: {e}")))?;
            if cert.p != cfg.p || cert.t != cfg.t {
                return Err(Error::InvalidInput(format!(
                    "certificate is for p = {}, t = {}; config has p = {}, t = {}",
                    cert.p, cert.t, cfg.p, cfg.t
                )));
            }
            Ok(cert)
        }
        None => n1_bound(spec, cfg.p, cfg.t, cfg.brute_limit),
    }
}

fn mode_body(cfg: &RunConfig) -> Result<Vec<(&'static str, Value)>> {
    let inst = cfg.instance()?;
    let spec = &inst.spec;
    let mut out = vec![("recurrence", to_value(spec)?)];
    match cfg.mode {
        Mode::Solve => {
            let r = solve(&inst, &cfg.reduction_options()?)?;
            let ledger: Vec<Value> = r
                .cases
                .iter()
                .map(|c| json!({ "terms": c.subcase.terms, "entries": c.certificate.ledger }))
                .collect();
            out.push(("ledger", Value::Array(ledger)));
            out.push(("precision_bits", to_value(&r.precision_bits)?));
            out.push(("solutions", to_value(&r.solutions)?));
            out.push(("result", to_value(&r)?));
        }
        Mode::Bound => {
            let cert = n1_bound(spec, cfg.p, cfg.t, cfg.brute_limit)?;
            out.push(("ledger", to_value(&cert.ledger)?));
            out.push(("certificate", to_value(&cert)?));
        }
        Mode::Reduce => {
            let opts = cfg.reduction_options()?;
            let cert = certificate_for(cfg, spec)?;
            let trace = reduce_cascade(spec, &cert, n_min(spec), &opts)?;
            let bits = trace
                .passes
                .iter()
                .flat_map(|p| p.stages.iter().flat_map(|s| s.records.iter()))
                .map(|r| r.outcome.precision_bits)
                .max()
                .unwrap_or(0);
            out.push(("ledger", to_value(&cert.ledger)?));
            out.push(("precision_bits", to_value(&bits)?));
            out.push(("reduction", to_value(&trace)?));
        }
        Mode::Search => {
            let n_max = cfg.n_max.unwrap_or(cfg.brute_limit);
            let sols = brute_force(&inst, n_max)?;
            out.push(("n_max", to_value(&n_max)?));
            out.push(("solutions", to_value(&sols)?));
        }
        Mode::Cf => {
            let bits = DEFAULT_START_BITS * 2;
            let gamma = gamma_real(spec, cfg.p, bits)?;
            let mut cf = cf_expand(&gamma, cfg.cf_terms)?;
            if cf.needs_more_precision {
                let gamma = gamma_real(spec, cfg.p, cfg.precision_cap_bits)?;
                cf = cf_expand(&gamma, cfg.cf_terms)?;
            }
            if cf.certified_upto < cfg.cf_terms {
                return Err(Error::Resource(format!(
                    "only {} quotients certified within {} bits",
                    cf.certified_upto, cfg.precision_cap_bits
                )));
            }
            out.push(("precision_bits", to_value(&cf.precision_bits)?));
            out.push(("continued_fraction", to_value(&cf)?));
        }
    }
    Ok(out)
}

/// Runs one configuration and returns the exit code and the report.
pub fn run(cfg: &RunConfig) -> (i32, Value) {
    let start = Instant::now();
    let mut report = serde_json::Map::new();
    report.insert("config".into(), to_value(cfg).unwrap_or(Value::Null));
    report.insert("mode".into(), to_value(&cfg.mode).unwrap_or(Value::Null));
    let code = match mode_body(cfg) {
        Ok(parts) => {
            report.insert("status".into(), json!("ok"));
            for (k, v) in parts {
                report.insert(k.into(), v);
            }
            EXIT_OK
        }
        Err(e) => {
            let code = exit_code(&e);
            report.insert("status".into(), json!("error"));
            report.insert(
                "error".into(),
                json!({ "kind": error_kind(&e), "message": e.to_string(), "exit_code": code }),
            );
            code
        }
    };
    if cfg.record_timing {
        report.insert("wall_clock_ms".into(), json!(start.elapsed().as_millis() as u64));
    }
    (code, Value::Object(report))
}

#[derive(Debug, Parser)]
#[command(name = "recpow", about = "Sums of terms of a binary recurrence that are prime powers")]
pub struct Args {
    /// JSON run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long = "precision-cap", value_name = "BITS")]
    pub precision_cap: Option<u32>,
    #[arg(long = "brute-limit", value_name = "N")]
    pub brute_limit: Option<u64>,
    /// Report path; stdout when absent
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// The config file with command-line overrides applied.
pub fn resolve_config(args: &Args) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(b) = args.precision_cap {
        cfg.precision_cap_bits = b;
    }
    if let Some(n) = args.brute_limit {
        cfg.brute_limit = n;
    }
    if let Some(o) = &args.out {
        cfg.output_path = Some(o.clone());
    }
    Ok(cfg)
}

fn write_report(report: &Value, path: Option<&Path>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("a JSON value serializes");
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    }
}

/// Entry point of the binary.
pub fn main_with_args(args: Args) -> i32 {
    let (code, report, path) = match resolve_config(&args) {
        Ok(cfg) => {
            let (code, report) = run(&cfg);
            (code, report, cfg.output_path.clone())
        }
        Err(e) => {
            let report = json!({
                "status": "error",
                "error": { "kind": error_kind(&e), "message": e.to_string(), "exit_code": exit_code(&e) },
            });
            (exit_code(&e), report, args.out.clone())
        }
    };
    if let Err(e) = write_report(&report, path.as_deref()) {
        eprintln!("recpow: cannot write report: {e}");
        return EXIT_OTHER;
    }
    if code != EXIT_OK {
        if let Some(msg) = report.pointer("/error/message").and_then(Value::as_str) {
            eprintln!("recpow: {msg}");
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_balancing() {
        let c = RunConfig::default();
        assert_eq!(c.params(), RecurrenceParams::BALANCING);
        assert_eq!((c.p, c.t, c.brute_limit, c.mode), (3, 3, 100, Mode::Solve));
        assert_eq!(c.precision_cap_bits, 16384);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"P": 6, "colour": 1}"#).is_err());
        let c = RunConfig::from_json(r#"{"P": 1, "Q": 1, "mode": "cf"}"#).unwrap();
        assert_eq!(c.mode, Mode::Cf);
    }

    #[test]
    fn config_round_trip() {
        let c = RunConfig::from_json(r#"{"t": 2, "mode": "search", "n_max": 7}"#).unwrap();
        let again = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn exit_codes() {
        let (code, _) = run(&RunConfig::from_json(r#"{"p": 4}"#).unwrap());
        assert_eq!(code, EXIT_CONFIG);
        let (code, r) = run(&RunConfig::from_json(r#"{"P": 0, "Q": 1}"#).unwrap());
        assert_eq!(code, EXIT_DEGENERATE);
        assert_eq!(r["error"]["kind"], "degenerate");
        let (code, _) = run(&RunConfig::from_json(r#"{"mode": "search", "t": 5, "n_max": 500}"#).unwrap());
        assert_eq!(code, EXIT_RESOURCE);
    }

    #[test]
    fn cf_mode() {
        let (code, r) = run(&RunConfig::from_json(r#"{"mode": "cf", "cf_terms": 9}"#).unwrap());
        assert_eq!(code, EXIT_OK);
        let q: Vec<String> = serde_json::from_value(r["continued_fraction"]["partial_quotients"].clone()).unwrap();
        assert_eq!(q, ["0", "1", "1", "1", "1", "1", "8", "4", "17"]);
    }
}
