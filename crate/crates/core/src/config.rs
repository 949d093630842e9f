//! Run manifests: flat key = value config files, flag overrides, and the
//! fully-resolved echo that goes into every output directory.
//!
//! Every parameter a command consumes is recorded with its resolved value
//! (explicit or default) — no silent defaults. Unknown keys are rejected
//! with the offending field named.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::dynamics_probe::ProbeSettings;
use crate::error::{Error, Result};
use crate::esn_baseline::EsnConfig;
use crate::experiment_harness::{AxisSpec, PointConfig, ScanSpec, TaskKind, TopologyKind};
use crate::readout::ReadoutObservable;
use crate::tasks::SplitLengths;

/// Environment variable consulted for the Santa Fe data path when the
/// `santa_fe_path` key is absent.
pub const SANTA_FE_ENV: &str = "SLRES_SANTA_FE";

#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    raw: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
    touched: BTreeSet<String>,
}

impl ConfigMap {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Parse `key = value` lines; `#` starts a comment, blank lines ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut raw = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                ))
            })?;
            raw.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self {
            raw,
            resolved: BTreeMap::new(),
            touched: BTreeSet::new(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Flag overrides win over file values.
    pub fn set_override(&mut self, key: &str, value: &str) {
        self.raw.insert(key.trim().to_string(), value.trim().to_string());
    }

    fn lookup(&mut self, key: &str) -> Option<String> {
        self.touched.insert(key.to_string());
        self.raw.get(key).cloned()
    }

    fn record(&mut self, key: &str, value: impl ToString) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    pub fn get_f64(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = match self.lookup(key) {
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("field '{key}': bad number '{s}'")))?,
            None => default,
        };
        self.record(key, v);
        Ok(v)
    }

    pub fn get_usize(&mut self, key: &str, default: usize) -> Result<usize> {
        let v = match self.lookup(key) {
            Some(s) => s
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("field '{key}': bad integer '{s}'")))?,
            None => default,
        };
        self.record(key, v);
        Ok(v)
    }

    pub fn get_u64(&mut self, key: &str, default: u64) -> Result<u64> {
        let v = match self.lookup(key) {
            Some(s) => s
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("field '{key}': bad integer '{s}'")))?,
            None => default,
        };
        self.record(key, v);
        Ok(v)
    }

    pub fn get_bool(&mut self, key: &str, default: bool) -> Result<bool> {
        let v = match self.lookup(key) {
            Some(s) => match s.as_str() {
                "true" | "1" | "yes" => true,
                "false" | "0" | "no" => false,
                other => {
                    return Err(Error::Config(format!(
                        "field '{key}': bad boolean '{other}'"
                    )))
                }
            },
            None => default,
        };
        self.record(key, v);
        Ok(v)
    }

    pub fn get_string(&mut self, key: &str, default: &str) -> Result<String> {
        let v = self.lookup(key).unwrap_or_else(|| default.to_string());
        self.record(key, &v);
        Ok(v)
    }

    /// Optional string; records `(unset)` when absent so the echo stays total.
    pub fn get_opt_string(&mut self, key: &str) -> Option<String> {
        let v = self.lookup(key);
        self.record(key, v.as_deref().unwrap_or("(unset)"));
        v
    }

    /// Reject any key that no getter consumed; catches typos field-by-field.
    pub fn finish(&self) -> Result<()> {
        let unknown: Vec<&String> = self
            .raw
            .keys()
            .filter(|k| !self.touched.contains(*k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "unknown field(s): {}",
                unknown
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }

    /// Raw (pre-resolution) key/value pairs, for configuration layering.
    pub fn raw_pairs(&self) -> Vec<(String, String)> {
        self.raw
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

/// Read the point-level keys (physics, timing, readout, lengths, seeds).
pub fn resolve_point(cfg: &mut ConfigMap) -> Result<PointConfig> {
    let topology = TopologyKind::parse(&cfg.get_string("topology", "ring")?)?;
    let n_real = cfg.get_usize("n_real", 2)?;
    if n_real == 0 {
        return Err(Error::Config("field 'n_real': must be >= 1".into()));
    }
    let n_virtual_default = if 256 % n_real.max(1) == 0 {
        256 / n_real
    } else {
        0
    };
    let n_virtual = cfg.get_usize("n_virtual", n_virtual_default)?;
    if n_virtual == 0 {
        return Err(Error::Config(
            "field 'n_virtual': must be >= 1 (no default when 256 is not divisible by n_real)"
                .into(),
        ));
    }
    let theta = cfg.get_f64("theta", 12.0)?;
    let tau = cfg.get_f64("tau", 17.0 * n_virtual as f64)?;
    let dt = cfg.get_f64("dt", 0.01)?;
    let kappa = cfg.get_f64("kappa", 0.04)?;
    let omega = cfg.get_f64("omega", 1.0)?;
    let gamma_re = cfg.get_f64("gamma_re", -0.1)?;
    let gamma_im = cfg.get_f64("gamma_im", 0.5)?;
    let lambda = cfg.get_f64("lambda", 0.015)?;
    let phi = cfg.get_f64("phi", 0.0)?;
    let eta = cfg.get_f64("eta", 0.01)?;
    let ridge = cfg.get_f64("ridge", 1e-8)?;
    let observable = match cfg.get_string("observable", "amplitude")?.as_str() {
        "amplitude" => ReadoutObservable::Amplitude,
        "re_im" => ReadoutObservable::ReIm,
        other => {
            return Err(Error::Config(format!(
                "field 'observable': expected amplitude or re_im, got '{other}'"
            )))
        }
    };
    let split = SplitLengths::new(
        cfg.get_usize("buffer_len", 150)?,
        cfg.get_usize("train_len", 1500)?,
        cfg.get_usize("test_len", 500)?,
    )?;
    let seed = cfg.get_u64("seed", 42)?;
    Ok(PointConfig {
        topology,
        n_real,
        n_virtual,
        theta,
        tau,
        dt,
        kappa,
        omega,
        gamma: Complex64::new(gamma_re, gamma_im),
        lambda,
        phi,
        eta,
        ridge,
        observable,
        split,
        mask_seed: seed,
        task_seed: seed.wrapping_add(1),
    })
}

/// Point keys plus scan axes, task and scan behavior.
pub fn resolve_scan(cfg: &mut ConfigMap) -> Result<ScanSpec> {
    let base = resolve_point(cfg)?;
    let task = TaskKind::parse(&cfg.get_string("task", "narma10")?)?;
    let lambda_axis = AxisSpec {
        min: cfg.get_f64("lambda_min", -0.02)?,
        max: cfg.get_f64("lambda_max", 0.05)?,
        count: cfg.get_usize("lambda_count", 16)?,
    };
    let phi_axis = AxisSpec {
        min: cfg.get_f64("phi_min", 0.0)?,
        max: cfg.get_f64("phi_max", std::f64::consts::TAU)?,
        count: cfg.get_usize("phi_count", 16)?,
    };
    let base_seed = cfg.get_u64("seed", 42)?;
    let fixed_task = cfg.get_bool("fixed_task", false)?;
    let probe = cfg.get_bool("probe", true)?;
    let santa_fe_path = match cfg.get_opt_string("santa_fe_path") {
        Some(p) => Some(PathBuf::from(p)),
        None => {
            let env = std::env::var(SANTA_FE_ENV).ok();
            if let Some(p) = &env {
                cfg.record("santa_fe_path", format!("{p} (from ${SANTA_FE_ENV})"));
            }
            env.map(PathBuf::from)
        }
    };
    Ok(ScanSpec {
        base,
        lambda_axis,
        phi_axis,
        task,
        base_seed,
        fixed_task,
        probe,
        santa_fe_path,
    })
}

/// Probe tolerances (shared by `scan` and `dynamics`).
pub fn resolve_probe(cfg: &mut ConfigMap) -> Result<ProbeSettings> {
    let d = ProbeSettings::default();
    Ok(ProbeSettings {
        transient_delays: cfg.get_f64("probe_transient_delays", d.transient_delays)?,
        analysis_delays: cfg.get_f64("probe_analysis_delays", d.analysis_delays)?,
        sync_tol: cfg.get_f64("probe_sync_tol", d.sync_tol)?,
        bin_tol: cfg.get_f64("probe_bin_tol", d.bin_tol)?,
    })
}

/// ESN baseline keys.
pub fn resolve_esn(cfg: &mut ConfigMap) -> Result<(EsnConfig, SplitLengths, f64)> {
    let d = EsnConfig::default();
    let esn = EsnConfig {
        n_nodes: cfg.get_usize("esn_nodes", d.n_nodes)?,
        spectral_radius: cfg.get_f64("esn_spectral_radius", d.spectral_radius)?,
        input_scale: cfg.get_f64("esn_input_scale", d.input_scale)?,
        density: cfg.get_f64("esn_density", d.density)?,
        seed: cfg.get_u64("seed", 42)?,
    };
    let split = SplitLengths::new(
        cfg.get_usize("buffer_len", 1000)?,
        cfg.get_usize("train_len", 5000)?,
        cfg.get_usize("test_len", 5000)?,
    )?;
    let ridge = cfg.get_f64("ridge", 1e-8)?;
    Ok((esn, split, ridge))
}

/// Fully-resolved manifest written next to every output.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub resolved: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &ConfigMap) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            resolved: cfg.resolved().clone(),
        }
    }

    /// Flat key = value text, directly reusable as `--config`.
    pub fn conf_string(&self) -> String {
        let mut out = format!(
            "# slres {} — resolved configuration for `{}`\n",
            self.version, self.command
        );
        for (k, v) in &self.resolved {
            if v == "(unset)" {
                continue;
            }
            // Strip provenance annotations like "(from $ENV)".
            let v = v.split(" (from ").next().unwrap_or(v);
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// JSON sidecar with version, command, resolved config and extras
    /// (timing, cell counts, seeds).
    pub fn metadata_json(&self, extra: serde_json::Value) -> String {
        let obj = serde_json::json!({
            "tool": "slres",
            "version": self.version,
            "command": self.command,
            "resolved": self.resolved,
            "run": extra,
        });
        serde_json::to_string_pretty(&obj).expect("json serialization")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut cfg = ConfigMap::from_text("n_real = 4\nlambda = 0.02 # comment\n").unwrap();
        cfg.set_override("lambda", "0.03");
        let point = resolve_point(&mut cfg).unwrap();
        assert_eq!(point.n_real, 4);
        assert_eq!(point.n_virtual, 64); // 256 / 4
        assert_eq!(point.lambda, 0.03);
        assert_eq!(point.tau, 17.0 * 64.0);
        cfg.finish().unwrap();
    }

    #[test]
    fn unknown_field_is_named() {
        let mut cfg = ConfigMap::from_text("n_reall = 4\n").unwrap();
        resolve_point(&mut cfg).unwrap();
        let err = cfg.finish().unwrap_err();
        assert!(err.to_string().contains("n_reall"), "{err}");
    }

    #[test]
    fn every_default_is_echoed() {
        let mut cfg = ConfigMap::empty();
        resolve_scan(&mut cfg).unwrap();
        let resolved = cfg.resolved();
        for key in [
            "topology",
            "n_real",
            "n_virtual",
            "theta",
            "tau",
            "dt",
            "kappa",
            "omega",
            "gamma_re",
            "gamma_im",
            "lambda",
            "phi",
            "eta",
            "ridge",
            "observable",
            "buffer_len",
            "train_len",
            "test_len",
            "seed",
            "task",
            "lambda_min",
            "lambda_max",
            "lambda_count",
            "phi_min",
            "phi_max",
            "phi_count",
            "fixed_task",
            "probe",
        ] {
            assert!(resolved.contains_key(key), "missing echo for '{key}'");
        }
    }

    #[test]
    fn conf_string_roundtrips() {
        let mut cfg = ConfigMap::from_text("n_real = 8\nkappa = 0.1\n").unwrap();
        let spec = resolve_scan(&mut cfg).unwrap();
        let manifest = RunManifest::new("scan", &cfg);
        let mut cfg2 = ConfigMap::from_text(&manifest.conf_string()).unwrap();
        let spec2 = resolve_scan(&mut cfg2).unwrap();
        assert_eq!(spec, spec2);
    }

    #[test]
    fn bad_values_name_the_field() {
        let mut cfg = ConfigMap::from_text("kappa = banana\n").unwrap();
        let err = resolve_point(&mut cfg).unwrap_err();
        assert!(err.to_string().contains("kappa"), "{err}");
    }

    #[test]
    fn indivisible_n_real_requires_explicit_n_virtual() {
        let mut cfg = ConfigMap::from_text("n_real = 3\n").unwrap();
        assert!(resolve_point(&mut cfg).is_err());
        let mut cfg = ConfigMap::from_text("n_real = 3\nn_virtual = 5\n").unwrap();
        let point = resolve_point(&mut cfg).unwrap();
        assert_eq!((point.n_real, point.n_virtual), (3, 5));
    }
}
