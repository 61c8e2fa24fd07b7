//! Builds a [`RunConfig`] from defaults, an optional JSON file and flags.
//!
//! Layers are merged as JSON values: objects merge key by key, anything
//! else is replaced. Derived defaults (grid parameters that depend on the
//! requested times) are filled in after the merge, underneath whatever the
//! file and the flags set. Nested seeds are always taken from the root seed.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use cbmlab_core::pde::PdeParams;
use cbmlab_core::rates::{c1_reference, log_times};
use cbmlab_core::trace::make_cantor;
use cbmlab_core::{AtomicMeasure, Error, InitialTrace, IntervalSet, Result};

use crate::args::*;
use crate::config::{Format, RunConfig};

pub const DEFAULT_SEED: u64 = 1;

/// Recursively overlays `top` on `base`.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serialisable")
}

fn bound(x: f64) -> Value {
    if x == f64::INFINITY {
        json!("inf")
    } else if x == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!(x)
    }
}

fn pair(v: &[f64]) -> Result<Value> {
    match v {
        [a, b] => Ok(json!([bound(*a), bound(*b)])),
        _ => Err(param(format!("expected lo,hi but got {} values", v.len()))),
    }
}

/// Flag overrides collected as a sparse JSON object.
#[derive(Default)]
struct Flags(Map<String, Value>);

impl Flags {
    fn set(&mut self, path: &str, v: Value) {
        let mut parts: Vec<&str> = path.split('.').collect();
        let last = parts.pop().expect("nonempty path");
        let mut obj = &mut self.0;
        for p in parts {
            obj = obj
                .entry(p)
                .or_insert_with(|| Value::Object(Map::new()))
                .as_object_mut()
                .expect("object path");
        }
        obj.insert(last.to_string(), v);
    }

    fn opt<T: serde::Serialize>(&mut self, path: &str, v: &Option<T>) {
        if let Some(v) = v {
            self.set(path, to_value(v));
        }
    }

    fn value(self) -> Value {
        Value::Object(self.0)
    }
}

/// A run file has the manifest's `config` shape: `seed`, `format`,
/// `command` and the command's entries under `run`, all optional.
struct FileLayer {
    seed: Option<u64>,
    format: Option<Format>,
    body: Value,
}

fn read_file(path: Option<&Path>, command: &str) -> Result<FileLayer> {
    let Some(path) = path else {
        return Ok(FileLayer {
            seed: None,
            format: None,
            body: json!({}),
        });
    };
    let text = fs::read_to_string(path)?;
    let Value::Object(mut obj) = serde_json::from_str::<Value>(&text)? else {
        return Err(param("config file must hold a JSON object"));
    };
    if let Some(c) = obj.remove("command") {
        if c.as_str() != Some(command) {
            return Err(param(format!("config file is for command {c}, not {command:?}")));
        }
    }
    let seed = obj.remove("seed").map(serde_json::from_value).transpose()?;
    let format = obj.remove("format").map(serde_json::from_value).transpose()?;
    let body = obj.remove("run").unwrap_or_else(|| json!({}));
    if !body.is_object() {
        return Err(param("config entry `run` must be a JSON object"));
    }
    if let Some(k) = obj.keys().next() {
        return Err(param(format!("unknown config entry {k:?}")));
    }
    Ok(FileLayer { seed, format, body })
}

fn trace_preset(name: &str, depth: u32) -> Result<InitialTrace> {
    Ok(match name {
        "point" => InitialTrace::singular(IntervalSet::point(0.0)),
        "interval" => InitialTrace::singular(IntervalSet::interval(0.0, 1.0)),
        "cantor" => InitialTrace::singular(make_cantor(depth)?),
        path => serde_json::from_str(&fs::read_to_string(path)?)?,
    })
}

fn times_of(v: &Value, key: &str) -> Result<Vec<f64>> {
    let times: Vec<f64> = serde_json::from_value(v[key].clone())?;
    if times.is_empty() || times.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(param(format!("{key} must be a nonempty list of positive times")));
    }
    Ok(times)
}

fn extent(times: &[f64]) -> (f64, f64) {
    let lo = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = times.iter().cloned().fold(0.0, f64::max);
    (lo, hi)
}

/// Puts `base` underneath whatever is already at `v[key]`.
fn underlay(v: &mut Value, key: &str, base: Value) {
    let top = v.get(key).cloned().unwrap_or(Value::Null);
    let mut merged = base;
    if !top.is_null() {
        merge(&mut merged, top);
    }
    v[key] = merged;
}

fn snap(t: f64, h: f64) -> f64 {
    (t / h).round() * h
}

fn spde_defaults(seed: u64) -> Value {
    json!({
        "dx": 0.05,
        "dt": 0.00125,
        "domain": [-4.0, 4.0],
        "boundary": "periodic",
        "seed": seed,
        "noise": "binomial",
    })
}

fn cbm_defaults(seed: u64) -> Value {
    json!({
        "initial": [[0.0, 500.0]],
        "h": 1e-4,
        "horizon": 0.3,
        "pair_cutoff": 6.0,
        "seed": seed,
        "offset_jitter": 1e-9,
        "windows": [],
        "report_times": [],
    })
}

fn c1_pinned() -> f64 {
    c1_reference().c1
}

/// The resolved configuration and output directory of a subcommand.
pub fn resolve(command: &Command) -> Result<(RunConfig, std::path::PathBuf, Option<Report>)> {
    let (common, name) = match command {
        Command::Pde(a) => (&a.common, "pde"),
        Command::Spde(a) => (&a.common, "spde"),
        Command::Cbm(a) => (&a.common, "cbm"),
        Command::Kingman(a) => (&a.common, "kingman"),
        Command::Duality(a) => (&a.common, "duality"),
        Command::Rates(a) => (&a.common, "rates"),
        Command::Cantor(a) => (&a.common, "cantor"),
        Command::Reproduce(_) => unreachable!("reproduce has no run config"),
    };
    let file = read_file(common.config.as_deref(), name)?;
    let seed = common.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let format = common.format.or(file.format).unwrap_or_default();
    let mut flags = Flags::default();
    let mut report = None;

    let v = match command {
        Command::Pde(a) => {
            report = Some(a.report);
            if let Some(t) = &a.trace {
                flags.set("trace", to_value(&trace_preset(t, a.depth)?));
            }
            flags.opt("times", &a.times);
            flags.opt("tau", &a.tau);
            flags.opt("params.dx", &a.dx);
            flags.opt("params.t_init", &a.t_init);
            flags.opt("params.dt_rel", &a.dt_rel);
            flags.opt("level", &a.level);
            flags.opt("stride", &a.stride);
            let mut v = json!({
                "trace": to_value(&trace_preset("point", 0)?),
                "times": [1.0],
                "level": 0,
                "stride": 1,
            });
            merge(&mut v, file.body);
            merge(&mut v, flags.value());
            let (lo, hi) = extent(&times_of(&v, "times")?);
            let tau = match v.as_object_mut().expect("object").remove("tau") {
                Some(t) => serde_json::from_value(t)?,
                None => lo,
            };
            if !(tau > 0.0) {
                return Err(param("tau must be positive"));
            }
            underlay(&mut v, "params", to_value(&PdeParams::for_time_scale(tau, hi)));
            v
        }
        Command::Spde(a) => {
            flags.opt("params.dx", &a.dx);
            flags.opt("params.dt", &a.dt);
            flags.opt("params.boundary", &a.boundary);
            flags.opt("params.noise", &a.noise);
            if let Some(d) = &a.domain {
                flags.set("params.domain", pair(d)?);
            }
            flags.opt("eps", &a.eps);
            if let Some(w) = &a.window {
                flags.set("window", pair(w)?);
            }
            flags.opt("times", &a.times);
            flags.opt("mean_check.runs", &a.runs);
            flags.opt("mean_check.threshold", &a.threshold);
            flags.opt("mean_check.reference", &a.reference);
            let mut v = json!({
                "params": spde_defaults(seed),
                "eps": 0.1,
                "window": [-1.0, 1.0],
                "times": [0.25],
                "mean_check": null,
            });
            merge(&mut v, file.body);
            merge(&mut v, flags.value());
            if v["mean_check"].is_object() {
                underlay(
                    &mut v,
                    "mean_check",
                    json!({"runs": 2000, "threshold": 0.01, "reference": "continuous"}),
                );
            }
            v["params"]["seed"] = json!(seed);
            v
        }
        Command::Cbm(a) => {
            if a.n.is_some() || a.x0.is_some() {
                flags.set(
                    "config.initial",
                    json!([[a.x0.unwrap_or(0.0), a.n.unwrap_or(500) as f64]]),
                );
            }
            flags.opt("config.h", &a.h);
            flags.opt("config.horizon", &a.horizon);
            flags.opt("config.pair_cutoff", &a.cutoff);
            flags.opt("replicas", &a.replicas);
            if let Some(w) = &a.window {
                flags.set("config.windows", json!([pair(w)?]));
            }
            flags.opt("config.report_times", &a.report_times);
            let mut v = json!({
                "config": cbm_defaults(seed),
                "replicas": 1,
            });
            v["config"]["windows"] = json!([["-inf", "inf"]]);
            merge(&mut v, file.body);
            merge(&mut v, flags.value());
            if v["config"]["report_times"].as_array().is_some_and(|r| r.is_empty()) {
                v["config"]["report_times"] = json!([v["config"]["horizon"]]);
            }
            v["config"]["seed"] = json!(seed);
            v
        }
        Command::Kingman(a) => {
            flags.opt("n", &a.n);
            flags.opt("horizon", &a.horizon);
            flags.opt("replicas", &a.replicas);
            flags.opt("times", &a.times);
            let mut v = json!({"n": 5000, "horizon": 0.1, "replicas": 1000});
            merge(&mut v, file.body);
            merge(&mut v, flags.value());
            if v.get("times").is_none_or(Value::is_null) {
                let horizon: f64 = serde_json::from_value(v["horizon"].clone())?;
                if !(horizon > 0.0) {
                    return Err(param("horizon must be positive"));
                }
                v["times"] = json!(log_times(horizon / 20.0, horizon, 12));
            }
            v
        }
        Command::Duality(a) => {
            let mode = a
                .mode
                .map(|m| match m {
                    DualityMode::Shiga => "shiga",
                    DualityMode::MeanCount => "mean_count",
                })
                .or_else(|| file.body.get("mode").and_then(Value::as_str).map(|s| match s {
                    "mean_count" => "mean_count",
                    _ => "shiga",
                }))
                .unwrap_or("shiga");
            flags.set("mode", json!(mode));
            if let Some(w) = &a.window {
                flags.set("window", pair(w)?);
            }
            if mode == "shiga" {
                if let Some(x) = &a.x {
                    flags.set("initial", to_value(&AtomicMeasure::from_positions(x)?));
                }
                flags.opt("eps", &a.eps);
                if let Some(t) = &a.times {
                    flags.set("t", json!(t[0]));
                }
                flags.opt("runs_lhs", &a.runs);
                flags.opt("runs_rhs", &a.runs);
                flags.opt("h", &a.h);
                let mut v = json!({
                    "mode": "shiga",
                    "initial": [[-1.0, 1.0], [0.0, 1.0], [1.0, 1.0]],
                    "window": [-0.5, 0.5],
                    "eps": 0.2,
                    "t": 0.25,
                    "runs_lhs": 2000,
                    "runs_rhs": 2000,
                    "seed": seed,
                    "h": 1e-3,
                    "pair_cutoff": 6.0,
                    "offset_jitter": 1e-9,
                    "spde": spde_defaults(seed),
                });
                merge(&mut v, file.body);
                merge(&mut v, flags.value());
                v["seed"] = json!(seed);
                v["spde"]["seed"] = json!(seed);
                v
            } else {
                if let Some(n) = a.n {
                    flags.set("cbm.initial", json!([[0.0, n as f64]]));
                }
                flags.opt("cbm.h", &a.h);
                flags.opt("times", &a.times);
                flags.opt("replicas", &a.runs);
                let mut v = json!({
                    "mode": "mean_count",
                    "cbm": cbm_defaults(seed),
                    "trace": to_value(&trace_preset("point", 0)?),
                    "window": ["-inf", "inf"],
                    "replicas": 200,
                });
                merge(&mut v, file.body);
                merge(&mut v, flags.value());
                if v.get("times").is_none_or(Value::is_null) {
                    let h: f64 = serde_json::from_value(v["cbm"]["h"].clone())?;
                    if !(h > 0.0) {
                        return Err(param("time step must be positive"));
                    }
                    let t: Vec<f64> =
                        log_times(0.01, 0.3, 8).into_iter().map(|t| snap(t, h)).collect();
                    v["times"] = json!(t);
                }
                let (lo, hi) = extent(&times_of(&v, "times")?);
                underlay(&mut v, "pde", to_value(&PdeParams::for_time_scale(lo, hi)));
                v["cbm"]["seed"] = json!(seed);
                v
            }
        }
        Command::Rates(a) => {
            let case = a
                .case
                .map(RateCaseArg::tag)
                .or_else(|| file.body.get("case").and_then(Value::as_str).map(|s| match s {
                    "interval" => "interval",
                    "cantor" => "cantor",
                    "c1" => "c1",
                    _ => "finite_set",
                }))
                .unwrap_or("finite_set");
            flags.set("case", json!(case));
            flags.opt("tolerance", &a.tolerance);
            flags.opt("t_check", &a.t_check);
            let mut v = match case {
                "finite_set" => {
                    flags.opt("points", &a.points);
                    flags.opt("c1", &a.c1);
                    json!({"points": [0.0, 10.0], "t_check": 1e-3, "tolerance": 0.03, "c1": c1_pinned()})
                }
                "interval" => {
                    if let Some(i) = &a.interval {
                        pair(i)?;
                        flags.set("a", json!(i[0]));
                        flags.set("b", json!(i[1]));
                    }
                    json!({"a": 0.0, "b": 1.0, "t_check": 1e-3, "tolerance": 0.05})
                }
                "cantor" => {
                    flags.opt("depth", &a.depth);
                    if let Some(w) = &a.window {
                        flags.set("window", pair(w)?);
                    }
                    json!({"depth": 8, "window": [1e-3, 1e-1], "points": 9, "tolerance": 0.05})
                }
                _ => {
                    flags.opt("levels", &a.levels);
                    json!({"params": to_value(&c1_reference().params), "levels": [0, 1]})
                }
            };
            v["case"] = json!(case);
            merge(&mut v, file.body);
            merge(&mut v, flags.value());
            let base = match case {
                "finite_set" | "interval" => {
                    let t: f64 = serde_json::from_value(v["t_check"].clone())?;
                    (t > 0.0).then(|| PdeParams::for_time_scale(t, t))
                }
                "cantor" => {
                    let w: (f64, f64) = serde_json::from_value(v["window"].clone())?;
                    (w.0 > 0.0 && w.1 > w.0).then(|| PdeParams::for_time_scale(w.0, w.1))
                }
                _ => None,
            };
            if case != "c1" {
                let base = base.ok_or_else(|| param("rate check times must be positive"))?;
                underlay(&mut v, "params", to_value(&base));
            }
            v
        }
        Command::Cantor(a) => {
            flags.opt("depth", &a.depth);
            flags.opt("radii", &a.radii);
            let radii: Vec<f64> =
                log_times(3f64.powi(-10), 3f64.powi(-3), 8).into_iter().rev().collect();
            let mut v = json!({"depth": 12, "radii": radii});
            merge(&mut v, file.body);
            merge(&mut v, flags.value());
            v
        }
        Command::Reproduce(_) => unreachable!(),
    };
    let config: RunConfig = serde_json::from_value(json!({
        "seed": seed,
        "format": format,
        "command": name,
        "run": v,
    }))?;
    Ok((config, common.out.clone(), report))
}
