//! Run specifications in TOML.
//!
//! Keys are checked strictly before deserialization so a typo anywhere in
//! the file is reported as a single line naming the full key path.

use crate::clan::ClanLimits;
use crate::model::{Model, ModelError, Window};
use crate::models::area::Grain;
use crate::models::loss::LengthLaw;
use crate::models::{
    AreaModel, ContourModel, LossModel, PairwiseModel, RandomClusterModel, ToyModel,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config error: unknown key `{0}`")]
    UnknownKey(String),
    #[error("config error: `{path}` {message}")]
    Invalid { path: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    ToyHardcore {
        entries: Vec<(String, f64)>,
        #[serde(default)]
        pairs: Vec<(String, String)>,
    },
    ToyFree {
        entries: Vec<(String, f64)>,
    },
    Contour {
        beta: f64,
    },
    RandomCluster {
        p: f64,
        q: f64,
        width: usize,
        height: usize,
    },
    Area {
        kappa: f64,
        phi: f64,
        grain: String,
        size: f64,
    },
    Pairwise {
        rate: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta2: Option<f64>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        hardcore: bool,
        radius: f64,
    },
    Loss {
        rate: f64,
        capacity: u32,
        length: LengthSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LengthSpec {
    Fixed { len: f64 },
    Uniform { max: f64 },
    TruncExp { mu: f64, cut: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    pub max_depth: u64,
    pub max_size: usize,
    pub size_cutoff: usize,
    pub multiplicity_cap: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_depth: 1000,
            max_size: 100_000,
            size_cutoff: 10,
            multiplicity_cap: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub seed: u64,
    pub n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    pub oracle_margin: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            seed: 0,
            n: 100,
            out: None,
            oracle_margin: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub model: ModelSpec,
    pub window: Window,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub run: RunSettings,
}

const TOP_KEYS: &[&str] = &["model", "window", "limits", "run"];
const LIMITS_KEYS: &[&str] = &["max_depth", "max_size", "size_cutoff", "multiplicity_cap"];
const RUN_KEYS: &[&str] = &["seed", "n", "out", "oracle_margin"];

fn model_keys(kind: &str) -> Option<&'static [&'static str]> {
    match kind {
        "toy-hardcore" => Some(&["kind", "entries", "pairs"]),
        "toy-free" => Some(&["kind", "entries"]),
        "contour" => Some(&["kind", "beta"]),
        "random-cluster" => Some(&["kind", "p", "q", "width", "height"]),
        "area" => Some(&["kind", "kappa", "phi", "grain", "size"]),
        "pairwise" => Some(&["kind", "rate", "beta2", "hardcore", "radius"]),
        "loss" => Some(&["kind", "rate", "capacity", "length"]),
        _ => None,
    }
}

fn length_keys(kind: &str) -> Option<&'static [&'static str]> {
    match kind {
        "fixed" => Some(&["kind", "len"]),
        "uniform" => Some(&["kind", "max"]),
        "trunc-exp" => Some(&["kind", "mu", "cut"]),
        _ => None,
    }
}

fn window_keys(kind: &str) -> Option<&'static [&'static str]> {
    match kind {
        "all" => Some(&["kind"]),
        "sites" => Some(&["kind", "ids"]),
        "interval" => Some(&["kind", "lo", "hi"]),
        "box2" | "cells" => Some(&["kind", "x0", "y0", "x1", "y1"]),
        _ => None,
    }
}

fn table_kind<'a>(
    table: &'a toml::value::Table,
    path: &str,
) -> Result<&'a str, ConfigError> {
    table
        .get("kind")
        .and_then(|v| v.as_str())
        .ok_or_else(|| ConfigError::Invalid {
            path: format!("{path}.kind"),
            message: "must be a string naming the kind".to_string(),
        })
}

fn check_keys(
    table: &toml::value::Table,
    allowed: &[&str],
    path: &str,
) -> Result<(), ConfigError> {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(format!("{path}.{key}")));
        }
    }
    Ok(())
}

fn as_table<'a>(value: &'a toml::Value, path: &str) -> Result<&'a toml::value::Table, ConfigError> {
    value.as_table().ok_or_else(|| ConfigError::Invalid {
        path: path.to_string(),
        message: "must be a table".to_string(),
    })
}

fn strict_check(root: &toml::value::Table) -> Result<(), ConfigError> {
    for key in root.keys() {
        if !TOP_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
    }
    for required in ["model", "window"] {
        if !root.contains_key(required) {
            return Err(ConfigError::Invalid {
                path: required.to_string(),
                message: "section is required".to_string(),
            });
        }
    }
    let model = as_table(root.get("model").expect("checked"), "model")?;
    let kind = table_kind(model, "model")?;
    let allowed = model_keys(kind).ok_or_else(|| ConfigError::Invalid {
        path: "model.kind".to_string(),
        message: format!("unknown model kind `{kind}`"),
    })?;
    check_keys(model, allowed, "model")?;
    if kind == "loss" {
        if let Some(length) = model.get("length") {
            let length = as_table(length, "model.length")?;
            let lkind = table_kind(length, "model.length")?;
            let allowed = length_keys(lkind).ok_or_else(|| ConfigError::Invalid {
                path: "model.length.kind".to_string(),
                message: format!("unknown length kind `{lkind}`"),
            })?;
            check_keys(length, allowed, "model.length")?;
        }
    }
    let window = as_table(root.get("window").expect("checked"), "window")?;
    let wkind = table_kind(window, "window")?;
    let allowed = window_keys(wkind).ok_or_else(|| ConfigError::Invalid {
        path: "window.kind".to_string(),
        message: format!("unknown window kind `{wkind}`"),
    })?;
    check_keys(window, allowed, "window")?;
    if let Some(limits) = root.get("limits") {
        check_keys(as_table(limits, "limits")?, LIMITS_KEYS, "limits")?;
    }
    if let Some(run) = root.get("run") {
        check_keys(as_table(run, "run")?, RUN_KEYS, "run")?;
    }
    Ok(())
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl RunSpec {
    pub fn parse(text: &str) -> Result<RunSpec, ConfigError> {
        let value: toml::Value =
            text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(one_line(&e.to_string())))?;
        let table = value
            .as_table()
            .ok_or_else(|| ConfigError::Parse("top level must be a table".to_string()))?;
        strict_check(table)?;
        value
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(one_line(&e.to_string())))
    }

    pub fn load(path: &std::path::Path) -> Result<RunSpec, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::Parse(format!("cannot read {}: {e}", path.display()))
        })?;
        RunSpec::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("serializable spec")
    }

    pub fn model_kind(&self) -> &'static str {
        match self.model {
            ModelSpec::ToyHardcore { .. } => "toy-hardcore",
            ModelSpec::ToyFree { .. } => "toy-free",
            ModelSpec::Contour { .. } => "contour",
            ModelSpec::RandomCluster { .. } => "random-cluster",
            ModelSpec::Area { .. } => "area",
            ModelSpec::Pairwise { .. } => "pairwise",
            ModelSpec::Loss { .. } => "loss",
        }
    }

    pub fn build_model(&self) -> Result<Box<dyn Model>, ModelError> {
        match &self.model {
            ModelSpec::ToyHardcore { entries, pairs } => {
                let e: Vec<(&str, f64)> = entries.iter().map(|(s, w)| (s.as_str(), *w)).collect();
                let p: Vec<(&str, &str)> =
                    pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
                Ok(Box::new(ToyModel::hardcore(&e, &p)?))
            }
            ModelSpec::ToyFree { entries } => {
                let e: Vec<(&str, f64)> = entries.iter().map(|(s, w)| (s.as_str(), *w)).collect();
                Ok(Box::new(ToyModel::poisson(&e)?))
            }
            ModelSpec::Contour { beta } => {
                Ok(Box::new(ContourModel::new(*beta, self.limits.size_cutoff)?))
            }
            ModelSpec::RandomCluster { p, q, width, height } => {
                let side = |v: usize| {
                    u32::try_from(v)
                        .map_err(|_| ModelError::BadParameter(format!("grid side {v} too large")))
                };
                let grid = crate::models::animal::Grid::new(side(*width)?, side(*height)?)?;
                Ok(Box::new(RandomClusterModel::new(*p, *q, grid)?))
            }
            ModelSpec::Area { kappa, phi, grain, size } => {
                let grain = match grain.as_str() {
                    "disc" => Grain::Disc { r: *size },
                    "square" => Grain::Square { side: *size },
                    other => {
                        return Err(ModelError::BadParameter(format!(
                            "grain must be `disc` or `square`, got `{other}`"
                        )))
                    }
                };
                Ok(Box::new(AreaModel::new(*kappa, *phi, grain)?))
            }
            ModelSpec::Pairwise {
                rate,
                beta2,
                hardcore,
                radius,
            } => {
                if *hardcore {
                    if beta2.is_some() {
                        return Err(ModelError::BadParameter(
                            "give either beta2 or hardcore = true, not both".to_string(),
                        ));
                    }
                    Ok(Box::new(PairwiseModel::hardcore(*rate, *radius)?))
                } else {
                    let b = beta2.ok_or_else(|| {
                        ModelError::BadParameter(
                            "pairwise model needs beta2 or hardcore = true".to_string(),
                        )
                    })?;
                    Ok(Box::new(PairwiseModel::new(*rate, b, *radius)?))
                }
            }
            ModelSpec::Loss {
                rate,
                capacity,
                length,
            } => {
                let law = match length {
                    LengthSpec::Fixed { len } => LengthLaw::Fixed { len: *len },
                    LengthSpec::Uniform { max } => LengthLaw::Uniform { max: *max },
                    LengthSpec::TruncExp { mu, cut } => LengthLaw::TruncExp {
                        mu: *mu,
                        cut: *cut,
                    },
                };
                Ok(Box::new(LossModel::new(*rate, *capacity, law)?))
            }
        }
    }

    pub fn clan_limits(&self) -> ClanLimits {
        ClanLimits {
            max_draws: self.limits.max_depth,
            max_cylinders: self.limits.max_size,
        }
    }

    /// Window enlarged by a margin on every side, for oracle searches.
    pub fn dilated_window(&self, margin: f64) -> Window {
        match &self.window {
            Window::All => Window::All,
            Window::Sites { ids } => Window::Sites { ids: ids.clone() },
            Window::Interval { lo, hi } => Window::Interval {
                lo: lo - margin,
                hi: hi + margin,
            },
            Window::Box2 { x0, y0, x1, y1 } => Window::Box2 {
                x0: x0 - margin,
                y0: y0 - margin,
                x1: x1 + margin,
                y1: y1 + margin,
            },
            Window::Cells { x0, y0, x1, y1 } => {
                let m = margin.ceil() as i32;
                Window::Cells {
                    x0: x0 - m,
                    y0: y0 - m,
                    x1: x1 + m,
                    y1: y1 + m,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"
[model]
kind = "toy-hardcore"
entries = [["a", 0.4], ["b", 0.4]]
pairs = [["a", "b"]]

[window]
kind = "all"

[run]
seed = 7
n = 50
"#;

    #[test]
    fn parses_and_builds_a_toy_spec() {
        let spec = RunSpec::parse(TOY).unwrap();
        assert_eq!(spec.run.seed, 7);
        assert_eq!(spec.run.n, 50);
        assert_eq!(spec.limits.max_depth, 1000);
        assert_eq!(spec.limits.multiplicity_cap, 6);
        let model = spec.build_model().unwrap();
        assert_eq!(model.name(), "toy-hardcore");
    }

    #[test]
    fn round_trips_through_toml() {
        let specs = [
            TOY.to_string(),
            r#"
[model]
kind = "loss"
rate = 0.2
capacity = 1

[model.length]
kind = "fixed"
len = 1.0

[window]
kind = "interval"
lo = -2.0
hi = 2.0

[limits]
max_depth = 5000
"#
            .to_string(),
            r#"
[model]
kind = "area"
kappa = 0.05
phi = 0.5
grain = "disc"
size = 1.0

[window]
kind = "box2"
x0 = 0.0
y0 = 0.0
x1 = 2.0
y1 = 2.0
"#
            .to_string(),
        ];
        for text in specs {
            let spec = RunSpec::parse(&text).unwrap();
            let rendered = spec.to_toml();
            let again = RunSpec::parse(&rendered).unwrap();
            assert_eq!(spec, again, "round trip changed the spec:\n{rendered}");
        }
    }

    #[test]
    fn unknown_keys_are_named_with_their_path() {
        let bad = TOY.replace("entries", "entrees");
        match RunSpec::parse(&bad) {
            Err(ConfigError::UnknownKey(path)) => assert_eq!(path, "model.entrees"),
            other => panic!("expected unknown key, got {other:?}"),
        }
        let bad = TOY.replace("seed = 7", "sede = 7");
        match RunSpec::parse(&bad) {
            Err(ConfigError::UnknownKey(path)) => assert_eq!(path, "run.sede"),
            other => panic!("expected unknown key, got {other:?}"),
        }
        let bad = format!("{TOY}\n[extra]\nx = 1\n");
        assert!(matches!(RunSpec::parse(&bad), Err(ConfigError::UnknownKey(p)) if p == "extra"));
    }

    #[test]
    fn duplicate_keys_fail_to_parse() {
        let bad = format!("{TOY}\n[run]\nseed = 9\n");
        assert!(matches!(RunSpec::parse(&bad), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn positive_pair_exponent_is_rejected_with_a_reason() {
        let text = r#"
[model]
kind = "pairwise"
rate = 0.5
beta2 = 0.3
radius = 1.0

[window]
kind = "box2"
x0 = 0.0
y0 = 0.0
x1 = 1.0
y1 = 1.0
"#;
        let spec = RunSpec::parse(text).unwrap();
        match spec.build_model() {
            Err(ModelError::BadParameter(msg)) => {
                assert!(msg.contains("beta2"), "message: {msg}")
            }
            other => panic!("expected rejection, got {:?}", other.map(|m| m.name())),
        }
    }

    #[test]
    fn missing_sections_and_bad_kinds_are_reported() {
        assert!(matches!(
            RunSpec::parse("[model]\nkind = \"toy-free\"\nentries = [[\"a\", 0.5]]\n"),
            Err(ConfigError::Invalid { path, .. }) if path == "window"
        ));
        let bad = TOY.replace("toy-hardcore", "toy-hadrcore");
        assert!(matches!(
            RunSpec::parse(&bad),
            Err(ConfigError::Invalid { path, .. }) if path == "model.kind"
        ));
    }

    #[test]
    fn every_model_kind_builds() {
        let cases = [
            (
                r#"
[model]
kind = "contour"
beta = 2.0

[window]
kind = "cells"
x0 = 0
y0 = 0
x1 = 4
y1 = 4

[limits]
size_cutoff = 6
"#,
                "contour",
            ),
            (
                r#"
[model]
kind = "random-cluster"
p = 0.5
q = 2.0
width = 2
height = 2

[window]
kind = "all"
"#,
                "random-cluster",
            ),
            (
                r#"
[model]
kind = "pairwise"
rate = 0.5
hardcore = true
radius = 0.3

[window]
kind = "box2"
x0 = 0.0
y0 = 0.0
x1 = 2.0
y1 = 2.0
"#,
                "pairwise",
            ),
            (
                r#"
[model]
kind = "toy-free"
entries = [["a", 0.5]]

[window]
kind = "all"
"#,
                "toy-free",
            ),
        ];
        for (text, kind) in cases {
            let spec = RunSpec::parse(text).unwrap();
            assert_eq!(spec.model_kind(), kind);
            let model = spec.build_model().unwrap();
            assert!(model.check_window(&spec.window).is_ok());
        }
    }

    #[test]
    fn dilation_expands_each_window_kind() {
        let spec = RunSpec::parse(TOY).unwrap();
        assert_eq!(spec.dilated_window(3.0), Window::All);
        let mut boxed = spec.clone();
        boxed.window = Window::Interval { lo: -1.0, hi: 1.0 };
        assert_eq!(
            boxed.dilated_window(2.0),
            Window::Interval { lo: -3.0, hi: 3.0 }
        );
        boxed.window = Window::Cells {
            x0: 0,
            y0: 0,
            x1: 4,
            y1: 4,
        };
        assert_eq!(
            boxed.dilated_window(2.5),
            Window::Cells {
                x0: -3,
                y0: -3,
                x1: 7,
                y1: 7
            }
        );
    }
}
