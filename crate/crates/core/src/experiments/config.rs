use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::montecarlo::Sampler;
use crate::signal::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GaussRate,
    FirstMistake,
    TimeToLearn,
    UpsetTail,
    RateTarget,
    MistakeCurve,
    BaselineCompare,
    OdeCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::GaussRate,
        ExperimentKind::FirstMistake,
        ExperimentKind::TimeToLearn,
        ExperimentKind::UpsetTail,
        ExperimentKind::RateTarget,
        ExperimentKind::MistakeCurve,
        ExperimentKind::BaselineCompare,
        ExperimentKind::OdeCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::GaussRate => "gauss-rate",
            ExperimentKind::FirstMistake => "first-mistake",
            ExperimentKind::TimeToLearn => "time-to-learn",
            ExperimentKind::UpsetTail => "upset-tail",
            ExperimentKind::RateTarget => "rate-target",
            ExperimentKind::MistakeCurve => "mistake-curve",
            ExperimentKind::BaselineCompare => "baseline-compare",
            ExperimentKind::OdeCheck => "ode-check",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Runs without random trials.
    pub fn is_deterministic(self) -> bool {
        matches!(
            self,
            ExperimentKind::GaussRate | ExperimentKind::RateTarget | ExperimentKind::OdeCheck
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// State the trials run under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditioningSpec {
    #[default]
    Plus,
    Minus,
    /// Draw theta from the prior per trial.
    Prior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerSpec {
    Literal,
    #[default]
    Thinned,
}

impl From<SamplerSpec> for Sampler {
    fn from(s: SamplerSpec) -> Self {
        match s {
            SamplerSpec::Literal => Sampler::Literal,
            SamplerSpec::Thinned => Sampler::Thinned,
        }
    }
}

/// Generator for a RateTarget table Q(-1), Q(0), ..., Q(length).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QFormula {
    /// Q(x) = 1 / log(x + e).
    InverseLog { length: usize },
    /// Q(x) = (x + shift)^-power.
    InversePower { length: usize, shift: f64, power: f64 },
}

impl QFormula {
    pub fn table(&self) -> Result<Vec<f64>> {
        let (len, q): (usize, Box<dyn Fn(f64) -> f64>) = match *self {
            QFormula::InverseLog { length } => (length, Box::new(|x: f64| 1.0 / (x + std::f64::consts::E).ln())),
            QFormula::InversePower { length, shift, power } => {
                if !(shift > 1.0 && power > 0.0) {
                    return Err(Error::validation("q_formula", "needs shift > 1 and power > 0"));
                }
                (length, Box::new(move |x: f64| (x + shift).powf(-power)))
            }
        };
        if len == 0 {
            return Err(Error::validation("q_formula.length", "must be at least 1"));
        }
        Ok((-1..=len as i64).map(|x| q(x as f64)).collect())
    }
}

/// Target rate r_t for the rate-target experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateSpec {
    /// t / log t.
    TOverLogT,
    /// t^exponent.
    Power { exponent: f64 },
}

impl Default for RateSpec {
    fn default() -> Self {
        RateSpec::TOverLogT
    }
}

impl RateSpec {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            RateSpec::TOverLogT => t / t.ln(),
            RateSpec::Power { exponent } => t.powf(exponent),
        }
    }
}

/// Synthetic tail for the ode-check experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailSpec {
    /// G(-x) = e^-x; f(t) = log(t + c).
    Exponential { c: f64 },
    /// G(-x) = x^-k; f(t) = ((k+1) t + c)^(1/(k+1)).
    Polynomial { k: f64, c: f64 },
}

/// A validated experiment configuration with defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelSpec,
    pub horizon: u64,
    pub trials: u64,
    pub master_seed: u64,
    pub prior: f64,
    pub checkpoints: Vec<u64>,
    pub output_dir: PathBuf,
    pub conditioning: ConditioningSpec,
    pub sampler: SamplerSpec,
    /// first-mistake: horizon of the Monte Carlo cross-check.
    pub mc_horizon: u64,
    /// time-to-learn: horizons evaluated on the same trajectories.
    pub ttl_horizons: Vec<u64>,
    /// gauss-rate: eta of the upper envelope.
    pub eta_upper: f64,
    pub rate: RateSpec,
    pub tail: Option<TailSpec>,
    /// The document as given, after command-line overrides.
    #[serde(skip)]
    pub document: Value,
}

/// Raw document keys after the per-key checks; `deny_unknown_fields` catches
/// typos.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)] // the first three are read from the document directly
struct RawConfig {
    experiment: String,
    model: Value,
    horizon: u64,
    #[serde(default)]
    trials: Option<u64>,
    #[serde(default)]
    master_seed: u64,
    #[serde(default)]
    prior: Option<f64>,
    #[serde(default)]
    checkpoints: Option<Vec<u64>>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    conditioning: ConditioningSpec,
    #[serde(default)]
    sampler: SamplerSpec,
    #[serde(default)]
    mc_horizon: Option<u64>,
    #[serde(default)]
    ttl_horizons: Option<Vec<u64>>,
    #[serde(default)]
    eta_upper: Option<f64>,
    #[serde(default)]
    rate: Option<RateSpec>,
    #[serde(default)]
    tail: Option<TailSpec>,
}

/// {1, 2, 5} x 10^j up to `max`, with `max` itself appended.
pub fn default_checkpoints(max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for m in [1, 2, 5] {
            let t = decade.saturating_mul(m);
            if t > max {
                break 'outer;
            }
            out.push(t);
        }
        match decade.checked_mul(10) {
            Some(d) => decade = d,
            None => break,
        }
    }
    if out.last() != Some(&max) {
        out.push(max);
    }
    out
}

/// Powers of ten from 100 up to `horizon`, plus `horizon`.
pub fn default_ttl_horizons(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (2..20).map(|j| 10u64.pow(j)).take_while(|&h| h <= horizon).collect();
    if out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::validation(key, "is required"))
}

fn positive_int(v: &Value, key: &str) -> Result<u64> {
    match v.as_u64() {
        Some(n) if n >= 1 => Ok(n),
        _ => Err(Error::validation(key, format!("must be a positive integer, got {v}"))),
    }
}

fn check_increasing(times: &[u64], max: u64, key: &str) -> Result<()> {
    if times.is_empty() || times[0] == 0 || times.windows(2).any(|w| w[1] <= w[0]) || *times.last().unwrap() > max {
        return Err(Error::validation(
            key,
            format!("must be a nonempty strictly increasing list within [1, {max}]"),
        ));
    }
    Ok(())
}

/// Expands a `q_formula` into `q_table` and checks the family-specific keys.
fn resolve_model(model: &Value) -> Result<ModelSpec> {
    let obj = model
        .as_object()
        .ok_or_else(|| Error::validation("model", "must be an object"))?;
    let family = obj
        .get("family")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::validation("model.family", "is required"))?;
    let mut obj = obj.clone();
    match family {
        "gaussian" | "polytail" => {}
        "ratetarget" => {
            if let Some(f) = obj.remove("q_formula") {
                if obj.contains_key("q_table") {
                    return Err(Error::validation("q_table", "give either q_table or q_formula, not both"));
                }
                let formula: QFormula =
                    serde_json::from_value(f).map_err(|e| Error::validation("q_formula", e.to_string()))?;
                obj.insert("q_table".into(), formula.table()?.into());
            }
            if !obj.contains_key("q_table") {
                return Err(Error::validation("q_table", "a ratetarget model needs a Q table"));
            }
        }
        other => {
            return Err(Error::validation(
                "model.family",
                format!("unknown family '{other}'; expected gaussian, polytail or ratetarget"),
            ))
        }
    }
    serde_json::from_value(Value::Object(obj)).map_err(|e| Error::validation("model", e.to_string()))
}

impl ExperimentConfig {
    /// Parses and validates a JSON document.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::validation("config", e.to_string()))?;
        Self::from_value(doc)
    }

    pub fn from_value(doc: Value) -> Result<Self> {
        let obj = doc
            .as_object()
            .ok_or_else(|| Error::validation("config", "must be a JSON object"))?;

        let name = field(obj, "experiment")?;
        let experiment = name
            .as_str()
            .and_then(ExperimentKind::from_name)
            .ok_or_else(|| {
                let known: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                Error::validation(
                    "experiment",
                    format!("unknown experiment {name}; expected one of {}", known.join(", ")),
                )
            })?;
        let model = resolve_model(field(obj, "model")?)?;
        let horizon = positive_int(field(obj, "horizon")?, "horizon")?;
        if let Some(v) = obj.get("trials") {
            positive_int(v, "trials")?;
        }
        if let Some(v) = obj.get("prior") {
            match v.as_f64() {
                Some(p) if p > 0.0 && p < 1.0 => {}
                _ => return Err(Error::validation("prior", format!("must lie in (0, 1), got {v}"))),
            }
        }

        let raw: RawConfig = serde_json::from_value(doc.clone()).map_err(|e| Error::validation("config", e.to_string()))?;
        let trials = raw.trials.unwrap_or(if experiment.is_deterministic() { 1 } else { 1000 });

        let checkpoints = match raw.checkpoints {
            Some(c) => {
                check_increasing(&c, horizon, "checkpoints")?;
                c
            }
            None => default_checkpoints(horizon),
        };
        let mc_horizon = raw.mc_horizon.unwrap_or(horizon.min(1000));
        if mc_horizon == 0 || mc_horizon > horizon {
            return Err(Error::validation("mc_horizon", format!("must lie in [1, {horizon}]")));
        }
        let ttl_horizons = match raw.ttl_horizons {
            Some(h) => {
                check_increasing(&h, horizon, "ttl_horizons")?;
                h
            }
            None => default_ttl_horizons(horizon),
        };
        let eta_upper = raw.eta_upper.unwrap_or(0.1);
        if !(eta_upper > 0.0 && eta_upper < 1.0) {
            return Err(Error::validation("eta_upper", format!("must lie in (0, 1), got {eta_upper}")));
        }

        let family = model.family();
        let wanted = match experiment {
            ExperimentKind::GaussRate => Some("gaussian"),
            ExperimentKind::RateTarget => Some("ratetarget"),
            _ => None,
        };
        if let Some(w) = wanted {
            if family != w {
                return Err(Error::validation(
                    "model.family",
                    format!("{experiment} needs a {w} model, got {family}"),
                ));
            }
        }
        if experiment == ExperimentKind::BaselineCompare && raw.conditioning == ConditioningSpec::Prior {
            return Err(Error::validation("conditioning", "baseline-compare runs under a fixed state"));
        }
        if experiment == ExperimentKind::UpsetTail && trials < crate::montecarlo::UPSET_TAIL_MIN_TRIALS {
            return Err(Error::validation(
                "trials",
                format!("upset-tail needs at least {}", crate::montecarlo::UPSET_TAIL_MIN_TRIALS),
            ));
        }
        if let Some(TailSpec::Polynomial { k, .. }) = raw.tail {
            if !(k > 0.0) {
                return Err(Error::validation("tail.k", "must be positive"));
            }
        }

        let output_dir = raw
            .output_dir
            .unwrap_or_else(|| PathBuf::from("results").join(experiment.name()));

        Ok(Self {
            experiment,
            model,
            horizon,
            trials,
            master_seed: raw.master_seed,
            prior: raw.prior.unwrap_or(0.5),
            checkpoints,
            output_dir,
            conditioning: raw.conditioning,
            sampler: raw.sampler,
            mc_horizon,
            ttl_horizons,
            eta_upper,
            rate: raw.rate.unwrap_or_default(),
            tail: raw.tail,
            document: doc,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Replaces the master seed in both the typed config and the document.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        if let Some(obj) = self.document.as_object_mut() {
            obj.insert("master_seed".into(), seed.into());
        }
        self
    }

    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output_dir = dir.into();
        self
    }

    /// SHA-256 of the document with sorted keys, excluding `output_dir`.
    pub fn hash(&self) -> String {
        let mut doc = self.document.clone();
        if let Some(obj) = doc.as_object_mut() {
            obj.remove("output_dir");
            obj.insert("master_seed".into(), self.master_seed.into());
        }
        hex(&Sha256::digest(doc.to_string().as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(e: Error) -> String {
        match e {
            Error::Validation { key, .. } => key,
            other => panic!("expected a validation error, got {other}"),
        }
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let c = ExperimentConfig::parse(
            r#"{"experiment":"gauss-rate","model":{"family":"gaussian","sigma":1.0},"horizon":1000000}"#,
        )
        .unwrap();
        assert_eq!(c.prior, 0.5);
        assert_eq!(c.checkpoints[..4], [1, 2, 5, 10]);
        assert_eq!(*c.checkpoints.last().unwrap(), 1_000_000);
        assert_eq!(c.conditioning, ConditioningSpec::Plus);
        assert_eq!(c.output_dir, PathBuf::from("results/gauss-rate"));
    }

    #[test]
    fn errors_name_the_key() {
        let base = r#""model":{"family":"gaussian","sigma":1.0},"horizon":10"#;
        let e = ExperimentConfig::parse(&format!(r#"{{"experiment":"mistake-curve",{base},"prior":1.5}}"#)).unwrap_err();
        assert_eq!(key_of(e), "prior");
        let e = ExperimentConfig::parse(&format!(r#"{{"experiment":"nope",{base}}}"#)).unwrap_err();
        assert_eq!(key_of(e), "experiment");
        let e = ExperimentConfig::parse(
            r#"{"experiment":"mistake-curve","model":{"family":"gaussian","sigma":1.0},"horizon":0}"#,
        )
        .unwrap_err();
        assert_eq!(key_of(e), "horizon");
        let e = ExperimentConfig::parse(r#"{"experiment":"rate-target","model":{"family":"ratetarget"},"horizon":10}"#)
            .unwrap_err();
        assert_eq!(key_of(e), "q_table");
        let e = ExperimentConfig::parse(r#"{"experiment":"gauss-rate","model":{"family":"cauchy"},"horizon":10}"#)
            .unwrap_err();
        assert_eq!(key_of(e), "model.family");
        let e = ExperimentConfig::parse(&format!(r#"{{"experiment":"gauss-rate",{base},"horizn":3}}"#)).unwrap_err();
        assert_eq!(key_of(e), "config");
    }

    #[test]
    fn q_formula_expands() {
        let c = ExperimentConfig::parse(
            r#"{"experiment":"rate-target","horizon":100,
                "model":{"family":"ratetarget","q_formula":{"kind":"inverse_log","length":50}}}"#,
        )
        .unwrap();
        match c.model {
            ModelSpec::Ratetarget { q_table, .. } => {
                assert_eq!(q_table.len(), 52);
                assert_eq!(q_table[1], 1.0);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn hash_ignores_output_dir_but_not_seed() {
        let doc = r#"{"experiment":"mistake-curve","model":{"family":"gaussian","sigma":1.0},"horizon":10}"#;
        let a = ExperimentConfig::parse(doc).unwrap();
        let b = a.clone().with_output_dir("/tmp/elsewhere");
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), a.clone().with_seed(5).hash());
    }

    #[test]
    fn checkpoint_grid() {
        assert_eq!(default_checkpoints(1), vec![1]);
        assert_eq!(default_checkpoints(30), vec![1, 2, 5, 10, 20, 30]);
        assert_eq!(default_ttl_horizons(100_000), vec![100, 1000, 10_000, 100_000]);
    }
}
