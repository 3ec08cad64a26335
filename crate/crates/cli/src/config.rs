//! JSON run configuration.
//!
//! A config is either a single experiment object
//! (`{"experiment": "kappa_scan", "model": "uniform", "n": 3, ...}`) or a
//! batch `{"seed": 7, "experiments": [ ... ]}`. Unknown fields are schema
//! violations. Parameters left out take the defaults used by `reproduce-all`.

use std::path::Path;

use recomb_core::ising::IsingModel;
use recomb_core::CrossoverLaw;
use serde::Deserialize;
use serde_json::Value;

use crate::{Error, Result};

/// Named crossover models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    #[serde(alias = "single-site")]
    SingleSite,
    #[serde(alias = "one-point")]
    OnePoint,
    Uniform,
    Bernoulli,
}

impl Model {
    /// The law on `n` sites; `q` is required for Bernoulli and rejected otherwise.
    pub fn law(self, q: Option<f64>, n: usize) -> Result<CrossoverLaw> {
        let law = match (self, q) {
            (Model::Bernoulli, Some(q)) => CrossoverLaw::bernoulli(n, q),
            (Model::Bernoulli, None) => return Err(Error::Config("model \"bernoulli\" needs a parameter q".into())),
            (_, Some(_)) => return Err(Error::Config(format!("parameter q only applies to bernoulli, not {self:?}"))),
            (Model::SingleSite, None) => CrossoverLaw::single_site(n),
            (Model::OnePoint, None) => CrossoverLaw::one_point(n),
            (Model::Uniform, None) => CrossoverLaw::uniform(n),
        };
        law.map_err(|e| Error::Config(e.to_string()))
    }
}

/// Reference product measure for sampled densities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    #[default]
    Uniform,
    /// A random product measure drawn from the experiment seed.
    Random,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaScanSpec {
    pub model: Model,
    pub q: Option<f64>,
    pub n: usize,
    /// Alphabet size per site; binary when absent.
    pub alphabet: Option<Vec<usize>>,
    #[serde(default)]
    pub measure: MeasureKind,
    #[serde(default = "defaults::scan_samples")]
    pub samples: usize,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpTestSpec {
    pub model: Model,
    pub q: Option<f64>,
    pub n_range: [usize; 2],
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaTightnessSpec {
    #[serde(default = "defaults::tightness_range")]
    pub n_range: [usize; 2],
    #[serde(default = "defaults::qs")]
    pub qs: Vec<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaValiditySpec {
    #[serde(default = "defaults::validity_samples")]
    pub samples: usize,
    #[serde(default = "defaults::validity_ns")]
    pub n_values: Vec<usize>,
    #[serde(default = "defaults::qs")]
    pub qs: Vec<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpUpperBoundSpec {
    #[serde(default = "defaults::exhaustive_n")]
    pub exhaustive_n: usize,
    #[serde(default = "defaults::fit_range")]
    pub fit_range: [usize; 2],
    /// Largest acceptable fitted constant C.
    #[serde(default = "defaults::c_cap")]
    pub c_cap: f64,
    #[serde(default = "defaults::qs")]
    pub qs: Vec<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyDecaySpec {
    #[serde(default = "defaults::decay_samples")]
    pub samples: usize,
    #[serde(default = "defaults::decay_n")]
    pub n: usize,
    #[serde(default = "defaults::decay_t_end")]
    pub t_end: f64,
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    #[serde(default = "defaults::discrete_steps")]
    pub discrete_steps: usize,
    #[serde(default = "defaults::exhaustive_n")]
    pub sharp_n: usize,
    #[serde(default = "defaults::qs")]
    pub qs: Vec<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralGapSpec {
    #[serde(default = "defaults::spectral_max_n")]
    pub max_n: usize,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShearerSpec {
    /// Random densities per number of sites.
    #[serde(default = "defaults::shearer_samples")]
    pub samples: usize,
    #[serde(default = "defaults::shearer_max_n")]
    pub max_n: usize,
    #[serde(default = "defaults::shearer_gammas")]
    pub gammas: Vec<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RqsAxiomsSpec {
    /// Random states per generator.
    #[serde(default = "defaults::axiom_samples")]
    pub samples: usize,
    #[serde(default = "defaults::betas")]
    pub betas: Vec<f64>,
    /// Step of the central difference for dH/dt.
    #[serde(default = "defaults::derivative_step")]
    pub step: f64,
    #[serde(default = "defaults::axiom_t_end")]
    pub t_end: f64,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingStructureSpec {
    #[serde(default = "defaults::starts")]
    pub starts: usize,
    #[serde(default = "defaults::dissipative_t_end")]
    pub t_end: f64,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearizationSpec {
    #[serde(default = "defaults::linear_samples")]
    pub samples: usize,
    #[serde(default = "defaults::linear_n")]
    pub n: usize,
    #[serde(default = "defaults::epsilons")]
    pub epsilons: [f64; 2],
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipativeDecaySpec {
    pub ising: IsingModel,
    #[serde(default = "defaults::single_site")]
    pub model: Model,
    pub q: Option<f64>,
    #[serde(default = "defaults::dissipative_t_end")]
    pub t_end: f64,
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjectureEvidenceSpec {
    pub ising: IsingModel,
    #[serde(default = "defaults::scan_samples")]
    pub samples: usize,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentSpec {
    KappaScan(KappaScanSpec),
    SharpTest(SharpTestSpec),
    DissipativeDecay(DissipativeDecaySpec),
    ConjectureEvidence(ConjectureEvidenceSpec),
    KappaTightness(KappaTightnessSpec),
    KappaValidity(KappaValiditySpec),
    SharpUpperBound(SharpUpperBoundSpec),
    EntropyDecay(EntropyDecaySpec),
    SpectralGap(SpectralGapSpec),
    Shearer(ShearerSpec),
    RqsAxioms(RqsAxiomsSpec),
    IsingStructure(IsingStructureSpec),
    Linearization(LinearizationSpec),
}

impl ExperimentSpec {
    /// Kebab-case name used for output files and check names.
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentSpec::KappaScan(_) => "kappa-scan",
            ExperimentSpec::SharpTest(_) => "sharp-test",
            ExperimentSpec::DissipativeDecay(_) => "dissipative-decay",
            ExperimentSpec::ConjectureEvidence(_) => "conjecture-evidence",
            ExperimentSpec::KappaTightness(_) => "kappa-tightness",
            ExperimentSpec::KappaValidity(_) => "kappa-validity",
            ExperimentSpec::SharpUpperBound(_) => "sharp-upper-bound",
            ExperimentSpec::EntropyDecay(_) => "entropy-decay",
            ExperimentSpec::SpectralGap(_) => "spectral-gap",
            ExperimentSpec::Shearer(_) => "shearer",
            ExperimentSpec::RqsAxioms(_) => "rqs-axioms",
            ExperimentSpec::IsingStructure(_) => "ising-structure",
            ExperimentSpec::Linearization(_) => "linearization",
        }
    }

    /// The experiment's own seed, if it sets one.
    pub fn seed(&self) -> Option<u64> {
        match self {
            ExperimentSpec::KappaScan(s) => s.seed,
            ExperimentSpec::SharpTest(s) => s.seed,
            ExperimentSpec::DissipativeDecay(s) => s.seed,
            ExperimentSpec::ConjectureEvidence(s) => s.seed,
            ExperimentSpec::KappaTightness(s) => s.seed,
            ExperimentSpec::KappaValidity(s) => s.seed,
            ExperimentSpec::SharpUpperBound(s) => s.seed,
            ExperimentSpec::EntropyDecay(s) => s.seed,
            ExperimentSpec::SpectralGap(s) => s.seed,
            ExperimentSpec::Shearer(s) => s.seed,
            ExperimentSpec::RqsAxioms(s) => s.seed,
            ExperimentSpec::IsingStructure(s) => s.seed,
            ExperimentSpec::Linearization(s) => s.seed,
        }
    }

    /// The default configuration of a named experiment, if every field has a default.
    pub fn default_for(name: &str) -> Option<Self> {
        let tag = name.replace('-', "_");
        serde_json::from_value(serde_json::json!({ "experiment": tag })).ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub experiments: Vec<ExperimentSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Batch {
    #[serde(default)]
    seed: u64,
    experiments: Vec<ExperimentSpec>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let config = match &value {
            Value::Object(map) if map.contains_key("experiments") => {
                let batch: Batch = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
                Config { seed: batch.seed, experiments: batch.experiments }
            }
            Value::Object(map) if map.contains_key("experiment") => {
                let spec: ExperimentSpec = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
                Config { seed: spec.seed().unwrap_or(0), experiments: vec![spec] }
            }
            _ => return Err(Error::Config("expected an object with \"experiment\" or \"experiments\"".into())),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Range checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        self.experiments.iter().try_for_each(validate_spec)
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn validate_spec(spec: &ExperimentSpec) -> Result<()> {
    let positive = |x: f64, what: &str| {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(bad(format!("{what} must be positive and finite, got {x}")))
        }
    };
    let qs_ok = |qs: &[f64]| -> Result<()> {
        for &q in qs {
            Model::Bernoulli.law(Some(q), 2)?;
        }
        Ok(())
    };
    match spec {
        ExperimentSpec::KappaScan(s) => {
            if !(2..=12).contains(&s.n) {
                return Err(bad(format!("kappa_scan needs 2 ≤ n ≤ 12, got {}", s.n)));
            }
            if let Some(a) = &s.alphabet {
                if a.len() != s.n || a.iter().any(|&k| k < 2) {
                    return Err(bad("alphabet must list n sizes, each at least 2"));
                }
            }
            s.model.law(s.q, s.n)?;
        }
        ExperimentSpec::SharpTest(s) => {
            let [lo, hi] = s.n_range;
            if !(2 <= lo && lo <= hi && hi <= recomb_core::inequality::sharp::SHARP_MAX_N) {
                return Err(bad(format!("n_range must satisfy 2 ≤ lo ≤ hi ≤ 40, got {:?}", s.n_range)));
            }
            s.model.law(s.q, lo)?;
        }
        ExperimentSpec::DissipativeDecay(s) => {
            positive(s.t_end, "t_end")?;
            positive(s.dt, "dt")?;
            s.model.law(s.q, s.ising.num_free().max(1))?;
        }
        ExperimentSpec::ConjectureEvidence(s) => {
            if s.ising.num_free() < 1 {
                return Err(bad("the Ising model needs a free vertex"));
            }
        }
        ExperimentSpec::KappaTightness(s) => {
            let [lo, hi] = s.n_range;
            if !(2 <= lo && lo <= hi && hi <= 12) {
                return Err(bad(format!("n_range must satisfy 2 ≤ lo ≤ hi ≤ 12, got {:?}", s.n_range)));
            }
            qs_ok(&s.qs)?;
        }
        ExperimentSpec::KappaValidity(s) => {
            if s.n_values.iter().any(|n| !(2..=8).contains(n)) {
                return Err(bad("n_values must lie in [2, 8]"));
            }
            qs_ok(&s.qs)?;
        }
        ExperimentSpec::SharpUpperBound(s) => {
            let [lo, hi] = s.fit_range;
            if !(2..=recomb_core::inequality::sharp::SHARP_DENSITY_MAX_N).contains(&s.exhaustive_n) {
                return Err(bad("exhaustive_n must lie in [2, 20]"));
            }
            if !(2 <= lo && lo <= hi && hi <= recomb_core::inequality::sharp::SHARP_MAX_N) {
                return Err(bad(format!("fit_range must satisfy 2 ≤ lo ≤ hi ≤ 40, got {:?}", s.fit_range)));
            }
            positive(s.c_cap, "c_cap")?;
            qs_ok(&s.qs)?;
        }
        ExperimentSpec::EntropyDecay(s) => {
            if !(2..=8).contains(&s.n) || !(2..=recomb_core::inequality::sharp::SHARP_DENSITY_MAX_N).contains(&s.sharp_n) {
                return Err(bad("n must lie in [2, 8] and sharp_n in [2, 20]"));
            }
            positive(s.t_end, "t_end")?;
            positive(s.dt, "dt")?;
            qs_ok(&s.qs)?;
        }
        ExperimentSpec::SpectralGap(s) => {
            if !(2..=8).contains(&s.max_n) {
                return Err(bad("max_n must lie in [2, 8]"));
            }
        }
        ExperimentSpec::Shearer(s) => {
            if !(2..=8).contains(&s.max_n) {
                return Err(bad("max_n must lie in [2, 8]"));
            }
            for &g in &s.gammas {
                positive(g, "gamma")?;
            }
        }
        ExperimentSpec::RqsAxioms(s) => {
            positive(s.step, "step")?;
            positive(s.t_end, "t_end")?;
            if s.betas.iter().any(|b| !b.is_finite()) {
                return Err(bad("betas must be finite"));
            }
        }
        ExperimentSpec::IsingStructure(s) => positive(s.t_end, "t_end")?,
        ExperimentSpec::Linearization(s) => {
            if !(2..=6).contains(&s.n) {
                return Err(bad("n must lie in [2, 6]"));
            }
            let [a, b] = s.epsilons;
            positive(a, "epsilon")?;
            positive(b, "epsilon")?;
            if a == b || a > 0.1 || b > 0.1 {
                return Err(bad("epsilons must be distinct and at most 0.1"));
            }
        }
    }
    Ok(())
}

mod defaults {
    use super::Model;

    pub fn scan_samples() -> usize {
        1000
    }
    pub fn tightness_range() -> [usize; 2] {
        [2, 6]
    }
    pub fn qs() -> Vec<f64> {
        vec![0.1, 0.25, 0.5]
    }
    pub fn validity_samples() -> usize {
        10_000
    }
    pub fn validity_ns() -> Vec<usize> {
        vec![3, 4, 5]
    }
    pub fn exhaustive_n() -> usize {
        8
    }
    pub fn fit_range() -> [usize; 2] {
        [20, 40]
    }
    pub fn c_cap() -> f64 {
        50.0
    }
    pub fn decay_samples() -> usize {
        100
    }
    pub fn decay_n() -> usize {
        4
    }
    pub fn decay_t_end() -> f64 {
        5.0
    }
    pub fn dt() -> f64 {
        0.01
    }
    pub fn discrete_steps() -> usize {
        10
    }
    pub fn spectral_max_n() -> usize {
        6
    }
    pub fn shearer_samples() -> usize {
        1000
    }
    pub fn shearer_max_n() -> usize {
        5
    }
    pub fn shearer_gammas() -> Vec<f64> {
        vec![0.25, 0.5, 1.0, 2.0, 4.0]
    }
    pub fn axiom_samples() -> usize {
        4
    }
    pub fn betas() -> Vec<f64> {
        vec![-0.5, 0.0, 0.5]
    }
    pub fn derivative_step() -> f64 {
        1e-3
    }
    pub fn axiom_t_end() -> f64 {
        2.0
    }
    pub fn starts() -> usize {
        50
    }
    pub fn dissipative_t_end() -> f64 {
        40.0
    }
    pub fn linear_samples() -> usize {
        100
    }
    pub fn linear_n() -> usize {
        3
    }
    pub fn epsilons() -> [f64; 2] {
        [1e-2, 1e-3]
    }
    pub fn single_site() -> Model {
        Model::SingleSite
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_experiment_form() {
        let c = Config::from_json(r#"{"experiment":"kappa_scan","model":"uniform","n":3,"samples":1000,"seed":7}"#)
            .unwrap();
        assert_eq!(c.seed, 7);
        match &c.experiments[0] {
            ExperimentSpec::KappaScan(s) => {
                assert_eq!(s.model, Model::Uniform);
                assert_eq!(s.samples, 1000);
                assert_eq!(s.measure, MeasureKind::Uniform);
            }
            other => panic!("parsed as {other:?}"),
        }
    }

    #[test]
    fn batch_form_and_empty_list() {
        let c = Config::from_json(r#"{"experiments":[]}"#).unwrap();
        assert!(c.experiments.is_empty());
        let c = Config::from_json(
            r#"{"seed":3,"experiments":[{"experiment":"sharp_test","model":"bernoulli","q":0.25,"n_range":[8,40]}]}"#,
        )
        .unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.experiments[0].name(), "sharp-test");
    }

    #[test]
    fn schema_violations() {
        for bad in [
            r#"{"experiment":"kappa_scan","model":"uniform","n":3,"bogus":1}"#,
            r#"{"experiment":"kappa_scan","model":"bernoulli","n":3}"#,
            r#"{"experiment":"kappa_scan","model":"bernoulli","q":0.7,"n":3}"#,
            r#"{"experiment":"kappa_scan","model":"uniform","q":0.2,"n":3}"#,
            r#"{"experiment":"kappa_scan","model":"two_point","n":3}"#,
            r#"{"experiment":"nope"}"#,
            r#"{"experiment":"sharp_test","model":"uniform","n_range":[8,41]}"#,
            r#"{"experiment":"linearization","epsilons":[0.01,0.01]}"#,
            r#"[1,2]"#,
            r#"{"seed":1}"#,
            "not json",
        ] {
            assert!(matches!(Config::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn ising_models_parse() {
        let c = Config::from_json(
            r#"{"experiment":"dissipative_decay","ising":{"n":3,"edges":[[0,1],[1,2]],"beta":0.5,"fields":[0.1,"+inf",0.0]}}"#,
        )
        .unwrap();
        match &c.experiments[0] {
            ExperimentSpec::DissipativeDecay(s) => assert_eq!(s.ising.num_free(), 2),
            other => panic!("parsed as {other:?}"),
        }
    }

    #[test]
    fn criterion_experiments_have_defaults() {
        for name in [
            "kappa-tightness",
            "kappa-validity",
            "sharp-upper-bound",
            "entropy-decay",
            "spectral-gap",
            "shearer",
            "rqs-axioms",
            "ising-structure",
            "linearization",
        ] {
            let spec = ExperimentSpec::default_for(name).unwrap_or_else(|| panic!("{name}"));
            assert_eq!(spec.name(), name);
        }
        assert!(ExperimentSpec::default_for("kappa-scan").is_none());
    }
}
