//! Experiment configuration file and the plan derived from it.
//!
//! Every random draw in an experiment descends from `seeds.master`:
//!
//! ```text
//! data      = seeds.data      or derive(master, tag("data"))
//! split     = seeds.split     or derive(master, tag("split"))
//! estimator = seeds.estimator or derive(master, tag("estimator"))
//! train set = derive(data, [tag(scenario), tag(scheme), tag("train")])
//! test set  = derive(data, [tag(scenario), tag(scheme), tag("test")])
//! ```
//!
//! The three data types of one scenario and scheme are derived from the same
//! raw scans.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::DataType;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, HyperParamGrid, ParamValue, TrainingOptions};
use crate::labeling::{GridGeometry, LabelScheme, RadialZones, SchemeKind};
use crate::modelsel::{ExperimentSettings, SplitSpec};
use crate::rng::{derive_seed, tag};
use crate::synth::{Environment, Scenario, TargetModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub master: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<u64>,
}

impl Seeds {
    pub fn data(&self) -> u64 {
        self.data.unwrap_or_else(|| derive_seed(self.master, &[tag("data")]))
    }

    pub fn split(&self) -> u64 {
        self.split.unwrap_or_else(|| derive_seed(self.master, &[tag("split")]))
    }

    pub fn estimator(&self) -> u64 {
        self.estimator
            .unwrap_or_else(|| derive_seed(self.master, &[tag("estimator")]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Labeling {
    #[serde(default)]
    pub simple4: RadialZones,
    #[serde(default)]
    pub grid10: GridGeometry,
}

impl Default for Labeling {
    fn default() -> Self {
        Self {
            simple4: RadialZones::default(),
            grid10: GridGeometry::default(),
        }
    }
}

impl Labeling {
    pub fn scheme(&self, kind: SchemeKind) -> LabelScheme {
        match kind {
            SchemeKind::Simple4 => LabelScheme::Simple4(self.simple4),
            SchemeKind::Grid10 => LabelScheme::Grid10(self.grid10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Generate {
    pub n_per_class: usize,
    pub test_n_per_class: usize,
    pub schemes: Vec<SchemeKind>,
    pub data_types: Vec<DataType>,
}

impl Default for Generate {
    fn default() -> Self {
        Self {
            n_per_class: 200,
            test_n_per_class: 100,
            schemes: vec![SchemeKind::Simple4, SchemeKind::Grid10],
            data_types: DataType::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Evaluation {
    pub train_fraction: f64,
    pub folds: usize,
    /// Short names (`LR`, `Per`, `kNN`, `SVM`, `DT`, `RF`, `ET`, `SGB`).
    pub estimators: Vec<String>,
}

impl Default for Evaluation {
    fn default() -> Self {
        Self {
            train_fraction: 0.10,
            folds: 5,
            estimators: EstimatorKind::ALL
                .iter()
                .map(|k| k.short_name().to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(rename = "scenario", default = "default_scenarios")]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub labeling: Labeling,
    #[serde(default)]
    pub target: TargetModel,
    #[serde(default)]
    pub generate: Generate,
    #[serde(default)]
    pub evaluation: Evaluation,
    /// Grid overrides keyed by estimator short name, then axis name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grids: BTreeMap<String, BTreeMap<String, Vec<ParamValue>>>,
    #[serde(default)]
    pub training: TrainingOptions,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            master: 2019,
            data: None,
            split: None,
            estimator: None,
        }
    }
}

fn default_scenarios() -> Vec<Scenario> {
    vec![Scenario::indoor(), Scenario::outdoor()]
}

fn default_output() -> PathBuf {
    PathBuf::from("uwb-out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seeds: Seeds::default(),
            output_dir: default_output(),
            scenarios: default_scenarios(),
            labeling: Labeling::default(),
            target: TargetModel::default(),
            generate: Generate::default(),
            evaluation: Evaluation::default(),
            grids: BTreeMap::new(),
            training: TrainingOptions::default(),
        }
    }
}

/// One dataset of the plan: a scenario, a labeling scheme and a data type.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanEntry {
    pub scenario: Scenario,
    pub scheme: LabelScheme,
    pub data_type: DataType,
}

impl PlanEntry {
    pub fn id(&self) -> String {
        format!(
            "{}_{}_{}",
            self.scenario.name,
            self.scheme.kind().name(),
            self.data_type.name()
        )
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.scenarios.is_empty() {
            return cfg_err("at least one [[scenario]] is required".into());
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            s.validate().map_err(|e| Error::Config(e.to_string()))?;
            if s.name.is_empty() || !s.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
                return cfg_err(format!(
                    "scenario.name '{}' must be non-empty ASCII letters, digits or '-'",
                    s.name
                ));
            }
            if self.scenarios[..i].iter().any(|o| o.name == s.name) {
                return cfg_err(format!("duplicate scenario name '{}'", s.name));
            }
        }
        let of = |env| self.scenarios.iter().filter(move |s| s.environment == env);
        for indoor in of(Environment::Indoor) {
            for outdoor in of(Environment::Outdoor) {
                if !(indoor.clutter_amplitude > outdoor.clutter_amplitude
                    && indoor.clutter_path_count > outdoor.clutter_path_count)
                {
                    return cfg_err(format!(
                        "indoor scenario '{}' must have more clutter (clutter_amplitude and \
                         clutter_path_count) than outdoor scenario '{}'",
                        indoor.name, outdoor.name
                    ));
                }
            }
        }
        for kind in [SchemeKind::Simple4, SchemeKind::Grid10] {
            self.labeling
                .scheme(kind)
                .validate()
                .map_err(|e| Error::Config(format!("labeling.{}: {e}", kind.name())))?;
        }
        self.target
            .validate()
            .map_err(|e| Error::Config(format!("target: {e}")))?;
        let g = &self.generate;
        if g.n_per_class < 2 || g.test_n_per_class < 1 {
            return cfg_err("generate.n_per_class must be >= 2 and generate.test_n_per_class >= 1".into());
        }
        if g.schemes.is_empty() || g.data_types.is_empty() {
            return cfg_err("generate.schemes and generate.data_types must be non-empty".into());
        }
        let e = &self.evaluation;
        if !(e.train_fraction > 0.0 && e.train_fraction < 1.0) {
            return cfg_err(format!(
                "evaluation.train_fraction must lie in (0, 1), got {}",
                e.train_fraction
            ));
        }
        if e.folds < 2 {
            return cfg_err(format!("evaluation.folds must be >= 2, got {}", e.folds));
        }
        self.estimator_kinds()?;
        self.grid_overrides()?;
        Ok(())
    }

    pub fn estimator_kinds(&self) -> Result<Vec<EstimatorKind>> {
        parse_estimators(&self.evaluation.estimators)
    }

    fn grid_overrides(&self) -> Result<Vec<(EstimatorKind, HyperParamGrid)>> {
        self.grids
            .iter()
            .map(|(name, axes)| {
                let kind = EstimatorKind::parse(name)
                    .ok_or_else(|| Error::Config(format!("grids.{name}: unknown estimator")))?;
                let mut ordered = Vec::new();
                for &axis in kind.axes() {
                    let values = axes.get(axis).ok_or_else(|| {
                        Error::Config(format!("grids.{name}: missing axis '{axis}'"))
                    })?;
                    ordered.push((axis.to_string(), values.clone()));
                }
                if let Some(extra) = axes.keys().find(|a| !kind.axes().contains(&a.as_str())) {
                    return Err(Error::Config(format!("grids.{name}: unknown axis '{extra}'")));
                }
                let grid = HyperParamGrid { axes: ordered };
                grid.validate_for(kind)
                    .map_err(|e| Error::Config(format!("grids.{name}: {e}")))?;
                Ok((kind, grid))
            })
            .collect()
    }

    /// Every (scenario, scheme, data type) in configuration order, scenario
    /// outermost.
    pub fn plan(&self) -> Vec<PlanEntry> {
        let mut out = Vec::new();
        for sc in &self.scenarios {
            for &scheme in &self.generate.schemes {
                for &dt in &self.generate.data_types {
                    out.push(PlanEntry {
                        scenario: sc.clone(),
                        scheme: self.labeling.scheme(scheme),
                        data_type: dt,
                    });
                }
            }
        }
        out
    }

    /// `(train, test)` generation seeds of one scenario and scheme.
    pub fn dataset_seeds(&self, scenario: &str, scheme: SchemeKind) -> (u64, u64) {
        let data = self.seeds.data();
        let base = [tag(scenario), tag(scheme.name())];
        (
            derive_seed(data, &[base[0], base[1], tag("train")]),
            derive_seed(data, &[base[0], base[1], tag("test")]),
        )
    }

    pub fn settings(&self) -> Result<ExperimentSettings> {
        Ok(ExperimentSettings {
            kinds: self.estimator_kinds()?,
            grids: self.grid_overrides()?,
            split: SplitSpec {
                train_fraction: self.evaluation.train_fraction,
                seed: self.seeds.split(),
            },
            k: self.evaluation.folds,
            seed: self.seeds.estimator(),
            options: self.training,
        })
    }
}

/// Parse a list of estimator short or long names, keeping order and
/// dropping repeats.
pub fn parse_estimators<S: AsRef<str>>(names: &[S]) -> Result<Vec<EstimatorKind>> {
    if names.is_empty() {
        return Err(Error::Config("estimator list is empty".into()));
    }
    let mut out = Vec::new();
    for n in names {
        let n = n.as_ref().trim();
        let k = EstimatorKind::parse(n).ok_or_else(|| {
            Error::Config(format!(
                "unknown estimator '{n}', expected one of {}",
                EstimatorKind::ALL.map(|k| k.short_name()).join(", ")
            ))
        })?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_sections_keep_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "[generate]\nn_per_class = 10\n",
        )
        .unwrap();
        assert_eq!(cfg.generate.n_per_class, 10);
        assert_eq!(cfg.seeds, Seeds::default());
        assert_eq!(cfg.generate.schemes, Generate::default().schemes);
        assert_eq!(cfg.scenarios, ExperimentConfig::default().scenarios);

        let shipped = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/quick.toml");
        let cfg = ExperimentConfig::load(std::path::Path::new(shipped)).unwrap();
        cfg.validate().unwrap();
        cfg.grid_overrides().unwrap();
    }

    #[test]
    fn default_plan_has_twelve_datasets() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let plan = cfg.plan();
        assert_eq!(plan.len(), 12);
        let mut ids: Vec<String> = plan.iter().map(PlanEntry::id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 12);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_field_is_named() {
        let text = ExperimentConfig::default().to_toml().unwrap();
        let text = text.replacen("[seeds]", "[seeds]\nbogus_knob = 3", 1);
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("bogus_knob"), "{err}");
    }

    #[test]
    fn indoor_must_be_more_cluttered() {
        let mut cfg = ExperimentConfig::default();
        cfg.scenarios[0].clutter_path_count = 1;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn grid_override_is_reordered_and_checked() {
        let text = r#"
            [seeds]
            master = 1
            [[scenario]]
            name = "o"
            environment = "outdoor"
            n_bins = 128
            bin_duration_ps = 61.0
            clutter_amplitude = 0.0
            clutter_path_count = 0
            noise_sigma = 0.01
            direct_path_amplitude = 1.0
            seed = 4
            [grids.RF]
            max_features = ["sqrt"]
            criterion = ["gini"]
            n_estimators = [4, 8]
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let s = cfg.settings().unwrap();
        let g = s.grid(EstimatorKind::RandomForest);
        let names: Vec<&str> = g.axes.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["n_estimators", "criterion", "max_features"]);
        assert_eq!(g.n_candidates(), 2);
        let bad = text.replace("criterion = [\"gini\"]", "depth = [3]");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn seeds_derive_unless_pinned() {
        let mut s = Seeds {
            master: 7,
            data: None,
            split: None,
            estimator: None,
        };
        assert_ne!(s.data(), s.split());
        assert_ne!(s.split(), s.estimator());
        s.estimator = Some(99);
        assert_eq!(s.estimator(), 99);
    }

    #[test]
    fn estimator_names() {
        let k = parse_estimators(&["kNN", "RF", "kNN"]).unwrap();
        assert_eq!(k, [EstimatorKind::KNearestNeighbors, EstimatorKind::RandomForest]);
        assert!(parse_estimators(&["XGB"]).is_err());
        assert!(parse_estimators::<&str>(&[]).is_err());
    }
}
