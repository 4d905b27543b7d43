//! Estimator kinds, hyperparameter values and the default search grids.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::tree::{Criterion, MaxFeatures};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    LogisticRegression,
    Perceptron,
    KNearestNeighbors,
    LinearSvc,
    DecisionTree,
    RandomForest,
    ExtraTrees,
    GradientBoosting,
}

impl EstimatorKind {
    /// Report order: linear models, neighbours, then trees.
    pub const ALL: [EstimatorKind; 8] = [
        EstimatorKind::LogisticRegression,
        EstimatorKind::Perceptron,
        EstimatorKind::KNearestNeighbors,
        EstimatorKind::LinearSvc,
        EstimatorKind::DecisionTree,
        EstimatorKind::RandomForest,
        EstimatorKind::ExtraTrees,
        EstimatorKind::GradientBoosting,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            EstimatorKind::LogisticRegression => "LR",
            EstimatorKind::Perceptron => "Per",
            EstimatorKind::KNearestNeighbors => "kNN",
            EstimatorKind::LinearSvc => "SVM",
            EstimatorKind::DecisionTree => "DT",
            EstimatorKind::RandomForest => "RF",
            EstimatorKind::ExtraTrees => "ET",
            EstimatorKind::GradientBoosting => "SGB",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            EstimatorKind::LogisticRegression => "logistic_regression",
            EstimatorKind::Perceptron => "perceptron",
            EstimatorKind::KNearestNeighbors => "k_nearest_neighbors",
            EstimatorKind::LinearSvc => "linear_svc",
            EstimatorKind::DecisionTree => "decision_tree",
            EstimatorKind::RandomForest => "random_forest",
            EstimatorKind::ExtraTrees => "extra_trees",
            EstimatorKind::GradientBoosting => "gradient_boosting",
        }
    }

    /// Accepts short or long names, case-insensitively.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        Self::ALL.into_iter().find(|k| {
            k.short_name().eq_ignore_ascii_case(s) || k.long_name().eq_ignore_ascii_case(s)
        })
    }

    pub fn id(self) -> u8 {
        Self::ALL.iter().position(|&k| k == self).expect("listed") as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    /// Whether fitting consumes randomness from the spec seed.
    pub fn is_stochastic(self, solver: Option<&str>) -> bool {
        match self {
            EstimatorKind::KNearestNeighbors
            | EstimatorKind::LinearSvc
            | EstimatorKind::GradientBoosting => false,
            EstimatorKind::LogisticRegression => solver == Some("sag"),
            _ => true,
        }
    }

    /// Hyperparameter axis names in grid order.
    pub fn axes(self) -> &'static [&'static str] {
        match self {
            EstimatorKind::LogisticRegression => &["C", "solver"],
            EstimatorKind::Perceptron => &["alpha"],
            EstimatorKind::KNearestNeighbors => &["n_neighbors"],
            EstimatorKind::LinearSvc => &["C"],
            EstimatorKind::DecisionTree => &["criterion", "max_features"],
            EstimatorKind::RandomForest | EstimatorKind::ExtraTrees => {
                &["n_estimators", "criterion", "max_features"]
            }
            EstimatorKind::GradientBoosting => &["n_estimators", "learning_rate"],
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// A bare number or string in text formats, a tagged variant in binary ones.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Untagged {
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Serialize, Deserialize)]
enum Tagged {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Serialize for ParamValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match (s.is_human_readable(), self.clone()) {
            (true, ParamValue::Int(i)) => Untagged::Int(i).serialize(s),
            (true, ParamValue::Float(f)) => Untagged::Float(f).serialize(s),
            (true, ParamValue::Text(t)) => Untagged::Text(t).serialize(s),
            (false, ParamValue::Int(i)) => Tagged::Int(i).serialize(s),
            (false, ParamValue::Float(f)) => Tagged::Float(f).serialize(s),
            (false, ParamValue::Text(t)) => Tagged::Text(t).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ParamValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(if d.is_human_readable() {
            match Untagged::deserialize(d)? {
                Untagged::Int(i) => ParamValue::Int(i),
                Untagged::Float(f) => ParamValue::Float(f),
                Untagged::Text(t) => ParamValue::Text(t),
            }
        } else {
            match Tagged::deserialize(d)? {
                Tagged::Int(i) => ParamValue::Int(i),
                Tagged::Float(f) => ParamValue::Float(f),
                Tagged::Text(t) => ParamValue::Text(t),
            }
        })
    }
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParamValue::Int(i) => Some(i as f64),
            ParamValue::Float(f) => Some(f),
            ParamValue::Text(_) => None,
        }
    }

    pub fn as_usize(&self) -> Option<usize> {
        match *self {
            ParamValue::Int(i) => usize::try_from(i).ok(),
            ParamValue::Float(f) if f >= 0.0 && f.fract() == 0.0 => Some(f as usize),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Float(v)
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

/// Fixed iteration caps and tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingOptions {
    pub logistic_max_iter: usize,
    pub logistic_tol: f64,
    pub lbfgs_memory: usize,
    pub newton_cg_max_inner: usize,
    pub perceptron_epochs: usize,
    pub svc_epochs: usize,
    pub boosting_max_depth: usize,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        Self {
            logistic_max_iter: 500,
            logistic_tol: 1e-5,
            lbfgs_memory: 10,
            newton_cg_max_inner: 50,
            perceptron_epochs: 100,
            svc_epochs: 200,
            boosting_max_depth: 3,
        }
    }
}

/// One estimator with concrete hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    /// `(axis name, value)` in grid axis order.
    pub params: Vec<(String, ParamValue)>,
    pub seed: u64,
    #[serde(default)]
    pub options: TrainingOptions,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind, params: Vec<(String, ParamValue)>, seed: u64) -> Self {
        Self {
            kind,
            params,
            seed,
            options: TrainingOptions::default(),
        }
    }

    pub fn param(&self, name: &str) -> Option<&ParamValue> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// `name=value` pairs joined by `;`.
    pub fn params_string(&self) -> String {
        self.params
            .iter()
            .map(|(n, v)| format!("{n}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::InvalidParam {
            kind: self.kind.short_name().to_string(),
            message: message.into(),
        }
    }

    fn require(&self, name: &str) -> Result<&ParamValue> {
        self.param(name).ok_or_else(|| self.err(format!("missing parameter '{name}'")))
    }

    fn positive(&self, name: &str) -> Result<f64> {
        let v = self.require(name)?;
        v.as_f64()
            .filter(|x| *x > 0.0 && x.is_finite())
            .ok_or_else(|| self.err(format!("'{name}' must be a positive number, got {v}")))
    }

    fn count(&self, name: &str) -> Result<usize> {
        let v = self.require(name)?;
        v.as_usize()
            .filter(|&n| n >= 1)
            .ok_or_else(|| self.err(format!("'{name}' must be a positive integer, got {v}")))
    }

    fn text(&self, name: &str) -> Result<&str> {
        let v = self.require(name)?;
        v.as_str().ok_or_else(|| self.err(format!("'{name}' must be a string, got {v}")))
    }

    /// Validate the parameter names and values and convert into a typed
    /// configuration.
    pub fn resolve(&self) -> Result<ResolvedParams> {
        let axes = self.kind.axes();
        for (name, _) in &self.params {
            if !axes.contains(&name.as_str()) {
                return Err(self.err(format!("unknown parameter '{name}', expected one of {axes:?}")));
            }
        }
        let criterion = |s: &Self| -> Result<Criterion> {
            let t = s.text("criterion")?;
            Criterion::parse(t).ok_or_else(|| s.err(format!("unknown criterion '{t}'")))
        };
        let max_features = |s: &Self| -> Result<MaxFeatures> {
            let t = s.text("max_features")?;
            MaxFeatures::parse(t).ok_or_else(|| s.err(format!("unknown max_features '{t}'")))
        };
        Ok(match self.kind {
            EstimatorKind::LogisticRegression => {
                let solver = self.text("solver")?;
                let solver = Solver::parse(solver)
                    .ok_or_else(|| self.err(format!("unknown solver '{solver}'")))?;
                ResolvedParams::Logistic {
                    c: self.positive("C")?,
                    solver,
                }
            }
            EstimatorKind::Perceptron => {
                let v = self.require("alpha")?;
                let alpha = v
                    .as_f64()
                    .filter(|a| *a >= 0.0 && a.is_finite())
                    .ok_or_else(|| self.err(format!("'alpha' must be >= 0, got {v}")))?;
                ResolvedParams::Perceptron { alpha }
            }
            EstimatorKind::KNearestNeighbors => ResolvedParams::Knn {
                n_neighbors: self.count("n_neighbors")?,
            },
            EstimatorKind::LinearSvc => ResolvedParams::LinearSvc { c: self.positive("C")? },
            EstimatorKind::DecisionTree => ResolvedParams::Tree {
                criterion: criterion(self)?,
                max_features: max_features(self)?,
            },
            EstimatorKind::RandomForest | EstimatorKind::ExtraTrees => ResolvedParams::Forest {
                n_estimators: self.count("n_estimators")?,
                criterion: criterion(self)?,
                max_features: max_features(self)?,
            },
            EstimatorKind::GradientBoosting => ResolvedParams::Boosting {
                n_estimators: self.count("n_estimators")?,
                learning_rate: self.positive("learning_rate")?,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Solver {
    Lbfgs,
    Sag,
    NewtonCg,
}

impl Solver {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lbfgs" => Some(Solver::Lbfgs),
            "sag" => Some(Solver::Sag),
            "newton-cg" => Some(Solver::NewtonCg),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedParams {
    Logistic { c: f64, solver: Solver },
    Perceptron { alpha: f64 },
    Knn { n_neighbors: usize },
    LinearSvc { c: f64 },
    Tree { criterion: Criterion, max_features: MaxFeatures },
    Forest { n_estimators: usize, criterion: Criterion, max_features: MaxFeatures },
    Boosting { n_estimators: usize, learning_rate: f64 },
}

/// Named axes whose Cartesian product is searched exhaustively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParamGrid {
    pub axes: Vec<(String, Vec<ParamValue>)>,
}

impl HyperParamGrid {
    /// The default grid for each estimator.
    pub fn table1(kind: EstimatorKind) -> Self {
        let floats = |v: &[f64]| v.iter().map(|&x| ParamValue::Float(x)).collect::<Vec<_>>();
        let ints = |v: &[i64]| v.iter().map(|&x| ParamValue::Int(x)).collect::<Vec<_>>();
        let texts = |v: &[&str]| v.iter().map(|&x| ParamValue::from(x)).collect::<Vec<_>>();
        let c_values = floats(&[0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0]);
        let n_estimators = ints(&[16, 32, 64, 128, 256]);
        let criterion = texts(&["gini", "entropy"]);
        let max_features = texts(&["auto", "sqrt", "log2"]);
        let axes: Vec<(&str, Vec<ParamValue>)> = match kind {
            EstimatorKind::LogisticRegression => vec![
                ("C", c_values),
                ("solver", texts(&["lbfgs", "sag", "newton-cg"])),
            ],
            EstimatorKind::Perceptron => {
                vec![("alpha", floats(&[0.0001, 0.001, 0.01, 0.1, 1.0]))]
            }
            EstimatorKind::KNearestNeighbors => {
                vec![("n_neighbors", ints(&(1..=30).collect::<Vec<_>>()))]
            }
            EstimatorKind::LinearSvc => vec![("C", c_values)],
            EstimatorKind::DecisionTree => {
                vec![("criterion", criterion), ("max_features", max_features)]
            }
            EstimatorKind::RandomForest | EstimatorKind::ExtraTrees => vec![
                ("n_estimators", n_estimators),
                ("criterion", criterion),
                ("max_features", max_features),
            ],
            EstimatorKind::GradientBoosting => vec![
                ("n_estimators", n_estimators),
                ("learning_rate", floats(&[0.2, 0.5, 0.8, 1.0])),
            ],
        };
        Self {
            axes: axes.into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
        }
    }

    pub fn n_candidates(&self) -> usize {
        if self.axes.is_empty() {
            return 0;
        }
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    /// Cartesian product, first axis outermost, values in listed order.
    pub fn candidates(&self) -> Vec<Vec<(String, ParamValue)>> {
        let mut out: Vec<Vec<(String, ParamValue)>> = vec![Vec::new()];
        if self.axes.is_empty() {
            return Vec::new();
        }
        for (name, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push((name.clone(), v.clone()));
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// The axes must be exactly those of `kind`, in order, each non-empty.
    pub fn validate_for(&self, kind: EstimatorKind) -> Result<()> {
        let names: Vec<&str> = self.axes.iter().map(|(n, _)| n.as_str()).collect();
        if names != kind.axes() {
            return Err(Error::InvalidParam {
                kind: kind.short_name().into(),
                message: format!("grid axes {names:?} differ from {:?}", kind.axes()),
            });
        }
        if let Some((n, _)) = self.axes.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::InvalidParam {
                kind: kind.short_name().into(),
                message: format!("grid axis '{n}' is empty"),
            });
        }
        for params in self.candidates() {
            EstimatorSpec::new(kind, params, 0).resolve()?;
        }
        Ok(())
    }
}
