//! Structural causal models with additive noise: abduction, intervention
//! and counterfactual prediction.
//!
//! A model is an ordered list of variables. Each variable has a mechanism
//! `f(parents)` written as a sum of product terms, plus an optional noise
//! term. With additive noise, abduction is closed form: `u = v − f(parents)`.
//!
//! JSON layout (see `examples/simulation_model.json`):
//!
//! ```json
//! {"variables": [
//!   {"name": "income", "noise": {"additive": "u_income"}},
//!   {"name": "Y", "parents": ["income", "W"],
//!    "terms": [{"coef": 1.0, "factors": [{"var": "income"}]},
//!              {"coef": 2.0, "factors": [{"var": "W"}]}],
//!    "noise": {"additive": "u"}}
//! ]}
//! ```
//!
//! Factor kinds: `{"var": x}`, `{"indicator": {"var": x, "threshold": t}}`
//! for `1(x > t)`, and `{"positive_part": {"var": x, "threshold": t}}` for
//! `max(x − t, 0)`. A term with no factors is a constant.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset};
use crate::dgp::{ScenarioKind, FEMALE, INCOME, MINORITY, NEIGHBORHOOD, TEST_SCORE};
use crate::error::{Error, Result};

/// Name of the treatment variable in the built-in model.
pub const TREATMENT: &str = "W";
/// Name of the outcome variable in the built-in model.
pub const OUTCOME: &str = "Y";
/// Name of the outcome noise in the built-in model.
pub const OUTCOME_NOISE: &str = "u";

/// Values keyed by variable (or noise) name.
pub type Assignment = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Var(String),
    /// `1(var > threshold)`
    Indicator { var: String, threshold: f64 },
    /// `max(var − threshold, 0)`
    PositivePart { var: String, threshold: f64 },
}

impl Factor {
    fn var(&self) -> &str {
        match self {
            Factor::Var(v) => v,
            Factor::Indicator { var, .. } | Factor::PositivePart { var, .. } => var,
        }
    }

    fn eval(&self, v: f64) -> f64 {
        match self {
            Factor::Var(_) => v,
            Factor::Indicator { threshold, .. } => {
                if v > *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            Factor::PositivePart { threshold, .. } => (v - threshold).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn constant(c: f64) -> Self {
        Term {
            coef: c,
            factors: Vec::new(),
        }
    }

    pub fn new(coef: f64, factors: Vec<Factor>) -> Self {
        Term { coef, factors }
    }
}

/// How a variable's noise enters its equation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    /// Deterministic mechanism.
    #[default]
    None,
    /// `v = f(parents) + u`
    Additive(String),
    /// `v = f(parents) · (1 + u)`; simulable but not abductable here.
    Multiplicative(String),
}

impl Noise {
    fn name(&self) -> Option<&str> {
        match self {
            Noise::None => None,
            Noise::Additive(n) | Noise::Multiplicative(n) => Some(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parents: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<Term>,
    #[serde(default)]
    pub noise: Noise,
}

impl Variable {
    /// A variable that is its own noise (`v = u_v`).
    pub fn exogenous(name: &str) -> Self {
        Variable {
            name: name.to_string(),
            parents: Vec::new(),
            terms: Vec::new(),
            noise: Noise::Additive(format!("u_{name}")),
        }
    }

    fn mechanism(&self, values: &HashMap<&str, f64>) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.factors
                    .iter()
                    .fold(t.coef, |acc, f| acc * f.eval(values[f.var()]))
            })
            .sum()
    }
}

/// Acyclic additive-noise structural model, variables in topological order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralModel {
    pub variables: Vec<Variable>,
}

impl StructuralModel {
    /// Checks names, topological order and that terms only use declared parents.
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        let model = StructuralModel { variables };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen: Vec<&str> = Vec::new();
        let mut noises: Vec<&str> = Vec::new();
        for v in &self.variables {
            if seen.contains(&v.name.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "variable `{}` has more than one equation",
                    v.name
                )));
            }
            for p in &v.parents {
                if !seen.contains(&p.as_str()) {
                    return Err(Error::InvalidParameter(format!(
                        "parent `{p}` of `{}` is not declared before it",
                        v.name
                    )));
                }
            }
            for t in &v.terms {
                if !t.coef.is_finite() {
                    return Err(Error::InvalidParameter(format!("non-finite coefficient in `{}`", v.name)));
                }
                for f in &t.factors {
                    if !v.parents.iter().any(|p| p == f.var()) {
                        return Err(Error::InvalidParameter(format!(
                            "mechanism of `{}` uses `{}`, which is not a parent",
                            v.name,
                            f.var()
                        )));
                    }
                }
            }
            if let Some(n) = v.noise.name() {
                if noises.contains(&n) {
                    return Err(Error::InvalidParameter(format!("noise `{n}` is shared")));
                }
                noises.push(n);
            }
            seen.push(&v.name);
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: StructuralModel = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Forward-simulates every variable from a noise assignment. Missing
    /// noise values are an error.
    pub fn simulate(&self, noise: &Assignment) -> Result<Assignment> {
        let mut values: HashMap<&str, f64> = HashMap::with_capacity(self.variables.len());
        for v in &self.variables {
            let f = v.mechanism(&values);
            let x = match &v.noise {
                Noise::None => f,
                Noise::Additive(n) => f + lookup(noise, n)?,
                Noise::Multiplicative(n) => f * (1.0 + lookup(noise, n)?),
            };
            values.insert(&v.name, x);
        }
        Ok(values.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    /// Recovers the noise behind a fully observed unit.
    pub fn abduct(&self, evidence: &Assignment) -> Result<Assignment> {
        let mut values: HashMap<&str, f64> = HashMap::with_capacity(self.variables.len());
        let mut noise = Assignment::new();
        for v in &self.variables {
            let observed = lookup(evidence, &v.name)?;
            if !observed.is_finite() {
                return Err(Error::InvalidData(format!("evidence for `{}` is not finite", v.name)));
            }
            let f = v.mechanism(&values);
            match &v.noise {
                Noise::Additive(n) => {
                    let u = observed - f;
                    if f + u != observed {
                        return Err(Error::InvalidData(format!(
                            "recovered noise for `{}` does not reproduce the evidence exactly",
                            v.name
                        )));
                    }
                    noise.insert(n.clone(), u);
                }
                Noise::None => {
                    if f != observed {
                        return Err(Error::InvalidData(format!(
                            "evidence {observed} for deterministic `{}` contradicts its mechanism value {f}",
                            v.name
                        )));
                    }
                }
                Noise::Multiplicative(_) => {
                    return Err(Error::NotInvertible(format!(
                        "`{}` has multiplicative noise",
                        v.name
                    )));
                }
            }
            values.insert(&v.name, observed);
        }
        Ok(noise)
    }

    /// Replaces `variable`'s equation by the constant `value`. The original
    /// model is left untouched.
    pub fn intervene(&self, variable: &str, value: f64) -> Result<StructuralModel> {
        let mut out = self.clone();
        let v = out
            .variables
            .iter_mut()
            .find(|v| v.name == variable)
            .ok_or_else(|| Error::UnknownVariable(variable.to_string()))?;
        v.parents.clear();
        v.terms = vec![Term::constant(value)];
        v.noise = Noise::None;
        Ok(out)
    }

    /// Abduct, intervene, predict. Returns the value of `query` in the
    /// counterfactual world.
    pub fn counterfactual(
        &self,
        evidence: &Assignment,
        interventions: &[(&str, f64)],
        query: &str,
    ) -> Result<f64> {
        let noise = self.abduct(evidence)?;
        let mut model = self.clone();
        for &(var, value) in interventions {
            model = model.intervene(var, value)?;
        }
        let world = model.simulate(&noise)?;
        world
            .get(query)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(query.to_string()))
    }

    /// `Y(W=1) − Y(W=0)` for one unit, using the built-in variable names.
    pub fn ite(&self, evidence: &Assignment) -> Result<f64> {
        let y1 = self.counterfactual(evidence, &[(TREATMENT, 1.0)], OUTCOME)?;
        let y0 = self.counterfactual(evidence, &[(TREATMENT, 0.0)], OUTCOME)?;
        Ok(y1 - y0)
    }
}

fn lookup(a: &Assignment, name: &str) -> Result<f64> {
    a.get(name)
        .copied()
        .ok_or_else(|| Error::UnknownVariable(name.to_string()))
}

fn var(name: &str) -> Factor {
    Factor::Var(name.to_string())
}

/// The simulation DAG: five exogenous covariates, treatment driven by
/// income, and an outcome moderated according to `kind`.
///
/// Treatment is Bernoulli given income, which has no additive-noise form;
/// its equation is `W = u_W` with income kept as a declared parent so the
/// graph matches. Abduction then simply records the realized assignment.
pub fn simulation_model(kind: ScenarioKind) -> StructuralModel {
    let mut variables: Vec<Variable> = [INCOME, TEST_SCORE, NEIGHBORHOOD, MINORITY, FEMALE]
        .iter()
        .map(|n| Variable::exogenous(n))
        .collect();
    variables.push(Variable {
        name: TREATMENT.into(),
        parents: vec![INCOME.into()],
        terms: Vec::new(),
        noise: Noise::Additive(format!("u_{TREATMENT}")),
    });

    let mut terms = vec![
        Term::new(1.0, vec![var(INCOME)]),
        Term::new(1.0, vec![var(NEIGHBORHOOD)]),
        Term::new(2.0, vec![var(TREATMENT)]),
    ];
    let mut parents = vec![INCOME, NEIGHBORHOOD, TREATMENT];
    match kind {
        ScenarioKind::Linear => {
            terms.push(Term::new(1.5, vec![var(TREATMENT), var(MINORITY)]));
            parents.push(MINORITY);
        }
        ScenarioKind::ComplexNonlinear => {
            terms.push(Term::new(
                5.0,
                vec![
                    var(TREATMENT),
                    var(MINORITY),
                    var(FEMALE),
                    Factor::Indicator {
                        var: INCOME.into(),
                        threshold: 0.0,
                    },
                ],
            ));
            terms.push(Term::new(
                2.0,
                vec![
                    var(TREATMENT),
                    var(MINORITY),
                    Factor::PositivePart {
                        var: TEST_SCORE.into(),
                        threshold: 0.0,
                    },
                ],
            ));
            parents.extend([MINORITY, FEMALE, TEST_SCORE]);
        }
        ScenarioKind::Constant => {}
    }
    variables.push(Variable {
        name: OUTCOME.into(),
        parents: parents.into_iter().map(String::from).collect(),
        terms,
        noise: Noise::Additive(OUTCOME_NOISE.into()),
    });
    StructuralModel::new(variables).expect("built-in model is valid")
}

/// Observed values of unit `i` (covariates, `W`, `Y`).
pub fn unit_evidence(dataset: &Dataset, i: usize) -> Assignment {
    let mut e: Assignment = dataset
        .names()
        .iter()
        .cloned()
        .zip(dataset.covariates().row(i).iter().copied())
        .collect();
    e.insert(TREATMENT.into(), f64::from(dataset.treatment()[i]));
    e.insert(OUTCOME.into(), dataset.outcome()[i]);
    e
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterfactualRow {
    pub y_factual: f64,
    pub y_cf_w0: f64,
    pub y_cf_w1: f64,
    pub ite: f64,
}

/// Both potential outcomes for every unit of `dataset`.
pub fn unit_counterfactuals(model: &StructuralModel, dataset: &Dataset) -> Result<Vec<CounterfactualRow>> {
    (0..dataset.len())
        .map(|i| {
            let e = unit_evidence(dataset, i);
            let y_cf_w0 = model.counterfactual(&e, &[(TREATMENT, 0.0)], OUTCOME)?;
            let y_cf_w1 = model.counterfactual(&e, &[(TREATMENT, 1.0)], OUTCOME)?;
            Ok(CounterfactualRow {
                y_factual: dataset.outcome()[i],
                y_cf_w0,
                y_cf_w1,
                ite: y_cf_w1 - y_cf_w0,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e: Error| e.context("counterfactual query"))
}

pub fn write_counterfactual_csv(path: &Path, rows: &[CounterfactualRow]) -> Result<()> {
    data::write_csv_atomic(
        path,
        &["unit_id", "y_factual", "y_cf_w0", "y_cf_w1", "ite"],
        rows.iter().enumerate().map(|(i, r)| {
            vec![
                i.to_string(),
                r.y_factual.to_string(),
                r.y_cf_w0.to_string(),
                r.y_cf_w1.to_string(),
                r.ite.to_string(),
            ]
        }),
    )
}
