//! Backward-step rules and spatial operators for the conjugate heat solver.

use std::collections::HashMap;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

/// A one-step theta rule in `tau`. The new level enters with weight
/// `implicit_weight`, and the metric-dependent operator is frozen at
/// `operator_offset` of the way through the step.
pub trait StepRule: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn implicit_weight(&self) -> f64;
    fn operator_offset(&self) -> f64;
    fn order(&self) -> u32;
}

struct CrankNicolson;

impl StepRule for CrankNicolson {
    fn name(&self) -> &'static str {
        "crank-nicolson"
    }
    fn description(&self) -> &'static str {
        "trapezoidal rule, operator frozen at the half step (order 2)"
    }
    fn implicit_weight(&self) -> f64 {
        0.5
    }
    fn operator_offset(&self) -> f64 {
        0.5
    }
    fn order(&self) -> u32 {
        2
    }
}

struct ImplicitEuler;

impl StepRule for ImplicitEuler {
    fn name(&self) -> &'static str {
        "implicit-euler"
    }
    fn description(&self) -> &'static str {
        "fully implicit step; M-matrix, positivity preserving for any step (order 1)"
    }
    fn implicit_weight(&self) -> f64 {
        1.0
    }
    fn operator_offset(&self) -> f64 {
        1.0
    }
    fn order(&self) -> u32 {
        1
    }
}

static RULES: LazyLock<Vec<Box<dyn StepRule>>> =
    LazyLock::new(|| vec![Box::new(CrankNicolson), Box::new(ImplicitEuler)]);

static RULE_INDEX: LazyLock<HashMap<&'static str, usize>> =
    LazyLock::new(|| RULES.iter().enumerate().map(|(i, r)| (r.name(), i)).collect());

pub fn step_rules() -> &'static [Box<dyn StepRule>] {
    &RULES
}

pub fn step_rule(name: &str) -> Option<&'static dyn StepRule> {
    RULE_INDEX.get(name).map(|&i| RULES[i].as_ref())
}

pub fn default_step_rule() -> &'static dyn StepRule {
    RULES[0].as_ref()
}

/// Spatial discretization used inside the solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpatialScheme {
    /// Second-order central differences (flux form on the sphere backends).
    #[default]
    Central2,
    /// Fourth-order compact (Padé) Laplacian; circle only.
    Compact4,
}

impl SpatialScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpatialScheme::Central2 => "central2",
            SpatialScheme::Compact4 => "compact4",
        }
    }
}
