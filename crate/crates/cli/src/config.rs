//! Experiment configuration: built-in defaults per experiment, a TOML file
//! merged on top, then dotted `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    SupportRecovery,
    DimensionSweep,
    RateStudy,
    VerifySets,
    VerifyConcentration,
    EstimateSingle,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::SupportRecovery => "support-recovery",
            Kind::DimensionSweep => "dimension-sweep",
            Kind::RateStudy => "rate-study",
            Kind::VerifySets => "verify-sets",
            Kind::VerifyConcentration => "verify-concentration",
            Kind::EstimateSingle => "estimate-single",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Cosine,
    Ou,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaRule {
    Cv,
    Formula,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub reps: usize,
    pub out: PathBuf,
    pub model: ModelBlock,
    pub sampling: SamplingBlock,
    pub estimation: EstimationBlock,
    pub sweep: SweepBlock,
    pub rate: RateBlock,
    pub audit: AuditBlock,
    pub concentration: ConcentrationBlock,
    pub budget: BudgetBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub family: Family,
    pub d: usize,
    /// Parameter count for the cosine family.
    pub p: usize,
    /// Anchor slope factor; defaults to the true sparsity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_anchor: Option<f64>,
    /// Fraction of zero coefficients in the generated `θ₀`.
    pub sparsity: f64,
    /// Law of the nonzero coefficients, `Uniform[low, high]`.
    pub nonzero: [f64; 2],
    /// Diagonal of `A` for the OU family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_diag: Option<Vec<f64>>,
    /// Full `A` (rows) for the OU family; takes precedence over `a_diag`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingBlock {
    pub horizon: f64,
    pub delta_n: f64,
    pub substeps: usize,
    /// Burn-in in observation intervals; defaults to ten percent of `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    /// Use the exact Gaussian sampler for the OU family instead of Euler.
    pub ou_exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationBlock {
    pub lambda_rule: LambdaRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub grid_points: usize,
    /// Smallest grid value as a fraction of `‖ℓ‖∞`.
    pub grid_ratio: f64,
    pub folds: usize,
    pub mle_threshold: f64,
    pub tol: f64,
    pub max_sweeps: usize,
    pub snap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub p_values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateBlock {
    pub horizons: Vec<f64>,
    /// `Δₙ = delta_scale / T`.
    pub delta_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditBlock {
    pub epsilon: f64,
    pub gamma: f64,
    /// Norm-equivalence constant; defaults to half the square root of `l`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    pub c_b: f64,
    /// Restricted-eigenvalue bound `l`; defaults to `𝔩min` (OU) or a pilot estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_mono: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Supports or directions examined by the compatibility bound.
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationBlock {
    pub reps: usize,
    pub linear_a_diag: Vec<f64>,
    pub linear_n: usize,
    pub linear_delta_n: f64,
    pub linear_substeps: usize,
    pub r_grid: Vec<f64>,
    pub ou_a_diag: Vec<f64>,
    pub ou_n: usize,
    pub ou_delta_n: f64,
    pub x_grid: Vec<f64>,
    pub extra_directions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetBlock {
    /// Wall-clock allowance in seconds.
    pub seconds: f64,
    /// Estimated seconds per replication.
    pub cost_per_rep: f64,
}

impl ExperimentConfig {
    /// Paper-protocol defaults for an experiment.
    pub fn defaults(kind: Kind) -> Self {
        let mut cfg = Self {
            kind,
            seed: 2024,
            reps: 20,
            out: PathBuf::from(format!("out/{}", kind.as_str())),
            model: ModelBlock {
                family: Family::Cosine,
                d: 10,
                p: 30,
                s_anchor: None,
                sparsity: 0.7,
                nonzero: [2.0, 3.0],
                a_diag: None,
                a: None,
            },
            sampling: SamplingBlock {
                horizon: 7.0,
                delta_n: 0.01,
                substeps: 10,
                burn_in: None,
                ou_exact: false,
            },
            estimation: EstimationBlock {
                lambda_rule: LambdaRule::Cv,
                lambda: None,
                grid_points: 30,
                grid_ratio: 1e-4,
                folds: 5,
                mle_threshold: 0.5,
                tol: 1e-9,
                max_sweeps: 10_000,
                snap: 1e-12,
            },
            sweep: SweepBlock {
                p_values: vec![10, 20, 30, 40, 50],
            },
            rate: RateBlock {
                horizons: vec![100.0, 200.0, 400.0, 800.0, 1600.0],
                delta_scale: 10.0,
            },
            audit: AuditBlock {
                epsilon: 0.1,
                gamma: 1.0,
                k: None,
                c_b: 1.0,
                l_re: None,
                m_mono: None,
                r: None,
                budget: 2000,
            },
            concentration: ConcentrationBlock {
                reps: 10_000,
                linear_a_diag: vec![1.0, 2.0],
                linear_n: 200,
                linear_delta_n: 0.05,
                linear_substeps: 5,
                r_grid: vec![0.05, 0.1, 0.2, 0.5, 1.0, 1.5, 2.0],
                ou_a_diag: vec![1.0, 2.0, 3.0],
                ou_n: 5000,
                ou_delta_n: 0.1,
                x_grid: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.4],
                extra_directions: 4,
            },
            budget: BudgetBlock {
                seconds: 600.0,
                cost_per_rep: 0.5,
            },
        };
        match kind {
            Kind::SupportRecovery | Kind::EstimateSingle => {}
            Kind::DimensionSweep => {
                cfg.reps = 30;
                cfg.model.sparsity = 0.8;
                cfg.sampling.horizon = 5.0;
                cfg.budget.seconds = 1800.0;
                cfg.budget.cost_per_rep = 0.1;
            }
            Kind::RateStudy => {
                cfg.reps = 50;
                cfg.model.family = Family::Ou;
                cfg.model.d = 5;
                cfg.model.a_diag = Some(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
                cfg.sampling.ou_exact = true;
                cfg.budget.cost_per_rep = 0.2;
            }
            Kind::VerifySets | Kind::VerifyConcentration => {
                cfg.reps = 200;
                cfg.model.family = Family::Ou;
                cfg.model.d = 5;
                cfg.model.a_diag = Some(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
                cfg.sampling.horizon = 10.0;
                cfg.estimation.lambda_rule = LambdaRule::Formula;
                cfg.budget.cost_per_rep = 0.05;
            }
        }
        if kind == Kind::EstimateSingle {
            cfg.reps = 1;
        }
        if kind == Kind::VerifyConcentration {
            cfg.budget.cost_per_rep = 0.01;
        }
        cfg
    }

    /// Defaults, then the file at `path` if given, then each `key=value`.
    pub fn load(kind: Kind, path: Option<&Path>, sets: &[String]) -> Result<Self, CliError> {
        let defaults = Value::try_from(Self::defaults(kind))
            .map_err(|e| CliError::Config(format!("default config: {e}")))?;
        let Value::Table(mut root) = defaults else {
            return Err(CliError::Config("default config is not a table".into()));
        };
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let user: Table = toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            merge(&mut root, user);
        }
        for set in sets {
            apply_set(&mut root, set)?;
        }
        let cfg: Self = serde_path_to_error::deserialize(Value::Table(root))
            .map_err(|e| CliError::Config(format!("`{}`: {}", e.path(), e.inner().message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |field: &str, why: &str| Err(CliError::Config(format!("`{field}`: {why}")));
        let m = &self.model;
        if m.d == 0 {
            return fail("model.d", "must be positive");
        }
        if m.family == Family::Cosine && m.p == 0 {
            return fail("model.p", "must be positive");
        }
        if !(0.0..=1.0).contains(&m.sparsity) {
            return fail("model.sparsity", "must lie in [0, 1]");
        }
        if !(m.nonzero[0] <= m.nonzero[1]) {
            return fail("model.nonzero", "needs low ≤ high");
        }
        if m.s_anchor.is_some_and(|s| !(s > 0.0)) {
            return fail("model.s_anchor", "must be positive");
        }
        if m.family == Family::Ou {
            match (&m.a, &m.a_diag) {
                (Some(rows), _) => {
                    if rows.len() != m.d || rows.iter().any(|r| r.len() != m.d) {
                        return fail("model.a", "must be a d×d array of rows");
                    }
                }
                (None, Some(diag)) => {
                    if diag.len() != m.d {
                        return fail("model.a_diag", "must have d entries");
                    }
                }
                (None, None) => return fail("model.a_diag", "the OU family needs `a` or `a_diag`"),
            }
        }
        let s = &self.sampling;
        if !(s.horizon > 0.0 && s.horizon.is_finite()) {
            return fail("sampling.horizon", "must be positive");
        }
        if !(s.delta_n > 0.0 && s.delta_n.is_finite()) {
            return fail("sampling.delta_n", "must be positive");
        }
        if s.substeps == 0 {
            return fail("sampling.substeps", "must be at least 1");
        }
        let e = &self.estimation;
        if e.lambda_rule == LambdaRule::Fixed && !e.lambda.is_some_and(|l| l >= 0.0) {
            return fail("estimation.lambda", "a fixed rule needs λ ≥ 0");
        }
        if e.grid_points == 0 || !(e.grid_ratio > 0.0 && e.grid_ratio < 1.0) {
            return fail("estimation.grid_ratio", "need ≥ 1 point and a ratio in (0, 1)");
        }
        if e.folds < 2 {
            return fail("estimation.folds", "need at least 2 folds");
        }
        if !(e.mle_threshold >= 0.0) {
            return fail("estimation.mle_threshold", "must be ≥ 0");
        }
        if !(e.tol > 0.0) || e.max_sweeps == 0 || !(e.snap >= 0.0) {
            return fail("estimation.tol", "solver needs tol > 0, max_sweeps ≥ 1, snap ≥ 0");
        }
        if self.reps == 0 {
            return fail("reps", "must be at least 1");
        }
        if self.sweep.p_values.is_empty() || self.sweep.p_values.contains(&0) {
            return fail("sweep.p_values", "must be nonempty and positive");
        }
        if self.rate.horizons.iter().any(|t| !(*t > 0.0)) || !(self.rate.delta_scale > 0.0) {
            return fail("rate.horizons", "horizons and delta_scale must be positive");
        }
        let a = &self.audit;
        if !(a.epsilon > 0.0 && a.epsilon < 1.0) {
            return fail("audit.epsilon", "must lie in (0, 1)");
        }
        if !(a.gamma > 0.0) || !(a.c_b > 0.0) {
            return fail("audit.gamma", "γ and C_b must be positive");
        }
        if a.k.is_some_and(|k| !(k > 0.0)) || a.l_re.is_some_and(|l| !(l > 0.0)) {
            return fail("audit.k", "k and l must be positive");
        }
        let c = &self.concentration;
        if c.reps == 0 || c.linear_n == 0 || c.ou_n == 0 || c.linear_substeps == 0 {
            return fail("concentration.reps", "counts must be positive");
        }
        if !(self.budget.seconds > 0.0) || !(self.budget.cost_per_rep >= 0.0) {
            return fail("budget.seconds", "must be positive");
        }
        Ok(())
    }

    /// Number of observation intervals `round(T/Δₙ)`.
    pub fn n(&self) -> usize {
        (self.sampling.horizon / self.sampling.delta_n).round().max(1.0) as usize
    }
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Applies one `a.b.c=value` override; the value is read as TOML and falls
/// back to a bare string.
pub fn apply_set(root: &mut Table, set: &str) -> Result<(), CliError> {
    let (key, raw) = set
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{set}` is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key `{key}` is malformed")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        table = match entry {
            Value::Table(t) => t,
            _ => {
                return Err(CliError::Config(format!(
                    "override `{key}`: `{part}` is not a table"
                )))
            }
        };
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}
