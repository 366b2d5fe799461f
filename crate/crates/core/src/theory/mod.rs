//! Tuning constants, event-set statistics and Monte Carlo audits.

pub mod audits;
pub mod constants;
pub mod events;

pub use audits::{
    audit_directions, binomial_se, concentration_audit_linear, concentration_audit_ou,
    oracle_audit, oracle_check, AuditRow, LinearAuditSpec, LipschitzFn, OracleAudit, OracleCheck,
};
pub use constants::{
    h0, rate_regime_linear, rate_regime_ou, tuning_constants_linear, tuning_constants_ou, Dims,
    ModelConstants, OuTuningConstants, Regime, RegimeInfo, TuningConstants,
};
pub use events::{
    compatibility_bound, event_statistics, approximation_statistic, martingale_statistic,
    CompatibilityBound, EventFlags, EventStatistics,
};
