//! Degradation curves, agreement metrics and the correlations between them.

mod correlation;
mod curve;
mod goar;
mod metrics;

pub use correlation::{correlation_table, pearson, BenchmarkDrops, CorrelationEntry, CorrelationTable};
pub use curve::{
    cumulative_from_predictions, normalized_area, performance_drop_score, CurvePoint,
    DegradationCurve, Strategy,
};
pub use goar::{run_goar, GoarConfig};
pub use metrics::{
    agreement_scores, average_ranks, default_k, rank_metrics, topk_agreement, AgreementScores,
    Metric, RankAgreement, TopKAgreement,
};
