//! Labels, folds, metrics and the experiments built from them.

mod combos;
mod evaluate;
mod folds;
mod labels;
mod metrics;
mod multiclass;
pub mod report;
mod roc;
mod search;
mod sweep;

pub use combos::{like_for_like_pairs, MeasurementCombination};
pub use evaluate::{
    evaluate, predict_binary, standardized_split, train_binary, EvalConfig, Evaluation, FoldResult,
    Method,
};
pub use folds::{split_folds, Fold, FoldPlan, DEFAULT_FOLDS, TRAIN_FRACTION};
pub use labels::{make_labels, Scheme};
pub use metrics::{f_score, Confusion, MeanMetrics, Metrics};
pub use multiclass::{
    argmax_lowest, cpc_predict, cpc_train, multiclass_evaluate, one_vs_rest_train, ova_predict,
    ova_train, ovo_train, ovo_vote, ClassRates, MulticlassReport, OneVsOne, OneVsRest, PairModel,
    Strategy,
};
pub use roc::{boundary_grid, mann_whitney_auc, roc_curve, RocCurve, RocPoint, DEFAULT_BOUNDARIES};
pub use search::{
    combination_search, like_for_like, median, size_summary, DiscrepancySummary, PairDiscrepancy,
    SearchCell, SearchTable, SizeSummary,
};
pub use sweep::{default_sizes, nested_subsamples, vpd_size_sweep, SweepRow};
