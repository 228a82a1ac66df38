//! Conflict classifiers: gradient-boosted trees, minority oversampling and
//! cross-validation.

mod cv;
mod dataset;
mod gbdt;
mod smote;

pub use cv::{cross_validate, evaluate, stratified_folds, Confusion, CvReport, FoldReport, Metrics};
pub use dataset::{fmt_num, schema_hash, Column, ColumnKind, Dataset, LabeledTable, RowKey, RowOrigin};
pub use gbdt::{
    bin_edges, bin_of, fit_traced, log_loss, logistic, train, FeatureImportance, GbdtModel, GbdtParams, Node,
    Prediction, Tree, MODEL_FORMAT_VERSION,
};
pub use smote::{smote, DEFAULT_K};
