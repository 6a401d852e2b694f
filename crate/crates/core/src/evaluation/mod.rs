//! Error analysis: MSE/MAE aggregation, relative errors, autocorrelation,
//! spatial correlation, bias correction, confidence regions and paired
//! inference.
//!
//! Errors are always `observed − predicted`.

mod correlation;
mod errors;
mod inference;
mod report;

pub use correlation::{acf, correlation_matrix, per_location_acf, Correlation, Histogram, HISTOGRAM_BINS};
pub use errors::{
    apply_bias, error_sequence_and_matrix, fit_bias, grand_mean, improvement_pct, per_location_error_moments,
    quantiles, relative_errors, summarize, BiasCorrection, ErrorArray, ErrorSummary, Metric, RelativeErrors,
    RELATIVE_ERROR_FLOOR,
};
pub use inference::{
    chi2_cdf, chi2_quantile, classify_sign, confidence_region, paired_diff_ci, ConfidenceRegion, Sign,
};
pub use report::{field_csv, write_field_csv, write_pgm, SummaryRow, SUMMARY_HEADER};
