//! Real-versus-synthetic similarity measures.

mod features;
mod ks;
mod mmd;
mod psd;
mod report;
mod rpeaks;

pub use features::{basic_features, LeadFeatures, RecordFeatures, ST_WINDOW};
pub use ks::{ecdf_table, ks_distance, ks_distance_sorted};
pub use mmd::{flatten, median_bandwidth, mmd2, mmd2_with_median_bandwidth, pairwise_sq_distances};
pub use psd::{psd_welch, Psd, CLINICAL_BAND, DEFAULT_OVERLAP, DEFAULT_SEGMENT};
pub use report::{fidelity_report, Cohort, CohortClass, FeatureSummary, FidelityReport, KsSummary, PsdSummary, ReportOptions};
pub use rpeaks::{detect_r_peaks, match_peaks, PeakMatch, REFRACTORY, THRESHOLD_FRACTION};
