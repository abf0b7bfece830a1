//! Evaluation: CLEAR-MOT, saliency AUROC, stratified error analysis and
//! energy-delay product.

mod analysis;
mod auroc;
mod edp;
mod mot;

pub use analysis::{error_analysis, ErrorAnalysis, MeanStd, ObjectOutcome, StratumStats};
pub use auroc::{auroc, AurocAccumulator, SaliencyReport};
pub use edp::{edp_ideal, edp_measured, edp_report, EdpInputs, EdpReport, IdealEdp, MeasuredEdp};
pub use mot::{evaluate_mot, evaluate_mot_traced, match_frame, mota_from_counts, Labeled, MotReport, MotTrace};
