//! Gaussian moment rules and the statistical battery for fully developed
//! speckle.

mod battery;
mod empirical;
pub mod fixtures;
mod functional;
mod pairings;

pub use battery::{
    exponential_law_test, intensity_histogram, scintillation_from_samples, scintillation_index, self_average,
    BoxVariance, ExponentialReport, HistogramBin, MomentRatio, SelfAverageReport, KS_CRITICAL,
    MIN_EXPONENTIAL_SAMPLES,
};
pub use empirical::{empirical_moments, gaussianity_gap, jackknife_complex, GapEstimate, GapMode, MomentTensor};
pub use functional::{centered_functional, gaussian_functional, permanent};
pub use pairings::{enumerate_pairings, pairing_count, PairingSet, MAX_PAIRING_ORDER};
