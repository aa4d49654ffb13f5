//! Pathwise Monte Carlo solver of the rescaled Ito-Schrodinger equation.
//!
//! The equation is integrated in its Stratonovich form: each step applies
//! a free-space half step, a unit-modulus random phase `exp(i g dB)` and a
//! second half step. All factors have modulus one, so the discrete L2 norm
//! is conserved pathwise; the Ito damping appears only in expectation.

mod ensemble;
mod screen;
mod split;

pub use ensemble::{
    run_ensemble, ComplexEstimate, EnsembleOutput, EnsembleSetup, EnsembleStats, MomentTuple, RealEstimate,
    Snapshot, StepDiagnostics, MAX_MOMENT_ORDER,
};
pub use screen::{make_screen, realization_stream, PhaseScreen, RngStream, ScreenSynthesizer};
pub use split::{free_space, propagate, Propagator};
