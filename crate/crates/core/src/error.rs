use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate Hamiltonian: radius {radius:e} below tolerance {tolerance:e}")]
    DegenerateHamiltonian { radius: f64, tolerance: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("time grid too coarse: eigenvector overlap {overlap:.6} between t = {t0} and t = {t1}")]
    GridTooCoarse { overlap: f64, t0: f64, t1: f64 },

    #[error("trajectory passes through both poles (clearance {clearance:e}); no smooth eigenvector gauge")]
    GaugeSingular { clearance: f64 },

    #[error("rotation phase leaves its continuous branch near t = {t}: {reason}")]
    PhaseBranch { t: f64, reason: String },

    #[error("step size underflow at t = {t}: step {step:e} below {min_step:e}")]
    StepUnderflow { t: f64, step: f64, min_step: f64 },

    #[error("invalid ramp: {0}")]
    InvalidRamp(String),

    #[error("wavefunction reaches the box edge at t = {t}: edge/peak amplitude {ratio:e}")]
    BoxOverflow { t: f64, ratio: f64 },

    #[error("norm drift {drift:e} at t = {t}")]
    NormDrift { t: f64, drift: f64 },

    #[error("basis of {levels} oscillator states captures only {captured:.9} of the probability")]
    IncompleteBasis { levels: usize, captured: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
