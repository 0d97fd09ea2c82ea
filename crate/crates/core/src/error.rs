use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Only second (`k = 2`) and third (`k = 3`) harmonic generation exist here.
    #[error("unsupported harmonic order {0}: expected 2 or 3")]
    InvalidOrder(u32),

    #[error("truncation epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The dispersive expansion needs a nonzero detuning.
    #[error("effective forms are undefined at zero detuning")]
    ZeroDetuning,

    #[error("effective form {form} does not apply to harmonic order {order}")]
    FormOrderMismatch { form: &'static str, order: u32 },

    #[error("the Kerr-only form requires the harmonic mode in vacuum")]
    KerrOnlyNeedsVacuumHarmonic,

    /// A coupled pair of levels is closer than the dispersive threshold.
    #[error("sector N={sector}: gap {gap:.6e} below dispersive threshold {threshold:.6e}")]
    DegenerateGap {
        sector: usize,
        gap: f64,
        threshold: f64,
    },

    #[error("eigensolver did not converge for a {size}x{size} matrix (index {index})")]
    NoConvergence { size: usize, index: usize },

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("propagator covers sectors 0..={propagator} (order {prop_order}) but state needs 0..={state} (order {state_order})")]
    SectorMismatch {
        propagator: usize,
        prop_order: u32,
        state: usize,
        state_order: u32,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
