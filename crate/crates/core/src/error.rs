use std::fmt;

/// Errors raised by mesh construction, assembly, the solvers and the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical breakdown in element {element} while assembling {term}")]
    NumericalBreakdown { element: usize, term: Term },

    #[error(
        "linear solve failed: relative residual {residual:.3e} exceeds tolerance {tolerance:.1e}"
    )]
    LinearSolveFailure { residual: f64, tolerance: f64 },

    #[error("Picard iteration did not converge in {} iterations (last increment {:.3e})", history.len(), history.last().copied().unwrap_or(f64::NAN))]
    NonlinearDivergence { history: Vec<f64> },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Group of element terms, used to locate non-finite values during assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Coefficients,
    Mass,
    Convection,
    Viscous,
    PressureCoupling,
    Transport,
    Load,
    Stabilization,
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Term::Coefficients => "frozen coefficients",
            Term::Mass => "mass",
            Term::Convection => "convection",
            Term::Viscous => "power-law viscous term",
            Term::PressureCoupling => "pressure-divergence coupling",
            Term::Transport => "transport terms",
            Term::Load => "load vector",
            Term::Stabilization => "subscale stabilization",
        };
        f.write_str(s)
    }
}
