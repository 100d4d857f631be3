use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violates an operation's precondition.
    Parameter(&'static str),
    /// A formula was evaluated outside the region where it is defined.
    Domain(&'static str),
    /// Too many node pairs sat closer than the clamping distance.
    DegeneratePath { clamped: u64, pairs: u64 },
    /// Incrementally tracked energy drifted away from a full recomputation.
    Consistency { tracked: f64, recomputed: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::DegeneratePath { clamped, pairs } => {
                write!(f, "degenerate path: {clamped} of {pairs} pair distances clamped")
            }
            Error::Consistency { tracked, recomputed } => write!(
                f,
                "internal consistency error: tracked energy {tracked} vs recomputed {recomputed}"
            ),
        }
    }
}

impl core::error::Error for Error {}
