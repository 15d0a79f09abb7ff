use thiserror::Error;

/// Failure modes shared by every solver in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("argument outside the domain: {0}")]
    DomainError(String),
    #[error("degenerate mode: {0}")]
    DegenerateMode(String),
    #[error("internal consistency check failed: {0}")]
    InternalError(String),
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),
    #[error("section not in the maximal domain: {0}")]
    NotInDomain(String),
    #[error("discretisation did not converge: {0}")]
    ConvergenceError(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("roots closer than the resolution: {0}")]
    ClusterUnresolved(String),
    #[error("spectral window too small: {0}")]
    WindowTooSmall(String),
    #[error("tail estimate too large: {0}")]
    TailTooLarge(String),
    #[error("second order solve failed: {0}")]
    SolveFailed(String),
    #[error("truncation edge not transverse: {0}")]
    TailNotTransverse(String),
    #[error("condition is not invariant under the chirality operator: {0}")]
    NotEpsInvariant(String),
    #[error("expansion fit failed: {0}")]
    FitFailed(String),
    #[error("ill-posed request: {0}")]
    IllPosed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Same error with `ctx` prepended to its message.
    pub fn context(self, ctx: &str) -> Error {
        use Error::*;
        let p = |m: String| format!("{ctx}: {m}");
        match self {
            InvalidConfig(m) => InvalidConfig(p(m)),
            DomainError(m) => DomainError(p(m)),
            DegenerateMode(m) => DegenerateMode(p(m)),
            InternalError(m) => InternalError(p(m)),
            MeshTooCoarse(m) => MeshTooCoarse(p(m)),
            NotInDomain(m) => NotInDomain(p(m)),
            ConvergenceError(m) => ConvergenceError(p(m)),
            DimensionMismatch(m) => DimensionMismatch(p(m)),
            ClusterUnresolved(m) => ClusterUnresolved(p(m)),
            WindowTooSmall(m) => WindowTooSmall(p(m)),
            TailTooLarge(m) => TailTooLarge(p(m)),
            SolveFailed(m) => SolveFailed(p(m)),
            TailNotTransverse(m) => TailNotTransverse(p(m)),
            NotEpsInvariant(m) => NotEpsInvariant(p(m)),
            FitFailed(m) => FitFailed(p(m)),
            IllPosed(m) => IllPosed(p(m)),
        }
    }
}
