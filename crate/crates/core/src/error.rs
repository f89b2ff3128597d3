use thiserror::Error;

use crate::linalg::HalfInt;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. Variant names are part of the CLI
/// contract: they are printed verbatim on stderr.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("NotSymplectic: symplectic defect {defect:.3e} exceeds tolerance")]
    NotSymplectic { defect: f64 },
    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(String),
    #[error("DegenerateCrossing: crossing form at t = {t:.12} has an eigenvalue of magnitude {min_eig:.3e}")]
    DegenerateCrossing { t: f64, min_eig: f64 },
    #[error("CrossingClusterTooDense: crossings at {t1:.12} and {t2:.12} are closer than 1e-8")]
    CrossingClusterTooDense { t1: f64, t2: f64 },
    #[error("DegeneratePath: |det(Psi(T) - 1)| = {det:.3e}")]
    DegeneratePath { det: f64 },
    #[error("DegeneratePair: boundary pair ({which}) is not transverse")]
    DegeneratePair { which: &'static str },
    #[error("PreconditionViolated: {0}")]
    PreconditionViolated(String),
    #[error("IntegratorFailure: {0}")]
    IntegratorFailure(String),
    #[error("WindowTooCoarse: {0}")]
    WindowTooCoarse(String),
    #[error("ZeroEigenfunction: eigenfunction vanished at t = {t:.6}")]
    ZeroEigenfunction { t: f64 },
    #[error("DegenerateSpectrum: 0 is an eigenvalue (residual {residual:.3e})")]
    DegenerateSpectrum { residual: f64 },
    #[error("KernelNonTrivial: kernel dimension {dim}")]
    KernelNonTrivial { dim: usize },
    #[error("SymmetryViolated: residual {residual:.3e}")]
    SymmetryViolated { residual: f64 },
    #[error("NotOnSurface: |F(p) - 1| = {residual:.3e}")]
    NotOnSurface { residual: f64 },
    #[error("VanishingPairing: lambda(X_F) = {value:.3e}")]
    VanishingPairing { value: f64 },
    #[error("NotStarshaped: dF(L) = {value:.3e} at a probe point")]
    NotStarshaped { value: f64 },
    #[error("NoConvergence: {0}")]
    NoConvergence(String),
    #[error("NonSymplecticDrift: {drift:.3e}")]
    NonSymplecticDrift { drift: f64 },
    #[error("FrameDegenerate: Gram-Schmidt pivot {pivot:.3e}")]
    FrameDegenerate { pivot: f64 },
    #[error("MethodDisagreement: {what}: crossing forms give {crossing}, spectral windings give {spectral}")]
    MethodDisagreement { what: &'static str, crossing: HalfInt, spectral: HalfInt },
    #[error("DegenerateOrbit: transverse Floquet multiplier within {distance:.3e} of 1")]
    DegenerateOrbit { distance: f64 },
    #[error("DegenerateRatio: |r1 - r2| = {gap:.3e}")]
    DegenerateRatio { gap: f64 },
    #[error("EscapeTimeout: no return to the page before t = {cap:.3}")]
    EscapeTimeout { cap: f64 },
    #[error("EdgeTooClose: chart point at radius {radius:.6} is inside the edge band")]
    EdgeTooClose { radius: f64 },
    #[error("QuadratureNoConvergence: relative change {change:.3e}")]
    QuadratureNoConvergence { change: f64 },
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
}

/// Coarse classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Degenerate,
    Numerical,
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotSymplectic { .. } => "NotSymplectic",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::DegenerateCrossing { .. } => "DegenerateCrossing",
            Error::CrossingClusterTooDense { .. } => "CrossingClusterTooDense",
            Error::DegeneratePath { .. } => "DegeneratePath",
            Error::DegeneratePair { .. } => "DegeneratePair",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::IntegratorFailure(_) => "IntegratorFailure",
            Error::WindowTooCoarse(_) => "WindowTooCoarse",
            Error::ZeroEigenfunction { .. } => "ZeroEigenfunction",
            Error::DegenerateSpectrum { .. } => "DegenerateSpectrum",
            Error::KernelNonTrivial { .. } => "KernelNonTrivial",
            Error::SymmetryViolated { .. } => "SymmetryViolated",
            Error::NotOnSurface { .. } => "NotOnSurface",
            Error::VanishingPairing { .. } => "VanishingPairing",
            Error::NotStarshaped { .. } => "NotStarshaped",
            Error::NoConvergence(_) => "NoConvergence",
            Error::NonSymplecticDrift { .. } => "NonSymplecticDrift",
            Error::FrameDegenerate { .. } => "FrameDegenerate",
            Error::MethodDisagreement { .. } => "MethodDisagreement",
            Error::DegenerateOrbit { .. } => "DegenerateOrbit",
            Error::DegenerateRatio { .. } => "DegenerateRatio",
            Error::EscapeTimeout { .. } => "EscapeTimeout",
            Error::EdgeTooClose { .. } => "EdgeTooClose",
            Error::QuadratureNoConvergence { .. } => "QuadratureNoConvergence",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_) | Error::ShapeMismatch(_) => ErrorClass::Usage,
            Error::DegenerateCrossing { .. }
            | Error::CrossingClusterTooDense { .. }
            | Error::DegeneratePath { .. }
            | Error::DegeneratePair { .. }
            | Error::PreconditionViolated(_)
            | Error::DegenerateSpectrum { .. }
            | Error::KernelNonTrivial { .. }
            | Error::SymmetryViolated { .. }
            | Error::NotOnSurface { .. }
            | Error::NotSymplectic { .. }
            | Error::VanishingPairing { .. }
            | Error::NotStarshaped { .. }
            | Error::DegenerateOrbit { .. }
            | Error::DegenerateRatio { .. }
            | Error::EdgeTooClose { .. } => ErrorClass::Degenerate,
            Error::IntegratorFailure(_)
            | Error::WindowTooCoarse(_)
            | Error::ZeroEigenfunction { .. }
            | Error::NoConvergence(_)
            | Error::NonSymplecticDrift { .. }
            | Error::FrameDegenerate { .. }
            | Error::MethodDisagreement { .. }
            | Error::EscapeTimeout { .. }
            | Error::QuadratureNoConvergence { .. } => ErrorClass::Numerical,
        }
    }
}
