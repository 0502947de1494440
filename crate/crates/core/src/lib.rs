//! Spectral Galerkin solver for viscous anelastic flow over a degenerate
//! density profile.
//!
//! The physical domain is the half-periodic channel `Ω = [0,2) × (0,1)`
//! (x-period 2, rigid horizontal walls). The density `ρ(z) = (z+ε)^α`
//! vanishes at the bottom wall as `ε → 0`, and the velocity `u = (v, w)`
//! satisfies
//!
//! ```text
//! ρ (∂t u + u·∇u) + ρ ∇p = Δu,          div(ρ u) = 0,
//! ∂z v = 0 and w = 0 on z ∈ {0, 1}.
//! ```
//!
//! Everything in this crate works on the symmetric extension of that
//! channel to the torus `[0,2) × [-1,1)`: `ρ`, `v`, and `p` extend evenly
//! in `z`, `w` extends oddly. The boundary conditions then become plain
//! periodicity, and the solution spaces are spanned by
//!
//! ```text
//! v, p:  e^{iπk₁x} cos(πk₂z)        (cosine parity)
//! w:     e^{iπk₁x} sin(πk₂z)        (sine parity)
//! ```
//!
//! over `-m ≤ k₁ ≤ m`, `0 ≤ k₂ ≤ m`, with Hermitian symmetry in `k₁` so
//! that all fields are real. Products such as `ρ·u` are evaluated by
//! quadrature on grids sized so the projected result is exact to
//! round-off; the density itself enters as a band-limited truncation, so
//! the semi-discrete system is a genuine Galerkin flow for a trigonometric
//! density and inherits exact invariants (constraint preservation, the
//! energy law) that the test suite pins down.
//!
//! Modules:
//! * [`basis`] — coefficient storage, transforms, exact products, packing.
//! * [`density`] — the profile `(s(z)+ε)^α`, optional kink smoothing, spectrum.
//! * [`constraint`] — pressure operator, divergence residual, initial-data correction.
//! * [`dynamics`] — mass operators, right-hand side, RK4 / IMEX stepping, runs.
//! * [`diagnostics`] — energy identities, weighted norms, Hardy checks, experiments.
//! * [`quadrature`] — Gauss–Legendre panels used by the non-band-limited integrals.
//! * [`snapshot`] — binary state snapshots.

pub mod basis;
pub mod constraint;
pub mod density;
pub mod diagnostics;
pub mod dynamics;
pub mod quadrature;
pub mod snapshot;

// Downstream crates exchange states as dense vectors; re-export the
// linear-algebra crate so they build against the same version.
pub use nalgebra;

/// Errors surfaced by solver construction and time integration.
#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    /// A sampling grid is too coarse for the requested exact operation.
    #[error("grid too coarse: need at least {required} nodes per direction, got {actual}")]
    Resolution { required: usize, actual: usize },

    /// An operator factorization failed; usually loss of positive
    /// definiteness when the density truncation dips non-positive.
    #[error("factorization failed for {operator}: {detail}")]
    Factorization { operator: &'static str, detail: String },

    /// A parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested time step violates a stability bound.
    #[error("time step {dt:.3e} exceeds the {scheme} bound {bound:.3e}")]
    TimeStepBound { dt: f64, bound: f64, scheme: &'static str },

    /// The state norm grew past the run guard; the run is aborted and the
    /// partial trajectory is reported.
    #[error("instability detected at t = {t:.6}: state norm {norm:.6e} exceeds guard {guard:.6e}")]
    Instability { t: f64, norm: f64, guard: f64 },

    /// Snapshot or other I/O payloads that fail structural validation.
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;
