//! A one-parameter family of unconditionally stable ImEx linear multistep
//! schemes, together with the geometric stability theory needed to use them.
//!
//! The schemes advance split evolution equations `u' = A u + B u + f`, where
//! `A` is treated implicitly and `B` (plus forcing) explicitly:
//!
//! ```text
//! (1/k) sum_j a_j u_{n+j} = sum_j ( c_j A u_{n+j} + b_j ( B u_{n+j} + f_{n+j} ) )
//! ```
//!
//! with `j = 0..=r` and `b_r = 0`. For each order `r = 1..=5` the family is
//! parameterized by `delta` in `(0, 1]`; `delta = 1` recovers the classical
//! SBDF schemes, while smaller `delta` trades accuracy for a larger
//! unconditional-stability region.
//!
//! The crate provides:
//!
//! * [`coeffs`] — exact coefficient generation and scheme validation;
//! * [`diagram`] — the unconditional-stability diagram `D(r, delta)`:
//!   boundary locus, real extreme points, asymptotic circle, membership;
//! * [`spectra`] — generalized eigenvalues and weighted numerical ranges
//!   `W_p(A, B)` of a splitting, with singular-`A` subspace restriction;
//! * [`recipes`] — parameter selection: largest stable `delta`, smallest
//!   stable `sigma`, the joint search, and closed-form interval rules;
//! * [`stepper`] — the multistep time integrator over a [`SplitOperator`];
//! * [`spectral`] — periodic pseudospectral grids and transforms;
//! * [`vardiff`] — 1D variable-coefficient diffusion with the
//!   `A = sigma * Laplacian` splitting, plus spectral-bound certification;
//! * [`porous`] — 3D nonlinear porous-medium diffusion;
//! * [`channel`] — the wall-driven channel-flow mode problem;
//! * [`report`] — convergence-study bookkeeping and CSV/JSON output.

pub mod channel;
pub mod coeffs;
pub mod diagram;
pub mod error;
pub mod linalg;
pub mod porous;
pub mod recipes;
pub mod report;
pub mod spectra;
pub mod spectral;
pub mod stepper;
pub mod vardiff;

pub use channel::{ChannelMode, ChannelSelection};
pub use coeffs::ImExScheme;
pub use diagram::StabilityDiagram;
pub use error::{ImexError, Result};
pub use recipes::FeasibilityResult;
pub use spectra::{SpectralKind, SpectralSet, SplittingPair};
pub use stepper::{SplitOperator, StepperState};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;

/// Smallest supported scheme order.
pub const MIN_ORDER: usize = 1;
/// Largest supported scheme order.
pub const MAX_ORDER: usize = 5;

/// Validates an `(order, delta)` pair for the scheme family.
pub(crate) fn validate_order_delta(order: usize, delta: f64) -> Result<()> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(ImexError::Parameter(format!(
            "order must be in {MIN_ORDER}..={MAX_ORDER}, got {order}"
        )));
    }
    if !delta.is_finite() || delta <= 0.0 || delta > 1.0 {
        return Err(ImexError::Parameter(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    Ok(())
}
