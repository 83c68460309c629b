//! The unconditional-stability diagram `D(r, delta)`.
//!
//! A complex number `mu` lies in `D` exactly when every root of
//! `c(z) - mu b(z)` is strictly inside the unit circle; the scheme applied to
//! the scalar model problem with spectral ratio `mu` then damps for every
//! time-step size. The boundary of `D` is the image of (an arc of) the unit
//! circle under `mu(z) = c(z) / b(z)`, its real extreme points `m_l < 0 < m_r`
//! have closed forms, and as `delta -> 0` the diagram approaches a disk of
//! radius `1/(r delta)`.

use crate::error::{ImexError, Result};
use crate::{coeffs, linalg, validate_order_delta, C64};
use std::f64::consts::PI;

/// Default strictness tolerance for [`contains`]: roots must satisfy
/// `|z| < 1 - CONTAINS_TOL`, so boundary points count as outside.
pub const CONTAINS_TOL: f64 = 1e-9;

/// A sampled stability diagram for one `(order, delta)` pair.
#[derive(Clone, Debug)]
pub struct StabilityDiagram {
    pub order: usize,
    pub delta: f64,
    /// Boundary samples, traced over the admissible arc of the unit circle.
    pub boundary: Vec<C64>,
    /// Left-most (most negative) real point of the boundary.
    pub m_l: f64,
    /// Right-most real point of the boundary.
    pub m_r: f64,
}

/// Closed-form real extreme points `(m_l, m_r)` of `D(r, delta)`.
///
/// `m_l = (1 - (1 - delta/2)^{-r})^{-1}` always; `m_r = 1` for orders 1 and 2
/// (for order 2 as the `sec(pi/2)` divergence limit), and
/// `m_r = (1 + ((1 - delta/2) sec(pi/r))^{-r})^{-1}` for orders 3..=5.
pub fn extreme_points(order: usize, delta: f64) -> Result<(f64, f64)> {
    validate_order_delta(order, delta)?;
    let r = order as i32;
    let half = 1.0 - delta / 2.0;
    let m_l = 1.0 / (1.0 - half.powi(-r));
    let m_r = if order <= 2 {
        1.0
    } else {
        let sec = 1.0 / (PI / order as f64).cos();
        1.0 / (1.0 + (half * sec).powi(-r))
    };
    Ok((m_l, m_r))
}

/// The asymptotic circle: as `delta -> 0`, `D(r, delta)` approaches the disk
/// centered at `-1/(r delta) + (r + 1)/(2r)` with radius `1/(r delta)`.
/// Returns `(center, radius)`.
pub fn asymptotic_circle(order: usize, delta: f64) -> Result<(f64, f64)> {
    validate_order_delta(order, delta)?;
    let r = order as f64;
    let radius = 1.0 / (r * delta);
    let center = -radius + (r + 1.0) / (2.0 * r);
    Ok((center, radius))
}

/// Start of the admissible boundary arc: the locus is traced for
/// `arg z in [arg z0, 2 pi - arg z0]`. For orders 1 and 2, `z0 = 1` and the
/// whole circle is used; for orders 3..=5 the arc excludes a neighborhood of
/// `z = 1` bounded by the self-intersection preimage
/// `z0 = (2 - delta - 2 (1 - delta) cos(pi/r) e^{i pi/r})
///      / (2 - delta - 2 cos(pi/r) e^{i pi/r})`.
pub fn arc_start(order: usize, delta: f64) -> Result<C64> {
    validate_order_delta(order, delta)?;
    if order == 1 {
        return Ok(C64::new(1.0, 0.0));
    }
    let t = PI / order as f64;
    let e = C64::from_polar(1.0, t);
    let num = C64::new(2.0 - delta, 0.0) - e * (2.0 * (1.0 - delta) * t.cos());
    let den = C64::new(2.0 - delta, 0.0) - e * (2.0 * t.cos());
    Ok(num / den)
}

/// Samples the boundary locus `mu(e^{i theta}) = c / b` over the admissible
/// arc, endpoints included. `theta = pi` is always included so the sampled
/// extremes hit the closed-form points exactly.
pub fn boundary_locus(order: usize, delta: f64, n_samples: usize) -> Result<Vec<C64>> {
    validate_order_delta(order, delta)?;
    if n_samples < 3 {
        return Err(ImexError::Parameter(format!(
            "n_samples must be at least 3, got {n_samples}"
        )));
    }
    let scheme = coeffs::generate_scheme(order, delta)?;
    let z0 = arc_start(order, delta)?;
    let theta0 = z0.arg().abs();
    // Odd sample count puts the midpoint exactly at theta = pi.
    let n = if n_samples % 2 == 0 { n_samples + 1 } else { n_samples };
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let theta = theta0 + (2.0 * PI - 2.0 * theta0) * i as f64 / (n - 1) as f64;
        let z = C64::from_polar(1.0, theta);
        let (_, b, c) = scheme.evaluate_polynomials(z);
        pts.push(c / b);
    }
    Ok(pts)
}

/// Membership test: `mu` is inside `D(r, delta)` when all roots of
/// `c(z) - mu b(z)` satisfy `|z| < 1 - tol`. The boundary counts as outside.
pub fn contains(order: usize, delta: f64, mu: C64, tol: f64) -> Result<bool> {
    validate_order_delta(order, delta)?;
    let scheme = coeffs::generate_scheme(order, delta)?;
    contains_with_scheme(&scheme, mu, tol)
}

/// [`contains`] against a pre-generated scheme (hot path for certification
/// sweeps, which test hundreds of points per scheme).
pub fn contains_with_scheme(scheme: &coeffs::ImExScheme, mu: C64, tol: f64) -> Result<bool> {
    let coeffs: Vec<C64> = scheme
        .c
        .iter()
        .zip(scheme.b.iter())
        .map(|(&c, &b)| C64::new(c, 0.0) - mu * b)
        .collect();
    let roots = linalg::polynomial_roots(&coeffs)?;
    Ok(roots.iter().all(|z| z.norm() < 1.0 - tol))
}

impl StabilityDiagram {
    /// Builds the sampled diagram and records the sampled real extremes.
    pub fn new(order: usize, delta: f64, n_samples: usize) -> Result<Self> {
        let boundary = boundary_locus(order, delta, n_samples)?;
        let m_l = boundary.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);
        let m_r = boundary.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
        Ok(StabilityDiagram { order, delta, boundary, m_l, m_r })
    }

    /// Membership test against this diagram's `(order, delta)`.
    pub fn contains(&self, mu: C64, tol: f64) -> Result<bool> {
        contains(self.order, self.delta, mu, tol)
    }
}
