//! Wall-bounded channel mode problem: after a Fourier transform in the
//! periodic streamwise direction, each wavenumber `xi` carries a non-local
//! equation `u_t = (d_yy - xi^2) u + (pressure terms)` on the vertical
//! interval, where the pressure is reconstructed from the two wall
//! derivatives of `u`. Second-order finite differences on `Ny` interior
//! nodes give the stiff matrix `A0` and a rank-two pressure matrix `Q`; the
//! splitting treats `sigma * A0` implicitly and `(1 - sigma) * A0 + Q`
//! explicitly, so the non-local pressure never enters a solve.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::ImExScheme;
use crate::error::{ImexError, Result};
use crate::recipes;
use crate::spectra::{self, SpectralSet, SplittingPair};
use crate::stepper::{SplitOperator, StepperState};
use crate::C64;

/// Largest interior grid count accepted by the dense range computations.
pub const DENSE_NODE_CAP: usize = 512;

/// The two pressure columns: entries of `xi csch(xi) cosh(xi (y - 1))` and
/// `-xi csch(xi) cosh(xi y)` at the interior nodes, evaluated through
/// decaying exponentials only, so large `xi` cannot overflow the hyperbolics.
fn pressure_columns(xi: f64, ny: usize) -> (DVector<f64>, DVector<f64>) {
    let s = xi.abs();
    let h = 1.0 / (ny + 1) as f64;
    let denom = -(-2.0 * s).exp_m1();
    let lower = DVector::from_fn(ny, |j, _| {
        let y = (j + 1) as f64 * h;
        s * ((s * (y - 2.0)).exp() + (-s * y).exp()) / denom
    });
    let upper = DVector::from_fn(ny, |j, _| {
        let y = (j + 1) as f64 * h;
        -s * ((s * (y - 1.0)).exp() + (-s * (y + 1.0)).exp()) / denom
    });
    (lower, upper)
}

/// One Fourier mode of the channel problem on `Ny` interior nodes with
/// spacing `h = 1 / (Ny + 1)` and homogeneous walls.
///
/// The stiff matrix is `A0 = (1/h^2) tridiag(1, -2, 1) - xi^2 I`; the
/// pressure matrix `Q` is the sum of two rank-one products of the hyperbolic
/// columns with the one-sided wall-derivative stencils, and vanishes for
/// `xi = 0`. Both are even in `xi`. The type is itself the split operator
/// `du/dt = sigma A0 u + ((1 - sigma) A0 + Q) u`.
pub struct ChannelMode {
    xi: f64,
    ny: usize,
    h: f64,
    sigma: f64,
    lower_column: DVector<f64>,
    upper_column: DVector<f64>,
}

impl ChannelMode {
    pub fn new(xi: f64, ny: usize, sigma: f64) -> Result<Self> {
        if ny < 4 {
            return Err(ImexError::Parameter(format!(
                "channel mode needs at least 4 interior nodes, got {ny}"
            )));
        }
        if !xi.is_finite() {
            return Err(ImexError::Parameter(format!(
                "wavenumber must be finite, got {xi}"
            )));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(ImexError::Parameter(format!(
                "splitting scale must be positive and finite, got {sigma}"
            )));
        }
        let h = 1.0 / (ny + 1) as f64;
        let (lower_column, upper_column) = if xi == 0.0 {
            (DVector::zeros(ny), DVector::zeros(ny))
        } else {
            pressure_columns(xi, ny)
        };
        Ok(Self {
            xi,
            ny,
            h,
            sigma,
            lower_column,
            upper_column,
        })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn apply_a0(&self, u: &DVector<f64>) -> DVector<f64> {
        let inv_h2 = 1.0 / (self.h * self.h);
        let diag = -2.0 * inv_h2 - self.xi * self.xi;
        DVector::from_fn(self.ny, |i, _| {
            let mut v = diag * u[i];
            if i > 0 {
                v += inv_h2 * u[i - 1];
            }
            if i + 1 < self.ny {
                v += inv_h2 * u[i + 1];
            }
            v
        })
    }

    fn apply_q(&self, u: &DVector<f64>) -> DVector<f64> {
        let wall_lower = u[0] / self.h;
        let wall_upper = -u[self.ny - 1] / self.h;
        &self.lower_column * wall_lower + &self.upper_column * wall_upper
    }

    /// Dense stiff matrix `(1/h^2) tridiag(1, -2, 1) - xi^2 I`.
    pub fn a0_dense(&self) -> DMatrix<f64> {
        let inv_h2 = 1.0 / (self.h * self.h);
        DMatrix::from_fn(self.ny, self.ny, |i, j| {
            if i == j {
                -2.0 * inv_h2 - self.xi * self.xi
            } else if i.abs_diff(j) == 1 {
                inv_h2
            } else {
                0.0
            }
        })
    }

    /// Dense pressure matrix: the hyperbolic columns times the one-sided
    /// wall-derivative stencils `e_1 / h` and `-e_Ny / h`, rank at most two.
    pub fn q_dense(&self) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.ny, self.ny);
        let inv_h = 1.0 / self.h;
        for i in 0..self.ny {
            q[(i, 0)] += self.lower_column[i] * inv_h;
            q[(i, self.ny - 1)] -= self.upper_column[i] * inv_h;
        }
        q
    }

    /// Dense explicit matrix `(1 - sigma) A0 + Q`.
    pub fn b_dense(&self) -> DMatrix<f64> {
        let mut b = self.a0_dense();
        b *= 1.0 - self.sigma;
        b += self.q_dense();
        b
    }
}

impl SplitOperator for ChannelMode {
    type Field = f64;

    fn dim(&self) -> usize {
        self.ny
    }

    fn apply_a(&self, u: &DVector<f64>) -> DVector<f64> {
        self.apply_a0(u) * self.sigma
    }

    fn apply_b(&self, u: &DVector<f64>, _t: f64) -> Result<DVector<f64>> {
        let mut out = self.apply_q(u);
        if self.sigma != 1.0 {
            out += self.apply_a0(u) * (1.0 - self.sigma);
        }
        Ok(out)
    }

    fn solve_shifted(&self, alpha: f64, beta: f64, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.ny;
        let inv_h2 = 1.0 / (self.h * self.h);
        let diag = alpha + beta * self.sigma * (2.0 * inv_h2 + self.xi * self.xi);
        let off = -beta * self.sigma * inv_h2;
        // Single-sweep tridiagonal elimination; the matrix is strictly
        // diagonally dominant for alpha > 0, beta >= 0, so no pivoting.
        let mut mult = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut denom = diag;
        if denom == 0.0 {
            return Err(ImexError::Splitting(
                "shifted tridiagonal solve hit a zero pivot".into(),
            ));
        }
        mult[0] = off / denom;
        x[0] = rhs[0] / denom;
        for i in 1..n {
            denom = diag - off * mult[i - 1];
            if denom == 0.0 {
                return Err(ImexError::Splitting(
                    "shifted tridiagonal solve hit a zero pivot".into(),
                ));
            }
            mult[i] = off / denom;
            x[i] = (rhs[i] - off * x[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= mult[i] * next;
        }
        Ok(DVector::from_vec(x))
    }
}

/// Range description of one mode: the real extremes of the sigma-independent
/// set `W_2(A0, Q)`, the set itself, and its image for the split pair.
#[derive(Clone, Debug)]
pub struct ModeRange {
    pub xi: f64,
    pub ny: usize,
    pub sigma: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub max_imag: f64,
    /// `W_2(A0, Q)`, independent of the splitting scale.
    pub base: SpectralSet,
    /// `W_2(sigma A0, (1 - sigma) A0 + Q)`, the affine image of `base`.
    pub scaled: SpectralSet,
}

/// Pointwise map `w -> 1 - 1/sigma + w/sigma`: the range of the split pair
/// `(sigma A0, (1 - sigma) A0 + Q)` in terms of the range of `(A0, Q)`.
pub fn affine_image(base: &SpectralSet, sigma: f64) -> SpectralSet {
    SpectralSet {
        kind: base.kind,
        p: base.p,
        points: base
            .points
            .iter()
            .map(|w| 1.0 - 1.0 / sigma + w / sigma)
            .collect(),
        restricted: base.restricted,
    }
}

/// Computes the `W_2` description of a mode from the dense matrices.
pub fn w2_mode(mode: &ChannelMode, n_angles: usize) -> Result<ModeRange> {
    if mode.ny > DENSE_NODE_CAP {
        return Err(ImexError::Parameter(format!(
            "dense range computation is limited to {DENSE_NODE_CAP} interior nodes, got {}",
            mode.ny
        )));
    }
    let a0 = mode.a0_dense().map(C64::from);
    let q = mode.q_dense().map(C64::from);
    let pair = SplittingPair::new(a0, q)?;
    let base = spectra::w_p_set(&pair, 2.0, n_angles)?;
    let scaled = affine_image(&base, mode.sigma);
    let w_min = base.points.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let w_max = base
        .points
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_imag = base.points.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok(ModeRange {
        xi: mode.xi,
        ny: mode.ny,
        sigma: mode.sigma,
        w_min,
        w_max,
        max_imag,
        base,
        scaled,
    })
}

/// Real extremes of the generalized eigenvalues of the sigma-independent
/// pair `(A0, Q)`, with the largest imaginary magnitude seen.
pub fn mode_eigenvalue_extremes(mode: &ChannelMode) -> Result<(f64, f64, f64)> {
    if mode.ny > DENSE_NODE_CAP {
        return Err(ImexError::Parameter(format!(
            "dense eigenvalue computation is limited to {DENSE_NODE_CAP} interior nodes, got {}",
            mode.ny
        )));
    }
    let a0 = mode.a0_dense().map(C64::from);
    let q = mode.q_dense().map(C64::from);
    let pair = SplittingPair::new(a0, q)?;
    let eigs = spectra::generalized_eigenvalues(&pair)?;
    let min = eigs.points.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let max = eigs
        .points
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_imag = eigs.points.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok((min, max, max_imag))
}

/// One row of a wavenumber sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow {
    pub xi: f64,
    pub w_min: f64,
    pub w_max: f64,
}

/// A wavenumber sweep of the range extremes, sorted by wavenumber.
#[derive(Clone, Debug, Serialize)]
pub struct WmaxSweep {
    pub ny: usize,
    pub rows: Vec<SweepRow>,
    /// Whether `w_max` strictly decreases between distinct wavenumbers.
    pub monotone_decreasing: bool,
}

/// Computes `w_max` per wavenumber concurrently and reports the rows in
/// ascending wavenumber order.
pub fn wmax_sweep(xis: &[f64], ny: usize, n_angles: usize) -> Result<WmaxSweep> {
    if xis.is_empty() {
        return Err(ImexError::Parameter(
            "wavenumber sweep needs at least one value".into(),
        ));
    }
    if xis.iter().any(|&x| !x.is_finite() || x <= 0.0) {
        return Err(ImexError::Parameter(
            "sweep wavenumbers must be positive and finite".into(),
        ));
    }
    let mut rows = xis
        .par_iter()
        .map(|&xi| {
            let mode = ChannelMode::new(xi, ny, 1.0)?;
            let range = w2_mode(&mode, n_angles)?;
            Ok(SweepRow {
                xi,
                w_min: range.w_min,
                w_max: range.w_max,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|p, q| p.xi.total_cmp(&q.xi));
    let monotone_decreasing = rows.windows(2).all(|w| {
        if w[1].xi == w[0].xi {
            w[1].w_max == w[0].w_max
        } else {
            w[1].w_max < w[0].w_max
        }
    });
    Ok(WmaxSweep {
        ny,
        rows,
        monotone_decreasing,
    })
}

/// Outcome of the channel parameter selection.
///
/// `delta` and `sigma` are the closed-form interval-rule values fed by the
/// computed range extremes of the smallest nonzero wavenumber; `certified`
/// records whether the scaled range hull passed the diagram membership
/// check. `endpoint_feasible` tells whether the family endpoint
/// `delta = 1` could have stabilized the same extremes at any scale.
#[derive(Clone, Debug, Serialize)]
pub struct ChannelSelection {
    pub xi1: f64,
    pub ny: usize,
    pub order: usize,
    pub eta: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub delta: Option<f64>,
    pub sigma: Option<f64>,
    pub certified: bool,
    pub endpoint_feasible: bool,
    pub diagnostics: String,
}

/// Selects `(delta, sigma)` for a channel of streamwise length `lx`.
///
/// The smallest nonzero wavenumber `2 pi / lx` carries the widest range, so
/// stabilizing it stabilizes every other mode up to a discretization-level
/// margin. Its real extremes feed the closed-form interval rule through
/// `d_max -> 1 - w_min` and `d_min -> 1 - w_max`, and the resulting pair is
/// re-certified by hull membership before being reported.
pub fn channel_parameters(lx: f64, ny: usize, order: usize, eta: f64) -> Result<ChannelSelection> {
    if !lx.is_finite() || lx <= 0.0 {
        return Err(ImexError::Parameter(format!(
            "channel length must be positive and finite, got {lx}"
        )));
    }
    let xi1 = TAU / lx;
    let mode = ChannelMode::new(xi1, ny, 1.0)?;
    let range = w2_mode(&mode, spectra::DEFAULT_ANGLES)?;
    let d_min = 1.0 - range.w_max;
    let d_max = 1.0 - range.w_min;
    let endpoint_feasible = match order {
        1 | 2 => true,
        _ => d_min > 0.0 && recipes::sbdf_diffusion_feasible(order, d_min, d_max)?,
    };
    if d_min <= 0.0 {
        return Ok(ChannelSelection {
            xi1,
            ny,
            order,
            eta,
            w_min: range.w_min,
            w_max: range.w_max,
            delta: None,
            sigma: None,
            certified: false,
            endpoint_feasible,
            diagnostics: format!(
                "range maximum {:.6} reaches 1, leaving no coefficient interval to stabilize",
                range.w_max
            ),
        });
    }
    let (delta, sigma) = recipes::optimal_interval_params(order, d_min, d_max, eta)?;
    let scheme = crate::coeffs::generate_scheme(order, delta)?;
    let scaled = affine_image(&range.base, sigma);
    let certified = recipes::certify_set(&scheme, &scaled, None, 512)?;
    Ok(ChannelSelection {
        xi1,
        ny,
        order,
        eta,
        w_min: range.w_min,
        w_max: range.w_max,
        delta: Some(delta),
        sigma: Some(sigma),
        certified,
        endpoint_feasible,
        diagnostics: if certified {
            String::new()
        } else {
            "interval-rule pair failed the hull membership re-check".into()
        },
    })
}

/// Integrates a mode from a constant history at `u0`, returning the max-norm
/// after every step. Instability detection inside the stepper surfaces as an
/// error carrying the offending step.
pub fn integrate_mode(
    mode: &ChannelMode,
    scheme: &ImExScheme,
    k: f64,
    steps: usize,
    u0: &DVector<f64>,
) -> Result<Vec<f64>> {
    if u0.len() != mode.ny {
        return Err(ImexError::Parameter(format!(
            "initial state has {} entries, the mode has {} nodes",
            u0.len(),
            mode.ny
        )));
    }
    let states: Vec<DVector<f64>> = (0..scheme.order).map(|_| u0.clone()).collect();
    let mut state = StepperState::initialize_exact(mode, scheme, k, 0.0, &states)?;
    let mut norms = Vec::with_capacity(steps);
    for _ in 0..steps {
        state.step(mode)?;
        norms.push(state.current().amax());
    }
    Ok(norms)
}
