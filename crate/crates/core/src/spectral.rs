//! Periodic pseudospectral grids on [0, 1): planned transforms, wavenumber
//! tables, spectral derivatives, and diagonal shifted solves.
//!
//! Wavenumbers follow xi_j = 2 pi j for j <= N/2 and 2 pi (j - N) above, so
//! the Nyquist slot carries +N pi. Odd-order derivative symbols zero the
//! Nyquist mode to keep real data real; even symbols keep it, so the
//! discrete Laplacian stays symmetric negative with the full -(N pi)^2.

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{ImexError, Result};
use crate::C64;

fn check_grid_size(n: usize) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        return Err(ImexError::Parameter(format!(
            "grid size must be even and at least 4, got {n}"
        )));
    }
    Ok(())
}

fn wavenumbers(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            if j <= n / 2 {
                TAU * j as f64
            } else {
                TAU * (j as f64 - n as f64)
            }
        })
        .collect()
}

/// One-dimensional periodic grid with nodes x_j = j / N.
pub struct Grid1d {
    n: usize,
    xi: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Grid1d {
    pub fn new(n: usize) -> Result<Self> {
        check_grid_size(n)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            xi: wavenumbers(n),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 / self.n as f64).collect()
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        self.xi[j]
    }

    /// Samples a function at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().into_iter().map(f).collect()
    }

    pub fn forward(&self, u: &[f64]) -> Vec<C64> {
        debug_assert_eq!(u.len(), self.n);
        let mut hat: Vec<C64> = u.iter().map(|&v| C64::from(v)).collect();
        self.fwd.process(&mut hat);
        hat
    }

    pub fn inverse_real(&self, mut hat: Vec<C64>) -> Vec<f64> {
        debug_assert_eq!(hat.len(), self.n);
        self.inv.process(&mut hat);
        let scale = 1.0 / self.n as f64;
        hat.iter().map(|v| v.re * scale).collect()
    }

    /// Spectral derivative of order 1 or 2.
    pub fn derivative(&self, u: &[f64], order: usize) -> Result<Vec<f64>> {
        let mut hat = self.forward(u);
        match order {
            1 => {
                for (j, v) in hat.iter_mut().enumerate() {
                    *v *= if j == self.n / 2 {
                        C64::from(0.0)
                    } else {
                        C64::new(0.0, self.xi[j])
                    };
                }
            }
            2 => {
                for (j, v) in hat.iter_mut().enumerate() {
                    *v *= -self.xi[j] * self.xi[j];
                }
            }
            _ => {
                return Err(ImexError::Parameter(format!(
                    "derivative order must be 1 or 2, got {order}"
                )))
            }
        }
        Ok(self.inverse_real(hat))
    }

    /// Solves (alpha + c * xi^2) x_hat = rhs_hat mode by mode, i.e. the
    /// shifted Laplacian problem (alpha I - c * D^2) x = rhs.
    pub fn solve_shifted_laplacian(&self, alpha: f64, c: f64, rhs: &[f64]) -> Vec<f64> {
        let mut hat = self.forward(rhs);
        for (j, v) in hat.iter_mut().enumerate() {
            *v /= alpha + c * self.xi[j] * self.xi[j];
        }
        self.inverse_real(hat)
    }

    /// Mean value (zero-mode average).
    pub fn mean(&self, u: &[f64]) -> f64 {
        u.iter().sum::<f64>() / self.n as f64
    }
}

/// Three-dimensional periodic grid, N nodes per axis, z fastest.
pub struct Grid3d {
    n: usize,
    xi: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Grid3d {
    pub fn new(n: usize) -> Result<Self> {
        check_grid_size(n)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            xi: wavenumbers(n),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn axis_len(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    /// Samples a function at the nodes.
    pub fn sample(&self, f: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
        let n = self.n;
        let h = self.spacing();
        let mut out = Vec::with_capacity(self.len());
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    out.push(f(ix as f64 * h, iy as f64 * h, iz as f64 * h));
                }
            }
        }
        out
    }

    /// Transforms along one axis: gathers lines into contiguous chunks,
    /// runs the planned FFT over all of them, and scatters back.
    fn pass(&self, data: &mut [C64], axis: usize, fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        if axis == 2 {
            fft.process(data);
            return;
        }
        let mut buf = vec![C64::from(0.0); data.len()];
        match axis {
            1 => {
                for ix in 0..n {
                    for iz in 0..n {
                        let line = (ix * n + iz) * n;
                        for iy in 0..n {
                            buf[line + iy] = data[self.index(ix, iy, iz)];
                        }
                    }
                }
                fft.process(&mut buf);
                for ix in 0..n {
                    for iz in 0..n {
                        let line = (ix * n + iz) * n;
                        for iy in 0..n {
                            data[self.index(ix, iy, iz)] = buf[line + iy];
                        }
                    }
                }
            }
            0 => {
                for iy in 0..n {
                    for iz in 0..n {
                        let line = (iy * n + iz) * n;
                        for ix in 0..n {
                            buf[line + ix] = data[self.index(ix, iy, iz)];
                        }
                    }
                }
                fft.process(&mut buf);
                for iy in 0..n {
                    for iz in 0..n {
                        let line = (iy * n + iz) * n;
                        for ix in 0..n {
                            data[self.index(ix, iy, iz)] = buf[line + ix];
                        }
                    }
                }
            }
            _ => unreachable!("axis is 0, 1, or 2"),
        }
    }

    pub fn forward(&self, u: &[f64]) -> Vec<C64> {
        debug_assert_eq!(u.len(), self.len());
        let mut hat: Vec<C64> = u.iter().map(|&v| C64::from(v)).collect();
        self.pass(&mut hat, 2, &self.fwd);
        self.pass(&mut hat, 1, &self.fwd);
        self.pass(&mut hat, 0, &self.fwd);
        hat
    }

    pub fn inverse_real(&self, mut hat: Vec<C64>) -> Vec<f64> {
        debug_assert_eq!(hat.len(), self.len());
        self.pass(&mut hat, 2, &self.inv);
        self.pass(&mut hat, 1, &self.inv);
        self.pass(&mut hat, 0, &self.inv);
        let scale = 1.0 / self.len() as f64;
        hat.iter().map(|v| v.re * scale).collect()
    }

    /// First-derivative symbol along one axis, Nyquist zeroed.
    fn first_symbol(&self, j: usize) -> C64 {
        if j == self.n / 2 {
            C64::from(0.0)
        } else {
            C64::new(0.0, self.xi[j])
        }
    }

    /// Gradient components from a transformed field.
    pub fn gradient_from_hat(&self, hat: &[C64]) -> [Vec<f64>; 3] {
        let n = self.n;
        let mut out = Vec::with_capacity(3);
        for axis in 0..3 {
            let mut g = hat.to_vec();
            for ix in 0..n {
                for iy in 0..n {
                    for iz in 0..n {
                        let j = [ix, iy, iz][axis];
                        g[self.index(ix, iy, iz)] *= self.first_symbol(j);
                    }
                }
            }
            out.push(self.inverse_real(g));
        }
        let [gx, gy, gz] = <[Vec<f64>; 3]>::try_from(out).expect("three components");
        [gx, gy, gz]
    }

    /// Divergence of a nodal vector field.
    pub fn divergence(&self, fields: &[Vec<f64>; 3]) -> Vec<f64> {
        let n = self.n;
        let mut acc = vec![C64::from(0.0); self.len()];
        for (axis, f) in fields.iter().enumerate() {
            let hat = self.forward(f);
            for ix in 0..n {
                for iy in 0..n {
                    for iz in 0..n {
                        let idx = self.index(ix, iy, iz);
                        let j = [ix, iy, iz][axis];
                        acc[idx] += hat[idx] * self.first_symbol(j);
                    }
                }
            }
        }
        self.inverse_real(acc)
    }

    /// Squared wavenumber magnitude at a multi-index.
    #[inline]
    fn xi_sq(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.xi[ix] * self.xi[ix] + self.xi[iy] * self.xi[iy] + self.xi[iz] * self.xi[iz]
    }

    /// Laplacian from a transformed field (full symbol, Nyquist kept).
    pub fn laplacian_from_hat(&self, hat: &[C64]) -> Vec<f64> {
        let n = self.n;
        let mut out = hat.to_vec();
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    out[self.index(ix, iy, iz)] *= -self.xi_sq(ix, iy, iz);
                }
            }
        }
        self.inverse_real(out)
    }

    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.laplacian_from_hat(&self.forward(u))
    }

    /// Solves (alpha I - c * Laplacian) x = rhs mode by mode.
    pub fn solve_shifted_laplacian(&self, alpha: f64, c: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut hat = self.forward(rhs);
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let idx = self.index(ix, iy, iz);
                    hat[idx] /= alpha + c * self.xi_sq(ix, iy, iz);
                }
            }
        }
        self.inverse_real(hat)
    }

    /// Mean value (zero-mode average).
    pub fn mean(&self, u: &[f64]) -> f64 {
        u.iter().sum::<f64>() / self.len() as f64
    }
}
