//! Coefficient generation for the ImEx multistep family.
//!
//! For order `r` and parameter `delta` in `(0, 1]`, the generating
//! polynomials of the scheme are
//!
//! ```text
//! c(z) = (z - 1 + delta)^r
//! b(z) = c(z) - (z - 1)^r
//! a(z) = sum_{j=1}^{r} ( f^(j)(1) / j! ) (z - 1)^j ,   f(z) = ln(z) c(z)
//! ```
//!
//! so that the implicit weights `c_j`, the explicit weights `b_j` (with
//! `b_r = 0`), and the difference weights `a_j` satisfy the order conditions
//! `a(e^h) - h c(e^h) = O(h^{r+1})` and `c(e^h) - b(e^h) = (e^h - 1)^r`.
//!
//! The Taylor coefficients of `a` about `z = 1` are polynomials in `delta`
//! with rational coefficients. They are derived in exact rational arithmetic:
//! the `ln z = sum_{m>=1} (-1)^{m+1} (z-1)^m / m` series is convolved with the
//! binomial expansion of `(z - 1 + delta)^r`, avoiding any numerical
//! differentiation. A second, fully independent route — the published
//! closed-form table in [`table`] — cross-validates every generated scheme.

use crate::error::{ImexError, Result};
use crate::{linalg, validate_order_delta, C64};
use num_rational::Rational64;
use num_traits::Zero;

/// Default tolerance for the closed-form cross-check (relative).
pub const CROSS_CHECK_TOL: f64 = 1e-12;
/// Default tolerance for zero-stability root tests.
pub const ZERO_STABILITY_TOL: f64 = 1e-10;
/// Default tolerance on the order-condition Taylor residuals.
pub const ORDER_CONDITION_TOL: f64 = 1e-11;

/// A polynomial in `delta` with exact rational coefficients
/// (`coeffs[p]` multiplies `delta^p`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct DeltaPoly {
    coeffs: Vec<Rational64>,
}

impl DeltaPoly {
    fn zero(max_pow: usize) -> Self {
        DeltaPoly {
            coeffs: vec![Rational64::zero(); max_pow + 1],
        }
    }

    fn add_term(&mut self, pow: usize, q: Rational64) {
        if pow >= self.coeffs.len() {
            self.coeffs.resize(pow + 1, Rational64::zero());
        }
        self.coeffs[pow] += q;
    }

    pub(crate) fn normalized(mut self) -> Self {
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap().is_zero() {
            self.coeffs.pop();
        }
        self
    }

    /// Evaluates at a floating-point `delta`. At `delta = 1` the sum of the
    /// rational coefficients is taken exactly first, so the SBDF instance is
    /// reproduced to the last bit of the rational-to-float conversion.
    pub(crate) fn eval(&self, delta: f64) -> f64 {
        if delta == 1.0 {
            let total: Rational64 = self.coeffs.iter().sum();
            return rational_to_f64(total);
        }
        let mut acc = 0.0;
        for q in self.coeffs.iter().rev() {
            acc = acc * delta + rational_to_f64(*q);
        }
        acc
    }
}

fn rational_to_f64(q: Rational64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn binom(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i64 / (i + 1) as i64;
    }
    acc
}

/// `a`-polynomial coefficients (in powers of z) as exact polynomials in delta.
pub(crate) fn symbolic_a(r: usize) -> Vec<DeltaPoly> {
    // Taylor coefficients g_n of ln(z) (z - 1 + delta)^r about z = 1 in the
    // variable w = z - 1, for n = 1..=r:
    //   g_n = sum_{m=1}^{n} (-1)^{m+1}/m * binom(r, n-m) delta^{r-n+m}
    let mut g: Vec<DeltaPoly> = Vec::with_capacity(r + 1);
    g.push(DeltaPoly::zero(0)); // unused n = 0 slot
    for n in 1..=r {
        let mut p = DeltaPoly::zero(r);
        for m in 1..=n {
            let sign = if m % 2 == 1 { 1 } else { -1 };
            let q = Rational64::new(sign * binom(r, n - m), m as i64);
            p.add_term(r - n + m, q);
        }
        g.push(p);
    }
    // a(z) = sum_n g_n (z - 1)^n; collect z^j coefficients.
    let mut a: Vec<DeltaPoly> = (0..=r).map(|_| DeltaPoly::zero(r)).collect();
    for n in 1..=r {
        for j in 0..=n {
            let sign = if (n - j) % 2 == 0 { 1 } else { -1 };
            let w = Rational64::from_integer(sign * binom(n, j));
            for (pow, q) in g[n].coeffs.iter().enumerate() {
                a[j].add_term(pow, q * w);
            }
        }
    }
    a.into_iter().map(DeltaPoly::normalized).collect()
}

/// `c`-polynomial coefficients: `c_j = binom(r, j) (delta - 1)^{r-j}`.
pub(crate) fn symbolic_c(r: usize) -> Vec<DeltaPoly> {
    (0..=r)
        .map(|j| {
            let mut p = DeltaPoly::zero(r - j);
            let outer = Rational64::from_integer(binom(r, j));
            for t in 0..=(r - j) {
                let sign = if (r - j - t) % 2 == 0 { 1 } else { -1 };
                p.add_term(t, outer * Rational64::from_integer(sign * binom(r - j, t)));
            }
            p.normalized()
        })
        .collect()
}

/// `b`-polynomial coefficients: `b_j = c_j - [z^j] (z - 1)^r` (so `b_r = 0`).
pub(crate) fn symbolic_b(r: usize) -> Vec<DeltaPoly> {
    symbolic_c(r)
        .into_iter()
        .enumerate()
        .map(|(j, mut p)| {
            let sign = if (r - j) % 2 == 0 { 1 } else { -1 };
            p.add_term(0, Rational64::from_integer(-sign * binom(r, j)));
            p.normalized()
        })
        .collect()
}

/// Published closed-form coefficient formulas, kept as an independent
/// floating-point route for cross-validating the rational derivation.
pub mod table {
    /// Closed-form `a` coefficients (low-to-high powers of z).
    pub fn a(r: usize, d: f64) -> Vec<f64> {
        match r {
            1 => vec![-d, d],
            2 => vec![
                2.0 * d - 1.5 * d * d,
                -4.0 * d + 2.0 * d * d,
                2.0 * d - 0.5 * d * d,
            ],
            3 => vec![
                -3.0 * d + 4.5 * d * d - 11.0 / 6.0 * d * d * d,
                9.0 * d - 10.5 * d * d + 3.0 * d * d * d,
                -9.0 * d + 7.5 * d * d - 1.5 * d * d * d,
                3.0 * d - 1.5 * d * d + d * d * d / 3.0,
            ],
            4 => vec![
                4.0 * d - 9.0 * d * d + 22.0 / 3.0 * d * d * d - 25.0 / 12.0 * d * d * d * d,
                -16.0 * d + 30.0 * d * d - 58.0 / 3.0 * d * d * d + 4.0 * d * d * d * d,
                24.0 * d - 36.0 * d * d + 18.0 * d * d * d - 3.0 * d * d * d * d,
                -16.0 * d + 18.0 * d * d - 22.0 / 3.0 * d * d * d + 4.0 / 3.0 * d * d * d * d,
                4.0 * d - 3.0 * d * d + 4.0 / 3.0 * d * d * d - 0.25 * d * d * d * d,
            ],
            5 => {
                let d2 = d * d;
                let d3 = d2 * d;
                let d4 = d3 * d;
                let d5 = d4 * d;
                vec![
                    -5.0 * d + 15.0 * d2 - 55.0 / 3.0 * d3 + 125.0 / 12.0 * d4 - 137.0 / 60.0 * d5,
                    25.0 * d - 65.0 * d2 + 200.0 / 3.0 * d3 - 365.0 / 12.0 * d4 + 5.0 * d5,
                    -50.0 * d + 110.0 * d2 - 280.0 / 3.0 * d3 + 35.0 * d4 - 5.0 * d5,
                    50.0 * d - 90.0 * d2 + 190.0 / 3.0 * d3 - 65.0 / 3.0 * d4 + 10.0 / 3.0 * d5,
                    -25.0 * d + 35.0 * d2 - 65.0 / 3.0 * d3 + 95.0 / 12.0 * d4 - 1.25 * d5,
                    5.0 * d - 5.0 * d2 + 10.0 / 3.0 * d3 - 1.25 * d4 + 0.2 * d5,
                ]
            }
            _ => panic!("order out of range"),
        }
    }

    /// Closed-form `b` coefficients (low-to-high powers of z).
    pub fn b(r: usize, d: f64) -> Vec<f64> {
        let e = d - 1.0;
        match r {
            1 => vec![d, 0.0],
            2 => vec![e * e - 1.0, 2.0 * d, 0.0],
            3 => vec![e * e * e + 1.0, -6.0 * d + 3.0 * d * d, 3.0 * d, 0.0],
            4 => vec![
                e * e * e * e - 1.0,
                12.0 * d - 12.0 * d * d + 4.0 * d * d * d,
                -12.0 * d + 6.0 * d * d,
                4.0 * d,
                0.0,
            ],
            5 => vec![
                e * e * e * e * e + 1.0,
                -20.0 * d + 30.0 * d * d - 20.0 * d * d * d + 5.0 * d * d * d * d,
                30.0 * d - 30.0 * d * d + 10.0 * d * d * d,
                -20.0 * d + 10.0 * d * d,
                5.0 * d,
                0.0,
            ],
            _ => panic!("order out of range"),
        }
    }

    /// Closed-form `c` coefficients: `binom(r, j) (d - 1)^{r-j}`.
    pub fn c(r: usize, d: f64) -> Vec<f64> {
        let e = d - 1.0;
        (0..=r)
            .map(|j| super::binom(r, j) as f64 * e.powi((r - j) as i32))
            .collect()
    }
}

/// A fully instantiated scheme of the family: order, parameter, and the three
/// coefficient vectors indexed low-to-high (`a[j]` multiplies `u_{n+j}`).
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ImExScheme {
    pub order: usize,
    pub delta: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// Generates the scheme of the given order and `delta`, evaluating the exact
/// rational derivation and cross-checking every coefficient against the
/// closed-form table to [`CROSS_CHECK_TOL`] relative accuracy.
pub fn generate_scheme(order: usize, delta: f64) -> Result<ImExScheme> {
    validate_order_delta(order, delta)?;
    let a: Vec<f64> = symbolic_a(order).iter().map(|p| p.eval(delta)).collect();
    let b: Vec<f64> = symbolic_b(order).iter().map(|p| p.eval(delta)).collect();
    let c: Vec<f64> = symbolic_c(order).iter().map(|p| p.eval(delta)).collect();

    let checks = [
        (&a, table::a(order, delta), "a"),
        (&b, table::b(order, delta), "b"),
        (&c, table::c(order, delta), "c"),
    ];
    for (got, want, name) in checks {
        for (j, (&g, &w)) in got.iter().zip(want.iter()).enumerate() {
            let scale = w.abs().max(1.0);
            if (g - w).abs() > CROSS_CHECK_TOL * scale {
                return Err(ImexError::Parameter(format!(
                    "coefficient cross-check failed: {name}[{j}] = {g:e} vs closed form {w:e} \
                     (order {order}, delta {delta})"
                )));
            }
        }
    }
    Ok(ImExScheme { order, delta, a, b, c })
}

/// The classical SBDF scheme of the given order (the `delta = 1` member).
pub fn sbdf(order: usize) -> Result<ImExScheme> {
    generate_scheme(order, 1.0)
}

impl ImExScheme {
    /// Evaluates the generating polynomials at a complex point, returning
    /// `(a(z), b(z), c(z))`.
    pub fn evaluate_polynomials(&self, z: C64) -> (C64, C64, C64) {
        (horner(&self.a, z), horner(&self.b, z), horner(&self.c, z))
    }

    /// Zero-stability: every root of `a(z)` lies in the closed unit disk and
    /// the roots on the unit circle are simple. `tol` is both the modulus
    /// slack and the minimum pairwise separation required of circle roots.
    pub fn check_zero_stability(&self, tol: f64) -> Result<bool> {
        // a(1) = 0 by consistency, and that root is exact; deflating it by
        // synthetic division keeps its ill-conditioning (interior roots
        // crowd z = 1 for small delta) out of the computed spectrum. The
        // quotient's roots must stay in the closed disk, with any boundary
        // roots simple and distinct from the deflated unit root.
        let n = self.a.len();
        let mut q = vec![0.0; n - 1];
        let mut carry = 0.0;
        for j in (1..n).rev() {
            carry += self.a[j];
            q[j - 1] = carry;
        }
        let coeffs: Vec<C64> = q.iter().map(|&x| C64::new(x, 0.0)).collect();
        let roots = linalg::polynomial_roots(&coeffs)?;
        for root in &roots {
            if root.norm() > 1.0 + tol {
                return Ok(false);
            }
        }
        let one = C64::new(1.0, 0.0);
        let boundary: Vec<&C64> = roots.iter().filter(|z| z.norm() >= 1.0 - tol).collect();
        for (i, zi) in boundary.iter().enumerate() {
            if (**zi - one).norm() <= tol {
                return Ok(false);
            }
            for zj in &boundary[i + 1..] {
                if (**zi - **zj).norm() <= tol {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Taylor residuals of the two order conditions through `h^order`.
    ///
    /// The first vector holds the `h^m` coefficients of
    /// `a(e^h) - h c(e^h)` for `m = 0..=order` (all must vanish for
    /// consistency of order `r`); the second holds the coefficients of
    /// `c(e^h) - b(e^h) - (e^h - 1)^order`, which must vanish for `m < order`
    /// and cancel the leading `1` at `m = order`.
    pub fn order_condition_residuals(&self) -> (Vec<f64>, Vec<f64>) {
        let r = self.order;
        let mut fact = vec![1.0; r + 1];
        for m in 1..=r {
            fact[m] = fact[m - 1] * m as f64;
        }
        let pow = |j: usize, m: usize| (j as f64).powi(m as i32);
        let mut res_a = Vec::with_capacity(r + 1);
        let mut res_cb = Vec::with_capacity(r + 1);
        for m in 0..=r {
            let sa: f64 = self.a.iter().enumerate().map(|(j, &v)| v * pow(j, m)).sum::<f64>()
                / fact[m];
            let sc = if m >= 1 {
                self.c.iter().enumerate().map(|(j, &v)| v * pow(j, m - 1)).sum::<f64>()
                    / fact[m - 1]
            } else {
                0.0
            };
            res_a.push(sa - sc);

            let scb: f64 = self
                .c
                .iter()
                .zip(self.b.iter())
                .enumerate()
                .map(|(j, (&cv, &bv))| (cv - bv) * pow(j, m))
                .sum::<f64>()
                / fact[m];
            // (e^h - 1)^r has Taylor coefficients 0 for m < r and 1 at m = r.
            let target = if m == r { 1.0 } else { 0.0 };
            res_cb.push(scb - target);
        }
        (res_a, res_cb)
    }

    /// True when both order conditions hold to the given residual tolerance.
    pub fn check_order_conditions(&self, tol: f64) -> bool {
        let (ra, rcb) = self.order_condition_residuals();
        ra.iter().chain(rcb.iter()).all(|&x| x.abs() <= tol)
    }
}

fn horner(coeffs: &[f64], z: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_rational::Rational64;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn poly(cs: &[Rational64]) -> DeltaPoly {
        DeltaPoly { coeffs: cs.to_vec() }.normalized()
    }

    /// The published closed forms transcribed as exact rationals
    /// (index: coefficient of delta^p, starting at p = 0).
    fn published_a(r: usize) -> Vec<DeltaPoly> {
        match r {
            1 => vec![poly(&[q(0, 1), q(-1, 1)]), poly(&[q(0, 1), q(1, 1)])],
            2 => vec![
                poly(&[q(0, 1), q(2, 1), q(-3, 2)]),
                poly(&[q(0, 1), q(-4, 1), q(2, 1)]),
                poly(&[q(0, 1), q(2, 1), q(-1, 2)]),
            ],
            3 => vec![
                poly(&[q(0, 1), q(-3, 1), q(9, 2), q(-11, 6)]),
                poly(&[q(0, 1), q(9, 1), q(-21, 2), q(3, 1)]),
                poly(&[q(0, 1), q(-9, 1), q(15, 2), q(-3, 2)]),
                poly(&[q(0, 1), q(3, 1), q(-3, 2), q(1, 3)]),
            ],
            4 => vec![
                poly(&[q(0, 1), q(4, 1), q(-9, 1), q(22, 3), q(-25, 12)]),
                poly(&[q(0, 1), q(-16, 1), q(30, 1), q(-58, 3), q(4, 1)]),
                poly(&[q(0, 1), q(24, 1), q(-36, 1), q(18, 1), q(-3, 1)]),
                poly(&[q(0, 1), q(-16, 1), q(18, 1), q(-22, 3), q(4, 3)]),
                poly(&[q(0, 1), q(4, 1), q(-3, 1), q(4, 3), q(-1, 4)]),
            ],
            5 => vec![
                poly(&[q(0, 1), q(-5, 1), q(15, 1), q(-55, 3), q(125, 12), q(-137, 60)]),
                poly(&[q(0, 1), q(25, 1), q(-65, 1), q(200, 3), q(-365, 12), q(5, 1)]),
                poly(&[q(0, 1), q(-50, 1), q(110, 1), q(-280, 3), q(35, 1), q(-5, 1)]),
                poly(&[q(0, 1), q(50, 1), q(-90, 1), q(190, 3), q(-65, 3), q(10, 3)]),
                poly(&[q(0, 1), q(-25, 1), q(35, 1), q(-65, 3), q(95, 12), q(-5, 4)]),
                poly(&[q(0, 1), q(5, 1), q(-5, 1), q(10, 3), q(-5, 4), q(1, 5)]),
            ],
            _ => unreachable!(),
        }
    }

    #[test]
    fn rational_derivation_matches_published_forms_exactly() {
        for r in 1..=5 {
            let derived = symbolic_a(r);
            let published = published_a(r);
            for (j, (d, p)) in derived.iter().zip(published.iter()).enumerate() {
                assert_eq!(d, p, "a[{j}] mismatch at order {r}");
            }
        }
    }

    #[test]
    fn sbdf_instances_match_classical_constants() {
        let s1 = sbdf(1).unwrap();
        assert_eq!(s1.a, vec![-1.0, 1.0]);
        assert_eq!(s1.c, vec![0.0, 1.0]);
        assert_eq!(s1.b, vec![1.0, 0.0]);

        let s2 = sbdf(2).unwrap();
        assert_eq!(s2.a, vec![0.5, -2.0, 1.5]);
        assert_eq!(s2.c, vec![0.0, 0.0, 1.0]);
        assert_eq!(s2.b, vec![-1.0, 2.0, 0.0]);

        let s3 = sbdf(3).unwrap();
        assert_eq!(s3.a, vec![-1.0 / 3.0, 1.5, -3.0, 11.0 / 6.0]);
        assert_eq!(s3.b, vec![1.0, -3.0, 3.0, 0.0]);

        let s4 = sbdf(4).unwrap();
        assert_eq!(s4.a, vec![0.25, -4.0 / 3.0, 3.0, -4.0, 25.0 / 12.0]);
        assert_eq!(s4.b, vec![-1.0, 4.0, -6.0, 4.0, 0.0]);

        let s5 = sbdf(5).unwrap();
        assert_eq!(
            s5.a,
            vec![-0.2, 5.0 / 4.0, -10.0 / 3.0, 5.0, -5.0, 137.0 / 60.0]
        );
        assert_eq!(s5.b, vec![1.0, -5.0, 10.0, -10.0, 5.0, 0.0]);
    }

    #[test]
    fn generating_polynomials_at_one() {
        // a(1) = 0 (consistency); b(1) = c(1) = delta^r.
        for r in 1..=5 {
            for &d in &[0.05, 0.3, 0.77, 1.0] {
                let s = generate_scheme(r, d).unwrap();
                let (a1, b1, c1) = s.evaluate_polynomials(C64::new(1.0, 0.0));
                assert_relative_eq!(a1.re, 0.0, epsilon = 1e-13);
                assert_relative_eq!(c1.re, d.powi(r as i32), max_relative = 1e-12);
                assert_relative_eq!(b1.re, d.powi(r as i32), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn order_condition_residuals_are_tiny() {
        let s = generate_scheme(3, 0.5).unwrap();
        let (ra, rcb) = s.order_condition_residuals();
        for v in ra.iter().chain(rcb.iter()) {
            assert!(v.abs() < 1e-13, "residual {v:e}");
        }
        assert!(s.check_order_conditions(ORDER_CONDITION_TOL));
    }

    #[test]
    fn first_omitted_residual_is_backward_euler_constant() {
        // For r = 1, delta = 1 the h^2 coefficient of a(e^h) - h c(e^h)
        // is -1/2, the classical backward-Euler truncation constant.
        let s = sbdf(1).unwrap();
        // Recompute the m = r + 1 = 2 coefficient directly.
        let m = s.order + 1;
        let fact_m = 2.0;
        let sa: f64 = s.a.iter().enumerate().map(|(j, &v)| v * (j as f64).powi(m as i32)).sum::<f64>()
            / fact_m;
        let sc: f64 = s.c.iter().enumerate().map(|(j, &v)| v * (j as f64).powi((m - 1) as i32)).sum();
        assert_relative_eq!(sa - sc, -0.5, epsilon = 1e-14);
    }

    #[test]
    fn truncation_scaling_confirms_order() {
        // Independent route: a(e^h) - h c(e^h) should scale like h^{r+1}.
        for r in 1..=5 {
            let s = generate_scheme(r, 0.35).unwrap();
            let resid = |h: f64| {
                let z = C64::new(h.exp(), 0.0);
                let (a, _, c) = s.evaluate_polynomials(z);
                (a - C64::new(h, 0.0) * c).norm()
            };
            // h small enough for the leading term to dominate, large enough
            // to keep resid(h/2) ~ 5e-13 above evaluation roundoff at r = 5.
            let h0 = 2e-2;
            let ratio = resid(h0) / resid(h0 / 2.0);
            let expected = 2f64.powi(r as i32 + 1);
            assert!(
                (ratio / expected - 1.0).abs() < 0.06,
                "order {r}: ratio {ratio} vs {expected}"
            );
        }
    }

    #[test]
    fn sbdf2_difference_roots_from_quadratic_formula() {
        // a(z) = (3 z^2 - 4 z + 1) / 2 has roots 1 and 1/3.
        let s = sbdf(2).unwrap();
        let coeffs: Vec<C64> = s.a.iter().map(|&x| C64::new(x, 0.0)).collect();
        let mut roots = linalg::polynomial_roots(&coeffs).unwrap();
        roots.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert_relative_eq!(roots[0].re, 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(roots[1].re, 1.0, epsilon = 1e-12);
        assert!(roots.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn zero_stability_holds_across_grid() {
        for r in 1..=5 {
            for i in 1..=20 {
                let d = 0.05 * i as f64;
                let s = generate_scheme(r, d).unwrap();
                assert!(
                    s.check_zero_stability(ZERO_STABILITY_TOL).unwrap(),
                    "order {r} delta {d}"
                );
            }
        }
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(generate_scheme(0, 0.5).is_err());
        assert!(generate_scheme(6, 0.5).is_err());
        assert!(generate_scheme(3, 0.0).is_err());
        assert!(generate_scheme(3, 1.2).is_err());
        assert!(generate_scheme(3, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn family_invariants_hold_for_random_delta(
            r in 1usize..=5,
            d in 1e-6f64..=1.0,
        ) {
            let s = generate_scheme(r, d).unwrap();
            // b_r = 0 exactly and c_r = 1 exactly.
            prop_assert_eq!(*s.b.last().unwrap(), 0.0);
            prop_assert_eq!(*s.c.last().unwrap(), 1.0);
            // a(1) = 0 and the order conditions hold.
            let (a1, _, _) = s.evaluate_polynomials(C64::new(1.0, 0.0));
            prop_assert!(a1.norm() < 1e-12);
            prop_assert!(s.check_order_conditions(1e-10));
            // Zero stability: the deflated difference roots sit near
            // 1 - delta/2 in a cluster of diameter O(delta), and double
            // precision splits such a cluster by roughly eps^(1/(r-1)),
            // so the certification is only meaningful for delta >= 1e-2.
            if d >= 1e-2 {
                prop_assert!(s.check_zero_stability(ZERO_STABILITY_TOL).unwrap());
            }
        }
    }
}
