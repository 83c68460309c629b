//! Time integration of split systems du/dt = A u + B(u, t) with the family
//! schemes: the implicit part is advanced through a shifted solve, the
//! explicit part through cached operator applications on the history window.

use std::collections::VecDeque;

use nalgebra::{ComplexField, DVector};

use crate::coeffs::ImExScheme;
use crate::error::{ImexError, Result};

/// Norm growth factor beyond which an integration is declared unstable.
pub const INSTABILITY_GROWTH: f64 = 1e12;

/// An operator splitting du/dt = A u + B(u, t).
///
/// `apply_a` must be linear. `apply_b` may be nonlinear and carries any
/// forcing, so a pure source term is an `apply_b` that ignores `u`; it is
/// fallible so that nonlinear terms can reject states outside their domain.
/// `solve_shifted` solves `(alpha I - beta A) x = rhs`.
pub trait SplitOperator {
    type Field: ComplexField<RealField = f64> + Copy;

    fn dim(&self) -> usize;
    fn apply_a(&self, u: &DVector<Self::Field>) -> DVector<Self::Field>;
    fn apply_b(&self, u: &DVector<Self::Field>, t: f64) -> Result<DVector<Self::Field>>;
    fn solve_shifted(
        &self,
        alpha: f64,
        beta: f64,
        rhs: &DVector<Self::Field>,
    ) -> Result<DVector<Self::Field>>;
}

struct HistoryEntry<F: ComplexField<RealField = f64>> {
    u: DVector<F>,
    au: DVector<F>,
    bu: DVector<F>,
}

/// Multistep integration state: the scheme, the step size, and a window of
/// the last `order` states with their cached operator applications, so each
/// step costs one `apply_a`, one `apply_b`, and one shifted solve.
///
/// Instability is declared when the state norm exceeds
/// [`INSTABILITY_GROWTH`] times the largest initial history norm (or 1 when
/// the initial data is identically zero).
pub struct StepperState<F: ComplexField<RealField = f64>> {
    scheme: ImExScheme,
    k: f64,
    t_base: f64,
    steps: usize,
    reference_norm: f64,
    history: VecDeque<HistoryEntry<F>>,
}

fn check_step_size(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(ImexError::Parameter(format!(
            "step size must be positive and finite, got {k}"
        )));
    }
    Ok(())
}

fn cache_entry<O: SplitOperator>(
    op: &O,
    u: DVector<O::Field>,
    t: f64,
) -> Result<HistoryEntry<O::Field>> {
    let au = op.apply_a(&u);
    let bu = op.apply_b(&u, t)?;
    Ok(HistoryEntry { u, au, bu })
}

/// One multistep solve from a full history window (oldest first). Returns
/// the new entry with its cached operator applications at time `t_next`.
fn advance<O: SplitOperator>(
    op: &O,
    scheme: &ImExScheme,
    k: f64,
    t_next: f64,
    history: &VecDeque<HistoryEntry<O::Field>>,
) -> Result<HistoryEntry<O::Field>> {
    let r = scheme.order;
    debug_assert_eq!(history.len(), r);
    let mut rhs = DVector::<O::Field>::zeros(op.dim());
    for (j, entry) in history.iter().enumerate() {
        let one = O::Field::from_real(1.0);
        rhs.axpy(O::Field::from_real(-scheme.a[j]), &entry.u, one);
        if scheme.c[j] != 0.0 {
            rhs.axpy(O::Field::from_real(k * scheme.c[j]), &entry.au, one);
        }
        if scheme.b[j] != 0.0 {
            rhs.axpy(O::Field::from_real(k * scheme.b[j]), &entry.bu, one);
        }
    }
    let u = op.solve_shifted(scheme.a[r], k * scheme.c[r], &rhs)?;
    cache_entry(op, u, t_next)
}

/// Restamps a domain error raised inside an operator application with the
/// step index at which it occurred.
fn stamp_domain_step(err: ImexError, step: usize) -> ImexError {
    match err {
        ImexError::Domain { step: 0, reason } => ImexError::Domain { step, reason },
        other => other,
    }
}

impl<F: ComplexField<RealField = f64> + Copy> StepperState<F> {
    /// Builds the state from exact (or externally computed) samples, ordered
    /// oldest to newest; the newest sits at `t_newest`, earlier ones at
    /// spacing `k` before it.
    pub fn initialize_exact<O: SplitOperator<Field = F>>(
        op: &O,
        scheme: &ImExScheme,
        k: f64,
        t_newest: f64,
        states: &[DVector<F>],
    ) -> Result<Self> {
        check_step_size(k)?;
        let r = scheme.order;
        if states.len() != r {
            return Err(ImexError::Initialization(format!(
                "an order-{r} scheme needs {r} history states, got {}",
                states.len()
            )));
        }
        let mut reference_norm = 0.0f64;
        let mut history = VecDeque::with_capacity(r);
        for (i, u) in states.iter().enumerate() {
            if u.len() != op.dim() {
                return Err(ImexError::Initialization(format!(
                    "history state {i} has length {}, operator dimension is {}",
                    u.len(),
                    op.dim()
                )));
            }
            let t = t_newest - (r - 1 - i) as f64 * k;
            reference_norm = reference_norm.max(u.norm());
            history.push_back(cache_entry(op, u.clone(), t)?);
        }
        if reference_norm == 0.0 {
            reference_norm = 1.0;
        }
        Ok(Self {
            scheme: scheme.clone(),
            k,
            t_base: t_newest,
            steps: 0,
            reference_norm,
            history,
        })
    }

    /// Fills the history window from a single state at `t0` by integrating
    /// forward on a subgrid of `substeps` steps per coarse interval, raising
    /// the scheme order by one as each new history slot becomes available.
    pub fn initialize_bootstrap<O: SplitOperator<Field = F>>(
        op: &O,
        scheme: &ImExScheme,
        k: f64,
        t0: f64,
        u0: DVector<F>,
        substeps: usize,
    ) -> Result<Self> {
        check_step_size(k)?;
        if substeps == 0 {
            return Err(ImexError::Parameter(
                "bootstrap needs at least one substep per coarse interval".into(),
            ));
        }
        let r = scheme.order;
        if r == 1 {
            return Self::initialize_exact(op, scheme, k, t0, &[u0]);
        }
        let h = k / substeps as f64;
        let ladder: Vec<ImExScheme> = (1..=r)
            .map(|q| crate::coeffs::generate_scheme(q, scheme.delta))
            .collect::<Result<_>>()?;
        let mut fine: VecDeque<HistoryEntry<F>> = VecDeque::with_capacity(r);
        fine.push_back(cache_entry(op, u0, t0)?);
        let mut coarse: Vec<DVector<F>> = vec![fine[0].u.clone()];
        for n in 0..(r - 1) * substeps {
            let q = fine.len();
            let t_next = t0 + (n + 1) as f64 * h;
            let entry =
                advance(op, &ladder[q - 1], h, t_next, &fine).map_err(|e| stamp_domain_step(e, n + 1))?;
            let norm = entry.u.norm();
            if !norm.is_finite() {
                return Err(ImexError::Initialization(format!(
                    "bootstrap produced a non-finite state at substep {}",
                    n + 1
                )));
            }
            if (n + 1) % substeps == 0 {
                coarse.push(entry.u.clone());
            }
            fine.push_back(entry);
            if fine.len() > r {
                fine.pop_front();
            }
        }
        Self::initialize_exact(op, scheme, k, t0 + (r - 1) as f64 * k, &coarse)
    }

    pub fn scheme(&self) -> &ImExScheme {
        &self.scheme
    }

    pub fn step_size(&self) -> f64 {
        self.k
    }

    /// Time of the newest state.
    pub fn time(&self) -> f64 {
        self.t_base + self.steps as f64 * self.k
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// The newest state.
    pub fn current(&self) -> &DVector<F> {
        &self.history.back().expect("history is never empty").u
    }

    /// History states, oldest to newest.
    pub fn history(&self) -> impl Iterator<Item = &DVector<F>> {
        self.history.iter().map(|e| &e.u)
    }

    /// Advances one step of size `k`.
    pub fn step<O: SplitOperator<Field = F>>(&mut self, op: &O) -> Result<()> {
        let t_next = self.t_base + (self.steps + 1) as f64 * self.k;
        let entry = advance(op, &self.scheme, self.k, t_next, &self.history)
            .map_err(|e| stamp_domain_step(e, self.steps + 1))?;
        let norm = entry.u.norm();
        let limit = INSTABILITY_GROWTH * self.reference_norm;
        if !norm.is_finite() || norm > limit {
            return Err(ImexError::Instability {
                step: self.steps + 1,
                norm,
                limit,
            });
        }
        self.history.push_back(entry);
        self.history.pop_front();
        self.steps += 1;
        Ok(())
    }

    /// Integrates to `t_final`, which must be a whole number of steps away,
    /// invoking `observer(step, t, u)` after each step.
    pub fn integrate_with<O: SplitOperator<Field = F>>(
        &mut self,
        op: &O,
        t_final: f64,
        mut observer: impl FnMut(usize, f64, &DVector<F>),
    ) -> Result<()> {
        let span = t_final - self.time();
        let n = (span / self.k).round();
        if n < 0.0 || (n * self.k - span).abs() > 1e-6 * self.k {
            return Err(ImexError::Parameter(format!(
                "final time {t_final} is not a whole number of steps of {} past {}",
                self.k,
                self.time()
            )));
        }
        for _ in 0..n as usize {
            self.step(op)?;
            observer(self.steps, self.time(), self.current());
        }
        Ok(())
    }

    /// Integrates to `t_final`, which must be a whole number of steps away.
    pub fn integrate<O: SplitOperator<Field = F>>(&mut self, op: &O, t_final: f64) -> Result<()> {
        self.integrate_with(op, t_final, |_, _, _| {})
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{generate_scheme, sbdf};
    use crate::C64;
    use approx::assert_relative_eq;

    /// Diagonal splitting: A = diag(a), B u = diag(b) u + f(t).
    struct DiagSplit<F: ComplexField<RealField = f64>> {
        a: Vec<F>,
        b: Vec<F>,
        forcing: Option<fn(f64) -> F>,
    }

    impl<F: ComplexField<RealField = f64> + Copy> DiagSplit<F> {
        fn plain(a: Vec<F>, b: Vec<F>) -> Self {
            Self { a, b, forcing: None }
        }
    }

    impl<F: ComplexField<RealField = f64> + Copy> SplitOperator for DiagSplit<F> {
        type Field = F;

        fn dim(&self) -> usize {
            self.a.len()
        }

        fn apply_a(&self, u: &DVector<F>) -> DVector<F> {
            DVector::from_fn(u.len(), |i, _| self.a[i] * u[i])
        }

        fn apply_b(&self, u: &DVector<F>, t: f64) -> Result<DVector<F>> {
            let f = self
                .forcing
                .map(|f| f(t))
                .unwrap_or_else(|| F::from_real(0.0));
            Ok(DVector::from_fn(u.len(), |i, _| self.b[i] * u[i] + f))
        }

        fn solve_shifted(&self, alpha: f64, beta: f64, rhs: &DVector<F>) -> Result<DVector<F>> {
            Ok(DVector::from_fn(rhs.len(), |i, _| {
                rhs[i] / (F::from_real(alpha) - F::from_real(beta) * self.a[i])
            }))
        }
    }

    fn scalar_split(a: f64, b: f64) -> DiagSplit<f64> {
        DiagSplit::plain(vec![a], vec![b])
    }

    fn exact_history(lambda: f64, order: usize, k: f64, t_newest: f64) -> Vec<DVector<f64>> {
        (0..order)
            .map(|i| {
                let t = t_newest - (order - 1 - i) as f64 * k;
                DVector::from_element(1, (lambda * t).exp())
            })
            .collect()
    }

    #[test]
    fn first_order_step_matches_the_hand_computation() {
        let op = scalar_split(-1.0, -9.0);
        let scheme = sbdf(1).expect("scheme");
        let k = 0.1;
        let mut state =
            StepperState::initialize_exact(&op, &scheme, k, 0.0, &[DVector::from_element(1, 1.0)])
                .expect("init");
        state.step(&op).expect("step");
        // (u1 - u0)/k = -u1 - 9 u0  =>  u1 = (1/k - 9)/(1/k + 1).
        assert_relative_eq!(state.current()[0], 1.0 / 11.0, epsilon = 1e-14);
        assert_relative_eq!(state.time(), k, epsilon = 1e-15);
    }

    #[test]
    fn constant_states_are_preserved_when_the_parts_cancel() {
        let op = scalar_split(-2.0, 2.0);
        for order in 1..=5 {
            let scheme = generate_scheme(order, 0.7).expect("scheme");
            let states: Vec<_> = (0..order).map(|_| DVector::from_element(1, 3.5)).collect();
            let mut state =
                StepperState::initialize_exact(&op, &scheme, 0.25, 0.0, &states).expect("init");
            state.integrate(&op, 12.5).expect("integrate");
            assert_relative_eq!(state.current()[0], 3.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn observed_convergence_matches_the_order() {
        // The split ratio lb/(la+lb) must stay away from the leading error
        // constant of every (order, delta) pair below, otherwise the two
        // truncation contributions cancel and the measured rate jumps by one.
        let (la, lb) = (-0.95, -0.05);
        let lambda = la + lb;
        let op = scalar_split(la, lb);
        for order in 1..=5usize {
            for &delta in &[1.0, 0.6] {
                let scheme = generate_scheme(order, delta).expect("scheme");
                let exponents: &[i32] = match order {
                    1 | 2 => &[5, 6, 7, 8, 9],
                    3 | 4 => &[4, 5, 6, 7],
                    _ => &[3, 4, 5, 6],
                };
                let errors: Vec<f64> = exponents
                    .iter()
                    .map(|&e| {
                        let k = 2.0f64.powi(-e);
                        let mut state = StepperState::initialize_exact(
                            &op,
                            &scheme,
                            k,
                            0.0,
                            &exact_history(lambda, order, k, 0.0),
                        )
                        .expect("init");
                        state.integrate(&op, 1.0).expect("integrate");
                        (state.current()[0] - lambda.exp()).abs()
                    })
                    .collect();
                let rate = (errors[errors.len() - 2] / errors[errors.len() - 1]).log2();
                assert!(
                    (rate - order as f64).abs() < 0.12,
                    "order {order}, delta {delta}: rate {rate}, errors {errors:?}"
                );
            }
        }
    }

    #[test]
    fn bootstrap_history_approaches_the_exact_samples() {
        let op = scalar_split(-1.0, 0.0);
        let scheme = generate_scheme(3, 0.8).expect("scheme");
        let k = 2.0f64.powi(-6);
        let u0 = DVector::from_element(1, 1.0);

        let sup_error = |substeps: usize| -> f64 {
            let state =
                StepperState::initialize_bootstrap(&op, &scheme, k, 0.0, u0.clone(), substeps)
                    .expect("bootstrap");
            assert_relative_eq!(state.time(), 2.0 * k, epsilon = 1e-15);
            state
                .history()
                .enumerate()
                .map(|(i, u)| (u[0] - (-(i as f64) * k).exp()).abs())
                .fold(0.0f64, f64::max)
        };

        let coarse = sup_error(4);
        let fine = sup_error(64);
        assert!(fine < coarse, "substeps must improve the history");
        assert!(fine <= 10.0 * k * k / 64.0, "error {fine}");
    }

    #[test]
    fn bootstrapped_integration_keeps_the_scheme_order() {
        let (la, lb) = (-1.0, -0.5);
        let lambda = la + lb;
        let op = scalar_split(la, lb);
        let scheme = generate_scheme(3, 1.0).expect("scheme");
        let errors: Vec<f64> = [4i32, 5, 6]
            .iter()
            .map(|&e| {
                let k = 2.0f64.powi(-e);
                let mut state = StepperState::initialize_bootstrap(
                    &op,
                    &scheme,
                    k,
                    0.0,
                    DVector::from_element(1, 1.0),
                    256,
                )
                .expect("bootstrap");
                state.integrate(&op, 1.0).expect("integrate");
                (state.current()[0] - lambda.exp()).abs()
            })
            .collect();
        let rate = (errors[1] / errors[2]).log2();
        assert!((rate - 3.0).abs() < 0.15, "rate {rate}, errors {errors:?}");
    }

    #[test]
    fn forcing_enters_through_the_explicit_weights() {
        // u' = -u + (cos t + sin t) has the solution u = sin t from u(0) = 0.
        let forced = |t: f64| t.cos() + t.sin();
        for order in [1usize, 3] {
            let scheme = generate_scheme(order, 1.0).expect("scheme");
            let op = DiagSplit::<f64> {
                a: vec![-1.0],
                b: vec![0.0],
                forcing: Some(forced),
            };
            let k = 2.0f64.powi(-7);
            let states: Vec<_> = (0..order)
                .map(|i| {
                    let t = -((order - 1 - i) as f64) * k;
                    DVector::from_element(1, t.sin())
                })
                .collect();
            let mut state =
                StepperState::initialize_exact(&op, &scheme, k, 0.0, &states).expect("init");
            state.integrate(&op, 1.0).expect("integrate");
            let tol = if order == 1 { 5e-3 } else { 1e-6 };
            assert!(
                (state.current()[0] - 1.0f64.sin()).abs() < tol,
                "order {order}"
            );
        }
    }

    #[test]
    fn zero_initial_data_uses_a_unit_reference_norm() {
        let forced = |t: f64| t.cos() + t.sin();
        let op = DiagSplit::<f64> {
            a: vec![-1.0],
            b: vec![0.0],
            forcing: Some(forced),
        };
        let scheme = sbdf(1).expect("scheme");
        let mut state =
            StepperState::initialize_exact(&op, &scheme, 0.01, 0.0, &[DVector::zeros(1)])
                .expect("init");
        state.integrate(&op, 1.0).expect("integrate");
        assert!((state.current()[0] - 1.0f64.sin()).abs() < 1e-2);
    }

    #[test]
    fn complex_diagonal_splitting_integrates_a_rotation() {
        // u' = i u, split as A = -1 (damping shift) and B = i + 1.
        let i = C64::new(0.0, 1.0);
        let op = DiagSplit::plain(vec![C64::from(-1.0)], vec![i + 1.0]);
        let scheme = generate_scheme(2, 1.0).expect("scheme");
        let k = 2.0f64.powi(-9);
        let states: Vec<_> = (0..2)
            .map(|j| {
                let t = -(1 - j) as f64 * k;
                DVector::from_element(1, (i * t).exp())
            })
            .collect();
        let mut state = StepperState::initialize_exact(&op, &scheme, k, 0.0, &states).expect("init");
        state.integrate(&op, 1.0).expect("integrate");
        let exact = (i * 1.0).exp();
        assert!((state.current()[0] - exact).norm() < 1e-5);
    }

    #[test]
    fn unstable_large_steps_are_detected() {
        // The endpoint scheme of order 3 cannot take mu = -9 k at large k.
        let op = scalar_split(-1.0, -9.0);
        let scheme = sbdf(3).expect("scheme");
        let mut tripped = false;
        for e in [0i32, 5, 10, 15, 20] {
            let k = 2.0f64.powi(e);
            let mut state = StepperState::initialize_exact(
                &op,
                &scheme,
                k,
                0.0,
                &[
                    DVector::from_element(1, 1.0),
                    DVector::from_element(1, 1.0),
                    DVector::from_element(1, 1.0),
                ],
            )
            .expect("init");
            match state.integrate(&op, 200.0 * k) {
                Err(ImexError::Instability { step, norm, limit }) => {
                    tripped = true;
                    assert!(step >= 1 && step <= 200);
                    assert!(norm > limit);
                }
                Ok(()) => {}
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
        assert!(tripped, "no probed step size tripped the instability check");
    }

    #[test]
    fn certified_parameters_stay_bounded_at_any_step_size() {
        // Simultaneously diagonalizable split with generalized eigenvalues
        // -3 and -0.5, certified for order 3 at delta = 0.05.
        let op = DiagSplit::plain(vec![-1.0, -2.0], vec![-3.0, -1.0]);
        let scheme = generate_scheme(3, 0.05).expect("scheme");
        for mu in [-3.0, -0.5] {
            assert!(
                crate::diagram::contains(3, 0.05, C64::from(mu), 1e-9).expect("contains"),
                "mu {mu} must lie inside the diagram"
            );
        }
        for &k in &[1e-2, 1.0, 1e2, 1e4] {
            let states: Vec<_> = (0..3).map(|_| DVector::from_element(2, 1.0)).collect();
            let mut state =
                StepperState::initialize_exact(&op, &scheme, k, 0.0, &states).expect("init");
            state.integrate(&op, 200.0 * k).expect("integrate");
            assert!(
                state.current().norm() <= 10.0,
                "k = {k}: norm {}",
                state.current().norm()
            );
        }
    }

    #[test]
    fn initialization_rejects_bad_inputs() {
        let op = scalar_split(-1.0, 0.0);
        let scheme = sbdf(2).expect("scheme");
        assert!(matches!(
            StepperState::initialize_exact(&op, &scheme, 0.1, 0.0, &[DVector::zeros(1)]),
            Err(ImexError::Initialization(_))
        ));
        assert!(matches!(
            StepperState::initialize_exact(
                &op,
                &scheme,
                -0.1,
                0.0,
                &[DVector::zeros(1), DVector::zeros(1)]
            ),
            Err(ImexError::Parameter(_))
        ));
        assert!(matches!(
            StepperState::initialize_exact(
                &op,
                &scheme,
                0.1,
                0.0,
                &[DVector::zeros(2), DVector::zeros(2)]
            ),
            Err(ImexError::Initialization(_))
        ));
        let mut state = StepperState::initialize_exact(
            &op,
            &scheme,
            0.1,
            0.0,
            &[DVector::zeros(1), DVector::zeros(1)],
        )
        .expect("init");
        assert!(matches!(
            state.integrate(&op, 0.15),
            Err(ImexError::Parameter(_))
        ));
        state.integrate(&op, 0.0).expect("zero steps");
        assert_eq!(state.steps_taken(), 0);
    }
}
