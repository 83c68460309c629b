//! Small dense linear-algebra helpers shared by the stability and spectra
//! modules: polynomial roots, Hermitian eigendecompositions, and general
//! complex eigenvalues.

use std::f64::consts::PI;

use crate::error::{ImexError, Result};
use crate::C64;
use nalgebra::DMatrix;

/// Roots of a polynomial `p(z) = sum_k coeffs[k] z^k` (low-to-high order),
/// computed by the Durand-Kerner simultaneous iteration on the monic form.
///
/// Unlike QR on the companion matrix, the iteration does not stall on
/// multiple roots; a cluster of multiplicity m is still only resolved to
/// its intrinsic conditioning, roughly eps^(1/m). Trailing (highest-order)
/// coefficients that are exactly zero are ignored, and constant
/// polynomials yield an empty vector.
pub fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let mut deg = coeffs.len();
    while deg > 0 && coeffs[deg - 1] == C64::new(0.0, 0.0) {
        deg -= 1;
    }
    if deg <= 1 {
        return Ok(Vec::new());
    }
    let n = deg - 1; // polynomial degree
    let lead = coeffs[n];
    if !lead.re.is_finite() || !lead.im.is_finite() || lead.norm() == 0.0 {
        return Err(ImexError::Parameter(
            "polynomial has a non-finite or zero leading coefficient".into(),
        ));
    }
    let monic: Vec<C64> = coeffs[..n].iter().map(|&c| c / lead).collect();
    if n == 1 {
        return Ok(vec![-monic[0]]);
    }
    let eval = |z: C64| -> C64 {
        let mut p = C64::new(1.0, 0.0);
        for &c in monic.iter().rev() {
            p = p * z + c;
        }
        p
    };
    // Start points on the Cauchy-bound circle, rotated off any axis of
    // symmetry of the coefficients.
    let radius = 1.0 + monic.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..n)
        .map(|i| C64::from_polar(radius, 2.0 * PI * i as f64 / n as f64 + 0.4))
        .collect();
    let stop = 1e-14 * radius.max(1.0);
    for _ in 0..1000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                denom = C64::new(f64::EPSILON, 0.0);
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < stop {
            return Ok(z);
        }
    }
    // Step sizes plateau at the conditioning limit of root clusters; the
    // approximations are still valid there, so only reject answers whose
    // residuals are out of all proportion to the coefficients.
    let scale = 1.0 + monic.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if z.iter().all(|&zi| eval(zi).norm() <= 1e-6 * scale) {
        Ok(z)
    } else {
        Err(ImexError::EigenConvergence(format!(
            "root iteration stalled on a degree-{n} polynomial"
        )))
    }
}

/// Eigenvalues of a general complex matrix via the Schur decomposition.
///
/// The iteration is capped: repeated eigenvalues (companion matrices of
/// polynomials with multiple roots, say) may never reach machine epsilon,
/// so the tolerance is relaxed in decades until the decomposition lands.
pub fn complex_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let max_iters = 100 * n.max(10);
    for eps in [f64::EPSILON, 1e-14, 1e-12, 1e-10] {
        if let Some(schur) = nalgebra::linalg::Schur::try_new(m.clone(), eps, max_iters) {
            let (_, t) = schur.unpack();
            return Ok((0..n).map(|i| t[(i, i)]).collect());
        }
    }
    Err(ImexError::EigenConvergence(format!(
        "schur on {n}x{n} matrix stalled above tolerance 1e-10"
    )))
}

/// Eigenvalues of a general real matrix (returned as complex numbers).
pub fn real_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<C64>> {
    complex_eigenvalues(&m.map(C64::from))
}

/// Full eigendecomposition of a complex Hermitian matrix.
///
/// Returns eigenvalues in ascending order with the matching orthonormal
/// eigenvectors as columns.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = m.nrows();
    let se = nalgebra::linalg::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| ImexError::EigenConvergence(format!("hermitian eigen on {n}x{n}")))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// Eigenvalues of a complex Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    let se = nalgebra::linalg::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| ImexError::EigenConvergence(format!("hermitian eigen on {n}x{n}")))?;
    let mut v: Vec<f64> = se.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    let se = nalgebra::linalg::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| ImexError::EigenConvergence(format!("symmetric eigen on {n}x{n}")))?;
    let mut v: Vec<f64> = se.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Extreme eigenpair (largest eigenvalue and its eigenvector) of a complex
/// Hermitian matrix.
pub fn hermitian_top_eigenpair(m: &DMatrix<C64>) -> Result<(f64, nalgebra::DVector<C64>)> {
    let n = m.nrows();
    let se = nalgebra::linalg::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| ImexError::EigenConvergence(format!("hermitian eigen on {n}x{n}")))?;
    let mut best = 0;
    for i in 1..n {
        if se.eigenvalues[i] > se.eigenvalues[best] {
            best = i;
        }
    }
    Ok((se.eigenvalues[best], se.eigenvectors.column(best).into_owned()))
}
