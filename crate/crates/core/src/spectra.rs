//! Generalized eigenvalues and numerical-range sets for operator splittings.
//!
//! A [`SplittingPair`] holds the implicit operator `A` (Hermitian with
//! negative spectrum, zero only on a declared null space) and the explicit
//! operator `B`. Stability certification reduces to locating the generalized
//! eigenvalues `mu` solving `-mu A v = B v` and the ranges
//! `W_p(A, B) = W((-A)^{p/2-1} B (-A)^{-p/2})`, where `W(X)` is the
//! numerical range of `X`. When `A` is singular, the computation is
//! restricted to the orthogonal complement of the declared null basis.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{ImexError, Result};
use crate::linalg;
use crate::C64;

/// Default number of support angles in the numerical-range sweep.
pub const DEFAULT_ANGLES: usize = 256;

const HERMITIAN_REL_TOL: f64 = 1e-12;
const ORTHONORMALITY_TOL: f64 = 1e-10;
const NULL_ACTION_REL_TOL: f64 = 1e-10;
const DEFINITENESS_REL_TOL: f64 = 1e-12;

/// Which kind of set a [`SpectralSet`] describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralKind {
    Eigenvalues,
    NumericalRange,
}

/// A finite description of a spectral set in the complex plane.
///
/// For [`SpectralKind::Eigenvalues`] the points are the generalized
/// eigenvalues themselves. For [`SpectralKind::NumericalRange`] they are
/// support points of the range boundary in sweep order, so their convex hull
/// is an inner approximation of the range.
#[derive(Clone, Debug)]
pub struct SpectralSet {
    pub kind: SpectralKind,
    /// Exponent when the set is a `W_p` range.
    pub p: Option<f64>,
    pub points: Vec<C64>,
    /// True when the computation was restricted to the complement of a
    /// declared null space.
    pub restricted: bool,
}

impl SpectralSet {
    /// Convex hull vertices of the stored points, counterclockwise.
    pub fn hull_vertices(&self) -> Vec<C64> {
        convex_hull(&self.points)
    }

    /// Whether `z` lies in the convex hull of the points, within `tol`.
    pub fn contains(&self, z: C64, tol: f64) -> bool {
        hull_contains(&self.hull_vertices(), z, tol)
    }

    /// At least `n` samples along the hull boundary, always including every
    /// hull vertex.
    pub fn boundary_samples(&self, n: usize) -> Vec<C64> {
        sample_hull_boundary(&self.hull_vertices(), n)
    }
}

/// An operator splitting `(A, B)` with Hermitian `A` of negative spectrum.
///
/// If `A` is singular its null space must be declared through an orthonormal
/// basis; all spectral computations then act on the orthogonal complement.
#[derive(Clone, Debug)]
pub struct SplittingPair {
    a: DMatrix<C64>,
    b: DMatrix<C64>,
    null_basis: Option<DMatrix<C64>>,
    complement: Option<DMatrix<C64>>,
}

impl SplittingPair {
    /// Builds a pair with nonsingular `A`.
    pub fn new(a: DMatrix<C64>, b: DMatrix<C64>) -> Result<Self> {
        Self::build(a, b, None)
    }

    /// Builds a pair whose `A` vanishes exactly on the span of the given
    /// orthonormal columns.
    pub fn with_null_basis(
        a: DMatrix<C64>,
        b: DMatrix<C64>,
        null_basis: DMatrix<C64>,
    ) -> Result<Self> {
        Self::build(a, b, Some(null_basis))
    }

    /// Builds a pair from real matrices.
    pub fn from_real(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self> {
        Self::new(a.map(C64::from), b.map(C64::from))
    }

    fn build(a: DMatrix<C64>, b: DMatrix<C64>, null_basis: Option<DMatrix<C64>>) -> Result<Self> {
        if !a.is_square() {
            return Err(ImexError::Splitting("implicit operator must be square".into()));
        }
        if b.shape() != a.shape() {
            return Err(ImexError::Splitting(
                "explicit operator must have the same shape as the implicit one".into(),
            ));
        }
        let scale = a.norm().max(f64::MIN_POSITIVE);
        if (&a - a.adjoint()).norm() > HERMITIAN_REL_TOL * scale {
            return Err(ImexError::Splitting("implicit operator must be Hermitian".into()));
        }
        let complement = match &null_basis {
            None => None,
            Some(basis) => {
                let m = basis.ncols();
                if basis.nrows() != a.nrows() || m == 0 || m >= a.nrows() {
                    return Err(ImexError::Splitting(
                        "null basis must have between 1 and dim - 1 columns of full length".into(),
                    ));
                }
                let gram = basis.adjoint() * basis;
                if (gram - DMatrix::<C64>::identity(m, m)).norm() > ORTHONORMALITY_TOL {
                    return Err(ImexError::Splitting(
                        "null basis columns must be orthonormal".into(),
                    ));
                }
                if (&a * basis).norm() > NULL_ACTION_REL_TOL * scale {
                    return Err(ImexError::Splitting(
                        "implicit operator does not vanish on the declared null space".into(),
                    ));
                }
                Some(complement_basis(basis))
            }
        };
        let pair = Self { a, b, null_basis, complement };
        let (at, _) = pair.compressed();
        let neg = hermitian_part(&-at);
        let vals = linalg::hermitian_eigenvalues(&neg)?;
        let top = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let floor = DEFINITENESS_REL_TOL * top.max(f64::MIN_POSITIVE);
        if vals.first().copied().unwrap_or(0.0) <= floor {
            return Err(ImexError::Splitting(
                "implicit operator is singular or indefinite on the working subspace; \
                 declare its null space if it has one"
                    .into(),
            ));
        }
        Ok(pair)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Dimension of the working subspace.
    pub fn working_dim(&self) -> usize {
        match &self.complement {
            None => self.dim(),
            Some(v) => v.ncols(),
        }
    }

    pub fn is_restricted(&self) -> bool {
        self.null_basis.is_some()
    }

    pub fn a(&self) -> &DMatrix<C64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<C64> {
        &self.b
    }

    /// The pair compressed onto the working subspace. Without a declared
    /// null space this is a plain copy.
    pub fn compressed(&self) -> (DMatrix<C64>, DMatrix<C64>) {
        match &self.complement {
            None => (self.a.clone(), self.b.clone()),
            Some(v) => (v.adjoint() * &self.a * v, v.adjoint() * &self.b * v),
        }
    }
}

/// Orthonormal basis of the orthogonal complement of the given orthonormal
/// columns, from a rank-revealing factorization of the projector.
fn complement_basis(null_basis: &DMatrix<C64>) -> DMatrix<C64> {
    let dim = null_basis.nrows();
    let m = null_basis.ncols();
    let proj = DMatrix::<C64>::identity(dim, dim) - null_basis * null_basis.adjoint();
    let qr = proj.col_piv_qr();
    qr.q().columns(0, dim - m).into_owned()
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Generalized eigenvalues `mu` with `-mu A v = B v` on the working
/// subspace, as the eigenvalues of `(-A)^{-1} B`.
///
/// A Hermitian `B` makes the pencil symmetric definite, so the eigenvalues
/// are computed from the congruent Hermitian matrix `L^{-1} B L^{-H}` with
/// `-A = L L^H`; this keeps clustered or near-defective spectra accurate to
/// roundoff where a Schur sweep on `(-A)^{-1} B` can lose several digits.
pub fn generalized_eigenvalues(pair: &SplittingPair) -> Result<SpectralSet> {
    let (at, bt) = pair.compressed();
    let neg_a = hermitian_part(&-at);
    let scale = bt.norm().max(1.0);
    if (&bt - bt.adjoint()).norm() <= HERMITIAN_REL_TOL * scale {
        if let Some(chol) = neg_a.clone().cholesky() {
            let l = chol.l();
            let y = l.solve_lower_triangular(&bt).ok_or_else(|| {
                ImexError::Splitting("implicit factor is singular on the working subspace".into())
            })?;
            let m = l.solve_lower_triangular(&y.adjoint()).ok_or_else(|| {
                ImexError::Splitting("implicit factor is singular on the working subspace".into())
            })?;
            let points = linalg::hermitian_eigenvalues(&hermitian_part(&m))?
                .into_iter()
                .map(|v| C64::new(v, 0.0))
                .collect();
            return Ok(SpectralSet {
                kind: SpectralKind::Eigenvalues,
                p: None,
                points,
                restricted: pair.is_restricted(),
            });
        }
    }
    let m = neg_a.lu().solve(&bt).ok_or_else(|| {
        ImexError::Splitting("implicit operator is singular on the working subspace".into())
    })?;
    let points = linalg::complex_eigenvalues(&m)?;
    Ok(SpectralSet {
        kind: SpectralKind::Eigenvalues,
        p: None,
        points,
        restricted: pair.is_restricted(),
    })
}

/// Numerical range `W(X)` by the support-angle sweep: for each angle the top
/// eigenvector of the Hermitian part of `e^{i theta} X` yields one boundary
/// support point `<x, X x>`.
pub fn numerical_range(x: &DMatrix<C64>, n_angles: usize) -> Result<SpectralSet> {
    if !x.is_square() {
        return Err(ImexError::Splitting("numerical range needs a square matrix".into()));
    }
    if n_angles < 8 {
        return Err(ImexError::Parameter(format!(
            "numerical range sweep needs at least 8 angles, got {n_angles}"
        )));
    }
    let points = (0..n_angles)
        .into_par_iter()
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n_angles as f64;
            let rot = C64::from_polar(1.0, theta);
            let h = hermitian_part(&(x * rot));
            let (_, v) = linalg::hermitian_top_eigenpair(&h)?;
            let xv = x * &v;
            Ok(v.dotc(&xv) / C64::from(v.norm_squared()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralSet {
        kind: SpectralKind::NumericalRange,
        p: None,
        points,
        restricted: false,
    })
}

/// The range `W_p(A, B) = W((-A)^{p/2-1} B (-A)^{-p/2})` on the working
/// subspace. Fractional powers come from the unitary eigendecomposition of
/// the compressed `-A`.
pub fn w_p_set(pair: &SplittingPair, p: f64, n_angles: usize) -> Result<SpectralSet> {
    if !p.is_finite() {
        return Err(ImexError::Parameter("range exponent p must be finite".into()));
    }
    let (at, bt) = pair.compressed();
    let neg_a = hermitian_part(&-at);
    let (vals, vecs) = linalg::hermitian_eigen(&neg_a)?;
    let top = vals.last().copied().unwrap_or(0.0);
    if vals.first().copied().unwrap_or(0.0) <= DEFINITENESS_REL_TOL * top.max(f64::MIN_POSITIVE) {
        return Err(ImexError::Splitting(
            "implicit operator must be negative definite on the working subspace".into(),
        ));
    }
    let left = symmetric_power(&vecs, &vals, p / 2.0 - 1.0);
    let right = symmetric_power(&vecs, &vals, -p / 2.0);
    let x = left * bt * right;
    let mut set = numerical_range(&x, n_angles)?;
    set.p = Some(p);
    set.restricted = pair.is_restricted();
    Ok(set)
}

/// `U diag(vals^e) U*` for a unitary `U` and positive `vals`.
fn symmetric_power(vecs: &DMatrix<C64>, vals: &[f64], e: f64) -> DMatrix<C64> {
    let d = DVector::from_iterator(vals.len(), vals.iter().map(|&l| C64::from(l.powf(e))));
    vecs * DMatrix::from_diagonal(&d) * vecs.adjoint()
}

/// Pointwise map `w -> 1 + w / sigma`, taking a set computed for the
/// sigma-independent pair to the set of the sigma-scaled splitting.
pub fn rescale(set: &SpectralSet, sigma: f64) -> Result<SpectralSet> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(ImexError::Parameter(format!(
            "rescaling needs a positive finite sigma, got {sigma}"
        )));
    }
    Ok(SpectralSet {
        kind: set.kind,
        p: set.p,
        points: set.points.iter().map(|w| 1.0 + w / sigma).collect(),
        restricted: set.restricted,
    })
}

fn cross(o: C64, a: C64, b: C64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Convex hull of a finite point set by the monotone chain, returned
/// counterclockwise without a repeated closing vertex. Collinear interior
/// points are dropped; degenerate inputs yield a single point or a segment.
pub fn convex_hull(points: &[C64]) -> Vec<C64> {
    let mut pts: Vec<C64> = points
        .iter()
        .copied()
        .filter(|z| z.re.is_finite() && z.im.is_finite())
        .collect();
    if pts.is_empty() {
        return Vec::new();
    }
    pts.sort_by(|p, q| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)));
    let scale = pts.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let merge_tol = scale * 1e-14;
    pts.dedup_by(|p, q| (*p - *q).norm() <= merge_tol);
    if pts.len() == 1 {
        return pts;
    }
    let eps = scale * scale * 1e-22;
    let mut hull: Vec<C64> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &C64>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Whether `z` lies in the convex hull, within an absolute tolerance `tol`
/// measured as distance outside the hull.
pub fn hull_contains(hull: &[C64], z: C64, tol: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => (z - hull[0]).norm() <= tol,
        2 => distance_to_segment(z, hull[0], hull[1]) <= tol,
        n => (0..n).all(|i| {
            let v = hull[i];
            let w = hull[(i + 1) % n];
            let len = (w - v).norm().max(f64::MIN_POSITIVE);
            cross(v, w, z) >= -tol * len
        }),
    }
}

fn distance_to_segment(z: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a).re * ab.re + (z - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

/// At least `n` points along the hull boundary, including every vertex.
/// A single-vertex hull yields `n` copies of the point.
pub fn sample_hull_boundary(hull: &[C64], n: usize) -> Vec<C64> {
    match hull.len() {
        0 => Vec::new(),
        1 => vec![hull[0]; n.max(1)],
        _ => {
            let m = hull.len();
            let edges: Vec<(C64, C64)> = if m == 2 {
                vec![(hull[0], hull[1]), (hull[1], hull[0])]
            } else {
                (0..m).map(|i| (hull[i], hull[(i + 1) % m])).collect()
            };
            let perimeter: f64 = edges.iter().map(|(a, b)| (b - a).norm()).sum();
            let mut samples = Vec::with_capacity(n + m);
            for (a, b) in edges {
                let len = (b - a).norm();
                let pieces = if perimeter > 0.0 {
                    ((n as f64 * len / perimeter).ceil() as usize).max(1)
                } else {
                    1
                };
                for i in 0..pieces {
                    let t = i as f64 / pieces as f64;
                    samples.push(a + (b - a) * t);
                }
            }
            samples
        }
    }
}
