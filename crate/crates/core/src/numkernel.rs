//! Finite differences, small dense symmetric eigensolver and value clustering.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// Comparison thresholds shared by every check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Closed-form identities.
    pub abs_eq: f64,
    /// Identities whose evaluation goes through finite differences.
    pub fd_eq: f64,
    /// Relative gap used when grouping eigenvalues.
    pub cluster_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            abs_eq: 1e-9,
            fd_eq: 1e-5,
            cluster_rel: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.abs_eq) && ok(self.fd_eq) && ok(self.cluster_rel)) {
            return Err(GeomError::InvalidParam(
                "tolerances must be finite and strictly positive".into(),
            ));
        }
        if self.cluster_rel >= 1.0 {
            return Err(GeomError::InvalidParam("cluster_rel must be < 1".into()));
        }
        Ok(())
    }
}

/// Derivative order supported by [`fd_derivative`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    First,
    Second,
}

/// Default central-difference step: `eps^(1/3)` for first derivatives and
/// `eps^(1/4)` for second derivatives, scaled by `max(1, |s|)`.
pub fn default_step(s: f64, order: FdOrder) -> f64 {
    let base = match order {
        FdOrder::First => f64::EPSILON.cbrt(),
        FdOrder::Second => f64::EPSILON.sqrt().sqrt(),
    };
    base * s.abs().max(1.0)
}

/// Central-difference derivative of a vector-valued curve at `s`.
pub fn fd_derivative<F>(curve: F, s: f64, order: FdOrder) -> Result<DVector<f64>>
where
    F: FnMut(f64) -> Result<DVector<f64>>,
{
    fd_derivative_step(curve, s, order, default_step(s, order))
}

/// Same as [`fd_derivative`] with an explicit step. Nested differentiation
/// (derivatives of quantities that are themselves finite differences) uses a
/// larger outer step than the default.
pub fn fd_derivative_step<F>(mut curve: F, s: f64, order: FdOrder, h: f64) -> Result<DVector<f64>>
where
    F: FnMut(f64) -> Result<DVector<f64>>,
{
    let mut eval = |x: f64| -> Result<DVector<f64>> {
        let v = curve(x)?;
        if v.iter().all(|c| c.is_finite()) {
            Ok(v)
        } else {
            Err(GeomError::Evaluation(format!("curve value at s = {x}")))
        }
    };
    match order {
        FdOrder::First => {
            let plus = eval(s + h)?;
            let minus = eval(s - h)?;
            Ok((plus - minus) / (2.0 * h))
        }
        FdOrder::Second => {
            let plus = eval(s + h)?;
            let mid = eval(s)?;
            let minus = eval(s - h)?;
            Ok((plus - mid * 2.0 + minus) / (h * h))
        }
    }
}

/// Scalar convenience wrapper around [`fd_derivative_step`].
pub fn fd_scalar<F>(mut curve: F, s: f64, order: FdOrder, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let d = fd_derivative_step(|x| Ok(DVector::from_element(1, curve(x)?)), s, order, h)?;
    Ok(d[0])
}

/// Square matrix known to be symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Accepts `m` if it is square and symmetric within `tol * (1 + max|m_ij|)`.
    pub fn new(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(GeomError::Contract(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = asymmetry(&m);
        if asym > tol * (1.0 + m.amax()) {
            return Err(GeomError::Contract(format!(
                "matrix is not symmetric (asymmetry {asym:e})"
            )));
        }
        Ok(Self(m))
    }

    /// Replaces `m` by `(m + mᵀ)/2` and returns the discarded asymmetry.
    pub fn symmetrized(m: DMatrix<f64>) -> (Self, f64) {
        assert!(m.is_square(), "symmetrized needs a square matrix");
        let asym = asymmetry(&m);
        let s = (&m + m.transpose()) * 0.5;
        (Self(s), asym)
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }
}

/// Largest `|m_ij - m_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows().min(m.ncols());
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.values));
        &self.vectors * d * self.vectors.transpose()
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigendecomposition.
pub fn sym_eigen(m: &SymMatrix) -> SymEigen {
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.amax().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= f64::EPSILON * scale * 1e-2 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymEigen { values, vectors }
}

/// A group of nearly equal values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

/// Groups values whose sorted neighbours differ by at most
/// `rel_tol * (1 + spread)`; each group is represented by its mean.
pub fn cluster_values(vals: &[f64], rel_tol: f64) -> Vec<Cluster> {
    if vals.is_empty() {
        return Vec::new();
    }
    let mut sorted = vals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let spread = sorted[sorted.len() - 1] - sorted[0];
    let gap = rel_tol * (1.0 + spread);

    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > gap {
            let group = &sorted[start..i];
            let mean = group.iter().sum::<f64>() / group.len() as f64;
            out.push(Cluster {
                value: mean,
                multiplicity: group.len(),
            });
            start = i;
        }
    }
    out
}

/// Smallest singular value of a (tall) matrix, through the eigenvalues of `mᵀm`.
pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    let (sym, _) = SymMatrix::symmetrized(gram);
    let eig = sym_eigen(&sym);
    eig.values.first().copied().unwrap_or(0.0).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xorshift64Star;

    fn scalar_curve(f: impl Fn(f64) -> f64) -> impl FnMut(f64) -> Result<DVector<f64>> {
        move |s| Ok(DVector::from_element(1, f(s)))
    }

    #[test]
    fn fd_square_first_order() {
        let d = fd_derivative(scalar_curve(|s| s * s), 1.0, FdOrder::First).unwrap();
        assert!((d[0] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn fd_constant_is_zero() {
        for s in [-3.0, 0.0, 0.25, 40.0] {
            let d1 = fd_derivative(scalar_curve(|_| 7.5), s, FdOrder::First).unwrap();
            let d2 = fd_derivative(scalar_curve(|_| 7.5), s, FdOrder::Second).unwrap();
            assert_eq!(d1[0], 0.0);
            assert_eq!(d2[0], 0.0);
        }
    }

    #[test]
    fn fd_cosh_second_order() {
        let d = fd_derivative(scalar_curve(f64::cosh), 0.0, FdOrder::Second).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn fd_rejects_non_finite() {
        let err = fd_derivative(scalar_curve(|s| 1.0 / (s - s)), 0.0, FdOrder::First);
        assert!(matches!(err, Err(GeomError::Evaluation(_))));
    }

    #[test]
    fn fd_quadratics_exact() {
        let mut rng = Xorshift64Star::new(11);
        for _ in 0..200 {
            let (a, b, c) = (rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
            let s = rng.uniform(-5.0, 5.0);
            let f = move |x: f64| a * x * x + b * x + c;
            let d1 = fd_derivative(scalar_curve(f), s, FdOrder::First).unwrap()[0];
            let d2 = fd_derivative(scalar_curve(f), s, FdOrder::Second).unwrap()[0];
            assert!((d1 - (2.0 * a * s + b)).abs() < 1e-5, "{d1}");
            assert!((d2 - 2.0 * a).abs() < 1e-5, "{d2}");
        }
    }

    #[test]
    fn eigen_identity() {
        let e = sym_eigen(&SymMatrix::identity(3));
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn eigen_diagonal() {
        let r = 2.0;
        let e = sym_eigen(&SymMatrix::from_diagonal(&[1.0 / r, 0.0]));
        assert_eq!(e.values, vec![0.0, 0.5]);
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(SymMatrix::new(m, 1e-9), Err(GeomError::Contract(_))));
    }

    fn random_symmetric(rng: &mut Xorshift64Star, n: usize) -> SymMatrix {
        let a = DMatrix::from_fn(n, n, |_, _| rng.uniform(-2.0, 2.0));
        SymMatrix::symmetrized(&a + a.transpose()).0
    }

    #[test]
    fn eigen_reconstruction_random() {
        let tol = Tolerances::default().abs_eq;
        let mut rng = Xorshift64Star::new(2024);
        for k in 0..1000 {
            let n = 2 + k % 7;
            let m = random_symmetric(&mut rng, n);
            let e = sym_eigen(&m);
            let norm = m.as_matrix().norm();
            let resid = (e.reconstruct() - m.as_matrix()).amax();
            assert!(resid < tol * (1.0 + norm), "dim {n}: {resid:e}");
            let ortho = (e.vectors.transpose() * &e.vectors - DMatrix::identity(n, n)).amax();
            assert!(ortho < tol, "orthonormality {ortho:e}");
            for i in 0..n {
                let v = e.vectors.column(i);
                let r = (m.as_matrix() * v - v * e.values[i]).norm();
                assert!(r < tol * (1.0 + norm));
            }
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn cluster_examples() {
        let c = cluster_values(&[0.5, 0.5 + 1e-9, 0.0], 1e-6);
        assert_eq!(c.len(), 2);
        assert_eq!((c[0].value, c[0].multiplicity), (0.0, 1));
        assert!((c[1].value - 0.5).abs() < 1e-9);
        assert_eq!(c[1].multiplicity, 2);

        let c = cluster_values(&[3.0; 5], 1e-6);
        assert_eq!(c, vec![Cluster { value: 3.0, multiplicity: 5 }]);

        // gap 2e-6 against threshold 1e-7 * (1 + 1)
        assert_eq!(cluster_values(&[1.0, 1.0 + 2e-6, 2.0], 1e-7).len(), 3);
    }

    #[test]
    fn min_singular_of_rank_deficient() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 0.0, 0.0]);
        assert!(min_singular_value(&m) < 1e-7);
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        assert!((min_singular_value(&m) - 1.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cluster_is_permutation_invariant(
                vals in prop::collection::vec(-5.0f64..5.0, 1..12),
                seed in any::<u64>(),
            ) {
                let mut shuffled = vals.clone();
                let mut rng = Xorshift64Star::new(seed);
                for i in (1..shuffled.len()).rev() {
                    let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                    shuffled.swap(i, j);
                }
                let a = cluster_values(&vals, 1e-3);
                let b = cluster_values(&shuffled, 1e-3);
                prop_assert_eq!(a.len(), b.len());
                for (x, y) in a.iter().zip(&b) {
                    prop_assert_eq!(x.multiplicity, y.multiplicity);
                    prop_assert!((x.value - y.value).abs() < 1e-12);
                }
                prop_assert_eq!(a.iter().map(|c| c.multiplicity).sum::<usize>(), vals.len());
            }
        }
    }
}
