//! The three Riemannian fibers in their linear embeddings.
//!
//! Euclidean space uses its own coordinates. The sphere is the unit sphere of
//! a Euclidean space one dimension up, and hyperbolic space is the upper sheet
//! of the hyperboloid `-x0² + x1² + … = -1` in Minkowski space. Points and
//! tangent vectors are stored as embedding coordinates; the Levi-Civita
//! connection of a fiber is the tangential projection of the flat derivative.

use nalgebra::DVector;

use crate::error::{GeomError, Result};
use crate::numkernel::{fd_scalar, default_step, FdOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FiberKind {
    Euclidean,
    Sphere,
    Hyperbolic,
}

/// A space form of dimension `dim`: Euclidean (c = 0), round sphere (c = 1)
/// or hyperbolic space (c = -1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fiber {
    pub kind: FiberKind,
    pub dim: usize,
}

/// Relative slack used when checking model constraints.
pub const MODEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FiberPoint {
    pub coords: DVector<f64>,
}

impl FiberPoint {
    pub fn new(coords: DVector<f64>) -> Self {
        Self { coords }
    }

    pub fn from_slice(c: &[f64]) -> Self {
        Self::new(DVector::from_column_slice(c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberVector {
    pub base: FiberPoint,
    pub comps: DVector<f64>,
}

impl Fiber {
    pub fn euclidean(dim: usize) -> Self {
        Self { kind: FiberKind::Euclidean, dim }
    }

    pub fn sphere(dim: usize) -> Self {
        Self { kind: FiberKind::Sphere, dim }
    }

    pub fn hyperbolic(dim: usize) -> Self {
        Self { kind: FiberKind::Hyperbolic, dim }
    }

    pub fn curvature(&self) -> f64 {
        match self.kind {
            FiberKind::Euclidean => 0.0,
            FiberKind::Sphere => 1.0,
            FiberKind::Hyperbolic => -1.0,
        }
    }

    /// Length of the coordinate vectors.
    pub fn embed_len(&self) -> usize {
        match self.kind {
            FiberKind::Euclidean => self.dim,
            FiberKind::Sphere | FiberKind::Hyperbolic => self.dim + 1,
        }
    }

    /// Bilinear form of the embedding space (Lorentzian for the hyperboloid).
    pub fn pairing(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match self.kind {
            FiberKind::Hyperbolic => a.dot(b) - 2.0 * a[0] * b[0],
            _ => a.dot(b),
        }
    }

    /// Residual of the model constraint at raw coordinates.
    pub fn constraint_residual(&self, c: &DVector<f64>) -> f64 {
        match self.kind {
            FiberKind::Euclidean => 0.0,
            FiberKind::Sphere => (c.dot(c) - 1.0).abs(),
            FiberKind::Hyperbolic => (self.pairing(c, c) + 1.0).abs(),
        }
    }

    pub fn point(&self, coords: DVector<f64>) -> Result<FiberPoint> {
        if coords.len() != self.embed_len() {
            return Err(GeomError::Contract(format!(
                "point has {} coordinates, fiber needs {}",
                coords.len(),
                self.embed_len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::Evaluation("non-finite point coordinates".into()));
        }
        let resid = self.constraint_residual(&coords);
        if resid > MODEL_TOL * (1.0 + coords.norm_squared()) {
            return Err(GeomError::Domain(format!("model constraint violated by {resid:e}")));
        }
        if self.kind == FiberKind::Hyperbolic && coords[0] <= 0.0 {
            return Err(GeomError::Domain("point on the lower hyperboloid sheet".into()));
        }
        Ok(FiberPoint::new(coords))
    }

    /// Pushes raw coordinates onto the model (radial rescaling).
    pub fn retract(&self, mut coords: DVector<f64>) -> FiberPoint {
        match self.kind {
            FiberKind::Euclidean => {}
            FiberKind::Sphere => {
                let n = coords.norm();
                coords /= n;
            }
            FiberKind::Hyperbolic => {
                let spatial = coords.rows(1, coords.len() - 1).norm_squared();
                coords[0] = (1.0 + spatial).sqrt();
            }
        }
        FiberPoint::new(coords)
    }

    /// Base point: the origin, the first pole, or the hyperboloid apex.
    pub fn origin(&self) -> FiberPoint {
        let mut c = DVector::zeros(self.embed_len());
        if self.kind != FiberKind::Euclidean {
            c[0] = 1.0;
        }
        FiberPoint::new(c)
    }

    pub fn project_tangent(&self, p: &FiberPoint, v: &DVector<f64>) -> DVector<f64> {
        match self.kind {
            FiberKind::Euclidean => v.clone(),
            FiberKind::Sphere => v - &p.coords * v.dot(&p.coords),
            FiberKind::Hyperbolic => v + &p.coords * self.pairing(v, &p.coords),
        }
    }

    pub fn tangency_residual(&self, p: &FiberPoint, v: &DVector<f64>) -> f64 {
        match self.kind {
            FiberKind::Euclidean => 0.0,
            _ => self.pairing(&p.coords, v).abs(),
        }
    }

    pub fn vector(&self, base: &FiberPoint, comps: DVector<f64>) -> Result<FiberVector> {
        if comps.len() != self.embed_len() {
            return Err(GeomError::Contract("vector length does not match fiber".into()));
        }
        let resid = self.tangency_residual(base, &comps);
        if resid > MODEL_TOL * (1.0 + comps.norm() * base.coords.norm()) {
            return Err(GeomError::Contract(format!("vector not tangent (residual {resid:e})")));
        }
        Ok(FiberVector {
            base: base.clone(),
            comps,
        })
    }

    /// Fiber metric on raw tangent components.
    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        self.pairing(a, b)
    }

    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.pairing(v, v).max(0.0).sqrt()
    }

    /// Point at parameter `s` of the geodesic with initial velocity `v`
    /// (any length, including zero).
    pub fn geodesic(&self, p: &FiberPoint, v: &DVector<f64>, s: f64) -> DVector<f64> {
        match self.kind {
            FiberKind::Euclidean => &p.coords + v * s,
            FiberKind::Sphere | FiberKind::Hyperbolic => {
                let speed = self.norm(v);
                let x = s * speed;
                // sin(x)/speed and sinh(x)/speed, stable for small speed
                let (c, sn) = if self.kind == FiberKind::Sphere {
                    let sn = if x.abs() < 1e-8 { s * (1.0 - x * x / 6.0) } else { x.sin() / speed };
                    (x.cos(), sn)
                } else {
                    let sn = if x.abs() < 1e-8 { s * (1.0 + x * x / 6.0) } else { x.sinh() / speed };
                    (x.cosh(), sn)
                };
                &p.coords * c + v * sn
            }
        }
    }

    /// Velocity of [`Fiber::geodesic`] at parameter `s`.
    pub fn geodesic_velocity(&self, p: &FiberPoint, v: &DVector<f64>, s: f64) -> DVector<f64> {
        match self.kind {
            FiberKind::Euclidean => v.clone(),
            FiberKind::Sphere => {
                let speed = self.norm(v);
                let x = s * speed;
                &p.coords * (-speed * x.sin()) + v * x.cos()
            }
            FiberKind::Hyperbolic => {
                let speed = self.norm(v);
                let x = s * speed;
                &p.coords * (speed * x.sinh()) + v * x.cosh()
            }
        }
    }

    /// Orthonormal basis of `T_pF`, built from the coordinate axes.
    pub fn tangent_basis(&self, p: &FiberPoint) -> Vec<DVector<f64>> {
        let len = self.embed_len();
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(self.dim);
        for axis in 0..len {
            let mut v = self.project_tangent(p, &DVector::from_fn(len, |i, _| f64::from(i == axis)));
            for b in &basis {
                let c = self.pairing(&v, b);
                v -= b * c;
            }
            let n = self.norm(&v);
            if n > 1e-6 {
                basis.push(v / n);
            }
            if basis.len() == self.dim {
                break;
            }
        }
        basis
    }
}

pub fn fiber_metric(fiber: &Fiber, x: &FiberVector, y: &FiberVector) -> Result<f64> {
    if x.base != y.base {
        return Err(GeomError::BaseMismatch);
    }
    Ok(fiber.inner(&x.comps, &y.comps))
}

/// Exponential map along a unit tangent vector.
pub fn exp_map(fiber: &Fiber, q: &FiberPoint, v: &FiberVector, s: f64) -> Result<FiberPoint> {
    if v.base != *q {
        return Err(GeomError::BaseMismatch);
    }
    let norm = fiber.norm(&v.comps);
    if (norm - 1.0).abs() > MODEL_TOL {
        return Err(GeomError::NotUnit(norm));
    }
    let c = match fiber.kind {
        FiberKind::Euclidean => &q.coords + &v.comps * s,
        FiberKind::Sphere => &q.coords * s.cos() + &v.comps * s.sin(),
        FiberKind::Hyperbolic => &q.coords * s.cosh() + &v.comps * s.sinh(),
    };
    Ok(FiberPoint::new(c))
}

pub fn geodesic_distance(fiber: &Fiber, p: &FiberPoint, q: &FiberPoint) -> Result<f64> {
    let diff = &p.coords - &q.coords;
    match fiber.kind {
        FiberKind::Euclidean => Ok(diff.norm()),
        FiberKind::Sphere => {
            let x = p.coords.dot(&q.coords);
            if x.abs() > 1.0 + MODEL_TOL {
                return Err(GeomError::Domain(format!("sphere pairing {x} outside [-1, 1]")));
            }
            let sum = &p.coords + &q.coords;
            Ok(2.0 * diff.norm().atan2(sum.norm()))
        }
        FiberKind::Hyperbolic => {
            let x = -fiber.pairing(&p.coords, &q.coords);
            if x < 1.0 - MODEL_TOL {
                return Err(GeomError::Domain(format!("hyperbolic pairing {x} below 1")));
            }
            // <p-q, p-q> = 4 sinh²(d/2)
            let chord = fiber.pairing(&diff, &diff).max(0.0).sqrt();
            Ok(2.0 * (chord / 2.0).asinh())
        }
    }
}

/// Gradient of `f` at `q`: the analytic oracle when given, otherwise central
/// differences along geodesics in an orthonormal tangent basis.
pub fn fiber_gradient(
    fiber: &Fiber,
    f: &dyn Fn(&FiberPoint) -> f64,
    analytic: Option<&dyn Fn(&FiberPoint) -> DVector<f64>>,
    q: &FiberPoint,
) -> Result<FiberVector> {
    let comps = match analytic {
        Some(g) => fiber.project_tangent(q, &g(q)),
        None => fd_gradient(fiber, f, q)?,
    };
    if comps.iter().any(|c| !c.is_finite()) {
        return Err(GeomError::Evaluation("non-finite gradient".into()));
    }
    Ok(FiberVector {
        base: q.clone(),
        comps,
    })
}

pub fn fd_gradient(fiber: &Fiber, f: &dyn Fn(&FiberPoint) -> f64, q: &FiberPoint) -> Result<DVector<f64>> {
    let mut grad = DVector::zeros(fiber.embed_len());
    let h = default_step(0.0, FdOrder::First);
    for e in fiber.tangent_basis(q) {
        let d = fd_scalar(
            |s| Ok(f(&FiberPoint::new(fiber.geodesic(q, &e, s)))),
            0.0,
            FdOrder::First,
            h,
        )?;
        grad += &e * d;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xorshift64Star;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn e(len: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(len, |k, _| f64::from(k == i))
    }

    fn random_point(fiber: &Fiber, rng: &mut Xorshift64Star) -> FiberPoint {
        match fiber.kind {
            FiberKind::Euclidean => FiberPoint::new(rng.normal_vector(fiber.embed_len())),
            FiberKind::Sphere => FiberPoint::new(rng.unit_vector(fiber.embed_len())),
            FiberKind::Hyperbolic => fiber.retract(rng.normal_vector(fiber.embed_len())),
        }
    }

    fn random_unit(fiber: &Fiber, p: &FiberPoint, rng: &mut Xorshift64Star) -> FiberVector {
        let v = fiber.project_tangent(p, &rng.normal_vector(fiber.embed_len()));
        let n = fiber.norm(&v);
        FiberVector { base: p.clone(), comps: v / n }
    }

    #[test]
    fn metric_examples() {
        let euc = Fiber::euclidean(3);
        let o = euc.origin();
        let x = euc.vector(&o, e(3, 0)).unwrap();
        assert_eq!(fiber_metric(&euc, &x, &x).unwrap(), 1.0);

        let hyp = Fiber::hyperbolic(3);
        let o = hyp.origin();
        let x = hyp.vector(&o, e(4, 1)).unwrap();
        assert_eq!(fiber_metric(&hyp, &x, &x).unwrap(), 1.0);

        let sph = Fiber::sphere(2);
        let o = sph.origin();
        let x = sph.vector(&o, e(3, 1)).unwrap();
        let y = sph.vector(&o, e(3, 2)).unwrap();
        assert_eq!(fiber_metric(&sph, &x, &y).unwrap(), 0.0);
    }

    #[test]
    fn metric_base_mismatch() {
        let euc = Fiber::euclidean(2);
        let x = euc.vector(&euc.origin(), e(2, 0)).unwrap();
        let y = euc.vector(&FiberPoint::from_slice(&[1.0, 0.0]), e(2, 0)).unwrap();
        assert_eq!(fiber_metric(&euc, &x, &y), Err(GeomError::BaseMismatch));
    }

    #[test]
    fn exp_examples() {
        let sph = Fiber::sphere(2);
        let q = sph.origin();
        let v = sph.vector(&q, e(3, 1)).unwrap();
        let p = exp_map(&sph, &q, &v, FRAC_PI_2).unwrap();
        assert!((p.coords - e(3, 1)).amax() < 1e-15);

        let euc = Fiber::euclidean(3);
        let q = FiberPoint::from_slice(&[0.3, -1.0, 2.0]);
        let v = euc.vector(&q, e(3, 2)).unwrap();
        assert_eq!(exp_map(&euc, &q, &v, 0.0).unwrap(), q);

        let hyp = Fiber::hyperbolic(2);
        let q = hyp.origin();
        let v = hyp.vector(&q, e(3, 1)).unwrap();
        let p = exp_map(&hyp, &q, &v, 1.0).unwrap();
        let expected = DVector::from_column_slice(&[1f64.cosh(), 1f64.sinh(), 0.0]);
        assert!((&p.coords - expected).amax() < 1e-15);
        assert!(hyp.constraint_residual(&p.coords) < 1e-12);
    }

    #[test]
    fn exp_rejects_non_unit() {
        let euc = Fiber::euclidean(2);
        let q = euc.origin();
        let v = euc.vector(&q, e(2, 0) * 2.0).unwrap();
        assert!(matches!(exp_map(&euc, &q, &v, 1.0), Err(GeomError::NotUnit(_))));
    }

    #[test]
    fn distance_examples() {
        let sph = Fiber::sphere(2);
        let p = sph.origin();
        assert_eq!(geodesic_distance(&sph, &p, &p).unwrap(), 0.0);
        let q = FiberPoint::new(e(3, 1));
        assert!((geodesic_distance(&sph, &p, &q).unwrap() - FRAC_PI_2).abs() < 1e-15);

        let hyp = Fiber::hyperbolic(2);
        let q = FiberPoint::from_slice(&[1f64.cosh(), 1f64.sinh(), 0.0]);
        let d = geodesic_distance(&hyp, &hyp.origin(), &q).unwrap();
        assert!((d - 1.0).abs() < 1e-14, "{d}");
    }

    #[test]
    fn distance_domain_error() {
        let sph = Fiber::sphere(1);
        let bad = FiberPoint::from_slice(&[2.0, 0.0]);
        assert!(geodesic_distance(&sph, &sph.origin(), &bad).is_err());
    }

    #[test]
    fn exp_preserves_constraint_and_distance() {
        let mut rng = Xorshift64Star::new(3);
        for fiber in [Fiber::euclidean(4), Fiber::sphere(4), Fiber::hyperbolic(4)] {
            for _ in 0..1000 {
                let q = random_point(&fiber, &mut rng);
                let v = random_unit(&fiber, &q, &mut rng);
                let s = rng.uniform(-3.0, 3.0);
                let p = exp_map(&fiber, &q, &v, s).unwrap();
                let scale = 1.0 + p.coords.norm_squared();
                assert!(fiber.constraint_residual(&p.coords) < 1e-10 * scale);
                let d = geodesic_distance(&fiber, &q, &p).unwrap();
                let expected = match fiber.kind {
                    FiberKind::Sphere => {
                        // reduce |s| into [0, π]
                        let r = s.abs() % (2.0 * PI);
                        if r > PI { 2.0 * PI - r } else { r }
                    }
                    _ => s.abs(),
                };
                assert!((d - expected).abs() < 1e-5, "{fiber:?}: {d} vs {expected}");
            }
        }
    }

    #[test]
    fn affine_gradient() {
        let euc = Fiber::euclidean(3);
        let u = DVector::from_column_slice(&[0.6, 0.0, 0.8]);
        let uc = u.clone();
        let f = move |p: &FiberPoint| p.coords.dot(&uc);
        let q = FiberPoint::from_slice(&[1.0, 2.0, 3.0]);
        let g = fiber_gradient(&euc, &f, None, &q).unwrap();
        assert!((g.comps - u).amax() < 1e-9);
    }

    #[test]
    fn distance_gradient_is_unit() {
        let euc = Fiber::euclidean(3);
        let p0 = DVector::from_column_slice(&[0.5, -0.5, 1.0]);
        let f = {
            let p0 = p0.clone();
            move |p: &FiberPoint| (&p.coords - &p0).norm()
        };
        let q = FiberPoint::from_slice(&[2.0, 1.0, 0.0]);
        let g = fiber_gradient(&euc, &f, None, &q).unwrap();
        let expected = (&q.coords - &p0) / (&q.coords - &p0).norm();
        assert!((&g.comps - expected).amax() < 1e-9);
        assert!((g.comps.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn first_variation_and_tangency() {
        let mut rng = Xorshift64Star::new(17);
        for fiber in [Fiber::euclidean(3), Fiber::sphere(3), Fiber::hyperbolic(3)] {
            let a = rng.normal_vector(fiber.embed_len());
            let f = move |p: &FiberPoint| (p.coords.dot(&a)).sin() + p.coords[1] * p.coords[1];
            for _ in 0..50 {
                let q = random_point(&fiber, &mut rng);
                let g = fiber_gradient(&fiber, &f, None, &q).unwrap();
                assert!(fiber.tangency_residual(&q, &g.comps) < 1e-9 * (1.0 + q.coords.norm_squared()));
                let v = random_unit(&fiber, &q, &mut rng);
                let d = fd_scalar(
                    |s| Ok(f(&exp_map(&fiber, &q, &v, s).unwrap())),
                    0.0,
                    FdOrder::First,
                    default_step(0.0, FdOrder::First),
                )
                .unwrap();
                let expected = fiber_metric(&fiber, &g, &v).unwrap();
                assert!((d - expected).abs() < 1e-5 * (1.0 + q.coords.norm_squared()));
            }
        }
    }
}
