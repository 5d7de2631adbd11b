//! Local parametrisation of `M` by normal geodesics of one slice.
//!
//! For `q` on the level set `S_{t0}` and the `g_F`-unit normal
//! `η̂ = grad f / |grad f|`,
//!
//! ```text
//! Φ(s, q) = (f(exp_q(s η̂)), exp_q(s η̂))
//! ```
//!
//! `∂_s Φ` is null and orthogonal to `dΦ(T S_{t0})`, and along a principal
//! direction `e_i` with fiber curvature `ν_i`
//!
//! ```text
//! dΦ(e_i) = (C(s) - ν_i S(s)) e_i,   |dΦ(e_i)|² = ϱ(t_s)² (C(s) - ν_i S(s))²
//! ```
//!
//! with `(C, S) = (1, s)`, `(cos, sin)` or `(cosh, sinh)` on ℝ, 𝕊 or ℍ.
//! The [`Convention::SliceUnit`] variant moves along `grad f / ϱ(t0)²`
//! instead, uses slice curvatures and drops the `ϱ(t_s)²` factor; it agrees
//! with the fiber convention only where `ϱ = 1`.

use nalgebra::{DMatrix, DVector};

use crate::catalog::CatalogGraph;
use crate::error::{GeomError, Result};
use crate::grw::{metric_at, EventPoint, EventVector};
use crate::isoparam::screen_spectrum;
use crate::nullhyp::build_null_frame;
use crate::numkernel::{fd_derivative, min_singular_value, FdOrder, Tolerances};
use crate::spaceform::{FiberKind, FiberPoint};

/// Normalisation of the normal direction and of the principal curvatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Convention {
    /// `g_F`-unit normal, fiber curvatures, metric factor `ϱ(t_s)²`.
    FiberUnit,
    /// Slice-unit normal, slice curvatures, no metric factor.
    SliceUnit,
}

impl Convention {
    pub const ALL: [Convention; 2] = [Convention::FiberUnit, Convention::SliceUnit];

    pub fn as_str(self) -> &'static str {
        match self {
            Convention::FiberUnit => "fiber_unit",
            Convention::SliceUnit => "slice_unit",
        }
    }
}

/// Smallest singular value below which `dΦ` counts as rank deficient.
pub const RANK_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct ChartPatch {
    pub entry: CatalogGraph,
    pub t0: f64,
    /// Half-width of the `s` interval.
    pub eps: f64,
    tol: Tolerances,
}

/// `(C(s), S(s))` for a fiber of the given kind.
pub fn jacobi_pair(kind: FiberKind, s: f64) -> (f64, f64) {
    match kind {
        FiberKind::Euclidean => (1.0, s),
        FiberKind::Sphere => (s.cos(), s.sin()),
        FiberKind::Hyperbolic => (s.cosh(), s.sinh()),
    }
}

/// Smallest `|s|` with `C(s) = ν S(s)`.
pub fn focal_distance(kind: FiberKind, nu: f64) -> f64 {
    match kind {
        FiberKind::Euclidean => {
            if nu == 0.0 {
                f64::INFINITY
            } else {
                1.0 / nu.abs()
            }
        }
        FiberKind::Sphere => {
            let a = 1.0_f64.atan2(nu);
            a.min(std::f64::consts::PI - a)
        }
        FiberKind::Hyperbolic => {
            if nu.abs() <= 1.0 {
                f64::INFINITY
            } else {
                (1.0 / nu.abs()).atanh()
            }
        }
    }
}

impl ChartPatch {
    /// Patch around the slice `f = t0`; `ε` is half the distance to the
    /// nearest focal point over `base_points`, kept inside the domain of `f`.
    pub fn new(entry: &CatalogGraph, t0: f64, base_points: &[FiberPoint], tol: &Tolerances) -> Result<Self> {
        if base_points.is_empty() {
            return Err(GeomError::InvalidParam("chart needs at least one base point".into()));
        }
        let g = &entry.graph;
        let kind = g.fiber().kind;
        let mut eps = 1.0_f64;
        for q in base_points {
            check_level(entry, t0, q)?;
            let frame = build_null_frame(g, q, tol.fd_eq)?;
            let spec = screen_spectrum(g, &frame, tol)?;
            for c in spec.fiber_curvatures() {
                eps = eps.min(0.5 * focal_distance(kind, c.value));
            }
            eps = eps.min(0.9 * entry.normal_reach(q));
        }
        // the slice convention moves 1/ϱ(t0) times faster in the fiber
        eps *= g.model.rho(t0).min(1.0);
        if !(eps > 0.0) {
            return Err(GeomError::Degenerate("empty chart interval".into()));
        }
        Ok(Self {
            entry: entry.clone(),
            t0,
            eps,
            tol: *tol,
        })
    }

    fn direction(&self, q: &FiberPoint, conv: Convention) -> Result<DVector<f64>> {
        let g = &self.entry.graph;
        let grad = g.gradient(q)?.comps;
        Ok(match conv {
            Convention::FiberUnit => {
                let len = g.fiber().norm(&grad);
                grad / len
            }
            Convention::SliceUnit => {
                let rho = g.model.rho(self.t0);
                grad / (rho * rho)
            }
        })
    }

    fn map(&self, s: f64, q: &FiberPoint, dir: &DVector<f64>) -> Result<EventPoint> {
        let g = &self.entry.graph;
        let p = FiberPoint::new(g.fiber().geodesic(q, dir, s));
        g.event(&p)
    }

    fn check(&self, s: f64, q: &FiberPoint) -> Result<()> {
        if !(s.abs() < self.eps) {
            return Err(GeomError::OutOfRange { s, eps: self.eps });
        }
        check_level(&self.entry, self.t0, q)
    }

    /// `Φ(s, q)` with the fiber-unit normal.
    pub fn phi(&self, s: f64, q: &FiberPoint) -> Result<EventPoint> {
        self.phi_with(s, q, Convention::FiberUnit)
    }

    pub fn phi_with(&self, s: f64, q: &FiberPoint, conv: Convention) -> Result<EventPoint> {
        self.check(s, q)?;
        self.map(s, q, &self.direction(q, conv)?)
    }

    /// Columns `∂_s Φ, dΦ(e_1) … dΦ(e_n)` for the principal directions at `q`.
    pub fn phi_differential(&self, s: f64, q: &FiberPoint, conv: Convention) -> Result<ChartDifferential> {
        self.check(s, q)?;
        let g = &self.entry.graph;
        let fiber = *g.fiber();
        let frame = build_null_frame(g, q, self.tol.fd_eq)?;
        let spec = screen_spectrum(g, &frame, &self.tol)?;
        let rho0 = g.model.rho(self.t0);

        let (scale, curvatures): (f64, Vec<f64>) = match conv {
            Convention::FiberUnit => (
                rho0,
                spec.eigenvalues
                    .iter()
                    .map(|l| rho0 * (std::f64::consts::SQRT_2 * l + spec.log_derivative))
                    .collect(),
            ),
            Convention::SliceUnit => (
                1.0,
                spec.eigenvalues
                    .iter()
                    .map(|l| std::f64::consts::SQRT_2 * l + spec.log_derivative)
                    .collect(),
            ),
        };
        // screen vectors have g_F length 1/ϱ(t0)
        let n = frame.screen.len();
        let directions: Vec<DVector<f64>> = (0..n)
            .map(|k| {
                let mut v = DVector::zeros(q.coords.len());
                for (i, e) in frame.screen.iter().enumerate() {
                    v += &e.vf * (spec.eigenvectors[(i, k)] * scale);
                }
                v
            })
            .collect();

        let normal = self.direction(q, conv)?;
        let at = self.map(s, q, &normal)?;
        let mut columns = Vec::with_capacity(n + 1);
        let d_s = fd_derivative(
            |u| Ok(event_components(&self.map(u, q, &normal)?)),
            s,
            FdOrder::First,
        )?;
        columns.push(EventVector::from_components(&at, &d_s));
        for dir in &directions {
            let d = fd_derivative(
                |u| {
                    let qu = FiberPoint::new(fiber.geodesic(q, dir, u));
                    let nu = self.direction(&qu, conv)?;
                    Ok(event_components(&self.map(s, &qu, &nu)?))
                },
                0.0,
                FdOrder::First,
            )?;
            columns.push(EventVector::from_components(&at, &d));
        }

        let jac = DMatrix::from_columns(&columns.iter().map(|c| c.components()).collect::<Vec<_>>());
        let min_singular = min_singular_value(&jac);
        if min_singular < RANK_TOL {
            return Err(GeomError::FocalPoint(min_singular));
        }
        Ok(ChartDifferential {
            at,
            s,
            convention: conv,
            columns,
            directions,
            curvatures,
            min_singular,
        })
    }

    /// Compares the pulled-back metric with the warped form.
    pub fn pullback_metric_residual(&self, s: f64, q: &FiberPoint, conv: Convention) -> Result<PullbackResidual> {
        let d = self.phi_differential(s, q, conv)?;
        let model = &self.entry.graph.model;
        let ts = d.at.t;
        let n = d.directions.len();
        let gram = DMatrix::from_fn(n + 1, n + 1, |a, b| metric_at(model, ts, &d.columns[a], &d.columns[b]));
        let (c, sn) = jacobi_pair(model.fiber.kind, s);
        let factors: Vec<f64> = d.curvatures.iter().map(|nu| c - nu * sn).collect();
        let weight = match conv {
            Convention::FiberUnit => model.rho(ts).powi(2),
            Convention::SliceUnit => 1.0,
        };
        let mut expected = DMatrix::zeros(n + 1, n + 1);
        for k in 0..n {
            expected[(k + 1, k + 1)] = weight * factors[k] * factors[k];
        }
        let degenerate = gram[(0, 0)].abs();
        let cross = (1..=n).map(|k| gram[(0, k)].abs().max(gram[(k, 0)].abs())).fold(0.0, f64::max);
        let spatial = gram
            .view((1, 1), (n, n))
            .iter()
            .zip(expected.view((1, 1), (n, n)).iter())
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        let jacobi = (0..n)
            .map(|k| {
                let col = &d.columns[k + 1];
                let want = &d.directions[k] * factors[k];
                (&col.vf - want).amax().max(col.vt.abs())
            })
            .fold(0.0, f64::max);
        Ok(PullbackResidual {
            convention: conv,
            gram,
            expected,
            degenerate,
            cross,
            spatial,
            jacobi,
            min_singular: d.min_singular,
        })
    }
}

fn check_level(entry: &CatalogGraph, t0: f64, q: &FiberPoint) -> Result<()> {
    let t = entry.graph.value(q)?;
    if (t - t0).abs() > 1e-9 * (1.0 + t0.abs()) {
        return Err(GeomError::Domain(format!("base point lies on f = {t}, not on f = {t0}")));
    }
    Ok(())
}

fn event_components(e: &EventPoint) -> DVector<f64> {
    let mut c = DVector::zeros(1 + e.p.coords.len());
    c[0] = e.t;
    c.rows_mut(1, e.p.coords.len()).copy_from(&e.p.coords);
    c
}

#[derive(Debug, Clone)]
pub struct ChartDifferential {
    pub at: EventPoint,
    pub s: f64,
    pub convention: Convention,
    /// `∂_s Φ` followed by `dΦ(e_k)`.
    pub columns: Vec<EventVector>,
    /// Principal directions `e_k` at `q` as fiber vectors.
    pub directions: Vec<DVector<f64>>,
    /// Principal curvature of each direction, in the convention's normalisation.
    pub curvatures: Vec<f64>,
    pub min_singular: f64,
}

#[derive(Debug, Clone)]
pub struct PullbackResidual {
    pub convention: Convention,
    pub gram: DMatrix<f64>,
    pub expected: DMatrix<f64>,
    /// `|Φ*ḡ(∂_s, ∂_s)|`.
    pub degenerate: f64,
    /// `max_k |Φ*ḡ(∂_s, e_k)|`.
    pub cross: f64,
    /// Largest deviation of the spatial block.
    pub spatial: f64,
    /// Largest deviation of `dΦ(e_k)` from `(C - ν_k S) e_k`.
    pub jacobi: f64,
    pub min_singular: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_get, EntryParams};
    use crate::rng::Xorshift64Star;

    fn patch(name: &str, n: usize, t0: f64) -> (ChartPatch, Vec<FiberPoint>) {
        let e = catalog_get(name, n, &EntryParams::new()).unwrap();
        let qs: Vec<_> = (0..4)
            .map(|i| e.sample_on_level(t0, &mut Xorshift64Star::new(i)).unwrap())
            .collect();
        (ChartPatch::new(&e, t0, &qs, &Tolerances::default()).unwrap(), qs)
    }

    #[test]
    fn focal_distances() {
        assert_eq!(focal_distance(FiberKind::Euclidean, 0.0), f64::INFINITY);
        assert!((focal_distance(FiberKind::Euclidean, -0.5) - 2.0).abs() < 1e-15);
        // geodesic sphere of radius 1 in 𝕊: focal at the centre and antipode
        let nu = -1.0 / 1.0_f64.tan();
        assert!((focal_distance(FiberKind::Sphere, nu) - 1.0).abs() < 1e-12);
        assert_eq!(focal_distance(FiberKind::Hyperbolic, -0.5), f64::INFINITY);
        let nu = -1.0 / 0.7_f64.tanh();
        assert!((focal_distance(FiberKind::Hyperbolic, nu) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn hyperplane_chart() {
        let (p, qs) = patch("mink_hyperplane", 2, 0.0);
        for s in [-0.5, 0.0, 0.5] {
            let r = p.pullback_metric_residual(s, &qs[0], Convention::FiberUnit).unwrap();
            let id = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 1.0]));
            assert!((&r.gram - id).amax() < 1e-8, "{}", r.gram);
        }
    }

    #[test]
    fn phi_lands_on_graph() {
        let (p, qs) = patch("ds_gudermann", 3, 0.3);
        let e = p.phi(0.5 * p.eps, &qs[1]).unwrap();
        assert!((p.entry.graph.value(&e.p).unwrap() - e.t).abs() < 1e-14);
        assert!(crate::nullhyp::transnormal_residual(&p.entry.graph, &e.p).unwrap() < 1e-9);
    }

    #[test]
    fn rejects_out_of_range_and_off_slice() {
        let (p, qs) = patch("mink_cone", 2, 1.0);
        assert!(matches!(p.phi(p.eps, &qs[0]), Err(GeomError::OutOfRange { .. })));
        let off = p.entry.sample_on_level(1.3, &mut Xorshift64Star::new(1)).unwrap();
        assert!(matches!(p.phi(0.0, &off), Err(GeomError::Domain(_))));
    }

    #[test]
    fn fiber_convention_everywhere() {
        let cases = [
            ("mink_cone", 1.5),
            ("mink_cylinder", 1.0),
            ("ds_gudermann", 0.4),
            ("ads_gudermann_sphere", 0.2),
            ("ads_gudermann_tube", -0.1),
        ];
        for (name, t0) in cases {
            let (p, qs) = patch(name, 3, t0);
            for s in [-0.8 * p.eps, 0.0, 0.8 * p.eps] {
                let r = p.pullback_metric_residual(s, &qs[2], Convention::FiberUnit).unwrap();
                assert!(r.degenerate < 1e-5 && r.cross < 1e-5, "{name}: {r:?}");
                assert!(r.spatial < 1e-4, "{name} s={s}: {r:?}");
                assert!(r.jacobi < 1e-5, "{name} s={s}: {}", r.jacobi);
            }
        }
    }

    #[test]
    fn slice_convention_needs_unit_warping() {
        let (p, qs) = patch("mink_cylinder", 2, 1.0);
        let r = p.pullback_metric_residual(0.4 * p.eps, &qs[0], Convention::SliceUnit).unwrap();
        assert!(r.spatial < 1e-4);
        let (p, qs) = patch("ds_gudermann", 2, 0.8);
        let r = p.pullback_metric_residual(0.6 * p.eps, &qs[0], Convention::SliceUnit).unwrap();
        assert!(r.spatial > 1e-3, "{r:?}");
    }
}
