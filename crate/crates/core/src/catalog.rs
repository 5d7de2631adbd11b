//! Named transnormal functions with closed-form gradients, samplers and
//! expected spectra.
//!
//! | name | space | `f` | level sets |
//! |---|---|---|---|
//! | `mink_hyperplane` | Minkowski | `<p, u> + c0` | hyperplanes |
//! | `mink_cone` | Minkowski | `\|p - p0\|` | round spheres |
//! | `mink_cylinder` | Minkowski | `\|π_k p\|` | `S^{k-1} × ℝ^{n+1-k}` |
//! | `ds_gudermann` | de Sitter | `gd⁻¹(d(p, o) - a)` | geodesic spheres |
//! | `ads_gudermann_sphere` | anti de Sitter | `gd(d(p, o) - a)` | geodesic spheres |
//! | `ads_gudermann_tube` | anti de Sitter | `gd(d(p, ℍ^k) - a)` | tubes |
//! | `mink_ellipsoid_negcontrol` | Minkowski | `\|Dp\|` | ellipsoids |
//!
//! `gd(x) = atan(sinh x)` and `gd⁻¹(y) = asinh(tan y)`. The last entry is a
//! negative control: its gradient oracle is normalised pointwise, so the
//! graph passes the null-frame checks, but its level sets are not parallel
//! and it is not isoparametric.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{GeomError, Result};
use crate::grw::SpaceFormModel;
use crate::nullhyp::TransnormalGraph;
use crate::numkernel::Cluster;
use crate::rng::Xorshift64Star;
use crate::spaceform::FiberPoint;

pub const ENTRY_NAMES: [&str; 7] = [
    "mink_hyperplane",
    "mink_cone",
    "mink_cylinder",
    "ds_gudermann",
    "ads_gudermann_sphere",
    "ads_gudermann_tube",
    "mink_ellipsoid_negcontrol",
];

/// Distance kept from singular sets of `f`.
const DOMAIN_MARGIN: f64 = 0.05;

pub type EntryParams = BTreeMap<String, f64>;

type LevelSampler = Arc<dyn Fn(f64, &mut Xorshift64Star) -> DVector<f64> + Send + Sync>;
type ReachFn = Arc<dyn Fn(&FiberPoint) -> f64 + Send + Sync>;
type CurvatureOracle = Arc<dyn Fn(f64) -> Vec<Cluster> + Send + Sync>;

/// Cluster structure a catalog entry is known to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpectedStructure {
    /// Number of distinct principal curvatures.
    pub distinct: usize,
    /// Whether one of them is zero.
    pub has_zero: bool,
}

#[derive(Clone)]
pub struct CatalogGraph {
    pub name: &'static str,
    pub graph: TransnormalGraph,
    /// Parameters in effect, defaults included.
    pub params: EntryParams,
    /// Level values `t` covered by the sampler.
    pub t_range: (f64, f64),
    pub expected: Option<ExpectedStructure>,
    /// Negative controls are excluded from the pass/fail roll-up by default.
    pub control: bool,
    level_sampler: LevelSampler,
    reach: ReachFn,
    fiber_curvatures: Option<CurvatureOracle>,
}

impl std::fmt::Debug for CatalogGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogGraph")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("t_range", &self.t_range)
            .field("expected", &self.expected)
            .field("control", &self.control)
            .finish()
    }
}

impl CatalogGraph {
    pub fn n(&self) -> usize {
        self.graph.model.n()
    }

    /// Point of the level set `f = t`.
    pub fn sample_on_level(&self, t: f64, rng: &mut Xorshift64Star) -> Result<FiberPoint> {
        if !(t >= self.t_range.0 && t <= self.t_range.1) {
            return Err(GeomError::Domain(format!(
                "level {t} outside the sampled range [{}, {}]",
                self.t_range.0, self.t_range.1
            )));
        }
        let q = self.graph.fiber().point((self.level_sampler)(t, rng))?;
        if !self.graph.in_domain(&q) {
            return Err(GeomError::Domain(format!("{}: sample left the domain", self.name)));
        }
        Ok(q)
    }

    /// Point of a level set with `t` uniform in the sampled range.
    pub fn sample_point(&self, rng: &mut Xorshift64Star) -> Result<FiberPoint> {
        let t = rng.uniform(self.t_range.0, self.t_range.1);
        self.sample_on_level(t, rng)
    }

    /// How far the unit normal geodesic through `q` can run either way
    /// without leaving the domain of `f`.
    pub fn normal_reach(&self, q: &FiberPoint) -> f64 {
        (self.reach)(q)
    }

    /// Principal curvatures of the level set `f = t` inside the fiber, for the
    /// unit normal along `grad f` (ascending).
    pub fn expected_fiber_curvatures(&self, t: f64) -> Option<Vec<Cluster>> {
        self.fiber_curvatures.as_ref().map(|f| f(t))
    }
}

fn gd(x: f64) -> f64 {
    x.sinh().atan()
}

fn gd_inv(y: f64) -> f64 {
    y.tan().asinh()
}

fn clusters(mut v: Vec<(f64, usize)>) -> Vec<Cluster> {
    v.retain(|c| c.1 > 0);
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v.into_iter().map(|(value, multiplicity)| Cluster { value, multiplicity }).collect()
}

struct ParamReader<'a> {
    name: &'static str,
    given: &'a EntryParams,
    used: EntryParams,
}

impl<'a> ParamReader<'a> {
    fn new(name: &'static str, given: &'a EntryParams) -> Self {
        Self {
            name,
            given,
            used: EntryParams::new(),
        }
    }

    fn get(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.given.get(key).copied().unwrap_or(default);
        if !v.is_finite() {
            return Err(GeomError::InvalidParam(format!("{}.{key} = {v}", self.name)));
        }
        self.used.insert(key.to_string(), v);
        Ok(v)
    }

    fn integer(&mut self, key: &str, default: usize, lo: usize, hi: usize) -> Result<usize> {
        let v = self.get(key, default as f64)?;
        if v.fract() != 0.0 || v < lo as f64 || v > hi as f64 {
            return Err(GeomError::InvalidParam(format!(
                "{}.{key} = {v} must be an integer in [{lo}, {hi}]",
                self.name
            )));
        }
        Ok(v as usize)
    }

    fn range(&mut self, lo_key: &str, lo: f64, hi_key: &str, hi: f64, bounds: (f64, f64)) -> Result<(f64, f64)> {
        let a = self.get(lo_key, lo)?;
        let b = self.get(hi_key, hi)?;
        if !(a < b && a >= bounds.0 && b <= bounds.1) {
            return Err(GeomError::InvalidParam(format!(
                "{}: need {} <= {lo_key} < {hi_key} <= {}, got [{a}, {b}]",
                self.name, bounds.0, bounds.1
            )));
        }
        Ok((a, b))
    }

    fn finish(self) -> Result<EntryParams> {
        if let Some(k) = self.given.keys().find(|k| !self.used.contains_key(*k)) {
            return Err(GeomError::InvalidParam(format!("{} has no parameter {k}", self.name)));
        }
        Ok(self.used)
    }
}

fn tail_norm(c: &DVector<f64>, from: usize) -> f64 {
    c.rows(from, c.len() - from).norm()
}

/// Builds a catalog entry over the spacetime of screen dimension `n`.
pub fn catalog_get(name: &str, n: usize, params: &EntryParams) -> Result<CatalogGraph> {
    if n == 0 {
        return Err(GeomError::InvalidParam("n must be at least 1".into()));
    }
    match name {
        "mink_hyperplane" => hyperplane(n, params),
        "mink_cone" => cone(n, params),
        "mink_cylinder" => cylinder(n, params),
        "ds_gudermann" => ds_sphere(n, params),
        "ads_gudermann_sphere" => ads_sphere(n, params),
        "ads_gudermann_tube" => ads_tube(n, params),
        "mink_ellipsoid_negcontrol" => ellipsoid(n, params),
        _ => Err(GeomError::UnknownEntry(name.to_string())),
    }
}

fn hyperplane(n: usize, params: &EntryParams) -> Result<CatalogGraph> {
    let name = "mink_hyperplane";
    let mut pr = ParamReader::new(name, params);
    let c0 = pr.get("c0", 0.0)?;
    let params = pr.finish()?;
    let len = n + 1;
    let u = DVector::from_fn(len, |i, _| (i + 1) as f64).normalize();
    let (uf, ug, us) = (u.clone(), u.clone(), u);
    Ok(CatalogGraph {
        name,
        graph: TransnormalGraph::new(
            SpaceFormModel::minkowski(n),
            name,
            Arc::new(move |p: &FiberPoint| p.coords.dot(&uf) + c0),
            Some(Arc::new(move |_: &FiberPoint| ug.clone())),
            Arc::new(|_: &FiberPoint| true),
        ),
        params,
        t_range: (c0 - 2.0, c0 + 2.0),
        expected: Some(ExpectedStructure {
            distinct: 1,
            has_zero: true,
        }),
        control: false,
        level_sampler: Arc::new(move |t, rng| {
            let p = rng.normal_vector(len) * 1.5;
            let shift = t - p.dot(&us) - c0;
            p + &us * shift
        }),
        reach: Arc::new(|_| f64::INFINITY),
        fiber_curvatures: Some(Arc::new(move |_| clusters(vec![(0.0, n)]))),
    })
}

fn cone(n: usize, params: &EntryParams) -> Result<CatalogGraph> {
    let name = "mink_cone";
    let mut pr = ParamReader::new(name, params);
    let (r_lo, r_hi) = pr.range("r_min", 0.5, "r_max", 3.0, (2.0 * DOMAIN_MARGIN, f64::INFINITY))?;
    let params = pr.finish()?;
    let len = n + 1;
    let p0 = DVector::from_fn(len, |i, _| 0.1 * (i + 1) as f64 * if i % 2 == 0 { 1.0 } else { -1.0 });
    let (pf, pg, pd, ps, pr_) = (p0.clone(), p0.clone(), p0.clone(), p0.clone(), p0);
    Ok(CatalogGraph {
        name,
        graph: TransnormalGraph::new(
            SpaceFormModel::minkowski(n),
            name,
            Arc::new(move |p: &FiberPoint| (&p.coords - &pf).norm()),
            Some(Arc::new(move |p: &FiberPoint| {
                let d = &p.coords - &pg;
                let r = d.norm();
                d / r
            })),
            Arc::new(move |p: &FiberPoint| (&p.coords - &pd).norm() > DOMAIN_MARGIN),
        ),
        params,
        t_range: (r_lo, r_hi),
        expected: Some(ExpectedStructure {
            distinct: 1,
            has_zero: false,
        }),
        control: false,
        level_sampler: Arc::new(move |t, rng| &ps + rng.unit_vector(len) * t),
        reach: Arc::new(move |p| (&p.coords - &pr_).norm() - DOMAIN_MARGIN),
        fiber_curvatures: Some(Arc::new(move |t| clusters(vec![(-1.0 / t, n)]))),
    })
}

fn cylinder(n: usize, params: &EntryParams) -> Result<CatalogGraph> {
    let name = "mink_cylinder";
    if n < 2 {
        return Err(GeomError::InvalidParam(format!("{name} needs n >= 2")));
    }
    let mut pr = ParamReader::new(name, params);
    let k = pr.integer("k", 2, 2, n)?;
    let (r_lo, r_hi) = pr.range("r_min", 0.5, "r_max", 3.0, (2.0 * DOMAIN_MARGIN, f64::INFINITY))?;
    let params = pr.finish()?;
    let len = n + 1;
    let radial = move |c: &DVector<f64>| c.rows(0, k).norm();
    Ok(CatalogGraph {
        name,
        graph: TransnormalGraph::new(
            SpaceFormModel::minkowski(n),
            name,
            Arc::new(move |p: &FiberPoint| radial(&p.coords)),
            Some(Arc::new(move |p: &FiberPoint| {
                let r = radial(&p.coords);
                DVector::from_fn(len, |i, _| if i < k { p.coords[i] / r } else { 0.0 })
            })),
            Arc::new(move |p: &FiberPoint| radial(&p.coords) > DOMAIN_MARGIN),
        ),
        params,
        t_range: (r_lo, r_hi),
        expected: Some(ExpectedStructure {
            distinct: 2,
            has_zero: true,
        }),
        control: false,
        level_sampler: Arc::new(move |t, rng| {
            let dir = rng.unit_vector(k) * t;
            let rest = rng.normal_vector(len - k);
            DVector::from_fn(len, |i, _| if i < k { dir[i] } else { rest[i - k] })
        }),
        reach: Arc::new(move |p| radial(&p.coords) - DOMAIN_MARGIN),
        fiber_curvatures: Some(Arc::new(move |t| clusters(vec![(-1.0 / t, k - 1), (0.0, n + 1 - k)]))),
    })
}

fn ds_sphere(n: usize, params: &EntryParams) -> Result<CatalogGraph> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let name = "ds_gudermann";
    let mut pr = ParamReader::new(name, params);
    let a = pr.get("a", 1.5)?;
    // r must stay in (0, π) and r - a in (-π/2, π/2)
    let dom_lo = DOMAIN_MARGIN.max(a - FRAC_PI_2 + DOMAIN_MARGIN);
    let dom_hi = (PI - DOMAIN_MARGIN).min(a + FRAC_PI_2 - DOMAIN_MARGIN);
    let (r_lo, r_hi) = pr.range("r_min", 0.4, "r_max", PI - 0.4, (dom_lo + 0.05, dom_hi - 0.05))?;
    let params = pr.finish()?;
    let len = n + 2;
    let dist = |c: &DVector<f64>| tail_norm(c, 1).atan2(c[0]);
    Ok(CatalogGraph {
        name,
        graph: TransnormalGraph::new(
            SpaceFormModel::de_sitter(n),
            name,
            Arc::new(move |p: &FiberPoint| gd_inv(dist(&p.coords) - a)),
            Some(Arc::new(move |p: &FiberPoint| {
                let c = &p.coords;
                let r = dist(c);
                // grad r = (cos r · p - o) / sin r
                let mut g = c * r.cos();
                g[0] -= 1.0;
                g / (r.sin() * (r - a).cos())
            })),
            Arc::new(move |p: &FiberPoint| {
                let r = dist(&p.coords);
                r > dom_lo && r < dom_hi
            }),
        ),
        params,
        t_range: (gd_inv(r_lo - a), gd_inv(r_hi - a)),
        expected: Some(ExpectedStructure {
            distinct: 1,
            has_zero: false,
        }),
        control: false,
        level_sampler: Arc::new(move |t, rng| {
            let r = a + gd(t);
            let w = rng.unit_vector(len - 1);
            DVector::from_fn(len, |i, _| if i == 0 { r.cos() } else { r.sin() * w[i - 1] })
        }),
        reach: Arc::new(move |p| {
            let r = dist(&p.coords);
            (r - dom_lo).min(dom_hi - r)
        }),
        fiber_curvatures: Some(Arc::new(move |t| {
            let r = a + gd(t);
            clusters(vec![(-1.0 / r.tan(), n)])
        })),
    })
}

fn ads_sphere(n: usize, params: &EntryParams) -> Result<CatalogGraph> {
    let name = "ads_gudermann_sphere";
    let mut pr = ParamReader::new(name, params);
    let a = pr.get("a", 1.0)?;
    let (r_lo, r_hi) = pr.range("r_min", 0.3, "r_max", 2.5, (2.0 * DOMAIN_MARGIN, 20.0))?;
    let params = pr.finish()?;
    let len = n + 2;
    let dist = |c: &DVector<f64>| tail_norm(c, 1).asinh();
    Ok(CatalogGraph {
        name,
        graph: TransnormalGraph::new(
            SpaceFormModel::anti_de_sitter(n),
            name,
            Arc::new(move |p: &FiberPoint| gd(dist(&p.coords) - a)),
            Some(Arc::new(move |p: &FiberPoint| {
                let c = &p.coords;
                let r = dist(c);
                // grad r = (cosh r · p - o) / sinh r
                let mut g = c * r.cosh();
                g[0] -= 1.0;
                g / (r.sinh() * (r - a).cosh())
            })),
            Arc::new(move |p: &FiberPoint| dist(&p.coords) > DOMAIN_MARGIN),
        ),
        params,
        t_range: (gd(r_lo - a), gd(r_hi - a)),
        expected: Some(ExpectedStructure {
            distinct: 1,
            has_zero: false,
        }),
        control: false,
        level_sampler: Arc::new(move |t, rng| {
            let r = a + gd_inv(t);
            let w = rng.unit_vector(len - 1);
            DVector::from_fn(len, |i, _| if i == 0 { r.cosh() } else { r.sinh() * w[i - 1] })
        }),
        reach: Arc::new(move |p| dist(&p.coords) - DOMAIN_MARGIN),
        fiber_curvatures: Some(Arc::new(move |t| {
            let r = a + gd_inv(t);
            clusters(vec![(-1.0 / r.tanh(), n)])
        })),
    })
}

fn ads_tube(n: usize, params: &EntryParams) -> Result<CatalogGraph> {
    let name = "ads_gudermann_tube";
    if n < 2 {
        return Err(GeomError::InvalidParam(format!("{name} needs n >= 2")));
    }
    let mut pr = ParamReader::new(name, params);
    let k = pr.integer("k", 1, 1, n - 1)?;
    let a = pr.get("a", 1.0)?;
    let (r_lo, r_hi) = pr.range("r_min", 0.3, "r_max", 2.0, (2.0 * DOMAIN_MARGIN, 20.0))?;
    let params = pr.finish()?;
    let len = n + 2;
    // ℍ^k = {x_{k+1} = … = x_{n+1} = 0}; sinh d = |x_N|
    let dist = move |c: &DVector<f64>| tail_norm(c, k + 1).asinh();
    Ok(CatalogGraph {
        name,
        graph: TransnormalGraph::new(
            SpaceFormModel::anti_de_sitter(n),
            name,
            Arc::new(move |p: &FiberPoint| gd(dist(&p.coords) - a)),
            Some(Arc::new(move |p: &FiberPoint| {
                let c = &p.coords;
                let s = tail_norm(c, k + 1);
                let r = s.asinh();
                let ch = r.cosh();
                let w = DVector::from_fn(len, |i, _| if i > k { c[i] / (s * ch) } else { 0.0 });
                (w + c * r.tanh()) / (r - a).cosh()
            })),
            Arc::new(move |p: &FiberPoint| dist(&p.coords) > DOMAIN_MARGIN),
        ),
        params,
        t_range: (gd(r_lo - a), gd(r_hi - a)),
        expected: Some(ExpectedStructure {
            distinct: 2,
            has_zero: false,
        }),
        control: false,
        level_sampler: Arc::new(move |t, rng| {
            let r = a + gd_inv(t);
            let spatial = rng.normal_vector(k) * 0.8;
            let l0 = (1.0 + spatial.norm_squared()).sqrt();
            let w = rng.unit_vector(len - k - 1);
            DVector::from_fn(len, |i, _| match i {
                0 => r.cosh() * l0,
                i if i <= k => r.cosh() * spatial[i - 1],
                i => r.sinh() * w[i - k - 1],
            })
        }),
        reach: Arc::new(move |p| dist(&p.coords) - DOMAIN_MARGIN),
        fiber_curvatures: Some(Arc::new(move |t| {
            let r = a + gd_inv(t);
            clusters(vec![(-r.tanh(), k), (-1.0 / r.tanh(), n - k)])
        })),
    })
}

fn ellipsoid(n: usize, params: &EntryParams) -> Result<CatalogGraph> {
    let name = "mink_ellipsoid_negcontrol";
    let mut pr = ParamReader::new(name, params);
    let (t_lo, t_hi) = pr.range("t_min", 0.5, "t_max", 2.0, (2.0 * DOMAIN_MARGIN, f64::INFINITY))?;
    let params = pr.finish()?;
    let len = n + 1;
    let d = DVector::from_fn(len, |i, _| 1.0 + 0.6 * i as f64);
    let (df, dg, dd, ds) = (d.clone(), d.clone(), d.clone(), d);
    Ok(CatalogGraph {
        name,
        graph: TransnormalGraph::new(
            SpaceFormModel::minkowski(n),
            name,
            Arc::new(move |p: &FiberPoint| p.coords.component_mul(&df).norm()),
            Some(Arc::new(move |p: &FiberPoint| {
                let g = p.coords.component_mul(&dg).component_mul(&dg);
                let m = g.norm();
                g / m
            })),
            Arc::new(move |p: &FiberPoint| p.coords.component_mul(&dd).norm() > DOMAIN_MARGIN),
        ),
        params,
        t_range: (t_lo, t_hi),
        expected: None,
        control: true,
        level_sampler: Arc::new(move |t, rng| rng.unit_vector(len).component_div(&ds) * t),
        reach: Arc::new(|p| p.coords.norm() * 0.5),
        fiber_curvatures: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nullhyp::transnormal_residual;
    use crate::spaceform::fd_gradient;

    #[test]
    fn every_entry_builds() {
        for n in [2, 3, 5] {
            for name in ENTRY_NAMES {
                let e = catalog_get(name, n, &EntryParams::new()).unwrap();
                assert_eq!(e.n(), n);
                assert_eq!(e.control, name.ends_with("negcontrol"));
            }
        }
    }

    #[test]
    fn unknown_entry() {
        assert!(matches!(
            catalog_get("mink_torus", 2, &EntryParams::new()),
            Err(GeomError::UnknownEntry(_))
        ));
    }

    #[test]
    fn parameter_validation() {
        let mut p = EntryParams::new();
        p.insert("k".into(), 4.0);
        assert!(matches!(catalog_get("mink_cylinder", 3, &p), Err(GeomError::InvalidParam(_))));
        p.insert("k".into(), 3.0);
        assert_eq!(catalog_get("mink_cylinder", 3, &p).unwrap().params["k"], 3.0);
        let mut p = EntryParams::new();
        p.insert("bogus".into(), 1.0);
        assert!(matches!(catalog_get("mink_cone", 3, &p), Err(GeomError::InvalidParam(_))));
        assert!(catalog_get("ads_gudermann_tube", 1, &EntryParams::new()).is_err());
    }

    #[test]
    fn gudermannian_inverse() {
        for x in [-1.3, -0.2, 0.0, 0.7, 1.4] {
            assert!((gd_inv(gd(x)) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn levels_and_transnormality() {
        for n in [2, 3, 5] {
            for name in ENTRY_NAMES {
                let e = catalog_get(name, n, &EntryParams::new()).unwrap();
                for seed in 0..100 {
                    let mut rng = Xorshift64Star::new(seed);
                    let t = rng.uniform(e.t_range.0, e.t_range.1);
                    let q = e.sample_on_level(t, &mut rng).unwrap();
                    assert!((e.graph.value(&q).unwrap() - t).abs() < 1e-10, "{name}");
                    if !e.control {
                        assert!(transnormal_residual(&e.graph, &q).unwrap() < 1e-9, "{name}");
                    }
                }
            }
        }
    }

    #[test]
    fn analytic_gradients_match_differences() {
        for name in ENTRY_NAMES {
            let e = catalog_get(name, 3, &EntryParams::new()).unwrap();
            let fiber = *e.graph.fiber();
            for seed in 0..20 {
                let q = e.sample_point(&mut Xorshift64Star::new(seed)).unwrap();
                let analytic = e.graph.gradient(&q).unwrap().comps;
                let fd = fd_gradient(&fiber, &|p| e.graph.value_unchecked(p), &q).unwrap();
                if e.control {
                    // normalised oracle: parallel to the true gradient
                    let cos = fiber.inner(&analytic, &fd) / (fiber.norm(&analytic) * fiber.norm(&fd));
                    assert!((cos - 1.0).abs() < 1e-8, "{name}");
                } else {
                    assert!((analytic - fd).amax() < 1e-6, "{name}");
                }
            }
        }
    }

    #[test]
    fn negative_control_is_not_transnormal() {
        let e = catalog_get("mink_ellipsoid_negcontrol", 2, &EntryParams::new()).unwrap();
        let fiber = *e.graph.fiber();
        let q = e.sample_point(&mut Xorshift64Star::new(3)).unwrap();
        let fd = fd_gradient(&fiber, &|p| e.graph.value_unchecked(p), &q).unwrap();
        assert!((fd.norm() - 1.0).abs() > 1e-3);
    }

    #[test]
    fn reach_stays_in_domain() {
        for name in ENTRY_NAMES {
            let e = catalog_get(name, 3, &EntryParams::new()).unwrap();
            let fiber = *e.graph.fiber();
            for seed in 0..20 {
                let q = e.sample_point(&mut Xorshift64Star::new(seed)).unwrap();
                let reach = e.normal_reach(&q).min(2.0) * 0.99;
                let g = e.graph.gradient(&q).unwrap().comps;
                let u = &g / fiber.norm(&g);
                for s in [-reach, reach] {
                    let p = FiberPoint::new(fiber.geodesic(&q, &u, s));
                    assert!(e.graph.in_domain(&p), "{name} s={s}");
                }
            }
        }
    }
}
