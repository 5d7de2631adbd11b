//! The null hypersurface `M = {(f(p), p)}` of a transnormal function `f`.
//!
//! With `η = (0, grad f / ϱ²)` the null frame is
//!
//! ```text
//! ξ = (∂_t + η)/√2,   N = (-∂_t + η)/√2,   E_i = (0, e_i / ϱ)
//! ```
//!
//! where the `e_i` are `g_F`-orthonormal and orthogonal to `grad f`, so the
//! `E_i` span the tangent spaces of the level sets (the screen). Fields on
//! `M` are functions of the fiber point only; the `t` argument of a field
//! evaluation is ignored and `t = f(p)` is used instead.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::grw::{
    ambient_cov_deriv, curve_through, flat_bracket, metric_at, EventPoint, EventVector, SpaceFormModel,
};
use crate::numkernel::{default_step, fd_scalar, FdOrder, SymMatrix};
use crate::rng::Xorshift64Star;
use crate::spaceform::{fiber_gradient, Fiber, FiberPoint, FiberVector, MODEL_TOL};

pub type ScalarFn = Arc<dyn Fn(&FiberPoint) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&FiberPoint) -> DVector<f64> + Send + Sync>;
pub type DomainFn = Arc<dyn Fn(&FiberPoint) -> bool + Send + Sync>;

const COMPLETION_SEED: u64 = 0x5C2E_E7C0_4D1E_7105;

/// A fiber function whose graph is a null hypersurface when
/// `|grad f| = ϱ ∘ f`.
#[derive(Clone)]
pub struct TransnormalGraph {
    pub model: SpaceFormModel,
    pub label: String,
    f: ScalarFn,
    grad_f: Option<GradientFn>,
    domain: DomainFn,
    completion: Arc<Vec<DVector<f64>>>,
}

impl std::fmt::Debug for TransnormalGraph {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("TransnormalGraph")
            .field("label", &self.label)
            .field("model", &self.model)
            .field("analytic_gradient", &self.grad_f.is_some())
            .finish()
    }
}

/// Fixed generic vectors used to complete `grad f` to a frame. Seeded so
/// that screen bases are reproducible.
fn completion_candidates(len: usize) -> Vec<DVector<f64>> {
    let mut rng = Xorshift64Star::new(COMPLETION_SEED ^ len as u64);
    (0..3 * len).map(|_| rng.normal_vector(len)).collect()
}

/// Values of `f`, `grad f` and the warping function at one fiber point.
#[derive(Debug, Clone)]
pub struct PointData {
    pub t: f64,
    pub rho: f64,
    pub rho_d1: f64,
    pub grad: DVector<f64>,
}

impl PointData {
    /// ϱ'/ϱ at `t`.
    pub fn log_derivative(&self) -> f64 {
        self.rho_d1 / self.rho
    }
}

impl TransnormalGraph {
    pub fn new(
        model: SpaceFormModel,
        label: impl Into<String>,
        f: ScalarFn,
        grad_f: Option<GradientFn>,
        domain: DomainFn,
    ) -> Self {
        Self {
            completion: Arc::new(completion_candidates(model.fiber.embed_len())),
            model,
            label: label.into(),
            f,
            grad_f,
            domain,
        }
    }

    pub fn fiber(&self) -> &Fiber {
        &self.model.fiber
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad_f.is_some()
    }

    pub fn in_domain(&self, q: &FiberPoint) -> bool {
        (self.domain)(q)
    }

    pub fn value(&self, q: &FiberPoint) -> Result<f64> {
        if !self.in_domain(q) {
            return Err(GeomError::Domain(format!("{} is undefined at {:?}", self.label, q.coords.as_slice())));
        }
        let v = (self.f)(q);
        if !v.is_finite() {
            return Err(GeomError::Evaluation(format!("{}: f = {v}", self.label)));
        }
        Ok(v)
    }

    /// Raw `f` without the domain check (finite-difference stencils).
    pub fn value_unchecked(&self, q: &FiberPoint) -> f64 {
        (self.f)(q)
    }

    pub fn gradient(&self, q: &FiberPoint) -> Result<FiberVector> {
        if !self.in_domain(q) {
            return Err(GeomError::Domain(format!("{} is undefined at {:?}", self.label, q.coords.as_slice())));
        }
        let f = |p: &FiberPoint| (self.f)(p);
        match &self.grad_f {
            Some(g) => {
                let g = |p: &FiberPoint| g(p);
                fiber_gradient(&self.model.fiber, &f, Some(&g), q)
            }
            None => fiber_gradient(&self.model.fiber, &f, None, q),
        }
    }

    pub fn point_data(&self, q: &FiberPoint) -> Result<PointData> {
        let t = self.value(q)?;
        if !self.model.contains_time(t) {
            return Err(GeomError::Domain(format!("f = {t} outside the interval I")));
        }
        let grad = self.gradient(q)?.comps;
        Ok(PointData {
            t,
            rho: self.model.rho(t),
            rho_d1: self.model.profile.d1(t),
            grad,
        })
    }

    /// The point `(f(q), q)` of `M`.
    pub fn event(&self, q: &FiberPoint) -> Result<EventPoint> {
        let t = self.value(q)?;
        self.model.event(t, q.clone())
    }

    /// `g_F`-orthonormal basis of the tangent space of the level set through
    /// `q`, obtained by Gram-Schmidt from the fixed completion vectors.
    pub fn level_basis(&self, q: &FiberPoint, grad: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        let fiber = &self.model.fiber;
        let gnorm = fiber.norm(grad);
        if gnorm <= f64::MIN_POSITIVE {
            return Err(GeomError::Degenerate("gradient vanishes".into()));
        }
        let unit = grad / gnorm;
        let n = self.model.n();
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
        for c in self.completion.iter() {
            let mut v = fiber.project_tangent(q, c);
            let k = fiber.inner(&v, &unit);
            v -= &unit * k;
            for b in &basis {
                let k = fiber.inner(&v, b);
                v -= b * k;
            }
            let len = fiber.norm(&v);
            if len > 0.1 * c.norm() {
                basis.push(v / len);
                if basis.len() == n {
                    return Ok(basis);
                }
            }
        }
        Err(GeomError::Degenerate("screen completion failed".into()))
    }
}

/// `| |grad f|_F - ϱ(f(q)) |`
pub fn transnormal_residual(g: &TransnormalGraph, q: &FiberPoint) -> Result<f64> {
    let d = g.point_data(q)?;
    Ok((g.fiber().norm(&d.grad) - d.rho).abs())
}

/// `(ξ, N, E_1 … E_n)` at a point of `M`.
#[derive(Debug, Clone)]
pub struct NullFrame {
    pub at: EventPoint,
    pub xi: EventVector,
    pub n: EventVector,
    pub screen: Vec<EventVector>,
    /// ϱ'/ϱ at `at.t`.
    pub log_derivative: f64,
}

/// Deviations of the frame pairings from `(0, 0, 1, 0, 0, δ_ij)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePairings {
    pub xi_xi: f64,
    pub n_n: f64,
    pub xi_n: f64,
    pub n_screen: f64,
    pub xi_screen: f64,
    pub screen_orthonormal: f64,
    pub eta_unit: f64,
}

impl FramePairings {
    pub fn max(&self) -> f64 {
        [
            self.xi_xi,
            self.n_n,
            self.xi_n,
            self.n_screen,
            self.xi_screen,
            self.screen_orthonormal,
            self.eta_unit,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl NullFrame {
    pub fn pairings(&self, model: &SpaceFormModel) -> FramePairings {
        let t = self.at.t;
        let g = |a: &EventVector, b: &EventVector| metric_at(model, t, a, b);
        let mut n_screen = 0.0_f64;
        let mut xi_screen = 0.0_f64;
        let mut ortho = 0.0_f64;
        for (i, e) in self.screen.iter().enumerate() {
            n_screen = n_screen.max(g(&self.n, e).abs());
            xi_screen = xi_screen.max(g(&self.xi, e).abs());
            for (j, f) in self.screen.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((g(e, f) - target).abs());
            }
        }
        let eta = self.eta();
        FramePairings {
            xi_xi: g(&self.xi, &self.xi).abs(),
            n_n: g(&self.n, &self.n).abs(),
            xi_n: (g(&self.xi, &self.n) - 1.0).abs(),
            n_screen,
            xi_screen,
            screen_orthonormal: ortho,
            eta_unit: (g(&eta, &eta) - 1.0).abs(),
        }
    }

    /// Unit normal of the slice `S_t` inside `{t} × F`: `(ξ + N)/√2`.
    pub fn eta(&self) -> EventVector {
        self.xi.axpy(1.0, &self.n).scaled(FRAC_1_SQRT_2)
    }

    /// Screen vectors as fiber vectors (`g_F` length `1/ϱ`).
    pub fn screen_fiber(&self) -> Vec<DVector<f64>> {
        self.screen.iter().map(|e| e.vf.clone()).collect()
    }
}

fn xi_at(e: &EventPoint, d: &PointData) -> EventVector {
    EventVector::new(e.clone(), FRAC_1_SQRT_2, &d.grad * (FRAC_1_SQRT_2 / (d.rho * d.rho)))
}

fn n_at(e: &EventPoint, d: &PointData) -> EventVector {
    EventVector::new(e.clone(), -FRAC_1_SQRT_2, &d.grad * (FRAC_1_SQRT_2 / (d.rho * d.rho)))
}

pub fn build_null_frame(g: &TransnormalGraph, q: &FiberPoint, fd_eq: f64) -> Result<NullFrame> {
    let d = g.point_data(q)?;
    let resid = (g.fiber().norm(&d.grad) - d.rho).abs();
    if resid >= fd_eq {
        return Err(GeomError::Contract(format!(
            "{} is not transnormal at this point (residual {resid:e})",
            g.label
        )));
    }
    let at = g.model.event(d.t, q.clone())?;
    let screen = g
        .level_basis(q, &d.grad)?
        .into_iter()
        .map(|e| EventVector::new(at.clone(), 0.0, e / d.rho))
        .collect();
    Ok(NullFrame {
        xi: xi_at(&at, &d),
        n: n_at(&at, &d),
        log_derivative: d.log_derivative(),
        screen,
        at,
    })
}

/// The radical field `ξ` along `M`.
pub fn xi_field(g: &TransnormalGraph) -> impl Fn(&EventPoint) -> Result<EventVector> + Sync + '_ {
    move |e| Ok(xi_at(e, &g.point_data(&e.p)?))
}

/// The transversal field `N` along `M`.
pub fn n_field(g: &TransnormalGraph) -> impl Fn(&EventPoint) -> Result<EventVector> + Sync + '_ {
    move |e| Ok(n_at(e, &g.point_data(&e.p)?))
}

/// How screen vectors at a point are extended to fields along `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScreenExtension {
    /// Gram-Schmidt of the fixed completion at every point.
    GramSchmidt,
    /// Projection of the base-point vector onto nearby level-set tangent spaces.
    Projection,
}

/// Field along `M` extending the frame's `i`-th screen vector.
pub fn screen_field<'a>(
    g: &'a TransnormalGraph,
    frame: &NullFrame,
    i: usize,
    ext: ScreenExtension,
) -> Box<dyn Fn(&EventPoint) -> Result<EventVector> + Sync + 'a> {
    match ext {
        ScreenExtension::GramSchmidt => Box::new(move |e: &EventPoint| {
            let d = g.point_data(&e.p)?;
            let basis = g.level_basis(&e.p, &d.grad)?;
            Ok(EventVector::new(e.clone(), 0.0, &basis[i] / d.rho))
        }),
        ScreenExtension::Projection => {
            let fixed = frame.screen[i].vf.clone();
            let rho0 = g.model.rho(frame.at.t);
            Box::new(move |e: &EventPoint| {
                let fiber = g.fiber();
                let d = g.point_data(&e.p)?;
                let unit = &d.grad / fiber.norm(&d.grad);
                let mut v = fiber.project_tangent(&e.p, &fixed);
                let k = fiber.inner(&v, &unit);
                v -= &unit * k;
                // keep the g_F length of the base vector scaled by 1/ϱ
                Ok(EventVector::new(e.clone(), 0.0, v * (rho0 / d.rho)))
            })
        }
    }
}

/// `df(X_F) - X_t`; zero exactly when `X` is tangent to `M`.
pub fn tangency_residual(g: &TransnormalGraph, at: &EventPoint, x: &EventVector) -> Result<f64> {
    let grad = g.gradient(&at.p)?;
    Ok((x.vt - g.fiber().inner(&grad.comps, &x.vf)).abs())
}

fn check_tangent(g: &TransnormalGraph, frame: &NullFrame, x: &EventVector) -> Result<()> {
    let r = tangency_residual(g, &frame.at, x)?;
    let scale = 1.0 + x.vt.abs() + x.vf.norm() * (1.0 + frame.xi.vf.norm());
    if r > MODEL_TOL * scale {
        return Err(GeomError::NotTangent(r));
    }
    Ok(())
}

/// `τ(X) = ḡ(∇̄_X N, ξ)` for `X` tangent to `M`.
pub fn tau_eval(g: &TransnormalGraph, frame: &NullFrame, x: &EventVector) -> Result<f64> {
    check_tangent(g, frame, x)?;
    let mut x = x.clone();
    x.base = frame.at.clone();
    let nf = n_field(g);
    let dn = ambient_cov_deriv(&g.model, &x, &nf)?;
    Ok(metric_at(&g.model, frame.at.t, &dn, &frame.xi))
}

/// Shape operators, τ and the residual checks that accompany them.
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub frame: NullFrame,
    /// `g(A_ξ* E_i, E_j)`.
    pub a_star: SymMatrix,
    /// `g(A_N E_i, E_j)`.
    pub a_n: SymMatrix,
    /// `τ(E_i)`.
    pub tau_screen: Vec<f64>,
    /// `τ(ξ)`.
    pub tau_xi: f64,
    pub diagnostics: ShapeDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeDiagnostics {
    /// Asymmetry of the raw `A_ξ*` matrix.
    pub a_star_asymmetry: f64,
    /// Asymmetry of the raw `A_N` screen block.
    pub a_n_asymmetry: f64,
    /// `max_i |ḡ(∇̄_{E_i} ξ, N)|`.
    pub xi_radical: f64,
    /// `max_i |ḡ(A_N E_i, N)|`.
    pub a_n_radical: f64,
    /// Screen components of `A_ξ* ξ`.
    pub a_star_xi: f64,
    /// Screen components of `A_N ξ`.
    pub a_n_xi: f64,
}

/// Computes `∇̄_{E_i} ξ`, `∇̄_{E_i} N`, `∇̄_ξ ξ` and `∇̄_ξ N` once and reads
/// every shape quantity off them.
pub fn shape_data(g: &TransnormalGraph, frame: &NullFrame) -> Result<ShapeData> {
    let model = &g.model;
    let t = frame.at.t;
    let n = frame.screen.len();
    let xf = xi_field(g);
    let nf = n_field(g);
    let gm = |a: &EventVector, b: &EventVector| metric_at(model, t, a, b);

    let dxi: Vec<EventVector> = frame
        .screen
        .iter()
        .map(|e| ambient_cov_deriv(model, e, &xf))
        .collect::<Result<_>>()?;
    let dn: Vec<EventVector> = frame
        .screen
        .iter()
        .map(|e| ambient_cov_deriv(model, e, &nf))
        .collect::<Result<_>>()?;
    let dxi_xi = ambient_cov_deriv(model, &frame.xi, &xf)?;
    let dn_xi = ambient_cov_deriv(model, &frame.xi, &nf)?;

    let raw_star = DMatrix::from_fn(n, n, |i, j| -gm(&dxi[i], &frame.screen[j]));
    let raw_n = DMatrix::from_fn(n, n, |i, j| -gm(&dn[i], &frame.screen[j]));
    let (a_star, a_star_asymmetry) = SymMatrix::symmetrized(raw_star);
    let (a_n, a_n_asymmetry) = SymMatrix::symmetrized(raw_n);

    let tau_screen = dn.iter().map(|v| gm(v, &frame.xi)).collect();
    let tau_xi = gm(&dn_xi, &frame.xi);

    let max_over = |f: &dyn Fn(&EventVector) -> f64, vs: &[EventVector]| vs.iter().map(f).fold(0.0, f64::max);
    let xi_radical = max_over(&|v| gm(v, &frame.n).abs(), &dxi);
    let a_n_radical = max_over(&|v| gm(v, &frame.n).abs(), &dn);
    let a_star_xi = max_over(&|e| gm(&dxi_xi, e).abs(), &frame.screen);
    let a_n_xi = max_over(&|e| gm(&dn_xi, e).abs(), &frame.screen);

    Ok(ShapeData {
        frame: frame.clone(),
        a_star,
        a_n,
        tau_screen,
        tau_xi,
        diagnostics: ShapeDiagnostics {
            a_star_asymmetry,
            a_n_asymmetry,
            xi_radical,
            a_n_radical,
            a_star_xi,
            a_n_xi,
        },
    })
}

/// `A_ξ*` on the screen, from `∇̄_X ξ = -A_ξ* X`.
pub fn shape_operator_screen(g: &TransnormalGraph, frame: &NullFrame) -> Result<SymMatrix> {
    Ok(shape_data(g, frame)?.a_star)
}

/// Screen block of `A_N`, from `∇̄_X N = -A_N X + τ(X) N`.
pub fn shape_operator_transversal(g: &TransnormalGraph, frame: &NullFrame) -> Result<SymMatrix> {
    Ok(shape_data(g, frame)?.a_n)
}

impl ShapeData {
    /// `max |(A_N - A_ξ*)/√2 - (ϱ'/ϱ) Id|` on the screen block, together with
    /// the radical column (both operators must annihilate `ξ`).
    pub fn shape_relation_residual(&self) -> f64 {
        let n = self.a_star.dim();
        let k = self.frame.log_derivative;
        let diff = (self.a_n.as_matrix() - self.a_star.as_matrix()) / SQRT_2 - DMatrix::identity(n, n) * k;
        diff.amax().max(self.diagnostics.a_star_xi).max(self.diagnostics.a_n_xi)
    }

    /// `|τ(ξ) + (1/√2) ϱ'/ϱ|`.
    pub fn tau_xi_residual(&self) -> f64 {
        (self.tau_xi + FRAC_1_SQRT_2 * self.frame.log_derivative).abs()
    }

    pub fn tau_screen_max(&self) -> f64 {
        self.tau_screen.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// See [`ShapeData::shape_relation_residual`].
pub fn shape_relation_residual(g: &TransnormalGraph, frame: &NullFrame) -> Result<f64> {
    Ok(shape_data(g, frame)?.shape_relation_residual())
}

/// Local second fundamental forms computed from derivatives of the screen
/// fields, independently of the shape operators.
#[derive(Debug, Clone)]
pub struct FundamentalForms {
    /// `B(E_i, E_j) = ḡ(∇̄_{E_i} E_j, ξ)`.
    pub b: SymMatrix,
    /// `C(E_i, E_j) = ḡ(∇̄_{E_i} E_j, N)`.
    pub c: SymMatrix,
    /// `B(ξ, E_i)`.
    pub b_xi: Vec<f64>,
    /// `C(ξ, E_i)`.
    pub c_xi: Vec<f64>,
    pub asymmetry: f64,
}

pub fn fundamental_forms(g: &TransnormalGraph, frame: &NullFrame, ext: ScreenExtension) -> Result<FundamentalForms> {
    let model = &g.model;
    let t = frame.at.t;
    let n = frame.screen.len();
    let mut b = DMatrix::zeros(n, n);
    let mut c = DMatrix::zeros(n, n);
    let mut b_xi = Vec::with_capacity(n);
    let mut c_xi = Vec::with_capacity(n);
    for j in 0..n {
        let ej = screen_field(g, frame, j, ext);
        for i in 0..n {
            let d = ambient_cov_deriv(model, &frame.screen[i], &*ej)?;
            b[(i, j)] = metric_at(model, t, &d, &frame.xi);
            c[(i, j)] = metric_at(model, t, &d, &frame.n);
        }
        let d = ambient_cov_deriv(model, &frame.xi, &*ej)?;
        b_xi.push(metric_at(model, t, &d, &frame.xi));
        c_xi.push(metric_at(model, t, &d, &frame.n));
    }
    let (b, ab) = SymMatrix::symmetrized(b);
    let (c, ac) = SymMatrix::symmetrized(c);
    Ok(FundamentalForms {
        b,
        c,
        b_xi,
        c_xi,
        asymmetry: ab.max(ac),
    })
}

/// Members of the frame `{ξ, E_1 … E_n}` as fields along `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameDirection {
    Xi,
    Screen(usize),
}

fn direction_field<'a>(
    g: &'a TransnormalGraph,
    frame: &NullFrame,
    dir: FrameDirection,
) -> Box<dyn Fn(&EventPoint) -> Result<EventVector> + Sync + 'a> {
    match dir {
        FrameDirection::Xi => Box::new(xi_field(g)),
        FrameDirection::Screen(i) => screen_field(g, frame, i, ScreenExtension::GramSchmidt),
    }
}

/// `τ(X(p))` at the point of `M` over `p`.
fn tau_along(g: &TransnormalGraph, field: &dyn Fn(&EventPoint) -> Result<EventVector>, p: &FiberPoint) -> Result<f64> {
    let d = g.point_data(p)?;
    let e = EventPoint { t: d.t, p: p.clone() };
    let x = field(&e)?;
    let nf = n_field(g);
    let dn = ambient_cov_deriv(&g.model, &x, &nf)?;
    Ok(metric_at(&g.model, d.t, &dn, &xi_at(&e, &d)))
}

/// `|2dτ(X, Y)| = |X(τ(Y)) - Y(τ(X)) - τ([X, Y])|`.
///
/// The outer derivatives differentiate finite-difference values of `τ`, so
/// they use the larger `eps^(1/4)` step.
pub fn dtau_residual(g: &TransnormalGraph, frame: &NullFrame, x: FrameDirection, y: FrameDirection) -> Result<f64> {
    let model = &g.model;
    let xf = direction_field(g, frame, x);
    let yf = direction_field(g, frame, y);
    let x0 = xf(&frame.at)?;
    let y0 = yf(&frame.at)?;
    let h = default_step(0.0, FdOrder::Second);

    let derivative = |along: &EventVector, field: &dyn Fn(&EventPoint) -> Result<EventVector>| {
        fd_scalar(|u| tau_along(g, field, &curve_through(model, along, u).p), 0.0, FdOrder::First, h)
    };
    let x_tau_y = derivative(&x0, &*yf)?;
    let y_tau_x = derivative(&y0, &*xf)?;
    let bracket = flat_bracket(model, &*xf, &*yf, &frame.at)?;
    let nf = n_field(g);
    let dn = ambient_cov_deriv(model, &bracket, &nf)?;
    let tau_bracket = metric_at(model, frame.at.t, &dn, &frame.xi);
    Ok((x_tau_y - y_tau_x - tau_bracket).abs())
}

/// All unordered pairs of distinct frame directions.
pub fn frame_direction_pairs(n: usize) -> Vec<(FrameDirection, FrameDirection)> {
    let mut dirs = vec![FrameDirection::Xi];
    dirs.extend((0..n).map(FrameDirection::Screen));
    let mut out = Vec::new();
    for i in 0..dirs.len() {
        for j in (i + 1)..dirs.len() {
            out.push((dirs[i], dirs[j]));
        }
    }
    out
}
