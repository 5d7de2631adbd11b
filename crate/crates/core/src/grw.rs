//! The Lorentzian warped product `-I ×_ϱ F` with metric `-dt² + ϱ(t)² g_F`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::numkernel::{fd_derivative, FdOrder};
use crate::spaceform::{Fiber, FiberKind, FiberPoint, FiberVector};

/// Sign of the constant sectional curvature of the spacetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cbar {
    #[serde(rename = "-1")]
    Negative,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    Positive,
}

impl Cbar {
    pub fn value(self) -> f64 {
        match self {
            Cbar::Negative => -1.0,
            Cbar::Zero => 0.0,
            Cbar::Positive => 1.0,
        }
    }
}

/// Warping function together with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarpingProfile {
    /// ϱ ≡ 1
    Unit,
    /// ϱ = cosh
    Cosh,
    /// ϱ = cos
    Cos,
}

impl WarpingProfile {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Self::Unit => 1.0,
            Self::Cosh => t.cosh(),
            Self::Cos => t.cos(),
        }
    }

    pub fn d1(self, t: f64) -> f64 {
        match self {
            Self::Unit => 0.0,
            Self::Cosh => t.sinh(),
            Self::Cos => -t.sin(),
        }
    }

    pub fn d2(self, t: f64) -> f64 {
        match self {
            Self::Unit => 0.0,
            Self::Cosh => t.cosh(),
            Self::Cos => -t.cos(),
        }
    }

    /// ϱ'/ϱ
    pub fn log_derivative(self, t: f64) -> f64 {
        match self {
            Self::Unit => 0.0,
            Self::Cosh => t.tanh(),
            Self::Cos => -t.tan(),
        }
    }
}

/// One of the three Lorentzian space forms written as a warped product:
/// Minkowski `-ℝ × ℝⁿ⁺¹`, de Sitter `-ℝ ×_cosh 𝕊ⁿ⁺¹` and the warped region
/// `-(-π/2, π/2) ×_cos ℍⁿ⁺¹` of anti de Sitter space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceFormModel {
    pub cbar: Cbar,
    pub fiber: Fiber,
    /// Open interval `I`.
    pub interval: (f64, f64),
    pub profile: WarpingProfile,
}

impl SpaceFormModel {
    /// `n` is the dimension of the screen; the spacetime has dimension `n + 2`.
    pub fn minkowski(n: usize) -> Self {
        Self {
            cbar: Cbar::Zero,
            fiber: Fiber::euclidean(n + 1),
            interval: (f64::NEG_INFINITY, f64::INFINITY),
            profile: WarpingProfile::Unit,
        }
    }

    pub fn de_sitter(n: usize) -> Self {
        Self {
            cbar: Cbar::Positive,
            fiber: Fiber::sphere(n + 1),
            interval: (f64::NEG_INFINITY, f64::INFINITY),
            profile: WarpingProfile::Cosh,
        }
    }

    pub fn anti_de_sitter(n: usize) -> Self {
        Self {
            cbar: Cbar::Negative,
            fiber: Fiber::hyperbolic(n + 1),
            interval: (-FRAC_PI_2, FRAC_PI_2),
            profile: WarpingProfile::Cos,
        }
    }

    pub fn for_cbar(cbar: Cbar, n: usize) -> Self {
        match cbar {
            Cbar::Negative => Self::anti_de_sitter(n),
            Cbar::Zero => Self::minkowski(n),
            Cbar::Positive => Self::de_sitter(n),
        }
    }

    /// Screen dimension.
    pub fn n(&self) -> usize {
        self.fiber.dim - 1
    }

    pub fn contains_time(&self, t: f64) -> bool {
        t > self.interval.0 && t < self.interval.1
    }

    pub fn rho(&self, t: f64) -> f64 {
        self.profile.eval(t)
    }

    pub fn event(&self, t: f64, p: FiberPoint) -> Result<EventPoint> {
        if !self.contains_time(t) {
            return Err(GeomError::Domain(format!("t = {t} outside the interval I")));
        }
        Ok(EventPoint { t, p })
    }

    /// Checks the pairing of profile, fiber and interval.
    pub fn validate(&self) -> Result<()> {
        let ok = match self.cbar {
            Cbar::Negative => {
                self.profile == WarpingProfile::Cos
                    && self.fiber.kind == FiberKind::Hyperbolic
                    && self.interval.0 >= -FRAC_PI_2
                    && self.interval.1 <= FRAC_PI_2
            }
            Cbar::Zero => self.profile == WarpingProfile::Unit && self.fiber.kind == FiberKind::Euclidean,
            Cbar::Positive => self.profile == WarpingProfile::Cosh && self.fiber.kind == FiberKind::Sphere,
        };
        if ok {
            Ok(())
        } else {
            Err(GeomError::Contract(format!("inconsistent space form model {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventPoint {
    pub t: f64,
    pub p: FiberPoint,
}

/// Tangent vector `vt ∂_t + vf` at an event; `vf` is in embedding coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EventVector {
    pub base: EventPoint,
    pub vt: f64,
    pub vf: DVector<f64>,
}

impl EventVector {
    pub fn new(base: EventPoint, vt: f64, vf: DVector<f64>) -> Self {
        Self { base, vt, vf }
    }

    pub fn zero(base: &EventPoint) -> Self {
        let len = base.p.coords.len();
        Self::new(base.clone(), 0.0, DVector::zeros(len))
    }

    /// The unit timelike field `∂_t`.
    pub fn d_t(base: &EventPoint) -> Self {
        let mut v = Self::zero(base);
        v.vt = 1.0;
        v
    }

    pub fn fiber_part(&self) -> FiberVector {
        FiberVector {
            base: self.base.p.clone(),
            comps: self.vf.clone(),
        }
    }

    /// `(vt, vf…)` as one column.
    pub fn components(&self) -> DVector<f64> {
        let mut c = DVector::zeros(1 + self.vf.len());
        c[0] = self.vt;
        c.rows_mut(1, self.vf.len()).copy_from(&self.vf);
        c
    }

    pub fn from_components(base: &EventPoint, c: &DVector<f64>) -> Self {
        Self::new(base.clone(), c[0], c.rows(1, c.len() - 1).into_owned())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.base.clone(), self.vt * k, &self.vf * k)
    }

    /// `self + k * other`; both must share the base point (not checked).
    pub fn axpy(&self, k: f64, other: &EventVector) -> Self {
        Self::new(self.base.clone(), self.vt + k * other.vt, &self.vf + &other.vf * k)
    }
}

/// A vector field, evaluated pointwise.
pub type VectorField<'a> = dyn Fn(&EventPoint) -> Result<EventVector> + Sync + 'a;

/// `ḡ(U, V) = -U_t V_t + ϱ(t)² g_F(U_F, V_F)`.
pub fn ambient_metric(model: &SpaceFormModel, u: &EventVector, v: &EventVector) -> Result<f64> {
    if u.base != v.base {
        return Err(GeomError::BaseMismatch);
    }
    Ok(metric_at(model, u.base.t, u, v))
}

/// [`ambient_metric`] without the base-point comparison.
pub fn metric_at(model: &SpaceFormModel, t: f64, u: &EventVector, v: &EventVector) -> f64 {
    let rho = model.rho(t);
    -u.vt * v.vt + rho * rho * model.fiber.inner(&u.vf, &v.vf)
}

/// Residuals `(ϱ''/ϱ - c̄, (c + ϱ'²)/ϱ² - c̄)` of the constant-curvature condition.
pub fn curvature_relation_residual(model: &SpaceFormModel, t: f64) -> (f64, f64) {
    let p = model.profile;
    let rho = p.eval(t);
    let d1 = p.d1(t);
    let cbar = model.cbar.value();
    let c = model.fiber.curvature();
    (p.d2(t) / rho - cbar, (c + d1 * d1) / (rho * rho) - cbar)
}

/// Point at parameter `u` of the curve `(t + u X_t, exp_p(u X_F))`, whose
/// velocity at `u = 0` is `X`.
pub fn curve_through(model: &SpaceFormModel, x: &EventVector, u: f64) -> EventPoint {
    EventPoint {
        t: x.base.t + u * x.vt,
        p: FiberPoint::new(model.fiber.geodesic(&x.base.p, &x.vf, u)),
    }
}

/// Derivative of the raw components of `field` along the curve through `X`.
pub fn flat_derivative(model: &SpaceFormModel, x: &EventVector, field: &VectorField) -> Result<DVector<f64>> {
    fd_derivative(
        |u| Ok(field(&curve_through(model, x, u))?.components()),
        0.0,
        FdOrder::First,
    )
}

/// Levi-Civita derivative `∇̄_X Y` of the warped product.
///
/// With `X = a ∂_t + v` and `Y = b ∂_t + w`:
///
/// ```text
/// ∇̄_X Y = (X(b) + ϱϱ' g_F(v, w)) ∂_t + ∇^F_X w + (ϱ'/ϱ)(a w + b v)
/// ```
///
/// which packs `∇̄_∂t ∂_t = 0`, `∇̄_V ∂_t = (ϱ'/ϱ) V` and
/// `∇̄_V W = ∇^F_V W + ϱϱ' g_F(V, W) ∂_t` for fiber fields. `∇^F` is the
/// tangential projection of the flat derivative of `w` along the curve,
/// which also carries the `t`-dependence of `w`.
pub fn ambient_cov_deriv(model: &SpaceFormModel, x: &EventVector, y: &VectorField) -> Result<EventVector> {
    let at = &x.base;
    let y0 = y(at)?;
    let dy = flat_derivative(model, x, y)?;
    let len = y0.vf.len();
    let dw = model.fiber.project_tangent(&at.p, &dy.rows(1, len).into_owned());

    let rho = model.rho(at.t);
    let d1 = model.profile.d1(at.t);
    let log_d = d1 / rho;
    let vt = dy[0] + rho * d1 * model.fiber.inner(&x.vf, &y0.vf);
    let vf = dw + (&y0.vf * x.vt + &x.vf * y0.vt) * log_d;
    Ok(EventVector::new(at.clone(), vt, vf))
}

/// Lie bracket `[X, Y]` at `at` from flat derivatives of the components.
pub fn flat_bracket(model: &SpaceFormModel, x: &VectorField, y: &VectorField, at: &EventPoint) -> Result<EventVector> {
    let x0 = x(at)?;
    let y0 = y(at)?;
    let dy = flat_derivative(model, &x0, y)?;
    let dx = flat_derivative(model, &y0, x)?;
    let mut v = EventVector::from_components(at, &(dy - dx));
    v.vf = model.fiber.project_tangent(&at.p, &v.vf);
    Ok(v)
}

/// Isometric image of an event in the quadric model: `(sinh t, cosh t · p)`
/// in `ℝ₁ⁿ⁺³` for de Sitter, `(sin t, cos t · p)` in `ℝ₂ⁿ⁺³` for anti de
/// Sitter, and `(t, p)` in `ℝ₁ⁿ⁺²` for Minkowski.
pub fn embed_isometry(model: &SpaceFormModel, e: &EventPoint) -> DVector<f64> {
    let p = &e.p.coords;
    let mut x = DVector::zeros(1 + p.len());
    let (head, scale) = match model.cbar {
        Cbar::Zero => (e.t, 1.0),
        Cbar::Positive => (e.t.sinh(), e.t.cosh()),
        Cbar::Negative => (e.t.sin(), e.t.cos()),
    };
    x[0] = head;
    x.rows_mut(1, p.len()).copy_from(&(p * scale));
    x
}

/// Bilinear form of the flat space receiving [`embed_isometry`]: index 1 for
/// Minkowski and de Sitter, index 2 for anti de Sitter.
pub fn embedding_pairing(model: &SpaceFormModel, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let negatives = match model.cbar {
        Cbar::Negative => 2,
        _ => 1,
    };
    a.iter()
        .zip(b.iter())
        .enumerate()
        .map(|(i, (x, y))| if i < negatives { -x * y } else { x * y })
        .sum()
}

/// Differential of [`embed_isometry`] applied to `X`.
pub fn embedding_differential(model: &SpaceFormModel, x: &EventVector) -> Result<DVector<f64>> {
    fd_derivative(|u| Ok(embed_isometry(model, &curve_through(model, x, u))), 0.0, FdOrder::First)
}
