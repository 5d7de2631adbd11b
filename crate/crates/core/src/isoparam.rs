//! Principal curvatures of the screen and the Cartan-type identities they
//! satisfy when the slices are isoparametric.
//!
//! With `ψ = √2 ϱ'/ϱ` and the distinct eigenvalues `λ_1 … λ_l` of `A_ξ*`
//! (multiplicities `m_j`), the identity checked at every `i` is
//!
//! ```text
//! Σ_{j≠i} m_j (c̄ + 2 λ_i λ_j + ψ (λ_i + λ_j)) / (λ_i - λ_j) = 0
//! ```
//!
//! The slice `S_t` as a hypersurface of `{t} × F` has shape operator
//! `A_η = √2 A_ξ* + (ϱ'/ϱ) Id` for the slice-unit normal `η`.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::catalog::CatalogGraph;
use crate::error::{GeomError, Result};
use crate::nullhyp::{build_null_frame, shape_data, NullFrame, ShapeData, TransnormalGraph};
use crate::numkernel::{cluster_values, fd_derivative, sym_eigen, Cluster, FdOrder, SymMatrix, Tolerances};
use crate::parallel::{try_map_indexed, Execution};
use crate::rng::{streams, Xorshift64Star};
use crate::spaceform::FiberPoint;

/// Outcome of the cluster-count corollary at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryVerdict {
    /// False for `c̄ = 1`, where no restriction is claimed.
    pub applies: bool,
    pub distinct: usize,
    /// `l <= 2`.
    pub bound_ok: bool,
    /// `c̄ = 0, l = 2`: smallest `|λ|`.
    pub zero_cluster: Option<f64>,
    /// `c̄ = -1, l = 2`: `|ϱ² ν_1 ν_2 - 1|`.
    pub product_residual: Option<f64>,
    pub pass: bool,
}

/// Clustered spectrum of `A_ξ*` at one point of `M`.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub t: f64,
    pub cbar: f64,
    pub rho: f64,
    /// ϱ'/ϱ.
    pub log_derivative: f64,
    /// `√2 ϱ'/ϱ`.
    pub psi: f64,
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub lambdas: Vec<Cluster>,
    /// One residual per cluster; empty when `l = 1`.
    pub cartan_residuals: Vec<f64>,
    pub corollary: CorollaryVerdict,
}

impl SpectrumReport {
    pub fn distinct(&self) -> usize {
        self.lambdas.len()
    }

    /// Slice curvatures `ν = √2 λ + ϱ'/ϱ` for the slice-unit normal.
    pub fn slice_curvatures(&self) -> Vec<Cluster> {
        self.lambdas
            .iter()
            .map(|c| Cluster {
                value: SQRT_2 * c.value + self.log_derivative,
                multiplicity: c.multiplicity,
            })
            .collect()
    }

    /// Curvatures for the `g_F`-unit normal: `ϱ ν`.
    pub fn fiber_curvatures(&self) -> Vec<Cluster> {
        self.slice_curvatures()
            .into_iter()
            .map(|c| Cluster {
                value: self.rho * c.value,
                multiplicity: c.multiplicity,
            })
            .collect()
    }

    pub fn max_cartan_residual(&self) -> f64 {
        self.cartan_residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Spectrum of the screen shape operator at `frame`.
pub fn screen_spectrum(g: &TransnormalGraph, frame: &NullFrame, tol: &Tolerances) -> Result<SpectrumReport> {
    spectrum_from_shape(g, &shape_data(g, frame)?, tol)
}

/// [`screen_spectrum`] from already computed shape data.
pub fn spectrum_from_shape(g: &TransnormalGraph, shape: &ShapeData, tol: &Tolerances) -> Result<SpectrumReport> {
    let t = shape.frame.at.t;
    let model = &g.model;
    let eig = sym_eigen(&shape.a_star);
    let lambdas = cluster_values(&eig.values, tol.cluster_rel);
    let cbar = model.cbar.value();
    let rho = model.rho(t);
    let log_derivative = shape.frame.log_derivative;
    let psi = SQRT_2 * log_derivative;
    let cartan_residuals = if lambdas.len() > 1 {
        cartan_residuals(&lambdas, cbar, psi)?
    } else {
        Vec::new()
    };
    let corollary = check_corollary(&lambdas, cbar, rho, log_derivative, tol);
    Ok(SpectrumReport {
        t,
        cbar,
        rho,
        log_derivative,
        psi,
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        lambdas,
        cartan_residuals,
        corollary,
    })
}

/// Left-hand sides of the Cartan identity, one per cluster.
pub fn cartan_residuals(lambdas: &[Cluster], cbar: f64, psi: f64) -> Result<Vec<f64>> {
    if lambdas.len() < 2 {
        return Err(GeomError::Contract("Cartan identity needs at least two distinct curvatures".into()));
    }
    let mut out = Vec::with_capacity(lambdas.len());
    for (i, li) in lambdas.iter().enumerate() {
        let mut sum = 0.0;
        for (j, lj) in lambdas.iter().enumerate() {
            if i == j {
                continue;
            }
            let (a, b) = (li.value, lj.value);
            let gap = a - b;
            if gap.abs() <= f64::EPSILON * (1.0 + a.abs() + b.abs()) {
                return Err(GeomError::Coincident(a, b));
            }
            sum += lj.multiplicity as f64 * (cbar + 2.0 * a * b + psi * (a + b)) / gap;
        }
        out.push(sum);
    }
    Ok(out)
}

/// Cluster-count restrictions: `l <= 2` for `c̄ ∈ {0, -1}`, a zero cluster
/// when `c̄ = 0, l = 2`, and `ϱ² ν_1 ν_2 = 1` when `c̄ = -1, l = 2`.
pub fn check_corollary(lambdas: &[Cluster], cbar: f64, rho: f64, log_derivative: f64, tol: &Tolerances) -> CorollaryVerdict {
    let distinct = lambdas.len();
    let mut v = CorollaryVerdict {
        applies: cbar <= 0.0,
        distinct,
        bound_ok: distinct <= 2,
        zero_cluster: None,
        product_residual: None,
        pass: true,
    };
    if !v.applies {
        return v;
    }
    v.pass = v.bound_ok;
    if distinct == 2 {
        if cbar == 0.0 {
            let spread = lambdas[1].value - lambdas[0].value;
            let smallest = lambdas.iter().map(|c| c.value.abs()).fold(f64::INFINITY, f64::min);
            v.zero_cluster = Some(smallest);
            v.pass &= smallest <= tol.cluster_rel * (1.0 + spread);
        } else {
            let nu: Vec<f64> = lambdas.iter().map(|c| SQRT_2 * c.value + log_derivative).collect();
            let r = (rho * rho * nu[0] * nu[1] - 1.0).abs();
            v.product_residual = Some(r);
            v.pass &= r < 10.0 * tol.fd_eq;
        }
    }
    v
}

/// Shape operator of the slice through the frame point, computed inside
/// `{t} × F` from the unit normal `grad f / |grad f|_F` alone.
#[derive(Debug, Clone)]
pub struct SliceShape {
    /// For the `g_F`-unit normal in a `g_F`-orthonormal basis.
    pub fiber: SymMatrix,
    /// For the slice-unit normal `η` in the slice-orthonormal screen basis.
    pub slice: SymMatrix,
    pub asymmetry: f64,
}

pub fn slice_shape_operator(g: &TransnormalGraph, frame: &NullFrame) -> Result<SliceShape> {
    let fiber = g.fiber();
    let rho = g.model.rho(frame.at.t);
    let q = &frame.at.p;
    let basis: Vec<DVector<f64>> = frame.screen.iter().map(|e| &e.vf * rho).collect();
    let unit = |p: &FiberPoint| -> Result<DVector<f64>> {
        let grad = g.gradient(p)?.comps;
        let len = fiber.norm(&grad);
        Ok(grad / len)
    };
    let n = basis.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, ei) in basis.iter().enumerate() {
        let d = fd_derivative(|s| unit(&FiberPoint::new(fiber.geodesic(q, ei, s))), 0.0, FdOrder::First)?;
        let d = fiber.project_tangent(q, &d);
        for (j, ej) in basis.iter().enumerate() {
            m[(i, j)] = -fiber.inner(&d, ej);
        }
    }
    let (fiber_op, asymmetry) = SymMatrix::symmetrized(m);
    let (slice, _) = SymMatrix::symmetrized(fiber_op.as_matrix() / rho);
    Ok(SliceShape {
        fiber: fiber_op,
        slice,
        asymmetry,
    })
}

/// Deviation of the sorted spectrum of `op` from the sorted values
/// `√2 λ_i + ϱ'/ϱ`.
pub fn affine_relation_residual(op: &SymMatrix, spectrum: &SpectrumReport) -> f64 {
    let got = sym_eigen(op).values;
    let mut want: Vec<f64> = spectrum
        .eigenvalues
        .iter()
        .map(|l| SQRT_2 * l + spectrum.log_derivative)
        .collect();
    want.sort_by(f64::total_cmp);
    got.iter().zip(&want).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// Spread of the screen spectrum over sample points of one slice.
#[derive(Debug, Clone)]
pub struct ScanReport {
    pub t: f64,
    pub samples: usize,
    /// Largest deviation of a sorted spectrum from the first one.
    pub spread: f64,
    pub threshold: f64,
    pub reference: Vec<Cluster>,
    pub pass: bool,
}

/// Samples the level set `f = t` and compares screen spectra.
pub fn isoparametric_scan(
    entry: &CatalogGraph,
    t: f64,
    sample_count: usize,
    seed: u64,
    tol: &Tolerances,
    exec: Execution,
) -> Result<ScanReport> {
    if sample_count == 0 {
        return Err(GeomError::InvalidParam("scan needs at least one sample".into()));
    }
    let g = &entry.graph;
    let stream = streams::SCAN ^ t.to_bits().rotate_left(8);
    let spectra = try_map_indexed(exec, sample_count, |i| {
        let mut rng = Xorshift64Star::for_stream(seed, stream, i as u64);
        let q = entry.sample_on_level(t, &mut rng)?;
        let frame = build_null_frame(g, &q, tol.fd_eq)?;
        screen_spectrum(g, &frame, tol)
    })?;
    let first = &spectra[0];
    let spread = spectra
        .iter()
        .map(|s| {
            s.eigenvalues
                .iter()
                .zip(&first.eigenvalues)
                .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()))
        })
        .fold(0.0, f64::max);
    let threshold = 10.0 * tol.fd_eq;
    Ok(ScanReport {
        t,
        samples: sample_count,
        spread,
        threshold,
        reference: first.lambdas.clone(),
        pass: spread < threshold,
    })
}
