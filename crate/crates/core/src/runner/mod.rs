//! Verification suites over one catalog entry.
//!
//! Every suite samples points from per-(seed, stream, index) generators, so a
//! report depends only on the configuration, never on thread scheduling.

pub mod config;
pub mod report;

use thiserror::Error;

pub use config::{ConfigError, OutputFormat, RunConfig, Suite};
pub use report::{CheckRow, ConventionRow, RunReport, SpectrumSummary};

use crate::catalog::CatalogGraph;
use crate::chart::{ChartPatch, Convention};
use crate::error::GeomError;
use crate::grw::{curvature_relation_residual, embed_isometry, embedding_differential, embedding_pairing, metric_at};
use crate::isoparam::{
    affine_relation_residual, isoparametric_scan, slice_shape_operator, spectrum_from_shape, SpectrumReport,
};
use crate::nullhyp::{
    build_null_frame, dtau_residual, frame_direction_pairs, fundamental_forms, shape_data, transnormal_residual,
    NullFrame, ScreenExtension,
};
use crate::numkernel::Tolerances;
use crate::parallel::{try_map_indexed, Execution};
use crate::rng::{streams, Xorshift64Star};
use crate::spaceform::FiberPoint;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Closed-form identities of the warping function.
pub const EQ5_TOL: f64 = 1e-12;
/// Constraint of the quadric models.
pub const QUADRIC_TOL: f64 = 1e-10;
/// Cartan sums built from finite-difference eigenvalues.
pub const CARTAN_TOL: f64 = 1e-7;

/// Chart parameters as fractions of `ε`.
const CHART_S: [f64; 5] = [-0.8, -0.4, 0.0, 0.4, 0.8];
/// Slices of the scan, as fractions of the sampled `t` range.
const SCAN_LEVELS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("suite {suite} failed to run: {source}")]
    Execution { suite: Suite, source: GeomError },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Execution { .. } => 3,
        }
    }
}

/// 0 when the roll-up passes, 1 otherwise.
pub fn exit_code(report: &RunReport) -> i32 {
    if report.pass {
        0
    } else {
        1
    }
}

pub fn emit_report(report: &RunReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Text => report.to_text(),
        OutputFormat::Json => report.to_json(),
    }
}

/// NaN-propagating maximum.
fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .fold(0.0, |m, v| if m.is_nan() || v.is_nan() { f64::NAN } else { m.max(v) })
}

struct Ctx<'a> {
    entry: &'a CatalogGraph,
    cfg: &'a RunConfig,
    tol: Tolerances,
    exec: Execution,
}

impl Ctx<'_> {
    /// `sample_count * num / den`, at least one.
    fn count(&self, num: usize, den: usize) -> usize {
        (self.cfg.sample_count * num / den).max(1)
    }

    fn rng(&self, stream: u64, i: usize) -> Xorshift64Star {
        Xorshift64Star::for_stream(self.cfg.seed, stream, i as u64)
    }

    fn point(&self, stream: u64, i: usize) -> crate::Result<FiberPoint> {
        self.entry.sample_point(&mut self.rng(stream, i))
    }

    fn frame(&self, stream: u64, i: usize) -> crate::Result<NullFrame> {
        build_null_frame(&self.entry.graph, &self.point(stream, i)?, self.tol.fd_eq)
    }

    fn map<T: Send>(&self, count: usize, f: impl Fn(usize) -> crate::Result<T> + Sync + Send) -> crate::Result<Vec<T>> {
        try_map_indexed(self.exec, count, f)
    }
}

#[derive(Default)]
struct Output {
    rows: Vec<CheckRow>,
    spectra: Vec<SpectrumSummary>,
    conventions: Vec<ConventionRow>,
}

impl Output {
    fn conventions(&mut self, check: &str, residuals: &[(Convention, f64)]) -> Convention {
        let best = residuals
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|r| r.0)
            .unwrap_or(Convention::FiberUnit);
        for (c, r) in residuals {
            self.conventions.push(ConventionRow {
                check: check.to_string(),
                convention: c.as_str().to_string(),
                max_residual: *r,
                selected: *c == best,
            });
        }
        best
    }
}

/// Runs the configured suites.
pub fn run(cfg: &RunConfig) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let entry = cfg.build_entry()?;
    let ctx = Ctx {
        entry: &entry,
        cfg,
        tol: cfg.tolerances,
        exec: cfg.execution,
    };
    let mut out = Output::default();
    let mut spectra: Option<Vec<SpectrumReport>> = None;
    for &suite in &cfg.suites {
        let wrap = |source| RunError::Execution { suite, source };
        match suite {
            Suite::Frames => frames(&ctx, &mut out).map_err(wrap)?,
            Suite::Shape => shape(&ctx, &mut out).map_err(wrap)?,
            Suite::Cartan | Suite::Corollary => {
                if spectra.is_none() {
                    let s = sample_spectra(&ctx).map_err(wrap)?;
                    out.spectra = s.iter().map(summary).collect();
                    spectra = Some(s);
                }
                let s = spectra.as_deref().unwrap_or_default();
                if suite == Suite::Cartan {
                    cartan(&ctx, s, &mut out);
                } else {
                    corollary(&ctx, s, &mut out);
                }
            }
            Suite::Chart => chart(&ctx, &mut out).map_err(wrap)?,
            Suite::Isometry => isometry(&ctx, &mut out).map_err(wrap)?,
            Suite::Dtau => dtau(&ctx, &mut out).map_err(wrap)?,
        }
    }
    let all_pass = out.rows.iter().all(|r| r.pass);
    Ok(RunReport {
        version: VERSION.to_string(),
        entry: entry.name.to_string(),
        control: entry.control,
        config: cfg.echo(),
        pass: all_pass || (entry.control && !cfg.include_controls),
        suites: out.rows,
        spectra: out.spectra,
        conventions: out.conventions,
    })
}

fn frames(ctx: &Ctx, out: &mut Output) -> crate::Result<()> {
    let model = &ctx.entry.graph.model;
    let n = ctx.count(1, 1);
    let pairings = ctx.map(n, |i| Ok(ctx.frame(streams::FRAMES, i)?.pairings(model).max()))?;
    out.rows.push(CheckRow::numeric("frames/pairings", max_of(pairings), ctx.tol.abs_eq, n));

    let m = ctx.count(5, 2);
    let resid = ctx.map(m, |i| transnormal_residual(&ctx.entry.graph, &ctx.point(streams::TRANSNORMAL, i)?))?;
    out.rows.push(CheckRow::numeric("frames/transnormality", max_of(resid), 10.0 * ctx.tol.abs_eq, m));
    Ok(())
}

struct ShapeSample {
    tau_screen: f64,
    tau_xi: f64,
    asymmetry: f64,
    relation: f64,
    radical: f64,
    forms: f64,
    extension: f64,
    slice: f64,
    fiber: f64,
}

fn shape_sample(ctx: &Ctx, i: usize) -> crate::Result<ShapeSample> {
    let g = &ctx.entry.graph;
    let frame = ctx.frame(streams::SHAPE, i)?;
    let sd = shape_data(g, &frame)?;
    let gs = fundamental_forms(g, &frame, ScreenExtension::GramSchmidt)?;
    let pr = fundamental_forms(g, &frame, ScreenExtension::Projection)?;
    let forms = max_of([
        (gs.b.as_matrix() - sd.a_star.as_matrix()).amax(),
        (gs.c.as_matrix() - sd.a_n.as_matrix()).amax(),
        max_of(gs.b_xi.iter().map(|v| v.abs())),
        max_of(gs.c_xi.iter().map(|v| v.abs())),
    ]);
    let extension = max_of([
        (gs.b.as_matrix() - pr.b.as_matrix()).amax(),
        (gs.c.as_matrix() - pr.c.as_matrix()).amax(),
    ]);
    let spec = spectrum_from_shape(g, &sd, &ctx.tol)?;
    let sl = slice_shape_operator(g, &frame)?;
    let d = &sd.diagnostics;
    Ok(ShapeSample {
        tau_screen: sd.tau_screen_max(),
        tau_xi: sd.tau_xi_residual(),
        asymmetry: d.a_star_asymmetry.max(d.a_n_asymmetry),
        relation: sd.shape_relation_residual(),
        radical: max_of([d.xi_radical, d.a_n_radical, d.a_star_xi, d.a_n_xi]),
        forms,
        extension,
        slice: affine_relation_residual(&sl.slice, &spec),
        fiber: affine_relation_residual(&sl.fiber, &spec),
    })
}

fn shape(ctx: &Ctx, out: &mut Output) -> crate::Result<()> {
    let n = ctx.count(1, 2);
    let samples = ctx.map(n, |i| shape_sample(ctx, i))?;
    let col = |f: fn(&ShapeSample) -> f64| max_of(samples.iter().map(f));
    let fd = ctx.tol.fd_eq;
    out.rows.push(CheckRow::numeric("shape/tau_screen", col(|s| s.tau_screen), fd, n));
    out.rows.push(CheckRow::numeric("shape/tau_xi", col(|s| s.tau_xi), fd, n));
    out.rows.push(CheckRow::numeric("shape/symmetry", col(|s| s.asymmetry), fd, n));
    out.rows.push(CheckRow::numeric("shape/transversal_relation", col(|s| s.relation), fd, n));
    out.rows.push(CheckRow::numeric("shape/radical", col(|s| s.radical), fd, n));
    out.rows.push(CheckRow::numeric("shape/fundamental_forms", col(|s| s.forms), fd, n));
    out.rows.push(CheckRow::numeric("shape/extension_independence", col(|s| s.extension), fd, n));

    let slice = col(|s| s.slice);
    let fiber = col(|s| s.fiber);
    let best = out.conventions(
        "shape/slice_relation",
        &[(Convention::SliceUnit, slice), (Convention::FiberUnit, fiber)],
    );
    let selected = if best == Convention::SliceUnit { slice } else { fiber };
    out.rows.push(CheckRow::numeric("shape/slice_relation", selected, 10.0 * fd, n));

    let per_level = ctx.count(1, 10);
    let (lo, hi) = ctx.entry.t_range;
    let mut spread = 0.0_f64;
    for (k, frac) in SCAN_LEVELS.iter().enumerate() {
        let t = lo + frac * (hi - lo);
        let scan = isoparametric_scan(
            ctx.entry,
            t,
            per_level,
            ctx.cfg.seed.wrapping_add(k as u64),
            &ctx.tol,
            ctx.exec,
        )?;
        spread = max_of([spread, scan.spread]);
    }
    out.rows.push(CheckRow::numeric(
        "shape/isoparametric",
        spread,
        10.0 * fd,
        per_level * SCAN_LEVELS.len(),
    ));
    Ok(())
}

fn sample_spectra(ctx: &Ctx) -> crate::Result<Vec<SpectrumReport>> {
    let g = &ctx.entry.graph;
    ctx.map(ctx.count(1, 10), |i| {
        let frame = ctx.frame(streams::SPECTRA, i)?;
        spectrum_from_shape(g, &shape_data(g, &frame)?, &ctx.tol)
    })
}

fn summary(s: &SpectrumReport) -> SpectrumSummary {
    SpectrumSummary {
        t: s.t,
        lambdas: s.lambdas.clone(),
        psi: s.psi,
        cartan_residuals: s.cartan_residuals.clone(),
        corollary: s.corollary.pass,
    }
}

fn cartan(ctx: &Ctx, spectra: &[SpectrumReport], out: &mut Output) {
    let multi: Vec<&SpectrumReport> = spectra.iter().filter(|s| s.distinct() > 1).collect();
    out.rows.push(CheckRow::numeric(
        "cartan/identity",
        max_of(multi.iter().map(|s| s.max_cartan_residual())),
        CARTAN_TOL,
        multi.len(),
    ));
    if let Some(exp) = ctx.entry.expected {
        let mismatches = spectra
            .iter()
            .filter(|s| {
                let spread = s.lambdas.last().map_or(0.0, |c| c.value) - s.lambdas.first().map_or(0.0, |c| c.value);
                let zero = s
                    .lambdas
                    .iter()
                    .any(|c| c.value.abs() <= ctx.tol.cluster_rel * (1.0 + spread));
                s.distinct() != exp.distinct || zero != exp.has_zero
            })
            .count();
        out.rows.push(CheckRow::count("cartan/cluster_structure", mismatches, spectra.len()));
    }
}

fn corollary(ctx: &Ctx, spectra: &[SpectrumReport], out: &mut Output) {
    let failures = spectra.iter().filter(|s| !s.corollary.pass).count();
    out.rows.push(CheckRow::count("corollary/verdict", failures, spectra.len()));
    let zeros: Vec<f64> = spectra.iter().filter_map(|s| s.corollary.zero_cluster).collect();
    if !zeros.is_empty() {
        out.rows.push(CheckRow::numeric(
            "corollary/zero_cluster",
            max_of(zeros.iter().copied()),
            ctx.tol.cluster_rel,
            zeros.len(),
        ));
    }
    let products: Vec<f64> = spectra.iter().filter_map(|s| s.corollary.product_residual).collect();
    if !products.is_empty() {
        out.rows.push(CheckRow::numeric(
            "corollary/product_relation",
            max_of(products.iter().copied()),
            10.0 * ctx.tol.fd_eq,
            products.len(),
        ));
    }
}

fn dtau(ctx: &Ctx, out: &mut Output) -> crate::Result<()> {
    let g = &ctx.entry.graph;
    let pairs = frame_direction_pairs(g.model.n());
    let n = ctx.count(1, 4);
    let resid = ctx.map(n, |i| {
        let frame = ctx.frame(streams::DTAU, i)?;
        let mut worst = 0.0_f64;
        for &(x, y) in &pairs {
            worst = max_of([worst, dtau_residual(g, &frame, x, y)?]);
        }
        Ok(worst)
    })?;
    out.rows.push(CheckRow::numeric("dtau/closed", max_of(resid), 10.0 * ctx.tol.fd_eq, n));
    Ok(())
}

#[derive(Clone, Copy, Default)]
struct ChartStats {
    degenerate: f64,
    cross: f64,
    spatial: f64,
    jacobi: f64,
    focal: usize,
}

fn chart(ctx: &Ctx, out: &mut Output) -> crate::Result<()> {
    let entry = ctx.entry;
    let (lo, hi) = entry.t_range;
    let t0 = 0.5 * (lo + hi);
    let nq = ctx.count(1, 10);
    let qs = ctx.map(nq, |i| entry.sample_on_level(t0, &mut ctx.rng(streams::CHART, i)))?;
    let patch = ChartPatch::new(entry, t0, &qs, &ctx.tol)?;
    let jobs = nq * CHART_S.len();

    let mut stats = Vec::new();
    for conv in Convention::ALL {
        let per = ctx.map(jobs, |j| {
            let q = &qs[j / CHART_S.len()];
            let s = CHART_S[j % CHART_S.len()] * patch.eps;
            match patch.pullback_metric_residual(s, q, conv) {
                Ok(r) => Ok(ChartStats {
                    degenerate: r.degenerate,
                    cross: r.cross,
                    spatial: r.spatial,
                    jacobi: r.jacobi,
                    focal: 0,
                }),
                Err(GeomError::FocalPoint(_)) => Ok(ChartStats {
                    focal: 1,
                    ..ChartStats::default()
                }),
                Err(e) => Err(e),
            }
        })?;
        let agg = ChartStats {
            degenerate: max_of(per.iter().map(|r| r.degenerate)),
            cross: max_of(per.iter().map(|r| r.cross)),
            spatial: max_of(per.iter().map(|r| r.spatial)),
            jacobi: max_of(per.iter().map(|r| r.jacobi)),
            focal: per.iter().map(|r| r.focal).sum(),
        };
        stats.push((conv, agg));
    }
    let best = out.conventions(
        "chart/spatial_block",
        &stats.iter().map(|(c, s)| (*c, s.spatial)).collect::<Vec<_>>(),
    );
    let s = stats.iter().find(|(c, _)| *c == best).map(|x| x.1).unwrap_or_default();
    let fd = ctx.tol.fd_eq;
    out.rows.push(CheckRow::count("chart/rank", s.focal, jobs));
    out.rows.push(CheckRow::numeric("chart/degenerate_direction", s.degenerate, fd, jobs));
    out.rows.push(CheckRow::numeric("chart/cross_terms", s.cross, fd, jobs));
    out.rows.push(CheckRow::numeric("chart/spatial_block", s.spatial, 10.0 * fd, jobs));
    out.rows.push(CheckRow::numeric("chart/jacobi_columns", s.jacobi, 10.0 * fd, jobs));

    // parallel slices: f(Φ(s, q)) must not depend on q
    let mut level_spread = 0.0_f64;
    for frac in CHART_S {
        let s = frac * patch.eps;
        let ts = ctx.map(nq, |i| Ok(patch.phi(s, &qs[i])?.t))?;
        let (mn, mx) = ts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
        level_spread = max_of([level_spread, mx - mn]);
    }
    out.rows.push(CheckRow::numeric("chart/parallel_slices", level_spread, fd, jobs));
    Ok(())
}

fn isometry(ctx: &Ctx, out: &mut Output) -> crate::Result<()> {
    let model = &ctx.entry.graph.model;
    let n5 = ctx.count(1, 2);
    let (lo, hi) = (model.interval.0.max(-1.5), model.interval.1.min(1.5));
    let eq5 = ctx.map(n5, |i| {
        let t = ctx.rng(streams::CURVATURE, i).uniform(lo, hi);
        let (a, b) = curvature_relation_residual(model, t);
        Ok(a.abs().max(b.abs()))
    })?;
    out.rows.push(CheckRow::numeric("isometry/curvature_relation", max_of(eq5), EQ5_TOL, n5));

    let n = ctx.count(1, 4);
    let cbar = model.cbar.value();
    let per = ctx.map(n, |i| {
        let frame = ctx.frame(streams::ISOMETRY, i)?;
        let x = embed_isometry(model, &frame.at);
        let quadric = if cbar == 0.0 {
            0.0
        } else {
            (embedding_pairing(model, &x, &x) - 1.0 / cbar).abs()
        };
        let mut vectors = vec![frame.xi.clone(), frame.n.clone()];
        vectors.extend(frame.screen.iter().cloned());
        let images = vectors
            .iter()
            .map(|v| embedding_differential(model, v))
            .collect::<crate::Result<Vec<_>>>()?;
        let mut pullback = 0.0_f64;
        for a in 0..vectors.len() {
            for b in a..vectors.len() {
                let want = metric_at(model, frame.at.t, &vectors[a], &vectors[b]);
                let got = embedding_pairing(model, &images[a], &images[b]);
                pullback = max_of([pullback, (got - want).abs()]);
            }
        }
        Ok((quadric, pullback))
    })?;
    if cbar != 0.0 {
        out.rows.push(CheckRow::numeric(
            "isometry/quadric",
            max_of(per.iter().map(|p| p.0)),
            QUADRIC_TOL,
            n,
        ));
    }
    out.rows.push(CheckRow::numeric(
        "isometry/pullback",
        max_of(per.iter().map(|p| p.1)),
        ctx.tol.fd_eq,
        n,
    ));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_text(text).unwrap()
    }

    #[test]
    fn cone_passes_everything() {
        let r = run(&cfg("entry.name = mink_cone\nsample_count = 20\nexecution = sequential")).unwrap();
        for row in &r.suites {
            assert!(row.pass, "{row:?}");
        }
        assert!(r.pass && exit_code(&r) == 0);
    }

    #[test]
    fn empty_suites_echo_only() {
        let r = run(&cfg("suites =")).unwrap();
        assert!(r.suites.is_empty() && r.spectra.is_empty() && r.pass);
        assert_eq!(r.config["entry.name"], "mink_cone");
    }

    #[test]
    fn control_does_not_flip_rollup() {
        let base = "entry.name = mink_ellipsoid_negcontrol\nsample_count = 20\nsuites = shape";
        let r = run(&cfg(base)).unwrap();
        assert!(r.control);
        assert!(!r.row("shape/isoparametric").unwrap().pass);
        assert!(r.pass);
        let r = run(&cfg(&format!("{base}\nrollup.include_controls = true"))).unwrap();
        assert!(!r.pass && exit_code(&r) == 1);
    }
}
