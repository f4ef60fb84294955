//! Root scan of `χ`, stability labels from `λ`, the predicted dynamics for
//! small ε, the Holling IV threshold κ* and the small-`c` limits of the roots.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fast_orbit::{configuration_of, integrate_fast_orbit, FastOrbit, SingularConfiguration};
use crate::model::{classify_isocline, h_value, HumpClass, IsoclineShape, ModelParams, ModelSpec};
use crate::roots::{bisect, bisect_fallible, linspace};

pub const DEFAULT_SCAN_GRID: usize = 200;
pub const DEFAULT_TOL_LAMBDA: f64 = 1e-6;

/// Margin, as a fraction of `K`, trimmed from both ends of the scan range.
const SCAN_MARGIN: f64 = 1e-3;

/// One grid point of a `χ` scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSample {
    pub x0: f64,
    pub chi: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiScan {
    pub samples: Vec<ChiSample>,
    /// refined roots in increasing order
    pub roots: Vec<f64>,
    /// grid points where `|χ|` has a small local minimum without a sign change
    pub tangencies: Vec<f64>,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootStability {
    Stable,
    Unstable,
    NeutralInconclusive,
}

impl RootStability {
    pub fn label(self) -> &'static str {
        match self {
            RootStability::Stable => "stable",
            RootStability::Unstable => "unstable",
            RootStability::NeutralInconclusive => "neutral-inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootInfo {
    pub x0: f64,
    /// `|χ(x0)|` at the refined root
    pub chi_residual: f64,
    pub lambda: f64,
    pub stability: RootStability,
    pub y_alpha: f64,
    pub y_omega: f64,
    pub period_coefficient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    GloballyStableEquilibrium,
    NOscillations(usize),
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::GloballyStableEquilibrium => f.write_str("GloballyStableEquilibrium"),
            Verdict::NOscillations(n) => write!(f, "NOscillations({n})"),
            Verdict::Inconclusive => f.write_str("Inconclusive"),
        }
    }
}

/// Outcome of one structural check against the root-count and sign rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyNote {
    pub check: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub model: ModelParams,
    pub shape: IsoclineShape,
    pub roots: Vec<RootInfo>,
    pub verdict: Verdict,
    pub configurations: Vec<SingularConfiguration>,
    pub consistency: Vec<ConsistencyNote>,
    pub tangencies: Vec<f64>,
    pub notes: Vec<String>,
}

impl AnalysisReport {
    pub fn consistent(&self) -> bool {
        self.consistency.iter().all(|c| c.holds)
    }
}

fn check_grid(grid_n: usize) -> Result<()> {
    if grid_n < 100 {
        return Err(Error::InvalidParameter(format!(
            "scan grid needs at least 100 points, got {grid_n}"
        )));
    }
    Ok(())
}

/// Scans `χ` on `(10⁻³K, (1 - 10⁻³)K)`.
pub fn scan_chi_roots(spec: &ModelSpec, grid_n: usize, tol: f64) -> Result<ChiScan> {
    let k = spec.k();
    scan_chi_roots_in(spec, SCAN_MARGIN * k, (1.0 - SCAN_MARGIN) * k, grid_n, tol)
}

/// Scans `χ` on `[lo, hi] ⊂ (0, K)`; grid points are evaluated in parallel and
/// reduced in grid order.
pub fn scan_chi_roots_in(spec: &ModelSpec, lo: f64, hi: f64, grid_n: usize, tol: f64) -> Result<ChiScan> {
    check_grid(grid_n)?;
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty scan range [{lo}, {hi}]")));
    }
    let grid = linspace(lo, hi, grid_n);
    let samples = grid
        .par_iter()
        .map(|&x0| {
            integrate_fast_orbit(spec, x0, tol).map(|o| ChiSample { x0, chi: o.chi, lambda: o.lambda })
        })
        .collect::<Result<Vec<_>>>()?;

    let xtol = 1e-10 * spec.k();
    let mut roots = Vec::new();
    for w in samples.windows(2) {
        if w[0].chi * w[1].chi < 0.0 {
            let root = bisect_fallible(
                |x| integrate_fast_orbit(spec, x, tol).map(|o| o.chi),
                w[0].x0,
                w[1].x0,
                xtol,
            )?;
            roots.push(root);
        } else if w[1].chi == 0.0 {
            roots.push(w[1].x0);
        }
    }

    // A tangency shows up as a local minimum of |χ| that stays on one side of
    // zero and is small compared with the range of χ over the scan.
    let scale = samples.iter().map(|s| s.chi.abs()).fold(0.0, f64::max);
    let mut tangencies = Vec::new();
    for w in samples.windows(3) {
        let (a, b, c) = (w[0].chi, w[1].chi, w[2].chi);
        let same_side = a * b > 0.0 && b * c > 0.0;
        if same_side && b.abs() <= a.abs() && b.abs() <= c.abs() && b.abs() < 1e-3 * scale {
            tangencies.push(w[1].x0);
        }
    }

    Ok(ChiScan { samples, roots, tangencies, tol })
}

fn label(lambda: f64, tol_lambda: f64) -> RootStability {
    if lambda < -tol_lambda {
        RootStability::Stable
    } else if lambda > tol_lambda {
        RootStability::Unstable
    } else {
        RootStability::NeutralInconclusive
    }
}

/// Labels each root, draws the verdict and runs the structural checks.
pub fn classify_roots(
    spec: &ModelSpec,
    shape: &IsoclineShape,
    scan: &ChiScan,
    tol_lambda: f64,
) -> Result<AnalysisReport> {
    let orbits: Vec<FastOrbit> = scan
        .roots
        .par_iter()
        .map(|&x0| integrate_fast_orbit(spec, x0, scan.tol))
        .collect::<Result<_>>()?;

    let roots: Vec<RootInfo> = orbits
        .iter()
        .map(|o| RootInfo {
            x0: o.x0,
            chi_residual: o.chi.abs(),
            lambda: o.lambda,
            stability: label(o.lambda, tol_lambda),
            y_alpha: o.y_alpha,
            y_omega: o.y_omega,
            period_coefficient: o.period_coefficient(),
        })
        .collect();
    let configurations = orbits.iter().map(configuration_of).collect();

    let mut notes = Vec::new();
    let boundary_degenerate = shape.is_boundary_degenerate();
    let decisive = roots.iter().all(|r| r.stability != RootStability::NeutralInconclusive);
    let alternating = roots.windows(2).all(|w| w[0].lambda * w[1].lambda < 0.0);
    let verdict = if boundary_degenerate {
        notes.push("F'(0) = 0: the small-ε criteria need F'(0) ≠ 0".into());
        Verdict::Inconclusive
    } else if roots.is_empty() {
        Verdict::GloballyStableEquilibrium
    } else if decisive && alternating {
        Verdict::NOscillations(roots.len())
    } else {
        if !decisive {
            notes.push(format!("a root has |λ| ≤ {tol_lambda:e}"));
        }
        if !alternating {
            notes.push("λ signs do not alternate between adjacent roots".into());
        }
        Verdict::Inconclusive
    };
    for t in &scan.tangencies {
        notes.push(format!("suspected tangency of χ near x0 = {t} (not counted as a root)"));
    }
    if shape.hump_class == HumpClass::Unsupported {
        notes.push("isocline has an unsupported extremum pattern".into());
    }

    let consistency = consistency_checks(spec, shape, &roots, tol_lambda);

    Ok(AnalysisReport {
        model: *spec.params(),
        shape: shape.clone(),
        roots,
        verdict,
        configurations,
        consistency,
        tangencies: scan.tangencies.clone(),
        notes,
    })
}

/// `F'' < 0` on a 200-point grid over `(x̂, K)`.
pub fn concave_beyond_hump(spec: &ModelSpec, x_hat: f64) -> bool {
    let k = spec.k();
    linspace(x_hat, k, 202)[1..201].iter().all(|&x| spec.isocline(x).d2f < 0.0)
}

fn consistency_checks(
    spec: &ModelSpec,
    shape: &IsoclineShape,
    roots: &[RootInfo],
    tol_lambda: f64,
) -> Vec<ConsistencyNote> {
    let mut out = Vec::new();
    let lambdas: Vec<f64> = roots.iter().map(|r| r.lambda).collect();
    match shape.hump_class {
        HumpClass::OneHump => {
            let holds = roots.len() == 1 && lambdas[0] < 0.0;
            out.push(ConsistencyNote {
                check: "one-hump: unique root with λ < 0".into(),
                holds,
                detail: format!("{} root(s), λ = {lambdas:?}", roots.len()),
            });
            if let (Some(x_hat), true) = (shape.x_hat, !roots.is_empty()) {
                out.push(ConsistencyNote {
                    check: "one-hump: root lies in (x̂, K)".into(),
                    holds: roots.iter().all(|r| r.x0 > x_hat),
                    detail: format!("x̂ = {x_hat}"),
                });
            }
        }
        HumpClass::TwoHump => {
            let x_hat = shape.x_hat.expect("two-hump shape has x̂");
            if concave_beyond_hump(spec, x_hat) {
                let (holds, detail) = match lambdas.as_slice() {
                    [] => (true, "no root".to_string()),
                    [l0] => (
                        l0.abs() <= tol_lambda,
                        format!("single root must be neutral, λ = {l0}"),
                    ),
                    [l0, l1] => (
                        *l0 >= -tol_lambda && *l1 <= tol_lambda && l0 != l1,
                        format!("λ(x0) ≥ 0 ≥ λ(x1): {l0}, {l1}"),
                    ),
                    [l0, l1, l2] => (
                        *l0 > tol_lambda && l1.abs() <= tol_lambda && *l2 < -tol_lambda,
                        format!("λ(x0) > λ(x1) = 0 > λ(x2): {l0}, {l1}, {l2}"),
                    ),
                    _ => (false, format!("{} roots exceed the bound of three", lambdas.len())),
                };
                out.push(ConsistencyNote {
                    check: "two-hump with F'' < 0 on (x̂, K): root count and λ pattern".into(),
                    holds,
                    detail,
                });
            } else {
                out.push(ConsistencyNote {
                    check: "two-hump concavity on (x̂, K)".into(),
                    holds: true,
                    detail: "F'' changes sign on (x̂, K); root-count bound not applicable".into(),
                });
            }
        }
        HumpClass::Monotone | HumpClass::Unsupported => {}
    }
    if shape.f_prime_at_zero > 0.0 {
        if let Some(x_bar) = shape.x_bar {
            out.push(ConsistencyNote {
                check: "F'(0) > 0: roots lie in (x̄, K)".into(),
                holds: roots.iter().all(|r| r.x0 > x_bar),
                detail: format!("x̄ = {x_bar}"),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub classify_grid: usize,
    pub scan_grid: usize,
    pub tol: f64,
    pub tol_lambda: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            classify_grid: crate::model::DEFAULT_CLASSIFY_GRID,
            scan_grid: DEFAULT_SCAN_GRID,
            tol: crate::fast_orbit::DEFAULT_TOL,
            tol_lambda: DEFAULT_TOL_LAMBDA,
        }
    }
}

/// Classify the isocline, scan `χ`, label the roots.
pub fn predict_dynamics(spec: &ModelSpec, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    let shape = classify_isocline(spec, opts.classify_grid, 1e-12)?;
    let scan = scan_chi_roots(spec, opts.scan_grid, opts.tol)?;
    let mut report = classify_roots(spec, &shape, &scan, opts.tol_lambda)?;
    report.notes.extend(shape.notes.iter().cloned());
    Ok(report)
}

/// `F0(X, κ) = (r/m)(1 - X)(κX² + 1)`.
fn f0(scale: f64, kappa: f64, x: f64) -> f64 {
    scale * (1.0 - x) * (kappa * x * x + 1.0)
}

/// Interior critical points `(X̌, X̂) = [1 ∓ √(1 - 3/κ)]/3`, for `κ > 3`.
pub fn holling4_extrema(kappa: f64) -> Option<(f64, f64)> {
    if kappa <= 3.0 {
        return None;
    }
    let s = (1.0 - 3.0 / kappa).sqrt();
    Some(((1.0 - s) / 3.0, (1.0 + s) / 3.0))
}

/// `q(κ) = H(F0(X̂)) - H(F0(X̌))` with `ȳ = r/m`.
pub fn holling4_q_scaled(kappa: f64, r: f64, m: f64) -> Result<f64> {
    let (xc, xh) = holling4_extrema(kappa).ok_or(Error::Domain {
        what: "κ",
        value: kappa,
        domain: "(3, ∞)".into(),
    })?;
    let ybar = r / m;
    Ok(h_value(ybar, f0(ybar, kappa, xh)) - h_value(ybar, f0(ybar, kappa, xc)))
}

pub fn holling4_q(kappa: f64) -> Result<f64> {
    holling4_q_scaled(kappa, 1.0, 1.0)
}

/// `F0(X̂(κ), κ)` with `r/m = 1`.
pub fn holling4_peak(kappa: f64) -> Option<f64> {
    holling4_extrema(kappa).map(|(_, xh)| f0(1.0, kappa, xh))
}

pub fn holling4_kappa_star(tol: f64) -> Result<f64> {
    holling4_kappa_star_scaled(tol, 1.0, 1.0)
}

/// Root of `q` on `(4, ∞)`; the upper bracket doubles from 8 up to 10⁶.
pub fn holling4_kappa_star_scaled(tol: f64, r: f64, m: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if !(r > 0.0 && m > 0.0) {
        return Err(Error::InvalidParameter("r and m must be positive".into()));
    }
    let mut hi = 8.0;
    while holling4_q_scaled(hi, r, m)? <= 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Bracket("q(κ) stays non-positive up to κ = 10⁶".into()));
        }
    }
    bisect_fallible(|k| holling4_q_scaled(k, r, m), 4.0, hi, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmallCKind {
    OneHump,
    TwoHump,
}

/// Limits of the `χ` roots as `c → 0⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallCLimits {
    pub kind: SmallCKind,
    /// x̲ in `(x̂, K)` with `H(F(x̲)) = H(F(x̂))`
    pub x_lower: Option<f64>,
    /// x♯ in `(x̌, x̂)` with `H(F(x♯)) = H(F(x̌))`
    pub x_sharp_lo: Option<f64>,
    /// x^♯ in `(x̂, K)` with `H(F(x^♯)) = H(F(x̂))`
    pub x_sharp_hi: Option<f64>,
    pub exists_two_roots: bool,
}

// Root of H(F(x)) = target on (lo, K) where F decreases from F(lo) to 0 and F(lo) ≤ ȳ.
fn h_level_right(spec: &ModelSpec, lo: f64, target: f64, xtol: f64) -> Result<f64> {
    let ybar = spec.ybar();
    let k = spec.k();
    let g = |x: f64| h_value(ybar, spec.isocline_f(x)) - target;
    if g(lo) >= 0.0 {
        return Ok(lo);
    }
    let mut hi = k * (1.0 - 1e-3);
    let mut gap = 1e-3;
    while g(hi) <= 0.0 {
        gap *= 1e-2;
        if gap < 1e-15 {
            return Err(Error::Bracket("H(F(x)) stays below the target up to K".into()));
        }
        hi = k * (1.0 - gap);
    }
    bisect(g, lo, hi, xtol)
}

// First x in (a, b) with F(x) = ȳ, F decreasing through ȳ.
fn ybar_crossing(spec: &ModelSpec, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let ybar = spec.ybar();
    let g = |x: f64| spec.isocline_f(x) - ybar;
    if g(a) <= 0.0 {
        return Ok(a);
    }
    bisect(g, a, b, xtol)
}

pub fn small_c_limits(spec: &ModelSpec, shape: &IsoclineShape) -> Result<SmallCLimits> {
    let k = spec.k();
    let ybar = spec.ybar();
    let xtol = 1e-13 * k;
    let hf = |x: f64| h_value(ybar, spec.isocline_f(x));
    match shape.hump_class {
        HumpClass::OneHump => {
            let x_hat = shape.x_hat.expect("one-hump shape has x̂");
            let lo = ybar_crossing(spec, x_hat, k, xtol)?;
            let x_lower = h_level_right(spec, lo, hf(x_hat), xtol)?;
            Ok(SmallCLimits {
                kind: SmallCKind::OneHump,
                x_lower: Some(x_lower),
                x_sharp_lo: None,
                x_sharp_hi: None,
                exists_two_roots: false,
            })
        }
        HumpClass::TwoHump => {
            let x_hat = shape.x_hat.expect("two-hump shape has x̂");
            let x_check = shape.x_check.expect("two-hump shape has x̌");
            let (h_hat, h_check) = (hf(x_hat), hf(x_check));
            let exists = h_hat > h_check;
            let (lo, hi) = if exists {
                let x_bar = shape
                    .x_bar
                    .ok_or_else(|| Error::Bracket("two-hump shape without x̄".into()))?;
                let lo = bisect(|x| hf(x) - h_check, x_bar, x_hat, xtol)?;
                let right = ybar_crossing(spec, x_hat, k, xtol)?;
                (Some(lo), Some(h_level_right(spec, right, h_hat, xtol)?))
            } else {
                (None, None)
            };
            Ok(SmallCLimits {
                kind: SmallCKind::TwoHump,
                x_lower: None,
                x_sharp_lo: lo,
                x_sharp_hi: hi,
                exists_two_roots: exists,
            })
        }
        other => Err(Error::InvalidParameter(format!(
            "small-c limits need a one- or two-hump isocline, got {other:?}"
        ))),
    }
}
