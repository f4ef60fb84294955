//! Independent oracles and the named verification checks.
//!
//! Two oracles recompute fast-orbit quantities without the adaptive
//! integrator: a fixed-step RK4 march in `y`, and a quadrature of `λ` along
//! the two `x`-parameterized branches. The checks are grouped into the
//! acceptance suite ([`acceptance_suite`]), which uses fixed example models,
//! and per-model checks ([`model_checks`]) for any user supplied model.

use std::fmt::Display;

use serde::Serialize;

use crate::criteria::{
    holling4_kappa_star, holling4_kappa_star_scaled, holling4_peak, holling4_q, predict_dynamics,
    AnalysisOptions, AnalysisReport, RootStability, Verdict,
};
use crate::error::{Error, Result};
use crate::fast_orbit::{chi_crosscheck, integrate_fast_orbit, FastOrbit};
use crate::full_sim::{
    empirical_entry_exit, find_cycles, hausdorff_to_config, probe_equilibrium_attraction, CycleSearch,
    SimOptions,
};
use crate::model::{classify_isocline, HumpClass, ModelSpec, DEFAULT_CLASSIFY_GRID};
use crate::roots::linspace;

/// Oracle step in `y`.
pub const ORACLE_STEP: f64 = 1e-5;
/// Relative agreement required between the adaptive integrator and the oracles.
pub const ORACLE_REL: f64 = 1e-6;
/// Frozen value of the Holling IV threshold, from bisection on `q` to 10⁻¹².
pub const KAPPA_STAR_GOLDEN: f64 = 4.519149917998013;

const FAST_TOL: f64 = 1e-11;
const SIM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleOrbit {
    pub y_alpha: f64,
    pub y_omega: f64,
    pub chi: f64,
    pub lambda: f64,
}

// one classical RK4 step of dz/dy = ((F(X) - y)/(c y), F'(X)/y)
fn rk4_y(spec: &ModelSpec, y: f64, z: [f64; 2], h: f64) -> [f64; 2] {
    let c = spec.c();
    let f = |y: f64, z: [f64; 2]| {
        let v = spec.isocline(z[0]);
        [(v.f - y) / (c * y), v.df / y]
    };
    let add = |z: [f64; 2], k: [f64; 2], s: f64| [z[0] + s * k[0], z[1] + s * k[1]];
    let k1 = f(y, z);
    let k2 = f(y + 0.5 * h, add(z, k1, 0.5 * h));
    let k3 = f(y + 0.5 * h, add(z, k2, 0.5 * h));
    let k4 = f(y + h, add(z, k3, h));
    [
        z[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        z[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

// Marches from (x0, y0) with step h until X crosses 0, then shortens the last
// step so that it lands on X = 0. Returns (y_end, ∫ F'(X)/y dy).
fn rk4_branch(spec: &ModelSpec, x0: f64, y0: f64, h: f64) -> Result<(f64, f64)> {
    let mut y = y0;
    let mut z = [x0, 0.0];
    for _ in 0..100_000_000u64 {
        if h < 0.0 && y + h <= 0.0 {
            return Err(Error::NonConvergence("oracle reached y = 0 before x = 0".into()));
        }
        let next = rk4_y(spec, y, z, h);
        if !next[0].is_finite() {
            return Err(Error::NonFinite { t: y });
        }
        if next[0] > 0.0 {
            y += h;
            z = next;
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if rk4_y(spec, y, z, mid * h)[0] > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta = 0.5 * (lo + hi);
        let end = rk4_y(spec, y, z, theta * h);
        return Ok((y + theta * h, end[1]));
    }
    Err(Error::MaxSteps(100_000_000))
}

/// Fixed-step RK4 in `y` with step `h`, both directions from the isocline.
pub fn rk4_fast_orbit(spec: &ModelSpec, x0: f64, h: f64) -> Result<OracleOrbit> {
    let k = spec.k();
    if !(x0 > 0.0 && x0 < k) {
        return Err(Error::Domain { what: "x0", value: x0, domain: format!("(0, {k})") });
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("oracle step must be positive, got {h}")));
    }
    let y0 = spec.isocline_f(x0);
    let (y_omega, l_up) = rk4_branch(spec, x0, y0, h)?;
    let (y_alpha, l_down) = rk4_branch(spec, x0, y0, -h)?;
    let ybar = spec.ybar();
    Ok(OracleOrbit {
        y_alpha,
        y_omega,
        chi: (y_omega - y_alpha) - ybar * (y_omega / y_alpha).ln(),
        lambda: l_up - l_down,
    })
}

/// `λ = c ∫ F'(x) / (F(x) - y) dx` along both branches of `γ(x0)` as graphs
/// `y(x)`. The substitution `x = x0 - τ²` removes the square-root behaviour
/// at the isocline, where `y ≈ F(x0) ± τ √(2 c F(x0))`. Each branch takes `n`
/// RK4 steps in `τ ∈ [0, √x0]`. Returns `(λ, y_α, y_ω)`.
///
/// Fails if a branch meets the isocline again, since `y(x)` is then not a
/// graph.
pub fn lambda_x_branches(spec: &ModelSpec, x0: f64, n: usize) -> Result<(f64, f64, f64)> {
    let k = spec.k();
    if !(x0 > 0.0 && x0 < k) {
        return Err(Error::Domain { what: "x0", value: x0, domain: format!("(0, {k})") });
    }
    let c = spec.c();
    let y0 = spec.isocline_f(x0);
    let beta = (2.0 * c * y0).sqrt();
    let branch = |sign: f64| -> Result<(f64, f64)> {
        let rhs = |tau: f64, z: [f64; 2]| -> Result<[f64; 2]> {
            let x = x0 - tau * tau;
            let v = spec.isocline(x);
            let dy = if tau == 0.0 {
                sign * beta
            } else {
                let gap = v.f - z[0];
                if gap * sign >= 0.0 {
                    return Err(Error::NonConvergence(format!(
                        "branch meets the isocline again near x = {x}"
                    )));
                }
                -2.0 * tau * c * z[0] / gap
            };
            Ok([dy, v.df / z[0] * dy])
        };
        let h = x0.sqrt() / n as f64;
        let mut z = [y0, 0.0];
        for i in 0..n {
            let t = i as f64 * h;
            let t1 = if i + 1 == n { x0.sqrt() } else { t + h };
            let h = t1 - t;
            let k1 = rhs(t, z)?;
            let k2 = rhs(t + 0.5 * h, [z[0] + 0.5 * h * k1[0], z[1] + 0.5 * h * k1[1]])?;
            let k3 = rhs(t + 0.5 * h, [z[0] + 0.5 * h * k2[0], z[1] + 0.5 * h * k2[1]])?;
            let k4 = rhs(t1, [z[0] + h * k3[0], z[1] + h * k3[1]])?;
            for j in 0..2 {
                z[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        Ok((z[0], z[1]))
    };
    let (y_omega, l_up) = branch(1.0)?;
    let (y_alpha, l_down) = branch(-1.0)?;
    Ok((l_up - l_down, y_alpha, y_omega))
}

/// Deliberate corruptions used to confirm that the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Fault {
    /// negate every predicted `λ` before it is compared with the simulation
    FlipLambdaSign,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// comma separated substrings; a check runs if its name contains any
    pub filter: Option<String>,
    pub fault: Option<Fault>,
}

impl VerifyOptions {
    fn selects(&self, name: &str) -> bool {
        match &self.filter {
            None => true,
            Some(f) => f.split(',').map(str::trim).filter(|s| !s.is_empty()).any(|s| name.contains(s)),
        }
    }

    fn lambda_sign(&self) -> f64 {
        match self.fault {
            Some(Fault::FlipLambdaSign) => -1.0,
            None => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
}

impl CheckOutcome {
    /// Labels of the failed assertions.
    pub fn failures(&self) -> Vec<&str> {
        self.assertions.iter().filter(|a| !a.passed).map(|a| a.label.as_str()).collect()
    }

    /// `PASS name` or `FAIL name: label, label`.
    pub fn summary_line(&self) -> String {
        if self.passed {
            format!("PASS {}", self.name)
        } else {
            format!("FAIL {}: {}", self.name, self.failures().join("; "))
        }
    }
}

#[derive(Default)]
struct Tally {
    assertions: Vec<Assertion>,
}

impl Tally {
    fn check(&mut self, label: impl Into<String>, passed: bool, detail: impl Display) -> bool {
        self.assertions.push(Assertion { label: label.into(), passed, detail: detail.to_string() });
        passed
    }

    fn finish(self, name: &str, res: Result<()>) -> CheckOutcome {
        let mut assertions = self.assertions;
        if let Err(e) = res {
            assertions.push(Assertion { label: "computation".into(), passed: false, detail: e.to_string() });
        }
        CheckOutcome {
            name: name.into(),
            passed: !assertions.is_empty() && assertions.iter().all(|a| a.passed),
            assertions,
        }
    }
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / b.abs().max(scale)
}

/// The named example models used by the acceptance suite.
pub mod examples {
    use crate::model::ModelSpec;

    /// Holling II, `(r, K, a, m, c) = (2, 3, 1, 1.5, 0.5)`: one hump, one cycle.
    pub fn holling2() -> ModelSpec {
        ModelSpec::holling2(2.0, 3.0, 0.5, 1.5, 1.0).unwrap()
    }

    /// Holling II with `a > K`: decreasing isocline.
    pub fn holling2_a_above_k() -> ModelSpec {
        ModelSpec::holling2(2.0, 1.0, 0.5, 1.5, 3.0).unwrap()
    }

    /// Holling IV, `(r, K, m, a) = (4, 3, 2, 0.75)`, `c = 0.1`: κ = 6.75.
    pub fn holling4() -> ModelSpec {
        ModelSpec::holling4(4.0, 3.0, 0.1, 2.0, 0.75).unwrap()
    }

    /// The Holling IV instance above with `K = √(κ/a)`.
    pub fn holling4_at_kappa(kappa: f64) -> ModelSpec {
        ModelSpec::holling4(4.0, (kappa / 0.75).sqrt(), 0.1, 2.0, 0.75).unwrap()
    }

    pub fn ivlev_ak3() -> ModelSpec {
        ModelSpec::ivlev(1.0, 3.0, 0.5, 1.0, 1.0).unwrap()
    }

    pub fn ivlev_ak15() -> ModelSpec {
        ModelSpec::ivlev(1.0, 3.0, 0.5, 1.0, 0.5).unwrap()
    }

    /// `b = 1 > 1/K`: one hump.
    pub fn generalized_holling4() -> ModelSpec {
        ModelSpec::generalized_holling4(1.0, 2.0, 0.5, 1.0, 1.0, 1.0).unwrap()
    }

    pub fn log() -> ModelSpec {
        ModelSpec::log(1.0, 1.0, 0.5, 1.0, 5.0).unwrap()
    }

    pub fn all() -> Vec<(&'static str, ModelSpec)> {
        vec![
            ("holling2", holling2()),
            ("holling2-a>K", holling2_a_above_k()),
            ("holling4", holling4()),
            ("ivlev-aK3", ivlev_ak3()),
            ("ivlev-aK1.5", ivlev_ak15()),
            ("gen-holling4", generalized_holling4()),
            ("log", log()),
        ]
    }
}

fn analyze(spec: &ModelSpec) -> Result<AnalysisReport> {
    predict_dynamics(spec, &AnalysisOptions { tol: FAST_TOL, ..Default::default() })
}

fn cycles(spec: &ModelSpec, eps: f64) -> Result<(AnalysisReport, CycleSearch)> {
    let report = analyze(spec)?;
    let search = find_cycles(spec, eps, &report, &SimOptions::with_tol(SIM_TOL))?;
    Ok((report, search))
}

fn kappa4_identity(_: &VerifyOptions) -> CheckOutcome {
    let mut t = Tally::default();
    let res = (|| {
        let peak = holling4_peak(4.0).expect("κ = 4 > 3");
        t.check("F0(X̂(4), 4) = ȳ to 1e-12", rel(peak, 1.0, 0.0) <= 1e-12, format!("F0/ȳ = {peak:.17}"));
        let q4 = holling4_q(4.0)?;
        t.check("q(4) < 0", q4 < 0.0, format!("q(4) = {q4:.6e}"));
        // the same identity read off a dimensional model
        let spec = examples::holling4_at_kappa(4.0);
        let shape = classify_isocline(&spec, DEFAULT_CLASSIFY_GRID, 1e-12)?;
        let x_hat = shape.x_hat.ok_or_else(|| Error::NonConvergence("no x̂ at κ = 4".into()))?;
        let f = spec.isocline_f(x_hat) / spec.ybar();
        t.check("F(x̂)/ȳ = 1 on the dimensional model to 1e-10", (f - 1.0).abs() <= 1e-10, format!("{f:.15}"));
        Ok(())
    })();
    t.finish("kappa4_identity", res)
}

fn kappa_star(_: &VerifyOptions) -> CheckOutcome {
    let mut t = Tally::default();
    let res = (|| {
        let ks = holling4_kappa_star(1e-12)?;
        t.check("κ* > 4", ks > 4.0, format!("κ* = {ks:.15}"));
        let coarse = holling4_kappa_star(1e-10)?;
        t.check("stable across tol to 1e-8", (coarse - ks).abs() <= 1e-8, format!("|Δ| = {:.2e}", (coarse - ks).abs()));
        let mut worst: f64 = 0.0;
        for (r, m) in [(4.0, 2.0), (0.3, 7.0), (25.0, 0.1)] {
            worst = worst.max((holling4_kappa_star_scaled(1e-12, r, m)? - ks).abs());
        }
        t.check("independent of (r, m) to 1e-8", worst <= 1e-8, format!("max |Δ| = {worst:.2e}"));
        t.check(
            "matches frozen value to 1e-8",
            (ks - KAPPA_STAR_GOLDEN).abs() <= 1e-8,
            format!("{ks:.15} vs {KAPPA_STAR_GOLDEN}"),
        );

        let (report, search) = cycles(&examples::holling4_at_kappa(1.2 * ks), 1e-2)?;
        t.check(
            "κ = 1.2κ*, ε = 1e-2: exactly 2 cycles",
            search.cycles.len() == 2 && search.failures.is_empty(),
            format!("verdict {}, {} cycles, {} failures", report.verdict, search.cycles.len(), search.failures.len()),
        );
        let low = 3.5f64.max(0.8 * ks);
        let spec = examples::holling4_at_kappa(low);
        let (report, search) = cycles(&spec, 1e-2)?;
        t.check(
            "κ = max(3.5, 0.8κ*), ε = 1e-2: 0 cycles",
            report.roots.is_empty() && search.cycles.is_empty(),
            format!("κ = {low:.6}, verdict {}, {} roots", report.verdict, report.roots.len()),
        );
        let it = probe_equilibrium_attraction(&spec, 1e-2, &SimOptions::with_tol(SIM_TOL))?;
        let x_star = search.equilibrium.x_star;
        let k = spec.k();
        let last = *it.last().expect("probe returns its start");
        t.check(
            "return-map iterates fall to x*",
            it.windows(2).all(|w| w[1] < w[0]) && (last - x_star).abs() < 1e-3 * k,
            format!("{} iterates, last {last:.6} vs x* = {x_star:.6}", it.len()),
        );
        Ok(())
    })();
    t.finish("kappa_star", res)
}

fn holling2_cycle(eps: f64) -> Result<(AnalysisReport, crate::full_sim::CycleResult, FastOrbit)> {
    let spec = examples::holling2();
    let (report, mut search) = cycles(&spec, eps)?;
    if search.cycles.len() != 1 {
        return Err(Error::NonConvergence(format!(
            "expected one Holling II cycle at ε = {eps}, found {}",
            search.cycles.len()
        )));
    }
    let root = report.roots[0].x0;
    let orbit = integrate_fast_orbit(&spec, root, FAST_TOL)?;
    Ok((report, search.cycles.remove(0), orbit))
}

fn period_law(_: &VerifyOptions) -> CheckOutcome {
    let mut t = Tally::default();
    let res = (|| {
        let mut errs = Vec::new();
        for (eps, bound) in [(1e-2, 0.10), (1e-3, 0.05)] {
            let (_, cyc, orbit) = holling2_cycle(eps)?;
            let e = (eps * cyc.period / orbit.period_coefficient() - 1.0).abs();
            t.check(format!("ε = {eps:e}: |εT/log(yω/yα) - 1| ≤ {bound}"), e <= bound, format!("{e:.5}"));
            errs.push(e);
        }
        t.check("error decreases from 1e-2 to 1e-3", errs[1] < errs[0], format!("{:.5} → {:.5}", errs[0], errs[1]));
        Ok(())
    })();
    t.finish("period_law", res)
}

fn cycle_location(_: &VerifyOptions) -> CheckOutcome {
    let mut t = Tally::default();
    let res = (|| {
        let k = examples::holling2().k();
        let (_, c2, _) = holling2_cycle(1e-2)?;
        let (_, c3, _) = holling2_cycle(1e-3)?;
        let g2 = (c2.x_section - c2.predicted_x0).abs();
        let g3 = (c3.x_section - c3.predicted_x0).abs();
        t.check("|xSection - x0| decreases", g3 < g2, format!("{g2:.3e} → {g3:.3e}"));
        t.check("|xSection - x0| ≤ 0.05K at ε = 1e-3", g3 <= 0.05 * k, format!("{g3:.3e}"));
        let (h2, h3) = (c2.hausdorff_to_prediction, c3.hausdorff_to_prediction);
        t.check("Hausdorff distance to Γ(x0) decreases", h3 < h2, format!("{h2:.4} → {h3:.4}"));
        Ok(())
    })();
    t.finish("cycle_location", res)
}

fn stability_agreement(opts: &VerifyOptions) -> CheckOutcome {
    let mut t = Tally::default();
    let flip = opts.lambda_sign();
    let res = (|| {
        let models = [
            ("holling2", examples::holling2()),
            ("holling4", examples::holling4()),
            ("ivlev-aK3", examples::ivlev_ak3()),
            ("log", examples::log()),
        ];
        for (name, spec) in &models {
            for eps in [1e-2, 1e-3] {
                let (report, search) = cycles(spec, eps)?;
                t.check(
                    format!("{name} ε = {eps:e}: every predicted cycle found"),
                    search.cycles.len() == report.roots.len() && !search.cycles.is_empty(),
                    format!("{} roots, {} cycles", report.roots.len(), search.cycles.len()),
                );
                for c in &search.cycles {
                    let lam = flip * c.predicted_lambda;
                    let mu = c.floquet_integral;
                    t.check(
                        format!("{name} ε = {eps:e} x0 = {:.4}: sign μ = sign λ", c.predicted_x0),
                        mu.signum() == lam.signum() && mu != 0.0,
                        format!("μ = {mu:.5}, λ = {lam:.5}"),
                    );
                    if eps == 1e-3 {
                        let r = (mu * spec.c() - lam).abs() / lam.abs();
                        t.check(
                            format!("{name} x0 = {:.4}: |μc - λ|/|λ| ≤ 0.25", c.predicted_x0),
                            r <= 0.25,
                            format!("{r:.4}"),
                        );
                    }
                }
            }
        }
        Ok(())
    })();
    t.finish("stability_agreement", res)
}

fn entry_exit(_: &VerifyOptions) -> CheckOutcome {
    let mut t = Tally::default();
    let res = (|| {
        let spec = examples::holling2();
        let report = analyze(&spec)?;
        let y_in = integrate_fast_orbit(&spec, report.roots[0].x0, FAST_TOL)?.y_omega;
        let delta = 1e-2 * spec.k();
        let target = spec.h_conjugate(y_in)?;
        let ybar = spec.ybar();
        let mut gaps = Vec::new();
        for eps in [1e-2, 1e-3] {
            let y_out = empirical_entry_exit(&spec, eps, y_in, delta, &SimOptions::with_tol(SIM_TOL))?;
            gaps.push((y_out - target).abs() / ybar);
        }
        t.check("gap ≤ 2% of ȳ at ε = 1e-3", gaps[1] <= 0.02, format!("{:.3e}", gaps[1]));
        t.check(
            "gap at ε = 1e-3 smaller than at ε = 1e-2",
            gaps[1] < gaps[0],
            format!("{:.3e} vs {:.3e} (relative to ȳ, y_in = {y_in:.10}, δ = {delta})", gaps[1], gaps[0]),
        );
        Ok(())
    })();
    t.finish("entry_exit", res)
}

fn dichotomies(_: &VerifyOptions) -> CheckOutcome {
    let mut t = Tally::default();
    let res = (|| {
        let eps = 1e-2;
        let (report, search) = cycles(&examples::holling2_a_above_k(), eps)?;
        t.check(
            "holling2 a > K: 0 roots, 0 cycles",
            report.roots.is_empty() && search.cycles.is_empty(),
            format!("verdict {}", report.verdict),
        );
        let report = analyze(&examples::ivlev_ak15())?;
        t.check(
            "ivlev aK = 1.5: globally stable equilibrium",
            report.verdict == Verdict::GloballyStableEquilibrium,
            format!("verdict {}", report.verdict),
        );
        for (name, spec) in [
            ("holling2 a < K", examples::holling2()),
            ("ivlev aK = 3", examples::ivlev_ak3()),
            ("gen-holling4 b > 1/K", examples::generalized_holling4()),
            ("log", examples::log()),
        ] {
            let (report, search) = cycles(&spec, eps)?;
            let stable = search.cycles.iter().filter(|c| c.stability == RootStability::Stable).count();
            t.check(
                format!("{name}: 1 root, 1 stable cycle"),
                report.roots.len() == 1 && search.cycles.len() == 1 && stable == 1,
                format!("verdict {}, {} cycles, {stable} stable", report.verdict, search.cycles.len()),
            );
        }
        Ok(())
    })();
    t.finish("dichotomies", res)
}

fn endpoint_ordering(t: &mut Tally, name: &str, spec: &ModelSpec, n: usize) -> Result<()> {
    let k = spec.k();
    let ybar = spec.ybar();
    let mut bad = Vec::new();
    for x0 in linspace(0.01 * k, 0.99 * k, n) {
        let o = integrate_fast_orbit(spec, x0, FAST_TOL)?;
        if !(o.y_alpha < ybar && ybar < o.y_omega) {
            bad.push(x0);
        }
    }
    t.check(format!("{name}: y_α < ȳ < y_ω on {n} points"), bad.is_empty(), format!("violations at {bad:?}"));
    Ok(())
}

fn crosscheck_residuals(t: &mut Tally, name: &str, spec: &ModelSpec, tol: f64) -> Result<()> {
    let k = spec.k();
    let (mut worst_h, mut worst_alt) = (0.0f64, 0.0f64);
    for x0 in linspace(0.05 * k, 0.95 * k, 10) {
        let o = integrate_fast_orbit(spec, x0, tol)?;
        let (rh, ra) = chi_crosscheck(&o);
        worst_h = worst_h.max(rh / (tol * (1.0 + o.chi.abs())));
        worst_alt = worst_alt.max(ra / (tol * (1.0 + o.chi.abs())));
    }
    t.check(format!("{name}: residualHForm ≤ 10·tol·(1+|χ|)"), worst_h <= 10.0, format!("max ratio {worst_h:.3}"));
    t.check(
        format!("{name}: residualAltForm ≤ 1e3·tol·(1+|χ|)"),
        worst_alt <= 1e3,
        format!("max ratio {worst_alt:.3}"),
    );
    Ok(())
}

fn involution(t: &mut Tally, name: &str, spec: &ModelSpec) -> Result<()> {
    let ybar = spec.ybar();
    let mut worst: f64 = 0.0;
    for f in [1e-3, 0.05, 0.3, 0.9, 0.999, 1.001, 1.5, 3.0, 10.0, 50.0] {
        let y = f * ybar;
        let back = spec.h_conjugate(spec.h_conjugate(y)?)?;
        worst = worst.max((back - y).abs() / y);
    }
    t.check(format!("{name}: H_conjugate involution ≤ 1e-10"), worst <= 1e-10, format!("max rel {worst:.2e}"));
    Ok(())
}

fn one_hump_shape(t: &mut Tally, name: &str, spec: &ModelSpec, x_hat: f64) -> Result<()> {
    let k = spec.k();
    let xs = linspace(x_hat + 0.02 * (k - x_hat), k - 0.02 * (k - x_hat), 15);
    let orbits: Vec<FastOrbit> = xs.iter().map(|&x| integrate_fast_orbit(spec, x, FAST_TOL)).collect::<Result<_>>()?;
    let nested = orbits.windows(2).all(|w| w[1].y_alpha < w[0].y_alpha && w[1].y_omega > w[0].y_omega);
    t.check(format!("{name}: nested y_α, y_ω on (x̂, K)"), nested, format!("{} orbits", orbits.len()));
    let c99 = integrate_fast_orbit(spec, 0.99 * k, FAST_TOL)?.chi;
    let c999 = integrate_fast_orbit(spec, 0.999 * k, FAST_TOL)?.chi;
    t.check(
        format!("{name}: χ(0.999K) < χ(0.99K) < 0"),
        c999 < c99 && c99 < 0.0,
        format!("{c999:.5} < {c99:.5}"),
    );
    Ok(())
}

fn structural(t: &mut Tally, name: &str, spec: &ModelSpec, report: &AnalysisReport) -> Result<()> {
    let shape = &report.shape;
    let failing: Vec<String> = report
        .consistency
        .iter()
        .filter(|n| !n.holds)
        .map(|n| format!("{}: {}", n.check, n.detail))
        .collect();
    t.check(format!("{name}: root-count bounds"), failing.is_empty(), format!("{failing:?}"));
    match shape.hump_class {
        HumpClass::OneHump => one_hump_shape(t, name, spec, shape.x_hat.expect("one-hump x̂"))?,
        HumpClass::TwoHump => {
            let x_hat = shape.x_hat.expect("two-hump x̂");
            if crate::criteria::concave_beyond_hump(spec, x_hat) {
                let k = spec.k();
                let xs = linspace(x_hat + 0.01 * (k - x_hat), k - 0.01 * (k - x_hat), 20);
                let lams: Vec<f64> =
                    xs.iter().map(|&x| Ok(integrate_fast_orbit(spec, x, FAST_TOL)?.lambda)).collect::<Result<_>>()?;
                t.check(
                    format!("{name}: λ strictly decreasing on (x̂, K)"),
                    lams.windows(2).all(|w| w[1] < w[0]),
                    format!("λ from {:.4} to {:.4}", lams[0], lams[19]),
                );
            }
        }
        HumpClass::Monotone | HumpClass::Unsupported => {}
    }
    Ok(())
}

fn invariants(_: &VerifyOptions) -> CheckOutcome {
    let mut t = Tally::default();
    let res = (|| {
        for (name, spec) in examples::all() {
            endpoint_ordering(&mut t, name, &spec, 25)?;
            involution(&mut t, name, &spec)?;
            let report = analyze(&spec)?;
            structural(&mut t, name, &spec, &report)?;
        }
        crosscheck_residuals(&mut t, "holling2", &examples::holling2(), 1e-9)?;
        Ok(())
    })();
    t.finish("invariants", res)
}

fn compare_oracle(t: &mut Tally, name: &str, spec: &ModelSpec, x0: f64) -> Result<()> {
    let a = integrate_fast_orbit(spec, x0, FAST_TOL)?;
    let o = rk4_fast_orbit(spec, x0, ORACLE_STEP)?;
    let ybar = spec.ybar();
    let worst = [
        rel(a.y_alpha, o.y_alpha, 0.0),
        rel(a.y_omega, o.y_omega, 0.0),
        rel(a.chi, o.chi, ybar),
        rel(a.lambda, o.lambda, 0.0),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    t.check(
        format!("{name} x0 = {x0:.6}: adaptive vs RK4 oracle ≤ 1e-6"),
        worst <= ORACLE_REL,
        format!("max rel {worst:.2e} (χ relative to max(|χ|, ȳ))"),
    );
    Ok(())
}

fn oracle_equivalence(_: &VerifyOptions) -> CheckOutcome {
    let mut t = Tally::default();
    let res = (|| {
        for (name, spec) in [("holling2", examples::holling2()), ("holling4", examples::holling4())] {
            let report = analyze(&spec)?;
            compare_oracle(&mut t, name, &spec, 2.0)?;
            for r in &report.roots {
                compare_oracle(&mut t, name, &spec, r.x0)?;
            }
        }
        let spec = examples::holling2();
        let a = integrate_fast_orbit(&spec, 2.0, FAST_TOL)?;
        let (lam, _, _) = lambda_x_branches(&spec, 2.0, 20_000)?;
        let r = rel(a.lambda, lam, 0.0);
        t.check("holling2 x0 = 2: λ via x-branches ≤ 1e-6", r <= ORACLE_REL, format!("rel {r:.2e}"));
        Ok(())
    })();
    t.finish("oracle_equivalence", res)
}

type CheckFn = fn(&VerifyOptions) -> CheckOutcome;

/// Acceptance checks in criterion order.
pub const ACCEPTANCE_CHECKS: [(&str, CheckFn); 9] = [
    ("kappa4_identity", kappa4_identity),
    ("kappa_star", kappa_star),
    ("period_law", period_law),
    ("cycle_location", cycle_location),
    ("stability_agreement", stability_agreement),
    ("entry_exit", entry_exit),
    ("dichotomies", dichotomies),
    ("invariants", invariants),
    ("oracle_equivalence", oracle_equivalence),
];

/// Runs the acceptance checks selected by `opts.filter`.
pub fn acceptance_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    ACCEPTANCE_CHECKS
        .iter()
        .filter(|(name, _)| opts.selects(name))
        .map(|(_, f)| f(opts))
        .collect()
}

/// Names of the checks run by [`model_checks`].
pub const MODEL_CHECKS: [&str; 5] =
    ["endpoint_ordering", "chi_crosscheck", "h_conjugate_involution", "structure", "oracle_equivalence"];

/// Checks that apply to any supported model, plus `stability_agreement`
/// against the ε > 0 system when `epsilon` is given.
pub fn model_checks(spec: &ModelSpec, epsilon: Option<f64>, opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let report = analyze(spec);
    let mut run = |name: &str, f: &mut dyn FnMut(&mut Tally) -> Result<()>| {
        if opts.selects(name) {
            let mut t = Tally::default();
            let res = f(&mut t);
            out.push(t.finish(name, res));
        }
    };
    run("endpoint_ordering", &mut |t| endpoint_ordering(t, "model", spec, 25));
    run("chi_crosscheck", &mut |t| crosscheck_residuals(t, "model", spec, 1e-9));
    run("h_conjugate_involution", &mut |t| involution(t, "model", spec));
    run("structure", &mut |t| structural(t, "model", spec, report.as_ref().map_err(Clone::clone)?));
    run("oracle_equivalence", &mut |t| {
        let report = report.as_ref().map_err(Clone::clone)?;
        let mut xs: Vec<f64> = report.roots.iter().map(|r| r.x0).collect();
        xs.push(0.5 * spec.k());
        for x0 in xs {
            compare_oracle(t, "model", spec, x0)?;
        }
        Ok(())
    });
    if let Some(eps) = epsilon {
        let flip = opts.lambda_sign();
        run("stability_agreement", &mut |t| {
            let report = report.as_ref().map_err(Clone::clone)?;
            let search = find_cycles(spec, eps, report, &SimOptions::with_tol(SIM_TOL))?;
            t.check(
                "every predicted cycle found",
                search.cycles.len() == report.roots.len(),
                format!("{} roots, {} cycles", report.roots.len(), search.cycles.len()),
            );
            for c in &search.cycles {
                let lam = flip * c.predicted_lambda;
                t.check(
                    format!("x0 = {:.4}: sign μ = sign λ", c.predicted_x0),
                    c.floquet_integral.signum() == lam.signum(),
                    format!("μ = {:.5}, λ = {lam:.5}", c.floquet_integral),
                );
                if let Some(config) = report.configurations.iter().find(|g| g.x0 == c.predicted_x0) {
                    if let Some(orbit) = &c.orbit {
                        let d = hausdorff_to_config(orbit, config, SimOptions::default().u_min);
                        t.check(
                            format!("x0 = {:.4}: Hausdorff distance finite", c.predicted_x0),
                            d.is_finite(),
                            format!("{d:.4}"),
                        );
                    }
                }
            }
            Ok(())
        });
    }
    out
}
