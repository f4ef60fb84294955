//! Singular fast orbits `γ(x0)`.
//!
//! With ε = 0 the predator equation is `ẏ = c y p(x)`, so `y` increases along
//! every orbit off the axis and can replace time. In `s = log y` the orbit
//! through `(x0, F(x0))` solves
//!
//! ```text
//! dX/ds = (F(X) - e^s) / c
//! ```
//!
//! and both heteroclinic limits become finite-`s` events `X = 0`. The
//! quadratures `Λ = ∫ F'(X) ds` and `C = ∫ (F(X) - ȳ) ds` are carried as extra
//! components so they share the step-size control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{h_value, ModelSpec};
use crate::ode::{Dopri5, StepRecord, Tolerances};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest `|log y|` excursion before a sweep is declared lost.
const MAX_LOG_SPAN: f64 = 800.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastOrbit {
    pub x0: f64,
    pub y_alpha: f64,
    pub y_omega: f64,
    pub ybar: f64,
    /// `H(y_ω) - H(y_α)`
    pub chi: f64,
    /// `∫ F'(X)/y dy` along the orbit
    pub lambda: f64,
    /// `∫ (F(X) - ȳ)/y dy`, an independent quadrature of `χ`
    pub chi_alt: f64,
    /// `(y, X(y))`, strictly increasing in `y`, from `(y_α, 0)` to `(y_ω, 0)`
    pub samples: Vec<(f64, f64)>,
    pub tol_used: f64,
}

impl FastOrbit {
    /// `log(y_ω / y_α)`, the leading coefficient of the period `T_ε ≈ log(y_ω/y_α)/ε`.
    pub fn period_coefficient(&self) -> f64 {
        (self.y_omega / self.y_alpha).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularConfiguration {
    pub x0: f64,
    /// `γ(x0)` as `(x, y)` from `(0, y_α)` to `(0, y_ω)`
    pub orbit_polyline: Vec<(f64, f64)>,
    /// `σ(x0)` as `(0, y)` from `y_ω` down to `y_α`
    pub slow_segment: Vec<(f64, f64)>,
    pub period_coefficient: f64,
}

impl SingularConfiguration {
    /// Closed loop `γ(x0)` followed by `σ(x0)`.
    pub fn closed_loop(&self) -> Vec<(f64, f64)> {
        let mut out = self.orbit_polyline.clone();
        out.extend(self.slow_segment.iter().skip(1));
        out
    }

    /// Largest distance between matching ends of `γ` and `σ`.
    pub fn closure_gap(&self) -> f64 {
        let d = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
        let (Some(&g0), Some(&g1)) = (self.orbit_polyline.first(), self.orbit_polyline.last()) else {
            return f64::INFINITY;
        };
        let (Some(&s0), Some(&s1)) = (self.slow_segment.first(), self.slow_segment.last()) else {
            return f64::INFINITY;
        };
        d(g1, s0).max(d(s1, g0))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if (1e-12..=1e-4).contains(&tol) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "fast-orbit tolerance must lie in [1e-12, 1e-4], got {tol}"
        )))
    }
}

struct Sweep {
    /// `(s, X)` at step ends and midpoints, in integration order, excluding the start
    points: Vec<(f64, f64)>,
    s_end: f64,
    lambda: f64,
    c_int: f64,
}

fn sweep(spec: &ModelSpec, x0: f64, s0: f64, dir: f64, tol: f64) -> Result<Sweep> {
    let c = spec.c();
    let ybar = spec.ybar();
    let rhs = |s: f64, z: &[f64; 3]| {
        let v = spec.isocline(z[0]);
        [(v.f - s.exp()) / c, v.df, v.f - ybar]
    };
    let k = spec.k();
    let tols = Tolerances { rtol: tol, atol: [tol * k, tol, tol] };
    let mut ode = Dopri5::new(rhs, s0, [x0, 0.0, 0.0], dir, tols)?;
    ode.max_step = 0.25;
    let s_stop = s0 + dir * MAX_LOG_SPAN;
    let mut points = Vec::new();
    loop {
        let rec: StepRecord<3> = ode.step(s_stop)?;
        if rec.y1[0] <= 0.0 {
            let (s_hit, z) = locate_axis(&rec, tol * k);
            let (sm, zm) = mid_of(&rec, rec.t0, s_hit);
            if (sm - rec.t0).abs() > 0.0 {
                points.push((sm, zm[0]));
            }
            points.push((s_hit, 0.0));
            return Ok(Sweep { points, s_end: s_hit, lambda: z[1], c_int: z[2] });
        }
        let (sm, zm) = rec.midpoint();
        points.push((sm, zm[0]));
        points.push((rec.t1, rec.y1[0]));
        if ode.t() == s_stop {
            return Err(Error::NonConvergence(format!(
                "orbit did not reach x = 0 within |Δ log y| = {MAX_LOG_SPAN}"
            )));
        }
    }
}

fn mid_of(rec: &StepRecord<3>, a: f64, b: f64) -> (f64, [f64; 3]) {
    let m = 0.5 * (a + b);
    (m, rec.eval(m))
}

// Bisection in s on the dense output until |X| ≤ xtol (or s is exhausted).
fn locate_axis(rec: &StepRecord<3>, xtol: f64) -> (f64, [f64; 3]) {
    let mut a = rec.t0;
    let mut b = rec.t1;
    let mut zb = rec.y1;
    if zb[0].abs() <= xtol {
        return (b, zb);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let zm = rec.eval(m);
        if zm[0] > 0.0 {
            a = m;
        } else {
            b = m;
            zb = zm;
        }
        if zm[0].abs() <= xtol {
            return (m, zm);
        }
    }
    (b, zb)
}

/// Integrates `γ(x0)` up and down from `(x0, F(x0))` to the axis.
pub fn integrate_fast_orbit(spec: &ModelSpec, x0: f64, tol: f64) -> Result<FastOrbit> {
    check_tol(tol)?;
    let k = spec.k();
    if !(x0 > 0.0 && x0 < k) {
        return Err(Error::Domain {
            what: "x0",
            value: x0,
            domain: format!("(0, {k})"),
        });
    }
    let wrap = |e: Error| Error::OrbitFailure { x0, source: Box::new(e) };
    let y0 = spec.isocline_f(x0);
    let s0 = y0.ln();
    let up = sweep(spec, x0, s0, 1.0, tol).map_err(wrap)?;
    let down = sweep(spec, x0, s0, -1.0, tol).map_err(wrap)?;

    let ybar = spec.ybar();
    let y_alpha = down.s_end.exp();
    let y_omega = up.s_end.exp();
    let chi = (y_omega - y_alpha) - ybar * (up.s_end - down.s_end);

    let mut samples = Vec::with_capacity(up.points.len() + down.points.len() + 1);
    samples.extend(down.points.iter().rev().map(|&(s, x)| (s.exp(), x)));
    samples.push((y0, x0));
    samples.extend(up.points.iter().map(|&(s, x)| (s.exp(), x)));
    // keep y strictly increasing; exp can merge neighbours near the ends
    samples.dedup_by(|b, a| b.0 <= a.0);

    Ok(FastOrbit {
        x0,
        y_alpha,
        y_omega,
        ybar,
        chi,
        lambda: up.lambda - down.lambda,
        chi_alt: up.c_int - down.c_int,
        samples,
        tol_used: tol,
    })
}

pub fn chi(spec: &ModelSpec, x0: f64, tol: f64) -> Result<f64> {
    Ok(integrate_fast_orbit(spec, x0, tol)?.chi)
}

pub fn lambda(spec: &ModelSpec, x0: f64, tol: f64) -> Result<f64> {
    Ok(integrate_fast_orbit(spec, x0, tol)?.lambda)
}

/// `Γ(x0) = γ(x0) ∪ σ(x0)`.
pub fn singular_configuration(spec: &ModelSpec, x0: f64, tol: f64) -> Result<SingularConfiguration> {
    Ok(configuration_of(&integrate_fast_orbit(spec, x0, tol)?))
}

pub fn configuration_of(orbit: &FastOrbit) -> SingularConfiguration {
    let orbit_polyline: Vec<(f64, f64)> = orbit.samples.iter().map(|&(y, x)| (x, y)).collect();
    let (ya, yw) = (orbit.y_alpha, orbit.y_omega);
    let n = 64;
    let slow_segment = (0..=n)
        .map(|i| {
            let y = match i {
                0 => yw,
                _ if i == n => ya,
                _ => (yw.ln() + (ya.ln() - yw.ln()) * i as f64 / n as f64).exp(),
            };
            (0.0, y)
        })
        .collect();
    SingularConfiguration {
        x0: orbit.x0,
        orbit_polyline,
        slow_segment,
        period_coefficient: orbit.period_coefficient(),
    }
}

/// `(|χ - (H(y_ω) - H(y_α))|, |χ - C(y_ω)|)`.
pub fn chi_crosscheck(orbit: &FastOrbit) -> (f64, f64) {
    let h_form = h_value(orbit.ybar, orbit.y_omega) - h_value(orbit.ybar, orbit.y_alpha);
    ((orbit.chi - h_form).abs(), (orbit.chi - orbit.chi_alt).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h2() -> ModelSpec {
        ModelSpec::holling2(2.0, 3.0, 0.5, 1.5, 1.0).unwrap()
    }

    #[test]
    fn golden_holling2_at_two() {
        let o = integrate_fast_orbit(&h2(), 2.0, 1e-11).unwrap();
        assert!((o.y_alpha - 0.384_509_533_0).abs() < 1e-8);
        assert!((o.y_omega - 4.078_910_664_8).abs() < 1e-8);
        assert!((o.chi - 0.545_578_923_96).abs() < 1e-8);
        assert!((o.lambda + 0.696_943_573_90).abs() < 1e-8);
    }

    #[test]
    fn start_sample_is_exact() {
        let s = h2();
        let o = integrate_fast_orbit(&s, 2.0, 1e-9).unwrap();
        assert!(o.samples.contains(&(s.isocline_f(2.0), 2.0)));
        assert_eq!(o.samples.first().unwrap().1, 0.0);
        assert_eq!(o.samples.last().unwrap().1, 0.0);
        assert!(o.samples.windows(2).all(|w| w[1].0 > w[0].0));
        assert!(o.samples[1..o.samples.len() - 1].iter().all(|p| p.1 > 0.0));
    }

    #[test]
    fn chi_sign_near_zero_and_near_k() {
        let s = h2();
        assert!(chi(&s, 0.05, 1e-10).unwrap() > 0.0);
        let far = chi(&s, 0.999 * 3.0, 1e-10).unwrap();
        let near = chi(&s, 0.99 * 3.0, 1e-10).unwrap();
        assert!(far < near && near < 0.0);
    }

    #[test]
    fn near_k_endpoints() {
        let s = h2();
        let o = integrate_fast_orbit(&s, 0.999 * 3.0, 1e-9).unwrap();
        assert!(o.y_alpha < 1e-2 * s.ybar());
        assert!(o.y_omega.is_finite() && o.y_omega < 10.0);
    }

    #[test]
    fn tiny_orbit_degenerates() {
        let s = h2();
        let o = integrate_fast_orbit(&s, 1e-4 * 3.0, 1e-10).unwrap();
        let bigger = integrate_fast_orbit(&s, 1e-2 * 3.0, 1e-10).unwrap();
        assert!(o.chi.abs() < 1e-4 && o.chi.abs() < 1e-2 * bigger.chi.abs());
        let (r1, r2) = chi_crosscheck(&o);
        assert!(r1 < 1e-9 && r2 < 1e-8);
    }

    #[test]
    fn crosscheck_residuals() {
        let tol = 1e-9;
        let o = integrate_fast_orbit(&h2(), 2.441_958_835_6, tol).unwrap();
        let (r1, r2) = chi_crosscheck(&o);
        assert!(r1 <= 10.0 * tol * (1.0 + o.chi.abs()));
        assert!(r2 <= 1e3 * tol * (1.0 + o.chi.abs()));
    }

    #[test]
    fn configuration_closes() {
        let cfg = singular_configuration(&h2(), 2.0, 1e-9).unwrap();
        assert_eq!(cfg.closure_gap(), 0.0);
        assert!(cfg.period_coefficient > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = h2();
        assert!(integrate_fast_orbit(&s, 0.0, 1e-9).is_err());
        assert!(integrate_fast_orbit(&s, 3.0, 1e-9).is_err());
        assert!(integrate_fast_orbit(&s, 1.0, 1e-3).is_err());
        assert!(integrate_fast_orbit(&s, 1.0, 1e-13).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn endpoints_bracket_ybar(frac in 0.01f64..0.99) {
            let s = h2();
            let o = integrate_fast_orbit(&s, frac * 3.0, 1e-9).unwrap();
            prop_assert!(o.y_alpha < s.ybar() && s.ybar() < o.y_omega);
        }

        #[test]
        fn orbits_nest_beyond_the_hump(lo in 1.05f64..2.9, gap in 0.01f64..0.5) {
            let hi = (lo + gap).min(2.97);
            prop_assume!(hi > lo + 1e-3);
            let s = h2();
            let a = integrate_fast_orbit(&s, lo, 1e-9).unwrap();
            let b = integrate_fast_orbit(&s, hi, 1e-9).unwrap();
            prop_assert!(b.y_alpha < a.y_alpha && b.y_omega > a.y_omega);
        }
    }
}
