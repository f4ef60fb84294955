//! Dormand–Prince 5(4) with dense output, on fixed-size states.
//!
//! The caller drives the integration one accepted step at a time and gets a
//! [`StepRecord`] that interpolates the solution anywhere inside the step.
//! This keeps event location (section crossings, `X = 0`, extrema) outside the
//! stepper.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Mixed error tolerance `atol_i + rtol · max(|y_i|, |y_new_i|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
}

impl<const N: usize> Tolerances<N> {
    pub fn uniform(tol: f64) -> Self {
        Tolerances { rtol: tol, atol: [tol; N] }
    }
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rcont: [[f64; N]; 5],
}

impl<const N: usize> StepRecord<N> {
    /// Dense output at `t` in `[t0, t1]` (either orientation).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let th = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        let th1 = 1.0 - th;
        let [r0, r1, r2, r3, r4] = &self.rcont;
        std::array::from_fn(|i| r0[i] + th * (r1[i] + th1 * (r2[i] + th * (r3[i] + th1 * r4[i]))))
    }

    /// Value of `t` with the midpoint of the step.
    pub fn midpoint(&self) -> (f64, [f64; N]) {
        let t = 0.5 * (self.t0 + self.t1);
        (t, self.eval(t))
    }

    /// First zero of `g` along the step, given `g(y0)` and `g(y1)` of opposite
    /// signs, located by bisection on the dense output.
    pub fn locate<G>(&self, mut g: G, ttol: f64) -> (f64, [f64; N])
    where
        G: FnMut(&[f64; N]) -> f64,
    {
        let mut a = self.t0;
        let mut b = self.t1;
        let ga = g(&self.y0);
        for _ in 0..200 {
            if (b - a).abs() <= ttol {
                break;
            }
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            let gm = g(&self.eval(m));
            if gm == 0.0 {
                return (m, self.eval(m));
            }
            if (gm > 0.0) == (ga > 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        let t = 0.5 * (a + b);
        (t, self.eval(t))
    }
}

/// Adaptive integrator state.
pub struct Dopri5<const N: usize, F> {
    f: F,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    dir: f64,
    tol: Tolerances<N>,
    pub max_step: f64,
    pub max_steps: usize,
    steps: usize,
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

impl<const N: usize, F> Dopri5<N, F>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    /// Starts at `(t0, y0)` heading towards `t_dir` (its sign only).
    pub fn new(mut f: F, t0: f64, y0: [f64; N], t_dir: f64, tol: Tolerances<N>) -> Result<Self> {
        if !finite(&y0) || !t0.is_finite() {
            return Err(Error::NonFinite { t: t0 });
        }
        let k1 = f(t0, &y0);
        if !finite(&k1) {
            return Err(Error::NonFinite { t: t0 });
        }
        let dir = if t_dir < 0.0 { -1.0 } else { 1.0 };
        let mut s = Dopri5 {
            f,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            dir,
            tol,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
            steps: 0,
        };
        s.h = s.initial_step();
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn scale(&self, a: &[f64; N], b: &[f64; N]) -> [f64; N] {
        std::array::from_fn(|i| self.tol.atol[i] + self.tol.rtol * a[i].abs().max(b[i].abs()))
    }

    fn norm(v: &[f64; N], sc: &[f64; N]) -> f64 {
        (v.iter().zip(sc).map(|(x, s)| (x / s) * (x / s)).sum::<f64>() / N as f64).sqrt()
    }

    // Hairer's starting step heuristic.
    fn initial_step(&mut self) -> f64 {
        let sc = self.scale(&self.y, &self.y);
        let d0 = Self::norm(&self.y, &sc);
        let d1 = Self::norm(&self.k1, &sc);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(self.max_step);
        let y1 = axpy(&self.y, self.dir * h0, &[(1.0, &self.k1)]);
        let f1 = (self.f)(self.t + self.dir * h0, &y1);
        if !finite(&f1) {
            return h0 * 1e-3;
        }
        let diff: [f64; N] = std::array::from_fn(|i| f1[i] - self.k1[i]);
        let d2 = Self::norm(&diff, &sc) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dm).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.max_step)
    }

    /// Advances by one accepted step, never stepping past `t_stop`.
    pub fn step(&mut self, t_stop: f64) -> Result<StepRecord<N>> {
        loop {
            if self.steps >= self.max_steps {
                return Err(Error::MaxSteps(self.max_steps));
            }
            let remaining = (t_stop - self.t) * self.dir;
            if remaining <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "integration already at t = {} (stop {t_stop})",
                    self.t
                )));
            }
            let mut h = self.h.min(self.max_step);
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            if h < 1e-14 * self.t.abs().max(1.0) && !last {
                return Err(Error::StepUnderflow {
                    t: self.t,
                    state: self.y.to_vec(),
                });
            }
            self.steps += 1;
            let hs = self.dir * h;
            let (t, y, k1) = (self.t, self.y, self.k1);
            let f = &mut self.f;
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let y6 = axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            let k6 = f(t + hs, &y6);
            let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t_new = if last { t_stop } else { t + hs };
            let k7 = f(t_new, &y_new);

            let ok = finite(&k2)
                && finite(&k3)
                && finite(&k4)
                && finite(&k5)
                && finite(&k6)
                && finite(&y_new)
                && finite(&k7);
            if !ok {
                self.h = h / 4.0;
                continue;
            }

            let errv: [f64; N] = std::array::from_fn(|i| {
                hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            });
            let sc = self.scale(&y, &y_new);
            let err = Self::norm(&errv, &sc);
            let fac = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            if err > 1.0 {
                self.h = h * fac.min(1.0);
                continue;
            }

            let mut rcont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - hs * k7[i] - bspl;
                rcont[4][i] = hs
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let rec = StepRecord {
                t0: t,
                t1: t_new,
                y0: y,
                y1: y_new,
                rcont,
            };
            self.t = t_new;
            self.y = y_new;
            self.k1 = k7;
            if !last || fac < 1.0 {
                self.h = h * fac;
            }
            return Ok(rec);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run<const N: usize, F>(f: F, y0: [f64; N], t1: f64, tol: f64) -> [f64; N]
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let mut s = Dopri5::new(f, 0.0, y0, t1, Tolerances::uniform(tol)).unwrap();
        while s.t() != t1 {
            s.step(t1).unwrap();
        }
        *s.y()
    }

    #[test]
    fn exponential_growth() {
        let y = run(|_, y: &[f64; 1]| [y[0]], [1.0], 2.0, 1e-11);
        assert!((y[0] - 2f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn backward_integration() {
        let y = run(|_, y: &[f64; 1]| [y[0]], [1.0], -3.0, 1e-11);
        assert!((y[0] - (-3f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_and_dense_output() {
        let tol = Tolerances::uniform(1e-10);
        let mut s = Dopri5::new(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 1.0, tol).unwrap();
        let mut worst: f64 = 0.0;
        while s.t() < 10.0 {
            let rec = s.step(10.0).unwrap();
            for j in 1..4 {
                let t = rec.t0 + (rec.t1 - rec.t0) * j as f64 / 4.0;
                let y = rec.eval(t);
                worst = worst.max((y[0] - t.sin()).abs());
            }
        }
        assert!(worst < 1e-8, "dense output error {worst}");
        assert!((s.y()[0] - 10f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn event_location_on_dense_output() {
        let tol = Tolerances::uniform(1e-10);
        let mut s = Dopri5::new(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 1.0, tol).unwrap();
        loop {
            let rec = s.step(10.0).unwrap();
            if rec.y0[0] > 0.0 && rec.y1[0] <= 0.0 {
                let (t, _) = rec.locate(|y| y[0], 1e-13);
                assert!((t - std::f64::consts::PI).abs() < 1e-8);
                break;
            }
        }
    }

    #[test]
    fn non_finite_stage_is_retried() {
        // blows up at t = 1; integrate to 0.9 so the first guesses overshoot
        let y = run(|_, y: &[f64; 1]| [y[0] * y[0]], [1.0], 0.9, 1e-10);
        assert!((y[0] - 10.0).abs() < 1e-6);
    }

    #[test]
    fn max_steps_is_reported() {
        let mut s = Dopri5::new(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 1.0, Tolerances::uniform(1e-12)).unwrap();
        s.max_steps = 3;
        let mut err = None;
        for _ in 0..10 {
            if let Err(e) = s.step(1e3) {
                err = Some(e);
                break;
            }
        }
        assert_eq!(err, Some(Error::MaxSteps(3)));
    }

    #[test]
    fn rejects_non_finite_start() {
        assert!(Dopri5::new(|_, y: &[f64; 1]| *y, 0.0, [f64::NAN], 1.0, Tolerances::uniform(1e-8)).is_err());
    }
}
