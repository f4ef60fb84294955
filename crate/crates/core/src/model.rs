//! Functional responses, the prey isocline `F(x) = r x (1 - x/K) / p(x)`, the
//! reference level `ȳ = F(0)`, the Lyapunov-type function `H` and the
//! classification of the isocline by its interior extrema.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{bisect, linspace, sign_changes};

/// Functional response families understood by [`ModelSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `p(x) = m x / (a + x)`
    #[serde(rename = "holling2")]
    HollingII,
    /// `p(x) = m x / (a x² + b x + 1)`, `b > -2√a`
    #[serde(rename = "gen-holling4")]
    GeneralizedHollingIV,
    /// `p(x) = m x / (a x² + 1)`
    #[serde(rename = "holling4")]
    HollingIV,
    /// `p(x) = m (1 - e^{-a x})`
    Ivlev,
    /// `p(x) = m log(1 + a x)`
    Log,
    /// user supplied `p` and `p'`
    Custom,
}

impl Family {
    /// Short name used by config files and the command line.
    pub fn key(self) -> &'static str {
        match self {
            Family::HollingII => "holling2",
            Family::GeneralizedHollingIV => "gen-holling4",
            Family::HollingIV => "holling4",
            Family::Ivlev => "ivlev",
            Family::Log => "log",
            Family::Custom => "custom",
        }
    }

    pub fn from_key(key: &str) -> Option<Family> {
        match key {
            "holling2" => Some(Family::HollingII),
            "gen-holling4" => Some(Family::GeneralizedHollingIV),
            "holling4" => Some(Family::HollingIV),
            "ivlev" => Some(Family::Ivlev),
            "log" => Some(Family::Log),
            "custom" => Some(Family::Custom),
            _ => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Flat parameter record of a model instance. `b` is only read by
/// [`Family::GeneralizedHollingIV`]; `m` and `a` are ignored by
/// [`Family::Custom`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub family: Family,
    pub r: f64,
    pub k: f64,
    pub c: f64,
    pub m: f64,
    pub a: f64,
    #[serde(default)]
    pub b: f64,
}

pub type ResponseFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user supplied response `p` together with its derivative `p'`.
#[derive(Clone)]
pub struct CustomResponse {
    pub p: ResponseFn,
    pub dp: ResponseFn,
}

impl fmt::Debug for CustomResponse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomResponse { .. }")
    }
}

/// One predator–prey instance
/// `ẋ = r x (1 - x/K) - y p(x)`, `ẏ = y (-ε + c p(x))`.
///
/// The predator death rate ε is not part of the model; it is supplied to each
/// simulation call.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    params: ModelParams,
    custom: Option<CustomResponse>,
}

/// `F`, `F'` and `F''` at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoclineValue {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and positive, got {v}"
        )))
    }
}

impl ModelSpec {
    /// Validates `params` for one of the built-in families.
    pub fn new(params: ModelParams) -> Result<ModelSpec> {
        positive("r", params.r)?;
        positive("K", params.k)?;
        positive("c", params.c)?;
        match params.family {
            Family::Custom => {
                return Err(Error::InvalidParameter(
                    "the custom family needs p and p'; use ModelSpec::custom".into(),
                ))
            }
            Family::GeneralizedHollingIV => {
                positive("m", params.m)?;
                positive("a", params.a)?;
                if !params.b.is_finite() || params.b <= -2.0 * params.a.sqrt() {
                    return Err(Error::InvalidParameter(format!(
                        "b must exceed -2√a = {}, got {}",
                        -2.0 * params.a.sqrt(),
                        params.b
                    )));
                }
            }
            Family::HollingIV => {
                positive("m", params.m)?;
                positive("a", params.a)?;
                if params.b != 0.0 {
                    return Err(Error::InvalidParameter(
                        "holling4 has no b parameter; use gen-holling4".into(),
                    ));
                }
            }
            Family::HollingII | Family::Ivlev | Family::Log => {
                positive("m", params.m)?;
                positive("a", params.a)?;
            }
        }
        Ok(ModelSpec {
            params,
            custom: None,
        })
    }

    /// A model with a user supplied response. `p` must satisfy `p(0) = 0`,
    /// `p'(0) > 0` and `p(x) > 0` for `x > 0`.
    pub fn custom(r: f64, k: f64, c: f64, response: CustomResponse) -> Result<ModelSpec> {
        positive("r", r)?;
        positive("K", k)?;
        positive("c", c)?;
        let p0 = (response.p)(0.0);
        let dp0 = (response.dp)(0.0);
        if p0 != 0.0 || !(dp0 > 0.0 && dp0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "custom response needs p(0) = 0 and p'(0) > 0, got p(0) = {p0}, p'(0) = {dp0}"
            )));
        }
        if linspace(0.0, k, 65)[1..].iter().any(|&x| !((response.p)(x) > 0.0)) {
            return Err(Error::InvalidParameter(
                "custom response must be positive on (0, K]".into(),
            ));
        }
        Ok(ModelSpec {
            params: ModelParams {
                family: Family::Custom,
                r,
                k,
                c,
                m: 0.0,
                a: 0.0,
                b: 0.0,
            },
            custom: Some(response),
        })
    }

    pub fn holling2(r: f64, k: f64, c: f64, m: f64, a: f64) -> Result<ModelSpec> {
        ModelSpec::new(ModelParams { family: Family::HollingII, r, k, c, m, a, b: 0.0 })
    }

    pub fn holling4(r: f64, k: f64, c: f64, m: f64, a: f64) -> Result<ModelSpec> {
        ModelSpec::new(ModelParams { family: Family::HollingIV, r, k, c, m, a, b: 0.0 })
    }

    pub fn generalized_holling4(r: f64, k: f64, c: f64, m: f64, a: f64, b: f64) -> Result<ModelSpec> {
        ModelSpec::new(ModelParams { family: Family::GeneralizedHollingIV, r, k, c, m, a, b })
    }

    pub fn ivlev(r: f64, k: f64, c: f64, m: f64, a: f64) -> Result<ModelSpec> {
        ModelSpec::new(ModelParams { family: Family::Ivlev, r, k, c, m, a, b: 0.0 })
    }

    pub fn log(r: f64, k: f64, c: f64, m: f64, a: f64) -> Result<ModelSpec> {
        ModelSpec::new(ModelParams { family: Family::Log, r, k, c, m, a, b: 0.0 })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn family(&self) -> Family {
        self.params.family
    }

    pub fn r(&self) -> f64 {
        self.params.r
    }

    pub fn k(&self) -> f64 {
        self.params.k
    }

    pub fn c(&self) -> f64 {
        self.params.c
    }

    /// Copy of this model with a different yield rate.
    pub fn with_c(&self, c: f64) -> Result<ModelSpec> {
        positive("c", c)?;
        let mut out = self.clone();
        out.params.c = c;
        Ok(out)
    }

    /// `(p(x), p'(x))` for `x ≥ 0`.
    pub fn response_eval(&self, x: f64) -> Result<(f64, f64)> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::Domain {
                what: "x",
                value: x,
                domain: "[0, ∞)".into(),
            });
        }
        Ok(self.response(x))
    }

    /// Unchecked response; valid on a neighbourhood of `[0, ∞)`.
    pub(crate) fn response(&self, x: f64) -> (f64, f64) {
        let ModelParams { m, a, b, .. } = self.params;
        match self.params.family {
            Family::HollingII => {
                let d = a + x;
                (m * x / d, m * a / (d * d))
            }
            Family::GeneralizedHollingIV | Family::HollingIV => {
                let d = a * x * x + b * x + 1.0;
                (m * x / d, m * (1.0 - a * x * x) / (d * d))
            }
            Family::Ivlev => (-m * (-a * x).exp_m1(), m * a * (-a * x).exp()),
            Family::Log => (m * (a * x).ln_1p(), m * a / (1.0 + a * x)),
            Family::Custom => {
                let cr = self.custom.as_ref().expect("custom family carries its response");
                ((cr.p)(x), (cr.dp)(x))
            }
        }
    }

    /// `p(x) / x`, continuously extended by `p'(0)` at `x = 0`.
    pub(crate) fn response_over_x(&self, x: f64) -> f64 {
        let ModelParams { m, a, b, .. } = self.params;
        match self.params.family {
            Family::HollingII => m / (a + x),
            Family::GeneralizedHollingIV | Family::HollingIV => m / (a * x * x + b * x + 1.0),
            Family::Ivlev => {
                if a * x < 1e-300 {
                    m * a
                } else {
                    -m * (-a * x).exp_m1() / x
                }
            }
            Family::Log => {
                if a * x < 1e-300 {
                    m * a
                } else {
                    m * (a * x).ln_1p() / x
                }
            }
            Family::Custom => {
                if x == 0.0 {
                    self.response(0.0).1
                } else {
                    self.response(x).0 / x
                }
            }
        }
    }

    /// `ȳ = F(0) = r / p'(0)`.
    pub fn ybar(&self) -> f64 {
        let ModelParams { r, m, a, .. } = self.params;
        match self.params.family {
            Family::HollingII => r * a / m,
            Family::GeneralizedHollingIV | Family::HollingIV => r / m,
            Family::Ivlev | Family::Log => r / (m * a),
            Family::Custom => r / self.response(0.0).1,
        }
    }

    /// `F(x)`, `F'(x)`, `F''(x)` for `0 ≤ x ≤ K`.
    pub fn isocline_eval(&self, x: f64) -> Result<IsoclineValue> {
        let k = self.params.k;
        if !(x >= 0.0 && x <= k) {
            return Err(Error::Domain {
                what: "x",
                value: x,
                domain: format!("[0, {k}]"),
            });
        }
        Ok(self.isocline(x))
    }

    /// `F(x)` alone; unchecked.
    pub(crate) fn isocline_f(&self, x: f64) -> f64 {
        match self.params.family {
            Family::Custom => self.custom_f(x),
            _ => self.isocline(x).f,
        }
    }

    /// Unchecked isocline; the built-in families extend smoothly past both ends
    /// of `[0, K]`, which the integrators rely on for trial stages.
    pub(crate) fn isocline(&self, x: f64) -> IsoclineValue {
        let ModelParams { r, k, m, a, b, .. } = self.params;
        match self.params.family {
            Family::HollingII => {
                poly_isocline(r / m, k, x, (a + x, 1.0, 0.0))
            }
            Family::GeneralizedHollingIV | Family::HollingIV => poly_isocline(
                r / m,
                k,
                x,
                (a * x * x + b * x + 1.0, 2.0 * a * x + b, 2.0 * a),
            ),
            Family::Ivlev => {
                let (g, dg, d2g) = bernoulli_ratio(a * x);
                ratio_isocline(r / (m * k), k, x, (g / a, dg, a * d2g))
            }
            Family::Log => {
                let (g, dg, d2g) = log_ratio(a * x);
                ratio_isocline(r / (m * k), k, x, (g / a, dg, a * d2g))
            }
            Family::Custom => self.custom_isocline(x),
        }
    }

    fn custom_f(&self, x: f64) -> f64 {
        if x == 0.0 {
            return self.ybar();
        }
        let ModelParams { r, k, .. } = self.params;
        r * x * (1.0 - x / k) / self.response(x).0
    }

    // Guarded differences: central in the interior, one-sided second order
    // when the stencil would reach x < 0.
    fn custom_isocline(&self, x: f64) -> IsoclineValue {
        let k = self.params.k;
        let f = |t: f64| self.custom_f(t);
        let h1 = 1e-6 * k;
        let h2 = 1e-4 * k;
        let df = if x - h1 >= 0.0 {
            (f(x + h1) - f(x - h1)) / (2.0 * h1)
        } else {
            (-3.0 * f(x) + 4.0 * f(x + h1) - f(x + 2.0 * h1)) / (2.0 * h1)
        };
        let d2f = if x - h2 >= 0.0 {
            (f(x + h2) - 2.0 * f(x) + f(x - h2)) / (h2 * h2)
        } else {
            (2.0 * f(x) - 5.0 * f(x + h2) + 4.0 * f(x + 2.0 * h2) - f(x + 3.0 * h2)) / (h2 * h2)
        };
        IsoclineValue { f: f(x), df, d2f }
    }

    /// `H(y) = y - ȳ - ȳ log(y/ȳ)` for `y > 0`.
    pub fn h_eval(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::Domain {
                what: "y",
                value: y,
                domain: "(0, ∞)".into(),
            });
        }
        Ok(h_value(self.ybar(), y))
    }

    /// The level on the opposite side of `ȳ` with the same value of `H`.
    pub fn h_conjugate(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Domain {
                what: "y",
                value: y,
                domain: "(0, ∞)".into(),
            });
        }
        Ok(h_conjugate_value(self.ybar(), y))
    }
}

fn poly_isocline(scale: f64, k: f64, x: f64, q: (f64, f64, f64)) -> IsoclineValue {
    let (q0, q1, q2) = q;
    let w = 1.0 - x / k;
    IsoclineValue {
        f: scale * w * q0,
        df: scale * (-q0 / k + w * q1),
        d2f: scale * (-2.0 * q1 / k + w * q2),
    }
}

/// `F = scale · (K - x) · φ(x)` with `φ, φ', φ''` given.
fn ratio_isocline(scale: f64, k: f64, x: f64, phi: (f64, f64, f64)) -> IsoclineValue {
    let (p0, p1, p2) = phi;
    let w = k - x;
    IsoclineValue {
        f: scale * w * p0,
        df: scale * (-p0 + w * p1),
        d2f: scale * (-2.0 * p1 + w * p2),
    }
}

/// Value, first and second derivative of a truncated power series.
fn series(coeffs: &[f64], z: f64) -> (f64, f64, f64) {
    (
        series_derivative(coeffs, z, 0),
        series_derivative(coeffs, z, 1),
        series_derivative(coeffs, z, 2),
    )
}

// Horner evaluation of the `order`-th derivative.
fn series_derivative(coeffs: &[f64], z: f64, order: usize) -> f64 {
    let mut acc = 0.0;
    for n in (order..coeffs.len()).rev() {
        let mut fall = 1.0;
        for j in 0..order {
            fall *= (n - j) as f64;
        }
        acc = acc * z + fall * coeffs[n];
    }
    acc
}

/// Taylor coefficients of `z / (1 - e^{-z})`.
const BERNOULLI_RATIO: [f64; 17] = [
    1.0,
    0.5,
    0.083_333_333_333_333_333,
    0.0,
    -0.001_388_888_888_888_888_9,
    0.0,
    3.306_878_306_878_306_9e-5,
    0.0,
    -8.267_195_767_195_767_2e-7,
    0.0,
    2.087_675_698_786_809_9e-8,
    0.0,
    -5.284_190_138_687_493_2e-10,
    0.0,
    1.338_253_653_068_467_9e-11,
    0.0,
    -3.389_680_296_322_582_9e-13,
];

/// Taylor coefficients of `z / log(1 + z)` (Gregory coefficients).
const GREGORY: [f64; 17] = [
    1.0,
    0.5,
    -0.083_333_333_333_333_333,
    0.041_666_666_666_666_667,
    -0.026_388_888_888_888_889,
    0.018_75,
    -0.014_269_179_894_179_894,
    0.011_367_394_179_894_180,
    -0.009_356_536_596_119_929_5,
    0.007_892_554_012_345_679_0,
    -0.006_785_849_984_634_706_9,
    0.005_924_056_412_337_662_3,
    -0.005_236_693_257_950_285_1,
    0.004_677_498_407_042_264_5,
    -0.004_214_952_239_005_472_9,
    0.003_826_899_553_211_884_4,
    -0.003_497_349_845_349_917_7,
];

/// `B(z) = z / (1 - e^{-z})` with its first two derivatives.
fn bernoulli_ratio(z: f64) -> (f64, f64, f64) {
    if z.abs() < 0.5 {
        return series(&BERNOULLI_RATIO, z);
    }
    let e = (-z).exp();
    let d = -(-z).exp_m1();
    (
        z / d,
        1.0 / d - z * e / (d * d),
        (z * e - 2.0 * e) / (d * d) + 2.0 * z * e * e / (d * d * d),
    )
}

/// `L(z) = z / log(1 + z)` with its first two derivatives.
fn log_ratio(z: f64) -> (f64, f64, f64) {
    if z.abs() < 0.05 {
        return series(&GREGORY, z);
    }
    let l = z.ln_1p();
    let u = 1.0 + z;
    (
        z / l,
        1.0 / l - z / (u * l * l),
        -1.0 / (u * l * l) - 1.0 / (u * u * l * l) + 2.0 * z / (u * u * l * l * l),
    )
}

/// `H(y)` for a given `ȳ`, evaluated without cancellation near `y = ȳ`.
/// Below `ȳ/2` the logarithm is taken of `y/ȳ` directly, because `y/ȳ - 1`
/// rounds to `-1` for tiny `y`.
pub fn h_value(ybar: f64, y: f64) -> f64 {
    let ratio = y / ybar;
    if ratio < 0.5 {
        return ybar * (ratio - 1.0 - ratio.ln());
    }
    let d = ratio - 1.0;
    ybar * (d - d.ln_1p())
}

/// `ȳ (e^v - 1 - v)`: `H` in logarithmic coordinates `y = ȳ e^v`.
fn h_log(ybar: f64, v: f64) -> f64 {
    ybar * (v.exp_m1() - v)
}

/// Unique `y'` on the other side of `ȳ` with `H(y') = H(y)`; bisection in
/// `log(y/ȳ)` so that exponentially small partners keep full relative accuracy.
pub fn h_conjugate_value(ybar: f64, y: f64) -> f64 {
    if y == ybar {
        return ybar;
    }
    let target = h_value(ybar, y);
    // The partner lies at v < 0 when y > ȳ and at v > 0 otherwise.
    let sign = if y > ybar { -1.0 } else { 1.0 };
    let mut near = 0.0_f64;
    let mut far = sign;
    while h_log(ybar, far) < target {
        near = far;
        far *= 2.0;
        if far.abs() > 1e6 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (near + far);
        if (far - near).abs() <= 1e-15 * mid.abs().max(1e-300) || mid == near || mid == far {
            break;
        }
        if h_log(ybar, mid) < target {
            near = mid;
        } else {
            far = mid;
        }
    }
    ybar * (0.5 * (near + far)).exp()
}

/// Interior-extremum classes of the prey isocline on `(0, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HumpClass {
    /// no interior extremum
    Monotone,
    /// a single interior maximum x̂
    OneHump,
    /// an interior minimum x̌ followed by a maximum x̂
    TwoHump,
    /// any other pattern
    Unsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub x: f64,
    pub kind: ExtremumKind,
}

/// Shape of the prey isocline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoclineShape {
    pub hump_class: HumpClass,
    /// interior local maximum x̂
    pub x_hat: Option<f64>,
    /// interior local minimum x̌ (two-hump only)
    pub x_check: Option<f64>,
    /// smallest `x > 0` with `F(x) = F(0)`
    pub x_bar: Option<f64>,
    /// point of `(x̂, K)` with `F(x̃) = F(x̌)` (two-hump only)
    pub x_tilde: Option<f64>,
    pub f_prime_at_zero: f64,
    /// all interior extrema found, in increasing order
    pub extrema: Vec<Extremum>,
    pub notes: Vec<String>,
}

impl IsoclineShape {
    pub fn is_boundary_degenerate(&self) -> bool {
        self.notes.iter().any(|n| n.starts_with("boundary-degenerate"))
    }
}

pub const DEFAULT_CLASSIFY_GRID: usize = 400;

/// Locates the interior extrema of `F` by sign changes of `F'` on a uniform
/// grid over `(δK, K - δK)`, `δ = 10⁻⁶`, each refined by bisection to `tol·K`.
pub fn classify_isocline(spec: &ModelSpec, grid_n: usize, tol: f64) -> Result<IsoclineShape> {
    if grid_n < 100 {
        return Err(Error::InvalidParameter(format!(
            "classification grid needs at least 100 points, got {grid_n}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let k = spec.k();
    let delta = 1e-6;
    let grid = linspace(delta * k, k - delta * k, grid_n);
    let dfs: Vec<f64> = grid.iter().map(|&x| spec.isocline(x).df).collect();
    let mut notes = Vec::new();

    let mut extrema = Vec::new();
    for i in sign_changes(&dfs) {
        let x = bisect(|x| spec.isocline(x).df, grid[i], grid[i + 1], tol * k)?;
        let kind = if dfs[i] > 0.0 { ExtremumKind::Max } else { ExtremumKind::Min };
        extrema.push(Extremum { x, kind });
    }

    // Refinement splitting: every cell is resampled; more sign changes than the
    // coarse grid saw means extrema closer than one cell.
    for (i, w) in grid.windows(2).enumerate() {
        let sub = linspace(w[0], w[1], 9);
        let sub_df: Vec<f64> = sub.iter().map(|&x| spec.isocline(x).df).collect();
        let fine = sign_changes(&sub_df).len();
        let coarse = usize::from(dfs[i] * dfs[i + 1] < 0.0);
        if fine > coarse {
            notes.push(format!(
                "grid resolution: {fine} extrema inside cell [{}, {}]; increase grid_n",
                w[0], w[1]
            ));
        }
    }

    let f0 = spec.ybar();
    let fp0 = spec.isocline(0.0).df;
    if fp0.abs() <= 1e-10 * (f0 / k).max(f64::MIN_POSITIVE) {
        notes.push(format!(
            "boundary-degenerate: F'(0) = {fp0:e} vanishes; classified from the open interval"
        ));
    }

    let kinds: Vec<ExtremumKind> = extrema.iter().map(|e| e.kind).collect();
    let hump_class = match kinds.as_slice() {
        [] => HumpClass::Monotone,
        [ExtremumKind::Max] => HumpClass::OneHump,
        [ExtremumKind::Min, ExtremumKind::Max] => HumpClass::TwoHump,
        _ => HumpClass::Unsupported,
    };

    let level = |target: f64, lo: f64, hi: f64| -> Option<f64> {
        let g = |x: f64| spec.isocline_f(x) - target;
        if g(lo) * g(hi) < 0.0 {
            bisect(g, lo, hi, tol * k).ok()
        } else {
            None
        }
    };

    let (x_hat, x_check, x_bar, x_tilde) = match hump_class {
        HumpClass::OneHump => {
            let xh = extrema[0].x;
            (Some(xh), None, level(f0, xh, k), None)
        }
        HumpClass::TwoHump => {
            let (xc, xh) = (extrema[0].x, extrema[1].x);
            let xt = level(spec.isocline_f(xc), xh, k);
            (Some(xh), Some(xc), level(f0, xc, xh), xt)
        }
        _ => (None, None, None, None),
    };

    Ok(IsoclineShape {
        hump_class,
        x_hat,
        x_check,
        x_bar,
        x_tilde,
        f_prime_at_zero: fp0,
        extrema,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    fn h2() -> ModelSpec {
        ModelSpec::holling2(2.0, 3.0, 0.5, 1.5, 1.0).unwrap()
    }

    fn all_builtin() -> Vec<ModelSpec> {
        vec![
            h2(),
            ModelSpec::holling2(2.0, 1.0, 0.5, 1.5, 3.0).unwrap(),
            ModelSpec::holling4(4.0, 3.0, 0.1, 2.0, 0.75).unwrap(),
            ModelSpec::generalized_holling4(1.0, 2.0, 0.5, 1.0, 1.0, 1.0).unwrap(),
            ModelSpec::generalized_holling4(1.0, 2.0, 0.5, 1.0, 1.0, -1.5).unwrap(),
            ModelSpec::ivlev(1.0, 3.0, 0.5, 1.0, 1.0).unwrap(),
            ModelSpec::ivlev(1.0, 3.0, 0.5, 1.0, 0.5).unwrap(),
            ModelSpec::log(1.0, 1.0, 0.5, 1.0, 5.0).unwrap(),
        ]
    }

    #[test]
    fn holling2_response_values() {
        let s = ModelSpec::holling2(1.0, 3.0, 0.5, 1.5, 1.0).unwrap();
        let (p, dp) = s.response_eval(1.0).unwrap();
        assert!(close(p, 0.75, 1e-15));
        assert!(close(dp, 0.375, 1e-15));
    }

    #[test]
    fn every_family_vanishes_at_zero() {
        for s in all_builtin() {
            assert_eq!(s.response_eval(0.0).unwrap().0, 0.0, "{:?}", s.family());
        }
    }

    #[test]
    fn ivlev_slope_at_zero() {
        let s = ModelSpec::ivlev(1.0, 3.0, 0.5, 1.0, 1.0).unwrap();
        assert!(close(s.response_eval(0.0).unwrap().1, 1.0, 1e-15));
    }

    #[test]
    fn negative_prey_is_rejected() {
        assert!(h2().response_eval(-1e-3).is_err());
        assert!(h2().isocline_eval(3.5).is_err());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(ModelSpec::holling2(2.0, 3.0, 0.5, -1.0, 1.0).is_err());
        assert!(ModelSpec::holling2(2.0, 0.0, 0.5, 1.0, 1.0).is_err());
        assert!(ModelSpec::generalized_holling4(1.0, 2.0, 0.5, 1.0, 1.0, -2.0).is_err());
        assert!(ModelSpec::generalized_holling4(1.0, 2.0, 0.5, 1.0, 1.0, -1.99).is_ok());
        assert!(ModelSpec::new(ModelParams {
            family: Family::HollingIV,
            r: 1.0,
            k: 1.0,
            c: 1.0,
            m: 1.0,
            a: 1.0,
            b: 0.3
        })
        .is_err());
    }

    #[test]
    fn holling2_isocline_closed_form() {
        let s = h2();
        let v = s.isocline_eval(1.0).unwrap();
        assert!(close(v.f, 16.0 / 9.0, 1e-15));
        for x in linspace(0.0, 3.0, 31) {
            let expect = (4.0 / 3.0) * (1.0 - x / 3.0) * (1.0 + x);
            assert!(close(s.isocline_eval(x).unwrap().f, expect, 1e-14));
        }
    }

    #[test]
    fn holling4_isocline_closed_form() {
        let s = ModelSpec::holling4(4.0, 3.0, 0.1, 2.0, 0.75).unwrap();
        assert!(close(s.isocline_eval(0.0).unwrap().f, 2.0, 1e-15));
        for x in linspace(0.0, 3.0, 31) {
            let expect = 2.0 * (1.0 - x / 3.0) * (0.75 * x * x + 1.0);
            assert!(close(s.isocline_eval(x).unwrap().f, expect, 1e-14));
        }
    }

    #[test]
    fn isocline_vanishes_at_k() {
        for s in all_builtin() {
            assert!(s.isocline_eval(s.k()).unwrap().f.abs() < 1e-14, "{:?}", s.family());
        }
    }

    #[test]
    fn ybar_per_family() {
        assert!(close(h2().ybar(), 4.0 / 3.0, 1e-15));
        assert!(close(ModelSpec::holling4(4.0, 3.0, 0.1, 2.0, 0.75).unwrap().ybar(), 2.0, 1e-15));
        assert!(close(ModelSpec::log(1.0, 1.0, 0.5, 1.0, 1.0).unwrap().ybar(), 1.0, 1e-15));
        for s in all_builtin() {
            assert!(close(s.isocline(0.0).f, s.ybar(), 1e-14), "{:?}", s.family());
        }
    }

    #[test]
    fn ratio_families_continuous_at_zero() {
        for s in [
            ModelSpec::ivlev(1.0, 3.0, 0.5, 1.0, 1.0).unwrap(),
            ModelSpec::log(1.0, 1.0, 0.5, 1.0, 5.0).unwrap(),
        ] {
            let (p, _) = s.response(1e-7);
            let direct = s.r() * 1e-7 * (1.0 - 1e-7 / s.k()) / p;
            assert!(close(s.isocline(1e-7).f, direct, 1e-9));
            // both sides of the series switch agree
            let a = s.params().a;
            for z in [0.05, 0.5] {
                let lo = s.isocline(z / a * (1.0 - 1e-12));
                let hi = s.isocline(z / a * (1.0 + 1e-12));
                assert!(close(lo.df, hi.df, 1e-10));
                assert!(close(lo.d2f, hi.d2f, 1e-8));
            }
        }
    }

    #[test]
    fn ivlev_f_prime_at_zero_closed_form() {
        // F'(0) = r (K a - 2) / (2 K m a)
        for (a, k) in [(1.0, 3.0), (0.5, 3.0), (1.0, 1.9), (1.0, 2.1)] {
            let s = ModelSpec::ivlev(1.3, k, 0.5, 0.7, a).unwrap();
            let expect = 1.3 * (k * a - 2.0) / (2.0 * k * 0.7 * a);
            assert!(close(s.isocline(0.0).df, expect, 1e-13));
        }
    }

    #[test]
    fn custom_matches_builtin() {
        let (m, a) = (1.5, 1.0);
        let custom = CustomResponse {
            p: Arc::new(move |x| m * x / (a + x)),
            dp: Arc::new(move |x| m * a / ((a + x) * (a + x))),
        };
        let s = ModelSpec::custom(2.0, 3.0, 0.5, custom).unwrap();
        let reference = h2();
        assert!(close(s.ybar(), reference.ybar(), 1e-15));
        for x in linspace(0.0, 3.0, 25) {
            let u = s.isocline(x);
            let v = reference.isocline(x);
            assert!(close(u.f, v.f, 1e-12));
            assert!((u.df - v.df).abs() < 1e-6);
            assert!((u.d2f - v.d2f).abs() < 1e-4);
        }
    }

    #[test]
    fn custom_rejects_bad_response() {
        let bad = CustomResponse {
            p: Arc::new(|x| x + 1.0),
            dp: Arc::new(|_| 1.0),
        };
        assert!(ModelSpec::custom(1.0, 1.0, 1.0, bad).is_err());
    }

    #[test]
    fn h_values() {
        let s = h2();
        assert_eq!(s.h_eval(s.ybar()).unwrap(), 0.0);
        assert!(close(h_value(1.0, 2.0), 1.0 - 2f64.ln(), 1e-15));
        assert!(s.h_eval(1e-8 * s.ybar()).unwrap() > 10.0 * s.ybar());
        assert!(s.h_eval(0.0).is_err());
        assert!(s.h_eval(-1.0).is_err());
    }

    #[test]
    fn h_conjugate_values() {
        assert_eq!(h_conjugate_value(1.0, 1.0), 1.0);
        // bisection oracle on y - 1 - log y = 1 - log 2 over (0, 1)
        let target = 1.0 - 2f64.ln();
        let oracle = bisect(|y| y - 1.0 - y.ln() - target, 1e-6, 1.0, 1e-15).unwrap();
        let got = h_conjugate_value(1.0, 2.0);
        assert!(close(got, oracle, 1e-12));
        assert!((got - 0.4064).abs() < 1e-4);
        let back = h_conjugate_value(1.0, h_conjugate_value(1.0, 3.0));
        assert!((back - 3.0).abs() < 1e-10 * 3.0);
    }

    #[test]
    fn h_conjugate_tiny_partner_keeps_relative_accuracy() {
        let y = h_conjugate_value(1.0, 60.0);
        assert!(y > 0.0 && y < 1e-20);
        assert!(close(h_log(1.0, y.ln()), h_value(1.0, 60.0), 1e-13));
        assert!(close(h_value(1.0, y), h_value(1.0, 60.0), 1e-13));
        assert!(close(h_conjugate_value(1.0, y), 60.0, 1e-12));
    }

    #[test]
    fn h_value_branches_agree_at_half() {
        let below = h_value(2.0, 1.0 - 1e-12);
        let above = h_value(2.0, 1.0 + 1e-12);
        assert!(close(below, above, 1e-10));
    }

    #[test]
    fn classify_holling2_one_hump() {
        let shape = classify_isocline(&h2(), DEFAULT_CLASSIFY_GRID, 1e-12).unwrap();
        assert_eq!(shape.hump_class, HumpClass::OneHump);
        assert!((shape.x_hat.unwrap() - 1.0).abs() < 1e-10);
        // F(x̄) = F(0): (1 - x/3)(1 + x) = 1  ⇒  x̄ = 2
        assert!((shape.x_bar.unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn classify_holling4_below_three_is_monotone() {
        // κ = a K² = 2
        let s = ModelSpec::holling4(4.0, 2f64.sqrt(), 0.1, 2.0, 1.0).unwrap();
        let shape = classify_isocline(&s, DEFAULT_CLASSIFY_GRID, 1e-12).unwrap();
        assert_eq!(shape.hump_class, HumpClass::Monotone);
        assert!(shape.x_bar.is_none());
    }

    #[test]
    fn classify_holling4_two_hump_closed_form() {
        let s = ModelSpec::holling4(4.0, 3.0, 0.1, 2.0, 0.75).unwrap();
        let kappa: f64 = 6.75;
        let root = (1.0 - 3.0 / kappa).sqrt();
        let shape = classify_isocline(&s, DEFAULT_CLASSIFY_GRID, 1e-13).unwrap();
        assert_eq!(shape.hump_class, HumpClass::TwoHump);
        assert!((shape.x_check.unwrap() - 3.0 * (1.0 - root) / 3.0).abs() < 1e-10 * 3.0);
        assert!((shape.x_hat.unwrap() - 3.0 * (1.0 + root) / 3.0).abs() < 1e-10 * 3.0);
        let xt = shape.x_tilde.unwrap();
        assert!(xt > shape.x_hat.unwrap() && xt < 3.0);
        assert!((s.isocline_f(xt) - s.isocline_f(shape.x_check.unwrap())).abs() < 1e-9);
        let xb = shape.x_bar.unwrap();
        assert!(xb > shape.x_check.unwrap() && xb < shape.x_hat.unwrap());
    }

    #[test]
    fn classify_holling4_at_three_is_not_two_hump() {
        let s = ModelSpec::holling4(4.0, 3f64.sqrt(), 0.1, 2.0, 1.0).unwrap();
        let shape = classify_isocline(&s, DEFAULT_CLASSIFY_GRID, 1e-12).unwrap();
        assert!(matches!(
            shape.hump_class,
            HumpClass::Monotone | HumpClass::Unsupported
        ));
    }

    #[test]
    fn classify_flags_boundary_degenerate() {
        // a = K makes F'(0) = 0
        let s = ModelSpec::holling2(2.0, 3.0, 0.5, 1.5, 3.0).unwrap();
        let shape = classify_isocline(&s, DEFAULT_CLASSIFY_GRID, 1e-12).unwrap();
        assert!(shape.is_boundary_degenerate());
        assert_eq!(shape.hump_class, HumpClass::Monotone);
    }

    #[test]
    fn classify_examples_with_one_hump() {
        for s in [
            ModelSpec::ivlev(1.0, 3.0, 0.5, 1.0, 1.0).unwrap(),
            ModelSpec::log(1.0, 1.0, 0.5, 1.0, 5.0).unwrap(),
            ModelSpec::generalized_holling4(1.0, 2.0, 0.5, 1.0, 1.0, 1.0).unwrap(),
        ] {
            let shape = classify_isocline(&s, DEFAULT_CLASSIFY_GRID, 1e-12).unwrap();
            assert_eq!(shape.hump_class, HumpClass::OneHump, "{:?}", s.family());
            assert!(shape.f_prime_at_zero > 0.0);
        }
        let gas = ModelSpec::ivlev(1.0, 3.0, 0.5, 1.0, 0.5).unwrap();
        let shape = classify_isocline(&gas, DEFAULT_CLASSIFY_GRID, 1e-12).unwrap();
        assert_eq!(shape.hump_class, HumpClass::Monotone);
    }

    #[test]
    fn classify_rejects_small_grid() {
        assert!(classify_isocline(&h2(), 50, 1e-12).is_err());
    }

    #[test]
    fn family_keys_round_trip() {
        for f in [
            Family::HollingII,
            Family::GeneralizedHollingIV,
            Family::HollingIV,
            Family::Ivlev,
            Family::Log,
            Family::Custom,
        ] {
            assert_eq!(Family::from_key(f.key()), Some(f));
            assert_eq!(serde_json::to_value(f).unwrap(), f.key());
        }
    }
}
