//! The full system for ε > 0, integrated in `(u, y) = (log x, y)`:
//!
//! ```text
//! u' = r (1 - x/K) - y p(x)/x,    y' = y (-ε + c p(x)),    x = e^u
//! ```
//!
//! The prey axis is unreachable in these coordinates, and the exponentially
//! small prey densities along relaxation cycles stay representable as
//! moderate negative `u`. A third component accumulates the divergence of the
//! original `(x, y)` field, giving the Floquet integral over a period for free.

use serde::{Deserialize, Serialize};

use crate::criteria::{AnalysisReport, RootStability};
use crate::error::{Error, Result};
use crate::fast_orbit::SingularConfiguration;
use crate::hausdorff::hausdorff;
use crate::model::ModelSpec;
use crate::ode::{Dopri5, StepRecord, Tolerances};
use crate::roots::{bisect, linspace, sign_changes};

pub const DEFAULT_SIM_TOL: f64 = 1e-6;
pub const DEFAULT_U_MIN: f64 = -30.0;

/// Below this `u`, `e^u` is zero in double precision.
const U_UNDERFLOW: f64 = -745.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalStability {
    Stable,
    Unstable,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumInfo {
    pub x_star: f64,
    pub y_star: f64,
    pub f_prime_at_x_star: f64,
    pub f_prime_at_zero: f64,
    pub local_stability: LocalStability,
    pub notes: Vec<String>,
}

fn check_eps(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "ε must be positive (use the singular analysis for ε = 0), got {epsilon}"
        )))
    }
}

/// Smallest root of `c p(x) = ε` in `(0, K)`.
pub fn equilibrium(spec: &ModelSpec, epsilon: f64) -> Result<EquilibriumInfo> {
    check_eps(epsilon)?;
    let k = spec.k();
    let c = spec.c();
    let g = |x: f64| c * spec.response(x).0 - epsilon;
    let grid = linspace(0.0, k, 4001);
    let vals: Vec<f64> = grid.iter().map(|&x| g(x)).collect();
    let changes = sign_changes(&vals);
    let Some(&first) = changes.first() else {
        return Err(Error::NoEquilibrium);
    };
    let x_star = bisect(g, grid[first], grid[first + 1], 1e-15 * k)?;
    let v = spec.isocline(x_star);
    let mut notes = Vec::new();
    if changes.len() > 1 {
        notes.push(format!(
            "c·p(x) = ε has {} solutions in (0, K); the smallest is used",
            changes.len()
        ));
    }
    let local_stability = if v.df < 0.0 {
        LocalStability::Stable
    } else if v.df > 0.0 {
        LocalStability::Unstable
    } else {
        LocalStability::Degenerate
    };
    Ok(EquilibriumInfo {
        x_star,
        y_star: v.f,
        f_prime_at_x_star: v.df,
        f_prime_at_zero: spec.isocline(0.0).df,
        local_stability,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub u: f64,
    pub y: f64,
    /// running integral of the divergence
    pub mu: f64,
}

impl TrajectorySample {
    pub fn x(&self) -> f64 {
        self.u.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// crossing of `y = F(x)` from below: a local prey maximum
    PreyMax,
    /// crossing of `y = F(x)` from above: a local prey minimum
    PreyMin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEvent {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    TimeLimit,
    SectionReturn,
    EntryExit,
}

/// Samples alternate between step midpoints and step ends, starting and
/// ending on a step end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub epsilon: f64,
    pub samples: Vec<TrajectorySample>,
    pub events: Vec<TrajectoryEvent>,
    pub termination: Termination,
    pub notes: Vec<String>,
}

impl Trajectory {
    /// `(u, y)` polyline with `u` clipped from below at `u_min`.
    pub fn clipped_polyline(&self, u_min: f64) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.u.max(u_min), s.y)).collect()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub tol: f64,
    /// time budget; `None` means `200/ε`
    pub t_max: Option<f64>,
    pub max_steps: usize,
    /// fixed-point tolerance of the return map, relative to `K`
    pub fixed_point_tol: f64,
    pub max_iterations: usize,
    /// largest endpoint gap, relative to `K` and `ȳ`, accepted as closed
    pub close_tol: f64,
    pub u_min: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            tol: DEFAULT_SIM_TOL,
            t_max: None,
            max_steps: 2_000_000,
            fixed_point_tol: 1e-8,
            max_iterations: 60,
            close_tol: 1e-4,
            u_min: DEFAULT_U_MIN,
        }
    }
}

impl SimOptions {
    pub fn with_tol(tol: f64) -> Self {
        SimOptions { tol, ..Default::default() }
    }

    fn budget(&self, epsilon: f64) -> f64 {
        self.t_max.unwrap_or(200.0 / epsilon)
    }
}

struct System<'a> {
    spec: &'a ModelSpec,
    epsilon: f64,
}

impl System<'_> {
    fn rhs(&self, z: &[f64; 3]) -> [f64; 3] {
        let s = self.spec;
        let (r, k, c) = (s.r(), s.k(), s.c());
        let x = z[0].exp();
        let y = z[1];
        let (p, dp) = s.response(x);
        let du = r * (1.0 - x / k) - y * s.response_over_x(x);
        let dy = y * (-self.epsilon + c * p);
        let div = r * (1.0 - 2.0 * x / k) - y * dp - self.epsilon + c * p;
        [du, dy, div]
    }

    /// `y - F(x)`; positive above the prey isocline.
    fn isocline_gap(&self, z: &[f64; 3]) -> f64 {
        z[1] - self.spec.isocline_f(z[0].exp())
    }
}

/// Stop rule consulted after every accepted step: return the cut point to end
/// the run there.
type StopRule<'s> = dyn FnMut(&StepRecord<3>, Option<&TrajectoryEvent>) -> Option<(f64, [f64; 3])> + 's;

fn sample(t: f64, z: &[f64; 3]) -> TrajectorySample {
    TrajectorySample { t, u: z[0], y: z[1], mu: z[2] }
}

fn run(
    spec: &ModelSpec,
    epsilon: f64,
    u0: f64,
    y0: f64,
    opts: &SimOptions,
    stop: &mut StopRule<'_>,
    on_stop: Termination,
) -> Result<Trajectory> {
    if !(opts.tol > 0.0 && opts.tol < 1e-2) {
        return Err(Error::InvalidParameter(format!("tol must lie in (0, 1e-2), got {}", opts.tol)));
    }
    let sys = System { spec, epsilon };
    let t_max = opts.budget(epsilon);
    let tols = Tolerances { rtol: opts.tol, atol: [opts.tol, opts.tol * spec.ybar(), opts.tol] };
    let mut ode = Dopri5::new(|_, z: &[f64; 3]| sys.rhs(z), 0.0, [u0, y0, 0.0], 1.0, tols)?;
    ode.max_steps = opts.max_steps;
    ode.max_step = (t_max / 200.0).max(1e-3);

    let mut traj = Trajectory {
        epsilon,
        samples: vec![sample(0.0, &[u0, y0, 0.0])],
        events: Vec::new(),
        termination: Termination::TimeLimit,
        notes: Vec::new(),
    };
    let mut extinct_noted = false;
    while ode.t() < t_max {
        let rec = ode.step(t_max)?;
        if rec.y1[1] <= 0.0 {
            return Err(Error::NonFinite { t: rec.t1 });
        }
        if !extinct_noted && rec.y1[0] < U_UNDERFLOW {
            traj.notes.push(format!(
                "prey numerically extinct: x = e^u underflows (u = {:.1} at t = {:.6e})",
                rec.y1[0], rec.t1
            ));
            extinct_noted = true;
        }
        let g0 = sys.isocline_gap(&rec.y0);
        let g1 = sys.isocline_gap(&rec.y1);
        let event = if (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0) {
            let (t, z) = rec.locate(|z| sys.isocline_gap(z), 0.0);
            Some(TrajectoryEvent {
                t,
                x: z[0].exp(),
                y: z[1],
                kind: if g0 < 0.0 { EventKind::PreyMax } else { EventKind::PreyMin },
            })
        } else {
            None
        };
        if let Some(ev) = event {
            traj.events.push(ev);
        }
        if let Some((t_cut, z_cut)) = stop(&rec, event.as_ref()) {
            let tm = 0.5 * (rec.t0 + t_cut);
            traj.samples.push(sample(tm, &rec.eval(tm)));
            traj.samples.push(sample(t_cut, &z_cut));
            traj.termination = on_stop;
            return Ok(traj);
        }
        let (tm, zm) = rec.midpoint();
        traj.samples.push(sample(tm, &zm));
        traj.samples.push(sample(rec.t1, &rec.y1));
    }
    Ok(traj)
}

fn check_start(spec: &ModelSpec, x0: f64, y0: f64) -> Result<()> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::Domain { what: "x0", value: x0, domain: "(0, ∞)".into() });
    }
    if !(y0 > 0.0 && y0.is_finite()) {
        return Err(Error::Domain { what: "y0", value: y0, domain: "(0, ∞)".into() });
    }
    let _ = spec;
    Ok(())
}

/// Forward trajectory from `(x0, y0)` up to `t_max`.
pub fn simulate(spec: &ModelSpec, epsilon: f64, x0: f64, y0: f64, t_max: f64, tol: f64) -> Result<Trajectory> {
    check_eps(epsilon)?;
    check_start(spec, x0, y0)?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_max must be positive, got {t_max}")));
    }
    let opts = SimOptions { tol, t_max: Some(t_max), ..Default::default() };
    run(spec, epsilon, x0.ln(), y0, &opts, &mut |_, _| None, Termination::TimeLimit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMap {
    pub x_start: f64,
    pub x_next: f64,
    pub elapsed: f64,
    /// divergence integral accumulated by the integrator
    pub mu: f64,
    pub trajectory: Trajectory,
}

/// One return to the section `{ y = F(x), x > x* }`, crossed from below.
/// The start counts only once the orbit has passed a prey minimum, so the
/// departure from the section itself is never taken as the return.
pub fn isocline_return_map(
    spec: &ModelSpec,
    epsilon: f64,
    x_start: f64,
    opts: &SimOptions,
) -> Result<ReturnMap> {
    let eq = equilibrium(spec, epsilon)?;
    return_map_from(spec, epsilon, &eq, x_start, opts)
}

fn return_map_from(
    spec: &ModelSpec,
    epsilon: f64,
    eq: &EquilibriumInfo,
    x_start: f64,
    opts: &SimOptions,
) -> Result<ReturnMap> {
    let k = spec.k();
    if !(x_start > eq.x_star && x_start < k) {
        return Err(Error::Domain {
            what: "x_start",
            value: x_start,
            domain: format!("({}, {k})", eq.x_star),
        });
    }
    let x_star = eq.x_star;
    let mut armed = false;
    let mut stop = |rec: &StepRecord<3>, ev: Option<&TrajectoryEvent>| {
        let ev = ev?;
        match ev.kind {
            EventKind::PreyMin => {
                armed = true;
                None
            }
            EventKind::PreyMax if armed && ev.x > x_star => Some((ev.t, rec.eval(ev.t))),
            EventKind::PreyMax => None,
        }
    };
    let y_start = spec.isocline_f(x_start);
    let traj = run(spec, epsilon, x_start.ln(), y_start, opts, &mut stop, Termination::SectionReturn)?;
    if traj.termination != Termination::SectionReturn {
        return Err(Error::NoReturn(format!(
            "escaped or converged to equilibrium: no return within t = {}",
            opts.budget(epsilon)
        )));
    }
    let last = *traj.samples.last().expect("non-empty trajectory");
    Ok(ReturnMap {
        x_start,
        x_next: last.x(),
        elapsed: last.t,
        mu: last.mu,
        trajectory: traj,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleResult {
    pub x_section: f64,
    pub period: f64,
    /// Simpson quadrature of the divergence over one period
    pub floquet_integral: f64,
    /// the same integral carried by the integrator
    pub floquet_augmented: f64,
    pub stability: RootStability,
    pub hausdorff_to_prediction: f64,
    pub epsilon: f64,
    pub predicted_x0: f64,
    pub predicted_lambda: f64,
    pub iterations: usize,
    #[serde(skip)]
    pub orbit: Option<Trajectory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleFailure {
    pub predicted_x0: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSearch {
    pub epsilon: f64,
    pub equilibrium: EquilibriumInfo,
    pub cycles: Vec<CycleResult>,
    pub failures: Vec<CycleFailure>,
}

/// Quadrature of the divergence `p'(x)(F(x) - y) + p(x)F'(x) - ε + c p(x)`
/// along a closed trajectory, composite Simpson on (end, mid, end) triples.
pub fn floquet_integral(spec: &ModelSpec, epsilon: f64, cycle: &Trajectory, close_tol: f64) -> Result<f64> {
    let s = &cycle.samples;
    if s.len() < 3 || cycle.duration() <= 0.0 {
        return Err(Error::InvalidParameter("zero-length cycle".into()));
    }
    let (a, b) = (s[0], s[s.len() - 1]);
    let gap = ((a.x() - b.x()).abs() / spec.k()).max((a.y - b.y).abs() / spec.ybar());
    if gap > close_tol {
        return Err(Error::OpenCurve { gap, tol: close_tol });
    }
    let c = spec.c();
    let div = |p: &TrajectorySample| {
        let x = p.x();
        let (pv, dp) = spec.response(x);
        let v = spec.isocline(x);
        dp * (v.f - p.y) + pv * v.df - epsilon + c * pv
    };
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < s.len() {
        let (p0, p1, p2) = (&s[i], &s[i + 1], &s[i + 2]);
        total += simpson3(p0.t, p1.t, p2.t, div(p0), div(p1), div(p2));
        i += 2;
    }
    if i + 1 < s.len() {
        let (p0, p1) = (&s[i], &s[i + 1]);
        total += 0.5 * (p1.t - p0.t) * (div(p0) + div(p1));
    }
    Ok(total)
}

// Quadratic-interpolation quadrature on three points with arbitrary middle.
fn simpson3(t0: f64, t1: f64, t2: f64, f0: f64, f1: f64, f2: f64) -> f64 {
    let h0 = t1 - t0;
    let h1 = t2 - t1;
    let h = h0 + h1;
    if h0 <= 0.0 || h1 <= 0.0 {
        return 0.5 * h * (f0 + f2);
    }
    h / 6.0 * ((2.0 - h1 / h0) * f0 + h * h / (h0 * h1) * f1 + (2.0 - h0 / h1) * f2)
}

/// Symmetric Hausdorff distance in `(max(u, u_min), y)` between a simulated
/// cycle and `Γ(x0)`; the slow segment `x = 0` maps to the edge `u = u_min`.
pub fn hausdorff_to_config(cycle: &Trajectory, config: &SingularConfiguration, u_min: f64) -> f64 {
    let a = cycle.clipped_polyline(u_min);
    let b: Vec<(f64, f64)> = config
        .closed_loop()
        .iter()
        .map(|&(x, y)| (if x > 0.0 { x.ln().max(u_min) } else { u_min }, y))
        .collect();
    hausdorff(&a, &b)
}

fn cycle_result(
    spec: &ModelSpec,
    epsilon: f64,
    rm: ReturnMap,
    config: Option<&SingularConfiguration>,
    predicted: (f64, f64),
    iterations: usize,
    opts: &SimOptions,
) -> Result<CycleResult> {
    let mu = floquet_integral(spec, epsilon, &rm.trajectory, opts.close_tol)?;
    let hd = config.map_or(f64::NAN, |c| hausdorff_to_config(&rm.trajectory, c, opts.u_min));
    Ok(CycleResult {
        x_section: rm.x_next,
        period: rm.elapsed,
        floquet_integral: mu,
        floquet_augmented: rm.mu,
        stability: if mu < 0.0 { RootStability::Stable } else { RootStability::Unstable },
        hausdorff_to_prediction: hd,
        epsilon,
        predicted_x0: predicted.0,
        predicted_lambda: predicted.1,
        iterations,
        orbit: Some(rm.trajectory),
    })
}

/// Iterates the return map from `x` until two iterates agree to
/// `fixed_point_tol·K`.
fn iterate_to_fixed_point(
    spec: &ModelSpec,
    epsilon: f64,
    eq: &EquilibriumInfo,
    mut x: f64,
    opts: &SimOptions,
) -> Result<(ReturnMap, usize)> {
    let k = spec.k();
    for it in 1..=opts.max_iterations {
        let rm = return_map_from(spec, epsilon, eq, x, opts)?;
        if (rm.x_next - x).abs() < opts.fixed_point_tol * k {
            return Ok((rm, it));
        }
        if rm.x_next <= eq.x_star * (1.0 + 1e-6) {
            return Err(Error::NonConvergence("return map converged to the equilibrium".into()));
        }
        x = rm.x_next;
    }
    Err(Error::NonConvergence(format!(
        "return map not settled after {} iterations",
        opts.max_iterations
    )))
}

/// `sign(R(x) - x)`, with no return counted as inward.
fn displacement_sign(spec: &ModelSpec, epsilon: f64, eq: &EquilibriumInfo, x: f64, opts: &SimOptions) -> Result<f64> {
    match return_map_from(spec, epsilon, eq, x, opts) {
        Ok(rm) => Ok((rm.x_next - x).signum()),
        Err(Error::NoReturn(_)) => Ok(-1.0),
        Err(e) => Err(e),
    }
}

/// Fixed point of the return map between `lo` and `hi` by bisection on the
/// sign of `R(x) - x`.
fn bisect_fixed_point(
    spec: &ModelSpec,
    epsilon: f64,
    eq: &EquilibriumInfo,
    lo: f64,
    hi: f64,
    opts: &SimOptions,
) -> Result<(f64, usize)> {
    let (mut a, mut b) = (lo, hi);
    let sa = displacement_sign(spec, epsilon, eq, a, opts)?;
    let sb = displacement_sign(spec, epsilon, eq, b, opts)?;
    if sa == sb {
        return Err(Error::Bracket(format!("R(x) - x keeps its sign on [{a}, {b}]")));
    }
    let mut evaluations = 2;
    while b - a > opts.fixed_point_tol * spec.k() {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        evaluations += 1;
        if displacement_sign(spec, epsilon, eq, m, opts)? == sa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((0.5 * (a + b), evaluations))
}

/// Detects the cycles predicted by `predictions` in the ε > 0 system.
pub fn find_cycles(
    spec: &ModelSpec,
    epsilon: f64,
    predictions: &AnalysisReport,
    opts: &SimOptions,
) -> Result<CycleSearch> {
    let eq = equilibrium(spec, epsilon)?;
    let k = spec.k();
    let roots = &predictions.roots;
    let mut cycles = Vec::new();
    let mut failures = Vec::new();
    for (i, root) in roots.iter().enumerate() {
        let config = predictions.configurations.get(i);
        let predicted = (root.x0, root.lambda);
        let outcome = match root.stability {
            RootStability::Stable => {
                let start = (root.x0 * 1.05).min(root.x0 + 0.5 * (k - root.x0));
                iterate_to_fixed_point(spec, epsilon, &eq, start, opts)
                    .and_then(|(rm, it)| cycle_result(spec, epsilon, rm, config, predicted, it, opts))
            }
            RootStability::Unstable => {
                let floor = eq.x_star.max(if i > 0 { roots[i - 1].x0 } else { 0.0 });
                let ceil = roots.get(i + 1).map_or(k, |r| r.x0);
                let mut d = 0.05 * root.x0;
                let mut found = Err(Error::Bracket("no sign change of R(x) - x".into()));
                for _ in 0..4 {
                    let lo = (root.x0 - d).max(floor + 0.1 * (root.x0 - floor));
                    let hi = (root.x0 + d).min(ceil - 0.1 * (ceil - root.x0));
                    match bisect_fixed_point(spec, epsilon, &eq, lo, hi, opts) {
                        Err(Error::Bracket(m)) => {
                            found = Err(Error::Bracket(m));
                            d *= 2.0;
                        }
                        other => {
                            found = other;
                            break;
                        }
                    }
                }
                found.and_then(|(x, evals)| {
                    let rm = return_map_from(spec, epsilon, &eq, x, opts)?;
                    cycle_result(spec, epsilon, rm, config, predicted, evals, opts)
                })
            }
            RootStability::NeutralInconclusive => Err(Error::NonConvergence(
                "neutral root: no stability prediction to search with".into(),
            )),
        };
        match outcome {
            Ok(c) => cycles.push(c),
            Err(e) => failures.push(CycleFailure { predicted_x0: root.x0, reason: e.to_string() }),
        }
    }
    Ok(CycleSearch { epsilon, equilibrium: eq, cycles, failures })
}

/// Return-map iterates from `x* + 0.9 (K - x*)`, for regimes where no cycle
/// is predicted. Stops once an iterate is within `fixed_point_tol·K` of `x*`
/// or after `max_iterations`.
pub fn probe_equilibrium_attraction(spec: &ModelSpec, epsilon: f64, opts: &SimOptions) -> Result<Vec<f64>> {
    let eq = equilibrium(spec, epsilon)?;
    let k = spec.k();
    let mut x = eq.x_star + 0.9 * (k - eq.x_star);
    let mut iterates = vec![x];
    for _ in 0..opts.max_iterations {
        match return_map_from(spec, epsilon, &eq, x, opts) {
            Ok(rm) => {
                x = rm.x_next;
                iterates.push(x);
                if (x - eq.x_star).abs() < 1e-3 * k || (rm.x_next - rm.x_start).abs() < opts.fixed_point_tol * k {
                    break;
                }
            }
            Err(Error::NoReturn(_)) | Err(Error::Domain { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(iterates)
}

/// Starts at `(δ, y_in)` above the isocline, follows the orbit through the
/// slow passage near `x = 0` and returns `y` where `x` next increases
/// through `δ`.
pub fn empirical_entry_exit(
    spec: &ModelSpec,
    epsilon: f64,
    y_in: f64,
    delta: f64,
    opts: &SimOptions,
) -> Result<f64> {
    check_eps(epsilon)?;
    let ybar = spec.ybar();
    if !(y_in > ybar) {
        return Err(Error::Domain { what: "y_in", value: y_in, domain: format!("({ybar}, ∞)") });
    }
    if !(delta > 0.0 && delta < spec.k()) {
        return Err(Error::Domain { what: "delta", value: delta, domain: format!("(0, {})", spec.k()) });
    }
    if y_in <= spec.isocline_f(delta) {
        return Err(Error::InvalidParameter(format!(
            "y_in = {y_in} does not lie above the isocline at δ = {delta}"
        )));
    }
    let u_d = delta.ln();
    let mut stop = |rec: &StepRecord<3>, _: Option<&TrajectoryEvent>| {
        if rec.y0[0] < u_d && rec.y1[0] >= u_d {
            Some(rec.locate(|z| z[0] - u_d, 0.0))
        } else {
            None
        }
    };
    let traj = run(spec, epsilon, u_d, y_in, opts, &mut stop, Termination::EntryExit)?;
    if traj.termination != Termination::EntryExit {
        return Err(Error::NoReturn(format!("x did not return to δ = {delta} within the time budget")));
    }
    Ok(traj.samples.last().expect("non-empty trajectory").y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h2() -> ModelSpec {
        ModelSpec::holling2(2.0, 3.0, 0.5, 1.5, 1.0).unwrap()
    }

    #[test]
    fn holling2_equilibrium_closed_form() {
        let s = h2();
        for eps in [1e-1, 1e-2, 1e-3] {
            let eq = equilibrium(&s, eps).unwrap();
            let expect = eps * 1.0 / (0.5 * 1.5 - eps);
            assert!((eq.x_star - expect).abs() < 1e-12 * (1.0 + expect));
            assert!((eq.y_star - s.isocline_f(expect)).abs() < 1e-10);
        }
        let eq = equilibrium(&s, 1e-6).unwrap();
        assert!(eq.x_star < 1e-5 && (eq.y_star - s.ybar()).abs() < 1e-5);
        assert_eq!(eq.local_stability, LocalStability::Unstable);
    }

    #[test]
    fn holling4_equilibrium_multiplicity() {
        let s = ModelSpec::holling4(4.0, 3.0, 0.1, 2.0, 0.75).unwrap();
        let eq = equilibrium(&s, 0.01).unwrap();
        // c m x / (a x² + 1) = ε  ⇒  a ε x² - c m x + ε = 0
        let (a, cm, e): (f64, f64, f64) = (0.75, 0.2, 0.01);
        let small = (cm - (cm * cm - 4.0 * a * e * e).sqrt()) / (2.0 * a * e);
        let large = (cm + (cm * cm - 4.0 * a * e * e).sqrt()) / (2.0 * a * e);
        assert!((eq.x_star - small).abs() < 1e-12);
        // the second root lies beyond K here, so no note
        assert!(large > 3.0 && eq.notes.is_empty());
        let wide = ModelSpec::holling4(4.0, 30.0, 0.1, 2.0, 0.75).unwrap();
        let eq = equilibrium(&wide, 0.01).unwrap();
        assert_eq!(eq.notes.len(), 1);
        assert!((eq.x_star - small).abs() < 1e-12);
    }

    #[test]
    fn no_equilibrium_and_bad_eps() {
        let s = h2();
        assert_eq!(equilibrium(&s, 1.0).unwrap_err(), Error::NoEquilibrium);
        assert!(equilibrium(&s, 0.0).is_err());
        assert!(simulate(&s, 0.0, 1.0, 1.0, 10.0, 1e-6).is_err());
    }

    #[test]
    fn equilibrium_start_is_stationary() {
        let s = h2();
        let eq = equilibrium(&s, 0.01).unwrap();
        let tr = simulate(&s, 0.01, eq.x_star, eq.y_star, 1e3, 1e-8).unwrap();
        let last = tr.samples.last().unwrap();
        assert!((last.x() - eq.x_star).abs() < 1e-6 * eq.x_star.max(1e-3));
        assert!((last.y - eq.y_star).abs() < 1e-6);
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn prey_grows_off_the_axis() {
        let s = h2();
        let tr = simulate(&s, 0.01, 1e-6, s.ybar() / 2.0, 200.0, 1e-8).unwrap();
        let mut prev = 0.0;
        for p in &tr.samples {
            let x = p.x();
            if x > 1e-3 {
                break;
            }
            assert!(x >= prev);
            prev = x;
        }
        assert!(tr.samples.iter().any(|p| p.x() > 1e-3));
    }

    #[test]
    fn return_map_contracts_from_near_k() {
        let s = h2();
        let opts = SimOptions::with_tol(1e-8);
        let rm = isocline_return_map(&s, 0.01, 2.95, &opts).unwrap();
        assert!(rm.x_next < 2.95);
        assert!(rm.elapsed > 0.0);
    }

    #[test]
    fn simpson3_is_exact_on_quadratics() {
        let f = |t: f64| 3.0 * t * t - t + 2.0;
        let (a, m, b) = (0.2, 0.5, 1.3);
        let exact = (b * b * b - b * b / 2.0 + 2.0 * b) - (a * a * a - a * a / 2.0 + 2.0 * a);
        assert!((simpson3(a, m, b, f(a), f(m), f(b)) - exact).abs() < 1e-13);
    }

    #[test]
    fn zero_length_cycle_rejected() {
        let s = h2();
        let eq = equilibrium(&s, 0.01).unwrap();
        let tr = Trajectory {
            epsilon: 0.01,
            samples: vec![sample(0.0, &[eq.x_star.ln(), eq.y_star, 0.0])],
            events: vec![],
            termination: Termination::TimeLimit,
            notes: vec![],
        };
        assert!(floquet_integral(&s, 0.01, &tr, 1e-4).is_err());
    }

    #[test]
    fn open_curve_rejected() {
        let s = h2();
        let tr = simulate(&s, 0.01, 2.0, 1.0, 5.0, 1e-8).unwrap();
        assert!(matches!(floquet_integral(&s, 0.01, &tr, 1e-4), Err(Error::OpenCurve { .. })));
    }

    #[test]
    fn entry_exit_rejects_bad_input() {
        let s = h2();
        let opts = SimOptions::default();
        assert!(empirical_entry_exit(&s, 0.01, 1.0, 0.03, &opts).is_err());
        assert!(empirical_entry_exit(&s, 0.01, 3.0, 0.0, &opts).is_err());
    }
}
