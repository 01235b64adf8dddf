//! Path following along the weighted central path, the two-phase LP driver,
//! and feasibility measurement and repair.

use crate::barrier::{make_barrier, Barrier1D, Bound};
use crate::centering::{
    centering_inexact, centrality, damped_newton_step, mixed_norm, CentralityReading, Engine, PathPoint,
    PRACTICAL_TARGET,
};
use crate::error::{Error, Result};
use crate::linalg::{apply_pxw_with, BackendChoice, NormalSolver, SparseMat};
use crate::weights::{compute_initial_weight_with, weight_params, WeightParams};
use crate::Mode;

/// Polishing Newton steps allowed after the last path step (practical mode).
pub const POLISH_STEPS: usize = 60;
/// Consecutive centering calls above target tolerated in practical mode.
pub const STALL_LIMIT: usize = 10;

/// `min cᵀx` subject to `Aᵀx = b`, `l ≤ x ≤ u`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxedLP {
    pub a: SparseMat,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub lower: Vec<Bound>,
    pub upper: Vec<Bound>,
}

impl BoxedLP {
    pub fn new(a: SparseMat, b: Vec<f64>, c: Vec<f64>, lower: Vec<Bound>, upper: Vec<Bound>) -> Result<BoxedLP> {
        let (m, n) = (a.rows(), a.cols());
        if b.len() != n || c.len() != m || lower.len() != m || upper.len() != m {
            return Err(Error::InvalidShape(format!(
                "A is {m}x{n} but |b| = {}, |c| = {}, |l| = {}, |u| = {}",
                b.len(),
                c.len(),
                lower.len(),
                upper.len()
            )));
        }
        if n == 0 || m < n {
            return Err(Error::InvalidShape(format!("need m >= n >= 1, got m = {m}, n = {n}")));
        }
        if b.iter().chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("b and c must be finite".into()));
        }
        for i in 0..m {
            make_barrier(lower[i], upper[i])?;
        }
        NormalSolver::new(&a, BackendChoice::Direct).factor_direct(&vec![1.0; m])?;
        Ok(BoxedLP { a, b, c, lower, upper })
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn barriers(&self) -> Vec<Barrier1D> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| make_barrier(*l, *u).expect("validated at construction"))
            .collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `Aᵀx − b`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.a.tmul_vec(x).iter().zip(&self.b).map(|(a, b)| a - b).collect()
    }
}

/// `U = max(‖(u−l)/(u−x₀)‖_∞, ‖(u−l)/(x₀−l)‖_∞, ‖u−l‖_∞, ‖c‖_∞)`, over the
/// coordinates where the terms are finite, and at least 1.
pub fn width_u(lp: &BoxedLP, x0: &[f64]) -> f64 {
    let mut u_w: f64 = 1.0;
    for i in 0..lp.m() {
        let (l, u) = (lp.lower[i].as_lower(), lp.upper[i].as_upper());
        let w = u - l;
        if w.is_finite() {
            u_w = u_w.max(w / (u - x0[i])).max(w / (x0[i] - l)).max(w);
        }
        u_w = u_w.max(lp.c[i].abs());
    }
    u_w
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub mode: Mode,
    /// Normal-equation accuracy; defaults to `1e−10` (practical) or `m^{−8}` (paper).
    pub eps_s: Option<f64>,
    pub backend: BackendChoice,
    /// Cap on centering iterations over the whole solve.
    pub max_iters: usize,
    /// Record the invariant monitors (always on in paper mode).
    pub monitor: bool,
}

impl SolverConfig {
    pub fn practical() -> Self {
        SolverConfig {
            mode: Mode::Practical,
            eps_s: None,
            backend: BackendChoice::Auto,
            max_iters: 1_000_000,
            monitor: false,
        }
    }

    pub fn paper() -> Self {
        SolverConfig { mode: Mode::Paper, monitor: true, ..Self::practical() }
    }

    pub fn eps_s_for(&self, m: usize) -> f64 {
        self.eps_s.unwrap_or(match self.mode {
            Mode::Practical => 1e-10,
            Mode::Paper => (m.max(2) as f64).powi(-8),
        })
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::practical()
    }
}

/// Running tally of one checked invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantTally {
    pub name: &'static str,
    pub limit: f64,
    pub checks: usize,
    pub violations: usize,
    pub worst: f64,
}

impl InvariantTally {
    fn new(name: &'static str, limit: f64) -> Self {
        InvariantTally { name, limit, checks: 0, violations: 0, worst: f64::NEG_INFINITY }
    }

    fn check(&mut self, value: f64, limit: f64) {
        self.limit = limit;
        self.checks += 1;
        if !(value <= limit) {
            self.violations += 1;
        }
        let ratio = if limit > 0.0 { value / limit } else { value };
        if ratio > self.worst || self.worst.is_nan() {
            self.worst = ratio;
        }
    }
}

/// Invariant monitors along a solve; `worst` is stored as value/limit.
#[derive(Clone, Debug, PartialEq)]
pub struct Monitor {
    pub centrality_entry: InvariantTally,
    pub potential: InvariantTally,
    pub psi_inf: InvariantTally,
    pub infeasibility_growth: InvariantTally,
    pub drift: InvariantTally,
    pub slack_floor: InvariantTally,
}

impl Monitor {
    fn new() -> Self {
        Monitor {
            centrality_entry: InvariantTally::new("centrality at entry", 0.0),
            potential: InvariantTally::new("log potential", 0.0),
            psi_inf: InvariantTally::new("weight error", 0.0),
            infeasibility_growth: InvariantTally::new("infeasibility growth", 0.0),
            drift: InvariantTally::new("system drift", 0.1 + 1e-9),
            slack_floor: InvariantTally::new("slack floor (inverted)", 0.0),
        }
    }

    pub fn tallies(&self) -> [&InvariantTally; 6] {
        [
            &self.centrality_entry,
            &self.potential,
            &self.psi_inf,
            &self.infeasibility_growth,
            &self.drift,
            &self.slack_floor,
        ]
    }

    pub fn violations(&self) -> usize {
        self.tallies().iter().map(|t| t.violations).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    /// Centering iterations (calls of the centering step).
    pub iterations: usize,
    pub phase_a_iterations: usize,
    /// Normal-equation solves.
    pub solves: usize,
    pub newton_steps: usize,
    pub final_delta: f64,
    /// `‖w‖₁/t`.
    pub gap_bound: f64,
    /// `‖w‖₁/t` plus the distance term.
    pub certificate: f64,
    pub infeasibility: f64,
    pub mode: Mode,
    pub objective: f64,
    pub t_final: f64,
    pub repairs: usize,
    pub monitor: Option<Monitor>,
}

/// `I(x,w) = ‖Aᵀx − b‖_{(A_xᵀW⁻¹A_x)⁻¹}`.
pub fn infeasibility(engine: &Engine, point: &PathPoint) -> Result<f64> {
    let res: Vec<f64> = engine.a.tmul_vec(&point.x).iter().zip(&engine.b).map(|(a, b)| a - b).collect();
    if res.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let v = engine.solve_newton_system(&point.w, &point.phi2(), &res)?;
    Ok(res.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt())
}

fn repair_step(engine: &Engine, point: &PathPoint) -> Result<Vec<f64>> {
    let res: Vec<f64> = engine.a.tmul_vec(&point.x).iter().zip(&engine.b).map(|(a, b)| a - b).collect();
    let phi2 = point.phi2();
    let v = engine.solve_newton_system(&point.w, &phi2, &res)?;
    let av = engine.a.mul_vec(&v);
    Ok((0..point.x.len()).map(|i| -av[i] / (point.w[i] * phi2[i])).collect())
}

/// `x ← x − W⁻¹Φ''⁻¹A·S(Aᵀx − b)`, requiring `I(x,w) ≤ 0.01/m`.
pub fn repair_feasibility(engine: &Engine, point: &PathPoint) -> Result<PathPoint> {
    let i = infeasibility(engine, point)?;
    let limit = 0.01 / engine.m() as f64;
    if i > limit {
        return Err(Error::RepairHypothesisViolated { value: i, limit });
    }
    if i == 0.0 {
        return Ok(point.clone());
    }
    let dx = repair_step(engine, point)?;
    let x: Vec<f64> = point.x.iter().zip(&dx).map(|(a, b)| a + b).collect();
    let mut out = PathPoint::new(engine, x, point.w.clone(), point.t, point.eta.clone())?;
    out.g_est = point.g_est.clone();
    Ok(out)
}

fn try_repair(engine: &Engine, point: &PathPoint) -> Result<Option<PathPoint>> {
    let dx = repair_step(engine, point)?;
    let mut s = 1.0;
    for _ in 0..30 {
        let x: Vec<f64> = point.x.iter().zip(&dx).map(|(a, b)| a + s * b).collect();
        if let Ok(mut p) = PathPoint::new(engine, x, point.w.clone(), point.t, point.eta.clone()) {
            p.g_est = point.g_est.clone();
            return Ok(Some(p));
        }
        s *= 0.5;
    }
    Ok(None)
}

/// `‖w‖₁/t + (r/(1−r))·Σ|c_i|/√φ''_i` with `r = 16c_γc_kδ̂`.
pub fn progress_certificate(engine: &Engine, c: &[f64], point: &PathPoint, delta_hat: f64) -> f64 {
    let p = &engine.params;
    let gap = point.w.iter().sum::<f64>() / point.t;
    let r = 16.0 * p.c_gamma * p.c_k * delta_hat;
    if r >= 1.0 {
        return f64::INFINITY;
    }
    let dist: f64 = c.iter().zip(&point.derivs).map(|(ci, d)| ci.abs() / d.d2.sqrt()).sum();
    gap + r / (1.0 - r) * dist
}

/// Mutable state threaded through the phases of one solve.
#[derive(Debug)]
pub struct RunState {
    pub iterations: usize,
    pub max_iters: usize,
    pub repairs: usize,
    pub eps: f64,
    pub monitor: Option<Monitor>,
    pub min_slack0: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub seed: u64,
    stalled: usize,
}

impl RunState {
    pub fn new(eps: f64, max_iters: usize, monitor: bool, x0_min_slack: f64, seed: u64) -> Self {
        RunState {
            iterations: 0,
            max_iters,
            repairs: 0,
            eps,
            monitor: monitor.then(Monitor::new),
            min_slack0: x0_min_slack,
            t_min: 1.0,
            t_max: 1.0,
            seed,
            stalled: 0,
        }
    }
}

fn min_slack(engine: &Engine, x: &[f64]) -> f64 {
    engine.barriers.iter().zip(x).map(|(b, &xi)| b.slack(xi)).fold(f64::INFINITY, f64::min)
}

/// One centering call plus monitoring and stall detection.
fn center_once(engine: &Engine, c: &[f64], point: PathPoint, st: &mut RunState) -> Result<(PathPoint, CentralityReading)> {
    let p = engine.params.clone();
    if st.iterations >= st.max_iters {
        return Err(Error::IterationLimit(st.max_iters));
    }
    let seed = st.seed.wrapping_add(st.iterations as u64 * 0x9E37_79B9);
    let i_before = if st.monitor.is_some() { Some(infeasibility(engine, &point)?) } else { None };
    let (next, rep) = centering_inexact(engine, c, &point, seed)?;
    st.iterations += 1;
    log::trace!(
        "iteration {} t {:.3e} entry {:.3e} last {:.3e} steps {} weight move {:.3e} psi {:.3e}",
        st.iterations,
        next.t,
        rep.entry.delta_hat,
        rep.last.delta_hat,
        rep.newton_steps,
        rep.weight_move,
        rep.psi_inf
    );
    if let Some(mon) = st.monitor.as_mut() {
        let thr = 1.0 / (960.0 * p.c_k * p.c_k * p.log400m());
        mon.centrality_entry.check(rep.entry.delta_hat, thr);
        mon.potential.check(rep.log_potential, 2.0 * p.log400m());
        mon.psi_inf.check(rep.psi_inf, p.k);
        let mut apx = next.clone();
        apx.w = point.w.clone();
        let i_after = infeasibility(engine, &apx)?;
        mon.infeasibility_growth.check(i_after, 2.0 * i_before.unwrap_or(0.0) + 3.0 * engine.eps_s);
        mon.drift.check(engine.stats.borrow().max_drift, 0.1 + 1e-9);
        let w1: f64 = next.w.iter().sum();
        let floor = st.min_slack0 * p.beta / (4.0 * (st.t_max / st.t_min) * w1 * engine.m() as f64);
        let s = min_slack(engine, &next.x);
        mon.slack_floor.check(floor / s, 1.0);
    }
    if engine.params.mode == Mode::Practical {
        if rep.last.delta_hat > PRACTICAL_TARGET {
            st.stalled += 1;
            if st.stalled >= STALL_LIMIT {
                return Err(Error::CenteringStalled(format!(
                    "centrality {:.3e} above target for {STALL_LIMIT} consecutive calls",
                    rep.last.delta_hat
                )));
            }
        } else {
            st.stalled = 0;
        }
    }
    Ok((next, rep.last))
}

fn maybe_repair(engine: &Engine, point: PathPoint, st: &mut RunState) -> Result<PathPoint> {
    let m = engine.m() as f64;
    let thr = (1.0 / (m * m)).min(st.eps / 10.0);
    let i = infeasibility(engine, &point)?;
    if i <= thr {
        return Ok(point);
    }
    match engine.params.mode {
        Mode::Paper => {
            st.repairs += 1;
            repair_feasibility(engine, &point)
        }
        Mode::Practical => match try_repair(engine, &point)? {
            Some(p) => {
                st.repairs += 1;
                Ok(p)
            }
            None => {
                log::warn!("feasibility repair left the domain; continuing with I = {i:e}");
                Ok(point)
            }
        },
    }
}

/// Relative t-step of one path iteration.
pub fn t_step(p: &WeightParams) -> f64 {
    let sr = (p.rank as f64).sqrt();
    match p.mode {
        Mode::Paper => 1.0 / (1e5 * p.c_k.powi(4) * p.log400m() * sr),
        Mode::Practical => 0.05 / sr,
    }
}

/// Follow the path from `point.t` to `t_end`, then center until the
/// centrality is at most `eps_center`. `stop` may end the t-loop early.
pub fn path_following(
    engine: &Engine,
    c: &[f64],
    point: PathPoint,
    t_end: f64,
    eps_center: f64,
    st: &mut RunState,
    stop: &mut dyn FnMut(&Engine, &PathPoint) -> Result<bool>,
) -> Result<PathPoint> {
    let p = engine.params.clone();
    let step = t_step(&p);
    let mut cur = point;
    let up = t_end >= cur.t;
    while cur.t != t_end {
        let (next, _) = center_once(engine, c, cur, st)?;
        cur = next;
        if stop(engine, &cur)? {
            break;
        }
        let t_new = if up { (cur.t * (1.0 + step)).min(t_end) } else { (cur.t * (1.0 - step)).max(t_end) };
        let ratio = t_new / cur.t;
        for e in cur.eta.iter_mut() {
            *e *= ratio;
        }
        cur.t = t_new;
        st.t_min = st.t_min.min(t_new);
        st.t_max = st.t_max.max(t_new);
        cur = maybe_repair(engine, cur, st)?;
    }
    match p.mode {
        Mode::Paper => {
            let reps = (4.0 * p.c_k * (1.0 / eps_center).ln()).ceil().max(1.0) as usize;
            for _ in 0..reps {
                cur = center_once(engine, c, cur, st)?.0;
            }
        }
        Mode::Practical => {
            for _ in 0..50 {
                let (next, before) = center_once(engine, c, cur, st)?;
                cur = next;
                if before.delta_hat <= eps_center {
                    break;
                }
            }
        }
    }
    Ok(cur)
}

/// Solve the LP from a strictly interior feasible `x0`.
pub fn lp_solve(lp: &BoxedLP, x0: &[f64], eps: f64, cfg: &SolverConfig, seed: u64) -> Result<(Vec<f64>, SolveReport)> {
    let (res, report) = lp_solve_traced(lp, x0, eps, cfg, seed);
    res.map(|x| (x, report))
}

/// As [`lp_solve`], but always returns the report, including on failure.
pub fn lp_solve_traced(lp: &BoxedLP, x0: &[f64], eps: f64, cfg: &SolverConfig, seed: u64) -> (Result<Vec<f64>>, SolveReport) {
    let mut report = SolveReport {
        iterations: 0,
        phase_a_iterations: 0,
        solves: 0,
        newton_steps: 0,
        final_delta: f64::NAN,
        gap_bound: f64::NAN,
        certificate: f64::NAN,
        infeasibility: f64::NAN,
        mode: cfg.mode,
        objective: f64::NAN,
        t_final: f64::NAN,
        repairs: 0,
        monitor: None,
    };
    let engine = match setup(lp, x0, eps, cfg) {
        Ok(e) => e,
        Err(e) => return (Err(e), report),
    };
    let monitor = cfg.monitor || cfg.mode == Mode::Paper;
    let mut st = RunState::new(eps, cfg.max_iters, monitor, min_slack(&engine, x0), seed);
    let out = run_phases(lp, &engine, x0, eps, &mut st, &mut report);
    let stats = engine.stats.borrow();
    report.iterations = st.iterations;
    report.solves = stats.solves;
    report.newton_steps = stats.newton_steps;
    report.repairs = st.repairs;
    report.monitor = st.monitor.clone();
    (out, report)
}

fn setup(lp: &BoxedLP, x0: &[f64], eps: f64, cfg: &SolverConfig) -> Result<Engine> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    let (m, n) = (lp.m(), lp.n());
    if x0.len() != m {
        return Err(Error::InfeasibleStart(format!("x0 has length {}, expected {m}", x0.len())));
    }
    let bars = lp.barriers();
    if let Some(i) = (0..m).find(|&i| !bars[i].is_interior(x0[i])) {
        return Err(Error::InfeasibleStart(format!("x0[{i}] = {} is not strictly interior", x0[i])));
    }
    let res = lp.residual(x0);
    let rn = res.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bn = lp.b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rn > 1e-9 * bn.max(1.0) {
        return Err(Error::InfeasibleStart(format!("‖Aᵀx0 − b‖ = {rn:e}")));
    }
    let params = weight_params(m, n, cfg.mode)?;
    Engine::new(&lp.a, &lp.b, &bars, params, cfg.eps_s_for(m), cfg.backend)
}

fn run_phases(
    lp: &BoxedLP,
    engine: &Engine,
    x0: &[f64],
    eps: f64,
    st: &mut RunState,
    report: &mut SolveReport,
) -> Result<Vec<f64>> {
    let p = engine.params.clone();
    let (m, n) = (lp.m(), lp.n());
    let mf = m as f64;
    let probe = PathPoint::new(engine, x0.to_vec(), vec![1.0; m], 1.0, vec![0.0; n])?;
    let phi2 = probe.phi2();
    let k_init = match p.mode {
        Mode::Paper => 1.0 / (1e5 * p.log400m().powi(5)),
        Mode::Practical => p.r,
    };
    let init = compute_initial_weight_with(&engine.solver, &phi2, k_init, &p, st.seed)?;
    engine.stats.borrow_mut().leverage_calls += init.leverage_calls;
    let w = init.w;
    let d: Vec<f64> = (0..m).map(|i| -w[i] * probe.derivs[i].d1).collect();
    let mut point = PathPoint::new(engine, x0.to_vec(), w.clone(), 1.0, vec![0.0; n])?;
    point.g_est = Some(w);

    let u_w = width_u(lp, x0);
    let t1 = 1.0 / (1e10 * u_w * u_w * mf.powi(3));
    let t2 = 3.0 * mf / eps;
    let c = lp.c.clone();

    // Phase A: follow the synthetic cost d downward in t.
    let target = PRACTICAL_TARGET;
    let cd: Vec<f64> = c.iter().zip(&d).map(|(a, b)| a - b).collect();
    let (eps1, mut stop_a): (f64, Box<dyn FnMut(&Engine, &PathPoint) -> Result<bool>>) = match p.mode {
        Mode::Paper => (1.0 / (2000.0 * p.c_k * p.c_k * p.log400m()), Box::new(|_, _| Ok(false))),
        Mode::Practical => (
            target,
            Box::new(move |e: &Engine, pt: &PathPoint| {
                let phi2 = pt.phi2();
                let v: Vec<f64> = (0..cd.len()).map(|i| cd[i] / (pt.w[i] * phi2[i].sqrt())).collect();
                let pv = apply_pxw_with(&e.solver, &phi2, &pt.w, &v, e.eps_s)?;
                e.stats.borrow_mut().solves += 1;
                Ok(pt.t * mixed_norm(&pv, &pt.w, e.params.c_norm) <= 0.5 * target)
            }),
        ),
    };
    point = path_following(engine, &d, point, t1, eps1, st, stop_a.as_mut())?;
    report.phase_a_iterations = st.iterations;

    // Phase B: the true cost, upward in t.
    let eps2 = match p.mode {
        Mode::Paper => eps / (1e6 * mf.powi(3) * u_w * u_w),
        Mode::Practical => target,
    };
    let mut stop_b: Box<dyn FnMut(&Engine, &PathPoint) -> Result<bool>> = match p.mode {
        Mode::Paper => Box::new(|_, _| Ok(false)),
        Mode::Practical => Box::new(move |_, pt: &PathPoint| Ok(pt.w.iter().sum::<f64>() / pt.t <= 0.5 * eps)),
    };
    let t_end_b = t2.max(point.t);
    point = path_following(engine, &c, point, t_end_b, eps2, st, stop_b.as_mut())?;

    let mut reading = centrality(engine, &c, &point)?;
    let mut cert = progress_certificate(engine, &c, &point, reading.delta_hat);
    if p.mode == Mode::Practical {
        let mut steps = 0;
        while cert > eps && steps < POLISH_STEPS {
            point = damped_newton_step(engine, &c, &point)?.0;
            reading = centrality(engine, &c, &point)?;
            cert = progress_certificate(engine, &c, &point, reading.delta_hat);
            steps += 1;
        }
        if infeasibility(engine, &point)? > eps / 10.0 {
            if let Some(q) = try_repair(engine, &point)? {
                point = q;
                st.repairs += 1;
                reading = centrality(engine, &c, &point)?;
                cert = progress_certificate(engine, &c, &point, reading.delta_hat);
            }
        }
    }
    report.final_delta = reading.delta_hat;
    report.gap_bound = point.w.iter().sum::<f64>() / point.t;
    report.certificate = cert;
    report.infeasibility = infeasibility(engine, &point)?;
    report.objective = lp.objective(&point.x);
    report.t_final = point.t;
    Ok(point.x)
}
