//! Centrality, the projected Newton step, the mixed-norm-ball projections and
//! the weight update driven by the chasing-0 strategy.

use crate::barrier::{eval_all, Barrier1D, BarrierDerivs};
use crate::error::{Error, Result};
use crate::linalg::{BackendChoice, NormalSolver, SparseMat};
use crate::weights::{track_weight, WeightParams};
use crate::Mode;
use std::cell::RefCell;

/// Centrality target of a practical centering step.
pub const PRACTICAL_TARGET: f64 = 0.05;
/// Newton steps per practical centering call.
pub const PRACTICAL_NEWTON_STEPS: usize = 4;
/// Largest centrality used to size a practical weight move.
pub const PRACTICAL_RADIUS_CAP: f64 = 1.0;
/// Step halvings tried before a step is declared stalled.
pub const MAX_HALVINGS: usize = 30;

/// Counters and numerical monitors shared by one solve.
#[derive(Clone, Debug, Default)]
pub struct Stats {
    pub solves: usize,
    pub factorizations: usize,
    pub leverage_calls: usize,
    pub newton_steps: usize,
    pub halvings: usize,
    /// Largest `‖log D_{k+1} − log D_k‖_∞` between consecutive Newton systems.
    pub max_drift: f64,
    pub last_log_d: Option<Vec<f64>>,
}

/// Problem data and solver state shared by the centering and path-following
/// operations.
#[derive(Debug)]
pub struct Engine {
    pub a: SparseMat,
    pub b: Vec<f64>,
    pub barriers: Vec<Barrier1D>,
    pub solver: NormalSolver,
    pub eps_s: f64,
    pub params: WeightParams,
    pub stats: RefCell<Stats>,
}

impl Engine {
    pub fn new(
        a: &SparseMat,
        b: &[f64],
        barriers: &[Barrier1D],
        params: WeightParams,
        eps_s: f64,
        backend: BackendChoice,
    ) -> Result<Engine> {
        if barriers.len() != a.rows() || b.len() != a.cols() {
            return Err(Error::InvalidShape("engine data does not match the matrix shape".into()));
        }
        Ok(Engine {
            a: a.clone(),
            b: b.to_vec(),
            barriers: barriers.to_vec(),
            solver: NormalSolver::new(a, backend),
            eps_s,
            params,
            stats: RefCell::new(Stats::default()),
        })
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn mode(&self) -> Mode {
        self.params.mode
    }

    /// Solve `Aᵀ diag(1/(wφ'')) A v = q`, recording statistics.
    pub fn solve_newton_system(&self, w: &[f64], phi2: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        let d: Vec<f64> = w.iter().zip(phi2).map(|(a, b)| 1.0 / (a * b)).collect();
        let log_d: Vec<f64> = d.iter().map(|x| x.ln()).collect();
        {
            let mut st = self.stats.borrow_mut();
            if let Some(prev) = &st.last_log_d {
                let drift = prev.iter().zip(&log_d).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                st.max_drift = st.max_drift.max(drift);
            }
            st.last_log_d = Some(log_d);
            st.solves += 1;
            st.factorizations += 1;
        }
        Ok(self.solver.solve(&d, q, self.eps_s, None)?.solution)
    }
}

/// An iterate of the weighted path: `x`, weights `w`, path parameter `t`
/// and normal force `η`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPoint {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
    pub eta: Vec<f64>,
    pub derivs: Vec<BarrierDerivs>,
    /// Latest estimate of the weight function at a nearby point.
    pub g_est: Option<Vec<f64>>,
}

impl PathPoint {
    pub fn new(engine: &Engine, x: Vec<f64>, w: Vec<f64>, t: f64, eta: Vec<f64>) -> Result<PathPoint> {
        if x.len() != engine.m() || w.len() != engine.m() || eta.len() != engine.n() {
            return Err(Error::InvalidShape("path point does not match the problem shape".into()));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
        }
        let derivs = eval_all(&engine.barriers, &x)?;
        Ok(PathPoint { x, w, t, eta, derivs, g_est: None })
    }

    pub fn phi1(&self) -> Vec<f64> {
        self.derivs.iter().map(|d| d.d1).collect()
    }

    pub fn phi2(&self) -> Vec<f64> {
        self.derivs.iter().map(|d| d.d2).collect()
    }

    /// `∇_x f_t = t·c + w·φ'(x)`.
    pub fn gradient(&self, c: &[f64]) -> Vec<f64> {
        (0..self.x.len()).map(|i| self.t * c[i] + self.w[i] * self.derivs[i].d1).collect()
    }
}

/// Centrality measured with a given normal force.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct CentralityReading {
    pub delta_hat: f64,
    pub inf_part: f64,
    pub w_part: f64,
}

/// `‖y‖_∞ + c_norm·√(Σ w_i y_i²)`.
pub fn mixed_norm(y: &[f64], w: &[f64], c_norm: f64) -> f64 {
    let (i, wp) = mixed_parts(y, w);
    i + c_norm * wp
}

fn mixed_parts(y: &[f64], w: &[f64]) -> (f64, f64) {
    let inf = y.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let wp = y.iter().zip(w).map(|(a, b)| b * a * a).sum::<f64>().sqrt();
    (inf, wp)
}

fn reading(rho: &[f64], w: &[f64], c_norm: f64) -> CentralityReading {
    let (inf_part, w_part) = mixed_parts(rho, w);
    CentralityReading { delta_hat: inf_part + c_norm * w_part, inf_part, w_part }
}

/// The W-optimal normal force `η* = (AᵀDA)⁻¹Aᵀ(D∇f)`, `D = 1/(wφ'')`.
pub fn eta_star(engine: &Engine, c: &[f64], point: &PathPoint) -> Result<Vec<f64>> {
    let phi2 = point.phi2();
    let g = point.gradient(c);
    let rhs: Vec<f64> = (0..g.len()).map(|i| g[i] / (point.w[i] * phi2[i])).collect();
    engine.solve_newton_system(&point.w, &phi2, &engine.a.tmul_vec(&rhs))
}

/// Refresh `η` by one normal-equation solve and return the scaled residual
/// `ρ = (∇f − Aη)/(w√φ'')`.
fn refresh(engine: &Engine, c: &[f64], point: &PathPoint) -> Result<(Vec<f64>, Vec<f64>)> {
    let phi2 = point.phi2();
    let g = point.gradient(c);
    let ae = engine.a.mul_vec(&point.eta);
    let m = g.len();
    let dr: Vec<f64> = (0..m).map(|i| (g[i] - ae[i]) / (point.w[i] * phi2[i])).collect();
    let u = engine.solve_newton_system(&point.w, &phi2, &engine.a.tmul_vec(&dr))?;
    let eta: Vec<f64> = point.eta.iter().zip(&u).map(|(a, b)| a + b).collect();
    let ae = engine.a.mul_vec(&eta);
    let rho = (0..m).map(|i| (g[i] - ae[i]) / (point.w[i] * phi2[i].sqrt())).collect();
    Ok((eta, rho))
}

pub fn centrality(engine: &Engine, c: &[f64], point: &PathPoint) -> Result<CentralityReading> {
    let (_, rho) = refresh(engine, c, point)?;
    Ok(reading(&rho, &point.w, engine.params.c_norm))
}

/// Centrality together with the refreshed normal force.
pub fn centrality_with_eta(engine: &Engine, c: &[f64], point: &PathPoint) -> Result<(CentralityReading, Vec<f64>)> {
    let (eta, rho) = refresh(engine, c, point)?;
    Ok((reading(&rho, &point.w, engine.params.c_norm), eta))
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    /// Centrality of the point the step was taken from.
    pub before: CentralityReading,
    /// Whether the `δ ≤ 1/10` hypothesis of quadratic convergence held.
    pub within_quadratic_region: bool,
}

/// Newton direction `Δx = −ρ/√φ''` and the updated normal force.
pub fn newton_direction(engine: &Engine, c: &[f64], point: &PathPoint) -> Result<(Vec<f64>, Vec<f64>, StepReport)> {
    let (eta, rho) = refresh(engine, c, point)?;
    let r = reading(&rho, &point.w, engine.params.c_norm);
    let dx: Vec<f64> = rho.iter().zip(&point.derivs).map(|(p, d)| -p / d.d2.sqrt()).collect();
    engine.stats.borrow_mut().newton_steps += 1;
    Ok((dx, eta, StepReport { before: r, within_quadratic_region: r.delta_hat <= 0.1 }))
}

/// Full projected Newton step. Fails with `StepLeftDomain` if the new point
/// is not interior.
pub fn newton_step(engine: &Engine, c: &[f64], point: &PathPoint) -> Result<(Vec<f64>, Vec<f64>, StepReport)> {
    let (dx, eta, rep) = newton_direction(engine, c, point)?;
    let x: Vec<f64> = point.x.iter().zip(&dx).map(|(a, b)| a + b).collect();
    if let Some(i) = (0..x.len()).find(|&i| !engine.barriers[i].is_interior(x[i])) {
        return Err(Error::StepLeftDomain(i));
    }
    Ok((x, eta, rep))
}

/// Newton step with step-halving when the full step leaves the domain.
pub fn damped_newton_step(engine: &Engine, c: &[f64], point: &PathPoint) -> Result<(PathPoint, StepReport)> {
    let (dx, eta, rep) = newton_direction(engine, c, point)?;
    let mut s = 1.0;
    for _ in 0..=MAX_HALVINGS {
        let x: Vec<f64> = point.x.iter().zip(&dx).map(|(a, b)| a + s * b).collect();
        if let Ok(derivs) = eval_all(&engine.barriers, &x) {
            let mut next = point.clone();
            next.x = x;
            next.derivs = derivs;
            next.eta = if s == 1.0 { eta } else { point.eta.iter().zip(&eta).map(|(a, b)| a + s * (b - a)).collect() };
            return Ok((next, rep));
        }
        engine.stats.borrow_mut().halvings += 1;
        s *= 0.5;
    }
    Err(Error::CenteringStalled(format!("Newton step left the domain after {MAX_HALVINGS} halvings")))
}

/// `Φ_μ(y) = Σ e^{μy_i} + e^{−μy_i}`.
pub fn potential_phi(y: &[f64], mu: f64) -> f64 {
    let big = y.iter().fold(0.0f64, |a, b| a.max(b.abs())) * mu;
    if big > 500.0 {
        log_potential_phi(y, mu).exp()
    } else {
        y.iter().map(|v| 2.0 * (mu * v).cosh()).sum()
    }
}

/// `log Φ_μ(y)` in log-sum-exp form.
pub fn log_potential_phi(y: &[f64], mu: f64) -> f64 {
    let big = y.iter().fold(0.0f64, |a, b| a.max(b.abs())) * mu;
    let s: f64 = y.iter().map(|v| (mu * v - big).exp() + (-mu * v - big).exp()).sum();
    big + s.ln()
}

/// Sort order by `|a_i|/l_i` descending, ties by index, zero entries last.
fn ratio_order(a: &[f64], l: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&i, &j| {
        let (ri, rj) = (a[i].abs() / l[i], a[j].abs() / l[j]);
        rj.partial_cmp(&ri).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j))
    });
    idx
}

fn check_l(a: &[f64], l: &[f64]) {
    assert_eq!(a.len(), l.len(), "projection inputs differ in length");
    assert!(l.iter().all(|&v| v > 0.0), "projection box must be strictly positive");
}

/// `argmax ⟨a,x⟩` over `{‖x‖₂ ≤ 1, |x_i| ≤ l_i}`.
pub fn project_onto_ball_box(a: &[f64], l: &[f64]) -> Vec<f64> {
    check_l(a, l);
    let m = a.len();
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; m];
    }
    let an: Vec<f64> = a.iter().map(|v| v / norm).collect();
    let order = ratio_order(&an, l);
    let mut rest = vec![0.0; m + 1];
    for k in (0..m).rev() {
        rest[k] = rest[k + 1] + an[order[k]] * an[order[k]];
    }
    let mut lsum: f64 = 0.0;
    let mut prefix = m;
    let mut scale = 0.0;
    for k in 0..m {
        let i = order[k];
        if an[i] == 0.0 {
            prefix = k;
            break;
        }
        let s2 = (1.0 - lsum).max(0.0) / rest[k];
        if s2 * an[i] * an[i] <= l[i] * l[i] {
            prefix = k;
            scale = s2.sqrt();
            break;
        }
        lsum += l[i] * l[i];
    }
    let mut x = vec![0.0; m];
    for (k, &i) in order.iter().enumerate() {
        x[i] = if k < prefix { an[i].signum() * l[i] } else { scale * an[i] };
    }
    x
}

/// `argmax ⟨a,x⟩` over `{‖x‖₂ + ‖x/l‖_∞ ≤ 1}` by the closed-form search over
/// the number of box-clipped coordinates.
pub fn project_onto_mixed_norm_ball(a: &[f64], l: &[f64]) -> Vec<f64> {
    check_l(a, l);
    let m = a.len();
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; m];
    }
    let an: Vec<f64> = a.iter().map(|v| v / norm).collect();
    let order = ratio_order(&an, l);
    let mut rest = vec![0.0; m + 1];
    for k in (0..m).rev() {
        rest[k] = rest[k + 1] + an[order[k]] * an[order[k]];
    }
    let mut sp = vec![0.0; m + 1];
    let mut lp = vec![0.0; m + 1];
    for k in 0..m {
        let i = order[k];
        sp[k + 1] = sp[k] + an[i].abs() * l[i];
        lp[k + 1] = lp[k] + l[i] * l[i];
    }
    // τ thresholds: coordinate k is clipped iff τ < thr[k]
    let thr: Vec<f64> = (0..m)
        .map(|k| {
            let i = order[k];
            let ai = an[i].abs();
            if ai == 0.0 {
                0.0
            } else {
                ai / (ai * ai * lp[k] + l[i] * l[i] * rest[k]).sqrt()
            }
        })
        .collect();
    let value = |k: usize, t: f64| -> f64 {
        let inner = ((1.0 - t) * (1.0 - t) - t * t * lp[k]).max(0.0);
        t * sp[k] + inner.sqrt() * rest[k].sqrt()
    };
    let to_t = |tau: f64| if tau.is_infinite() { 1.0 } else { tau / (1.0 + tau) };
    let mut best = (f64::NEG_INFINITY, 0usize, 0.0f64);
    for k in 0..=m {
        let hi_tau = if k == 0 { f64::INFINITY } else { thr[k - 1] };
        let lo_tau = if k == m { 0.0 } else { thr[k] };
        if !(lo_tau <= hi_tau) || (k > 0 && hi_tau == 0.0) {
            continue;
        }
        let (tlo, thi) = (to_t(lo_tau), to_t(hi_tau));
        let mut cands = vec![tlo, thi];
        let (b2, lk, sk) = (rest[k], lp[k], sp[k]);
        let qa = b2 * lk * lk + sk * sk * lk;
        let qb = 2.0 * b2 * lk;
        let qc = b2 - sk * sk;
        if qa > 0.0 {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                for root in [(-qb + disc.sqrt()) / (2.0 * qa), (-qb - disc.sqrt()) / (2.0 * qa)] {
                    if root > 0.0 {
                        cands.push(to_t(root).max(tlo).min(thi));
                    }
                }
            }
        }
        for t in cands {
            let v = value(k, t);
            if v > best.0 {
                best = (v, k, t);
            }
        }
    }
    let (_, k, t) = best;
    let inner = ((1.0 - t) * (1.0 - t) - t * t * lp[k]).max(0.0).sqrt();
    let s = if rest[k] > 0.0 { inner / rest[k].sqrt() } else { 0.0 };
    let mut x = vec![0.0; m];
    for (j, &i) in order.iter().enumerate() {
        x[i] = if j < k { an[i].signum() * t * l[i] } else { s * an[i] };
    }
    x
}

/// `Δ = (1+ε)·argmin_{‖u‖_{w+∞} ≤ C} ⟨∇Φ_μ(z), u⟩`.
pub fn chasing_zero_move(z: &[f64], w: &[f64], c_radius: f64, c_norm: f64, mu: f64, eps: f64) -> Vec<f64> {
    let m = z.len();
    assert_eq!(w.len(), m);
    if !(c_radius > 0.0) {
        return vec![0.0; m];
    }
    let big = z.iter().fold(0.0f64, |a, b| a.max(b.abs())) * mu;
    let grad: Vec<f64> = z.iter().map(|v| (mu * v - big).exp() - (-mu * v - big).exp()).collect();
    if grad.iter().all(|g| *g == 0.0) {
        return vec![0.0; m];
    }
    let l: Vec<f64> = w.iter().map(|wi| c_norm * wi.sqrt()).collect();
    let a: Vec<f64> = grad.iter().zip(&l).map(|(g, li)| -g / li).collect();
    let y = project_onto_mixed_norm_ball(&a, &l);
    y.iter().zip(&l).map(|(yi, li)| (1.0 + eps) * c_radius * yi / li).collect()
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CenterReport {
    /// Centrality at entry, measured with the refreshed normal force.
    pub entry: CentralityReading,
    /// Centrality before the last Newton step taken.
    pub last: CentralityReading,
    pub newton_steps: usize,
    /// `‖log w_new − log w‖_∞`.
    pub weight_move: f64,
    /// Estimate of `‖log g(x_new) − log w_new‖_∞`.
    pub psi_inf: f64,
    /// Estimate of `Φ_μ(log g(x_new) − log w_new)`.
    pub log_potential: f64,
}

/// Newton step(s) followed by the chasing-0 weight update.
pub fn centering_inexact(engine: &Engine, c: &[f64], point: &PathPoint, seed: u64) -> Result<(PathPoint, CenterReport)> {
    let p = &engine.params;
    let max_steps = match p.mode {
        Mode::Paper => 1,
        Mode::Practical => PRACTICAL_NEWTON_STEPS,
    };
    let mut cur = point.clone();
    let mut rep = CenterReport::default();
    for s in 0..max_steps {
        let (next, step) = damped_newton_step(engine, c, &cur)?;
        if s == 0 {
            rep.entry = step.before;
        }
        rep.last = step.before;
        rep.newton_steps += 1;
        cur = next;
        if step.before.delta_hat <= PRACTICAL_TARGET {
            break;
        }
    }

    let phi2 = cur.phi2();
    let start = cur.g_est.clone().unwrap_or_else(|| cur.w.clone());
    let est = track_weight(&engine.solver, &phi2, &start, p.r, p, p.beta, seed)?;
    engine.stats.borrow_mut().leverage_calls += est.leverage_calls;
    let z: Vec<f64> = est.w.iter().map(|v| v.ln()).collect();
    let scale = match p.mode {
        Mode::Paper => rep.entry.delta_hat,
        Mode::Practical => rep.entry.delta_hat.min(PRACTICAL_RADIUS_CAP),
    };
    let radius = (1.0 - 7.0 / (8.0 * p.c_k)) * scale;
    let state: Vec<f64> = cur.w.iter().zip(&z).map(|(w, zi)| w.ln() - zi).collect();
    let delta = chasing_zero_move(&state, &cur.w, radius, p.c_norm, p.mu, p.chase_eps());
    rep.weight_move = delta.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    for (wi, di) in cur.w.iter_mut().zip(&delta) {
        *wi *= di.exp();
    }
    let psi: Vec<f64> = cur.w.iter().zip(&z).map(|(w, zi)| zi - w.ln()).collect();
    rep.psi_inf = psi.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    rep.log_potential = log_potential_phi(&psi, p.mu);
    cur.g_est = Some(est.w);
    Ok((cur, rep))
}
