//! The regularized log-det weight function
//! `g(x) = argmin_w 1ᵀw + (1/α)·log det(A_xᵀW^{−α}A_x) − β·Σ log w_i`,
//! its gradient, and iterative approximation.

use crate::error::{Error, Result};
use crate::linalg::{leverage_scores_approx_with, sketch_size, BackendChoice, NormalSolver, SparseMat};
use crate::Mode;

/// Cap on `c_norm` in practical mode.
pub const PRACTICAL_C_NORM_CAP: f64 = 64.0;
/// Weight-tracking tolerance `K` in practical mode.
pub const PRACTICAL_K: f64 = 0.05;

/// How leverage scores are obtained inside the weight computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LeverageMethod {
    Exact,
    Sketch,
    /// Sketch only when the probe count is below the row count.
    #[default]
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightParams {
    pub m: usize,
    pub rank: usize,
    pub alpha: f64,
    pub beta: f64,
    pub c_norm: f64,
    pub c_k: f64,
    pub c_gamma: f64,
    pub c_delta: f64,
    pub k: f64,
    pub mu: f64,
    pub r: f64,
    pub mode: Mode,
    pub leverage: LeverageMethod,
    pub warnings: Vec<String>,
}

impl WeightParams {
    /// `ε = 1/(2c_k)` of the weight-chasing strategy.
    pub fn chase_eps(&self) -> f64 {
        1.0 / (2.0 * self.c_k)
    }

    /// `log(400m)`.
    pub fn log400m(&self) -> f64 {
        (400.0 * self.m as f64).ln()
    }
}

pub fn weight_params(m: usize, rank: usize, mode: Mode) -> Result<WeightParams> {
    if rank == 0 || rank > m {
        return Err(Error::InvalidShape(format!("rank {rank} must lie in [1, m = {m}]")));
    }
    let lg = (2.0 * m as f64 / rank as f64).log2();
    let mut warnings = Vec::new();
    let mut alpha = 1.0 + 1.0 / lg;
    if alpha >= 2.0 {
        alpha = 2.0 - 1e-9;
        warnings.push(format!("alpha clamped to {alpha} because m = rank"));
        log::warn!("alpha clamped to 2 - 1e-9 (m = rank = {m})");
    }
    let beta = rank as f64 / (2.0 * m as f64);
    let c_k = 9.0 * lg;
    let log400m = (400.0 * m as f64).ln();
    let (c_norm, k, r, mu) = match mode {
        Mode::Paper => {
            let k = 1.0 / (20.0 * c_k);
            (18.0 * lg, k, k / (48.0 * c_k * log400m), 2.0 * log400m / k)
        }
        Mode::Practical => {
            let k = PRACTICAL_K;
            let r = k / 8.0;
            let mu = (1.0 / (2.0 * c_k)) / (12.0 * r);
            ((18.0 * lg).min(PRACTICAL_C_NORM_CAP), k, r, mu)
        }
    };
    Ok(WeightParams {
        m,
        rank,
        alpha,
        beta,
        c_norm,
        c_k,
        c_gamma: 1.0 + 1.0 / (9.0 * lg),
        c_delta: 1.0 - 2.0 / (9.0 * lg),
        k,
        mu,
        r,
        mode,
        leverage: LeverageMethod::Auto,
        warnings,
    })
}

fn check_vec(name: &str, v: &[f64], m: usize) -> Result<()> {
    if v.len() != m {
        return Err(Error::InvalidShape(format!("{name} has length {}, expected {m}", v.len())));
    }
    if let Some(i) = v.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument(format!("{name}[{i}] = {} must be positive", v[i])));
    }
    Ok(())
}

/// Leverage scores of `A_x = Φ''^{−1/2}A` under row weights `v`.
pub fn sigma_rows(
    solver: &NormalSolver,
    phi2: &[f64],
    v: &[f64],
    method: LeverageMethod,
    theta: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let d: Vec<f64> = v.iter().zip(phi2).map(|(a, b)| a / b).collect();
    let m = solver.matrix().rows();
    let sketch = match method {
        LeverageMethod::Exact => false,
        LeverageMethod::Sketch => true,
        LeverageMethod::Auto => theta > 0.0 && theta < 1.0 && sketch_size(m, theta) < m,
    };
    if sketch {
        leverage_scores_approx_with(solver, &d, theta, seed)
    } else {
        Ok(solver.factor_direct(&d)?.leverage_scores())
    }
}

fn sigma_alpha(solver: &NormalSolver, phi2: &[f64], w: &[f64], p: &WeightParams, theta: f64, seed: u64) -> Result<Vec<f64>> {
    let v: Vec<f64> = w.iter().map(|x| x.powf(-p.alpha)).collect();
    sigma_rows(solver, phi2, &v, p.leverage, theta, seed)
}

/// `f̂(x, w)` evaluated through the sparse factorization.
pub fn fhat_value(a: &SparseMat, phi2: &[f64], w: &[f64], p: &WeightParams) -> Result<f64> {
    let m = a.rows();
    check_vec("phi2", phi2, m)?;
    check_vec("w", w, m)?;
    let solver = NormalSolver::new(a, BackendChoice::Direct);
    let d: Vec<f64> = w.iter().zip(phi2).map(|(wi, f)| wi.powf(-p.alpha) / f).collect();
    let ld = solver.factor_direct(&d)?.log_det().expect("direct factor");
    Ok(w.iter().sum::<f64>() + ld / p.alpha - p.beta * w.iter().map(|x| x.ln()).sum::<f64>())
}

/// `∇_w f̂ = 1 − σ(w^{−α})/w − β/w`.
pub fn fhat_grad(a: &SparseMat, phi2: &[f64], w: &[f64], p: &WeightParams) -> Result<Vec<f64>> {
    let m = a.rows();
    check_vec("phi2", phi2, m)?;
    check_vec("w", w, m)?;
    let solver = NormalSolver::new(a, BackendChoice::Direct);
    let v: Vec<f64> = w.iter().map(|x| x.powf(-p.alpha)).collect();
    let s = sigma_rows(&solver, phi2, &v, LeverageMethod::Exact, 0.0, 0)?;
    Ok((0..m).map(|i| 1.0 - s[i] / w[i] - p.beta / w[i]).collect())
}

/// Result of one bounded weight iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightEstimate {
    pub w: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub leverage_calls: usize,
}

/// Iterate `w ← median((1−1/48)w₀, (3/4)w + (1/4)σ(w^{−α}) + β̃/4, (1+1/48)w₀)`
/// until the fixed-point residual certifies `‖G⁻¹(g − w)‖_∞ ≤ K`.
pub fn compute_weight_beta(
    solver: &NormalSolver,
    phi2: &[f64],
    w0: &[f64],
    k: f64,
    p: &WeightParams,
    beta: f64,
    seed: u64,
) -> Result<WeightEstimate> {
    let m = solver.matrix().rows();
    check_vec("phi2", phi2, m)?;
    check_vec("w0", w0, m)?;
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::InvalidArgument(format!("K = {k} must lie in (0, 1)")));
    }
    let theta = k / 8.0;
    let cap = (200.0 * (1.0 / k).ln()).ceil() as usize + 50;
    let lo: Vec<f64> = w0.iter().map(|x| x * (1.0 - 1.0 / 48.0)).collect();
    let hi: Vec<f64> = w0.iter().map(|x| x * (1.0 + 1.0 / 48.0)).collect();
    let mut w = w0.to_vec();
    let gfac = p.alpha / (1.0 + p.alpha);
    for it in 0..cap {
        let s = sigma_alpha(solver, phi2, &w, p, theta, seed.wrapping_add(it as u64 * 1_000_003))?;
        let mut rinf: f64 = 0.0;
        let mut rw = 0.0;
        for i in 0..m {
            let r = (w[i] - s[i] - beta) / w[i];
            rinf = rinf.max(r.abs());
            rw += w[i] * r * r;
        }
        if rinf + gfac * rw.sqrt() <= 0.5 * k {
            return Ok(WeightEstimate { w, converged: true, iterations: it, leverage_calls: it + 1 });
        }
        let mut moved: f64 = 0.0;
        for i in 0..m {
            let target = 0.75 * w[i] + 0.25 * s[i] + 0.25 * beta;
            let nw = target.clamp(lo[i], hi[i]);
            moved = moved.max(((nw - w[i]) / w[i]).abs());
            w[i] = nw;
        }
        if moved <= 1e-10 {
            return Ok(WeightEstimate { w, converged: false, iterations: it + 1, leverage_calls: it + 1 });
        }
    }
    Err(Error::NoConvergence(format!("weight iteration exceeded {cap} steps")))
}

/// Re-run the bounded iteration, re-centering its box, until converged.
pub fn track_weight(
    solver: &NormalSolver,
    phi2: &[f64],
    w0: &[f64],
    k: f64,
    p: &WeightParams,
    beta: f64,
    seed: u64,
) -> Result<WeightEstimate> {
    let mut w = w0.to_vec();
    let mut its = 0;
    let mut calls = 0;
    for round in 0..200 {
        let est = compute_weight_beta(solver, phi2, &w, k, p, beta, seed.wrapping_add(round))?;
        its += est.iterations;
        calls += est.leverage_calls;
        w = est.w;
        if est.converged {
            return Ok(WeightEstimate { w, converged: true, iterations: its, leverage_calls: calls });
        }
    }
    Err(Error::NoConvergence("weight tracking did not converge in 200 rounds".into()))
}

/// One bounded weight computation started from `w0`. If the true weight lies
/// outside the `1/48` box around `w0`, the box point nearest to it is returned.
pub fn compute_weight(
    a: &SparseMat,
    phi2: &[f64],
    w0: &[f64],
    k: f64,
    p: &WeightParams,
    seed: u64,
) -> Result<Vec<f64>> {
    let solver = NormalSolver::new(a, BackendChoice::Direct);
    Ok(compute_weight_beta(&solver, phi2, w0, k, p, p.beta, seed)?.w)
}

/// Homotopy from `β̃ = 100`, `w = 100·1` down to the target `β`.
pub fn compute_initial_weight_with(
    solver: &NormalSolver,
    phi2: &[f64],
    k: f64,
    p: &WeightParams,
    seed: u64,
) -> Result<WeightEstimate> {
    let m = solver.matrix().rows();
    check_vec("phi2", phi2, m)?;
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::InvalidArgument(format!("K = {k} must lie in (0, 1)")));
    }
    let shrink = 1.0 - 1.0 / (2.0 * (p.rank as f64).sqrt());
    let stage_k = k.max(1.0 / 100.0);
    let mut bt = 100.0;
    let mut w = vec![100.0; m];
    let mut its = 0;
    let mut calls = 0;
    let mut stage = 0u64;
    loop {
        let next = (bt * shrink).max(p.beta);
        let final_stage = next <= p.beta;
        bt = next;
        let kk = if final_stage { k } else { stage_k };
        let est = track_weight(solver, phi2, &w, kk, p, bt, seed.wrapping_add(stage.wrapping_mul(7919)))?;
        its += est.iterations;
        calls += est.leverage_calls;
        w = est.w;
        stage += 1;
        if final_stage {
            return Ok(WeightEstimate { w, converged: true, iterations: its, leverage_calls: calls });
        }
    }
}

pub fn compute_initial_weight(a: &SparseMat, phi2: &[f64], k: f64, p: &WeightParams, seed: u64) -> Result<Vec<f64>> {
    let solver = NormalSolver::new(a, BackendChoice::Direct);
    Ok(compute_initial_weight_with(&solver, phi2, k, p, seed)?.w)
}

/// Fixed point `w = σ(w^{−α}) + β` with exact leverage scores.
pub fn weight_function_oracle(a: &SparseMat, phi2: &[f64], p: &WeightParams, tol: f64) -> Result<Vec<f64>> {
    let m = a.rows();
    check_vec("phi2", phi2, m)?;
    let solver = NormalSolver::new(a, BackendChoice::Direct);
    let mut w = vec![1.0 + p.beta; m];
    let mut last_step = vec![0.0; m];
    let mut damp = 1.0;
    for _ in 0..100_000 {
        let v: Vec<f64> = w.iter().map(|x| x.powf(-p.alpha)).collect();
        let s = sigma_rows(&solver, phi2, &v, LeverageMethod::Exact, 0.0, 0)?;
        let mut change: f64 = 0.0;
        let next: Vec<f64> = (0..m)
            .map(|i| {
                let t = s[i] + p.beta;
                change = change.max((t - w[i]).abs());
                t
            })
            .collect();
        if change <= tol {
            return Ok(next);
        }
        if (0..m).any(|i| (next[i] - w[i]) * last_step[i] < 0.0) {
            damp = 0.5;
        }
        for i in 0..m {
            last_step[i] = next[i] - w[i];
            w[i] += damp * last_step[i];
        }
    }
    Err(Error::NoConvergence("weight oracle exceeded 1e5 iterations".into()))
}
