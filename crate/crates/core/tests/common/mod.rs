#![allow(dead_code)]

use ipm_core::barrier::{make_barrier, Barrier1D, Bound};
use ipm_core::centering::{mixed_norm, Engine, PathPoint};
use ipm_core::flow::FlowNetwork;
use ipm_core::linalg::{BackendChoice, SparseMat};
use ipm_core::pathfollow::BoxedLP;
use ipm_core::weights::{weight_function_oracle, weight_params, WeightParams};
use ipm_core::Mode;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dense(a: &SparseMat) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.rows(), a.cols());
    for (i, j, v) in a.triplets() {
        d[(i, j)] += v;
    }
    d
}

pub fn random_matrix(r: &mut ChaCha8Rng, m: usize, n: usize) -> SparseMat {
    let mut trip = Vec::new();
    for i in 0..m {
        for j in 0..n {
            trip.push((i, j, r.gen_range(-1.0..1.0)));
        }
    }
    SparseMat::from_triplets(m, n, &trip).unwrap()
}

/// Sparse random matrix with an identity block on top, so it has full column rank.
pub fn random_sparse_full_rank(r: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> SparseMat {
    let mut trip: Vec<(usize, usize, f64)> = (0..n).map(|j| (j, j, 1.0 + r.gen_range(0.0..1.0))).collect();
    for i in n..m {
        for j in 0..n {
            if r.gen_bool(density) {
                trip.push((i, j, r.gen_range(-2.0..2.0)));
            }
        }
    }
    SparseMat::from_triplets(m, n, &trip).unwrap()
}

pub fn positive_vec(r: &mut ChaCha8Rng, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..m).map(|_| r.gen_range(lo.ln()..hi.ln()).exp()).collect()
}

pub fn normal_vec(r: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// Dense `LDLᵀ` without pivoting.
pub struct DenseLdl {
    l: DMatrix<f64>,
    d: Vec<f64>,
}

impl DenseLdl {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut l = DMatrix::identity(n, n);
        let mut d = vec![0.0; n];
        for j in 0..n {
            let mut s = m[(j, j)];
            for k in 0..j {
                s -= l[(j, k)] * l[(j, k)] * d[k];
            }
            d[j] = s;
            for i in j + 1..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)] * d[k];
                }
                l[(i, j)] = s / d[j];
            }
        }
        DenseLdl { l, d }
    }

    pub fn solve(&self, q: &[f64]) -> Vec<f64> {
        let n = q.len();
        let mut y = q.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[(i, k)] * y[k];
            }
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.l[(k, i)] * y[k];
            }
        }
        y
    }

    pub fn log_det(&self) -> f64 {
        self.d.iter().map(|v| v.ln()).sum()
    }
}

/// `AᵀDA`.
pub fn normal_matrix(a: &SparseMat, d: &[f64]) -> DMatrix<f64> {
    let ad = dense(a);
    let dd = DMatrix::from_diagonal(&DVector::from_column_slice(d));
    ad.transpose() * dd * ad
}

pub fn dense_solve(a: &SparseMat, d: &[f64], q: &[f64]) -> Vec<f64> {
    DenseLdl::new(&normal_matrix(a, d)).solve(q)
}

/// `D^{1/2}A(AᵀDA)^{−1}AᵀD^{1/2}`.
pub fn projection(a: &SparseMat, d: &[f64]) -> DMatrix<f64> {
    let ad = dense(a);
    let sq = DMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|v| v.sqrt())));
    let b = &sq * &ad;
    let m = normal_matrix(a, d);
    let inv = m.try_inverse().unwrap();
    &b * inv * b.transpose()
}

pub fn dense_leverage(a: &SparseMat, d: &[f64]) -> Vec<f64> {
    let p = projection(a, d);
    (0..d.len()).map(|i| p[(i, i)]).collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn w_norm(y: &[f64], w: &[f64]) -> f64 {
    y.iter().zip(w).map(|(a, b)| b * a * a).sum::<f64>().sqrt()
}

/// Ball-box maximization by bisection on the KKT multiplier:
/// `x_i = sign(a_i)·min(l_i, |a_i|/λ)` with `‖x‖₂ = 1` or `λ = 0`.
pub fn ball_box_oracle(a: &[f64], l: &[f64]) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> {
        a.iter()
            .zip(l)
            .map(|(ai, li)| if lam == 0.0 { ai.signum() * li } else { ai.signum() * li.min(ai.abs() / lam) })
            .collect()
    };
    if a.iter().all(|v| *v == 0.0) {
        return vec![0.0; a.len()];
    }
    let full: Vec<f64> = a.iter().zip(l).map(|(ai, li)| if *ai == 0.0 { 0.0 } else { *li }).collect();
    if norm2(&full) <= 1.0 {
        return at(0.0);
    }
    let (mut lo, mut hi) = (0.0, norm2(a));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm2(&at(mid)) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi)
}

/// `max ⟨a,x⟩` over `‖x‖₂ + ‖x/l‖_∞ ≤ 1` by golden-section search over the
/// split `t` between the two norms.
pub fn mixed_ball_oracle_value(a: &[f64], l: &[f64]) -> f64 {
    let h = |t: f64| -> f64 {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        let lt: Vec<f64> = l.iter().map(|v| v * t / (1.0 - t)).collect();
        (1.0 - t) * dot(a, &ball_box_oracle(a, &lt))
    };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (h(x1), h(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = h(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = h(x1);
        }
    }
    f1.max(f2)
}

/// Central-cut ellipsoid method for a convex function with subgradients.
pub fn ellipsoid_min(
    f: &dyn Fn(&[f64]) -> (f64, Vec<f64>),
    center: &[f64],
    radius: f64,
    iters: usize,
) -> (f64, Vec<f64>) {
    let n = center.len();
    let (f0, _) = f(center);
    let (mut best, mut best_x) = (f0, center.to_vec());
    if n == 1 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (center[0] - radius, center[0] + radius);
        for _ in 0..iters.min(300) {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            let (f1, f2) = (f(&[x1]).0, f(&[x2]).0);
            if f1 < best {
                best = f1;
                best_x = vec![x1];
            }
            if f2 < best {
                best = f2;
                best_x = vec![x2];
            }
            if f1 < f2 {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        return (best, best_x);
    }
    let nf = n as f64;
    let mut x = DVector::from_column_slice(center);
    let mut p = DMatrix::identity(n, n) * (radius * radius);
    for _ in 0..iters {
        let (fx, g) = f(x.as_slice());
        if fx < best {
            best = fx;
            best_x = x.as_slice().to_vec();
        }
        let g = DVector::from_column_slice(&g);
        let pg = &p * &g;
        let gpg = g.dot(&pg);
        if !(gpg > 1e-300) {
            break;
        }
        let gt = &pg / gpg.sqrt();
        x -= &gt / (nf + 1.0);
        p = (&p - (&gt * gt.transpose()) * (2.0 / (nf + 1.0))) * (nf * nf / (nf * nf - 1.0));
        p = (&p + p.transpose()) * 0.5;
    }
    (best, best_x)
}

/// True centrality `min_η ‖(∇f − Aη)/(w√φ'')‖_{w+∞}` by the ellipsoid method.
pub fn true_delta(a: &SparseMat, grad: &[f64], w: &[f64], phi2: &[f64], c_norm: f64) -> f64 {
    let m = a.rows();
    let ad = dense(a);
    let scale: Vec<f64> = (0..m).map(|i| 1.0 / (w[i] * phi2[i].sqrt())).collect();
    let resid = |eta: &[f64]| -> Vec<f64> {
        let e = DVector::from_column_slice(eta);
        let ae = &ad * e;
        (0..m).map(|i| (grad[i] - ae[i]) * scale[i]).collect()
    };
    let f = |eta: &[f64]| -> (f64, Vec<f64>) {
        let r = resid(eta);
        let (mut imax, mut vmax) = (0, 0.0f64);
        for (i, v) in r.iter().enumerate() {
            if v.abs() > vmax {
                vmax = v.abs();
                imax = i;
            }
        }
        let wn = w_norm(&r, w);
        let n = ad.ncols();
        let mut g = vec![0.0; n];
        for j in 0..n {
            g[j] -= r[imax].signum() * ad[(imax, j)] * scale[imax];
            if wn > 0.0 {
                let mut s = 0.0;
                for i in 0..m {
                    s += w[i] * r[i] * ad[(i, j)] * scale[i];
                }
                g[j] -= c_norm * s / wn;
            }
        }
        (vmax + c_norm * wn, g)
    };
    let d: Vec<f64> = (0..m).map(|i| 1.0 / (w[i] * phi2[i])).collect();
    let rhs: Vec<f64> = {
        let mut v = vec![0.0; ad.ncols()];
        for j in 0..ad.ncols() {
            for i in 0..m {
                v[j] += ad[(i, j)] * d[i] * grad[i];
            }
        }
        v
    };
    let nm = normal_matrix(a, &d);
    let eta0 = DenseLdl::new(&nm).solve(&rhs);
    let (f0, _) = f(&eta0);
    let r0 = resid(&eta0);
    let lam_min = nm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    let radius = 1.5 * (f0 / c_norm + w_norm(&r0, w)) / lam_min.sqrt() + 1e-12;
    let iters = 400 * ad.ncols() * ad.ncols() + 400;
    ellipsoid_min(&f, &eta0, radius, iters).0
}

/// Dense `Aᵀx − b`.
pub fn residual(lp: &BoxedLP, x: &[f64]) -> Vec<f64> {
    lp.residual(x)
}

/// Brute-force LP optimum by enumerating basic solutions.
pub fn vertex_enumeration(lp: &BoxedLP) -> Option<(f64, Vec<f64>)> {
    let (m, n) = (lp.m(), lp.n());
    let ad = dense(&lp.a);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let nonbasic: Vec<usize> = (0..m).filter(|i| !subset.contains(i)).collect();
        let ab = DMatrix::from_fn(n, n, |r, c| ad[(subset[c], r)]);
        if let Some(lu) = Some(ab.clone().lu()).filter(|lu| lu.determinant().abs() > 1e-10) {
            let choices: Vec<Vec<f64>> = nonbasic
                .iter()
                .map(|&i| {
                    let mut v = Vec::new();
                    if let Bound::Finite(l) = lp.lower[i] {
                        v.push(l);
                    }
                    if let Bound::Finite(u) = lp.upper[i] {
                        v.push(u);
                    }
                    v
                })
                .collect();
            if choices.iter().all(|c| !c.is_empty()) {
                let mut idx = vec![0usize; nonbasic.len()];
                loop {
                    let mut x = vec![0.0; m];
                    for (k, &i) in nonbasic.iter().enumerate() {
                        x[i] = choices[k][idx[k]];
                    }
                    let rhs = DVector::from_iterator(
                        n,
                        (0..n).map(|j| lp.b[j] - nonbasic.iter().map(|&i| ad[(i, j)] * x[i]).sum::<f64>()),
                    );
                    if let Some(xb) = lu.solve(&rhs) {
                        for (k, &i) in subset.iter().enumerate() {
                            x[i] = xb[k];
                        }
                        let ok = (0..m).all(|i| {
                            x[i] >= lp.lower[i].as_lower() - 1e-9 * (1.0 + x[i].abs())
                                && x[i] <= lp.upper[i].as_upper() + 1e-9 * (1.0 + x[i].abs())
                        });
                        if ok {
                            let obj = dot(&lp.c, &x);
                            if best.as_ref().map_or(true, |(b, _)| obj < *b) {
                                best = Some((obj, x));
                            }
                        }
                    }
                    let mut k = 0;
                    loop {
                        if k == idx.len() {
                            break;
                        }
                        idx[k] += 1;
                        if idx[k] < choices[k].len() {
                            break;
                        }
                        idx[k] = 0;
                        k += 1;
                    }
                    if k == idx.len() {
                        break;
                    }
                }
            }
        }
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if subset[k] < m - n + k {
                subset[k] += 1;
                for j in k + 1..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Random bounded, feasible LP with a strictly interior start. One-sided
/// variables get costs pointing into their finite bound.
pub fn random_lp(r: &mut ChaCha8Rng, m: usize, n: usize) -> (BoxedLP, Vec<f64>) {
    loop {
        let a = random_matrix(r, m, n);
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut x0 = Vec::new();
        let mut c = Vec::new();
        for _ in 0..m {
            let kind = r.gen_range(0..4);
            let l = r.gen_range(-2.0..1.0);
            let width = r.gen_range(0.5..3.0);
            match kind {
                0 => {
                    lower.push(Bound::Finite(l));
                    upper.push(Bound::Infinite);
                    x0.push(l + r.gen_range(0.1..2.0));
                    c.push(r.gen_range(0.1..1.0));
                }
                1 => {
                    lower.push(Bound::Infinite);
                    upper.push(Bound::Finite(l + width));
                    x0.push(l + width - r.gen_range(0.1..2.0));
                    c.push(-r.gen_range(0.1..1.0));
                }
                _ => {
                    lower.push(Bound::Finite(l));
                    upper.push(Bound::Finite(l + width));
                    x0.push(l + width * r.gen_range(0.1..0.9));
                    c.push(r.gen_range(-1.0..1.0));
                }
            }
        }
        let b = a.tmul_vec(&x0);
        if let Ok(lp) = BoxedLP::new(a, b, c, lower, upper) {
            return (lp, x0);
        }
    }
}

pub fn random_barrier(r: &mut ChaCha8Rng) -> Barrier1D {
    let l = r.gen_range(-5.0..5.0);
    let w = r.gen_range(0.1..10.0);
    match r.gen_range(0..3) {
        0 => make_barrier(Bound::Finite(l), Bound::Infinite).unwrap(),
        1 => make_barrier(Bound::Infinite, Bound::Finite(l)).unwrap(),
        _ => make_barrier(Bound::Finite(l), Bound::Finite(l + w)).unwrap(),
    }
}

/// Interior point at a random relative position, avoiding the guard zone.
pub fn random_interior(r: &mut ChaCha8Rng, b: &Barrier1D) -> f64 {
    let (l, u) = (b.l, b.u);
    if l.is_finite() && u.is_finite() {
        l + (u - l) * r.gen_range(0.001..0.999)
    } else if l.is_finite() {
        l + r.gen_range(-6.0f64..3.0).exp()
    } else {
        u - r.gen_range(-6.0f64..3.0).exp()
    }
}

/// Bounded-variable primal simplex with Bland's rule, started from a given
/// feasible basis; nonbasic variables sit at the bound selected by `at_upper`.
pub fn bounded_simplex(
    c: &[f64],
    a: &DMatrix<f64>,
    b: &[f64],
    l: &[f64],
    u: &[f64],
    basis: Vec<usize>,
    at_upper: Vec<bool>,
) -> (f64, Vec<f64>, Vec<usize>, Vec<bool>) {
    let (k, nv) = (a.nrows(), a.ncols());
    let mut basis = basis;
    let mut at_upper = at_upper;
    let tol = 1e-9;
    for _ in 0..100_000 {
        let bm = DMatrix::from_fn(k, k, |r, cc| a[(r, basis[cc])]);
        let binv = bm.try_inverse().expect("basis stays nonsingular");
        let mut x = vec![0.0; nv];
        for j in 0..nv {
            if !basis.contains(&j) {
                x[j] = if at_upper[j] { u[j] } else { l[j] };
            }
        }
        let rhs = DVector::from_iterator(k, (0..k).map(|r| b[r] - (0..nv).map(|j| a[(r, j)] * x[j]).sum::<f64>()));
        let xb = &binv * rhs;
        for (i, &j) in basis.iter().enumerate() {
            x[j] = xb[i];
        }
        let cb = DVector::from_iterator(k, basis.iter().map(|&j| c[j]));
        let y = binv.transpose() * cb;
        let entering = (0..nv).filter(|j| !basis.contains(j)).find(|&j| {
            let d = c[j] - (0..k).map(|r| a[(r, j)] * y[r]).sum::<f64>();
            (!at_upper[j] && d < -tol && u[j] > l[j]) || (at_upper[j] && d > tol)
        });
        let Some(e) = entering else {
            return (dot(c, &x), x, basis, at_upper);
        };
        let dir = if at_upper[e] { -1.0 } else { 1.0 };
        let col = DVector::from_iterator(k, (0..k).map(|r| a[(r, e)]));
        let delta = &binv * col;
        let mut step = u[e] - l[e];
        let mut leave: Option<(usize, bool)> = None;
        for (i, &j) in basis.iter().enumerate() {
            let dxj = -dir * delta[i];
            let room = if dxj > tol {
                (u[j] - x[j]) / dxj
            } else if dxj < -tol {
                (x[j] - l[j]) / (-dxj)
            } else {
                continue;
            };
            let room = room.max(0.0);
            if room < step - 1e-12 || (room <= step + 1e-12 && leave.map_or(false, |(li, _)| j < basis[li])) {
                step = room;
                leave = Some((i, dxj > 0.0));
            }
        }
        match leave {
            None => {
                assert!(step.is_finite(), "unbounded LP");
                at_upper[e] = !at_upper[e];
            }
            Some((i, to_upper)) => {
                let out = basis[i];
                at_upper[out] = to_upper;
                basis[i] = e;
                at_upper[e] = false;
            }
        }
    }
    panic!("simplex did not terminate");
}

/// Maximum s-t flow by shortest augmenting paths.
pub fn edmonds_karp(net: &FlowNetwork) -> i64 {
    let n = net.n;
    let mut cap = vec![vec![0i64; n]; n];
    for e in &net.edges {
        cap[e.tail][e.head] += e.cap;
    }
    let mut total = 0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[net.source] = net.source;
        let mut q = VecDeque::from([net.source]);
        while let Some(v) = q.pop_front() {
            for u in 0..n {
                if prev[u] == usize::MAX && cap[v][u] > 0 {
                    prev[u] = v;
                    q.push_back(u);
                }
            }
        }
        if prev[net.sink] == usize::MAX {
            return total;
        }
        let mut bottleneck = i64::MAX;
        let mut v = net.sink;
        while v != net.source {
            bottleneck = bottleneck.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = net.sink;
        while v != net.source {
            cap[prev[v]][v] -= bottleneck;
            cap[v][prev[v]] += bottleneck;
            v = prev[v];
        }
        total += bottleneck;
    }
}

/// Minimum cost maximum flow by successive shortest paths (Bellman–Ford).
pub fn successive_shortest_paths(net: &FlowNetwork) -> (i64, i64) {
    let n = net.n;
    let mut to = Vec::new();
    let mut cap = Vec::new();
    let mut cost = Vec::new();
    let mut adj = vec![Vec::new(); n];
    for e in &net.edges {
        adj[e.tail].push(to.len());
        to.push(e.head);
        cap.push(e.cap);
        cost.push(e.cost);
        adj[e.head].push(to.len());
        to.push(e.tail);
        cap.push(0);
        cost.push(-e.cost);
    }
    let (mut flow, mut total) = (0, 0);
    loop {
        let mut dist = vec![i64::MAX; n];
        let mut via = vec![usize::MAX; n];
        dist[net.source] = 0;
        for _ in 0..n {
            let mut changed = false;
            for v in 0..n {
                if dist[v] == i64::MAX {
                    continue;
                }
                for &k in &adj[v] {
                    if cap[k] > 0 && dist[v] + cost[k] < dist[to[k]] {
                        dist[to[k]] = dist[v] + cost[k];
                        via[to[k]] = k;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[net.sink] == i64::MAX {
            return (flow, total);
        }
        let mut push = i64::MAX;
        let mut v = net.sink;
        while v != net.source {
            let k = via[v];
            push = push.min(cap[k]);
            v = to[k ^ 1];
        }
        let mut v = net.sink;
        while v != net.source {
            let k = via[v];
            cap[k] -= push;
            cap[k ^ 1] += push;
            v = to[k ^ 1];
        }
        flow += push;
        total += push * dist[net.sink];
    }
}

/// Random barriers with an interior point kept away from the boundaries.
pub fn random_point(r: &mut ChaCha8Rng, m: usize) -> (Vec<Barrier1D>, Vec<f64>) {
    let bars: Vec<Barrier1D> = (0..m).map(|_| random_barrier(r)).collect();
    let x = bars
        .iter()
        .map(|b| {
            if b.l.is_finite() && b.u.is_finite() {
                b.l + (b.u - b.l) * r.gen_range(0.1..0.9)
            } else {
                random_interior(r, b).clamp(b.l + 0.1, b.u - 0.1)
            }
        })
        .collect();
    (bars, x)
}

/// Two-phase bounded simplex for `min cᵀx`, `Mx = b`, `l ≤ x ≤ u` with `M`
/// dense `k × nv` and every variable having at least one finite bound.
pub fn two_phase_simplex(c: &[f64], mat: &DMatrix<f64>, b: &[f64], l: &[f64], u: &[f64]) -> Option<(f64, Vec<f64>)> {
    let (k, nv) = (mat.nrows(), mat.ncols());
    let at_upper: Vec<bool> = (0..nv).map(|j| !l[j].is_finite()).collect();
    let start: Vec<f64> = (0..nv).map(|j| if at_upper[j] { u[j] } else { l[j] }).collect();
    let r: Vec<f64> = (0..k).map(|i| b[i] - (0..nv).map(|j| mat[(i, j)] * start[j]).sum::<f64>()).collect();
    let big = DMatrix::from_fn(k, nv + k, |i, j| {
        if j < nv {
            mat[(i, j)]
        } else if j - nv == i {
            if r[i] >= 0.0 { 1.0 } else { -1.0 }
        } else {
            0.0
        }
    });
    let mut c1 = vec![0.0; nv + k];
    for v in c1.iter_mut().skip(nv) {
        *v = 1.0;
    }
    let mut l1 = l.to_vec();
    l1.extend(std::iter::repeat(0.0).take(k));
    let mut u1 = u.to_vec();
    u1.extend(std::iter::repeat(f64::INFINITY).take(k));
    let mut up1 = at_upper.clone();
    up1.extend(std::iter::repeat(false).take(k));
    let basis: Vec<usize> = (nv..nv + k).collect();
    let (infeas, _, basis, up) = bounded_simplex(&c1, &big, b, &l1, &u1, basis, up1);
    let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if infeas > 1e-7 * scale {
        return None;
    }
    let mut c2 = c.to_vec();
    c2.extend(std::iter::repeat(0.0).take(k));
    for j in nv..nv + k {
        u1[j] = 0.0;
    }
    let (obj, x, _, _) = bounded_simplex(&c2, &big, b, &l1, &u1, basis, up);
    Some((obj, x[..nv].to_vec()))
}

/// [`two_phase_simplex`] on a [`BoxedLP`].
pub fn simplex_lp(lp: &BoxedLP) -> Option<(f64, Vec<f64>)> {
    let mat = dense(&lp.a).transpose();
    let l: Vec<f64> = lp.lower.iter().map(|b| b.as_lower()).collect();
    let u: Vec<f64> = lp.upper.iter().map(|b| b.as_upper()).collect();
    two_phase_simplex(&lp.c, &mat, &lp.b, &l, &u)
}

pub struct Case {
    pub engine: Engine,
    pub point: PathPoint,
    pub c: Vec<f64>,
    pub g: Vec<f64>,
}

pub fn engine_for(a: &SparseMat, bars: &[Barrier1D], x: &[f64], p: WeightParams) -> Engine {
    let b = a.tmul_vec(x);
    Engine::new(a, &b, bars, p, 1e-13, BackendChoice::Direct).unwrap()
}

/// Instance whose centrality residual is `r` scaled to mixed norm `delta`
/// and whose weights lie within `spread` of the weight function.
pub fn case(r: &mut ChaCha8Rng, m: usize, n: usize, mode: Mode, delta: f64, spread: f64) -> Case {
    let a = random_matrix(r, m, n);
    let (bars, x) = random_point(r, m);
    let p = weight_params(m, n, mode).unwrap();
    let c_norm = p.c_norm;
    let engine = engine_for(&a, &bars, &x, p);
    let phi2: Vec<f64> = x.iter().zip(&bars).map(|(v, b)| b.eval(*v).unwrap().d2).collect();
    let phi1: Vec<f64> = x.iter().zip(&bars).map(|(v, b)| b.eval(*v).unwrap().d1).collect();
    let g = weight_function_oracle(&a, &phi2, &engine.params, 1e-13).unwrap();
    let w: Vec<f64> = g.iter().map(|v| v * (spread * r.gen_range(-1.0..1.0f64)).exp()).collect();
    let eta0 = normal_vec(r, n);
    let ae = a.mul_vec(&eta0);
    let mut res = normal_vec(r, m);
    let size = mixed_norm(&res, &w, c_norm);
    for v in res.iter_mut() {
        *v *= delta / size;
    }
    let t = 1.0;
    let c: Vec<f64> = (0..m).map(|i| (-w[i] * phi1[i] + ae[i] + res[i] * w[i] * phi2[i].sqrt()) / t).collect();
    let point = PathPoint::new(&engine, x, w, t, eta0).unwrap();
    Case { engine, point, c, g }
}

pub fn oracle_delta(cs: &Case, point: &PathPoint) -> f64 {
    true_delta(&cs.engine.a, &point.gradient(&cs.c), &point.w, &point.phi2(), cs.engine.params.c_norm)
}

pub struct Setting {
    pub a: SparseMat,
    pub bars: Vec<Barrier1D>,
    pub x: Vec<f64>,
}

pub fn setting(seed: u64, m: usize, n: usize) -> Setting {
    let mut r = rng(seed);
    let a = random_matrix(&mut r, m, n);
    let (bars, x) = random_point(&mut r, m);
    Setting { a, bars, x }
}

pub fn derivs(s: &Setting, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d: Vec<_> = s.bars.iter().zip(x).map(|(b, v)| b.eval(*v).unwrap()).collect();
    (d.iter().map(|v| v.d2).collect(), d.iter().map(|v| v.d3).collect())
}

/// `B = G⁻¹G'Φ''^{−1/2}` with `G' = −G(G+αΛ)⁻¹ΛΦ''⁻¹Φ'''`.
pub fn jacobian_parts(s: &Setting, p: &WeightParams) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let m = s.x.len();
    let (phi2, phi3) = derivs(s, &s.x);
    let g = weight_function_oracle(&s.a, &phi2, p, 1e-13).unwrap();
    let d: Vec<f64> = (0..m).map(|i| g[i].powf(-p.alpha) / phi2[i]).collect();
    let proj = projection(&s.a, &d);
    let lam = DMatrix::from_fn(m, m, |i, j| if i == j { proj[(i, i)] } else { 0.0 } - proj[(i, j)] * proj[(i, j)]);
    let gm = DMatrix::from_diagonal(&DVector::from_column_slice(&g));
    let inner = (&gm + &lam * p.alpha).try_inverse().unwrap();
    let scale = DMatrix::from_diagonal(&DVector::from_iterator(m, (0..m).map(|i| phi3[i] / phi2[i])));
    let gprime = -(&gm * &inner * &lam * &scale);
    let ginv = DMatrix::from_diagonal(&DVector::from_iterator(m, g.iter().map(|v| 1.0 / v)));
    let isq = DMatrix::from_diagonal(&DVector::from_iterator(m, phi2.iter().map(|v| 1.0 / v.sqrt())));
    let b = &ginv * &gprime * isq;
    (g, gprime, b)
}

