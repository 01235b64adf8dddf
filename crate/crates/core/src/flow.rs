//! Generalized minimum cost flow through a penalized boxed LP, maximum flow
//! and minimum cost flow frontends, and integral rounding.

use crate::barrier::Bound;
use crate::error::{Error, Result};
use crate::linalg::SparseMat;
use crate::pathfollow::{lp_solve, BoxedLP, SolveReport, SolverConfig};
use crate::Mode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// Largest objective gap handed to the LP solver by the exact frontends.
pub const EXACT_LP_EPS: f64 = 0.25;
/// Distance to the nearest integer below which a flow value counts as integral.
pub const INTEGRAL_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowEdge {
    pub tail: usize,
    pub head: usize,
    pub cap: i64,
    pub cost: i64,
    /// Multiplier `gamma_num / gamma_den`, in `(0, 1]`.
    pub gamma_num: i64,
    pub gamma_den: i64,
}

impl FlowEdge {
    pub fn new(tail: usize, head: usize, cap: i64, cost: i64) -> Self {
        FlowEdge { tail, head, cap, cost, gamma_num: 1, gamma_den: 1 }
    }

    pub fn lossy(tail: usize, head: usize, cap: i64, cost: i64, gamma_num: i64, gamma_den: i64) -> Self {
        FlowEdge { tail, head, cap, cost, gamma_num, gamma_den }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_num as f64 / self.gamma_den as f64
    }

    pub fn is_unit_gain(&self) -> bool {
        self.gamma_num == self.gamma_den
    }
}

/// Directed multigraph on vertices `0..n` with a source and a sink.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowNetwork {
    pub n: usize,
    pub edges: Vec<FlowEdge>,
    pub source: usize,
    pub sink: usize,
}

impl FlowNetwork {
    pub fn new(n: usize, edges: Vec<FlowEdge>, source: usize, sink: usize) -> Result<Self> {
        let net = FlowNetwork { n, edges, source, sink };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::MalformedNetwork(msg));
        if self.n < 2 {
            return bad(format!("need at least 2 vertices, got {}", self.n));
        }
        if self.source >= self.n || self.sink >= self.n || self.source == self.sink {
            return bad(format!("invalid terminals s = {}, t = {}", self.source, self.sink));
        }
        if self.edges.is_empty() {
            return bad("network has no edges".into());
        }
        for (k, e) in self.edges.iter().enumerate() {
            if e.tail >= self.n || e.head >= self.n {
                return bad(format!("edge {k} has an endpoint outside 0..{}", self.n));
            }
            if e.tail == e.head {
                return bad(format!("edge {k} is a self-loop"));
            }
            if e.cap < 1 {
                return bad(format!("edge {k} has capacity {}", e.cap));
            }
            if e.gamma_num < 1 || e.gamma_den < 1 || e.gamma_num > e.gamma_den {
                return bad(format!("edge {k} has multiplier {}/{} outside (0, 1]", e.gamma_num, e.gamma_den));
            }
        }
        let mut seen = vec![false; self.n];
        let adj = self.undirected_adjacency();
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(u, _) in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Disconnected);
        }
        Ok(())
    }

    fn undirected_adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.tail].push((e.head, k));
            adj[e.head].push((e.tail, k));
        }
        adj
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// `U = max(c_e, |q_e|, multiplier numerators and denominators, 1)`.
    pub fn width(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.cap.max(e.cost.abs()).max(e.gamma_num).max(e.gamma_den))
            .max()
            .unwrap_or(1)
            .max(1) as f64
    }

    pub fn is_unit_gain(&self) -> bool {
        self.edges.iter().all(FlowEdge::is_unit_gain)
    }

    /// Column index of vertex `v` in the incidence matrix (the source has none).
    pub fn column_of(&self, v: usize) -> Option<usize> {
        match v.cmp(&self.source) {
            std::cmp::Ordering::Less => Some(v),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(v - 1),
        }
    }

    /// `Σ_in γf − Σ_out f` per vertex.
    pub fn net_inflow(&self, flow: &[f64]) -> Vec<f64> {
        let mut ex = vec![0.0; self.n];
        for (e, f) in self.edges.iter().zip(flow) {
            ex[e.head] += e.gamma() * f;
            ex[e.tail] -= f;
        }
        ex
    }

    pub fn cost_of(&self, flow: &[f64]) -> f64 {
        self.edges.iter().zip(flow).map(|(e, f)| e.cost as f64 * f).sum()
    }

    /// Largest conservation violation over the non-terminal vertices.
    pub fn conservation_residual(&self, flow: &[f64]) -> f64 {
        self.net_inflow(flow)
            .iter()
            .enumerate()
            .filter(|(v, _)| *v != self.source && *v != self.sink)
            .fold(0.0f64, |a, (_, r)| a.max(r.abs()))
    }
}

/// Edge-vertex incidence with `+γ_e` at the head and `−1` at the tail, over
/// the vertices other than the source.
pub fn build_incidence(net: &FlowNetwork) -> Result<SparseMat> {
    net.validate()?;
    let mut trip = Vec::with_capacity(2 * net.m());
    for (k, e) in net.edges.iter().enumerate() {
        if let Some(h) = net.column_of(e.head) {
            trip.push((k, h, e.gamma()));
        }
        if let Some(t) = net.column_of(e.tail) {
            trip.push((k, t, -1.0));
        }
    }
    SparseMat::from_triplets(net.m(), net.n - 1, &trip)
}

/// The penalized LP `min qᵀx + M(1ᵀy + 1ᵀz)` subject to `Ax + y − z = F·1_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedLP {
    pub lp: BoxedLP,
    pub x0: Vec<f64>,
    pub penalty: f64,
    pub target: f64,
    pub edges: usize,
    pub vertices: usize,
}

impl ReducedLP {
    pub fn flow_part<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[..self.edges]
    }

    /// `Σ y + Σ z`.
    pub fn slack_mass(&self, x: &[f64]) -> f64 {
        x[self.edges..].iter().sum()
    }
}

/// `256m⁵U⁵/ε²`.
pub fn paper_penalty(m: usize, u: f64, eps: f64) -> f64 {
    256.0 * (m as f64).powi(5) * u.powi(5) / (eps * eps)
}

/// Dual-bound penalty `2(1 + Σ|q_e|)(1/γ_min)^{n−1} + 1`.
pub fn exact_penalty(net: &FlowNetwork) -> f64 {
    let q: f64 = net.edges.iter().map(|e| e.cost.abs() as f64).sum();
    let gmin = net.edges.iter().map(FlowEdge::gamma).fold(1.0f64, f64::min);
    2.0 * (1.0 + q) * (1.0 / gmin).powi(net.n as i32 - 1) + 1.0
}

/// Smallest eps accepted in practical mode, `1e−3/(m³U³)`.
pub fn min_eps(net: &FlowNetwork) -> f64 {
    1e-3 / ((net.m() as f64).powi(3) * net.width().powi(3))
}

pub fn build_flow_lp(net: &FlowNetwork, f: f64, eps: f64, mode: Mode) -> Result<ReducedLP> {
    let a = build_incidence(net)?;
    let (m, nv) = (net.m(), net.n - 1);
    let u = net.width();
    let mf = m as f64;
    let fmax = mf * u * u;
    if !(f >= 0.0 && f <= fmax) {
        return Err(Error::BadTarget { f, max: fmax });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    if mode == Mode::Practical && eps < min_eps(net) {
        return Err(Error::MinEps { eps, min: min_eps(net) });
    }
    let penalty = match mode {
        Mode::Paper => paper_penalty(m, u, eps),
        Mode::Practical => paper_penalty(m, u, eps).min(exact_penalty(net)),
    };
    let ident = SparseMat::identity(nv);
    let neg = ident.scale_rows(&vec![-1.0; nv]);
    let full = SparseMat::vstack(&[&a, &ident, &neg])?;
    let tcol = net.column_of(net.sink).expect("sink differs from source");
    let mut b = vec![0.0; nv];
    b[tcol] = f;

    let slack_cap = 4.0 * mf * u * u;
    let mid = 2.0 * mf * u * u;
    let x_half: Vec<f64> = net.edges.iter().map(|e| e.cap as f64 / 2.0).collect();
    let r = a.tmul_vec(&x_half);
    let y: Vec<f64> = (0..nv).map(|v| mid + (-r[v]).max(0.0) + if v == tcol { f } else { 0.0 }).collect();
    let z: Vec<f64> = (0..nv).map(|v| mid + r[v].max(0.0)).collect();

    let mut c: Vec<f64> = net.edges.iter().map(|e| e.cost as f64).collect();
    c.extend(std::iter::repeat(penalty).take(2 * nv));
    let lower = vec![Bound::Finite(0.0); m + 2 * nv];
    let mut upper: Vec<Bound> = net.edges.iter().map(|e| Bound::Finite(e.cap as f64)).collect();
    upper.extend(std::iter::repeat(Bound::Finite(slack_cap)).take(2 * nv));
    let lp = BoxedLP::new(full, b, c, lower, upper)?;
    let mut x0 = x_half;
    x0.extend(y);
    x0.extend(z);
    Ok(ReducedLP { lp, x0, penalty, target: f, edges: m, vertices: nv })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSolution {
    pub flow: Vec<f64>,
    /// Rounded flow, when the frontend is exact.
    pub integral: Option<Vec<i64>>,
    /// Net flow delivered at the sink.
    pub value: f64,
    pub cost: f64,
    pub approximate: bool,
    pub eps: f64,
    pub report: SolveReport,
}

fn solve_reduced(red: &ReducedLP, eps: f64, cfg: &SolverConfig, seed: u64) -> Result<(Vec<f64>, SolveReport)> {
    let (x, report) = lp_solve(&red.lp, &red.x0, eps, cfg, seed)?;
    let mass = red.slack_mass(&x);
    if mass >= eps {
        return Err(Error::TargetInfeasible(mass));
    }
    Ok((x, report))
}

/// ε-approximate generalized minimum cost flow delivering `f` units at the sink.
pub fn solve_generalized_mcf(net: &FlowNetwork, f: f64, eps: f64, cfg: &SolverConfig, seed: u64) -> Result<FlowSolution> {
    let red = build_flow_lp(net, f, eps, cfg.mode)?;
    let (x, report) = solve_reduced(&red, eps, cfg, seed)?;
    let flow = red.flow_part(&x).to_vec();
    let value = net.net_inflow(&flow)[net.sink];
    Ok(FlowSolution { cost: net.cost_of(&flow), flow, integral: None, value, approximate: true, eps, report })
}

/// Largest deliverable generalized flow, by bisection on the target.
/// Experimental.
pub fn generalized_max_flow_value(net: &FlowNetwork, eps: f64, cfg: &SolverConfig, seed: u64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, net.edges.iter().filter(|e| e.head == net.sink).map(|e| e.cap as f64 * e.gamma()).sum::<f64>());
    while hi - lo > eps {
        let mid = 0.5 * (lo + hi);
        match solve_generalized_mcf(net, mid, eps, cfg, seed) {
            Ok(_) => lo = mid,
            Err(Error::TargetInfeasible(_)) => hi = mid,
            Err(e) => return Err(e),
        }
    }
    Ok(lo)
}

fn circulation(net: &FlowNetwork, return_cost: i64, zero_costs: bool) -> Result<FlowNetwork> {
    if !net.is_unit_gain() {
        return Err(Error::InvalidArgument("standard flow frontends need unit multipliers".into()));
    }
    net.validate()?;
    let back_cap = net.m() as i64 * net.width() as i64 + 1;
    let mut edges: Vec<FlowEdge> = net
        .edges
        .iter()
        .map(|e| FlowEdge { cost: if zero_costs { 0 } else { e.cost }, ..e.clone() })
        .collect();
    edges.push(FlowEdge::new(net.sink, net.source, back_cap, return_cost));
    FlowNetwork::new(net.n, edges, net.source, net.sink)
}

fn solve_circulation(circ: &FlowNetwork, net: &FlowNetwork, eps: f64, cfg: &SolverConfig, seed: u64) -> Result<FlowSolution> {
    let lp_eps = eps.min(EXACT_LP_EPS);
    let red = build_flow_lp(circ, 0.0, lp_eps, cfg.mode)?;
    let (x, report) = solve_reduced(&red, lp_eps, cfg, seed)?;
    let xf = red.flow_part(&x);
    let mut rounded = round_flow(xf, circ)?;
    if let Ok(down) = round_descending(xf, circ) {
        let cost = |f: &[i64]| circ.edges.iter().zip(f).map(|(e, v)| e.cost * v).sum::<i64>();
        if cost(&down) < cost(&rounded) {
            rounded = down;
        }
    }
    let m = net.m();
    let value = rounded[m] as f64;
    let ints = rounded[..m].to_vec();
    let flow: Vec<f64> = ints.iter().map(|&v| v as f64).collect();
    Ok(FlowSolution { cost: net.cost_of(&flow), flow, integral: Some(ints), value, approximate: false, eps, report })
}

/// Exact maximum s-t flow.
pub fn solve_max_flow(net: &FlowNetwork, eps: f64, cfg: &SolverConfig, seed: u64) -> Result<FlowSolution> {
    let circ = circulation(net, -1, true)?;
    solve_circulation(&circ, net, eps, cfg, seed)
}

/// Exact minimum cost maximum s-t flow.
pub fn solve_min_cost_flow(net: &FlowNetwork, eps: f64, cfg: &SolverConfig, seed: u64) -> Result<FlowSolution> {
    let big = 1 + net.edges.iter().map(|e| e.cost.abs()).sum::<i64>();
    let circ = circulation(net, -big, false)?;
    solve_circulation(&circ, net, eps, cfg, seed)
}

fn frac_dist(v: f64) -> f64 {
    (v - v.round()).abs()
}

/// Round a fractional flow to the nearest integral flow, repairing
/// conservation by cycle canceling when plain rounding does not conserve.
pub fn round_flow(x_lp: &[f64], net: &FlowNetwork) -> Result<Vec<i64>> {
    check_rounding_input(x_lp, net)?;
    let nearest: Vec<i64> = x_lp.iter().zip(&net.edges).map(|(v, e)| (v.round() as i64).clamp(0, e.cap)).collect();
    if conserves(&nearest, net) {
        return Ok(nearest);
    }
    round_descending(x_lp, net)
}

fn check_rounding_input(x_lp: &[f64], net: &FlowNetwork) -> Result<()> {
    if !net.is_unit_gain() {
        return Err(Error::InvalidArgument("rounding needs unit multipliers".into()));
    }
    if x_lp.len() != net.m() {
        return Err(Error::InvalidShape(format!("flow has {} entries for {} edges", x_lp.len(), net.m())));
    }
    Ok(())
}

/// Integral flow of cost at most that of `x_lp`, by canceling fractional
/// cycles in the cheaper direction.
fn round_descending(x_lp: &[f64], net: &FlowNetwork) -> Result<Vec<i64>> {
    let mut x: Vec<f64> = x_lp
        .iter()
        .zip(&net.edges)
        .map(|(v, e)| {
            let v = v.clamp(0.0, e.cap as f64);
            if frac_dist(v) <= INTEGRAL_TOL {
                v.round()
            } else {
                v
            }
        })
        .collect();
    cancel_fractional_cycles(&mut x, net);
    let mut f: Vec<i64> = x.iter().map(|v| v.round() as i64).collect();
    repair_integral(&mut f, net)?;
    Ok(f)
}

fn conserves(f: &[i64], net: &FlowNetwork) -> bool {
    let mut ex = vec![0i64; net.n];
    for (e, v) in net.edges.iter().zip(f) {
        ex[e.head] += v;
        ex[e.tail] -= v;
    }
    (0..net.n).all(|v| v == net.source || v == net.sink || ex[v] == 0)
}

fn cancel_fractional_cycles(x: &mut [f64], net: &FlowNetwork) {
    let m = net.m();
    for _ in 0..=m {
        let mut active: Vec<bool> = x.iter().map(|v| frac_dist(*v) > INTEGRAL_TOL).collect();
        let mut deg = vec![0usize; net.n];
        for (k, e) in net.edges.iter().enumerate() {
            if active[k] {
                deg[e.tail] += 1;
                deg[e.head] += 1;
            }
        }
        let mut leaves: Vec<usize> = (0..net.n).filter(|&v| deg[v] == 1).collect();
        while let Some(v) = leaves.pop() {
            if deg[v] != 1 {
                continue;
            }
            let k = (0..m).find(|&k| active[k] && (net.edges[k].tail == v || net.edges[k].head == v)).expect("degree one");
            active[k] = false;
            x[k] = x[k].round();
            deg[v] -= 1;
            let other = if net.edges[k].tail == v { net.edges[k].head } else { net.edges[k].tail };
            deg[other] -= 1;
            if deg[other] == 1 {
                leaves.push(other);
            }
        }
        let Some(cycle) = find_cycle(net, &active) else { return };
        let forward_cost: f64 = cycle.iter().map(|&(k, dir)| dir * net.edges[k].cost as f64).sum();
        let sign = if forward_cost <= 0.0 { 1.0 } else { -1.0 };
        let (mut amount, mut hit) = (f64::INFINITY, cycle[0].0);
        for &(k, dir) in &cycle {
            let d = sign * dir;
            let room = if d > 0.0 { x[k].ceil() - x[k] } else { x[k] - x[k].floor() };
            if room < amount {
                amount = room;
                hit = k;
            }
        }
        for &(k, dir) in &cycle {
            x[k] += sign * dir * amount;
        }
        x[hit] = x[hit].round();
    }
}

/// Undirected cycle among active edges, as (edge, orientation) pairs where
/// orientation is +1 when the cycle traverses the edge tail to head.
fn find_cycle(net: &FlowNetwork, active: &[bool]) -> Option<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); net.n];
    for (k, e) in net.edges.iter().enumerate() {
        if active[k] {
            adj[e.tail].push((e.head, k));
            adj[e.head].push((e.tail, k));
        }
    }
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; net.n];
    let mut depth = vec![usize::MAX; net.n];
    for root in 0..net.n {
        if depth[root] != usize::MAX || adj[root].is_empty() {
            continue;
        }
        depth[root] = 0;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &(u, k) in &adj[v] {
                if parent[v].map(|(_, pk)| pk) == Some(k) {
                    continue;
                }
                if depth[u] == usize::MAX {
                    depth[u] = depth[v] + 1;
                    parent[u] = Some((v, k));
                    stack.push(u);
                } else {
                    return Some(close_cycle(net, &parent, &depth, v, u, k));
                }
            }
        }
    }
    None
}

fn close_cycle(
    net: &FlowNetwork,
    parent: &[Option<(usize, usize)>],
    depth: &[usize],
    v: usize,
    u: usize,
    k: usize,
) -> Vec<(usize, f64)> {
    let orient = |k: usize, from: usize| if net.edges[k].tail == from { 1.0 } else { -1.0 };
    let (mut a, mut b) = (v, u);
    let mut up_a = Vec::new();
    let mut up_b = Vec::new();
    while a != b {
        if depth[a] >= depth[b] {
            let (p, pk) = parent[a].expect("non-root");
            up_a.push((pk, orient(pk, p)));
            a = p;
        } else {
            let (p, pk) = parent[b].expect("non-root");
            up_b.push((pk, orient(pk, b)));
            b = p;
        }
    }
    let mut cycle: Vec<(usize, f64)> = up_a.into_iter().rev().collect();
    cycle.push((k, orient(k, v)));
    cycle.extend(up_b);
    cycle
}

/// Restore integer conservation at non-terminals by unit augmentations.
fn repair_integral(f: &mut [i64], net: &FlowNetwork) -> Result<()> {
    let excess = |f: &[i64]| -> Vec<i64> {
        let mut ex = vec![0i64; net.n];
        for (e, v) in net.edges.iter().zip(f.iter()) {
            ex[e.head] += v;
            ex[e.tail] -= v;
        }
        ex
    };
    let terminal = |v: usize| v == net.source || v == net.sink;
    for _ in 0..=net.m() * 4 {
        let ex = excess(f);
        let Some(src) = (0..net.n).find(|&v| !terminal(v) && ex[v] > 0) else {
            if (0..net.n).any(|v| !terminal(v) && ex[v] != 0) {
                let dst = (0..net.n).find(|&v| !terminal(v) && ex[v] < 0).expect("deficit");
                augment(f, net, &[net.source, net.sink], dst, &ex, &terminal)?;
                continue;
            }
            return Ok(());
        };
        augment(f, net, &[src], usize::MAX, &ex, &terminal)?;
    }
    Err(Error::RoundingFailed("conservation repair did not converge".into()))
}

fn augment(
    f: &mut [i64],
    net: &FlowNetwork,
    starts: &[usize],
    target: usize,
    ex: &[i64],
    terminal: &dyn Fn(usize) -> bool,
) -> Result<()> {
    let mut prev: Vec<Option<(usize, usize, bool)>> = vec![None; net.n];
    let mut seen = vec![false; net.n];
    let mut q: VecDeque<usize> = starts.iter().copied().collect();
    for &s in starts {
        seen[s] = true;
    }
    let reached = loop {
        let Some(v) = q.pop_front() else {
            return Err(Error::RoundingFailed("no residual path to restore conservation".into()));
        };
        let done = if target == usize::MAX { !starts.contains(&v) && (terminal(v) || ex[v] < 0) } else { v == target };
        if done {
            break v;
        }
        for (k, e) in net.edges.iter().enumerate() {
            if e.tail == v && !seen[e.head] && f[k] < e.cap {
                seen[e.head] = true;
                prev[e.head] = Some((v, k, true));
                q.push_back(e.head);
            } else if e.head == v && !seen[e.tail] && f[k] > 0 {
                seen[e.tail] = true;
                prev[e.tail] = Some((v, k, false));
                q.push_back(e.tail);
            }
        }
    };
    let mut v = reached;
    while let Some((p, k, fwd)) = prev[v] {
        f[k] += if fwd { 1 } else { -1 };
        v = p;
    }
    Ok(())
}

/// Random connected network: a source-to-sink path through every vertex in
/// random order, plus random extra edges.
pub fn random_network(n: usize, m: usize, max_cap: i64, max_cost: i64, seed: u64) -> FlowNetwork {
    random_network_with(n, m, max_cap, max_cost, None, seed)
}

/// As [`random_network`], with multipliers `num/den` drawn with `den ≤ max_den`.
pub fn random_lossy_network(n: usize, m: usize, max_cap: i64, max_cost: i64, max_den: i64, seed: u64) -> FlowNetwork {
    random_network_with(n, m, max_cap, max_cost, Some(max_den), seed)
}

fn random_network_with(n: usize, m: usize, max_cap: i64, max_cost: i64, max_den: Option<i64>, seed: u64) -> FlowNetwork {
    assert!(n >= 2 && m >= n - 1 && max_cap >= 1 && max_cost >= 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (1..n - 1).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut path = vec![0];
    path.extend(order);
    path.push(n - 1);
    let edge = |rng: &mut ChaCha8Rng, tail: usize, head: usize| {
        let cap = rng.gen_range(1..=max_cap);
        let cost = rng.gen_range(0..=max_cost);
        match max_den {
            None => FlowEdge::new(tail, head, cap, cost),
            Some(d) => {
                let den = rng.gen_range(1..=d.max(1));
                let num = rng.gen_range(1..=den);
                FlowEdge::lossy(tail, head, cap, cost, num, den)
            }
        }
    };
    let mut edges: Vec<FlowEdge> = path.windows(2).map(|p| edge(&mut rng, p[0], p[1])).collect();
    while edges.len() < m {
        let tail = rng.gen_range(0..n);
        let head = rng.gen_range(0..n);
        if tail != head && head != 0 && tail != n - 1 {
            edges.push(edge(&mut rng, tail, head));
        }
    }
    FlowNetwork::new(n, edges, 0, n - 1).expect("generator builds valid networks")
}
