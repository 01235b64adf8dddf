//! Sparse matrices, the normal-equation solver for `AᵀDA`, leverage scores
//! and the weighted projection `P_{x,w}`.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cell::OnceCell;
use std::collections::BTreeSet;

/// Column count up to which the direct backend is selected automatically.
pub const DIRECT_MAX_COLS: usize = 4096;
/// Relative pivot size (against the pivot's original diagonal entry) below
/// which a factorization is declared singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// Real sparse matrix with both compressed-column and compressed-row views.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMat {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    col_val: Vec<f64>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    row_val: Vec<f64>,
}

impl SparseMat {
    /// Build from `(row, col, value)` triplets. Duplicates are summed and
    /// resulting zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::InvalidShape(format!(
                    "entry ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite entry at ({i}, {j})")));
            }
            t.push((i, j, v));
        }
        t.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
        for (i, j, v) in t {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);

        let mut col_ptr = vec![0usize; cols + 1];
        for e in &merged {
            col_ptr[e.1 + 1] += 1;
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let row_idx = merged.iter().map(|e| e.0).collect();
        let col_val = merged.iter().map(|e| e.2).collect();

        let mut by_row = merged;
        by_row.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; rows + 1];
        for e in &by_row {
            row_ptr[e.0 + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = by_row.iter().map(|e| e.1).collect();
        let row_val = by_row.iter().map(|e| e.2).collect();
        Ok(SparseMat { rows, cols, col_ptr, row_idx, col_val, row_ptr, col_idx, row_val })
    }

    pub fn from_dense(d: &[Vec<f64>]) -> Result<Self> {
        let rows = d.len();
        let cols = d.first().map_or(0, |r| r.len());
        let mut t = Vec::new();
        for (i, r) in d.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::InvalidShape("ragged dense matrix".into()));
            }
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(rows, cols, &t)
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &t).expect("identity is well formed")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Entries in column-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for j in 0..self.cols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                out.push((self.row_idx[p], j, self.col_val[p]));
            }
        }
        out
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.row_val[r])
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.col_val[r])
    }

    /// `A·v` for `v` of length `cols`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let (c, x) = self.row(i);
                c.iter().zip(x).map(|(&j, &a)| a * v[j]).sum()
            })
            .collect()
    }

    /// `Aᵀ·y` for `y` of length `rows`.
    pub fn tmul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        (0..self.cols)
            .map(|j| {
                let (r, x) = self.col(j);
                r.iter().zip(x).map(|(&i, &a)| a * y[i]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    /// Stack matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[&SparseMat]) -> Result<Self> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut t = Vec::new();
        let mut off = 0;
        for b in blocks {
            if b.cols != cols {
                return Err(Error::InvalidShape("vstack column mismatch".into()));
            }
            t.extend(b.triplets().into_iter().map(|(i, j, v)| (i + off, j, v)));
            off += b.rows;
        }
        Self::from_triplets(off, cols, &t)
    }

    /// Scale every row `i` by `s[i]`.
    pub fn scale_rows(&self, s: &[f64]) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (i, j, v * s[i])).collect();
        Self::from_triplets(self.rows, self.cols, &t).expect("scaling keeps shape")
    }
}

/// `AᵀDA·v`.
pub fn normal_mul(a: &SparseMat, d: &[f64], v: &[f64]) -> Vec<f64> {
    let mut y = a.mul_vec(v);
    for (yi, di) in y.iter_mut().zip(d) {
        *yi *= di;
    }
    a.tmul_vec(&y)
}

/// Which solver produced a solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Direct,
    ConjugateGradient,
}

/// Requested solver backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BackendChoice {
    #[default]
    Auto,
    Direct,
    ConjugateGradient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReceipt {
    pub solution: Vec<f64>,
    /// `‖AᵀDAv − q‖_{(AᵀDA)⁻¹} / ‖q‖_{(AᵀDA)⁻¹}` (CG reports the Jacobi
    /// preconditioned analogue).
    pub rel_residual: f64,
    pub iterations: usize,
    pub backend: Backend,
}

fn check_weights(d: &[f64], m: usize) -> Result<()> {
    if d.len() != m {
        return Err(Error::InvalidShape(format!("weight vector has length {}, expected {m}", d.len())));
    }
    if let Some(i) = d.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument(format!("weight d[{i}] = {} is not positive and finite", d[i])));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fill-reducing ordering and factor pattern for `AᵀDA`, independent of `D`.
#[derive(Debug)]
struct Symbolic {
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    rp: Vec<usize>,
    rk: Vec<usize>,
    rpos: Vec<usize>,
    ap: Vec<usize>,
    a_target: Vec<usize>,
    a_row: Vec<usize>,
    a_coef: Vec<f64>,
}

fn minimum_degree(adj: &mut [BTreeSet<usize>]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let n = adj.len();
    let mut eliminated = vec![false; n];
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut patterns = Vec::with_capacity(n);
    while let Some((_, v)) = queue.pop_first() {
        eliminated[v] = true;
        let nbrs: Vec<usize> = adj[v].iter().copied().filter(|&u| !eliminated[u]).collect();
        for &u in &nbrs {
            queue.remove(&(adj[u].len(), u));
            adj[u].remove(&v);
            for &x in &nbrs {
                if x != u {
                    adj[u].insert(x);
                }
            }
            queue.insert((adj[u].len(), u));
        }
        adj[v].clear();
        order.push(v);
        patterns.push(nbrs);
    }
    (order, patterns)
}

impl Symbolic {
    fn analyze(a: &SparseMat) -> Symbolic {
        let n = a.cols();
        let mut adj = vec![BTreeSet::new(); n];
        for i in 0..a.rows() {
            let (c, _) = a.row(i);
            for &x in c {
                for &y in c {
                    if x != y {
                        adj[x].insert(y);
                    }
                }
            }
        }
        let (perm, patterns) = minimum_degree(&mut adj);
        let mut iperm = vec![0usize; n];
        for (k, &v) in perm.iter().enumerate() {
            iperm[v] = k;
        }
        let mut lp = vec![0usize; n + 1];
        let mut li = Vec::new();
        for (k, pat) in patterns.iter().enumerate() {
            let mut rows: Vec<usize> = pat.iter().map(|&v| iperm[v]).collect();
            rows.sort_unstable();
            debug_assert!(rows.iter().all(|&r| r > k));
            li.extend(rows);
            lp[k + 1] = li.len();
        }
        let mut rcount = vec![0usize; n + 1];
        for &r in &li {
            rcount[r + 1] += 1;
        }
        for j in 0..n {
            rcount[j + 1] += rcount[j];
        }
        let rp = rcount.clone();
        let mut fill = rcount;
        let mut rk = vec![0usize; li.len()];
        let mut rpos = vec![0usize; li.len()];
        for k in 0..n {
            for p in lp[k]..lp[k + 1] {
                let r = li[p];
                rk[fill[r]] = k;
                rpos[fill[r]] = p;
                fill[r] += 1;
            }
        }

        let mut contrib: Vec<(usize, usize, usize, f64)> = Vec::new();
        for r in 0..a.rows() {
            let (c, v) = a.row(r);
            for x in 0..c.len() {
                for y in 0..c.len() {
                    let (px, py) = (iperm[c[x]], iperm[c[y]]);
                    if px >= py {
                        contrib.push((py, px, r, v[x] * v[y]));
                    }
                }
            }
        }
        contrib.sort_by(|p, q| (p.0, p.1, p.2).cmp(&(q.0, q.1, q.2)));
        let mut ap = vec![0usize; n + 1];
        for e in &contrib {
            ap[e.0 + 1] += 1;
        }
        for j in 0..n {
            ap[j + 1] += ap[j];
        }
        Symbolic {
            perm,
            lp,
            li,
            rp,
            rk,
            rpos,
            ap,
            a_target: contrib.iter().map(|e| e.1).collect(),
            a_row: contrib.iter().map(|e| e.2).collect(),
            a_coef: contrib.iter().map(|e| e.3).collect(),
        }
    }

    fn factor(&self, d: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.perm.len();
        let mut lx = vec![0.0; self.li.len()];
        let mut dk = vec![0.0; n];
        let mut work = vec![0.0; n];
        for j in 0..n {
            for p in self.ap[j]..self.ap[j + 1] {
                work[self.a_target[p]] += d[self.a_row[p]] * self.a_coef[p];
            }
            let orig_diag = work[j];
            for q in self.rp[j]..self.rp[j + 1] {
                let k = self.rk[q];
                let pos = self.rpos[q];
                let f = lx[pos] * dk[k];
                for p in pos..self.lp[k + 1] {
                    work[self.li[p]] -= lx[p] * f;
                }
            }
            let piv = work[j];
            if !(piv > PIVOT_TOL * orig_diag) || !piv.is_finite() {
                return Err(Error::SingularSystem { column: self.perm[j], pivot: piv });
            }
            dk[j] = piv;
            work[j] = 0.0;
            for p in self.lp[j]..self.lp[j + 1] {
                let r = self.li[p];
                lx[p] = work[r] / piv;
                work[r] = 0.0;
            }
        }
        Ok((lx, dk))
    }
}

/// Reusable solver for systems `AᵀDA v = q` with a fixed sparsity pattern.
#[derive(Debug)]
pub struct NormalSolver {
    a: SparseMat,
    choice: BackendChoice,
    sym: OnceCell<Symbolic>,
}

impl NormalSolver {
    pub fn new(a: &SparseMat, choice: BackendChoice) -> Self {
        NormalSolver { a: a.clone(), choice, sym: OnceCell::new() }
    }

    pub fn matrix(&self) -> &SparseMat {
        &self.a
    }

    pub fn choice(&self) -> BackendChoice {
        self.choice
    }

    /// Off-diagonal entries of the direct factor.
    pub fn factor_nnz(&self) -> usize {
        self.symbolic().li.len()
    }

    fn symbolic(&self) -> &Symbolic {
        self.sym.get_or_init(|| Symbolic::analyze(&self.a))
    }

    fn uses_direct(&self) -> bool {
        match self.choice {
            BackendChoice::Direct => true,
            BackendChoice::ConjugateGradient => false,
            BackendChoice::Auto => self.a.cols() <= DIRECT_MAX_COLS,
        }
    }

    /// Factor `AᵀDA` with the configured backend.
    pub fn factor(&self, d: &[f64]) -> Result<Factor<'_>> {
        if self.uses_direct() {
            self.factor_direct(d)
        } else {
            check_weights(d, self.a.rows())?;
            let n = self.a.cols();
            let mut diag = vec![0.0; n];
            for (j, dj) in diag.iter_mut().enumerate() {
                let (r, v) = self.a.col(j);
                *dj = r.iter().zip(v).map(|(&i, &x)| d[i] * x * x).sum();
                if !(*dj > 0.0) {
                    return Err(Error::SingularSystem { column: j, pivot: *dj });
                }
            }
            Ok(Factor { solver: self, d: d.to_vec(), kind: FactorKind::Jacobi { diag } })
        }
    }

    /// Factor with the sparse LDLᵀ backend regardless of the configured choice.
    pub fn factor_direct(&self, d: &[f64]) -> Result<Factor<'_>> {
        check_weights(d, self.a.rows())?;
        let (lx, dk) = self.symbolic().factor(d)?;
        Ok(Factor { solver: self, d: d.to_vec(), kind: FactorKind::Ldl { lx, dk } })
    }

    pub fn solve(&self, d: &[f64], q: &[f64], eps_s: f64, hint: Option<&[f64]>) -> Result<SolveReceipt> {
        let f = self.factor(d)?;
        match f.solve(q, eps_s, hint) {
            Err(Error::NoConvergence(_)) if self.choice == BackendChoice::Auto && !self.uses_direct() => {
                self.factor_direct(d)?.solve(q, eps_s, hint)
            }
            other => other,
        }
    }
}

#[derive(Debug)]
enum FactorKind {
    Ldl { lx: Vec<f64>, dk: Vec<f64> },
    Jacobi { diag: Vec<f64> },
}

/// A factorized (or preconditioned) normal-equation matrix for one `D`.
#[derive(Debug)]
pub struct Factor<'s> {
    solver: &'s NormalSolver,
    d: Vec<f64>,
    kind: FactorKind,
}

impl Factor<'_> {
    pub fn backend(&self) -> Backend {
        match self.kind {
            FactorKind::Ldl { .. } => Backend::Direct,
            FactorKind::Jacobi { .. } => Backend::ConjugateGradient,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.d
    }

    /// `log det(AᵀDA)` (direct backend only).
    pub fn log_det(&self) -> Option<f64> {
        match &self.kind {
            FactorKind::Ldl { dk, .. } => Some(dk.iter().map(|x| x.ln()).sum()),
            FactorKind::Jacobi { .. } => None,
        }
    }

    /// `AᵀDA·v`.
    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        normal_mul(&self.solver.a, &self.d, v)
    }

    /// One application of the triangular factors, without refinement.
    /// Panics for the CG backend.
    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        let (lx, dk) = match &self.kind {
            FactorKind::Ldl { lx, dk } => (lx, dk),
            FactorKind::Jacobi { .. } => panic!("apply requires the direct backend"),
        };
        let s = self.solver.symbolic();
        let n = dk.len();
        let mut y: Vec<f64> = s.perm.iter().map(|&v| q[v]).collect();
        for k in 0..n {
            let yk = y[k];
            if yk != 0.0 {
                for p in s.lp[k]..s.lp[k + 1] {
                    y[s.li[p]] -= lx[p] * yk;
                }
            }
        }
        for k in 0..n {
            y[k] /= dk[k];
        }
        for k in (0..n).rev() {
            let mut acc = y[k];
            for p in s.lp[k]..s.lp[k + 1] {
                acc -= lx[p] * y[s.li[p]];
            }
            y[k] = acc;
        }
        let mut x = vec![0.0; n];
        for (k, &v) in s.perm.iter().enumerate() {
            x[v] = y[k];
        }
        x
    }

    pub fn solve(&self, q: &[f64], eps_s: f64, hint: Option<&[f64]>) -> Result<SolveReceipt> {
        let n = self.solver.a.cols();
        if q.len() != n {
            return Err(Error::InvalidShape(format!("right-hand side has length {}, expected {n}", q.len())));
        }
        if !(eps_s > 0.0) {
            return Err(Error::InvalidArgument(format!("eps_s = {eps_s} must be positive")));
        }
        if q.iter().all(|&x| x == 0.0) {
            return Ok(SolveReceipt {
                solution: vec![0.0; n],
                rel_residual: 0.0,
                iterations: 0,
                backend: self.backend(),
            });
        }
        match &self.kind {
            FactorKind::Ldl { .. } => self.solve_direct(q, eps_s),
            FactorKind::Jacobi { diag } => self.solve_cg(diag, q, eps_s, hint),
        }
    }

    fn solve_direct(&self, q: &[f64], eps_s: f64) -> Result<SolveReceipt> {
        let mut v = self.apply(q);
        let qn2 = dot(q, &v).abs();
        let mut rel = f64::INFINITY;
        for it in 0..4 {
            let mv = self.mul(&v);
            let r: Vec<f64> = q.iter().zip(&mv).map(|(a, b)| a - b).collect();
            let corr = self.apply(&r);
            rel = (dot(&r, &corr).abs() / qn2).sqrt();
            if rel <= eps_s {
                return Ok(SolveReceipt {
                    solution: v,
                    rel_residual: rel,
                    iterations: it + 1,
                    backend: Backend::Direct,
                });
            }
            for (vi, ci) in v.iter_mut().zip(&corr) {
                *vi += ci;
            }
        }
        Err(Error::NoConvergence(format!(
            "direct solve reached relative residual {rel:e}, requested {eps_s:e}"
        )))
    }

    fn solve_cg(&self, diag: &[f64], q: &[f64], eps_s: f64, hint: Option<&[f64]>) -> Result<SolveReceipt> {
        let n = q.len();
        let mut x = match hint {
            Some(h) if h.len() == n && h.iter().all(|v| v.is_finite()) => h.to_vec(),
            _ => vec![0.0; n],
        };
        let mx = self.mul(&x);
        let mut r: Vec<f64> = q.iter().zip(&mx).map(|(a, b)| a - b).collect();
        let qnorm = q.iter().zip(diag).map(|(a, d)| a * a / d).sum::<f64>().sqrt();
        let mut z: Vec<f64> = r.iter().zip(diag).map(|(a, d)| a / d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let cap = 20 * n + 2000;
        for it in 0..cap {
            let rel = rz.max(0.0).sqrt() / qnorm;
            if rel <= eps_s {
                return Ok(SolveReceipt {
                    solution: x,
                    rel_residual: rel,
                    iterations: it,
                    backend: Backend::ConjugateGradient,
                });
            }
            let mp = self.mul(&p);
            let pmp = dot(&p, &mp);
            if !(pmp > 0.0) {
                return Err(Error::SingularSystem { column: 0, pivot: pmp });
            }
            let alpha = rz / pmp;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * mp[i];
            }
            for i in 0..n {
                z[i] = r[i] / diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::NoConvergence(format!("conjugate gradient exceeded {cap} iterations")))
    }

    /// Exact leverage scores `σ_i = d_i·a_iᵀ(AᵀDA)⁻¹a_i` (direct backend only),
    /// from the entries of the inverse on the factor pattern.
    pub fn leverage_scores(&self) -> Vec<f64> {
        let (lx, dk) = match &self.kind {
            FactorKind::Ldl { lx, dk } => (lx, dk),
            FactorKind::Jacobi { .. } => panic!("leverage scores require the direct backend"),
        };
        let s = self.solver.symbolic();
        let a = &self.solver.a;
        let n = dk.len();
        let (zx, zd) = selected_inverse(s, lx, dk);
        let mut iperm = vec![0usize; n];
        for (k, &v) in s.perm.iter().enumerate() {
            iperm[v] = k;
        }
        let entry = |x: usize, y: usize| -> f64 {
            if x == y {
                return zd[x];
            }
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            let col = &s.li[s.lp[lo]..s.lp[lo + 1]];
            let p = col.binary_search(&hi).expect("row pairs lie in the factor pattern");
            zx[s.lp[lo] + p]
        };
        (0..a.rows())
            .map(|i| {
                let (c, v) = a.row(i);
                let mut acc = 0.0;
                for x in 0..c.len() {
                    let px = iperm[c[x]];
                    acc += v[x] * v[x] * zd[px];
                    for y in x + 1..c.len() {
                        acc += 2.0 * v[x] * v[y] * entry(px, iperm[c[y]]);
                    }
                }
                (self.d[i] * acc).clamp(0.0, 1.0)
            })
            .collect()
    }
}

/// Entries of `(LD_LLᵀ)⁻¹` on the pattern of `L` plus the diagonal.
fn selected_inverse(s: &Symbolic, lx: &[f64], dk: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = dk.len();
    let mut zx = vec![0.0; lx.len()];
    let mut zd = vec![0.0; n];
    let mut loc = vec![usize::MAX; n];
    let mut acc = vec![0.0; n];
    for k in (0..n).rev() {
        let (b, e) = (s.lp[k], s.lp[k + 1]);
        for q in b..e {
            loc[s.li[q]] = q;
        }
        for q in b..e {
            let j = s.li[q];
            let ljk = lx[q];
            acc[j] += zd[j] * ljk;
            for p in s.lp[j]..s.lp[j + 1] {
                let r = s.li[p];
                if loc[r] != usize::MAX {
                    let z = zx[p];
                    acc[r] += z * ljk;
                    acc[j] += z * lx[loc[r]];
                }
            }
        }
        let mut diag = 1.0 / dk[k];
        for q in b..e {
            let j = s.li[q];
            zx[q] = -acc[j];
            diag -= lx[q] * zx[q];
            acc[j] = 0.0;
            loc[j] = usize::MAX;
        }
        zd[k] = diag;
    }
    (zx, zd)
}

/// Solve `AᵀDA v = q` to relative accuracy `eps_s`.
pub fn solve_normal(
    a: &SparseMat,
    d: &[f64],
    q: &[f64],
    eps_s: f64,
    hint: Option<&[f64]>,
) -> Result<SolveReceipt> {
    NormalSolver::new(a, BackendChoice::Auto).solve(d, q, eps_s, hint)
}

pub fn leverage_scores_exact(a: &SparseMat, d: &[f64]) -> Result<Vec<f64>> {
    let s = NormalSolver::new(a, BackendChoice::Direct);
    Ok(s.factor_direct(d)?.leverage_scores())
}

/// Number of random sign probes used by the sketched estimator.
pub fn sketch_size(m: usize, theta: f64) -> usize {
    ((24.0 * (m.max(2) as f64).ln()) / (theta * theta)).ceil() as usize
}

/// Johnson–Lindenstrauss estimate of the leverage scores.
pub fn leverage_scores_approx(a: &SparseMat, d: &[f64], theta: f64, seed: u64) -> Result<Vec<f64>> {
    let s = NormalSolver::new(a, BackendChoice::Direct);
    leverage_scores_approx_with(&s, d, theta, seed)
}

pub fn leverage_scores_approx_with(solver: &NormalSolver, d: &[f64], theta: f64, seed: u64) -> Result<Vec<f64>> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("theta = {theta} must lie in (0, 1)")));
    }
    let a = solver.matrix();
    let m = a.rows();
    let f = solver.factor_direct(d)?;
    let k = sketch_size(m, theta);
    let scale = 1.0 / (k as f64).sqrt();
    let sq: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
    let mut est = vec![0.0; m];
    let mut y = vec![0.0; m];
    for probe in 0..k {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(probe as u64));
        for (yi, si) in y.iter_mut().zip(&sq) {
            let sign = if rng.gen::<bool>() { scale } else { -scale };
            *yi = sign * si;
        }
        let v = f.apply(&a.tmul_vec(&y));
        let pq = a.mul_vec(&v);
        for i in 0..m {
            let t = sq[i] * pq[i];
            est[i] += t * t;
        }
    }
    Ok(est)
}

/// `P_{x,w}·v = v − W⁻¹A_x(A_xᵀW⁻¹A_x)⁻¹A_xᵀv` with `A_x = Φ''^{−1/2}A`.
pub fn apply_pxw(a: &SparseMat, phi2: &[f64], w: &[f64], v: &[f64], eps_s: f64) -> Result<Vec<f64>> {
    let solver = NormalSolver::new(a, BackendChoice::Auto);
    apply_pxw_with(&solver, phi2, w, v, eps_s)
}

pub fn apply_pxw_with(solver: &NormalSolver, phi2: &[f64], w: &[f64], v: &[f64], eps_s: f64) -> Result<Vec<f64>> {
    let a = solver.matrix();
    let m = a.rows();
    if phi2.len() != m || w.len() != m || v.len() != m {
        return Err(Error::InvalidShape("apply_pxw vector lengths differ from the row count".into()));
    }
    let sqrt_phi2: Vec<f64> = phi2.iter().map(|x| x.sqrt()).collect();
    let d: Vec<f64> = w.iter().zip(phi2).map(|(wi, p)| 1.0 / (wi * p)).collect();
    let rhs = a.tmul_vec(&v.iter().zip(&sqrt_phi2).map(|(x, s)| x / s).collect::<Vec<_>>());
    let u = solver.solve(&d, &rhs, eps_s, None)?.solution;
    let au = a.mul_vec(&u);
    Ok((0..m).map(|i| v[i] - au[i] / (w[i] * sqrt_phi2[i])).collect())
}
