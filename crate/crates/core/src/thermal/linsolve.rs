//! Linear solvers for the assembled conductance systems.
//!
//! The systems are nonsingular M-matrices (positive diagonal, non-positive
//! off-diagonals, weakly row-diagonally dominant with at least one strictly
//! dominant row per connected component), so LU without pivoting is stable
//! and incomplete factorizations exist.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sparse::CsrMatrix;
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearError {
    #[error("iterative solve did not converge after {iterations} iterations (residual {residual:e} W)")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("zero or negative pivot at row {0}")]
    Breakdown(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    /// Zero-fill incomplete Cholesky of `(A + Aᵀ)/2`.
    SymmetricIc0,
    /// Zero-fill incomplete LU of `A`.
    Ilu0,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Systems with fewer unknowns are factored directly.
    pub direct_threshold: usize,
    /// Residual target `‖r‖∞ ≤ tolerance · max(1, scale)`; see
    /// [`LinearSolver::solve_scaled`].
    pub tolerance: f64,
    pub max_iterations: usize,
    pub preconditioner: Preconditioner,
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            direct_threshold: 5000,
            tolerance: 1e-9,
            max_iterations: 20_000,
            preconditioner: Preconditioner::Ilu0,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// ‖b − A·x‖∞ of the returned solution.
    pub residual: f64,
    pub direct: bool,
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn residual(a: &CsrMatrix, exec: Execution, x: &[f64], b: &[f64], r: &mut [f64]) {
    a.matvec(exec, x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Dense band LU without pivoting.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<BandedLu, LinearError> {
        let n = a.n;
        let bw = a.bandwidth();
        let width = 2 * bw + 1;
        let mut band = vec![0.0; n * width];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                band[i * width + j + bw - i] += v;
            }
        }
        let at = |i: usize, j: usize| i * width + j + bw - i;
        for k in 0..n {
            let pivot = band[at(k, k)];
            if !(pivot > 0.0) {
                return Err(LinearError::Breakdown(k));
            }
            let hi = (k + bw + 1).min(n);
            for i in k + 1..hi {
                let l = band[at(i, k)] / pivot;
                if l == 0.0 {
                    continue;
                }
                band[at(i, k)] = l;
                for j in k + 1..hi {
                    let u = band[at(k, j)];
                    if u != 0.0 {
                        band[at(i, j)] -= l * u;
                    }
                }
            }
        }
        Ok(BandedLu { n, bw, band })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        let width = 2 * bw + 1;
        let at = |i: usize, j: usize| i * width + j + bw - i;
        for i in 0..n {
            let mut acc = x[i];
            for j in i.saturating_sub(bw)..i {
                acc -= self.band[at(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..(i + bw + 1).min(n) {
                acc -= self.band[at(i, j)] * x[j];
            }
            x[i] = acc / self.band[at(i, i)];
        }
    }
}

/// Lower factor of a zero-fill incomplete Cholesky, stored row-wise.
#[derive(Debug, Clone)]
struct Ic0 {
    l: CsrMatrix,
}

impl Ic0 {
    fn factor(s: &CsrMatrix) -> Result<Ic0, LinearError> {
        let mut t = Vec::with_capacity(s.nnz() / 2 + s.n);
        for i in 0..s.n {
            let (cols, vals) = s.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    t.push((i, j, v));
                }
            }
        }
        let mut l = CsrMatrix::from_triplets(s.n, &t);
        for i in 0..l.n {
            let (lo, hi) = (l.row_ptr[i], l.row_ptr[i + 1]);
            for p in lo..hi {
                let k = l.col_idx[p];
                // Sparse dot of rows i and k of L over columns < k.
                let (klo, khi) = (l.row_ptr[k], l.row_ptr[k + 1]);
                let (mut a, mut b) = (lo, klo);
                let mut acc = 0.0;
                while a < p && b < khi && l.col_idx[b] < k {
                    match l.col_idx[a].cmp(&l.col_idx[b]) {
                        std::cmp::Ordering::Less => a += 1,
                        std::cmp::Ordering::Greater => b += 1,
                        std::cmp::Ordering::Equal => {
                            acc += l.values[a] * l.values[b];
                            a += 1;
                            b += 1;
                        }
                    }
                }
                if k < i {
                    let lkk = l.values[khi - 1];
                    l.values[p] = (l.values[p] - acc) / lkk;
                } else {
                    let d = l.values[p] - acc;
                    if !(d > 0.0) {
                        return Err(LinearError::Breakdown(i));
                    }
                    l.values[p] = d.sqrt();
                }
            }
        }
        Ok(Ic0 { l })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let l = &self.l;
        for i in 0..l.n {
            let (cols, vals) = l.row(i);
            let last = cols.len() - 1;
            let mut acc = r[i];
            for k in 0..last {
                acc -= vals[k] * z[cols[k]];
            }
            z[i] = acc / vals[last];
        }
        for i in (0..l.n).rev() {
            let (cols, vals) = l.row(i);
            let last = cols.len() - 1;
            z[i] /= vals[last];
            let zi = z[i];
            for k in 0..last {
                z[cols[k]] -= vals[k] * zi;
            }
        }
    }
}

/// Zero-fill incomplete LU: unit lower and upper factors share `a`'s pattern.
#[derive(Debug, Clone)]
struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    fn factor(a: &CsrMatrix) -> Result<Ilu0, LinearError> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag = vec![0usize; n];
        for (i, d) in diag.iter_mut().enumerate() {
            let (lo, hi) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            *d = lo + lu.col_idx[lo..hi].binary_search(&i).map_err(|_| LinearError::Breakdown(i))?;
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (lo, hi) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in lo..hi {
                pos[lu.col_idx[p]] = p;
            }
            for p in lo..diag[i] {
                let k = lu.col_idx[p];
                let pivot = lu.values[diag[k]];
                let lik = lu.values[p] / pivot;
                lu.values[p] = lik;
                for q in diag[k] + 1..lu.row_ptr[k + 1] {
                    let target = pos[lu.col_idx[q]];
                    if target != usize::MAX {
                        lu.values[target] -= lik * lu.values[q];
                    }
                }
            }
            if !(lu.values[diag[i]] > 0.0) {
                return Err(LinearError::Breakdown(i));
            }
            for p in lo..hi {
                pos[lu.col_idx[p]] = usize::MAX;
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut acc = r[i];
            for p in lu.row_ptr[i]..self.diag[i] {
                acc -= lu.values[p] * z[lu.col_idx[p]];
            }
            z[i] = acc;
        }
        for i in (0..lu.n).rev() {
            let mut acc = z[i];
            for p in self.diag[i] + 1..lu.row_ptr[i + 1] {
                acc -= lu.values[p] * z[lu.col_idx[p]];
            }
            z[i] = acc / lu.values[self.diag[i]];
        }
    }
}

#[derive(Debug, Clone)]
enum Precond {
    Ic0(Ic0),
    Ilu0(Ilu0),
}

impl Precond {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Precond::Ic0(p) => p.apply(r, z),
            Precond::Ilu0(p) => p.apply(r, z),
        }
    }
}

#[derive(Debug, Clone)]
enum Method {
    Direct(BandedLu),
    Iterative(Precond),
}

/// A factored (or preconditioned) system ready for repeated solves with
/// different right-hand sides.
#[derive(Debug, Clone)]
pub struct LinearSolver {
    a: CsrMatrix,
    config: SolverConfig,
    method: Method,
}

impl LinearSolver {
    pub fn new(a: CsrMatrix, config: SolverConfig) -> Result<LinearSolver, LinearError> {
        let method = if a.n < config.direct_threshold {
            Method::Direct(BandedLu::factor(&a)?)
        } else {
            Method::Iterative(match config.preconditioner {
                Preconditioner::SymmetricIc0 => Precond::Ic0(Ic0::factor(&a.symmetric_part())?),
                Preconditioner::Ilu0 => Precond::Ilu0(Ilu0::factor(&a)?),
            })
        };
        Ok(LinearSolver { a, config, method })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.method, Method::Direct(_))
    }

    /// Solves `A·x = b` to `‖r‖∞ ≤ tolerance · max(1, ‖b‖∞)`, starting from
    /// `guess` on the iterative path.
    pub fn solve(&self, b: &[f64], guess: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats), LinearError> {
        self.solve_scaled(b, guess, norm_inf(b))
    }

    /// Like [`LinearSolver::solve`] with the residual bound
    /// `tolerance · max(1, scale)`.
    pub fn solve_scaled(&self, b: &[f64], guess: Option<&[f64]>, scale: f64) -> Result<(Vec<f64>, SolveStats), LinearError> {
        let tol = self.config.tolerance * scale.max(1.0);
        if let Some(g) = guess {
            let mut r = vec![0.0; b.len()];
            residual(&self.a, self.config.execution, g, b, &mut r);
            let res = norm_inf(&r);
            if res <= tol {
                return Ok((g.to_vec(), SolveStats { iterations: 0, residual: res, direct: self.is_direct() }));
            }
        }
        match &self.method {
            Method::Direct(lu) => {
                let mut x = b.to_vec();
                lu.solve_in_place(&mut x);
                let mut r = vec![0.0; b.len()];
                residual(&self.a, self.config.execution, &x, b, &mut r);
                // Iterative refinement for badly scaled systems.
                let mut steps = 0;
                while norm_inf(&r) > tol && steps < 3 {
                    lu.solve_in_place(&mut r);
                    for (xi, di) in x.iter_mut().zip(&r) {
                        *xi += di;
                    }
                    residual(&self.a, self.config.execution, &x, b, &mut r);
                    steps += 1;
                }
                let res = norm_inf(&r);
                if res > tol {
                    return Err(LinearError::NotConverged { iterations: steps, residual: res });
                }
                Ok((x, SolveStats { iterations: steps, residual: res, direct: true }))
            }
            Method::Iterative(m) => {
                let mut x = guess.map_or_else(|| vec![0.0; b.len()], <[f64]>::to_vec);
                let (iterations, res) = self.bicgstab(m, b, &mut x, tol)?;
                Ok((x, SolveStats { iterations, residual: res, direct: false }))
            }
        }
    }

    /// Right-preconditioned BiCGSTAB with restarts from the true residual.
    fn bicgstab(&self, m: &Precond, b: &[f64], x: &mut [f64], tol: f64) -> Result<(usize, f64), LinearError> {
        let exec = self.config.execution;
        let a = &self.a;
        let n = b.len();
        let mut r = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut t = vec![0.0; n];
        let mut ph = vec![0.0; n];
        let mut sh = vec![0.0; n];
        let mut iterations = 0;
        residual(a, exec, x, b, &mut r);
        let mut res = norm_inf(&r);
        'restart: while res > tol {
            let rhat = r.clone();
            let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            loop {
                if iterations >= self.config.max_iterations {
                    return Err(LinearError::NotConverged { iterations, residual: res });
                }
                iterations += 1;
                let rho_new = par::dot(exec, &rhat, &r);
                if rho_new == 0.0 || omega == 0.0 {
                    residual(a, exec, x, b, &mut r);
                    res = norm_inf(&r);
                    continue 'restart;
                }
                let beta = (rho_new / rho) * (alpha / omega);
                rho = rho_new;
                for i in 0..n {
                    p[i] = r[i] + beta * (p[i] - omega * v[i]);
                }
                m.apply(&p, &mut ph);
                a.matvec(exec, &ph, &mut v);
                let denom = par::dot(exec, &rhat, &v);
                if denom == 0.0 {
                    residual(a, exec, x, b, &mut r);
                    res = norm_inf(&r);
                    continue 'restart;
                }
                alpha = rho / denom;
                for i in 0..n {
                    s[i] = r[i] - alpha * v[i];
                }
                if norm_inf(&s) <= tol {
                    for i in 0..n {
                        x[i] += alpha * ph[i];
                    }
                    residual(a, exec, x, b, &mut r);
                    res = norm_inf(&r);
                    continue 'restart;
                }
                m.apply(&s, &mut sh);
                a.matvec(exec, &sh, &mut t);
                let tt = par::dot(exec, &t, &t);
                omega = if tt > 0.0 { par::dot(exec, &t, &s) / tt } else { 0.0 };
                for i in 0..n {
                    x[i] += alpha * ph[i] + omega * sh[i];
                    r[i] = s[i] - omega * t[i];
                }
                if norm_inf(&r) <= tol {
                    residual(a, exec, x, b, &mut r);
                    res = norm_inf(&r);
                    continue 'restart;
                }
            }
        }
        Ok((iterations, res))
    }
}
