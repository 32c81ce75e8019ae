use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::discrete::{points_at, QuadPoint, Tap};
use super::strip::{Field, StripProblem};
use crate::error::{Error, Result};

/// Relative residual every solve must reach.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

/// Largest number of interior unknowns factorized directly; larger
/// problems with `x′`-dependent coefficients use preconditioned conjugate
/// gradients.
pub const DIRECT_LIMIT: usize = 300_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Nodal values of an `r`-component field, indexed by `(t-layer j, layer node a, component p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub layer_size: usize,
    pub normal_intervals: usize,
    pub r: usize,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(problem: &StripProblem) -> Self {
        let len = problem.layer_size() * (problem.normal_intervals() + 1) * problem.r();
        Self {
            layer_size: problem.layer_size(),
            normal_intervals: problem.normal_intervals(),
            r: problem.r(),
            values: vec![ZERO; len],
        }
    }

    /// Samples `f(x′, t)` (returning `r` components) at every node.
    pub fn from_fn(problem: &StripProblem, f: impl Fn(&[f64], f64) -> Vec<Complex64>) -> Self {
        let mut out = Self::zeros(problem);
        let h = problem.normal_spacing();
        for j in 0..=problem.normal_intervals() {
            for a in 0..problem.layer_size() {
                let v = f(&problem.node_position(a), j as f64 * h);
                let r = out.r;
                out.at_mut(a, j).copy_from_slice(&v[..r]);
            }
        }
        out
    }

    fn offset(&self, a: usize, j: usize) -> usize {
        (j * self.layer_size + a) * self.r
    }

    pub fn at(&self, a: usize, j: usize) -> &[Complex64] {
        let o = self.offset(a, j);
        &self.values[o..o + self.r]
    }

    pub fn at_mut(&mut self, a: usize, j: usize) -> &mut [Complex64] {
        let o = self.offset(a, j);
        let r = self.r;
        &mut self.values[o..o + r]
    }

    /// Values on the layer `t = t_j`.
    pub fn layer(&self, j: usize) -> &[Complex64] {
        let o = self.offset(0, j);
        &self.values[o..o + self.layer_size * self.r]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Boundary data on `t = 0`: `layer_size × r` values, component innermost.
pub type BoundaryData = Vec<Complex64>;

/// `σ(x′) = e^{i k·x′} e_c`.
pub fn plane_wave(problem: &StripProblem, k: &[i64], c: usize) -> BoundaryData {
    let r = problem.r();
    let mut out = vec![ZERO; problem.layer_size() * r];
    for a in 0..problem.layer_size() {
        let x = problem.node_position(a);
        let phase: f64 = x.iter().zip(k).map(|(xi, &ki)| xi * ki as f64).sum();
        out[a * r + c] = Complex64::from_polar(1.0, phase);
    }
    out
}

// ---------------------------------------------------------------------------
// Tangential Fourier modes

/// Block-tridiagonal operator of one tangential Fourier mode on the normal
/// layers `0 … N`; `upper[j]` couples layers `j` and `j + 1`.
#[derive(Clone, Debug)]
pub(crate) struct ModeOperator {
    pub diag: Vec<DMatrix<Complex64>>,
    pub upper: Vec<DMatrix<Complex64>>,
}

/// Quadrature points attached to the origin column of every layer.
pub(crate) fn column_points(problem: &StripProblem) -> Result<Vec<Vec<QuadPoint>>> {
    let base = vec![0usize; problem.n() - 1];
    (0..=problem.normal_intervals()).map(|j| points_at(problem, &base, j)).collect()
}

/// Assembles the mode-`k` operator of a translation-invariant problem.
pub(crate) fn mode_operator(problem: &StripProblem, column: &[Vec<QuadPoint>], k: &[f64]) -> ModeOperator {
    let (r, nt) = (problem.r(), problem.normal_intervals());
    let dx = problem.tangential_spacing();
    let mut diag = vec![DMatrix::zeros(r, r); nt + 1];
    let mut upper = vec![DMatrix::zeros(r, r); nt];
    let phase = |tap: &Tap| -> Complex64 {
        let s: f64 = k.iter().zip(&tap.offset).map(|(ki, &o)| ki * o as f64).sum();
        Complex64::from_polar(1.0, s * dx)
    };
    for points in column {
        for q in points {
            q.for_each_block(r, |ta, tb, block| {
                let f = phase(ta).conj() * phase(tb);
                let target = if ta.j == tb.j {
                    &mut diag[ta.j]
                } else if tb.j == ta.j + 1 {
                    &mut upper[ta.j]
                } else {
                    // the (j+1, j) entries are the adjoints of `upper`
                    return;
                };
                for p in 0..r {
                    for c in 0..r {
                        target[(p, c)] += block[p * r + c] * f;
                    }
                }
            });
        }
    }
    ModeOperator { diag, upper }
}

/// Block Cholesky factor of the interior part (layers `1 … N−1`).
#[derive(Clone, Debug)]
pub(crate) struct ModeFactor {
    schur_inv: Vec<DMatrix<Complex64>>,
    upper: Vec<DMatrix<Complex64>>,
    coupling_bottom: DMatrix<Complex64>,
}

fn not_positive(what: &str, m: &DMatrix<Complex64>) -> Error {
    let diag: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].re).collect();
    let hi = diag.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let lo = diag.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    Error::Solver {
        reason: format!("{what} is not positive definite"),
        condition_estimate: if lo > 0.0 { hi / lo } else { f64::INFINITY },
    }
}

impl ModeOperator {
    pub fn factor(&self) -> Result<ModeFactor> {
        let nt = self.diag.len() - 1;
        let mut schur_inv = Vec::with_capacity(nt - 1);
        for j in 1..nt {
            let mut s = self.diag[j].clone();
            if j > 1 {
                let u = &self.upper[j - 1];
                s -= u.adjoint() * &schur_inv[j - 2] * u;
            }
            let chol = s.clone().cholesky().ok_or_else(|| not_positive("discrete operator", &s))?;
            schur_inv.push(chol.inverse());
        }
        Ok(ModeFactor { schur_inv, upper: self.upper[1..nt].to_vec(), coupling_bottom: self.upper[0].adjoint() })
    }
}

impl ModeFactor {
    /// Solves the interior system for right-hand side blocks `b[j−1]`, `j = 1 … N−1`.
    pub fn solve(&self, mut b: Vec<DMatrix<Complex64>>) -> Vec<DMatrix<Complex64>> {
        let len = self.schur_inv.len();
        for j in 1..len {
            let prev = self.upper[j - 1].adjoint() * &self.schur_inv[j - 1] * &b[j - 1];
            b[j] -= prev;
        }
        let mut x = vec![DMatrix::zeros(0, 0); len];
        x[len - 1] = &self.schur_inv[len - 1] * &b[len - 1];
        for j in (0..len - 1).rev() {
            let rhs = &b[j] - &self.upper[j] * &x[j + 1];
            x[j] = &self.schur_inv[j] * rhs;
        }
        x
    }

    /// Layers `0 … N` of the solution with bottom values `sigma` (`r × cols`) and zero top.
    pub fn solve_dirichlet(&self, sigma: &DMatrix<Complex64>) -> Vec<DMatrix<Complex64>> {
        let len = self.schur_inv.len();
        let cols = sigma.ncols();
        let mut b = vec![DMatrix::zeros(sigma.nrows(), cols); len];
        b[0] = -(&self.coupling_bottom * sigma);
        let mut out = Vec::with_capacity(len + 2);
        out.push(sigma.clone());
        out.extend(self.solve(b));
        out.push(DMatrix::zeros(sigma.nrows(), cols));
        out
    }
}

/// Integer wavenumber of DFT index `i` on `m` points.
fn wavenumber(i: usize, m: usize) -> f64 {
    if i <= m / 2 {
        i as f64
    } else {
        i as f64 - m as f64
    }
}

/// Wavenumber vector of layer frequency index `a`.
pub(crate) fn layer_wavenumber(problem: &StripProblem, a: usize) -> Vec<f64> {
    problem.layer_multi_index(a).into_iter().map(|i| wavenumber(i, problem.tangential_nodes())).collect()
}

/// In-place DFT of one layer (`layer_size × r`, component innermost);
/// `inverse` includes the `1/L` normalization.
pub(crate) fn layer_transform(problem: &StripProblem, data: &mut [Complex64], inverse: bool, planner: &mut FftPlanner<f64>) {
    let (m, r) = (problem.tangential_nodes(), problem.r());
    let fft = if inverse { planner.plan_fft_inverse(m) } else { planner.plan_fft_forward(m) };
    let dims = problem.n() - 1;
    let mut line = vec![ZERO; m];
    for axis in 0..dims {
        let stride = if dims == 2 && axis == 0 { m } else { 1 };
        let lines = problem.layer_size() / m;
        for l in 0..lines {
            let start = if dims == 2 && axis == 0 { l } else { l * m };
            for p in 0..r {
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[(start + i * stride) * r + p];
                }
                fft.process(&mut line);
                for (i, v) in line.iter().enumerate() {
                    data[(start + i * stride) * r + p] = *v;
                }
            }
        }
    }
    if inverse {
        let s = 1.0 / problem.layer_size() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Exact solver for translation-invariant problems: one factorization per
/// tangential Fourier mode.
pub(crate) struct ModeSolver {
    factors: Vec<ModeFactor>,
}

impl ModeSolver {
    pub fn new(problem: &StripProblem) -> Result<Self> {
        let column = column_points(problem)?;
        let factors = (0..problem.layer_size())
            .map(|a| mode_operator(problem, &column, &layer_wavenumber(problem, a)).factor())
            .collect::<Result<_>>()?;
        Ok(Self { factors })
    }

    /// Applies the interior inverse to a residual defined on layers `1 … N−1`.
    fn apply_inverse(&self, problem: &StripProblem, rhs: &[Complex64], planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
        let (l, r, nt) = (problem.layer_size(), problem.r(), problem.normal_intervals());
        let mut hat = rhs.to_vec();
        for j in 0..nt - 1 {
            layer_transform(problem, &mut hat[j * l * r..(j + 1) * l * r], false, planner);
        }
        // the forward transform is unnormalized, so divide by L
        let s = 1.0 / l as f64;
        for (a, f) in self.factors.iter().enumerate() {
            let b = (0..nt - 1)
                .map(|j| DMatrix::from_fn(r, 1, |p, _| hat[(j * l + a) * r + p] * s))
                .collect();
            for (j, x) in f.solve(b).into_iter().enumerate() {
                for p in 0..r {
                    hat[(j * l + a) * r + p] = x[(p, 0)];
                }
            }
        }
        for j in 0..nt - 1 {
            let layer = &mut hat[j * l * r..(j + 1) * l * r];
            layer_transform(problem, layer, true, planner);
            layer.iter_mut().for_each(|v| *v *= l as f64);
        }
        hat
    }

    fn solve(&self, problem: &StripProblem, sigma: &BoundaryData, planner: &mut FftPlanner<f64>) -> GridFunction {
        let (l, r) = (problem.layer_size(), problem.r());
        let mut hat = sigma.clone();
        layer_transform(problem, &mut hat, false, planner);
        let s = 1.0 / l as f64;
        let mut out = GridFunction::zeros(problem);
        for (a, f) in self.factors.iter().enumerate() {
            let sig = DMatrix::from_fn(r, 1, |p, _| hat[a * r + p] * s);
            for (j, x) in f.solve_dirichlet(&sig).into_iter().enumerate() {
                for p in 0..r {
                    out.values[(j * l + a) * r + p] = x[(p, 0)];
                }
            }
        }
        for j in 0..=problem.normal_intervals() {
            let o = j * l * r;
            let layer = &mut out.values[o..o + l * r];
            layer_transform(problem, layer, true, planner);
            layer.iter_mut().for_each(|v| *v *= l as f64);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Assembled sparse operator

/// Hermitian stiffness matrix over all nodes in compressed-row form.
#[derive(Clone, Debug)]
pub struct StiffnessMatrix {
    pub size: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl StiffnessMatrix {
    pub fn assemble(problem: &StripProblem) -> Result<Self> {
        let (l, r, nt) = (problem.layer_size(), problem.r(), problem.normal_intervals());
        let size = l * (nt + 1) * r;
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); size];
        for j in 0..=nt {
            for a in 0..l {
                let base = problem.layer_multi_index(a);
                let node = |tap: &Tap| -> usize {
                    let idx: Vec<i64> = base.iter().zip(&tap.offset).map(|(&b, &o)| b as i64 + o).collect();
                    tap.j * l + problem.layer_index(&idx)
                };
                for q in points_at(problem, &base, j)? {
                    q.for_each_block(r, |ta, tb, block| {
                        let (na, nb) = (node(ta), node(tb));
                        for p in 0..r {
                            for c in 0..r {
                                let v = block[p * r + c];
                                if v != ZERO {
                                    rows[na * r + p].push((nb * r + c, v));
                                }
                            }
                        }
                    });
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(size + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            let mut last = usize::MAX;
            for (c, v) in row {
                if c == last {
                    *vals.last_mut().expect("entry") += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = c;
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { size, row_ptr, cols, vals })
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = K x` over all nodes.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.size)
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|e| self.vals[e] * x[self.cols[e]]).sum())
            .collect()
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |e| (self.cols[e], self.vals[e]))
    }
}

/// Interior unknowns are the layers `1 … N−1`.
struct InteriorMap {
    offset: usize,
    len: usize,
}

impl InteriorMap {
    fn new(problem: &StripProblem) -> Self {
        let lr = problem.layer_size() * problem.r();
        Self { offset: lr, len: lr * (problem.normal_intervals() - 1) }
    }

    fn interior(&self, global: usize) -> Option<usize> {
        global.checked_sub(self.offset).filter(|&i| i < self.len)
    }
}

fn interior_apply(k: &StiffnessMatrix, map: &InteriorMap, x: &[Complex64]) -> Vec<Complex64> {
    (0..map.len)
        .map(|i| k.row(i + map.offset).filter_map(|(c, v)| map.interior(c).map(|ci| v * x[ci])).sum())
        .collect()
}

/// `−K_{IB} σ`.
fn boundary_rhs(k: &StiffnessMatrix, map: &InteriorMap, sigma: &BoundaryData) -> Vec<Complex64> {
    (0..map.len)
        .map(|i| {
            -k.row(i + map.offset).filter(|(c, _)| *c < map.offset).map(|(c, v)| v * sigma[c]).sum::<Complex64>()
        })
        .collect()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn diagonal_condition(k: &StiffnessMatrix, map: &InteriorMap) -> f64 {
    let d: Vec<f64> = (0..map.len)
        .map(|i| k.row(i + map.offset).find(|(c, _)| *c == i + map.offset).map_or(0.0, |(_, v)| v.re.abs()))
        .collect();
    let hi = d.iter().copied().fold(0.0, f64::max);
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Which algorithm a solve used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    /// Exact per-mode block factorization (translation-invariant problems).
    Modal,
    /// Sparse Cholesky factorization.
    Direct,
    /// Conjugate gradients preconditioned by the `x′`-averaged modal solver.
    PreconditionedCg,
}

/// Picks the solver for a problem.
pub fn solver_kind(problem: &StripProblem) -> SolverKind {
    let unknowns = problem.layer_size() * (problem.normal_intervals() - 1) * problem.r();
    if problem.is_translation_invariant() {
        SolverKind::Modal
    } else if unknowns <= DIRECT_LIMIT {
        SolverKind::Direct
    } else {
        SolverKind::PreconditionedCg
    }
}

/// The problem with coefficients averaged over a subgrid of `x′`.
fn averaged(problem: &StripProblem) -> Result<StripProblem> {
    let n = problem.n();
    let m = problem.tangential_nodes();
    let step = (m / 32).max(1);
    let samples: Vec<Vec<f64>> = (0..problem.layer_size())
        .filter(|&a| problem.layer_multi_index(a).iter().all(|i| i % step == 0))
        .map(|a| problem.node_position(a))
        .collect();
    let count = samples.len() as f64;
    let (g, w) = (problem.metric().clone(), problem.connection().clone());
    let s1 = samples.clone();
    let metric = Field::profile(move |t| {
        let mut acc = vec![0.0; n * n];
        for x in &s1 {
            for (a, v) in acc.iter_mut().zip(g.at(x, t)) {
                *a += v / count;
            }
        }
        acc
    });
    let connection = Field::profile(move |t| {
        let mut acc: Vec<Complex64> = Vec::new();
        for x in &samples {
            let v = w.at(x, t);
            if acc.is_empty() {
                acc = vec![ZERO; v.len()];
            }
            for (a, v) in acc.iter_mut().zip(v) {
                *a += v / count;
            }
        }
        acc
    });
    StripProblem::new(n, problem.r(), m, metric, connection)?.with_normal_intervals(problem.normal_intervals())
}

/// Reusable solver state for one problem.
pub struct DirichletSolver<'a> {
    problem: &'a StripProblem,
    kind: SolverKind,
    modal: Option<ModeSolver>,
    stiffness: Option<StiffnessMatrix>,
    direct: Option<faer::sparse::linalg::solvers::Llt<usize, Complex64>>,
    planner: FftPlanner<f64>,
}

impl<'a> DirichletSolver<'a> {
    pub fn new(problem: &'a StripProblem) -> Result<Self> {
        Self::with_kind(problem, solver_kind(problem))
    }

    /// Forces an algorithm; `Modal` requires a translation-invariant problem.
    pub fn with_kind(problem: &'a StripProblem, kind: SolverKind) -> Result<Self> {
        let mut s = Self { problem, kind, modal: None, stiffness: None, direct: None, planner: FftPlanner::new() };
        match kind {
            SolverKind::Modal => {
                if !problem.is_translation_invariant() {
                    return Err(Error::Shape("the modal solver needs x′-independent coefficients".into()));
                }
                s.modal = Some(ModeSolver::new(problem)?);
            }
            SolverKind::Direct => {
                let k = StiffnessMatrix::assemble(problem)?;
                let map = InteriorMap::new(problem);
                let mut triplets = Vec::with_capacity(k.nnz());
                for i in 0..map.len {
                    for (c, v) in k.row(i + map.offset) {
                        if let Some(ci) = map.interior(c) {
                            triplets.push(faer::sparse::Triplet::new(i, ci, v));
                        }
                    }
                }
                let mat = faer::sparse::SparseColMat::<usize, Complex64>::try_new_from_triplets(map.len, map.len, &triplets)
                    .map_err(|e| Error::Solver { reason: format!("sparse assembly failed: {e:?}"), condition_estimate: f64::NAN })?;
                let llt = mat.sp_cholesky(faer::Side::Lower).map_err(|e| Error::Solver {
                    reason: format!("sparse Cholesky factorization failed: {e}"),
                    condition_estimate: diagonal_condition(&k, &map),
                })?;
                s.direct = Some(llt);
                s.stiffness = Some(k);
            }
            SolverKind::PreconditionedCg => {
                s.stiffness = Some(StiffnessMatrix::assemble(problem)?);
                s.modal = Some(ModeSolver::new(&averaged(problem)?)?);
            }
        }
        Ok(s)
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    /// Harmonic extension of `sigma` (zero on the top edge).
    pub fn solve(&mut self, sigma: &BoundaryData) -> Result<GridFunction> {
        let problem = self.problem;
        let lr = problem.layer_size() * problem.r();
        if sigma.len() != lr {
            return Err(Error::Shape(format!("boundary data must hold {lr} values")));
        }
        if self.kind == SolverKind::Modal {
            let out = self.modal.as_ref().expect("modal factors").solve(problem, sigma, &mut self.planner);
            return Ok(out);
        }
        let k = self.stiffness.as_ref().expect("stiffness");
        let map = InteriorMap::new(problem);
        let rhs = boundary_rhs(k, &map, sigma);
        let scale = norm(&rhs);
        let interior = if scale == 0.0 {
            vec![ZERO; map.len]
        } else if let Some(llt) = &self.direct {
            use faer::linalg::solvers::Solve;
            let mut b = faer::Mat::<Complex64>::from_fn(map.len, 1, |i, _| rhs[i]);
            llt.solve_in_place(b.as_mut());
            (0..map.len).map(|i| b[(i, 0)]).collect()
        } else {
            let pre = self.modal.as_ref().expect("preconditioner");
            pcg(k, &map, &rhs, |v, planner| pre.apply_inverse(problem, v, planner), &mut self.planner)?
        };
        let residual: Vec<Complex64> =
            interior_apply(k, &map, &interior).iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let rel = if scale == 0.0 { 0.0 } else { norm(&residual) / scale };
        if rel > SOLVER_TOLERANCE {
            return Err(Error::Solver {
                reason: format!("relative residual {rel:.3e} above {SOLVER_TOLERANCE:.0e}"),
                condition_estimate: diagonal_condition(k, &map),
            });
        }
        let mut out = GridFunction::zeros(problem);
        out.values[..lr].copy_from_slice(sigma);
        out.values[lr..lr + map.len].copy_from_slice(&interior);
        Ok(out)
    }
}

fn pcg(
    k: &StiffnessMatrix,
    map: &InteriorMap,
    rhs: &[Complex64],
    precondition: impl Fn(&[Complex64], &mut FftPlanner<f64>) -> Vec<Complex64>,
    planner: &mut FftPlanner<f64>,
) -> Result<Vec<Complex64>> {
    let target = 0.01 * SOLVER_TOLERANCE * norm(rhs);
    let mut x = precondition(rhs, planner);
    let ax = interior_apply(k, map, &x);
    let mut res: Vec<Complex64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z = precondition(&res, planner);
    let mut p = z.clone();
    let mut rz = dot(&res, &z);
    for _ in 0..500 {
        if norm(&res) <= target {
            return Ok(x);
        }
        let ap = interior_apply(k, map, &p);
        let pap = dot(&p, &ap);
        if pap.re <= 0.0 {
            return Err(Error::Solver {
                reason: "operator is not positive definite (conjugate gradients broke down)".into(),
                condition_estimate: diagonal_condition(k, map),
            });
        }
        let alpha = rz / pap;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        for (ri, api) in res.iter_mut().zip(&ap) {
            *ri -= alpha * api;
        }
        z = precondition(&res, planner);
        let rz_new = dot(&res, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::Solver {
        reason: "conjugate gradients did not converge in 500 iterations".into(),
        condition_estimate: diagonal_condition(k, map),
    })
}

/// Harmonic extension of `sigma` with zero data on the top edge.
pub fn solve_dirichlet(problem: &StripProblem, sigma: &BoundaryData) -> Result<GridFunction> {
    DirichletSolver::new(problem)?.solve(sigma)
}
