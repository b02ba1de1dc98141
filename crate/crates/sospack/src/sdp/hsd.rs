//! Homogeneous self-dual interior-point method for the block SDP form used
//! by this crate.
//!
//! The problem is embedded as
//!
//! ```text
//!   A x + B u - b tau           = 0      (primal feasibility)
//!   -A' y - s + c_x tau         = 0      (dual feasibility, PSD part)
//!   -B' y + c_u tau             = 0      (dual feasibility, free part)
//!   b' y - c_x' x - c_u' u - kappa = 0   (zero duality gap)
//!   x, s PSD blocks, tau, kappa >= 0
//! ```
//!
//! in minimization form (`c = -objective`). Search directions use
//! Nesterov-Todd scaling with a Mehrotra predictor-corrector; each step
//! reduces the infeasibility residuals and the complementarity measure by a
//! common factor, so the iterates converge either to a scaled solution
//! (`tau > 0`) or to a certificate of primal or dual infeasibility
//! (`kappa > 0`). Everything is deterministic: fixed starting point, fixed
//! iteration schedule, no randomized pivoting.

use nalgebra::{DMatrix, DVector};

use super::{SdpError, SdpProblem, SdpSolution, SdpSolver, SolveOptions, SolverStatus};

pub struct InteriorPointSolver;

impl SdpSolver for InteriorPointSolver {
    fn solve(
        &self,
        problem: &SdpProblem,
        options: &SolveOptions,
    ) -> Result<SdpSolution, SdpError> {
        problem.validate()?;
        match Worker::new(problem) {
            Setup::TriviallyInfeasible => Ok(SdpSolution {
                status: SolverStatus::Infeasible,
                block_values: identity_blocks(&problem.block_sizes),
                scalar_values: vec![0.0; problem.num_free],
                objective_value: 0.0,
                iterations: 0,
                residuals: (f64::INFINITY, f64::INFINITY, f64::INFINITY),
            }),
            Setup::Ready(mut worker) => Ok(worker.run(problem, options)),
        }
    }
}

fn identity_blocks(sizes: &[usize]) -> Vec<DMatrix<f64>> {
    sizes.iter().map(|&m| DMatrix::identity(m, m)).collect()
}

/// One equality row with its per-block dense symmetric coefficient matrices.
struct Row {
    blocks: Vec<(usize, DMatrix<f64>)>,
    free: Vec<(usize, f64)>,
}

enum Setup {
    TriviallyInfeasible,
    Ready(Worker),
}

struct Worker {
    sizes: Vec<usize>,
    nf: usize,
    rows: Vec<Row>,
    /// For each block, the list of (row index, position within `rows[r].blocks`).
    block_rows: Vec<Vec<(usize, usize)>>,
    b: DVector<f64>,
    c_blocks: Vec<DMatrix<f64>>,
    c_free: DVector<f64>,
    c_norm: f64,
    b_norm: f64,
    nu: f64,
}

struct State {
    x: Vec<DMatrix<f64>>,
    s: Vec<DMatrix<f64>>,
    u: DVector<f64>,
    y: DVector<f64>,
    tau: f64,
    kappa: f64,
}

impl State {
    fn scaled_candidate(&self) -> (Vec<DMatrix<f64>>, Vec<f64>) {
        let tau = self.tau.max(1e-300);
        let blocks = self.x.iter().map(|m| m / tau).collect();
        let scalars = self.u.iter().map(|v| v / tau).collect();
        (blocks, scalars)
    }
}

/// Nesterov-Todd scaling for one block: `w = r r'` satisfies `w s w = x`,
/// and `r^{-1} x r^{-T} = r' s r = diag(lambda)`.
struct Scaling {
    r: DMatrix<f64>,
    rinv: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: DVector<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Scaling> {
    let lx = cholesky_with_jitter(x)?;
    let ls = cholesky_with_jitter(s)?;
    let k = ls.transpose() * &lx;
    let svd = k.svd(true, true);
    let u = svd.u?;
    let vt = svd.v_t?;
    let sig = svd.singular_values;
    if sig.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let inv_sqrt = DVector::from_iterator(sig.len(), sig.iter().map(|&v| 1.0 / v.sqrt()));
    let mut r = &lx * vt.transpose();
    for (j, factor) in inv_sqrt.iter().enumerate() {
        r.column_mut(j).scale_mut(*factor);
    }
    let mut rinv = u.transpose() * ls.transpose();
    for (i, factor) in inv_sqrt.iter().enumerate() {
        rinv.row_mut(i).scale_mut(*factor);
    }
    let w = &r * r.transpose();
    Some(Scaling {
        r,
        rinv,
        w,
        lambda: sig,
    })
}

/// Lower Cholesky factor, retrying once with a small diagonal shift to absorb
/// rounding right at the cone boundary.
fn cholesky_with_jitter(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(c) = m.clone().cholesky() {
        return Some(c.l());
    }
    let n = m.nrows();
    let jitter = 1e-12 * (m.trace().abs() / n as f64).max(1e-12);
    let shifted = m + DMatrix::from_diagonal_element(n, n, jitter);
    shifted.cholesky().map(|c| c.l())
}

/// Largest step `alpha` with `x + alpha dx` still PSD, via the smallest
/// eigenvalue of `L^{-1} dx L^{-T}` where `x = L L'`.
fn max_psd_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> Option<f64> {
    let l = cholesky_with_jitter(x)?;
    let t1 = l.solve_lower_triangular(dx)?;
    let t2 = l.solve_lower_triangular(&t1.transpose())?;
    let sym = (&t2 + t2.transpose()).scale(0.5);
    let min_eig = sym
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig >= -1e-14 {
        Some(f64::INFINITY)
    } else {
        Some(-1.0 / min_eig)
    }
}

fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

impl Worker {
    fn new(problem: &SdpProblem) -> Setup {
        let sizes = problem.block_sizes.clone();
        let nf = problem.num_free;
        let mut rows = Vec::new();
        let mut b = Vec::new();
        for eq in &problem.equalities {
            let mut block_mats: Vec<(usize, DMatrix<f64>)> = Vec::new();
            for e in &eq.functional.block_entries {
                let m = sizes[e.block];
                let idx = match block_mats.iter().position(|(bi, _)| *bi == e.block) {
                    Some(i) => i,
                    None => {
                        block_mats.push((e.block, DMatrix::zeros(m, m)));
                        block_mats.len() - 1
                    }
                };
                let mat = &mut block_mats[idx].1;
                mat[(e.row, e.col)] += e.coef;
                if e.row != e.col {
                    mat[(e.col, e.row)] += e.coef;
                }
            }
            let mut free: Vec<(usize, f64)> = Vec::new();
            for &(idx, coef) in &eq.functional.free_entries {
                match free.iter_mut().find(|(i, _)| *i == idx) {
                    Some(entry) => entry.1 += coef,
                    None => free.push((idx, coef)),
                }
            }
            free.retain(|&(_, c)| c != 0.0);
            block_mats.retain(|(_, m)| m.amax() != 0.0);

            let mut scale = eq
                .functional
                .max_abs_coef()
                .max(free.iter().fold(0.0f64, |m, e| m.max(e.1.abs())));
            for (_, m) in &block_mats {
                scale = scale.max(m.amax());
            }
            if scale == 0.0 {
                if eq.rhs.abs() > 1e-12 {
                    return Setup::TriviallyInfeasible;
                }
                continue;
            }
            let inv = 1.0 / scale;
            for (_, m) in &mut block_mats {
                *m *= inv;
            }
            for e in &mut free {
                e.1 *= inv;
            }
            rows.push(Row {
                blocks: block_mats,
                free,
            });
            b.push(eq.rhs * inv);
        }

        // Minimization form: c = -objective, normalized once.
        let mut c_blocks: Vec<DMatrix<f64>> =
            sizes.iter().map(|&m| DMatrix::zeros(m, m)).collect();
        for e in &problem.objective.block_entries {
            c_blocks[e.block][(e.row, e.col)] -= e.coef;
            if e.row != e.col {
                c_blocks[e.block][(e.col, e.row)] -= e.coef;
            }
        }
        let mut c_free = DVector::zeros(nf);
        for &(idx, coef) in &problem.objective.free_entries {
            c_free[idx] -= coef;
        }
        let mut obj_scale = c_free.iter().fold(0.0f64, |m: f64, v: &f64| m.max(v.abs()));
        for m in &c_blocks {
            obj_scale = obj_scale.max(m.amax());
        }
        if obj_scale > 0.0 {
            let inv = 1.0 / obj_scale;
            for m in &mut c_blocks {
                *m *= inv;
            }
            c_free *= inv;
        }

        let mut block_rows = vec![Vec::new(); sizes.len()];
        for (ri, row) in rows.iter().enumerate() {
            for (pos, (bi, _)) in row.blocks.iter().enumerate() {
                block_rows[*bi].push((ri, pos));
            }
        }

        let b = DVector::from_vec(b);
        let b_norm = b.norm();
        let c_norm = (c_blocks.iter().map(|m| m.norm_squared()).sum::<f64>()
            + c_free.norm_squared())
        .sqrt();
        let nu: f64 = sizes.iter().map(|&m| m as f64).sum();

        Setup::Ready(Worker {
            sizes,
            nf,
            rows,
            block_rows,
            b,
            c_blocks,
            c_free,
            c_norm,
            b_norm,
            nu,
        })
    }

    fn p(&self) -> usize {
        self.rows.len()
    }

    /// `A x + B u` for block values `x` and free values `u`.
    fn apply_a(&self, x: &[DMatrix<f64>], u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.p(),
            self.rows.iter().map(|row| {
                let mut v = 0.0;
                for (bi, m) in &row.blocks {
                    v += frob(m, &x[*bi]);
                }
                for &(fi, coef) in &row.free {
                    v += coef * u[fi];
                }
                v
            }),
        )
    }

    /// Per-block part of `A' y`.
    fn adjoint_blocks(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> =
            self.sizes.iter().map(|&m| DMatrix::zeros(m, m)).collect();
        for (ri, row) in self.rows.iter().enumerate() {
            let yi = y[ri];
            if yi == 0.0 {
                continue;
            }
            for (bi, m) in &row.blocks {
                out[*bi] += m * yi;
            }
        }
        out
    }

    fn adjoint_free(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.nf);
        for (ri, row) in self.rows.iter().enumerate() {
            let yi = y[ri];
            for &(fi, coef) in &row.free {
                out[fi] += coef * yi;
            }
        }
        out
    }

    fn run(&mut self, problem: &SdpProblem, options: &SolveOptions) -> SdpSolution {
        let p = self.p();
        if p == 0 {
            // Every equality was trivially satisfiable; any PSD point works.
            let blocks = identity_blocks(&self.sizes);
            let scalars = vec![0.0; self.nf];
            let objective = problem.objective.evaluate(&blocks, &scalars);
            return SdpSolution {
                status: SolverStatus::Optimal,
                block_values: blocks,
                scalar_values: scalars,
                objective_value: objective,
                iterations: 0,
                residuals: (0.0, 0.0, 0.0),
            };
        }

        let mut state = State {
            x: identity_blocks(&self.sizes),
            s: identity_blocks(&self.sizes),
            u: DVector::zeros(self.nf),
            y: DVector::zeros(p),
            tau: 1.0,
            kappa: 1.0,
        };

        let mut best: Option<(f64, State, (f64, f64, f64))> = None;
        let mut stalls = 0usize;

        for iter in 0..options.max_iters {
            // Residuals of the self-dual system at the current point.
            let ax = self.apply_a(&state.x, &state.u);
            let rp = &ax - &self.b * state.tau;
            let aty = self.adjoint_blocks(&state.y);
            let rd: Vec<DMatrix<f64>> = (0..self.sizes.len())
                .map(|bi| &self.c_blocks[bi] * state.tau - &aty[bi] - &state.s[bi])
                .collect();
            let rf = &self.c_free * state.tau - self.adjoint_free(&state.y);
            let cx: f64 = (0..self.sizes.len())
                .map(|bi| frob(&self.c_blocks[bi], &state.x[bi]))
                .sum::<f64>()
                + self.c_free.dot(&state.u);
            let by = self.b.dot(&state.y);
            let rg = by - cx - state.kappa;
            let gap_inner: f64 = (0..self.sizes.len())
                .map(|bi| frob(&state.x[bi], &state.s[bi]))
                .sum::<f64>();
            let mu = (gap_inner + state.tau * state.kappa) / (self.nu + 1.0);

            // Convergence measured on the tau-scaled candidate.
            let tau = state.tau.max(1e-300);
            let pres = rp.norm() / tau / (1.0 + self.b_norm);
            let dres_psd = rd
                .iter()
                .map(|m| m.norm())
                .fold(0.0f64, f64::max);
            let dres = (dres_psd.max(rf.norm())) / tau / (1.0 + self.c_norm);
            let pobj = cx / tau;
            let dobj = by / tau;
            let relgap = (pobj - dobj).abs() / f64::max(1.0, 0.5 * (pobj.abs() + dobj.abs()));

            let score = pres.max(dres).max(relgap);
            if best.as_ref().map_or(true, |(s, _, _)| score < *s) {
                best = Some((
                    score,
                    State {
                        x: state.x.clone(),
                        s: state.s.clone(),
                        u: state.u.clone(),
                        y: state.y.clone(),
                        tau: state.tau,
                        kappa: state.kappa,
                    },
                    (pres, dres, relgap),
                ));
            }

            if pres <= options.feas_tol
                && dres <= options.feas_tol
                && relgap <= options.duality_gap_tol
            {
                return self.finish(problem, &state, SolverStatus::Optimal, iter, (pres, dres, relgap));
            }

            // Farkas-type certificates for infeasibility and unboundedness.
            if by > options.feas_tol {
                let inv = 1.0 / by;
                let cert_psd = (0..self.sizes.len())
                    .map(|bi| ((&aty[bi] + &state.s[bi]) * inv).norm())
                    .fold(0.0f64, f64::max);
                let cert_free = (self.adjoint_free(&state.y) * inv).norm();
                if cert_psd.max(cert_free) <= options.feas_tol * (1.0 + self.c_norm) {
                    return self.finish(problem, &state, SolverStatus::Infeasible, iter, (pres, dres, relgap));
                }
            }
            if cx < -options.feas_tol {
                let inv = -1.0 / cx;
                let ray_res = (&ax * inv).norm();
                if ray_res <= options.feas_tol * (1.0 + self.b_norm) {
                    return self.finish(problem, &state, SolverStatus::Unbounded, iter, (pres, dres, relgap));
                }
            }
            if state.tau < 1e-12 {
                break;
            }

            // Nesterov-Todd scalings.
            let mut scalings = Vec::with_capacity(self.sizes.len());
            let mut scaling_failed = false;
            for bi in 0..self.sizes.len() {
                match nt_scaling(&state.x[bi], &state.s[bi]) {
                    Some(sc) => scalings.push(sc),
                    None => {
                        scaling_failed = true;
                        break;
                    }
                }
            }
            if scaling_failed {
                break;
            }

            // Schur complement M = A W A' and objective images.
            let wcw: Vec<DMatrix<f64>> = (0..self.sizes.len())
                .map(|bi| {
                    if self.c_blocks[bi].amax() == 0.0 {
                        DMatrix::zeros(self.sizes[bi], self.sizes[bi])
                    } else {
                        &scalings[bi].w * &self.c_blocks[bi] * &scalings[bi].w
                    }
                })
                .collect();
            let mut m = DMatrix::<f64>::zeros(p, p);
            let mut h_c = DVector::<f64>::zeros(p);
            for bi in 0..self.sizes.len() {
                let members = &self.block_rows[bi];
                let w = &scalings[bi].w;
                for &(ri, pos) in members {
                    let ai = &self.rows[ri].blocks[pos].1;
                    let ui = w * ai * w;
                    for &(rj, pos_j) in members {
                        if rj > ri {
                            continue;
                        }
                        let aj = &self.rows[rj].blocks[pos_j].1;
                        m[(ri, rj)] += frob(&ui, aj);
                    }
                    if wcw[bi].amax() != 0.0 {
                        h_c[ri] += frob(&wcw[bi], ai);
                    }
                }
            }
            for i in 0..p {
                for j in (i + 1)..p {
                    m[(i, j)] = m[(j, i)];
                }
            }
            let c_wc: f64 = (0..self.sizes.len())
                .map(|bi| frob(&self.c_blocks[bi], &wcw[bi]))
                .sum();

            // KKT matrix over (dy, du, dtau).
            let q = p + self.nf + 1;
            let mut kmat = DMatrix::zeros(q, q);
            kmat.view_mut((0, 0), (p, p)).copy_from(&m);
            for (ri, row) in self.rows.iter().enumerate() {
                for &(fi, coef) in &row.free {
                    kmat[(ri, p + fi)] = coef;
                    kmat[(p + fi, ri)] = -coef;
                }
            }
            for i in 0..p {
                kmat[(i, q - 1)] = -(h_c[i] + self.b[i]);
                kmat[(q - 1, i)] = self.b[i] - h_c[i];
            }
            for fi in 0..self.nf {
                kmat[(p + fi, q - 1)] = self.c_free[fi];
                kmat[(q - 1, p + fi)] = -self.c_free[fi];
            }
            kmat[(q - 1, q - 1)] = c_wc + state.kappa / state.tau;

            let solver = match KktSolver::new(kmat) {
                Some(sv) => sv,
                None => break,
            };

            // Predictor (affine scaling) direction: eta = 1, sigma = 0.
            let aff = self.direction(
                &state, &scalings, &rp, &rd, &rf, rg, 1.0, None, -state.tau * state.kappa,
                &solver, &wcw,
            );
            let aff = match aff {
                Some(d) => d,
                None => break,
            };
            let alpha_aff = self.max_step(&state, &aff).min(1.0);

            // Centering parameter from the affine probe.
            let mut gap_aff = 0.0;
            for bi in 0..self.sizes.len() {
                let xn = &state.x[bi] + &aff.dx[bi] * alpha_aff;
                let sn = &state.s[bi] + &aff.ds[bi] * alpha_aff;
                gap_aff += frob(&xn, &sn);
            }
            gap_aff += (state.tau + alpha_aff * aff.dtau) * (state.kappa + alpha_aff * aff.dkappa);
            let mu_aff = (gap_aff / (self.nu + 1.0)).max(0.0);
            let sigma = ((mu_aff / mu).powi(3)).clamp(1e-10, 1.0 - 1e-10);

            // Combined corrector direction.
            let eta = 1.0 - sigma;
            let rtk = sigma * mu - state.tau * state.kappa - aff.dtau * aff.dkappa;
            let corr = self.direction(
                &state,
                &scalings,
                &rp,
                &rd,
                &rf,
                rg,
                eta,
                Some((&aff, sigma * mu)),
                rtk,
                &solver,
                &wcw,
            );
            let corr = match corr {
                Some(d) => d,
                None => break,
            };
            let alpha = (0.98 * self.max_step(&state, &corr)).min(1.0);
            if alpha < 1e-8 {
                stalls += 1;
                if stalls >= 3 {
                    break;
                }
            } else {
                stalls = 0;
            }

            for bi in 0..self.sizes.len() {
                state.x[bi] += &corr.dx[bi] * alpha;
                state.s[bi] += &corr.ds[bi] * alpha;
                let xs = (&state.x[bi] + state.x[bi].transpose()).scale(0.5);
                state.x[bi] = xs;
                let ss = (&state.s[bi] + state.s[bi].transpose()).scale(0.5);
                state.s[bi] = ss;
            }
            state.u += &corr.du * alpha;
            state.y += &corr.dy * alpha;
            state.tau += alpha * corr.dtau;
            state.kappa += alpha * corr.dkappa;
            if !state.tau.is_finite() || !state.kappa.is_finite() {
                break;
            }

            if iter + 1 == options.max_iters {
                let (_, best_state, best_res) = best.take().expect("at least one iterate");
                return self.finish(
                    problem,
                    &best_state,
                    SolverStatus::IterationLimit,
                    iter + 1,
                    best_res,
                );
            }
        }

        let (_, best_state, best_res) = match best.take() {
            Some(t) => t,
            None => (
                f64::INFINITY,
                state,
                (f64::INFINITY, f64::INFINITY, f64::INFINITY),
            ),
        };
        self.finish(
            problem,
            &best_state,
            SolverStatus::NumericalTrouble,
            options.max_iters,
            best_res,
        )
    }

    /// Solves the reduced Newton system for one right-hand side and recovers
    /// the full direction.
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        state: &State,
        scalings: &[Scaling],
        rp: &DVector<f64>,
        rd: &[DMatrix<f64>],
        rf: &DVector<f64>,
        rg: f64,
        eta: f64,
        corrector: Option<(&Direction, f64)>,
        rtk: f64,
        solver: &KktSolver,
        wcw: &[DMatrix<f64>],
    ) -> Option<Direction> {
        let p = self.p();
        let nb = self.sizes.len();

        // Complementarity right-hand side in the scaled space, per block:
        //   affine:   E = -diag(lambda)            (so R E R' = -x)
        //   combined: E = Lambda^{-1}(sigma mu I - lambda^2 - sym(dx~ ds~))
        let rer: Vec<DMatrix<f64>> = (0..nb)
            .map(|bi| {
                let sc = &scalings[bi];
                match corrector {
                    None => -&state.x[bi],
                    Some((aff, sigma_mu)) => {
                        let dxt = &sc.rinv * &aff.dx[bi] * sc.rinv.transpose();
                        let dst = sc.r.transpose() * &aff.ds[bi] * &sc.r;
                        let prod = &dxt * &dst;
                        let cross = (&prod + prod.transpose()).scale(0.5);
                        let mlen = self.sizes[bi];
                        let mut e = DMatrix::zeros(mlen, mlen);
                        for i in 0..mlen {
                            for j in 0..mlen {
                                let mut v = -cross[(i, j)];
                                if i == j {
                                    v += sigma_mu - sc.lambda[i] * sc.lambda[i];
                                }
                                e[(i, j)] = 2.0 * v / (sc.lambda[i] + sc.lambda[j]);
                            }
                        }
                        &sc.r * e * sc.r.transpose()
                    }
                }
            })
            .collect();

        // W rd W per block (skipped when eta = 0 never happens; eta > 0 always).
        let wrdw: Vec<DMatrix<f64>> = (0..nb)
            .map(|bi| &scalings[bi].w * &rd[bi] * &scalings[bi].w)
            .collect();

        // Right-hand side of the reduced system.
        let mut rhs = DVector::zeros(p + self.nf + 1);
        let a_wrdw = self.apply_a(&wrdw, &DVector::zeros(self.nf));
        let a_rer = self.apply_a(&rer, &DVector::zeros(self.nf));
        for i in 0..p {
            rhs[i] = -eta * rp[i] + eta * a_wrdw[i] - a_rer[i];
        }
        for fi in 0..self.nf {
            rhs[p + fi] = -eta * rf[fi];
        }
        let c_wrd: f64 = (0..nb)
            .map(|bi| frob(&self.c_blocks[bi], &wrdw[bi]))
            .sum();
        let c_rer: f64 = (0..nb)
            .map(|bi| frob(&self.c_blocks[bi], &rer[bi]))
            .sum();
        rhs[p + self.nf] = -eta * rg - eta * c_wrd + c_rer + rtk / state.tau;

        let sol = solver.solve(&rhs)?;
        let dy = DVector::from_iterator(p, (0..p).map(|i| sol[i]));
        let du = DVector::from_iterator(self.nf, (0..self.nf).map(|f| sol[p + f]));
        let dtau = sol[p + self.nf];

        // Recover block directions.
        let aty_dy = self.adjoint_blocks(&dy);
        let mut dx = Vec::with_capacity(nb);
        let mut ds = Vec::with_capacity(nb);
        for bi in 0..nb {
            let w = &scalings[bi].w;
            let dxb = w * &aty_dy[bi] * w - &wcw[bi] * dtau - &wrdw[bi] * eta + &rer[bi];
            let dxb = (&dxb + dxb.transpose()).scale(0.5);
            let dsb = &self.c_blocks[bi] * dtau - &aty_dy[bi] + &rd[bi] * eta;
            dx.push(dxb);
            ds.push(dsb);
        }
        let dkappa = (rtk - state.kappa * dtau) / state.tau;
        Some(Direction {
            dx,
            ds,
            du,
            dy,
            dtau,
            dkappa,
        })
    }

    /// Largest feasible step along a direction, over all cone constraints.
    fn max_step(&self, state: &State, dir: &Direction) -> f64 {
        let mut alpha = f64::INFINITY;
        for bi in 0..self.sizes.len() {
            if let Some(a) = max_psd_step(&state.x[bi], &dir.dx[bi]) {
                alpha = alpha.min(a);
            } else {
                return 0.0;
            }
            if let Some(a) = max_psd_step(&state.s[bi], &dir.ds[bi]) {
                alpha = alpha.min(a);
            } else {
                return 0.0;
            }
        }
        if dir.dtau < 0.0 {
            alpha = alpha.min(-state.tau / dir.dtau);
        }
        if dir.dkappa < 0.0 {
            alpha = alpha.min(-state.kappa / dir.dkappa);
        }
        alpha
    }

    fn finish(
        &self,
        problem: &SdpProblem,
        state: &State,
        status: SolverStatus,
        iterations: usize,
        residuals: (f64, f64, f64),
    ) -> SdpSolution {
        // For infeasible and unbounded outcomes tau tends to zero, so the
        // tau-scaled point would blow up; return the raw certificate iterate
        // instead (callers treat these statuses as "no usable values").
        let (blocks, scalars) = match status {
            SolverStatus::Infeasible | SolverStatus::Unbounded => (
                state.x.clone(),
                state.u.iter().copied().collect::<Vec<f64>>(),
            ),
            _ => state.scaled_candidate(),
        };
        let objective_value = problem.objective.evaluate(&blocks, &scalars);
        SdpSolution {
            status,
            block_values: blocks,
            scalar_values: scalars,
            objective_value,
            iterations,
            residuals,
        }
    }
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
    du: DVector<f64>,
    dy: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

/// LU-backed solver for the reduced KKT system, with one round of iterative
/// refinement and a regularized retry if the factorization is too singular.
struct KktSolver {
    kmat: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl KktSolver {
    fn new(kmat: DMatrix<f64>) -> Option<KktSolver> {
        let lu = kmat.clone().lu();
        let probe = DVector::from_element(kmat.nrows(), 1.0);
        if let Some(sol) = lu.solve(&probe) {
            if sol.iter().all(|v| v.is_finite()) {
                return Some(KktSolver { kmat, lu });
            }
        }
        // Regularized retry: +delta on the Schur part, matching signs on the
        // skew part, keeps the matrix quasi-definite without changing the
        // solution materially.
        let n = kmat.nrows();
        let delta = 1e-10 * (kmat.amax() + 1.0);
        let mut reg = kmat.clone();
        for i in 0..n {
            reg[(i, i)] += if reg[(i, i)] >= 0.0 { delta } else { -delta };
        }
        let lu = reg.clone().lu();
        let sol = lu.solve(&probe)?;
        if !sol.iter().all(|v| v.is_finite()) {
            return None;
        }
        Some(KktSolver { kmat, lu })
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut sol = self.lu.solve(rhs)?;
        // One step of iterative refinement against the unregularized matrix.
        let resid = rhs - &self.kmat * &sol;
        if let Some(corr) = self.lu.solve(&resid) {
            sol += corr;
        }
        if sol.iter().all(|v| v.is_finite()) {
            Some(sol)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{solve, BlockEntry, Equality, LinearFunctional, SdpProblem};

    fn entry(block: usize, row: usize, col: usize, coef: f64) -> BlockEntry {
        BlockEntry {
            block,
            row,
            col,
            coef,
        }
    }

    fn eq(
        block_entries: Vec<BlockEntry>,
        free_entries: Vec<(usize, f64)>,
        rhs: f64,
        label: &str,
    ) -> Equality {
        Equality {
            functional: LinearFunctional {
                block_entries,
                free_entries,
            },
            rhs,
            label: label.to_string(),
        }
    }

    #[test]
    fn pinned_scalar_and_block() {
        // maximize gamma subject to Q11 = 1, gamma + Q11 = 2, Q PSD (1x1).
        let p = SdpProblem {
            block_sizes: vec![1],
            num_free: 1,
            equalities: vec![
                eq(vec![entry(0, 0, 0, 1.0)], vec![], 1.0, "fix Q"),
                eq(vec![entry(0, 0, 0, 1.0)], vec![(0, 1.0)], 2.0, "couple"),
            ],
            objective: LinearFunctional {
                block_entries: vec![],
                free_entries: vec![(0, 1.0)],
            },
        };
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-7, "{}", sol.objective_value);
        assert!((sol.block_values[0][(0, 0)] - 1.0).abs() < 1e-7);
        assert!((sol.scalar_values[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn unbounded_ray_detected() {
        // maximize gamma subject to gamma = Q11: no upper bound.
        let p = SdpProblem {
            block_sizes: vec![1],
            num_free: 1,
            equalities: vec![eq(
                vec![entry(0, 0, 0, -1.0)],
                vec![(0, 1.0)],
                0.0,
                "gamma = Q11",
            )],
            objective: LinearFunctional {
                block_entries: vec![],
                free_entries: vec![(0, 1.0)],
            },
        };
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Unbounded);
    }

    #[test]
    fn infeasible_cone_constraint_detected() {
        // Q11 = -1 with Q PSD.
        let p = SdpProblem {
            block_sizes: vec![1],
            num_free: 0,
            equalities: vec![eq(vec![entry(0, 0, 0, 1.0)], vec![], -1.0, "Q11 = -1")],
            objective: LinearFunctional::default(),
        };
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Infeasible);
    }

    #[test]
    fn correlation_matrix_extreme_entry() {
        // maximize Q12 (joint coefficient 0.5 gives Q12 + Q21 scaled to Q12)
        // subject to Q11 = Q22 = 1; optimum is Q12 = 1.
        let p = SdpProblem {
            block_sizes: vec![2],
            num_free: 0,
            equalities: vec![
                eq(vec![entry(0, 0, 0, 1.0)], vec![], 1.0, "Q11"),
                eq(vec![entry(0, 1, 1, 1.0)], vec![], 1.0, "Q22"),
            ],
            objective: LinearFunctional {
                block_entries: vec![entry(0, 0, 1, 0.5)],
                free_entries: vec![],
            },
        };
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-6, "{}", sol.objective_value);
    }

    #[test]
    fn two_slack_bounds_pick_the_tighter() {
        // maximize gamma with gamma + s1 = 0.3, gamma + s2 = 0.7, s_i >= 0.
        let p = SdpProblem {
            block_sizes: vec![1, 1],
            num_free: 1,
            equalities: vec![
                eq(vec![entry(0, 0, 0, 1.0)], vec![(0, 1.0)], 0.3, "cap a"),
                eq(vec![entry(1, 0, 0, 1.0)], vec![(0, 1.0)], 0.7, "cap b"),
            ],
            objective: LinearFunctional {
                block_entries: vec![],
                free_entries: vec![(0, 1.0)],
            },
        };
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.objective_value - 0.3).abs() < 1e-7);
    }

    /// Hand-compiled Putinar certificate for f = 2 - x^2 on {1 - x^2 >= 0}
    /// at degree 2: maximize gamma with
    ///   f - s1 (1 - x^2) - s0 - gamma = 0,
    /// s1 a 1x1 Gram (constant), s0 a 2x2 Gram over (1, x), gamma capped at 1.
    /// Matching coefficients of 1, x, x^2 gives the equalities below; the
    /// optimum gamma = 1 at s1 = 1, s0 = 0.
    #[test]
    fn putinar_example_reaches_cap() {
        let p = SdpProblem {
            // s1, s0, cap slack
            block_sizes: vec![1, 2, 1],
            num_free: 1,
            equalities: vec![
                eq(
                    vec![entry(0, 0, 0, 1.0), entry(1, 0, 0, 1.0)],
                    vec![(0, 1.0)],
                    2.0,
                    "coef 1",
                ),
                eq(vec![entry(1, 0, 1, 1.0)], vec![], 0.0, "coef x"),
                eq(
                    vec![entry(0, 0, 0, 1.0), entry(1, 1, 1, -1.0)],
                    vec![],
                    1.0,
                    "coef x^2",
                ),
                eq(vec![entry(2, 0, 0, 1.0)], vec![(0, 1.0)], 1.0, "cap"),
            ],
            objective: LinearFunctional {
                block_entries: vec![],
                free_entries: vec![(0, 1.0)],
            },
        };
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!(
            (sol.objective_value - 1.0).abs() < 1e-6,
            "gamma = {}",
            sol.objective_value
        );
        assert!((sol.block_values[0][(0, 0)] - 1.0).abs() < 1e-6, "s1 = 1");
    }

    #[test]
    fn deterministic_across_runs() {
        let p = SdpProblem {
            block_sizes: vec![2],
            num_free: 1,
            equalities: vec![
                eq(vec![entry(0, 0, 0, 1.0)], vec![(0, 0.5)], 1.0, ""),
                eq(vec![entry(0, 1, 1, 2.0)], vec![(0, -1.0)], 0.7, ""),
                eq(vec![entry(0, 0, 1, 1.0)], vec![], 0.2, ""),
            ],
            objective: LinearFunctional {
                block_entries: vec![entry(0, 0, 0, 1.0)],
                free_entries: vec![(0, -0.25)],
            },
        };
        let a = solve(&p, &SolveOptions::default()).unwrap();
        let b = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn larger_random_feasibility_block() {
        // X PSD 6x6 with trace pinned and a few random-looking equalities;
        // checks that a midsize block solves cleanly to optimality.
        let n = 6;
        let mut equalities = vec![];
        let mut tr = vec![];
        for i in 0..n {
            tr.push(entry(0, i, i, 1.0));
        }
        equalities.push(eq(tr, vec![], 1.0, "trace"));
        equalities.push(eq(vec![entry(0, 0, 1, 1.0)], vec![], 0.05, ""));
        equalities.push(eq(vec![entry(0, 2, 3, 1.0)], vec![], -0.04, ""));
        equalities.push(eq(vec![entry(0, 4, 5, 1.0)], vec![], 0.08, ""));
        let p = SdpProblem {
            block_sizes: vec![n],
            num_free: 0,
            equalities,
            objective: LinearFunctional {
                block_entries: vec![entry(0, 0, 0, 1.0)],
                free_entries: vec![],
            },
        };
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        let x = &sol.block_values[0];
        let min_eig = crate::sdp::min_eigenvalue(x).unwrap();
        assert!(min_eig > -1e-9, "returned block is PSD, min eig {min_eig}");
        assert!((x.trace() - 1.0).abs() < 1e-7);
        assert!((x[(0, 1)] + x[(1, 0)] - 0.05).abs() < 1e-7);
    }
}
