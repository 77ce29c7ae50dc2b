//! Dense convex quadratic programming.
//!
//! Solves
//!
//! ```text
//! min  ½ xᵀQx + cᵀx
//! s.t. A x = b,   G x ≤ h,   l ≤ x ≤ u
//! ```
//!
//! with a dual active-set method in the style of Goldfarb and Idnani: start
//! from the unconstrained minimizer and add violated constraints one at a
//! time while keeping the multipliers of the working set dual feasible. The
//! final working set is re-solved as a KKT system so the reported point and
//! multipliers are consistent to machine precision.
//!
//! Multipliers follow the Lagrangian
//! `½xᵀQx + cᵀx − λ_eqᵀ(Ax − b) + μᵀ(Gx − h) − λ_lᵀ(x − l) + λ_uᵀ(x − u)`,
//! so that at the optimum `Qx + c = Aᵀλ_eq − Gᵀμ + λ_l − λ_u` with
//! `μ, λ_l, λ_u ≥ 0`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub g_ineq: DMatrix<f64>,
    pub h_ineq: DVector<f64>,
    pub lower: Option<DVector<f64>>,
    pub upper: Option<DVector<f64>>,
}

impl QpProblem {
    pub fn new(q: DMatrix<f64>, c: DVector<f64>) -> Self {
        let n = c.len();
        Self {
            q,
            c,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            g_ineq: DMatrix::zeros(0, n),
            h_ineq: DVector::zeros(0),
            lower: None,
            upper: None,
        }
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a_eq = a;
        self.b_eq = b;
        self
    }

    pub fn with_inequalities(mut self, g: DMatrix<f64>, h: DVector<f64>) -> Self {
        self.g_ineq = g;
        self.h_ineq = h;
        self
    }

    pub fn with_lower_bounds(mut self, l: DVector<f64>) -> Self {
        self.lower = Some(l);
        self
    }

    pub fn with_upper_bounds(mut self, u: DVector<f64>) -> Self {
        self.upper = Some(u);
        self
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.c.dot(x)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.q.nrows() != n || self.q.ncols() != n {
            return Err(Error::Dimension(format!(
                "Q is {}x{} but c has length {n}",
                self.q.nrows(),
                self.q.ncols()
            )));
        }
        if self.a_eq.ncols() != n || self.a_eq.nrows() != self.b_eq.len() {
            return Err(Error::Dimension("equality block A, b inconsistent".into()));
        }
        if self.g_ineq.ncols() != n || self.g_ineq.nrows() != self.h_ineq.len() {
            return Err(Error::Dimension("inequality block G, h inconsistent".into()));
        }
        for bound in [&self.lower, &self.upper].into_iter().flatten() {
            if bound.len() != n {
                return Err(Error::Dimension("bound vector length differs from n".into()));
            }
        }
        let scale = self.q.amax().max(1.0);
        if (&self.q - self.q.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Domain("Q is not symmetric".into()));
        }
        if self.q.iter().chain(self.c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("Q and c must be finite".into()));
        }
        Ok(())
    }

    /// Sum of constraint violations at `x`, each measured in the constraint's own units.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, b) in self.b_eq.iter().enumerate() {
            worst = worst.max((self.a_eq.row(i).dot(&x.transpose()) - b).abs());
        }
        for (i, h) in self.h_ineq.iter().enumerate() {
            worst = worst.max(self.g_ineq.row(i).dot(&x.transpose()) - h);
        }
        if let Some(l) = &self.lower {
            for (xi, li) in x.iter().zip(l.iter()) {
                worst = worst.max(li - xi);
            }
        }
        if let Some(u) = &self.upper {
            for (xi, ui) in x.iter().zip(u.iter()) {
                worst = worst.max(xi - ui);
            }
        }
        worst
    }
}

/// Identifies one constraint of a [`QpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintRef {
    Equality(usize),
    Inequality(usize),
    Lower(usize),
    Upper(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

/// Farkas-style evidence of infeasibility: the `violated` constraint's normal
/// is a combination of working-set normals that cannot be relaxed.
#[derive(Debug, Clone)]
pub struct InfeasibilityCertificate {
    pub violated: ConstraintRef,
    pub combination: Vec<(ConstraintRef, f64)>,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub eq_multipliers: DVector<f64>,
    pub ineq_multipliers: DVector<f64>,
    pub lower_multipliers: DVector<f64>,
    pub upper_multipliers: DVector<f64>,
    pub objective: f64,
    pub status: QpStatus,
    pub iterations: usize,
    /// Working set at termination, sorted.
    pub active: Vec<ConstraintRef>,
    pub certificate: Option<InfeasibilityCertificate>,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }

    pub fn multiplier(&self, c: ConstraintRef) -> f64 {
        match c {
            ConstraintRef::Equality(i) => self.eq_multipliers[i],
            ConstraintRef::Inequality(i) => self.ineq_multipliers[i],
            ConstraintRef::Lower(i) => self.lower_multipliers[i],
            ConstraintRef::Upper(i) => self.upper_multipliers[i],
        }
    }

    pub fn kkt_residuals(&self, p: &QpProblem) -> KktResiduals {
        let x = &self.x;
        let mut grad = &p.q * x + &p.c;
        grad -= p.a_eq.tr_mul(&self.eq_multipliers);
        grad += p.g_ineq.tr_mul(&self.ineq_multipliers);
        grad -= &self.lower_multipliers;
        grad += &self.upper_multipliers;

        let dual = self
            .ineq_multipliers
            .iter()
            .chain(self.lower_multipliers.iter())
            .chain(self.upper_multipliers.iter())
            .fold(0.0_f64, |m, v| m.max(-v));

        let mut comp: f64 = 0.0;
        let gx = &p.g_ineq * x;
        for i in 0..p.h_ineq.len() {
            comp = comp.max((self.ineq_multipliers[i] * (gx[i] - p.h_ineq[i])).abs());
        }
        if let Some(l) = &p.lower {
            for i in 0..x.len() {
                if l[i].is_finite() {
                    comp = comp.max((self.lower_multipliers[i] * (x[i] - l[i])).abs());
                }
            }
        }
        if let Some(u) = &p.upper {
            for i in 0..x.len() {
                if u[i].is_finite() {
                    comp = comp.max((self.upper_multipliers[i] * (u[i] - x[i])).abs());
                }
            }
        }
        KktResiduals {
            stationarity: grad.amax(),
            primal: p.max_violation(x).max(0.0),
            dual,
            complementarity: comp,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

#[derive(Debug, Clone)]
pub struct QpOptions {
    pub max_iter: Option<usize>,
    /// Violations below `feasibility_tol · (1 + |rhs|)` are accepted.
    pub feasibility_tol: f64,
    /// Constraints expected to be active; they are preferred when violated.
    pub warm_start: Vec<ConstraintRef>,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            max_iter: None,
            feasibility_tol: 1e-11,
            warm_start: Vec::new(),
        }
    }
}

pub fn solve_qp(problem: &QpProblem) -> Result<QpSolution> {
    solve_qp_with(problem, &QpOptions::default())
}

/// Internal constraint in `nᵀx ≥ b` form.
#[derive(Debug, Clone)]
struct Row {
    id: ConstraintRef,
    normal: DVector<f64>,
    rhs: f64,
    is_eq: bool,
}

struct Working {
    row: usize,
    /// +1 or −1 (equalities may be added with a flipped normal).
    sign: f64,
    normal: DVector<f64>,
    rhs: f64,
    qinv_n: DVector<f64>,
    is_eq: bool,
}

fn build_rows(p: &QpProblem) -> Vec<Row> {
    let n = p.n();
    let mut rows = Vec::new();
    for i in 0..p.b_eq.len() {
        rows.push(Row {
            id: ConstraintRef::Equality(i),
            normal: p.a_eq.row(i).transpose(),
            rhs: p.b_eq[i],
            is_eq: true,
        });
    }
    for i in 0..p.h_ineq.len() {
        rows.push(Row {
            id: ConstraintRef::Inequality(i),
            normal: -p.g_ineq.row(i).transpose(),
            rhs: -p.h_ineq[i],
            is_eq: false,
        });
    }
    let unit = |i: usize, s: f64| {
        let mut e = DVector::zeros(n);
        e[i] = s;
        e
    };
    if let Some(l) = &p.lower {
        for i in 0..n {
            if l[i].is_finite() {
                rows.push(Row {
                    id: ConstraintRef::Lower(i),
                    normal: unit(i, 1.0),
                    rhs: l[i],
                    is_eq: false,
                });
            }
        }
    }
    if let Some(u) = &p.upper {
        for i in 0..n {
            if u[i].is_finite() {
                rows.push(Row {
                    id: ConstraintRef::Upper(i),
                    normal: unit(i, -1.0),
                    rhs: -u[i],
                    is_eq: false,
                });
            }
        }
    }
    rows
}

fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = Cholesky::<f64, Dyn>::new(m.clone()) {
        ch.solve(rhs)
    } else {
        m.clone().lu().solve(rhs).unwrap_or_else(|| DVector::from_element(rhs.len(), f64::NAN))
    }
}

pub fn solve_qp_with(problem: &QpProblem, opts: &QpOptions) -> Result<QpSolution> {
    problem.validate()?;
    let n = problem.n();
    let ridge = 1e-12 * problem.q.diagonal().amax().max(1.0);
    let q_reg = &problem.q + DMatrix::identity(n, n) * ridge;
    let chol = Cholesky::new(q_reg.clone())
        .ok_or_else(|| Error::Domain("Q is not positive semidefinite".into()))?;
    let qinv = chol.inverse();

    let rows = build_rows(problem);
    let n_rows = rows.len();
    let max_iter = opts.max_iter.unwrap_or(20 * (n + n_rows) + 100);
    let hint: Vec<bool> = rows.iter().map(|r| opts.warm_start.contains(&r.id)).collect();

    let mut x = -(&qinv * &problem.c);
    let mut working: Vec<Working> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut m_mat = DMatrix::<f64>::zeros(0, 0);
    let mut in_working = vec![false; n_rows];
    let mut skipped_eq = vec![false; n_rows];
    let mut iterations = 0usize;
    let mut status = QpStatus::Optimal;
    let mut certificate = None;

    let tol = |r: &Row| opts.feasibility_tol * (1.0 + r.rhs.abs());

    'outer: loop {
        // pick the next constraint to enforce
        let mut pick: Option<usize> = None;
        for (j, r) in rows.iter().enumerate() {
            if r.is_eq && !in_working[j] && !skipped_eq[j] {
                pick = Some(j);
                break;
            }
        }
        if pick.is_none() {
            let mut best: Option<(bool, f64, usize)> = None;
            for (j, r) in rows.iter().enumerate() {
                if r.is_eq || in_working[j] {
                    continue;
                }
                let s = r.normal.dot(&x) - r.rhs;
                if s < -tol(r) {
                    let key = (hint[j], s, j);
                    let better = match best {
                        None => true,
                        Some((bh, bs, _)) => (key.0 && !bh) || (key.0 == bh && s < bs),
                    };
                    if better {
                        best = Some(key);
                    }
                }
            }
            pick = best.map(|(_, _, j)| j);
        }
        let Some(p) = pick else { break };

        let row = &rows[p];
        let mut sign = 1.0;
        if row.is_eq && row.normal.dot(&x) - row.rhs > 0.0 {
            sign = -1.0;
        }
        let np = &row.normal * sign;
        let bp = row.rhs * sign;
        let qinv_np = &qinv * &np;
        let curvature = np.dot(&qinv_np).max(f64::MIN_POSITIVE);
        let mut u_plus = 0.0;

        loop {
            iterations += 1;
            if iterations > max_iter {
                status = QpStatus::MaxIter;
                break 'outer;
            }
            let (z, r) = if working.is_empty() {
                (qinv_np.clone(), DVector::zeros(0))
            } else {
                let rhs = DVector::from_iterator(
                    working.len(),
                    working.iter().map(|w| w.qinv_n.dot(&np)),
                );
                let r = solve_spd(&m_mat, &rhs);
                let mut z = qinv_np.clone();
                for (w, rk) in working.iter().zip(r.iter()) {
                    z.axpy(-rk, &w.qinv_n, 1.0);
                }
                (z, r)
            };

            let mut t1 = f64::INFINITY;
            let mut drop: Option<usize> = None;
            for (k, w) in working.iter().enumerate() {
                if !w.is_eq && r[k] > 0.0 {
                    let ratio = u[k] / r[k];
                    if ratio < t1 || (ratio == t1 && drop.is_some_and(|d| working[d].row > w.row)) {
                        t1 = ratio;
                        drop = Some(k);
                    }
                }
            }
            let zn = z.dot(&np);
            let degenerate = zn <= 1e-12 * curvature;
            let sp = np.dot(&x) - bp;
            let t2 = if degenerate { f64::INFINITY } else { -sp / zn };

            if degenerate && t1.is_infinite() {
                if row.is_eq && sp.abs() <= tol(row) {
                    skipped_eq[p] = true;
                    continue 'outer;
                }
                let mut combination: Vec<(ConstraintRef, f64)> = working
                    .iter()
                    .zip(r.iter())
                    .map(|(w, rk)| (rows[w.row].id, rk * w.sign))
                    .collect();
                combination.sort_by_key(|a| a.0);
                certificate = Some(InfeasibilityCertificate {
                    violated: row.id,
                    combination,
                });
                status = QpStatus::Infeasible;
                break 'outer;
            }

            let t = t1.min(t2);
            if !degenerate {
                x.axpy(t, &z, 1.0);
            }
            for (uk, rk) in u.iter_mut().zip(r.iter()) {
                *uk -= t * rk;
            }
            u_plus += t;

            if !degenerate && t2 <= t1 {
                // full step: p joins the working set
                let mut col = DVector::zeros(working.len() + 1);
                for (k, w) in working.iter().enumerate() {
                    col[k] = w.qinv_n.dot(&np);
                }
                col[working.len()] = np.dot(&qinv_np);
                let m = working.len();
                let mut grown = DMatrix::zeros(m + 1, m + 1);
                grown.view_mut((0, 0), (m, m)).copy_from(&m_mat);
                for k in 0..=m {
                    grown[(k, m)] = col[k];
                    grown[(m, k)] = col[k];
                }
                m_mat = grown;
                working.push(Working {
                    row: p,
                    sign,
                    normal: np.clone(),
                    rhs: bp,
                    qinv_n: qinv_np.clone(),
                    is_eq: row.is_eq,
                });
                u.push(u_plus);
                in_working[p] = true;
                continue 'outer;
            }

            // partial step: release the blocking constraint and retry
            let k = drop.expect("finite partial step has a blocking constraint");
            in_working[working[k].row] = false;
            working.remove(k);
            u.remove(k);
            m_mat = m_mat.remove_row(k).remove_column(k);
        }
    }

    if status != QpStatus::Infeasible {
        polish(problem, &q_reg, &rows, &working, &mut x, &mut u, opts);
    }

    let mut sol = QpSolution {
        x: x.clone(),
        eq_multipliers: DVector::zeros(problem.b_eq.len()),
        ineq_multipliers: DVector::zeros(problem.h_ineq.len()),
        lower_multipliers: DVector::zeros(n),
        upper_multipliers: DVector::zeros(n),
        objective: problem.objective(&x),
        status,
        iterations,
        active: Vec::new(),
        certificate,
    };
    for (w, uk) in working.iter().zip(u.iter()) {
        let val = uk * w.sign;
        let id = rows[w.row].id;
        match id {
            ConstraintRef::Equality(i) => sol.eq_multipliers[i] = val,
            ConstraintRef::Inequality(i) => sol.ineq_multipliers[i] = val.max(0.0),
            ConstraintRef::Lower(i) => sol.lower_multipliers[i] = val.max(0.0),
            ConstraintRef::Upper(i) => sol.upper_multipliers[i] = val.max(0.0),
        }
        sol.active.push(id);
    }
    sol.active.sort();
    Ok(sol)
}

/// Re-solve the KKT system of the final working set:
/// `[Q N; Nᵀ 0] [x; −u] = [−c; b]`.
fn polish(
    problem: &QpProblem,
    q_reg: &DMatrix<f64>,
    rows: &[Row],
    working: &[Working],
    x: &mut DVector<f64>,
    u: &mut [f64],
    opts: &QpOptions,
) {
    let n = problem.n();
    let m = working.len();
    let mut kkt = DMatrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(&problem.q);
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&(-&problem.c));
    for (k, w) in working.iter().enumerate() {
        for i in 0..n {
            kkt[(i, n + k)] = w.normal[i];
            kkt[(n + k, i)] = w.normal[i];
        }
        rhs[n + k] = w.rhs;
    }
    let exact = kkt.clone().lu().solve(&rhs).filter(|s| s.iter().all(|v| v.is_finite()));
    let sol = match exact {
        Some(s) => s,
        None => {
            kkt.view_mut((0, 0), (n, n)).copy_from(q_reg);
            match kkt.lu().solve(&rhs) {
                Some(s) if s.iter().all(|v| v.is_finite()) => s,
                _ => return,
            }
        }
    };
    let x_new = sol.rows(0, n).into_owned();
    let u_new: Vec<f64> = (0..m).map(|k| -sol[n + k]).collect();

    let dual_ok = working
        .iter()
        .zip(u_new.iter())
        .zip(u.iter())
        .all(|((w, un), uo)| w.is_eq || *un >= -1e-9 * (1.0 + uo.abs()));
    let viol_new = rows
        .iter()
        .map(|r| {
            let s = r.normal.dot(&x_new) - r.rhs;
            if r.is_eq { s.abs() } else { -s }
        })
        .fold(0.0_f64, f64::max);
    let viol_old = rows
        .iter()
        .map(|r| {
            let s = r.normal.dot(x) - r.rhs;
            if r.is_eq { s.abs() } else { -s }
        })
        .fold(0.0_f64, f64::max);
    if dual_ok && viol_new <= viol_old.max(opts.feasibility_tol) {
        *x = x_new;
        u.copy_from_slice(&u_new);
    }
}
