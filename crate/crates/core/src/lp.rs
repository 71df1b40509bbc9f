//! A small dense revised-simplex solver.
//!
//! Two-phase primal simplex over `min c'x, x >= 0` with `<=`, `>=` and `=` rows.
//! The basis inverse is kept explicitly (dense `m x m`) and refactored
//! periodically; columns are stored sparse. Pricing is Dantzig's rule with a
//! switch to Bland's rule after a run of degenerate pivots.
//!
//! Columns can be appended to a solved program and the solve resumed from the
//! current basis, which is what column generation needs.

use std::fmt::Write as _;

use crate::error::LpError;

const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-7;
/// Used only when no entry of the direction clears `PIVOT_TOL`.
const PIVOT_TOL_FALLBACK: f64 = 1e-11;
const REFACTOR_EVERY: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Constraint {
            coeffs,
            relation,
            rhs,
        }
    }
}

/// `min objective' x` subject to `constraints`, `x >= 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    /// Plain-text listing, one row per line, for cross-checking with other solvers.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vars {}", self.num_vars());
        let _ = writeln!(out, "min {}", join(&self.objective));
        for c in &self.constraints {
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, "row {} {} {}", join(&c.coeffs), rel, c.rhs);
        }
        out
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::Malformed(format!(
                    "row {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(LpError::Malformed(format!(
                    "row {i} has a non-finite entry"
                )));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::Malformed("non-finite objective".into()));
        }
        Ok(())
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// One multiplier per constraint, in the orientation of the original rows:
    /// nonnegative for `>=` rows, nonpositive for `<=` rows of a minimisation.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LpSolution {
    fn with_status(status: LpStatus, n: usize, m: usize, pivots: usize) -> Self {
        LpSolution {
            status,
            objective: f64::NAN,
            primal: vec![0.0; n],
            duals: vec![0.0; m],
            pivots,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let mut s = Simplex::new(lp)?;
    s.solve()
}

/// A new column offered by a pricing routine: its cost and dense coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PricedColumn {
    pub cost: f64,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnGenResult {
    pub solution: LpSolution,
    /// Columns appended during the run; their primal values follow the base
    /// variables in `solution.primal`.
    pub generated: Vec<PricedColumn>,
    pub rounds: usize,
}

/// Default round limit for `m` rows.
pub fn default_round_limit(m: usize) -> usize {
    10 * m + 1000
}

/// Column generation driver.
///
/// `pricing` receives the current duals and returns candidate columns; the loop
/// stops when it returns none. Columns whose reduced cost is not below `-1e-7`
/// are discarded, so a pricing routine may return its best column unfiltered.
pub fn solve_lp_with_columns<F>(
    base: &LinearProgram,
    pricing: F,
    round_limit: usize,
) -> Result<ColumnGenResult, LpError>
where
    F: FnMut(&[f64]) -> Vec<PricedColumn>,
{
    solve_lp_with_columns_from(base, None, pricing, round_limit)
}

/// As [`solve_lp_with_columns`], optionally starting from a known feasible basis
/// of structural columns (see [`Simplex::warm_start`]).
pub fn solve_lp_with_columns_from<F>(
    base: &LinearProgram,
    warm: Option<&[usize]>,
    mut pricing: F,
    round_limit: usize,
) -> Result<ColumnGenResult, LpError>
where
    F: FnMut(&[f64]) -> Vec<PricedColumn>,
{
    let mut s = Simplex::new(base)?;
    let perturbed = match warm {
        Some(b) if s.warm_start(b)? => {
            s.perturb(1e-7)?;
            true
        }
        _ => false,
    };
    let mut solution = s.solve()?;
    let mut generated = Vec::new();
    let mut rounds = 0;
    while solution.is_optimal() {
        let candidates = pricing(&solution.duals);
        let fresh: Vec<PricedColumn> = candidates
            .into_iter()
            .filter(|c| {
                let rc = c.cost
                    - c.coeffs
                        .iter()
                        .zip(&solution.duals)
                        .map(|(a, y)| a * y)
                        .sum::<f64>();
                rc < -1e-7
            })
            .collect();
        if fresh.is_empty() {
            break;
        }
        if rounds == round_limit {
            return Err(LpError::IterationLimit(round_limit));
        }
        rounds += 1;
        for c in fresh {
            s.add_column(c.cost, &c.coeffs);
            generated.push(c);
        }
        solution = s.resume()?;
    }
    if perturbed && solution.is_optimal() {
        solution = s.unperturb()?;
    }
    Ok(ColumnGenResult {
        solution,
        generated,
        rounds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

#[derive(Debug, Clone)]
struct Column {
    cost: f64,
    entries: Vec<(usize, f64)>,
    kind: ColKind,
}

/// Solver state, reusable across column additions.
#[derive(Debug, Clone)]
pub struct Simplex {
    m: usize,
    n_struct: usize,
    cols: Vec<Column>,
    rhs: Vec<f64>,
    /// +1 or -1 per row: rows with negative rhs are negated on entry.
    row_sign: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<Option<usize>>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    pivots_since_refactor: usize,
    total_pivots: usize,
    phase_one_done: bool,
    /// Unperturbed right-hand side while [`Simplex::perturb`] is in effect.
    true_rhs: Option<Vec<f64>>,
}

impl Simplex {
    pub fn new(lp: &LinearProgram) -> Result<Self, LpError> {
        lp.validate()?;
        let m = lp.constraints.len();
        let n = lp.num_vars();
        let mut row_sign = vec![1.0; m];
        let mut rhs = vec![0.0; m];
        let mut rels = Vec::with_capacity(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            let mut rel = c.relation;
            if c.rhs < 0.0 {
                row_sign[i] = -1.0;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            rhs[i] = c.rhs * row_sign[i];
            rels.push(rel);
        }
        let mut cols = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            let entries = (0..m)
                .filter_map(|i| {
                    let v = lp.constraints[i].coeffs[j] * row_sign[i];
                    (v != 0.0).then_some((i, v))
                })
                .collect();
            cols.push(Column {
                cost: lp.objective[j],
                entries,
                kind: ColKind::Structural,
            });
        }
        let mut basis = vec![usize::MAX; m];
        for (i, rel) in rels.iter().enumerate() {
            match rel {
                Relation::Le => {
                    basis[i] = cols.len();
                    cols.push(Column {
                        cost: 0.0,
                        entries: vec![(i, 1.0)],
                        kind: ColKind::Slack,
                    });
                }
                Relation::Ge => {
                    cols.push(Column {
                        cost: 0.0,
                        entries: vec![(i, -1.0)],
                        kind: ColKind::Slack,
                    });
                    basis[i] = cols.len();
                    cols.push(Column {
                        cost: 0.0,
                        entries: vec![(i, 1.0)],
                        kind: ColKind::Artificial,
                    });
                }
                Relation::Eq => {
                    basis[i] = cols.len();
                    cols.push(Column {
                        cost: 0.0,
                        entries: vec![(i, 1.0)],
                        kind: ColKind::Artificial,
                    });
                }
            }
        }
        let mut in_basis = vec![None; cols.len()];
        for (i, &b) in basis.iter().enumerate() {
            in_basis[b] = Some(i);
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        Ok(Simplex {
            m,
            n_struct: n,
            cols,
            xb: rhs.clone(),
            rhs,
            row_sign,
            basis,
            in_basis,
            binv,
            pivots_since_refactor: 0,
            total_pivots: 0,
            phase_one_done: false,
            true_rhs: None,
        })
    }

    pub fn num_structural(&self) -> usize {
        self.n_struct
    }

    /// Appends a structural column (nonbasic at zero).
    pub fn add_column(&mut self, cost: f64, coeffs: &[f64]) {
        assert_eq!(
            coeffs.len(),
            self.m,
            "column height must match the row count"
        );
        let entries = coeffs
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| {
                let v = v * self.row_sign[i];
                (v != 0.0).then_some((i, v))
            })
            .collect();
        self.cols.push(Column {
            cost,
            entries,
            kind: ColKind::Structural,
        });
        self.in_basis.push(None);
        self.n_struct += 1;
    }

    /// Starts from the basis formed by structural columns `structural[i]` (one
    /// per row). Returns `false` and leaves the solver untouched when that basis
    /// is singular or not primal feasible.
    pub fn warm_start(&mut self, structural: &[usize]) -> Result<bool, LpError> {
        if structural.len() != self.m || self.total_pivots > 0 {
            return Ok(false);
        }
        let index: Vec<usize> = self
            .cols
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ColKind::Structural)
            .map(|(j, _)| j)
            .collect();
        let Some(basis) = structural
            .iter()
            .map(|&k| index.get(k).copied())
            .collect::<Option<Vec<usize>>>()
        else {
            return Ok(false);
        };
        let saved = (
            self.basis.clone(),
            self.in_basis.clone(),
            self.binv.clone(),
            self.xb.clone(),
        );
        for &b in &self.basis {
            self.in_basis[b] = None;
        }
        for (i, &b) in basis.iter().enumerate() {
            if self.in_basis[b].is_some() {
                (self.basis, self.in_basis, self.binv, self.xb) = saved;
                return Ok(false);
            }
            self.in_basis[b] = Some(i);
        }
        self.basis = basis;
        if self.refactor().is_err() || self.xb.iter().any(|&x| x < -FEAS_TOL) {
            (self.basis, self.in_basis, self.binv, self.xb) = saved;
            self.pivots_since_refactor = 0;
            return Ok(false);
        }
        self.phase_one_done = true;
        Ok(true)
    }

    /// Raises each right-hand side by a distinct amount of relative order `eps`
    /// to break degenerate ties. Must follow a successful [`Simplex::warm_start`]
    /// with a basis that stays feasible under the change (true for covering rows).
    pub fn perturb(&mut self, eps: f64) -> Result<(), LpError> {
        if self.true_rhs.is_some() {
            return Ok(());
        }
        self.true_rhs = Some(self.rhs.clone());
        for (i, r) in self.rhs.iter_mut().enumerate() {
            // deterministic spread in [1, 2)
            let spread = 1.0 + ((i as f64 + 1.0) * 0.618_033_988_75).fract();
            *r += eps * spread * (1.0 + r.abs());
        }
        self.refactor()
    }

    /// Restores the right-hand side after [`Simplex::perturb`] and re-solves.
    pub fn unperturb(&mut self) -> Result<LpSolution, LpError> {
        if let Some(rhs) = self.true_rhs.take() {
            self.rhs = rhs;
            self.refactor()?;
            for x in &mut self.xb {
                if *x < 0.0 && *x > -1e-6 {
                    *x = 0.0;
                }
            }
            if self.xb.iter().any(|&x| x < 0.0) {
                return Err(LpError::NumericalFailure(
                    "basis infeasible after removing perturbation".into(),
                ));
            }
        }
        self.resume()
    }

    pub fn solve(&mut self) -> Result<LpSolution, LpError> {
        if !self.phase_one_done {
            let has_artificial = self
                .basis
                .iter()
                .any(|&b| self.cols[b].kind == ColKind::Artificial);
            if has_artificial {
                let costs: Vec<f64> = self
                    .cols
                    .iter()
                    .map(|c| {
                        if c.kind == ColKind::Artificial {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                match self.iterate(&costs, true)? {
                    IterOutcome::Optimal => {}
                    IterOutcome::Unbounded => {
                        return Err(LpError::NumericalFailure(
                            "phase one reported unbounded".into(),
                        ));
                    }
                }
                let infeas: f64 = self
                    .basis
                    .iter()
                    .zip(&self.xb)
                    .filter(|(&b, _)| self.cols[b].kind == ColKind::Artificial)
                    .map(|(_, &x)| x)
                    .sum();
                let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                if infeas > 1e-8 * scale {
                    return Ok(LpSolution::with_status(
                        LpStatus::Infeasible,
                        self.n_struct,
                        self.m,
                        self.total_pivots,
                    ));
                }
                self.drive_out_artificials();
            }
            self.phase_one_done = true;
        }
        self.resume()
    }

    /// Phase two from the current (primal feasible) basis.
    pub fn resume(&mut self) -> Result<LpSolution, LpError> {
        if !self.phase_one_done {
            return self.solve();
        }
        let costs: Vec<f64> = self.cols.iter().map(|c| c.cost).collect();
        for attempt in 0..2 {
            match self.iterate(&costs, false)? {
                IterOutcome::Unbounded => {
                    return Ok(LpSolution::with_status(
                        LpStatus::Unbounded,
                        self.n_struct,
                        self.m,
                        self.total_pivots,
                    ));
                }
                IterOutcome::Optimal => {}
            }
            // confirm optimality on freshly factored numbers; large programs only
            // after enough pivots to matter
            if self.pivots_since_refactor == 0 || (self.m > 64 && self.pivots_since_refactor < 20) {
                break;
            }
            self.refactor()?;
            if self.xb.iter().all(|&x| x >= -FEAS_TOL)
                && self.entering(&costs, false, false).is_none()
            {
                break;
            }
            if attempt == 1 {
                return Err(LpError::NumericalFailure(
                    "optimality lost after refactorisation".into(),
                ));
            }
        }
        Ok(self.extract(&costs))
    }

    fn extract(&self, costs: &[f64]) -> LpSolution {
        let mut primal = vec![0.0; self.n_struct];
        let mut struct_index = 0;
        let mut map = vec![usize::MAX; self.cols.len()];
        for (j, c) in self.cols.iter().enumerate() {
            if c.kind == ColKind::Structural {
                map[j] = struct_index;
                struct_index += 1;
            }
        }
        for (i, &b) in self.basis.iter().enumerate() {
            if map[b] != usize::MAX {
                primal[map[b]] = self.xb[i].max(0.0);
            }
        }
        let y = self.duals(costs);
        let duals: Vec<f64> = y.iter().zip(&self.row_sign).map(|(v, s)| v * s).collect();
        let objective = self
            .cols
            .iter()
            .filter(|c| c.kind == ColKind::Structural)
            .zip(&primal)
            .map(|(c, x)| c.cost * x)
            .sum();
        LpSolution {
            status: LpStatus::Optimal,
            objective,
            primal,
            duals,
            pivots: self.total_pivots,
        }
    }

    fn duals(&self, costs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, r) in y.iter_mut().zip(row) {
                    *yk += cb * r;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, costs: &[f64], y: &[f64]) -> f64 {
        costs[j]
            - self.cols[j]
                .entries
                .iter()
                .map(|&(i, v)| y[i] * v)
                .sum::<f64>()
    }

    fn eligible(&self, j: usize, phase_one: bool) -> bool {
        self.in_basis[j].is_none() && (phase_one || self.cols[j].kind != ColKind::Artificial)
    }

    fn entering(&self, costs: &[f64], phase_one: bool, bland: bool) -> Option<usize> {
        self.entering_with_cost(costs, &self.duals(costs), phase_one, bland)
            .map(|(j, _)| j)
    }

    fn entering_with_cost(
        &self,
        costs: &[f64],
        y: &[f64],
        phase_one: bool,
        bland: bool,
    ) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols.len() {
            if !self.eligible(j, phase_one) {
                continue;
            }
            let d = self.reduced_cost(j, costs, y);
            if d < -OPT_TOL {
                if bland {
                    return Some((j, d));
                }
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        best
    }

    fn direction(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut u = vec![0.0; m];
        for &(k, v) in &self.cols[j].entries {
            for (i, ui) in u.iter_mut().enumerate() {
                *ui += self.binv[i * m + k] * v;
            }
        }
        u
    }

    fn iterate(&mut self, costs: &[f64], phase_one: bool) -> Result<IterOutcome, LpError> {
        let limit = 50 * (self.m + self.cols.len()) + 10_000;
        // a pivot is degenerate when it does not move the objective, which also
        // catches long runs of vanishingly small steps
        let degenerate_switch = self.m.max(50);
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut objective: f64 = self
            .basis
            .iter()
            .zip(&self.xb)
            .map(|(&b, &x)| costs[b] * x)
            .sum();
        let mut y = self.duals(costs);
        for _ in 0..limit {
            let Some((q, d)) = self.entering_with_cost(costs, &y, phase_one, bland) else {
                return Ok(IterOutcome::Optimal);
            };
            let u = self.direction(q);
            let leave = if bland {
                self.ratio_test_bland(&u, PIVOT_TOL)
            } else {
                self.ratio_test_dantzig(&u, PIVOT_TOL)
            }
            .or_else(|| self.ratio_test_bland(&u, PIVOT_TOL_FALLBACK));
            let Some((r, theta)) = leave else {
                return Ok(IterOutcome::Unbounded);
            };
            let gain = -d * theta;
            objective -= gain;
            if gain <= 1e-11 * (1.0 + objective.abs()) {
                degenerate_run += 1;
                if degenerate_run >= degenerate_switch {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            self.pivot(r, q, &u, theta);
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                y = self.duals(costs);
            } else {
                // the entering column's reduced cost drops to zero
                let m = self.m;
                for (yk, b) in y.iter_mut().zip(&self.binv[r * m..(r + 1) * m]) {
                    *yk += d * b;
                }
            }
        }
        Err(LpError::NumericalFailure(format!(
            "no convergence within {limit} pivots"
        )))
    }

    /// Minimum ratio over entries above `tol`, ties to the largest pivot.
    fn ratio_test_dantzig(&self, u: &[f64], tol: f64) -> Option<(usize, f64)> {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.m {
            if u[i] > tol {
                let ratio = self.xb[i].max(0.0) / u[i];
                let better = match leave {
                    None => true,
                    Some((r, best)) => {
                        ratio < best - 1e-12 || (ratio <= best + 1e-12 && u[i] > u[r])
                    }
                };
                if better {
                    leave = Some((i, leave.map_or(ratio, |(_, b)| ratio.min(b))));
                }
            }
        }
        leave
    }

    /// Minimum ratio, ties to the smallest basic column index.
    fn ratio_test_bland(&self, u: &[f64], tol: f64) -> Option<(usize, f64)> {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.m {
            if u[i] > tol {
                let ratio = self.xb[i].max(0.0) / u[i];
                let better = match leave {
                    None => true,
                    Some((r, best)) => {
                        ratio < best - 1e-12
                            || (ratio <= best + 1e-12 && self.basis[i] < self.basis[r])
                    }
                };
                if better {
                    leave = Some((i, leave.map_or(ratio, |(_, b)| ratio.min(b))));
                }
            }
        }
        leave
    }

    fn pivot(&mut self, r: usize, q: usize, u: &[f64], theta: f64) {
        let m = self.m;
        for i in 0..m {
            if i != r {
                self.xb[i] -= theta * u[i];
                if self.xb[i].abs() < 1e-13 {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[r] = theta;
        let pr = u[r];
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (row_r, after) = rest.split_at_mut(m);
        for v in row_r.iter_mut() {
            *v /= pr;
        }
        for (i, row) in before.chunks_mut(m).enumerate() {
            let f = u[i];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(row_r.iter()) {
                    *a -= f * b;
                }
            }
        }
        for (k, row) in after.chunks_mut(m).enumerate() {
            let f = u[r + 1 + k];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(row_r.iter()) {
                    *a -= f * b;
                }
            }
        }
        let old = self.basis[r];
        self.in_basis[old] = None;
        self.basis[r] = q;
        self.in_basis[q] = Some(r);
        self.pivots_since_refactor += 1;
        self.total_pivots += 1;
    }

    /// Recomputes the basis inverse by Gauss-Jordan elimination with partial pivoting.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        if m == 0 {
            return Ok(());
        }
        let mut a = vec![0.0; m * m];
        for (k, &b) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[b].entries {
                a[i * m + k] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let (p, pv) = (c..m)
                .map(|i| (i, a[i * m + c].abs()))
                .fold((c, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pv < 1e-12 {
                return Err(LpError::NumericalFailure("singular basis".into()));
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for i in 0..m {
                if i != c {
                    let f = a[i * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            a[i * m + k] -= f * a[c * m + k];
                            inv[i * m + k] -= f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
            self.xb[i] = if v.abs() < 1e-13 { 0.0 } else { v };
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }

    /// Pivots zero-valued artificials out of the basis where a non-artificial
    /// column has a nonzero entry in their row; the rest sit on redundant rows.
    fn drive_out_artificials(&mut self) {
        let m = self.m;
        for r in 0..m {
            if self.cols[self.basis[r]].kind != ColKind::Artificial {
                continue;
            }
            let row = self.binv[r * m..(r + 1) * m].to_vec();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.cols.len() {
                if self.in_basis[j].is_some() || self.cols[j].kind == ColKind::Artificial {
                    continue;
                }
                let alpha: f64 = self.cols[j].entries.iter().map(|&(i, v)| row[i] * v).sum();
                if alpha.abs() > 1e-7 && best.is_none_or(|(_, b)| alpha.abs() > b) {
                    best = Some((j, alpha.abs()));
                }
            }
            if let Some((j, _)) = best {
                let u = self.direction(j);
                let theta = self.xb[r] / u[r];
                self.pivot(r, j, &u, theta);
            }
        }
    }
}

enum IterOutcome {
    Optimal,
    Unbounded,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_lower_bound() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add(vec![1.0], Relation::Ge, 3.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equality_and_inequality() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add(vec![2.0, 0.0], Relation::Ge, 4.0);
        lp.add(vec![1.0, 1.0], Relation::Eq, 3.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!(s.primal[0] >= 2.0 - 1e-12);
        assert!((s.primal[0] + s.primal[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add(vec![1.0], Relation::Ge, 1.0);
        lp.add(vec![1.0], Relation::Le, 0.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.add(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn negative_rhs_rows() {
        // -x <= -2  <=>  x >= 2
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add(vec![-1.0], Relation::Le, -2.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!((s.duals[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.add(vec![1.0, 1.0], Relation::Eq, 2.0);
        lp.add(vec![2.0, 2.0], Relation::Eq, 4.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn no_constraints() {
        let lp = LinearProgram::new(vec![1.0, 3.0]);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.objective, 0.0);
        let lp = LinearProgram::new(vec![-1.0]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add(vec![1.0], Relation::Ge, 1.0);
        assert!(matches!(solve_lp(&lp), Err(LpError::Malformed(_))));
    }

    #[test]
    fn column_generation_half_items() {
        // one size 5/10 with demand 3, starting from the singleton column
        let mut base = LinearProgram::new(vec![1.0]);
        base.add(vec![1.0], Relation::Ge, 3.0);
        let res = solve_lp_with_columns(
            &base,
            |duals| {
                // best knapsack column: two items of size 5 fit in 10
                vec![PricedColumn {
                    cost: 1.0,
                    coeffs: vec![2.0 * duals[0].signum().max(0.0)],
                }]
            },
            default_round_limit(1),
        )
        .unwrap();
        assert!((res.solution.objective - 1.5).abs() < 1e-12);
        assert_eq!(res.rounds, 1);
        assert_eq!(res.generated.len(), 1);
        assert_eq!(res.generated[0].coeffs, vec![2.0]);
    }

    #[test]
    fn column_generation_without_columns() {
        let mut base = LinearProgram::new(vec![1.0]);
        base.add(vec![1.0], Relation::Ge, 3.0);
        let res = solve_lp_with_columns(&base, |_| Vec::new(), 10).unwrap();
        assert_eq!(res.rounds, 0);
        assert!((res.solution.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dump_lists_rows() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.add(vec![1.0, 1.0], Relation::Ge, 3.0);
        assert_eq!(lp.dump(), "vars 2\nmin 1 2\nrow 1 1 >= 3\n");
    }
}
