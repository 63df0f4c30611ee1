//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Solves `min c.x` over `<=`, `>=` and `=` rows with free or non-negative
//! variables, and returns the dual vector together with an independently
//! recomputed duality gap.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-11;
const PHASE1_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    cost: Vec<f64>,
    free: Vec<bool>,
    rows: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per constraint, in the sign convention of `max b.y`
    /// (`<=` rows non-positive, `>=` rows non-negative).
    pub duals: Vec<f64>,
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, cost: f64, free: bool) -> usize {
        self.cost.push(cost);
        self.free.push(free);
        self.cost.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Result<()> {
        if let Some(&(j, _)) = coeffs.iter().find(|(j, _)| *j >= self.cost.len()) {
            return Err(Error::IndexOutOfRange(format!("variable {j} of {}", self.cost.len())));
        }
        if let Some(v) = coeffs.iter().map(|c| c.1).chain([rhs]).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(v));
        }
        self.rows.push(Constraint { coeffs, relation, rhs });
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let mut t = Tableau::build(self);
        let pivots = t.run()?;
        Ok(self.certify(t.primal(self), t.duals(), pivots))
    }

    /// Objective, residuals and duality gap recomputed from the original data.
    fn certify(&self, x: Vec<f64>, duals: Vec<f64>, pivots: usize) -> LpSolution {
        let objective: f64 = self.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        let dual_objective: f64 = self.rows.iter().zip(&duals).map(|(r, y)| r.rhs * y).sum();
        let mut primal_inf = x.iter().zip(&self.free).filter(|(_, f)| !**f).map(|(v, _)| (-v).max(0.0)).fold(0.0, f64::max);
        let mut aty = vec![0.0; self.cost.len()];
        for (row, &y) in self.rows.iter().zip(&duals) {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let viol = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            primal_inf = primal_inf.max(viol);
            for &(j, a) in &row.coeffs {
                aty[j] += a * y;
            }
        }
        let mut dual_inf: f64 = 0.0;
        for (row, &y) in self.rows.iter().zip(&duals) {
            dual_inf = dual_inf.max(match row.relation {
                Relation::Le => y.max(0.0),
                Relation::Ge => (-y).max(0.0),
                Relation::Eq => 0.0,
            });
        }
        for ((&c, &a), &free) in self.cost.iter().zip(&aty).zip(&self.free) {
            let reduced = c - a;
            dual_inf = dual_inf.max(if free { reduced.abs() } else { (-reduced).max(0.0) });
        }
        LpSolution {
            x,
            objective,
            duals,
            dual_objective,
            duality_gap: (objective - dual_objective).abs(),
            primal_infeasibility: primal_inf,
            dual_infeasibility: dual_inf,
            pivots,
        }
    }
}

struct Tableau {
    m: usize,
    width: usize,
    /// Row-major `m x width`; the last column is the right-hand side.
    a: Vec<f64>,
    /// Reduced costs, with the negated objective value in the last slot.
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// `(positive column, negative column)` per original variable.
    var_cols: Vec<(usize, Option<usize>)>,
    phase2_cost: Vec<f64>,
    artificial_start: usize,
    /// Column holding `+e_i` initially for each row, and whether the row was negated.
    identity: Vec<usize>,
    flipped: Vec<bool>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let mut var_cols = Vec::with_capacity(lp.cost.len());
        let mut phase2_cost = Vec::new();
        for (&c, &free) in lp.cost.iter().zip(&lp.free) {
            let pos = phase2_cost.len();
            phase2_cost.push(c);
            let neg = free.then(|| {
                phase2_cost.push(-c);
                pos + 1
            });
            var_cols.push((pos, neg));
        }
        let m = lp.rows.len();
        let mut flipped = vec![false; m];
        let mut relations = Vec::with_capacity(m);
        for (i, r) in lp.rows.iter().enumerate() {
            flipped[i] = r.rhs < 0.0;
            relations.push(match (r.relation, flipped[i]) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (rel, _) => rel,
            });
        }
        let structural = phase2_cost.len();
        let slacks = relations.iter().filter(|r| **r != Relation::Eq).count();
        let artificial_start = structural + slacks;
        let artificials = relations.iter().filter(|r| **r != Relation::Le).count();
        let ncols = artificial_start + artificials;
        let width = ncols + 1;
        phase2_cost.resize(ncols, 0.0);

        let mut a = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut identity = vec![0; m];
        let (mut next_slack, mut next_art) = (structural, artificial_start);
        for (i, r) in lp.rows.iter().enumerate() {
            let s = if flipped[i] { -1.0 } else { 1.0 };
            let row = &mut a[i * width..(i + 1) * width];
            for &(j, v) in &r.coeffs {
                let (pos, neg) = var_cols[j];
                row[pos] += s * v;
                if let Some(neg) = neg {
                    row[neg] -= s * v;
                }
            }
            row[ncols] = s * r.rhs;
            match relations[i] {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis[i] = next_slack;
                    identity[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    identity[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    identity[i] = next_art;
                    next_art += 1;
                }
            }
        }
        Self {
            m,
            width,
            a,
            obj: vec![0.0; width],
            basis,
            var_cols,
            phase2_cost,
            artificial_start,
            identity,
            flipped,
        }
    }

    fn ncols(&self) -> usize {
        self.width - 1
    }

    fn set_objective(&mut self, cost: &[f64]) {
        self.obj.fill(0.0);
        self.obj[..cost.len()].copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.width..(i + 1) * self.width];
                for (o, v) in self.obj.iter_mut().zip(row) {
                    *o -= cb * v;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.a[r * w + c];
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v /= p;
        }
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Bland's rule iterations over columns `< limit`.
    fn iterate(&mut self, limit: usize, pivots: &mut usize) -> Result<()> {
        let w = self.width;
        loop {
            let Some(c) = (0..limit).find(|&j| self.obj[j] < -COST_EPS) else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let aic = self.a[i * w + c];
                if aic > PIVOT_EPS {
                    let ratio = self.a[i * w + w - 1] / aic;
                    best = match best {
                        Some((bi, br)) if ratio > br || (ratio == br && self.basis[i] > self.basis[bi]) => Some((bi, br)),
                        _ => Some((i, ratio)),
                    };
                }
            }
            let (r, _) = best.ok_or_else(|| Error::Solver("objective is unbounded below".into()))?;
            self.pivot(r, c);
            *pivots += 1;
        }
    }

    fn run(&mut self) -> Result<usize> {
        let mut pivots = 0;
        let n = self.ncols();
        if self.artificial_start < n {
            let mut c1 = vec![0.0; n];
            c1[self.artificial_start..].fill(1.0);
            self.set_objective(&c1);
            self.iterate(n, &mut pivots)?;
            let infeas = -self.obj[n];
            if infeas > PHASE1_EPS {
                return Err(Error::Solver(format!("infeasible (phase one residual {infeas:e})")));
            }
            // Drive zero-level artificials out of the basis where possible.
            for i in 0..self.m {
                if self.basis[i] >= self.artificial_start {
                    let row = &self.a[i * self.width..i * self.width + self.artificial_start];
                    if let Some(c) = row.iter().position(|v| v.abs() > 1e-9) {
                        self.pivot(i, c);
                        pivots += 1;
                    }
                }
            }
        }
        let cost = self.phase2_cost.clone();
        self.set_objective(&cost);
        self.iterate(self.artificial_start, &mut pivots)?;
        Ok(pivots)
    }

    fn primal(&self, lp: &LinearProgram) -> Vec<f64> {
        let mut col = vec![0.0; self.ncols()];
        for (i, &b) in self.basis.iter().enumerate() {
            col[b] = self.a[i * self.width + self.width - 1];
        }
        let mut x: Vec<f64> = self.var_cols.iter().map(|&(p, n)| col[p] - n.map_or(0.0, |n| col[n])).collect();
        for (v, f) in x.iter_mut().zip(&lp.free) {
            if !f {
                *v = v.max(0.0);
            }
        }
        x
    }

    /// `y_i = c_e - r_e = -r_e` for the column that started as `e_i`.
    fn duals(&self) -> Vec<f64> {
        self.identity
            .iter()
            .zip(&self.flipped)
            .map(|(&c, &f)| {
                let y = -self.obj[c];
                if f {
                    -y
                } else {
                    y
                }
            })
            .collect()
    }
}
