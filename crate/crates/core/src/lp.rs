//! Dense two-phase primal simplex for small linear programs.
//!
//! Minimizes `cᵀx` subject to `≤` and `=` rows and `x ≥ 0`. Entering columns
//! follow Dantzig's rule and switch to Bland's rule after a run of degenerate
//! pivots, which rules out cycling.

use crate::error::{Error, Result};

pub const LP_TOL: f64 = 1e-9;

/// Consecutive degenerate pivots tolerated before Bland's rule takes over.
const DEGENERATE_LIMIT: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Primal solution; meaningful only when optimal.
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    /// Index of the objective (reduced-cost) row.
    fn obj(&self) -> usize {
        self.rows
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.data[pr * w + pc];
        for c in 0..w {
            self.data[pr * w + c] /= p;
        }
        self.data[pr * w + pc] = 1.0;
        let (before, rest) = self.data.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        let update = |row: &mut [f64]| {
            let f = row[pc];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[pc] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(update);
        after.chunks_mut(w).for_each(update);
        self.basis[pr] = pc;
    }

    /// Minimizes the objective row over columns with `allowed[c]`.
    fn optimize(&mut self, allowed: &[bool], max_pivots: usize) -> Result<bool> {
        let obj = self.obj();
        let cols = self.width - 1;
        let mut degenerate = 0usize;
        for _ in 0..max_pivots {
            let bland = degenerate >= DEGENERATE_LIMIT;
            let mut enter = None;
            let mut best = -LP_TOL;
            for c in 0..cols {
                if !allowed[c] {
                    continue;
                }
                let d = self.at(obj, c);
                if d < best {
                    enter = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = enter else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > LP_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - LP_TOL
                                || (ratio <= lratio + LP_TOL && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((pr, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= LP_TOL {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
        }
        Err(Error::Lp(format!(
            "simplex did not terminate within {max_pivots} pivots"
        )))
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, kind: RowKind, rhs: f64) {
        self.rows.push(Row { coeffs, kind, rhs });
    }

    fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::Dimension {
                what: "objective",
                expected: self.num_vars,
                actual: self.objective.len(),
            });
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::Lp(format!("row {i} has non-finite right-hand side")));
            }
            for &(j, a) in &row.coeffs {
                if j >= self.num_vars || !a.is_finite() {
                    return Err(Error::Lp(format!("row {i} has invalid entry ({j}, {a})")));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Lp("non-finite objective coefficient".into()));
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpResult> {
        self.validate()?;
        let n = self.num_vars;
        let m = self.rows.len();
        let slacks = self.rows.iter().filter(|r| r.kind == RowKind::Le).count();
        // A row needs an artificial unless it is `≤` with nonnegative rhs.
        let needs_art: Vec<bool> = self
            .rows
            .iter()
            .map(|r| r.kind == RowKind::Eq || r.rhs < 0.0)
            .collect();
        let arts = needs_art.iter().filter(|&&a| a).count();
        let cols = n + slacks + arts;
        let width = cols + 1;
        let mut t = Tableau {
            rows: m,
            width,
            data: vec![0.0; (m + 1) * width],
            basis: vec![0; m],
        };
        let mut next_slack = n;
        let mut next_art = n + slacks;
        for (r, row) in self.rows.iter().enumerate() {
            let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            for &(j, a) in &row.coeffs {
                t.data[r * width + j] += sign * a;
            }
            t.data[r * width + cols] = sign * row.rhs;
            if row.kind == RowKind::Le {
                t.data[r * width + next_slack] = sign;
                if !needs_art[r] {
                    t.basis[r] = next_slack;
                }
                next_slack += 1;
            }
            if needs_art[r] {
                t.data[r * width + next_art] = 1.0;
                t.basis[r] = next_art;
                next_art += 1;
            }
        }
        let max_pivots = 50 * (m + cols) + 1000;
        let is_art = |c: usize| c >= n + slacks;

        // Phase 1: minimize the sum of artificials.
        let obj = t.obj();
        let rhs_scale: f64 = 1.0 + self.rows.iter().map(|r| r.rhs.abs()).sum::<f64>();
        if arts > 0 {
            for r in 0..m {
                if needs_art[r] {
                    for c in 0..width {
                        let v = t.data[r * width + c];
                        t.data[obj * width + c] -= v;
                    }
                }
            }
            for c in n + slacks..cols {
                t.data[obj * width + c] = 0.0;
            }
            let allowed = vec![true; cols];
            t.optimize(&allowed, max_pivots)?;
            let infeasibility = -t.at(obj, cols);
            if infeasibility > LP_TOL * rhs_scale {
                return Ok(LpResult {
                    status: LpStatus::Infeasible,
                    x: vec![0.0; n],
                    objective: f64::NAN,
                });
            }
            // Drive zero-level artificials out of the basis where possible.
            for r in 0..m {
                if is_art(t.basis[r]) {
                    if let Some(c) = (0..n + slacks).find(|&c| t.at(r, c).abs() > LP_TOL) {
                        t.pivot(r, c);
                    }
                }
            }
        }

        // Phase 2: reduced costs of the true objective.
        for c in 0..width {
            t.data[obj * width + c] = if c < n { self.objective[c] } else { 0.0 };
        }
        for r in 0..m {
            let cb = if t.basis[r] < n {
                self.objective[t.basis[r]]
            } else {
                0.0
            };
            if cb != 0.0 {
                for c in 0..width {
                    let v = t.data[r * width + c];
                    t.data[obj * width + c] -= cb * v;
                }
            }
        }
        let allowed: Vec<bool> = (0..cols).map(|c| !is_art(c)).collect();
        if !t.optimize(&allowed, max_pivots)? {
            return Ok(LpResult {
                status: LpStatus::Unbounded,
                x: vec![0.0; n],
                objective: f64::NEG_INFINITY,
            });
        }
        let mut x = vec![0.0; n];
        for r in 0..m {
            if t.basis[r] < n {
                x[t.basis[r]] = t.rhs(r).max(0.0);
            }
        }
        let objective = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        Ok(LpResult {
            status: LpStatus::Optimal,
            x,
            objective,
        })
    }
}
