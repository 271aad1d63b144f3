//! Small dense LP front end over `microlp`, used by the definition checkers.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) enum Cmp {
    Le,
    Ge,
    Eq,
}

type Row = (Vec<(usize, f64)>, Cmp, f64);

#[derive(Debug)]
pub(crate) struct LinearProgram {
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<Row>,
}

#[derive(Debug)]
pub(crate) struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

impl LinearProgram {
    /// Minimization over variables with the given objective coefficients,
    /// all bounded to `[0, ∞)` unless changed.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let bounds = vec![(0.0, f64::INFINITY); objective.len()];
        Self {
            objective,
            bounds,
            rows: Vec::new(),
        }
    }

    pub fn constrain(&mut self, row: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.rows.push((row, cmp, rhs));
    }

    /// `Ok(None)` when infeasible.
    pub fn solve(&self) -> Result<Option<LpSolution>> {
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = self
            .objective
            .iter()
            .zip(&self.bounds)
            .map(|(&c, &b)| p.add_var(c, b))
            .collect();
        for (row, cmp, rhs) in &self.rows {
            let expr: Vec<_> = row.iter().map(|&(j, a)| (vars[j], a)).collect();
            let op = match cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            p.add_constraint(expr, op, *rhs);
        }
        match p.solve() {
            Ok(outcome) => {
                let sol = outcome
                    .into_solution()
                    .map_err(|_| Error::Lp("solve interrupted".into()))?;
                Ok(Some(LpSolution {
                    objective: sol.objective(),
                    x: vars.iter().map(|&v| sol.var_value(v)).collect(),
                }))
            }
            Err(microlp::Error::Infeasible) => Ok(None),
            Err(e) => Err(Error::Lp(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_lp() {
        // min x + y  s.t. x + 2y >= 4, x <= 1
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.constrain(vec![(0, 1.0), (1, 2.0)], Cmp::Ge, 4.0);
        lp.constrain(vec![(0, 1.0)], Cmp::Le, 1.0);
        let sol = lp.solve().unwrap().unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-9);

        lp.constrain(vec![(1, 1.0)], Cmp::Le, 1.0);
        assert!(lp.solve().unwrap().is_none());
    }
}
