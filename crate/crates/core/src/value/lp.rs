//! Dense two-phase simplex with Bland's rule, generic over the scalar.
//! Exact over rationals; sign tests use the scalar's mass slack for floats.

use crate::arith::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) enum Relation {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct Constraint<S> {
    pub coeffs: Vec<(usize, S)>,
    pub relation: Relation,
    pub rhs: S,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum LpError {
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct Solution<S> {
    pub value: S,
    pub x: Vec<S>,
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    basis: Vec<usize>,
    width: usize,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, r: usize, c: usize, objective: &mut [S]) {
        let piv = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() / piv.clone();
            }
        }
        let pivot_row = self.rows[r].clone();
        let nonzero: Vec<usize> = (0..=self.width).filter(|&j| !pivot_row[j].is_zero()).collect();
        let eliminate = |row: &mut [S]| {
            let f = row[c].clone();
            if f.is_zero() {
                return;
            }
            for &j in &nonzero {
                row[j] = row[j].clone() - f.clone() * pivot_row[j].clone();
            }
            row[c] = S::zero();
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(objective);
        self.basis[r] = c;
    }

    /// Minimizes the objective row (reduced costs, with `-value` in the
    /// last slot) over columns allowed by `allowed`.
    fn run(&mut self, objective: &mut [S], allowed: &dyn Fn(usize) -> bool) -> Result<(), LpError> {
        loop {
            let entering = (0..self.width).find(|&j| allowed(j) && objective[j].is_negative_mass());
            let Some(c) = entering else {
                return Ok(());
            };
            let mut best: Option<(S, usize, usize)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive_mass() {
                    continue;
                }
                let ratio = row[self.width].clone() / row[c].clone();
                let better = match &best {
                    None => true,
                    Some((r, _, b)) => ratio < *r || (ratio == *r && self.basis[i] < *b),
                };
                if better {
                    best = Some((ratio, i, self.basis[i]));
                }
            }
            let Some((_, r, _)) = best else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, c, objective);
        }
    }
}

/// `min Σ cost_j x_j` subject to the constraints and `x ≥ 0`.
pub(crate) fn minimize<S: Scalar>(
    cost: &[S],
    constraints: &[Constraint<S>],
) -> Result<Solution<S>, LpError> {
    let n = cost.len();
    let m = constraints.len();
    let n_slack = constraints
        .iter()
        .filter(|c| c.relation != Relation::Eq)
        .count();
    let width = n + n_slack + m;
    let mut rows = Vec::with_capacity(m);
    let mut slack = n;
    for (i, con) in constraints.iter().enumerate() {
        let mut row = vec![S::zero(); width + 1];
        for (j, a) in &con.coeffs {
            row[*j] = row[*j].clone() + a.clone();
        }
        match con.relation {
            Relation::Ge => {
                row[slack] = -S::one();
                slack += 1;
            }
            Relation::Le => {
                row[slack] = S::one();
                slack += 1;
            }
            Relation::Eq => {}
        }
        row[width] = con.rhs.clone();
        if con.rhs.is_negative_mass() {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
        row[n + n_slack + i] = S::one();
        rows.push(row);
    }
    let artificial_start = n + n_slack;
    let mut tab = Tableau {
        rows,
        basis: (artificial_start..width).collect(),
        width,
    };

    // Phase 1: minimize the sum of artificials.
    let mut phase1 = vec![S::zero(); width + 1];
    for row in &tab.rows {
        for j in 0..artificial_start {
            phase1[j] = phase1[j].clone() - row[j].clone();
        }
        phase1[width] = phase1[width].clone() - row[width].clone();
    }
    tab.run(&mut phase1, &|_| true)?;
    if (-phase1[width].clone()).is_positive_mass() {
        return Err(LpError::Infeasible);
    }
    // Drive zero-level artificials out of the basis where possible.
    for r in 0..m {
        if tab.basis[r] < artificial_start {
            continue;
        }
        if let Some(c) = (0..artificial_start).find(|&j| !tab.rows[r][j].is_negligible()) {
            tab.pivot(r, c, &mut phase1);
        }
    }

    // Phase 2 on the original cost, artificials barred.
    let mut objective = vec![S::zero(); width + 1];
    objective[..n].clone_from_slice(cost);
    for (r, &b) in tab.basis.iter().enumerate() {
        let cb = objective[b].clone();
        if cb.is_zero() {
            continue;
        }
        for (o, a) in objective.iter_mut().zip(&tab.rows[r]) {
            *o = o.clone() - cb.clone() * a.clone();
        }
    }
    tab.run(&mut objective, &|j| j < artificial_start)?;

    let mut x = vec![S::zero(); n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rows[r][width].clone();
        }
    }
    Ok(Solution {
        value: -objective[width].clone(),
        x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{q, qi, Q};

    fn con(coeffs: &[(usize, i64)], relation: Relation, rhs: Q) -> Constraint<Q> {
        Constraint {
            coeffs: coeffs.iter().map(|&(j, a)| (j, qi(a))).collect(),
            relation,
            rhs,
        }
    }

    #[test]
    fn small_program() {
        // min x + 2y s.t. x + y ≥ 3, x ≤ 2, y ≥ 0 → x = 2, y = 1, value 4.
        let sol = minimize(
            &[qi(1), qi(2)],
            &[
                con(&[(0, 1), (1, 1)], Relation::Ge, qi(3)),
                con(&[(0, 1)], Relation::Le, qi(2)),
            ],
        )
        .unwrap();
        assert_eq!(sol.value, qi(4));
        assert_eq!(sol.x, vec![qi(2), qi(1)]);
    }

    #[test]
    fn equality_and_degenerate_rows() {
        // min -x - y s.t. x + y = 1/2, 2x + 2y = 1 (redundant), x ≤ 1/3.
        let sol = minimize(
            &[qi(-1), qi(-1)],
            &[
                con(&[(0, 1), (1, 1)], Relation::Eq, q(1, 2)),
                con(&[(0, 2), (1, 2)], Relation::Eq, qi(1)),
                con(&[(0, 1)], Relation::Le, q(1, 3)),
            ],
        )
        .unwrap();
        assert_eq!(sol.value, q(-1, 2));
        assert_eq!(&sol.x[0] + &sol.x[1], q(1, 2));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let inf = minimize(
            &[qi(1)],
            &[
                con(&[(0, 1)], Relation::Ge, qi(2)),
                con(&[(0, 1)], Relation::Le, qi(1)),
            ],
        );
        assert_eq!(inf.unwrap_err(), LpError::Infeasible);
        let unb = minimize(&[qi(-1)], &[con(&[(0, 1)], Relation::Ge, qi(0))]);
        assert_eq!(unb.unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn float_agrees_with_exact() {
        let c = [qi(3), qi(1), qi(2)];
        let cons = [
            con(&[(0, 1), (1, 1), (2, 1)], Relation::Eq, qi(1)),
            con(&[(0, 1), (2, 1)], Relation::Ge, q(2, 3)),
            con(&[(0, 1)], Relation::Ge, q(1, 5)),
        ];
        let exact = minimize(&c, &cons).unwrap();
        let fc: Vec<f64> = c.iter().map(f64::from_q).collect();
        let fcons: Vec<Constraint<f64>> = cons
            .iter()
            .map(|k| Constraint {
                coeffs: k.coeffs.iter().map(|(j, a)| (*j, f64::from_q(a))).collect(),
                relation: k.relation,
                rhs: f64::from_q(&k.rhs),
            })
            .collect();
        let float = minimize(&fc, &fcons).unwrap();
        assert!(float.value.agrees_with(&exact.value.to_f64()));
        assert_eq!(exact.value, q(28, 15));
    }
}
