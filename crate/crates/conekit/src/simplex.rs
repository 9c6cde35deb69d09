//! Exact rational LP via two-phase primal simplex with Bland's rule.
//!
//! Everything in the verdict layer that needs a feasibility or optimality
//! certificate (cone membership by generators, redundancy elimination,
//! qualification-condition witnesses, certificate synthesis) funnels through
//! this solver, so it works in exact arithmetic with guaranteed termination.

use crate::linalg::{QVec, Vector};
use crate::scalar::Rat;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: QVec, objective: Rat },
    Infeasible,
    Unbounded,
}

/// Minimizes `c.x` subject to `A x = b`, `x >= 0` (standard form).
///
/// Rows of `a` must have length `c.dim()`; `b` entries may be any sign.
pub fn solve_standard(a: &[QVec], b: &[Rat], c: &QVec) -> LpOutcome {
    let m = a.len();
    let n = c.dim();
    debug_assert!(a.iter().all(|r| r.dim() == n));
    debug_assert_eq!(b.len(), m);

    // No constraints: x = 0 is optimal unless some cost coefficient rewards
    // growing a (nonnegative) variable without bound.
    if m == 0 {
        return if c.iter().any(|v| v.is_negative()) {
            LpOutcome::Unbounded
        } else {
            LpOutcome::Optimal { x: Vector::zeros(n), objective: Rat::zero() }
        };
    }

    // Normalize to b >= 0.
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut rhs: Vec<Rat> = Vec::with_capacity(m);
    for (r, bi) in a.iter().zip(b) {
        if bi.is_negative() {
            rows.push(r.iter().map(|v| -v.clone()).collect());
            rhs.push(-bi.clone());
        } else {
            rows.push(r.iter().cloned().collect());
            rhs.push(bi.clone());
        }
    }

    // Phase 1: artificial variables n..n+m.
    let total = n + m;
    let mut tableau: Vec<Vec<Rat>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..m).map(|j| if j == i { Rat::one() } else { Rat::zero() }));
            row.push(rhs[i].clone());
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..total).collect();

    let phase1_cost: Vec<Rat> = (0..total)
        .map(|j| if j >= n { Rat::one() } else { Rat::zero() })
        .collect();
    let p1 = run_simplex(&mut tableau, &mut basis, &phase1_cost, total);
    debug_assert!(p1.is_some(), "phase 1 is always bounded");
    let p1_obj = current_objective(&tableau, &basis, &phase1_cost);
    if !p1_obj.is_zero() {
        return LpOutcome::Infeasible;
    }

    // Drive artificials out of the basis where possible.
    for i in 0..basis.len() {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !tableau[i][j].is_zero()) {
                pivot(&mut tableau, &mut basis, i, j);
            }
            // A row whose coefficients over the originals are all zero is a
            // redundant constraint; leaving the zero-valued artificial basic
            // is harmless because its column is ignored below.
        }
    }

    // Phase 2 over original columns only.
    let mut phase2_cost: Vec<Rat> = c.iter().cloned().collect();
    phase2_cost.extend(std::iter::repeat(Rat::zero()).take(m));
    match run_simplex(&mut tableau, &mut basis, &phase2_cost, n) {
        None => LpOutcome::Unbounded,
        Some(()) => {
            let mut x = Vector::zeros(n);
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = tableau[i][total].clone();
                }
            }
            let objective = c.dot(&x);
            LpOutcome::Optimal { x, objective }
        }
    }
}

fn current_objective(tableau: &[Vec<Rat>], basis: &[usize], cost: &[Rat]) -> Rat {
    let rhs_col = tableau[0].len() - 1;
    basis
        .iter()
        .enumerate()
        .fold(Rat::zero(), |acc, (i, &bv)| acc + cost[bv].clone() * tableau[i][rhs_col].clone())
}

/// Bland's-rule simplex over columns `0..active_cols`. Returns `None` on
/// unboundedness.
fn run_simplex(
    tableau: &mut Vec<Vec<Rat>>,
    basis: &mut Vec<usize>,
    cost: &[Rat],
    active_cols: usize,
) -> Option<()> {
    let m = tableau.len();
    let rhs_col = tableau[0].len() - 1;
    loop {
        // Reduced costs: c_j - c_B B^-1 A_j (tableau already holds B^-1 A).
        let mut entering = None;
        for j in 0..active_cols {
            if basis.contains(&j) {
                continue;
            }
            let mut red = cost[j].clone();
            for i in 0..m {
                red = red - cost[basis[i]].clone() * tableau[i][j].clone();
            }
            if red.is_negative() {
                entering = Some(j);
                break; // Bland: smallest index
            }
        }
        let Some(j) = entering else { return Some(()) };

        // Ratio test, ties broken by smallest basis index (Bland).
        let mut leave: Option<(usize, Rat)> = None;
        for i in 0..m {
            if tableau[i][j].is_positive() {
                let ratio = tableau[i][rhs_col].clone() / tableau[i][j].clone();
                match &leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < *lr || (ratio == *lr && basis[i] < basis[*li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((i, _)) = leave else { return None };
        pivot(tableau, basis, i, j);
    }
}

fn pivot(tableau: &mut Vec<Vec<Rat>>, basis: &mut Vec<usize>, row: usize, col: usize) {
    let m = tableau.len();
    let w = tableau[0].len();
    let piv = tableau[row][col].clone();
    for v in tableau[row].iter_mut() {
        *v = v.clone() / piv.clone();
    }
    for i in 0..m {
        if i != row && !tableau[i][col].is_zero() {
            let f = tableau[i][col].clone();
            for j in 0..w {
                let delta = f.clone() * tableau[row][j].clone();
                tableau[i][j] = tableau[i][j].clone() - delta;
            }
        }
    }
    basis[row] = col;
}

/// Is there `lambda >= 0` with `sum lambda_j g_j = target`?
pub fn conic_combination(generators: &[QVec], target: &QVec) -> Option<Vec<Rat>> {
    if target.is_zero() {
        return Some(vec![Rat::zero(); generators.len()]);
    }
    if generators.is_empty() {
        return None;
    }
    let n = target.dim();
    let k = generators.len();
    let a: Vec<QVec> = (0..n)
        .map(|coord| Vector::new(generators.iter().map(|g| g[coord].clone()).collect()))
        .collect();
    let b: Vec<Rat> = target.iter().cloned().collect();
    let c = Vector::zeros(k);
    match solve_standard(&a, &b, &c) {
        LpOutcome::Optimal { x, .. } => Some(x.iter().cloned().collect()),
        _ => None,
    }
}

/// A general small-LP builder: free variables, `<=` and `==` constraints.
///
/// Internally converts to standard form (free var = x+ - x-, slack per
/// inequality).
#[derive(Clone, Debug, Default)]
pub struct LpBuilder {
    n_free: usize,
    ineq: Vec<(QVec, Rat)>, // a.x <= b
    eq: Vec<(QVec, Rat)>,   // a.x == b
    objective: Option<QVec>,
}

impl LpBuilder {
    pub fn new(n_free: usize) -> Self {
        LpBuilder { n_free, ..Default::default() }
    }

    pub fn leq(&mut self, a: QVec, b: Rat) -> &mut Self {
        debug_assert_eq!(a.dim(), self.n_free);
        self.ineq.push((a, b));
        self
    }

    pub fn eq(&mut self, a: QVec, b: Rat) -> &mut Self {
        debug_assert_eq!(a.dim(), self.n_free);
        self.eq.push((a, b));
        self
    }

    /// Minimizes `c.x`; default objective is 0 (pure feasibility).
    pub fn minimize(&mut self, c: QVec) -> &mut Self {
        self.objective = Some(c);
        self
    }

    pub fn solve(&self) -> LpOutcome {
        let n = self.n_free;
        let cols = 2 * n + self.ineq.len();
        let expand = |a: &QVec, slack: Option<usize>| -> QVec {
            let mut row = Vector::zeros(cols);
            for i in 0..n {
                row[i] = a[i].clone();
                row[n + i] = -a[i].clone();
            }
            if let Some(s) = slack {
                row[2 * n + s] = Rat::one();
            }
            row
        };
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (i, (a, b)) in self.ineq.iter().enumerate() {
            rows.push(expand(a, Some(i)));
            rhs.push(b.clone());
        }
        for (a, b) in &self.eq {
            rows.push(expand(a, None));
            rhs.push(b.clone());
        }
        let c_full = match &self.objective {
            Some(c) => expand(c, None),
            None => Vector::zeros(cols),
        };
        match solve_standard(&rows, &rhs, &c_full) {
            LpOutcome::Optimal { x, objective } => {
                let free = Vector::new(
                    (0..n).map(|i| x[i].clone() - x[n + i].clone()).collect(),
                );
                LpOutcome::Optimal { x: free, objective }
            }
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::QVec;
    use crate::scalar::{int, rat};

    #[test]
    fn standard_form_optimum() {
        // min -x1 - x2 s.t. x1 + x2 + s = 1  => obj -1
        let a = vec![QVec::from_ints(&[1, 1, 1])];
        let b = vec![int(1)];
        let c = QVec::from_ints(&[-1, -1, 0]);
        match solve_standard(&a, &b, &c) {
            LpOutcome::Optimal { objective, .. } => assert_eq!(objective, int(-1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn infeasible_detected() {
        // x1 = -1, x1 >= 0
        let a = vec![QVec::from_ints(&[1])];
        let b = vec![int(-1)];
        let c = QVec::from_ints(&[0]);
        assert_eq!(solve_standard(&a, &b, &c), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        // min -x1 s.t. x1 - x2 = 0
        let a = vec![QVec::from_ints(&[1, -1])];
        let b = vec![int(0)];
        let c = QVec::from_ints(&[-1, 0]);
        assert_eq!(solve_standard(&a, &b, &c), LpOutcome::Unbounded);
    }

    #[test]
    fn conic_membership() {
        let gens = vec![QVec::from_ints(&[1, 0]), QVec::from_ints(&[1, 1])];
        assert!(conic_combination(&gens, &QVec::from_ints(&[3, 2])).is_some());
        assert!(conic_combination(&gens, &QVec::from_ints(&[-1, 0])).is_none());
        assert!(conic_combination(&gens, &QVec::from_ints(&[1, 2])).is_none());
    }

    #[test]
    fn builder_slack_maximization() {
        // max t s.t. x + t <= 0, -x + t <= 2  => t = 1 at x = -1
        let mut lp = LpBuilder::new(2);
        lp.leq(QVec::from_ints(&[1, 1]), int(0))
            .leq(QVec::from_ints(&[-1, 1]), int(2))
            .minimize(QVec::from_ints(&[0, -1]));
        match lp.solve() {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(objective, int(-1));
                assert_eq!(x[1], int(1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degenerate_cycling_guard() {
        // Klee-Minty-ish tiny instance; Bland must terminate.
        let a = vec![
            QVec::from_ints(&[1, 0, 1, 0]),
            QVec::from_ints(&[4, 1, 0, 1]),
        ];
        let b = vec![int(1), int(4)];
        let c = Vector::new(vec![rat(-2, 1), int(-1), int(0), int(0)]);
        match solve_standard(&a, &b, &c) {
            LpOutcome::Optimal { .. } => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
