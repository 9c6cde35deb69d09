//! Function atoms: piecewise degree-2 polynomials on polyhedral regions,
//! with coefficients that may depend on a family index `i`.
//!
//! Each atom carries its own closed-form oracles — value, the four
//! subdifferential flavors, and exact conjugate values (concave-quadratic
//! maximization over the pieces) — rather than symbolic differentiation.

use crate::error::{ConeError, Result};
use crate::indexpoly::{IndexPoly, IndexVec};
use crate::linalg::{QMat, QVec, Vector};
use crate::polyhedron::Polyhedron;
use crate::scalar::Rat;
use crate::simplex::{LpBuilder, LpOutcome};
use num_traits::{Signed, Zero};

/// One polynomial piece `x^T Q x + <l,x> + c` on `{x : <a_j,x> <= b_j}`,
/// all coefficients Laurent polynomials in the family index.
#[derive(Clone, Debug)]
pub struct PieceTemplate {
    pub region: Vec<(IndexVec, IndexPoly)>,
    pub quad: Vec<IndexVec>,
    pub lin: IndexVec,
    pub cst: IndexPoly,
}

/// A function atom; `convex`/`concave` are declared flags spot-checked by
/// [`ConcreteAtom::check_midpoint_convexity`].
#[derive(Clone, Debug)]
pub struct AtomFn {
    pub n: usize,
    pub pieces: Vec<PieceTemplate>,
    pub convex: bool,
    pub concave: bool,
}

impl AtomFn {
    /// `<a,x> + c` on the whole space.
    pub fn affine(a: QVec, c: Rat) -> Self {
        let n = a.dim();
        AtomFn {
            n,
            pieces: vec![PieceTemplate {
                region: Vec::new(),
                quad: vec![
                    IndexVec::new(vec![IndexPoly::zero(); n]);
                    n
                ],
                lin: IndexVec::new(
                    a.iter().map(|v| IndexPoly::constant(v.clone())).collect(),
                ),
                cst: IndexPoly::constant(c),
            }],
            convex: true,
            concave: true,
        }
    }

    pub fn is_constant_in_index(&self) -> bool {
        self.pieces.iter().all(|p| {
            p.region.iter().all(|(a, b)| a.is_constant() && b.is_constant())
                && p.quad.iter().all(|r| r.is_constant())
                && p.lin.is_constant()
                && p.cst.is_constant()
        })
    }

    pub fn instantiate(&self, i: i64) -> Result<ConcreteAtom> {
        let mut pieces = Vec::new();
        for p in &self.pieces {
            let mut rows = Vec::new();
            let mut rhs = Vec::new();
            for (a, b) in &p.region {
                rows.push(a.eval(i)?);
                rhs.push(b.eval(i)?);
            }
            let region = Polyhedron::new(rows, rhs, self.n)?;
            let quad_rows: Vec<QVec> =
                p.quad.iter().map(|r| r.eval(i)).collect::<Result<_>>()?;
            pieces.push(ConcretePiece {
                region,
                quad: QMat::from_rows(quad_rows, self.n),
                lin: p.lin.eval(i)?,
                cst: p.cst.eval(i)?,
            });
        }
        Ok(ConcreteAtom {
            n: self.n,
            pieces,
            convex: self.convex,
            concave: self.concave,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ConcretePiece {
    pub region: Polyhedron,
    pub quad: QMat,
    pub lin: QVec,
    pub cst: Rat,
}

impl ConcretePiece {
    pub fn value(&self, x: &QVec) -> Rat {
        x.dot(&self.quad.mul_vec(x)) + self.lin.dot(x) + self.cst.clone()
    }

    pub fn gradient(&self, x: &QVec) -> QVec {
        // grad (x^T Q x) = (Q + Q^T) x
        let qx = self.quad.mul_vec(x);
        let qtx = self.quad.transpose().mul_vec(x);
        &(&qx + &qtx) + &self.lin
    }

    pub fn is_quadratic(&self) -> bool {
        self.quad.rows().iter().any(|r| !r.is_zero())
    }
}

#[derive(Clone, Debug)]
pub struct ConcreteAtom {
    pub n: usize,
    pub pieces: Vec<ConcretePiece>,
    pub convex: bool,
    pub concave: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// Basic (limiting) subdifferential.
    Basic,
    /// Fréchet (regular) subdifferential.
    Frechet,
    /// Fréchet upper subdifferential.
    FrechetUpper,
    /// Singular subdifferential.
    Singular,
}

impl Flavor {
    pub fn label(&self) -> &'static str {
        match self {
            Flavor::Basic => "basic",
            Flavor::Frechet => "frechet",
            Flavor::FrechetUpper => "frechet-upper",
            Flavor::Singular => "singular",
        }
    }
}

/// A subdifferential value: a finite point set, convex-hulled or not.
/// `points` empty means the subdifferential is empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubdiffResult {
    pub flavor: Flavor,
    pub points: Vec<QVec>,
    /// True when the set is the convex hull of `points`, false when it is
    /// exactly the finite point list.
    pub hull: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConjVal {
    Finite(Rat),
    PlusInfinity,
}

impl ConcreteAtom {
    pub fn active_pieces(&self, x: &QVec) -> Result<Vec<&ConcretePiece>> {
        let active: Vec<&ConcretePiece> = self
            .pieces
            .iter()
            .filter(|p| p.region.member(x).unwrap_or(false))
            .collect();
        if active.is_empty() {
            return Err(ConeError::Malformed(
                "atom pieces do not cover the evaluation point".into(),
            ));
        }
        Ok(active)
    }

    pub fn value(&self, x: &QVec) -> Result<Rat> {
        let active = self.active_pieces(x)?;
        let v = active[0].value(x);
        for p in &active[1..] {
            if p.value(x) != v {
                return Err(ConeError::Malformed(
                    "atom pieces disagree on a shared boundary point".into(),
                ));
            }
        }
        Ok(v)
    }

    /// Gradient when all active pieces agree (Fréchet differentiability for
    /// continuous piecewise polynomials).
    pub fn gradient(&self, x: &QVec) -> Result<Option<QVec>> {
        let grads = self.active_gradients(x)?;
        Ok(if grads.len() == 1 { Some(grads[0].clone()) } else { None })
    }

    fn active_gradients(&self, x: &QVec) -> Result<Vec<QVec>> {
        let mut grads: Vec<QVec> = Vec::new();
        for p in self.active_pieces(x)? {
            let g = p.gradient(x);
            if !grads.contains(&g) {
                grads.push(g);
            }
        }
        grads.sort();
        Ok(grads)
    }

    /// Piecewise polynomials with finitely many pieces covering the space
    /// are locally Lipschitz everywhere.
    pub fn lipschitz_near(&self, _x: &QVec) -> bool {
        true
    }

    pub fn subdifferential(&self, x: &QVec, flavor: Flavor) -> Result<SubdiffResult> {
        let grads = self.active_gradients(x)?;
        let single = grads.len() == 1;
        let out = |points: Vec<QVec>, hull: bool| SubdiffResult { flavor, points, hull };
        match flavor {
            Flavor::Singular => Ok(out(vec![Vector::zeros(self.n)], false)),
            Flavor::Basic => {
                if single {
                    Ok(out(grads, false))
                } else if self.convex {
                    Ok(out(grads, true))
                } else if self.concave {
                    // limiting gradients only; the hull is the Clarke set
                    Ok(out(grads, false))
                } else {
                    Err(ConeError::UnsupportedFlavor { flavor: flavor.label().into() })
                }
            }
            Flavor::Frechet => {
                if single {
                    Ok(out(grads, false))
                } else if self.convex {
                    Ok(out(grads, true))
                } else if self.concave {
                    Ok(out(Vec::new(), true)) // empty at a concave kink
                } else {
                    Err(ConeError::UnsupportedFlavor { flavor: flavor.label().into() })
                }
            }
            Flavor::FrechetUpper => {
                if single {
                    Ok(out(grads, false))
                } else if self.concave {
                    Ok(out(grads, true))
                } else if self.convex {
                    Ok(out(Vec::new(), true)) // empty at a convex kink
                } else {
                    Err(ConeError::UnsupportedFlavor { flavor: flavor.label().into() })
                }
            }
        }
    }

    /// Exact conjugate value `phi*(lambda) = sup_x <lambda,x> - phi(x)`.
    ///
    /// Per piece this maximizes the concave quadratic `<lambda,x> - p(x)`
    /// over the region: pure-linear pieces go through the LP, quadratic
    /// pieces require `Q` positive semidefinite (checked via the recession
    /// test) and enumerate faces with a stationarity LP.
    pub fn conjugate_value(&self, lambda: &QVec) -> Result<ConjVal> {
        let mut best: Option<Rat> = None;
        for p in &self.pieces {
            match self.piece_sup(p, lambda)? {
                None => {} // empty region
                Some(ConjVal::PlusInfinity) => return Ok(ConjVal::PlusInfinity),
                Some(ConjVal::Finite(v)) => match &best {
                    Some(b) if *b >= v => {}
                    _ => best = Some(v),
                },
            }
        }
        best.map(ConjVal::Finite)
            .ok_or_else(|| ConeError::Malformed("atom with no nonempty piece".into()))
    }

    fn piece_sup(&self, p: &ConcretePiece, lambda: &QVec) -> Result<Option<ConjVal>> {
        let n = self.n;
        let obj_lin = lambda - &p.lin; // maximize <obj_lin, x> - x^T Q x - cst
        if p.region.is_empty() {
            return Ok(None);
        }
        if !p.is_quadratic() {
            let mut lp = LpBuilder::new(n);
            for (a, b) in p.region.rows().iter().zip(p.region.rhs()) {
                lp.leq(a.clone(), b.clone());
            }
            lp.minimize(-&obj_lin);
            return Ok(Some(match lp.solve() {
                LpOutcome::Unbounded => ConjVal::PlusInfinity,
                LpOutcome::Optimal { objective, .. } => {
                    ConjVal::Finite(-objective - p.cst.clone())
                }
                LpOutcome::Infeasible => return Ok(None),
            }));
        }

        // Unboundedness over recession directions d: with Q PSD, d^T Q d = 0
        // forces Qd = 0, and the sup is infinite when <obj_lin, d> > 0.
        let rec = crate::cone::ConvexPolyCone::from_ineqs(
            n,
            p.region.rows().to_vec(),
        )?;
        let sym = symmetrize(&p.quad);
        for d in rec.generators()? {
            let qd = d.dot(&sym.mul_vec(&d));
            if qd.is_negative() {
                return Err(ConeError::Unsupported(
                    "conjugate of a piece with indefinite quadratic part".into(),
                ));
            }
            if qd.is_zero() {
                if !sym.mul_vec(&d).is_zero() {
                    return Err(ConeError::Unsupported(
                        "quadratic part not positive semidefinite on the region".into(),
                    ));
                }
                if obj_lin.dot(&d).is_positive() {
                    return Ok(Some(ConjVal::PlusInfinity));
                }
            }
        }

        // Face enumeration: for each candidate active set S, look for a
        // feasible stationary point of the restriction to {A_S x = b_S}:
        //   (Q + Q^T) x + A_S^T mu = obj_lin,  A_S x = b_S,  A x <= b.
        let m = p.region.n_constraints();
        let mut best: Option<Rat> = None;
        for mask in 0u32..(1u32 << m) {
            let subset: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            let vars = n + subset.len();
            let mut lp = LpBuilder::new(vars);
            // stationarity rows
            for coord in 0..n {
                let mut row = Vector::zeros(vars);
                for j in 0..n {
                    row[j] = sym.row(coord)[j].clone();
                }
                for (k, &s) in subset.iter().enumerate() {
                    row[n + k] = p.region.rows()[s][coord].clone();
                }
                lp.eq(row, obj_lin[coord].clone());
            }
            for (k, &s) in subset.iter().enumerate() {
                let _ = k;
                let mut row = Vector::zeros(vars);
                for j in 0..n {
                    row[j] = p.region.rows()[s][j].clone();
                }
                lp.eq(row, p.region.rhs()[s].clone());
            }
            for (a, b) in p.region.rows().iter().zip(p.region.rhs()) {
                let mut row = Vector::zeros(vars);
                for j in 0..n {
                    row[j] = a[j].clone();
                }
                lp.leq(row, b.clone());
            }
            if let LpOutcome::Optimal { x, .. } = lp.solve() {
                let pt = x.slice(0..n);
                let v = obj_lin.dot(&pt) - pt.dot(&p.quad.mul_vec(&pt)) - p.cst.clone();
                match &best {
                    Some(b) if *b >= v => {}
                    _ => best = Some(v),
                }
            }
        }
        Ok(best.map(ConjVal::Finite))
    }

    /// Midpoint-convexity spot check on sampled pairs; returns the first
    /// violating pair if any.
    pub fn check_midpoint_convexity(&self, samples: &[(QVec, QVec)]) -> Option<(QVec, QVec)> {
        let half = crate::scalar::rat(1, 2);
        for (x, y) in samples {
            let mid = (x + y).scale(&half);
            let (Ok(fx), Ok(fy), Ok(fm)) = (self.value(x), self.value(y), self.value(&mid))
            else {
                continue;
            };
            let avg = (fx + fy) * half.clone();
            if self.convex && fm > avg {
                return Some((x.clone(), y.clone()));
            }
            if self.concave && fm < avg {
                return Some((x.clone(), y.clone()));
            }
        }
        None
    }
}

fn symmetrize(q: &QMat) -> QMat {
    let t = q.transpose();
    QMat::from_rows(
        q.rows().iter().zip(t.rows()).map(|(a, b)| a + b).collect(),
        q.ncols(),
    )
}

/// `|<a,x>|`-style one-kink atoms are common enough to deserve a helper:
/// max of two affine pieces split by the hyperplane where they agree.
pub fn max_of_two_affine(a1: QVec, c1: Rat, a2: QVec, c2: Rat) -> AtomFn {
    let n = a1.dim();
    let to_iv = |v: &QVec| {
        IndexVec::new(v.iter().map(|r| IndexPoly::constant(r.clone())).collect())
    };
    let zero_quad = vec![IndexVec::new(vec![IndexPoly::zero(); n]); n];
    // piece 1 active where <a1,x>+c1 >= <a2,x>+c2
    let split = &a2 - &a1;
    let split_rhs = c1.clone() - c2.clone();
    AtomFn {
        n,
        pieces: vec![
            PieceTemplate {
                region: vec![(to_iv(&split), IndexPoly::constant(split_rhs.clone()))],
                quad: zero_quad.clone(),
                lin: to_iv(&a1),
                cst: IndexPoly::constant(c1),
            },
            PieceTemplate {
                region: vec![(to_iv(&(-&split)), IndexPoly::constant(-split_rhs))],
                quad: zero_quad,
                lin: to_iv(&a2),
                cst: IndexPoly::constant(c2),
            },
        ],
        convex: true,
        concave: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    /// Example family phi_i(u) = i u^2 for u < 0, 0 for u >= 0 (1-D).
    fn parabolic_flap() -> AtomFn {
        AtomFn {
            n: 1,
            pieces: vec![
                PieceTemplate {
                    region: vec![(
                        IndexVec::parse(&["1".into()]).unwrap(),
                        IndexPoly::zero(),
                    )],
                    quad: vec![IndexVec::parse(&["i".into()]).unwrap()],
                    lin: IndexVec::parse(&["0".into()]).unwrap(),
                    cst: IndexPoly::zero(),
                },
                PieceTemplate {
                    region: vec![(
                        IndexVec::parse(&["-1".into()]).unwrap(),
                        IndexPoly::zero(),
                    )],
                    quad: vec![IndexVec::new(vec![IndexPoly::zero()])],
                    lin: IndexVec::parse(&["0".into()]).unwrap(),
                    cst: IndexPoly::zero(),
                },
            ],
            convex: true,
            concave: false,
        }
    }

    #[test]
    fn instantiate_and_evaluate() {
        let atom = parabolic_flap();
        let a2 = atom.instantiate(2).unwrap();
        assert_eq!(a2.value(&QVec::from_ints(&[-3])).unwrap(), int(18));
        assert_eq!(a2.value(&QVec::from_ints(&[5])).unwrap(), int(0));
        // boundary agreement at 0
        assert_eq!(a2.value(&QVec::from_ints(&[0])).unwrap(), int(0));
        assert!(!atom.is_constant_in_index());
    }

    #[test]
    fn gradient_collapses_at_smooth_junction() {
        let a1 = parabolic_flap().instantiate(1).unwrap();
        // both pieces give gradient 0 at the origin
        assert_eq!(a1.gradient(&QVec::from_ints(&[0])).unwrap(), Some(QVec::from_ints(&[0])));
        assert_eq!(
            a1.gradient(&QVec::from_ints(&[-1])).unwrap(),
            Some(QVec::from_ints(&[-2]))
        );
    }

    #[test]
    fn affine_subdifferentials() {
        // phi(x) = -x2
        let atom = AtomFn::affine(QVec::from_ints(&[0, -1]), int(0));
        let c = atom.instantiate(1).unwrap();
        let g = QVec::from_ints(&[0, -1]);
        let x = QVec::from_ints(&[0, 0]);
        for flavor in [Flavor::Basic, Flavor::Frechet, Flavor::FrechetUpper] {
            let s = c.subdifferential(&x, flavor).unwrap();
            assert_eq!(s.points, vec![g.clone()], "{flavor:?}");
        }
        let sing = c.subdifferential(&x, Flavor::Singular).unwrap();
        assert_eq!(sing.points, vec![QVec::from_ints(&[0, 0])]);
    }

    #[test]
    fn abs_kink_flavors() {
        // |x| = max(x, -x)
        let atom = max_of_two_affine(
            QVec::from_ints(&[1]),
            int(0),
            QVec::from_ints(&[-1]),
            int(0),
        );
        let c = atom.instantiate(1).unwrap();
        let zero = QVec::from_ints(&[0]);
        let basic = c.subdifferential(&zero, Flavor::Basic).unwrap();
        assert!(basic.hull);
        assert_eq!(basic.points, vec![QVec::from_ints(&[-1]), QVec::from_ints(&[1])]);
        let upper = c.subdifferential(&zero, Flavor::FrechetUpper).unwrap();
        assert!(upper.points.is_empty());
        // away from the kink it's the gradient
        let right = c.subdifferential(&QVec::from_ints(&[2]), Flavor::Frechet).unwrap();
        assert_eq!(right.points, vec![QVec::from_ints(&[1])]);
    }

    #[test]
    fn conjugate_of_abs() {
        // |x|* = indicator of [-1,1]
        let atom = max_of_two_affine(
            QVec::from_ints(&[1]),
            int(0),
            QVec::from_ints(&[-1]),
            int(0),
        );
        let c = atom.instantiate(1).unwrap();
        assert_eq!(
            c.conjugate_value(&QVec::new(vec![rat(1, 2)])).unwrap(),
            ConjVal::Finite(int(0))
        );
        assert_eq!(
            c.conjugate_value(&QVec::from_ints(&[1])).unwrap(),
            ConjVal::Finite(int(0))
        );
        assert_eq!(
            c.conjugate_value(&QVec::from_ints(&[2])).unwrap(),
            ConjVal::PlusInfinity
        );
    }

    #[test]
    fn conjugate_of_indexed_parabola() {
        // phi_i(u) = i u^2 (u<0), 0 (u>=0): phi_i*(s) = s^2/(4i) for s <= 0,
        // +inf for s > 0.
        let a3 = parabolic_flap().instantiate(3).unwrap();
        assert_eq!(
            a3.conjugate_value(&QVec::from_ints(&[-6])).unwrap(),
            ConjVal::Finite(int(3)) // 36/12
        );
        assert_eq!(
            a3.conjugate_value(&QVec::from_ints(&[0])).unwrap(),
            ConjVal::Finite(int(0))
        );
        assert_eq!(
            a3.conjugate_value(&QVec::from_ints(&[1])).unwrap(),
            ConjVal::PlusInfinity
        );
    }

    #[test]
    fn midpoint_convexity_spot_check() {
        let c = parabolic_flap().instantiate(4).unwrap();
        let pairs: Vec<(QVec, QVec)> = (-5..5)
            .map(|k| (QVec::from_ints(&[k]), QVec::from_ints(&[k + 3])))
            .collect();
        assert!(c.check_midpoint_convexity(&pairs).is_none());
        // a deliberately misdeclared concave flag trips the checker
        let mut bad = parabolic_flap().instantiate(4).unwrap();
        bad.convex = false;
        bad.concave = true;
        assert!(bad.check_midpoint_convexity(&pairs).is_some());
    }
}
