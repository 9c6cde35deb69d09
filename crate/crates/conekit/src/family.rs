//! Countable set families `{Omega_i}` given by index templates, with the
//! truncation machinery that realizes every infinite intersection in the
//! calculus: exact symbolic limit sets where the template structure allows
//! it, and a stagnation-scan semi-decision protocol everywhere else.

use crate::atom::AtomFn;
use crate::error::{ConeError, Result};
use crate::indexpoly::{IndexPoly, IndexVec};
use crate::linalg::QVec;
use crate::polyhedron::Polyhedron;
use crate::setexpr::SetExpr;
use num_traits::Signed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncationPolicy {
    pub k_init: i64,
    pub k_max: i64,
    pub window: i64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { k_init: 8, k_max: 512, window: 5 }
    }
}

#[derive(Clone, Debug)]
pub enum FamilyTemplate {
    /// `Omega_i = {x : <a_j(i),x> <= b_j(i)}` with Laurent-polynomial rows.
    Polyhedral { rows: Vec<(IndexVec, IndexPoly)> },
    /// `Omega_i = epi(phi_i)` for an indexed atom.
    Epigraph(AtomFn),
    /// `Omega_i = {x : phi_i(x) <= 0}`.
    LevelSet(AtomFn),
    /// The same set for every index.
    Constant(Box<SetExpr>),
    /// A finite family given explicitly; index `i` past the end is an error.
    List(Vec<SetExpr>),
}

#[derive(Clone, Debug)]
pub struct IndexedFamily {
    pub template: FamilyTemplate,
    pub policy: TruncationPolicy,
    /// Declared common point (typically the reference point x-bar).
    pub base_point: Option<QVec>,
}

/// Result of a truncation scan: the value at the stagnation point (or at
/// `K_max` when no stagnation occurred).
#[derive(Clone, Debug)]
pub struct ScanResult<V> {
    pub value: V,
    pub k_star: i64,
    pub stagnated: bool,
}

impl IndexedFamily {
    pub fn new(template: FamilyTemplate) -> Self {
        IndexedFamily {
            template,
            policy: TruncationPolicy::default(),
            base_point: None,
        }
    }

    pub fn with_base_point(mut self, x: QVec) -> Self {
        self.base_point = Some(x);
        self
    }

    pub fn with_policy(mut self, policy: TruncationPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(match &self.template {
            FamilyTemplate::Polyhedral { rows } => rows
                .first()
                .map(|(a, _)| a.dim())
                .ok_or_else(|| ConeError::Malformed("empty polyhedral template".into()))?,
            FamilyTemplate::Epigraph(a) => a.n + 1,
            FamilyTemplate::LevelSet(a) => a.n,
            FamilyTemplate::Constant(s) => s.dim(),
            FamilyTemplate::List(v) => v
                .first()
                .map(|s| s.dim())
                .ok_or_else(|| ConeError::Malformed("empty family list".into()))?,
        })
    }

    /// Number of members for finite families.
    pub fn support_len(&self) -> Option<i64> {
        match &self.template {
            FamilyTemplate::List(v) => Some(v.len() as i64),
            _ => None,
        }
    }

    /// Largest meaningful truncation level at or below `k`.
    pub fn effective_k(&self, k: i64) -> i64 {
        match self.support_len() {
            Some(len) => k.min(len),
            None => k,
        }
    }

    /// Instances do not depend on the index at all.
    pub fn constant_in_index(&self) -> bool {
        match &self.template {
            FamilyTemplate::Polyhedral { rows } => rows
                .iter()
                .all(|(a, b)| a.is_constant() && b.is_constant()),
            FamilyTemplate::Epigraph(a) | FamilyTemplate::LevelSet(a) => {
                a.is_constant_in_index()
            }
            FamilyTemplate::Constant(_) => true,
            FamilyTemplate::List(_) => false,
        }
    }

    pub fn instantiate(&self, i: i64) -> Result<SetExpr> {
        if i < 1 {
            return Err(ConeError::IndexOutOfRange { index: i, max: i64::MAX });
        }
        match &self.template {
            FamilyTemplate::Polyhedral { rows } => {
                let dim = self.dim()?;
                let mut a = Vec::new();
                let mut b = Vec::new();
                for (av, bv) in rows {
                    a.push(av.eval(i)?);
                    b.push(bv.eval(i)?);
                }
                Ok(SetExpr::Poly(Polyhedron::new(a, b, dim)?))
            }
            FamilyTemplate::Epigraph(atom) => Ok(SetExpr::Epigraph(atom.instantiate(i)?)),
            FamilyTemplate::LevelSet(atom) => Ok(SetExpr::LevelSet(atom.instantiate(i)?)),
            FamilyTemplate::Constant(s) => Ok((**s).clone()),
            FamilyTemplate::List(v) => v
                .get((i - 1) as usize)
                .cloned()
                .ok_or(ConeError::IndexOutOfRange { index: i, max: v.len() as i64 }),
        }
    }

    /// The truncated intersection `Omega_1 ∩ ... ∩ Omega_K` as a SetExpr.
    pub fn truncated_intersection(&self, k: i64) -> Result<SetExpr> {
        let k = self.effective_k(k);
        let members: Vec<SetExpr> =
            (1..=k).map(|i| self.instantiate(i)).collect::<Result<_>>()?;
        Ok(SetExpr::TruncatedIntersection(members))
    }

    /// Exact infinite intersection `⋂_{i=1}^∞ Omega_i` when the template
    /// structure supports a symbolic limit; `None` otherwise.
    ///
    /// Supported: finite families; index-constant templates; polyhedral rows
    /// affine in `i` (the constraint `α(x) + i β(x) <= 0` for all `i >= 1`
    /// reduces to the `i = 1` row plus the leading-coefficient row); epigraph
    /// templates whose positive-degree terms are diagonal nonnegative pure
    /// quadratics (forcing the corresponding coordinates to zero in the
    /// limit) with affine degree-0 part.
    pub fn limit_set(&self) -> Result<Option<SetExpr>> {
        match &self.template {
            FamilyTemplate::Constant(s) => Ok(Some((**s).clone())),
            FamilyTemplate::List(v) => Ok(Some(SetExpr::TruncatedIntersection(v.clone()))),
            FamilyTemplate::Polyhedral { rows } => {
                let dim = self.dim()?;
                let mut a = Vec::new();
                let mut b = Vec::new();
                for (av, bv) in rows {
                    let polys = || av.coords.iter().chain(std::iter::once(bv));
                    let max_deg = polys().filter_map(|p| p.degree()).max().unwrap_or(0);
                    let min_deg = polys().filter_map(|p| p.min_degree()).min().unwrap_or(0);
                    if max_deg > 1 || min_deg < 0 {
                        return Ok(None);
                    }
                    // i = 1 row
                    a.push(av.eval(1)?);
                    b.push(bv.eval(1)?);
                    // leading row (coefficient of i)
                    let lead: QVec = crate::linalg::Vector::new(
                        av.coords.iter().map(|p| p.coeff(1)).collect(),
                    );
                    let lead_rhs = bv.coeff(1);
                    if !lead.is_zero() || !num_traits::Zero::is_zero(&lead_rhs) {
                        a.push(lead);
                        b.push(lead_rhs);
                    }
                }
                Ok(Some(SetExpr::Poly(Polyhedron::new(a, b, dim)?)))
            }
            FamilyTemplate::Epigraph(atom) => self.epigraph_limit(atom),
            FamilyTemplate::LevelSet(atom) => {
                if atom.is_constant_in_index() {
                    Ok(Some(self.instantiate(1)?))
                } else {
                    Ok(None)
                }
            }
        }
    }

    fn epigraph_limit(&self, atom: &AtomFn) -> Result<Option<SetExpr>> {
        if atom.is_constant_in_index() {
            return Ok(Some(self.instantiate(1)?));
        }
        let n = atom.n;
        let mut pieces: Vec<Polyhedron> = Vec::new();
        for p in &atom.pieces {
            // regions must not depend on the index
            if !p.region.iter().all(|(a, b)| a.is_constant() && b.is_constant()) {
                return Ok(None);
            }
            let mut rows: Vec<QVec> = Vec::new();
            let mut rhs = Vec::new();
            for (a, b) in &p.region {
                // region rows live in x-space; extend with a 0 t-coordinate
                rows.push(a.eval(1)?.push(num_traits::Zero::zero()));
                rhs.push(b.eval(1)?);
            }
            // split coefficients by degree
            let max_deg = p
                .quad
                .iter()
                .flat_map(|r| r.coords.iter())
                .chain(p.lin.coords.iter())
                .chain(std::iter::once(&p.cst))
                .filter_map(|c| c.degree())
                .max()
                .unwrap_or(0);
            let has_nonquad_index_dep = p
                .lin
                .coords
                .iter()
                .chain(std::iter::once(&p.cst))
                .any(|c| !c.is_constant());
            if has_nonquad_index_dep {
                return Ok(None);
            }
            for deg in 1..=max_deg {
                // positive-degree quadratic must be diagonal nonnegative;
                // sup over i is finite only where those coordinates vanish
                for (r, row) in p.quad.iter().enumerate() {
                    for (c, coef) in row.coords.iter().enumerate() {
                        let v = coef.coeff(deg);
                        if num_traits::Zero::is_zero(&v) {
                            continue;
                        }
                        if r != c || v.is_negative() {
                            return Ok(None);
                        }
                        // force x_r = 0
                        let mut e = crate::linalg::Vector::zeros(n + 1);
                        e[r] = crate::scalar::int(1);
                        rows.push(e.clone());
                        rhs.push(num_traits::Zero::zero());
                        rows.push(-&e);
                        rhs.push(num_traits::Zero::zero());
                    }
                }
            }
            // degree-0 quadratic part must vanish for a polyhedral answer
            let deg0_quad_nonzero = p
                .quad
                .iter()
                .flat_map(|r| r.coords.iter())
                .any(|c| !num_traits::Zero::is_zero(&c.coeff(0)));
            if deg0_quad_nonzero {
                return Ok(None);
            }
            let any_negative_degree = p
                .quad
                .iter()
                .flat_map(|r| r.coords.iter())
                .any(|c| c.min_degree().map(|d| d < 0).unwrap_or(false));
            if any_negative_degree {
                return Ok(None);
            }
            // t >= <lin_0, x> + cst_0  →  <lin_0, x> - t <= -cst_0
            rows.push(p.lin.eval(1)?.push(crate::scalar::int(-1)));
            rhs.push(-p.cst.eval(1)?);
            pieces.push(Polyhedron::new(rows, rhs, n + 1)?);
        }
        Ok(Some(SetExpr::FiniteUnion(
            pieces.into_iter().map(SetExpr::Poly).collect(),
        )))
    }

    /// Scans truncation levels `K = K_init..K_max`, reporting the first `K*`
    /// at which `quantity` is unchanged (per `same`) over `window`
    /// consecutive levels.
    pub fn stagnation_scan<V>(
        &self,
        mut quantity: impl FnMut(i64) -> Result<V>,
        mut same: impl FnMut(&V, &V) -> Result<bool>,
    ) -> Result<ScanResult<V>> {
        let k_lo = self.effective_k(self.policy.k_init).max(1);
        let k_hi = self.effective_k(self.policy.k_max);
        let window = self.policy.window.max(1);
        let mut current = quantity(k_lo)?;
        let mut run_start = k_lo;
        let mut k = k_lo;
        while k < k_hi {
            k += 1;
            let next = quantity(k)?;
            if same(&current, &next)? {
                if k - run_start + 1 >= window {
                    return Ok(ScanResult { value: current, k_star: run_start, stagnated: true });
                }
            } else {
                current = next;
                run_start = k;
            }
        }
        // finite families stagnate trivially at their support length
        if self.support_len().is_some() {
            return Ok(ScanResult { value: current, k_star: k_hi, stagnated: true });
        }
        Ok(ScanResult { value: current, k_star: k_hi, stagnated: false })
    }
}

/// The linear family `{x : <a(i),x> <= 0}` from a coefficient template.
pub fn halfspace_family(a: IndexVec) -> IndexedFamily {
    IndexedFamily::new(FamilyTemplate::Polyhedral {
        rows: vec![(a, IndexPoly::zero())],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    

    fn linear_family() -> IndexedFamily {
        // a_i = (1, i)
        halfspace_family(IndexVec::parse(&["1".into(), "i".into()]).unwrap())
    }

    /// phi_i(u) = i u^2 for u < 0, 0 for u >= 0; family of epigraphs.
    fn parabolic_family() -> IndexedFamily {
        use crate::atom::PieceTemplate;
        let atom = AtomFn {
            n: 1,
            pieces: vec![
                PieceTemplate {
                    region: vec![(IndexVec::parse(&["1".into()]).unwrap(), IndexPoly::zero())],
                    quad: vec![IndexVec::parse(&["i".into()]).unwrap()],
                    lin: IndexVec::parse(&["0".into()]).unwrap(),
                    cst: IndexPoly::zero(),
                },
                PieceTemplate {
                    region: vec![(IndexVec::parse(&["-1".into()]).unwrap(), IndexPoly::zero())],
                    quad: vec![IndexVec::new(vec![IndexPoly::zero()])],
                    lin: IndexVec::parse(&["0".into()]).unwrap(),
                    cst: IndexPoly::zero(),
                },
            ],
            convex: true,
            concave: false,
        };
        IndexedFamily::new(FamilyTemplate::Epigraph(atom))
    }

    #[test]
    fn instantiate_linear() {
        let f = linear_family();
        let s3 = f.instantiate(3).unwrap();
        assert!(s3.member(&QVec::from_ints(&[-3, 1])).unwrap());
        assert!(!s3.member(&QVec::from_ints(&[1, 0])).unwrap());
        assert!(f.instantiate(0).is_err());
    }

    #[test]
    fn linear_limit_set_adds_leading_row() {
        let f = linear_family();
        let lim = f.limit_set().unwrap().unwrap();
        // ⋂ {x1 + i x2 <= 0} = {x1 + x2 <= 0, x2 <= 0}
        assert!(lim.member(&QVec::from_ints(&[-1, 0])).unwrap());
        assert!(lim.member(&QVec::from_ints(&[5, -6])).unwrap());
        assert!(!lim.member(&QVec::from_ints(&[0, 1])).unwrap());
        assert!(!lim.member(&QVec::from_ints(&[1, 0])).unwrap());
        // cross-check against deep truncations on sample points
        let trunc = f.truncated_intersection(64).unwrap();
        for p in [
            QVec::from_ints(&[-1, 0]),
            QVec::from_ints(&[5, -6]),
            QVec::from_ints(&[-7, -1]),
        ] {
            assert_eq!(lim.member(&p).unwrap(), trunc.member(&p).unwrap());
        }
    }

    #[test]
    fn parabolic_limit_set_is_quarter_plane() {
        let f = parabolic_family();
        let lim = f.limit_set().unwrap().unwrap();
        // ⋂ epi(phi_i) = R+ x R+
        assert!(lim.member(&QVec::from_ints(&[0, 0])).unwrap());
        assert!(lim.member(&QVec::from_ints(&[2, 1])).unwrap());
        assert!(!lim.member(&QVec::from_ints(&[-1, 100])).unwrap());
        assert!(!lim.member(&QVec::from_ints(&[1, -1])).unwrap());
    }

    #[test]
    fn constant_family_stagnates_at_k_init() {
        let f = IndexedFamily::new(FamilyTemplate::Constant(Box::new(
            crate::setexpr::halfspace_set(QVec::from_ints(&[1, 0])),
        )));
        let scan = f
            .stagnation_scan(|k| Ok(k * 0), |a, b| Ok(a == b))
            .unwrap();
        assert!(scan.stagnated);
        assert_eq!(scan.k_star, f.policy.k_init);
    }

    #[test]
    fn growing_quantity_never_stagnates() {
        let f = linear_family().with_policy(TruncationPolicy {
            k_init: 2,
            k_max: 30,
            window: 5,
        });
        let scan = f.stagnation_scan(|k| Ok(k), |a, b| Ok(a == b)).unwrap();
        assert!(!scan.stagnated);
        assert_eq!(scan.k_star, 30);
    }

    #[test]
    fn finite_list_family_clamps() {
        let sets = vec![
            crate::setexpr::halfspace_set(QVec::from_ints(&[1, 0])),
            crate::setexpr::halfspace_set(QVec::from_ints(&[0, 1])),
        ];
        let f = IndexedFamily::new(FamilyTemplate::List(sets));
        assert_eq!(f.effective_k(100), 2);
        assert!(f.instantiate(3).is_err());
        let inter = f.truncated_intersection(100).unwrap();
        assert!(inter.member(&QVec::from_ints(&[-1, -1])).unwrap());
        assert!(!inter.member(&QVec::from_ints(&[1, -1])).unwrap());
        let _ = f.limit_set().unwrap().unwrap();
    }

    #[test]
    fn index_constant_polyhedral_limit() {
        let f = halfspace_family(IndexVec::parse(&["1".into(), "2".into()]).unwrap());
        assert!(f.constant_in_index());
        let lim = f.limit_set().unwrap().unwrap();
        assert!(lim.member(&QVec::from_ints(&[-2, 1])).unwrap());
        assert!(!lim.member(&QVec::from_ints(&[1, 1])).unwrap());
    }
}
