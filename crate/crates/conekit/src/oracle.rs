//! Sampling oracles for tangent and normal cones, independent of the exact
//! closed-form machinery.
//!
//! The tangent oracle classifies directions by exact membership of the
//! rationalized quotient points `x + t d`; the normal oracle collects
//! projection directions `z - proj(z)` on shrinking rings around the base
//! point. Results are float direction samples with angular-resolution
//! metadata — they are consumed by tests and never feed exact verdicts.

use crate::cone::ConeRep;
use crate::linalg::{FVec, QVec, Vector};
use crate::scalar::{rat, Rat};
use crate::setexpr::SetExpr;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sampling parameters: quotient steps, direction count, projection ring
/// radii, and the tolerance band for agreement comparisons.
#[derive(Clone, Debug)]
pub struct OracleGrid {
    pub t_values: Vec<Rat>,
    pub n_directions: usize,
    pub radii: Vec<Rat>,
    pub seed: u64,
    pub angular_resolution_deg: f64,
}

impl OracleGrid {
    /// Defaults: t in {2^-1..2^-14}, 720 angular directions in 2-D or 2000
    /// random unit directions for n >= 3, ring radii 10^-1..10^-4, 1-degree
    /// tolerance band.
    pub fn default_for_dim(dim: usize) -> Self {
        OracleGrid {
            t_values: (1..=14).map(|k| rat(1, 1 << k)).collect(),
            n_directions: if dim <= 2 { 720 } else { 2000 },
            radii: (1..=4).map(|k| rat(1, 10i64.pow(k))).collect(),
            seed: 0x5eed,
            angular_resolution_deg: 1.0,
        }
    }
}

/// A direction-sampled cone: every sampled unit direction with its
/// accept/reject verdict.
#[derive(Clone, Debug)]
pub struct SampledCone {
    pub dim: usize,
    pub directions: Vec<FVec>,
    pub accepted: Vec<bool>,
    pub angular_resolution_deg: f64,
}

impl SampledCone {
    pub fn accepted_count(&self) -> usize {
        self.accepted.iter().filter(|a| **a).count()
    }
}

/// Projection-generated normal direction samples, tagged with the ring
/// radius they came from.
#[derive(Clone, Debug)]
pub struct NormalSamples {
    pub dim: usize,
    /// `(ring radius, unit direction z - proj(z))` pairs.
    pub samples: Vec<(f64, FVec)>,
    pub angular_resolution_deg: f64,
}

/// Samples the tangent cone of `s` at `x`: a direction is accepted when the
/// quotient points `x + t d` are members for every step `t` in the finest
/// band of the grid.
pub fn oracle_tangent(s: &SetExpr, x: &QVec, grid: &OracleGrid) -> SampledCone {
    let dim = s.dim();
    let dirs = sample_directions(dim, grid);
    let fine: Vec<&Rat> = smallest_steps(&grid.t_values, 4);
    let mut accepted = Vec::with_capacity(dirs.len());
    for d in &dirs {
        let dq = rationalize(d, 1 << 16);
        let ok = fine.iter().all(|t| {
            let p = x + &dq.scale(t);
            s.member(&p).unwrap_or(false)
        });
        accepted.push(ok);
    }
    SampledCone {
        dim,
        directions: dirs,
        accepted,
        angular_resolution_deg: grid.angular_resolution_deg,
    }
}

/// Samples normal directions of `s` at `x`: for ring points `z = x + r d`,
/// projects `z` onto the set and records the unit direction `z - proj(z)`
/// whenever the projection lands near `x` (within twice the ring radius).
pub fn oracle_normal(s: &SetExpr, x: &QVec, grid: &OracleGrid) -> NormalSamples {
    let dim = s.dim();
    let dirs = sample_directions(dim, grid);
    let xf = x.map_to_f64();
    let polys = crate::varcalc::union_of_polyhedra(s);
    let mut samples = Vec::new();
    for r in &grid.radii {
        let rf = crate::scalar::Scalar::to_f64(r);
        for d in &dirs {
            let z: FVec = Vector::new(
                xf.iter().zip(d.iter()).map(|(a, b)| a + b * rf).collect(),
            );
            let zq = rationalize_shifted(x, d, r);
            // minimum meaningful separation: exact projections give exact
            // directions, the pattern search only resolves ~1e-8 in position
            let (p, v) = match &polys {
                Some(list) => {
                    let Some(pq) = exact_union_projection(list, &zq) else { continue };
                    let vq = &zq - &pq;
                    if vq.is_zero() {
                        continue; // z is a member
                    }
                    (pq.map_to_f64(), vq.map_to_f64())
                }
                None => {
                    let Some(p) = approx_project(s, &z, x) else { continue };
                    let v: FVec =
                        Vector::new(z.iter().zip(p.iter()).map(|(a, b)| a - b).collect());
                    // the pattern search only resolves ~1e-8 in position, so
                    // closer separations give untrustworthy directions
                    if v.norm_sq().sqrt() <= 1e-5 {
                        continue;
                    }
                    (p, v)
                }
            };
            let norm = v.norm_sq().sqrt();
            if norm == 0.0 {
                continue;
            }
            let far: f64 = p
                .iter()
                .zip(xf.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if far > 2.0 * rf {
                continue; // projection escaped the neighborhood of x
            }
            samples.push((rf, Vector::new(v.iter().map(|c| c / norm).collect())));
        }
    }
    NormalSamples {
        dim,
        samples,
        angular_resolution_deg: grid.angular_resolution_deg,
    }
}

/// Agreement report between an oracle and an exact cone.
#[derive(Clone, Copy, Debug, Default)]
pub struct AgreementReport {
    /// Directions sampled.
    pub total: usize,
    /// Directions outside the angular tolerance band (robustly inside or
    /// outside the exact cone) and therefore compared.
    pub compared: usize,
    /// Compared directions on which oracle and exact cone disagree.
    pub disagreements: usize,
}

impl AgreementReport {
    pub fn agreement_ratio(&self) -> f64 {
        if self.compared == 0 {
            1.0
        } else {
            1.0 - self.disagreements as f64 / self.compared as f64
        }
    }
}

/// Compares a tangent-oracle sample against an exact cone: directions whose
/// 1-degree perturbations straddle the exact boundary are excluded (the
/// tolerance band), all others must match the oracle verdict.
pub fn tangent_agreement(
    sampled: &SampledCone,
    exact: &ConeRep,
    seed: u64,
) -> AgreementReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AgreementReport { total: sampled.directions.len(), ..Default::default() };
    let theta = sampled.angular_resolution_deg.to_radians();
    for (d, &oracle_in) in sampled.directions.iter().zip(&sampled.accepted) {
        let exact_in = cone_member_f64(exact, d);
        let mut robust = true;
        for p in perturbations(d, theta, &mut rng) {
            if cone_member_f64(exact, &p) != exact_in {
                robust = false;
                break;
            }
        }
        if !robust {
            continue; // inside the tolerance band
        }
        report.compared += 1;
        if oracle_in != exact_in {
            report.disagreements += 1;
        }
    }
    report
}

/// Exact-cone membership of a float direction, via rationalization (scale
/// invariance of cones makes the denominator choice harmless).
pub fn cone_member_f64(cone: &ConeRep, d: &FVec) -> bool {
    cone.member(&rationalize(d, 1 << 16)).unwrap_or(false)
}

/// Unit directions at 1-degree offsets from `d`: rotations in 2-D, random
/// great-circle steps in higher dimension.
fn perturbations(d: &FVec, theta: f64, rng: &mut ChaCha8Rng) -> Vec<FVec> {
    let n = d.dim();
    if n == 2 {
        let (s, c) = theta.sin_cos();
        let rot = |sgn: f64| {
            Vector::new(vec![d[0] * c - d[1] * s * sgn, d[0] * s * sgn + d[1] * c])
        };
        return vec![rot(1.0), rot(-1.0)];
    }
    let norm_d = d.norm_sq().sqrt();
    let mut out = Vec::new();
    while out.len() < 6 {
        let e: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // orthogonalize against d
        let proj: f64 = e.iter().zip(d.iter()).map(|(a, b)| a * b).sum::<f64>() / (norm_d * norm_d);
        let o: Vec<f64> = e.iter().zip(d.iter()).map(|(a, b)| a - proj * b).collect();
        let on: f64 = o.iter().map(|v| v * v).sum::<f64>().sqrt();
        if on < 1e-9 {
            continue;
        }
        out.push(Vector::new(
            d.iter()
                .zip(&o)
                .map(|(a, b)| a * theta.cos() + b / on * norm_d * theta.sin())
                .collect(),
        ));
    }
    out
}

/// The evenly spaced (2-D) or seeded-random (n >= 3) unit direction grid.
pub fn sample_directions(dim: usize, grid: &OracleGrid) -> Vec<FVec> {
    if dim == 1 {
        return vec![Vector::new(vec![1.0]), Vector::new(vec![-1.0])];
    }
    if dim == 2 {
        return (0..grid.n_directions)
            .map(|k| {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / grid.n_directions as f64;
                Vector::new(vec![phi.cos(), phi.sin()])
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    let mut out = Vec::with_capacity(grid.n_directions);
    while out.len() < grid.n_directions {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-3 || norm > 1.0 {
            continue;
        }
        out.push(Vector::new(v.into_iter().map(|c| c / norm).collect()));
    }
    out
}

fn smallest_steps(t_values: &[Rat], k: usize) -> Vec<&Rat> {
    let mut sorted: Vec<&Rat> = t_values.iter().collect();
    sorted.sort();
    sorted.into_iter().take(k).collect()
}

/// Rounds float coordinates to denominator `denom` rationals.
pub fn rationalize(v: &FVec, denom: i64) -> QVec {
    Vector::new(
        v.iter()
            .map(|c| rat((c * denom as f64).round() as i64, denom))
            .collect(),
    )
}

/// `x + r * round(d)` with everything exact (`x`, `r` rational already).
fn rationalize_shifted(x: &QVec, d: &FVec, r: &Rat) -> QVec {
    let dq = rationalize(d, 1 << 16);
    x + &dq.scale(r)
}

fn exact_union_projection(
    polys: &[crate::polyhedron::Polyhedron],
    z: &QVec,
) -> Option<QVec> {
    let mut best: Option<(Rat, QVec)> = None;
    for p in polys {
        if p.is_empty() {
            continue;
        }
        let Ok(proj) = p.project(z) else { continue };
        let d = (&proj - z).norm_sq();
        match &best {
            Some((bd, _)) if *bd <= d => {}
            _ => best = Some((d, proj)),
        }
    }
    best.map(|(_, p)| p)
}

/// Approximate projection of `z` onto `s`, dispatching on the expression
/// structure: exact face enumeration for polyhedra, penalty minimization
/// over the domain for epigraphs, orthogonal-change-of-variables recursion
/// for affine preimages, alternating projections for intersections, and a
/// member-certified pattern search as the last resort.
pub(crate) fn approx_project(s: &SetExpr, z: &FVec, anchor: &QVec) -> Option<FVec> {
    match s {
        SetExpr::Poly(p) => {
            let zq = rationalize(z, 1 << 24);
            p.project(&zq).ok().map(|p| p.map_to_f64())
        }
        SetExpr::Epigraph(atom) => project_epigraph(atom, z),
        SetExpr::AffinePreimage { map, offset, inner, .. } if is_orthogonal(map) => {
            let mf: Vec<FVec> = map.rows().iter().map(|r| r.map_to_f64()).collect();
            let of = offset.map_to_f64();
            let zin: FVec = Vector::new(
                mf.iter()
                    .zip(of.iter())
                    .map(|(row, o)| {
                        row.iter().zip(z.iter()).map(|(a, b)| a * b).sum::<f64>() + o
                    })
                    .collect(),
            );
            let anchor_in = &map.mul_vec(anchor) + offset;
            let pin = approx_project(inner, &zin, &anchor_in)?;
            // p = M^T (p_in - offset) for orthogonal M
            let shifted: Vec<f64> =
                pin.iter().zip(of.iter()).map(|(a, b)| a - b).collect();
            Some(Vector::new(
                (0..map.ncols())
                    .map(|j| mf.iter().zip(&shifted).map(|(row, v)| row[j] * v).sum())
                    .collect(),
            ))
        }
        SetExpr::FiniteUnion(members) => {
            let mut best: Option<(f64, FVec)> = None;
            for m in members {
                if !m.member(anchor).unwrap_or(false) {
                    continue; // does not accumulate at the base point
                }
                let Some(p) = approx_project(m, z, anchor) else { continue };
                let d: f64 =
                    p.iter().zip(z.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                match &best {
                    Some((bd, _)) if *bd <= d => {}
                    _ => best = Some((d, p)),
                }
            }
            best.map(|(_, p)| p)
        }
        SetExpr::TruncatedIntersection(members) => {
            // alternating projections: fine for the small neighborhoods the
            // normal oracle samples
            let mut p = z.clone();
            for _ in 0..60 {
                let prev = p.clone();
                for m in members {
                    p = approx_project(m, &p, anchor)?;
                }
                let step: f64 = p
                    .iter()
                    .zip(prev.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if step < 1e-20 {
                    break;
                }
            }
            Some(p)
        }
        _ => membership_pattern_search(s, z, anchor),
    }
}

/// Projection onto `{(u, t) : t >= phi(u)}` by minimizing the smooth
/// penalty `|u - y|^2 + max(phi(u) - t, 0)^2` over the domain variable.
fn project_epigraph(atom: &crate::atom::ConcreteAtom, z: &FVec) -> Option<FVec> {
    let n = atom.n;
    let y: Vec<f64> = z.iter().take(n).cloned().collect();
    let t = z[n];
    let phi = |u: &[f64]| -> Option<f64> {
        let uq = rationalize(&Vector::new(u.to_vec()), 1 << 24);
        atom.value(&uq).ok().map(|v| crate::scalar::Scalar::to_f64(&v))
    };
    let obj = |u: &[f64]| -> Option<f64> {
        let gap = (phi(u)? - t).max(0.0);
        Some(
            u.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + gap * gap,
        )
    };
    let mut u = y.clone();
    let mut best = obj(&u)?;
    let mut h: f64 = 1.0;
    while h > 1e-9 {
        let mut improved = false;
        for axis in 0..n {
            for sgn in [1.0f64, -1.0] {
                let mut cand = u.clone();
                cand[axis] += sgn * h;
                let Some(v) = obj(&cand) else { continue };
                if v < best {
                    best = v;
                    u = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    let lift = phi(&u)?.max(t);
    let mut coords = u;
    coords.push(lift);
    Some(Vector::new(coords))
}

fn is_orthogonal(m: &crate::linalg::QMat) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let n = m.nrows();
    let t = m.transpose();
    (0..n).all(|i| {
        (0..n).all(|j| {
            let dot = t.row(i).dot(t.row(j));
            if i == j {
                dot == crate::scalar::int(1)
            } else {
                num_traits::Zero::is_zero(&dot)
            }
        })
    })
}

/// Member-certified float pattern search for an approximate projection of
/// `z` onto `s`, started from the known member `anchor`. Candidate moves are
/// rationalized before the exact membership test, so the returned point is
/// (a float image of) a certified member. Stalls on curved boundaries —
/// structured variants above take precedence.
fn membership_pattern_search(s: &SetExpr, z: &FVec, anchor: &QVec) -> Option<FVec> {
    let n = s.dim();
    let mut u = anchor.map_to_f64();
    let dist_sq = |p: &FVec| -> f64 {
        p.iter().zip(z.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
    };
    let mut best = dist_sq(&u);
    // axis moves alone stall on curved boundaries (no single coordinate
    // step stays feasible), so pairwise diagonals are included
    let mut moves: Vec<Vec<f64>> = Vec::new();
    for axis in 0..n {
        for sgn in [1.0f64, -1.0] {
            let mut m = vec![0.0; n];
            m[axis] = sgn;
            moves.push(m);
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut m = vec![0.0; n];
                m[a] = sa;
                m[b] = sb;
                moves.push(m);
            }
        }
    }
    let mut h: f64 = 1.0;
    let min_h = 1e-8;
    while h > min_h {
        let mut improved = false;
        for m in &moves {
            let cand: FVec =
                Vector::new(u.iter().zip(m).map(|(c, s)| c + s * h).collect());
            let cq = rationalize(&cand, 1 << 24);
            if !s.member(&cq).unwrap_or(false) {
                continue;
            }
            let d = dist_sq(&cand);
            if d < best {
                best = d;
                u = cand;
                improved = true;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    Some(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedron::Polyhedron;
    use crate::scalar::int;
    use crate::setexpr::{parabola_epigraph, parabola_hypograph};
    use crate::varcalc::tangent_cone;

    fn origin2() -> QVec {
        QVec::from_ints(&[0, 0])
    }

    #[test]
    fn whole_space_accepts_every_direction() {
        let s = SetExpr::Poly(Polyhedron::whole_space(2));
        let grid = OracleGrid::default_for_dim(2);
        let sc = oracle_tangent(&s, &origin2(), &grid);
        assert_eq!(sc.accepted_count(), sc.directions.len());
    }

    #[test]
    fn tangent_oracle_matches_exact_on_parabola_pair() {
        let grid = OracleGrid::default_for_dim(2);
        for s in [parabola_epigraph(int(1)), parabola_hypograph(int(1))] {
            let exact = tangent_cone(&s, &origin2()).unwrap();
            let sc = oracle_tangent(&s, &origin2(), &grid);
            let rep = tangent_agreement(&sc, &exact.cone, 7);
            assert!(rep.compared > 600, "tolerance band ate the grid: {rep:?}");
            assert_eq!(rep.disagreements, 0, "{rep:?}");
        }
    }

    #[test]
    fn tangent_oracle_rejects_everything_on_singleton() {
        let inter = SetExpr::TruncatedIntersection(vec![
            parabola_epigraph(int(1)),
            parabola_hypograph(int(1)),
        ]);
        let grid = OracleGrid::default_for_dim(2);
        let sc = oracle_tangent(&inter, &origin2(), &grid);
        assert_eq!(sc.accepted_count(), 0);
    }

    #[test]
    fn normal_oracle_clusters_on_parabola() {
        let s = parabola_epigraph(int(1));
        let mut grid = OracleGrid::default_for_dim(2);
        grid.n_directions = 90; // projection sampling is the slow path
        let ns = oracle_normal(&s, &origin2(), &grid);
        let fine: Vec<&FVec> = ns
            .samples
            .iter()
            .filter(|(r, _)| *r < 2e-4)
            .map(|(_, d)| d)
            .collect();
        assert!(!fine.is_empty());
        for d in fine {
            // angle to (0,-1) below one degree
            let cos = -d[1];
            assert!(cos > 1.0f64.to_radians().cos(), "stray normal {d:?}");
        }
    }

    #[test]
    fn normal_oracle_exact_on_quadrant() {
        // {x1 <= 0, x2 <= 0}: normals at 0 fill the first quadrant
        let s = SetExpr::Poly(
            Polyhedron::new(
                vec![QVec::from_ints(&[1, 0]), QVec::from_ints(&[0, 1])],
                vec![int(0), int(0)],
                2,
            )
            .unwrap(),
        );
        let mut grid = OracleGrid::default_for_dim(2);
        grid.n_directions = 120;
        let ns = oracle_normal(&s, &origin2(), &grid);
        assert!(!ns.samples.is_empty());
        for (_, d) in &ns.samples {
            assert!(d[0] >= -1e-9 && d[1] >= -1e-9, "normal outside quadrant: {d:?}");
        }
    }
}
