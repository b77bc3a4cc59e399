//! Exact polytope computations: double-description vertex enumeration for
//! H-polytopes and polar-dual facet recovery for V-polytopes.
//!
//! Everything is exact rational. The double description runs on the
//! homogenization cone with the classic combinatorial adjacency test, which
//! is valid because the cone is made pointed up front (an initial basis of
//! linearly independent rows seeds the generator set).

use crate::error::{Error, Result};
use crate::Q;
use num_traits::{One, Signed, Zero};

// ---------------------------------------------------------------------------
// Dense exact linear algebra helpers.
// ---------------------------------------------------------------------------

/// Reduced row echelon form in place; returns pivot column per pivot row.
pub(crate) fn rref(mat: &mut Vec<Vec<Q>>) -> Vec<usize> {
    let rows = mat.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = mat[0].len();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row >= rows {
            break;
        }
        let Some(p) = (row..rows).find(|&r| !mat[r][col].is_zero()) else {
            continue;
        };
        mat.swap(row, p);
        let inv = mat[row][col].clone();
        for v in mat[row].iter_mut() {
            *v /= &inv;
        }
        for r in 0..rows {
            if r != row && !mat[r][col].is_zero() {
                let f = mat[r][col].clone();
                for c in 0..cols {
                    let delta = &f * &mat[row][c];
                    mat[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    mat.truncate(row);
    pivots
}

/// Basis of `{x : M x = 0}` for the row matrix `m` (columns = variables).
pub(crate) fn nullspace(m: &[Vec<Q>]) -> Vec<Vec<Q>> {
    if m.is_empty() {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut mat = m.to_vec();
    let pivots = rref(&mut mat);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::with_capacity(free.len());
    for &f in &free {
        let mut v = vec![Q::zero(); cols];
        v[f] = Q::one();
        for (r, &p) in pivots.iter().enumerate() {
            v[p] = -mat[r][f].clone();
        }
        basis.push(v);
    }
    basis
}

/// One solution of `M x = b`, or `None` if inconsistent.
pub(crate) fn solve_particular(m: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    if m.is_empty() {
        return if b.iter().all(|v| v.is_zero()) {
            Some(Vec::new())
        } else {
            None
        };
    }
    let cols = m[0].len();
    let mut aug: Vec<Vec<Q>> = m
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    // Inconsistent if a pivot landed in the rhs column.
    if pivots.contains(&cols) {
        return None;
    }
    let mut x = vec![Q::zero(); cols];
    for (r, &p) in pivots.iter().enumerate() {
        x[p] = aug[r][cols].clone();
    }
    Some(x)
}

/// Inverse of a square matrix; `None` if singular.
pub(crate) fn invert(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut aug: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub(crate) fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter()
        .zip(b)
        .map(|(x, y)| x * y)
        .fold(Q::zero(), |acc, v| acc + v)
}

/// Scales a rational vector to primitive integer form, preserving direction.
pub(crate) fn normalize_primitive(v: &mut [Q]) {
    use num::bigint::BigInt;
    use num::Integer;
    let mut lcm = BigInt::one();
    for x in v.iter() {
        lcm = lcm.lcm(x.denom());
    }
    let mut gcd = BigInt::zero();
    for x in v.iter() {
        let scaled = x.numer() * (&lcm / x.denom());
        gcd = gcd.gcd(&scaled);
    }
    if gcd.is_zero() {
        return;
    }
    let factor = Q::new(lcm, gcd);
    for x in v.iter_mut() {
        *x *= &factor;
    }
}

// ---------------------------------------------------------------------------
// Double description on the homogenization cone.
// ---------------------------------------------------------------------------

/// H-polytope `{x : eq·x = rhs, ineq·x ≤ rhs, [x ≥ 0]}`.
#[derive(Debug, Clone, Default)]
pub struct HPolytope {
    pub dim: usize,
    pub equalities: Vec<(Vec<Q>, Q)>,
    pub inequalities: Vec<(Vec<Q>, Q)>,
    pub nonneg: bool,
}

struct Ray {
    v: Vec<Q>,
    /// Rows (by processing order) on which this ray is tight.
    tight: Vec<u64>,
}

impl Ray {
    fn set_tight(&mut self, i: usize) {
        self.tight[i / 64] |= 1 << (i % 64);
    }
}

fn tight_intersection(a: &Ray, b: &Ray) -> Vec<u64> {
    a.tight.iter().zip(&b.tight).map(|(x, y)| x & y).collect()
}

fn tight_superset(sup: &[u64], sub: &[u64]) -> bool {
    sup.iter().zip(sub).all(|(s, t)| s & t == *t)
}

/// Extreme rays of the pointed cone `{z : rows·z ≥ 0}`.
fn cone_rays(rows: &[Vec<Q>], guard: usize) -> Result<Vec<Vec<Q>>> {
    let d = rows[0].len();
    let words = rows.len().div_ceil(64);
    // Pick d linearly independent rows for the initial basis.
    let mut probe: Vec<Vec<Q>> = Vec::new();
    let mut chosen = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let mut trial = probe.clone();
        trial.push(row.clone());
        let mut m = trial.clone();
        if rref(&mut m).len() == trial.len() {
            probe = trial;
            chosen.push(i);
            if chosen.len() == d {
                break;
            }
        }
    }
    if chosen.len() < d {
        return Err(Error::MalformedSystem(
            "cone has lineality; the underlying polytope is unbounded or empty-dimensioned".into(),
        ));
    }
    let basis_mat: Vec<Vec<Q>> = chosen.iter().map(|&i| rows[i].clone()).collect();
    let inv = invert(&basis_mat).expect("chosen rows are independent");
    // Column j of the inverse satisfies basis · r_j = e_j.
    let mut rays: Vec<Ray> = (0..d)
        .map(|j| {
            let mut v: Vec<Q> = (0..d).map(|i| inv[i][j].clone()).collect();
            normalize_primitive(&mut v);
            let mut ray = Ray {
                v,
                tight: vec![0; words],
            };
            for (k, &row_idx) in chosen.iter().enumerate() {
                if k != j {
                    ray.set_tight(row_idx);
                }
            }
            ray
        })
        .collect();

    for (idx, row) in rows.iter().enumerate() {
        if chosen.contains(&idx) {
            continue;
        }
        let vals: Vec<Q> = rays.iter().map(|r| dot(row, &r.v)).collect();
        let mut keep: Vec<Ray> = Vec::new();
        let mut pos: Vec<(Ray, Q)> = Vec::new();
        let mut neg: Vec<(Ray, Q)> = Vec::new();
        for (ray, val) in rays.into_iter().zip(vals) {
            if val.is_zero() {
                let mut ray = ray;
                ray.set_tight(idx);
                keep.push(ray);
            } else if val.is_positive() {
                pos.push((ray, val));
            } else {
                neg.push((ray, val));
            }
        }
        // Adjacent (+,-) pairs spawn a ray on the hyperplane. The adjacency
        // test checks no third surviving generator is tight on everything the
        // pair shares.
        let mut newcomers: Vec<Ray> = Vec::new();
        for (pi, (p, pv)) in pos.iter().enumerate() {
            for (ni, (n, nv)) in neg.iter().enumerate() {
                let inter = tight_intersection(p, n);
                let adjacent = pos
                    .iter()
                    .enumerate()
                    .filter(|(oi, _)| *oi != pi)
                    .map(|(_, (r, _))| r)
                    .chain(
                        neg.iter()
                            .enumerate()
                            .filter(|(oi, _)| *oi != ni)
                            .map(|(_, (r, _))| r),
                    )
                    .chain(keep.iter())
                    .all(|r| !tight_superset(&r.tight, &inter));
                if !adjacent {
                    continue;
                }
                // r' = pv·n − nv·p (nv < 0, so both terms point to the + side)
                let mut v: Vec<Q> =
                    p.v.iter()
                        .zip(&n.v)
                        .map(|(pc, nc)| pv * nc - nv * pc)
                        .collect();
                normalize_primitive(&mut v);
                let mut ray = Ray { v, tight: inter };
                ray.set_tight(idx);
                newcomers.push(ray);
            }
        }
        for (ray, _) in pos {
            keep.push(ray);
        }
        keep.extend(newcomers);
        rays = keep;
        if rays.len() > guard {
            return Err(Error::SizeGuard(format!(
                "double description exceeded {guard} rays"
            )));
        }
    }
    let mut out: Vec<Vec<Q>> = rays.into_iter().map(|r| r.v).collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// All vertices of a bounded H-polytope. Errors if a recession direction is
/// found (the input was unbounded).
pub fn vertices(p: &HPolytope, guard: usize) -> Result<Vec<Vec<Q>>> {
    // Parametrize the equality-affine subspace as x = x0 + N t.
    let (x0, basis) = if p.equalities.is_empty() {
        let id: Vec<Vec<Q>> = (0..p.dim)
            .map(|i| {
                (0..p.dim)
                    .map(|j| if i == j { Q::one() } else { Q::zero() })
                    .collect()
            })
            .collect();
        (vec![Q::zero(); p.dim], id)
    } else {
        let m: Vec<Vec<Q>> = p.equalities.iter().map(|(c, _)| c.clone()).collect();
        let b: Vec<Q> = p.equalities.iter().map(|(_, r)| r.clone()).collect();
        let Some(x0) = solve_particular(&m, &b) else {
            return Ok(Vec::new()); // inconsistent equalities: empty polytope
        };
        (x0, nullspace(&m))
    };
    let k = basis.len();
    if k == 0 {
        // Zero-dimensional affine subspace: the single candidate point.
        let feasible = p.inequalities.iter().all(|(c, r)| dot(c, &x0) <= *r)
            && (!p.nonneg || x0.iter().all(|v| !v.is_negative()));
        return Ok(if feasible { vec![x0] } else { Vec::new() });
    }
    // Inequalities in t-space, as cone rows (−aᵀN, β) meaning a·x ≤ β.
    let mut rows: Vec<Vec<Q>> = Vec::new();
    let mut push_ineq = |coeffs: &[Q], rhs: &Q| {
        let beta = rhs.clone() - dot(coeffs, &x0);
        let mut row: Vec<Q> = basis.iter().map(|n| -dot(coeffs, n)).collect();
        row.push(beta);
        rows.push(row);
    };
    for (c, r) in &p.inequalities {
        push_ineq(c, r);
    }
    if p.nonneg {
        for i in 0..p.dim {
            let mut c = vec![Q::zero(); p.dim];
            c[i] = -Q::one();
            push_ineq(&c, &Q::zero());
        }
    }
    // Homogenizing row w ≥ 0.
    let mut wrow = vec![Q::zero(); k];
    wrow.push(Q::one());
    rows.push(wrow);

    let rays = cone_rays(&rows, guard)?;
    let mut verts = Vec::new();
    for ray in rays {
        let w = &ray[k];
        if w.is_zero() {
            // A recession direction: tolerate the zero ray, reject others.
            if ray.iter().any(|v| !v.is_zero()) {
                return Err(Error::MalformedSystem("polytope is unbounded".into()));
            }
            continue;
        }
        let t: Vec<Q> = ray[..k].iter().map(|v| v / w).collect();
        let mut x = x0.clone();
        for (j, tj) in t.iter().enumerate() {
            for (xi, nij) in x.iter_mut().zip(&basis[j]) {
                *xi += tj * nij;
            }
        }
        verts.push(x);
    }
    verts.sort();
    verts.dedup();
    Ok(verts)
}

// ---------------------------------------------------------------------------
// Facets of a V-polytope via the polar dual.
// ---------------------------------------------------------------------------

/// An inequality `coeffs · x ≤ bound` over ambient coordinates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinearInequality {
    pub coeffs: Vec<Q>,
    pub bound: Q,
}

impl LinearInequality {
    pub fn satisfied_by(&self, x: &[Q]) -> bool {
        dot(&self.coeffs, x) <= self.bound
    }

    pub fn tight_at(&self, x: &[Q]) -> bool {
        dot(&self.coeffs, x) == self.bound
    }

    pub fn value(&self, x: &[Q]) -> Q {
        dot(&self.coeffs, x)
    }
}

/// The affine hull of a point set, as an equality system used to put facet
/// inequalities into a canonical form.
#[derive(Debug, Clone)]
pub struct AffineHull {
    /// RREF rows (coeffs, rhs) with the pivot coordinate leading each row.
    pub equalities: Vec<(Vec<Q>, Q)>,
    pivots: Vec<usize>,
    pub dim: usize,
}

impl AffineHull {
    pub fn of_points(points: &[Vec<Q>]) -> Self {
        assert!(!points.is_empty());
        let d = points[0].len();
        let v0 = &points[0];
        let diffs: Vec<Vec<Q>> = points[1..]
            .iter()
            .map(|v| v.iter().zip(v0).map(|(a, b)| a - b).collect())
            .collect();
        let hull_dim = if diffs.is_empty() {
            0
        } else {
            let mut m = diffs.clone();
            rref(&mut m).len()
        };
        // Equalities: z with z ⊥ every difference; rhs = z · v0.
        let normals = if diffs.is_empty() || hull_dim == 0 {
            (0..d)
                .map(|i| {
                    let mut z = vec![Q::zero(); d];
                    z[i] = Q::one();
                    z
                })
                .collect()
        } else {
            nullspace(&diffs)
        };
        let mut eqs: Vec<Vec<Q>> = normals
            .into_iter()
            .map(|z| {
                let rhs = dot(&z, v0);
                let mut row = z;
                row.push(rhs);
                row
            })
            .collect();
        let pivots = rref(&mut eqs);
        let equalities: Vec<(Vec<Q>, Q)> = eqs
            .into_iter()
            .map(|mut row| {
                let rhs = row.pop().expect("augmented row");
                (row, rhs)
            })
            .collect();
        Self {
            equalities,
            pivots,
            dim: hull_dim,
        }
    }

    /// Reduces an inequality modulo the hull equalities (eliminating pivot
    /// coordinates) and scales it to primitive integer form. Inequalities
    /// that agree on the hull become identical vectors.
    pub fn canonicalize(&self, ineq: &LinearInequality) -> LinearInequality {
        let mut coeffs = ineq.coeffs.clone();
        let mut bound = ineq.bound.clone();
        for ((row, rhs), &p) in self.equalities.iter().zip(&self.pivots) {
            if p >= coeffs.len() {
                continue;
            }
            let f = coeffs[p].clone();
            if f.is_zero() {
                continue;
            }
            for (c, rc) in coeffs.iter_mut().zip(row) {
                let delta = &f * rc;
                *c -= delta;
            }
            bound -= &f * rhs;
        }
        let mut all = coeffs;
        all.push(bound);
        normalize_primitive(&mut all);
        let bound = all.pop().expect("bound present");
        LinearInequality { coeffs: all, bound }
    }
}

/// Facets of `conv(points)`, canonicalized against the affine hull.
/// Every returned inequality is valid on all points and tight on a set of
/// points spanning a facet of the hull.
pub fn facets_of_vertices(
    points: &[Vec<Q>],
    guard: usize,
) -> Result<(Vec<LinearInequality>, AffineHull)> {
    if points.is_empty() {
        return Err(Error::MalformedSystem("no points".into()));
    }
    let d = points[0].len();
    let hull = AffineHull::of_points(points);
    let k = hull.dim;
    if k == 0 {
        return Ok((Vec::new(), hull));
    }
    let v0 = &points[0];
    let diffs: Vec<Vec<Q>> = points
        .iter()
        .map(|v| v.iter().zip(v0).map(|(a, b)| a - b).collect())
        .collect();
    // Row basis B (k × d) of the hull directions.
    let mut basis = diffs.clone();
    let _ = rref(&mut basis);
    // Left inverse L = (B Bᵀ)⁻¹ B, so coordinates c(x) = L (x − v0).
    let bbt: Vec<Vec<Q>> = basis
        .iter()
        .map(|r1| basis.iter().map(|r2| dot(r1, r2)).collect())
        .collect();
    let bbt_inv =
        invert(&bbt).ok_or_else(|| Error::MalformedSystem("degenerate hull basis".into()))?;
    let l_mat: Vec<Vec<Q>> = bbt_inv
        .iter()
        .map(|row| {
            (0..d)
                .map(|c| {
                    row.iter()
                        .zip(&basis)
                        .map(|(f, b)| f * &b[c])
                        .fold(Q::zero(), |a, v| a + v)
                })
                .collect()
        })
        .collect();
    let coords: Vec<Vec<Q>> = diffs
        .iter()
        .map(|diff| l_mat.iter().map(|row| dot(row, diff)).collect())
        .collect();
    // Centroid shift so the origin is interior.
    let nq = Q::from_integer(num::BigInt::from(points.len() as i64));
    let centroid: Vec<Q> = (0..k)
        .map(|j| {
            coords
                .iter()
                .map(|c| c[j].clone())
                .fold(Q::zero(), |a, v| a + v)
                / nq.clone()
        })
        .collect();
    // Polar polytope {y : (c_i − centroid) · y ≤ 1}.
    let polar = HPolytope {
        dim: k,
        equalities: Vec::new(),
        inequalities: coords
            .iter()
            .map(|c| {
                let shifted: Vec<Q> = c.iter().zip(&centroid).map(|(a, b)| a - b).collect();
                (shifted, Q::one())
            })
            .collect(),
        nonneg: false,
    };
    let polar_vertices = vertices(&polar, guard)?;
    let mut facets = Vec::new();
    for y in polar_vertices {
        // y·c(x) ≤ 1 + y·centroid  ⇒  (Lᵀy)·x ≤ 1 + y·centroid + (Lᵀy)·v0
        let a: Vec<Q> = (0..d)
            .map(|c| {
                y.iter()
                    .zip(&l_mat)
                    .map(|(f, row)| f * &row[c])
                    .fold(Q::zero(), |acc, v| acc + v)
            })
            .collect();
        let bound = Q::one() + dot(&y, &centroid) + dot(&a, v0);
        facets.push(hull.canonicalize(&LinearInequality { coeffs: a, bound }));
    }
    facets.sort();
    facets.dedup();
    Ok((facets, hull))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{q, qi};

    fn qv(vals: &[i64]) -> Vec<Q> {
        vals.iter().map(|&v| qi(v)).collect()
    }

    #[test]
    fn unit_square_vertices() {
        let p = HPolytope {
            dim: 2,
            equalities: vec![],
            inequalities: vec![(qv(&[1, 0]), Q::one()), (qv(&[0, 1]), Q::one())],
            nonneg: true,
        };
        let v = vertices(&p, 10_000).unwrap();
        assert_eq!(v.len(), 4);
        assert!(v.contains(&qv(&[0, 0])));
        assert!(v.contains(&qv(&[1, 1])));
    }

    #[test]
    fn simplex_vertices_with_equality() {
        let p = HPolytope {
            dim: 3,
            equalities: vec![(qv(&[1, 1, 1]), Q::one())],
            inequalities: vec![],
            nonneg: true,
        };
        let v = vertices(&p, 10_000).unwrap();
        assert_eq!(v.len(), 3);
        assert!(v.contains(&qv(&[1, 0, 0])));
    }

    #[test]
    fn empty_polytope() {
        let p = HPolytope {
            dim: 2,
            equalities: vec![(qv(&[1, 1]), -Q::one())],
            inequalities: vec![],
            nonneg: true,
        };
        assert!(vertices(&p, 10_000).unwrap().is_empty());
    }

    #[test]
    fn unbounded_is_an_error() {
        let p = HPolytope {
            dim: 2,
            equalities: vec![],
            inequalities: vec![],
            nonneg: true,
        };
        assert!(vertices(&p, 10_000).is_err());
    }

    #[test]
    fn cube_vertices_from_intervals() {
        // [-1, 1]^3 without the nonneg flag.
        let mut ineqs = Vec::new();
        for i in 0..3 {
            for s in [1i64, -1] {
                let mut c = vec![Q::zero(); 3];
                c[i] = qi(s);
                ineqs.push((c, Q::one()));
            }
        }
        let p = HPolytope {
            dim: 3,
            equalities: vec![],
            inequalities: ineqs,
            nonneg: false,
        };
        let v = vertices(&p, 10_000).unwrap();
        assert_eq!(v.len(), 8);
    }

    #[test]
    fn cross_polytope_facets() {
        // Octahedron vertices ±e_i in R^3: 8 facets ±x±y±z ≤ 1.
        let mut pts = Vec::new();
        for i in 0..3 {
            for s in [1i64, -1] {
                let mut v = vec![Q::zero(); 3];
                v[i] = qi(s);
                pts.push(v);
            }
        }
        let (facets, hull) = facets_of_vertices(&pts, 10_000).unwrap();
        assert_eq!(hull.dim, 3);
        assert_eq!(facets.len(), 8);
        for f in &facets {
            assert!(pts.iter().all(|p| f.satisfied_by(p)));
            let tight = pts.iter().filter(|p| f.tight_at(p)).count();
            assert_eq!(tight, 3);
        }
    }

    #[test]
    fn square_in_3d_canonicalizes_modulo_hull() {
        // A square living in the z = 2 plane.
        let pts = vec![
            qv(&[0, 0, 2]),
            qv(&[1, 0, 2]),
            qv(&[0, 1, 2]),
            qv(&[1, 1, 2]),
        ];
        let (facets, hull) = facets_of_vertices(&pts, 10_000).unwrap();
        assert_eq!(hull.dim, 2);
        assert_eq!(facets.len(), 4);
        // x ≤ 1 written with an arbitrary z-multiple must canonicalize to the
        // same representative as plain x ≤ 1.
        let messy = LinearInequality {
            coeffs: vec![Q::one(), Q::zero(), q(5, 3)],
            bound: Q::one() + q(10, 3),
        };
        let clean = LinearInequality {
            coeffs: qv(&[1, 0, 0]),
            bound: Q::one(),
        };
        assert_eq!(hull.canonicalize(&messy), hull.canonicalize(&clean));
        assert!(facets.contains(&hull.canonicalize(&clean)));
    }

    #[test]
    fn single_point_has_no_facets() {
        let pts = vec![qv(&[3, 4])];
        let (facets, hull) = facets_of_vertices(&pts, 10_000).unwrap();
        assert_eq!(hull.dim, 0);
        assert!(facets.is_empty());
    }

    #[test]
    fn segment_facets_are_endpoints() {
        let pts = vec![qv(&[0, 0]), qv(&[2, 2])];
        let (facets, _) = facets_of_vertices(&pts, 10_000).unwrap();
        assert_eq!(facets.len(), 2);
        for f in &facets {
            assert!(pts.iter().all(|p| f.satisfied_by(p)));
        }
    }

    #[test]
    fn nullspace_and_solve() {
        let m = vec![qv(&[1, 1, 0]), qv(&[0, 1, 1])];
        let ns = nullspace(&m);
        assert_eq!(ns.len(), 1);
        for row in &m {
            assert!(dot(row, &ns[0]).is_zero());
        }
        let x = solve_particular(&m, &[Q::one(), Q::zero()]).unwrap();
        assert_eq!(dot(&m[0], &x), Q::one());
        assert_eq!(dot(&m[1], &x), Q::zero());
        assert!(solve_particular(&[qv(&[0, 0, 0])], &[Q::one()]).is_none());
    }
}
