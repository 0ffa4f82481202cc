//! Affine toric log charts in characteristic p: a prime p, a pair of pointed
//! affine monoids Q ⊆ P in Z^n, and log coordinates m_1..m_r whose images form
//! a basis of F_p ⊗ (P^gp/Q^gp).
//!
//! Derived data: the Frobenius-kernel subgroup H^gp = pP^gp + Q^gp, its monoid
//! H = P ∩ H^gp, the coordinate map c: P^gp → F_p^r with c(u) = 0 iff u ∈ H^gp,
//! coset representatives of P^gp/H^gp, and the minimal elements of each coset
//! inside P.

use crate::error::{LcError, Result};
use crate::fp::{Fp, FpMat};
use crate::lattice::{positive_grading, FiniteQuotient, Lattice, LatticePoint};
use std::collections::HashMap;
use std::sync::Mutex;

/// Finitely generated submonoid of Z^n given by its generators.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AffineMonoid {
    pub ambient: usize,
    pub gens: Vec<LatticePoint>,
}

impl AffineMonoid {
    pub fn new(ambient: usize, gens: Vec<LatticePoint>) -> Result<AffineMonoid> {
        for g in &gens {
            if g.dim() != ambient {
                return Err(LcError::DimensionMismatch(format!(
                    "generator {} in ambient rank {}",
                    g, ambient
                )));
            }
        }
        // zero generators add nothing
        let gens: Vec<LatticePoint> = gens.into_iter().filter(|g| !g.is_zero()).collect();
        Ok(AffineMonoid { ambient, gens })
    }

    pub fn is_zero_monoid(&self) -> bool {
        self.gens.is_empty()
    }

    /// Group generated by the monoid, in canonical HNF basis.
    pub fn group_lattice(&self) -> Lattice {
        Lattice::from_generators(&self.gens, self.ambient)
    }
}

fn contains_rec(
    gens: &[LatticePoint],
    grading: &[i64],
    u: &LatticePoint,
    memo: &mut HashMap<LatticePoint, bool>,
) -> bool {
    if u.is_zero() {
        return true;
    }
    let g = u.dot(grading);
    if g <= 0 {
        return false;
    }
    if let Some(&b) = memo.get(u) {
        return b;
    }
    let mut found = false;
    for gen in gens {
        if gen.dot(grading) <= g && contains_rec(gens, grading, &u.sub(gen), memo) {
            found = true;
            break;
        }
    }
    memo.insert(u.clone(), found);
    found
}

/// Decide membership of `u` in the monoid by bounded search along a strictly
/// positive grading functional. Errors when no such functional exists.
pub fn monoid_contains(m: &AffineMonoid, u: &LatticePoint) -> Result<bool> {
    if u.dim() != m.ambient {
        return Err(LcError::DimensionMismatch(format!(
            "point {} in ambient rank {}",
            u, m.ambient
        )));
    }
    let grading = positive_grading(&m.gens, m.ambient).ok_or_else(|| {
        LcError::NotPointed(format!("monoid with generators {:?}", m.gens))
    })?;
    let mut memo = HashMap::new();
    Ok(contains_rec(&m.gens, &grading, u, &mut memo))
}

/// Minimal elements of one coset of H^gp inside P, under the partial order
/// u ≤ v iff v − u ∈ P.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetReport {
    pub rep: LatticePoint,
    pub minimal_elements: Vec<LatticePoint>,
}

#[derive(Clone, Debug)]
pub struct FrobeniusData {
    pub hgp_basis: Vec<LatticePoint>,
    pub cosets: Vec<CosetReport>,
}

/// A validated chart.
#[derive(Debug)]
pub struct Chart {
    pub p: u32,
    pub ambient: usize,
    pub monoid_p: AffineMonoid,
    pub monoid_q: AffineMonoid,
    pub log_coords: Vec<LatticePoint>,
    pgp: Lattice,
    qgp: Lattice,
    hgp: Lattice,
    r: usize,
    grading: Vec<i64>,
    /// columns [m_1..m_r | q-basis] in P^gp coordinates mod p, for solving c(u)
    coord_mat: FpMat,
    memo_p: Mutex<HashMap<LatticePoint, bool>>,
    memo_c: Mutex<HashMap<LatticePoint, Vec<Fp>>>,
}

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl Chart {
    pub fn new(
        p: u32,
        ambient: usize,
        p_gens: Vec<LatticePoint>,
        q_gens: Vec<LatticePoint>,
        log_coords: Vec<LatticePoint>,
    ) -> Result<Chart> {
        if !is_prime(p) {
            return Err(LcError::InvalidChart(format!("p = {} is not prime", p)));
        }
        if ambient == 0 {
            return Err(LcError::InvalidChart("ambient rank must be positive".into()));
        }
        let monoid_p = AffineMonoid::new(ambient, p_gens)?;
        let monoid_q = AffineMonoid::new(ambient, q_gens)?;
        let grading = positive_grading(&monoid_p.gens, ambient).ok_or_else(|| {
            LcError::NotPointed(format!(
                "P with generators {:?} admits no strictly positive grading",
                monoid_p.gens
            ))
        })?;
        // Q must sit inside P
        {
            let mut memo = HashMap::new();
            for q in &monoid_q.gens {
                if !contains_rec(&monoid_p.gens, &grading, q, &mut memo) {
                    return Err(LcError::InvalidChart(format!(
                        "Q is not inside P: generator {} is outside P",
                        q
                    )));
                }
            }
        }
        let pgp = monoid_p.group_lattice();
        let qgp = monoid_q.group_lattice();
        let d = pgp.rank();
        // Q^gp generators in P^gp coordinates
        let mut q_coords: Vec<Vec<i64>> = Vec::new();
        for q in &qgp.basis {
            let c = pgp.coords_of(q).ok_or_else(|| {
                LcError::InvalidChart(format!("Q^gp basis vector {} outside P^gp", q))
            })?;
            q_coords.push(c);
        }
        // torsion of P^gp/Q^gp must be prime to p: rank over F_p equals rank over Z
        let q_rank_z = qgp.rank();
        let qbar = {
            let rows: Vec<Vec<i64>> = (0..d)
                .map(|i| q_coords.iter().map(|c| c[i]).collect())
                .collect();
            FpMat::from_rows(&rows, p)
        };
        if qbar.rank() != q_rank_z {
            return Err(LcError::InvalidChart(
                "torsion of P^gp/Q^gp divisible by p".into(),
            ));
        }
        let r = d - qbar.rank();
        if log_coords.len() != r {
            return Err(LcError::InvalidChart(format!(
                "log_coords must have exactly {} entries (relative dimension), got {}",
                r,
                log_coords.len()
            )));
        }
        // coordinate matrix [m-bar | q-bar] over F_p, in P^gp coordinates
        let mut m_coords: Vec<Vec<i64>> = Vec::new();
        for m in &log_coords {
            if m.dim() != ambient {
                return Err(LcError::DimensionMismatch(format!("log coordinate {}", m)));
            }
            let c = pgp.coords_of(m).ok_or_else(|| {
                LcError::InvalidChart(format!("log coordinate {} outside P^gp", m))
            })?;
            m_coords.push(c);
        }
        let coord_mat = {
            let rows: Vec<Vec<i64>> = (0..d)
                .map(|i| {
                    m_coords
                        .iter()
                        .map(|c| c[i])
                        .chain(q_coords.iter().map(|c| c[i]))
                        .collect()
                })
                .collect();
            FpMat::from_rows(&rows, p)
        };
        // images of log_coords must be a basis of F_p ⊗ (P^gp/Q^gp):
        // independence modulo span(qbar) and spanning together with qbar
        if coord_mat.rank() != r + q_rank_z || coord_mat.rank() != d {
            return Err(LcError::InvalidChart(
                "log_coords do not form a basis of F_p tensor (P^gp/Q^gp)".into(),
            ));
        }
        let hgp = pgp.scaled(p as i64).sum(&qgp);
        // sanity: index of H^gp in P^gp is p^r
        {
            let mut h_in_pgp: Vec<LatticePoint> = Vec::new();
            for b in &hgp.basis {
                let c = pgp
                    .coords_of(b)
                    .ok_or_else(|| LcError::InvalidChart("H^gp outside P^gp".into()))?;
                h_in_pgp.push(LatticePoint(c));
            }
            let q = FiniteQuotient::new(&h_in_pgp, d)
                .map_err(|_| LcError::InvalidChart("H^gp has infinite index in P^gp".into()))?;
            let expect = (p as u64).pow(r as u32);
            if q.index() != expect {
                return Err(LcError::InvalidChart(format!(
                    "index of H^gp in P^gp is {} instead of p^r = {}",
                    q.index(),
                    expect
                )));
            }
        }
        Ok(Chart {
            p,
            ambient,
            monoid_p,
            monoid_q,
            log_coords,
            pgp,
            qgp,
            hgp,
            r,
            grading,
            coord_mat,
            memo_p: Mutex::new(HashMap::new()),
            memo_c: Mutex::new(HashMap::new()),
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn pgp(&self) -> &Lattice {
        &self.pgp
    }

    pub fn qgp(&self) -> &Lattice {
        &self.qgp
    }

    pub fn hgp(&self) -> &Lattice {
        &self.hgp
    }

    pub fn grading(&self) -> &[i64] {
        &self.grading
    }

    /// Membership in the monoid P (memoized bounded search).
    pub fn contains_p(&self, u: &LatticePoint) -> bool {
        assert_eq!(u.dim(), self.ambient);
        let mut memo = self.memo_p.lock().unwrap();
        contains_rec(&self.monoid_p.gens, &self.grading, u, &mut memo)
    }

    /// Membership in the twist monoid H = P ∩ H^gp.
    pub fn contains_h(&self, u: &LatticePoint) -> bool {
        self.hgp.contains(u) && self.contains_p(u)
    }

    pub fn in_pgp(&self, u: &LatticePoint) -> bool {
        self.pgp.contains(u)
    }

    pub fn in_hgp(&self, u: &LatticePoint) -> bool {
        self.hgp.contains(u)
    }

    /// Coordinates of u in F_p ⊗ (P^gp/Q^gp) with respect to the log-coordinate
    /// basis. Zero exactly when u ∈ H^gp.
    pub fn coords_modp(&self, u: &LatticePoint) -> Result<Vec<Fp>> {
        if u.dim() != self.ambient {
            return Err(LcError::DimensionMismatch(format!("point {}", u)));
        }
        {
            let memo = self.memo_c.lock().unwrap();
            if let Some(c) = memo.get(u) {
                return Ok(c.clone());
            }
        }
        let x = self
            .pgp
            .coords_of(u)
            .ok_or_else(|| LcError::NotInGroup(format!("{} is outside P^gp", u)))?;
        let rhs: Vec<Fp> = x.iter().map(|&v| Fp::new(v, self.p)).collect();
        let sol = self
            .coord_mat
            .solve(&rhs)
            .expect("coordinate system is spanning by validation");
        let c: Vec<Fp> = sol[..self.r].to_vec();
        self.memo_c.lock().unwrap().insert(u.clone(), c.clone());
        Ok(c)
    }

    /// Eigenvalue vector of the monomial e^u e_s: c(u + s).
    pub fn eigen(&self, u: &LatticePoint, s: &LatticePoint) -> Result<Vec<Fp>> {
        self.coords_modp(&u.add(s))
    }

    /// All points of P with coordinate-sum size at most `bound`, in
    /// lexicographic order.
    pub fn window(&self, bound: i64) -> Vec<LatticePoint> {
        let mut out = Vec::new();
        let n = self.ambient;
        let mut cur = vec![-bound; n];
        loop {
            let pt = LatticePoint(cur.clone());
            if pt.norm1() <= bound && self.contains_p(&pt) {
                out.push(pt);
            }
            // advance odometer
            let mut i = n;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < bound {
                    cur[i] += 1;
                    for c in cur.iter_mut().skip(i + 1) {
                        *c = -bound;
                    }
                    break;
                }
            }
        }
    }

    /// Points of the twist monoid H within the window.
    pub fn twist_window(&self, bound: i64) -> Vec<LatticePoint> {
        self.window(bound)
            .into_iter()
            .filter(|u| self.hgp.contains(u))
            .collect()
    }

    /// Representatives of the p^r cosets of H^gp in P^gp, deterministic order.
    /// For Q = 0 these are the sums Σ I_k m_k over I ∈ {0..p−1}^r in
    /// lexicographic order of I; otherwise the canonical residues of the
    /// HNF fundamental domain.
    pub fn coset_reps(&self) -> Vec<LatticePoint> {
        if self.monoid_q.is_zero_monoid() {
            let mut out = Vec::new();
            let total = (self.p as u64).pow(self.r as u32);
            for idx in 0..total {
                let mut rest = idx;
                let mut pt = LatticePoint::zero(self.ambient);
                // lexicographic: first coordinate most significant
                for k in (0..self.r).rev() {
                    let ik = (rest % self.p as u64) as i64;
                    rest /= self.p as u64;
                    pt = pt.add(&self.log_coords[k].scale(ik));
                }
                out.push(pt);
            }
            out
        } else {
            let d = self.pgp.rank();
            let h_in_pgp: Vec<LatticePoint> = self
                .hgp
                .basis
                .iter()
                .map(|b| LatticePoint(self.pgp.coords_of(b).expect("H^gp inside P^gp")))
                .collect();
            let q = FiniteQuotient::new(&h_in_pgp, d).expect("finite quotient by validation");
            q.residues()
                .into_iter()
                .map(|x| self.pgp.point_from_coords(&x))
                .collect()
        }
    }

    /// H^gp basis, coset representatives, and the minimal elements of each
    /// coset inside P.
    ///
    /// Minimality bound: a minimal element u of (rep + H^gp) ∩ P has
    /// grading(u) ≤ p · Σ_i grading(g_i) — otherwise some generator occurs
    /// with multiplicity ≥ p and subtracting p·g_i ∈ H exhibits a smaller
    /// coset point. Enumeration within this bound is exhaustive.
    pub fn frobenius_data(&self) -> FrobeniusData {
        let reps = self.coset_reps();
        let cap: i64 = (self.p as i64)
            * self
                .monoid_p
                .gens
                .iter()
                .map(|g| g.dot(&self.grading))
                .sum::<i64>();
        // enumerate P up to the grading cap by closing generator sums
        let mut points: std::collections::BTreeSet<LatticePoint> = Default::default();
        let mut frontier = vec![LatticePoint::zero(self.ambient)];
        points.insert(frontier[0].clone());
        while let Some(u) = frontier.pop() {
            for g in &self.monoid_p.gens {
                let v = u.add(g);
                if v.dot(&self.grading) <= cap && points.insert(v.clone()) {
                    frontier.push(v);
                }
            }
        }
        let cosets = reps
            .iter()
            .map(|rep| {
                let in_coset: Vec<&LatticePoint> = points
                    .iter()
                    .filter(|u| self.hgp.contains(&u.sub(rep)))
                    .collect();
                let mut minimal: Vec<LatticePoint> = Vec::new();
                for &u in &in_coset {
                    let dominated = in_coset.iter().any(|&v| {
                        v != u
                            && v.dot(&self.grading) < u.dot(&self.grading)
                            && self.contains_p(&u.sub(v))
                    });
                    if !dominated {
                        minimal.push(u.clone());
                    }
                }
                minimal.sort();
                CosetReport {
                    rep: rep.clone(),
                    minimal_elements: minimal,
                }
            })
            .collect();
        FrobeniusData {
            hgp_basis: self.hgp.basis.clone(),
            cosets,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(v: &[i64]) -> LatticePoint {
        LatticePoint(v.to_vec())
    }

    pub fn chart_line(p: u32) -> Chart {
        Chart::new(p, 1, vec![lp(&[1])], vec![], vec![lp(&[1])]).unwrap()
    }

    pub fn chart_cone(p: u32) -> Chart {
        Chart::new(
            p,
            2,
            vec![lp(&[1, 1]), lp(&[1, -1]), lp(&[1, 0])],
            vec![],
            vec![lp(&[1, 0]), lp(&[0, 1])],
        )
        .unwrap()
    }

    pub fn chart_relative(p: u32) -> Chart {
        // P = N^2, Q = <e1>, one log coordinate e2
        Chart::new(
            p,
            2,
            vec![lp(&[1, 0]), lp(&[0, 1])],
            vec![lp(&[1, 0])],
            vec![lp(&[0, 1])],
        )
        .unwrap()
    }

    #[test]
    fn membership_examples() {
        let m = AffineMonoid::new(2, vec![lp(&[1, 1]), lp(&[1, -1]), lp(&[1, 0])]).unwrap();
        assert!(monoid_contains(&m, &lp(&[2, 0])).unwrap());
        assert!(!monoid_contains(&m, &lp(&[0, 1])).unwrap());
        // closed form {(m,n) : m >= |n|} on a box
        for a in -10..=10i64 {
            for b in -10..=10i64 {
                let expect = a >= b.abs();
                assert_eq!(
                    monoid_contains(&m, &lp(&[a, b])).unwrap(),
                    expect,
                    "({}, {})",
                    a,
                    b
                );
            }
        }
        let line = AffineMonoid::new(1, vec![lp(&[1])]).unwrap();
        assert!(monoid_contains(&line, &lp(&[7])).unwrap());
        assert!(!monoid_contains(&line, &lp(&[-1])).unwrap());
    }

    #[test]
    fn non_pointed_rejected() {
        let m = AffineMonoid::new(1, vec![lp(&[1]), lp(&[-1])]).unwrap();
        assert!(matches!(
            monoid_contains(&m, &lp(&[0])),
            Err(LcError::NotPointed(_))
        ));
        assert!(Chart::new(2, 1, vec![lp(&[1]), lp(&[-1])], vec![], vec![lp(&[1])]).is_err());
    }

    #[test]
    fn chart_validation_errors() {
        // torsion divisible by p: P = <1>, Q = <2>, p = 2
        let e = Chart::new(2, 1, vec![lp(&[1])], vec![lp(&[2])], vec![]).unwrap_err();
        assert!(format!("{}", e).contains("torsion"), "{}", e);
        // same data at p = 3 is fine (torsion Z/2 prime to 3, r = 0)
        assert!(Chart::new(3, 1, vec![lp(&[1])], vec![lp(&[2])], vec![]).is_ok());
        // log_coords not a basis at p = 2: image of 2 is zero
        let e = Chart::new(2, 1, vec![lp(&[1])], vec![], vec![lp(&[2])]).unwrap_err();
        assert!(format!("{}", e).contains("basis"), "{}", e);
        // same at p = 3: image of 2 is invertible, valid
        assert!(Chart::new(3, 1, vec![lp(&[1])], vec![], vec![lp(&[2])]).is_ok());
        // Q not inside P
        let e = Chart::new(3, 1, vec![lp(&[1])], vec![lp(&[-1])], vec![lp(&[1])]).unwrap_err();
        assert!(format!("{}", e).contains("not inside"), "{}", e);
        // p not prime
        assert!(Chart::new(4, 1, vec![lp(&[1])], vec![], vec![lp(&[1])]).is_err());
    }

    #[test]
    fn coords_line() {
        let c = chart_line(3);
        assert_eq!(c.r(), 1);
        assert_eq!(c.coords_modp(&lp(&[5])).unwrap()[0].val(), 2);
        assert_eq!(c.coords_modp(&lp(&[6])).unwrap()[0].val(), 0);
        assert!(c.in_hgp(&lp(&[6])));
        assert!(!c.in_hgp(&lp(&[5])));
        assert!(c.contains_h(&lp(&[6])));
        assert!(!c.contains_h(&lp(&[-3])));
    }

    #[test]
    fn coords_vanish_exactly_on_hgp() {
        for chart in [chart_cone(2), chart_cone(3), chart_relative(3)] {
            for a in -4..=4i64 {
                for b in -4..=4i64 {
                    let u = lp(&[a, b]);
                    let c = chart.coords_modp(&u).unwrap();
                    let zero = c.iter().all(|x| x.is_zero());
                    assert_eq!(zero, chart.in_hgp(&u), "{} at p={}", u, chart.p);
                }
            }
        }
    }

    #[test]
    fn relative_chart_coords() {
        // c((a,b)) = b mod p
        let c = chart_relative(3);
        assert_eq!(c.r(), 1);
        assert_eq!(c.coords_modp(&lp(&[2, 4])).unwrap()[0].val(), 1);
        assert_eq!(c.coords_modp(&lp(&[5, 3])).unwrap()[0].val(), 0);
    }

    #[test]
    fn coset_reps_line() {
        let c = chart_line(3);
        let reps = c.coset_reps();
        assert_eq!(reps, vec![lp(&[0]), lp(&[1]), lp(&[2])]);
    }

    #[test]
    fn coset_reps_relative() {
        let c = chart_relative(3);
        let reps = c.coset_reps();
        assert_eq!(reps.len(), 3);
        // H^gp = Z x 3Z; canonical residues (0,0),(0,1),(0,2)
        assert_eq!(reps, vec![lp(&[0, 0]), lp(&[0, 1]), lp(&[0, 2])]);
    }

    #[test]
    fn frobenius_minimal_elements_cone_p2() {
        let c = chart_cone(2);
        let fd = c.frobenius_data();
        assert_eq!(fd.cosets.len(), 4);
        let total: usize = fd.cosets.iter().map(|c| c.minimal_elements.len()).sum();
        assert_eq!(total, 6);
        // the coset of (1,1) has exactly the minimal elements (1,1) and (1,-1)
        let coset11 = fd
            .cosets
            .iter()
            .find(|cr| cr.rep == lp(&[1, 1]))
            .expect("coset of (1,1)");
        assert_eq!(
            coset11.minimal_elements,
            vec![lp(&[1, -1]), lp(&[1, 1])]
        );
    }

    #[test]
    fn frobenius_minimal_elements_line() {
        let c = chart_line(3);
        let fd = c.frobenius_data();
        // coset of j has unique minimal element j for 0 <= j < p
        for (j, cr) in fd.cosets.iter().enumerate() {
            assert_eq!(cr.minimal_elements, vec![lp(&[j as i64])]);
        }
    }

    #[test]
    fn window_enumeration() {
        let c = chart_cone(2);
        let w = c.window(3);
        assert!(w.contains(&lp(&[1, 1])));
        assert!(w.contains(&lp(&[2, -1])));
        assert!(!w.iter().any(|u| u.norm1() > 3));
        for u in &w {
            assert!(c.contains_p(u));
        }
        let tw = c.twist_window(3);
        for u in &tw {
            assert!(c.in_hgp(u));
        }
        assert!(tw.contains(&lp(&[0, 0])));
        assert!(tw.contains(&lp(&[1, 1])) == false);
        assert!(tw.contains(&lp(&[2, 0])));
    }
}
