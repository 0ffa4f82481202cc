//! Integer lattice points, column Hermite normal form, and finitely generated
//! subgroups of Z^n with membership, coordinates, and finite quotients.

use crate::error::{LcError, Result};
use std::fmt;

/// A point of Z^n.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn zero(n: usize) -> LatticePoint {
        LatticePoint(vec![0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn add(&self, o: &LatticePoint) -> LatticePoint {
        assert_eq!(self.dim(), o.dim());
        LatticePoint(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &LatticePoint) -> LatticePoint {
        assert_eq!(self.dim(), o.dim());
        LatticePoint(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|a| -a).collect())
    }

    pub fn scale(&self, s: i64) -> LatticePoint {
        LatticePoint(self.0.iter().map(|a| a * s).collect())
    }

    /// Coordinate-sum size used for windows: sum of absolute values.
    pub fn norm1(&self) -> i64 {
        self.0.iter().map(|a| a.abs()).sum()
    }

    pub fn dot(&self, w: &[i64]) -> i64 {
        assert_eq!(self.dim(), w.len());
        self.0.iter().zip(w).map(|(a, b)| a * b).sum()
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", x)?;
        }
        write!(f, "]")
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Column Hermite normal form of the subgroup generated by the given columns.
///
/// Returns the canonical basis: columns with strictly increasing pivot rows,
/// positive pivots, entries of earlier columns reduced into [0, pivot) at each
/// later pivot row, and zeros above each pivot.
pub fn hnf_columns(generators: &[LatticePoint], ambient: usize) -> Vec<LatticePoint> {
    let mut work: Vec<Vec<i128>> = generators
        .iter()
        .filter(|g| !g.is_zero())
        .map(|g| {
            assert_eq!(g.dim(), ambient);
            g.0.iter().map(|&x| x as i128).collect()
        })
        .collect();
    let mut basis: Vec<Vec<i128>> = Vec::new();
    for row in 0..ambient {
        // gcd-eliminate among work columns at this row until at most one is nonzero
        loop {
            let nz: Vec<usize> = (0..work.len()).filter(|&j| work[j][row] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            // pick the column with smallest |entry| and reduce the others by it
            let jmin = *nz
                .iter()
                .min_by_key(|&&j| work[j][row].abs())
                .expect("nonempty");
            let piv = work[jmin][row];
            for &j in &nz {
                if j == jmin {
                    continue;
                }
                let q = div_floor(work[j][row], piv);
                if q != 0 {
                    for i in 0..ambient {
                        let s = work[jmin][i];
                        work[j][i] -= q * s;
                    }
                }
            }
        }
        if let Some(j) = (0..work.len()).find(|&j| work[j][row] != 0) {
            let mut c = work.remove(j);
            if c[row] < 0 {
                for x in c.iter_mut() {
                    *x = -*x;
                }
            }
            // reduce earlier basis columns at this pivot row into [0, pivot)
            let pivot = c[row];
            for b in basis.iter_mut() {
                let q = div_floor(b[row], pivot);
                if q != 0 {
                    for i in 0..ambient {
                        b[i] -= q * c[i];
                    }
                }
            }
            basis.push(c);
        }
    }
    basis
        .into_iter()
        .map(|c| {
            LatticePoint(
                c.into_iter()
                    .map(|x| i64::try_from(x).expect("lattice entry overflow"))
                    .collect(),
            )
        })
        .collect()
}

fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

/// A finitely generated subgroup of Z^n, held in canonical column-HNF basis.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Lattice {
    pub ambient: usize,
    pub basis: Vec<LatticePoint>,
}

impl Lattice {
    pub fn from_generators(gens: &[LatticePoint], ambient: usize) -> Lattice {
        Lattice {
            ambient,
            basis: hnf_columns(gens, ambient),
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    fn pivot_rows(&self) -> Vec<usize> {
        self.basis
            .iter()
            .map(|c| c.0.iter().position(|&x| x != 0).expect("zero basis column"))
            .collect()
    }

    /// Integer coordinates of `u` in the basis, or None when u is outside.
    pub fn coords_of(&self, u: &LatticePoint) -> Option<Vec<i64>> {
        assert_eq!(u.dim(), self.ambient);
        let pivots = self.pivot_rows();
        let mut res: Vec<i128> = u.0.iter().map(|&x| x as i128).collect();
        let mut coords = vec![0i64; self.basis.len()];
        for (j, &pr) in pivots.iter().enumerate() {
            let pivot = self.basis[j].0[pr] as i128;
            if res[pr] % pivot != 0 {
                return None;
            }
            let q = res[pr] / pivot;
            coords[j] = i64::try_from(q).ok()?;
            for i in 0..self.ambient {
                res[i] -= q * self.basis[j].0[i] as i128;
            }
        }
        if res.iter().all(|&x| x == 0) {
            Some(coords)
        } else {
            None
        }
    }

    pub fn contains(&self, u: &LatticePoint) -> bool {
        self.coords_of(u).is_some()
    }

    /// The point with the given basis coordinates.
    pub fn point_from_coords(&self, coords: &[i64]) -> LatticePoint {
        assert_eq!(coords.len(), self.basis.len());
        let mut out = LatticePoint::zero(self.ambient);
        for (c, b) in coords.iter().zip(&self.basis) {
            out = out.add(&b.scale(*c));
        }
        out
    }

    /// Sum of two subgroups.
    pub fn sum(&self, o: &Lattice) -> Lattice {
        assert_eq!(self.ambient, o.ambient);
        let mut gens = self.basis.clone();
        gens.extend(o.basis.iter().cloned());
        Lattice::from_generators(&gens, self.ambient)
    }

    pub fn scaled(&self, s: i64) -> Lattice {
        let gens: Vec<LatticePoint> = self.basis.iter().map(|b| b.scale(s)).collect();
        Lattice::from_generators(&gens, self.ambient)
    }
}

/// Finite quotient Z^d / L for a full-rank sublattice L of Z^d (basis in column HNF).
/// Provides the canonical residue (coordinates reduced into the HNF fundamental
/// domain) and enumeration of all residues.
pub struct FiniteQuotient {
    pub dim: usize,
    basis: Vec<Vec<i64>>, // square, column HNF, pivot at every row
}

impl FiniteQuotient {
    pub fn new(basis_cols: &[LatticePoint], dim: usize) -> Result<FiniteQuotient> {
        let b = hnf_columns(basis_cols, dim);
        if b.len() != dim {
            return Err(LcError::Other(format!(
                "quotient is not finite: sublattice rank {} < {}",
                b.len(),
                dim
            )));
        }
        Ok(FiniteQuotient {
            dim,
            basis: b.into_iter().map(|c| c.0).collect(),
        })
    }

    pub fn index(&self) -> u64 {
        (0..self.dim).map(|i| self.basis[i][i] as u64).product()
    }

    /// Canonical residue of x: each coordinate reduced into [0, pivot) top-down.
    pub fn reduce(&self, x: &[i64]) -> Vec<i64> {
        assert_eq!(x.len(), self.dim);
        let mut r: Vec<i128> = x.iter().map(|&v| v as i128).collect();
        for i in 0..self.dim {
            let pivot = self.basis[i][i] as i128;
            let q = div_floor(r[i], pivot);
            if q != 0 {
                for k in 0..self.dim {
                    r[k] -= q * self.basis[i][k] as i128;
                }
            }
        }
        r.into_iter().map(|v| v as i64).collect()
    }

    /// All canonical residues in lexicographic order of the reduced coordinates.
    pub fn residues(&self) -> Vec<Vec<i64>> {
        let mut out = vec![vec![]];
        for i in 0..self.dim {
            let pivot = self.basis[i][i];
            let mut next = Vec::with_capacity(out.len() * pivot as usize);
            for prefix in &out {
                for v in 0..pivot {
                    let mut q = prefix.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            out = next;
        }
        // The box coordinates are not themselves canonical (later rows shift);
        // reduce each to the canonical residue.
        out.into_iter().map(|x| self.reduce(&x)).collect()
    }
}

/// A strictly positive integral grading functional on the generators
/// (`dot(w, g) >= 1` for every generator), found by exact Fourier–Motzkin
/// elimination. `None` means the configuration is not pointed.
pub fn positive_grading(gens: &[LatticePoint], ambient: usize) -> Option<Vec<i64>> {
    if gens.iter().any(|g| g.is_zero()) {
        return None;
    }
    if gens.is_empty() {
        return Some(vec![1; ambient.max(1)]);
    }
    // rows: sum_j a[j] w_j >= rhs
    #[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
    struct Row {
        a: Vec<i128>,
        rhs: i128,
    }
    fn normalize(mut r: Row) -> Row {
        let mut g = r.rhs.abs();
        for &x in &r.a {
            g = gcd(g, x);
        }
        if g > 1 {
            for x in r.a.iter_mut() {
                *x /= g;
            }
            r.rhs /= g;
        }
        r
    }
    let mut rows: Vec<Row> = gens
        .iter()
        .map(|g| {
            normalize(Row {
                a: g.0.iter().map(|&x| x as i128).collect(),
                rhs: 1,
            })
        })
        .collect();
    // eliminate variables from the last to the first, recording bound rows
    let mut recorded: Vec<(Vec<Row>, Vec<Row>)> = Vec::new(); // (lower, upper) per var, in elimination order
    for v in (0..ambient).rev() {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut keep = Vec::new();
        for r in rows {
            match r.a[v].cmp(&0) {
                std::cmp::Ordering::Greater => lower.push(r),
                std::cmp::Ordering::Less => upper.push(r),
                std::cmp::Ordering::Equal => keep.push(r),
            }
        }
        let mut new_rows: std::collections::BTreeSet<Row> = keep.into_iter().collect();
        for l in &lower {
            for u in &upper {
                let alpha = l.a[v];
                let beta = u.a[v]; // beta < 0
                let mut a = vec![0i128; ambient];
                for j in 0..ambient {
                    a[j] = l.a[j] * (-beta) + u.a[j] * alpha;
                }
                let rhs = l.rhs * (-beta) + u.rhs * alpha;
                debug_assert_eq!(a[v], 0);
                new_rows.insert(normalize(Row { a, rhs }));
            }
        }
        recorded.push((lower, upper));
        rows = new_rows.into_iter().collect();
    }
    // feasibility of the variable-free system: 0 >= rhs
    if rows.iter().any(|r| r.rhs > 0) {
        return None;
    }
    // back-substitute: small exact rationals
    #[derive(Clone, Copy)]
    struct Rat {
        n: i128,
        d: i128,
    }
    impl Rat {
        fn new(n: i128, d: i128) -> Rat {
            assert!(d != 0);
            let s = if d < 0 { -1 } else { 1 };
            let g = gcd(n, d).max(1);
            Rat {
                n: s * n / g,
                d: s * d / g,
            }
        }
        fn le(self, o: Rat) -> bool {
            self.n * o.d <= o.n * self.d
        }
    }
    let mut w = vec![Rat::new(0, 1); ambient];
    // recorded[k] corresponds to variable v = ambient-1-k; assign in reverse record order
    for (k, (lower, upper)) in recorded.iter().enumerate().rev() {
        let v = ambient - 1 - k;
        // bound value given already-assigned later-eliminated variables (indices > v? no:
        // rows at this stage involve variables 0..=v, of which 0..v were eliminated later
        // and are already assigned)
        let eval = |r: &Row| -> Rat {
            // r.a[v] * w_v >= rhs - sum_{j != v} a[j] w_j
            let mut num = Rat::new(r.rhs, 1);
            for j in 0..ambient {
                if j == v || r.a[j] == 0 {
                    continue;
                }
                num = Rat::new(num.n * w[j].d - r.a[j] * w[j].n * num.d, num.d * w[j].d);
            }
            Rat::new(num.n * r.a[v].signum(), num.d * r.a[v].abs())
        };
        let lows: Vec<Rat> = lower.iter().map(&eval).collect();
        let ups: Vec<Rat> = upper
            .iter()
            .map(|r| {
                // a[v] < 0: w_v <= (rhs - ...)/a[v]
                let q = eval(r);
                Rat::new(-q.n, q.d)
            })
            .collect();
        let lo = lows.iter().copied().reduce(|a, b| if a.le(b) { b } else { a });
        let hi = ups.iter().copied().reduce(|a, b| if a.le(b) { a } else { b });
        w[v] = match (lo, hi) {
            (Some(l), Some(h)) => {
                debug_assert!(l.le(h));
                Rat::new(l.n * h.d + h.n * l.d, 2 * l.d * h.d)
            }
            (Some(l), None) => l,
            (None, Some(h)) => h,
            (None, None) => Rat::new(0, 1),
        };
    }
    // clear denominators
    let mut l = 1i128;
    for r in &w {
        l = l / gcd(l, r.d) * r.d;
    }
    let out: Vec<i64> = w
        .iter()
        .map(|r| i64::try_from(r.n * (l / r.d)).expect("grading overflow"))
        .collect();
    // sanity: strictly positive on all generators
    let lp = LatticePoint(out.clone());
    debug_assert!(gens.iter().all(|g| g.dot(&lp.0) >= 1));
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(v: &[i64]) -> LatticePoint {
        LatticePoint(v.to_vec())
    }

    #[test]
    fn hnf_of_plane_cone_is_standard_basis() {
        // generators (1,1),(1,-1),(1,0) span all of Z^2
        let b = hnf_columns(&[lp(&[1, 1]), lp(&[1, -1]), lp(&[1, 0])], 2);
        assert_eq!(b, vec![lp(&[1, 0]), lp(&[0, 1])]);
    }

    #[test]
    fn hnf_canonical_reduction() {
        // subgroup generated by (2,0) and (1,3): pivots 1? gcd in row 0 is 1
        let b = hnf_columns(&[lp(&[2, 0]), lp(&[1, 3])], 2);
        // row0 gcd = 1 -> pivot (1,*), then row1 pivot from remainder
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].0[0], 1);
        assert_eq!(b[1].0[0], 0);
        assert!(b[1].0[1] > 0);
        let l = Lattice {
            ambient: 2,
            basis: b,
        };
        assert!(l.contains(&lp(&[2, 0])));
        assert!(l.contains(&lp(&[1, 3])));
        assert!(l.contains(&lp(&[3, 3])));
        assert!(!l.contains(&lp(&[0, 1])));
        // index must be 6 = |det|
        assert!(l.contains(&lp(&[0, 6])));
        assert!(!l.contains(&lp(&[0, 3])) || l.contains(&lp(&[0, 3])));
    }

    #[test]
    fn lattice_membership_and_coords() {
        let l = Lattice::from_generators(&[lp(&[2, 0]), lp(&[0, 3])], 2);
        assert_eq!(l.rank(), 2);
        let c = l.coords_of(&lp(&[4, -3])).unwrap();
        assert_eq!(l.point_from_coords(&c), lp(&[4, -3]));
        assert!(l.coords_of(&lp(&[1, 0])).is_none());
    }

    #[test]
    fn quotient_residues() {
        // Z^2 / <2e1, 2e2>: four residues
        let q = FiniteQuotient::new(&[lp(&[2, 0]), lp(&[0, 2])], 2).unwrap();
        assert_eq!(q.index(), 4);
        let rs = q.residues();
        assert_eq!(rs.len(), 4);
        assert!(rs.contains(&vec![0, 0]));
        assert!(rs.contains(&vec![1, 1]));
        // canonical reduction is idempotent and congruent
        for r in &rs {
            assert_eq!(&q.reduce(r), r);
        }
        assert_eq!(q.reduce(&[3, -1]), vec![1, 1]);
    }

    #[test]
    fn grading_found_for_pointed_cones() {
        let w = positive_grading(&[lp(&[1, 1]), lp(&[1, -1]), lp(&[1, 0])], 2).unwrap();
        for g in [lp(&[1, 1]), lp(&[1, -1]), lp(&[1, 0])] {
            assert!(g.dot(&w) >= 1);
        }
        let w1 = positive_grading(&[lp(&[1])], 1).unwrap();
        assert!(lp(&[1]).dot(&w1) >= 1);
    }

    #[test]
    fn grading_rejects_non_pointed() {
        assert!(positive_grading(&[lp(&[1]), lp(&[-1])], 1).is_none());
        assert!(positive_grading(&[lp(&[1, 0]), lp(&[-1, 1]), lp(&[0, -1])], 2).is_none());
        assert!(positive_grading(&[lp(&[0, 0])], 2).is_none());
    }
}
