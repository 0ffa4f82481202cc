//! Monoid-algebra arithmetic over F_p and the indexed algebra attached to a
//! chart: elements f·e_s with f ∈ F_p[P] and s ∈ P^gp, their product, the
//! canonical degree-derivation d, the flat subring B = ker d, and the
//! θ-basis decomposition.

use crate::chart::Chart;
use crate::error::{LcError, Result};
use crate::fp::Fp;
use crate::lattice::LatticePoint;
use std::collections::BTreeMap;
use std::fmt;

/// Element of the group algebra F_p[Z^n] (supported in P, P^gp, or H as
/// context requires): a finite map exponent → nonzero coefficient.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AlgElt {
    pub p: u32,
    pub ambient: usize,
    terms: BTreeMap<LatticePoint, Fp>,
}

impl AlgElt {
    pub fn zero(p: u32, ambient: usize) -> AlgElt {
        AlgElt {
            p,
            ambient,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(p: u32, u: LatticePoint, c: Fp) -> AlgElt {
        assert_eq!(c.modulus(), p);
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(u, c);
        }
        let ambient = terms.keys().next().map(|k| k.dim()).unwrap_or(0);
        let ambient = if terms.is_empty() { ambient } else { ambient };
        AlgElt { p, ambient, terms }
    }

    /// Monomial with explicit ambient rank (needed for the zero element).
    pub fn monomial_in(p: u32, ambient: usize, u: LatticePoint, c: Fp) -> AlgElt {
        assert_eq!(u.dim(), ambient);
        let mut e = AlgElt::zero(p, ambient);
        e.add_term(u, c);
        e
    }

    pub fn one(p: u32, ambient: usize) -> AlgElt {
        AlgElt::monomial_in(p, ambient, LatticePoint::zero(ambient), Fp::one(p))
    }

    pub fn constant(p: u32, ambient: usize, c: Fp) -> AlgElt {
        AlgElt::monomial_in(p, ambient, LatticePoint::zero(ambient), c)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&LatticePoint, &Fp)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, u: &LatticePoint) -> Fp {
        self.terms.get(u).copied().unwrap_or_else(|| Fp::zero(self.p))
    }

    pub fn add_term(&mut self, u: LatticePoint, c: Fp) {
        assert_eq!(u.dim(), self.ambient);
        assert_eq!(c.modulus(), self.p);
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(u.clone()).or_insert_with(|| Fp::zero(self.p));
        *entry = *entry + c;
        if entry.is_zero() {
            self.terms.remove(&u);
        }
    }

    fn check_compat(&self, other: &AlgElt) {
        assert_eq!(self.p, other.p, "mixed characteristics");
        assert_eq!(self.ambient, other.ambient, "mixed ambient ranks");
    }

    pub fn add(&self, other: &AlgElt) -> AlgElt {
        self.check_compat(other);
        let mut out = self.clone();
        for (u, c) in &other.terms {
            out.add_term(u.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &AlgElt) -> AlgElt {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> AlgElt {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -*c;
        }
        out
    }

    pub fn scale(&self, c: Fp) -> AlgElt {
        assert_eq!(c.modulus(), self.p);
        let mut out = AlgElt::zero(self.p, self.ambient);
        for (u, a) in &self.terms {
            out.add_term(u.clone(), *a * c);
        }
        out
    }

    pub fn mul(&self, other: &AlgElt) -> AlgElt {
        self.check_compat(other);
        let mut out = AlgElt::zero(self.p, self.ambient);
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                out.add_term(u.add(v), *a * *b);
            }
        }
        out
    }

    /// p-th power: in characteristic p this is the exponent dilation u ↦ p·u
    /// with unchanged coefficients (c^p = c in F_p).
    pub fn pth_power(&self) -> AlgElt {
        let mut out = AlgElt::zero(self.p, self.ambient);
        for (u, c) in &self.terms {
            out.add_term(u.scale(self.p as i64), *c);
        }
        out
    }

    pub fn pow(&self, k: u32) -> AlgElt {
        let mut out = AlgElt::one(self.p, self.ambient);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Part supported on exponents satisfying the predicate.
    pub fn filter<F: Fn(&LatticePoint) -> bool>(&self, pred: F) -> AlgElt {
        let mut out = AlgElt::zero(self.p, self.ambient);
        for (u, c) in &self.terms {
            if pred(u) {
                out.add_term(u.clone(), *c);
            }
        }
        out
    }

    pub fn support_in_p(&self, chart: &Chart) -> bool {
        self.terms.keys().all(|u| chart.contains_p(u))
    }

    pub fn support_in_h(&self, chart: &Chart) -> bool {
        self.terms.keys().all(|u| chart.contains_h(u))
    }
}

fn fmt_vec(f: &mut fmt::Formatter<'_>, v: &LatticePoint) -> fmt::Result {
    write!(f, "[")?;
    for (i, x) in v.0.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{}", x)?;
    }
    write!(f, "]")
}

impl fmt::Display for AlgElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (u, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{} * x^", c.val())?;
            fmt_vec(f, u)?;
        }
        Ok(())
    }
}

/// Homogeneous element coeff·e_degree of the indexed algebra: an F_p[P]
/// coefficient placed in index degree ∈ P^gp.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IndexedElt {
    pub degree: LatticePoint,
    pub coeff: AlgElt,
}

impl IndexedElt {
    pub fn new(degree: LatticePoint, coeff: AlgElt) -> IndexedElt {
        assert_eq!(degree.dim(), coeff.ambient);
        IndexedElt { degree, coeff }
    }

    pub fn basis_e(p: u32, degree: LatticePoint) -> IndexedElt {
        let ambient = degree.dim();
        IndexedElt::new(degree, AlgElt::one(p, ambient))
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn add(&self, other: &IndexedElt) -> Result<IndexedElt> {
        if self.degree != other.degree {
            return Err(LcError::DimensionMismatch(format!(
                "indexed addition across degrees {} and {}",
                self.degree, other.degree
            )));
        }
        Ok(IndexedElt::new(self.degree.clone(), self.coeff.add(&other.coeff)))
    }
}

/// Product in the indexed algebra: degrees add, coefficients convolve.
pub fn indexed_mul(x: &IndexedElt, y: &IndexedElt) -> IndexedElt {
    IndexedElt::new(x.degree.add(&y.degree), x.coeff.mul(&y.coeff))
}

impl fmt::Display for IndexedElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (u, c)) in self.coeff.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{} * x^", c.val())?;
            fmt_vec(f, u)?;
            write!(f, " * e")?;
            fmt_vec(f, &self.degree)?;
        }
        Ok(())
    }
}

/// General element of the indexed algebra: a finite sum of homogeneous
/// pieces across index degrees.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GradedElt {
    pub p: u32,
    pub ambient: usize,
    parts: BTreeMap<LatticePoint, AlgElt>,
}

impl GradedElt {
    pub fn zero(p: u32, ambient: usize) -> GradedElt {
        GradedElt {
            p,
            ambient,
            parts: BTreeMap::new(),
        }
    }

    pub fn from_indexed(x: &IndexedElt) -> GradedElt {
        let mut out = GradedElt::zero(x.coeff.p, x.coeff.ambient);
        out.add_part(x.degree.clone(), x.coeff.clone());
        out
    }

    pub fn from_alg(x: &AlgElt) -> GradedElt {
        let mut out = GradedElt::zero(x.p, x.ambient);
        out.add_part(LatticePoint::zero(x.ambient), x.clone());
        out
    }

    pub fn monomial(p: u32, ambient: usize, u: LatticePoint, s: LatticePoint, c: Fp) -> GradedElt {
        let mut out = GradedElt::zero(p, ambient);
        out.add_part(s, AlgElt::monomial_in(p, ambient, u, c));
        out
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn parts(&self) -> impl Iterator<Item = (&LatticePoint, &AlgElt)> {
        self.parts.iter()
    }

    pub fn part(&self, s: &LatticePoint) -> AlgElt {
        self.parts
            .get(s)
            .cloned()
            .unwrap_or_else(|| AlgElt::zero(self.p, self.ambient))
    }

    pub fn add_part(&mut self, s: LatticePoint, x: AlgElt) {
        assert_eq!(s.dim(), self.ambient);
        assert_eq!(x.p, self.p);
        if x.is_zero() {
            return;
        }
        match self.parts.get_mut(&s) {
            Some(cur) => {
                let sum = cur.add(&x);
                if sum.is_zero() {
                    self.parts.remove(&s);
                } else {
                    *cur = sum;
                }
            }
            None => {
                self.parts.insert(s, x);
            }
        }
    }

    pub fn add(&self, other: &GradedElt) -> GradedElt {
        assert_eq!(self.p, other.p);
        assert_eq!(self.ambient, other.ambient);
        let mut out = self.clone();
        for (s, x) in &other.parts {
            out.add_part(s.clone(), x.clone());
        }
        out
    }

    pub fn sub(&self, other: &GradedElt) -> GradedElt {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> GradedElt {
        let mut out = self.clone();
        for x in out.parts.values_mut() {
            *x = x.neg();
        }
        out
    }

    pub fn scale(&self, c: Fp) -> GradedElt {
        let mut out = GradedElt::zero(self.p, self.ambient);
        for (s, x) in &self.parts {
            out.add_part(s.clone(), x.scale(c));
        }
        out
    }

    pub fn mul(&self, other: &GradedElt) -> GradedElt {
        assert_eq!(self.p, other.p);
        assert_eq!(self.ambient, other.ambient);
        let mut out = GradedElt::zero(self.p, self.ambient);
        for (s, x) in &self.parts {
            for (t, y) in &other.parts {
                out.add_part(s.add(t), x.mul(y));
            }
        }
        out
    }

    /// Left multiplication by a plain algebra element (degree 0).
    pub fn mul_alg(&self, a: &AlgElt) -> GradedElt {
        let mut out = GradedElt::zero(self.p, self.ambient);
        for (s, x) in &self.parts {
            out.add_part(s.clone(), x.mul(a));
        }
        out
    }

    pub fn monomials(&self) -> Vec<(LatticePoint, LatticePoint, Fp)> {
        let mut out = Vec::new();
        for (s, x) in &self.parts {
            for (u, c) in x.terms() {
                out.push((u.clone(), s.clone(), *c));
            }
        }
        out
    }
}

impl fmt::Display for GradedElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (s, x) in &self.parts {
            for (u, c) in x.terms() {
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                write!(f, "{} * x^", c.val())?;
                fmt_vec(f, u)?;
                write!(f, " * e")?;
                fmt_vec(f, s)?;
            }
        }
        Ok(())
    }
}

/// The canonical degree-derivation d: component k of d(e^u e_s) is
/// c_k(u+s)·e^u e_s. Returns the r coefficient components of the 1-form.
pub fn canonical_d(chart: &Chart, x: &GradedElt) -> Result<Vec<GradedElt>> {
    let mut comps = vec![GradedElt::zero(x.p, x.ambient); chart.r()];
    for (s, part) in x.parts() {
        for (u, c) in part.terms() {
            let lam = chart.eigen(u, s)?;
            for (k, comp) in comps.iter_mut().enumerate() {
                let coef = lam[k] * *c;
                if !coef.is_zero() {
                    comp.add_part(s.clone(), AlgElt::monomial_in(x.p, x.ambient, u.clone(), coef));
                }
            }
        }
    }
    Ok(comps)
}

/// Membership in the flat subring B: every monomial e^u e_s satisfies
/// u + s ∈ H^gp. Debug builds cross-check against vanishing of d.
pub fn b_membership(chart: &Chart, x: &GradedElt) -> Result<bool> {
    let mut ok = true;
    'outer: for (s, part) in x.parts() {
        for (u, _) in part.terms() {
            if !chart.in_hgp(&u.add(s)) {
                ok = false;
                break 'outer;
            }
        }
    }
    debug_assert_eq!(
        ok,
        canonical_d(chart, x)?.iter().all(|c| c.is_zero()),
        "flat-subring membership must agree with vanishing of d"
    );
    Ok(ok)
}

/// θ^I := e_{Σ I_k m_k} for a multi-exponent I over the log coordinates.
pub fn theta_power(chart: &Chart, i_exp: &[u32]) -> IndexedElt {
    assert_eq!(i_exp.len(), chart.r());
    let mut s = LatticePoint::zero(chart.ambient);
    for (k, &ik) in i_exp.iter().enumerate() {
        s = s.add(&chart.log_coords[k].scale(ik as i64));
    }
    IndexedElt::basis_e(chart.p, s)
}

/// Decompose x = Σ_I b_I·θ^I with each b_I in B, I ∈ {0..p−1}^r.
/// The monomial e^u e_s is assigned to I = c(u+s). Requires Q = 0.
pub fn theta_decompose(
    chart: &Chart,
    x: &IndexedElt,
) -> Result<BTreeMap<Vec<u32>, IndexedElt>> {
    if !chart.monoid_q.is_zero_monoid() {
        return Err(LcError::ThetaNeedsTrivialBase);
    }
    let mut out: BTreeMap<Vec<u32>, IndexedElt> = BTreeMap::new();
    for (u, c) in x.coeff.terms() {
        let i_exp: Vec<u32> = chart
            .eigen(u, &x.degree)?
            .iter()
            .map(|f| f.val())
            .collect();
        // degree of b_I is s − Σ I_k m_k
        let mut shift = LatticePoint::zero(chart.ambient);
        for (k, &ik) in i_exp.iter().enumerate() {
            shift = shift.add(&chart.log_coords[k].scale(ik as i64));
        }
        let deg = x.degree.sub(&shift);
        let entry = out.entry(i_exp).or_insert_with(|| {
            IndexedElt::new(deg.clone(), AlgElt::zero(chart.p, chart.ambient))
        });
        entry.coeff.add_term(u.clone(), *c);
    }
    out.retain(|_, b| !b.is_zero());
    // every component must be flat
    for b in out.values() {
        debug_assert!(b_membership(chart, &GradedElt::from_indexed(b))?);
    }
    Ok(out)
}

/// Reassemble Σ_I b_I·θ^I.
pub fn theta_recompose(chart: &Chart, parts: &BTreeMap<Vec<u32>, IndexedElt>) -> GradedElt {
    let mut out = GradedElt::zero(chart.p, chart.ambient);
    for (i_exp, b) in parts {
        let t = theta_power(chart, i_exp);
        let prod = indexed_mul(b, &t);
        out.add_part(prod.degree, prod.coeff);
    }
    out
}
