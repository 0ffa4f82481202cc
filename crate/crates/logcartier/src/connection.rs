//! Connections and Higgs fields on free modules over a chart: integrability,
//! p-curvature, residue, and nilpotence level.
//!
//! A connection is given by matrices A_1..A_r over the monoid algebra; the
//! covariant derivative along the k-th log coordinate acts on coordinate
//! vectors as x ↦ D_k(x) + A_k·x with the diagonal derivation
//! D_k(e^u) = c_k(u)·e^u.

use crate::chart::Chart;
use crate::diffop::{restricted_power_coefficient, BasisTag, PDOp};
use crate::error::{LcError, Result};
use crate::fp::{Fp, FpMat};
use crate::monalg::{AlgElt, GradedElt};
use std::fmt;

/// Square matrix with monoid-algebra entries, row-major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MatAlg {
    pub n: usize,
    pub p: u32,
    pub ambient: usize,
    entries: Vec<AlgElt>,
}

impl MatAlg {
    pub fn zero(n: usize, p: u32, ambient: usize) -> MatAlg {
        MatAlg {
            n,
            p,
            ambient,
            entries: vec![AlgElt::zero(p, ambient); n * n],
        }
    }

    pub fn identity(n: usize, p: u32, ambient: usize) -> MatAlg {
        let mut m = MatAlg::zero(n, p, ambient);
        for i in 0..n {
            m.set(i, i, AlgElt::one(p, ambient));
        }
        m
    }

    /// Constant matrix from prime-field entries.
    pub fn from_const(m: &FpMat, ambient: usize) -> MatAlg {
        assert_eq!(m.rows, m.cols);
        let mut out = MatAlg::zero(m.rows, m.p, ambient);
        for i in 0..m.rows {
            for j in 0..m.cols {
                if !m.get(i, j).is_zero() {
                    out.set(i, j, AlgElt::constant(m.p, ambient, m.get(i, j)));
                }
            }
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> &AlgElt {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: AlgElt) {
        assert_eq!(x.p, self.p);
        assert_eq!(x.ambient, self.ambient);
        self.entries[i * self.n + j] = x;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn add(&self, o: &MatAlg) -> MatAlg {
        assert_eq!(self.n, o.n);
        let mut m = self.clone();
        for (a, b) in m.entries.iter_mut().zip(&o.entries) {
            *a = a.add(b);
        }
        m
    }

    pub fn sub(&self, o: &MatAlg) -> MatAlg {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> MatAlg {
        let mut m = self.clone();
        for a in m.entries.iter_mut() {
            *a = a.neg();
        }
        m
    }

    pub fn scale(&self, f: &AlgElt) -> MatAlg {
        let mut m = self.clone();
        for a in m.entries.iter_mut() {
            *a = a.mul(f);
        }
        m
    }

    pub fn mul(&self, o: &MatAlg) -> MatAlg {
        assert_eq!(self.n, o.n);
        let mut m = MatAlg::zero(self.n, self.p, self.ambient);
        for i in 0..self.n {
            for j in 0..self.n {
                let mut acc = AlgElt::zero(self.p, self.ambient);
                for k in 0..self.n {
                    acc = acc.add(&self.get(i, k).mul(o.get(k, j)));
                }
                m.set(i, j, acc);
            }
        }
        m
    }

    pub fn pow(&self, e: u32) -> MatAlg {
        let mut acc = MatAlg::identity(self.n, self.p, self.ambient);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn commutes_with(&self, o: &MatAlg) -> bool {
        self.mul(o) == o.mul(self)
    }

    pub fn apply(&self, v: &[AlgElt]) -> Vec<AlgElt> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                let mut acc = AlgElt::zero(self.p, self.ambient);
                for j in 0..self.n {
                    acc = acc.add(&self.get(i, j).mul(&v[j]));
                }
                acc
            })
            .collect()
    }

    pub fn map_entries<F: Fn(&AlgElt) -> AlgElt>(&self, f: F) -> MatAlg {
        let mut m = self.clone();
        for a in m.entries.iter_mut() {
            *a = f(a);
        }
        m
    }

    /// True iff every entry is a constant (supported at exponent zero).
    pub fn is_constant(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.terms().all(|(u, _)| u.is_zero()))
    }

    /// The constant matrix, when `is_constant` holds.
    pub fn to_const(&self) -> Option<FpMat> {
        if !self.is_constant() {
            return None;
        }
        let mut m = FpMat::zero(self.n, self.n, self.p);
        for i in 0..self.n {
            for j in 0..self.n {
                let c = self
                    .get(i, j)
                    .coeff(&crate::lattice::LatticePoint::zero(self.ambient));
                m.set(i, j, c);
            }
        }
        Some(m)
    }

    /// Entrywise diagonal derivation along log coordinate k.
    pub fn derive(&self, chart: &Chart, k: usize) -> Result<MatAlg> {
        let mut m = self.clone();
        for a in m.entries.iter_mut() {
            *a = derive_alg(chart, a, k)?;
        }
        Ok(m)
    }

    pub fn support_in_p(&self, chart: &Chart) -> bool {
        self.entries.iter().all(|e| e.support_in_p(chart))
    }

    pub fn support_in_h(&self, chart: &Chart) -> bool {
        self.entries.iter().all(|e| e.support_in_h(chart))
    }
}

impl fmt::Display for MatAlg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            write!(f, "[")?;
            for j in 0..self.n {
                if j > 0 {
                    write!(f, " | ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Diagonal derivation D_k on a plain algebra element: e^u ↦ c_k(u)·e^u.
pub fn derive_alg(chart: &Chart, x: &AlgElt, k: usize) -> Result<AlgElt> {
    let mut out = AlgElt::zero(x.p, x.ambient);
    for (u, c) in x.terms() {
        let lam = chart.coords_modp(u)?;
        let w = lam[k] * *c;
        if !w.is_zero() {
            out.add_term(u.clone(), w);
        }
    }
    Ok(out)
}

/// Free module with an integrable-candidate connection ∇ = d + Σ A_k dlog m_k.
#[derive(Clone, Debug)]
pub struct ConnModule {
    pub rank: usize,
    pub matrices: Vec<MatAlg>,
    /// true iff every entry is a prime-field constant
    pub graded: bool,
}

pub fn new_connection(chart: &Chart, matrices: Vec<MatAlg>) -> Result<ConnModule> {
    if matrices.len() != chart.r() {
        return Err(LcError::DimensionMismatch(format!(
            "expected {} connection matrices, got {}",
            chart.r(),
            matrices.len()
        )));
    }
    let rank = matrices.first().map(|m| m.n).unwrap_or(0);
    for m in &matrices {
        if m.n != rank || m.p != chart.p || m.ambient != chart.ambient {
            return Err(LcError::DimensionMismatch(
                "connection matrices must share rank and chart".into(),
            ));
        }
        if !m.support_in_p(chart) {
            return Err(LcError::SupportOutside(
                "connection matrix entry with support outside P".into(),
            ));
        }
    }
    let graded = matrices.iter().all(|m| m.is_constant());
    Ok(ConnModule {
        rank,
        matrices,
        graded,
    })
}

/// Commuting Higgs field over the twist monoid H.
#[derive(Clone, Debug)]
pub struct HiggsModule {
    pub rank: usize,
    pub matrices: Vec<MatAlg>,
}

pub fn new_higgs(chart: &Chart, matrices: Vec<MatAlg>) -> Result<HiggsModule> {
    if matrices.len() != chart.r() {
        return Err(LcError::DimensionMismatch(format!(
            "expected {} Higgs matrices, got {}",
            chart.r(),
            matrices.len()
        )));
    }
    let rank = matrices.first().map(|m| m.n).unwrap_or(0);
    for m in &matrices {
        if m.n != rank || m.p != chart.p || m.ambient != chart.ambient {
            return Err(LcError::DimensionMismatch(
                "Higgs matrices must share rank and chart".into(),
            ));
        }
        if !m.support_in_h(chart) {
            return Err(LcError::SupportOutside(
                "Higgs matrix entry with support outside the twist monoid H".into(),
            ));
        }
    }
    for i in 0..matrices.len() {
        for j in i + 1..matrices.len() {
            if !matrices[i].commutes_with(&matrices[j]) {
                return Err(LcError::NotCommuting(format!(
                    "Higgs matrices {} and {}",
                    i, j
                )));
            }
        }
    }
    Ok(HiggsModule { rank, matrices })
}

/// Covariant derivative along log coordinate k on a coordinate vector.
pub fn nabla_apply(
    chart: &Chart,
    conn: &ConnModule,
    k: usize,
    v: &[AlgElt],
) -> Result<Vec<AlgElt>> {
    let a = &conn.matrices[k];
    let mut out = a.apply(v);
    for (i, x) in v.iter().enumerate() {
        out[i] = out[i].add(&derive_alg(chart, x, k)?);
    }
    Ok(out)
}

/// Integrability: for all j < k, D_j(A_k) − D_k(A_j) + [A_j, A_k] = 0.
pub fn check_integrable(chart: &Chart, conn: &ConnModule) -> Result<bool> {
    for j in 0..conn.matrices.len() {
        for k in j + 1..conn.matrices.len() {
            let aj = &conn.matrices[j];
            let ak = &conn.matrices[k];
            let curv = ak
                .derive(chart, j)?
                .sub(&aj.derive(chart, k)?)
                .add(&aj.mul(ak))
                .sub(&ak.mul(aj));
            if !curv.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The p-curvature ψ_k = (∇_{D_k})^p − ∇_{D_k}, one O_X-linear matrix per
/// log coordinate (D_k^{(p)} = D_k for the coordinate derivations).
#[derive(Clone, Debug)]
pub struct PCurvature {
    pub matrices: Vec<MatAlg>,
}

pub fn p_curvature(chart: &Chart, conn: &ConnModule) -> Result<PCurvature> {
    if !check_integrable(chart, conn)? {
        return Err(LcError::NotIntegrable(
            "p-curvature needs an integrable connection".into(),
        ));
    }
    let n = conn.rank;
    let p = chart.p;
    let mut out = Vec::new();
    for k in 0..conn.matrices.len() {
        let mut psi = MatAlg::zero(n, p, chart.ambient);
        for i in 0..n {
            let mut e = vec![AlgElt::zero(p, chart.ambient); n];
            e[i] = AlgElt::one(p, chart.ambient);
            let mut w = e.clone();
            for _ in 0..p {
                w = nabla_apply(chart, conn, k, &w)?;
            }
            let first = nabla_apply(chart, conn, k, &e)?;
            for (row, (wp, w1)) in w.iter().zip(&first).enumerate() {
                psi.set(row, i, wp.sub(w1));
            }
        }
        // O_X-linearity: ψ_k(x^v · e_i) = x^v · ψ_k(e_i) on a small window
        for v in chart.window(2) {
            let xv = AlgElt::monomial_in(p, chart.ambient, v.clone(), Fp::one(p));
            for i in 0..n {
                let mut e = vec![AlgElt::zero(p, chart.ambient); n];
                e[i] = xv.clone();
                let mut w = e.clone();
                for _ in 0..p {
                    w = nabla_apply(chart, conn, k, &w)?;
                }
                let first = nabla_apply(chart, conn, k, &e)?;
                for (row, (wp, w1)) in w.iter().zip(&first).enumerate() {
                    let expect = psi.get(row, i).mul(&xv);
                    if wp.sub(w1) != expect {
                        return Err(LcError::Other(format!(
                            "p-curvature failed the linearity check at degree {}",
                            v
                        )));
                    }
                }
            }
        }
        out.push(psi);
    }
    Ok(PCurvature { matrices: out })
}

/// Per-coordinate residue: the matrix induced on the quotient by the span of
/// monomials with c_k(u) ≠ 0. The quotient is represented by the subring of
/// monomials with c_k(u) = 0 (closed under products), so the induced matrix
/// is the entrywise filter and its powers are plain matrix powers.
#[derive(Clone, Debug)]
pub struct Residue {
    pub matrices: Vec<MatAlg>,
    /// ρ_k^p = 0 for each k (the nilpotent-residue condition)
    pub nilpotent: Vec<bool>,
    /// ρ_k^p = ρ_k for each k
    pub frobenius_fixed: Vec<bool>,
}

pub fn residue(chart: &Chart, conn: &ConnModule) -> Result<Residue> {
    let mut matrices = Vec::new();
    let mut nilpotent = Vec::new();
    let mut frobenius_fixed = Vec::new();
    for (k, a) in conn.matrices.iter().enumerate() {
        let mut rho = MatAlg::zero(a.n, a.p, a.ambient);
        for i in 0..a.n {
            for j in 0..a.n {
                let mut kept = AlgElt::zero(a.p, a.ambient);
                for (u, c) in a.get(i, j).terms() {
                    if chart.coords_modp(u)?[k].is_zero() {
                        kept.add_term(u.clone(), *c);
                    }
                }
                rho.set(i, j, kept);
            }
        }
        let rho_p = rho.pow(chart.p);
        nilpotent.push(rho_p.is_zero());
        frobenius_fixed.push(rho_p == rho);
        matrices.push(rho);
    }
    Ok(Residue {
        matrices,
        nilpotent,
        frobenius_fixed,
    })
}

/// Smallest ℓ such that every product of ℓ+1 matrices from the family (with
/// repetition) vanishes; errors when the default cap rank·r·p is exceeded.
pub fn nilpotence_level(mats: &[MatAlg], cap: Option<usize>) -> Result<usize> {
    if mats.is_empty() {
        return Ok(0);
    }
    let n = mats[0].n;
    let cap = cap.unwrap_or(n.max(1) * mats.len() * mats[0].p as usize);
    // `current` holds the distinct nonzero products of length `len`
    let mut current: Vec<MatAlg> = mats.iter().filter(|m| !m.is_zero()).cloned().collect();
    if current.is_empty() {
        return Ok(0);
    }
    let mut len = 1usize;
    loop {
        let mut next: Vec<MatAlg> = Vec::new();
        for m in &current {
            for g in mats {
                let prod = m.mul(g);
                if !prod.is_zero() && !next.contains(&prod) {
                    next.push(prod);
                }
            }
        }
        if next.is_empty() {
            // every product of length len+1 vanishes, some of length len do not
            return Ok(len);
        }
        len += 1;
        if len > cap {
            return Err(LcError::NotNilpotent(cap));
        }
        current = next;
    }
}

/// F-linearity of the p-curvature map at the operator level, on the trivial
/// rank-1 module: (a·D_k)^p − (a·D_k)^{(p)} = a^p·(D_k^p − D_k) as truncated
/// operators.
pub fn f_linearity_check(chart: &Chart, a: &AlgElt, k: usize) -> Result<bool> {
    let p = chart.p;
    let bound = p;
    let d = PDOp::coordinate(chart, k, bound, BasisTag::ZetaDual);
    let a_op = PDOp::multiplication(chart, GradedElt::from_alg(a), bound, BasisTag::ZetaDual);
    let ad = a_op.compose(chart, &d)?;
    let ad_p = ad.pow(chart, p)?;
    let g = restricted_power_coefficient(chart, a, k)?;
    let g_d = PDOp::multiplication(chart, GradedElt::from_alg(&g), bound, BasisTag::ZetaDual)
        .compose(chart, &d)?;
    let lhs = ad_p.sub(&g_d)?;
    let d_p = d.pow(chart, p)?;
    let rhs = PDOp::multiplication(
        chart,
        GradedElt::from_alg(&a.pth_power()),
        bound,
        BasisTag::ZetaDual,
    )
    .compose(chart, &d_p.sub(&d)?)?;
    Ok(lhs == rhs)
}

/// Additivity of the p-curvature map over commuting coordinate derivations:
/// (D_j + D_k)^p − (D_j + D_k) = (D_j^p − D_j) + (D_k^p − D_k).
pub fn additivity_check(chart: &Chart, j: usize, k: usize) -> Result<bool> {
    let p = chart.p;
    let d_j = PDOp::coordinate(chart, j, p, BasisTag::ZetaDual);
    let d_k = PDOp::coordinate(chart, k, p, BasisTag::ZetaDual);
    let sum = d_j.add(&d_k)?;
    let lhs = sum.pow(chart, p)?.sub(&sum)?;
    let rhs = d_j
        .pow(chart, p)?
        .sub(&d_j)?
        .add(&d_k.pow(chart, p)?.sub(&d_k)?)?;
    Ok(lhs == rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticePoint;
    use crate::samples;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lp(v: &[i64]) -> LatticePoint {
        LatticePoint(v.to_vec())
    }

    fn t_pow(p: u32, k: i64) -> AlgElt {
        AlgElt::monomial_in(p, 1, lp(&[k]), Fp::one(p))
    }

    fn rank1(chart: &Chart, a: AlgElt) -> ConnModule {
        let mut m = MatAlg::zero(1, chart.p, chart.ambient);
        m.set(0, 0, a);
        new_connection(chart, vec![m]).unwrap()
    }

    #[test]
    fn integrability_examples() {
        // r = 1: always integrable
        let line = samples::line(3);
        let c = rank1(&line, t_pow(3, 2));
        assert!(check_integrable(&line, &c).unwrap());
        // r = 2 constants: integrable iff commuting
        let cone = samples::cone(3);
        let e12 = FpMat::from_rows(&[vec![0, 1], vec![0, 0]], 3);
        let e21 = FpMat::from_rows(&[vec![0, 0], vec![1, 0]], 3);
        let commuting = new_connection(
            &cone,
            vec![MatAlg::from_const(&e12, 2), MatAlg::from_const(&e12, 2)],
        )
        .unwrap();
        assert!(check_integrable(&cone, &commuting).unwrap());
        let not = new_connection(
            &cone,
            vec![MatAlg::from_const(&e12, 2), MatAlg::from_const(&e21, 2)],
        )
        .unwrap();
        assert!(!check_integrable(&cone, &not).unwrap());
    }

    #[test]
    fn graded_flag() {
        let line = samples::line(3);
        assert!(rank1(&line, AlgElt::one(3, 1)).graded);
        assert!(!rank1(&line, t_pow(3, 1)).graded);
    }

    #[test]
    fn support_validation() {
        let line = samples::line(3);
        let mut m = MatAlg::zero(1, 3, 1);
        m.set(0, 0, t_pow(3, -1));
        assert!(matches!(
            new_connection(&line, vec![m]),
            Err(LcError::SupportOutside(_))
        ));
    }

    #[test]
    fn p_curvature_log_pole() {
        // rank 1, A = (1): zero p-curvature
        let line = samples::line(3);
        let c = rank1(&line, AlgElt::one(3, 1));
        let psi = p_curvature(&line, &c).unwrap();
        assert!(psi.matrices[0].is_zero());
    }

    #[test]
    fn p_curvature_polynomial_example() {
        // rank 1, p = 2, A = (t²): ψ = t⁴ − t²
        let line = samples::line(2);
        let c = rank1(&line, t_pow(2, 2));
        let psi = p_curvature(&line, &c).unwrap();
        let expect = t_pow(2, 4).sub(&t_pow(2, 2));
        assert_eq!(psi.matrices[0].get(0, 0), &expect);
    }

    #[test]
    fn p_curvature_constant_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for p in [2u32, 3] {
            let line = samples::line(p);
            for _ in 0..15 {
                let n = rng.gen_range(1..4);
                let mut lam = FpMat::zero(n, n, p);
                for i in 0..n {
                    for j in 0..n {
                        lam.set(i, j, Fp::new(rng.gen_range(0..p as i64), p));
                    }
                }
                let conn =
                    new_connection(&line, vec![MatAlg::from_const(&lam, 1)]).unwrap();
                let psi = p_curvature(&line, &conn).unwrap();
                let expect = lam.pow(p as u64).sub(&lam);
                assert_eq!(psi.matrices[0].to_const().unwrap(), expect);
            }
        }
    }

    #[test]
    fn residue_examples() {
        let line = samples::line(3);
        // A = (1): ρ = 1, ρ^p = ρ, not nilpotent
        let c = rank1(&line, AlgElt::one(3, 1));
        let r = residue(&line, &c).unwrap();
        assert_eq!(r.matrices[0].to_const().unwrap(), FpMat::identity(1, 3));
        assert!(!r.nilpotent[0]);
        assert!(r.frobenius_fixed[0]);
        // nilpotent constant: ρ = Λ
        let e12 = FpMat::from_rows(&[vec![0, 1], vec![0, 0]], 3);
        let conn = new_connection(&line, vec![MatAlg::from_const(&e12, 1)]).unwrap();
        let r = residue(&line, &conn).unwrap();
        assert_eq!(r.matrices[0].to_const().unwrap(), e12);
        assert!(r.nilpotent[0]);
    }

    #[test]
    fn residue_of_p_curvature_is_rho_identity() {
        // ψ̄ = ρ^p − ρ, checked beyond constants: A = (t²), p = 2
        let line = samples::line(2);
        let c = rank1(&line, t_pow(2, 2));
        let psi = p_curvature(&line, &c).unwrap();
        let psi_conn = new_connection(&line, psi.matrices.clone()).unwrap();
        let psi_bar = residue(&line, &psi_conn).unwrap();
        let rho = residue(&line, &c).unwrap();
        let claim = rho.matrices[0].pow(2).sub(&rho.matrices[0]);
        assert_eq!(psi_bar.matrices[0], claim);
        // and for random constant matrices
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..10 {
            let n = rng.gen_range(1..4);
            let mut lam = FpMat::zero(n, n, 2);
            for i in 0..n {
                for j in 0..n {
                    lam.set(i, j, Fp::new(rng.gen_range(0..2), 2));
                }
            }
            let conn = new_connection(&line, vec![MatAlg::from_const(&lam, 1)]).unwrap();
            let psi = p_curvature(&line, &conn).unwrap();
            let psi_conn = new_connection(&line, psi.matrices.clone()).unwrap();
            let psi_bar = residue(&line, &psi_conn).unwrap();
            let rho = residue(&line, &conn).unwrap();
            let claim = rho.matrices[0].pow(2).sub(&rho.matrices[0]);
            assert_eq!(psi_bar.matrices[0], claim);
        }
    }

    #[test]
    fn nilpotence_levels() {
        let p = 3;
        let zero = MatAlg::zero(2, p, 1);
        assert_eq!(nilpotence_level(&[zero], None).unwrap(), 0);
        let e12 = MatAlg::from_const(&FpMat::from_rows(&[vec![0, 1], vec![0, 0]], p), 1);
        assert_eq!(nilpotence_level(&[e12], None).unwrap(), 1);
        // two commuting strictly upper triangular 3×3
        let a = MatAlg::from_const(
            &FpMat::from_rows(&[vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 0]], p),
            1,
        );
        let b = MatAlg::from_const(
            &FpMat::from_rows(&[vec![0, 0, 1], vec![0, 0, 0], vec![0, 0, 0]], p),
            1,
        );
        assert!(a.commutes_with(&b));
        let l = nilpotence_level(&[a, b], None).unwrap();
        assert!(l <= 2, "level {}", l);
        // non-nilpotent errors
        let id = MatAlg::identity(2, p, 1);
        assert!(matches!(
            nilpotence_level(&[id], Some(5)),
            Err(LcError::NotNilpotent(5))
        ));
    }

    #[test]
    fn higgs_validation() {
        let line = samples::line(3);
        // support must lie in H: t has c(1) ≠ 0
        let mut bad = MatAlg::zero(1, 3, 1);
        bad.set(0, 0, t_pow(3, 1));
        assert!(matches!(
            new_higgs(&line, vec![bad]),
            Err(LcError::SupportOutside(_))
        ));
        let mut good = MatAlg::zero(1, 3, 1);
        good.set(0, 0, t_pow(3, 3));
        assert!(new_higgs(&line, vec![good]).is_ok());
        // commuting enforced on the cone chart (r = 2)
        let cone = samples::cone(3);
        let e12 = MatAlg::from_const(&FpMat::from_rows(&[vec![0, 1], vec![0, 0]], 3), 2);
        let e21 = MatAlg::from_const(&FpMat::from_rows(&[vec![0, 0], vec![1, 0]], 3), 2);
        assert!(matches!(
            new_higgs(&cone, vec![e12.clone(), e21]),
            Err(LcError::NotCommuting(_))
        ));
        assert!(new_higgs(&cone, vec![e12.clone(), e12]).is_ok());
    }

    #[test]
    fn f_linearity_formal() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for p in [2u32, 3] {
            let line = samples::line(p);
            // a = t by hand, then randoms
            assert!(f_linearity_check(&line, &t_pow(p, 1), 0).unwrap());
            for _ in 0..10 {
                let mut a = AlgElt::zero(p, 1);
                for _ in 0..3 {
                    a.add_term(lp(&[rng.gen_range(0..4)]), Fp::new(rng.gen_range(0..p as i64), p));
                }
                assert!(f_linearity_check(&line, &a, 0).unwrap(), "p={} a={}", p, a);
            }
        }
        // additivity over the cone chart
        let cone = samples::cone(3);
        assert!(additivity_check(&cone, 0, 1).unwrap());
    }
}
