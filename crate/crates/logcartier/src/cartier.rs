//! Log 1- and 2-forms, the de Rham differential, the Cartier operator on
//! closed forms, and its splittings parameterized by perturbations b_k.
//!
//! Coefficients live in the monoid algebra; the coordinate derivations act
//! diagonally, so d, C, and ζ are all exact finite computations.

use crate::chart::Chart;
use crate::connection::derive_alg;
use crate::error::{LcError, Result};
use crate::fp::Fp;
use crate::monalg::AlgElt;
use std::collections::BTreeMap;
use std::fmt;

/// 1-form Σ_k f_k · dlog m_k with monoid-algebra coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Form1 {
    pub p: u32,
    pub ambient: usize,
    pub comps: Vec<AlgElt>,
}

impl Form1 {
    pub fn zero(chart: &Chart) -> Form1 {
        Form1 {
            p: chart.p,
            ambient: chart.ambient,
            comps: vec![AlgElt::zero(chart.p, chart.ambient); chart.r()],
        }
    }

    pub fn from_comps(chart: &Chart, comps: Vec<AlgElt>) -> Result<Form1> {
        if comps.len() != chart.r() {
            return Err(LcError::DimensionMismatch(format!(
                "1-form needs {} components, got {}",
                chart.r(),
                comps.len()
            )));
        }
        for c in &comps {
            if c.p != chart.p || c.ambient != chart.ambient {
                return Err(LcError::DimensionMismatch(
                    "form component over the wrong chart".into(),
                ));
            }
        }
        Ok(Form1 {
            p: chart.p,
            ambient: chart.ambient,
            comps,
        })
    }

    pub fn basis_dlog(chart: &Chart, k: usize) -> Form1 {
        let mut f = Form1::zero(chart);
        f.comps[k] = AlgElt::one(chart.p, chart.ambient);
        f
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, o: &Form1) -> Form1 {
        assert_eq!(self.comps.len(), o.comps.len());
        Form1 {
            p: self.p,
            ambient: self.ambient,
            comps: self
                .comps
                .iter()
                .zip(&o.comps)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, o: &Form1) -> Form1 {
        Form1 {
            p: self.p,
            ambient: self.ambient,
            comps: self
                .comps
                .iter()
                .zip(&o.comps)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale_alg(&self, a: &AlgElt) -> Form1 {
        Form1 {
            p: self.p,
            ambient: self.ambient,
            comps: self.comps.iter().map(|c| c.mul(a)).collect(),
        }
    }
}

impl fmt::Display for Form1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.comps.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let body = format!("{}", c);
            if body.contains('+') {
                write!(f, "({}) * dlog[{}]", body, k + 1)?;
            } else {
                write!(f, "{} * dlog[{}]", body, k + 1)?;
            }
        }
        Ok(())
    }
}

/// 2-form Σ_{j<k} g_{jk} · dlog m_j ∧ dlog m_k.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Form2 {
    pub p: u32,
    pub ambient: usize,
    pub comps: BTreeMap<(usize, usize), AlgElt>,
}

impl Form2 {
    pub fn is_zero(&self) -> bool {
        self.comps.values().all(|c| c.is_zero())
    }
}

/// d of a function: Σ_k D_k(f) dlog m_k.
pub fn d_function(chart: &Chart, f: &AlgElt) -> Result<Form1> {
    let comps = (0..chart.r())
        .map(|k| derive_alg(chart, f, k))
        .collect::<Result<Vec<_>>>()?;
    Form1::from_comps(chart, comps)
}

/// de Rham differential of a 1-form:
/// d(Σ f_k dlog m_k) = Σ_{j<k} (D_j f_k − D_k f_j) dlog m_j ∧ dlog m_k.
pub fn d_form(chart: &Chart, w: &Form1) -> Result<Form2> {
    let mut comps = BTreeMap::new();
    for j in 0..chart.r() {
        for k in j + 1..chart.r() {
            let g = derive_alg(chart, &w.comps[k], j)?.sub(&derive_alg(chart, &w.comps[j], k)?);
            if !g.is_zero() {
                comps.insert((j, k), g);
            }
        }
    }
    Ok(Form2 {
        p: chart.p,
        ambient: chart.ambient,
        comps,
    })
}

pub fn is_closed(chart: &Chart, w: &Form1) -> Result<bool> {
    Ok(d_form(chart, w)?.is_zero())
}

/// The Cartier operator on a closed 1-form: component k of the result is the
/// part of f_k supported on monomials with all coordinates c(u) = 0,
/// reinterpreted over the twist chart (the coefficient inclusion F_p[H] ⊆
/// F_p[P] is the identity on supports). Non-closed input is a hard error.
///
/// Every call re-derives the result against the pairing identity
/// F*⟨Cω, π*D_k⟩ = ⟨ω, D_k^{(p)}⟩ − D_k^{p−1}⟨ω, D_k⟩ and fails loudly on
/// mismatch.
pub fn cartier_operator(chart: &Chart, w: &Form1) -> Result<Form1> {
    if !is_closed(chart, w)? {
        return Err(LcError::NotClosed(format!("{}", w)));
    }
    let mut comps = Vec::new();
    for f in &w.comps {
        let mut kept = AlgElt::zero(chart.p, chart.ambient);
        for (u, c) in f.terms() {
            if chart.in_hgp(u) {
                kept.add_term(u.clone(), *c);
            }
        }
        comps.push(kept);
    }
    // pairing identity per coordinate: D_k^{(p)} = D_k, so the right side is
    // f_k − D_k^{p−1}(f_k), the part of f_k with c_k(u) = 0; closedness makes
    // this coincide with the full H^gp part.
    for (k, f) in w.comps.iter().enumerate() {
        let mut iterated = f.clone();
        for _ in 0..chart.p - 1 {
            iterated = derive_alg(chart, &iterated, k)?;
        }
        let rhs = f.sub(&iterated);
        if rhs != comps[k] {
            return Err(LcError::Other(format!(
                "Cartier pairing identity failed on component {} of {}",
                k + 1,
                w
            )));
        }
    }
    Form1::from_comps(chart, comps)
}

/// A splitting ζ of the Cartier operator, parameterized by perturbations:
/// ζ(π*dlog m_k) = dlog m_k + d(b_k).
#[derive(Clone, Debug)]
pub struct Splitting {
    pub bs: Vec<AlgElt>,
    /// forms[k] = ζ(π*dlog m_k)
    pub forms: Vec<Form1>,
}

/// Build and validate a splitting from perturbations b_1..b_r (support in P).
pub fn make_splitting(chart: &Chart, bs: Vec<AlgElt>) -> Result<Splitting> {
    if bs.len() != chart.r() {
        return Err(LcError::DimensionMismatch(format!(
            "splitting needs {} perturbations, got {}",
            chart.r(),
            bs.len()
        )));
    }
    let mut forms = Vec::new();
    for (k, b) in bs.iter().enumerate() {
        if !b.support_in_p(chart) {
            return Err(LcError::SupportOutside(format!(
                "splitting perturbation {} has support outside P",
                k + 1
            )));
        }
        let zeta_k = Form1::basis_dlog(chart, k).add(&d_function(chart, b)?);
        if !is_closed(chart, &zeta_k)? {
            return Err(LcError::Other(format!(
                "splitting image {} is not closed",
                zeta_k
            )));
        }
        let c = cartier_operator(chart, &zeta_k)?;
        if c != Form1::basis_dlog(chart, k) {
            return Err(LcError::Other(format!(
                "splitting fails the section property on coordinate {}",
                k + 1
            )));
        }
        forms.push(zeta_k);
    }
    Ok(Splitting { bs, forms })
}

/// The canonical splitting (b = 0): ζ(π*dlog m_k) = dlog m_k.
pub fn canonical_splitting(chart: &Chart) -> Splitting {
    let zero = vec![AlgElt::zero(chart.p, chart.ambient); chart.r()];
    make_splitting(chart, zero).expect("the zero perturbation always splits")
}

/// Pairing matrix Z_kj = ⟨ζ(π*dlog m_j), D_k⟩ = δ_kj + D_k(b_j).
pub fn zeta_pairing(chart: &Chart, zeta: &Splitting) -> Vec<Vec<AlgElt>> {
    let r = chart.r();
    (0..r)
        .map(|k| (0..r).map(|j| zeta.forms[j].comps[k].clone()).collect())
        .collect()
}

/// A spanning family of closed 1-forms with monomial support inside the
/// window: exact pieces d(e^u) = e^u·Σ c_k(u) dlog m_k at degrees with
/// c(u) ≠ 0, and the twist-supported pieces e^u dlog m_k at c(u) = 0.
pub fn closed_form_basis(chart: &Chart, bound: i64) -> Result<Vec<Form1>> {
    let mut out = Vec::new();
    for u in chart.window(bound) {
        let cu = chart.coords_modp(&u)?;
        let mono = AlgElt::monomial_in(chart.p, chart.ambient, u.clone(), Fp::one(chart.p));
        if cu.iter().all(|x| x.is_zero()) {
            for k in 0..chart.r() {
                out.push(Form1::basis_dlog(chart, k).scale_alg(&mono));
            }
        } else {
            let comps: Vec<AlgElt> = cu
                .iter()
                .map(|x| mono.scale(*x))
                .collect();
            out.push(Form1::from_comps(chart, comps)?);
        }
    }
    Ok(out)
}

/// Consistency with the additive-torsor description: when g^p − g = F*f with
/// f supported in the twist monoid's group, C(g dlog m_k) must equal
/// (π*g − f) dlog (π*m_k). Returns Err if the hypothesis fails, Ok(pass).
pub fn artin_schreier_check(chart: &Chart, g: &AlgElt, f: &AlgElt, k: usize) -> Result<bool> {
    let lhs = g.pth_power().sub(g);
    if lhs != *f {
        return Err(LcError::Other(
            "hypothesis g^p − g = F*f does not hold".into(),
        ));
    }
    if !f.terms().all(|(u, _)| chart.in_hgp(u)) {
        return Err(LcError::SupportOutside(
            "right-hand side must live over the twist chart".into(),
        ));
    }
    let w = Form1::basis_dlog(chart, k).scale_alg(g);
    let c = cartier_operator(chart, &w)?;
    let expect = Form1::basis_dlog(chart, k).scale_alg(&g.pth_power().sub(f));
    Ok(c == expect)
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

    #[test]
    fn d_examples() {
        // r = 1: every 1-form is closed
        let line = samples::line(3);
        let w = Form1::basis_dlog(&line, 0).scale_alg(&t_pow(3, 1));
        assert!(is_closed(&line, &w).unwrap());
        // r = 2: d(e^u dlog m_1) has the c_2(u) component
        let cone = samples::cone(2);
        let u = lp(&[1, 1]);
        let mono = AlgElt::monomial_in(2, 2, u.clone(), Fp::one(2));
        let w = Form1::basis_dlog(&cone, 0).scale_alg(&mono);
        let dw = d_form(&cone, &w).unwrap();
        // component (0,1): D_0(f_1) − D_1(f_0) = −c_2(u)·e^u; c(u) = (1,1)
        let got = &dw.comps[&(0, 1)];
        assert_eq!(*got, mono.neg());
    }

    #[test]
    fn d_squared_zero() {
        let cone = samples::cone(3);
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..20 {
            let mut f = AlgElt::zero(3, 2);
            for _ in 0..4 {
                let a = rng.gen_range(0..4i64);
                let b = rng.gen_range(-a..=a);
                f.add_term(lp(&[a, b]), Fp::new(rng.gen_range(0..3), 3));
            }
            let df = d_function(&cone, &f).unwrap();
            assert!(d_form(&cone, &df).unwrap().is_zero(), "f = {}", f);
        }
    }

    #[test]
    fn cartier_line_examples() {
        let line = samples::line(3);
        // C(dlog t) = dlog π*t
        let w = Form1::basis_dlog(&line, 0);
        assert_eq!(cartier_operator(&line, &w).unwrap(), w);
        // C(t dlog t) = 0 (exact form)
        let w1 = w.scale_alg(&t_pow(3, 1));
        assert!(cartier_operator(&line, &w1).unwrap().is_zero());
        // C(t³ dlog t) = t³ dlog π*t
        let w3 = w.scale_alg(&t_pow(3, 3));
        assert_eq!(cartier_operator(&line, &w3).unwrap(), w3);
    }

    #[test]
    fn cartier_rejects_non_closed() {
        let cone = samples::cone(2);
        let mono = AlgElt::monomial_in(2, 2, lp(&[1, 1]), Fp::one(2));
        let w = Form1::basis_dlog(&cone, 0).scale_alg(&mono);
        assert!(matches!(
            cartier_operator(&cone, &w),
            Err(LcError::NotClosed(_))
        ));
    }

    #[test]
    fn cartier_kills_exact_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        for p in [2u32, 3] {
            let cone = samples::cone(p);
            for _ in 0..15 {
                let mut f = AlgElt::zero(p, 2);
                for _ in 0..4 {
                    let a = rng.gen_range(0..4i64);
                    let b = rng.gen_range(-a..=a);
                    f.add_term(lp(&[a, b]), Fp::new(rng.gen_range(0..p as i64), p));
                }
                let df = d_function(&cone, &f).unwrap();
                assert!(cartier_operator(&cone, &df).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn splitting_examples() {
        // canonical: C∘ζ = id enforced in the constructor
        let line = samples::line(3);
        let zeta = canonical_splitting(&line);
        assert_eq!(zeta.forms[0], Form1::basis_dlog(&line, 0));
        // b = t on the line: ζ(π*dlog t) = (1 + t) dlog t
        let zeta_t = make_splitting(&line, vec![t_pow(3, 1)]).unwrap();
        let expect = Form1::basis_dlog(&line, 0)
            .scale_alg(&AlgElt::one(3, 1).add(&t_pow(3, 1)));
        assert_eq!(zeta_t.forms[0], expect);
        // pairing matrix
        let z = zeta_pairing(&line, &zeta_t);
        assert_eq!(z[0][0], AlgElt::one(3, 1).add(&t_pow(3, 1)));
    }

    #[test]
    fn splitting_random_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        for p in [2u32, 3] {
            let cone = samples::cone(p);
            for _ in 0..10 {
                let mut bs = Vec::new();
                for _ in 0..2 {
                    let mut b = AlgElt::zero(p, 2);
                    for _ in 0..3 {
                        let a = rng.gen_range(0..3i64);
                        let c = rng.gen_range(-a..=a);
                        b.add_term(lp(&[a, c]), Fp::new(rng.gen_range(0..p as i64), p));
                    }
                    bs.push(b);
                }
                // constructor fails loudly if closedness or the section
                // property break
                assert!(make_splitting(&cone, bs).is_ok());
            }
        }
    }

    #[test]
    fn closed_basis_is_closed_and_pairing_holds() {
        for p in [2u32, 3] {
            let cone = samples::cone(p);
            for w in closed_form_basis(&cone, 4).unwrap() {
                assert!(is_closed(&cone, &w).unwrap(), "{}", w);
                // cartier_operator internally re-checks the pairing identity
                cartier_operator(&cone, &w).unwrap();
            }
        }
    }

    #[test]
    fn artin_schreier_cases() {
        let line = samples::line(3);
        // g constant: g³ − g = 0
        let g = AlgElt::constant(3, 1, Fp::new(2, 3));
        assert!(artin_schreier_check(&line, &g, &AlgElt::zero(3, 1), 0).unwrap());
        // g = t³: f = t⁹ − t³
        let g = t_pow(3, 3);
        let f = t_pow(3, 9).sub(&t_pow(3, 3));
        assert!(artin_schreier_check(&line, &g, &f, 0).unwrap());
        // hypothesis violation flagged
        let bad = artin_schreier_check(&line, &t_pow(3, 1), &AlgElt::zero(3, 1), 0);
        assert!(bad.is_err());
    }

    #[test]
    fn form_display() {
        let line = samples::line(3);
        let w = Form1::basis_dlog(&line, 0).scale_alg(&t_pow(3, 2));
        assert_eq!(format!("{}", w), "1 * x^[2] * dlog[1]");
        let two = Form1::basis_dlog(&line, 0)
            .scale_alg(&AlgElt::one(3, 1).add(&t_pow(3, 1)));
        assert_eq!(format!("{}", two), "(1 * x^[0] + 1 * x^[1]) * dlog[1]");
        assert_eq!(format!("{}", Form1::zero(&line)), "0");
    }
}
