//! The local transform between flat log connections and twist-side Higgs
//! modules, in both directions, together with the closed formula for the
//! p-curvature of a connection reconstructed from a Higgs field.

use crate::cartier::{zeta_pairing, Splitting};
use crate::chart::Chart;
use crate::connection::{
    check_integrable, new_connection, new_higgs, nilpotence_level, p_curvature, residue,
    ConnModule, HiggsModule, MatAlg,
};
use crate::error::{LcError, Result};
use crate::fp::{Fp, FpMat};
use crate::lattice::LatticePoint;
use crate::monalg::AlgElt;

/// Reconstruct a connection from a Higgs module along a splitting:
/// ∇ = d + Σ_j ζ(π*dlog m_j)·Θ_j, so the matrix of ∇_{D_k} is
/// A_k = Σ_j Z_kj·Θ_j with Z the splitting's pairing matrix. Twist-side
/// coefficients embed into the chart's algebra on the nose. Integrability of
/// the result is re-derived, not assumed.
pub fn inverse_psi(chart: &Chart, zeta: &Splitting, higgs: &HiggsModule) -> Result<ConnModule> {
    let r = chart.r();
    let z = zeta_pairing(chart, zeta);
    let mut mats = Vec::new();
    for k in 0..r {
        let mut a = MatAlg::zero(higgs.rank, chart.p, chart.ambient);
        for j in 0..r {
            a = a.add(&higgs.matrices[j].scale(&z[k][j]));
        }
        mats.push(a);
    }
    let conn = new_connection(chart, mats)?;
    if !check_integrable(chart, &conn)? {
        return Err(LcError::NotIntegrable(
            "reconstruction from a commuting field must be flat".into(),
        ));
    }
    Ok(conn)
}

/// Per-coordinate comparison of the iterated p-curvature of
/// `inverse_psi(zeta, higgs)` against the closed formula
/// ψ_k = Σ_j (Z_kj∘[p])·Θ_j^p − Θ_k, where ∘[p] dilates exponents by p.
pub struct CurvatureFormulaReport {
    pub matches: Vec<bool>,
    pub pass: bool,
}

pub fn p_curvature_formula_check(
    chart: &Chart,
    zeta: &Splitting,
    higgs: &HiggsModule,
) -> Result<CurvatureFormulaReport> {
    let conn = inverse_psi(chart, zeta, higgs)?;
    let psi = p_curvature(chart, &conn)?;
    let z = zeta_pairing(chart, zeta);
    let mut matches = Vec::new();
    for k in 0..chart.r() {
        let mut rhs = MatAlg::zero(higgs.rank, chart.p, chart.ambient);
        for j in 0..chart.r() {
            let theta_p = higgs.matrices[j].pow(chart.p);
            rhs = rhs.add(&theta_p.scale(&z[k][j].pth_power()));
        }
        rhs = rhs.sub(&higgs.matrices[k]);
        matches.push(psi.matrices[k] == rhs);
    }
    let pass = matches.iter().all(|&m| m);
    Ok(CurvatureFormulaReport { matches, pass })
}

/// Output of the forward transform.
pub struct TransformReport {
    /// Higgs module carried by the joint kernel, in the kernel basis.
    pub higgs: HiggsModule,
    /// Basis of the joint kernel inside the original fiber.
    pub kernel_basis: Vec<Vec<Fp>>,
    /// Nilpotence level of the p-curvature.
    pub psi_level: usize,
    /// Set when some residue fails ρ^p = 0: the kernel can then be smaller
    /// than the fiber and the comparison with the original module fails to
    /// be surjective.
    pub residue_warning: bool,
    pub surjectivity_note: Option<String>,
    /// Window degrees carrying nonzero flat sections, with a basis of
    /// fiber vectors for each.
    pub horizontal_sections: Vec<(LatticePoint, Vec<Vec<Fp>>)>,
}

/// Forward transform of a flat connection with constant matrices Λ_k: twist
/// by the splitting (M_k = Λ_k + Σ_j Z_kj·ψ_j), extract the joint kernel
/// V′ = ∩_k ker M_k, and carry −ψ onto it. Requires the p-curvature's
/// nilpotence level to be < p, and constant M_k for the kernel step.
pub fn cartier_transform(
    chart: &Chart,
    conn: &ConnModule,
    zeta: &Splitting,
    window_bound: i64,
) -> Result<TransformReport> {
    let p = chart.p;
    let r = chart.r();
    if !conn.graded {
        return Err(LcError::Other(
            "forward transform needs constant connection matrices".into(),
        ));
    }
    let psi = p_curvature(chart, conn)?;
    let level = nilpotence_level(&psi.matrices, None)?;
    if level >= p as usize {
        return Err(LcError::LevelTooLarge { level, p });
    }
    let res = residue(chart, conn)?;
    let residue_warning = res.nilpotent.iter().any(|&ok| !ok);
    let z = zeta_pairing(chart, zeta);
    // twisted operator matrices
    let mut twisted = Vec::new();
    for k in 0..r {
        let mut m = conn.matrices[k].clone();
        for j in 0..r {
            m = m.add(&psi.matrices[j].scale(&z[k][j]));
        }
        twisted.push(m);
    }
    let consts: Vec<FpMat> = twisted
        .iter()
        .map(|m| {
            m.to_const().ok_or_else(|| {
                LcError::Other(
                    "kernel extraction needs constant twisted matrices; use the \
                     perturbation-free splitting for this module"
                        .into(),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // joint kernel
    let stacked = consts
        .iter()
        .skip(1)
        .fold(consts[0].clone(), |acc, m| acc.vstack(m));
    let kernel_basis = stacked.kernel();
    let out_rank = kernel_basis.len();
    // restrict −ψ (constant because the input is graded) to the kernel
    let kmat = if out_rank > 0 {
        FpMat::from_cols_fp(&kernel_basis, conn.rank, p)
    } else {
        FpMat::zero(conn.rank, 0, p)
    };
    let mut out_mats = Vec::new();
    for k in 0..r {
        let psi_c = psi.matrices[k]
            .to_const()
            .ok_or_else(|| LcError::Other("p-curvature of a graded module must be constant".into()))?;
        let mut cols = Vec::new();
        for b in &kernel_basis {
            let image = psi_c.apply(b).iter().map(|x| -*x).collect::<Vec<_>>();
            let coords = kmat.solve(&image).ok_or_else(|| {
                LcError::Other("p-curvature does not preserve the joint kernel".into())
            })?;
            cols.push(coords);
        }
        let mut m = FpMat::zero(out_rank, out_rank, p);
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        out_mats.push(MatAlg::from_const(&m, chart.ambient));
    }
    let higgs = new_higgs(chart, out_mats)?;
    // flat sections degree by degree over the window
    let mut horizontal_sections = Vec::new();
    for u in chart.window(window_bound) {
        let cu = chart.coords_modp(&u)?;
        let mut slices = Vec::new();
        for k in 0..r {
            let lam = conn.matrices[k]
                .to_const()
                .expect("graded connection has constant matrices");
            let mut m = FpMat::identity(conn.rank, p).scale(cu[k]);
            m = m.add(&lam);
            slices.push(m);
        }
        let stacked = slices
            .iter()
            .skip(1)
            .fold(slices[0].clone(), |acc, m| acc.vstack(m));
        let ker = stacked.kernel();
        if !ker.is_empty() {
            horizontal_sections.push((u, ker));
        }
    }
    let surjectivity_note = if residue_warning {
        Some(format!(
            "a residue is not nilpotent: the kernel has rank {} < {} and the \
             comparison back to the original module is not surjective",
            out_rank, conn.rank
        ))
    } else {
        None
    };
    Ok(TransformReport {
        higgs,
        kernel_basis,
        psi_level: level,
        residue_warning,
        surjectivity_note,
        horizontal_sections,
    })
}

/// Output of the inverse transform.
pub struct InverseReport {
    pub conn: ConnModule,
    /// The corrected field Θ̂ = Σ_j G^(j) whose reconstruction has
    /// p-curvature −Θ.
    pub theta_hat: Vec<MatAlg>,
    /// Number of correction rounds before the recursion vanished.
    pub rounds: usize,
}

/// Inverse transform: starting from G^(0) = Θ, iterate
/// G^(j+1)_k = Σ_i (Z_ki∘[p])·(G^(j)_i)^p until the correction vanishes
/// (the field's nilpotence makes this finite; `cap` guards the loop), set
/// Θ̂ = Σ_j G^(j), and reconstruct ∇ = d + ζ(Θ̂). The result's p-curvature
/// is −Θ, so the forward transform recovers Θ on the full fiber.
pub fn inverse_cartier_transform(
    chart: &Chart,
    zeta: &Splitting,
    higgs: &HiggsModule,
    cap: Option<usize>,
) -> Result<InverseReport> {
    let p = chart.p;
    let r = chart.r();
    let n = higgs.rank;
    let level = nilpotence_level(&higgs.matrices, None)?;
    if level >= p as usize {
        return Err(LcError::LevelTooLarge { level, p });
    }
    let z = zeta_pairing(chart, zeta);
    let w: Vec<Vec<AlgElt>> = z
        .iter()
        .map(|row| row.iter().map(|f| f.pth_power()).collect())
        .collect();
    let cap = cap.unwrap_or(n * r * p as usize + 1);
    let mut current = higgs.matrices.clone();
    let mut theta_hat = current.clone();
    let mut rounds = 0usize;
    while current.iter().any(|m| !m.is_zero()) {
        rounds += 1;
        if rounds > cap {
            return Err(LcError::NotNilpotent(cap));
        }
        let mut next = Vec::new();
        for k in 0..r {
            let mut g = MatAlg::zero(n, p, chart.ambient);
            for i in 0..r {
                g = g.add(&current[i].pow(p).scale(&w[k][i]));
            }
            next.push(g);
        }
        for (k, g) in next.iter().enumerate() {
            theta_hat[k] = theta_hat[k].add(g);
        }
        current = next;
    }
    // every correction stays inside the commutative hull of Θ: re-derive
    for a in &theta_hat {
        for b in &theta_hat {
            if !a.commutes_with(b) {
                return Err(LcError::NotCommuting(
                    "corrected field lost commutativity".into(),
                ));
            }
        }
    }
    let hat_module = new_higgs(chart, theta_hat.clone())?;
    let conn = inverse_psi(chart, zeta, &hat_module)?;
    Ok(InverseReport {
        conn,
        theta_hat,
        rounds,
    })
}
