//! Text syntax for elements, operators, and forms.
//!
//! Element terms are `coef * x^[v1,...,vn] * e[s1,...,sn]` summed with `+`;
//! the `e[..]` index part is optional and defaults to index zero. Operators
//! are sums of `f * D^[i1,...,ir]` with the coefficient parenthesized when it
//! has several terms; forms are sums of `f * dlog[k]` with k one-based.

use crate::cartier::Form1;
use crate::chart::Chart;
use crate::diffop::{BasisTag, MIdx, PDOp};
use crate::error::{LcError, Result};
use crate::fp::Fp;
use crate::lattice::LatticePoint;
use crate::monalg::{AlgElt, GradedElt};

fn perr(line: usize, msg: impl Into<String>) -> LcError {
    LcError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Split on a separator at bracket depth zero (rounds and squares).
pub fn split_top(s: &str, sep: char) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' | '[' => {
                depth += 1;
                cur.push(ch);
            }
            ')' | ']' => {
                depth -= 1;
                cur.push(ch);
            }
            c if c == sep && depth == 0 => {
                out.push(cur.trim().to_string());
                cur = String::new();
            }
            _ => cur.push(ch),
        }
    }
    out.push(cur.trim().to_string());
    out
}

/// Parse `[a, b, c]` into integers.
pub fn parse_int_list(s: &str, line: usize) -> Result<Vec<i64>> {
    let t = s.trim();
    if !t.starts_with('[') || !t.ends_with(']') {
        return Err(perr(line, format!("expected an integer list, got `{}`", t)));
    }
    let inner = &t[1..t.len() - 1];
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<i64>()
                .map_err(|_| perr(line, format!("bad integer `{}`", x.trim())))
        })
        .collect()
}

/// Parse `[[1,0],[0,1]]` into lattice points of the given dimension.
pub fn parse_vector_list(s: &str, dim: usize, line: usize) -> Result<Vec<LatticePoint>> {
    let t = s.trim();
    if !t.starts_with('[') || !t.ends_with(']') {
        return Err(perr(line, format!("expected a list of vectors, got `{}`", t)));
    }
    let inner = t[1..t.len() - 1].trim();
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for part in split_top(inner, ',') {
        let v = parse_int_list(&part, line)?;
        if v.len() != dim {
            return Err(perr(
                line,
                format!("vector `{}` has length {}, expected {}", part, v.len(), dim),
            ));
        }
        out.push(LatticePoint(v));
    }
    Ok(out)
}

fn strip_parens(s: &str) -> &str {
    let t = s.trim();
    if t.starts_with('(') && t.ends_with(')') {
        // only strip when the parens match each other
        let mut depth = 0i32;
        for (i, ch) in t.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 && i + 1 < t.len() {
                        return t;
                    }
                }
                _ => {}
            }
        }
        return t[1..t.len() - 1].trim();
    }
    t
}

/// One element term: `coef`, `coef * x^[v]`, `x^[v]`, with optional `* e[s]`.
fn parse_term(
    term: &str,
    p: u32,
    ambient: usize,
    line: usize,
) -> Result<(LatticePoint, LatticePoint, Fp)> {
    let mut coef = Fp::one(p);
    let mut have_any = false;
    let mut u: Option<Vec<i64>> = None;
    let mut s_idx: Option<Vec<i64>> = None;
    for factor in split_top(term, '*') {
        let f = factor.trim();
        if f.is_empty() {
            return Err(perr(line, format!("empty factor in term `{}`", term)));
        }
        have_any = true;
        if let Some(rest) = f.strip_prefix("x^") {
            if u.is_some() {
                return Err(perr(line, format!("two exponent parts in `{}`", term)));
            }
            let v = parse_int_list(rest, line)?;
            if v.len() != ambient {
                return Err(perr(
                    line,
                    format!("exponent has length {}, expected {}", v.len(), ambient),
                ));
            }
            u = Some(v);
        } else if let Some(rest) = f.strip_prefix('e') {
            if rest.trim_start().starts_with('[') {
                if s_idx.is_some() {
                    return Err(perr(line, format!("two index parts in `{}`", term)));
                }
                let v = parse_int_list(rest.trim_start(), line)?;
                if v.len() != ambient {
                    return Err(perr(
                        line,
                        format!("index has length {}, expected {}", v.len(), ambient),
                    ));
                }
                s_idx = Some(v);
            } else {
                return Err(perr(line, format!("unrecognized factor `{}`", f)));
            }
        } else if let Ok(c) = f.parse::<i64>() {
            coef = coef * Fp::new(c, p);
        } else {
            return Err(perr(line, format!("unrecognized factor `{}`", f)));
        }
    }
    if !have_any {
        return Err(perr(line, "empty element term"));
    }
    Ok((
        LatticePoint(u.unwrap_or_else(|| vec![0; ambient])),
        LatticePoint(s_idx.unwrap_or_else(|| vec![0; ambient])),
        coef,
    ))
}

/// Parse an indexed element: a sum of terms with optional `e[..]` parts.
pub fn parse_graded(s: &str, p: u32, ambient: usize, line: usize) -> Result<GradedElt> {
    let body = strip_parens(s);
    if body == "0" {
        return Ok(GradedElt::zero(p, ambient));
    }
    let mut out = GradedElt::zero(p, ambient);
    for term in split_top(body, '+') {
        if term.is_empty() {
            return Err(perr(line, "empty term in element sum"));
        }
        let (u, si, c) = parse_term(&term, p, ambient, line)?;
        out = out.add(&GradedElt::monomial(p, ambient, u, si, c));
    }
    Ok(out)
}

/// Parse a plain function: like `parse_graded` but any `e[..]` index other
/// than zero is rejected.
pub fn parse_alg(s: &str, p: u32, ambient: usize, line: usize) -> Result<AlgElt> {
    let g = parse_graded(s, p, ambient, line)?;
    let zero_idx = LatticePoint(vec![0; ambient]);
    let mut out = AlgElt::zero(p, ambient);
    for (idx, coeff) in g.parts() {
        if *idx != zero_idx {
            return Err(perr(
                line,
                "a plain function cannot carry an e[..] index part",
            ));
        }
        out = out.add(coeff);
    }
    Ok(out)
}

/// Parse an operator literal: a sum of `f * D^[i1,...,ir]` terms, with the
/// coefficient optional (default 1) and possibly parenthesized. The basis
/// tag decides whether `D^[..]` names the multiplicative dual basis or the
/// iterated-derivation basis.
pub fn parse_operator(
    s: &str,
    chart: &Chart,
    order_bound: u32,
    basis: BasisTag,
    line: usize,
) -> Result<PDOp> {
    let p = chart.p;
    let r = chart.r();
    let mut op = PDOp::zero(chart, order_bound, basis);
    for term in split_top(s.trim(), '+') {
        if term.is_empty() {
            return Err(perr(line, "empty operator term"));
        }
        // find a top-level `D^[` factor
        let factors = split_top(&term, '*');
        let mut coef_parts: Vec<String> = Vec::new();
        let mut midx: Option<MIdx> = None;
        for f in factors {
            let ft = f.trim();
            if let Some(rest) = ft.strip_prefix("D^") {
                if midx.is_some() {
                    return Err(perr(line, format!("two D parts in `{}`", term)));
                }
                let v = parse_int_list(rest, line)?;
                if v.len() != r {
                    return Err(perr(
                        line,
                        format!("D exponent has length {}, expected {}", v.len(), r),
                    ));
                }
                if v.iter().any(|&x| x < 0) {
                    return Err(perr(line, "D exponents must be nonnegative"));
                }
                midx = Some(MIdx(v.iter().map(|&x| x as u32).collect()));
            } else {
                coef_parts.push(ft.to_string());
            }
        }
        let coef_src = if coef_parts.is_empty() {
            "1".to_string()
        } else {
            coef_parts.join(" * ")
        };
        let coef = parse_graded(&coef_src, p, chart.ambient, line)?;
        let n = midx.unwrap_or_else(|| MIdx(vec![0; r]));
        if n.order() > order_bound {
            return Err(LcError::OrderOverflow {
                bound: order_bound as u16,
                index: format!("{}", n),
            });
        }
        op = op.add(&PDOp::with_term(chart, n, coef, order_bound, basis)?)?;
    }
    Ok(op)
}

/// Parse a 1-form literal: a sum of `f * dlog[k]` terms with one-based k.
pub fn parse_form(s: &str, chart: &Chart, line: usize) -> Result<Form1> {
    let mut form = Form1::zero(chart);
    for term in split_top(s.trim(), '+') {
        if term.is_empty() {
            return Err(perr(line, "empty form term"));
        }
        let factors = split_top(&term, '*');
        let mut coef_parts: Vec<String> = Vec::new();
        let mut slot: Option<usize> = None;
        for f in factors {
            let ft = f.trim();
            if let Some(rest) = ft.strip_prefix("dlog") {
                if slot.is_some() {
                    return Err(perr(line, format!("two dlog parts in `{}`", term)));
                }
                let v = parse_int_list(rest, line)?;
                if v.len() != 1 || v[0] < 1 || v[0] as usize > chart.r() {
                    return Err(perr(
                        line,
                        format!("dlog index must be a single 1..{} value", chart.r()),
                    ));
                }
                slot = Some(v[0] as usize - 1);
            } else {
                coef_parts.push(ft.to_string());
            }
        }
        let k = slot.ok_or_else(|| perr(line, format!("form term `{}` lacks dlog[..]", term)))?;
        let coef_src = if coef_parts.is_empty() {
            "1".to_string()
        } else {
            coef_parts.join(" * ")
        };
        let coef = parse_alg(&coef_src, chart.p, chart.ambient, line)?;
        form.comps[k] = form.comps[k].add(&coef);
    }
    Ok(form)
}

/// Parse `[element-literal, element-literal, ...]` (plain functions).
pub fn parse_alg_list(s: &str, p: u32, ambient: usize, line: usize) -> Result<Vec<AlgElt>> {
    let t = s.trim();
    if !t.starts_with('[') || !t.ends_with(']') {
        return Err(perr(line, "expected a bracketed list of elements"));
    }
    let inner = t[1..t.len() - 1].trim();
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    split_top(inner, ',')
        .iter()
        .map(|part| parse_alg(part, p, ambient, line))
        .collect()
}

/// Parse one `(i, j, element-literal)` matrix entry; indices one-based.
pub fn parse_matrix_entry(
    s: &str,
    p: u32,
    ambient: usize,
    line: usize,
) -> Result<(usize, usize, AlgElt)> {
    let t = s.trim();
    if !t.starts_with('(') || !t.ends_with(')') {
        return Err(perr(line, format!("expected `(i, j, element)`, got `{}`", t)));
    }
    let parts = split_top(&t[1..t.len() - 1], ',');
    if parts.len() != 3 {
        return Err(perr(line, "matrix entry needs exactly (i, j, element)"));
    }
    let i = parts[0]
        .parse::<usize>()
        .map_err(|_| perr(line, format!("bad row index `{}`", parts[0])))?;
    let j = parts[1]
        .parse::<usize>()
        .map_err(|_| perr(line, format!("bad column index `{}`", parts[1])))?;
    if i == 0 || j == 0 {
        return Err(perr(line, "matrix indices are one-based"));
    }
    let e = parse_alg(&parts[2], p, ambient, line)?;
    Ok((i - 1, j - 1, e))
}
