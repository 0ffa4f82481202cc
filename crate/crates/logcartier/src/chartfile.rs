//! Chart description files: structured key-value text with the chart fields
//! `p`, `ambient_rank`, `P_generators`, `Q_generators`, `log_coords`,
//! followed by any number of named `[module ...]` and `[splitting ...]`
//! blocks so worked examples stay self-contained in one file.

use crate::cartier::{make_splitting, Splitting};
use crate::chart::Chart;
use crate::connection::MatAlg;
use crate::error::{LcError, Result};
use crate::literal::{parse_alg_list, parse_matrix_entry, parse_vector_list, split_top};
use crate::monalg::AlgElt;
use std::collections::BTreeMap;

/// A named matrix family from a `[module ...]` block: interpreted as a
/// connection or a Higgs field by the operation that uses it.
#[derive(Clone, Debug)]
pub struct ModuleBlock {
    pub rank: usize,
    pub matrices: Vec<MatAlg>,
}

#[derive(Debug)]
pub struct ChartFile {
    pub chart: Chart,
    pub modules: BTreeMap<String, ModuleBlock>,
    pub splittings: BTreeMap<String, Vec<AlgElt>>,
}

impl ChartFile {
    pub fn module(&self, name: &str) -> Result<&ModuleBlock> {
        self.modules.get(name).ok_or_else(|| {
            LcError::Other(format!(
                "no module block named `{}` (available: {})",
                name,
                self.names(&self.modules)
            ))
        })
    }

    pub fn splitting(&self, name: &str) -> Result<Splitting> {
        let bs = self.splittings.get(name).ok_or_else(|| {
            LcError::Other(format!(
                "no splitting block named `{}` (available: {})",
                name,
                self.names(&self.splittings)
            ))
        })?;
        make_splitting(&self.chart, bs.clone())
    }

    fn names<T>(&self, map: &BTreeMap<String, T>) -> String {
        if map.is_empty() {
            "none".to_string()
        } else {
            map.keys().cloned().collect::<Vec<_>>().join(", ")
        }
    }
}

fn perr(line: usize, msg: impl Into<String>) -> LcError {
    LcError::Parse {
        line,
        msg: msg.into(),
    }
}

struct PendingModule {
    name: String,
    start: usize,
    rank: Option<usize>,
    /// (line, k, i, j, value)
    entries: Vec<(usize, usize, usize, usize, AlgElt)>,
    /// (line, k) for every matrix[k] key seen, including empty lists
    seen_k: Vec<(usize, usize)>,
}

enum Section {
    Header,
    Module(PendingModule),
    Splitting(String),
}

/// Parse a chart file. The chart fields must precede all blocks; every
/// diagnostic names the first offending field with its line.
pub fn parse_chart_file(text: &str) -> Result<ChartFile> {
    let mut p_val: Option<(u32, usize)> = None;
    let mut ambient: Option<(usize, usize)> = None;
    let mut p_gens: Option<(String, usize)> = None;
    let mut q_gens: Option<(String, usize)> = None;
    let mut coords: Option<(String, usize)> = None;
    let mut chart: Option<Chart> = None;
    let mut modules: BTreeMap<String, ModuleBlock> = BTreeMap::new();
    let mut splittings: BTreeMap<String, Vec<AlgElt>> = BTreeMap::new();
    let mut section = Section::Header;

    // build the chart once the header is complete
    let build_chart = |p_val: &Option<(u32, usize)>,
                       ambient: &Option<(usize, usize)>,
                       p_gens: &Option<(String, usize)>,
                       q_gens: &Option<(String, usize)>,
                       coords: &Option<(String, usize)>|
     -> Result<Chart> {
        let (p, p_line) = p_val.ok_or_else(|| perr(1, "missing field `p`"))?;
        let (n, _) = ambient.ok_or_else(|| perr(p_line, "missing field `ambient_rank`"))?;
        let (pg, pg_line) = p_gens
            .as_ref()
            .ok_or_else(|| perr(p_line, "missing field `P_generators`"))?;
        let (qg, qg_line) = q_gens
            .as_ref()
            .ok_or_else(|| perr(p_line, "missing field `Q_generators`"))?;
        let (lc, lc_line) = coords
            .as_ref()
            .ok_or_else(|| perr(p_line, "missing field `log_coords`"))?;
        let pg_v = parse_vector_list(pg, n, *pg_line)?;
        let qg_v = parse_vector_list(qg, n, *qg_line)?;
        let lc_v = parse_vector_list(lc, n, *lc_line)?;
        Chart::new(p, n, pg_v, qg_v, lc_v).map_err(|e| {
            let msg = format!("{}", e);
            let (field, line) = if msg.contains("torsion") {
                ("Q_generators", *qg_line)
            } else if msg.contains("pointed") || msg.contains("grading") {
                ("P_generators", *pg_line)
            } else if msg.contains("coord") || msg.contains("basis") || msg.contains("log") {
                ("log_coords", *lc_line)
            } else {
                ("p", p_line)
            };
            perr(line, format!("{}: {}", field, msg))
        })
    };

    let finish_module = |pm: PendingModule, chart: &Chart| -> Result<(String, ModuleBlock)> {
        let rank = pm
            .rank
            .ok_or_else(|| perr(pm.start, format!("module `{}` lacks `rank`", pm.name)))?;
        for &(line, k) in &pm.seen_k {
            if k == 0 || k > chart.r() {
                return Err(perr(
                    line,
                    format!("matrix index must be 1..{}", chart.r()),
                ));
            }
        }
        let mut mats = vec![MatAlg::zero(rank, chart.p, chart.ambient); chart.r()];
        for (line, k, i, j, v) in pm.entries {
            if i >= rank || j >= rank {
                return Err(perr(
                    line,
                    format!("entry ({}, {}) outside a rank-{} matrix", i + 1, j + 1, rank),
                ));
            }
            let e = mats[k - 1].get(i, j).add(&v);
            mats[k - 1].set(i, j, e);
        }
        Ok((pm.name, ModuleBlock {
            rank,
            matrices: mats,
        }))
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            // close any open module
            if let Section::Module(pm) =
                std::mem::replace(&mut section, Section::Header)
            {
                let c = chart.as_ref().expect("chart built before blocks");
                let (name, block) = finish_module(pm, c)?;
                modules.insert(name, block);
            }
            if chart.is_none() {
                chart = Some(build_chart(&p_val, &ambient, &p_gens, &q_gens, &coords)?);
            }
            let inner = line[1..line.len() - 1].trim();
            let mut words = inner.split_whitespace();
            let kind = words.next().unwrap_or("");
            let name = words.collect::<Vec<_>>().join(" ");
            if name.is_empty() {
                return Err(perr(line_no, "block header needs a name"));
            }
            section = match kind {
                "module" => Section::Module(PendingModule {
                    name,
                    start: line_no,
                    rank: None,
                    entries: Vec::new(),
                    seen_k: Vec::new(),
                }),
                "splitting" => Section::Splitting(name),
                other => {
                    return Err(perr(
                        line_no,
                        format!("unknown block kind `{}` (module | splitting)", other),
                    ))
                }
            };
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => return Err(perr(line_no, format!("expected `key = value`, got `{}`", line))),
        };
        match &mut section {
            Section::Header => match key {
                "p" => {
                    let v: u32 = value
                        .parse()
                        .map_err(|_| perr(line_no, format!("bad prime `{}`", value)))?;
                    p_val = Some((v, line_no));
                }
                "ambient_rank" => {
                    let v: usize = value
                        .parse()
                        .map_err(|_| perr(line_no, format!("bad rank `{}`", value)))?;
                    ambient = Some((v, line_no));
                }
                "P_generators" => p_gens = Some((value.to_string(), line_no)),
                "Q_generators" => q_gens = Some((value.to_string(), line_no)),
                "log_coords" => coords = Some((value.to_string(), line_no)),
                other => {
                    return Err(perr(line_no, format!("unknown chart field `{}`", other)))
                }
            },
            Section::Module(pm) => {
                let c = chart.as_ref().expect("chart built before blocks");
                if key == "rank" {
                    let v: usize = value
                        .parse()
                        .map_err(|_| perr(line_no, format!("bad rank `{}`", value)))?;
                    pm.rank = Some(v);
                } else if let Some(rest) = key.strip_prefix("matrix[") {
                    let kstr = rest.strip_suffix(']').ok_or_else(|| {
                        perr(line_no, format!("malformed key `{}`", key))
                    })?;
                    let k: usize = kstr
                        .parse()
                        .map_err(|_| perr(line_no, format!("bad matrix index `{}`", kstr)))?;
                    let t = value.trim();
                    if !t.starts_with('[') || !t.ends_with(']') {
                        return Err(perr(line_no, "expected a list of (i, j, element) entries"));
                    }
                    let inner = t[1..t.len() - 1].trim();
                    pm.seen_k.push((line_no, k));
                    if !inner.is_empty() {
                        for part in split_top(inner, ',') {
                            let (i, j, e) =
                                parse_matrix_entry(&part, c.p, c.ambient, line_no)?;
                            pm.entries.push((line_no, k, i, j, e));
                        }
                    }
                } else {
                    return Err(perr(line_no, format!("unknown module field `{}`", key)));
                }
            }
            Section::Splitting(name) => {
                let c = chart.as_ref().expect("chart built before blocks");
                if key == "zeta.b" {
                    let bs = parse_alg_list(value, c.p, c.ambient, line_no)?;
                    if bs.len() != c.r() {
                        return Err(perr(
                            line_no,
                            format!("zeta.b needs {} entries, got {}", c.r(), bs.len()),
                        ));
                    }
                    splittings.insert(name.clone(), bs);
                } else {
                    return Err(perr(line_no, format!("unknown splitting field `{}`", key)));
                }
            }
        }
    }
    if let Section::Module(pm) = section {
        let c = match &chart {
            Some(c) => c,
            None => {
                chart = Some(build_chart(&p_val, &ambient, &p_gens, &q_gens, &coords)?);
                chart.as_ref().unwrap()
            }
        };
        let (name, block) = finish_module(pm, c)?;
        modules.insert(name, block);
    }
    let chart = match chart {
        Some(c) => c,
        None => build_chart(&p_val, &ambient, &p_gens, &q_gens, &coords)?,
    };
    Ok(ChartFile {
        chart,
        modules,
        splittings,
    })
}
