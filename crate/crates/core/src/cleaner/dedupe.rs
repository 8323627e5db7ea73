//! Learnable row dissimilarity and duplicate/inconsistency resolution.
//!
//! Dissimilarities live in [0, 1] with 0 meaning identical. A pair of rows
//! whose every attribute is within `r1` is a near-duplicate whose differing
//! string values get canonicalized; rows within `rn` of each other collapse
//! to the lowest-index representative.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::CleanerError;
use crate::tabular::{CellValue, Dataset, VariableType};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AttributeDistance {
    /// Levenshtein distance over characters divided by the longer length.
    Edit,
    /// 0 when equal, 1 otherwise.
    Mismatch,
    /// Absolute difference divided by the column range, capped at 1.
    Scaled { range: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityModel {
    pub attributes: Vec<String>,
    pub kinds: Vec<AttributeDistance>,
    /// Non-negative, summing to 1.
    pub weights: Vec<f64>,
    pub r1: f64,
    pub rn: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub a: usize,
    pub b: usize,
    pub similar: bool,
}

pub fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.chars().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != *cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn normalized_edit_distance(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        0.0
    } else {
        edit_distance(a, b) as f64 / longest as f64
    }
}

fn distance_kind(d: &Dataset, column: usize) -> AttributeDistance {
    let c = &d.columns()[column];
    match c.vtype() {
        VariableType::Text => AttributeDistance::Edit,
        VariableType::ContinuousNumeric | VariableType::DateTime => {
            let xs = c.observed_numbers();
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            AttributeDistance::Scaled {
                range: if hi > lo { hi - lo } else { 0.0 },
            }
        }
        _ => AttributeDistance::Mismatch,
    }
}

fn cell_distance(kind: AttributeDistance, a: &CellValue, b: &CellValue) -> f64 {
    match (a.is_missing(), b.is_missing()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return 1.0,
        _ => {}
    }
    match kind {
        AttributeDistance::Edit => normalized_edit_distance(&a.render(), &b.render()),
        AttributeDistance::Mismatch => f64::from(u8::from(a.render() != b.render())),
        AttributeDistance::Scaled { range } => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) if range > 0.0 => ((x - y).abs() / range).min(1.0),
            (Some(x), Some(y)) => f64::from(u8::from(x != y)),
            _ => f64::from(u8::from(a.render() != b.render())),
        },
    }
}

impl SimilarityModel {
    /// Equal weights over `attributes` (all columns when empty) with the
    /// given thresholds.
    pub fn uniform(d: &Dataset, attributes: &[String], r1: f64, rn: f64) -> Result<Self, CleanerError> {
        let attributes: Vec<String> = if attributes.is_empty() {
            d.column_names().iter().map(|s| s.to_string()).collect()
        } else {
            attributes.to_vec()
        };
        let idx = resolve(d, &attributes)?;
        let kinds = idx.iter().map(|&j| distance_kind(d, j)).collect();
        let w = 1.0 / attributes.len().max(1) as f64;
        Ok(SimilarityModel {
            weights: vec![w; attributes.len()],
            attributes,
            kinds,
            r1: r1.clamp(0.0, 1.0),
            rn: rn.clamp(0.0, 1.0),
        })
    }

    /// Per-attribute dissimilarities between rows `a` and `b`.
    pub fn components(&self, d: &Dataset, a: usize, b: usize) -> Result<Vec<f64>, CleanerError> {
        let idx = resolve(d, &self.attributes)?;
        Ok(self.components_at(d, &idx, a, b))
    }

    fn components_at(&self, d: &Dataset, idx: &[usize], a: usize, b: usize) -> Vec<f64> {
        idx.iter()
            .zip(&self.kinds)
            .map(|(&j, &k)| cell_distance(k, d.cell(a, j), d.cell(b, j)))
            .collect()
    }

    fn combine(&self, components: &[f64]) -> f64 {
        components.iter().zip(&self.weights).map(|(c, w)| c * w).sum::<f64>().clamp(0.0, 1.0)
    }

    pub fn row_distance(&self, d: &Dataset, a: usize, b: usize) -> Result<f64, CleanerError> {
        Ok(self.combine(&self.components(d, a, b)?))
    }
}

fn resolve(d: &Dataset, attributes: &[String]) -> Result<Vec<usize>, CleanerError> {
    attributes
        .iter()
        .map(|a| d.column_index(a).ok_or_else(|| CleanerError::UnknownAttribute(a.clone())))
        .collect()
}

/// Threshold between the two classes of distances: the midpoint of the gap
/// when they separate, else the midpoint of the class medians.
fn threshold(similar: &[f64], dissimilar: &[f64]) -> f64 {
    let hi_sim = similar.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo_dis = dissimilar.iter().copied().fold(f64::INFINITY, f64::min);
    let t = if hi_sim < lo_dis {
        (hi_sim + lo_dis) / 2.0
    } else {
        (crate::stats::median(similar) + crate::stats::median(dissimilar)) / 2.0
    };
    t.clamp(0.0, 1.0)
}

/// Fits attribute weights by logistic regression of "dissimilar" on the
/// per-attribute distances of labeled row pairs. Negative coefficients are
/// clipped to zero before normalizing. `rn` separates the weighted row
/// distances of the two classes; `r1` separates the largest attribute
/// distance inside similar pairs from the largest attribute distance of
/// each dissimilar pair.
pub fn learn_similarity(
    d: &Dataset,
    attributes: &[String],
    pairs: &[LabeledPair],
) -> Result<SimilarityModel, CleanerError> {
    let mut model = SimilarityModel::uniform(d, attributes, 0.0, 0.0)?;
    if !pairs.iter().any(|p| p.similar) || !pairs.iter().any(|p| !p.similar) {
        return Err(CleanerError::SingleClassPairs);
    }
    for p in pairs {
        for r in [p.a, p.b] {
            if r >= d.row_count() {
                return Err(CleanerError::Tabular(crate::tabular::TabularError::IndexOutOfRange {
                    index: r,
                    row_count: d.row_count(),
                }));
            }
        }
    }
    let idx = resolve(d, &model.attributes)?;
    let xs: Vec<Vec<f64>> = pairs.iter().map(|p| model.components_at(d, &idx, p.a, p.b)).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| if p.similar { 0.0 } else { 1.0 }).collect();

    let m = model.attributes.len();
    let (mut w, mut b) = (vec![0.0; m], 0.0);
    let lr = 0.5;
    let l2 = 1e-4;
    for _ in 0..5000 {
        let mut gw = vec![0.0; m];
        let mut gb = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            let z: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
            let err = 1.0 / (1.0 + (-z).exp()) - y;
            for (g, xi) in gw.iter_mut().zip(x) {
                *g += err * xi;
            }
            gb += err;
        }
        let n = xs.len() as f64;
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= lr * (g / n + l2 * *wi);
        }
        b -= lr * gb / n;
    }
    let clipped: Vec<f64> = w.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    model.weights = if total > 0.0 {
        clipped.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / m as f64; m]
    };

    let (mut row_sim, mut row_dis, mut attr_sim, mut attr_dis) = (vec![], vec![], vec![], vec![]);
    for (x, p) in xs.iter().zip(pairs) {
        let row = model.combine(x);
        let worst = x.iter().copied().fold(0.0, f64::max);
        if p.similar {
            row_sim.push(row);
            attr_sim.push(worst);
        } else {
            row_dis.push(row);
            attr_dis.push(worst);
        }
    }
    model.rn = threshold(&row_sim, &row_dis);
    model.r1 = threshold(&attr_sim, &attr_dis);
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Blocking {
    /// Compare rows adjacent within `window` positions when sorted by each
    /// attribute in turn.
    SortedNeighborhood { window: usize },
    AllPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupeConfig {
    pub blocking: Blocking,
}

impl Default for DedupeConfig {
    fn default() -> Self {
        DedupeConfig {
            blocking: Blocking::SortedNeighborhood { window: 10 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum MergeEntry {
    Substitute {
        row_id: usize,
        column: String,
        from: String,
        to: String,
        distance: f64,
    },
    Remove {
        row_id: usize,
        kept_row_id: usize,
        distance: f64,
    },
}

fn candidate_pairs(d: &Dataset, idx: &[usize], blocking: Blocking) -> BTreeSet<(usize, usize)> {
    let n = d.row_count();
    let mut pairs = BTreeSet::new();
    match blocking {
        Blocking::AllPairs => {
            for a in 0..n {
                for b in (a + 1)..n {
                    pairs.insert((a, b));
                }
            }
        }
        Blocking::SortedNeighborhood { window } => {
            for &j in idx {
                let keys: Vec<String> = (0..n).map(|r| d.cell(r, j).render()).collect();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));
                for (p, &a) in order.iter().enumerate() {
                    for &b in order.iter().skip(p + 1).take(window.max(1)) {
                        pairs.insert((a.min(b), a.max(b)));
                    }
                }
            }
            // identical rows always meet, however long their run of ties
            let mut groups: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
            for r in 0..n {
                let key = idx.iter().map(|&j| d.cell(r, j).render()).collect();
                groups.entry(key).or_default().push(r);
            }
            for g in groups.values() {
                for w in g.windows(2) {
                    pairs.insert((w[0], w[1]));
                }
            }
        }
    }
    pairs
}

/// One round: canonicalize near-duplicate values, then collapse duplicate
/// rows. Returns `None` when nothing changed.
fn dedupe_round(
    d: &Dataset,
    model: &SimilarityModel,
    idx: &[usize],
    cfg: &DedupeConfig,
    log: &mut Vec<MergeEntry>,
) -> Result<Option<Dataset>, CleanerError> {
    let pairs = candidate_pairs(d, idx, cfg.blocking);
    let ids = d.row_ids();
    let mut changed = false;

    // frequencies of string variants, fixed for the round
    let freq: Vec<HashMap<String, usize>> = idx
        .iter()
        .map(|&j| {
            let mut m = HashMap::new();
            for c in d.columns()[j].cells() {
                *m.entry(c.render()).or_insert(0) += 1;
            }
            m
        })
        .collect();
    let mut cells: Vec<Vec<CellValue>> = idx.iter().map(|&j| d.columns()[j].cells().to_vec()).collect();
    for &(a, b) in &pairs {
        let comps: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(k, _)| cell_distance(model.kinds[k], &cells[k][a], &cells[k][b]))
            .collect();
        if comps.iter().any(|&c| c > model.r1) {
            continue;
        }
        for (k, &dist) in comps.iter().enumerate() {
            let (va, vb) = (&cells[k][a], &cells[k][b]);
            if dist == 0.0 || va.as_str().is_none() || vb.as_str().is_none() {
                continue;
            }
            let (sa, sb) = (va.render(), vb.render());
            let (fa, fb) = (freq[k][&sa], freq[k][&sb]);
            let a_wins = fa > fb || (fa == fb && sa < sb);
            let (target, from, to) = if a_wins { (b, sb, sa) } else { (a, sa, sb) };
            cells[k][target] = cells[k][if a_wins { a } else { b }].clone();
            log.push(MergeEntry::Substitute {
                row_id: ids[target],
                column: model.attributes[k].clone(),
                from,
                to,
                distance: dist,
            });
            changed = true;
        }
    }
    let mut current = d.clone();
    if changed {
        let mut cols = d.columns().to_vec();
        for (k, &j) in idx.iter().enumerate() {
            cols[j] = cols[j].with_cells(std::mem::take(&mut cells[k]));
        }
        current = d.with_columns(cols)?;
    }

    // union-find over rows within rn
    let n = current.row_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    let mut link: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    let pairs = if changed { candidate_pairs(&current, idx, cfg.blocking) } else { pairs };
    for &(a, b) in &pairs {
        let dist = model.combine(&model.components_at(&current, idx, a, b));
        if dist <= model.rn {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                let (lo, hi) = (ra.min(rb), ra.max(rb));
                parent[hi] = lo;
            }
            link.entry(b).or_insert((a, dist));
        }
    }
    let mut remove = BTreeSet::new();
    for r in 0..n {
        let root = find(&mut parent, r);
        if root != r {
            remove.insert(r);
            let distance = link.get(&r).map_or(0.0, |x| x.1);
            log.push(MergeEntry::Remove {
                row_id: current.row_ids()[r],
                kept_row_id: current.row_ids()[root],
                distance,
            });
        }
    }
    if remove.is_empty() {
        return Ok(changed.then_some(current));
    }
    Ok(Some(current.drop_rows(&remove)?.0))
}

/// Repairs inconsistent values and removes duplicate rows, repeating until
/// a round changes nothing. The merge log lists every substitution and
/// removal by stable row id.
pub fn dedupe(
    d: &Dataset,
    model: &SimilarityModel,
    cfg: &DedupeConfig,
) -> Result<(Dataset, Vec<MergeEntry>), CleanerError> {
    let idx = resolve(d, &model.attributes)?;
    let mut log = Vec::new();
    let mut current = d.clone();
    while let Some(next) = dedupe_round(&current, model, &idx, cfg, &mut log)? {
        current = next;
    }
    Ok((current, log))
}

/// Re-applies a merge log to the dataset it was produced from.
pub fn replay_merge_log(d: &Dataset, log: &[MergeEntry]) -> Result<Dataset, CleanerError> {
    let mut current = d.clone();
    let position = |d: &Dataset, id: usize| {
        d.row_ids()
            .iter()
            .position(|&r| r == id)
            .ok_or(CleanerError::InvalidParameter(format!("row id {id} not present")))
    };
    for e in log {
        match e {
            MergeEntry::Substitute { row_id, column, to, .. } => {
                let pos = position(&current, *row_id)?;
                let col = current.column(column)?;
                let source = col
                    .cells()
                    .iter()
                    .find(|c| c.render() == *to)
                    .cloned()
                    .unwrap_or_else(|| CellValue::category(to));
                let mut cells = col.cells().to_vec();
                cells[pos] = source;
                let col = col.with_cells(cells);
                current = current.replace_column(col)?;
            }
            MergeEntry::Remove { row_id, .. } => {
                let pos = position(&current, *row_id)?;
                current = current.drop_rows(&BTreeSet::from([pos]))?.0;
            }
        }
    }
    Ok(current)
}
