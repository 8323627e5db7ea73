//! Frequent itemsets and single-consequent association rules.
//!
//! Both miners produce itemset counts; rule generation is shared, so the two
//! entry points return identical rule lists whenever their itemsets agree.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::MinerError;
use crate::tabular::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub min_support: f64,
    pub min_confidence: f64,
    /// Largest itemset size to enumerate; `None` is unbounded.
    #[serde(default)]
    pub max_len: Option<usize>,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            min_support: 0.1,
            min_confidence: 0.8,
            max_len: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequentItemset {
    /// Sorted item names.
    pub items: Vec<String>,
    pub count: usize,
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: Vec<String>,
    pub consequent: Vec<String>,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

/// Items interned to ids in name order, so sorted id vectors are sorted
/// name vectors too.
struct Encoded {
    names: Vec<String>,
    transactions: Vec<Vec<u32>>,
}

fn encode(transactions: &[Vec<String>]) -> Encoded {
    let names: Vec<String> = transactions
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, u32> = names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i as u32))
        .collect();
    let transactions = transactions
        .iter()
        .map(|t| {
            let mut ids: Vec<u32> = t.iter().map(|s| index[s.as_str()]).collect();
            ids.sort_unstable();
            ids.dedup();
            ids
        })
        .collect();
    Encoded {
        names,
        transactions,
    }
}

fn check(transactions: &[Vec<String>], cfg: &MiningConfig) -> Result<(), MinerError> {
    if transactions.is_empty() {
        return Err(MinerError::EmptyTransactions);
    }
    for (name, value) in [
        ("min_support", cfg.min_support),
        ("min_confidence", cfg.min_confidence),
    ] {
        if !(value > 0.0 && value <= 1.0) {
            return Err(MinerError::InvalidThreshold { name, value });
        }
    }
    Ok(())
}

/// Smallest count whose support `count / n` reaches `min_support`.
fn min_count(n: usize, min_support: f64) -> usize {
    (0..=n)
        .find(|&c| c as f64 / n as f64 >= min_support)
        .unwrap_or(n + 1)
}

type Counts = BTreeMap<Vec<u32>, usize>;

fn apriori_counts(e: &Encoded, min: usize, max_len: usize) -> Counts {
    let mut all = Counts::new();
    let mut singles: BTreeMap<u32, usize> = BTreeMap::new();
    for t in &e.transactions {
        for &i in t {
            *singles.entry(i).or_default() += 1;
        }
    }
    let mut level: Vec<Vec<u32>> = Vec::new();
    for (i, c) in singles {
        if c >= min {
            all.insert(vec![i], c);
            level.push(vec![i]);
        }
    }
    let mut k = 1;
    while !level.is_empty() && k < max_len {
        // join step: sets sharing their first k-1 items
        let prev: BTreeSet<&Vec<u32>> = level.iter().collect();
        let mut candidates = Vec::new();
        for (a_idx, a) in level.iter().enumerate() {
            for b in &level[a_idx + 1..] {
                if a[..k - 1] != b[..k - 1] {
                    break;
                }
                let mut c = a.clone();
                c.push(b[k - 1]);
                // prune step: every k-subset must be frequent
                let closed = (0..c.len()).all(|drop| {
                    let sub: Vec<u32> = c
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != drop)
                        .map(|(_, x)| *x)
                        .collect();
                    prev.contains(&sub)
                });
                if closed {
                    candidates.push(c);
                }
            }
        }
        let mut counts = vec![0usize; candidates.len()];
        for t in &e.transactions {
            if t.len() <= k {
                continue;
            }
            for (ci, c) in candidates.iter().enumerate() {
                if is_subset(c, t) {
                    counts[ci] += 1;
                }
            }
        }
        level = Vec::new();
        for (c, n) in candidates.into_iter().zip(counts) {
            if n >= min {
                all.insert(c.clone(), n);
                level.push(c);
            }
        }
        k += 1;
    }
    all
}

/// Both slices sorted ascending.
fn is_subset(small: &[u32], big: &[u32]) -> bool {
    let mut j = 0;
    for &x in small {
        while j < big.len() && big[j] < x {
            j += 1;
        }
        if j == big.len() || big[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

struct FpNode {
    item: u32,
    count: usize,
    parent: usize,
    children: Vec<usize>,
}

/// Arena-backed FP-tree; node 0 is the root.
struct FpTree {
    nodes: Vec<FpNode>,
    /// item → nodes holding it
    header: BTreeMap<u32, Vec<usize>>,
}

impl FpTree {
    fn build(weighted: &[(Vec<u32>, usize)], min: usize) -> FpTree {
        let mut freq: HashMap<u32, usize> = HashMap::new();
        for (t, w) in weighted {
            for &i in t {
                *freq.entry(i).or_default() += w;
            }
        }
        let mut tree = FpTree {
            nodes: vec![FpNode {
                item: u32::MAX,
                count: 0,
                parent: 0,
                children: Vec::new(),
            }],
            header: BTreeMap::new(),
        };
        for (t, w) in weighted {
            let mut path: Vec<u32> = t.iter().copied().filter(|i| freq[i] >= min).collect();
            // descending frequency, ties by id
            path.sort_by(|a, b| freq[b].cmp(&freq[a]).then(a.cmp(b)));
            let mut cur = 0;
            for item in path {
                let found = tree.nodes[cur]
                    .children
                    .iter()
                    .copied()
                    .find(|&c| tree.nodes[c].item == item);
                cur = match found {
                    Some(c) => c,
                    None => {
                        let id = tree.nodes.len();
                        tree.nodes.push(FpNode {
                            item,
                            count: 0,
                            parent: cur,
                            children: Vec::new(),
                        });
                        tree.nodes[cur].children.push(id);
                        tree.header.entry(item).or_default().push(id);
                        id
                    }
                };
                tree.nodes[cur].count += w;
            }
        }
        tree
    }

    fn mine(&self, suffix: &[u32], min: usize, max_len: usize, out: &mut Counts) {
        for (&item, nodes) in &self.header {
            let count: usize = nodes.iter().map(|&n| self.nodes[n].count).sum();
            if count < min {
                continue;
            }
            let mut set = suffix.to_vec();
            set.push(item);
            set.sort_unstable();
            out.insert(set.clone(), count);
            if set.len() >= max_len {
                continue;
            }
            let mut base = Vec::new();
            for &n in nodes {
                let mut prefix = Vec::new();
                let mut p = self.nodes[n].parent;
                while p != 0 {
                    prefix.push(self.nodes[p].item);
                    p = self.nodes[p].parent;
                }
                if !prefix.is_empty() {
                    base.push((prefix, self.nodes[n].count));
                }
            }
            if base.is_empty() {
                continue;
            }
            let cond = FpTree::build(&base, min);
            if !cond.header.is_empty() {
                cond.mine(&set, min, max_len, out);
            }
        }
    }
}

fn fpgrowth_counts(e: &Encoded, min: usize, max_len: usize) -> Counts {
    let weighted: Vec<(Vec<u32>, usize)> = e.transactions.iter().map(|t| (t.clone(), 1)).collect();
    let tree = FpTree::build(&weighted, min);
    let mut out = Counts::new();
    tree.mine(&[], min, max_len, &mut out);
    out
}

fn to_itemsets(e: &Encoded, counts: &Counts) -> Vec<FrequentItemset> {
    let n = e.transactions.len() as f64;
    let mut v: Vec<FrequentItemset> = counts
        .iter()
        .map(|(ids, &count)| FrequentItemset {
            items: ids.iter().map(|&i| e.names[i as usize].clone()).collect(),
            count,
            support: count as f64 / n,
        })
        .collect();
    v.sort_by(|a, b| a.items.len().cmp(&b.items.len()).then_with(|| a.items.cmp(&b.items)));
    v
}

fn rules_from_counts(e: &Encoded, counts: &Counts, min_confidence: f64) -> Vec<AssociationRule> {
    let n = e.transactions.len() as f64;
    let mut rules = Vec::new();
    for (set, &count) in counts.iter().filter(|(s, _)| s.len() >= 2) {
        for (pos, &cons) in set.iter().enumerate() {
            let ante: Vec<u32> = set
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != pos)
                .map(|(_, x)| *x)
                .collect();
            let ante_count = counts[&ante];
            let confidence = count as f64 / ante_count as f64;
            if confidence < min_confidence {
                continue;
            }
            let cons_support = counts[&vec![cons]] as f64 / n;
            rules.push(AssociationRule {
                antecedent: ante.iter().map(|&i| e.names[i as usize].clone()).collect(),
                consequent: vec![e.names[cons as usize].clone()],
                support: count as f64 / n,
                confidence,
                lift: confidence / cons_support,
            });
        }
    }
    rules.sort_by(|a, b| {
        a.antecedent
            .cmp(&b.antecedent)
            .then_with(|| a.consequent.cmp(&b.consequent))
    });
    rules
}

fn run(
    transactions: &[Vec<String>],
    cfg: &MiningConfig,
    miner: fn(&Encoded, usize, usize) -> Counts,
) -> Result<(Encoded, Counts), MinerError> {
    check(transactions, cfg)?;
    let e = encode(transactions);
    let min = min_count(e.transactions.len(), cfg.min_support);
    let counts = miner(&e, min, cfg.max_len.unwrap_or(usize::MAX).max(1));
    Ok((e, counts))
}

/// Frequent itemsets by level-wise candidate generation, ordered by size and
/// then item names.
pub fn frequent_itemsets_apriori(
    transactions: &[Vec<String>],
    cfg: &MiningConfig,
) -> Result<Vec<FrequentItemset>, MinerError> {
    let (e, counts) = run(transactions, cfg, apriori_counts)?;
    Ok(to_itemsets(&e, &counts))
}

/// Frequent itemsets by FP-tree projection, ordered as
/// [`frequent_itemsets_apriori`].
pub fn frequent_itemsets_fpgrowth(
    transactions: &[Vec<String>],
    cfg: &MiningConfig,
) -> Result<Vec<FrequentItemset>, MinerError> {
    let (e, counts) = run(transactions, cfg, fpgrowth_counts)?;
    Ok(to_itemsets(&e, &counts))
}

/// Rules with one-item consequents, sorted by antecedent then consequent.
pub fn mine_apriori(
    transactions: &[Vec<String>],
    cfg: &MiningConfig,
) -> Result<Vec<AssociationRule>, MinerError> {
    let (e, counts) = run(transactions, cfg, apriori_counts)?;
    Ok(rules_from_counts(&e, &counts, cfg.min_confidence))
}

pub fn mine_fpgrowth(
    transactions: &[Vec<String>],
    cfg: &MiningConfig,
) -> Result<Vec<AssociationRule>, MinerError> {
    let (e, counts) = run(transactions, cfg, fpgrowth_counts)?;
    Ok(rules_from_counts(&e, &counts, cfg.min_confidence))
}

/// One transaction per row holding `column=value` for each observed
/// categorical cell.
pub fn transactionize(d: &Dataset) -> Result<Vec<Vec<String>>, MinerError> {
    let cats: Vec<_> = d.columns().iter().filter(|c| c.vtype().is_categorical()).collect();
    if cats.is_empty() {
        return Err(MinerError::NoCategoricalColumns);
    }
    Ok((0..d.row_count())
        .map(|r| {
            cats.iter()
                .filter(|c| !c.cells()[r].is_missing())
                .map(|c| format!("{}={}", c.name(), c.cells()[r].render()))
                .collect()
        })
        .collect())
}
