//! Frequent closed itemsets, minimal generators and the informative generic
//! basis (IGB) of association rules.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::fca::BinaryContext;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClosedItemset {
    pub items: Vec<usize>,
    pub support_count: usize,
    pub generators: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenericRule {
    pub premise: Vec<usize>,
    pub conclusion: Vec<usize>,
    pub support: f64,
    pub confidence: f64,
    pub support_count: usize,
    pub premise_count: usize,
}

impl GenericRule {
    /// `premise ∪ conclusion`, sorted.
    pub fn items(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.premise.iter().chain(&self.conclusion).copied().collect();
        v.sort_unstable();
        v
    }
}

fn check_ratio(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::ParameterRange {
            name,
            value,
            expected: "a ratio in (0, 1]",
        })
    }
}

/// Smallest object count meeting a relative support threshold (at least 1).
pub fn min_support_count(minsupp: f64, n_objects: usize) -> usize {
    ((minsupp * n_objects as f64 - 1e-9).ceil() as usize).max(1)
}

struct FreeSet {
    items: Vec<usize>,
    extent: BitSet,
}

/// Frequent free sets (itemsets whose support is below that of each of
/// their immediate subsets), levelwise. Includes the empty set when it is
/// frequent.
fn frequent_free_sets(ctx: &BinaryContext, min_count: usize) -> Vec<FreeSet> {
    let mut all = Vec::new();
    let root = ctx.all_objects();
    if root.len() < min_count {
        return all;
    }
    let root_support = root.len();
    let mut level: Vec<FreeSet> = (0..ctx.n_attributes())
        .filter_map(|a| {
            let extent = ctx.attribute_column(a).clone();
            let s = extent.len();
            (s >= min_count && s < root_support).then(|| FreeSet {
                items: vec![a],
                extent,
            })
        })
        .collect();
    all.push(FreeSet {
        items: Vec::new(),
        extent: root,
    });
    while !level.is_empty() {
        let index: HashMap<&[usize], usize> = level
            .iter()
            .map(|f| (f.items.as_slice(), f.extent.len()))
            .collect();
        let mut next = Vec::new();
        for (i, a) in level.iter().enumerate() {
            let prefix = &a.items[..a.items.len() - 1];
            for b in &level[i + 1..] {
                if &b.items[..b.items.len() - 1] != prefix {
                    break;
                }
                let mut items = a.items.clone();
                items.push(*b.items.last().unwrap());
                let extent = a.extent.intersection(&b.extent);
                let support = extent.len();
                if support < min_count {
                    continue;
                }
                let mut sub = Vec::with_capacity(items.len() - 1);
                let free = (0..items.len()).all(|skip| {
                    sub.clear();
                    sub.extend(items.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &x)| x));
                    index.get(sub.as_slice()).is_some_and(|&s| support < s)
                });
                if free {
                    next.push(FreeSet { items, extent });
                }
            }
        }
        all.extend(level);
        level = next;
    }
    all
}

/// All closed itemsets with relative support ≥ `minsupp`, each with its
/// minimal generators, ordered by items.
pub fn mine_frequent_closed(ctx: &BinaryContext, minsupp: f64) -> Result<Vec<ClosedItemset>> {
    check_ratio("minsupp", minsupp)?;
    let min_count = min_support_count(minsupp, ctx.n_objects());
    let mut by_closure: BTreeMap<BitSet, ClosedItemset> = BTreeMap::new();
    for free in frequent_free_sets(ctx, min_count) {
        let closure = ctx.intent_of_set(&free.extent);
        let entry = by_closure.entry(closure.clone()).or_insert_with(|| ClosedItemset {
            items: closure.to_vec(),
            support_count: free.extent.len(),
            generators: Vec::new(),
        });
        entry.generators.push(free.items);
    }
    let mut out: Vec<ClosedItemset> = by_closure.into_values().collect();
    for c in &mut out {
        c.generators.sort();
    }
    log::debug!("mined {} frequent closed itemsets", out.len());
    Ok(out)
}

/// Inclusion-minimal subsets of `closed` whose closure is `closed`.
pub fn minimal_generators(ctx: &BinaryContext, closed: &[usize]) -> Result<Vec<Vec<usize>>> {
    let set = ctx.attributes_set(closed)?;
    if ctx.close_set(&set) != set {
        return Err(Error::NotClosed(set.to_vec()));
    }
    let target = ctx.support_count(&set);
    if ctx.n_objects() == target {
        return Ok(vec![Vec::new()]);
    }
    let mut found = Vec::new();
    // free subsets whose support is still above the target
    let mut level: Vec<FreeSet> = Vec::new();
    for a in set.iter() {
        let extent = ctx.attribute_column(a).clone();
        if extent.len() == ctx.n_objects() {
            continue;
        }
        if extent.len() == target {
            found.push(vec![a]);
        } else {
            level.push(FreeSet { items: vec![a], extent });
        }
    }
    while !level.is_empty() {
        let index: HashMap<&[usize], usize> = level
            .iter()
            .map(|f| (f.items.as_slice(), f.extent.len()))
            .collect();
        let mut next = Vec::new();
        for (i, a) in level.iter().enumerate() {
            let prefix = &a.items[..a.items.len() - 1];
            for b in &level[i + 1..] {
                if &b.items[..b.items.len() - 1] != prefix {
                    break;
                }
                let mut items = a.items.clone();
                items.push(*b.items.last().unwrap());
                let extent = a.extent.intersection(&b.extent);
                let support = extent.len();
                let mut sub = Vec::with_capacity(items.len() - 1);
                let free = (0..items.len()).all(|skip| {
                    sub.clear();
                    sub.extend(items.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &x)| x));
                    index.get(sub.as_slice()).is_some_and(|&s| support < s)
                });
                if !free {
                    continue;
                }
                if support == target {
                    found.push(items);
                } else {
                    next.push(FreeSet { items, extent });
                }
            }
        }
        level = next;
    }
    found.sort();
    Ok(found)
}

/// The informative generic basis at the given thresholds.
///
/// For each frequent closed itemset `I` and each minimal generator `gs` of
/// a frequent closed `I' ⊆ I`, the rule `gs ⇒ I − gs` is kept when its
/// conclusion is non-empty, its confidence `supp(I)/supp(gs)` reaches
/// `minconf`, and no proper subset of `gs` would already reach it.
pub fn extract_igb(ctx: &BinaryContext, minsupp: f64, minconf: f64) -> Result<Vec<GenericRule>> {
    check_ratio("minconf", minconf)?;
    let closed = mine_frequent_closed(ctx, minsupp)?;
    let n = ctx.n_objects();
    let sets: Vec<BitSet> = closed
        .iter()
        .map(|c| BitSet::from_indices(ctx.n_attributes(), c.items.iter().copied()))
        .collect();
    let mut rules = Vec::new();
    for (i, big) in closed.iter().enumerate() {
        if big.items.is_empty() {
            continue;
        }
        for (j, small) in closed.iter().enumerate() {
            if !sets[j].is_subset(&sets[i]) {
                continue;
            }
            let confidence = big.support_count as f64 / small.support_count as f64;
            if confidence < minconf {
                continue;
            }
            for gs in &small.generators {
                let conclusion: Vec<usize> = big.items.iter().copied().filter(|x| !gs.contains(x)).collect();
                if conclusion.is_empty() {
                    continue;
                }
                let smaller_confident = (0..gs.len()).any(|skip| {
                    let sub = BitSet::from_indices(
                        ctx.n_attributes(),
                        gs.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &v)| v),
                    );
                    big.support_count as f64 / ctx.support_count(&sub) as f64 >= minconf
                });
                if smaller_confident {
                    continue;
                }
                rules.push(GenericRule {
                    premise: gs.clone(),
                    conclusion,
                    support: big.support_count as f64 / n as f64,
                    confidence,
                    support_count: big.support_count,
                    premise_count: small.support_count,
                });
            }
        }
    }
    sort_rules(&mut rules);
    rules.dedup_by(|a, b| a.premise == b.premise && a.conclusion == b.conclusion);
    log::debug!("extracted {} generic rules", rules.len());
    Ok(rules)
}

/// Support desc, confidence desc, premise, conclusion.
pub fn sort_rules(rules: &mut [GenericRule]) {
    rules.sort_by(|a, b| {
        b.support_count
            .cmp(&a.support_count)
            .then(b.confidence.total_cmp(&a.confidence))
            .then_with(|| a.premise.cmp(&b.premise))
            .then_with(|| a.conclusion.cmp(&b.conclusion))
    });
}

/// φ(premise ∪ conclusion).
pub fn supporting_objects(ctx: &BinaryContext, rule: &GenericRule) -> Result<Vec<usize>> {
    Ok(ctx.extent_of_set(&ctx.attributes_set(&rule.items())?).to_vec())
}

/// Writes `premise, conclusion, support, confidence` rows using attribute ids.
pub fn write_rules_tsv(ctx: &BinaryContext, rules: &[GenericRule], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let names = |xs: &[usize]| {
        xs.iter()
            .map(|&a| ctx.attribute_ids()[a].as_str())
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = String::from("premise\tconclusion\tsupport\tconfidence\n");
    for r in rules {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            names(&r.premise),
            names(&r.conclusion),
            r.support,
            r.confidence
        ));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    // transactions of the BiARM worked example, items 1..15
    fn transactions() -> BinaryContext {
        let t: Vec<Vec<usize>> = [
            vec![4, 9, 11, 13],
            vec![9, 15],
            vec![3, 4, 7, 8],
            vec![5, 9, 12, 14, 15],
            vec![1, 2, 6, 7, 8],
            vec![1, 3, 4, 10, 11],
        ]
        .into_iter()
        .map(|r| r.into_iter().map(|i| i - 1).collect())
        .collect();
        BinaryContext::from_object_sets(15, &t).unwrap()
    }

    #[test]
    fn min_count_rounding() {
        assert_eq!(min_support_count(0.3, 6), 2);
        assert_eq!(min_support_count(0.4, 5), 2);
        assert_eq!(min_support_count(1.0 / 3.0, 6), 2);
        assert_eq!(min_support_count(0.01, 6), 1);
    }

    #[test]
    fn closed_sets_of_transactions() {
        let k = transactions();
        let closed = mine_frequent_closed(&k, 0.3).unwrap();
        let c34 = closed.iter().find(|c| c.items == vec![2, 3]).unwrap();
        assert_eq!(c34.support_count, 2);
        assert_eq!(c34.generators, vec![vec![2]]);
        assert!(closed.iter().all(|c| c.support_count >= 2));
        assert_eq!(closed[0].items, Vec::<usize>::new());
    }

    #[test]
    fn generators_of_closed_set() {
        let k = transactions();
        assert_eq!(minimal_generators(&k, &[2, 3]).unwrap(), vec![vec![2]]);
        assert!(matches!(minimal_generators(&k, &[2]), Err(Error::NotClosed(_))));
        assert_eq!(minimal_generators(&k, &[]).unwrap(), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn rule_three_implies_four() {
        let k = transactions();
        let rules = extract_igb(&k, 0.3, 0.8).unwrap();
        let r = rules.iter().find(|r| r.premise == vec![2]).unwrap();
        assert_eq!(r.conclusion, vec![3]);
        assert_eq!(r.confidence, 1.0);
        assert_eq!(r.support, 2.0 / 6.0);
        assert_eq!(supporting_objects(&k, r).unwrap(), vec![2, 5]);
    }

    #[test]
    fn universal_attributes_give_empty_premise() {
        let k = BinaryContext::from_object_sets(2, &[vec![0, 1], vec![0, 1]]).unwrap();
        let rules = extract_igb(&k, 0.5, 1.0).unwrap();
        assert_eq!(rules.len(), 1);
        assert!(rules[0].premise.is_empty());
        assert_eq!(rules[0].conclusion, vec![0, 1]);
    }

    #[test]
    fn thresholds_are_validated() {
        let k = transactions();
        assert!(extract_igb(&k, 0.0, 0.5).is_err());
        assert!(extract_igb(&k, 0.5, 1.5).is_err());
    }
}
