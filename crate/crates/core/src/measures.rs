//! Support, bond, overlap and stability measures.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bicluster::Bicluster;
use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::fca::{BinaryContext, FormalConcept};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportProfile {
    pub conjunctive: usize,
    pub disjunctive: usize,
    pub frequency: f64,
}

pub fn supports(ctx: &BinaryContext, attributes: &[usize]) -> Result<SupportProfile> {
    if attributes.is_empty() {
        return Err(Error::EmptyPattern);
    }
    let set = ctx.attributes_set(attributes)?;
    let conjunctive = ctx.support_count(&set);
    let mut any = BitSet::new(ctx.n_objects());
    for a in set.iter() {
        any.union_with(ctx.attribute_column(a));
    }
    let n = ctx.n_objects();
    Ok(SupportProfile {
        conjunctive,
        disjunctive: any.len(),
        frequency: if n == 0 { 0.0 } else { conjunctive as f64 / n as f64 },
    })
}

/// Conjunctive over disjunctive support; 0 when no object has any of the
/// attributes.
pub fn bond(ctx: &BinaryContext, attributes: &[usize]) -> Result<f64> {
    let s = supports(ctx, attributes)?;
    Ok(if s.disjunctive == 0 {
        0.0
    } else {
        s.conjunctive as f64 / s.disjunctive as f64
    })
}

/// |xs ∩ ys| / |xs ∪ ys|, 0 when both are empty. Duplicates are ignored.
pub fn set_overlap<T: Ord>(xs: &[T], ys: &[T]) -> f64 {
    let a: BTreeSet<&T> = xs.iter().collect();
    let b: BTreeSet<&T> = ys.iter().collect();
    let inter = a.intersection(&b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn bitset_overlap(xs: &BitSet, ys: &BitSet) -> f64 {
    let union = xs.union_len(ys);
    if union == 0 {
        0.0
    } else {
        xs.intersection_len(ys) as f64 / union as f64
    }
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// [`set_overlap`] for sorted, duplicate-free index lists.
pub fn sorted_overlap(xs: &[usize], ys: &[usize]) -> f64 {
    let inter = sorted_intersection_len(xs, ys);
    let union = xs.len() + ys.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Overlap of the cell sets `rows1 × cols1` and `rows2 × cols2`, all index
/// lists sorted and duplicate-free.
pub fn rectangle_overlap(rows1: &[usize], cols1: &[usize], rows2: &[usize], cols2: &[usize]) -> f64 {
    let inter = sorted_intersection_len(rows1, rows2) * sorted_intersection_len(cols1, cols2);
    let union = rows1.len() * cols1.len() + rows2.len() * cols2.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Overlap of the gene × condition cell sets of two biclusters.
pub fn cell_overlap(b1: &Bicluster, b2: &Bicluster) -> Result<f64> {
    if b1.dims != b2.dims {
        return Err(Error::MatrixMismatch(
            "biclusters reference different matrices".into(),
        ));
    }
    Ok(rectangle_overlap(&b1.genes, &b1.conditions, &b2.genes, &b2.conditions))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stability {
    pub value: f64,
    /// True when `value` is a sampled estimate rather than exact.
    pub estimated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityOptions {
    /// Extents up to this size are counted by direct subset search.
    pub exact_limit: usize,
    /// Largest number of distinct maximal blocker sets handled exactly.
    pub max_blockers: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            exact_limit: 20,
            max_blockers: 24,
            samples: 20_000,
            seed: 0x5eed,
        }
    }
}

/// Fraction of subsets of the extent whose common attributes are exactly the
/// intent.
pub fn stability(ctx: &BinaryContext, concept: &FormalConcept) -> Stability {
    stability_with(ctx, concept, &StabilityOptions::default())
}

pub fn stability_with(ctx: &BinaryContext, concept: &FormalConcept, opts: &StabilityOptions) -> Stability {
    let k = concept.extent.len();
    if k <= opts.exact_limit.min(63) {
        let count = stable_subsets_dfs(ctx, concept);
        return Stability {
            value: count as f64 / (1u64 << k) as f64,
            estimated: false,
        };
    }
    let blockers = maximal_blockers(ctx, concept);
    if blockers.len() <= opts.max_blockers {
        let count = stable_subsets_inclusion_exclusion(&blockers, &concept.extent);
        Stability {
            value: ratio_to_f64(&count, k),
            estimated: false,
        }
    } else {
        Stability {
            value: sampled_stability(ctx, concept, opts),
            estimated: true,
        }
    }
}

/// Exact count of stable subsets, as a big integer.
pub fn stable_subset_count(ctx: &BinaryContext, concept: &FormalConcept) -> BigUint {
    if concept.extent.len() <= StabilityOptions::default().exact_limit {
        BigUint::from(stable_subsets_dfs(ctx, concept))
    } else {
        stable_subsets_inclusion_exclusion(&maximal_blockers(ctx, concept), &concept.extent)
    }
}

fn stable_subsets_dfs(ctx: &BinaryContext, concept: &FormalConcept) -> u64 {
    let objects = concept.extent.to_vec();
    let rows: Vec<&BitSet> = objects.iter().map(|&o| ctx.object_row(o)).collect();
    fn go(rows: &[&BitSet], i: usize, current: &BitSet, target: &BitSet) -> u64 {
        if current == target {
            // every superset keeps the intent at the target
            return 1u64 << (rows.len() - i);
        }
        if i == rows.len() {
            return 0;
        }
        let skip = go(rows, i + 1, current, target);
        let take = go(rows, i + 1, &current.intersection(rows[i]), target);
        skip + take
    }
    go(&rows, 0, &ctx.all_attributes(), &concept.intent)
}

/// For every attribute outside the intent, the extent members carrying it;
/// only inclusion-maximal distinct sets are kept.
fn maximal_blockers(ctx: &BinaryContext, concept: &FormalConcept) -> Vec<BitSet> {
    let mut sets: Vec<BitSet> = (0..ctx.n_attributes())
        .filter(|&a| !concept.intent.contains(a))
        .map(|a| concept.extent.intersection(ctx.attribute_column(a)))
        .collect();
    sets.sort_by_key(|s| std::cmp::Reverse(s.len()));
    let mut kept: Vec<BitSet> = Vec::new();
    for s in sets {
        if !kept.iter().any(|k| s.is_subset(k)) {
            kept.push(s);
        }
    }
    kept
}

// Σ over blocker subsets Y of (-1)^|Y| 2^|extent ∩ ⋂Y|.
fn stable_subsets_inclusion_exclusion(blockers: &[BitSet], extent: &BitSet) -> BigUint {
    fn go(blockers: &[BitSet], next: usize, inter: &BitSet, negative: bool, acc: &mut BigInt) {
        let term = BigInt::from(1) << inter.len();
        if negative {
            *acc -= term;
        } else {
            *acc += term;
        }
        for i in next..blockers.len() {
            let sub = inter.intersection(&blockers[i]);
            if sub.is_empty() {
                // every extension of this selection also has an empty
                // intersection; their ±1 terms cancel unless i is last
                if i + 1 == blockers.len() {
                    *acc += if negative { 1 } else { -1 };
                }
                continue;
            }
            go(blockers, i + 1, &sub, !negative, acc);
        }
    }
    let mut acc = BigInt::zero();
    go(blockers, 0, extent, false, &mut acc);
    acc.to_biguint().expect("stable subset count is non-negative")
}

fn ratio_to_f64(count: &BigUint, k: usize) -> f64 {
    let bits = count.bits() as i64;
    let shift = (bits - 64).max(0);
    let top = (count >> shift as usize).to_u64().unwrap_or(u64::MAX) as f64;
    top * 2f64.powi((shift - k as i64) as i32)
}

fn sampled_stability(ctx: &BinaryContext, concept: &FormalConcept, opts: &StabilityOptions) -> f64 {
    let objects = concept.extent.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let samples = opts.samples.max(1);
    let mut hits = 0usize;
    for _ in 0..samples {
        let mut current = ctx.all_attributes();
        for &o in &objects {
            if rng.gen::<bool>() {
                current.intersect_with(ctx.object_row(o));
            }
        }
        if current == concept.intent {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}
