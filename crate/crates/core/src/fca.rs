//! Formal contexts, the Galois connection and closed-pattern enumeration.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::matrix_io::RawBinaryContext;

/// Objects × attributes relation with both row and column indexes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryContext {
    object_ids: Vec<String>,
    attribute_ids: Vec<String>,
    rows: Vec<BitSet>,
    cols: Vec<BitSet>,
}

impl BinaryContext {
    /// `rows[o]` is the attribute set of object `o`.
    pub fn from_bitsets(
        object_ids: Vec<String>,
        attribute_ids: Vec<String>,
        rows: Vec<BitSet>,
    ) -> Result<Self> {
        let m = attribute_ids.len();
        if rows.len() != object_ids.len() || rows.iter().any(|r| r.universe() != m) {
            return Err(Error::Invalid(
                "relation dimensions do not match id lists".into(),
            ));
        }
        let n = rows.len();
        let mut cols = vec![BitSet::new(n); m];
        for (o, row) in rows.iter().enumerate() {
            for a in row.iter() {
                cols[a].insert(o);
            }
        }
        Ok(BinaryContext {
            object_ids,
            attribute_ids,
            rows,
            cols,
        })
    }

    /// Builds a context from per-object attribute index lists, with ids
    /// `1..=n` and `1..=m`.
    pub fn from_object_sets(n_attributes: usize, sets: &[Vec<usize>]) -> Result<Self> {
        let rows = sets
            .iter()
            .map(|s| {
                if let Some(&a) = s.iter().find(|&&a| a >= n_attributes) {
                    return Err(Error::Index {
                        what: "attributes",
                        index: a,
                        size: n_attributes,
                    });
                }
                Ok(BitSet::from_indices(n_attributes, s.iter().copied()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bitsets(
            (1..=sets.len()).map(|i| i.to_string()).collect(),
            (1..=n_attributes).map(|i| i.to_string()).collect(),
            rows,
        )
    }

    pub fn from_raw(raw: &RawBinaryContext) -> Result<Self> {
        let m = raw.attribute_ids.len();
        let rows = raw
            .relation
            .iter()
            .map(|r| BitSet::from_indices(m, r.iter().enumerate().filter(|(_, &v)| v).map(|(j, _)| j)))
            .collect();
        Self::from_bitsets(raw.object_ids.clone(), raw.attribute_ids.clone(), rows)
    }

    pub fn n_objects(&self) -> usize {
        self.rows.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.cols.len()
    }

    pub fn object_ids(&self) -> &[String] {
        &self.object_ids
    }

    pub fn attribute_ids(&self) -> &[String] {
        &self.attribute_ids
    }

    #[inline]
    pub fn has(&self, object: usize, attribute: usize) -> bool {
        self.rows[object].contains(attribute)
    }

    pub fn object_row(&self, object: usize) -> &BitSet {
        &self.rows[object]
    }

    pub fn attribute_column(&self, attribute: usize) -> &BitSet {
        &self.cols[attribute]
    }

    pub fn n_incidences(&self) -> usize {
        self.rows.iter().map(BitSet::len).sum()
    }

    pub fn all_objects(&self) -> BitSet {
        BitSet::full(self.n_objects())
    }

    pub fn all_attributes(&self) -> BitSet {
        BitSet::full(self.n_attributes())
    }

    pub fn objects_set(&self, objects: &[usize]) -> Result<BitSet> {
        checked_set(objects, self.n_objects(), "objects")
    }

    pub fn attributes_set(&self, attributes: &[usize]) -> Result<BitSet> {
        checked_set(attributes, self.n_attributes(), "attributes")
    }

    /// ψ on bitsets: attributes shared by every object in `objects`.
    pub fn intent_of_set(&self, objects: &BitSet) -> BitSet {
        let mut out = self.all_attributes();
        for o in objects.iter() {
            out.intersect_with(&self.rows[o]);
            if out.is_empty() {
                break;
            }
        }
        out
    }

    /// φ on bitsets: objects carrying every attribute in `attributes`.
    pub fn extent_of_set(&self, attributes: &BitSet) -> BitSet {
        let mut out = self.all_objects();
        for a in attributes.iter() {
            out.intersect_with(&self.cols[a]);
            if out.is_empty() {
                break;
            }
        }
        out
    }

    pub fn close_set(&self, attributes: &BitSet) -> BitSet {
        self.intent_of_set(&self.extent_of_set(attributes))
    }

    /// Number of objects carrying every attribute in `attributes`.
    pub fn support_count(&self, attributes: &BitSet) -> usize {
        self.extent_of_set(attributes).len()
    }
}

fn checked_set(indices: &[usize], size: usize, what: &'static str) -> Result<BitSet> {
    if let Some(&i) = indices.iter().find(|&&i| i >= size) {
        return Err(Error::Index { what, index: i, size });
    }
    Ok(BitSet::from_indices(size, indices.iter().copied()))
}

/// ψ: attributes common to all given objects; the empty set maps to every
/// attribute.
pub fn intent_of(ctx: &BinaryContext, objects: &[usize]) -> Result<Vec<usize>> {
    Ok(ctx.intent_of_set(&ctx.objects_set(objects)?).to_vec())
}

/// φ: objects carrying all given attributes; the empty set maps to every
/// object.
pub fn extent_of(ctx: &BinaryContext, attributes: &[usize]) -> Result<Vec<usize>> {
    Ok(ctx.extent_of_set(&ctx.attributes_set(attributes)?).to_vec())
}

/// γ = ψ∘φ.
pub fn close_itemset(ctx: &BinaryContext, attributes: &[usize]) -> Result<Vec<usize>> {
    Ok(ctx.close_set(&ctx.attributes_set(attributes)?).to_vec())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormalConcept {
    // field order makes the derived ordering intent-first
    pub intent: BitSet,
    pub extent: BitSet,
}

impl FormalConcept {
    pub fn extent_vec(&self) -> Vec<usize> {
        self.extent.to_vec()
    }

    pub fn intent_vec(&self) -> Vec<usize> {
        self.intent.to_vec()
    }

    pub fn is_concept_of(&self, ctx: &BinaryContext) -> bool {
        ctx.intent_of_set(&self.extent) == self.intent && ctx.extent_of_set(&self.intent) == self.extent
    }

    pub fn to_record(&self, ctx: &BinaryContext) -> ConceptRecord {
        ConceptRecord {
            extent: self.extent.iter().map(|o| ctx.object_ids()[o].clone()).collect(),
            intent: self.intent.iter().map(|a| ctx.attribute_ids()[a].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConceptRecord {
    pub extent: Vec<String>,
    pub intent: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptOptions {
    pub min_extent: usize,
    pub min_intent: usize,
    /// Abort with [`Error::Capacity`] once more concepts than this are found.
    pub max_concepts: Option<usize>,
    /// Worker threads for the first-level branches; 0 uses the ambient pool.
    pub jobs: usize,
}

impl Default for ConceptOptions {
    fn default() -> Self {
        ConceptOptions {
            min_extent: 1,
            min_intent: 1,
            max_concepts: None,
            jobs: 0,
        }
    }
}

/// All concepts with `|extent| >= min_extent` and `|intent| >= min_intent`,
/// sorted by intent.
pub fn enumerate_concepts(
    ctx: &BinaryContext,
    min_extent: usize,
    min_intent: usize,
) -> Result<Vec<FormalConcept>> {
    enumerate_concepts_with(
        ctx,
        &ConceptOptions {
            min_extent,
            min_intent,
            ..ConceptOptions::default()
        },
    )
}

pub fn enumerate_concepts_with(
    ctx: &BinaryContext,
    opts: &ConceptOptions,
) -> Result<Vec<FormalConcept>> {
    if opts.min_extent < 1 {
        return Err(Error::ParameterRange {
            name: "min_extent",
            value: opts.min_extent as f64,
            expected: "a count >= 1",
        });
    }
    if opts.min_intent < 1 {
        return Err(Error::ParameterRange {
            name: "min_intent",
            value: opts.min_intent as f64,
            expected: "a count >= 1",
        });
    }
    let enumerator = Enumerator {
        ctx,
        min_extent: opts.min_extent,
        min_intent: opts.min_intent,
        budget: opts.max_concepts,
        found: AtomicUsize::new(0),
        aborted: AtomicBool::new(false),
    };
    let mut concepts = if opts.jobs == 0 {
        enumerator.run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?
            .install(|| enumerator.run())
    };
    if enumerator.aborted.load(Ordering::Relaxed) {
        return Err(Error::Capacity {
            budget: opts.max_concepts.unwrap_or(0),
        });
    }
    concepts.sort_unstable();
    log::debug!("enumerated {} concepts", concepts.len());
    Ok(concepts)
}

struct Enumerator<'a> {
    ctx: &'a BinaryContext,
    min_extent: usize,
    min_intent: usize,
    budget: Option<usize>,
    found: AtomicUsize,
    aborted: AtomicBool,
}

impl Enumerator<'_> {
    fn run(&self) -> Vec<FormalConcept> {
        let ctx = self.ctx;
        if ctx.n_objects() < self.min_extent {
            return Vec::new();
        }
        let extent = ctx.all_objects();
        let intent = ctx.intent_of_set(&extent);
        let mut out = Vec::new();
        self.emit(&extent, &intent, &mut out);
        let branches: Vec<Vec<FormalConcept>> = (0..ctx.n_attributes())
            .into_par_iter()
            .map(|j| {
                let mut local = Vec::new();
                self.extend(&extent, &intent, j, &mut local);
                local
            })
            .collect();
        out.extend(branches.into_iter().flatten());
        out
    }

    fn emit(&self, extent: &BitSet, intent: &BitSet, out: &mut Vec<FormalConcept>) {
        if intent.len() < self.min_intent {
            return;
        }
        let n = self.found.fetch_add(1, Ordering::Relaxed) + 1;
        if self.budget.is_some_and(|b| n > b) {
            self.aborted.store(true, Ordering::Relaxed);
            return;
        }
        out.push(FormalConcept {
            intent: intent.clone(),
            extent: extent.clone(),
        });
    }

    // Ppc-extension of (extent, intent) by attribute j.
    fn extend(&self, extent: &BitSet, intent: &BitSet, j: usize, out: &mut Vec<FormalConcept>) {
        if self.aborted.load(Ordering::Relaxed) || intent.contains(j) {
            return;
        }
        let new_extent = extent.intersection(self.ctx.attribute_column(j));
        if new_extent.len() < self.min_extent {
            return;
        }
        let new_intent = self.intent_within(&new_extent, intent, j);
        if !new_intent.agrees_below(intent, j) {
            return;
        }
        self.emit(&new_extent, &new_intent, out);
        for k in j + 1..self.ctx.n_attributes() {
            self.extend(&new_extent, &new_intent, k, out);
        }
    }

    /// ψ(extent), given that it contains `base ∪ {j}`.
    fn intent_within(&self, extent: &BitSet, base: &BitSet, j: usize) -> BitSet {
        let ctx = self.ctx;
        let row_cost = extent.len() * ctx.n_attributes().div_ceil(64);
        let col_cost = ctx.n_attributes() * ctx.n_objects().div_ceil(64);
        if row_cost <= col_cost {
            ctx.intent_of_set(extent)
        } else {
            let mut out = base.clone();
            out.insert(j);
            for a in 0..ctx.n_attributes() {
                if !out.contains(a) && extent.is_subset(ctx.attribute_column(a)) {
                    out.insert(a);
                }
            }
            out
        }
    }
}
