//! The five biclustering pipelines: BiARM, BiFCA+, BiFCA, NBic-ARM and NBF.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::bicluster::{Algorithm, Bicluster};
use crate::discretize::{
    binarize_by_symbol_frequency, binarize_signs, map_pair_columns_to_conditions,
    trajectory_with_epsilon, PairColumn, TrajectoryMatrix, TrajectoryMode,
};
use crate::error::{Error, Result};
use crate::fca::{enumerate_concepts_with, BinaryContext, ConceptOptions, FormalConcept};
use crate::matrix_io::ExpressionMatrix;
use crate::measures::{rectangle_overlap, sorted_overlap, stability_with, Stability, StabilityOptions};
use crate::rules::{extract_igb, supporting_objects, GenericRule};

/// Thresholds and knobs shared by all pipelines. Each algorithm requires
/// a subset of the optional thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub minsupp: Option<f64>,
    pub minconf: Option<f64>,
    pub minjaccard: Option<f64>,
    pub minbond: Option<f64>,
    pub mincondition: Option<usize>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub minstability: Option<f64>,
    pub min_extent: usize,
    pub min_intent: usize,
    /// Overrides the algorithm's default trajectory mode where permitted.
    pub mode: Option<TrajectoryMode>,
    pub epsilon: f64,
    pub jobs: usize,
    pub max_concepts: Option<usize>,
    /// Repeat the gene-intersection merge until nothing changes.
    pub fixpoint_merge: bool,
    pub stability: StabilityOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            minsupp: None,
            minconf: None,
            minjaccard: None,
            minbond: None,
            mincondition: None,
            alpha1: None,
            alpha2: None,
            minstability: None,
            min_extent: 1,
            min_intent: 1,
            mode: None,
            epsilon: 0.0,
            jobs: 0,
            max_concepts: None,
            fixpoint_merge: false,
            stability: StabilityOptions::default(),
        }
    }
}

fn require(value: Option<f64>, name: &'static str, zero_ok: bool) -> Result<f64> {
    let v = value.ok_or(Error::MissingParameter(name))?;
    let ok = v <= 1.0 && (v > 0.0 || (zero_ok && v == 0.0));
    if ok {
        Ok(v)
    } else {
        Err(Error::ParameterRange {
            name,
            value: v,
            expected: if zero_ok { "a ratio in [0, 1]" } else { "a ratio in (0, 1]" },
        })
    }
}

impl PipelineConfig {
    /// Checks that every threshold `algorithm` needs is present and in range.
    pub fn validate(&self, algorithm: Algorithm) -> Result<()> {
        for (name, v) in [("min_extent", self.min_extent), ("min_intent", self.min_intent)] {
            if v < 1 {
                return Err(Error::ParameterRange {
                    name,
                    value: v as f64,
                    expected: "a count >= 1",
                });
            }
        }
        match algorithm {
            Algorithm::Biarm => {
                require(self.minsupp, "minsupp", false)?;
                require(self.minconf, "minconf", false)?;
                require(self.minjaccard, "minjaccard", true)?;
            }
            Algorithm::BifcaPlus => {
                require(self.minbond, "minbond", true)?;
            }
            Algorithm::Bifca => {
                require(self.minbond, "minbond", true)?;
                match self.mincondition {
                    None => return Err(Error::MissingParameter("mincondition")),
                    Some(0) => {
                        return Err(Error::ParameterRange {
                            name: "mincondition",
                            value: 0.0,
                            expected: "a count >= 1",
                        })
                    }
                    Some(_) => {}
                }
            }
            Algorithm::NbicArm => {
                require(self.minsupp, "minsupp", false)?;
                require(self.minconf, "minconf", false)?;
                require(self.alpha1, "alpha1", false)?;
                require(self.alpha2, "alpha2", false)?;
            }
            Algorithm::Nbf => {
                require(self.minstability, "minstability", true)?;
                require(self.alpha1, "alpha1", false)?;
                require(self.alpha2, "alpha2", false)?;
            }
        }
        let fixed = match algorithm {
            Algorithm::BifcaPlus => Some(TrajectoryMode::Adjacent),
            Algorithm::Bifca => Some(TrajectoryMode::AllPairs),
            _ => None,
        };
        if let (Some(fixed), Some(mode)) = (fixed, self.mode) {
            if fixed != mode {
                return Err(Error::Invalid(format!(
                    "{algorithm} only runs in {fixed} mode"
                )));
            }
        }
        Ok(())
    }

    pub fn trajectory_mode(&self, algorithm: Algorithm) -> TrajectoryMode {
        let default = match algorithm {
            Algorithm::BifcaPlus | Algorithm::NbicArm => TrajectoryMode::Adjacent,
            Algorithm::Biarm | Algorithm::Bifca | Algorithm::Nbf => TrajectoryMode::AllPairs,
        };
        self.mode.unwrap_or(default)
    }

    fn concept_options(&self) -> ConceptOptions {
        ConceptOptions {
            min_extent: self.min_extent,
            min_intent: self.min_intent,
            max_concepts: self.max_concepts,
            jobs: self.jobs,
        }
    }
}

/// Which binary context a concept or rule was mined from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// The single frequency-binarized context.
    Single,
    Positive,
    Negative,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Single => "m3",
            Side::Positive => "m3_pos",
            Side::Negative => "m3_neg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinedConcept {
    pub side: Side,
    pub concept: FormalConcept,
    pub stability: Option<Stability>,
    /// Whether the concept passed the pipeline's concept-level filters.
    pub kept: bool,
}

/// Every stage of a pipeline run, for inspection and intermediate dumps.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub algorithm: Algorithm,
    pub trajectory: TrajectoryMatrix,
    pub contexts: Vec<(Side, BinaryContext)>,
    pub concepts: Vec<MinedConcept>,
    pub rules: Vec<(Side, GenericRule)>,
    /// Candidates entering the overlap filter (BiARM, BiFCA+, BiFCA) or the
    /// one-sided biclusters (NBic-ARM, NBF), in processing order.
    pub candidates: Vec<Bicluster>,
    /// Results of the condition-intersection assembly (NBic-ARM, NBF).
    pub assembled: Vec<Bicluster>,
    pub biclusters: Vec<Bicluster>,
}

impl PipelineOutput {
    pub fn pair_columns(&self) -> &[PairColumn] {
        self.trajectory.pair_columns()
    }
}

pub fn run(algorithm: Algorithm, matrix: &ExpressionMatrix, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate(algorithm)?;
    let traj = trajectory_with_epsilon(matrix, cfg.trajectory_mode(algorithm), cfg.epsilon)?;
    log::info!(
        "{algorithm}: {} genes x {} pair columns ({})",
        traj.n_genes(),
        traj.n_pairs(),
        traj.mode()
    );
    let mut out = PipelineOutput {
        algorithm,
        trajectory: traj,
        contexts: Vec::new(),
        concepts: Vec::new(),
        rules: Vec::new(),
        candidates: Vec::new(),
        assembled: Vec::new(),
        biclusters: Vec::new(),
    };
    let cands = match algorithm {
        Algorithm::Biarm => biarm(&mut out, cfg)?,
        Algorithm::BifcaPlus | Algorithm::Bifca => bifca(&mut out, cfg)?,
        Algorithm::NbicArm | Algorithm::Nbf => negative(&mut out, cfg)?,
    };
    let pairs = out.trajectory.pair_columns().to_vec();
    let mut biclusters = cands
        .into_iter()
        .map(|c| c.into_bicluster(algorithm, matrix, &pairs))
        .collect::<Result<Vec<_>>>()?;
    sort_canonical(&mut biclusters);
    log::info!("{algorithm}: {} biclusters", biclusters.len());
    out.biclusters = biclusters;
    Ok(out)
}

pub fn run_biarm(matrix: &ExpressionMatrix, cfg: &PipelineConfig) -> Result<Vec<Bicluster>> {
    Ok(run(Algorithm::Biarm, matrix, cfg)?.biclusters)
}

pub fn run_bifca_plus(matrix: &ExpressionMatrix, cfg: &PipelineConfig) -> Result<Vec<Bicluster>> {
    Ok(run(Algorithm::BifcaPlus, matrix, cfg)?.biclusters)
}

pub fn run_bifca(matrix: &ExpressionMatrix, cfg: &PipelineConfig) -> Result<Vec<Bicluster>> {
    Ok(run(Algorithm::Bifca, matrix, cfg)?.biclusters)
}

pub fn run_nbic_arm(matrix: &ExpressionMatrix, cfg: &PipelineConfig) -> Result<Vec<Bicluster>> {
    Ok(run(Algorithm::NbicArm, matrix, cfg)?.biclusters)
}

pub fn run_nbf(matrix: &ExpressionMatrix, cfg: &PipelineConfig) -> Result<Vec<Bicluster>> {
    Ok(run(Algorithm::Nbf, matrix, cfg)?.biclusters)
}

/// Orders biclusters by gene count desc, condition count desc, then indices.
pub fn sort_canonical(biclusters: &mut [Bicluster]) {
    biclusters.sort_by(|a, b| {
        a.size_key()
            .cmp(&b.size_key())
            .then_with(|| a.genes.cmp(&b.genes))
            .then_with(|| a.conditions.cmp(&b.conditions))
            .then_with(|| a.pair_columns.cmp(&b.pair_columns))
    });
}

/// A bicluster in pair-column space, optionally split into sign groups.
#[derive(Debug, Clone)]
struct Candidate {
    genes: Vec<usize>,
    cols: Vec<usize>,
    up: Vec<usize>,
    down: Vec<usize>,
    scores: Vec<(&'static str, f64)>,
}

impl Candidate {
    fn new(genes: Vec<usize>, cols: Vec<usize>) -> Self {
        Candidate {
            genes,
            cols,
            up: Vec::new(),
            down: Vec::new(),
            scores: Vec::new(),
        }
    }

    fn score(mut self, name: &'static str, value: f64) -> Self {
        self.set_score(name, value);
        self
    }

    fn set_score(&mut self, name: &'static str, value: f64) {
        match self.scores.iter_mut().find(|(k, _)| *k == name) {
            Some(slot) => slot.1 = value,
            None => self.scores.push((name, value)),
        }
    }

    fn get_score(&self, name: &str) -> Option<f64> {
        self.scores.iter().find(|(k, _)| *k == name).map(|&(_, v)| v)
    }

    fn into_bicluster(self, algorithm: Algorithm, matrix: &ExpressionMatrix, pairs: &[PairColumn]) -> Result<Bicluster> {
        let conditions = map_pair_columns_to_conditions(&self.cols, pairs)?;
        let mut b = Bicluster::new(algorithm, matrix.dims(), self.genes, conditions);
        b.pair_columns = Some(self.cols);
        for (k, v) in self.scores {
            b = b.with_score(k, v);
        }
        Ok(b)
    }
}

fn to_bicluster_preview(c: &Candidate, algorithm: Algorithm, dims: crate::bicluster::MatrixDims, pairs: &[PairColumn]) -> Bicluster {
    let conditions = map_pair_columns_to_conditions(&c.cols, pairs).unwrap_or_default();
    let mut b = Bicluster::new(algorithm, dims, c.genes.clone(), conditions);
    b.pair_columns = Some(c.cols.clone());
    for &(k, v) in &c.scores {
        b = b.with_score(k, v);
    }
    b
}

fn dedup_footprints(cands: Vec<Candidate>) -> Vec<Candidate> {
    let mut seen = HashSet::new();
    cands
        .into_iter()
        .filter(|c| seen.insert((c.genes.clone(), c.cols.clone())))
        .collect()
}

/// Admits candidates in order of (|cols| desc, |genes| desc, genes, cols)
/// while their overlap with every admitted one stays within `threshold`.
fn greedy_filter(
    mut cands: Vec<Candidate>,
    threshold: f64,
    score_name: &'static str,
    overlap: impl Fn(&Candidate, &Candidate) -> f64,
) -> Vec<Candidate> {
    cands.sort_by(|a, b| {
        b.cols
            .len()
            .cmp(&a.cols.len())
            .then(b.genes.len().cmp(&a.genes.len()))
            .then_with(|| a.genes.cmp(&b.genes))
            .then_with(|| a.cols.cmp(&b.cols))
    });
    let mut kept: Vec<Candidate> = Vec::new();
    for c in cands {
        let worst = kept.iter().map(|k| overlap(k, &c)).fold(0.0, f64::max);
        if worst <= threshold {
            kept.push(c.score(score_name, worst));
        }
    }
    kept
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn rule_candidates(ctx: &BinaryContext, rules: &[GenericRule]) -> Result<Vec<Candidate>> {
    let cands = rules
        .iter()
        .map(|r| {
            Ok(Candidate::new(supporting_objects(ctx, r)?, r.items())
                .score("support", r.support)
                .score("confidence", r.confidence))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(dedup_footprints(cands))
}

fn biarm(out: &mut PipelineOutput, cfg: &PipelineConfig) -> Result<Vec<Candidate>> {
    let ctx = binarize_by_symbol_frequency(&out.trajectory);
    let rules = extract_igb(&ctx, cfg.minsupp.unwrap(), cfg.minconf.unwrap())?;
    let cands = rule_candidates(&ctx, &rules)?;
    let dims = crate::bicluster::MatrixDims {
        genes: out.trajectory.n_genes(),
        conditions: out.trajectory.condition_ids().len(),
    };
    out.candidates = cands
        .iter()
        .map(|c| to_bicluster_preview(c, Algorithm::Biarm, dims, out.trajectory.pair_columns()))
        .collect();
    out.rules = rules.into_iter().map(|r| (Side::Single, r)).collect();
    out.contexts.push((Side::Single, ctx));
    Ok(greedy_filter(cands, cfg.minjaccard.unwrap(), "cell_overlap", |a, b| {
        rectangle_overlap(&a.genes, &a.cols, &b.genes, &b.cols)
    }))
}

fn bifca(out: &mut PipelineOutput, cfg: &PipelineConfig) -> Result<Vec<Candidate>> {
    let ctx = binarize_by_symbol_frequency(&out.trajectory);
    let concepts = enumerate_concepts_with(&ctx, &cfg.concept_options())?;
    let min_cols = match out.algorithm {
        Algorithm::Bifca => cfg.mincondition.unwrap(),
        _ => 0,
    };
    let mut cands = Vec::new();
    for c in concepts {
        let kept = c.intent.len() >= min_cols;
        if kept {
            cands.push(Candidate::new(c.extent.to_vec(), c.intent.to_vec()));
        }
        out.concepts.push(MinedConcept {
            side: Side::Single,
            concept: c,
            stability: None,
            kept,
        });
    }
    let dims = crate::bicluster::MatrixDims {
        genes: out.trajectory.n_genes(),
        conditions: out.trajectory.condition_ids().len(),
    };
    out.candidates = cands
        .iter()
        .map(|c| to_bicluster_preview(c, out.algorithm, dims, out.trajectory.pair_columns()))
        .collect();
    out.contexts.push((Side::Single, ctx));
    Ok(greedy_filter(cands, cfg.minbond.unwrap(), "intent_overlap", |a, b| {
        sorted_overlap(&a.cols, &b.cols)
    }))
}

fn negative(out: &mut PipelineOutput, cfg: &PipelineConfig) -> Result<Vec<Candidate>> {
    let signed = binarize_signs(&out.trajectory);
    let mut sides: Vec<Vec<Candidate>> = Vec::with_capacity(2);
    for (side, ctx) in [(Side::Positive, &signed.positive), (Side::Negative, &signed.negative)] {
        let cands = match out.algorithm {
            Algorithm::NbicArm => {
                let rules = extract_igb(ctx, cfg.minsupp.unwrap(), cfg.minconf.unwrap())?;
                let cands = rule_candidates(ctx, &rules)?;
                out.rules.extend(rules.into_iter().map(|r| (side, r)));
                cands
            }
            _ => stable_concepts(out, side, ctx, cfg)?,
        };
        sides.push(cands);
    }
    out.contexts.push((Side::Positive, signed.positive));
    out.contexts.push((Side::Negative, signed.negative));
    let negatives = sides.pop().unwrap();
    let positives = sides.pop().unwrap();
    let dims = crate::bicluster::MatrixDims {
        genes: out.trajectory.n_genes(),
        conditions: out.trajectory.condition_ids().len(),
    };
    let pairs = out.trajectory.pair_columns().to_vec();
    out.candidates = positives
        .iter()
        .chain(&negatives)
        .map(|c| to_bicluster_preview(c, out.algorithm, dims, &pairs))
        .collect();

    let assembled = assemble(&positives, &negatives, cfg.alpha1.unwrap());
    out.assembled = assembled
        .iter()
        .map(|c| to_bicluster_preview(c, out.algorithm, dims, &pairs))
        .collect();
    let merged = merge_by_genes(assembled, cfg.alpha2.unwrap(), cfg.fixpoint_merge);
    Ok(merged)
}

fn stable_concepts(
    out: &mut PipelineOutput,
    side: Side,
    ctx: &BinaryContext,
    cfg: &PipelineConfig,
) -> Result<Vec<Candidate>> {
    let concepts = enumerate_concepts_with(ctx, &cfg.concept_options())?;
    let stabilities: Vec<Stability> = in_pool(cfg.jobs, || {
        concepts
            .par_iter()
            .map(|c| stability_with(ctx, c, &cfg.stability))
            .collect()
    })?;
    let threshold = cfg.minstability.unwrap();
    let mut cands = Vec::new();
    for (c, s) in concepts.into_iter().zip(stabilities) {
        let kept = s.value > threshold;
        if kept {
            let mut cand = Candidate::new(c.extent.to_vec(), c.intent.to_vec()).score("stability", s.value);
            if s.estimated {
                cand.set_score("stability_estimated", 1.0);
            }
            cands.push(cand);
        }
        out.concepts.push(MinedConcept {
            side,
            concept: c,
            stability: Some(s),
            kept,
        });
    }
    Ok(cands)
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// |a ∩ b| / min(|a|, |b|).
fn similarity(a: &[usize], b: &[usize]) -> f64 {
    let m = a.len().min(b.len());
    if m == 0 {
        0.0
    } else {
        intersect(a, b).len() as f64 / m as f64
    }
}

fn min_score(a: &Candidate, b: &Candidate, name: &'static str) -> Option<f64> {
    match (a.get_score(name), b.get_score(name)) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

/// Pairs each positive candidate with each negative one whose pair columns
/// are similar enough: genes are united, pair columns intersected.
fn assemble(positives: &[Candidate], negatives: &[Candidate], alpha1: f64) -> Vec<Candidate> {
    let mut out = Vec::new();
    for p in positives {
        for n in negatives {
            let sim = similarity(&p.cols, &n.cols);
            if sim < alpha1 {
                continue;
            }
            let cols = intersect(&p.cols, &n.cols);
            if cols.is_empty() {
                continue;
            }
            let mut c = Candidate::new(union(&p.genes, &n.genes), cols);
            c.up = p.genes.clone();
            c.down = n.genes.clone();
            for name in ["stability", "stability_estimated"] {
                if let Some(v) = min_score(p, n, name) {
                    c.set_score(name, v);
                }
            }
            c.set_score("condition_similarity", sim);
            out.push(c);
        }
    }
    let mut out = dedup_footprints(out);
    sort_signed(&mut out);
    out
}

fn sort_signed(cands: &mut [Candidate]) {
    cands.sort_by(|a, b| {
        b.genes
            .len()
            .cmp(&a.genes.len())
            .then(b.cols.len().cmp(&a.cols.len()))
            .then_with(|| a.genes.cmp(&b.genes))
            .then_with(|| a.cols.cmp(&b.cols))
    });
}

/// Sign groups of `a` and `b` restricted to `genes`, if they agree up to
/// swapping and neither group is empty.
fn compatible_groups(a: &Candidate, b: &Candidate, genes: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
    let (au, ad) = (intersect(&a.up, genes), intersect(&a.down, genes));
    let (bu, bd) = (intersect(&b.up, genes), intersect(&b.down, genes));
    if au.is_empty() || ad.is_empty() {
        return None;
    }
    ((au == bu && ad == bd) || (au == bd && ad == bu)).then_some((au, ad))
}

/// One pass: each surviving candidate absorbs every later candidate whose
/// gene sets are similar enough and whose sign groups line up; genes are
/// intersected, pair columns united.
fn merge_pass(items: &[Candidate], alpha2: f64) -> (Vec<Candidate>, bool) {
    let mut absorbed = vec![false; items.len()];
    let mut out = Vec::new();
    let mut changed = false;
    for i in 0..items.len() {
        if absorbed[i] {
            continue;
        }
        let mut acc = items[i].clone();
        for j in i + 1..items.len() {
            if absorbed[j] {
                continue;
            }
            let other = &items[j];
            let sim = similarity(&acc.genes, &other.genes);
            if sim < alpha2 {
                continue;
            }
            let genes = intersect(&acc.genes, &other.genes);
            let Some((up, down)) = compatible_groups(&acc, other, &genes) else {
                continue;
            };
            let mut merged = Candidate::new(genes, union(&acc.cols, &other.cols));
            merged.up = up;
            merged.down = down;
            for name in ["stability", "stability_estimated", "condition_similarity", "gene_similarity"] {
                if let Some(v) = min_score(&acc, other, name) {
                    merged.set_score(name, v);
                }
            }
            let prev = acc.get_score("gene_similarity").unwrap_or(1.0);
            merged.set_score("gene_similarity", prev.min(sim));
            acc = merged;
            absorbed[j] = true;
            changed = true;
        }
        out.push(acc);
    }
    let mut out = dedup_footprints(out);
    sort_signed(&mut out);
    (out, changed)
}

fn merge_by_genes(items: Vec<Candidate>, alpha2: f64, fixpoint: bool) -> Vec<Candidate> {
    let (mut current, mut changed) = merge_pass(&items, alpha2);
    while fixpoint && changed {
        (current, changed) = merge_pass(&current, alpha2);
    }
    current
}
