//! Acceptance checks: one PASS/FAIL line per criterion.
//!
//! Expected tables are typed in here independently of the library's
//! built-in examples, and every mined result is compared against a
//! brute-force oracle written directly from the definitions.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use biclust_core::discretize::{binarize_by_symbol_frequency, binarize_signs, trajectory, TrajectoryMode};
use biclust_core::fca::{enumerate_concepts, enumerate_concepts_with, BinaryContext, ConceptOptions, FormalConcept};
use biclust_core::measures::{bond, set_overlap, stability, stable_subset_count};
use biclust_core::rules::{extract_igb, supporting_objects, GenericRule};
use biclust_core::{
    coverage, export_profile, map_pair_columns_to_conditions, run, Algorithm, Bicluster, BitSet,
    ExpressionMatrix, PipelineConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

// ---------------------------------------------------------------- data

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn matrix(rows: &[&[f64]]) -> ExpressionMatrix {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    ExpressionMatrix::from_rows(ids("g", rows.len()), ids("c", rows[0].len()), &rows).unwrap()
}

fn six_by_six() -> ExpressionMatrix {
    matrix(&[
        &[10., 20., 5., 15., 0., 18.],
        &[20., 30., 15., 25., 26., 25.],
        &[23., 12., 8., 15., 20., 50.],
        &[30., 40., 25., 35., 35., 15.],
        &[13., 13., 18., 25., 30., 55.],
        &[20., 20., 15., 8., 12., 23.],
    ])
}

const ALL_PAIRS: [&[i8]; 6] = [
    &[1, -1, 1, -1, 1, -1, -1, -1, -1, 1, -1, 1, -1, 1, 1],
    &[1, -1, 1, 1, 1, -1, -1, -1, -1, 1, 1, 1, 1, 0, -1],
    &[-1, -1, -1, -1, 1, -1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    &[1, -1, 1, 1, -1, -1, -1, -1, -1, 1, 1, -1, 0, -1, -1],
    &[0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    &[0, -1, -1, -1, 1, -1, -1, -1, 1, -1, -1, 1, 1, 1, 1],
];

const ALL_PAIRS_BINARY: [&str; 6] = [
    "000100001010100",
    "000000001000001",
    "001100110000000",
    "000010001001011",
    "110001110000000",
    "101100000110000",
];

const ADJACENT: [&[i8]; 6] = [
    &[1, -1, 1, -1, 1],
    &[1, -1, 1, 1, -1],
    &[-1, -1, 1, 1, 1],
    &[1, -1, 1, 0, -1],
    &[0, 1, 1, 1, 1],
    &[0, -1, -1, 1, 1],
];

const ADJACENT_BINARY: [&str; 6] = ["00010", "00001", "00000", "00001", "11000", "10100"];

fn five_by_seven() -> ExpressionMatrix {
    matrix(&[
        &[10., 20., 8., 12., 9., 16., 10.],
        &[5., 10., 6., 14., 8., 18., 9.],
        &[2., 2., 2., 2., 2., 2., 2.],
        &[20., 10., 14., 9., 16., 10., 13.],
        &[10., 5., 8., 5., 10., 9., 11.],
    ])
}

const FIVE_BY_SEVEN_ADJACENT: [&[i8]; 5] = [
    &[1, -1, 1, -1, 1, -1],
    &[1, -1, 1, -1, 1, -1],
    &[0, 0, 0, 0, 0, 0],
    &[-1, 1, -1, 1, -1, 1],
    &[-1, 1, -1, 1, -1, 1],
];

const FIVE_BY_SEVEN_POSITIVE: [&str; 5] = ["101010", "101010", "000000", "010101", "010101"];
const FIVE_BY_SEVEN_NEGATIVE: [&str; 5] = ["010101", "010101", "000000", "101010", "101010"];

fn five_by_five() -> ExpressionMatrix {
    matrix(&[
        &[4., 5., 3., 6., 1.],
        &[8., 10., 6., 12., 2.],
        &[3., 3., 3., 3., 3.],
        &[7., 1., 9., 0., 8.],
        &[14., 2., 18., 0., 16.],
    ])
}

const FIVE_BY_FIVE_ALL_PAIRS: [&[i8]; 5] = [
    &[1, -1, 1, -1, -1, 1, -1, 1, -1, -1],
    &[1, -1, 1, -1, -1, 1, -1, 1, -1, -1],
    &[0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    &[-1, 1, -1, 1, 1, -1, 1, -1, -1, 1],
    &[-1, 1, -1, 1, 1, -1, 1, -1, -1, 1],
];

const FIVE_BY_FIVE_POSITIVE: [&str; 5] = ["1010010100", "1010010100", "0000000000", "0101101001", "0101101001"];
const FIVE_BY_FIVE_NEGATIVE: [&str; 5] = ["0101101011", "0101101011", "0000000000", "1010010110", "1010010110"];

fn letters_context() -> BinaryContext {
    let rows = ["bg", "acg", "defgh", "adefgh", "aefgh", "bfg", "afg", "aeg", "abcdefgh"];
    let sets: Vec<Vec<usize>> = rows
        .iter()
        .map(|r| r.bytes().map(|b| (b - b'a') as usize).collect())
        .collect();
    BinaryContext::from_object_sets(8, &sets).unwrap()
}

// ------------------------------------------------------------- helpers

fn one_based(xs: &[usize]) -> Vec<usize> {
    xs.iter().map(|x| x + 1).collect()
}

fn grid_matches(t: &biclust_core::TrajectoryMatrix, expected: &[&[i8]]) -> bool {
    t.n_genes() == expected.len() && expected.iter().enumerate().all(|(g, row)| t.row(g) == *row)
}

fn context_matches(ctx: &BinaryContext, expected: &[&str]) -> bool {
    ctx.n_objects() == expected.len()
        && expected.iter().enumerate().all(|(o, row)| {
            row.len() == ctx.n_attributes()
                && row.bytes().enumerate().all(|(a, b)| ctx.has(o, a) == (b == b'1'))
        })
}

/// (1-based genes, 1-based columns) of every concept.
fn concept_set(concepts: &[FormalConcept]) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    concepts
        .iter()
        .map(|c| (one_based(&c.extent_vec()), one_based(&c.intent_vec())))
        .collect()
}

fn expected_set(items: &[(&[usize], &[usize])]) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    items.iter().map(|(a, b)| (a.to_vec(), b.to_vec())).collect()
}

fn rule_set(rules: &[GenericRule]) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    rules
        .iter()
        .map(|r| (one_based(&r.premise), one_based(&r.conclusion)))
        .collect()
}

fn footprint(b: &Bicluster) -> (Vec<usize>, Vec<usize>) {
    (one_based(&b.genes), one_based(b.pair_columns.as_deref().unwrap_or(&[])))
}

fn mask_set(universe: usize, mask: u64) -> BitSet {
    BitSet::from_indices(universe, (0..universe).filter(|&i| mask >> i & 1 == 1))
}

fn random_context(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> BinaryContext {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let density = rng.gen_range(0.2..0.8);
    let sets: Vec<Vec<usize>> = (0..n)
        .map(|_| (0..m).filter(|_| rng.gen_bool(density)).collect())
        .collect();
    BinaryContext::from_object_sets(m, &sets).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ExpressionMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| f64::from(rng.gen_range(0..5))).collect())
        .collect();
    ExpressionMatrix::from_rows(ids("g", n), ids("c", m), &rows).unwrap()
}

// ------------------------------------------------------------- oracles

/// Objects having every attribute of `items`, by scanning rows.
fn oracle_extent(ctx: &BinaryContext, items: &BitSet) -> BitSet {
    BitSet::from_indices(
        ctx.n_objects(),
        (0..ctx.n_objects()).filter(|&o| items.iter().all(|a| ctx.has(o, a))),
    )
}

/// Attributes shared by every object of `objects`, by scanning columns.
fn oracle_intent(ctx: &BinaryContext, objects: &BitSet) -> BitSet {
    BitSet::from_indices(
        ctx.n_attributes(),
        (0..ctx.n_attributes()).filter(|&a| objects.iter().all(|o| ctx.has(o, a))),
    )
}

fn oracle_concepts(ctx: &BinaryContext, min_extent: usize, min_intent: usize) -> Vec<FormalConcept> {
    let m = ctx.n_attributes();
    let mut out = Vec::new();
    for mask in 0..1u64 << m {
        let b = mask_set(m, mask);
        let a = oracle_extent(ctx, &b);
        if oracle_intent(ctx, &a) == b && a.len() >= min_extent && b.len() >= min_intent {
            out.push(FormalConcept { intent: b, extent: a });
        }
    }
    out.sort();
    out
}

/// The IGB set definition evaluated over every itemset.
fn oracle_igb(ctx: &BinaryContext, minsupp: f64, minconf: f64) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    let m = ctx.n_attributes();
    let n = ctx.n_objects() as f64;
    let all: Vec<u64> = (0..1u64 << m).collect();
    let supp: Vec<usize> = all.iter().map(|&x| oracle_extent(ctx, &mask_set(m, x)).len()).collect();
    let closure = |x: u64| -> u64 {
        let ext = oracle_extent(ctx, &mask_set(m, x));
        oracle_intent(ctx, &ext).iter().fold(0u64, |acc, a| acc | 1 << a)
    };
    let closures: Vec<u64> = all.iter().map(|&x| closure(x)).collect();
    let frequent_closed: Vec<u64> = all
        .iter()
        .copied()
        .filter(|&x| closures[x as usize] == x && supp[x as usize] as f64 / n >= minsupp - 1e-12)
        .collect();
    let is_min_gen = |g: u64, target: u64| {
        closures[g as usize] == target
            && (0..m).filter(|&i| g >> i & 1 == 1).all(|i| closures[(g & !(1 << i)) as usize] != target)
    };
    let mut rules = BTreeSet::new();
    for &big in &frequent_closed {
        if big == 0 {
            continue;
        }
        for &small in &frequent_closed {
            if small & !big != 0 {
                continue;
            }
            for gs in 0..1u64 << m {
                if gs & !small != 0 || !is_min_gen(gs, small) {
                    continue;
                }
                let conclusion = big & !gs;
                if conclusion == 0 {
                    continue;
                }
                let conf = supp[big as usize] as f64 / supp[gs as usize] as f64;
                if conf < minconf {
                    continue;
                }
                // no proper subset of gs gives a confident rule towards big
                let dominated = (0..gs)
                    .filter(|&g2| g2 & !gs == 0 && g2 != gs)
                    .any(|g2| supp[big as usize] as f64 / supp[g2 as usize] as f64 >= minconf);
                if dominated {
                    continue;
                }
                let bits = |x: u64| (0..m).filter(|&i| x >> i & 1 == 1).collect::<Vec<_>>();
                rules.insert((bits(gs), bits(conclusion)));
            }
        }
    }
    rules
}

fn oracle_stable_count(ctx: &BinaryContext, c: &FormalConcept) -> u64 {
    let objs = c.extent_vec();
    (0..1u64 << objs.len())
        .filter(|&mask| {
            let sub = BitSet::from_indices(
                ctx.n_objects(),
                objs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &o)| o),
            );
            oracle_intent(ctx, &sub) == c.intent
        })
        .count() as u64
}

// ----------------------------------------------------------- criteria

fn criterion_biarm() -> Check {
    let m = six_by_six();
    let t = trajectory(&m, TrajectoryMode::AllPairs);
    ensure!(grid_matches(&t, &ALL_PAIRS), "all-pairs trajectory differs");
    let k = binarize_by_symbol_frequency(&t);
    ensure!(context_matches(&k, &ALL_PAIRS_BINARY), "binary context differs");
    let rules = extract_igb(&k, 0.3, 0.8).map_err(|e| e.to_string())?;
    let expected = expected_set(&[(&[3], &[4]), (&[7], &[8]), (&[11], &[4]), (&[8], &[7]), (&[15], &[9])]);
    let got = rule_set(&rules);
    ensure!(expected.is_subset(&got), "missing rules: got {got:?}");
    for r in rules.iter().filter(|r| expected.contains(&(one_based(&r.premise), one_based(&r.conclusion)))) {
        ensure!(r.support == 1.0 / 3.0 && r.confidence == 1.0, "rule {r:?} has wrong measures");
    }
    let r34 = rules.iter().find(|r| r.premise == [2] && r.conclusion == [3]).unwrap();
    let genes = supporting_objects(&k, r34).map_err(|e| e.to_string())?;
    let oracle: Vec<usize> = (0..k.n_objects()).filter(|&g| k.has(g, 2) && k.has(g, 3)).collect();
    ensure!(genes == oracle && one_based(&genes) == [3, 6], "supporting genes {genes:?}");
    Ok(format!("{} rules, all five expected present; 3 => 4 supported by g3 g6", rules.len()))
}

fn criterion_bifca_plus() -> Check {
    let m = six_by_six();
    let t = trajectory(&m, TrajectoryMode::Adjacent);
    ensure!(grid_matches(&t, &ADJACENT), "adjacent trajectory differs");
    let k = binarize_by_symbol_frequency(&t);
    ensure!(context_matches(&k, &ADJACENT_BINARY), "binary context differs");
    let concepts = enumerate_concepts(&k, 1, 1).map_err(|e| e.to_string())?;
    let expected = expected_set(&[(&[5, 6], &[1]), (&[2, 4], &[5]), (&[5], &[1, 2]), (&[6], &[1, 3]), (&[1], &[4])]);
    ensure!(concept_set(&concepts) == expected, "concepts {:?}", concept_set(&concepts));
    ensure!(set_overlap(&[1, 2], &[1, 3]) == 1.0 / 3.0, "FC3/FC4 overlap");
    let cfg = |b| PipelineConfig { minbond: Some(b), ..Default::default() };
    let loose = run(Algorithm::BifcaPlus, &m, &cfg(0.5)).map_err(|e| e.to_string())?;
    ensure!(loose.biclusters.len() == 5, "minbond 0.5 kept {}", loose.biclusters.len());
    let tight = run(Algorithm::BifcaPlus, &m, &cfg(0.3)).map_err(|e| e.to_string())?;
    let fps: BTreeSet<_> = tight.biclusters.iter().map(footprint).collect();
    let fc3 = fps.contains(&(vec![5], vec![1, 2]));
    let fc4 = fps.contains(&(vec![6], vec![1, 3]));
    ensure!(fc3 ^ fc4, "minbond 0.3 kept FC3={fc3} FC4={fc4}");
    Ok(format!("5 concepts; minbond 0.5 keeps 5, minbond 0.3 keeps {} with one of FC3/FC4", tight.biclusters.len()))
}

fn criterion_bifca() -> Check {
    let m = six_by_six();
    let t = trajectory(&m, TrajectoryMode::AllPairs);
    ensure!(grid_matches(&t, &ALL_PAIRS), "all-pairs trajectory differs");
    let k = binarize_by_symbol_frequency(&t);
    ensure!(context_matches(&k, &ALL_PAIRS_BINARY), "binary context differs");
    let concepts = enumerate_concepts(&k, 1, 1).map_err(|e| e.to_string())?;
    let expected = expected_set(&[
        (&[1, 3, 6], &[4]),
        (&[1, 2, 4], &[9]),
        (&[5, 6], &[1]),
        (&[3, 6], &[3, 4]),
        (&[3, 5], &[7, 8]),
        (&[3], &[3, 4, 7, 8]),
        (&[1, 6], &[4, 11]),
        (&[2, 4], &[9, 15]),
        (&[5], &[1, 2, 6, 7, 8]),
        (&[6], &[1, 3, 4, 10, 11]),
        (&[1], &[4, 9, 11, 13]),
        (&[4], &[5, 9, 12, 14, 15]),
    ]);
    ensure!(concept_set(&concepts) == expected, "concepts {:?}", concept_set(&concepts));
    ensure!(set_overlap(&[7, 8], &[3, 4, 7, 8]) == 0.5, "FC5/FC6 overlap");
    let cfg = |b| PipelineConfig { minbond: Some(b), mincondition: Some(1), ..Default::default() };
    let fc5 = (vec![3, 5], vec![7, 8]);
    let fc6 = (vec![3], vec![3, 4, 7, 8]);
    let loose = run(Algorithm::Bifca, &m, &cfg(0.6)).map_err(|e| e.to_string())?;
    let fps: BTreeSet<_> = loose.biclusters.iter().map(footprint).collect();
    ensure!(fps.contains(&fc5) && fps.contains(&fc6), "0.6 must keep FC5 and FC6");
    let tight = run(Algorithm::Bifca, &m, &cfg(0.3)).map_err(|e| e.to_string())?;
    let fps: BTreeSet<_> = tight.biclusters.iter().map(footprint).collect();
    ensure!(!fps.contains(&fc5) && fps.contains(&fc6), "0.3 must keep only FC6");
    Ok("12 concepts; threshold 0.6 keeps FC5 and FC6, 0.3 keeps FC6 only".into())
}

fn criterion_nbic_arm() -> Check {
    let m = five_by_seven();
    let t = trajectory(&m, TrajectoryMode::Adjacent);
    ensure!(grid_matches(&t, &FIVE_BY_SEVEN_ADJACENT), "adjacent trajectory differs");
    let s = binarize_signs(&t);
    ensure!(context_matches(&s.positive, &FIVE_BY_SEVEN_POSITIVE), "positive context differs");
    ensure!(context_matches(&s.negative, &FIVE_BY_SEVEN_NEGATIVE), "negative context differs");
    let expected = expected_set(&[
        (&[1], &[3, 5]),
        (&[3], &[1, 5]),
        (&[5], &[1, 3]),
        (&[2], &[4, 6]),
        (&[4], &[2, 6]),
        (&[6], &[2, 4]),
    ]);
    let mut total = 0;
    for ctx in [&s.positive, &s.negative] {
        let rules = extract_igb(ctx, 0.2, 0.9).map_err(|e| e.to_string())?;
        ensure!(rule_set(&rules) == expected, "rules {:?}", rule_set(&rules));
        ensure!(rules.iter().all(|r| r.support == 0.4 && r.confidence == 1.0), "rule measures");
        total += rules.len();
    }
    let cfg = PipelineConfig {
        minsupp: Some(0.2),
        minconf: Some(0.9),
        alpha1: Some(0.9),
        alpha2: Some(0.9),
        ..Default::default()
    };
    let out = run(Algorithm::NbicArm, &m, &cfg).map_err(|e| e.to_string())?;
    let fps: Vec<_> = out.biclusters.iter().map(footprint).collect();
    ensure!(fps == [(vec![1, 2, 4, 5], vec![1, 2, 3, 4, 5, 6])], "biclusters {fps:?}");
    Ok(format!("{total} rules; final <g1 g2 g4 g5; C1..C6>"))
}

fn criterion_nbf() -> Check {
    let m = five_by_five();
    let t = trajectory(&m, TrajectoryMode::AllPairs);
    ensure!(grid_matches(&t, &FIVE_BY_FIVE_ALL_PAIRS), "all-pairs trajectory differs");
    let s = binarize_signs(&t);
    ensure!(context_matches(&s.positive, &FIVE_BY_FIVE_POSITIVE), "positive context differs");
    ensure!(context_matches(&s.negative, &FIVE_BY_FIVE_NEGATIVE), "negative context differs");
    let pos = enumerate_concepts(&s.positive, 1, 1).map_err(|e| e.to_string())?;
    let neg = enumerate_concepts(&s.negative, 1, 1).map_err(|e| e.to_string())?;
    ensure!(
        concept_set(&pos) == expected_set(&[(&[1, 2], &[1, 3, 6, 8]), (&[4, 5], &[2, 4, 5, 7, 10])]),
        "positive concepts {:?}",
        concept_set(&pos)
    );
    ensure!(
        concept_set(&neg)
            == expected_set(&[(&[4, 5], &[1, 3, 6, 8, 9]), (&[1, 2], &[2, 4, 5, 7, 9, 10]), (&[1, 2, 4, 5], &[9])]),
        "negative concepts {:?}",
        concept_set(&neg)
    );
    let mut printed = Vec::new();
    for (ctx, cs) in [(&s.positive, &pos), (&s.negative, &neg)] {
        for c in cs.iter() {
            let v = stability(ctx, c).value;
            let exact = oracle_stable_count(ctx, c) as f64 / (1u64 << c.extent.len()) as f64;
            ensure!(v == exact, "stability {v} vs oracle {exact}");
            let reference = if c.extent.len() == 4 { 0.56 } else { 0.75 };
            ensure!((v - reference).abs() <= 0.005, "stability {v} vs printed {reference}");
            printed.push(v);
        }
    }
    let cfg = PipelineConfig {
        minstability: Some(0.6),
        alpha1: Some(0.7),
        alpha2: Some(0.7),
        ..Default::default()
    };
    let out = run(Algorithm::Nbf, &m, &cfg).map_err(|e| e.to_string())?;
    let dropped: Vec<_> = out.concepts.iter().filter(|c| !c.kept).map(|c| one_based(&c.concept.extent_vec())).collect();
    ensure!(dropped == [vec![1, 2, 4, 5]], "dropped {dropped:?}");
    ensure!(out.biclusters.len() == 1, "{} biclusters", out.biclusters.len());
    let b = &out.biclusters[0];
    ensure!(
        one_based(&b.genes) == [1, 2, 4, 5] && one_based(&b.conditions) == [1, 2, 3, 4, 5],
        "final {:?}",
        b
    );
    Ok(format!("stabilities {printed:?}; FC3- dropped; final <g1 g2 g4 g5; c1..c5>"))
}

fn criterion_measures() -> Check {
    let k = letters_context();
    let b = bond(&k, &[0, 1]).map_err(|e| e.to_string())?;
    ensure!(b == 0.125, "bond(ab) = {b}");
    let extent = BitSet::from_indices(9, [2, 3, 4, 5, 6, 8]);
    let c = FormalConcept { intent: oracle_intent(&k, &extent), extent };
    ensure!(c.intent_vec() == [5, 6], "intent {:?}", c.intent_vec());
    let s = stability(&k, &c).value;
    let brute = oracle_stable_count(&k, &c);
    ensure!(brute == 38, "oracle count {brute}");
    ensure!(s == brute as f64 / 64.0, "stability {s} vs {brute}/64");
    ensure!(stable_subset_count(&k, &c) == 38u32.into(), "big-integer count");
    ensure!((s - 0.593).abs() <= 0.001, "stability {s}");
    Ok(format!("bond(ab) = {b}; stability = {brute}/64 = {s}"))
}

fn criterion_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);
    let mut concept_cases = 0;
    for _ in 0..250 {
        let ctx = random_context(&mut rng, 10, 12);
        let me = rng.gen_range(1..=3);
        let mi = rng.gen_range(1..=3);
        let jobs = rng.gen_range(0..=2);
        let opts = ConceptOptions { min_extent: me, min_intent: mi, max_concepts: None, jobs };
        let got = enumerate_concepts_with(&ctx, &opts).map_err(|e| e.to_string())?;
        ensure!(got == oracle_concepts(&ctx, me, mi), "concept mismatch on case {concept_cases}");
        concept_cases += 1;
    }
    let mut igb_cases = 0;
    for _ in 0..120 {
        let ctx = random_context(&mut rng, 8, 10);
        let minsupp = f64::from(rng.gen_range(1..=6)) / 10.0;
        let minconf = f64::from(rng.gen_range(3..=10)) / 10.0;
        let got = extract_igb(&ctx, minsupp, minconf).map_err(|e| e.to_string())?;
        let oracle = oracle_igb(&ctx, minsupp, minconf);
        ensure!(rule_set(&got).len() == got.len(), "duplicate rules");
        let got_keys: BTreeSet<_> = got.iter().map(|r| (r.premise.clone(), r.conclusion.clone())).collect();
        ensure!(got_keys == oracle, "IGB mismatch at minsupp {minsupp} minconf {minconf}");
        igb_cases += 1;
    }
    let mut stability_checks = 0;
    for _ in 0..60 {
        let ctx = random_context(&mut rng, 15, 6);
        for c in enumerate_concepts(&ctx, 1, 1).map_err(|e| e.to_string())? {
            if c.extent.len() > 15 {
                continue;
            }
            let exact = oracle_stable_count(&ctx, &c);
            let got = stability(&ctx, &c);
            ensure!(!got.estimated && got.value == exact as f64 / (1u64 << c.extent.len()) as f64, "stability mismatch");
            stability_checks += 1;
        }
    }
    Ok(format!(
        "{concept_cases} concept contexts, {igb_cases} IGB contexts, {stability_checks} stability values; 0 mismatches"
    ))
}

fn signs_partition(t: &biclust_core::TrajectoryMatrix, b: &Bicluster) -> bool {
    let cols = b.pair_columns.as_deref().unwrap_or(&[]);
    let first = b.genes[0];
    let mut groups = (0, 0);
    for &g in &b.genes {
        let same = cols.iter().all(|&k| t.value(g, k) == t.value(first, k) && t.value(g, k) != 0);
        let opposite = cols.iter().all(|&k| t.value(g, k) == -t.value(first, k) && t.value(g, k) != 0);
        match (same, opposite) {
            (true, _) => groups.0 += 1,
            (_, true) => groups.1 += 1,
            _ => return false,
        }
    }
    groups.0 > 0 && groups.1 > 0
}

fn criterion_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let ctx = random_context(&mut rng, 9, 9);
        let (n, m) = (ctx.n_objects(), ctx.n_attributes());
        let a = mask_set(n, rng.gen::<u64>());
        let b = mask_set(m, rng.gen::<u64>());
        let duality = a.is_subset(&ctx.extent_of_set(&b)) == b.is_subset(&ctx.intent_of_set(&a));
        ensure!(duality, "Galois duality");
        let b2 = b.union(&mask_set(m, rng.gen::<u64>()));
        let cb = ctx.close_set(&b);
        ensure!(b.is_subset(&cb), "closure not extensive");
        ensure!(cb.is_subset(&ctx.close_set(&b2)), "closure not isotone");
        ensure!(ctx.close_set(&cb) == cb, "closure not idempotent");
        let attrs = b.to_vec();
        if !attrs.is_empty() {
            let extra = rng.gen_range(0..m);
            let mut bigger = attrs.clone();
            bigger.push(extra);
            let (x, y) = (bond(&ctx, &attrs).unwrap(), bond(&ctx, &bigger).unwrap());
            ensure!(y <= x, "bond rose from {x} to {y}");
        }
    }
    // coverage never decreases as biclusters are added
    for _ in 0..50 {
        let mat = random_matrix(&mut rng, 6, 5);
        let mut bs = Vec::new();
        let mut prev = coverage(&mat, &bs).unwrap();
        for _ in 0..6 {
            let (g0, c0) = (rng.gen_range(0..6), rng.gen_range(0..5));
            let genes: Vec<usize> = (0..6).filter(|&g| g == g0 || rng.gen_bool(0.4)).collect();
            let conds: Vec<usize> = (0..5).filter(|&c| c == c0 || rng.gen_bool(0.4)).collect();
            bs.push(Bicluster::new(Algorithm::Bifca, mat.dims(), genes, conds));
            let next = coverage(&mat, &bs).unwrap();
            ensure!(
                next.total_coverage >= prev.total_coverage
                    && next.gene_coverage >= prev.gene_coverage
                    && next.condition_coverage >= prev.condition_coverage,
                "coverage decreased"
            );
            prev = next;
        }
    }
    // determinism across worker counts and sign groups of negative-correlation output
    let mut negative_outputs = 0;
    for case in 0..40 {
        let (n, m) = (rng.gen_range(4..12), rng.gen_range(3..7));
        let mat = random_matrix(&mut rng, n, m);
        let configs = [
            (Algorithm::Biarm, PipelineConfig { minsupp: Some(0.2), minconf: Some(0.6), minjaccard: Some(0.5), ..Default::default() }),
            (Algorithm::BifcaPlus, PipelineConfig { minbond: Some(0.5), ..Default::default() }),
            (Algorithm::Bifca, PipelineConfig { minbond: Some(0.5), mincondition: Some(2), ..Default::default() }),
            (Algorithm::NbicArm, PipelineConfig { minsupp: Some(0.2), minconf: Some(0.6), alpha1: Some(0.5), alpha2: Some(0.5), ..Default::default() }),
            (Algorithm::Nbf, PipelineConfig { minstability: Some(0.2), alpha1: Some(0.5), alpha2: Some(0.5), ..Default::default() }),
        ];
        for (alg, cfg) in configs {
            let one = run(alg, &mat, &PipelineConfig { jobs: 1, ..cfg.clone() }).map_err(|e| e.to_string())?;
            let four = run(alg, &mat, &PipelineConfig { jobs: 4, ..cfg.clone() }).map_err(|e| e.to_string())?;
            let pairs = one.pair_columns().to_vec();
            let ser = |bs: &[Bicluster]| {
                let recs: Vec<_> = bs.iter().map(|b| b.to_record(&mat, Some(&pairs)).unwrap()).collect();
                serde_json::to_string(&recs).unwrap()
            };
            ensure!(ser(&one.biclusters) == ser(&four.biclusters), "{alg} differs between 1 and 4 jobs (case {case})");
            for b in &one.biclusters {
                b.validate(mat.dims()).map_err(|e| e.to_string())?;
                let mapped = map_pair_columns_to_conditions(b.pair_columns.as_deref().unwrap(), &pairs).unwrap();
                ensure!(mapped == b.conditions, "{alg} conditions not the back-mapped pair columns");
                if matches!(alg, Algorithm::NbicArm | Algorithm::Nbf) {
                    ensure!(signs_partition(&one.trajectory, b), "{alg} output without opposite sign groups: {b:?}");
                    negative_outputs += 1;
                }
            }
        }
    }
    Ok(format!(
        "duality, closure, bond, coverage and determinism hold; {negative_outputs} negative-correlation biclusters checked"
    ))
}

fn synthetic_yeast_shape(seed: u64) -> ExpressionMatrix {
    let (n, m) = (2884, 17);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|g| {
            let base = &profiles[g % profiles.len()];
            let planted = g % 3 == 0;
            (0..m)
                .map(|c| {
                    let noise: f64 = rng.gen_range(-1.0..1.0);
                    let v = if planted { base[c] + 0.2 * noise } else { 2.0 * noise };
                    (v * 100.0).round() / 100.0
                })
                .collect()
        })
        .collect();
    ExpressionMatrix::from_rows(ids("YG", n), ids("t", m), &rows).unwrap()
}

fn criterion_scale() -> Check {
    let mat = synthetic_yeast_shape(2884);
    let cfg = PipelineConfig {
        minbond: Some(0.5),
        min_extent: 5,
        min_intent: 2,
        max_concepts: Some(200_000),
        ..Default::default()
    };
    let out = run(Algorithm::BifcaPlus, &mat, &cfg).map_err(|e| e.to_string())?;
    ensure!(!out.biclusters.is_empty(), "no biclusters");
    let report = coverage(&mat, &out.biclusters).map_err(|e| e.to_string())?;
    ensure!(report.matrix_cells == 2884 * 17, "cell count");
    ensure!((0.0..=1.0).contains(&report.total_coverage) && report.total_coverage > 0.0, "coverage {report:?}");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("coverage.json"), json).map_err(|e| e.to_string())?;
    let b = &out.biclusters[0];
    let path = dir.path().join("profile.tsv");
    export_profile(&mat, b, &path).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = text.lines().collect();
    ensure!(lines.len() == b.genes.len() + 1, "profile rows");
    ensure!(lines.iter().all(|l| l.split('\t').count() == b.conditions.len() + 1), "profile columns");
    Ok(format!(
        "{} concepts, {} biclusters, total coverage {:.4}",
        out.concepts.len(),
        out.biclusters.len(),
        report.total_coverage
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "BiARM worked example", Duration::from_secs(1), criterion_biarm),
        (2, "BiFCA+ worked example", Duration::from_secs(1), criterion_bifca_plus),
        (3, "BiFCA worked example", Duration::from_secs(1), criterion_bifca),
        (4, "NBic-ARM worked example", Duration::from_secs(1), criterion_nbic_arm),
        (5, "NBF worked example", Duration::from_secs(1), criterion_nbf),
        (6, "bond and stability values", Duration::from_secs(1), criterion_measures),
        (7, "oracle equivalence suites", Duration::from_secs(60), criterion_oracles),
        (8, "property suites", Duration::from_secs(60), criterion_properties),
        (9, "scale smoke test", Duration::from_secs(120), criterion_scale),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (n, name, limit, f) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("criterion {n} PASS {name} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failures += 1;
                println!("criterion {n} FAIL {name} ({elapsed:.2?}): {why}");
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
