//! Built-in worked examples with their expected intermediate tables, replayed
//! end to end.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::bicluster::Bicluster;
use crate::discretize::{binarize_by_symbol_frequency, binarize_signs, trajectory, TrajectoryMatrix, TrajectoryMode};
use crate::error::{Error, Result};
use crate::fca::{enumerate_concepts, BinaryContext, FormalConcept};
use crate::matrix_io::ExpressionMatrix;
use crate::measures::{set_overlap, stability};
use crate::pipelines::{run, PipelineConfig, Side};
use crate::rules::{extract_igb, supporting_objects, GenericRule};
use crate::bicluster::Algorithm;

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn matrix(rows: &[&[f64]]) -> ExpressionMatrix {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    ExpressionMatrix::from_rows(ids("g", rows.len()), ids("c", rows[0].len()), &rows)
        .expect("built-in matrices are valid")
}

/// Six genes over six conditions; shared by the BiARM, BiFCA+ and BiFCA
/// examples.
pub fn pair_example_matrix() -> ExpressionMatrix {
    matrix(&[
        &[10.0, 20.0, 5.0, 15.0, 0.0, 18.0],
        &[20.0, 30.0, 15.0, 25.0, 26.0, 25.0],
        &[23.0, 12.0, 8.0, 15.0, 20.0, 50.0],
        &[30.0, 40.0, 25.0, 35.0, 35.0, 15.0],
        &[13.0, 13.0, 18.0, 25.0, 30.0, 55.0],
        &[20.0, 20.0, 15.0, 8.0, 12.0, 23.0],
    ])
}

/// Five genes over seven conditions with two anti-correlated groups.
pub fn nbic_arm_example_matrix() -> ExpressionMatrix {
    matrix(&[
        &[10.0, 20.0, 8.0, 12.0, 9.0, 16.0, 10.0],
        &[5.0, 10.0, 6.0, 14.0, 8.0, 18.0, 9.0],
        &[2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0],
        &[20.0, 10.0, 14.0, 9.0, 16.0, 10.0, 13.0],
        &[10.0, 5.0, 8.0, 5.0, 10.0, 9.0, 11.0],
    ])
}

/// Five genes over five conditions with two anti-correlated groups.
pub fn nbf_example_matrix() -> ExpressionMatrix {
    matrix(&[
        &[4.0, 5.0, 3.0, 6.0, 1.0],
        &[8.0, 10.0, 6.0, 12.0, 2.0],
        &[3.0, 3.0, 3.0, 3.0, 3.0],
        &[7.0, 1.0, 9.0, 0.0, 8.0],
        &[14.0, 2.0, 18.0, 0.0, 16.0],
    ])
}

/// Nine objects over attributes a..h.
pub fn galois_example_context() -> BinaryContext {
    let rows = ["bg", "acg", "defgh", "adefgh", "aefgh", "bfg", "afg", "aeg", "abcdefgh"];
    let sets: Vec<Vec<usize>> = rows
        .iter()
        .map(|r| r.bytes().map(|b| (b - b'a') as usize).collect())
        .collect();
    let rows = sets
        .iter()
        .map(|s| crate::bitset::BitSet::from_indices(8, s.iter().copied()))
        .collect();
    BinaryContext::from_bitsets(
        ids("", 9),
        "abcdefgh".chars().map(String::from).collect(),
        rows,
    )
    .expect("built-in context is valid")
}

pub const PAIR_EXAMPLE_ALL_PAIRS: [[i8; 15]; 6] = [
    [1, -1, 1, -1, 1, -1, -1, -1, -1, 1, -1, 1, -1, 1, 1],
    [1, -1, 1, 1, 1, -1, -1, -1, -1, 1, 1, 1, 1, 0, -1],
    [-1, -1, -1, -1, 1, -1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, -1, 1, 1, -1, -1, -1, -1, -1, 1, 1, -1, 0, -1, -1],
    [0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [0, -1, -1, -1, 1, -1, -1, -1, 1, -1, -1, 1, 1, 1, 1],
];

pub const PAIR_EXAMPLE_ALL_PAIRS_BINARY: [&str; 6] = [
    "000100001010100",
    "000000001000001",
    "001100110000000",
    "000010001001011",
    "110001110000000",
    "101100000110000",
];

pub const PAIR_EXAMPLE_ADJACENT: [[i8; 5]; 6] = [
    [1, -1, 1, -1, 1],
    [1, -1, 1, 1, -1],
    [-1, -1, 1, 1, 1],
    [1, -1, 1, 0, -1],
    [0, 1, 1, 1, 1],
    [0, -1, -1, 1, 1],
];

pub const PAIR_EXAMPLE_ADJACENT_BINARY: [&str; 6] = ["00010", "00001", "00000", "00001", "11000", "10100"];

/// (premise, conclusion) over 1-based pair columns.
pub const BIARM_RULES: [(&[usize], &[usize]); 5] = [
    (&[3], &[4]),
    (&[7], &[8]),
    (&[11], &[4]),
    (&[8], &[7]),
    (&[15], &[9]),
];

/// (1-based genes, 1-based pair columns), listed FC1..FC5.
pub const BIFCA_PLUS_CONCEPTS: [(&[usize], &[usize]); 5] = [
    (&[5, 6], &[1]),
    (&[2, 4], &[5]),
    (&[5], &[1, 2]),
    (&[6], &[1, 3]),
    (&[1], &[4]),
];

/// (1-based genes, 1-based pair columns), listed FC1..FC12.
pub const BIFCA_CONCEPTS: [(&[usize], &[usize]); 12] = [
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
];

pub const NBIC_ARM_ADJACENT: [[i8; 6]; 5] = [
    [1, -1, 1, -1, 1, -1],
    [1, -1, 1, -1, 1, -1],
    [0, 0, 0, 0, 0, 0],
    [-1, 1, -1, 1, -1, 1],
    [-1, 1, -1, 1, -1, 1],
];

/// Rules expected on each sign context, over 1-based pair columns.
pub const NBIC_ARM_RULES: [(&[usize], &[usize]); 6] = [
    (&[1], &[3, 5]),
    (&[3], &[1, 5]),
    (&[5], &[1, 3]),
    (&[2], &[4, 6]),
    (&[4], &[2, 6]),
    (&[6], &[2, 4]),
];

pub const NBF_ALL_PAIRS: [[i8; 10]; 5] = [
    [1, -1, 1, -1, -1, 1, -1, 1, -1, -1],
    [1, -1, 1, -1, -1, 1, -1, 1, -1, -1],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [-1, 1, -1, 1, 1, -1, 1, -1, -1, 1],
    [-1, 1, -1, 1, 1, -1, 1, -1, -1, 1],
];

/// (side, 1-based genes, 1-based pair columns, stability numerator / 2^|genes|).
pub const NBF_CONCEPTS: [(Side, &[usize], &[usize], u64); 5] = [
    (Side::Positive, &[1, 2], &[1, 3, 6, 8], 3),
    (Side::Positive, &[4, 5], &[2, 4, 5, 7, 10], 3),
    (Side::Negative, &[4, 5], &[1, 3, 6, 8, 9], 3),
    (Side::Negative, &[1, 2], &[2, 4, 5, 7, 9, 10], 3),
    (Side::Negative, &[1, 2, 4, 5], &[9], 9),
];

fn zero_based(xs: &[usize]) -> Vec<usize> {
    xs.iter().map(|x| x - 1).collect()
}

pub fn trajectory_matches<const P: usize>(traj: &TrajectoryMatrix, expected: &[[i8; P]]) -> bool {
    traj.n_genes() == expected.len()
        && traj.n_pairs() == P
        && expected.iter().enumerate().all(|(g, row)| traj.row(g) == row)
}

pub fn context_matches(ctx: &BinaryContext, expected: &[&str]) -> bool {
    ctx.n_objects() == expected.len()
        && expected.iter().enumerate().all(|(o, row)| {
            row.len() == ctx.n_attributes() && row.bytes().enumerate().all(|(a, b)| ctx.has(o, a) == (b == b'1'))
        })
}

/// Indicator rows of `sign` in a trajectory grid.
pub fn sign_rows<const P: usize>(grid: &[[i8; P]], sign: i8) -> Vec<String> {
    grid.iter()
        .map(|r| r.iter().map(|&v| if v == sign { '1' } else { '0' }).collect())
        .collect()
}

type ConceptKey = (Vec<usize>, Vec<usize>);

pub fn concept_keys(concepts: &[FormalConcept]) -> BTreeSet<ConceptKey> {
    concepts.iter().map(|c| (c.extent_vec(), c.intent_vec())).collect()
}

pub fn expected_concept_keys(expected: &[(&[usize], &[usize])]) -> BTreeSet<ConceptKey> {
    expected.iter().map(|(g, c)| (zero_based(g), zero_based(c))).collect()
}

pub fn rule_keys(rules: &[GenericRule]) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    rules.iter().map(|r| (r.premise.clone(), r.conclusion.clone())).collect()
}

pub fn expected_rule_keys(expected: &[(&[usize], &[usize])]) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    expected.iter().map(|(p, c)| (zero_based(p), zero_based(c))).collect()
}

fn has_footprint(bs: &[Bicluster], genes: &[usize], cols: &[usize]) -> bool {
    bs.iter().any(|b| b.genes == genes && b.pair_columns.as_deref() == Some(cols))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoldenId {
    BiarmCh3,
    BifcaPlusCh3,
    BifcaCh3,
    NbicArmCh4,
    NbfCh4,
}

impl GoldenId {
    pub const ALL: [GoldenId; 5] = [
        GoldenId::BiarmCh3,
        GoldenId::BifcaPlusCh3,
        GoldenId::BifcaCh3,
        GoldenId::NbicArmCh4,
        GoldenId::NbfCh4,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GoldenId::BiarmCh3 => "biarm-ch3",
            GoldenId::BifcaPlusCh3 => "bifca-plus-ch3",
            GoldenId::BifcaCh3 => "bifca-ch3",
            GoldenId::NbicArmCh4 => "nbic-arm-ch4",
            GoldenId::NbfCh4 => "nbf-ch4",
        }
    }
}

impl fmt::Display for GoldenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GoldenId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GoldenId::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown example `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenReport {
    pub id: GoldenId,
    pub stages: Vec<StageResult>,
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        self.stages.iter().all(|s| s.passed)
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.stages.push(StageResult {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for GoldenReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.stages {
            writeln!(
                f,
                "{} {}: {}",
                if s.passed { "PASS" } else { "FAIL" },
                s.name,
                s.detail
            )?;
        }
        write!(f, "{} {}", self.id, if self.passed() { "passed" } else { "FAILED" })
    }
}

fn describe(b: &Bicluster, m: &ExpressionMatrix) -> String {
    let g: Vec<&str> = b.genes.iter().map(|&i| m.gene_ids()[i].as_str()).collect();
    let c: Vec<&str> = b.conditions.iter().map(|&i| m.condition_ids()[i].as_str()).collect();
    format!("<{}; {}>", g.join(" "), c.join(" "))
}

pub fn run_golden(id: GoldenId) -> Result<GoldenReport> {
    let mut r = GoldenReport { id, stages: Vec::new() };
    match id {
        GoldenId::BiarmCh3 => biarm(&mut r)?,
        GoldenId::BifcaPlusCh3 => bifca_plus(&mut r)?,
        GoldenId::BifcaCh3 => bifca(&mut r)?,
        GoldenId::NbicArmCh4 => nbic_arm(&mut r)?,
        GoldenId::NbfCh4 => nbf(&mut r)?,
    }
    Ok(r)
}

fn biarm(r: &mut GoldenReport) -> Result<()> {
    let m = pair_example_matrix();
    let t = trajectory(&m, TrajectoryMode::AllPairs);
    r.check("trajectory", trajectory_matches(&t, &PAIR_EXAMPLE_ALL_PAIRS), "6x15 all-pairs grid");
    let k = binarize_by_symbol_frequency(&t);
    r.check("binary", context_matches(&k, &PAIR_EXAMPLE_ALL_PAIRS_BINARY), "6x15 binary grid");
    let rules = extract_igb(&k, 0.3, 0.8)?;
    let exact = rule_keys(&rules) == expected_rule_keys(&BIARM_RULES)
        && rules.iter().all(|x| x.support_count == 2 && x.confidence == 1.0);
    r.check("rules", exact, format!("{} generic rules, support 2/6, confidence 1", rules.len()));
    let r34 = rules.iter().find(|x| x.premise == [2] && x.conclusion == [3]);
    let genes = match r34 {
        Some(rule) => supporting_objects(&k, rule)?,
        None => Vec::new(),
    };
    r.check("supporting genes", genes == [2, 5], "rule 3 => 4 is supported by g3 g6");
    let cfg = PipelineConfig {
        minsupp: Some(0.3),
        minconf: Some(0.8),
        minjaccard: Some(1.0),
        ..Default::default()
    };
    let out = run(Algorithm::Biarm, &m, &cfg)?;
    let ok = out.biclusters.len() == out.candidates.len() && has_footprint(&out.biclusters, &[2, 5], &[2, 3]);
    r.check(
        "biclusters",
        ok,
        format!("{} biclusters, including <g3 g6; C3 C4>", out.biclusters.len()),
    );
    Ok(())
}

fn bifca_plus(r: &mut GoldenReport) -> Result<()> {
    let m = pair_example_matrix();
    let t = trajectory(&m, TrajectoryMode::Adjacent);
    r.check("trajectory", trajectory_matches(&t, &PAIR_EXAMPLE_ADJACENT), "6x5 adjacent grid");
    let k = binarize_by_symbol_frequency(&t);
    r.check("binary", context_matches(&k, &PAIR_EXAMPLE_ADJACENT_BINARY), "6x5 binary grid");
    let concepts = enumerate_concepts(&k, 1, 1)?;
    r.check(
        "concepts",
        concept_keys(&concepts) == expected_concept_keys(&BIFCA_PLUS_CONCEPTS),
        format!("{} concepts", concepts.len()),
    );
    let ov = set_overlap(BIFCA_PLUS_CONCEPTS[2].1, BIFCA_PLUS_CONCEPTS[3].1);
    r.check("overlap", ov == 1.0 / 3.0, format!("FC3/FC4 intent overlap {ov}"));
    let cfg = |minbond| PipelineConfig { minbond: Some(minbond), ..Default::default() };
    let loose = run(Algorithm::BifcaPlus, &m, &cfg(0.5))?;
    r.check("minbond 0.5", loose.biclusters.len() == 5, format!("{} biclusters", loose.biclusters.len()));
    let tight = run(Algorithm::BifcaPlus, &m, &cfg(0.3))?;
    let fc3 = has_footprint(&tight.biclusters, &[4], &[0, 1]);
    let fc4 = has_footprint(&tight.biclusters, &[5], &[0, 2]);
    r.check(
        "minbond 0.3",
        fc3 && !fc4,
        format!("{} biclusters, FC3 kept, FC4 dropped", tight.biclusters.len()),
    );
    Ok(())
}

fn bifca(r: &mut GoldenReport) -> Result<()> {
    let m = pair_example_matrix();
    let t = trajectory(&m, TrajectoryMode::AllPairs);
    r.check("trajectory", trajectory_matches(&t, &PAIR_EXAMPLE_ALL_PAIRS), "6x15 all-pairs grid");
    let k = binarize_by_symbol_frequency(&t);
    r.check("binary", context_matches(&k, &PAIR_EXAMPLE_ALL_PAIRS_BINARY), "6x15 binary grid");
    let concepts = enumerate_concepts(&k, 1, 1)?;
    r.check(
        "concepts",
        concept_keys(&concepts) == expected_concept_keys(&BIFCA_CONCEPTS),
        format!("{} concepts", concepts.len()),
    );
    let ov = set_overlap(BIFCA_CONCEPTS[4].1, BIFCA_CONCEPTS[5].1);
    r.check("overlap", ov == 0.5, format!("FC5/FC6 intent overlap {ov}"));
    let cfg = |minbond| PipelineConfig {
        minbond: Some(minbond),
        mincondition: Some(1),
        ..Default::default()
    };
    let fc5 = |bs: &[Bicluster]| has_footprint(bs, &[2, 4], &[6, 7]);
    let fc6 = |bs: &[Bicluster]| has_footprint(bs, &[2], &[2, 3, 6, 7]);
    let loose = run(Algorithm::Bifca, &m, &cfg(0.6))?;
    r.check(
        "minbond 0.6",
        fc5(&loose.biclusters) && fc6(&loose.biclusters),
        format!("{} biclusters, FC5 and FC6 kept", loose.biclusters.len()),
    );
    let tight = run(Algorithm::Bifca, &m, &cfg(0.3))?;
    r.check(
        "minbond 0.3",
        !fc5(&tight.biclusters) && fc6(&tight.biclusters),
        format!("{} biclusters, only FC6 of the pair kept", tight.biclusters.len()),
    );
    Ok(())
}

fn nbic_arm(r: &mut GoldenReport) -> Result<()> {
    let m = nbic_arm_example_matrix();
    let t = trajectory(&m, TrajectoryMode::Adjacent);
    r.check("trajectory", trajectory_matches(&t, &NBIC_ARM_ADJACENT), "5x6 adjacent grid");
    let s = binarize_signs(&t);
    let pos = sign_rows(&NBIC_ARM_ADJACENT, 1);
    let neg = sign_rows(&NBIC_ARM_ADJACENT, -1);
    let pos: Vec<&str> = pos.iter().map(String::as_str).collect();
    let neg: Vec<&str> = neg.iter().map(String::as_str).collect();
    r.check(
        "sign contexts",
        context_matches(&s.positive, &pos) && context_matches(&s.negative, &neg),
        "positive and negative 5x6 grids",
    );
    let mut all_ok = true;
    let mut n_rules = 0;
    for ctx in [&s.positive, &s.negative] {
        let rules = extract_igb(ctx, 0.2, 0.9)?;
        n_rules += rules.len();
        all_ok &= rule_keys(&rules) == expected_rule_keys(&NBIC_ARM_RULES)
            && rules.iter().all(|x| x.support == 0.4 && x.confidence == 1.0);
    }
    r.check("rules", all_ok, format!("{n_rules} generic rules, support 0.4, confidence 1"));
    let cfg = PipelineConfig {
        minsupp: Some(0.2),
        minconf: Some(0.9),
        alpha1: Some(0.9),
        alpha2: Some(0.9),
        ..Default::default()
    };
    let out = run(Algorithm::NbicArm, &m, &cfg)?;
    let ok = out.biclusters.len() == 1
        && out.biclusters[0].genes == [0, 1, 3, 4]
        && out.biclusters[0].pair_columns.as_deref() == Some(&[0, 1, 2, 3, 4, 5][..]);
    let detail = out
        .biclusters
        .iter()
        .map(|b| describe(b, &m))
        .collect::<Vec<_>>()
        .join(", ");
    r.check("bicluster", ok, detail);
    Ok(())
}

fn nbf(r: &mut GoldenReport) -> Result<()> {
    let m = nbf_example_matrix();
    let t = trajectory(&m, TrajectoryMode::AllPairs);
    r.check("trajectory", trajectory_matches(&t, &NBF_ALL_PAIRS), "5x10 all-pairs grid");
    let s = binarize_signs(&t);
    let pos = sign_rows(&NBF_ALL_PAIRS, 1);
    let neg = sign_rows(&NBF_ALL_PAIRS, -1);
    let pos: Vec<&str> = pos.iter().map(String::as_str).collect();
    let neg: Vec<&str> = neg.iter().map(String::as_str).collect();
    r.check(
        "sign contexts",
        context_matches(&s.positive, &pos) && context_matches(&s.negative, &neg),
        "positive and negative 5x10 grids",
    );
    let mut ok = true;
    for (side, ctx) in [(Side::Positive, &s.positive), (Side::Negative, &s.negative)] {
        let concepts = enumerate_concepts(ctx, 1, 1)?;
        let expected: Vec<_> = NBF_CONCEPTS.iter().filter(|c| c.0 == side).collect();
        let keys: BTreeSet<_> = expected.iter().map(|c| (zero_based(c.1), zero_based(c.2))).collect();
        ok &= concept_keys(&concepts) == keys;
        for c in &concepts {
            let e = expected.iter().find(|e| zero_based(e.1) == c.extent_vec());
            let want = e.map(|e| e.3 as f64 / (1u64 << e.1.len()) as f64);
            ok &= want == Some(stability(ctx, c).value);
        }
    }
    r.check("concepts", ok, "2 positive and 3 negative concepts with stabilities 3/4 and 9/16");
    let cfg = PipelineConfig {
        minstability: Some(0.6),
        alpha1: Some(0.7),
        alpha2: Some(0.7),
        ..Default::default()
    };
    let out = run(Algorithm::Nbf, &m, &cfg)?;
    let dropped: Vec<_> = out.concepts.iter().filter(|c| !c.kept).collect();
    r.check(
        "stability filter",
        dropped.len() == 1 && dropped[0].concept.extent.len() == 4,
        format!("{} concept(s) dropped", dropped.len()),
    );
    let ok = out.biclusters.len() == 1
        && out.biclusters[0].genes == [0, 1, 3, 4]
        && out.biclusters[0].conditions == [0, 1, 2, 3, 4];
    let detail = out
        .biclusters
        .iter()
        .map(|b| describe(b, &m))
        .collect::<Vec<_>>()
        .join(", ");
    r.check("bicluster", ok, detail);
    Ok(())
}
