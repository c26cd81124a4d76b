//! Trajectory (−1/0/+1) matrices over condition pairs and their binary
//! contexts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::fca::BinaryContext;
use crate::matrix_io::ExpressionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryMode {
    /// Pairs `(k, k+1)`.
    Adjacent,
    /// Every `(l, l2)` with `l < l2`, in lexicographic order.
    AllPairs,
}

impl fmt::Display for TrajectoryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrajectoryMode::Adjacent => "adjacent",
            TrajectoryMode::AllPairs => "all-pairs",
        })
    }
}

impl FromStr for TrajectoryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacent" => Ok(TrajectoryMode::Adjacent),
            "all-pairs" | "all_pairs" => Ok(TrajectoryMode::AllPairs),
            _ => Err(Error::Invalid(format!("unknown trajectory mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairColumn {
    pub left: usize,
    pub right: usize,
}

/// The pair-column map for `m` conditions.
pub fn pair_columns(m: usize, mode: TrajectoryMode) -> Vec<PairColumn> {
    match mode {
        TrajectoryMode::Adjacent => (0..m.saturating_sub(1))
            .map(|k| PairColumn { left: k, right: k + 1 })
            .collect(),
        TrajectoryMode::AllPairs => (0..m)
            .flat_map(|l| (l + 1..m).map(move |r| PairColumn { left: l, right: r }))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryMatrix {
    gene_ids: Vec<String>,
    condition_ids: Vec<String>,
    pairs: Vec<PairColumn>,
    values: Vec<i8>,
    mode: TrajectoryMode,
}

impl TrajectoryMatrix {
    pub fn n_genes(&self) -> usize {
        self.gene_ids.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn mode(&self) -> TrajectoryMode {
        self.mode
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn condition_ids(&self) -> &[String] {
        &self.condition_ids
    }

    pub fn pair_columns(&self) -> &[PairColumn] {
        &self.pairs
    }

    /// Labels of the form `left~right` built from condition ids.
    pub fn pair_labels(&self) -> Vec<String> {
        self.pairs
            .iter()
            .map(|p| format!("{}~{}", self.condition_ids[p.left], self.condition_ids[p.right]))
            .collect()
    }

    #[inline]
    pub fn value(&self, gene: usize, pair: usize) -> i8 {
        self.values[gene * self.pairs.len() + pair]
    }

    pub fn row(&self, gene: usize) -> &[i8] {
        let p = self.pairs.len();
        &self.values[gene * p..(gene + 1) * p]
    }

    pub fn negated(&self) -> Self {
        TrajectoryMatrix {
            values: self.values.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    fn indicator(&self, keep: impl Fn(i8) -> bool) -> BinaryContext {
        let p = self.pairs.len();
        let rows = (0..self.n_genes())
            .map(|g| BitSet::from_indices(p, (0..p).filter(|&k| keep(self.value(g, k)))))
            .collect();
        BinaryContext::from_bitsets(self.gene_ids.clone(), self.pair_labels(), rows)
            .expect("row widths match the pair map")
    }
}

/// Sign of the change from `left` to `right`, with exact equality.
pub fn trajectory(matrix: &ExpressionMatrix, mode: TrajectoryMode) -> TrajectoryMatrix {
    trajectory_with_epsilon(matrix, mode, 0.0).expect("zero epsilon is valid")
}

/// As [`trajectory`], but differences with magnitude `<= epsilon` count as ties.
pub fn trajectory_with_epsilon(
    matrix: &ExpressionMatrix,
    mode: TrajectoryMode,
    epsilon: f64,
) -> Result<TrajectoryMatrix> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::ParameterRange {
            name: "epsilon",
            value: epsilon,
            expected: "a finite value >= 0",
        });
    }
    let pairs = pair_columns(matrix.n_conditions(), mode);
    let mut values = Vec::with_capacity(matrix.n_genes() * pairs.len());
    for row in matrix.rows() {
        for p in &pairs {
            let d = row[p.right] - row[p.left];
            values.push(if d.abs() <= epsilon {
                0
            } else if d > 0.0 {
                1
            } else {
                -1
            });
        }
    }
    Ok(TrajectoryMatrix {
        gene_ids: matrix.gene_ids().to_vec(),
        condition_ids: matrix.condition_ids().to_vec(),
        pairs,
        values,
        mode,
    })
}

// Tie preference among symbols with equal counts: -1, then +1, then 0.
const SYMBOL_PREFERENCE: [i8; 3] = [-1, 1, 0];

/// Symbol a column is binarized on, or `None` when only one symbol occurs.
///
/// With two distinct symbols the rarer one is chosen; with three, the one
/// whose count is the middle of the sorted counts. Equal counts resolve by
/// the fixed preference -1, +1, 0.
pub fn column_target(column: impl IntoIterator<Item = i8>) -> Option<i8> {
    let mut counts = [0usize; 3];
    for v in column {
        counts[(v + 1) as usize] += 1;
    }
    let count = |s: i8| counts[(s + 1) as usize];
    let mut present: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    present.sort_unstable();
    let target = match present.len() {
        2 => present[0],
        3 => present[1],
        _ => return None,
    };
    SYMBOL_PREFERENCE.into_iter().find(|&s| count(s) == target)
}

/// Marks, per pair column, the genes carrying that column's target symbol.
pub fn binarize_by_symbol_frequency(traj: &TrajectoryMatrix) -> BinaryContext {
    let p = traj.n_pairs();
    let targets: Vec<Option<i8>> = (0..p)
        .map(|k| column_target((0..traj.n_genes()).map(|g| traj.value(g, k))))
        .collect();
    let rows = (0..traj.n_genes())
        .map(|g| {
            BitSet::from_indices(
                p,
                (0..p).filter(|&k| targets[k] == Some(traj.value(g, k))),
            )
        })
        .collect();
    BinaryContext::from_bitsets(traj.gene_ids.clone(), traj.pair_labels(), rows)
        .expect("row widths match the pair map")
}

/// Indicator contexts of the +1 and −1 trajectory entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedContextPair {
    pub positive: BinaryContext,
    pub negative: BinaryContext,
    pub pair_columns: Vec<PairColumn>,
}

pub fn binarize_signs(traj: &TrajectoryMatrix) -> SignedContextPair {
    SignedContextPair {
        positive: traj.indicator(|v| v > 0),
        negative: traj.indicator(|v| v < 0),
        pair_columns: traj.pairs.clone(),
    }
}

/// Union of `{left, right}` over the selected pair columns, sorted.
pub fn map_pair_columns_to_conditions(cols: &[usize], map: &[PairColumn]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(cols.len() * 2);
    for &k in cols {
        let pc = map.get(k).ok_or(Error::Index {
            what: "pair columns",
            index: k,
            size: map.len(),
        })?;
        out.push(pc.left);
        out.push(pc.right);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
