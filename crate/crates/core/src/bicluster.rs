//! Bicluster representation shared by the pipelines, measures and writers.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discretize::PairColumn;
use crate::error::{Error, Result};
use crate::matrix_io::ExpressionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Biarm,
    BifcaPlus,
    Bifca,
    NbicArm,
    Nbf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Biarm,
        Algorithm::BifcaPlus,
        Algorithm::Bifca,
        Algorithm::NbicArm,
        Algorithm::Nbf,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Biarm => "biarm",
            Algorithm::BifcaPlus => "bifca_plus",
            Algorithm::Bifca => "bifca",
            Algorithm::NbicArm => "nbic_arm",
            Algorithm::Nbf => "nbf",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatrixDims {
    pub genes: usize,
    pub conditions: usize,
}

impl MatrixDims {
    pub fn cells(&self) -> usize {
        self.genes * self.conditions
    }
}

/// A gene subset paired with a condition subset.
///
/// Index sets are kept sorted and duplicate-free. `conditions` always refers
/// to columns of the original expression matrix; algorithms that mine over
/// condition pairs additionally keep the selected pair columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Bicluster {
    pub algorithm: Algorithm,
    pub genes: Vec<usize>,
    pub conditions: Vec<usize>,
    pub pair_columns: Option<Vec<usize>>,
    pub scores: BTreeMap<String, f64>,
    pub dims: MatrixDims,
}

impl Bicluster {
    pub fn new(
        algorithm: Algorithm,
        dims: MatrixDims,
        mut genes: Vec<usize>,
        mut conditions: Vec<usize>,
    ) -> Self {
        genes.sort_unstable();
        genes.dedup();
        conditions.sort_unstable();
        conditions.dedup();
        Bicluster {
            algorithm,
            genes,
            conditions,
            pair_columns: None,
            scores: BTreeMap::new(),
            dims,
        }
    }

    pub fn with_score(mut self, name: &str, value: f64) -> Self {
        self.scores.insert(name.to_string(), value);
        self
    }

    pub fn n_cells(&self) -> usize {
        self.genes.len() * self.conditions.len()
    }

    /// Checks the non-emptiness and range invariants against `dims`.
    pub fn validate(&self, dims: MatrixDims) -> Result<()> {
        if self.dims != dims {
            return Err(Error::MatrixMismatch(format!(
                "bicluster built for a {}x{} matrix, got {}x{}",
                self.dims.genes, self.dims.conditions, dims.genes, dims.conditions
            )));
        }
        if self.genes.is_empty() || self.conditions.is_empty() {
            return Err(Error::Invalid("bicluster with an empty side".into()));
        }
        if let Some(&g) = self.genes.iter().find(|&&g| g >= dims.genes) {
            return Err(Error::MatrixMismatch(format!("gene index {g} out of range")));
        }
        if let Some(&c) = self.conditions.iter().find(|&&c| c >= dims.conditions) {
            return Err(Error::MatrixMismatch(format!(
                "condition index {c} out of range"
            )));
        }
        Ok(())
    }

    /// Canonical ordering key: larger biclusters first, then lexicographic.
    pub(crate) fn size_key(&self) -> (std::cmp::Reverse<usize>, std::cmp::Reverse<usize>) {
        (
            std::cmp::Reverse(self.genes.len()),
            std::cmp::Reverse(self.conditions.len()),
        )
    }

    pub fn to_record(
        &self,
        matrix: &ExpressionMatrix,
        pairs: Option<&[PairColumn]>,
    ) -> Result<BiclusterRecord> {
        self.validate(matrix.dims())?;
        let pair_columns = match (&self.pair_columns, pairs) {
            (Some(cols), Some(pairs)) => Some(
                cols.iter()
                    .map(|&k| {
                        let pc = pairs.get(k).ok_or(Error::Index {
                            what: "pair columns",
                            index: k,
                            size: pairs.len(),
                        })?;
                        Ok(PairColumnRecord {
                            index: k,
                            left: matrix.condition_ids()[pc.left].clone(),
                            right: matrix.condition_ids()[pc.right].clone(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            (Some(_), None) => {
                return Err(Error::Invalid(
                    "pair-column bicluster serialized without its pair map".into(),
                ))
            }
            (None, _) => None,
        };
        Ok(BiclusterRecord {
            algorithm: self.algorithm,
            genes: self.genes.iter().map(|&g| matrix.gene_ids()[g].clone()).collect(),
            conditions: self
                .conditions
                .iter()
                .map(|&c| matrix.condition_ids()[c].clone())
                .collect(),
            pair_columns,
            scores: self.scores.clone(),
        })
    }
}

/// Serialized form of a bicluster: identifiers instead of indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiclusterRecord {
    pub algorithm: Algorithm,
    pub genes: Vec<String>,
    pub conditions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_columns: Option<Vec<PairColumnRecord>>,
    #[serde(default)]
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairColumnRecord {
    pub index: usize,
    pub left: String,
    pub right: String,
}

impl BiclusterRecord {
    /// Maps identifiers back onto `matrix`.
    pub fn resolve(&self, matrix: &ExpressionMatrix) -> Result<Bicluster> {
        let gene_idx: HashMap<&str, usize> = matrix
            .gene_ids()
            .iter()
            .enumerate()
            .map(|(i, g)| (g.as_str(), i))
            .collect();
        let cond_idx: HashMap<&str, usize> = matrix
            .condition_ids()
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let lookup = |map: &HashMap<&str, usize>, id: &str, what: &str| {
            map.get(id)
                .copied()
                .ok_or_else(|| Error::MatrixMismatch(format!("unknown {what} id `{id}`")))
        };
        let genes = self
            .genes
            .iter()
            .map(|g| lookup(&gene_idx, g, "gene"))
            .collect::<Result<Vec<_>>>()?;
        let conditions = self
            .conditions
            .iter()
            .map(|c| lookup(&cond_idx, c, "condition"))
            .collect::<Result<Vec<_>>>()?;
        let mut b = Bicluster::new(self.algorithm, matrix.dims(), genes, conditions);
        b.pair_columns = self
            .pair_columns
            .as_ref()
            .map(|pcs| pcs.iter().map(|p| p.index).collect());
        b.scores = self.scores.clone();
        b.validate(matrix.dims())?;
        Ok(b)
    }

    pub(crate) fn sort_key(&self) -> impl Ord + '_ {
        (
            std::cmp::Reverse(self.genes.len()),
            std::cmp::Reverse(self.conditions.len()),
            self.genes.first(),
            &self.genes,
            &self.conditions,
            self.algorithm,
        )
    }
}
