//! Coverage statistics and per-bicluster exports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::bicluster::Bicluster;
use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::matrix_io::ExpressionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageReport {
    pub total_coverage: f64,
    pub gene_coverage: f64,
    pub condition_coverage: f64,
    pub covered_cells: usize,
    pub matrix_cells: usize,
}

/// Fractions of cells, genes and conditions touched by at least one
/// bicluster.
pub fn coverage(matrix: &ExpressionMatrix, biclusters: &[Bicluster]) -> Result<CoverageReport> {
    let dims = matrix.dims();
    let (n, m) = (dims.genes, dims.conditions);
    let mut per_gene = vec![BitSet::new(m); n];
    let mut genes = BitSet::new(n);
    let mut conds = BitSet::new(m);
    for b in biclusters {
        b.validate(dims)?;
        let cols = BitSet::from_indices(m, b.conditions.iter().copied());
        for &g in &b.genes {
            per_gene[g].union_with(&cols);
            genes.insert(g);
        }
        conds.union_with(&cols);
    }
    let covered_cells = per_gene.iter().map(BitSet::len).sum();
    let matrix_cells = dims.cells();
    Ok(CoverageReport {
        total_coverage: covered_cells as f64 / matrix_cells as f64,
        gene_coverage: genes.len() as f64 / n as f64,
        condition_coverage: conds.len() as f64 / m as f64,
        covered_cells,
        matrix_cells,
    })
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Original expression values of the bicluster's genes over its conditions,
/// as a TSV table with a `gene` header column.
pub fn export_profile(matrix: &ExpressionMatrix, bicluster: &Bicluster, path: impl AsRef<Path>) -> Result<()> {
    bicluster.validate(matrix.dims())?;
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = writer(path)?;
    write!(w, "gene").map_err(io)?;
    for &c in &bicluster.conditions {
        write!(w, "\t{}", matrix.condition_ids()[c]).map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for &g in &bicluster.genes {
        write!(w, "{}", matrix.gene_ids()[g]).map_err(io)?;
        for &c in &bicluster.conditions {
            write!(w, "\t{}", matrix.value(g, c)).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// One gene id per line, the format enrichment services accept.
pub fn export_gene_list(matrix: &ExpressionMatrix, bicluster: &Bicluster, path: impl AsRef<Path>) -> Result<()> {
    bicluster.validate(matrix.dims())?;
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = writer(path)?;
    for &g in &bicluster.genes {
        writeln!(w, "{}", matrix.gene_ids()[g]).map_err(io)?;
    }
    w.flush().map_err(io)
}
