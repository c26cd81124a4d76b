//! Loading expression matrices and binary contexts, and writing result
//! artifacts.
//!
//! Input tables are UTF-8 text with one header row of column ids and one
//! data row per gene (or object), the row id in the first field. The header
//! may or may not carry a corner label above the row ids. Fields are
//! separated by a tab (`tsv`) or a comma (`csv`); numbers use a decimal
//! point. Missing values are rejected.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bicluster::{Algorithm, BiclusterRecord, MatrixDims, PairColumnRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    #[default]
    Tsv,
    Csv,
}

impl TableFormat {
    fn delimiter(self) -> u8 {
        match self {
            TableFormat::Tsv => b'\t',
            TableFormat::Csv => b',',
        }
    }

    /// Guesses the format from a file extension, defaulting to tsv.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TableFormat::Csv,
            _ => TableFormat::Tsv,
        }
    }
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(TableFormat::Tsv),
            "csv" => Ok(TableFormat::Csv),
            _ => Err(Error::Invalid(format!("unknown table format `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Tsv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "tsv" => Ok(OutputFormat::Tsv),
            _ => Err(Error::Invalid(format!("unknown output format `{s}`"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Tsv => "tsv",
        })
    }
}

/// Named genes × conditions grid of finite expression levels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    gene_ids: Vec<String>,
    condition_ids: Vec<String>,
    values: Vec<f64>,
}

impl ExpressionMatrix {
    pub fn new(gene_ids: Vec<String>, condition_ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if gene_ids.is_empty() {
            return Err(Error::Invalid("expression matrix needs at least one gene".into()));
        }
        if condition_ids.len() < 2 {
            return Err(Error::Invalid(
                "expression matrix needs at least two conditions".into(),
            ));
        }
        if values.len() != gene_ids.len() * condition_ids.len() {
            return Err(Error::Invalid(format!(
                "expected {} values, got {}",
                gene_ids.len() * condition_ids.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite value at gene {}, condition {}",
                pos / condition_ids.len(),
                pos % condition_ids.len()
            )));
        }
        if let Some(dup) = first_duplicate(&gene_ids) {
            return Err(Error::Invalid(format!("duplicate gene id `{dup}`")));
        }
        if let Some(dup) = first_duplicate(&condition_ids) {
            return Err(Error::Invalid(format!("duplicate condition id `{dup}`")));
        }
        Ok(ExpressionMatrix {
            gene_ids,
            condition_ids,
            values,
        })
    }

    /// Convenience constructor used by tests and the built-in examples.
    pub fn from_rows<G, C>(gene_ids: G, condition_ids: C, rows: &[Vec<f64>]) -> Result<Self>
    where
        G: IntoIterator,
        G::Item: Into<String>,
        C: IntoIterator,
        C::Item: Into<String>,
    {
        let gene_ids: Vec<String> = gene_ids.into_iter().map(Into::into).collect();
        let condition_ids: Vec<String> = condition_ids.into_iter().map(Into::into).collect();
        if rows.len() != gene_ids.len() || rows.iter().any(|r| r.len() != condition_ids.len()) {
            return Err(Error::Invalid("row shape does not match ids".into()));
        }
        let values = rows.iter().flatten().copied().collect();
        Self::new(gene_ids, condition_ids, values)
    }

    pub fn n_genes(&self) -> usize {
        self.gene_ids.len()
    }

    pub fn n_conditions(&self) -> usize {
        self.condition_ids.len()
    }

    pub fn dims(&self) -> MatrixDims {
        MatrixDims {
            genes: self.n_genes(),
            conditions: self.n_conditions(),
        }
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn condition_ids(&self) -> &[String] {
        &self.condition_ids
    }

    #[inline]
    pub fn value(&self, gene: usize, condition: usize) -> f64 {
        self.values[gene * self.condition_ids.len() + condition]
    }

    pub fn row(&self, gene: usize) -> &[f64] {
        let m = self.condition_ids.len();
        &self.values[gene * m..(gene + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.condition_ids.len())
    }

    /// Element-wise negation, keeping ids.
    pub fn negated(&self) -> Self {
        ExpressionMatrix {
            gene_ids: self.gene_ids.clone(),
            condition_ids: self.condition_ids.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

/// Object × attribute boolean relation as read from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawBinaryContext {
    pub object_ids: Vec<String>,
    pub attribute_ids: Vec<String>,
    pub relation: Vec<Vec<bool>>,
}

impl RawBinaryContext {
    pub fn new(
        object_ids: Vec<String>,
        attribute_ids: Vec<String>,
        relation: Vec<Vec<bool>>,
    ) -> Result<Self> {
        if relation.len() != object_ids.len()
            || relation.iter().any(|r| r.len() != attribute_ids.len())
        {
            return Err(Error::Invalid(
                "relation dimensions do not match id lists".into(),
            ));
        }
        Ok(RawBinaryContext {
            object_ids,
            attribute_ids,
            relation,
        })
    }
}

fn first_duplicate(ids: &[String]) -> Option<&str> {
    let mut seen = HashSet::with_capacity(ids.len());
    ids.iter().find(|id| !seen.insert(id.as_str())).map(String::as_str)
}

struct Table {
    column_ids: Vec<String>,
    /// (1-based file line, row id, cells)
    rows: Vec<(usize, String, Vec<String>)>,
}

fn read_table(path: &Path, fmt: TableFormat) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(fmt.delimiter())
        .flexible(true)
        .quoting(fmt == TableFormat::Csv)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(path, line, 0, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push((line, rec.iter().map(str::to_string).collect::<Vec<_>>()));
    }
    let mut iter = records.into_iter();
    let (header_line, header) = iter
        .next()
        .ok_or_else(|| Error::parse(path, 0, 0, "empty file"))?;
    let body: Vec<(usize, Vec<String>)> = iter.collect();
    let Some((_, first)) = body.first() else {
        return Err(Error::parse(path, header_line, 0, "no data rows"));
    };
    let width = first.len();
    let column_ids: Vec<String> = if header.len() == width {
        header[1..].to_vec()
    } else if header.len() + 1 == width {
        header
    } else {
        return Err(Error::parse(
            path,
            header_line,
            0,
            format!(
                "header has {} fields but the first data row has {}",
                header.len(),
                width
            ),
        ));
    };
    let mut rows = Vec::with_capacity(body.len());
    for (line, mut cells) in body {
        if cells.len() != width {
            return Err(Error::parse(
                path,
                line,
                0,
                format!("expected {} fields, found {}", width, cells.len()),
            ));
        }
        let id = cells.remove(0);
        if id.is_empty() {
            return Err(Error::parse(path, line, 1, "empty row id"));
        }
        rows.push((line, id, cells));
    }
    if let Some(dup) = first_duplicate(&column_ids) {
        return Err(Error::parse(
            path,
            header_line,
            0,
            format!("duplicate column id `{dup}`"),
        ));
    }
    Ok(Table { column_ids, rows })
}

const MISSING_TOKENS: [&str; 7] = ["", "NA", "N/A", "NaN", "nan", "null", "?"];

fn parse_cell(path: &Path, line: usize, column: usize, cell: &str) -> Result<f64> {
    if MISSING_TOKENS.contains(&cell) {
        return Err(Error::parse(
            path,
            line,
            column,
            format!("missing value `{cell}` (missing values are not supported)"),
        ));
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(
            path,
            line,
            column,
            format!("non-numeric value `{cell}`"),
        )),
    }
}

pub fn load_expression_matrix(path: impl AsRef<Path>, fmt: TableFormat) -> Result<ExpressionMatrix> {
    let path = path.as_ref();
    let table = read_table(path, fmt)?;
    if table.column_ids.len() < 2 {
        return Err(Error::parse(path, 1, 0, "at least two conditions are required"));
    }
    let mut gene_ids = Vec::with_capacity(table.rows.len());
    let mut values = Vec::with_capacity(table.rows.len() * table.column_ids.len());
    let mut seen = HashSet::new();
    for (line, id, cells) in &table.rows {
        if !seen.insert(id.clone()) {
            return Err(Error::parse(path, *line, 1, format!("duplicate gene id `{id}`")));
        }
        gene_ids.push(id.clone());
        for (j, cell) in cells.iter().enumerate() {
            values.push(parse_cell(path, *line, j + 2, cell)?);
        }
    }
    ExpressionMatrix::new(gene_ids, table.column_ids, values)
}

pub fn load_binary_context(path: impl AsRef<Path>, fmt: TableFormat) -> Result<RawBinaryContext> {
    let path = path.as_ref();
    let table = read_table(path, fmt)?;
    let mut object_ids = Vec::with_capacity(table.rows.len());
    let mut relation = Vec::with_capacity(table.rows.len());
    for (line, id, cells) in table.rows {
        let row = cells
            .iter()
            .enumerate()
            .map(|(j, c)| match c.as_str() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::parse(
                    path,
                    line,
                    j + 2,
                    format!("expected 0 or 1, found `{other}`"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        object_ids.push(id);
        relation.push(row);
    }
    RawBinaryContext::new(object_ids, table.column_ids, relation)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn check_field(id: &str, forbidden: &[char]) -> Result<()> {
    if id.is_empty() || id.contains(forbidden) || id.contains('\n') {
        return Err(Error::Serialize(format!(
            "identifier `{id}` cannot be written in this format"
        )));
    }
    Ok(())
}

/// Writes a matrix in the layout `load_expression_matrix` reads, with a
/// `gene` corner label. Values use the shortest round-tripping decimal form.
pub fn write_expression_matrix(
    matrix: &ExpressionMatrix,
    path: impl AsRef<Path>,
    fmt: TableFormat,
) -> Result<()> {
    let path = path.as_ref();
    let sep = fmt.delimiter() as char;
    for id in matrix.gene_ids().iter().chain(matrix.condition_ids()) {
        check_field(id, &[sep, '"'])?;
    }
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    write!(w, "gene").map_err(io)?;
    for c in matrix.condition_ids() {
        write!(w, "{sep}{c}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (g, row) in matrix.gene_ids().iter().zip(matrix.rows()) {
        write!(w, "{g}").map_err(io)?;
        for v in row {
            write!(w, "{sep}{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes a binary relation as a 0/1 table.
pub fn write_binary_table(
    path: impl AsRef<Path>,
    row_ids: &[String],
    column_ids: &[String],
    cell: impl Fn(usize, usize) -> bool,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    write!(w, "id").map_err(io)?;
    for c in column_ids {
        write!(w, "\t{c}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (i, r) in row_ids.iter().enumerate() {
        write!(w, "{r}").map_err(io)?;
        for j in 0..column_ids.len() {
            write!(w, "\t{}", u8::from(cell(i, j))).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn sort_records(records: &mut [BiclusterRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Serializes biclusters ordered by (gene count desc, condition count desc,
/// first gene id).
pub fn write_biclusters(
    records: &[BiclusterRecord],
    path: impl AsRef<Path>,
    fmt: OutputFormat,
) -> Result<()> {
    let path = path.as_ref();
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let text = match fmt {
        OutputFormat::Json => biclusters_to_json(&sorted)?,
        OutputFormat::Tsv => biclusters_to_tsv(&sorted)?,
    };
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn biclusters_to_json(records: &[BiclusterRecord]) -> Result<String> {
    let mut s =
        serde_json::to_string_pretty(records).map_err(|e| Error::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

const TSV_HEADER: &str = "algorithm\tgenes\tconditions\tpair_columns\tscores";
const TSV_RESERVED: [char; 6] = ['\t', ',', ';', '=', '~', ':'];

pub fn biclusters_to_tsv(records: &[BiclusterRecord]) -> Result<String> {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for r in records {
        for id in r.genes.iter().chain(&r.conditions) {
            check_field(id, &TSV_RESERVED)?;
        }
        let pairs = match &r.pair_columns {
            None => "-".to_string(),
            Some(pcs) => {
                let mut parts = Vec::with_capacity(pcs.len());
                for p in pcs {
                    check_field(&p.left, &TSV_RESERVED)?;
                    check_field(&p.right, &TSV_RESERVED)?;
                    parts.push(format!("{}:{}~{}", p.index, p.left, p.right));
                }
                parts.join(",")
            }
        };
        for k in r.scores.keys() {
            check_field(k, &TSV_RESERVED)?;
        }
        let scores = r
            .scores
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.algorithm,
            r.genes.join(","),
            r.conditions.join(","),
            pairs,
            scores
        ));
    }
    Ok(out)
}

pub fn read_biclusters(path: impl AsRef<Path>, fmt: OutputFormat) -> Result<Vec<BiclusterRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match fmt {
        OutputFormat::Json => {
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.column(), e.to_string()))
        }
        OutputFormat::Tsv => parse_biclusters_tsv(path, &text),
    }
}

fn parse_biclusters_tsv(path: &Path, text: &str) -> Result<Vec<BiclusterRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TSV_HEADER => {}
        _ => return Err(Error::parse(path, 1, 0, "missing bicluster table header")),
    }
    let split_ids = |s: &str| -> Vec<String> {
        if s.is_empty() {
            Vec::new()
        } else {
            s.split(',').map(str::to_string).collect()
        }
    };
    let mut out = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::parse(path, row, 0, "expected 5 fields"));
        }
        let algorithm: Algorithm = fields[0]
            .parse()
            .map_err(|_| Error::parse(path, row, 1, format!("unknown algorithm `{}`", fields[0])))?;
        let pair_columns = if fields[3] == "-" {
            None
        } else {
            let mut pcs = Vec::new();
            for part in fields[3].split(',').filter(|p| !p.is_empty()) {
                let bad = || Error::parse(path, row, 4, format!("malformed pair column `{part}`"));
                let (idx, rest) = part.split_once(':').ok_or_else(bad)?;
                let (left, right) = rest.split_once('~').ok_or_else(bad)?;
                pcs.push(PairColumnRecord {
                    index: idx.parse().map_err(|_| bad())?,
                    left: left.to_string(),
                    right: right.to_string(),
                });
            }
            Some(pcs)
        };
        let mut scores = std::collections::BTreeMap::new();
        for part in fields[4].split(';').filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::parse(path, row, 5, format!("malformed score `{part}`")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::parse(path, row, 5, format!("malformed score `{part}`")))?;
            scores.insert(k.to_string(), v);
        }
        out.push(BiclusterRecord {
            algorithm,
            genes: split_ids(fields[1]),
            conditions: split_ids(fields[2]),
            pair_columns,
            scores,
        });
    }
    Ok(out)
}
