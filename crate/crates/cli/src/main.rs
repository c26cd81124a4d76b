use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biclust_core::fca::ConceptOptions;
use biclust_core::golden::{run_golden, GoldenId};
use biclust_core::matrix_io::{biclusters_to_json, sort_records, write_binary_table};
use biclust_core::pipelines::PipelineOutput;
use biclust_core::rules::write_rules_tsv;
use biclust_core::{
    coverage, enumerate_concepts_with, export_gene_list, export_profile, extract_igb, load_binary_context,
    load_expression_matrix, read_biclusters, write_biclusters, Algorithm, BiclusterRecord, BinaryContext, Error,
    ExpressionMatrix, OutputFormat, PipelineConfig, TableFormat, TrajectoryMatrix, TrajectoryMode,
};
use clap::{Args, Parser, Subcommand};
use log::{info, LevelFilter};
use serde_json::json;

#[derive(Parser)]
#[command(name = "biclust", version, about = "Pattern-mining biclustering of gene expression data")]
struct Cli {
    /// More log output (repeatable). BICLUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Association rules on the all-pairs trajectory, Jaccard-filtered.
    Biarm(RunArgs),
    /// Formal concepts on the all-pairs trajectory, bond-filtered.
    Bifca(RunArgs),
    /// Formal concepts on the adjacent trajectory, bond-filtered.
    BifcaPlus(RunArgs),
    /// Negatively correlated biclusters from positive and negative rule bases.
    NbicArm(RunArgs),
    /// Negatively correlated biclusters from stable formal concepts.
    Nbf(RunArgs),
    /// Coverage of a bicluster file over its expression matrix.
    Coverage(CoverageArgs),
    /// Formal concepts of a 0/1 context table.
    Concepts(ConceptArgs),
    /// Generic basis of exact and approximate rules of a 0/1 context table.
    Rules(RuleArgs),
    /// Replay a built-in worked example.
    Golden {
        /// One of biarm-ch3, bifca-plus-ch3, bifca-ch3, nbic-arm-ch4, nbf-ch4.
        #[arg(value_parser = parse_golden)]
        id: GoldenId,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Expression matrix (.tsv or .csv, header row of condition ids).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "biclust-output")]
    output: PathBuf,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: OutputFormat,
    /// Trajectory mode, where the algorithm permits a choice.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<TrajectoryMode>,
    #[arg(long, value_parser = parse_ratio)]
    minsupp: Option<f64>,
    #[arg(long, value_parser = parse_ratio)]
    minconf: Option<f64>,
    #[arg(long, value_parser = parse_ratio)]
    minjaccard: Option<f64>,
    #[arg(long, value_parser = parse_ratio)]
    minbond: Option<f64>,
    #[arg(long)]
    mincondition: Option<usize>,
    #[arg(long, value_parser = parse_ratio)]
    alpha1: Option<f64>,
    #[arg(long, value_parser = parse_ratio)]
    alpha2: Option<f64>,
    #[arg(long, value_parser = parse_ratio)]
    minstability: Option<f64>,
    #[command(flatten)]
    mining: MiningArgs,
    /// Changes of magnitude at most this are treated as flat.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Repeat the gene-intersection merge until nothing changes.
    #[arg(long)]
    fixpoint_merge: bool,
    /// Write trajectory, contexts, concepts and rules of every stage.
    #[arg(long)]
    dump_intermediates: bool,
    /// Write one expression profile per bicluster.
    #[arg(long)]
    profiles: bool,
    /// Write one gene-list file per bicluster.
    #[arg(long)]
    gene_lists: bool,
}

#[derive(Args)]
struct MiningArgs {
    #[arg(long, default_value_t = 1)]
    min_extent: usize,
    #[arg(long, default_value_t = 1)]
    min_intent: usize,
    /// Worker threads for mining; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Abort once this many concepts have been found.
    #[arg(long)]
    max_concepts: Option<usize>,
}

#[derive(Args)]
struct CoverageArgs {
    /// Expression matrix the biclusters were mined from.
    #[arg(long)]
    input: PathBuf,
    /// Bicluster file (format taken from the extension unless --format is given).
    #[arg(long)]
    biclusters: PathBuf,
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct ConceptArgs {
    /// 0/1 table, objects as rows and attributes as columns.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "tsv", value_parser = parse_format)]
    format: OutputFormat,
    #[command(flatten)]
    mining: MiningArgs,
}

#[derive(Args)]
struct RuleArgs {
    /// 0/1 table, objects as rows and attributes as columns.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_ratio)]
    minsupp: f64,
    #[arg(long, value_parser = parse_ratio)]
    minconf: f64,
}

/// Accepts `0.25` or `25%`.
fn parse_ratio(s: &str) -> Result<f64, String> {
    let (num, scale) = match s.trim().strip_suffix('%') {
        Some(p) => (p.trim(), 100.0),
        None => (s.trim(), 1.0),
    };
    let v: f64 = num.parse().map_err(|_| format!("`{s}` is neither a decimal nor a percentage"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v / scale)
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<TrajectoryMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_golden(s: &str) -> Result<GoldenId, String> {
    s.parse().map_err(|_| {
        let known: Vec<_> = GoldenId::ALL.iter().map(GoldenId::as_str).collect();
        format!("unknown example, expected one of {}", known.join(", "))
    })
}

enum Failure {
    Usage(String),
    Data(String),
    /// A golden replay ran but a stage did not match.
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Usage(usage_message(&e))
        }
    }
}

fn usage_message(e: &Error) -> String {
    match e {
        Error::MissingParameter(name) => format!("missing required flag --{}", name.replace('_', "-")),
        Error::ParameterRange { name, value, expected } => {
            format!("--{} = {value} is out of range, expected {expected}", name.replace('_', "-"))
        }
        Error::Invalid(msg) => msg.clone(),
        other => other.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        2 => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env(env_logger::Env::new().filter("BICLUST_LOG"))
        .init();

    let result = match cli.command {
        Command::Biarm(a) => run_pipeline(Algorithm::Biarm, a),
        Command::Bifca(a) => run_pipeline(Algorithm::Bifca, a),
        Command::BifcaPlus(a) => run_pipeline(Algorithm::BifcaPlus, a),
        Command::NbicArm(a) => run_pipeline(Algorithm::NbicArm, a),
        Command::Nbf(a) => run_pipeline(Algorithm::Nbf, a),
        Command::Coverage(a) => run_coverage(a),
        Command::Concepts(a) => run_concepts(a),
        Command::Rules(a) => run_rules(a),
        Command::Golden { id } => golden(id),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check) => ExitCode::from(2),
    }
}

fn config(a: &RunArgs) -> PipelineConfig {
    PipelineConfig {
        minsupp: a.minsupp,
        minconf: a.minconf,
        minjaccard: a.minjaccard,
        minbond: a.minbond,
        mincondition: a.mincondition,
        alpha1: a.alpha1,
        alpha2: a.alpha2,
        minstability: a.minstability,
        min_extent: a.mining.min_extent,
        min_intent: a.mining.min_intent,
        mode: a.mode,
        epsilon: a.epsilon,
        jobs: a.mining.jobs,
        max_concepts: a.mining.max_concepts,
        fixpoint_merge: a.fixpoint_merge,
        ..PipelineConfig::default()
    }
}

fn log_config(algorithm: Algorithm, cfg: &PipelineConfig) {
    let ratios = [
        ("minsupp", cfg.minsupp),
        ("minconf", cfg.minconf),
        ("minjaccard", cfg.minjaccard),
        ("minbond", cfg.minbond),
        ("alpha1", cfg.alpha1),
        ("alpha2", cfg.alpha2),
        ("minstability", cfg.minstability),
    ];
    let mut line = format!("{algorithm}: mode={}", cfg.trajectory_mode(algorithm));
    for (name, v) in ratios {
        if let Some(v) = v {
            let _ = write!(line, " {name}={v}");
        }
    }
    if let Some(c) = cfg.mincondition {
        let _ = write!(line, " mincondition={c}");
    }
    info!("{line}");
}

fn run_pipeline(algorithm: Algorithm, a: RunArgs) -> Result<(), Failure> {
    let cfg = config(&a);
    cfg.validate(algorithm).map_err(|e| Failure::Usage(usage_message(&e)))?;
    if !(a.epsilon >= 0.0 && a.epsilon.is_finite()) {
        return Err(Failure::Usage(format!("--epsilon = {} must be a finite value >= 0", a.epsilon)));
    }
    log_config(algorithm, &cfg);

    let matrix = load_expression_matrix(&a.input, TableFormat::from_path(&a.input))?;
    info!("loaded {} genes x {} conditions", matrix.n_genes(), matrix.n_conditions());
    let out = biclust_core::run(algorithm, &matrix, &cfg)?;
    info!("{} biclusters", out.biclusters.len());

    let dir = &a.output;
    fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    let pairs = out.pair_columns().to_vec();
    let mut records = out
        .biclusters
        .iter()
        .map(|b| b.to_record(&matrix, Some(&pairs)))
        .collect::<Result<Vec<_>, _>>()?;
    sort_records(&mut records);
    write_biclusters(&records, dir.join(format!("biclusters.{}", a.format)), a.format)?;

    let report = coverage(&matrix, &out.biclusters)?;
    write_json(&dir.join("coverage.json"), &report)?;

    if a.profiles || a.gene_lists {
        for (i, rec) in records.iter().enumerate() {
            let b = rec.resolve(&matrix)?;
            let name = format!("bicluster_{:04}", i + 1);
            if a.profiles {
                export_profile(&matrix, &b, dir.join("profiles").join(format!("{name}.tsv")))?;
            }
            if a.gene_lists {
                export_gene_list(&matrix, &b, dir.join("gene_lists").join(format!("{name}.txt")))?;
            }
        }
    }
    if a.dump_intermediates {
        dump_intermediates(&dir.join("intermediates"), &matrix, &out)?;
    }
    println!(
        "{} biclusters written to {} (coverage {:.4})",
        records.len(),
        dir.display(),
        report.total_coverage
    );
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Data(e.to_string()))?;
    text.push('\n');
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Failure::Data(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write_trajectory(path: &Path, t: &TrajectoryMatrix) -> Result<(), Failure> {
    let mut text = String::from("gene");
    for label in t.pair_labels() {
        text.push('\t');
        text.push_str(&label);
    }
    text.push('\n');
    for g in 0..t.n_genes() {
        text.push_str(&t.gene_ids()[g]);
        for v in t.row(g) {
            let _ = write!(text, "\t{v}");
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn dump_intermediates(dir: &Path, matrix: &ExpressionMatrix, out: &PipelineOutput) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    write_trajectory(&dir.join("trajectory.tsv"), &out.trajectory)?;
    for (side, ctx) in &out.contexts {
        write_binary_table(
            dir.join(format!("{}.tsv", side.as_str())),
            ctx.object_ids(),
            ctx.attribute_ids(),
            |o, a| ctx.has(o, a),
        )?;
    }
    let context_of = |side| &out.contexts.iter().find(|(s, _)| *s == side).expect("context of side").1;
    if !out.concepts.is_empty() {
        let concepts: Vec<_> = out
            .concepts
            .iter()
            .map(|mc| {
                let rec = mc.concept.to_record(context_of(mc.side));
                json!({
                    "context": mc.side.as_str(),
                    "extent": rec.extent,
                    "intent": rec.intent,
                    "stability": mc.stability.map(|s| s.value),
                    "kept": mc.kept,
                })
            })
            .collect();
        write_json(&dir.join("concepts.json"), &concepts)?;
    }
    for (side, ctx) in &out.contexts {
        let rules: Vec<_> = out.rules.iter().filter(|(s, _)| s == side).map(|(_, r)| r.clone()).collect();
        if !rules.is_empty() {
            write_rules_tsv(ctx, &rules, dir.join(format!("rules_{}.tsv", side.as_str())))?;
        }
    }
    let pairs = out.pair_columns().to_vec();
    for (name, list) in [("candidates", &out.candidates), ("assembled", &out.assembled)] {
        if list.is_empty() {
            continue;
        }
        let recs = list
            .iter()
            .map(|b| b.to_record(matrix, Some(&pairs)))
            .collect::<Result<Vec<_>, _>>()?;
        let text = biclusters_to_json(&recs)?;
        let path = dir.join(format!("{name}.json"));
        fs::write(&path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn run_coverage(a: CoverageArgs) -> Result<(), Failure> {
    let matrix = load_expression_matrix(&a.input, TableFormat::from_path(&a.input))?;
    let fmt = a.format.unwrap_or_else(|| {
        match a.biclusters.extension().and_then(|e| e.to_str()) {
            Some("tsv") => OutputFormat::Tsv,
            _ => OutputFormat::Json,
        }
    });
    let records: Vec<BiclusterRecord> = read_biclusters(&a.biclusters, fmt)?;
    let biclusters = records.iter().map(|r| r.resolve(&matrix)).collect::<Result<Vec<_>, _>>()?;
    let report = coverage(&matrix, &biclusters)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Failure::Data(e.to_string()))?);
    Ok(())
}

fn load_context(path: &Path) -> Result<BinaryContext, Failure> {
    let raw = load_binary_context(path, TableFormat::from_path(path))?;
    Ok(BinaryContext::from_raw(&raw)?)
}

fn run_concepts(a: ConceptArgs) -> Result<(), Failure> {
    let ctx = load_context(&a.input)?;
    let opts = ConceptOptions {
        min_extent: a.mining.min_extent,
        min_intent: a.mining.min_intent,
        max_concepts: a.mining.max_concepts,
        jobs: a.mining.jobs,
    };
    let concepts = enumerate_concepts_with(&ctx, &opts)?;
    let records: Vec<_> = concepts.iter().map(|c| c.to_record(&ctx)).collect();
    match a.format {
        OutputFormat::Json => {
            println!("{}", serde_json::to_string_pretty(&records).map_err(|e| Failure::Data(e.to_string()))?)
        }
        OutputFormat::Tsv => {
            println!("extent\tintent");
            for r in &records {
                println!("{}\t{}", r.extent.join(","), r.intent.join(","));
            }
        }
    }
    Ok(())
}

fn run_rules(a: RuleArgs) -> Result<(), Failure> {
    let ctx = load_context(&a.input)?;
    let rules = extract_igb(&ctx, a.minsupp, a.minconf)?;
    let names = |xs: &[usize]| xs.iter().map(|&i| ctx.attribute_ids()[i].as_str()).collect::<Vec<_>>().join(",");
    println!("premise\tconclusion\tsupport\tconfidence");
    for r in &rules {
        println!("{}\t{}\t{}\t{}", names(&r.premise), names(&r.conclusion), r.support, r.confidence);
    }
    Ok(())
}

fn golden(id: GoldenId) -> Result<(), Failure> {
    let report = run_golden(id)?;
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}
