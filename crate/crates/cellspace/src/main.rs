use std::fmt::Display;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use cellspace::cache::{CacheFile, PersistentEvaluator};
use cellspace::config::{fingerprint, load_config, parse_config, DEFAULT_CONFIG};
use cellspace::export::ArchitectureExport;
use cellspace::external::ExternalEvaluator;
use cellspace::genome_io::{parse_genome, GenomeDoc};
use cellspace::pareto::{pareto_csv, pareto_json};
use cellspace::svg::render_pareto_svg;
use cellspace_core::genome::{decode, random_genome, ReductionVariant};
use cellspace_core::metrics::node_param_count;
use cellspace_core::optimizer::{search, GenerationRecord, Strategy};
use cellspace_core::{
    DigitGenome, Evaluator, GenomeLayout, SearchConfig, SearchError, SurrogateEvaluator,
};
use clap::{Parser, Subcommand, ValueEnum};

/// Explore and search a hierarchical cell-based architecture space.
#[derive(Parser)]
#[command(name = "cellspace", version)]
struct Cli {
    /// Search-space configuration (JSON). Defaults to the built-in reference space.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Facts about the configured space.
    Space {
        #[command(subcommand)]
        what: SpaceCommand,
    },
    /// Print uniformly random genomes, one JSON object per line.
    Sample {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: u64,
    },
    /// Show the architecture a genome decodes to.
    Decode {
        /// Genome text (JSON or packed CSV), `@FILE`, or `-` for stdin.
        #[arg(long)]
        genome: String,
    },
    /// Parameter count of a genome, with a per-node breakdown.
    Params {
        #[arg(long)]
        genome: String,
    },
    /// Write the architecture export of a genome.
    Export {
        #[arg(long)]
        genome: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the multi-objective search.
    Search(SearchArgs),
}

#[derive(Subcommand)]
enum SpaceCommand {
    /// Exact cardinalities.
    Info,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Single,
    TwoPhase,
}

#[derive(clap::Args)]
struct SearchArgs {
    /// `surrogate` or `external:<shell command>`.
    #[arg(long, default_value = "surrogate")]
    evaluator: String,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Persistent evaluation cache (NDJSON, appended to).
    #[arg(long)]
    cache: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl Display) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
    fn input(e: impl Display) -> Self {
        Failure {
            code: 3,
            message: e.to_string(),
        }
    }
    fn evaluator(e: impl Display) -> Self {
        Failure {
            code: 4,
            message: e.to_string(),
        }
    }
    fn other(e: impl Display) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Evaluator(_) => Failure::evaluator(e),
            SearchError::Config(_) | SearchError::Codec(_) | SearchError::PackedUnsupported => {
                Failure::input(e)
            }
            _ => Failure::other(e),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("CELLSPACE_LOG", "warn"))
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.config {
        Some(path) => load_config(path).map_err(|e| match e {
            cellspace::config::ConfigFileError::Io { .. } => Failure::other(e),
            _ => Failure::input(e),
        })?,
        None => parse_config(DEFAULT_CONFIG).expect("built-in config is valid"),
    };
    let layout = GenomeLayout::new(config.params());
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let w = |e: io::Error| Failure::other(e);
    match cli.command {
        Command::Space {
            what: SpaceCommand::Info,
        } => space_info(&mut out, &config, &layout).map_err(w),
        Command::Sample { seed, count } => {
            for i in 0..count {
                let g = random_genome(seed.wrapping_add(i), config.params());
                let line =
                    serde_json::to_string(&GenomeDoc::of(&g, &layout)).expect("genome serializes");
                writeln!(out, "{line}").map_err(w)?;
            }
            Ok(())
        }
        Command::Decode { genome } => {
            let g = read_genome(&genome, &layout)?;
            let export = ArchitectureExport::build(&g, &config).map_err(Failure::input)?;
            describe(&mut out, &g, &config).map_err(w)?;
            writeln!(out, "{}", export.to_canonical_json()).map_err(w)
        }
        Command::Params { genome } => {
            let g = read_genome(&genome, &layout)?;
            let export = ArchitectureExport::build(&g, &config).map_err(Failure::input)?;
            writeln!(out, "param_count={}", export.param_count).map_err(w)?;
            for node in &export.graph.nodes {
                let n = node_param_count(&export.graph, node).map_err(Failure::input)?;
                let shape = node
                    .out_shape
                    .map_or("?".into(), |s| format!("{}x{}x{}", s.h, s.w, s.c));
                let op = serde_json::to_value(node.op).expect("op serializes");
                writeln!(
                    out,
                    "{:>4}  {:<20} {:>14}  {n}",
                    node.id,
                    op.as_str().unwrap_or("?"),
                    shape
                )
                .map_err(w)?;
            }
            Ok(())
        }
        Command::Export { genome, out: path } => {
            let g = read_genome(&genome, &layout)?;
            let export = ArchitectureExport::build(&g, &config).map_err(Failure::input)?;
            fs::write(&path, export.to_canonical_json() + "\n")
                .map_err(|e| Failure::other(format!("{}: {e}", path.display())))
        }
        Command::Search(args) => run_search(&mut out, config, &layout, args),
    }
}

fn read_genome(arg: &str, layout: &GenomeLayout) -> Result<DigitGenome, Failure> {
    let text = if arg == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(Failure::other)?;
        s
    } else if let Some(path) = arg.strip_prefix('@') {
        fs::read_to_string(path).map_err(|e| Failure::other(format!("{path}: {e}")))?
    } else {
        arg.to_string()
    };
    parse_genome(&text, layout).map_err(Failure::input)
}

fn space_info(
    out: &mut impl Write,
    config: &SearchConfig,
    layout: &GenomeLayout,
) -> io::Result<()> {
    let p = config.params();
    writeln!(out, "pipeline={}", p.pipeline_cardinality())?;
    writeln!(out, "convolution_part={}", p.conv_part_cardinality())?;
    writeln!(out, "reduction={}", p.reduction_cardinality())?;
    writeln!(out, "structure={}", p.structure_cardinality())?;
    writeln!(out, "cell_complexity={}", p.cell_complexity())?;
    writeln!(out, "total={}", p.total_cardinality())?;
    writeln!(
        out,
        "params L_c={} N_c={} P_c={} L_p={} L_B={} N_B={} P_B={} L_r={} N_r={} P_r={}",
        p.l_c, p.n_c, p.p_c, p.l_p, p.l_b, p.n_b, p.p_b, p.l_r, p.n_r, p.p_r
    )?;
    writeln!(
        out,
        "genome_digits={} packed_genes={}",
        layout.len(),
        layout.packed_len()
    )
}

fn name_of<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => "?".into(),
    }
}

fn describe(out: &mut impl Write, genome: &DigitGenome, config: &SearchConfig) -> io::Result<()> {
    let plan = decode(genome, config).expect("genome was validated");
    let op_name = |op: &cellspace_core::space::Operation| match op.kind() {
        cellspace_core::space::OpKind::Identity => "identity".to_string(),
        k => format!("{}{}", name_of(&k), op.kernel()),
    };
    writeln!(out, "layer  cell  sampling")?;
    for (i, l) in plan.layers.iter().enumerate() {
        writeln!(
            out,
            "{i:>5}  {:>4}  {}",
            l.cell,
            name_of(&config.sampling_modes()[l.sampling])
        )?;
    }
    for (c, cell) in plan.cells.iter().enumerate() {
        writeln!(out, "cell {c}")?;
        for (p, pipeline) in cell.pipelines.iter().enumerate() {
            let blocks: Vec<String> = pipeline
                .iter()
                .map(|b| {
                    let o = config.block_options()[b.option];
                    let mut s = config.blocks()[b.block].name.clone();
                    if o.is_skip() {
                        s.push_str("[skip]");
                    } else {
                        let mut flags = Vec::new();
                        if o.batch_norm() {
                            flags.push("bn".to_string());
                        }
                        if o.activation() != cellspace_core::space::Activation::None {
                            flags.push(name_of(&o.activation()));
                        }
                        if !flags.is_empty() {
                            s.push_str(&format!("[{}]", flags.join(",")));
                        }
                    }
                    s
                })
                .collect();
            writeln!(out, "  pipeline {p}: {}", blocks.join(" -> "))?;
        }
        let merge = name_of(&config.merge_modes()[cell.reduction.merge]);
        match &cell.reduction.variant {
            ReductionVariant::BeforeMerge(ops) => {
                let names: Vec<String> = ops
                    .iter()
                    .map(|&r| op_name(&config.reduction_blocks()[r]))
                    .collect();
                writeln!(out, "  reduction: [{}] then {merge}", names.join(", "))?;
            }
            ReductionVariant::AfterMerge(r) => {
                writeln!(
                    out,
                    "  reduction: {merge} then {}",
                    op_name(&config.reduction_blocks()[*r])
                )?;
            }
        }
    }
    Ok(())
}

fn run_search(
    out: &mut impl Write,
    config: SearchConfig,
    layout: &GenomeLayout,
    args: SearchArgs,
) -> Result<(), Failure> {
    let mut ea = *config.ea();
    if let Some(s) = args.seed {
        ea.seed = s;
    }
    if let Some(p) = args.population {
        ea.population = p;
    }
    if let Some(g) = args.generations {
        ea.generations = g;
    }
    if let Some(s) = args.strategy {
        ea.strategy = match s {
            StrategyArg::Single => Strategy::SingleLoop,
            StrategyArg::TwoPhase => Strategy::TwoPhase,
        };
    }
    let config = config.with_ea(ea).map_err(Failure::input)?;
    let fp = fingerprint(&config);

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::other(format!("{}: {e}", args.out_dir.display())))?;
    let log_path = args.out_dir.join("run.log");
    let mut log_file = io::BufWriter::new(
        fs::File::create(&log_path)
            .map_err(|e| Failure::other(format!("{}: {e}", log_path.display())))?,
    );
    let mut log_err: Option<io::Error> = None;
    let mut on_record = |r: &GenerationRecord| {
        log::info!(
            "gen {} evals {} archive {} hv {:.6} best_f1 {:?}",
            r.gen,
            r.evals,
            r.archive_size,
            r.hypervolume,
            r.best_f1
        );
        let line = serde_json::to_string(r).expect("record serializes");
        if let Err(e) = writeln!(log_file, "{line}").and_then(|_| log_file.flush()) {
            log_err.get_or_insert(e);
        }
    };

    let outcome = if args.evaluator == "surrogate" {
        with_cache(
            SurrogateEvaluator,
            args.cache.as_deref(),
            &fp,
            layout,
            |e| search(&config, e, &mut on_record),
        )?
    } else if let Some(command) = args.evaluator.strip_prefix("external:") {
        let timeout = Duration::from_secs(config.ea().evaluator_timeout_s);
        let ext = ExternalEvaluator::new(command, timeout, layout.clone(), fp.clone());
        with_cache(ext, args.cache.as_deref(), &fp, layout, |e| {
            search(&config, e, &mut on_record)
        })?
    } else {
        return Err(Failure::usage(format!(
            "unknown evaluator {:?}; expected `surrogate` or `external:<command>`",
            args.evaluator
        )));
    };
    if let Some(e) = log_err {
        return Err(Failure::other(format!("{}: {e}", log_path.display())));
    }

    let write = |name: &str, text: String| {
        let path = args.out_dir.join(name);
        fs::write(&path, text).map_err(|e| Failure::other(format!("{}: {e}", path.display())))
    };
    write("pareto.csv", pareto_csv(&outcome.archive, layout))?;
    write("pareto.json", pareto_json(&outcome.archive, layout, &fp))?;
    write("pareto.svg", render_pareto_svg(&outcome.archive))?;

    let w = |e: io::Error| Failure::other(e);
    writeln!(out, "evaluations={}", outcome.evaluations).map_err(w)?;
    writeln!(out, "pareto_size={}", outcome.archive.len()).map_err(w)?;
    writeln!(out, "hypervolume={}", outcome.archive.hypervolume()).map_err(w)?;
    match outcome.archive.best_feasible_f1() {
        Some(f1) => writeln!(out, "best_feasible_f1={f1}").map_err(w)?,
        None => writeln!(out, "best_feasible_f1=none").map_err(w)?,
    }
    writeln!(out, "out_dir={}", args.out_dir.display()).map_err(w)
}

fn with_cache<E: Evaluator, T>(
    inner: E,
    cache: Option<&Path>,
    fp: &str,
    layout: &GenomeLayout,
    body: impl FnOnce(&mut dyn Evaluator) -> Result<T, SearchError>,
) -> Result<T, Failure> {
    match cache {
        None => {
            let mut e = inner;
            Ok(body(&mut e)?)
        }
        Some(path) => {
            let file = CacheFile::open(path, fp)
                .map_err(|e| Failure::other(format!("{}: {e}", path.display())))?;
            let mut e = PersistentEvaluator::open(inner, file, layout)
                .map_err(|e| Failure::other(format!("{}: {e}", path.display())))?;
            Ok(body(&mut e)?)
        }
    }
}
