//! `atn`: run evolutions and ablation grids, and inspect their results.
//!
//! The worker count for parallel evaluation comes from `ATN_WORKERS`
//! (default: all cores).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use atn_core::config;
use atn_core::evolution::{parse_genome, run_evolution_with_code};
use atn_core::experiment::{
    convergence_cost, export_champion, run_grid, stat_report, AblationGrid, Factor,
};
use atn_core::rng;
use atn_core::runtime::trial_costs;
use atn_core::token::translate;
use atn_core::{interpret, BuildConfig, EvolutionConfig, GeneticCode, Genome, Maze, RunRecord};

#[derive(Parser)]
#[command(name = "atn", version, about = "Evolve ATN controllers for woods mazes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One evolutionary run from a config file.
    Evolve(EvolveArgs),
    /// The ablation grid over the four binary factors.
    Grid(GridArgs),
    /// Factor t-tests, per-cell quartiles and convergence cost over record files.
    Stats(StatsArgs),
    /// Shortest-path mean steps to food over all start cells.
    Oracle(OracleArgs),
    /// Build the graph of a genome and print it in DOT form.
    Build(BuildArgs),
    /// Evaluate a genome on a maze.
    Eval(EvalArgs),
    /// Write a record's champion graph and per-cell steps table.
    Export(ExportArgs),
}

#[derive(Args)]
struct CodeArg {
    /// Genetic code table replacing the built-in one.
    #[arg(long, value_name = "FILE")]
    genetic_code: Option<PathBuf>,
}

impl CodeArg {
    fn load(&self, typed: bool) -> Result<GeneticCode> {
        match &self.genetic_code {
            Some(p) => GeneticCode::load(p, typed).with_context(|| format!("loading {}", p.display())),
            None => Ok(GeneticCode::build(typed)),
        }
    }
}

#[derive(Args)]
struct EvolveArgs {
    /// key=value configuration; may name the map with `maze=<path>`.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Map file; overrides the config's `maze`.
    #[arg(long, short)]
    maze: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's generation count.
    #[arg(long)]
    generations: Option<usize>,
    /// Record file to write (default: stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write the champion graph and steps table into this directory.
    #[arg(long, value_name = "DIR")]
    export: Option<PathBuf>,
    #[command(flatten)]
    code: CodeArg,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    maze: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    runs: usize,
    /// Master seed; overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    generations: Option<usize>,
    /// Factor levels to hold fixed, e.g. `--fix Uniform --fix Random`.
    #[arg(long, value_name = "LEVEL")]
    fix: Vec<String>,
    /// Directory receiving one record file per run.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Record files or directories of them.
    #[arg(required = true)]
    records: Vec<PathBuf>,
    /// Condition on factor levels, e.g. `--given Uniform`.
    #[arg(long, value_name = "LEVEL")]
    given: Vec<String>,
    /// Target mean steps for the convergence cost.
    #[arg(long)]
    target: Option<f64>,
    /// Number of start cells, for the trial count (default: from `--maze`).
    #[arg(long)]
    ns: Option<usize>,
    #[arg(long)]
    maze: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    maze: PathBuf,
    /// Print the per-cell distances as CSV.
    #[arg(long)]
    cells: bool,
}

#[derive(Args)]
struct GenomeArgs {
    /// Codon list (comma or whitespace separated) or a record file.
    genome: PathBuf,
    /// Config supplying build and run settings; a record file's own config wins.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    code: CodeArg,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    genome: GenomeArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    genome: GenomeArgs,
    #[arg(long, short)]
    maze: PathBuf,
    /// Number of evaluations to average.
    #[arg(long, default_value_t = 1)]
    evals: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print per-start-cell steps as CSV.
    #[arg(long)]
    cells: bool,
}

#[derive(Args)]
struct ExportArgs {
    record: PathBuf,
    #[arg(long, short)]
    maze: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// File stem for the outputs (default: the record's file stem).
    #[arg(long)]
    stem: Option<String>,
}

fn main() -> Result<()> {
    if let Ok(v) = std::env::var("ATN_WORKERS") {
        let n: usize = v.parse().context("ATN_WORKERS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match Cli::parse().command {
        Command::Evolve(a) => evolve(a),
        Command::Grid(a) => grid(a),
        Command::Stats(a) => stats(a),
        Command::Oracle(a) => oracle(a),
        Command::Build(a) => build(a),
        Command::Eval(a) => eval(a),
        Command::Export(a) => export(a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_maze(path: &Path) -> Result<Maze> {
    Maze::load(path).with_context(|| format!("loading map {}", path.display()))
}

/// Reads a config file, returning the map path it names, if any.
fn load_config(path: Option<&Path>) -> Result<(EvolutionConfig, Option<PathBuf>)> {
    let Some(path) = path else {
        return Ok((EvolutionConfig::default(), None));
    };
    let (cfg, extra) = config::parse(&read(path)?, &["maze"]).with_context(|| format!("in {}", path.display()))?;
    let maze = extra.get("maze").map(|m| path.parent().unwrap_or(Path::new("")).join(m));
    Ok((cfg, maze))
}

fn pick_maze(cli: Option<PathBuf>, from_config: Option<PathBuf>) -> Result<Maze> {
    match cli.or(from_config) {
        Some(p) => load_maze(&p),
        None => bail!("no map given; pass --maze or set maze=<path> in the config"),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn evolve(a: EvolveArgs) -> Result<()> {
    let (mut cfg, maze_path) = load_config(a.config.as_deref())?;
    let maze = pick_maze(a.maze, maze_path)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(g) = a.generations {
        cfg.generations = g;
    }
    let code = a.code.load(cfg.build.typed_stack_ops)?;
    let mut record = run_evolution_with_code(&cfg, &maze, code)?;
    if let Some(dir) = &a.export {
        let (dot, _) = export_champion(&record, &maze)?.write(dir, &format!("champion_{}", cfg.seed))?;
        record.champion_graph = Some(dot.display().to_string());
    }
    eprintln!(
        "seed {}: champion {:.4} mean steps over {} evaluations (oracle {:.4})",
        cfg.seed,
        record.final_fitness(),
        record.champion.evaluations,
        maze.oracle_mean_steps()?
    );
    write_or_print(a.out.as_deref(), &record.to_text())
}

fn parse_levels(names: &[String]) -> Result<Vec<(Factor, bool)>> {
    names
        .iter()
        .flat_map(|n| n.split(','))
        .map(|n| Factor::parse_level(n).with_context(|| format!("unknown factor level `{n}`")))
        .collect()
}

fn grid(a: GridArgs) -> Result<()> {
    let (mut cfg, maze_path) = load_config(a.config.as_deref())?;
    let maze = pick_maze(a.maze, maze_path)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(g) = a.generations {
        cfg.generations = g;
    }
    let grid = AblationGrid {
        fixed: parse_levels(&a.fix)?,
        runs_per_cell: a.runs,
    };
    fs::create_dir_all(&a.out)?;
    let runs = run_grid(&maze, &grid, &cfg)?;
    for r in &runs {
        let path = a.out.join(format!("cell{:02}_run{:03}.txt", r.cell.index(), r.run));
        fs::write(&path, r.record.to_text()).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!("{} records written to {}", runs.len(), a.out.display());
    Ok(())
}

fn collect_records(paths: &[PathBuf]) -> Result<Vec<RunRecord>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            entries.retain(|e| e.extension().is_some_and(|x| x == "txt"));
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    files
        .iter()
        .map(|f| RunRecord::parse(&read(f)?).with_context(|| format!("in {}", f.display())))
        .collect()
}

fn stats(a: StatsArgs) -> Result<()> {
    let records = collect_records(&a.records)?;
    let given = parse_levels(&a.given)?;
    let report = stat_report(&records, &given)?;
    let mut out = String::new();
    let _ = writeln!(out, "# {} records", records.len());
    out.push_str(&report.factors_csv());
    out.push('\n');
    out.push_str(&report.cells_csv());
    if let Some(target) = a.target {
        let ns = match (a.ns, &a.maze) {
            (Some(n), _) => n,
            (None, Some(m)) => load_maze(m)?.start_cells().len(),
            (None, None) => bail!("--target needs --ns or --maze"),
        };
        out.push_str("\ntarget,pr,ng,ne,nt\n");
        match convergence_cost(&records, target, ns)? {
            atn_core::experiment::Convergence::Reached { pr, ng, ne, nt } => {
                let _ = writeln!(out, "{target},{pr},{ng},{ne},{nt}");
            }
            atn_core::experiment::Convergence::NeverOutperforms => {
                let _ = writeln!(out, "{target},0,never,never,never");
            }
        }
    }
    print!("{out}");
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<()> {
    let maze = load_maze(&a.maze)?;
    let steps = maze.oracle_steps()?;
    if a.cells {
        println!("row,col,steps");
        for (p, s) in maze.start_cells().iter().zip(&steps) {
            println!("{},{},{s}", p.row, p.col);
        }
    }
    println!("start_cells={}", steps.len());
    println!("mean_steps={}", maze.oracle_mean_steps()?);
    Ok(())
}

/// A genome with the settings to build and run it.
fn load_genome(a: &GenomeArgs) -> Result<(Genome, EvolutionConfig, GeneticCode)> {
    let text = read(&a.genome)?;
    let (genome, cfg) = if text.trim_start().starts_with("[config]") {
        let r = RunRecord::parse(&text).with_context(|| format!("in {}", a.genome.display()))?;
        (r.champion.genome, r.config)
    } else {
        let (cfg, _) = load_config(a.config.as_deref())?;
        (parse_genome(&text, cfg.encoding)?, cfg)
    };
    let code = a.code.load(cfg.build.typed_stack_ops)?;
    Ok((genome, cfg, code))
}

fn build_atn(g: &Genome, code: &GeneticCode, build: BuildConfig) -> Result<atn_core::Atn> {
    Ok(interpret(&translate(g, code)?, build))
}

fn build(a: BuildArgs) -> Result<()> {
    let (genome, cfg, code) = load_genome(&a.genome)?;
    let atn = build_atn(&genome, &code, cfg.build)?;
    write_or_print(a.out.as_deref(), &atn.to_dot())
}

fn eval(a: EvalArgs) -> Result<()> {
    if a.evals == 0 {
        bail!("--evals must be at least 1");
    }
    let (genome, cfg, code) = load_genome(&a.genome)?;
    let maze = load_maze(&a.maze)?;
    let atn = build_atn(&genome, &code, cfg.build)?;
    let mut total = vec![0usize; maze.start_cells().len()];
    for k in 0..a.evals {
        let mut stream = rng::derived_stream(a.seed, &[k as u64]);
        for (t, c) in total.iter_mut().zip(trial_costs(&atn, &maze, &cfg.policy, &mut stream)) {
            *t += c;
        }
    }
    let n = a.evals as f64;
    if a.cells {
        println!("row,col,mean_steps");
        for (p, t) in maze.start_cells().iter().zip(&total) {
            println!("{},{},{}", p.row, p.col, *t as f64 / n);
        }
    }
    let mean = total.iter().sum::<usize>() as f64 / (n * total.len() as f64);
    println!("fitness={mean}");
    println!("oracle={}", maze.oracle_mean_steps()?);
    Ok(())
}

fn export(a: ExportArgs) -> Result<()> {
    let record = RunRecord::parse(&read(&a.record)?).with_context(|| format!("in {}", a.record.display()))?;
    let maze = load_maze(&a.maze)?;
    let stem = match a.stem {
        Some(s) => s,
        None => a
            .record
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "champion".into()),
    };
    let (dot, csv) = export_champion(&record, &maze)?.write(&a.out, &stem)?;
    println!("{}", dot.display());
    println!("{}", csv.display());
    Ok(())
}
