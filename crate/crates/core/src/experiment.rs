//! Ablation batches and the statistics reported over them.
//!
//! Four binary factors are crossed into a grid of 16 cells; each cell is run
//! several times with seeds derived from a master seed, so any single cell
//! (or run) can be replayed without the rest of the grid.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::builder::{interpret, Atn};
use crate::error::{Error, Result};
use crate::evolution::{run_evolution, EvolutionConfig, MutationSpec, RunRecord};
use crate::maze::{Maze, Position};
use crate::rng;
use crate::runtime::{run_trial, DefaultAction};
use crate::stats::{quartiles, welch_ttest, Quartiles};
use crate::token::{translate, Encoding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    /// BitFlip (off) vs Uniform (on).
    Mutation,
    /// All (off) vs Node/Label (on).
    StackOps,
    /// Contradiction (off) vs No-Contradiction (on).
    Contradiction,
    /// Random (off) vs Finish (on).
    DefaultAction,
}

impl Factor {
    pub const ALL: [Factor; 4] = [
        Factor::Mutation,
        Factor::StackOps,
        Factor::Contradiction,
        Factor::DefaultAction,
    ];

    /// Level names for `(off, on)`.
    pub fn level_names(self) -> (&'static str, &'static str) {
        match self {
            Factor::Mutation => ("BitFlip", "Uniform"),
            Factor::StackOps => ("All", "NodeLabel"),
            Factor::Contradiction => ("Contradiction", "NoContradiction"),
            Factor::DefaultAction => ("Random", "Finish"),
        }
    }

    pub fn level_name(self, on: bool) -> &'static str {
        let (off, on_name) = self.level_names();
        if on {
            on_name
        } else {
            off
        }
    }

    /// Parses a level name such as `Uniform` or `random` into its factor and level.
    pub fn parse_level(name: &str) -> Option<(Factor, bool)> {
        let lower = name.trim().to_ascii_lowercase().replace(['-', '_', '/'], "");
        Factor::ALL.into_iter().find_map(|f| {
            let (off, on) = f.level_names();
            if off.to_ascii_lowercase() == lower {
                Some((f, false))
            } else if on.to_ascii_lowercase() == lower {
                Some((f, true))
            } else {
                None
            }
        })
    }

    fn bit(self) -> usize {
        match self {
            Factor::Mutation => 0,
            Factor::StackOps => 1,
            Factor::Contradiction => 2,
            Factor::DefaultAction => 3,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (off, on) = self.level_names();
        write!(f, "{off}/{on}")
    }
}

/// One combination of the four factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridCell(u8);

impl GridCell {
    pub fn from_index(i: usize) -> Self {
        assert!(i < 16);
        GridCell(i as u8)
    }

    /// Stable index in 0..16, used for seed derivation.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn level(self, f: Factor) -> bool {
        self.0 >> f.bit() & 1 == 1
    }

    pub fn with(self, f: Factor, on: bool) -> Self {
        let mask = 1 << f.bit();
        GridCell(if on { self.0 | mask } else { self.0 & !mask })
    }

    pub fn from_config(c: &EvolutionConfig) -> Self {
        GridCell(0)
            .with(Factor::Mutation, matches!(c.mutation, MutationSpec::UniformToken(_)))
            .with(Factor::StackOps, c.build.typed_stack_ops)
            .with(Factor::Contradiction, c.build.no_contradiction)
            .with(Factor::DefaultAction, c.policy.default_action == DefaultAction::Finish)
    }

    /// `base` with this cell's four settings; the mutation rate is kept.
    pub fn apply(self, base: &EvolutionConfig) -> EvolutionConfig {
        let rate = base.mutation.rate();
        let mut c = base.clone();
        if self.level(Factor::Mutation) {
            c.mutation = MutationSpec::UniformToken(rate);
            c.encoding = Encoding::Integer;
        } else {
            c.mutation = MutationSpec::BitFlip(rate);
            c.encoding = Encoding::Bitstring;
        }
        c.build.typed_stack_ops = self.level(Factor::StackOps);
        c.build.no_contradiction = self.level(Factor::Contradiction);
        c.policy.default_action = if self.level(Factor::DefaultAction) {
            DefaultAction::Finish
        } else {
            DefaultAction::Random
        };
        c
    }
}

impl fmt::Display for GridCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = Factor::ALL.iter().map(|&x| x.level_name(self.level(x))).collect();
        f.write_str(&names.join("/"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationGrid {
    /// Factors held at a fixed level; the others vary.
    pub fixed: Vec<(Factor, bool)>,
    pub runs_per_cell: usize,
}

impl Default for AblationGrid {
    fn default() -> Self {
        AblationGrid {
            fixed: Vec::new(),
            runs_per_cell: 50,
        }
    }
}

impl AblationGrid {
    pub fn cells(&self) -> Vec<GridCell> {
        (0..16)
            .map(GridCell::from_index)
            .filter(|c| self.fixed.iter().all(|&(f, on)| c.level(f) == on))
            .collect()
    }
}

/// Seed of run `run` of `cell` under `master`.
pub fn run_seed(master: u64, cell: GridCell, run: usize) -> u64 {
    rng::derive_seed(master, &[cell.index() as u64, run as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRun {
    pub cell: GridCell,
    pub run: usize,
    pub record: RunRecord,
}

/// Runs `runs` replicates of one cell; `base.seed` is the master seed.
pub fn run_cell(maze: &Maze, cell: GridCell, runs: std::ops::Range<usize>, base: &EvolutionConfig) -> Result<Vec<GridRun>> {
    runs.into_par_iter()
        .map(|run| {
            let mut cfg = cell.apply(base);
            cfg.seed = run_seed(base.seed, cell, run);
            Ok(GridRun {
                cell,
                run,
                record: run_evolution(&cfg, maze)?,
            })
        })
        .collect()
}

/// Runs every cell of `grid`; records come back in (cell, run) order.
pub fn run_grid(maze: &Maze, grid: &AblationGrid, base: &EvolutionConfig) -> Result<Vec<GridRun>> {
    let jobs: Vec<(GridCell, usize)> = grid
        .cells()
        .into_iter()
        .flat_map(|c| (0..grid.runs_per_cell).map(move |r| (c, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(cell, run)| {
            let mut cfg = cell.apply(base);
            cfg.seed = run_seed(base.seed, cell, run);
            Ok(GridRun {
                cell,
                run,
                record: run_evolution(&cfg, maze)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorTest {
    pub factor: Factor,
    pub mean_off: f64,
    pub mean_on: f64,
    pub n_off: usize,
    pub n_on: usize,
    pub t: f64,
    pub p_value: f64,
}

/// Compares final fitness between the two levels of `factor`, over the
/// records matching every `(factor, level)` in `given`.
pub fn factor_ttest(records: &[RunRecord], factor: Factor, given: &[(Factor, bool)]) -> Result<FactorTest> {
    let (mut off, mut on) = (Vec::new(), Vec::new());
    for r in records {
        let cell = GridCell::from_config(&r.config);
        if given.iter().all(|&(f, l)| cell.level(f) == l) {
            if cell.level(factor) {
                on.push(r.final_fitness());
            } else {
                off.push(r.final_fitness());
            }
        }
    }
    let t = welch_ttest(&off, &on).map_err(|e| match e {
        Error::Stats(m) => Error::Stats(format!("{factor}: {m}")),
        other => other,
    })?;
    Ok(FactorTest {
        factor,
        mean_off: t.mean_a,
        mean_on: t.mean_b,
        n_off: off.len(),
        n_on: on.len(),
        t: t.t,
        p_value: t.p_value,
    })
}

/// Five-number summary of final fitness over `records`.
pub fn quartile_summary(records: &[RunRecord]) -> Result<Quartiles> {
    let v: Vec<f64> = records.iter().map(RunRecord::final_fitness).collect();
    quartiles(&v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatReport {
    pub given: Vec<(Factor, bool)>,
    pub factors: Vec<FactorTest>,
    pub cells: Vec<(GridCell, usize, Quartiles)>,
}

/// Factor tests for every factor that is neither fixed by `given` nor
/// constant across the matching records, and per-cell quartiles.
pub fn stat_report(records: &[RunRecord], given: &[(Factor, bool)]) -> Result<StatReport> {
    let matching: Vec<GridCell> = records
        .iter()
        .map(|r| GridCell::from_config(&r.config))
        .filter(|c| given.iter().all(|&(f, l)| c.level(f) == l))
        .collect();
    let varies = |f: Factor| matching.iter().any(|c| c.level(f)) && matching.iter().any(|c| !c.level(f));
    let factors = Factor::ALL
        .into_iter()
        .filter(|&f| !given.iter().any(|&(g, _)| g == f) && varies(f))
        .map(|f| factor_ttest(records, f, given))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for cell in (0..16).map(GridCell::from_index) {
        let group: Vec<RunRecord> = records
            .iter()
            .filter(|r| GridCell::from_config(&r.config) == cell)
            .filter(|_| given.iter().all(|&(f, l)| cell.level(f) == l))
            .cloned()
            .collect();
        if !group.is_empty() {
            cells.push((cell, group.len(), quartile_summary(&group)?));
        }
    }
    Ok(StatReport {
        given: given.to_vec(),
        factors,
        cells,
    })
}

impl StatReport {
    pub fn factors_csv(&self) -> String {
        let mut out = String::from("factor,level_off,mean_off,n_off,level_on,mean_on,n_on,t,p_value\n");
        for t in &self.factors {
            let (off, on) = t.factor.level_names();
            let _ = writeln!(
                out,
                "{},{off},{},{},{on},{},{},{},{}",
                t.factor, t.mean_off, t.n_off, t.mean_on, t.n_on, t.t, t.p_value
            );
        }
        out
    }

    pub fn cells_csv(&self) -> String {
        let mut out = String::from("cell,runs,min,q1,median,q3,max\n");
        for (cell, n, q) in &self.cells {
            let _ = writeln!(out, "{cell},{n},{},{},{},{},{}", q.min, q.q1, q.median, q.q3, q.max);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convergence {
    Reached {
        /// Percentage of runs whose best fitness ever reaches the target.
        pr: f64,
        /// Mean first-crossing generation among those runs.
        ng: f64,
        /// Evaluations needed on average: `P * NG * 100 / PR`.
        ne: f64,
        /// Elementary trials: `NS * NE`.
        nt: f64,
    },
    /// No run ever reaches the target.
    NeverOutperforms,
}

impl fmt::Display for Convergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Convergence::Reached { pr, ng, ne, nt } => {
                write!(f, "PR={pr:.2}% NG={ng:.2} NE={ne:.0} NT={nt:.0}")
            }
            Convergence::NeverOutperforms => f.write_str("never outperforms"),
        }
    }
}

/// Cost of reaching `target` mean steps, with `ns` start cells and the
/// population size taken from the records' configuration.
pub fn convergence_cost(records: &[RunRecord], target: f64, ns: usize) -> Result<Convergence> {
    if target.is_nan() || target <= 0.0 {
        return Err(Error::Stats(format!("target fitness {target} must be positive")));
    }
    let Some(first) = records.first() else {
        return Err(Error::Stats("no run records".into()));
    };
    let population = first.config.population_size as f64;
    let crossings: Vec<usize> = records.iter().filter_map(|r| r.first_crossing(target)).collect();
    if crossings.is_empty() {
        return Ok(Convergence::NeverOutperforms);
    }
    let pr = 100.0 * crossings.len() as f64 / records.len() as f64;
    let ng = crossings.iter().sum::<usize>() as f64 / crossings.len() as f64;
    let ne = population * ng * 100.0 / pr;
    Ok(Convergence::Reached {
        pr,
        ng,
        ne,
        nt: ns as f64 * ne,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSteps {
    pub position: Position,
    pub steps: usize,
    pub oracle: usize,
}

#[derive(Debug, Clone)]
pub struct ChampionExport {
    pub atn: Atn,
    pub policy: Vec<CellSteps>,
}

/// Rebuilds a record's champion and runs it once from every start cell.
pub fn export_champion(record: &RunRecord, maze: &Maze) -> Result<ChampionExport> {
    let cfg = &record.config;
    let atn = interpret(&translate(&record.champion.genome, &cfg.genetic_code())?, cfg.build);
    let oracle = maze.oracle_steps()?;
    let mut stream = rng::derived_stream(cfg.seed, &[u64::MAX]);
    let policy = maze
        .start_cells()
        .iter()
        .zip(oracle)
        .map(|(&p, o)| CellSteps {
            position: p,
            steps: run_trial(&atn, maze, p, &cfg.policy, &mut stream).cost(cfg.policy.step_cap),
            oracle: o,
        })
        .collect();
    Ok(ChampionExport { atn, policy })
}

impl ChampionExport {
    pub fn policy_csv(&self) -> String {
        let mut out = String::from("row,col,steps,oracle\n");
        for c in &self.policy {
            let _ = writeln!(out, "{},{},{},{}", c.position.row, c.position.col, c.steps, c.oracle);
        }
        out
    }

    /// Writes `<stem>.dot` and `<stem>.policy.csv` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let dot = dir.join(format!("{stem}.dot"));
        let csv = dir.join(format!("{stem}.policy.csv"));
        std::fs::write(&dot, self.atn.to_dot())?;
        std::fs::write(&csv, self.policy_csv())?;
        Ok((dot, csv))
    }
}
