//! Generational search over genomes.
//!
//! Each generation keeps the `n` best individuals (deterministic
//! truncation), then refills the population with pairs of offspring. Parents
//! are drawn from the survivors with rank weights `b * c^i`, recombined by a
//! two-point crossover on token boundaries and mutated. Survivors are
//! re-evaluated alongside the offspring and every individual's fitness is
//! the running mean of all its evaluations.

use std::fmt::Write as _;

use rand::distr::{Distribution, weighted::WeightedIndex};
use rand::Rng;
use rayon::prelude::*;

use crate::builder::{interpret, Atn, BuildConfig};
use crate::error::{Error, Result};
use crate::maze::Maze;
use crate::rng::{self, DecisionRng};
use crate::runtime::{evaluate, DefaultAction, EdgeChoice, RunPolicy, DEFAULT_STEP_CAP};
use crate::token::{translate, Encoding, GeneticCode, Genome, CODE_SIZE, CODON_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MutationSpec {
    /// Flip each bit independently with this probability.
    BitFlip(f64),
    /// Redraw each codon uniformly from the whole code with this probability.
    UniformToken(f64),
}

impl MutationSpec {
    pub fn rate(self) -> f64 {
        match self {
            MutationSpec::BitFlip(r) | MutationSpec::UniformToken(r) => r,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MutationSpec::BitFlip(_) => "bitflip",
            MutationSpec::UniformToken(_) => "uniform",
        }
    }

    /// The genome encoding this operator works on.
    pub fn encoding(self) -> Encoding {
        match self {
            MutationSpec::BitFlip(_) => Encoding::Bitstring,
            MutationSpec::UniformToken(_) => Encoding::Integer,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub truncation_size: usize,
    pub decay: f64,
    pub mutation: MutationSpec,
    /// Probability per offspring of inserting or deleting one codon; 0 disables it.
    pub add_delete_rate: f64,
    pub genome_length: usize,
    pub encoding: Encoding,
    pub build: BuildConfig,
    pub policy: RunPolicy,
    pub generations: usize,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 300,
            truncation_size: 60,
            decay: 0.5f64.powf(1.0 / 60.0),
            mutation: MutationSpec::UniformToken(0.01),
            add_delete_rate: 0.0,
            genome_length: 300,
            encoding: Encoding::Integer,
            build: BuildConfig {
                no_contradiction: true,
                typed_stack_ops: true,
            },
            policy: RunPolicy {
                edge_choice: EdgeChoice::FirstEligible,
                default_action: DefaultAction::Finish,
                step_cap: DEFAULT_STEP_CAP,
            },
            generations: 100,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.truncation_size == 0 || self.truncation_size >= self.population_size {
            return fail(format!(
                "truncation size {} must be in 1..{}",
                self.truncation_size, self.population_size
            ));
        }
        if !(self.population_size - self.truncation_size).is_multiple_of(2) {
            return fail("population size minus truncation size must be even".into());
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return fail(format!("decay {} must lie in (0, 1)", self.decay));
        }
        for (name, r) in [("mutation rate", self.mutation.rate()), ("add/delete rate", self.add_delete_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return fail(format!("{name} {r} must lie in [0, 1]"));
            }
        }
        if self.mutation.encoding() != self.encoding {
            return Err(Error::EncodingMismatch {
                mutation: self.mutation.name(),
                encoding: self.encoding.name(),
            });
        }
        if self.genome_length == 0 {
            return fail("genome length must be positive".into());
        }
        if self.policy.step_cap == 0 {
            return fail("step cap must be at least 1".into());
        }
        Ok(())
    }

    /// Default genetic code resolved for this configuration's stack-op typing.
    pub fn genetic_code(&self) -> GeneticCode {
        GeneticCode::build(self.build.typed_stack_ops)
    }
}

#[derive(Debug, Clone)]
pub struct Individual {
    pub genome: Genome,
    pub atn: Atn,
    pub eval_count: usize,
    mean_fitness: f64,
}

impl Individual {
    pub fn new(genome: Genome, code: &GeneticCode, build: BuildConfig) -> Result<Self> {
        let atn = interpret(&translate(&genome, code)?, build);
        Ok(Individual {
            genome,
            atn,
            eval_count: 0,
            mean_fitness: f64::NAN,
        })
    }

    /// `None` until the first evaluation.
    pub fn mean_fitness(&self) -> Option<f64> {
        (self.eval_count > 0).then_some(self.mean_fitness)
    }

    pub fn record(&mut self, fitness: f64) {
        self.eval_count += 1;
        if self.eval_count == 1 {
            self.mean_fitness = fitness;
        } else {
            self.mean_fitness += (fitness - self.mean_fitness) / self.eval_count as f64;
        }
    }

    fn sort_key(&self) -> f64 {
        self.mean_fitness().unwrap_or(f64::INFINITY)
    }
}

/// Rank weights `b * c^i` for `i = 0..n`, normalised to sum to one.
pub fn selection_weights(n: usize, c: f64) -> Vec<f64> {
    let b = (1.0 - c) / (1.0 - c.powi(n as i32));
    (0..n).map(|i| b * c.powi(i as i32)).collect()
}

/// Exchanges the tokens in `[first, second)` between two equal-length genomes.
pub fn crossover_at(a: &Genome, b: &Genome, first: usize, second: usize) -> Result<(Genome, Genome)> {
    if a.len() != b.len() || a.encoding() != b.encoding() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (lo, hi) = (first.min(second), first.max(second).min(a.len()));
    let lo = lo.min(hi);
    fn swap_range<T: Clone>(x: &[T], y: &[T], lo: usize, hi: usize) -> (Vec<T>, Vec<T>) {
        let mut cx = x.to_vec();
        let mut cy = y.to_vec();
        cx[lo..hi].clone_from_slice(&y[lo..hi]);
        cy[lo..hi].clone_from_slice(&x[lo..hi]);
        (cx, cy)
    }
    Ok(match (a, b) {
        (Genome::Integer(x), Genome::Integer(y)) => {
            let (cx, cy) = swap_range(x, y, lo, hi);
            (Genome::Integer(cx), Genome::Integer(cy))
        }
        (Genome::Bitstring(x), Genome::Bitstring(y)) => {
            let (cx, cy) = swap_range(x, y, lo * CODON_WIDTH, hi * CODON_WIDTH);
            (Genome::Bitstring(cx), Genome::Bitstring(cy))
        }
        _ => unreachable!("encodings checked above"),
    })
}

/// Two-point crossover with both cut points uniform on token boundaries `0..=L`.
pub fn two_point_crossover<R: Rng + ?Sized>(
    a: &Genome,
    b: &Genome,
    rng: &mut R,
) -> Result<(Genome, Genome)> {
    let len = a.len();
    let p = rng.random_range(0..=len);
    let q = rng.random_range(0..=len);
    crossover_at(a, b, p.min(q), p.max(q))
}

/// Point mutation by `spec`, then (with `add_delete_rate`) insertion or
/// deletion of one whole codon at a uniform position.
pub fn mutate<R: Rng + ?Sized>(
    genome: &Genome,
    spec: MutationSpec,
    add_delete_rate: f64,
    rng: &mut R,
) -> Result<Genome> {
    let mut out = match (genome, spec) {
        (Genome::Bitstring(bits), MutationSpec::BitFlip(rate)) => Genome::Bitstring(
            bits.iter()
                .map(|&b| if rng.random_bool(rate) { !b } else { b })
                .collect(),
        ),
        (Genome::Integer(codons), MutationSpec::UniformToken(rate)) => Genome::Integer(
            codons
                .iter()
                .map(|&c| {
                    if rng.random_bool(rate) {
                        rng.random_range(0..CODE_SIZE) as u8
                    } else {
                        c
                    }
                })
                .collect(),
        ),
        (g, s) => {
            return Err(Error::EncodingMismatch {
                mutation: s.name(),
                encoding: g.encoding().name(),
            })
        }
    };
    if add_delete_rate > 0.0 && rng.random_bool(add_delete_rate) {
        let len = out.len();
        let insert = len <= 1 || rng.random_bool(0.5);
        match &mut out {
            Genome::Integer(codons) => {
                if insert {
                    let at = rng.random_range(0..=len);
                    codons.insert(at, rng.random_range(0..CODE_SIZE) as u8);
                } else {
                    codons.remove(rng.random_range(0..len));
                }
            }
            Genome::Bitstring(bits) => {
                if insert {
                    let at = rng.random_range(0..=len) * CODON_WIDTH;
                    let codon: Vec<bool> = (0..CODON_WIDTH).map(|_| rng.random()).collect();
                    bits.splice(at..at, codon);
                } else {
                    let at = rng.random_range(0..len) * CODON_WIDTH;
                    bits.drain(at..at + CODON_WIDTH);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub median: f64,
}

impl GenerationStats {
    fn of(generation: usize, population: &[Individual]) -> Self {
        let mut f: Vec<f64> = population.iter().map(Individual::sort_key).collect();
        f.sort_by(f64::total_cmp);
        let n = f.len();
        let median = if n % 2 == 1 {
            f[n / 2]
        } else {
            (f[n / 2 - 1] + f[n / 2]) / 2.0
        };
        GenerationStats {
            generation,
            best: f[0],
            mean: f.iter().sum::<f64>() / n as f64,
            median,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Champion {
    pub genome: Genome,
    pub mean_fitness: f64,
    pub evaluations: usize,
}

/// Everything needed to report on, and replay, one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: EvolutionConfig,
    pub generations: Vec<GenerationStats>,
    pub champion: Champion,
    pub champion_graph: Option<String>,
}

impl RunRecord {
    /// The champion's mean fitness after the last generation.
    pub fn final_fitness(&self) -> f64 {
        self.champion.mean_fitness
    }

    /// Lowest per-generation best fitness.
    pub fn best_ever(&self) -> f64 {
        self.generations
            .iter()
            .map(|g| g.best)
            .fold(f64::INFINITY, f64::min)
    }

    /// First generation whose best fitness is at or below `target`.
    pub fn first_crossing(&self, target: f64) -> Option<usize> {
        self.generations
            .iter()
            .find(|g| g.best <= target)
            .map(|g| g.generation)
    }
}

/// Stateful driver for a single run.
pub struct Evolver<'a> {
    config: EvolutionConfig,
    code: GeneticCode,
    maze: &'a Maze,
    rng: DecisionRng,
    population: Vec<Individual>,
    generation: usize,
}

impl<'a> Evolver<'a> {
    /// Creates and evaluates the random initial population.
    pub fn new(config: EvolutionConfig, code: GeneticCode, maze: &'a Maze) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(config.seed);
        let population = (0..config.population_size)
            .map(|_| {
                let g = crate::token::random_genome(config.encoding, config.genome_length, &mut rng);
                Individual::new(g, &code, config.build)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut evolver = Evolver {
            config,
            code,
            maze,
            rng,
            population,
            generation: 0,
        };
        evolver.evaluate_all();
        Ok(evolver)
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn stats(&self) -> GenerationStats {
        GenerationStats::of(self.generation, &self.population)
    }

    pub fn champion(&self) -> &Individual {
        self.population
            .iter()
            .min_by(|a, b| a.sort_key().total_cmp(&b.sort_key()))
            .expect("population is never empty")
    }

    fn evaluate_all(&mut self) {
        let eval_seed: u64 = self.rng.random();
        let maze = self.maze;
        let policy = self.config.policy;
        self.population
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, ind)| {
                let mut stream = rng::derived_stream(eval_seed, &[i as u64]);
                let f = evaluate(&ind.atn, maze, &policy, &mut stream);
                ind.record(f);
            });
    }

    /// Truncation, variation and (re-)evaluation.
    pub fn step(&mut self) -> Result<()> {
        let cfg = &self.config;
        let mut parents = std::mem::take(&mut self.population);
        // Stable: ties keep their current order.
        parents.sort_by(|a, b| a.sort_key().total_cmp(&b.sort_key()));
        parents.truncate(cfg.truncation_size);

        let weights = selection_weights(cfg.truncation_size, cfg.decay);
        let picker = WeightedIndex::new(&weights)
            .map_err(|e| Error::Config(format!("selection weights: {e}")))?;
        let mut offspring = Vec::with_capacity(cfg.population_size - cfg.truncation_size);
        while parents.len() + offspring.len() < cfg.population_size {
            let a = &parents[picker.sample(&mut self.rng)].genome;
            let b = &parents[picker.sample(&mut self.rng)].genome;
            let (ca, cb) = if a.len() == b.len() {
                two_point_crossover(a, b, &mut self.rng)?
            } else {
                (a.clone(), b.clone())
            };
            for child in [ca, cb] {
                if parents.len() + offspring.len() == cfg.population_size {
                    break;
                }
                let g = mutate(&child, cfg.mutation, cfg.add_delete_rate, &mut self.rng)?;
                offspring.push(Individual::new(g, &self.code, cfg.build)?);
            }
        }
        parents.extend(offspring);
        self.population = parents;
        self.generation += 1;
        self.evaluate_all();
        Ok(())
    }

    pub fn into_record(self, history: Vec<GenerationStats>) -> RunRecord {
        let champ = self.champion();
        RunRecord {
            champion: Champion {
                genome: champ.genome.clone(),
                mean_fitness: champ.sort_key(),
                evaluations: champ.eval_count,
            },
            config: self.config,
            generations: history,
            champion_graph: None,
        }
    }
}

/// Runs one generation on `population` in place of an [`Evolver`]; useful
/// when the caller owns the population.
pub fn run_generation(
    population: Vec<Individual>,
    maze: &Maze,
    config: &EvolutionConfig,
    code: &GeneticCode,
    rng: &mut DecisionRng,
) -> Result<Vec<Individual>> {
    let mut evolver = Evolver {
        config: config.clone(),
        code: code.clone(),
        maze,
        rng: rng.clone(),
        population,
        generation: 0,
    };
    evolver.step()?;
    *rng = evolver.rng;
    Ok(evolver.population)
}

pub fn run_evolution_with_code(
    config: &EvolutionConfig,
    maze: &Maze,
    code: GeneticCode,
) -> Result<RunRecord> {
    let mut evolver = Evolver::new(config.clone(), code, maze)?;
    let mut history = vec![evolver.stats()];
    for _ in 0..config.generations {
        evolver.step()?;
        history.push(evolver.stats());
    }
    Ok(evolver.into_record(history))
}

/// A complete run with the default genetic code.
pub fn run_evolution(config: &EvolutionConfig, maze: &Maze) -> Result<RunRecord> {
    run_evolution_with_code(config, maze, config.genetic_code())
}

// ---- record file -------------------------------------------------------

impl RunRecord {
    /// Text form: a `[config]` key=value block, a `[generations]` CSV block
    /// and a `[champion]` block with the genome as codon values.
    pub fn to_text(&self) -> String {
        let mut out = String::from("[config]\n");
        out.push_str(&crate::config::to_text(&self.config));
        out.push_str("\n[generations]\ngeneration,best,mean,median\n");
        for g in &self.generations {
            let _ = writeln!(out, "{},{},{},{}", g.generation, g.best, g.mean, g.median);
        }
        out.push_str("\n[champion]\n");
        let _ = writeln!(out, "mean_fitness={}", self.champion.mean_fitness);
        let _ = writeln!(out, "evaluations={}", self.champion.evaluations);
        let codons: Vec<String> = self
            .champion
            .genome
            .codons()
            .unwrap_or_default()
            .iter()
            .map(usize::to_string)
            .collect();
        let _ = writeln!(out, "genome={}", codons.join(","));
        if let Some(path) = &self.champion_graph {
            let _ = writeln!(out, "graph={path}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<RunRecord> {
        let mut section = "";
        let mut config_lines = String::new();
        let mut generations = Vec::new();
        let mut champ: std::collections::BTreeMap<String, String> = Default::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |reason: String| Error::Record { line: i + 1, reason };
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = match line {
                    "[config]" => "config",
                    "[generations]" => "generations",
                    "[champion]" => "champion",
                    other => return Err(err(format!("unknown section {other}"))),
                };
                continue;
            }
            match section {
                "config" => {
                    config_lines.push_str(line);
                    config_lines.push('\n');
                }
                "generations" => {
                    if line.starts_with("generation") {
                        continue;
                    }
                    let f: Vec<&str> = line.split(',').collect();
                    let [g, best, mean, median] = f[..] else {
                        return Err(err("expected 4 columns".into()));
                    };
                    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
                    generations.push(GenerationStats {
                        generation: g.trim().parse().map_err(|_| err(format!("bad generation `{g}`")))?,
                        best: num(best)?,
                        mean: num(mean)?,
                        median: num(median)?,
                    });
                }
                "champion" => {
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| err("expected key=value".into()))?;
                    champ.insert(k.trim().to_string(), v.trim().to_string());
                }
                _ => return Err(err("content before first section".into())),
            }
        }
        let rerr = |reason: &str| Error::Record { line: 0, reason: reason.into() };
        let (config, _) = crate::config::parse(&config_lines, &[])?;
        let mean_fitness = champ
            .get("mean_fitness")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| rerr("champion mean_fitness missing"))?;
        let evaluations = champ
            .get("evaluations")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| rerr("champion evaluations missing"))?;
        let codons = champ
            .get("genome")
            .ok_or_else(|| rerr("champion genome missing"))?;
        let genome = parse_genome(codons, config.encoding)?;
        Ok(RunRecord {
            config,
            generations,
            champion: Champion {
                genome,
                mean_fitness,
                evaluations,
            },
            champion_graph: champ.get("graph").cloned(),
        })
    }
}

/// Parses a comma or whitespace separated list of codon values.
pub fn parse_genome(text: &str, encoding: Encoding) -> Result<Genome> {
    let codons = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| match s.parse::<u8>() {
            Ok(v) if (v as usize) < CODE_SIZE => Ok(v),
            _ => Err(Error::Record { line: 0, reason: format!("bad codon `{s}`") }),
        })
        .collect::<Result<Vec<u8>>>()?;
    let g = Genome::Integer(codons);
    match encoding {
        Encoding::Integer => Ok(g),
        Encoding::Bitstring => g.to_bitstring(),
    }
}
