//! The (mu+1) genetic algorithm: random-walk mutation with a self-adapting
//! walk length, random-walk and rectangular crossover, and replacement of the
//! first parent only.
//!
//! All randomness comes from one ChaCha8 stream seeded by [`GaConfig::seed`].
//! Per iteration the draws happen in this order: branch coin, slot, partner
//! (crossover only), operator coin, walk start or rectangle, walk steps.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ConfigError, Result};
use crate::fitness::{lex_compare, FitnessContext, Individual, Source};

/// Region statistics of every individual are rebuilt from their feature
/// tensors at this interval to flush floating-point drift.
pub const REBUILD_INTERVAL: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct GaConfig {
    pub mu: usize,
    pub generations: usize,
    pub p_c: f64,
    pub t_cr: usize,
    pub t_lb: f64,
    pub t_ub: f64,
    /// Walk length before any adaptation.
    pub t_init: f64,
    pub f: f64,
    pub k: u32,
    /// Largest tolerated `|c_S - c_T|`.
    pub bound: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            mu: 4,
            generations: 2000,
            p_c: 0.2,
            t_cr: 10_000,
            t_lb: 50.0,
            t_ub: 5000.0,
            t_init: 50.0,
            f: 2.0,
            k: 8,
            bound: 0,
            seed: 0,
        }
    }
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.into(),
        reason: reason.into(),
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.mu == 0 {
            return Err(bad("mu", "population size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.p_c) {
            return Err(bad("p_c", format!("{} is not a probability", self.p_c)));
        }
        if !(self.t_lb.is_finite() && self.t_lb >= 0.0) {
            return Err(bad("t_lb", format!("{} must be finite and non-negative", self.t_lb)));
        }
        if !(self.t_ub.is_finite() && self.t_ub >= self.t_lb) {
            return Err(bad("t_ub", format!("{} is below t_lb = {}", self.t_ub, self.t_lb)));
        }
        if !(self.t_lb..=self.t_ub).contains(&self.t_init) {
            return Err(bad("t_init", format!("{} lies outside [t_lb, t_ub]", self.t_init)));
        }
        if !(self.f.is_finite() && self.f > 1.0) {
            return Err(bad("f", format!("{} must exceed 1", self.f)));
        }
        if self.k == 0 {
            return Err(bad("k", "must be at least 1"));
        }
        Ok(())
    }
}

/// Self-adapting mutation walk length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptState {
    pub t_max: f64,
}

impl AdaptState {
    pub fn new(cfg: &GaConfig) -> Self {
        Self { t_max: cfg.t_init }
    }

    /// Number of walk steps a mutation performs.
    pub fn steps(&self) -> usize {
        self.t_max.floor() as usize
    }
}

/// Multiplies by `F` on success and by `F^(-1/k)` on failure, clamped to
/// `[t_LB, t_UB]`.
pub fn adapt_t_max(state: AdaptState, accepted: bool, cfg: &GaConfig) -> AdaptState {
    let t_max = if accepted {
        (cfg.f * state.t_max).min(cfg.t_ub)
    } else {
        (cfg.f.powf(-1.0 / cfg.k as f64) * state.t_max).max(cfg.t_lb)
    };
    AdaptState { t_max }
}

/// Pixels visited by a toroidal 4-neighbour walk of `steps` moves, start
/// included. Revisits appear more than once.
pub fn walk<R: Rng + ?Sized>(rows: usize, cols: usize, steps: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let start = rng.random_range(0..rows * cols);
    let (mut i, mut j) = (start / cols, start % cols);
    let mut path = Vec::with_capacity(steps + 1);
    path.push((i, j));
    for _ in 0..steps {
        match rng.random_range(0..4u8) {
            0 => i = (i + rows - 1) % rows,
            1 => i = (i + 1) % rows,
            2 => j = (j + cols - 1) % cols,
            _ => j = (j + 1) % cols,
        }
        path.push((i, j));
    }
    path
}

/// Returns `mu` individuals, each a pure copy of the source or the target
/// with probability one half.
pub fn init_population<R: Rng + ?Sized>(ctx: &FitnessContext, cfg: &GaConfig, rng: &mut R) -> Result<Vec<Individual>> {
    let pure_s = Individual::uniform(ctx, Source::S)?;
    let pure_t = Individual::uniform(ctx, Source::T)?;
    Ok((0..cfg.mu)
        .map(|_| if rng.random::<bool>() { pure_s.clone() } else { pure_t.clone() })
        .collect())
}

/// Copies `parent` and paints the pixels of a `steps`-move walk with `z`.
pub fn random_walk_mutation<R: Rng + ?Sized>(
    ctx: &FitnessContext,
    parent: &Individual,
    z: Source,
    steps: usize,
    rng: &mut R,
) -> Result<Individual> {
    let (m, n) = ctx.dims();
    let mut child = parent.clone();
    let changed: Vec<_> = walk(m, n, steps, rng)
        .into_iter()
        .filter(|&(i, j)| child.set_flag(i, j, z))
        .collect();
    child.evaluate_incremental(ctx, &changed)?;
    Ok(child)
}

/// Copies `pi` and takes `pj`'s flags along a `t_cr`-move walk.
pub fn random_walk_crossover<R: Rng + ?Sized>(
    ctx: &FitnessContext,
    pi: &Individual,
    pj: &Individual,
    t_cr: usize,
    rng: &mut R,
) -> Result<Individual> {
    let (m, n) = ctx.dims();
    let mut child = pi.clone();
    let changed: Vec<_> = walk(m, n, t_cr, rng)
        .into_iter()
        .filter(|&(i, j)| child.set_flag(i, j, pj.mask().get(i, j)))
        .collect();
    child.evaluate_incremental(ctx, &changed)?;
    Ok(child)
}

/// Rectangle `(row0, col0, rows, cols)` for rectangular crossover, already
/// clipped to the image.
pub fn random_rectangle<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> (usize, usize, usize, usize) {
    let corner = rng.random_range(0..rows * cols);
    let (r0, c0) = (corner / cols, corner % cols);
    let h = rng.random_range(1..=(rows / 10).max(1));
    let w = rng.random_range(1..=(cols / 10).max(1));
    (r0, c0, h.min(rows - r0), w.min(cols - c0))
}

/// Copies `pi` and takes `pj`'s flags inside a random rectangle.
pub fn rectangular_crossover<R: Rng + ?Sized>(
    ctx: &FitnessContext,
    pi: &Individual,
    pj: &Individual,
    rng: &mut R,
) -> Result<Individual> {
    let (m, n) = ctx.dims();
    let (r0, c0, h, w) = random_rectangle(m, n, rng);
    let mut child = pi.clone();
    let mut changed = Vec::new();
    for i in r0..r0 + h {
        for j in c0..c0 + w {
            if child.set_flag(i, j, pj.mask().get(i, j)) {
                changed.push((i, j));
            }
        }
    }
    child.evaluate_incremental(ctx, &changed)?;
    Ok(child)
}

/// The offspring survives when it is no worse than the parent; ties go to
/// the offspring.
pub fn selection(parent: Individual, offspring: Individual, bound: usize) -> (Individual, bool) {
    if lex_compare(&offspring, &parent, bound).is_le() {
        (offspring, true)
    } else {
        (parent, false)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operator {
    WalkCrossover,
    RectCrossover,
    MutateS,
    MutateT,
}

impl Operator {
    pub fn tag(self) -> &'static str {
        match self {
            Operator::WalkCrossover => "walkX",
            Operator::RectCrossover => "rectX",
            Operator::MutateS => "mutS",
            Operator::MutateT => "mutT",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One GA iteration. `fitness` and `constraint` describe the slot's
/// survivor; `t_max` is the value after adaptation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub generation: usize,
    pub slot: usize,
    pub operator: Operator,
    pub accepted: bool,
    pub fitness: f64,
    pub constraint: usize,
    pub t_max: f64,
}

impl TraceRow {
    pub const CSV_HEADER: &'static str = "generation,slot,operator,accepted,fitness,constraint,t_max";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{:?},{},{:?}",
            self.generation,
            self.slot,
            self.operator,
            u8::from(self.accepted),
            self.fitness,
            self.constraint,
            self.t_max
        )
    }
}

/// Runs `cfg.generations` iterations and returns the final population.
/// `sink` sees every trace row; an error from it aborts the run.
pub fn run_ga(
    ctx: &FitnessContext,
    cfg: &GaConfig,
    mut sink: impl FnMut(&TraceRow) -> Result<()>,
) -> Result<Vec<Individual>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pop = init_population(ctx, cfg, &mut rng)?;
    let mut adapt = AdaptState::new(cfg);

    for generation in 0..cfg.generations {
        if generation > 0 && generation % REBUILD_INTERVAL == 0 {
            for ind in &mut pop {
                ind.rebuild_stats(ctx)?;
            }
        }
        let crossover = rng.random::<f64>() < cfg.p_c && cfg.mu > 1;
        let slot = rng.random_range(0..cfg.mu);
        let (operator, offspring) = if crossover {
            let mut partner = rng.random_range(0..cfg.mu - 1);
            if partner >= slot {
                partner += 1;
            }
            let (pi, pj) = (&pop[slot], &pop[partner]);
            if rng.random::<bool>() {
                (Operator::WalkCrossover, random_walk_crossover(ctx, pi, pj, cfg.t_cr, &mut rng)?)
            } else {
                (Operator::RectCrossover, rectangular_crossover(ctx, pi, pj, &mut rng)?)
            }
        } else {
            let (op, z) = if rng.random::<bool>() {
                (Operator::MutateS, Source::S)
            } else {
                (Operator::MutateT, Source::T)
            };
            (op, random_walk_mutation(ctx, &pop[slot], z, adapt.steps(), &mut rng)?)
        };

        // take the parent out and put the survivor back in the same slot
        let parent = pop.swap_remove(slot);
        let (survivor, accepted) = selection(parent, offspring, cfg.bound);
        pop.push(survivor);
        let last = pop.len() - 1;
        pop.swap(slot, last);
        if !crossover {
            adapt = adapt_t_max(adapt, accepted, cfg);
        }
        sink(&TraceRow {
            generation,
            slot,
            operator,
            accepted,
            fitness: pop[slot].fitness(),
            constraint: pop[slot].constraint_value(),
            t_max: adapt.t_max,
        })?;
    }
    Ok(pop)
}
