//! Michigan-style evolution: every individual is one rule and the population
//! as a whole induces the rule base.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::inference::infer_pitch;
use super::rule::{default_scales, FuzzyRule, RuleBase};
use super::scale::{LinguisticScale, Term};
use crate::error::{invalid, Result};
use crate::refgen::ReferenceDataset;
use crate::simloop::{run, Controller, SimConfig};
use crate::turbine::{aerodynamic_power, TurbineParams};
use crate::wind::WindSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessMode {
    /// Power balance from the steady power formula at rated rotor speed.
    #[default]
    Static,
    /// Settled power of short steady-wind closed-loop runs.
    ClosedLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub iterations: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub replacement_count: usize,
    pub fitness_w_coverage: f64,
    pub fitness_w_regulation: f64,
    pub seed: u64,
    /// Size of the extracted rule base.
    pub max_rules: usize,
    pub fitness_mode: FitnessMode,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 60,
            iterations: 100,
            p_crossover: 0.7,
            p_mutation: 0.6,
            replacement_count: 6,
            fitness_w_coverage: 0.5,
            fitness_w_regulation: 0.5,
            seed: 1,
            max_rules: 5,
            fitness_mode: FitnessMode::Static,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(invalid("population_size", "must be at least 2"));
        }
        for (name, p) in [
            ("p_crossover", self.p_crossover),
            ("p_mutation", self.p_mutation),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(name, "must lie in [0, 1]"));
            }
        }
        if self.replacement_count == 0 || self.replacement_count >= self.population_size {
            return Err(invalid(
                "replacement_count",
                "must lie in 1..population_size",
            ));
        }
        let (w1, w2) = (self.fitness_w_coverage, self.fitness_w_regulation);
        if !(w1 >= 0.0 && w2 >= 0.0 && (w1 + w2 - 1.0).abs() < 1e-9) {
            return Err(invalid(
                "fitness_w_coverage",
                "weights must be non-negative and sum to 1",
            ));
        }
        if !(1..=super::rule::MAX_RULES).contains(&self.max_rules) {
            return Err(invalid("max_rules", "must lie in 1..=7"));
        }
        Ok(())
    }
}

/// Wind speeds used by closed-loop fitness, and the run length per speed.
const CLOSED_LOOP_SPEEDS: [f64; 4] = [13.0, 16.0, 19.0, 22.0];
const CLOSED_LOOP_DURATION: f64 = 40.0;
const CLOSED_LOOP_DT: f64 = 0.1;

/// Everything fitness needs, precomputed once per dataset.
#[derive(Debug, Clone)]
pub struct FitnessContext<'a> {
    params: &'a TurbineParams,
    cfg: &'a GaConfig,
    wind_scale: LinguisticScale,
    pitch_scale: LinguisticScale,
    rows: Vec<(f64, Term)>,
    above_rated: Vec<f64>,
    omega_rated: f64,
}

impl<'a> FitnessContext<'a> {
    pub fn new(
        dataset: &ReferenceDataset,
        params: &'a TurbineParams,
        cfg: &'a GaConfig,
    ) -> Result<Self> {
        if dataset.is_empty() {
            return Err(crate::error::Error::EmptyDataset);
        }
        let (wind_scale, pitch_scale) = default_scales(params)?;
        // Below rated wind the pitch is pinned at its minimum by the plant, so
        // only rows at or above rated carry information about the rules.
        let rows: Vec<_> = dataset
            .samples()
            .iter()
            .filter(|s| s.v >= params.v_rated)
            .map(|s| (s.v, pitch_scale.classify(s.beta_star)))
            .collect();
        if rows.is_empty() {
            return Err(invalid("dataset", "no rows at or above rated wind speed"));
        }
        let above_rated = dataset
            .samples()
            .iter()
            .filter(|s| s.v > params.v_rated)
            .map(|s| s.v)
            .collect();
        Ok(Self {
            params,
            cfg,
            wind_scale,
            pitch_scale,
            rows,
            above_rated,
            omega_rated: params.rated_point().omega_rated,
        })
    }

    pub fn wind_scale(&self) -> &LinguisticScale {
        &self.wind_scale
    }

    pub fn pitch_scale(&self) -> &LinguisticScale {
        &self.pitch_scale
    }

    pub fn base(&self, rules: Vec<FuzzyRule>) -> Result<RuleBase> {
        RuleBase::new(rules, self.wind_scale.clone(), self.pitch_scale.clone())
    }

    /// Fraction of the rows on which `rule` fires whose pitch class is the
    /// rule's consequent. Zero for a rule that fires nowhere.
    pub fn coverage(&self, rule: FuzzyRule) -> f64 {
        let (fired, hits) = self
            .rows
            .iter()
            .filter(|(v, _)| self.wind_scale.membership(*v, rule.antecedent) > 0.0)
            .fold((0usize, 0usize), |(f, h), (_, class)| {
                (f + 1, h + usize::from(*class == rule.consequent))
            });
        if fired == 0 {
            0.0
        } else {
            hits as f64 / fired as f64
        }
    }

    /// Fraction of the rows on which some firing rule names the row's pitch class.
    pub fn base_coverage(&self, rb: &RuleBase) -> f64 {
        let hits = self
            .rows
            .iter()
            .filter(|(v, class)| {
                rb.rules().iter().any(|r| {
                    r.consequent == *class && self.wind_scale.membership(*v, r.antecedent) > 0.0
                })
            })
            .count();
        hits as f64 / self.rows.len() as f64
    }

    /// `1 - mean relative power error` over the above-rated rows, each error
    /// capped at 1. One when there are no above-rated rows.
    pub fn regulation(&self, rb: &RuleBase) -> Result<f64> {
        match self.cfg.fitness_mode {
            FitnessMode::Static => self.static_regulation(rb),
            FitnessMode::ClosedLoop => self.closed_loop_regulation(rb),
        }
    }

    fn static_regulation(&self, rb: &RuleBase) -> Result<f64> {
        if self.above_rated.is_empty() {
            return Ok(1.0);
        }
        let p_rated = self.params.p_rated;
        let mut total = 0.0;
        for &v in &self.above_rated {
            let beta = infer_pitch(rb, v);
            let p = aerodynamic_power(v, self.omega_rated, beta, self.params)?.power;
            total += ((p - p_rated).abs() / p_rated).min(1.0);
        }
        Ok(1.0 - total / self.above_rated.len() as f64)
    }

    fn closed_loop_regulation(&self, rb: &RuleBase) -> Result<f64> {
        let sim = SimConfig {
            dt: CLOSED_LOOP_DT,
            duration: CLOSED_LOOP_DURATION,
            settle_time: 0.5 * CLOSED_LOOP_DURATION,
            ..SimConfig::default()
        };
        let ctrl = Controller::Gfs(rb.clone());
        let mut total = 0.0;
        for v in CLOSED_LOOP_SPEEDS {
            let wind = WindSeries::constant(v, 1.0, CLOSED_LOOP_DURATION)?;
            let trace = run(&wind, self.params, &ctrl, &sim)?;
            let m = crate::simloop::compute_metrics(&trace, sim.settle_time)?;
            total += (m.mean_p_pu - 1.0).abs().min(1.0);
        }
        Ok(1.0 - total / CLOSED_LOOP_SPEEDS.len() as f64)
    }

    /// Fitness of `rule` scored inside `context` (the rule replaces the
    /// context's rule on the same antecedent).
    pub fn rule_fitness(&self, rule: FuzzyRule, context: &[FuzzyRule]) -> Result<f64> {
        let mut rules: Vec<_> = context
            .iter()
            .copied()
            .filter(|r| r.antecedent != rule.antecedent)
            .collect();
        rules.push(rule);
        let rb = self.base(rules)?;
        Ok(self.cfg.fitness_w_coverage * self.coverage(rule)
            + self.cfg.fitness_w_regulation * self.regulation(&rb)?)
    }

    /// Fitness of a whole rule base.
    pub fn base_fitness(&self, rb: &RuleBase) -> Result<f64> {
        Ok(self.cfg.fitness_w_coverage * self.base_coverage(rb)
            + self.cfg.fitness_w_regulation * self.regulation(rb)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub rule: FuzzyRule,
    pub fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub rule_base: RuleBase,
    pub history: Vec<GenerationStats>,
    pub population: Vec<Individual>,
}

/// Fittest rule per antecedent; ties keep the earlier individual.
fn best_per_antecedent(pop: &[Individual]) -> BTreeMap<Term, Individual> {
    let mut best: BTreeMap<Term, Individual> = BTreeMap::new();
    for ind in pop {
        match best.get(&ind.rule.antecedent) {
            Some(cur) if cur.fitness >= ind.fitness => {}
            _ => {
                best.insert(ind.rule.antecedent, *ind);
            }
        }
    }
    best
}

fn context_of(pop: &[Individual]) -> Vec<FuzzyRule> {
    best_per_antecedent(pop).values().map(|i| i.rule).collect()
}

fn random_term(rng: &mut ChaCha8Rng) -> Term {
    Term::ALL[rng.random_range(0..7)]
}

/// Uniformly random code different from `t`.
fn mutate_term(t: Term, rng: &mut ChaCha8Rng) -> Term {
    let k = rng.random_range(0..6);
    Term::ALL[if k >= t.index() { k + 1 } else { k }]
}

fn tournament(pop: &[Individual], rng: &mut ChaCha8Rng) -> FuzzyRule {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    if pop[b].fitness > pop[a].fitness {
        pop[b].rule
    } else {
        pop[a].rule
    }
}

/// Crossover then mutation of one parent pair.
pub fn breed(p1: FuzzyRule, p2: FuzzyRule, cfg: &GaConfig, rng: &mut ChaCha8Rng) -> [FuzzyRule; 2] {
    let (mut a, mut b) = (p1, p2);
    if rng.random_bool(cfg.p_crossover) {
        if rng.random_bool(0.5) {
            std::mem::swap(&mut a.antecedent, &mut b.antecedent);
        }
        if rng.random_bool(0.5) {
            std::mem::swap(&mut a.consequent, &mut b.consequent);
        }
    }
    for child in [&mut a, &mut b] {
        if rng.random_bool(cfg.p_mutation) {
            child.antecedent = mutate_term(child.antecedent, rng);
        }
        if rng.random_bool(cfg.p_mutation) {
            child.consequent = mutate_term(child.consequent, rng);
        }
    }
    [a, b]
}

fn stats(generation: usize, pop: &[Individual]) -> GenerationStats {
    let best = pop
        .iter()
        .map(|i| i.fitness)
        .fold(f64::NEG_INFINITY, f64::max);
    let mean = pop.iter().map(|i| i.fitness).sum::<f64>() / pop.len() as f64;
    GenerationStats {
        generation,
        best,
        mean,
    }
}

/// Random initial rules scored inside the base made of their
/// best-coverage rule per antecedent.
pub fn initial_population(ctx: &FitnessContext<'_>, cfg: &GaConfig) -> Result<Vec<Individual>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rules: Vec<FuzzyRule> = (0..cfg.population_size)
        .map(|_| FuzzyRule::new(random_term(&mut rng), random_term(&mut rng)))
        .collect();
    let scored: Vec<Individual> = rules
        .iter()
        .map(|&rule| Individual {
            rule,
            fitness: ctx.coverage(rule),
        })
        .collect();
    let context = context_of(&scored);
    rules
        .into_iter()
        .map(|rule| {
            Ok(Individual {
                rule,
                fitness: ctx.rule_fitness(rule, &context)?,
            })
        })
        .collect()
}

/// One generation: `replacement_count` parent pairs by binary tournament,
/// then the best children replace the worst individuals, at most
/// `replacement_count` of them. A child identical to a rule already in the
/// population is discarded, which keeps every antecedent's niche alive.
/// Fitness is cached, so the best individual can only improve.
pub fn next_generation(
    pop: &mut [Individual],
    ctx: &FitnessContext<'_>,
    cfg: &GaConfig,
    generation: usize,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(generation as u64);
    let context = context_of(pop);
    let mut children = Vec::with_capacity(2 * cfg.replacement_count);
    for _ in 0..cfg.replacement_count {
        let p1 = tournament(pop, &mut rng);
        let p2 = tournament(pop, &mut rng);
        for rule in breed(p1, p2, cfg, &mut rng) {
            children.push(Individual {
                rule,
                fitness: ctx.rule_fitness(rule, &context)?,
            });
        }
    }
    children.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
    let mut accepted: Vec<Individual> = Vec::with_capacity(cfg.replacement_count);
    for child in children {
        if accepted.len() == cfg.replacement_count {
            break;
        }
        if !pop.iter().chain(&accepted).any(|i| i.rule == child.rule) {
            accepted.push(child);
        }
    }
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| pop[a].fitness.total_cmp(&pop[b].fitness));
    for (slot, child) in order.into_iter().zip(accepted) {
        pop[slot] = child;
    }
    Ok(())
}

/// The extracted rule base: fittest rule per antecedent, pruned to the
/// `max_rules` fittest.
pub fn extract_rule_base(
    pop: &[Individual],
    ctx: &FitnessContext<'_>,
    max_rules: usize,
) -> Result<RuleBase> {
    let mut best: Vec<Individual> = best_per_antecedent(pop).into_values().collect();
    best.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
    best.truncate(max_rules);
    ctx.base(best.into_iter().map(|i| i.rule).collect())
}

pub fn evolve(
    cfg: &GaConfig,
    dataset: &ReferenceDataset,
    params: &TurbineParams,
) -> Result<Evolution> {
    cfg.validate()?;
    let ctx = FitnessContext::new(dataset, params, cfg)?;
    let mut pop = initial_population(&ctx, cfg)?;
    let mut history = vec![stats(0, &pop)];
    for generation in 1..=cfg.iterations {
        next_generation(&mut pop, &ctx, cfg, generation)?;
        history.push(stats(generation, &pop));
    }
    let rule_base = extract_rule_base(&pop, &ctx, cfg.max_rules)?;
    Ok(Evolution {
        rule_base,
        history,
        population: pop,
    })
}

/// CSV with header `generation,best,mean`.
pub fn write_history_csv<W: Write>(history: &[GenerationStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in history {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refgen::{build_training_set, ReferenceSample};

    fn dataset() -> ReferenceDataset {
        build_training_set(&TurbineParams::default(), 4.0, 25.0, 0.5).unwrap()
    }

    #[test]
    fn default_config_is_valid() {
        GaConfig::default().validate().unwrap();
        let bad = GaConfig {
            fitness_w_coverage: 0.7,
            ..GaConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rule_that_never_fires_has_no_coverage() {
        let p = TurbineParams::default();
        let cfg = GaConfig::default();
        let ds = ReferenceDataset::from_samples(vec![ReferenceSample {
            v: 20.0,
            p_pu: 1.0,
            omega_pu: 1.0,
            beta_star: 22.0,
            saturated: false,
        }])
        .unwrap();
        let ctx = FitnessContext::new(&ds, &p, &cfg).unwrap();
        assert_eq!(
            ctx.coverage(FuzzyRule::new(Term::VerySmall, Term::VerySmall)),
            0.0
        );
    }

    fn row(v: f64, beta_star: f64) -> ReferenceSample {
        ReferenceSample {
            v,
            p_pu: 1.0,
            omega_pu: 1.0,
            beta_star,
            saturated: false,
        }
    }

    #[test]
    fn coverage_counts_matches_among_fired_rows() {
        let p = TurbineParams::default();
        let cfg = GaConfig::default();
        // L fires on 18..25 m/s; three of its four rows sit in the L pitch class.
        // The 13 m/s row never fires L and must not dilute the score.
        let ds = ReferenceDataset::from_samples(vec![
            row(13.0, 4.0),
            row(19.0, 24.6),
            row(20.0, 24.6),
            row(21.0, 24.6),
            row(24.0, 29.0),
        ])
        .unwrap();
        let ctx = FitnessContext::new(&ds, &p, &cfg).unwrap();
        assert!((ctx.coverage(FuzzyRule::new(Term::Large, Term::Large)) - 0.75).abs() < 1e-12);
        assert!((ctx.coverage(FuzzyRule::new(Term::Large, Term::VeryLarge)) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn below_rated_rows_are_ignored() {
        let p = TurbineParams::default();
        let cfg = GaConfig::default();
        let below = ReferenceDataset::from_samples(vec![row(6.0, -2.0), row(9.0, -2.0)]).unwrap();
        assert!(FitnessContext::new(&below, &p, &cfg).is_err());
        let mixed =
            ReferenceDataset::from_samples(vec![row(6.0, -2.0), row(9.0, -2.0), row(20.0, 24.6)])
                .unwrap();
        let ctx = FitnessContext::new(&mixed, &p, &cfg).unwrap();
        assert_eq!(
            ctx.coverage(FuzzyRule::new(Term::Small, Term::VerySmall)),
            0.0
        );
    }

    #[test]
    fn children_never_duplicate_existing_rules() {
        let p = TurbineParams::default();
        let ds = dataset();
        let cfg = GaConfig::default();
        let ctx = FitnessContext::new(&ds, &p, &cfg).unwrap();
        let mut pop = initial_population(&ctx, &cfg).unwrap();
        for g in 1..=50 {
            let before: Vec<FuzzyRule> = pop.iter().map(|i| i.rule).collect();
            next_generation(&mut pop, &ctx, &cfg, g).unwrap();
            let fresh: Vec<FuzzyRule> = pop
                .iter()
                .map(|i| i.rule)
                .filter(|r| !before.contains(r))
                .collect();
            let mut dedup = fresh.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), fresh.len(), "generation {g}");
        }
    }

    #[test]
    fn default_run_gives_five_monotone_rules() {
        let p = TurbineParams::default();
        let evo = evolve(&GaConfig::default(), &dataset(), &p).unwrap();
        assert_eq!(evo.rule_base.len(), 5);
        assert!(evo.rule_base.is_monotone(), "{}", evo.rule_base.to_text());
    }

    #[test]
    fn perfect_rule_scores_one() {
        // One row at the medium-large wind peak whose pitch is the medium-large
        // pitch peak, with rated power set to exactly what that pitch yields.
        let base = TurbineParams::default();
        let (wind, pitch) = default_scales(&base).unwrap();
        let rule = FuzzyRule::new(Term::MediumLarge, Term::MediumLarge);
        let v = wind.peak(Term::MediumLarge);
        let rb = RuleBase::new(vec![rule], wind, pitch.clone()).unwrap();
        let beta = infer_pitch(&rb, v);
        let omega_rated = base.rated_point().omega_rated;
        let params = TurbineParams {
            p_rated: aerodynamic_power(v, omega_rated, beta, &base)
                .unwrap()
                .power,
            ..base
        };
        assert_eq!(params.rated_point().omega_rated, omega_rated);
        let ds = ReferenceDataset::from_samples(vec![
            ReferenceSample {
                v,
                p_pu: 1.0,
                omega_pu: 1.0,
                beta_star: pitch.peak(Term::MediumLarge),
                saturated: false,
            };
            3
        ])
        .unwrap();
        let cfg = GaConfig::default();
        let ctx = FitnessContext::new(&ds, &params, &cfg).unwrap();
        let f = ctx.rule_fitness(rule, &[]).unwrap();
        assert!((f - 1.0).abs() < 1e-12, "{f}");
    }

    #[test]
    fn reference_rule_beats_its_mutant() {
        let p = TurbineParams::default();
        let ds = dataset();
        let cfg = GaConfig::default();
        let ctx = FitnessContext::new(&ds, &p, &cfg).unwrap();
        let context = RuleBase::reference(&p).unwrap().rules().to_vec();
        let good = ctx
            .rule_fitness(FuzzyRule::new(Term::Large, Term::Large), &context)
            .unwrap();
        let bad = ctx
            .rule_fitness(FuzzyRule::new(Term::Large, Term::VerySmall), &context)
            .unwrap();
        assert!(good > bad, "{good} vs {bad}");
    }

    #[test]
    fn frozen_population_stays_put() {
        let p = TurbineParams::default();
        let ds = dataset();
        let cfg = GaConfig {
            p_crossover: 0.0,
            p_mutation: 0.0,
            population_size: 20,
            replacement_count: 2,
            ..GaConfig::default()
        };
        let ctx = FitnessContext::new(&ds, &p, &cfg).unwrap();
        let rule = FuzzyRule::new(Term::Medium, Term::Small);
        let f = ctx.rule_fitness(rule, &[rule]).unwrap();
        let mut pop = vec![Individual { rule, fitness: f }; 20];
        let before = pop.clone();
        for g in 1..=10 {
            next_generation(&mut pop, &ctx, &cfg, g).unwrap();
        }
        assert_eq!(pop, before);
    }

    #[test]
    fn mutation_always_changes_the_code() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t in Term::ALL {
            for _ in 0..50 {
                assert_ne!(mutate_term(t, &mut rng), t);
            }
        }
    }

    #[test]
    fn best_fitness_never_decreases_and_runs_repeat() {
        let p = TurbineParams::default();
        let ds = dataset();
        let cfg = GaConfig {
            iterations: 30,
            seed: 3,
            ..GaConfig::default()
        };
        let a = evolve(&cfg, &ds, &p).unwrap();
        for w in a.history.windows(2) {
            assert!(w[1].best >= w[0].best);
        }
        assert_eq!(a.history.len(), 31);
        assert!(a.rule_base.len() <= 5);
        let b = evolve(&cfg, &ds, &p).unwrap();
        assert_eq!(a.rule_base, b.rule_base);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn zero_iterations_uses_initial_population() {
        let p = TurbineParams::default();
        let cfg = GaConfig {
            iterations: 0,
            ..GaConfig::default()
        };
        let evo = evolve(&cfg, &dataset(), &p).unwrap();
        assert_eq!(evo.history.len(), 1);
        assert!(!evo.rule_base.is_empty());
    }

    #[test]
    fn history_csv_header() {
        let mut buf = Vec::new();
        write_history_csv(
            &[GenerationStats {
                generation: 0,
                best: 0.5,
                mean: 0.25,
            }],
            &mut buf,
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "generation,best,mean\n0,0.5,0.25\n"
        );
    }
}
