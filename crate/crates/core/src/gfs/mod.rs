//! Genetic fuzzy pitch controller.
//!
//! Wind speed and pitch each carry seven triangular linguistic values coded
//! 1..7. A rule `IF wind IS a THEN pitch IS c` is the two-digit string `"ac"`.
//! Rules are evolved one per individual and combined by Mamdani inference.

mod ga;
mod inference;
mod rule;
mod scale;

pub use ga::{
    breed, evolve, extract_rule_base, initial_population, next_generation, write_history_csv,
    Evolution, FitnessContext, FitnessMode, GaConfig, GenerationStats, Individual,
};
pub use inference::{fires, infer_pitch, DEFUZZ_POINTS};
pub use rule::{default_scales, FuzzyRule, RuleBase, MAX_RULES};
pub use scale::{LinguisticScale, Term, Triangle};
