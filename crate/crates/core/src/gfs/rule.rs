use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::scale::{LinguisticScale, Term};
use crate::error::{invalid, Error, Result};
use crate::turbine::TurbineParams;

/// `IF wind IS antecedent THEN pitch IS consequent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub antecedent: Term,
    pub consequent: Term,
}

impl FuzzyRule {
    pub fn new(antecedent: Term, consequent: Term) -> Self {
        Self {
            antecedent,
            consequent,
        }
    }

    /// Two-digit code, antecedent first: very small -> very large is `"17"`.
    pub fn encode(&self) -> String {
        format!("{}{}", self.antecedent.code(), self.consequent.code())
    }

    pub fn decode(text: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("rule code `{text}` must be two digits in 1..=7"));
        let bytes = text.as_bytes();
        if bytes.len() != 2 || !bytes.iter().all(u8::is_ascii_digit) {
            return Err(bad());
        }
        let ant = Term::from_code(bytes[0] - b'0').map_err(|_| bad())?;
        let con = Term::from_code(bytes[1] - b'0').map_err(|_| bad())?;
        Ok(Self::new(ant, con))
    }

    /// `IF wind IS LARGE THEN pitch IS LARGE`.
    pub fn describe(&self) -> String {
        format!(
            "IF wind IS {} THEN pitch IS {}",
            self.antecedent.name(),
            self.consequent.name()
        )
    }
}

impl fmt::Display for FuzzyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

impl FromStr for FuzzyRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::decode(s)
    }
}

pub const MAX_RULES: usize = 7;

/// Rules with pairwise distinct antecedents, kept sorted by antecedent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleBase {
    rules: Vec<FuzzyRule>,
    wind_scale: LinguisticScale,
    pitch_scale: LinguisticScale,
}

/// Wind scale over cut-in..cut-out and pitch scale over the actuator range.
pub fn default_scales(params: &TurbineParams) -> Result<(LinguisticScale, LinguisticScale)> {
    Ok((
        LinguisticScale::uniform(params.v_cutin, params.v_cutout)?,
        LinguisticScale::uniform(params.beta_min, params.beta_max)?,
    ))
}

impl RuleBase {
    pub fn new(
        mut rules: Vec<FuzzyRule>,
        wind_scale: LinguisticScale,
        pitch_scale: LinguisticScale,
    ) -> Result<Self> {
        if rules.is_empty() || rules.len() > MAX_RULES {
            return Err(invalid(
                "rules",
                format!("need 1..={MAX_RULES} rules, got {}", rules.len()),
            ));
        }
        rules.sort();
        if rules.windows(2).any(|w| w[0].antecedent == w[1].antecedent) {
            return Err(invalid("rules", "two rules share an antecedent"));
        }
        Ok(Self {
            rules,
            wind_scale,
            pitch_scale,
        })
    }

    /// The five-rule base MS->VS, M->S, ML->M, L->L, VL->VL.
    pub fn reference(params: &TurbineParams) -> Result<Self> {
        use Term::*;
        let (wind, pitch) = default_scales(params)?;
        let rules = [
            (MediumSmall, VerySmall),
            (Medium, Small),
            (MediumLarge, Medium),
            (Large, Large),
            (VeryLarge, VeryLarge),
        ]
        .map(|(a, c)| FuzzyRule::new(a, c));
        Self::new(rules.to_vec(), wind, pitch)
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn wind_scale(&self) -> &LinguisticScale {
        &self.wind_scale
    }

    pub fn pitch_scale(&self) -> &LinguisticScale {
        &self.pitch_scale
    }

    pub fn consequent_of(&self, antecedent: Term) -> Option<Term> {
        self.rules
            .iter()
            .find(|r| r.antecedent == antecedent)
            .map(|r| r.consequent)
    }

    /// Copy with `rule` replacing any rule on the same antecedent. A base
    /// already at the rule limit keeps its size only if the antecedent exists.
    pub fn with_rule(&self, rule: FuzzyRule) -> Result<Self> {
        let mut rules: Vec<_> = self
            .rules
            .iter()
            .copied()
            .filter(|r| r.antecedent != rule.antecedent)
            .collect();
        rules.push(rule);
        Self::new(rules, self.wind_scale.clone(), self.pitch_scale.clone())
    }

    /// Consequent codes never decrease as the antecedent code increases.
    pub fn is_monotone(&self) -> bool {
        self.rules
            .windows(2)
            .all(|w| w[0].consequent <= w[1].consequent)
    }

    /// Plain-text form: one `wind` and one `pitch` line of seven peaks, then
    /// one two-digit rule code per line. `#` starts a comment.
    pub fn to_text(&self) -> String {
        let peaks = |s: &LinguisticScale| {
            s.peaks()
                .iter()
                .map(|p| format!("{p:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out =
            String::from("# wind/pitch: peaks of the seven membership triangles, VS..VL\n");
        out.push_str(&format!("wind {}\n", peaks(&self.wind_scale)));
        out.push_str(&format!("pitch {}\n", peaks(&self.pitch_scale)));
        for r in &self.rules {
            out.push_str(&format!("{}  # {}\n", r.encode(), r.describe()));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (mut wind, mut pitch, mut rules) = (None, None, Vec::new());
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let head = words.next().unwrap_or_default();
            let parse_scale = |words: std::str::SplitWhitespace<'_>| -> Result<LinguisticScale> {
                let vals = words
                    .map(|w| w.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
                let peaks: [f64; 7] = vals
                    .try_into()
                    .map_err(|_| Error::Parse(format!("line {}: need seven peaks", n + 1)))?;
                LinguisticScale::from_peaks(peaks)
            };
            match head {
                "wind" => wind = Some(parse_scale(words)?),
                "pitch" => pitch = Some(parse_scale(words)?),
                code => {
                    if words.next().is_some() {
                        return Err(Error::Parse(format!(
                            "line {}: trailing text after rule",
                            n + 1
                        )));
                    }
                    rules.push(
                        FuzzyRule::decode(code)
                            .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?,
                    );
                }
            }
        }
        let wind = wind.ok_or_else(|| Error::Parse("missing `wind` scale line".into()))?;
        let pitch = pitch.ok_or_else(|| Error::Parse("missing `pitch` scale line".into()))?;
        Self::new(rules, wind, pitch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_code() {
        let r = FuzzyRule::new(Term::VerySmall, Term::VeryLarge);
        assert_eq!(r.encode(), "17");
        assert_eq!(FuzzyRule::decode("17").unwrap(), r);
    }

    #[test]
    fn all_rules_round_trip() {
        for a in Term::ALL {
            for c in Term::ALL {
                let r = FuzzyRule::new(a, c);
                assert_eq!(FuzzyRule::decode(&r.encode()).unwrap(), r);
            }
        }
    }

    #[test]
    fn malformed_codes_are_rejected() {
        for bad in ["08", "80", "1", "123", "a7", "", " 17"] {
            assert!(
                matches!(FuzzyRule::decode(bad), Err(Error::Parse(_))),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn duplicate_antecedents_are_rejected() {
        let (w, p) = default_scales(&TurbineParams::default()).unwrap();
        let rules = vec![
            FuzzyRule::decode("43").unwrap(),
            FuzzyRule::decode("45").unwrap(),
        ];
        assert!(RuleBase::new(rules, w.clone(), p.clone()).is_err());
        assert!(RuleBase::new(vec![], w, p).is_err());
    }

    #[test]
    fn reference_base_shape() {
        let rb = RuleBase::reference(&TurbineParams::default()).unwrap();
        let codes: Vec<_> = rb.rules().iter().map(FuzzyRule::encode).collect();
        assert_eq!(codes, ["31", "42", "54", "66", "77"]);
        assert!(rb.is_monotone());
    }

    #[test]
    fn text_round_trip() {
        let rb = RuleBase::reference(&TurbineParams::default()).unwrap();
        let back = RuleBase::from_text(&rb.to_text()).unwrap();
        assert_eq!(back, rb);
        assert!(RuleBase::from_text("wind 1 2 3 4 5 6 7\n17\n").is_err());
        assert!(RuleBase::from_text("wind 1 2 3 4 5 6 7\npitch 1 2 3 4 5 6 7\n19\n").is_err());
    }

    #[test]
    fn with_rule_replaces_same_antecedent() {
        let rb = RuleBase::reference(&TurbineParams::default()).unwrap();
        let swapped = rb.with_rule(FuzzyRule::decode("61").unwrap()).unwrap();
        assert_eq!(swapped.len(), 5);
        assert_eq!(swapped.consequent_of(Term::Large), Some(Term::VerySmall));
        assert!(!swapped.is_monotone());
        assert_eq!(
            rb.with_rule(FuzzyRule::decode("11").unwrap())
                .unwrap()
                .len(),
            6
        );
    }
}
