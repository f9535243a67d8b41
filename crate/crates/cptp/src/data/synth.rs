use super::record::{RawCase, TERM_MAX, TERM_MIN};
use super::DataError;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

/// One synthetic charge type: a base term and the keywords that signal it.
#[derive(Debug, Clone)]
pub struct ChargeSpec {
    pub label: String,
    pub base_term: u32,
    pub keywords: Vec<String>,
}

/// Generator configuration for a synthetic corpus.
///
/// Each case samples k charges; each charge contributes one clause built from
/// its keywords plus sampled severity modifiers, and the gold term is the
/// base term scaled by the modifier factors (clamped to the legal range).
/// Clauses and distractor sentences are interleaved in random order, so the
/// information for different charges is spread through the fact text.
/// Distractors draw on shared courtroom vocabulary, keeping charge identity
/// the only reliable signal for which clause matters.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub charges: Vec<ChargeSpec>,
    /// (word, multiplicative factor on the base term)
    pub modifiers: Vec<(String, f64)>,
    pub distractors: Vec<String>,
    /// (charges per case, sampling weight)
    pub charges_per_case: Vec<(usize, f64)>,
    /// inclusive range of distractor sentences per case
    pub distractors_per_case: (usize, usize),
    /// inclusive range of modifiers per clause
    pub modifiers_per_clause: (usize, usize),
    pub seed: u64,
}

/// A generated case plus its rendered judgment sentence(s).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCase {
    pub raw: RawCase,
    pub judgment: String,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |msg: String| Err(DataError::BadSpec(msg));
        if self.charges.is_empty() {
            return bad("no charges".into());
        }
        let mut seen_keywords: HashSet<&str> = HashSet::new();
        for charge in &self.charges {
            if charge.label.is_empty()
                || !charge.label.chars().next().unwrap().is_ascii_lowercase()
                || !charge.label.chars().all(|c| c.is_ascii_lowercase() || c == '_' || c == '-')
            {
                return bad(format!("charge label '{}' must be lowercase ascii", charge.label));
            }
            if !(TERM_MIN..=TERM_MAX).contains(&charge.base_term) {
                return bad(format!("base term {} outside [{TERM_MIN}, {TERM_MAX}]", charge.base_term));
            }
            if charge.keywords.is_empty() {
                return bad(format!("charge '{}' has no keywords", charge.label));
            }
            for kw in &charge.keywords {
                if !seen_keywords.insert(kw) {
                    return bad(format!("keyword '{kw}' appears in two charges"));
                }
            }
        }
        for (word, factor) in &self.modifiers {
            if *factor <= 0.0 {
                return bad(format!("modifier '{word}' has non-positive factor {factor}"));
            }
        }
        if self.charges_per_case.is_empty()
            || self.charges_per_case.iter().any(|&(k, w)| k == 0 || k > self.charges.len() || w <= 0.0)
        {
            return bad("charges-per-case distribution must use k in [1, #charges] with positive weights".into());
        }
        if self.modifiers_per_clause.0 > self.modifiers_per_clause.1
            || self.distractors_per_case.0 > self.distractors_per_case.1
        {
            return bad("ranges must be (min <= max)".into());
        }
        if self.modifiers_per_clause.1 > 0 && self.modifiers.is_empty() && self.modifiers_per_clause.0 > 0 {
            return bad("modifiers requested but none defined".into());
        }
        if self.distractors_per_case.1 > 0 && self.distractors.is_empty() && self.distractors_per_case.0 > 0 {
            return bad("distractors requested but none defined".into());
        }
        Ok(())
    }

    /// A ten-charge inventory with well-spread base terms, shared severity
    /// modifiers, and courtroom distractor sentences.
    pub fn desk_default(seed: u64) -> Self {
        let charge = |label: &str, base: u32, kws: [&str; 3]| ChargeSpec {
            label: label.into(),
            base_term: base,
            keywords: kws.iter().map(|s| s.to_string()).collect(),
        };
        Self {
            charges: vec![
                charge("vandalism", 3, ["smashed", "window", "plaza"]),
                charge("forgery", 7, ["forged", "signature", "registry"]),
                charge("theft", 10, ["stole", "wallet", "market"]),
                charge("assault", 16, ["punched", "victim", "tavern"]),
                charge("bribery", 28, ["bribed", "official", "ministry"]),
                charge("smuggling", 45, ["smuggled", "cargo", "harbor"]),
                charge("fraud", 70, ["deceived", "investor", "exchange"]),
                charge("robbery", 100, ["robbed", "courier", "alley"]),
                charge("arson", 140, ["burned", "warehouse", "district"]),
                charge("kidnapping", 190, ["abducted", "merchant", "border"]),
            ],
            modifiers: vec![
                ("repeatedly".into(), 1.6),
                ("armed".into(), 2.2),
                ("brutally".into(), 1.9),
                ("attempted".into(), 0.55),
                ("minor".into(), 0.5),
                ("remorseful".into(), 0.7),
            ],
            distractors: vec![
                "the hearing continued in the morning.".into(),
                "witnesses signed the statement before the clerk.".into(),
                "the courtroom remained quiet during the session.".into(),
                "documents were filed by the registrar.".into(),
                "the panel reviewed the evidence carefully.".into(),
                "counsel requested a short recess.".into(),
                "the gallery was cleared before noon.".into(),
                "a translator assisted throughout the proceedings.".into(),
            ],
            charges_per_case: vec![(1, 0.30), (2, 0.45), (3, 0.25)],
            distractors_per_case: (1, 3),
            modifiers_per_clause: (0, 2),
            seed,
        }
    }
}

fn sample_weighted(rng: &mut ChaCha8Rng, weighted: &[(usize, f64)]) -> usize {
    let total: f64 = weighted.iter().map(|&(_, w)| w).sum();
    let mut draw = rng.gen::<f64>() * total;
    for &(value, weight) in weighted {
        draw -= weight;
        if draw <= 0.0 {
            return value;
        }
    }
    weighted.last().expect("non-empty weights").0
}

fn sample_range(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Generate `count` cases, fully determined by the spec's seed.
pub fn gen_synthetic(spec: &SynthSpec, count: usize) -> Result<Vec<SynthCase>, DataError> {
    assert!(count >= 1, "count must be at least 1");
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut cases = Vec::with_capacity(count);
    for i in 0..count {
        let k = sample_weighted(&mut rng, &spec.charges_per_case);
        let charge_picks = rand::seq::index::sample(&mut rng, spec.charges.len(), k).into_vec();

        let mut charges = Vec::with_capacity(k);
        let mut terms = Vec::with_capacity(k);
        let mut sentences = Vec::new();
        let mut judgment_parts = Vec::with_capacity(k);
        for &ci in &charge_picks {
            let charge = &spec.charges[ci];
            let n_mods = sample_range(&mut rng, spec.modifiers_per_clause).min(spec.modifiers.len());
            let mod_picks = if n_mods > 0 {
                rand::seq::index::sample(&mut rng, spec.modifiers.len(), n_mods).into_vec()
            } else {
                Vec::new()
            };
            let mut factor = 1.0;
            let mut mod_words = Vec::with_capacity(n_mods);
            for &mi in &mod_picks {
                let (word, f) = &spec.modifiers[mi];
                factor *= f;
                mod_words.push(word.clone());
            }
            let gold = ((charge.base_term as f64 * factor).round() as i64)
                .clamp(TERM_MIN as i64, TERM_MAX as i64) as u32;

            let mut clause = vec!["the".to_string(), "defendant".to_string()];
            clause.extend(mod_words);
            clause.push(charge.keywords[0].clone());
            clause.push("the".into());
            clause.push(charge.keywords[1].clone());
            clause.push("at".into());
            clause.push("the".into());
            clause.push(charge.keywords[2].clone());
            sentences.push(format!("{}.", clause.join(" ")));

            judgment_parts
                .push(format!("sentenced to {gold} months imprisonment for {}.", charge.label));
            charges.push(charge.label.clone());
            terms.push(gold);
        }

        let n_distract = sample_range(&mut rng, spec.distractors_per_case).min(spec.distractors.len());
        if n_distract > 0 {
            for di in rand::seq::index::sample(&mut rng, spec.distractors.len(), n_distract).into_vec() {
                sentences.push(spec.distractors[di].clone());
            }
        }
        sentences.shuffle(&mut rng);

        cases.push(SynthCase {
            raw: RawCase {
                id: format!("case-{i:06}"),
                fact: sentences.join(" "),
                charges,
                terms,
            },
            judgment: judgment_parts.join(" "),
        });
    }
    Ok(cases)
}
