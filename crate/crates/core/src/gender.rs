// SPDX-License-Identifier: Apache-2.0

//! Name tokenization and the strict-majority gender vote.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::refdata::GenderTable;

/// Per-token label from the gender table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenderClass {
    Male,
    MostlyMale,
    Unknown,
    MostlyFemale,
    Female,
    Andy,
}

impl GenderClass {
    pub const ALL: [GenderClass; 6] = [
        GenderClass::Male,
        GenderClass::MostlyMale,
        GenderClass::Unknown,
        GenderClass::MostlyFemale,
        GenderClass::Female,
        GenderClass::Andy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GenderClass::Male => "male",
            GenderClass::MostlyMale => "mostly_male",
            GenderClass::Unknown => "unknown",
            GenderClass::MostlyFemale => "mostly_female",
            GenderClass::Female => "female",
            GenderClass::Andy => "andy",
        }
    }

    /// The author gender this token votes for, if any. Mostly-classes are
    /// full votes.
    pub fn vote(self) -> Option<AuthorGender> {
        match self {
            GenderClass::Male | GenderClass::MostlyMale => Some(AuthorGender::Male),
            GenderClass::Female | GenderClass::MostlyFemale => Some(AuthorGender::Female),
            GenderClass::Unknown | GenderClass::Andy => None,
        }
    }

    /// Swaps male-side and female-side classes.
    pub fn mirrored(self) -> GenderClass {
        match self {
            GenderClass::Male => GenderClass::Female,
            GenderClass::MostlyMale => GenderClass::MostlyFemale,
            GenderClass::MostlyFemale => GenderClass::MostlyMale,
            GenderClass::Female => GenderClass::Male,
            other => other,
        }
    }
}

impl fmt::Display for GenderClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GenderClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GenderClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown gender class {s:?}"))
    }
}

/// Three-class author label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AuthorGender {
    Male,
    Female,
    Unknown,
}

impl AuthorGender {
    pub const ALL: [AuthorGender; 3] = [AuthorGender::Male, AuthorGender::Female, AuthorGender::Unknown];

    pub fn as_str(self) -> &'static str {
        match self {
            AuthorGender::Male => "Male",
            AuthorGender::Female => "Female",
            AuthorGender::Unknown => "Unknown",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn mirrored(self) -> AuthorGender {
        match self {
            AuthorGender::Male => AuthorGender::Female,
            AuthorGender::Female => AuthorGender::Male,
            AuthorGender::Unknown => AuthorGender::Unknown,
        }
    }
}

impl fmt::Display for AuthorGender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AuthorGender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AuthorGender::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown author gender {s:?}"))
    }
}

/// Which tokens form the majority denominator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub enum MajorityRule {
    /// Only male-side and female-side tokens.
    #[default]
    #[serde(rename = "gendered")]
    Gendered,
    /// Every token, including unknown and andy.
    #[serde(rename = "all")]
    AllTokens,
}

impl FromStr for MajorityRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gendered" => Ok(MajorityRule::Gendered),
            "all" => Ok(MajorityRule::AllTokens),
            other => Err(format!("unknown majority rule {other:?} (expected gendered or all)")),
        }
    }
}

impl fmt::Display for MajorityRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MajorityRule::Gendered => "gendered",
            MajorityRule::AllTokens => "all",
        })
    }
}

/// Ordered, non-empty name fragments.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct NameTokens(pub Vec<String>);

impl NameTokens {
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn is_hyphen(c: char) -> bool {
    matches!(c, '-' | '\u{2010}' | '\u{2011}')
}

/// Splits at blank runs, at hyphens and before an uppercase letter that
/// directly follows a lowercase one. Empty fragments are dropped.
pub fn tokenize_name(name: &str) -> NameTokens {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut prev: Option<char> = None;
    for c in name.chars() {
        if c.is_whitespace() || is_hyphen(c) {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            prev = None;
            continue;
        }
        if c.is_uppercase() && prev.is_some_and(char::is_lowercase) {
            tokens.push(std::mem::take(&mut current));
        }
        current.push(c);
        prev = Some(c);
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    NameTokens(tokens)
}

pub fn classify_token(token: &str, table: &GenderTable) -> GenderClass {
    table.lookup(token)
}

/// Strict majority over already classified tokens.
pub fn infer_from_classes<I>(classes: I, rule: MajorityRule) -> AuthorGender
where
    I: IntoIterator<Item = GenderClass>,
{
    let (mut m, mut f, mut n) = (0usize, 0usize, 0usize);
    for class in classes {
        n += 1;
        match class.vote() {
            Some(AuthorGender::Male) => m += 1,
            Some(AuthorGender::Female) => f += 1,
            _ => {}
        }
    }
    let denominator = match rule {
        MajorityRule::Gendered => m + f,
        MajorityRule::AllTokens => n,
    };
    if 2 * m > denominator {
        AuthorGender::Male
    } else if 2 * f > denominator {
        AuthorGender::Female
    } else {
        AuthorGender::Unknown
    }
}

pub fn infer_author_gender(tokens: &NameTokens, table: &GenderTable, rule: MajorityRule) -> AuthorGender {
    infer_from_classes(tokens.iter().map(|t| classify_token(t, table)), rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn fixture() -> GenderTable {
        GenderTable::from_pairs([
            ("Maria", GenderClass::Female),
            ("Andrea", GenderClass::Andy),
            ("Jean", GenderClass::Male),
            ("Marie", GenderClass::Female),
            ("Anna", GenderClass::Female),
            ("Paul", GenderClass::Male),
            ("Lena", GenderClass::MostlyFemale),
        ])
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(tokenize_name("mary-jane smith").0, toks(&["mary", "jane", "smith"]));
        assert_eq!(
            tokenize_name("JeanPierre Dupont").0,
            toks(&["Jean", "Pierre", "Dupont"])
        );
        assert_eq!(tokenize_name("Ada").0, toks(&["Ada"]));
        assert_eq!(tokenize_name("MARIA").0, toks(&["MARIA"]));
        assert_eq!(tokenize_name("McDonald").0, toks(&["Mc", "Donald"]));
        assert_eq!(tokenize_name("  a \t--b  ").0, toks(&["a", "b"]));
        assert_eq!(tokenize_name("Jean\u{2010}Luc").0, toks(&["Jean", "Luc"]));
        assert!(tokenize_name("").is_empty());
    }

    #[test]
    fn classify_examples() {
        let t = fixture();
        assert_eq!(classify_token("Maria", &t), GenderClass::Female);
        assert_eq!(classify_token("Smith", &t), GenderClass::Unknown);
        assert_eq!(classify_token("Andrea", &t), GenderClass::Andy);
    }

    #[test]
    fn majority_examples() {
        let t = fixture();
        let g = |v: &[&str]| infer_author_gender(&NameTokens(toks(v)), &t, MajorityRule::Gendered);
        assert_eq!(g(&["Maria", "Rossi"]), AuthorGender::Female);
        assert_eq!(g(&["Jean", "Marie"]), AuthorGender::Unknown);
        assert_eq!(g(&["Anna", "Paul", "Lena"]), AuthorGender::Female);
        assert_eq!(g(&["Andrea"]), AuthorGender::Unknown);
        let all = |v: &[&str]| infer_author_gender(&NameTokens(toks(v)), &t, MajorityRule::AllTokens);
        assert_eq!(all(&["Maria", "Rossi"]), AuthorGender::Unknown);
        assert_eq!(all(&["Maria", "Anna", "Rossi"]), AuthorGender::Female);
    }

    #[test]
    fn class_names_round_trip() {
        for c in GenderClass::ALL {
            assert_eq!(c.as_str().parse::<GenderClass>().unwrap(), c);
            assert_eq!(c.mirrored().mirrored(), c);
        }
        assert!("bloke".parse::<GenderClass>().is_err());
        assert_eq!("gendered".parse::<MajorityRule>().unwrap(), MajorityRule::Gendered);
        assert_eq!("all".parse::<MajorityRule>().unwrap(), MajorityRule::AllTokens);
    }

    fn class() -> impl Strategy<Value = GenderClass> {
        proptest::sample::select(GenderClass::ALL.to_vec())
    }

    fn rule() -> impl Strategy<Value = MajorityRule> {
        prop_oneof![Just(MajorityRule::Gendered), Just(MajorityRule::AllTokens)]
    }

    proptest! {
        #[test]
        fn permutation_invariant(mut v in proptest::collection::vec(class(), 1..8), seed in any::<u64>(), r in rule()) {
            let before = infer_from_classes(v.iter().copied(), r);
            let n = v.len();
            v.rotate_left((seed as usize) % n);
            if seed & 1 == 1 { v.reverse(); }
            prop_assert_eq!(infer_from_classes(v, r), before);
        }

        #[test]
        fn gendered_rule_ignores_padding(
            v in proptest::collection::vec(class(), 1..8),
            pad in proptest::collection::vec(prop_oneof![Just(GenderClass::Unknown), Just(GenderClass::Andy)], 0..5),
        ) {
            let before = infer_from_classes(v.iter().copied(), MajorityRule::Gendered);
            let padded = v.iter().copied().chain(pad);
            prop_assert_eq!(infer_from_classes(padded, MajorityRule::Gendered), before);
        }

        #[test]
        fn mirror_symmetry(v in proptest::collection::vec(class(), 1..8), r in rule()) {
            let before = infer_from_classes(v.iter().copied(), r);
            let after = infer_from_classes(v.iter().map(|c| c.mirrored()), r);
            prop_assert_eq!(after, before.mirrored());
        }

        #[test]
        fn tokens_keep_letters(name in "[A-Za-zÀ-ÿ' \\-]{0,40}") {
            let letters: String = name.chars().filter(|c| c.is_alphabetic()).collect();
            let joined: String = tokenize_name(&name).0.concat().chars().filter(|c| c.is_alphabetic()).collect();
            prop_assert_eq!(joined, letters);
            for t in tokenize_name(&name).0 {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(|c| c.is_whitespace() || is_hyphen(c)));
                let cs: Vec<char> = t.chars().collect();
                prop_assert!(!cs.windows(2).any(|w| w[0].is_lowercase() && w[1].is_uppercase()));
            }
        }
    }
}
