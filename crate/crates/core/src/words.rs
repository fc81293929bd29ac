//! Words over a finite alphabet of generators.
//!
//! A [`Word`] stores syllables `(generator, exponent)` read left to right as a
//! group product. Reduction is either free (cancel adjacent syllables on the
//! same generator) or abelian (collect every generator once, in index order).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupClass {
    Free,
    FreeAbelian,
}

/// Ordered generator names; a generator is referred to by its index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.contains(char::is_whitespace) || n.contains('^') {
                return Err(LabError::InvalidPresentation(format!(
                    "generator name `{n}` must be non-empty without whitespace or `^`"
                )));
            }
            if names[..i].contains(n) {
                return Err(LabError::InvalidPresentation(format!(
                    "duplicate generator `{n}`"
                )));
            }
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| LabError::UnknownGenerator(name.to_string()))
    }

    /// Parses space-separated letters such as `"b a^-1 c^3"`.
    pub fn parse(&self, text: &str) -> Result<Word> {
        let mut letters = Vec::new();
        for token in text.split_whitespace() {
            let (name, exp) = match token.split_once('^') {
                Some((name, exp)) => {
                    let exp: i64 = exp.parse().map_err(|_| LabError::MalformedWord {
                        word: text.to_string(),
                        reason: format!("bad exponent in `{token}`"),
                    })?;
                    (name, exp)
                }
                None => (token, 1),
            };
            if token == "1" {
                continue;
            }
            let g = self.index_of(name)?;
            if exp != 0 {
                letters.push((g, exp));
            }
        }
        Ok(Word::from_syllables(letters))
    }

    pub fn format(&self, w: &Word) -> String {
        if w.is_identity() {
            return "1".to_string();
        }
        w.syllables()
            .iter()
            .map(|&(g, e)| {
                if e == 1 {
                    self.names[g].clone()
                } else {
                    format!("{}^{}", self.names[g], e)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A formal product of generator powers. Not necessarily reduced; call
/// [`Word::reduced`] to normalize.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    syllables: Vec<(usize, i64)>,
}

impl Word {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn generator(g: usize) -> Self {
        Self::from_syllables(vec![(g, 1)])
    }

    pub fn power_of(g: usize, exponent: i64) -> Self {
        if exponent == 0 {
            Self::identity()
        } else {
            Self::from_syllables(vec![(g, exponent)])
        }
    }

    /// Keeps the syllables as given, dropping zero exponents.
    pub fn from_syllables(syllables: Vec<(usize, i64)>) -> Self {
        Self {
            syllables: syllables.into_iter().filter(|&(_, e)| e != 0).collect(),
        }
    }

    pub fn syllables(&self) -> &[(usize, i64)] {
        &self.syllables
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    /// Number of letters, counting `a^3` as three.
    pub fn letter_length(&self) -> u64 {
        self.syllables.iter().map(|&(_, e)| e.unsigned_abs()).sum()
    }

    pub fn is_freely_reduced(&self) -> bool {
        self.syllables.windows(2).all(|p| p[0].0 != p[1].0)
    }

    pub fn free_reduce(&self) -> Word {
        let mut stack: Vec<(usize, i64)> = Vec::with_capacity(self.syllables.len());
        for &(g, e) in &self.syllables {
            match stack.last_mut() {
                Some(top) if top.0 == g => {
                    top.1 += e;
                    if top.1 == 0 {
                        stack.pop();
                    }
                }
                _ => stack.push((g, e)),
            }
        }
        Word { syllables: stack }
    }

    pub fn abelian_reduce(&self) -> Word {
        let mut acc: std::collections::BTreeMap<usize, i64> = Default::default();
        for &(g, e) in &self.syllables {
            *acc.entry(g).or_default() += e;
        }
        Word::from_syllables(acc.into_iter().collect())
    }

    pub fn reduced(&self, class: GroupClass) -> Word {
        match class {
            GroupClass::Free => self.free_reduce(),
            GroupClass::FreeAbelian => self.abelian_reduce(),
        }
    }

    pub fn inverse(&self) -> Word {
        Word {
            syllables: self.syllables.iter().rev().map(|&(g, e)| (g, -e)).collect(),
        }
    }

    /// Unreduced concatenation `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut syllables = self.syllables.clone();
        syllables.extend_from_slice(&other.syllables);
        Word { syllables }
    }

    /// Unreduced power; negative `n` uses the inverse.
    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut syllables = Vec::with_capacity(base.syllables.len() * n.unsigned_abs() as usize);
        for _ in 0..n.unsigned_abs() {
            syllables.extend_from_slice(&base.syllables);
        }
        Word { syllables }
    }

    /// One entry per letter, each with exponent ±1, in written order.
    pub fn signed_letters(&self) -> Vec<(usize, i64)> {
        self.syllables
            .iter()
            .flat_map(|&(g, e)| std::iter::repeat_n((g, e.signum()), e.unsigned_abs() as usize))
            .collect()
    }

    /// Raw exponent sum per alphabet index, for an alphabet of size `n`.
    pub fn exponent_vector(&self, n: usize) -> Vec<i64> {
        let mut v = vec![0; n];
        for &(g, e) in &self.syllables {
            v[g] += e;
        }
        v
    }

    /// Exponent sums over the ordered generator list `gens`. Letters naming a
    /// generator outside `gens` are an error.
    pub fn exponent_sums(&self, gens: &[usize], alphabet: &Alphabet) -> Result<Vec<i64>> {
        let mut v = vec![0; gens.len()];
        for &(g, e) in &self.syllables {
            let slot = gens
                .iter()
                .position(|&s| s == g)
                .ok_or_else(|| LabError::UnknownGenerator(alphabet.name(g).to_string()))?;
            v[slot] += e;
        }
        Ok(v)
    }

    pub fn is_balanced(&self, n: usize) -> bool {
        self.exponent_vector(n).iter().all(|&e| e == 0)
    }

    /// Replaces each generator `g` with `images[g]` (no reduction).
    pub fn substitute(&self, images: &[Word]) -> Word {
        let mut out = Word::identity();
        for &(g, e) in &self.syllables {
            out = out.concat(&images[g].pow(e));
        }
        out
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.syllables.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .syllables
            .iter()
            .map(|&(g, e)| if e == 1 { format!("g{g}") } else { format!("g{g}^{e}") })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ab() -> Alphabet {
        Alphabet::new(vec!["a".into(), "b".into()]).unwrap()
    }

    // Letter-by-letter cancellation on ±1 letters; independent of the
    // syllable-merging reducer.
    fn oracle_reduce(w: &Word) -> Vec<(usize, i64)> {
        let mut stack: Vec<(usize, i64)> = Vec::new();
        for l in w.signed_letters() {
            if stack.last() == Some(&(l.0, -l.1)) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        stack
    }

    #[test]
    fn cancellation_to_identity() {
        let al = ab();
        let w = al.parse("a a^-1").unwrap();
        assert!(w.free_reduce().is_identity());
        assert!(Word::identity().free_reduce().is_identity());
    }

    #[test]
    fn commutator_square_does_not_cancel() {
        let al = ab();
        let c = al.parse("b^-1 a^-1 b a").unwrap();
        let w = c.concat(&c).free_reduce();
        assert_eq!(w.letter_length(), 8);
        assert_eq!(al.format(&w), "b^-1 a^-1 b a b^-1 a^-1 b a");
        assert_eq!(w.signed_letters(), oracle_reduce(&c.concat(&c)));
    }

    #[test]
    fn exponent_sum_examples() {
        let al = ab();
        let w = al.parse("a b^-1 a").unwrap();
        assert_eq!(w.exponent_sums(&[0, 1], &al).unwrap(), vec![2, -1]);
        let c = al.parse("b^-1 a^-1 b a").unwrap();
        assert_eq!(c.exponent_sums(&[0, 1], &al).unwrap(), vec![0, 0]);
        assert_eq!(Word::identity().exponent_sums(&[0, 1], &al).unwrap(), vec![0, 0]);
    }

    #[test]
    fn exponent_sum_unknown_generator_is_named() {
        let al = ab();
        let w = al.parse("a b").unwrap();
        let err = w.exponent_sums(&[0], &al).unwrap_err();
        assert_eq!(err, LabError::UnknownGenerator("b".into()));
        assert!(matches!(al.parse("a c"), Err(LabError::UnknownGenerator(n)) if n == "c"));
    }

    #[test]
    fn abelian_reduction_sorts_and_merges() {
        let al = ab();
        let w = al.parse("b a b^-1 a^2").unwrap().abelian_reduce();
        assert_eq!(w.syllables(), &[(0, 3)]);
    }

    #[test]
    fn parse_format_round_trip() {
        let al = ab();
        let w = al.parse("a^-1 b^3 a").unwrap();
        assert_eq!(al.parse(&al.format(&w)).unwrap(), w);
        assert!(matches!(al.parse("a^x"), Err(LabError::MalformedWord { .. })));
        assert_eq!(al.format(&Word::identity()), "1");
    }

    fn word_strategy() -> impl Strategy<Value = Word> {
        prop::collection::vec((0usize..3, prop_oneof![Just(-1i64), Just(1i64)]), 0..=64)
            .prop_map(Word::from_syllables)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn free_reduce_matches_oracle_and_is_idempotent(w in word_strategy()) {
            let r = w.free_reduce();
            prop_assert!(r.is_freely_reduced());
            prop_assert_eq!(r.free_reduce(), r.clone());
            prop_assert_eq!(r.signed_letters(), oracle_reduce(&w));
            prop_assert_eq!(r.exponent_vector(3), w.exponent_vector(3));
            let a = w.abelian_reduce();
            prop_assert_eq!(a.abelian_reduce(), a.clone());
            prop_assert_eq!(a.exponent_vector(3), w.exponent_vector(3));
        }
    }
}
