use std::collections::HashSet;

use crate::error::{invalid, Result};
use crate::ncpoly::{canonicalize, Algebra, Party, Symbol, Word};

/// Generating list of words indexing the moment matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialBasis {
    words: Vec<Word>,
    level: usize,
    extras: Vec<String>,
}

impl MonomialBasis {
    /// Builds a basis from an explicit word list. The identity is moved to
    /// the front; duplicates and zero words are dropped.
    pub fn from_words(words: impl IntoIterator<Item = Word>, level: usize) -> Self {
        let mut out = vec![Word::identity()];
        let mut seen: HashSet<Word> = out.iter().cloned().collect();
        for w in words {
            if !w.is_zero() && seen.insert(w.clone()) {
                out.push(w);
            }
        }
        MonomialBasis {
            words: out,
            level,
            extras: Vec::new(),
        }
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn extras(&self) -> &[String] {
        &self.extras
    }

    /// Words of length at most `max_len`, in basis order.
    pub fn truncated(&self, max_len: usize) -> Vec<Word> {
        self.words
            .iter()
            .filter(|w| w.len() <= max_len)
            .cloned()
            .collect()
    }

    /// Provenance string such as `2+ABZ+AZZ`.
    pub fn describe(&self) -> String {
        std::iter::once(self.level.to_string())
            .chain(self.extras.iter().cloned())
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Parses `"2+ABZ+AZZ"` into a level and pattern list.
pub fn parse_level_spec(spec: &str) -> Result<(usize, Vec<String>)> {
    let mut parts = spec.split('+').map(str::trim);
    let level = parts
        .next()
        .and_then(|l| l.parse::<usize>().ok())
        .ok_or_else(|| invalid(format!("relaxation spec `{spec}` must start with a level")))?;
    Ok((level, parts.map(str::to_owned).collect()))
}

/// All canonical words of length `<= level` over the algebra's letters, plus
/// for each pattern (e.g. `"ABZ"`) every product taking one letter per
/// pattern character.
pub fn generate_basis<S: AsRef<str>>(
    algebra: &Algebra,
    level: usize,
    extras: &[S],
) -> Result<MonomialBasis> {
    if level == 0 {
        return Err(invalid("relaxation level must be at least 1"));
    }
    let patterns = extras
        .iter()
        .map(|p| parse_pattern(p.as_ref()))
        .collect::<Result<Vec<_>>>()?;

    let letters = algebra.letters();
    let mut words = vec![Word::identity()];
    let mut seen: HashSet<Word> = words.iter().cloned().collect();
    let mut frontier = vec![Word::identity()];
    for _ in 0..level {
        let mut next = Vec::new();
        for w in &frontier {
            for &s in &letters {
                let u = canonicalize(w.symbols().iter().copied().chain([s]));
                if !u.is_zero() && seen.insert(u.clone()) {
                    words.push(u.clone());
                    next.push(u);
                }
            }
        }
        frontier = next;
    }

    for pattern in &patterns {
        let pools: Vec<Vec<Symbol>> = pattern.iter().map(|&p| algebra.letters_of(p)).collect();
        for_each_product(&pools, |raw| {
            let u = canonicalize(raw.iter().copied());
            if !u.is_zero() && seen.insert(u.clone()) {
                words.push(u);
            }
        });
    }

    Ok(MonomialBasis {
        words,
        level,
        extras: extras.iter().map(|p| p.as_ref().to_owned()).collect(),
    })
}

fn parse_pattern(p: &str) -> Result<Vec<Party>> {
    if p.is_empty() {
        return Err(invalid("empty monomial pattern"));
    }
    p.chars()
        .map(|c| {
            Party::from_letter(c)
                .ok_or_else(|| invalid(format!("unknown pattern letter `{c}` in `{p}`")))
        })
        .collect()
}

fn for_each_product(pools: &[Vec<Symbol>], mut f: impl FnMut(&[Symbol])) {
    if pools.iter().any(Vec::is_empty) {
        return;
    }
    let mut idx = vec![0usize; pools.len()];
    let mut buf: Vec<Symbol> = pools.iter().map(|p| p[0]).collect();
    loop {
        f(&buf);
        let mut k = pools.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < pools[k].len() {
                buf[k] = pools[k][idx[k]];
                break;
            }
            idx[k] = 0;
            buf[k] = pools[k][0];
        }
    }
}
