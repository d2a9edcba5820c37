//! Words over a finite alphabet of signed generators.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A generator or its inverse. Stored as `±(index + 1)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Letter(i32);

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        let v = generator as i32 + 1;
        Letter(if inverse { -v } else { v })
    }

    pub fn gen(generator: usize) -> Self {
        Self::new(generator, false)
    }

    pub fn generator(self) -> usize {
        (self.0.unsigned_abs() - 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    pub fn sign(self) -> i64 {
        if self.0 < 0 {
            -1
        } else {
            1
        }
    }

    pub fn inverse(self) -> Self {
        Letter(-self.0)
    }
}

/// A finite sequence of letters. Products built with [`Word::mul`] are freely
/// reduced; [`Word::concat`] keeps the raw concatenation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn letter(l: Letter) -> Self {
        Word(vec![l])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Reduced product `self · other`.
    pub fn mul(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        for &l in self.0.iter().chain(other.0.iter()) {
            push_reduced(&mut v, l);
        }
        Word(v)
    }

    /// Reduced product of several words.
    pub fn product<'a>(words: impl IntoIterator<Item = &'a Word>) -> Word {
        let mut v = Vec::new();
        for w in words {
            for &l in w.letters() {
                push_reduced(&mut v, l);
            }
        }
        Word(v)
    }

    /// Reduced power; negative exponents invert.
    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut v = Vec::with_capacity(self.len() * n.unsigned_abs() as usize);
        for _ in 0..n.unsigned_abs() {
            for &l in base.letters() {
                push_reduced(&mut v, l);
            }
        }
        Word(v)
    }

    /// Reduced commutator `a b a⁻¹ b⁻¹`.
    pub fn commutator(a: &Word, b: &Word) -> Word {
        Word::product([a, b, &a.inverse(), &b.inverse()])
    }

    pub fn free_reduce(&self) -> Word {
        let mut v = Vec::with_capacity(self.len());
        for &l in &self.0 {
            push_reduced(&mut v, l);
        }
        Word(v)
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|p| p[0] != p[1].inverse())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_reduced()
            && match (self.0.first(), self.0.last()) {
                (Some(&f), Some(&l)) => self.len() == 1 || f != l.inverse(),
                _ => true,
            }
    }

    /// Cyclic rotation: the word starting at position `k`.
    pub fn rotate(&self, k: usize) -> Word {
        if self.is_empty() {
            return Word::identity();
        }
        let k = k % self.len();
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.0[k..]);
        v.extend_from_slice(&self.0[..k]);
        Word(v)
    }

    pub fn subword(&self, start: usize, end: usize) -> Word {
        Word(self.0[start..end].to_vec())
    }

    /// Exponent sum of each generator, indexed by generator.
    pub fn exponent_vector(&self, rank: usize) -> Vec<i64> {
        let mut e = vec![0i64; rank];
        for l in &self.0 {
            if l.generator() < rank {
                e[l.generator()] += l.sign();
            }
        }
        e
    }

    /// Number of (possibly overlapping) occurrences of `pattern`.
    pub fn count_occurrences(&self, pattern: &Word) -> usize {
        if pattern.is_empty() || pattern.len() > self.len() {
            return 0;
        }
        self.0.windows(pattern.len()).filter(|w| *w == pattern.letters()).count()
    }
}

fn push_reduced(v: &mut Vec<Letter>, l: Letter) {
    if v.last() == Some(&l.inverse()) {
        v.pop();
    } else {
        v.push(l);
    }
}

/// The named generators of a presentation.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::InvalidPresentation(format!("bad generator name `{n}`")));
            }
            if n.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                return Err(Error::InvalidPresentation(format!("generator `{n}` starts with a digit")));
            }
            if names[..i].contains(n) {
                return Err(Error::InvalidPresentation(format!("duplicate generator `{n}`")));
            }
        }
        Ok(Alphabet { names })
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Every letter must name a declared generator.
    pub fn check(&self, w: &Word) -> Result<()> {
        match w.letters().iter().find(|l| l.generator() >= self.rank()) {
            Some(l) => Err(Error::UnknownGenerator(format!("#{}", l.generator()))),
            None => Ok(()),
        }
    }

    /// All letters `g₀, g₀⁻¹, g₁, g₁⁻¹, …` in BFS order.
    pub fn letters(&self) -> Vec<Letter> {
        (0..self.rank())
            .flat_map(|g| [Letter::new(g, false), Letter::new(g, true)])
            .collect()
    }

    /// Parses words such as `a b^-1 a^2`, `[a,b]^3`, `(ab)^-2` or `1`.
    /// Generator names are matched greedily, so `ab` reads as `a·b` when both
    /// are single-letter generators.
    pub fn parse(&self, input: &str) -> Result<Word> {
        let mut p = Parser { alph: self, src: input, chars: input.char_indices().collect(), pos: 0 };
        let w = p.expr()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(p.error("trailing input"));
        }
        Ok(w)
    }

    pub fn format(&self, w: &Word) -> String {
        if w.is_empty() {
            return "1".to_string();
        }
        let mut out: Vec<String> = Vec::new();
        let letters = w.letters();
        let mut i = 0;
        while i < letters.len() {
            let l = letters[i];
            let mut j = i;
            while j < letters.len() && letters[j] == l {
                j += 1;
            }
            let run = (j - i) as i64 * l.sign();
            let name = self.names.get(l.generator()).map(String::as_str).unwrap_or("?");
            out.push(if run == 1 { name.to_string() } else { format!("{name}^{run}") });
            i = j;
        }
        out.join(" ")
    }
}

struct Parser<'a> {
    alph: &'a Alphabet,
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, reason: &str) -> Error {
        Error::Parse { input: self.src.to_string(), reason: format!("{reason} at offset {}", self.offset()) }
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map(|c| c.0).unwrap_or(self.src.len())
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace() || c == '*' || c == '.') {
            self.pos += 1;
        }
    }

    fn expr(&mut self) -> Result<Word> {
        let mut acc = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None | Some(')') | Some(']') | Some(',') => break,
                _ => {
                    let f = self.factor()?;
                    acc.extend(f.into_letters());
                }
            }
        }
        Ok(Word(acc))
    }

    fn factor(&mut self) -> Result<Word> {
        let base = match self.peek() {
            Some('(') => {
                self.pos += 1;
                let w = self.expr()?;
                self.expect(')')?;
                w
            }
            Some('[') => {
                self.pos += 1;
                let a = self.expr()?;
                self.expect(',')?;
                let b = self.expr()?;
                self.expect(']')?;
                Word(
                    [a.letters(), b.letters(), a.inverse().letters(), b.inverse().letters()].concat(),
                )
            }
            Some('1') => {
                self.pos += 1;
                Word::identity()
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.generator()?,
            _ => return Err(self.error("unexpected character")),
        };
        self.skip_ws_inline();
        if self.peek() == Some('^') {
            self.pos += 1;
            let n = self.integer()?;
            Ok(Word(base.pow_raw(n)))
        } else {
            Ok(base)
        }
    }

    fn skip_ws_inline(&mut self) {
        while self.peek().is_some_and(|c| c == ' ' || c == '\t') {
            self.pos += 1;
        }
    }

    fn generator(&mut self) -> Result<Word> {
        let start = self.pos;
        let mut end = start;
        while self.chars.get(end).is_some_and(|c| c.1.is_ascii_alphanumeric() || c.1 == '_') {
            end += 1;
        }
        let token: String = self.chars[start..end].iter().map(|c| c.1).collect();
        if let Some(i) = self.alph.index_of(&token) {
            self.pos = end;
            return Ok(Word::letter(Letter::gen(i)));
        }
        // Greedy longest prefix match.
        for len in (1..token.len()).rev() {
            if let Some(i) = self.alph.index_of(&token[..len]) {
                self.pos = start + len;
                return Ok(Word::letter(Letter::gen(i)));
            }
        }
        Err(Error::UnknownGenerator(token))
    }

    fn integer(&mut self) -> Result<i64> {
        self.skip_ws_inline();
        let start = self.pos;
        if self.peek() == Some('-') || self.peek() == Some('+') {
            self.pos += 1;
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().map(|c| c.1).collect();
        s.parse().map_err(|_| self.error("expected integer exponent"))
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }
}

impl Word {
    /// Unreduced power, used by the parser so that `(a a^-1)^2` stays literal.
    fn pow_raw(&self, n: i64) -> Vec<Letter> {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut v = Vec::with_capacity(self.len() * n.unsigned_abs() as usize);
        for _ in 0..n.unsigned_abs() {
            v.extend_from_slice(base.letters());
        }
        v
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|l| if l.is_inverse() { format!("g{}^-1", l.generator()) } else { format!("g{}", l.generator()) })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Validates the alphabet and returns the reduced form of `w`.
pub fn free_reduce(alphabet: &Alphabet, w: &Word) -> Result<Word> {
    alphabet.check(w)?;
    Ok(w.free_reduce())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ab() -> Alphabet {
        Alphabet::new(["a", "b"]).unwrap()
    }

    #[test]
    fn reduction_examples() {
        let a = ab();
        let w = a.parse("a a^-1 b").unwrap();
        assert_eq!(free_reduce(&a, &w).unwrap(), a.parse("b").unwrap());
        assert_eq!(free_reduce(&a, &Word::identity()).unwrap(), Word::identity());
        let w = a.parse("a b b^-1 a a^-1 b").unwrap();
        assert_eq!(free_reduce(&a, &w).unwrap(), a.parse("a b").unwrap());
    }

    #[test]
    fn unknown_generator_rejected() {
        let a = ab();
        let w = Word::letter(Letter::gen(5));
        assert!(matches!(free_reduce(&a, &w), Err(Error::UnknownGenerator(_))));
        assert!(matches!(a.parse("a c"), Err(Error::UnknownGenerator(_))));
    }

    #[test]
    fn parse_forms() {
        let a = ab();
        assert_eq!(a.parse("[a,b]").unwrap(), a.parse("a b a^-1 b^-1").unwrap());
        assert_eq!(a.parse("ab").unwrap(), a.parse("a b").unwrap());
        assert_eq!(a.parse("(ab)^-1").unwrap(), a.parse("b^-1 a^-1").unwrap());
        assert_eq!(a.parse("1").unwrap(), Word::identity());
        assert_eq!(a.parse("").unwrap(), Word::identity());
        assert_eq!(a.parse("[a,b]^7").unwrap().len(), 28);
        assert_eq!(a.format(&a.parse("a a b^-1 b^-1 a").unwrap()), "a^2 b^-2 a");
        assert_eq!(a.format(&Word::identity()), "1");
        let multi = Alphabet::new(["x1", "x2"]).unwrap();
        assert_eq!(multi.parse("x1 x2^-1").unwrap().len(), 2);
    }

    #[test]
    fn occurrences_overlap() {
        let a = ab();
        assert_eq!(a.parse("b^3").unwrap().count_occurrences(&a.parse("b b").unwrap()), 2);
        assert_eq!(a.parse("abab").unwrap().count_occurrences(&a.parse("ab").unwrap()), 2);
    }

    /// All words of length `n` over a 2-letter alphabet, including unreduced ones.
    fn all_words(n: usize) -> Vec<Word> {
        let letters = ab().letters();
        let mut out = vec![Word::identity()];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|w| letters.iter().map(move |&l| Word([w.letters(), &[l]].concat())))
                .collect();
        }
        out
    }

    #[test]
    fn free_reduce_idempotent_and_shrinking_exhaustive() {
        for n in 0..=8 {
            for w in all_words(n) {
                let r = w.free_reduce();
                assert!(r.len() <= w.len());
                assert!(r.is_reduced());
                assert_eq!(r.free_reduce(), r);
            }
        }
        // Lengths 9..=12 without materialising the word lists.
        let letters = ab().letters();
        for n in 9..=12usize {
            let mut buf = vec![letters[0]; n];
            for code in 0..4u64.pow(n as u32) {
                let mut c = code;
                for slot in buf.iter_mut() {
                    *slot = letters[(c % 4) as usize];
                    c /= 4;
                }
                let w = Word(buf.clone());
                let r = w.free_reduce();
                assert!(r.len() <= n && r.is_reduced());
                assert_eq!(r.free_reduce(), r);
            }
        }
    }

    fn word_strategy(max: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec((0usize..2, any::<bool>()), 0..=max)
            .prop_map(|v| Word(v.into_iter().map(|(g, i)| Letter::new(g, i)).collect()))
    }

    proptest! {
        #[test]
        fn free_reduce_invariants(w in word_strategy(12)) {
            let r = w.free_reduce();
            prop_assert!(r.len() <= w.len());
            prop_assert_eq!(r.free_reduce(), r.clone());
            prop_assert_eq!(w.mul(&w.inverse()), Word::identity());
        }

        #[test]
        fn parse_format_roundtrip(w in word_strategy(16)) {
            let a = ab();
            let r = w.free_reduce();
            prop_assert_eq!(a.parse(&a.format(&r)).unwrap(), r);
        }
    }
}
