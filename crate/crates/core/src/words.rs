//! Elements of finitely generated free groups.
//!
//! A [`Word`] is a freely reduced sequence of signed generators together with
//! the rank of the free group it lives in. Words are immutable; every
//! operation returns a fresh value.
//!
//! Text syntax:
//!
//! ```text
//! word   := term { term } ;
//! term   := atom [ '^' int ] ;
//! atom   := letter | '1' | '(' word ')' | '[' word ',' word ']' ;
//! letter := 'a'..'z' | 'A'..'Z' ;
//! int    := [ '-' ] digit { digit } ;
//! ```
//!
//! Uppercase letters are inverses, `[u,v]` is `u v u^-1 v^-1` and whitespace is
//! ignored. Letters are numbered alphabetically (`a` is generator 1, `z` is
//! generator 26), except that a word spelled only with `x`, `y` and `z` uses
//! `x = 1`, `y = 2`, `z = 3`, so that `[x,y]` lives in the free group of rank
//! two. The printer follows the same rule: words whose generators all lie in
//! `1..=3` print with `x y z`, anything else with `a..z`.

use std::fmt;

use crate::error::{Error, Result};
use crate::stallings::CoreGraph;

/// Largest supported rank, one lowercase letter per generator.
pub const MAX_RANK: usize = 26;

/// Longest word the parser will materialize.
const MAX_PARSED_LEN: usize = 1 << 24;

/// A generator or its inverse. Stored as `+g` / `-g` with `g` 1-based.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Letter(i8);

impl Letter {
    /// Letter for generator `gen` (0-based), inverted when `inverse` is set.
    pub fn new(gen: usize, inverse: bool) -> Letter {
        assert!(gen < MAX_RANK, "generator index {gen} out of range");
        let g = gen as i8 + 1;
        Letter(if inverse { -g } else { g })
    }

    /// 0-based generator index.
    pub fn gen(self) -> usize {
        (self.0.unsigned_abs() - 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    pub fn inverse(self) -> Letter {
        Letter(-self.0)
    }

    /// Index into a `2 * rank` array: `2 * gen + inverse`.
    pub fn slot(self) -> usize {
        2 * self.gen() + self.is_inverse() as usize
    }

    pub fn from_slot(slot: usize) -> Letter {
        Letter::new(slot / 2, slot % 2 == 1)
    }

    fn to_char(self, xyz: bool) -> char {
        let base = if xyz { b'x' } else { b'a' };
        let c = (base + self.gen() as u8) as char;
        if self.is_inverse() {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }
}

/// A freely reduced element of the free group of rank `rank`.
///
/// Equality and hashing compare letters only: `x` in `F_1` and `x` in `F_2`
/// are the same element under the standard inclusion.
#[derive(Clone, Debug)]
pub struct Word {
    rank: usize,
    letters: Vec<Letter>,
}

impl PartialEq for Word {
    fn eq(&self, other: &Self) -> bool {
        self.letters == other.letters
    }
}

impl Eq for Word {}

impl std::hash::Hash for Word {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.letters.hash(state)
    }
}

fn reduce_into(out: &mut Vec<Letter>, letters: impl IntoIterator<Item = Letter>) {
    for l in letters {
        if out.last() == Some(&l.inverse()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
}

impl Word {
    /// Builds a word from arbitrary letters, freely reducing them.
    pub fn from_letters(rank: usize, letters: impl IntoIterator<Item = Letter>) -> Result<Word> {
        let mut out = Vec::new();
        reduce_into(&mut out, letters);
        if rank > MAX_RANK {
            return Err(Error::GeneratorOutOfRange { index: rank, rank: MAX_RANK });
        }
        if let Some(l) = out.iter().find(|l| l.gen() >= rank) {
            return Err(Error::GeneratorOutOfRange { index: l.gen() + 1, rank });
        }
        Ok(Word { rank, letters: out })
    }

    fn from_reduced(rank: usize, letters: Vec<Letter>) -> Word {
        debug_assert!(letters.windows(2).all(|p| p[0] != p[1].inverse()));
        Word { rank, letters }
    }

    pub fn identity(rank: usize) -> Word {
        Word { rank, letters: Vec::new() }
    }

    /// The basis element `x_{gen+1}` of `F_rank`.
    pub fn generator(gen: usize, rank: usize) -> Word {
        assert!(gen < rank && rank <= MAX_RANK);
        Word { rank, letters: vec![Letter::new(gen, false)] }
    }

    /// The standard basis of `F_rank`.
    pub fn basis(rank: usize) -> Vec<Word> {
        (0..rank).map(|g| Word::generator(g, rank)).collect()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Same letters, viewed in a free group of larger rank.
    pub fn with_rank(&self, rank: usize) -> Result<Word> {
        Word::from_letters(rank, self.letters.iter().copied())
    }

    /// Number of generators actually used, i.e. the largest index present.
    pub fn support_rank(&self) -> usize {
        self.letters.iter().map(|l| l.gen() + 1).max().unwrap_or(0)
    }

    pub fn multiply(&self, other: &Word) -> Word {
        let mut out = self.letters.clone();
        reduce_into(&mut out, other.letters.iter().copied());
        Word::from_reduced(self.rank.max(other.rank), out)
    }

    pub fn invert(&self) -> Word {
        let letters = self.letters.iter().rev().map(|l| l.inverse()).collect();
        Word::from_reduced(self.rank, letters)
    }

    pub fn power(&self, d: i64) -> Word {
        let base = if d < 0 { self.invert() } else { self.clone() };
        let (core, conj) = base.cyclic_reduce();
        let mut letters = conj.letters.clone();
        for _ in 0..d.unsigned_abs() {
            letters.extend_from_slice(&core.letters);
        }
        reduce_into(&mut letters, conj.invert().letters);
        let mut out = Vec::with_capacity(letters.len());
        reduce_into(&mut out, letters);
        Word::from_reduced(self.rank, out)
    }

    /// `[self, other] = self * other * self^-1 * other^-1`.
    pub fn commutator(&self, other: &Word) -> Word {
        self.multiply(other).multiply(&self.invert()).multiply(&other.invert())
    }

    /// Splits `self = conjugator * core * conjugator^-1` with `core` cyclically
    /// reduced.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let n = self.letters.len();
        let mut k = 0;
        while 2 * k + 1 < n && self.letters[k] == self.letters[n - 1 - k].inverse() {
            k += 1;
        }
        let core = self.letters[k..n - k].to_vec();
        let conj = self.letters[..k].to_vec();
        (Word::from_reduced(self.rank, core), Word::from_reduced(self.rank, conj))
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(a), Some(b)) => self.letters.len() == 1 || *a != b.inverse(),
            _ => true,
        }
    }

    /// Writes `self = u^b` with `u` not a proper power.
    pub fn maximal_root(&self) -> Result<(Word, u64)> {
        if self.is_identity() {
            return Err(Error::IdentityInput);
        }
        let (core, conj) = self.cyclic_reduce();
        let n = core.letters.len();
        let period = smallest_period(&core.letters);
        let (root_len, b) = if n % period == 0 { (period, n / period) } else { (n, 1) };
        let root_core = Word::from_reduced(self.rank, core.letters[..root_len].to_vec());
        let root = conj.multiply(&root_core).multiply(&conj.invert());
        Ok((root, b as u64))
    }

    /// Whether `self = v^d` for some `v` in the free group.
    pub fn is_dth_power_in_free(&self, d: u64) -> bool {
        match self.maximal_root() {
            Err(_) => true,
            Ok((_, b)) => d != 0 && b % d == 0,
        }
    }

    /// Image under `x_i -> images[i]`.
    pub fn substitute(&self, images: &[Word]) -> Result<Word> {
        if self.rank > images.len() || self.support_rank() > images.len() {
            return Err(Error::ArityMismatch { expected: self.rank, got: images.len() });
        }
        let target_rank = images.iter().map(|w| w.rank).max().unwrap_or(0);
        let inverses: Vec<Word> = images.iter().map(|w| w.invert()).collect();
        let mut out = Vec::new();
        for l in &self.letters {
            let img = if l.is_inverse() { &inverses[l.gen()] } else { &images[l.gen()] };
            reduce_into(&mut out, img.letters.iter().copied());
        }
        Ok(Word::from_reduced(target_rank, out))
    }

    /// Text form that parses back to `self` (`1` for the identity).
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Word> {
        parse(text, None)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        let xyz = self.support_rank() <= 3;
        for l in &self.letters {
            write!(f, "{}", l.to_char(xyz))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Word> {
        parse(s, None)
    }
}

/// Smallest `p >= 1` with `s[i] == s[i + p]` for all valid `i` (KMP failure function).
fn smallest_period<T: PartialEq>(s: &[T]) -> usize {
    let n = s.len();
    if n == 0 {
        return 1;
    }
    let mut fail = vec![0usize; n];
    let mut k = 0;
    for i in 1..n {
        while k > 0 && s[i] != s[k] {
            k = fail[k - 1];
        }
        if s[i] == s[k] {
            k += 1;
        }
        fail[i] = k;
    }
    n - fail[n - 1]
}

/// Parses `text` into a freely reduced word.
///
/// The ambient rank defaults to the largest generator index mentioned. When
/// `ambient_rank` is given every generator must fit inside it.
pub fn parse(text: &str, ambient_rank: Option<usize>) -> Result<Word> {
    let xyz = text
        .chars()
        .filter(|c| c.is_ascii_alphabetic())
        .all(|c| matches!(c.to_ascii_lowercase(), 'x' | 'y' | 'z'));
    let mut p = Parser { src: text.as_bytes(), pos: 0, xyz };
    p.skip_ws();
    let letters = if p.pos == p.src.len() { Vec::new() } else { p.word()? };
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected character"));
    }
    let used = letters.iter().map(|l| l.gen() + 1).max().unwrap_or(0);
    let rank = match ambient_rank {
        Some(r) => {
            if r > MAX_RANK {
                return Err(Error::GeneratorOutOfRange { index: r, rank: MAX_RANK });
            }
            if used > r {
                return Err(Error::GeneratorOutOfRange { index: used, rank: r });
            }
            r
        }
        None => used,
    };
    Ok(Word::from_reduced(rank, letters))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    xyz: bool,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn word(&mut self) -> Result<Vec<Letter>> {
        let mut out = Vec::new();
        let mut terms = 0;
        while let Some(c) = self.peek() {
            if !(c.is_ascii_alphabetic() || c == b'(' || c == b'[' || c == b'1') {
                break;
            }
            let t = self.term()?;
            reduce_into(&mut out, t);
            terms += 1;
        }
        if terms == 0 {
            return Err(self.err("expected a letter, '1', '(' or '['"));
        }
        Ok(out)
    }

    fn term(&mut self) -> Result<Vec<Letter>> {
        let atom = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(atom);
        }
        self.pos += 1;
        let start = self.pos;
        let e = self.int()?;
        let base = if e < 0 {
            atom.iter().rev().map(|l| l.inverse()).collect()
        } else {
            atom
        };
        let reps = e.unsigned_abs() as usize;
        if reps.saturating_mul(base.len()) > MAX_PARSED_LEN {
            return Err(Error::ExponentOverflow { pos: start });
        }
        let w = Word::from_reduced(MAX_RANK, base);
        Ok(w.power(reps as i64).letters)
    }

    fn atom(&mut self) -> Result<Vec<Letter>> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let w = self.word()?;
                self.expect(b')')?;
                Ok(w)
            }
            Some(b'[') => {
                self.pos += 1;
                let u = self.word()?;
                self.expect(b',')?;
                let v = self.word()?;
                self.expect(b']')?;
                let u = Word::from_reduced(MAX_RANK, u);
                let v = Word::from_reduced(MAX_RANK, v);
                Ok(u.commutator(&v).letters)
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(Vec::new())
            }
            Some(c) if c.is_ascii_alphabetic() => {
                self.pos += 1;
                let lower = c.to_ascii_lowercase();
                let gen = if self.xyz { (lower - b'x') as usize } else { (lower - b'a') as usize };
                Ok(vec![Letter::new(gen, c.is_ascii_uppercase())])
            }
            _ => Err(self.err("expected a letter, '1', '(' or '['")),
        }
    }

    fn int(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        let neg = if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let digits_start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(self.err("expected an integer exponent"));
        }
        let digits = std::str::from_utf8(&self.src[digits_start..self.pos]).expect("ascii digits");
        let v: i64 = digits.parse().map_err(|_| Error::ExponentOverflow { pos: start })?;
        Ok(if neg { -v } else { v })
    }
}

/// An elementary automorphism of `F_rank`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum WhiteheadMove {
    /// `x_i -> images[i]`, a signed permutation of the basis.
    Permutation { rank: usize, images: Vec<Letter> },
    /// Fixes `multiplier`; sends `x -> a^-1^[x^-1 in S] x a^[x in S]` for the
    /// other basis letters, where `S` is `set` (a bitmask over letter slots).
    Multiplier { rank: usize, multiplier: Letter, set: u64 },
}

impl WhiteheadMove {
    pub fn rank(&self) -> usize {
        match self {
            WhiteheadMove::Permutation { rank, .. } | WhiteheadMove::Multiplier { rank, .. } => *rank,
        }
    }

    pub fn identity(rank: usize) -> WhiteheadMove {
        WhiteheadMove::Permutation { rank, images: (0..rank).map(|g| Letter::new(g, false)).collect() }
    }

    /// Letters of the multiplier set, for type-II moves.
    pub fn multiplier_set(&self) -> Vec<Letter> {
        match self {
            WhiteheadMove::Permutation { .. } => Vec::new(),
            WhiteheadMove::Multiplier { set, rank, .. } => {
                (0..2 * rank).filter(|s| set >> s & 1 == 1).map(Letter::from_slot).collect()
            }
        }
    }

    /// Images of the basis letters.
    pub fn images(&self) -> Vec<Word> {
        match self {
            WhiteheadMove::Permutation { rank, images } => images
                .iter()
                .map(|&l| Word::from_reduced(*rank, vec![l]))
                .collect(),
            WhiteheadMove::Multiplier { rank, multiplier, set } => (0..*rank)
                .map(|g| {
                    let x = Letter::new(g, false);
                    if g == multiplier.gen() {
                        return Word::from_reduced(*rank, vec![x]);
                    }
                    let mut letters = Vec::with_capacity(3);
                    if set >> x.inverse().slot() & 1 == 1 {
                        letters.push(multiplier.inverse());
                    }
                    letters.push(x);
                    if set >> x.slot() & 1 == 1 {
                        letters.push(*multiplier);
                    }
                    Word::from_reduced(*rank, letters)
                })
                .collect(),
        }
    }

    pub fn apply(&self, w: &Word) -> Result<Word> {
        if w.rank() > self.rank() {
            return Err(Error::RankMismatch(format!(
                "move of rank {} applied to a word of rank {}",
                self.rank(),
                w.rank()
            )));
        }
        w.with_rank(self.rank())?.substitute(&self.images())
    }

    /// Checks that the basis images generate the whole free group.
    pub fn is_automorphism(&self) -> bool {
        let g = CoreGraph::from_generators(&self.images(), self.rank());
        g.num_vertices() == 1 && g.rank() == self.rank()
    }
}

/// All signed permutations of the basis, then all multiplier moves.
pub fn enumerate_whitehead_moves(rank: usize) -> Vec<WhiteheadMove> {
    let mut moves = Vec::new();
    let mut perm: Vec<usize> = (0..rank).collect();
    let mut perms = Vec::new();
    permutations(&mut perm, 0, &mut perms);
    for p in &perms {
        for signs in 0u32..(1 << rank) {
            let images = p.iter().enumerate().map(|(i, &g)| Letter::new(g, signs >> i & 1 == 1)).collect();
            moves.push(WhiteheadMove::Permutation { rank, images });
        }
    }
    moves.extend(multiplier_moves(rank));
    moves
}

/// Type-II moves only. These are the moves that can change core-graph size.
pub fn multiplier_moves(rank: usize) -> Vec<WhiteheadMove> {
    let mut moves = Vec::new();
    for a_slot in 0..2 * rank {
        let multiplier = Letter::from_slot(a_slot);
        let others: Vec<usize> = (0..2 * rank).filter(|s| s / 2 != multiplier.gen()).collect();
        for bits in 0u64..(1u64 << others.len()) {
            let set = others
                .iter()
                .enumerate()
                .filter(|(i, _)| bits >> i & 1 == 1)
                .fold(0u64, |acc, (_, &s)| acc | 1 << s);
            moves.push(WhiteheadMove::Multiplier { rank, multiplier, set });
        }
    }
    moves
}

fn permutations(p: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == p.len() {
        out.push(p.clone());
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, out);
        p.swap(k, i);
    }
}
