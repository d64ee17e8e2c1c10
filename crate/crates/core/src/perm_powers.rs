//! Permutations, cycle types and `d`-th powers in symmetric groups.
//!
//! Permutations act on the right: `p^(στ) = (p^σ)^τ`, so `σ.compose(τ)`
//! applies `σ` first. Points are 0-based internally and 1-based in cycle
//! notation.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::words::Word;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<u32>,
}

impl Permutation {
    pub fn identity(degree: usize) -> Permutation {
        Permutation { images: (0..degree as u32).collect() }
    }

    /// From 0-based images, checking bijectivity.
    pub fn from_images(images: Vec<usize>) -> Result<Permutation> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::InvalidPermutation(format!("{images:?} is not a bijection of 0..{n}")));
            }
            seen[i] = true;
        }
        Ok(Permutation { images: images.into_iter().map(|i| i as u32).collect() })
    }

    /// From 1-based one-line form.
    pub fn from_one_line(images: &[usize]) -> Result<Permutation> {
        if images.contains(&0) {
            return Err(Error::InvalidPermutation("one-line form is 1-based".into()));
        }
        Permutation::from_images(images.iter().map(|&i| i - 1).collect())
    }

    /// Parses cycle notation such as `(1 2 3)(4 5)`; `()` or an empty string
    /// is the identity.
    pub fn parse_cycles(text: &str, degree: usize) -> Result<Permutation> {
        let mut images: Vec<usize> = (0..degree).collect();
        let mut moved = vec![false; degree];
        let mut rest = text.trim();
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::InvalidPermutation(format!("expected '(' in {text:?}")))?;
            let close = body
                .find(')')
                .ok_or_else(|| Error::InvalidPermutation(format!("unclosed cycle in {text:?}")))?;
            let points: Vec<usize> = body[..close]
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|_| Error::InvalidPermutation(format!("bad point {s:?} in {text:?}")))
                })
                .collect::<Result<_>>()?;
            for &p in &points {
                if p == 0 || p > degree {
                    return Err(Error::InvalidPermutation(format!("point {p} outside 1..={degree}")));
                }
                if moved[p - 1] {
                    return Err(Error::InvalidPermutation(format!("point {p} repeated in {text:?}")));
                }
                moved[p - 1] = true;
            }
            for (i, &p) in points.iter().enumerate() {
                images[p - 1] = points[(i + 1) % points.len()] - 1;
            }
            rest = body[close + 1..].trim_start();
        }
        Permutation::from_images(images)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn image(&self, point: usize) -> usize {
        self.images[point] as usize
    }

    pub fn images(&self) -> Vec<usize> {
        self.images.iter().map(|&i| i as usize).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &p)| i == p as usize)
    }

    /// `self` followed by `other`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.degree() != other.degree() {
            return Err(Error::InvalidPermutation(format!(
                "degrees {} and {} differ",
                self.degree(),
                other.degree()
            )));
        }
        Ok(Permutation { images: self.images.iter().map(|&p| other.images[p as usize]).collect() })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u32; self.degree()];
        for (i, &p) in self.images.iter().enumerate() {
            inv[p as usize] = i as u32;
        }
        Permutation { images: inv }
    }

    /// `self^d`, by jumping `d` steps along each cycle.
    pub fn power(&self, d: i64) -> Permutation {
        let mut out = vec![0u32; self.degree()];
        for cycle in self.cycles_with_fixed() {
            let len = cycle.len() as i64;
            let shift = d.rem_euclid(len) as usize;
            for (i, &p) in cycle.iter().enumerate() {
                out[p] = cycle[(i + shift) % cycle.len()] as u32;
            }
        }
        Permutation { images: out }
    }

    fn cycles_with_fixed(&self) -> Vec<Vec<usize>> {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut p = start;
            while !seen[p] {
                seen[p] = true;
                cycle.push(p);
                p = self.images[p] as usize;
            }
            out.push(cycle);
        }
        out
    }

    /// All cycles including fixed points, each starting at its smallest
    /// point, ordered by that point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        self.cycles_with_fixed()
    }

    pub fn cycle_type(&self) -> CycleType {
        let mut counts = BTreeMap::new();
        for c in self.cycles_with_fixed() {
            *counts.entry(c.len()).or_insert(0) += 1;
        }
        CycleType { degree: self.degree(), counts }
    }

    pub fn fixed_points(&self) -> usize {
        self.images.iter().enumerate().filter(|&(i, &p)| i == p as usize).count()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut any = false;
        for c in self.cycles_with_fixed().into_iter().filter(|c| c.len() > 1) {
            any = true;
            let pts: Vec<String> = c.iter().map(|p| (p + 1).to_string()).collect();
            write!(f, "({})", pts.join(" "))?;
        }
        if !any {
            f.write_str("()")?;
        }
        Ok(())
    }
}

/// Number of cycles of each length.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CycleType {
    degree: usize,
    counts: BTreeMap<usize, usize>,
}

impl CycleType {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `c_t`, the number of `t`-cycles.
    pub fn count(&self, t: usize) -> usize {
        self.counts.get(&t).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.counts
    }

    /// The partition as parts in decreasing order, e.g. `3+1+1`.
    pub fn partition_label(&self) -> String {
        let mut parts = Vec::new();
        for (&t, &c) in self.counts.iter().rev() {
            parts.extend(std::iter::repeat_n(t.to_string(), c));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.partition_label())
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut q = 2;
    while q * q <= p {
        if p.is_multiple_of(q) {
            return false;
        }
        q += 1;
    }
    true
}

/// The `p`-adic valuation of `n`.
pub fn nu_p(n: u64, p: u64) -> Result<u32> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("valuation of 0".into()));
    }
    let (mut n, mut e) = (n, 0);
    while n % p == 0 {
        n /= p;
        e += 1;
    }
    Ok(e)
}

fn prime_divisors(mut t: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= t {
        if t.is_multiple_of(q) {
            out.push(q);
            while t.is_multiple_of(q) {
                t /= q;
            }
        }
        q += 1;
    }
    if t > 1 {
        out.push(t);
    }
    out
}

/// `m_t = prod_{p | t} p^{nu_p(d)}`: how many `t`-cycles one cycle of a
/// `d`-th root contributes.
pub fn root_multiplicity(t: u64, d: u64) -> u64 {
    prime_divisors(t)
        .into_iter()
        .map(|p| p.pow(nu_p(d, p).expect("prime divisor")))
        .product()
}

/// Whether `sigma = tau^d` for some permutation `tau`.
pub fn is_dth_power(sigma: &Permutation, d: u64) -> bool {
    if d == 0 {
        return sigma.is_identity();
    }
    sigma
        .cycle_type()
        .counts()
        .iter()
        .all(|(&t, &c)| (c as u64).is_multiple_of(root_multiplicity(t as u64, d)))
}

/// A `d`-th root of `sigma`, or `None` when there is none.
///
/// The `t`-cycles are taken in order of their smallest point and grouped
/// `m_t` at a time; group member `r` with points `c_0 .. c_{t-1}` occupies
/// positions `r + i*d (mod t*m_t)` of one long cycle.
pub fn dth_root(sigma: &Permutation, d: u64) -> Option<Permutation> {
    if !is_dth_power(sigma, d) {
        return None;
    }
    let n = sigma.degree();
    if d == 0 {
        return Some(Permutation::identity(n));
    }
    let mut by_len: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
    for c in sigma.cycles_with_fixed() {
        by_len.entry(c.len()).or_default().push(c);
    }
    let mut images = vec![0usize; n];
    for (t, cycles) in by_len {
        let m = root_multiplicity(t as u64, d) as usize;
        let len = t * m;
        for group in cycles.chunks(m) {
            let mut slots = vec![usize::MAX; len];
            for (r, cycle) in group.iter().enumerate() {
                for (i, &p) in cycle.iter().enumerate() {
                    let pos = ((r as u128 + i as u128 * d as u128) % len as u128) as usize;
                    slots[pos] = p;
                }
            }
            for j in 0..len {
                images[slots[j]] = slots[(j + 1) % len];
            }
        }
    }
    let root = Permutation::from_images(images).ok()?;
    // the contract is checked, not assumed
    (root.power(d as i64) == *sigma).then_some(root)
}

/// `n!`, if it fits.
pub fn factorial(n: usize) -> Option<u128> {
    (1..=n as u128).try_fold(1u128, |acc, k| acc.checked_mul(k))
}

/// All permutations of `0..n` in lexicographic order of one-line form,
/// flattened into rows of length `n`. The identity comes first.
pub(crate) fn permutations_flat(n: usize) -> Vec<u8> {
    assert!(n <= 12, "degree too large to enumerate");
    let count = factorial(n).expect("small factorial") as usize;
    let mut out = Vec::with_capacity(count * n);
    let mut cur: Vec<u8> = (0..n as u8).collect();
    loop {
        out.extend_from_slice(&cur);
        // next permutation in lexicographic order
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// Inverses of the rows of [`permutations_flat`].
pub(crate) fn inverses_flat(perms: &[u8], n: usize) -> Vec<u8> {
    let mut out = vec![0u8; perms.len()];
    for (row, inv) in perms.chunks(n.max(1)).zip(out.chunks_mut(n.max(1))) {
        for (i, &p) in row.iter().enumerate() {
            inv[p as usize] = i as u8;
        }
    }
    out
}

/// All of `S_n`, identity first.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    if n == 0 {
        return vec![Permutation::identity(0)];
    }
    permutations_flat(n)
        .chunks(n)
        .map(|row| Permutation { images: row.iter().map(|&p| p as u32).collect() })
        .collect()
}

/// The image of `w` under the homomorphism sending generator `i` to
/// `images[i]`.
pub fn evaluate_word(w: &Word, images: &[Permutation]) -> Result<Permutation> {
    if images.len() < w.support_rank() {
        return Err(Error::ArityMismatch { expected: w.support_rank(), got: images.len() });
    }
    let n = images.first().map_or(0, |p| p.degree());
    if images.iter().any(|p| p.degree() != n) {
        return Err(Error::InvalidPermutation("images have different degrees".into()));
    }
    let inverses: Vec<Permutation> = images.iter().map(|p| p.inverse()).collect();
    let mut out = Permutation::identity(n);
    for l in w.letters() {
        let step = if l.is_inverse() { &inverses[l.gen()] } else { &images[l.gen()] };
        out = out.compose(step)?;
    }
    Ok(out)
}

/// Exact moments of `c_t(sigma^b)` for uniform `sigma` in `S_N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Moments {
    pub b: usize,
    pub t: usize,
    pub n: usize,
    #[serde(serialize_with = "crate::measures::serialize_rational")]
    pub first: BigRational,
    #[serde(serialize_with = "crate::measures::serialize_rational")]
    pub second: BigRational,
    /// `N >= bt`, under which the first moment equals `1/t`.
    pub first_in_range: bool,
    /// `N >= 2bt`, under which the second moment equals `b/t + 1/t^2`.
    pub second_in_range: bool,
}

impl Moments {
    pub fn predicted_first(&self) -> BigRational {
        BigRational::new(1.into(), (self.t as i64).into())
    }

    pub fn predicted_second(&self) -> BigRational {
        let t = BigInt::from(self.t);
        BigRational::new(BigInt::from(self.b), t.clone()) + BigRational::new(1.into(), &t * &t)
    }
}

/// `E[c_t(sigma^b)]` and `E[c_t(sigma^b)^2]` over all of `S_N`.
///
/// Requires `b | t`. Costs `N! * N` work units.
pub fn moments_exact(b: usize, t: usize, n: usize, budget: u128) -> Result<Moments> {
    if b == 0 || t == 0 || n == 0 {
        return Err(Error::InvalidArgument("b, t and N must be positive".into()));
    }
    if !t.is_multiple_of(b) {
        return Err(Error::Hypothesis { name: "b divides t", detail: format!("{b} does not divide {t}") });
    }
    let needed = factorial(n).and_then(|c| c.checked_mul(n as u128)).unwrap_or(u128::MAX);
    if needed > budget || n > 12 {
        return Err(Error::budget("moments enumeration (N! * N)", needed, budget));
    }
    let count = needed / n as u128;
    let perms = permutations_flat(n);
    let (s1, s2) = perms
        .par_chunks(n)
        .map(|row| {
            let sigma = Permutation { images: row.iter().map(|&p| p as u32).collect() };
            let c = sigma.power(b as i64).cycle_type().count(t) as u128;
            (c, c * c)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let total = BigInt::from(count);
    Ok(Moments {
        b,
        t,
        n,
        first: BigRational::new(BigInt::from(s1), total.clone()),
        second: BigRational::new(BigInt::from(s2), total),
        first_in_range: n >= b * t,
        second_in_range: n >= 2 * b * t,
    })
}

/// How one degree was searched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObstructionWitness {
    pub n: usize,
    /// Images of the generators, in cycle notation.
    pub images: Vec<String>,
    /// The image of the word, which is not a `d`-th power.
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObstructionReport {
    pub word: String,
    pub d: u64,
    /// Degrees searched before stopping, with the search mode used.
    pub searched: Vec<(usize, SearchMode)>,
    pub witness: Option<ObstructionWitness>,
    /// Whether the word is a `d`-th power in the free group itself.
    pub dth_power_in_free_group: bool,
}

const OBSTRUCTION_SHARD: u64 = 1 << 12;

/// Searches for a homomorphism to some `S_N`, `N` in `degrees`, under which
/// `w` is not a `d`-th power.
///
/// Degrees with `(N!)^r * |w|` within `budget` are searched exhaustively
/// and report the first witness in lexicographic tuple order; larger
/// degrees draw `samples` random tuples. Shard `s` at degree `N` draws
/// from `ChaCha8Rng::seed_from_u64(seed)` on stream `(N << 32) | s`, each
/// shard holding 4096 samples, and each tuple is `r` Fisher-Yates shuffles
/// of the identity. The search stops at the first degree with a witness.
pub fn word_power_obstruction(
    w: &Word,
    d: u64,
    degrees: &[usize],
    samples: u64,
    seed: u64,
    budget: u128,
) -> Result<ObstructionReport> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be positive".into()));
    }
    let r = w.rank().max(w.support_rank());
    let mut searched = Vec::new();
    let mut witness = None;
    for &n in degrees {
        if n == 0 {
            return Err(Error::InvalidArgument("degree must be positive".into()));
        }
        let tuples = factorial(n).and_then(|c| c.checked_pow(r as u32));
        let needed = tuples.and_then(|t| t.checked_mul(w.len().max(1) as u128));
        let found = if n <= 12 && needed.is_some_and(|x| x <= budget) {
            searched.push((n, SearchMode::Exhaustive));
            exhaustive_non_power(w, d, n, r)
        } else {
            searched.push((n, SearchMode::Sampled));
            sampled_non_power(w, d, n, r, samples, seed)
        };
        if let Some(images) = found {
            let value = evaluate_word(w, &images)?;
            witness = Some(ObstructionWitness {
                n,
                images: images.iter().map(|p| p.to_string()).collect(),
                value: value.to_string(),
            });
            break;
        }
    }
    Ok(ObstructionReport {
        word: w.to_string(),
        d,
        searched,
        witness,
        dth_power_in_free_group: w.is_dth_power_in_free(d),
    })
}

fn trace_value(w: &Word, rows: &[&[u8]], inv_rows: &[&[u8]], n: usize) -> Permutation {
    let mut images = vec![0u32; n];
    for (start, img) in images.iter_mut().enumerate() {
        let mut p = start;
        for l in w.letters() {
            p = if l.is_inverse() { inv_rows[l.gen()][p] } else { rows[l.gen()][p] } as usize;
        }
        *img = p as u32;
    }
    Permutation { images }
}

fn exhaustive_non_power(w: &Word, d: u64, n: usize, r: usize) -> Option<Vec<Permutation>> {
    let perms = permutations_flat(n);
    let inv = inverses_flat(&perms, n);
    let count = perms.len() / n;
    let row = |i: usize| &perms[i * n..(i + 1) * n];
    let irow = |i: usize| &inv[i * n..(i + 1) * n];
    let to_perms = |idx: &[usize]| -> Vec<Permutation> {
        idx.iter().map(|&i| Permutation { images: row(i).iter().map(|&p| p as u32).collect() }).collect()
    };
    if r == 0 {
        return None;
    }
    (0..count).into_par_iter().find_map_first(|first| {
        let mut idx = vec![0usize; r];
        idx[0] = first;
        loop {
            let rows: Vec<&[u8]> = idx.iter().map(|&i| row(i)).collect();
            let irows: Vec<&[u8]> = idx.iter().map(|&i| irow(i)).collect();
            if !is_dth_power(&trace_value(w, &rows, &irows, n), d) {
                return Some(to_perms(&idx));
            }
            let mut pos = r - 1;
            loop {
                if pos == 0 {
                    return None;
                }
                idx[pos] += 1;
                if idx[pos] < count {
                    break;
                }
                idx[pos] = 0;
                pos -= 1;
            }
        }
    })
}

fn sampled_non_power(w: &Word, d: u64, n: usize, r: usize, samples: u64, seed: u64) -> Option<Vec<Permutation>> {
    let shards = samples.div_ceil(OBSTRUCTION_SHARD);
    (0..shards).into_par_iter().find_map_first(|s| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((n as u64) << 32) | s);
        let here = OBSTRUCTION_SHARD.min(samples - s * OBSTRUCTION_SHARD);
        for _ in 0..here {
            let tuple: Vec<Permutation> = (0..r)
                .map(|_| {
                    let mut v: Vec<u32> = (0..n as u32).collect();
                    v.shuffle(&mut rng);
                    Permutation { images: v }
                })
                .collect();
            let value = evaluate_word(w, &tuple).expect("degrees agree");
            if !is_dth_power(&value, d) {
                return Some(tuple);
            }
        }
        None
    })
}
