//! Word measures on finite groups and expected fixed points of word maps on
//! symmetric groups, exact and by Monte Carlo.
//!
//! Exact enumeration costs "work units": tuples visited times word length.
//! Every exact routine takes a work-unit budget and fails with
//! [`Error::BudgetExceeded`] before starting if it would overrun it.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm_powers::{factorial, inverses_flat, permutations_flat, Permutation};
use crate::words::Word;

pub const DEFAULT_BUDGET: u128 = 1_000_000_000;

/// Largest degree whose symmetric group is built as a multiplication table.
pub const MAX_SYMMETRIC_TABLE_DEGREE: usize = 6;

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub(crate) fn serialize_rational<S: serde::Serializer>(
    q: &BigRational,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

/// `q` rounded to `digits` significant decimal digits, in positional
/// notation.
pub fn decimal_string(q: &BigRational, digits: usize) -> String {
    let digits = digits.max(1);
    if q.is_zero() {
        return "0".into();
    }
    let sign = if q.is_negative() { "-" } else { "" };
    let a = q.abs();
    // exponent e with 10^e <= a < 10^(e+1)
    let mut e = a.numer().to_string().len() as i64 - a.denom().to_string().len() as i64;
    let ten = BigRational::from_integer(10.into());
    let pow = |k: i64| -> BigRational {
        if k >= 0 {
            num::pow(ten.clone(), k as usize)
        } else {
            num::pow(ten.clone(), (-k) as usize).recip()
        }
    };
    while a < pow(e) {
        e -= 1;
    }
    while a >= pow(e + 1) {
        e += 1;
    }
    let shift = digits as i64 - 1 - e;
    let mut scaled = (&a * pow(shift)).round().to_integer();
    if scaled.to_string().len() > digits {
        // rounding carried into a new digit
        e += 1;
        scaled = (&a * pow(shift - 1)).round().to_integer();
    }
    let shift = digits as i64 - 1 - e;
    let s = scaled.to_string();
    let body = if shift <= 0 {
        format!("{s}{}", "0".repeat((-shift) as usize))
    } else if (shift as usize) < s.len() {
        let (int, frac) = s.split_at(s.len() - shift as usize);
        format!("{int}.{frac}")
    } else {
        format!("0.{}{s}", "0".repeat(shift as usize - s.len()))
    };
    format!("{sign}{body}")
}

/// Rows `N, numerator, denominator, decimal` for an exact sweep.
pub fn exact_csv(rows: &[(usize, BigRational)]) -> String {
    let mut out = String::from("N,numerator,denominator,decimal\n");
    for (n, q) in rows {
        let _ = writeln!(out, "{n},{},{},{}", q.numer(), q.denom(), decimal_string(q, 15));
    }
    out
}

fn check_words(gens: &[Word], rank: usize) -> Result<()> {
    for g in gens {
        if g.support_rank() > rank {
            return Err(Error::GeneratorOutOfRange { index: g.support_rank(), rank });
        }
    }
    Ok(())
}

fn symmetric_tuples(n: usize, rank: usize, cost_per_tuple: usize, budget: u128, what: &str) -> Result<u128> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    let tuples = factorial(n).and_then(|c| c.checked_pow(rank as u32));
    let needed = tuples.and_then(|t| t.checked_mul(cost_per_tuple.max(1) as u128));
    match needed {
        Some(x) if x <= budget && n <= 12 => Ok(tuples.expect("checked")),
        _ => Err(Error::budget(what, needed.unwrap_or(u128::MAX), budget)),
    }
}

/// Calls `f` on every `r`-tuple of indices below `count`, splitting the
/// first coordinate across workers, and sums the results exactly.
fn sum_over_tuples<F>(count: usize, r: usize, f: F) -> u128
where
    F: Fn(&[usize]) -> u64 + Sync,
{
    if r == 0 {
        return f(&[]) as u128;
    }
    (0..count)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; r];
            idx[0] = first;
            let mut acc: u128 = 0;
            loop {
                acc += f(&idx) as u128;
                let mut pos = r - 1;
                loop {
                    if pos == 0 {
                        return acc;
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
        .sum()
}

/// Sum over `Hom(F_rank, S_n)` of the number of points fixed by every
/// generator image; with `only_first`, counts point 0 only.
fn joint_fixed_sum(gens: &[Word], rank: usize, n: usize, only_first: bool) -> u128 {
    let perms = permutations_flat(n);
    let inv = inverses_flat(&perms, n);
    let count = perms.len() / n;
    let letters: Vec<Vec<(usize, bool)>> =
        gens.iter().map(|g| g.letters().iter().map(|l| (l.gen(), l.is_inverse())).collect()).collect();
    let points = if only_first { 1 } else { n };
    sum_over_tuples(count, rank, |idx| {
        let mut fixed = 0;
        'points: for start in 0..points {
            for word in &letters {
                let mut p = start;
                for &(g, is_inv) in word {
                    let base = idx[g] * n;
                    p = if is_inv { inv[base + p] } else { perms[base + p] } as usize;
                }
                if p != start {
                    continue 'points;
                }
            }
            fixed += 1;
        }
        fixed
    })
}

fn phi_impl(gens: &[Word], rank: usize, n: usize, budget: u128, naive: bool) -> Result<BigRational> {
    check_words(gens, rank)?;
    let cost: usize = gens.iter().map(|g| g.len()).sum();
    let tuples = symmetric_tuples(n, rank, cost, budget, "exact enumeration over S_N^r (tuples * length)")?;
    let total = BigInt::from(tuples);
    Ok(if naive {
        BigRational::new(BigInt::from(joint_fixed_sum(gens, rank, n, false)), total)
    } else {
        // every point is equally likely to be fixed
        BigRational::new(BigInt::from(joint_fixed_sum(gens, rank, n, true)) * BigInt::from(n), total)
    })
}

/// `Tr_w(N)`: the expected number of fixed points of `w(σ_1, .., σ_r)` for
/// uniform `σ_i` in `S_N`, where `r = w.rank()`.
pub fn trw_exact(w: &Word, n: usize, budget: u128) -> Result<BigRational> {
    phi_impl(std::slice::from_ref(w), w.rank(), n, budget, false)
}

/// [`trw_exact`] by counting every fixed point of every tuple.
pub fn trw_exact_naive(w: &Word, n: usize, budget: u128) -> Result<BigRational> {
    phi_impl(std::slice::from_ref(w), w.rank(), n, budget, true)
}

/// Expected number of points fixed by all of `gens` under a uniform
/// homomorphism `F_rank -> S_N`.
pub fn phi_exact(gens: &[Word], rank: usize, n: usize, budget: u128) -> Result<BigRational> {
    phi_impl(gens, rank, n, budget, false)
}

pub fn phi_exact_naive(gens: &[Word], rank: usize, n: usize, budget: u128) -> Result<BigRational> {
    phi_impl(gens, rank, n, budget, true)
}

/// `Φ_{H,J}(N)` with `J` free of rank `k` and `H` given by words in a basis
/// of `J`.
pub fn phi_relative_exact(gens_in_j: &[Word], k: usize, n: usize, budget: u128) -> Result<BigRational> {
    phi_exact(gens_in_j, k, n, budget)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub samples: u64,
}

/// Samples per Monte Carlo shard.
pub const MC_SHARD: u64 = 1 << 14;

/// Monte Carlo estimate of `Tr_w(N)`.
///
/// Samples are split into shards of [`MC_SHARD`]; shard `s` draws from
/// `ChaCha8Rng::seed_from_u64(seed)` on stream `s`, and each sample is
/// `r` Fisher-Yates shuffles of `0..N` (rand 0.8 `SliceRandom::shuffle`).
/// Shard sums are integers merged exactly, so the result depends on
/// `(seed, samples)` only, not on the number of workers.
pub fn trw_monte_carlo(w: &Word, n: usize, samples: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if samples < 2 {
        return Err(Error::InvalidArgument("at least two samples are needed".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    let r = w.rank();
    let letters: Vec<(usize, bool)> = w.letters().iter().map(|l| (l.gen(), l.is_inverse())).collect();
    let shards = samples.div_ceil(MC_SHARD);
    let (sum, sum_sq) = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let here = MC_SHARD.min(samples - s * MC_SHARD);
            let mut tuple: Vec<Vec<u32>> = vec![(0..n as u32).collect(); r];
            let mut inv: Vec<Vec<u32>> = vec![vec![0; n]; r];
            let (mut acc, mut acc_sq) = (0u128, 0u128);
            for _ in 0..here {
                for (perm, inv) in tuple.iter_mut().zip(inv.iter_mut()) {
                    perm.iter_mut().enumerate().for_each(|(i, p)| *p = i as u32);
                    perm.shuffle(&mut rng);
                    for (i, &p) in perm.iter().enumerate() {
                        inv[p as usize] = i as u32;
                    }
                }
                let fixed = (0..n)
                    .filter(|&start| {
                        let mut p = start;
                        for &(g, is_inv) in &letters {
                            p = if is_inv { inv[g][p] } else { tuple[g][p] } as usize;
                        }
                        p == start
                    })
                    .count() as u128;
                acc += fixed;
                acc_sq += fixed * fixed;
            }
            (acc, acc_sq)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = samples as f64;
    let mean = sum as f64 / m;
    let var = ((sum_sq as f64) - (sum as f64) * mean) / (m - 1.0);
    Ok(MonteCarloEstimate { estimate: mean, standard_error: (var.max(0.0) / m).sqrt(), samples })
}

/// The JSON form of a Cayley table.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct CayleyJson {
    pub order: usize,
    pub table: Vec<Vec<usize>>,
    #[serde(default)]
    pub names: Option<Vec<String>>,
}

/// A conjugacy class of a [`FiniteGroupTable`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConjugacyClass {
    pub label: String,
    pub representative: usize,
    pub size: usize,
}

/// A finite group given by its multiplication table, identity at index 0.
#[derive(Clone, Debug)]
pub struct FiniteGroupTable {
    name: String,
    order: usize,
    table: Vec<u32>,
    names: Vec<String>,
    inverse: Vec<u32>,
    class_of: Vec<usize>,
    classes: Vec<ConjugacyClass>,
}

impl FiniteGroupTable {
    /// Validates the group axioms, reporting the first violation found.
    pub fn new(name: impl Into<String>, table: Vec<Vec<usize>>, names: Option<Vec<String>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidTable("empty table".into()));
        }
        if n > u32::MAX as usize {
            return Err(Error::InvalidTable("order too large".into()));
        }
        for (a, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidTable(format!("row {a} has length {}, expected {n}", row.len())));
            }
            if let Some((b, &v)) = row.iter().enumerate().find(|(_, &v)| v >= n) {
                return Err(Error::InvalidTable(format!("closure fails: {a}*{b} = {v} is not an element")));
            }
        }
        for (a, row) in table.iter().enumerate() {
            if table[0][a] != a || row[0] != a {
                return Err(Error::InvalidTable(format!("element 0 is not a two-sided identity (at {a})")));
            }
        }
        let flat: Vec<u32> = table.iter().flatten().map(|&v| v as u32).collect();
        let mul = |a: usize, b: usize| flat[a * n + b] as usize;
        let mut inverse = vec![0u32; n];
        for (a, slot) in inverse.iter_mut().enumerate() {
            let b = (0..n)
                .find(|&b| mul(a, b) == 0)
                .ok_or_else(|| Error::InvalidTable(format!("element {a} has no right inverse")))?;
            if mul(b, a) != 0 {
                return Err(Error::InvalidTable(format!("right inverse {b} of {a} is not a left inverse")));
            }
            *slot = b as u32;
        }
        for a in 0..n {
            for b in 0..n {
                let ab = mul(a, b);
                for c in 0..n {
                    if mul(ab, c) != mul(a, mul(b, c)) {
                        return Err(Error::InvalidTable(format!("associativity fails at ({a}, {b}, {c})")));
                    }
                }
            }
        }
        let names = match names {
            Some(v) if v.len() != n => {
                return Err(Error::InvalidTable(format!("{} names for {n} elements", v.len())));
            }
            Some(v) => v,
            None => (0..n).map(|i| format!("g{i}")).collect(),
        };
        let mut g = FiniteGroupTable {
            name: name.into(),
            order: n,
            table: flat,
            names,
            inverse,
            class_of: Vec::new(),
            classes: Vec::new(),
        };
        g.compute_classes(|g, rep| format!("class of {}", g.names[rep]));
        Ok(g)
    }

    pub fn from_json(name: impl Into<String>, text: &str) -> Result<Self> {
        let raw: CayleyJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidTable(format!("malformed JSON: {e}")))?;
        if raw.order != raw.table.len() {
            return Err(Error::InvalidTable(format!(
                "order {} but the table has {} rows",
                raw.order,
                raw.table.len()
            )));
        }
        FiniteGroupTable::new(name, raw.table, raw.names)
    }

    pub fn to_json(&self) -> CayleyJson {
        CayleyJson {
            order: self.order,
            table: (0..self.order).map(|a| (0..self.order).map(|b| self.mul(a, b)).collect()).collect(),
            names: Some(self.names.clone()),
        }
    }

    fn compute_classes(&mut self, label: impl Fn(&Self, usize) -> String) {
        let n = self.order;
        let mut class_of = vec![usize::MAX; n];
        let mut classes = Vec::new();
        for h in 0..n {
            if class_of[h] != usize::MAX {
                continue;
            }
            let id = classes.len();
            let mut size = 0;
            for g in 0..n {
                let c = self.mul(self.mul(self.inv(g), h), g);
                if class_of[c] == usize::MAX {
                    class_of[c] = id;
                    size += 1;
                }
            }
            classes.push(ConjugacyClass { label: String::new(), representative: h, size });
        }
        self.class_of = class_of;
        for c in classes.iter_mut() {
            c.label = label(self, c.representative);
        }
        self.classes = classes;
    }

    /// The cyclic group `C_n`.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("cyclic group of order 0".into()));
        }
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let names = (0..n).map(|a| if a == 0 { "e".into() } else { format!("a^{a}") }).collect();
        FiniteGroupTable::new(format!("C{n}"), table, Some(names))
    }

    /// The dihedral group of order `2n`: `r^i s^j` at index `i + n*j`.
    pub fn dihedral(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dihedral group of order 0".into()));
        }
        let idx = |i: usize, j: usize| i % n + n * j;
        let mut table = vec![vec![0; 2 * n]; 2 * n];
        for (a, row) in table.iter_mut().enumerate() {
            let (i, j) = (a % n, a / n);
            for (b, cell) in row.iter_mut().enumerate() {
                let (k, l) = (b % n, b / n);
                // r^i s^j r^k s^l = r^(i ± k) s^(j+l)
                let rot = if j == 0 { i + k } else { i + n - k };
                *cell = idx(rot, (j + l) % 2);
            }
        }
        let names = (0..2 * n)
            .map(|a| match (a % n, a / n) {
                (0, 0) => "e".to_string(),
                (i, 0) => format!("r^{i}"),
                (0, _) => "s".to_string(),
                (i, _) => format!("r^{i}s"),
            })
            .collect();
        FiniteGroupTable::new(format!("D{n}"), table, Some(names))
    }

    /// `S_n` as a table, elements in lexicographic one-line order, composed
    /// left to right; classes are labelled by cycle type.
    pub fn symmetric(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_SYMMETRIC_TABLE_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "symmetric group tables are built for 1 <= N <= {MAX_SYMMETRIC_TABLE_DEGREE}"
            )));
        }
        let perms = permutations_flat(n);
        let count = perms.len() / n;
        let index_of = |row: &[u8]| -> usize {
            // lexicographic rank
            let mut rank = 0;
            for i in 0..n {
                let smaller = row[i + 1..].iter().filter(|&&x| x < row[i]).count();
                rank = rank * (n - i) + smaller;
            }
            rank
        };
        let row = |i: usize| &perms[i * n..(i + 1) * n];
        let table: Vec<Vec<usize>> = (0..count)
            .into_par_iter()
            .map(|a| {
                (0..count)
                    .map(|b| {
                        let prod: Vec<u8> = row(a).iter().map(|&p| row(b)[p as usize]).collect();
                        index_of(&prod)
                    })
                    .collect()
            })
            .collect();
        let elements: Vec<Permutation> =
            (0..count).map(|i| Permutation::from_images(row(i).iter().map(|&p| p as usize).collect()).unwrap()).collect();
        let names = elements.iter().map(|p| p.to_string()).collect();
        // validation of a table this size is O(n!^3); it is a group by construction
        let flat: Vec<u32> = table.iter().flatten().map(|&v| v as u32).collect();
        let inverse = (0..count)
            .map(|a| (0..count).find(|&b| flat[a * count + b] == 0).unwrap() as u32)
            .collect();
        let mut g = FiniteGroupTable {
            name: format!("S{n}"),
            order: count,
            table: flat,
            names,
            inverse,
            class_of: Vec::new(),
            classes: Vec::new(),
        };
        g.compute_classes(|_, rep| elements[rep].cycle_type().partition_label());
        Ok(g)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b] as usize
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a] as usize
    }

    pub fn element_name(&self, a: usize) -> &str {
        &self.names[a]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn classes(&self) -> &[ConjugacyClass] {
        &self.classes
    }

    pub fn class_of(&self, a: usize) -> usize {
        self.class_of[a]
    }

    /// `w(g_1, .., g_r)`, multiplying left to right.
    pub fn evaluate(&self, w: &Word, tuple: &[usize]) -> usize {
        w.letters().iter().fold(0, |acc, l| {
            let g = tuple[l.gen()];
            self.mul(acc, if l.is_inverse() { self.inv(g) } else { g })
        })
    }

    /// Whether `gens` generate the whole group.
    pub fn generates(&self, gens: &[usize]) -> bool {
        let mut seen = vec![false; self.order];
        seen[0] = true;
        let mut stack = vec![0];
        let mut reached = 1;
        while let Some(a) = stack.pop() {
            for &g in gens {
                let b = self.mul(a, g);
                if !seen[b] {
                    seen[b] = true;
                    reached += 1;
                    stack.push(b);
                }
            }
        }
        reached == self.order
    }

    fn tuple_budget(&self, rank: usize, cost: usize, budget: u128, what: &str) -> Result<u128> {
        let tuples = (self.order as u128).checked_pow(rank as u32);
        let needed = tuples.and_then(|t| t.checked_mul(cost.max(1) as u128));
        match needed {
            Some(x) if x <= budget => Ok(tuples.expect("checked")),
            _ => Err(Error::budget(what, needed.unwrap_or(u128::MAX), budget)),
        }
    }

    /// For each element `h`, the number of tuples with `w(g_1..g_r) = h`.
    pub fn word_map_counts(&self, w: &Word, budget: u128) -> Result<Vec<u128>> {
        let r = w.rank();
        self.tuple_budget(r, w.len(), budget, "word map enumeration over G^r (tuples * length)")?;
        let n = self.order;
        let fold = |first: Option<usize>| -> Vec<u128> {
            let mut counts = vec![0u128; n];
            let mut idx = vec![0usize; r];
            if let Some(f) = first {
                idx[0] = f;
            }
            let lo = usize::from(first.is_some());
            loop {
                counts[self.evaluate(w, &idx)] += 1;
                let mut pos = r;
                loop {
                    if pos == lo {
                        return counts;
                    }
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] < n {
                        break;
                    }
                    idx[pos] = 0;
                }
            }
        };
        if r == 0 {
            return Ok(fold(None));
        }
        Ok((0..n).into_par_iter().map(|f| fold(Some(f))).reduce(
            || vec![0u128; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        ))
    }
}

/// Largest order at which element-level conjugation invariance is checked
/// before aggregating by class.
pub const INVARIANCE_CHECK_ORDER: usize = 24;

/// Probability of one conjugacy class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassMass {
    pub label: String,
    pub size: usize,
    pub count: u128,
    #[serde(serialize_with = "serialize_rational")]
    pub probability: BigRational,
}

/// The push-forward of the uniform measure under a word map, by class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MeasureTable {
    pub group: String,
    pub word: String,
    pub total: u128,
    pub classes: Vec<ClassMass>,
}

impl MeasureTable {
    pub fn probability(&self, label: &str) -> Option<&BigRational> {
        self.classes.iter().find(|c| c.label == label).map(|c| &c.probability)
    }

    /// Classes of positive probability.
    pub fn support(&self) -> impl Iterator<Item = &ClassMass> {
        self.classes.iter().filter(|c| c.count > 0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,size,count,probability,decimal\n");
        for c in &self.classes {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.label,
                c.size,
                c.count,
                c.probability,
                decimal_string(&c.probability, 15)
            );
        }
        out
    }
}

/// The `w`-measure on `group`, aggregated by conjugacy class.
pub fn word_measure_exact(w: &Word, group: &FiniteGroupTable, budget: u128) -> Result<MeasureTable> {
    let counts = group.word_map_counts(w, budget)?;
    if group.order() <= INVARIANCE_CHECK_ORDER {
        for h in 0..group.order() {
            for g in 0..group.order() {
                let c = group.mul(group.mul(group.inv(g), h), g);
                if counts[c] != counts[h] {
                    return Err(Error::Internal(format!(
                        "word measure is not conjugation invariant at {} and {}",
                        group.element_name(h),
                        group.element_name(c)
                    )));
                }
            }
        }
    }
    let total: u128 = counts.iter().sum();
    let mut class_counts = vec![0u128; group.classes().len()];
    for (h, &c) in counts.iter().enumerate() {
        class_counts[group.class_of(h)] += c;
    }
    let classes = group
        .classes()
        .iter()
        .zip(class_counts)
        .map(|(c, count)| ClassMass {
            label: c.label.clone(),
            size: c.size,
            count,
            probability: BigRational::new(BigInt::from(count), BigInt::from(total)),
        })
        .collect();
    Ok(MeasureTable { group: group.name().to_string(), word: w.to_string(), total, classes })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum MeasureComparison {
    Equal,
    Unequal {
        class: String,
        #[serde(serialize_with = "serialize_rational")]
        first: BigRational,
        #[serde(serialize_with = "serialize_rational")]
        second: BigRational,
    },
}

/// Compares the `w1`- and `w2`-measures on `group`.
///
/// The witness of inequality is the first class charged by exactly one of
/// the measures, if any, and otherwise the first class where they differ.
pub fn compare_measures(w1: &Word, w2: &Word, group: &FiniteGroupTable, budget: u128) -> Result<MeasureComparison> {
    let a = word_measure_exact(w1, group, budget)?;
    let b = word_measure_exact(w2, group, budget)?;
    let differing: Vec<(&ClassMass, &ClassMass)> =
        a.classes.iter().zip(&b.classes).filter(|(x, y)| x.probability != y.probability).collect();
    let pick = differing
        .iter()
        .find(|(x, y)| x.count == 0 || y.count == 0)
        .or(differing.first());
    Ok(match pick {
        None => MeasureComparison::Equal,
        Some((x, y)) => MeasureComparison::Unequal {
            class: x.label.clone(),
            first: x.probability.clone(),
            second: y.probability.clone(),
        },
    })
}

/// `{φ(w) : φ: F_r -> G surjective}` as element indices.
pub fn epi_image(w: &Word, group: &FiniteGroupTable, budget: u128) -> Result<BTreeSet<usize>> {
    let r = w.rank();
    let per_tuple = w.len() + group.order() * r.max(1);
    let tuples = group.tuple_budget(r, per_tuple, budget, "epimorphism enumeration over G^r")?;
    let n = group.order();
    let found: Vec<BTreeSet<usize>> = (0..tuples as usize)
        .into_par_iter()
        .fold(BTreeSet::new, |mut acc, code| {
            let mut tuple = vec![0usize; r];
            let mut c = code;
            for slot in tuple.iter_mut().rev() {
                *slot = c % n;
                c /= n;
            }
            if group.generates(&tuple) {
                acc.insert(group.evaluate(w, &tuple));
            }
            acc
        })
        .collect();
    Ok(found.into_iter().flatten().collect())
}

/// `Tr_w(N)` for each `N`, exactly.
pub fn trw_sweep(w: &Word, ns: &[usize], budget: u128) -> Result<Vec<(usize, BigRational)>> {
    ns.iter().map(|&n| Ok((n, trw_exact(w, n, budget)?))).collect()
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
