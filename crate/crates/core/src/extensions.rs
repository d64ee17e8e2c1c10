//! Free factors, algebraic extensions and primitivity rank.
//!
//! `M <=_ff J` is decided by rewriting `M` in a basis of `J` and running
//! Whitehead minimization on the resulting subgroup of `F_k`, `k = rank(J)`:
//! the subgroup is a free factor exactly when some representative of its
//! automorphism orbit has a cyclic core with `rank(M)` edges, i.e. a bouquet.
//!
//! Algebraic extensions of `H` are found among the folded quotients of the
//! core graph of `H`. A quotient `J` is algebraic over `H` unless some other
//! quotient `A < J` is a free factor of `J`; it suffices to test the `A` that
//! are themselves algebraic over `H`, because the free-factor closure of `H`
//! inside any proper free factor of `J` is again such a quotient.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stallings::{CoreGraph, DEFAULT_QUOTIENT_VERTEX_CAP};
use crate::words::{multiplier_moves, Word, WhiteheadMove};

/// Limits for the searches in this module.
#[derive(Clone, Copy, Debug)]
pub struct ExtensionConfig {
    /// Largest `rank(J)` for which `M <=_ff J` is decided by Whitehead search.
    pub rank_cap: usize,
    /// Largest core graph accepted by quotient enumeration.
    pub vertex_cap: usize,
    /// Largest number of equal-size graphs visited at one size level.
    pub plateau_budget: usize,
}

impl Default for ExtensionConfig {
    fn default() -> Self {
        ExtensionConfig { rank_cap: 6, vertex_cap: DEFAULT_QUOTIENT_VERTEX_CAP, plateau_budget: 20_000 }
    }
}

/// A primitivity rank: a positive integer or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pi {
    Finite(usize),
    Infinite,
}

impl Pi {
    pub fn finite(self) -> Option<usize> {
        match self {
            Pi::Finite(v) => Some(v),
            Pi::Infinite => None,
        }
    }
}

impl fmt::Display for Pi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pi::Finite(v) => write!(f, "{v}"),
            Pi::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Pi {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Pi::Finite(v) => s.serialize_u64(*v as u64),
            Pi::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Whether the subgroup of `F_rank` generated by `gens` is a free factor.
pub fn is_free_factor_of_free(gens: &[Word], rank: usize, cfg: &ExtensionConfig) -> Result<bool> {
    let m = CoreGraph::from_generators(gens, rank);
    whitehead_free_factor(&m, cfg)
}

fn whitehead_free_factor(m: &CoreGraph, cfg: &ExtensionConfig) -> Result<bool> {
    let k = m.ambient_rank();
    let target = m.rank();
    if target == 0 {
        return Ok(true);
    }
    // a free factor maps onto a direct summand of the abelianization
    let exponent_rows: Vec<Vec<i64>> = m
        .basis()
        .iter()
        .map(|b| {
            let mut row = vec![0i64; k];
            for l in b.letters() {
                row[l.gen()] += if l.is_inverse() { -1 } else { 1 };
            }
            row
        })
        .collect();
    if !extends_to_basis(exponent_rows) {
        return Ok(false);
    }
    if k > cfg.rank_cap {
        return Err(Error::budget("free-factor search (rank of the ambient group)", k as u128, cfg.rank_cap as u128));
    }
    let moves: Vec<WhiteheadMove> =
        multiplier_moves(k).into_iter().filter(|m| !m.multiplier_set().is_empty()).collect();
    let mut current = m.cyclic_normal_form();
    loop {
        let size = current.num_edges();
        if size == target {
            return Ok(true);
        }
        let mut seen: HashSet<Vec<u8>> = HashSet::new();
        seen.insert(current.canonical_key().to_vec());
        let mut queue = vec![current.clone()];
        let mut head = 0;
        let mut smaller = None;
        'plateau: while head < queue.len() {
            let g = queue[head].clone();
            head += 1;
            let basis = g.basis();
            let images: Vec<(usize, CoreGraph)> = moves
                .par_iter()
                .filter_map(|mv| {
                    let gens: Vec<Word> =
                        basis.iter().map(|b| mv.apply(b).expect("move rank matches")).collect();
                    let img = CoreGraph::from_generators(&gens, k);
                    let s = img.cyclic_core_size();
                    (s <= size).then(|| (s, img.cyclic_normal_form()))
                })
                .collect();
            for (s, img) in images {
                if s < size {
                    smaller = Some(img);
                    break 'plateau;
                }
                if s == size && seen.insert(img.canonical_key().to_vec()) {
                    if seen.len() > cfg.plateau_budget {
                        return Err(Error::budget(
                            "free-factor search (plateau states)",
                            seen.len() as u128,
                            cfg.plateau_budget as u128,
                        ));
                    }
                    queue.push(img);
                }
            }
        }
        match smaller {
            Some(g) => current = g,
            None => return Ok(false),
        }
    }
}

/// Whether the rows extend to a basis of `Z^k`, i.e. the matrix has full row
/// rank and every elementary divisor equals one.
pub fn extends_to_basis(mut rows: Vec<Vec<i64>>) -> bool {
    let m = rows.len();
    let k = rows.first().map_or(0, |r| r.len());
    if m > k {
        return false;
    }
    // diagonalize; each pivot must end up a unit
    for p in 0..m {
        loop {
            let pivot = (p..m)
                .flat_map(|i| (p..k).map(move |j| (i, j)))
                .filter(|&(i, j)| rows[i][j] != 0)
                .min_by_key(|&(i, j)| rows[i][j].abs());
            let Some((pi, pj)) = pivot else { return false };
            rows.swap(p, pi);
            for r in rows.iter_mut() {
                r.swap(p, pj);
            }
            let a = rows[p][p];
            let mut done = true;
            let (top, rest) = rows.split_at_mut(p + 1);
            for row in rest.iter_mut().take(m - p - 1) {
                let q = row[p] / a;
                if q != 0 {
                    for (x, &y) in row[p..k].iter_mut().zip(&top[p][p..k]) {
                        *x -= q * y;
                    }
                }
                done &= row[p] == 0;
            }
            for j in p + 1..k {
                let q = rows[p][j] / a;
                if q != 0 {
                    for r in rows.iter_mut().skip(p) {
                        r[j] -= q * r[p];
                    }
                }
                done &= rows[p][j] == 0;
            }
            if done {
                if rows[p][p].abs() == 1 {
                    break;
                }
                // the pivot must divide the rest, else fold a row into it
                let bad = (p + 1..m).find(|&i| (p + 1..k).any(|j| rows[i][j] % a != 0));
                match bad {
                    Some(i) => {
                        let row = rows[i].clone();
                        for (x, y) in rows[p].iter_mut().zip(row) {
                            *x += y;
                        }
                    }
                    None => return false,
                }
            }
        }
    }
    true
}

/// Classical Whitehead test on a single word: minimizes cyclic length and
/// accepts iff length one is reached.
pub fn is_primitive_word(w: &Word, rank: usize, cfg: &ExtensionConfig) -> Result<bool> {
    if rank > cfg.rank_cap {
        return Err(Error::budget("primitivity search (rank)", rank as u128, cfg.rank_cap as u128));
    }
    let cyc_len = |w: &Word| w.cyclic_reduce().0.len();
    let moves = multiplier_moves(rank);
    let mut current = w.with_rank(rank)?.cyclic_reduce().0;
    loop {
        let n = current.len();
        if n <= 1 {
            return Ok(n == 1);
        }
        let mut seen: HashSet<Word> = HashSet::new();
        seen.insert(current.clone());
        let mut queue = vec![current.clone()];
        let mut head = 0;
        let mut smaller = None;
        'plateau: while head < queue.len() {
            let u = queue[head].clone();
            head += 1;
            for mv in &moves {
                let img = mv.apply(&u)?.cyclic_reduce().0;
                let s = cyc_len(&img);
                if s < n {
                    smaller = Some(img);
                    break 'plateau;
                }
                // cyclic permutations are identified by rotating to the least rotation
                let img = least_rotation(&img);
                if s == n && seen.insert(img.clone()) {
                    if seen.len() > cfg.plateau_budget {
                        return Err(Error::budget("primitivity search (plateau)", seen.len() as u128, cfg.plateau_budget as u128));
                    }
                    queue.push(img);
                }
            }
        }
        match smaller {
            Some(u) => current = u,
            None => return Ok(false),
        }
    }
}

fn least_rotation(w: &Word) -> Word {
    let l = w.letters();
    let n = l.len();
    (0..n.max(1))
        .map(|i| l[i.min(n)..].iter().chain(&l[..i.min(n)]).copied().collect::<Vec<_>>())
        .min()
        .map(|letters| Word::from_letters(w.rank(), letters).expect("same rank"))
        .unwrap_or_else(|| w.clone())
}

/// `M <=_ff J`, for `M <= J`.
pub fn is_free_factor(m: &CoreGraph, j: &CoreGraph, cfg: &ExtensionConfig) -> Result<bool> {
    if !m.subgroup_leq(j) {
        return Err(Error::InvalidArgument("free-factor test needs M <= J".into()));
    }
    if m == j || m.rank() == 0 {
        return Ok(true);
    }
    if m.rank() >= j.rank() {
        // a free factor of full rank is the whole group
        return Ok(false);
    }
    let k = j.rank();
    let gens: Vec<Word> = m
        .basis()
        .iter()
        .map(|b| j.express(b).ok_or_else(|| Error::Internal("basis element of M not in J".into())))
        .collect::<Result<_>>()?;
    let inner = CoreGraph::from_generators(&gens, k);
    whitehead_free_factor(&inner, cfg)
}

/// The algebraic-extension poset of a subgroup.
#[derive(Clone, Debug)]
pub struct ExtensionPoset {
    base: CoreGraph,
    base_index: usize,
    nodes: Vec<CoreGraph>,
    leq: Vec<Vec<bool>>,
    ff: BTreeMap<(usize, usize), Option<bool>>,
    algebraic: Vec<bool>,
}

/// All quotients of `H`, with inclusion, algebraicity and the free-factor
/// marks that algebraicity depends on.
///
/// A node `J` is algebraic unless some algebraic `A < J` satisfies
/// `A <=_ff J`, so only pairs with an algebraic bottom are decided here; the
/// remaining comparable pairs are filled by [`ExtensionPoset::decide_all_marks`].
/// A needed pair beyond `cfg.rank_cap` is a budget error.
pub fn algebraic_extensions(h: &CoreGraph, cfg: &ExtensionConfig) -> Result<ExtensionPoset> {
    let nodes = h.quotients(cfg.vertex_cap)?;
    let n = nodes.len();
    let base_index = nodes
        .iter()
        .position(|g| g == h)
        .ok_or_else(|| Error::Internal("quotient set lost the base".into()))?;
    let leq: Vec<Vec<bool>> = nodes
        .par_iter()
        .map(|a| nodes.iter().map(|b| a.subgroup_leq(b)).collect())
        .collect();

    // quotients have at most as many vertices as what they are quotients of
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(nodes[i].num_vertices()));
    let mut algebraic = vec![false; n];
    let mut ff = BTreeMap::new();
    for &j in &order {
        let below: Vec<usize> = order.iter().copied().filter(|&a| a != j && algebraic[a] && leq[a][j]).collect();
        let marks: Vec<bool> =
            below.par_iter().map(|&a| is_free_factor(&nodes[a], &nodes[j], cfg)).collect::<Result<_>>()?;
        algebraic[j] = !marks.contains(&true);
        for (a, m) in below.into_iter().zip(marks) {
            ff.insert((a, j), Some(m));
        }
    }
    if !algebraic[base_index] {
        return Err(Error::Internal("base is not algebraic over itself".into()));
    }
    Ok(ExtensionPoset { base: h.clone(), base_index, nodes, leq, ff, algebraic })
}

impl ExtensionPoset {
    pub fn base(&self) -> &CoreGraph {
        &self.base
    }

    pub fn base_index(&self) -> usize {
        self.base_index
    }

    pub fn nodes(&self) -> &[CoreGraph] {
        &self.nodes
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i][j]
    }

    pub fn is_algebraic(&self, i: usize) -> bool {
        self.algebraic[i]
    }

    /// Decides the free-factor mark of every comparable pair not yet decided.
    /// Pairs beyond the rank cap stay `None`.
    pub fn decide_all_marks(&mut self, cfg: &ExtensionConfig) -> Result<()> {
        let n = self.nodes.len();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && self.leq[i][j] && !self.ff.contains_key(&(i, j)))
            .collect();
        let marks: Vec<Option<bool>> = pairs
            .par_iter()
            .map(|&(i, j)| match is_free_factor(&self.nodes[i], &self.nodes[j], cfg) {
                Ok(b) => Ok(Some(b)),
                Err(Error::BudgetExceeded { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;
        self.ff.extend(pairs.into_iter().zip(marks));
        Ok(())
    }

    /// `nodes[i] <=_ff nodes[j]` when decided; `None` for incomparable or
    /// undecided pairs.
    pub fn free_factor_mark(&self, i: usize, j: usize) -> Option<bool> {
        if i == j {
            return Some(true);
        }
        self.ff.get(&(i, j)).copied().flatten()
    }

    /// Indices of the algebraic extensions, in node order.
    pub fn algebraic_indices(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.algebraic[i]).collect()
    }

    pub fn algebraic_extensions(&self) -> Vec<&CoreGraph> {
        self.algebraic_indices().into_iter().map(|i| &self.nodes[i]).collect()
    }

    /// Smallest rank of a proper algebraic extension, with the number of
    /// proper algebraic extensions of that rank.
    pub fn pi(&self) -> (Pi, usize) {
        min_rank_count(
            self.algebraic_indices()
                .into_iter()
                .filter(|&i| i != self.base_index)
                .map(|i| self.nodes[i].rank()),
        )
    }

    /// Cover relations of the inclusion order among algebraic nodes (which
    /// coincides with `<=_alg` there).
    pub fn hasse_edges(&self) -> Vec<(usize, usize)> {
        let alg = self.algebraic_indices();
        let mut edges = Vec::new();
        for &a in &alg {
            for &b in &alg {
                if a == b || !self.leq[a][b] {
                    continue;
                }
                let covered = alg.iter().any(|&c| c != a && c != b && self.leq[a][c] && self.leq[c][b]);
                if !covered {
                    edges.push((a, b));
                }
            }
        }
        edges
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Node {
            index: usize,
            key: String,
            rank: usize,
            vertices: usize,
            basis: Vec<String>,
            algebraic: bool,
        }
        #[derive(Serialize)]
        struct Edge {
            from: usize,
            to: usize,
            free_factor: Option<bool>,
        }
        let nodes: Vec<Node> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, g)| Node {
                index: i,
                key: g.key_hex(),
                rank: g.rank(),
                vertices: g.num_vertices(),
                basis: g.basis().iter().map(|w| w.to_string()).collect(),
                algebraic: self.algebraic[i],
            })
            .collect();
        let n = self.nodes.len();
        let edges: Vec<Edge> = (0..n)
            .flat_map(|from| (0..n).map(move |to| (from, to)))
            .filter(|&(from, to)| from != to && self.leq[from][to])
            .map(|(from, to)| Edge { from, to, free_factor: self.free_factor_mark(from, to) })
            .collect();
        let (pi, c) = self.pi();
        serde_json::json!({
            "base": self.base_index,
            "pi": pi,
            "C": c,
            "nodes": nodes,
            "edges": edges,
        })
    }

    /// Hasse diagram of the algebraic extensions in Graphviz form.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph algebraic_extensions {\n  rankdir=BT;\n");
        for i in self.algebraic_indices() {
            let g = &self.nodes[i];
            let basis: Vec<String> = g.basis().iter().map(|w| w.to_string()).collect();
            let shape = if i == self.base_index { "doubleoctagon" } else { "box" };
            s.push_str(&format!(
                "  n{i} [shape={shape}, label=\"<{}>\\nrank {}\"];\n",
                basis.join(", "),
                g.rank()
            ));
        }
        for (a, b) in self.hasse_edges() {
            s.push_str(&format!("  n{a} -> n{b};\n"));
        }
        s.push_str("}\n");
        s
    }
}

fn min_rank_count(ranks: impl Iterator<Item = usize>) -> (Pi, usize) {
    let ranks: Vec<usize> = ranks.collect();
    match ranks.iter().min() {
        None => (Pi::Infinite, 0),
        Some(&m) => (Pi::Finite(m), ranks.iter().filter(|&&r| r == m).count()),
    }
}

/// Primitivity rank of a subgroup and the number `C` of proper algebraic
/// extensions attaining it.
pub fn pi(h: &CoreGraph, cfg: &ExtensionConfig) -> Result<(Pi, usize)> {
    Ok(algebraic_extensions(h, cfg)?.pi())
}

pub fn pi_of_word(w: &Word, cfg: &ExtensionConfig) -> Result<(Pi, usize)> {
    pi(&CoreGraph::from_generators(std::slice::from_ref(w), w.rank().max(1)), cfg)
}

/// The unique `A` with `H <=_alg A <=_ff J`.
pub fn ff_closure(h: &CoreGraph, j: &CoreGraph, cfg: &ExtensionConfig) -> Result<CoreGraph> {
    if !h.subgroup_leq(j) {
        return Err(Error::InvalidArgument("free-factor closure needs H <= J".into()));
    }
    let mut candidates: Vec<CoreGraph> = vec![j.clone()];
    for a in h.quotients(cfg.vertex_cap)? {
        if a != *j && a.subgroup_leq(j) && is_free_factor(&a, j, cfg)? {
            candidates.push(a);
        }
    }
    let minimal: Vec<&CoreGraph> = candidates
        .iter()
        .filter(|a| !candidates.iter().any(|b| b != *a && b.subgroup_leq(a)))
        .collect();
    match minimal.as_slice() {
        [a] => Ok((*a).clone()),
        _ => Err(Error::Internal(format!("{} minimal free-factor candidates", minimal.len()))),
    }
}

/// Result of [`pi_iota`].
#[derive(Clone, Debug, Serialize)]
pub struct PiIota {
    pub value: Pi,
    pub count: usize,
    /// Ranks of all algebraic extensions of the image not inside the image of `J`.
    pub outside_ranks: Vec<usize>,
    /// Whether the image of `J` is a free factor of the ambient group.
    pub image_is_free_factor: bool,
}

/// Relative primitivity rank of `H <=_alg F_k` under the embedding
/// `x_i -> images[i]` into `F_r`.
pub fn pi_iota(h: &CoreGraph, k: usize, images: &[Word], cfg: &ExtensionConfig) -> Result<PiIota> {
    if images.len() != k {
        return Err(Error::ArityMismatch { expected: k, got: images.len() });
    }
    let r = images.iter().map(|w| w.rank()).max().unwrap_or(0).max(1);
    let images: Vec<Word> = images.iter().map(|w| w.with_rank(r)).collect::<Result<_>>()?;
    let image_j = CoreGraph::from_generators(&images, r);
    if image_j.rank() != k {
        return Err(Error::Hypothesis {
            name: "images free",
            detail: format!("the {k} images generate a subgroup of rank {}", image_j.rank()),
        });
    }
    let h = h.with_ambient_rank(k)?;
    let fk = CoreGraph::rose(k);
    if ff_closure(&h, &fk, cfg)? != fk {
        return Err(Error::Hypothesis {
            name: "H algebraic in F_k",
            detail: "H lies in a proper free factor of F_k".into(),
        });
    }
    let image_h_gens: Vec<Word> =
        h.basis().iter().map(|b| b.substitute(&images)).collect::<Result<_>>()?;
    let image_h = CoreGraph::from_generators(&image_h_gens, r);
    let poset = algebraic_extensions(&image_h, cfg)?;
    let outside: Vec<usize> = poset
        .algebraic_indices()
        .into_iter()
        .filter(|&i| !poset.nodes()[i].subgroup_leq(&image_j))
        .map(|i| poset.nodes()[i].rank())
        .collect();
    let image_is_free_factor = is_free_factor(&image_j, &CoreGraph::rose(r), cfg)?;
    let (value, count) = min_rank_count(outside.iter().copied());
    if image_is_free_factor != (value == Pi::Infinite) {
        return Err(Error::Internal(format!(
            "image free factor = {image_is_free_factor} but relative rank = {value}"
        )));
    }
    let mut outside_ranks = outside;
    outside_ranks.sort_unstable();
    Ok(PiIota { value, count, outside_ranks, image_is_free_factor })
}

/// Whether `<w>` is algebraic in `F_k` (`w` not in a proper free factor).
pub fn is_algebraic_in_free(w: &Word, k: usize, cfg: &ExtensionConfig) -> Result<bool> {
    let h = CoreGraph::from_generators(std::slice::from_ref(&w.with_rank(k)?), k);
    let fk = CoreGraph::rose(k);
    Ok(ff_closure(&h, &fk, cfg)? == fk)
}

/// Keys of the algebraic extensions, for comparing posets.
pub fn algebraic_keys(p: &ExtensionPoset) -> BTreeSet<Vec<u8>> {
    p.algebraic_extensions().into_iter().map(|g| g.canonical_key().to_vec()).collect()
}
