//! Stallings core graphs of finitely generated subgroups of `F_r`.
//!
//! A [`CoreGraph`] is always folded, pruned and stored in canonical vertex
//! order: vertex 0 is the base and the remaining vertices are numbered in the
//! order a breadth-first search from the base discovers them, scanning labels
//! in increasing order and, for each label, the outgoing edge before the
//! incoming one. Two graphs are based-labeled isomorphic exactly when their
//! canonical keys agree.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::words::{Letter, Word};

const NONE: u32 = u32::MAX;

/// Default vertex cap for [`CoreGraph::quotients`].
pub const DEFAULT_QUOTIENT_VERTEX_CAP: usize = 12;

/// A labeled based digraph that may not be folded yet. Vertex 0 is the base.
#[derive(Clone, Debug)]
pub struct PreGraph {
    rank: usize,
    num_vertices: usize,
    edges: Vec<(u32, u8, u32)>,
}

impl PreGraph {
    pub fn new(rank: usize) -> PreGraph {
        PreGraph { rank, num_vertices: 1, edges: Vec::new() }
    }

    pub fn add_vertex(&mut self) -> usize {
        self.num_vertices += 1;
        self.num_vertices - 1
    }

    /// Adds `src --label--> dst`; `label` is a 0-based generator index.
    pub fn add_edge(&mut self, src: usize, label: usize, dst: usize) {
        assert!(src < self.num_vertices && dst < self.num_vertices && label < self.rank);
        self.edges.push((src as u32, label as u8, dst as u32));
    }

    /// Adds a closed path at the base spelling `w`.
    pub fn add_loop(&mut self, w: &Word) {
        let n = w.len();
        let mut cur = 0usize;
        for (i, l) in w.letters().iter().enumerate() {
            let next = if i + 1 == n { 0 } else { self.add_vertex() };
            if l.is_inverse() {
                self.add_edge(next, l.gen(), cur);
            } else {
                self.add_edge(cur, l.gen(), next);
            }
            cur = next;
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn edges(&self) -> &[(u32, u8, u32)] {
        &self.edges
    }

    /// Folds, prunes and canonicalizes.
    pub fn fold(&self) -> CoreGraph {
        let mut dsu = Dsu::new(self.num_vertices);
        let r = self.rank;
        let mut out_t = vec![NONE; self.num_vertices * r];
        let mut in_t = vec![NONE; self.num_vertices * r];
        loop {
            let mut changed = false;
            out_t.iter_mut().for_each(|x| *x = NONE);
            in_t.iter_mut().for_each(|x| *x = NONE);
            for &(u, l, v) in &self.edges {
                let (ru, rv) = (dsu.find(u), dsu.find(v));
                let o = ru as usize * r + l as usize;
                if out_t[o] == NONE {
                    out_t[o] = rv;
                } else if dsu.find(out_t[o]) != rv {
                    dsu.union(out_t[o], rv);
                    changed = true;
                }
                let (ru, rv) = (dsu.find(u), dsu.find(v));
                let i = rv as usize * r + l as usize;
                if in_t[i] == NONE {
                    in_t[i] = ru;
                } else if dsu.find(in_t[i]) != ru {
                    dsu.union(in_t[i], ru);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut edges: Vec<(u32, u8, u32)> =
            self.edges.iter().map(|&(u, l, v)| (dsu.find(u), l, dsu.find(v))).collect();
        edges.sort_unstable();
        edges.dedup();
        CoreGraph::from_folded_edges(self.rank, self.num_vertices, dsu.find(0), &edges)
    }

    /// Folds one elementary identification at a time. `choose(k)` picks which
    /// of the `k` currently available folds to perform next.
    pub fn fold_stepwise(&self, choose: &mut dyn FnMut(usize) -> usize) -> CoreGraph {
        let mut edges = self.edges.clone();
        let mut base = 0u32;
        loop {
            let mut candidates: Vec<(u32, u32)> = Vec::new();
            for i in 0..edges.len() {
                for j in i + 1..edges.len() {
                    let (a, b) = (edges[i], edges[j]);
                    if a.1 != b.1 {
                        continue;
                    }
                    if a.0 == b.0 {
                        candidates.push((a.2, b.2));
                    } else if a.2 == b.2 {
                        candidates.push((a.0, b.0));
                    }
                }
            }
            if candidates.is_empty() {
                break;
            }
            let (keep, gone) = candidates[choose(candidates.len())];
            let (keep, gone) = if gone == base { (gone, keep) } else { (keep, gone) };
            for e in edges.iter_mut() {
                if e.0 == gone {
                    e.0 = keep;
                }
                if e.2 == gone {
                    e.2 = keep;
                }
            }
            if base == gone {
                base = keep;
            }
            edges.sort_unstable();
            edges.dedup();
        }
        CoreGraph::from_folded_edges(self.rank, self.num_vertices, base, &edges)
    }
}

struct Dsu {
    parent: Vec<u32>,
}

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Folded, pruned Stallings core graph in canonical vertex order.
#[derive(Clone, Debug)]
pub struct CoreGraph {
    rank: usize,
    n: usize,
    out: Vec<u32>,
    inc: Vec<u32>,
    key: Vec<u8>,
}

impl PartialEq for CoreGraph {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for CoreGraph {}

impl std::hash::Hash for CoreGraph {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key.hash(state)
    }
}

impl CoreGraph {
    /// Builds from an already folded edge list on vertices `0..n_hint`; keeps
    /// the component of `base`, prunes hanging trees and canonicalizes.
    fn from_folded_edges(rank: usize, n_hint: usize, base: u32, edges: &[(u32, u8, u32)]) -> CoreGraph {
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_hint];
        let mut alive = vec![true; edges.len()];
        for (i, &(u, _, v)) in edges.iter().enumerate() {
            adj[u as usize].push((i, v as usize));
            if u != v {
                adj[v as usize].push((i, u as usize));
            }
        }
        let mut degree: Vec<usize> = vec![0; n_hint];
        for &(u, _, v) in edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let base = base as usize;
        let mut queue: VecDeque<usize> =
            (0..n_hint).filter(|&v| v != base && degree[v] == 1).collect();
        while let Some(v) = queue.pop_front() {
            if degree[v] != 1 {
                continue;
            }
            for &(e, other) in &adj[v] {
                if alive[e] {
                    alive[e] = false;
                    degree[v] -= 1;
                    degree[other] -= 1;
                    if other != base && degree[other] == 1 {
                        queue.push_back(other);
                    }
                }
            }
        }
        let kept: Vec<(u32, u8, u32)> =
            edges.iter().zip(&alive).filter(|(_, &a)| a).map(|(&e, _)| e).collect();
        canonicalize(rank, n_hint, base, &kept)
    }

    /// Core graph of the subgroup generated by `gens`.
    pub fn from_generators(gens: &[Word], rank: usize) -> CoreGraph {
        let mut pre = PreGraph::new(rank);
        for g in gens {
            assert!(g.support_rank() <= rank, "generator {g} exceeds rank {rank}");
            pre.add_loop(g);
        }
        pre.fold()
    }

    /// The trivial subgroup: one base vertex, no edges.
    pub fn trivial(rank: usize) -> CoreGraph {
        CoreGraph::from_generators(&[], rank)
    }

    /// The bouquet of `rank` loops, i.e. the whole free group.
    pub fn rose(rank: usize) -> CoreGraph {
        CoreGraph::from_generators(&Word::basis(rank), rank)
    }

    pub fn ambient_rank(&self) -> usize {
        self.rank
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.out.iter().filter(|&&t| t != NONE).count()
    }

    /// Rank of the subgroup, `|E| - |V| + 1`.
    pub fn rank(&self) -> usize {
        self.num_edges() + 1 - self.n
    }

    pub fn canonical_key(&self) -> &[u8] {
        &self.key
    }

    pub fn key_hex(&self) -> String {
        self.key.iter().fold(String::with_capacity(2 * self.key.len()), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn out_edge(&self, v: usize, label: usize) -> Option<usize> {
        let t = self.out[v * self.rank + label];
        (t != NONE).then_some(t as usize)
    }

    pub fn in_edge(&self, v: usize, label: usize) -> Option<usize> {
        let t = self.inc[v * self.rank + label];
        (t != NONE).then_some(t as usize)
    }

    /// All edges `(src, label, dst)` in canonical order.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut e = Vec::new();
        for v in 0..self.n {
            for l in 0..self.rank {
                if let Some(t) = self.out_edge(v, l) {
                    e.push((v, l, t));
                }
            }
        }
        e
    }

    /// Generator labels that appear on some edge.
    pub fn labels(&self) -> Vec<usize> {
        (0..self.rank).filter(|&l| (0..self.n).any(|v| self.out_edge(v, l).is_some())).collect()
    }

    /// Same graph viewed inside a free group of a different rank.
    pub fn with_ambient_rank(&self, rank: usize) -> Result<CoreGraph> {
        if self.labels().iter().any(|&l| l >= rank) {
            return Err(Error::RankMismatch(format!("graph uses labels beyond rank {rank}")));
        }
        let edges: Vec<_> = self.edges().into_iter().map(|(u, l, v)| (u as u32, l as u8, v as u32)).collect();
        Ok(canonicalize(rank, self.n, 0, &edges))
    }

    fn step(&self, v: usize, l: Letter) -> Option<usize> {
        if l.is_inverse() {
            self.in_edge(v, l.gen())
        } else {
            self.out_edge(v, l.gen())
        }
    }

    /// Follows `w` from `start`; `None` if the path leaves the graph.
    pub fn trace_from(&self, start: usize, w: &Word) -> Option<usize> {
        w.letters().iter().try_fold(start, |v, &l| {
            if l.gen() >= self.rank {
                None
            } else {
                self.step(v, l)
            }
        })
    }

    /// Membership of `w` in the subgroup.
    pub fn contains(&self, w: &Word) -> bool {
        self.trace_from(0, w) == Some(0)
    }

    /// The unique base- and label-preserving morphism into `other`, if any.
    pub fn morphism_to(&self, other: &CoreGraph) -> Option<Vec<usize>> {
        let mut image = vec![usize::MAX; self.n];
        image[0] = 0;
        for v in 0..self.n {
            let iv = image[v];
            debug_assert!(iv != usize::MAX);
            for l in 0..self.rank {
                for (mine, theirs) in [
                    (self.out_edge(v, l), (l < other.rank).then(|| other.out_edge(iv, l)).flatten()),
                    (self.in_edge(v, l), (l < other.rank).then(|| other.in_edge(iv, l)).flatten()),
                ] {
                    if let Some(u) = mine {
                        let t = theirs?;
                        if image[u] == usize::MAX {
                            image[u] = t;
                        } else if image[u] != t {
                            return None;
                        }
                    }
                }
            }
        }
        Some(image)
    }

    /// `self <= other` as subgroups.
    pub fn subgroup_leq(&self, other: &CoreGraph) -> bool {
        self.morphism_to(other).is_some()
    }

    /// Spanning tree data: tree path words from the base and the ordered list
    /// of non-tree edges (each one a basis element).
    fn spanning_tree(&self) -> (Vec<Word>, Vec<(usize, usize, usize)>) {
        let mut paths: Vec<Option<Vec<Letter>>> = vec![None; self.n];
        let mut tree_edge = vec![false; self.n * self.rank];
        paths[0] = Some(Vec::new());
        for v in 0..self.n {
            let pv = paths[v].clone().expect("canonical order is BFS order");
            for l in 0..self.rank {
                if let Some(u) = self.out_edge(v, l) {
                    if paths[u].is_none() {
                        let mut p = pv.clone();
                        p.push(Letter::new(l, false));
                        paths[u] = Some(p);
                        tree_edge[v * self.rank + l] = true;
                    }
                }
                if let Some(u) = self.in_edge(v, l) {
                    if paths[u].is_none() {
                        let mut p = pv.clone();
                        p.push(Letter::new(l, true));
                        paths[u] = Some(p);
                        tree_edge[u * self.rank + l] = true;
                    }
                }
            }
        }
        let paths: Vec<Word> = paths
            .into_iter()
            .map(|p| Word::from_letters(self.rank, p.expect("connected")).expect("labels in range"))
            .collect();
        let extra = self.edges().into_iter().filter(|&(u, l, _)| !tree_edge[u * self.rank + l]).collect();
        (paths, extra)
    }

    /// Free basis read off the breadth-first spanning tree.
    pub fn basis(&self) -> Vec<Word> {
        let (paths, extra) = self.spanning_tree();
        extra
            .into_iter()
            .map(|(u, l, v)| {
                paths[u].multiply(&Word::generator(l, self.rank)).multiply(&paths[v].invert())
            })
            .collect()
    }

    /// Rewrites an element of the subgroup in terms of [`CoreGraph::basis`];
    /// the result lives in `F_k` with `k = self.rank()`.
    pub fn express(&self, w: &Word) -> Option<Word> {
        let (_, extra) = self.spanning_tree();
        let mut index = vec![usize::MAX; self.n * self.rank];
        for (i, &(u, l, _)) in extra.iter().enumerate() {
            index[u * self.rank + l] = i;
        }
        let k = extra.len();
        let mut out = Vec::new();
        let mut v = 0usize;
        for &l in w.letters() {
            if l.gen() >= self.rank {
                return None;
            }
            let (src, dst) = if l.is_inverse() {
                let s = self.in_edge(v, l.gen())?;
                (s, v)
            } else {
                (v, self.out_edge(v, l.gen())?)
            };
            let i = index[src * self.rank + l.gen()];
            if i != usize::MAX {
                out.push(Letter::new(i, l.is_inverse()));
            }
            v = if l.is_inverse() { src } else { dst };
        }
        if v != 0 {
            return None;
        }
        Some(Word::from_letters(k, out).expect("basis index below rank"))
    }

    /// Edges of the cyclic core (the base is pruned too). Conjugation
    /// invariant; used as the size in Whitehead minimization.
    pub fn cyclic_core_size(&self) -> usize {
        let mut degree = vec![0usize; self.n];
        let mut edges = 0;
        for v in 0..self.n {
            for l in 0..self.rank {
                if let Some(t) = self.out_edge(v, l) {
                    degree[v] += 1;
                    degree[t] += 1;
                    edges += 1;
                }
            }
        }
        let mut stack: Vec<usize> = (0..self.n).filter(|&v| degree[v] == 1).collect();
        while let Some(v) = stack.pop() {
            if degree[v] != 1 {
                continue;
            }
            // the single remaining edge at v
            let other = (0..self.rank)
                .flat_map(|l| [self.out_edge(v, l), self.in_edge(v, l)])
                .flatten()
                .find(|&u| degree[u] > 0 && u != v);
            let Some(u) = other else { continue };
            degree[v] = 0;
            degree[u] -= 1;
            edges -= 1;
            if degree[u] == 1 {
                stack.push(u);
            }
        }
        edges
    }

    /// The cyclic core, rebased at the vertex giving the smallest key. Two
    /// subgroups are conjugate exactly when these agree.
    pub fn cyclic_normal_form(&self) -> CoreGraph {
        let edges = self.edges();
        let mut degree = vec![0usize; self.n];
        for &(u, _, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut alive = vec![true; edges.len()];
        let mut changed = true;
        while changed {
            changed = false;
            for (i, &(u, _, v)) in edges.iter().enumerate() {
                if alive[i] && u != v && (degree[u] == 1 || degree[v] == 1) {
                    alive[i] = false;
                    degree[u] -= 1;
                    degree[v] -= 1;
                    changed = true;
                }
            }
        }
        let kept: Vec<(u32, u8, u32)> = edges
            .iter()
            .zip(&alive)
            .filter(|(_, &a)| a)
            .map(|(&(u, l, v), _)| (u as u32, l as u8, v as u32))
            .collect();
        if kept.is_empty() {
            return CoreGraph::trivial(self.rank);
        }
        (0..self.n)
            .filter(|&v| degree[v] > 0)
            .map(|v| canonicalize(self.rank, self.n, v, &kept))
            .min_by(|a, b| a.key.cmp(&b.key))
            .expect("nonempty core")
    }

    /// Every folded quotient of this graph by a vertex identification,
    /// deduplicated and sorted by (rank, vertex count, key). Always contains
    /// `self` and the bouquet on the labels that occur.
    ///
    /// Explores single identifications from each graph already found; every
    /// partition quotient is reached this way because folding is confluent.
    pub fn quotients(&self, vertex_cap: usize) -> Result<Vec<CoreGraph>> {
        if self.n > vertex_cap {
            return Err(Error::budget("quotient enumeration (vertices)", self.n as u128, vertex_cap as u128));
        }
        let mut seen: BTreeMap<Vec<u8>, CoreGraph> = BTreeMap::new();
        seen.insert(self.key.clone(), self.clone());
        let mut frontier = vec![self.clone()];
        while !frontier.is_empty() {
            let children: Vec<CoreGraph> = frontier
                .par_iter()
                .flat_map_iter(|g| {
                    let mut kids = Vec::new();
                    for i in 0..g.n {
                        for j in i + 1..g.n {
                            kids.push(g.identify(i, j));
                        }
                    }
                    kids
                })
                .collect();
            frontier = Vec::new();
            for c in children {
                if !seen.contains_key(&c.key) {
                    seen.insert(c.key.clone(), c.clone());
                    frontier.push(c);
                }
            }
            frontier.sort_by(|a, b| a.key.cmp(&b.key));
        }
        let mut all: Vec<CoreGraph> = seen.into_values().collect();
        all.sort_by(|a, b| (a.rank(), a.n, &a.key).cmp(&(b.rank(), b.n, &b.key)));
        Ok(all)
    }

    /// Quotient by the partition with block labels `block[v]`, folded.
    pub fn quotient_by(&self, block: &[usize]) -> CoreGraph {
        assert_eq!(block.len(), self.n);
        let nb = block.iter().max().map_or(0, |m| m + 1);
        // relabel so the base's block is vertex 0
        let b0 = block[0];
        let relabel = |b: usize| -> usize {
            if b == b0 {
                0
            } else if b < b0 {
                b + 1
            } else {
                b
            }
        };
        let mut pre = PreGraph { rank: self.rank, num_vertices: nb.max(1), edges: Vec::new() };
        for (u, l, v) in self.edges() {
            pre.edges.push((relabel(block[u]) as u32, l as u8, relabel(block[v]) as u32));
        }
        pre.fold()
    }

    fn identify(&self, i: usize, j: usize) -> CoreGraph {
        let block: Vec<usize> = (0..self.n).map(|v| if v == j { i } else { v }).collect();
        let mut compact = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut labels = Vec::with_capacity(self.n);
        for &b in &block {
            if compact[b] == usize::MAX {
                compact[b] = next;
                next += 1;
            }
            labels.push(compact[b]);
        }
        self.quotient_by(&labels)
    }

    /// Graphviz rendering; the base is drawn as a double circle.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph core {\n  rankdir=LR;\n");
        for v in 0..self.n {
            let shape = if v == 0 { "doublecircle" } else { "circle" };
            let _ = writeln!(s, "  v{v} [shape={shape}];");
        }
        for (u, l, v) in self.edges() {
            let _ = writeln!(s, "  v{u} -> v{v} [label=\"{}\"];", label_char(l, self.rank));
        }
        s.push_str("}\n");
        s
    }
}

/// Letter used for generator `l` when printing a graph of ambient rank `rank`.
pub fn label_char(l: usize, rank: usize) -> char {
    if rank <= 3 {
        (b'x' + l as u8) as char
    } else {
        (b'a' + l as u8) as char
    }
}

fn canonicalize(rank: usize, n_hint: usize, base: usize, edges: &[(u32, u8, u32)]) -> CoreGraph {
    let mut out_t = vec![NONE; n_hint * rank];
    let mut in_t = vec![NONE; n_hint * rank];
    for &(u, l, v) in edges {
        out_t[u as usize * rank + l as usize] = v;
        in_t[v as usize * rank + l as usize] = u;
    }
    let mut order = vec![base];
    let mut new_id = vec![NONE; n_hint];
    new_id[base] = 0;
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for l in 0..rank {
            for t in [out_t[v * rank + l], in_t[v * rank + l]] {
                if t != NONE && new_id[t as usize] == NONE {
                    new_id[t as usize] = order.len() as u32;
                    order.push(t as usize);
                }
            }
        }
    }
    let n = order.len();
    let mut out = vec![NONE; n * rank];
    let mut inc = vec![NONE; n * rank];
    for (i, &v) in order.iter().enumerate() {
        for l in 0..rank {
            let t = out_t[v * rank + l];
            if t != NONE {
                let j = new_id[t as usize];
                out[i * rank + l] = j;
                inc[j as usize * rank + l] = i as u32;
            }
        }
    }
    let mut key = Vec::with_capacity(1 + 4 + 4 * out.len());
    key.push(rank as u8);
    key.extend_from_slice(&(n as u32).to_be_bytes());
    for &t in &out {
        key.extend_from_slice(&t.to_be_bytes());
    }
    CoreGraph { rank, n, out, inc, key }
}
