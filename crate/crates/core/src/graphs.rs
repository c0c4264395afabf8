//! Multi-digraphs, degree profiles, the automorphism group `Aut₀(G)` and a
//! small text format for graphs.
//!
//! Vertices are `1..=n`. Arrows are an ordered list of `(source, target)`
//! pairs; repeats and loops are allowed. An isomorphism `f: G → H` maps the
//! arrow multiset of `G` onto that of `H` via `(s, t) ↦ (f(s), f(t))`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::perm::{Permutation, ShuffleSpec};

/// Default bound on `|Aut₀(G)|` during enumeration (10!).
pub const DEFAULT_MAX_GROUP_ORDER: u64 = 3_628_800;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    arrows: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, arrows: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        if let Some(&(s, t)) = arrows.iter().find(|&&(s, t)| s == 0 || t == 0 || s > n || t > n) {
            return Err(Error::InvalidGraph(format!("arrow ({s}, {t}) outside vertices 1..={n}")));
        }
        Ok(Self { n, arrows })
    }

    /// `n` vertices, no arrows.
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    /// `1 → 2 → … → n → 1`.
    pub fn directed_cycle(n: usize) -> Result<Self> {
        Self::new(n, (1..=n).map(|i| (i, i % n + 1)).collect())
    }

    /// `1 → 2 → … → n`.
    pub fn directed_path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i, i + 1)).collect())
    }

    /// Every arrow `s → t` with `s ≠ t`.
    pub fn complete_digraph(n: usize) -> Result<Self> {
        Self::new(n, (1..=n).flat_map(|s| (1..=n).filter(move |&t| t != s).map(move |t| (s, t))).collect())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn arrow_count(&self) -> usize {
        self.arrows.len()
    }

    pub fn arrows(&self) -> &[(usize, usize)] {
        &self.arrows
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.arrows.iter().filter(|&&(_, t)| t == v).count()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.arrows.iter().filter(|&&(s, _)| s == v).count()
    }

    /// Total degree; a loop counts twice.
    pub fn degree(&self, v: usize) -> usize {
        self.in_degree(v) + self.out_degree(v)
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        let mut in_deg = vec![0; self.n];
        let mut out_deg = vec![0; self.n];
        for &(s, t) in &self.arrows {
            out_deg[s - 1] += 1;
            in_deg[t - 1] += 1;
        }
        let deg: Vec<usize> = in_deg.iter().zip(&out_deg).map(|(a, b)| a + b).collect();
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &d) in deg.iter().enumerate() {
            classes.entry(d).or_default().push(i + 1);
        }
        DegreeProfile { in_deg, out_deg, deg, classes }
    }

    /// `m[s-1][t-1]` = number of arrows `s → t`.
    pub fn multiplicity_matrix(&self) -> Vec<Vec<usize>> {
        let mut m = vec![vec![0; self.n]; self.n];
        for &(s, t) in &self.arrows {
            m[s - 1][t - 1] += 1;
        }
        m
    }

    /// Image of the graph under a vertex relabelling.
    pub fn relabel(&self, f: &Permutation) -> Result<Graph> {
        self.check_degree(f)?;
        Ok(Graph { n: self.n, arrows: self.arrows.iter().map(|&(s, t)| (f.apply(s), f.apply(t))).collect() })
    }

    fn check_degree(&self, f: &Permutation) -> Result<()> {
        if f.degree() != self.n {
            return Err(Error::DegreeMismatch { expected: self.n, actual: f.degree() });
        }
        Ok(())
    }

    fn sorted_arrows(&self) -> Vec<(usize, usize)> {
        let mut a = self.arrows.clone();
        a.sort_unstable();
        a
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    pub in_deg: Vec<usize>,
    pub out_deg: Vec<usize>,
    pub deg: Vec<usize>,
    /// Vertices grouped by total degree, ascending in both keys and members.
    pub classes: BTreeMap<usize, Vec<usize>>,
}

impl DegreeProfile {
    pub fn degree_set(&self) -> BTreeSet<usize> {
        self.classes.keys().copied().collect()
    }
}

/// Simple undirected graph; each edge `{s, t}` becomes arrows `s → t` and
/// `t → s` when doubled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl UndirectedGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        Graph::new(n, edges.clone())?;
        Ok(Self { n, edges })
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGraph("an undirected cycle needs at least 3 vertices".into()));
        }
        Self::new(n, (1..=n).map(|i| (i, i % n + 1)).collect())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn doubled(&self) -> Graph {
        let arrows = self.edges.iter().flat_map(|&(s, t)| [(s, t), (t, s)]).collect();
        Graph { n: self.n, arrows }
    }
}

/// Whether `f` is an isomorphism `G → H` (vertex and arrow multisets).
pub fn is_iso0(g: &Graph, h: &Graph, f: &Permutation) -> Result<bool> {
    if g.n != h.n {
        return Err(Error::InvalidGraph(format!("vertex counts differ: {} vs {}", g.n, h.n)));
    }
    g.check_degree(f)?;
    if g.arrows.len() != h.arrows.len() {
        return Ok(false);
    }
    Ok(g.relabel(f)?.sorted_arrows() == h.sorted_arrows())
}

/// A set of vertex permutations, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexPermSet {
    degree: usize,
    perms: Vec<Permutation>,
}

impl VertexPermSet {
    pub fn new(degree: usize, mut perms: Vec<Permutation>) -> Result<Self> {
        if let Some(p) = perms.iter().find(|p| p.degree() != degree) {
            return Err(Error::DegreeMismatch { expected: degree, actual: p.degree() });
        }
        perms.sort();
        perms.dedup();
        Ok(Self { degree, perms })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        self.perms.binary_search(p).is_ok()
    }

    pub fn perms(&self) -> &[Permutation] {
        &self.perms
    }

    /// Contains the identity and is closed under composition.
    pub fn is_group(&self) -> bool {
        if !self.contains(&Permutation::identity(self.degree)) {
            return false;
        }
        self.perms.iter().all(|a| self.perms.iter().all(|b| a.compose(b).map(|c| self.contains(&c)).unwrap_or(false)))
    }

    /// A generating set, picked greedily in sorted order.
    pub fn generators(&self) -> Vec<Permutation> {
        let id = Permutation::identity(self.degree);
        let mut gens = Vec::new();
        let mut generated: HashSet<Permutation> = HashSet::from([id]);
        for p in &self.perms {
            if generated.contains(p) {
                continue;
            }
            gens.push(p.clone());
            generated = closure(&gens, self.degree);
        }
        gens
    }

    /// Uniform shuffle over the set.
    pub fn to_shuffle(&self, label: &str) -> Result<ShuffleSpec> {
        ShuffleSpec::uniform(self.degree, self.perms.clone(), label)
    }
}

fn closure(gens: &[Permutation], degree: usize) -> HashSet<Permutation> {
    let mut set: HashSet<Permutation> = HashSet::from([Permutation::identity(degree)]);
    let mut frontier: Vec<Permutation> = set.iter().cloned().collect();
    while let Some(p) = frontier.pop() {
        for g in gens {
            let q = g.compose(&p).expect("degrees checked by caller");
            if set.insert(q.clone()) {
                frontier.push(q);
            }
        }
    }
    set
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AutOptions {
    pub max_group_order: u64,
}

impl Default for AutOptions {
    fn default() -> Self {
        Self { max_group_order: DEFAULT_MAX_GROUP_ORDER }
    }
}

/// Backtracking isomorphism search `G → H`. Vertices of `G` are assigned in
/// ascending order; candidate images are tried ascending and must agree in
/// (in-degree, out-degree, loop count) and in arrow multiplicities towards all
/// previously assigned vertices. `visit` returns `false` to stop.
struct IsoSearch<'a> {
    g: Vec<Vec<usize>>,
    h: Vec<Vec<usize>>,
    candidates: Vec<Vec<usize>>,
    visit: &'a mut dyn FnMut(&[usize]) -> bool,
}

impl IsoSearch<'_> {
    fn run(&mut self) {
        let n = self.g.len();
        let mut images = Vec::with_capacity(n);
        let mut used = vec![false; n];
        self.extend(&mut images, &mut used);
    }

    fn extend(&mut self, images: &mut Vec<usize>, used: &mut [bool]) -> bool {
        let v = images.len();
        if v == self.g.len() {
            return (self.visit)(images);
        }
        for ci in 0..self.candidates[v].len() {
            let w = self.candidates[v][ci];
            if used[w] || !self.consistent(images, v, w) {
                continue;
            }
            used[w] = true;
            images.push(w);
            let go_on = self.extend(images, used);
            images.pop();
            used[w] = false;
            if !go_on {
                return false;
            }
        }
        true
    }

    fn consistent(&self, images: &[usize], v: usize, w: usize) -> bool {
        images.iter().enumerate().all(|(u, &fu)| self.g[v][u] == self.h[w][fu] && self.g[u][v] == self.h[fu][w])
    }
}

fn search_isomorphisms(g: &Graph, h: &Graph, visit: &mut dyn FnMut(&[usize]) -> bool) -> Result<()> {
    if g.n != h.n {
        return Err(Error::InvalidGraph(format!("vertex counts differ: {} vs {}", g.n, h.n)));
    }
    if g.arrows.len() != h.arrows.len() {
        return Ok(());
    }
    let (gm, hm) = (g.multiplicity_matrix(), h.multiplicity_matrix());
    let (gp, hp) = (g.degree_profile(), h.degree_profile());
    let sig = |p: &DegreeProfile, m: &[Vec<usize>], v: usize| (p.in_deg[v], p.out_deg[v], m[v][v]);
    let candidates = (0..g.n).map(|v| (0..h.n).filter(|&w| sig(&gp, &gm, v) == sig(&hp, &hm, w)).collect()).collect();
    IsoSearch { g: gm, h: hm, candidates, visit }.run();
    Ok(())
}

fn to_perm(images: &[usize]) -> Permutation {
    Permutation::from_images(&images.iter().map(|i| i + 1).collect::<Vec<_>>()).expect("search yields bijections")
}

/// All automorphisms of `g`, failing once more than
/// `opts.max_group_order` are found.
pub fn enumerate_aut0(g: &Graph, opts: &AutOptions) -> Result<VertexPermSet> {
    let mut found = Vec::new();
    let mut overflow = false;
    search_isomorphisms(g, g, &mut |images| {
        if found.len() as u64 >= opts.max_group_order {
            overflow = true;
            return false;
        }
        found.push(to_perm(images));
        true
    })?;
    if overflow {
        return Err(Error::GroupTooLarge { limit: opts.max_group_order });
    }
    VertexPermSet::new(g.n, found)
}

/// The lexicographically first isomorphism `G → H`, if any.
pub fn find_isomorphism(g: &Graph, h: &Graph) -> Result<Option<Permutation>> {
    let mut first = None;
    search_isomorphisms(g, h, &mut |images| {
        first = Some(to_perm(images));
        false
    })?;
    Ok(first)
}

/// Uniform shuffle over `Aut₀(G)`.
pub fn graph_shuffle_spec(g: &Graph, opts: &AutOptions) -> Result<ShuffleSpec> {
    enumerate_aut0(g, opts)?.to_shuffle("Aut0(G)")
}

/// Parsed graph file.
///
/// ```text
/// # comment
/// vertices 5
/// undirected      (optional; each pair is then an edge)
/// 1 2
/// 2 3
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphFile {
    pub vertices: usize,
    pub undirected: bool,
    pub pairs: Vec<(usize, usize)>,
}

impl GraphFile {
    pub fn from_graph(g: &Graph) -> Self {
        Self { vertices: g.n, undirected: false, pairs: g.arrows.clone() }
    }

    pub fn to_graph(&self) -> Result<Graph> {
        if self.undirected {
            Ok(UndirectedGraph::new(self.vertices, self.pairs.clone())?.doubled())
        } else {
            Graph::new(self.vertices, self.pairs.clone())
        }
    }
}

impl FromStr for GraphFile {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut vertices = None;
        let mut undirected = false;
        let mut pairs = Vec::new();
        let err = |line: usize, message: String| Error::GraphParse { line, message };
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            let tokens: Vec<&str> = content.split_whitespace().collect();
            match tokens.as_slice() {
                [] => {}
                ["vertices", n] => {
                    if vertices.is_some() {
                        return Err(err(line, "duplicate vertices line".into()));
                    }
                    let n: usize = n.parse().map_err(|_| err(line, format!("bad vertex count {n:?}")))?;
                    if n == 0 {
                        return Err(err(line, "vertex count must be positive".into()));
                    }
                    vertices = Some(n);
                }
                ["undirected"] => {
                    if !pairs.is_empty() {
                        return Err(err(line, "undirected must precede the pairs".into()));
                    }
                    undirected = true;
                }
                [s, t] => {
                    let n = vertices.ok_or_else(|| err(line, "pair before vertices line".into()))?;
                    let parse = |x: &str| -> Result<usize> {
                        let v: usize = x.parse().map_err(|_| err(line, format!("bad vertex {x:?}")))?;
                        if v == 0 || v > n {
                            return Err(err(line, format!("vertex {v} outside 1..={n}")));
                        }
                        Ok(v)
                    };
                    pairs.push((parse(s)?, parse(t)?));
                }
                _ => return Err(err(line, format!("unrecognised line {content:?}"))),
            }
        }
        let vertices = vertices.ok_or_else(|| err(text.lines().count().max(1), "missing vertices line".into()))?;
        Ok(Self { vertices, undirected, pairs })
    }
}

impl fmt::Display for GraphFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vertices {}", self.vertices)?;
        if self.undirected {
            writeln!(f, "undirected")?;
        }
        for (s, t) in &self.pairs {
            writeln!(f, "{s} {t}")?;
        }
        Ok(())
    }
}
