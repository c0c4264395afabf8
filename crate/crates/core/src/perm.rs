//! Permutations of 1-based positions and shuffle specifications.
//!
//! A permutation `σ` acts on a sequence by `σ(x) = (x_{σ⁻¹(1)}, …, x_{σ⁻¹(n)})`,
//! i.e. the item at position `j` moves to position `σ(j)`.

use std::collections::HashSet;
use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;

use crate::cards::{sample_weighted, CardSequence};
use crate::error::{Error, Result};
use crate::Weight;

/// Largest pile count a symbolic pile-scramble shuffle accepts (20! fits in u64).
pub const MAX_PILES: usize = 20;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    // zero-based images; ordering is lexicographic on the mapping array
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { images: (0..n).collect() }
    }

    /// From 1-based images: entry `i-1` holds `σ(i)`.
    pub fn from_images(images: &[usize]) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        let mut zero_based = Vec::with_capacity(n);
        for &img in images {
            if img == 0 || img > n || seen[img - 1] {
                return Err(Error::InvalidPermutation(format!("{images:?}")));
            }
            seen[img - 1] = true;
            zero_based.push(img - 1);
        }
        Ok(Self { images: zero_based })
    }

    pub(crate) fn from_zero_based(images: Vec<usize>) -> Self {
        debug_assert!({
            let mut s = images.clone();
            s.sort_unstable();
            s.iter().enumerate().all(|(i, &v)| i == v)
        });
        Self { images }
    }

    /// The rearrangement whose result holds, at position `i`, the item
    /// formerly at `sources[i-1]` (1-based).
    pub fn from_sources(sources: &[usize]) -> Result<Self> {
        Ok(Self::from_images(sources)?.inverse())
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// `σ(i)` for 1-based `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.images[i - 1] + 1
    }

    /// 1-based image list.
    pub fn images(&self) -> Vec<usize> {
        self.images.iter().map(|v| v + 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        check_degree(self.degree(), other.degree())?;
        Ok(Self { images: other.images.iter().map(|&j| self.images[j]).collect() })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.images.len()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v] = i;
        }
        Self { images: inv }
    }

    /// Moves `items[j]` to position `σ(j)`.
    pub fn apply_to_slice<T: Clone>(&self, items: &[T]) -> Result<Vec<T>> {
        check_degree(self.degree(), items.len())?;
        let mut out: Vec<Option<T>> = vec![None; items.len()];
        for (j, item) in items.iter().enumerate() {
            out[self.images[j]] = Some(item.clone());
        }
        Ok(out.into_iter().map(|x| x.expect("bijection fills every slot")).collect())
    }

    /// Disjoint cycles of length ≥ 2, each starting at its smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] || self.images[start] == start {
                continue;
            }
            let mut cycle = Vec::new();
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cycle.push(cur + 1);
                cur = self.images[cur];
            }
            out.push(cycle);
        }
        out
    }

    /// Parses cycle notation such as `(1 3)(2 5)`; `id`, `()` and the empty
    /// string denote the identity. Commas are accepted as separators.
    pub fn parse_cycles(text: &str, degree: usize) -> Result<Self> {
        let text = text.trim();
        let mut images: Vec<usize> = (0..degree).collect();
        if text.is_empty() || text == "id" {
            return Ok(Self { images });
        }
        let mut touched = vec![false; degree];
        let mut rest = text;
        while !rest.is_empty() {
            let open = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::CycleParse(format!("expected '(' in {text:?}")))?;
            let close = open
                .find(')')
                .ok_or_else(|| Error::CycleParse(format!("unclosed cycle in {text:?}")))?;
            let body = &open[..close];
            let elems: Vec<usize> = body
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| Error::CycleParse(format!("bad element {t:?}"))))
                .collect::<Result<_>>()?;
            for &e in &elems {
                if e == 0 || e > degree {
                    return Err(Error::CycleParse(format!("element {e} outside 1..={degree}")));
                }
                if touched[e - 1] {
                    return Err(Error::CycleParse(format!("element {e} repeated")));
                }
                touched[e - 1] = true;
            }
            for (k, &e) in elems.iter().enumerate() {
                images[e - 1] = elems[(k + 1) % elems.len()] - 1;
            }
            rest = open[close + 1..].trim_start();
        }
        Ok(Self { images })
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return f.write_str("id");
        }
        for c in cycles {
            let parts: Vec<String> = c.iter().map(usize::to_string).collect();
            write!(f, "({})", parts.join(" "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation[{self}; n={}]", self.degree())
    }
}

fn check_degree(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DegreeMismatch { expected, actual })
    }
}

/// `σ(x)`: position `i` of the result holds former position `σ⁻¹(i)`.
/// Orientation and identity travel with each card.
pub fn apply_perm(sigma: &Permutation, seq: &CardSequence) -> Result<CardSequence> {
    Ok(CardSequence::from_cards_unchecked(sigma.apply_to_slice(seq.cards())?))
}

pub fn compose(tau: &Permutation, sigma: &Permutation) -> Result<Permutation> {
    tau.compose(sigma)
}

pub fn inverse(sigma: &Permutation) -> Permutation {
    sigma.inverse()
}

pub fn identity(n: usize) -> Permutation {
    Permutation::identity(n)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum ShuffleKind {
    Explicit { perms: Vec<Permutation>, weights: Vec<Weight> },
    // Equal-size position blocks; branch `i` is the i-th pile permutation in
    // lexicographic order.
    Piles { blocks: Vec<Vec<usize>>, count: usize },
}

/// A permutation set with a distribution over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShuffleSpec {
    degree: usize,
    kind: ShuffleKind,
    label: String,
}

impl ShuffleSpec {
    /// Explicit permutation set with exact weights. Members are stored in
    /// lexicographic order of their mapping arrays.
    pub fn explicit(degree: usize, perms: Vec<Permutation>, weights: Vec<Weight>, label: impl Into<String>) -> Result<Self> {
        if perms.is_empty() {
            return Err(Error::InvalidShuffle("empty permutation set".into()));
        }
        if perms.len() != weights.len() {
            return Err(Error::InvalidShuffle("one weight per permutation required".into()));
        }
        let mut seen = HashSet::new();
        for p in &perms {
            check_degree(degree, p.degree())?;
            if !seen.insert(p) {
                return Err(Error::InvalidShuffle(format!("duplicate permutation {p}")));
            }
        }
        let total = weights.iter().fold(Weight::zero(), |a, w| a + w);
        if !total.is_one() {
            return Err(Error::InvalidShuffle(format!("weights sum to {total}")));
        }
        let mut pairs: Vec<(Permutation, Weight)> = perms.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let (perms, weights) = pairs.into_iter().unzip();
        Ok(Self { degree, kind: ShuffleKind::Explicit { perms, weights }, label: label.into() })
    }

    pub fn uniform(degree: usize, perms: Vec<Permutation>, label: impl Into<String>) -> Result<Self> {
        let k = perms.len() as u128;
        if k == 0 {
            return Err(Error::InvalidShuffle("empty permutation set".into()));
        }
        Self::explicit(degree, perms, vec![Weight::new(1, k); k as usize], label)
    }

    /// `PSS(p, q)`: `p` contiguous piles of `q` cards each.
    pub fn pss(piles: usize, pile_size: usize) -> Result<Self> {
        if piles == 0 || pile_size == 0 {
            return Err(Error::InvalidShuffle(format!("PSS({piles},{pile_size}) needs positive sizes")));
        }
        let blocks = (0..piles).map(|b| (b * pile_size + 1..=(b + 1) * pile_size).collect()).collect();
        Self::pss_blocks(piles * pile_size, blocks)
    }

    /// Pile-scramble shuffle over explicit position blocks inside a sequence of
    /// `degree` cards. Blocks must be disjoint and equally sized; positions
    /// outside every block stay fixed.
    pub fn pss_blocks(degree: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let p = blocks.len();
        if p == 0 {
            return Err(Error::InvalidShuffle("pile-scramble needs at least one pile".into()));
        }
        if p > MAX_PILES {
            return Err(Error::InvalidShuffle(format!("{p} piles exceeds the supported {MAX_PILES}")));
        }
        let q = blocks[0].len();
        if q == 0 || blocks.iter().any(|b| b.len() != q) {
            return Err(Error::InvalidShuffle("piles must be non-empty and equally sized".into()));
        }
        let all: Vec<usize> = blocks.iter().flatten().copied().collect();
        crate::cards::check_positions(&all, degree).map_err(|e| Error::InvalidShuffle(e.to_string()))?;
        let count = (1..=p).product();
        Ok(Self { degree, kind: ShuffleKind::Piles { blocks, count }, label: format!("PSS({p},{q})") })
    }

    /// Random cut on `n` cards: the `n` cyclic shifts `π_k` with
    /// `π_k(i) = n−k+i` for `i ≤ k` and `π_k(i) = i−k` otherwise.
    pub fn random_cut(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidShuffle("random cut needs n ≥ 1".into()));
        }
        let perms = (1..=n).map(|k| random_cut_member(n, k)).collect();
        Self::uniform(n, perms, format!("RC({n})"))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn branch_count(&self) -> usize {
        match &self.kind {
            ShuffleKind::Explicit { perms, .. } => perms.len(),
            ShuffleKind::Piles { count, .. } => *count,
        }
    }

    pub fn is_uniform(&self) -> bool {
        match &self.kind {
            ShuffleKind::Explicit { weights, .. } => weights.iter().all(|w| *w == weights[0]),
            ShuffleKind::Piles { .. } => true,
        }
    }

    /// Pile blocks when this is a pile-scramble shuffle.
    pub fn blocks(&self) -> Option<&[Vec<usize>]> {
        match &self.kind {
            ShuffleKind::Piles { blocks, .. } => Some(blocks),
            ShuffleKind::Explicit { .. } => None,
        }
    }

    pub fn weight(&self, index: usize) -> Weight {
        match &self.kind {
            ShuffleKind::Explicit { weights, .. } => weights[index],
            ShuffleKind::Piles { count, .. } => Weight::new(1, *count as u128),
        }
    }

    /// All weights; materialised, so only for explicit or small specs.
    pub fn weights(&self) -> Vec<Weight> {
        (0..self.branch_count()).map(|i| self.weight(i)).collect()
    }

    /// Permutation of pile slots for a pile-scramble branch.
    pub fn pile_permutation(&self, index: usize) -> Option<Permutation> {
        match &self.kind {
            ShuffleKind::Piles { blocks, .. } => Some(unrank_lex(blocks.len(), index)),
            ShuffleKind::Explicit { .. } => None,
        }
    }

    /// Position permutation of branch `index`.
    pub fn branch(&self, index: usize) -> Permutation {
        match &self.kind {
            ShuffleKind::Explicit { perms, .. } => perms[index].clone(),
            ShuffleKind::Piles { blocks, .. } => {
                let pile = unrank_lex(blocks.len(), index);
                let mut images: Vec<usize> = (0..self.degree).collect();
                for (b, block) in blocks.iter().enumerate() {
                    let target = &blocks[pile.images[b]];
                    for (k, &pos) in block.iter().enumerate() {
                        images[pos - 1] = target[k] - 1;
                    }
                }
                Permutation::from_zero_based(images)
            }
        }
    }

    /// Branch index of a member permutation.
    pub fn index_of(&self, sigma: &Permutation) -> Option<usize> {
        match &self.kind {
            ShuffleKind::Explicit { perms, .. } => perms.binary_search(sigma).ok(),
            ShuffleKind::Piles { blocks, .. } => {
                if sigma.degree() != self.degree {
                    return None;
                }
                let mut pile = Vec::with_capacity(blocks.len());
                for block in blocks {
                    let img = sigma.apply(block[0]);
                    pile.push(blocks.iter().position(|b| b[0] == img)?);
                }
                let pile = Permutation { images: pile };
                let index = rank_lex(&pile)?;
                (self.branch(index) == *sigma).then_some(index)
            }
        }
    }

    pub fn permutations(&self) -> impl Iterator<Item = Permutation> + '_ {
        (0..self.branch_count()).map(|i| self.branch(i))
    }

    /// Every branch with its exact weight, in deterministic order.
    pub fn enumerate(&self) -> Vec<(Permutation, Weight)> {
        (0..self.branch_count()).map(|i| (self.branch(i), self.weight(i))).collect()
    }

    /// Draws a branch according to the distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, Permutation) {
        let idx = match &self.kind {
            ShuffleKind::Explicit { weights, .. } if !self.is_uniform() => sample_weighted(weights, rng),
            _ => rng.gen_range(0..self.branch_count()),
        };
        (idx, self.branch(idx))
    }

    /// True iff the permutation set is closed under composition and the
    /// weights are uniform. Checked by exhaustive products for sets of at most
    /// `limit` members; larger pile-scramble sets are closed by construction.
    pub fn is_uniform_closed(&self) -> bool {
        self.is_uniform_closed_with_limit(5040)
    }

    pub fn is_uniform_closed_with_limit(&self, limit: usize) -> bool {
        if !self.is_uniform() {
            return false;
        }
        if self.branch_count() > limit {
            return matches!(self.kind, ShuffleKind::Piles { .. });
        }
        let members: Vec<Permutation> = self.permutations().collect();
        let set: HashSet<&Permutation> = members.iter().collect();
        members.iter().all(|a| {
            members.iter().all(|b| set.contains(&a.compose(b).expect("same degree")))
        })
    }
}

/// `π_k` of the random cut on `n` cards (1 ≤ k ≤ n).
pub fn random_cut_member(n: usize, k: usize) -> Permutation {
    let images: Vec<usize> = (1..=n).map(|i| if i <= k { n - k + i } else { i - k }).collect();
    Permutation::from_images(&images).expect("cyclic shift is a bijection")
}

/// Free-function forms matching the rest of the API.
pub fn pss(piles: usize, pile_size: usize) -> Result<ShuffleSpec> {
    ShuffleSpec::pss(piles, pile_size)
}

pub fn random_cut(n: usize) -> Result<ShuffleSpec> {
    ShuffleSpec::random_cut(n)
}

pub fn enumerate_shuffle(spec: &ShuffleSpec) -> Vec<(Permutation, Weight)> {
    spec.enumerate()
}

pub fn sample_shuffle<R: Rng + ?Sized>(spec: &ShuffleSpec, rng: &mut R) -> Permutation {
    spec.sample(rng).1
}

pub fn is_uniform_closed(spec: &ShuffleSpec) -> bool {
    spec.is_uniform_closed()
}

/// The `index`-th permutation of `0..p` in lexicographic order.
fn unrank_lex(p: usize, mut index: usize) -> Permutation {
    let mut pool: Vec<usize> = (0..p).collect();
    let mut fact: usize = (1..p).product::<usize>().max(1);
    let mut images = Vec::with_capacity(p);
    for remaining in (1..=p).rev() {
        let d = index / fact;
        index %= fact;
        images.push(pool.remove(d));
        if remaining > 1 {
            fact /= remaining - 1;
        }
    }
    Permutation { images }
}

fn rank_lex(perm: &Permutation) -> Option<usize> {
    let p = perm.degree();
    let mut pool: Vec<usize> = (0..p).collect();
    let mut rank = 0usize;
    for (i, &v) in perm.images.iter().enumerate() {
        let d = pool.iter().position(|&x| x == v)?;
        pool.remove(d);
        let fact: usize = (1..p - i).product::<usize>().max(1);
        rank += d * fact;
    }
    Some(rank)
}
