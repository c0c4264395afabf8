//! The general graph shuffle protocol.
//!
//! Helping cards: red `1..n`, then `deg(i)` black cards `i` for each vertex.
//! Each vertex gets a pile (its red card plus its black cards); piles of
//! equal degree are scrambled, the input cards are paired with the red
//! cards and every arrow `j → k` becomes a pair of black cards taken from
//! piles `j` and `k`. After one more scramble over all pairs, the left cards
//! (and the right cards behind black left cards) are opened. The opened
//! arrow pairs describe a graph `G′` isomorphic to `G`; an isomorphism
//! `f: G → G′` then tells which input card goes where.
//!
//! The driver records every rearrangement as a `Perm` action and every
//! opening as a `Turn`, so its traces go through the same checkers as a
//! table-driven [`ProtocolMachine`](crate::machine::ProtocolMachine).

use std::fmt;

use rand::Rng;

use crate::cards::{Atom, CardSequence, Face, Orientation};
use crate::error::{Error, Result};
use crate::graphs::{find_isomorphism, is_iso0, DegreeProfile, Graph};
use crate::machine::{output_permutation, Action, Chooser, ExecutionTrace, Outcome, Protocol, RandomChooser, Recorder};
use crate::perm::{Permutation, ShuffleSpec};
use crate::Weight;

/// How the scramble over all vertex/arrow pairs is carried out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FinalShuffle {
    /// Uniform pile-scramble, as the protocol prescribes.
    Random,
    /// Apply the given branch of the scramble deterministically.
    Pinned(usize),
    /// Leave the pairs in place (insecure; for negative tests).
    Skipped,
}

/// How the isomorphism `G → G′` is chosen after opening.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IsoChoice {
    /// Lexicographically first isomorphism.
    FirstFound,
    /// A fixed relabelling; the run fails if it is not an isomorphism.
    Fixed(Permutation),
}

/// Helping cards in their initial face-up order, ids starting at `n`.
pub fn build_helping_deck(g: &Graph) -> CardSequence {
    let n = g.vertex_count();
    let prof = g.degree_profile();
    let reds = (1..=n as u32).map(Atom::Red);
    let blacks = (1..=n).flat_map(|v| std::iter::repeat_n(Atom::Black(v as u32), prof.deg[v - 1]));
    CardSequence::from_atoms(reds.chain(blacks), Orientation::FaceUp, n as u32)
}

/// A pile-scramble as counted in the protocol's shuffle tally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PssUse {
    pub piles: usize,
    pub pile_size: usize,
}

impl PssUse {
    /// A scramble of a single pile does nothing and is skipped at run time.
    pub fn is_trivial(&self) -> bool {
        self.piles <= 1
    }
}

impl fmt::Display for PssUse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PSS({},{})", self.piles, self.pile_size)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolStats {
    pub cards: usize,
    pub helping_cards: usize,
    /// `|Deg_G| + 1`, counting scrambles of a single pile.
    pub shuffles: usize,
    /// Scrambles actually performed (more than one pile).
    pub effective_shuffles: usize,
    pub pss: Vec<PssUse>,
}

pub fn protocol_stats(g: &Graph) -> ProtocolStats {
    let n = g.vertex_count();
    let m = g.arrow_count();
    let prof = g.degree_profile();
    let mut pss: Vec<PssUse> = prof.classes.iter().map(|(&d, vs)| PssUse { piles: vs.len(), pile_size: d + 1 }).collect();
    pss.push(PssUse { piles: n + m, pile_size: 2 });
    ProtocolStats {
        cards: 2 * (n + m),
        helping_cards: n + 2 * m,
        shuffles: pss.len(),
        effective_shuffles: pss.iter().filter(|p| !p.is_trivial()).count(),
        pss,
    }
}

/// Everything observable about one execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphShuffleRun {
    /// The `n` output cards.
    pub output: CardSequence,
    pub trace: ExecutionTrace,
    pub weight: Weight,
    /// Vertex labels after the degree-class scrambles: slot `i` holds the
    /// pile of vertex `labels(i)`.
    pub labels: Permutation,
    /// The graph read off the opened arrow pairs.
    pub opened_graph: Graph,
    /// The chosen isomorphism `G → G′`.
    pub isomorphism: Permutation,
    /// `σ` with `output = σ(input)`.
    pub output_perm: Permutation,
}

#[derive(Debug, Clone)]
pub struct GraphShuffleProtocol {
    graph: Graph,
    profile: DegreeProfile,
    helping: CardSequence,
    final_shuffle: FinalShuffle,
    iso: IsoChoice,
}

impl GraphShuffleProtocol {
    pub fn new(graph: Graph) -> Self {
        Self {
            profile: graph.degree_profile(),
            helping: build_helping_deck(&graph),
            graph,
            final_shuffle: FinalShuffle::Random,
            iso: IsoChoice::FirstFound,
        }
    }

    pub fn with_final_shuffle(mut self, final_shuffle: FinalShuffle) -> Self {
        self.final_shuffle = final_shuffle;
        self
    }

    pub fn with_isomorphism(mut self, iso: IsoChoice) -> Result<Self> {
        if let IsoChoice::Fixed(f) = &iso {
            if f.degree() != self.graph.vertex_count() {
                return Err(Error::DegreeMismatch { expected: self.graph.vertex_count(), actual: f.degree() });
            }
        }
        self.iso = iso;
        Ok(self)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn stats(&self) -> ProtocolStats {
        protocol_stats(&self.graph)
    }

    /// Start position (1-based) of each vertex pile after the pile layout.
    fn pile_starts(&self) -> Vec<usize> {
        let n = self.graph.vertex_count();
        let mut starts = Vec::with_capacity(n);
        let mut pos = n + 1;
        for v in 0..n {
            starts.push(pos);
            pos += self.profile.deg[v] + 1;
        }
        starts
    }

    /// The scramble over all vertex and arrow pairs.
    pub fn pair_shuffle(&self) -> Result<ShuffleSpec> {
        ShuffleSpec::pss(self.graph.vertex_count() + self.graph.arrow_count(), 2)
    }

    /// Branch index of the pair scramble that puts the pair from slot
    /// `pile_sources[s-1]` into slot `s`.
    pub fn pair_branch_for(&self, pile_sources: &[usize]) -> Result<usize> {
        let spec = self.pair_shuffle()?;
        if pile_sources.len() != self.graph.vertex_count() + self.graph.arrow_count() {
            return Err(Error::InvalidInput(format!("expected {} pile sources", spec.degree() / 2)));
        }
        let positions: Vec<usize> = pile_sources.iter().flat_map(|&p| [2 * p - 1, 2 * p]).collect();
        let sigma = Permutation::from_sources(&positions)?;
        spec.index_of(&sigma).ok_or_else(|| Error::InvalidInput("not a pile rearrangement".into()))
    }

    pub fn run_detailed(&self, initial: &CardSequence, chooser: &mut dyn Chooser) -> Result<GraphShuffleRun> {
        let g = &self.graph;
        let n = g.vertex_count();
        let m = g.arrow_count();
        let total = 2 * (n + m);
        if initial.len() != total {
            return Err(Error::InvalidInput(format!("expected {total} cards, got {}", initial.len())));
        }
        let input = initial.slice(0..n);
        let mut rec = Recorder::new(initial.clone(), chooser);

        // (1) helping cards face down
        rec.apply("q0", &Action::Turn((n + 1..=total).collect()))?;

        // (2) x, pile[1], ..., pile[n]; helping order is reds then black groups
        let starts = self.pile_starts();
        let mut sources: Vec<usize> = (1..=n).collect();
        let mut black = 2 * n + 1;
        for v in 0..n {
            sources.push(n + 1 + v);
            sources.extend(black..black + self.profile.deg[v]);
            black += self.profile.deg[v];
        }
        rec.rearrange("q1", &sources)?;

        // (3) scramble piles within each degree class
        for (&d, class) in &self.profile.classes {
            if class.len() < 2 {
                continue;
            }
            let blocks = class.iter().map(|&v| (starts[v - 1]..=starts[v - 1] + d).collect()).collect();
            rec.apply("q2", &Action::shuffle(ShuffleSpec::pss_blocks(total, blocks)?))?;
        }
        let labels = self.read_labels(rec.sequence(), &starts)?;

        // (4) vertex[i] = (red in slot i, x_i); arrow[j→k] = (black from slot j, black from slot k)
        let mut next_black: Vec<usize> = starts.iter().map(|s| s + 1).collect();
        let mut take = |v: usize| {
            let p = next_black[v - 1];
            next_black[v - 1] += 1;
            p
        };
        let mut sources = Vec::with_capacity(total);
        for i in 1..=n {
            sources.extend([starts[i - 1], i]);
        }
        for &(j, k) in g.arrows() {
            let a = take(j);
            let b = take(k);
            sources.extend([a, b]);
        }
        rec.rearrange("q3", &sources)?;

        // (5) scramble all pairs
        let pairs = n + m;
        match self.final_shuffle {
            FinalShuffle::Random if pairs > 1 => {
                rec.apply("q4", &Action::shuffle(self.pair_shuffle()?))?;
            }
            FinalShuffle::Pinned(idx) if pairs > 1 => {
                let spec = self.pair_shuffle()?;
                if idx >= spec.branch_count() {
                    return Err(Error::InvalidShuffle(format!("branch {idx} out of range for {}", spec.label())));
                }
                rec.apply("q4", &Action::Perm(spec.branch(idx)))?;
            }
            _ => {}
        }

        // (6) open left cards, then right cards behind black left cards, then sort
        rec.apply("q5", &Action::Turn((0..pairs).map(|p| 2 * p + 1).collect()))?;
        let visible = rec.visible();
        let behind_black = (0..pairs).filter(|&p| matches!(visible[2 * p], Face::Up(Atom::Black(_)))).map(|p| 2 * p + 2).collect();
        rec.apply("q5", &Action::Turn(behind_black))?;
        let visible = rec.visible();
        let left = |p: usize| match visible[2 * p] {
            Face::Up(a) => Ok(a),
            Face::Back => Err(Error::Invariant(format!("left card of pair {} still face down", p + 1))),
        };
        let mut order: Vec<usize> = (0..pairs).collect();
        let keys: Vec<Atom> = order.iter().map(|&p| left(p)).collect::<Result<_>>()?;
        let mut sort_err = None;
        order.sort_by(|&a, &b| {
            keys[a].order_cmp(&keys[b]).unwrap_or_else(|e| {
                sort_err.get_or_insert(e);
                std::cmp::Ordering::Equal
            })
        });
        if let Some(e) = sort_err {
            return Err(e);
        }
        let sources: Vec<usize> = order.iter().flat_map(|&p| [2 * p + 1, 2 * p + 2]).collect();
        rec.rearrange("q6", &sources)?;

        // (7) G′ from the opened arrow pairs, in sorted order
        let visible = rec.visible();
        let number = |pos: usize| match visible[pos] {
            Face::Up(Atom::Black(k)) => Ok(k as usize),
            ref f => Err(Error::Invariant(format!("expected an opened black card at position {}, found {f}", pos + 1))),
        };
        for i in 0..n {
            if visible[2 * i] != Face::Up(Atom::Red(i as u32 + 1)) {
                return Err(Error::Invariant(format!("sorted pair {} does not start with red {}", i + 1, i + 1)));
            }
        }
        let opened: Vec<(usize, usize)> = (n..pairs).map(|p| Ok((number(2 * p)?, number(2 * p + 1)?))).collect::<Result<_>>()?;
        let opened_graph = Graph::new(n, opened)?;

        // (8) f: G → G′; output card i is the card beside red f(i)
        let iso = match &self.iso {
            IsoChoice::FirstFound => find_isomorphism(g, &opened_graph)?.ok_or_else(|| Error::Invariant("opened graph is not isomorphic to G".into()))?,
            IsoChoice::Fixed(f) => {
                if !is_iso0(g, &opened_graph, f)? {
                    return Err(Error::Invariant(format!("{f} is not an isomorphism onto the opened graph")));
                }
                f.clone()
            }
        };
        let mut sources: Vec<usize> = (1..=n).map(|i| 2 * iso.apply(i)).collect();
        sources.extend((1..=n).map(|i| 2 * i - 1));
        let mut blacks: Vec<(usize, usize)> = (2 * n + 1..=total).map(|pos| Ok((number(pos - 1)?, pos))).collect::<Result<_>>()?;
        blacks.sort();
        sources.extend(blacks.into_iter().map(|(_, pos)| pos));
        rec.rearrange("q7", &sources)?;

        let (trace, weight) = rec.finish("qf", Outcome::Terminated);
        let output = trace.final_sequence.slice(0..n);
        let output_perm = output_permutation(&input, &trace.final_sequence).ok_or_else(|| Error::Invariant("output is not a rearrangement of the input".into()))?;
        Ok(GraphShuffleRun { output, trace, weight, labels, opened_graph, isomorphism: iso, output_perm })
    }

    /// Reads which vertex pile sits in each slot (by the hidden red cards;
    /// bookkeeping only, never used to choose an action).
    fn read_labels(&self, seq: &CardSequence, starts: &[usize]) -> Result<Permutation> {
        let labels: Vec<usize> = starts
            .iter()
            .map(|&s| match seq.get(s).map(|c| c.atom) {
                Some(Atom::Red(v)) => Ok(v as usize),
                _ => Err(Error::Invariant(format!("slot at position {s} does not start with a red card"))),
            })
            .collect::<Result<_>>()?;
        Permutation::from_images(&labels)
    }
}

impl Protocol for GraphShuffleProtocol {
    fn name(&self) -> String {
        "graph-shuffle".into()
    }

    fn input_len(&self) -> usize {
        self.graph.vertex_count()
    }

    fn helping(&self) -> CardSequence {
        self.helping.clone()
    }

    fn execute(&self, initial: &CardSequence, chooser: &mut dyn Chooser) -> Result<(ExecutionTrace, Weight)> {
        self.run_detailed(initial, chooser).map(|r| (r.trace, r.weight))
    }
}

/// The opened pairs of a graph-shuffle trace as a sorted multiset, e.g.
/// `1 2|1 3|r1 ?|…`. Empty if the trace never reached the sort step.
pub fn opened_multiset(trace: &ExecutionTrace) -> String {
    let Some(step) = trace.steps.iter().find(|s| s.state == "q6") else {
        return String::new();
    };
    let mut pairs: Vec<String> = step.visible.chunks(2).map(crate::cards::visible_string).collect();
    pairs.sort();
    pairs.join("|")
}

/// One randomized run on face-down input `x`.
pub fn run_graph_shuffle<R: Rng>(g: &Graph, x: &CardSequence, rng: R) -> Result<(CardSequence, ExecutionTrace)> {
    let protocol = GraphShuffleProtocol::new(g.clone());
    if x.cards().iter().any(|c| c.orientation != Orientation::FaceDown) {
        return Err(Error::InvalidInput("input cards must be face down".into()));
    }
    let initial = protocol.initial_sequence(x)?;
    let run = protocol.run_detailed(&initial, &mut RandomChooser(rng))?;
    Ok((run.output, run.trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{enumerate_aut0, AutOptions};
    use crate::machine::ReplayChooser;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn five_vertex() -> Graph {
        Graph::new(5, vec![(1, 2), (1, 3), (2, 1), (2, 3), (3, 4), (3, 5)]).unwrap()
    }

    #[test]
    fn helping_deck_layouts() {
        assert_eq!(build_helping_deck(&five_vertex()).visible_string(), "r1 r2 r3 r4 r5 1 1 1 2 2 2 3 3 3 3 4 5");
        let c3 = build_helping_deck(&Graph::directed_cycle(3).unwrap());
        assert_eq!(c3.visible_string(), "r1 r2 r3 1 1 2 2 3 3");
        assert_eq!(build_helping_deck(&Graph::empty(1).unwrap()).visible_string(), "r1");
    }

    #[test]
    fn stats() {
        let s = protocol_stats(&five_vertex());
        assert_eq!((s.cards, s.helping_cards, s.shuffles, s.effective_shuffles), (22, 17, 4, 3));
        let labels: Vec<String> = s.pss.iter().map(|p| p.to_string()).collect();
        assert_eq!(labels, ["PSS(2,2)", "PSS(2,4)", "PSS(1,5)", "PSS(11,2)"]);
        for n in 2..6 {
            let s = protocol_stats(&Graph::directed_cycle(n).unwrap());
            assert_eq!((s.cards, s.shuffles), (4 * n, 2));
            let u = protocol_stats(&crate::graphs::UndirectedGraph::cycle(n.max(3)).unwrap().doubled());
            assert_eq!(u.cards, 6 * n.max(3));
        }
    }

    #[test]
    fn seeded_runs_output_automorphisms() {
        let g = five_vertex();
        let aut = enumerate_aut0(&g, &AutOptions::default()).unwrap();
        let p = GraphShuffleProtocol::new(g);
        let initial = p.initial_sequence(&CardSequence::face_down_inputs(5)).unwrap();
        for seed in 0..20 {
            let run = p.run_detailed(&initial, &mut RandomChooser(ChaCha8Rng::seed_from_u64(seed))).unwrap();
            assert!(aut.contains(&run.output_perm));
            assert_eq!(run.trace.final_sequence.slice(5..22).visible(), build_helping_deck(p.graph()).visible());
            assert!(run.trace.turned_ids.iter().all(|id| id.0 >= 5));
        }
    }

    #[test]
    fn single_vertex_is_identity() {
        let g = Graph::empty(1).unwrap();
        let x = CardSequence::face_down_inputs(1);
        let (y, trace) = run_graph_shuffle(&g, &x, ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(y, x);
        assert!(trace.choices().is_empty());
    }

    #[test]
    fn trivial_group_leaves_input_in_place() {
        let g = Graph::directed_path(3).unwrap();
        let p = GraphShuffleProtocol::new(g);
        let initial = p.initial_sequence(&CardSequence::face_down_inputs(3)).unwrap();
        for seed in 0..10 {
            let run = p.run_detailed(&initial, &mut RandomChooser(ChaCha8Rng::seed_from_u64(seed))).unwrap();
            assert!(run.output_perm.is_identity());
        }
    }

    #[test]
    fn fixed_isomorphism_must_match_opened_graph() {
        let p = GraphShuffleProtocol::new(five_vertex()).with_isomorphism(IsoChoice::Fixed(Permutation::parse_cycles("(1 3)", 5).unwrap())).unwrap();
        let initial = p.initial_sequence(&CardSequence::face_down_inputs(5)).unwrap();
        assert!(matches!(p.run_detailed(&initial, &mut ReplayChooser::default()), Err(Error::Invariant(_))));
    }
}
