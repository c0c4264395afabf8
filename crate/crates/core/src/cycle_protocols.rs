//! 3n-card shuffle protocols for the directed and the undirected `n`-cycle.
//!
//! Helping cards are two black cards per symbol, `1 1 2 2 … n n`. The pairs
//! are scrambled, then input card `x_i` is grouped with one card of the
//! pair in slot `i` and one of slot `i+1`, so that opening the black cards
//! after a second scramble reveals a single chain `c₁→d₁=c₂→…→d_n=c₁`.
//! Following that chain puts the input cards back in cyclic order from a
//! uniformly random start. The undirected variant adds a scramble of two
//! blocks that may reverse the chain direction.

use rand::Rng;

use crate::cards::{Atom, CardSequence, Face, Orientation};
use crate::error::{Error, Result};
use crate::machine::{output_permutation, Action, Chooser, ExecutionTrace, Outcome, Protocol, RandomChooser, Recorder};
use crate::perm::{Permutation, ShuffleSpec};
use crate::Weight;

/// `1 1 2 2 … n n`, face up, ids starting at `n`.
pub fn cycle_helping_deck(n: usize) -> CardSequence {
    let atoms = (1..=n as u32).flat_map(|k| [Atom::Black(k), Atom::Black(k)]);
    CardSequence::from_atoms(atoms, Orientation::FaceUp, n as u32)
}

/// Pile order that turns opened pairs `(a_i, b_i)` into one chain starting
/// at pile 1 with `b` of each pile equal to `a` of the next, as a
/// rearrangement of piles: slot `i` receives the pile at chain step `i`.
pub fn chain_sort(pairs: &[(usize, usize)]) -> Result<Permutation> {
    let n = pairs.len();
    if n == 0 {
        return Err(Error::BrokenChain("no piles".into()));
    }
    let mut by_left = vec![None; n];
    let mut right_seen = vec![false; n];
    for (p, &(a, b)) in pairs.iter().enumerate() {
        for s in [a, b] {
            if s == 0 || s > n {
                return Err(Error::BrokenChain(format!("symbol {s} outside 1..={n}")));
            }
        }
        if by_left[a - 1].replace(p).is_some() {
            return Err(Error::BrokenChain(format!("symbol {a} opens two piles")));
        }
        if std::mem::replace(&mut right_seen[b - 1], true) {
            return Err(Error::BrokenChain(format!("symbol {b} closes two piles")));
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut p = 0;
    for _ in 0..n {
        order.push(p + 1);
        p = by_left[pairs[p].1 - 1].expect("every symbol opens a pile");
        if p == 0 && order.len() < n {
            return Err(Error::BrokenChain(format!("pairs close a cycle after {} of {n} piles", order.len())));
        }
    }
    Permutation::from_sources(&order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleStats {
    pub cards: usize,
    pub helping_cards: usize,
    pub shuffles: usize,
}

/// Shuffle protocol for the directed cycle (`reflect = false`) or the
/// undirected cycle (`reflect = true`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleShuffleProtocol {
    n: usize,
    reflect: bool,
    scramble_triples: bool,
}

impl CycleShuffleProtocol {
    pub fn directed(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("cycle needs at least one vertex".into()));
        }
        Ok(Self { n, reflect: false, scramble_triples: true })
    }

    pub fn undirected(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput("undirected cycle protocol needs n ≥ 3".into()));
        }
        Ok(Self { n, reflect: true, scramble_triples: true })
    }

    /// Drops the scramble of the triples, so the chain always starts at
    /// vertex 1. Broken on purpose; for negative tests.
    pub fn without_final_scramble(mut self) -> Self {
        self.scramble_triples = false;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_undirected(&self) -> bool {
        self.reflect
    }

    pub fn stats(&self) -> CycleStats {
        CycleStats { cards: 3 * self.n, helping_cards: 2 * self.n, shuffles: if self.reflect { 3 } else { 2 } }
    }

    /// Runs once; returns the trace, its weight and `σ` with `y = σ(x)`.
    pub fn run_detailed(&self, initial: &CardSequence, chooser: &mut dyn Chooser) -> Result<(ExecutionTrace, Weight, Permutation)> {
        let n = self.n;
        let total = 3 * n;
        if initial.len() != total {
            return Err(Error::InvalidInput(format!("expected {total} cards, got {}", initial.len())));
        }
        let mut rec = Recorder::new(initial.clone(), chooser);
        let pair = |i: usize| n + 2 * i - 1;
        let next = |i: usize| i % n + 1;

        rec.apply("q0", &Action::Turn((n + 1..=total).collect()))?;
        if n > 1 {
            let blocks = (1..=n).map(|i| vec![pair(i), pair(i) + 1]).collect();
            rec.apply("q1", &Action::shuffle(ShuffleSpec::pss_blocks(total, blocks)?))?;
        }

        let mut sources = Vec::with_capacity(total);
        if self.reflect {
            // x, first cards α₁…α_n, second cards α₂…α_n α₁; then maybe swap the blocks
            sources.extend(1..=n);
            sources.extend((1..=n).map(pair));
            sources.extend((1..=n).map(|i| pair(next(i)) + 1));
            rec.rearrange("q2", &sources)?;
            let blocks = vec![(n + 1..=2 * n).collect(), (2 * n + 1..=3 * n).collect()];
            rec.apply("q2", &Action::shuffle(ShuffleSpec::pss_blocks(total, blocks)?))?;
            sources = (1..=n).flat_map(|i| [i, n + i, 2 * n + i]).collect();
        } else {
            sources.extend((1..=n).flat_map(|i| [i, pair(i), pair(next(i)) + 1]));
        }
        rec.rearrange("q3", &sources)?;
        if n > 1 && self.scramble_triples {
            rec.apply("q4", &Action::shuffle(ShuffleSpec::pss(n, 3)?))?;
        }

        rec.apply("q5", &Action::Turn((1..=n).flat_map(|i| [3 * i - 1, 3 * i]).collect()))?;
        let visible = rec.visible();
        let symbol = |pos| opened_symbol(&visible, pos);
        let pairs: Vec<(usize, usize)> = (1..=n).map(|i| Ok((symbol(3 * i - 1)?, symbol(3 * i)?))).collect::<Result<_>>()?;
        let order = chain_sort(&pairs)?;
        // piles in chain order
        let piles = order.inverse().images();
        rec.rearrange("q6", &piles.iter().flat_map(|&p| [3 * p - 2, 3 * p - 1, 3 * p]).collect::<Vec<_>>())?;

        let visible = rec.visible();
        let mut sources: Vec<usize> = (1..=n).map(|i| 3 * i - 2).collect();
        let mut blacks: Vec<(usize, usize)> = (1..=n).flat_map(|i| [3 * i - 1, 3 * i]).map(|pos| Ok((opened_symbol(&visible, pos)?, pos))).collect::<Result<_>>()?;
        blacks.sort();
        sources.extend(blacks.into_iter().map(|(_, pos)| pos));
        rec.rearrange("q7", &sources)?;

        let (trace, weight) = rec.finish("qf", Outcome::Terminated);
        let sigma = output_permutation(&initial.slice(0..n), &trace.final_sequence)
            .ok_or_else(|| Error::Invariant("output is not a rearrangement of the input".into()))?;
        Ok((trace, weight, sigma))
    }
}

fn opened_symbol(visible: &[Face], pos: usize) -> Result<usize> {
    match visible[pos - 1] {
        Face::Up(Atom::Black(k)) => Ok(k as usize),
        ref f => Err(Error::Invariant(format!("expected an opened black card at position {pos}, found {f}"))),
    }
}

impl Protocol for CycleShuffleProtocol {
    fn name(&self) -> String {
        if self.reflect { format!("undirected-cycle({})", self.n) } else { format!("directed-cycle({})", self.n) }
    }

    fn input_len(&self) -> usize {
        self.n
    }

    fn helping(&self) -> CardSequence {
        cycle_helping_deck(self.n)
    }

    fn execute(&self, initial: &CardSequence, chooser: &mut dyn Chooser) -> Result<(ExecutionTrace, Weight)> {
        self.run_detailed(initial, chooser).map(|(t, w, _)| (t, w))
    }
}

fn run_cycle<R: Rng>(protocol: CycleShuffleProtocol, x: &CardSequence, rng: R) -> Result<(CardSequence, ExecutionTrace)> {
    if x.cards().iter().any(|c| c.orientation != Orientation::FaceDown) {
        return Err(Error::InvalidInput("input cards must be face down".into()));
    }
    let initial = protocol.initial_sequence(x)?;
    let (trace, _, _) = protocol.run_detailed(&initial, &mut RandomChooser(rng))?;
    Ok((trace.final_sequence.slice(0..protocol.n), trace))
}

pub fn run_directed_cycle_shuffle<R: Rng>(n: usize, x: &CardSequence, rng: R) -> Result<(CardSequence, ExecutionTrace)> {
    run_cycle(CycleShuffleProtocol::directed(n)?, x, rng)
}

pub fn run_undirected_cycle_shuffle<R: Rng>(n: usize, x: &CardSequence, rng: R) -> Result<(CardSequence, ExecutionTrace)> {
    run_cycle(CycleShuffleProtocol::undirected(n)?, x, rng)
}
