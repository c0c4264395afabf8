//! Abstract card-protocol machine, execution traces and exhaustive branch
//! enumeration.
//!
//! Protocols come in two flavours: table-driven [`ProtocolMachine`]s whose
//! action function is keyed on (state, visible pattern), and procedural
//! drivers (see `graph_shuffle` and `cycle_protocols`) that compute each
//! action from visible data. Both implement [`Protocol`] and record the same
//! [`ExecutionTrace`], so the checkers below treat them uniformly.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_traits::One;
use rand::Rng;
use rayon::prelude::*;

use crate::cards::{check_positions, position_set_label, sample_weighted, visible_string, Atom, CardId, CardSequence, Face, RFlipSpec};
use crate::error::{Error, Result};
use crate::perm::{apply_perm, Permutation, ShuffleSpec};
use crate::Weight;

/// Default bound on the number of enumerated branches.
pub const DEFAULT_CAP: u64 = 10_000_000;

/// Default bound on machine steps before a run is declared non-terminating.
pub const DEFAULT_MAX_STEPS: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Turn(Vec<usize>),
    Perm(Permutation),
    Shuffle(Arc<ShuffleSpec>),
    RFlip(RFlipSpec),
}

impl Action {
    pub fn shuffle(spec: ShuffleSpec) -> Self {
        Action::Shuffle(Arc::new(spec))
    }

    pub fn label(&self) -> String {
        match self {
            Action::Turn(t) => format!("turn {}", position_set_label(t)),
            Action::Perm(p) => format!("perm {p}"),
            Action::Shuffle(s) => format!("shuffle {}", s.label()),
            Action::RFlip(r) => r.label(),
        }
    }

    fn check_dimension(&self, len: usize) -> Result<()> {
        let mismatch = |d: usize| if d == len { Ok(()) } else { Err(Error::DegreeMismatch { expected: len, actual: d }) };
        match self {
            Action::Turn(t) => check_positions(t, len),
            Action::Perm(p) => mismatch(p.degree()),
            Action::Shuffle(s) => mismatch(s.degree()),
            Action::RFlip(r) => r.validate_for(len),
        }
    }
}

/// Shape of a random choice handed to a [`Chooser`].
#[derive(Debug, Clone, Copy)]
pub enum Branching<'a> {
    Uniform(usize),
    Weighted(&'a [Weight]),
}

impl Branching<'_> {
    pub fn arity(&self) -> usize {
        match self {
            Branching::Uniform(n) => *n,
            Branching::Weighted(w) => w.len(),
        }
    }
}

/// Source of branch decisions for shuffles and random flips.
pub trait Chooser {
    fn choose(&mut self, branching: Branching<'_>) -> usize;
}

/// Draws branches from an RNG with their exact probabilities.
pub struct RandomChooser<R>(pub R);

impl<R: Rng> Chooser for RandomChooser<R> {
    fn choose(&mut self, branching: Branching<'_>) -> usize {
        match branching {
            Branching::Uniform(n) => self.0.gen_range(0..n),
            Branching::Weighted(w) => sample_weighted(w, &mut self.0),
        }
    }
}

/// Replays a fixed prefix of choices (then picks branch 0) and records the
/// arity met at every random step.
#[derive(Debug, Default, Clone)]
pub struct ReplayChooser {
    choices: Vec<usize>,
    arities: Vec<usize>,
}

impl ReplayChooser {
    pub fn new(choices: Vec<usize>) -> Self {
        Self { choices, arities: Vec::new() }
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }
}

impl Chooser for ReplayChooser {
    fn choose(&mut self, branching: Branching<'_>) -> usize {
        let k = self.arities.len();
        self.arities.push(branching.arity());
        self.choices.get(k).copied().unwrap_or(0).min(branching.arity() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub state: String,
    pub visible: Vec<Face>,
    pub action: String,
    pub branch: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Terminated,
    /// No action defined at this step index.
    Aborted { step: usize },
    /// Step bound reached without entering the final state.
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub steps: Vec<TraceStep>,
    pub final_state: String,
    pub final_sequence: CardSequence,
    pub turned_ids: BTreeSet<CardId>,
    pub outcome: Outcome,
}

impl ExecutionTrace {
    pub fn terminated(&self) -> bool {
        self.outcome == Outcome::Terminated
    }

    /// Branch indices taken at each random step, in order.
    pub fn choices(&self) -> Vec<usize> {
        self.steps.iter().filter_map(|s| s.branch).collect()
    }

    /// The visible sequence-trace: what an observer saw before every action
    /// and after the last one.
    pub fn visible_trace(&self) -> Vec<Vec<Face>> {
        let mut out: Vec<Vec<Face>> = self.steps.iter().map(|s| s.visible.clone()).collect();
        out.push(self.final_sequence.visible());
        out
    }

    /// Canonical, collision-free encoding of the visible sequence-trace.
    pub fn fingerprint(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.visible_trace().iter().enumerate() {
            if i > 0 {
                out.push('|');
            }
            out.push_str(&visible_string(v));
        }
        out
    }

    /// Line-oriented text form: `state<TAB>visible<TAB>action<TAB>branch`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let branch = s.branch.map_or_else(|| "-".to_string(), |b| b.to_string());
            let _ = writeln!(out, "{}\t{}\t{}\t{}", s.state, visible_string(&s.visible), s.action, branch);
        }
        let end = match self.outcome {
            Outcome::Terminated => "end",
            Outcome::Aborted { .. } => "abort",
            Outcome::StepLimit => "step-limit",
        };
        let _ = writeln!(out, "{}\t{}\t{}\t-", self.final_state, self.final_sequence.visible_string(), end);
        out
    }
}

impl fmt::Display for ExecutionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Applies actions to an evolving card-sequence and records the trace.
pub struct Recorder<'c> {
    seq: CardSequence,
    steps: Vec<TraceStep>,
    turned: BTreeSet<CardId>,
    weight: Weight,
    chooser: &'c mut dyn Chooser,
}

impl<'c> Recorder<'c> {
    pub fn new(initial: CardSequence, chooser: &'c mut dyn Chooser) -> Self {
        Self { seq: initial, steps: Vec::new(), turned: BTreeSet::new(), weight: Weight::one(), chooser }
    }

    pub fn sequence(&self) -> &CardSequence {
        &self.seq
    }

    pub fn visible(&self) -> Vec<Face> {
        self.seq.visible()
    }

    /// Executes one action from `state`; returns the branch taken for
    /// random actions.
    pub fn apply(&mut self, state: &str, action: &Action) -> Result<Option<usize>> {
        action.check_dimension(self.seq.len())?;
        let visible = self.seq.visible();
        let (next, branch) = match action {
            Action::Turn(t) => {
                self.mark_turned(t);
                (self.seq.turn(t)?, None)
            }
            Action::Perm(p) => (apply_perm(p, &self.seq)?, None),
            Action::Shuffle(spec) => {
                let b = if spec.is_uniform() {
                    self.chooser.choose(Branching::Uniform(spec.branch_count()))
                } else {
                    self.chooser.choose(Branching::Weighted(&spec.weights()))
                };
                self.weight *= spec.weight(b);
                (apply_perm(&spec.branch(b), &self.seq)?, Some(b))
            }
            Action::RFlip(r) => {
                let b = self.chooser.choose(Branching::Weighted(r.weights()));
                self.weight *= r.weights()[b];
                let subset = r.subsets()[b].clone();
                self.mark_turned(&subset);
                (self.seq.turn(&subset)?, Some(b))
            }
        };
        self.steps.push(TraceStep { state: state.to_string(), visible, action: action.label(), branch });
        self.seq = next;
        Ok(branch)
    }

    /// Convenience: rearrange so that position `i` receives the card formerly
    /// at `sources[i-1]`.
    pub fn rearrange(&mut self, state: &str, sources: &[usize]) -> Result<()> {
        let sigma = Permutation::from_sources(sources)?;
        self.apply(state, &Action::Perm(sigma)).map(|_| ())
    }

    fn mark_turned(&mut self, positions: &[usize]) {
        for &p in positions {
            if let Some(c) = self.seq.get(p) {
                self.turned.insert(c.id);
            }
        }
    }

    pub fn finish(self, final_state: &str, outcome: Outcome) -> (ExecutionTrace, Weight) {
        let trace = ExecutionTrace {
            steps: self.steps,
            final_state: final_state.to_string(),
            final_sequence: self.seq,
            turned_ids: self.turned,
            outcome,
        };
        (trace, self.weight)
    }
}

/// Anything that can be executed on an initial card-sequence.
pub trait Protocol: Sync {
    fn name(&self) -> String;

    /// Number of input cards at the front of the initial sequence.
    fn input_len(&self) -> usize;

    /// Helping cards that follow the input, exactly as they must be restored.
    fn helping(&self) -> CardSequence;

    fn execute(&self, initial: &CardSequence, chooser: &mut dyn Chooser) -> Result<(ExecutionTrace, Weight)>;

    fn initial_sequence(&self, input: &CardSequence) -> Result<CardSequence> {
        if input.len() != self.input_len() {
            return Err(Error::InvalidInput(format!("expected {} input cards, got {}", self.input_len(), input.len())));
        }
        input.concat(&self.helping())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternEntry {
    Exact(Face),
    Any,
}

/// Visible-sequence pattern used as an action-table key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisiblePattern(pub Vec<PatternEntry>);

impl VisiblePattern {
    /// Space-separated tokens: card faces (`3`, `r3`, `x1`, `?`) or `*`.
    pub fn parse(text: &str) -> Result<Self> {
        text.split_whitespace()
            .map(|t| if t == "*" { Ok(PatternEntry::Any) } else { t.parse().map(PatternEntry::Exact) })
            .collect::<Result<Vec<_>>>()
            .map(VisiblePattern)
    }

    pub fn matches(&self, visible: &[Face]) -> bool {
        self.0.len() == visible.len()
            && self.0.iter().zip(visible).all(|(p, v)| match p {
                PatternEntry::Any => true,
                PatternEntry::Exact(f) => f == v,
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub state: String,
    pub pattern: VisiblePattern,
    pub next: String,
    pub action: Action,
}

impl Rule {
    pub fn new(state: &str, pattern: &str, next: &str, action: Action) -> Result<Self> {
        Ok(Self { state: state.into(), pattern: VisiblePattern::parse(pattern)?, next: next.into(), action })
    }
}

/// Table-driven card-based protocol `(D, U, Q, A)`.
#[derive(Debug, Clone)]
pub struct ProtocolMachine {
    deck: Vec<Atom>,
    inputs: Vec<CardSequence>,
    initial: String,
    final_state: String,
    rules: Vec<Rule>,
    input_len: usize,
    helping: CardSequence,
    max_steps: usize,
}

impl ProtocolMachine {
    pub fn new(deck: Vec<Atom>, inputs: Vec<CardSequence>, initial: &str, final_state: &str, rules: Vec<Rule>) -> Result<Self> {
        let mut deck = deck;
        deck.sort();
        if rules.iter().any(|r| r.state == final_state) {
            return Err(Error::InvalidMachine(format!("final state {final_state} has outgoing actions")));
        }
        for r in &rules {
            r.action.check_dimension(deck.len())?;
            if r.pattern.0.len() != deck.len() {
                return Err(Error::InvalidMachine(format!("pattern length {} ≠ deck size {}", r.pattern.0.len(), deck.len())));
            }
        }
        let machine = Self {
            input_len: deck.len(),
            helping: CardSequence::from_atoms([], crate::cards::Orientation::FaceUp, 0),
            deck,
            inputs,
            initial: initial.into(),
            final_state: final_state.into(),
            rules,
            max_steps: DEFAULT_MAX_STEPS,
        };
        for x in &machine.inputs {
            machine.check_deck(x)?;
            if machine.action_for(&machine.initial, &x.visible()).is_none() {
                return Err(Error::InvalidMachine(format!("no action at initial state for input {}", x.visible_string())));
            }
        }
        Ok(machine)
    }

    /// Declares the first `input_len` cards as input and the rest as the
    /// helping sequence `helping`, for shuffle-protocol checks.
    pub fn with_shuffle_layout(mut self, input_len: usize, helping: CardSequence) -> Result<Self> {
        if input_len + helping.len() != self.deck.len() {
            return Err(Error::InvalidMachine("input and helping sizes do not cover the deck".into()));
        }
        self.input_len = input_len;
        self.helping = helping;
        Ok(self)
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn deck(&self) -> &[Atom] {
        &self.deck
    }

    pub fn inputs(&self) -> &[CardSequence] {
        &self.inputs
    }

    pub fn states(&self) -> BTreeSet<String> {
        let mut s: BTreeSet<String> = self.rules.iter().flat_map(|r| [r.state.clone(), r.next.clone()]).collect();
        s.insert(self.initial.clone());
        s.insert(self.final_state.clone());
        s
    }

    /// First rule matching `(state, visible)`.
    pub fn action_for(&self, state: &str, visible: &[Face]) -> Option<&Rule> {
        self.rules.iter().find(|r| r.state == state && r.pattern.matches(visible))
    }

    fn check_deck(&self, seq: &CardSequence) -> Result<()> {
        if seq.deck() != self.deck {
            return Err(Error::InvalidInput(format!("sequence {} is not over the machine deck", seq.visible_string())));
        }
        Ok(())
    }
}

impl Protocol for ProtocolMachine {
    fn name(&self) -> String {
        "machine".into()
    }

    fn input_len(&self) -> usize {
        self.input_len
    }

    fn helping(&self) -> CardSequence {
        self.helping.clone()
    }

    fn execute(&self, initial: &CardSequence, chooser: &mut dyn Chooser) -> Result<(ExecutionTrace, Weight)> {
        self.check_deck(initial)?;
        if !self.inputs.is_empty() && !self.inputs.iter().any(|x| x.visible() == initial.visible() && x.deck() == initial.deck()) {
            return Err(Error::InvalidInput("initial sequence not in the input set".into()));
        }
        let mut rec = Recorder::new(initial.clone(), chooser);
        let mut state = self.initial.clone();
        for step in 0..self.max_steps {
            if state == self.final_state {
                return Ok(rec.finish(&state, Outcome::Terminated));
            }
            let Some(rule) = self.action_for(&state, &rec.visible()) else {
                return Ok(rec.finish(&state, Outcome::Aborted { step }));
            };
            rec.apply(&state, &rule.action)?;
            state = rule.next.clone();
        }
        let outcome = if state == self.final_state { Outcome::Terminated } else { Outcome::StepLimit };
        Ok(rec.finish(&state, outcome))
    }
}

/// Runs a protocol once, drawing branches from `rng`.
pub fn run<P: Protocol + ?Sized, R: Rng>(protocol: &P, initial: &CardSequence, rng: R) -> Result<ExecutionTrace> {
    let mut chooser = RandomChooser(rng);
    protocol.execute(initial, &mut chooser).map(|(t, _)| t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationOptions {
    pub cap: u64,
    pub parallel: bool,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_CAP, parallel: true }
    }
}

/// Every joint choice of random branches, with its exact weight, in
/// lexicographic order of the choice vectors.
pub fn enumerate_runs<P: Protocol + ?Sized>(protocol: &P, initial: &CardSequence, opts: &EnumerationOptions) -> Result<Vec<(ExecutionTrace, Weight)>> {
    fold_runs(
        protocol,
        initial,
        opts,
        Vec::new,
        |acc: &mut Vec<(ExecutionTrace, Weight)>, t, w| {
            acc.push((t, w));
            Ok(())
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    )
}

/// Branch count along the all-zero path (exact when the branching structure
/// does not depend on earlier choices).
pub fn estimate_branches<P: Protocol + ?Sized>(protocol: &P, initial: &CardSequence) -> Result<u128> {
    let mut probe = ReplayChooser::default();
    protocol.execute(initial, &mut probe)?;
    Ok(probe.arities.iter().map(|&a| a as u128).product())
}

/// Folds over every run. The branch tree is split on the first random
/// choice; subtrees are evaluated independently (in parallel when asked) and
/// merged in branch order, so the result never depends on scheduling.
pub fn fold_runs<P, A, I, F, M>(protocol: &P, initial: &CardSequence, opts: &EnumerationOptions, init: I, fold: F, merge: M) -> Result<A>
where
    P: Protocol + ?Sized,
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, ExecutionTrace, Weight) -> Result<()> + Sync,
    M: Fn(A, A) -> A,
{
    let mut probe = ReplayChooser::default();
    protocol.execute(initial, &mut probe)?;
    let needed: u128 = probe.arities.iter().map(|&a| a as u128).product();
    if needed > opts.cap as u128 {
        return Err(Error::CapExceeded { needed, cap: opts.cap });
    }
    let counter = AtomicU64::new(0);
    let subtree = |prefix: Vec<usize>| -> Result<A> {
        let mut acc = init();
        walk_subtree(protocol, initial, prefix, &counter, opts.cap, &mut |t, w| fold(&mut acc, t, w))?;
        Ok(acc)
    };
    let Some(&first) = probe.arities.first() else {
        return subtree(Vec::new());
    };
    let parts: Vec<Result<A>> = if opts.parallel {
        (0..first).into_par_iter().map(|c| subtree(vec![c])).collect()
    } else {
        (0..first).map(|c| subtree(vec![c])).collect()
    };
    let mut out: Option<A> = None;
    for part in parts {
        let part = part?;
        out = Some(match out {
            None => part,
            Some(acc) => merge(acc, part),
        });
    }
    Ok(out.unwrap_or_else(init))
}

fn walk_subtree<P: Protocol + ?Sized>(
    protocol: &P,
    initial: &CardSequence,
    prefix: Vec<usize>,
    counter: &AtomicU64,
    cap: u64,
    visit: &mut dyn FnMut(ExecutionTrace, Weight) -> Result<()>,
) -> Result<()> {
    let fixed = prefix.len();
    let mut choices = prefix;
    loop {
        let mut chooser = ReplayChooser::new(choices.clone());
        let (trace, weight) = protocol.execute(initial, &mut chooser)?;
        let seen = counter.fetch_add(1, Ordering::Relaxed) + 1;
        if seen > cap {
            return Err(Error::CapExceeded { needed: seen as u128, cap });
        }
        visit(trace, weight)?;
        let arities = chooser.arities;
        choices.resize(arities.len(), 0);
        // odometer step over the free (non-prefix) positions
        let Some(k) = (fixed..arities.len()).rev().find(|&k| choices[k] + 1 < arities[k]) else {
            return Ok(());
        };
        choices.truncate(k + 1);
        choices[k] += 1;
    }
}

/// Result of one shuffle-protocol condition over all enumerated branches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionResult {
    pub pass: bool,
    pub counterexample: Option<Counterexample>,
}

impl ConditionResult {
    fn ok() -> Self {
        Self { pass: true, counterexample: None }
    }

    fn record(&mut self, branch: u64, reason: String, trace: &ExecutionTrace) {
        if self.pass {
            self.pass = false;
            self.counterexample = Some(Counterexample { branch, reason, trace: trace.to_text() });
        }
    }

    fn merge(&mut self, other: ConditionResult) {
        if self.pass && !other.pass {
            *self = other;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    /// Index of the offending branch in enumeration order.
    pub branch: u64,
    pub reason: String,
    pub trace: String,
}

/// Verdicts for: (a) finite runtime, (b) final sequence is `(σ(x), h)`,
/// (c) no input card is ever turned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShuffleProtocolReport {
    pub finite_runtime: ConditionResult,
    pub output_form: ConditionResult,
    pub inputs_never_turned: ConditionResult,
    pub branches: u64,
    /// Longest run, in steps.
    pub max_steps: usize,
}

impl Default for ShuffleProtocolReport {
    fn default() -> Self {
        Self {
            finite_runtime: ConditionResult::ok(),
            output_form: ConditionResult::ok(),
            inputs_never_turned: ConditionResult::ok(),
            branches: 0,
            max_steps: 0,
        }
    }
}

impl ShuffleProtocolReport {
    pub fn passed(&self) -> bool {
        self.finite_runtime.pass && self.output_form.pass && self.inputs_never_turned.pass
    }

    pub fn merge(mut self, other: ShuffleProtocolReport) -> Self {
        // counterexample branch indices of `other` are relative to its own range
        let offset = self.branches;
        let shift = |mut c: ConditionResult| {
            if let Some(ce) = c.counterexample.as_mut() {
                ce.branch += offset;
            }
            c
        };
        self.finite_runtime.merge(shift(other.finite_runtime));
        self.output_form.merge(shift(other.output_form));
        self.inputs_never_turned.merge(shift(other.inputs_never_turned));
        self.branches += other.branches;
        self.max_steps = self.max_steps.max(other.max_steps);
        self
    }

    /// Checks one trace of the run on input `x` with helping sequence `h`.
    pub fn observe(&mut self, input: &CardSequence, helping: &CardSequence, trace: &ExecutionTrace) {
        let branch = self.branches;
        self.branches += 1;
        self.max_steps = self.max_steps.max(trace.steps.len());
        match trace.outcome {
            Outcome::Terminated => {}
            Outcome::Aborted { step } => self.finite_runtime.record(branch, format!("aborted at step {step}"), trace),
            Outcome::StepLimit => self.finite_runtime.record(branch, "did not reach the final state".into(), trace),
        }
        if let Err(reason) = check_output_form(input, helping, &trace.final_sequence) {
            self.output_form.record(branch, reason, trace);
        }
        let input_ids: BTreeSet<CardId> = input.ids().into_iter().collect();
        if let Some(id) = trace.turned_ids.intersection(&input_ids).next() {
            self.inputs_never_turned.record(branch, format!("input card {id} was turned"), trace);
        }
    }
}

fn check_output_form(input: &CardSequence, helping: &CardSequence, fin: &CardSequence) -> std::result::Result<(), String> {
    let n = input.len();
    if fin.len() != n + helping.len() {
        return Err(format!("final sequence has {} cards, expected {}", fin.len(), n + helping.len()));
    }
    if output_permutation(input, fin).is_none() {
        return Err(format!("first {n} cards are not a rearrangement of the input"));
    }
    for (k, (got, want)) in fin.cards()[n..].iter().zip(helping.cards()).enumerate() {
        if got.atom != want.atom || got.orientation != want.orientation {
            return Err(format!("helping position {} holds {} ({:?}), expected {} ({:?})", k + 1, got.atom, got.orientation, want.atom, want.orientation));
        }
    }
    Ok(())
}

/// The permutation `σ` with `final[..n] = σ(input)`, matching cards by id,
/// atom and orientation; `None` if no such permutation exists.
pub fn output_permutation(input: &CardSequence, fin: &CardSequence) -> Option<Permutation> {
    let n = input.len();
    if fin.len() < n {
        return None;
    }
    let mut images = vec![0usize; n];
    let mut used = vec![false; n];
    for (j, card) in input.cards().iter().enumerate() {
        let i = fin.cards()[..n].iter().position(|c| c.id == card.id)?;
        let got = &fin.cards()[i];
        if got.atom != card.atom || got.orientation != card.orientation || used[i] {
            return None;
        }
        used[i] = true;
        images[j] = i + 1;
    }
    Permutation::from_images(&images).ok()
}

/// Exhaustively checks the three shuffle-protocol conditions for every given
/// input (each followed by `helping`).
pub fn check_shuffle_protocol<P: Protocol + ?Sized>(
    protocol: &P,
    inputs: &[CardSequence],
    helping: &CardSequence,
    opts: &EnumerationOptions,
) -> Result<ShuffleProtocolReport> {
    let mut total = ShuffleProtocolReport::default();
    for x in inputs {
        if x.cards().iter().any(|c| c.orientation != crate::cards::Orientation::FaceDown) {
            return Err(Error::InvalidInput("shuffle-protocol inputs must be face-down".into()));
        }
        let initial = x.concat(helping)?;
        let report = fold_runs(
            protocol,
            &initial,
            opts,
            ShuffleProtocolReport::default,
            |acc, trace, _| {
                acc.observe(x, helping, &trace);
                Ok(())
            },
            ShuffleProtocolReport::merge,
        )?;
        total = total.merge(report);
    }
    Ok(total)
}
