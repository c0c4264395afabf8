//! Exact (and, as a fallback, statistical) verification that a protocol
//! realizes a target shuffle and leaks nothing about the applied
//! permutation through what an observer sees.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use itertools::Itertools;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::cards::CardSequence;
use crate::error::{Error, Result};
use crate::graph_shuffle::{opened_multiset, FinalShuffle, GraphShuffleProtocol};
use crate::graphs::{enumerate_aut0, is_iso0, AutOptions, Graph, VertexPermSet};
use crate::machine::{fold_runs, output_permutation, EnumerationOptions, ExecutionTrace, Protocol, RandomChooser};
use crate::perm::{Permutation, ShuffleSpec};
use crate::Weight;

/// Largest graph the brute-force automorphism oracle accepts.
pub const ORACLE_MAX_VERTICES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exhaustive,
    Sampled { seed: u64, samples: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Never,
    /// Fall back to sampling when the branch count exceeds the cap.
    OnCapExceeded { samples: u64, seed: u64 },
    Always { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DistributionOptions {
    pub enumeration: EnumerationOptions,
    pub sampling: Sampling,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        Self { enumeration: EnumerationOptions::default(), sampling: Sampling::Never }
    }
}

/// Count and exact probability mass of one outcome class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tally {
    pub count: u64,
    pub mass: Weight,
}

impl Default for Tally {
    fn default() -> Self {
        Self { count: 0, mass: Weight::zero() }
    }
}

impl Tally {
    fn add(&mut self, other: Tally) {
        self.count += other.count;
        self.mass += other.mass;
    }
}

/// Joint distribution of the output permutation and the observer's view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionReport {
    pub total: u64,
    pub per_perm: BTreeMap<Permutation, Tally>,
    /// Keyed by the view string (by default the trace fingerprint).
    pub per_trace: BTreeMap<String, Tally>,
    pub joint: BTreeMap<(Permutation, String), Tally>,
    pub mode: Mode,
    /// Every branch had the same probability.
    pub equiprobable: bool,
    first_weight: Option<Weight>,
}

impl DistributionReport {
    fn empty(mode: Mode) -> Self {
        Self {
            total: 0,
            per_perm: BTreeMap::new(),
            per_trace: BTreeMap::new(),
            joint: BTreeMap::new(),
            mode,
            equiprobable: true,
            first_weight: None,
        }
    }

    fn observe(&mut self, sigma: Permutation, view: String, weight: Weight) {
        let t = Tally { count: 1, mass: weight };
        self.total += 1;
        match self.first_weight {
            None => self.first_weight = Some(weight),
            Some(w) if w != weight => self.equiprobable = false,
            Some(_) => {}
        }
        self.per_perm.entry(sigma.clone()).or_default().add(t);
        self.per_trace.entry(view.clone()).or_default().add(t);
        self.joint.entry((sigma, view)).or_default().add(t);
    }

    fn merge(mut self, other: DistributionReport) -> Self {
        self.total += other.total;
        self.equiprobable &= other.equiprobable;
        match (self.first_weight, other.first_weight) {
            (Some(a), Some(b)) if a != b => self.equiprobable = false,
            (None, b) => self.first_weight = b,
            _ => {}
        }
        for (k, v) in other.per_perm {
            self.per_perm.entry(k).or_default().add(v);
        }
        for (k, v) in other.per_trace {
            self.per_trace.entry(k).or_default().add(v);
        }
        for (k, v) in other.joint {
            self.joint.entry(k).or_default().add(v);
        }
        self
    }

    /// Probability of each output permutation: exact mass when
    /// exhaustive, relative frequency when sampled.
    pub fn probability(&self, sigma: &Permutation) -> Weight {
        match (self.mode, self.per_perm.get(sigma)) {
            (_, None) => Weight::zero(),
            (Mode::Exhaustive, Some(t)) => t.mass,
            (Mode::Sampled { .. }, Some(t)) => Weight::new(t.count as u128, self.total as u128),
        }
    }

    /// Tab-separated lines: header comments, then one line per permutation
    /// with its count and probability `p/q`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        match self.mode {
            Mode::Exhaustive => out.push_str("# mode\texhaustive\n"),
            Mode::Sampled { seed, samples } => {
                let _ = writeln!(out, "# mode\tsampled\tseed={seed}\tsamples={samples}");
            }
        }
        let _ = writeln!(out, "# branches\t{}", self.total);
        let _ = writeln!(out, "# views\t{}", self.per_trace.len());
        out.push_str("permutation\tcount\tprobability\n");
        for (sigma, t) in &self.per_perm {
            let p = self.probability(sigma);
            let _ = writeln!(out, "{sigma}\t{}\t{}/{}", t.count, p.numer(), p.denom());
        }
        out
    }
}

/// Outcome of a check.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail { reason: String },
    /// Sampled evidence only; never a pass on an exactness claim.
    Statistical { chi_square: f64, dof: usize, p_value: f64 },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn label(&self) -> String {
        match self {
            Verdict::Pass => "pass".into(),
            Verdict::Fail { reason } => format!("fail\t{reason}"),
            Verdict::Statistical { chi_square, dof, p_value } => {
                format!("statistical\tchi2={chi_square:.4}\tdof={dof}\tp={p_value:.4}")
            }
        }
    }
}

/// Maps a finished trace to the observer's view used for independence.
pub type View = dyn Fn(&ExecutionTrace) -> String + Sync;

pub fn full_trace_view(trace: &ExecutionTrace) -> String {
    trace.fingerprint()
}

/// Distribution of the output permutation and the visible trace on input
/// `x`, by exhaustive enumeration or by sampling.
pub fn distribution<P: Protocol + ?Sized>(protocol: &P, x: &CardSequence, opts: &DistributionOptions) -> Result<DistributionReport> {
    distribution_with_view(protocol, x, opts, &full_trace_view)
}

pub fn distribution_with_view<P: Protocol + ?Sized>(protocol: &P, x: &CardSequence, opts: &DistributionOptions, view: &View) -> Result<DistributionReport> {
    let initial = protocol.initial_sequence(x)?;
    let exhaustive = || {
        fold_runs(
            protocol,
            &initial,
            &opts.enumeration,
            || DistributionReport::empty(Mode::Exhaustive),
            |acc, trace, weight| {
                acc.observe(output_of(x, &trace)?, view(&trace), weight);
                Ok(())
            },
            DistributionReport::merge,
        )
    };
    match opts.sampling {
        Sampling::Never => exhaustive(),
        Sampling::Always { samples, seed } => sample(protocol, x, &initial, samples, seed, view),
        Sampling::OnCapExceeded { samples, seed } => match exhaustive() {
            Err(Error::CapExceeded { .. }) => sample(protocol, x, &initial, samples, seed, view),
            other => other,
        },
    }
}

fn output_of(x: &CardSequence, trace: &ExecutionTrace) -> Result<Permutation> {
    output_permutation(x, &trace.final_sequence).ok_or_else(|| Error::Verify(format!("branch output is not a rearrangement of the input:\n{}", trace.to_text())))
}

fn sample<P: Protocol + ?Sized>(protocol: &P, x: &CardSequence, initial: &CardSequence, samples: u64, seed: u64, view: &View) -> Result<DistributionReport> {
    let mut chooser = RandomChooser(ChaCha8Rng::seed_from_u64(seed));
    let mut report = DistributionReport::empty(Mode::Sampled { seed, samples });
    for _ in 0..samples {
        let (trace, weight) = protocol.execute(initial, &mut chooser)?;
        report.observe(output_of(x, &trace)?, view(&trace), weight);
    }
    Ok(report)
}

/// Whether the output distribution equals the target shuffle's exactly.
pub fn check_realizes(report: &DistributionReport, target: &ShuffleSpec) -> Verdict {
    let expected: BTreeMap<Permutation, Weight> = target.enumerate().into_iter().collect();
    if let Some(extra) = report.per_perm.keys().find(|s| !expected.contains_key(*s)) {
        return Verdict::Fail { reason: format!("output {extra} is outside the target set") };
    }
    match report.mode {
        Mode::Exhaustive => {
            for (sigma, p) in &expected {
                let got = report.probability(sigma);
                if got != *p {
                    let count = report.per_perm.get(sigma).map_or(0, |t| t.count);
                    return Verdict::Fail { reason: format!("{sigma}: probability {got} (count {count}), expected {p}") };
                }
            }
            Verdict::Pass
        }
        Mode::Sampled { .. } => {
            let n = report.total as f64;
            let chi_square = expected
                .iter()
                .map(|(sigma, p)| {
                    let e = n * (*p.numer() as f64) / (*p.denom() as f64);
                    let o = report.per_perm.get(sigma).map_or(0, |t| t.count) as f64;
                    (o - e).powi(2) / e
                })
                .sum();
            statistical(chi_square, expected.len().saturating_sub(1))
        }
    }
}

/// Whether the output permutation is independent of the view: exact
/// factorization `P(σ, t) = P(σ)·P(t)` for every pair.
pub fn check_secure(report: &DistributionReport) -> Verdict {
    match report.mode {
        Mode::Exhaustive => {
            let zero = Tally::default();
            for (sigma, ps) in &report.per_perm {
                for (view, pt) in &report.per_trace {
                    let joint = report.joint.get(&(sigma.clone(), view.clone())).unwrap_or(&zero);
                    let holds = if report.equiprobable {
                        joint.count as u128 * report.total as u128 == ps.count as u128 * pt.count as u128
                    } else {
                        joint.mass == ps.mass * pt.mass
                    };
                    if !holds {
                        return Verdict::Fail {
                            reason: format!(
                                "{sigma} occurs {} times with view #{}, expected {}·{}/{}",
                                joint.count,
                                report.per_trace.keys().position(|k| k == view).unwrap_or(0),
                                ps.count,
                                pt.count,
                                report.total
                            ),
                        };
                    }
                }
            }
            Verdict::Pass
        }
        Mode::Sampled { .. } => {
            let n = report.total as f64;
            let mut chi_square = 0.0;
            for (sigma, ps) in &report.per_perm {
                for (view, pt) in &report.per_trace {
                    let e = ps.count as f64 * pt.count as f64 / n;
                    let o = report.joint.get(&(sigma.clone(), view.clone())).map_or(0, |t| t.count) as f64;
                    chi_square += (o - e).powi(2) / e;
                }
            }
            let dof = report.per_perm.len().saturating_sub(1) * report.per_trace.len().saturating_sub(1);
            statistical(chi_square, dof)
        }
    }
}

fn statistical(chi_square: f64, dof: usize) -> Verdict {
    let p_value = if dof == 0 { 1.0 } else { ChiSquared::new(dof as f64).map(|d| 1.0 - d.cdf(chi_square)).unwrap_or(f64::NAN) };
    Verdict::Statistical { chi_square, dof, p_value }
}

/// Checks that the output permutation does not depend on the last random
/// choice: branches that agree on every earlier choice must give the same
/// output. Returns the number of groups.
pub fn check_output_ignores_last_choice<P: Protocol + ?Sized>(protocol: &P, x: &CardSequence, opts: &EnumerationOptions) -> Result<(Verdict, usize)> {
    let initial = protocol.initial_sequence(x)?;
    type Groups = BTreeMap<Vec<usize>, BTreeSet<Permutation>>;
    let groups: Groups = fold_runs(
        protocol,
        &initial,
        opts,
        Groups::new,
        |acc, trace, _| {
            let mut key = trace.choices();
            key.pop();
            acc.entry(key).or_default().insert(output_of(x, &trace)?);
            Ok(())
        },
        |mut a, b| {
            for (k, v) in b {
                a.entry(k).or_default().extend(v);
            }
            a
        },
    )?;
    let verdict = match groups.iter().find(|(_, outs)| outs.len() > 1) {
        Some((key, outs)) => Verdict::Fail { reason: format!("earlier choices {key:?} lead to {} different outputs", outs.len()) },
        None => Verdict::Pass,
    };
    Ok((verdict, groups.len()))
}

/// `Aut₀(G)` by filtering all `n!` permutations.
pub fn oracle_aut0_bruteforce(g: &Graph) -> Result<VertexPermSet> {
    let n = g.vertex_count();
    if n > ORACLE_MAX_VERTICES {
        return Err(Error::OracleTooLarge { n, limit: ORACLE_MAX_VERTICES });
    }
    let mut found = Vec::new();
    for images in (1..=n).permutations(n) {
        let f = Permutation::from_images(&images)?;
        if is_iso0(g, g, &f)? {
            found.push(f);
        }
    }
    VertexPermSet::new(n, found)
}

/// Outcome of the grouped check of the general protocol on a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedVerification {
    /// Distribution over degree-class scramble choices, with the pair
    /// scramble pinned; the view is the multiset of opened pairs.
    pub report: DistributionReport,
    pub realizes: Verdict,
    pub secure: Verdict,
    pub group_order: usize,
}

/// Verifies the general protocol on `g` by enumerating the degree-class
/// scrambles only. The pair scramble is pinned to its identity branch and
/// the observer's view is reduced to the multiset of opened pairs; both
/// reductions rest on the pair scramble making the opened order uniform
/// and the output independent of its choice (see
/// [`check_output_ignores_last_choice`]).
pub fn verify_graph_shuffle_grouped(g: &Graph, aut: &AutOptions, opts: &EnumerationOptions) -> Result<GroupedVerification> {
    let protocol = GraphShuffleProtocol::new(g.clone()).with_final_shuffle(FinalShuffle::Pinned(0));
    let x = CardSequence::face_down_inputs(g.vertex_count());
    let dist_opts = DistributionOptions { enumeration: *opts, sampling: Sampling::Never };
    let report = distribution_with_view(&protocol, &x, &dist_opts, &opened_multiset)?;
    let group = enumerate_aut0(g, aut)?;
    let target = group.to_shuffle("Aut0(G)")?;
    Ok(GroupedVerification { realizes: check_realizes(&report, &target), secure: check_secure(&report), group_order: group.len(), report })
}

/// Sum of probabilities over all outputs; exactly one for a sound report.
pub fn total_mass(report: &DistributionReport) -> Weight {
    report.per_perm.values().fold(Weight::zero(), |a, t| a + t.mass)
}

pub fn is_normalized(report: &DistributionReport) -> bool {
    report.mode != Mode::Exhaustive || total_mass(report).is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cards::{Atom, Orientation};
    use crate::cycle_protocols::CycleShuffleProtocol;
    use crate::graphs::UndirectedGraph;
    use crate::machine::{Action, ProtocolMachine, Rule};
    use crate::perm::{pss, random_cut};

    #[test]
    fn directed_three_cycle_report() {
        let p = CycleShuffleProtocol::directed(3).unwrap();
        let x = CardSequence::face_down_inputs(3);
        let r = distribution(&p, &x, &DistributionOptions::default()).unwrap();
        assert_eq!(r.total, 36);
        assert!(r.equiprobable);
        assert!(is_normalized(&r));
        assert_eq!(r.per_perm.len(), 3);
        assert!(r.per_perm.values().all(|t| t.count == 12));
        assert!(check_realizes(&r, &random_cut(3).unwrap()).is_pass());
        assert!(check_secure(&r).is_pass());
        let tsv = r.to_tsv();
        assert!(tsv.contains("(1 2 3)\t12\t1/3"));
        assert!(tsv.contains("id\t12\t1/3"));
    }

    #[test]
    fn no_op_protocol_has_one_branch() {
        let x = CardSequence::face_down_inputs(2);
        let rules = vec![Rule::new("q0", "? ?", "qf", Action::Turn(vec![])).unwrap()];
        let m = ProtocolMachine::new(x.deck(), vec![], "q0", "qf", rules).unwrap();
        let r = distribution(&m, &x, &DistributionOptions::default()).unwrap();
        assert_eq!(r.total, 1);
        assert_eq!(r.per_perm[&Permutation::identity(2)].count, 1);
        assert!(check_secure(&r).is_pass());
    }

    #[test]
    fn leaky_protocol_fails_security() {
        // shuffles then opens the first card: the view determines the output
        let x = CardSequence::from_atoms([Atom::Black(1), Atom::Black(2)], Orientation::FaceDown, 0);
        let rules = vec![
            Rule::new("q0", "? ?", "q1", Action::shuffle(pss(2, 1).unwrap())).unwrap(),
            Rule::new("q1", "? ?", "q2", Action::Turn(vec![1])).unwrap(),
            Rule::new("q2", "* ?", "qf", Action::Turn(vec![1])).unwrap(),
        ];
        let m = ProtocolMachine::new(x.deck(), vec![], "q0", "qf", rules).unwrap();
        let r = distribution(&m, &x, &DistributionOptions::default()).unwrap();
        assert!(check_realizes(&r, &pss(2, 1).unwrap()).is_pass());
        assert!(!check_secure(&r).is_pass());
    }

    #[test]
    fn missing_shuffle_fails_realizes() {
        let p = CycleShuffleProtocol::directed(4).unwrap().without_final_scramble();
        let r = distribution(&p, &CardSequence::face_down_inputs(4), &DistributionOptions::default()).unwrap();
        match check_realizes(&r, &random_cut(4).unwrap()) {
            Verdict::Fail { reason } => assert!(reason.contains("expected 1/4"), "{reason}"),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn weighted_branches_use_exact_masses() {
        let x = CardSequence::face_down_inputs(2);
        let swap = Permutation::parse_cycles("(1 2)", 2).unwrap();
        let spec = ShuffleSpec::explicit(2, vec![Permutation::identity(2), swap], vec![Weight::new(1, 3), Weight::new(2, 3)], "biased").unwrap();
        let rules = vec![Rule::new("q0", "? ?", "qf", Action::shuffle(spec.clone())).unwrap()];
        let m = ProtocolMachine::new(x.deck(), vec![], "q0", "qf", rules).unwrap();
        let r = distribution(&m, &x, &DistributionOptions::default()).unwrap();
        assert!(!r.equiprobable);
        assert!(check_realizes(&r, &spec).is_pass());
        assert!(!check_realizes(&r, &pss(2, 1).unwrap()).is_pass());
        assert!(check_secure(&r).is_pass());
    }

    #[test]
    fn parallel_and_sequential_reports_agree() {
        let p = CycleShuffleProtocol::undirected(4).unwrap();
        let x = CardSequence::face_down_inputs(4);
        let par = distribution(&p, &x, &DistributionOptions::default()).unwrap();
        let seq_opts = DistributionOptions { enumeration: EnumerationOptions { parallel: false, ..Default::default() }, ..Default::default() };
        let seq = distribution(&p, &x, &seq_opts).unwrap();
        assert_eq!(par, seq);
        assert_eq!(par.total, 1152);
    }

    #[test]
    fn sampling_is_reproducible_and_only_statistical() {
        let p = CycleShuffleProtocol::directed(4).unwrap();
        let x = CardSequence::face_down_inputs(4);
        let opts = DistributionOptions { enumeration: EnumerationOptions { cap: 10, parallel: true }, sampling: Sampling::OnCapExceeded { samples: 400, seed: 7 } };
        let a = distribution(&p, &x, &opts).unwrap();
        let b = distribution(&p, &x, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mode, Mode::Sampled { seed: 7, samples: 400 });
        assert!(matches!(check_realizes(&a, &random_cut(4).unwrap()), Verdict::Statistical { .. }));
        let strict = DistributionOptions { sampling: Sampling::Never, ..opts };
        assert!(matches!(distribution(&p, &x, &strict), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn oracle_examples() {
        let c4 = oracle_aut0_bruteforce(&Graph::directed_cycle(4).unwrap()).unwrap();
        assert_eq!(c4.len(), 4);
        assert_eq!(oracle_aut0_bruteforce(&Graph::complete_digraph(3).unwrap()).unwrap().len(), 6);
        let five = Graph::new(5, vec![(1, 2), (1, 3), (2, 1), (2, 3), (3, 4), (3, 5)]).unwrap();
        assert_eq!(oracle_aut0_bruteforce(&five).unwrap().len(), 4);
        assert_eq!(oracle_aut0_bruteforce(&Graph::empty(9).unwrap()).unwrap_err(), Error::OracleTooLarge { n: 9, limit: 8 });
        let hexagon = UndirectedGraph::cycle(6).unwrap().doubled();
        assert_eq!(oracle_aut0_bruteforce(&hexagon).unwrap(), enumerate_aut0(&hexagon, &AutOptions::default()).unwrap());
    }
}
