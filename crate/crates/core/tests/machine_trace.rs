use cardshuffle::cards::{Atom, CardSequence, Orientation};
use cardshuffle::machine::{run, Action, Outcome, ProtocolMachine, Rule};
use cardshuffle::Permutation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn four_card_machine() -> (ProtocolMachine, CardSequence) {
    let input = CardSequence::from_atoms((1..=4).map(Atom::Black), Orientation::FaceUp, 0);
    let rules = vec![
        Rule::new("q0", "1 2 3 4", "q1", Action::Turn(vec![1, 2, 3, 4])).unwrap(),
        Rule::new("q1", "? ? ? ?", "q2", Action::Perm(Permutation::parse_cycles("(1 3)", 4).unwrap())).unwrap(),
        Rule::new("q2", "? ? ? ?", "qf", Action::Turn(vec![3])).unwrap(),
    ];
    (ProtocolMachine::new(input.deck(), vec![input.clone()], "q0", "qf", rules).unwrap(), input)
}

#[test]
fn four_card_trace_matches_golden_file() {
    let (m, input) = four_card_machine();
    let trace = run(&m, &input, ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(trace.outcome, Outcome::Terminated);
    assert_eq!(trace.to_text(), include_str!("data/four_card.trace"));
}

#[test]
fn four_card_trace_is_seed_independent() {
    let (m, input) = four_card_machine();
    let a = run(&m, &input, ChaCha8Rng::seed_from_u64(1)).unwrap();
    let b = run(&m, &input, ChaCha8Rng::seed_from_u64(99)).unwrap();
    assert_eq!(a, b);
    // the card showing at the end is the one that started at position 1
    assert_eq!(a.final_sequence.get(3).unwrap().id.0, 0);
}
