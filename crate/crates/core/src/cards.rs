//! Cards, lying cards and card-sequences.
//!
//! Fronts are black naturals, red naturals, or opaque input atoms. Every
//! physical card carries a [`CardId`] so that a card can be followed through
//! arbitrary rearrangements; ids never show up in [`CardSequence::visible`].

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::Weight;

/// Symbol printed on the front of a card.
///
/// The derived `Ord` is only a canonical order for multiset bookkeeping. The
/// protocol order on black and red symbols is [`Atom::order_le`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Black(u32),
    Red(u32),
    /// Element of an arbitrary input deck; never compared by `order_le`.
    Input(u32),
}

impl Atom {
    /// Red-before-black total order: reds compare by value, blacks compare by
    /// value, and every red precedes every black.
    pub fn order_le(&self, other: &Atom) -> Result<bool> {
        match (self, other) {
            (Atom::Black(a), Atom::Black(b)) | (Atom::Red(a), Atom::Red(b)) => Ok(a <= b),
            (Atom::Red(_), Atom::Black(_)) => Ok(true),
            (Atom::Black(_), Atom::Red(_)) => Ok(false),
            (Atom::Input(_), _) => Err(Error::UnorderedAtom(self.to_string())),
            (_, Atom::Input(_)) => Err(Error::UnorderedAtom(other.to_string())),
        }
    }

    /// `Ordering` view of [`Atom::order_le`], for sorting.
    pub fn order_cmp(&self, other: &Atom) -> Result<Ordering> {
        let le = self.order_le(other)?;
        let ge = other.order_le(self)?;
        Ok(match (le, ge) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            _ => Ordering::Greater,
        })
    }

    pub fn is_black(&self) -> bool {
        matches!(self, Atom::Black(_))
    }

    pub fn is_red(&self) -> bool {
        matches!(self, Atom::Red(_))
    }

    /// Numeric value for black and red atoms.
    pub fn number(&self) -> Option<u32> {
        match self {
            Atom::Black(k) | Atom::Red(k) => Some(*k),
            Atom::Input(_) => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Black(k) => write!(f, "{k}"),
            Atom::Red(k) => write!(f, "r{k}"),
            Atom::Input(i) => write!(f, "x{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    FaceUp,
    FaceDown,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::FaceUp => Orientation::FaceDown,
            Orientation::FaceDown => Orientation::FaceUp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CardId(pub u32);

impl fmt::Display for CardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LyingCard {
    pub atom: Atom,
    pub orientation: Orientation,
    pub id: CardId,
}

impl LyingCard {
    pub fn new(atom: Atom, orientation: Orientation, id: CardId) -> Self {
        Self { atom, orientation, id }
    }

    pub fn face(&self) -> Face {
        match self.orientation {
            Orientation::FaceUp => Face::Up(self.atom),
            Orientation::FaceDown => Face::Back,
        }
    }

    pub fn turned(self) -> Self {
        Self { orientation: self.orientation.flipped(), ..self }
    }
}

/// What an observer sees at one position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Up(Atom),
    Back,
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Face::Up(a) => a.fmt(f),
            Face::Back => f.write_str("?"),
        }
    }
}

impl std::str::FromStr for Face {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_atom_token(s)
    }
}

/// Parses the canonical text form of a face: `3`, `r3`, `x1` or `?`.
fn parse_atom_token(s: &str) -> Result<Face> {
    let bad = || Error::InvalidInput(format!("unrecognised card token {s:?}"));
    if s == "?" {
        return Ok(Face::Back);
    }
    let (ctor, digits): (fn(u32) -> Atom, &str) = if let Some(rest) = s.strip_prefix('r') {
        (Atom::Red, rest)
    } else if let Some(rest) = s.strip_prefix('x') {
        (Atom::Input, rest)
    } else {
        (Atom::Black, s)
    };
    digits.parse::<u32>().map(|k| Face::Up(ctor(k))).map_err(|_| bad())
}

/// Joins faces with single spaces, e.g. `? ? 1 ?`.
pub fn visible_string(faces: &[Face]) -> String {
    let mut out = String::with_capacity(faces.len() * 3);
    for (i, face) in faces.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        use fmt::Write;
        let _ = write!(out, "{face}");
    }
    out
}

/// An ordered list of lying cards. The deck is the multiset of its atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CardSequence {
    cards: Vec<LyingCard>,
}

impl CardSequence {
    /// Builds a sequence, rejecting repeated card ids.
    pub fn new(cards: Vec<LyingCard>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &cards {
            if !seen.insert(c.id) {
                return Err(Error::DuplicateCardId(c.id.0));
            }
        }
        Ok(Self { cards })
    }

    /// Cards with the given atoms and orientation, ids `first_id, first_id+1, ...`.
    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>, orientation: Orientation, first_id: u32) -> Self {
        let cards = atoms
            .into_iter()
            .enumerate()
            .map(|(i, atom)| LyingCard::new(atom, orientation, CardId(first_id + i as u32)))
            .collect();
        Self { cards }
    }

    /// `n` face-down input cards `x1..xn` with ids `0..n`.
    pub fn face_down_inputs(n: usize) -> Self {
        Self::from_atoms((1..=n as u32).map(Atom::Input), Orientation::FaceDown, 0)
    }

    pub fn concat(&self, other: &CardSequence) -> Result<Self> {
        let mut cards = self.cards.clone();
        cards.extend_from_slice(&other.cards);
        Self::new(cards)
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn cards(&self) -> &[LyingCard] {
        &self.cards
    }

    /// 1-based access.
    pub fn get(&self, position: usize) -> Option<&LyingCard> {
        position.checked_sub(1).and_then(|i| self.cards.get(i))
    }

    /// The deck as a sorted multiset.
    pub fn deck(&self) -> Vec<Atom> {
        let mut atoms: Vec<Atom> = self.cards.iter().map(|c| c.atom).collect();
        atoms.sort();
        atoms
    }

    pub fn ids(&self) -> Vec<CardId> {
        self.cards.iter().map(|c| c.id).collect()
    }

    pub fn visible(&self) -> Vec<Face> {
        self.cards.iter().map(LyingCard::face).collect()
    }

    pub fn visible_string(&self) -> String {
        visible_string(&self.visible())
    }

    /// Flips every card whose 1-based position is listed.
    pub fn turn(&self, positions: &[usize]) -> Result<Self> {
        check_positions(positions, self.len())?;
        let mut cards = self.cards.clone();
        for &p in positions {
            cards[p - 1] = cards[p - 1].turned();
        }
        Ok(Self { cards })
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self { cards: self.cards[range].to_vec() }
    }

    pub(crate) fn from_cards_unchecked(cards: Vec<LyingCard>) -> Self {
        Self { cards }
    }
}

pub(crate) fn check_positions(positions: &[usize], len: usize) -> Result<()> {
    let mut seen = BTreeSet::new();
    for &p in positions {
        if p == 0 || p > len {
            return Err(Error::PositionOutOfRange { position: p, len });
        }
        if !seen.insert(p) {
            return Err(Error::DuplicatePosition(p));
        }
    }
    Ok(())
}

/// Random flip: a collection of position subsets with exact weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RFlipSpec {
    subsets: Vec<Vec<usize>>,
    weights: Vec<Weight>,
}

impl RFlipSpec {
    pub fn new(subsets: Vec<Vec<usize>>, weights: Vec<Weight>) -> Result<Self> {
        if subsets.is_empty() {
            return Err(Error::InvalidRFlip("empty subset collection".into()));
        }
        if subsets.len() != weights.len() {
            return Err(Error::InvalidRFlip("one weight per subset required".into()));
        }
        let total = weights.iter().fold(Weight::zero(), |acc, w| acc + w);
        if !total.is_one() {
            return Err(Error::InvalidRFlip(format!("weights sum to {total}")));
        }
        let mut subsets = subsets;
        for s in &mut subsets {
            s.sort_unstable();
        }
        Ok(Self { subsets, weights })
    }

    pub fn uniform(subsets: Vec<Vec<usize>>) -> Result<Self> {
        let k = subsets.len() as u128;
        if k == 0 {
            return Err(Error::InvalidRFlip("empty subset collection".into()));
        }
        Self::new(subsets, vec![Weight::new(1, k); k as usize])
    }

    /// A deterministic flip of one subset.
    pub fn single(subset: Vec<usize>) -> Self {
        Self::new(vec![subset], vec![Weight::one()]).expect("single subset is valid")
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn validate_for(&self, len: usize) -> Result<()> {
        self.subsets.iter().try_for_each(|s| check_positions(s, len))
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .subsets
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| format!("{}:{w}", position_set_label(s)))
            .collect();
        format!("rflip[{}]", parts.join(" "))
    }
}

pub(crate) fn position_set_label(positions: &[usize]) -> String {
    let inner: Vec<String> = positions.iter().map(usize::to_string).collect();
    format!("{{{}}}", inner.join(","))
}

/// Applies a random flip, drawing the subset from `rng`.
pub fn rflip<R: Rng + ?Sized>(seq: &CardSequence, spec: &RFlipSpec, rng: &mut R) -> Result<CardSequence> {
    spec.validate_for(seq.len())?;
    let idx = sample_weighted(spec.weights(), rng);
    seq.turn(&spec.subsets()[idx])
}

/// Every outcome of a random flip with its exact weight, in subset order.
pub fn enumerate_rflip(seq: &CardSequence, spec: &RFlipSpec) -> Result<Vec<(CardSequence, Weight)>> {
    spec.validate_for(seq.len())?;
    spec.subsets()
        .iter()
        .zip(spec.weights())
        .map(|(s, w)| Ok((seq.turn(s)?, *w)))
        .collect()
}

/// Draws an index with exactly the given rational probabilities.
pub(crate) fn sample_weighted<R: Rng + ?Sized>(weights: &[Weight], rng: &mut R) -> usize {
    let lcm = weights.iter().fold(1u128, |acc, w| num_integer_lcm(acc, *w.denom()));
    let draw = rng.gen_range(0..lcm);
    let mut acc = 0u128;
    for (i, w) in weights.iter().enumerate() {
        acc += w.numer() * (lcm / w.denom());
        if draw < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn num_integer_lcm(a: u128, b: u128) -> u128 {
    fn gcd(mut a: u128, mut b: u128) -> u128 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn four_face_up() -> CardSequence {
        CardSequence::from_atoms((1..=4).map(Atom::Black), Orientation::FaceUp, 0)
    }

    #[test]
    fn order_examples() {
        assert!(Atom::Red(3).order_le(&Atom::Black(1)).unwrap());
        assert!(Atom::Black(2).order_le(&Atom::Black(2)).unwrap());
        assert!(!Atom::Black(3).order_le(&Atom::Red(7)).unwrap());
        assert!(Atom::Input(1).order_le(&Atom::Black(1)).is_err());
        assert!(Atom::Red(1).order_le(&Atom::Input(2)).is_err());
    }

    #[test]
    fn turn_examples() {
        let s = four_face_up();
        let down = s.turn(&[1, 2, 3, 4]).unwrap();
        assert!(down.visible().iter().all(|f| *f == Face::Back));
        assert_eq!(s.turn(&[]).unwrap(), s);
        let up3 = down.turn(&[3]).unwrap();
        assert_eq!(up3.visible_string(), "? ? 3 ?");
        assert_eq!(up3.ids(), s.ids());
    }

    #[test]
    fn turn_rejects_bad_positions() {
        let s = four_face_up();
        assert_eq!(s.turn(&[5]), Err(Error::PositionOutOfRange { position: 5, len: 4 }));
        assert_eq!(s.turn(&[0]), Err(Error::PositionOutOfRange { position: 0, len: 4 }));
        assert_eq!(s.turn(&[2, 2]), Err(Error::DuplicatePosition(2)));
    }

    #[test]
    fn visible_examples() {
        let down = CardSequence::from_atoms((1..=3).map(Atom::Black), Orientation::FaceDown, 0);
        assert_eq!(down.visible_string(), "? ? ?");
        let mixed = CardSequence::new(vec![
            LyingCard::new(Atom::Red(2), Orientation::FaceUp, CardId(0)),
            LyingCard::new(Atom::Black(1), Orientation::FaceDown, CardId(1)),
        ])
        .unwrap();
        assert_eq!(mixed.visible(), vec![Face::Up(Atom::Red(2)), Face::Back]);
        assert_eq!(mixed.visible_string(), "r2 ?");
    }

    #[test]
    fn face_tokens_parse() {
        for tok in ["?", "3", "r3", "x1"] {
            let f: Face = tok.parse().unwrap();
            assert_eq!(f.to_string(), tok);
        }
        assert!("q1".parse::<Face>().is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let c = LyingCard::new(Atom::Black(1), Orientation::FaceUp, CardId(7));
        assert_eq!(CardSequence::new(vec![c, c]), Err(Error::DuplicateCardId(7)));
    }

    #[test]
    fn rflip_singleton_is_turn() {
        let s = four_face_up();
        let spec = RFlipSpec::single(vec![1]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            assert_eq!(rflip(&s, &spec, &mut rng).unwrap(), s.turn(&[1]).unwrap());
        }
        let id = RFlipSpec::single(vec![]);
        assert_eq!(rflip(&s, &id, &mut rng).unwrap(), s);
    }

    #[test]
    fn rflip_two_branches() {
        let s = CardSequence::from_atoms([Atom::Black(1), Atom::Black(2)], Orientation::FaceDown, 0);
        let spec = RFlipSpec::uniform(vec![vec![1], vec![2]]).unwrap();
        let outcomes = enumerate_rflip(&s, &spec).unwrap();
        assert_eq!(outcomes.len(), 2);
        assert_eq!(outcomes[0].0.visible_string(), "1 ?");
        assert_eq!(outcomes[1].0.visible_string(), "? 2");
        assert!(outcomes.iter().all(|(_, w)| *w == Weight::new(1, 2)));

        // Sampling frequency sanity: both branches occur.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut hits = [0; 2];
        for _ in 0..200 {
            let out = rflip(&s, &spec, &mut rng).unwrap();
            hits[usize::from(out.visible()[0] == Face::Back)] += 1;
        }
        assert!(hits[0] > 50 && hits[1] > 50);
    }

    #[test]
    fn rflip_spec_validation() {
        assert!(RFlipSpec::uniform(vec![]).is_err());
        assert!(RFlipSpec::new(vec![vec![1]], vec![Weight::new(1, 2)]).is_err());
        let spec = RFlipSpec::single(vec![3]);
        assert!(spec.validate_for(2).is_err());
    }

    fn arb_atom() -> impl Strategy<Value = Atom> {
        prop_oneof![(1u32..6).prop_map(Atom::Black), (1u32..6).prop_map(Atom::Red)]
    }

    proptest! {
        #[test]
        fn turn_is_involution(n in 1usize..10, mask in proptest::collection::vec(any::<bool>(), 10)) {
            let s = CardSequence::from_atoms((1..=n as u32).map(Atom::Black), Orientation::FaceUp, 0);
            let t: Vec<usize> = (1..=n).filter(|p| mask[p - 1]).collect();
            let once = s.turn(&t).unwrap();
            prop_assert_eq!(once.turn(&t).unwrap(), s.clone());
            prop_assert_eq!(once.deck(), s.deck());
            let (before, after) = (s.visible(), once.visible());
            for p in 1..=n {
                prop_assert_eq!(before[p - 1] != after[p - 1], t.contains(&p));
            }
        }

        #[test]
        fn order_is_total(a in arb_atom(), b in arb_atom(), c in arb_atom()) {
            let ab = a.order_le(&b).unwrap();
            let ba = b.order_le(&a).unwrap();
            prop_assert!(ab || ba);
            if ab && ba { prop_assert_eq!(a, b); }
            if ab && b.order_le(&c).unwrap() { prop_assert!(a.order_le(&c).unwrap()); }
        }
    }
}
