use std::collections::BTreeMap;

use cardshuffle::cards::CardSequence;
use cardshuffle::graph_shuffle::{opened_multiset, FinalShuffle, GraphShuffleProtocol, IsoChoice};
use cardshuffle::graphs::{enumerate_aut0, AutOptions, Graph, GraphFile};
use cardshuffle::machine::{check_shuffle_protocol, fold_runs, EnumerationOptions, ReplayChooser};
use cardshuffle::verify::{check_output_ignores_last_choice, check_realizes, check_secure, distribution, oracle_aut0_bruteforce, verify_graph_shuffle_grouped, DistributionOptions};
use cardshuffle::{Permutation, Protocol};

fn five_vertex() -> Graph {
    include_str!("data/five_vertex.graph").parse::<GraphFile>().unwrap().to_graph().unwrap()
}

/// Degree-class scrambles left in place, pairs dealt out in the order of
/// the documented example, isomorphism (1 2).
fn demo_run() -> cardshuffle::graph_shuffle::GraphShuffleRun {
    let p = GraphShuffleProtocol::new(five_vertex()).with_isomorphism(IsoChoice::Fixed(Permutation::parse_cycles("(1 2)", 5).unwrap())).unwrap();
    let pair_branch = p.pair_branch_for(&[5, 7, 9, 4, 2, 8, 1, 11, 10, 6, 3]).unwrap();
    let initial = p.initial_sequence(&CardSequence::face_down_inputs(5)).unwrap();
    p.run_detailed(&initial, &mut ReplayChooser::new(vec![0, 0, pair_branch])).unwrap()
}

#[test]
fn demo_reproduces_opened_layout() {
    let run = demo_run();
    let opened = run.trace.steps.iter().find(|s| s.state == "q6").unwrap();
    assert_eq!(cardshuffle::cards::visible_string(&opened.visible), "r5 ? 1 3 2 3 r4 ? r2 ? 2 1 r1 ? 3 5 3 4 1 2 r3 ?");
    let sorted = run.trace.steps.iter().find(|s| s.state == "q7").unwrap();
    assert_eq!(cardshuffle::cards::visible_string(&sorted.visible), "r1 ? r2 ? r3 ? r4 ? r5 ? 1 3 1 2 2 3 2 1 3 5 3 4");
    assert_eq!(run.opened_graph.arrows(), &[(1, 3), (1, 2), (2, 3), (2, 1), (3, 5), (3, 4)]);
    assert_eq!(run.isomorphism.to_string(), "(1 2)");
    // y = (x2, x1, x3, x4, x5)
    let ids: Vec<u32> = run.output.ids().iter().map(|c| c.0).collect();
    assert_eq!(ids, vec![1, 0, 2, 3, 4]);
    assert_eq!(run.trace.final_sequence.slice(5..22).visible_string(), "r1 r2 r3 r4 r5 1 1 1 2 2 2 3 3 3 3 4 5");
    assert_eq!(run.trace.final_sequence.visible_string().split(' ').take(5).collect::<Vec<_>>(), vec!["?"; 5]);
}

#[test]
fn trivial_group_every_branch_is_identity() {
    let g = Graph::directed_path(3).unwrap();
    let p = GraphShuffleProtocol::new(g);
    let x = CardSequence::face_down_inputs(3);
    let report = distribution(&p, &x, &DistributionOptions::default()).unwrap();
    // PSS(2,2) over the two end vertices, then PSS(5,2)
    assert_eq!(report.total, 2 * 120);
    assert_eq!(report.per_perm.len(), 1);
    assert!(report.per_perm.contains_key(&Permutation::identity(3)));
}

#[test]
fn directed_triangle_full_enumeration() {
    let g = Graph::directed_cycle(3).unwrap();
    let p = GraphShuffleProtocol::new(g.clone());
    let x = CardSequence::face_down_inputs(3);
    let report = distribution(&p, &x, &DistributionOptions::default()).unwrap();
    assert_eq!(report.total, 4320);
    let target = oracle_aut0_bruteforce(&g).unwrap().to_shuffle("Aut0").unwrap();
    assert!(check_realizes(&report, &target).is_pass());
    assert!(check_secure(&report).is_pass());
    let (ignores, groups) = check_output_ignores_last_choice(&p, &x, &EnumerationOptions::default()).unwrap();
    assert!(ignores.is_pass());
    assert_eq!(groups, 6);
}

#[test]
fn opened_multiset_view_is_also_independent() {
    let p = GraphShuffleProtocol::new(Graph::directed_cycle(3).unwrap());
    let x = CardSequence::face_down_inputs(3);
    let initial = p.initial_sequence(&x).unwrap();
    let views: BTreeMap<String, u64> = fold_runs(
        &p,
        &initial,
        &EnumerationOptions::default(),
        BTreeMap::new,
        |acc: &mut BTreeMap<String, u64>, t, _| {
            *acc.entry(opened_multiset(&t)).or_default() += 1;
            Ok(())
        },
        |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        },
    )
    .unwrap();
    // a rotation relabels the triangle onto itself, a reflection reverses it
    assert_eq!(views.len(), 2);
    assert!(views.values().all(|&c| c == 2160));
}

#[test]
fn skipping_pair_scramble_leaks_the_output() {
    let p = GraphShuffleProtocol::new(Graph::directed_cycle(3).unwrap()).with_final_shuffle(FinalShuffle::Skipped);
    let report = distribution(&p, &CardSequence::face_down_inputs(3), &DistributionOptions::default()).unwrap();
    assert_eq!(report.total, 6);
    assert!(!check_secure(&report).is_pass());
}

#[test]
fn grouped_verification_of_five_vertex_graph() {
    let g = five_vertex();
    let v = verify_graph_shuffle_grouped(&g, &AutOptions::default(), &EnumerationOptions::default()).unwrap();
    assert_eq!(v.report.total, 4);
    assert_eq!(v.group_order, 4);
    assert!(v.realizes.is_pass());
    assert!(v.secure.is_pass());
    let oracle = oracle_aut0_bruteforce(&g).unwrap();
    assert_eq!(oracle, enumerate_aut0(&g, &AutOptions::default()).unwrap());
    assert!(v.report.per_perm.keys().all(|s| oracle.contains(s)));
}

#[test]
fn shuffle_conditions_hold_on_small_graphs() {
    for g in [Graph::directed_cycle(3).unwrap(), Graph::directed_path(3).unwrap(), Graph::new(3, vec![(1, 1), (1, 2), (1, 2)]).unwrap()] {
        let p = GraphShuffleProtocol::new(g);
        let x = CardSequence::face_down_inputs(p.input_len());
        let report = check_shuffle_protocol(&p, &[x], &p.helping(), &EnumerationOptions::default()).unwrap();
        assert!(report.passed(), "{report:?}");
    }
}
