use std::collections::BTreeMap;

use freewords::stallings::{CoreGraph, PreGraph};
use freewords::words::{enumerate_whitehead_moves, parse, Letter, Word};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn word(rank: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0..2 * rank, 0..=max_len)
        .prop_map(move |slots| Word::from_letters(rank, slots.into_iter().map(Letter::from_slot)).unwrap())
}

fn nonempty_word(rank: usize, max_len: usize) -> impl Strategy<Value = Word> {
    word(rank, max_len).prop_filter("nontrivial", |w| !w.is_identity())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_then_parse(w in word(3, 12)) {
        prop_assert_eq!(parse(&w.to_string(), Some(3)).unwrap(), w.clone());
        prop_assert_eq!(parse(&w.to_text(), Some(3)).unwrap(), w);
    }

    #[test]
    fn group_laws(a in word(2, 8), b in word(2, 8), c in word(2, 8)) {
        prop_assert_eq!(a.multiply(&b).multiply(&c), a.multiply(&b.multiply(&c)));
        prop_assert!(a.multiply(&a.invert()).is_identity());
        prop_assert_eq!(a.multiply(&b).invert(), b.invert().multiply(&a.invert()));
    }

    #[test]
    fn whitehead_moves_are_homomorphisms(a in word(3, 6), b in word(3, 6), pick in any::<prop::sample::Index>()) {
        let moves = enumerate_whitehead_moves(3);
        let m = pick.get(&moves);
        prop_assert!(m.is_automorphism());
        prop_assert_eq!(m.apply(&a.multiply(&b)).unwrap(), m.apply(&a).unwrap().multiply(&m.apply(&b).unwrap()));
    }

    #[test]
    fn cyclic_reduction_is_a_conjugate(w in word(2, 10)) {
        let (core, conj) = w.cyclic_reduce();
        prop_assert!(core.is_cyclically_reduced());
        prop_assert_eq!(conj.multiply(&core).multiply(&conj.invert()), w);
    }

    #[test]
    fn root_powers_back(w in nonempty_word(2, 5), e in 1i64..4) {
        let (root, k) = w.power(e).maximal_root().unwrap();
        prop_assert_eq!(root.power(k as i64), w.power(e));
        prop_assert_eq!(k % e as u64, 0);
        prop_assert!(w.power(e).is_dth_power_in_free(e as u64));
    }

    #[test]
    fn basis_regenerates_the_graph(gens in prop::collection::vec(word(2, 7), 1..4)) {
        let g = CoreGraph::from_generators(&gens, 2);
        let again = CoreGraph::from_generators(&g.basis(), 2);
        prop_assert_eq!(&again, &g);
        prop_assert_eq!(g.basis().len(), g.rank());
        for w in &gens {
            prop_assert!(g.contains(w));
            let coords = g.express(w).unwrap();
            prop_assert_eq!(&coords.substitute(&g.basis()).unwrap().with_rank(2).unwrap(), w);
        }
    }

    #[test]
    fn inclusion_is_a_partial_order(gens in prop::collection::vec(nonempty_word(2, 5), 1..3)) {
        let g = CoreGraph::from_generators(&gens, 2);
        let q = g.quotients(10).unwrap();
        for a in &q {
            prop_assert!(a.subgroup_leq(a));
            prop_assert!(g.subgroup_leq(a));
            for b in &q {
                if a != b {
                    prop_assert!(!(a.subgroup_leq(b) && b.subgroup_leq(a)));
                }
                for c in &q {
                    if a.subgroup_leq(b) && b.subgroup_leq(c) {
                        prop_assert!(a.subgroup_leq(c));
                    }
                }
            }
        }
    }
}

fn random_word(rng: &mut ChaCha8Rng, rank: usize, max_len: usize) -> Word {
    let len = rng.gen_range(1..=max_len);
    Word::from_letters(rank, (0..len).map(|_| Letter::from_slot(rng.gen_range(0..2 * rank)))).unwrap()
}

#[test]
fn folding_is_confluent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let rank = rng.gen_range(1..=3);
        let mut pre = PreGraph::new(rank);
        for _ in 0..rng.gen_range(1..=4) {
            pre.add_loop(&random_word(&mut rng, rank, 8));
        }
        let reference = pre.fold();
        for _ in 0..10 {
            let mut choose = |k: usize| rng.gen_range(0..k);
            let g = pre.fold_stepwise(&mut choose);
            assert_eq!(g.canonical_key(), reference.canonical_key());
        }
    }
}

fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    // restricted growth strings with the base in block 0
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn go(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max + 1 {
            cur[i] = b;
            go(i + 1, max.max(b), cur, out);
        }
    }
    if n > 0 {
        go(1, 0, &mut cur, &mut out);
    }
    out
}

#[test]
fn quotients_match_partition_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 25 {
        let gens: Vec<Word> = (0..rng.gen_range(1..=2)).map(|_| random_word(&mut rng, 2, 6)).collect();
        let g = CoreGraph::from_generators(&gens, 2);
        if g.num_vertices() > 7 || g.rank() == 0 {
            continue;
        }
        checked += 1;
        let mut oracle: BTreeMap<Vec<u8>, CoreGraph> = BTreeMap::new();
        for p in set_partitions(g.num_vertices()) {
            let q = g.quotient_by(&p);
            oracle.insert(q.canonical_key().to_vec(), q);
        }
        let fast: BTreeMap<Vec<u8>, CoreGraph> =
            g.quotients(12).unwrap().into_iter().map(|q| (q.canonical_key().to_vec(), q)).collect();
        assert_eq!(
            fast.keys().collect::<Vec<_>>(),
            oracle.keys().collect::<Vec<_>>(),
            "quotients of {gens:?}"
        );
    }
}
