use std::collections::{BTreeSet, HashSet};

use logiclock::bdd::{bdd_eval, bdd_from_netlist, complementary_pairs, is_reduced_ordered, Bdd, BddManager, RobddForest};
use logiclock::circuit::{equivalent, random_netlist, Assignment, RandomSpec};
use logiclock::locking::apply_key;
use logiclock::meerkat::{bdd_apply_key, eligible_nodes, meerkat_flow, meerkat_lock, MeerkatError};
use logiclock::rng::seeded;
use logiclock::synth::SynthConfig;
use logiclock::Key;

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Row index with x1 as the most significant bit.
fn row(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| acc * 2 + usize::from(b))
}

fn shannon(m: &mut BddManager, tt: u8, var: usize, prefix: usize) -> Bdd {
    if var == 3 {
        return m.constant(tt >> prefix & 1 == 1);
    }
    let hi = shannon(m, tt, var + 1, prefix * 2 + 1);
    let lo = shannon(m, tt, var + 1, prefix * 2);
    m.mk(var, hi, lo).unwrap()
}

fn minterms(m: &mut BddManager, tt: u8) -> Bdd {
    let mut acc = m.zero();
    for r in 0..8 {
        if tt >> r & 1 == 0 {
            continue;
        }
        let mut cube = m.one();
        for v in 0..3 {
            let x = m.var(v).unwrap();
            let lit = if r >> (2 - v) & 1 == 1 { x } else { m.not(x).unwrap() };
            cube = m.and(cube, lit).unwrap();
        }
        acc = m.or(acc, cube).unwrap();
    }
    acc
}

#[test]
fn all_three_variable_functions_are_canonical() {
    let mut pairs = 0;
    for tt in 0..=255u8 {
        let mut m = BddManager::new(names(3));
        let a = shannon(&mut m, tt, 0, 0);
        let b = minterms(&mut m, tt);
        assert_eq!(a, b, "function {tt:#04x}");
        let forest = RobddForest::new(m, vec![("f".into(), a)]).unwrap();
        for r in 0..8 {
            let bits = [r & 4 != 0, r & 2 != 0, r & 1 != 0];
            let x: Assignment = names(3).into_iter().zip(bits).collect();
            let y = bdd_eval(&forest, &x).unwrap();
            assert_eq!(y["f"], tt >> row(&bits) & 1 == 1);
            pairs += 1;
        }
    }
    assert_eq!(pairs, 2048);
}

#[test]
fn complementary_pairs_match_brute_force() {
    let mut g = seeded(17);
    for _ in 0..200 {
        let n = random_netlist(&mut g, &RandomSpec::new(4, 14, 3));
        let forest = bdd_from_netlist(&n, None).unwrap();
        let m = forest.manager();
        let live = forest.decision_nodes();
        let mut expected = BTreeSet::new();
        for (i, &a) in live.iter().enumerate() {
            for &b in &live[i + 1..] {
                let (na, nb) = (m.node(a).unwrap(), m.node(b).unwrap());
                if na.var == nb.var && na.hi == nb.lo && na.lo == nb.hi {
                    expected.insert((a.min(b), a.max(b)));
                }
            }
        }
        let got: BTreeSet<(Bdd, Bdd)> = complementary_pairs(&forest).into_iter().collect();
        assert_eq!(got, expected);

        let excluded: HashSet<Bdd> = got.iter().flat_map(|&(a, b)| [a, b]).collect();
        let eligible = eligible_nodes(&forest);
        assert!(eligible.iter().all(|e| !excluded.contains(e)));
        assert_eq!(eligible.len() + excluded.len(), live.len());
    }
}

/// Over every key: the unlocked graph is reduced and ordered, the `2^r`
/// functions are pairwise distinct and the correct key gives back the
/// original roots.
#[test]
fn every_key_yields_a_distinct_reduced_function() {
    let mut g = seeded(29);
    let mut instances = 0;
    while instances < 60 {
        let n = random_netlist(&mut g, &RandomSpec::new(3 + instances % 3, 12, 2));
        let r = 1 + instances % 4;
        let forest = bdd_from_netlist(&n, None).unwrap();
        let original = forest.root_ids();
        let key = Key::random(r, &mut g).unwrap();
        let mut locked = match meerkat_lock(forest, &key, instances as u64) {
            Ok(l) => l,
            Err(MeerkatError::TooFewEligible { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let mut seen = HashSet::new();
        for k in Key::all(r) {
            assert!(is_reduced_ordered(&locked.apply_key_raw(&k).unwrap()));
            let roots = bdd_apply_key(&mut locked, &k).unwrap();
            if k == key {
                assert_eq!(roots, original);
            }
            assert!(seen.insert(roots), "two keys share a function");
        }
        instances += 1;
    }
}

#[test]
fn meerkat_flow_unlocks_with_the_correct_key() {
    let mut g = seeded(41);
    let cfg = SynthConfig::default();
    let mut done = 0;
    while done < 40 {
        let n = random_netlist(&mut g, &RandomSpec::new(5, 25, 2));
        let key = Key::random(4, &mut g).unwrap();
        let locked = match meerkat_flow(&n, &key, done, &cfg) {
            Ok(l) => l,
            Err(MeerkatError::TooFewEligible { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        assert_eq!(locked.key_len(), 4);
        assert!(equivalent(&apply_key(&locked, &key).unwrap(), &n).unwrap());
        let wrong = key.with_flipped(0);
        assert!(!equivalent(&apply_key(&locked, &wrong).unwrap(), &n).unwrap());
        done += 1;
    }
}
