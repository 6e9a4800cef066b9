use std::collections::HashMap;

use logiclock::circuit::{equivalent, parse_bench, random_netlist, GateKind, Netlist, RandomSpec};
use logiclock::locking::{apply_key, epic_lock, EpicState, Site};
use logiclock::rng::seeded;
use logiclock::synth::{synthesize, SynthConfig};
use logiclock::Key;
use proptest::prelude::*;

const NAND_NOR: &str = "INPUT(A)\nINPUT(B)\nINPUT(C)\nOUTPUT(f)\nn1 = NAND(A, B)\nn2 = INV(n1)\nn3 = NOR(B, C)\nf = NOR(n2, n3)\n";

fn truth(n: &Netlist) -> Vec<u64> {
    n.truth_tables().unwrap().into_iter().flat_map(|t| t.words().to_vec()).collect()
}

#[test]
fn nand_nor_sites_and_unlocked_functions() {
    let c = parse_bench(NAND_NOR).unwrap();
    let k = Key::from_bitstr("10").unwrap();
    let l = epic_lock(&c, &k, 0).unwrap();
    let n = l.netlist();
    // bit 0 turned the inverter into an XOR on keyinput0
    let x = n.node(n.id_of("n2").unwrap());
    assert_eq!(x.gate(), Some(GateKind::Xor2));
    assert_eq!(n.name(x.fanins()[1]), "keyinput0");
    // bit 1 sits on the only NOR-to-NOR wire
    let f = n.node(n.id_of("f").unwrap());
    let x2 = n.node(f.fanins()[1]);
    assert_eq!(x2.gate(), Some(GateKind::Xor2));
    assert_eq!(n.name(x2.fanins()[0]), "n3");

    let f_k = |b: &str| apply_key(&l, &Key::from_bitstr(b).unwrap()).unwrap();
    assert!(equivalent(&f_k("10"), &c).unwrap());
    let and_ab = parse_bench("INPUT(A)\nINPUT(B)\nINPUT(C)\nOUTPUT(f)\nf = AND(A, B)\n").unwrap();
    assert!(equivalent(&f_k("00"), &and_ab).unwrap());
    assert_eq!(truth(&f_k("01")), vec![0]);
}

#[test]
fn wrong_keys_usually_corrupt() {
    let mut g = seeded(3);
    let mut changed = 0;
    let mut total = 0;
    for _ in 0..50 {
        let n = synthesize(&random_netlist(&mut g, &RandomSpec::new(5, 30, 2)), &SynthConfig::default()).unwrap();
        let k = Key::random(4, &mut g).unwrap();
        let Ok(l) = epic_lock(&n, &k, 1) else { continue };
        for w in Key::all(4).filter(|w| *w != k) {
            total += 1;
            changed += usize::from(!equivalent(&apply_key(&l, &w).unwrap(), &n).unwrap());
        }
    }
    assert!(changed * 2 > total, "{changed}/{total}");
}

/// Every candidate site of the first bit is chosen with frequency close to
/// 1/|sites|.
#[test]
fn sites_are_uniform() {
    let n = parse_bench(
        "INPUT(a)\nINPUT(b)\nOUTPUT(f)\nx = INV(a)\ny = INV(b)\nz = NAND(x, y)\nw = INV(z)\nf = NOR(w, x)\n",
    )
    .unwrap();
    let k = Key::from_bitstr("1").unwrap();
    let mut counts: HashMap<String, usize> = HashMap::new();
    let trials = 3000;
    for seed in 0..trials {
        let l = epic_lock(&n, &k, seed).unwrap();
        let ln = l.netlist();
        let site = ["x", "y", "w"]
            .into_iter()
            .find(|s| ln.node(ln.id_of(s).unwrap()).gate() == Some(GateKind::Xor2))
            .unwrap();
        *counts.entry(site.to_string()).or_default() += 1;
    }
    assert_eq!(counts.len(), 3);
    for (site, c) in counts {
        let p = c as f64 / trials as f64;
        assert!((p - 1.0 / 3.0).abs() < 0.04, "{site}: {p}");
    }
}

#[test]
fn candidate_counts_follow_the_key() {
    let n = parse_bench(NAND_NOR).unwrap();
    let k = Key::from_bitstr("10").unwrap();
    let mut st = EpicState::new(&n, &k);
    assert_eq!(st.candidates(), vec![Site::Inverter(4)]);
    st.apply(Site::Inverter(4));
    assert_eq!(st.candidates().len(), 1);
}

fn arb_case() -> impl Strategy<Value = (Netlist, Key, u64)> {
    (1usize..7, 10usize..40, any::<u64>(), prop::sample::select(vec![2usize, 4, 8])).prop_map(|(i, g, seed, r)| {
        let mut rng = seeded(seed);
        let n = random_netlist(&mut rng, &RandomSpec::new(i, g, 2));
        let k = Key::random(r, &mut rng).unwrap();
        (n, k, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn correct_key_restores_function((n, k, seed) in arb_case()) {
        match epic_lock(&n, &k, seed) {
            Ok(l) => {
                prop_assert_eq!(l.key_len(), k.len());
                prop_assert!(equivalent(&apply_key(&l, &k).unwrap(), &n).unwrap());
            }
            Err(e) => {
                let insufficient = matches!(e, logiclock::locking::LockError::InsufficientSites { .. });
                prop_assert!(insufficient, "{}", e);
            }
        }
    }

    #[test]
    fn locking_is_seed_deterministic((n, k, seed) in arb_case()) {
        if let Ok(a) = epic_lock(&n, &k, seed) {
            prop_assert_eq!(a, epic_lock(&n, &k, seed).unwrap());
        }
    }
}
