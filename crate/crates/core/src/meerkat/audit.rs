//! Exact check of the locking security definition on small functions.
//!
//! For a function `f`, every key `k*` and every output `C` the scheme can
//! produce from `(f, k*)`, and every other key `k`, the probability of `C`
//! under `(f, k*)` must equal its probability under `(f_k, k)` where `f_k`
//! is `C` with `k` applied. All randomness of a scheme is enumerated, so
//! the probabilities are exact rationals.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::bdd::{bdd_from_netlist, BddManager, DecisionDiagram, RobddForest};
use crate::circuit::{Netlist, NodeKind};
use crate::key::Key;
use crate::locking::{apply_key, EpicState, LockedNetlist, Provenance};
use crate::synth::{synthesize, SynthConfig};

use super::{diagram_to_mux_netlist, eligible_nodes, lock_diagram, MeerkatError};

/// Default cap on enumerated locking outcomes per audit.
pub const DEFAULT_AUDIT_BUDGET: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probability {
    pub num: String,
    pub den: String,
}

impl From<&BigRational> for Probability {
    fn from(p: &BigRational) -> Self {
        Probability {
            num: p.numer().to_string(),
            den: p.denom().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Probability that locking the audited function with `key` yields the
/// output numbered `signature`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub key: String,
    pub signature: u32,
    pub probability: Probability,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditCounterexample {
    pub true_key: String,
    pub other_key: String,
    pub signature: u32,
    pub p_true: Probability,
    pub p_other: Probability,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub scheme: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub r: usize,
    pub verdict: Verdict,
    /// Probability comparisons performed.
    pub comparisons: u64,
    /// Locking outcomes enumerated, over all functions and keys visited.
    pub outcomes: u64,
    pub distribution: Vec<AuditEntry>,
    pub counterexample: Option<AuditCounterexample>,
}

/// What the audit needs from a locking scheme.
trait AuditedScheme {
    type Function;
    type Output;

    /// Canonical identity of the function.
    fn function_id(&self, f: &Self::Function) -> Vec<u64>;
    /// Every outcome of locking `f` with `key`, with its probability.
    fn outcomes(&mut self, f: &Self::Function, key: &Key, visit: &mut dyn FnMut(Self::Output, BigRational)) -> Result<(), MeerkatError>;
    /// Canonical identity of a locked output.
    fn signature(&self, c: &Self::Output) -> Vec<u64>;
    /// The function `c` computes with `key` applied.
    fn unlock(&mut self, c: &Self::Output, key: &Key) -> Result<Self::Function, MeerkatError>;
}

struct Dist<O> {
    probs: HashMap<u32, BigRational>,
    reps: Vec<(u32, O)>,
}

struct Auditor<S: AuditedScheme> {
    scheme: S,
    sigs: HashMap<Vec<u64>, u32>,
    memo: HashMap<(Vec<u64>, Key), Rc<Dist<S::Output>>>,
    outcomes: u64,
    budget: u64,
}

impl<S: AuditedScheme> Auditor<S> {
    fn intern(&mut self, sig: Vec<u64>) -> u32 {
        let n = self.sigs.len() as u32;
        *self.sigs.entry(sig).or_insert(n)
    }

    fn dist(&mut self, f: &S::Function, key: &Key) -> Result<Rc<Dist<S::Output>>, MeerkatError> {
        let id = (self.scheme.function_id(f), key.clone());
        if let Some(d) = self.memo.get(&id) {
            return Ok(d.clone());
        }
        let mut found: Vec<(S::Output, BigRational)> = Vec::new();
        self.scheme.outcomes(f, key, &mut |c, p| found.push((c, p)))?;
        self.outcomes += found.len() as u64;
        if self.outcomes > self.budget {
            return Err(MeerkatError::BudgetExceeded(self.budget));
        }
        let mut probs: HashMap<u32, BigRational> = HashMap::new();
        let mut reps = Vec::new();
        for (c, p) in found {
            let sig = self.scheme.signature(&c);
            let s = self.intern(sig);
            match probs.get_mut(&s) {
                Some(acc) => *acc += p,
                None => {
                    probs.insert(s, p);
                    reps.push((s, c));
                }
            }
        }
        reps.sort_by_key(|(s, _)| *s);
        let d = Rc::new(Dist { probs, reps });
        self.memo.insert(id, d.clone());
        Ok(d)
    }

    fn run(mut self, f: &S::Function, r: usize, name: &str, inputs: Vec<String>, outputs: Vec<String>) -> Result<AuditReport, MeerkatError> {
        let mut distribution = Vec::new();
        let mut comparisons = 0u64;
        let mut counterexample = None;
        'keys: for kstar in Key::all(r) {
            let d = self.dist(f, &kstar)?;
            if d.reps.is_empty() {
                return Err(MeerkatError::TooFewEligible { eligible: 0, r });
            }
            for (s, _) in &d.reps {
                distribution.push(AuditEntry {
                    key: kstar.to_hex(),
                    signature: *s,
                    probability: (&d.probs[s]).into(),
                });
            }
            for (s, c) in &d.reps {
                let p = &d.probs[s];
                for k in Key::all(r) {
                    if k == kstar {
                        continue;
                    }
                    let fk = self.scheme.unlock(c, &k)?;
                    let dk = self.dist(&fk, &k)?;
                    let q = dk.probs.get(s).cloned().unwrap_or_else(BigRational::zero);
                    comparisons += 1;
                    if *p != q {
                        counterexample = Some(AuditCounterexample {
                            true_key: kstar.to_hex(),
                            other_key: k.to_hex(),
                            signature: *s,
                            p_true: p.into(),
                            p_other: (&q).into(),
                        });
                        break 'keys;
                    }
                }
            }
        }
        Ok(AuditReport {
            scheme: name.to_string(),
            inputs,
            outputs,
            r,
            verdict: if counterexample.is_some() { Verdict::Fail } else { Verdict::Pass },
            comparisons,
            outcomes: self.outcomes,
            distribution,
            counterexample,
        })
    }
}

fn new_auditor<S: AuditedScheme>(scheme: S, budget: u64) -> Auditor<S> {
    Auditor {
        scheme,
        sigs: HashMap::new(),
        memo: HashMap::new(),
        outcomes: 0,
        budget,
    }
}

fn forest_id(forest: &RobddForest) -> Vec<u64> {
    DecisionDiagram::from_forest(forest).signature()
}

/// Ordered host tuples; each has probability `(e - r)! / e!`.
struct MeerkatScheme {
    inputs: Vec<String>,
}

impl AuditedScheme for MeerkatScheme {
    type Function = RobddForest;
    type Output = DecisionDiagram;

    fn function_id(&self, f: &RobddForest) -> Vec<u64> {
        forest_id(f)
    }

    fn outcomes(&mut self, f: &RobddForest, key: &Key, visit: &mut dyn FnMut(DecisionDiagram, BigRational)) -> Result<(), MeerkatError> {
        let pool = eligible_nodes(f);
        let (e, r) = (pool.len(), key.len());
        if e < r {
            return Ok(());
        }
        let tuples: u64 = (0..r as u64).map(|i| e as u64 - i).product();
        let p = BigRational::new(BigInt::one(), BigInt::from(tuples));
        let mut used = vec![false; e];
        let mut hosts = Vec::with_capacity(r);
        fn rec(
            f: &RobddForest,
            key: &Key,
            pool: &[crate::bdd::Bdd],
            used: &mut [bool],
            hosts: &mut Vec<crate::bdd::Bdd>,
            p: &BigRational,
            visit: &mut dyn FnMut(DecisionDiagram, BigRational),
        ) {
            if hosts.len() == key.len() {
                visit(lock_diagram(f, key, hosts), p.clone());
                return;
            }
            for i in 0..pool.len() {
                if !used[i] {
                    used[i] = true;
                    hosts.push(pool[i]);
                    rec(f, key, pool, used, hosts, p, visit);
                    hosts.pop();
                    used[i] = false;
                }
            }
        }
        rec(f, key, &pool, &mut used, &mut hosts, &p, visit);
        Ok(())
    }

    fn signature(&self, c: &DecisionDiagram) -> Vec<u64> {
        c.signature()
    }

    fn unlock(&mut self, c: &DecisionDiagram, key: &Key) -> Result<RobddForest, MeerkatError> {
        let mut m = BddManager::new(self.inputs.clone());
        let roots = c.import_with_key(&mut m, key.bits())?;
        let named = c.output_names().iter().cloned().zip(roots).collect();
        Ok(RobddForest::new(m, named)?)
    }
}

/// Audits Meerkat on the function of `netlist` with `r`-bit keys.
pub fn security_audit(netlist: &Netlist, r: usize, order: Option<&[String]>, budget: u64) -> Result<AuditReport, MeerkatError> {
    let forest = bdd_from_netlist(netlist, order)?;
    let inputs = forest.manager().var_names().to_vec();
    let outputs = forest.output_names().map(str::to_string).collect();
    let auditor = new_auditor(MeerkatScheme { inputs: inputs.clone() }, budget);
    auditor.run(&forest, r, "meerkat", inputs, outputs)
}

/// A function for the EPIC audit: its canonical identity and the netlist
/// the designer synthesizes from it.
struct EpicFunction {
    id: Vec<u64>,
    netlist: Netlist,
}

struct EpicScheme {
    inputs: Vec<String>,
    synth: SynthConfig,
}

impl EpicScheme {
    /// Describes the function canonically (ROBDD as a MUX network), then
    /// synthesizes it.
    fn describe(&self, forest: &RobddForest) -> Result<EpicFunction, MeerkatError> {
        let dd = DecisionDiagram::from_forest(forest);
        let mux = diagram_to_mux_netlist(&dd)?;
        Ok(EpicFunction {
            id: dd.signature(),
            netlist: synthesize(&mux, &self.synth)?,
        })
    }
}

impl AuditedScheme for EpicScheme {
    type Function = EpicFunction;
    type Output = LockedNetlist;

    fn function_id(&self, f: &EpicFunction) -> Vec<u64> {
        f.id.clone()
    }

    fn outcomes(&mut self, f: &EpicFunction, key: &Key, visit: &mut dyn FnMut(LockedNetlist, BigRational)) -> Result<(), MeerkatError> {
        fn rec(
            state: EpicState<'_>,
            p: BigRational,
            visit: &mut dyn FnMut(LockedNetlist, BigRational),
        ) -> Result<(), MeerkatError> {
            if state.is_done() {
                let locked = state
                    .finish(Provenance {
                        scheme: "epic".into(),
                        seed: 0,
                    })
                    .map_err(Box::new)?;
                visit(locked, p);
                return Ok(());
            }
            let sites = state.candidates();
            if sites.is_empty() {
                return Err(Box::new(state.no_sites()).into());
            }
            let share = BigRational::new(BigInt::one(), BigInt::from(sites.len()));
            for site in sites {
                let mut next = state.clone();
                next.apply(site);
                rec(next, &p * &share, visit)?;
            }
            Ok(())
        }
        rec(EpicState::new(&f.netlist, key), BigRational::one(), visit)
    }

    fn signature(&self, c: &LockedNetlist) -> Vec<u64> {
        netlist_signature(c.netlist())
    }

    fn unlock(&mut self, c: &LockedNetlist, key: &Key) -> Result<EpicFunction, MeerkatError> {
        let fk = apply_key(c, key).map_err(Box::new)?;
        let forest = bdd_from_netlist(&fk, Some(&self.inputs))?;
        self.describe(&forest)
    }
}

/// Audits EPIC, locking a canonical synthesized netlist of each function.
pub fn epic_security_audit(netlist: &Netlist, r: usize, synth: &SynthConfig, budget: u64) -> Result<AuditReport, MeerkatError> {
    let forest = bdd_from_netlist(netlist, None)?;
    let inputs = forest.manager().var_names().to_vec();
    let outputs = forest.output_names().map(str::to_string).collect();
    let scheme = EpicScheme {
        inputs: inputs.clone(),
        synth: synth.clone(),
    };
    let f = scheme.describe(&forest)?;
    new_auditor(scheme, budget).run(&f, r, "epic", inputs, outputs)
}

/// Structure of a netlist up to gate names and order: each node gets a
/// hash of its kind and fanin hashes (sorted for symmetric cells); the
/// signature is the sorted gate hashes followed by the output hashes.
fn netlist_signature(n: &Netlist) -> Vec<u64> {
    let mut h: Vec<u64> = Vec::with_capacity(n.len());
    for id in n.ids() {
        let node = n.node(id);
        let mut st = DefaultHasher::new();
        match node.kind() {
            NodeKind::Input => (0u8, n.name(id)).hash(&mut st),
            NodeKind::Gate(kind) => {
                let mut f: Vec<u64> = node.fanins().iter().map(|x| h[x.index()]).collect();
                if kind.arity() == 2 {
                    f.sort_unstable();
                }
                (1u8, kind.index(), f).hash(&mut st);
            }
        }
        h.push(st.finish());
    }
    let mut sig: Vec<u64> = n.gate_ids().map(|g| h[g.index()]).collect();
    sig.sort_unstable();
    sig.push(u64::MAX);
    sig.extend(n.outputs().iter().map(|o| h[o.index()]));
    sig
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_bench;

    #[test]
    fn meerkat_passes_on_small3() {
        let n = super::super::tests::small3();
        for r in 1..=3 {
            let rep = security_audit(&n, r, None, DEFAULT_AUDIT_BUDGET).unwrap();
            assert_eq!(rep.verdict, Verdict::Pass, "r = {r}");
            assert!(rep.comparisons > 0);
            assert!(rep.counterexample.is_none());
        }
    }

    #[test]
    fn meerkat_distribution_sums_to_one() {
        let n = super::super::tests::small3();
        let rep = security_audit(&n, 2, None, DEFAULT_AUDIT_BUDGET).unwrap();
        for k in Key::all(2) {
            let total: BigRational = rep
                .distribution
                .iter()
                .filter(|e| e.key == k.to_hex())
                .map(|e| BigRational::new(e.probability.num.parse().unwrap(), e.probability.den.parse().unwrap()))
                .sum();
            assert!(total.is_one());
        }
    }

    #[test]
    fn too_many_key_bits() {
        let n = super::super::tests::small3();
        assert!(matches!(
            security_audit(&n, 4, None, DEFAULT_AUDIT_BUDGET),
            Err(MeerkatError::TooFewEligible { .. })
        ));
    }

    #[test]
    fn epic_fails() {
        let n = parse_bench("INPUT(A)\nINPUT(B)\nINPUT(C)\nOUTPUT(f)\nn1 = NAND(A, B)\nn2 = INV(n1)\nn3 = NOR(B, C)\nf = NOR(n2, n3)\n")
            .unwrap();
        let rep = epic_security_audit(&n, 2, &SynthConfig::default(), DEFAULT_AUDIT_BUDGET).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        let ce = rep.counterexample.unwrap();
        assert_ne!(ce.p_true, ce.p_other);
    }

    #[test]
    fn budget_is_enforced() {
        let n = super::super::tests::small3();
        assert_eq!(security_audit(&n, 2, None, 3).unwrap_err(), MeerkatError::BudgetExceeded(3));
    }

    #[test]
    fn netlist_signature_ignores_names_and_order() {
        let a = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nx = NAND(a, b)\ny = INV(a)\nf = NOR(x, y)\n").unwrap();
        let b = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\np = INV(a)\nq = NAND(b, a)\nf = NOR(p, q)\n").unwrap();
        let c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\np = INV(b)\nq = NAND(b, a)\nf = NOR(p, q)\n").unwrap();
        assert_eq!(netlist_signature(&a), netlist_signature(&b));
        assert_ne!(netlist_signature(&a), netlist_signature(&c));
    }
}
