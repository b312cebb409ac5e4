//! Cluster quivers with ranks and potentials, and the four-step mutation.
//!
//! A quiver here is a finite directed graph with no 1- or 2-cycles, a
//! nonnegative integer rank per node, a set of framed (frozen) nodes, and a
//! potential given as a formal sum of signed cycle words. Mutation at a gauge
//! node `k` adds a composite arrow per 2-path through `k`, reverses the
//! arrows at `k`, replaces the rank by `max(outgoing, incoming) - rank`,
//! cancels opposite arrow pairs (recording how many), and rewrites the
//! potential. When the rewrite produces a quadratic term `tr(A B)` for an
//! annihilated pair, the pair is eliminated by solving the two linear
//! constraint equations and substituting, which is the only quadratic shape
//! handled; anything else is reported as an error rather than guessed.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::kahler::{KahlerMap, VarImage};
use crate::rat::{rat, Rat};
use crate::series::Unit;

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub rank: u32,
    pub framed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arrow {
    pub src: NodeId,
    pub dst: NodeId,
    pub mult: u32,
}

/// A signed trace-of-cycle term of the potential. The path is stored as a
/// closed walk of `(src, dst)` steps in a canonical rotation (the
/// lexicographically least one) so potential equality is a sorted comparison.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CycleWord {
    pub coeff: i64,
    pub path: Vec<(NodeId, NodeId)>,
}

impl CycleWord {
    pub fn new(coeff: i64, path: Vec<(NodeId, NodeId)>) -> Self {
        CycleWord { coeff, path }.canonical()
    }

    /// Rotate to the lexicographically least representative.
    pub fn canonical(mut self) -> Self {
        if self.path.is_empty() {
            return self;
        }
        let n = self.path.len();
        let best = (0..n)
            .map(|r| {
                let mut rot = self.path.clone();
                rot.rotate_left(r);
                rot
            })
            .min()
            .unwrap();
        self.path = best;
        self
    }

    fn is_closed_walk(&self) -> bool {
        let n = self.path.len();
        n > 0
            && (0..n).all(|i| self.path[i].1 == self.path[(i + 1) % n].0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct QuiverMeta {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phase: Vec<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quiver {
    pub nodes: Vec<Node>,
    pub arrows: Vec<Arrow>,
    pub potential: Vec<CycleWord>,
    pub meta: QuiverMeta,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuiverError {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is framed and cannot be mutated")]
    FramedNode(NodeId),
    #[error("mutation at node {0} yields negative rank (invalid rank data)")]
    NegativeRank(NodeId),
    #[error("invalid quiver: {0}")]
    Invalid(String),
    #[error("potential rewrite outside the catalogued cases: {0}")]
    PotentialOutsideCatalogue(String),
    #[error("kähler map not catalogued for this mutation: {0}")]
    MapNotCatalogued(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// How the mutated potential was obtained. The arrow/rank part of a
/// mutation is always well defined; the potential rewrite is only exact on
/// the catalogued patterns and the status records anything less.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PotentialStatus {
    /// Rewritten exactly by the catalogued recipe.
    Exact,
    /// Cubic terms for some 2-paths could not be represented because the
    /// composite arrow merged with parallel arrows; the stored potential
    /// omits them. Only reachable from an empty input potential.
    OmittedAmbiguousCubics,
    /// The rewrite hit a pattern outside the catalogued cases (for example
    /// an annihilated arrow with no quadratic partner to eliminate it); the
    /// stored potential is cleared and the reason recorded.
    Unsupported(String),
}

/// Classification of `N_f(k)` versus `N_a(k)` before the mutation, which
/// selects the variable-map case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KahlerCase {
    /// `N_f(k) >= N_a(k) + 2`
    OutGtIn,
    /// `N_f(k) == N_a(k) + 1`
    OutEqInPlus1,
    /// `N_f(k) == N_a(k)`
    OutEqIn,
    /// `N_f(k) < N_a(k)`
    InGtOut,
}

/// Which variable-map rule to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapRule {
    /// The general three-branch map of the duality conjecture, signs
    /// represented as rational `(-1)^N` factors.
    ConjectureGeneral,
    /// The explicit proved formulas (star cases and their specializations);
    /// errors for shapes the proofs do not cover.
    PaperProvedCase,
}

#[derive(Debug, Clone)]
pub struct MutationResult {
    pub quiver: Quiver,
    /// `(min(i,j), max(i,j)) -> number of removed opposite pairs`.
    pub annihilated: BTreeMap<(NodeId, NodeId), u32>,
    pub kahler_case: KahlerCase,
    pub node: NodeId,
    pub potential_status: PotentialStatus,
    /// The quiver before mutation; the variable maps are read off from it.
    pub before: Quiver,
}

impl Quiver {
    pub fn new(nodes: Vec<Node>, arrows: Vec<Arrow>, potential: Vec<CycleWord>) -> Result<Self, QuiverError> {
        let q = Quiver { nodes, arrows, potential, meta: QuiverMeta::default() }.canonicalized();
        q.validate()?;
        Ok(q)
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, QuiverError> {
        self.nodes.iter().find(|n| n.id == id).ok_or(QuiverError::UnknownNode(id))
    }

    pub fn rank(&self, id: NodeId) -> Result<u32, QuiverError> {
        Ok(self.node(id)?.rank)
    }

    pub fn gauge_ids(&self) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| !n.framed).map(|n| n.id).collect()
    }

    /// Signed multiplicity `b_ij`: positive for arrows `i -> j`, negative for
    /// `j -> i`, zero otherwise.
    pub fn b(&self, i: NodeId, j: NodeId) -> i64 {
        for a in &self.arrows {
            if a.src == i && a.dst == j {
                return a.mult as i64;
            }
            if a.src == j && a.dst == i {
                return -(a.mult as i64);
            }
        }
        0
    }

    /// `N_f(k) = sum_j [b_kj]_+ N_j` over arrows leaving `k`.
    pub fn outgoing(&self, k: NodeId) -> Result<u64, QuiverError> {
        self.node(k)?;
        Ok(self
            .arrows
            .iter()
            .filter(|a| a.src == k)
            .map(|a| a.mult as u64 * self.rank(a.dst).unwrap_or(0) as u64)
            .sum())
    }

    /// `N_a(k) = sum_i [b_ik]_+ N_i` over arrows entering `k`.
    pub fn incoming(&self, k: NodeId) -> Result<u64, QuiverError> {
        self.node(k)?;
        Ok(self
            .arrows
            .iter()
            .filter(|a| a.dst == k)
            .map(|a| a.mult as u64 * self.rank(a.src).unwrap_or(0) as u64)
            .sum())
    }

    /// Rank vector keyed by node id.
    pub fn rank_vector(&self) -> BTreeMap<NodeId, u32> {
        self.nodes.iter().map(|n| (n.id, n.rank)).collect()
    }

    /// Arrow multiplicity matrix keyed by ordered pair.
    pub fn arrow_matrix(&self) -> BTreeMap<(NodeId, NodeId), u32> {
        self.arrows.iter().map(|a| ((a.src, a.dst), a.mult)).collect()
    }

    pub fn validate(&self) -> Result<(), QuiverError> {
        let inv = |m: String| Err(QuiverError::Invalid(m));
        let mut ids = std::collections::BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return inv(format!("duplicate node id {}", n.id));
            }
        }
        let mut pairs = std::collections::BTreeSet::new();
        for a in &self.arrows {
            if a.src == a.dst {
                return inv(format!("1-cycle at node {}", a.src));
            }
            if a.mult == 0 {
                return inv(format!("zero multiplicity {}->{}", a.src, a.dst));
            }
            if !ids.contains(&a.src) || !ids.contains(&a.dst) {
                return inv(format!("arrow {}->{} references missing node", a.src, a.dst));
            }
            if self.node(a.src).unwrap().framed && self.node(a.dst).unwrap().framed {
                return inv(format!("arrow {}->{} joins two framed nodes", a.src, a.dst));
            }
            if !pairs.insert((a.src, a.dst)) {
                return inv(format!("duplicate arrow record {}->{}", a.src, a.dst));
            }
            if pairs.contains(&(a.dst, a.src)) {
                return inv(format!("2-cycle between {} and {}", a.src, a.dst));
            }
        }
        for w in &self.potential {
            if !w.is_closed_walk() {
                return inv("potential word is not a closed walk".into());
            }
            if w.coeff == 0 {
                return inv("potential word with zero coefficient".into());
            }
            for step in &w.path {
                match self.arrows.iter().find(|a| (a.src, a.dst) == *step) {
                    None => return inv(format!("potential references missing arrow {}->{}", step.0, step.1)),
                    Some(a) if a.mult != 1 => {
                        return inv(format!(
                            "potential references arrow {}->{} of multiplicity {}",
                            step.0, step.1, a.mult
                        ))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Sort nodes, arrows, and potential words into the canonical order and
    /// apply the sign convention: a potential whose terms are all negative is
    /// globally negated (traces are compared up to an overall sign).
    pub fn canonicalized(&self) -> Quiver {
        let mut q = self.clone();
        q.nodes.sort_by_key(|n| n.id);
        q.arrows.sort_by_key(|a| (a.src, a.dst));
        let mut merged: BTreeMap<Vec<(NodeId, NodeId)>, i64> = BTreeMap::new();
        for w in &q.potential {
            let c = w.clone().canonical();
            *merged.entry(c.path).or_insert(0) += c.coeff;
        }
        q.potential = merged
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .map(|(path, coeff)| CycleWord { coeff, path })
            .collect();
        if !q.potential.is_empty() && q.potential.iter().all(|w| w.coeff < 0) {
            for w in q.potential.iter_mut() {
                w.coeff = -w.coeff;
            }
        }
        q.potential.sort();
        q
    }

    /// Quiver mutation at a gauge node.
    pub fn mutate(&self, k: NodeId) -> Result<MutationResult, QuiverError> {
        let nk = self.node(k)?;
        if nk.framed {
            return Err(QuiverError::FramedNode(k));
        }
        let nf = self.outgoing(k)?;
        let na = self.incoming(k)?;
        let new_rank = nf.max(na) as i64 - nk.rank as i64;
        if new_rank < 0 {
            return Err(QuiverError::NegativeRank(k));
        }
        let kahler_case = if nf >= na + 2 {
            KahlerCase::OutGtIn
        } else if nf == na + 1 {
            KahlerCase::OutEqInPlus1
        } else if nf == na {
            KahlerCase::OutEqIn
        } else {
            KahlerCase::InGtOut
        };

        let into_k: Vec<(NodeId, u32)> = self
            .arrows
            .iter()
            .filter(|a| a.dst == k)
            .map(|a| (a.src, a.mult))
            .collect();
        let out_of_k: Vec<(NodeId, u32)> = self
            .arrows
            .iter()
            .filter(|a| a.src == k)
            .map(|a| (a.dst, a.mult))
            .collect();

        // Steps 1-3 on the multiplicity matrix.
        let mut mults: BTreeMap<(NodeId, NodeId), i64> = BTreeMap::new();
        for a in &self.arrows {
            if a.src == k || a.dst == k {
                mults.insert((a.dst, a.src), a.mult as i64); // reversed
            } else {
                *mults.entry((a.src, a.dst)).or_insert(0) += a.mult as i64;
            }
        }
        let mut added: BTreeMap<(NodeId, NodeId), i64> = BTreeMap::new();
        for &(i, p) in &into_k {
            for &(j, r) in &out_of_k {
                *mults.entry((i, j)).or_insert(0) += (p * r) as i64;
                *added.entry((i, j)).or_insert(0) += (p * r) as i64;
            }
        }
        let mut annihilated: BTreeMap<(NodeId, NodeId), u32> = BTreeMap::new();
        let pairs: Vec<(NodeId, NodeId)> = mults.keys().cloned().collect();
        for (i, j) in pairs {
            if i < j {
                let f = mults.get(&(i, j)).copied().unwrap_or(0);
                let r = mults.get(&(j, i)).copied().unwrap_or(0);
                let m = f.min(r);
                if m > 0 {
                    mults.insert((i, j), f - m);
                    mults.insert((j, i), r - m);
                    annihilated.insert((i, j), m as u32);
                }
            }
        }

        let nodes: Vec<Node> = self
            .nodes
            .iter()
            .map(|n| {
                let mut n = n.clone();
                if n.id == k {
                    n.rank = new_rank as u32;
                }
                n
            })
            .collect();
        let arrows: Vec<Arrow> = mults
            .iter()
            .filter(|(_, &m)| m > 0)
            .map(|(&(src, dst), &m)| Arrow { src, dst, mult: m as u32 })
            .collect();

        let two_paths: Vec<(NodeId, NodeId)> = into_k
            .iter()
            .flat_map(|&(i, _)| out_of_k.iter().map(move |&(j, _)| (i, j)))
            .collect();
        let (potential, potential_status) = rewrite_potential(
            &self.potential,
            k,
            &two_paths,
            &annihilated,
            &arrows,
        )?;

        let quiver = Quiver {
            nodes,
            arrows,
            potential,
            meta: QuiverMeta { phase: Vec::new(), family: None },
        }
        .canonicalized();
        quiver.validate()?;
        Ok(MutationResult {
            quiver,
            annihilated,
            kahler_case,
            node: k,
            potential_status,
            before: self.clone(),
        })
    }

    /// The Kähler-variable substitution attached to a mutation, one variable
    /// per gauge node in id order.
    pub fn kahler_map_for(res: &MutationResult, rule: MapRule) -> Result<KahlerMap, QuiverError> {
        let before = &res.before;
        let after = &res.quiver;
        let k = res.node;
        let gauge = before.gauge_ids();
        let vars: Vec<String> = gauge.iter().map(|id| format!("q{}", id)).collect();
        let kpos = gauge.iter().position(|&g| g == k).unwrap();
        let nk_new = after.rank(k)? as i64;
        let sign_nk = if nk_new % 2 == 0 { 1i64 } else { -1i64 };
        let unit = Unit { var: kpos, sign: sign_nk as i8 };
        let needs_unit = matches!(res.kahler_case, KahlerCase::OutEqIn);
        let units = if needs_unit { vec![unit] } else { Vec::new() };
        let nunits = units.len();

        let mut images = Vec::with_capacity(gauge.len());
        for (pos, &j) in gauge.iter().enumerate() {
            let mut exps = vec![0i64; gauge.len()];
            let mut unit_exps = vec![0i64; nunits];
            let mut sign = Rat::one();
            if j == k {
                exps[kpos] = -1;
                images.push(VarImage { sign: 1, exps, unit_exps });
                continue;
            }
            exps[pos] = 1;
            let p = before.b(k, j).max(0); // arrows k -> j
            let m = (-before.b(k, j)).max(0); // arrows j -> k
            match rule {
                MapRule::PaperProvedCase => match res.kahler_case {
                    KahlerCase::OutGtIn | KahlerCase::OutEqInPlus1 => {
                        exps[kpos] += p;
                    }
                    KahlerCase::OutEqIn => {
                        exps[kpos] += p;
                        unit_exps[0] = m - p;
                    }
                    KahlerCase::InGtOut => {
                        return Err(QuiverError::MapNotCatalogued(
                            "incoming exceeds outgoing; the proved cases cover N_f(k) >= N_a(k) only"
                                .into(),
                        ))
                    }
                },
                MapRule::ConjectureGeneral => {
                    // overall sign (-1)^{N_f(j) - N_f(j)'} and the
                    // annihilation signs prod_i (-1)^{N_i a_ij}
                    let nfj = before.outgoing(j)? as i64;
                    let nfj_new = after.outgoing(j)? as i64;
                    sign *= rat(if (nfj - nfj_new) % 2 == 0 { 1 } else { -1 });
                    for (&(a, b), &cnt) in &res.annihilated {
                        let other = if a == j {
                            Some(b)
                        } else if b == j {
                            Some(a)
                        } else {
                            None
                        };
                        if let Some(i) = other {
                            let ni = before.rank(i)? as i64;
                            if (ni * cnt as i64) % 2 != 0 {
                                sign = -sign;
                            }
                        }
                    }
                    match res.kahler_case {
                        KahlerCase::OutGtIn | KahlerCase::OutEqInPlus1 => {
                            exps[kpos] += p;
                            if sign_nk < 0 && (p + m) % 2 != 0 {
                                sign = -sign;
                            }
                        }
                        KahlerCase::OutEqIn => {
                            exps[kpos] += p;
                            unit_exps[0] = m - p;
                            if sign_nk < 0 && (p + m) % 2 != 0 {
                                sign = -sign;
                            }
                        }
                        KahlerCase::InGtOut => {
                            exps[kpos] -= m;
                            if sign_nk < 0 && p % 2 != 0 {
                                sign = -sign;
                            }
                            let nf_k = before.outgoing(k)? as i64;
                            let s2 = nf_k - before.rank(k)? as i64;
                            if (s2 * m) % 2 != 0 {
                                sign = -sign;
                            }
                        }
                    }
                }
            }
            let sign = if sign == rat(1) { 1i8 } else { -1i8 };
            images.push(VarImage { sign, exps, unit_exps });
        }
        Ok(KahlerMap { vars, images, units }.normalized())
    }

    // ---- JSON I/O ----

    pub fn to_json(&self) -> serde_json::Value {
        let q = self.canonicalized();
        serde_json::json!({
            "nodes": q.nodes,
            "arrows": q.arrows,
            "potential": q
                .potential
                .iter()
                .map(|w| serde_json::json!({"coeff": w.coeff, "cycle": w.path}))
                .collect::<Vec<_>>(),
            "meta": q.meta,
        })
    }

    /// Canonical pretty-printed emission for diff-stable goldens.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serialize quiver");
        s.push('\n');
        s
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Quiver, QuiverError> {
        let perr = |m: &str| QuiverError::Parse(m.to_string());
        let nodes: Vec<Node> =
            serde_json::from_value(v["nodes"].clone()).map_err(|e| perr(&format!("nodes: {}", e)))?;
        let arrows: Vec<Arrow> =
            serde_json::from_value(v["arrows"].clone()).map_err(|e| perr(&format!("arrows: {}", e)))?;
        let mut potential = Vec::new();
        if let Some(words) = v["potential"].as_array() {
            for w in words {
                let coeff = w["coeff"].as_i64().ok_or_else(|| perr("potential coeff"))?;
                let cycle = w["cycle"].as_array().ok_or_else(|| perr("potential cycle"))?;
                let mut path = Vec::new();
                for step in cycle {
                    let s = step.as_array().ok_or_else(|| perr("cycle step"))?;
                    if s.len() != 2 {
                        return Err(perr("cycle step arity"));
                    }
                    path.push((
                        s[0].as_u64().ok_or_else(|| perr("cycle src"))? as NodeId,
                        s[1].as_u64().ok_or_else(|| perr("cycle dst"))? as NodeId,
                    ));
                }
                potential.push(CycleWord::new(coeff, path));
            }
        }
        let meta: QuiverMeta = if v["meta"].is_object() {
            serde_json::from_value(v["meta"].clone()).map_err(|e| perr(&format!("meta: {}", e)))?
        } else {
            QuiverMeta::default()
        };
        let mut q = Quiver { nodes, arrows, potential, meta }.canonicalized();
        q.validate()?;
        // keep meta out of canonicalization concerns
        q.meta = serde_json::from_value(v["meta"].clone()).unwrap_or_default();
        Ok(q)
    }

    pub fn from_json_str(s: &str) -> Result<Quiver, QuiverError> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| QuiverError::Parse(format!("{}", e)))?;
        Quiver::from_json(&v)
    }
}

/// Step (4) of mutation: rewrite the potential.
///
/// Paths `i -> k -> j` occurring in a word are contracted to the composite
/// arrow `i -> j`; a cubic term is added per 2-path through `k`; every
/// annihilated pair that shows up as a quadratic word is eliminated through
/// the constraint equations `dW/dA = 0` (each a linear substitution).
pub fn mutate_potential(
    potential: &[CycleWord],
    quiver: &Quiver,
    k: NodeId,
) -> Result<Vec<CycleWord>, QuiverError> {
    let res = quiver.mutate(k)?;
    if potential
        .iter()
        .map(|w| w.clone().canonical())
        .collect::<std::collections::BTreeSet<_>>()
        != quiver
            .potential
            .iter()
            .map(|w| w.clone().canonical())
            .collect::<std::collections::BTreeSet<_>>()
    {
        return Err(QuiverError::Invalid(
            "potential argument does not match the quiver's potential".into(),
        ));
    }
    match res.potential_status {
        PotentialStatus::Exact => Ok(res.quiver.potential),
        PotentialStatus::OmittedAmbiguousCubics => Err(QuiverError::PotentialOutsideCatalogue(
            "cubic terms for some 2-paths are not representable".into(),
        )),
        PotentialStatus::Unsupported(reason) => Err(QuiverError::PotentialOutsideCatalogue(reason)),
    }
}

fn rewrite_potential(
    potential: &[CycleWord],
    k: NodeId,
    two_paths: &[(NodeId, NodeId)],
    annihilated: &BTreeMap<(NodeId, NodeId), u32>,
    final_arrows: &[Arrow],
) -> Result<(Vec<CycleWord>, PotentialStatus), QuiverError> {
    let mut status = PotentialStatus::Exact;
    let had_potential = !potential.is_empty();

    // contract i -> k -> j occurrences
    let mut words: Vec<(Rat, Vec<(NodeId, NodeId)>)> = Vec::new();
    for w in potential {
        let mut path = w.path.clone();
        loop {
            let n = path.len();
            let pos = (0..n).find(|&i| path[i].1 == k);
            match pos {
                None => break,
                Some(i) => {
                    let nxt = (i + 1) % n;
                    debug_assert_eq!(path[nxt].0, k);
                    let step = (path[i].0, path[nxt].1);
                    if path[i].0 == path[nxt].1 {
                        return Ok((
                            Vec::new(),
                            PotentialStatus::Unsupported(format!(
                                "contraction at node {} would create a 1-cycle",
                                k
                            )),
                        ));
                    }
                    let mut newp = Vec::with_capacity(n - 1);
                    let mut t = nxt;
                    newp.push(step);
                    loop {
                        t = (t + 1) % n;
                        if t == i {
                            break;
                        }
                        newp.push(path[t]);
                    }
                    path = newp;
                }
            }
        }
        words.push((rat(w.coeff), path));
    }

    // cubic term per 2-path through k
    let mult_of = |s: NodeId, d: NodeId| -> i64 {
        final_arrows
            .iter()
            .find(|a| a.src == s && a.dst == d)
            .map(|a| a.mult as i64)
            .unwrap_or(0)
    };
    for &(i, j) in two_paths {
        let reversed_ok = mult_of(j, k) == 1 && mult_of(k, i) == 1;
        let composite_alive = mult_of(i, j) == 1;
        let composite_annihilated =
            annihilated.contains_key(&(i.min(j), i.max(j))) && mult_of(i, j) == 0 && mult_of(j, i) <= 1;
        if reversed_ok && (composite_alive || composite_annihilated) {
            words.push((rat(1), vec![(j, k), (k, i), (i, j)]));
        } else if had_potential {
            return Ok((
                Vec::new(),
                PotentialStatus::Unsupported(format!(
                    "cubic term for 2-path {}->{}->{} is not representable",
                    i, k, j
                )),
            ));
        } else {
            status = PotentialStatus::OmittedAmbiguousCubics;
        }
    }

    // eliminate annihilated pairs through the quadratic constraints
    for (&(a, b), _) in annihilated {
        for (x, y) in [(a, b), (b, a)] {
            // the pair may have been recorded with either orientation of the
            // "new" arrow; the quadratic word is orientation-symmetric
            let quad = CycleWord::new(1, vec![(x, y), (y, x)]);
            let mut c0 = Rat::zero();
            let mut with_xy: Vec<(Rat, Vec<(NodeId, NodeId)>)> = Vec::new();
            let mut with_yx: Vec<(Rat, Vec<(NodeId, NodeId)>)> = Vec::new();
            let mut rest: Vec<(Rat, Vec<(NodeId, NodeId)>)> = Vec::new();
            for (c, path) in words.drain(..) {
                let canon = CycleWord { coeff: 1, path: path.clone() }.canonical();
                if canon.path == quad.path {
                    c0 += c;
                    continue;
                }
                let has_xy = path.contains(&(x, y));
                let has_yx = path.contains(&(y, x));
                match (has_xy, has_yx) {
                    (false, false) => rest.push((c, path)),
                    (true, false) => with_xy.push((c, path)),
                    (false, true) => with_yx.push((c, path)),
                    (true, true) => {
                        return Ok((
                            Vec::new(),
                            PotentialStatus::Unsupported(format!(
                                "word uses both arrows of annihilated pair {}<->{}",
                                x, y
                            )),
                        ))
                    }
                }
            }
            if c0.is_zero() {
                if !with_xy.is_empty() || !with_yx.is_empty() {
                    return Ok((
                        Vec::new(),
                        PotentialStatus::Unsupported(format!(
                            "annihilated arrow between {} and {} appears without a quadratic partner",
                            x, y
                        )),
                    ));
                }
                words = rest;
                continue;
            }
            // W' = c0 tr(A_{xy} A_{yx}) + sum_s c_s tr(A_{xy} P_s)
            //                           + sum_t d_t tr(A_{yx} R_t) + rest
            // constraints give A_{yx} = -(1/c0) sum c_s P_s and
            // A_{xy} = -(1/c0) sum d_t R_t, hence
            // W = rest - (1/c0) sum_{s,t} c_s d_t tr(R_t P_s).
            let mut out = rest;
            for (cs, ps) in &with_xy {
                let p_s = rotate_to_start(ps, (x, y));
                for (dt, rt) in &with_yx {
                    let r_t = rotate_to_start(rt, (y, x));
                    let mut cycle = r_t[1..].to_vec();
                    cycle.extend_from_slice(&p_s[1..]);
                    let coeff = -(cs * dt) / &c0;
                    out.push((coeff, cycle));
                }
            }
            words = out;
        }
    }

    // merge canonical words, apply the overall-sign convention, and make
    // sure nothing references a removed arrow
    let mut merged: BTreeMap<Vec<(NodeId, NodeId)>, Rat> = BTreeMap::new();
    for (c, path) in words {
        let canon = CycleWord { coeff: 1, path }.canonical();
        *merged.entry(canon.path).or_insert_with(Rat::zero) += c;
    }
    let mut out = Vec::new();
    for (path, c) in merged {
        if c.is_zero() {
            continue;
        }
        for step in &path {
            if mult_of(step.0, step.1) != 1 {
                return Ok((
                    Vec::new(),
                    PotentialStatus::Unsupported(format!(
                        "rewritten potential references arrow {}->{} of multiplicity {}",
                        step.0,
                        step.1,
                        mult_of(step.0, step.1)
                    )),
                ));
            }
        }
        if !c.denom().is_one() {
            return Ok((
                Vec::new(),
                PotentialStatus::Unsupported("non-integer coefficient after reduction".into()),
            ));
        }
        let Ok(coeff): Result<i64, _> = c.numer().try_into() else {
            return Ok((
                Vec::new(),
                PotentialStatus::Unsupported("coefficient overflow".into()),
            ));
        };
        out.push(CycleWord { coeff, path });
    }
    if !out.is_empty() && out.iter().all(|w| w.coeff < 0) {
        for w in out.iter_mut() {
            w.coeff = -w.coeff;
        }
    }
    out.sort();
    Ok((out, status))
}

fn rotate_to_start(path: &[(NodeId, NodeId)], step: (NodeId, NodeId)) -> Vec<(NodeId, NodeId)> {
    let i = path.iter().position(|&s| s == step).expect("step present");
    let mut p = path.to_vec();
    p.rotate_left(i);
    p
}

impl std::fmt::Display for Quiver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for n in &self.nodes {
            writeln!(
                f,
                "node {} rank {}{}",
                n.id,
                n.rank,
                if n.framed { " (framed)" } else { "" }
            )?;
        }
        for a in &self.arrows {
            writeln!(f, "arrow {} -> {} x{}", a.src, a.dst, a.mult)?;
        }
        for w in &self.potential {
            let steps: Vec<String> = w.path.iter().map(|(s, d)| format!("{}->{}", s, d)).collect();
            writeln!(f, "potential {} * tr({})", w.coeff, steps.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixpoints::{family_quiver, Family, Ranks};

    fn d3() -> Quiver {
        family_quiver(Family::X0, &Ranks::D3 { n: [2, 2, 3, 4] }).unwrap()
    }

    #[test]
    fn outgoing_incoming_examples() {
        let q = d3();
        assert_eq!(q.outgoing(3).unwrap(), 4); // N4 through 3 -> 4
        assert_eq!(q.incoming(3).unwrap(), 4); // N1 + N2
        assert_eq!(q.outgoing(1).unwrap(), 3);
        assert_eq!(q.incoming(1).unwrap(), 0);
        // isolated node
        let iso = Quiver::new(
            vec![Node { id: 1, rank: 2, framed: false }],
            vec![],
            vec![],
        )
        .unwrap();
        assert_eq!(iso.outgoing(1).unwrap(), 0);
        assert_eq!(iso.incoming(1).unwrap(), 0);
        assert!(matches!(iso.outgoing(9), Err(QuiverError::UnknownNode(9))));
    }

    #[test]
    fn star_center_sums() {
        let q = family_quiver(Family::Star, &Ranks::Star { n: [1, 1, 2, 2, 3, 2, 2, 3, 3] }).unwrap();
        assert_eq!(q.outgoing(5).unwrap(), 4); // N6 + N7
        assert_eq!(q.incoming(5).unwrap(), 4); // N3 + N4
    }

    #[test]
    fn chain_of_mutations_reproduces_catalogue() {
        let ranks = Ranks::D3 { n: [2, 2, 3, 4] };
        let seq = [3u32, 1, 2, 3, 1, 2, 3, 1, 2];
        let stages = [
            Family::Z1,
            Family::Z2,
            Family::Z3,
            Family::X4,
            Family::X5,
            Family::X6,
            Family::X7,
            Family::X8,
            Family::X9,
        ];
        let mut q = d3();
        for (k, fam) in seq.iter().zip(stages) {
            let res = q.mutate(*k).unwrap();
            let want = family_quiver(fam, &ranks).unwrap();
            assert_eq!(res.quiver.arrow_matrix(), want.arrow_matrix(), "{:?}", fam);
            assert_eq!(res.quiver.rank_vector(), want.rank_vector(), "{:?}", fam);
            assert_eq!(res.quiver.potential, want.potential, "{:?}", fam);
            assert_eq!(res.potential_status, PotentialStatus::Exact);
            q = res.quiver;
        }
        // X9 with nodes 1 and 2 exchanged is X0
        let x0 = d3();
        assert_eq!(q.rank(1).unwrap(), x0.rank(2).unwrap());
        assert_eq!(q.rank(2).unwrap(), x0.rank(1).unwrap());
    }

    #[test]
    fn mutate_d3_matches_figure_and_annihilation() {
        let res = d3().mutate(3).unwrap();
        assert_eq!(res.kahler_case, KahlerCase::OutEqIn);
        assert!(res.annihilated.is_empty());
        let ranks: Vec<u32> = res.quiver.nodes.iter().map(|n| n.rank).collect();
        assert_eq!(ranks, vec![2, 2, 1, 4]);
        // second mutation annihilates the two opposite pairs it creates
        let back = res.quiver.mutate(3).unwrap();
        assert_eq!(back.annihilated.get(&(1, 4)), Some(&1));
        assert_eq!(back.annihilated.get(&(2, 4)), Some(&1));
    }

    #[test]
    fn involution_on_d3_exact() {
        let q = d3();
        let twice = q.mutate(3).unwrap().quiver.mutate(3).unwrap().quiver;
        assert_eq!(twice.arrow_matrix(), q.arrow_matrix());
        assert_eq!(twice.rank_vector(), q.rank_vector());
        assert_eq!(twice.potential, q.potential);
    }

    #[test]
    fn star_rank_update() {
        let q = family_quiver(Family::Star, &Ranks::Star { n: [1, 1, 2, 2, 3, 2, 2, 3, 3] }).unwrap();
        let res = q.mutate(5).unwrap();
        assert_eq!(res.quiver.rank(5).unwrap(), 1); // N6 + N7 - N5
    }

    #[test]
    fn potential_goldens_along_chain() {
        // mu1 applied to the Z1 quiver reduces the quadratic pair to the
        // single quartic cycle
        let z1 = family_quiver(Family::Z1, &Ranks::D3 { n: [2, 2, 3, 4] }).unwrap();
        let z2 = z1.mutate(1).unwrap().quiver;
        assert_eq!(
            z2.potential,
            vec![CycleWord::new(1, vec![(1, 3), (3, 2), (2, 4), (4, 1)])]
        );
        // mu2 applied to the Z2 quiver gives the two cubic terms back
        let z3 = z2.mutate(2).unwrap().quiver;
        assert_eq!(
            z3.potential,
            vec![
                CycleWord::new(1, vec![(1, 3), (3, 4), (4, 1)]),
                CycleWord::new(1, vec![(2, 3), (3, 4), (4, 2)]),
            ]
        );
    }

    #[test]
    fn mutate_potential_trivial_cases() {
        // no 2-paths through the mutated node: empty potential stays empty
        let q = Quiver::new(
            vec![
                Node { id: 1, rank: 1, framed: false },
                Node { id: 2, rank: 2, framed: true },
            ],
            vec![Arrow { src: 1, dst: 2, mult: 1 }],
            vec![],
        )
        .unwrap();
        let w = mutate_potential(&[], &q, 1).unwrap();
        assert!(w.is_empty());
    }

    #[test]
    fn mutation_error_paths() {
        let q = d3();
        assert!(matches!(q.mutate(4), Err(QuiverError::FramedNode(4))));
        assert!(matches!(q.mutate(7), Err(QuiverError::UnknownNode(7))));
        // negative resulting rank
        let bad = Quiver::new(
            vec![
                Node { id: 1, rank: 5, framed: false },
                Node { id: 2, rank: 1, framed: true },
            ],
            vec![Arrow { src: 1, dst: 2, mult: 1 }],
            vec![],
        )
        .unwrap();
        assert!(matches!(bad.mutate(1), Err(QuiverError::NegativeRank(1))));
    }

    #[test]
    fn kahler_map_proved_cases() {
        let ranks = Ranks::D3 { n: [2, 2, 3, 4] };
        // Corollary map at mu3: q1' = (1-q3) q1, q2' = (1-q3) q2, q3' = q3^-1
        let res = d3().mutate(3).unwrap();
        let m = Quiver::kahler_map_for(&res, MapRule::PaperProvedCase).unwrap();
        assert_eq!(m.image_strings(), vec!["q1*(1-q3)", "q2*(1-q3)", "q3^-1"]);
        // the general conjecture map agrees here
        let c = Quiver::kahler_map_for(&res, MapRule::ConjectureGeneral).unwrap();
        assert_eq!(m, c);
        // Z1 -> Z2 step: (q1^-1, q2, q3)
        let z1 = family_quiver(Family::Z1, &ranks).unwrap();
        let res = z1.mutate(1).unwrap();
        assert_eq!(res.kahler_case, KahlerCase::OutGtIn);
        let m = Quiver::kahler_map_for(&res, MapRule::PaperProvedCase).unwrap();
        assert_eq!(m.image_strings(), vec!["q1^-1", "q2", "q3"]);
        assert_eq!(Quiver::kahler_map_for(&res, MapRule::ConjectureGeneral).unwrap(), m);
    }

    #[test]
    fn kahler_map_star_case_a() {
        let q = family_quiver(Family::Star, &Ranks::Star { n: [1, 1, 2, 2, 2, 3, 3, 4, 4] }).unwrap();
        let res = q.mutate(5).unwrap();
        assert_eq!(res.kahler_case, KahlerCase::OutGtIn);
        let m = Quiver::kahler_map_for(&res, MapRule::PaperProvedCase).unwrap();
        assert_eq!(
            m.image_strings(),
            vec!["q1", "q2", "q3", "q4", "q5^-1", "q5*q6", "q5*q7"]
        );
        assert_eq!(Quiver::kahler_map_for(&res, MapRule::ConjectureGeneral).unwrap(), m);
    }

    #[test]
    fn kahler_map_not_catalogued_for_in_gt_out() {
        let x4 = family_quiver(Family::X4, &Ranks::D3 { n: [2, 2, 3, 4] }).unwrap();
        let res = x4.mutate(1).unwrap();
        assert_eq!(res.kahler_case, KahlerCase::InGtOut);
        assert!(matches!(
            Quiver::kahler_map_for(&res, MapRule::PaperProvedCase),
            Err(QuiverError::MapNotCatalogued(_))
        ));
        // the conjecture branch still produces a map
        assert!(Quiver::kahler_map_for(&res, MapRule::ConjectureGeneral).is_ok());
    }

    #[test]
    fn json_round_trip_is_canonical() {
        let q = family_quiver(Family::Z1, &Ranks::D3 { n: [2, 2, 3, 4] }).unwrap();
        let s = q.to_json_string();
        let back = Quiver::from_json_str(&s).unwrap();
        assert_eq!(back.to_json_string(), s);
        assert_eq!(back.arrow_matrix(), q.arrow_matrix());
        assert_eq!(back.potential, q.potential);
    }

    #[test]
    fn two_cycle_rejected() {
        let r = Quiver::new(
            vec![
                Node { id: 1, rank: 1, framed: false },
                Node { id: 2, rank: 1, framed: false },
            ],
            vec![
                Arrow { src: 1, dst: 2, mult: 1 },
                Arrow { src: 2, dst: 1, mult: 1 },
            ],
            vec![],
        );
        assert!(matches!(r, Err(QuiverError::Invalid(_))));
    }
}
