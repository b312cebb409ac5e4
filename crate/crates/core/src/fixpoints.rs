//! Torus-fixed points of the catalogued quiver varieties.
//!
//! Each family's fixed points are tuples of strictly increasing label
//! subsets, one per gauge node, subject to containment and disjointness
//! constraints read off from the row/column echelon forms of the
//! non-degenerate matrices. Every fixed point carries the induced assignment
//! of Chern-root slots to equivariant-parameter indices, which is all the
//! series engine needs to restrict I-functions.
//!
//! For the star-shaped quivers the two outgoing frames are flattened to
//! consecutive labels `1..N6+N7`; the flattened label `p` carries the
//! equivariant parameter of the p-th chosen column, uniformly for every
//! fixed point.

use num_traits::Signed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::quiver::{Arrow, CycleWord, Node, Quiver};
use crate::rat::{rat, Rat};

/// Catalogued varieties with finite torus-fixed loci.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    X0,
    Z1,
    Z2,
    Z3,
    X4,
    X5,
    X6,
    X7,
    X8,
    X9,
    Star,
    StarDual,
    GrBlock,
    GrBlockDual,
}

impl Family {
    pub fn parse(s: &str) -> Option<Family> {
        Some(match s.to_ascii_lowercase().as_str() {
            "x0" => Family::X0,
            "z1" => Family::Z1,
            "z2" => Family::Z2,
            "z3" => Family::Z3,
            "x4" => Family::X4,
            "x5" => Family::X5,
            "x6" => Family::X6,
            "x7" => Family::X7,
            "x8" => Family::X8,
            "x9" => Family::X9,
            "star" | "xs" => Family::Star,
            "star-dual" | "zs" => Family::StarDual,
            "grblock" | "gr" => Family::GrBlock,
            "grblock-dual" | "grdual" => Family::GrBlockDual,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::X0 => "x0",
            Family::Z1 => "z1",
            Family::Z2 => "z2",
            Family::Z3 => "z3",
            Family::X4 => "x4",
            Family::X5 => "x5",
            Family::X6 => "x6",
            Family::X7 => "x7",
            Family::X8 => "x8",
            Family::X9 => "x9",
            Family::Star => "star",
            Family::StarDual => "star-dual",
            Family::GrBlock => "grblock",
            Family::GrBlockDual => "grblock-dual",
        }
    }
}

/// Rank data for the three catalogue shapes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ranks {
    /// `(N1, N2, N3, N4)` with `N4 > N3 > N1, N2 >= 1` and `N4 = N1 + N2`.
    D3 { n: [u32; 4] },
    /// `(N1..N7; N8, N9)`, nodes 8 and 9 framed.
    Star { n: [u32; 9] },
    /// Building block `S^m -> Gr(r, n)`.
    Gr { r: u32, n: u32, m: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FpError {
    #[error("inadmissible ranks: {0}")]
    BadRanks(String),
    #[error("fixed point does not belong to family {0}")]
    WrongFamily(String),
    #[error("rank data does not match family")]
    RankShape,
}

impl Ranks {
    pub fn d3(&self) -> Result<[u32; 4], FpError> {
        match self {
            Ranks::D3 { n } => Ok(*n),
            _ => Err(FpError::RankShape),
        }
    }

    pub fn star(&self) -> Result<[u32; 9], FpError> {
        match self {
            Ranks::Star { n } => Ok(*n),
            _ => Err(FpError::RankShape),
        }
    }

    pub fn gr(&self) -> Result<(u32, u32, u32), FpError> {
        match self {
            Ranks::Gr { r, n, m } => Ok((*r, *n, *m)),
            _ => Err(FpError::RankShape),
        }
    }

    /// Number of equivariant parameters of the framing torus.
    pub fn param_count(&self) -> usize {
        match self {
            Ranks::D3 { n } => n[3] as usize,
            Ranks::Star { n } => (n[7] + n[8]) as usize,
            Ranks::Gr { n, m, .. } => (n + m) as usize,
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match self {
            Ranks::D3 { n } => (1..=n[3]).map(|i| format!("lambda{}", i)).collect(),
            Ranks::Star { n } => (1..=n[7] + n[8]).map(|i| format!("lambda{}", i)).collect(),
            Ranks::Gr { n, m, .. } => (1..=*n)
                .map(|i| format!("lambda{}", i))
                .chain((1..=*m).map(|i| format!("eta{}", i)))
                .collect(),
        }
    }
}

fn check_d3_admissible(n: [u32; 4]) -> Result<(), FpError> {
    let [n1, n2, n3, n4] = n;
    if !(n1 >= 1 && n2 >= 1 && n3 > n1 && n3 > n2 && n4 > n3 && n4 == n1 + n2) {
        return Err(FpError::BadRanks(format!(
            "need N4 > N3 > N1, N2 >= 1 and N4 = N1 + N2, got {:?}",
            n
        )));
    }
    Ok(())
}

fn check_star_admissible(n: [u32; 9]) -> Result<(), FpError> {
    let [n1, n2, n3, n4, n5, n6, n7, n8, n9] = n;
    let legs = [(n1, n3), (n2, n4), (n3, n5), (n4, n5), (n6, n8), (n7, n9)];
    if legs.iter().any(|&(a, b)| a == 0 || b < a) {
        return Err(FpError::BadRanks(format!(
            "leg ranks must be positive and nondecreasing along arrows, got {:?}",
            n
        )));
    }
    if n6 + n7 <= n5 || n6 + n7 < n3 + n4 {
        return Err(FpError::BadRanks(format!(
            "need N6+N7 > N5 and N6+N7 >= N3+N4, got {:?}",
            n
        )));
    }
    Ok(())
}

fn check_gr_admissible(r: u32, n: u32, _m: u32) -> Result<(), FpError> {
    if !(r >= 1 && r < n) {
        return Err(FpError::BadRanks(format!("need 0 < r < n, got r={}, n={}", r, n)));
    }
    Ok(())
}

pub fn check_admissible(family: Family, ranks: &Ranks) -> Result<(), FpError> {
    match family {
        Family::GrBlock | Family::GrBlockDual => {
            let (r, n, m) = ranks.gr()?;
            check_gr_admissible(r, n, m)
        }
        Family::Star | Family::StarDual => check_star_admissible(ranks.star()?),
        _ => check_d3_admissible(ranks.d3()?),
    }
}

/// A torus-fixed point: per gauge node a strictly increasing label list,
/// together with the parameter index assigned to each Chern-root slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub family: Family,
    /// One sorted label list per gauge node, in the family's node order.
    pub labels: Vec<Vec<u32>>,
    /// Equivariant-parameter index per `(node, slot)`.
    pub chern: Vec<Vec<usize>>,
}

// ---- subset helpers ----

fn subsets_of(set: &[u32], k: usize) -> Vec<Vec<u32>> {
    let n = set.len();
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| set[i]).collect());
        // advance combination
        let mut t = k;
        loop {
            if t == 0 {
                return out;
            }
            t -= 1;
            if idx[t] != t + n - k {
                idx[t] += 1;
                for j in t + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn range_set(n: u32) -> Vec<u32> {
    (1..=n).collect()
}

fn complement(universe: &[u32], sub: &[u32]) -> Vec<u32> {
    universe.iter().filter(|x| !sub.contains(x)).cloned().collect()
}

fn is_subset(a: &[u32], b: &[u32]) -> bool {
    a.iter().all(|x| b.contains(x))
}

fn disjoint(a: &[u32], b: &[u32]) -> bool {
    a.iter().all(|x| !b.contains(x))
}

fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut v: u64 = 1;
    for i in 0..k {
        v = v * (n - i) / (i + 1);
    }
    v
}

// ---- family data ----

/// Gauge ranks per family in canonical node order.
pub fn gauge_ranks(family: Family, ranks: &Ranks) -> Result<Vec<u32>, FpError> {
    Ok(match family {
        Family::X0 => {
            let [n1, n2, n3, _] = ranks.d3()?;
            vec![n1, n2, n3]
        }
        Family::Z1 => {
            let [n1, n2, n3, n4] = ranks.d3()?;
            vec![n1, n2, n4 - n3]
        }
        Family::Z2 => {
            let [_, n2, n3, n4] = ranks.d3()?;
            vec![n2, n2, n4 - n3]
        }
        Family::Z3 => {
            let [n1, n2, n3, n4] = ranks.d3()?;
            vec![n2, n1, n4 - n3]
        }
        Family::X4 => {
            let [n1, n2, n3, _] = ranks.d3()?;
            vec![n2, n1, n3]
        }
        Family::X5 => {
            let [n1, n2, n3, _] = ranks.d3()?;
            vec![n3 - n2, n1, n3]
        }
        Family::X6 => {
            let [n1, n2, n3, _] = ranks.d3()?;
            vec![n3 - n2, n3 - n1, n3]
        }
        Family::X7 => {
            let [n1, n2, n3, _] = ranks.d3()?;
            vec![n3 - n2, n3 - n1, n3]
        }
        Family::X8 => {
            let [n1, n2, n3, _] = ranks.d3()?;
            vec![n2, n3 - n1, n3]
        }
        Family::X9 => {
            let [n1, n2, n3, _] = ranks.d3()?;
            vec![n2, n1, n3]
        }
        Family::Star => {
            let n = ranks.star()?;
            n[0..7].to_vec()
        }
        Family::StarDual => {
            let n = ranks.star()?;
            vec![n[0], n[1], n[2], n[3], n[5] + n[6] - n[4], n[5], n[6]]
        }
        Family::GrBlock => {
            let (r, _, _) = ranks.gr()?;
            vec![r]
        }
        Family::GrBlockDual => {
            let (r, n, _) = ranks.gr()?;
            vec![n - r]
        }
    })
}

/// Re-check a label tuple against the family's set-builder constraints,
/// independently of the enumerator.
pub fn check_constraints(family: Family, ranks: &Ranks, labels: &[Vec<u32>]) -> bool {
    let sizes_ok = match gauge_ranks(family, ranks) {
        Ok(r) => {
            r.len() == labels.len()
                && r.iter().zip(labels).all(|(&k, l)| l.len() == k as usize)
                && labels
                    .iter()
                    .all(|l| l.windows(2).all(|w| w[0] < w[1]) && l.iter().all(|&x| x >= 1))
        }
        Err(_) => false,
    };
    if !sizes_ok {
        return false;
    }
    let in_range = |l: &[u32], n: u32| l.iter().all(|&x| x <= n);
    match family {
        Family::X0 => {
            let [_, _, _, n4] = ranks.d3().unwrap();
            is_subset(&labels[0], &labels[2]) && is_subset(&labels[1], &labels[2]) && in_range(&labels[2], n4)
        }
        Family::Z1 | Family::Z3 => {
            let [_, _, _, n4] = ranks.d3().unwrap();
            in_range(&labels[0], n4)
                && in_range(&labels[1], n4)
                && in_range(&labels[2], n4)
                && disjoint(&labels[0], &labels[2])
                && disjoint(&labels[1], &labels[2])
        }
        Family::Z2 => {
            let [_, _, _, n4] = ranks.d3().unwrap();
            in_range(&labels[0], n4)
                && in_range(&labels[1], n4)
                && is_subset(&labels[2], &labels[0])
                && disjoint(&labels[2], &labels[1])
        }
        Family::X4 | Family::X5 | Family::X6 | Family::X7 | Family::X8 | Family::X9 => {
            let [_, _, _, n4] = ranks.d3().unwrap();
            is_subset(&labels[0], &labels[2]) && is_subset(&labels[1], &labels[2]) && in_range(&labels[2], n4)
        }
        Family::Star => {
            let n = ranks.star().unwrap();
            in_range(&labels[5], n[7])
                && in_range(&labels[6], n[8])
                && in_range(&labels[4], n[5] + n[6])
                && is_subset(&labels[2], &labels[4])
                && is_subset(&labels[3], &labels[4])
                && is_subset(&labels[0], &labels[2])
                && is_subset(&labels[1], &labels[3])
        }
        Family::StarDual => {
            let n = ranks.star().unwrap();
            in_range(&labels[5], n[7])
                && in_range(&labels[6], n[8])
                && in_range(&labels[4], n[5] + n[6])
                && in_range(&labels[2], n[5] + n[6])
                && in_range(&labels[3], n[5] + n[6])
                && disjoint(&labels[2], &labels[4])
                && disjoint(&labels[3], &labels[4])
                && is_subset(&labels[0], &labels[2])
                && is_subset(&labels[1], &labels[3])
        }
        Family::GrBlock | Family::GrBlockDual => {
            let (_, n, _) = ranks.gr().unwrap();
            in_range(&labels[0], n)
        }
    }
}

/// Attach the Chern-root parameter assignment to a label tuple.
pub fn make_fixed_point(family: Family, ranks: &Ranks, labels: Vec<Vec<u32>>) -> Result<FixedPoint, FpError> {
    if !check_constraints(family, ranks, &labels) {
        return Err(FpError::WrongFamily(family.name().to_string()));
    }
    let chern = match family {
        Family::Star | Family::StarDual => {
            let n = ranks.star()?;
            let (n6, n8) = (n[5], n[7]);
            let c6 = &labels[5];
            let c7 = &labels[6];
            // flattened label p carries the parameter of the p-th chosen
            // column of the combined frame
            let flat = |p: u32| -> usize {
                if p <= n6 {
                    (c6[(p - 1) as usize] - 1) as usize
                } else {
                    (n8 + c7[(p - n6 - 1) as usize] - 1) as usize
                }
            };
            let mut chern: Vec<Vec<usize>> = labels[0..5]
                .iter()
                .map(|l| l.iter().map(|&p| flat(p)).collect())
                .collect();
            chern.push(c6.iter().map(|&x| (x - 1) as usize).collect());
            chern.push(c7.iter().map(|&x| (n8 + x - 1) as usize).collect());
            chern
        }
        _ => labels
            .iter()
            .map(|l| l.iter().map(|&x| (x - 1) as usize).collect())
            .collect(),
    };
    Ok(FixedPoint { family, labels, chern })
}

/// Enumerate the complete, duplicate-free fixed-point list of a family.
pub fn enumerate(family: Family, ranks: &Ranks) -> Result<Vec<FixedPoint>, FpError> {
    check_admissible(family, ranks)?;
    let mut out = Vec::new();
    match family {
        Family::X0 | Family::X4 | Family::X5 | Family::X6 | Family::X7 | Family::X8 | Family::X9 => {
            let [_, _, n3, n4] = ranks.d3()?;
            let g = gauge_ranks(family, ranks)?;
            for c3 in subsets_of(&range_set(n4), n3 as usize) {
                for c1 in subsets_of(&c3, g[0] as usize) {
                    for c2 in subsets_of(&c3, g[1] as usize) {
                        out.push(make_fixed_point(family, ranks, vec![c1.clone(), c2, c3.clone()])?);
                    }
                }
            }
        }
        Family::Z1 | Family::Z3 => {
            let [_, _, n3, n4] = ranks.d3()?;
            let g = gauge_ranks(family, ranks)?;
            let n3p = (n4 - n3) as usize;
            for c3 in subsets_of(&range_set(n4), n3p) {
                let rest = complement(&range_set(n4), &c3);
                for c1 in subsets_of(&rest, g[0] as usize) {
                    for c2 in subsets_of(&rest, g[1] as usize) {
                        out.push(make_fixed_point(family, ranks, vec![c1.clone(), c2, c3.clone()])?);
                    }
                }
            }
        }
        Family::Z2 => {
            let [_, n2, n3, n4] = ranks.d3()?;
            let n3p = (n4 - n3) as usize;
            for a in subsets_of(&range_set(n4), n2 as usize) {
                for c in subsets_of(&a, n3p) {
                    let rest = complement(&range_set(n4), &c);
                    for b in subsets_of(&rest, n2 as usize) {
                        out.push(make_fixed_point(family, ranks, vec![a.clone(), b, c.clone()])?);
                    }
                }
            }
        }
        Family::Star => {
            let n = ranks.star()?;
            let flat = range_set(n[5] + n[6]);
            for c6 in subsets_of(&range_set(n[7]), n[5] as usize) {
                for c7 in subsets_of(&range_set(n[8]), n[6] as usize) {
                    for c5 in subsets_of(&flat, n[4] as usize) {
                        for c3 in subsets_of(&c5, n[2] as usize) {
                            for c4 in subsets_of(&c5, n[3] as usize) {
                                for c1 in subsets_of(&c3, n[0] as usize) {
                                    for c2 in subsets_of(&c4, n[1] as usize) {
                                        out.push(make_fixed_point(
                                            family,
                                            ranks,
                                            vec![
                                                c1.clone(),
                                                c2,
                                                c3.clone(),
                                                c4.clone(),
                                                c5.clone(),
                                                c6.clone(),
                                                c7.clone(),
                                            ],
                                        )?);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Family::StarDual => {
            let n = ranks.star()?;
            let n5p = (n[5] + n[6] - n[4]) as usize;
            let flat = range_set(n[5] + n[6]);
            for c6 in subsets_of(&range_set(n[7]), n[5] as usize) {
                for c7 in subsets_of(&range_set(n[8]), n[6] as usize) {
                    for c5 in subsets_of(&flat, n5p) {
                        let rest = complement(&flat, &c5);
                        for c3 in subsets_of(&rest, n[2] as usize) {
                            for c4 in subsets_of(&rest, n[3] as usize) {
                                for c1 in subsets_of(&c3, n[0] as usize) {
                                    for c2 in subsets_of(&c4, n[1] as usize) {
                                        out.push(make_fixed_point(
                                            family,
                                            ranks,
                                            vec![
                                                c1.clone(),
                                                c2,
                                                c3.clone(),
                                                c4.clone(),
                                                c5.clone(),
                                                c6.clone(),
                                                c7.clone(),
                                            ],
                                        )?);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Family::GrBlock => {
            let (r, n, _) = ranks.gr()?;
            for p in subsets_of(&range_set(n), r as usize) {
                out.push(make_fixed_point(family, ranks, vec![p])?);
            }
        }
        Family::GrBlockDual => {
            let (r, n, _) = ranks.gr()?;
            for p in subsets_of(&range_set(n), (n - r) as usize) {
                out.push(make_fixed_point(family, ranks, vec![p])?);
            }
        }
    }
    Ok(out)
}

/// Closed-form fixed-point count.
pub fn closed_form_count(family: Family, ranks: &Ranks) -> Result<u64, FpError> {
    check_admissible(family, ranks)?;
    Ok(match family {
        Family::GrBlock | Family::GrBlockDual => {
            let (r, n, _) = ranks.gr()?;
            let k = if family == Family::GrBlock { r } else { n - r };
            binom(n as u64, k as u64)
        }
        Family::Star | Family::StarDual => {
            let n = ranks.star()?;
            let flat = (n[5] + n[6]) as u64;
            let c5 = if family == Family::Star {
                binom(flat, n[4] as u64)
            } else {
                binom(flat, flat - n[4] as u64)
            };
            binom(n[7] as u64, n[5] as u64)
                * binom(n[8] as u64, n[6] as u64)
                * c5
                * binom(n[4] as u64, n[2] as u64)
                * binom(n[4] as u64, n[3] as u64)
                * binom(n[2] as u64, n[0] as u64)
                * binom(n[3] as u64, n[1] as u64)
        }
        _ => {
            let [n1, n2, n3, n4] = ranks.d3()?;
            let (n1, n2, n3, n4) = (n1 as u64, n2 as u64, n3 as u64, n4 as u64);
            match family {
                Family::X0 | Family::X9 => binom(n4, n3) * binom(n3, n1) * binom(n3, n2),
                Family::Z1 | Family::Z3 => binom(n4, n4 - n3) * binom(n3, n1) * binom(n3, n2),
                Family::Z2 => binom(n4, n2) * binom(n2, n4 - n3) * binom(n3, n2),
                Family::X4 => binom(n4, n3) * binom(n3, n2) * binom(n3, n1),
                Family::X5 => binom(n4, n3) * binom(n3, n3 - n2) * binom(n3, n1),
                Family::X6 | Family::X7 => binom(n4, n3) * binom(n3, n3 - n2) * binom(n3, n3 - n1),
                Family::X8 => binom(n4, n3) * binom(n3, n2) * binom(n3, n3 - n1),
                _ => unreachable!(),
            }
        }
    })
}

/// Run the cardinality consistency report: enumerated counts match the
/// closed forms and dual families agree.
pub fn cardinality_check(family: Family, ranks: &Ranks) -> Result<u64, FpError> {
    let listed = enumerate(family, ranks)?.len() as u64;
    let closed = closed_form_count(family, ranks)?;
    if listed != closed {
        return Err(FpError::BadRanks(format!(
            "|F({})| = {} but closed form gives {}",
            family.name(),
            listed,
            closed
        )));
    }
    Ok(listed)
}

// ---- canonical bijections ----

/// The mutation chain steps of the D3 cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepId {
    X0Z1,
    Z1Z2,
    Z2Z3,
    Z3X4,
    X4X5,
    X5X6,
    X6X7,
    X7X8,
    X8X9,
    X9X0,
}

pub const ALL_STEPS: [StepId; 10] = [
    StepId::X0Z1,
    StepId::Z1Z2,
    StepId::Z2Z3,
    StepId::Z3X4,
    StepId::X4X5,
    StepId::X5X6,
    StepId::X6X7,
    StepId::X7X8,
    StepId::X8X9,
    StepId::X9X0,
];

impl StepId {
    pub fn families(&self) -> (Family, Family) {
        match self {
            StepId::X0Z1 => (Family::X0, Family::Z1),
            StepId::Z1Z2 => (Family::Z1, Family::Z2),
            StepId::Z2Z3 => (Family::Z2, Family::Z3),
            StepId::Z3X4 => (Family::Z3, Family::X4),
            StepId::X4X5 => (Family::X4, Family::X5),
            StepId::X5X6 => (Family::X5, Family::X6),
            StepId::X6X7 => (Family::X6, Family::X7),
            StepId::X7X8 => (Family::X7, Family::X8),
            StepId::X8X9 => (Family::X8, Family::X9),
            StepId::X9X0 => (Family::X9, Family::X0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StepId::X0Z1 => "x0-z1",
            StepId::Z1Z2 => "z1-z2",
            StepId::Z2Z3 => "z2-z3",
            StepId::Z3X4 => "z3-x4",
            StepId::X4X5 => "x4-x5",
            StepId::X5X6 => "x5-x6",
            StepId::X6X7 => "x6-x7",
            StepId::X7X8 => "x7-x8",
            StepId::X8X9 => "x8-x9",
            StepId::X9X0 => "x9-x0",
        }
    }

    pub fn parse(s: &str) -> Option<StepId> {
        ALL_STEPS.iter().copied().find(|t| t.name() == s.to_ascii_lowercase())
    }
}

/// Pairs of families joined by a canonical bijection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IotaPair {
    Step(StepId),
    Star,
    Gr,
}

/// The canonical bijection onto the dual family.
pub fn iota(pair: IotaPair, fp: &FixedPoint, ranks: &Ranks) -> Result<FixedPoint, FpError> {
    let expect = |fam: Family| -> Result<(), FpError> {
        if fp.family == fam {
            Ok(())
        } else {
            Err(FpError::WrongFamily(fam.name().to_string()))
        }
    };
    match pair {
        IotaPair::Gr => {
            expect(Family::GrBlock)?;
            let (_, n, _) = ranks.gr()?;
            let p = complement(&range_set(n), &fp.labels[0]);
            make_fixed_point(Family::GrBlockDual, ranks, vec![p])
        }
        IotaPair::Star => {
            expect(Family::Star)?;
            let n = ranks.star()?;
            let flat = range_set(n[5] + n[6]);
            let mut labels = fp.labels.clone();
            labels[4] = complement(&flat, &fp.labels[4]);
            make_fixed_point(Family::StarDual, ranks, labels)
        }
        IotaPair::Step(step) => {
            let (src, dst) = step.families();
            expect(src)?;
            let [_, _, _, n4] = ranks.d3()?;
            let u = range_set(n4);
            let l = &fp.labels;
            let labels = match step {
                StepId::X0Z1 => vec![l[0].clone(), l[1].clone(), complement(&u, &l[2])],
                StepId::Z1Z2 => vec![complement(&u, &l[0]), l[1].clone(), l[2].clone()],
                StepId::Z2Z3 => vec![l[1].clone(), complement(&u, &l[0]), l[2].clone()],
                StepId::Z3X4 => vec![l[0].clone(), l[1].clone(), complement(&u, &l[2])],
                StepId::X4X5 | StepId::X7X8 => {
                    vec![complement(&l[2], &l[0]), l[1].clone(), l[2].clone()]
                }
                StepId::X5X6 | StepId::X8X9 => {
                    vec![l[0].clone(), complement(&l[2], &l[1]), l[2].clone()]
                }
                StepId::X6X7 => l.clone(),
                StepId::X9X0 => vec![l[1].clone(), l[0].clone(), l[2].clone()],
            };
            make_fixed_point(dst, ranks, labels)
        }
    }
}

/// Inverse of [`iota`], defined by the same complement maps.
pub fn iota_inv(pair: IotaPair, fp: &FixedPoint, ranks: &Ranks) -> Result<FixedPoint, FpError> {
    match pair {
        IotaPair::Gr => {
            if fp.family != Family::GrBlockDual {
                return Err(FpError::WrongFamily("grblock-dual".into()));
            }
            let (_, n, _) = ranks.gr()?;
            make_fixed_point(Family::GrBlock, ranks, vec![complement(&range_set(n), &fp.labels[0])])
        }
        IotaPair::Star => {
            if fp.family != Family::StarDual {
                return Err(FpError::WrongFamily("star-dual".into()));
            }
            let n = ranks.star()?;
            let flat = range_set(n[5] + n[6]);
            let mut labels = fp.labels.clone();
            labels[4] = complement(&flat, &fp.labels[4]);
            make_fixed_point(Family::Star, ranks, labels)
        }
        IotaPair::Step(step) => {
            let (src, dst) = step.families();
            if fp.family != dst {
                return Err(FpError::WrongFamily(dst.name().to_string()));
            }
            let [_, _, _, n4] = ranks.d3()?;
            let u = range_set(n4);
            let l = &fp.labels;
            let labels = match step {
                StepId::X0Z1 => vec![l[0].clone(), l[1].clone(), complement(&u, &l[2])],
                StepId::Z1Z2 => vec![complement(&u, &l[0]), l[1].clone(), l[2].clone()],
                StepId::Z2Z3 => vec![complement(&u, &l[1]), l[0].clone(), l[2].clone()],
                StepId::Z3X4 => vec![l[0].clone(), l[1].clone(), complement(&u, &l[2])],
                StepId::X4X5 | StepId::X7X8 => {
                    vec![complement(&l[2], &l[0]), l[1].clone(), l[2].clone()]
                }
                StepId::X5X6 | StepId::X8X9 => {
                    vec![l[0].clone(), complement(&l[2], &l[1]), l[2].clone()]
                }
                StepId::X6X7 => l.clone(),
                StepId::X9X0 => vec![l[1].clone(), l[0].clone(), l[2].clone()],
            };
            make_fixed_point(src, ranks, labels)
        }
    }
}

// ---- generic equivariant points ----

/// An exact rational value per equivariant parameter, reproducible from the
/// recorded seed.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivariantPoint {
    pub names: Vec<String>,
    pub values: Vec<Rat>,
    pub seed: u64,
    pub window: i64,
}

impl EquivariantPoint {
    /// Flip the sign of every parameter (used for the transpose
    /// isomorphism steps). The genericity window is symmetric.
    pub fn negated(&self) -> EquivariantPoint {
        EquivariantPoint {
            names: self.names.clone(),
            values: self.values.iter().map(|v| -v).collect(),
            seed: self.seed,
            window: self.window,
        }
    }

    /// No two values may differ by an integer of magnitude at most
    /// `2 * truncation bound`; the generator actually guarantees that no
    /// difference is an integer at all.
    pub fn window_ok(&self) -> bool {
        for i in 0..self.values.len() {
            for j in 0..i {
                let d = &self.values[i] - &self.values[j];
                if d.denom() == &num_bigint::BigInt::from(1)
                    && d.numer().abs() <= num_bigint::BigInt::from(2 * self.window)
                {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "seed": self.seed,
            "window": self.window,
            "params": self
                .names
                .iter()
                .zip(&self.values)
                .map(|(n, v)| serde_json::json!({"name": n, "value": crate::rat::rat_to_string(v)}))
                .collect::<Vec<_>>(),
        })
    }
}

const GENERIC_DENOM: i64 = 257;

/// Draw a deterministic generic parameter point: values `a/257` with
/// numerators distinct modulo 257, so no difference of two values is ever an
/// integer and the window invariant holds for any truncation bound.
pub fn generic_point(names: Vec<String>, seed: u64, trunc: i64) -> EquivariantPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = names.len();
    loop {
        let mut nums: Vec<i64> = Vec::with_capacity(k);
        let mut ok = true;
        for _ in 0..k {
            let mut tries = 0;
            loop {
                let a = rng.random_range(-4 * GENERIC_DENOM..=4 * GENERIC_DENOM);
                let clash = a == 0
                    || nums
                        .iter()
                        .any(|&b| (a - b).rem_euclid(GENERIC_DENOM) == 0);
                if !clash {
                    nums.push(a);
                    break;
                }
                tries += 1;
                if tries > 1000 {
                    ok = false;
                    break;
                }
            }
            if !ok {
                break;
            }
        }
        if !ok {
            continue;
        }
        let point = EquivariantPoint {
            names: names.clone(),
            values: nums.iter().map(|&a| rat(a) / rat(GENERIC_DENOM)).collect(),
            seed,
            window: trunc.max(1),
        };
        if point.window_ok() {
            return point;
        }
    }
}

// ---- catalogued quivers ----

/// The full quiver diagram of a catalogued family, potential included.
pub fn family_quiver(family: Family, ranks: &Ranks) -> Result<Quiver, FpError> {
    check_admissible(family, ranks)?;
    let mk = |nodes: Vec<(u32, u32, bool)>, arrows: Vec<(u32, u32)>, potential: Vec<Vec<(u32, u32)>>| {
        let mut q = Quiver {
            nodes: nodes
                .into_iter()
                .map(|(id, rank, framed)| Node { id, rank, framed })
                .collect(),
            arrows: arrows
                .into_iter()
                .map(|(src, dst)| Arrow { src, dst, mult: 1 })
                .collect(),
            potential: potential.into_iter().map(|p| CycleWord::new(1, p)).collect(),
            meta: Default::default(),
        }
        .canonicalized();
        q.meta.family = Some(family.name().to_string());
        q
    };
    Ok(match family {
        Family::X0 | Family::X9 | Family::X4 | Family::X5 | Family::X6 | Family::X7 | Family::X8
        | Family::Z1 | Family::Z2 | Family::Z3 => {
            let [_, _, _, n4] = ranks.d3()?;
            let g = gauge_ranks(family, ranks)?;
            let nodes = vec![
                (1, g[0], false),
                (2, g[1], false),
                (3, g[2], false),
                (4, n4, true),
            ];
            let (arrows, potential): (Vec<(u32, u32)>, Vec<Vec<(u32, u32)>>) = match family {
                Family::X0 | Family::X9 => (vec![(1, 3), (2, 3), (3, 4)], vec![]),
                Family::Z1 => (
                    vec![(1, 4), (2, 4), (4, 3), (3, 1), (3, 2)],
                    vec![
                        vec![(1, 4), (4, 3), (3, 1)],
                        vec![(2, 4), (4, 3), (3, 2)],
                    ],
                ),
                Family::Z2 => (
                    vec![(4, 1), (1, 3), (3, 2), (2, 4)],
                    vec![vec![(1, 3), (3, 2), (2, 4), (4, 1)]],
                ),
                Family::Z3 => (
                    vec![(4, 1), (4, 2), (1, 3), (2, 3), (3, 4)],
                    vec![
                        vec![(1, 3), (3, 4), (4, 1)],
                        vec![(2, 3), (3, 4), (4, 2)],
                    ],
                ),
                Family::X4 => (vec![(3, 1), (3, 2), (4, 3)], vec![]),
                Family::X5 => (vec![(1, 3), (3, 2), (4, 3)], vec![]),
                Family::X6 => (vec![(1, 3), (2, 3), (4, 3)], vec![]),
                Family::X7 => (vec![(3, 1), (3, 2), (3, 4)], vec![]),
                Family::X8 => (vec![(1, 3), (3, 2), (3, 4)], vec![]),
                _ => unreachable!(),
            };
            mk(nodes, arrows, potential)
        }
        Family::Star | Family::StarDual => {
            let n = ranks.star()?;
            let g = gauge_ranks(family, ranks)?;
            let mut nodes: Vec<(u32, u32, bool)> =
                (0..7).map(|i| (i as u32 + 1, g[i], false)).collect();
            nodes.push((8, n[7], true));
            nodes.push((9, n[8], true));
            match family {
                Family::Star => mk(
                    nodes,
                    vec![(1, 3), (2, 4), (3, 5), (4, 5), (5, 6), (5, 7), (6, 8), (7, 9)],
                    vec![],
                ),
                Family::StarDual => mk(
                    nodes,
                    vec![
                        (1, 3),
                        (2, 4),
                        (3, 6),
                        (3, 7),
                        (4, 6),
                        (4, 7),
                        (6, 5),
                        (7, 5),
                        (5, 3),
                        (5, 4),
                        (6, 8),
                        (7, 9),
                    ],
                    vec![
                        vec![(3, 6), (6, 5), (5, 3)],
                        vec![(3, 7), (7, 5), (5, 3)],
                        vec![(4, 6), (6, 5), (5, 4)],
                        vec![(4, 7), (7, 5), (5, 4)],
                    ],
                ),
                _ => unreachable!(),
            }
        }
        Family::GrBlock => {
            let (r, n, m) = ranks.gr()?;
            let mut arrows = vec![(1, 2)];
            if m > 0 {
                arrows.push((3, 1));
            }
            mk(vec![(1, r, false), (2, n, true), (3, m, true)], arrows, vec![])
        }
        Family::GrBlockDual => {
            let (r, n, m) = ranks.gr()?;
            mk(
                vec![(1, n - r, false), (2, n, true), (3, m, true)],
                vec![(2, 1)],
                vec![],
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d3_desk() -> Ranks {
        Ranks::D3 { n: [2, 2, 3, 4] }
    }

    #[test]
    fn f0_count_matches_formula() {
        let fps = enumerate(Family::X0, &d3_desk()).unwrap();
        assert_eq!(fps.len(), 36);
        assert_eq!(closed_form_count(Family::X0, &d3_desk()).unwrap(), 36);
    }

    #[test]
    fn inadmissible_ranks_rejected() {
        let bad = Ranks::D3 { n: [1, 1, 1, 2] };
        assert!(matches!(enumerate(Family::X0, &bad), Err(FpError::BadRanks(_))));
    }

    #[test]
    fn grblock_tiny() {
        let r = Ranks::Gr { r: 1, n: 2, m: 0 };
        let fps = enumerate(Family::GrBlock, &r).unwrap();
        let labels: Vec<Vec<u32>> = fps.iter().map(|f| f.labels[0].clone()).collect();
        assert_eq!(labels, vec![vec![1], vec![2]]);
    }

    #[test]
    fn iota_gr_complement() {
        let r = Ranks::Gr { r: 1, n: 3, m: 0 };
        let fps = enumerate(Family::GrBlock, &r).unwrap();
        let p = fps.iter().find(|f| f.labels[0] == vec![1]).unwrap();
        let q = iota(IotaPair::Gr, p, &r).unwrap();
        assert_eq!(q.labels[0], vec![2, 3]);
        assert_eq!(iota_inv(IotaPair::Gr, &q, &r).unwrap(), *p);
    }

    #[test]
    fn iota_x0_z1_example() {
        let r = d3_desk();
        let p = make_fixed_point(Family::X0, &r, vec![vec![1, 2], vec![1, 2], vec![1, 2, 3]]).unwrap();
        let q = iota(IotaPair::Step(StepId::X0Z1), &p, &r).unwrap();
        assert_eq!(q.labels, vec![vec![1, 2], vec![1, 2], vec![4]]);
    }

    #[test]
    fn iota_bijective_on_chain() {
        let r = d3_desk();
        for step in ALL_STEPS {
            let (src, dst) = step.families();
            let from = enumerate(src, &r).unwrap();
            let to = enumerate(dst, &r).unwrap();
            let mut images: Vec<FixedPoint> = from
                .iter()
                .map(|p| iota(IotaPair::Step(step), p, &r).unwrap())
                .collect();
            for (p, img) in from.iter().zip(&images) {
                assert_eq!(iota_inv(IotaPair::Step(step), img, &r).unwrap(), *p);
            }
            let key = |f: &FixedPoint| f.labels.clone();
            images.sort_by_key(key);
            let mut expect = to.clone();
            expect.sort_by_key(key);
            assert_eq!(images, expect, "step {}", step.name());
        }
    }

    #[test]
    fn generic_point_deterministic_and_generic() {
        let names: Vec<String> = (0..4).map(|i| format!("p{}", i)).collect();
        let a = generic_point(names.clone(), 11, 3);
        let b = generic_point(names.clone(), 11, 3);
        assert_eq!(a, b);
        assert!(a.window_ok());
        let vals: std::collections::BTreeSet<String> =
            a.values.iter().map(crate::rat::rat_to_string).collect();
        assert_eq!(vals.len(), 4);
    }

    #[test]
    fn generic_points_differ_across_seeds() {
        let names: Vec<String> = (0..4).map(|i| format!("p{}", i)).collect();
        let pts: Vec<EquivariantPoint> =
            (0..100).map(|s| generic_point(names.clone(), s, 3)).collect();
        for i in 0..pts.len() {
            for j in 0..i {
                assert_ne!(pts[i].values, pts[j].values, "seeds {} and {}", i, j);
            }
        }
    }

    #[test]
    fn star_dual_is_mutation_of_star() {
        let r = Ranks::Star { n: [1, 1, 2, 2, 3, 2, 2, 3, 3] };
        let star = family_quiver(Family::Star, &r).unwrap();
        let dual = family_quiver(Family::StarDual, &r).unwrap();
        let mutated = star.mutate(5).unwrap().quiver;
        assert_eq!(mutated.arrow_matrix(), dual.arrow_matrix());
        assert_eq!(mutated.rank_vector(), dual.rank_vector());
        assert_eq!(mutated.potential, dual.potential);
    }
}
