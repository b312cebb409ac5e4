//! Truncated restricted I-functions.
//!
//! At `u = 1`, the restricted I-function of a quiver variety is a sum over
//! integer degree vectors (one per gauge-node Chern-root slot) of a product
//! of shifted-factorial ratios:
//!
//! * a node factor `sfr(x_I - x_J, n_I - n_J)` per ordered pair of distinct
//!   slots of each gauge node,
//! * an arrow factor `1/sfr(x_I - x_J, n_I - n_J)` per slot pair of each
//!   arrow,
//! * a Lefschetz factor `sfr(eps, beta(eps))` per weight of the cutting
//!   bundle when the variety is a complete intersection,
//!
//! graded by `prod_i q_i^{|n^i|}`. Chern-root slots restrict to equivariant
//! parameters through the fixed point's assignment; a term vanishes exactly
//! when some arrow factor hits a matched slot pair (equal parameters) with
//! negative relative degree, which is what drives the degree enumeration.

use crate::fixpoints::{self, Family, FixedPoint, FpError, Ranks};
use crate::quiver::Quiver;
use crate::rat::{rat, Rat};
use crate::series::{sfr, DegreeBox, LaurentSeries, SeriesError};
use num_traits::{One, Zero};

/// One side of a factor block: a gauge node's slots or explicit frame slots
/// carrying fixed parameter indices (degree 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum End {
    Gauge(usize),
    Frame(Vec<usize>),
}

/// A grid of slot pairs: arrow factors (reciprocal position) and Lefschetz
/// weights (direct position) are both products over `src x dst`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairBlock {
    pub src: End,
    pub dst: End,
}

/// Slot reference inside an effectivity matrix; frame slots carry degree 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MSlot {
    Gauge(usize, usize),
    Frame,
}

/// One matrix that the semistable description requires non-degenerate. Rows
/// and columns may span several arrows (the star families combine the two
/// center arrows into one matrix).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReqMatrix {
    pub rows: Vec<MSlot>,
    pub cols: Vec<MSlot>,
}

/// The combinatorial conditions a degree vector must satisfy per required
/// matrix for the corresponding bundle to admit a generically non-degenerate
/// section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectivityFilter {
    pub matrices: Vec<ReqMatrix>,
}

/// Degree data: one integer vector per gauge node.
pub type DegreeVector = Vec<Vec<i64>>;

/// Restriction model of one variety: everything the series engine needs.
#[derive(Debug, Clone)]
pub struct IModel {
    pub family: Option<Family>,
    pub vars: Vec<String>,
    pub ranks: Vec<usize>,
    pub arrows: Vec<PairBlock>,
    pub weights: Vec<PairBlock>,
    pub filter: EffectivityFilter,
}

/// Degree-enumeration mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prune {
    /// Rectangle enumeration over clamped slot ranges; vanishing terms are
    /// computed and contribute zero.
    None,
    /// Rectangle enumeration filtered by [`EffectivityFilter`].
    Filter,
    /// Slot-level matched-pair constraints (the exact support at the fixed
    /// point); the production mode.
    Matched,
}

impl IModel {
    /// Build the model of a plain quiver variety: arrow factors from the
    /// quiver's arrows, no Lefschetz weights, one required matrix per arrow.
    /// Gauge nodes are ordered by id and framed nodes get consecutive
    /// parameter indices in id order.
    pub fn from_quiver(q: &Quiver) -> IModel {
        let mut gauge: Vec<&crate::quiver::Node> = q.nodes.iter().filter(|n| !n.framed).collect();
        gauge.sort_by_key(|n| n.id);
        let mut frames: Vec<&crate::quiver::Node> = q.nodes.iter().filter(|n| n.framed).collect();
        frames.sort_by_key(|n| n.id);
        let gauge_pos = |id| gauge.iter().position(|n| n.id == id);
        let mut frame_params = std::collections::BTreeMap::new();
        let mut off = 0usize;
        for f in &frames {
            frame_params.insert(f.id, (off..off + f.rank as usize).collect::<Vec<_>>());
            off += f.rank as usize;
        }
        let end_of = |id: u32| -> End {
            match gauge_pos(id) {
                Some(i) => End::Gauge(i),
                None => End::Frame(frame_params[&id].clone()),
            }
        };
        let mut arrows = Vec::new();
        let mut matrices = Vec::new();
        for a in &q.arrows {
            for _ in 0..a.mult {
                arrows.push(PairBlock { src: end_of(a.src), dst: end_of(a.dst) });
            }
            let slots = |id: u32| -> Vec<MSlot> {
                match gauge_pos(id) {
                    Some(i) => (0..gauge[i].rank as usize).map(|s| MSlot::Gauge(i, s)).collect(),
                    None => (0..q.node(id).unwrap().rank as usize).map(|_| MSlot::Frame).collect(),
                }
            };
            matrices.push(ReqMatrix { rows: slots(a.src), cols: slots(a.dst) });
        }
        IModel {
            family: None,
            vars: gauge.iter().map(|n| format!("q{}", n.id)).collect(),
            ranks: gauge.iter().map(|n| n.rank as usize).collect(),
            arrows,
            weights: Vec::new(),
            filter: EffectivityFilter { matrices },
        }
    }
}

fn gauge_slots(model: &IModel, i: usize) -> Vec<MSlot> {
    (0..model.ranks[i]).map(|s| MSlot::Gauge(i, s)).collect()
}

fn join_slots(model: &IModel, nodes: &[usize]) -> Vec<MSlot> {
    nodes.iter().flat_map(|&i| gauge_slots(model, i)).collect()
}

/// The restriction model of a catalogued family: ambient quiver factors,
/// cutting-bundle weights, and the semistable description's required
/// matrices.
pub fn family_model(family: Family, ranks: &Ranks) -> Result<IModel, FpError> {
    fixpoints::check_admissible(family, ranks)?;
    let ambient = ambient_quiver(family, ranks)?;
    let mut model = IModel::from_quiver(&ambient);
    model.family = Some(family);
    let g = |i: usize| End::Gauge(i);
    model.weights = match family {
        Family::Z1 => vec![
            PairBlock { src: g(0), dst: g(2) },
            PairBlock { src: g(1), dst: g(2) },
        ],
        Family::Z2 => vec![PairBlock { src: g(1), dst: g(2) }],
        Family::Z3 => vec![
            PairBlock { src: g(2), dst: g(0) },
            PairBlock { src: g(2), dst: g(1) },
        ],
        Family::StarDual => vec![
            PairBlock { src: g(2), dst: g(4) },
            PairBlock { src: g(3), dst: g(4) },
        ],
        Family::GrBlockDual => {
            let (_, n, m) = ranks.gr()?;
            let eta: Vec<usize> = (n as usize..(n + m) as usize).collect();
            if m > 0 {
                vec![PairBlock { src: End::Frame(eta), dst: g(0) }]
            } else {
                Vec::new()
            }
        }
        _ => Vec::new(),
    };
    // the star families require the combined center matrices, not the
    // individual arrows
    if matches!(family, Family::Star | Family::StarDual) {
        let keep = |m: &ReqMatrix| -> bool {
            let touches_center = |s: &MSlot| matches!(s, MSlot::Gauge(4, _));
            !(m.rows.iter().any(touches_center) || m.cols.iter().any(touches_center))
        };
        let mut matrices: Vec<ReqMatrix> = model.filter.matrices.iter().filter(|m| keep(m)).cloned().collect();
        match family {
            Family::Star => {
                matrices.push(ReqMatrix {
                    rows: gauge_slots(&model, 4),
                    cols: join_slots(&model, &[5, 6]),
                });
            }
            Family::StarDual => {
                // [3->6, 3->7], [4->6, 4->7] stay per-row-node; drop the
                // individual pieces and re-add them combined
                matrices.retain(|m| {
                    !(m.rows.iter().any(|s| matches!(s, MSlot::Gauge(2, _) | MSlot::Gauge(3, _)))
                        && m.cols.iter().any(|s| matches!(s, MSlot::Gauge(5, _) | MSlot::Gauge(6, _))))
                });
                matrices.push(ReqMatrix { rows: gauge_slots(&model, 2), cols: join_slots(&model, &[5, 6]) });
                matrices.push(ReqMatrix { rows: gauge_slots(&model, 3), cols: join_slots(&model, &[5, 6]) });
                matrices.push(ReqMatrix { rows: join_slots(&model, &[5, 6]), cols: gauge_slots(&model, 4) });
            }
            _ => unreachable!(),
        }
        model.filter = EffectivityFilter { matrices };
    }
    Ok(model)
}

/// Ambient quiver of a family: for the complete-intersection families the
/// arrows cut out by the potential's critical locus are removed and become
/// Lefschetz weights instead.
fn ambient_quiver(family: Family, ranks: &Ranks) -> Result<Quiver, FpError> {
    let full = fixpoints::family_quiver(family, ranks)?;
    let drop: &[(u32, u32)] = match family {
        Family::Z1 => &[(3, 1), (3, 2)],
        Family::Z2 => &[(3, 2)],
        Family::Z3 => &[(1, 3), (2, 3)],
        Family::StarDual => &[(5, 3), (5, 4)],
        _ => &[],
    };
    let mut q = full;
    q.arrows.retain(|a| !drop.contains(&(a.src, a.dst)));
    q.potential.clear();
    Ok(q)
}

// ---- effectivity ----

fn matrix_degrees(m: &ReqMatrix, d: &DegreeVector) -> (Vec<i64>, Vec<i64>) {
    let val = |s: &MSlot| match s {
        MSlot::Gauge(i, a) => d[*i][*a],
        MSlot::Frame => 0,
    };
    (m.rows.iter().map(val).collect(), m.cols.iter().map(val).collect())
}

/// Generic rank of a matrix section supported on `{(I,J): rows[I] >= cols[J]}`
/// equals the maximum bipartite matching on that support; the bundle admits a
/// generically non-degenerate section iff the matching is full on the smaller
/// side (which also forces a `>= 0` entry in every row or every column).
fn support_full_rank(rows: &[i64], cols: &[i64]) -> bool {
    let (nr, nc) = (rows.len(), cols.len());
    let need = nr.min(nc);
    let mut match_of_col = vec![usize::MAX; nc];
    let mut matched = 0;
    for r in 0..nr {
        let mut seen = vec![false; nc];
        if augment(r, rows, cols, &mut match_of_col, &mut seen) {
            matched += 1;
        }
    }
    matched >= need
}

fn augment(r: usize, rows: &[i64], cols: &[i64], match_of_col: &mut [usize], seen: &mut [bool]) -> bool {
    for c in 0..cols.len() {
        if rows[r] >= cols[c] && !seen[c] {
            seen[c] = true;
            if match_of_col[c] == usize::MAX
                || augment(match_of_col[c], rows, cols, match_of_col, seen)
            {
                match_of_col[c] = r;
                return true;
            }
        }
    }
    false
}

/// True iff the degree vector passes every required matrix.
pub fn effectivity_prune(d: &DegreeVector, f: &EffectivityFilter) -> bool {
    f.matrices.iter().all(|m| {
        let (rows, cols) = matrix_degrees(m, d);
        support_full_rank(&rows, &cols)
    })
}

// ---- restricted series ----

fn param_values<'a>(point: &'a fixpoints::EquivariantPoint) -> &'a [Rat] {
    &point.values
}

fn end_data(end: &End, fp: &FixedPoint) -> Vec<(usize, Option<(usize, usize)>)> {
    // (parameter index, gauge slot) per slot; frame slots carry no degree
    match end {
        End::Gauge(i) => fp.chern[*i]
            .iter()
            .enumerate()
            .map(|(a, &p)| (p, Some((*i, a))))
            .collect(),
        End::Frame(params) => params.iter().map(|&p| (p, None)).collect(),
    }
}

/// The per-weight Lefschetz correction at one degree: the product of
/// `sfr(eps restricted, beta(eps))` over all weights.
pub fn lefschetz_factor(
    weights: &[PairBlock],
    d: &DegreeVector,
    fp: &FixedPoint,
    point: &fixpoints::EquivariantPoint,
) -> Result<Rat, SeriesError> {
    let vals = param_values(point);
    let mut out = Rat::one();
    for w in weights {
        for (ps, ss) in end_data(&w.src, fp) {
            for (pd, sd) in end_data(&w.dst, fp) {
                let x = &vals[ps] - &vals[pd];
                let ns = ss.map_or(0, |(i, a)| d[i][a]);
                let nd = sd.map_or(0, |(i, a)| d[i][a]);
                out *= sfr(&x, ns - nd)?;
                if out.is_zero() {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

fn term_value(
    model: &IModel,
    fp: &FixedPoint,
    point: &fixpoints::EquivariantPoint,
    d: &DegreeVector,
) -> Result<Rat, SeriesError> {
    let vals = param_values(point);
    let mut out = Rat::one();
    // node factors
    for i in 0..model.ranks.len() {
        let slots = &fp.chern[i];
        for a in 0..slots.len() {
            for b in 0..slots.len() {
                if a == b {
                    continue;
                }
                let x = &vals[slots[a]] - &vals[slots[b]];
                out *= sfr(&x, d[i][a] - d[i][b])?;
                if out.is_zero() {
                    return Ok(out);
                }
            }
        }
    }
    // arrow factors in reciprocal position
    for arrow in &model.arrows {
        for (ps, ss) in end_data(&arrow.src, fp) {
            for (pd, sd) in end_data(&arrow.dst, fp) {
                let x = &vals[ps] - &vals[pd];
                let ns = ss.map_or(0, |(i, a)| d[i][a]);
                let nd = sd.map_or(0, |(i, a)| d[i][a]);
                let a = ns - nd;
                if a >= 0 {
                    let mut p = Rat::one();
                    for l in 1..=a {
                        p *= &x + rat(l);
                    }
                    if p.is_zero() {
                        return Err(SeriesError::Pole(format!("arrow factor at x={}, a={}", x, a)));
                    }
                    out *= p.recip();
                } else {
                    let mut p = Rat::one();
                    for l in (a + 1)..=0 {
                        p *= &x + rat(l);
                    }
                    out *= p;
                    if out.is_zero() {
                        return Ok(out);
                    }
                }
            }
        }
    }
    if !model.weights.is_empty() {
        out *= lefschetz_factor(&model.weights, d, fp, point)?;
    }
    Ok(out)
}

/// Linear windows on the vector of per-node totals `f_i = |n^i|`, used by
/// the checker to restrict enumeration to the preimage polytope of the
/// comparison box under a Kähler substitution. A term whose totals violate a
/// row can never land inside the provisioned target window.
#[derive(Debug, Clone, Default)]
pub struct TotalsConstraint {
    /// `(coefficients over vars, lo, hi)`: require `lo <= c . f <= hi`.
    pub rows: Vec<(Vec<i64>, i64, i64)>,
}

/// Matched-pair constraint: degree of `src` slot must be `>=` degree of
/// `dst` slot whenever the two slots restrict to the same parameter.
#[derive(Debug, Clone, Copy)]
struct MatchEdge {
    src: Option<(usize, usize)>,
    dst: Option<(usize, usize)>,
}

fn matched_edges(model: &IModel, fp: &FixedPoint) -> Vec<MatchEdge> {
    let mut edges = Vec::new();
    for arrow in &model.arrows {
        for (ps, ss) in end_data(&arrow.src, fp) {
            for (pd, sd) in end_data(&arrow.dst, fp) {
                if ps == pd {
                    edges.push(MatchEdge { src: ss, dst: sd });
                }
            }
        }
    }
    edges
}

/// Enumeration order: repeatedly pick a gauge node all of whose matched
/// constraints against unpicked nodes can wait (every slot already has a
/// one-sided bound from frames or picked nodes).
fn enumeration_order(model: &IModel, edges: &[MatchEdge]) -> Result<Vec<usize>, SeriesError> {
    let n = model.ranks.len();
    let mut order = Vec::new();
    let mut placed = vec![false; n];
    while order.len() < n {
        let mut progressed = false;
        'cand: for i in 0..n {
            if placed[i] {
                continue;
            }
            // every slot of i needs some bound against frames or placed nodes
            for a in 0..model.ranks[i] {
                let bound = edges.iter().any(|e| {
                    (e.src == Some((i, a)) && e.dst.map_or(true, |(j, _)| placed[j]))
                        || (e.dst == Some((i, a)) && e.src.map_or(true, |(j, _)| placed[j]))
                });
                if !bound {
                    continue 'cand;
                }
            }
            placed[i] = true;
            order.push(i);
            progressed = true;
        }
        if !progressed {
            return Err(SeriesError::InsufficientBox(
                "no admissible enumeration order: some slot is unconstrained".into(),
            ));
        }
    }
    Ok(order)
}

fn node_vectors(
    slot_lo: &[Option<i64>],
    slot_hi: &[Option<i64>],
    tlo: i64,
    thi: i64,
) -> Result<Vec<Vec<i64>>, SeriesError> {
    const BIG: i64 = i64::MAX / 4;
    let k = slot_lo.len();
    if k == 0 {
        return Ok(if tlo <= 0 && 0 <= thi { vec![vec![]] } else { vec![] });
    }
    let mut lo: Vec<i64> = slot_lo.iter().map(|b| b.unwrap_or(-BIG)).collect();
    let mut hi: Vec<i64> = slot_hi.iter().map(|b| b.unwrap_or(BIG)).collect();
    // tighten through the total interval until stable
    for _ in 0..k + 1 {
        let mut changed = false;
        for a in 0..k {
            let others_hi: i64 = (0..k).filter(|&b| b != a).map(|b| hi[b].min(BIG)).sum();
            let others_lo: i64 = (0..k).filter(|&b| b != a).map(|b| lo[b].max(-BIG)).sum();
            if others_hi < BIG / 2 {
                let cand = tlo - others_hi;
                if cand > lo[a] {
                    lo[a] = cand;
                    changed = true;
                }
            }
            let cand = thi - others_lo;
            if others_lo > -BIG / 2 && cand < hi[a] {
                hi[a] = cand;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if lo.iter().any(|&l| l <= -BIG / 2) || hi.iter().any(|&h| h >= BIG / 2) {
        return Err(SeriesError::InsufficientBox(
            "unbounded slot range in degree enumeration".into(),
        ));
    }
    let mut out = Vec::new();
    let mut cur = vec![0i64; k];
    fn rec(
        a: usize,
        k: usize,
        lo: &[i64],
        hi: &[i64],
        sum: i64,
        tlo: i64,
        thi: i64,
        cur: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
    ) {
        if a == k {
            if tlo <= sum && sum <= thi {
                out.push(cur.clone());
            }
            return;
        }
        let rest_lo: i64 = (a + 1..k).map(|b| lo[b]).sum();
        let rest_hi: i64 = (a + 1..k).map(|b| hi[b]).sum();
        let vlo = lo[a].max(tlo - sum - rest_hi);
        let vhi = hi[a].min(thi - sum - rest_lo);
        for v in vlo..=vhi {
            cur[a] = v;
            rec(a + 1, k, lo, hi, sum + v, tlo, thi, cur, out);
        }
        cur[a] = 0;
    }
    rec(0, k, &lo, &hi, 0, tlo, thi, &mut cur, &mut out);
    Ok(out)
}

// ---- incremental evaluation ----

/// Parameters scaled to a common denominator: every linear factor
/// `x + l` becomes `(diff + scale*l) / scale` with an integer numerator, so
/// term values accumulate as integer products with one power of the scale
/// tracked separately and a single reduction at the leaf.
struct ScaledPoint {
    scale: BigInt,
    nums: Vec<BigInt>,
}

use num_bigint::BigInt;
use num_integer::Integer;

fn scale_point(point: &fixpoints::EquivariantPoint) -> ScaledPoint {
    let mut scale = BigInt::from(1);
    for v in &point.values {
        scale = scale.lcm(v.denom());
    }
    let nums = point
        .values
        .iter()
        .map(|v| {
            let s = v * Rat::from_integer(scale.clone());
            debug_assert!(s.denom() == &BigInt::from(1));
            s.to_integer()
        })
        .collect();
    ScaledPoint { scale, nums }
}

/// Running product `num/den * scale^pl`; `num == 0` marks a vanished term.
#[derive(Clone)]
struct PFrac {
    num: BigInt,
    den: BigInt,
    pl: i64,
}

impl PFrac {
    fn one() -> Self {
        PFrac { num: BigInt::from(1), den: BigInt::from(1), pl: 0 }
    }

    fn is_zero(&self) -> bool {
        self.num == BigInt::from(0)
    }

    fn to_rat(&self, scale: &BigInt) -> Rat {
        let mut num = self.num.clone();
        let mut den = self.den.clone();
        if self.pl >= 0 {
            num *= scale.pow(self.pl as u32);
        } else {
            den *= scale.pow((-self.pl) as u32);
        }
        Rat::new(num, den)
    }

    /// Multiply in `sfr((diff/scale), a)` (direct position) or its
    /// reciprocal (arrow position).
    fn mul_sfr(
        &mut self,
        diff: &BigInt,
        scale: &BigInt,
        a: i64,
        direct: bool,
    ) -> Result<(), SeriesError> {
        if a == 0 || self.is_zero() {
            return Ok(());
        }
        let zero = BigInt::from(0);
        if a > 0 {
            for l in 1..=a {
                let f = diff + scale * l;
                if direct {
                    self.num *= f;
                    self.pl -= 1;
                } else {
                    if f == zero {
                        return Err(SeriesError::Pole(format!("factor at shift {}", l)));
                    }
                    self.den *= f;
                    self.pl += 1;
                }
            }
        } else {
            for l in (a + 1)..=0 {
                let f = diff + scale * l;
                if direct {
                    if f == zero {
                        return Err(SeriesError::Pole(format!("factor at shift {}", l)));
                    }
                    self.den *= f;
                    self.pl += 1;
                } else {
                    self.num *= f;
                    self.pl -= 1;
                    if self.is_zero() {
                        return Ok(());
                    }
                }
            }
        }
        Ok(())
    }
}

/// Factor blocks grouped by the enumeration depth at which all their gauge
/// degrees are known.
enum DueBlock {
    NodePairs(usize),
    Arrow(usize),
    Weight(usize),
}

fn block_due_depth(block: &PairBlock, pos: &[usize]) -> usize {
    let mut d = 0;
    if let End::Gauge(i) = block.src {
        d = d.max(pos[i]);
    }
    if let End::Gauge(i) = block.dst {
        d = d.max(pos[i]);
    }
    d
}

fn apply_block(
    pf: &mut PFrac,
    block: &PairBlock,
    direct: bool,
    fp: &FixedPoint,
    sp: &ScaledPoint,
    deg: &DegreeVector,
) -> Result<(), SeriesError> {
    for (ps, ss) in end_data(&block.src, fp) {
        for (pd, sd) in end_data(&block.dst, fp) {
            let diff = &sp.nums[ps] - &sp.nums[pd];
            let ns = ss.map_or(0, |(i, a)| deg[i][a]);
            let nd = sd.map_or(0, |(i, a)| deg[i][a]);
            pf.mul_sfr(&diff, &sp.scale, ns - nd, direct)?;
            if pf.is_zero() {
                return Ok(());
            }
        }
    }
    Ok(())
}

fn apply_node_pairs(
    pf: &mut PFrac,
    i: usize,
    fp: &FixedPoint,
    sp: &ScaledPoint,
    deg: &DegreeVector,
) -> Result<(), SeriesError> {
    let slots = &fp.chern[i];
    for a in 0..slots.len() {
        for b in 0..slots.len() {
            if a == b {
                continue;
            }
            let diff = &sp.nums[slots[a]] - &sp.nums[slots[b]];
            pf.mul_sfr(&diff, &sp.scale, deg[i][a] - deg[i][b], true)?;
        }
    }
    Ok(())
}

/// Tighten a node's total interval through the constraint rows, given the
/// totals already fixed and the box intervals of the not-yet-fixed nodes.
fn tighten_total(
    i: usize,
    mut tlo: i64,
    mut thi: i64,
    fixed_totals: &[Option<i64>],
    totals: &DegreeBox,
    constraint: &TotalsConstraint,
) -> (i64, i64) {
    for (coeffs, lo, hi) in &constraint.rows {
        let ci = coeffs[i];
        if ci == 0 {
            continue;
        }
        let mut base = 0i64;
        let mut rest_lo = 0i64;
        let mut rest_hi = 0i64;
        for j in 0..coeffs.len() {
            if j == i || coeffs[j] == 0 {
                continue;
            }
            match fixed_totals[j] {
                Some(f) => base += coeffs[j] * f,
                None => {
                    let (a, b) = (coeffs[j] * totals.lo[j], coeffs[j] * totals.hi[j]);
                    rest_lo += a.min(b);
                    rest_hi += a.max(b);
                }
            }
        }
        // lo <= base + ci * f_i + [rest_lo, rest_hi] <= hi
        let (a, b) = (lo - base - rest_hi, hi - base - rest_lo);
        if ci > 0 {
            tlo = tlo.max(div_ceil(a, ci));
            thi = thi.min(div_floor(b, ci));
        } else {
            tlo = tlo.max(div_ceil(b, ci));
            thi = thi.min(div_floor(a, ci));
        }
    }
    (tlo, thi)
}

fn div_floor(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

/// Compute the restricted I-function as a truncated Laurent series.
///
/// `totals` is the per-variable interval for the Kähler exponents `|n^i|`;
/// the output series lives on exactly that box. With `Prune::Matched` the
/// enumeration runs over the exact support; with `Prune::Filter` /
/// `Prune::None` it runs over a clamped rectangle (the modes the vanishing
/// audits exercise).
pub fn restricted_series(
    model: &IModel,
    fp: &FixedPoint,
    point: &fixpoints::EquivariantPoint,
    totals: &DegreeBox,
    prune: Prune,
) -> Result<LaurentSeries, SeriesError> {
    restricted_series_constrained(model, fp, point, totals, prune, None)
}

/// [`restricted_series`] with an optional linear window on the totals
/// vector (the checker passes the preimage polytope of the comparison box).
pub fn restricted_series_constrained(
    model: &IModel,
    fp: &FixedPoint,
    point: &fixpoints::EquivariantPoint,
    totals: &DegreeBox,
    prune: Prune,
    constraint: Option<&TotalsConstraint>,
) -> Result<LaurentSeries, SeriesError> {
    if totals.dims() != model.vars.len() {
        return Err(SeriesError::BoxMismatch("totals box vs model vars".into()));
    }
    match prune {
        Prune::Matched => eval_matched(model, fp, point, totals, constraint),
        _ => eval_rectangle(model, fp, point, totals, prune),
    }
}

fn eval_matched(
    model: &IModel,
    fp: &FixedPoint,
    point: &fixpoints::EquivariantPoint,
    totals: &DegreeBox,
    constraint: Option<&TotalsConstraint>,
) -> Result<LaurentSeries, SeriesError> {
    let mut series = LaurentSeries::zero(model.vars.clone(), totals.clone());
    let edges = matched_edges(model, fp);
    let order = enumeration_order(model, &edges)?;
    let nnodes = model.ranks.len();
    let mut pos = vec![0usize; nnodes];
    for (d, &i) in order.iter().enumerate() {
        pos[i] = d;
    }
    // factor blocks become computable once their last gauge node is fixed
    let mut due: Vec<Vec<DueBlock>> = (0..nnodes).map(|_| Vec::new()).collect();
    for (d, &i) in order.iter().enumerate() {
        due[d].push(DueBlock::NodePairs(i));
    }
    for (bi, b) in model.arrows.iter().enumerate() {
        due[block_due_depth(b, &pos)].push(DueBlock::Arrow(bi));
    }
    for (bi, b) in model.weights.iter().enumerate() {
        due[block_due_depth(b, &pos)].push(DueBlock::Weight(bi));
    }
    let sp = scale_point(point);

    let mut deg: DegreeVector = model.ranks.iter().map(|&r| vec![0i64; r]).collect();
    let mut fixed_totals: Vec<Option<i64>> = vec![None; nnodes];
    let mut stack_choices: Vec<Vec<Vec<i64>>> = Vec::with_capacity(nnodes);
    let mut stack_vals: Vec<Vec<PFrac>> = Vec::with_capacity(nnodes);
    let mut idx = vec![0usize; nnodes];
    let mut depth = 0usize;

    let choices_for = |depth: usize,
                       deg: &DegreeVector,
                       fixed_totals: &[Option<i64>]|
     -> Result<Vec<Vec<i64>>, SeriesError> {
        let i = order[depth];
        let k = model.ranks[i];
        let (mut tlo, mut thi) = totals.interval(i);
        if let Some(c) = constraint {
            let (a, b) = tighten_total(i, tlo, thi, fixed_totals, totals, c);
            tlo = a;
            thi = b;
        }
        if tlo > thi {
            return Ok(Vec::new());
        }
        let mut lo: Vec<Option<i64>> = vec![None; k];
        let mut hi: Vec<Option<i64>> = vec![None; k];
        let fixed = |j: usize| order[..depth].contains(&j);
        for e in &edges {
            if let Some((j, a)) = e.src {
                if j == i {
                    let bound = match e.dst {
                        None => Some(0),
                        Some((j2, b)) if fixed(j2) => Some(deg[j2][b]),
                        _ => None,
                    };
                    if let Some(v) = bound {
                        lo[a] = Some(lo[a].map_or(v, |x: i64| x.max(v)));
                    }
                }
            }
            if let Some((j, b)) = e.dst {
                if j == i {
                    let bound = match e.src {
                        None => Some(0),
                        Some((j2, a2)) if fixed(j2) => Some(deg[j2][a2]),
                        _ => None,
                    };
                    if let Some(v) = bound {
                        hi[b] = Some(hi[b].map_or(v, |x: i64| x.min(v)));
                    }
                }
            }
        }
        node_vectors(&lo, &hi, tlo, thi)
    };

    // evaluate all factor blocks due at `depth` on top of the parent value
    let eval_depth = |depth: usize, deg: &DegreeVector, parent: &PFrac| -> Result<PFrac, SeriesError> {
        let mut pf = parent.clone();
        for blk in &due[depth] {
            if pf.is_zero() {
                break;
            }
            match blk {
                DueBlock::NodePairs(i) => apply_node_pairs(&mut pf, *i, fp, &sp, deg)?,
                DueBlock::Arrow(bi) => apply_block(&mut pf, &model.arrows[*bi], false, fp, &sp, deg)?,
                DueBlock::Weight(bi) => apply_block(&mut pf, &model.weights[*bi], true, fp, &sp, deg)?,
            }
        }
        Ok(pf)
    };

    stack_choices.push(choices_for(0, &deg, &fixed_totals)?);
    stack_vals.push(Vec::new());
    loop {
        if idx[depth] >= stack_choices[depth].len() {
            if depth == 0 {
                break;
            }
            stack_choices.pop();
            stack_vals.pop();
            idx[depth] = 0;
            fixed_totals[order[depth]] = None;
            depth -= 1;
            idx[depth] += 1;
            continue;
        }
        let node = order[depth];
        let vec_i = stack_choices[depth][idx[depth]].clone();
        let total: i64 = vec_i.iter().sum();
        deg[node] = vec_i;
        fixed_totals[node] = Some(total);
        let parent = if depth == 0 {
            PFrac::one()
        } else {
            stack_vals[depth - 1][idx[depth - 1]].clone()
        };
        let val = eval_depth(depth, &deg, &parent)?;
        if stack_vals[depth].len() <= idx[depth] {
            stack_vals[depth].resize(idx[depth] + 1, PFrac::one());
        }
        let is_zero = val.is_zero();
        stack_vals[depth][idx[depth]] = val;
        if is_zero {
            // every completion of a vanished partial product vanishes
            idx[depth] += 1;
            continue;
        }
        if depth + 1 < nnodes {
            depth += 1;
            stack_choices.push(choices_for(depth, &deg, &fixed_totals)?);
            stack_vals.push(Vec::new());
            continue;
        }
        let e: Vec<i64> = deg.iter().map(|n| n.iter().sum()).collect();
        series.add_term(e, stack_vals[depth][idx[depth]].to_rat(&sp.scale));
        idx[depth] += 1;
    }
    Ok(series)
}

fn eval_rectangle(
    model: &IModel,
    fp: &FixedPoint,
    point: &fixpoints::EquivariantPoint,
    totals: &DegreeBox,
    prune: Prune,
) -> Result<LaurentSeries, SeriesError> {
    let mut series = LaurentSeries::zero(model.vars.clone(), totals.clone());
    let nnodes = model.ranks.len();
    let mut per_node: Vec<Vec<Vec<i64>>> = Vec::with_capacity(nnodes);
    for i in 0..nnodes {
        let (tlo, thi) = totals.interval(i);
        let c = tlo.abs().max(thi.abs());
        let k = model.ranks[i];
        let lo = vec![Some(-c); k];
        let hi = vec![Some(c); k];
        let v = node_vectors(&lo, &hi, tlo, thi)?;
        if v.is_empty() {
            return Ok(series);
        }
        per_node.push(v);
    }
    let mut deg: DegreeVector = model.ranks.iter().map(|&r| vec![0i64; r]).collect();
    let mut idx = vec![0usize; nnodes];
    loop {
        for i in 0..nnodes {
            deg[i] = per_node[i][idx[i]].clone();
        }
        let keep = match prune {
            Prune::Filter => effectivity_prune(&deg, &model.filter),
            _ => true,
        };
        if keep {
            let v = term_value(model, fp, point, &deg)?;
            if !v.is_zero() {
                let e: Vec<i64> = deg.iter().map(|n| n.iter().sum()).collect();
                series.add_term(e, v);
            }
        }
        // advance odometer
        let mut j = 0;
        loop {
            if j == nnodes {
                return Ok(series);
            }
            idx[j] += 1;
            if idx[j] < per_node[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// The spec-level operation: restricted I-function of a plain quiver variety
/// (no cutting bundle) from its quiver presentation.
pub fn restricted_quiver_i(
    q: &Quiver,
    fp: &FixedPoint,
    point: &fixpoints::EquivariantPoint,
    totals: &DegreeBox,
) -> Result<LaurentSeries, SeriesError> {
    restricted_series(&IModel::from_quiver(q), fp, point, totals, Prune::Matched)
}

/// Restriction of `I^{Gr,S^2}` for `S^{m} -> Gr(r,n)` to a fixed point.
pub fn building_block_i(
    r: u32,
    n: u32,
    m: u32,
    fp: &FixedPoint,
    point: &fixpoints::EquivariantPoint,
    totals: &DegreeBox,
) -> Result<LaurentSeries, SeriesError> {
    let ranks = Ranks::Gr { r, n, m };
    let model = family_model(Family::GrBlock, &ranks)
        .map_err(|e| SeriesError::BoxMismatch(e.to_string()))?;
    restricted_series(&model, fp, point, totals, Prune::Matched)
}

/// Restriction of `I^{Gr^v,S^2}` for `(S^v)^{m} -> Gr(n-r,n)`.
pub fn building_block_i_dual(
    r: u32,
    n: u32,
    m: u32,
    fp: &FixedPoint,
    point: &fixpoints::EquivariantPoint,
    totals: &DegreeBox,
) -> Result<LaurentSeries, SeriesError> {
    let ranks = Ranks::Gr { r, n, m };
    let model = family_model(Family::GrBlockDual, &ranks)
        .map_err(|e| SeriesError::BoxMismatch(e.to_string()))?;
    restricted_series(&model, fp, point, totals, Prune::Matched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixpoints::{enumerate, generic_point, make_fixed_point};

    fn gr_point(n: u32, m: u32, seed: u64) -> fixpoints::EquivariantPoint {
        let ranks = Ranks::Gr { r: 1, n, m };
        generic_point(ranks.param_names(), seed, 5)
    }

    #[test]
    fn grblock_degree_one_coefficient() {
        // coefficient of q^1 for (r,n,m)=(1,2,0) at P={1} is 1/(l1-l2+1)
        let ranks = Ranks::Gr { r: 1, n: 2, m: 0 };
        let fp = make_fixed_point(Family::GrBlock, &ranks, vec![vec![1]]).unwrap();
        let pt = gr_point(2, 0, 3);
        let totals = DegreeBox::new(vec![0], vec![2]);
        let s = building_block_i(1, 2, 0, &fp, &pt, &totals).unwrap();
        assert_eq!(s.coeff(&[0]), rat(1));
        let expect = (&pt.values[0] - &pt.values[1] + rat(1)).recip();
        assert_eq!(s.coeff(&[1]), expect);
    }

    #[test]
    fn grblock_dual_degree_minus_one() {
        let ranks = Ranks::Gr { r: 1, n: 2, m: 0 };
        let fp = make_fixed_point(Family::GrBlockDual, &ranks, vec![vec![2]]).unwrap();
        let pt = gr_point(2, 0, 3);
        let totals = DegreeBox::new(vec![-2], vec![0]);
        let s = building_block_i_dual(1, 2, 0, &fp, &pt, &totals).unwrap();
        assert_eq!(s.coeff(&[0]), rat(1));
        let expect = (&pt.values[0] - &pt.values[1] + rat(1)).recip();
        assert_eq!(s.coeff(&[-1]), expect);
    }

    #[test]
    fn fiber_factor_at_degree_one() {
        // for m=1 the q^1 coefficient gains the factor (eta - lambda_f)
        let ranks = Ranks::Gr { r: 1, n: 2, m: 1 };
        let fp = make_fixed_point(Family::GrBlock, &ranks, vec![vec![1]]).unwrap();
        let pt = gr_point(2, 1, 5);
        let totals = DegreeBox::new(vec![0], vec![1]);
        let s = building_block_i(1, 2, 1, &fp, &pt, &totals).unwrap();
        let lam1 = &pt.values[0];
        let lam2 = &pt.values[1];
        let eta = &pt.values[2];
        let expect = (eta - lam1) / ((lam1 - lam2 + rat(1)) * rat(1));
        assert_eq!(s.coeff(&[1]), expect);
    }

    #[test]
    fn x0_degree_zero_is_one() {
        let ranks = Ranks::D3 { n: [2, 2, 3, 4] };
        let pt = generic_point(ranks.param_names(), 7, 3);
        let model = family_model(Family::X0, &ranks).unwrap();
        for fp in enumerate(Family::X0, &ranks).unwrap().iter().take(5) {
            let totals = DegreeBox::new(vec![0, 0, 0], vec![1, 1, 1]);
            let s = restricted_series(&model, fp, &pt, &totals, Prune::Matched).unwrap();
            assert_eq!(s.coeff(&[0, 0, 0]), rat(1));
        }
    }

    #[test]
    fn wrong_sign_degree_vanishes() {
        // Z1 sums over n3' <= 0; the +1 direction must vanish identically
        let ranks = Ranks::D3 { n: [2, 2, 3, 4] };
        let pt = generic_point(ranks.param_names(), 9, 3);
        let model = family_model(Family::Z1, &ranks).unwrap();
        let fp = enumerate(Family::Z1, &ranks).unwrap()[0].clone();
        let d: DegreeVector = vec![vec![0, 0], vec![0, 0], vec![1]];
        let v = term_value(&model, &fp, &pt, &d).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn effectivity_examples() {
        let ranks = Ranks::Gr { r: 1, n: 2, m: 0 };
        let model = family_model(Family::GrBlock, &ranks).unwrap();
        assert!(effectivity_prune(&vec![vec![0]], &model.filter));
        assert!(effectivity_prune(&vec![vec![3]], &model.filter));
        assert!(!effectivity_prune(&vec![vec![-1]], &model.filter));
    }

    #[test]
    fn empty_weights_factor_is_one() {
        let ranks = Ranks::D3 { n: [2, 2, 3, 4] };
        let pt = generic_point(ranks.param_names(), 2, 3);
        let fp = enumerate(Family::X0, &ranks).unwrap()[0].clone();
        let d: DegreeVector = vec![vec![0, 0], vec![0, 0], vec![0, 0, 0]];
        assert_eq!(lefschetz_factor(&[], &d, &fp, &pt).unwrap(), rat(1));
    }
}
