//! Coefficient-by-coefficient verification of the duality identities.
//!
//! Comparison semantics: the left side is computed directly in the `q`
//! variables on a working box; the right side is computed in its own
//! variables on the preimage box of the substitution, mapped through the
//! Kähler substitution, multiplied by the prefactor, and compared inside the
//! requested comparison box. Coefficients are exact rationals, so a check
//! passes only on exact equality at every selected fixed-point pair and
//! every generic parameter point. Each run re-computes both sides with the
//! enumeration domain enlarged by one in every coordinate and diffs the
//! in-box coefficients (boundary-slack audit).

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::fixpoints::{
    self, check_admissible, enumerate, generic_point, iota, make_fixed_point,
    EquivariantPoint, Family, FixedPoint, IotaPair, Ranks, StepId, ALL_STEPS,
};
use crate::ifun::{
    family_model, restricted_series, restricted_series_constrained, IModel, Prune, TotalsConstraint,
};
use crate::kahler::KahlerMap;
use crate::rat::rat_to_string;
use crate::series::{expand_prefactor, AffineForm, DegreeBox, LaurentSeries, Prefactor, SeriesError, Unit};

/// Configuration of one identity check.
#[derive(Debug, Clone)]
pub struct CheckSpec {
    pub box_radius: i64,
    pub trials: u32,
    pub seed: u64,
    pub selection: Selection,
    /// Re-run both sides with enlarged enumeration domains and diff.
    pub audit: bool,
    /// Replace the catalogued prefactor by 1 (the prefactor-necessity
    /// guard expects the check to fail with this set).
    pub force_trivial_prefactor: bool,
}

impl Default for CheckSpec {
    fn default() -> Self {
        CheckSpec {
            box_radius: 3,
            trials: 3,
            seed: 1,
            selection: Selection::All,
            audit: true,
            force_trivial_prefactor: false,
        }
    }
}

impl CheckSpec {
    pub fn validate(&self) -> Result<(), CheckError> {
        if self.box_radius < 1 {
            return Err(CheckError::Usage("box radius must be >= 1".into()));
        }
        if self.trials < 1 {
            return Err(CheckError::Usage("trials must be >= 1".into()));
        }
        Ok(())
    }
}

/// Which fixed-point pairs to verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    All,
    Distinguished,
    Sample(usize),
    DistinguishedPlusSample(usize),
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Ranks(#[from] fixpoints::FpError),
    #[error("series: {0}")]
    Series(#[from] SeriesError),
    #[error("kähler map: {0}")]
    Kahler(#[from] crate::kahler::KahlerError),
}

#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub exponent: Vec<i64>,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub trial: u32,
    pub point_seed: u64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<Mismatch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairOutcome {
    pub pair: usize,
    pub lhs_labels: Vec<Vec<u32>>,
    pub rhs_labels: Vec<Vec<u32>>,
    pub trials: Vec<TrialOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub identity: String,
    pub ranks: String,
    pub box_radius: i64,
    pub trials: u32,
    pub seed: u64,
    pub verdict: String,
    pub pairs_checked: usize,
    pub boundary_slack: String,
    pub pairs: Vec<PairOutcome>,
    #[serde(skip)]
    pub timing_ms: u128,
}

impl CheckReport {
    pub fn pass(&self) -> bool {
        self.verdict == "PASS"
    }

    /// Deterministic report body: identical seed and config give identical
    /// bytes. Timing lives in the run summary, not here.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("serialize report")
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serialize report");
        s.push('\n');
        s
    }
}

// ---- prefactor catalogue ----

/// Catalogued prefactor shapes; unit/exp exponents may depend on the
/// left-hand fixed point through its Chern-root parameters.
#[derive(Debug, Clone)]
pub enum PrefRule {
    Trivial,
    /// `exp(sign * q_var)`
    Exp { var: usize, sign: i8 },
    /// `(1 + sign*q_var)^(constant + sum chern(plus) - sum chern(minus))`
    UnitPow {
        var: usize,
        sign: i8,
        constant: i64,
        plus_nodes: Vec<usize>,
        minus_nodes: Vec<usize>,
        plus_param_range: Option<(usize, usize)>,
        minus_param_range: Option<(usize, usize)>,
    },
}

impl PrefRule {
    fn lift_vars(&self) -> Vec<usize> {
        match self {
            PrefRule::Trivial => Vec::new(),
            PrefRule::Exp { var, .. } | PrefRule::UnitPow { var, .. } => vec![*var],
        }
    }

    fn build(&self, lhs_fp: &FixedPoint) -> Prefactor {
        match self {
            PrefRule::Trivial => Prefactor::trivial(),
            PrefRule::Exp { var, sign } => Prefactor::exp(crate::rat::rat(*sign as i64), *var),
            PrefRule::UnitPow {
                var,
                sign,
                constant,
                plus_nodes,
                minus_nodes,
                plus_param_range,
                minus_param_range,
            } => {
                let mut e = AffineForm::constant(crate::rat::rat(*constant));
                for &i in plus_nodes {
                    for &p in &lhs_fp.chern[i] {
                        e.add_param(p, crate::rat::rat(1));
                    }
                }
                for &i in minus_nodes {
                    for &p in &lhs_fp.chern[i] {
                        e.add_param(p, crate::rat::rat(-1));
                    }
                }
                if let Some((a, b)) = plus_param_range {
                    for p in *a..*b {
                        e.add_param(p, crate::rat::rat(1));
                    }
                }
                if let Some((a, b)) = minus_param_range {
                    for p in *a..*b {
                        e.add_param(p, crate::rat::rat(-1));
                    }
                }
                Prefactor::unit_power(Unit { var: *var, sign: *sign }, e)
            }
        }
    }
}

/// Everything needed to verify one identity.
pub struct IdentityJob {
    pub id: String,
    pub ranks_label: String,
    pub lhs: IModel,
    pub rhs: IModel,
    pub pairs: Vec<(FixedPoint, FixedPoint)>,
    pub map: KahlerMap,
    pub pref: PrefRule,
    /// Evaluate the right side at negated parameters (transpose
    /// isomorphism steps).
    pub flip_rhs: bool,
    pub param_names: Vec<String>,
}

fn compare_pair(
    job: &IdentityJob,
    spec: &CheckSpec,
    pair: &(FixedPoint, FixedPoint),
    point: &EquivariantPoint,
) -> Result<Option<Mismatch>, SeriesError> {
    let nv = job.lhs.vars.len();
    let cmp_box = DegreeBox::radius(nv, spec.box_radius);
    // working box: extend downward where unit/exp prefactors and map units
    // can lift exponents
    let mut lift: Vec<usize> = job.map.units.iter().map(|u| u.var).collect();
    if !spec.force_trivial_prefactor {
        lift.extend(job.pref.lift_vars());
    }
    lift.sort_unstable();
    lift.dedup();
    let mut w = cmp_box.clone();
    for v in lift {
        w = w.extend_lo(v, 2 * spec.box_radius);
    }
    let rhs_point = if job.flip_rhs { point.negated() } else { point.clone() };
    // terms whose image misses the provisioned target window can never
    // matter; prune the preimage polytope during enumeration
    let ext = job.map.extended_target(&w);
    let amat = job.map.exponent_matrix();
    let constraint = TotalsConstraint {
        rows: (0..nv).map(|t| (amat[t].clone(), ext.lo[t], ext.hi[t])).collect(),
    };

    let eval = |extra: i64| -> Result<(LaurentSeries, LaurentSeries), SeriesError> {
        let lhs_tot = w.widen(extra);
        let lhs = restricted_series(&job.lhs, &pair.0, point, &lhs_tot, Prune::Matched)?;
        let src = job
            .map
            .source_box(&w)
            .map_err(|e| SeriesError::InsufficientBox(e.to_string()))?
            .widen(extra);
        let rhs = restricted_series_constrained(
            &job.rhs,
            &pair.1,
            &rhs_point,
            &src,
            Prune::Matched,
            Some(&constraint),
        )?;
        let sub = job.map.substitute(&rhs, &w)?;
        let rhs_final = if spec.force_trivial_prefactor {
            sub
        } else {
            let pf = job.pref.build(&pair.0);
            if pf.is_trivial() {
                sub
            } else {
                let pf_series = expand_prefactor(&pf, &point.values, &job.lhs.vars, &w)?;
                pf_series.mul(&sub)?
            }
        };
        Ok((lhs, rhs_final))
    };

    let (lhs, rhs_final) = eval(0)?;
    if spec.audit {
        let (lhs2, rhs2) = eval(1)?;
        if let Some((e, a, b)) = lhs.first_mismatch(&lhs2, &w) {
            return Err(SeriesError::InsufficientBox(format!(
                "boundary-slack audit: lhs coefficient at {:?} changed from {} to {}",
                e,
                rat_to_string(&a),
                rat_to_string(&b)
            )));
        }
        if let Some((e, a, b)) = rhs_final.first_mismatch(&rhs2, &w) {
            return Err(SeriesError::InsufficientBox(format!(
                "boundary-slack audit: rhs coefficient at {:?} changed from {} to {}",
                e,
                rat_to_string(&a),
                rat_to_string(&b)
            )));
        }
    }
    Ok(lhs
        .first_mismatch(&rhs_final, &cmp_box)
        .map(|(e, a, b)| Mismatch {
            exponent: e,
            lhs: rat_to_string(&a),
            rhs: rat_to_string(&b),
        }))
}

/// Run an identity job: all selected pairs, all trials, with audits.
pub fn run_job(job: &IdentityJob, spec: &CheckSpec) -> Result<CheckReport, CheckError> {
    spec.validate()?;
    let started = Instant::now();
    let points: Vec<EquivariantPoint> = (0..spec.trials)
        .map(|t| generic_point(job.param_names.clone(), spec.seed.wrapping_add(t as u64), spec.box_radius))
        .collect();
    let outcomes: Vec<PairOutcome> = job
        .pairs
        .par_iter()
        .enumerate()
        .map(|(idx, pair)| {
            let trials: Vec<TrialOutcome> = points
                .iter()
                .enumerate()
                .map(|(t, point)| match compare_pair(job, spec, pair, point) {
                    Ok(None) => TrialOutcome {
                        trial: t as u32,
                        point_seed: point.seed,
                        pass: true,
                        mismatch: None,
                        note: None,
                    },
                    Ok(Some(m)) => TrialOutcome {
                        trial: t as u32,
                        point_seed: point.seed,
                        pass: false,
                        mismatch: Some(m),
                        note: None,
                    },
                    Err(e) => TrialOutcome {
                        trial: t as u32,
                        point_seed: point.seed,
                        pass: false,
                        mismatch: None,
                        note: Some(e.to_string()),
                    },
                })
                .collect();
            PairOutcome {
                pair: idx,
                lhs_labels: pair.0.labels.clone(),
                rhs_labels: pair.1.labels.clone(),
                trials,
            }
        })
        .collect();
    let pass = outcomes.iter().all(|p| p.trials.iter().all(|t| t.pass));
    let audit_failed = outcomes.iter().any(|p| {
        p.trials
            .iter()
            .any(|t| t.note.as_deref().is_some_and(|n| n.contains("boundary-slack")))
    });
    Ok(CheckReport {
        identity: job.id.clone(),
        ranks: job.ranks_label.clone(),
        box_radius: spec.box_radius,
        trials: spec.trials,
        seed: spec.seed,
        verdict: if pass { "PASS" } else { "FAIL" }.to_string(),
        pairs_checked: outcomes.len(),
        boundary_slack: if !spec.audit {
            "SKIPPED".to_string()
        } else if audit_failed {
            "FAIL".to_string()
        } else {
            "PASS".to_string()
        },
        pairs: outcomes,
        timing_ms: started.elapsed().as_millis(),
    })
}

fn select_pairs(
    all: Vec<(FixedPoint, FixedPoint)>,
    distinguished: Option<usize>,
    selection: Selection,
    seed: u64,
) -> Vec<(FixedPoint, FixedPoint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut idx: Vec<usize> = (0..all.len()).collect();
    let chosen: Vec<usize> = match selection {
        Selection::All => idx,
        Selection::Distinguished => vec![distinguished.unwrap_or(0)],
        Selection::Sample(k) => {
            idx.shuffle(&mut rng);
            idx.into_iter().take(k.max(1)).collect()
        }
        Selection::DistinguishedPlusSample(k) => {
            let d = distinguished.unwrap_or(0);
            idx.retain(|&i| i != d);
            idx.shuffle(&mut rng);
            let mut v = vec![d];
            v.extend(idx.into_iter().take(k));
            v
        }
    };
    let mut chosen = chosen;
    chosen.sort_unstable();
    chosen.dedup();
    let mut out = Vec::with_capacity(chosen.len());
    for i in chosen {
        out.push(all[i].clone());
    }
    out
}

// ---- building block ----

/// Duality case of the fundamental building block, selected by `(n, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockCase {
    Plain,
    ExpFactor,
    UnitFactor,
}

pub fn block_case(n: u32, m: u32) -> Result<BlockCase, CheckError> {
    if n >= m + 2 {
        Ok(BlockCase::Plain)
    } else if n == m + 1 {
        Ok(BlockCase::ExpFactor)
    } else if n == m {
        Ok(BlockCase::UnitFactor)
    } else {
        Err(CheckError::Usage(format!("building block needs n >= m, got n={}, m={}", n, m)))
    }
}

/// Verify the building-block identity for `S^m -> Gr(r,n)` against its dual.
pub fn check_building_block(r: u32, n: u32, m: u32, spec: &CheckSpec) -> Result<CheckReport, CheckError> {
    let ranks = Ranks::Gr { r, n, m };
    check_admissible(Family::GrBlock, &ranks)?;
    let case = block_case(n, m)?;
    let sign = if (n - r) % 2 == 0 { 1i8 } else { -1i8 };
    let pref = match case {
        BlockCase::Plain => PrefRule::Trivial,
        BlockCase::ExpFactor => PrefRule::Exp { var: 0, sign },
        BlockCase::UnitFactor => PrefRule::UnitPow {
            var: 0,
            sign,
            constant: (n - r) as i64,
            plus_nodes: vec![],
            minus_nodes: vec![],
            plus_param_range: Some((n as usize, (n + m) as usize)),
            minus_param_range: Some((0, n as usize)),
        },
    };
    let lhs = family_model(Family::GrBlock, &ranks)?;
    let rhs = family_model(Family::GrBlockDual, &ranks)?;
    let pairs: Vec<(FixedPoint, FixedPoint)> = enumerate(Family::GrBlock, &ranks)?
        .into_iter()
        .map(|p| {
            let q = iota(IotaPair::Gr, &p, &ranks).unwrap();
            (p, q)
        })
        .collect();
    let pairs = select_pairs(pairs, None, spec.selection, spec.seed);
    let job = IdentityJob {
        id: format!("building-block(r={},n={},m={})", r, n, m),
        ranks_label: format!("r={},n={},m={}", r, n, m),
        lhs,
        rhs,
        pairs,
        map: KahlerMap::monomial(vec!["q".into()], vec![vec![-1]]),
        pref,
        flip_rhs: false,
        param_names: ranks.param_names(),
    };
    run_job(&job, spec)
}

// ---- star-shaped quiver ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarCase {
    A,
    B,
    C,
}

pub fn star_case(ranks: &Ranks) -> Result<StarCase, CheckError> {
    let n = ranks.star()?;
    let (out, inc) = (n[5] + n[6], n[2] + n[3]);
    if out >= inc + 2 {
        Ok(StarCase::A)
    } else if out == inc + 1 {
        Ok(StarCase::B)
    } else if out == inc {
        Ok(StarCase::C)
    } else {
        Err(CheckError::Usage("star quiver needs N6+N7 >= N3+N4".into()))
    }
}

/// The variable map of the center mutation for the star quiver.
pub fn star_map(ranks: &Ranks) -> Result<KahlerMap, CheckError> {
    let n = ranks.star()?;
    let n5p = (n[5] + n[6] - n[4]) as i64;
    let s5 = if n5p % 2 == 0 { 1i8 } else { -1i8 };
    let vars: Vec<String> = (1..=7).map(|i| format!("q{}", i)).collect();
    let mut m = KahlerMap::identity(vars);
    // q5' = q5^-1, q6' = q6 q5, q7' = q7 q5
    m.images[4].exps[4] = -1;
    m.images[5].exps[4] = 1;
    m.images[6].exps[4] = 1;
    if star_case(ranks)? == StarCase::C {
        m.units.push(Unit { var: 4, sign: s5 });
        for im in m.images.iter_mut() {
            im.unit_exps = vec![0];
        }
        // q3' = q3 U, q4' = q4 U, q6' = q6 q5 / U, q7' = q7 q5 / U
        m.images[2].unit_exps[0] = 1;
        m.images[3].unit_exps[0] = 1;
        m.images[5].unit_exps[0] = -1;
        m.images[6].unit_exps[0] = -1;
    }
    Ok(m.normalized())
}

/// The distinguished fixed point: every subset is the initial segment.
pub fn star_distinguished(ranks: &Ranks) -> Result<FixedPoint, CheckError> {
    let n = ranks.star()?;
    let seg = |k: u32| (1..=k).collect::<Vec<u32>>();
    Ok(make_fixed_point(
        Family::Star,
        ranks,
        vec![seg(n[0]), seg(n[1]), seg(n[2]), seg(n[3]), seg(n[4]), seg(n[5]), seg(n[6])],
    )?)
}

/// Verify the center-mutation identity for the star-shaped quiver.
pub fn check_star(ranks: &Ranks, spec: &CheckSpec) -> Result<CheckReport, CheckError> {
    check_admissible(Family::Star, ranks)?;
    let n = ranks.star()?;
    let case = star_case(ranks)?;
    let n5p = (n[5] + n[6] - n[4]) as i64;
    let s5 = if n5p % 2 == 0 { 1i8 } else { -1i8 };
    let pref = match case {
        StarCase::A => PrefRule::Trivial,
        StarCase::B => PrefRule::Exp { var: 4, sign: s5 },
        StarCase::C => PrefRule::UnitPow {
            var: 4,
            sign: s5,
            constant: n5p,
            plus_nodes: vec![2, 3],
            minus_nodes: vec![5, 6],
            plus_param_range: None,
            minus_param_range: None,
        },
    };
    let all = enumerate(Family::Star, ranks)?;
    let distinguished = star_distinguished(ranks)?;
    let didx = all.iter().position(|p| *p == distinguished);
    let pairs: Vec<(FixedPoint, FixedPoint)> = all
        .into_iter()
        .map(|p| {
            let q = iota(IotaPair::Star, &p, ranks).unwrap();
            (p, q)
        })
        .collect();
    let pairs = select_pairs(pairs, didx, spec.selection, spec.seed);
    let job = IdentityJob {
        id: format!("star-{}", match case {
            StarCase::A => "a",
            StarCase::B => "b",
            StarCase::C => "c",
        }),
        ranks_label: format!("{:?}", n),
        lhs: family_model(Family::Star, ranks)?,
        rhs: family_model(Family::StarDual, ranks)?,
        pairs,
        map: star_map(ranks)?,
        pref,
        flip_rhs: false,
        param_names: ranks.param_names(),
    };
    run_job(&job, spec)
}

// ---- the D3 chain ----

/// The Kähler substitution of one chain step (right-hand variables written
/// in left-hand variables).
pub fn chain_step_map(step: StepId, ranks: &Ranks) -> Result<KahlerMap, CheckError> {
    let [_, _, n3, n4] = ranks.d3()?;
    let s3 = if (n4 - n3) % 2 == 0 { 1i8 } else { -1i8 };
    let vars: Vec<String> = (1..=3).map(|i| format!("q{}", i)).collect();
    let e = |c: [i64; 3]| c.to_vec();
    let plain = |cols: [[i64; 3]; 3]| KahlerMap::monomial(vars.clone(), cols.iter().map(|c| c.to_vec()).collect());
    Ok(match step {
        StepId::X0Z1 | StepId::Z3X4 => {
            let mut m = KahlerMap::monomial(vars.clone(), vec![e([1, 0, 0]), e([0, 1, 0]), e([0, 0, -1])]);
            m.units.push(Unit { var: 2, sign: s3 });
            for im in m.images.iter_mut() {
                im.unit_exps = vec![0];
            }
            m.images[0].unit_exps[0] = 1;
            m.images[1].unit_exps[0] = 1;
            m
        }
        StepId::Z1Z2 => plain([[-1, 0, 0], [0, 1, 0], [0, 0, 1]]),
        StepId::Z2Z3 => plain([[0, -1, 0], [1, 0, 0], [0, 0, -1]]),
        StepId::X4X5 | StepId::X7X8 => plain([[-1, 0, 0], [0, 1, 0], [1, 0, 1]]),
        StepId::X5X6 | StepId::X8X9 => plain([[1, 0, 0], [0, -1, 0], [0, 1, 1]]),
        StepId::X6X7 => plain([[-1, 0, 0], [0, -1, 0], [0, 0, -1]]),
        StepId::X9X0 => plain([[0, 1, 0], [1, 0, 0], [0, 0, 1]]),
    })
}

fn chain_step_pref(step: StepId, ranks: &Ranks) -> Result<PrefRule, CheckError> {
    let [_, _, n3, n4] = ranks.d3()?;
    let n3p = (n4 - n3) as i64;
    let s3 = if n3p % 2 == 0 { 1i8 } else { -1i8 };
    Ok(match step {
        StepId::X0Z1 => PrefRule::UnitPow {
            var: 2,
            sign: s3,
            constant: n3p,
            plus_nodes: vec![0, 1],
            minus_nodes: vec![],
            plus_param_range: None,
            minus_param_range: Some((0, n4 as usize)),
        },
        StepId::Z3X4 => PrefRule::UnitPow {
            var: 2,
            sign: s3,
            constant: -n3p,
            plus_nodes: vec![0, 1],
            minus_nodes: vec![],
            plus_param_range: None,
            minus_param_range: Some((0, n4 as usize)),
        },
        _ => PrefRule::Trivial,
    })
}

fn chain_step_flip(step: StepId) -> bool {
    matches!(step, StepId::Z2Z3 | StepId::X6X7)
}

/// Verify one step of the D3 mutation cycle at every fixed-point pair.
pub fn check_d3_step(step: StepId, ranks: &Ranks, spec: &CheckSpec) -> Result<CheckReport, CheckError> {
    let (src, dst) = step.families();
    check_admissible(src, ranks)?;
    let pairs: Vec<(FixedPoint, FixedPoint)> = enumerate(src, ranks)?
        .into_iter()
        .map(|p| {
            let q = iota(IotaPair::Step(step), &p, ranks).unwrap();
            (p, q)
        })
        .collect();
    let pairs = select_pairs(pairs, None, spec.selection, spec.seed);
    let job = IdentityJob {
        id: format!("d3-step:{}", step.name()),
        ranks_label: format!("{:?}", ranks.d3()?),
        lhs: family_model(src, ranks)?,
        rhs: family_model(dst, ranks)?,
        pairs,
        map: chain_step_map(step, ranks)?,
        pref: chain_step_pref(step, ranks)?,
        flip_rhs: chain_step_flip(step),
        param_names: ranks.param_names(),
    };
    run_job(&job, spec)
}

// ---- the full cycle (Table 1) ----

#[derive(Debug, Clone, Serialize)]
pub struct RowCheck {
    pub mutation: String,
    pub variety: String,
    pub expected: Vec<String>,
    pub got: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleReport {
    pub ranks: String,
    pub rows: Vec<RowCheck>,
    pub composition_is_identity: bool,
    pub monomial_round_trip: bool,
    pub step_reports: Vec<CheckReport>,
    pub verdict: String,
    #[serde(skip)]
    pub timing_ms: u128,
}

impl CycleReport {
    pub fn pass(&self) -> bool {
        self.verdict == "PASS"
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&serde_json::to_value(self).unwrap()).unwrap();
        s.push('\n');
        s
    }
}

/// The expected cumulative rows of the variable-transformation table, as
/// maps from each stage's variables back to the original ones.
pub fn expected_table_rows(ranks: &Ranks) -> Result<Vec<(String, String, KahlerMap)>, CheckError> {
    let [_, _, n3, n4] = ranks.d3()?;
    let s3 = if (n4 - n3) % 2 == 0 { 1i8 } else { -1i8 };
    let vars: Vec<String> = (1..=3).map(|i| format!("q{}", i)).collect();
    let u = Unit { var: 2, sign: s3 };
    let mk = |cols: [[i64; 3]; 3], unit_exps: [i64; 3]| -> KahlerMap {
        let mut m = KahlerMap::monomial(vars.clone(), cols.iter().map(|c| c.to_vec()).collect());
        m.units.push(u);
        for (j, im) in m.images.iter_mut().enumerate() {
            im.unit_exps = vec![unit_exps[j]];
        }
        m.normalized()
    };
    Ok(vec![
        ("mu3".into(), "Z1".into(), mk([[1, 0, 0], [0, 1, 0], [0, 0, -1]], [1, 1, 0])),
        ("mu1".into(), "Z2".into(), mk([[-1, 0, 0], [0, 1, 0], [0, 0, -1]], [-1, 1, 0])),
        ("mu2".into(), "Z3".into(), mk([[0, -1, 0], [-1, 0, 0], [0, 0, 1]], [-1, -1, 0])),
        ("mu3".into(), "X4".into(), mk([[0, -1, 0], [-1, 0, 0], [0, 0, -1]], [0, 0, 0])),
        ("mu1".into(), "X5".into(), mk([[0, 1, 0], [-1, 0, 0], [0, -1, -1]], [0, 0, 0])),
        ("mu2".into(), "X6".into(), mk([[0, 1, 0], [1, 0, 0], [-1, -1, -1]], [0, 0, 0])),
        ("mu3".into(), "X7".into(), mk([[0, -1, 0], [-1, 0, 0], [1, 1, 1]], [0, 0, 0])),
        ("mu1".into(), "X8".into(), mk([[0, 1, 0], [-1, 0, 0], [1, 0, 1]], [0, 0, 0])),
        ("mu2".into(), "X9".into(), mk([[0, 1, 0], [1, 0, 0], [0, 0, 1]], [0, 0, 0])),
    ])
}

/// Verify the full cycle: each cumulative substitution row, the identity of
/// the nine-step composition followed by the node relabel, and every step's
/// I-function identity.
pub fn check_cycle(ranks: &Ranks, spec: &CheckSpec) -> Result<CycleReport, CheckError> {
    let started = Instant::now();
    check_admissible(Family::X0, ranks)?;
    let vars: Vec<String> = (1..=3).map(|i| format!("q{}", i)).collect();
    let mut cumulative = KahlerMap::identity(vars.clone());
    let mut rows = Vec::new();
    let expected = expected_table_rows(ranks)?;
    let steps9 = &ALL_STEPS[..9];
    for (step, (mutation, variety, want)) in steps9.iter().zip(expected) {
        let sigma = chain_step_map(*step, ranks)?;
        cumulative = cumulative.compose_after(&sigma)?;
        let got = cumulative.normalized();
        let pass = got == want;
        rows.push(RowCheck {
            mutation,
            variety,
            expected: want.image_strings(),
            got: got.image_strings(),
            pass,
        });
    }
    let relabel = chain_step_map(StepId::X9X0, ranks)?;
    let composed = cumulative.compose_after(&relabel)?;
    let composition_is_identity = composed.is_identity();
    // applying the composed map to the monomial q1 q2 q3 must return it
    let bx = DegreeBox::radius(3, 3);
    let mono = LaurentSeries::monomial(vars.clone(), bx.clone(), vec![1, 1, 1], crate::rat::rat(1));
    let monomial_round_trip = composed
        .substitute(&mono, &bx)
        .map(|s| s == mono)
        .unwrap_or(false);

    let step_reports: Vec<CheckReport> = ALL_STEPS
        .iter()
        .map(|s| check_d3_step(*s, ranks, spec))
        .collect::<Result<_, _>>()?;
    let pass = rows.iter().all(|r| r.pass)
        && composition_is_identity
        && monomial_round_trip
        && step_reports.iter().all(|r| r.pass());
    Ok(CycleReport {
        ranks: format!("{:?}", ranks.d3()?),
        rows,
        composition_is_identity,
        monomial_round_trip,
        step_reports,
        verdict: if pass { "PASS" } else { "FAIL" }.to_string(),
        timing_ms: started.elapsed().as_millis(),
    })
}

/// Summary of a multi-identity run, the one place wall-clock times are
/// reported.
pub fn run_summary(reports: &[(String, bool, u128)]) -> Value {
    json!({
        "checks": reports
            .iter()
            .map(|(id, pass, ms)| json!({"identity": id, "verdict": if *pass { "PASS" } else { "FAIL" }, "wall_ms": ms}))
            .collect::<Vec<_>>(),
        "pass_count": reports.iter().filter(|(_, p, _)| *p).count(),
        "fail_count": reports.iter().filter(|(_, p, _)| !*p).count(),
    })
}
