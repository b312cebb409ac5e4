//! Acceptance suite: every headline identity and property gate, checked at
//! exact rational equality (tolerance zero) and printing one line per
//! criterion. Run with `cargo test --test acceptance -- --nocapture` to see
//! the lines.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qdual_core::checker::{
    check_building_block, check_cycle, check_d3_step, check_star, CheckSpec, Selection,
};
use qdual_core::fixpoints::{
    closed_form_count, enumerate, generic_point, iota, Family, IotaPair, Ranks, StepId, ALL_STEPS,
};
use qdual_core::ifun::{family_model, restricted_series, Prune};
use qdual_core::quiver::{Arrow, Node, Quiver};
use qdual_core::rat::{rat, Rat};
use qdual_core::series::{sfr, DegreeBox};

fn spec(box_radius: i64, trials: u32, selection: Selection) -> CheckSpec {
    CheckSpec {
        box_radius,
        trials,
        seed: 20240917,
        selection,
        audit: true,
        force_trivial_prefactor: false,
    }
}

/// Criterion 1: the fundamental building block in all three cases, every
/// fixed-point pair, box radius 5, three generic points.
#[test]
fn criterion_1_building_block() {
    let tuples = [
        (1, 2, 0),
        (1, 3, 1),
        (2, 3, 1),
        (1, 3, 2),
        (2, 4, 2),
        (2, 4, 3),
        (1, 2, 1),
        (2, 3, 2),
        (1, 2, 2),
        (2, 4, 4),
        (2, 3, 3),
    ];
    let mut all_ok = true;
    for (r, n, m) in tuples {
        let report = check_building_block(r, n, m, &spec(5, 3, Selection::All)).unwrap();
        assert_eq!(report.boundary_slack, "PASS");
        if !report.pass() {
            all_ok = false;
            eprintln!("  building block ({},{},{}): FAIL", r, n, m);
        }
    }
    println!(
        "[criterion 1] {} — building block, 11 rank tuples, all pairs, box 5, 3 points",
        if all_ok { "PASS" } else { "FAIL" }
    );
    assert!(all_ok);
}

/// Criterion 2: the D3 mu3 identity with the binomial-unit prefactor at all
/// 36 fixed-point pairs, box radius 3, three generic points.
#[test]
fn criterion_2_d3_mu3_identity() {
    let ranks = Ranks::D3 { n: [2, 2, 3, 4] };
    let report = check_d3_step(StepId::X0Z1, &ranks, &spec(3, 3, Selection::All)).unwrap();
    assert_eq!(report.pairs_checked, 36);
    assert_eq!(report.boundary_slack, "PASS");
    println!(
        "[criterion 2] {} — D3 (2,2,3,4) mu3 identity, 36 pairs, box 3, 3 points",
        report.verdict
    );
    assert!(report.pass());
}

/// Criterion 3: star-shaped quiver, cases (a) and (c), distinguished pair
/// plus five sampled pairs, box radius 2.
#[test]
fn criterion_3_star_cases() {
    let case_a = Ranks::Star { n: [1, 1, 2, 2, 2, 3, 3, 4, 4] };
    let case_c = Ranks::Star { n: [1, 1, 2, 2, 3, 2, 2, 3, 3] };
    let sel = Selection::DistinguishedPlusSample(5);
    let ra = check_star(&case_a, &spec(2, 3, sel)).unwrap();
    let rc = check_star(&case_c, &spec(2, 3, sel)).unwrap();
    assert_eq!(ra.identity, "star-a");
    assert_eq!(rc.identity, "star-c");
    assert_eq!(ra.pairs_checked, 6);
    assert_eq!(rc.pairs_checked, 6);
    assert_eq!(ra.boundary_slack, "PASS");
    assert_eq!(rc.boundary_slack, "PASS");
    let ok = ra.pass() && rc.pass();
    println!(
        "[criterion 3] {} — star cases (a) and (c), distinguished + 5 pairs, box 2",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

/// Criterion 4: the variable-transformation table rows, the identity of the
/// composed nine-step substitution, and every chain step's I-function
/// identity at box radius 2 with two generic points.
#[test]
fn criterion_4_cycle() {
    let ranks = Ranks::D3 { n: [2, 2, 3, 4] };
    let report = check_cycle(&ranks, &spec(2, 2, Selection::All)).unwrap();
    assert!(report.rows.iter().all(|r| r.pass), "table rows");
    assert!(report.composition_is_identity);
    assert!(report.monomial_round_trip);
    for step in &report.step_reports {
        assert_eq!(step.pairs_checked, 36, "{}", step.identity);
        assert_eq!(step.boundary_slack, "PASS", "{}", step.identity);
    }
    println!(
        "[criterion 4] {} — table rows, composed identity, 10 step checks at box 2",
        report.verdict
    );
    assert!(report.pass());
}

/// Criterion 5: fixed-point cardinalities match the closed forms, all
/// families agree, and every canonical bijection is a bijection, for every
/// admissible rank tuple with N4 <= 6.
#[test]
fn criterion_5_fixed_point_combinatorics() {
    let mut tuples = Vec::new();
    for n4 in 2..=6u32 {
        for n1 in 1..n4 {
            let n2 = n4 - n1;
            for n3 in (n1.max(n2) + 1)..n4 {
                tuples.push([n1, n2, n3, n4]);
            }
        }
    }
    assert!(!tuples.is_empty());
    let families = [
        Family::X0,
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
    let mut ok = true;
    for n in &tuples {
        let ranks = Ranks::D3 { n: *n };
        let f0 = enumerate(Family::X0, &ranks).unwrap().len() as u64;
        let expect = {
            let b = |n: u32, k: u32| -> u64 {
                (0..k as u64).fold(1u64, |acc, i| acc * (n as u64 - i) / (i + 1))
            };
            b(n[3], n[2]) * b(n[2], n[0]) * b(n[2], n[1])
        };
        ok &= f0 == expect;
        for fam in families {
            let count = enumerate(fam, &ranks).unwrap().len() as u64;
            ok &= count == f0;
            ok &= closed_form_count(fam, &ranks).unwrap() == count;
        }
        for step in ALL_STEPS {
            let (src, dst) = step.families();
            let from = enumerate(src, &ranks).unwrap();
            let mut images: Vec<Vec<Vec<u32>>> = from
                .iter()
                .map(|p| iota(IotaPair::Step(step), p, &ranks).unwrap().labels)
                .collect();
            images.sort();
            images.dedup();
            ok &= images.len() == from.len(); // injective
            let mut target: Vec<Vec<Vec<u32>>> =
                enumerate(dst, &ranks).unwrap().into_iter().map(|p| p.labels).collect();
            target.sort();
            ok &= images == target; // surjective
        }
    }
    println!(
        "[criterion 5] {} — cardinalities and bijections over {} admissible tuples with N4 <= 6",
        if ok { "PASS" } else { "FAIL" },
        tuples.len()
    );
    assert!(ok);
}

fn random_cluster_quiver(rng: &mut ChaCha8Rng) -> Quiver {
    loop {
        let n_nodes = rng.random_range(2..=6u32);
        let mut nodes = Vec::new();
        for id in 1..=n_nodes {
            nodes.push(Node {
                id,
                rank: rng.random_range(0..=4),
                framed: rng.random_range(0..4u8) == 0,
            });
        }
        if nodes.iter().all(|n| n.framed) {
            continue;
        }
        let mut arrows = Vec::new();
        for i in 1..=n_nodes {
            for j in (i + 1)..=n_nodes {
                let both_framed = nodes[(i - 1) as usize].framed && nodes[(j - 1) as usize].framed;
                if both_framed || rng.random_range(0..2u8) == 0 {
                    continue;
                }
                let (src, dst) = if rng.random_range(0..2u8) == 0 { (i, j) } else { (j, i) };
                arrows.push(Arrow { src, dst, mult: rng.random_range(1..=2) });
            }
        }
        if let Ok(q) = Quiver::new(nodes, arrows, vec![]) {
            return q;
        }
    }
}

/// Criterion 6: property suites — mutation involution on 1000 random
/// cluster quivers, the sfr telescoping identity on 1000 random inputs,
/// pruned-versus-unpruned sum equality, and the prefactor-necessity guard.
#[test]
fn criterion_6_property_suites() {
    let mut ok = true;

    // mutation involution on 1000 random cluster quivers
    let mut rng = ChaCha8Rng::seed_from_u64(0xd3d3);
    let mut done = 0;
    while done < 1000 {
        let q = random_cluster_quiver(&mut rng);
        let gauge = q.gauge_ids();
        let k = gauge[rng.random_range(0..gauge.len())];
        let Ok(once) = q.mutate(k) else { continue }; // negative-rank draws skipped
        let twice = once.quiver.mutate(k).unwrap();
        ok &= twice.quiver.arrow_matrix() == q.arrow_matrix();
        ok &= twice.quiver.rank_vector() == q.rank_vector();
        done += 1;
    }
    let involution_ok = ok;

    // sfr telescoping on 1000 random (x, a)
    for _ in 0..1000 {
        let den = rng.random_range(2..60i64);
        let mut num = rng.random_range(-300..300i64);
        if num % den == 0 {
            num += 1;
        }
        let x = Rat::new(num.into(), den.into());
        let a = rng.random_range(-5..=5i64);
        ok &= sfr(&x, a + 1).unwrap() == sfr(&x, a).unwrap() * (&x + rat(a + 1));
    }

    // pruned vs unpruned I-sums on X0 (2,2,3,4) up to box radius 3
    let ranks = Ranks::D3 { n: [2, 2, 3, 4] };
    let model = family_model(Family::X0, &ranks).unwrap();
    let point = generic_point(ranks.param_names(), 11, 3);
    let totals = DegreeBox::radius(3, 3);
    let fps = enumerate(Family::X0, &ranks).unwrap();
    for fp in [&fps[0], &fps[17], &fps[35]] {
        let matched = restricted_series(&model, fp, &point, &totals, Prune::Matched).unwrap();
        let filtered = restricted_series(&model, fp, &point, &totals, Prune::Filter).unwrap();
        let unpruned = restricted_series(&model, fp, &point, &totals, Prune::None).unwrap();
        ok &= matched == filtered && filtered == unpruned;
    }

    // prefactor-necessity guard: forcing the prefactor to 1 must fail for
    // the unit- and exponential-factor cases
    let forced = |mut s: CheckSpec| {
        s.force_trivial_prefactor = true;
        s
    };
    let r = check_d3_step(
        StepId::X0Z1,
        &ranks,
        &forced(spec(2, 1, Selection::Sample(1))),
    )
    .unwrap();
    ok &= !r.pass();
    let r = check_star(
        &Ranks::Star { n: [1, 1, 2, 2, 3, 2, 2, 3, 3] },
        &forced(spec(2, 1, Selection::Distinguished)),
    )
    .unwrap();
    ok &= !r.pass();
    let r = check_building_block(1, 2, 1, &forced(spec(3, 1, Selection::All))).unwrap();
    ok &= !r.pass();
    let r = check_building_block(2, 3, 3, &forced(spec(3, 1, Selection::All))).unwrap();
    ok &= !r.pass();

    println!(
        "[criterion 6] {} — involution x1000 ({}), sfr telescoping x1000, pruned==unpruned, prefactor necessity",
        if ok { "PASS" } else { "FAIL" },
        if involution_ok { "ok" } else { "failed" },
    );
    assert!(ok);
}
