use qdual_core::quiver::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cluster_quiver(rng: &mut ChaCha8Rng) -> Quiver {
    loop {
        let n_nodes = rng.random_range(2..=6u32);
        let mut nodes = Vec::new();
        for id in 1..=n_nodes {
            nodes.push(Node { id, rank: rng.random_range(0..=4), framed: rng.random_range(0..4u8) == 0 });
        }
        if nodes.iter().all(|n| n.framed) { continue; }
        let mut arrows = Vec::new();
        for i in 1..=n_nodes {
            for j in (i + 1)..=n_nodes {
                let both = nodes[(i-1) as usize].framed && nodes[(j-1) as usize].framed;
                if both || rng.random_range(0..2u8) == 0 { continue; }
                let (src, dst) = if rng.random_range(0..2u8) == 0 { (i, j) } else { (j, i) };
                arrows.push(Arrow { src, dst, mult: rng.random_range(1..=2) });
            }
        }
        if let Ok(q) = Quiver::new(nodes, arrows, vec![]) { return q; }
    }
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd3d3);
    let mut done = 0;
    while done < 1000 {
        let q = random_cluster_quiver(&mut rng);
        let gauge = q.gauge_ids();
        let k = gauge[rng.random_range(0..gauge.len())];
        let Ok(once) = q.mutate(k) else { continue };
        match once.quiver.mutate(k) {
            Ok(_) => {}
            Err(e) => {
                println!("FAILED second mutation at k={}: {}", k, e);
                println!("original:\n{}", q);
                println!("after first (status {:?}):\n{}", once.potential_status, once.quiver);
                return;
            }
        }
        done += 1;
    }
    println!("all {} ok", done);
}
