//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use fi_core::arith;
use fi_core::gaussian::{self, GaussianInt};
use fi_core::lattice::{self, StarLattice};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn random_primitive(rng: &mut ChaCha8Rng, r: i64) -> GaussianInt {
    loop {
        let g = GaussianInt::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r));
        if !g.is_zero() && gaussian::is_primitive(g).unwrap() {
            return g;
        }
    }
}

pub fn random_squarefree(rng: &mut ChaCha8Rng, hi: u64) -> u64 {
    loop {
        let d = rng.gen_range(1..=hi);
        if arith::is_squarefree(d) {
            return d;
        }
    }
}

/// Lattices with `Δ ≤ delta_max`, from a fixed seed.
pub fn random_lattices(seed: u64, n: usize, delta_max: u64) -> Vec<StarLattice> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let l1 = random_primitive(&mut rng, 1000);
        let l2 = random_primitive(&mut rng, 1000);
        let d1 = random_squarefree(&mut rng, delta_max);
        let d2 = random_squarefree(&mut rng, delta_max);
        let lat = lattice::lattice_new(l1, d1, l2, d2).unwrap();
        if lat.delta <= delta_max {
            out.push(lat);
        }
    }
    out
}
