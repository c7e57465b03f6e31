use fi_core::arith::{self, FixedSum};
use fi_core::buchstab::{self, BuchstabInterpolant};
use fi_core::expsum;
use fi_core::gaussian::{self, GaussianInt};
use fi_core::lattice;
use fi_core::local;
use fi_core::primes;
use fi_core::sieve;
use fi_core::ternary::{self, FiPrimeSet, ScanStrategy};
use proptest::prelude::*;
use std::sync::OnceLock;

mod common;

fn gauss(r: i64) -> impl Strategy<Value = GaussianInt> {
    (-r..=r, -r..=r).prop_map(|(a, b)| GaussianInt::new(a, b))
}

fn primitive(r: i64) -> impl Strategy<Value = GaussianInt> {
    gauss(r).prop_filter("primitive", |g| !g.is_zero() && gaussian::is_primitive(*g).unwrap())
}

fn squarefree(hi: u64) -> impl Strategy<Value = u64> {
    (1..=hi).prop_filter("squarefree", |&d| arith::is_squarefree(d))
}

fn lattice_small() -> impl Strategy<Value = lattice::StarLattice> {
    (primitive(500), squarefree(60), primitive(500), squarefree(60))
        .prop_map(|(l1, d1, l2, d2)| lattice::lattice_new(l1, d1, l2, d2).unwrap())
}

fn fi_set() -> &'static FiPrimeSet {
    static SET: OnceLock<FiPrimeSet> = OnceLock::new();
    SET.get_or_init(|| FiPrimeSet::new(200_000).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn star_is_symmetric(m in gauss(1 << 20), l in gauss(1 << 20)) {
        prop_assert_eq!(gaussian::star_wide(m, l), gaussian::star_wide(l, m));
    }

    #[test]
    fn norm_is_multiplicative(m in gauss(1 << 15), l in gauss(1 << 15)) {
        prop_assert_eq!(m.checked_mul(l).unwrap().norm(), m.norm() * l.norm());
    }

    #[test]
    fn annulus_matches_gauss_circle(r in 0u64..=10_000) {
        let s = arith::isqrt(r) as i64;
        let brute: i64 = (-s..=s).map(|a| 2 * arith::isqrt(r - (a * a) as u64) as i64 + 1).sum::<i64>() - 1;
        prop_assert_eq!(gaussian::enumerate_annulus(0, r).unwrap().len() as i64, brute);
    }

    #[test]
    fn xi_is_periodic_in_a(q in 1u64..5000, a in -10_000i64..10_000) {
        prop_assert_eq!(local::xi(q, a).unwrap(), local::xi(q, a + q as i64).unwrap());
    }

    #[test]
    fn xi_is_multiplicative(q1 in 1u64..100, q2 in 1u64..100, a in 0i64..100_000) {
        prop_assume!(num_integer::gcd(q1, q2) == 1);
        let lhs = local::xi_brute_force(q1 * q2, a).unwrap();
        prop_assert_eq!(lhs, local::xi(q1, a).unwrap() * local::xi(q2, a).unwrap());
    }

    #[test]
    fn decompositions_are_valid(n in 2u64..10_000_000) {
        for d in primes::fi_decompositions(n) {
            prop_assert!(d.k >= 1 && arith::is_prime_u64(d.l));
            prop_assert_eq!(d.k * d.k + d.l * d.l, n);
        }
        prop_assert_eq!(primes::is_fi_prime(n), arith::is_prime_u64(n) && !primes::fi_decompositions(n).is_empty());
    }

    #[test]
    fn fixed_sum_is_order_independent(mut v in prop::collection::vec(-1e6f64..1e6, 1..200), seed in any::<u64>()) {
        let mut a = FixedSum::default();
        v.iter().for_each(|&t| a.add(t));
        let k = (seed % v.len() as u64) as usize;
        v.rotate_left(k);
        v.reverse();
        let mut b = FixedSum::default();
        v.iter().for_each(|&t| b.add(t));
        prop_assert_eq!(a.value().to_bits(), b.value().to_bits());
    }

    #[test]
    fn buchstab_derivative_relation(u in 2.0f64..6.0) {
        prop_assume!((u - u.round()).abs() > 1e-3);
        let b = buchstab::default_buchstab();
        let h = 1e-5;
        let fd = (b.eval(u + h).unwrap() - b.eval(u - h).unwrap()) / (2.0 * h);
        let rel = (b.eval(u - 1.0).unwrap() - b.eval(u).unwrap()) / u;
        prop_assert!((fd - rel).abs() <= 1e-4 * rel.abs().max(1e-3), "u={} fd={} rel={}", u, fd, rel);
    }

    #[test]
    fn buchstab_grid_halving(u in 0.0f64..6.0) {
        static HALF: OnceLock<BuchstabInterpolant> = OnceLock::new();
        let half = HALF.get_or_init(|| BuchstabInterpolant::new(5e-5, 10.0).unwrap());
        let d = (buchstab::default_buchstab().eval(u).unwrap() - half.eval(u).unwrap()).abs();
        prop_assert!(d < 1e-6, "u={} diff={}", u, d);
    }

    #[test]
    fn sieve_weights_are_restricted_mobius(level in 20f64..5e4, beta in prop::sample::select(vec![2.0, 10.0]), hi in 3f64..60.0) {
        prop_assume!(hi < level);
        let w = sieve::beta_sieve_weights(level, beta, 0.0, hi).unwrap();
        for s in [&w.plus, &w.minus] {
            prop_assert_eq!(s.weight(1), 1);
            for (&d, &lam) in &s.materialize(sieve::WEIGHT_CAP).unwrap() {
                prop_assert!((d as f64) < level && lam.abs() <= 1);
                prop_assert_eq!(lam, arith::mobius(d));
                prop_assert!(arith::distinct_prime_factors(d).iter().all(|&p| (p as f64) < hi));
            }
        }
    }

    #[test]
    fn reduced_basis_invariants(lat in lattice_small()) {
        let b = lattice::reduced_basis(&lat).unwrap();
        prop_assert!(lat.contains(b.b1) && lat.contains(b.b2));
        prop_assert_eq!(b.det().unsigned_abs(), lat.delta as u128);
        prop_assert!(b.b1.norm() <= b.b2.norm());
        prop_assert!(3 * b.b1.norm() <= 4 * lat.delta as u128);
        prop_assert_eq!(b.b1.norm(), lattice::brute_force_shortest(&lat).unwrap());
        prop_assert_eq!(lattice::brute_force_index(&lat).unwrap(), lat.delta);
    }

    #[test]
    fn type2_paths_agree(lat in lattice_small(), m in 0u64..200_000, width in 1u64..200_000, xi in 0f64..1.0) {
        let s = expsum::type2_lattice_sum(xi, &lat, m, m + width).unwrap();
        prop_assert_eq!(s.value, s.direct);
    }

    #[test]
    fn s0_bound(gamma in -5f64..5.0, n in 0u64..1_000_000) {
        let d = expsum::dist_to_int(gamma);
        let bound = if d == 0.0 { n as f64 } else { (n as f64).min(0.5 / d) };
        prop_assert!(expsum::s0(gamma, n).norm() <= bound * (1.0 + 1e-9) + 1e-9);
    }

    #[test]
    fn min_sum_classical_bound(q in 1u64..=1000, a_seed in any::<u64>(), j in 1u64..100_000, k in 1f64..1e5) {
        let a = (0..q).map(|t| (a_seed + t) % q).find(|&a| num_integer::gcd(a, q) == 1).unwrap() as i64;
        let v = expsum::min_sum_rational(a, q, j, k, 1).unwrap();
        prop_assert!(v <= 8.0 * expsum::min_sum_bound(q, j, k));
    }

    #[test]
    fn witnesses_validate(x in 0u64..50_000) {
        let x = 4 * x + 3;
        if let Some(w) = ternary::find_representation(x, fi_set()).unwrap() {
            prop_assert!(w.validate());
            prop_assert_eq!(w.x, x);
            for p in [w.p1, w.p2, w.p3] {
                prop_assert!(primes::is_fi_prime(p) && p % 4 == 1);
            }
        } else {
            prop_assert!(x <= 43);
        }
    }

    #[test]
    fn parseval_gate(vals in prop::collection::vec(-10f64..10.0, 1..400), extra in 0usize..100) {
        let grid = 4 * vals.len() + extra;
        let m = ternary::lq_moment_values(&vals, 2.0, grid).unwrap();
        prop_assert!((m.moment - m.l2).abs() <= 0.01 * m.l2 + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scan_strategies_agree(limit in 3u64..2000) {
        let t = ternary::scan_exceptions_with(limit, ScanStrategy::TwoPointer).unwrap();
        prop_assert_eq!(&t, &ternary::scan_exceptions_with(limit, ScanStrategy::Brute).unwrap());
        prop_assert_eq!(&t, &ternary::scan_exceptions_with(limit, ScanStrategy::Bitset).unwrap());
    }

    #[test]
    fn pan_inequality_at_random_scales(e in 8f64..20.0, seed in any::<u64>()) {
        let p = sieve::MajorantParams::new(10f64.powf(e)).unwrap();
        let top = p.x.sqrt().min(1e7) as u64;
        let l = 1 + seed % top;
        prop_assume!(arith::is_squarefree(l));
        prop_assert!(sieve::pan_inequality_check(l, &p).unwrap());
    }

    #[test]
    fn lattices_from_shared_generator_have_index_delta(seed in any::<u64>()) {
        for lat in common::random_lattices(seed, 5, 300) {
            prop_assert_eq!(lattice::brute_force_index(&lat).unwrap(), lat.delta);
        }
    }
}
