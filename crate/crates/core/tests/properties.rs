mod common;

use markov_cocycles::cocycle::{basis_eval, crossing_count, eval, Alphas};
use markov_cocycles::height::{lift, random_configuration, random_partner, range_over, steep_to_flat_traced};
use markov_cocycles::interaction::{gibbs_eval, symmetrize, synth_invariant, NNInteraction};
use markov_cocycles::lattice::{boundary, make_pair, Configuration, HomoclinicPair, LatticeVector, Model, Window};
use markov_cocycles::pivot::{eval_via_chain, pivot_chain_xr, PivotChain};
use markov_cocycles::specification::theta_table;
use markov_cocycles::squareisland::{assign_types, generate, mp_eval, validate_tiles, TypeWeights};
use num_rational::Rational64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn residue() -> impl Strategy<Value = u32> {
    prop_oneof![Just(3u32), Just(5), Just(6), Just(7)]
}

fn random_pair(side: usize, r: u32, seed: u64) -> HomoclinicPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Window::centered(&[side, side]).unwrap();
    let x = random_configuration(&w, r, 40 * side, &mut rng);
    let y = random_partner(&x, 12 * side, &mut rng).unwrap();
    make_pair(x, y).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn crossing_count_matches_walk(i in 0u32..7, a in -30i64..30, b in -30i64..30, r in residue()) {
        let i = i % r;
        prop_assert_eq!(crossing_count(i, a, b, r), common::crossings(i, a, b, r));
        prop_assert_eq!(crossing_count(i, a, b, r), -crossing_count(i, b, a, r));
    }

    #[test]
    fn crossing_count_is_additive(i in 0u32..7, a in -20i64..20, k in -10i64..10, l in -10i64..10, r in residue()) {
        let i = i % r;
        let (b, c) = (a + 2 * k, a + 2 * k + 2 * l);
        prop_assert_eq!(crossing_count(i, a, c, r), crossing_count(i, a, b, r) + crossing_count(i, b, c, r));
    }

    #[test]
    fn height_change_is_twice_the_basis_sum(r in residue(), seed in any::<u64>()) {
        let p = random_pair(9, r, seed);
        let rep = basis_eval(&p).unwrap();
        prop_assert_eq!(rep.hat, 2 * rep.basis.iter().sum::<i64>());
        prop_assert_eq!(rep.hat, common::height_change(&p.x, &p.y));
    }

    #[test]
    fn cocycle_is_shift_covariant(r in residue(), seed in any::<u64>(), v in (-5i64..5, -5i64..5)) {
        let p = random_pair(7, r, seed);
        let v = LatticeVector::from([v.0, v.1]);
        let q = make_pair(p.x.shift(&v), p.y.shift(&v)).unwrap();
        prop_assert_eq!(basis_eval(&p).unwrap(), basis_eval(&q).unwrap());
    }

    #[test]
    fn cocycle_only_sees_the_difference_region(r in residue(), seed in any::<u64>()) {
        // A pair on a 7x7 crop, pasted into an 11x11 configuration.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let big_w = Window::centered(&[11, 11]).unwrap();
        let big = random_configuration(&big_w, r, 500, &mut rng);
        let crop_w = Window::centered(&[7, 7]).unwrap();
        let crop = Configuration::from_fn(crop_w.clone(), r, |s| big.get(s).unwrap() as i64);
        let partner = random_partner(&crop, 80, &mut rng).unwrap();
        let mut big2 = big.clone();
        for s in crop_w.sites() {
            big2.set(&s, partner.get(&s).unwrap()).unwrap();
        }
        let small = basis_eval(&make_pair(crop, partner).unwrap()).unwrap();
        let large = basis_eval(&make_pair(big, big2).unwrap()).unwrap();
        prop_assert_eq!(small, large);
    }

    #[test]
    fn chains_are_valid_and_minimal(r in residue(), seed in any::<u64>()) {
        let p = random_pair(7, r, seed);
        let c = pivot_chain_xr(&p).unwrap();
        prop_assert_eq!(2 * c.len() as i64, common::height_distance(&p.x, &p.y));
        for s in &c.steps {
            prop_assert!(common::is_xr(s));
        }
        for (k, pair) in c.steps.windows(2).enumerate() {
            let diff = pair[0].diff_indices(&pair[1]);
            prop_assert_eq!(diff.len(), 1);
            prop_assert_eq!(pair[0].window.site(diff[0]), c.pivots[k].clone());
        }
    }

    #[test]
    fn chain_sum_equals_direct_value(r in prop_oneof![Just(3u32), Just(5)], seed in any::<u64>(), coeffs in prop::collection::vec(-3.0f64..3.0, 5)) {
        let p = random_pair(7, r, seed);
        let a = Alphas::new(coeffs[..r as usize].to_vec()).unwrap();
        let c = pivot_chain_xr(&p).unwrap();
        let direct = eval(&a, &p).unwrap();
        prop_assert!((eval_via_chain(&a, &c).unwrap() - direct).abs() < 1e-9);
        let rev = PivotChain {
            steps: c.steps.iter().rev().cloned().collect(),
            pivots: c.pivots.iter().rev().cloned().collect(),
        };
        prop_assert!((eval_via_chain(&a, &rev).unwrap() + direct).abs() < 1e-9);
    }

    #[test]
    fn invariant_interaction_reproduces_gibbs_cocycles(seed in any::<u64>(), nums in prop::collection::vec(-6i64..6, 4)) {
        let mut coeffs: Vec<Rational64> = nums.iter().map(|&n| Rational64::new(n, 4)).collect();
        let s: Rational64 = coeffs.iter().sum();
        coeffs.push(-s);
        let a = Alphas::new(coeffs).unwrap();
        let phi = synth_invariant(&a, 2).unwrap();
        let p = random_pair(7, 5, seed);
        prop_assert_eq!(gibbs_eval(&phi, &p).unwrap(), eval(&a, &p).unwrap());
    }

    #[test]
    fn symmetrize_keeps_the_cocycle(r in prop_oneof![Just(3u32), Just(5)], seed in any::<u64>(), nums in prop::collection::vec(-6i64..6, 25)) {
        let mut phi = NNInteraction::<Rational64>::zero(r, 2);
        let mut vals = nums.iter().map(|&n| Rational64::new(n, 3));
        for a in 0..r {
            phi.set_site(a, vals.next().unwrap());
            for j in 0..2 {
                phi.set_edge(j, a, (a + 1) % r, vals.next().unwrap());
                phi.set_edge(j, (a + 1) % r, a, vals.next().unwrap());
            }
        }
        let sym = symmetrize(&phi).unwrap();
        for a in 0..r {
            prop_assert_eq!(sym.site(a), Rational64::from(0));
            prop_assert_eq!(sym.edge(0, a, (a + 1) % r), sym.edge(1, (a + 1) % r, a));
        }
        let p = random_pair(7, r, seed);
        prop_assert_eq!(gibbs_eval(&sym, &p).unwrap(), gibbs_eval(&phi, &p).unwrap());
    }

    #[test]
    fn flattening_drops_the_range_by_two(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Window::centered(&[9, 9]).unwrap();
        // A tilted plane plus random bumps has boundary range well above 2.
        let tilt = Configuration::from_fn(w.clone(), 5, |s| s.0[0] + s.0[1]);
        let x = random_partner(&tilt, 200, &mut rng).unwrap();
        let hf = lift(&x, &w.site(0), x.cells[0] as i64).unwrap();
        let region: Vec<LatticeVector> = Window::centered(&[5, 5]).unwrap().sites().collect();
        let bd = boundary(&region);
        let before = range_over(&hf, &bd).unwrap();
        let (flat, steps) = steep_to_flat_traced(&hf, &region).unwrap();
        prop_assert_eq!(range_over(&flat, &region).unwrap().range, before.range - 2);
        for s in &bd {
            prop_assert_eq!(flat.get(s), hf.get(s));
        }
        prop_assert!(steps.iter().all(|s| s.delta.abs() == 2 && region.contains(&s.site)));
        prop_assert!(Model::Xr.validate(&flat.residues()).unwrap().valid);
    }

    #[test]
    fn theta_depends_only_on_the_boundary(seed in any::<u64>(), coeffs in prop::collection::vec(-2.0f64..2.0, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Window::centered(&[5, 5]).unwrap();
        let x = random_configuration(&w, 3, 100, &mut rng);
        let y = random_partner(&x, 100, &mut rng).unwrap();
        // x and y agree on the collar; both frames give the 3x3 centre the same boundary.
        let mut y2 = y.clone();
        let centre: Vec<LatticeVector> = Window::centered(&[3, 3]).unwrap().sites().collect();
        for s in boundary(&centre) {
            y2.set(&s, x.get(&s).unwrap()).unwrap();
        }
        prop_assume!(Model::Xr.validate(&y2).unwrap().valid);
        let a = Alphas::new(coeffs).unwrap();
        let tx = theta_table(&a, &x, &centre).unwrap();
        let ty = theta_table(&a, &y2, &centre).unwrap();
        prop_assert_eq!(&tx.set.patterns, &ty.set.patterns);
        for (p, q) in tx.probabilities.iter().zip(&ty.probabilities) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_tilings_validate(seed in any::<u64>(), density in 0.0f64..0.8) {
        let g = generate(&Window::centered(&[21, 21]).unwrap(), density, seed, None).unwrap();
        prop_assert!(validate_tiles(&g).valid);
        let y = assign_types(&g, &TypeWeights::uniform(0.4), seed).unwrap();
        prop_assert!(validate_tiles(&y).valid);
        prop_assert_eq!(y.forget_types(), g);
    }

    #[test]
    fn mp_is_antisymmetric(seed in any::<u64>()) {
        let g = generate(&Window::centered(&[21, 21]).unwrap(), 0.4, seed, None).unwrap();
        let w = TypeWeights::uniform(0.3);
        let y = assign_types(&g, &w, seed).unwrap();
        let y2 = assign_types(&g, &w, seed ^ 0x5555).unwrap();
        prop_assert_eq!(mp_eval(&y, &y2, &w).unwrap(), -mp_eval(&y2, &y, &w).unwrap());
    }
}
