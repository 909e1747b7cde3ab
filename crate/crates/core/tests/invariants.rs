use adarec::enumeration::{pair_all, unpair_all, unzigzag, zigzag};
use adarec::partition::{
    cell_of, decode_cell, dist_to_cell, dist_to_colors, dist_to_levels_unscaled, encode_cell, level_of,
    representative, ColorSet, PartitionSpec,
};
use adarec::recovery::{max_norm_distance, n_of, recover_point};
use adarec::verify::band_feasibility_distance;
use adarec::widths::{pou_reconstruct, Ball, Covering};
use adarec::{Exact, Scalar};
use num_bigint::BigUint;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Exact {
    <Exact as Scalar>::ratio(n, d)
}

fn spec(m: usize, eps_den: i64) -> PartitionSpec<Exact> {
    PartitionSpec::new(m, q(1, eps_den)).unwrap()
}

fn point(m: usize) -> impl Strategy<Value = Vec<Exact>> {
    prop::collection::vec((-20_000i64..=20_000, 1i64..=997), m).prop_map(|v| v.into_iter().map(|(n, d)| q(n, d)).collect())
}

fn dim_and_point(max_m: usize) -> impl Strategy<Value = (usize, Vec<Exact>)> {
    (1..=max_m).prop_flat_map(|m| (Just(m), point(m)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn zigzag_round_trips(v in any::<i64>()) {
        prop_assert_eq!(unzigzag(zigzag(v)), v);
    }

    #[test]
    fn pairing_round_trips(values in prop::collection::vec(any::<u32>(), 1..9)) {
        let naturals: Vec<BigUint> = values.iter().map(|&v| BigUint::from(v)).collect();
        prop_assert_eq!(unpair_all(&pair_all(&naturals), naturals.len()), naturals);
    }

    #[test]
    fn recovery_meets_precision_and_budget((m, x) in dim_and_point(8), eps_den in 1i64..=50) {
        let s = spec(m, eps_den);
        let r = recover_point(&x, &s).unwrap();
        prop_assert!(max_norm_distance(&x, &r.x_hat) <= q(1, eps_den));
        prop_assert!(r.queries_used <= n_of(m));
        prop_assert_eq!(r.cell.clone(), cell_of(&s.unscale(&x).unwrap(), &s).unwrap());
    }

    #[test]
    fn own_cell_and_color_are_at_distance_zero((m, x) in dim_and_point(6)) {
        let s = spec(m, 3);
        let y = s.unscale(&x).unwrap();
        let cell = cell_of(&y, &s).unwrap();
        prop_assert_eq!(cell.level, level_of(&y, &s).unwrap());
        prop_assert_eq!(dist_to_cell(&x, &cell, &s).unwrap(), q(0, 1));
        let own = ColorSet::new([cell.color()]).unwrap();
        prop_assert_eq!(dist_to_colors(&x, &own, &s).unwrap(), q(0, 1));
    }

    #[test]
    fn cell_codes_round_trip((m, x) in dim_and_point(6)) {
        let s = spec(m, 1);
        let cell = cell_of(&x, &s).unwrap();
        let code = encode_cell(&cell);
        prop_assert_eq!(decode_cell(&code, cell.color(), &s).unwrap(), cell.clone());
        let centre = representative(&cell, &s).unwrap();
        prop_assert_eq!(cell_of(&centre, &s).unwrap(), cell);
    }

    #[test]
    fn level_distances_match_band_feasibility((m, y) in dim_and_point(4)) {
        let s = spec(m, 1);
        let closed = dist_to_levels_unscaled(&y, &s).unwrap();
        for (level, d) in closed.iter().enumerate() {
            prop_assert_eq!(d, &band_feasibility_distance(&y, level, &s).unwrap());
        }
    }

    #[test]
    fn color_distances_are_one_lipschitz(
        (m, x) in dim_and_point(5),
        shift in prop::collection::vec(-500i64..=500, 5),
        mask in 1u32..63,
    ) {
        let s = spec(m, 2);
        let colors: Vec<usize> = (1..=m + 1).filter(|r| mask & (1 << (r - 1)) != 0).collect();
        prop_assume!(!colors.is_empty());
        let set = ColorSet::new(colors).unwrap();
        let y: Vec<Exact> = x.iter().zip(&shift).map(|(v, &d)| v + q(d, 1000)).collect();
        let fx = dist_to_colors(&x, &set, &s).unwrap();
        let fy = dist_to_colors(&y, &set, &s).unwrap();
        prop_assert!((fx - fy).abs() <= max_norm_distance(&x, &y));
    }

    #[test]
    fn pou_weights_form_a_partition_of_unity(
        centres in prop::collection::vec((-5i64..=5, -5i64..=5, 1i64..=6), 1..6),
        sample in prop::collection::vec((-50i64..=50, -50i64..=50), 1..20),
        y in (-80i64..=80, -80i64..=80),
    ) {
        let sets: Vec<Ball<Exact>> = centres
            .iter()
            .map(|&(a, b, r)| Ball { center: vec![q(a, 1), q(b, 1)], radius: q(r, 1) })
            .collect();
        let reps: Vec<Vec<Exact>> = (0..sets.len() as i64).map(|i| vec![q(i, 1), q(-i, 3)]).collect();
        let cov = Covering::new(sets, reps).unwrap();
        let sample: Vec<Vec<Exact>> = sample.iter().map(|&(a, b)| vec![q(a, 10), q(b, 10)]).collect();
        let y = vec![q(y.0, 10), q(y.1, 10)];
        if let Ok(out) = pou_reconstruct(&cov, &sample, &y) {
            prop_assert!(out.weights.iter().all(|w| *w >= q(0, 1)));
            let total = out.weights.iter().fold(q(0, 1), |a, w| a + w);
            prop_assert_eq!(total, q(1, 1));
        }
    }
}
