use std::f64::consts::TAU;
use std::path::Path;

use proptest::prelude::*;

use mgalerkin::basis::delta;
use mgalerkin::harness::analysis::{eoc_fit, ErrorMetric, ErrorRow, ErrorTable};
use mgalerkin::persist::{field_from_str, field_to_string};
use mgalerkin::{
    bilinear_b_oracle, canonical_modes, dof_count, evaluate_physical, from_physical, project, random_field,
    BilinearWorkspace, NormKind, Projection, SpectralField,
};

fn field(cutoff: usize, seed: u64) -> SpectralField {
    random_field(TAU, cutoff, seed, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dof_count_matches_enumeration(m in 1usize..12) {
        prop_assert_eq!(canonical_modes(m).count(), dof_count(m));
        prop_assert_eq!(dof_count(m), 4 * m * m + 4 * m);
    }

    #[test]
    fn projections_are_complementary(cutoff in 2usize..8, seed in any::<u64>(), n in 1usize..4) {
        let m = 2 * n;
        let u = field(cutoff, seed);
        let p = project(&u, Projection::Pm, m).unwrap();
        let q = project(&u, Projection::Qm, m).unwrap();
        prop_assert_eq!(&p.add(&q).unwrap(), &u);
        prop_assert_eq!(&project(&p, Projection::Pm, m).unwrap(), &p);
        prop_assert_eq!(p.dot(&q).unwrap(), 0.0);
        let pp = project(&u, Projection::Pp, m).unwrap();
        let pq = project(&u, Projection::Pq, m).unwrap();
        prop_assert_eq!(&pp.add(&pq).unwrap(), &p);
    }

    #[test]
    fn poincare_inequalities(cutoff in 1usize..7, seed in any::<u64>()) {
        let u = field(cutoff, seed);
        let lambda1 = 4.0 * std::f64::consts::PI.powi(2) / (TAU * TAU);
        prop_assert!(lambda1 * u.norm_l2().powi(2) <= u.norm_h1().powi(2) * (1.0 + 1e-12));
        prop_assert!(lambda1 * u.norm_h1().powi(2) <= u.norm_lap().powi(2) * (1.0 + 1e-12));
    }

    #[test]
    fn trilinear_is_skew(cu in 1usize..5, cv in 1usize..5, seed in any::<u64>()) {
        let mut ws = BilinearWorkspace::new();
        let u = field(cu, seed);
        let v = field(cv, seed.wrapping_add(1));
        let w = field(cv, seed.wrapping_add(2));
        let uvw = ws.trilinear(&u, &v, &w).unwrap();
        let uwv = ws.trilinear(&u, &w, &v).unwrap();
        let scale = uvw.abs().max(1.0);
        prop_assert!((uvw + uwv).abs() <= 1e-12 * scale);
        prop_assert!(ws.trilinear(&u, &v, &v).unwrap().abs() <= 1e-12 * scale);
    }

    #[test]
    fn fast_bilinear_matches_oracle(cu in 1usize..4, cv in 1usize..4, out in 1usize..7, seed in any::<u64>()) {
        let mut ws = BilinearWorkspace::new();
        let u = field(cu, seed);
        let v = field(cv, seed.wrapping_add(7));
        let fast = ws.bilinear(&u, &v, out).unwrap();
        let slow = bilinear_b_oracle(&u, &v, out).unwrap();
        prop_assert!(fast.sub(&slow).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn physical_round_trip(cutoff in 1usize..6, extra in 0usize..4, seed in any::<u64>()) {
        let u = field(cutoff, seed);
        let s = evaluate_physical(&u, 2 * cutoff + 2 + extra).unwrap();
        let back = from_physical(&s, cutoff).unwrap();
        prop_assert!(back.sub(&u).unwrap().max_abs() <= 1e-12);
        prop_assert!((s.energy_quadrature() - u.norm_l2().powi(2)).abs() <= 1e-10 * u.norm_l2().powi(2).max(1.0));
    }

    #[test]
    fn field_text_round_trip_is_bit_exact(cutoff in 1usize..6, seed in any::<u64>(), exp in -200i32..200) {
        let u = field(cutoff, seed).scaled(10f64.powi(exp));
        let back = field_from_str(&field_to_string(&u), Path::new("mem")).unwrap();
        prop_assert!(back.coeffs().iter().zip(u.coeffs()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn eoc_slope_ignores_scaling(rate in 0.5f64..4.0, scale in 1e-6f64..1e6, noise in prop::collection::vec(0.8f64..1.25, 4)) {
        let rows = |c: f64| -> ErrorTable {
            ErrorTable {
                rows: [3usize, 5, 9, 14]
                    .iter()
                    .zip(&noise)
                    .map(|(&m, &n)| {
                        let e = c * n * delta(m).powf(rate);
                        ErrorRow { m, delta: delta(m), k: 0, norm: NormKind::L2, err_t: e, err_sup: e }
                    })
                    .collect(),
            }
        };
        let a = eoc_fit(&rows(1.0), 0, NormKind::L2, ErrorMetric::AtEnd).unwrap();
        let b = eoc_fit(&rows(scale), 0, NormKind::L2, ErrorMetric::AtEnd).unwrap();
        prop_assert!((a.slope - b.slope).abs() <= 1e-9 * a.slope.abs().max(1.0));
    }

    #[test]
    fn error_table_csv_reparses_exactly(vals in prop::collection::vec((2usize..40, 0usize..4, 0.0f64..1e3), 1..10)) {
        let table = ErrorTable {
            rows: vals
                .iter()
                .map(|&(m, k, e)| ErrorRow { m, delta: delta(m), k, norm: NormKind::H1, err_t: e, err_sup: e * 1.5 })
                .collect(),
        };
        let back = ErrorTable::from_csv(&table.to_csv(), Path::new("mem")).unwrap();
        prop_assert_eq!(back, table);
    }
}
