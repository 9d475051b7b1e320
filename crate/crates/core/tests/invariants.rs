//! Property tests for the structural invariants: layout algebra,
//! transfer-matrix symmetries, unitarity, and closed-form/oracle
//! agreement on random draws.

use proptest::prelude::*;

use svc_scatter::engine::transmission;
use svc_scatter::geometry::{
    build_layout, q_pochhammer, segment_length, spacing, PotentialSpec,
};
use svc_scatter::oracle::{brute_force_transmission, chain_from_layout};
use svc_scatter::transfer::{barrier_matrix, wave_numbers};

fn arb_spec(max_stage: u32) -> impl Strategy<Value = PotentialSpec> {
    (
        1.2f64..5.0,
        -0.75f64..2.0,
        0..=max_stage,
        0.5f64..50.0,
        1.0f64..20.0,
    )
        .prop_map(|(rho, n, stage, v, l)| PotentialSpec::new(rho, n, stage, v, l).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]
    #[test]
    fn barrier_matrix_is_unimodular_and_symmetric(
        e in 1e-3f64..400.0,
        v in -50.0f64..50.0,
        w in 0.0f64..20.0,
    ) {
        let m = barrier_matrix(e, v, w).unwrap();
        // the analytic det is exactly 1; the float residual comes from
        // cancellation between products of size ||M||^2 (huge in deep
        // tunneling), so the bound scales accordingly
        let scale = m.max_norm().powi(2).max(1.0);
        prop_assert!((m.det() - 1.0).norm() < 1e-12 * scale);
        // real V, real k: time-reversal pairs the matrix elements
        prop_assert!((m.m22 - m.m11.conj()).norm() < 1e-12 * m.m11.norm().max(1.0));
        prop_assert!((m.m21 - m.m12.conj()).norm() < 1e-12 * m.m12.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]
    #[test]
    fn eps_identity(e in 1e-3f64..400.0, v in -50.0f64..50.0) {
        prop_assume!((e - v).abs() > 1e-9);
        let wn = wave_numbers(e, v).unwrap();
        let lhs = wn.eps_plus * wn.eps_plus - wn.eps_minus * wn.eps_minus;
        prop_assert!((lhs - 1.0).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]
    #[test]
    fn transmission_is_unitary_and_in_range(spec in arb_spec(10), frac in 0.01f64..9.0) {
        let e = frac * spec.height.max(0.1);
        let p = transmission(&spec, e).unwrap();
        prop_assert!(p.t > 0.0 && p.t <= 1.0);
        prop_assert!(p.r >= 0.0 && p.r <= 1.0);
        prop_assert!((p.t + p.r - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]
    #[test]
    fn segment_length_recursion(spec in arb_spec(12)) {
        // product form at stage g equals one more halving-and-removal
        // step applied to stage g - 1
        for g in 1..=spec.stage {
            let prev = segment_length(&spec, g - 1).unwrap();
            let step = 0.5 * prev * (1.0 - spec.removal_fraction(g));
            let direct = segment_length(&spec, g).unwrap();
            prop_assert!((step - direct).abs() <= 1e-12 * direct.abs());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]
    #[test]
    fn n_equals_one_reduces_to_q_pochhammer(rho in 1.2f64..5.0, stage in 0u32..=12, l in 1.0f64..20.0) {
        let spec = PotentialSpec::new(rho, 1.0, stage, 10.0, l).unwrap();
        let general = segment_length(&spec, stage).unwrap();
        let qp = l / 2f64.powi(stage as i32) * q_pochhammer(1.0 / rho, 1.0 / rho, stage);
        prop_assert!((general - qp).abs() <= 1e-12 * qp);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn layout_is_mirror_symmetric(spec in arb_spec(8)) {
        let layout = build_layout(&spec).unwrap();
        let l = spec.span;
        let m = layout.intervals.len();
        // each stage adds one rounding to the endpoint arithmetic, so
        // the asymmetry budget grows linearly with G
        let tol = 2e-15 * l * (spec.stage as f64 + 1.0);
        for (i, iv) in layout.intervals.iter().enumerate() {
            let mirror = &layout.intervals[m - 1 - i];
            prop_assert!((iv.start - (l - mirror.end)).abs() <= tol);
            prop_assert!((iv.end - (l - mirror.start)).abs() <= tol);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn gaps_shrink_with_stage_for_nonnegative_n(
        rho in 1.2f64..5.0,
        n in 0.0f64..2.0,
        stage in 2u32..=12,
    ) {
        let spec = PotentialSpec::new(rho, n, stage, 10.0, 10.0).unwrap();
        let layout = build_layout(&spec.clone()).unwrap();
        for g in 2..=stage {
            prop_assert!(layout.gap(g).unwrap() < layout.gap(g - 1).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn spacing_dual_forms_agree(spec in arb_spec(10)) {
        // spacing() cross-checks its recursive and telescoped forms
        // internally and errors on disagreement
        for p in 1..=spec.stage {
            prop_assert!(spacing(&spec, p).is_ok());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]
    #[test]
    fn closed_form_matches_oracle(spec in arb_spec(5), frac in 0.01f64..9.0) {
        let e = frac * spec.height.max(0.1);
        let layout = build_layout(&spec).unwrap();
        let chain = chain_from_layout(&layout).unwrap();
        let closed = transmission(&spec, e).unwrap().t;
        let brute = brute_force_transmission(&chain, spec.height, e).unwrap().t;
        prop_assert!((closed - brute).abs() < 1e-9);
    }
}
