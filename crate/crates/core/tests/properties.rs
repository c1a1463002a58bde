use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use udw_core::*;

/// `(m, Δ₁, Δ₂, P, M)` with `P` strictly inside the band and closure exact.
fn feasible() -> impl Strategy<Value = (ProcessParams, f64, f64)> {
    (0.2f64..3.0, 1.05f64..5.0, 1.05f64..5.0, 0.02f64..0.98).prop_map(|(m, f1, f2, t)| {
        let (d1, d2) = (m * f1, m * f2);
        let (k1, k2) = ((d1 * d1 - m * m).sqrt(), (d2 * d2 - m * m).sqrt());
        let p = (k1 - k2).abs() + 2.0 * k1.min(k2) * t;
        let mass_parent = ((d1 + d2).powi(2) - p * p).sqrt();
        (ProcessParams::new(m, mass_parent, p), d1, d2)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reconstructed_momenta_are_on_shell(
        (process, d1, d2) in feasible(),
        r in 0.0f64..50.0,
        alpha in 0.0f64..=PI,
        psi in 0.0f64..TAU,
    ) {
        let det = DetectorPair::new(d1, d2, r, alpha);
        for branch in Branch::ALL {
            let (di, dj) = det.gaps(branch);
            let (k1, k2) = reconstruct_momenta(&process, &det, branch, psi).unwrap();
            let e1 = process.energy(k1.norm());
            let e2 = process.energy(k2.norm());
            prop_assert!((e1 - di).abs() <= 1e-10 * di);
            prop_assert!((e2 - dj).abs() <= 1e-10 * dj);
            let sum = k1 + k2 - process.momentum_vector();
            prop_assert!(sum.norm() <= 1e-12 * process.momentum);
        }
    }

    #[test]
    fn balance_identities(
        (process, d1, d2) in feasible(),
    ) {
        let det = DetectorPair::new(d1, d2, 1.0, 0.3);
        let a = BranchKinematics::compute(&process, &det, Branch::OneTwo);
        let b = BranchKinematics::compute(&process, &det, Branch::TwoOne);
        let p = process.momentum;
        prop_assert!((a.kappa_i * a.cos_theta + b.kappa_i * b.cos_theta - p).abs() <= 1e-12 * p);
        let scale = a.kappa_i.max(b.kappa_i);
        prop_assert!((a.kappa_i * a.sin_theta - b.kappa_i * b.sin_theta).abs() <= 1e-12 * scale);
    }

    #[test]
    fn validation_is_symmetric_under_gap_swap(
        m in 0.1f64..3.0,
        d1 in 0.05f64..10.0,
        d2 in 0.05f64..10.0,
        mass_parent in 0.1f64..10.0,
        p in 0.0f64..10.0,
        r in -1.0f64..10.0,
        alpha in -0.5f64..4.0,
    ) {
        let process = ProcessParams::new(m, mass_parent, p);
        let forward = validate_params(&process, &DetectorPair::new(d1, d2, r, alpha));
        let reverse = validate_params(&process, &DetectorPair::new(d2, d1, r, alpha));
        prop_assert_eq!(forward.feasible, reverse.feasible);
        for name in ["mass", "decay_threshold", "energy_closure", "momentum_axis", "band_lower", "band_upper"] {
            prop_assert_eq!(forward.get(name).unwrap().passed, reverse.get(name).unwrap().passed);
        }
    }

    #[test]
    fn density_integrates_to_one(
        (process, d1, d2) in feasible(),
        r in 0.0f64..200.0,
        alpha in 0.0f64..=PI,
    ) {
        let ctx = DistributionContext::new(process, DetectorPair::new(d1, d2, r, alpha)).unwrap();
        let n = 1 << 14;
        let h = TAU / n as f64;
        let total: f64 = (0..n).map(|i| ctx.density(i as f64 * h)).sum::<f64>() * h;
        prop_assert!((total - 1.0).abs() <= 1e-9, "integral {}", total);
        prop_assert!((0..n).all(|i| ctx.density(i as f64 * h) >= 0.0));
    }

    #[test]
    fn filtered_density_integrates_to_one(
        (process, d1, d2) in feasible(),
        r in 0.1f64..50.0,
        alpha in 0.0f64..=PI,
        sigma in 0.1f64..3.0,
    ) {
        let ctx = DistributionContext::builder(process, DetectorPair::new(d1, d2, r, alpha))
            .mott_filter(sigma)
            .build()
            .unwrap();
        let n = 1 << 14;
        let h = TAU / n as f64;
        let total: f64 = (0..n).map(|i| ctx.density(i as f64 * h)).sum::<f64>() * h;
        prop_assert!((total - 1.0).abs() <= 1e-9, "integral {}", total);
    }
}

#[test]
fn default_set_is_feasible() {
    let report = validate_params(&ProcessParams::new(1.0, 4.0, 3.0), &DetectorPair::new(2.0, 3.0, 5.0, PI / 2.0));
    assert!(report.feasible, "{report}");
}

#[test]
fn infeasible_contexts_are_refused() {
    let err = DistributionContext::new(ProcessParams::new(1.0, 4.0, 3.5), DetectorPair::new(2.0, 3.0, 5.0, 0.5))
        .unwrap_err();
    assert!(matches!(err, Error::Infeasible(_)));
}
