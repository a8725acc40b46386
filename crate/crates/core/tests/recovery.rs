use wl1_core::experiment::{
    generate_instance, instance_threshold, recovery_success, BlockAssignment,
};
use wl1_core::DensityProfile;

fn two_block_profile() -> DensityProfile {
    DensityProfile::two_block(0.5, 0.3).unwrap()
}

#[test]
fn unweighted_success_well_above_threshold() {
    // alpha = 0.9 at n = 128: 116 rows.
    let successes = (0..100)
        .filter(|&seed| {
            let inst =
                generate_instance(128, &two_block_profile(), BlockAssignment::Contiguous, seed)
                    .unwrap();
            recovery_success(&inst, 116, false).unwrap()
        })
        .count();
    assert!(successes >= 90, "{successes} / 100");
    // Pinned from the first run.
    assert_eq!(successes, 98);
}

#[test]
fn weighted_threshold_rarely_exceeds_unweighted() {
    let mut within = 0;
    let mut gaps = Vec::new();
    for seed in 0..100 {
        let inst = generate_instance(
            128,
            &two_block_profile(),
            BlockAssignment::Contiguous,
            1000 + seed,
        )
        .unwrap();
        let w = instance_threshold(&inst, true).unwrap();
        let u = instance_threshold(&inst, false).unwrap();
        for r in [&w, &u] {
            assert!(r.m_star >= inst.nonzeros());
            assert!(r.alpha_star >= inst.nonzeros() as f64 / 128.0);
        }
        if w.m_star <= u.m_star + 2 {
            within += 1;
        }
        gaps.push(u.alpha_star - w.alpha_star);
    }
    assert!(within >= 95, "{within} / 100");
    let k = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / k;
    let sd = (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    assert!(mean > 5.0 * sd / k.sqrt(), "mean gap {mean}, sd {sd}");
}
