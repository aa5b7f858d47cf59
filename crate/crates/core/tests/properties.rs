use proptest::prelude::*;

use rivolve_core::jump::{augmented_variation, JumpSearchConfig};
use rivolve_core::models::Toy1d;
use rivolve_core::scheme::{solve_incremental, SchemeConfig, SchemeKind};
use rivolve_core::stability::residual_stability;
use rivolve_core::trajectory::interpolate;
use rivolve_core::verify::{ve_equals_e, TolConfig};
use rivolve_core::{Correction, Metric, MinimizerConfig, RisProblem};

fn quad(mu: f64) -> Correction {
    Correction::Quadratic { mu, metric: Metric::Euclidean }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_vanishes_exactly_on_the_stable_band(t in 0.0f64..1.0, z in -3.0f64..3.0) {
        let p = Toy1d::convex_play(1.0, 2.0, 1.0);
        let r = residual_stability(&p, t, &[z], &Correction::Zero, &MinimizerConfig::default()).unwrap().residual;
        prop_assert!(r >= 0.0);
        let gap = (z - 2.0 * t).abs() - 1.0;
        if gap < -1e-3 {
            prop_assert!(r < 1e-9);
        }
        if gap > 1e-3 {
            prop_assert!(r > 0.25 * gap * gap);
        }
    }

    #[test]
    fn nodes_beat_random_competitors(mu in 0.01f64..50.0, probe in proptest::collection::vec(-0.5f64..0.5, 16)) {
        let tau = 0.01;
        let p = Toy1d::double_well(1.0, 0.1, 5.0, 30.0).with_correction(quad(mu));
        let kind = SchemeKind::ViscoEnergetic { correction: quad(mu) };
        let tr = solve_incremental(&p, &SchemeConfig::new(kind, tau, vec![-0.1])).unwrap();
        for n in (1..tr.len()).step_by(7) {
            let (t, zp) = (tr.times[n], tr.states[n - 1].z[0]);
            let f = |z: f64| {
                p.reduce(t, &[z], &mut vec![]).to_f64() + 5.0 * (z - zp).abs() + 0.5 * mu * (z - zp) * (z - zp)
            };
            let here = f(tr.states[n].z[0]);
            for &y in &probe {
                prop_assert!(here <= f(y) + 1e-9);
            }
        }
    }

    #[test]
    fn augmented_variation_is_additive(s in 0.05f64..0.95) {
        let tau = 0.01;
        let p = Toy1d::double_well(1.0, 0.1, 5.0, 30.0).with_correction(quad(1.0));
        let kind = SchemeKind::ViscoEnergetic { correction: quad(1.0) };
        let tr = solve_incremental(&p, &SchemeConfig::new(kind, tau, vec![-0.1])).unwrap();
        let it = interpolate(&tr);
        let cfg = JumpSearchConfig::default();
        let c = quad(1.0);
        let whole = augmented_variation(&p, &it, 0.0, 1.0, &c, &cfg).unwrap();
        let a = augmented_variation(&p, &it, 0.0, s, &c, &cfg).unwrap();
        let b = augmented_variation(&p, &it, s, 1.0, &c, &cfg).unwrap();
        prop_assert!((a + b - whole).abs() <= 1e-12 * (1.0 + whole));
    }
}

#[test]
fn coincidence_is_monotone_in_tolerance() {
    let tol = TolConfig { probes: 64, ..Default::default() };
    for mu in [0.01, 1.0, 100.0] {
        let p = Toy1d::double_well(1.0, 0.1, 5.0, 30.0).with_correction(quad(mu));
        let kind = SchemeKind::ViscoEnergetic { correction: quad(mu) };
        let tr = solve_incremental(&p, &SchemeConfig::new(kind, 0.01, vec![-0.1])).unwrap();
        let mut seen_true = false;
        for rho in [1e-8, 1e-6, 1e-4, 1e-2, 1.0, 10.0] {
            let eq = ve_equals_e(&p, &tr, rho, &tol).unwrap().equal;
            assert!(!(seen_true && !eq), "mu={mu} rho={rho}");
            seen_true |= eq;
        }
    }
}

#[test]
fn energy_and_variation_are_stable_under_refinement() {
    let p = Toy1d::double_well(1.0, 0.1, 5.0, 30.0).with_correction(quad(1.0));
    let stats: Vec<(f64, f64)> = [0.004, 0.002, 0.001]
        .iter()
        .map(|&tau| {
            let kind = SchemeKind::ViscoEnergetic { correction: quad(1.0) };
            let tr = solve_incremental(&p, &SchemeConfig::new(kind, tau, vec![-0.1])).unwrap();
            let e = tr.states.iter().zip(&tr.times).map(|(s, &t)| p.energy(t, &s.u, &s.z).to_f64().abs()).fold(0.0, f64::max);
            let var = augmented_variation(&p, &interpolate(&tr), 0.0, 1.0, &quad(1.0), &JumpSearchConfig::default()).unwrap();
            (e, var)
        })
        .collect();
    for w in stats.windows(2) {
        assert!((w[1].0 - w[0].0).abs() <= 0.2 * w[0].0);
        assert!((w[1].1 - w[0].1).abs() <= 0.2 * w[0].1);
    }
}
