//! Cross-module properties of the protocols and gain rates.

use std::f64::consts::PI;

use bellpbr::bellfn::{standardized_set, Functional};
use bellpbr::gainrates::{gain_curve, gain_spbr, optimal_gain, Sweep};
use bellpbr::lrpolytope::{LRMixture, LrPolytope};
use bellpbr::optim::OptimizerControls;
use bellpbr::protocols::{martingale_pvalue, run_simplified_pbr};
use bellpbr::quantum::{cglmp_config, chsh_config};
use bellpbr::scenario::Scenario;
use bellpbr::sim::{sample_trials, validity_exceedance, SimulationPlan};

#[test]
fn spbr_slope_tracks_the_asymptotic_rate() {
    let q = cglmp_config(3).unwrap().distribution().unwrap();
    let set = standardized_set("cglmp:3", q.scenario()).unwrap();
    let (rate, _) = gain_spbr(&q, &set, &OptimizerControls::default()).unwrap();
    let mut slope = 0.0;
    let seeds = 10;
    for seed in 0..seeds {
        let trials = sample_trials(&q, 10_000, seed).unwrap();
        let state = run_simplified_pbr(&trials, set.clone(), 154, &OptimizerControls::default()).unwrap();
        let half = &state.history[5000 - 1];
        let last = state.history.last().unwrap();
        slope += (last.log2_p - half.log2_p).abs() / 5000.0;
    }
    slope /= seeds as f64;
    assert!((slope / rate - 1.0).abs() < 0.10, "slope {slope} vs rate {rate}");
}

#[test]
fn spbr_rate_never_exceeds_the_optimal_rate() {
    let controls = OptimizerControls::default();
    for theta in [PI / 16.0, PI / 8.0, PI / 4.0] {
        let q = chsh_config(theta).unwrap().distribution().unwrap();
        let set = standardized_set("chsh,nosignaling", q.scenario()).unwrap();
        let (g, _) = gain_spbr(&q, &set, &controls).unwrap();
        let s_q = optimal_gain(&q, &controls).unwrap();
        assert!(g <= s_q + 1e-7, "θ={theta}: {g} > {s_q}");
    }
}

#[test]
fn cglmp_spbr_is_close_to_optimal_for_small_d() {
    let reports = gain_curve(&Sweep::Cglmp { dims: (3..=5).collect() }, true, &OptimizerControls::default()).unwrap();
    for r in reports {
        let s_q = r.s_q.unwrap();
        assert!(s_q - r.g_spbr <= 1e-3, "d={}: S_q={s_q}, G_sPBR={}", r.parameter, r.g_spbr);
        assert!(r.g_spbr <= s_q + 1e-7);
    }
}

#[test]
fn protocols_are_valid_at_two_hundred_trials() {
    let sc = Scenario::chsh();
    let poly = LrPolytope::new(&sc).unwrap();
    let values = poly.vertex_expectations(&Functional::chsh(&sc).unwrap().table().unwrap());
    let best = (0..poly.strategy_count()).find(|&h| (values[h] - 2.0).abs() < 1e-9).unwrap();
    let q = poly.mixture_distribution(&LRMixture::point(poly.strategy_count(), best)).unwrap();
    let mut plan = SimulationPlan::new("point", q, "chsh,nosignaling");
    plan.trials = 200;
    plan.block_size = 40;
    plan.asymptotes = false;
    plan.controls = OptimizerControls {
        tolerance: 1e-7,
        max_iterations: 5000,
        floor: 0.0,
    };
    for e in validity_exceedance(&plan, 0..1000, &[0.5, 0.1, 0.02]).unwrap() {
        assert!(e.holds(), "{e:?}");
    }
}

#[test]
fn martingale_pvalue_is_monotone_in_the_mean() {
    let mut last = 1.0;
    for k in 0..=200 {
        let mean = 2.0 + 2.0 * k as f64 / 200.0;
        let p = martingale_pvalue(mean, 100, 4.0, -4.0, 2.0).unwrap();
        assert!(p <= last + 1e-15);
        last = p;
    }
}
