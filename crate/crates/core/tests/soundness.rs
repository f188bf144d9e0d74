mod common;

use common::{random_signal, rng};
use rand::Rng;
use scatlip::bounds::*;
use scatlip::builtin::{bump_network, haar_network};
use scatlip::network::NetworkGraph;
use scatlip::propagate::Propagator;
use scatlip::signal::{Grid, SampledSignal};

fn pair(r: &mut rand_chacha::ChaCha8Rng, g: &NetworkGraph, amp: f64, k: usize) -> (SampledSignal, SampledSignal) {
    if k.is_multiple_of(2) {
        (random_signal(r, g.grid, amp), random_signal(r, g.grid, amp))
    } else {
        // rough real pairs reach the high-frequency filters
        let mut rough = || {
            let v: Vec<f64> = (0..g.grid.n).map(|_| r.gen_range(-amp..=amp)).collect();
            SampledSignal::from_real(g.grid, &v).unwrap()
        };
        (rough(), rough())
    }
}

fn check(g: &NetworkGraph, amp: f64, seed: u64) {
    let bessel = lipschitz_bessel_product(g, 4).unwrap();
    let backprop = lipschitz_backprop_l1(g).unwrap();
    assert!(bessel.valid && backprop.valid);
    let prop = Propagator::new(g).unwrap();
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let (f, h) = pair(&mut r, g, amp, k);
        let d = f.sub(&h).unwrap().l2_norm();
        let phi = prop.feature_distance(&f, &h).unwrap();
        worst = worst.max(phi / d);
        assert!(phi <= bessel.value * d * (1.0 + 1e-3), "pair {k}: {phi} > {} · {d}", bessel.value);
        assert!(phi <= backprop.value * d * (1.0 + 1e-3), "pair {k}");
    }
    assert!(worst > 0.0);
}

#[test]
fn haar_upper_bounds_hold_on_random_pairs() {
    check(&haar_network(Grid::default()).unwrap(), 3.0, 11);
}

#[test]
fn bump_upper_bounds_hold_on_random_pairs() {
    check(&bump_network(Grid::default()).unwrap(), 1.0, 12);
}

#[test]
fn estimators_are_ordered_on_both_networks() {
    for g in [haar_network(Grid::default()).unwrap(), bump_network(Grid::default()).unwrap()] {
        let mc = lipschitz_monte_carlo(&g, &McConfig { iterations: 200, seed: 3, ..McConfig::default() }).unwrap();
        let bessel = lipschitz_bessel_product(&g, 4).unwrap();
        let backprop = lipschitz_backprop_l1(&g).unwrap();
        assert!(mc.value <= bessel.value + 1e-3, "{} {}", mc.value, bessel.value);
        assert!(bessel.value <= backprop.value + 1e-3);
    }
}
