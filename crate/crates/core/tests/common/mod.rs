#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scatlip::bounds::Upsampler;
use scatlip::signal::{Grid, Interpolation, SampledSignal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth real signal with `‖f‖∞ ≤ amp`: random coarse samples, sinc
/// upsampled and clipped.
pub fn random_signal(rng: &mut ChaCha8Rng, grid: Grid, amp: f64) -> SampledSignal {
    let up = Upsampler::new(grid, 1.0, Interpolation::Sinc).unwrap();
    let c: Vec<f64> = (0..up.coarse_len()).map(|_| rng.gen_range(-amp..=amp)).collect();
    up.apply(&c).map(|z| z.re.clamp(-amp, amp).into())
}

/// Rough complex signal, independent per sample.
pub fn white(rng: &mut ChaCha8Rng, grid: Grid, amp: f64) -> SampledSignal {
    let samples = (0..grid.n)
        .map(|_| Complex64::new(rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp)))
        .collect();
    SampledSignal::new(grid, samples).unwrap()
}

/// Random real filter supported on `[-w, w]` with discrete L¹ norm `l1`.
pub fn random_filter(rng: &mut ChaCha8Rng, grid: Grid, w: f64, l1: f64) -> SampledSignal {
    let values: Vec<f64> = grid
        .points()
        .map(|x| if x.abs() <= w { rng.gen_range(-1.0..=1.0) } else { 0.0 })
        .collect();
    let raw = SampledSignal::from_real(grid, &values).unwrap();
    raw.scale(l1 / raw.l1_norm())
}

/// Unit-modulus input aligned with `g` so that `|(f∗g)(0)| = ‖g‖₁`.
pub fn aligned(rng: &mut ChaCha8Rng, g: &SampledSignal) -> SampledSignal {
    let s = g.grid.origin_index().unwrap();
    let n = g.grid.n;
    let samples = (0..n)
        .map(|j| match (2 * s).checked_sub(j).filter(|&k| k < n).map(|k| g.samples[k]) {
            Some(z) if z.norm() > 0.0 => z.conj() / z.norm(),
            _ => Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)),
        })
        .collect();
    SampledSignal::new(g.grid, samples).unwrap()
}

pub fn small_grid() -> Grid {
    Grid::from_range(-8.0, 8.0, 0.05).unwrap()
}
