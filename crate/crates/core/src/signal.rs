//! Uniformly sampled 1-D signals, their continuous-convention Fourier
//! transform, linear convolution, dilation and deformation.
//!
//! The Fourier convention is `f̂(ω) = ∫ f(x) e^{-2πiωx} dx`, approximated by a
//! Riemann sum with weight `Δ` and a phase correction for the grid origin, so
//! spectra approximate the continuous transform rather than the bare DFT.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: Grid, right: Grid },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dilation factor must be positive, got {0}")]
    InvalidDilation(f64),
    #[error("{0} must be real-valued (max imaginary part {1:e})")]
    NotReal(&'static str, f64),
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("grid {0} does not contain the origin at a sample point; linear convolution needs it")]
    NotOriginAligned(Grid),
}

/// A uniform grid `x_min + kΔ`, `k = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub step: f64,
    pub n: usize,
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}] step {} ({} samples)",
            self.x_min,
            self.x_max(),
            self.step,
            self.n
        )
    }
}

impl Default for Grid {
    /// `[-20, 20]` with `Δ = 0.025`, 1601 samples.
    fn default() -> Self {
        Grid {
            x_min: -20.0,
            step: 0.025,
            n: 1601,
        }
    }
}

impl Grid {
    pub fn new(x_min: f64, step: f64, n: usize) -> Result<Self, SignalError> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(SignalError::InvalidGrid(format!("step must be > 0, got {step}")));
        }
        if n < 2 {
            return Err(SignalError::InvalidGrid(format!("need at least 2 samples, got {n}")));
        }
        if !x_min.is_finite() {
            return Err(SignalError::InvalidGrid("x_min is not finite".into()));
        }
        Ok(Grid { x_min, step, n })
    }

    /// Builds the grid from its end points; `(x_max - x_min) / step` must be
    /// an integer up to rounding noise.
    pub fn from_range(x_min: f64, x_max: f64, step: f64) -> Result<Self, SignalError> {
        if !(x_max > x_min) {
            return Err(SignalError::InvalidGrid(format!(
                "x_max ({x_max}) must exceed x_min ({x_min})"
            )));
        }
        if !(step > 0.0) {
            return Err(SignalError::InvalidGrid(format!("step must be > 0, got {step}")));
        }
        let cells = (x_max - x_min) / step;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-6 * rounded.max(1.0) {
            return Err(SignalError::InvalidGrid(format!(
                "range [{x_min}, {x_max}] is not a whole number of steps of {step}"
            )));
        }
        Grid::new(x_min, step, rounded as usize + 1)
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + (self.n - 1) as f64 * self.step
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.x(k))
    }

    /// Identity up to floating noise in the parameters.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n
            && (self.step - other.step).abs() <= 1e-12 * self.step
            && (self.x_min - other.x_min).abs() <= 1e-9 * self.step
    }

    pub fn check_same(&self, other: &Grid) -> Result<(), SignalError> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(SignalError::GridMismatch {
                left: *self,
                right: *other,
            })
        }
    }

    /// Index of the sample at `x = 0`, if the origin is a grid point.
    pub fn origin_index(&self) -> Option<usize> {
        let s = -self.x_min / self.step;
        let r = s.round();
        if (s - r).abs() < 1e-6 && r >= 0.0 && (r as usize) < self.n {
            Some(r as usize)
        } else {
            None
        }
    }

    /// Frequency grid of the transform: `n` points with spacing `1/(nΔ)`,
    /// centred so that index `⌊n/2⌋` is `ω = 0`.
    pub fn conjugate(&self) -> Grid {
        let dw = 1.0 / (self.n as f64 * self.step);
        Grid {
            x_min: -((self.n / 2) as f64) * dw,
            step: dw,
            n: self.n,
        }
    }

    /// Fractional sample index of position `x`.
    pub fn index_of(&self, x: f64) -> f64 {
        (x - self.x_min) / self.step
    }
}

/// Complex samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub grid: Grid,
    pub samples: Vec<Complex64>,
}

impl SampledSignal {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self, SignalError> {
        if samples.len() != grid.n {
            return Err(SignalError::LengthMismatch {
                expected: grid.n,
                got: samples.len(),
            });
        }
        Ok(SampledSignal { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Self {
        SampledSignal {
            grid,
            samples: vec![ZERO; grid.n],
        }
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self, SignalError> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        SampledSignal {
            grid,
            samples: grid.points().map(f).collect(),
        }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Discrete delta at the origin: one sample of height `1/Δ`.
    pub fn delta(grid: Grid) -> Result<Self, SignalError> {
        let k = grid.origin_index().ok_or(SignalError::NotOriginAligned(grid))?;
        let mut s = Self::zeros(grid);
        s.samples[k] = Complex64::new(1.0 / grid.step, 0.0);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.grid.step * self.samples.iter().map(|z| z.norm()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.step * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest absolute imaginary part; 0 for real signals.
    pub fn max_imag(&self) -> f64 {
        self.samples.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &SampledSignal) -> Result<SampledSignal, SignalError> {
        self.grid.check_same(&other.grid)?;
        Ok(SampledSignal {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &SampledSignal) -> Result<SampledSignal, SignalError> {
        self.grid.check_same(&other.grid)?;
        Ok(SampledSignal {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> SampledSignal {
        SampledSignal {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z * c).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> SampledSignal {
        SampledSignal {
            grid: self.grid,
            samples: self.samples.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Value at an arbitrary position, zero outside the sampled interval.
    pub fn sample_at(&self, x: f64, mode: Interpolation) -> Complex64 {
        interpolate(&self.samples, self.grid.index_of(x), mode)
    }
}

/// Values of a transform on a frequency grid. `time_grid` remembers the grid
/// the signal lived on so the inverse can restore the origin phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freq_grid: Grid,
    pub time_grid: Grid,
    pub values: Vec<Complex64>,
}

impl Spectrum {
    /// Evaluates a closed-form spectrum on the conjugate grid of `time_grid`.
    pub fn from_fn(time_grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let freq_grid = time_grid.conjugate();
        Spectrum {
            freq_grid,
            time_grid,
            values: freq_grid.points().map(f).collect(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.freq_grid.step * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.freq_grid.points()
    }
}

fn phase(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

/// Continuous-convention transform on the conjugate grid.
pub fn fourier_transform(f: &SampledSignal) -> Spectrum {
    let grid = f.grid;
    let n = grid.n;
    let freq_grid = grid.conjugate();
    let h = n / 2;
    let mut buf = f.samples.clone();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let values = (0..n)
        .map(|k| {
            let w = freq_grid.x(k);
            let idx = (k + n - h) % n;
            buf[idx] * phase(-2.0 * PI * w * grid.x_min) * grid.step
        })
        .collect();
    Spectrum {
        freq_grid,
        time_grid: grid,
        values,
    }
}

/// Transform after zero-padding the signal to `factor·n` samples on the
/// right, which samples the same continuous spectrum `factor` times denser.
pub fn fourier_transform_padded(f: &SampledSignal, factor: usize) -> Spectrum {
    let factor = factor.max(1);
    let grid = Grid {
        x_min: f.grid.x_min,
        step: f.grid.step,
        n: f.grid.n * factor,
    };
    let mut samples = f.samples.clone();
    samples.resize(grid.n, ZERO);
    fourier_transform(&SampledSignal { grid, samples })
}

pub fn inverse_fourier_transform(s: &Spectrum) -> SampledSignal {
    let grid = s.time_grid;
    let n = grid.n;
    let h = n / 2;
    let mut buf = vec![ZERO; n];
    for (k, v) in s.values.iter().enumerate() {
        let w = s.freq_grid.x(k);
        buf[(k + n - h) % n] = v * phase(2.0 * PI * w * grid.x_min);
    }
    FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut buf);
    let dw = s.freq_grid.step;
    SampledSignal {
        grid,
        samples: buf.into_iter().map(|z| z * dw).collect(),
    }
}

/// Linear convolution scaled by `Δ`, truncated to the common grid.
pub fn convolve(f: &SampledSignal, g: &SampledSignal) -> Result<SampledSignal, SignalError> {
    f.grid.check_same(&g.grid)?;
    let conv = Convolver::new(f.grid)?;
    let kernel = conv.kernel(g);
    Ok(conv.apply(f, &kernel))
}

/// Reusable FFT plans for repeated linear convolutions on one grid.
#[derive(Clone)]
pub struct Convolver {
    grid: Grid,
    shift: usize,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Convolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Convolver")
            .field("grid", &self.grid)
            .field("size", &self.size)
            .finish()
    }
}

/// Padded transform of a filter, ready for [`Convolver::apply`].
#[derive(Debug, Clone)]
pub struct Kernel {
    pub(crate) fft: Vec<Complex64>,
}

impl Convolver {
    pub fn new(grid: Grid) -> Result<Self, SignalError> {
        Self::with_support(grid, 0, grid.n - 1)
    }

    /// Plans for kernels that vanish outside sample indices `lo..=hi`. The
    /// transform length only has to keep the wrapped tail of the linear
    /// convolution out of the retained window, so short kernels get a
    /// shorter FFT.
    pub fn with_support(grid: Grid, lo: usize, hi: usize) -> Result<Self, SignalError> {
        let shift = grid.origin_index().ok_or(SignalError::NotOriginAligned(grid))?;
        let n = grid.n;
        let (lo, hi) = (lo.min(n - 1), hi.min(n - 1).max(lo.min(n - 1)));
        // the linear result spans lo..n + hi and we read shift..shift + n;
        // reading modulo the transform size is exact once both fit
        let size = ((n + hi).max(shift + n) - lo.min(shift)).next_power_of_two();
        let mut planner = FftPlanner::new();
        Ok(Convolver {
            grid,
            shift,
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn transform(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut buf = Vec::with_capacity(self.size);
        buf.extend_from_slice(samples);
        buf.resize(self.size, ZERO);
        self.forward.process(&mut buf);
        buf
    }

    pub fn kernel(&self, g: &SampledSignal) -> Kernel {
        // fold the Δ weight and the 1/size of the unnormalized inverse in once
        let c = self.grid.step / self.size as f64;
        Kernel {
            fft: self.transform(&g.samples).into_iter().map(|z| z * c).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Smallest and largest index of a non-zero sample, if any.
    pub fn support(s: &SampledSignal) -> Option<(usize, usize)> {
        let lo = s.samples.iter().position(|z| z.re != 0.0 || z.im != 0.0)?;
        let hi = s.samples.iter().rposition(|z| z.re != 0.0 || z.im != 0.0)?;
        Some((lo, hi))
    }

    /// Convolves a signal already in padded-transform form.
    pub fn apply_transformed(&self, f_fft: &[Complex64], kernel: &Kernel) -> SampledSignal {
        let mut buf: Vec<Complex64> = f_fft.iter().zip(&kernel.fft).map(|(a, b)| a * b).collect();
        self.inverse.process(&mut buf);
        let start = self.shift % self.size;
        let samples = if start + self.grid.n <= self.size {
            buf[start..start + self.grid.n].to_vec()
        } else {
            buf[start..].iter().chain(&buf[..start + self.grid.n - self.size]).copied().collect()
        };
        SampledSignal { grid: self.grid, samples }
    }

    pub fn apply(&self, f: &SampledSignal, kernel: &Kernel) -> SampledSignal {
        self.apply_transformed(&self.transform(&f.samples), kernel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Band-limited reconstruction `Σ f_j sinc(t - j)`.
    #[default]
    Sinc,
    Linear,
    /// Zero-order hold: the sample at or left of the position. Exact for
    /// piecewise-constant signals whose jumps sit on grid points.
    Hold,
}

fn interpolate(samples: &[Complex64], t: f64, mode: Interpolation) -> Complex64 {
    let n = samples.len();
    let last = (n - 1) as f64;
    match mode {
        Interpolation::Hold => {
            let k = (t + 1e-9).floor();
            if k < 0.0 || k > last {
                ZERO
            } else {
                samples[k as usize]
            }
        }
        Interpolation::Linear => {
            if t < 0.0 || t > last {
                return ZERO;
            }
            let k = t.floor() as usize;
            if k + 1 >= n {
                return samples[n - 1];
            }
            let a = t - k as f64;
            samples[k] * (1.0 - a) + samples[k + 1] * a
        }
        Interpolation::Sinc => {
            let r = t.round();
            if (t - r).abs() < 1e-12 {
                return if r < 0.0 || r > last {
                    ZERO
                } else {
                    samples[r as usize]
                };
            }
            // sinc(t - j) = (-1)^j sin(πt) / (π(t - j))
            let s = (PI * t).sin() / PI;
            let mut acc = ZERO;
            for (j, v) in samples.iter().enumerate() {
                let w = s / (t - j as f64);
                if j % 2 == 0 {
                    acc += v * w;
                } else {
                    acc -= v * w;
                }
            }
            acc
        }
    }
}

/// `f_λ(x) = λ f(λx)`, resampled onto the same grid.
pub fn dilate(
    f: &SampledSignal,
    lambda: f64,
    mode: Interpolation,
) -> Result<SampledSignal, SignalError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(SignalError::InvalidDilation(lambda));
    }
    if lambda == 1.0 {
        return Ok(f.clone());
    }
    Ok(SampledSignal::from_fn(f.grid, |x| {
        f.sample_at(lambda * x, mode) * lambda
    }))
}

/// Displacement `τ` and modulation `ω` fields for `F_{τ,ω}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation {
    pub tau: SampledSignal,
    pub omega: SampledSignal,
}

impl Deformation {
    pub fn new(tau: SampledSignal, omega: SampledSignal) -> Result<Self, SignalError> {
        tau.grid.check_same(&omega.grid)?;
        for (name, s) in [("tau", &tau), ("omega", &omega)] {
            let im = s.max_imag();
            if im != 0.0 {
                return Err(SignalError::NotReal(name, im));
            }
        }
        Ok(Deformation { tau, omega })
    }

    pub fn identity(grid: Grid) -> Self {
        Deformation {
            tau: SampledSignal::zeros(grid),
            omega: SampledSignal::zeros(grid),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Deformation {
            tau: self.tau.scale(s),
            omega: self.omega.scale(s),
        }
    }
}

/// `F_{τ,ω} f(x) = e^{2πiω(x)} f(x − τ(x))`.
pub fn deform(
    f: &SampledSignal,
    d: &Deformation,
    mode: Interpolation,
) -> Result<SampledSignal, SignalError> {
    f.grid.check_same(&d.tau.grid)?;
    let samples = (0..f.grid.n)
        .map(|k| {
            let tau = d.tau.samples[k].re;
            let om = d.omega.samples[k].re;
            let v = if tau == 0.0 {
                f.samples[k]
            } else {
                f.sample_at(f.grid.x(k) - tau, mode)
            };
            if om == 0.0 {
                v
            } else {
                v * phase(2.0 * PI * om)
            }
        })
        .collect();
    Ok(SampledSignal {
        grid: f.grid,
        samples,
    })
}
