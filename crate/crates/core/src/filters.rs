//! Filter families (Haar pair, smoothed-indicator bump combinations, the
//! δ identity, explicit samples or spectra) and the weighted Bessel bound.

use num_complex::Complex64;
use thiserror::Error;

use crate::signal::{
    fourier_transform, fourier_transform_padded, inverse_fourier_transform, Grid,
    SampledSignal, SignalError, Spectrum,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("invalid filter spec: {0}")]
    InvalidSpec(String),
    #[error("got {weights} weights for {filters} filters")]
    WeightCount { filters: usize, weights: usize },
    #[error("weight {0} is below 1")]
    InvalidWeight(f64),
    #[error("filter {name}: spectrum lives on {got}, expected {expected}")]
    SpectrumGrid { name: String, got: Grid, expected: Grid },
}

/// The smooth edge profile `F(ω) = exp(4ω²/(4ω²−1))` on `(−1/2, 0]`.
///
/// `F(0) = 1` is the continuous extension, so a rise meeting a plateau at a
/// grid frequency does not leave a zero notch.
pub fn bump_edge(w: f64) -> f64 {
    if w > -0.5 && w <= 0.0 {
        let s = 4.0 * w * w;
        (s / (s - 1.0)).exp()
    } else {
        0.0
    }
}

/// One term of a bump combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BumpTerm {
    /// `F(ω − at)`: rises on `(at − 1/2, at]`.
    Rise { at: f64 },
    /// `G(ω − at) = F(at − ω)`: falls on `[at, at + 1/2)`.
    Fall { at: f64 },
    /// Indicator of the open interval `(a, b)`.
    Plateau { a: f64, b: f64 },
}

impl BumpTerm {
    pub fn eval(&self, w: f64) -> f64 {
        match *self {
            BumpTerm::Rise { at } => bump_edge(w - at),
            BumpTerm::Fall { at } => bump_edge(at - w),
            BumpTerm::Plateau { a, b } => {
                if w > a && w < b {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            BumpTerm::Rise { at } => (at - 0.5, at),
            BumpTerm::Fall { at } => (at, at + 0.5),
            BumpTerm::Plateau { a, b } => (a, b),
        }
    }

    /// `F(ω + a) + χ_(−a,a)(ω) + G(ω − a)`.
    pub fn lowpass(a: f64) -> Vec<BumpTerm> {
        vec![
            BumpTerm::Rise { at: -a },
            BumpTerm::Plateau { a: -a, b: a },
            BumpTerm::Fall { at: a },
        ]
    }

    /// Symmetric band pass on `±(a, b)` with smooth shoulders.
    pub fn bandpass(a: f64, b: f64) -> Vec<BumpTerm> {
        vec![
            BumpTerm::Rise { at: -b },
            BumpTerm::Plateau { a: -b, b: -a },
            BumpTerm::Fall { at: -a },
            BumpTerm::Rise { at: a },
            BumpTerm::Plateau { a, b },
            BumpTerm::Fall { at: b },
        ]
    }
}

fn check_bump_terms(terms: &[BumpTerm]) -> Result<(), FilterError> {
    if terms.is_empty() {
        return Err(FilterError::InvalidSpec("bump combination has no terms".into()));
    }
    let mut spans = Vec::with_capacity(terms.len());
    for t in terms {
        let (lo, hi) = t.support();
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(FilterError::InvalidSpec(format!("degenerate bump term {t:?}")));
        }
        spans.push((lo, hi, *t));
    }
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in spans.windows(2) {
        if w[1].0 < w[0].1 - 1e-12 {
            return Err(FilterError::InvalidSpec(format!(
                "bump terms {:?} and {:?} overlap",
                w[0].2, w[1].2
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    /// `φ_{2^j}(x) = 2^j χ_[0,1)(2^j x)`.
    HaarPhi { j: i32 },
    /// `ψ_{2^j}(x) = 2^j ψ(2^j x)` with `ψ = χ_[0,1/2) − χ_[1/2,1)`.
    HaarPsi { j: i32 },
    /// Sum of bump terms in frequency. The time realization samples
    /// `g(x − sample_offset·Δ)`, which only changes the spectral phase.
    Bump {
        terms: Vec<BumpTerm>,
        sample_offset: f64,
    },
    Delta,
    Samples(SampledSignal),
    Spectrum(Spectrum),
}

/// Half a step: the sampling phase under which the published L¹ table is
/// reproduced.
pub const DEFAULT_BUMP_OFFSET: f64 = 0.5;

impl FilterSpec {
    pub fn bump(terms: Vec<BumpTerm>) -> Self {
        FilterSpec::Bump {
            terms,
            sample_offset: DEFAULT_BUMP_OFFSET,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FilterSpec::HaarPhi { .. } => "haar_phi",
            FilterSpec::HaarPsi { .. } => "haar_psi",
            FilterSpec::Bump { .. } => "bump",
            FilterSpec::Delta => "delta",
            FilterSpec::Samples(_) => "samples",
            FilterSpec::Spectrum(_) => "spectrum",
        }
    }
}

fn haar_value(x: f64, j: i32, wavelet: bool) -> f64 {
    let scale = 2f64.powi(j);
    // half-cells of the unit interval; the slack absorbs grid rounding
    let h = (2.0 * scale * x + 1e-9).floor();
    match h as i64 {
        0 => scale,
        1 if wavelet => -scale,
        1 => scale,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub name: String,
    pub spec: FilterSpec,
    pub time: SampledSignal,
    pub spectrum: Spectrum,
    pub l1: f64,
}

impl Filter {
    pub fn new(name: impl Into<String>, spec: FilterSpec, grid: Grid) -> Result<Self, FilterError> {
        let name = name.into();
        let (time, spectrum) = match &spec {
            FilterSpec::HaarPhi { j } | FilterSpec::HaarPsi { j } => {
                let wavelet = matches!(spec, FilterSpec::HaarPsi { .. });
                let j = *j;
                let time = SampledSignal::from_real_fn(grid, |x| haar_value(x, j, wavelet));
                let spectrum = fourier_transform(&time);
                (time, spectrum)
            }
            FilterSpec::Bump {
                terms,
                sample_offset,
            } => {
                check_bump_terms(terms)?;
                let shift = sample_offset * grid.step;
                let spectrum = Spectrum::from_fn(grid, |w| {
                    let m: f64 = terms.iter().map(|t| t.eval(w)).sum();
                    Complex64::from_polar(m, -2.0 * std::f64::consts::PI * w * shift)
                });
                (inverse_fourier_transform(&spectrum), spectrum)
            }
            FilterSpec::Delta => (
                SampledSignal::delta(grid)?,
                Spectrum::from_fn(grid, |_| Complex64::new(1.0, 0.0)),
            ),
            FilterSpec::Samples(s) => {
                grid.check_same(&s.grid)?;
                (s.clone(), fourier_transform(s))
            }
            FilterSpec::Spectrum(s) => {
                grid.check_same(&s.time_grid)?;
                if s.values.len() != grid.n {
                    return Err(SignalError::LengthMismatch {
                        expected: grid.n,
                        got: s.values.len(),
                    }
                    .into());
                }
                (inverse_fourier_transform(s), s.clone())
            }
        };
        let l1 = match spec {
            FilterSpec::Delta => 1.0,
            _ => time.l1_norm(),
        };
        Ok(Filter {
            name,
            spec,
            time,
            spectrum,
            l1,
        })
    }

    pub fn grid(&self) -> Grid {
        self.time.grid
    }

    pub fn is_delta(&self) -> bool {
        matches!(self.spec, FilterSpec::Delta)
    }

    /// `|ĝ(ω)|` from the closed form, when the filter has one.
    pub fn closed_form_modulus(&self, w: f64) -> Option<f64> {
        match &self.spec {
            FilterSpec::Bump { terms, .. } => Some(terms.iter().map(|t| t.eval(w)).sum()),
            FilterSpec::Delta => Some(1.0),
            _ => None,
        }
    }

    /// `|ĝ|²` sampled `factor` times denser than the native frequency grid.
    fn refined_power(&self, factor: usize) -> Vec<f64> {
        let fine = self.grid().conjugate();
        let fine = Grid {
            x_min: fine.x_min,
            step: fine.step / factor as f64,
            n: fine.n * factor,
        };
        if self.closed_form_modulus(0.0).is_some() {
            return fine
                .points()
                .map(|w| self.closed_form_modulus(w).unwrap().powi(2))
                .collect();
        }
        // the padded transform has its own centring; look up by frequency
        let s = fourier_transform_padded(&self.time, factor);
        fine.points()
            .map(|w| {
                let k = ((w - s.freq_grid.x_min) / s.freq_grid.step).round();
                if k >= 0.0 && (k as usize) < s.values.len() {
                    s.values[k as usize].norm_sqr()
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// `max_ω Σ wₗ|ĝₗ(ω)|² + |φ̂(ω)|²` over the frequency grid.
pub fn bessel_bound(
    filters: &[&Filter],
    atom: Option<&Filter>,
    weights: &[f64],
) -> Result<f64, FilterError> {
    bessel_bound_refined(filters, atom, weights, 1)
}

/// [`bessel_bound`] with an extra pass on a grid `refine` times denser.
pub fn bessel_bound_refined(
    filters: &[&Filter],
    atom: Option<&Filter>,
    weights: &[f64],
    refine: usize,
) -> Result<f64, FilterError> {
    if filters.len() != weights.len() {
        return Err(FilterError::WeightCount {
            filters: filters.len(),
            weights: weights.len(),
        });
    }
    if let Some(&w) = weights.iter().find(|&&w| !(w >= 1.0)) {
        return Err(FilterError::InvalidWeight(w));
    }
    let all: Vec<(&Filter, f64)> = filters
        .iter()
        .copied()
        .zip(weights.iter().copied())
        .chain(atom.map(|a| (a, 1.0)))
        .collect();
    let Some((first, _)) = all.first() else {
        return Ok(0.0);
    };
    let freq = first.spectrum.freq_grid;
    for (f, _) in &all {
        if !f.spectrum.freq_grid.same_as(&freq) {
            return Err(FilterError::SpectrumGrid {
                name: f.name.clone(),
                got: f.spectrum.freq_grid,
                expected: freq,
            });
        }
    }
    let mut acc = vec![0.0; freq.n];
    for (f, w) in &all {
        for (a, v) in acc.iter_mut().zip(&f.spectrum.values) {
            *a += w * v.norm_sqr();
        }
    }
    let mut best = acc.iter().copied().fold(0.0, f64::max);
    if refine > 1 {
        let mut fine = vec![0.0; freq.n * refine];
        for (f, w) in &all {
            for (a, v) in fine.iter_mut().zip(f.refined_power(refine)) {
                *a += w * v;
            }
        }
        best = fine.into_iter().fold(best, f64::max);
    }
    Ok(best)
}

/// Wavelets `ψ_{2^j}` for each `j` plus the atom `φ_{2^{−J}}`.
pub fn make_haar_filterbank(
    grid: Grid,
    big_j: i32,
    j_values: &[i32],
) -> Result<(Vec<Filter>, Filter), FilterError> {
    if big_j < 1 {
        return Err(FilterError::InvalidSpec(format!("J must be >= 1, got {big_j}")));
    }
    if j_values.is_empty() {
        return Err(FilterError::InvalidSpec("no wavelet scales given".into()));
    }
    let filters = j_values
        .iter()
        .map(|&j| Filter::new(format!("psi_{j}"), FilterSpec::HaarPsi { j }, grid))
        .collect::<Result<Vec<_>, _>>()?;
    let atom = Filter::new(format!("phi_{}", -big_j), FilterSpec::HaarPhi { j: -big_j }, grid)?;
    Ok((filters, atom))
}

/// The twelve smoothed-indicator filters with their band layout.
pub fn bump_bank_layout() -> Vec<(&'static str, Vec<BumpTerm>)> {
    vec![
        ("phi1", BumpTerm::lowpass(1.0)),
        ("g1_1", BumpTerm::bandpass(2.0, 3.0)),
        ("g1_2", BumpTerm::bandpass(4.0, 5.0)),
        ("g1_3", BumpTerm::bandpass(6.0, 7.0)),
        ("g1_4", BumpTerm::bandpass(8.0, 9.0)),
        ("phi2", BumpTerm::lowpass(2.0)),
        ("g2_1", BumpTerm::bandpass(3.0, 4.0)),
        ("g2_2", BumpTerm::bandpass(5.0, 6.0)),
        ("g2_3", BumpTerm::bandpass(7.0, 8.0)),
        ("g2_4", BumpTerm::bandpass(3.0, 5.0)),
        ("g2_5", BumpTerm::bandpass(6.0, 8.0)),
        ("phi3", BumpTerm::lowpass(9.0)),
    ]
}

pub fn make_bump_filterbank(grid: Grid) -> Result<Vec<Filter>, FilterError> {
    bump_bank_layout()
        .into_iter()
        .map(|(name, terms)| Filter::new(name, FilterSpec::bump(terms), grid))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{dilate, Interpolation};
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::default()
    }

    fn bank() -> Vec<Filter> {
        make_bump_filterbank(grid()).unwrap()
    }

    fn by_name<'a>(b: &'a [Filter], n: &str) -> &'a Filter {
        b.iter().find(|f| f.name == n).unwrap()
    }

    #[test]
    fn edge_profile_is_continuous_at_both_ends() {
        assert_eq!(bump_edge(0.0), 1.0);
        assert!(bump_edge(-0.4999999) < 1e-100);
        assert_eq!(bump_edge(-0.5), 0.0);
        assert_eq!(bump_edge(0.01), 0.0);
        assert!((bump_edge(-0.25) - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn haar_bank_has_unit_norms() {
        let (fs, atom) = make_haar_filterbank(grid(), 3, &[0, -1, -2]).unwrap();
        assert_eq!(fs.len(), 3);
        for f in fs.iter().chain([&atom]) {
            assert!((f.l1 - 1.0).abs() < 1e-6, "{} {}", f.name, f.l1);
        }
    }

    #[test]
    fn haar_scale_zero_is_raw_wavelet() {
        let g = grid();
        let (fs, _) = make_haar_filterbank(g, 3, &[0]).unwrap();
        let psi = SampledSignal::from_real_fn(g, |x| {
            let x = x + 1e-9;
            if (0.0..0.5).contains(&x) {
                1.0
            } else if (0.5..1.0).contains(&x) {
                -1.0
            } else {
                0.0
            }
        });
        assert_eq!(fs[0].time, psi);
    }

    #[test]
    fn haar_bank_bessel_bound_is_one() {
        let (fs, atom) = make_haar_filterbank(grid(), 3, &[0, -1, -2]).unwrap();
        let refs: Vec<&Filter> = fs.iter().collect();
        let b = bessel_bound(&refs, Some(&atom), &[1.0; 3]).unwrap();
        assert!((b - 1.0).abs() < 1e-3, "{b}");
        let b4 = bessel_bound_refined(&refs, Some(&atom), &[1.0; 3], 4).unwrap();
        assert!(b4 <= 1.0 + 1e-3, "{b4}");
    }

    #[test]
    fn haar_wavelet_dilation_preserves_norm_and_doubles_support() {
        let g = grid();
        let (fs, _) = make_haar_filterbank(g, 3, &[0]).unwrap();
        let d = dilate(&fs[0].time, 0.5, Interpolation::Hold).unwrap();
        assert!((d.l1_norm() - 1.0).abs() < 1e-3);
        for (x, v) in g.points().zip(&d.samples) {
            if v.norm() > 0.0 {
                assert!((-1e-9..2.0).contains(&x), "{x}");
            }
        }
        // the dilated wavelet is the next coarser bank member
        let (coarse, _) = make_haar_filterbank(g, 3, &[-1]).unwrap();
        assert!(d.sub(&coarse[0].time).unwrap().linf_norm() < 1e-12);
    }

    #[test]
    fn dilated_scaling_function_is_the_output_atom() {
        let g = grid();
        let phi = Filter::new("phi", FilterSpec::HaarPhi { j: 0 }, g).unwrap();
        let (_, atom) = make_haar_filterbank(g, 3, &[0]).unwrap();
        let d = dilate(&phi.time, 0.125, Interpolation::Hold).unwrap();
        assert!(d.sub(&atom.time).unwrap().linf_norm() < 1e-12);
    }

    #[test]
    fn delta_filter_is_unit_everywhere() {
        let d = Filter::new("d", FilterSpec::Delta, grid()).unwrap();
        assert_eq!(d.l1, 1.0);
        assert_eq!(bessel_bound(&[&d], None, &[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn bump_spectra_match_closed_forms() {
        for f in bank() {
            assert_eq!(f.spectrum.values.len(), grid().n);
            for (w, v) in f.spectrum.frequencies().zip(&f.spectrum.values) {
                let want = f.closed_form_modulus(w).unwrap();
                assert!((v.norm() - want).abs() < 1e-9, "{} at {w}", f.name);
                assert!((-1e-12..=1.0 + 1e-12).contains(&v.norm()));
            }
            // the cached spectrum is the transform of the cached samples
            let again = fourier_transform(&f.time);
            for (a, b) in again.values.iter().zip(&f.spectrum.values) {
                assert!((a - b).norm() < 1e-9);
            }
            assert!((f.l1 - f.time.l1_norm()).abs() == 0.0);
        }
    }

    #[test]
    fn bump_point_values() {
        let b = bank();
        let g11 = by_name(&b, "g1_1");
        assert_eq!(g11.closed_form_modulus(2.5), Some(1.0));
        assert_eq!(g11.closed_form_modulus(0.0), Some(0.0));
        let phi3 = by_name(&b, "phi3");
        assert_eq!(phi3.closed_form_modulus(0.0), Some(1.0));
        assert!((phi3.spectrum.linf_norm().powi(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lowpass_spectra_are_even() {
        for f in bank().iter().filter(|f| f.name.starts_with("phi")) {
            for w in [0.3, 1.2, 1.7, 2.25, 8.9, 9.3] {
                assert_eq!(f.closed_form_modulus(w), f.closed_form_modulus(-w));
            }
        }
    }

    #[test]
    fn overlapping_bump_terms_are_rejected() {
        let mut t = BumpTerm::bandpass(2.0, 3.0);
        t.push(BumpTerm::Plateau { a: 2.5, b: 4.0 });
        assert!(matches!(
            Filter::new("x", FilterSpec::bump(t), grid()),
            Err(FilterError::InvalidSpec(_))
        ));
    }

    #[test]
    fn bessel_bound_rejects_bad_weights() {
        let d = Filter::new("d", FilterSpec::Delta, grid()).unwrap();
        assert!(matches!(
            bessel_bound(&[&d], None, &[]),
            Err(FilterError::WeightCount { .. })
        ));
        assert!(matches!(
            bessel_bound(&[&d], None, &[0.5]),
            Err(FilterError::InvalidWeight(_))
        ));
        let other = Filter::new("o", FilterSpec::Delta, Grid::new(-1.0, 0.5, 5).unwrap()).unwrap();
        assert!(matches!(
            bessel_bound(&[&d, &other], None, &[1.0, 1.0]),
            Err(FilterError::SpectrumGrid { .. })
        ));
    }

    #[test]
    fn single_filter_bound_is_peak_power() {
        let b = bank();
        let g = by_name(&b, "g2_4");
        let v = bessel_bound(&[g], None, &[1.0]).unwrap();
        assert!((v - g.spectrum.linf_norm().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn multiply_branch_weights_give_two() {
        let b = bank();
        let (g22, g25) = (by_name(&b, "g2_2"), by_name(&b, "g2_5"));
        // each branch hangs off its own source block, so the bound is the
        // max over the two groups, not a joint sum (the bands share ω = 6)
        let v = bessel_bound(&[g22], None, &[2.0])
            .unwrap()
            .max(bessel_bound(&[g25], None, &[2.0]).unwrap());
        assert!((v - 2.0).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn bessel_bound_is_monotone(
            picks in prop::collection::vec(0usize..12, 1..5),
            extra in 0usize..12,
            weights in prop::collection::vec(1.0..3.0f64, 5),
            bump in 0.0..2.0f64,
        ) {
            let b = bank();
            let fs: Vec<&Filter> = picks.iter().map(|&i| &b[i]).collect();
            let w = &weights[..fs.len()];
            let base = bessel_bound(&fs, None, w).unwrap();
            let mut more = fs.clone();
            more.push(&b[extra]);
            let mut w2 = w.to_vec();
            w2.push(1.0);
            prop_assert!(bessel_bound(&more, None, &w2).unwrap() >= base);
            let mut heavier = w.to_vec();
            heavier[0] += bump;
            prop_assert!(bessel_bound(&fs, None, &heavier).unwrap() >= base);
        }
    }
}
