use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::VocoderConfig;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// One-sided power spectrum of `x`, zero padded to `size`.
pub(crate) fn power_spectrum(x: &[f64], size: usize) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(size));
    fft.process(&mut buf);
    buf[..=size / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// Autocorrelation at a (fractional) lag from a one-sided power spectrum, by
/// the Wiener-Khinchin relation, normalized by the zero-lag value.
fn spectral_correlation(power: &[f64], bins: std::ops::Range<usize>, lag: f64, size: usize) -> (f64, f64) {
    let half = size / 2;
    let (mut num, mut den) = (0.0, 0.0);
    for k in bins {
        let w = if k == 0 || k == half { 1.0 } else { 2.0 };
        let p = w * power[k];
        num += p * (2.0 * PI * k as f64 * lag / size as f64).cos();
        den += p;
    }
    (num, den)
}

/// Finds the frequency below which a voiced frame is harmonic.
///
/// `[0, Nyquist]` is split into `n_bands` equal bands. A band is harmonic when
/// its autocorrelation at one pitch period (computed from the band's share of
/// a Hann-windowed power spectrum and corrected for the window's own
/// autocorrelation) reaches the harmonicity threshold. Bands holding less than
/// -40 dB of the strongest band's energy carry no evidence and count as
/// harmonic. The boundary is the upper edge of the leading run of harmonic
/// bands.
pub fn estimate_voicing_boundary(block: &[f64], f0: f64, n_bands: usize, cfg: &VocoderConfig) -> f64 {
    let n = block.len();
    if n < 4 || n_bands == 0 || !(f0 > 0.0) {
        return 0.0;
    }
    let size = (2 * n).next_power_of_two();
    let window: Vec<f64> = (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()).collect();
    let mean = block.iter().sum::<f64>() / n as f64;
    let xw: Vec<f64> = block.iter().zip(&window).map(|(x, w)| (x - mean) * w).collect();
    let power = power_spectrum(&xw, size);
    let half = size / 2;
    let lag = cfg.sample_rate as f64 / f0;
    let (wn, wd) = spectral_correlation(&power_spectrum(&window, size), 0..half + 1, lag, size);
    let window_corr = wn / wd;
    if window_corr <= 1e-6 {
        return 0.0;
    }

    let band_bins = |b: usize| {
        let lo = b * half / n_bands;
        let hi = if b + 1 == n_bands { half + 1 } else { (b + 1) * half / n_bands };
        lo..hi
    };
    let bands: Vec<(f64, f64)> = (0..n_bands)
        .map(|b| spectral_correlation(&power, band_bins(b), lag, size))
        .collect();
    let strongest = bands.iter().map(|b| b.1).fold(0.0, f64::max);
    if strongest <= 0.0 {
        return 0.0;
    }
    let harmonic = |&(num, den): &(f64, f64)| den < 1e-4 * strongest || num / den / window_corr >= cfg.harmonicity_threshold;
    let leading = bands.iter().take_while(|b| harmonic(b)).count();
    leading as f64 * cfg.nyquist() / n_bands as f64
}
