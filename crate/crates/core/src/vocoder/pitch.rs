use super::VocoderConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F0Estimate {
    /// Hz; the clamp value when unvoiced.
    pub f0: f64,
    pub voiced: bool,
    /// Peak normalized autocorrelation in `[0, 1]`.
    pub periodicity: f64,
}

/// Normalized autocorrelation at one lag over the overlapping part of the block.
fn normalized_correlation(x: &[f64], lag: usize) -> f64 {
    let n = x.len() - lag;
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b) = (x[i], x[i + lag]);
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    if xx <= 0.0 || yy <= 0.0 {
        0.0
    } else {
        xy / (xx * yy).sqrt()
    }
}

/// Estimates F0 by a normalized-autocorrelation peak search over lags
/// `sample_rate/f0_max ..= sample_rate/f0_min`.
///
/// Among local maxima reaching 90% of the best peak the shortest lag wins,
/// which suppresses sub-octave picks. The winning lag is refined by parabolic
/// interpolation.
pub fn estimate_f0(block: &[f64], f0_min: f64, f0_max: f64, cfg: &VocoderConfig) -> F0Estimate {
    let unvoiced = |periodicity: f64| F0Estimate {
        f0: cfg.clamp_f0,
        voiced: false,
        periodicity,
    };
    let sr = cfg.sample_rate as f64;
    let n = block.len();
    let mean = block.iter().sum::<f64>() / n.max(1) as f64;
    let x: Vec<f64> = block.iter().map(|v| v - mean).collect();
    let energy = x.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64;
    if n == 0 || energy < 1e-12 {
        return unvoiced(0.0);
    }
    let lag_min = ((sr / f0_max).floor() as usize).max(2);
    let lag_max = ((sr / f0_min).ceil() as usize).min(n / 2);
    if lag_min + 2 > lag_max {
        return unvoiced(0.0);
    }
    // one extra lag on each side for the local-maximum test
    let corr: Vec<f64> = (lag_min - 1..=lag_max + 1).map(|lag| normalized_correlation(&x, lag)).collect();
    let at = |lag: usize| corr[lag + 1 - lag_min];
    let peaks: Vec<usize> = (lag_min..=lag_max)
        .filter(|&l| at(l) > 0.0 && at(l) >= at(l - 1) && at(l) >= at(l + 1))
        .collect();
    let Some(best) = peaks.iter().map(|&l| at(l)).reduce(f64::max) else {
        return unvoiced(0.0);
    };
    let lag = peaks.into_iter().find(|&l| at(l) >= 0.9 * best).unwrap_or(lag_min);
    let (y0, y1, y2) = (at(lag - 1), at(lag), at(lag + 1));
    let denom = y0 - 2.0 * y1 + y2;
    let shift = if denom < 0.0 { (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let periodicity = y1.clamp(0.0, 1.0);
    if periodicity < cfg.voicing_threshold {
        return unvoiced(periodicity);
    }
    F0Estimate {
        f0: sr / (lag as f64 + shift),
        voiced: true,
        periodicity,
    }
}
