/// Frames quieter than the loudest frame by more than this count as silence.
pub const DEFAULT_SILENCE_THRESHOLD_DB: f64 = -40.0;

/// Mean-square power and sample count of consecutive `frame_len` blocks. The
/// final block may be shorter.
pub fn frame_powers(samples: &[f64], frame_len: usize) -> Vec<(f64, usize)> {
    samples
        .chunks(frame_len.max(1))
        .map(|c| (c.iter().map(|x| x * x).sum::<f64>() / c.len() as f64, c.len()))
        .collect()
}

/// Scales a waveform by a single gain so that the average power over its
/// non-silent 10 ms frames equals `target_power` (mean square, same units as
/// the samples). A frame is silent when its power is more than
/// `silence_threshold_db` below the loudest frame. All-silent input is returned
/// unchanged.
pub fn normalize_power(samples: &[f64], sample_rate: u32, silence_threshold_db: f64, target_power: f64) -> Vec<f64> {
    let frame_len = (sample_rate as usize / 100).max(1);
    let frames = frame_powers(samples, frame_len);
    let peak = frames.iter().map(|f| f.0).fold(0.0, f64::max);
    if peak <= 0.0 || target_power <= 0.0 {
        return samples.to_vec();
    }
    let floor = peak * 10f64.powf(silence_threshold_db / 10.0);
    let (energy, count) = frames
        .iter()
        .filter(|f| f.0 >= floor)
        .fold((0.0, 0usize), |(e, n), &(p, len)| (e + p * len as f64, n + len));
    let current = energy / count as f64;
    let gain = (target_power / current).sqrt();
    samples.iter().map(|x| x * gain).collect()
}

/// [`normalize_power`] on 16-bit samples. `target_power` is relative to full
/// scale (a full-scale square wave has power 1). Results are rounded and
/// clipped to the 16-bit range.
pub fn normalize_power_i16(samples: &[i16], sample_rate: u32, silence_threshold_db: f64, target_power: f64) -> Vec<i16> {
    let x: Vec<f64> = samples.iter().map(|&s| s as f64 / 32768.0).collect();
    normalize_power(&x, sample_rate, silence_threshold_db, target_power)
        .into_iter()
        .map(|v| (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16)
        .collect()
}
