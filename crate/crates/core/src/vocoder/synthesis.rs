use std::collections::HashMap;
use std::f64::consts::PI;

use super::{lsf_to_lpc, AcousticFrame, Lcg, VocoderConfig, VocoderError};

const NOISE_TAPS: usize = 63;
const SCHROEDER_SPAN: f64 = 64.0;

/// Windowed-sinc high-pass with cutoff `cutoff_hz`: an identity at 0 Hz and
/// silence at Nyquist.
fn high_pass(cutoff_hz: f64, sample_rate: f64) -> Vec<f64> {
    let mid = (NOISE_TAPS / 2) as isize;
    let fc = cutoff_hz / sample_rate;
    (0..NOISE_TAPS as isize)
        .map(|i| {
            let n = (i - mid) as f64;
            let lp = if n == 0.0 { 2.0 * fc } else { (2.0 * PI * fc * n).sin() / (PI * n) };
            let w = 0.54 - 0.46 * (2.0 * PI * i as f64 / (NOISE_TAPS - 1) as f64).cos();
            let delta = if n == 0.0 { 1.0 } else { 0.0 };
            if cutoff_hz >= sample_rate / 2.0 {
                0.0
            } else if cutoff_hz <= 0.0 {
                delta
            } else {
                delta - lp * w
            }
        })
        .collect()
}

/// Fixed phase of harmonic `k`. Quadratic phases spread each period's energy
/// over the period instead of one sharp pulse, so a frame's excitation energy
/// barely depends on how many pulses fall inside it.
fn schroeder(k: usize) -> f64 {
    PI * (k * k) as f64 / SCHROEDER_SPAN
}

/// Runs the time-varying all-pole filter over `input`, starting from `memory`
/// (most recent output last). Coefficient set `s` applies to sub-frame `s`.
fn all_pole(input: &[f64], memory: &[f64], coeffs: &[Vec<f64>], sub_len: usize) -> Vec<f64> {
    let p = memory.len();
    let mut hist = memory.to_vec();
    let mut out = Vec::with_capacity(input.len());
    for (n, &x) in input.iter().enumerate() {
        let a = &coeffs[(n / sub_len).min(coeffs.len() - 1)];
        let mut y = x;
        for k in 0..p {
            y += a[k] * hist[hist.len() - 1 - k];
        }
        hist.push(y);
        out.push(y);
    }
    out
}

/// Rebuilds a waveform (full scale = 1.0) from parameter frames.
///
/// Excitation is the sum of harmonics of F0 below the voicing boundary (a
/// band-limited pulse train, phase continuous across frames) and unit-variance
/// noise high-passed at the boundary. The filter `1/A(z)` is interpolated in
/// the LSF domain across sub-frames, and each frame is scaled so that its
/// output, including the ringing carried over from the previous frame, has the
/// frame's power.
pub fn synthesize(frames: &[AcousticFrame], cfg: &VocoderConfig) -> Result<Vec<f64>, VocoderError> {
    for (index, f) in frames.iter().enumerate() {
        f.check(cfg).map_err(|message| VocoderError::Frame { index, message })?;
    }
    let sr = cfg.sample_rate as f64;
    let hop = cfg.hop;
    let subframes = cfg.subframes.max(1);
    let sub_len = hop.div_ceil(subframes);
    let mut noise = Lcg::new(cfg.noise_seed);
    let mut noise_hist = vec![0.0; NOISE_TAPS - 1];
    let mut filters: HashMap<u64, Vec<f64>> = HashMap::new();
    let mut phase = 0.0f64;
    let mut offsets: Vec<(f64, f64)> = Vec::new();
    let mut memory = vec![0.0; cfg.order];
    let mut prev_lsf = frames.first().map(|f| f.lsf.clone()).unwrap_or_default();
    let mut out = Vec::with_capacity(frames.len() * hop);

    for (index, frame) in frames.iter().enumerate() {
        let coeffs: Vec<Vec<f64>> = (0..subframes)
            .map(|s| {
                let t = (s + 1) as f64 / subframes as f64;
                let lsf: Vec<f64> = prev_lsf.iter().zip(&frame.lsf).map(|(a, b)| a + t * (b - a)).collect();
                lsf_to_lpc(&lsf).map(|m| m.coefficients)
            })
            .collect::<Result<_, _>>()
            .map_err(|e| VocoderError::Frame {
                index,
                message: e.to_string(),
            })?;

        let boundary = if frame.voiced { frame.voicing_boundary } else { 0.0 };
        let step = frame.f0 / sr;
        let n_harm = if frame.voiced { ((boundary / frame.f0).ceil() as usize).saturating_sub(1) } else { 0 };
        let n_harm = (1..=n_harm).take_while(|&k| k as f64 * frame.f0 < boundary.min(sr / 2.0)).count();
        let amp = (2.0 * step).sqrt();
        let hp = filters
            .entry(boundary.to_bits())
            .or_insert_with(|| high_pass(boundary, sr));

        while offsets.len() < n_harm {
            let (s, c) = schroeder(offsets.len() + 1).sin_cos();
            offsets.push((c, s));
        }
        let mut excitation = Vec::with_capacity(hop);
        for _ in 0..hop {
            // cos(k * theta + offset_k) through powers of e^(i theta)
            let (s, c) = (2.0 * PI * phase).sin_cos();
            let (mut zr, mut zi) = (1.0, 0.0);
            let mut v = 0.0;
            for &(or, oi) in &offsets[..n_harm] {
                (zr, zi) = (zr * c - zi * s, zr * s + zi * c);
                v += zr * or - zi * oi;
            }
            v *= amp;
            phase = (phase + step).fract();

            noise_hist.push(noise.next_white());
            let tail = &noise_hist[noise_hist.len() - NOISE_TAPS..];
            v += hp.iter().zip(tail.iter().rev()).map(|(h, x)| h * x).sum::<f64>();
            excitation.push(v);
        }
        noise_hist.drain(..hop);

        let ringing = all_pole(&vec![0.0; hop], &memory, &coeffs, sub_len);
        let driven = all_pole(&excitation, &vec![0.0; cfg.order], &coeffs, sub_len);
        let target = hop as f64 * 10f64.powf(frame.power_db / 10.0);
        let e00: f64 = ringing.iter().map(|v| v * v).sum();
        let e01: f64 = ringing.iter().zip(&driven).map(|(a, b)| a * b).sum();
        let e11: f64 = driven.iter().map(|v| v * v).sum();
        // solve |ringing + g * driven|^2 = target for g >= 0
        let gain = if e11 <= 0.0 {
            0.0
        } else {
            let disc = e01 * e01 - e11 * (e00 - target);
            if disc >= 0.0 {
                ((-e01 + disc.sqrt()) / e11).max(0.0)
            } else {
                (-e01 / e11).max(0.0)
            }
        };
        let y: Vec<f64> = ringing.iter().zip(&driven).map(|(r, d)| r + gain * d).collect();
        memory.copy_from_slice(&y[hop - cfg.order..]);
        out.extend_from_slice(&y);
        prev_lsf.clone_from(&frame.lsf);
    }
    Ok(out)
}

/// [`synthesize`] rounded and clipped to 16-bit samples.
pub fn synthesize_i16(frames: &[AcousticFrame], cfg: &VocoderConfig) -> Result<Vec<i16>, VocoderError> {
    Ok(synthesize(frames, cfg)?
        .into_iter()
        .map(|v| (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocoder::{analyze, estimate_f0, flat_lsf};

    fn frame(cfg: &VocoderConfig, f0: f64, voiced: bool, power_db: f64) -> AcousticFrame {
        AcousticFrame {
            lsf: flat_lsf(cfg.order).iter().map(|w| w * 0.97 + 0.01).collect(),
            f0: if voiced { f0 } else { cfg.clamp_f0 },
            power_db,
            voicing_boundary: if voiced { cfg.nyquist() } else { 0.0 },
            voiced,
        }
    }

    #[test]
    fn empty_in_empty_out() {
        assert!(synthesize(&[], &VocoderConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn output_length_and_power() {
        let cfg = VocoderConfig::default();
        let frames: Vec<_> = (0..30).map(|i| frame(&cfg, 110.0 + i as f64, i % 3 != 0, -20.0 - i as f64 * 0.5)).collect();
        let y = synthesize(&frames, &cfg).unwrap();
        assert_eq!(y.len(), 30 * 160);
        for (i, f) in frames.iter().enumerate() {
            let p = y[i * 160..(i + 1) * 160].iter().map(|v| v * v).sum::<f64>() / 160.0;
            assert!((10.0 * p.log10() - f.power_db).abs() < 1e-6);
        }
    }

    #[test]
    fn unvoiced_output_has_no_pitch() {
        let cfg = VocoderConfig::default();
        let frames: Vec<_> = (0..100).map(|_| frame(&cfg, 0.0, false, -20.0)).collect();
        let y = synthesize(&frames, &cfg).unwrap();
        for start in (0..y.len() - 640).step_by(800) {
            let e = estimate_f0(&y[start..start + 640], cfg.f0_min, cfg.f0_max, &cfg);
            assert!(!e.voiced, "periodicity {} at {start}", e.periodicity);
        }
    }

    #[test]
    fn voiced_output_keeps_pitch() {
        let cfg = VocoderConfig::default();
        let frames: Vec<_> = (0..50).map(|_| frame(&cfg, 125.0, true, -15.0)).collect();
        let y = synthesize(&frames, &cfg).unwrap();
        let back = analyze(&y, &cfg).unwrap();
        for f in &back[5..45] {
            assert!(f.voiced);
            assert!((f.f0 - 125.0).abs() < 125.0 * 0.05);
        }
    }

    #[test]
    fn invalid_frame_reports_index() {
        let cfg = VocoderConfig::default();
        let mut frames: Vec<_> = (0..3).map(|_| frame(&cfg, 100.0, true, -20.0)).collect();
        frames[2].f0 = 123.0;
        frames[2].voiced = false;
        frames[2].voicing_boundary = 0.0;
        assert!(matches!(synthesize(&frames, &cfg), Err(VocoderError::Frame { index: 2, .. })));
    }

    #[test]
    fn deterministic() {
        let cfg = VocoderConfig::default();
        let frames: Vec<_> = (0..20).map(|i| frame(&cfg, 100.0, i % 2 == 0, -25.0)).collect();
        assert_eq!(synthesize(&frames, &cfg).unwrap(), synthesize(&frames, &cfg).unwrap());
    }
}
