use super::{
    autocorrelate, estimate_f0, estimate_voicing_boundary, flat_lsf, hamming, levinson_durbin, lpc_to_lsf, AcousticFrame,
    LpcModel, VocoderConfig, VocoderError,
};

/// Centred block of `len` samples around `center`, zero padded at the edges.
fn block(samples: &[f64], center: usize, len: usize) -> Vec<f64> {
    let start = center as isize - (len / 2) as isize;
    (0..len)
        .map(|i| {
            let j = start + i as isize;
            if j >= 0 && (j as usize) < samples.len() {
                samples[j as usize]
            } else {
                0.0
            }
        })
        .collect()
}

/// LSFs of a windowed block. Falls back to bandwidth expansion when the
/// recursion runs into numerical trouble, and to a flat spectrum for silence.
fn frame_lsf(windowed: &[f64], order: usize) -> Result<Vec<f64>, VocoderError> {
    let mut r = autocorrelate(windowed, order)?;
    if r[0] <= 1e-20 {
        return Ok(flat_lsf(order));
    }
    // white-noise correction of -60 dB keeps the normal equations well posed
    r[0] *= 1.0 + 1e-6;
    let model = match levinson_durbin(&r, order) {
        Ok((m, _)) => m,
        Err(_) => return Ok(flat_lsf(order)),
    };
    let mut gamma: f64 = 1.0;
    for _ in 0..8 {
        let expanded = LpcModel {
            coefficients: model
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, a)| a * gamma.powi(k as i32 + 1))
                .collect(),
            gain: model.gain,
        };
        if let Ok(lsf) = lpc_to_lsf(&expanded) {
            return Ok(lsf);
        }
        gamma *= 0.99;
    }
    Ok(flat_lsf(order))
}

/// Analyzes a waveform (full scale = 1.0) into one frame per hop. Frame `i`
/// covers samples `[i*hop, (i+1)*hop)`; its analysis windows are centred on
/// that span. Trailing samples short of a whole hop are dropped.
pub fn analyze(samples: &[f64], cfg: &VocoderConfig) -> Result<Vec<AcousticFrame>, VocoderError> {
    let n_frames = samples.len() / cfg.hop;
    let window = hamming(cfg.window);
    let mut frames = Vec::with_capacity(n_frames);
    for index in 0..n_frames {
        let span = &samples[index * cfg.hop..(index + 1) * cfg.hop];
        let center = index * cfg.hop + cfg.hop / 2;
        let power = span.iter().map(|x| x * x).sum::<f64>() / span.len() as f64;
        let power_db = if power > 0.0 {
            (10.0 * power.log10()).max(cfg.power_floor_db)
        } else {
            cfg.power_floor_db
        };

        let windowed: Vec<f64> = block(samples, center, cfg.window)
            .iter()
            .zip(&window)
            .map(|(x, w)| x * w)
            .collect();
        let lsf = frame_lsf(&windowed, cfg.order).map_err(|e| VocoderError::Frame {
            index,
            message: e.to_string(),
        })?;

        let pitch_block = block(samples, center, cfg.pitch_window);
        let est = estimate_f0(&pitch_block, cfg.f0_min, cfg.f0_max, cfg);
        let voiced = est.voiced && power_db >= cfg.voicing_gate_db;
        let (f0, voicing_boundary) = if voiced {
            let band = cfg.nyquist() / cfg.n_bands as f64;
            let vb = estimate_voicing_boundary(&pitch_block, est.f0, cfg.n_bands, cfg).max(band);
            (est.f0, vb)
        } else {
            (cfg.clamp_f0, 0.0)
        };
        frames.push(AcousticFrame {
            lsf,
            f0,
            power_db,
            voicing_boundary,
            voiced,
        });
    }
    Ok(frames)
}

/// [`analyze`] on 16-bit samples.
pub fn analyze_i16(samples: &[i16], cfg: &VocoderConfig) -> Result<Vec<AcousticFrame>, VocoderError> {
    let x: Vec<f64> = samples.iter().map(|&s| s as f64 / 32768.0).collect();
    analyze(&x, cfg)
}
