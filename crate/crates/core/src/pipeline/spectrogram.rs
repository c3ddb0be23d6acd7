use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// 8-bit grayscale image, row-major, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Binary PGM (P5).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramConfig {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub fft_size: usize,
    /// Levels this far below the reference are drawn white.
    pub range_db: f64,
    /// The reference never drops below this level, so silence stays white.
    pub floor_dbfs: f64,
}

impl Default for SpectrogramConfig {
    fn default() -> Self {
        SpectrogramConfig {
            window_ms: 25.0,
            hop_ms: 5.0,
            fft_size: 512,
            range_db: 50.0,
            floor_dbfs: -100.0,
        }
    }
}

/// Log-magnitude short-time spectrum of full-scale-normalized samples.
/// Time runs left to right, frequency from Nyquist (top) down to 0 Hz;
/// darker pixels carry more energy.
pub fn spectrogram(samples: &[f64], sample_rate: u32, cfg: &SpectrogramConfig) -> GrayImage {
    let ms = |x: f64| ((x * sample_rate as f64 / 1000.0).round() as usize).max(1);
    let win = ms(cfg.window_ms).min(cfg.fft_size);
    let hop = ms(cfg.hop_ms);
    let bins = cfg.fft_size / 2 + 1;
    let cols = if samples.len() < win { 1 } else { 1 + (samples.len() - win) / hop };
    let hann: Vec<f64> = (0..win)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / win as f64).cos())
        .collect();
    // a full-scale sinusoid peaks at 0 dB
    let gain = 2.0 / hann.iter().sum::<f64>();
    let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
    let mut db = vec![0.0; cols * bins];
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.fft_size];
    for c in 0..cols {
        buf.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
        for (n, w) in hann.iter().enumerate() {
            let x = samples.get(c * hop + n).copied().unwrap_or(0.0);
            buf[n] = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for b in 0..bins {
            db[c * bins + b] = 20.0 * (buf[b].norm() * gain + 1e-12).log10();
        }
    }
    let reference = db.iter().copied().fold(cfg.floor_dbfs, f64::max);
    let mut pixels = vec![0u8; cols * bins];
    for c in 0..cols {
        for b in 0..bins {
            let level = ((db[c * bins + b] - reference + cfg.range_db) / cfg.range_db).clamp(0.0, 1.0);
            pixels[(bins - 1 - b) * cols + c] = (255.0 * (1.0 - level)).round() as u8;
        }
    }
    GrayImage {
        width: cols,
        height: bins,
        pixels,
    }
}
