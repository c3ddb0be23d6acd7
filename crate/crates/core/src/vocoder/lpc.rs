use super::VocoderError;

/// All-pole model `1/A(z)` with `A(z) = 1 - sum_k a_k z^-k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcModel {
    /// Predictor coefficients `a_1..a_P`.
    pub coefficients: Vec<f64>,
    /// Square root of the prediction error energy.
    pub gain: f64,
}

impl LpcModel {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// Coefficients of the inverse filter polynomial, `[1, -a_1, ..., -a_P]`.
    pub fn inverse_filter(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.coefficients.iter().map(|a| -a)).collect()
    }

    /// `|A(e^{jw})|`.
    pub fn inverse_magnitude(&self, omega: f64) -> f64 {
        let (mut re, mut im) = (1.0, 0.0);
        for (k, a) in self.coefficients.iter().enumerate() {
            let w = omega * (k + 1) as f64;
            re -= a * w.cos();
            im += a * w.sin();
        }
        (re * re + im * im).sqrt()
    }

    /// Magnitude response of `gain / A(z)` at `omega` radians per sample.
    pub fn magnitude(&self, omega: f64) -> f64 {
        self.gain / self.inverse_magnitude(omega)
    }
}

/// Hamming window of length `n`.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Autocorrelation `r[k] = sum_i x[i] x[i+k]` for lags `0..=order`.
pub fn autocorrelate(frame: &[f64], order: usize) -> Result<Vec<f64>, VocoderError> {
    if frame.len() < order + 1 {
        return Err(VocoderError::BlockTooShort {
            needed: order + 1,
            got: frame.len(),
        });
    }
    Ok((0..=order)
        .map(|k| frame.iter().zip(&frame[k..]).map(|(a, b)| a * b).sum())
        .collect())
}

/// Solves the autocorrelation normal equations by the Levinson-Durbin
/// recursion. Returns the model and the reflection coefficients, one per stage.
pub fn levinson_durbin(r: &[f64], order: usize) -> Result<(LpcModel, Vec<f64>), VocoderError> {
    if r.len() < order + 1 {
        return Err(VocoderError::BlockTooShort {
            needed: order + 1,
            got: r.len(),
        });
    }
    if !(r[0] > 0.0) {
        return Err(VocoderError::NonPositiveEnergy(r[0]));
    }
    let mut a = vec![0.0; order];
    let mut prev = vec![0.0; order];
    let mut reflection = Vec::with_capacity(order);
    let mut err = r[0];
    for i in 0..order {
        let acc = r[i + 1] - (0..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        let k = acc / err;
        if !(k.abs() < 1.0) {
            return Err(VocoderError::Degenerate { stage: i + 1, reflection: k });
        }
        prev[..i].copy_from_slice(&a[..i]);
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        reflection.push(k);
    }
    Ok((
        LpcModel {
            coefficients: a,
            gain: err.sqrt(),
        },
        reflection,
    ))
}

/// Step-up recursion from reflection coefficients to predictor coefficients.
/// Any set with every `|k| < 1` yields a minimum-phase filter.
pub fn reflection_to_lpc(reflection: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::with_capacity(reflection.len());
    for (i, &k) in reflection.iter().enumerate() {
        let prev = a.clone();
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        a.push(k);
    }
    a
}
