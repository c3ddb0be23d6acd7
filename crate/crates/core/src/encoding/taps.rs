use super::EncodingError;

/// Frame offsets sampled by a time-delay input window. Negative offsets look
/// into the past.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TapSchedule {
    offsets: Vec<i32>,
}

impl TapSchedule {
    pub fn new(offsets: Vec<i32>) -> Result<Self, EncodingError> {
        if !offsets.windows(2).all(|w| w[0] < w[1]) {
            return Err(EncodingError::Taps("offsets must be strictly increasing".into()));
        }
        if !offsets.contains(&0) {
            return Err(EncodingError::Taps("offsets must include 0".into()));
        }
        Ok(TapSchedule { offsets })
    }

    pub fn offsets(&self) -> &[i32] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Frames between the outermost taps.
    pub fn span_frames(&self) -> usize {
        (self.offsets[self.offsets.len() - 1] - self.offsets[0]) as usize
    }

    /// Taps at or before the current frame.
    pub fn past(&self) -> usize {
        self.offsets.iter().filter(|&&o| o <= 0).count()
    }

    /// Checks that the schedule fits in `window_frames`.
    pub fn fits(&self, window_frames: usize) -> Result<(), EncodingError> {
        if self.span_frames() > window_frames {
            return Err(EncodingError::Taps(format!(
                "span of {} frames exceeds the {window_frames}-frame window",
                self.span_frames()
            )));
        }
        Ok(())
    }
}

/// Symmetric schedule dense near the current frame: offsets at the triangular
/// numbers 1, 3, 6, 10, ... below the half width, plus the window edges.
pub fn default_tap_schedule(window_ms: f64, frame_ms: f64) -> TapSchedule {
    let half = ((window_ms / frame_ms).round() as i32 / 2).max(0);
    let mut right = Vec::new();
    let mut step = 1;
    let mut t = 1;
    while t < half {
        right.push(t);
        step += 1;
        t += step;
    }
    if half > 0 {
        right.push(half);
    }
    let mut offsets: Vec<i32> = right.iter().rev().map(|o| -o).collect();
    offsets.push(0);
    offsets.extend(&right);
    TapSchedule { offsets }
}
