use super::{Phone, PhoneSegment};

/// Label of one analysis frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameLabel {
    pub frame: usize,
    /// Index of the owning segment.
    pub segment: usize,
    pub phone: Phone,
    /// Where the frame centre falls inside its segment, in `[0, 1)`.
    pub position: f64,
}

/// Labels every whole frame of `[0, last end)`. A frame belongs to the segment
/// whose half-open range contains its centre sample `i * frame_len + frame_len / 2`.
pub fn align_frames(segments: &[PhoneSegment], frame_len: usize) -> Vec<FrameLabel> {
    assert!(frame_len > 0, "frame_len must be positive");
    let Some(last) = segments.last() else { return Vec::new() };
    let n_frames = last.end / frame_len;
    let mut out = Vec::with_capacity(n_frames);
    let mut seg = 0;
    for frame in 0..n_frames {
        let center = frame * frame_len + frame_len / 2;
        while seg + 1 < segments.len() && segments[seg].end <= center {
            seg += 1;
        }
        let s = &segments[seg];
        out.push(FrameLabel {
            frame,
            segment: seg,
            phone: s.phone,
            position: (center - s.start) as f64 / s.len() as f64,
        });
    }
    out
}
