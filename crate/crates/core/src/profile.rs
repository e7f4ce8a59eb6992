//! Temporal profiles: one pixel row stacked over consecutive frames.

use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::video_io::{self, Frame, FrameSequence};

/// Row `t` of the result is row `y` of frame `range.start + t`; channels
/// and value range are those of the sequence.
pub fn temporal_profile(seq: &FrameSequence, y: usize, range: Option<Range<usize>>) -> Result<Frame> {
    if y >= seq.height() {
        return Err(Error::RowOutOfBounds {
            row: y,
            height: seq.height(),
        });
    }
    let range = range.unwrap_or(0..seq.len());
    if range.start >= range.end || range.end > seq.len() {
        return Err(Error::FrameRangeOutOfBounds {
            start: range.start,
            end: range.end,
            len: seq.len(),
        });
    }
    let data: Vec<f64> = seq.frames()[range.clone()]
        .iter()
        .flat_map(|f| f.row(y).iter().copied())
        .collect();
    Frame::new(seq.width(), range.len(), seq.channels(), data)
}

/// Write a profile as an 8-bit PNG.
pub fn save_profile(profile: &Frame, seq: &FrameSequence, path: &Path) -> Result<()> {
    let scale = 255.0 / seq.value_range().max();
    let bytes: Vec<f64> = profile.data().iter().map(|v| v * scale).collect();
    let frame = Frame::new(profile.width(), profile.height(), profile.channels(), bytes)?;
    video_io::write_frame_png(&frame, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgproc::Plane;
    use crate::video_io::ValueRange;

    #[test]
    fn shape_and_rows() {
        let planes: Vec<Plane> = (0..5)
            .map(|t| Plane::from_fn(7, 4, |x, y| (x + 10 * y + 40 * t) as f64))
            .collect();
        let seq = FrameSequence::from_planes(&planes, ValueRange::Byte, "s").unwrap();
        let p = temporal_profile(&seq, 2, Some(1..4)).unwrap();
        assert_eq!((p.width(), p.height(), p.channels()), (7, 3, 1));
        assert_eq!(p.row(0), seq.frames()[1].row(2));
        assert!(matches!(temporal_profile(&seq, 4, None), Err(Error::RowOutOfBounds { .. })));
        assert!(matches!(
            temporal_profile(&seq, 0, Some(3..9)),
            Err(Error::FrameRangeOutOfBounds { .. })
        ));
    }
}
