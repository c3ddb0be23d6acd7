use std::io::Cursor;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::PipelineError;

fn spec(sample_rate: u32) -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

/// Reads 16-bit mono PCM at `sample_rate`; anything else is a format error.
pub fn read_wav(path: &Path, sample_rate: u32) -> Result<Vec<i16>, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    let fail = |m: String| PipelineError::Format(format!("{}: {m}", path.display()));
    let reader = WavReader::new(Cursor::new(bytes)).map_err(|e| fail(e.to_string()))?;
    let got = reader.spec();
    if got != spec(sample_rate) {
        return Err(fail(format!(
            "expected mono 16-bit PCM at {sample_rate} Hz, got {} channel(s) of {}-bit {:?} at {} Hz",
            got.channels, got.bits_per_sample, got.sample_format, got.sample_rate
        )));
    }
    reader
        .into_samples::<i16>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| fail(e.to_string()))
}

pub fn wav_bytes(samples: &[i16], sample_rate: u32) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    {
        let mut w = WavWriter::new(&mut out, spec(sample_rate)).expect("writing to memory");
        for &s in samples {
            w.write_sample(s).expect("writing to memory");
        }
        w.finalize().expect("writing to memory");
    }
    out.into_inner()
}

pub fn write_wav(path: &Path, samples: &[i16], sample_rate: u32) -> Result<(), PipelineError> {
    std::fs::write(path, wav_bytes(samples, sample_rate)).map_err(|e| PipelineError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_rejections() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let samples: Vec<i16> = (0..500).map(|i| (i * 37 % 2000 - 1000) as i16).collect();
        write_wav(&p, &samples, 16000).unwrap();
        assert_eq!(read_wav(&p, 16000).unwrap(), samples);
        let err = read_wav(&p, 8000).unwrap_err();
        assert!(matches!(err, PipelineError::Format(ref m) if m.contains("8000 Hz")), "{err}");

        let stereo = dir.path().join("s.wav");
        let mut w = WavWriter::create(&stereo, WavSpec { channels: 2, ..spec(16000) }).unwrap();
        for _ in 0..20 {
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        let err = read_wav(&stereo, 16000).unwrap_err();
        assert!(matches!(err, PipelineError::Format(ref m) if m.contains("mono")), "{err}");

        std::fs::write(dir.path().join("junk.wav"), b"not a wav").unwrap();
        assert!(matches!(read_wav(&dir.path().join("junk.wav"), 16000), Err(PipelineError::Format(_))));
        assert!(matches!(read_wav(&dir.path().join("none.wav"), 16000), Err(PipelineError::Io { .. })));
    }
}
