//! On-disk dataset format.
//!
//! A dataset directory holds two files:
//!   - `meta.json`: montage, sampling rate, markers, sample count, byte
//!     order, and format version.
//!   - `samples.f32le`: the sample payload as little-endian IEEE-754
//!     binary32, channel-major, row-contiguous.
//!
//! The pair round-trips bit-exactly for all finite sample values.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{Marker, Montage, Recording};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const META_FILE: &str = "meta.json";
const SAMPLES_FILE: &str = "samples.f32le";

#[derive(Serialize, Deserialize)]
struct Meta {
    format_version: u32,
    byte_order: String,
    montage: Vec<String>,
    fs_hz: f64,
    n_channels: usize,
    n_samples: usize,
    markers: Vec<Marker>,
}

/// Write a recording into `dir` (created if missing). Returns the dataset
/// directory path.
pub fn save_recording(recording: &Recording, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let meta = Meta {
        format_version: FORMAT_VERSION,
        byte_order: "little".to_string(),
        montage: recording.montage.names().to_vec(),
        fs_hz: recording.fs_hz,
        n_channels: recording.n_channels(),
        n_samples: recording.n_samples(),
        markers: recording.markers.clone(),
    };
    let mut meta_json = serde_json::to_string_pretty(&meta)?;
    meta_json.push('\n');
    fs::write(dir.join(META_FILE), meta_json)?;

    let mut out = BufWriter::new(fs::File::create(dir.join(SAMPLES_FILE))?);
    // Row-contiguous channel-major payload; ndarray default layout is
    // row-major so rows stream out in montage order.
    for row in recording.samples.rows() {
        for &v in row {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(dir.to_path_buf())
}

/// Load a recording saved by [`save_recording`].
pub fn load_recording(dir: &Path) -> Result<Recording> {
    let meta_path = dir.join(META_FILE);
    if !meta_path.is_file() {
        return Err(Error::Format(format!("missing {}", meta_path.display())));
    }
    let meta: Meta = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: meta.format_version,
            expected: FORMAT_VERSION,
        });
    }
    if meta.byte_order != "little" {
        return Err(Error::Format(format!("unsupported byte order {}", meta.byte_order)));
    }
    if meta.montage.len() != meta.n_channels {
        return Err(Error::Format(format!(
            "montage lists {} channels but metadata declares {}",
            meta.montage.len(),
            meta.n_channels
        )));
    }

    let samples_path = dir.join(SAMPLES_FILE);
    if !samples_path.is_file() {
        return Err(Error::Format(format!("missing {}", samples_path.display())));
    }
    let expected_bytes = meta
        .n_channels
        .checked_mul(meta.n_samples)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("sample count overflow".into()))?;
    let actual_bytes = fs::metadata(&samples_path)?.len();
    if actual_bytes != expected_bytes as u64 {
        return Err(Error::Format(format!(
            "payload is {actual_bytes} bytes, metadata implies {expected_bytes}"
        )));
    }

    let mut reader = BufReader::new(fs::File::open(&samples_path)?);
    let mut raw = vec![0u8; expected_bytes];
    reader.read_exact(&mut raw)?;
    let values: Vec<f32> = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let samples = Array2::from_shape_vec((meta.n_channels, meta.n_samples), values)
        .map_err(|e| Error::Format(e.to_string()))?;

    let montage = Montage::new(meta.montage)?;
    Recording::new(montage, meta.fs_hz, samples, meta.markers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ClassLabel;
    use ndarray::array;

    fn sample_recording() -> Recording {
        let montage = Montage::new(["A", "B"]).unwrap();
        let samples = array![[1.0_f32, -2.5, 3.25, 0.0], [4.0, 5.5, -6.0, 7.125]];
        let markers = vec![Marker { onset: 1, label: ClassLabel::EatFood }];
        Recording::new(montage, 100.0, samples, markers).unwrap()
    }

    #[test]
    fn payload_is_exactly_4_bytes_per_sample() {
        let dir = tempfile::tempdir().unwrap();
        let rec = sample_recording();
        save_recording(&rec, dir.path()).unwrap();
        let len = fs::metadata(dir.path().join(SAMPLES_FILE)).unwrap().len();
        assert_eq!(len, 2 * 4 * 4); // 8 floats, 32 bytes
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let rec = sample_recording();
        save_recording(&rec, dir.path()).unwrap();
        let loaded = load_recording(dir.path()).unwrap();
        assert_eq!(loaded.montage, rec.montage);
        assert_eq!(loaded.fs_hz, rec.fs_hz);
        assert_eq!(loaded.markers, rec.markers);
        // Bit-exact comparison, not approximate.
        for (a, b) in loaded.samples.iter().zip(rec.samples.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_payload_is_error() {
        let dir = tempfile::tempdir().unwrap();
        save_recording(&sample_recording(), dir.path()).unwrap();
        let path = dir.path().join(SAMPLES_FILE);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(load_recording(dir.path()), Err(Error::Format(_))));
    }

    #[test]
    fn channel_count_mismatch_is_error() {
        let dir = tempfile::tempdir().unwrap();
        save_recording(&sample_recording(), dir.path()).unwrap();
        let meta_path = dir.path().join(META_FILE);
        let meta = fs::read_to_string(&meta_path)
            .unwrap()
            .replace("\"n_channels\": 2", "\"n_channels\": 3");
        fs::write(&meta_path, meta).unwrap();
        assert!(load_recording(dir.path()).is_err());
    }

    #[test]
    fn unknown_format_version_is_error() {
        let dir = tempfile::tempdir().unwrap();
        save_recording(&sample_recording(), dir.path()).unwrap();
        let meta_path = dir.path().join(META_FILE);
        let meta = fs::read_to_string(&meta_path)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 9");
        fs::write(&meta_path, meta).unwrap();
        assert!(matches!(
            load_recording(dir.path()),
            Err(Error::FormatVersion { found: 9, .. })
        ));
    }

    #[test]
    fn large_payload_size_arithmetic() {
        // 64 channels, 10 s at 1000 Hz: 64 * 10000 * 4 bytes.
        let dir = tempfile::tempdir().unwrap();
        let montage = Montage::standard_64();
        let samples = Array2::<f32>::zeros((64, 10_000));
        let rec = Recording::new(montage, 1000.0, samples, vec![]).unwrap();
        save_recording(&rec, dir.path()).unwrap();
        let len = fs::metadata(dir.path().join(SAMPLES_FILE)).unwrap().len();
        assert_eq!(len, 64 * 10_000 * 4);
    }
}
