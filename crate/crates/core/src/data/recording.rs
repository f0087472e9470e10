use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ClassLabel, Montage};
use crate::error::{Error, Result};

/// Trial marker: sample index where a labeled stage starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    pub onset: usize,
    pub label: ClassLabel,
}

/// Continuous multi-channel recording, channel-major (`channels x time`),
/// amplitudes in microvolts.
#[derive(Clone, Debug, PartialEq)]
pub struct Recording {
    pub montage: Montage,
    pub fs_hz: f64,
    pub samples: Array2<f32>,
    pub markers: Vec<Marker>,
}

impl Recording {
    /// Validating constructor: row count must match the montage, the rate
    /// must be positive, and markers must be sorted and in range.
    pub fn new(
        montage: Montage,
        fs_hz: f64,
        samples: Array2<f32>,
        markers: Vec<Marker>,
    ) -> Result<Self> {
        if !fs_hz.is_finite() || fs_hz <= 0.0 {
            return Err(Error::invalid("sampling rate must be positive"));
        }
        if samples.nrows() != montage.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} sample rows for a {}-channel montage",
                samples.nrows(),
                montage.len()
            )));
        }
        let n = samples.ncols();
        for pair in markers.windows(2) {
            if pair[1].onset < pair[0].onset {
                return Err(Error::invalid("markers must be sorted by onset"));
            }
        }
        if let Some(m) = markers.iter().find(|m| m.onset >= n.max(1)) {
            return Err(Error::OutOfRange(format!(
                "marker onset {} past recording end {n}",
                m.onset
            )));
        }
        Ok(Recording {
            montage,
            fs_hz,
            samples,
            markers,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.ncols()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.fs_hz
    }

    /// Restrict to a channel subset by montage index. Sample values are
    /// copied row-for-row, so restricting then restricting again yields
    /// exactly the same values as one combined restriction.
    pub fn select_channels(&self, indices: &[usize]) -> Result<Recording> {
        let montage = self.montage.select(indices)?;
        let mut samples = Array2::zeros((indices.len(), self.n_samples()));
        for (row, &src) in indices.iter().enumerate() {
            samples.row_mut(row).assign(&self.samples.row(src));
        }
        Ok(Recording {
            montage,
            fs_hz: self.fs_hz,
            samples,
            markers: self.markers.clone(),
        })
    }

    /// Restrict to a channel subset by label.
    pub fn select_channels_by_name(&self, names: &[String]) -> Result<Recording> {
        let indices = self.montage.indices_of(names)?;
        self.select_channels(&indices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny_montage() -> Montage {
        Montage::new(["A", "B"]).unwrap()
    }

    #[test]
    fn row_count_must_match_montage() {
        let samples = Array2::<f32>::zeros((3, 10));
        assert!(Recording::new(tiny_montage(), 100.0, samples, vec![]).is_err());
    }

    #[test]
    fn markers_must_be_sorted_and_in_range() {
        let samples = Array2::<f32>::zeros((2, 10));
        let unsorted = vec![
            Marker { onset: 5, label: ClassLabel::Rest },
            Marker { onset: 2, label: ClassLabel::PourWater },
        ];
        assert!(Recording::new(tiny_montage(), 100.0, samples.clone(), unsorted).is_err());
        let past_end = vec![Marker { onset: 10, label: ClassLabel::Rest }];
        assert!(Recording::new(tiny_montage(), 100.0, samples, past_end).is_err());
    }

    #[test]
    fn select_channels_copies_rows() {
        let samples = array![[1.0_f32, 2.0], [3.0, 4.0]];
        let rec = Recording::new(tiny_montage(), 10.0, samples, vec![]).unwrap();
        let sub = rec.select_channels(&[1]).unwrap();
        assert_eq!(sub.montage.names(), &["B".to_string()]);
        assert_eq!(sub.samples, array![[3.0_f32, 4.0]]);
    }
}
