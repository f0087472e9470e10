use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered set of electrode labels. The order is the canonical channel
/// index order for every matrix in the pipeline.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Montage {
    channel_names: Vec<String>,
}

/// The 64-channel 10/20-extended montage used by the synthetic recordings.
const STANDARD_64: [&str; 64] = [
    "Fp1", "Fp2", "AF3", "AF4", "AF7", "AF8", "AFz", // prefrontal
    "F1", "F2", "F3", "F4", "F5", "F6", "F7", "F8", "Fz", // frontal
    "FC1", "FC2", "FC3", "FC4", "FC5", "FC6", "FT7", "FT8", "FT9", "FT10",
    "C1", "C2", "C3", "C4", "C5", "C6", "Cz", "T7", "T8", // central/temporal
    "CP1", "CP2", "CP3", "CP4", "CP5", "CP6", "CPz", "TP7", "TP8", "TP9", "TP10",
    "P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8", "Pz", // parietal
    "PO3", "PO4", "POz", "PO7", "PO8", // parieto-occipital
    "O1", "O2", "Oz", "Iz", // occipital
];

impl Montage {
    /// Build a montage from labels. Names must be unique and non-empty.
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let channel_names: Vec<String> = names.into_iter().map(Into::into).collect();
        if channel_names.is_empty() {
            return Err(Error::invalid("montage must have at least one channel"));
        }
        for (i, name) in channel_names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::invalid("empty channel label"));
            }
            if channel_names[..i].contains(name) {
                return Err(Error::invalid(format!("duplicate channel label {name}")));
            }
        }
        Ok(Montage { channel_names })
    }

    /// The full 64-channel montage.
    pub fn standard_64() -> Self {
        Montage {
            channel_names: STANDARD_64.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.channel_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channel_names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.channel_names[index]
    }

    /// Canonical index of a channel label.
    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.channel_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownChannel(name.to_string()))
    }

    /// Indices for a list of labels, in the order given.
    pub fn indices_of(&self, names: &[String]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.index_of(n)).collect()
    }

    /// Sub-montage restricted to `indices` (order preserved).
    pub fn select(&self, indices: &[usize]) -> Result<Montage> {
        let names: Vec<String> = indices
            .iter()
            .map(|&i| {
                self.channel_names
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("channel index {i} out of range")))
            })
            .collect::<Result<_>>()?;
        Montage::new(names)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_montage_has_64_unique_labels() {
        let m = Montage::standard_64();
        assert_eq!(m.len(), 64);
        let mut names = m.names().to_vec();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 64);
    }

    #[test]
    fn standard_montage_contains_analysis_shortlist() {
        let m = Montage::standard_64();
        for ch in ["Fp1", "Fp2", "AFz", "AF3", "AF4", "POz", "Oz", "O1", "O2", "Iz"] {
            assert!(m.index_of(ch).is_ok(), "missing {ch}");
        }
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(Montage::new(["Oz", "Oz"]).is_err());
    }

    #[test]
    fn select_preserves_order() {
        let m = Montage::standard_64();
        let oz = m.index_of("Oz").unwrap();
        let af3 = m.index_of("AF3").unwrap();
        let sub = m.select(&[af3, oz]).unwrap();
        assert_eq!(sub.names(), &["AF3".to_string(), "Oz".to_string()]);
    }
}
