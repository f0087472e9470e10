//! Domain types for recordings, montages, epochs, and the on-disk dataset
//! format shared by the rest of the pipeline.

mod dataset;
mod io;
mod montage;
mod recording;

pub(crate) use dataset::seconds_to_samples;
pub use dataset::{epoch, split_trials, Epoch, EpochedDataset, Window, WindowedDataset};
pub use io::{load_recording, save_recording, FORMAT_VERSION};
pub use montage::Montage;
pub use recording::{Marker, Recording};

use serde::{Deserialize, Serialize};

/// Trial label: the four imagery tasks plus the rest condition.
///
/// Rest epochs only appear in the statistics phase; decoder training and
/// online sessions operate on the four imagery labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    PourWater,
    OpenDoor,
    EatFood,
    PickUpPhone,
    Rest,
}

impl ClassLabel {
    /// The four imagery task labels, in canonical order.
    pub const IMAGERY: [ClassLabel; 4] = [
        ClassLabel::PourWater,
        ClassLabel::OpenDoor,
        ClassLabel::EatFood,
        ClassLabel::PickUpPhone,
    ];

    /// All five labels.
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::PourWater,
        ClassLabel::OpenDoor,
        ClassLabel::EatFood,
        ClassLabel::PickUpPhone,
        ClassLabel::Rest,
    ];

    /// Index of an imagery label in `IMAGERY`; `None` for `Rest`.
    pub fn imagery_index(self) -> Option<usize> {
        ClassLabel::IMAGERY.iter().position(|&l| l == self)
    }

    pub fn is_imagery(self) -> bool {
        self != ClassLabel::Rest
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::PourWater => "PourWater",
            ClassLabel::OpenDoor => "OpenDoor",
            ClassLabel::EatFood => "EatFood",
            ClassLabel::PickUpPhone => "PickUpPhone",
            ClassLabel::Rest => "Rest",
        }
    }
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
