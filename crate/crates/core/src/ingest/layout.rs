//! Skeleton layouts emitted by the supported pose estimators.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::IngestError;

/// Which keypoint model produced a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LayoutKind {
    /// OpenPose BODY_25.
    Body25,
    /// DeepLabCut model zoo `full_human` (ankles only, no heels or toes).
    Dlcpt14,
    /// Custom-trained DeepLabCut network with heels and toes.
    Dlcct16,
}

impl LayoutKind {
    pub const ALL: [LayoutKind; 3] = [LayoutKind::Body25, LayoutKind::Dlcpt14, LayoutKind::Dlcct16];

    pub fn as_str(self) -> &'static str {
        match self {
            LayoutKind::Body25 => "BODY_25",
            LayoutKind::Dlcpt14 => "DLCPT_14",
            LayoutKind::Dlcct16 => "DLCCT_16",
        }
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Semantic roles the gait pipeline needs from a skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    LeftHeel,
    RightHeel,
    LeftToe,
    RightToe,
    LeftAnkle,
    RightAnkle,
    LeftHip,
    RightHip,
    MidHip,
}

const BODY25_PARTS: [&str; 25] = [
    "Nose",
    "Neck",
    "Right Shoulder",
    "Right Elbow",
    "Right Wrist",
    "Left Shoulder",
    "Left Elbow",
    "Left Wrist",
    "Mid Hip",
    "Right Hip",
    "Right Knee",
    "Right Ankle",
    "Left Hip",
    "Left Knee",
    "Left Ankle",
    "Right Eye",
    "Left Eye",
    "Right Ear",
    "Left Ear",
    "Left Big Toe",
    "Left Small Toe",
    "Left Heel",
    "Right Big Toe",
    "Right Small Toe",
    "Right Heel",
];

const DLCPT14_PARTS: [&str; 14] = [
    "Right Ankle",
    "Right Knee",
    "Right Hip",
    "Left Hip",
    "Left Knee",
    "Left Ankle",
    "Right Wrist",
    "Right Elbow",
    "Right Shoulder",
    "Left Shoulder",
    "Left Elbow",
    "Left Wrist",
    "Chin",
    "Forehead",
];

// Names used by the DeepLabCut model zoo export, same order as above.
const DLCPT14_ZOO_NAMES: [&str; 14] = [
    "ankle1", "knee1", "hip1", "hip2", "knee2", "ankle2", "wrist1", "elbow1", "shoulder1",
    "shoulder2", "elbow2", "wrist2", "chin", "forehead",
];

const DLCCT16_PARTS: [&str; 16] = [
    "Right Shoulder",
    "Right Elbow",
    "Right Wrist",
    "Right Hip",
    "Right Knee",
    "Right Ankle",
    "Right Heel",
    "Right Toe",
    "Left Shoulder",
    "Left Elbow",
    "Left Wrist",
    "Left Hip",
    "Left Knee",
    "Left Ankle",
    "Left Heel",
    "Left Toe",
];

/// A canonical keypoint layout. Part order is fixed per kind; parsers
/// reorder input columns into this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SkeletonLayout {
    kind: LayoutKind,
}

impl SkeletonLayout {
    pub const fn new(kind: LayoutKind) -> Self {
        SkeletonLayout { kind }
    }

    pub const fn body25() -> Self {
        Self::new(LayoutKind::Body25)
    }

    pub const fn dlcpt14() -> Self {
        Self::new(LayoutKind::Dlcpt14)
    }

    pub const fn dlcct16() -> Self {
        Self::new(LayoutKind::Dlcct16)
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    /// Anatomical part names indexed by keypoint index.
    pub fn parts(&self) -> &'static [&'static str] {
        match self.kind {
            LayoutKind::Body25 => &BODY25_PARTS,
            LayoutKind::Dlcpt14 => &DLCPT14_PARTS,
            LayoutKind::Dlcct16 => &DLCCT16_PARTS,
        }
    }

    pub fn part_count(&self) -> usize {
        self.parts().len()
    }

    /// Keypoint index serving `role`, or `None` when the model does not
    /// track that landmark.
    pub fn role(&self, role: Role) -> Option<usize> {
        use Role::*;
        match (self.kind, role) {
            (LayoutKind::Body25, LeftHeel) => Some(21),
            (LayoutKind::Body25, RightHeel) => Some(24),
            (LayoutKind::Body25, LeftToe) => Some(19),
            (LayoutKind::Body25, RightToe) => Some(22),
            (LayoutKind::Body25, LeftAnkle) => Some(14),
            (LayoutKind::Body25, RightAnkle) => Some(11),
            (LayoutKind::Body25, LeftHip) => Some(12),
            (LayoutKind::Body25, RightHip) => Some(9),
            (LayoutKind::Body25, MidHip) => Some(8),

            (LayoutKind::Dlcpt14, LeftAnkle) => Some(5),
            (LayoutKind::Dlcpt14, RightAnkle) => Some(0),
            (LayoutKind::Dlcpt14, LeftHip) => Some(3),
            (LayoutKind::Dlcpt14, RightHip) => Some(2),
            (LayoutKind::Dlcpt14, _) => None,

            (LayoutKind::Dlcct16, LeftHeel) => Some(14),
            (LayoutKind::Dlcct16, RightHeel) => Some(6),
            (LayoutKind::Dlcct16, LeftToe) => Some(15),
            (LayoutKind::Dlcct16, RightToe) => Some(7),
            (LayoutKind::Dlcct16, LeftAnkle) => Some(13),
            (LayoutKind::Dlcct16, RightAnkle) => Some(5),
            (LayoutKind::Dlcct16, LeftHip) => Some(11),
            (LayoutKind::Dlcct16, RightHip) => Some(3),
            (LayoutKind::Dlcct16, MidHip) => None,
        }
    }

    /// Name written to DeepLabCut-style headers.
    pub fn column_label(&self, index: usize) -> String {
        self.parts()[index].replace(' ', "_")
    }

    fn aliases(&self, index: usize) -> Vec<String> {
        let canonical = normalize_name(self.parts()[index]);
        let mut out = vec![canonical.clone()];
        if let Some(rest) = canonical.strip_prefix("right") {
            out.push(format!("r{rest}"));
        } else if let Some(rest) = canonical.strip_prefix("left") {
            out.push(format!("l{rest}"));
        }
        if self.kind == LayoutKind::Dlcpt14 {
            out.push(DLCPT14_ZOO_NAMES[index].to_string());
        }
        out
    }
}

/// Lower-cases and strips whitespace and `_ - .` separators.
pub fn normalize_name(name: &str) -> String {
    name.chars()
        .filter(|c| !c.is_whitespace() && !matches!(c, '_' | '-' | '.'))
        .flat_map(char::to_lowercase)
        .collect()
}

/// Result of matching a list of part names against the known layouts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutMatch {
    pub layout: SkeletonLayout,
    /// `columns[i]` is the canonical keypoint index of input name `i`.
    pub columns: Vec<usize>,
}

/// Identifies the skeleton layout from part names, case-insensitively and
/// ignoring separators.
pub fn detect_layout<S: AsRef<str>>(part_names: &[S]) -> Result<SkeletonLayout, IngestError> {
    match_layout(part_names).map(|m| m.layout)
}

/// Like [`detect_layout`], also returning the input-to-canonical column map.
pub fn match_layout<S: AsRef<str>>(part_names: &[S]) -> Result<LayoutMatch, IngestError> {
    if part_names.is_empty() {
        return Err(IngestError::UnknownLayout { count: 0 });
    }
    let candidates: Vec<SkeletonLayout> = LayoutKind::ALL
        .iter()
        .map(|&k| SkeletonLayout::new(k))
        .filter(|l| l.part_count() == part_names.len())
        .collect();
    if candidates.is_empty() {
        return Err(IngestError::UnknownLayout { count: part_names.len() });
    }

    let mut last_err = None;
    let mut found = Vec::new();
    for layout in candidates {
        match map_columns(layout, part_names) {
            Ok(columns) => found.push(LayoutMatch { layout, columns }),
            Err(e) => last_err = Some(e),
        }
    }
    match found.len() {
        1 => Ok(found.pop().unwrap()),
        0 => Err(last_err.unwrap()),
        _ => Err(IngestError::AmbiguousLayout),
    }
}

fn map_columns<S: AsRef<str>>(
    layout: SkeletonLayout,
    names: &[S],
) -> Result<Vec<usize>, IngestError> {
    let mut lookup: HashMap<String, usize> = HashMap::new();
    for i in 0..layout.part_count() {
        for alias in layout.aliases(i) {
            lookup.insert(alias, i);
        }
    }
    let mut taken = vec![false; layout.part_count()];
    let mut columns = Vec::with_capacity(names.len());
    let mut unknown = Vec::new();
    for name in names {
        match lookup.get(&normalize_name(name.as_ref())) {
            Some(&idx) if !taken[idx] => {
                taken[idx] = true;
                columns.push(idx);
            }
            Some(_) => {
                return Err(IngestError::DuplicatePart(name.as_ref().to_string()));
            }
            None => unknown.push(name.as_ref().to_string()),
        }
    }
    if !unknown.is_empty() {
        return Err(IngestError::UnrecognizedParts { layout: layout.kind, names: unknown });
    }
    Ok(columns)
}
