//! Outcome preview: a fixed number of icons split across TN/FP/TP/FN.
//!
//! Color encodes how the classifier tagged an edit (blue good, red
//! damaging); shape encodes its true state (circle good, triangle
//! damaging). Icon counts use largest-remainder apportionment with
//! integer arithmetic, so every quota comparison is exact.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ConfusionCounts;

/// Declaration order is the remainder tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PreviewCategory {
    TN,
    FP,
    TP,
    FN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Blue,
    Red,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circle,
    Triangle,
}

impl PreviewCategory {
    pub const ALL: [PreviewCategory; 4] = [
        PreviewCategory::TN,
        PreviewCategory::FP,
        PreviewCategory::TP,
        PreviewCategory::FN,
    ];

    pub fn color(self) -> Color {
        match self {
            PreviewCategory::TN | PreviewCategory::FN => Color::Blue,
            PreviewCategory::FP | PreviewCategory::TP => Color::Red,
        }
    }

    pub fn shape(self) -> Shape {
        match self {
            PreviewCategory::TN | PreviewCategory::FP => Shape::Circle,
            PreviewCategory::TP | PreviewCategory::FN => Shape::Triangle,
        }
    }

    pub fn caption(self) -> &'static str {
        match self {
            PreviewCategory::TN => "correctly detected as good",
            PreviewCategory::FP => "wrongly detected as damaging",
            PreviewCategory::TP => "correctly detected as damaging",
            PreviewCategory::FN => "wrongly detected as good",
        }
    }

    pub fn count_in(self, c: &ConfusionCounts) -> u64 {
        match self {
            PreviewCategory::TN => c.tn,
            PreviewCategory::FP => c.fp,
            PreviewCategory::TP => c.tp,
            PreviewCategory::FN => c.fn_,
        }
    }
}

impl fmt::Display for PreviewCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub category: PreviewCategory,
    pub color: Color,
    pub shape: Shape,
    pub caption: &'static str,
}

pub fn legend() -> [LegendEntry; 4] {
    PreviewCategory::ALL.map(|category| LegendEntry {
        category,
        color: category.color(),
        shape: category.shape(),
        caption: category.caption(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreviewGrid {
    pub n_icons: u64,
    pub allocation: BTreeMap<PreviewCategory, u64>,
    pub fractions: BTreeMap<PreviewCategory, f64>,
}

impl PreviewGrid {
    pub fn icons(&self, category: PreviewCategory) -> u64 {
        self.allocation.get(&category).copied().unwrap_or(0)
    }
}

/// Largest-remainder apportionment of `n_icons` over the four categories.
pub fn allocate_icons(counts: &ConfusionCounts, n_icons: u64) -> Result<PreviewGrid> {
    if n_icons == 0 {
        return Err(Error::NoIcons);
    }
    let total = counts.total();
    if total == 0 {
        return Err(Error::EmptyCounts);
    }
    let total_wide = total as u128;

    // quota_c = n_icons * count_c / total = floor + rem / total
    let mut shares: Vec<(PreviewCategory, u64, u128)> = PreviewCategory::ALL
        .iter()
        .map(|&cat| {
            let scaled = n_icons as u128 * cat.count_in(counts) as u128;
            (cat, (scaled / total_wide) as u64, scaled % total_wide)
        })
        .collect();

    let assigned: u64 = shares.iter().map(|s| s.1).sum();
    let surplus = (n_icons - assigned) as usize;

    let mut order: Vec<usize> = (0..shares.len()).collect();
    // Stable sort keeps category order among equal remainders.
    order.sort_by(|&a, &b| shares[b].2.cmp(&shares[a].2));
    for &i in order.iter().take(surplus) {
        shares[i].1 += 1;
    }

    Ok(PreviewGrid {
        n_icons,
        allocation: shares.iter().map(|&(c, n, _)| (c, n)).collect(),
        fractions: PreviewCategory::ALL
            .iter()
            .map(|&c| (c, c.count_in(counts) as f64 / total as f64))
            .collect(),
    })
}
