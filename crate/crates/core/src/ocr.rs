//! Reading order for OCR text boxes and page exclusion.
//!
//! Boxes are grouped into rows: two boxes are linked when their vertical
//! overlap is at least `row_overlap` of the shorter box's height, and rows are
//! the connected components of that relation. Rows are read top to bottom,
//! boxes within a row left to right. Right-to-left and multi-column layouts
//! are not detected; two columns will interleave row by row.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ROW_OVERLAP: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum OcrError {
    #[error("invalid box on page {page}: {reason}")]
    InvalidBox { page: u32, reason: String },
    #[error("boxes from several pages passed to reading_order")]
    MixedPages,
    #[error("malformed page range '{0}'")]
    BadRange(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextBox {
    pub page: u32,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub content: String,
}

impl TextBox {
    pub fn validate(&self) -> Result<(), OcrError> {
        let invalid = |reason: &str| OcrError::InvalidBox {
            page: self.page,
            reason: reason.to_string(),
        };
        if self.page < 1 {
            return Err(invalid("page numbers start at 1"));
        }
        let coords = [self.x0, self.y0, self.x1, self.y1];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        if self.x0 >= self.x1 || self.y0 >= self.y1 {
            return Err(invalid("requires x0 < x1 and y0 < y1"));
        }
        if self.content.trim().is_empty() {
            return Err(invalid("empty content"));
        }
        Ok(())
    }

    fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    fn vertical_overlap(&self, other: &TextBox) -> f64 {
        (self.y1.min(other.y1) - self.y0.max(other.y0)).max(0.0)
    }

    /// Share a row when overlap ≥ `threshold` × shorter height.
    pub fn same_row(&self, other: &TextBox, threshold: f64) -> bool {
        let shorter = self.height().min(other.height());
        self.vertical_overlap(other) >= threshold * shorter
    }
}

/// Total order on boxes used to make every tie deterministic.
fn box_order(a: &TextBox, b: &TextBox) -> Ordering {
    a.x0.total_cmp(&b.x0)
        .then(a.y0.total_cmp(&b.y0))
        .then(a.x1.total_cmp(&b.x1))
        .then(a.y1.total_cmp(&b.y1))
        .then_with(|| a.content.cmp(&b.content))
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Rows of boxes, each row left to right, rows top to bottom.
pub fn reading_rows(boxes: &[TextBox], row_overlap: f64) -> Result<Vec<Vec<&TextBox>>, OcrError> {
    if let Some(first) = boxes.first() {
        if boxes.iter().any(|b| b.page != first.page) {
            return Err(OcrError::MixedPages);
        }
    }
    let n = boxes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if boxes[i].same_row(&boxes[j], row_overlap) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<&TextBox>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(&boxes[i]);
    }
    let mut rows: Vec<Vec<&TextBox>> = groups.into_values().collect();
    for row in &mut rows {
        row.sort_by(|a, b| box_order(a, b));
    }
    let top = |row: &Vec<&TextBox>| row.iter().map(|b| b.y0).fold(f64::INFINITY, f64::min);
    let left = |row: &Vec<&TextBox>| row.iter().map(|b| b.x0).fold(f64::INFINITY, f64::min);
    rows.sort_by(|a, b| {
        top(a)
            .total_cmp(&top(b))
            .then(left(a).total_cmp(&left(b)))
            .then_with(|| box_order(a[0], b[0]))
    });
    Ok(rows)
}

/// Box contents in reading order.
pub fn reading_order(boxes: &[TextBox]) -> Result<Vec<String>, OcrError> {
    reading_order_with(boxes, DEFAULT_ROW_OVERLAP)
}

pub fn reading_order_with(boxes: &[TextBox], row_overlap: f64) -> Result<Vec<String>, OcrError> {
    Ok(reading_rows(boxes, row_overlap)?
        .into_iter()
        .flatten()
        .map(|b| b.content.clone())
        .collect())
}

/// Page text: boxes in a row joined by a space, rows by newlines.
pub fn page_text(boxes: &[TextBox], row_overlap: f64) -> Result<String, OcrError> {
    let rows = reading_rows(boxes, row_overlap)?;
    Ok(rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|b| b.content.trim())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n"))
}

/// Comma-separated page numbers and inclusive ranges, e.g. `1-2,10`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PageExclusions {
    ranges: Vec<(u32, u32)>,
}

impl PageExclusions {
    pub fn new(ranges: Vec<(u32, u32)>) -> Result<Self, OcrError> {
        for &(lo, hi) in &ranges {
            if lo > hi {
                return Err(OcrError::BadRange(format!("{lo}-{hi}")));
            }
        }
        Ok(Self { ranges })
    }

    pub fn contains(&self, page: u32) -> bool {
        self.ranges.iter().any(|&(lo, hi)| (lo..=hi).contains(&page))
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }
}

impl FromStr for PageExclusions {
    type Err = OcrError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let mut ranges = Vec::new();
        if spec.trim().is_empty() {
            return Ok(Self { ranges });
        }
        for part in spec.split(',') {
            let part = part.trim();
            let bad = || OcrError::BadRange(part.to_string());
            let parse = |s: &str| s.trim().parse::<u32>().map_err(|_| bad());
            let range = match part.split_once('-') {
                Some((lo, hi)) => (parse(lo)?, parse(hi)?),
                None => {
                    let p = parse(part)?;
                    (p, p)
                }
            };
            if range.0 > range.1 {
                return Err(bad());
            }
            ranges.push(range);
        }
        Ok(Self { ranges })
    }
}

impl fmt::Display for PageExclusions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .ranges
            .iter()
            .map(|&(lo, hi)| if lo == hi { lo.to_string() } else { format!("{lo}-{hi}") })
            .collect();
        f.write_str(&parts.join(","))
    }
}

pub fn exclude_pages<V>(pages: BTreeMap<u32, V>, exclusions: &PageExclusions) -> BTreeMap<u32, V> {
    pages
        .into_iter()
        .filter(|(p, _)| !exclusions.contains(*p))
        .collect()
}

/// Group validated boxes by page.
pub fn group_by_page(boxes: Vec<TextBox>) -> Result<BTreeMap<u32, Vec<TextBox>>, OcrError> {
    let mut pages: BTreeMap<u32, Vec<TextBox>> = BTreeMap::new();
    for b in boxes {
        b.validate()?;
        pages.entry(b.page).or_default().push(b);
    }
    Ok(pages)
}
