use std::ops::Range;

use crate::error::{FrodoError, Result};

/// Ordered assignment of named parameter blocks to index ranges of a flat
/// vector. Blocks are contiguous and cover `0..dim()` without gaps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Layout {
    blocks: Vec<(String, Range<usize>)>,
}

impl Layout {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a block of `len` coordinates and returns its range.
    pub fn push(&mut self, name: impl Into<String>, len: usize) -> Range<usize> {
        let start = self.dim();
        let range = start..start + len;
        self.blocks.push((name.into(), range.clone()));
        range
    }

    pub fn dim(&self) -> usize {
        self.blocks.last().map_or(0, |(_, r)| r.end)
    }

    pub fn get(&self, name: &str) -> Option<Range<usize>> {
        self.blocks.iter().find(|(n, _)| n == name).map(|(_, r)| r.clone())
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&str, Range<usize>)> {
        self.blocks.iter().map(|(n, r)| (n.as_str(), r.clone()))
    }

    /// One name per coordinate, e.g. `eta_rw[3]`; scalar blocks keep their
    /// bare name.
    pub fn coordinate_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        for (name, range) in &self.blocks {
            if range.len() == 1 {
                names.push(name.clone());
            } else {
                names.extend((0..range.len()).map(|i| format!("{name}[{i}]")));
            }
        }
        names
    }
}

/// A flat unconstrained parameter vector together with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatParameterVector {
    pub values: Vec<f64>,
    pub layout: Layout,
}

impl FlatParameterVector {
    pub fn new(values: Vec<f64>, layout: Layout) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(FrodoError::Dimension(format!(
                "flat vector has {} values but layout needs {}",
                values.len(),
                layout.dim()
            )));
        }
        Ok(FlatParameterVector { values, layout })
    }

    pub fn block(&self, name: &str) -> Option<&[f64]> {
        self.layout.get(name).map(|r| &self.values[r])
    }
}
