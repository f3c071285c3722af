//! Uniform tensor-product sample grids and the point-scan helper.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64, count: usize) -> Self {
        Self { name: name.into(), lo, hi, count }
    }

    /// A single fixed value.
    pub fn fixed(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, value, value, 1)
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("malformed grid axis `{0}`, expected name=lo:hi:count")]
    Malformed(String),
    #[error("grid axis `{0}` has zero points")]
    Empty(String),
    #[error("grid axis `{0}` has lo > hi")]
    Inverted(String),
}

/// Uniform grid. Points are produced in lexicographic scan order, first axis
/// slowest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self, GridError> {
        for a in &axes {
            if a.count == 0 {
                return Err(GridError::Empty(a.name.clone()));
            }
            if !(a.lo <= a.hi) {
                return Err(GridError::Inverted(a.name.clone()));
            }
        }
        Ok(Self { axes })
    }

    /// Same range and count on every named axis.
    pub fn cube(names: &[&str], lo: f64, hi: f64, count: usize) -> Self {
        Self {
            axes: names.iter().map(|n| Axis::new(*n, lo, hi, count)).collect(),
        }
    }

    /// Parses `x=-1:1:20,y=0:2:10`.
    pub fn parse(text: &str) -> Result<Self, GridError> {
        let mut axes = Vec::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let bad = || GridError::Malformed(part.to_string());
            let (name, range) = part.split_once('=').ok_or_else(bad)?;
            let fields: Vec<&str> = range.split(':').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(bad());
            }
            let lo: f64 = fields[0].parse().map_err(|_| bad())?;
            let hi: f64 = fields[1].parse().map_err(|_| bad())?;
            let count: usize = fields[2].parse().map_err(|_| bad())?;
            axes.push(Axis::new(name.trim(), lo, hi, count));
        }
        GridSpec::new(axes)
    }

    pub fn len(&self) -> usize {
        if self.axes.is_empty() {
            0
        } else {
            self.axes.iter().map(|a| a.count).product()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis(&self, name: &str) -> Option<&Axis> {
        self.axes.iter().find(|a| a.name == name)
    }

    /// Replaces or appends an axis.
    pub fn with_axis(mut self, axis: Axis) -> Self {
        match self.axes.iter_mut().find(|a| a.name == axis.name) {
            Some(slot) => *slot = axis,
            None => self.axes.push(axis),
        }
        self
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            idx[k] = flat % a.count;
            flat /= a.count;
        }
        idx
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        self.axes
            .iter()
            .zip(idx)
            .fold(0, |acc, (a, &i)| acc * a.count + i)
    }

    pub fn point(&self, flat: usize) -> Point {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| (a.name.clone(), a.value(i)))
            .collect()
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Pairs of scan indices that are adjacent along one axis, used for
    /// sign-change bracketing.
    pub fn neighbor_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for flat in 0..self.len() {
            let idx = self.multi_index(flat);
            for (k, a) in self.axes.iter().enumerate() {
                if idx[k] + 1 < a.count {
                    let mut next = idx.clone();
                    next[k] += 1;
                    out.push((flat, self.flat_index(&next)));
                }
            }
        }
        out
    }
}

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order always matches input order.
pub fn scan<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
