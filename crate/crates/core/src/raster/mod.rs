//! Grid types shared by every stage of the pipeline, plus their file formats.
//!
//! All grids are row-major with `(row, col)` addressing. Constructors validate
//! dimensions and value ranges, so a value of any of these types always
//! satisfies its invariants.

mod io;
mod transform;

use std::collections::{BTreeMap, BTreeSet};

pub use io::{
    energy_paths, read_energy_map, read_label_map, read_raw_f32, write_energy_map, write_label_map, write_raw_f32,
    EnergySidecar,
};
pub use transform::Transform;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Grid coordinate as `(row, col)`.
pub type Pixel = (usize, usize);

/// Value used for background pixels in energy maps and energy files.
pub const BACKGROUND: f64 = -1.0;

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("degenerate dimensions {width}x{height}")));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format(format!("dimensions {width}x{height} overflow")))?;
    if expected != len {
        return Err(Error::SizeMismatch { expected, found: len });
    }
    Ok(())
}

/// Axis-aligned rectangle in grid coordinates, `[row0, row1) x [col0, col1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub row0: usize,
    pub col0: usize,
    pub row1: usize,
    pub col1: usize,
}

impl Rect {
    pub fn height(&self) -> usize {
        self.row1 - self.row0
    }

    pub fn width(&self) -> usize {
        self.col1 - self.col0
    }

    /// Grows the rectangle by `pad` on every side, clamped to a `width x height` grid.
    pub fn padded(&self, pad: usize, width: usize, height: usize) -> Rect {
        Rect {
            row0: self.row0.saturating_sub(pad),
            col0: self.col0.saturating_sub(pad),
            row1: (self.row1 + pad).min(height),
            col1: (self.col1 + pad).min(width),
        }
    }
}

/// Instance label map: 0 is background, every positive id is one instance.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        check_dims(width, height, labels.len())?;
        Ok(Self { width, height, labels })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0; width.saturating_mul(height)])
    }

    /// Builds a map from nested rows; all rows must have the same length.
    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut labels = Vec::with_capacity(width * height);
        for row in rows {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::Format("ragged rows".into()));
            }
            labels.extend_from_slice(row);
        }
        Self::new(width, height, labels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.iter().all(|&l| l == 0)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<u32> {
        self.labels
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Sorted positive ids present in the map.
    pub fn ids(&self) -> Vec<u32> {
        self.areas().into_keys().collect()
    }

    pub fn instance_count(&self) -> usize {
        self.areas().len()
    }

    pub fn contains_id(&self, id: u32) -> bool {
        id != 0 && self.labels.contains(&id)
    }

    /// Pixel count per positive id.
    pub fn areas(&self) -> BTreeMap<u32, usize> {
        let mut areas = BTreeMap::new();
        for &l in self.labels.iter().filter(|&&l| l != 0) {
            *areas.entry(l).or_insert(0) += 1;
        }
        areas
    }

    pub fn max_id(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    pub fn mask_of(&self, id: u32) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l == id).collect(),
        }
    }

    pub fn foreground(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l != 0).collect(),
        }
    }

    /// Bounding box of every id, in one pass.
    pub fn bboxes(&self) -> BTreeMap<u32, Rect> {
        let mut boxes: BTreeMap<u32, Rect> = BTreeMap::new();
        for row in 0..self.height {
            for col in 0..self.width {
                let l = self.get(row, col);
                if l == 0 {
                    continue;
                }
                boxes
                    .entry(l)
                    .and_modify(|r| {
                        r.row0 = r.row0.min(row);
                        r.col0 = r.col0.min(col);
                        r.row1 = r.row1.max(row + 1);
                        r.col1 = r.col1.max(col + 1);
                    })
                    .or_insert(Rect {
                        row0: row,
                        col0: col,
                        row1: row + 1,
                        col1: col + 1,
                    });
            }
        }
        boxes
    }

    pub fn crop(&self, rect: Rect) -> LabelMap {
        let mut labels = Vec::with_capacity(rect.width() * rect.height());
        for row in rect.row0..rect.row1 {
            labels.extend_from_slice(&self.labels[self.index(row, rect.col0)..self.index(row, rect.col1)]);
        }
        LabelMap {
            width: rect.width(),
            height: rect.height(),
            labels,
        }
    }

    pub fn transformed(&self, t: Transform) -> LabelMap {
        let (width, height, labels) = t.apply(self.width, self.height, &self.labels);
        LabelMap { width, height, labels }
    }
}

/// Boolean grid; a single-instance view of a label map or any derived mask.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width.saturating_mul(height)])
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width.saturating_mul(height)])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let bits = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::new(width, height, bits)
    }

    /// Parses ASCII art: `#` or `1` is set, anything else is clear.
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut bits = Vec::with_capacity(width * height);
        for row in rows {
            if row.chars().count() != width {
                return Err(Error::Format("ragged rows".into()));
            }
            bits.extend(row.chars().map(|ch| ch == '#' || ch == '1'));
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    /// Like [`get`](Self::get) but out-of-bounds coordinates read as `false`.
    #[inline]
    pub fn get_or_false(&self, row: isize, col: isize) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.bits[row as usize * self.width + col as usize]
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<BinaryMask> {
        if !self.same_shape(other) {
            return Err(Error::Dimensions(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn not(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Set pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        let width = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / width, i % width))
    }

    pub fn to_pixel_set(&self) -> PixelSet {
        PixelSet {
            width: self.width,
            height: self.height,
            coords: self.pixels().collect(),
        }
    }

    pub fn crop(&self, rect: Rect) -> BinaryMask {
        let mut bits = Vec::with_capacity(rect.width() * rect.height());
        for row in rect.row0..rect.row1 {
            let start = row * self.width;
            bits.extend_from_slice(&self.bits[start + rect.col0..start + rect.col1]);
        }
        BinaryMask {
            width: rect.width(),
            height: rect.height(),
            bits,
        }
    }

    pub fn transformed(&self, t: Transform) -> BinaryMask {
        let (width, height, bits) = t.apply(self.width, self.height, &self.bits);
        BinaryMask { width, height, bits }
    }
}

/// Real-valued energy over a grid; background pixels hold [`BACKGROUND`].
///
/// Every foreground value lies in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyMap<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

impl<T: Real> EnergyMap<T> {
    pub fn new(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        let bg = T::lit(BACKGROUND);
        for (i, &v) in values.iter().enumerate() {
            if v.is_nan() {
                return Err(Error::Format(format!(
                    "NaN energy at pixel ({}, {})",
                    i / width,
                    i % width
                )));
            }
            if v != bg && !(v >= T::zero() && v <= T::one()) {
                return Err(Error::Range(format!(
                    "energy {v} at pixel ({}, {}) outside [0, 1]",
                    i / width,
                    i % width
                )));
            }
        }
        Ok(Self { width, height, values })
    }

    pub fn background(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![T::lit(BACKGROUND); width.saturating_mul(height)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn raw(&self, row: usize, col: usize) -> T {
        self.values[row * self.width + col]
    }

    /// Energy at a pixel, `None` on background.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        let v = self.values[row * self.width + col];
        (v >= T::zero()).then_some(v)
    }

    #[inline]
    pub fn is_foreground_at(&self, index: usize) -> bool {
        self.values[index] >= T::zero()
    }

    pub fn foreground(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.values.iter().map(|&v| v >= T::zero()).collect(),
        }
    }

    /// Converts to another scalar type. Background stays background.
    pub fn cast<U: Real>(&self) -> EnergyMap<U> {
        EnergyMap {
            width: self.width,
            height: self.height,
            values: self
                .values
                .iter()
                .map(|&v| {
                    let u = U::from(v).expect("finite energy converts");
                    // clamp guards against rounding a value just above 1 when narrowing
                    if v >= T::zero() {
                        u.max(U::zero()).min(U::one())
                    } else {
                        U::lit(BACKGROUND)
                    }
                })
                .collect(),
        }
    }

    /// Applies `f` to every foreground value; results are clamped into `[0, 1]`.
    pub fn map_foreground(&self, mut f: impl FnMut(usize, T) -> T) -> EnergyMap<T> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v >= T::zero() {
                    f(i, v).max(T::zero()).min(T::one())
                } else {
                    v
                }
            })
            .collect();
        EnergyMap {
            width: self.width,
            height: self.height,
            values,
        }
    }

    pub fn transformed(&self, t: Transform) -> EnergyMap<T> {
        let (width, height, values) = t.apply(self.width, self.height, &self.values);
        EnergyMap { width, height, values }
    }
}

/// Set of grid coordinates inside a `width x height` grid, iterated in row-major order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PixelSet {
    width: usize,
    height: usize,
    coords: BTreeSet<Pixel>,
}

impl PixelSet {
    pub fn new(width: usize, height: usize, coords: impl IntoIterator<Item = Pixel>) -> Result<Self> {
        let coords: BTreeSet<Pixel> = coords.into_iter().collect();
        if let Some(&(r, c)) = coords.iter().find(|&&(r, c)| r >= height || c >= width) {
            return Err(Error::Range(format!("pixel ({r}, {c}) outside {width}x{height} grid")));
        }
        Ok(Self { width, height, coords })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            coords: BTreeSet::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn contains(&self, p: Pixel) -> bool {
        self.coords.contains(&p)
    }

    pub fn iter(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.coords.iter().copied()
    }

    pub fn to_mask(&self) -> BinaryMask {
        let mut mask = BinaryMask {
            width: self.width,
            height: self.height,
            bits: vec![false; self.width * self.height],
        };
        for &(r, c) in &self.coords {
            mask.set(r, c, true);
        }
        mask
    }

    pub fn union(&self, other: &PixelSet) -> PixelSet {
        PixelSet {
            width: self.width,
            height: self.height,
            coords: self.coords.union(&other.coords).copied().collect(),
        }
    }

    /// Shifts every coordinate by `(dr, dc)` into a `width x height` grid.
    pub(crate) fn translated(&self, dr: usize, dc: usize, width: usize, height: usize) -> PixelSet {
        PixelSet {
            width,
            height,
            coords: self.coords.iter().map(|&(r, c)| (r + dr, c + dc)).collect(),
        }
    }

    /// Restriction to a rectangle, in the rectangle's local coordinates.
    pub fn crop(&self, rect: Rect) -> PixelSet {
        PixelSet {
            width: rect.width(),
            height: rect.height(),
            coords: self
                .coords
                .iter()
                .filter(|&&(r, c)| r >= rect.row0 && r < rect.row1 && c >= rect.col0 && c < rect.col1)
                .map(|&(r, c)| (r - rect.row0, c - rect.col0))
                .collect(),
        }
    }

    pub fn transformed(&self, t: Transform) -> PixelSet {
        let (width, height) = t.dims(self.width, self.height);
        PixelSet {
            width,
            height,
            coords: self
                .coords
                .iter()
                .map(|&p| t.map_pixel(p, self.width, self.height))
                .collect(),
        }
    }
}
