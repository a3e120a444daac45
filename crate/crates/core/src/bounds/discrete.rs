//! Bounds for the count (discrete) event image: the disc-pixel intersection
//! matrix, dominant columns, and the greedy relaxed-IQP bound.

use std::collections::HashSet;

use super::cone::UncertaintyDisc;
use crate::events::CameraIntrinsics;
use crate::image::EventImage;

/// Sparse binary disc-by-pixel incidence `T`.
///
/// Rows are the retained discs; discs that reach no pixel are dropped and
/// `disc_index` maps each row back to its input position. Row pixel lists
/// are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Intersections {
    width: usize,
    height: usize,
    row_offsets: Vec<usize>,
    row_pixels: Vec<u32>,
    disc_index: Vec<usize>,
}

impl Intersections {
    /// Builds `T` directly from row pixel lists. Empty rows are dropped.
    pub fn from_rows(width: usize, height: usize, rows: &[Vec<u32>]) -> Self {
        let mut t = Self::empty(width, height);
        for (i, row) in rows.iter().enumerate() {
            let mut row = row.clone();
            row.sort_unstable();
            row.dedup();
            assert!(row.iter().all(|&j| (j as usize) < width * height), "pixel out of range");
            t.push_row(i, &row);
        }
        t
    }

    fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            row_offsets: vec![0],
            row_pixels: Vec::new(),
            disc_index: Vec::new(),
        }
    }

    fn push_row(&mut self, disc: usize, pixels: &[u32]) {
        if pixels.is_empty() {
            return;
        }
        self.row_pixels.extend_from_slice(pixels);
        self.row_offsets.push(self.row_pixels.len());
        self.disc_index.push(disc);
    }

    /// Number of retained discs.
    pub fn n_rows(&self) -> usize {
        self.disc_index.len()
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.row_pixels[self.row_offsets[r]..self.row_offsets[r + 1]]
    }

    /// Input disc position of row `r`.
    pub fn disc_index(&self, r: usize) -> usize {
        self.disc_index[r]
    }

    /// Column sums of `T`: the number of discs reaching each pixel.
    pub fn column_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.pixel_count()];
        for &j in &self.row_pixels {
            counts[j as usize] += 1;
        }
        counts
    }

    /// Column-major view: for each pixel, the increasing list of rows that
    /// reach it.
    pub fn columns(&self) -> Columns {
        let counts = self.column_counts();
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        offsets.push(0);
        for &c in &counts {
            offsets.push(offsets.last().unwrap() + c as usize);
        }
        let mut fill = offsets.clone();
        let mut rows = vec![0u32; self.row_pixels.len()];
        for r in 0..self.n_rows() {
            for &j in self.row(r) {
                rows[fill[j as usize]] = r as u32;
                fill[j as usize] += 1;
            }
        }
        Columns { offsets, rows }
    }

    /// Every distinct non-empty column of `T`, in pixel order of first
    /// appearance.
    pub fn distinct_columns(&self) -> Vec<Vec<u32>> {
        let cols = self.columns();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for j in 0..self.pixel_count() {
            let c = cols.column(j);
            if !c.is_empty() && seen.insert(c) {
                out.push(c.to_vec());
            }
        }
        out
    }
}

/// Compressed column storage of `T`.
#[derive(Debug, Clone)]
pub struct Columns {
    offsets: Vec<usize>,
    rows: Vec<u32>,
}

impl Columns {
    pub fn column(&self, j: usize) -> &[u32] {
        &self.rows[self.offsets[j]..self.offsets[j + 1]]
    }
}

/// Closed disc vs. closed unit pixel square centred at `(col, row)`.
fn disc_meets_pixel(d: &UncertaintyDisc, col: usize, row: usize) -> bool {
    let (x, y) = (col as f64, row as f64);
    let qx = d.centre.x.clamp(x - 0.5, x + 0.5);
    let qy = d.centre.y.clamp(y - 0.5, y + 0.5);
    let (dx, dy) = (d.centre.x - qx, d.centre.y - qy);
    (dx * dx + dy * dy).sqrt() <= d.radius
}

/// Intersection matrix `T` of the discs against the pixel grid.
///
/// Tangency counts as intersection. A zero-radius disc reaches exactly the
/// pixel its centre bins into. Invalid discs reach every pixel. Discs that
/// reach no pixel are dropped.
pub fn intersections(discs: &[UncertaintyDisc], cam: &CameraIntrinsics) -> Intersections {
    let (w, h) = (cam.width, cam.height);
    let mut t = Intersections::empty(w, h);
    let all: Vec<u32> = (0..(w * h) as u32).collect();
    let mut row = Vec::new();
    for (i, d) in discs.iter().enumerate() {
        row.clear();
        if !d.valid {
            t.push_row(i, &all);
            continue;
        }
        if d.radius == 0.0 {
            if let Some(j) = cam.pixel_index(&d.centre) {
                t.push_row(i, &[j as u32]);
            }
            continue;
        }
        let reach = d.radius + 0.5;
        let c0 = (d.centre.x - reach).ceil().max(0.0);
        let c1 = (d.centre.x + reach).floor().min(w as f64 - 1.0);
        let r0 = (d.centre.y - reach).ceil().max(0.0);
        let r1 = (d.centre.y + reach).floor().min(h as f64 - 1.0);
        if c0 > c1 || r0 > r1 {
            continue;
        }
        for r in r0 as usize..=r1 as usize {
            for c in c0 as usize..=c1 as usize {
                if disc_meets_pixel(d, c, r) {
                    row.push((r * w + c) as u32);
                }
            }
        }
        t.push_row(i, &row);
    }
    t
}

/// Pixel upper bound: the number of discs reaching each pixel.
pub fn pixel_upper_discrete(t: &Intersections) -> EventImage {
    EventImage::from_counts(t.width, t.height, t.column_counts())
}

/// Dominant columns of the incidence between discs and connected
/// components, stored as sets of row indices of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantColumns {
    columns: Vec<Vec<u32>>,
    n: usize,
}

impl DominantColumns {
    /// Wraps explicit columns over `n` discs. Used for constructed instances;
    /// [`dominant_columns`] is the normal route.
    pub fn from_columns(columns: Vec<Vec<u32>>, n: usize) -> Self {
        Self { columns, n }
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.columns
    }

    /// Number of discs `N` (the quota of the relaxed problem).
    pub fn n_discs(&self) -> usize {
        self.n
    }

    pub fn densities(&self) -> Vec<usize> {
        self.columns.iter().map(Vec::len).collect()
    }
}

/// Walks the discs; for each, every not-yet-visited pixel of maximum
/// coverage contributes its column once, duplicates within the disc being
/// marked visited.
fn for_each_dominant<'a>(t: &Intersections, cols: &'a Columns, counts: &[u32], mut emit: impl FnMut(&'a [u32])) {
    let mut visited = vec![false; t.pixel_count()];
    let mut local: HashSet<&'a [u32]> = HashSet::new();
    for r in 0..t.n_rows() {
        let row = t.row(r);
        let c_max = row.iter().map(|&j| counts[j as usize]).max().unwrap_or(0);
        local.clear();
        for &j in row {
            let j = j as usize;
            if visited[j] || counts[j] != c_max {
                continue;
            }
            visited[j] = true;
            let col = cols.column(j);
            if local.insert(col) {
                emit(col);
            }
        }
    }
}

/// Dominant columns of `M` computed directly from `T`, without building the
/// connected components.
pub fn dominant_columns(t: &Intersections) -> DominantColumns {
    let cols = t.columns();
    let counts = t.column_counts();
    let mut out = Vec::new();
    for_each_dominant(t, &cols, &counts, |c| out.push(c.to_vec()));
    DominantColumns {
        columns: out,
        n: t.n_rows(),
    }
}

/// Densities of the dominant columns only.
pub(crate) fn dominant_densities(t: &Intersections) -> Vec<usize> {
    let cols = t.columns();
    let counts = t.column_counts();
    let mut out = Vec::new();
    for_each_dominant(t, &cols, &counts, |c| out.push(c.len()));
    out
}

/// Greedy optimum of the relaxed IQP: take the densest columns while their
/// total stays below `n`, then fill the shortfall from the next one.
pub fn sos_upper_from_densities(densities: &[usize], n: usize) -> u64 {
    let mut sorted = densities.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut taken = 0u64;
    let mut total = 0u64;
    let n = n as u64;
    for &d in &sorted {
        let d = d as u64;
        if taken + d >= n {
            break;
        }
        taken += d;
        total += d * d;
    }
    let rest = n - taken;
    total + rest * rest
}

/// Discrete sum-of-squares upper bound from dominant columns.
pub fn sos_upper_discrete(columns: &DominantColumns) -> u64 {
    sos_upper_from_densities(&columns.densities(), columns.n)
}

/// Mean lower bound: discs lying wholly inside the image, over `P`.
pub fn mean_lower_discrete(discs: &[UncertaintyDisc], pixel_count: usize) -> f64 {
    on_image_count(discs) as f64 / pixel_count as f64
}

pub(crate) fn on_image_count(discs: &[UncertaintyDisc]) -> usize {
    discs.iter().filter(|d| d.on_image).count()
}
