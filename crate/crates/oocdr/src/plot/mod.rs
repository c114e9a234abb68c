//! Scatter and density-heatmap rendering for 2-D projections.
//!
//! Both renderers are pure functions from (data, spec) to a raster image,
//! so identical inputs produce byte-identical files. Scatter plots color
//! points by label through a fixed categorical palette; heat maps bin
//! points into a tile grid and map counts through a fixed blue to red
//! ramp, optionally log-scaled.

mod raster;

pub use raster::RasterImage;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::DataMatrix;

/// Fixed categorical palette; labels are assigned colors by sorted order
/// and wrap around past ten classes.
pub const CATEGORICAL_PALETTE: [[u8; 3]; 10] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
];

/// Fraction of the data span added on each side of a scatter plot.
pub const SCATTER_MARGIN: f64 = 0.02;

/// Rows per parallel binning chunk; per-chunk histograms are merged in
/// chunk order so the thread count never changes the result.
const BIN_CHUNK_ROWS: usize = 1 << 16;

#[derive(Debug, Clone)]
pub struct ScatterSpec {
    pub width: usize,
    pub height: usize,
    /// Points are drawn as squares of side `2 * point_radius + 1`.
    pub point_radius: usize,
    pub background: [u8; 3],
}

impl Default for ScatterSpec {
    fn default() -> Self {
        ScatterSpec {
            width: 800,
            height: 800,
            point_radius: 1,
            background: [255, 255, 255],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorScale {
    Linear,
    Log,
}

/// The only built-in colormap, a blue to red ramp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Colormap {
    #[default]
    BlueRed,
}

#[derive(Debug, Clone)]
pub struct HeatmapSpec {
    pub grid_w: usize,
    pub grid_h: usize,
    pub scale: ColorScale,
    pub width: usize,
    pub height: usize,
    pub colormap: Colormap,
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        HeatmapSpec {
            grid_w: 64,
            grid_h: 64,
            scale: ColorScale::Linear,
            width: 640,
            height: 640,
            colormap: Colormap::BlueRed,
        }
    }
}

/// Min and max per axis of a 2-D matrix.
fn bounding_box(y: &DataMatrix) -> [(f64, f64); 2] {
    let mut bbox = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    for row in y.rows_iter() {
        for axis in 0..2 {
            let v = row[axis] as f64;
            bbox[axis].0 = bbox[axis].0.min(v);
            bbox[axis].1 = bbox[axis].1.max(v);
        }
    }
    bbox
}

fn require_2d(y: &DataMatrix, what: &str) -> Result<()> {
    if y.dims() != 2 {
        return Err(Error::validation(format!(
            "{what} requires a 2-D projection, got {} dims",
            y.dims()
        )));
    }
    if y.n_rows() == 0 {
        return Err(Error::validation(format!("{what}: projection has no rows")));
    }
    Ok(())
}

/// Render a labeled scatter plot.
///
/// The viewport is the data bounding box expanded by [`SCATTER_MARGIN`]
/// per side; a zero-span axis is widened to one unit so the mapping
/// stays defined. Points are drawn in row order, so overlaps resolve
/// deterministically.
pub fn render_scatter(
    y: &DataMatrix,
    labels: Option<&[i32]>,
    spec: &ScatterSpec,
) -> Result<RasterImage> {
    require_2d(y, "render_scatter")?;
    let n = y.n_rows();
    if let Some(l) = labels {
        if l.len() != n {
            return Err(Error::validation(format!(
                "labels length {} does not match {} rows",
                l.len(),
                n
            )));
        }
    }
    let mut color_of = std::collections::BTreeMap::new();
    if let Some(l) = labels {
        for &label in l {
            let next = color_of.len();
            color_of
                .entry(label)
                .or_insert(CATEGORICAL_PALETTE[next % CATEGORICAL_PALETTE.len()]);
        }
        // BTreeMap iteration is sorted, so reassign by label order.
        let sorted: Vec<i32> = color_of.keys().copied().collect();
        for (rank, label) in sorted.into_iter().enumerate() {
            color_of.insert(label, CATEGORICAL_PALETTE[rank % CATEGORICAL_PALETTE.len()]);
        }
    }

    let bbox = bounding_box(y);
    let window: Vec<(f64, f64)> = bbox
        .iter()
        .map(|&(min, max)| {
            let span = if max > min { max - min } else { 1.0 };
            let lo = min - SCATTER_MARGIN * span;
            (lo, span * (1.0 + 2.0 * SCATTER_MARGIN))
        })
        .collect();

    let mut img = RasterImage::filled(spec.width, spec.height, spec.background)?;
    let r = spec.point_radius as isize;
    for (i, row) in y.rows_iter().enumerate() {
        let px = ((row[0] as f64 - window[0].0) / window[0].1 * (spec.width - 1) as f64).round();
        let py_up = ((row[1] as f64 - window[1].0) / window[1].1 * (spec.height - 1) as f64).round();
        let px = (px as isize).clamp(0, spec.width as isize - 1);
        let py = spec.height as isize - 1 - (py_up as isize).clamp(0, spec.height as isize - 1);
        let color = match labels {
            Some(l) => color_of[&l[i]],
            None => CATEGORICAL_PALETTE[0],
        };
        for dy in -r..=r {
            for dx in -r..=r {
                let (x, y) = (px + dx, py + dy);
                if x >= 0 && y >= 0 && (x as usize) < spec.width && (y as usize) < spec.height {
                    img.set(x as usize, y as usize, color);
                }
            }
        }
    }
    Ok(img)
}

/// Bin points into a `grid_w x grid_h` tile grid over the data bounding
/// box. Tiles are half open: a point on an interior edge belongs to the
/// tile on its right or top, and the maximum value itself lands in the
/// final tile, so every point is counted exactly once.
///
/// Returns counts in row-major order with tile row 0 at the bottom of
/// the data space.
pub fn tile_counts(y: &DataMatrix, grid_w: usize, grid_h: usize) -> Result<Vec<u64>> {
    require_2d(y, "tile_counts")?;
    if grid_w == 0 || grid_h == 0 {
        return Err(Error::validation("heatmap grid dimensions must be >= 1"));
    }
    let bbox = bounding_box(y);
    let (min_x, span_x) = (bbox[0].0, bbox[0].1 - bbox[0].0);
    let (min_y, span_y) = (bbox[1].0, bbox[1].1 - bbox[1].0);
    let tile_of = move |v: f64, min: f64, span: f64, tiles: usize| -> usize {
        if span <= 0.0 {
            return 0;
        }
        let t = ((v - min) / span * tiles as f64).floor() as usize;
        t.min(tiles - 1)
    };
    let bin_chunk = |rows: &[f32]| -> Vec<u64> {
        let mut counts = vec![0u64; grid_w * grid_h];
        for row in rows.chunks_exact(2) {
            let tx = tile_of(row[0] as f64, min_x, span_x, grid_w);
            let ty = tile_of(row[1] as f64, min_y, span_y, grid_h);
            counts[ty * grid_w + tx] += 1;
        }
        counts
    };
    let data = y.data();
    if y.n_rows() <= BIN_CHUNK_ROWS {
        return Ok(bin_chunk(data));
    }
    let partials: Vec<Vec<u64>> = data
        .par_chunks(BIN_CHUNK_ROWS * 2)
        .map(bin_chunk)
        .collect();
    let mut counts = vec![0u64; grid_w * grid_h];
    for partial in partials {
        for (total, part) in counts.iter_mut().zip(&partial) {
            *total += part;
        }
    }
    Ok(counts)
}

/// Map a normalized value in [0,1] through the blue to red ramp.
pub fn heat_color(v: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 4] = [
        [0.0, 0.0, 255.0],
        [0.0, 255.0, 255.0],
        [255.0, 255.0, 0.0],
        [255.0, 0.0, 0.0],
    ];
    let t = v.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let seg = (t.floor() as usize).min(STOPS.len() - 2);
    let frac = t - seg as f64;
    let mut out = [0u8; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        *slot = (STOPS[seg][c] + (STOPS[seg + 1][c] - STOPS[seg][c]) * frac).round() as u8;
    }
    out
}

/// Render a density heat map and return it with the maximum tile
/// count, the population of the densest tile.
pub fn render_heatmap(y: &DataMatrix, spec: &HeatmapSpec) -> Result<(RasterImage, u64)> {
    let counts = tile_counts(y, spec.grid_w, spec.grid_h)?;
    let max = counts.iter().copied().max().unwrap_or(0);
    debug_assert!(max >= 1, "nonempty input guarantees a populated tile");
    let tile_colors: Vec<[u8; 3]> = counts
        .iter()
        .map(|&c| {
            let v = match spec.scale {
                ColorScale::Linear => c as f64 / max as f64,
                ColorScale::Log => (1.0 + c as f64).ln() / (1.0 + max as f64).ln(),
            };
            heat_color(v)
        })
        .collect();
    let mut img = RasterImage::filled(spec.width, spec.height, [0, 0, 0])?;
    for py in 0..spec.height {
        // Image row 0 is the top, tile row 0 the bottom.
        let ty = spec.grid_h - 1 - py * spec.grid_h / spec.height;
        for px in 0..spec.width {
            let tx = px * spec.grid_w / spec.width;
            img.set(px, py, tile_colors[ty * spec.grid_w + tx]);
        }
    }
    Ok((img, max))
}
