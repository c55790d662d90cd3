//! Plain graymap (P2) tiling of first-layer weight columns.

use std::fmt::Write as _;

use dann_core::Matrix;

pub const MAX_TILES: usize = 100;

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Graymap {
    /// Plain PGM text with maxval 255 and lines kept under 70 characters.
    pub fn to_plain(&self) -> String {
        let mut out = format!("P2\n{} {}\n255\n", self.width, self.height);
        for row in self.pixels.chunks(self.width.max(1)) {
            let mut line = String::new();
            for p in row {
                if line.len() + 4 > 70 {
                    out.push_str(&line);
                    out.push('\n');
                    line.clear();
                }
                if !line.is_empty() {
                    line.push(' ');
                }
                let _ = write!(line, "{p}");
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

/// Side length when `d` is a perfect square.
pub fn square_side(d: usize) -> Option<usize> {
    let s = (d as f64).sqrt().round() as usize;
    (s * s == d).then_some(s)
}

/// Scales one tile to `0..=255`. A constant tile becomes mid-gray.
pub fn normalize_tile(values: &[f64]) -> Vec<u8> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo || hi.is_nan() || lo.is_nan() {
        return vec![128; values.len()];
    }
    values
        .iter()
        .map(|v| ((v - lo) / (hi - lo) * 255.0).round() as u8)
        .collect()
}

/// Tiles the first `min(k, MAX_TILES)` columns of a `d × k` weight matrix
/// (bias row excluded) on a `ceil(sqrt(n))`-wide grid. Unused cells stay
/// black. Returns `None` when `d` is not a perfect square.
pub fn filter_image(weights: &Matrix) -> Option<Graymap> {
    let side = square_side(weights.rows())?;
    let n = weights.cols().min(MAX_TILES);
    let grid_w = (n as f64).sqrt().ceil() as usize;
    let grid_h = n.div_ceil(grid_w.max(1));
    let width = grid_w * side;
    let height = grid_h * side;
    let mut pixels = vec![0u8; width * height];
    for t in 0..n {
        let column: Vec<f64> = (0..weights.rows()).map(|r| weights.get(r, t)).collect();
        let tile = normalize_tile(&column);
        let (gx, gy) = (t % grid_w, t / grid_w);
        for (i, &p) in tile.iter().enumerate() {
            let (x, y) = (gx * side + i % side, gy * side + i / side);
            pixels[y * width + x] = p;
        }
    }
    Some(Graymap {
        width,
        height,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squares() {
        assert_eq!(square_side(784), Some(28));
        assert_eq!(square_side(1), Some(1));
        assert_eq!(square_side(800), None);
    }

    #[test]
    fn tile_normalization() {
        assert_eq!(normalize_tile(&[0.3; 4]), vec![128; 4]);
        assert_eq!(normalize_tile(&[-1.0, 0.0, 1.0]), vec![0, 128, 255]);
    }

    #[test]
    fn grid_geometry() {
        let w = Matrix::zeros(784, 120);
        let img = filter_image(&w).unwrap();
        assert_eq!((img.width, img.height), (280, 280));
        let img = filter_image(&Matrix::zeros(4, 5)).unwrap();
        assert_eq!((img.width, img.height), (6, 4));
        assert!(filter_image(&Matrix::zeros(5, 3)).is_none());
    }
}
