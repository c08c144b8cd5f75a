//! Raster containers shared by segmentation, tracking and the simulator:
//! millimeter depth images, RGB images, binary masks, square-element
//! morphology, 4-connected floodfill and the PGM file formats.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

/// Depth values at or above this are outside the sensor range.
pub const MAX_DEPTH_MM: u16 = 10_000;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("data length {got} does not match {width}x{height}")]
    DimensionMismatch { width: usize, height: usize, got: usize },
    #[error("depth value {0} mm is outside the sensor range (< {MAX_DEPTH_MM})")]
    DepthOutOfRange(u16),
    #[error("not a valid PGM file: {0}")]
    BadPgm(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Depth raster in integer millimeters; 0 marks a sensor no-return.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize) -> Self {
        DepthImage { width, height, data: vec![0; width * height] }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<u16>) -> Result<Self, RasterError> {
        if data.len() != width * height {
            return Err(RasterError::DimensionMismatch { width, height, got: data.len() });
        }
        if let Some(&bad) = data.iter().find(|&&v| v >= MAX_DEPTH_MM) {
            return Err(RasterError::DepthOutOfRange(bad));
        }
        Ok(DepthImage { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, mm: u16) {
        self.data[row * self.width + col] = mm;
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    /// Writes a binary PGM (P5, maxval 65535, big-endian samples, value = mm).
    pub fn write_pgm<P: AsRef<Path>>(&self, path: P) -> Result<(), RasterError> {
        let mut out = Vec::with_capacity(self.data.len() * 2 + 32);
        write!(out, "P5\n{} {}\n65535\n", self.width, self.height)?;
        for &v in &self.data {
            out.extend_from_slice(&v.to_be_bytes());
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn read_pgm<P: AsRef<Path>>(path: P) -> Result<Self, RasterError> {
        let bytes = std::fs::read(path)?;
        let (width, height, maxval, pixels) = parse_pgm(&bytes)?;
        if maxval != 65535 {
            return Err(RasterError::BadPgm(format!("expected maxval 65535, got {maxval}")));
        }
        if pixels.len() != width * height * 2 {
            return Err(RasterError::BadPgm("truncated 16-bit pixel data".into()));
        }
        let data = pixels
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect();
        DepthImage::from_data(width, height, data)
    }
}

/// 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, fill: [u8; 3]) -> Self {
        ColorImage { width, height, data: vec![fill; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        self.data[row * self.width + col] = rgb;
    }

    /// True when every channel is below `threshold` ("black" pixels).
    #[inline]
    pub fn is_dark(&self, row: usize, col: usize, threshold: u8) -> bool {
        let [r, g, b] = self.get(row, col);
        r < threshold && g < threshold && b < threshold
    }
}

/// Binary raster used for edge masks, region masks and morphology.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask { width, height, bits: vec![false; width * height] }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> bool>(width: usize, height: usize, mut f: F) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                bits.push(f(row, col));
            }
        }
        Mask { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn union(&self, other: &Mask) -> Mask {
        debug_assert_eq!((self.width, self.height), (other.width, other.height));
        Mask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect(),
        }
    }

    pub fn intersection(&self, other: &Mask) -> Mask {
        debug_assert_eq!((self.width, self.height), (other.width, other.height));
        Mask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && b).collect(),
        }
    }

    /// Intersection-over-union against another mask of the same size.
    pub fn iou(&self, other: &Mask) -> f64 {
        let inter = self.intersection(other).count_set();
        let union = self.union(other).count_set();
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Writes an 8-bit binary PGM with 255 for set pixels.
    pub fn write_pgm<P: AsRef<Path>>(&self, path: P) -> Result<(), RasterError> {
        let mut out = Vec::with_capacity(self.bits.len() + 32);
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.extend(self.bits.iter().map(|&b| if b { 255u8 } else { 0 }));
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn read_pgm<P: AsRef<Path>>(path: P) -> Result<Self, RasterError> {
        let bytes = std::fs::read(path)?;
        let (width, height, maxval, pixels) = parse_pgm(&bytes)?;
        if maxval != 255 {
            return Err(RasterError::BadPgm(format!("expected maxval 255, got {maxval}")));
        }
        if pixels.len() != width * height {
            return Err(RasterError::BadPgm("truncated 8-bit pixel data".into()));
        }
        Ok(Mask { width, height, bits: pixels.iter().map(|&b| b > 0).collect() })
    }
}

fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, u32, &[u8]), RasterError> {
    let mut pos = 0usize;
    let mut fields = Vec::with_capacity(4);
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(RasterError::BadPgm("missing P5 magic".into()));
    }
    pos += 2;
    // Header tokens separated by whitespace, '#' starts a comment line.
    while fields.len() < 3 && pos < bytes.len() {
        match bytes[pos] {
            b'#' => {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            }
            c if c.is_ascii_whitespace() => pos += 1,
            _ => {
                let start = pos;
                while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                let token = std::str::from_utf8(&bytes[start..pos])
                    .map_err(|_| RasterError::BadPgm("non-ascii header".into()))?;
                let value: u32 = token
                    .parse()
                    .map_err(|_| RasterError::BadPgm(format!("bad header token {token:?}")))?;
                fields.push(value);
            }
        }
    }
    if fields.len() != 3 || pos >= bytes.len() {
        return Err(RasterError::BadPgm("incomplete header".into()));
    }
    pos += 1; // single whitespace byte after maxval
    Ok((fields[0] as usize, fields[1] as usize, fields[2], &bytes[pos..]))
}

/// Dilation with a square structuring element of the given radius
/// (side 2r+1). Pixels outside the image count as background.
pub fn dilate(mask: &Mask, radius: usize) -> Mask {
    box_filter(mask, radius, true)
}

/// Erosion with the same square element; pixels outside the image count as
/// background, so set regions shrink away from the border.
pub fn erode(mask: &Mask, radius: usize) -> Mask {
    box_filter(mask, radius, false)
}

/// Separable box OR (dilate) / AND (erode) in two passes.
fn box_filter(mask: &Mask, radius: usize, dilating: bool) -> Mask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width, mask.height);
    let r = radius as isize;
    let horiz = Mask::from_fn(w, h, |row, col| {
        let mut acc = !dilating;
        for dc in -r..=r {
            let c = col as isize + dc;
            let v = if c < 0 || c >= w as isize {
                false
            } else {
                mask.get(row, c as usize)
            };
            if dilating {
                acc = acc || v;
            } else {
                acc = acc && v;
            }
        }
        acc
    });
    Mask::from_fn(w, h, |row, col| {
        let mut acc = !dilating;
        for dr in -r..=r {
            let rr = row as isize + dr;
            let v = if rr < 0 || rr >= h as isize {
                false
            } else {
                horiz.get(rr as usize, col)
            };
            if dilating {
                acc = acc || v;
            } else {
                acc = acc && v;
            }
        }
        acc
    })
}

/// 4-connected components of the set pixels. Pixel order within a region is
/// unspecified; callers that need row-major order sort the survivors.
pub fn flood_regions(fillable: &Mask) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = (fillable.width, fillable.height);
    let mut seen = vec![false; w * h];
    let mut regions = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !fillable.bits[start] || seen[start] {
            continue;
        }
        let mut region = Vec::new();
        seen[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (row, col) = (idx / w, idx % w);
            region.push((row, col));
            let mut visit = |nidx: usize| {
                if fillable.bits[nidx] && !seen[nidx] {
                    seen[nidx] = true;
                    stack.push(nidx);
                }
            };
            if col > 0 {
                visit(idx - 1);
            }
            if col + 1 < w {
                visit(idx + 1);
            }
            if row > 0 {
                visit(idx - w);
            }
            if row + 1 < h {
                visit(idx + w);
            }
        }
        regions.push(region);
    }
    regions
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn depth_pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pgm");
        let mut img = DepthImage::new(5, 3);
        img.set(0, 0, 1234);
        img.set(2, 4, 9999);
        img.write_pgm(&path).unwrap();
        let back = DepthImage::read_pgm(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn mask_pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let mask = Mask::from_fn(4, 4, |r, c| (r + c) % 2 == 0);
        mask.write_pgm(&path).unwrap();
        assert_eq!(Mask::read_pgm(&path).unwrap(), mask);
    }

    #[test]
    fn rejects_out_of_range_depth() {
        let err = DepthImage::from_data(1, 1, vec![MAX_DEPTH_MM]).unwrap_err();
        assert!(matches!(err, RasterError::DepthOutOfRange(_)));
    }

    #[test]
    fn dilate_grows_single_pixel_to_square() {
        let mut mask = Mask::new(5, 5);
        mask.set(2, 2, true);
        let grown = dilate(&mask, 1);
        for row in 0..5 {
            for col in 0..5 {
                let expect = (1..=3).contains(&row) && (1..=3).contains(&col);
                assert_eq!(grown.get(row, col), expect, "at {row},{col}");
            }
        }
    }

    #[test]
    fn erode_removes_thin_structures() {
        let mask = Mask::from_fn(7, 7, |row, _| row == 3);
        assert_eq!(erode(&mask, 1).count_set(), 0);
        let block = Mask::from_fn(7, 7, |row, col| (2..=4).contains(&row) && (2..=4).contains(&col));
        let core = erode(&block, 1);
        assert_eq!(core.count_set(), 1);
        assert!(core.get(3, 3));
    }

    #[test]
    fn morphology_matches_brute_force_on_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let mask = Mask::from_fn(17, 13, |_, _| rng.random::<f32>() < 0.4);
            for radius in 1..=2usize {
                let fast = dilate(&mask, radius);
                let slow = Mask::from_fn(17, 13, |row, col| {
                    let r = radius as isize;
                    for dr in -r..=r {
                        for dc in -r..=r {
                            let (rr, cc) = (row as isize + dr, col as isize + dc);
                            if rr >= 0 && cc >= 0 && rr < 13 && cc < 17 && mask.get(rr as usize, cc as usize) {
                                return true;
                            }
                        }
                    }
                    false
                });
                assert_eq!(fast, slow, "dilate radius {radius}");
                let fast_e = erode(&mask, radius);
                let slow_e = Mask::from_fn(17, 13, |row, col| {
                    let r = radius as isize;
                    for dr in -r..=r {
                        for dc in -r..=r {
                            let (rr, cc) = (row as isize + dr, col as isize + dc);
                            if rr < 0 || cc < 0 || rr >= 13 || cc >= 17 || !mask.get(rr as usize, cc as usize) {
                                return false;
                            }
                        }
                    }
                    true
                });
                assert_eq!(fast_e, slow_e, "erode radius {radius}");
            }
        }
    }

    /// Independent connected-components labeling (two-pass union-find) used
    /// as the floodfill oracle.
    fn brute_force_components(mask: &Mask) -> Vec<Vec<(usize, usize)>> {
        let (w, h) = (mask.width(), mask.height());
        let mut label = vec![usize::MAX; w * h];
        let mut parent: Vec<usize> = Vec::new();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for row in 0..h {
            for col in 0..w {
                if !mask.get(row, col) {
                    continue;
                }
                let left = if col > 0 { label[row * w + col - 1] } else { usize::MAX };
                let up = if row > 0 { label[(row - 1) * w + col] } else { usize::MAX };
                let l = match (left, up) {
                    (usize::MAX, usize::MAX) => {
                        parent.push(parent.len());
                        parent.len() - 1
                    }
                    (l, usize::MAX) | (usize::MAX, l) => find(&mut parent, l),
                    (a, b) => {
                        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                        let keep = ra.min(rb);
                        parent[ra.max(rb)] = keep;
                        keep
                    }
                };
                label[row * w + col] = l;
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<(usize, usize)>> = Default::default();
        for row in 0..h {
            for col in 0..w {
                let l = label[row * w + col];
                if l != usize::MAX {
                    let root = find(&mut parent, l);
                    groups.entry(root).or_default().push((row, col));
                }
            }
        }
        let mut out: Vec<_> = groups.into_values().collect();
        for g in &mut out {
            g.sort_unstable();
        }
        out.sort();
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn floodfill_matches_union_find_labeling(seed in 0u64..1000, w in 1usize..64, h in 1usize..64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mask = Mask::from_fn(w, h, |_, _| rng.random::<f32>() < 0.5);
            let mut fast = flood_regions(&mask);
            for region in &mut fast {
                region.sort_unstable();
            }
            fast.sort();
            prop_assert_eq!(fast, brute_force_components(&mask));
        }
    }
}
