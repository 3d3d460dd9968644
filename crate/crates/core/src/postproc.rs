//! Post-processing of the averaged field into a clean one-pixel-wide
//! binary edge map: normalization, band thresholding, majority smoothing
//! and morphological thinning.

use crate::error::{Error, Result};
use crate::rpi::AveragedField;

/// A {0,1} grid; 1 denotes an edge pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryEdgeMap {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryEdgeMap {
    pub fn new(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::dims(format!(
                "bit buffer of length {} does not match {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::parameter("edge map entries must be 0 or 1"));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y) as u8);
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.bits[y * self.width + x]
    }

    /// Out-of-bounds neighbors read as background.
    #[inline]
    fn at(&self, x: isize, y: isize) -> u8 {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            0
        } else {
            self.bits[y as usize * self.width + x as usize]
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Number of 8-connected foreground components.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.bits.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.bits.len() {
            if self.bits[start] == 0 || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(idx) = stack.pop() {
                let (x, y) = ((idx % self.width) as isize, (idx / self.width) as isize);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (nx, ny) = (x + dx, y + dy);
                        if self.at(nx, ny) == 1 {
                            let nidx = ny as usize * self.width + nx as usize;
                            if !seen[nidx] {
                                seen[nidx] = true;
                                stack.push(nidx);
                            }
                        }
                    }
                }
            }
        }
        count
    }
}

/// The inclusive band `[p_low, p_up]` around the zero-level set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdBand {
    pub p_low: f64,
    pub p_up: f64,
}

impl ThresholdBand {
    pub fn new(p_low: f64, p_up: f64) -> Result<Self> {
        if !(p_low <= 0.0 && 0.0 <= p_up) {
            return Err(Error::parameter(format!(
                "band [{p_low}, {p_up}] must straddle zero"
            )));
        }
        if !(p_low < p_up) {
            return Err(Error::parameter(format!(
                "band bounds must satisfy p_low < p_up, got [{p_low}, {p_up}]"
            )));
        }
        Ok(Self { p_low, p_up })
    }
}

impl Default for ThresholdBand {
    fn default() -> Self {
        // Asymmetric band biased toward negative (interior) values.
        Self {
            p_low: -0.175,
            p_up: 0.075,
        }
    }
}

/// Divide every entry by `max|phi_bar| + min|phi_bar|`; output magnitudes
/// are at most 1.
pub fn normalize_field(phi_bar: &AveragedField) -> Result<AveragedField> {
    let max_abs = phi_bar
        .phi_bar()
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if max_abs == 0.0 {
        return Err(Error::DegenerateInput(
            "cannot normalize an identically zero field".into(),
        ));
    }
    let min_abs = phi_bar
        .phi_bar()
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    let denom = max_abs + min_abs;
    let data = phi_bar.phi_bar().iter().map(|v| v / denom).collect();
    AveragedField::new(phi_bar.width(), phi_bar.height(), data)
}

/// Bit = 1 iff `p_low <= value <= p_up`, inclusive at both ends.
pub fn threshold_band(norm: &AveragedField, band: ThresholdBand) -> BinaryEdgeMap {
    let bits = norm
        .phi_bar()
        .iter()
        .map(|&v| (band.p_low <= v && v <= band.p_up) as u8)
        .collect();
    BinaryEdgeMap {
        width: norm.width(),
        height: norm.height(),
        bits,
    }
}

/// One synchronous majority vote over the full 3x3 neighborhood of every
/// pixel, center included: the new value is 1 exactly when at least 5 of
/// the 9 cells are set. Out-of-image cells count as background.
///
/// The center must take part in the vote. A center-excluded vote (1 iff
/// at least 5 of the 8 neighbors are set) erases every bounded region
/// when iterated: the lexicographically first set pixel has at most four
/// set neighbors and is deleted on each pass, so the only fixed point is
/// the empty map.
fn majority_pass(edges: &BinaryEdgeMap) -> BinaryEdgeMap {
    BinaryEdgeMap::from_fn(edges.width, edges.height, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let mut count = 0;
        for dy in -1..=1_isize {
            for dx in -1..=1_isize {
                count += edges.at(x + dx, y + dy);
            }
        }
        count >= 5
    })
}

/// Majority smoothing; with `repeat_until_stable` the vote is iterated
/// until a full pass changes nothing.
pub fn majority_smooth(edges: &BinaryEdgeMap, repeat_until_stable: bool) -> BinaryEdgeMap {
    let mut current = majority_pass(edges);
    if repeat_until_stable {
        loop {
            let next = majority_pass(&current);
            if next == current {
                break;
            }
            current = next;
        }
    }
    current
}

// Neighbor offsets in the order x1..x8 = E, NE, N, NW, W, SW, S, SE
// (counterclockwise in image coordinates with y pointing down).
const NEIGHBORS: [(isize, isize); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Deletion test for one thinning subpass.
///
/// Conditions of the two-subiteration scheme: the crossing number G1
/// guarantees local connectivity is preserved, G2 restricts deletion to
/// contour pixels, and G3/G3' alternate between the two subfields.
fn thin_deletable(n: &[u8; 8], second_subpass: bool) -> bool {
    // G1: exactly one 0 -> 1 transition pattern around the pixel.
    let mut crossings = 0;
    for i in 0..4 {
        let a = n[2 * i];
        let b = n[2 * i + 1];
        let c = n[(2 * i + 2) % 8];
        if a == 0 && (b == 1 || c == 1) {
            crossings += 1;
        }
    }
    if crossings != 1 {
        return false;
    }
    // G2: 2 <= min(n1, n2) <= 3.
    let mut n1 = 0;
    let mut n2 = 0;
    for k in 0..4 {
        if n[2 * k] == 1 || n[2 * k + 1] == 1 {
            n1 += 1;
        }
        if n[2 * k + 1] == 1 || n[(2 * k + 2) % 8] == 1 {
            n2 += 1;
        }
    }
    let m = n1.min(n2);
    if !(2..=3).contains(&m) {
        return false;
    }
    // G3 / G3'.
    if second_subpass {
        (n[5] | n[6] | (1 - n[3])) & n[4] == 0
    } else {
        (n[1] | n[2] | (1 - n[7])) & n[0] == 0
    }
}

/// True when (x, y) lies in a fully set 2x2 block whose surrounding ring
/// of 12 pixels is empty. Such squares are fundamental geometry the
/// thinning must keep.
fn in_isolated_square(map: &BinaryEdgeMap, x: isize, y: isize) -> bool {
    for &(bx, by) in &[(x - 1, y - 1), (x, y - 1), (x - 1, y), (x, y)] {
        let mut block_full = true;
        for dy in 0..2 {
            for dx in 0..2 {
                if map.at(bx + dx, by + dy) == 0 {
                    block_full = false;
                }
            }
        }
        if !block_full {
            continue;
        }
        let mut ring_empty = true;
        for dy in -1..=2_isize {
            for dx in -1..=2_isize {
                let inside = (0..2).contains(&dx) && (0..2).contains(&dy);
                if !inside && map.at(bx + dx, by + dy) == 1 {
                    ring_empty = false;
                }
            }
        }
        if ring_empty {
            return true;
        }
    }
    false
}

fn thin_subpass(map: &BinaryEdgeMap, second_subpass: bool) -> (BinaryEdgeMap, bool) {
    let mut bits = map.bits.clone();
    let mut changed = false;
    for y in 0..map.height as isize {
        for x in 0..map.width as isize {
            let idx = y as usize * map.width + x as usize;
            if map.bits[idx] == 0 {
                continue;
            }
            let mut n = [0u8; 8];
            for (i, &(dx, dy)) in NEIGHBORS.iter().enumerate() {
                n[i] = map.at(x + dx, y + dy);
            }
            if thin_deletable(&n, second_subpass) && !in_isolated_square(map, x, y) {
                bits[idx] = 0;
                changed = true;
            }
        }
    }
    (
        BinaryEdgeMap {
            width: map.width,
            height: map.height,
            bits,
        },
        changed,
    )
}

/// Iterative two-subpass morphological thinning. Stops after `max_iters`
/// full passes or when a pass deletes nothing. Diagonal single-pixel
/// lines and isolated 2x2 squares are preserved; deletion is monotone
/// and never disconnects an 8-connected component.
pub fn thin(edges: &BinaryEdgeMap, max_iters: usize) -> BinaryEdgeMap {
    let mut current = edges.clone();
    for _ in 0..max_iters {
        let (after_first, c1) = thin_subpass(&current, false);
        let (after_second, c2) = thin_subpass(&after_first, true);
        current = after_second;
        if !c1 && !c2 {
            break;
        }
    }
    current
}

/// All intermediate stages of the post-processing pipeline.
#[derive(Debug, Clone)]
pub struct PostprocStages {
    pub normalized: AveragedField,
    pub thresholded: BinaryEdgeMap,
    pub smoothed: BinaryEdgeMap,
    pub thinned: BinaryEdgeMap,
}

impl PostprocStages {
    pub fn edges(&self) -> &BinaryEdgeMap {
        &self.thinned
    }
}

/// `normalize -> threshold -> majority (until stable) -> thin`.
pub fn postprocess_pipeline(
    phi_bar: &AveragedField,
    band: ThresholdBand,
    thin_iters: usize,
) -> Result<PostprocStages> {
    if thin_iters == 0 {
        return Err(Error::parameter("thin_iters must be >= 1"));
    }
    let normalized = normalize_field(phi_bar)?;
    let thresholded = threshold_band(&normalized, band);
    let smoothed = majority_smooth(&thresholded, true);
    let thinned = thin(&smoothed, thin_iters);
    Ok(PostprocStages {
        normalized,
        thresholded,
        smoothed,
        thinned,
    })
}
