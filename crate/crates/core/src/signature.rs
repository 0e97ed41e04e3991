//! Frame to contour signature.
//!
//! A frame is thresholded, the 8-connected foreground component with the
//! largest area is selected, its outer boundary is traced with Moore-neighbour
//! border following, and the distance from the region centroid is sampled at
//! uniform arc length along that boundary. In-plane rotation of the shape then
//! shows up as a circular shift of the signature.

use crate::error::{Error, Result};
use crate::raster::{BinaryImage, GrayImage};
use crate::sax::{self, SaxParams, SaxWord, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Polarity {
    /// Pixels darker than the threshold are foreground.
    #[default]
    DarkForeground,
    /// Pixels at or above the threshold are foreground.
    LightForeground,
}

impl std::str::FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dark" | "dark_fg" | "dark-fg" => Ok(Polarity::DarkForeground),
            "light" | "light_fg" | "light-fg" => Ok(Polarity::LightForeground),
            _ => Err(Error::invalid(format!("unknown polarity {s:?}"))),
        }
    }
}

pub fn binarize(img: &GrayImage, threshold: u8, polarity: Polarity) -> BinaryImage {
    let mask = match polarity {
        Polarity::DarkForeground => img.pixels().iter().map(|&p| p < threshold).collect(),
        Polarity::LightForeground => img.pixels().iter().map(|&p| p >= threshold).collect(),
    };
    BinaryImage::new(img.width(), img.height(), mask).expect("same dimensions as source")
}

/// One 8-connected foreground component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Label in [`Labeling::labels`], starting at 1.
    pub id: u32,
    pub area: usize,
    /// Top-most, then left-most pixel.
    pub first: (usize, usize),
    sum_x: u64,
    sum_y: u64,
}

/// Connected-component labels of a binary image; 0 marks background.
#[derive(Debug, Clone)]
pub struct Labeling {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    components: Vec<Component>,
}

const NEIGHBOURS8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

pub fn label_components(bin: &BinaryImage) -> Labeling {
    let (w, h) = (bin.width(), bin.height());
    let mask = bin.mask();
    let mut labels = vec![0u32; w * h];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        let id = components.len() as u32 + 1;
        let mut comp = Component {
            id,
            area: 0,
            first: (start % w, start / w),
            sum_x: 0,
            sum_y: 0,
        };
        labels[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            comp.area += 1;
            comp.sum_x += x as u64;
            comp.sum_y += y as u64;
            for (dx, dy) in NEIGHBOURS8 {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if mask[j] && labels[j] == 0 {
                    labels[j] = id;
                    stack.push(j);
                }
            }
        }
        components.push(comp);
    }
    Labeling {
        width: w,
        height: h,
        labels,
        components,
    }
}

impl Labeling {
    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Largest component by area; ties go to the one found first in raster
    /// order.
    pub fn largest(&self) -> Option<&Component> {
        self.components
            .iter()
            .fold(None, |best: Option<&Component>, c| match best {
                Some(b) if b.area >= c.area => Some(b),
                _ => Some(c),
            })
    }

    pub fn component(&self, id: u32) -> Option<&Component> {
        id.checked_sub(1)
            .and_then(|i| self.components.get(i as usize))
    }

    #[inline]
    fn is(&self, id: u32, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.labels[y as usize * self.width + x as usize] == id
    }
}

/// Mean pixel coordinate of component `id`.
pub fn region_centroid(labeling: &Labeling, id: u32) -> Result<(f64, f64)> {
    let c = labeling
        .component(id)
        .filter(|c| c.area > 0)
        .ok_or(Error::EmptyScene)?;
    Ok((
        c.sum_x as f64 / c.area as f64,
        c.sum_y as f64 / c.area as f64,
    ))
}

/// Closed boundary, clockwise on screen, starting at the top-most then
/// left-most pixel. The start point is not repeated at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    points: Vec<(i32, i32)>,
    perimeter: f64,
}

pub const MIN_CONTOUR_POINTS: usize = 8;

impl Contour {
    /// Build from an already-ordered closed boundary.
    pub fn new(points: Vec<(i32, i32)>) -> Result<Self> {
        if points.len() < MIN_CONTOUR_POINTS {
            return Err(Error::TooSmall(format!(
                "contour has {} points, need {MIN_CONTOUR_POINTS}",
                points.len()
            )));
        }
        let perimeter = closed_edges(&points).map(|(a, b)| seg_len(a, b)).sum();
        Ok(Contour { points, perimeter })
    }

    pub fn points(&self) -> &[(i32, i32)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }
}

fn closed_edges(points: &[(i32, i32)]) -> impl Iterator<Item = ((i32, i32), (i32, i32))> + '_ {
    points
        .iter()
        .copied()
        .zip(points.iter().copied().cycle().skip(1))
}

#[inline]
fn seg_len(a: (i32, i32), b: (i32, i32)) -> f64 {
    ((b.0 - a.0) as f64).hypot((b.1 - a.1) as f64)
}

// Clockwise on screen (y down), starting west.
const MOORE: [(isize, isize); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn dir_of(dx: isize, dy: isize) -> usize {
    MOORE
        .iter()
        .position(|&d| d == (dx, dy))
        .expect("unit neighbour offset")
}

/// One Moore step from `cur`, scanning clockwise from just after the
/// backtrack direction. Returns the next boundary pixel and the direction
/// from it back to the last background pixel examined.
fn moore_step(
    lab: &Labeling,
    id: u32,
    cur: (isize, isize),
    back: usize,
) -> Option<((isize, isize), usize)> {
    for i in 1..=8 {
        let d = (back + i) % 8;
        let next = (cur.0 + MOORE[d].0, cur.1 + MOORE[d].1);
        if lab.is(id, next.0, next.1) {
            let prev = MOORE[(d + 7) % 8];
            let bp = (cur.0 + prev.0, cur.1 + prev.1);
            return Some((next, dir_of(bp.0 - next.0, bp.1 - next.1)));
        }
    }
    None
}

/// Trace the outer boundary of component `id`.
pub fn trace_boundary(labeling: &Labeling, id: u32) -> Result<Contour> {
    let comp = labeling.component(id).ok_or(Error::EmptyScene)?;
    let start = (comp.first.0 as isize, comp.first.1 as isize);
    let mut points = vec![(start.0 as i32, start.1 as i32)];
    // West of the top-left pixel is background by construction.
    let Some((mut cur, mut back)) = moore_step(labeling, id, start, 0) else {
        return Contour::new(points);
    };
    let second = cur;
    // Each boundary pixel is entered at most 4 times.
    let cap = 4 * comp.area + 8;
    loop {
        let (next, nb) = moore_step(labeling, id, cur, back).expect("connected component");
        if cur == start && next == second {
            break;
        }
        points.push((cur.0 as i32, cur.1 as i32));
        if points.len() > cap {
            return Err(Error::invalid("boundary trace did not close"));
        }
        cur = next;
        back = nb;
    }
    Contour::new(points)
}

/// Boundary of the largest 8-connected foreground component.
pub fn largest_contour(bin: &BinaryImage) -> Result<Contour> {
    let labeling = label_components(bin);
    let id = labeling.largest().ok_or(Error::EmptyScene)?.id;
    trace_boundary(&labeling, id)
}

/// Centroid-distance profile sampled at uniform arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub series: TimeSeries,
    pub centroid: (f64, f64),
}

impl Signature {
    /// (max - min) / mean of the raw distances.
    pub fn relative_spread(&self) -> f64 {
        let s = self.series.samples();
        let (lo, hi) = s
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let mean = self.series.mean();
        if mean > 0.0 {
            (hi - lo) / mean
        } else {
            0.0
        }
    }
}

pub const MIN_SAMPLES: usize = 16;

/// Sample the closed polyline at arc lengths `i·L/n`, interpolating linearly
/// between vertices, and take the distance to `centroid` at each sample.
pub fn distance_signature(contour: &Contour, centroid: (f64, f64), n: usize) -> Result<Signature> {
    if n < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "signature length {n} below {MIN_SAMPLES}"
        )));
    }
    let total = contour.perimeter();
    if total < 1e-9 {
        return Err(Error::TooSmall("contour has zero length".into()));
    }
    let pts = contour.points();
    let m = pts.len();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    let mut seg_start = 0.0;
    let mut seg_length = seg_len(pts[0], pts[1 % m]);
    for i in 0..n {
        let target = i as f64 * total / n as f64;
        while seg + 1 < m && seg_start + seg_length <= target {
            seg_start += seg_length;
            seg += 1;
            seg_length = seg_len(pts[seg], pts[(seg + 1) % m]);
        }
        let (a, b) = (pts[seg], pts[(seg + 1) % m]);
        let t = if seg_length > 0.0 {
            ((target - seg_start) / seg_length).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let x = a.0 as f64 + t * (b.0 - a.0) as f64;
        let y = a.1 as f64 + t * (b.1 - a.1) as f64;
        out.push((x - centroid.0).hypot(y - centroid.1));
    }
    Ok(Signature {
        series: TimeSeries::new(out)?,
        centroid,
    })
}

/// Parameters of the frame-to-word pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub threshold: u8,
    pub polarity: Polarity,
    /// Signature length.
    pub samples: usize,
    pub sax: SaxParams,
    /// Signatures whose relative spread is below this are rejected as
    /// degenerate: such shapes are discs for matching purposes.
    pub min_relative_spread: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            threshold: 128,
            polarity: Polarity::DarkForeground,
            samples: 360,
            sax: SaxParams::default(),
            min_relative_spread: 0.05,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::invalid(format!(
                "signature length {} below {MIN_SAMPLES}",
                self.samples
            )));
        }
        if self.sax.segments() > self.samples {
            return Err(Error::invalid(format!(
                "word length {} exceeds signature length {}",
                self.sax.segments(),
                self.samples
            )));
        }
        if self.min_relative_spread.is_nan() || self.min_relative_spread < 0.0 {
            return Err(Error::invalid("min_relative_spread must be >= 0"));
        }
        Ok(())
    }
}

/// Raw signature of the dominant shape in a frame.
pub fn image_signature(img: &GrayImage, cfg: &PipelineConfig) -> Result<Signature> {
    let bin = binarize(img, cfg.threshold, cfg.polarity);
    let labeling = label_components(&bin);
    let id = labeling.largest().ok_or(Error::EmptyScene)?.id;
    let contour = trace_boundary(&labeling, id)?;
    let centroid = region_centroid(&labeling, id)?;
    distance_signature(&contour, centroid, cfg.samples)
}

/// Z-normalised signature, rejecting near-constant profiles.
pub fn normalized_signature(sig: &Signature, cfg: &PipelineConfig) -> Result<TimeSeries> {
    let spread = sig.relative_spread();
    if spread < cfg.min_relative_spread {
        return Err(Error::Degenerate(format!(
            "relative spread {spread:.4} below {}",
            cfg.min_relative_spread
        )));
    }
    let z = sax::znormalize(&sig.series)?;
    if z.is_degenerate() {
        return Err(Error::Degenerate("constant signature".into()));
    }
    Ok(z)
}

/// The full frame-to-word pipeline. Returns the word and the raw signature
/// it came from.
pub fn image_to_word(img: &GrayImage, cfg: &PipelineConfig) -> Result<(SaxWord, Signature)> {
    cfg.validate()?;
    let sig = image_signature(img, cfg)?;
    let z = normalized_signature(&sig, cfg)?;
    Ok((sax::sax_word(&z, cfg.sax)?, sig))
}
