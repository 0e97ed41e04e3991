//! Synthetic signaller silhouettes and corpus generation.
//!
//! The signaller is a flat stick figure built from capsules (segments with a
//! radius). Viewing geometry is reduced to three effects:
//!
//! * relative azimuth compresses body-lateral coordinates by `|cos(azimuth)|`;
//! * apparent size scales with `REFERENCE_DISTANCE_M / slant_range`;
//! * camera pitch `atan(altitude / distance)` tilts the figure's vertical
//!   axis in the image plane by that angle.
//!
//! Capsule radii are applied after projection, so a figure seen edge-on still
//! has the thickness of its limbs.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pgm;
use crate::raster::GrayImage;
use crate::sign::SignId;

pub const DEFAULT_BODY_HEIGHT_M: f64 = 1.75;
/// Limb capsule width as a fraction of body height.
pub const LIMB_WIDTH: f64 = 0.08;
/// Slant range at which the figure is drawn at [`PIXELS_PER_M_AT_REFERENCE`].
pub const REFERENCE_DISTANCE_M: f64 = 5.0;
pub const PIXELS_PER_M_AT_REFERENCE: f64 = 100.0;

pub const FOREGROUND: u8 = 0;
pub const BACKGROUND: u8 = 255;

/// Arm and leg angles of a static sign.
///
/// Shoulder angles are measured from horizontal-outward, positive upward:
/// `90` is an arm straight up, `-90` hangs along the body. Elbow angles bend
/// the forearm further upward relative to the upper arm.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSpec {
    pub sign: SignId,
    pub right_shoulder_deg: f64,
    pub left_shoulder_deg: f64,
    pub right_elbow_deg: f64,
    pub left_elbow_deg: f64,
    /// Angle of each leg away from vertical.
    pub leg_spread_deg: f64,
    pub body_height_m: f64,
}

impl PoseSpec {
    /// Default geometry for the three built-in signs.
    pub fn canonical(sign: &SignId) -> Result<PoseSpec> {
        let (right, left) = match sign {
            SignId::Yes => (45.0, 45.0),
            SignId::No => (45.0, -45.0),
            SignId::AttentionGained => (0.0, -90.0),
            SignId::Other(name) => {
                return Err(Error::invalid(format!("no canonical pose for sign {name}")))
            }
        };
        Ok(PoseSpec {
            sign: sign.clone(),
            right_shoulder_deg: right,
            left_shoulder_deg: left,
            right_elbow_deg: 0.0,
            left_elbow_deg: 0.0,
            leg_spread_deg: 6.0,
            body_height_m: DEFAULT_BODY_HEIGHT_M,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let shoulder = -90.0..=180.0;
        if !shoulder.contains(&self.right_shoulder_deg)
            || !shoulder.contains(&self.left_shoulder_deg)
        {
            return Err(Error::invalid(
                "shoulder angles must lie in -90..=180 degrees",
            ));
        }
        let elbow = -150.0..=150.0;
        if !elbow.contains(&self.right_elbow_deg) || !elbow.contains(&self.left_elbow_deg) {
            return Err(Error::invalid(
                "elbow angles must lie in -150..=150 degrees",
            ));
        }
        if !(0.0..=45.0).contains(&self.leg_spread_deg) {
            return Err(Error::invalid("leg spread must lie in 0..=45 degrees"));
        }
        if !(self.body_height_m > 0.0 && self.body_height_m.is_finite()) {
            return Err(Error::invalid("body height must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewSpec {
    /// Relative azimuth in degrees, 0 = frontal.
    pub azimuth_deg: f64,
    pub distance_m: f64,
    pub altitude_m: f64,
    pub width: usize,
    pub height: usize,
    /// Boundary jitter amplitude in pixels.
    pub noise_px: f64,
}

impl Default for ViewSpec {
    fn default() -> Self {
        ViewSpec {
            azimuth_deg: 0.0,
            distance_m: 3.0,
            altitude_m: 5.0,
            width: 640,
            height: 480,
            noise_px: 0.0,
        }
    }
}

pub const MIN_FRAME_SIDE: usize = 64;

impl ViewSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..360.0).contains(&self.azimuth_deg) {
            return Err(Error::invalid(format!(
                "azimuth {} outside [0, 360)",
                self.azimuth_deg
            )));
        }
        if !(self.distance_m > 0.0 && self.distance_m.is_finite()) {
            return Err(Error::invalid("distance must be positive"));
        }
        if !(self.altitude_m >= 0.0 && self.altitude_m.is_finite()) {
            return Err(Error::invalid("altitude must be >= 0"));
        }
        if self.width < MIN_FRAME_SIDE || self.height < MIN_FRAME_SIDE {
            return Err(Error::invalid(format!(
                "frame must be at least {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE}"
            )));
        }
        if !(self.noise_px >= 0.0 && self.noise_px.is_finite()) {
            return Err(Error::invalid("noise must be >= 0"));
        }
        Ok(())
    }

    pub fn slant_range_m(&self) -> f64 {
        self.distance_m.hypot(self.altitude_m)
    }

    pub fn pitch_rad(&self) -> f64 {
        self.altitude_m.atan2(self.distance_m)
    }

    pub fn pixels_per_m(&self) -> f64 {
        PIXELS_PER_M_AT_REFERENCE * REFERENCE_DISTANCE_M / self.slant_range_m()
    }
}

#[derive(Debug, Clone, Copy)]
struct Capsule {
    a: (f64, f64),
    b: (f64, f64),
    r: f64,
}

/// Body-frame capsules in units of body height: x lateral (positive towards
/// the signaller's left), z up from the feet.
fn body_capsules(pose: &PoseSpec) -> Vec<Capsule> {
    let limb = LIMB_WIDTH / 2.0;
    let cap = |a, b, r| Capsule { a, b, r };
    let mut out = vec![
        cap((0.0, 0.915), (0.0, 0.915), 0.065),
        cap((0.0, 0.82), (0.0, 0.87), 0.035),
        cap((0.0, 0.56), (0.0, 0.76), 0.09),
        cap((-0.12, 0.80), (0.12, 0.80), 0.045),
        cap((-0.07, 0.50), (0.07, 0.50), 0.05),
    ];
    let spread = pose.leg_spread_deg.to_radians();
    for side in [-1.0, 1.0] {
        let hip = (0.07 * side, 0.50);
        let foot = (
            hip.0 + side * 0.47 * spread.sin(),
            hip.1 - 0.47 * spread.cos(),
        );
        out.push(cap(hip, foot, limb));
    }
    // Right arm extends towards -x, left towards +x.
    for (side, shoulder_deg, elbow_deg) in [
        (-1.0, pose.right_shoulder_deg, pose.right_elbow_deg),
        (1.0, pose.left_shoulder_deg, pose.left_elbow_deg),
    ] {
        let shoulder = (0.13 * side, 0.80);
        let up = shoulder_deg.to_radians();
        let elbow = (
            shoulder.0 + side * 0.19 * up.cos(),
            shoulder.1 + 0.19 * up.sin(),
        );
        let fore = (shoulder_deg + elbow_deg).to_radians();
        let hand = (
            elbow.0 + side * 0.21 * fore.cos(),
            elbow.1 + 0.21 * fore.sin(),
        );
        out.push(cap(shoulder, elbow, limb));
        out.push(cap(elbow, hand, limb));
    }
    out
}

/// Render a dark silhouette on a white frame.
pub fn render_sign(pose: &PoseSpec, view: &ViewSpec, seed: u64) -> Result<GrayImage> {
    pose.validate()?;
    view.validate()?;
    let h = pose.body_height_m;
    let scale = view.pixels_per_m() * h;
    let squeeze = view.azimuth_deg.to_radians().cos().abs();
    let (ps, pc) = view.pitch_rad().sin_cos();
    let project = |(x, z): (f64, f64)| {
        // Body frame to image pixels (y down), then tilt by the pitch angle.
        let u = x * squeeze * scale;
        let v = -z * scale;
        (pc * u - ps * v, ps * u + pc * v)
    };
    let mut caps: Vec<Capsule> = body_capsules(pose)
        .into_iter()
        .map(|c| Capsule {
            a: project(c.a),
            b: project(c.b),
            r: c.r * scale,
        })
        .collect();

    if view.noise_px > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = view.noise_px;
        for c in &mut caps {
            c.a.0 += rng.random_range(-amp..=amp);
            c.a.1 += rng.random_range(-amp..=amp);
            c.b.0 += rng.random_range(-amp..=amp);
            c.b.1 += rng.random_range(-amp..=amp);
            c.r = (c.r + rng.random_range(-amp / 2.0..=amp / 2.0)).max(0.5);
        }
    }

    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for c in &caps {
        x0 = x0.min(c.a.0.min(c.b.0) - c.r);
        x1 = x1.max(c.a.0.max(c.b.0) + c.r);
        y0 = y0.min(c.a.1.min(c.b.1) - c.r);
        y1 = y1.max(c.a.1.max(c.b.1) + c.r);
    }
    let (w, hgt) = (view.width as f64, view.height as f64);
    // Keep a one-pixel background margin so the silhouette never touches the
    // frame edge.
    if x1 - x0 > w - 3.0 || y1 - y0 > hgt - 3.0 {
        return Err(Error::FrameOverflow {
            width: view.width,
            height: view.height,
        });
    }
    let dx = ((w - 1.0) - (x0 + x1)) / 2.0;
    let dy = ((hgt - 1.0) - (y0 + y1)) / 2.0;

    let mut img = GrayImage::filled(view.width, view.height, BACKGROUND)?;
    for c in &caps {
        let a = (c.a.0 + dx, c.a.1 + dy);
        let b = (c.b.0 + dx, c.b.1 + dy);
        fill_capsule(&mut img, a, b, c.r);
    }
    Ok(img)
}

fn fill_capsule(img: &mut GrayImage, a: (f64, f64), b: (f64, f64), r: f64) {
    let xs = ((a.0.min(b.0) - r).floor().max(0.0) as usize)
        ..=((a.0.max(b.0) + r).ceil() as usize).min(img.width() - 1);
    let ys = ((a.1.min(b.1) - r).floor().max(0.0) as usize)
        ..=((a.1.max(b.1) + r).ceil() as usize).min(img.height() - 1);
    let (ex, ey) = (b.0 - a.0, b.1 - a.1);
    let len2 = ex * ex + ey * ey;
    let r2 = r * r;
    for y in ys {
        let py = y as f64 - a.1;
        for x in xs.clone() {
            let px = x as f64 - a.0;
            let t = if len2 > 0.0 {
                ((px * ex + py * ey) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let (qx, qy) = (px - t * ex, py - t * ey);
            if qx * qx + qy * qy <= r2 {
                img.set(x, y, FOREGROUND);
            }
        }
    }
}

/// Render the canonical pose of a built-in sign.
pub fn render_canonical(sign: &SignId, view: &ViewSpec, seed: u64) -> Result<GrayImage> {
    render_sign(&PoseSpec::canonical(sign)?, view, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    /// Path relative to the manifest's directory.
    pub file: String,
    pub sign: SignId,
    pub azimuth: f64,
    pub distance_m: f64,
    pub altitude_m: f64,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRecord {
    file: String,
    sign: String,
    azimuth: f64,
    distance_m: f64,
    altitude_m: f64,
    seed: u64,
}

pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusManifest {
    rows: Vec<ManifestRow>,
}

impl CorpusManifest {
    pub fn new(rows: Vec<ManifestRow>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &rows {
            if !seen.insert(r.file.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate manifest file {}",
                    r.file
                )));
            }
        }
        Ok(CorpusManifest { rows })
    }

    pub fn rows(&self) -> &[ManifestRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        // Written explicitly so an empty manifest still carries its header.
        w.write_record([
            "file",
            "sign",
            "azimuth",
            "distance_m",
            "altitude_m",
            "seed",
        ])?;
        for r in &self.rows {
            w.serialize(ManifestRecord {
                file: r.file.clone(),
                sign: r.sign.to_string(),
                azimuth: r.azimuth,
                distance_m: r.distance_m,
                altitude_m: r.altitude_m,
                seed: r.seed,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in r.deserialize() {
            let rec: ManifestRecord = rec?;
            rows.push(ManifestRow {
                file: rec.file,
                sign: rec.sign.parse()?,
                azimuth: rec.azimuth,
                distance_m: rec.distance_m,
                altitude_m: rec.altitude_m,
                seed: rec.seed,
            });
        }
        CorpusManifest::new(rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        CorpusManifest::from_csv(&fs::read_to_string(path)?)
    }
}

/// Grid of renders to produce.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub signs: Vec<SignId>,
    pub azimuths: Vec<f64>,
    pub altitudes: Vec<f64>,
    pub distance_m: f64,
    pub width: usize,
    pub height: usize,
    pub noise_px: f64,
    /// Renders per grid cell; replicate `r` uses seed `seed + r`.
    pub replicates: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    /// Azimuth 0..=90 in 5° steps, altitude 2..=5 m, 3 m distance.
    fn default() -> Self {
        CorpusSpec {
            signs: SignId::BUILTIN.to_vec(),
            azimuths: (0..=18).map(|i| i as f64 * 5.0).collect(),
            altitudes: vec![2.0, 3.0, 4.0, 5.0],
            distance_m: 3.0,
            width: 640,
            height: 480,
            noise_px: 0.0,
            replicates: 1,
            seed: 0,
        }
    }
}

fn dedup(values: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

pub fn corpus_file_name(
    sign: &SignId,
    azimuth: f64,
    altitude: f64,
    distance: f64,
    seed: u64,
) -> String {
    format!(
        "{}_az{azimuth}_alt{altitude}_d{distance}_s{seed}.pgm",
        sign.slug()
    )
}

/// Render every (sign, azimuth, altitude, replicate) cell into `out_dir` and
/// write `manifest.csv` alongside.
pub fn generate_corpus(spec: &CorpusSpec, out_dir: &Path) -> Result<CorpusManifest> {
    fs::create_dir_all(out_dir)?;
    let azimuths = dedup(&spec.azimuths);
    let altitudes = dedup(&spec.altitudes);
    let mut rows = Vec::new();
    for sign in &spec.signs {
        let pose = PoseSpec::canonical(sign)?;
        for &azimuth in &azimuths {
            for &altitude in &altitudes {
                for rep in 0..spec.replicates {
                    let seed = spec.seed + rep as u64;
                    let view = ViewSpec {
                        azimuth_deg: azimuth,
                        distance_m: spec.distance_m,
                        altitude_m: altitude,
                        width: spec.width,
                        height: spec.height,
                        noise_px: spec.noise_px,
                    };
                    let img = render_sign(&pose, &view, seed)?;
                    let file = corpus_file_name(sign, azimuth, altitude, spec.distance_m, seed);
                    pgm::write_pgm(&out_dir.join(&file), &img)?;
                    rows.push(ManifestRow {
                        file,
                        sign: sign.clone(),
                        azimuth,
                        distance_m: spec.distance_m,
                        altitude_m: altitude,
                        seed,
                    });
                }
            }
        }
    }
    let manifest = CorpusManifest::new(rows)?;
    fs::write(out_dir.join(MANIFEST_FILE), manifest.to_csv()?)?;
    Ok(manifest)
}
