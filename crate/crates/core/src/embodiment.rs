//! Navigation light ring and flight-pattern trajectories.
//!
//! The ring has 10 tri-colour LEDs, slot `i` mounted at body bearing `36·i`
//! degrees clockwise from the nose. In navigation mode each slot shows the
//! colour of the aviation sector it faces relative to the direction of
//! flight: green starboard (0..=110°), red port (250..360°), white aft.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const RING_SLOTS: usize = 10;
pub const SLOT_SPACING_DEG: f64 = 360.0 / RING_SLOTS as f64;
pub const STARBOARD_SECTOR_END_DEG: f64 = 110.0;
pub const PORT_SECTOR_START_DEG: f64 = 250.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LedColor {
    Red,
    Green,
    White,
    Off,
}

impl LedColor {
    pub fn token(&self) -> char {
        match self {
            LedColor::Red => 'R',
            LedColor::Green => 'G',
            LedColor::White => 'W',
            LedColor::Off => 'O',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedRing([LedColor; RING_SLOTS]);

impl LedRing {
    pub fn slots(&self) -> &[LedColor; RING_SLOTS] {
        &self.0
    }

    pub fn count(&self, color: LedColor) -> usize {
        self.0.iter().filter(|&&c| c == color).count()
    }

    pub fn is_danger(&self) -> bool {
        self.0.iter().all(|&c| c == LedColor::Red)
    }
}

/// Space-separated slot tokens, slot 0 first: `G G G G W W W R R R`.
impl fmt::Display for LedRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", c.token())?;
        }
        Ok(())
    }
}

fn normalize_heading(heading_deg: f64) -> Result<f64> {
    if !heading_deg.is_finite() {
        return Err(Error::invalid(format!(
            "heading {heading_deg} is not finite"
        )));
    }
    let h = heading_deg.rem_euclid(360.0);
    // rem_euclid can return exactly 360.0 for tiny negative inputs.
    Ok(if h >= 360.0 { 0.0 } else { h })
}

/// Ring colours for controlled flight towards `heading_deg`.
pub fn nav_lights(heading_deg: f64) -> Result<LedRing> {
    let heading = normalize_heading(heading_deg)?;
    let mut slots = [LedColor::White; RING_SLOTS];
    for (i, slot) in slots.iter_mut().enumerate() {
        let r = (SLOT_SPACING_DEG * i as f64 - heading).rem_euclid(360.0);
        *slot = if r <= STARBOARD_SECTOR_END_DEG || r >= 360.0 {
            LedColor::Green
        } else if r >= PORT_SECTOR_START_DEG {
            LedColor::Red
        } else {
            LedColor::White
        };
    }
    Ok(LedRing(slots))
}

/// All slots red: the safety state.
pub fn danger_lights() -> LedRing {
    LedRing([LedColor::Red; RING_SLOTS])
}

pub fn lights_off() -> LedRing {
    LedRing([LedColor::Off; RING_SLOTS])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LightMode {
    Navigation(f64),
    AllRed,
    Off,
}

impl LightMode {
    pub fn navigation(heading_deg: f64) -> Result<LightMode> {
        Ok(LightMode::Navigation(normalize_heading(heading_deg)?))
    }

    pub fn ring(&self) -> Result<LedRing> {
        match *self {
            LightMode::Navigation(h) => nav_lights(h),
            LightMode::AllRed => Ok(danger_lights()),
            LightMode::Off => Ok(lights_off()),
        }
    }
}

impl fmt::Display for LightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LightMode::Navigation(h) => write!(f, "Nav:{h}"),
            LightMode::AllRed => f.write_str("AllRed"),
            LightMode::Off => f.write_str("Off"),
        }
    }
}

impl FromStr for LightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "AllRed" => Ok(LightMode::AllRed),
            "Off" => Ok(LightMode::Off),
            _ => s
                .strip_prefix("Nav:")
                .and_then(|h| h.parse::<f64>().ok())
                .map(LightMode::Navigation)
                .ok_or_else(|| Error::invalid(format!("bad light mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternKind {
    TakeOff,
    Land,
    Cruise,
    Poke,
    NodYes,
    TurnNo,
    Rectangle,
}

impl PatternKind {
    pub const ALL: [PatternKind; 7] = [
        PatternKind::TakeOff,
        PatternKind::Land,
        PatternKind::Cruise,
        PatternKind::Poke,
        PatternKind::NodYes,
        PatternKind::TurnNo,
        PatternKind::Rectangle,
    ];

    fn default_amplitude(&self) -> f64 {
        match self {
            PatternKind::NodYes => 0.5,
            PatternKind::TurnNo => 90.0,
            _ => 0.3,
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PatternKind::TakeOff => "TakeOff",
            PatternKind::Land => "Land",
            PatternKind::Cruise => "Cruise",
            PatternKind::Poke => "Poke",
            PatternKind::NodYes => "NodYes",
            PatternKind::TurnNo => "TurnNo",
            PatternKind::Rectangle => "Rectangle",
        };
        f.write_str(s)
    }
}

impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "takeoff" => PatternKind::TakeOff,
            "land" => PatternKind::Land,
            "cruise" => PatternKind::Cruise,
            "poke" => PatternKind::Poke,
            "nodyes" | "nod" | "yes" => PatternKind::NodYes,
            "turnno" | "turn" | "no" => PatternKind::TurnNo,
            "rectangle" | "rect" | "area" => PatternKind::Rectangle,
            _ => return Err(Error::invalid(format!("unknown pattern {s:?}"))),
        })
    }
}

/// Ground rectangle, corner at (x, y), extending +x by `width` and +y by
/// `depth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternParams {
    pub height_m: f64,
    pub speed_mps: f64,
    /// Poke oscillation and nod dip in meters, yaw swing in degrees for
    /// TurnNo. `None` picks the per-pattern default (0.3 m, 0.5 m, 90°).
    pub amplitude: Option<f64>,
    pub area: Area,
    /// Ground position of the collaborator, for Cruise and Poke.
    pub target: (f64, f64),
    pub safe_distance_m: f64,
    /// Body heading while hovering, degrees clockwise from +y.
    pub heading_deg: f64,
    pub yaw_rate_dps: f64,
    /// Maximum sample spacing in seconds.
    pub dt: f64,
}

impl Default for PatternParams {
    fn default() -> Self {
        PatternParams {
            height_m: 5.0,
            speed_mps: 1.0,
            amplitude: None,
            area: Area {
                x: 0.0,
                y: 5.0,
                width: 4.0,
                depth: 3.0,
            },
            target: (0.0, 10.0),
            safe_distance_m: 3.0,
            heading_deg: 0.0,
            yaw_rate_dps: 90.0,
            dt: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub lights: LightMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn first(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories are never empty")
    }

    /// Summed 3D distance between consecutive samples.
    pub fn path_length(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                ((b.x - a.x).powi(2) + (b.y - a.y).powi(2) + (b.z - a.z).powi(2)).sqrt()
            })
            .sum()
    }

    pub fn duration(&self) -> f64 {
        self.last().t
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,z,light_mode\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{},{},{}\n", s.t, s.x, s.y, s.z, s.lights));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Trajectory> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut samples = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |msg: &str| Error::Parse {
                what: "trajectory csv",
                line: i + 2,
                msg: msg.to_string(),
            };
            if rec.len() != 5 {
                return Err(bad("expected 5 fields"));
            }
            let f = |k: usize| rec[k].parse::<f64>().map_err(|_| bad("bad number"));
            samples.push(TrajectorySample {
                t: f(0)?,
                x: f(1)?,
                y: f(2)?,
                z: f(3)?,
                lights: rec[4].parse().map_err(|_| bad("bad light mode"))?,
            });
        }
        if samples.is_empty() {
            return Err(Error::invalid("trajectory has no samples"));
        }
        Ok(Trajectory { samples })
    }
}

fn heading_towards(dx: f64, dy: f64) -> f64 {
    dx.atan2(dy).to_degrees().rem_euclid(360.0)
}

struct Builder {
    samples: Vec<TrajectorySample>,
    speed: f64,
    yaw_rate: f64,
    dt: f64,
}

impl Builder {
    fn start(p: (f64, f64, f64), lights: LightMode, params: &PatternParams) -> Builder {
        Builder {
            samples: vec![TrajectorySample {
                t: 0.0,
                x: p.0,
                y: p.1,
                z: p.2,
                lights,
            }],
            speed: params.speed_mps,
            yaw_rate: params.yaw_rate_dps,
            dt: params.dt,
        }
    }

    fn last(&self) -> TrajectorySample {
        *self.samples.last().expect("builder starts with a sample")
    }

    /// Straight leg at constant speed. The end point is emitted exactly.
    fn move_to(&mut self, to: (f64, f64, f64), lights: LightMode) {
        let from = self.last();
        let (dx, dy, dz) = (to.0 - from.x, to.1 - from.y, to.2 - from.z);
        let len = (dx * dx + dy * dy + dz * dz).sqrt();
        if len == 0.0 {
            return;
        }
        let steps = (len / (self.speed * self.dt)).ceil().max(1.0) as usize;
        let step_t = len / self.speed / steps as f64;
        for k in 1..=steps {
            let f = k as f64 / steps as f64;
            let (x, y, z) = if k == steps {
                to
            } else {
                (from.x + dx * f, from.y + dy * f, from.z + dz * f)
            };
            self.samples.push(TrajectorySample {
                t: from.t + step_t * k as f64,
                x,
                y,
                z,
                lights,
            });
        }
    }

    /// Rotate in place from one heading to another, shown through the ring.
    fn yaw(&mut self, from_deg: f64, to_deg: f64) {
        let here = self.last();
        let sweep = to_deg - from_deg;
        let dur = sweep.abs() / self.yaw_rate;
        let steps = (dur / self.dt).ceil().max(1.0) as usize;
        for k in 1..=steps {
            let h = from_deg + sweep * k as f64 / steps as f64;
            self.samples.push(TrajectorySample {
                t: here.t + dur * k as f64 / steps as f64,
                lights: LightMode::Navigation(h.rem_euclid(360.0)),
                ..here
            });
        }
    }

    fn append(&mut self, lights: LightMode) {
        let here = self.last();
        self.samples.push(TrajectorySample {
            t: here.t + self.dt,
            lights,
            ..here
        });
    }

    fn finish(self) -> Trajectory {
        Trajectory {
            samples: self.samples,
        }
    }
}

fn positive(v: f64, name: &str) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Generate the kinematic sample sequence of a flight pattern.
pub fn make_pattern(kind: PatternKind, params: &PatternParams) -> Result<Trajectory> {
    positive(params.height_m, "height")?;
    positive(params.speed_mps, "speed")?;
    positive(params.dt, "sample step")?;
    positive(params.yaw_rate_dps, "yaw rate")?;
    let amplitude = params.amplitude.unwrap_or(kind.default_amplitude());
    positive(amplitude, "amplitude")?;
    let h = params.height_m;
    let nav = LightMode::navigation(params.heading_deg)?;
    let origin = (0.0, 0.0, h);

    let traj = match kind {
        PatternKind::TakeOff => {
            let mut b = Builder::start((0.0, 0.0, 0.0), nav, params);
            b.move_to(origin, nav);
            b.finish()
        }
        PatternKind::Land => {
            let mut b = Builder::start(origin, nav, params);
            b.move_to((0.0, 0.0, 0.0), nav);
            // Rotors off, lights extinguished.
            b.append(LightMode::Off);
            b.finish()
        }
        PatternKind::Cruise => {
            let (tx, ty) = params.target;
            let lights = if (tx, ty) == (0.0, 0.0) {
                nav
            } else {
                LightMode::Navigation(heading_towards(tx, ty))
            };
            let mut b = Builder::start(origin, lights, params);
            b.move_to((tx, ty, h), lights);
            b.finish()
        }
        PatternKind::Poke => {
            positive(params.safe_distance_m, "safe distance")?;
            let (tx, ty) = params.target;
            let dist = tx.hypot(ty);
            if dist == 0.0 {
                return Err(Error::invalid("poke target coincides with the start point"));
            }
            let (ux, uy) = (tx / dist, ty / dist);
            let lights = LightMode::Navigation(heading_towards(tx, ty));
            let advance = (dist - params.safe_distance_m).max(0.0);
            let boundary = (ux * advance, uy * advance, h);
            if advance + amplitude > dist {
                return Err(Error::invalid("poke amplitude would reach the target"));
            }
            let forward = (ux * (advance + amplitude), uy * (advance + amplitude), h);
            let mut b = Builder::start(origin, lights, params);
            b.move_to(boundary, lights);
            for _ in 0..2 {
                b.move_to(forward, lights);
                b.move_to(boundary, lights);
            }
            b.finish()
        }
        PatternKind::NodYes => {
            if amplitude > h {
                return Err(Error::invalid("nod amplitude exceeds flying height"));
            }
            let mut b = Builder::start(origin, nav, params);
            for _ in 0..2 {
                b.move_to((0.0, 0.0, h - amplitude), nav);
                b.move_to(origin, nav);
            }
            b.finish()
        }
        PatternKind::TurnNo => {
            let base = params.heading_deg;
            let mut b = Builder::start(origin, nav, params);
            b.yaw(base, base - amplitude);
            for _ in 0..2 {
                b.yaw(base - amplitude, base + amplitude);
                b.yaw(base + amplitude, base - amplitude);
            }
            b.yaw(base - amplitude, base);
            b.finish()
        }
        PatternKind::Rectangle => {
            let a = params.area;
            positive(a.width, "area width")?;
            positive(a.depth, "area depth")?;
            let corners = [
                (a.x, a.y),
                (a.x + a.width, a.y),
                (a.x + a.width, a.y + a.depth),
                (a.x, a.y + a.depth),
                (a.x, a.y),
            ];
            let mut b = Builder::start((a.x, a.y, h), LightMode::Navigation(90.0), params);
            for pair in corners.windows(2) {
                let (p, q) = (pair[0], pair[1]);
                let lights = LightMode::Navigation(heading_towards(q.0 - p.0, q.1 - p.1));
                b.move_to((q.0, q.1, h), lights);
            }
            b.finish()
        }
    };
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use LedColor::*;

    #[test]
    fn heading_zero_layout() {
        assert_eq!(
            nav_lights(0.0).unwrap().slots(),
            &[Green, Green, Green, Green, White, White, White, Red, Red, Red]
        );
        assert_eq!(nav_lights(0.0).unwrap().to_string(), "G G G G W W W R R R");
    }

    #[test]
    fn heading_180_is_five_slot_rotation() {
        let zero = nav_lights(0.0).unwrap();
        let half = nav_lights(180.0).unwrap();
        for i in 0..RING_SLOTS {
            assert_eq!(half.slots()[(i + 5) % RING_SLOTS], zero.slots()[i]);
        }
        assert_eq!(nav_lights(360.0).unwrap(), zero);
        assert_eq!(nav_lights(-360.0).unwrap(), zero);
        assert!(nav_lights(f64::NAN).is_err());
        assert!(nav_lights(f64::INFINITY).is_err());
    }

    #[test]
    fn sector_counts_for_every_heading() {
        for tenth in 0..3600 {
            let ring = nav_lights(tenth as f64 / 10.0).unwrap();
            assert!(ring.count(Green) >= 2, "heading {}", tenth as f64 / 10.0);
            assert!(ring.count(Red) >= 2);
            assert!(ring.count(White) >= 2);
            assert_ne!(ring, danger_lights());
        }
    }

    #[test]
    fn danger_is_all_red() {
        let d = danger_lights();
        assert!(d.is_danger());
        assert_eq!(d.count(Red), RING_SLOTS);
        assert_eq!(LightMode::AllRed.ring().unwrap(), d);
        assert_eq!(d.to_string(), "R R R R R R R R R R");
    }

    fn check_common(t: &Trajectory) {
        assert_eq!(t.first().t, 0.0);
        for w in t.samples().windows(2) {
            assert!(w[1].t > w[0].t);
        }
        assert!(t.samples().iter().all(|s| s.z >= 0.0));
    }

    #[test]
    fn every_pattern_is_well_formed() {
        let p = PatternParams::default();
        for kind in PatternKind::ALL {
            let t = make_pattern(kind, &p).unwrap();
            check_common(&t);
            let offs: Vec<usize> = t
                .samples()
                .iter()
                .enumerate()
                .filter(|(_, s)| s.lights == LightMode::Off)
                .map(|(i, _)| i)
                .collect();
            if kind == PatternKind::Land {
                assert_eq!(offs, vec![t.samples().len() - 1]);
            } else {
                assert!(offs.is_empty(), "{kind}");
            }
        }
    }

    #[test]
    fn land_and_takeoff_are_monotone() {
        let p = PatternParams::default();
        let land = make_pattern(PatternKind::Land, &p).unwrap();
        assert_eq!(land.first().z, 5.0);
        assert_eq!(land.last().z, 0.0);
        assert_eq!(land.last().lights, LightMode::Off);
        assert!(land.samples().windows(2).all(|w| w[1].z <= w[0].z));
        // 5 m at 1 m/s plus the lights-off step.
        assert!((land.duration() - 5.1).abs() < 1e-9);

        let up = make_pattern(PatternKind::TakeOff, &p).unwrap();
        assert_eq!(up.first().z, 0.0);
        assert_eq!(up.last().z, 5.0);
        assert!(up.samples().windows(2).all(|w| w[1].z >= w[0].z));
    }

    #[test]
    fn rectangle_closes() {
        let p = PatternParams {
            area: Area {
                x: 1.0,
                y: 2.0,
                width: 4.0,
                depth: 3.0,
            },
            ..PatternParams::default()
        };
        let t = make_pattern(PatternKind::Rectangle, &p).unwrap();
        let (a, b) = (t.first(), t.last());
        assert!((a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9 && (a.z - b.z).abs() < 1e-9);
        assert!((t.path_length() - 14.0).abs() < 1e-9);
        assert!(t.samples().iter().all(|s| s.z == 5.0));
        for c in [(1.0, 2.0), (5.0, 2.0), (5.0, 5.0), (1.0, 5.0)] {
            assert!(t.samples().iter().any(|s| s.x == c.0 && s.y == c.1));
        }
    }

    #[test]
    fn nod_has_two_dips() {
        let p = PatternParams {
            amplitude: Some(0.5),
            ..PatternParams::default()
        };
        let t = make_pattern(PatternKind::NodYes, &p).unwrap();
        let z: Vec<f64> = t.samples().iter().map(|s| s.z).collect();
        let min = z.iter().cloned().fold(f64::MAX, f64::min);
        assert!((min - 4.5).abs() < 1e-12);
        assert_eq!(*z.last().unwrap(), 5.0);
        let minima = (1..z.len() - 1)
            .filter(|&i| z[i] < z[i - 1] && z[i] <= z[i + 1])
            .count();
        assert_eq!(minima, 2);
        let deep = PatternParams {
            amplitude: Some(6.0),
            ..PatternParams::default()
        };
        assert!(make_pattern(PatternKind::NodYes, &deep).is_err());
    }

    #[test]
    fn poke_stops_at_safe_boundary() {
        let p = PatternParams::default();
        let t = make_pattern(PatternKind::Poke, &p).unwrap();
        let dist_to_target = |s: &TrajectorySample| (s.x - 0.0).hypot(s.y - 10.0);
        let closest = t
            .samples()
            .iter()
            .map(dist_to_target)
            .fold(f64::MAX, f64::min);
        assert!((closest - 2.7).abs() < 1e-9);
        assert!((dist_to_target(t.last()) - 3.0).abs() < 1e-9);
        let near = t
            .samples()
            .iter()
            .filter(|s| (dist_to_target(s) - 2.7).abs() < 1e-9)
            .count();
        assert_eq!(near, 2);
    }

    #[test]
    fn turn_sweeps_heading_only() {
        let t = make_pattern(PatternKind::TurnNo, &PatternParams::default()).unwrap();
        assert!(t
            .samples()
            .iter()
            .all(|s| (s.x, s.y, s.z) == (0.0, 0.0, 5.0)));
        let headings: Vec<f64> = t
            .samples()
            .iter()
            .map(|s| match s.lights {
                LightMode::Navigation(h) => h,
                other => panic!("{other:?}"),
            })
            .collect();
        assert!(headings.contains(&270.0) && headings.contains(&90.0));
        assert_eq!(*headings.last().unwrap(), 0.0);
    }

    #[test]
    fn invalid_dimensions() {
        for bad in [
            PatternParams {
                height_m: 0.0,
                ..PatternParams::default()
            },
            PatternParams {
                speed_mps: -1.0,
                ..PatternParams::default()
            },
        ] {
            for kind in PatternKind::ALL {
                assert!(make_pattern(kind, &bad).is_err());
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let t = make_pattern(PatternKind::Land, &PatternParams::default()).unwrap();
        let text = t.to_csv();
        assert!(text.starts_with("t,x,y,z,light_mode\n"));
        assert!(text.trim_end().ends_with(",0,Off"));
        assert_eq!(Trajectory::from_csv(&text).unwrap(), t);
    }
}
