//! The `signwave` command line.
//!
//! Exit codes: 0 success, 1 recognised negative (NOMATCH / NOSHAPE),
//! 2 usage or I/O error, 3 session ended in the safety hold.

use std::ffi::OsString;
use std::fs;
use std::io::{IsTerminal, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::embodiment::{self, Area, LightMode, PatternKind, PatternParams};
use crate::error::{Error, Result};
use crate::pgm;
use crate::protocol::{self, DroneState, ProtocolConfig};
use crate::recognizer::{Enrollment, MatchResult, TemplateDb, TemplateSource};
use crate::sax::SaxParams;
use crate::saxdb;
use crate::sign::SignId;
use crate::signature::{PipelineConfig, Polarity};
use crate::synth::{self, CorpusManifest, CorpusSpec, ViewSpec, MANIFEST_FILE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_SAFETY: i32 = 3;

pub const NO_COLOR_ENV: &str = "SIGNWAVE_NO_COLOR";

#[derive(Debug, Parser)]
#[command(
    name = "signwave",
    version,
    about = "Marshalling-sign recognition and drone negotiation toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic sign corpus with a manifest.
    GenCorpus(GenCorpusArgs),
    /// Add frames to a template database, creating it if needed.
    Enroll(EnrollArgs),
    /// Recognise one frame.
    Recognize(RecognizeArgs),
    /// Recognise every frame of a manifest and report accuracy per azimuth bin.
    Sweep(SweepArgs),
    /// Time decode plus recognition per frame.
    Bench(BenchArgs),
    /// Run a negotiation script through the protocol state machine.
    Simulate(SimulateArgs),
    /// Print the LED ring state.
    Lights(LightsArgs),
    /// Print a flight-pattern trajectory as CSV.
    Pattern(PatternArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Binarization threshold.
    #[arg(long)]
    pub threshold: Option<u8>,
    /// Which side of the threshold is foreground: dark or light.
    #[arg(long)]
    pub polarity: Option<Polarity>,
    /// Signature length N.
    #[arg(long = "samples")]
    pub samples: Option<usize>,
    /// Word length w.
    #[arg(long = "word")]
    pub word: Option<usize>,
    /// Alphabet size a.
    #[arg(long = "alphabet")]
    pub alphabet: Option<usize>,
    /// Fixed match threshold instead of the calibrated one.
    #[arg(long)]
    pub theta: Option<f64>,
}

impl PipelineArgs {
    /// Pipeline for a new database: flags over defaults.
    fn fresh(&self) -> Result<PipelineConfig> {
        let d = PipelineConfig::default();
        let cfg = PipelineConfig {
            threshold: self.threshold.unwrap_or(d.threshold),
            polarity: self.polarity.unwrap_or(d.polarity),
            samples: self.samples.unwrap_or(d.samples),
            sax: SaxParams::new(
                self.word.unwrap_or(d.sax.segments()),
                self.alphabet.unwrap_or(d.sax.alphabet()),
            )?,
            ..d
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Binarization settings only; shape parameters come from the database.
    fn base(&self) -> PipelineConfig {
        let d = PipelineConfig::default();
        PipelineConfig {
            threshold: self.threshold.unwrap_or(d.threshold),
            polarity: self.polarity.unwrap_or(d.polarity),
            ..d
        }
    }

    fn check_against(&self, db: &TemplateDb) -> Result<()> {
        let p = db.pipeline();
        let clash = |flag: &str, given: Option<usize>, stored: usize| match given {
            Some(v) if v != stored => Err(Error::invalid(format!(
                "--{flag} {v} conflicts with the database value {stored}"
            ))),
            _ => Ok(()),
        };
        clash("samples", self.samples, p.samples)?;
        clash("word", self.word, p.sax.segments())?;
        clash("alphabet", self.alphabet, p.sax.alphabet())
    }

    fn load_db(&self, path: &Path) -> Result<TemplateDb> {
        let db = at_path(saxdb::load_db(path, self.base()), path)?;
        self.check_against(&db)?;
        match self.theta {
            Some(t) => db.with_theta(t),
            None => Ok(db),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenCorpusArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Azimuths in degrees, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub azimuth: Option<Vec<f64>>,
    /// Altitudes in meters, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub altitude: Option<Vec<f64>>,
    /// Horizontal camera distance in meters.
    #[arg(long)]
    pub distance: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sign: Option<Vec<SignId>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Renders per grid cell, seeded seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    /// Pose jitter in pixels.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 640)]
    pub width: usize,
    #[arg(long, default_value_t = 480)]
    pub height: usize,
}

#[derive(Debug, Args)]
pub struct EnrollArgs {
    #[arg(long)]
    pub db: PathBuf,
    /// Enroll manifest rows instead of positional files.
    #[arg(long, conflicts_with_all = ["sign", "files"])]
    pub manifest: Option<PathBuf>,
    /// Sign shown in the positional files.
    #[arg(long, requires = "files")]
    pub sign: Option<SignId>,
    /// With --manifest: keep only these azimuths. Otherwise: the azimuth
    /// the files were taken at.
    #[arg(long, value_delimiter = ',')]
    pub azimuth: Option<Vec<f64>>,
    /// Like --azimuth, for altitude.
    #[arg(long, value_delimiter = ',')]
    pub altitude: Option<Vec<f64>>,
    #[arg(long)]
    pub distance: Option<f64>,
    pub files: Vec<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct RecognizeArgs {
    #[arg(long)]
    pub db: PathBuf,
    pub file: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub db: PathBuf,
    /// Corpus manifest; frames are resolved relative to its directory.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Azimuth bin width in degrees.
    #[arg(long, default_value_t = 5.0)]
    pub bin: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Database to match against. Without one, the canonical renders of the
    /// built-in signs are enrolled first.
    #[arg(long)]
    pub db: Option<PathBuf>,
    #[arg(long, conflicts_with = "files")]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub iterations: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    pub files: Vec<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Script file, one event per line; stdin when absent or `-`.
    pub script: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    pub attention_timeout: f64,
    #[arg(long, default_value_t = 15.0)]
    pub decision_timeout: f64,
    #[arg(long, default_value_t = 1)]
    pub max_repokes: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LightsArgs {
    /// Direction of flight in degrees.
    #[arg(
        long,
        required_unless_present = "danger",
        allow_negative_numbers = true
    )]
    pub heading: Option<f64>,
    /// All-red safety state.
    #[arg(long, conflicts_with = "heading")]
    pub danger: bool,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y] => Ok((x, y)),
        _ => Err("expected x,y".into()),
    }
}

fn parse_area(s: &str) -> std::result::Result<Area, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, width, depth] => Ok(Area { x, y, width, depth }),
        _ => Err("expected x,y,width,depth".into()),
    }
}

#[derive(Debug, Args)]
pub struct PatternArgs {
    /// takeoff, land, cruise, poke, nodyes, turnno or rectangle.
    pub kind: PatternKind,
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub speed: Option<f64>,
    /// Poke and nod amplitude in meters, turn swing in degrees.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Sample step in seconds.
    #[arg(long)]
    pub dt: Option<f64>,
    /// x,y,width,depth of the requested area.
    #[arg(long, value_parser = parse_area, allow_hyphen_values = true)]
    pub area: Option<Area>,
    /// x,y of the collaborator.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub target: Option<(f64, f64)>,
    #[arg(long)]
    pub safe_distance: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub heading: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Console<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    color: bool,
}

impl Console<'_> {
    fn paint(&self, text: &str, code: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }
}

fn color_enabled() -> bool {
    std::env::var_os(NO_COLOR_ENV).is_none() && std::io::stdout().is_terminal()
}

/// Entry point for the binary.
pub fn main_from_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(
        std::env::args_os(),
        &mut stdout.lock(),
        &mut stderr.lock(),
        color_enabled(),
    )
}

/// Parse `args` (program name first) and run the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = if color {
                e.render().ansi().to_string()
            } else {
                e.render().to_string()
            };
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let mut con = Console { out, err, color };
    match dispatch(cli.command, &mut con) {
        Ok(code) => code,
        Err(e) => {
            let tag = con.paint("error:", "31");
            let _ = writeln!(con.err, "{tag} {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command, con: &mut Console<'_>) -> Result<i32> {
    match cmd {
        Command::GenCorpus(a) => gen_corpus(a, con),
        Command::Enroll(a) => enroll(a, con),
        Command::Recognize(a) => recognize(a, con),
        Command::Sweep(a) => sweep(a, con),
        Command::Bench(a) => bench(a, con),
        Command::Simulate(a) => simulate(a, con),
        Command::Lights(a) => lights(a, con),
        Command::Pattern(a) => pattern(a, con),
    }
}

/// Name the file in I/O failures.
fn at_path<T>(r: Result<T>, path: &Path) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::invalid(format!("{}: {io}", path.display())),
        other => other,
    })
}

/// Write to `--out` if given, else to stdout.
fn emit(con: &mut Console<'_>, out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => con.out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn gen_corpus(a: GenCorpusArgs, con: &mut Console<'_>) -> Result<i32> {
    let d = CorpusSpec::default();
    let spec = CorpusSpec {
        signs: a.sign.unwrap_or(d.signs),
        azimuths: a.azimuth.unwrap_or(d.azimuths),
        altitudes: a.altitude.unwrap_or(d.altitudes),
        distance_m: a.distance.unwrap_or(d.distance_m),
        width: a.width,
        height: a.height,
        noise_px: a.noise,
        replicates: a.replicates,
        seed: a.seed,
    };
    let manifest = synth::generate_corpus(&spec, &a.out).map_err(|e| match e {
        Error::Io(io) => {
            Error::invalid(format!("cannot write corpus to {}: {io}", a.out.display()))
        }
        other => other,
    })?;
    writeln!(
        con.out,
        "wrote {} frames and {}",
        manifest.len(),
        a.out.join(MANIFEST_FILE).display()
    )?;
    Ok(EXIT_OK)
}

fn single(values: &Option<Vec<f64>>, flag: &str, default: f64) -> Result<f64> {
    match values.as_deref() {
        None => Ok(default),
        Some([v]) => Ok(*v),
        Some(_) => Err(Error::invalid(format!(
            "--{flag} takes one value when enrolling files"
        ))),
    }
}

fn enroll(a: EnrollArgs, con: &mut Console<'_>) -> Result<i32> {
    let mut db = if a.db.exists() {
        a.pipeline.load_db(&a.db)?
    } else {
        let db = TemplateDb::new(a.pipeline.fresh()?)?;
        match a.pipeline.theta {
            Some(t) => db.with_theta(t)?,
            None => db,
        }
    };

    let mut jobs: Vec<(PathBuf, SignId, TemplateSource)> = Vec::new();
    if let Some(mpath) = &a.manifest {
        let manifest = at_path(CorpusManifest::load(mpath), mpath)?;
        let dir = mpath.parent().unwrap_or(Path::new("."));
        for row in manifest.rows() {
            let keep_az = a.azimuth.as_ref().is_none_or(|v| v.contains(&row.azimuth));
            let keep_alt = a
                .altitude
                .as_ref()
                .is_none_or(|v| v.contains(&row.altitude_m));
            let keep_d = a.distance.is_none_or(|d| d == row.distance_m);
            if keep_az && keep_alt && keep_d {
                let file = dir.join(&row.file);
                jobs.push((
                    file.clone(),
                    row.sign.clone(),
                    TemplateSource {
                        azimuth_deg: row.azimuth,
                        distance_m: row.distance_m,
                        altitude_m: row.altitude_m,
                        file: Some(file),
                    },
                ));
            }
        }
    } else {
        let sign = a
            .sign
            .clone()
            .ok_or_else(|| Error::invalid("give --sign with frame files, or --manifest"))?;
        let view = ViewSpec::default();
        let azimuth_deg = single(&a.azimuth, "azimuth", view.azimuth_deg)?;
        let altitude_m = single(&a.altitude, "altitude", view.altitude_m)?;
        let distance_m = a.distance.unwrap_or(view.distance_m);
        for f in &a.files {
            jobs.push((
                f.clone(),
                sign.clone(),
                TemplateSource {
                    azimuth_deg,
                    distance_m,
                    altitude_m,
                    file: Some(f.clone()),
                },
            ));
        }
    }
    if jobs.is_empty() {
        return Err(Error::invalid("nothing to enroll"));
    }

    for (path, sign, source) in jobs {
        let img = at_path(pgm::load_frame(&path), &path)?;
        let (next, outcome) = db.enroll(&img, sign.clone(), source)?;
        let word = next
            .templates()
            .last()
            .filter(|_| outcome == Enrollment::Added)
            .map(|t| t.word.to_string());
        match (outcome, word) {
            (Enrollment::Added, Some(w)) => {
                writeln!(con.out, "ADDED {sign} {w} {}", path.display())?
            }
            (Enrollment::Duplicate { existing }, _) => writeln!(
                con.out,
                "DUPLICATE {sign} template {existing} {}",
                path.display()
            )?,
            _ => unreachable!("added enrollments append a template"),
        }
        db = next;
    }
    saxdb::save_db(&a.db, &db)?;
    writeln!(con.out, "templates {} theta {}", db.len(), db.theta())?;
    Ok(EXIT_OK)
}

fn recognize(a: RecognizeArgs, con: &mut Console<'_>) -> Result<i32> {
    let db = a.pipeline.load_db(&a.db)?;
    let img = at_path(pgm::load_frame(&a.file), &a.file)?;
    let result = db.recognize(&img)?;
    let line = result.report_line();
    let (code, color) = match result {
        MatchResult::Match { .. } => (EXIT_OK, "32"),
        _ => (EXIT_NEGATIVE, "33"),
    };
    writeln!(con.out, "{}", con.paint(&line, color))?;
    Ok(code)
}

pub const SWEEP_HEADER: &str =
    "sign,azimuth_bin,altitude_m,attempts,correct,accuracy,mean_distance,status,detail";

fn sweep(a: SweepArgs, con: &mut Console<'_>) -> Result<i32> {
    let db = a.pipeline.load_db(&a.db)?;
    let manifest = at_path(CorpusManifest::load(&a.manifest), &a.manifest)?;
    let dir = a.manifest.parent().unwrap_or(Path::new("."));
    let report = db.sweep(&manifest, dir, a.bin)?;

    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(SWEEP_HEADER.split(','))?;
    for c in &report.cells {
        w.write_record([
            c.sign.to_string(),
            c.azimuth_bin.to_string(),
            c.altitude_m.to_string(),
            c.attempts.to_string(),
            c.correct.to_string(),
            c.accuracy().to_string(),
            c.mean_best_distance()
                .map(|d| d.to_string())
                .unwrap_or_default(),
            "ok".to_string(),
            String::new(),
        ])?;
    }
    for e in &report.errors {
        w.write_record([
            e.sign.to_string(),
            e.azimuth_deg.to_string(),
            e.altitude_m.to_string(),
            "1".into(),
            "0".into(),
            "0".into(),
            String::new(),
            "error".into(),
            format!("{}: {}", e.file, e.message),
        ])?;
    }
    let mut text = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .expect("csv output is utf-8");
    for (sign, b) in &report.boundaries {
        match b {
            Some(deg) => text.push_str(&format!("# boundary {sign} {deg}\n")),
            None => text.push_str(&format!("# boundary {sign} none\n")),
        }
    }
    emit(con, a.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

/// Templates from the canonical renders of the built-in signs.
pub fn canonical_db(pipeline: PipelineConfig) -> Result<TemplateDb> {
    let view = ViewSpec::default();
    let mut db = TemplateDb::new(pipeline)?;
    for sign in SignId::BUILTIN {
        let img = synth::render_canonical(&sign, &view, 0)?;
        let source = TemplateSource {
            azimuth_deg: view.azimuth_deg,
            distance_m: view.distance_m,
            altitude_m: view.altitude_m,
            file: None,
        };
        db = db.enroll(&img, sign, source)?.0;
    }
    Ok(db)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchStats {
    pub frames: usize,
    pub iterations: usize,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub mean_ms: f64,
}

impl BenchStats {
    pub const HEADER: &'static str = "frames,iterations,samples,median_ms,p95_ms,mean_ms,fps";

    pub fn from_samples(frames: usize, iterations: usize, mut ms: Vec<f64>) -> BenchStats {
        ms.sort_by(f64::total_cmp);
        let n = ms.len();
        let nearest_rank = |q: f64| ms[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
        let median = if n % 2 == 1 {
            ms[n / 2]
        } else {
            0.5 * (ms[n / 2 - 1] + ms[n / 2])
        };
        BenchStats {
            frames,
            iterations,
            median_ms: median,
            p95_ms: nearest_rank(0.95),
            mean_ms: ms.iter().sum::<f64>() / n as f64,
        }
    }

    pub fn fps(&self) -> f64 {
        1000.0 / self.median_ms
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.frames,
            self.iterations,
            self.frames * self.iterations,
            self.median_ms,
            self.p95_ms,
            self.mean_ms,
            self.fps()
        )
    }
}

/// Time decode plus recognition for each encoded frame, `iterations` passes.
pub fn bench_frames(db: &TemplateDb, encoded: &[Vec<u8>], iterations: usize) -> Result<BenchStats> {
    if encoded.is_empty() {
        return Err(Error::invalid("no frames to benchmark"));
    }
    if iterations == 0 {
        return Err(Error::invalid("iterations must be at least 1"));
    }
    let mut ms = Vec::with_capacity(encoded.len() * iterations);
    for _ in 0..iterations {
        for bytes in encoded {
            let start = Instant::now();
            let img = pgm::decode_frame(bytes)?;
            let result = db.recognize(&img)?;
            ms.push(start.elapsed().as_secs_f64() * 1e3);
            std::hint::black_box(result);
        }
    }
    Ok(BenchStats::from_samples(encoded.len(), iterations, ms))
}

fn bench(a: BenchArgs, con: &mut Console<'_>) -> Result<i32> {
    let db = match &a.db {
        Some(p) => a.pipeline.load_db(p)?,
        None => canonical_db(a.pipeline.fresh()?)?,
    };
    let paths: Vec<PathBuf> = match &a.manifest {
        Some(m) => {
            let dir = m.parent().unwrap_or(Path::new("."));
            at_path(CorpusManifest::load(m), m)?
                .rows()
                .iter()
                .map(|r| dir.join(&r.file))
                .collect()
        }
        None => a.files.clone(),
    };
    let encoded = paths
        .iter()
        .map(|p| at_path(fs::read(p).map_err(Error::from), p))
        .collect::<Result<Vec<_>>>()?;
    let stats = bench_frames(&db, &encoded, a.iterations)?;
    let text = format!("{}\n{}\n", BenchStats::HEADER, stats.csv_row());
    emit(con, a.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn simulate(a: SimulateArgs, con: &mut Console<'_>) -> Result<i32> {
    let text = match a.script.as_deref() {
        Some(p) if p != Path::new("-") => at_path(fs::read_to_string(p).map_err(Error::from), p)?,
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            s
        }
    };
    let cfg = ProtocolConfig {
        attention_timeout_s: a.attention_timeout,
        decision_timeout_s: a.decision_timeout,
        max_repokes: a.max_repokes,
    };
    if !(cfg.attention_timeout_s > 0.0 && cfg.decision_timeout_s > 0.0) {
        return Err(Error::invalid("timeouts must be positive"));
    }
    let script = protocol::parse_script(&text)?;
    let log = protocol::run_session(&script, &cfg);
    emit(con, a.out.as_deref(), &log.to_csv())?;
    if log.terminal_state() == DroneState::SafetyHold {
        let note = con.paint("session ended in SafetyHold", "31");
        writeln!(con.err, "{note}")?;
        Ok(EXIT_SAFETY)
    } else {
        Ok(EXIT_OK)
    }
}

fn lights(a: LightsArgs, con: &mut Console<'_>) -> Result<i32> {
    let ring = match (a.danger, a.heading) {
        (true, _) => embodiment::danger_lights(),
        (false, Some(h)) => embodiment::nav_lights(h)?,
        (false, None) => return Err(Error::invalid("give --heading or --danger")),
    };
    writeln!(con.out, "{ring}")?;
    Ok(EXIT_OK)
}

fn pattern(a: PatternArgs, con: &mut Console<'_>) -> Result<i32> {
    let d = PatternParams::default();
    let params = PatternParams {
        height_m: a.height.unwrap_or(d.height_m),
        speed_mps: a.speed.unwrap_or(d.speed_mps),
        amplitude: a.amplitude,
        area: a.area.unwrap_or(d.area),
        target: a.target.unwrap_or(d.target),
        safe_distance_m: a.safe_distance.unwrap_or(d.safe_distance_m),
        heading_deg: a.heading.unwrap_or(d.heading_deg),
        dt: a.dt.unwrap_or(d.dt),
        ..d
    };
    LightMode::navigation(params.heading_deg)?;
    let traj = embodiment::make_pattern(a.kind, &params)?;
    emit(con, a.out.as_deref(), &traj.to_csv())?;
    Ok(EXIT_OK)
}
