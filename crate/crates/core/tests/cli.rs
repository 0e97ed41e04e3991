use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use signwave::embodiment::Trajectory;
use signwave::protocol::{parse_log_csv, DroneState};
use signwave::raster::GrayImage;

fn signwave(args: &[&str]) -> Output {
    signwave_in(Path::new("."), args, None)
}

fn signwave_in(dir: &Path, args: &[&str], stdin: Option<&str>) -> Output {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_signwave"))
        .current_dir(dir)
        .args(args)
        .env("SIGNWAVE_NO_COLOR", "1")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn signwave");
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn pgm_count(dir: &Path) -> usize {
    fs::read_dir(dir)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "pgm")
        })
        .count()
}

/// Corpus at the two reference azimuths plus a database of the 0° renders.
fn corpus_and_db(dir: &Path) {
    let o = signwave_in(
        dir,
        &[
            "gen-corpus",
            "--out",
            "corpus",
            "--azimuth",
            "0,30",
            "--altitude",
            "5",
            "--distance",
            "3",
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = signwave_in(
        dir,
        &[
            "enroll",
            "--db",
            "db.sax",
            "--manifest",
            "corpus/manifest.csv",
            "--azimuth",
            "0",
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn default_grid_has_228_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let o = signwave(&["gen-corpus", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(pgm_count(&out), 228);
    let manifest = fs::read_to_string(out.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 229);
}

#[test]
fn two_orientation_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let o = signwave(&[
        "gen-corpus",
        "--out",
        out.to_str().unwrap(),
        "--azimuth",
        "0,65",
        "--altitude",
        "5",
        "--distance",
        "3",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(pgm_count(&out), 6);
}

#[test]
fn unwritable_corpus_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = signwave(&["gen-corpus", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cannot write corpus"), "{}", stderr(&o));
}

#[test]
fn enroll_and_recognize() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus_and_db(dir);
    let db = fs::read_to_string(dir.join("db.sax")).unwrap();
    assert!(db.starts_with("saxdb 1 360 36 6 "));
    assert_eq!(db.lines().count(), 4);

    let o = signwave_in(
        dir,
        &[
            "recognize",
            "--db",
            "db.sax",
            "corpus/no_az0_alt5_d3_s0.pgm",
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "MATCH No 0.0 0\n");

    let o = signwave_in(
        dir,
        &[
            "recognize",
            "--db",
            "db.sax",
            "corpus/no_az30_alt5_d3_s0.pgm",
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    let line = stdout(&o);
    let f: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(&f[..2], &["MATCH", "No"]);
    assert!(f[2].parse::<f64>().unwrap() >= 0.0);

    let blank = GrayImage::filled(640, 480, 255).unwrap();
    signwave::pgm::write_pgm(&dir.join("blank.pgm"), &blank).unwrap();
    let o = signwave_in(dir, &["recognize", "--db", "db.sax", "blank.pgm"], None);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout(&o), "NOSHAPE empty_scene\n");

    let o = signwave_in(
        dir,
        &["recognize", "--db", "missing.sax", "blank.pgm"],
        None,
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("missing.sax"));
    let o = signwave_in(dir, &["recognize", "--db", "db.sax", "nothere.pgm"], None);
    assert_eq!(code(&o), 2);
    let o = signwave_in(
        dir,
        &["recognize", "--db", "db.sax", "--word", "18", "blank.pgm"],
        None,
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn pinned_theta_turns_matches_into_misses() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus_and_db(dir);
    let o = signwave_in(
        dir,
        &[
            "recognize",
            "--db",
            "db.sax",
            "--theta",
            "0",
            "corpus/yes_az0_alt5_d3_s0.pgm",
        ],
        None,
    );
    assert_eq!(stdout(&o), "MATCH Yes 0.0 0\n");
    let o = signwave_in(
        dir,
        &[
            "recognize",
            "--db",
            "db.sax",
            "--theta",
            "-1",
            "corpus/yes_az0_alt5_d3_s0.pgm",
        ],
        None,
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn enroll_files_by_sign_and_duplicates() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let o = signwave_in(
        dir,
        &[
            "gen-corpus",
            "--out",
            "c",
            "--azimuth",
            "0",
            "--altitude",
            "5",
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    let args = [
        "enroll",
        "--db",
        "d.sax",
        "--sign",
        "no",
        "c/no_az0_alt5_d3_s0.pgm",
    ];
    let o = signwave_in(dir, &args, None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("ADDED No "));
    let o = signwave_in(dir, &args, None);
    assert!(stdout(&o).starts_with("DUPLICATE No "));
    assert!(stdout(&o).contains("templates 1 theta 0"));
    let o = signwave_in(dir, &["enroll", "--db", "d.sax"], None);
    assert_eq!(code(&o), 2);
}

fn read_sweep(text: &str) -> Vec<csv::StringRecord> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        signwave::cli::SWEEP_HEADER.split(',').collect::<Vec<_>>()
    );
    r.records().map(|x| x.unwrap()).collect()
}

#[test]
fn sweep_reports_bins_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus_and_db(dir);
    let o = signwave_in(
        dir,
        &[
            "sweep",
            "--db",
            "db.sax",
            "--manifest",
            "corpus/manifest.csv",
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let rows = read_sweep(&text);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| &r[7] == "ok"));
    assert!(text.contains("# boundary No 30\n"));

    // One row, and the same row pointing at a missing file.
    let manifest = fs::read_to_string(dir.join("corpus/manifest.csv")).unwrap();
    let mut lines = manifest.lines();
    let header = lines.next().unwrap();
    let no_row = lines.find(|l| l.starts_with("no_az0")).unwrap();
    fs::write(dir.join("corpus/one.csv"), format!("{header}\n{no_row}\n")).unwrap();
    let o = signwave_in(
        dir,
        &["sweep", "--db", "db.sax", "--manifest", "corpus/one.csv"],
        None,
    );
    let rows = read_sweep(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!((&rows[0][0], &rows[0][5]), ("No", "1"));

    let broken = no_row.replacen("no_az0", "gone_az0", 1);
    fs::write(
        dir.join("corpus/broken.csv"),
        format!("{header}\n{no_row}\n{broken}\n"),
    )
    .unwrap();
    let o = signwave_in(
        dir,
        &["sweep", "--db", "db.sax", "--manifest", "corpus/broken.csv"],
        None,
    );
    assert_eq!(code(&o), 0);
    let rows = read_sweep(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[1][7], "error");
    assert!(rows[1][8].contains("gone_az0"));
}

#[test]
fn bench_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus_and_db(dir);
    let o = signwave_in(
        dir,
        &[
            "bench",
            "--db",
            "db.sax",
            "--iterations",
            "1",
            "corpus/no_az0_alt5_d3_s0.pgm",
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "frames",
            "iterations",
            "samples",
            "median_ms",
            "p95_ms",
            "mean_ms",
            "fps"
        ]
    );
    let rows: Vec<_> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "1");
    assert!(rows[0][3].parse::<f64>().unwrap() > 0.0);

    // Without --db the canonical signs are enrolled on the fly.
    let o = signwave_in(
        dir,
        &[
            "bench",
            "--iterations",
            "2",
            "--manifest",
            "corpus/manifest.csv",
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = signwave_in(dir, &["bench", "--db", "db.sax"], None);
    assert_eq!(code(&o), 2);
}

const HAPPY: &str = "ARRIVED\nPOKE_COMPLETE\nSIGN:AttentionGained\nPATTERN_DONE\nSIGN:YES\n";

#[test]
fn simulate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("happy.txt"), HAPPY).unwrap();
    let o = signwave_in(dir, &["simulate", "happy.txt"], None);
    assert_eq!(code(&o), 0);
    let rows = parse_log_csv(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows.last().unwrap().state, DroneState::Enter);

    let o = signwave_in(dir, &["simulate"], Some(&format!("{HAPPY}SAFETY\n")));
    assert_eq!(code(&o), 3);
    let rows = parse_log_csv(&stdout(&o)).unwrap();
    let last = rows.last().unwrap();
    assert_eq!(last.state, DroneState::SafetyHold);
    assert!(stdout(&o).trim_end().ends_with("SetLights(AllRed);Hover"));

    let o = signwave_in(dir, &["simulate", "-"], Some(""));
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "t,state,event,actions\n");

    let o = signwave_in(dir, &["simulate"], Some("ARRIVED\nFLY\n"));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn lights_and_patterns() {
    let o = signwave(&["lights", "--heading", "0"]);
    assert_eq!(stdout(&o), "G G G G W W W R R R\n");
    let o = signwave(&["lights", "--danger"]);
    assert_eq!(stdout(&o), "R R R R R R R R R R\n");
    let o = signwave(&["lights", "--heading", "nan"]);
    assert_eq!(code(&o), 2);

    let o = signwave(&["pattern", "land", "--height", "5"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.trim_end().ends_with(",0,Off"));
    let t = Trajectory::from_csv(&text).unwrap();
    assert_eq!(t.last().z, 0.0);

    let o = signwave(&["pattern", "rectangle", "--area", "-2,1,4,3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = Trajectory::from_csv(&stdout(&o)).unwrap();
    assert!((t.first().x - t.last().x).abs() < 1e-9 && (t.first().y - t.last().y).abs() < 1e-9);

    for kind in ["takeoff", "cruise", "poke", "nodyes", "turnno"] {
        let o = signwave(&["pattern", kind]);
        assert_eq!(code(&o), 0, "{kind}");
        assert!(Trajectory::from_csv(&stdout(&o)).is_ok());
    }
    let o = signwave(&["pattern", "nodyes", "--height", "0.2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn no_color_env_strips_ansi() {
    let o = signwave(&["recognize", "--db", "/nonexistent.sax", "x.pgm"]);
    assert!(!stderr(&o).contains('\x1b'));
}
