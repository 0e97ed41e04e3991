//! Line-oriented template database file.
//!
//! ```text
//! saxdb 1 <N> <w> <a> <theta>
//! <sign>\t<azimuth>\t<distance_m>\t<altitude_m>\t<word>
//! ```
//!
//! Numbers are printed in Rust's shortest round-trip form, so
//! `format(parse(text)) == text` for any file this module wrote.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::recognizer::{Template, TemplateDb, TemplateSource};
use crate::sax::{SaxParams, SaxWord};
use crate::signature::PipelineConfig;

pub const MAGIC: &str = "saxdb";
pub const VERSION: u32 = 1;

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        what: "saxdb",
        line,
        msg: msg.into(),
    }
}

fn num<T: std::str::FromStr>(tok: &str, line: usize, name: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| err(line, format!("bad {name} {tok:?}")))
}

pub fn format_db(db: &TemplateDb) -> String {
    let p = db.pipeline();
    let mut out = format!(
        "{MAGIC} {VERSION} {} {} {} {}\n",
        p.samples,
        p.sax.segments(),
        p.sax.alphabet(),
        db.theta()
    );
    for t in db.templates() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            t.sign, t.source.azimuth_deg, t.source.distance_m, t.source.altitude_m, t.word
        ));
    }
    out
}

/// Parse a database. Binarization settings come from `base`; signature length
/// and SAX parameters come from the header.
pub fn parse_db(text: &str, base: PipelineConfig) -> Result<TemplateDb> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let h: Vec<&str> = header.split(' ').collect();
    if h.len() != 6 || h[0] != MAGIC {
        return Err(err(1, "expected `saxdb 1 <N> <w> <a> <theta>`"));
    }
    let version: u32 = num(h[1], 1, "version")?;
    if version != VERSION {
        return Err(err(1, format!("unsupported version {version}")));
    }
    let samples: usize = num(h[2], 1, "N")?;
    let sax = SaxParams::new(num(h[3], 1, "w")?, num(h[4], 1, "a")?)
        .map_err(|e| err(1, e.to_string()))?;
    let theta: f64 = num(h[5], 1, "theta")?;
    let pipeline = PipelineConfig {
        samples,
        sax,
        ..base
    };

    let mut templates = Vec::new();
    for (no, line) in lines {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(err(
                no,
                format!("expected 5 tab-separated fields, got {}", f.len()),
            ));
        }
        let sign = f[0].parse().map_err(|e: Error| err(no, e.to_string()))?;
        let word = SaxWord::from_letters(f[4], sax, samples).map_err(|e| err(no, e.to_string()))?;
        templates.push(Template {
            sign,
            word,
            source: TemplateSource {
                azimuth_deg: num(f[1], no, "azimuth")?,
                distance_m: num(f[2], no, "distance")?,
                altitude_m: num(f[3], no, "altitude")?,
                file: None,
            },
        });
    }
    TemplateDb::from_parts(pipeline, theta, templates)
}

pub fn load_db(path: &Path, base: PipelineConfig) -> Result<TemplateDb> {
    parse_db(&fs::read_to_string(path)?, base)
}

pub fn save_db(path: &Path, db: &TemplateDb) -> Result<()> {
    fs::write(path, format_db(db))?;
    Ok(())
}
