//! Template enrollment and rotation-invariant sign matching.
//!
//! A [`TemplateDb`] holds SAX words of canonical sign frames. Recognition runs
//! the frame pipeline, compares the query against every template with
//! [`sax::rotation_min_dist`], and accepts the nearest template only when its
//! distance is within the rejection threshold θ.
//!
//! The query word is computed at every sub-segment phase of its signature
//! (`ceil(N/w)` phases, each a one-sample circular shift before PAA). The
//! contour start point is fixed by raster order, so rotating a sign moves the
//! start by an arbitrary arc length; the phase search realigns the PAA grid
//! before the word-level circular shift search.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::raster::GrayImage;
use crate::sax::{self, DistTable, RotationMatch, SaxWord};
use crate::sign::SignId;
use crate::signature::{self, PipelineConfig, Signature};
use crate::synth::{CorpusManifest, ManifestRow};

/// Where a template's frame came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TemplateSource {
    pub azimuth_deg: f64,
    pub distance_m: f64,
    pub altitude_m: f64,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub sign: SignId,
    pub word: SaxWord,
    pub source: TemplateSource,
}

/// Immutable template database; enrollment returns a new value.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateDb {
    pipeline: PipelineConfig,
    theta: f64,
    theta_pinned: bool,
    phase_search: bool,
    templates: Vec<Template>,
}

/// Fraction of the minimum inter-sign template distance used as θ.
pub const THETA_FRACTION: f64 = 0.5;

/// Result of [`TemplateDb::enroll`].
#[derive(Debug, Clone, PartialEq)]
pub enum Enrollment {
    Added,
    /// The same sign already has this exact word; the database is unchanged.
    Duplicate {
        existing: usize,
    },
}

impl TemplateDb {
    pub fn new(pipeline: PipelineConfig) -> Result<Self> {
        pipeline.validate()?;
        Ok(TemplateDb {
            pipeline,
            theta: 0.0,
            theta_pinned: false,
            phase_search: true,
            templates: Vec::new(),
        })
    }

    /// Rebuild from stored parts; θ is kept as given until the next
    /// enrollment recalibrates it.
    pub fn from_parts(
        pipeline: PipelineConfig,
        theta: f64,
        templates: Vec<Template>,
    ) -> Result<Self> {
        pipeline.validate()?;
        check_theta(theta)?;
        for t in &templates {
            if t.word.params() != pipeline.sax || t.word.source_len() != pipeline.samples {
                return Err(Error::invalid(format!(
                    "template for {} does not match database parameters",
                    t.sign
                )));
            }
        }
        Ok(TemplateDb {
            pipeline,
            theta,
            theta_pinned: false,
            phase_search: true,
            templates,
        })
    }

    /// Fix θ; later enrollments no longer recalibrate it.
    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        self.theta = theta;
        self.theta_pinned = true;
        Ok(self)
    }

    /// Disable the sub-segment phase search (word shifts only).
    pub fn with_phase_search(mut self, on: bool) -> Self {
        self.phase_search = on;
        self
    }

    /// Swap binarization settings. Signature length and SAX parameters are
    /// part of the stored words and must not change.
    pub fn with_pipeline(mut self, pipeline: PipelineConfig) -> Result<Self> {
        pipeline.validate()?;
        if pipeline.samples != self.pipeline.samples || pipeline.sax != self.pipeline.sax {
            return Err(Error::invalid(
                "pipeline signature length / SAX parameters differ from the database",
            ));
        }
        self.pipeline = pipeline;
        Ok(self)
    }

    pub fn pipeline(&self) -> &PipelineConfig {
        &self.pipeline
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta_pinned(&self) -> bool {
        self.theta_pinned
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// Distinct signs in enrollment order.
    pub fn signs(&self) -> Vec<SignId> {
        let mut out: Vec<SignId> = Vec::new();
        for t in &self.templates {
            if !out.contains(&t.sign) {
                out.push(t.sign.clone());
            }
        }
        out
    }

    /// Enroll a frame. Pipeline failures propagate and leave `self` as is.
    pub fn enroll(
        &self,
        img: &GrayImage,
        sign: SignId,
        source: TemplateSource,
    ) -> Result<(TemplateDb, Enrollment)> {
        let (word, _) = signature::image_to_word(img, &self.pipeline)?;
        self.enroll_word(sign, word, source)
    }

    pub fn enroll_word(
        &self,
        sign: SignId,
        word: SaxWord,
        source: TemplateSource,
    ) -> Result<(TemplateDb, Enrollment)> {
        if word.params() != self.pipeline.sax || word.source_len() != self.pipeline.samples {
            return Err(Error::invalid("word parameters differ from the database"));
        }
        if let Some(existing) = self
            .templates
            .iter()
            .position(|t| t.sign == sign && t.word == word)
        {
            return Ok((self.clone(), Enrollment::Duplicate { existing }));
        }
        let mut db = self.clone();
        db.templates.push(Template { sign, word, source });
        if !db.theta_pinned {
            db.theta = db.calibrated_theta();
        }
        Ok((db, Enrollment::Added))
    }

    /// θ = [`THETA_FRACTION`] × the minimum rotation distance between
    /// templates of different signs; 0 while fewer than two signs exist.
    pub fn calibrated_theta(&self) -> f64 {
        self.min_inter_sign_distance()
            .map_or(0.0, |d| THETA_FRACTION * d)
    }

    fn min_inter_sign_distance(&self) -> Option<f64> {
        let table = DistTable::new(self.pipeline.sax.alphabet()).expect("validated alphabet");
        let mut best: Option<f64> = None;
        for (i, a) in self.templates.iter().enumerate() {
            for b in &self.templates[i + 1..] {
                if a.sign != b.sign {
                    let d = sax::rotation_min_dist_with(&table, &a.word, &b.word).distance;
                    best = Some(best.map_or(d, |m: f64| m.min(d)));
                }
            }
        }
        best
    }

    /// Query words at each PAA phase of a raw signature.
    fn query_words(&self, sig: &Signature) -> Result<Vec<SaxWord>> {
        let z = signature::normalized_signature(sig, &self.pipeline)?;
        let n = self.pipeline.samples;
        let w = self.pipeline.sax.segments();
        let phases = if self.phase_search { n.div_ceil(w) } else { 1 };
        (0..phases)
            .map(|p| sax::sax_word(&z.rotated_left(p), self.pipeline.sax))
            .collect()
    }

    /// Best rotation match of a set of query phase words against one template.
    fn best_against(table: &DistTable, queries: &[SaxWord], template: &SaxWord) -> RotationMatch {
        let mut best: Option<RotationMatch> = None;
        for q in queries {
            let m = sax::rotation_min_dist_with(table, q, template);
            if best.is_none_or(|b| m.better_than(&b)) {
                best = Some(m);
            }
        }
        best.expect("at least one phase")
    }

    /// Match a frame against the database.
    ///
    /// Pipeline failures are reported as [`MatchResult::NoShape`]; only an
    /// empty database is an error.
    pub fn recognize(&self, img: &GrayImage) -> Result<MatchResult> {
        if self.templates.is_empty() {
            return Err(Error::invalid("template database is empty"));
        }
        let queries = match signature::image_signature(img, &self.pipeline)
            .and_then(|sig| self.query_words(&sig))
        {
            Ok(q) => q,
            Err(e) => return Ok(MatchResult::NoShape(NoShapeReason::from_error(&e))),
        };
        Ok(self.match_words(&queries))
    }

    /// Match precomputed query phase words (phase 0 first).
    pub fn match_words(&self, queries: &[SaxWord]) -> MatchResult {
        let table = DistTable::new(self.pipeline.sax.alphabet()).expect("validated alphabet");
        let mut best: Option<(usize, RotationMatch)> = None;
        for (i, t) in self.templates.iter().enumerate() {
            let m = Self::best_against(&table, queries, &t.word);
            // Strict improvement only: earlier enrollment wins ties.
            if best.as_ref().is_none_or(|(_, b)| m.better_than(b)) {
                best = Some((i, m));
            }
        }
        let (index, m) = best.expect("non-empty database");
        if m.distance <= self.theta {
            MatchResult::Match {
                sign: self.templates[index].sign.clone(),
                distance: m.distance,
                shift: m.shift,
                template: index,
            }
        } else {
            MatchResult::NoMatch {
                best_distance: m.distance,
                nearest: self.templates[index].sign.clone(),
            }
        }
    }

    /// Compare every pair of templates that belong to different signs.
    pub fn pairwise_uniqueness(&self) -> Result<UniquenessReport> {
        if self.signs().len() < 2 {
            return Err(Error::invalid(
                "uniqueness needs at least two enrolled signs",
            ));
        }
        let table = DistTable::new(self.pipeline.sax.alphabet()).expect("validated alphabet");
        let mut pairs = Vec::new();
        for (i, a) in self.templates.iter().enumerate() {
            for (j, b) in self.templates.iter().enumerate().skip(i + 1) {
                if a.sign == b.sign {
                    continue;
                }
                pairs.push(PairReport {
                    first: i,
                    second: j,
                    signs: (a.sign.clone(), b.sign.clone()),
                    words_equal: a.word == b.word,
                    rotation_distance: sax::rotation_min_dist_with(&table, &a.word, &b.word)
                        .distance,
                });
            }
        }
        let min_distance = pairs
            .iter()
            .map(|p| p.rotation_distance)
            .fold(f64::INFINITY, f64::min);
        Ok(UniquenessReport {
            all_distinct: pairs.iter().all(|p| !p.words_equal),
            min_distance,
            pairs,
        })
    }

    /// Recognise every manifest row and aggregate correctness per
    /// (sign, azimuth bin, altitude) cell. Unreadable rows are recorded and
    /// skipped.
    pub fn sweep(
        &self,
        manifest: &CorpusManifest,
        base_dir: &Path,
        bin_width_deg: f64,
    ) -> Result<SweepReport> {
        if bin_width_deg.is_nan() || bin_width_deg <= 0.0 {
            return Err(Error::invalid("azimuth bin width must be positive"));
        }
        let mut report = SweepReport::default();
        for row in manifest.rows() {
            let path = base_dir.join(&row.file);
            let outcome = crate::pgm::load_frame(&path).and_then(|img| self.recognize(&img));
            match outcome {
                Ok(result) => report.record(row, &result, bin_width_deg),
                Err(e) => report.errors.push(RowError {
                    file: row.file.clone(),
                    sign: row.sign.clone(),
                    azimuth_deg: row.azimuth,
                    altitude_m: row.altitude_m,
                    message: e.to_string(),
                }),
            }
        }
        report.finish();
        Ok(report)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta < 0.0 {
        return Err(Error::invalid(format!(
            "θ must be finite and >= 0, got {theta}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoShapeReason {
    EmptyScene,
    TooSmall,
    Degenerate,
    Other,
}

impl NoShapeReason {
    pub fn from_error(e: &Error) -> Self {
        match e {
            Error::EmptyScene => NoShapeReason::EmptyScene,
            Error::TooSmall(_) => NoShapeReason::TooSmall,
            Error::Degenerate(_) => NoShapeReason::Degenerate,
            _ => NoShapeReason::Other,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            NoShapeReason::EmptyScene => "empty_scene",
            NoShapeReason::TooSmall => "too_small",
            NoShapeReason::Degenerate => "degenerate",
            NoShapeReason::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatchResult {
    Match {
        sign: SignId,
        distance: f64,
        shift: usize,
        template: usize,
    },
    NoMatch {
        best_distance: f64,
        nearest: SignId,
    },
    NoShape(NoShapeReason),
}

impl MatchResult {
    pub fn sign(&self) -> Option<&SignId> {
        match self {
            MatchResult::Match { sign, .. } => Some(sign),
            _ => None,
        }
    }

    /// Best template distance, when a shape was found.
    pub fn best_distance(&self) -> Option<f64> {
        match self {
            MatchResult::Match { distance, .. } => Some(*distance),
            MatchResult::NoMatch { best_distance, .. } => Some(*best_distance),
            MatchResult::NoShape(_) => None,
        }
    }

    /// `MATCH <sign> <distance> <shift>`, `NOMATCH <distance>` or
    /// `NOSHAPE <reason>`.
    pub fn report_line(&self) -> String {
        match self {
            MatchResult::Match {
                sign,
                distance,
                shift,
                ..
            } => format!("MATCH {sign} {distance:?} {shift}"),
            MatchResult::NoMatch { best_distance, .. } => format!("NOMATCH {best_distance:?}"),
            MatchResult::NoShape(r) => format!("NOSHAPE {}", r.tag()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub first: usize,
    pub second: usize,
    pub signs: (SignId, SignId),
    pub words_equal: bool,
    pub rotation_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub pairs: Vec<PairReport>,
    pub all_distinct: bool,
    pub min_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub sign: SignId,
    pub azimuth_bin: f64,
    pub altitude_m: f64,
    pub attempts: usize,
    pub correct: usize,
    distance_sum: f64,
    distance_count: usize,
}

impl SweepCell {
    pub fn accuracy(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.correct as f64 / self.attempts as f64
        }
    }

    /// Mean best distance over attempts that produced a shape.
    pub fn mean_best_distance(&self) -> Option<f64> {
        (self.distance_count > 0).then(|| self.distance_sum / self.distance_count as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub file: String,
    pub sign: SignId,
    pub azimuth_deg: f64,
    pub altitude_m: f64,
    pub message: String,
}

/// Azimuth bin accuracy for one sign, pooled over altitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct AzimuthAccuracy {
    pub azimuth_bin: f64,
    pub attempts: usize,
    pub correct: usize,
}

impl AzimuthAccuracy {
    pub fn accuracy(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.correct as f64 / self.attempts as f64
        }
    }
}

/// Share of correct matches at which an azimuth bin counts as recognisable.
pub const RECOGNISABLE_ACCURACY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    /// Sorted by sign, azimuth bin, altitude.
    pub cells: Vec<SweepCell>,
    pub errors: Vec<RowError>,
    /// Per sign: the last azimuth bin of the run of bins, starting from the
    /// lowest, whose accuracy is at least [`RECOGNISABLE_ACCURACY`]. `None`
    /// when the lowest bin already falls short.
    pub boundaries: Vec<(SignId, Option<f64>)>,
}

impl SweepReport {
    fn record(&mut self, row: &ManifestRow, result: &MatchResult, bin_width: f64) {
        let bin = (row.azimuth / bin_width).floor() * bin_width;
        let idx = match self.cells.iter().position(|c| {
            c.sign == row.sign && c.azimuth_bin == bin && c.altitude_m == row.altitude_m
        }) {
            Some(i) => i,
            None => {
                self.cells.push(SweepCell {
                    sign: row.sign.clone(),
                    azimuth_bin: bin,
                    altitude_m: row.altitude_m,
                    attempts: 0,
                    correct: 0,
                    distance_sum: 0.0,
                    distance_count: 0,
                });
                self.cells.len() - 1
            }
        };
        let cell = &mut self.cells[idx];
        cell.attempts += 1;
        if result.sign() == Some(&row.sign) {
            cell.correct += 1;
        }
        if let Some(d) = result.best_distance() {
            cell.distance_sum += d;
            cell.distance_count += 1;
        }
    }

    fn finish(&mut self) {
        self.cells.sort_by(|a, b| {
            a.sign
                .cmp(&b.sign)
                .then(a.azimuth_bin.total_cmp(&b.azimuth_bin))
                .then(a.altitude_m.total_cmp(&b.altitude_m))
        });
        let mut signs: Vec<SignId> = self.cells.iter().map(|c| c.sign.clone()).collect();
        signs.dedup();
        self.boundaries = signs
            .into_iter()
            .map(|s| {
                let mut boundary = None;
                for b in self.azimuth_accuracy(&s) {
                    if b.accuracy() >= RECOGNISABLE_ACCURACY {
                        boundary = Some(b.azimuth_bin);
                    } else {
                        break;
                    }
                }
                (s, boundary)
            })
            .collect();
    }

    /// Accuracy per azimuth bin for `sign`, pooled over altitudes, ascending.
    pub fn azimuth_accuracy(&self, sign: &SignId) -> Vec<AzimuthAccuracy> {
        let mut out: Vec<AzimuthAccuracy> = Vec::new();
        for c in self.cells.iter().filter(|c| &c.sign == sign) {
            match out.last_mut() {
                Some(last) if last.azimuth_bin == c.azimuth_bin => {
                    last.attempts += c.attempts;
                    last.correct += c.correct;
                }
                _ => out.push(AzimuthAccuracy {
                    azimuth_bin: c.azimuth_bin,
                    attempts: c.attempts,
                    correct: c.correct,
                }),
            }
        }
        out
    }

    pub fn boundary(&self, sign: &SignId) -> Option<f64> {
        self.boundaries
            .iter()
            .find(|(s, _)| s == sign)
            .and_then(|(_, b)| *b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sax::SaxParams;

    fn small_cfg() -> PipelineConfig {
        PipelineConfig {
            samples: 16,
            sax: SaxParams::new(4, 4).unwrap(),
            ..PipelineConfig::default()
        }
    }

    fn db_with(words: &[(&str, SignId)]) -> TemplateDb {
        let mut db = TemplateDb::new(small_cfg()).unwrap();
        for (w, s) in words {
            let word = SaxWord::from_letters(w, small_cfg().sax, 16).unwrap();
            db = db
                .enroll_word(s.clone(), word, TemplateSource::default())
                .unwrap()
                .0;
        }
        db
    }

    fn q(w: &str) -> SaxWord {
        SaxWord::from_letters(w, small_cfg().sax, 16).unwrap()
    }

    #[test]
    fn theta_tracks_inter_sign_distance() {
        let db = db_with(&[("aadd", SignId::No)]);
        assert_eq!(db.theta(), 0.0);
        let db = db_with(&[("aadd", SignId::No), ("dddd", SignId::Yes)]);
        let d = sax::rotation_min_dist(&q("aadd"), &q("dddd"))
            .unwrap()
            .distance;
        assert!(d > 0.0);
        assert_eq!(db.theta(), 0.5 * d);
        let pinned = db.clone().with_theta(0.25).unwrap();
        let (pinned, _) = pinned
            .enroll_word(
                SignId::AttentionGained,
                q("abab"),
                TemplateSource::default(),
            )
            .unwrap();
        assert_eq!(pinned.theta(), 0.25);
        assert!(TemplateDb::new(small_cfg())
            .unwrap()
            .with_theta(-1.0)
            .is_err());
    }

    #[test]
    fn duplicate_enrollment_is_noop() {
        let db = db_with(&[("aadd", SignId::No)]);
        let (again, e) = db
            .enroll_word(SignId::No, q("aadd"), TemplateSource::default())
            .unwrap();
        assert_eq!(e, Enrollment::Duplicate { existing: 0 });
        assert_eq!(again, db);
        // Same word under another sign is a separate template.
        let (other, e) = db
            .enroll_word(SignId::Yes, q("aadd"), TemplateSource::default())
            .unwrap();
        assert_eq!(e, Enrollment::Added);
        assert_eq!(other.len(), 2);
    }

    #[test]
    fn match_ties_follow_enrollment_order() {
        let db = db_with(&[("aadd", SignId::No), ("aadd", SignId::Yes)]);
        match db.match_words(&[q("ddaa")]) {
            MatchResult::Match {
                sign,
                shift,
                distance,
                ..
            } => {
                assert_eq!(sign, SignId::No);
                assert_eq!(distance, 0.0);
                assert_eq!(shift, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn threshold_is_inclusive() {
        let db = db_with(&[("aadd", SignId::No), ("dddd", SignId::Yes)]);
        let probe = q("aaad");
        let d = sax::rotation_min_dist(&probe, &q("aadd")).unwrap().distance;
        let at = db.clone().with_theta(d).unwrap();
        assert!(matches!(
            at.match_words(std::slice::from_ref(&probe)),
            MatchResult::Match { .. }
        ));
        let below = db.with_theta(d * 0.999).unwrap();
        assert!(matches!(
            below.match_words(&[probe]),
            MatchResult::NoMatch { .. }
        ));
    }

    #[test]
    fn uniqueness_report() {
        let db = db_with(&[
            ("aadd", SignId::No),
            ("aadd", SignId::No),
            ("dddd", SignId::Yes),
        ]);
        // The duplicate No pair was not stored; enroll a distinct second No.
        let (db, _) = db
            .enroll_word(SignId::No, q("aaad"), TemplateSource::default())
            .unwrap();
        let r = db.pairwise_uniqueness().unwrap();
        assert_eq!(r.pairs.len(), 2);
        assert!(r.pairs.iter().all(|p| p.signs.0 != p.signs.1));
        assert!(r.all_distinct);

        let same = db_with(&[("abcd", SignId::No), ("abcd", SignId::Yes)]);
        let r = same.pairwise_uniqueness().unwrap();
        assert!(!r.all_distinct);
        assert_eq!(r.min_distance, 0.0);

        assert!(db_with(&[("abcd", SignId::No)])
            .pairwise_uniqueness()
            .is_err());
    }

    #[test]
    fn empty_db_is_an_error() {
        let db = TemplateDb::new(PipelineConfig::default()).unwrap();
        let img = GrayImage::filled(16, 16, 255).unwrap();
        assert!(db.recognize(&img).is_err());
    }

    #[test]
    fn report_lines() {
        let m = MatchResult::Match {
            sign: SignId::No,
            distance: 0.0,
            shift: 0,
            template: 0,
        };
        assert_eq!(m.report_line(), "MATCH No 0.0 0");
        assert_eq!(
            MatchResult::NoShape(NoShapeReason::EmptyScene).report_line(),
            "NOSHAPE empty_scene"
        );
        let n = MatchResult::NoMatch {
            best_distance: 1.5,
            nearest: SignId::Yes,
        };
        assert_eq!(n.report_line(), "NOMATCH 1.5");
    }
}
