//! Symbolic aggregate approximation of real-valued series.
//!
//! The pipeline is z-normalisation, piecewise aggregate approximation (PAA)
//! and symbolization against equiprobable standard-normal breakpoints. Words
//! are compared with the lower-bounding MINDIST table distance, and
//! [`rotation_min_dist`] makes that comparison invariant to circular shifts
//! of the word, which is what an in-plane rotation of a closed contour turns
//! into.
//!
//! Symbol indices are zero-based: index 0 prints as `a`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const MIN_ALPHABET: usize = 2;
pub const MAX_ALPHABET: usize = 26;

/// Population standard deviation below which a series is treated as constant.
pub const DEGENERATE_STD: f64 = 1e-9;

/// An ordered sequence of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    degenerate: bool,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("time series must hold at least one sample"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("time series samples must be finite"));
        }
        Ok(TimeSeries {
            samples,
            degenerate: false,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Set by [`znormalize`] when the input had (near-)zero variance.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        let mean = self.mean();
        let var = self
            .samples
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            / self.samples.len() as f64;
        var.sqrt()
    }

    /// Circularly rotate left by `k` samples: output[i] = input[(i + k) mod n].
    pub fn rotated_left(&self, k: usize) -> TimeSeries {
        let mut samples = self.samples.clone();
        let n = samples.len();
        samples.rotate_left(k % n);
        TimeSeries {
            samples,
            degenerate: self.degenerate,
        }
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(samples: Vec<f64>) -> Result<Self> {
        TimeSeries::new(samples)
    }
}

/// Zero mean, unit population standard deviation.
///
/// A series whose standard deviation is below [`DEGENERATE_STD`] comes back
/// as all zeros with the degenerate flag set.
pub fn znormalize(series: &TimeSeries) -> Result<TimeSeries> {
    if series.is_empty() {
        return Err(Error::invalid("cannot normalise an empty series"));
    }
    let mean = series.mean();
    let std = series.std();
    if std < DEGENERATE_STD {
        return Ok(TimeSeries {
            samples: vec![0.0; series.len()],
            degenerate: true,
        });
    }
    Ok(TimeSeries {
        samples: series.samples.iter().map(|x| (x - mean) / std).collect(),
        degenerate: false,
    })
}

/// Piecewise aggregate approximation to `w` segments.
///
/// Segment `j` averages the arc `[j·n/w, (j+1)·n/w)`. When `w` does not
/// divide `n`, samples straddling a segment edge contribute to both sides in
/// proportion to their overlap; the weights are exact integers in units of
/// `1/w` of a sample.
pub fn paa(series: &TimeSeries, w: usize) -> Result<TimeSeries> {
    let n = series.len();
    if w == 0 || w > n {
        return Err(Error::invalid(format!(
            "PAA segment count {w} must lie in 1..={n}"
        )));
    }
    let x = series.samples();
    let out: Vec<f64> = if n.is_multiple_of(w) {
        let block = n / w;
        x.chunks_exact(block)
            .map(|c| c.iter().sum::<f64>() / block as f64)
            .collect()
    } else {
        (0..w)
            .map(|j| {
                let (start, end) = (j * n, (j + 1) * n);
                let mut acc = 0.0;
                for (i, xi) in x.iter().enumerate().take((end - 1) / w + 1).skip(start / w) {
                    let overlap = end.min((i + 1) * w) - start.max(i * w);
                    acc += xi * overlap as f64;
                }
                acc / n as f64
            })
            .collect()
    };
    Ok(TimeSeries {
        samples: out,
        degenerate: series.degenerate,
    })
}

fn breakpoint_table() -> &'static [Vec<f64>] {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let normal = Normal::standard();
        (MIN_ALPHABET..=MAX_ALPHABET)
            .map(|a| {
                let mut cuts: Vec<f64> = (1..a)
                    .map(|i| normal.inverse_cdf(i as f64 / a as f64))
                    .collect();
                // Force exact symmetry so that a = 2k cuts exactly at 0.
                let m = cuts.len();
                for i in 0..m / 2 {
                    let v = 0.5 * (cuts[m - 1 - i] - cuts[i]);
                    cuts[i] = -v;
                    cuts[m - 1 - i] = v;
                }
                if m % 2 == 1 {
                    cuts[m / 2] = 0.0;
                }
                cuts
            })
            .collect()
    })
}

/// Standard-normal quantiles `Φ⁻¹(i/a)` for `i = 1..a`.
pub fn breakpoints(a: usize) -> Result<&'static [f64]> {
    check_alphabet(a)?;
    Ok(&breakpoint_table()[a - MIN_ALPHABET])
}

fn check_alphabet(a: usize) -> Result<()> {
    if !(MIN_ALPHABET..=MAX_ALPHABET).contains(&a) {
        return Err(Error::invalid(format!(
            "alphabet size {a} outside {MIN_ALPHABET}..={MAX_ALPHABET}"
        )));
    }
    Ok(())
}

/// Word length and alphabet size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SaxParams {
    segments: usize,
    alphabet: usize,
}

impl SaxParams {
    pub fn new(segments: usize, alphabet: usize) -> Result<Self> {
        if segments == 0 {
            return Err(Error::invalid("word length must be at least 1"));
        }
        check_alphabet(alphabet)?;
        Ok(SaxParams { segments, alphabet })
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }
}

impl Default for SaxParams {
    /// 36 segments of a 6-letter alphabet: one symbol per 10° of contour at
    /// the default 360-sample signature.
    fn default() -> Self {
        SaxParams {
            segments: 36,
            alphabet: 6,
        }
    }
}

/// A symbolic word together with the parameters that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SaxWord {
    symbols: Vec<u8>,
    params: SaxParams,
    source_len: usize,
}

impl SaxWord {
    pub fn from_symbols(symbols: Vec<u8>, params: SaxParams, source_len: usize) -> Result<Self> {
        if symbols.len() != params.segments {
            return Err(Error::invalid(format!(
                "word has {} symbols, expected {}",
                symbols.len(),
                params.segments
            )));
        }
        if let Some(s) = symbols.iter().find(|&&s| s as usize >= params.alphabet) {
            return Err(Error::invalid(format!(
                "symbol {s} outside alphabet of size {}",
                params.alphabet
            )));
        }
        if source_len < params.segments {
            return Err(Error::invalid("source length shorter than the word"));
        }
        Ok(SaxWord {
            symbols,
            params,
            source_len,
        })
    }

    /// Parse lowercase letters, `a` = symbol 0.
    pub fn from_letters(letters: &str, params: SaxParams, source_len: usize) -> Result<Self> {
        let symbols = letters
            .bytes()
            .map(|b| {
                if b.is_ascii_lowercase() {
                    Ok(b - b'a')
                } else {
                    Err(Error::invalid(format!("bad SAX letter {:?}", b as char)))
                }
            })
            .collect::<Result<Vec<u8>>>()?;
        SaxWord::from_symbols(symbols, params, source_len)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn params(&self) -> SaxParams {
        self.params
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn letters(&self) -> String {
        self.symbols.iter().map(|&s| (b'a' + s) as char).collect()
    }

    /// Circular right rotation: `rotated[j] = self[(j - k) mod w]`.
    pub fn rotated(&self, k: usize) -> SaxWord {
        let mut symbols = self.symbols.clone();
        let w = symbols.len();
        symbols.rotate_right(k % w);
        SaxWord {
            symbols,
            params: self.params,
            source_len: self.source_len,
        }
    }
}

impl fmt::Display for SaxWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.letters())
    }
}

/// Lowercase letters with the alphabet inferred as `max letter + 1` and the
/// source length equal to the word length. Mostly useful in tests.
impl FromStr for SaxWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let max = s
            .bytes()
            .max()
            .ok_or_else(|| Error::invalid("empty word"))?;
        let alphabet = ((max.saturating_sub(b'a')) as usize + 1).max(MIN_ALPHABET);
        SaxWord::from_letters(s, SaxParams::new(s.len(), alphabet)?, s.len())
    }
}

/// Bucket a value against sorted breakpoints. A value equal to a breakpoint
/// takes the higher symbol.
#[inline]
fn symbolize(x: f64, cuts: &[f64]) -> u8 {
    cuts.partition_point(|&b| b <= x) as u8
}

/// PAA followed by breakpoint bucketing. The input is expected to be
/// z-normalised already.
pub fn sax_word(series: &TimeSeries, params: SaxParams) -> Result<SaxWord> {
    let reduced = paa(series, params.segments)?;
    let cuts = breakpoints(params.alphabet)?;
    Ok(SaxWord {
        symbols: reduced
            .samples()
            .iter()
            .map(|&x| symbolize(x, cuts))
            .collect(),
        params,
        source_len: series.len(),
    })
}

/// Cell distance between two symbols: zero for equal or adjacent symbols,
/// otherwise the gap between the breakpoints separating them.
pub fn symbol_dist(r: u8, c: u8, a: usize) -> Result<f64> {
    let cuts = breakpoints(a)?;
    if r as usize >= a || c as usize >= a {
        return Err(Error::invalid(format!(
            "symbols ({r}, {c}) outside alphabet of size {a}"
        )));
    }
    Ok(cell(r, c, cuts))
}

#[inline]
fn cell(r: u8, c: u8, cuts: &[f64]) -> f64 {
    let (lo, hi) = if r < c { (r, c) } else { (c, r) };
    if hi - lo <= 1 {
        0.0
    } else {
        cuts[hi as usize - 1] - cuts[lo as usize]
    }
}

/// Precomputed squared cell distances for one alphabet size.
#[derive(Debug, Clone)]
pub struct DistTable {
    a: usize,
    sq: Vec<f64>,
}

impl DistTable {
    pub fn new(a: usize) -> Result<Self> {
        let cuts = breakpoints(a)?;
        let mut sq = vec![0.0; a * a];
        for r in 0..a {
            for c in 0..a {
                let d = cell(r as u8, c as u8, cuts);
                sq[r * a + c] = d * d;
            }
        }
        Ok(DistTable { a, sq })
    }

    #[inline]
    fn sq(&self, r: u8, c: u8) -> f64 {
        self.sq[r as usize * self.a + c as usize]
    }
}

fn check_comparable(u: &SaxWord, v: &SaxWord) -> Result<()> {
    if u.params != v.params || u.source_len != v.source_len {
        return Err(Error::invalid(format!(
            "words not comparable: (w={}, a={}, n={}) vs (w={}, a={}, n={})",
            u.params.segments,
            u.params.alphabet,
            u.source_len,
            v.params.segments,
            v.params.alphabet,
            v.source_len
        )));
    }
    Ok(())
}

/// MINDIST: `sqrt(n/w) * sqrt(sum of squared cell distances)`.
///
/// Lower-bounds the Euclidean distance between the z-normalised series the
/// words came from.
pub fn mindist(u: &SaxWord, v: &SaxWord) -> Result<f64> {
    check_comparable(u, v)?;
    let table = DistTable::new(u.params.alphabet)?;
    Ok(mindist_with(&table, u, v, 0).0)
}

/// Distance between `rotate(u, k)` and `v`, plus the count of mismatched
/// symbols. `u` and `v` must already be known to be comparable.
fn mindist_with(table: &DistTable, u: &SaxWord, v: &SaxWord, k: usize) -> (f64, usize) {
    let w = u.symbols.len();
    let mut acc = 0.0;
    let mut mismatches = 0;
    for (j, &vj) in v.symbols.iter().enumerate() {
        let uj = u.symbols[(j + w - k % w) % w];
        acc += table.sq(uj, vj);
        mismatches += usize::from(uj != vj);
    }
    let scale = (u.source_len as f64 / w as f64).sqrt();
    (scale * acc.sqrt(), mismatches)
}

/// Outcome of a rotation-invariant word comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatch {
    pub distance: f64,
    /// Right rotation of the first word that achieves `distance`.
    pub shift: usize,
    /// Symbols that still differ at that shift.
    pub mismatches: usize,
}

/// Distances closer than this are treated as ties.
const TIE_EPS: f64 = 1e-12;

impl RotationMatch {
    /// Strict "better than" ordering: smaller distance, then fewer
    /// mismatched symbols. Equal candidates keep the earlier one.
    pub fn better_than(&self, other: &RotationMatch) -> bool {
        if self.distance < other.distance - TIE_EPS {
            return true;
        }
        if self.distance > other.distance + TIE_EPS {
            return false;
        }
        self.mismatches < other.mismatches
    }
}

/// Minimum MINDIST over all `w` circular shifts of `u` against `v`.
///
/// Ties on distance prefer the shift with fewer mismatched symbols, then the
/// smallest shift.
pub fn rotation_min_dist(u: &SaxWord, v: &SaxWord) -> Result<RotationMatch> {
    check_comparable(u, v)?;
    let table = DistTable::new(u.params.alphabet)?;
    Ok(rotation_min_dist_with(&table, u, v))
}

pub(crate) fn rotation_min_dist_with(table: &DistTable, u: &SaxWord, v: &SaxWord) -> RotationMatch {
    let mut best: Option<RotationMatch> = None;
    for k in 0..u.symbols.len() {
        let (distance, mismatches) = mindist_with(table, u, v, k);
        let cand = RotationMatch {
            distance,
            shift: k,
            mismatches,
        };
        if best.is_none_or(|b| cand.better_than(&b)) {
            best = Some(cand);
        }
    }
    best.expect("words have at least one symbol")
}

/// Exact circular match: the smallest right rotation of `u` equal to `v`.
pub fn exact_rotation_match(u: &SaxWord, v: &SaxWord) -> Result<Option<usize>> {
    check_comparable(u, v)?;
    Ok((0..u.symbols.len()).find(|&k| u.rotated(k).symbols == v.symbols))
}
