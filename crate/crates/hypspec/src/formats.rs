//! Group presentation files (JSON), spectrum files and Gram matrix files.
//!
//! Spectrum and Gram files are plain text with `#` comments. Reals are written
//! with 17 significant digits, which round-trips every `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hypspec_core::hyperbolic::SurfaceSignature;
use hypspec_core::metrics::GramMatrix;
use hypspec_core::spectrum::{Completeness, GeodesicClass, GroupPresentation, LengthSpectrum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;
use crate::{Error, Result};

pub const SPECTRUM_MAGIC: &str = "hypspec-spectrum v1";
pub const GRAM_MAGIC: &str = "hypspec-gram v1";

/// 17 significant digits in scientific notation.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureFile {
    pub g: u32,
    pub n: u32,
}

/// On-disk group presentation: generators are 2×2 row-major arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    pub label: String,
    pub signature: SignatureFile,
    pub generators: Vec<[[f64; 2]; 2]>,
}

impl GroupFile {
    pub fn from_presentation(grp: &GroupPresentation) -> Self {
        let sig = grp.signature();
        Self {
            label: grp.label().to_owned(),
            signature: SignatureFile { g: sig.g, n: sig.n },
            generators: grp.generator_entries().into_iter().map(|e| [[e[0], e[1]], [e[2], e[3]]]).collect(),
        }
    }

    pub fn to_presentation(&self) -> Result<GroupPresentation> {
        let gens: Vec<[f64; 4]> = self.generators.iter().map(|m| [m[0][0], m[0][1], m[1][0], m[1][1]]).collect();
        let sig = SurfaceSignature::new(self.signature.g, self.signature.n);
        Ok(GroupPresentation::new(&self.label, sig, &gens)?)
    }
}

pub fn parse_group(text: &str) -> Result<GroupPresentation> {
    serde_json::from_str::<GroupFile>(text)?.to_presentation()
}

pub fn render_group(grp: &GroupPresentation) -> String {
    let mut s = serde_json::to_string_pretty(&GroupFile::from_presentation(grp)).expect("group serializes");
    s.push('\n');
    s
}

pub fn read_group(path: &Path) -> Result<GroupPresentation> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_group(&text)
}

pub fn write_group(path: &Path, grp: &GroupPresentation) -> Result<()> {
    fs::write(path, render_group(grp)).map_err(|e| Error::io(path, e))
}

fn render_word(w: &[i32]) -> String {
    w.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Text form of a spectrum. Partial spectra carry a `status PARTIAL` line.
pub fn render_spectrum(spec: &LengthSpectrum, manifest: Option<&RunManifest>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {SPECTRUM_MAGIC}");
    if let Some(m) = manifest {
        let _ = writeln!(s, "{}", m.comment_line());
    }
    let _ = writeln!(s, "fingerprint {}", hex::encode(spec.group_fingerprint));
    let _ = writeln!(s, "tool_version {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "status {}", if spec.is_partial() { "PARTIAL" } else { "complete" });
    let _ = writeln!(s, "cutoff {}", real(spec.cutoff));
    let _ = writeln!(s, "complete_below {}", real(spec.complete_below));
    let _ = writeln!(s, "completeness {}", spec.completeness.as_str());
    let _ = writeln!(s, "margin {}", real(spec.margin));
    let _ = writeln!(s, "classes {}", spec.len());
    let _ = writeln!(s, "# length abs_trace word multiplicity");
    for c in &spec.classes {
        let _ = writeln!(s, "{} {} {} {}", real(c.length), real(c.abs_trace), render_word(&c.word), c.multiplicity);
    }
    s.push_str("end\n");
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate(), last: 0 }
    }

    /// Next non-comment, non-blank line with its 1-based number.
    fn next(&mut self) -> Result<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Ok((i + 1, t));
            }
        }
        Err(Error::parse(self.last + 1, "unexpected end of file"))
    }

    fn field(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (n, l) = self.next()?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok((n, v.trim())),
            _ => Err(Error::parse(n, format!("expected `{key} <value>`"))),
        }
    }
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::parse(line, format!("cannot parse {s:?}")))
}

fn fingerprint_from_hex(line: usize, s: &str) -> Result<[u8; 32]> {
    let bytes = hex::decode(s).map_err(|_| Error::parse(line, "fingerprint is not hex"))?;
    bytes.try_into().map_err(|_| Error::parse(line, "fingerprint must be 32 bytes"))
}

pub fn parse_spectrum(text: &str) -> Result<LengthSpectrum> {
    if !text.starts_with(&format!("# {SPECTRUM_MAGIC}")) {
        return Err(Error::parse(1, "missing spectrum header"));
    }
    let mut lines = Lines::new(text);
    let (n, fp) = lines.field("fingerprint")?;
    let fingerprint = fingerprint_from_hex(n, fp)?;
    lines.field("tool_version")?;
    let (n, status) = lines.field("status")?;
    if status != "PARTIAL" && status != "complete" {
        return Err(Error::parse(n, "status must be `complete` or `PARTIAL`"));
    }
    let (n, v) = lines.field("cutoff")?;
    let cutoff: f64 = num(n, v)?;
    let (n, v) = lines.field("complete_below")?;
    let complete_below: f64 = num(n, v)?;
    let (n, v) = lines.field("completeness")?;
    let completeness: Completeness = v.parse().map_err(|_| Error::parse(n, "unknown completeness flag"))?;
    let (n, v) = lines.field("margin")?;
    let margin: f64 = num(n, v)?;
    let (n, v) = lines.field("classes")?;
    let count: usize = num(n, v)?;
    let mut classes = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, l) = lines.next()?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(Error::parse(n, "class rows need length, abs_trace, word, multiplicity"));
        }
        let word = parts[2].split(',').map(|x| num::<i32>(n, x)).collect::<Result<Vec<_>>>()?;
        classes.push(GeodesicClass {
            length: num(n, parts[0])?,
            abs_trace: num(n, parts[1])?,
            word,
            multiplicity: num(n, parts[3])?,
        });
    }
    let (n, l) = lines.next()?;
    if l != "end" {
        return Err(Error::parse(n, "expected `end` after the class rows"));
    }
    let partial = status == "PARTIAL";
    if partial != (complete_below < cutoff) {
        return Err(Error::parse(n, "status disagrees with complete_below"));
    }
    let mut spec = LengthSpectrum::from_classes(classes, cutoff, fingerprint, complete_below, completeness)?;
    spec.margin = margin;
    Ok(spec)
}

pub fn write_spectrum(path: &Path, spec: &LengthSpectrum, manifest: Option<&RunManifest>) -> Result<()> {
    fs::write(path, render_spectrum(spec, manifest)).map_err(|e| Error::io(path, e))
}

/// Load a spectrum; with `expected` set, a fingerprint mismatch is an error.
pub fn read_spectrum(path: &Path, expected: Option<&[u8; 32]>) -> Result<LengthSpectrum> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec = parse_spectrum(&text)?;
    if let Some(fp) = expected {
        if fp != &spec.group_fingerprint {
            return Err(Error::Fingerprint { expected: hex::encode(fp), found: hex::encode(spec.group_fingerprint) });
        }
    }
    Ok(spec)
}

/// Dimension line followed by `d` rows of `2d` numbers (`re im` pairs).
pub fn render_gram(g: &GramMatrix) -> String {
    let d = g.dim();
    let mut s = format!("# {GRAM_MAGIC}\n{d}\n");
    for i in 0..d {
        let row: Vec<String> = (0..d).map(|j| g.get(i, j)).map(|z| format!("{} {}", real(z.re), real(z.im))).collect();
        s.push_str(&row.join("  "));
        s.push('\n');
    }
    s
}

pub fn parse_gram(text: &str) -> Result<GramMatrix> {
    let mut lines = Lines::new(text);
    let (n, l) = lines.next()?;
    let d: usize = num(n, l)?;
    let mut entries = Vec::with_capacity(d * d);
    for _ in 0..d {
        let (n, l) = lines.next()?;
        let vals = l.split_whitespace().map(|x| num::<f64>(n, x)).collect::<Result<Vec<_>>>()?;
        if vals.len() != 2 * d {
            return Err(Error::parse(n, format!("expected {} numbers per row", 2 * d)));
        }
        entries.extend(vals.chunks(2).map(|p| Complex64::new(p[0], p[1])));
    }
    Ok(GramMatrix::new(d, entries)?)
}

pub fn read_gram(path: &Path) -> Result<GramMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_gram(&text)
}

pub fn write_gram(path: &Path, g: &GramMatrix) -> Result<()> {
    fs::write(path, render_gram(g)).map_err(|e| Error::io(path, e))
}
