//! File formats: PGM images (P2/P5), CSV profiles and JSON reports.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TvlpError};
use crate::grid::{Grid1D, Image2D};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgmEncoding {
    /// P2
    Ascii,
    /// P5
    Binary,
}

/// Affine map between image values and PGM grey levels: `lo -> 0`,
/// `hi -> maxval`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityRange {
    pub lo: f64,
    pub hi: f64,
}

impl Default for IntensityRange {
    fn default() -> Self {
        IntensityRange { lo: 0.0, hi: 1.0 }
    }
}

impl IntensityRange {
    fn check(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.hi > self.lo) {
            return Err(invalid(format!("intensity range needs lo < hi, got [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }
}

const PGM_MAXVAL: u16 = 255;

fn pgm_error(location: String, message: impl Into<String>) -> TvlpError {
    TvlpError::Parse { kind: "PGM", location, message: message.into() }
}

/// Encodes an image with maxval 255; values outside the range are clamped.
pub fn encode_pgm(image: &Image2D, range: IntensityRange, encoding: PgmEncoding) -> Result<Vec<u8>> {
    range.check()?;
    let (n, m) = image.shape();
    let scale = f64::from(PGM_MAXVAL) / (range.hi - range.lo);
    let levels: Vec<u8> =
        image.values().iter().map(|&v| ((v - range.lo) * scale).round().clamp(0.0, f64::from(PGM_MAXVAL)) as u8).collect();
    let magic = match encoding {
        PgmEncoding::Ascii => "P2",
        PgmEncoding::Binary => "P5",
    };
    let mut out = format!("{magic}\n{m} {n}\n{PGM_MAXVAL}\n").into_bytes();
    match encoding {
        PgmEncoding::Binary => out.extend_from_slice(&levels),
        PgmEncoding::Ascii => {
            for row in levels.chunks(m) {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
    }
    Ok(out)
}

/// Byte cursor that tracks line numbers for diagnostics.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn location(&self) -> String {
        format!("line {}, byte offset {}", self.line, self.pos)
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(&c) = self.bytes.get(self.pos) {
            if c == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    if c == b'\n' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                if c == b'\n' {
                    self.line += 1;
                }
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|c| !c.is_ascii_whitespace() && *c != b'#') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(pgm_error(self.location(), "unexpected end of file"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| pgm_error(self.location(), "non-ASCII header"))
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let tok = self.token()?;
        tok.parse().map_err(|_| pgm_error(self.location(), format!("expected {what}, found {tok:?}")))
    }
}

/// Decodes a P2 or P5 file and maps grey levels back through `range`.
pub fn decode_pgm(bytes: &[u8], range: IntensityRange) -> Result<Image2D> {
    range.check()?;
    let mut cur = Cursor { bytes, pos: 0, line: 1 };
    let magic = cur.token()?;
    let encoding = match magic {
        "P2" => PgmEncoding::Ascii,
        "P5" => PgmEncoding::Binary,
        other => return Err(pgm_error(cur.location(), format!("unsupported magic {other:?}, expected P2 or P5"))),
    };
    let m = cur.number("width")? as usize;
    let n = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if n == 0 || m == 0 {
        return Err(pgm_error(cur.location(), "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(pgm_error(cur.location(), format!("maxval {maxval} outside 1..=65535")));
    }
    let mut levels = Vec::with_capacity(n * m);
    match encoding {
        PgmEncoding::Ascii => {
            for _ in 0..n * m {
                let v = cur.number("grey level")?;
                if v > maxval {
                    return Err(pgm_error(cur.location(), format!("grey level {v} exceeds maxval {maxval}")));
                }
                levels.push(v);
            }
        }
        PgmEncoding::Binary => {
            // Exactly one whitespace byte separates the header from the raster.
            if !bytes.get(cur.pos).is_some_and(|c| c.is_ascii_whitespace()) {
                return Err(pgm_error(cur.location(), "missing whitespace after maxval"));
            }
            let start = cur.pos + 1;
            let width = if maxval > 255 { 2 } else { 1 };
            let need = n * m * width;
            let raster = bytes.get(start..start + need).ok_or_else(|| {
                pgm_error(
                    format!("byte offset {}", bytes.len()),
                    format!("raster truncated: need {need} bytes, found {}", bytes.len().saturating_sub(start)),
                )
            })?;
            for (k, chunk) in raster.chunks(width).enumerate() {
                let v = if width == 2 { u32::from(chunk[0]) << 8 | u32::from(chunk[1]) } else { u32::from(chunk[0]) };
                if v > maxval {
                    return Err(pgm_error(format!("byte offset {}", start + k * width), format!("grey level {v} exceeds maxval {maxval}")));
                }
                levels.push(v);
            }
        }
    }
    let scale = (range.hi - range.lo) / f64::from(maxval);
    let values: Vec<f64> = levels.iter().map(|&v| range.lo + f64::from(v) * scale).collect();
    let values = Array2::from_shape_vec((n, m), values).expect("n*m levels");
    Image2D::new(values, 1.0)
}

pub fn write_pgm(path: impl AsRef<Path>, image: &Image2D, range: IntensityRange, encoding: PgmEncoding) -> Result<()> {
    fs::write(path, encode_pgm(image, range, encoding)?)?;
    Ok(())
}

pub fn read_pgm(path: impl AsRef<Path>, range: IntensityRange) -> Result<Image2D> {
    decode_pgm(&fs::read(path)?, range)
}

/// A 1D profile: sample positions, the signal, and optionally `w` and `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Option<Vec<f64>>,
    pub f: Option<Vec<f64>>,
}

impl Profile {
    pub fn from_grid(u: &Grid1D) -> Self {
        Profile { x: u.coordinates().to_vec(), u: u.values().to_vec(), w: None, f: None }
    }

    /// Rebuilds a cell-centred grid from uniformly spaced `x`.
    pub fn grid(&self, column: &[f64]) -> Result<Grid1D> {
        if self.x.len() < 2 {
            return Err(invalid("a profile needs at least 2 rows"));
        }
        let t = (self.x[self.x.len() - 1] - self.x[0]) / (self.x.len() - 1) as f64;
        Grid1D::new(Array1::from(column.to_vec()), t, self.x[0] - 0.5 * t)
    }

    pub fn u_grid(&self) -> Result<Grid1D> {
        self.grid(&self.u)
    }
}

fn csv_error(e: csv::Error) -> TvlpError {
    let location = e.position().map(|p| format!("line {}, byte offset {}", p.line(), p.byte())).unwrap_or_else(|| "unknown".into());
    TvlpError::Parse { kind: "CSV", location, message: e.to_string() }
}

/// `x,u[,w][,f]` with a header row; numbers carry 17 significant digits.
pub fn write_profile_csv(out: impl Write, profile: &Profile) -> Result<()> {
    let n = profile.x.len();
    let extra = [("w", &profile.w), ("f", &profile.f)];
    if profile.u.len() != n || extra.iter().any(|(_, c)| c.as_ref().is_some_and(|c| c.len() != n)) {
        return Err(invalid("profile columns differ in length"));
    }
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["x", "u"];
    header.extend(extra.iter().filter(|(_, c)| c.is_some()).map(|(name, _)| *name));
    wtr.write_record(&header).map_err(csv_error)?;
    for i in 0..n {
        let mut row = vec![format!("{:.16e}", profile.x[i]), format!("{:.16e}", profile.u[i])];
        for (_, col) in &extra {
            if let Some(c) = col {
                row.push(format!("{:.16e}", c[i]));
            }
        }
        wtr.write_record(&row).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a profile written by [`write_profile_csv`]. Columns are matched by
/// header name; `x` and `u` are required.
pub fn read_profile_csv(input: impl Read) -> Result<Profile> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (ix, iu) = match (col("x"), col("u")) {
        (Some(ix), Some(iu)) => (ix, iu),
        _ => {
            return Err(TvlpError::Parse {
                kind: "CSV",
                location: "line 1".into(),
                message: format!("header must contain x and u, found {:?}", headers.iter().collect::<Vec<_>>()),
            })
        }
    };
    let (iw, i_f) = (col("w"), col("f"));
    let mut p = Profile { x: vec![], u: vec![], w: iw.map(|_| vec![]), f: i_f.map(|_| vec![]) };
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let get = |i: usize| -> Result<f64> {
            let field = record.get(i).unwrap_or("");
            field.trim().parse::<f64>().map_err(|_| TvlpError::Parse {
                kind: "CSV",
                location: format!("line {line}, column {}", i + 1),
                message: format!("not a number: {field:?}"),
            })
        };
        p.x.push(get(ix)?);
        p.u.push(get(iu)?);
        if let (Some(i), Some(w)) = (iw, p.w.as_mut()) {
            w.push(get(i)?);
        }
        if let (Some(i), Some(f)) = (i_f, p.f.as_mut()) {
            f.push(get(i)?);
        }
    }
    Ok(p)
}

pub fn write_profile(path: impl AsRef<Path>, profile: &Profile) -> Result<()> {
    write_profile_csv(fs::File::create(path)?, profile)
}

pub fn read_profile(path: impl AsRef<Path>) -> Result<Profile> {
    read_profile_csv(fs::File::open(path)?)
}

/// Pretty-printed JSON.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Machine-readable record of one command run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub parameters: serde_json::Value,
    #[serde(default)]
    pub results: serde_json::Value,
    /// Seconds.
    pub wall_time: f64,
}

/// Images with a single column are treated as 1D signals and go to CSV;
/// anything else goes to PGM.
pub fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads an image from PGM or the `u` column of a CSV profile.
pub fn load_image(path: impl AsRef<Path>, range: IntensityRange) -> Result<Image2D> {
    let path = path.as_ref();
    if is_csv(path) {
        Ok(read_profile(path)?.u_grid()?.to_image())
    } else {
        read_pgm(path, range)
    }
}

/// Writes a 1D signal as CSV or an image as binary PGM, by extension.
pub fn save_image(path: impl AsRef<Path>, image: &Image2D, origin: f64, range: IntensityRange) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        write_profile(path, &Profile::from_grid(&Grid1D::from_image(image, origin)?))
    } else {
        write_pgm(path, image, range, PgmEncoding::Binary)
    }
}
