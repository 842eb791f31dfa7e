//! File formats: 16-bit PGM with an affine scaling sidecar, versioned CSV,
//! SVG level-line overlays and the resolved run config.
//!
//! Images are written with `x` (the first grid index) to the right and `y`
//! up, so PGM row `r` holds grid column `j = n - 1 - r`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tvgeo_core::geometry::ContourSet;
use tvgeo_core::GridImage;

use crate::error::{CliError, IoContext, Result};

pub const CSV_VERSION_LINE: &str = "# tvgeo-csv v1";
pub const PGM_MAXVAL: u32 = 65535;

/// `value = offset + scale * pixel`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scaling {
    pub offset: f64,
    pub scale: f64,
}

impl Scaling {
    pub fn fit(img: &GridImage) -> Self {
        let (lo, hi) = (img.min_value(), img.max_value());
        let scale = if hi > lo {
            (hi - lo) / PGM_MAXVAL as f64
        } else {
            0.0
        };
        Self { offset: lo, scale }
    }

    fn pixel(&self, v: f64) -> u16 {
        if self.scale == 0.0 {
            return 0;
        }
        ((v - self.offset) / self.scale)
            .round()
            .clamp(0.0, PGM_MAXVAL as f64) as u16
    }

    pub fn value(&self, pixel: u16) -> f64 {
        self.offset + self.scale * f64::from(pixel)
    }
}

pub fn sidecar_path(pgm: &Path) -> PathBuf {
    let mut s = pgm.as_os_str().to_owned();
    s.push(".scale.txt");
    PathBuf::from(s)
}

/// Writes `img` as a 16-bit PGM (`P5` binary or `P2` plain) plus its
/// scaling sidecar.
pub fn write_pgm(path: &Path, img: &GridImage, binary: bool) -> Result<Scaling> {
    let n = img.n();
    let scaling = Scaling::fit(img);
    let pixels = (0..n).flat_map(|r| (0..n).map(move |c| (c, n - 1 - r)));
    let mut out = Vec::with_capacity(2 * n * n + 32);
    if binary {
        out.extend_from_slice(format!("P5\n{n} {n}\n{PGM_MAXVAL}\n").as_bytes());
        for (i, j) in pixels {
            out.extend_from_slice(&scaling.pixel(img.get(i as isize, j as isize)).to_be_bytes());
        }
    } else {
        let mut s = format!("P2\n{n} {n}\n{PGM_MAXVAL}\n");
        for (k, (i, j)) in pixels.enumerate() {
            let sep = if (k + 1) % n == 0 { '\n' } else { ' ' };
            write!(s, "{}{sep}", scaling.pixel(img.get(i as isize, j as isize)))
                .expect("string write");
        }
        out = s.into_bytes();
    }
    fs::write(path, out).at(path)?;
    let side = format!(
        "# value = offset + scale * pixel\noffset {}\nscale {}\nmaxval {PGM_MAXVAL}\n# column = x index i, row = n - 1 - y index j\n",
        scaling.offset, scaling.scale
    );
    let sc = sidecar_path(path);
    fs::write(&sc, side).at(&sc)?;
    Ok(scaling)
}

/// Reads a square PGM (`P2` or `P5`, any maxval up to 65535) as values in
/// `[0, 1]`.
pub fn read_pgm(path: &Path) -> Result<GridImage> {
    let bytes = fs::read(path).at(path)?;
    let bad = |message: &str| CliError::Pgm {
        path: path.to_owned(),
        message: message.into(),
    };
    // header: magic, width, height, maxval, separated by whitespace and comments
    let mut pos = 0;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    let magic = fields[0].as_str();
    let num = |k: usize| {
        fields[k]
            .parse::<usize>()
            .map_err(|_| bad("bad header number"))
    };
    let (w, h, maxval) = (num(1)?, num(2)?, num(3)?);
    if w != h || w == 0 {
        return Err(bad("image must be square"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval out of range"));
    }
    let n = w;
    let raw: Vec<u32> = match magic {
        "P5" => {
            let data = &bytes[pos + 1..];
            let wide = maxval > 255;
            let need = n * n * if wide { 2 } else { 1 };
            if data.len() < need {
                return Err(bad("truncated pixel data"));
            }
            if wide {
                data.chunks_exact(2)
                    .take(n * n)
                    .map(|c| u32::from(u16::from_be_bytes([c[0], c[1]])))
                    .collect()
            } else {
                data[..need].iter().map(|&b| u32::from(b)).collect()
            }
        }
        "P2" => {
            let text = String::from_utf8_lossy(&bytes[pos..]);
            let vals: std::result::Result<Vec<u32>, _> = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .flat_map(str::split_whitespace)
                .map(str::parse)
                .collect();
            let vals = vals.map_err(|_| bad("bad pixel value"))?;
            if vals.len() < n * n {
                return Err(bad("truncated pixel data"));
            }
            vals
        }
        _ => return Err(bad("not a P2/P5 file")),
    };
    let mut img = GridImage::zeros(n);
    for r in 0..n {
        for c in 0..n {
            img.set(c, n - 1 - r, f64::from(raw[r * n + c]) / maxval as f64);
        }
    }
    Ok(img)
}

/// Versioned CSV table.
#[derive(Clone, Debug)]
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_VERSION_LINE);
        s.push('\n');
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).at(path)
    }
}

/// Shortest round-trip formatting; `inf`/`nan` spelled out.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

#[derive(Clone, Debug)]
pub struct SvgLayer<'a> {
    pub curves: &'a ContourSet,
    pub stroke: &'a str,
    pub width: f64,
    pub label: String,
}

/// SVG 1.1 drawing of contour layers in the unit square (y up). The
/// timestamp comment is optional so outputs can be byte-identical.
pub fn render_svg(layers: &[SvgLayer<'_>], timestamp: Option<u64>) -> String {
    let size = 512.0;
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n"
    ));
    if let Some(t) = timestamp {
        s.push_str(&format!("<!-- generated at unix time {t} -->\n"));
    }
    s.push_str(&format!(
        "<rect width=\"{size}\" height=\"{size}\" fill=\"white\"/>\n"
    ));
    for layer in layers {
        s.push_str(&format!(
            "<g fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"><title>{}</title>\n",
            layer.stroke, layer.width, layer.label
        ));
        for c in &layer.curves.curves {
            if c.vertices.is_empty() {
                continue;
            }
            let mut d = String::new();
            for (k, p) in c.vertices.iter().enumerate() {
                let (x, y) = (p[0] * size, (1.0 - p[1]) * size);
                write!(d, "{}{x:.3} {y:.3} ", if k == 0 { "M" } else { "L" })
                    .expect("string write");
            }
            if c.closed {
                d.push('Z');
            }
            s.push_str(&format!("<path d=\"{}\"/>\n", d.trim_end()));
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

pub fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Resolved configuration written next to every output.
#[derive(Clone, Debug, Serialize)]
pub struct ConfigRecord<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub rng: &'static str,
    pub command: &'a str,
    pub params: &'a T,
}

pub fn write_config<T: Serialize>(dir: &Path, command: &str, params: &T) -> Result<()> {
    let rec = ConfigRecord {
        tool: "tvgeo",
        version: env!("CARGO_PKG_VERSION"),
        rng: tvgeo_core::noise::RNG_ALGORITHM,
        command,
        params,
    };
    let path = dir.join("config.json");
    let mut text = serde_json::to_string_pretty(&rec)?;
    text.push('\n');
    fs::write(&path, text).at(&path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_both_encodings() {
        let dir = tempfile::tempdir().unwrap();
        let img = GridImage::from_fn(7, |x, y| x + 2.0 * y);
        for binary in [true, false] {
            let p = dir.path().join(if binary { "a.pgm" } else { "b.pgm" });
            let sc = write_pgm(&p, &img, binary).unwrap();
            let back = read_pgm(&p).unwrap();
            for (a, b) in img.values().iter().zip(back.values()) {
                let restored = sc.offset + sc.scale * b * PGM_MAXVAL as f64;
                assert!((a - restored).abs() <= sc.scale);
            }
            assert!(std::fs::read_to_string(sidecar_path(&p))
                .unwrap()
                .contains("offset"));
        }
    }

    #[test]
    fn constant_image_scaling() {
        let sc = Scaling::fit(&GridImage::constant(3, 0.4));
        assert_eq!(sc.scale, 0.0);
        assert_eq!(sc.value(sc.pixel(0.4)), 0.4);
    }

    #[test]
    fn rejects_bad_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.pgm");
        std::fs::write(&p, "P2\n2 3\n255\n1 2 3 4 5 6\n").unwrap();
        assert!(matches!(read_pgm(&p), Err(CliError::Pgm { .. })));
        std::fs::write(&p, "P5\n4 4\n255\n12").unwrap();
        assert!(matches!(read_pgm(&p), Err(CliError::Pgm { .. })));
    }

    #[test]
    fn csv_has_version_line() {
        let mut c = Csv::new(&["a", "b"]);
        c.push(vec![num(1.5), num(f64::INFINITY)]);
        assert_eq!(c.render(), "# tvgeo-csv v1\na,b\n1.5,inf\n");
    }

    #[test]
    fn svg_timestamp_is_optional() {
        let set = ContourSet::new(vec![tvgeo_core::geometry::Contour::closed(vec![
            [0.1, 0.1],
            [0.9, 0.1],
            [0.5, 0.9],
        ])]);
        let layer = SvgLayer {
            curves: &set,
            stroke: "black",
            width: 1.0,
            label: "t".into(),
        };
        let a = render_svg(std::slice::from_ref(&layer), None);
        assert_eq!(a, render_svg(std::slice::from_ref(&layer), None));
        assert!(a.contains("M51.200 460.800"));
        assert!(render_svg(&[layer], Some(5)).contains("unix time 5"));
    }
}
