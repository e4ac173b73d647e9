//! SVG scatter plots and RGB export of 3-D embeddings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::data::{dist, DataMatrix, Embedding};
use crate::error::{Error, Result};

const SIZE: f64 = 800.0;
const MARGIN: f64 = 0.05;
const RADIUS: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

const PALETTE: [Rgb; 10] = [
    Rgb(0x1f, 0x77, 0xb4),
    Rgb(0xff, 0x7f, 0x0e),
    Rgb(0x2c, 0xa0, 0x2c),
    Rgb(0xd6, 0x27, 0x28),
    Rgb(0x94, 0x67, 0xbd),
    Rgb(0x8c, 0x56, 0x4b),
    Rgb(0xe3, 0x77, 0xc2),
    Rgb(0x7f, 0x7f, 0x7f),
    Rgb(0xbc, 0xbd, 0x22),
    Rgb(0x17, 0xbe, 0xcf),
];

fn hsv(h: f64, s: f64, v: f64) -> Rgb {
    let c = v * s;
    let hp = (h.rem_euclid(1.0)) * 6.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let q = |u: f64| ((u + m) * 255.0).round() as u8;
    Rgb(q(r), q(g), q(b))
}

/// One distinct color per distinct label (in sorted label order).
pub fn categorical_colors(labels: &[i64]) -> Vec<Rgb> {
    let classes: BTreeMap<i64, usize> = {
        let mut sorted: Vec<i64> = labels.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        sorted.into_iter().enumerate().map(|(i, l)| (l, i)).collect()
    };
    let color = |i: usize| {
        if classes.len() <= PALETTE.len() {
            PALETTE[i]
        } else {
            // golden-angle hues keep many classes apart
            hsv(i as f64 * 0.618_033_988_75, 0.65 + 0.3 * ((i % 3) as f64 / 2.0), 0.9 - 0.25 * ((i / 3 % 2) as f64))
        }
    };
    labels.iter().map(|l| color(classes[l])).collect()
}

fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    let f = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * t).round() as u8;
    Rgb(f(a.0, b.0), f(a.1, b.1), f(a.2, b.2))
}

/// Near points are yellow, far points dark blue, by input-space distance
/// from `reference`.
pub fn distance_colors(data: &DataMatrix, reference: usize) -> Result<Vec<Rgb>> {
    if reference >= data.rows() {
        return Err(Error::invalid(format!("reference row {reference} out of range for {} rows", data.rows())));
    }
    let d: Vec<f64> = data.iter_rows().map(|r| dist(r, data.row(reference))).collect();
    let max = d.iter().copied().fold(0.0, f64::max);
    let stops = [Rgb(0xfd, 0xe7, 0x25), Rgb(0x21, 0x91, 0x8c), Rgb(0x44, 0x01, 0x54)];
    Ok(d.iter()
        .map(|&v| {
            let t = if max > 0.0 { v / max } else { 0.0 };
            if t < 0.5 {
                lerp(stops[0], stops[1], t * 2.0)
            } else {
                lerp(stops[1], stops[2], (t - 0.5) * 2.0)
            }
        })
        .collect())
}

/// Scatter plot of a 2-D embedding, one `<circle>` per point. `highlight`
/// outlines one point in red.
pub fn scatter_svg(emb: &Embedding, colors: &[Rgb], highlight: Option<usize>) -> Result<String> {
    if emb.cols() != 2 {
        return Err(Error::invalid(format!(
            "scatter plots need a 2-D embedding, got {} columns; export 3-D embeddings as RGB instead",
            emb.cols()
        )));
    }
    if colors.len() != emb.rows() {
        return Err(Error::invalid(format!("{} colors for {} points", colors.len(), emb.rows())));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for r in emb.iter_rows() {
        for a in 0..2 {
            lo[a] = lo[a].min(r[a]);
            hi[a] = hi[a].max(r[a]);
        }
    }
    let span: Vec<f64> = (0..2).map(|a| (hi[a] - lo[a]).max(1e-12)).collect();
    let scale = (1.0 - 2.0 * MARGIN) * SIZE / span[0].max(span[1]);
    let offset: Vec<f64> = (0..2).map(|a| (SIZE - span[a] * scale) / 2.0).collect();

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (i, (r, c)) in emb.iter_rows().zip(colors).enumerate() {
        let x = offset[0] + (r[0] - lo[0]) * scale;
        // SVG y grows downwards
        let y = SIZE - (offset[1] + (r[1] - lo[1]) * scale);
        let stroke = if highlight == Some(i) { r#" stroke="red" stroke-width="2""# } else { "" };
        writeln!(svg, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{RADIUS}" fill="{}"{stroke}/>"#, c.hex()).unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Min-max normalizes each of the three channels to `[0, 255]`. Constant
/// channels map to 0.
pub fn rgb_normalize(emb: &Embedding) -> Result<Vec<[u8; 3]>> {
    if emb.cols() != 3 {
        return Err(Error::invalid(format!("RGB export needs a 3-D embedding, got {} columns", emb.cols())));
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for r in emb.iter_rows() {
        for c in 0..3 {
            lo[c] = lo[c].min(r[c]);
            hi[c] = hi[c].max(r[c]);
        }
    }
    Ok(emb
        .iter_rows()
        .map(|r| {
            let mut px = [0u8; 3];
            for c in 0..3 {
                let span = hi[c] - lo[c];
                if span > 0.0 {
                    px[c] = ((r[c] - lo[c]) / span * 255.0).round() as u8;
                }
            }
            px
        })
        .collect())
}

pub fn rgb_csv(pixels: &[[u8; 3]]) -> String {
    let mut s = String::with_capacity(pixels.len() * 12);
    for p in pixels {
        writeln!(s, "{},{},{}", p[0], p[1], p[2]).unwrap();
    }
    s
}
