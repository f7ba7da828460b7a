//! SVG and PPM images of reconstructed polar fields.
//!
//! Each grid value `u(r_i, θ_j)` colours the annular cell
//! `[r_i − h/2, r_i + h/2] × [θ_j − Δθ/2, θ_j + Δθ/2]` (clipped to the disc).
//! Phase uses a cyclic hue wheel; the real part uses a blue–white–red map
//! symmetric about zero.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use spiralwave::{Complex64, PolarField};

/// Image side length in pixels.
pub const IMAGE_SIZE: usize = 512;
const MARGIN: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Phase,
    Real,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Phase => "phase",
            Quantity::Real => "real",
        }
    }
}

pub type Rgb = [u8; 3];

/// Hue wheel: phase `−π` and `π` map to the same colour.
pub fn phase_color(z: Complex64) -> Rgb {
    let hue = (z.arg() + PI) / TAU * 6.0;
    let sector = (hue.floor() as i64).rem_euclid(6);
    let frac = hue - hue.floor();
    let (up, down) = ((255.0 * frac).round() as u8, (255.0 * (1.0 - frac)).round() as u8);
    match sector {
        0 => [255, up, 0],
        1 => [down, 255, 0],
        2 => [0, 255, up],
        3 => [0, down, 255],
        4 => [up, 0, 255],
        _ => [255, 0, down],
    }
}

/// Diverging map on `[−scale, scale]`: blue, white at zero, red.
pub fn real_color(x: f64, scale: f64) -> Rgb {
    let t = if scale > 0.0 { (x / scale).clamp(-1.0, 1.0) } else { 0.0 };
    let fade = (255.0 * (1.0 - t.abs())).round() as u8;
    if t >= 0.0 {
        [255, fade, fade]
    } else {
        [fade, fade, 255]
    }
}

fn colors(field: &PolarField, what: Quantity) -> Vec<Vec<Rgb>> {
    let scale = field.values.iter().flatten().fold(0.0f64, |a, z| a.max(z.re.abs()));
    field
        .values
        .iter()
        .map(|ring| {
            ring.iter()
                .map(|&z| match what {
                    Quantity::Phase => phase_color(z),
                    Quantity::Real => real_color(z.re, scale),
                })
                .collect()
        })
        .collect()
}

fn ring_bounds(field: &PolarField, i: usize) -> (f64, f64) {
    let n = field.radii.len() - 1;
    let h = 1.0 / n as f64;
    let r = field.radii[i];
    ((r - h / 2.0).max(0.0), (r + h / 2.0).min(1.0))
}

/// Vector heatmap of polar cells.
pub fn render_svg(field: &PolarField, what: Quantity) -> String {
    let size = IMAGE_SIZE as f64;
    let c = size / 2.0;
    let scale = c - MARGIN;
    let nt = field.thetas.len();
    let dt = TAU / nt as f64;
    let xy = |r: f64, t: f64| (c + scale * r * t.cos(), c - scale * r * t.sin());
    let cols = colors(field, what);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{IMAGE_SIZE}" height="{IMAGE_SIZE}" viewBox="0 0 {IMAGE_SIZE} {IMAGE_SIZE}">"#
    );
    let _ = writeln!(out, r#"<title>{} of m = {} field</title>"#, what.name(), field.m);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, ring) in cols.iter().enumerate() {
        let (r0, r1) = ring_bounds(field, i);
        let (o0, o1) = (r0 * scale, r1 * scale);
        for (j, &[red, green, blue]) in ring.iter().enumerate() {
            let (a, b) = (field.thetas[j] - dt / 2.0, field.thetas[j] + dt / 2.0);
            let (x0, y0) = xy(r1, a);
            let (x1, y1) = xy(r1, b);
            let fill = format!("#{red:02x}{green:02x}{blue:02x}");
            // Outer arc counter-clockwise on screen, inner arc back.
            let path = if r0 == 0.0 {
                format!("M{c:.3} {c:.3}L{x0:.3} {y0:.3}A{o1:.3} {o1:.3} 0 0 0 {x1:.3} {y1:.3}Z")
            } else {
                let (x2, y2) = xy(r0, b);
                let (x3, y3) = xy(r0, a);
                format!(
                    "M{x0:.3} {y0:.3}A{o1:.3} {o1:.3} 0 0 0 {x1:.3} {y1:.3}L{x2:.3} {y2:.3}A{o0:.3} {o0:.3} 0 0 1 {x3:.3} {y3:.3}Z"
                )
            };
            let _ = writeln!(
                out,
                r#"<path d="{path}" fill="{fill}" stroke="{fill}" stroke-width="0.3"/>"#
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Binary PPM raster; pixels outside the disc are white.
pub fn render_ppm(field: &PolarField, what: Quantity) -> Vec<u8> {
    let size = IMAGE_SIZE;
    let c = size as f64 / 2.0;
    let scale = c - MARGIN;
    let n = field.radii.len() - 1;
    let nt = field.thetas.len();
    let cols = colors(field, what);
    let mut out = format!("P6\n{size} {size}\n255\n").into_bytes();
    out.reserve(3 * size * size);
    for py in 0..size {
        for px in 0..size {
            let x = (px as f64 + 0.5 - c) / scale;
            let y = (c - py as f64 - 0.5) / scale;
            let r = x.hypot(y);
            let rgb = if r > 1.0 {
                [255, 255, 255]
            } else {
                let i = ((r * n as f64).round() as usize).min(n);
                let j = ((y.atan2(x).rem_euclid(TAU) / TAU * nt as f64).round() as usize) % nt;
                cols[i][j]
            };
            out.extend_from_slice(&rgb);
        }
    }
    out
}

/// Raw grid as CSV: `i,j,r,theta,re,im`.
pub fn grid_csv(field: &PolarField) -> String {
    let mut out = String::from("i,j,r,theta,re,im\n");
    for (i, ring) in field.values.iter().enumerate() {
        for (j, z) in ring.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{j},{:?},{:?},{:?},{:?}",
                field.radii[i], field.thetas[j], z.re, z.im
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use spiralwave::radial::reconstruct_field;
    use spiralwave::{RadialGrid, RadialProfile};

    fn field(m: i64, n_theta: usize) -> PolarField {
        let grid = RadialGrid::new(16).unwrap();
        let p = RadialProfile::from_fn(m, grid, |r| Complex64::new(r + 0.1, 0.2 * r));
        reconstruct_field(&p, n_theta).unwrap()
    }

    #[test]
    fn phase_map_is_cyclic() {
        let a = phase_color(Complex64::from_polar(1.0, PI - 1e-12));
        let b = phase_color(Complex64::from_polar(1.0, -PI));
        assert!(a.iter().zip(&b).all(|(x, y)| x.abs_diff(*y) <= 1));
        assert_eq!(real_color(0.0, 1.0), [255, 255, 255]);
        assert_eq!(real_color(2.0, 1.0), [255, 0, 0]);
        assert_eq!(real_color(-1.0, 1.0), [0, 0, 255]);
    }

    #[test]
    fn target_field_is_radially_symmetric() {
        let f = field(0, 32);
        for what in [Quantity::Phase, Quantity::Real] {
            for ring in colors(&f, what) {
                assert!(ring.iter().all(|c| *c == ring[0]));
            }
        }
    }

    #[test]
    fn phase_winds_m_times_per_ring() {
        // Count the wraps of the hue angle around each ring.
        for m in [-2i64, 1, 2, 3] {
            let f = field(m, 64);
            for ring in &f.values[1..] {
                let mut turns = 0.0;
                for j in 0..ring.len() {
                    let (a, b) = (ring[j], ring[(j + 1) % ring.len()]);
                    turns += (b / a).arg();
                }
                assert_eq!((turns / TAU).round() as i64, m);
            }
        }
    }

    #[test]
    fn outputs_are_well_formed() {
        let f = field(2, 16);
        let svg = render_svg(&f, Quantity::Phase);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<path").count(), 17 * 16);
        let ppm = render_ppm(&f, Quantity::Real);
        let header = format!("P6\n{IMAGE_SIZE} {IMAGE_SIZE}\n255\n");
        assert_eq!(ppm.len(), header.len() + 3 * IMAGE_SIZE * IMAGE_SIZE);
        assert_eq!(grid_csv(&f).lines().count(), 1 + 17 * 16);
    }
}
