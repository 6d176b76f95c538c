//! Minimal PNG renderers for the evaluation figures: no plotting framework,
//! just polylines, bars and scatter dots on an RGB canvas.

use std::path::Path;

use image::{Rgb, RgbImage};

pub const COLORS: [[u8; 3]; 6] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [127, 127, 127],
];

pub struct Canvas {
    img: RgbImage,
    x_range: (f64, f64),
    y_range: (f64, f64),
    margin: u32,
}

impl Canvas {
    pub fn new(width: u32, height: u32, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        let mut img = RgbImage::new(width, height);
        for p in img.pixels_mut() {
            *p = Rgb([255, 255, 255]);
        }
        let mut c = Canvas { img, x_range, y_range, margin: 24 };
        c.draw_frame();
        c
    }

    fn draw_frame(&mut self) {
        let (w, h) = (self.img.width(), self.img.height());
        let m = self.margin;
        let grey = Rgb([200, 200, 200]);
        for x in m..w - m {
            self.img.put_pixel(x, m, grey);
            self.img.put_pixel(x, h - m, grey);
        }
        for y in m..h - m {
            self.img.put_pixel(m, y, grey);
            self.img.put_pixel(w - m, y, grey);
        }
    }

    fn to_pixel(&self, x: f64, y: f64) -> Option<(i64, i64)> {
        if !x.is_finite() || !y.is_finite() {
            return None;
        }
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        let w = (self.img.width() - 2 * self.margin) as f64;
        let h = (self.img.height() - 2 * self.margin) as f64;
        let px = self.margin as f64 + (x - x0) / (x1 - x0).max(1e-12) * w;
        let py = self.margin as f64 + (y1 - y) / (y1 - y0).max(1e-12) * h;
        Some((px.round() as i64, py.round() as i64))
    }

    fn put(&mut self, x: i64, y: i64, color: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as u32) < self.img.width() && (y as u32) < self.img.height() {
            self.img.put_pixel(x as u32, y as u32, Rgb(color));
        }
    }

    pub fn dot(&mut self, x: f64, y: f64, color: [u8; 3]) {
        if let Some((px, py)) = self.to_pixel(x, y) {
            for dx in -1..=1 {
                for dy in -1..=1 {
                    self.put(px + dx, py + dy, color);
                }
            }
        }
    }

    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), color: [u8; 3]) {
        let (Some((x0, y0)), Some((x1, y1))) = (self.to_pixel(a.0, a.1), self.to_pixel(b.0, b.1))
        else {
            return;
        };
        // Bresenham.
        let (mut x, mut y) = (x0, y0);
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.put(x, y, color);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], color: [u8; 3]) {
        for pair in points.windows(2) {
            self.line(pair[0], pair[1], color);
        }
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        self.img.save(path)?;
        Ok(())
    }
}

/// World-frame trajectories per profile, with the commanded straight paths.
pub fn trajectory_plot(
    trajectories: &[(String, Vec<(f64, f64)>)],
    path: &Path,
) -> anyhow::Result<()> {
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (_, t) in trajectories {
        for &(x, y) in t {
            lo.0 = lo.0.min(x);
            lo.1 = lo.1.min(y);
            hi.0 = hi.0.max(x);
            hi.1 = hi.1.max(y);
        }
    }
    if !lo.0.is_finite() {
        lo = (-1.0, -1.0);
        hi = (1.0, 1.0);
    }
    let pad = ((hi.0 - lo.0).abs().max((hi.1 - lo.1).abs()) * 0.1).max(0.5);
    let mut canvas =
        Canvas::new(640, 640, (lo.0 - pad, hi.0 + pad), (lo.1 - pad, hi.1 + pad));
    for (i, (_, t)) in trajectories.iter().enumerate() {
        canvas.polyline(t, COLORS[i % COLORS.len()]);
    }
    canvas.save(path)
}

/// Stance bars per leg plus the support-count strip underneath.
pub fn footfall_plot(
    intervals: &[Vec<(usize, usize)>; 4],
    support: &[usize],
    path: &Path,
) -> anyhow::Result<()> {
    let steps = support.len().max(1) as f64;
    let mut canvas = Canvas::new(800, 300, (0.0, steps), (0.0, 6.0));
    for (leg, iv) in intervals.iter().enumerate() {
        let y = 5.0 - leg as f64;
        for &(a, b) in iv {
            canvas.line((a as f64, y), (b as f64 + 1.0, y), COLORS[leg]);
            canvas.line((a as f64, y - 0.08), (b as f64 + 1.0, y - 0.08), COLORS[leg]);
        }
    }
    let support_pts: Vec<(f64, f64)> =
        support.iter().enumerate().map(|(t, &c)| (t as f64, c as f64 * 0.25)).collect();
    canvas.polyline(&support_pts, COLORS[5]);
    canvas.save(path)
}

/// Two-population scatter in an embedding plane.
pub fn scatter_plot(
    populations: &[(&str, Vec<(f64, f64)>)],
    path: &Path,
) -> anyhow::Result<()> {
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (_, pts) in populations {
        for &(x, y) in pts {
            lo.0 = lo.0.min(x);
            lo.1 = lo.1.min(y);
            hi.0 = hi.0.max(x);
            hi.1 = hi.1.max(y);
        }
    }
    if !lo.0.is_finite() {
        lo = (-1.0, -1.0);
        hi = (1.0, 1.0);
    }
    let padx = ((hi.0 - lo.0) * 0.08).max(1e-3);
    let pady = ((hi.1 - lo.1) * 0.08).max(1e-3);
    let mut canvas = Canvas::new(640, 640, (lo.0 - padx, hi.0 + padx), (lo.1 - pady, hi.1 + pady));
    for (i, (_, pts)) in populations.iter().enumerate() {
        for &(x, y) in pts {
            canvas.dot(x, y, COLORS[i % COLORS.len()]);
        }
    }
    canvas.save(path)
}
