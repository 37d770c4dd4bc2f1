//! Deterministic SVG plots of single configurations.
//!
//! Coordinates are written with three decimals so identical runs render
//! identical bytes.  Germ processes draw grain outlines, calls stack into
//! rows by overlap, contours trace their dual-lattice links, and lattice
//! models draw their bonds on the grid.

use super::config::{ModelSpec, RunSpec};
use crate::model::{Individual, ModelError, Window};
use crate::models::ContourModel;
use std::fmt::Write as _;

fn f(v: f64) -> String {
    format!("{v:.3}")
}

pub struct Canvas {
    x0: f64,
    y1: f64,
    scale: f64,
    width_px: f64,
    height_px: f64,
    body: String,
}

impl Canvas {
    /// A canvas mapping the user rectangle to `width_px` pixels wide, y up.
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64, width_px: f64) -> Canvas {
        let scale = width_px / (x1 - x0);
        Canvas {
            x0,
            y1,
            scale,
            width_px,
            height_px: (y1 - y0) * scale,
            body: String::new(),
        }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.x0) * self.scale, (self.y1 - y) * self.scale)
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, w: f64) {
        let (ax, ay) = self.px(x1, y1);
        let (bx, by) = self.px(x2, y2);
        let _ = write!(
            self.body,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"{}\"/>",
            f(ax),
            f(ay),
            f(bx),
            f(by),
            f(w)
        );
    }

    pub fn dashed_circle(&mut self, cx: f64, cy: f64, r: f64, stroke: &str) {
        let (px, py) = self.px(cx, cy);
        let _ = write!(
            self.body,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.000\" stroke-dasharray=\"4 3\"/>",
            f(px),
            f(py),
            f(r * self.scale)
        );
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str, stroke: &str) {
        let (px, py) = self.px(cx, cy);
        let _ = write!(
            self.body,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\" stroke=\"{stroke}\" stroke-width=\"1.000\"/>",
            f(px),
            f(py),
            f(r * self.scale)
        );
    }

    pub fn rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, fill: &str, stroke: &str) {
        let (ax, ay) = self.px(x0, y1);
        let _ = write!(
            self.body,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\" stroke=\"{stroke}\" stroke-width=\"1.000\"/>",
            f(ax),
            f(ay),
            f((x1 - x0) * self.scale),
            f((y1 - y0) * self.scale)
        );
    }

    pub fn text(&mut self, x: f64, y: f64, size_px: f64, content: &str) {
        let (px, py) = self.px(x, y);
        let _ = write!(
            self.body,
            "<text x=\"{}\" y=\"{}\" font-size=\"{}\" font-family=\"monospace\" fill=\"#333333\">{content}</text>",
            f(px),
            f(py),
            f(size_px)
        );
    }

    pub fn render(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n{}\n</svg>\n",
            f(self.width_px),
            f(self.height_px),
            f(self.width_px),
            f(self.height_px),
            self.body
        )
    }
}

fn legend(canvas: &mut Canvas, x: f64, y: f64, model: &str, count: usize) {
    let label = if count == 0 {
        format!("{model}: empty configuration")
    } else {
        format!("{model}: {count} individuals")
    };
    canvas.text(x, y, 12.0, &label);
}

fn germ_plot(
    spec: &RunSpec,
    individuals: &[Individual],
    outline: GermOutline,
) -> Result<String, ModelError> {
    let rect = spec
        .window
        .rect()
        .ok_or_else(|| ModelError::BadWindow("germ plots need a planar window".to_string()))?;
    let reach = outline.reach();
    let (x0, y0, x1, y1) = (
        rect.x0 - reach - 0.2,
        rect.y0 - reach - 0.6,
        rect.x1 + reach + 0.2,
        rect.y1 + reach + 0.2,
    );
    let mut canvas = Canvas::new(x0, y0, x1, y1, 480.0);
    canvas.rect(rect.x0, rect.y0, rect.x1, rect.y1, "none", "#555555");
    for ind in individuals {
        if let Individual::Germ { x, y } = ind {
            match outline {
                GermOutline::Disc { r } => canvas.circle(*x, *y, r, "rgba(70,110,180,0.25)", "#46698c"),
                GermOutline::Square { side } => {
                    let h = side / 2.0;
                    canvas.rect(x - h, y - h, x + h, y + h, "rgba(70,110,180,0.25)", "#46698c");
                }
                GermOutline::Interaction { radius } => {
                    canvas.dashed_circle(*x, *y, radius / 2.0, "#8899aa")
                }
            }
            canvas.circle(*x, *y, (x1 - x0) / 160.0, "#1f3350", "#1f3350");
        }
    }
    legend(&mut canvas, x0 + 0.1, y0 + 0.15, spec.model_kind(), individuals.len());
    Ok(canvas.render())
}

enum GermOutline {
    Disc { r: f64 },
    Square { side: f64 },
    Interaction { radius: f64 },
}

impl GermOutline {
    fn reach(&self) -> f64 {
        match self {
            GermOutline::Disc { r } => *r,
            GermOutline::Square { side } => side / 2.0,
            GermOutline::Interaction { radius } => radius / 2.0,
        }
    }
}

fn call_plot(spec: &RunSpec, individuals: &[Individual]) -> Result<String, ModelError> {
    let iv = spec
        .window
        .interval()
        .ok_or_else(|| ModelError::BadWindow("call plots need an interval window".to_string()))?;
    let mut calls: Vec<(f64, f64)> = individuals
        .iter()
        .filter_map(|i| match i {
            Individual::Call { left, len } => Some((*left, *len)),
            _ => None,
        })
        .collect();
    calls.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut row_end: Vec<f64> = Vec::new();
    let mut placed: Vec<(f64, f64, usize)> = Vec::new();
    for (left, len) in calls {
        let row = match row_end.iter().position(|&end| end < left) {
            Some(r) => r,
            None => {
                row_end.push(f64::NEG_INFINITY);
                row_end.len() - 1
            }
        };
        row_end[row] = left + len;
        placed.push((left, len, row));
    }
    let rows = row_end.len().max(1) as f64;
    let lo = placed
        .iter()
        .map(|p| p.0)
        .fold(iv.lo, f64::min);
    let hi = placed
        .iter()
        .map(|p| p.0 + p.1)
        .fold(iv.hi, f64::max);
    let mut canvas = Canvas::new(lo - 0.3, -1.4, hi + 0.3, rows + 0.6, 480.0);
    canvas.line(iv.lo, -0.5, iv.hi, -0.5, "#555555", 3.0);
    for (left, len, row) in &placed {
        let y = *row as f64 + 0.25;
        canvas.line(*left, y, left + len, y, "#46698c", 4.0);
        canvas.line(*left, y - 0.12, *left, y + 0.12, "#1f3350", 1.5);
        canvas.line(left + len, y - 0.12, left + len, y + 0.12, "#1f3350", 1.5);
    }
    legend(&mut canvas, lo - 0.2, -1.2, spec.model_kind(), individuals.len());
    Ok(canvas.render())
}

fn contour_plot(spec: &RunSpec, individuals: &[Individual]) -> Result<String, ModelError> {
    let (beta, cutoff) = match &spec.model {
        ModelSpec::Contour { beta } => (*beta, spec.limits.size_cutoff),
        _ => unreachable!(),
    };
    let model = ContourModel::new(beta, cutoff)?;
    let (cx0, cy0, cx1, cy1) = match spec.window {
        Window::Cells { x0, y0, x1, y1 } => (x0, y0, x1, y1),
        _ => return Err(ModelError::BadWindow("contour plots need a cell window".to_string())),
    };
    let (x0, y0, x1, y1) = (
        cx0 as f64 - 1.5,
        cy0 as f64 - 2.2,
        cx1 as f64 + 1.5,
        cy1 as f64 + 1.5,
    );
    let mut canvas = Canvas::new(x0, y0, x1, y1, 480.0);
    for gx in cx0..=cx1 {
        for gy in cy0..=cy1 {
            canvas.circle(gx as f64, gy as f64, 0.04, "#bbbbbb", "#bbbbbb");
        }
    }
    canvas.rect(
        cx0 as f64 - 0.5,
        cy0 as f64 - 0.5,
        cx1 as f64 + 0.5,
        cy1 as f64 + 0.5,
        "none",
        "#cccccc",
    );
    for ind in individuals {
        for link in model.links_of(ind) {
            let [(ax, ay), (bx, by)] = link.endpoints();
            canvas.line(
                ax as f64 - 0.5,
                ay as f64 - 0.5,
                bx as f64 - 0.5,
                by as f64 - 0.5,
                "#a03030",
                2.5,
            );
        }
    }
    legend(&mut canvas, x0 + 0.2, y0 + 0.4, spec.model_kind(), individuals.len());
    Ok(canvas.render())
}

fn site_plot(spec: &RunSpec, individuals: &[Individual]) -> Result<String, ModelError> {
    let mut ids: Vec<u32> = individuals
        .iter()
        .filter_map(|i| match i {
            Individual::Site { id } => Some(*id),
            _ => None,
        })
        .collect();
    ids.sort_unstable();
    let max_id = ids.iter().max().copied().unwrap_or(0);
    let mut canvas = Canvas::new(-1.0, -1.5, max_id as f64 + 1.0, 1.0, 480.0);
    for (slot, id) in ids.iter().enumerate() {
        let mult = ids[..slot].iter().filter(|&&x| x == *id).count();
        canvas.circle(*id as f64, mult as f64 * 0.5, 0.18, "#46698c", "#1f3350");
    }
    legend(&mut canvas, -0.9, -1.2, spec.model_kind(), individuals.len());
    Ok(canvas.render())
}

fn bond_plot(spec: &RunSpec, individuals: &[Individual]) -> Result<String, ModelError> {
    let (width, height, p, q) = match &spec.model {
        ModelSpec::RandomCluster { p, q, width, height } => (*width, *height, *p, *q),
        _ => unreachable!(),
    };
    let grid = crate::models::Grid::new(width as u32, height as u32)?;
    let model = crate::models::RandomClusterModel::new(p, q, grid)?;
    let grid = model.grid();
    let w = width as usize;
    let mut canvas = Canvas::new(
        -0.8,
        -1.6,
        width as f64 - 0.2,
        height as f64 - 0.4,
        480.0,
    );
    for v in 0..grid.vertex_count() {
        let (x, y) = (v % w, v / w);
        canvas.circle(x as f64, y as f64, 0.06, "#888888", "#888888");
    }
    for ind in individuals {
        if let Individual::Animal { bonds } = ind {
            for &b in bonds {
                let (u, v) = grid.bond_ends(b);
                let (ux, uy) = (u as usize % w, u as usize / w);
                let (vx, vy) = (v as usize % w, v as usize / w);
                canvas.line(
                    ux as f64,
                    uy as f64,
                    vx as f64,
                    vy as f64,
                    "#a03030",
                    3.0,
                );
            }
        }
    }
    legend(&mut canvas, -0.7, -1.3, spec.model_kind(), individuals.len());
    Ok(canvas.render())
}

/// Render one sampled configuration according to its model kind.
pub fn render_sample(spec: &RunSpec, individuals: &[Individual]) -> Result<String, ModelError> {
    match &spec.model {
        ModelSpec::Area { grain, size, .. } => {
            let outline = match grain.as_str() {
                "square" => GermOutline::Square { side: *size },
                _ => GermOutline::Disc { r: *size },
            };
            germ_plot(spec, individuals, outline)
        }
        ModelSpec::Pairwise { radius, .. } => {
            germ_plot(spec, individuals, GermOutline::Interaction { radius: *radius })
        }
        ModelSpec::Loss { .. } => call_plot(spec, individuals),
        ModelSpec::Contour { .. } => contour_plot(spec, individuals),
        ModelSpec::RandomCluster { .. } => bond_plot(spec, individuals),
        ModelSpec::ToyHardcore { .. } | ModelSpec::ToyFree { .. } => site_plot(spec, individuals),
    }
}
