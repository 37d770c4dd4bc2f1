//! Area-interaction germs in the plane.
//!
//! Each germ carries a fixed grain (a disc of radius `r` or an axis-aligned
//! square of side `r`) and a configuration is penalized or rewarded through
//! the content of the union of its grains.  The conditional birth intensity
//! at a germ is `kappa * phi^(-uncovered)`, where `uncovered` is the content
//! of the part of the new grain not already covered by the configuration.
//! For `phi < 1` (repulsion) the supremum over configurations sits at full
//! coverage, for `phi > 1` (clumping) at an empty neighborhood, so the
//! dominating intensity and the acceptance probability split differently in
//! the two regimes while their product is always the conditional intensity.

use crate::geom::{discs_intersection_area, uncovered_area_quadrature, Footprint, Rect, RectUnion};
use crate::model::{
    Configuration, ContinuousFamily, Domination, GermBox, GermPoint, Individual, Model, ModelError,
    Window,
};
use crate::stream::RandomStream;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grain {
    /// Disc of radius `r`.
    Disc { r: f64 },
    /// Axis-aligned square of side `side`, centered at the germ.
    Square { side: f64 },
}

impl Grain {
    pub fn content(&self) -> f64 {
        match *self {
            Grain::Disc { r } => PI * r * r,
            Grain::Square { side } => side * side,
        }
    }

    /// Germs closer than this (Euclidean for discs, sup-norm for squares)
    /// have overlapping grains.
    pub fn interaction_reach(&self) -> f64 {
        match *self {
            Grain::Disc { r } => 2.0 * r,
            Grain::Square { side } => side,
        }
    }

    /// Germs within this distance of the window have grains meeting it.
    fn window_reach(&self) -> f64 {
        match *self {
            Grain::Disc { r } => r,
            Grain::Square { side } => side / 2.0,
        }
    }

    fn footprint(&self, x: f64, y: f64) -> Footprint {
        match *self {
            Grain::Disc { r } => Footprint::Disc { cx: x, cy: y, r },
            Grain::Square { side } => Footprint::Square {
                cx: x,
                cy: y,
                half: side / 2.0,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct AreaModel {
    kappa: f64,
    phi: f64,
    grain: Grain,
}

/// Relative tolerance of the quadrature fallback, in units of the grain
/// content.
const UNCOVERED_TOL: f64 = 1e-6;

impl AreaModel {
    pub fn new(kappa: f64, phi: f64, grain: Grain) -> Result<AreaModel, ModelError> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(ModelError::BadParameter(format!(
                "intensity must be positive and finite, got {kappa}"
            )));
        }
        if !(phi > 0.0) || !phi.is_finite() {
            return Err(ModelError::BadParameter(format!(
                "interaction parameter must be positive and finite, got {phi}"
            )));
        }
        let extent = match grain {
            Grain::Disc { r } => r,
            Grain::Square { side } => side,
        };
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(ModelError::BadParameter(format!(
                "grain extent must be positive and finite, got {extent}"
            )));
        }
        Ok(AreaModel { kappa, phi, grain })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn grain(&self) -> Grain {
        self.grain
    }

    pub fn footprint(&self, gamma: &Individual) -> Footprint {
        let (x, y) = self.germ(gamma).expect("foreign individual");
        self.grain.footprint(x, y)
    }

    fn germ(&self, gamma: &Individual) -> Result<(f64, f64), ModelError> {
        match gamma {
            Individual::Germ { x, y } if x.is_finite() && y.is_finite() => Ok((*x, *y)),
            _ => Err(ModelError::InvalidIndividual(gamma.clone())),
        }
    }

    fn nu_bar(&self) -> f64 {
        if self.phi < 1.0 {
            self.kappa * self.phi.powf(-self.grain.content())
        } else {
            self.kappa
        }
    }

    /// Content of the part of `gamma`'s grain not covered by the grains of
    /// `xi`.  Exact for squares and for up to two overlapping disc
    /// neighbors; otherwise quadrature to `UNCOVERED_TOL` of the grain
    /// content.
    pub fn uncovered_content(&self, gamma: &Individual, xi: &Configuration) -> f64 {
        let (x, y) = self.germ(gamma).expect("foreign individual");
        let reach = self.grain.interaction_reach();
        let neighbors: Vec<(f64, f64)> = xi
            .iter()
            .map(|t| self.germ(t).expect("foreign individual"))
            .filter(|&(tx, ty)| match self.grain {
                Grain::Disc { .. } => {
                    let (dx, dy) = (tx - x, ty - y);
                    dx * dx + dy * dy < reach * reach
                }
                Grain::Square { .. } => (tx - x).abs() < reach && (ty - y).abs() < reach,
            })
            .collect();
        let m = self.grain.content();
        match self.grain {
            Grain::Square { side } => {
                let half = side / 2.0;
                let own = Rect::new(x - half, y - half, x + half, y + half);
                let overlaps: Vec<Rect> = neighbors
                    .iter()
                    .map(|&(tx, ty)| {
                        own.intersect(&Rect::new(tx - half, ty - half, tx + half, ty + half))
                    })
                    .collect();
                m - RectUnion::new(&overlaps).area()
            }
            Grain::Disc { r } => match neighbors.len() {
                0 => m,
                1 => {
                    let (tx, ty) = neighbors[0];
                    m - discs_intersection_area(&[(x, y), (tx, ty)], r)
                }
                2 => {
                    let (ax, ay) = neighbors[0];
                    let (bx, by) = neighbors[1];
                    let la = discs_intersection_area(&[(x, y), (ax, ay)], r);
                    let lb = discs_intersection_area(&[(x, y), (bx, by)], r);
                    let triple = discs_intersection_area(&[(x, y), (ax, ay), (bx, by)], r);
                    (m - la - lb + triple).max(0.0)
                }
                _ => {
                    let covers: Vec<Footprint> = neighbors
                        .iter()
                        .map(|&(tx, ty)| self.grain.footprint(tx, ty))
                        .collect();
                    uncovered_area_quadrature(
                        &self.grain.footprint(x, y),
                        &covers,
                        UNCOVERED_TOL * m,
                    )
                }
            },
        }
    }
}

impl ContinuousFamily for AreaModel {
    fn germ_rate(&self) -> f64 {
        self.nu_bar()
    }

    fn enlargement(&self, gamma: &Individual) -> GermBox {
        let (x, y) = self.germ(gamma).expect("foreign individual");
        let e = self.grain.interaction_reach();
        GermBox::Plane(Rect::new(x - e, y - e, x + e, y + e))
    }

    fn window_box(&self, window: &Window) -> Result<GermBox, ModelError> {
        self.check_window(window)?;
        let rect = window.rect().unwrap();
        Ok(GermBox::Plane(rect.dilate(self.grain.window_reach())))
    }

    fn window_mass(&self, window: &Window) -> Result<f64, ModelError> {
        self.check_window(window)?;
        let rect = window.rect().unwrap();
        let (w, h) = (rect.x1 - rect.x0, rect.y1 - rect.y0);
        let area = match self.grain {
            Grain::Disc { r } => (w + 2.0 * r) * (h + 2.0 * r) - (4.0 - PI) * r * r,
            Grain::Square { side } => (w + side) * (h + side),
        };
        Ok(self.nu_bar() * area)
    }

    fn propose(&self, at: GermPoint, _stream: &mut RandomStream) -> Individual {
        match at {
            GermPoint::Plane(x, y) => Individual::Germ { x, y },
            GermPoint::Line(_) => panic!("planar model proposed a line germ"),
        }
    }
}

impl Model for AreaModel {
    fn name(&self) -> String {
        "area".to_string()
    }

    fn validate(&self, gamma: &Individual) -> Result<(), ModelError> {
        self.germ(gamma).map(|_| ())
    }

    fn incompatible(&self, target: &Individual, other: &Individual) -> Result<bool, ModelError> {
        let (ax, ay) = self.germ(target)?;
        let (bx, by) = self.germ(other)?;
        let reach = self.grain.interaction_reach();
        Ok(match self.grain {
            Grain::Disc { .. } => {
                let (dx, dy) = (bx - ax, by - ay);
                dx * dx + dy * dy < reach * reach
            }
            Grain::Square { .. } => (bx - ax).abs() < reach && (by - ay).abs() < reach,
        })
    }

    fn acceptance(&self, gamma: &Individual, xi: &Configuration) -> f64 {
        if self.phi == 1.0 {
            return 1.0;
        }
        let uncovered = self.uncovered_content(gamma, xi);
        let m = self.grain.content();
        if self.phi < 1.0 {
            self.phi.powf((m - uncovered).max(0.0))
        } else {
            self.phi.powf(-uncovered)
        }
    }

    fn size(&self, _gamma: &Individual) -> f64 {
        self.grain.content()
    }

    fn meets_window(&self, gamma: &Individual, window: &Window) -> bool {
        let (x, y) = self.germ(gamma).expect("foreign individual");
        let rect = match window.rect() {
            Some(r) => r,
            None => return false,
        };
        match self.grain {
            Grain::Disc { r } => {
                let dx = (rect.x0 - x).max(0.0).max(x - rect.x1);
                let dy = (rect.y0 - y).max(0.0).max(y - rect.y1);
                dx * dx + dy * dy <= r * r
            }
            Grain::Square { side } => rect.dilate(side / 2.0).contains(x, y),
        }
    }

    fn dominating_mass(&self, window: &Window) -> Result<f64, ModelError> {
        self.window_mass(window)
    }

    fn domination(&self) -> Domination<'_> {
        Domination::Continuous(self)
    }

    fn analytic_bounds(&self) -> Vec<(String, f64)> {
        let reach = self.grain.interaction_reach();
        let region = match self.grain {
            Grain::Disc { .. } => PI * reach * reach,
            Grain::Square { .. } => 4.0 * reach * reach,
        };
        vec![("alpha".to_string(), self.nu_bar() * region)]
    }

    fn check_window(&self, window: &Window) -> Result<(), ModelError> {
        match window {
            Window::Box2 { x0, y0, x1, y1 } if x1 > x0 && y1 > y0 => Ok(()),
            Window::Box2 { .. } => Err(ModelError::BadWindow(window.describe())),
            other => Err(ModelError::WindowMismatch(other.describe())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn germ(x: f64, y: f64) -> Individual {
        Individual::Germ { x, y }
    }

    fn cfg(points: &[(f64, f64)]) -> Configuration {
        points.iter().map(|&(x, y)| germ(x, y)).collect()
    }

    #[test]
    fn conditional_intensity_is_rate_times_acceptance() {
        let xi = cfg(&[(1.0, 0.0), (-0.5, 0.8)]);
        let g = germ(0.0, 0.0);
        for phi in [0.3, 0.9, 1.0, 1.4, 3.0] {
            let m = AreaModel::new(0.7, phi, Grain::Disc { r: 1.0 }).unwrap();
            let uncovered = m.uncovered_content(&g, &xi);
            let lambda = m.germ_rate() * m.acceptance(&g, &xi);
            assert!(
                (lambda - 0.7 * phi.powf(-uncovered)).abs() < 1e-12,
                "phi {phi}"
            );
        }
    }

    #[test]
    fn isolated_germ_acceptance() {
        let rep = AreaModel::new(1.0, 0.5, Grain::Disc { r: 1.0 }).unwrap();
        let att = AreaModel::new(1.0, 2.0, Grain::Disc { r: 1.0 }).unwrap();
        let g = germ(0.0, 0.0);
        let empty = Configuration::empty();
        assert!((rep.acceptance(&g, &empty) - 1.0).abs() < 1e-15);
        assert!((att.acceptance(&g, &empty) - 2.0f64.powf(-PI)).abs() < 1e-15);
    }

    #[test]
    fn single_neighbor_uncovered_is_disc_minus_lens() {
        let m = AreaModel::new(1.0, 0.5, Grain::Disc { r: 1.0 }).unwrap();
        let u = m.uncovered_content(&germ(0.0, 0.0), &cfg(&[(1.0, 0.0)]));
        let lens = 2.0 * (0.5f64).acos() - 0.5 * (3.0f64).sqrt();
        assert!((u - (PI - lens)).abs() < 1e-12);
        assert!((u - 1.913222954981036).abs() < 1e-12);
    }

    #[test]
    fn coverage_shrinks_uncovered_content() {
        let m = AreaModel::new(1.0, 0.5, Grain::Disc { r: 1.0 }).unwrap();
        let g = germ(0.0, 0.0);
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut last = m.uncovered_content(&g, &cfg(&points));
        for &p in &[(1.2, 0.3), (-0.8, 0.5), (0.1, -1.4), (0.4, 0.9)] {
            points.push(p);
            let u = m.uncovered_content(&g, &cfg(&points));
            assert!(u <= last + 1e-9);
            assert!(u >= 0.0);
            last = u;
        }
    }

    #[test]
    fn quadrature_path_matches_inclusion_exclusion() {
        let m = AreaModel::new(1.0, 0.5, Grain::Disc { r: 1.0 }).unwrap();
        let a = (0.0, 0.0);
        let others = [(1.0, 0.1), (-0.4, 0.9), (0.3, -1.1)];
        let xi = cfg(&others);
        let u = m.uncovered_content(&germ(a.0, a.1), &xi);
        let pair: f64 = others
            .iter()
            .map(|&b| discs_intersection_area(&[a, b], 1.0))
            .sum();
        let mut triple = 0.0;
        for i in 0..3 {
            for j in (i + 1)..3 {
                triple += discs_intersection_area(&[a, others[i], others[j]], 1.0);
            }
        }
        let quad = discs_intersection_area(&[a, others[0], others[1], others[2]], 1.0);
        let exact = PI - pair + triple - quad;
        assert!((u - exact).abs() < 3.0 * UNCOVERED_TOL * PI, "{u} vs {exact}");
    }

    #[test]
    fn square_grains_are_exact() {
        let m = AreaModel::new(1.0, 0.5, Grain::Square { side: 2.0 }).unwrap();
        let g = germ(0.0, 0.0);
        let u = m.uncovered_content(&g, &cfg(&[(1.5, 0.0)]));
        assert!((u - 3.0).abs() < 1e-12);
        let u2 = m.uncovered_content(&g, &cfg(&[(1.5, 0.0), (1.5, 0.0), (-1.0, 1.0)]));
        assert!((u2 - (4.0 - 1.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn window_mass_uses_dilated_content() {
        let w = Window::Box2 {
            x0: 0.0,
            y0: 0.0,
            x1: 2.0,
            y1: 3.0,
        };
        let att = AreaModel::new(0.05, 1.5, Grain::Disc { r: 1.0 }).unwrap();
        assert!((att.window_mass(&w).unwrap() - 0.9570796326794897).abs() < 1e-12);
        let sq = AreaModel::new(0.05, 1.5, Grain::Square { side: 1.0 }).unwrap();
        assert!((sq.window_mass(&w).unwrap() - 0.05 * 3.0 * 4.0).abs() < 1e-12);
        // Repulsion inflates the dominating rate.
        let rep = AreaModel::new(0.05, 0.5, Grain::Square { side: 1.0 }).unwrap();
        assert!((rep.window_mass(&w).unwrap() - 0.05 * 2.0 * 12.0).abs() < 1e-12);
    }

    #[test]
    fn incompatibility_is_grain_overlap() {
        let m = AreaModel::new(1.0, 0.5, Grain::Disc { r: 1.0 }).unwrap();
        let g = germ(0.0, 0.0);
        assert!(m.incompatible(&g, &germ(1.99, 0.0)).unwrap());
        assert!(!m.incompatible(&g, &germ(2.0, 0.0)).unwrap());
        let s = AreaModel::new(1.0, 0.5, Grain::Square { side: 1.0 }).unwrap();
        assert!(s.incompatible(&g, &germ(0.9, -0.9)).unwrap());
        assert!(!s.incompatible(&g, &germ(1.0, 0.0)).unwrap());
    }

    #[test]
    fn window_membership_counts_the_grain() {
        let m = AreaModel::new(1.0, 0.5, Grain::Disc { r: 1.0 }).unwrap();
        let w = Window::Box2 {
            x0: 0.0,
            y0: 0.0,
            x1: 2.0,
            y1: 2.0,
        };
        assert!(m.meets_window(&germ(3.0, 1.0), &w));
        assert!(!m.meets_window(&germ(3.01, 1.0), &w));
        assert!(m.meets_window(&germ(2.7, 2.7), &w));
        assert!(!m.meets_window(&germ(2.8, 2.8), &w));
    }

    #[test]
    fn analytic_alpha_is_rate_times_reach_region() {
        let m = AreaModel::new(0.05, 1.2, Grain::Disc { r: 1.0 }).unwrap();
        let bounds = m.analytic_bounds();
        assert_eq!(bounds.len(), 1);
        assert_eq!(bounds[0].0, "alpha");
        assert!((bounds[0].1 - 0.6283185307179586).abs() < 1e-15);
    }

    #[test]
    fn acceptance_stays_in_unit_interval() {
        let mut stream = crate::stream::RandomStream::from_seed(41);
        for phi in [0.2, 0.7, 1.3, 4.0] {
            let m = AreaModel::new(1.0, phi, Grain::Disc { r: 0.8 }).unwrap();
            for _ in 0..50 {
                let n = (stream.next_uniform() * 6.0) as usize;
                let pts: Vec<(f64, f64)> = (0..n)
                    .map(|_| {
                        (
                            stream.next_uniform() * 4.0 - 2.0,
                            stream.next_uniform() * 4.0 - 2.0,
                        )
                    })
                    .collect();
                let a = m.acceptance(&germ(0.0, 0.0), &cfg(&pts));
                assert!((0.0..=1.0).contains(&a), "phi {phi}: {a}");
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(AreaModel::new(0.0, 0.5, Grain::Disc { r: 1.0 }).is_err());
        assert!(AreaModel::new(1.0, 0.0, Grain::Disc { r: 1.0 }).is_err());
        assert!(AreaModel::new(1.0, 0.5, Grain::Disc { r: 0.0 }).is_err());
        assert!(AreaModel::new(1.0, 0.5, Grain::Square { side: -1.0 }).is_err());
    }
}
