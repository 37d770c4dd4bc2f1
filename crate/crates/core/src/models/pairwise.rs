//! Pairwise-interaction points in the plane with a step potential.
//!
//! The conditional intensity at a point is `rate * exp(beta2 * n)` where `n`
//! counts configuration points closer than the interaction radius.  The pair
//! term must inhibit (`beta2 <= 0`), so the bare rate dominates and the
//! acceptance probability is the pair factor itself.  `beta2 = -inf` is the
//! hard-core gas.

use crate::geom::Rect;
use crate::model::{
    Configuration, ContinuousFamily, Domination, GermBox, GermPoint, Individual, Model, ModelError,
    Window,
};
use crate::stream::RandomStream;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct PairwiseModel {
    rate: f64,
    beta2: f64,
    radius: f64,
}

impl PairwiseModel {
    pub fn new(rate: f64, beta2: f64, radius: f64) -> Result<PairwiseModel, ModelError> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(ModelError::BadParameter(format!(
                "rate must be positive and finite, got {rate}"
            )));
        }
        if !(beta2 <= 0.0) {
            return Err(ModelError::BadParameter(format!(
                "pair exponent beta2 must be nonpositive, got {beta2}"
            )));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(ModelError::BadParameter(format!(
                "interaction radius must be positive and finite, got {radius}"
            )));
        }
        Ok(PairwiseModel { rate, beta2, radius })
    }

    pub fn hardcore(rate: f64, radius: f64) -> Result<PairwiseModel, ModelError> {
        PairwiseModel::new(rate, f64::NEG_INFINITY, radius)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn germ(&self, gamma: &Individual) -> Result<(f64, f64), ModelError> {
        match gamma {
            Individual::Germ { x, y } if x.is_finite() && y.is_finite() => Ok((*x, *y)),
            _ => Err(ModelError::InvalidIndividual(gamma.clone())),
        }
    }

    /// Configuration points strictly within the interaction radius.
    pub fn neighbor_count(&self, gamma: &Individual, xi: &Configuration) -> usize {
        let (x, y) = self.germ(gamma).expect("foreign individual");
        xi.iter()
            .filter(|t| {
                let (tx, ty) = self.germ(t).expect("foreign individual");
                let (dx, dy) = (tx - x, ty - y);
                dx * dx + dy * dy < self.radius * self.radius
            })
            .count()
    }
}

impl ContinuousFamily for PairwiseModel {
    fn germ_rate(&self) -> f64 {
        self.rate
    }

    fn enlargement(&self, gamma: &Individual) -> GermBox {
        let (x, y) = self.germ(gamma).expect("foreign individual");
        let r = self.radius;
        GermBox::Plane(Rect::new(x - r, y - r, x + r, y + r))
    }

    fn window_box(&self, window: &Window) -> Result<GermBox, ModelError> {
        self.check_window(window)?;
        Ok(GermBox::Plane(window.rect().unwrap()))
    }

    fn window_mass(&self, window: &Window) -> Result<f64, ModelError> {
        self.check_window(window)?;
        Ok(self.rate * window.rect().unwrap().area())
    }

    fn propose(&self, at: GermPoint, _stream: &mut RandomStream) -> Individual {
        match at {
            GermPoint::Plane(x, y) => Individual::Germ { x, y },
            GermPoint::Line(_) => panic!("planar model proposed a line germ"),
        }
    }
}

impl Model for PairwiseModel {
    fn name(&self) -> String {
        "pairwise".to_string()
    }

    fn validate(&self, gamma: &Individual) -> Result<(), ModelError> {
        self.germ(gamma).map(|_| ())
    }

    fn incompatible(&self, target: &Individual, other: &Individual) -> Result<bool, ModelError> {
        let (ax, ay) = self.germ(target)?;
        let (bx, by) = self.germ(other)?;
        let (dx, dy) = (bx - ax, by - ay);
        Ok(dx * dx + dy * dy < self.radius * self.radius)
    }

    fn acceptance(&self, gamma: &Individual, xi: &Configuration) -> f64 {
        let n = self.neighbor_count(gamma, xi);
        if n == 0 {
            1.0
        } else {
            (self.beta2 * n as f64).exp()
        }
    }

    fn size(&self, _gamma: &Individual) -> f64 {
        1.0
    }

    fn meets_window(&self, gamma: &Individual, window: &Window) -> bool {
        let (x, y) = self.germ(gamma).expect("foreign individual");
        window.rect().map(|r| r.contains(x, y)).unwrap_or(false)
    }

    fn dominating_mass(&self, window: &Window) -> Result<f64, ModelError> {
        self.window_mass(window)
    }

    fn domination(&self) -> Domination<'_> {
        Domination::Continuous(self)
    }

    fn analytic_bounds(&self) -> Vec<(String, f64)> {
        vec![(
            "alpha".to_string(),
            self.rate * PI * self.radius * self.radius,
        )]
    }

    fn check_window(&self, window: &Window) -> Result<(), ModelError> {
        match window {
            Window::Box2 { x0, y0, x1, y1 } if x1 > x0 && y1 > y0 => Ok(()),
            Window::Box2 { .. } => Err(ModelError::BadWindow(window.describe())),
            other => Err(ModelError::WindowMismatch(other.describe())),
        }
    }
}
