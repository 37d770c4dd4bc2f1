//! Loss network on the line.
//!
//! Individuals are calls: closed intervals `[left, left + len]` holding one
//! circuit each.  A new call is admitted exactly when, together with the
//! calls already present, no point of its interval carries more than
//! `capacity` circuits.  Call lengths are drawn from a bounded law so that
//! interaction has finite reach; germs are left endpoints with constant
//! intensity `rate` per unit length.

use crate::geom::Interval;
use crate::model::{
    Configuration, ContinuousFamily, Domination, GermBox, GermPoint, Individual, Model, ModelError,
    Window,
};
use crate::stream::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthLaw {
    /// Every call has the same length.
    Fixed { len: f64 },
    /// Uniform on `(0, max]`.
    Uniform { max: f64 },
    /// Exponential of mean `mu` conditioned on not exceeding `cut`.
    TruncExp { mu: f64, cut: f64 },
}

impl LengthLaw {
    pub fn max_len(&self) -> f64 {
        match *self {
            LengthLaw::Fixed { len } => len,
            LengthLaw::Uniform { max } => max,
            LengthLaw::TruncExp { cut, .. } => cut,
        }
    }

    /// First moment.
    pub fn rho1(&self) -> f64 {
        match *self {
            LengthLaw::Fixed { len } => len,
            LengthLaw::Uniform { max } => max / 2.0,
            LengthLaw::TruncExp { mu, cut } => {
                let c = (-cut / mu).exp();
                mu - cut * c / (1.0 - c)
            }
        }
    }

    /// Second moment.
    pub fn rho2(&self) -> f64 {
        match *self {
            LengthLaw::Fixed { len } => len * len,
            LengthLaw::Uniform { max } => max * max / 3.0,
            LengthLaw::TruncExp { mu, cut } => {
                let c = (-cut / mu).exp();
                2.0 * mu * mu - c * (cut * cut + 2.0 * mu * cut) / (1.0 - c)
            }
        }
    }

    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        match *self {
            LengthLaw::Fixed { len } => len,
            LengthLaw::Uniform { max } => {
                let u = stream.next_uniform();
                // Open at zero so calls never degenerate.
                max * (1.0 - u)
            }
            LengthLaw::TruncExp { mu, cut } => {
                let c = (-cut / mu).exp();
                let u = stream.next_uniform();
                -mu * (1.0 - u * (1.0 - c)).ln()
            }
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let ok = match *self {
            LengthLaw::Fixed { len } => len > 0.0 && len.is_finite(),
            LengthLaw::Uniform { max } => max > 0.0 && max.is_finite(),
            LengthLaw::TruncExp { mu, cut } => {
                mu > 0.0 && mu.is_finite() && cut > 0.0 && cut.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::BadParameter(format!(
                "length law has nonpositive or infinite parameters: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone)]
pub struct LossModel {
    rate: f64,
    capacity: u32,
    law: LengthLaw,
}

impl LossModel {
    pub fn new(rate: f64, capacity: u32, law: LengthLaw) -> Result<LossModel, ModelError> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(ModelError::BadParameter(format!(
                "rate must be positive and finite, got {rate}"
            )));
        }
        if capacity == 0 {
            return Err(ModelError::BadParameter(
                "capacity must be at least one circuit".to_string(),
            ));
        }
        law.validate()?;
        Ok(LossModel { rate, capacity, law })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn law(&self) -> LengthLaw {
        self.law
    }

    fn call(&self, gamma: &Individual) -> Result<(f64, f64), ModelError> {
        match gamma {
            Individual::Call { left, len }
                if left.is_finite() && len.is_finite() && *len > 0.0 =>
            {
                Ok((*left, *len))
            }
            _ => Err(ModelError::InvalidIndividual(gamma.clone())),
        }
    }

    pub fn span(&self, gamma: &Individual) -> Interval {
        let (left, len) = self.call(gamma).expect("foreign individual");
        Interval::new(left, left + len)
    }

    /// Number of calls of `xi` whose closed interval covers `t`.
    pub fn covering_count(&self, xi: &Configuration, t: f64) -> usize {
        xi.iter()
            .filter(|g| {
                let (left, len) = self.call(g).expect("foreign individual");
                left <= t && t <= left + len
            })
            .count()
    }

    /// Peak number of overlapping calls of `xi` on the closed interval.
    pub fn peak_occupancy(&self, xi: &Configuration, over: Interval) -> usize {
        let mut events: Vec<(f64, i32)> = Vec::new();
        for g in xi.iter() {
            let (left, len) = self.call(g).expect("foreign individual");
            let lo = left.max(over.lo);
            let hi = (left + len).min(over.hi);
            if lo <= hi {
                events.push((lo, 1));
                events.push((hi, -1));
            }
        }
        // Closed intervals: starts before ends at equal positions.
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut peak = 0i32;
        let mut level = 0i32;
        for (_, step) in events {
            level += step;
            peak = peak.max(level);
        }
        peak as usize
    }
}

impl ContinuousFamily for LossModel {
    fn germ_rate(&self) -> f64 {
        self.rate
    }

    fn enlargement(&self, gamma: &Individual) -> GermBox {
        let (left, len) = self.call(gamma).expect("foreign individual");
        GermBox::Line(Interval::new(left - self.law.max_len(), left + len))
    }

    fn window_box(&self, window: &Window) -> Result<GermBox, ModelError> {
        self.check_window(window)?;
        let iv = window.interval().unwrap();
        Ok(GermBox::Line(Interval::new(
            iv.lo - self.law.max_len(),
            iv.hi,
        )))
    }

    fn window_mass(&self, window: &Window) -> Result<f64, ModelError> {
        self.check_window(window)?;
        let iv = window.interval().unwrap();
        Ok(self.rate * (iv.len() + self.law.rho1()))
    }

    fn propose(&self, at: GermPoint, stream: &mut RandomStream) -> Individual {
        match at {
            GermPoint::Line(x) => Individual::Call {
                left: x,
                len: self.law.sample(stream),
            },
            GermPoint::Plane(..) => panic!("line model proposed a planar germ"),
        }
    }
}

impl Model for LossModel {
    fn name(&self) -> String {
        "loss".to_string()
    }

    fn validate(&self, gamma: &Individual) -> Result<(), ModelError> {
        let (_, len) = self.call(gamma)?;
        if len <= self.law.max_len() + 1e-12 {
            Ok(())
        } else {
            Err(ModelError::InvalidIndividual(gamma.clone()))
        }
    }

    fn incompatible(&self, target: &Individual, other: &Individual) -> Result<bool, ModelError> {
        let (al, an) = self.call(target)?;
        let (bl, bn) = self.call(other)?;
        Ok(al <= bl + bn && bl <= al + an)
    }

    fn acceptance(&self, gamma: &Individual, xi: &Configuration) -> f64 {
        let span = self.span(gamma);
        if self.peak_occupancy(xi, span) + 1 <= self.capacity as usize {
            1.0
        } else {
            0.0
        }
    }

    fn size(&self, gamma: &Individual) -> f64 {
        let (_, len) = self.call(gamma).expect("foreign individual");
        len.max(1.0)
    }

    fn meets_window(&self, gamma: &Individual, window: &Window) -> bool {
        let iv = match window.interval() {
            Some(iv) => iv,
            None => return false,
        };
        let (left, len) = self.call(gamma).expect("foreign individual");
        left <= iv.hi && left + len >= iv.lo
    }

    fn dominating_mass(&self, window: &Window) -> Result<f64, ModelError> {
        self.window_mass(window)
    }

    fn domination(&self) -> Domination<'_> {
        Domination::Continuous(self)
    }

    fn analytic_bounds(&self) -> Vec<(String, f64)> {
        let (r1, r2) = (self.law.rho1(), self.law.rho2());
        vec![
            ("alpha_size_linear".to_string(), self.rate * (r2 + r1 + 1.0)),
            ("alpha_size_sqrt".to_string(), self.rate * (r2.sqrt() + r1)),
        ]
    }

    fn check_window(&self, window: &Window) -> Result<(), ModelError> {
        match window {
            Window::Interval { lo, hi } if hi > lo && lo.is_finite() && hi.is_finite() => Ok(()),
            Window::Interval { .. } => Err(ModelError::BadWindow(window.describe())),
            other => Err(ModelError::WindowMismatch(other.describe())),
        }
    }
}
