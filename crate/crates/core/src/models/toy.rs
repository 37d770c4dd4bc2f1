//! Finite weight tables with explicit incompatibility, the workbench for
//! everything else.  Two flavors: exclusion tables whose acceptance kills a
//! candidate next to any incompatible present individual, and free tables
//! whose acceptance is identically one.  Free tables may still carry a
//! nontrivial incompatibility relation; the backward construction uses the
//! relation, the forward cleaning only uses acceptance, and analyses of the
//! ancestry alone need exactly that split.

use crate::model::{
    Configuration, DiscreteFamily, Domination, Individual, Model, ModelError, Window,
};

#[derive(Debug, Clone)]
pub struct ToyModel {
    labels: Vec<String>,
    weights: Vec<f64>,
    incompat: Vec<Vec<bool>>,
    free: bool,
}

impl ToyModel {
    /// Exclusion model: the listed pairs are incompatible both ways, and
    /// every individual is incompatible with itself, so no configuration
    /// ever holds two copies or an incompatible pair.
    pub fn hardcore(
        table: &[(&str, f64)],
        pairs: &[(&str, &str)],
    ) -> Result<ToyModel, ModelError> {
        let mut m = ToyModel::from_table(table, false)?;
        let n = m.labels.len();
        for i in 0..n {
            m.incompat[i][i] = true;
        }
        m.add_pairs(pairs)?;
        Ok(m)
    }

    /// Free model: acceptance is one, nothing is incompatible.
    pub fn poisson(table: &[(&str, f64)]) -> Result<ToyModel, ModelError> {
        ToyModel::from_table(table, true)
    }

    /// Free model with a declared incompatibility relation (pairs, plus
    /// self-pairs when `self_pairs` holds).  Acceptance stays one.
    pub fn poisson_with_pairs(
        table: &[(&str, f64)],
        pairs: &[(&str, &str)],
        self_pairs: bool,
    ) -> Result<ToyModel, ModelError> {
        let mut m = ToyModel::from_table(table, true)?;
        if self_pairs {
            for i in 0..m.labels.len() {
                m.incompat[i][i] = true;
            }
        }
        m.add_pairs(pairs)?;
        Ok(m)
    }

    fn from_table(table: &[(&str, f64)], free: bool) -> Result<ToyModel, ModelError> {
        if table.is_empty() {
            return Err(ModelError::BadParameter("empty weight table".into()));
        }
        let mut labels = Vec::new();
        let mut weights = Vec::new();
        for (name, w) in table {
            if !(w > &0.0) || !w.is_finite() {
                return Err(ModelError::BadParameter(format!(
                    "weight of {name} must be positive and finite, got {w}"
                )));
            }
            if labels.contains(&name.to_string()) {
                return Err(ModelError::BadParameter(format!("duplicate label {name}")));
            }
            labels.push(name.to_string());
            weights.push(*w);
        }
        let n = labels.len();
        Ok(ToyModel {
            labels,
            weights,
            incompat: vec![vec![false; n]; n],
            free,
        })
    }

    fn add_pairs(&mut self, pairs: &[(&str, &str)]) -> Result<(), ModelError> {
        for (a, b) in pairs {
            let i = self.index_of(a)?;
            let j = self.index_of(b)?;
            self.incompat[i][j] = true;
            self.incompat[j][i] = true;
        }
        Ok(())
    }

    fn index_of(&self, label: &str) -> Result<usize, ModelError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| ModelError::BadParameter(format!("unknown label {label}")))
    }

    pub fn site(&self, label: &str) -> Individual {
        Individual::Site {
            id: self.index_of(label).expect("unknown label") as u32,
        }
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_free(&self) -> bool {
        self.free
    }

    fn id_of(&self, gamma: &Individual) -> Result<usize, ModelError> {
        match gamma {
            Individual::Site { id } if (*id as usize) < self.labels.len() => Ok(*id as usize),
            _ => Err(ModelError::InvalidIndividual(gamma.clone())),
        }
    }
}

impl DiscreteFamily for ToyModel {
    fn weight(&self, gamma: &Individual) -> f64 {
        self.weights[self.id_of(gamma).expect("foreign individual")]
    }

    fn window_members(&self, window: &Window) -> Result<Vec<Individual>, ModelError> {
        let ids: Vec<u32> = match window {
            Window::All => (0..self.labels.len() as u32).collect(),
            Window::Sites { ids } => {
                for id in ids {
                    if *id as usize >= self.labels.len() {
                        return Err(ModelError::BadWindow(format!("site {id} out of range")));
                    }
                }
                let mut ids = ids.clone();
                ids.sort_unstable();
                ids.dedup();
                ids
            }
            other => {
                return Err(ModelError::WindowMismatch(other.describe()));
            }
        };
        Ok(ids.into_iter().map(|id| Individual::Site { id }).collect())
    }

    fn incompatible_members(&self, gamma: &Individual) -> Vec<Individual> {
        let i = self.id_of(gamma).expect("foreign individual");
        (0..self.labels.len())
            .filter(|j| self.incompat[i][*j])
            .map(|j| Individual::Site { id: j as u32 })
            .collect()
    }

    fn representatives(&self) -> Vec<Individual> {
        (0..self.labels.len() as u32)
            .map(|id| Individual::Site { id })
            .collect()
    }
}

impl Model for ToyModel {
    fn name(&self) -> String {
        if self.free {
            "toy-free".to_string()
        } else {
            "toy-hardcore".to_string()
        }
    }

    fn validate(&self, gamma: &Individual) -> Result<(), ModelError> {
        self.id_of(gamma).map(|_| ())
    }

    fn incompatible(&self, target: &Individual, other: &Individual) -> Result<bool, ModelError> {
        Ok(self.incompat[self.id_of(target)?][self.id_of(other)?])
    }

    fn acceptance(&self, gamma: &Individual, xi: &Configuration) -> f64 {
        if self.free {
            return 1.0;
        }
        let i = self.id_of(gamma).expect("foreign individual");
        for theta in xi.iter() {
            let j = self.id_of(theta).expect("foreign individual");
            if self.incompat[i][j] {
                return 0.0;
            }
        }
        1.0
    }

    fn size(&self, _gamma: &Individual) -> f64 {
        1.0
    }

    fn meets_window(&self, gamma: &Individual, window: &Window) -> bool {
        let id = self.id_of(gamma).expect("foreign individual") as u32;
        match window {
            Window::All => true,
            Window::Sites { ids } => ids.contains(&id),
            _ => false,
        }
    }

    fn dominating_mass(&self, window: &Window) -> Result<f64, ModelError> {
        Ok(self
            .window_members(window)?
            .iter()
            .map(|g| self.weight(g))
            .sum())
    }

    fn domination(&self) -> Domination<'_> {
        Domination::Discrete(self)
    }

    fn check_window(&self, window: &Window) -> Result<(), ModelError> {
        match window {
            Window::All => Ok(()),
            Window::Sites { ids } if !ids.is_empty() => {
                self.window_members(window).map(|_| ())
            }
            Window::Sites { .. } => Err(ModelError::BadWindow("empty site list".into())),
            other => Err(ModelError::WindowMismatch(other.describe())),
        }
    }
}
