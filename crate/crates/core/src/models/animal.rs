//! Random-cluster bond animals on a small rectangular vertex grid.
//!
//! A bond configuration on the grid decomposes into connected components of
//! open bonds; each component, viewed as a set of bonds, is an animal.  The
//! animals carry weight `(p/(1-p))^bonds * (1/q)^(vertices-1)` and two
//! animals are incompatible when they share a vertex, so compatible families
//! of animals are exactly the bond configurations.  The grid is kept tiny on
//! purpose: the catalog is the full list of connected bond subsets.

use crate::model::{
    Configuration, DiscreteFamily, Domination, Individual, Model, ModelError, Window,
};
use std::collections::HashSet;

/// Largest grid side; the catalog is enumerated by bond masks.
pub const MAX_SIDE: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub width: u32,
    pub height: u32,
}

impl Grid {
    pub fn new(width: u32, height: u32) -> Result<Grid, ModelError> {
        if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
            return Err(ModelError::BadParameter(format!(
                "grid sides must be in 1..={MAX_SIDE}, got {width}x{height}"
            )));
        }
        let g = Grid { width, height };
        if g.bond_count() == 0 {
            return Err(ModelError::BadParameter(
                "grid has no bonds".to_string(),
            ));
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        (self.width * self.height) as usize
    }

    /// Horizontal bonds row-major, then vertical bonds row-major.
    pub fn bond_count(&self) -> usize {
        ((self.width - 1) * self.height + self.width * (self.height - 1)) as usize
    }

    pub fn bond_ends(&self, bond: u16) -> (u16, u16) {
        let b = bond as u32;
        let n_h = (self.width - 1) * self.height;
        if b < n_h {
            let y = b / (self.width - 1);
            let x = b % (self.width - 1);
            let v = x + y * self.width;
            (v as u16, (v + 1) as u16)
        } else {
            let b = b - n_h;
            let y = b / self.width;
            let x = b % self.width;
            let v = x + y * self.width;
            (v as u16, (v + self.width) as u16)
        }
    }

    pub fn vertices_of(&self, bonds: &[u16]) -> Vec<u16> {
        let mut vs: Vec<u16> = bonds
            .iter()
            .flat_map(|&b| {
                let (u, v) = self.bond_ends(b);
                [u, v]
            })
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    pub fn is_connected(&self, bonds: &[u16]) -> bool {
        if bonds.is_empty() {
            return false;
        }
        let mut seen = vec![false; bonds.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            let (a, b) = self.bond_ends(bonds[i]);
            for (j, s) in seen.iter_mut().enumerate() {
                if !*s {
                    let (c, d) = self.bond_ends(bonds[j]);
                    if a == c || a == d || b == c || b == d {
                        *s = true;
                        stack.push(j);
                    }
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Split a bond set into its connected components, as a family of
    /// animals.
    pub fn components(&self, bonds: &[u16]) -> Configuration {
        let mut remaining: Vec<u16> = bonds.to_vec();
        remaining.sort_unstable();
        remaining.dedup();
        let mut family = Vec::new();
        while let Some(&seed) = remaining.first() {
            let mut comp = vec![seed];
            remaining.retain(|&b| b != seed);
            let mut grew = true;
            while grew {
                grew = false;
                let comp_vs: HashSet<u16> = self.vertices_of(&comp).into_iter().collect();
                let (attach, rest): (Vec<u16>, Vec<u16>) = remaining.iter().partition(|&&b| {
                    let (u, v) = self.bond_ends(b);
                    comp_vs.contains(&u) || comp_vs.contains(&v)
                });
                if !attach.is_empty() {
                    comp.extend(attach);
                    remaining = rest;
                    grew = true;
                }
            }
            comp.sort_unstable();
            family.push(Individual::Animal { bonds: comp });
        }
        Configuration::from_items(family)
    }
}

/// Union of the bonds of a family of animals.  The family need not be
/// compatible; duplicate bonds collapse.
pub fn family_bonds(family: &Configuration) -> Vec<u16> {
    let mut out: Vec<u16> = family
        .iter()
        .flat_map(|g| match g {
            Individual::Animal { bonds } => bonds.clone(),
            _ => panic!("foreign individual"),
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Debug, Clone)]
pub struct RandomClusterModel {
    p: f64,
    q: f64,
    grid: Grid,
    catalog: Vec<Vec<u16>>,
}

impl RandomClusterModel {
    pub fn new(p: f64, q: f64, grid: Grid) -> Result<RandomClusterModel, ModelError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(ModelError::BadParameter(format!(
                "bond probability must lie strictly between 0 and 1, got {p}"
            )));
        }
        if !(q > 0.0) || !q.is_finite() {
            return Err(ModelError::BadParameter(format!(
                "cluster weight must be positive and finite, got {q}"
            )));
        }
        let n = grid.bond_count();
        let mut catalog: Vec<Vec<u16>> = Vec::new();
        for mask in 1u32..(1 << n) {
            let bonds: Vec<u16> = (0..n as u16).filter(|b| mask >> b & 1 == 1).collect();
            if grid.is_connected(&bonds) {
                catalog.push(bonds);
            }
        }
        catalog.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(RandomClusterModel { p, q, grid, catalog })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn catalog_len(&self) -> usize {
        self.catalog.len()
    }

    fn bonds<'a>(&self, gamma: &'a Individual) -> Result<&'a [u16], ModelError> {
        match gamma {
            Individual::Animal { bonds } => {
                let n = self.grid.bond_count() as u16;
                let in_range = bonds.iter().all(|&b| b < n);
                let sorted = bonds.windows(2).all(|w| w[0] < w[1]);
                if !bonds.is_empty() && in_range && sorted && self.grid.is_connected(bonds) {
                    Ok(bonds)
                } else {
                    Err(ModelError::InvalidIndividual(gamma.clone()))
                }
            }
            _ => Err(ModelError::InvalidIndividual(gamma.clone())),
        }
    }

    /// Probability weight of the bond configuration `zeta` under the
    /// random-cluster measure with free boundary: open bonds count `p`,
    /// closed ones `1-p`, and every connected component (isolated vertices
    /// included) contributes a factor `q`.  Unnormalized.
    pub fn bond_config_weight(&self, zeta: &[u16]) -> f64 {
        let open = zeta.len() as i32;
        let total = self.grid.bond_count() as i32;
        let covered = self.grid.vertices_of(zeta).len() as i32;
        let comps = self.grid.components(zeta).len() as i32
            + (self.grid.vertex_count() as i32 - covered);
        self.p.powi(open) * (1.0 - self.p).powi(total - open) * self.q.powi(comps)
    }
}

impl DiscreteFamily for RandomClusterModel {
    fn weight(&self, gamma: &Individual) -> f64 {
        let bonds = self.bonds(gamma).expect("foreign individual");
        let nv = self.grid.vertices_of(bonds).len() as i32;
        (self.p / (1.0 - self.p)).powi(bonds.len() as i32) * self.q.powi(-(nv - 1))
    }

    fn window_members(&self, window: &Window) -> Result<Vec<Individual>, ModelError> {
        match window {
            Window::All => Ok(self
                .catalog
                .iter()
                .map(|bonds| Individual::Animal { bonds: bonds.clone() })
                .collect()),
            other => Err(ModelError::WindowMismatch(other.describe())),
        }
    }

    fn incompatible_members(&self, gamma: &Individual) -> Vec<Individual> {
        let target = gamma.clone();
        self.catalog
            .iter()
            .map(|bonds| Individual::Animal { bonds: bonds.clone() })
            .filter(|theta| self.incompatible(&target, theta).unwrap())
            .collect()
    }

    fn representatives(&self) -> Vec<Individual> {
        self.catalog
            .iter()
            .map(|bonds| Individual::Animal { bonds: bonds.clone() })
            .collect()
    }
}

impl Model for RandomClusterModel {
    fn name(&self) -> String {
        "random-cluster".to_string()
    }

    fn validate(&self, gamma: &Individual) -> Result<(), ModelError> {
        self.bonds(gamma).map(|_| ())
    }

    fn incompatible(&self, target: &Individual, other: &Individual) -> Result<bool, ModelError> {
        let a = self.grid.vertices_of(self.bonds(target)?);
        let b = self.grid.vertices_of(self.bonds(other)?);
        let set: HashSet<u16> = a.into_iter().collect();
        Ok(b.iter().any(|v| set.contains(v)))
    }

    fn acceptance(&self, gamma: &Individual, xi: &Configuration) -> f64 {
        for theta in xi.iter() {
            if self.incompatible(gamma, theta).expect("foreign individual") {
                return 0.0;
            }
        }
        1.0
    }

    fn size(&self, gamma: &Individual) -> f64 {
        self.bonds(gamma).expect("foreign individual").len() as f64
    }

    fn meets_window(&self, _gamma: &Individual, window: &Window) -> bool {
        matches!(window, Window::All)
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
            other => Err(ModelError::WindowMismatch(other.describe())),
        }
    }
}
