//! A ring of dynamically independent Lorenz sites: a desk-scale surrogate
//! for a large mesh, so localization behavior can be checked against
//! exactly decoupled dynamics.

use super::LoopGeometry;
use crate::error::{Error, Result};
use crate::models::{Lorenz63Params, Model};

#[derive(Debug, Clone, PartialEq)]
pub struct RingTestModel {
    pub params: Vec<Lorenz63Params>,
    pub ring_radius: f64,
}

impl RingTestModel {
    pub fn new(params: Vec<Lorenz63Params>, ring_radius: f64) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::invalid("ring model needs at least one site"));
        }
        if !(ring_radius > 0.0) {
            return Err(Error::invalid(format!("ring radius must be positive, got {ring_radius}")));
        }
        Ok(RingTestModel { params, ring_radius })
    }

    /// `n_sites` sites with default Lorenz parameters, evenly spaced.
    pub fn evenly_spaced(n_sites: usize, ring_radius: f64) -> Result<Self> {
        RingTestModel::new(vec![Lorenz63Params::default(); n_sites], ring_radius)
    }

    pub fn n_sites(&self) -> usize {
        self.params.len()
    }

    pub fn model(&self) -> Model {
        Model::Ring(self.params.clone())
    }

    /// One cell per site on the ring, three variables per cell.
    pub fn geometry(&self) -> Result<LoopGeometry> {
        LoopGeometry::ring(self.n_sites(), 1, self.ring_radius, self.ring_radius * 0.01, 3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_matches_state_layout() {
        let ring = RingTestModel::evenly_spaced(5, 2.0).unwrap();
        let geom = ring.geometry().unwrap();
        assert_eq!(geom.state_dim(), ring.model().dim());
        assert_eq!(geom.n_cells(), 5);
        assert_eq!(geom.state_indices(2), 6..9);
    }

    #[test]
    fn site_spacing_exceeds_small_radii() {
        use crate::localization::radius_neighbors;
        let ring = RingTestModel::evenly_spaced(4, 1.0).unwrap();
        let geom = ring.geometry().unwrap();
        // Neighbor spacing on the unit ring with 4 sites is sqrt(2).
        assert_eq!(radius_neighbors(&geom, 0, 1.0).unwrap(), vec![0]);
    }
}
