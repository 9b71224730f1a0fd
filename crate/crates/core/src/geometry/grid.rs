use super::{ElectrodeGeometry, Region};
use crate::error::{Error, Result};

/// Default number of grid nodes spanning one ion height under the ion.
pub const DEFAULT_NODES_PER_HEIGHT: f64 = 12.0;

/// Midpoint-rule nodes and area weights over an [`ElectrodeGeometry`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<[f64; 2]>,
    weights: Vec<f64>,
    patch_id: Option<Vec<u32>>,
    resolution: f64,
    /// Cell sides `(hx, hz)` used for each source region.
    spacing: Vec<(f64, f64)>,
    region_of: Vec<u32>,
    refined: bool,
}

/// Integer lattice shared by every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub x0: f64,
    pub z0: f64,
    pub hx: f64,
    pub hz: f64,
    pub nx: usize,
    pub nz: usize,
    /// `(ix, iz)` of every node, in node order.
    pub index: Vec<(usize, usize)>,
}

fn cells(lo: f64, hi: f64, resolution: f64) -> (usize, f64) {
    let n = ((hi - lo) * resolution).round().max(1.0) as usize;
    (n, (hi - lo) / n as f64)
}

/// Midpoint tensor grid over every region.
///
/// Rectangles are covered exactly. Disks and annuli are gridded over their
/// bounding box and a cell is kept iff its centre lies inside the region.
pub fn build_grid(geometry: &ElectrodeGeometry, resolution: f64) -> Result<QuadratureGrid> {
    build_refined_grid(geometry, resolution, &[], 0.0)
}

/// Like [`build_grid`], but every cell whose centre lies within `radius` of one
/// of `centers` (given as `(x, z)`) is split into 2 x 2 sub-cells.
pub fn build_refined_grid(
    geometry: &ElectrodeGeometry,
    resolution: f64,
    centers: &[[f64; 2]],
    radius: f64,
) -> Result<QuadratureGrid> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidInput(format!("grid resolution must be positive, got {resolution}")));
    }
    if !(geometry.total_area() > 0.0) {
        return Err(Error::Geometry("geometry has zero area".into()));
    }
    let refine = !centers.is_empty() && radius > 0.0;
    let near = |x: f64, z: f64| refine && centers.iter().any(|c| (x - c[0]).hypot(z - c[1]) <= radius);

    let mut grid = QuadratureGrid {
        nodes: Vec::new(),
        weights: Vec::new(),
        patch_id: None,
        resolution,
        spacing: Vec::with_capacity(geometry.regions().len()),
        region_of: Vec::new(),
        refined: false,
    };
    for (ri, region) in geometry.regions().iter().enumerate() {
        let (x0, x1, z0, z1) = region.bbox();
        let (nx, hx) = cells(x0, x1, resolution);
        let (nz, hz) = cells(z0, z1, resolution);
        let exact_cover = matches!(region, Region::Rectangle { .. });
        grid.spacing.push((hx, hz));
        let before = grid.nodes.len();
        for i in 0..nx {
            let x = x0 + (i as f64 + 0.5) * hx;
            for k in 0..nz {
                let z = z0 + (k as f64 + 0.5) * hz;
                if near(x, z) {
                    grid.refined = true;
                    for (a, b) in [(-0.25, -0.25), (-0.25, 0.25), (0.25, -0.25), (0.25, 0.25)] {
                        let (xs, zs) = (x + a * hx, z + b * hz);
                        if exact_cover || region.contains(xs, zs) {
                            grid.push(xs, zs, 0.25 * hx * hz, ri);
                        }
                    }
                } else if exact_cover || region.contains(x, z) {
                    grid.push(x, z, hx * hz, ri);
                }
            }
        }
        if grid.nodes.len() == before {
            return Err(Error::Geometry(format!(
                "region {ri} received no grid nodes at resolution {resolution}; increase the resolution"
            )));
        }
    }
    Ok(grid)
}

impl QuadratureGrid {
    fn push(&mut self, x: f64, z: f64, w: f64, region: usize) {
        self.nodes.push([x, z]);
        self.weights.push(w);
        self.region_of.push(region as u32);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node positions as `(x, z)`.
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn region_of(&self) -> &[u32] {
        &self.region_of
    }

    pub fn patch_ids(&self) -> Option<&[u32]> {
        self.patch_id.as_deref()
    }

    pub fn is_refined(&self) -> bool {
        self.refined
    }

    pub fn total_weight(&self) -> f64 {
        crate::summation::pairwise_sum(&self.weights)
    }

    /// Attach a patch assignment (one label per node).
    pub fn with_patches(mut self, map: &super::PatchMap) -> Result<Self> {
        if map.assignment.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), actual: map.assignment.len() });
        }
        self.patch_id = Some(map.assignment.clone());
        Ok(self)
    }

    /// Diagonal of the smallest cell.
    pub fn min_cell_diagonal(&self) -> f64 {
        let f = if self.refined { 0.5 } else { 1.0 };
        self.spacing
            .iter()
            .map(|(hx, hz)| f * hx.hypot(*hz))
            .fold(f64::INFINITY, f64::min)
    }

    /// The common lattice of the grid, if all regions share one cell shape and
    /// every node sits on the same integer lattice. Refined grids never do.
    pub fn lattice(&self) -> Option<Lattice> {
        if self.refined || self.nodes.is_empty() {
            return None;
        }
        let (hx, hz) = self.spacing[0];
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
        if !self.spacing.iter().all(|&(a, b)| same(a, hx) && same(b, hz)) {
            return None;
        }
        let x0 = self.nodes.iter().map(|n| n[0]).fold(f64::INFINITY, f64::min);
        let z0 = self.nodes.iter().map(|n| n[1]).fold(f64::INFINITY, f64::min);
        let mut index = Vec::with_capacity(self.nodes.len());
        let (mut nx, mut nz) = (0usize, 0usize);
        for n in &self.nodes {
            let fx = (n[0] - x0) / hx;
            let fz = (n[1] - z0) / hz;
            let (ix, iz) = (fx.round(), fz.round());
            if (fx - ix).abs() > 1e-6 || (fz - iz).abs() > 1e-6 {
                return None;
            }
            let (ix, iz) = (ix as usize, iz as usize);
            nx = nx.max(ix + 1);
            nz = nz.max(iz + 1);
            index.push((ix, iz));
        }
        Some(Lattice { x0, z0, hx, hz, nx, nz, index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{preset_geometry, Preset};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_square() -> ElectrodeGeometry {
        ElectrodeGeometry::new(vec![Region::rectangle(0.0, 1.0, 0.0, 1.0)]).unwrap()
    }

    #[test]
    fn unit_square_resolution_ten() {
        let g = build_grid(&unit_square(), 10.0).unwrap();
        assert_eq!(g.len(), 100);
        assert_relative_eq!(g.total_weight(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn disk_area_within_one_percent() {
        let geo = ElectrodeGeometry::new(vec![Region::disk(0.0, 0.0, 1.0)]).unwrap();
        let g = build_grid(&geo, 40.0).unwrap();
        assert!((g.total_weight() - PI).abs() / PI < 0.01, "{}", g.total_weight());
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(build_grid(&unit_square(), 0.0).is_err());
        assert!(build_grid(&unit_square(), f64::NAN).is_err());
    }

    #[test]
    fn refinement_conserves_area_and_splits_cells() {
        let geo = preset_geometry(Preset::PlaneSurrogate, 1.0).unwrap();
        let coarse = build_grid(&geo, 4.0).unwrap();
        let fine = build_refined_grid(&geo, 4.0, &[[0.0, 0.0]], 4.0).unwrap();
        assert!(fine.is_refined());
        assert!(fine.len() > coarse.len());
        assert_relative_eq!(fine.total_weight(), 400.0, max_relative = 1e-12);
        assert!(fine.lattice().is_none());
    }

    #[test]
    fn segmented_trap_is_one_lattice() {
        let geo = preset_geometry(Preset::SegmentedTrap, 1.0).unwrap();
        let g = build_grid(&geo, 12.0).unwrap();
        let lat = g.lattice().expect("rails share a lattice");
        assert_eq!(lat.nx, 120);
        assert_eq!(lat.nz, 48);
        assert_eq!(lat.index.len(), g.len());
    }

    #[test]
    fn every_node_inside_its_region() {
        let geo = preset_geometry(Preset::Stylus, 1.0).unwrap();
        let g = build_grid(&geo, 17.0).unwrap();
        for (n, &r) in g.nodes().iter().zip(g.region_of()) {
            assert!(geo.regions()[r as usize].contains(n[0], n[1]));
        }
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }
}
