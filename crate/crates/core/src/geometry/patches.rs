use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{ElectrodeGeometry, QuadratureGrid};
use crate::error::{Error, Result};

// Larger seed sets would not fit the bucket search in reasonable memory.
const MAX_EXPECTED_SEEDS: f64 = 2e7;

/// Assignment of grid nodes to Voronoi patches.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchMap {
    pub seed: u64,
    pub patch_scale: f64,
    /// Patch label of every node, numbered by first appearance.
    pub assignment: Vec<u32>,
    pub n_patches: usize,
}

/// Random Voronoi tessellation of the geometry's bounding box.
///
/// Seeds are a Poisson process with intensity `1 / patch_scale^2`, drawn from a
/// ChaCha8 stream keyed by `seed`, so the same seed always gives the same map.
/// A `patch_scale` at least the bounding-box diagonal yields a single patch.
pub fn make_patch_map(
    geometry: &ElectrodeGeometry,
    grid: &QuadratureGrid,
    patch_scale: f64,
    seed: u64,
) -> Result<PatchMap> {
    if !(patch_scale > 0.0 && patch_scale.is_finite()) {
        return Err(Error::InvalidInput(format!("patch scale must be positive, got {patch_scale}")));
    }
    let (x0, x1, z0, z1) = geometry.bbox();
    let (w, h) = (x1 - x0, z1 - z0);
    if patch_scale >= w.hypot(h) {
        return Ok(PatchMap { seed, patch_scale, assignment: vec![0; grid.len()], n_patches: 1 });
    }
    let mean = w * h / (patch_scale * patch_scale);
    if mean > MAX_EXPECTED_SEEDS {
        return Err(Error::InvalidInput(format!(
            "patch scale {patch_scale} would need about {mean:.3e} seeds"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = Poisson::new(mean)
        .map_err(|e| Error::Numerical(e.to_string()))?
        .sample(&mut rng)
        .max(1.0) as usize;
    let seeds: Vec<[f64; 2]> = (0..count)
        .map(|_| [x0 + w * rng.random::<f64>(), z0 + h * rng.random::<f64>()])
        .collect();

    let buckets = Buckets::new(&seeds, x0, z0, w, h, patch_scale);
    let mut relabel = vec![u32::MAX; count];
    let mut n_patches = 0u32;
    let assignment = grid
        .nodes()
        .iter()
        .map(|p| {
            let s = buckets.nearest(&seeds, *p);
            if relabel[s] == u32::MAX {
                relabel[s] = n_patches;
                n_patches += 1;
            }
            relabel[s]
        })
        .collect();
    Ok(PatchMap { seed, patch_scale, assignment, n_patches: n_patches as usize })
}

struct Buckets {
    x0: f64,
    z0: f64,
    cell: f64,
    nx: usize,
    nz: usize,
    items: Vec<Vec<u32>>,
}

impl Buckets {
    fn new(seeds: &[[f64; 2]], x0: f64, z0: f64, w: f64, h: f64, cell: f64) -> Self {
        let nx = ((w / cell).ceil() as usize).max(1);
        let nz = ((h / cell).ceil() as usize).max(1);
        let mut b = Buckets { x0, z0, cell, nx, nz, items: vec![Vec::new(); nx * nz] };
        for (i, s) in seeds.iter().enumerate() {
            let (ix, iz) = b.locate(*s);
            b.items[ix * nz + iz].push(i as u32);
        }
        b
    }

    fn locate(&self, p: [f64; 2]) -> (usize, usize) {
        let ix = ((p[0] - self.x0) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64);
        let iz = ((p[1] - self.z0) / self.cell).floor().clamp(0.0, (self.nz - 1) as f64);
        (ix as usize, iz as usize)
    }

    /// Nearest seed; ties go to the lower seed index.
    fn nearest(&self, seeds: &[[f64; 2]], p: [f64; 2]) -> usize {
        let (cx, cz) = self.locate(p);
        let (cx, cz) = (cx as isize, cz as isize);
        let mut best = (f64::INFINITY, usize::MAX);
        let max_ring = self.nx.max(self.nz) as isize;
        for r in 0..=max_ring {
            if best.1 != usize::MAX && (r - 1) as f64 * self.cell > best.0.sqrt() {
                break;
            }
            for ix in (cx - r)..=(cx + r) {
                for iz in (cz - r)..=(cz + r) {
                    if (ix - cx).abs() != r && (iz - cz).abs() != r {
                        continue;
                    }
                    if ix < 0 || iz < 0 || ix >= self.nx as isize || iz >= self.nz as isize {
                        continue;
                    }
                    for &s in &self.items[ix as usize * self.nz + iz as usize] {
                        let q = seeds[s as usize];
                        let d2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
                        let s = s as usize;
                        if d2 < best.0 || (d2 == best.0 && s < best.1) {
                            best = (d2, s);
                        }
                    }
                }
            }
        }
        best.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Region};

    fn unit_square() -> ElectrodeGeometry {
        ElectrodeGeometry::new(vec![Region::rectangle(0.0, 1.0, 0.0, 1.0)]).unwrap()
    }

    #[test]
    fn same_seed_same_map() {
        let geo = unit_square();
        let grid = build_grid(&geo, 50.0).unwrap();
        let a = make_patch_map(&geo, &grid, 0.1, 7).unwrap();
        let b = make_patch_map(&geo, &grid, 0.1, 7).unwrap();
        let c = make_patch_map(&geo, &grid, 0.1, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.assignment, c.assignment);
    }

    #[test]
    fn huge_scale_is_one_patch() {
        let geo = unit_square();
        let grid = build_grid(&geo, 10.0).unwrap();
        let m = make_patch_map(&geo, &grid, 5.0, 1).unwrap();
        assert_eq!(m.n_patches, 1);
        assert!(m.assignment.iter().all(|&p| p == 0));
    }

    #[test]
    fn mean_patch_area_tracks_scale() {
        let geo = unit_square();
        let grid = build_grid(&geo, 100.0).unwrap();
        let mut total = 0.0;
        for seed in 0..20 {
            let m = make_patch_map(&geo, &grid, 0.1, seed).unwrap();
            total += 1.0 / m.n_patches as f64;
        }
        let mean = total / 20.0;
        assert!((0.005..=0.02).contains(&mean), "mean patch area {mean}");
    }

    #[test]
    fn nearest_matches_brute_force() {
        let geo = unit_square();
        let grid = build_grid(&geo, 30.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seeds: Vec<[f64; 2]> = (0..40).map(|_| [rng.random(), rng.random()]).collect();
        let b = Buckets::new(&seeds, 0.0, 0.0, 1.0, 1.0, 0.15);
        for p in grid.nodes() {
            let brute = (0..seeds.len())
                .min_by(|&i, &j| {
                    let di = (seeds[i][0] - p[0]).powi(2) + (seeds[i][1] - p[1]).powi(2);
                    let dj = (seeds[j][0] - p[0]).powi(2) + (seeds[j][1] - p[1]).powi(2);
                    di.partial_cmp(&dj).unwrap()
                })
                .unwrap();
            assert_eq!(b.nearest(&seeds, *p), brute);
        }
    }

    #[test]
    fn rejects_bad_scale() {
        let geo = unit_square();
        let grid = build_grid(&geo, 10.0).unwrap();
        assert!(make_patch_map(&geo, &grid, 0.0, 1).is_err());
        assert!(make_patch_map(&geo, &grid, 1e-6, 1).is_err());
    }
}
