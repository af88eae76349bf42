//! Loop geometry and covariance localization: the slice and Euclidean-radius
//! schemes, plus the LETKF / 4D-LETKF local analysis machinery.

mod letkf;
mod ring;

pub use letkf::{letkf4d_analysis, letkf_analysis};
pub use ring::RingTestModel;

use crate::error::{Error, Result};

/// Cell positions around a closed loop, grouped into angular slices.
///
/// The model state is ordered by cell then variable, so cell `c` owns state
/// indices `c * vars_per_cell ..` and the cell count times `vars_per_cell`
/// equals the state dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopGeometry {
    cell_centers: Vec<[f64; 3]>,
    slice_index: Vec<usize>,
    n_slices: usize,
    loop_radius: f64,
    vars_per_cell: usize,
}

impl LoopGeometry {
    pub fn new(
        cell_centers: Vec<[f64; 3]>,
        slice_index: Vec<usize>,
        n_slices: usize,
        loop_radius: f64,
        vars_per_cell: usize,
    ) -> Result<Self> {
        if cell_centers.len() != slice_index.len() {
            return Err(Error::invalid("one slice index required per cell"));
        }
        if n_slices == 0 || vars_per_cell == 0 {
            return Err(Error::invalid("n_slices and vars_per_cell must be positive"));
        }
        if let Some(&bad) = slice_index.iter().find(|&&s| s >= n_slices) {
            return Err(Error::invalid(format!("slice index {bad} out of range 0..{n_slices}")));
        }
        // Slices must be contiguous around the loop: every index occupied.
        let mut seen = vec![false; n_slices];
        for &s in &slice_index {
            seen[s] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::invalid("every slice in 0..n_slices must contain a cell"));
        }
        Ok(LoopGeometry { cell_centers, slice_index, n_slices, loop_radius, vars_per_cell })
    }

    /// A loop discretized into `n_slices` angular slices with
    /// `cells_per_slice` cells spread radially across the tube.
    pub fn ring(
        n_slices: usize,
        cells_per_slice: usize,
        loop_radius: f64,
        tube_radius: f64,
        vars_per_cell: usize,
    ) -> Result<Self> {
        if n_slices == 0 || cells_per_slice == 0 {
            return Err(Error::invalid("ring geometry needs at least one slice and one cell"));
        }
        let mut centers = Vec::with_capacity(n_slices * cells_per_slice);
        let mut slices = Vec::with_capacity(n_slices * cells_per_slice);
        for s in 0..n_slices {
            let theta = 2.0 * std::f64::consts::PI * s as f64 / n_slices as f64;
            for c in 0..cells_per_slice {
                // Radial position across the tube, inner wall to outer wall.
                let frac = if cells_per_slice == 1 {
                    0.0
                } else {
                    2.0 * c as f64 / (cells_per_slice - 1) as f64 - 1.0
                };
                let r = loop_radius + frac * tube_radius;
                centers.push([r * theta.cos(), r * theta.sin(), 0.0]);
                slices.push(s);
            }
        }
        LoopGeometry::new(centers, slices, n_slices, loop_radius, vars_per_cell)
    }

    pub fn n_cells(&self) -> usize {
        self.cell_centers.len()
    }

    pub fn n_slices(&self) -> usize {
        self.n_slices
    }

    pub fn state_dim(&self) -> usize {
        self.n_cells() * self.vars_per_cell
    }

    pub fn vars_per_cell(&self) -> usize {
        self.vars_per_cell
    }

    pub fn loop_radius(&self) -> f64 {
        self.loop_radius
    }

    pub fn cell_center(&self, cell: usize) -> [f64; 3] {
        self.cell_centers[cell]
    }

    pub fn slice_of(&self, cell: usize) -> usize {
        self.slice_index[cell]
    }

    /// State indices owned by a cell.
    pub fn state_indices(&self, cell: usize) -> std::ops::Range<usize> {
        cell * self.vars_per_cell..(cell + 1) * self.vars_per_cell
    }

    pub fn cells_of_slice(&self, slice: usize) -> Vec<usize> {
        (0..self.n_cells()).filter(|&c| self.slice_index[c] == slice).collect()
    }

    pub fn nearest_cell(&self, point: &[f64; 3]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.cell_centers.iter().enumerate() {
            let d = distance(c, point);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// One row per cell: id, x, y, z, slice; metadata in `#` header lines.
    pub fn to_table_string(&self) -> String {
        let mut out = String::new();
        out.push_str("# loop geometry\n");
        out.push_str(&format!(
            "# n_slices {} loop_radius {} vars_per_cell {}\n",
            self.n_slices, self.loop_radius, self.vars_per_cell
        ));
        for (i, c) in self.cell_centers.iter().enumerate() {
            out.push_str(&format!("{} {} {} {} {}\n", i, c[0], c[1], c[2], self.slice_index[i]));
        }
        out
    }

    pub fn from_table_str(text: &str) -> Result<Self> {
        let mut n_slices = None;
        let mut loop_radius = None;
        let mut vars_per_cell = None;
        let mut centers = Vec::new();
        let mut slices = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let tokens: Vec<&str> = rest.split_whitespace().collect();
                let mut i = 0;
                while i + 1 < tokens.len() {
                    match tokens[i] {
                        "n_slices" => n_slices = tokens[i + 1].parse().ok(),
                        "loop_radius" => loop_radius = tokens[i + 1].parse().ok(),
                        "vars_per_cell" => vars_per_cell = tokens[i + 1].parse().ok(),
                        _ => {}
                    }
                    i += 1;
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected 5 fields (id x y z slice), got {}", fields.len()),
                });
            }
            let parse = |s: &str, what: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Parse { line: lineno + 1, message: format!("bad {what}: {s}") })
            };
            let id: usize = fields[0]
                .parse()
                .map_err(|_| Error::Parse { line: lineno + 1, message: format!("bad cell id: {}", fields[0]) })?;
            if id != centers.len() {
                return Err(Error::Parse { line: lineno + 1, message: format!("cell ids must be consecutive, got {id}") });
            }
            centers.push([parse(fields[1], "x")?, parse(fields[2], "y")?, parse(fields[3], "z")?]);
            slices.push(fields[4].parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad slice index: {}", fields[4]),
            })?);
        }
        let n_slices = n_slices.unwrap_or_else(|| slices.iter().max().map_or(0, |&m| m + 1));
        LoopGeometry::new(centers, slices, n_slices, loop_radius.unwrap_or(1.0), vars_per_cell.unwrap_or(1))
    }
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Which cells and observations count as local to an analysis point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalityScheme {
    /// Cells within `r_slice` slices, counted circularly around the loop.
    Slice { r_slice: usize },
    /// Cells whose centers lie strictly within `r_meters`.
    Radius { r_meters: f64 },
}

impl LocalityScheme {
    /// Cells local to `center_cell` under this scheme, sorted by id.
    pub fn local_cells(&self, geom: &LoopGeometry, center_cell: usize) -> Result<Vec<usize>> {
        match *self {
            LocalityScheme::Slice { r_slice } => slice_neighbors(geom, geom.slice_of(center_cell), r_slice),
            LocalityScheme::Radius { r_meters } => radius_neighbors(geom, center_cell, r_meters),
        }
    }

    /// Whether an observation at `location` is local to `center_cell`,
    /// applying the same predicate as for cells.
    pub fn obs_is_local(&self, geom: &LoopGeometry, center_cell: usize, location: &[f64; 3]) -> bool {
        match *self {
            LocalityScheme::Slice { r_slice } => {
                let obs_slice = geom.slice_of(geom.nearest_cell(location));
                circular_distance(obs_slice, geom.slice_of(center_cell), geom.n_slices()) <= r_slice
            }
            LocalityScheme::Radius { r_meters } => {
                distance(&geom.cell_center(center_cell), location) < r_meters
            }
        }
    }
}

fn circular_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b) % n;
    d.min(n - d)
}

/// All cells whose slice lies within `r_slice` of `slice_i`, with
/// wraparound: the loop is closed. `r_slice` at or above half the slice
/// count saturates to the full domain.
pub fn slice_neighbors(geom: &LoopGeometry, slice_i: usize, r_slice: usize) -> Result<Vec<usize>> {
    if slice_i >= geom.n_slices() {
        return Err(Error::invalid(format!("slice {slice_i} out of range 0..{}", geom.n_slices())));
    }
    Ok((0..geom.n_cells())
        .filter(|&c| circular_distance(geom.slice_of(c), slice_i, geom.n_slices()) <= r_slice)
        .collect())
}

/// All cells with center strictly closer than `r_meters` to the center of
/// `cell`.
pub fn radius_neighbors(geom: &LoopGeometry, cell: usize, r_meters: f64) -> Result<Vec<usize>> {
    if !(r_meters > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {r_meters}")));
    }
    let center = geom.cell_center(cell);
    Ok((0..geom.n_cells())
        .filter(|&c| distance(&geom.cell_center(c), &center) < r_meters)
        .collect())
}

/// A local analysis region: the center cell, its member cells, and the
/// indices of observations treated as local.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalRegion {
    pub center_cell: usize,
    pub member_cells: Vec<usize>,
    pub obs_indices: Vec<usize>,
}

impl LocalRegion {
    /// Build the region for one cell: its local cells plus the local subset
    /// of observation locations.
    pub fn build(
        geom: &LoopGeometry,
        scheme: &LocalityScheme,
        center_cell: usize,
        obs_locations: &[[f64; 3]],
    ) -> Result<Self> {
        let member_cells = scheme.local_cells(geom, center_cell)?;
        let obs_indices = obs_locations
            .iter()
            .enumerate()
            .filter(|(_, loc)| scheme.obs_is_local(geom, center_cell, loc))
            .map(|(i, _)| i)
            .collect();
        Ok(LocalRegion { center_cell, member_cells, obs_indices })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eight_slice_ring() -> LoopGeometry {
        LoopGeometry::ring(8, 1, 1.0, 0.1, 1).unwrap()
    }

    #[test]
    fn zero_radius_returns_own_slice() {
        let geom = eight_slice_ring();
        assert_eq!(slice_neighbors(&geom, 3, 0).unwrap(), vec![3]);
    }

    #[test]
    fn slice_wraparound() {
        let geom = eight_slice_ring();
        // Slice 0 with r = 1 picks up slices 7, 0, 1.
        assert_eq!(slice_neighbors(&geom, 0, 1).unwrap(), vec![0, 1, 7]);
    }

    #[test]
    fn saturation_covers_all_cells() {
        let geom = eight_slice_ring();
        assert_eq!(slice_neighbors(&geom, 2, 4).unwrap().len(), 8);
        assert_eq!(slice_neighbors(&geom, 2, 17).unwrap().len(), 8);
    }

    #[test]
    fn neighboring_slices_overlap_across_the_seam() {
        let geom = eight_slice_ring();
        let a = slice_neighbors(&geom, 0, 1).unwrap();
        let b = slice_neighbors(&geom, 7, 1).unwrap();
        assert!(a.iter().any(|c| b.contains(c)));
    }

    #[test]
    fn radius_within_spacing_is_self_only() {
        let geom = eight_slice_ring();
        // Inter-center spacing on the unit ring with 8 slices is ~0.765.
        assert_eq!(radius_neighbors(&geom, 0, 0.5).unwrap(), vec![0]);
        // The full diameter catches everything.
        assert_eq!(radius_neighbors(&geom, 0, 2.5).unwrap().len(), 8);
    }

    #[test]
    fn radius_collinear_hand_case() {
        let centers = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        let geom = LoopGeometry::new(centers, vec![0, 1, 2], 3, 1.0, 1).unwrap();
        assert_eq!(radius_neighbors(&geom, 1, 1.5).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn radius_locality_is_symmetric() {
        let geom = LoopGeometry::ring(12, 2, 1.0, 0.2, 1).unwrap();
        for r in [0.3, 0.8, 1.7] {
            for i in 0..geom.n_cells() {
                for j in 0..geom.n_cells() {
                    let i_sees_j = radius_neighbors(&geom, i, r).unwrap().contains(&j);
                    let j_sees_i = radius_neighbors(&geom, j, r).unwrap().contains(&i);
                    assert_eq!(i_sees_j, j_sees_i);
                }
            }
        }
    }

    #[test]
    fn geometry_table_round_trip() {
        let geom = LoopGeometry::ring(6, 3, 0.41, 0.011, 2).unwrap();
        let text = geom.to_table_string();
        let back = LoopGeometry::from_table_str(&text).unwrap();
        assert_eq!(geom, back);
        // Bit-exact: serializing again yields identical text.
        assert_eq!(text, back.to_table_string());
    }

    #[test]
    fn malformed_table_reports_line() {
        let err = LoopGeometry::from_table_str("0 0.0 0.0 0.0 0\n1 bad 0.0 0.0 0\n");
        match err {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn local_region_membership() {
        let geom = eight_slice_ring();
        let scheme = LocalityScheme::Slice { r_slice: 1 };
        let obs_locations = vec![geom.cell_center(0), geom.cell_center(4)];
        let region = LocalRegion::build(&geom, &scheme, 0, &obs_locations).unwrap();
        assert!(region.member_cells.contains(&region.center_cell));
        assert_eq!(region.obs_indices, vec![0]);
    }
}
