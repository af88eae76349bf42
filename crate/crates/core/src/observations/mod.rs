//! Observation operators, synthetic sensor networks, noise injection, and
//! climatological variable scaling.

use crate::assimilation::Covariance;
use crate::error::{Error, Result};
use crate::localization::{distance, LoopGeometry};
use crate::models::{State, Trajectory};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// A linear observation operator, materializable as an m x n matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationOperatorSpec {
    /// Observe the named state indices directly.
    SelectIndices(Vec<usize>),
    /// Each sensor reports the uniform average of the first variable of all
    /// cells whose centers lie strictly within `radius` of its location.
    NeighborhoodAverage { centers: Vec<[f64; 3]>, radius: f64 },
}

/// What the operator maps from: a bare state dimension or a loop geometry.
#[derive(Debug, Clone, Copy)]
pub enum OperatorDomain<'a> {
    ModelDim(usize),
    Geometry(&'a LoopGeometry),
}

impl OperatorDomain<'_> {
    pub fn state_dim(&self) -> usize {
        match self {
            OperatorDomain::ModelDim(n) => *n,
            OperatorDomain::Geometry(g) => g.state_dim(),
        }
    }
}

/// Materialize the operator as a dense matrix.
///
/// Selection rows are unit basis vectors; averaging rows carry uniform
/// weights over the averaged cells, so every row sums to one.
pub fn materialize_operator(spec: &ObservationOperatorSpec, domain: &OperatorDomain) -> Result<DMatrix<f64>> {
    let n = domain.state_dim();
    match spec {
        ObservationOperatorSpec::SelectIndices(indices) => {
            let mut h = DMatrix::zeros(indices.len(), n);
            for (row, &idx) in indices.iter().enumerate() {
                if idx >= n {
                    return Err(Error::invalid(format!("observed index {idx} out of range for dimension {n}")));
                }
                h[(row, idx)] = 1.0;
            }
            Ok(h)
        }
        ObservationOperatorSpec::NeighborhoodAverage { centers, radius } => {
            let geom = match domain {
                OperatorDomain::Geometry(g) => g,
                OperatorDomain::ModelDim(_) => {
                    return Err(Error::invalid("averaging operators need a geometry"));
                }
            };
            if !(*radius > 0.0) {
                return Err(Error::invalid(format!("averaging radius must be positive, got {radius}")));
            }
            let mut h = DMatrix::zeros(centers.len(), n);
            for (row, center) in centers.iter().enumerate() {
                let cells: Vec<usize> = (0..geom.n_cells())
                    .filter(|&c| distance(&geom.cell_center(c), center) < *radius)
                    .collect();
                if cells.is_empty() {
                    return Err(Error::EmptyRegion { center: row });
                }
                let w = 1.0 / cells.len() as f64;
                for c in cells {
                    h[(row, geom.state_indices(c).start)] = w;
                }
            }
            Ok(h)
        }
    }
}

/// Nominal sensor locations for an operator; selection sensors sit at their
/// cell centers when a geometry is known and at the origin otherwise.
pub fn sensor_locations(spec: &ObservationOperatorSpec, domain: &OperatorDomain) -> Vec<[f64; 3]> {
    match spec {
        ObservationOperatorSpec::SelectIndices(indices) => indices
            .iter()
            .map(|&idx| match domain {
                OperatorDomain::Geometry(g) => g.cell_center(idx / g.vars_per_cell()),
                OperatorDomain::ModelDim(_) => [0.0, 0.0, 0.0],
            })
            .collect(),
        ObservationOperatorSpec::NeighborhoodAverage { centers, .. } => centers.clone(),
    }
}

/// One observed value: when, which sensor, what, how uncertain, and where.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsRow {
    pub time: f64,
    pub sensor: usize,
    pub value: f64,
    pub variance: f64,
    pub location: [f64; 3],
}

/// Observed values with their times, error variances, operator, and
/// locations. Rows are kept sorted by time then sensor id.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub rows: Vec<ObsRow>,
    pub operator: ObservationOperatorSpec,
}

impl ObservationSet {
    pub fn new(mut rows: Vec<ObsRow>, operator: ObservationOperatorSpec) -> Result<Self> {
        if rows.iter().any(|r| !(r.variance > 0.0)) {
            return Err(Error::invalid("observation error variances must be positive"));
        }
        rows.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.sensor.cmp(&b.sensor)));
        Ok(ObservationSet { rows, operator })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct observation times, ascending.
    pub fn times(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if out.last().map_or(true, |&t| r.time > t) {
                out.push(r.time);
            }
        }
        out
    }

    /// The subset of rows within `tol` of `time`, as a new set.
    pub fn at_time(&self, time: f64, tol: f64) -> ObservationSet {
        let rows = self.rows.iter().filter(|r| (r.time - time).abs() <= tol).cloned().collect();
        ObservationSet { rows, operator: self.operator.clone() }
    }

    pub fn values(&self) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r.value))
    }

    pub fn variances(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.variance).collect()
    }

    /// Diagonal error covariance of this set's rows.
    pub fn error_covariance(&self) -> Covariance {
        Covariance::from_diagonal(&self.variances())
    }

    pub fn locations(&self) -> Vec<[f64; 3]> {
        self.rows.iter().map(|r| r.location).collect()
    }

    /// Rows of the materialized operator for this set's sensors.
    pub fn operator_matrix(&self, domain: &OperatorDomain) -> Result<DMatrix<f64>> {
        let full = materialize_operator(&self.operator, domain)?;
        let mut h = DMatrix::zeros(self.rows.len(), full.ncols());
        for (i, r) in self.rows.iter().enumerate() {
            if r.sensor >= full.nrows() {
                return Err(Error::invalid(format!("sensor id {} out of range", r.sensor)));
            }
            h.set_row(i, &full.row(r.sensor));
        }
        Ok(h)
    }

    /// Delimited text: time, sensor id, value, variance, x, y, z per row.
    pub fn to_table_string(&self) -> String {
        let mut out = String::from("time,sensor,value,variance,x,y,z\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.time, r.sensor, r.value, r.variance, r.location[0], r.location[1], r.location[2]
            ));
        }
        out
    }

    /// Parse rows back; the operator is not part of the table and must be
    /// supplied by the caller.
    pub fn from_table_str(text: &str, operator: ObservationOperatorSpec) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("time,")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected 7 fields, got {}", fields.len()),
                });
            }
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Parse { line: lineno + 1, message: format!("bad number: {s}") })
            };
            rows.push(ObsRow {
                time: num(fields[0])?,
                sensor: fields[1].parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("bad sensor id: {}", fields[1]),
                })?,
                value: num(fields[2])?,
                variance: num(fields[3])?,
                location: [num(fields[4])?, num(fields[5])?, num(fields[6])?],
            });
        }
        ObservationSet::new(rows, operator)
    }
}

/// Sample a truth trajectory at assimilation-window multiples, apply the
/// operator, and add independent zero-mean Gaussian errors with the
/// requested variance.
///
/// The recorded error covariance carries `noise_variance` exactly (with a
/// tiny floor so a noise-free set still has a usable R).
pub fn generate_synthetic_obs<R: Rng>(
    truth: &Trajectory,
    spec: &ObservationOperatorSpec,
    domain: &OperatorDomain,
    noise_variance: f64,
    window: f64,
    rng: &mut R,
) -> Result<ObservationSet> {
    if !(noise_variance >= 0.0) {
        return Err(Error::invalid(format!("noise variance must be nonnegative, got {noise_variance}")));
    }
    if !(window > 0.0) {
        return Err(Error::invalid(format!("window must be positive, got {window}")));
    }
    let span = *truth.times.last().unwrap_or(&0.0);
    if window > span + 1e-12 {
        return Err(Error::invalid(format!("window {window} exceeds trajectory span {span}")));
    }
    let h = materialize_operator(spec, domain)?;
    let locations = sensor_locations(spec, domain);
    let stamp_tol = if truth.times.len() > 1 { (truth.times[1] - truth.times[0]) / 2.0 } else { 1e-12 };
    let noise_sd = noise_variance.sqrt();
    let variance = noise_variance.max(1e-300);
    let normal = Normal::new(0.0, 1.0).map_err(|_| Error::invalid("bad normal"))?;

    let n_windows = ((span + stamp_tol) / window).floor() as usize;
    let mut rows = Vec::with_capacity(n_windows * h.nrows());
    for w in 1..=n_windows {
        let t = w as f64 * window;
        let idx = truth
            .nearest_stamp(t, stamp_tol)
            .ok_or_else(|| Error::invalid(format!("no trajectory stamp near t = {t}")))?;
        let projected = &h * &truth.states[idx];
        for sensor in 0..h.nrows() {
            let noise = if noise_sd == 0.0 { 0.0 } else { noise_sd * normal.sample(rng) };
            rows.push(ObsRow {
                time: t,
                sensor,
                value: projected[sensor] + noise,
                variance,
                location: locations[sensor],
            });
        }
    }
    ObservationSet::new(rows, spec.clone())
}

/// Per-variable climatological divisors applied before assimilation.
///
/// The divisor list either matches the state dimension or divides it, in
/// which case it repeats per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSpec {
    pub divisors: Vec<f64>,
}

impl ScalingSpec {
    pub fn new(divisors: Vec<f64>) -> Result<Self> {
        if divisors.is_empty() || divisors.iter().any(|&d| d == 0.0 || !d.is_finite()) {
            return Err(Error::invalid("scaling divisors must be nonzero and finite"));
        }
        Ok(ScalingSpec { divisors })
    }

    fn divisor(&self, index: usize) -> f64 {
        self.divisors[index % self.divisors.len()]
    }

    fn check_layout(&self, dim: usize) -> Result<()> {
        if dim % self.divisors.len() != 0 {
            return Err(Error::invalid(format!(
                "scaling layout mismatch: {} divisors cannot tile dimension {dim}",
                self.divisors.len()
            )));
        }
        Ok(())
    }
}

/// Elementwise division by the climatological divisors.
pub fn scale_state(state: &State, spec: &ScalingSpec) -> Result<State> {
    spec.check_layout(state.len())?;
    Ok(State::from_fn(state.len(), |i, _| state[i] / spec.divisor(i)))
}

/// Inverse of `scale_state`.
pub fn unscale_state(state: &State, spec: &ScalingSpec) -> Result<State> {
    spec.check_layout(state.len())?;
    Ok(State::from_fn(state.len(), |i, _| state[i] * spec.divisor(i)))
}

/// How sensors are laid out around the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Averaging sensors at equal angles, snapped to the nearest slice.
    EvenlySpaced,
    /// Direct observation of the mid-tube cell of maximally separated slices.
    SliceCentered,
    /// Like slice-centered but alternating between near-wall cells.
    Staggered,
}

/// A synthetic sensor network over a loop geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorNetwork {
    pub n_sensors: usize,
    pub placement: Placement,
    pub averaging_radius: f64,
}

/// Lay sensors out around the loop per the placement rule.
pub fn place_sensors(geom: &LoopGeometry, network: &SensorNetwork) -> Result<ObservationOperatorSpec> {
    let n = network.n_sensors;
    if n == 0 || n > geom.n_cells() {
        return Err(Error::invalid(format!("cannot place {n} sensors on {} cells", geom.n_cells())));
    }
    match network.placement {
        Placement::EvenlySpaced => {
            if !(network.averaging_radius > 0.0) {
                return Err(Error::invalid("evenly spaced sensors need a positive averaging radius"));
            }
            // Slice centers: mean of each slice's cell centers.
            let slice_centers: Vec<[f64; 3]> = (0..geom.n_slices())
                .map(|s| {
                    let cells = geom.cells_of_slice(s);
                    let mut c = [0.0; 3];
                    for &cell in &cells {
                        let p = geom.cell_center(cell);
                        for d in 0..3 {
                            c[d] += p[d] / cells.len() as f64;
                        }
                    }
                    c
                })
                .collect();
            let centers = (0..n)
                .map(|j| {
                    let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                    let nominal = [geom.loop_radius() * theta.cos(), geom.loop_radius() * theta.sin(), 0.0];
                    let nearest = slice_centers
                        .iter()
                        .min_by(|a, b| distance(a, &nominal).total_cmp(&distance(b, &nominal)))
                        .expect("geometry has at least one slice");
                    *nearest
                })
                .collect();
            Ok(ObservationOperatorSpec::NeighborhoodAverage { centers, radius: network.averaging_radius })
        }
        Placement::SliceCentered | Placement::Staggered => {
            if n > geom.n_slices() {
                return Err(Error::invalid(format!(
                    "{n} sensors exceed {} slices in a slice-based placement",
                    geom.n_slices()
                )));
            }
            let mut indices = Vec::with_capacity(n);
            for j in 0..n {
                // Maximally separated slices.
                let slice = j * geom.n_slices() / n;
                let cells = geom.cells_of_slice(slice);
                let cell = match network.placement {
                    Placement::SliceCentered => cells[cells.len() / 2],
                    Placement::Staggered => {
                        // Alternate between the two walls.
                        if j % 2 == 0 {
                            cells[0]
                        } else {
                            cells[cells.len() - 1]
                        }
                    }
                    Placement::EvenlySpaced => unreachable!(),
                };
                indices.push(geom.state_indices(cell).start);
            }
            Ok(ObservationOperatorSpec::SelectIndices(indices))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{integrate, IntegratorConfig, Lorenz63Params, Model};
    use crate::rng::{stream, Domain};
    use approx::assert_relative_eq;

    #[test]
    fn selection_operator_rows_are_unit_vectors() {
        let h = materialize_operator(
            &ObservationOperatorSpec::SelectIndices(vec![0]),
            &OperatorDomain::ModelDim(3),
        )
        .unwrap();
        assert_eq!(h, DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]));
    }

    #[test]
    fn averaging_over_one_cell_equals_selection() {
        let geom = LoopGeometry::ring(4, 1, 1.0, 0.01, 1).unwrap();
        let center = geom.cell_center(2);
        let h = materialize_operator(
            &ObservationOperatorSpec::NeighborhoodAverage { centers: vec![center], radius: 0.1 },
            &OperatorDomain::Geometry(&geom),
        )
        .unwrap();
        let sel = materialize_operator(
            &ObservationOperatorSpec::SelectIndices(vec![2]),
            &OperatorDomain::Geometry(&geom),
        )
        .unwrap();
        assert_eq!(h, sel);
    }

    #[test]
    fn averaging_weights_are_uniform() {
        // Four cells stacked within the radius: weights 0.25 each.
        let centers = vec![
            [0.0, 0.0, 0.0],
            [0.1, 0.0, 0.0],
            [0.0, 0.1, 0.0],
            [0.1, 0.1, 0.0],
        ];
        let geom = LoopGeometry::new(centers, vec![0, 1, 2, 3], 4, 1.0, 1).unwrap();
        let h = materialize_operator(
            &ObservationOperatorSpec::NeighborhoodAverage { centers: vec![[0.05, 0.05, 0.0]], radius: 0.5 },
            &OperatorDomain::Geometry(&geom),
        )
        .unwrap();
        for c in 0..4 {
            assert_relative_eq!(h[(0, c)], 0.25);
        }
        assert_relative_eq!(h.row(0).sum(), 1.0);
    }

    #[test]
    fn empty_averaging_region_is_an_error() {
        let geom = LoopGeometry::ring(4, 1, 1.0, 0.01, 1).unwrap();
        let err = materialize_operator(
            &ObservationOperatorSpec::NeighborhoodAverage { centers: vec![[50.0, 0.0, 0.0]], radius: 0.1 },
            &OperatorDomain::Geometry(&geom),
        );
        assert!(matches!(err, Err(Error::EmptyRegion { center: 0 })));
    }

    fn short_truth() -> Trajectory {
        let model = Model::Lorenz63(Lorenz63Params::default());
        integrate(&model, &State::from_vec(vec![1.0, 2.0, 20.0]), &IntegratorConfig::default(), 2.0).unwrap()
    }

    #[test]
    fn noise_free_observations_sample_truth_exactly() {
        let truth = short_truth();
        let spec = ObservationOperatorSpec::SelectIndices(vec![0]);
        let obs = generate_synthetic_obs(
            &truth,
            &spec,
            &OperatorDomain::ModelDim(3),
            0.0,
            0.5,
            &mut stream(1, Domain::ObsNoise),
        )
        .unwrap();
        assert_eq!(obs.len(), 4);
        for r in &obs.rows {
            let idx = truth.nearest_stamp(r.time, 1e-9).unwrap();
            assert_eq!(r.value, truth.states[idx][0]);
        }
    }

    #[test]
    fn generated_noise_is_unbiased_with_requested_variance() {
        let truth = short_truth();
        let spec = ObservationOperatorSpec::SelectIndices(vec![0]);
        let noise_var: f64 = 0.05;
        let mut rng = stream(2, Domain::ObsNoise);
        let mut errors = Vec::new();
        // Many independent regenerations of a short window set.
        for _ in 0..2_000 {
            let obs = generate_synthetic_obs(
                &truth,
                &spec,
                &OperatorDomain::ModelDim(3),
                noise_var,
                0.5,
                &mut rng,
            )
            .unwrap();
            for r in &obs.rows {
                let idx = truth.nearest_stamp(r.time, 1e-9).unwrap();
                errors.push(r.value - truth.states[idx][0]);
            }
        }
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 3.0 * noise_var.sqrt() / n.sqrt(), "bias {mean}");
        assert!((var - noise_var).abs() / noise_var < 0.05, "variance {var}");
        // R records the requested variance exactly.
        let obs = generate_synthetic_obs(&truth, &spec, &OperatorDomain::ModelDim(3), noise_var, 0.5, &mut rng)
            .unwrap();
        assert_eq!(obs.rows[0].variance, noise_var);
    }

    #[test]
    fn observation_generation_is_deterministic() {
        let truth = short_truth();
        let spec = ObservationOperatorSpec::SelectIndices(vec![0, 1]);
        let a = generate_synthetic_obs(&truth, &spec, &OperatorDomain::ModelDim(3), 0.3, 0.25, &mut stream(9, Domain::ObsNoise)).unwrap();
        let b = generate_synthetic_obs(&truth, &spec, &OperatorDomain::ModelDim(3), 0.3, 0.25, &mut stream(9, Domain::ObsNoise)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn window_longer_than_span_is_an_error() {
        let truth = short_truth();
        let spec = ObservationOperatorSpec::SelectIndices(vec![0]);
        assert!(generate_synthetic_obs(&truth, &spec, &OperatorDomain::ModelDim(3), 0.0, 5.0, &mut stream(1, Domain::ObsNoise)).is_err());
    }

    #[test]
    fn observation_table_round_trip_is_bit_exact() {
        let truth = short_truth();
        let spec = ObservationOperatorSpec::SelectIndices(vec![0, 2]);
        let obs = generate_synthetic_obs(&truth, &spec, &OperatorDomain::ModelDim(3), 0.22360679, 0.25, &mut stream(4, Domain::ObsNoise)).unwrap();
        let text = obs.to_table_string();
        let back = ObservationSet::from_table_str(&text, obs.operator.clone()).unwrap();
        assert_eq!(obs, back);
        assert_eq!(text, back.to_table_string());
    }

    #[test]
    fn scaling_round_trips_and_matches_hand_value() {
        let spec = ScalingSpec::new(vec![300.0, 1.0, 1.0]).unwrap();
        let x = State::from_vec(vec![300.0, 2.0, -4.0]);
        let scaled = scale_state(&x, &spec).unwrap();
        assert_relative_eq!(scaled[0], 1.0);
        assert_relative_eq!(scaled[1], 2.0);
        let back = unscale_state(&scaled, &spec).unwrap();
        assert_relative_eq!((back - x).norm(), 0.0);

        // Unit divisors are the identity.
        let unit = ScalingSpec::new(vec![1.0]).unwrap();
        let y = State::from_vec(vec![5.0, -3.0]);
        assert_eq!(scale_state(&y, &unit).unwrap(), y);

        // Layout mismatch is reported.
        let bad = ScalingSpec::new(vec![1.0, 2.0]).unwrap();
        assert!(scale_state(&State::zeros(3), &bad).is_err());
    }

    #[test]
    fn slice_centered_places_one_sensor_per_slice() {
        let geom = LoopGeometry::ring(8, 3, 1.0, 0.05, 1).unwrap();
        let spec = place_sensors(
            &geom,
            &SensorNetwork { n_sensors: 8, placement: Placement::SliceCentered, averaging_radius: 0.01 },
        )
        .unwrap();
        match spec {
            ObservationOperatorSpec::SelectIndices(idx) => {
                let slices: Vec<usize> = idx.iter().map(|&i| geom.slice_of(i / geom.vars_per_cell())).collect();
                let mut sorted = slices.clone();
                sorted.sort_unstable();
                sorted.dedup();
                assert_eq!(sorted.len(), 8, "one sensor per slice, got {slices:?}");
            }
            other => panic!("expected selection, got {other:?}"),
        }
    }

    #[test]
    fn two_even_sensors_are_antipodal() {
        let geom = LoopGeometry::ring(8, 1, 1.0, 0.05, 1).unwrap();
        let spec = place_sensors(
            &geom,
            &SensorNetwork { n_sensors: 2, placement: Placement::EvenlySpaced, averaging_radius: 0.2 },
        )
        .unwrap();
        match spec {
            ObservationOperatorSpec::NeighborhoodAverage { centers, .. } => {
                let s0 = geom.slice_of(geom.nearest_cell(&centers[0]));
                let s1 = geom.slice_of(geom.nearest_cell(&centers[1]));
                assert_eq!(s0.abs_diff(s1), 4, "sensors at slices {s0} and {s1}");
            }
            other => panic!("expected averaging, got {other:?}"),
        }
    }

    #[test]
    fn staggered_alternates_walls() {
        let geom = LoopGeometry::ring(8, 3, 1.0, 0.05, 1).unwrap();
        let spec = place_sensors(
            &geom,
            &SensorNetwork { n_sensors: 4, placement: Placement::Staggered, averaging_radius: 0.01 },
        )
        .unwrap();
        match spec {
            ObservationOperatorSpec::SelectIndices(idx) => {
                // Radial distance from the loop center alternates sides.
                let radial: Vec<f64> = idx
                    .iter()
                    .map(|&i| {
                        let c = geom.cell_center(i / geom.vars_per_cell());
                        (c[0] * c[0] + c[1] * c[1]).sqrt() - geom.loop_radius()
                    })
                    .collect();
                for pair in radial.windows(2) {
                    assert!(pair[0] * pair[1] < 0.0, "offsets do not alternate: {radial:?}");
                }
            }
            other => panic!("expected selection, got {other:?}"),
        }
    }

    #[test]
    fn too_many_slice_sensors_is_an_error() {
        let geom = LoopGeometry::ring(4, 2, 1.0, 0.05, 1).unwrap();
        assert!(place_sensors(
            &geom,
            &SensorNetwork { n_sensors: 6, placement: Placement::SliceCentered, averaging_radius: 0.01 },
        )
        .is_err());
    }
}
