//! Imaging geometry, scene discretization and reflectivity phantoms.
//!
//! Pixels are indexed row-major: pixel `k = row * n + col` sits at
//! `x₁ = ox + (col − (n−1)/2)·Δx`, `x₂ = oy + (row − (n−1)/2)·Δx`, so the
//! centre of the pixel array is the configured origin offset.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

pub type Vec3 = Vector3<f64>;

pub type HeightFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Ground height ψ(x₁, x₂) in meters.
#[derive(Clone)]
pub enum Topography {
    Flat { height: f64 },
    Custom(HeightFn),
}

impl Topography {
    pub fn height(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Topography::Flat { height } => *height,
            Topography::Custom(f) => f(x1, x2),
        }
    }

    /// Constant height for flat ground, `None` otherwise.
    pub fn flat_height(&self) -> Option<f64> {
        match self {
            Topography::Flat { height } => Some(*height),
            Topography::Custom(_) => None,
        }
    }
}

impl Default for Topography {
    fn default() -> Self {
        Topography::Flat { height: 0.0 }
    }
}

impl fmt::Debug for Topography {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topography::Flat { height } => write!(f, "Flat({height} m)"),
            Topography::Custom(_) => f.write_str("Custom(<fn>)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SceneGrid {
    pixels_per_side: usize,
    pixel_spacing: f64,
    origin_offset: [f64; 2],
    topography: Topography,
}

impl SceneGrid {
    pub fn new(
        pixels_per_side: usize,
        pixel_spacing: f64,
        origin_offset: [f64; 2],
        topography: Topography,
    ) -> Result<Self> {
        if pixels_per_side == 0 {
            return Err(Error::InvalidConfig(
                "pixels_per_side must be at least 1".into(),
            ));
        }
        if !(pixel_spacing > 0.0 && pixel_spacing.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "pixel_spacing must be positive and finite, got {pixel_spacing}"
            )));
        }
        if !origin_offset.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("origin_offset must be finite".into()));
        }
        Ok(Self {
            pixels_per_side,
            pixel_spacing,
            origin_offset,
            topography,
        })
    }

    /// Flat ground at height zero, centred on the origin.
    pub fn centered(pixels_per_side: usize, pixel_spacing: f64) -> Result<Self> {
        Self::new(
            pixels_per_side,
            pixel_spacing,
            [0.0, 0.0],
            Topography::default(),
        )
    }

    pub fn pixels_per_side(&self) -> usize {
        self.pixels_per_side
    }

    pub fn pixel_spacing(&self) -> f64 {
        self.pixel_spacing
    }

    pub fn origin_offset(&self) -> [f64; 2] {
        self.origin_offset
    }

    pub fn topography(&self) -> &Topography {
        &self.topography
    }

    pub fn num_pixels(&self) -> usize {
        self.pixels_per_side * self.pixels_per_side
    }

    /// Side length covered by the pixel footprints.
    pub fn extent(&self) -> f64 {
        self.pixels_per_side as f64 * self.pixel_spacing
    }

    pub fn row_col(&self, k: usize) -> (usize, usize) {
        (k / self.pixels_per_side, k % self.pixels_per_side)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.pixels_per_side + col
    }

    pub fn pixel_xy(&self, k: usize) -> [f64; 2] {
        let (row, col) = self.row_col(k);
        let half = (self.pixels_per_side as f64 - 1.0) / 2.0;
        [
            self.origin_offset[0] + (col as f64 - half) * self.pixel_spacing,
            self.origin_offset[1] + (row as f64 - half) * self.pixel_spacing,
        ]
    }

    /// Pixel centre on the ground surface, `(x₁, x₂, ψ(x₁, x₂))`.
    pub fn pixel_center(&self, k: usize) -> Vec3 {
        let [x1, x2] = self.pixel_xy(k);
        Vec3::new(x1, x2, self.topography.height(x1, x2))
    }

    pub fn pixel_centers(&self) -> Vec<Vec3> {
        (0..self.num_pixels())
            .map(|k| self.pixel_center(k))
            .collect()
    }

    /// Index of the pixel whose centre is nearest to `(x1, x2)`, if that
    /// point falls inside the grid footprint.
    pub fn locate(&self, x1: f64, x2: f64) -> Option<usize> {
        let half = (self.pixels_per_side as f64 - 1.0) / 2.0;
        let col = ((x1 - self.origin_offset[0]) / self.pixel_spacing + half).round();
        let row = ((x2 - self.origin_offset[1]) / self.pixel_spacing + half).round();
        let n = self.pixels_per_side as f64;
        if col < 0.0 || row < 0.0 || col >= n || row >= n {
            return None;
        }
        Some(self.index(row as usize, col as usize))
    }

    /// Scene centre on the ground surface.
    pub fn center(&self) -> Vec3 {
        let [x1, x2] = self.origin_offset;
        Vec3::new(x1, x2, self.topography.height(x1, x2))
    }
}

/// Receiver flight path γ(s) over a closed parameter interval.
#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    /// `(r cos(s + offset), r sin(s + offset), altitude)`
    CircularArc {
        radius: f64,
        altitude: f64,
        interval: [f64; 2],
        offset: f64,
    },
    /// Constant-speed straight line from `start` at `s_a` to `end` at `s_b`.
    Linear {
        start: Vec3,
        end: Vec3,
        interval: [f64; 2],
    },
    /// Piecewise-linear interpolation through `(params[i], points[i])`.
    Waypoints { params: Vec<f64>, points: Vec<Vec3> },
}

fn check_interval(interval: [f64; 2]) -> Result<()> {
    if !(interval[0].is_finite() && interval[1].is_finite() && interval[0] < interval[1]) {
        return Err(Error::InvalidConfig(format!(
            "trajectory interval must satisfy s_a < s_b, got [{}, {}]",
            interval[0], interval[1]
        )));
    }
    Ok(())
}

impl Trajectory {
    pub fn circular(radius: f64, altitude: f64, interval: [f64; 2], offset: f64) -> Result<Self> {
        check_interval(interval)?;
        if !(radius > 0.0 && radius.is_finite() && altitude.is_finite() && offset.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "circular arc needs a positive radius and finite altitude/offset (r = {radius}, h = {altitude})"
            )));
        }
        Ok(Trajectory::CircularArc {
            radius,
            altitude,
            interval,
            offset,
        })
    }

    pub fn linear(start: Vec3, end: Vec3, interval: [f64; 2]) -> Result<Self> {
        check_interval(interval)?;
        if !(start.iter().chain(end.iter()).all(|v| v.is_finite())) {
            return Err(Error::InvalidConfig(
                "linear trajectory endpoints must be finite".into(),
            ));
        }
        Ok(Trajectory::Linear {
            start,
            end,
            interval,
        })
    }

    pub fn waypoints(params: Vec<f64>, points: Vec<Vec3>) -> Result<Self> {
        if params.len() < 2 || params.len() != points.len() {
            return Err(Error::InvalidConfig(
                "waypoint table needs at least two samples and matching lengths".into(),
            ));
        }
        if !params.windows(2).all(|w| w[0] < w[1]) || !params.iter().all(|p| p.is_finite()) {
            return Err(Error::InvalidConfig(
                "waypoint parameters must be finite and strictly increasing".into(),
            ));
        }
        Ok(Trajectory::Waypoints { params, points })
    }

    /// The same path with the parameter shifted by `shift`:
    /// the result at `s` equals `self` at `s + shift`.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        match self {
            Trajectory::CircularArc {
                radius,
                altitude,
                interval,
                offset,
            } => Trajectory::circular(*radius, *altitude, *interval, offset + shift),
            _ => Err(Error::InvalidConfig(
                "parameter shifts are only supported for circular arcs".into(),
            )),
        }
    }

    /// The same path with every position multiplied by `factor`, which
    /// scales ranges to the origin while keeping the look angles.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "trajectory scale must be positive, got {factor}"
            )));
        }
        Ok(match self {
            Trajectory::CircularArc {
                radius,
                altitude,
                interval,
                offset,
            } => Trajectory::CircularArc {
                radius: radius * factor,
                altitude: altitude * factor,
                interval: *interval,
                offset: *offset,
            },
            Trajectory::Linear {
                start,
                end,
                interval,
            } => Trajectory::Linear {
                start: start * factor,
                end: end * factor,
                interval: *interval,
            },
            Trajectory::Waypoints { params, points } => Trajectory::Waypoints {
                params: params.clone(),
                points: points.iter().map(|p| p * factor).collect(),
            },
        })
    }

    pub fn interval(&self) -> [f64; 2] {
        match self {
            Trajectory::CircularArc { interval, .. } | Trajectory::Linear { interval, .. } => {
                *interval
            }
            Trajectory::Waypoints { params, .. } => [params[0], params[params.len() - 1]],
        }
    }

    pub fn contains(&self, s: f64) -> bool {
        let [a, b] = self.interval();
        let slack = 1e-12 * (b - a).abs().max(a.abs()).max(b.abs()).max(1.0);
        s >= a - slack && s <= b + slack
    }

    fn check(&self, s: f64) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            let [a, b] = self.interval();
            Err(Error::OutOfRange {
                what: "aperture parameter s",
                value: s,
                min: a,
                max: b,
            })
        }
    }

    pub fn position(&self, s: f64) -> Result<Vec3> {
        self.check(s)?;
        Ok(self.position_unchecked(s))
    }

    pub fn velocity(&self, s: f64) -> Result<Vec3> {
        self.check(s)?;
        Ok(self.velocity_unchecked(s))
    }

    pub fn acceleration(&self, s: f64) -> Result<Vec3> {
        self.check(s)?;
        Ok(self.acceleration_unchecked(s))
    }

    pub(crate) fn position_unchecked(&self, s: f64) -> Vec3 {
        match self {
            Trajectory::CircularArc {
                radius,
                altitude,
                offset,
                ..
            } => {
                let (sin, cos) = (s + offset).sin_cos();
                Vec3::new(radius * cos, radius * sin, *altitude)
            }
            Trajectory::Linear {
                start,
                end,
                interval,
            } => {
                let t = (s - interval[0]) / (interval[1] - interval[0]);
                start + (end - start) * t
            }
            Trajectory::Waypoints { params, points } => {
                let i = segment(params, s);
                let t = (s - params[i]) / (params[i + 1] - params[i]);
                points[i] + (points[i + 1] - points[i]) * t
            }
        }
    }

    pub(crate) fn velocity_unchecked(&self, s: f64) -> Vec3 {
        match self {
            Trajectory::CircularArc { radius, offset, .. } => {
                let (sin, cos) = (s + offset).sin_cos();
                Vec3::new(-radius * sin, radius * cos, 0.0)
            }
            Trajectory::Linear {
                start,
                end,
                interval,
            } => (end - start) / (interval[1] - interval[0]),
            Trajectory::Waypoints { params, points } => {
                let i = segment(params, s);
                (points[i + 1] - points[i]) / (params[i + 1] - params[i])
            }
        }
    }

    /// Second derivative; piecewise-linear paths report zero inside segments.
    pub(crate) fn acceleration_unchecked(&self, s: f64) -> Vec3 {
        match self {
            Trajectory::CircularArc { radius, offset, .. } => {
                let (sin, cos) = (s + offset).sin_cos();
                Vec3::new(-radius * cos, -radius * sin, 0.0)
            }
            Trajectory::Linear { .. } | Trajectory::Waypoints { .. } => Vec3::zeros(),
        }
    }
}

fn segment(params: &[f64], s: f64) -> usize {
    let last = params.len() - 2;
    match params.binary_search_by(|p| p.total_cmp(&s)) {
        Ok(i) => i.min(last),
        Err(i) => i.saturating_sub(1).min(last),
    }
}

/// Stationary transmitter of opportunity at `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitterModel {
    location: Vec3,
}

impl TransmitterModel {
    pub fn new(location: Vec3) -> Result<Self> {
        let range = location.norm();
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::DegenerateGeometry(format!(
                "transmitter range must be positive and finite, got {range}"
            )));
        }
        Ok(Self { location })
    }

    pub fn location(&self) -> Vec3 {
        self.location
    }

    pub fn range(&self) -> f64 {
        self.location.norm()
    }

    /// Far-field direction ŷ = y / |y|.
    pub fn direction(&self) -> Vec3 {
        self.location / self.range()
    }
}

/// Angle between the transmitter position vector and its projection onto the
/// (flat) ground plane, in radians.
pub fn elevation_angle(tx: &TransmitterModel, grid: &SceneGrid) -> Result<f64> {
    let ground = grid.topography().flat_height().ok_or_else(|| {
        Error::InvalidConfig("elevation angle is only defined for flat topography".into())
    })?;
    let y = tx.location();
    let horizontal = y.x.hypot(y.y);
    let alpha = (y.z - ground).atan2(horizontal);
    if alpha <= 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "transmitter at or below the ground plane (elevation {:.6} deg); the resolution bound diverges",
            alpha.to_degrees()
        )));
    }
    Ok(alpha)
}

#[derive(Debug, Clone)]
pub struct ReflectivityImage {
    grid: SceneGrid,
    values: Vec<C64>,
}

impl ReflectivityImage {
    pub fn new(grid: SceneGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.num_pixels() {
            return Err(Error::Dimension {
                context: "reflectivity image",
                expected: grid.num_pixels(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SceneGrid) -> Self {
        let n = grid.num_pixels();
        Self {
            grid,
            values: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn grid(&self) -> &SceneGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Σₖ |ρ̃ₖ|²
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Relative placement `(row offset, col offset, level index)` of the default
/// three-level extended target around the grid centre.
const DEFAULT_TARGET: [(isize, isize, usize); 12] = [
    (-2, -1, 2),
    (-2, 0, 2),
    (-2, 1, 2),
    (-1, -1, 0),
    (-1, 0, 0),
    (0, -1, 0),
    (0, 0, 0),
    (1, -2, 1),
    (1, -1, 1),
    (1, 0, 1),
    (1, 1, 1),
    (1, 2, 1),
];

pub const DEFAULT_PHANTOM_LEVELS: [f64; 3] = [1.0, 0.8, 0.4];

/// Contiguous 12-pixel extended target with levels 1.0 (4 px), 0.8 (5 px)
/// and 0.4 (3 px); its energy is 7.68.
pub fn default_phantom(grid: &SceneGrid) -> Result<ReflectivityImage> {
    phantom_with_levels(grid, DEFAULT_PHANTOM_LEVELS)
}

pub fn phantom_with_levels(grid: &SceneGrid, levels: [f64; 3]) -> Result<ReflectivityImage> {
    let n = grid.pixels_per_side();
    if n < 5 {
        return Err(Error::InvalidConfig(format!(
            "the default phantom needs at least a 5x5 grid, got {n}x{n}"
        )));
    }
    let center = ((n - 1) / 2) as isize;
    let mut values = vec![C64::new(0.0, 0.0); grid.num_pixels()];
    for &(dr, dc, level) in &DEFAULT_TARGET {
        let k = grid.index((center + dr) as usize, (center + dc) as usize);
        values[k] = C64::new(levels[level], 0.0);
    }
    ReflectivityImage::new(grid.clone(), values)
}

/// Lifted scene ρ = ρ̃ρ̃ᴴ on an `Npix × Npix` grid. Column-major storage, so
/// the backing slice is the column-stacked vectorization.
#[derive(Debug, Clone)]
pub struct KroneckerMatrix {
    grid: SceneGrid,
    entries: CMatrix,
}

impl KroneckerMatrix {
    pub fn new(grid: SceneGrid, entries: CMatrix) -> Result<Self> {
        let n = grid.num_pixels();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::Dimension {
                context: "Kronecker matrix side",
                expected: n,
                found: if entries.nrows() != n {
                    entries.nrows()
                } else {
                    entries.ncols()
                },
            });
        }
        Ok(Self { grid, entries })
    }

    pub fn zeros(grid: SceneGrid) -> Self {
        let n = grid.num_pixels();
        Self {
            grid,
            entries: DMatrix::zeros(n, n),
        }
    }

    /// Rebuilds a matrix from its column-stacked vectorization.
    pub fn from_vec(grid: SceneGrid, vec: &[C64]) -> Result<Self> {
        let n = grid.num_pixels();
        if vec.len() != n * n {
            return Err(Error::Dimension {
                context: "vectorized Kronecker matrix",
                expected: n * n,
                found: vec.len(),
            });
        }
        Ok(Self {
            grid,
            entries: DMatrix::from_column_slice(n, n, vec),
        })
    }

    pub fn grid(&self) -> &SceneGrid {
        &self.grid
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    /// Column-stacked vectorization; entry `(k, k')` sits at `k + Npix·k'`.
    pub fn as_vec(&self) -> &[C64] {
        self.entries.as_slice()
    }

    pub fn side(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    /// max |ρ − ρᴴ| over entries.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.side();
        let mut worst: f64 = 0.0;
        for c in 0..n {
            for r in 0..=c {
                worst = worst.max((self.entries[(r, c)] - self.entries[(c, r)].conj()).norm());
            }
        }
        worst
    }
}

/// ρ = ρ̃ρ̃ᴴ
pub fn kronecker_scene(img: &ReflectivityImage) -> KroneckerMatrix {
    let v = img.values();
    let n = v.len();
    let entries = DMatrix::from_fn(n, n, |r, c| v[r] * v[c].conj());
    KroneckerMatrix {
        grid: img.grid().clone(),
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn reference_arc(offset: f64) -> Trajectory {
        Trajectory::circular(7000.0, 5000.0, [0.0, FRAC_PI_2], offset).unwrap()
    }

    #[test]
    fn grid_11x11_spans_110m() {
        let g = SceneGrid::centered(11, 10.0).unwrap();
        assert_eq!(g.num_pixels(), 121);
        assert_eq!(g.extent(), 110.0);
        assert_eq!(g.pixel_xy(0), [-50.0, -50.0]);
        assert_eq!(g.pixel_xy(120), [50.0, 50.0]);
    }

    #[test]
    fn single_pixel_grid_sits_at_origin() {
        let g = SceneGrid::centered(1, 5.0).unwrap();
        assert_eq!(g.num_pixels(), 1);
        assert_eq!(g.pixel_center(0), Vec3::zeros());
    }

    #[test]
    fn grid_3x3_unit_spacing() {
        let g = SceneGrid::centered(3, 1.0).unwrap();
        let xs: Vec<[f64; 2]> = (0..9).map(|k| g.pixel_xy(k)).collect();
        for x1 in [-1.0, 0.0, 1.0] {
            for x2 in [-1.0, 0.0, 1.0] {
                assert!(xs.contains(&[x1, x2]));
            }
        }
    }

    #[test]
    fn offset_grid_places_centre_at_offset() {
        let g = SceneGrid::new(11, 10.0, [55.0, 55.0], Topography::default()).unwrap();
        assert_eq!(g.pixel_xy(0), [5.0, 5.0]);
        assert_eq!(g.pixel_xy(120), [105.0, 105.0]);
        assert_eq!(g.center(), Vec3::new(55.0, 55.0, 0.0));
    }

    #[test]
    fn grid_rejects_bad_dimensions() {
        assert!(matches!(
            SceneGrid::centered(0, 1.0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            SceneGrid::centered(3, 0.0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            SceneGrid::centered(3, -2.0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn custom_topography_sets_height() {
        let topo = Topography::Custom(Arc::new(|x1, x2| 0.1 * x1 + 0.2 * x2));
        let g = SceneGrid::new(3, 10.0, [0.0, 0.0], topo).unwrap();
        assert!((g.pixel_center(8).z - 3.0).abs() < 1e-12);
    }

    #[test]
    fn reference_arc_positions() {
        let p = reference_arc(0.0).position(0.0).unwrap();
        assert!((p - Vec3::new(7000.0, 0.0, 5000.0)).norm() < 1e-9);
        let p = reference_arc(0.0).position(FRAC_PI_2).unwrap();
        assert!((p - Vec3::new(0.0, 7000.0, 5000.0)).norm() < 1e-9);
        let p = reference_arc(FRAC_PI_4).position(0.0).unwrap();
        let c = 7000.0 * FRAC_PI_4.cos();
        assert!((p - Vec3::new(c, c, 5000.0)).norm() < 1e-9);
    }

    #[test]
    fn shifted_arc_matches_offset_evaluation() {
        let a = reference_arc(0.0);
        let b = a.shifted(FRAC_PI_4).unwrap();
        let s = 0.3;
        assert!((b.position(s).unwrap() - a.position_unchecked(s + FRAC_PI_4)).norm() < 1e-9);
    }

    #[test]
    fn scaled_arc_scales_positions() {
        let a = reference_arc(0.0);
        let b = a.scaled(10.0).unwrap();
        assert!((b.position(0.5).unwrap() - a.position(0.5).unwrap() * 10.0).norm() < 1e-6);
        assert!(a.scaled(0.0).is_err());
    }

    #[test]
    fn position_outside_interval_is_an_error() {
        let a = reference_arc(0.0);
        assert!(matches!(a.position(-0.1), Err(Error::OutOfRange { .. })));
        assert!(matches!(a.position(2.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn linear_and_waypoint_paths() {
        let l = Trajectory::linear(
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(10.0, 0.0, 1.0),
            [0.0, 2.0],
        )
        .unwrap();
        assert!((l.position(1.0).unwrap() - Vec3::new(5.0, 0.0, 1.0)).norm() < 1e-12);
        assert!((l.velocity(1.0).unwrap() - Vec3::new(5.0, 0.0, 0.0)).norm() < 1e-12);
        let w = Trajectory::waypoints(
            vec![0.0, 1.0, 3.0],
            vec![
                Vec3::zeros(),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 4.0, 0.0),
            ],
        )
        .unwrap();
        assert!((w.position(2.0).unwrap() - Vec3::new(1.0, 2.0, 0.0)).norm() < 1e-12);
        assert!((w.position(3.0).unwrap() - Vec3::new(1.0, 4.0, 0.0)).norm() < 1e-12);
        assert!(Trajectory::waypoints(vec![0.0, 0.0], vec![Vec3::zeros(); 2]).is_err());
    }

    #[test]
    fn arc_velocity_matches_finite_difference() {
        let a = reference_arc(0.2);
        let h = 1e-6;
        let s = 0.7;
        let fd = (a.position_unchecked(s + h) - a.position_unchecked(s - h)) / (2.0 * h);
        assert!((fd - a.velocity_unchecked(s)).norm() < 1e-4);
        let fd2 = (a.velocity_unchecked(s + h) - a.velocity_unchecked(s - h)) / (2.0 * h);
        assert!((fd2 - a.acceleration_unchecked(s)).norm() < 1e-4);
    }

    #[test]
    fn transmitter_direction_is_unit() {
        let tx = TransmitterModel::new(Vec3::new(12e3, 12e3, 5e3)).unwrap();
        assert!((tx.direction().norm() - 1.0).abs() < 1e-15);
        assert!(TransmitterModel::new(Vec3::zeros()).is_err());
    }

    #[test]
    fn elevation_angles() {
        let g = SceneGrid::centered(11, 10.0).unwrap();
        let tx = TransmitterModel::new(Vec3::new(12e3, 12e3, 5e3)).unwrap();
        let a = elevation_angle(&tx, &g).unwrap().to_degrees();
        // asin(5 / |(12, 12, 5)|)
        assert!((a - 16.41644).abs() < 1e-4, "{a}");
        assert!((a - 16.4832).abs() < 0.07);
        let zenith = TransmitterModel::new(Vec3::new(0.0, 0.0, 3.0)).unwrap();
        assert!((elevation_angle(&zenith, &g).unwrap() - FRAC_PI_2).abs() < 1e-15);
        let diag = TransmitterModel::new(Vec3::new(1e3, 0.0, 1e3)).unwrap();
        assert!((elevation_angle(&diag, &g).unwrap() - FRAC_PI_4).abs() < 1e-15);
        let ground = TransmitterModel::new(Vec3::new(1e3, 0.0, 0.0)).unwrap();
        assert!(matches!(
            elevation_angle(&ground, &g),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn default_phantom_energy_and_levels() {
        let g = SceneGrid::centered(11, 10.0).unwrap();
        let p = default_phantom(&g).unwrap();
        assert!((p.energy() - 7.68).abs() < 1e-12);
        let mut levels: Vec<f64> = p
            .values()
            .iter()
            .filter(|v| v.norm() > 0.0)
            .map(|v| v.re)
            .collect();
        assert_eq!(levels.len(), 12);
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        assert_eq!(levels, vec![0.4, 0.8, 1.0]);
        assert!(default_phantom(&SceneGrid::centered(4, 1.0).unwrap()).is_err());
        assert!(
            (default_phantom(&SceneGrid::centered(5, 1.0).unwrap())
                .unwrap()
                .energy()
                - 7.68)
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn default_phantom_is_contiguous() {
        let g = SceneGrid::centered(11, 10.0).unwrap();
        let p = default_phantom(&g).unwrap();
        let support: Vec<usize> = (0..121).filter(|&k| p.values()[k].norm() > 0.0).collect();
        let mut seen = vec![support[0]];
        let mut frontier = vec![support[0]];
        while let Some(k) = frontier.pop() {
            let (r, c) = g.row_col(k);
            for &j in &support {
                let (rj, cj) = g.row_col(j);
                if r.abs_diff(rj) + c.abs_diff(cj) == 1 && !seen.contains(&j) {
                    seen.push(j);
                    frontier.push(j);
                }
            }
        }
        assert_eq!(seen.len(), support.len());
    }

    #[test]
    fn zero_image_has_no_energy() {
        let g = SceneGrid::centered(7, 1.0).unwrap();
        assert_eq!(ReflectivityImage::zeros(g).energy(), 0.0);
    }

    #[test]
    fn kronecker_of_phantom() {
        let g = SceneGrid::centered(11, 10.0).unwrap();
        let r = kronecker_scene(&default_phantom(&g).unwrap());
        assert_eq!(r.side(), 121);
        assert!((r.trace() - 7.68).abs() < 1e-12);
        let eig = crate::linalg::hermitian_eigen(r.entries()).unwrap();
        assert!(eig.values[1].abs() < 1e-12 * eig.values[0]);
    }

    #[test]
    fn kronecker_of_indicator_and_zero() {
        let g = SceneGrid::centered(3, 1.0).unwrap();
        let mut v = vec![C64::new(0.0, 0.0); 9];
        v[3] = C64::new(1.0, 0.0);
        let r = kronecker_scene(&ReflectivityImage::new(g.clone(), v).unwrap());
        for (idx, z) in r.as_vec().iter().enumerate() {
            let want = if idx == 3 + 9 * 3 { 1.0 } else { 0.0 };
            assert_eq!(*z, C64::new(want, 0.0));
        }
        let z = kronecker_scene(&ReflectivityImage::zeros(g));
        assert_eq!(z.frobenius_norm(), 0.0);
    }

    #[test]
    fn image_length_is_checked() {
        let g = SceneGrid::centered(3, 1.0).unwrap();
        assert!(matches!(
            ReflectivityImage::new(g, vec![C64::new(0.0, 0.0); 8]),
            Err(Error::Dimension { .. })
        ));
    }

    proptest! {
        #[test]
        fn pixel_index_round_trips(n in 1usize..20, spacing in 0.1f64..50.0, ox in -100.0f64..100.0, oy in -100.0f64..100.0) {
            let g = SceneGrid::new(n, spacing, [ox, oy], Topography::default()).unwrap();
            for k in 0..g.num_pixels() {
                let [x1, x2] = g.pixel_xy(k);
                prop_assert_eq!(g.locate(x1, x2), Some(k));
            }
        }

        #[test]
        fn arc_preserves_radius_and_altitude(s in 0.0f64..FRAC_PI_2, offset in -3.0f64..3.0) {
            let a = Trajectory::circular(7000.0, 5000.0, [0.0, FRAC_PI_2], offset).unwrap();
            let p = a.position(s).unwrap();
            prop_assert!((p.x.hypot(p.y) - 7000.0).abs() <= 1e-9 * 7000.0);
            prop_assert!((p.z - 5000.0).abs() <= 1e-9 * 5000.0);
        }

        #[test]
        fn kronecker_is_hermitian_psd_with_energy_trace(
            parts in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 9)
        ) {
            let g = SceneGrid::centered(3, 1.0).unwrap();
            let v: Vec<C64> = parts.iter().map(|&(a, b)| C64::new(a, b)).collect();
            let img = ReflectivityImage::new(g, v).unwrap();
            let r = kronecker_scene(&img);
            prop_assert_eq!(r.hermitian_defect(), 0.0);
            let energy = img.energy();
            prop_assert!((r.trace() - energy).abs() <= 1e-12 * energy.max(1e-300));
            let eig = crate::linalg::hermitian_eigen(r.entries()).unwrap();
            let fro = r.frobenius_norm();
            prop_assert!(eig.values.iter().all(|&l| l >= -1e-12 * fro));
        }
    }
}
