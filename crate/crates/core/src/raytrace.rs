//! Location-specific fixed channel responses from an image-source model of a
//! rectangular room.
//!
//! Every image of the transmitter contributes `Γ^b e^{-j2π f d / c} / d`,
//! where `b` is its reflection count and `d` its distance to the receiver.
//! Reflection is frequency-flat and angle-independent; antennas are
//! isotropic. An overall amplitude `gain` scales every response.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::ChannelParams;
use crate::error::{ensure, Error, Result};

pub type Position = [f64; 3];

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomScene {
    /// `(L_x, L_y, L_z)` in meters; the room spans `[0, L]` on each axis.
    pub dimensions: [f64; 3],
    /// Complex reflection coefficient applied per bounce.
    pub wall_reflectivity: Complex64,
    /// Highest total reflection count enumerated.
    pub max_order: u32,
    /// Propagation speed, m/s.
    pub speed: f64,
    /// Amplitude scale applied to every path (antenna gains, excess loss).
    pub gain: f64,
}

impl Default for RoomScene {
    fn default() -> Self {
        Self {
            dimensions: [10.0, 8.0, 3.0],
            wall_reflectivity: Complex64::from_polar(0.7, PI),
            max_order: 4,
            speed: SPEED_OF_LIGHT,
            gain: 1.0,
        }
    }
}

impl RoomScene {
    pub fn validate(&self) -> Result<()> {
        ensure(self.dimensions.iter().all(|&d| d.is_finite() && d > 0.0), || {
            format!("room dimensions {:?} must be positive", self.dimensions)
        })?;
        ensure(self.wall_reflectivity.norm() <= 1.0, || {
            format!("|reflectivity| = {} exceeds 1", self.wall_reflectivity.norm())
        })?;
        ensure(self.speed > 0.0, || format!("propagation speed {} must be positive", self.speed))?;
        ensure(self.gain.is_finite() && self.gain > 0.0, || format!("gain {} must be positive", self.gain))
    }

    pub fn contains(&self, p: &Position) -> bool {
        p.iter().zip(&self.dimensions).all(|(&x, &l)| x > 0.0 && x < l)
    }
}

/// One mirror image of a source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSource {
    pub position: Position,
    pub bounces: u32,
}

/// Coordinate of lattice image `i` of `x` in `[0, l]`: even `i` translate,
/// odd `i` mirror. `|i|` reflections.
fn image_coord(i: i64, x: f64, l: f64) -> f64 {
    if i.rem_euclid(2) == 0 {
        i as f64 * l + x
    } else {
        (i + 1) as f64 * l - x
    }
}

/// All images with at most `scene.max_order` reflections, line of sight
/// first.
pub fn image_sources(scene: &RoomScene, source: &Position) -> Vec<ImageSource> {
    let k = scene.max_order as i64;
    let mut out = Vec::new();
    for i in -k..=k {
        let rem_i = k - i.abs();
        for j in -rem_i..=rem_i {
            let rem_j = rem_i - j.abs();
            for l in -rem_j..=rem_j {
                let position = [
                    image_coord(i, source[0], scene.dimensions[0]),
                    image_coord(j, source[1], scene.dimensions[1]),
                    image_coord(l, source[2], scene.dimensions[2]),
                ];
                out.push(ImageSource { position, bounces: (i.abs() + j.abs() + l.abs()) as u32 });
            }
        }
    }
    out.sort_by_key(|s| s.bounces);
    out
}

fn distance(a: &Position, b: &Position) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Fixed (time-averaged) response between `tx` and `rx` at the `M` tones of
/// `params`.
pub fn fixed_response(
    scene: &RoomScene,
    tx: &Position,
    rx: &Position,
    params: &ChannelParams,
) -> Result<Vec<Complex64>> {
    scene.validate()?;
    if !scene.contains(tx) || !scene.contains(rx) {
        return Err(Error::DegenerateGeometry(format!("endpoints {tx:?} and {rx:?} must lie inside the room")));
    }
    if distance(tx, rx) == 0.0 {
        return Err(Error::DegenerateGeometry("transmitter and receiver coincide".into()));
    }
    let freqs = params.tone_frequencies();
    let mut h = vec![Complex64::new(0.0, 0.0); freqs.len()];
    let mut amp_by_order = vec![Complex64::new(scene.gain, 0.0)];
    for b in 1..=scene.max_order as usize {
        amp_by_order.push(amp_by_order[b - 1] * scene.wall_reflectivity);
    }
    for img in image_sources(scene, tx) {
        let d = distance(&img.position, rx);
        let amp = amp_by_order[img.bounces as usize] / d;
        let delay = d / scene.speed;
        for (hm, &f) in h.iter_mut().zip(&freqs) {
            let cycles = (f * delay).rem_euclid(1.0);
            *hm += amp * Complex64::from_polar(1.0, -2.0 * PI * cycles);
        }
    }
    Ok(h)
}

/// Horizontal grid of candidate transmitter positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// `(x, y)` of the first grid point, meters.
    pub origin: [f64; 2],
    /// Separation between neighbors, meters.
    pub spacing: f64,
    /// Points along x and y.
    pub counts: (usize, usize),
    /// Common height of all points, meters.
    pub height: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.spacing > 0.0 && self.spacing.is_finite(), || {
            format!("grid spacing {} must be positive", self.spacing)
        })?;
        if self.counts.0 == 0 || self.counts.1 == 0 {
            return Err(Error::EmptyGrid);
        }
        Ok(())
    }

    /// `N_s`.
    pub fn len(&self) -> usize {
        self.counts.0 * self.counts.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in row-major order (x fastest).
    pub fn points(&self) -> Vec<Position> {
        let mut pts = Vec::with_capacity(self.len());
        for j in 0..self.counts.1 {
            for i in 0..self.counts.0 {
                pts.push([
                    self.origin[0] + i as f64 * self.spacing,
                    self.origin[1] + j as f64 * self.spacing,
                    self.height,
                ]);
            }
        }
        pts
    }
}

/// Fixed responses from every grid point to `bob`, in grid order.
pub fn grid_responses(
    scene: &RoomScene,
    grid: &GridSpec,
    bob: &Position,
    params: &ChannelParams,
) -> Result<Vec<Vec<Complex64>>> {
    grid.validate()?;
    grid.points().par_iter().map(|p| fixed_response(scene, p, bob, params)).collect()
}

/// Root-mean-square magnitude over a set of responses and all their tones.
pub fn rms_magnitude(responses: &[Vec<Complex64>]) -> f64 {
    let count: usize = responses.iter().map(Vec::len).sum();
    if count == 0 {
        return 0.0;
    }
    let power: f64 = responses.iter().flatten().map(|h| h.norm_sqr()).sum();
    (power / count as f64).sqrt()
}

/// Room-averaged response magnitude over all grid points and tones.
pub fn room_average_gain(
    scene: &RoomScene,
    grid: &GridSpec,
    bob: &Position,
    params: &ChannelParams,
) -> Result<f64> {
    Ok(rms_magnitude(&grid_responses(scene, grid, bob, params)?))
}
