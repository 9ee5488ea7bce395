//! Input encoding for the lane model and the local frame that predictions
//! and targets live in.
//!
//! Everything is expressed relative to the agent's last observed position:
//! xy values are offsets from it, longitudinal values are offsets from its
//! arc-length projection onto the anchor. The lateral offset n is kept as-is.

use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::geometry::{NtCoord, NtJacobian, Point2, Polyline, XyJacobian};

/// Local coordinate frame of one training sample: the anchor plus the
/// centering offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorFrame {
    pub anchor: Polyline,
    pub origin: Point2,
    pub l_origin: f64,
}

impl AnchorFrame {
    pub fn new(anchor: Polyline, origin: Point2) -> Self {
        let l_origin = anchor.project_xy_to_nt(origin).l;
        Self {
            anchor,
            origin,
            l_origin,
        }
    }

    /// Local nt of an absolute point.
    pub fn nt_of(&self, p: Point2) -> NtCoord {
        let c = self.anchor.project_xy_to_nt(p);
        NtCoord::new(c.n, c.l - self.l_origin)
    }

    /// Local xy of an absolute point.
    pub fn xy_of(&self, p: Point2) -> (f64, f64) {
        (p.x - self.origin.x, p.y - self.origin.y)
    }

    /// Absolute point from local xy.
    pub fn xy_to_abs(&self, x: f64, y: f64) -> Point2 {
        Point2::new(x + self.origin.x, y + self.origin.y)
    }

    /// Convert a local xy prediction to local nt, with the Jacobian
    /// d(n,l)/d(x,y). The centering offsets are constants, so the Jacobian
    /// is that of the underlying projection.
    pub fn local_xy_to_nt(&self, x: f64, y: f64) -> (NtCoord, NtJacobian) {
        let (c, jac) = self.anchor.project_with_jacobian(self.xy_to_abs(x, y));
        (NtCoord::new(c.n, c.l - self.l_origin), jac)
    }

    /// Convert a local nt prediction to local xy, with the Jacobian
    /// d(x,y)/d(n,l).
    pub fn local_nt_to_xy(&self, n: f64, l: f64) -> ((f64, f64), XyJacobian) {
        let (p, jac) = self
            .anchor
            .nt_to_xy_with_jacobian(NtCoord::new(n, l + self.l_origin));
        ((p.x - self.origin.x, p.y - self.origin.y), jac)
    }

    /// Flattened local nt ground truth of a trajectory, (n, l) per step.
    pub fn nt_series(&self, points: &[Point2]) -> Vec<f64> {
        points
            .iter()
            .flat_map(|&p| {
                let c = self.nt_of(p);
                [c.n, c.l]
            })
            .collect()
    }

    /// Flattened local xy ground truth of a trajectory, (x, y) per step.
    pub fn xy_series(&self, points: &[Point2]) -> Vec<f64> {
        points
            .iter()
            .flat_map(|&p| {
                let (x, y) = self.xy_of(p);
                [x, y]
            })
            .collect()
    }

    /// Local xy series back to absolute points.
    pub fn xy_series_to_abs(&self, flat: &[f64]) -> Vec<Point2> {
        flat.chunks(2)
            .map(|c| self.xy_to_abs(c[0], c[1]))
            .collect()
    }

    /// Local nt series converted to absolute points via the anchor.
    pub fn nt_series_to_abs(&self, flat: &[f64]) -> Vec<Point2> {
        flat.chunks(2)
            .map(|c| {
                self.anchor
                    .nt_to_xy(NtCoord::new(c[0], c[1] + self.l_origin))
            })
            .collect()
    }
}

/// Flattened per-agent model input: (x, y, n, l, availability) per observed
/// timestep, followed by the resampled anchor points. Metric values are
/// multiplied by [`INPUT_SCALE`] so the network sees O(1) features; targets
/// stay in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedInput {
    pub values: Vec<f64>,
    pub t_obs: usize,
    pub anchor_points: usize,
}

/// Fixed scale applied to metric input features (1/m).
pub const INPUT_SCALE: f64 = 0.1;

impl EncodedInput {
    pub fn dim(t_obs: usize, anchor_points: usize) -> usize {
        t_obs * 5 + anchor_points * 2
    }
}

/// Encode one agent against its anchor. `availability` marks timesteps with
/// valid observations (all true for the synthetic generators); masked steps
/// contribute zeros.
pub fn encode_agent(
    past: &[Point2],
    availability: &[bool],
    anchor: &Polyline,
    anchor_points: usize,
) -> Result<(EncodedInput, AnchorFrame), LearnError> {
    if past.is_empty() || availability.len() != past.len() {
        return Err(LearnError::BadConfig(
            "past and availability must be non-empty and aligned".into(),
        ));
    }
    let frame = AnchorFrame::new(anchor.clone(), *past.last().unwrap());
    let s = INPUT_SCALE;
    let mut values = Vec::with_capacity(EncodedInput::dim(past.len(), anchor_points));
    for (&p, &ok) in past.iter().zip(availability) {
        if ok {
            let (x, y) = frame.xy_of(p);
            let c = frame.nt_of(p);
            values.extend([s * x, s * y, s * c.n, s * c.l, 1.0]);
        } else {
            values.extend([0.0; 5]);
        }
    }
    let resampled = anchor.resample(anchor_points)?;
    for p in resampled.points() {
        let (x, y) = frame.xy_of(*p);
        values.extend([s * x, s * y]);
    }
    Ok((
        EncodedInput {
            values,
            t_obs: past.len(),
            anchor_points,
        },
        frame,
    ))
}
