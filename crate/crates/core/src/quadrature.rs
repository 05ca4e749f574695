//! Symmetric quadrature rules on the reference tetrahedron.
//!
//! Points are barycentric `(L0, L1, L2, L3)`; weights sum to 1/6, the
//! volume of the reference element `{ξ, η, ζ ≥ 0, ξ + η + ζ ≤ 1}`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TetRule {
    /// 4 points, exact to degree 2.
    FourPoint,
    /// Keast's 11 points, exact to degree 4. Has one negative weight.
    #[default]
    ElevenPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub bary: [f64; 4],
    pub weight: f64,
}

impl TetRule {
    /// Rule for a material-mapping order: 1 → 4 points, 2 → 11 points.
    pub fn from_order(order: u8) -> Result<Self> {
        match order {
            1 => Ok(TetRule::FourPoint),
            2 => Ok(TetRule::ElevenPoint),
            o => Err(Error::InvalidInput(format!("quadrature order must be 1 or 2, got {o}"))),
        }
    }

    pub fn points(self) -> Vec<QuadPoint> {
        match self {
            TetRule::FourPoint => {
                let a = (5.0 + 3.0 * 5f64.sqrt()) / 20.0;
                let b = (5.0 - 5f64.sqrt()) / 20.0;
                (0..4)
                    .map(|i| {
                        let mut bary = [b; 4];
                        bary[i] = a;
                        QuadPoint { bary, weight: 1.0 / 24.0 }
                    })
                    .collect()
            }
            TetRule::ElevenPoint => {
                let mut pts = vec![QuadPoint {
                    bary: [0.25; 4],
                    weight: -74.0 / 5625.0,
                }];
                let (a, b) = (11.0 / 14.0, 1.0 / 14.0);
                for i in 0..4 {
                    let mut bary = [b; 4];
                    bary[i] = a;
                    pts.push(QuadPoint {
                        bary,
                        weight: 343.0 / 45000.0,
                    });
                }
                let r = (5.0f64 / 14.0).sqrt();
                let (c, d) = ((1.0 + r) / 4.0, (1.0 - r) / 4.0);
                for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
                    let mut bary = [d; 4];
                    bary[i] = c;
                    bary[j] = c;
                    pts.push(QuadPoint {
                        bary,
                        weight: 56.0 / 2250.0,
                    });
                }
                pts
            }
        }
    }
}
