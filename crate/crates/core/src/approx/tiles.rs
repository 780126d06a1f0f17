use crate::error::{Error, Result};

pub const MAX_TILINGS: usize = 16;
const MAX_DIMS: usize = 8;

/// Active feature indices, one per tiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Features {
    indices: [u32; MAX_TILINGS],
    len: u8,
}

impl Features {
    pub fn as_slice(&self) -> &[u32] {
        &self.indices[..self.len as usize]
    }

    /// Number of tilings in which both feature sets share a tile.
    pub fn overlap(&self, other: &Features) -> usize {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .filter(|(a, b)| a == b)
            .count()
    }
}

/// Grid tile coder over a bounded box.
///
/// Each tiling has `tiles_per_dimension + 1` tiles per dimension so the
/// shifted grids still cover the box. Tiling `k` is displaced by
/// `k / (tilings · tiles_per_dimension)` of each range.
#[derive(Debug, Clone, PartialEq)]
pub struct TileCoder {
    tilings: usize,
    tiles_per_dimension: usize,
    bounds: Vec<(f64, f64)>,
    stride: usize,
}

impl TileCoder {
    pub fn new(tilings: usize, tiles_per_dimension: usize, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if tilings == 0 || tilings > MAX_TILINGS {
            return Err(Error::invalid("tilings", format!("must be in 1..={MAX_TILINGS}")));
        }
        if tiles_per_dimension == 0 {
            return Err(Error::invalid("tiles_per_dimension", "must be at least 1"));
        }
        if bounds.is_empty() || bounds.len() > MAX_DIMS || bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::invalid("bounds", format!("need 1..={MAX_DIMS} ordered intervals")));
        }
        let stride = (tiles_per_dimension + 1).pow(bounds.len() as u32);
        if tilings * stride > u32::MAX as usize {
            return Err(Error::invalid("tiles_per_dimension", "feature space too large"));
        }
        Ok(TileCoder {
            tilings,
            tiles_per_dimension,
            bounds,
            stride,
        })
    }

    /// 8 tilings of 8×8 tiles over the Mountain Car box.
    pub fn mountain_car() -> Self {
        Self::new(8, 8, vec![(-1.2, 0.6), (-0.07, 0.07)]).expect("static configuration")
    }

    pub fn tilings(&self) -> usize {
        self.tilings
    }

    pub fn tiles_per_dimension(&self) -> usize {
        self.tiles_per_dimension
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn feature_count(&self) -> usize {
        self.tilings * self.stride
    }

    /// Width of one tile along `dim`.
    pub fn tile_width(&self, dim: usize) -> f64 {
        let (lo, hi) = self.bounds[dim];
        (hi - lo) / self.tiles_per_dimension as f64
    }

    /// Active features for `point`; coordinates outside the box are clipped.
    pub fn features(&self, point: &[f64]) -> Result<Features> {
        if point.len() != self.bounds.len() {
            return Err(Error::invalid(
                "state",
                format!("expected {} coordinates, got {}", self.bounds.len(), point.len()),
            ));
        }
        if point.iter().any(|x| x.is_nan()) {
            return Err(Error::invalid("state", "NaN coordinate"));
        }
        let t = self.tiles_per_dimension as f64;
        let mut buf = [0.0; MAX_DIMS];
        let scaled = &mut buf[..point.len()];
        for ((s, &x), &(lo, hi)) in scaled.iter_mut().zip(point).zip(&self.bounds) {
            *s = ((x - lo) / (hi - lo)).clamp(0.0, 1.0) * t;
        }
        let mut out = Features {
            indices: [0; MAX_TILINGS],
            len: self.tilings as u8,
        };
        let side = self.tiles_per_dimension + 1;
        for k in 0..self.tilings {
            let shift = k as f64 / self.tilings as f64;
            let mut cell = 0usize;
            for &s in scaled.iter() {
                let i = ((s + shift) as usize).min(self.tiles_per_dimension);
                cell = cell * side + i;
            }
            out.indices[k] = (k * self.stride + cell) as u32;
        }
        Ok(out)
    }
}
