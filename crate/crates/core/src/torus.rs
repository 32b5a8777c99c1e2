//! Periodic lattice geometry.

use crate::error::{invalid, Result};

/// The torus `(Z / L Z)^d`, sites stored in row-major order with axis 0
/// varying fastest. Directions are numbered `2k` for `+e_k` and `2k + 1` for
/// `-e_k`.
#[derive(Debug, Clone)]
pub struct Torus {
    d: usize,
    l: usize,
    strides: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Torus {
    pub fn new(d: usize, l: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        if l < 3 {
            return Err(invalid("L", "torus side must be at least 3"));
        }
        let n = l
            .checked_pow(d as u32)
            .filter(|n| *n <= u32::MAX as usize)
            .ok_or_else(|| invalid("L", "torus too large"))?;
        let strides: Vec<usize> = (0..d).map(|k| l.pow(k as u32)).collect();
        let mut neighbors = vec![0u32; n * 2 * d];
        for site in 0..n {
            for k in 0..d {
                let c = (site / strides[k]) % l;
                let base = site - c * strides[k];
                let up = base + ((c + 1) % l) * strides[k];
                let down = base + ((c + l - 1) % l) * strides[k];
                neighbors[site * 2 * d + 2 * k] = up as u32;
                neighbors[site * 2 * d + 2 * k + 1] = down as u32;
            }
        }
        Ok(Torus {
            d,
            l,
            strides,
            neighbors,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> usize {
        self.l
    }

    pub fn sites(&self) -> usize {
        self.neighbors.len() / (2 * self.d)
    }

    pub fn directions(&self) -> usize {
        2 * self.d
    }

    #[inline]
    pub fn neighbor(&self, site: usize, dir: usize) -> usize {
        self.neighbors[site * 2 * self.d + dir] as usize
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        (0..self.d).map(|k| (site / self.strides[k]) % self.l).collect()
    }

    /// Site of integer coordinates, reduced modulo `L`.
    pub fn index(&self, x: &[i64]) -> usize {
        let l = self.l as i64;
        x.iter()
            .zip(&self.strides)
            .map(|(c, s)| (c.rem_euclid(l) as usize) * s)
            .sum()
    }

    /// Unit step of a direction as `(axis, sign)`.
    #[inline]
    pub fn step(dir: usize) -> (usize, i64) {
        (dir / 2, if dir % 2 == 0 { 1 } else { -1 })
    }

    #[inline]
    pub fn opposite(dir: usize) -> usize {
        dir ^ 1
    }
}
