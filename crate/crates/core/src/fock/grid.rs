//! Momentum grids carrying the one-particle inner product.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::model::Potential;
use crate::spectral::lattice_symbol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridKind {
    /// Momenta `2 pi k / L_f` on the lattice Brillouin zone, weights of the
    /// covariance `theta (-Delta)^{-1}`.
    Lattice { side: usize, theta: f64 },
    /// Momenta `2 pi k / L_box`, `|k_i| <= k_max`, weights of the covariance
    /// with spectral density `|p|^{-2} V^(p)`.
    Continuum {
        box_len: f64,
        k_max: i64,
        potential: Potential,
    },
}

/// Finite set of nonzero momenta with positive weights `mu(p)` such that
/// `<f, g> = sum_p mu(p) conj(f(p)) g(p)` and `<h_x, h_y> = C(y - x)` for
/// `h_x(p) = exp(i p.x)`.
#[derive(Debug, Clone)]
pub struct MomentumGrid {
    pub d: usize,
    pub kind: GridKind,
    /// Integer labels `k` of the momenta.
    pub ks: Vec<Vec<i64>>,
    pub ps: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
}

impl MomentumGrid {
    pub fn lattice(d: usize, side: usize, theta: f64) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "must be positive"));
        }
        if side < 2 {
            return Err(invalid("side", "need at least two momenta per axis"));
        }
        if !(theta > 0.0) {
            return Err(invalid("theta", "must be positive"));
        }
        let n_sites = side.pow(d as u32);
        let mut ks = Vec::new();
        let mut ps = Vec::new();
        let mut mu = Vec::new();
        for i in 1..n_sites {
            let mut r = i;
            let mut k = vec![0i64; d];
            for slot in k.iter_mut() {
                *slot = (r % side) as i64;
                r /= side;
            }
            let p: Vec<f64> = k.iter().map(|&v| 2.0 * PI * v as f64 / side as f64).collect();
            mu.push(theta / (2.0 * lattice_symbol(&p)) / n_sites as f64);
            ks.push(k);
            ps.push(p);
        }
        Ok(MomentumGrid {
            d,
            kind: GridKind::Lattice { side, theta },
            ks,
            ps,
            mu,
        })
    }

    pub fn continuum(potential: Potential, box_len: f64, k_max: i64) -> Result<Self> {
        let d = potential.d;
        if !(box_len > 0.0) || k_max < 1 {
            return Err(invalid("grid", "box length and k_max must be positive"));
        }
        let side = (2 * k_max + 1) as usize;
        let dp = 2.0 * PI / box_len;
        let cell = dp.powi(d as i32) * (2.0 * PI).powf(-(d as f64) / 2.0);
        let mut ks = Vec::new();
        let mut ps = Vec::new();
        let mut mu = Vec::new();
        for i in 0..side.pow(d as u32) {
            let mut r = i;
            let mut k = vec![0i64; d];
            for slot in k.iter_mut() {
                *slot = (r % side) as i64 - k_max;
                r /= side;
            }
            if k.iter().all(|&v| v == 0) {
                continue;
            }
            let p: Vec<f64> = k.iter().map(|&v| dp * v as f64).collect();
            let p2: f64 = p.iter().map(|v| v * v).sum();
            mu.push(cell * potential.hat_r2(p2) / p2);
            ks.push(k);
            ps.push(p);
        }
        Ok(MomentumGrid {
            d,
            kind: GridKind::Continuum {
                box_len,
                k_max,
                potential,
            },
            ks,
            ps,
            mu,
        })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self.kind, GridKind::Lattice { .. })
    }

    pub fn theta(&self) -> Option<f64> {
        match self.kind {
            GridKind::Lattice { theta, .. } => Some(theta),
            GridKind::Continuum { .. } => None,
        }
    }

    /// Lattice: `2d` unit steps (`2k` is `+e_k`, `2k + 1` is `-e_k`).
    /// Continuum: `d` partial derivatives.
    pub fn directions(&self) -> usize {
        if self.is_lattice() {
            2 * self.d
        } else {
            self.d
        }
    }

    /// Axis and sign of a lattice direction.
    pub fn step(&self, dir: usize) -> (usize, f64) {
        (dir / 2, if dir % 2 == 0 { 1.0 } else { -1.0 })
    }

    /// Physical momentum of an integer label (not reduced modulo the
    /// lattice period).
    pub fn momentum_of(&self, k: &[i64]) -> Vec<f64> {
        match &self.kind {
            GridKind::Lattice { side, .. } => {
                k.iter().map(|&v| 2.0 * PI * v as f64 / *side as f64).collect()
            }
            GridKind::Continuum { box_len, .. } => {
                k.iter().map(|&v| 2.0 * PI * v as f64 / box_len).collect()
            }
        }
    }

    /// Kernel of the linear functional attached to a direction:
    /// `omega(0) - omega(e)` on the lattice, `d_l omega(0)` in the continuum.
    pub fn kernel(&self, dir: usize) -> Vec<C64> {
        self.ps
            .iter()
            .map(|p| {
                if self.is_lattice() {
                    let (a, s) = self.step(dir);
                    C64::new(1.0, 0.0) - C64::from_polar(1.0, s * p[a])
                } else {
                    C64::new(0.0, p[dir])
                }
            })
            .collect()
    }

    /// Multiplier of the difference operator at total momentum `k`:
    /// `exp(i P.e) - 1` on the lattice, `i P_l` in the continuum.
    pub fn difference_symbol(&self, dir: usize, k: &[i64]) -> C64 {
        let p = self.momentum_of(k);
        if self.is_lattice() {
            let (a, s) = self.step(dir);
            C64::from_polar(1.0, s * p[a]) - 1.0
        } else {
            C64::new(0.0, p[dir])
        }
    }

    /// Symbol of `-Delta` at total momentum `k`: `2 D(P)` on the lattice,
    /// `|P|^2` in the continuum.
    pub fn laplacian_symbol(&self, k: &[i64]) -> f64 {
        let p = self.momentum_of(k);
        if self.is_lattice() {
            2.0 * lattice_symbol(&p)
        } else {
            p.iter().map(|v| v * v).sum()
        }
    }

    /// Canonical form of a total momentum label (reduced modulo the period
    /// on the lattice).
    pub fn reduce(&self, k: &mut [i64]) {
        if let GridKind::Lattice { side, .. } = self.kind {
            for v in k.iter_mut() {
                *v = v.rem_euclid(side as i64);
            }
        }
    }

    pub fn norm2(&self, f: &[C64]) -> f64 {
        f.iter().zip(&self.mu).map(|(v, m)| m * v.norm_sqr()).sum()
    }

    pub fn inner(&self, f: &[C64], g: &[C64]) -> C64 {
        f.iter()
            .zip(g)
            .zip(&self.mu)
            .map(|((a, b), m)| a.conj() * b * *m)
            .sum()
    }
}
