//! Samplers for the stationary environments: the lattice gradient Gibbs field
//! (exact FFT synthesis in the Gaussian case, single-site MCMC in general)
//! and the continuum Gaussian field of the polymer.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::fft::{signed_freq, CubeFft};
use crate::model::{OddPart, Potential, RateFunction};
use crate::poly::Poly;
use crate::torus::Torus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    LatticeGaussian,
    LatticeGibbs,
    ContinuumGaussian,
}

impl FieldKind {
    fn code(self) -> u8 {
        match self {
            FieldKind::LatticeGaussian => 0,
            FieldKind::LatticeGibbs => 1,
            FieldKind::ContinuumGaussian => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        Ok(match c {
            0 => FieldKind::LatticeGaussian,
            1 => FieldKind::LatticeGibbs,
            2 => FieldKind::ContinuumGaussian,
            _ => return Err(Error::Snapshot(format!("unknown field kind {c}"))),
        })
    }
}

/// A field realization on a periodic grid, pinned to zero at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub d: usize,
    /// Sites (lattice) or grid nodes (continuum) per axis.
    pub l: usize,
    pub values: Vec<f64>,
    pub seed: u64,
    pub kind: FieldKind,
    /// Variance scale `theta` of a Gaussian lattice field with covariance
    /// `theta (-Delta)^{-1}`; the coupling of a Gibbs field is `1/theta`.
    pub theta: f64,
    /// Physical box side of a continuum field.
    pub box_len: Option<f64>,
}

impl FieldSample {
    /// Flat field, useful as a starting point for Gibbs chains.
    pub fn zeros(d: usize, l: usize, kind: FieldKind, theta: f64) -> Self {
        FieldSample {
            d,
            l,
            values: vec![0.0; l.pow(d as u32)],
            seed: 0,
            kind,
            theta,
            box_len: None,
        }
    }

    /// Subtracts the value at the origin from every site.
    pub fn pin(&mut self) {
        let v0 = self.values[0];
        for v in self.values.iter_mut() {
            *v -= v0;
        }
    }

    pub fn torus(&self) -> Result<Torus> {
        Torus::new(self.d, self.l)
    }

    pub fn value_at(&self, x: &[i64]) -> f64 {
        let l = self.l as i64;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for c in x {
            idx += c.rem_euclid(l) as usize * stride;
            stride *= self.l;
        }
        self.values[idx]
    }

    /// CSV of the 2d slice spanned by `axes`, other coordinates fixed at
    /// `fixed` (entries on the slice axes are ignored).
    pub fn slice_csv(&self, axes: (usize, usize), fixed: &[i64]) -> Result<String> {
        let (a, b) = axes;
        if a >= self.d || b >= self.d || a == b || fixed.len() != self.d {
            return Err(invalid("axes", "need two distinct axes and a full fixed point"));
        }
        let mut out = String::new();
        let mut x = fixed.to_vec();
        for i in 0..self.l {
            x[a] = i as i64;
            let row: Vec<String> = (0..self.l)
                .map(|j| {
                    x[b] = j as i64;
                    format!("{}", self.value_at(&x))
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Torus Gaussian field with covariance `theta (-Delta)^{-1}`, zero mode
/// removed.
pub fn sample_gaussian_lattice(d: usize, l: usize, theta: f64, seed: u64) -> Result<FieldSample> {
    if d < 3 {
        return Err(invalid("d", "the massless free field exists only for d >= 3"));
    }
    if l < 8 || l % 2 == 1 {
        return Err(invalid("L", "torus side must be even and at least 8"));
    }
    if !(theta > 0.0) {
        return Err(invalid("theta", "variance scale must be positive"));
    }
    let n = l.pow(d as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
        .collect();
    let fft = CubeFft::new(d, l);
    fft.forward(&mut data);
    // circulant eigenvalues theta / (2 D(p)); real white noise keeps the
    // Hermitian symmetry
    let cos: Vec<f64> = (0..l).map(|k| 1.0 - (2.0 * PI * k as f64 / l as f64).cos()).collect();
    for (i, v) in data.iter_mut().enumerate() {
        let mut dh = 0.0;
        let mut rest = i;
        for _ in 0..d {
            dh += cos[rest % l];
            rest /= l;
        }
        *v *= if i == 0 { 0.0 } else { (theta / (2.0 * dh)).sqrt() };
    }
    fft.inverse(&mut data);
    let mut f = FieldSample {
        d,
        l,
        values: data.iter().map(|z| z.re / n as f64).collect(),
        seed,
        kind: FieldKind::LatticeGaussian,
        theta,
        box_len: None,
    };
    f.pin();
    Ok(f)
}

/// Massless free field with covariance `(-Delta)^{-1}`.
pub fn sample_gff_lattice(d: usize, l: usize, seed: u64) -> Result<FieldSample> {
    sample_gaussian_lattice(d, l, 1.0, seed)
}

/// Initial profile of the walk in the Gaussian mode: the invariant measure
/// of the environment process is the Gibbs measure at coupling 2, i.e. the
/// Gaussian field with covariance `(1/2)(-Delta)^{-1}`.
pub fn sample_stationary_profile(d: usize, l: usize, seed: u64) -> Result<FieldSample> {
    sample_gaussian_lattice(d, l, 0.5, seed)
}

/// Single-site specification `exp(-beta sum_{y~x} R(w(x) - w(y)))` with
/// `R(u) = int_0^u r`.
#[derive(Debug, Clone)]
pub struct GibbsSpec {
    r_pot: Poly,
    gaussian: bool,
    pub beta: f64,
    pub proposal_scale: f64,
}

impl GibbsSpec {
    pub fn new(rf: &RateFunction, beta: f64, proposal_scale: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(invalid("beta", "coupling must be positive"));
        }
        if !(proposal_scale > 0.0) {
            return Err(invalid("proposal_scale", "must be positive"));
        }
        Ok(GibbsSpec {
            r_pot: rf.r().antiderivative(),
            gaussian: matches!(rf.params().r, OddPart::Linear) || rf.r_is_linear(),
            beta,
            proposal_scale,
        })
    }

    /// `R(u)`
    pub fn potential(&self, u: f64) -> f64 {
        self.r_pot.eval(u)
    }

    pub fn is_gaussian(&self) -> bool {
        self.gaussian
    }

    fn local_energy(&self, value: f64, neighbors: &[f64]) -> f64 {
        neighbors.iter().map(|y| self.r_pot.eval(value - y)).sum()
    }

    /// Metropolis acceptance probability of moving a site with the given
    /// neighbor values from `current` to `proposal`.
    pub fn acceptance_probability(&self, current: f64, proposal: f64, neighbors: &[f64]) -> f64 {
        let de = self.local_energy(proposal, neighbors) - self.local_energy(current, neighbors);
        (-self.beta * de).exp().min(1.0)
    }
}

/// One systematic sweep of single-site updates followed by re-pinning.
/// Gaussian `R` uses the exact heat bath `N(mean of neighbors, 1/(2 d beta))`;
/// otherwise Metropolis with a symmetric Gaussian proposal.
pub fn gibbs_sweep<R: Rng>(field: &mut FieldSample, spec: &GibbsSpec, rng: &mut R) -> Result<()> {
    if field.kind != FieldKind::LatticeGibbs {
        return Err(invalid("field", "Gibbs sweeps need a lattice_gibbs field"));
    }
    let torus = field.torus()?;
    let nd = torus.directions();
    let mut nb = vec![0.0; nd];
    let sd = (1.0 / (nd as f64 * spec.beta)).sqrt();
    for site in 0..torus.sites() {
        for (k, v) in nb.iter_mut().enumerate() {
            *v = field.values[torus.neighbor(site, k)];
        }
        let cur = field.values[site];
        if spec.gaussian {
            let m = nb.iter().sum::<f64>() / nd as f64;
            let z: f64 = rng.sample(StandardNormal);
            field.values[site] = m + sd * z;
        } else {
            let z: f64 = rng.sample(StandardNormal);
            let prop = cur + spec.proposal_scale * z;
            let a = spec.acceptance_probability(cur, prop, &nb);
            if rng.random::<f64>() < a {
                field.values[site] = prop;
            }
        }
    }
    field.pin();
    Ok(())
}

/// Runs a Gibbs chain from a flat start: `burn_in` sweeps (default `10 L^2`).
pub fn sample_gibbs_lattice(
    d: usize,
    l: usize,
    spec: &GibbsSpec,
    burn_in: Option<usize>,
    seed: u64,
) -> Result<FieldSample> {
    let mut f = FieldSample::zeros(d, l, FieldKind::LatticeGibbs, 1.0 / spec.beta);
    f.seed = seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..burn_in.unwrap_or(10 * l * l) {
        gibbs_sweep(&mut f, spec, &mut rng)?;
    }
    Ok(f)
}

/// Continuum Gaussian field with spectral density `|p|^{-2} Vhat(p)` on a
/// periodic box, together with its gradient grids.
#[derive(Debug, Clone)]
pub struct ContinuumField {
    pub sample: FieldSample,
    pub grads: Vec<Vec<f64>>,
    pub box_len: f64,
    pub h: f64,
    /// `sum_x |eta_0(x)|^2` and `N^{-1} sum_k |Y_k|^2`, equal by Parseval.
    pub parseval: (f64, f64),
}

pub fn sample_continuum_field(
    d: usize,
    box_len: f64,
    m: usize,
    v: &Potential,
    seed: u64,
) -> Result<ContinuumField> {
    if d < 3 {
        return Err(invalid("d", "the continuum field exists only for d >= 3"));
    }
    if v.d != d {
        return Err(invalid("potential", "dimension mismatch"));
    }
    if m < 4 || m % 2 == 1 {
        return Err(invalid("M", "grid size must be even and at least 4"));
    }
    if !(box_len > 0.0) {
        return Err(invalid("box_len", "must be positive"));
    }
    let n = m.pow(d as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
        .collect();
    let fft = CubeFft::new(d, m);
    fft.forward(&mut spec);
    let dp = 2.0 * PI / box_len;
    // circulant eigenvalue N (2 pi)^{-d/2} (2 pi / L)^d |p|^{-2} Vhat(p)
    let pref = n as f64 * (2.0 * PI).powf(-0.5 * d as f64) * dp.powi(d as i32);
    let mut freqs = vec![vec![0.0; d]; n];
    for (i, v_i) in spec.iter_mut().enumerate() {
        let mut rest = i;
        let mut p2 = 0.0;
        for a in 0..d {
            let p = dp * signed_freq(rest % m, m) as f64;
            freqs[i][a] = p;
            p2 += p * p;
            rest /= m;
        }
        *v_i *= if i == 0 { 0.0 } else { (pref * v.hat_r2(p2) / p2).sqrt() };
    }
    let spectral_energy = spec.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;

    let mut grads = Vec::with_capacity(d);
    for a in 0..d {
        let mut g: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(i, y)| {
                let k = (i / m.pow(a as u32)) % m;
                if m % 2 == 0 && k == m / 2 {
                    // the Nyquist derivative is not real; drop it
                    Complex64::new(0.0, 0.0)
                } else {
                    y * Complex64::new(0.0, freqs[i][a])
                }
            })
            .collect();
        fft.inverse(&mut g);
        grads.push(g.iter().map(|z| z.re / n as f64).collect());
    }
    fft.inverse(&mut spec);
    let values: Vec<f64> = spec.iter().map(|z| z.re / n as f64).collect();
    let grid_energy = values.iter().map(|v| v * v).sum::<f64>();
    let mut sample = FieldSample {
        d,
        l: m,
        values,
        seed,
        kind: FieldKind::ContinuumGaussian,
        theta: 1.0,
        box_len: Some(box_len),
    };
    sample.pin();
    Ok(ContinuumField {
        sample,
        grads,
        box_len,
        h: box_len / m as f64,
        parseval: (grid_energy, spectral_energy),
    })
}

impl ContinuumField {
    fn corner(&self, x: &[f64]) -> (Vec<usize>, Vec<f64>) {
        let m = self.sample.l;
        let mut base = Vec::with_capacity(x.len());
        let mut frac = Vec::with_capacity(x.len());
        for xi in x {
            let u = (xi / self.h).rem_euclid(m as f64);
            let f = u.floor();
            base.push((f as usize) % m);
            frac.push(u - f);
        }
        (base, frac)
    }

    fn interpolate(&self, grid: &[f64], x: &[f64]) -> f64 {
        let d = x.len();
        let m = self.sample.l;
        let (base, frac) = self.corner(x);
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = 0usize;
            let mut stride = 1usize;
            for a in 0..d {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx += ((base[a] + bit) % m) * stride;
                stride *= m;
            }
            acc += w * grid[idx];
        }
        acc
    }

    /// Multilinear interpolation of `eta_0`.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.interpolate(&self.sample.values, x)
    }

    /// Multilinear interpolation of the spectral gradient of `eta_0`.
    pub fn grad_at(&self, x: &[f64]) -> Vec<f64> {
        self.grads.iter().map(|g| self.interpolate(g, x)).collect()
    }
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"SRFS";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotSidecar {
    pub format_version: u32,
    pub d: usize,
    pub l: usize,
    pub kind: FieldKind,
    pub seed: u64,
    pub theta: f64,
    pub box_len: Option<f64>,
    pub values: usize,
}

/// Writes `path` (binary, little endian) and `path.json` (sidecar).
pub fn write_snapshot(field: &FieldSample, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(48 + 8 * field.values.len());
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(field.d as u32).to_le_bytes());
    buf.extend_from_slice(&(field.l as u32).to_le_bytes());
    buf.push(field.kind.code());
    buf.extend_from_slice(&field.seed.to_le_bytes());
    buf.extend_from_slice(&field.theta.to_le_bytes());
    buf.extend_from_slice(&field.box_len.unwrap_or(f64::NAN).to_le_bytes());
    for v in &field.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    crate::record::atomic_write(path, &buf)?;
    let side = SnapshotSidecar {
        format_version: SNAPSHOT_VERSION,
        d: field.d,
        l: field.l,
        kind: field.kind,
        seed: field.seed,
        theta: field.theta,
        box_len: field.box_len,
        values: field.values.len(),
    };
    let mut side_path = path.as_os_str().to_owned();
    side_path.push(".json");
    crate::record::atomic_write(Path::new(&side_path), serde_json::to_string_pretty(&side)?.as_bytes())
}

pub fn read_snapshot(path: &Path) -> Result<FieldSample> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = buf
            .get(pos..pos + n)
            .ok_or_else(|| Error::Snapshot("truncated header".into()))?;
        pos += n;
        Ok(s)
    };
    if take(4)? != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap());
    let version = u32_at(take(4)?);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let d = u32_at(take(4)?) as usize;
    let l = u32_at(take(4)?) as usize;
    let kind = FieldKind::from_code(take(1)?[0])?;
    let seed = u64::from_le_bytes(take(8)?.try_into().unwrap());
    let theta = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let box_len = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let n = l
        .checked_pow(d as u32)
        .ok_or_else(|| Error::Snapshot("dimensions overflow".into()))?;
    let body = take(8 * n)?;
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if pos != buf.len() {
        return Err(Error::Snapshot("trailing bytes".into()));
    }
    Ok(FieldSample {
        d,
        l,
        values,
        seed,
        kind,
        theta,
        box_len: if box_len.is_nan() { None } else { Some(box_len) },
    })
}

/// Writes a CSV slice atomically.
pub fn export_slice(field: &FieldSample, axes: (usize, usize), fixed: &[i64], path: &Path) -> Result<()> {
    crate::record::atomic_write(path, field.slice_csv(axes, fixed)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinning_is_idempotent() {
        let mut f = sample_gff_lattice(3, 8, 3).unwrap();
        assert_eq!(f.values[0], 0.0);
        let before = f.values.clone();
        f.pin();
        assert_eq!(f.values, before);
    }

    #[test]
    fn fft_sampler_is_reproducible() {
        let a = sample_gff_lattice(3, 8, 11).unwrap();
        let b = sample_gff_lattice(3, 8, 11).unwrap();
        assert_eq!(a, b);
        assert!(sample_gff_lattice(2, 8, 1).is_err());
        assert!(sample_gff_lattice(3, 7, 1).is_err());
    }

    #[test]
    fn proposal_equal_to_current_is_accepted() {
        let rf = crate::presets::gaussian_mode(1.0, 0.25).unwrap();
        let spec = GibbsSpec::new(&rf, 1.0, 0.5).unwrap();
        assert_eq!(spec.acceptance_probability(0.3, 0.3, &[0.1, -0.2, 0.5]), 1.0);
        assert_eq!(spec.potential(0.0), 0.0);
        assert!((spec.potential(1.3) - spec.potential(-1.3)).abs() < 1e-15);
    }
}
