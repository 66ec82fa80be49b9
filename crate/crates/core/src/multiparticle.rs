//! Two particles in one dimension, each carrying its own primed coordinate.
//!
//! Amplitudes are stored in the order `(u1, v1, u2, v2)`, so the particle cut
//! is a plain reshape into a square matrix with rows `(u1, v1)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{Lattice, C64};

/// Default cap on the bytes of a two-particle amplitude array.
pub const DEFAULT_MEMORY_BUDGET: usize = 512 << 20;
/// Default points per axis.
pub const DEFAULT_N: usize = 48;

/// `psi12(u1, u2)` on a square lattice, `u1` slow.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyWavefunction {
    pub lattice: Lattice,
    pub values: Vec<C64>,
}

impl TwoBodyWavefunction {
    pub fn from_fn(lattice: Lattice, f: impl Fn(f64, f64) -> C64) -> Self {
        let pts = lattice.points();
        let values = pts.iter().flat_map(|&a| pts.iter().map(move |&b| (a, b))).map(|(a, b)| f(a, b)).collect();
        Self { lattice, values }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.lattice.spacing.powi(2)
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_sqr();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Unnormalized(norm));
        }
        let k = norm.sqrt().recip();
        self.values.iter_mut().for_each(|v| *v *= k);
        Ok(self)
    }

    /// Schmidt probabilities across the `u1 | u2` cut.
    pub fn schmidt_probabilities(&self) -> Vec<f64> {
        let n = self.lattice.count;
        schmidt_probabilities(n, &self.values)
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.schmidt_probabilities())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoBodyKind {
    /// `g(v1) g(v2)` with Gaussian factors; factorizes across particles.
    ProductGaussian,
    /// `exp(-|v| / (2 lambda))` with `lambda = sigma_g / sqrt(3)`, so that
    /// each coordinate of `|g|^2` has standard deviation `sigma_g`.
    RadialExponential,
}

impl TwoBodyKind {
    pub fn name(&self) -> &'static str {
        match self {
            TwoBodyKind::ProductGaussian => "product-gaussian",
            TwoBodyKind::RadialExponential => "radial-exponential",
        }
    }
}

/// Real two-body smearing amplitude `g(v1, v2)` normalized on its lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTwoBody {
    pub kind: TwoBodyKind,
    pub sigma_g: f64,
    pub lattice: Lattice,
    pub values: Vec<f64>,
}

impl KernelTwoBody {
    pub fn new(kind: TwoBodyKind, sigma_g: f64, lattice: Lattice) -> Result<Self> {
        if !(sigma_g.is_finite() && sigma_g > 0.0) {
            return Err(Error::Config(format!("sigma_g must be positive, got {sigma_g}")));
        }
        let pts = lattice.points();
        let raw: Vec<f64> = match kind {
            TwoBodyKind::ProductGaussian => {
                let g: Vec<f64> = pts.iter().map(|v| (-v * v / (4.0 * sigma_g * sigma_g)).exp()).collect();
                let norm = g.iter().map(|x| x * x).sum::<f64>() * lattice.spacing;
                let g: Vec<f64> = g.iter().map(|x| x / norm.sqrt()).collect();
                g.iter().flat_map(|a| g.iter().map(move |b| a * b)).collect()
            }
            TwoBodyKind::RadialExponential => {
                let lambda = sigma_g / 3f64.sqrt();
                pts.iter()
                    .flat_map(|&a| pts.iter().map(move |&b| (-(a * a + b * b).sqrt() / (2.0 * lambda)).exp()))
                    .collect()
            }
        };
        let norm = raw.iter().map(|x| x * x).sum::<f64>() * lattice.spacing.powi(2);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Unnormalized(norm));
        }
        let values = raw.iter().map(|x| x / norm.sqrt()).collect();
        Ok(Self {
            kind,
            sigma_g,
            lattice,
            values,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>() * self.lattice.spacing.powi(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticleState {
    pub u: Lattice,
    pub v: Lattice,
    /// Order `(u1, v1, u2, v2)`.
    pub values: Vec<C64>,
    pub hbar: f64,
    pub beta: f64,
}

impl TwoParticleState {
    fn side(&self) -> usize {
        self.u.count * self.v.count
    }

    pub fn cell(&self) -> f64 {
        (self.u.spacing * self.v.spacing).powi(2)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell()
    }

    pub fn at(&self, u1: usize, v1: usize, u2: usize, v2: usize) -> C64 {
        let (nu, nv) = (self.u.count, self.v.count);
        self.values[((u1 * nv + v1) * nu + u2) * nv + v2]
    }

    /// Exchange the particle labels.
    pub fn swapped(&self) -> Self {
        let side = self.side();
        let mut values = vec![C64::new(0.0, 0.0); self.values.len()];
        for r in 0..side {
            for c in 0..side {
                values[c * side + r] = self.values[r * side + c];
            }
        }
        Self {
            values,
            ..self.clone()
        }
    }
}

/// `Psi12 = g(v1, v2) psi12(u1, u2)`.
pub fn smear_two(psi: &TwoBodyWavefunction, kernel: &KernelTwoBody, hbar: f64, beta: f64) -> Result<TwoParticleState> {
    smear_two_with_budget(psi, kernel, hbar, beta, DEFAULT_MEMORY_BUDGET)
}

pub fn smear_two_with_budget(
    psi: &TwoBodyWavefunction,
    kernel: &KernelTwoBody,
    hbar: f64,
    beta: f64,
    budget: usize,
) -> Result<TwoParticleState> {
    let (nu, nv) = (psi.lattice.count, kernel.lattice.count);
    let required = (nu * nv).pow(2) * std::mem::size_of::<C64>();
    if required > budget {
        return Err(Error::MemoryBudget { required, budget });
    }
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > crate::grid::NORMALIZATION_TOLERANCE {
        return Err(Error::Unnormalized(norm));
    }
    let mut values = Vec::with_capacity((nu * nv).pow(2));
    for u1 in 0..nu {
        for v1 in 0..nv {
            for u2 in 0..nu {
                let a = psi.values[u1 * nu + u2];
                values.extend((0..nv).map(|v2| a * kernel.values[v1 * nv + v2]));
            }
        }
    }
    Ok(TwoParticleState {
        u: psi.lattice,
        v: kernel.lattice,
        values,
        hbar,
        beta,
    })
}

/// Eigenvalues of `M M^dagger` for the `side x side` matrix `M`, normalized
/// to unit sum.
fn schmidt_probabilities(side: usize, values: &[C64]) -> Vec<f64> {
    let real = values.iter().all(|z| z.im == 0.0);
    let mut eig: Vec<f64> = if real {
        let m = DMatrix::from_fn(side, side, |r, c| values[r * side + c].re);
        let gram = &m * m.transpose();
        gram.symmetric_eigenvalues().iter().copied().collect()
    } else {
        let m = DMatrix::from_fn(side, side, |r, c| values[r * side + c]);
        let gram = &m * m.adjoint();
        gram.symmetric_eigenvalues().iter().copied().collect()
    };
    let total: f64 = eig.iter().map(|x| x.max(0.0)).sum();
    eig.iter_mut().for_each(|x| *x = x.max(0.0) / total);
    eig.sort_by(|a, b| b.total_cmp(a));
    eig
}

fn entropy_of(probabilities: &[f64]) -> f64 {
    probabilities.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
}

/// Schmidt probabilities across particle 1 `(u1, v1)` vs particle 2.
pub fn schmidt_spectrum(state: &TwoParticleState) -> Vec<f64> {
    schmidt_probabilities(state.side(), &state.values)
}

/// Von Neumann entropy (natural log) of either reduced state.
pub fn entanglement_entropy(state: &TwoParticleState) -> f64 {
    entropy_of(&schmidt_spectrum(state))
}

/// Distance to the nearest product state across the particle cut,
/// `sqrt(1 - lambda_1^2)`, evaluated as `|M - u1 u1^dagger M| / |M|` with
/// `u1` the leading left singular vector, which avoids the cancellation in
/// `1 - lambda_1^2` for nearly factorized states.
pub fn factorization_residual(state: &TwoParticleState) -> f64 {
    let side = state.side();
    let m = DMatrix::from_fn(side, side, |r, c| state.values[r * side + c]);
    let u1 = leading_left_vector(&m);
    let projected = &u1 * (u1.adjoint() * &m);
    (&m - projected).norm() / m.norm()
}

/// Power iteration on `M M^dagger`, started from the heaviest column.
fn leading_left_vector(m: &DMatrix<C64>) -> DVector<C64> {
    let start = (0..m.ncols())
        .max_by(|&a, &b| m.column(a).norm().total_cmp(&m.column(b).norm()))
        .unwrap_or(0);
    let mut u: DVector<C64> = m.column(start).into_owned();
    u /= C64::new(u.norm(), 0.0);
    for _ in 0..10_000 {
        let mut next = m * (m.adjoint() * &u);
        next /= C64::new(next.norm(), 0.0);
        // fix the global phase before comparing
        let phase = next.dotc(&u);
        if phase.norm() > 0.0 {
            next *= phase / phase.norm();
        }
        let change = (&next - &u).norm();
        u = next;
        if change < 1e-14 {
            break;
        }
    }
    u
}
