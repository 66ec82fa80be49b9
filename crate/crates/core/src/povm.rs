//! Finite-resolution measurements in the fixed background.
//!
//! An element `E_x = int g(x' - x) |x><x| dx` is diagonal in position, so its
//! statistics are the canonical density convolved with `|g|^2`. Elements are
//! never materialized as matrices.

use crate::error::{Error, Result};
use crate::grid::{linear_convolve, Density, Field, Lattice, C64};
use crate::measurement::{canonical_variance, generalized_variance, Axis};
use crate::smearing::{make_kernel, smear, KernelShape, SmearingKernel};

/// Relative tolerance for the smeared-mode product constraint.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-9;

/// `|g|^2` as a density over offsets `x' - x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionKernel {
    pub density: Density,
    /// Standard deviation of the offset density.
    pub sigma: f64,
    pub centered: bool,
}

impl ResolutionKernel {
    pub fn new(density: Density) -> Result<Self> {
        let integral = density.integral();
        if (integral - 1.0).abs() > crate::grid::NORMALIZATION_TOLERANCE {
            return Err(Error::Unnormalized(integral));
        }
        let sigma = density.variance().value.sqrt();
        let centered = density.mean().abs() <= 1e-12 * sigma.max(density.lattice.spacing);
        Ok(Self {
            density,
            sigma,
            centered,
        })
    }

    fn sampled(lattice: Lattice, f: impl Fn(f64) -> f64) -> Result<Self> {
        let raw: Vec<f64> = lattice.points().into_iter().map(f).collect();
        let mass = raw.iter().sum::<f64>() * lattice.spacing;
        Self::new(Density {
            lattice,
            values: raw.iter().map(|v| v / mass).collect(),
        })
    }

    pub fn gaussian(sigma: f64, lattice: Lattice) -> Result<Self> {
        positive(sigma)?;
        Self::sampled(lattice, |x| (-x * x / (2.0 * sigma * sigma)).exp())
    }

    /// `exp(-|x| / lambda)` with `lambda = sigma / sqrt(2)`.
    pub fn exponential(sigma: f64, lattice: Lattice) -> Result<Self> {
        positive(sigma)?;
        let lambda = sigma / 2f64.sqrt();
        Self::sampled(lattice, |x| (-x.abs() / lambda).exp())
    }

    /// All weight on the zero offset: a projective measurement.
    pub fn delta(lattice: Lattice) -> Result<Self> {
        let zero = lattice
            .nearest(0.0)
            .ok_or_else(|| Error::Domain("offset lattice does not contain zero".into()))?;
        let mut values = vec![0.0; lattice.count];
        values[zero] = 1.0 / lattice.spacing;
        Self::new(Density { lattice, values })
    }

    /// Position resolution matching a smeared-space kernel.
    pub fn from_smearing(kernel: &SmearingKernel) -> Result<Self> {
        Self::new(kernel.density())
    }

    /// Momentum resolution matching a smeared-space kernel.
    pub fn conjugate_from_smearing(kernel: &SmearingKernel) -> Result<Self> {
        Self::new(kernel.conjugate_density())
    }

    pub fn mean(&self) -> f64 {
        self.density.mean()
    }
}

fn positive(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("resolution must be positive, got {sigma}")))
    }
}

/// `sup_x |sum_x' E_x'^dagger E_x' dx' - 1|` on the periodic lattice of
/// `outcomes`, with offsets wrapped to the symmetric range.
pub fn povm_completeness(kernel: &ResolutionKernel, outcomes: &Lattice) -> Result<f64> {
    let k = &kernel.density.lattice;
    if (k.spacing - outcomes.spacing).abs() > 1e-12 * k.spacing {
        return Err(Error::GridMismatch(format!(
            "kernel spacing {} differs from outcome spacing {}",
            k.spacing, outcomes.spacing
        )));
    }
    let n = outcomes.count as i64;
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let total: f64 = (0..n)
            .map(|m| {
                let offset = (m - j).rem_euclid(n);
                let offset = if offset >= (n + 1) / 2 { offset - n } else { offset };
                let index = ((offset as f64 * outcomes.spacing - k.start) / k.spacing).round();
                if index >= 0.0 && (index as usize) < k.count {
                    kernel.density.values[index as usize]
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            * outcomes.spacing;
        worst = worst.max((total - 1.0).abs());
    }
    Ok(worst)
}

/// Outcome statistics of a finite-resolution measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PovmStatistics {
    /// `<x>_psi + <x>_g`.
    pub mean: f64,
    /// `(Delta_psi x)^2 + sigma^2`.
    pub variance: f64,
    /// `<x>_g`, zero for centered kernels.
    pub mean_shift: f64,
}

fn canonical_density(psi: &Field, axis: Axis, hbar: f64) -> Density {
    match axis {
        Axis::Position => psi.density(),
        Axis::Momentum => {
            let spec = psi.transform(hbar);
            Density {
                lattice: spec.grid.lattice(),
                values: spec.values.iter().map(|v| v.norm_sqr()).collect(),
            }
        }
    }
}

/// Mean and variance of the outcome density, by additivity of the first two
/// cumulants under convolution.
pub fn povm_statistics(psi: &Field, kernel: &ResolutionKernel, axis: Axis, hbar: f64) -> Result<PovmStatistics> {
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > crate::grid::NORMALIZATION_TOLERANCE {
        return Err(Error::Unnormalized(norm));
    }
    let state = canonical_density(psi, axis, hbar);
    let shift = kernel.mean();
    Ok(PovmStatistics {
        mean: state.mean() + shift,
        variance: canonical_variance(psi, axis, hbar) + kernel.sigma.powi(2),
        mean_shift: shift,
    })
}

/// `(Delta_psi E)^2`.
pub fn povm_variance(psi: &Field, kernel: &ResolutionKernel, axis: Axis, hbar: f64) -> Result<f64> {
    Ok(povm_statistics(psi, kernel, axis, hbar)?.variance)
}

/// Position outcome density `sum_x |g(x' - x)|^2 |psi(x)|^2 dx` on the
/// lattice of `x'`.
pub fn povm_density(psi: &Field, kernel: &ResolutionKernel) -> Result<Density> {
    let k = &kernel.density.lattice;
    let dx = psi.grid.spacing();
    if (k.spacing - dx).abs() > 1e-12 * dx {
        return Err(Error::GridMismatch("kernel and state spacings differ".into()));
    }
    let a: Vec<C64> = psi.values.iter().map(|v| C64::new(v.norm_sqr(), 0.0)).collect();
    let b: Vec<C64> = kernel.density.values.iter().map(|&v| C64::new(v, 0.0)).collect();
    let values = linear_convolve(&a, &b).iter().map(|z| z.re * dx).collect();
    Ok(Density {
        lattice: Lattice::new(psi.grid.start() + k.start, dx, psi.grid.n() + k.count - 1),
        values,
    })
}

/// Smeared-space requirement `2 sigma_x sigma_p = beta` for Gaussian kernels.
pub fn smeared_constraint(sigma_x: f64, sigma_p: f64, beta: f64) -> Result<()> {
    let product = 2.0 * sigma_x * sigma_p;
    if (product / beta - 1.0).abs() > CONSTRAINT_TOLERANCE {
        return Err(Error::ResolutionConstraint(format!(
            "2 sigma_x sigma_p = {product:e} but smeared space requires beta = {beta:e}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub sigma_x: f64,
    pub sigma_p: f64,
    pub product: f64,
    pub beta: f64,
    /// Largest completeness residual of the two kernels.
    pub completeness: f64,
    /// `(position, momentum)` variances in POVM mode.
    pub povm_variances: (f64, f64),
    /// `(position, momentum)` variances in smeared mode, or why the pair
    /// cannot be realized there.
    pub smeared: std::result::Result<(f64, f64), Error>,
}

/// Contrast independent POVM resolutions with the smeared-space coupling of
/// the position and momentum widths through `beta`.
pub fn povm_independence_demo(
    psi: &Field,
    kernel_x: &ResolutionKernel,
    kernel_p: &ResolutionKernel,
    hbar: f64,
    beta: f64,
) -> Result<IndependenceReport> {
    let u = psi.grid;
    let completeness =
        povm_completeness(kernel_x, &u.lattice())?.max(povm_completeness(kernel_p, &kernel_p.density.lattice)?);
    let povm_variances = (
        povm_variance(psi, kernel_x, Axis::Position, hbar)?,
        povm_variance(psi, kernel_p, Axis::Momentum, hbar)?,
    );
    let smeared = smeared_constraint(kernel_x.sigma, kernel_p.sigma, beta).and_then(|()| {
        let kernel = make_kernel(KernelShape::Gaussian, kernel_x.sigma, beta, u)?;
        let state = smear(psi, &kernel, hbar)?;
        Ok((
            generalized_variance(&state, Axis::Position),
            generalized_variance(&state, Axis::Momentum),
        ))
    });
    Ok(IndependenceReport {
        sigma_x: kernel_x.sigma,
        sigma_p: kernel_p.sigma,
        product: kernel_x.sigma * kernel_p.sigma,
        beta,
        completeness,
        povm_variances,
        smeared,
    })
}
