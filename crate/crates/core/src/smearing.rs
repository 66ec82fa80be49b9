//! Smearing kernels and the lift `psi(x) -> Psi(x, x') = g(x' - x) psi(x)`.
//!
//! States are stored in the coordinates `u = x` and `v = x' - x`, where the
//! lift is a plain outer product and the two Fourier transforms (scale `hbar`
//! along `u`, scale `beta` along `v`) act on separate axes. The momentum
//! lattice of the second axis is `w = p' - p`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{linear_convolve, Density, Field, Field2, Grid, Lattice, SpectralField, SpectralField2, C64};

/// Kernel resolution limit in grid spacings.
pub const MIN_SPACINGS_PER_WIDTH: f64 = 3.0;
/// Required domain size in kernel widths.
pub const MIN_WIDTHS_PER_DOMAIN: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelShape {
    /// `|g|^2` normal with standard deviation `sigma_g`.
    Gaussian,
    /// `|g|^2 = exp(-|v| / lambda) / (2 lambda)`, with `lambda` tuned so the
    /// lattice standard deviation is `sigma_g` (the continuum value is
    /// `sigma_g / sqrt(2)`).
    Exponential,
    /// Samples of `|g|^2` on the kernel grid; normalized on construction.
    Custom(Vec<f64>),
}

impl KernelShape {
    pub fn name(&self) -> &'static str {
        match self {
            KernelShape::Gaussian => "gaussian",
            KernelShape::Exponential => "exponential",
            KernelShape::Custom(_) => "custom",
        }
    }
}

/// A normalized real smearing amplitude `g(v)` and its transform at scale `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmearingKernel {
    pub shape: KernelShape,
    pub sigma_g: f64,
    pub beta: f64,
    pub amplitude: Field,
    pub conjugate: SpectralField,
}

/// Check that a kernel of width `sigma` is resolved by `grid` and fits in it.
pub fn check_resolution(sigma: f64, grid: &Grid) -> Result<()> {
    let limit = MIN_SPACINGS_PER_WIDTH * grid.spacing();
    if sigma < limit {
        return Err(Error::KernelUnresolved { sigma, limit });
    }
    let required = MIN_WIDTHS_PER_DOMAIN * sigma;
    let half = 0.5 * required;
    let lo = grid.start();
    let hi = grid.start() + grid.extent();
    if grid.extent() < required || lo > -half || hi < half {
        return Err(Error::KernelDomain {
            sigma,
            required,
            extent: grid.extent(),
        });
    }
    Ok(())
}

pub fn make_kernel(shape: KernelShape, sigma_g: f64, beta: f64, v_grid: Grid) -> Result<SmearingKernel> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Config(format!("beta must be positive, got {beta}")));
    }
    let (density, sigma) = match &shape {
        KernelShape::Gaussian | KernelShape::Exponential => {
            if !(sigma_g.is_finite() && sigma_g > 0.0) {
                return Err(Error::Config(format!("sigma_g must be positive, got {sigma_g}")));
            }
            check_resolution(sigma_g, &v_grid)?;
            let points = v_grid.points();
            let rho = match shape {
                KernelShape::Gaussian => points
                    .iter()
                    .map(|v| (-v * v / (2.0 * sigma_g * sigma_g)).exp())
                    .collect(),
                _ => {
                    let lambda = exponential_scale(sigma_g, &v_grid);
                    points.iter().map(|v| (-v.abs() / lambda).exp()).collect()
                }
            };
            (rho, sigma_g)
        }
        KernelShape::Custom(samples) => {
            if samples.len() != v_grid.n() {
                return Err(Error::GridMismatch(format!(
                    "{} kernel samples for a grid of {} points",
                    samples.len(),
                    v_grid.n()
                )));
            }
            let d = Density::new(v_grid.lattice(), samples.clone())?;
            if d.integral() <= 0.0 {
                return Err(Error::Unnormalized(0.0));
            }
            let sigma = d.variance().value.sqrt();
            (samples.clone(), sigma)
        }
    };
    check_resolution(sigma, &v_grid)?;
    let total: f64 = density.iter().sum::<f64>() * v_grid.spacing();
    let amplitude = Field::new(
        v_grid,
        density.iter().map(|r| C64::new((r / total).sqrt(), 0.0)).collect(),
    )?;
    let conjugate = amplitude.transform(beta);
    Ok(SmearingKernel {
        shape,
        sigma_g: sigma,
        beta,
        amplitude,
        conjugate,
    })
}

/// Decay length whose sampled two-sided exponential has standard deviation
/// `sigma` on `grid`.
fn exponential_scale(sigma: f64, grid: &Grid) -> f64 {
    let lattice = grid.lattice();
    let width = |lambda: f64| {
        let values = lattice.points().iter().map(|v| (-v.abs() / lambda).exp()).collect();
        Density { lattice, values }.variance().value.sqrt()
    };
    let (mut lo, mut hi) = (0.25 * sigma, 2.0 * sigma);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if width(mid) < sigma {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

impl SmearingKernel {
    pub fn grid(&self) -> Grid {
        self.amplitude.grid
    }

    /// `|g(v)|^2` over the kernel grid.
    pub fn density(&self) -> Density {
        self.amplitude.density()
    }

    /// `|g~_beta(w)|^2` over the conjugate lattice.
    pub fn conjugate_density(&self) -> Density {
        Density {
            lattice: self.conjugate.grid.lattice(),
            values: self.conjugate.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    /// Standard deviation of `|g|^2` on the lattice.
    pub fn width_v(&self) -> f64 {
        self.density().variance().value.sqrt()
    }

    /// Standard deviation of `|g~_beta|^2` on the lattice.
    pub fn width_w(&self) -> f64 {
        self.conjugate_density().variance().value.sqrt()
    }

    /// The momentum smearing width. Exactly `beta / (2 sigma_g)` for Gaussians.
    pub fn sigma_g_tilde(&self) -> f64 {
        match self.shape {
            KernelShape::Gaussian => self.beta / (2.0 * self.sigma_g),
            _ => self.width_w(),
        }
    }

    /// `g~_beta(w)` at an arbitrary `w`, by direct summation.
    pub fn conjugate_at(&self, w: f64) -> C64 {
        let grid = self.grid();
        let sum: C64 = self
            .amplitude
            .values
            .iter()
            .enumerate()
            .map(|(j, g)| g * C64::from_polar(1.0, -w * grid.point(j) / self.beta))
            .sum();
        sum * grid.spacing() / (2.0 * PI * self.beta).sqrt()
    }
}

/// `Psi(u, v) = g(v) psi(u)` with its two action scales and the kernel that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SmearedState {
    pub field: Field2,
    pub hbar: f64,
    pub beta: f64,
    pub kernel: SmearingKernel,
}

impl SmearedState {
    pub fn u_grid(&self) -> Grid {
        self.field.u
    }

    pub fn v_grid(&self) -> Grid {
        self.field.v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.field.norm_sqr()
    }

    /// The same scales and kernel with different amplitudes.
    pub fn with_field(&self, field: Field2) -> Self {
        Self {
            field,
            hbar: self.hbar,
            beta: self.beta,
            kernel: self.kernel.clone(),
        }
    }

    pub fn momentum(&self) -> SpectralField2 {
        momentum_representation(self)
    }
}

fn check_normalized(norm: f64) -> Result<()> {
    if (norm - 1.0).abs() > crate::grid::NORMALIZATION_TOLERANCE {
        return Err(Error::Unnormalized(norm));
    }
    Ok(())
}

/// Both lattices must share a spacing so that `x' = u + v` is itself a lattice.
pub(crate) fn check_spacings(u: &Grid, v: &Grid) -> Result<()> {
    let (du, dv) = (u.spacing(), v.spacing());
    if (du - dv).abs() > 1e-12 * du.max(dv) {
        return Err(Error::GridMismatch(format!(
            "state and kernel grids need equal spacings, got {du} and {dv}"
        )));
    }
    Ok(())
}

pub fn smear(psi: &Field, kernel: &SmearingKernel, hbar: f64) -> Result<SmearedState> {
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::Config(format!("hbar must be positive, got {hbar}")));
    }
    check_spacings(&psi.grid, &kernel.grid())?;
    check_normalized(psi.norm_sqr())?;
    Ok(SmearedState {
        field: Field2::product(psi, &kernel.amplitude),
        hbar,
        beta: kernel.beta,
        kernel: kernel.clone(),
    })
}

/// `Psi~(p, w)`: the `u` axis transformed at `hbar`, the `v` axis at `beta`.
pub fn momentum_representation(state: &SmearedState) -> SpectralField2 {
    state.field.transform(state.hbar, state.beta)
}

pub fn position_representation(spectral: &SpectralField2) -> Field2 {
    spectral.inverse()
}

/// Squared norm of the naive lift `(g * psi)(x')` onto a single coordinate.
///
/// The convolution kernel is `g` rescaled to unit integral, the normalization
/// under which it tends to a Dirac delta. The result depends on `psi` unless
/// the kernel is delta-like, which is why the naive lift fails.
pub fn naive_smear_norm(psi: &Field, kernel: &SmearingKernel) -> Result<f64> {
    check_spacings(&psi.grid, &kernel.grid())?;
    let dx = psi.grid.spacing();
    let mass: C64 = kernel.amplitude.values.iter().sum::<C64>() * dx;
    if mass.norm() == 0.0 {
        return Err(Error::Unnormalized(0.0));
    }
    let g: Vec<C64> = kernel.amplitude.values.iter().map(|v| v / mass).collect();
    let h = linear_convolve(&psi.values, &g);
    Ok(h.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx * dx * dx)
}

/// Lattice of `x' = u + v` for a state on `(u, v)` grids of equal spacing.
pub(crate) fn primed_lattice(u: &Grid, v: &Grid) -> Lattice {
    Lattice::new(u.start() + v.start(), u.spacing(), u.n() + v.n() - 1)
}

/// Samples of the smeared momentum eigenstate
/// `exp(i p u / hbar) exp(i (p' - p) v / beta) / (2 pi sqrt(hbar beta))`.
pub fn eigenstate_sample(p: f64, p_prime: f64, u_grid: Grid, v_grid: Grid, hbar: f64, beta: f64) -> Result<Field2> {
    let w = p_prime - p;
    let on_lattice = |q: f64, grid: &Grid, s: f64| {
        let dq = grid.conjugate(s).spacing();
        let k = q / dq;
        (k - k.round()).abs() < 1e-9 && k.round().abs() <= grid.n() as f64 / 2.0
    };
    if !on_lattice(p, &u_grid, hbar) || !on_lattice(w, &v_grid, beta) {
        return Err(Error::Domain(format!(
            "momenta p = {p}, p' - p = {w} are not on the conjugate lattices"
        )));
    }
    let norm = 1.0 / (2.0 * PI * (hbar * beta).sqrt());
    Ok(Field2::from_fn(u_grid, v_grid, |u, v| {
        C64::from_polar(norm, p * u / hbar + w * v / beta)
    }))
}

/// Normalized Gaussian wave packet with position spread `width` and carrier
/// wavenumber `k0`.
pub fn gaussian_wavefunction(grid: Grid, mean: f64, width: f64, k0: f64) -> Result<Field> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::Config(format!("width must be positive, got {width}")));
    }
    Field::from_fn(grid, |x| {
        let a = (-(x - mean).powi(2) / (4.0 * width * width)).exp();
        C64::from_polar(a, k0 * x)
    })
    .normalized()
}
