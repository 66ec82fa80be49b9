//! The unified uncertainty relation and its GUP, EUP and EGUP limits.

use crate::error::{Checked, Error, Result, Warning};
use crate::grid::Grid;
use crate::measurement::{generalized_variance, Axis};
use crate::scales::{PhysicalScales, SmearingParameters};
use crate::smearing::{gaussian_wavefunction, make_kernel, smear, KernelShape, SmearedState};

pub use crate::dynamics::commutator_expectation;

/// Ratio to the validity limit above which an expansion is flagged.
pub const EXPANSION_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyReport {
    pub delta_x: f64,
    pub delta_p: f64,
    pub product: f64,
    /// `(hbar + beta) / 2`
    pub bound: f64,
    pub slack: f64,
}

pub fn unified_relation(state: &SmearedState) -> UncertaintyReport {
    let delta_x = generalized_variance(state, Axis::Position).sqrt();
    let delta_p = generalized_variance(state, Axis::Momentum).sqrt();
    let product = delta_x * delta_p;
    let bound = 0.5 * (state.hbar + state.beta);
    UncertaintyReport {
        delta_x,
        delta_p,
        product,
        bound,
        slack: product - bound,
    }
}

/// `sqrt((dx^2 + sigma_g^2)(dp^2 + sigma_g_tilde^2))` for canonical spreads.
pub fn unified_product(dx: f64, dp: f64, params: &SmearingParameters) -> f64 {
    ((dx * dx + params.sigma_g.powi(2)) * (dp * dp + params.sigma_g_tilde.powi(2))).sqrt()
}

/// Canonical spreads minimizing [`unified_product`] under `dx dp = hbar/2`.
pub fn optimal_widths(params: &SmearingParameters) -> (f64, f64) {
    let SmearingParameters {
        hbar,
        sigma_g,
        sigma_g_tilde,
    } = *params;
    (
        (hbar * sigma_g / (2.0 * sigma_g_tilde)).sqrt(),
        (hbar * sigma_g_tilde / (2.0 * sigma_g)).sqrt(),
    )
}

/// A first-order bound together with the unexpanded value it approximates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpandedBound {
    pub expanded: f64,
    pub exact: f64,
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {value}")))
    }
}

fn window(parameter: &'static str, value: f64, lower: f64, upper: f64) -> Vec<Warning> {
    let mut warnings = Vec::new();
    if value < lower {
        warnings.push(Warning::OutsideValidity {
            parameter,
            value,
            limit: lower,
        });
    }
    if value > upper {
        warnings.push(Warning::OutsideValidity {
            parameter,
            value,
            limit: upper,
        });
    }
    warnings
}

/// Position bound `hbar/(2 dp) + (sigma_g^2 / hbar) dp`, valid for
/// `sigma_g_tilde <= dp << hbar / (2 sigma_g)`.
pub fn gup_bound(dp: f64, params: &SmearingParameters) -> Result<Checked<ExpandedBound>> {
    positive("dp", dp)?;
    let (hbar, s) = (params.hbar, params.sigma_g);
    let canonical = hbar / (2.0 * dp);
    let value = ExpandedBound {
        expanded: canonical + s * s / hbar * dp,
        exact: (canonical * canonical + s * s).sqrt(),
    };
    let upper = EXPANSION_MARGIN * hbar / (2.0 * s);
    Ok(Checked {
        value,
        warnings: window("dp", dp, params.sigma_g_tilde, upper),
    })
}

/// Momentum bound `hbar/(2 dx) + (sigma_g_tilde^2 / hbar) dx`, valid for
/// `sigma_g <= dx << hbar / (2 sigma_g_tilde)`.
pub fn eup_bound(dx: f64, params: &SmearingParameters) -> Result<Checked<ExpandedBound>> {
    positive("dx", dx)?;
    let (hbar, s) = (params.hbar, params.sigma_g_tilde);
    let canonical = hbar / (2.0 * dx);
    let value = ExpandedBound {
        expanded: canonical + s * s / hbar * dx,
        exact: (canonical * canonical + s * s).sqrt(),
    };
    let upper = EXPANSION_MARGIN * hbar / (2.0 * s);
    Ok(Checked {
        value,
        warnings: window("dx", dx, params.sigma_g, upper),
    })
}

/// `hbar/2 + (sigma_g^2/hbar) dp^2 + (sigma_g_tilde^2/hbar) dx^2`: the
/// unified product expanded to first order in both smearing terms, with
/// `dx dp = hbar/2` used to eliminate the cross factors.
pub fn egup_product_bound(dx: f64, dp: f64, params: &SmearingParameters) -> Result<f64> {
    positive("dx", dx)?;
    positive("dp", dp)?;
    let hbar = params.hbar;
    Ok(0.5 * hbar + params.sigma_g.powi(2) / hbar * dp * dp + params.sigma_g_tilde.powi(2) / hbar * dx * dx)
}

/// `(dx, dp) -> ((sigma_g/sigma_g_tilde) dp, (sigma_g_tilde/sigma_g) dx)`,
/// which leaves [`unified_product`] unchanged.
pub fn symmetry_transform(dx: f64, dp: f64, params: &SmearingParameters) -> (f64, f64) {
    let ratio = params.sigma_g / params.sigma_g_tilde;
    (ratio * dp, dx / ratio)
}

/// Optimal canonical spreads for physical scales: `(l_Lambda, m_Lambda c / 2)`.
pub fn physical_optimal_widths(scales: &PhysicalScales) -> (f64, f64) {
    optimal_widths(&scales.smearing())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub hbar: f64,
    pub sigma_g: f64,
    pub grid: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub beta: f64,
    pub width: f64,
    pub delta_x: f64,
    pub delta_p: f64,
    pub product: f64,
    pub bound: f64,
    pub slack: f64,
}

/// Unified-relation rows for Gaussian states of each width under a Gaussian
/// kernel at each `beta`.
pub fn sweep_products(betas: &[f64], widths: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(betas.len() * widths.len());
    for &beta in betas {
        let kernel = make_kernel(KernelShape::Gaussian, cfg.sigma_g, beta, cfg.grid)?;
        for &width in widths {
            let psi = gaussian_wavefunction(cfg.grid, cfg.grid.center(), width, 0.0)?;
            let report = unified_relation(&smear(&psi, &kernel, cfg.hbar)?);
            rows.push(SweepRow {
                beta,
                width,
                delta_x: report.delta_x,
                delta_p: report.delta_p,
                product: report.product,
                bound: report.bound,
                slack: report.slack,
            });
        }
    }
    Ok(rows)
}
