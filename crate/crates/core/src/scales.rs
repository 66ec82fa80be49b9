//! Closed-form physical scales of the smeared-space model in `d` spatial
//! dimensions, in cgs units.
//!
//! The position smearing width is pinned to the Compton/Schwarzschild
//! intersection and the momentum smearing width to half the de Sitter
//! momentum; everything else follows from those two choices and the
//! constants `(hbar, c, G_D, Lambda_D, d)`.

use std::f64::consts::PI;

use libm::lgamma as ln_gamma;

use crate::error::{Error, Result};

/// Reduced Planck constant, erg s.
pub const HBAR_CGS: f64 = 1.054_571_817e-27;
/// Speed of light, cm/s.
pub const C_CGS: f64 = 2.997_924_58e10;
/// Newton's constant, cm^3 g^-1 s^-2.
pub const G_CGS: f64 = 6.674_30e-8;
/// Observed cosmological constant, cm^-2.
pub const LAMBDA_CGS: f64 = 1.1e-56;
/// One electron-volt in erg.
pub const ERG_PER_EV: f64 = 1.602_176_634e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
    pub g_d: f64,
    pub lambda_d: f64,
    pub d: u32,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, c: f64, g_d: f64, lambda_d: f64, d: u32) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("c", c), ("G_D", g_d), ("Lambda_D", lambda_d)] {
            if !(v.is_finite() && v > 0.0) {
                if name == "Lambda_D" && v.is_finite() {
                    return Err(Error::NonPositiveLambda(v));
                }
                return Err(Error::Config(format!("{name} must be finite and positive, got {v}")));
            }
        }
        if d < 1 {
            return Err(Error::Config("spatial dimension d must be at least 1".into()));
        }
        Ok(Self {
            hbar,
            c,
            g_d,
            lambda_d,
            d,
        })
    }

    /// The observed (3+1)-dimensional universe in cgs units.
    pub fn observed() -> Self {
        Self {
            hbar: HBAR_CGS,
            c: C_CGS,
            g_d: G_CGS,
            lambda_d: LAMBDA_CGS,
            d: 3,
        }
    }

    /// `hbar = c = G_D = 1` with the given cosmological constant.
    pub fn natural(lambda_d: f64, d: u32) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, lambda_d, d)
    }

    fn inverse_d_minus_one(&self) -> Result<f64> {
        if self.d < 2 {
            return Err(Error::DegenerateDimension { d: self.d });
        }
        Ok(1.0 / (self.d as f64 - 1.0))
    }
}

/// Volume of the unit ball in `d` dimensions, `pi^(d/2) / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(d: u32) -> f64 {
    let half = d as f64 / 2.0;
    (half * PI.ln() - ln_gamma(half + 1.0)).exp()
}

/// D-dimensional Planck length and mass.
pub fn planck_scales(consts: &PhysicalConstants) -> Result<(f64, f64)> {
    let inv = consts.inverse_d_minus_one()?;
    let d = consts.d as f64;
    let length = (consts.hbar * consts.g_d / consts.c.powi(3)).powf(inv);
    let mass = (consts.hbar.powf(d - 2.0) * consts.c.powf(4.0 - d) / consts.g_d).powf(inv);
    Ok((length, mass))
}

/// D-dimensional de Sitter length and mass.
pub fn desitter_scales(consts: &PhysicalConstants) -> Result<(f64, f64)> {
    if !(consts.lambda_d > 0.0) {
        return Err(Error::NonPositiveLambda(consts.lambda_d));
    }
    let d = consts.d as f64;
    let length = (d / consts.lambda_d).sqrt();
    let mass = consts.hbar / consts.c * (consts.lambda_d / d).sqrt();
    Ok((length, mass))
}

/// Position and momentum smearing widths `(sigma_g, sigma_g_tilde)`.
pub fn smearing_widths(consts: &PhysicalConstants) -> Result<(f64, f64)> {
    let inv = consts.inverse_d_minus_one()?;
    let (l_pl, _) = planck_scales(consts)?;
    let (_, m_ds) = desitter_scales(consts)?;
    Ok((2f64.powf(inv) * l_pl, 0.5 * m_ds * consts.c))
}

/// Dark-energy mass density `Lambda_D c^2 / (2 d Omega_d G_D)`.
pub fn dark_energy_density(consts: &PhysicalConstants) -> f64 {
    let d = consts.d as f64;
    consts.lambda_d * consts.c.powi(2) / (2.0 * d * unit_ball_volume(consts.d) * consts.g_d)
}

/// D-dimensional Planck density `m_Pl / (Omega_d l_Pl^d)`.
pub fn planck_density(consts: &PhysicalConstants) -> Result<f64> {
    let (l_pl, m_pl) = planck_scales(consts)?;
    Ok(m_pl / (unit_ball_volume(consts.d) * l_pl.powi(consts.d as i32)))
}

/// The geometric transform scale `beta = 2 sigma_g sigma_g_tilde`.
pub fn beta_scale(consts: &PhysicalConstants) -> Result<f64> {
    let (sigma_g, sigma_g_tilde) = smearing_widths(consts)?;
    Ok(2.0 * sigma_g * sigma_g_tilde)
}

/// `beta` evaluated through the density ratio,
/// `2^((d+1)/(2(d-1))) hbar sqrt(rho_Lambda / rho_Pl)`.
pub fn beta_from_densities(consts: &PhysicalConstants) -> Result<f64> {
    let inv = consts.inverse_d_minus_one()?;
    let d = consts.d as f64;
    let ratio = dark_energy_density(consts) / planck_density(consts)?;
    Ok(2f64.powf(0.5 * (d + 1.0) * inv) * consts.hbar * ratio.sqrt())
}

/// The parameters that enter the uncertainty relations, independent of
/// unit system. `beta` is always `2 sigma_g sigma_g_tilde`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmearingParameters {
    pub hbar: f64,
    pub sigma_g: f64,
    pub sigma_g_tilde: f64,
}

impl SmearingParameters {
    pub fn new(hbar: f64, sigma_g: f64, sigma_g_tilde: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("sigma_g", sigma_g), ("sigma_g_tilde", sigma_g_tilde)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(Self {
            hbar,
            sigma_g,
            sigma_g_tilde,
        })
    }

    /// Dimensionless mode: the caller fixes `(hbar, beta, sigma_g)` and the
    /// momentum width follows from `2 sigma_g sigma_g_tilde = beta`.
    pub fn dimensionless(hbar: f64, beta: f64, sigma_g: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Config(format!("beta must be finite and positive, got {beta}")));
        }
        Self::new(hbar, sigma_g, beta / (2.0 * sigma_g))
    }

    pub fn beta(&self) -> f64 {
        2.0 * self.sigma_g * self.sigma_g_tilde
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalScales {
    pub consts: PhysicalConstants,
    pub l_pl: f64,
    pub m_pl: f64,
    pub l_ds: f64,
    pub m_ds: f64,
    pub sigma_g: f64,
    pub sigma_g_tilde: f64,
    pub beta: f64,
    pub rho_lambda: f64,
    pub rho_pl: f64,
    /// Only defined for `d = 3`.
    pub l_lambda: Option<f64>,
    /// Only defined for `d = 3`.
    pub m_lambda: Option<f64>,
    pub m_max: f64,
}

impl PhysicalScales {
    pub fn from_constants(consts: &PhysicalConstants) -> Result<Self> {
        let (l_pl, m_pl) = planck_scales(consts)?;
        let (l_ds, m_ds) = desitter_scales(consts)?;
        let (sigma_g, sigma_g_tilde) = smearing_widths(consts)?;
        let inv = consts.inverse_d_minus_one()?;
        let mut scales = Self {
            consts: *consts,
            l_pl,
            m_pl,
            l_ds,
            m_ds,
            sigma_g,
            sigma_g_tilde,
            beta: 2.0 * sigma_g * sigma_g_tilde,
            rho_lambda: dark_energy_density(consts),
            rho_pl: planck_density(consts)?,
            l_lambda: None,
            m_lambda: None,
            m_max: 2f64.powf(-inv) * m_pl,
        };
        if consts.d == 3 {
            let (l, m) = optimal_scales(&scales)?;
            scales.l_lambda = Some(l);
            scales.m_lambda = Some(m);
        }
        Ok(scales)
    }

    pub fn smearing(&self) -> SmearingParameters {
        SmearingParameters {
            hbar: self.consts.hbar,
            sigma_g: self.sigma_g,
            sigma_g_tilde: self.sigma_g_tilde,
        }
    }

    fn require_three(&self, what: &'static str) -> Result<()> {
        if self.consts.d != 3 {
            return Err(Error::UnsupportedDimension {
                d: self.consts.d,
                what,
            });
        }
        Ok(())
    }
}

/// `l_Lambda = 2^(1/4) sqrt(l_Pl l_dS)` and `m_Lambda = 2^(-1/4) sqrt(m_Pl m_dS)`.
pub fn optimal_scales(scales: &PhysicalScales) -> Result<(f64, f64)> {
    scales.require_three("the optimal (l_Lambda, m_Lambda) scales")?;
    let root = 2f64.powf(0.25);
    Ok((
        root * (scales.l_pl * scales.l_ds).sqrt(),
        (scales.m_pl * scales.m_ds).sqrt() / root,
    ))
}

/// Vacuum energy density with modes cut off between the de Sitter and the
/// `l_Lambda` wavenumbers, each mode carrying rest mass `2 pi / l_Lambda`:
///
/// `(hbar/c) * int sqrt(k^2 + k_max^2) d^3k / (2 pi)^3`, `k in [2pi/l_dS, 2pi/l_Lambda]`.
pub fn vacuum_density_estimate(scales: &PhysicalScales) -> Result<f64> {
    scales.require_three("the vacuum density estimate")?;
    let (l_lambda, _) = optimal_scales(scales)?;
    if l_lambda >= scales.l_ds {
        return Err(Error::Domain(format!(
            "empty mode range: l_Lambda = {l_lambda:e} >= l_dS = {:e}",
            scales.l_ds
        )));
    }
    let k_min = 2.0 * PI / scales.l_ds;
    let k_max = 2.0 * PI / l_lambda;
    Ok(vacuum_mode_density(scales.consts.hbar, scales.consts.c, k_min, k_max, k_max))
}

/// `(hbar/c) * int_{k_min}^{k_max} 4 pi k^2 sqrt(k^2 + mass_k^2) dk / (2 pi)^3`.
pub fn vacuum_mode_density(hbar: f64, c: f64, k_min: f64, k_max: f64, mass_k: f64) -> f64 {
    if k_max <= k_min {
        return 0.0;
    }
    let integrand = |k: f64| 4.0 * PI * k * k * (k * k + mass_k * mass_k).sqrt();
    let integral = adaptive_simpson(&integrand, k_min, k_max, 1e-12);
    hbar / c * integral / (2.0 * PI).powi(3)
}

/// Horizon-scale mass and the matching optimal momentum spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonScales {
    pub mass: f64,
    pub optimal_momentum: f64,
}

/// `m_H = hbar / (l_H c)` and `(Delta p')_opt ~ sqrt(m_Pl m_H) c`.
pub fn horizon_mass(l_h: f64, consts: &PhysicalConstants) -> Result<HorizonScales> {
    if !(l_h.is_finite() && l_h > 0.0) {
        return Err(Error::Domain(format!("horizon length must be positive, got {l_h}")));
    }
    let (_, m_pl) = planck_scales(consts)?;
    let mass = consts.hbar / (l_h * consts.c);
    Ok(HorizonScales {
        mass,
        optimal_momentum: (m_pl * mass).sqrt() * consts.c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyBounds {
    pub x_lo: f64,
    pub x_hi: f64,
    pub p_lo: f64,
    pub p_hi: f64,
}

/// Position and momentum uncertainty bounds in a universe of finite size.
pub fn finite_universe_bounds(scales: &PhysicalScales) -> Result<UncertaintyBounds> {
    scales.require_three("the finite-universe bounds")?;
    let c = scales.consts.c;
    Ok(finite_bounds_from(scales.l_pl, scales.l_ds, scales.m_pl, scales.m_ds, c))
}

pub(crate) fn finite_bounds_from(l_pl: f64, l_ds: f64, m_pl: f64, m_ds: f64, c: f64) -> UncertaintyBounds {
    UncertaintyBounds {
        x_lo: 2.0 * l_pl,
        x_hi: (l_ds * l_ds + 2.0 * l_pl * l_pl).sqrt(),
        p_lo: m_ds * c / 2f64.sqrt(),
        p_hi: 0.5 * (0.5 * m_pl * m_pl + m_ds * m_ds).sqrt() * c,
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    let tol = rel_tol * whole.abs().max(f64::MIN_POSITIVE);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}
