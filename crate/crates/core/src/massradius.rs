//! Compton and Schwarzschild radii, the unified radius `R_C/S`, hoop
//! predicates and the mass-radius table.

use crate::error::{Error, Result};
use crate::scales::{PhysicalConstants, PhysicalScales};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Below the minimum of the unified curve, `m < m_Pl / 2`.
    Particle,
    /// `m_Pl / 2 <= m < m_Pl`.
    Planckian,
    /// `m >= m_Pl`.
    BlackHole,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Particle => "particle",
            Regime::Planckian => "planckian",
            Regime::BlackHole => "black-hole",
        }
    }

    pub fn classify(m: f64, m_pl: f64) -> Self {
        if m < 0.5 * m_pl {
            Regime::Particle
        } else if m < m_pl {
            Regime::Planckian
        } else {
            Regime::BlackHole
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassRadiusRow {
    pub mass: f64,
    pub compton: f64,
    pub schwarzschild: f64,
    pub unified: f64,
    pub regime: Regime,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// Reduced Compton wavelength `hbar / (m c)`.
pub fn compton(m: f64, consts: &PhysicalConstants) -> Result<f64> {
    positive("mass", m)?;
    Ok(consts.hbar / (m * consts.c))
}

/// `(2 G_D m / c^2)^(1/(d-2))`, the horizon radius in `d` spatial dimensions.
pub fn schwarzschild(m: f64, consts: &PhysicalConstants) -> Result<f64> {
    positive("mass", m)?;
    if consts.d < 3 {
        return Err(Error::DegenerateDimension { d: consts.d });
    }
    let base = 2.0 * consts.g_d * m / consts.c.powi(2);
    Ok(base.powf(1.0 / (consts.d as f64 - 2.0)))
}

/// `hbar / (2 m c) + 2 G m / c^2`, serving both the sub- and super-Planck
/// branches.
pub fn unified_radius(m: f64, scales: &PhysicalScales) -> Result<f64> {
    positive("mass", m)?;
    let k = &scales.consts;
    if k.d != 3 {
        return Err(Error::UnsupportedDimension {
            d: k.d,
            what: "the unified radius",
        });
    }
    Ok(k.hbar / (2.0 * m * k.c) + 2.0 * k.g_d * m / k.c.powi(2))
}

/// The two terms of the super-Planck form `2 G M / c^2 + hbar / (2 M c)`,
/// in that order.
pub fn horizon_terms(big_m: f64, scales: &PhysicalScales) -> Result<(f64, f64)> {
    positive("mass", big_m)?;
    let k = &scales.consts;
    Ok((2.0 * k.g_d * big_m / k.c.powi(2), k.hbar / (2.0 * big_m * k.c)))
}

/// Typical mass `m_Pl^2 / (4 M)` emitted by a black hole of mass `M`.
pub fn emission_mass(big_m: f64, scales: &PhysicalScales) -> Result<f64> {
    positive("mass", big_m)?;
    if big_m < scales.m_pl {
        return Err(Error::Regime(format!(
            "emission mass needs M >= m_Pl = {:e}, got {big_m:e}",
            scales.m_pl
        )));
    }
    Ok(0.25 * scales.m_pl.powi(2) / big_m)
}

/// A one-sided relation: whether it holds, and by how much.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Predicate {
    pub holds: bool,
    /// Positive when the relation holds with room to spare.
    pub margin: f64,
}

fn gup_rhs(dp: f64, scales: &PhysicalScales) -> f64 {
    let k = &scales.consts;
    2.0 * k.g_d / k.c.powi(3) * dp + k.hbar / (2.0 * dp)
}

fn smeared_spread(dx: f64, scales: &PhysicalScales) -> f64 {
    (dx * dx + 2.0 * scales.l_pl.powi(2)).sqrt()
}

fn check_spreads(dx: f64, dp: f64, scales: &PhysicalScales) -> Result<()> {
    positive("position spread", dx)?;
    positive("momentum spread", dp)?;
    if scales.consts.d != 3 {
        return Err(Error::UnsupportedDimension {
            d: scales.consts.d,
            what: "hoop predicates",
        });
    }
    Ok(())
}

/// Smeared hoop condition
/// `sqrt(dx'^2 + 2 l_Pl^2) <= (2G/c^3) dp' + hbar / (2 dp')`.
pub fn hoop_condition(dx: f64, dp: f64, scales: &PhysicalScales) -> Result<Predicate> {
    check_spreads(dx, dp, scales)?;
    let margin = gup_rhs(dp, scales) - smeared_spread(dx, scales);
    Ok(Predicate {
        holds: margin >= 0.0,
        margin,
    })
}

/// The opposite direction, the generalized-horizon bound
/// `sqrt(dx'^2 + 2 l_Pl^2) >= (2G/c^3) dp' + hbar / (2 dp')`.
pub fn horizon_bound(dx: f64, dp: f64, scales: &PhysicalScales) -> Result<Predicate> {
    check_spreads(dx, dp, scales)?;
    let margin = smeared_spread(dx, scales) - gup_rhs(dp, scales);
    Ok(Predicate {
        holds: margin >= 0.0,
        margin,
    })
}

/// Fixed-background hoop condition `dx <= (2G/c^3) dp`.
pub fn hoop_condition_fixed(dx: f64, dp: f64, scales: &PhysicalScales) -> Result<Predicate> {
    check_spreads(dx, dp, scales)?;
    let k = &scales.consts;
    let margin = 2.0 * k.g_d / k.c.powi(3) * dp - dx;
    Ok(Predicate {
        holds: margin >= 0.0,
        margin,
    })
}

/// Masses `0.5 m_Pl 10^(k/10)` for `k` in `-40..=40`.
pub fn default_masses(scales: &PhysicalScales) -> Vec<f64> {
    (-40..=40).map(|k| 0.5 * scales.m_pl * 10f64.powf(k as f64 / 10.0)).collect()
}

pub fn mass_radius_table(masses: &[f64], scales: &PhysicalScales) -> Result<Vec<MassRadiusRow>> {
    masses
        .iter()
        .map(|&m| {
            Ok(MassRadiusRow {
                mass: m,
                compton: compton(m, &scales.consts)?,
                schwarzschild: schwarzschild(m, &scales.consts)?,
                unified: unified_radius(m, scales)?,
                regime: Regime::classify(m, scales.m_pl),
            })
        })
        .collect()
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_section_minimum(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Mass minimizing the unified radius, searched in `ln(m / m_Pl)`.
pub fn unified_minimum(scales: &PhysicalScales) -> Result<f64> {
    unified_radius(scales.m_pl, scales)?;
    let f = |x: f64| unified_radius(scales.m_pl * x.exp(), scales).unwrap_or(f64::INFINITY) / scales.l_pl;
    Ok(scales.m_pl * golden_section_minimum(f, -5.0, 5.0, 1e-10).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn observed() -> PhysicalScales {
        PhysicalScales::from_constants(&PhysicalConstants::observed()).unwrap()
    }

    #[test]
    fn compton_values() {
        let s = observed();
        let m = s.m_pl / 2f64.sqrt();
        assert_relative_eq!(compton(m, &s.consts).unwrap(), 2f64.sqrt() * s.l_pl, max_relative = 1e-12);
        let unit = PhysicalConstants::natural(1e-3, 3).unwrap();
        assert_relative_eq!(compton(2.0, &unit).unwrap(), 0.5);
        // electron: 9.1093837e-28 g
        let electron = compton(9.109_383_7e-28, &s.consts).unwrap();
        assert!((electron / 3.861_592_68e-11 - 1.0).abs() < 1e-6);
        assert!(compton(0.0, &s.consts).is_err());
    }

    #[test]
    fn schwarzschild_values() {
        let s = observed();
        let m = s.m_pl / 2f64.sqrt();
        assert_relative_eq!(schwarzschild(m, &s.consts).unwrap(), 2f64.sqrt() * s.l_pl, max_relative = 1e-12);
        let unit = PhysicalConstants::natural(1e-3, 3).unwrap();
        assert_relative_eq!(schwarzschild(0.5, &unit).unwrap(), 1.0);
        let four = PhysicalConstants::natural(1e-3, 4).unwrap();
        assert_relative_eq!(schwarzschild(4.5, &four).unwrap(), 3.0, max_relative = 1e-14);
        let two = PhysicalConstants::natural(1e-3, 2).unwrap();
        assert!(matches!(schwarzschild(1.0, &two), Err(Error::DegenerateDimension { d: 2 })));
    }

    #[test]
    fn intersection_in_higher_dimensions() {
        for d in 3..=7 {
            let k = PhysicalConstants::new(1.3, 2.1, 0.7, 1e-3, d).unwrap();
            let s = PhysicalScales::from_constants(&k).unwrap();
            let inv = 1.0 / (d as f64 - 1.0);
            let m = s.m_max;
            assert_relative_eq!(m, 2f64.powf(-inv) * s.m_pl, max_relative = 1e-12);
            assert_relative_eq!(compton(m, &k).unwrap(), schwarzschild(m, &k).unwrap(), max_relative = 1e-12);
            assert_relative_eq!(compton(m, &k).unwrap(), 2f64.powf(inv) * s.l_pl, max_relative = 1e-12);
        }
    }

    #[test]
    fn unified_limits_and_minimum() {
        let s = observed();
        let small = 1e-4 * s.m_pl;
        let ratio = unified_radius(small, &s).unwrap() / (0.5 * compton(small, &s.consts).unwrap());
        assert!((ratio - 1.0).abs() < 1e-4);
        let big = 1e4 * s.m_pl;
        let ratio = unified_radius(big, &s).unwrap() / schwarzschild(big, &s.consts).unwrap();
        assert!((ratio - 1.0).abs() < 1e-4);
        let m_min = unified_minimum(&s).unwrap();
        assert!((m_min / (0.5 * s.m_pl) - 1.0).abs() < 1e-6);
        assert_relative_eq!(unified_radius(0.5 * s.m_pl, &s).unwrap(), 2.0 * s.l_pl, max_relative = 1e-12);
        let four = PhysicalScales::from_constants(&PhysicalConstants::natural(1e-3, 4).unwrap()).unwrap();
        assert!(matches!(unified_radius(1.0, &four), Err(Error::UnsupportedDimension { .. })));
    }

    #[test]
    fn emission_mass_values() {
        let s = observed();
        assert_relative_eq!(emission_mass(s.m_pl, &s).unwrap(), 0.25 * s.m_pl, max_relative = 1e-15);
        assert_relative_eq!(emission_mass(100.0 * s.m_pl, &s).unwrap(), 2.5e-3 * s.m_pl, max_relative = 1e-12);
        assert!(matches!(emission_mass(0.5 * s.m_pl, &s), Err(Error::Regime(_))));
    }

    #[test]
    fn emission_into_gup_gives_horizon_form() {
        let s = observed();
        let k = s.consts;
        for factor in [1.0, 3.7, 1e3, 1e8] {
            let big_m = factor * s.m_pl;
            let m = emission_mass(big_m, &s).unwrap();
            let dp = m * k.c;
            // GUP terms (hbar/(2 dp), 2G dp / c^3) against (2GM/c^2, hbar/(2Mc))
            let (horizon, quantum) = horizon_terms(big_m, &s).unwrap();
            assert_relative_eq!(k.hbar / (2.0 * dp), horizon, max_relative = 1e-12);
            assert_relative_eq!(2.0 * k.g_d / k.c.powi(3) * dp, quantum, max_relative = 1e-12);
        }
    }

    #[test]
    fn hoop_predicates() {
        let s = observed();
        let k = s.consts;
        let p = hoop_condition(s.l_pl, s.m_pl * k.c, &s).unwrap();
        assert!(p.holds && p.margin > 0.0);
        assert!(!hoop_condition(1e10 * s.l_pl, s.m_pl * k.c, &s).unwrap().holds);
        let opposite = horizon_bound(s.l_pl, s.m_pl * k.c, &s).unwrap();
        assert_relative_eq!(opposite.margin, -p.margin, max_relative = 1e-15);
        assert!(!hoop_condition_fixed(s.l_pl, 0.1 * s.m_pl * k.c, &s).unwrap().holds);
        assert!(hoop_condition_fixed(s.l_pl, 10.0 * s.m_pl * k.c, &s).unwrap().holds);
    }

    #[test]
    fn hoop_boundary_meets_unified_radius() {
        let s = observed();
        for factor in [0.3, 1.0, 2.0, 50.0] {
            let m = factor * s.m_pl;
            let dp = m * s.consts.c;
            // bisection on the margin in units of l_Pl
            let (mut lo, mut hi) = (0.0f64, 1e6f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if hoop_condition(mid.max(1e-300) * s.l_pl, dp, &s).unwrap().holds {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let dx = 0.5 * (lo + hi) * s.l_pl;
            let spread = (dx * dx + 2.0 * s.l_pl.powi(2)).sqrt();
            assert_relative_eq!(spread, unified_radius(m, &s).unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn table_on_default_grid() {
        let s = observed();
        let rows = mass_radius_table(&default_masses(&s), &s).unwrap();
        assert_eq!(rows.len(), 81);
        assert_relative_eq!(rows[40].mass, 0.5 * s.m_pl, max_relative = 1e-15);
        for pair in rows.windows(2) {
            assert!(pair[1].compton < pair[0].compton);
            assert!(pair[1].schwarzschild > pair[0].schwarzschild);
        }
        assert_eq!(rows[0].regime, Regime::Particle);
        assert_eq!(rows[40].regime, Regime::Planckian);
        assert_eq!(rows[80].regime, Regime::BlackHole);
    }

    proptest! {
        #[test]
        fn unified_dominates_and_is_dual(log_ratio in -8.0f64..8.0) {
            let s = observed();
            let m = s.m_pl * 10f64.powf(log_ratio);
            let r = unified_radius(m, &s).unwrap();
            prop_assert!(r >= 0.5 * compton(m, &s.consts).unwrap());
            prop_assert!(r >= schwarzschild(m, &s.consts).unwrap());
            let dual = unified_radius(s.m_pl.powi(2) / (4.0 * m), &s).unwrap();
            prop_assert!((dual / r - 1.0).abs() < 1e-12);
        }
    }
}
