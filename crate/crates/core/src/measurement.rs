//! Generalized Born rule, moments of the smeared observables, collapse and
//! sequential measurement.
//!
//! Position outcomes live on the lattice of `x' = u + v`. Momentum outcomes
//! live on a lattice of `p' = p + w` whose spacing divides the `w` spacing,
//! so that every row of `Psi~(p, w)` is resampled over exactly one period and
//! the momentum density integrates to one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{along_axis, chirp_dft, AxisTransform, Density, Field, Lattice, C64};
use crate::smearing::{primed_lattice, smear, SmearedState, SmearingKernel};

/// Outcomes whose density is below this fraction of the peak are impossible.
pub const ZERO_DENSITY_FLOOR: f64 = 1e-12;
/// Upper bound on the number of momentum-density bins.
pub const MAX_DENSITY_BINS: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Position,
    Momentum,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::Position => "position",
            Axis::Momentum => "momentum",
        }
    }
}

/// Ordered measurement record `(r_1, ..., r_n)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutcomeHistory {
    pub outcomes: Vec<(Axis, f64)>,
}

impl OutcomeHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn positions(values: &[f64]) -> Self {
        Self {
            outcomes: values.iter().map(|&r| (Axis::Position, r)).collect(),
        }
    }

    pub fn push(&mut self, axis: Axis, value: f64) {
        self.outcomes.push((axis, value));
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// `dP(x'|Psi)/dx' = sum_u |Psi(u, x' - u)|^2 du`.
pub fn position_density(state: &SmearedState) -> Density {
    let (u, v) = (state.u_grid(), state.v_grid());
    let lattice = primed_lattice(&u, &v);
    let mut values = vec![0.0; lattice.count];
    let nv = v.n();
    for (idx, a) in state.field.values.iter().enumerate() {
        values[idx / nv + idx % nv] += a.norm_sqr();
    }
    let du = u.spacing();
    values.iter_mut().for_each(|x| *x *= du);
    Density { lattice, values }
}

/// Layout of the `p'` lattice: spacing, first index (in units of the spacing)
/// of every row's window, and samples per window.
struct MomentumLayout {
    lattice: Lattice,
    row_start: Vec<i64>,
    k_min: i64,
    per_row: usize,
}

fn momentum_layout(state: &SmearedState) -> Result<MomentumLayout> {
    let p = state.u_grid().conjugate(state.hbar);
    let w = state.v_grid().conjugate(state.beta);
    let (dp, dw) = (p.spacing(), w.spacing());
    let refine = ((dw / dp) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = dw / refine as f64;
    let per_row = w.n() * refine;
    let half = 0.5 * w.n() as f64 * dw;
    let row_start: Vec<i64> = (0..p.n())
        .map(|i| ((p.point(i) - half) / h - 1e-9).ceil() as i64)
        .collect();
    let k_min = row_start[0];
    let count = (row_start[p.n() - 1] - k_min) as usize + per_row;
    if count > MAX_DENSITY_BINS {
        return Err(Error::MemoryBudget {
            required: count * std::mem::size_of::<f64>(),
            budget: MAX_DENSITY_BINS * std::mem::size_of::<f64>(),
        });
    }
    Ok(MomentumLayout {
        lattice: Lattice::new(k_min as f64 * h, h, count),
        row_start,
        k_min,
        per_row,
    })
}

/// The state with only the `u` axis transformed (scale `hbar`).
fn half_transform(state: &SmearedState) -> Vec<C64> {
    let (u, v) = (state.u_grid(), state.v_grid());
    let mut values = state.field.values.clone();
    let mut cols = AxisTransform::forward(&u, state.hbar);
    along_axis(&mut values, u.n(), v.n(), 0, |col| cols.apply(col));
    values
}

/// `dP(p'|Psi)/dp' = sum_p |Psi~(p, p' - p)|^2 dp`.
pub fn momentum_density(state: &SmearedState) -> Result<Density> {
    let layout = momentum_layout(state)?;
    let (u, v) = (state.u_grid(), state.v_grid());
    let dp = u.conjugate(state.hbar).spacing();
    let h = layout.lattice.spacing;
    let rows = half_transform(state);
    let mut values = vec![0.0; layout.lattice.count];
    for (i, row) in rows.chunks_exact(v.n()).enumerate() {
        let p = u.conjugate(state.hbar).point(i);
        let w0 = layout.row_start[i] as f64 * h - p;
        let samples = chirp_dft(row, v.start(), v.spacing(), state.beta, w0, h, layout.per_row);
        let offset = (layout.row_start[i] - layout.k_min) as usize;
        for (t, a) in samples.iter().enumerate() {
            values[offset + t] += a.norm_sqr() * dp;
        }
    }
    Ok(Density {
        lattice: layout.lattice,
        values,
    })
}

/// `sum O^n |Psi|^2` over the state lattice, with `O = u + v` or `O = p + w`.
pub fn lattice_moment(state: &SmearedState, axis: Axis, n: u32) -> f64 {
    match axis {
        Axis::Position => {
            let (u, v) = (state.u_grid().points(), state.v_grid().points());
            weighted_sum(&u, &v, &state.field.values, n) * state.field.cell()
        }
        Axis::Momentum => {
            let spec = state.momentum();
            weighted_sum(&spec.p.points(), &spec.w.points(), &spec.values, n) * spec.cell()
        }
    }
}

fn weighted_sum(a: &[f64], b: &[f64], values: &[C64], n: u32) -> f64 {
    let nb = b.len();
    values
        .iter()
        .enumerate()
        .map(|(idx, z)| (a[idx / nb] + b[idx % nb]).powi(n as i32) * z.norm_sqr())
        .sum()
}

fn central_variance(a: &[f64], b: &[f64], values: &[C64], cell: f64) -> f64 {
    let total = weighted_sum(a, b, values, 0) * cell;
    let mean = weighted_sum(a, b, values, 1) * cell / total;
    let nb = b.len();
    values
        .iter()
        .enumerate()
        .map(|(idx, z)| (a[idx / nb] + b[idx % nb] - mean).powi(2) * z.norm_sqr())
        .sum::<f64>()
        * cell
        / total
}

/// `(Delta_Psi X)^2` or `(Delta_Psi P)^2` from exact lattice moments.
pub fn generalized_variance(state: &SmearedState, axis: Axis) -> f64 {
    match axis {
        Axis::Position => central_variance(
            &state.u_grid().points(),
            &state.v_grid().points(),
            &state.field.values,
            state.field.cell(),
        ),
        Axis::Momentum => {
            let spec = state.momentum();
            central_variance(&spec.p.points(), &spec.w.points(), &spec.values, spec.cell())
        }
    }
}

/// `<X>` or `<P>` from lattice moments.
pub fn generalized_mean(state: &SmearedState, axis: Axis) -> f64 {
    lattice_moment(state, axis, 1) / lattice_moment(state, axis, 0)
}

/// Variance of `|psi|^2` or of `|psi~_hbar|^2` in the fixed background.
pub fn canonical_variance(psi: &Field, axis: Axis, hbar: f64) -> f64 {
    match axis {
        Axis::Position => psi.density().variance().value,
        Axis::Momentum => {
            let spec = psi.transform(hbar);
            Density {
                lattice: spec.grid.lattice(),
                values: spec.values.iter().map(|v| v.norm_sqr()).collect(),
            }
            .variance()
            .value
        }
    }
}

fn check_outcome(density: &Density, value: f64) -> Result<usize> {
    let floor = ZERO_DENSITY_FLOOR * density.max();
    match density.lattice.nearest(value) {
        Some(k) if density.values[k] >= floor && density.values[k] > 0.0 => Ok(k),
        Some(k) => Err(Error::ImpossibleOutcome {
            value,
            density: density.values[k],
            floor,
        }),
        None => Err(Error::ImpossibleOutcome {
            value,
            density: 0.0,
            floor,
        }),
    }
}

/// Post-measurement state after reading `x' = r`: the fixed-background factor
/// collapses to `Psi(u, r - u)` (that is `g(r - u) psi(u)` for separable
/// states) and is re-smeared with the state's kernel.
pub fn collapse_position(state: &SmearedState, r: f64) -> Result<SmearedState> {
    let density = position_density(state);
    let m = check_outcome(&density, r)?;
    let (u, v) = (state.u_grid(), state.v_grid());
    let values = (0..u.n())
        .map(|i| {
            if m >= i && m - i < v.n() {
                state.field.at(i, m - i)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let psi = Field::new(u, values)?.normalized()?;
    smear(&psi, &state.kernel, state.hbar)
}

/// Post-measurement state after reading `p' = s`: the fixed-background
/// momentum amplitude becomes `Psi~(p, s - p)` (that is
/// `g~(s - p) psi~(p)` for separable states), then is re-smeared.
pub fn collapse_momentum(state: &SmearedState, s: f64) -> Result<SmearedState> {
    let density = momentum_density(state)?;
    let k = check_outcome(&density, s)?;
    let s = density.lattice.point(k);
    let (u, v) = (state.u_grid(), state.v_grid());
    let conj = u.conjugate(state.hbar);
    let rows = half_transform(state);
    let mut spectral: Vec<C64> = rows
        .chunks_exact(v.n())
        .enumerate()
        .map(|(i, row)| chirp_dft(row, v.start(), v.spacing(), state.beta, s - conj.point(i), 0.0, 1)[0])
        .collect();
    crate::grid::inverse_in_place(&mut spectral, &u, state.hbar);
    let psi = Field::new(u, spectral)?.normalized()?;
    smear(&psi, &state.kernel, state.hbar)
}

/// Apply a collapse for each recorded outcome, in order.
pub fn apply_history(state: &SmearedState, history: &OutcomeHistory) -> Result<SmearedState> {
    let mut current = state.clone();
    for &(axis, value) in &history.outcomes {
        current = match axis {
            Axis::Position => collapse_position(&current, value)?,
            Axis::Momentum => collapse_momentum(&current, value)?,
        };
    }
    Ok(current)
}

/// Draw a lattice point with probability `rho_k dx`.
pub fn sample_from_density<R: Rng>(density: &Density, count: usize, rng: &mut R) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(density.values.len());
    let mut acc = 0.0;
    for v in &density.values {
        acc += v;
        cdf.push(acc);
    }
    (0..count)
        .map(|_| {
            let target = rng.gen::<f64>() * acc;
            let k = cdf.partition_point(|&c| c <= target).min(cdf.len() - 1);
            density.lattice.point(k)
        })
        .collect()
}

pub fn sample_outcomes(state: &SmearedState, axis: Axis, count: usize, seed: u64) -> Result<Vec<f64>> {
    let density = match axis {
        Axis::Position => position_density(state),
        Axis::Momentum => momentum_density(state)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_from_density(&density, count, &mut rng))
}

pub fn sample_outcome(state: &SmearedState, axis: Axis, seed: u64) -> Result<f64> {
    Ok(sample_outcomes(state, axis, 1, seed)?[0])
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `<psi| S^dagger O^n S |psi>` in the smeared-operator picture, where the
/// kernel enters only through its moments `<v^k>_g` (or `<w^k>_g~`).
pub fn smeared_operator_moment(psi: &Field, kernel: &SmearingKernel, axis: Axis, n: u32, hbar: f64) -> f64 {
    let (kernel_density, state_density) = match axis {
        Axis::Position => (kernel.density(), psi.density()),
        Axis::Momentum => {
            let spec = psi.transform(hbar);
            (
                kernel.conjugate_density(),
                Density {
                    lattice: spec.grid.lattice(),
                    values: spec.values.iter().map(|v| v.norm_sqr()).collect(),
                },
            )
        }
    };
    let g_moments: Vec<f64> = (0..=n).map(|k| kernel_density.moment(k).value).collect();
    state_density
        .values
        .iter()
        .enumerate()
        .map(|(i, rho)| {
            let x = state_density.lattice.point(i);
            let local: f64 = (0..=n)
                .map(|k| binomial(n, k) * x.powi(k as i32) * g_moments[(n - k) as usize])
                .sum();
            local * rho
        })
        .sum::<f64>()
        * state_density.lattice.spacing
}

/// The operator chain `S M_{r_n} S ... M_{r_1} S |psi>`, normalized once at
/// the end. Only position outcomes have a defined chain.
pub fn sequential_measure(psi: &Field, kernel: &SmearingKernel, hbar: f64, history: &OutcomeHistory) -> Result<SmearedState> {
    let u = psi.grid;
    let g = &kernel.amplitude;
    let dv = g.grid.spacing();
    let mut current = psi.values.clone();
    for &(axis, r) in &history.outcomes {
        if axis != Axis::Position {
            return Err(Error::Unsupported(
                "the operator-picture chain is only defined for position outcomes".into(),
            ));
        }
        let x_lattice = primed_lattice(&u, &g.grid);
        let m = x_lattice.nearest(r).ok_or(Error::ImpossibleOutcome {
            value: r,
            density: 0.0,
            floor: 0.0,
        })?;
        let r = x_lattice.point(m);
        // M_r S: psi(u) -> g(r - u) psi(u)
        for (i, a) in current.iter_mut().enumerate() {
            let offset = r - u.point(i);
            let j = ((offset - g.grid.start()) / dv).round();
            *a *= if j >= 0.0 && (j as usize) < g.grid.n() {
                g.values[j as usize]
            } else {
                C64::new(0.0, 0.0)
            };
        }
    }
    let chained = Field::new(u, current)?;
    let norm = chained.norm_sqr();
    let reference = psi.density().max() * g.density().max() * u.spacing();
    if !(norm > ZERO_DENSITY_FLOOR.powi(history.len() as i32 + 1) * reference) {
        return Err(Error::ImpossibleOutcome {
            value: history.outcomes.last().map_or(0.0, |o| o.1),
            density: norm,
            floor: 0.0,
        });
    }
    smear(&chained.normalized()?, kernel, hbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::smearing::{gaussian_wavefunction, make_kernel, KernelShape};
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::PI;

    const HBAR: f64 = 1.0;
    const BETA: f64 = 0.1;

    fn grid() -> Grid {
        Grid::centered(512, 32.0).unwrap()
    }

    fn kernel(sigma: f64) -> SmearingKernel {
        make_kernel(KernelShape::Gaussian, sigma, BETA, grid()).unwrap()
    }

    fn state(width: f64, mean: f64, k0: f64, sigma: f64) -> SmearedState {
        let psi = gaussian_wavefunction(grid(), mean, width, k0).unwrap();
        smear(&psi, &kernel(sigma), HBAR).unwrap()
    }

    fn normal(x: f64, mean: f64, var: f64) -> f64 {
        (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    }

    fn random_psi(seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let terms: Vec<(f64, f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(0.6..1.8),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(0.2..1.0),
                )
            })
            .collect();
        Field::from_fn(g, |x| {
            terms
                .iter()
                .map(|&(mu, w, k, a)| C64::from_polar(a * (-(x - mu).powi(2) / (4.0 * w * w)).exp(), k * x))
                .sum()
        })
        .normalized()
        .unwrap()
    }

    #[test]
    fn position_density_is_convolution() {
        let s = state(1.0, 0.0, 0.0, 0.5);
        let d = position_density(&s);
        assert!((d.integral() - 1.0).abs() < 1e-12);
        for (k, v) in d.values.iter().enumerate() {
            assert!((v - normal(d.lattice.point(k), 0.0, 1.25)).abs() < 1e-9);
        }
        assert!((d.variance().value - 1.25).abs() < 1e-9);
    }

    #[test]
    fn position_density_unsmeared_limit() {
        let g = Grid::centered(2048, 16.0).unwrap();
        let psi = gaussian_wavefunction(g, 0.0, 1.0, 0.0).unwrap();
        let k = make_kernel(KernelShape::Gaussian, 4.0 * g.spacing(), 1e-4, g).unwrap();
        let s = smear(&psi, &k, HBAR).unwrap();
        let d = position_density(&s);
        let l1: f64 = d
            .values
            .iter()
            .enumerate()
            .map(|(m, v)| (v - normal(d.lattice.point(m), 0.0, 1.0)).abs())
            .sum::<f64>()
            * d.lattice.spacing;
        assert!(l1 < 1e-3, "l1 {l1}");
    }

    #[test]
    fn momentum_density_is_convolution() {
        // the p lattice must resolve the kernel width for pointwise agreement
        let u = Grid::centered(2048, 128.0).unwrap();
        let psi = gaussian_wavefunction(u, 0.0, 1.0, 0.0).unwrap();
        let s = smear(&psi, &kernel(0.5), HBAR).unwrap();
        let d = momentum_density(&s).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-12);
        let var = 0.25 + 0.01;
        for (k, v) in d.values.iter().enumerate() {
            assert!((v - normal(d.lattice.point(k), 0.0, var)).abs() < 1e-6);
        }
        assert!((d.variance().value - var).abs() < 1e-9);
    }

    #[test]
    fn momentum_density_with_coarse_p_lattice() {
        // dw > dp: the p' lattice is refined below both spacings
        let g = Grid::centered(256, 16.0).unwrap();
        let psi = gaussian_wavefunction(g, 0.0, 1.0, 0.7).unwrap();
        let k = make_kernel(KernelShape::Exponential, 0.5, 3.0, g).unwrap();
        let s = smear(&psi, &k, 0.5).unwrap();
        let d = momentum_density(&s).unwrap();
        assert!(d.lattice.spacing <= s.u_grid().conjugate(0.5).spacing());
        assert!((d.integral() - 1.0).abs() < 1e-12);
        let direct = generalized_variance(&s, Axis::Momentum);
        // the refined lattice samples w^2 off the original w points
        assert!((d.variance().value - direct).abs() < 1e-5 * direct);
    }

    #[test]
    fn variance_additivity_values() {
        let s = state(1.0, 0.0, 0.0, 0.5);
        assert!((generalized_variance(&s, Axis::Position) / 1.25 - 1.0).abs() < 1e-9);
        assert!((generalized_variance(&s, Axis::Momentum) / 0.26 - 1.0).abs() < 1e-9);

        let opt = state(2.5f64.sqrt(), 0.0, 0.0, 0.5);
        let vx = generalized_variance(&opt, Axis::Position);
        let vp = generalized_variance(&opt, Axis::Momentum);
        assert!((vx - 2.75).abs() < 1e-9 && (vp - 0.11).abs() < 1e-9);
        assert!(((vx * vp).sqrt() - 0.55).abs() < 1e-9);
    }

    #[test]
    fn collapse_gaussian_posterior() {
        let s = state(1.0, 0.0, 0.0, 0.5);
        let c = collapse_position(&s, 1.0).unwrap();
        assert!((c.norm_sqr() - 1.0).abs() < 1e-9);
        // unprimed factor: row of Psi at v = 0 is g(0) psi_new(u)
        let psi_new = Field::new(c.u_grid(), (0..512).map(|i| c.field.at(i, 256)).collect()).unwrap();
        let d = psi_new.normalized().unwrap().density();
        assert!((d.mean() - 0.8).abs() < 1e-6);
        assert!((d.variance().value - 0.2).abs() < 1e-6);

        let c = collapse_position(&s, 0.0).unwrap();
        let psi_new = Field::new(c.u_grid(), (0..512).map(|i| c.field.at(i, 256)).collect()).unwrap();
        assert!(psi_new.normalized().unwrap().density().mean().abs() < 1e-12);
    }

    #[test]
    fn two_collapses_carry_two_kernel_factors() {
        let s = state(1.0, 0.3, 0.0, 0.5);
        let c = collapse_position(&collapse_position(&s, 1.0).unwrap(), -0.5).unwrap();
        let u = grid();
        let g = |x: f64| (-(x * x) / (4.0 * 0.25)).exp();
        let oracle = Field::from_fn(u, |x| {
            C64::new(g(-0.5 - x) * g(1.0 - x) * (-(x - 0.3).powi(2) / 4.0).exp(), 0.0)
        })
        .normalized()
        .unwrap();
        let expected = smear(&oracle, &s.kernel, HBAR).unwrap();
        assert!(c.field.sup_distance(&expected.field) < 1e-9);
    }

    #[test]
    fn impossible_outcomes() {
        let s = state(0.5, -8.0, 0.0, 0.5);
        assert!(matches!(collapse_position(&s, 12.0), Err(Error::ImpossibleOutcome { .. })));
        assert!(matches!(collapse_position(&s, 100.0), Err(Error::ImpossibleOutcome { .. })));
        assert!(matches!(collapse_momentum(&s, 1e3), Err(Error::ImpossibleOutcome { .. })));
    }

    #[test]
    fn collapse_momentum_gaussian_product() {
        let u = Grid::centered(2048, 128.0).unwrap();
        let psi = gaussian_wavefunction(u, 0.0, 1.0, 0.0).unwrap();
        let s = smear(&psi, &kernel(0.5), HBAR).unwrap();
        let (a2, b2) = (0.25, 0.01);
        for target in [0.0, 0.05] {
            let c = collapse_momentum(&s, target).unwrap();
            let lattice = momentum_density(&s).unwrap().lattice;
            let target = lattice.point(lattice.nearest(target).unwrap());
            assert!((c.norm_sqr() - 1.0).abs() < 1e-9);
            let psi_new = Field::new(c.u_grid(), (0..2048).map(|i| c.field.at(i, 256)).collect())
                .unwrap()
                .normalized()
                .unwrap();
            let spec = psi_new.transform(HBAR);
            let d = Density {
                lattice: spec.grid.lattice(),
                values: spec.values.iter().map(|v| v.norm_sqr()).collect(),
            };
            assert!((d.variance().value - 1.0 / (1.0 / a2 + 1.0 / b2)).abs() < 1e-6);
            assert!((d.mean() - target * a2 / (a2 + b2)).abs() < 1e-6);
            let before = momentum_density(&s).unwrap().mean();
            let after = momentum_density(&c).unwrap().mean();
            assert!((after - target).abs() <= (before - target).abs() + 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_peaked() {
        let s = state(1.0, 0.0, 0.0, 0.5);
        let a = sample_outcomes(&s, Axis::Position, 10, 42).unwrap();
        let b = sample_outcomes(&s, Axis::Position, 10, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(sample_outcome(&s, Axis::Momentum, 9).unwrap(), sample_outcome(&s, Axis::Momentum, 9).unwrap());

        let lattice = Lattice::new(0.0, 1.0, 50);
        let mut values = vec![0.0; 50];
        values[17] = 1.0;
        let spike = Density { lattice, values };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_from_density(&spike, 1000, &mut rng).iter().all(|&x| x == 17.0));
    }

    #[test]
    fn uniform_sampling_ks() {
        let n = 1000;
        let lattice = Lattice::new(0.0, 1.0 / n as f64, n);
        let uniform = Density {
            lattice,
            values: vec![1.0; n],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut samples = sample_from_density(&uniform, 100_000, &mut rng);
        samples.sort_by(f64::total_cmp);
        // empirical CDF against the discrete uniform CDF at every lattice point
        let mut ks: f64 = 0.0;
        let mut idx = 0;
        for k in 0..n {
            let x = lattice.point(k);
            while idx < samples.len() && samples[idx] <= x + 1e-12 {
                idx += 1;
            }
            ks = ks.max((idx as f64 / samples.len() as f64 - (k + 1) as f64 / n as f64).abs());
        }
        assert!(ks < 0.01, "ks {ks}");
    }

    #[test]
    fn gaussian_sampling_chi_square() {
        let s = state(1.0, 0.0, 0.0, 0.5);
        let density = position_density(&s);
        let samples = sample_outcomes(&s, Axis::Position, 100_000, 7).unwrap();
        // group lattice points into cells of 8 with expected count >= 5
        let cell = 8;
        let cells = density.lattice.count.div_ceil(cell);
        let mut observed = vec![0.0; cells];
        for x in &samples {
            observed[density.lattice.nearest(*x).unwrap() / cell] += 1.0;
        }
        let mut expected = vec![0.0; cells];
        for (k, v) in density.values.iter().enumerate() {
            expected[k / cell] += v * density.lattice.spacing * samples.len() as f64;
        }
        let (mut chi2, mut dof) = (0.0, 0usize);
        for (o, e) in observed.iter().zip(&expected) {
            if *e >= 5.0 {
                chi2 += (o - e).powi(2) / e;
                dof += 1;
            }
        }
        let k = (dof - 1) as f64;
        // Wilson-Hilferty: p > 0.01 iff z < 2.326
        let z = ((chi2 / k).powf(1.0 / 3.0) - (1.0 - 2.0 / (9.0 * k))) / (2.0 / (9.0 * k)).sqrt();
        assert!(z < 2.326, "chi2 {chi2} dof {dof} z {z}");
    }

    #[test]
    fn operator_moments() {
        let psi = gaussian_wavefunction(grid(), 0.4, 1.0, 0.0).unwrap();
        let k = kernel(0.5);
        assert!((smeared_operator_moment(&psi, &k, Axis::Position, 0, HBAR) - 1.0).abs() < 1e-12);
        let m2 = smeared_operator_moment(&psi, &k, Axis::Position, 2, HBAR);
        assert!((m2 - (1.0 + 0.16 + 0.25)).abs() < 1e-9);
    }

    #[test]
    fn picture_equivalence_both_axes() {
        for seed in 0..5 {
            let psi = random_psi(seed);
            let k = kernel(0.5);
            let s = smear(&psi, &k, HBAR).unwrap();
            for axis in [Axis::Position, Axis::Momentum] {
                for n in 0..=4 {
                    let op = smeared_operator_moment(&psi, &k, axis, n, HBAR);
                    let st = lattice_moment(&s, axis, n);
                    assert!((op - st).abs() <= 1e-9 * st.abs().max(1.0), "{axis:?} n={n}: {op} vs {st}");
                }
            }
        }
    }

    #[test]
    fn sequential_chain_matches_iterated_collapse() {
        let psi = random_psi(11);
        let k = kernel(0.5);
        let empty = sequential_measure(&psi, &k, HBAR, &OutcomeHistory::new()).unwrap();
        assert!(empty.field.sup_distance(&smear(&psi, &k, HBAR).unwrap().field) < 1e-12);

        let history = OutcomeHistory::positions(&[0.5, -1.0, 1.25]);
        let chain = sequential_measure(&psi, &k, HBAR, &history).unwrap();
        let iterated = apply_history(&smear(&psi, &k, HBAR).unwrap(), &history).unwrap();
        assert!(chain.field.sup_distance(&iterated.field) < 1e-9);

        let mut mixed = OutcomeHistory::positions(&[0.5]);
        mixed.push(Axis::Momentum, 0.0);
        assert!(matches!(sequential_measure(&psi, &k, HBAR, &mixed), Err(Error::Unsupported(_))));
    }

    #[test]
    fn position_histories_commute_mixed_ones_do_not() {
        let psi = random_psi(5);
        let k = kernel(0.5);
        let s = smear(&psi, &k, HBAR).unwrap();
        let a = apply_history(&s, &OutcomeHistory::positions(&[0.5, -1.0])).unwrap();
        let b = apply_history(&s, &OutcomeHistory::positions(&[-1.0, 0.5])).unwrap();
        assert!(a.field.sup_distance(&b.field) < 1e-9);

        let mut xp = OutcomeHistory::positions(&[0.5]);
        xp.push(Axis::Momentum, 0.5);
        let mut px = OutcomeHistory::new();
        px.push(Axis::Momentum, 0.5);
        px.push(Axis::Position, 0.5);
        let a = apply_history(&s, &xp).unwrap();
        let b = apply_history(&s, &px).unwrap();
        assert!(a.field.sup_distance(&b.field) > 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn additive_variance_law(seed in 0u64..10_000, sigma in 0.3f64..1.2, exp in any::<bool>()) {
            let psi = random_psi(seed);
            let shape = if exp { KernelShape::Exponential } else { KernelShape::Gaussian };
            let k = make_kernel(shape, sigma, BETA, grid()).unwrap();
            let s = smear(&psi, &k, HBAR).unwrap();
            let vx = generalized_variance(&s, Axis::Position);
            let vp = generalized_variance(&s, Axis::Momentum);
            prop_assert!((vx - canonical_variance(&psi, Axis::Position, HBAR) - k.width_v().powi(2)).abs() < 1e-6);
            prop_assert!((vp - canonical_variance(&psi, Axis::Momentum, HBAR) - k.width_w().powi(2)).abs() < 1e-6);
            prop_assert!(vx.sqrt() >= k.width_v() && vp.sqrt() >= k.width_w());
            prop_assert!((position_density(&s).integral() - 1.0).abs() < 1e-6);
            prop_assert!((momentum_density(&s).unwrap().integral() - 1.0).abs() < 1e-6);
        }
    }
}
