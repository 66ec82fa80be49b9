//! Generalized position and momentum operators, the modified Schrodinger
//! evolution `i (hbar + beta) dPsi/dt = H Psi` and the modified dispersion
//! relation.
//!
//! In `(u, v)` storage `P = -i hbar d/du - i beta d/dv` with `v` held fixed
//! under `d/du`, so `P` is diagonal in the doubly transformed representation
//! with eigenvalue `p + w`. `X` multiplies by `u + v`.

use crate::error::{Checked, Error, Result, Warning};
use crate::grid::{spectral_derivative, Field, Field2, Grid, Lattice, SpectralField2, C64};
use crate::smearing::{primed_lattice, SmearedState};

/// Spectral power beyond this fraction triggers an accuracy warning.
pub const SPECTRAL_TAIL_LIMIT: f64 = 1e-6;
/// Largest tolerated norm drift per step.
pub const NORM_DRIFT_LIMIT: f64 = 1e-9;
/// Phase budget per step used by [`EvolutionConfig::stable`].
pub const MAX_PHASE_PER_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    X,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Position,
    Momentum,
}

/// `P^2 / 2m + V(x')`, with `V` sampled on the `x'` lattice of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub mass: f64,
    pub hbar: f64,
    pub beta: f64,
    pub lattice: Lattice,
    pub potential: Vec<f64>,
}

impl Hamiltonian {
    pub fn new(mass: f64, hbar: f64, beta: f64, lattice: Lattice, potential: impl Fn(f64) -> f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Config(format!("mass must be positive, got {mass}")));
        }
        if !(hbar > 0.0 && beta >= 0.0) {
            return Err(Error::Config(format!("invalid action scales hbar = {hbar}, beta = {beta}")));
        }
        let potential: Vec<f64> = lattice.points().into_iter().map(potential).collect();
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("potential must be finite on the lattice".into()));
        }
        Ok(Self {
            mass,
            hbar,
            beta,
            lattice,
            potential,
        })
    }

    /// Hamiltonian on the `x'` lattice of `state`.
    pub fn for_state(state: &SmearedState, mass: f64, potential: impl Fn(f64) -> f64) -> Result<Self> {
        let lattice = primed_lattice(&state.u_grid(), &state.v_grid());
        Self::new(mass, state.hbar, state.beta, lattice, potential)
    }

    pub fn free(state: &SmearedState, mass: f64) -> Result<Self> {
        Self::for_state(state, mass, |_| 0.0)
    }

    pub fn is_free(&self) -> bool {
        self.potential.iter().all(|&v| v == 0.0)
    }

    /// `dV/dx'` by fourth-order central differences.
    pub fn force_gradient(&self) -> Vec<f64> {
        let v = &self.potential;
        let h = self.lattice.spacing;
        let n = v.len();
        (0..n)
            .map(|k| {
                if k >= 2 && k + 2 < n {
                    (v[k - 2] - 8.0 * v[k - 1] + 8.0 * v[k + 1] - v[k + 2]) / (12.0 * h)
                } else if k >= 1 && k + 1 < n {
                    (v[k + 1] - v[k - 1]) / (2.0 * h)
                } else if k == 0 {
                    (v[1] - v[0]) / h
                } else {
                    (v[k] - v[k - 1]) / h
                }
            })
            .collect()
    }

    fn check_state(&self, state: &SmearedState) -> Result<()> {
        let expected = primed_lattice(&state.u_grid(), &state.v_grid());
        let same = expected.count == self.lattice.count
            && (expected.start - self.lattice.start).abs() <= 1e-12 * expected.spacing
            && (expected.spacing - self.lattice.spacing).abs() <= 1e-12 * expected.spacing;
        if !same {
            return Err(Error::GridMismatch("potential lattice differs from the state's x' lattice".into()));
        }
        if (self.hbar - state.hbar).abs() > 1e-12 * self.hbar || (self.beta - state.beta).abs() > 1e-12 * self.hbar {
            return Err(Error::Config("Hamiltonian and state use different action scales".into()));
        }
        Ok(())
    }

    fn kinetic_phase(&self, p_plus_w: f64, dt: f64) -> C64 {
        C64::from_polar(1.0, -p_plus_w * p_plus_w / (2.0 * self.mass) * dt / (self.hbar + self.beta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub steps: usize,
}

impl EvolutionConfig {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { dt, steps })
    }

    /// Step size keeping the largest kinetic and potential phase per step
    /// below [`MAX_PHASE_PER_STEP`], for a total time `duration`.
    pub fn stable(h: &Hamiltonian, state: &SmearedState, duration: f64) -> Result<Self> {
        let p = state.u_grid().conjugate(state.hbar);
        let w = state.v_grid().conjugate(state.beta);
        let p_max = p.start().abs() + w.start().abs();
        let kinetic = p_max * p_max / (2.0 * h.mass);
        let potential = h.potential.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let rate = (kinetic + potential) / (h.hbar + h.beta);
        let dt_max = if rate > 0.0 { MAX_PHASE_PER_STEP / rate } else { duration.max(1.0) };
        let steps = (duration / dt_max).ceil().max(1.0) as usize;
        Self::new(duration / steps as f64, steps)
    }
}

fn multiply_p_plus_w(spec: &mut SpectralField2, f: impl Fn(f64) -> C64) {
    let (p, w) = (spec.p.points(), spec.w.points());
    let nw = w.len();
    for (idx, z) in spec.values.iter_mut().enumerate() {
        *z *= f(p[idx / nw] + w[idx % nw]);
    }
}

fn tail_warnings(spec: &SpectralField2) -> Vec<Warning> {
    let fraction = spec.tail_fraction();
    if fraction > SPECTRAL_TAIL_LIMIT {
        vec![Warning::SpectralTail { fraction }]
    } else {
        Vec::new()
    }
}

/// `P Psi` through the doubly transformed representation.
pub fn apply_p(state: &SmearedState) -> Checked<Field2> {
    apply_p_field(&state.field, state.hbar, state.beta)
}

fn apply_p_field(field: &Field2, hbar: f64, beta: f64) -> Checked<Field2> {
    let mut spec = field.transform(hbar, beta);
    let warnings = tail_warnings(&spec);
    multiply_p_plus_w(&mut spec, |q| C64::new(q, 0.0));
    Checked {
        value: spec.inverse(),
        warnings,
    }
}

fn apply_x_position(field: &Field2) -> Field2 {
    let (u, v) = (field.u.points(), field.v.points());
    let nv = v.len();
    let values = field
        .values
        .iter()
        .enumerate()
        .map(|(idx, z)| z * (u[idx / nv] + v[idx % nv]))
        .collect();
    Field2 {
        u: field.u,
        v: field.v,
        values,
    }
}

/// `i s d/dq` of spectral samples whose source grid is centered at `c`, by
/// spectral differentiation along the conjugate lattice.
fn conjugate_position(values: &mut [C64], q: &[f64], c: f64, scale: f64) {
    let n = q.len();
    let dq = q[1] - q[0];
    let lattice_grid = Grid::centered(n, n as f64 * dq).expect("conjugate lattice is a valid grid");
    let shifted: Vec<C64> = values
        .iter()
        .zip(q)
        .map(|(z, &qm)| z * C64::from_polar(1.0, qm * c / scale))
        .collect();
    let d = spectral_derivative(&Field {
        grid: lattice_grid,
        values: shifted,
    });
    for ((z, dz), &qm) in values.iter_mut().zip(&d.values).zip(q) {
        *z = c * *z + C64::new(0.0, scale) * dz * C64::from_polar(1.0, -qm * c / scale);
    }
}

fn apply_x_momentum(field: &Field2, hbar: f64, beta: f64) -> Field2 {
    let spec = field.transform(hbar, beta);
    let (p, w) = (spec.p.points(), spec.w.points());
    let (np, nw) = (p.len(), w.len());
    let mut from_p = spec.values.clone();
    let mut column = vec![C64::new(0.0, 0.0); np];
    for k in 0..nw {
        for i in 0..np {
            column[i] = from_p[i * nw + k];
        }
        conjugate_position(&mut column, &p, field.u.center(), hbar);
        for i in 0..np {
            from_p[i * nw + k] = column[i];
        }
    }
    let mut from_w = spec.values.clone();
    for row in from_w.chunks_exact_mut(nw) {
        conjugate_position(row, &w, field.v.center(), beta);
    }
    let values = from_p.iter().zip(&from_w).map(|(a, b)| a + b).collect();
    SpectralField2 {
        p: spec.p,
        w: spec.w,
        values,
    }
    .inverse()
}

/// `X Psi`: multiplication by `x' = u + v`, or `i hbar d/dp + i beta d/dw`
/// in the momentum representation.
pub fn apply_x(state: &SmearedState, route: Representation) -> Field2 {
    match route {
        Representation::Position => apply_x_position(&state.field),
        Representation::Momentum => apply_x_momentum(&state.field, state.hbar, state.beta),
    }
}

/// `<Psi|Phi> / <Psi|Psi>`.
pub fn expectation(state: &SmearedState, applied: &Field2) -> C64 {
    state.field.inner(applied) / state.norm_sqr()
}

pub fn mean(state: &SmearedState, observable: Observable) -> f64 {
    match observable {
        Observable::X => expectation(state, &apply_x(state, Representation::Position)).re,
        Observable::P => expectation(state, &apply_p(state).value).re,
    }
}

/// `<Psi|(XP - PX)|Psi>` using the position route for `X`.
pub fn commutator_expectation(state: &SmearedState) -> Checked<C64> {
    let p_psi = apply_p(state);
    let xp = apply_x_position(&p_psi.value);
    let px = apply_p_field(&apply_x_position(&state.field), state.hbar, state.beta);
    let mut warnings = p_psi.warnings;
    warnings.extend(px.warnings);
    let value = expectation(state, &xp) - expectation(state, &px.value);
    Checked { value, warnings }
}

/// `omega = (hbar k + beta (k' - k))^2 / (2 m (hbar + beta))`.
pub fn dispersion(k: f64, k_prime: f64, mass: f64, hbar: f64, beta: f64) -> f64 {
    (hbar * k + beta * (k_prime - k)).powi(2) / (2.0 * mass * (hbar + beta))
}

/// Velocity of `x'` for a packet centred on `(k, k')`: the derivative of the
/// dispersion along `(dk, dk') = (1, 2)`, since the phase is
/// `k (u - v) + k' v` and `x' = (u - v) + 2 v`.
pub fn group_velocity(k: f64, k_prime: f64, mass: f64, hbar: f64, beta: f64) -> f64 {
    let step = 1e-4 * (1.0 + k.abs() + k_prime.abs());
    let f = |t: f64| dispersion(k + t, k_prime + 2.0 * t, mass, hbar, beta);
    (f(step) - f(-step)) / (2.0 * step)
}

/// `omega = E / (hbar + beta)`.
pub fn energy_frequency(energy: f64, hbar: f64, beta: f64) -> f64 {
    energy / (hbar + beta)
}

/// `<H> = <P^2>/2m + <V(x')>`.
pub fn energy(state: &SmearedState, h: &Hamiltonian) -> Result<f64> {
    h.check_state(state)?;
    let spec = state.momentum();
    let (p, w) = (spec.p.points(), spec.w.points());
    let nw = w.len();
    let kinetic: f64 = spec
        .values
        .iter()
        .enumerate()
        .map(|(idx, z)| (p[idx / nw] + w[idx % nw]).powi(2) * z.norm_sqr())
        .sum::<f64>()
        * spec.cell()
        / (2.0 * h.mass);
    let potential = primed_expectation(state, &h.potential);
    Ok((kinetic + potential) / state.norm_sqr())
}

/// `sum |Psi(u, v)|^2 f(u + v)` for `f` sampled on the `x'` lattice.
fn primed_expectation(state: &SmearedState, f: &[f64]) -> f64 {
    let nv = state.v_grid().n();
    state
        .field
        .values
        .iter()
        .enumerate()
        .map(|(idx, z)| z.norm_sqr() * f[idx / nv + idx % nv])
        .sum::<f64>()
        * state.field.cell()
}

fn potential_phases(h: &Hamiltonian, state: &SmearedState, dt: f64) -> Vec<C64> {
    let nv = state.v_grid().n();
    (0..state.field.values.len())
        .map(|idx| C64::from_polar(1.0, -h.potential[idx / nv + idx % nv] * dt / (h.hbar + h.beta)))
        .collect()
}

/// Strang split-step evolution, staying in the momentum representation
/// between potential kicks. `dt` may be negative for backward evolution.
fn propagate(state: &SmearedState, h: &Hamiltonian, dt: f64, steps: usize) -> Result<SmearedState> {
    h.check_state(state)?;
    if steps == 0 {
        return Ok(state.clone());
    }
    let norm0 = state.norm_sqr();
    let mut spec = state.momentum();
    if h.is_free() {
        let total = dt * steps as f64;
        multiply_p_plus_w(&mut spec, |q| h.kinetic_phase(q, total));
        return Ok(state.with_field(spec.inverse()));
    }
    let kicks = potential_phases(h, state, dt);
    let (su, sv) = (state.hbar, state.beta);
    let mut full = SpectralField2 {
        values: vec![C64::new(1.0, 0.0); spec.values.len()],
        ..spec.clone()
    };
    multiply_p_plus_w(&mut full, |q| h.kinetic_phase(q, dt));
    multiply_p_plus_w(&mut spec, |q| h.kinetic_phase(q, 0.5 * dt));
    let mut norm = norm0;
    for step in 0..steps {
        let mut field = spec.inverse();
        for (z, k) in field.values.iter_mut().zip(&kicks) {
            *z *= k;
        }
        spec = field.transform(su, sv);
        if step + 1 == steps {
            multiply_p_plus_w(&mut spec, |q| h.kinetic_phase(q, 0.5 * dt));
        } else {
            spec.values.iter_mut().zip(&full.values).for_each(|(z, k)| *z *= k);
        }
        let next = spec.norm_sqr();
        let drift = (next - norm).abs() / norm0;
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::StepSize {
                drift,
                limit: NORM_DRIFT_LIMIT,
            });
        }
        norm = next;
    }
    Ok(state.with_field(spec.inverse()))
}

pub fn evolve(state: &SmearedState, h: &Hamiltonian, cfg: &EvolutionConfig) -> Result<SmearedState> {
    propagate(state, h, cfg.dt, cfg.steps)
}

/// `|d<O>/dt - (i / (hbar + beta)) <[H, O]>|`, the derivative taken by a
/// symmetric pair of single steps of size `dt`.
pub fn heisenberg_residual(state: &SmearedState, h: &Hamiltonian, observable: Observable, dt: f64) -> Result<f64> {
    let forward = propagate(state, h, dt, 1)?;
    let backward = propagate(state, h, -dt, 1)?;
    let rate = (mean(&forward, observable) - mean(&backward, observable)) / (2.0 * dt);
    let predicted = match observable {
        Observable::X => mean(state, Observable::P) / h.mass,
        Observable::P => -primed_expectation(state, &h.force_gradient()) / state.norm_sqr(),
    };
    Ok((rate - predicted).abs())
}
