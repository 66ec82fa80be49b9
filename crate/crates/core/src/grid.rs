//! Uniform periodic lattices and unitary Fourier transforms at an explicit
//! conjugation scale.
//!
//! A transform at scale `s` maps `f(x)` to
//! `f~(q) = (2 pi s)^(-1/2) * integral f(x) exp(-i q x / s) dx`, discretized so
//! that `sum |f~|^2 dq = sum |f|^2 dx` holds exactly. The conjugate lattice is
//! `q_m = (m - n/2) dq` with `dq = 2 pi s / L`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Checked, Error, Result, Warning};

pub type C64 = Complex64;

/// Densities are accepted as normalized within this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

type PlanCache = HashMap<(usize, bool), Arc<dyn Fft<f64>>>;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, PlanCache)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

/// Cached FFT plan for this thread. `inverse` is unnormalized.
pub(crate) fn fft_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((n, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

/// Uniform periodic sample lattice `x_j = center - L/2 + j L/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    center: f64,
    extent: f64,
}

impl Grid {
    pub const DEFAULT_N: usize = 512;

    pub fn new(n: usize, center: f64, extent: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Config(format!("grid size must be a power of two >= 8, got {n}")));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::Config(format!("grid extent must be positive, got {extent}")));
        }
        if !center.is_finite() {
            return Err(Error::Config("grid center must be finite".into()));
        }
        Ok(Self { n, center, extent })
    }

    pub fn centered(n: usize, extent: f64) -> Result<Self> {
        Self::new(n, 0.0, extent)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn start(&self) -> f64 {
        self.center - 0.5 * self.extent
    }

    pub fn point(&self, j: usize) -> f64 {
        self.start() + j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    pub fn conjugate(&self, scale: f64) -> ConjugateGrid {
        ConjugateGrid { base: *self, scale }
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::new(self.start(), self.spacing(), self.n)
    }

    /// Index of the sample nearest to `x`, if `x` lies inside the grid.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        self.lattice().nearest(x)
    }

    /// Same lattice up to floating-point noise in the stored parameters.
    pub fn same_as(&self, other: &Grid) -> bool {
        let tol = 1e-12 * self.extent.max(other.extent);
        self.n == other.n
            && (self.extent - other.extent).abs() <= tol
            && (self.center - other.center).abs() <= tol
    }
}

/// The spectral lattice of a [`Grid`] at transform scale `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateGrid {
    pub base: Grid,
    pub scale: f64,
}

impl ConjugateGrid {
    pub fn n(&self) -> usize {
        self.base.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI * self.scale / self.base.extent
    }

    pub fn start(&self) -> f64 {
        -(self.base.n as f64 / 2.0) * self.spacing()
    }

    pub fn point(&self, m: usize) -> f64 {
        (m as f64 - self.base.n as f64 / 2.0) * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.base.n).map(|m| self.point(m)).collect()
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::new(self.start(), self.spacing(), self.base.n)
    }
}

/// A finite arithmetic sequence of sample points with no size restriction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub start: f64,
    pub spacing: f64,
    pub count: usize,
}

impl Lattice {
    pub fn new(start: f64, spacing: f64, count: usize) -> Self {
        Self {
            start,
            spacing,
            count,
        }
    }

    pub fn point(&self, k: usize) -> f64 {
        self.start + k as f64 * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.point(k)).collect()
    }

    pub fn nearest(&self, x: f64) -> Option<usize> {
        let k = ((x - self.start) / self.spacing).round();
        if k.is_finite() && k >= 0.0 && (k as usize) < self.count {
            Some(k as usize)
        } else {
            None
        }
    }
}

/// Complex samples over a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<C64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.n
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn from_real(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_sqr();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Domain("cannot normalize a zero field".into()));
        }
        let k = 1.0 / norm.sqrt();
        self.values.iter_mut().for_each(|v| *v *= k);
        Ok(self)
    }

    /// `|f|^2` as a density over the grid lattice.
    pub fn density(&self) -> Density {
        Density {
            lattice: self.grid.lattice(),
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    pub fn inner(&self, other: &Field) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.grid.spacing()
    }

    /// Unitary transform at scale `s`.
    pub fn transform(&self, scale: f64) -> SpectralField {
        let mut values = self.values.clone();
        forward_in_place(&mut values, &self.grid, scale);
        SpectralField {
            grid: self.grid.conjugate(scale),
            values,
        }
    }
}

/// Complex samples over a [`ConjugateGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: ConjugateGrid,
    pub values: Vec<C64>,
}

impl SpectralField {
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// Inverse transform at scale `s`. When `s` differs from the forward
    /// scale the result lives on the original grid rescaled by `s / s_forward`.
    pub fn inverse(&self, scale: f64) -> Field {
        let ratio = scale / self.grid.scale;
        let base = self.grid.base;
        let grid = Grid {
            n: base.n,
            center: base.center * ratio,
            extent: base.extent * ratio,
        };
        let mut values = self.values.clone();
        inverse_in_place(&mut values, &grid, scale);
        Field { grid, values }
    }

    /// Fraction of the norm held in the outer quarter of the lattice.
    pub fn tail_fraction(&self) -> f64 {
        tail_fraction(&self.values, self.grid.n())
    }
}

/// Complex samples over a product of two grids, stored row-major with the
/// first grid as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2 {
    pub u: Grid,
    pub v: Grid,
    pub values: Vec<C64>,
}

impl Field2 {
    pub fn new(u: Grid, v: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != u.n * v.n {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                u.n,
                v.n
            )));
        }
        Ok(Self { u, v, values })
    }

    pub fn from_fn(u: Grid, v: Grid, f: impl Fn(f64, f64) -> C64) -> Self {
        let vs = v.points();
        let values = u
            .points()
            .into_iter()
            .flat_map(|x| vs.iter().map(move |&y| (x, y)).collect::<Vec<_>>())
            .map(|(x, y)| f(x, y))
            .collect();
        Self { u, v, values }
    }

    /// Outer product `a(u) b(v)`.
    pub fn product(a: &Field, b: &Field) -> Self {
        let values = a
            .values
            .iter()
            .flat_map(|x| b.values.iter().map(move |y| x * y))
            .collect();
        Self {
            u: a.grid,
            v: b.grid,
            values,
        }
    }

    pub fn cell(&self) -> f64 {
        self.u.spacing() * self.v.spacing()
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.v.n + j]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell()
    }

    pub fn inner(&self, other: &Field2) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.cell()
    }

    pub fn scale_by(&mut self, k: C64) {
        self.values.iter_mut().for_each(|v| *v *= k);
    }

    /// Transform the first axis at `su` and the second at `sv`.
    pub fn transform(&self, su: f64, sv: f64) -> SpectralField2 {
        let mut values = self.values.clone();
        let (nu, nv) = (self.u.n, self.v.n);
        let mut rows = AxisTransform::forward(&self.v, sv);
        along_axis(&mut values, nu, nv, 1, |row| rows.apply(row));
        let mut cols = AxisTransform::forward(&self.u, su);
        along_axis(&mut values, nu, nv, 0, |col| cols.apply(col));
        SpectralField2 {
            p: self.u.conjugate(su),
            w: self.v.conjugate(sv),
            values,
        }
    }

    pub fn sup_distance(&self, other: &Field2) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Two-axis spectral samples; the inverse of [`Field2::transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField2 {
    pub p: ConjugateGrid,
    pub w: ConjugateGrid,
    pub values: Vec<C64>,
}

impl SpectralField2 {
    pub fn cell(&self) -> f64 {
        self.p.spacing() * self.w.spacing()
    }

    pub fn at(&self, i: usize, k: usize) -> C64 {
        self.values[i * self.w.n() + k]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell()
    }

    /// Inverse at the forward scales.
    pub fn inverse(&self) -> Field2 {
        let (u, v) = (self.p.base, self.w.base);
        let mut values = self.values.clone();
        let (nu, nv) = (u.n, v.n);
        let mut rows = AxisTransform::inverse(&v, self.w.scale);
        along_axis(&mut values, nu, nv, 1, |row| rows.apply(row));
        let mut cols = AxisTransform::inverse(&u, self.p.scale);
        along_axis(&mut values, nu, nv, 0, |col| cols.apply(col));
        Field2 { u, v, values }
    }

    /// Fraction of the norm in the outer quarter of either axis.
    pub fn tail_fraction(&self) -> f64 {
        let (np, nw) = (self.p.n(), self.w.n());
        let outer = |m: usize, n: usize| (m as isize - n as isize / 2).unsigned_abs() >= 3 * n / 8;
        let mut tail = 0.0;
        let mut total = 0.0;
        for i in 0..np {
            for k in 0..nw {
                let a = self.values[i * nw + k].norm_sqr();
                total += a;
                if outer(i, np) || outer(k, nw) {
                    tail += a;
                }
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }
}

pub(crate) fn tail_fraction(values: &[C64], n: usize) -> f64 {
    let cut = 3 * n / 8;
    let mut tail = 0.0;
    let mut total = 0.0;
    for (m, v) in values.iter().enumerate() {
        let p = v.norm_sqr();
        total += p;
        if (m as isize - n as isize / 2).unsigned_abs() >= cut {
            tail += p;
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

/// A 1-D transform with its phase tables precomputed, for reuse across the
/// rows of a 2-D array.
pub(crate) struct AxisTransform {
    fft: Arc<dyn Fft<f64>>,
    pre: Vec<C64>,
    post: Vec<C64>,
    scratch: Vec<C64>,
}

impl AxisTransform {
    /// Forward transform of samples on `grid` at `scale`.
    pub(crate) fn forward(grid: &Grid, scale: f64) -> Self {
        let conj = grid.conjugate(scale);
        let prefactor = grid.spacing() / (2.0 * PI * scale).sqrt();
        let x0 = grid.start();
        let pre = (0..grid.n).map(|j| C64::new(if j % 2 == 1 { -1.0 } else { 1.0 }, 0.0)).collect();
        let post = (0..grid.n)
            .map(|m| C64::from_polar(prefactor, -conj.point(m) * x0 / scale))
            .collect();
        Self::with_tables(fft_plan(grid.n, false), pre, post)
    }

    /// Inverse transform at `scale`, producing samples on `grid`.
    pub(crate) fn inverse(grid: &Grid, scale: f64) -> Self {
        let conj = grid.conjugate(scale);
        let prefactor = conj.spacing() / (2.0 * PI * scale).sqrt();
        let x0 = grid.start();
        let pre = (0..grid.n).map(|m| C64::from_polar(1.0, conj.point(m) * x0 / scale)).collect();
        let post = (0..grid.n)
            .map(|j| C64::new(if j % 2 == 1 { -prefactor } else { prefactor }, 0.0))
            .collect();
        Self::with_tables(fft_plan(grid.n, true), pre, post)
    }

    fn with_tables(fft: Arc<dyn Fft<f64>>, pre: Vec<C64>, post: Vec<C64>) -> Self {
        let scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Self { fft, pre, post, scratch }
    }

    pub(crate) fn apply(&mut self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.pre.len());
        buf.iter_mut().zip(&self.pre).for_each(|(v, k)| *v *= k);
        self.fft.process_with_scratch(buf, &mut self.scratch);
        buf.iter_mut().zip(&self.post).for_each(|(v, k)| *v *= k);
    }
}

/// Forward transform of samples on `grid` at `scale`, in place.
pub(crate) fn forward_in_place(buf: &mut [C64], grid: &Grid, scale: f64) {
    AxisTransform::forward(grid, scale).apply(buf);
}

/// Inverse transform at `scale`, producing samples on `grid`. The spectral
/// lattice is the conjugate of `grid` at that scale.
pub(crate) fn inverse_in_place(buf: &mut [C64], grid: &Grid, scale: f64) {
    AxisTransform::inverse(grid, scale).apply(buf);
}

/// Apply a 1-D in-place operation along one axis of a row-major `rows x cols` array.
pub(crate) fn along_axis(
    values: &mut [C64],
    rows: usize,
    cols: usize,
    axis: usize,
    mut op: impl FnMut(&mut [C64]),
) {
    if axis == 1 {
        for row in values.chunks_exact_mut(cols) {
            op(row);
        }
    } else {
        let mut column = vec![C64::new(0.0, 0.0); rows];
        for j in 0..cols {
            for i in 0..rows {
                column[i] = values[i * cols + j];
            }
            op(&mut column);
            for i in 0..rows {
                values[i * cols + j] = column[i];
            }
        }
    }
}

/// Evaluate `(dx / sqrt(2 pi s)) * sum_j f_j exp(-i (q0 + k dq)(x0 + j dx) / s)`
/// for `k = 0..count`, with arbitrary `q0` and `dq` (chirp-z transform).
pub fn chirp_dft(values: &[C64], x0: f64, dx: f64, scale: f64, q0: f64, dq: f64, count: usize) -> Vec<C64> {
    let n = values.len();
    if n == 0 || count == 0 {
        return vec![C64::new(0.0, 0.0); count];
    }
    let alpha = dq * dx / scale;
    let size = (n + count - 1).next_power_of_two();
    let chirp = |t: i64| C64::from_polar(1.0, 0.5 * alpha * (t * t) as f64);

    let mut a = vec![C64::new(0.0, 0.0); size];
    for (j, f) in values.iter().enumerate() {
        let phase = -q0 * j as f64 * dx / scale;
        a[j] = f * C64::from_polar(1.0, phase) * chirp(j as i64).conj();
    }
    let mut b = vec![C64::new(0.0, 0.0); size];
    for t in 0..count {
        b[t] = chirp(t as i64);
    }
    for t in 1..n {
        b[size - t] = chirp(t as i64);
    }
    fft_plan(size, false).process(&mut a);
    fft_plan(size, false).process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft_plan(size, true).process(&mut a);

    let prefactor = dx / (2.0 * PI * scale).sqrt() / size as f64;
    (0..count)
        .map(|k| {
            let q = q0 + k as f64 * dq;
            a[k] * chirp(k as i64).conj() * C64::from_polar(prefactor, -q * x0 / scale)
        })
        .collect()
}

/// Periodic convolution `h(x) = sum_y f(y) g(x - y) dx` on a shared grid.
/// `g` is read as a function of the offset from the grid center.
pub fn convolve(f: &Field, g: &Field) -> Result<Field> {
    if !f.grid.same_as(&g.grid) {
        return Err(Error::GridMismatch(format!("cannot convolve {:?} with {:?}", f.grid, g.grid)));
    }
    let n = f.grid.n;
    let mut a = f.values.clone();
    let mut b: Vec<C64> = (0..n).map(|k| g.values[(k + n / 2) % n]).collect();
    fft_plan(n, false).process(&mut a);
    fft_plan(n, false).process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft_plan(n, true).process(&mut a);
    let k = f.grid.spacing() / n as f64;
    a.iter_mut().for_each(|v| *v *= k);
    Ok(Field {
        grid: f.grid,
        values: a,
    })
}

/// Acyclic convolution `c_m = sum_{i+j=m} a_i b_j`, length `a.len() + b.len() - 1`.
pub(crate) fn linear_convolve(a: &[C64], b: &[C64]) -> Vec<C64> {
    let len = a.len() + b.len() - 1;
    let size = len.next_power_of_two();
    let mut fa = vec![C64::new(0.0, 0.0); size];
    let mut fb = vec![C64::new(0.0, 0.0); size];
    fa[..a.len()].copy_from_slice(a);
    fb[..b.len()].copy_from_slice(b);
    fft_plan(size, false).process(&mut fa);
    fft_plan(size, false).process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y / size as f64;
    }
    fft_plan(size, true).process(&mut fa);
    fa.truncate(len);
    fa
}

/// `d/dx` by multiplication with `i q_m / s` on the conjugate lattice.
pub fn spectral_derivative(field: &Field) -> Field {
    let mut spec = field.transform(1.0);
    let conj = spec.grid;
    for (m, v) in spec.values.iter_mut().enumerate() {
        *v *= C64::new(0.0, conj.point(m));
    }
    spec.inverse(1.0)
}

/// A real density sampled on a [`Lattice`].
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub lattice: Lattice,
    pub values: Vec<f64>,
}

impl Density {
    pub fn new(lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.count {
            return Err(Error::GridMismatch(format!(
                "{} density values for {} lattice points",
                values.len(),
                lattice.count
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain("density must be finite and nonnegative".into()));
        }
        Ok(Self { lattice, values })
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.lattice.spacing
    }

    fn check(&self) -> Vec<Warning> {
        let integral = self.integral();
        if (integral - 1.0).abs() > NORMALIZATION_TOLERANCE {
            vec![Warning::Unnormalized { integral }]
        } else {
            Vec::new()
        }
    }

    /// Riemann sum `sum x^n rho(x) dx`.
    pub fn moment(&self, n: u32) -> Checked<f64> {
        let value = self
            .values
            .iter()
            .enumerate()
            .map(|(k, r)| self.lattice.point(k).powi(n as i32) * r)
            .sum::<f64>()
            * self.lattice.spacing;
        Checked {
            value,
            warnings: self.check(),
        }
    }

    pub fn mean(&self) -> f64 {
        let total: f64 = self.values.iter().sum();
        self.values
            .iter()
            .enumerate()
            .map(|(k, r)| self.lattice.point(k) * r)
            .sum::<f64>()
            / total
    }

    /// Central second moment, normalized by the integral.
    pub fn variance(&self) -> Checked<f64> {
        let mu = self.mean();
        let total: f64 = self.values.iter().sum();
        let value = self
            .values
            .iter()
            .enumerate()
            .map(|(k, r)| (self.lattice.point(k) - mu).powi(2) * r)
            .sum::<f64>()
            / total;
        Checked {
            value,
            warnings: self.check(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = k;
            }
        }
        best
    }

    /// `sum |a - b| dx` over a shared lattice.
    pub fn l1_distance(&self, other: &Density) -> Result<f64> {
        let (a, b) = (self.lattice, other.lattice);
        let tol = 1e-9 * a.spacing.abs();
        if a.count != b.count || (a.spacing - b.spacing).abs() > tol || (a.start - b.start).abs() > tol {
            return Err(Error::GridMismatch("densities live on different lattices".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
            * a.spacing)
    }
}
