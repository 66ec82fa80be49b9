//! Acceptance gate. Runs every criterion, prints one line each and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smearspace::dynamics::{
    commutator_expectation, evolve, group_velocity, heisenberg_residual, EvolutionConfig, Hamiltonian, Observable,
};
use smearspace::grid::{Field, Grid, Lattice, C64};
use smearspace::massradius::{compton, schwarzschild, unified_minimum, unified_radius};
use smearspace::measurement::{
    apply_history, collapse_position, generalized_mean, generalized_variance, lattice_moment, position_density,
    sequential_measure, smeared_operator_moment, Axis, OutcomeHistory,
};
use smearspace::multiparticle::{entanglement_entropy, smear_two, KernelTwoBody, TwoBodyKind, TwoBodyWavefunction};
use smearspace::povm::{povm_completeness, povm_variance, ResolutionKernel};
use smearspace::scales::{PhysicalConstants, PhysicalScales, ERG_PER_EV};
use smearspace::smearing::{gaussian_wavefunction, make_kernel, smear, KernelShape, SmearedState, SmearingKernel};
use smearspace::uncertainty::unified_relation;

const HBAR: f64 = 1.0;
const BETA: f64 = 0.1;
const SIGMA_G: f64 = 0.5;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn grid() -> Grid {
    Grid::centered(512, 32.0).unwrap()
}

fn kernel() -> SmearingKernel {
    make_kernel(KernelShape::Gaussian, SIGMA_G, BETA, grid()).unwrap()
}

fn gaussian_state(width: f64, mean: f64, k0: f64) -> SmearedState {
    let psi = gaussian_wavefunction(grid(), mean, width, k0).unwrap();
    smear(&psi, &kernel(), HBAR).unwrap()
}

/// A normalized superposition of three random Gaussian packets.
fn random_psi(rng: &mut ChaCha8Rng) -> Field {
    let terms: Vec<(f64, f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.6..1.8),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.2..1.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    Field::from_fn(grid(), |x| {
        terms
            .iter()
            .map(|&(mu, w, k, a, phase)| C64::from_polar(a * (-(x - mu).powi(2) / (4.0 * w * w)).exp(), k * x + phase))
            .sum()
    })
    .normalized()
    .unwrap()
}

fn relative(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn within_time(elapsed: Duration, limit: Duration) -> (bool, String) {
    (elapsed < limit, format!("{:.3} s (limit {:.1} s)", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

fn variance_additivity() -> Outcome {
    let start = Instant::now();
    let s = gaussian_state(1.0, 0.0, 0.0);
    let vx = generalized_variance(&s, Axis::Position);
    let vp = generalized_variance(&s, Axis::Momentum);
    let (fast, time) = within_time(start.elapsed(), Duration::from_secs(1));
    let (ex, ep) = (relative(vx, 1.25), relative(vp, 0.26));
    outcome(
        ex < 1e-6 && ep < 1e-6 && fast,
        format!("dX^2 = {vx:.12} (rel {ex:.1e}), dP^2 = {vp:.12} (rel {ep:.1e}), {time}"),
    )
}

fn bound_saturation() -> Outcome {
    let start = Instant::now();
    let opt = unified_relation(&gaussian_state(2.5f64.sqrt(), 0.0, 0.0)).product;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let k = kernel();
    let worst = (0..100)
        .map(|_| unified_relation(&smear(&random_psi(&mut rng), &k, HBAR).unwrap()).product)
        .fold(f64::INFINITY, f64::min);
    let (fast, time) = within_time(start.elapsed(), Duration::from_secs(10));
    let err = (opt - 0.55).abs();
    outcome(
        err < 1e-4 && worst >= 0.55 - 1e-6 && fast,
        format!("optimal product {opt:.12} (err {err:.1e}), min over 100 random {worst:.6}, {time}"),
    )
}

fn commutator_constant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = kernel();
    let values: Vec<C64> = (0..20)
        .map(|_| commutator_expectation(&smear(&random_psi(&mut rng), &k, HBAR).unwrap()).value)
        .collect();
    let spread = values
        .iter()
        .flat_map(|a| values.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);
    let target = C64::new(0.0, HBAR + BETA);
    let off = values.iter().map(|v| (v - target).norm()).fold(0.0, f64::max);
    outcome(
        spread < 1e-6 && off < 1e-6,
        format!("spread {spread:.1e}, max |<[X,P]> - i(hbar+beta)| {off:.1e}"),
    )
}

fn canonical_recovery() -> Outcome {
    // fine enough that sigma_g = 4 spacings is well below the packet width
    let g = Grid::centered(2048, 16.0).unwrap();
    let beta = 1e-4;
    let psi = gaussian_wavefunction(g, 0.0, 1.0, 0.0).unwrap();
    let k = make_kernel(KernelShape::Gaussian, 4.0 * g.spacing(), beta, g).unwrap();
    let s = smear(&psi, &k, HBAR).unwrap();
    let d = position_density(&s);
    let l1 = d
        .values
        .iter()
        .enumerate()
        .map(|(m, v)| {
            let x = d.lattice.point(m);
            (v - (-x * x / 2.0).exp() / std::f64::consts::TAU.sqrt()).abs()
        })
        .sum::<f64>()
        * d.lattice.spacing;
    let report = unified_relation(&s);
    let (pe, be) = ((report.product - 0.5 * HBAR).abs(), (report.bound - 0.5 * HBAR).abs());
    outcome(
        l1 < 1e-3 && pe < 1e-3 && be < 1e-3,
        format!("L1 {l1:.2e}, product {:.6} (err {pe:.1e}), bound err {be:.1e}", report.product),
    )
}

fn gup_eup_coefficients() -> Outcome {
    let s = PhysicalScales::from_constants(&PhysicalConstants::observed()).unwrap();
    let p = s.smearing();
    let k = s.consts;
    let gup = p.sigma_g.powi(2) / p.hbar;
    let eup = p.sigma_g_tilde.powi(2) / p.hbar;
    let (eg, ee) = (relative(gup, 2.0 * k.g_d / k.c.powi(3)), relative(eup, k.hbar * k.lambda_d / 12.0));
    outcome(
        eg < 1e-12 && ee < 1e-12,
        format!("sigma_g^2/hbar = {gup:.6e} vs 2G/c^3 (rel {eg:.1e}), sigma_g_tilde^2/hbar = {eup:.6e} vs hbar Lambda/12 (rel {ee:.1e})"),
    )
}

fn physical_scales() -> Outcome {
    let start = Instant::now();
    let s = PhysicalScales::from_constants(&PhysicalConstants::observed()).unwrap();
    let (fast, time) = within_time(start.elapsed(), Duration::from_millis(100));
    let ratio = s.beta / s.consts.hbar;
    let l_mm = s.l_lambda.unwrap() * 10.0;
    let m_ev = s.m_lambda.unwrap() * s.consts.c.powi(2) / ERG_PER_EV;
    let ok = (1e-62..=1e-60).contains(&ratio)
        && (0.03..=0.3).contains(&l_mm)
        && (3e-4..=1e-2).contains(&m_ev)
        && (1e28 / 3.0..=3e28).contains(&s.l_ds)
        && fast;
    outcome(
        ok,
        format!("beta/hbar {ratio:.3e}, l_Lambda {l_mm:.4} mm, m_Lambda {m_ev:.3e} eV, l_dS {:.3e} cm, {time}", s.l_ds),
    )
}

fn picture_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let k = kernel();
    let mut worst_moment: f64 = 0.0;
    let mut worst_chain: f64 = 0.0;
    for trial in 0..20 {
        let psi = random_psi(&mut rng);
        let s = smear(&psi, &k, HBAR).unwrap();
        for axis in [Axis::Position, Axis::Momentum] {
            for n in 0..=4 {
                let op = smeared_operator_moment(&psi, &k, axis, n, HBAR);
                let st = lattice_moment(&s, axis, n);
                worst_moment = worst_moment.max((op - st).abs() / st.abs().max(1.0));
            }
        }
        if trial < 5 {
            let outcomes: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let history = OutcomeHistory::positions(&outcomes);
            let chain = sequential_measure(&psi, &k, HBAR, &history).unwrap();
            let iterated = apply_history(&s, &history).unwrap();
            worst_chain = worst_chain.max(chain.field.sup_distance(&iterated.field));
        }
    }
    outcome(
        worst_moment < 1e-9 && worst_chain < 1e-9,
        format!("moment mismatch {worst_moment:.1e}, sequential sup-norm {worst_chain:.1e}"),
    )
}

fn collapse_closed_form() -> Outcome {
    let s = gaussian_state(1.0, 0.0, 0.0);
    let c = collapse_position(&s, 1.0).unwrap();
    // row at v = 0 is g(0) psi_new(u)
    let centre = c.v_grid().nearest(0.0).unwrap();
    let psi_new = Field::new(c.u_grid(), (0..c.u_grid().n()).map(|i| c.field.at(i, centre)).collect())
        .unwrap()
        .normalized()
        .unwrap();
    let d = psi_new.density();
    // N(0, 1) times N(1, sigma_g^2) has mean 1/(1 + s^2) and variance s^2/(1 + s^2)
    let s2 = SIGMA_G * SIGMA_G;
    let (mean, var) = (1.0 / (1.0 + s2), s2 / (1.0 + s2));
    let (em, ev) = ((d.mean() - mean).abs(), (d.variance().value - var).abs());
    outcome(
        em < 1e-6 && ev < 1e-6,
        format!("posterior mean {:.9} (err {em:.1e}), variance {:.9} (err {ev:.1e})", d.mean(), d.variance().value),
    )
}

fn dynamics() -> Outcome {
    let start = Instant::now();
    let (k0, mass) = (2.0, 1.0);
    let s = gaussian_state(1.0, -5.0, k0);
    let free = Hamiltonian::free(&s, mass).unwrap();
    let cfg = EvolutionConfig::new(0.005, 1000).unwrap();
    let out = evolve(&s, &free, &cfg).unwrap();
    let t = cfg.dt * cfg.steps as f64;
    let velocity = (generalized_mean(&out, Axis::Position) - generalized_mean(&s, Axis::Position)) / t;
    let ev = relative(velocity, group_velocity(k0, k0, mass, HBAR, BETA));

    let trapped = gaussian_state(1.0, 1.0, 0.5);
    let harmonic = Hamiltonian::for_state(&trapped, mass, |x| 0.5 * x * x).unwrap();
    let cfg = EvolutionConfig::new(0.005, 1000).unwrap();
    let drift = [(&s, &free), (&trapped, &harmonic)]
        .iter()
        .map(|(st, h)| (evolve(st, h, &cfg).unwrap().norm_sqr() - st.norm_sqr()).abs())
        .fold(0.0, f64::max);

    let residual = heisenberg_residual(&s, &free, Observable::X, 1e-3)
        .unwrap()
        .max(heisenberg_residual(&trapped, &harmonic, Observable::X, 1e-3).unwrap());
    let (fast, time) = within_time(start.elapsed(), Duration::from_secs(30));
    outcome(
        ev < 0.01 && drift < 1e-9 && residual < 1e-4 && fast,
        format!("group velocity rel {ev:.1e}, norm drift {drift:.1e}, Heisenberg residual {residual:.1e}, {time}"),
    )
}

fn entanglement() -> Outcome {
    let start = Instant::now();
    let n = 48;
    let lu = Lattice::new(-6.0, 12.0 / n as f64, n);
    let lv = Lattice::new(-4.0, 8.0 / n as f64, n);
    let psi = TwoBodyWavefunction::from_fn(lu, |x, y| {
        C64::new((-(x - 0.5).powi(2) / 4.0 - (y + 0.3).powi(2) / 4.0).exp(), 0.0)
    })
    .normalized()
    .unwrap();
    let entropy = |kind| {
        let k = KernelTwoBody::new(kind, SIGMA_G, lv).unwrap();
        entanglement_entropy(&smear_two(&psi, &k, HBAR, BETA).unwrap())
    };
    let product = entropy(TwoBodyKind::ProductGaussian);
    let radial = entropy(TwoBodyKind::RadialExponential);
    let (fast, time) = within_time(start.elapsed(), Duration::from_secs(120));
    outcome(
        product < 1e-8 && radial > 0.01 && fast,
        format!("product-Gaussian S = {product:.1e}, radial-exponential S = {radial:.4}, {time}"),
    )
}

fn povm_equivalence() -> Outcome {
    let k = kernel();
    let kx = ResolutionKernel::from_smearing(&k).unwrap();
    let kp = ResolutionKernel::conjugate_from_smearing(&k).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let psi = random_psi(&mut rng);
        let s = smear(&psi, &k, HBAR).unwrap();
        for (axis, rk) in [(Axis::Position, &kx), (Axis::Momentum, &kp)] {
            let a = povm_variance(&psi, rk, axis, HBAR).unwrap();
            worst = worst.max((a - generalized_variance(&s, axis)).abs());
        }
    }
    let g = grid();
    let offsets = Lattice::new(-8.0, g.spacing(), 257);
    let completeness = [
        ResolutionKernel::gaussian(SIGMA_G, offsets).unwrap(),
        ResolutionKernel::exponential(SIGMA_G, offsets).unwrap(),
    ]
    .iter()
    .map(|rk| povm_completeness(rk, &g.lattice()).unwrap())
    .fold(0.0, f64::max);
    outcome(
        worst < 1e-9 && completeness < 1e-6,
        format!("variance mismatch {worst:.1e}, completeness residual {completeness:.1e}"),
    )
}

fn mass_radius() -> Outcome {
    let s = PhysicalScales::from_constants(&PhysicalConstants::observed()).unwrap();
    let small = 1e-4 * s.m_pl;
    let big = 1e4 * s.m_pl;
    let el = relative(unified_radius(small, &s).unwrap(), 0.5 * compton(small, &s.consts).unwrap());
    let eh = relative(unified_radius(big, &s).unwrap(), schwarzschild(big, &s.consts).unwrap());
    let m_min = unified_minimum(&s).unwrap();
    let em = relative(m_min, 0.5 * s.m_pl);
    outcome(
        el < 1e-4 && eh < 1e-4 && em < 1e-6,
        format!("Compton/2 limit rel {el:.1e}, Schwarzschild limit rel {eh:.1e}, minimum at m_Pl/2 rel {em:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("variance additivity", variance_additivity),
        ("bound saturation", bound_saturation),
        ("commutator constant", commutator_constant),
        ("canonical recovery", canonical_recovery),
        ("GUP/EUP coefficients", gup_eup_coefficients),
        ("physical scales", physical_scales),
        ("picture equivalence", picture_equivalence),
        ("collapse closed form", collapse_closed_form),
        ("dynamics", dynamics),
        ("entanglement dichotomy", entanglement),
        ("POVM equivalence", povm_equivalence),
        ("mass-radius", mass_radius),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = run();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {}", i + 1, result.detail);
        failures += usize::from(!result.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
