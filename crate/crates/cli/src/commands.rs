//! One function per subcommand, each producing a [`Table`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smearspace::dynamics::{energy, evolve, EvolutionConfig, Hamiltonian};
use smearspace::grid::{Grid, Lattice, C64};
use smearspace::massradius::{default_masses, mass_radius_table};
use smearspace::measurement::{
    collapse_momentum, collapse_position, generalized_mean, generalized_variance, sample_outcome, Axis,
};
use smearspace::multiparticle::{
    entanglement_entropy, factorization_residual, smear_two, KernelTwoBody, TwoBodyKind, TwoBodyWavefunction,
};
use smearspace::povm::{povm_independence_demo, ResolutionKernel};
use smearspace::scales::{PhysicalScales, ERG_PER_EV};
use smearspace::smearing::{gaussian_wavefunction, make_kernel, smear, KernelShape, SmearedState};
use smearspace::uncertainty::{sweep_products, SweepConfig};

use crate::config::{Dimensionless, RunConfig};
use crate::output::{Cell, Table};
use crate::CliError;

fn grid(cfg: &RunConfig) -> Result<Grid, CliError> {
    Ok(Grid::centered(cfg.grid_n, cfg.grid_extent)?)
}

fn kernel_shape(cfg: &RunConfig) -> Result<KernelShape, CliError> {
    match cfg.get_str("kernel.shape").unwrap_or("gaussian") {
        "gaussian" => Ok(KernelShape::Gaussian),
        "exponential" => Ok(KernelShape::Exponential),
        other => Err(CliError::Config(format!("unknown kernel.shape {other:?}"))),
    }
}

fn initial_state(cfg: &RunConfig, p: &Dimensionless) -> Result<SmearedState, CliError> {
    let g = grid(cfg)?;
    let psi = gaussian_wavefunction(
        g,
        cfg.get("state.mean", 0.0)?,
        cfg.get("state.width", 1.0)?,
        cfg.get("state.k0", 0.0)?,
    )?;
    let kernel = make_kernel(kernel_shape(cfg)?, p.sigma_g, p.beta, g)?;
    Ok(smear(&psi, &kernel, p.hbar)?)
}

fn moments(state: &SmearedState) -> [Cell; 4] {
    [
        generalized_mean(state, Axis::Position).into(),
        generalized_variance(state, Axis::Position).into(),
        generalized_mean(state, Axis::Momentum).into(),
        generalized_variance(state, Axis::Momentum).into(),
    ]
}

pub fn scales(cfg: &RunConfig) -> Result<Table, CliError> {
    let consts = cfg.require_physical("scales")?;
    let s = PhysicalScales::from_constants(&consts)?;
    let d = consts.d;
    let mut t = Table::new("scales", &["quantity", "value", "unit"]);
    let mut row = |name: &str, value: Cell, unit: String| t.push(vec![name.into(), value, Cell::Text(unit)]);
    row("hbar", consts.hbar.into(), "erg s".into());
    row("c", consts.c.into(), "cm s^-1".into());
    row("G_D", consts.g_d.into(), format!("cm^{d} g^-1 s^-2"));
    row("Lambda_D", consts.lambda_d.into(), "cm^-2".into());
    row("d", Cell::Int(d.into()), String::new());
    row("l_Pl", s.l_pl.into(), "cm".into());
    row("m_Pl", s.m_pl.into(), "g".into());
    row("l_dS", s.l_ds.into(), "cm".into());
    row("m_dS", s.m_ds.into(), "g".into());
    row("sigma_g", s.sigma_g.into(), "cm".into());
    row("sigma_g_tilde", s.sigma_g_tilde.into(), "g cm s^-1".into());
    row("beta", s.beta.into(), "erg s".into());
    row("beta_over_hbar", (s.beta / consts.hbar).into(), String::new());
    row("rho_Lambda", s.rho_lambda.into(), format!("g cm^-{d}"));
    row("rho_Pl", s.rho_pl.into(), format!("g cm^-{d}"));
    if let (Some(l), Some(m)) = (s.l_lambda, s.m_lambda) {
        row("l_Lambda", l.into(), "cm".into());
        row("m_Lambda", m.into(), "g".into());
        row("m_Lambda_c2", (m * consts.c.powi(2) / ERG_PER_EV).into(), "eV".into());
    }
    row("m_max", s.m_max.into(), "g".into());
    Ok(t)
}

pub fn uncertainty(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.require_dimensionless("uncertainty")?;
    let sweep = SweepConfig {
        hbar: p.hbar,
        sigma_g: p.sigma_g,
        grid: grid(cfg)?,
    };
    let betas = cfg.get_list("uncertainty.betas")?.unwrap_or_else(|| vec![p.beta]);
    let optimal: bool = cfg.get("uncertainty.optimal", false)?;
    let random: usize = cfg.get("uncertainty.random", 0)?;
    let explicit = cfg.get_list("uncertainty.widths")?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = Table::new("uncertainty", &["beta", "dx_psi", "DX", "DP", "product", "bound", "slack"]);
    for beta in betas {
        let widths = if optimal {
            // minimizer of the unified product: dx^2 = hbar sigma_g / (2 sigma_g_tilde)
            let tilde = beta / (2.0 * p.sigma_g);
            vec![(p.hbar * p.sigma_g / (2.0 * tilde)).sqrt()]
        } else if random > 0 {
            (0..random).map(|_| 10f64.powf(rng.gen_range(-0.5..0.5))).collect()
        } else {
            explicit.clone().unwrap_or_else(|| vec![1.0])
        };
        for r in sweep_products(&[beta], &widths, &sweep)? {
            t.push(vec![
                r.beta.into(),
                r.width.into(),
                r.delta_x.into(),
                r.delta_p.into(),
                r.product.into(),
                r.bound.into(),
                r.slack.into(),
            ]);
        }
    }
    Ok(t)
}

fn parse_history(text: &str) -> Result<Vec<(Axis, f64)>, CliError> {
    text.split(',')
        .map(|item| {
            let (axis, value) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("measure.history item {item:?} is not axis:value")))?;
            let axis = match axis {
                "x" => Axis::Position,
                "p" => Axis::Momentum,
                other => return Err(CliError::Config(format!("unknown axis {other:?}; expected x or p"))),
            };
            let value = value
                .parse()
                .map_err(|_| CliError::Config(format!("measure.history value {value:?} is not a number")))?;
            Ok((axis, value))
        })
        .collect()
}

fn axis_label(axis: Axis) -> &'static str {
    match axis {
        Axis::Position => "x",
        Axis::Momentum => "p",
    }
}

pub fn measure(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.require_dimensionless("measure")?;
    let mut state = initial_state(cfg, &p)?;
    let mut t = Table::new("measure", &["step", "axis", "outcome", "mean_x", "var_x", "mean_p", "var_p"]);
    let [a, b, c, d] = moments(&state);
    t.push(vec![Cell::Int(0), Cell::Empty, Cell::Empty, a, b, c, d]);
    let history = cfg.get_str("measure.history").map(parse_history).transpose()?;
    let count = history.as_ref().map_or(cfg.get("measure.count", 3)?, Vec::len);
    let sampled_axis = match cfg.get_str("measure.axis").unwrap_or("x") {
        "x" => Axis::Position,
        "p" => Axis::Momentum,
        other => return Err(CliError::Config(format!("unknown measure.axis {other:?}"))),
    };
    for step in 0..count {
        let (axis, value) = match &history {
            Some(h) => h[step],
            None => (sampled_axis, sample_outcome(&state, sampled_axis, cfg.seed.wrapping_add(step as u64))?),
        };
        state = match axis {
            Axis::Position => collapse_position(&state, value)?,
            Axis::Momentum => collapse_momentum(&state, value)?,
        };
        let [a, b, c, d] = moments(&state);
        t.push(vec![Cell::Int(step as i64 + 1), axis_label(axis).into(), value.into(), a, b, c, d]);
    }
    Ok(t)
}

pub fn evolve_cmd(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.require_dimensionless("evolve")?;
    let mut state = initial_state(cfg, &p)?;
    let mass: f64 = cfg.get("evolve.mass", 1.0)?;
    let h = match cfg.get_str("evolve.potential").unwrap_or("free") {
        "free" => Hamiltonian::free(&state, mass)?,
        "harmonic" => {
            let omega: f64 = cfg.get("evolve.omega", 1.0)?;
            Hamiltonian::for_state(&state, mass, move |x| 0.5 * mass * omega * omega * x * x)?
        }
        other => return Err(CliError::Config(format!("unknown evolve.potential {other:?}"))),
    };
    let dt: f64 = cfg.get("evolve.dt", 0.005)?;
    let steps: usize = cfg.get("evolve.steps", 100)?;
    let every: usize = cfg.get("evolve.every", 10)?;
    if every == 0 {
        return Err(CliError::Config("evolve.every must be positive".into()));
    }
    let mut t = Table::new(
        "evolve",
        &["step", "t", "mean_x", "var_x", "mean_p", "var_p", "norm", "energy"],
    );
    let mut done = 0;
    loop {
        let [a, b, c, d] = moments(&state);
        t.push(vec![
            Cell::Int(done as i64),
            (dt * done as f64).into(),
            a,
            b,
            c,
            d,
            state.norm_sqr().into(),
            energy(&state, &h)?.into(),
        ]);
        if done == steps {
            break;
        }
        let chunk = every.min(steps - done);
        state = evolve(&state, &h, &EvolutionConfig::new(dt, chunk)?)?;
        done += chunk;
    }
    Ok(t)
}

pub fn entangle(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.require_dimensionless("entangle")?;
    let n: usize = cfg.get("entangle.n", smearspace::multiparticle::DEFAULT_N)?;
    if n < 2 {
        return Err(CliError::Config("entangle.n must be at least 2".into()));
    }
    let (eu, ev): (f64, f64) = (cfg.get("entangle.u_extent", 12.0)?, cfg.get("entangle.v_extent", 8.0)?);
    let lu = Lattice::new(-0.5 * eu, eu / n as f64, n);
    let lv = Lattice::new(-0.5 * ev, ev / n as f64, n);
    let (mean, width): (f64, f64) = (cfg.get("state.mean", 0.0)?, cfg.get("state.width", 1.0)?);
    let states: Vec<&str> = match cfg.get_str("entangle.state").unwrap_or("product") {
        "both" => vec!["product", "correlated"],
        s @ ("product" | "correlated") => vec![s],
        other => return Err(CliError::Config(format!("unknown entangle.state {other:?}"))),
    };
    let mut t = Table::new("entangle", &["state", "kernel", "entropy_before", "entropy", "residual"]);
    for name in states {
        let psi = TwoBodyWavefunction::from_fn(lu, |x, y| {
            let a = if name == "product" {
                -((x - mean).powi(2) + (y - mean).powi(2)) / (4.0 * width * width)
            } else {
                -(x + y - 2.0 * mean).powi(2) / (2.0 * width * width) - (x - y).powi(2) / (8.0 * width * width)
            };
            C64::new(a.exp(), 0.0)
        })
        .normalized()?;
        let before = psi.entropy();
        for kind in [TwoBodyKind::ProductGaussian, TwoBodyKind::RadialExponential] {
            let k = KernelTwoBody::new(kind, p.sigma_g, lv)?;
            let s = smear_two(&psi, &k, p.hbar, p.beta)?;
            t.push(vec![
                name.into(),
                kind.name().into(),
                before.into(),
                entanglement_entropy(&s).into(),
                factorization_residual(&s).into(),
            ]);
        }
    }
    Ok(t)
}

pub fn povm_compare(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.require_dimensionless("povm-compare")?;
    let g = grid(cfg)?;
    let psi = gaussian_wavefunction(
        g,
        cfg.get("state.mean", 0.0)?,
        cfg.get("state.width", 1.0)?,
        cfg.get("state.k0", 0.0)?,
    )?;
    let sigma_x: f64 = cfg.get("povm.sigma_x", p.sigma_g)?;
    // offsets over the central half of the grid
    let half = g.n() / 2;
    let offsets = Lattice::new(g.center() - 0.5 * g.spacing() * half as f64, g.spacing(), half + 1);
    let kx = match kernel_shape(cfg)? {
        KernelShape::Exponential => ResolutionKernel::exponential(sigma_x, offsets)?,
        _ => ResolutionKernel::gaussian(sigma_x, offsets)?,
    };
    let sigma_p: f64 = cfg.get("povm.sigma_p", p.beta / (2.0 * kx.sigma))?;
    let w = g.conjugate(p.beta);
    let kp = ResolutionKernel::gaussian(sigma_p, Lattice::new(w.start(), w.spacing(), w.n()))?;
    let r = povm_independence_demo(&psi, &kx, &kp, p.hbar, p.beta)?;
    let mut t = Table::new("povm-compare", &["quantity", "value", "note"]);
    let mut row = |name: &str, value: Cell, note: &str| t.push(vec![name.into(), value, note.into()]);
    row("sigma_x", r.sigma_x.into(), "");
    row("sigma_p", r.sigma_p.into(), "");
    row("product", r.product.into(), "");
    row("beta_over_2", (0.5 * r.beta).into(), "");
    row("completeness", r.completeness.into(), "");
    row("povm_var_x", r.povm_variances.0.into(), "");
    row("povm_var_p", r.povm_variances.1.into(), "");
    match &r.smeared {
        Ok((vx, vp)) => {
            row("smeared_var_x", (*vx).into(), "");
            row("smeared_var_p", (*vp).into(), "");
        }
        Err(e) => {
            // messages go into a CSV cell
            let note = e.to_string().replace(',', ";");
            row("smeared_var_x", Cell::Empty, &note);
            row("smeared_var_p", Cell::Empty, &note);
        }
    }
    Ok(t)
}

pub fn massradius(cfg: &RunConfig) -> Result<Table, CliError> {
    let consts = cfg.require_physical("massradius")?;
    let s = PhysicalScales::from_constants(&consts)?;
    let masses = match (cfg.get_opt::<u32>("massradius.decades")?, cfg.get_opt::<u32>("massradius.per_decade")?) {
        (None, None) => default_masses(&s),
        (decades, per) => {
            let (decades, per) = (decades.unwrap_or(4) as i64, per.unwrap_or(10).max(1) as i64);
            (-decades * per..=decades * per)
                .map(|k| 0.5 * s.m_pl * 10f64.powf(k as f64 / per as f64))
                .collect()
        }
    };
    let mut t = Table::new(
        "massradius",
        &["mass_g", "m_over_mpl", "compton_cm", "schwarzschild_cm", "unified_cm", "regime"],
    );
    for r in mass_radius_table(&masses, &s)? {
        t.push(vec![
            r.mass.into(),
            (r.mass / s.m_pl).into(),
            r.compton.into(),
            r.schwarzschild.into(),
            r.unified.into(),
            r.regime.name().into(),
        ]);
    }
    Ok(t)
}
