use num_complex::Complex64;
use serde::Deserialize;

use super::config::*;
use super::output::ResultTable;
use crate::classical_gle::{
    equilibrium_stats, gle_integrate_direct, gle_integrate_embedded, kz_integrate_full, kz_kernel, kz_noise,
    kz_sample_initials, GLEConfig, KZBath, Poly,
};
use crate::fock::{coherent_vector, fock_residuals, number_operator, FockSpace};
use crate::hp_dilation::{dilation_error, ito_table, CollisionConfig, ItoTable, ITO_LABELS};
use crate::kernels::{
    callen_welton_residual, dissipation_kernel, dissipation_kernel_quadrature, memory_kernel, memory_kernel_quadrature,
    noise_kernel_quadrature, BathSpec,
};
use crate::lindblad::{
    damped_ho_model, evolve, steady_state, two_level_thermal, DampedOscillator, DensityMatrix,
    LindbladModel,
};
use crate::numerics::{cr, ComplexMatrix, ComplexVector, RandomStream, DEFAULT_POINTS};
use crate::qnoise::{
    noise_kernel_series, ou_correlation_sum, ou_params, series_term, simulate_cascade, verify_ou_generator,
    QNoiseSpec,
};
use crate::realization::{covariance_of_model, ensemble_autocovariance, realize, sample_stationary_paths, KernelSpec};
use crate::{Error, Result};

/// One named output table of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub name: String,
    pub table: ResultTable,
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// File stem of an output: the subcommand, plus the table name when a run
/// emits several.
pub fn file_stem(sub: Subcommand, name: &str) -> String {
    if name.is_empty() {
        sub.name().to_string()
    } else {
        format!("{}_{name}", sub.name())
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Vec<Output>> {
    let seed = if config.params.stochastic() {
        Some(config.require_seed()?)
    } else {
        None
    };
    let mut outputs = match &config.params {
        Params::Kernels(p) => run_kernels(p)?,
        Params::Realize(p) => run_realize(p, seed.unwrap_or_default())?,
        Params::Gle(p) => run_gle(p, seed.unwrap_or_default())?,
        Params::KzCompare(p) => run_kz_compare(p, seed.unwrap_or_default())?,
        Params::Lindblad(p) => run_lindblad(p)?,
        Params::Dilation(p) => run_dilation(p)?,
        Params::Qnoise(p) => run_qnoise(p, seed)?,
        Params::FockCheck(p) => run_fock_check(p)?,
    };
    let echo = config.to_json();
    for o in &mut outputs {
        let mut head = vec![
            ("subcommand".to_string(), config.subcommand().name().to_string()),
            ("version".to_string(), format!("oqs-lab {VERSION}")),
            ("config".to_string(), echo.clone()),
        ];
        head.append(&mut o.table.metadata);
        o.table.metadata = head;
    }
    Ok(outputs)
}

fn single(table: ResultTable) -> Vec<Output> {
    vec![Output {
        name: String::new(),
        table,
    }]
}

fn named(name: &str, table: ResultTable) -> Output {
    Output {
        name: name.to_string(),
        table,
    }
}

fn grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(t_min > 0.0) || !(t_max >= t_min) || !t_max.is_finite() {
        return Err(Error::Config(format!(
            "time grid needs 0 < t_min <= t_max and n_t >= 1 (got {t_min}, {t_max}, {n})"
        )));
    }
    if n == 1 {
        return Ok(vec![t_min]);
    }
    Ok((0..n).map(|i| t_min + (t_max - t_min) * i as f64 / (n - 1) as f64).collect())
}

fn steps_for(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::Config(format!("need dt > 0 and t_final > 0 (got {dt}, {t_final})")));
    }
    Ok((t_final / dt).round() as usize)
}

fn record_stride(every: usize) -> Result<usize> {
    if every == 0 {
        return Err(Error::Config("record_every must be at least 1".into()));
    }
    Ok(every)
}

fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn run_kernels(p: &KernelsParams) -> Result<Vec<Output>> {
    let spec = BathSpec::new(p.lambda, p.temperature, p.hbar, p.k_b)?;
    let omega_max = p.omega_max_factor * p.lambda;
    let mut t = ResultTable::new([
        "t",
        "kappa",
        "kappa_quadrature",
        "dissipation",
        "dissipation_quadrature",
        "noise_quadrature",
        "noise_tail",
    ]);
    for time in grid(p.t_min, p.t_max, p.n_t)? {
        let kq = memory_kernel_quadrature(time, &spec, omega_max, p.n_points)?;
        let dq = dissipation_kernel_quadrature(time, &spec, omega_max, p.n_points)?;
        let nq = noise_kernel_quadrature(time, &spec, omega_max, p.n_points)?;
        t.push([
            time,
            memory_kernel(time, &spec)?,
            kq.value,
            dissipation_kernel(time, &spec)?,
            dq.value,
            nq.value,
            nq.tail,
        ]);
    }
    t.meta("series_valid", spec.series_valid());
    let mut cw = ResultTable::new(["omega", "noise_side", "dissipation_side", "residual"]);
    for &w in &p.callen_welton_omegas {
        let r = callen_welton_residual(w, &spec)?;
        cw.push([w, r.noise_side, r.dissipation_side, r.residual]);
    }
    Ok(vec![named("", t), named("callen_welton", cw)])
}

fn run_realize(p: &RealizeParams, seed: u64) -> Result<Vec<Output>> {
    let kernel = KernelSpec::new(p.modes.clone())?;
    let model = realize(&kernel)?;
    let paths = sample_stationary_paths(&model, p.dt, p.steps, p.n_traj, seed)?;
    let mut cov = ResultTable::new(["tau", "kernel", "model", "empirical"]);
    for lag in 0..=p.max_lag {
        let tau = lag as f64 * p.dt;
        let empirical = if p.n_traj > 0 && lag <= p.steps {
            Some(ensemble_autocovariance(&paths, lag)?)
        } else {
            None
        };
        cov.push_opt([
            Some(tau),
            Some(kernel.covariance(tau)),
            Some(covariance_of_model(&model, tau)?[(0, 0)]),
            empirical,
        ]);
    }
    cov.meta("lyapunov_residual", format!("{:e}", model.lyapunov_residual()));
    cov.meta("seed", seed);
    let mut mats = ResultTable::new(["block", "row", "col", "value"]);
    mats.meta("blocks", "0=A 1=B 2=C 3=M");
    for (b, m) in [&model.a, &model.b, &model.c, &model.m].into_iter().enumerate() {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                mats.push([b as f64, i as f64, j as f64, m[(i, j)]]);
            }
        }
    }
    Ok(vec![named("covariance", cov), named("model", mats)])
}

fn run_gle(p: &GleParams, seed: u64) -> Result<Vec<Output>> {
    let stride = record_stride(p.record_every)?;
    let config = GLEConfig {
        mass: p.mass,
        potential: Poly(p.potential.clone()),
        coupling: Poly(p.coupling.clone()),
        temperature: p.temperature,
        k_b: p.k_b,
    };
    let model = realize(&KernelSpec::new(p.modes.clone())?)?;
    let mut stream = RandomStream::new(seed, 0);
    let traj = gle_integrate_embedded(&config, &model, p.x0, p.p0, p.dt, p.steps, &mut stream)?;
    let stats = equilibrium_stats(&traj, p.burn_in_fraction)?;
    let mut cols = vec!["t".to_string(), "x".into(), "v".into()];
    cols.extend((1..=traj.aux_dim).map(|i| format!("z_{i}")));
    cols.push("energy".into());
    let mut t = ResultTable::new(cols);
    for i in (0..traj.len()).step_by(stride) {
        let mut row = vec![traj.time(i), traj.x[i], traj.v[i]];
        row.extend_from_slice(traj.aux_row(i));
        row.push(traj.energy[i]);
        t.push(row);
    }
    for w in config.warnings() {
        t.meta("warning", w);
    }
    t.meta("seed", seed);
    t.meta("var_v", format!("{:.16e}", stats.var_v));
    t.meta("var_v_err", format!("{:.16e}", stats.var_v_err));
    t.meta("equipartition_target", format!("{:.16e}", config.kbt() / config.mass));
    Ok(single(t))
}

fn run_kz_compare(p: &KzCompareParams, seed: u64) -> Result<Vec<Output>> {
    let stride = record_stride(p.record_every)?;
    let spec = BathSpec::new(p.lambda, p.temperature, p.hbar, p.k_b)?;
    let bath = KZBath::ohmic_comb(p.n_oscillators, p.d_omega, &spec)?;
    let config = GLEConfig {
        mass: p.mass,
        potential: Poly(p.potential.clone()),
        coupling: Poly(p.coupling.clone()),
        temperature: p.temperature,
        k_b: p.k_b,
    };
    let steps = steps_for(p.t_final, p.dt)?;
    let mut stream = RandomStream::new(seed, 0);
    let init = kz_sample_initials(&bath, &config, p.x0, &mut stream);
    let full = kz_integrate_full(&config, &bath, &init, p.x0, p.p0, p.dt, steps)?;
    let gle = gle_integrate_direct(
        &config,
        &|t| kz_kernel(&bath, t),
        &|t| kz_noise(&bath, &init, p.x0, &config, t),
        p.x0,
        p.p0,
        p.dt,
        steps,
    )?;
    let mut t = ResultTable::new(["t", "x_full", "x_gle", "abs_diff", "v_full", "v_gle", "energy_full"]);
    let mut worst: f64 = 0.0;
    for i in 0..full.len() {
        worst = worst.max((full.x[i] - gle.x[i]).abs());
        if i % stride == 0 {
            t.push([
                full.time(i),
                full.x[i],
                gle.x[i],
                (full.x[i] - gle.x[i]).abs(),
                full.v[i],
                gle.v[i],
                full.energy[i],
            ]);
        }
    }
    t.meta("seed", seed);
    t.meta("max_abs_diff", format!("{worst:.16e}"));
    Ok(single(t))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomModel {
    h: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    lindblad_ops: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    rho0: Option<Vec<Vec<[f64; 2]>>>,
}

fn matrix_from_rows(rows: &[Vec<[f64; 2]>], what: &str) -> Result<ComplexMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("{what} must be a non-empty square matrix of [re, im] pairs")));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| complex(rows[i][j])))
}

fn load_custom(path: &str) -> Result<(LindbladModel, DensityMatrix)> {
    if path.is_empty() {
        return Err(Error::Config("model `custom` needs `custom_file`".into()));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{path}: {e}"))))?;
    let m: CustomModel = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{path}: {e}")))?;
    let h = matrix_from_rows(&m.h, "h")?;
    let ops = m
        .lindblad_ops
        .iter()
        .map(|l| matrix_from_rows(l, "lindblad operator"))
        .collect::<Result<Vec<_>>>()?;
    let d = h.nrows();
    let rho0 = match &m.rho0 {
        Some(r) => DensityMatrix::new(matrix_from_rows(r, "rho0")?)?,
        None => {
            let mut psi = ComplexVector::zeros(d);
            psi[0] = cr(1.0);
            DensityMatrix::pure(&psi)?
        }
    };
    Ok((LindbladModel::new(h, ops, 1.0)?, rho0))
}

fn run_lindblad(p: &LindbladParams) -> Result<Vec<Output>> {
    let stride = record_stride(p.record_every)?;
    let steps = steps_for(p.t_final, p.dt)?;
    let mut t;
    match p.model {
        LindbladKind::TwoLevel => {
            let model = two_level_thermal(p.omega, p.gamma, p.n_thermal, p.hbar)?;
            let mut psi = ComplexVector::zeros(2);
            psi[1] = cr(1.0);
            let states = evolve(&DensityMatrix::pure(&psi)?, &model, p.dt, steps)?;
            t = ResultTable::new(["t", "p_excited", "coherence_re", "coherence_im", "trace", "min_eigenvalue"]);
            for (i, s) in states.iter().enumerate().step_by(stride) {
                t.push([
                    i as f64 * p.dt,
                    s.matrix[(1, 1)].re,
                    s.matrix[(0, 1)].re,
                    s.matrix[(0, 1)].im,
                    s.matrix.trace().re,
                    s.min_eigenvalue(),
                ]);
            }
            let ss = steady_state(&model)?;
            t.meta("steady_p_excited", format!("{:.16e}", ss.matrix[(1, 1)].re));
            t.meta(
                "thermal_p_excited",
                format!("{:.16e}", p.n_thermal / (2.0 * p.n_thermal + 1.0)),
            );
        }
        LindbladKind::DampedHo => {
            let params = DampedOscillator {
                mass: p.mass,
                spring: p.spring,
                gamma: p.gamma,
                temperature: p.temperature,
                hbar: p.hbar,
                k_b: p.k_b,
            };
            let space = FockSpace::new(p.fock_cutoff)?;
            let model = damped_ho_model(&params, space)?;
            let (x, pm) = params.position_momentum(space);
            let n = number_operator(space).matrix;
            let psi = coherent_vector(complex(p.alpha), space);
            let states = evolve(&DensityMatrix::pure(&psi.amplitudes)?, &model, p.dt, steps)?;
            t = ResultTable::new(["t", "mean_x", "mean_p", "mean_n", "trace", "min_eigenvalue"]);
            for (i, s) in states.iter().enumerate().step_by(stride) {
                t.push([
                    i as f64 * p.dt,
                    s.expectation(&x).re,
                    s.expectation(&pm).re,
                    s.expectation(&n).re,
                    s.matrix.trace().re,
                    s.min_eigenvalue(),
                ]);
            }
            t.meta("top_level_population", format!("{:.16e}", states[steps].matrix[(p.fock_cutoff, p.fock_cutoff)].re));
        }
        LindbladKind::Custom => {
            let (model, rho0) = load_custom(&p.custom_file)?;
            let d = model.dim();
            let states = evolve(&rho0, &model, p.dt, steps)?;
            let mut cols = vec!["t".to_string(), "trace".into(), "min_eigenvalue".into()];
            cols.extend((0..d).map(|k| format!("population_{k}")));
            t = ResultTable::new(cols);
            for (i, s) in states.iter().enumerate().step_by(stride) {
                let mut row = vec![i as f64 * p.dt, s.matrix.trace().re, s.min_eigenvalue()];
                row.extend((0..d).map(|k| s.matrix[(k, k)].re));
                t.push(row);
            }
        }
    }
    Ok(single(t))
}

fn run_dilation(p: &DilationParams) -> Result<Vec<Output>> {
    let model = two_level_thermal(p.omega, p.gamma, p.n_thermal, p.hbar)?;
    let mut psi = ComplexVector::zeros(2);
    psi[1] = cr(1.0);
    let rows = dilation_error(&model, &DensityMatrix::pure(&psi)?, p.t_final, &p.dt_list, p.bin_cutoff)?;
    let mut t = ResultTable::new(["dt", "steps", "error", "ratio", "order"]);
    for r in &rows {
        t.push_opt([Some(r.dt), Some(r.steps as f64), Some(r.error), r.ratio, r.order]);
    }
    let mut ito = ResultTable::new(["dt", "left", "right", "value", "expected"]);
    ito.meta("operators", ITO_LABELS.iter().enumerate().map(|(i, l)| format!("{i}={l}")).collect::<Vec<_>>().join(" "));
    for &dt in &p.dt_list {
        let table = ito_table(&CollisionConfig {
            dt,
            bin_cutoff: p.bin_cutoff,
            steps: 1,
        })?;
        let expected = ItoTable::expected(dt);
        for i in 0..3 {
            for j in 0..3 {
                ito.push([dt, i as f64, j as f64, table.entries[i][j], expected[i][j]]);
            }
        }
    }
    Ok(vec![named("errors", t), named("ito", ito)])
}

fn run_qnoise(p: &QnoiseParams, seed: Option<u64>) -> Result<Vec<Output>> {
    let bath = BathSpec::new(p.lambda, p.temperature, p.hbar, p.k_b)?;
    let spec = QNoiseSpec::new(bath, p.n_terms)?;
    let params = ou_params(&spec)?;
    let mut coef = ResultTable::new(["k", "alpha", "lambda", "weight", "series_coefficient", "residual"]);
    for (k, w) in params.weights().iter().enumerate() {
        let (c, _) = series_term(k, &bath)?;
        coef.push([k as f64, params.alpha[k], params.lambda[k], *w, c, (w - c).abs()]);
    }
    let mut kern = ResultTable::new(["t", "series", "ou_sum", "residual", "quadrature", "tail_bound"]);
    for t in grid(p.t_min, p.t_max, p.n_t)? {
        let s = noise_kernel_series(t, &spec)?;
        let sum = ou_correlation_sum(t, &params)?;
        let q = noise_kernel_quadrature(t, &bath, bath.default_omega_max(), DEFAULT_POINTS)?;
        kern.push([t, s.value, sum, (s.value - sum).abs(), q.value, s.tail_bound]);
    }
    let mut gen = ResultTable::new(["k", "cutoff", "eta_drift", "xi_drift", "unitality", "ccr"]);
    for &k in &p.generator_modes {
        let r = verify_ou_generator(&spec, k, p.fock_cutoff)?;
        gen.push([k as f64, r.cutoff as f64, r.eta_drift, r.xi_drift, r.unitality, r.ccr]);
    }
    let mut out = vec![named("params", coef), named("kernel", kern), named("generator", gen)];
    if p.sim_traj > 0 {
        let seed = seed.ok_or_else(|| Error::Config("simulation needs a seed".into()))?;
        let sim_spec = QNoiseSpec::new(bath, p.sim_terms)?;
        let r = simulate_cascade(&sim_spec, p.sim_dt, p.sim_steps, p.sim_traj, seed, p.sim_max_lag)?;
        let mut sim = ResultTable::new(["tau", "empirical", "series"]);
        for (k, v) in r.correlation.iter().enumerate() {
            let tau = r.lag_time(k);
            sim.push([tau, *v, noise_kernel_series(tau, &sim_spec)?.value]);
        }
        sim.meta("seed", seed);
        out.push(named("cascade", sim));
    }
    Ok(out)
}

fn run_fock_check(p: &FockCheckParams) -> Result<Vec<Output>> {
    let mut t = ResultTable::new([
        "cutoff",
        "ccr_corner",
        "coherent_eigen",
        "weyl_composition",
        "displaced_vacuum",
        "unitarity",
    ]);
    for &n in &p.cutoffs {
        let r = fock_residuals(n, complex(p.alpha), complex(p.u), complex(p.v))?;
        t.push([
            n as f64,
            r.ccr_corner,
            r.coherent_eigen,
            r.weyl_composition,
            r.displaced_vacuum,
            r.unitarity,
        ]);
    }
    Ok(single(t))
}
