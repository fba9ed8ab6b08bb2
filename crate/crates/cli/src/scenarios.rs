use rayon::prelude::*;
use serde_json::json;

use freefall::composite::{
    dephasing_report, echo_protocol, gamma_exact, gamma_thermal, mean_energy_and_heat_capacity,
    purity, thermal_weights, CompositeState,
};
use freefall::dynamics::{
    check_version_a, check_version_b, free_evolve, gravity_evolve, max_density_error,
    split_step_evolve, EvolutionParams, SHIFT_TOLERANCE,
};
use freefall::lattice::translate;
use freefall::phasespace::{liouville_shift, max_abs_difference, wigner, CONSERVATION_TOLERANCE};
use freefall::qubitphase::{
    b_parameter, cat_detection_phase, cat_zeta, detection_time, phase_shift, phase_shift_t,
    relative_shift, UnitSystem,
};
use freefall::states::{dispersion, moments, rebase_mass, velocity_amplitude_at};
use freefall::{Result, WaveFunction};

use crate::config::{Prepared, ScenarioKind};
use crate::output::{num, Check, Table};

/// What a scenario produced, before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
    pub tables: Vec<Table>,
}

pub fn run(p: &Prepared, units: UnitSystem) -> Result<Outcome> {
    match p.config.scenario {
        ScenarioKind::EpA => ep_a(p),
        ScenarioKind::EpB => ep_b(p),
        ScenarioKind::Dephase => dephase(p),
        ScenarioKind::Echo => echo(p),
        ScenarioKind::QubitPhase => qubit_phase(p, units),
        ScenarioKind::Wigner => wigner_flow(p),
        ScenarioKind::Evolve => evolve(p),
    }
}

// `prepare` guarantees the sections each scenario needs
fn state(p: &Prepared) -> &WaveFunction {
    p.state.as_ref().expect("state prepared")
}

fn params(p: &Prepared) -> EvolutionParams {
    p.params.expect("evolution prepared")
}

fn ep_a(p: &Prepared) -> Result<Outcome> {
    let psi = state(p);
    let params = params(p);
    let tol = p.config.tolerances.ep;
    let rep = check_version_a(psi, &params, tol)?;

    let grid = *psi.grid();
    let free = free_evolve(psi, params.t)?;
    let fell = gravity_evolve(psi, &params)?;
    let shifted = translate(free.amplitudes(), &grid, rep.shift_applied)?;
    let mut density = Table::new(
        "density",
        &["x", "rho_free_shifted", "rho_gravity", "abs_diff"],
    );
    for (k, (a, b)) in shifted.iter().zip(fell.density()).enumerate() {
        let a = a.norm_sqr();
        density.push_nums(&[grid.x(k), a, b, (a - b).abs()]);
    }
    let mut table = Table::new("moments", &["order", "free", "gravity", "mismatch"]);
    for r in &rep.moment_table {
        table.push(vec![
            r.order.to_string(),
            num(r.reference),
            num(r.probe),
            num(r.mismatch),
        ]);
    }

    let mut checks = vec![Check::below(
        "max_density_mismatch",
        rep.max_density_mismatch,
        tol,
    )];
    for r in &rep.moment_table {
        checks.push(Check::below(
            format!("central_moment_{}", r.order),
            r.mismatch,
            tol,
        ));
    }
    let rel =
        (rep.measured_shift - rep.shift_applied).abs() / rep.shift_applied.abs().max(grid.dx());
    checks.push(Check::below("shift_relative_error", rel, SHIFT_TOLERANCE));
    Ok(Outcome {
        checks,
        results: json!(rep),
        tables: vec![density, table],
    })
}

fn ep_b(p: &Prepared) -> Result<Outcome> {
    let psi = state(p);
    let params = params(p);
    let m2 = p.config.ep_b.as_ref().expect("ep_b prepared").m2;
    let tol = p.config.tolerances.ep;
    let rep = check_version_b(psi, m2, &params, tol)?;

    let reference = EvolutionParams {
        mass_ratio: 1.0,
        ..params
    };
    let a = gravity_evolve(psi, &reference)?;
    let b = gravity_evolve(&rebase_mass(psi, m2)?, &params)?;
    let vs: Vec<f64> = a.grid().ps().iter().map(|q| q / psi.mass()).collect();
    let rows: Vec<[f64; 3]> = vs
        .par_iter()
        .map(|&v| {
            [
                v,
                velocity_amplitude_at(&a, v).norm_sqr(),
                velocity_amplitude_at(&b, v).norm_sqr(),
            ]
        })
        .collect();
    let mut table = Table::new("velocity_density", &["v", "density_m1", "density_m2"]);
    rows.iter().for_each(|r| table.push_nums(r));

    let mut checks = vec![Check::below(
        "velocity_density_mismatch",
        rep.velocity_density_mismatch.unwrap_or(f64::NAN),
        tol,
    )];
    for r in &rep.moment_table {
        checks.push(Check::below(
            format!("velocity_moment_{}", r.order),
            r.mismatch,
            tol,
        ));
    }
    Ok(Outcome {
        checks,
        results: json!({ "m1": psi.mass(), "m2": m2, "report": rep }),
        tables: vec![table],
    })
}

fn dephase(p: &Prepared) -> Result<Outcome> {
    let spec = p.spectrum.as_ref().expect("spectrum prepared");
    let d = p.config.dephase.as_ref().expect("dephase prepared");
    let weights = thermal_weights(spec, d.beta)?;
    let points: Vec<(f64, f64)> = d
        .delta_x
        .iter()
        .flat_map(|&dx| (0..=d.steps).map(move |k| (d.t_max * k as f64 / d.steps as f64, dx)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(t, dx)| {
            let rep = dephasing_report(spec, d.beta, d.g, t, dx, d.sigma_x0)?;
            let exact = gamma_exact(&weights, spec, d.g, t, dx)?;
            let diff = (exact - rep.gamma).norm();
            Ok((rep, diff))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = Table::new(
        "gamma",
        &[
            "t",
            "delta_x",
            "re_gamma",
            "im_gamma",
            "abs_gamma",
            "gaussian_approx",
        ],
    );
    let mut identity: f64 = 0.0;
    let mut margin: f64 = 0.0;
    for (r, diff) in &rows {
        table.push_nums(&[
            r.t,
            r.delta_x,
            r.gamma.re,
            r.gamma.im,
            r.visibility,
            r.gaussian_approx,
        ]);
        identity = identity.max(*diff);
        margin = margin.max(r.regime_margin);
    }
    let (energy, cv) = mean_energy_and_heat_capacity(spec, d.beta)?;
    let tau: Vec<_> = d
        .delta_x
        .iter()
        .zip(rows.chunks(d.steps + 1))
        .map(|(dx, chunk)| json!({ "delta_x": dx, "tau_d": chunk[0].0.tau_d }))
        .collect();
    Ok(Outcome {
        checks: vec![Check::below(
            "gamma_exact_vs_thermal",
            identity,
            p.config.tolerances.identity,
        )],
        results: json!({
            "mean_energy": energy,
            "heat_capacity": cv,
            "dephasing_times": tau,
            "max_regime_margin": margin,
            "points": rows.len(),
        }),
        tables: vec![table],
    })
}

fn echo(p: &Prepared) -> Result<Outcome> {
    let spec = p.spectrum.clone().expect("spectrum prepared");
    let e = p.config.echo.as_ref().expect("echo prepared");
    let initial = CompositeState::thermal(spec.clone(), e.beta, state(p))?;
    let rep = echo_protocol(&initial, e.g, e.t_half, e.delta_x)?;
    let predicted = gamma_thermal(&spec, e.beta, e.g, e.t_half, rep.delta_x)?.norm();
    let purity_before = purity(&initial)?;

    let mut table = Table::new("echo", &["stage", "t", "visibility", "purity"]);
    for (stage, t, v, pu) in [
        ("before", 0.0, rep.visibility_before, purity_before),
        ("reversal", e.t_half, rep.visibility_mid, rep.purity_mid),
        (
            "after",
            2.0 * e.t_half,
            rep.visibility_after,
            rep.purity_after,
        ),
    ] {
        table.push(vec![stage.to_string(), num(t), num(v), num(pu)]);
    }
    let tol = p.config.tolerances.echo;
    Ok(Outcome {
        checks: vec![
            Check::above("visibility_after", rep.visibility_after, 1.0 - tol),
            Check::above("purity_after", rep.purity_after, 1.0 - tol),
        ],
        results: json!({
            "delta_x": rep.delta_x,
            "visibility_before": rep.visibility_before,
            "visibility_mid": rep.visibility_mid,
            "visibility_mid_predicted": predicted,
            "visibility_after": rep.visibility_after,
            "purity_before": purity_before,
            "purity_mid": rep.purity_mid,
            "purity_after": rep.purity_after,
        }),
        tables: vec![table],
    })
}

/// Rounds to `digits` significant figures.
fn significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - e);
    (x * scale).round() / scale
}

fn qubit_phase(p: &Prepared, units: UnitSystem) -> Result<Outcome> {
    let q = p.config.qubit.as_ref().expect("qubit prepared");
    let mut table = Table::new("phase", &["L", "t_d", "phi_g", "phi_g_from_t", "u", "b"]);
    let mut rows = Vec::new();
    let mut form_gap: f64 = 0.0;
    for &l in &q.heights {
        let t_d = detection_time(q.g, l)?;
        let phi = phase_shift(q.omega, q.g, l, units)?;
        let phi_t = phase_shift_t(q.omega, q.g, t_d, units)?;
        let u = relative_shift(q.g, l, units)?;
        let b = match q.sigma_x {
            Some(s) => b_parameter(q.omega, q.g, l, s, units)?.b,
            None => f64::NAN,
        };
        if phi > 0.0 {
            form_gap = form_gap.max(((phi - phi_t) / phi).abs());
        }
        table.push_nums(&[l, t_d, phi, phi_t, u, b]);
        rows.push(
            json!({ "L": l, "t_d": t_d, "phi_g": phi, "u": u, "u_2sf": significant(u, 2), "b": b }),
        );
    }
    let cat = match &q.cat {
        Some(c) => {
            let d = cat_detection_phase(q.omega, q.g, c.ell, c.v1, c.v2)?;
            let z = cat_zeta(q.omega, q.g, d.t_d, c.ell, c.v1, c.v2);
            json!({ "detection": d, "zeta_at_detection": [z.re, z.im] })
        }
        None => serde_json::Value::Null,
    };
    let first = &rows[0];
    Ok(Outcome {
        checks: vec![Check::below(
            "height_vs_time_forms",
            form_gap,
            p.config.tolerances.identity,
        )],
        results: json!({
            "units": units,
            "omega": q.omega,
            "g": q.g,
            "u": first["u"],
            "u_2sf": first["u_2sf"],
            "heights": rows,
            "cat": cat,
        }),
        tables: vec![table],
    })
}

fn wigner_flow(p: &Prepared) -> Result<Outcome> {
    let psi = state(p);
    let params = params(p);
    let evolved = gravity_evolve(psi, &params)?;
    let direct = wigner(&evolved)?;
    let flowed = liouville_shift(&wigner(psi)?, &params)?;
    let diff = max_abs_difference(&flowed, &direct)?;

    let grid = *psi.grid();
    let slice_x = p
        .config
        .wigner
        .as_ref()
        .and_then(|w| w.slice_x)
        .unwrap_or(moments(&evolved, 1)?);
    let k = ((slice_x - grid.x_min()) / grid.dx())
        .round()
        .clamp(0.0, (grid.n() - 1) as f64) as usize;
    let mut slice = Table::new("slice", &["p", "w_direct", "w_flow"]);
    for j in 0..grid.n() {
        slice.push_nums(&[
            direct.axis_value(j),
            direct.values()[[k, j]],
            flowed.values()[[k, j]],
        ]);
    }
    let mut marginal = Table::new("marginal", &["x", "density", "position_marginal"]);
    let mx = direct.position_marginal();
    let mut marginal_gap: f64 = 0.0;
    for (i, (d, m)) in evolved.density().iter().zip(&mx).enumerate() {
        marginal_gap = marginal_gap.max((d - m).abs());
        marginal.push_nums(&[grid.x(i), *d, *m]);
    }
    Ok(Outcome {
        checks: vec![
            Check::below("flow_vs_direct", diff, p.config.tolerances.wigner),
            Check::below(
                "total_drift",
                (direct.total() - 1.0).abs(),
                CONSERVATION_TOLERANCE,
            ),
            Check::below("marginal_vs_density", marginal_gap, CONSERVATION_TOLERANCE),
        ],
        results: json!({
            "max_abs_difference": diff,
            "slice_x": grid.x(k),
            "total": direct.total(),
            "min": direct.min(),
            "imag_residue": direct.imag_residue(),
        }),
        tables: vec![slice, marginal],
    })
}

struct EvolveRow {
    t: f64,
    state: WaveFunction,
    mean: f64,
    variance: f64,
    split_error: f64,
}

fn evolve(p: &Prepared) -> Result<Outcome> {
    let psi = state(p);
    let base = params(p);
    let e = p.config.evolve.as_ref().expect("evolve prepared");
    let rows = e
        .times
        .par_iter()
        .map(|&t| {
            let params = EvolutionParams { t, ..base };
            let state = gravity_evolve(psi, &params)?;
            let split_error = match e.split_steps {
                Some(n) => {
                    let kappa = psi.mass() * params.effective_g();
                    max_density_error(&state, &split_step_evolve(psi, kappa, t, n)?)
                }
                None => f64::NAN,
            };
            Ok(EvolveRow {
                t,
                mean: moments(&state, 1)?,
                variance: dispersion(&state)?,
                split_error,
                state,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let grid = *psi.grid();
    let mut density = Table::new("density", &["t", "x", "density"]);
    let mut table = Table::new(
        "moments",
        &["t", "mean", "variance", "norm", "split_density_error"],
    );
    let mut drift: f64 = 0.0;
    let mut split: f64 = 0.0;
    for r in &rows {
        for (k, d) in r.state.density().iter().enumerate() {
            density.push_nums(&[r.t, grid.x(k), *d]);
        }
        let norm = r.state.norm_sqr();
        drift = drift.max((norm - psi.norm_sqr()).abs());
        if e.split_steps.is_some() {
            split = split.max(r.split_error);
        }
        table.push_nums(&[r.t, r.mean, r.variance, norm, r.split_error]);
    }
    let mut checks = vec![Check::below("norm_drift", drift, p.config.tolerances.norm)];
    if e.split_steps.is_some() {
        checks.push(Check::below(
            "split_step_density",
            split,
            p.config.tolerances.split,
        ));
    }
    Ok(Outcome {
        checks,
        results: json!({
            "times": e.times,
            "mass": psi.mass(),
            "g_effective": base.effective_g(),
            "max_norm_drift": drift,
            "max_split_density_error": if e.split_steps.is_some() { json!(split) } else { json!(null) },
        }),
        tables: vec![density, table],
    })
}
