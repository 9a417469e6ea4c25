//! Named scenarios.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use anyhow::{bail, Context as _, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use er_repeater::analytic::{
    detuned_cavity_effects, dipole_gate_fidelity, electric_dipole_shift, emission_probability, entangle_efficiency,
    entangle_fidelity, exchange_gate_optimum, init_fidelity, magnetic_dipole_shift, readout_fidelity, readout_scan as scan,
    scaled_shift, DipolePairParams, ExchangeGateInputs, ReadoutMode,
};
use er_repeater::chain::{
    avg_time, crossover_distance, direct_transmission_rate, end_to_end_fidelity, monte_carlo_time, two_link_time,
    ChainConfig, ChainSpec, ComponentFidelities, Scheduling, SchemeKind,
};
use er_repeater::lindblad::{
    linspace, refine_optimum, run_cz_protocol, sweep_and_optimize, GateModel, GateProtocol, InputState, KappaUnits,
    LiouvillianOptions, SweepPoint,
};
use er_repeater::{DerivedRates, IonParams, Preset};

type Rates = DerivedRates<f64>;

use crate::output::{Cell, Table};
use crate::{
    Context, Fig3Args, Fig4Args, Fig5Args, Fig6Args, Fig7Args, GateArgs, InputKind, McArgs, Outcome, ReadoutArgs,
    SchedulingArg, SimulateArgs,
};

const DEFAULT_TRIALS: usize = 100_000;

fn exchange_inputs(p: &Preset, rates: &Rates) -> ExchangeGateInputs<f64> {
    ExchangeGateInputs {
        cooperativity: rates.cooperativity,
        kappa: p.cavity.kappa,
        gamma: rates.gamma,
        gamma_star: p.ion.gamma_star,
        delta_w: p.link.delta_w,
        delta_eg: p.ion.delta_eg,
    }
}

fn off_resonant_ion(p: &Preset, purcell: f64) -> Result<IonParams<f64>> {
    let off = detuned_cavity_effects(p.ion.delta_eg, p.cavity.kappa, purcell)?;
    let mut ion = p.ion;
    ion.gamma_nr += off.off_resonant_purcell * ion.gamma_r;
    Ok(ion)
}

pub fn derive_params(ctx: &Context) -> Result<Outcome> {
    let p = &ctx.preset;
    let r = p.rates()?;
    let mut out = Outcome::default();
    let mut t = Table::new("derived_params", &["quantity", "value", "unit"]);
    let mut add = |q: &str, v: f64, u: &str| t.push(vec![q.into(), v.into(), u.into()]);

    add("gamma", r.gamma, "rad/s");
    add("gamma_r", r.gamma_r, "rad/s");
    add("gamma_star", r.gamma_star, "rad/s");
    add("purcell", r.purcell, "1");
    add("g", p.cavity.g, "rad/s");
    add("kappa", p.cavity.kappa, "rad/s");
    add("g_over_kappa", p.cavity.g / p.cavity.kappa, "1");
    if let Some(q) = p.cavity.quality_factor() {
        add("quality_factor", q, "1");
    }
    add("gamma_prime", r.gamma_prime, "rad/s");
    add("lifetime", r.lifetime(), "s");
    add("zpl_width", r.zpl_width, "rad/s");
    add("zpl_width_prime", r.zpl_width_prime, "rad/s");
    add("indistinguishability", r.indist, "1");
    add("indistinguishability_prime", r.indist_prime, "1");
    add("cooperativity", r.cooperativity, "1");
    add("cooperativity_star", r.cooperativity_star, "1");
    add("emission_probability", emission_probability(&r, p.link.eta_c), "1");

    let e = entangle_fidelity(&r, p.link.delta_w);
    add("entangle_fidelity", e.fidelity, "1");
    add("wavepacket_overlap", e.overlap, "1");
    add("init_time", p.link.t_init, "s");
    add("init_fidelity", init_fidelity(&r, p.ion.beta, p.link.t_init), "1");

    let ro = readout_fidelity(&p.readout, r.gamma_prime, ReadoutMode::PulseTrain)?;
    add("readout_period", p.readout.period, "s");
    add("readout_duration", ro.duration, "s");
    add("readout_miss_probability", ro.miss_probability, "1");
    add("readout_fidelity", ro.fidelity, "1");
    let fixed = readout_fidelity(&p.readout, r.gamma_prime, ReadoutMode::FixedWindow)?;
    add("readout_fidelity_fixed_window", fixed.fidelity, "1");

    let opt = exchange_gate_optimum(&exchange_inputs(p, &r))?;
    add("exchange_fidelity_max", opt.fidelity, "1");
    add("exchange_delta_over_kappa", opt.delta / p.cavity.kappa, "1");
    add("exchange_gate_time", opt.gate_time, "s");
    if opt.flags.ion_detuning {
        out.warnings.push("exchange gate: ion detuning outside the lowest-order regime".into());
    }
    if opt.flags.hyperfine_splitting {
        out.warnings.push("exchange gate: excited splitting outside the lowest-order regime".into());
    }

    let d = &p.dipole;
    let dnu = d.reference_shift_hz;
    let g = dipole_gate_fidelity(&p.ion, dnu, d.shift_error_ratio * dnu)?;
    add("dipole_gate_fidelity", g.fidelity, "1");
    add("dipole_gate_time", g.gate_time, "s");
    let off = detuned_cavity_effects(p.ion.delta_eg, p.cavity.kappa, r.purcell)?;
    add("off_resonant_purcell", off.off_resonant_purcell, "1");
    let g_off = dipole_gate_fidelity(&off_resonant_ion(p, r.purcell)?, dnu, d.shift_error_ratio * dnu)?;
    add("dipole_gate_fidelity_off_resonant", g_off.fidelity, "1");
    let mut pair = DipolePairParams::broadside(d.delta_mu, d.reference_separation_m, d.epsilon);
    add("electric_shift_at_reference", electric_dipole_shift(&pair)?.abs(), "Hz");
    if let Some(mu) = d.magnetic_moment {
        pair.magnetic_moment = Some(mu);
        add("magnetic_shift_at_reference", magnetic_dipole_shift(&pair)?, "Hz");
    }

    let eff = entangle_efficiency(&r, &p.link);
    add("link_length", p.link.l0_km, "km");
    add("link_transmission", eff.transmission, "1");
    add("heralding_probability", eff.p_en, "1");
    add("attempt_time", p.link.attempt_time(), "s");
    add("two_link_time", two_link_time(&p.link, eff.p_en, 1.0)?, "s");
    let mut bare = p.link;
    bare.t_init = 0.0;
    add("two_link_time_without_init", two_link_time(&bare, eff.p_en, 1.0)?, "s");

    out.summary.insert("entangle_fidelity".into(), json!(e.fidelity));
    out.summary.insert("lifetime_s".into(), json!(r.lifetime()));
    out.tables.push(t);
    Ok(out)
}

fn gate_units(ctx: &Context, g: &GateArgs) -> KappaUnits<f64> {
    let p = &ctx.preset;
    let mut u = if g.preset_rates {
        KappaUnits::from_preset(p, g.g_over_kappa)
    } else {
        KappaUnits::from_cooperativity(g.g_over_kappa, g.cooperativity, g.gamma_star_ratio)
    };
    u.delta_eg_over_kappa = g.delta_eg_over_kappa.unwrap_or(p.ion.delta_eg / p.cavity.kappa);
    u.n_max = g.n_max;
    u
}

fn gate_setup(ctx: &Context, g: &GateArgs) -> Result<(KappaUnits<f64>, GateModel<f64>, GateProtocol<f64>)> {
    let units = gate_units(ctx, g);
    let options = LiouvillianOptions {
        dephasing_rate_factor: g.dephasing_factor,
    };
    let model = GateModel::kappa_units(&units, options)?;
    let mut proto = GateProtocol::new(1.0, 0.0);
    proto.input = match g.input {
        InputKind::Uniform => InputState::Uniform,
        InputKind::BasisAverage => InputState::BasisAverage,
    };
    Ok((units, model, proto))
}

fn gate_meta(t: &mut Table, ctx: &Context, units: &KappaUnits<f64>, g: &GateArgs) {
    t.meta("g_over_kappa", units.g_over_kappa)
        .meta("cooperativity", units.cooperativity())
        .meta("gamma_star_over_gamma", units.gamma_star_over_kappa / units.gamma_over_kappa)
        .meta("delta_eg_over_kappa", units.delta_eg_over_kappa)
        .meta("n_max", units.n_max)
        .meta("dephasing_factor", g.dephasing_factor)
        .meta("input", format!("{:?}", g.input))
        .meta("kappa_rad_per_s", ctx.preset.cavity.kappa)
        .meta("units", "detunings in kappa; gate_time_s uses the preset kappa");
}

pub fn simulate_gate(ctx: &Context, a: &SimulateArgs) -> Result<Outcome> {
    let (units, model, mut proto) = gate_setup(ctx, &a.gate)?;
    proto.delta = a.delta;
    proto.p_eta_d = a.p_eta_d;
    proto.gate_time = a.gate_time;
    let r = run_cz_protocol(&model, &proto)?;
    let kappa = ctx.preset.cavity.kappa;
    let mut t = Table::new(
        "simulate_gate",
        &[
            "delta_over_kappa",
            "p_eta_d",
            "fidelity",
            "p_gate",
            "p_gate_control_excited",
            "gate_time_kappa",
            "gate_time_s",
            "leakage",
            "cutoff_population",
            "phase_a",
            "phase_b",
            "truncation_warning",
        ],
    );
    gate_meta(&mut t, ctx, &units, &a.gate);
    t.push(vec![
        r.delta.into(),
        r.p_eta_d.into(),
        r.fidelity.into(),
        r.p_gate.into(),
        r.p_gate_control_excited.into(),
        r.gate_time.into(),
        (r.gate_time / kappa).into(),
        r.leakage.into(),
        r.cutoff_population.into(),
        r.local_phases[0].into(),
        r.local_phases[1].into(),
        r.truncation_warning.into(),
    ]);
    let mut out = Outcome::default();
    if r.truncation_warning {
        out.warnings.push(format!(
            "top Fock state population {:.3e} exceeds the truncation threshold",
            r.cutoff_population
        ));
    }
    out.summary.insert("fidelity".into(), json!(r.fidelity));
    out.summary.insert("p_gate".into(), json!(r.p_gate));
    out.tables.push(t);
    Ok(out)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        bail!("need 0 < min < max and at least two points");
    }
    Ok(linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect())
}

pub fn fig3(ctx: &Context, a: &Fig3Args) -> Result<Outcome> {
    let grid = log_grid(a.purcell_min, a.purcell_max, a.points)?;
    let mut t = Table::new("fig3", &["purcell", "fidelity", "overlap", "indist_prime", "lifetime_s"]);
    t.meta("delta_w_rad_per_s", ctx.preset.link.delta_w);
    for fp in grid {
        let r = ctx.preset.with_purcell(fp)?.rates()?;
        let e = entangle_fidelity(&r, ctx.preset.link.delta_w);
        t.push(vec![fp.into(), e.fidelity.into(), e.overlap.into(), e.indist_prime.into(), r.lifetime().into()]);
    }
    let r = ctx.preset.with_purcell(5000.0)?.rates()?;
    let mut out = Outcome::default();
    out.summary
        .insert("fidelity_at_purcell_5000".into(), json!(entangle_fidelity(&r, ctx.preset.link.delta_w).fidelity));
    out.tables.push(t);
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    fingerprint: String,
    /// Keyed by "curve,point".
    points: BTreeMap<String, SweepPoint<f64>>,
}

const CHECKPOINT: &str = "fig4.checkpoint.json";

fn save_checkpoint(path: &Path, c: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(c)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn fig4(ctx: &Context, a: &Fig4Args) -> Result<Outcome> {
    if a.p_eta_d.is_empty() {
        bail!("--p-eta-d needs at least one value");
    }
    if a.points < 3 || !(a.delta_max > a.delta_min && a.delta_min > 0.0) {
        bail!("need 0 < --delta-min < --delta-max and at least three points");
    }
    let (units, model, base) = gate_setup(ctx, &a.gate)?;
    let deltas = linspace(a.delta_min, a.delta_max, a.points);
    let fingerprint = crate::output::sha256_hex(
        serde_json::to_string(&json!({
            "units": units,
            "dephasing_factor": a.gate.dephasing_factor,
            "input": format!("{:?}", a.gate.input),
            "p_eta_d": a.p_eta_d,
            "deltas": deltas,
        }))?
        .as_bytes(),
    );
    let path = ctx.out.join(CHECKPOINT);
    let mut done = BTreeMap::new();
    if a.resume && path.exists() {
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let c: Checkpoint = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if c.fingerprint == fingerprint {
            done = c.points;
        } else {
            eprintln!("warning: checkpoint belongs to a different sweep; starting over");
        }
    }
    let key = |i: usize, j: usize| format!("{i},{j}");
    let pending: Vec<(usize, usize)> = (0..a.p_eta_d.len())
        .flat_map(|i| (0..deltas.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| !done.contains_key(&key(i, j)))
        .collect();
    let limit = a.max_new_points.unwrap_or(usize::MAX);
    let batch = &pending[..pending.len().min(limit)];
    let truncated = batch.len() < pending.len();

    if !batch.is_empty() {
        fs::create_dir_all(&ctx.out).with_context(|| format!("creating {}", ctx.out.display()))?;
    }
    let state = Mutex::new(Checkpoint {
        fingerprint,
        points: done,
    });
    batch.par_iter().try_for_each(|&(i, j)| -> Result<()> {
        let mut proto = base.clone();
        proto.delta = deltas[j];
        proto.p_eta_d = a.p_eta_d[i];
        let pt = SweepPoint::from(&run_cz_protocol(&model, &proto)?);
        let mut c = state.lock().expect("checkpoint lock");
        c.points.insert(key(i, j), pt);
        save_checkpoint(&path, &c)
    })?;
    let state = state.into_inner().expect("checkpoint lock");

    let mut out = Outcome::default();
    if truncated {
        out.warnings.push(format!(
            "sweep incomplete: {} of {} points done; rerun with --resume",
            state.points.len(),
            a.p_eta_d.len() * deltas.len()
        ));
        out.incomplete = true;
        return Ok(out);
    }

    let curves: Vec<Vec<SweepPoint<f64>>> = (0..a.p_eta_d.len())
        .map(|i| (0..deltas.len()).map(|j| state.points[&key(i, j)]).collect())
        .collect();
    let optima: Vec<(SweepPoint<f64>, bool)> = curves
        .par_iter()
        .zip(a.p_eta_d.par_iter())
        .map(|(pts, &p)| refine_optimum(&model, &base, p, pts))
        .collect::<std::result::Result<_, _>>()?;

    let kappa = ctx.preset.cavity.kappa;
    let mut grid = Table::new(
        "fig4",
        &[
            "delta_over_kappa",
            "p_eta_d",
            "fidelity",
            "p_gate",
            "p_gate_control_excited",
            "gate_time_s",
            "truncation_warning",
        ],
    );
    gate_meta(&mut grid, ctx, &units, &a.gate);
    let mut truncation = false;
    for (pts, &p) in curves.iter().zip(&a.p_eta_d) {
        for pt in pts {
            truncation |= pt.truncation_warning;
            grid.push(vec![
                pt.delta.into(),
                p.into(),
                pt.fidelity.into(),
                pt.p_gate.into(),
                pt.p_gate_control_excited.into(),
                (pt.gate_time / kappa).into(),
                pt.truncation_warning.into(),
            ]);
        }
    }
    let reference = a.p_eta_d.iter().position(|&p| p == 0.0).unwrap_or(0);
    let t0 = optima[reference].0.gate_time;
    let mut best = Table::new(
        "fig4_optima",
        &[
            "p_eta_d",
            "delta_over_kappa",
            "fidelity",
            "p_gate",
            "p_gate_control_excited",
            "gate_time_s",
            "gate_time_over_t0",
            "boundary_warning",
        ],
    );
    gate_meta(&mut best, ctx, &units, &a.gate);
    best.meta("t0", format!("optimum gate time at p_eta_d = {}", a.p_eta_d[reference]));
    for ((opt, boundary), &p) in optima.iter().zip(&a.p_eta_d) {
        if *boundary {
            out.warnings.push(format!("p_eta_d = {p}: fidelity maximum on the edge of the detuning grid"));
        }
        best.push(vec![
            p.into(),
            opt.delta.into(),
            opt.fidelity.into(),
            opt.p_gate.into(),
            opt.p_gate_control_excited.into(),
            (opt.gate_time / kappa).into(),
            (opt.gate_time / t0).into(),
            (*boundary).into(),
        ]);
        out.summary.insert(
            format!("optimum_p_eta_d_{p}"),
            json!({ "delta_over_kappa": opt.delta, "fidelity": opt.fidelity, "p_gate": opt.p_gate,
                    "p_gate_control_excited": opt.p_gate_control_excited }),
        );
    }
    if truncation {
        out.warnings.push("top Fock state population above the truncation threshold".into());
    }
    if path.exists() {
        fs::remove_file(&path).with_context(|| format!("removing {}", path.display()))?;
    }
    out.tables.push(grid);
    out.tables.push(best);
    Ok(out)
}

pub fn fig5_dipole(ctx: &Context, a: &Fig5Args) -> Result<Outcome> {
    if !(a.r_min_nm > 0.0 && a.r_max_nm > a.r_min_nm) || a.points < 2 {
        bail!("need 0 < --r-min-nm < --r-max-nm and at least two points");
    }
    let p = &ctx.preset;
    let d = &p.dipole;
    let fp = p.rates()?.purcell;
    let off_ion = off_resonant_ion(p, fp)?;
    let mut t = Table::new(
        "fig5_dipole",
        &[
            "separation_nm",
            "delta_nu_hz",
            "gate_time_s",
            "fidelity",
            "fidelity_off_resonant",
            "electric_shift_formula_hz",
            "magnetic_shift_hz",
        ],
    );
    t.meta("reference_shift_hz", d.reference_shift_hz)
        .meta("reference_separation_m", d.reference_separation_m)
        .meta("shift_error_ratio", d.shift_error_ratio)
        .meta("purcell", fp);
    for r_nm in linspace(a.r_min_nm, a.r_max_nm, a.points) {
        let r = r_nm * 1e-9;
        let dnu = scaled_shift(d.reference_shift_hz, d.reference_separation_m, r);
        let g = dipole_gate_fidelity(&p.ion, dnu, d.shift_error_ratio * dnu)?;
        let g_off = dipole_gate_fidelity(&off_ion, dnu, d.shift_error_ratio * dnu)?;
        let mut pair = DipolePairParams::broadside(d.delta_mu, r, d.epsilon);
        pair.magnetic_moment = d.magnetic_moment;
        let magnetic = match d.magnetic_moment {
            Some(_) => Cell::Num(magnetic_dipole_shift(&pair)?),
            None => Cell::Empty,
        };
        t.push(vec![
            r_nm.into(),
            dnu.into(),
            g.gate_time.into(),
            g.fidelity.into(),
            g_off.fidelity.into(),
            electric_dipole_shift(&pair)?.abs().into(),
            magnetic,
        ]);
    }
    let g = dipole_gate_fidelity(&p.ion, d.reference_shift_hz, d.shift_error_ratio * d.reference_shift_hz)?;
    let mut out = Outcome::default();
    out.summary.insert("fidelity_at_reference".into(), json!(g.fidelity));
    out.summary.insert("gate_time_at_reference_s".into(), json!(g.gate_time));
    out.tables.push(t);
    Ok(out)
}

pub fn readout_scan(ctx: &Context, a: &ReadoutArgs) -> Result<Outcome> {
    let p = &ctx.preset;
    let gp = p.rates()?.gamma_prime;
    let ro = &p.readout;
    let total = a.total_time.unwrap_or(ro.pulses as f64 * ro.period);
    if a.max_pulses == 0 {
        bail!("--max-pulses must be at least 1");
    }
    let points = scan(total, gp, ro.xi, ro.p_eta_d, 1..=a.max_pulses)?;
    let mut t = Table::new(
        "readout_scan",
        &["pulses", "period_s", "period_times_gamma_prime", "fidelity", "fidelity_fixed_window"],
    );
    t.meta("total_time_s", total)
        .meta("p_eta_d", ro.p_eta_d)
        .meta("xi", ro.xi)
        .meta("gamma_prime_rad_per_s", gp);
    let mut best = (0u32, f64::NEG_INFINITY);
    for pt in &points {
        let mut cfg = *ro;
        cfg.pulses = pt.pulses;
        cfg.period = pt.period;
        let fixed = readout_fidelity(&cfg, gp, ReadoutMode::FixedWindow)?;
        if pt.fidelity > best.1 {
            best = (pt.pulses, pt.fidelity);
        }
        t.push(vec![
            pt.pulses.into(),
            pt.period.into(),
            (pt.period * gp).into(),
            pt.fidelity.into(),
            fixed.fidelity.into(),
        ]);
    }
    let mut out = Outcome::default();
    out.summary.insert("best_pulses".into(), json!(best.0));
    out.summary.insert("best_fidelity".into(), json!(best.1));
    out.tables.push(t);
    Ok(out)
}

/// Preset at a given Purcell factor with the readout period set to
/// `period_lifetimes`/γ′.
fn at_purcell(ctx: &Context, fp: f64, period_lifetimes: f64) -> Result<(Preset, Rates)> {
    let p = ctx.preset.with_purcell(fp)?;
    let r = p.rates()?;
    let mut p = p;
    p.readout.period = period_lifetimes / r.gamma_prime;
    Ok((p, r))
}

#[derive(Clone, Copy, Debug)]
struct Components {
    init: f64,
    entangle: f64,
    readout: f64,
}

fn components(p: &Preset, r: &Rates) -> Result<Components> {
    Ok(Components {
        init: init_fidelity(r, p.ion.beta, p.link.t_init),
        entangle: entangle_fidelity(r, p.link.delta_w).fidelity,
        readout: readout_fidelity(&p.readout, r.gamma_prime, ReadoutMode::PulseTrain)?.fidelity,
    })
}

/// Simulated exchange-gate optima without and with cavity monitoring.
fn simulated_exchange(p: &Preset, r: &Rates, p_eta_d: f64) -> Result<[(SweepPoint<f64>, bool); 2]> {
    let units = KappaUnits::from_preset(p, p.cavity.g / p.cavity.kappa);
    let model = GateModel::kappa_units(&units, LiouvillianOptions::default())?;
    let scale = r.cooperativity_star.sqrt() / 2.0;
    let deltas = linspace(0.05 * scale, 2.0 * scale, 40);
    let curves = sweep_and_optimize(&model, &GateProtocol::new(1.0, 0.0), &deltas, &[0.0, p_eta_d])?;
    Ok([
        (curves[0].optimum, curves[0].boundary_warning),
        (curves[1].optimum, curves[1].boundary_warning),
    ])
}

struct Curve {
    label: &'static str,
    scheme: SchemeKind<f64>,
    purcell: f64,
    gate: f64,
    p_gate: f64,
    delta_over_kappa: Option<f64>,
    components: Components,
    preset: Preset,
    rates: Rates,
}

pub fn fig6(ctx: &Context, a: &Fig6Args) -> Result<Outcome> {
    if let Some(&m) = a.links.iter().find(|&&m| m < 2 || m % 2 != 0) {
        bail!("--links must be even and at least 2, got {m}");
    }
    const PERIOD_LIFETIMES: f64 = 2.0;
    let gate_p = a.gate_p_eta_d.unwrap_or(ctx.preset.readout.p_eta_d);
    let mut out = Outcome::default();

    let (hi, hi_r) = at_purcell(ctx, a.purcell_high, PERIOD_LIFETIMES)?;
    let (lo, lo_r) = at_purcell(ctx, a.purcell_low, PERIOD_LIFETIMES)?;
    let sims: Vec<[(SweepPoint<f64>, bool); 2]> = [(&hi, &hi_r), (&lo, &lo_r)]
        .par_iter()
        .map(|(p, r)| simulated_exchange(p, r, gate_p))
        .collect::<Result<_>>()?;
    for (sim, fp) in sims.iter().zip([a.purcell_high, a.purcell_low]) {
        for (s, p) in sim.iter().zip([0.0, gate_p]) {
            if s.1 {
                out.warnings.push(format!("F_p = {fp}, p_eta_d = {p}: gate optimum on the edge of the detuning grid"));
            }
        }
    }
    let d = &lo.dipole;
    let dipole = dipole_gate_fidelity(&lo.ion, d.reference_shift_hz, d.shift_error_ratio * d.reference_shift_hz)?;

    let exchange = |label, post: bool, p: &Preset, r: &Rates, sim: &[(SweepPoint<f64>, bool); 2]| -> Result<Curve> {
        let s = &sim[post as usize].0;
        Ok(Curve {
            label,
            scheme: if post {
                SchemeKind::ExchangePostselected {
                    p_gate: s.p_gate_control_excited,
                }
            } else {
                SchemeKind::ExchangeDeterministic
            },
            purcell: r.purcell,
            gate: s.fidelity,
            p_gate: if post { s.p_gate_control_excited } else { 1.0 },
            delta_over_kappa: Some(s.delta),
            components: components(p, r)?,
            preset: p.clone(),
            rates: *r,
        })
    };
    let mut curves = vec![
        exchange("A", true, &hi, &hi_r, &sims[0])?,
        Curve {
            label: "B",
            scheme: SchemeKind::DipoleDipole,
            purcell: lo_r.purcell,
            gate: dipole.fidelity,
            p_gate: 1.0,
            delta_over_kappa: None,
            components: components(&lo, &lo_r)?,
            preset: lo.clone(),
            rates: lo_r,
        },
        exchange("C", false, &hi, &hi_r, &sims[0])?,
    ];
    if let Some(f_gate) = a.er_eu_gate {
        curves.push(Curve {
            label: "D",
            scheme: SchemeKind::ErEuHybrid {
                f_gate,
                p_gate: a.er_eu_p_gate,
            },
            purcell: lo_r.purcell,
            gate: f_gate,
            p_gate: a.er_eu_p_gate,
            delta_over_kappa: None,
            components: components(&lo, &lo_r)?,
            preset: lo.clone(),
            rates: lo_r,
        });
    }
    curves.push(exchange("E", true, &lo, &lo_r, &sims[1])?);
    curves.push(exchange("F", false, &lo, &lo_r, &sims[1])?);

    let mut comp = Table::new(
        "fig6_components",
        &[
            "curve",
            "scheme",
            "purcell",
            "f_init",
            "f_entangle",
            "f_gate",
            "f_readout",
            "p_gate",
            "delta_over_kappa",
        ],
    );
    comp.meta("gate_p_eta_d", gate_p)
        .meta("readout_period_lifetimes", PERIOD_LIFETIMES)
        .meta("p_gate", "success probability with the control ion excited");
    let mut t = Table::new("fig6", &["curve", "scheme", "purcell", "links", "fidelity"]);
    t.meta("note", "product of step fidelities; an estimate valid at high fidelity");
    let mut at8 = BTreeMap::new();
    for c in &curves {
        comp.push(vec![
            c.label.into(),
            c.scheme.name().into(),
            c.purcell.into(),
            c.components.init.into(),
            c.components.entangle.into(),
            c.gate.into(),
            c.components.readout.into(),
            c.p_gate.into(),
            c.delta_over_kappa.into(),
        ]);
        let spec = ChainSpec {
            links: 2,
            link: c.preset.link,
            rates: c.rates,
            scheme: c.scheme,
            fidelities: ComponentFidelities {
                init: c.components.init,
                entangle: c.components.entangle,
                gate: c.gate,
                readout: c.components.readout,
            },
            scheduling: Scheduling::Parallel,
        };
        for &m in &a.links {
            let mut s = spec.clone();
            s.links = m;
            let f = end_to_end_fidelity(&s.at_distance(m as f64 * c.preset.link.l0_km))?;
            if m == 8 {
                at8.insert(c.label, f);
            }
            t.push(vec![c.label.into(), c.scheme.name().into(), c.purcell.into(), m.into(), f.into()]);
        }
    }
    if let (Some(fa), Some(fb), Some(fc)) = (at8.get("A"), at8.get("B"), at8.get("C")) {
        out.summary.insert("ordering_a_b_c_at_8_links".into(), json!(fa > fb && fb > fc));
    }
    out.summary.insert("fidelity_at_8_links".into(), json!(at8));
    out.tables.push(t);
    out.tables.push(comp);
    Ok(out)
}

pub fn fig7(ctx: &Context, a: &Fig7Args) -> Result<Outcome> {
    if a.links < 2 || !a.links.is_power_of_two() {
        bail!("--links must be a power of two of at least 2, got {}", a.links);
    }
    if !(a.l_min > 0.0 && a.l_max > a.l_min) || a.points < 2 {
        bail!("need 0 < --l-min < --l-max and at least two points");
    }
    let spec_for = |fp: f64, scheme: SchemeKind<f64>| -> Result<ChainSpec<f64>> {
        let p = ctx.preset.with_purcell(fp)?;
        Ok(ChainSpec {
            links: a.links,
            link: p.link,
            rates: p.rates()?,
            scheme,
            fidelities: ComponentFidelities::perfect(),
            scheduling: Scheduling::Parallel,
        })
    };
    let mut curves = vec![("A", spec_for(a.purcell_low, SchemeKind::ExchangeDeterministic)?)];
    if let Some(p_gate) = a.er_eu_p_gate {
        curves.push((
            "B",
            spec_for(a.purcell_low, SchemeKind::ErEuHybrid { f_gate: 1.0, p_gate })?,
        ));
    }
    curves.push((
        "C",
        spec_for(a.purcell_high, SchemeKind::ExchangePostselected { p_gate: a.p_gate })?,
    ));
    let l_att = ctx.preset.link.l_att_km;
    let mut t = Table::new(
        "fig7",
        &["curve", "scheme", "purcell", "distance_km", "rate_hz", "expected_time_s", "p_en"],
    );
    t.meta("links", a.links)
        .meta("init_time", "per preset, resolved at each curve's Purcell factor")
        .meta("source_rate_hz", a.source_rate);
    let distances = linspace(a.l_min, a.l_max, a.points);
    for (label, spec) in &curves {
        for &l in &distances {
            let cfg = spec.at_distance(l);
            let time = avg_time(&cfg)?;
            t.push(vec![
                (*label).into(),
                spec.scheme.name().into(),
                spec.rates.purcell.into(),
                l.into(),
                time.recip().into(),
                time.into(),
                cfg.p_en.into(),
            ]);
        }
    }
    for &l in &distances {
        t.push(vec![
            "D".into(),
            "direct".into(),
            Cell::Empty,
            l.into(),
            direct_transmission_rate(l, a.source_rate, l_att).into(),
            Cell::Empty,
            Cell::Empty,
        ]);
    }
    let mut out = Outcome::default();
    let direct = |l: f64| Ok(direct_transmission_rate(l, a.source_rate, l_att));
    for (label, spec) in &curves {
        let rate = |l: f64| avg_time(&spec.at_distance(l)).map(|x| x.recip());
        let x = crossover_distance(rate, direct, a.l_min, a.l_max, 1000)?;
        out.summary.insert(format!("crossover_{label}_vs_direct_km"), json!(x));
        t.meta(&format!("crossover {label} vs D (km)"), x.map_or("none".into(), crate::output::format_number));
    }
    out.tables.push(t);
    Ok(out)
}

pub fn mc_rate(ctx: &Context, a: &McArgs) -> Result<Outcome> {
    if let Some(&m) = a.links.iter().find(|&&m| m < 2 || !m.is_power_of_two()) {
        bail!("--links must be powers of two of at least 2, got {m}");
    }
    let trials = ctx.trials.unwrap_or(DEFAULT_TRIALS);
    let p = &ctx.preset;
    let rates = p.rates()?;
    let scheme = if a.p_gate < 1.0 {
        SchemeKind::ExchangePostselected { p_gate: a.p_gate }
    } else {
        SchemeKind::ExchangeDeterministic
    };
    let scheduling = match a.scheduling {
        SchedulingArg::Parallel => Scheduling::Parallel,
        SchedulingArg::Sequential => Scheduling::Sequential,
    };
    let mut t = Table::new(
        "mc_rate",
        &[
            "links",
            "l0_km",
            "total_km",
            "p_en",
            "p_s",
            "trials",
            "mc_mean_s",
            "mc_std_error_s",
            "analytic_s",
            "relative_difference",
            "z_score",
        ],
    );
    t.meta("scheduling", format!("{scheduling:?}"))
        .meta("seed", ctx.seed)
        .meta("init_time_s", p.link.t_init);
    for &m in &a.links {
        let l0 = match (a.l0, a.distance) {
            (Some(l0), _) => l0,
            (None, Some(d)) => d / m as f64,
            (None, None) => p.link.l0_km,
        };
        let mut link = p.link;
        link.l0_km = l0;
        let cfg = ChainConfig {
            total_km: l0 * m as f64,
            links: m,
            link,
            p_en: entangle_efficiency(&rates, &link).p_en,
            scheme,
            fidelities: ComponentFidelities::perfect(),
            scheduling,
        };
        cfg.validate()?;
        let est = monte_carlo_time(&cfg, trials, ctx.seed)?;
        let analytic = avg_time(&cfg)?;
        t.push(vec![
            m.into(),
            l0.into(),
            cfg.total_km.into(),
            cfg.p_en.into(),
            scheme.swap_success().into(),
            trials.into(),
            est.mean.into(),
            est.std_error.into(),
            analytic.into(),
            (est.mean / analytic - 1.0).into(),
            ((est.mean - analytic) / est.std_error).into(),
        ]);
    }
    let mut out = Outcome::default();
    out.summary.insert("trials".into(), json!(trials));
    out.tables.push(t);
    Ok(out)
}
