//! Row-by-row evaluation of a CSV table.
//!
//! Each operation has required and optional columns; optional ones default
//! to the preset. Rates are in rad/s, frequencies written `_hz` are in
//! cycles per second, times in seconds and lengths in km unless the column
//! name says otherwise. Rows that cannot be evaluated are kept, flagged in
//! the `status` column and reported on stderr.

use std::collections::HashMap;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::ValueEnum;

use er_repeater::analytic::{
    detuned_cavity_effects, dipole_gate_fidelity, electric_dipole_shift, emission_probability, entangle_efficiency,
    entangle_fidelity, exchange_gate_analytic, exchange_gate_optimum, init_fidelity, magnetic_dipole_shift,
    readout_fidelity, DephasingForm, DipolePairParams, ExchangeGateInputs, ReadoutMode,
};
use er_repeater::chain::{evaluate_chain, ChainSpec, ComponentFidelities, Scheduling, SchemeKind};
use er_repeater::Preset;

use crate::output::{Cell, Table};
use crate::{Context, EvalArgs, Outcome};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Operation {
    /// purcell [, delta_w_hz]
    Entangle,
    /// purcell [, beta, t_init_lifetimes]
    Init,
    /// purcell [, eta_c]
    Emission,
    /// cooperativity, gamma_star_over_gamma [, delta_over_kappa, delta_w_over_kappa, delta_eg_over_kappa]
    Exchange,
    /// delta_nu_hz [, shift_error_ratio, off_resonant_purcell]
    Dipole,
    /// separation_nm [, delta_mu, epsilon, magnetic_moment]
    DipoleShift,
    /// delta_over_kappa, purcell
    DetunedCavity,
    /// pulses, period_s [, purcell, xi, p_eta_d, mode]
    Readout,
    /// total_km, links [, scheme, purcell, p_gate, f_gate, scheduling]
    Chain,
}

impl Operation {
    fn name(self) -> &'static str {
        match self {
            Operation::Entangle => "entangle",
            Operation::Init => "init",
            Operation::Emission => "emission",
            Operation::Exchange => "exchange",
            Operation::Dipole => "dipole",
            Operation::DipoleShift => "dipole-shift",
            Operation::DetunedCavity => "detuned-cavity",
            Operation::Readout => "readout",
            Operation::Chain => "chain",
        }
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            Operation::Entangle | Operation::Init | Operation::Emission => &["purcell"],
            Operation::Exchange => &["cooperativity", "gamma_star_over_gamma"],
            Operation::Dipole => &["delta_nu_hz"],
            Operation::DipoleShift => &["separation_nm"],
            Operation::DetunedCavity => &["delta_over_kappa", "purcell"],
            Operation::Readout => &["pulses", "period_s"],
            Operation::Chain => &["total_km", "links"],
        }
    }

    fn outputs(self) -> &'static [&'static str] {
        match self {
            Operation::Entangle => &["fidelity", "overlap", "indist_prime", "lifetime_s"],
            Operation::Init => &["fidelity", "t_init_s"],
            Operation::Emission => &["probability"],
            Operation::Exchange => &["fidelity", "delta_over_kappa", "gate_time_s", "cooperativity_star", "validity_warning"],
            Operation::Dipole => &["fidelity", "gate_time_s"],
            Operation::DipoleShift => &["electric_shift_hz", "magnetic_shift_hz"],
            Operation::DetunedCavity => &["line_enhancement_ratio", "off_resonant_purcell"],
            Operation::Readout => &["fidelity", "duration_s", "miss_probability"],
            Operation::Chain => &["fidelity", "expected_time_s", "rate_hz", "p_en"],
        }
    }
}

struct Row<'a> {
    cols: &'a HashMap<String, usize>,
    fields: &'a csv::StringRecord,
}

impl Row<'_> {
    fn raw(&self, name: &str) -> Option<&str> {
        let i = *self.cols.get(name)?;
        self.fields.get(i).map(str::trim).filter(|s| !s.is_empty())
    }

    fn opt(&self, name: &str) -> Result<Option<f64>> {
        self.raw(name)
            .map(|s| s.parse::<f64>().map_err(|_| anyhow!("{name}: `{s}` is not a number")))
            .transpose()
    }

    fn num(&self, name: &str) -> Result<f64> {
        self.opt(name)?.ok_or_else(|| anyhow!("{name} is empty"))
    }

    fn or(&self, name: &str, default: f64) -> Result<f64> {
        Ok(self.opt(name)?.unwrap_or(default))
    }

    fn count(&self, name: &str) -> Result<u32> {
        let v = self.num(name)?;
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            bail!("{name}: `{v}` is not a whole number");
        }
        Ok(v as u32)
    }
}

fn at_purcell(p: &Preset, row: &Row) -> Result<Preset> {
    match row.opt("purcell")? {
        Some(fp) => Ok(p.with_purcell(fp)?),
        None => Ok(p.clone()),
    }
}

fn evaluate(op: Operation, p: &Preset, row: &Row) -> Result<Vec<Cell>> {
    Ok(match op {
        Operation::Entangle => {
            let p = at_purcell(p, row)?;
            let r = p.rates()?;
            let dw = match row.opt("delta_w_hz")? {
                Some(hz) => std::f64::consts::TAU * hz,
                None => p.link.delta_w,
            };
            let e = entangle_fidelity(&r, dw);
            vec![e.fidelity.into(), e.overlap.into(), e.indist_prime.into(), r.lifetime().into()]
        }
        Operation::Init => {
            let p = at_purcell(p, row)?;
            let r = p.rates()?;
            let t = match row.opt("t_init_lifetimes")? {
                Some(n) => n / r.gamma_prime,
                None => p.link.t_init,
            };
            let beta = row.or("beta", p.ion.beta)?;
            vec![init_fidelity(&r, beta, t).into(), t.into()]
        }
        Operation::Emission => {
            let p = at_purcell(p, row)?;
            let eta_c = row.or("eta_c", p.link.eta_c)?;
            vec![emission_probability(&p.rates()?, eta_c).into()]
        }
        Operation::Exchange => {
            let c = row.num("cooperativity")?;
            let ratio = row.num("gamma_star_over_gamma")?;
            let kappa = p.cavity.kappa;
            let gamma = p.ion.gamma();
            let inputs = ExchangeGateInputs {
                cooperativity: c,
                kappa,
                gamma,
                gamma_star: ratio * gamma,
                delta_w: row.or("delta_w_over_kappa", 0.0)? * kappa,
                delta_eg: row.or("delta_eg_over_kappa", f64::INFINITY)? * kappa,
            };
            let opt = exchange_gate_optimum(&inputs)?;
            match row.opt("delta_over_kappa")? {
                None => vec![
                    opt.fidelity.into(),
                    (opt.delta / kappa).into(),
                    opt.gate_time.into(),
                    opt.cooperativity_star.into(),
                    opt.flags.any().into(),
                ],
                Some(d) => {
                    let g = exchange_gate_analytic(&inputs, d * kappa, DephasingForm::LinearSlope)?;
                    vec![
                        g.fidelity.into(),
                        d.into(),
                        g.gate_time.into(),
                        opt.cooperativity_star.into(),
                        g.flags.any().into(),
                    ]
                }
            }
        }
        Operation::Dipole => {
            let dnu = row.num("delta_nu_hz")?;
            if !(dnu > 0.0) {
                bail!("delta_nu_hz must be positive, got {dnu}");
            }
            let ratio = row.or("shift_error_ratio", p.dipole.shift_error_ratio)?;
            let mut ion = p.ion;
            ion.gamma_nr += row.or("off_resonant_purcell", 0.0)? * ion.gamma_r;
            let g = dipole_gate_fidelity(&ion, dnu, ratio * dnu)?;
            vec![g.fidelity.into(), g.gate_time.into()]
        }
        Operation::DipoleShift => {
            let d = &p.dipole;
            let mut pair = DipolePairParams::broadside(
                row.or("delta_mu", d.delta_mu)?,
                row.num("separation_nm")? * 1e-9,
                row.or("epsilon", d.epsilon)?,
            );
            pair.magnetic_moment = row.opt("magnetic_moment")?.or(d.magnetic_moment);
            let magnetic = match pair.magnetic_moment {
                Some(_) => Cell::Num(magnetic_dipole_shift(&pair)?),
                None => Cell::Empty,
            };
            vec![electric_dipole_shift(&pair)?.abs().into(), magnetic]
        }
        Operation::DetunedCavity => {
            let e = detuned_cavity_effects(row.num("delta_over_kappa")?, 1.0, row.num("purcell")?)?;
            vec![e.line_enhancement_ratio.into(), e.off_resonant_purcell.into()]
        }
        Operation::Readout => {
            let p = at_purcell(p, row)?;
            let mut cfg = p.readout;
            cfg.pulses = row.count("pulses")?;
            cfg.period = row.num("period_s")?;
            cfg.xi = row.or("xi", cfg.xi)?;
            cfg.p_eta_d = row.or("p_eta_d", cfg.p_eta_d)?;
            let mode = match row.raw("mode").unwrap_or("pulse-train") {
                "pulse-train" => ReadoutMode::PulseTrain,
                "fixed-window" => ReadoutMode::FixedWindow,
                m => bail!("mode: unknown `{m}`, expected pulse-train or fixed-window"),
            };
            let r = readout_fidelity(&cfg, p.rates()?.gamma_prime, mode)?;
            vec![r.fidelity.into(), r.duration.into(), r.miss_probability.into()]
        }
        Operation::Chain => chain_row(p, row)?,
    })
}

fn chain_row(p: &Preset, row: &Row) -> Result<Vec<Cell>> {
    let p = at_purcell(p, row)?;
    let r = p.rates()?;
    let links = row.count("links")?;
    let p_gate = row.or("p_gate", 1.0)?;
    let scheme = match row.raw("scheme").unwrap_or("exchange") {
        "exchange" => SchemeKind::ExchangeDeterministic,
        "exchange-postselected" => SchemeKind::ExchangePostselected { p_gate },
        "dipole" => SchemeKind::DipoleDipole,
        "er-eu" => SchemeKind::ErEuHybrid {
            f_gate: row.opt("f_gate")?.ok_or_else(|| anyhow!("f_gate is required for er-eu"))?,
            p_gate,
        },
        s => bail!("scheme: unknown `{s}`"),
    };
    let gate = match (row.opt("f_gate")?, scheme) {
        (Some(f), _) => f,
        (None, SchemeKind::DipoleDipole) => {
            let d = &p.dipole;
            dipole_gate_fidelity(&p.ion, d.reference_shift_hz, d.shift_error_ratio * d.reference_shift_hz)?.fidelity
        }
        (None, _) => {
            exchange_gate_optimum(&ExchangeGateInputs {
                cooperativity: r.cooperativity,
                kappa: p.cavity.kappa,
                gamma: r.gamma,
                gamma_star: p.ion.gamma_star,
                delta_w: p.link.delta_w,
                delta_eg: p.ion.delta_eg,
            })?
            .fidelity
        }
    };
    let scheduling = match row.raw("scheduling").unwrap_or("parallel") {
        "parallel" => Scheduling::Parallel,
        "sequential" => Scheduling::Sequential,
        s => bail!("scheduling: unknown `{s}`"),
    };
    let fidelities = ComponentFidelities {
        init: init_fidelity(&r, p.ion.beta, p.link.t_init),
        entangle: entangle_fidelity(&r, p.link.delta_w).fidelity,
        gate,
        readout: readout_fidelity(&p.readout, r.gamma_prime, ReadoutMode::PulseTrain)?.fidelity,
    };
    let spec = ChainSpec {
        links,
        link: p.link,
        rates: r,
        scheme,
        fidelities,
        scheduling,
    };
    let cfg = spec.at_distance(row.num("total_km")?);
    let res = evaluate_chain(&cfg)?;
    let p_en = entangle_efficiency(&r, &cfg.link).p_en;
    Ok(vec![
        res.fidelity.into(),
        res.expected_time.into(),
        res.rate.into(),
        p_en.into(),
    ])
}

pub fn run(ctx: &Context, args: &EvalArgs) -> Result<Outcome> {
    let op = args.op;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(&args.input)
        .with_context(|| format!("opening {}", args.input.display()))?;
    let headers = reader.headers()?.clone();
    let name = match &args.name {
        Some(n) => n.trim_end_matches(".csv").to_owned(),
        None => format!("eval_{}", op.name().replace('-', "_")),
    };
    let mut out = Outcome::default();
    if headers.is_empty() {
        out.tables.push(Table::new(&name, &[]));
        return Ok(out);
    }
    let cols: HashMap<String, usize> = headers.iter().enumerate().map(|(i, h)| (h.to_owned(), i)).collect();
    let missing: Vec<&str> = op.required().iter().copied().filter(|c| !cols.contains_key(*c)).collect();
    if !missing.is_empty() {
        bail!("{}: missing required column(s) {}", args.input.display(), missing.join(", "));
    }

    let mut columns: Vec<String> = headers.iter().map(str::to_owned).collect();
    for c in op.outputs().iter().chain(&["status"]) {
        columns.push(if cols.contains_key(*c) { format!("result_{c}") } else { (*c).to_owned() });
    }
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new(&name, &columns);
    table.meta("operation", op.name());
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut cells: Vec<Cell> = (0..headers.len())
            .map(|i| record.get(i).map_or(Cell::Empty, |s| Cell::Text(s.to_owned())))
            .collect();
        let result = if record.len() != headers.len() {
            Err(anyhow!("expected {} fields, found {}", headers.len(), record.len()))
        } else {
            let row = Row {
                cols: &cols,
                fields: &record,
            };
            evaluate(op, &ctx.preset, &row)
        };
        match result {
            Ok(values) => {
                cells.extend(values);
                cells.push("ok".into());
            }
            Err(e) => {
                let msg = format!("{e:#}");
                out.warnings.push(format!("{}:{line}: {msg}", args.input.display()));
                cells.extend(op.outputs().iter().map(|_| Cell::Empty));
                cells.push(Cell::Text(format!("error: {msg}")));
            }
        }
        table.push(cells);
    }
    out.summary.insert("rows".into(), table.rows.len().into());
    out.summary.insert("flagged".into(), out.warnings.len().into());
    out.tables.push(table);
    Ok(out)
}
