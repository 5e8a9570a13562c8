//! Command dispatch.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use bachelier_core::analytic::{
    forward_futures_spread, forward_price, forward_value_at, futures_price, price_closed, HullWhiteParams, PriceResult,
};
use bachelier_core::curve::{
    bhjm_simulate, bonds_from_forward_rates, bonds_from_loan_rates, forward_rates_from_bonds, hjm_simulate_forward,
    hw_curve, loan_rates_from_bonds, uniform_grid, BhjmSpec, BondKind, BondSurface, LoanVol, RateKind, RateSurface,
};
use bachelier_core::mc::{price_ecc_dividend, price_ecc_driftless, price_ecc_riskneutral};
use bachelier_core::model::{CoefficientFn, MarketModel, Payoff};
use bachelier_core::pde::{price_bachelier_pde, price_dividend_pde, DriftMode, GridSpec, DEFAULT_NT, DEFAULT_NX};
use bachelier_core::simulate::{simulate_asset, Measure, SimConfig};
use bachelier_core::validate::{format_details, format_table, run as run_validation, select, ValidateOptions};
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{emit, emit_json, num, num_map};
use crate::CliError;

const STANDARD_MODEL: &str = include_str!("../data/standard.json");

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Price(a) => price(a),
        Command::Curve(c) => curve(c),
        Command::Forward(a) => forward(a),
        Command::Futures(a) => futures(a),
        Command::Simulate(a) => simulate(a),
        Command::Validate(a) => validate(a),
    }
}

/// `BACHELIER_SEED` when set, otherwise the command-line seed.
fn seed(arg: u64) -> Result<u64, CliError> {
    match std::env::var("BACHELIER_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("BACHELIER_SEED must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(arg),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

/// Parses a model file. A previous `price` report is accepted too, in which
/// case its echoed model is used.
fn load_model(path: Option<&Path>) -> Result<MarketModel, CliError> {
    let text = match path {
        Some(p) => read(p)?,
        None => STANDARD_MODEL.to_string(),
    };
    let mut value: Value = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("model file: {e}")))?;
    if let Some(model) = value.get_mut("inputs").and_then(|i| i.get_mut("model")) {
        value = model.take();
    }
    serde_json::from_value(value).map_err(|e| CliError::Input(format!("model file: {e}")))
}

fn load_payoff(a: &PriceArgs) -> Result<Payoff, CliError> {
    if let Some(p) = &a.payoff_file {
        return serde_json::from_str(&read(p)?).map_err(|e| CliError::Input(format!("payoff file: {e}")));
    }
    Ok(match a.payoff {
        PayoffArg::Call => Payoff::call(a.strike),
        PayoffArg::Put => Payoff::put(a.strike),
        PayoffArg::Forward => Payoff::forward(a.strike),
    })
}

fn drift_name(d: DriftArg) -> &'static str {
    match d {
        DriftArg::PaperEq7 => "paper-eq7",
        DriftArg::RiskNeutral => "risk-neutral",
    }
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Closed => "closed",
        MethodArg::Pde => "pde",
        MethodArg::Mc => "mc",
    }
}

fn price(a: PriceArgs) -> Result<(), CliError> {
    let model = load_model(a.model.as_deref())?;
    let payoff = load_payoff(&a)?;
    let mut inputs = json!({
        "model": model,
        "payoff": payoff,
        "maturity": a.maturity,
        "dividend": a.dividend,
    });
    let uses_pde_knobs = a.nx.is_some() || a.nt.is_some() || a.theta.is_some();
    let uses_mc_knobs = a.antithetic;
    let (result, drift): (PriceResult, &str) = match a.method {
        MethodArg::Closed => {
            if a.dividend || uses_pde_knobs || uses_mc_knobs {
                return Err(CliError::Input(
                    "--dividend, grid and Monte Carlo options do not apply to --method closed".into(),
                ));
            }
            (price_closed(&model, &payoff, a.maturity)?, "risk-neutral")
        }
        MethodArg::Pde => {
            if uses_mc_knobs {
                return Err(CliError::Input("--antithetic applies to --method mc only".into()));
            }
            let grid = if uses_pde_knobs {
                let mut g = GridSpec::around(model.a0, model.vol.value(model.a0, 0.0), a.maturity)?
                    .with_resolution(a.nx.unwrap_or(DEFAULT_NX), a.nt.unwrap_or(DEFAULT_NT))?;
                if let Some(theta) = a.theta {
                    g = g.with_theta(theta)?;
                }
                Some(g)
            } else {
                None
            };
            if a.dividend {
                (
                    price_dividend_pde(&model, &payoff, a.maturity, grid.as_ref())?,
                    "dividend",
                )
            } else {
                let mode = match a.drift_mode {
                    DriftArg::PaperEq7 => DriftMode::PaperEq7,
                    DriftArg::RiskNeutral => DriftMode::RiskNeutral,
                };
                (
                    price_bachelier_pde(&model, &payoff, a.maturity, grid.as_ref(), mode)?,
                    drift_name(a.drift_mode),
                )
            }
        }
        MethodArg::Mc => {
            if uses_pde_knobs {
                return Err(CliError::Input(
                    "--nx, --nt and --theta apply to --method pde only".into(),
                ));
            }
            let seed = seed(a.mc.seed)?;
            let cfg = SimConfig::new(seed, a.mc.paths, a.mc.steps, 0.0, a.maturity)?.with_antithetic(a.antithetic)?;
            inputs["seed"] = json!(seed);
            inputs["paths"] = json!(a.mc.paths);
            inputs["steps"] = json!(a.mc.steps);
            inputs["antithetic"] = json!(a.antithetic);
            let (est, drift) = if a.dividend {
                (price_ecc_dividend(&model, &payoff, a.maturity, &cfg)?, "dividend")
            } else {
                let est = match a.drift_mode {
                    DriftArg::PaperEq7 => price_ecc_driftless(&model, &payoff, a.maturity, &cfg)?,
                    DriftArg::RiskNeutral => price_ecc_riskneutral(&model, &payoff, a.maturity, &cfg)?,
                };
                (est, drift_name(a.drift_mode))
            };
            (est.into_price(), drift)
        }
    };
    match a.format {
        FormatArg::Json => {
            let report = json!({
                "command": "price",
                "method": method_name(a.method),
                "drift_mode": drift,
                "value": num(result.value),
                "stderr": result.stderr.map(num),
                "diagnostics": num_map(&result.diagnostics),
                "inputs": inputs,
            });
            emit_json(&a.out, &report)
        }
        FormatArg::Csv => {
            let stderr = result.stderr.map(|s| num(s).to_string()).unwrap_or_default();
            let text = format!(
                "method,drift_mode,value,stderr\n{},{drift},{},{stderr}\n",
                method_name(a.method),
                num(result.value)
            );
            emit(&a.out, text.as_bytes())
        }
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn curve(c: CurveCommand) -> Result<(), CliError> {
    match c {
        CurveCommand::Hw(a) => {
            let p = HullWhiteParams::constant(a.a, a.b, a.v, a.r0)?;
            let maturities = uniform_grid(0.0, a.grid.horizon, a.grid.n)?;
            let surface = hw_curve(&p, &a.times, &maturities, a.short_rates.as_deref())?;
            emit(&a.out, &csv_bytes(|w| surface.write_csv(w))?)
        }
        CurveCommand::Bhjm(a) => {
            let (maturities, curve, cfg) = dynamic_setup(&a.curve)?;
            let spec = BhjmSpec::new(LoanVol::Proportional(a.sigma), maturities, curve, a.theta)?;
            let measure = match a.measure {
                MeasureArg::Physical => Measure::Physical,
                MeasureArg::RiskNeutral => Measure::RiskNeutral,
            };
            let out = bhjm_simulate(&spec, &cfg, measure)?;
            let path = &out.paths[a.curve.path];
            let bytes = match a.emit {
                BhjmOutput::Loan => csv_bytes(|w| path.loan_rates.write_csv(w))?,
                BhjmOutput::Bond => csv_bytes(|w| path.bonds.write_csv(w))?,
            };
            emit(&a.out, &bytes)
        }
        CurveCommand::Hjm(a) => {
            let (maturities, curve, cfg) = dynamic_setup(&a.curve)?;
            let surfaces = hjm_simulate_forward(&CoefficientFn::constant(a.sigma), &maturities, &curve, &cfg)?;
            emit(&a.out, &csv_bytes(|w| surfaces[a.curve.path].write_csv(w))?)
        }
        CurveCommand::Bootstrap(a) => bootstrap(a),
    }
}

/// Maturity grid, initial curve and simulation config for one emitted path.
fn dynamic_setup(a: &DynamicCurveArgs) -> Result<(Vec<f64>, Vec<f64>, SimConfig), CliError> {
    let maturities = uniform_grid(0.0, a.horizon, a.n)?;
    let curve = maturities.iter().map(|t| a.level + a.slope * t).collect();
    let until = a.until.unwrap_or(0.5 * a.horizon);
    let h = maturities[1] - maturities[0];
    let steps = (until / h).round() as usize;
    if steps == 0 || (steps as f64 * h - until).abs() > 1e-9 * a.horizon || until > a.horizon {
        return Err(CliError::Input(format!(
            "--until {until} must be a positive node of the maturity grid (step {h})"
        )));
    }
    let cfg = SimConfig::new(seed(a.seed)?, a.path + 1, steps, 0.0, maturities[steps])?;
    Ok((maturities, curve, cfg))
}

/// A surface read back from the `t,T,value` CSV.
struct SurfaceCsv {
    kind: String,
    times: Vec<f64>,
    maturities: Vec<f64>,
    values: HashMap<(u64, u64), f64>,
}

fn parse_surface(text: &str) -> Result<SurfaceCsv, CliError> {
    let bad = |line: usize, msg: &str| CliError::Input(format!("surface CSV line {line}: {msg}"));
    let mut kind = None;
    let mut times: Vec<f64> = Vec::new();
    let mut maturities: Vec<f64> = Vec::new();
    let mut values = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(k) = rest.trim().strip_prefix("kind:") {
                kind = Some(k.trim().to_string());
            }
            continue;
        }
        if line == "t,T,value" {
            continue;
        }
        let fields = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(i + 1, &e.to_string()))?;
        let [t, big_t, v] = fields[..] else {
            return Err(bad(i + 1, "expected three fields t,T,value"));
        };
        if times.last() != Some(&t) {
            if times.last().is_some_and(|&last| t < last) {
                return Err(bad(i + 1, "observation times must increase"));
            }
            times.push(t);
        }
        if !maturities.contains(&big_t) {
            maturities.push(big_t);
        }
        values.insert((t.to_bits(), big_t.to_bits()), v);
    }
    maturities.sort_by(f64::total_cmp);
    let kind = kind.ok_or_else(|| CliError::Input("surface CSV lacks a '# kind:' line".into()))?;
    Ok(SurfaceCsv {
        kind,
        times,
        maturities,
        values,
    })
}

impl SurfaceCsv {
    fn lookup(&self, t: f64, big_t: f64) -> bachelier_core::Result<f64> {
        self.values
            .get(&(t.to_bits(), big_t.to_bits()))
            .copied()
            .ok_or_else(|| bachelier_core::Error::Config(format!("surface CSV has no value at t = {t}, T = {big_t}")))
    }

    fn bonds(&self, kind: BondKind) -> Result<BondSurface, CliError> {
        Ok(BondSurface::from_fn(
            &self.times,
            &self.maturities,
            kind,
            |t, big_t| self.lookup(t, big_t),
        )?)
    }

    fn rates(&self, kind: RateKind) -> Result<RateSurface, CliError> {
        Ok(RateSurface::from_fn(
            &self.times,
            &self.maturities,
            kind,
            |t, big_t| self.lookup(t, big_t),
        )?)
    }
}

fn bootstrap(a: BootstrapArgs) -> Result<(), CliError> {
    let s = parse_surface(&read(&a.input)?)?;
    let bytes = match (s.kind.as_str(), a.to) {
        ("bond", BootstrapTarget::Loan) => {
            let r = loan_rates_from_bonds(&s.bonds(BondKind::Linear)?)?;
            csv_bytes(|w| r.write_csv(w))?
        }
        ("bond", BootstrapTarget::Forward) => {
            let r = forward_rates_from_bonds(&s.bonds(BondKind::Linear)?)?;
            csv_bytes(|w| r.write_csv(w))?
        }
        ("bond-exponential", BootstrapTarget::Forward) => {
            let r = forward_rates_from_bonds(&s.bonds(BondKind::Exponential)?)?;
            csv_bytes(|w| r.write_csv(w))?
        }
        ("loan-rate", BootstrapTarget::Bond) => {
            let b = bonds_from_loan_rates(&s.rates(RateKind::Loan)?)?;
            csv_bytes(|w| b.write_csv(w))?
        }
        ("forward-rate", BootstrapTarget::Bond) => {
            let b = bonds_from_forward_rates(&s.rates(RateKind::Forward)?)?;
            csv_bytes(|w| b.write_csv(w))?
        }
        (kind, to) => {
            return Err(CliError::Input(format!("cannot bootstrap a {kind} surface to {to:?}")));
        }
    };
    emit(&a.out, &bytes)
}

fn forward(a: ForwardArgs) -> Result<(), CliError> {
    let f = forward_price(a.spot, a.value);
    let mut report = json!({ "command": "forward", "forward": num(f) });
    match (a.bond, a.rate_integral) {
        (Some(bond), Some(integral)) => {
            let v = forward_value_at(a.at, a.spot_at.unwrap_or(a.spot), f, bond, integral)?;
            report["value"] = num(v.value);
            report["decomposition"] = num(v.decomposition);
            report["dropped_factor_form"] = num(v.dropped_factor_form);
        }
        (None, None) => {}
        _ => return Err(CliError::Input("--bond and --rate-integral go together".into())),
    }
    emit_json(&a.out, &report)
}

fn futures(a: FuturesArgs) -> Result<(), CliError> {
    let phi = futures_price(a.spot, a.rate_integral);
    let mut report = json!({ "command": "futures", "futures": num(phi) });
    if let Some(expected) = a.expected_terminal {
        let s = forward_futures_spread(a.rate_integral, expected, phi);
        report["spread"] = num(s.spread);
        report["state"] = json!(s.state);
    }
    emit_json(&a.out, &report)
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let model = load_model(a.model.as_deref())?;
    let cfg = SimConfig::new(seed(a.seed)?, a.paths, a.steps, 0.0, a.maturity)?;
    let measure = match a.measure {
        MeasureArg::Physical => Measure::Physical,
        MeasureArg::RiskNeutral => Measure::RiskNeutral,
    };
    let paths = simulate_asset(&model, &cfg, measure)?;
    emit(&a.out, &csv_bytes(|w| paths.write_csv(w))?)
}

fn validate(a: ValidateArgs) -> Result<(), CliError> {
    if select(a.filter.as_deref()).is_empty() {
        return Err(CliError::Input(format!(
            "no criterion matches {:?}",
            a.filter.unwrap_or_default()
        )));
    }
    let opts = ValidateOptions {
        seed: seed(a.seed)?,
        filter: a.filter,
        inject_bad_tolerance: a.inject_bad_tolerance,
    };
    let reports = run_validation(&opts);
    let text = match a.format {
        ReportFormat::Table if a.details => format!("{}\n{}", format_table(&reports), format_details(&reports)),
        ReportFormat::Table => format_table(&reports),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&reports).map_err(|e| CliError::Numerical(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    print!("{text}");
    if reports.iter().all(|r| r.passed()) {
        Ok(())
    } else {
        Err(CliError::Validation)
    }
}
