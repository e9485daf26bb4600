use std::path::Path;
use std::sync::Arc;

use moving_barrier::barrier::{self, ConstantParityInputs};
use moving_barrier::oracles::{heat_kernel_price, mc_price, pde_price, PdeGrid};
use moving_barrier::{
    vanilla_call, vanilla_put, BarrierContract, BarrierStyle, ContractSpec, CurveSet, OptionSide,
    PricingError, TermStructure,
};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::report::{Check, Metric, RunReport};
use crate::{OracleArgs, PointArgs};

#[derive(Debug)]
pub enum Failure {
    /// Unreadable, malformed or out-of-scope inputs.
    Input(String),
    /// A numerical routine failed outright.
    Numeric(String),
}

impl From<PricingError> for Failure {
    fn from(e: PricingError) -> Self {
        match e {
            PricingError::Quadrature { .. }
            | PricingError::GridTooCoarse { .. }
            | PricingError::Invariant(_) => Failure::Numeric(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Outcome = Result<RunReport, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_curves(path: &Path, text: &str) -> Result<Arc<CurveSet>, Failure> {
    CurveSet::from_json(text)
        .map(Arc::new)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

struct Point {
    contract: BarrierContract,
    spot: f64,
    t: f64,
    digest: String,
}

fn load_point(args: &PointArgs) -> Result<Point, Failure> {
    let curves_text = read(&args.curves)?;
    let contract_text = read(&args.contract)?;
    let curves = load_curves(&args.curves, &curves_text)?;
    let spec: ContractSpec = serde_json::from_str(&contract_text)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.contract.display())))?;
    let contract = spec
        .resolve(curves)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.contract.display())))?;
    if !(args.spot.is_finite() && args.spot > 0.0) {
        return Err(Failure::Input(format!(
            "--spot must be positive, got {}",
            args.spot
        )));
    }
    if !(args.time.is_finite() && args.time >= 0.0 && args.time <= contract.expiry) {
        return Err(Failure::Input(format!(
            "--time must lie in [0, {}], got {}",
            contract.expiry, args.time
        )));
    }
    let mut h = Sha256::new();
    h.update(b"curves\0");
    h.update(curves_text.as_bytes());
    h.update(b"\0contract\0");
    h.update(contract_text.as_bytes());
    h.update(format!("\0spot\0{:e}\0time\0{:e}", args.spot, args.time).as_bytes());
    Ok(Point {
        contract,
        spot: args.spot,
        t: args.time,
        digest: format!("{:x}", h.finalize()),
    })
}

pub fn price(args: &PointArgs, argv: &[String]) -> Outcome {
    let p = load_point(args)?;
    let breakdown = barrier::price(p.spot, p.t, &p.contract)?;
    let mut report = RunReport::new(argv.to_vec(), p.digest);
    report.output = Some(serde_json::to_value(breakdown).expect("breakdown serializes"));
    Ok(report)
}

fn vanilla(p: &Point, side: OptionSide) -> Result<f64, Failure> {
    let c = &p.contract;
    let q = match side {
        OptionSide::Call => vanilla_call(p.spot, p.t, c.strike, c.expiry, c.curves()),
        OptionSide::Put => vanilla_put(p.spot, p.t, c.strike, c.expiry, c.curves()),
    }?;
    Ok(q.price)
}

/// `(r, q, sigma)` when every curve is a single level.
fn constant_levels(curves: &CurveSet) -> Option<(f64, f64, f64)> {
    let single = |ts: &TermStructure| {
        let v = ts.values();
        v.windows(2).all(|w| w[0] == w[1]).then(|| v[0])
    };
    Some((
        single(&curves.r)?,
        single(&curves.q)?,
        single(&curves.sigma)?,
    ))
}

pub fn parity(args: &PointArgs, tol: f64, argv: &[String]) -> Outcome {
    let p = load_point(args)?;
    let c = &p.contract;
    let mut report = RunReport::new(argv.to_vec(), p.digest.clone());

    match c.style {
        BarrierStyle::DownAndOut => {
            let out = c.with_kind(OptionSide::Call, BarrierStyle::DownAndOut);
            let call = barrier::down_and_out_call(p.spot, p.t, &out)?.price;
            let put = barrier::down_and_out_put(p.spot, p.t, &out)?.price;
            let fwd = barrier::forward_barrier_value(p.spot, p.t, &out)?.price;
            report.push(Check::info("down_and_out_call", call));
            report.push(Check::info("down_and_out_put", put));
            report.push(Check::info("forward_barrier_value", fwd));
            report.push(Check::residual(
                "put_call_parity_residual",
                put + fwd - call,
                tol,
            ));
            constant_case(&p, tol, &mut report)?;
        }
        BarrierStyle::DownAndIn => {
            let side = c.side;
            let inn = barrier::price(p.spot, p.t, c)?.price;
            let out =
                barrier::price(p.spot, p.t, &c.with_kind(side, BarrierStyle::DownAndOut))?.price;
            let v = vanilla(&p, side)?;
            report.push(Check::info("down_and_in", inn));
            report.push(Check::info("down_and_out", out));
            report.push(Check::info("vanilla", v));
            report.push(Check::residual(
                "out_in_parity_residual",
                out + inn - v,
                tol,
            ));
        }
    }
    Ok(report)
}

/// The constant-parameter identity, written in scalar parameters.
fn constant_case(p: &Point, tol: f64, report: &mut RunReport) -> Result<(), Failure> {
    let c = &p.contract;
    let Some((r, q, sigma)) = constant_levels(c.curves()) else {
        return Ok(());
    };
    if p.t >= c.expiry {
        report
            .notices
            .push("constant-parameter identity skipped at expiry".into());
        return Ok(());
    }
    if p.spot <= c.barrier.level(p.t)? {
        report
            .notices
            .push("constant-parameter identity skipped: spot is at or below the barrier".into());
        return Ok(());
    }
    let inputs = ConstantParityInputs {
        spot: p.spot,
        t: p.t,
        barrier_terminal: c.barrier.terminal_level(),
        barrier_rate: r - q + c.barrier.c() * sigma * sigma,
        strike: c.strike,
        expiry: c.expiry,
        r,
        q,
        sigma,
    };
    let gap = inputs.gap()?;
    report.push(Check::residual(
        "constant_case_parity_gap",
        gap.corrected,
        tol,
    ));
    report.push(Check::info(
        "constant_case_parity_gap_with_n_d1_prime",
        gap.as_printed,
    ));
    Ok(())
}

pub fn validate(args: &PointArgs, o: &OracleArgs, argv: &[String]) -> Outcome {
    let p = load_point(args)?;
    let c = &p.contract;
    if p.t >= c.expiry {
        return Err(Failure::Input("validate needs --time before expiry".into()));
    }
    if o.pde_grid < 8 {
        return Err(Failure::Input(format!(
            "--pde-grid must be at least 8, got {}",
            o.pde_grid
        )));
    }
    let mut report = RunReport::new(argv.to_vec(), p.digest.clone());

    let closed_form = if c.in_closed_form_regime() {
        let v = barrier::price(p.spot, p.t, c)?.price;
        report.push(Check::info("closed_form", v));
        Some(v)
    } else {
        report.notices.push(format!(
            "closed form skipped: strike {} is below the terminal barrier {}; \
             oracles are compared with the heat-kernel price",
            c.strike,
            c.barrier.terminal_level()
        ));
        None
    };

    let hk = match heat_kernel_price(p.spot, p.t, c) {
        Ok(v) => Some(v),
        Err(e) => {
            report.notices.push(format!("heat kernel: {e}"));
            report.push(Check::failed("heat_kernel"));
            None
        }
    };
    let reference = closed_form.or(hk);
    if let (Some(cf), Some(hk)) = (closed_form, hk) {
        report.push(Check::against(
            "heat_kernel",
            hk,
            cf,
            Metric::Absolute,
            o.hk_tol,
        ));
    }

    let grid = PdeGrid::for_point(
        p.spot.max(c.barrier.level(p.t)?),
        p.t,
        c,
        o.pde_grid,
        o.pde_grid,
    )?;
    let coarse = PdeGrid::new(grid.x_max, grid.n_space / 2, grid.n_time / 2)?;
    let fine = pde_price(p.spot, p.t, c, &grid)?;
    let half = pde_price(p.spot, p.t, c, &coarse)?;
    if let Some(reference) = reference {
        report.push(Check::against(
            "pde",
            fine,
            reference,
            Metric::Relative,
            o.pde_tol,
        ));
    }
    let richardson = (fine - half).abs() / 3.0;
    let scale = fine.abs().max(f64::MIN_POSITIVE);
    report.push(Check::residual(
        "pde_richardson_estimate",
        richardson / scale,
        o.pde_tol,
    ));

    let mc = mc_price(p.spot, p.t, c, o.mc_paths, o.mc_steps, o.seed)?;
    if let Some(reference) = reference {
        report.push(Check::std_errors(
            "monte_carlo",
            mc.price,
            reference,
            mc.std_error,
            o.mc_sigmas,
        ));
    }
    report.push(Check::info("monte_carlo_std_error", mc.std_error));
    report.push(Check::info(
        "monte_carlo_knockout_fraction",
        mc.knockout_fraction,
    ));
    Ok(report)
}

pub fn curves_show(path: &Path, argv: &[String]) -> Outcome {
    let text = read(path)?;
    let curves = load_curves(path, &text)?;
    let horizon = [&curves.r, &curves.q, &curves.sigma]
        .iter()
        .map(|ts| ts.last_breakpoint())
        .fold(0.0, f64::max);
    let w = curves.window(0.0, horizon)?;
    let digest = format!("{:x}", Sha256::digest(text.as_bytes()));
    let mut report = RunReport::new(argv.to_vec(), digest);
    let piece =
        |ts: &TermStructure| json!({"breakpoints": ts.breakpoints(), "values": ts.values()});
    report.output = Some(json!({
        "r": piece(&curves.r),
        "q": piece(&curves.q),
        "sigma": piece(&curves.sigma),
        "horizon": horizon,
        "rbar": w.rbar,
        "qbar": w.qbar,
        "sigma2bar": w.sigma2bar,
    }));
    Ok(report)
}
