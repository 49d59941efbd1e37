use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use redundarith::accumulator::{AccumulatorState, OverflowPolicy};
use redundarith::codes::{digit_len, to_scaled, CodeJson, MultiRowCode};
use redundarith::compressor::DelayModel;
use redundarith::divider::{common_scale, divide, Comparator};
use redundarith::expr::{eval_expression, parse_value_lines};
use redundarith::fuzz::{fuzz_verify, FuzzOp};
use redundarith::map_unit::{
    map_eval_traced, map_step, map_timing, MapConfig, MapMode, MapState, MapTuple,
};
use redundarith::multiplier::{
    fused_mac, mul_delay, multiply, twos_complement_code, Product, Signedness,
};
use redundarith::reducer::{add_two_row, reduce_to_two_traced, stage_plan};
use redundarith::report::{report_tables, Report, REPORT_IDS};

/// Multi-row code arithmetic: reduction, multiplication, division, the
/// matrix processor, and reproduction reports.
#[derive(Parser)]
#[command(name = "redundarith", version)]
struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Show intermediate matrices and steps.
    #[arg(long, global = true)]
    trace: bool,
    /// Seed for randomized commands.
    #[arg(long, global = true, env = "REDUNDARITH_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reduce a multi-row code to two rows.
    Reduce {
        /// Code file (text `mrc` or JSON); `-` reads stdin.
        input: PathBuf,
    },
    /// Add two operands through a 4 -> 2 reduction.
    Add {
        /// A number, or `@file` holding a code of at most two rows.
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
    },
    /// Multiply two numbers through the partial-product matrix.
    Mul {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[command(flatten)]
        format: OperandFormat,
        /// Report the multiply delay.
        #[arg(long)]
        timing: bool,
    },
    /// Multiply-accumulate a stream of `a b` pairs.
    Mac {
        #[arg(long)]
        stream: PathBuf,
        #[command(flatten)]
        format: OperandFormat,
    },
    /// Divide by digit selection on a scale of divisor multiples.
    Div {
        #[arg(long)]
        x: String,
        #[arg(long)]
        z: String,
        /// Quotient bits per iteration.
        #[arg(long, default_value_t = 4)]
        k: u32,
        #[arg(long, default_value_t = 4)]
        iters: usize,
    },
    /// Accumulate a stream of values with the carry-save accumulator.
    Accumulate {
        #[arg(long)]
        stream: PathBuf,
        /// Register width; defaults to the widest operand.
        #[arg(long)]
        width: Option<usize>,
        /// Combine the two top carries modulo two (lossy).
        #[arg(long)]
        xor: bool,
    },
    /// Evaluate operand tuples on the matrix processor.
    Map {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        stream: PathBuf,
        #[arg(long)]
        timing: bool,
    },
    /// Reproduce a reference table: 2.1, 3.1, 3.2, timing, gates or all.
    Report {
        #[arg(long, default_value = "all")]
        table: String,
    },
    /// Randomized checks against big-integer arithmetic.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// Comma-separated ops: reduce, add, mul, mac, div, map.
        #[arg(long, default_value = "reduce,add,mul,mac,div,map")]
        scope: String,
    },
    /// Evaluate an expression such as `2+3` or `div(5/8, 7/8, 4, 4)`.
    Eval { expr: String },
}

#[derive(Args, Clone, Copy)]
struct OperandFormat {
    /// Read operands as two's complement.
    #[arg(long)]
    signed: bool,
    /// Operand width in bits; defaults to the smallest that fits.
    #[arg(long)]
    width: Option<usize>,
}

struct Outcome {
    text: String,
    json: Value,
    pass: bool,
}

impl Outcome {
    fn ok(text: String, json: Value) -> Self {
        Self {
            text,
            json,
            pass: true,
        }
    }
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn parse_code(text: &str) -> Result<MultiRowCode> {
    if text.trim_start().starts_with('{') {
        let j: CodeJson = serde_json::from_str(text)?;
        Ok(MultiRowCode::from_json(&j)?)
    } else {
        Ok(text.parse()?)
    }
}

fn number(s: &str) -> Result<BigRational> {
    Ok(eval_expression(s)
        .with_context(|| format!("operand `{s}`"))?
        .value)
}

fn binary_scaled(v: &BigRational) -> Result<(BigInt, i64)> {
    to_scaled(v, 2).ok_or_else(|| anyhow!("{v} is not a finite binary fraction"))
}

// A value as a one-row binary code at exponent `e`.
fn unsigned_code(v: &BigRational, e: i64, width: Option<usize>) -> Result<MultiRowCode> {
    if v.is_negative() {
        bail!("{v} is negative; use --signed");
    }
    let m = (v / redundarith::codes::weight(2, e)).to_integer();
    let m = m.to_biguint().expect("non-negative");
    let w = width.unwrap_or_else(|| digit_len(&m, 2).max(1));
    Ok(MultiRowCode::from_mantissa(&m, 1, w, 2, e)?)
}

fn signed_code(v: &BigRational, e: i64, width: usize) -> Result<MultiRowCode> {
    let m = (v / redundarith::codes::weight(2, e)).to_integer();
    Ok(twos_complement_code(&m, width, e)?)
}

fn signed_width(m: &BigInt) -> usize {
    if m.is_negative() {
        (-(m + 1u32)).bits() as usize + 1
    } else {
        m.bits() as usize + 1
    }
}

// Operand pair on a common exponent.
fn operand_pair(a: &str, b: &str, fmt: OperandFormat) -> Result<(MultiRowCode, MultiRowCode)> {
    let (va, vb) = (number(a)?, number(b)?);
    let ((ma, ea), (mb, eb)) = (binary_scaled(&va)?, binary_scaled(&vb)?);
    let e = ea.min(eb);
    if fmt.signed {
        let shift = |m: &BigInt, x: i64| m << (x - e) as usize;
        let need = signed_width(&shift(&ma, ea)).max(signed_width(&shift(&mb, eb)));
        let w = fmt.width.unwrap_or(need);
        Ok((signed_code(&va, e, w)?, signed_code(&vb, e, w)?))
    } else {
        let ca = unsigned_code(&va, e, None)?;
        let cb = unsigned_code(&vb, e, None)?;
        let w = fmt.width.unwrap_or(ca.width().max(cb.width()));
        Ok((ca.resize_width(w)?, cb.resize_width(w)?))
    }
}

fn code_json(c: &MultiRowCode) -> Value {
    json!({ "code": c.to_json(), "value": c.value().to_string() })
}

fn cmd_reduce(cli: &Cli, input: &Path) -> Result<Outcome> {
    let code = parse_code(&read_input(input)?)?;
    let (out, stages) = reduce_to_two_traced(&code);
    let plan = stage_plan(code.rows().max(2) as u64, code.radix());
    let mut text = String::new();
    if cli.trace {
        for (i, s) in stages.iter().enumerate() {
            text.push_str(&format!("# stage {}\n{s}", i + 1));
        }
    }
    text.push_str(&format!(
        "{out}# value {}\n# rows {:?}, {} stages\n",
        out.value(),
        plan.row_counts,
        plan.stages
    ));
    let mut j = json!({
        "input": code_json(&code),
        "result": code_json(&out),
        "row_counts": plan.row_counts,
        "stages": plan.stages,
    });
    if cli.trace {
        j["trace"] = stages.iter().map(code_json).collect();
    }
    Ok(Outcome::ok(text, j))
}

fn add_operand(s: &str) -> Result<MultiRowCode> {
    if let Some(path) = s.strip_prefix('@') {
        parse_code(&read_input(Path::new(path))?)
    } else {
        let v = number(s)?;
        let (_, e) = binary_scaled(&v)?;
        Ok(unsigned_code(&v, e, None)?.pad_rows(2))
    }
}

fn cmd_add(a: &str, b: &str) -> Result<Outcome> {
    let (mut ca, mut cb) = (add_operand(a)?, add_operand(b)?);
    let e = ca.lsb_exp().min(cb.lsb_exp());
    ca = ca.align_to(e)?;
    cb = cb.align_to(e)?;
    let sum = add_two_row(&ca, &cb)?;
    let text = format!("{sum}# value {}\n", sum.value());
    Ok(Outcome::ok(
        text,
        json!({ "a": code_json(&ca), "b": code_json(&cb), "sum": code_json(&sum) }),
    ))
}

fn signedness(fmt: OperandFormat) -> Signedness {
    if fmt.signed {
        Signedness::TwosComplement
    } else {
        Signedness::Unsigned
    }
}

fn cmd_mul(cli: &Cli, a: &str, b: &str, fmt: OperandFormat, timing: bool) -> Result<Outcome> {
    let (ca, cb) = operand_pair(a, b, fmt)?;
    let p = multiply(&ca, &cb, signedness(fmt))?;
    let n = ca.width() as u64;
    let plan = stage_plan(n.max(2), 2);
    let mut text = String::new();
    if cli.trace {
        text.push_str(&format!("# operands\n{ca}{cb}"));
    }
    text.push_str(&format!(
        "{}# bias {}\n# value {}\n",
        p.code,
        p.bias,
        p.value()
    ));
    let mut j = json!({
        "width": n,
        "product": code_json(&p.code),
        "bias": p.bias.to_string(),
        "value": p.value().to_string(),
        "row_counts": plan.row_counts,
    });
    if timing {
        let d = if n >= 2 {
            mul_delay(n, &DelayModel::default())?
        } else {
            1
        };
        text.push_str(&format!(
            "# delay {d} t& ({n}-bit, rows {:?})\n",
            plan.row_counts
        ));
        j["delay"] = json!(d);
    }
    Ok(Outcome::ok(text, j))
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect()
}

fn cmd_mac(cli: &Cli, stream: &Path, fmt: OperandFormat) -> Result<Outcome> {
    let text_in = read_input(stream)?;
    let mut pairs = Vec::new();
    for (lno, line) in text_in.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        match split_fields(body).as_slice() {
            [a, b] => pairs.push((a.to_string(), b.to_string())),
            _ => bail!("line {}: expected two operands", lno + 1),
        }
    }
    // One operand width for the whole stream.
    let width = match fmt.width {
        Some(w) => w,
        None => {
            let mut w = 1;
            for (a, b) in &pairs {
                let (ca, _) = operand_pair(a, b, fmt)?;
                w = w.max(ca.width());
            }
            w
        }
    };
    let fmt = OperandFormat {
        width: Some(width),
        ..fmt
    };
    let mut f: Option<Product> = None;
    let mut steps = Vec::new();
    let mut text = String::new();
    for (i, (a, b)) in pairs.iter().enumerate() {
        let (ca, cb) = operand_pair(a, b, fmt)?;
        let prev = f
            .take()
            .unwrap_or_else(|| Product::zero(ca.lsb_exp() + cb.lsb_exp()));
        let out = fused_mac(&prev, &ca, &cb, signedness(fmt))?;
        if cli.trace {
            text.push_str(&format!(
                "# step {}: rows joined before stage {}, {} stages\n{}",
                i + 1,
                out.injection_stage,
                out.product.stages,
                out.product.code
            ));
        }
        steps.push(json!({
            "injection_stage": out.injection_stage,
            "stages": out.product.stages,
            "value": out.product.value().to_string(),
        }));
        f = Some(out.product);
    }
    let total = f.as_ref().map_or_else(BigRational::zero, Product::value);
    text.push_str(&format!("# {} products, total {total}\n", pairs.len()));
    let mut j = json!({ "count": pairs.len(), "width": width, "total": total.to_string() });
    if cli.trace {
        j["steps"] = Value::Array(steps);
    }
    Ok(Outcome::ok(text, j))
}

fn cmd_div(cli: &Cli, x: &str, z: &str, k: u32, iters: usize) -> Result<Outcome> {
    let (vx, vz) = (number(x)?, number(z)?);
    let (mx, mz) = common_scale(&vx, &vz)?;
    let res = divide(&mx, &mz, k, iters, 2, Comparator::Parallel)?;
    let q = res.quotient();
    let mut text = String::new();
    if cli.trace {
        for s in &res.trace {
            text.push_str(&format!(
                "iteration {}: r = {}, digit {}, residual {}, unitary {}\n",
                s.iteration, s.residual_in, s.digit, s.residual_out, s.unitary
            ));
        }
    }
    let hex: Vec<String> = res.digits.iter().map(|d| format!("{d:x}")).collect();
    text.push_str(&format!(
        "digits (radix 2^{k}): {}\nquotient {q}\nresidual {} (scale {})\n",
        hex.join(" "),
        res.residual,
        mz
    ));
    let mut j = json!({
        "k": k,
        "digits": res.digits,
        "quotient": q.to_string(),
        "residual": res.residual.to_string(),
        "x_scaled": mx.to_string(),
        "z_scaled": mz.to_string(),
    });
    if cli.trace {
        j["trace"] = serde_json::to_value(&res.trace)?;
    }
    Ok(Outcome::ok(text, j))
}

fn cmd_accumulate(cli: &Cli, stream: &Path, width: Option<usize>, xor: bool) -> Result<Outcome> {
    let values = parse_value_lines(&read_input(stream)?)?;
    let mut scaled = Vec::new();
    for v in &values {
        scaled.push(binary_scaled(v)?);
    }
    let e = scaled.iter().map(|s| s.1).min().unwrap_or(0);
    let codes: Vec<MultiRowCode> = values
        .iter()
        .map(|v| unsigned_code(v, e, None))
        .collect::<Result<_>>()?;
    let w = width.unwrap_or_else(|| codes.iter().map(|c| c.width()).max().unwrap_or(1));
    let policy = if xor {
        OverflowPolicy::LiteralXor
    } else {
        OverflowPolicy::Exact
    };
    let mut acc = AccumulatorState::new(w, e, policy)?;
    let mut text = String::new();
    for c in &codes {
        acc = acc.step(&c.resize_width(w)?)?;
        if cli.trace {
            let j = acc.to_json();
            text.push_str(&format!(
                "step {}: sum {} carry {} overflow {}\n",
                j.steps, j.sum_row, j.carry_row, j.overflow_count
            ));
        }
    }
    let j = acc.to_json();
    text.push_str(&format!(
        "sum   {}\ncarry {}\noverflow {}\ntotal {}\n",
        j.sum_row, j.carry_row, j.overflow_count, j.total
    ));
    Ok(Outcome::ok(text, serde_json::to_value(&j)?))
}

fn map_config(text: &str) -> Result<MapConfig> {
    let v: Value = serde_json::from_str(text).context("config JSON")?;
    let width = v["width"]
        .as_u64()
        .ok_or_else(|| anyhow!("config needs an integer `width`"))? as usize;
    let mode = match v["mode"].as_str().unwrap_or("one-shot") {
        "one-shot" | "oneshot" => MapMode::OneShot,
        "accumulate" => MapMode::Accumulate,
        other => bail!("unknown mode `{other}`"),
    };
    let signedness = match v["signedness"].as_str().unwrap_or("unsigned") {
        "unsigned" | "direct" => Signedness::Unsigned,
        "twos-complement" | "signed" => Signedness::TwosComplement,
        other => bail!("unknown signedness `{other}`"),
    };
    let mut cfg = MapConfig::new(width, mode, signedness)?;
    if let Some(e) = v.get("lsb_exp") {
        cfg.lsb_exp = e
            .as_i64()
            .ok_or_else(|| anyhow!("`lsb_exp` must be an integer"))?;
    }
    Ok(cfg)
}

fn map_operand(cfg: &MapConfig, name: &str, v: &Value) -> Result<Option<MultiRowCode>> {
    let s = match v {
        Value::Null => return Ok(None),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => bail!("operand {name}: expected a number or a string"),
    };
    if s.trim_start().starts_with("mrc") {
        return Ok(Some(s.parse()?));
    }
    let value = number(&s)?;
    let e = if matches!(name, "a" | "b") {
        0
    } else {
        cfg.lsb_exp
    };
    let code = match cfg.signedness {
        Signedness::Unsigned => unsigned_code(&value, e, Some(cfg.width)),
        Signedness::TwosComplement => signed_code(&value, e, cfg.width),
    }
    .with_context(|| format!("operand {name}"))?;
    Ok(Some(code))
}

fn map_tuple(cfg: &MapConfig, line: &str) -> Result<MapTuple> {
    let v: Value = serde_json::from_str(line)?;
    let obj = v
        .as_object()
        .ok_or_else(|| anyhow!("tuple must be a JSON object"))?;
    for k in obj.keys() {
        if !["a", "b", "c", "d", "e", "g", "h", "l"].contains(&k.as_str()) {
            bail!("unknown operand `{k}`");
        }
    }
    let get = |k: &str| map_operand(cfg, k, obj.get(k).unwrap_or(&Value::Null));
    Ok(MapTuple {
        a: get("a")?,
        b: get("b")?,
        c: get("c")?,
        d: get("d")?,
        e: get("e")?,
        g: get("g")?,
        h: get("h")?,
        l: get("l")?,
    })
}

fn state_json(s: &MapState) -> Value {
    serde_json::to_value(s.to_json()).expect("state serializes")
}

fn cmd_map(cli: &Cli, config: &Path, stream: &Path, timing: bool) -> Result<Outcome> {
    let cfg = map_config(&read_input(config)?)?;
    let mut tuples = Vec::new();
    for (lno, line) in read_input(stream)?.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        tuples.push(map_tuple(&cfg, line).with_context(|| format!("tuple line {}", lno + 1))?);
    }
    let mut text = String::new();
    let mut j = json!({ "width": cfg.width, "grid_width": cfg.grid_width() });
    match cfg.mode {
        MapMode::OneShot => {
            let mut states = Vec::new();
            for (i, t) in tuples.iter().enumerate() {
                let s = map_eval_traced(&cfg, t)?;
                if cli.trace {
                    for (k, m) in s.trace.iter().enumerate() {
                        text.push_str(&format!("# tuple {} stage {k}\n{m}", i + 1));
                    }
                }
                text.push_str(&format!(
                    "tuple {}: total {} (overflow {})\n",
                    i + 1,
                    s.total(),
                    s.overflow_count
                ));
                states.push(state_json(&s));
            }
            j["states"] = Value::Array(states);
        }
        MapMode::Accumulate => {
            let mut s = MapState::new(&cfg);
            for t in &tuples {
                s = map_step(&cfg, &s, t)?;
                if cli.trace {
                    text.push_str(&format!("step {}: total {}\n", s.steps, s.total()));
                }
            }
            text.push_str(&format!(
                "{}# overflow {}\n# total {}\n",
                s.f,
                s.overflow_count,
                s.total()
            ));
            j["state"] = state_json(&s);
        }
    }
    if timing {
        let t = map_timing(&cfg, &DelayModel::default());
        text.push_str(&format!(
            "timing: t_and {} + t_q {} + t_s {} + t_p {} = {} t& (rows {:?})\n",
            t.t_and, t.t_q, t.t_s, t.t_p, t.total, t.row_counts
        ));
        j["timing"] = serde_json::to_value(&t)?;
    }
    Ok(Outcome::ok(text, j))
}

fn report_outcome(reports: Vec<Report>) -> Outcome {
    let pass = reports.iter().all(|r| r.pass);
    let text = reports
        .iter()
        .map(Report::to_text)
        .collect::<Vec<_>>()
        .join("\n");
    let json = if reports.len() == 1 {
        serde_json::to_value(&reports[0])
    } else {
        serde_json::to_value(&reports)
    }
    .expect("reports serialize");
    Outcome { text, json, pass }
}

fn cmd_report(table: &str) -> Result<Outcome> {
    let reports = if table == "all" {
        REPORT_IDS
            .iter()
            .map(|id| report_tables(id))
            .collect::<redundarith::Result<Vec<_>>>()?
    } else {
        vec![report_tables(table)?]
    };
    Ok(report_outcome(reports))
}

fn cmd_fuzz(seed: u64, trials: u64, scope: &str) -> Result<Outcome> {
    if trials == 0 {
        bail!("--trials must be at least 1");
    }
    let ops = scope
        .split(',')
        .map(|s| s.trim().parse::<FuzzOp>())
        .collect::<redundarith::Result<Vec<_>>>()?;
    Ok(report_outcome(vec![fuzz_verify(seed, trials, &ops)]))
}

fn cmd_eval(cli: &Cli, expr: &str) -> Result<Outcome> {
    let e = match eval_expression(expr) {
        Ok(e) => e,
        Err(redundarith::Error::Parse { pos, msg }) => {
            bail!("{expr}\n{}^ {msg}", " ".repeat(pos))
        }
        Err(other) => return Err(other.into()),
    };
    let mut text = String::new();
    if cli.trace {
        for t in &e.trace {
            text.push_str(t);
            text.push('\n');
        }
    }
    text.push_str(&format!("{}\n", e.value));
    if let Some(d) = e.delay {
        text.push_str(&format!("# multiply delay {d} t&\n"));
    }
    let mut j = json!({ "value": e.value.to_string(), "delay": e.delay });
    if cli.trace {
        j["trace"] = json!(e.trace);
    }
    Ok(Outcome::ok(text, j))
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.cmd {
        Cmd::Reduce { input } => cmd_reduce(cli, input),
        Cmd::Add { a, b } => cmd_add(a, b),
        Cmd::Mul {
            a,
            b,
            format,
            timing,
        } => cmd_mul(cli, a, b, *format, *timing),
        Cmd::Mac { stream, format } => cmd_mac(cli, stream, *format),
        Cmd::Div { x, z, k, iters } => cmd_div(cli, x, z, *k, *iters),
        Cmd::Accumulate { stream, width, xor } => cmd_accumulate(cli, stream, *width, *xor),
        Cmd::Map {
            config,
            stream,
            timing,
        } => cmd_map(cli, config, stream, *timing),
        Cmd::Report { table } => cmd_report(table),
        Cmd::Fuzz { trials, scope } => cmd_fuzz(cli.seed, *trials, scope),
        Cmd::Eval { expr } => cmd_eval(cli, expr),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let body = if cli.json {
                serde_json::to_string_pretty(&out.json).expect("json output") + "\n"
            } else {
                out.text
            };
            // A closed pipe is not an error for a report printer.
            let _ = io::stdout().lock().write_all(body.as_bytes());
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
