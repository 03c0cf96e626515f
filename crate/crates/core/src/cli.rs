//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification or property failure, 2 input
//! error, 3 solver precondition violation.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num::{BigInt, Signed, Zero};

use crate::format::{parse_equilibrium, parse_instance, write_equilibrium, write_instance, EquilibriumRecord};
use crate::general_solver::{replay_general, solve_general, GeneralEquilibrium, GeneralError, NextSegTrace};
use crate::market_model::{
    build_flow_market, build_laminar_restricted, build_multi_type_scheduling, build_single_machine_with_horizon,
    check_sufficient_demand, fmt_rational, parse_rational, FlowAgent, FlowEdge, MarketError, MarketInstance,
};
use crate::rational_lp::Rational;
use crate::scheduling_solver::{solve_scheduling, ScheduleError, SchedulingEquilibrium};
use crate::verifier::{check_envy_free, check_pareto, check_price_equilibrium, check_sharing_incentive, verify_equilibrium};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "covmarket", version, about = "Exact equilibria of covering-constrained delay markets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute an equilibrium.
    Solve {
        instance: PathBuf,
        /// Equilibrium output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Segment-search trace output file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Slot price table for single-machine instances.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Use the general solver even on single-machine instances.
        #[arg(long)]
        general: bool,
    },
    /// Check an equilibrium file against an instance.
    Verify { instance: PathBuf, equilibrium: PathBuf },
    /// Decide whether a price vector admits an equilibrium allocation.
    CheckPrice {
        instance: PathBuf,
        /// Comma-separated prices in good order.
        #[arg(long)]
        prices: String,
    },
    /// Solve (or load) an equilibrium and run the property checks on it.
    Properties {
        instance: PathBuf,
        #[arg(long)]
        equilibrium: Option<PathBuf>,
    },
    /// Write an instance built from parameters.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Rebuild an equilibrium from a trace.
    TraceReplay {
        instance: PathBuf,
        trace: PathBuf,
        /// Equilibrium file the replay must reproduce.
        #[arg(long)]
        expect: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct GenCommon {
    #[arg(long, default_value = "generated")]
    pub name: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum GenKind {
    /// One machine with unit slots; `--budgets 30,17 --reqs 1,1`.
    SingleMachine {
        #[arg(long)]
        budgets: String,
        #[arg(long)]
        reqs: String,
        /// Slots beyond the total requirement.
        #[arg(long, default_value_t = 0)]
        extra_slots: usize,
        #[command(flatten)]
        common: GenCommon,
    },
    /// Machine types; lists separated by `;`, e.g. `--delays "1,2;1,3" --reqs "1,1;1,0"`.
    MultiType {
        #[arg(long)]
        delays: String,
        #[arg(long)]
        budgets: String,
        #[arg(long)]
        reqs: String,
        #[command(flatten)]
        common: GenCommon,
    },
    /// Single machine type with per-agent allowed machines, `--allowed "0,1;1"` (0-based).
    Laminar {
        #[arg(long)]
        delays: String,
        #[arg(long)]
        budgets: String,
        #[arg(long)]
        reqs: String,
        #[arg(long)]
        allowed: String,
        #[command(flatten)]
        common: GenCommon,
    },
    /// Network; edges `from-to:capacity:delay`, agents `source-sink:demand:budget`.
    Flow {
        #[arg(long)]
        edges: String,
        #[arg(long)]
        agents: String,
        #[command(flatten)]
        common: GenCommon,
    },
}

/// Diagnostic plus exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    msg: String,
}

fn input(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, msg: msg.into() }
}

impl From<GeneralError> for Failure {
    fn from(e: GeneralError) -> Self {
        let code = match e {
            GeneralError::Market(_) | GeneralError::BadTrace(_) => EXIT_INPUT,
            _ => EXIT_PRECONDITION,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<ScheduleError> for Failure {
    fn from(e: ScheduleError) -> Self {
        let code = if matches!(e, ScheduleError::Market(_)) { EXIT_INPUT } else { EXIT_PRECONDITION };
        Failure { code, msg: e.to_string() }
    }
}

impl From<MarketError> for Failure {
    fn from(e: MarketError) -> Self {
        input(e.to_string())
    }
}

impl From<crate::verifier::VerifyError> for Failure {
    fn from(e: crate::verifier::VerifyError) -> Self {
        input(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write_to(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<MarketInstance, Failure> {
    let inst = parse_instance(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
    inst.validate()?;
    Ok(inst)
}

fn rational_list(s: &str) -> Result<Vec<Rational>, Failure> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            if t.contains('.') {
                return Err(input(format!("decimal literal `{t}` (write p/q)")));
            }
            parse_rational(t).ok_or_else(|| input(format!("bad rational `{t}`")))
        })
        .collect()
}

fn rational_lists(s: &str) -> Result<Vec<Vec<Rational>>, Failure> {
    s.split(';').map(rational_list).collect()
}

fn u32_list(s: &str) -> Result<Vec<u32>, Failure> {
    s.split(',').map(|t| t.trim().parse().map_err(|_| input(format!("bad count `{t}`")))).collect()
}

/// Exact decimal rendering rounded half away from zero.
pub fn decimal(r: &Rational, places: usize) -> String {
    let scale = Rational::from_integer(BigInt::from(10).pow(places as u32));
    let q = (r * scale).round().to_integer();
    let neg = q.is_negative();
    let digits = q.abs().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (int, frac) = digits.split_at(digits.len() - places);
    let sign = if neg { "-" } else { "" };
    if places == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Slot price table of a single-machine equilibrium: slot, exact price,
/// decimal approximation.
pub fn emit_price_curve(inst: &MarketInstance, prices: &[Rational]) -> Result<String, crate::verifier::VerifyError> {
    if inst.single_machine_data().is_none() {
        return Err(crate::verifier::VerifyError::NotSchedulingInstance);
    }
    let mut s = String::from("# slot\tprice\tapprox\n");
    for (t, p) in prices.iter().enumerate() {
        let _ = writeln!(s, "{}\t{}\t{}", t + 1, fmt_rational(p), decimal(p, 6));
    }
    Ok(s)
}

/// Either solver's output.
pub enum Solved {
    Scheduling(SchedulingEquilibrium),
    General(GeneralEquilibrium),
}

impl Solved {
    pub fn record(&self) -> EquilibriumRecord {
        match self {
            Solved::Scheduling(e) => e.to_record(),
            Solved::General(e) => e.to_record(),
        }
    }
}

/// Uses the scheduling fast path when the instance is a single machine
/// with exactly as many slots as requirements, the general solver otherwise.
pub fn solve_instance(inst: &MarketInstance, force_general: bool) -> Result<Solved, String> {
    if !force_general {
        if let Some((budgets, reqs)) = inst.single_machine_data() {
            if reqs.iter().map(|&r| r as usize).sum::<usize>() == inst.num_goods() {
                return solve_scheduling(&budgets, &reqs).map(Solved::Scheduling).map_err(|e| e.to_string());
            }
        }
    }
    solve_general(inst).map(Solved::General).map_err(|e| e.to_string())
}

fn ids(inst: &MarketInstance, set: &[usize]) -> String {
    set.iter().map(|&i| inst.agents[i].id.as_str()).collect::<Vec<_>>().join(", ")
}

/// Trace text: one `[segment]` block per segment search, all values exact.
pub fn write_trace(inst: &MarketInstance, solved: &Solved) -> String {
    let mut s = String::new();
    match solved {
        Solved::Scheduling(eq) => {
            s.push_str("solver = scheduling\n");
            for search in &eq.searches {
                s.push_str("\n[segment]\n");
                for st in &search.steps {
                    let _ = writeln!(
                        s,
                        "step = {}, {} : {} ; {}",
                        fmt_rational(&st.lo),
                        fmt_rational(&st.hi),
                        ids(inst, &st.set_lo),
                        ids(inst, &st.set_hi)
                    );
                }
                let _ = writeln!(s, "set = {}", ids(inst, &search.chosen));
                let _ = writeln!(s, "lambda = {}", fmt_rational(&search.lambda));
            }
        }
        Solved::General(eq) => {
            s.push_str("solver = general\n");
            for t in &eq.trace {
                write_general_segment(&mut s, inst, t);
            }
        }
    }
    s
}

fn write_general_segment(s: &mut String, inst: &MarketInstance, t: &NextSegTrace) {
    s.push_str("\n[segment]\n");
    let _ = writeln!(s, "g0 = {}", fmt_rational(&t.g0));
    for (a, g) in &t.doubling {
        let _ = writeln!(s, "double = {}, {}", fmt_rational(a), fmt_rational(g));
    }
    for (lo, hi, slo, shi) in &t.bisection {
        let _ = writeln!(s, "bisect = {}, {} : {} ; {}", fmt_rational(lo), fmt_rational(hi), ids(inst, slo), ids(inst, shi));
    }
    for (a, g) in &t.zero_steps {
        let _ = writeln!(s, "zero = {}, {}", fmt_rational(a), fmt_rational(g));
    }
    let _ = writeln!(s, "a_star = {}", fmt_rational(&t.a_star));
    let _ = writeln!(s, "set = {}", ids(inst, &t.set));
    let _ = writeln!(s, "lambda = {}", fmt_rational(&t.lambda));
    match &t.epsilon {
        Some(e) => {
            let _ = writeln!(s, "epsilon = {}", fmt_rational(e));
        }
        None => s.push_str("epsilon = none\n"),
    }
    let _ = writeln!(s, "epsilon_tries = {}", t.epsilon_tries);
}

/// Decisions recorded in a trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceDecisions {
    /// `(set, lambda)` per segment.
    Scheduling(Vec<(Vec<usize>, Rational)>),
    /// `(set, a*, eps)` per segment.
    General(Vec<(Vec<usize>, Rational, Option<Rational>)>),
}

pub fn parse_trace(inst: &MarketInstance, src: &str) -> Result<TraceDecisions, String> {
    let agent = |id: &str| inst.agents.iter().position(|a| a.id == id).ok_or_else(|| format!("unknown agent `{id}`"));
    let rat = |v: &str, line: usize| parse_rational(v).ok_or_else(|| format!("line {line}: bad rational `{v}`"));
    let mut solver = None;
    #[derive(Default)]
    struct Block {
        set: Option<Vec<usize>>,
        lambda: Option<Rational>,
        a_star: Option<Rational>,
        eps: Option<Option<Rational>>,
    }
    let mut blocks: Vec<Block> = Vec::new();
    for (no, raw) in src.lines().enumerate() {
        let line = no + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        if text == "[segment]" {
            blocks.push(Block::default());
            continue;
        }
        let (k, v) = text.split_once('=').ok_or_else(|| format!("line {line}: expected `key = value`"))?;
        let (k, v) = (k.trim(), v.trim());
        if k == "solver" {
            solver = Some(v.to_string());
            continue;
        }
        let b = blocks.last_mut().ok_or_else(|| format!("line {line}: `{k}` outside a segment"))?;
        match k {
            "set" => b.set = Some(v.split(',').map(|t| agent(t.trim())).collect::<Result<_, _>>()?),
            "lambda" => b.lambda = Some(rat(v, line)?),
            "a_star" => b.a_star = Some(rat(v, line)?),
            "epsilon" => b.eps = Some(if v == "none" { None } else { Some(rat(v, line)?) }),
            "g0" | "double" | "bisect" | "zero" | "step" | "epsilon_tries" => {}
            _ => return Err(format!("line {line}: unknown key `{k}`")),
        }
    }
    let missing = |what: &str, k: usize| format!("segment {} has no `{what}`", k + 1);
    match solver.as_deref() {
        Some("scheduling") => blocks
            .into_iter()
            .enumerate()
            .map(|(k, b)| Ok((b.set.ok_or_else(|| missing("set", k))?, b.lambda.ok_or_else(|| missing("lambda", k))?)))
            .collect::<Result<_, String>>()
            .map(TraceDecisions::Scheduling),
        Some("general") => blocks
            .into_iter()
            .enumerate()
            .map(|(k, b)| {
                Ok((
                    b.set.ok_or_else(|| missing("set", k))?,
                    b.a_star.ok_or_else(|| missing("a_star", k))?,
                    b.eps.ok_or_else(|| missing("epsilon", k))?,
                ))
            })
            .collect::<Result<_, String>>()
            .map(TraceDecisions::General),
        Some(other) => Err(format!("unknown solver `{other}`")),
        None => Err("trace has no `solver` line".into()),
    }
}

/// Rebuilds the equilibrium a trace describes.
pub fn replay_trace(inst: &MarketInstance, decisions: &TraceDecisions) -> Result<EquilibriumRecord, String> {
    match decisions {
        TraceDecisions::General(d) => replay_general(inst, d).map(|e| e.to_record()).map_err(|e| e.to_string()),
        TraceDecisions::Scheduling(d) => {
            // The fast path has no free choices: replay re-runs it and
            // insists on the recorded decisions.
            let (budgets, reqs) = inst.single_machine_data().ok_or("not a single-machine instance")?;
            let eq = solve_scheduling(&budgets, &reqs).map_err(|e| e.to_string())?;
            let got: Vec<(Vec<usize>, Rational)> = eq.searches.iter().map(|s| (s.chosen.clone(), s.lambda.clone())).collect();
            if &got != d {
                return Err("recorded decisions differ from the solver's".into());
            }
            Ok(eq.to_record())
        }
    }
}

/// Named property verdicts for one equilibrium.
pub fn property_checks(inst: &MarketInstance, rec: &EquilibriumRecord) -> Result<Vec<(&'static str, bool)>, String> {
    let e = |x: crate::verifier::VerifyError| x.to_string();
    let mut out = Vec::new();
    let report = verify_equilibrium(inst, &rec.allocation, &rec.prices).map_err(e)?;
    out.push(("equilibrium", report.passed()));
    out.push(("price_equilibrium", check_price_equilibrium(inst, &rec.prices).map_err(e)?.is_some()));
    let exhausted = inst.agents.iter().enumerate().all(|(i, a)| {
        let spent: Rational = rec.allocation.x[i].iter().zip(&rec.prices).map(|(x, p)| x * p).sum();
        spent == a.budget
    });
    let sufficient = check_sufficient_demand(inst).map(|r| r.satisfied()).unwrap_or(false);
    if sufficient {
        out.push(("budget_exhaustion", exhausted));
    }
    let increasing = rec.segments.windows(2).all(|w| w[0].1 < w[1].1);
    out.push(("lambda_increasing", increasing));
    if inst.single_machine_data().is_some() {
        let gaps: Vec<Rational> = rec.prices.windows(2).map(|w| &w[0] - &w[1]).collect();
        let convex = gaps.iter().all(|g| !g.is_negative()) && gaps.windows(2).all(|w| w[0] >= w[1]);
        out.push(("price_curve_convex", convex));
    }
    out.push(("pareto", check_pareto(inst, &rec.allocation).map_err(e)?));
    out.push(("envy_free", check_envy_free(inst, &rec.allocation, &rec.prices).map_err(e)?));
    out.push(("sharing_incentive", check_sharing_incentive(inst, &rec.allocation).map_err(e)?));
    Ok(out)
}

fn precondition(msg: String) -> Failure {
    Failure { code: EXIT_PRECONDITION, msg }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write_to(p, text),
        None => out.write_all(text.as_bytes()).map_err(|e| input(e.to_string())),
    }
}

fn gen_instance(kind: GenKind) -> Result<(MarketInstance, Option<PathBuf>), Failure> {
    let (mut inst, common) = match kind {
        GenKind::SingleMachine { budgets, reqs, extra_slots, common } => {
            (build_single_machine_with_horizon(&rational_list(&budgets)?, &u32_list(&reqs)?, extra_slots)?, common)
        }
        GenKind::MultiType { delays, budgets, reqs, common } => (
            build_multi_type_scheduling(&rational_lists(&delays)?, &rational_list(&budgets)?, &rational_lists(&reqs)?)?,
            common,
        ),
        GenKind::Laminar { delays, budgets, reqs, allowed, common } => {
            let allowed: Vec<Vec<Vec<usize>>> = allowed
                .split(';')
                .map(|a| {
                    a.split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| t.trim().parse().map_err(|_| input(format!("bad machine index `{t}`"))))
                        .collect::<Result<Vec<usize>, _>>()
                        .map(|v| vec![v])
                })
                .collect::<Result<_, _>>()?;
            let reqs: Vec<Vec<Rational>> = rational_list(&reqs)?.into_iter().map(|r| vec![r]).collect();
            (build_laminar_restricted(&[rational_list(&delays)?], &rational_list(&budgets)?, &reqs, &allowed)?, common)
        }
        GenKind::Flow { edges, agents, common } => {
            let parse_arc = |t: &str| -> Result<(String, String, Rational, Rational), Failure> {
                let parts: Vec<&str> = t.trim().split(':').collect();
                let [arc, a, b] = parts[..] else {
                    return Err(input(format!("expected `from-to:x:y`, found `{t}`")));
                };
                let (from, to) = arc.split_once('-').ok_or_else(|| input(format!("bad arc `{arc}`")))?;
                let mut v = rational_list(&format!("{a},{b}"))?;
                let y = v.pop().unwrap_or_default();
                let x = v.pop().unwrap_or_default();
                Ok((from.to_string(), to.to_string(), x, y))
            };
            let edges = edges
                .split(',')
                .map(|t| parse_arc(t).map(|(from, to, capacity, delay)| FlowEdge { from, to, capacity, delay }))
                .collect::<Result<Vec<_>, _>>()?;
            let agents = agents
                .split(',')
                .map(|t| parse_arc(t).map(|(source, sink, demand, budget)| FlowAgent { source, sink, demand, budget }))
                .collect::<Result<Vec<_>, _>>()?;
            (build_flow_market(&edges, &agents)?, common)
        }
    };
    inst.name = common.name;
    Ok((inst, common.out))
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    match cli.command {
        Command::Solve { instance, out: eq_path, trace, curve, general } => {
            let inst = load_instance(&instance)?;
            let solved = solve_instance(&inst, general).map_err(precondition)?;
            let rec = solved.record();
            emit(out, eq_path.as_deref(), &write_equilibrium(&inst, &rec))?;
            if let Some(t) = trace {
                write_to(&t, &write_trace(&inst, &solved))?;
            }
            if let Some(c) = curve {
                write_to(&c, &emit_price_curve(&inst, &rec.prices)?)?;
            }
            Ok(EXIT_OK)
        }
        Command::Verify { instance, equilibrium } => {
            let inst = load_instance(&instance)?;
            let rec = parse_equilibrium(&inst, &read(&equilibrium)?).map_err(|e| input(format!("{}: {e}", equilibrium.display())))?;
            let report = verify_equilibrium(&inst, &rec.allocation, &rec.prices)?;
            emit(out, None, &report.to_text(&inst))?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_FAIL })
        }
        Command::CheckPrice { instance, prices } => {
            let inst = load_instance(&instance)?;
            let prices = rational_list(&prices)?;
            match check_price_equilibrium(&inst, &prices)? {
                Some(x) => {
                    let rec = EquilibriumRecord { prices, lambda: vec![Rational::zero(); inst.num_agents()], allocation: x, segments: vec![] };
                    let text = write_equilibrium(&inst, &rec);
                    // Only the allocation section is meaningful here.
                    let alloc = text.split("\n[allocation]\n").nth(1).unwrap_or("").split("\n[segments]").next().unwrap_or("");
                    emit(out, None, &format!("equilibrium prices\n[allocation]\n{alloc}"))?;
                    Ok(EXIT_OK)
                }
                None => {
                    emit(out, None, "not equilibrium prices\n")?;
                    Ok(EXIT_FAIL)
                }
            }
        }
        Command::Properties { instance, equilibrium } => {
            let inst = load_instance(&instance)?;
            let rec = match equilibrium {
                Some(p) => parse_equilibrium(&inst, &read(&p)?).map_err(|e| input(format!("{}: {e}", p.display())))?,
                None => solve_instance(&inst, false).map_err(precondition)?.record(),
            };
            let checks = property_checks(&inst, &rec).map_err(input)?;
            let mut text = String::new();
            for (name, ok) in &checks {
                let _ = writeln!(text, "{} {name}", if *ok { "pass" } else { "FAIL" });
            }
            emit(out, None, &text)?;
            Ok(if checks.iter().all(|c| c.1) { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Gen { kind } => {
            let (inst, path) = gen_instance(kind)?;
            emit(out, path.as_deref(), &write_instance(&inst))?;
            Ok(EXIT_OK)
        }
        Command::TraceReplay { instance, trace, expect, out: eq_path } => {
            let inst = load_instance(&instance)?;
            let decisions = parse_trace(&inst, &read(&trace)?).map_err(|e| input(format!("{}: {e}", trace.display())))?;
            let rec = replay_trace(&inst, &decisions).map_err(precondition)?;
            let text = write_equilibrium(&inst, &rec);
            emit(out, eq_path.as_deref(), &text)?;
            if let Some(p) = expect {
                let want = parse_equilibrium(&inst, &read(&p)?).map_err(|e| input(format!("{}: {e}", p.display())))?;
                if want != rec {
                    return Ok(EXIT_FAIL);
                }
            }
            Ok(EXIT_OK)
        }
    }
}

/// Runs one command. Diagnostics go to `err` as a single line.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.msg);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_model::build_single_machine;
    use crate::rational_lp::{int, ratio};

    #[test]
    fn decimals_round_half_away() {
        assert_eq!(decimal(&ratio(10, 3), 6), "3.333333");
        assert_eq!(decimal(&ratio(5, 3), 6), "1.666667");
        assert_eq!(decimal(&ratio(-5, 3), 2), "-1.67");
        assert_eq!(decimal(&ratio(1, 8), 2), "0.13");
        assert_eq!(decimal(&int(30), 0), "30");
        assert_eq!(decimal(&ratio(-1, 200), 2), "-0.01");
    }

    #[test]
    fn single_agent_price_curve() {
        let inst = build_single_machine(&[int(5)], &[2]).unwrap();
        let eq = solve_scheduling(&[int(5)], &[2]).unwrap();
        let curve = emit_price_curve(&inst, &eq.prices).unwrap();
        assert_eq!(curve, "# slot\tprice\tapprox\n1\t10/3\t3.333333\n2\t5/3\t1.666667\n");
    }

    #[test]
    fn bad_flag_is_input_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["covmarket", "solve"], &mut o, &mut e), EXIT_INPUT);
        assert_eq!(run(["covmarket", "gen", "single-machine", "--budgets", "1.5", "--reqs", "1"], &mut o, &mut e), EXIT_INPUT);
    }

    #[test]
    fn gen_single_machine_writes_instance() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(["covmarket", "gen", "single-machine", "--budgets", "5,1", "--reqs", "1,1", "--name", "pair"], &mut o, &mut e);
        assert_eq!(code, EXIT_OK);
        let inst = parse_instance(std::str::from_utf8(&o).unwrap()).unwrap();
        assert_eq!(inst.name, "pair");
        assert_eq!(inst.single_machine_data(), Some((vec![int(5), int(1)], vec![1, 1])));
    }
}
