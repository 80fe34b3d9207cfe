use std::fmt::Write as _;

use serde::Serialize;

use minechain::bounds::{
    max_gap_rapid_mixing, min_power_rapid_mixing, mixing_upper_bound, percent_grid,
    safe_restart_frontier, safety_grid, PowerRange, SafetyCriterion, SafetyLabel,
};
use minechain::chain::exact_mixing_time;
use minechain::closedform::market_share_curve;
use minechain::lattice::{
    band_paths_dp, count_band_paths, count_constant_gap, count_paths_dp, Band, PathCount,
};
use minechain::payoff::evaluate;
use minechain::sim::{
    hitting_mean, hitting_samples, run as simulate_run, run_traced, Estimate, HittingSample,
    SimConfig,
};
use minechain::{build_chain, stationary, MiningChain, State};

use crate::grid::{float_grid, int_grid};
use crate::output::{num, sci, Artifact, Sink};
use crate::{
    AnalyzeArgs, ChainArgs, Cli, Command, CriterionArg, CurveArgs, DumpFormat, Failure, Format,
    MixArgs, PathsArgs, SafetyArgs, SimulateArgs,
};

fn usage<T>(r: Result<T, String>) -> Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::Io(std::io::Error::other(e)))
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let sink = Sink {
        out: cli.out.clone(),
        quiet: cli.quiet,
    };
    let mut extra = Vec::new();
    let mut seeds = Vec::new();
    let (name, body) = match &cli.command {
        Command::Analyze(a) => ("analyze", analyze(a)?),
        Command::Mix(a) => ("mix", mix(a)?),
        Command::Safety(a) => ("safety", safety(a)?),
        Command::Curve(a) => ("curve", curve(a)?),
        Command::Simulate(a) => {
            seeds.push(a.seed);
            ("simulate", simulate(a, &mut extra)?)
        }
        Command::Paths(a) => ("paths", paths(a)?),
        Command::Chain(a) => ("chain", chain(a)?),
    };
    sink.emit(name, &cli.command, seeds, &body, extra)?;
    Ok(())
}

fn max_gap(chain: &MiningChain) -> i64 {
    chain.states().iter().map(|s| s.gap()).max().unwrap_or(0)
}

#[derive(Serialize)]
struct AnalyzeRow {
    p1: f64,
    /// Largest reachable lead of player 2.
    g: i64,
    s: u32,
    d: u32,
    touches_cap: bool,
    #[serde(flatten)]
    report: minechain::PayoffReport,
}

fn analyze(a: &AnalyzeArgs) -> Result<String, Failure> {
    let r = a.policy.resolve()?;
    let costs = a.costs.model()?;
    let chain = build_chain(
        &r.policies[0],
        &r.policies[1],
        a.p1,
        a.depth.unwrap_or(r.default_depth),
    )?;
    let pi = stationary(&chain)?;
    let (c1, c2) = costs.rates(a.p1);
    let row = AnalyzeRow {
        p1: a.p1,
        g: max_gap(&chain),
        s: r.policies[0].restart(),
        d: chain.depth(),
        touches_cap: chain.touches_cap(),
        report: evaluate(&chain, &pi, c1, c2, a.costs.tau)?,
    };
    match a.format {
        Format::Json => json(&row),
        Format::Csv => {
            let p = &row.report;
            Ok(format!(
                "p1,g,s,d,c1,c2,tau_bar,rho1,rho2,h,G1,G2,R1,R2,tau_b\n{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                num(row.p1), row.g, row.s, row.d, num(p.c1), num(p.c2), num(p.tau_bar),
                num(p.rho1), num(p.rho2), num(p.h), num(p.g1), num(p.g2), num(p.r1), num(p.r2),
                num(p.tau_b)
            ))
        }
    }
}

fn mix(a: &MixArgs) -> Result<String, Failure> {
    let mut out = String::new();
    if a.exact {
        let r = a.policy.resolve()?;
        let p1s = usage(float_grid(
            a.p1.as_deref()
                .ok_or_else(|| Failure::Usage("--exact needs --p1".into()))?,
        ))?;
        out.push_str("p1,depth,gbar,eps,t_mix,bound\n");
        for p1 in p1s {
            let chain = build_chain(
                &r.policies[0],
                &r.policies[1],
                p1,
                a.depth.unwrap_or(r.default_depth),
            )?;
            let g = max_gap(&chain);
            let t = exact_mixing_time(&chain, a.eps, a.budget)?;
            let bound = u32::try_from(g)
                .ok()
                .filter(|&g| g >= 1)
                .and_then(|g| mixing_upper_bound(p1, g, a.eps).ok());
            let bound = bound.map(|b| b.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{g},{},{t},{bound}",
                num(p1),
                chain.depth(),
                num(a.eps)
            )
            .unwrap();
        }
        return Ok(out);
    }
    let gbars = usage(int_grid(&a.gbar))?;
    match &a.p1 {
        None => {
            out.push_str("gbar,eps,T,p1_min\n");
            for g in gbars {
                let p = min_power_rapid_mixing(a.eps, a.horizon, g)?;
                writeln!(out, "{g},{},{},{}", num(a.eps), num(a.horizon), num(p)).unwrap();
            }
        }
        Some(grid) => {
            out.push_str("p1,gbar,eps,T,bound,rapid,gbar_max\n");
            for p1 in usage(float_grid(grid))? {
                let gmax = max_gap_rapid_mixing(a.eps, a.horizon, p1)?;
                for &g in &gbars {
                    let b = mixing_upper_bound(p1, g, a.eps)?;
                    writeln!(
                        out,
                        "{},{g},{},{},{b},{},{gmax}",
                        num(p1),
                        num(a.eps),
                        num(a.horizon),
                        (b as f64) <= a.horizon
                    )
                    .unwrap();
                }
            }
        }
    }
    Ok(out)
}

fn safety(a: &SafetyArgs) -> Result<String, Failure> {
    let criterion = match a.criterion {
        CriterionArg::Rounds => SafetyCriterion::Rounds,
        CriterionArg::Turns => SafetyCriterion::Turns,
    };
    let p1s = match &a.p1 {
        Some(t) => usage(float_grid(t))?,
        None => percent_grid(),
    };
    let mut out = String::new();
    if let Some((range, limit)) = a
        .p1max
        .map(|x| (PowerRange::AtMost, x))
        .or(a.p1min.map(|x| (PowerRange::AtLeast, x)))
    {
        let rows = safe_restart_frontier(a.d, a.horizon, range, limit, &p1s)?;
        let name = match range {
            PowerRange::AtMost => "at_most",
            PowerRange::AtLeast => "at_least",
        };
        out.push_str("d,T,range,limit,g,s_max\n");
        for (g, s) in rows {
            writeln!(
                out,
                "{},{},{name},{},{g},{s}",
                a.d,
                num(a.horizon),
                num(limit)
            )
            .unwrap();
        }
        return Ok(out);
    }
    if a.onset {
        let ss = usage(int_grid(a.s.as_deref().unwrap_or("0..3")))?;
        let gs: Vec<u32> = match &a.g {
            Some(t) => usage(int_grid(t))?,
            None => (1..=a.d).collect(),
        };
        let verdicts = safety_grid(a.d, &gs, &ss, &p1s, a.horizon, criterion)?;
        out.push_str("d,s,p1,T,g_min\n");
        for &s in &ss {
            for &p in &p1s {
                let g_min = verdicts
                    .iter()
                    .filter(|v| v.s == s && v.p1 == p && v.label == SafetyLabel::Unsafe)
                    .map(|v| v.g)
                    .min();
                let g_min = g_min.map(|g| g.to_string()).unwrap_or_default();
                writeln!(out, "{},{s},{},{},{g_min}", a.d, num(p), num(a.horizon)).unwrap();
            }
        }
        return Ok(out);
    }
    let gs = match &a.g {
        Some(t) => usage(int_grid(t))?,
        None => (1..=a.d.min(20)).collect(),
    };
    let ss = match &a.s {
        Some(t) => usage(int_grid(t))?,
        None => (0..=*gs.iter().max().expect("grids are nonempty")).collect(),
    };
    out.push_str("d,g,s,p1,T,ln_er_lower,ln_er_upper,ln_t_upper,label\n");
    for v in safety_grid(a.d, &gs, &ss, &p1s, a.horizon, criterion)? {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            v.d,
            v.g,
            v.s,
            num(v.p1),
            num(v.horizon),
            sci(v.ln_er_lower),
            sci(v.ln_er_upper),
            sci(v.ln_t_upper),
            v.label
        )
        .unwrap();
    }
    Ok(out)
}

fn curve(a: &CurveArgs) -> Result<String, Failure> {
    let mut gs = usage(int_grid(&a.g))?;
    if gs.contains(&0) {
        return Err(Failure::Usage("gaps must be at least 1".into()));
    }
    if !a.no_frontier {
        gs.insert(0, 0);
    }
    let p1s = usage(float_grid(&a.p1))?;
    let rows = market_share_curve(&gs, &p1s, a.costs.model()?, a.costs.tau)?;
    let mut out = String::from("g,p1,rho1,rho2,h,G1,G2,R1,R2,flags\n");
    for r in rows {
        let p = &r.report;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.g,
            num(r.p1),
            num(p.rho1),
            num(p.rho2),
            num(p.h),
            num(p.g1),
            num(p.g2),
            num(p.r1),
            num(p.r2),
            r.flags.join(";")
        )
        .unwrap();
    }
    Ok(out)
}

fn parse_state(text: &str) -> Result<State, Failure> {
    let parts: Vec<&str> = text
        .trim_matches(|c| c == '(' || c == ')')
        .split(',')
        .collect();
    match parts.as_slice() {
        [a, b] => match (a.trim().parse(), b.trim().parse()) {
            (Ok(l1), Ok(l2)) => Ok(State::new(l1, l2)),
            _ => Err(Failure::Usage(format!("bad state '{text}'"))),
        },
        _ => Err(Failure::Usage(format!("state '{text}' must be l1,l2"))),
    }
}

#[derive(Serialize)]
struct HittingReport {
    target: State,
    replications: usize,
    budget: u64,
    seed: u64,
    censored: usize,
    mean: Option<Estimate>,
    samples: Vec<HittingSample>,
}

fn simulate(a: &SimulateArgs, extra: &mut Vec<Artifact>) -> Result<String, Failure> {
    let r = a.policy.resolve()?;
    let [p1pol, p2pol] = r.policies;
    let mut cfg = SimConfig::new(a.p1, p1pol, p2pol, a.depth.unwrap_or(r.default_depth));
    cfg.turns = a.turns;
    cfg.seed = a.seed;
    cfg.batches = a.batches;
    cfg.costs = a.costs.model()?;
    cfg.tau_bar = a.durations.then_some(a.costs.tau);
    cfg.record_hitting = a.hit.as_deref().map(parse_state).transpose()?;
    if let Some(reps) = a.reps {
        let target = cfg.record_hitting.expect("clap enforces --hit");
        let samples = hitting_samples(&cfg, reps, a.budget)?;
        return json(&HittingReport {
            target,
            replications: reps,
            budget: a.budget,
            seed: a.seed,
            censored: samples.iter().filter(|s| s.censored).count(),
            mean: hitting_mean(&samples),
            samples,
        });
    }
    let stats = match &a.trace {
        Some(path) => {
            let mut buf = Vec::new();
            let stats = run_traced(&cfg, &mut buf)?;
            std::fs::write(path, &buf)?;
            extra.push(Artifact::of(&path.display().to_string(), &buf));
            stats
        }
        None => simulate_run(&cfg)?,
    };
    json(&stats)
}

#[derive(Serialize)]
struct RoundCounts {
    d: u32,
    g: u32,
    s: u32,
    n00: PathCount,
    n0s: PathCount,
    #[serde(skip_serializing_if = "Option::is_none")]
    dp_agrees: Option<bool>,
}

#[derive(Serialize)]
struct BandReport {
    l: u32,
    m: u32,
    g: u32,
    #[serde(flatten)]
    count: minechain::lattice::BandCount,
    #[serde(skip_serializing_if = "Option::is_none")]
    dp_agrees: Option<bool>,
}

fn paths(a: &PathsArgs) -> Result<String, Failure> {
    if a.band {
        let (l, m) = (
            a.l.expect("clap enforces --l"),
            a.m.expect("clap enforces --m"),
        );
        let count = count_band_paths(l, m, a.g)?;
        let dp_agrees = a
            .check
            .then(|| band_paths_dp(l, m, a.g).value == count.count.value);
        return json(&BandReport {
            l,
            m,
            g: a.g,
            count,
            dp_agrees,
        });
    }
    let d = a.d.expect("clap enforces --d");
    let (n00, n0s) = count_constant_gap(d, a.g, a.s)?;
    let dp_agrees = a.check.then(|| {
        let band = Band::width(a.g);
        let dd = State::new(d, d);
        count_paths_dp(State::origin(), dd, &band) == n00
            && count_paths_dp(State::new(0, a.s), dd, &band) == n0s
    });
    json(&RoundCounts {
        d,
        g: a.g,
        s: a.s,
        n00,
        n0s,
        dp_agrees,
    })
}

#[derive(Serialize)]
struct ChainReport {
    #[serde(flatten)]
    dump: minechain::chain::ChainDump,
    #[serde(skip_serializing_if = "Option::is_none")]
    stationary: Option<Vec<f64>>,
}

fn chain(a: &ChainArgs) -> Result<String, Failure> {
    let r = a.policy.resolve()?;
    let chain = build_chain(
        &r.policies[0],
        &r.policies[1],
        a.p1,
        a.depth.unwrap_or(r.default_depth),
    )?;
    match a.format {
        DumpFormat::Dot => Ok(chain.to_dot()),
        DumpFormat::Json => {
            let stationary = if a.stationary {
                Some(stationary(&chain)?.as_slice().to_vec())
            } else {
                None
            };
            json(&ChainReport {
                dump: chain.to_dump(),
                stationary,
            })
        }
    }
}
