use std::io::Write;
use std::ops::ControlFlow;

use anyhow::{anyhow, bail, Result};
use lp_core::axioms::{
    check_compromiser_invariance, check_fixed_compromiser, check_unanimity, is_group_strategy_proof,
    is_local_priority, is_maskin_monotonic, is_nonbossy, is_pareto_efficient, is_strategy_proof,
    GspMode,
};
use lp_core::compare::{check_agent_dominance, check_pointwise_dominance, DominanceMode};
use lp_core::consistency::{is_backward_consistent, is_forward_consistent};
use lp_core::enumerate::{enumerate_each, EnumerationOptions};
use lp_core::render::{render_alpha, render_constraint, RenderFormat};
use lp_core::{io, is_implementable, run_lp, Instance, MechanismTable, Outcome, Reading, Verdict};
use serde_json::{json, Map, Value};

use crate::source::{self, Source};
use crate::{Command, CompareMode, GspArg, Status};

fn emit(v: &Value) {
    print!("{}", io::pretty(v));
}

fn status(holds: bool) -> Status {
    if holds {
        Status::Holds
    } else {
        Status::Violated
    }
}

pub fn dispatch(command: Command) -> Result<Status> {
    match command {
        Command::Run {
            alpha,
            profile,
            trace,
        } => run(alpha, &profile, trace),
        Command::Check {
            source,
            props,
            reading,
            gsp_mode,
        } => check(&source, &props, reading.parse()?, gsp_mode),
        Command::Derive { source } => derive(&source),
        Command::Enumerate {
            constraint,
            forward,
            backward,
            reading,
            quotient,
            dedupe,
            budget,
        } => {
            let both = !forward && !backward;
            let opts = EnumerationOptions {
                reading: reading.parse()?,
                require_forward: forward || both,
                require_backward: backward || both,
                quotient_symmetry: quotient,
                dedupe_by_mechanism: dedupe,
                max_nodes: budget,
                time_limit: None,
            };
            enumerate(&source::load_constraint(&constraint)?, &opts)
        }
        Command::Compare {
            alpha,
            alpha2,
            constraint,
            constraint2,
            mode,
            agent,
            reading,
        } => {
            let c1 = constraint.as_deref().map(source::load_constraint).transpose()?;
            let c2 = constraint2.as_deref().map(source::load_constraint).transpose()?;
            let a = source::load_alpha(&alpha, c1.as_ref())?;
            let b = source::load_alpha(&alpha2, c2.as_ref())?;
            let report = match mode {
                CompareMode::Pointwise => check_pointwise_dominance(&a, &b)?,
                CompareMode::Agent => {
                    let name = agent.ok_or_else(|| anyhow!("--agent is required in agent mode"))?;
                    let i = a.instance().agent_index(&name)?;
                    check_agent_dominance(&a, &b, i, reading.parse()?)?
                }
            };
            let mode = match report.mode {
                DominanceMode::Pointwise => json!("pointwise"),
                DominanceMode::Agent(i) => json!({"agent": a.instance().agent_name(i)}),
            };
            let mut v = io::report_to_json(a.instance(), &report.report);
            v["mode"] = mode;
            emit(&v);
            Ok(status(report.dominance_holds()))
        }
        Command::Render {
            alpha,
            constraint,
            format,
        } => {
            let format: RenderFormat = format.parse()?;
            let c = constraint.as_deref().map(source::load_constraint).transpose()?;
            let text = match alpha {
                Some(path) => render_alpha(&source::load_alpha(&path, c.as_ref())?, format)?,
                None => render_constraint(c.as_ref().expect("clap requires one"), format)?,
            };
            print!("{text}");
            Ok(Status::Holds)
        }
        Command::Mechanisms {
            name,
            constraint,
            spec,
            profile,
            table,
        } => {
            let named = source::named(name, &constraint, spec.as_deref())?;
            let inst = named.constraint.instance().clone();
            if table {
                let f = MechanismTable::from_fn(named.constraint.clone(), |p| (named.run)(p))?;
                emit(&io::table_to_json(&f));
            } else {
                let path = profile.expect("clap requires a profile without --table");
                let p = source::load_profile(&path, &named.constraint)?;
                let x = (named.run)(&p);
                emit(&json!({ "allocation": io::allocation_to_json(&inst, &x) }));
            }
            Ok(Status::Holds)
        }
    }
}

fn run(args: crate::AlphaArgs, profile: &std::path::Path, trace: bool) -> Result<Status> {
    let c = args.constraint.as_deref().map(source::load_constraint).transpose()?;
    let alpha = source::load_alpha(&args.alpha, c.as_ref())?;
    let p = source::load_profile(profile, alpha.constraint())?;
    let outcome = run_lp(&alpha, &p)?;
    emit(&io::outcome_to_json(alpha.instance(), &outcome, trace));
    Ok(status(matches!(outcome, Outcome::Final { .. })))
}

const TABLE_PROPS: [&str; 9] = [
    "sp",
    "gsp",
    "nonbossy",
    "maskin",
    "pe",
    "unanimity",
    "fixed-compromiser",
    "invariance",
    "local-priority",
];
const ALPHA_PROPS: [&str; 3] = ["forward", "backward", "implementable"];

fn check(args: &crate::SourceArgs, props: &[String], reading: Reading, gsp: GspArg) -> Result<Status> {
    for p in props {
        if !TABLE_PROPS.contains(&p.as_str()) && !ALPHA_PROPS.contains(&p.as_str()) {
            bail!("unknown property `{p}`");
        }
    }
    let src = source::load_source(args)?;
    let inst = source::instance_of(&src);
    let alpha = match &src {
        Source::Alpha(a) => Some(a.clone()),
        Source::Named(n) => n.alpha.clone(),
        Source::Table(_) => None,
    };
    let needs_table = props.iter().any(|p| TABLE_PROPS.contains(&p.as_str()));
    let table = if needs_table { Some(source::table_of(&src)?) } else { None };
    let mut out = Map::new();
    let mut all = true;
    for prop in props {
        let v = if ALPHA_PROPS.contains(&prop.as_str()) {
            let a = alpha
                .as_ref()
                .ok_or_else(|| anyhow!("`{prop}` needs an assignment, not just a mechanism"))?;
            let verdict = match prop.as_str() {
                "forward" => is_forward_consistent(a),
                "backward" => is_backward_consistent(a, reading)?,
                _ => is_implementable(a)?,
            };
            all &= verdict.holds;
            io::verdict_to_json(&inst, &verdict)
        } else {
            match table.as_ref().expect("computed for table properties") {
                Err(stuck) => {
                    all = false;
                    io::verdict_to_json(&inst, stuck)
                }
                Ok(f) => {
                    let (holds, v) = table_prop(&inst, f, prop, gsp)?;
                    all &= holds;
                    v
                }
            }
        };
        out.insert(prop.clone(), v);
    }
    emit(&json!({ "holds": all, "props": out }));
    Ok(status(all))
}

fn table_prop(inst: &Instance, f: &MechanismTable, prop: &str, gsp: GspArg) -> Result<(bool, Value)> {
    let verdict: Verdict = match prop {
        "sp" => is_strategy_proof(f),
        "gsp" => is_group_strategy_proof(
            f,
            match gsp {
                GspArg::Pairs => GspMode::Pairs,
                GspArg::Exhaustive => GspMode::Exhaustive,
            },
        ),
        "nonbossy" => is_nonbossy(f),
        "maskin" => is_maskin_monotonic(f),
        "pe" => is_pareto_efficient(f, f.constraint())?,
        "unanimity" => check_unanimity(f),
        "fixed-compromiser" => check_fixed_compromiser(f),
        "invariance" => check_compromiser_invariance(f),
        _ => {
            let r = is_local_priority(f)?;
            let mut v = io::verdict_to_json(inst, &r.verdict);
            v["failed"] = json!(r.failed.map(|c| c.name()));
            v["alpha"] = r.alpha.as_ref().map(io::alpha_to_json).unwrap_or(Value::Null);
            return Ok((r.verdict.holds, v));
        }
    };
    Ok((verdict.holds, io::verdict_to_json(inst, &verdict)))
}

fn derive(args: &crate::SourceArgs) -> Result<Status> {
    let src = source::load_source(args)?;
    match &src {
        Source::Alpha(_) => bail!("derive takes --mechanism or --table"),
        Source::Named(n) if n.alpha.is_some() => {
            emit(&io::alpha_to_json(n.alpha.as_ref().unwrap()));
            Ok(Status::Holds)
        }
        _ => {
            let f = source::table_of(&src)?.expect("tables and mechanisms always tabulate");
            let r = is_local_priority(&f)?;
            match r.alpha {
                Some(a) => {
                    emit(&io::alpha_to_json(&a));
                    Ok(Status::Holds)
                }
                None => {
                    let mut v = io::verdict_to_json(f.instance(), &r.verdict);
                    v["failed"] = json!(r.failed.map(|c| c.name()));
                    emit(&v);
                    Ok(Status::Violated)
                }
            }
        }
    }
}

fn enumerate(c: &lp_core::Constraint, opts: &EnumerationOptions) -> Result<Status> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut failed = None;
    let (_, summary) = enumerate_each(c, opts, |e| {
        let line = io::alpha_to_json(&e.alpha).to_string();
        match writeln!(out, "{line}") {
            Ok(()) => ControlFlow::Continue(()),
            Err(err) => {
                failed = Some(err);
                ControlFlow::Break(())
            }
        }
    })?;
    if let Some(err) = failed {
        return Err(err.into());
    }
    writeln!(out, "{}", json!({ "summary": io::summary_to_json(&summary) }))?;
    Ok(Status::Holds)
}
