use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use lp_core::io;
use lp_core::mechanisms::{
    cumulative_da, da_alpha, immediate_acceptance, marriage_da, sd_alpha, serial_dictatorship, ttc,
    ttc_alpha, DictatorOrder,
};
use lp_core::{Allocation, CompromiserAssignment, Constraint, MechanismTable, Profile};

use crate::{MechanismName, SourceArgs};

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_constraint(path: &Path) -> Result<Constraint> {
    io::constraint_from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

pub fn load_alpha(path: &Path, constraint: Option<&Constraint>) -> Result<CompromiserAssignment> {
    io::alpha_from_json(&read(path)?, constraint).with_context(|| format!("in {}", path.display()))
}

pub fn load_profile(path: &Path, c: &Constraint) -> Result<Profile> {
    io::profile_from_json(&read(path)?, c.instance()).with_context(|| format!("in {}", path.display()))
}

pub type Runner = Box<dyn Fn(&Profile) -> Allocation + Send + Sync>;

/// A named mechanism bound to its parameters.
pub struct Named {
    pub constraint: Constraint,
    pub run: Runner,
    /// The assignment realizing it, for mechanisms that have one.
    pub alpha: Option<CompromiserAssignment>,
}

fn spec_text(spec: Option<&Path>, what: &str) -> Result<(String, String)> {
    let path = spec.ok_or_else(|| anyhow!("--spec with the {what} is required"))?;
    Ok((read(path)?, path.display().to_string()))
}

fn same_feasible(given: &Constraint, own: &Constraint, what: &str) -> Result<()> {
    if given != own {
        bail!("the constraint file disagrees with the feasible set implied by the {what}");
    }
    Ok(())
}

pub fn named(name: MechanismName, constraint: &Path, spec: Option<&Path>) -> Result<Named> {
    let c = load_constraint(constraint)?;
    let inst = c.instance().clone();
    Ok(match name {
        MechanismName::Sd => {
            let order = match spec {
                Some(p) => io::dictator_order_from_json(&read(p)?, &inst)
                    .with_context(|| format!("in {}", p.display()))?,
                None => DictatorOrder::identity(inst.num_agents()),
            };
            let alpha = sd_alpha(&c, &order);
            let cc = c.clone();
            Named {
                constraint: c,
                run: Box::new(move |p| serial_dictatorship(&cc, &order, p)),
                alpha: Some(alpha),
            }
        }
        MechanismName::Da | MechanismName::Ia => {
            let (text, where_) = spec_text(spec, "school capacities and priorities")?;
            let school = io::school_spec_from_json(&text, &inst).with_context(|| format!("in {where_}"))?;
            same_feasible(&c, &school.constraint(), "school capacities")?;
            if matches!(name, MechanismName::Da) {
                let alpha = da_alpha(&school);
                Named {
                    constraint: c,
                    run: Box::new(move |p| cumulative_da(&school, p).0),
                    alpha: Some(alpha),
                }
            } else {
                Named {
                    constraint: c,
                    run: Box::new(move |p| immediate_acceptance(&school, p)),
                    alpha: None,
                }
            }
        }
        MechanismName::Ttc => {
            let (text, where_) = spec_text(spec, "endowment")?;
            let e = io::endowment_from_json(&text, &inst).with_context(|| format!("in {where_}"))?;
            same_feasible(&c, &e.constraint(), "endowment")?;
            let alpha = ttc_alpha(&e);
            Named {
                constraint: c,
                run: Box::new(move |p| ttc(&e, p)),
                alpha: Some(alpha),
            }
        }
        MechanismName::Marriage => {
            let (text, where_) = spec_text(spec, "men and women")?;
            let m = io::marriage_spec_from_json(&text, &inst).with_context(|| format!("in {where_}"))?;
            same_feasible(&c, &m.constraint(), "sides of the market")?;
            Named {
                constraint: c,
                run: Box::new(move |p| marriage_da(&m, p)),
                alpha: None,
            }
        }
    })
}

pub enum Source {
    Alpha(CompromiserAssignment),
    Table(MechanismTable),
    Named(Named),
}

pub fn load_source(args: &SourceArgs) -> Result<Source> {
    let constraint = || args.constraint.as_deref().map(load_constraint).transpose();
    if let Some(path) = &args.alpha {
        return Ok(Source::Alpha(load_alpha(path, constraint()?.as_ref())?));
    }
    if let Some(path) = &args.table {
        let c = constraint()?;
        let f = io::table_from_json(&read(path)?, c.as_ref()).with_context(|| format!("in {}", path.display()))?;
        return Ok(Source::Table(f));
    }
    if let Some(name) = args.mechanism {
        let c = args
            .constraint
            .as_deref()
            .ok_or_else(|| anyhow!("--constraint is required with --mechanism"))?;
        return Ok(Source::Named(named(name, c, args.spec.as_deref())?));
    }
    bail!("give one of --alpha, --table or --mechanism")
}

/// The mechanism of a source as a dense table, or the exhaustion witness
/// when an assignment is not implementable.
pub fn table_of(source: &Source) -> Result<Result<MechanismTable, lp_core::Verdict>> {
    Ok(match source {
        Source::Alpha(a) => {
            let v = lp_core::is_implementable(a)?;
            if v.holds {
                Ok(lp_core::tabulate(a)?)
            } else {
                Err(v)
            }
        }
        Source::Table(f) => Ok(f.clone()),
        Source::Named(n) => Ok(MechanismTable::from_fn(n.constraint.clone(), |p| (n.run)(p))?),
    })
}

pub fn instance_of(source: &Source) -> Arc<lp_core::Instance> {
    match source {
        Source::Alpha(a) => a.instance().clone(),
        Source::Table(f) => f.instance().clone(),
        Source::Named(n) => n.constraint.instance().clone(),
    }
}
