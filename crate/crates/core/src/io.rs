//! JSON documents for constraints, assignments, profiles, mechanism
//! parameters, traces, tables and verdicts.
//!
//! Allocations are arrays of object names in agent order; allocation map keys
//! are the comma-joined form `"a,a,b"`. Object keys are emitted sorted.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::alpha::CompromiserAssignment;
use crate::constraint::{Constraint, Generator};
use crate::engine::{MechanismTable, Outcome, Trace};
use crate::enumerate::EnumerationSummary;
use crate::error::{Error, Result};
use crate::instance::{AgentSet, Allocation, Instance};
use crate::mechanisms::{DictatorOrder, Endowment, MarriageSpec, SchoolSpec};
use crate::preference::{Preference, Profile, ProfileSpace};
use crate::verdict::{Hypothesis, Report, Verdict, Witness};

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values always serialize");
    s.push('\n');
    s
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintDoc {
    agents: Vec<String>,
    objects: Vec<String>,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacities: Option<BTreeMap<String, usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    men: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    women: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feasible: Option<Vec<Vec<String>>>,
}

fn agent_set(inst: &Instance, names: &[String]) -> Result<AgentSet> {
    names.iter().map(|n| inst.agent_index(n)).collect()
}

fn missing(kind: &str, field: &str) -> Error {
    Error::Parse(format!("constraint kind `{kind}` needs `{field}`"))
}

pub fn constraint_from_json(text: &str) -> Result<Constraint> {
    let doc: ConstraintDoc = parse(text, "constraint")?;
    let inst = Arc::new(Instance::new(doc.agents, doc.objects)?);
    let kind = doc.kind.as_str();
    let listed = |inst: &Arc<Instance>| -> Result<Option<Constraint>> {
        doc.feasible
            .as_ref()
            .map(|rows| {
                let xs = rows
                    .iter()
                    .map(|r| inst.parse_allocation(r))
                    .collect::<Result<Vec<_>>>()?;
                Constraint::explicit(inst.clone(), xs)
            })
            .transpose()
    };
    let c = match kind {
        "explicit" => listed(&inst)?.ok_or_else(|| missing(kind, "feasible"))?,
        "unconstrained" => Constraint::unconstrained(inst.clone()),
        "house" => Constraint::house(inst.clone())?,
        "social" => Constraint::social(inst.clone())?,
        "one_sided" => Constraint::one_sided(inst.clone())?,
        "school" => {
            let caps = doc.capacities.as_ref().ok_or_else(|| missing(kind, "capacities"))?;
            Constraint::school(inst.clone(), capacities(&inst, caps)?)?
        }
        "two_sided" => {
            let men = doc.men.as_ref().ok_or_else(|| missing(kind, "men"))?;
            let women = doc.women.as_ref().ok_or_else(|| missing(kind, "women"))?;
            Constraint::two_sided(inst.clone(), agent_set(&inst, men)?, agent_set(&inst, women)?)?
        }
        other => return Err(Error::Parse(format!("unknown constraint kind `{other}`"))),
    };
    if kind != "explicit" {
        if let Some(given) = listed(&inst)? {
            if given != c {
                return Err(Error::InvalidConstraint(format!(
                    "listed feasible set disagrees with the `{kind}` generator"
                )));
            }
        }
    }
    Ok(c)
}

fn capacities(inst: &Instance, caps: &BTreeMap<String, usize>) -> Result<Vec<usize>> {
    for name in caps.keys() {
        inst.object_index(name)?;
    }
    inst.objects()
        .iter()
        .map(|o| {
            caps.get(o)
                .copied()
                .ok_or_else(|| Error::Parse(format!("no capacity for object `{o}`")))
        })
        .collect()
}

pub fn constraint_to_json(c: &Constraint) -> Value {
    let inst = c.instance();
    let mut doc = ConstraintDoc {
        agents: inst.agents().to_vec(),
        objects: inst.objects().to_vec(),
        kind: c.generator().kind().to_string(),
        capacities: None,
        men: None,
        women: None,
        feasible: None,
    };
    match c.generator() {
        Generator::Explicit => {
            doc.feasible = Some(
                c.feasible_codes()
                    .map(|x| inst.object_names(&inst.decode(x)))
                    .collect(),
            )
        }
        Generator::School { capacities } => {
            doc.capacities = Some(
                inst.objects()
                    .iter()
                    .cloned()
                    .zip(capacities.iter().copied())
                    .collect(),
            )
        }
        Generator::TwoSided { men, women } => {
            doc.men = Some(inst.agent_names(*men));
            doc.women = Some(inst.agent_names(*women));
        }
        _ => {}
    }
    serde_json::to_value(doc).expect("constraint document serializes")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlphaDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    agents: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    objects: Option<Vec<String>>,
    cells: BTreeMap<String, Vec<String>>,
}

/// Reads an assignment. With a constraint, the cells must cover exactly its
/// infeasible allocations; without one, the document must name its agents
/// and objects and the constraint is implied by which cells are present.
pub fn alpha_from_json(text: &str, constraint: Option<&Constraint>) -> Result<CompromiserAssignment> {
    let doc: AlphaDoc = parse(text, "compromiser assignment")?;
    let inst = match (constraint, doc.agents, doc.objects) {
        (Some(c), agents, objects) => {
            let inst = c.instance().clone();
            if agents.is_some_and(|a| a != inst.agents())
                || objects.is_some_and(|o| o != inst.objects())
            {
                return Err(Error::InstanceMismatch(
                    "assignment and constraint name different agents or objects".into(),
                ));
            }
            inst
        }
        (None, Some(agents), Some(objects)) => Arc::new(Instance::new(agents, objects)?),
        (None, _, _) => {
            return Err(Error::Parse(
                "assignment without a constraint must list `agents` and `objects`".into(),
            ))
        }
    };
    let mut cells = vec![AgentSet::EMPTY; inst.num_allocations()];
    for (key, names) in &doc.cells {
        let x = inst.parse_allocation_key(key)?;
        let set = agent_set(&inst, names)?;
        if set.is_empty() {
            return Err(Error::MissingCell(key.clone()));
        }
        cells[inst.encode(&x) as usize] = set;
    }
    match constraint {
        Some(c) => CompromiserAssignment::new(c.clone(), cells),
        None => CompromiserAssignment::from_implied_cells(inst, cells),
    }
}

pub fn alpha_to_json(alpha: &CompromiserAssignment) -> Value {
    let inst = alpha.instance();
    let cells = alpha
        .infeasible_cells()
        .map(|(x, s)| (inst.allocation_key(&inst.decode(x)), inst.agent_names(s)))
        .collect();
    let doc = AlphaDoc {
        agents: Some(inst.agents().to_vec()),
        objects: Some(inst.objects().to_vec()),
        cells,
    };
    serde_json::to_value(doc).expect("assignment document serializes")
}

pub fn allocation_to_json(inst: &Instance, x: &Allocation) -> Value {
    json!(inst.object_names(x))
}

pub fn agents_to_json(inst: &Instance, s: AgentSet) -> Value {
    json!(inst.agent_names(s))
}

pub fn profile_from_json(text: &str, inst: &Instance) -> Result<Profile> {
    let doc: BTreeMap<String, Vec<String>> = parse(text, "profile")?;
    profile_from_map(&doc, inst)
}

fn profile_from_map(doc: &BTreeMap<String, Vec<String>>, inst: &Instance) -> Result<Profile> {
    for name in doc.keys() {
        inst.agent_index(name)?;
    }
    let prefs = inst
        .agents()
        .iter()
        .map(|a| {
            let ranking = doc
                .get(a)
                .ok_or_else(|| Error::Parse(format!("profile has no ranking for agent `{a}`")))?;
            let objects = ranking
                .iter()
                .map(|o| inst.object_index(o))
                .collect::<Result<Vec<_>>>()?;
            if objects.len() != inst.num_objects() {
                return Err(Error::InvalidPreference(format!(
                    "agent `{a}` ranks {} objects, expected {}",
                    objects.len(),
                    inst.num_objects()
                )));
            }
            Preference::new(objects)
        })
        .collect::<Result<Vec<_>>>()?;
    Profile::new(prefs)
}

pub fn profile_to_json(inst: &Instance, p: &Profile) -> Value {
    let map: Map<String, Value> = (0..p.len())
        .map(|i| {
            let ranking: Vec<&str> = p.get(i).ranking().map(|o| inst.object_name(o)).collect();
            (inst.agent_name(i).to_string(), json!(ranking))
        })
        .collect();
    Value::Object(map)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchoolDoc {
    capacities: BTreeMap<String, usize>,
    priorities: BTreeMap<String, Vec<String>>,
}

pub fn school_spec_from_json(text: &str, inst: &Arc<Instance>) -> Result<SchoolSpec> {
    let doc: SchoolDoc = parse(text, "school spec")?;
    let caps = capacities(inst, &doc.capacities)?;
    for name in doc.priorities.keys() {
        inst.object_index(name)?;
    }
    let priorities = inst
        .objects()
        .iter()
        .map(|o| {
            let order = doc
                .priorities
                .get(o)
                .ok_or_else(|| Error::Parse(format!("no priority order for object `{o}`")))?;
            order.iter().map(|a| inst.agent_index(a)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    SchoolSpec::new(inst.clone(), caps, priorities)
}

pub fn school_spec_to_json(spec: &SchoolSpec) -> Value {
    let inst = spec.instance();
    let doc = SchoolDoc {
        capacities: inst
            .objects()
            .iter()
            .cloned()
            .zip(spec.capacities().iter().copied())
            .collect(),
        priorities: inst
            .objects()
            .iter()
            .cloned()
            .zip(spec.priorities().iter().map(|order| {
                order.iter().map(|&i| inst.agent_name(i).to_string()).collect()
            }))
            .collect(),
    };
    serde_json::to_value(doc).expect("school document serializes")
}

pub fn endowment_from_json(text: &str, inst: &Arc<Instance>) -> Result<Endowment> {
    let doc: BTreeMap<String, String> = parse(text, "endowment")?;
    for name in doc.keys() {
        inst.agent_index(name)?;
    }
    let objects = inst
        .agents()
        .iter()
        .map(|a| {
            let o = doc
                .get(a)
                .ok_or_else(|| Error::Parse(format!("no endowment for agent `{a}`")))?;
            inst.object_index(o)
        })
        .collect::<Result<Vec<_>>>()?;
    Endowment::new(inst.clone(), objects)
}

pub fn endowment_to_json(e: &Endowment) -> Value {
    let inst = e.instance();
    let map: Map<String, Value> = (0..inst.num_agents())
        .map(|i| (inst.agent_name(i).to_string(), json!(inst.object_name(e.object_of(i)))))
        .collect();
    Value::Object(map)
}

pub fn dictator_order_from_json(text: &str, inst: &Instance) -> Result<DictatorOrder> {
    let doc: Vec<String> = parse(text, "dictator order")?;
    let order = doc
        .iter()
        .map(|a| inst.agent_index(a))
        .collect::<Result<Vec<_>>>()?;
    DictatorOrder::new(inst, order)
}

pub fn dictator_order_to_json(inst: &Instance, order: &DictatorOrder) -> Value {
    json!(order.order().iter().map(|&i| inst.agent_name(i)).collect::<Vec<_>>())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarriageDoc {
    men: Vec<String>,
    women: Vec<String>,
}

pub fn marriage_spec_from_json(text: &str, inst: &Arc<Instance>) -> Result<MarriageSpec> {
    let doc: MarriageDoc = parse(text, "marriage spec")?;
    MarriageSpec::new(inst.clone(), agent_set(inst, &doc.men)?, agent_set(inst, &doc.women)?)
}

pub fn marriage_spec_to_json(spec: &MarriageSpec) -> Value {
    let inst = spec.instance();
    serde_json::to_value(MarriageDoc {
        men: inst.agent_names(spec.men()),
        women: inst.agent_names(spec.women()),
    })
    .expect("marriage document serializes")
}

pub fn trace_to_json(inst: &Instance, trace: &Trace) -> Value {
    json!(trace
        .steps
        .iter()
        .map(|s| json!({
            "allocation": allocation_to_json(inst, &s.allocation),
            "compromisers": agents_to_json(inst, s.compromisers),
        }))
        .collect::<Vec<_>>())
}

pub fn outcome_to_json(inst: &Instance, outcome: &Outcome, with_trace: bool) -> Value {
    let mut v = match outcome {
        Outcome::Final { allocation, .. } => json!({
            "status": "final",
            "allocation": allocation_to_json(inst, allocation),
        }),
        Outcome::Exhausted { agent, step, .. } => json!({
            "status": "exhausted",
            "agent": inst.agent_name(*agent),
            "step": step,
        }),
    };
    if with_trace {
        v["trace"] = trace_to_json(inst, outcome.trace());
    }
    v
}

pub fn witness_to_json(inst: &Instance, w: &Witness) -> Value {
    let a = |x: &Allocation| allocation_to_json(inst, x);
    let p = |q: &Profile| profile_to_json(inst, q);
    let s = |set: AgentSet| agents_to_json(inst, set);
    let name = |i: usize| json!(inst.agent_name(i));
    let mut v = match w {
        Witness::Exhausted {
            profile,
            agent,
            step,
        } => json!({"profile": p(profile), "agent": name(*agent), "step": step}),
        Witness::Unanimity { profile, outcome } => json!({"profile": p(profile), "outcome": a(outcome)}),
        Witness::Manipulation {
            profile,
            coalition,
            report,
            truthful,
            manipulated,
        } => json!({
            "profile": p(profile), "coalition": s(*coalition), "report": p(report),
            "truthful": a(truthful), "manipulated": a(manipulated),
        }),
        Witness::Bossy {
            profile,
            agent,
            report,
            truthful,
            manipulated,
        } => json!({
            "profile": p(profile), "agent": name(*agent), "report": p(report),
            "truthful": a(truthful), "manipulated": a(manipulated),
        }),
        Witness::Maskin {
            profile,
            transformed,
            before,
            after,
        } => json!({
            "profile": p(profile), "transformed": p(transformed),
            "before": a(before), "after": a(after),
        }),
        Witness::Pareto {
            profile,
            outcome,
            dominating,
        } => json!({"profile": p(profile), "outcome": a(outcome), "dominating": a(dominating)}),
        Witness::FixedCompromiser {
            mu,
            profiles,
            outcomes,
        } => json!({
            "mu": a(mu),
            "profiles": profiles.iter().map(p).collect::<Vec<_>>(),
            "outcomes": outcomes.iter().map(a).collect::<Vec<_>>(),
        }),
        Witness::CompromiserInvariance {
            mu,
            profile,
            compromisers,
            transformed,
            before,
            after,
        } => json!({
            "mu": a(mu), "profile": p(profile), "compromisers": s(*compromisers),
            "transformed": p(transformed), "before": a(before), "after": a(after),
        }),
        Witness::TableMismatch {
            profile,
            left,
            right,
        } => json!({"profile": p(profile), "left": a(left), "right": a(right)}),
        Witness::Forward { x, y, missing } => json!({"x": a(x), "y": a(y), "missing": s(*missing)}),
        Witness::Backward {
            agent,
            x,
            y,
            path,
            x_prime,
        } => json!({
            "agent": name(*agent), "x": a(x), "y": a(y),
            "path": path.iter().map(a).collect::<Vec<_>>(), "x_prime": a(x_prime),
        }),
        Witness::Cell { x, left, right } => json!({"x": a(x), "left": s(*left), "right": s(*right)}),
        Witness::Dominance {
            profile,
            agent,
            preferred,
            other,
        } => json!({
            "profile": p(profile), "agent": name(*agent),
            "preferred": a(preferred), "other": a(other),
        }),
    };
    v["kind"] = json!(w.kind());
    v
}

pub fn verdict_to_json(inst: &Instance, v: &Verdict) -> Value {
    json!({
        "holds": v.holds,
        "witness": v.witness.as_ref().map(|w| witness_to_json(inst, w)),
    })
}

pub fn report_to_json(inst: &Instance, r: &Report) -> Value {
    let hyp = |h: &Hypothesis| json!({"name": h.name, "verdict": verdict_to_json(inst, &h.verdict)});
    json!({
        "holds": r.holds(),
        "hypotheses": r.hypotheses.iter().map(hyp).collect::<Vec<_>>(),
        "conclusion": verdict_to_json(inst, &r.conclusion),
    })
}

pub fn summary_to_json(s: &EnumerationSummary) -> Value {
    json!({
        "count": s.count,
        "orbit_count": s.orbit_count,
        "mechanism_count": s.mechanism_count,
        "pruned_nodes": s.pruned_nodes,
        "not_implementable": s.not_implementable,
        "nodes": s.nodes,
        "complete": s.complete,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableDoc {
    agents: Vec<String>,
    objects: Vec<String>,
    /// Outcomes in profile order: lexicographic over the agents' rankings,
    /// first agent most significant.
    outcomes: Vec<Vec<String>>,
}

pub fn table_to_json(f: &MechanismTable) -> Value {
    let inst = f.instance();
    serde_json::to_value(TableDoc {
        agents: inst.agents().to_vec(),
        objects: inst.objects().to_vec(),
        outcomes: (0..f.len()).map(|k| inst.object_names(&f.outcome(k))).collect(),
    })
    .expect("table document serializes")
}

/// Reads a dense table. Without a constraint, its image is used as the
/// constraint.
pub fn table_from_json(text: &str, constraint: Option<&Constraint>) -> Result<MechanismTable> {
    let doc: TableDoc = parse(text, "mechanism table")?;
    let inst = Arc::new(Instance::new(doc.agents, doc.objects)?);
    if let Some(c) = constraint {
        if **c.instance() != *inst {
            return Err(Error::InstanceMismatch(
                "table and constraint name different agents or objects".into(),
            ));
        }
    }
    let space = Arc::new(ProfileSpace::new(&inst)?);
    if doc.outcomes.len() != space.len() {
        return Err(Error::Parse(format!(
            "table has {} outcomes, expected one per profile ({})",
            doc.outcomes.len(),
            space.len()
        )));
    }
    let codes = doc
        .outcomes
        .iter()
        .map(|x| inst.parse_allocation(x).map(|a| inst.encode(&a)))
        .collect::<Result<Vec<_>>>()?;
    let c = match constraint {
        Some(c) => c.clone(),
        None => Constraint::from_codes(inst, codes.iter().copied())?,
    };
    MechanismTable::new(c, space, codes)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOUSE: &str = r#"{"agents": ["1","2"], "objects": ["a","b"], "kind": "house"}"#;

    #[test]
    fn constraint_round_trip() {
        let c = constraint_from_json(HOUSE).unwrap();
        assert_eq!(c.num_feasible(), 2);
        let back = constraint_from_json(&constraint_to_json(&c).to_string()).unwrap();
        assert_eq!(back, c);
        let school = r#"{"agents":["1","2"],"objects":["a","b"],"kind":"school","capacities":{"a":2,"b":1}}"#;
        let c = constraint_from_json(school).unwrap();
        assert_eq!(constraint_from_json(&constraint_to_json(&c).to_string()).unwrap(), c);
    }

    #[test]
    fn listed_feasible_must_match_generator() {
        let bad = r#"{"agents":["1","2"],"objects":["a","b"],"kind":"house","feasible":[["a","b"]]}"#;
        assert!(constraint_from_json(bad).is_err());
    }

    #[test]
    fn alpha_errors_name_the_cell() {
        let c = constraint_from_json(HOUSE).unwrap();
        let missing = r#"{"cells": {"a,a": ["1"]}}"#;
        let e = alpha_from_json(missing, Some(&c)).unwrap_err();
        assert!(e.to_string().contains("b,b"), "{e}");
        let on_feasible = r#"{"cells": {"a,a": ["1"], "b,b": ["2"], "a,b": ["1"]}}"#;
        let e = alpha_from_json(on_feasible, Some(&c)).unwrap_err();
        assert!(e.to_string().contains("a,b"), "{e}");
        let unknown = r#"{"cells": {"a,a": ["9"], "b,b": ["2"]}}"#;
        assert!(matches!(alpha_from_json(unknown, Some(&c)), Err(Error::UnknownAgent(_))));
    }

    #[test]
    fn alpha_round_trip() {
        let c = constraint_from_json(HOUSE).unwrap();
        let a = alpha_from_json(r#"{"cells": {"a,a": ["1","2"], "b,b": ["2"]}}"#, Some(&c)).unwrap();
        let text = alpha_to_json(&a).to_string();
        assert_eq!(alpha_from_json(&text, Some(&c)).unwrap(), a);
        assert_eq!(alpha_from_json(&text, None).unwrap().cells(), a.cells());
    }

    #[test]
    fn profile_round_trip() {
        let c = constraint_from_json(HOUSE).unwrap();
        let inst = c.instance();
        let p = profile_from_json(r#"{"1": ["b","a"], "2": ["a","b"]}"#, inst).unwrap();
        assert_eq!(p.get(0).top(), 1);
        assert_eq!(profile_from_json(&profile_to_json(inst, &p).to_string(), inst).unwrap(), p);
        assert!(profile_from_json(r#"{"1": ["b"], "2": ["a","b"]}"#, inst).is_err());
        assert!(profile_from_json("{", inst).is_err());
    }
}
