use std::sync::Arc;

use crate::constraint::Constraint;
use crate::error::Result;
use crate::instance::{AgentSet, Allocation, Instance};
use crate::preference::Profile;

/// A marriage market: objects are the agents themselves, holding oneself
/// means staying single.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarriageSpec {
    instance: Arc<Instance>,
    men: AgentSet,
    women: AgentSet,
}

impl MarriageSpec {
    pub fn new(instance: Arc<Instance>, men: AgentSet, women: AgentSet) -> Result<Self> {
        // validates the partition and the object names
        Constraint::two_sided(instance.clone(), men, women)?;
        Ok(MarriageSpec {
            instance,
            men,
            women,
        })
    }

    pub fn instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    pub fn men(&self) -> AgentSet {
        self.men
    }

    pub fn women(&self) -> AgentSet {
        self.women
    }

    pub fn constraint(&self) -> Constraint {
        Constraint::two_sided(self.instance.clone(), self.men, self.women)
            .expect("validated on construction")
    }
}

/// Man-proposing deferred acceptance.
pub fn marriage_da(spec: &MarriageSpec, p: &Profile) -> Allocation {
    let n = p.len();
    let rankings: Vec<Vec<usize>> = (0..n).map(|i| p.get(i).ranking().collect()).collect();
    let mut next = vec![0usize; n];
    let mut held: Vec<Option<usize>> = vec![None; n];
    let mut single = AgentSet::EMPTY;
    let mut free: Vec<usize> = spec.men.iter().collect();
    while let Some(m) = free.pop() {
        loop {
            let w = rankings[m][next[m]];
            next[m] += 1;
            if w == m {
                single = single.with(m);
                break;
            }
            if !spec.women.contains(w) || !p.get(w).prefers(m, w) {
                continue;
            }
            match held[w] {
                None => {
                    held[w] = Some(m);
                    break;
                }
                Some(h) if p.get(w).prefers(m, h) => {
                    held[w] = Some(m);
                    free.push(h);
                    break;
                }
                Some(_) => {}
            }
        }
    }
    let mut x = Allocation::new(0..n);
    for w in spec.women.iter() {
        if let Some(m) = held[w] {
            x.set(w, m);
            x.set(m, w);
        }
    }
    debug_assert!(single.iter().all(|m| x.get(m) == m));
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preference::Preference;

    #[test]
    fn two_by_two() {
        let inst = Arc::new(Instance::new(["m1", "m2", "w1", "w2"], ["m1", "m2", "w1", "w2"]).unwrap());
        let spec = MarriageSpec::new(inst, AgentSet::from_agents([0, 1]), AgentSet::from_agents([2, 3])).unwrap();
        let pr = |r: [usize; 4]| Preference::new(r).unwrap();
        // both men want w1; w1 prefers m2
        let p = Profile::new(vec![
            pr([2, 3, 0, 1]),
            pr([2, 3, 1, 0]),
            pr([1, 0, 2, 3]),
            pr([0, 1, 3, 2]),
        ])
        .unwrap();
        assert_eq!(marriage_da(&spec, &p), Allocation::new([3, 2, 1, 0]));
        assert!(spec.constraint().contains(&marriage_da(&spec, &p)));
        // w2 prefers being single to m1
        let q = p.with(3, pr([3, 0, 1, 2]));
        assert_eq!(marriage_da(&spec, &q), Allocation::new([0, 2, 1, 3]));
    }
}
