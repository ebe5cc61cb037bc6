//! Discrete structural causal models.
//!
//! Every variable has a 0-based contiguous integer support. Exogenous
//! variables carry a prior; endogenous variables (nodes) carry a total
//! lookup table over the Cartesian product of their parents' supports.
//!
//! Cycles are admitted only when each one passes through a declared action
//! node. Such models are evaluated by a single forward pass in a fixed
//! evaluation order, in which a parent that has not been computed yet reads
//! its initial value `0`. Intervening on an action node cuts the cycle and
//! restores ordinary recursive semantics.

use std::collections::{BTreeSet, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Default upper bound on the number of joint exogenous states enumerated.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

const PRIOR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScmError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("invalid prior for `{name}`: {reason}")]
    InvalidPrior { name: String, reason: String },
    #[error("invalid equation for `{name}`: {reason}")]
    InvalidEquation { name: String, reason: String },
    #[error("cycle does not pass through an action node: {0}")]
    IllegalCycle(String),
    #[error("invalid evaluation order: {0}")]
    InvalidOrder(String),
    #[error("exogenous space has {size} joint states, cap is {cap}")]
    CapExceeded { size: u128, cap: usize },
    #[error("cycle survives intervention among {0}")]
    CyclicAfterIntervention(String),
    #[error("value {value} outside the support of `{name}`")]
    ValueOutOfSupport { name: String, value: usize },
    #[error("exogenous assignment has {got} entries, expected {expected}")]
    BadAssignment { got: usize, expected: usize },
    #[error("sample count must be at least 1")]
    EmptySample,
}

/// Index of an exogenous variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExoId(pub usize);

/// Index of an endogenous variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Exo(ExoId),
    Node(NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousVar {
    name: String,
    prior: Vec<f64>,
}

impl ExogenousVar {
    pub fn new(name: impl Into<String>, prior: Vec<f64>) -> Result<Self, ScmError> {
        let name = name.into();
        let bad = |reason: &str| ScmError::InvalidPrior { name: name.clone(), reason: reason.to_string() };
        if prior.is_empty() {
            return Err(bad("empty support"));
        }
        if prior.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(bad("probabilities must be finite and nonnegative"));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > PRIOR_TOLERANCE {
            return Err(bad(&format!("probabilities sum to {total}")));
        }
        Ok(Self { name, prior })
    }

    /// `bins` equiprobable values; the discretization used for continuous
    /// uniform priors.
    pub fn uniform(name: impl Into<String>, bins: usize) -> Result<Self, ScmError> {
        let p = if bins == 0 { 0.0 } else { 1.0 / bins as f64 };
        Self::new(name, vec![p; bins])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn support_size(&self) -> usize {
        self.prior.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralEquation {
    pub target: NodeId,
    pub parents: Vec<Var>,
    /// Row-major over parent values, first parent most significant.
    pub table: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
struct NodeDecl {
    name: String,
    support: usize,
}

/// A full assignment of exogenous and endogenous values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub exogenous: Vec<usize>,
    pub nodes: Vec<usize>,
}

impl Assignment {
    pub fn get(&self, var: Var) -> usize {
        match var {
            Var::Exo(ExoId(i)) => self.exogenous[i],
            Var::Node(NodeId(i)) => self.nodes[i],
        }
    }

    pub fn node(&self, id: NodeId) -> usize {
        self.nodes[id.0]
    }
}

/// One joint exogenous state with its prior probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub values: Vec<usize>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    exogenous: Vec<ExogenousVar>,
    nodes: Vec<NodeDecl>,
    equations: Vec<StructuralEquation>,
    actions: Vec<NodeId>,
    order: Vec<NodeId>,
    declared_order: Option<Vec<NodeId>>,
    cyclic: bool,
}

/// Incremental constructor for [`Scm`]. Parent names may refer to nodes
/// declared later; everything is resolved in [`ScmBuilder::build`].
#[derive(Debug, Default, Clone)]
pub struct ScmBuilder {
    exogenous: Vec<ExogenousVar>,
    nodes: Vec<(String, usize, Vec<String>, Vec<usize>)>,
    actions: Vec<String>,
    order: Option<Vec<String>>,
    pending_error: Option<ScmError>,
}

impl ScmBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn exogenous(mut self, name: &str, prior: Vec<f64>) -> Self {
        match ExogenousVar::new(name, prior) {
            Ok(v) => self.exogenous.push(v),
            Err(e) => {
                self.pending_error.get_or_insert(e);
            }
        }
        self
    }

    pub fn uniform_exogenous(self, name: &str, bins: usize) -> Self {
        let p = if bins == 0 { 0.0 } else { 1.0 / bins as f64 };
        self.exogenous(name, vec![p; bins])
    }

    pub fn node(mut self, name: &str, support: usize, parents: &[&str], table: Vec<usize>) -> Self {
        self.nodes.push((name.to_string(), support, parents.iter().map(|p| p.to_string()).collect(), table));
        self
    }

    /// Declares a node whose table is generated from `f` over all parent
    /// value tuples. Parent supports must already be known, so parents
    /// referenced here have to be declared earlier.
    pub fn node_fn(mut self, name: &str, support: usize, parents: &[&str], f: impl Fn(&[usize]) -> usize) -> Self {
        let mut sizes = Vec::with_capacity(parents.len());
        for p in parents {
            match self.support_of(p) {
                Some(s) => sizes.push(s),
                None => {
                    self.pending_error.get_or_insert(ScmError::UnknownVariable(p.to_string()));
                    return self;
                }
            }
        }
        let table = tuples(&sizes).map(|t| f(&t)).collect();
        self.node(name, support, parents, table)
    }

    pub fn action(mut self, name: &str) -> Self {
        self.actions.push(name.to_string());
        self
    }

    pub fn order(mut self, names: &[&str]) -> Self {
        self.order = Some(names.iter().map(|s| s.to_string()).collect());
        self
    }

    fn support_of(&self, name: &str) -> Option<usize> {
        self.exogenous
            .iter()
            .find(|e| e.name == name)
            .map(|e| e.support_size())
            .or_else(|| self.nodes.iter().find(|n| n.0 == name).map(|n| n.1))
    }

    pub fn build(self) -> Result<Scm, ScmError> {
        if let Some(e) = self.pending_error {
            return Err(e);
        }
        let nodes: Vec<NodeDecl> =
            self.nodes.iter().map(|(name, support, _, _)| NodeDecl { name: name.clone(), support: *support }).collect();
        let mut lookup = HashMap::new();
        for (i, e) in self.exogenous.iter().enumerate() {
            if lookup.insert(e.name.clone(), Var::Exo(ExoId(i))).is_some() {
                return Err(ScmError::DuplicateName(e.name.clone()));
            }
        }
        for (i, n) in nodes.iter().enumerate() {
            if lookup.insert(n.name.clone(), Var::Node(NodeId(i))).is_some() {
                return Err(ScmError::DuplicateName(n.name.clone()));
            }
        }
        let resolve = |name: &str| lookup.get(name).copied().ok_or_else(|| ScmError::UnknownVariable(name.to_string()));
        let resolve_node = |name: &str| match resolve(name)? {
            Var::Node(id) => Ok(id),
            Var::Exo(_) => Err(ScmError::UnknownVariable(name.to_string())),
        };

        let mut equations = Vec::with_capacity(nodes.len());
        for (i, (_, _, parents, table)) in self.nodes.into_iter().enumerate() {
            let parents = parents.iter().map(|p| resolve(p)).collect::<Result<Vec<_>, _>>()?;
            equations.push(StructuralEquation { target: NodeId(i), parents, table });
        }
        let actions = self.actions.iter().map(|a| resolve_node(a)).collect::<Result<Vec<_>, _>>()?;
        let declared_order =
            self.order.map(|o| o.iter().map(|n| resolve_node(n)).collect::<Result<Vec<_>, _>>()).transpose()?;
        Scm::from_parts(self.exogenous, nodes, equations, actions, declared_order)
    }
}

impl Scm {
    fn from_parts(
        exogenous: Vec<ExogenousVar>,
        nodes: Vec<NodeDecl>,
        equations: Vec<StructuralEquation>,
        mut actions: Vec<NodeId>,
        declared_order: Option<Vec<NodeId>>,
    ) -> Result<Self, ScmError> {
        actions.sort();
        actions.dedup();
        let mut scm = Scm { exogenous, nodes, equations, actions, order: Vec::new(), declared_order, cyclic: false };
        for (i, n) in scm.nodes.iter().enumerate() {
            if n.support == 0 {
                return Err(ScmError::InvalidEquation { name: n.name.clone(), reason: "empty support".into() });
            }
            let eq = &scm.equations[i];
            let expected: usize = eq.parents.iter().map(|p| scm.support(*p)).product();
            if eq.table.len() != expected {
                return Err(ScmError::InvalidEquation {
                    name: n.name.clone(),
                    reason: format!("table has {} entries, expected {expected}", eq.table.len()),
                });
            }
            if let Some(v) = eq.table.iter().find(|v| **v >= n.support) {
                return Err(ScmError::InvalidEquation {
                    name: n.name.clone(),
                    reason: format!("output {v} outside support of size {}", n.support),
                });
            }
        }

        match scm.topological_order(|_, _| false) {
            Ok(order) => scm.order = order,
            Err(_) => {
                scm.cyclic = true;
                // Only edges that close a cycle into an action node may point
                // backwards in the evaluation order.
                let reach: Vec<BTreeSet<NodeId>> =
                    (0..scm.nodes.len()).map(|i| scm.descendants(Var::Node(NodeId(i)))).collect();
                let actions = scm.actions.clone();
                let derived = scm
                    .topological_order(|p, t| actions.contains(&t) && reach[t.0].contains(&p))
                    .map_err(|left| ScmError::IllegalCycle(scm.names(&left)))?;
                scm.order = match &scm.declared_order {
                    Some(d) => {
                        scm.check_declared_order(d)?;
                        d.clone()
                    }
                    None => derived,
                };
            }
        }
        if let Some(d) = &scm.declared_order {
            if !scm.cyclic {
                scm.check_permutation(d)?;
            }
        }
        Ok(scm)
    }

    fn check_permutation(&self, order: &[NodeId]) -> Result<(), ScmError> {
        let set: BTreeSet<_> = order.iter().collect();
        if order.len() != self.nodes.len() || set.len() != order.len() {
            return Err(ScmError::InvalidOrder("order must list every endogenous variable exactly once".into()));
        }
        Ok(())
    }

    fn check_declared_order(&self, order: &[NodeId]) -> Result<(), ScmError> {
        self.check_permutation(order)?;
        let mut pos = vec![0; self.nodes.len()];
        for (k, id) in order.iter().enumerate() {
            pos[id.0] = k;
        }
        for eq in &self.equations {
            for p in &eq.parents {
                if let Var::Node(pid) = p {
                    if pos[pid.0] >= pos[eq.target.0] && !self.actions.contains(&eq.target) {
                        return Err(ScmError::InvalidOrder(format!(
                            "`{}` is evaluated before its parent `{}` but is not an action node",
                            self.nodes[eq.target.0].name, self.nodes[pid.0].name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Kahn's algorithm over node-to-node edges, skipping edges
    /// `parent -> target` for which `skip` holds. Ties are broken by node
    /// index. On failure returns the nodes that could not be placed (those
    /// on or downstream of a surviving cycle).
    fn topological_order(&self, skip: impl Fn(NodeId, NodeId) -> bool) -> Result<Vec<NodeId>, Vec<NodeId>> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for eq in &self.equations {
            for p in &eq.parents {
                if let Var::Node(pid) = p {
                    if skip(*pid, eq.target) {
                        continue;
                    }
                    indegree[eq.target.0] += 1;
                    children[pid.0].push(eq.target.0);
                }
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|i| indegree[*i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(NodeId(i));
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            let placed: BTreeSet<NodeId> = order.into_iter().collect();
            Err((0..n).map(NodeId).filter(|id| !placed.contains(id)).collect())
        }
    }

    fn names(&self, ids: &[NodeId]) -> String {
        ids.iter().map(|id| self.nodes[id.0].name.as_str()).collect::<Vec<_>>().join(", ")
    }

    pub fn exogenous(&self) -> &[ExogenousVar] {
        &self.exogenous
    }

    pub fn equations(&self) -> &[StructuralEquation] {
        &self.equations
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn var_name(&self, var: Var) -> &str {
        match var {
            Var::Exo(ExoId(i)) => &self.exogenous[i].name,
            Var::Node(id) => self.node_name(id),
        }
    }

    pub fn node_support(&self, id: NodeId) -> usize {
        self.nodes[id.0].support
    }

    pub fn support(&self, var: Var) -> usize {
        match var {
            Var::Exo(ExoId(i)) => self.exogenous[i].support_size(),
            Var::Node(id) => self.node_support(id),
        }
    }

    pub fn lookup(&self, name: &str) -> Result<Var, ScmError> {
        if let Some(i) = self.exogenous.iter().position(|e| e.name == name) {
            return Ok(Var::Exo(ExoId(i)));
        }
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .map(|i| Var::Node(NodeId(i)))
            .ok_or_else(|| ScmError::UnknownVariable(name.to_string()))
    }

    pub fn node_id(&self, name: &str) -> Result<NodeId, ScmError> {
        match self.lookup(name)? {
            Var::Node(id) => Ok(id),
            Var::Exo(_) => Err(ScmError::UnknownVariable(name.to_string())),
        }
    }

    pub fn actions(&self) -> &[NodeId] {
        &self.actions
    }

    pub fn is_action(&self, id: NodeId) -> bool {
        self.actions.contains(&id)
    }

    /// True when the full graph (no interventions) contains a cycle.
    pub fn is_cyclic(&self) -> bool {
        self.cyclic
    }

    /// The order used by forward passes.
    pub fn evaluation_order(&self) -> &[NodeId] {
        &self.order
    }

    pub fn declared_order(&self) -> Option<&[NodeId]> {
        self.declared_order.as_deref()
    }

    pub fn parents(&self, id: NodeId) -> &[Var] {
        &self.equations[id.0].parents
    }

    /// Endogenous children of `var`.
    pub fn children(&self, var: Var) -> Vec<NodeId> {
        self.equations.iter().filter(|eq| eq.parents.contains(&var)).map(|eq| eq.target).collect()
    }

    /// Strict descendants of `var` among endogenous nodes.
    pub fn descendants(&self, var: Var) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = self.children(var);
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(self.children(Var::Node(n)));
            }
        }
        seen
    }

    /// Strict ancestors of `id` (exogenous and endogenous).
    pub fn ancestors(&self, id: NodeId) -> BTreeSet<Var> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<Var> = self.parents(id).to_vec();
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                if let Var::Node(n) = v {
                    stack.extend(self.parents(n).iter().copied());
                }
            }
        }
        seen
    }

    fn joint_size(&self) -> u128 {
        self.exogenous.iter().fold(1u128, |acc, e| acc.saturating_mul(e.support_size() as u128))
    }

    /// Every joint exogenous state with its product-measure probability, in
    /// lexicographic order (first variable most significant).
    pub fn enumerate_exogenous(&self, cap: usize) -> Result<Vec<Realization>, ScmError> {
        let size = self.joint_size();
        if size > cap as u128 {
            return Err(ScmError::CapExceeded { size, cap });
        }
        let sizes: Vec<usize> = self.exogenous.iter().map(|e| e.support_size()).collect();
        Ok(tuples(&sizes)
            .map(|values| {
                let prob = values.iter().zip(&self.exogenous).map(|(v, e)| e.prior[*v]).product();
                Realization { values, prob }
            })
            .collect())
    }

    /// `n` i.i.d. draws from the exogenous prior. Bit-identical for equal
    /// `(seed, n)`.
    pub fn sample_exogenous(&self, seed: u64, n: usize) -> Result<Vec<Vec<usize>>, ScmError> {
        if n == 0 {
            return Err(ScmError::EmptySample);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dists: Vec<WeightedIndex<f64>> = self
            .exogenous
            .iter()
            .map(|e| {
                WeightedIndex::new(e.prior.iter().copied())
                    .map_err(|err| ScmError::InvalidPrior { name: e.name.clone(), reason: err.to_string() })
            })
            .collect::<Result<_, _>>()?;
        Ok((0..n).map(|_| dists.iter().map(|d| d.sample(&mut rng)).collect()).collect())
    }

    fn check_exogenous(&self, u: &[usize]) -> Result<(), ScmError> {
        if u.len() != self.exogenous.len() {
            return Err(ScmError::BadAssignment { got: u.len(), expected: self.exogenous.len() });
        }
        for (v, e) in u.iter().zip(&self.exogenous) {
            if *v >= e.support_size() {
                return Err(ScmError::ValueOutOfSupport { name: e.name.clone(), value: *v });
            }
        }
        Ok(())
    }

    fn check_interventions(&self, interventions: &[(NodeId, usize)]) -> Result<(), ScmError> {
        for &(id, value) in interventions {
            let Some(decl) = self.nodes.get(id.0) else {
                return Err(ScmError::UnknownVariable(format!("node #{}", id.0)));
            };
            if value >= decl.support {
                return Err(ScmError::ValueOutOfSupport { name: decl.name.clone(), value });
            }
        }
        Ok(())
    }

    fn surgery_mask(&self, interventions: &[(NodeId, usize)]) -> Vec<bool> {
        let mut cut = vec![false; self.nodes.len()];
        for (id, _) in interventions {
            cut[id.0] = true;
        }
        cut
    }

    /// Solves the model under `do(interventions)`. Fails if a cycle survives
    /// the surgery.
    pub fn evaluate(&self, u: &[usize], interventions: &[(NodeId, usize)]) -> Result<Assignment, ScmError> {
        self.check_exogenous(u)?;
        self.check_interventions(interventions)?;
        let order = if self.cyclic {
            let cut = self.surgery_mask(interventions);
            self.topological_order(|_, t| cut[t.0])
                .map_err(|left| ScmError::CyclicAfterIntervention(self.names(&left)))?
        } else {
            self.order.clone()
        };
        Ok(self.forward_pass(u, interventions, &order))
    }

    /// Like [`Scm::evaluate`], but a cycle that survives the intervention is
    /// resolved by one forward pass in the model's evaluation order. This is
    /// the semantics of an agent's natural mechanism in cyclic models.
    pub fn propagate(&self, u: &[usize], interventions: &[(NodeId, usize)]) -> Result<Assignment, ScmError> {
        self.check_exogenous(u)?;
        self.check_interventions(interventions)?;
        if !self.cyclic {
            return Ok(self.forward_pass(u, interventions, &self.order));
        }
        let cut = self.surgery_mask(interventions);
        let order = self.topological_order(|_, t| cut[t.0]).unwrap_or_else(|_| self.order.clone());
        Ok(self.forward_pass(u, interventions, &order))
    }

    fn forward_pass(&self, u: &[usize], interventions: &[(NodeId, usize)], order: &[NodeId]) -> Assignment {
        let mut nodes = vec![0usize; self.nodes.len()];
        let mut forced = vec![false; self.nodes.len()];
        for &(id, v) in interventions {
            nodes[id.0] = v;
            forced[id.0] = true;
        }
        for id in order {
            if forced[id.0] {
                continue;
            }
            let eq = &self.equations[id.0];
            let mut index = 0;
            for p in &eq.parents {
                let (value, size) = match p {
                    Var::Exo(ExoId(i)) => (u[*i], self.exogenous[*i].support_size()),
                    Var::Node(NodeId(i)) => (nodes[*i], self.nodes[*i].support),
                };
                index = index * size + value;
            }
            nodes[id.0] = eq.table[index];
        }
        Assignment { exogenous: u.to_vec(), nodes }
    }

    /// The value `action` takes under the un-intervened mechanism: the
    /// agent's instinct.
    pub fn natural_instinct(&self, u: &[usize], action: NodeId) -> Result<usize, ScmError> {
        self.check_interventions(&[(action, 0)])?;
        Ok(self.propagate(u, &[])?.node(action))
    }
}

/// Iterator over all tuples of a mixed-radix counter, last digit fastest.
pub(crate) fn tuples(sizes: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = sizes.iter().product();
    let mut current = vec![0usize; sizes.len()];
    (0..total).map(move |k| {
        if k > 0 {
            for d in (0..sizes.len()).rev() {
                current[d] += 1;
                if current[d] < sizes[d] {
                    break;
                }
                current[d] = 0;
            }
        }
        current.clone()
    })
}
