//! Discrete Bayesian network over the label and hidden-state nodes: DAG,
//! conditional probability tables, exact enumeration queries and ancestral
//! sampling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gauss::{log_normalize, logsumexp};

/// CPT entries are floored at this value before taking logs.
pub const CPT_LOG_FLOOR: f64 = 1e-12;

/// Number of joint configurations of the given cardinalities.
pub fn config_count(cards: &[usize]) -> usize {
    cards.iter().product()
}

/// Flat index of a configuration; the last variable varies fastest.
pub fn flat_index(cards: &[usize], config: &[usize]) -> usize {
    debug_assert_eq!(cards.len(), config.len());
    let mut idx = 0;
    for (c, v) in cards.iter().zip(config) {
        debug_assert!(v < c);
        idx = idx * c + v;
    }
    idx
}

/// Visits every configuration in flat-index order, reusing one buffer.
pub fn for_each_config(cards: &[usize], mut f: impl FnMut(&[usize])) {
    if cards.iter().any(|&c| c == 0) {
        return;
    }
    let mut config = vec![0usize; cards.len()];
    loop {
        f(&config);
        let mut pos = cards.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            config[pos] += 1;
            if config[pos] < cards[pos] {
                break;
            }
            config[pos] = 0;
        }
    }
}

/// All configurations as owned vectors, in flat-index order.
pub fn all_configs(cards: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(config_count(cards));
    for_each_config(cards, |c| out.push(c.to_vec()));
    out
}

/// A node of the discrete network.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    pub cardinality: usize,
}

/// Conditional probability table for one node.
///
/// Rows are indexed by the parent configuration (parents sorted ascending by
/// node index, last parent varying fastest); columns by the node's value.
/// Every row sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    cols: usize,
    values: Vec<f64>,
}

impl Cpt {
    pub fn new(cols: usize, values: Vec<f64>) -> Result<Self> {
        if cols == 0 || values.is_empty() || values.len() % cols != 0 {
            return Err(Error::DimensionMismatch {
                context: "Cpt::new",
                expected: cols.max(1),
                actual: values.len(),
            });
        }
        let cpt = Self { cols, values };
        cpt.validate()?;
        Ok(cpt)
    }

    /// Single-row table (a root node's marginal).
    pub fn from_row(row: Vec<f64>) -> Result<Self> {
        Self::new(row.len(), row)
    }

    /// Normalizes nonnegative counts row-wise, adding `pseudocount` to every
    /// cell first.
    pub fn from_counts(cols: usize, counts: &[f64], pseudocount: f64) -> Result<Self> {
        if cols == 0 || counts.len() % cols != 0 {
            return Err(Error::DimensionMismatch {
                context: "Cpt::from_counts",
                expected: cols.max(1),
                actual: counts.len(),
            });
        }
        let mut values = Vec::with_capacity(counts.len());
        for row in counts.chunks_exact(cols) {
            let total: f64 = row.iter().sum::<f64>() + pseudocount * cols as f64;
            for &c in row {
                values.push((c + pseudocount) / total);
            }
        }
        Self::new(cols, values)
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.cols
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn prob(&self, row: usize, value: usize) -> f64 {
        self.values[row * self.cols + value]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    fn validate(&self) -> Result<()> {
        for (r, row) in self.values.chunks_exact(self.cols).enumerate() {
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidConfig {
                    message: format!("CPT row {r} has a negative or non-finite entry"),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidConfig {
                    message: format!("CPT row {r} sums to {sum}, expected 1"),
                });
            }
        }
        Ok(())
    }
}

/// A DAG with per-node CPTs over discrete variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteNetwork {
    nodes: Vec<NodeSpec>,
    parents: Vec<Vec<usize>>,
    cpts: Vec<Cpt>,
}

impl DiscreteNetwork {
    pub fn new(nodes: Vec<NodeSpec>, parents: Vec<Vec<usize>>, cpts: Vec<Cpt>) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::EmptyInput {
                context: "DiscreteNetwork::new",
            });
        }
        if parents.len() != n || cpts.len() != n {
            return Err(Error::DimensionMismatch {
                context: "DiscreteNetwork node lists",
                expected: n,
                actual: parents.len().min(cpts.len()),
            });
        }
        if nodes.iter().any(|s| s.cardinality == 0) {
            return Err(Error::InvalidConfig {
                message: "node with cardinality 0".into(),
            });
        }
        let mut parents = parents;
        for (v, ps) in parents.iter_mut().enumerate() {
            ps.sort_unstable();
            ps.dedup();
            if ps.iter().any(|&u| u >= n || u == v) {
                return Err(Error::InvalidConfig {
                    message: format!("node {v} has an invalid parent"),
                });
            }
            let rows: usize = ps.iter().map(|&u| nodes[u].cardinality).product();
            if cpts[v].cols() != nodes[v].cardinality || cpts[v].rows() != rows {
                return Err(Error::DimensionMismatch {
                    context: "CPT shape",
                    expected: rows * nodes[v].cardinality,
                    actual: cpts[v].rows() * cpts[v].cols(),
                });
            }
        }
        let net = Self {
            nodes,
            parents,
            cpts,
        };
        net.topological_order()?; // acyclicity
        Ok(net)
    }

    /// Network with no edges; each node gets the given marginal row.
    pub fn fully_disconnected(nodes: Vec<NodeSpec>, marginals: Vec<Vec<f64>>) -> Result<Self> {
        let parents = vec![Vec::new(); nodes.len()];
        let cpts = marginals
            .into_iter()
            .map(Cpt::from_row)
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes, parents, cpts)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, v: usize) -> &NodeSpec {
        &self.nodes[v]
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.nodes.iter().map(|s| s.cardinality).collect()
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn cpt(&self, v: usize) -> &Cpt {
        &self.cpts[v]
    }

    /// Sorted `(parent, child)` pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (v, ps) in self.parents.iter().enumerate() {
            for &u in ps {
                out.push((u, v));
            }
        }
        out.sort_unstable();
        out
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|s| s.name == name)
    }

    /// Number of independent CPT parameters.
    pub fn dim_params(&self) -> usize {
        (0..self.num_nodes())
            .map(|v| (self.nodes[v].cardinality - 1) * self.cpts[v].rows())
            .sum()
    }

    /// A topological order, or an error if the edge relation has a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.num_nodes();
        let mut indegree = vec![0usize; n];
        for ps in &self.parents {
            for _ in ps.iter() {}
        }
        for v in 0..n {
            indegree[v] = self.parents[v].len();
        }
        let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        ready.sort_unstable();
        let mut order = Vec::with_capacity(n);
        let mut children = vec![Vec::new(); n];
        for (v, ps) in self.parents.iter().enumerate() {
            for &u in ps {
                children[u].push(v);
            }
        }
        while let Some(v) = ready.pop() {
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(c);
                }
            }
        }
        if order.len() != n {
            return Err(Error::InvalidConfig {
                message: "edge relation has a cycle".into(),
            });
        }
        Ok(order)
    }

    /// Row index into node `v`'s CPT for the given full configuration.
    pub fn cpt_row_index(&self, v: usize, config: &[usize]) -> usize {
        let mut row = 0;
        for &u in &self.parents[v] {
            row = row * self.nodes[u].cardinality + config[u];
        }
        row
    }

    /// `sum_v ln P(config[v] | parents)`, with entries floored at 1e-12.
    pub fn log_joint(&self, config: &[usize]) -> Result<f64> {
        if config.len() != self.num_nodes() {
            return Err(Error::DimensionMismatch {
                context: "DiscreteNetwork::log_joint",
                expected: self.num_nodes(),
                actual: config.len(),
            });
        }
        let mut acc = 0.0;
        for v in 0..self.num_nodes() {
            if config[v] >= self.nodes[v].cardinality {
                return Err(Error::IndexOutOfRange {
                    context: "DiscreteNetwork::log_joint",
                    index: config[v],
                    size: self.nodes[v].cardinality,
                });
            }
            let row = self.cpt_row_index(v, config);
            acc += self.cpts[v].prob(row, config[v]).max(CPT_LOG_FLOOR).ln();
        }
        Ok(acc)
    }

    /// The full log-joint table over all configurations, in flat-index order.
    pub fn log_joint_table(&self) -> Vec<f64> {
        let cards = self.cardinalities();
        let mut table = Vec::with_capacity(config_count(&cards));
        for_each_config(&cards, |cfg| {
            table.push(self.log_joint(cfg).expect("in-range enumeration"));
        });
        table
    }

    /// Exact conditional `P(target | clamp)` by enumeration of the network
    /// alone (no continuous evidence).
    pub fn conditional(&self, target: usize, clamp: &[(usize, usize)]) -> Result<Vec<f64>> {
        self.check_clamp(clamp)?;
        if target >= self.num_nodes() {
            return Err(Error::IndexOutOfRange {
                context: "conditional target",
                index: target,
                size: self.num_nodes(),
            });
        }
        let cards = self.cardinalities();
        let mut mass = vec![0.0f64; self.nodes[target].cardinality];
        for_each_config(&cards, |cfg| {
            if clamp.iter().all(|&(v, val)| cfg[v] == val) {
                mass[cfg[target]] += self.log_joint(cfg).expect("in-range").exp();
            }
        });
        let total: f64 = mass.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidConfig {
                message: "clamped configuration has zero probability".into(),
            });
        }
        for m in &mut mass {
            *m /= total;
        }
        Ok(mass)
    }

    /// Exact joint `P(a, b)` marginalized over all other nodes; sums to 1.
    pub fn joint_pair(&self, a: usize, b: usize) -> Result<Vec<Vec<f64>>> {
        for &v in &[a, b] {
            if v >= self.num_nodes() {
                return Err(Error::IndexOutOfRange {
                    context: "joint_pair node",
                    index: v,
                    size: self.num_nodes(),
                });
            }
        }
        let cards = self.cardinalities();
        let mut table = vec![vec![0.0f64; self.nodes[b].cardinality]; self.nodes[a].cardinality];
        for_each_config(&cards, |cfg| {
            table[cfg[a]][cfg[b]] += self.log_joint(cfg).expect("in-range").exp();
        });
        Ok(table)
    }

    pub(crate) fn check_clamp(&self, clamp: &[(usize, usize)]) -> Result<()> {
        for &(v, val) in clamp {
            if v >= self.num_nodes() {
                return Err(Error::IndexOutOfRange {
                    context: "clamp node",
                    index: v,
                    size: self.num_nodes(),
                });
            }
            if val >= self.nodes[v].cardinality {
                return Err(Error::IndexOutOfRange {
                    context: "clamp value",
                    index: val,
                    size: self.nodes[v].cardinality,
                });
            }
        }
        Ok(())
    }

    /// One ancestral sample of all nodes.
    pub fn sample_config(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let order = self.topological_order().expect("validated DAG");
        let mut config = vec![0usize; self.num_nodes()];
        for &v in &order {
            let row = self.cpt_row_index(v, &config);
            config[v] = sample_categorical(self.cpts[v].row(row), rng);
        }
        config
    }
}

/// Categorical draw from a probability row.
pub(crate) fn sample_categorical(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// A normalized log-probability table over the joint configurations of a set
/// of discrete nodes. Entries outside a clamp are `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePosterior {
    cards: Vec<usize>,
    log_table: Vec<f64>,
}

impl DiscretePosterior {
    /// Normalizes the given unnormalized log table.
    pub fn from_unnormalized(cards: Vec<usize>, mut log_table: Vec<f64>) -> Result<Self> {
        if log_table.len() != config_count(&cards) {
            return Err(Error::DimensionMismatch {
                context: "DiscretePosterior table size",
                expected: config_count(&cards),
                actual: log_table.len(),
            });
        }
        log_normalize(&mut log_table)?;
        Ok(Self { cards, log_table })
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn log_table(&self) -> &[f64] {
        &self.log_table
    }

    pub fn log_prob(&self, config: &[usize]) -> f64 {
        self.log_table[flat_index(&self.cards, config)]
    }

    /// Linear-space marginal over one node.
    pub fn marginal(&self, node: usize) -> Vec<f64> {
        let mut out = vec![0.0f64; self.cards[node]];
        let mut i = 0;
        for_each_config(&self.cards, |cfg| {
            let lp = self.log_table[i];
            if lp > f64::NEG_INFINITY {
                out[cfg[node]] += lp.exp();
            }
            i += 1;
        });
        out
    }

    /// Linear-space marginal over a pair of nodes.
    pub fn marginal_pair(&self, a: usize, b: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0f64; self.cards[b]]; self.cards[a]];
        let mut i = 0;
        for_each_config(&self.cards, |cfg| {
            let lp = self.log_table[i];
            if lp > f64::NEG_INFINITY {
                out[cfg[a]][cfg[b]] += lp.exp();
            }
            i += 1;
        });
        out
    }

    /// Checks the normalization invariant.
    pub fn validate(&self) -> Result<()> {
        let z = logsumexp(&self.log_table)?;
        if z.abs() > 1e-9 {
            return Err(Error::InvalidConfig {
                message: format!("posterior table normalizer off by {z}"),
            });
        }
        Ok(())
    }
}
