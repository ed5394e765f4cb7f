//! The Markov chain induced by a fixed policy: stationary distribution and
//! derived expectations.

use crate::error::SolverError;
use crate::model::StateSpace;
use crate::solver::{CompiledMdp, Policy};

/// Row-sparse transition matrix over the canonical state order.
#[derive(Debug, Clone)]
pub struct InducedChain {
    pub rows: Vec<Vec<(u32, f64)>>,
}

impl InducedChain {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `out = pi * P` (left multiplication).
    pub fn propagate(&self, pi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (s, row) in self.rows.iter().enumerate() {
            let w = pi[s];
            if w == 0.0 {
                continue;
            }
            for &(t, p) in row {
                out[t as usize] += w * p;
            }
        }
    }
}

/// Builds the chain a policy induces on the MDP: row `s` is the transition
/// distribution of `(s, policy(s))`.
pub fn induced_chain(mdp: &CompiledMdp, policy: &Policy) -> InducedChain {
    let rows = (0..mdp.len())
        .map(|s| mdp.row(s, policy.action(s)).to_vec())
        .collect();
    InducedChain { rows }
}

/// Settings for the stationary-distribution power method.
#[derive(Debug, Clone)]
pub struct StationaryOptions {
    /// Stop when successive iterates differ by less than this in L1.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// The result must satisfy `||pi P - pi||_1` below this bound.
    pub residual_bound: f64,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 2_000_000,
            residual_bound: 1e-8,
        }
    }
}

/// Stationary distribution of the chain, from a uniform start.
pub fn stationary_distribution(
    chain: &InducedChain,
    opts: &StationaryOptions,
) -> Result<Vec<f64>, SolverError> {
    stationary_distribution_warm(chain, opts, None)
}

/// Stationary distribution with an optional warm start.
///
/// Requires a unique terminal communicating class; reducible chains with two
/// or more are rejected with a diagnosis. Iterates `pi <- pi (I + P) / 2`
/// (same fixed point as `P`, immune to periodicity) until the L1 change
/// drops below tolerance, then verifies the residual against `P` itself.
pub fn stationary_distribution_warm(
    chain: &InducedChain,
    opts: &StationaryOptions,
    warm_start: Option<&[f64]>,
) -> Result<Vec<f64>, SolverError> {
    let n = chain.len();
    check_single_recurrent_class(chain)?;

    let mut pi = match warm_start {
        Some(w) if w.len() == n && w.iter().all(|&x| x >= 0.0) && w.iter().sum::<f64>() > 0.0 => {
            let total: f64 = w.iter().sum();
            w.iter().map(|&x| x / total).collect::<Vec<f64>>()
        }
        _ => vec![1.0 / n as f64; n],
    };
    let mut product = vec![0.0; n];

    for iteration in 1..=opts.max_iterations {
        chain.propagate(&pi, &mut product);
        let mut change = 0.0;
        let mut total = 0.0;
        for s in 0..n {
            let next = 0.5 * (pi[s] + product[s]);
            change += (next - pi[s]).abs();
            pi[s] = next;
            total += next;
        }
        // Guard against floating-point drift of the simplex constraint.
        if (total - 1.0).abs() > 1e-13 {
            pi.iter_mut().for_each(|x| *x /= total);
        }
        if change < opts.tolerance {
            chain.propagate(&pi, &mut product);
            let residual: f64 = pi
                .iter()
                .zip(&product)
                .map(|(a, b)| (a - b).abs())
                .sum();
            if residual < opts.residual_bound {
                return Ok(pi);
            }
            return Err(SolverError::StationaryDiverged {
                iterations: iteration,
                residual,
            });
        }
    }
    let residual: f64 = {
        chain.propagate(&pi, &mut product);
        pi.iter().zip(&product).map(|(a, b)| (a - b).abs()).sum()
    };
    Err(SolverError::StationaryDiverged {
        iterations: opts.max_iterations,
        residual,
    })
}

/// Expected per-class call counts under a distribution over states.
pub fn expected_calls(distribution: &[f64], space: &StateSpace) -> Vec<f64> {
    let k = space.classes().len();
    let mut c = vec![0.0; k];
    for (s, &p) in distribution.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (i, &x) in space.state(s).occupancy.iter().enumerate() {
            c[i] += p * f64::from(x);
        }
    }
    c
}

/// Rejects chains with more than one terminal strongly connected component.
fn check_single_recurrent_class(chain: &InducedChain) -> Result<(), SolverError> {
    let components = tarjan_scc(&chain.rows);
    let mut component_of = vec![usize::MAX; chain.len()];
    for (c, members) in components.iter().enumerate() {
        for &s in members {
            component_of[s] = c;
        }
    }
    let mut terminal: Vec<usize> = Vec::new();
    'outer: for (c, members) in components.iter().enumerate() {
        for &s in members {
            for &(t, _) in &chain.rows[s] {
                if component_of[t as usize] != c {
                    continue 'outer;
                }
            }
        }
        terminal.push(c);
    }
    if terminal.len() > 1 {
        return Err(SolverError::MultipleRecurrentClasses {
            count: terminal.len(),
            first_a: components[terminal[0]][0],
            first_b: components[terminal[1]][0],
        });
    }
    Ok(())
}

/// Iterative Tarjan over the positive-probability edge set.
fn tarjan_scc(rows: &[Vec<(u32, f64)>]) -> Vec<Vec<usize>> {
    let n = rows.len();
    let mut index = vec![usize::MAX; n];
    let mut lowlink = vec![usize::MAX; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut components = Vec::new();

    // (node, next edge position) — explicit DFS stack.
    let mut work: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        work.push((root, 0));
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut edge)) = work.last_mut() {
            if *edge < rows[v].len() {
                let w = rows[v][*edge].0 as usize;
                *edge += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
                if lowlink[v] == index[v] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    component.sort_unstable();
                    components.push(component);
                }
            }
        }
    }
    components
}
