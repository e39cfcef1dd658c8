//! Dependency trees and maximum spanning arborescence decoding.

use crate::error::{Error, Result};
use crate::scores::{is_self_arc, ScoreMatrix};
use crate::tensor::DenseTensor;

/// A dependency tree over `w` tokens.
///
/// `heads[i]` is the head of token `i + 1`: `0` for the root, `j` for token `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseTree {
    heads: Vec<usize>,
}

impl ParseTree {
    /// Validates that `heads` describes a tree rooted at the artificial root.
    pub fn new(heads: Vec<usize>) -> Result<Self> {
        validate_heads(&heads)?;
        Ok(ParseTree { heads })
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn into_heads(self) -> Vec<usize> {
        self.heads
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// Sum of the selected edge scores.
    pub fn score(&self, scores: &ScoreMatrix) -> f64 {
        self.heads
            .iter()
            .enumerate()
            .map(|(i, &h)| scores.get(i, h))
            .sum()
    }
}

fn validate_heads(heads: &[usize]) -> Result<()> {
    let w = heads.len();
    if w == 0 {
        return Err(Error::Validity {
            row: 0,
            detail: "empty sentence".into(),
        });
    }
    for (i, &h) in heads.iter().enumerate() {
        if h > w {
            return Err(Error::Validity {
                row: i,
                detail: format!("head {h} out of range 0..={w}"),
            });
        }
        if h == i + 1 {
            return Err(Error::Validity {
                row: i,
                detail: "token is its own head".into(),
            });
        }
    }
    // 0 = unvisited, 1 = on current path, 2 = reaches root
    let mut state = vec![0u8; w + 1];
    state[0] = 2;
    for start in 1..=w {
        let mut path = Vec::new();
        let mut node = start;
        while state[node] == 0 {
            state[node] = 1;
            path.push(node);
            node = heads[node - 1];
        }
        if state[node] == 1 {
            return Err(Error::Validity {
                row: node - 1,
                detail: "cycle in head assignment".into(),
            });
        }
        for n in path {
            state[n] = 2;
        }
    }
    Ok(())
}

/// Binary `w × (w+1)` parse matrix: `M[i][j] = 1` iff `heads[i] = j`.
pub fn heads_to_matrix(heads: &[usize]) -> Result<DenseTensor> {
    validate_heads(heads)?;
    let w = heads.len();
    let mut m = DenseTensor::zeros(&[w, w + 1]);
    for (i, &h) in heads.iter().enumerate() {
        m.set(&[i, h], 1.0);
    }
    Ok(m)
}

/// Inverse of [`heads_to_matrix`].
pub fn matrix_to_heads(m: &DenseTensor) -> Result<Vec<usize>> {
    let shape = m.shape();
    if shape.len() != 2 || shape[1] != shape[0] + 1 {
        return Err(Error::shape(format!(
            "parse matrix must be w x (w+1), got {shape:?}"
        )));
    }
    let mut heads = Vec::with_capacity(shape[0]);
    for i in 0..shape[0] {
        let row = m.row(i);
        let ones: Vec<usize> = row
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v == 1.0)
            .map(|(j, _)| j)
            .collect();
        let others = row.iter().any(|&v| v != 0.0 && v != 1.0);
        if ones.len() != 1 || others {
            return Err(Error::Validity {
                row: i,
                detail: "row is not one-hot".into(),
            });
        }
        heads.push(ones[0]);
    }
    validate_heads(&heads)?;
    Ok(heads)
}

/// Maximum spanning arborescence rooted at the artificial root.
///
/// Self-arc cells are never selected. Among equally scored candidate heads
/// the lower index wins, so the result is deterministic.
pub fn decode(scores: &ScoreMatrix) -> ParseTree {
    let w = scores.len();
    let n = w + 1;
    // graph[h][d]: edge from head h to dependent d over nodes 0..=w
    let mut graph = vec![vec![f64::NEG_INFINITY; n]; n];
    for d in 1..n {
        for h in 0..n {
            if !is_self_arc(d - 1, h) {
                graph[h][d] = scores.get(d - 1, h);
            }
        }
    }
    let parents = chu_liu_edmonds(&graph);
    let heads = parents[1..].to_vec();
    ParseTree::new(heads).expect("Chu-Liu-Edmonds yields an arborescence")
}

/// Returns the parent of every node of a dense graph rooted at node 0;
/// entry 0 is meaningless.
fn chu_liu_edmonds(graph: &[Vec<f64>]) -> Vec<usize> {
    let n = graph.len();
    let mut best = vec![0usize; n];
    for d in 1..n {
        let mut arg = usize::MAX;
        let mut max = f64::NEG_INFINITY;
        for (h, row) in graph.iter().enumerate() {
            if h != d && (arg == usize::MAX || row[d] > max) {
                arg = h;
                max = row[d];
            }
        }
        best[d] = arg;
    }

    let Some(cycle) = find_cycle(&best) else {
        return best;
    };

    let mut in_cycle = vec![false; n];
    for &c in &cycle {
        in_cycle[c] = true;
    }
    let cycle_score: f64 = cycle.iter().map(|&c| graph[best[c]][c]).sum();

    // Contracted graph: non-cycle nodes keep their relative order, the cycle
    // becomes the last node.
    let outside: Vec<usize> = (0..n).filter(|&v| !in_cycle[v]).collect();
    let m = outside.len() + 1;
    let cnode = m - 1;
    let mut sub = vec![vec![f64::NEG_INFINITY; m]; m];
    // enter[u] = cycle node entered by the best edge from outside node u
    let mut enter = vec![usize::MAX; m];
    // leave[v] = cycle node that is the best head of outside node v
    let mut leave = vec![usize::MAX; m];

    for (a, &u) in outside.iter().enumerate() {
        for (b, &v) in outside.iter().enumerate() {
            if a != b {
                sub[a][b] = graph[u][v];
            }
        }
        for &c in &cycle {
            let into = graph[u][c] - graph[best[c]][c] + cycle_score;
            if enter[a] == usize::MAX || into > sub[a][cnode] || (into == sub[a][cnode] && c < enter[a]) {
                sub[a][cnode] = into;
                enter[a] = c;
            }
            let out = graph[c][u];
            if leave[a] == usize::MAX || out > sub[cnode][a] || (out == sub[cnode][a] && c < leave[a]) {
                sub[cnode][a] = out;
                leave[a] = c;
            }
        }
    }

    let sub_parents = chu_liu_edmonds(&sub);

    let mut parents = best.clone();
    for (b, &v) in outside.iter().enumerate() {
        if b == 0 {
            continue;
        }
        let p = sub_parents[b];
        parents[v] = if p == cnode { leave[b] } else { outside[p] };
    }
    let head_of_cycle = sub_parents[cnode];
    let entered = enter[head_of_cycle];
    parents[entered] = outside[head_of_cycle];
    parents
}

fn find_cycle(parents: &[usize]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut state = vec![0u8; n];
    state[0] = 2;
    for start in 1..n {
        let mut path = Vec::new();
        let mut node = start;
        while state[node] == 0 {
            state[node] = 1;
            path.push(node);
            node = parents[node];
        }
        if state[node] == 1 {
            let pos = path.iter().position(|&p| p == node).unwrap();
            let mut cycle = path[pos..].to_vec();
            cycle.sort_unstable();
            return Some(cycle);
        }
        for p in path {
            state[p] = 2;
        }
    }
    None
}
