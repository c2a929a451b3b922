use std::collections::HashMap;
use std::fmt;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bicop::{clamp01, fit_pair, kendall_tau, Conditioning, FitOptions, PairCopula};
use crate::error::{Error, Result};
use crate::marginals::UMatrix;
use crate::rng::{substream, CounterRng};

/// Rows simulated per generator substream.
pub const SIM_BLOCK: usize = 1024;

/// One vine edge: copula of `(first, second)` given `conditioning`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub conditioned: (usize, usize),
    /// Sorted ascending.
    pub conditioning: Vec<usize>,
    /// Nodes joined in this tree: variables in tree 1, edge indices of the
    /// previous tree afterwards.
    pub nodes: (usize, usize),
}

impl Edge {
    fn contains(&self, v: usize) -> bool {
        self.conditioned.0 == v || self.conditioned.1 == v
    }

    fn full_set(&self) -> Vec<usize> {
        let mut s = self.conditioning.clone();
        s.push(self.conditioned.0);
        s.push(self.conditioned.1);
        s.sort_unstable();
        s
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.conditioned.0, self.conditioned.1)?;
        if !self.conditioning.is_empty() {
            let d: Vec<String> = self.conditioning.iter().map(|x| x.to_string()).collect();
            write!(f, "|{}", d.join(","))?;
        }
        Ok(())
    }
}

/// Regular-vine structure. `trees[t]` holds the `d - 1 - t` edges of tree `t + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VineStructure {
    pub d: usize,
    /// Trees at or beyond this 0-based index carry independence only.
    pub truncation: Option<usize>,
    pub trees: Vec<Vec<Edge>>,
}

impl VineStructure {
    pub fn n_edges(&self) -> usize {
        self.trees.iter().map(Vec::len).sum()
    }

    /// Whether tree `t` (0-based) lies beyond the truncation level.
    pub fn is_truncated(&self, t: usize) -> bool {
        self.truncation.is_some_and(|k| t >= k)
    }

    /// Checks tree sizes, conditioning-set sizes and the proximity condition.
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if self.trees.len() != d.saturating_sub(1) {
            return Err(Error::Artifact(format!("vine on {d} variables needs {} trees", d.saturating_sub(1))));
        }
        for (t, tree) in self.trees.iter().enumerate() {
            if tree.len() != d - 1 - t {
                return Err(Error::Artifact(format!("tree {} has {} edges, expected {}", t + 1, tree.len(), d - 1 - t)));
            }
            let n_nodes = d - t;
            let mut uf = UnionFind::new(n_nodes);
            for e in tree {
                let (a, b) = e.conditioned;
                if a == b || a >= d || b >= d || e.conditioning.len() != t || e.conditioning.iter().any(|&c| c >= d) {
                    return Err(Error::Artifact(format!("malformed edge {e} in tree {}", t + 1)));
                }
                if e.nodes.0 >= n_nodes || e.nodes.1 >= n_nodes || !uf.union(e.nodes.0, e.nodes.1) {
                    return Err(Error::Artifact(format!("tree {} is not a spanning tree", t + 1)));
                }
                let expected = if t == 0 {
                    let (x, y) = e.nodes;
                    let ok = (x, y) == (a, b) || (y, x) == (a, b);
                    (ok, Vec::new())
                } else {
                    let prev = &self.trees[t - 1];
                    let (pa, pb) = (&prev[e.nodes.0], &prev[e.nodes.1]);
                    if !shares_node(pa, pb) {
                        return Err(Error::Artifact(format!("edge {e} violates the proximity condition")));
                    }
                    match joined(pa, pb) {
                        Some((x, y, cond)) => ((x, y) == (a, b) || (y, x) == (a, b), cond),
                        None => (false, Vec::new()),
                    }
                };
                if !expected.0 || (t > 0 && expected.1 != e.conditioning) {
                    return Err(Error::Artifact(format!("edge {e} does not match its parent edges")));
                }
            }
        }
        Ok(())
    }
}

/// Fitted pair copula and diagnostics for one edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFit {
    pub copula: PairCopula,
    /// Empirical Kendall tau of the edge's pseudo-data; absent beyond truncation
    /// and where the pseudo-data collapsed to a constant.
    pub tau_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VineModel {
    pub structure: VineStructure,
    /// Parallel to `structure.trees`.
    pub fits: Vec<Vec<EdgeFit>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VineOptions {
    pub fit: FitOptions,
    /// Number of trees fitted; later trees are independence.
    pub truncation: Option<usize>,
}

impl Default for VineOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            truncation: None,
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// Joins the components; false if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

fn shares_node(a: &Edge, b: &Edge) -> bool {
    a.nodes.0 == b.nodes.0 || a.nodes.0 == b.nodes.1 || a.nodes.1 == b.nodes.0 || a.nodes.1 == b.nodes.1
}

/// Conditioned pair `(from a, from b)` and conditioning set of the edge joining `a` and `b`.
fn joined(a: &Edge, b: &Edge) -> Option<(usize, usize, Vec<usize>)> {
    let (fa, fb) = (a.full_set(), b.full_set());
    let only_a: Vec<usize> = fa.iter().copied().filter(|x| !fb.contains(x)).collect();
    let only_b: Vec<usize> = fb.iter().copied().filter(|x| !fa.contains(x)).collect();
    if only_a.len() != 1 || only_b.len() != 1 {
        return None;
    }
    let common = fa.into_iter().filter(|x| fb.contains(x)).collect();
    Some((only_a[0], only_b[0], common))
}

/// Candidate edge for the spanning-tree step.
struct Candidate {
    nodes: (usize, usize),
    conditioned: (usize, usize),
    conditioning: Vec<usize>,
    /// Which h-output of each parent feeds this edge (`true` = parent's first variable).
    from_first: (bool, bool),
}

/// Pseudo-data leaving an edge: `F(first | second, D)` and `F(second | first, D)`.
struct NodeData {
    first: Vec<f64>,
    second: Vec<f64>,
}

fn edge_label(t: usize, conditioned: (usize, usize), conditioning: &[usize]) -> String {
    let e = Edge {
        conditioned,
        conditioning: conditioning.to_vec(),
        nodes: (0, 0),
    };
    format!("tree {} edge {e}", t + 1)
}

/// Maximum spanning tree by Kruskal; ties go to the lowest node pair.
fn max_spanning_tree(n_nodes: usize, weights: &[f64], cands: &[Candidate]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&i, &j| {
        weights[j]
            .total_cmp(&weights[i])
            .then(cands[i].nodes.cmp(&cands[j].nodes))
    });
    let mut uf = UnionFind::new(n_nodes);
    let mut chosen = Vec::with_capacity(n_nodes.saturating_sub(1));
    for i in order {
        if uf.union(cands[i].nodes.0, cands[i].nodes.1) {
            chosen.push(i);
            if chosen.len() + 1 == n_nodes {
                break;
            }
        }
    }
    chosen.sort_by(|&i, &j| cands[i].nodes.cmp(&cands[j].nodes));
    chosen
}

/// Sequential vine selection: spanning tree on |tau|, fit, push the
/// data through h-functions, repeat on the next tree.
pub fn fit_vine(u: &UMatrix, opts: &VineOptions) -> Result<VineModel> {
    let (n, d) = (u.nrows(), u.ncols());
    if opts.fit.catalogue.is_empty() {
        return Err(Error::invalid("vine catalogue is empty"));
    }
    let mut trees: Vec<Vec<Edge>> = Vec::new();
    let mut fits: Vec<Vec<EdgeFit>> = Vec::new();
    let columns: Vec<Vec<f64>> = (0..d).map(|j| u.column(j).to_vec()).collect();
    let mut data: Vec<NodeData> = Vec::new();

    for t in 0..d.saturating_sub(1) {
        let truncated = opts.truncation.is_some_and(|k| t >= k);
        let n_nodes = d - t;
        let cands: Vec<Candidate> = if t == 0 {
            (0..d)
                .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
                .map(|(i, j)| Candidate {
                    nodes: (i, j),
                    conditioned: (i, j),
                    conditioning: Vec::new(),
                    from_first: (true, true),
                })
                .collect()
        } else {
            let prev = &trees[t - 1];
            let mut out = Vec::new();
            for a in 0..prev.len() {
                for b in a + 1..prev.len() {
                    if !shares_node(&prev[a], &prev[b]) {
                        continue;
                    }
                    let Some((x, y, cond)) = joined(&prev[a], &prev[b]) else {
                        continue;
                    };
                    out.push(Candidate {
                        nodes: (a, b),
                        conditioned: (x, y),
                        conditioning: cond,
                        from_first: (prev[a].conditioned.0 == x, prev[b].conditioned.0 == y),
                    });
                }
            }
            out
        };
        let pair_data = |c: &Candidate| -> (&[f64], &[f64]) {
            if t == 0 {
                (&columns[c.nodes.0], &columns[c.nodes.1])
            } else {
                let (a, b) = (&data[c.nodes.0], &data[c.nodes.1]);
                (
                    if c.from_first.0 { &a.first } else { &a.second },
                    if c.from_first.1 { &b.first } else { &b.second },
                )
            }
        };
        // Past tree 1 a conditional column can collapse to a constant when an
        // upstream edge is (numerically) perfect dependence. Nothing is left to
        // model there, so such edges get weight zero and an independence copula.
        let degenerate = |c: &Candidate| {
            let (x, y) = pair_data(c);
            t > 0 && (is_constant(x) || is_constant(y))
        };
        let weights: Vec<f64> = if truncated {
            vec![0.0; cands.len()]
        } else {
            cands
                .par_iter()
                .map(|c| {
                    if degenerate(c) {
                        return Ok(0.0);
                    }
                    let (x, y) = pair_data(c);
                    kendall_tau(x, y).map(f64::abs).map_err(|e| Error::EdgeFit {
                        edge: edge_label(t, c.conditioned, &c.conditioning),
                        source: Box::new(e),
                    })
                })
                .collect::<Result<_>>()?
        };
        let chosen = max_spanning_tree(n_nodes, &weights, &cands);

        let fitted: Vec<(EdgeFit, Option<NodeData>)> = chosen
            .par_iter()
            .map(|&i| {
                let c = &cands[i];
                let (x, y) = pair_data(c);
                let need_data = t + 2 < d;
                if truncated || degenerate(c) {
                    let nd = need_data.then(|| NodeData {
                        first: x.to_vec(),
                        second: y.to_vec(),
                    });
                    return Ok((
                        EdgeFit {
                            copula: PairCopula::independence(),
                            tau_hat: None,
                        },
                        nd,
                    ));
                }
                let wrap = |e: Error| Error::EdgeFit {
                    edge: edge_label(t, c.conditioned, &c.conditioning),
                    source: Box::new(e),
                };
                let tau = kendall_tau(x, y).map_err(wrap)?;
                let copula = fit_pair(x, y, &opts.fit).map_err(wrap)?;
                let nd = need_data.then(|| NodeData {
                    first: (0..n).map(|k| copula.h_func(x[k], y[k], Conditioning::OnSecond)).collect(),
                    second: (0..n).map(|k| copula.h_func(x[k], y[k], Conditioning::OnFirst)).collect(),
                });
                Ok((
                    EdgeFit {
                        copula,
                        tau_hat: Some(tau),
                    },
                    nd,
                ))
            })
            .collect::<Result<_>>()?;

        let edges: Vec<Edge> = chosen
            .iter()
            .map(|&i| Edge {
                conditioned: cands[i].conditioned,
                conditioning: cands[i].conditioning.clone(),
                nodes: cands[i].nodes,
            })
            .collect();
        let (tree_fits, next): (Vec<EdgeFit>, Vec<Option<NodeData>>) = fitted.into_iter().unzip();
        data = next.into_iter().flatten().collect();
        trees.push(edges);
        fits.push(tree_fits);
    }

    Ok(VineModel {
        structure: VineStructure {
            d,
            truncation: opts.truncation,
            trees,
        },
        fits,
    })
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Structure chosen by the sequential algorithm with the given catalogue.
pub fn select_structure(u: &UMatrix, opts: &VineOptions) -> Result<VineStructure> {
    if u.ncols() < 2 {
        return Err(Error::invalid(format!("vine structure needs d >= 2, got {}", u.ncols())));
    }
    Ok(fit_vine(u, opts)?.structure)
}

#[derive(Debug, Clone, Copy)]
enum Op {
    /// `out = w` column of variable `var`.
    Draw { var: usize, out: usize },
    /// `out = F(var | other, D)` through edge `(t, i)`.
    H {
        t: usize,
        i: usize,
        var_is_first: bool,
        var: usize,
        other: usize,
        out: usize,
    },
    /// Inverts the edge's h-function for the conditioned variable.
    HInv {
        t: usize,
        i: usize,
        var_is_first: bool,
        w: usize,
        given: usize,
        out: usize,
    },
}

/// Straight-line program producing every column of a vine sample.
struct Plan {
    ops: Vec<Op>,
    n_slots: usize,
    /// Slot holding the uniform of each variable.
    outputs: Vec<usize>,
}

struct PlanBuilder<'a> {
    model: &'a VineModel,
    edge_index: HashMap<(usize, usize, Vec<usize>), (usize, usize)>,
    slots: HashMap<(usize, Vec<usize>), usize>,
    ops: Vec<Op>,
    n_slots: usize,
}

impl<'a> PlanBuilder<'a> {
    fn new_slot(&mut self) -> usize {
        self.n_slots += 1;
        self.n_slots - 1
    }

    /// Slot for `F(b | set)` with every variable involved already sampled.
    fn cond(&mut self, b: usize, set: &[usize]) -> Result<usize> {
        if let Some(&s) = self.slots.get(&(b, set.to_vec())) {
            return Ok(s);
        }
        if set.is_empty() {
            return Err(Error::Artifact(format!("variable {b} used before it is sampled")));
        }
        for (k, &c) in set.iter().enumerate() {
            let mut rest = set.to_vec();
            rest.remove(k);
            let key = (b.min(c), b.max(c), rest.clone());
            let Some(&(t, i)) = self.edge_index.get(&key) else {
                continue;
            };
            let x = self.cond(b, &rest)?;
            let out = if self.model.structure.is_truncated(t) {
                x
            } else {
                let y = self.cond(c, &rest)?;
                let out = self.new_slot();
                self.ops.push(Op::H {
                    t,
                    i,
                    var_is_first: self.model.structure.trees[t][i].conditioned.0 == b,
                    var: x,
                    other: y,
                    out,
                });
                out
            };
            self.slots.insert((b, set.to_vec()), out);
            return Ok(out);
        }
        Err(Error::Artifact(format!("no edge yields F({b} | {set:?})")))
    }
}

impl VineModel {
    pub fn dim(&self) -> usize {
        self.structure.d
    }

    pub fn n_params(&self) -> usize {
        self.fits.iter().flatten().map(|f| f.copula.n_params()).sum()
    }

    pub fn loglik(&self) -> f64 {
        self.fits.iter().flatten().map(|f| f.copula.loglik).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, &Edge, &EdgeFit)> {
        self.structure
            .trees
            .iter()
            .zip(&self.fits)
            .enumerate()
            .flat_map(|(t, (es, fs))| es.iter().zip(fs).map(move |(e, f)| (t, e, f)))
    }

    pub fn validate(&self) -> Result<()> {
        self.structure.validate()?;
        if self.fits.len() != self.structure.trees.len()
            || self.fits.iter().zip(&self.structure.trees).any(|(f, e)| f.len() != e.len())
        {
            return Err(Error::Artifact("one pair copula per edge required".into()));
        }
        for f in self.fits.iter().flatten() {
            f.copula.validate()?;
        }
        self.plan().map(|_| ())
    }

    /// Sampling order: repeatedly peel a conditioned variable of the highest
    /// remaining edge; its edges (one per tree) give the inversion chain.
    fn plan(&self) -> Result<Plan> {
        let d = self.structure.d;
        let trees = &self.structure.trees;
        let mut edge_index = HashMap::new();
        for (t, tree) in trees.iter().enumerate() {
            for (i, e) in tree.iter().enumerate() {
                let (a, b) = e.conditioned;
                edge_index.insert((a.min(b), a.max(b), e.conditioning.clone()), (t, i));
            }
        }
        let mut active: Vec<Vec<bool>> = trees.iter().map(|t| vec![true; t.len()]).collect();
        let mut remaining: Vec<usize> = (0..d).collect();
        // (variable, chain of (tree, edge, partner)) in peel order
        let mut peeled: Vec<(usize, Vec<(usize, usize, usize)>)> = Vec::new();
        while remaining.len() > 1 {
            let k = remaining.len();
            let top = k - 2;
            let Some(i) = (0..trees[top].len()).find(|&i| active[top][i]) else {
                return Err(Error::Artifact("vine has no edge left at the top tree".into()));
            };
            let a = trees[top][i].conditioned.0;
            let mut chain = Vec::with_capacity(k - 1);
            for t in 0..k - 1 {
                let hits: Vec<usize> = (0..trees[t].len()).filter(|&j| active[t][j] && trees[t][j].contains(a)).collect();
                if hits.len() != 1 {
                    return Err(Error::Artifact(format!("variable {a} is in {} edges of tree {}", hits.len(), t + 1)));
                }
                let e = &trees[t][hits[0]];
                let partner = if e.conditioned.0 == a { e.conditioned.1 } else { e.conditioned.0 };
                chain.push((t, hits[0], partner));
            }
            for t in 0..k - 1 {
                for j in 0..trees[t].len() {
                    if active[t][j] && trees[t][j].conditioning.contains(&a) {
                        return Err(Error::Artifact(format!("variable {a} cannot be peeled")));
                    }
                }
            }
            for (t, &(_, j, _)) in chain.iter().enumerate() {
                let mut want: Vec<usize> = chain[..t].iter().map(|c| c.2).collect();
                want.sort_unstable();
                if trees[t][j].conditioning != want {
                    return Err(Error::Artifact(format!("edges of variable {a} are not nested")));
                }
                active[t][j] = false;
            }
            remaining.retain(|&v| v != a);
            peeled.push((a, chain));
        }

        let mut b = PlanBuilder {
            model: self,
            edge_index,
            slots: HashMap::new(),
            ops: Vec::new(),
            n_slots: 0,
        };
        let mut outputs = vec![usize::MAX; d];
        if let Some(&first) = remaining.first() {
            let out = b.new_slot();
            b.ops.push(Op::Draw { var: first, out });
            b.slots.insert((first, Vec::new()), out);
            outputs[first] = out;
        }
        for (a, chain) in peeled.into_iter().rev() {
            let w = b.new_slot();
            b.ops.push(Op::Draw { var: a, out: w });
            let mut current = w;
            let fitted = chain.iter().filter(|c| !self.structure.is_truncated(c.0)).count();
            let all: Vec<usize> = {
                let mut s: Vec<usize> = chain.iter().map(|c| c.2).collect();
                s.sort_unstable();
                s
            };
            b.slots.insert((a, all), w);
            for &(t, i, partner) in chain[..fitted].iter().rev() {
                let cond_set = self.structure.trees[t][i].conditioning.clone();
                let given = b.cond(partner, &cond_set)?;
                let out = b.new_slot();
                b.ops.push(Op::HInv {
                    t,
                    i,
                    var_is_first: self.structure.trees[t][i].conditioned.0 == a,
                    w: current,
                    given,
                    out,
                });
                b.slots.insert((a, cond_set), out);
                current = out;
            }
            b.slots.insert((a, Vec::new()), current);
            outputs[a] = current;
        }
        Ok(Plan {
            ops: b.ops,
            n_slots: b.n_slots,
            outputs,
        })
    }

    /// Inverse Rosenblatt transform of counter-generated uniforms, in blocks
    /// of [`SIM_BLOCK`] rows with one substream per block.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<UMatrix> {
        let d = self.structure.d;
        let plan = self.plan()?;
        let n_blocks = n.div_ceil(SIM_BLOCK);
        let blocks: Vec<Array2<f64>> = (0..n_blocks)
            .into_par_iter()
            .map(|bi| {
                let rows = SIM_BLOCK.min(n - bi * SIM_BLOCK);
                let mut rng = CounterRng::new(substream(seed, bi as u64));
                let mut w = vec![0.0; rows * d];
                for x in w.iter_mut() {
                    *x = rng.uniform();
                }
                let mut slots: Vec<Vec<f64>> = vec![Vec::new(); plan.n_slots];
                for op in &plan.ops {
                    match *op {
                        Op::Draw { var, out } => {
                            slots[out] = (0..rows).map(|r| w[r * d + var]).collect();
                        }
                        Op::H {
                            t,
                            i,
                            var_is_first,
                            var,
                            other,
                            out,
                        } => {
                            let c = &self.fits[t][i].copula;
                            let (x, y) = (&slots[var], &slots[other]);
                            let col = (0..rows)
                                .map(|r| {
                                    if var_is_first {
                                        c.h_func(x[r], y[r], Conditioning::OnSecond)
                                    } else {
                                        c.h_func(y[r], x[r], Conditioning::OnFirst)
                                    }
                                })
                                .collect();
                            slots[out] = col;
                        }
                        Op::HInv {
                            t,
                            i,
                            var_is_first,
                            w,
                            given,
                            out,
                        } => {
                            let c = &self.fits[t][i].copula;
                            let cond = if var_is_first {
                                Conditioning::OnSecond
                            } else {
                                Conditioning::OnFirst
                            };
                            let col = (0..rows)
                                .map(|r| c.h_inv(slots[w][r], slots[given][r], cond))
                                .collect::<Result<Vec<f64>>>()
                                .map_err(|e| Error::EdgeFit {
                                    edge: format!("tree {} edge {}", t + 1, self.structure.trees[t][i]),
                                    source: Box::new(e),
                                })?;
                            slots[out] = col;
                        }
                    }
                }
                let mut block = Array2::zeros((rows, d));
                for (v, &s) in plan.outputs.iter().enumerate() {
                    for r in 0..rows {
                        block[[r, v]] = clamp01(slots[s][r]);
                    }
                }
                Ok(block)
            })
            .collect::<Result<_>>()?;
        let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
        let all = if views.is_empty() {
            Array2::zeros((0, d))
        } else {
            ndarray::concatenate(ndarray::Axis(0), &views).expect("blocks share width")
        };
        UMatrix::new(all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(n: usize) -> Vec<Candidate> {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| Candidate {
                nodes: (i, j),
                conditioned: (i, j),
                conditioning: Vec::new(),
                from_first: (true, true),
            })
            .collect()
    }

    #[test]
    fn spanning_tree_takes_heaviest_edges() {
        // (0,1)=0.8, (0,2)=0.56, (1,2)=0.7
        let c = pairs(3);
        let chosen = max_spanning_tree(3, &[0.8, 0.56, 0.7], &c);
        let got: Vec<_> = chosen.iter().map(|&i| c[i].nodes).collect();
        assert_eq!(got, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn spanning_tree_ties_go_to_lowest_pair() {
        let c = pairs(4);
        let chosen = max_spanning_tree(4, &[0.0; 6], &c);
        let got: Vec<_> = chosen.iter().map(|&i| c[i].nodes).collect();
        assert_eq!(got, vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn joined_edges_share_all_but_one_variable() {
        let a = Edge {
            conditioned: (0, 1),
            conditioning: vec![],
            nodes: (0, 1),
        };
        let b = Edge {
            conditioned: (1, 2),
            conditioning: vec![],
            nodes: (1, 2),
        };
        assert_eq!(joined(&a, &b), Some((0, 2, vec![1])));
        let c = Edge {
            conditioned: (3, 4),
            conditioning: vec![],
            nodes: (3, 4),
        };
        assert!(!shares_node(&a, &c));
        assert_eq!(joined(&a, &c), None);
    }
}
