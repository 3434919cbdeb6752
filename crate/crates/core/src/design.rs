//! Transmit subset selection: pick `K̃` labels maximising the minimum
//! pairwise Hamming distance of their real-domain sign patterns.

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::labels::{hamming_distance, LabelSet, Symmetry};
use crate::rng::{stream, Purpose};

pub const DEFAULT_SEARCH_CAP: u128 = 10_000_000;
pub const DEFAULT_RESTARTS: usize = 50;

/// Pairwise Hamming distances of all labels in a set.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    k: usize,
    dims: usize,
    d: Vec<u8>,
}

impl DistanceTable {
    pub fn new(labels: &LabelSet) -> Result<Self> {
        let k = labels.len();
        if k > 1 << 14 {
            return Err(Error::TooManyLabels {
                count: k as u128,
                limit: 1 << 14,
            });
        }
        let real: Vec<_> = (0..k).map(|i| labels.real_label(i)).collect();
        let mut d = vec![0u8; k * k];
        for i in 0..k {
            for j in i + 1..k {
                let v = hamming_distance(&real[i], &real[j])? as u8;
                d[i * k + j] = v;
                d[j * k + i] = v;
            }
        }
        let dims = d.iter().copied().max().unwrap_or(0) as usize;
        Ok(DistanceTable { k, dims, d })
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.d[i * self.k + j] as usize
    }

    /// Largest distance between any two labels of the set.
    pub fn max_possible(&self) -> usize {
        self.dims
    }

    fn min_over(&self, members: &[usize]) -> usize {
        let mut best = usize::MAX;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                best = best.min(self.get(i, j));
            }
        }
        best
    }
}

/// Minimum pairwise Hamming distance of a subset.
pub fn d_min(labels: &LabelSet, subset: &[usize]) -> Result<usize> {
    if subset.len() < 2 {
        return Err(Error::InvalidParameter("d_min needs at least two labels".into()));
    }
    let real: Vec<_> = subset.iter().map(|&i| labels.real_label(i)).collect();
    let mut best = usize::MAX;
    for a in 0..real.len() {
        for b in a + 1..real.len() {
            let d = hamming_distance(&real[a], &real[b])?;
            if d == 0 {
                return Err(Error::DuplicateLabels);
            }
            best = best.min(d);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Design {
    /// Selected label indices, ascending.
    pub indices: Vec<usize>,
    pub d_min: usize,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn check_size(k: usize, ktilde: usize) -> Result<()> {
    if ktilde < 2 || ktilde > k {
        return Err(Error::InvalidParameter(format!("subset size {ktilde} outside 2..={k}")));
    }
    Ok(())
}

struct Search<'a> {
    table: &'a DistanceTable,
    ktilde: usize,
    best: Option<Design>,
    current: Vec<usize>,
}

impl Search<'_> {
    fn run(&mut self, next: usize, dmin: usize) {
        if let Some(b) = &self.best {
            if dmin <= b.d_min || b.d_min == self.table.max_possible() {
                return;
            }
        }
        if self.current.len() == self.ktilde {
            self.best = Some(Design {
                indices: self.current.clone(),
                d_min: dmin,
            });
            return;
        }
        let needed = self.ktilde - self.current.len();
        for cand in next..=self.table.len() - needed {
            let d = self
                .current
                .iter()
                .map(|&m| self.table.get(m, cand))
                .min()
                .unwrap_or(usize::MAX)
                .min(dmin);
            if d == 0 {
                continue;
            }
            self.current.push(cand);
            self.run(cand + 1, d);
            self.current.pop();
        }
    }
}

/// Globally optimal subset by branch-and-bound over subsets in lexicographic
/// order; the first optimal subset found is returned.
pub fn exhaustive_design(labels: &LabelSet, ktilde: usize, cap: u128) -> Result<Design> {
    check_size(labels.len(), ktilde)?;
    let count = binomial(labels.len(), ktilde);
    if count > cap {
        return Err(Error::SearchTooLarge { count, cap });
    }
    let table = DistanceTable::new(labels)?;
    let mut search = Search {
        table: &table,
        ktilde,
        best: None,
        current: Vec::with_capacity(ktilde),
    };
    search.run(0, usize::MAX);
    search.best.ok_or(Error::DuplicateLabels)
}

#[derive(Clone, Debug)]
pub struct GreedyOutcome {
    pub best: Design,
    /// Index of the restart that produced `best`.
    pub best_restart: usize,
    /// Per restart: `d_min` of the initial subset and after every accepted swap.
    pub traces: Vec<Vec<usize>>,
}

/// One local search from `start`: scan members in index order, non-members
/// in index order, and apply the first swap that strictly raises `d_min`,
/// until no such swap exists.
pub fn local_search(table: &DistanceTable, start: &[usize]) -> (Design, Vec<usize>) {
    let k = table.len();
    let mut members = start.to_vec();
    members.sort_unstable();
    let mut in_set = vec![false; k];
    for &m in &members {
        in_set[m] = true;
    }
    let mut current = table.min_over(&members);
    let mut trace = vec![current];
    'outer: loop {
        for pos in 0..members.len() {
            let out = members[pos];
            let rest: Vec<usize> = members.iter().copied().filter(|&m| m != out).collect();
            let without = table.min_over(&rest);
            if without <= current {
                continue;
            }
            for cand in 0..k {
                if in_set[cand] {
                    continue;
                }
                let d = rest
                    .iter()
                    .map(|&m| table.get(m, cand))
                    .min()
                    .unwrap_or(usize::MAX)
                    .min(without);
                if d > current {
                    in_set[out] = false;
                    in_set[cand] = true;
                    members[pos] = cand;
                    members.sort_unstable();
                    current = d;
                    trace.push(current);
                    continue 'outer;
                }
            }
        }
        break;
    }
    (
        Design {
            indices: members,
            d_min: current,
        },
        trace,
    )
}

/// Multi-restart greedy swap search from random initial subsets; restart `i`
/// draws its start from the design stream `i` of `seed`.
pub fn greedy_design(labels: &LabelSet, ktilde: usize, restarts: usize, seed: u64) -> Result<GreedyOutcome> {
    check_size(labels.len(), ktilde)?;
    if restarts == 0 {
        return Err(Error::InvalidParameter("at least one restart is required".into()));
    }
    let table = DistanceTable::new(labels)?;
    let mut best: Option<(Design, usize)> = None;
    let mut traces = Vec::with_capacity(restarts);
    for r in 0..restarts {
        let mut rng = stream(seed, r as u64, Purpose::Design);
        let start = sample(&mut rng, labels.len(), ktilde).into_vec();
        let (design, trace) = local_search(&table, &start);
        traces.push(trace);
        if best.as_ref().is_none_or(|(b, _)| design.d_min > b.d_min) {
            best = Some((design, r));
        }
    }
    let (best, best_restart) = best.expect("at least one restart");
    Ok(GreedyOutcome {
        best,
        best_restart,
        traces,
    })
}

/// Partner `k'` with `x̌_k' = -x̌_k` for every label, when the set is closed
/// under negation.
fn negation_partners(labels: &LabelSet) -> Result<Vec<usize>> {
    if labels.symmetry() == Symmetry::None {
        return Err(Error::InvalidParameter("label set is not closed under negation".into()));
    }
    let g = labels.generator_count();
    Ok((0..labels.len())
        .map(|k| {
            let (gen, factor) = labels.orbit_position(k);
            let target = -factor;
            labels
                .orbit(gen)
                .find(|(_, f)| (f - target).norm() < 1e-12)
                .map(|(j, _)| j)
                .unwrap_or(k % g)
        })
        .collect())
}

/// Greedy design restricted to subsets closed under negation: the search
/// runs over antipodal pairs `{x, -x}`, `K̃/2` of them per subset.
pub fn greedy_closed_design(labels: &LabelSet, ktilde: usize, restarts: usize, seed: u64) -> Result<GreedyOutcome> {
    check_size(labels.len(), ktilde)?;
    if !ktilde.is_multiple_of(2) {
        return Err(Error::InvalidParameter("negation-closed subsets have even size".into()));
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter("at least one restart is required".into()));
    }
    let partner = negation_partners(labels)?;
    let full = DistanceTable::new(labels)?;
    let pairs: Vec<(usize, usize)> = (0..labels.len())
        .filter(|&k| k < partner[k])
        .map(|k| (k, partner[k]))
        .collect();
    let p = pairs.len();
    let own = pairs.iter().map(|&(a, b)| full.get(a, b)).min().unwrap_or(0);
    let mut d = vec![0u8; p * p];
    for i in 0..p {
        for j in i + 1..p {
            let (a, b) = pairs[i];
            let (c, e) = pairs[j];
            let v = [full.get(a, c), full.get(a, e), full.get(b, c), full.get(b, e)]
                .into_iter()
                .min()
                .unwrap()
                .min(own) as u8;
            d[i * p + j] = v;
            d[j * p + i] = v;
        }
    }
    let dims = d.iter().copied().max().unwrap_or(own as u8) as usize;
    let table = DistanceTable { k: p, dims, d };
    let units = ktilde / 2;
    let expand = |design: Design| -> Design {
        let mut indices: Vec<usize> = design.indices.iter().flat_map(|&i| [pairs[i].0, pairs[i].1]).collect();
        indices.sort_unstable();
        let d_min = if units == 1 { own } else { design.d_min };
        Design { indices, d_min }
    };
    let mut best: Option<(Design, usize)> = None;
    let mut traces = Vec::with_capacity(restarts);
    for r in 0..restarts {
        let mut rng = stream(seed, r as u64, Purpose::Design);
        let start = sample(&mut rng, p, units).into_vec();
        let (design, trace) = if units == 1 {
            (
                Design {
                    indices: start,
                    d_min: own,
                },
                vec![own],
            )
        } else {
            local_search(&table, &start)
        };
        traces.push(trace);
        let design = expand(design);
        if best.as_ref().is_none_or(|(b, _)| design.d_min > b.d_min) {
            best = Some((design, r));
        }
    }
    let (best, best_restart) = best.expect("at least one restart");
    Ok(GreedyOutcome {
        best,
        best_restart,
        traces,
    })
}

/// The symmetry a selected subset is closed under.
pub fn closure(labels: &LabelSet, indices: &[usize]) -> Result<Symmetry> {
    Ok(labels.subset(indices)?.symmetry())
}

/// `K̃/2` leading generators of a negation-closed set together with their
/// negations; the resulting subset is closed under negation.
pub fn negation_closed_prefix(labels: &LabelSet, ktilde: usize) -> Result<Vec<usize>> {
    check_size(labels.len(), ktilde)?;
    if labels.symmetry() == Symmetry::None || !ktilde.is_multiple_of(2) {
        return Err(Error::InvalidParameter(
            "negation-closed subsets need an even size and a symmetric parent set".into(),
        ));
    }
    let half = labels.len() / 2;
    let mut out: Vec<usize> = if labels.symmetry() == Symmetry::Negation {
        (0..ktilde / 2).chain(half..half + ktilde / 2).collect()
    } else {
        // quadrant sets: generators and their negations sit G·{0, 1} apart
        let g = labels.generator_count();
        if ktilde / 2 > g {
            return Err(Error::InvalidParameter(format!(
                "only {g} generators available for a subset of {ktilde}"
            )));
        }
        (0..ktilde / 2).chain(g..g + ktilde / 2).collect()
    };
    out.sort_unstable();
    Ok(out)
}
