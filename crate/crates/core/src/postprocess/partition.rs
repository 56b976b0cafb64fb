use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A clustering of `N` actors with canonical one-based labels: the first
/// actor is in group 1 and each new group gets the next unused label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    n_groups: usize,
}

impl Partition {
    /// Canonicalizes arbitrary labels (any integers, any base).
    pub fn new<L: Copy + Eq + std::hash::Hash>(labels: &[L]) -> Self {
        let mut map = HashMap::new();
        let mut out = Vec::with_capacity(labels.len());
        for &l in labels {
            let next = map.len() + 1;
            out.push(*map.entry(l).or_insert(next));
        }
        Self {
            n_groups: map.len(),
            labels: out,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    /// Group sizes indexed by `label - 1`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_groups];
        for &l in &self.labels {
            s[l - 1] += 1;
        }
        s
    }

    #[inline]
    fn same(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }
}

/// Pairwise co-clustering frequencies over a set of label draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSimilarityMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl PosteriorSimilarityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.n)
    }

    /// Sum over unordered pairs.
    fn pair_sum(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                s += self.get(i, j);
            }
        }
        s
    }
}

fn check_draws(draws: &[Vec<usize>]) -> Result<usize> {
    let first = draws.first().ok_or_else(|| Error::invalid("no label draws"))?;
    let n = first.len();
    if let Some(bad) = draws.iter().position(|d| d.len() != n) {
        return Err(Error::dim(format!(
            "draw {} has {} labels, expected {n}",
            bad + 1,
            draws[bad].len()
        )));
    }
    Ok(n)
}

/// Co-clustering frequencies of label draws.
pub fn posterior_similarity(draws: &[Vec<usize>]) -> Result<PosteriorSimilarityMatrix> {
    let n = check_draws(draws)?;
    let mut counts = vec![0u64; n * n];
    for d in draws {
        for i in 0..n {
            for j in i + 1..n {
                if d[i] == d[j] {
                    counts[i * n + j] += 1;
                }
            }
        }
    }
    let m = draws.len() as f64;
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        entries[i * n + i] = 1.0;
        for j in i + 1..n {
            let v = counts[i * n + j] as f64 / m;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    Ok(PosteriorSimilarityMatrix { n, entries })
}

fn choose2(n: f64) -> f64 {
    0.5 * n * (n - 1.0)
}

/// Adjusted Rand index under the permutation model.
pub fn adjusted_rand_index(p: &Partition, q: &Partition) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::dim(format!("partitions have {} and {} actors", p.len(), q.len())));
    }
    let n = p.len();
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    for i in 0..n {
        *table.entry((p.labels[i], q.labels[i])).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c as f64)).sum();
    let a: f64 = p.sizes().iter().map(|&c| choose2(c as f64)).sum();
    let b: f64 = q.sizes().iter().map(|&c| choose2(c as f64)).sum();
    let total = choose2(n as f64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = a * b / total;
    let max = 0.5 * (a + b);
    if max == expected {
        // Both partitions trivial in the same way.
        return Ok(if index == expected { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// Which point estimate to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMethod {
    MaxPear,
    MinBinder,
    GreedyEpl,
}

impl std::fmt::Display for PartitionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::MaxPear => "maxpear",
            Self::MinBinder => "minbinder",
            Self::GreedyEpl => "greedyepl",
        })
    }
}

impl std::str::FromStr for PartitionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "maxpear" => Ok(Self::MaxPear),
            "minbinder" => Ok(Self::MinBinder),
            "greedyepl" => Ok(Self::GreedyEpl),
            other => Err(Error::Config(format!("unknown partition method `{other}`"))),
        }
    }
}

/// Tuning of the partition estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorOptions {
    /// Candidates with more groups are discarded.
    pub max_groups: Option<usize>,
    /// Restarts of the greedy VI descent.
    pub restarts: usize,
    /// Seed of the random restarts.
    pub seed: u64,
    /// MinBinder enumerates every partition when `N` is at most this.
    pub exact_binder_max_n: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            max_groups: None,
            restarts: 5,
            seed: 1,
            exact_binder_max_n: 0,
        }
    }
}

/// Point estimate of the clustering from label draws.
pub fn point_estimate_partition(
    draws: &[Vec<usize>],
    psm: &PosteriorSimilarityMatrix,
    method: PartitionMethod,
    opts: &EstimatorOptions,
) -> Result<Partition> {
    let n = check_draws(draws)?;
    if psm.n() != n {
        return Err(Error::dim(format!("PSM is {0}x{0} but draws have {n} actors", psm.n())));
    }
    match method {
        PartitionMethod::MaxPear => {
            let cands = candidates(draws, psm, opts.max_groups)?;
            let sum_pi = psm.pair_sum();
            best_by(&cands, |c| -pear(c, psm, sum_pi))
        }
        PartitionMethod::MinBinder => min_binder(draws, psm, opts),
        PartitionMethod::GreedyEpl => greedy_epl(draws, opts),
    }
}

/// Lowest value wins; ties go to the lowest canonical label sequence.
fn best_by(cands: &[Partition], mut loss: impl FnMut(&Partition) -> f64) -> Result<Partition> {
    let mut best: Option<(f64, &Partition)> = None;
    for c in cands {
        let v = loss(c);
        best = match best {
            None => Some((v, c)),
            Some((bv, bc)) => {
                if v < bv - tie_eps(bv) || (v <= bv + tie_eps(bv) && c.labels < bc.labels) {
                    Some((v, c))
                } else {
                    Some((bv, bc))
                }
            }
        };
    }
    best.map(|(_, c)| c.clone()).ok_or_else(|| Error::invalid("empty candidate set"))
}

fn tie_eps(v: f64) -> f64 {
    1e-12 * (1.0 + v.abs())
}

/// Posterior expected adjusted Rand index estimated from the PSM.
pub fn pear(c: &Partition, psm: &PosteriorSimilarityMatrix, sum_pi: f64) -> f64 {
    let n = c.len();
    let total = choose2(n as f64);
    if total == 0.0 {
        return 1.0;
    }
    let mut sum_c = 0.0;
    let mut sum_cpi = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            if c.same(i, j) {
                sum_c += 1.0;
                sum_cpi += psm.get(i, j);
            }
        }
    }
    let expected = sum_c * sum_pi / total;
    let denom = 0.5 * (sum_c + sum_pi) - expected;
    if denom.abs() < 1e-300 {
        return 1.0;
    }
    (sum_cpi - expected) / denom
}

/// Expected Binder loss with unit costs, from the PSM.
pub fn binder_loss(c: &Partition, psm: &PosteriorSimilarityMatrix) -> f64 {
    let n = c.len();
    let mut loss = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let s = if c.same(i, j) { 1.0 } else { 0.0 };
            loss += (s - psm.get(i, j)).abs();
        }
    }
    loss
}

/// Sampled partitions plus every cut of the average-linkage tree of
/// `1 - PSM`, deduplicated and sorted.
pub fn candidates(
    draws: &[Vec<usize>],
    psm: &PosteriorSimilarityMatrix,
    max_groups: Option<usize>,
) -> Result<Vec<Partition>> {
    let mut all: Vec<Partition> = draws.iter().map(|d| Partition::new(d)).collect();
    all.extend(average_linkage_cuts(psm));
    if let Some(m) = max_groups {
        all.retain(|p| p.n_groups() <= m);
    }
    all.sort();
    all.dedup();
    if all.is_empty() {
        return Err(Error::invalid("empty candidate set"));
    }
    Ok(all)
}

/// Partitions at every merge height of UPGMA on `1 - PSM`, from `N`
/// singletons down to one group. Ties merge the lowest-index pair first.
pub fn average_linkage_cuts(psm: &PosteriorSimilarityMatrix) -> Vec<Partition> {
    let n = psm.n();
    if n == 0 {
        return Vec::new();
    }
    let mut cluster_of: Vec<usize> = (0..n).collect();
    let mut sizes: Vec<usize> = vec![1; n];
    let mut alive: Vec<bool> = vec![true; n];
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            dist[i * n + j] = 1.0 - psm.get(i, j);
        }
    }
    let mut cuts = vec![Partition::new(&cluster_of)];
    for _ in 1..n {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..n {
            if !alive[a] {
                continue;
            }
            for b in a + 1..n {
                if alive[b] && dist[a * n + b] < best.0 {
                    best = (dist[a * n + b], a, b);
                }
            }
        }
        let (_, a, b) = best;
        for c in 0..n {
            if alive[c] && c != a && c != b {
                let d = (sizes[a] as f64 * dist[a * n + c] + sizes[b] as f64 * dist[b * n + c])
                    / (sizes[a] + sizes[b]) as f64;
                dist[a * n + c] = d;
                dist[c * n + a] = d;
            }
        }
        sizes[a] += sizes[b];
        alive[b] = false;
        for c in cluster_of.iter_mut() {
            if *c == b {
                *c = a;
            }
        }
        cuts.push(Partition::new(&cluster_of));
    }
    cuts
}

/// Pairwise weights `w_ij = 1 - 2 psm_ij`; the Binder loss equals
/// `sum_{i<j} psm_ij + sum_{i<j, same} w_ij`.
fn binder_weights(psm: &PosteriorSimilarityMatrix) -> Vec<f64> {
    let n = psm.n();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i * n + j] = 1.0 - 2.0 * psm.get(i, j);
            }
        }
    }
    w
}

fn min_binder(draws: &[Vec<usize>], psm: &PosteriorSimilarityMatrix, opts: &EstimatorOptions) -> Result<Partition> {
    let n = psm.n();
    if n <= opts.exact_binder_max_n {
        let all = enumerate_partitions(n, opts.max_groups.unwrap_or(n));
        return best_by(&all, |c| binder_loss(c, psm));
    }
    let cands = candidates(draws, psm, opts.max_groups)?;
    let w = binder_weights(psm);
    let max_groups = opts.max_groups.unwrap_or(n);
    let mut refined: Vec<Partition> = cands
        .iter()
        .map(|c| binder_local_search(c, &w, n, max_groups))
        .collect();
    refined.extend(cands);
    best_by(&refined, |c| binder_loss(c, psm))
}

/// Steepest-descent over single-actor moves and pairwise group merges.
fn binder_local_search(start: &Partition, w: &[f64], n: usize, max_groups: usize) -> Partition {
    let mut labels: Vec<usize> = start.labels().iter().map(|l| l - 1).collect();
    loop {
        let groups = labels.iter().max().map_or(0, |m| m + 1);
        // link[i][g] = sum of w over members of g other than i.
        let mut link = vec![0.0; n * (groups + 1)];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    link[i * (groups + 1) + labels[j]] += w[i * n + j];
                }
            }
        }
        let mut sizes = vec![0usize; groups];
        for &l in &labels {
            sizes[l] += 1;
        }
        let mut best = (-1e-12, Move::None);
        for i in 0..n {
            let from = labels[i];
            let leave = -link[i * (groups + 1) + from];
            for to in 0..=groups {
                if to == from || (to == groups && (sizes[from] == 1 || groups >= max_groups)) {
                    continue;
                }
                let gain = leave + if to == groups { 0.0 } else { link[i * (groups + 1) + to] };
                if gain < best.0 {
                    best = (gain, Move::Actor(i, to));
                }
            }
        }
        for a in 0..groups {
            for b in a + 1..groups {
                let mut gain = 0.0;
                for i in 0..n {
                    if labels[i] == a {
                        gain += link[i * (groups + 1) + b];
                    }
                }
                if gain < best.0 {
                    best = (gain, Move::Merge(a, b));
                }
            }
        }
        match best.1 {
            Move::None => break,
            Move::Actor(i, to) => labels[i] = to,
            Move::Merge(a, b) => labels.iter_mut().filter(|l| **l == b).for_each(|l| *l = a),
        }
        let canon = Partition::new(&labels);
        labels = canon.labels().iter().map(|l| l - 1).collect();
    }
    Partition::new(&labels)
}

enum Move {
    None,
    Actor(usize, usize),
    Merge(usize, usize),
}

/// Every partition of `n` items with at most `max_groups` groups, as
/// restricted growth strings in lexicographic order.
pub fn enumerate_partitions(n: usize, max_groups: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut rgs = vec![0usize; n];
    fn rec(pos: usize, used: usize, rgs: &mut Vec<usize>, max_groups: usize, out: &mut Vec<Partition>) {
        if pos == rgs.len() {
            out.push(Partition::new(rgs));
            return;
        }
        for l in 0..=used.min(max_groups - 1) {
            rgs[pos] = l;
            rec(pos + 1, used.max(l + 1), rgs, max_groups, out);
        }
    }
    rec(1, 1, &mut rgs, max_groups.max(1), &mut out);
    out
}

/// Contingency counts of a working partition against every draw, kept
/// current under single-actor moves.
struct ViState<'a> {
    /// Canonical zero-based labels of each draw.
    draws: &'a [Vec<usize>],
    /// Groups per draw.
    widths: Vec<usize>,
    /// Per draw, `n x width` counts of (working group, draw label).
    joint: Vec<Vec<u32>>,
    sizes: Vec<usize>,
    labels: Vec<usize>,
}

#[inline]
fn xlogx(n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        let v = n as f64;
        v * v.ln()
    }
}

impl<'a> ViState<'a> {
    fn new(draws: &'a [Vec<usize>], labels: Vec<usize>) -> Self {
        let n = labels.len();
        let mut sizes = vec![0; n];
        for &l in &labels {
            sizes[l] += 1;
        }
        let widths: Vec<usize> = draws.iter().map(|d| d.iter().max().map_or(1, |m| m + 1)).collect();
        let joint = draws
            .iter()
            .zip(&widths)
            .map(|(d, &w)| {
                let mut t = vec![0u32; n * w];
                for (i, &l) in labels.iter().enumerate() {
                    t[l * w + d[i]] += 1;
                }
                t
            })
            .collect();
        Self {
            draws,
            widths,
            joint,
            sizes,
            labels,
        }
    }

    /// Change in the summed (over draws) VI numerator when actor `i` moves
    /// to group `to`. VI(c, g) * n = sum_a f(n_a) + sum_b f(m_b)
    /// - 2 sum_ab f(n_ab), with f(x) = x ln x.
    fn move_delta(&self, i: usize, to: usize) -> f64 {
        let from = self.labels[i];
        let m = self.draws.len() as f64;
        let size_term =
            xlogx(self.sizes[from] - 1) - xlogx(self.sizes[from]) + xlogx(self.sizes[to] + 1) - xlogx(self.sizes[to]);
        let mut joint_term = 0.0;
        for ((d, t), &w) in self.draws.iter().zip(&self.joint).zip(&self.widths) {
            let b = d[i];
            let nf = t[from * w + b] as usize;
            let nt = t[to * w + b] as usize;
            joint_term += xlogx(nf - 1) - xlogx(nf) + xlogx(nt + 1) - xlogx(nt);
        }
        m * size_term - 2.0 * joint_term
    }

    fn apply(&mut self, i: usize, to: usize) {
        let from = self.labels[i];
        self.sizes[from] -= 1;
        self.sizes[to] += 1;
        for ((d, t), &w) in self.draws.iter().zip(self.joint.iter_mut()).zip(&self.widths) {
            let b = d[i];
            t[from * w + b] -= 1;
            t[to * w + b] += 1;
        }
        self.labels[i] = to;
    }
}

/// Mean variation of information between `c` and the draws.
pub fn expected_vi(c: &Partition, draws: &[Vec<usize>]) -> f64 {
    let n = c.len() as f64;
    let own: f64 = c.sizes().iter().map(|&s| xlogx(s)).sum();
    let mut total = 0.0;
    for d in draws {
        let p = Partition::new(d);
        let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
        for i in 0..c.len() {
            *joint.entry((c.labels[i], p.labels[i])).or_insert(0) += 1;
        }
        let other: f64 = p.sizes().iter().map(|&s| xlogx(s)).sum();
        let cross: f64 = joint.values().map(|&v| xlogx(v)).sum();
        total += (own + other - 2.0 * cross) / n;
    }
    total / draws.len() as f64
}

/// Sampled partitions scored when picking the first greedy start.
const EPL_START_POOL: usize = 50;

fn greedy_epl(draws: &[Vec<usize>], opts: &EstimatorOptions) -> Result<Partition> {
    let n = check_draws(draws)?;
    let canon: Vec<Vec<usize>> = draws
        .iter()
        .map(|d| Partition::new(d).labels().iter().map(|l| l - 1).collect())
        .collect();
    let draws = &canon[..];
    let max_groups = opts.max_groups.unwrap_or(n).max(1);
    let mut starts: Vec<Vec<usize>> = Vec::new();
    // Best of an evenly spaced pool of sampled partitions first, then
    // random restarts with at most sqrt(N) groups.
    let stride = draws.len().div_ceil(EPL_START_POOL);
    let pool: Vec<Partition> = draws.iter().step_by(stride).map(|d| Partition::new(d)).collect();
    let best_sampled = best_by(&pool, |c| expected_vi(c, draws))?;
    if best_sampled.n_groups() <= max_groups {
        starts.push(best_sampled.labels().iter().map(|l| l - 1).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while starts.len() < opts.restarts.max(1) {
        let cap = ((n as f64).sqrt().ceil() as usize).clamp(1, max_groups.min(n));
        let k = rng.random_range(1..=cap);
        starts.push((0..n).map(|_| rng.random_range(0..k)).collect());
    }
    let mut finals = Vec::with_capacity(starts.len());
    for s in starts {
        let canon = Partition::new(&s);
        let labels = canon.labels().iter().map(|l| l - 1).collect();
        let mut st = ViState::new(draws, labels);
        loop {
            let mut improved = false;
            for i in 0..n {
                let groups = st.sizes.iter().rposition(|&s| s > 0).map_or(0, |p| p + 1);
                let used = st.sizes[..groups].iter().filter(|&&s| s > 0).count();
                let mut best = (-1e-10, usize::MAX);
                // Existing groups, plus the first empty slot as a new group.
                let fresh = st.sizes.iter().position(|&s| s == 0).unwrap_or(n);
                for to in (0..groups).chain((fresh < n).then_some(fresh)) {
                    if to == st.labels[i] {
                        continue;
                    }
                    let opens = st.sizes[to] == 0;
                    if opens && (used >= max_groups || st.sizes[st.labels[i]] == 1) {
                        continue;
                    }
                    let d = st.move_delta(i, to);
                    if d < best.0 {
                        best = (d, to);
                    }
                }
                if best.1 != usize::MAX {
                    st.apply(i, best.1);
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        finals.push(Partition::new(&st.labels));
    }
    best_by(&finals, |c| expected_vi(c, draws))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn canonical_labels() {
        let p = Partition::new(&[7, 7, 3, 9, 3]);
        assert_eq!(p.labels(), &[1, 1, 2, 3, 2]);
        assert_eq!(p.n_groups(), 3);
        assert_eq!(p.sizes(), vec![2, 2, 1]);
    }

    #[test]
    fn psm_hand_count() {
        let psm = posterior_similarity(&[vec![1, 1, 2], vec![1, 2, 2]]).unwrap();
        assert_eq!(psm.get(0, 1), 0.5);
        assert_eq!(psm.get(1, 2), 0.5);
        assert_eq!(psm.get(0, 2), 0.0);
        assert_eq!(psm.get(2, 2), 1.0);
        assert!(posterior_similarity(&[vec![1, 2], vec![1]]).is_err());
        assert!(posterior_similarity(&[]).is_err());
    }

    #[test]
    fn ari_battery() {
        let p = Partition::new(&[1, 1, 2, 2]);
        let q = Partition::new(&[1, 2, 1, 2]);
        assert!((adjusted_rand_index(&p, &q).unwrap() + 0.5).abs() < 1e-15);
        let r = Partition::new(&[5, 5, 0, 0]);
        assert_eq!(adjusted_rand_index(&p, &r).unwrap(), 1.0);
        assert!(adjusted_rand_index(&p, &Partition::new(&[1, 2])).is_err());
        let one = Partition::new(&[1, 1, 1]);
        assert_eq!(adjusted_rand_index(&one, &one).unwrap(), 1.0);
    }

    #[test]
    fn block_psm_is_recovered_by_all_methods() {
        let truth = vec![1, 1, 2, 2, 2, 3];
        let draws = vec![truth.clone(), vec![4, 4, 1, 1, 1, 2]];
        let psm = posterior_similarity(&draws).unwrap();
        for m in [PartitionMethod::MaxPear, PartitionMethod::MinBinder, PartitionMethod::GreedyEpl] {
            let p = point_estimate_partition(&draws, &psm, m, &EstimatorOptions::default()).unwrap();
            assert_eq!(p, Partition::new(&truth), "{m:?}");
        }
    }

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (1..=7).map(|n| enumerate_partitions(n, n).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 52, 203, 877]);
        assert_eq!(enumerate_partitions(4, 2).len(), 8);
    }

    #[test]
    fn upgma_cuts_cover_every_level() {
        let draws = vec![vec![1, 1, 2, 2, 3], vec![1, 1, 2, 3, 3], vec![1, 2, 2, 3, 3]];
        let psm = posterior_similarity(&draws).unwrap();
        let cuts = average_linkage_cuts(&psm);
        let groups: Vec<usize> = cuts.iter().map(Partition::n_groups).collect();
        assert_eq!(groups, vec![5, 4, 3, 2, 1]);
    }

    #[test]
    fn greedy_vi_delta_matches_direct() {
        let draws = vec![vec![1, 1, 2, 2, 3, 3], vec![1, 2, 2, 3, 3, 1], vec![2, 2, 2, 1, 1, 1]];
        let mut st = ViState::new(&draws, vec![0, 0, 1, 1, 2, 2]);
        let n = 6.0;
        let m = 3.0;
        for (i, to) in [(0, 1), (3, 0), (5, 3), (2, 2)] {
            let before = expected_vi(&Partition::new(&st.labels), &draws);
            let delta = st.move_delta(i, to);
            st.apply(i, to);
            let after = expected_vi(&Partition::new(&st.labels), &draws);
            assert!(((after - before) - delta / (n * m)).abs() < 1e-12);
        }
    }

    #[test]
    fn local_search_finds_binder_optimum_on_small_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let draws: Vec<Vec<usize>> = (0..4).map(|_| (0..6).map(|_| rng.random_range(0..3)).collect()).collect();
            let psm = posterior_similarity(&draws).unwrap();
            let exact = EstimatorOptions {
                exact_binder_max_n: 10,
                ..EstimatorOptions::default()
            };
            let a = point_estimate_partition(&draws, &psm, PartitionMethod::MinBinder, &exact).unwrap();
            let b = point_estimate_partition(&draws, &psm, PartitionMethod::MinBinder, &EstimatorOptions::default()).unwrap();
            assert!((binder_loss(&a, &psm) - binder_loss(&b, &psm)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn ari_symmetric_and_label_invariant(
            a in proptest::collection::vec(0usize..4, 12),
            b in proptest::collection::vec(0usize..4, 12),
            shift in 1usize..10,
        ) {
            let p = Partition::new(&a);
            let q = Partition::new(&b);
            let v = adjusted_rand_index(&p, &q).unwrap();
            prop_assert!(v <= 1.0 + 1e-12);
            prop_assert!((v - adjusted_rand_index(&q, &p).unwrap()).abs() < 1e-12);
            let relabeled: Vec<usize> = a.iter().map(|l| (l + shift) * 7).collect();
            prop_assert!((v - adjusted_rand_index(&Partition::new(&relabeled), &q).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn psm_matches_brute_force(draws in proptest::collection::vec(proptest::collection::vec(0usize..3, 5), 1..6)) {
            let psm = posterior_similarity(&draws).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    let c = draws.iter().filter(|d| d[i] == d[j]).count() as f64 / draws.len() as f64;
                    prop_assert_eq!(psm.get(i, j), c);
                    prop_assert_eq!(psm.get(i, j), psm.get(j, i));
                }
            }
        }

        #[test]
        fn estimates_invariant_to_relabeling(
            draws in proptest::collection::vec(proptest::collection::vec(0usize..3, 6), 2..5),
        ) {
            let relabeled: Vec<Vec<usize>> = draws.iter().map(|d| d.iter().map(|l| 10 - l).collect()).collect();
            let p1 = posterior_similarity(&draws).unwrap();
            let p2 = posterior_similarity(&relabeled).unwrap();
            for m in [PartitionMethod::MaxPear, PartitionMethod::MinBinder, PartitionMethod::GreedyEpl] {
                let o = EstimatorOptions::default();
                let a = point_estimate_partition(&draws, &p1, m, &o).unwrap();
                let b = point_estimate_partition(&relabeled, &p2, m, &o).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
