use std::cmp::Reverse;
use std::collections::BTreeSet;

use super::histogram::{estimate_from_counts, histogram_cost, Hfs, Histogram};
use super::range_coder::MAX_TOTAL;
use super::EntropyError;

pub const DEFAULT_MERGE_WINDOW: usize = 4;

/// A contiguous run of codewords coded with one histogram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    pub start: usize,
    pub histogram: Histogram,
    pub hfs: Hfs,
}

impl Section {
    pub fn len(&self) -> usize {
        self.histogram.total() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len()
    }
}

#[derive(Clone, Debug)]
pub struct Partition {
    pub sections: Vec<Section>,
    /// Total estimated length in bits, before the first merge and after each one.
    pub trace: Vec<u64>,
}

impl Partition {
    pub fn estimated_bits(&self) -> u64 {
        *self.trace.last().expect("trace starts with the initial total")
    }

    pub fn merges(&self) -> usize {
        self.trace.len() - 1
    }
}

type Sparse = Vec<(u32, u64)>;

/// Estimated coded length of a section in bits: AC estimate, histogram
/// bytes and the 2-bit selector.
pub fn estimated_section_len(h: &Histogram) -> Result<u64, EntropyError> {
    let sparse: Sparse = h.nonzero().map(|(i, c)| (i as u32, c)).collect();
    if sparse.is_empty() {
        return Err(EntropyError::EmptyHistogram);
    }
    Ok(sparse_len(h.l_max(), &sparse))
}

fn sparse_len(l_max: u32, h: &Sparse) -> u64 {
    let ac = estimate_from_counts(h.iter().map(|&(_, c)| c)).unwrap_or(0);
    let (_, bytes) = histogram_cost(l_max, h.iter().map(|&(i, c)| (i as usize, c)));
    ac + 8 * bytes as u64 + 2
}

fn merge_into(acc: &mut Sparse, other: &Sparse) {
    let mut out = Vec::with_capacity(acc.len() + other.len());
    let (mut a, mut b) = (acc.iter().peekable(), other.iter().peekable());
    loop {
        match (a.peek(), b.peek()) {
            (Some(&&(ia, ca)), Some(&&(ib, cb))) => {
                if ia == ib {
                    out.push((ia, ca + cb));
                    a.next();
                    b.next();
                } else if ia < ib {
                    out.push((ia, ca));
                    a.next();
                } else {
                    out.push((ib, cb));
                    b.next();
                }
            }
            (Some(&&x), None) => {
                out.push(x);
                a.next();
            }
            (None, Some(&&x)) => {
                out.push(x);
                b.next();
            }
            (None, None) => break,
        }
    }
    *acc = out;
}

struct Node {
    start: usize,
    total: u64,
    hist: Sparse,
    est: u64,
    prev: Option<usize>,
    next: Option<usize>,
    /// Gains of merging runs of 2..=m sections starting here, if positive.
    gains: Vec<Option<i64>>,
}

type Key = (Reverse<i64>, usize, usize);

struct Partitioner {
    l_max: u32,
    m: usize,
    nodes: Vec<Node>,
    queue: BTreeSet<Key>,
}

impl Partitioner {
    fn refresh(&mut self, id: usize) {
        for (k, g) in self.nodes[id].gains.iter().enumerate() {
            if let Some(g) = g {
                self.queue.remove(&(Reverse(*g), self.nodes[id].start, k + 2));
            }
        }
        let mut gains = vec![None; self.m - 1];
        let mut hist = self.nodes[id].hist.clone();
        let mut total = self.nodes[id].total;
        let mut sum_est = self.nodes[id].est;
        let mut cur = self.nodes[id].next;
        for slot in gains.iter_mut() {
            let Some(n) = cur else { break };
            let node = &self.nodes[n];
            total += node.total;
            if total > MAX_TOTAL {
                break;
            }
            merge_into(&mut hist, &node.hist);
            sum_est += node.est;
            let gain = sum_est as i64 - sparse_len(self.l_max, &hist) as i64;
            if gain > 0 {
                *slot = Some(gain);
            }
            cur = node.next;
        }
        for (k, g) in gains.iter().enumerate() {
            if let Some(g) = g {
                self.queue.insert((Reverse(*g), self.nodes[id].start, k + 2));
            }
        }
        self.nodes[id].gains = gains;
    }

    fn drop_candidates(&mut self, id: usize) {
        let start = self.nodes[id].start;
        for (k, g) in std::mem::take(&mut self.nodes[id].gains).into_iter().enumerate() {
            if let Some(g) = g {
                self.queue.remove(&(Reverse(g), start, k + 2));
            }
        }
    }

    /// Merges `run` sections starting at `id`; returns the realized gain.
    fn merge(&mut self, id: usize, run: usize) -> i64 {
        let mut sum_est = self.nodes[id].est;
        let mut cur = self.nodes[id].next;
        for _ in 1..run {
            let n = cur.expect("run extends past the last section");
            self.drop_candidates(n);
            let taken = std::mem::take(&mut self.nodes[n].hist);
            merge_into(&mut self.nodes[id].hist, &taken);
            self.nodes[id].total += self.nodes[n].total;
            sum_est += self.nodes[n].est;
            cur = self.nodes[n].next;
        }
        self.nodes[id].next = cur;
        if let Some(c) = cur {
            self.nodes[c].prev = Some(id);
        }
        let est = sparse_len(self.l_max, &self.nodes[id].hist);
        self.nodes[id].est = est;
        let mut p = Some(id);
        for _ in 0..self.m {
            let Some(q) = p else { break };
            self.refresh(q);
            p = self.nodes[q].prev;
        }
        sum_est as i64 - est as i64
    }
}

/// Greedy section partitioning. Starting from one section per codeword, the
/// run of `2..=m` adjacent sections whose merge most reduces the estimated
/// total length is merged until no merge reduces it. Equal gains go to the
/// run that starts first, then to the shorter run.
pub fn partition_sections(codewords: &[i32], l_max: u32, m: usize) -> Result<Partition, EntropyError> {
    if codewords.is_empty() {
        return Err(EntropyError::EmptyHistogram);
    }
    let m = m.max(2);
    let probe = Histogram::new(l_max);
    let mut nodes = Vec::with_capacity(codewords.len());
    for (i, &c) in codewords.iter().enumerate() {
        let hist = vec![(probe.index_of(c)? as u32, 1u64)];
        let est = sparse_len(l_max, &hist);
        nodes.push(Node {
            start: i,
            total: 1,
            hist,
            est,
            prev: i.checked_sub(1),
            next: (i + 1 < codewords.len()).then_some(i + 1),
            gains: Vec::new(),
        });
    }
    let initial: u64 = nodes.iter().map(|n| n.est).sum();
    let mut p = Partitioner { l_max, m, nodes, queue: BTreeSet::new() };
    for id in 0..codewords.len() {
        p.refresh(id);
    }
    let mut trace = vec![initial];
    let mut total = initial;
    while let Some(&(Reverse(gain), start, run)) = p.queue.first() {
        let realized = p.merge(start, run);
        debug_assert_eq!(realized, gain);
        total = total.checked_sub(realized as u64).expect("merge gains are positive");
        trace.push(total);
    }
    let mut sections = Vec::new();
    let mut cur = Some(0usize);
    while let Some(id) = cur {
        let node = &p.nodes[id];
        let mut counts = vec![0u64; 2 * l_max as usize];
        for &(i, c) in &node.hist {
            counts[i as usize] = c;
        }
        let (hfs, _) = histogram_cost(l_max, node.hist.iter().map(|&(i, c)| (i as usize, c)));
        sections.push(Section { start: node.start, histogram: Histogram::from_counts(l_max, counts)?, hfs });
        cur = node.next;
    }
    Ok(Partition { sections, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn section_cost(cw: &[i32], l: u32) -> u64 {
        estimated_section_len(&Histogram::from_codewords(cw, l).unwrap()).unwrap()
    }

    /// Optimal contiguous partition by dynamic programming over cut points.
    fn optimal_cost(cw: &[i32], l: u32) -> u64 {
        let n = cw.len();
        let mut best = vec![u64::MAX; n + 1];
        best[0] = 0;
        for end in 1..=n {
            for start in 0..end {
                let c = best[start] + section_cost(&cw[start..end], l);
                best[end] = best[end].min(c);
            }
        }
        best[n]
    }

    fn check_tiling(p: &Partition, cw: &[i32], l: u32) {
        let mut pos = 0;
        for s in &p.sections {
            assert_eq!(s.start, pos);
            assert_eq!(s.histogram, Histogram::from_codewords(&cw[s.range()], l).unwrap());
            pos += s.len();
        }
        assert_eq!(pos, cw.len());
        let sum: u64 = p.sections.iter().map(|s| estimated_section_len(&s.histogram).unwrap()).sum();
        assert_eq!(sum, p.estimated_bits());
    }

    #[test]
    fn constant_sequence_collapses() {
        for n in [1, 2, 5, 64, 1000] {
            let cw = vec![2; n];
            let p = partition_sections(&cw, 4, 4).unwrap();
            assert_eq!(p.sections.len(), 1);
            assert_eq!(p.sections[0].hfs, Hfs::Indexed);
            check_tiling(&p, &cw, 4);
        }
    }

    #[test]
    fn two_runs_near_optimal() {
        let cw: Vec<i32> = [vec![-1; 10], vec![1; 10]].concat();
        let p = partition_sections(&cw, 2, 4).unwrap();
        check_tiling(&p, &cw, 2);
        let opt = optimal_cost(&cw, 2);
        assert!(p.estimated_bits() as f64 <= 1.1 * opt as f64, "{} vs {}", p.estimated_bits(), opt);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(partition_sections(&[], 2, 4).is_err());
        assert!(partition_sections(&[5], 2, 4).is_err());
    }

    proptest! {
        #[test]
        fn greedy_is_monotone_and_tiles(cw in prop::collection::vec(-4i32..=4, 1..400)) {
            let p = partition_sections(&cw, 4, 4).unwrap();
            check_tiling(&p, &cw, 4);
            prop_assert!(p.trace.windows(2).all(|w| w[1] < w[0]));
            prop_assert!(p.merges() < cw.len());
            for s in &p.sections {
                prop_assert_eq!(s.hfs, histogram_cost(4, s.histogram.nonzero()).0);
            }
        }

        #[test]
        fn small_sequences_close_to_optimum(cw in prop::collection::vec(-2i32..=2, 1..24)) {
            let p = partition_sections(&cw, 2, 4).unwrap();
            let opt = optimal_cost(&cw, 2);
            prop_assert!(opt <= p.estimated_bits());
        }
    }
}
