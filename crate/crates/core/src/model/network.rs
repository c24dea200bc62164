use crate::bits::BitMatrix;
use crate::error::{Error, Result};
use crate::model::population::Population;

/// Binary adjacency stored one bit per entry, with per-unit neighbor lists
/// for sparse iteration.
///
/// Undirected networks keep both `(i, j)` and `(j, i)` bits set and use a
/// single neighbor list per unit. Directed networks keep separate out- and
/// in-neighbor lists. Neighbor-list order is an implementation detail.
#[derive(Debug, Clone)]
pub struct Network {
    n: usize,
    directed: bool,
    bits: BitMatrix,
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
    edges: usize,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.directed == other.directed && self.bits == other.bits
    }
}

impl Network {
    pub fn empty(n: usize, directed: bool) -> Self {
        Self {
            n,
            directed,
            bits: BitMatrix::new(n),
            out: vec![Vec::new(); n],
            inn: if directed { vec![Vec::new(); n] } else { Vec::new() },
            edges: 0,
        }
    }

    /// Builds a network from an edge list. Undirected edges may be given in
    /// either orientation; duplicates are rejected.
    pub fn from_edges(n: usize, directed: bool, edges: &[(usize, usize)]) -> Result<Self> {
        let mut net = Self::empty(n, directed);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange { index: i.max(j), n });
            }
            if i == j {
                return Err(Error::Invalid(format!("self-loop at unit {i}")));
            }
            if net.has_edge(i, j) {
                return Err(Error::Invalid(format!("duplicate edge ({i}, {j})")));
            }
            net.set(i, j, true);
        }
        Ok(net)
    }

    pub fn n_units(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits.get(i, j)
    }

    #[inline]
    pub fn z(&self, i: usize, j: usize) -> f64 {
        if self.bits.get(i, j) {
            1.0
        } else {
            0.0
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// Out-neighbors (all neighbors when undirected).
    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    /// In-neighbors (all neighbors when undirected).
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        if self.directed {
            &self.inn[i]
        } else {
            &self.out[i]
        }
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out[i].len()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_neighbors(i).len()
    }

    /// Sets entry `(i, j)` (and `(j, i)` when undirected). Returns whether
    /// the entry changed.
    pub fn set(&mut self, i: usize, j: usize, value: bool) -> bool {
        debug_assert!(i != j);
        if self.bits.get(i, j) == value {
            return false;
        }
        self.bits.set(i, j, value);
        if self.directed {
            list_update(&mut self.out[i], j, value);
            list_update(&mut self.inn[j], i, value);
        } else {
            self.bits.set(j, i, value);
            list_update(&mut self.out[i], j, value);
            list_update(&mut self.out[j], i, value);
        }
        if value {
            self.edges += 1;
        } else {
            self.edges -= 1;
        }
        true
    }

    /// Edges in lexicographic order; undirected edges reported once with
    /// `src < dst`.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edges);
        for i in 0..self.n {
            let mut nb: Vec<usize> = self.out[i]
                .iter()
                .copied()
                .filter(|&j| self.directed || j > i)
                .collect();
            nb.sort_unstable();
            out.extend(nb.into_iter().map(|j| (i, j)));
        }
        out
    }

    /// Whether the stored adjacency satisfies its structural invariants.
    pub fn is_consistent(&self) -> bool {
        (0..self.n).all(|i| {
            !self.bits.get(i, i)
                && (self.directed || (0..self.n).all(|j| self.bits.get(i, j) == self.bits.get(j, i)))
                && self.out[i].len() == self.bits.row_count(i)
        })
    }
}

fn list_update(list: &mut Vec<usize>, v: usize, insert: bool) {
    if insert {
        list.push(v);
    } else if let Some(pos) = list.iter().position(|&x| x == v) {
        list.swap_remove(pos);
    }
}

/// Counts of neighborhood-bound two-paths for every ordered pair:
/// `count(a, b) = #{k in N_a ∩ N_b, k ∉ {a, b} : z_ak = z_kb = 1}`.
///
/// The count is kept in sync with single-entry network toggles in O(degree)
/// time, which is what makes transitive change statistics cheap during
/// Gibbs sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPaths {
    n: usize,
    counts: Vec<u16>,
}

impl TwoPaths {
    pub fn build(pop: &Population, net: &Network) -> Self {
        let n = net.n_units();
        let mut counts = vec![0u16; n * n];
        for a in 0..n {
            for &k in net.out_neighbors(a) {
                if !pop.contains(a, k) {
                    continue;
                }
                for &b in net.out_neighbors(k) {
                    if b != a && pop.contains(b, k) {
                        counts[a * n + b] += 1;
                    }
                }
            }
        }
        Self { n, counts }
    }

    #[inline]
    pub fn count(&self, a: usize, b: usize) -> u16 {
        self.counts[a * self.n + b]
    }

    /// Updates the counts for the toggle of entry `(i, j)`. `added` is the
    /// new value of the entry. Works whether called before or after the
    /// network itself is updated.
    pub fn on_toggle(&mut self, pop: &Population, net: &Network, i: usize, j: usize, added: bool) {
        let n = self.n;
        let bump = |c: &mut u16| {
            if added {
                *c += 1
            } else {
                *c -= 1
            }
        };
        if net.is_directed() {
            // paths i -> j -> b
            for &b in net.out_neighbors(j) {
                if b != i && pop.in_shared(i, b, j) {
                    bump(&mut self.counts[i * n + b]);
                }
            }
            // paths a -> i -> j
            for &a in net.in_neighbors(i) {
                if a != j && pop.in_shared(a, j, i) {
                    bump(&mut self.counts[a * n + j]);
                }
            }
        } else {
            for &b in net.out_neighbors(j) {
                if b != i && pop.in_shared(i, b, j) {
                    bump(&mut self.counts[i * n + b]);
                    bump(&mut self.counts[b * n + i]);
                }
            }
            for &b in net.out_neighbors(i) {
                if b != j && pop.in_shared(j, b, i) {
                    bump(&mut self.counts[j * n + b]);
                    bump(&mut self.counts[b * n + j]);
                }
            }
        }
    }
}

/// The two-path indicator d(i, j): 1 iff some `k` in the shared
/// neighborhood of `i` and `j` has `z_ik = z_kj = 1`.
pub fn two_path_indicator(pop: &Population, net: &Network, i: usize, j: usize) -> Result<u8> {
    pop.check_pair(i, j)?;
    if net.n_units() != pop.n_units() {
        return Err(Error::Dimension(format!(
            "network has {} units, population {}",
            net.n_units(),
            pop.n_units()
        )));
    }
    let found = pop
        .neighborhood(i)
        .iter()
        .any(|&k| k != i && k != j && pop.contains(j, k) && net.has_edge(i, k) && net.has_edge(k, j));
    Ok(found as u8)
}
