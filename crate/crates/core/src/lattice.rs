//! Finite posets and distributive lattices.
//!
//! Elements are stored in canonical order (coordinate tuples lexicographically
//! for grids, string ids lexicographically for explicit posets), so an element
//! is just an index into that order. The canonical order is always a linear
//! extension for grids; explicit posets carry a separate topological order.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Default cap on candidate covers visited during full cube enumeration.
pub const DEFAULT_MAX_COVERS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PosetKind {
    /// Product of chains `{0..shape[0]-1} x ... x {0..shape[N-1]-1}`.
    Grid {
        shape: Vec<usize>,
    },
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet(vec![0; n.div_ceil(64)])
    }
    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn union_with(&mut self, other: &BitSet) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a |= b);
    }
}

const NONE: u32 = u32::MAX;

#[derive(Debug)]
pub struct FinitePoset {
    kind: PosetKind,
    labels: Vec<String>,
    coords: Vec<Vec<usize>>,
    strides: Vec<usize>,
    index: HashMap<String, usize>,
    covers: Vec<(usize, usize)>,
    cover_index: HashMap<(usize, usize), usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    up: Vec<BitSet>,
    topo: Vec<usize>,
    joins: OnceLock<(Vec<u32>, Vec<u32>)>,
    profile: OnceLock<LatticeProfile>,
}

impl PartialEq for FinitePoset {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.labels == other.labels && self.covers == other.covers
    }
}

impl Eq for FinitePoset {}

/// Label of a grid element, `"x,y[,z...]"`.
pub fn grid_label(coords: &[usize]) -> String {
    coords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

impl FinitePoset {
    /// The product of chains with the given lengths.
    pub fn grid(shape: &[usize]) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::InvalidInput(format!("bad grid shape {shape:?}")));
        }
        let n: usize = shape.iter().product();
        let mut strides = vec![1; shape.len()];
        for i in (0..shape.len() - 1).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        let coords: Vec<Vec<usize>> = (0..n)
            .map(|mut idx| {
                strides
                    .iter()
                    .map(|&s| {
                        let c = idx / s;
                        idx %= s;
                        c
                    })
                    .collect()
            })
            .collect();
        let labels: Vec<String> = coords.iter().map(|c| grid_label(c)).collect();
        let mut covers = Vec::new();
        for (i, c) in coords.iter().enumerate() {
            for axis in 0..shape.len() {
                if c[axis] + 1 < shape[axis] {
                    covers.push((i, i + strides[axis]));
                }
            }
        }
        covers.sort_unstable();
        Self::assemble(PosetKind::Grid { shape: shape.to_vec() }, labels, coords, strides, covers)
    }

    /// An explicit poset from element ids and cover pairs `(a, b)` meaning `a < b`
    /// with nothing in between.
    pub fn explicit<S: AsRef<str>>(elements: &[S], hasse: &[(S, S)]) -> Result<Self> {
        let mut labels: Vec<String> = elements.iter().map(|e| e.as_ref().to_string()).collect();
        labels.sort();
        if labels.is_empty() {
            return Err(Error::InvalidInput("empty poset".into()));
        }
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!("duplicate element {}", w[0])));
        }
        let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut covers = Vec::with_capacity(hasse.len());
        for (a, b) in hasse {
            let (a, b) = (a.as_ref(), b.as_ref());
            let ia = *index.get(a).ok_or_else(|| Error::InvalidInput(format!("unknown element {a}")))?;
            let ib = *index.get(b).ok_or_else(|| Error::InvalidInput(format!("unknown element {b}")))?;
            if ia == ib {
                return Err(Error::InvalidInput(format!("reflexive cover {a}->{a}")));
            }
            covers.push((ia, ib));
        }
        covers.sort_unstable();
        covers.dedup();
        let poset = Self::assemble(PosetKind::Explicit, labels, Vec::new(), Vec::new(), covers)?;
        // transitive reduction: a cover must be the only path between its ends
        for &(a, b) in &poset.covers {
            for &c in &poset.children[a] {
                if c != b && poset.leq(c, b) {
                    return Err(Error::InvalidInput(format!(
                        "cover {}->{} is implied by a longer path through {}",
                        poset.labels[a], poset.labels[b], poset.labels[c]
                    )));
                }
            }
        }
        Ok(poset)
    }

    fn assemble(
        kind: PosetKind,
        labels: Vec<String>,
        coords: Vec<Vec<usize>>,
        strides: Vec<usize>,
        covers: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = labels.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(a, b) in &covers {
            children[a].push(b);
            parents[b].push(a);
        }
        // Kahn's algorithm, smallest canonical index first.
        let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(x) = ready.pop_first() {
            topo.push(x);
            for &c in &children[x] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if topo.len() != n {
            return Err(Error::InvalidInput("cover relation contains a cycle".into()));
        }
        let mut up = vec![BitSet::new(n); n];
        for &x in topo.iter().rev() {
            let mut set = BitSet::new(n);
            set.insert(x);
            for &c in &children[x] {
                set.union_with(&up[c]);
            }
            up[x] = set;
        }
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let cover_index = covers.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Ok(FinitePoset {
            kind,
            labels,
            coords,
            strides,
            index,
            covers,
            cover_index,
            parents,
            children,
            up,
            topo,
            joins: OnceLock::new(),
            profile: OnceLock::new(),
        })
    }

    pub fn kind(&self) -> &PosetKind {
        &self.kind
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.kind, PosetKind::Grid { .. })
    }

    /// Chain lengths when this is a grid.
    pub fn shape(&self) -> Option<&[usize]> {
        match &self.kind {
            PosetKind::Grid { shape } => Some(shape),
            PosetKind::Explicit => None,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.len()
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Grid coordinates of `x` (empty for explicit posets).
    pub fn coords(&self, x: usize) -> &[usize] {
        if self.coords.is_empty() {
            &[]
        } else {
            &self.coords[x]
        }
    }

    pub fn index_of_coords(&self, c: &[usize]) -> Option<usize> {
        let shape = self.shape()?;
        if c.len() != shape.len() || c.iter().zip(shape).any(|(&v, &m)| v >= m) {
            return None;
        }
        Some(c.iter().zip(&self.strides).map(|(v, s)| v * s).sum())
    }

    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    pub fn cover_index(&self, a: usize, b: usize) -> Option<usize> {
        self.cover_index.get(&(a, b)).copied()
    }

    pub fn cover_label(&self, c: usize) -> String {
        let (a, b) = self.covers[c];
        format!("{}->{}", self.labels[a], self.labels[b])
    }

    pub fn parents(&self, x: usize) -> &[usize] {
        &self.parents[x]
    }

    pub fn children(&self, x: usize) -> &[usize] {
        &self.children[x]
    }

    /// A linear extension: every element appears after everything below it.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        match &self.kind {
            PosetKind::Grid { .. } => self.coords[a].iter().zip(&self.coords[b]).all(|(x, y)| x <= y),
            PosetKind::Explicit => self.up[a].contains(b),
        }
    }

    pub fn lt(&self, a: usize, b: usize) -> bool {
        a != b && self.leq(a, b)
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.leq(a, b) || self.leq(b, a)
    }

    /// `{y : y <= x}` in canonical order.
    pub fn down_set(&self, x: usize) -> Vec<usize> {
        self.elements().filter(|&y| self.leq(y, x)).collect()
    }

    /// `{y : y >= x}` in canonical order.
    pub fn up_set(&self, x: usize) -> Vec<usize> {
        self.elements().filter(|&y| self.leq(x, y)).collect()
    }

    fn tables(&self) -> &(Vec<u32>, Vec<u32>) {
        self.joins.get_or_init(|| {
            let n = self.len();
            let mut join = vec![NONE; n * n];
            let mut meet = vec![NONE; n * n];
            for a in 0..n {
                for b in a..n {
                    let ub: Vec<usize> =
                        self.topo.iter().copied().filter(|&u| self.leq(a, u) && self.leq(b, u)).collect();
                    if let Some(&least) = ub.first() {
                        if ub.iter().all(|&u| self.leq(least, u)) {
                            join[a * n + b] = least as u32;
                            join[b * n + a] = least as u32;
                        }
                    }
                    let lb: Vec<usize> =
                        self.topo.iter().rev().copied().filter(|&u| self.leq(u, a) && self.leq(u, b)).collect();
                    if let Some(&greatest) = lb.first() {
                        if lb.iter().all(|&u| self.leq(u, greatest)) {
                            meet[a * n + b] = greatest as u32;
                            meet[b * n + a] = greatest as u32;
                        }
                    }
                }
            }
            (join, meet)
        })
    }

    pub fn join(&self, a: usize, b: usize) -> Option<usize> {
        match &self.kind {
            PosetKind::Grid { .. } => {
                let c: Vec<usize> = self.coords[a].iter().zip(&self.coords[b]).map(|(x, y)| *x.max(y)).collect();
                self.index_of_coords(&c)
            }
            PosetKind::Explicit => {
                let v = self.tables().0[a * self.len() + b];
                (v != NONE).then_some(v as usize)
            }
        }
    }

    pub fn meet(&self, a: usize, b: usize) -> Option<usize> {
        match &self.kind {
            PosetKind::Grid { .. } => {
                let c: Vec<usize> = self.coords[a].iter().zip(&self.coords[b]).map(|(x, y)| *x.min(y)).collect();
                self.index_of_coords(&c)
            }
            PosetKind::Explicit => {
                let v = self.tables().1[a * self.len() + b];
                (v != NONE).then_some(v as usize)
            }
        }
    }

    /// Join of a nonempty family. Panics on missing joins; callers check lattice-ness first.
    pub fn join_all(&self, xs: &[usize]) -> usize {
        xs.iter().copied().reduce(|a, b| self.join(a, b).expect("join exists")).expect("nonempty")
    }

    pub fn meet_all(&self, xs: &[usize]) -> usize {
        xs.iter().copied().reduce(|a, b| self.meet(a, b).expect("meet exists")).expect("nonempty")
    }

    /// The least element, if there is one.
    pub fn bottom(&self) -> Option<usize> {
        let mins: Vec<usize> = self.elements().filter(|&x| self.parents[x].is_empty()).collect();
        (mins.len() == 1).then(|| mins[0])
    }

    /// The greatest element, if there is one.
    pub fn top(&self) -> Option<usize> {
        let maxs: Vec<usize> = self.elements().filter(|&x| self.children[x].is_empty()).collect();
        (maxs.len() == 1).then(|| maxs[0])
    }

    /// Cached lattice profile (see [`analyze_lattice`]).
    pub fn profile(&self) -> &LatticeProfile {
        self.profile.get_or_init(|| compute_profile(self))
    }

    /// The opposite poset and the index map `old -> new`. Grids stay grids,
    /// with coordinates reflected so that the canonical order is preserved.
    pub fn opposite(&self) -> (FinitePoset, Vec<usize>) {
        match &self.kind {
            PosetKind::Grid { shape } => {
                let op = FinitePoset::grid(shape).expect("same shape");
                let map = self
                    .elements()
                    .map(|x| {
                        let c: Vec<usize> = self.coords[x].iter().zip(shape).map(|(&v, &m)| m - 1 - v).collect();
                        op.index_of_coords(&c).unwrap()
                    })
                    .collect();
                (op, map)
            }
            PosetKind::Explicit => {
                let hasse: Vec<(&str, &str)> =
                    self.covers.iter().map(|&(a, b)| (self.labels[b].as_str(), self.labels[a].as_str())).collect();
                let labels: Vec<&str> = self.labels.iter().map(String::as_str).collect();
                let op = FinitePoset::explicit(&labels, &hasse).expect("opposite of a valid poset");
                (op, self.elements().collect())
            }
        }
    }

    /// The induced subposet on `subset` as an explicit poset (labels kept) and
    /// the index map from subposet indices back to `self`.
    pub fn induced(&self, subset: &[usize]) -> Result<(FinitePoset, Vec<usize>)> {
        let set: HashSet<usize> = subset.iter().copied().collect();
        let mut members: Vec<usize> = set.iter().copied().collect();
        members.sort_unstable();
        let mut hasse = Vec::new();
        for &a in &members {
            for &b in &members {
                if self.lt(a, b) && !members.iter().any(|&c| c != a && c != b && self.lt(a, c) && self.lt(c, b)) {
                    hasse.push((self.labels[a].as_str(), self.labels[b].as_str()));
                }
            }
        }
        let labels: Vec<&str> = members.iter().map(|&x| self.labels[x].as_str()).collect();
        let sub = FinitePoset::explicit(&labels, &hasse)?;
        let back = sub.elements().map(|i| self.index[sub.label(i)]).collect();
        Ok((sub, back))
    }

    /// Checks that `set` is an interval: convex and connected. Returns a
    /// human-readable witness on failure.
    pub fn check_interval(&self, set: &[usize]) -> std::result::Result<(), String> {
        if set.is_empty() {
            return Err("empty set".into());
        }
        let member: HashSet<usize> = set.iter().copied().collect();
        for &a in set {
            for &b in set {
                if self.lt(a, b) {
                    if let Some(z) = self.elements().find(|&z| !member.contains(&z) && self.lt(a, z) && self.lt(z, b)) {
                        return Err(format!(
                            "not convex: {} < {} < {} with the middle element missing",
                            self.labels[a], self.labels[z], self.labels[b]
                        ));
                    }
                }
            }
        }
        // connectivity through covers inside the set (enough, given convexity)
        let mut seen = HashSet::from([set[0]]);
        let mut stack = vec![set[0]];
        while let Some(x) = stack.pop() {
            for &y in self.parents[x].iter().chain(&self.children[x]) {
                if member.contains(&y) && seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        if let Some(&lost) = set.iter().find(|x| !seen.contains(x)) {
            return Err(format!("not connected: no zigzag from {} to {}", self.labels[set[0]], self.labels[lost]));
        }
        Ok(())
    }
}

/// Result of [`analyze_lattice`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeProfile {
    pub is_lattice: bool,
    /// Pair without a join or meet, and which one is missing.
    pub lattice_witness: Option<(usize, usize, &'static str)>,
    pub is_distributive: bool,
    /// Triple violating `x ^ (y v z) = (x ^ y) v (x ^ z)`.
    pub distributive_witness: Option<(usize, usize, usize)>,
    pub bottom: Option<usize>,
    pub top: Option<usize>,
    /// Join-dimension per element; `None` when undefined (not distributive or no bottom).
    pub jdim: Vec<Option<usize>>,
    pub mdim: Vec<Option<usize>>,
    pub join_irreducibles: Vec<usize>,
    pub meet_irreducibles: Vec<usize>,
}

impl LatticeProfile {
    pub fn max_jdim(&self) -> Option<usize> {
        self.jdim.iter().flatten().copied().max()
    }

    pub fn max_mdim(&self) -> Option<usize> {
        self.mdim.iter().flatten().copied().max()
    }
}

/// Order-theoretic profile: lattice and distributivity checks, join/meet
/// dimensions and irreducibles. Never fails; flags carry the verdicts.
///
/// Join-dimension is computed twice, as the number of parents and from the
/// explicit reduced decomposition into maximal join-irreducibles below the
/// element; a disagreement panics, since it would mean the order data is
/// inconsistent.
pub fn analyze_lattice(poset: &FinitePoset) -> LatticeProfile {
    poset.profile().clone()
}

fn compute_profile(p: &FinitePoset) -> LatticeProfile {
    let n = p.len();
    let mut lattice_witness = None;
    'outer: for a in 0..n {
        for b in a + 1..n {
            if p.join(a, b).is_none() {
                lattice_witness = Some((a, b, "join"));
                break 'outer;
            }
            if p.meet(a, b).is_none() {
                lattice_witness = Some((a, b, "meet"));
                break 'outer;
            }
        }
    }
    let is_lattice = lattice_witness.is_none();
    let mut distributive_witness = None;
    if is_lattice {
        'dist: for x in 0..n {
            for y in 0..n {
                for z in y + 1..n {
                    let lhs = p.meet(x, p.join(y, z).unwrap()).unwrap();
                    let rhs = p.join(p.meet(x, y).unwrap(), p.meet(x, z).unwrap()).unwrap();
                    if lhs != rhs {
                        distributive_witness = Some((x, y, z));
                        break 'dist;
                    }
                }
            }
        }
    }
    let is_distributive = is_lattice && distributive_witness.is_none();
    let bottom = p.bottom();
    let top = p.top();

    let mut jdim = vec![None; n];
    let mut join_irreducibles = Vec::new();
    if is_distributive {
        let bot = bottom.expect("finite lattice has a bottom");
        let irreducible: Vec<bool> = (0..n).map(|v| v != bot && is_join_irreducible(p, v)).collect();
        join_irreducibles = (0..n).filter(|&v| irreducible[v]).collect();
        for (v, slot) in jdim.iter_mut().enumerate() {
            let by_parents = p.parents(v).len();
            let by_decomposition = join_decomposition(p, v, bot, &irreducible).map(|d| d.len());
            assert_eq!(Some(by_parents), by_decomposition, "join-dimension mismatch at {}", p.label(v));
            *slot = Some(by_parents);
        }
    }
    let mut mdim = vec![None; n];
    let mut meet_irreducibles = Vec::new();
    if is_distributive {
        let tp = top.expect("finite lattice has a top");
        let irreducible: Vec<bool> = (0..n).map(|v| v != tp && is_meet_irreducible(p, v)).collect();
        meet_irreducibles = (0..n).filter(|&v| irreducible[v]).collect();
        for (v, slot) in mdim.iter_mut().enumerate() {
            let by_children = p.children(v).len();
            let by_decomposition = meet_decomposition(p, v, tp, &irreducible).map(|d| d.len());
            assert_eq!(Some(by_children), by_decomposition, "meet-dimension mismatch at {}", p.label(v));
            *slot = Some(by_children);
        }
    }
    LatticeProfile {
        is_lattice,
        lattice_witness,
        is_distributive,
        distributive_witness,
        bottom,
        top,
        jdim,
        mdim,
        join_irreducibles,
        meet_irreducibles,
    }
}

fn is_join_irreducible(p: &FinitePoset, v: usize) -> bool {
    let below: Vec<usize> = p.elements().filter(|&x| p.lt(x, v)).collect();
    !below.iter().any(|&x| below.iter().any(|&y| p.join(x, y) == Some(v)))
}

fn is_meet_irreducible(p: &FinitePoset, v: usize) -> bool {
    let above: Vec<usize> = p.elements().filter(|&x| p.lt(v, x)).collect();
    !above.iter().any(|&x| above.iter().any(|&y| p.meet(x, y) == Some(v)))
}

/// Reduced indecomposable join-decomposition of `v`: the maximal
/// join-irreducibles below `v`, validated to join to `v` with no redundant member.
fn join_decomposition(p: &FinitePoset, v: usize, bottom: usize, irr: &[bool]) -> Option<Vec<usize>> {
    if v == bottom {
        return Some(Vec::new());
    }
    let below: Vec<usize> = p.elements().filter(|&j| irr[j] && p.leq(j, v)).collect();
    let maximal: Vec<usize> = below.iter().copied().filter(|&j| !below.iter().any(|&k| p.lt(j, k))).collect();
    if maximal.is_empty() || p.join_all(&maximal) != v {
        return None;
    }
    let reduced = (0..maximal.len()).all(|i| {
        let rest: Vec<usize> = maximal.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).collect();
        rest.is_empty() || p.join_all(&rest) != v
    });
    reduced.then_some(maximal)
}

fn meet_decomposition(p: &FinitePoset, v: usize, top: usize, irr: &[bool]) -> Option<Vec<usize>> {
    if v == top {
        return Some(Vec::new());
    }
    let above: Vec<usize> = p.elements().filter(|&j| irr[j] && p.leq(v, j)).collect();
    let minimal: Vec<usize> = above.iter().copied().filter(|&j| !above.iter().any(|&k| p.lt(k, j))).collect();
    if minimal.is_empty() || p.meet_all(&minimal) != v {
        return None;
    }
    let reduced = (0..minimal.len()).all(|i| {
        let rest: Vec<usize> = minimal.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).collect();
        rest.is_empty() || p.meet_all(&rest) != v
    });
    reduced.then_some(minimal)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Join-dimension strata `P_{<=n}`.
    Join,
    /// Meet-dimension strata `P^{<=n}`.
    Meet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratum {
    pub elements: Vec<usize>,
    /// Down-closed (join side) or up-closed (meet side).
    pub closed: bool,
}

impl Stratum {
    pub fn contains(&self, x: usize) -> bool {
        self.elements.binary_search(&x).is_ok()
    }
}

/// Elements of join-dimension `<= n` (or meet-dimension, for [`Side::Meet`]).
pub fn stratum(p: &FinitePoset, n: usize, side: Side) -> Result<Stratum> {
    let prof = p.profile();
    if !prof.is_distributive {
        return Err(Error::NotDistributive);
    }
    let dims = match side {
        Side::Join => &prof.jdim,
        Side::Meet => &prof.mdim,
    };
    let elements: Vec<usize> = p.elements().filter(|&x| dims[x].is_some_and(|d| d <= n)).collect();
    let member: HashSet<usize> = elements.iter().copied().collect();
    let closed = elements.iter().all(|&x| {
        p.elements().all(|y| {
            let related = match side {
                Side::Join => p.leq(y, x),
                Side::Meet => p.leq(x, y),
            };
            !related || member.contains(&y)
        })
    });
    Ok(Stratum { elements, closed })
}

/// A cube `P([k-1]) -> P` built from a pairwise cover. Vertices are indexed
/// by bitmasks over `0..k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeDiagram {
    pub k: usize,
    pub top: usize,
    pub cover: Vec<usize>,
    assignment: Vec<usize>,
}

impl CubeDiagram {
    pub fn vertex(&self, mask: usize) -> usize {
        self.assignment[mask]
    }

    pub fn full_mask(&self) -> usize {
        (1 << self.k) - 1
    }

    pub fn bottom(&self) -> usize {
        self.assignment[0]
    }

    /// Recovers the pairwise cover: `x^i` sits at the full set minus `i`.
    pub fn recovered_cover(&self) -> Vec<usize> {
        (0..self.k).map(|i| self.vertex(self.full_mask() & !(1 << i))).collect()
    }

    pub fn describe(&self, p: &FinitePoset) -> String {
        let xs: Vec<&str> = self.cover.iter().map(|&x| p.label(x)).collect();
        format!("v={} cover=[{}]", p.label(self.top), xs.join(" | "))
    }
}

/// The cube of a pairwise cover `xs` of `v`: `S -> meet of x^i for i not in S`,
/// and `v` at the full set.
pub fn cube_from_cover(p: &FinitePoset, v: usize, xs: &[usize]) -> Result<CubeDiagram> {
    if !p.profile().is_lattice {
        return Err(Error::PosetUnsupported("cubes need a lattice".into()));
    }
    let k = xs.len();
    if k == 0 || k > 20 {
        return Err(Error::InvalidInput(format!("cube dimension {k} out of range")));
    }
    for &x in xs {
        if !p.leq(x, v) {
            return Err(Error::NotBelow { element: p.label(x).into(), top: p.label(v).into() });
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            let join = p.join(xs[i], xs[j]).unwrap();
            if join != v {
                return Err(Error::NotAPairwiseCover {
                    top: p.label(v).into(),
                    a: p.label(xs[i]).into(),
                    b: p.label(xs[j]).into(),
                    join: p.label(join).into(),
                });
            }
        }
    }
    Ok(build_cube(p, v, xs))
}

fn build_cube(p: &FinitePoset, v: usize, xs: &[usize]) -> CubeDiagram {
    let k = xs.len();
    let full = (1usize << k) - 1;
    let assignment = (0..=full)
        .map(|mask| {
            if mask == full {
                v
            } else {
                let outside: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 0).map(|i| xs[i]).collect();
                p.meet_all(&outside)
            }
        })
        .collect();
    CubeDiagram { k, top: v, cover: xs.to_vec(), assignment }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CubeMode {
    /// Every nondegenerate pairwise cover of the given size.
    Full,
    /// One cube per element with exactly `k` parents, on those parents.
    /// A cheaper necessary condition, not a complete enumeration.
    ParentsOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CubeOptions {
    pub max_covers: u64,
    /// Also enumerate degenerate covers (some `x^i = v`). Their cubes factor
    /// as a smaller cube times an identity edge, so every Koszul complex of a
    /// functor on them is the cone of an identity and therefore acyclic.
    pub include_degenerate: bool,
}

impl Default for CubeOptions {
    fn default() -> Self {
        CubeOptions { max_covers: DEFAULT_MAX_COVERS, include_degenerate: false }
    }
}

/// Strongly bicartesian `k`-cubes, in canonical order (by top element, then
/// lexicographically by cover).
pub fn enumerate_cubes(p: &FinitePoset, k: usize, mode: CubeMode) -> Result<Vec<CubeDiagram>> {
    enumerate_cubes_with(p, k, mode, &CubeOptions::default())
}

pub fn enumerate_cubes_with(p: &FinitePoset, k: usize, mode: CubeMode, opts: &CubeOptions) -> Result<Vec<CubeDiagram>> {
    if !p.profile().is_distributive {
        return Err(Error::NotDistributive);
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    match mode {
        CubeMode::ParentsOnly => {
            for v in p.elements() {
                if p.parents(v).len() == k {
                    let mut xs = p.parents(v).to_vec();
                    xs.sort_unstable();
                    out.push(build_cube(p, v, &xs));
                }
            }
        }
        CubeMode::Full => {
            let mut budget = opts.max_covers;
            for v in p.elements() {
                let cands: Vec<usize> =
                    p.elements().filter(|&x| if opts.include_degenerate { p.leq(x, v) } else { p.lt(x, v) }).collect();
                let mut chosen = Vec::with_capacity(k);
                extend_cover(p, v, k, &cands, 0, &mut chosen, &mut budget, opts.max_covers, &mut out)?;
            }
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn extend_cover(
    p: &FinitePoset,
    v: usize,
    k: usize,
    cands: &[usize],
    start: usize,
    chosen: &mut Vec<usize>,
    budget: &mut u64,
    cap: u64,
    out: &mut Vec<CubeDiagram>,
) -> Result<()> {
    if chosen.len() == k {
        out.push(build_cube(p, v, chosen));
        return Ok(());
    }
    for i in start..cands.len() {
        if cands.len() - i < k - chosen.len() {
            break;
        }
        if *budget == 0 {
            return Err(Error::CostCapExceeded { cap });
        }
        *budget -= 1;
        let x = cands[i];
        if chosen.iter().all(|&y| p.join(x, y) == Some(v)) {
            chosen.push(x);
            extend_cover(p, v, k, cands, i + 1, chosen, budget, cap, out)?;
            chosen.pop();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn n_lattice() -> FinitePoset {
        FinitePoset::explicit(&["a", "b", "c", "d", "t"], &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d"), ("d", "t")])
            .unwrap()
    }

    fn diamond_m3() -> FinitePoset {
        FinitePoset::explicit(
            &["0", "x", "y", "z", "1"],
            &[("0", "x"), ("0", "y"), ("0", "z"), ("x", "1"), ("y", "1"), ("z", "1")],
        )
        .unwrap()
    }

    fn at(p: &FinitePoset, c: &[usize]) -> usize {
        p.index_of_coords(c).unwrap()
    }

    #[test]
    fn grid_jdim_examples() {
        let g = FinitePoset::grid(&[3, 3]).unwrap();
        let prof = analyze_lattice(&g);
        assert!(prof.is_lattice && prof.is_distributive);
        assert_eq!(prof.jdim[at(&g, &[2, 2])], Some(2));
        assert_eq!(prof.jdim[at(&g, &[0, 2])], Some(1));
        assert_eq!(prof.jdim[at(&g, &[0, 0])], Some(0));
        assert_eq!(prof.bottom, Some(at(&g, &[0, 0])));
        assert_eq!(prof.top, Some(at(&g, &[2, 2])));
    }

    #[test]
    fn grid_dims_count_nonzero_and_nonmax_coordinates() {
        let g = FinitePoset::grid(&[3, 2, 4]).unwrap();
        let prof = analyze_lattice(&g);
        for x in g.elements() {
            let c = g.coords(x);
            assert_eq!(prof.jdim[x], Some(c.iter().filter(|&&v| v > 0).count()));
            let m = [2, 1, 3];
            assert_eq!(prof.mdim[x], Some(c.iter().zip(m).filter(|&(&v, m)| v < m).count()));
        }
    }

    #[test]
    fn n_lattice_irreducibles() {
        let p = n_lattice();
        let prof = analyze_lattice(&p);
        assert!(prof.is_distributive);
        let t = p.index_of("t").unwrap();
        let d = p.index_of("d").unwrap();
        assert!(prof.join_irreducibles.contains(&t));
        assert!(!prof.join_irreducibles.contains(&d));
        assert_eq!(prof.jdim[d], Some(2));
    }

    #[test]
    fn m3_is_not_distributive() {
        let prof = analyze_lattice(&diamond_m3());
        assert!(prof.is_lattice);
        assert!(!prof.is_distributive);
        assert!(prof.distributive_witness.is_some());
        assert!(stratum(&diamond_m3(), 1, Side::Join).is_err());
    }

    #[test]
    fn non_lattice_reports_witness() {
        let p =
            FinitePoset::explicit(&["a", "b", "c", "d"], &[("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")]).unwrap();
        let prof = analyze_lattice(&p);
        assert!(!prof.is_lattice);
        assert!(prof.lattice_witness.is_some());
    }

    #[test]
    fn strata_examples() {
        let g = FinitePoset::grid(&[3, 3]).unwrap();
        let s = stratum(&g, 1, Side::Join).unwrap();
        let expected: Vec<usize> = [[0, 0], [0, 1], [0, 2], [1, 0], [2, 0]].iter().map(|c| at(&g, c)).collect();
        assert_eq!(s.elements, expected);
        assert!(s.closed);
        assert!(stratum(&g, 1, Side::Meet).unwrap().closed);
        assert_eq!(stratum(&g, 2, Side::Join).unwrap().elements.len(), 9);

        let p = n_lattice();
        let s = stratum(&p, 1, Side::Join).unwrap();
        let names: Vec<&str> = s.elements.iter().map(|&x| p.label(x)).collect();
        assert_eq!(names, ["a", "b", "c", "t"]);
        assert!(!s.closed);
    }

    #[test]
    fn cube_from_cover_examples() {
        let g = FinitePoset::grid(&[2, 2]).unwrap();
        let c = cube_from_cover(&g, at(&g, &[1, 1]), &[at(&g, &[1, 0]), at(&g, &[0, 1])]).unwrap();
        assert_eq!(c.bottom(), at(&g, &[0, 0]));
        assert_eq!(c.vertex(0b01), at(&g, &[0, 1]));
        assert_eq!(c.vertex(0b10), at(&g, &[1, 0]));
        assert_eq!(c.vertex(0b11), at(&g, &[1, 1]));

        let e = cube_from_cover(&g, at(&g, &[1, 1]), &[at(&g, &[1, 0]), at(&g, &[1, 0])]);
        assert!(matches!(e, Err(Error::NotAPairwiseCover { .. })));

        let g3 = FinitePoset::grid(&[2, 2, 2]).unwrap();
        let xs = [at(&g3, &[0, 1, 1]), at(&g3, &[1, 0, 1]), at(&g3, &[1, 1, 0])];
        let c = cube_from_cover(&g3, at(&g3, &[1, 1, 1]), &xs).unwrap();
        let mut verts: Vec<usize> = (0..8).map(|m| c.vertex(m)).collect();
        verts.sort_unstable();
        assert_eq!(verts, (0..8).collect::<Vec<_>>());
    }

    /// Brute force over all triples (v, x0, x1) with x0 < x1 < ... both below v.
    fn brute_force_square_count(p: &FinitePoset) -> usize {
        let mut count = 0;
        for v in p.elements() {
            for a in p.elements() {
                for b in a + 1..p.len() {
                    if p.lt(a, v) && p.lt(b, v) && p.join(a, b) == Some(v) {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn enumerate_cubes_examples() {
        let g = FinitePoset::grid(&[2, 2]).unwrap();
        assert_eq!(enumerate_cubes(&g, 2, CubeMode::Full).unwrap().len(), 1);
        assert_eq!(brute_force_square_count(&g), 1);

        let g = FinitePoset::grid(&[3, 3]).unwrap();
        assert_eq!(enumerate_cubes(&g, 2, CubeMode::ParentsOnly).unwrap().len(), 4);
        assert_eq!(enumerate_cubes(&g, 3, CubeMode::Full).unwrap().len(), 0);
        assert_eq!(enumerate_cubes(&g, 2, CubeMode::Full).unwrap().len(), brute_force_square_count(&g));
    }

    #[test]
    fn enumerated_cubes_recover_their_covers() {
        for shape in [&[3, 3][..], &[2, 3, 2], &[4, 2]] {
            let g = FinitePoset::grid(shape).unwrap();
            for k in 1..=3 {
                for cube in enumerate_cubes(&g, k, CubeMode::Full).unwrap() {
                    assert_eq!(cube.recovered_cover(), cube.cover);
                }
            }
        }
        let p = n_lattice();
        for cube in enumerate_cubes(&p, 2, CubeMode::Full).unwrap() {
            assert_eq!(cube.recovered_cover(), cube.cover);
        }
    }

    #[test]
    fn cost_cap_is_reported() {
        let g = FinitePoset::grid(&[4, 4, 3]).unwrap();
        let opts = CubeOptions { max_covers: 10, include_degenerate: false };
        assert_eq!(enumerate_cubes_with(&g, 2, CubeMode::Full, &opts), Err(Error::CostCapExceeded { cap: 10 }));
    }

    #[test]
    fn explicit_poset_validation() {
        assert!(FinitePoset::explicit(&["a", "a"], &[]).is_err());
        assert!(FinitePoset::explicit(&["a", "b"], &[("a", "b"), ("b", "a")]).is_err());
        assert!(FinitePoset::explicit(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")]).is_err());
        assert!(FinitePoset::explicit(&["a"], &[("a", "z")]).is_err());
    }

    #[test]
    fn opposite_grid_reflects_coordinates() {
        let g = FinitePoset::grid(&[3, 2]).unwrap();
        let (op, map) = g.opposite();
        for &(a, b) in g.covers() {
            assert!(op.cover_index(map[b], map[a]).is_some());
        }
        assert_eq!(map[at(&g, &[0, 0])], at(&op, &[2, 1]));
    }

    #[test]
    fn interval_checks() {
        let g = FinitePoset::grid(&[2, 2]).unwrap();
        assert!(g.check_interval(&[at(&g, &[1, 1])]).is_ok());
        assert!(g.check_interval(&[at(&g, &[0, 1]), at(&g, &[1, 0])]).is_err());
        assert!(g.check_interval(&[at(&g, &[0, 0]), at(&g, &[1, 1])]).is_err());
    }
}
