//! Dense working representation shared by every algorithm.
//!
//! Vertices are small integers. A [`Frame`] describes which pairs are edges:
//! vertices `< split` form the low class, the rest the high class, and
//! adjacency only depends on the classes. The host graph, complete graphs
//! and complete bipartite graphs are all frames, so the same switching
//! engine runs on each of them. Same-class vertices are always twins.

pub(crate) const MAX_VERTICES: usize = 60;
pub(crate) const FREE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct Frame {
    pub n: usize,
    pub split: usize,
    pub low_self: bool,
    pub high_self: bool,
    /// Remove the perfect matching `{2i, 2i+1}`; only matched pairs stay twins.
    pub matched: bool,
}

impl Frame {
    /// Complete graph on `u + w` vertices minus a complete graph on the first `u`.
    pub fn host(u: usize, w: usize) -> Frame {
        Frame { n: u + w, split: u, low_self: false, high_self: true, matched: false }
    }

    pub fn complete(v: usize) -> Frame {
        Frame { n: v, split: 0, low_self: true, high_self: true, matched: false }
    }

    /// Complete graph on an even number of vertices minus a 1-factor.
    pub fn complete_minus_matching(v: usize) -> Frame {
        Frame { n: v, split: 0, low_self: true, high_self: true, matched: true }
    }

    pub fn bipartite(p: usize, q: usize) -> Frame {
        Frame { n: p + q, split: p, low_self: false, high_self: false, matched: false }
    }

    #[inline]
    pub fn high(&self, x: usize) -> bool {
        x >= self.split
    }

    #[inline]
    pub fn adjacent(&self, x: usize, y: usize) -> bool {
        if x == y || x >= self.n || y >= self.n || (self.matched && x ^ 1 == y) {
            return false;
        }
        match (self.high(x), self.high(y)) {
            (true, true) => self.high_self,
            (false, false) => self.low_self,
            _ => true,
        }
    }

    #[inline]
    pub fn twins(&self, x: usize, y: usize) -> bool {
        x != y && x < self.n && y < self.n && self.high(x) == self.high(y) && (!self.matched || x ^ 1 == y)
    }

    /// An edge is pure when both ends are in the high class.
    #[inline]
    pub fn pure(&self, x: usize, y: usize) -> bool {
        self.high(x) && self.high(y)
    }

    pub fn neighbours(&self, x: usize) -> u64 {
        let mut m = 0u64;
        for y in 0..self.n {
            if self.adjacent(x, y) {
                m |= 1 << y;
            }
        }
        m
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|x| self.neighbours(x).count_ones() as usize).sum::<usize>() / 2
    }

    pub fn high_mask(&self) -> u64 {
        let all = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        all & !((1u64 << self.split) - 1)
    }
}

/// An adjacency-bitset graph on at most 64 vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct Bits {
    pub adj: Vec<u64>,
}

impl Bits {
    pub fn empty(n: usize) -> Bits {
        Bits { adj: vec![0; n] }
    }

    #[inline]
    pub fn has(&self, x: usize, y: usize) -> bool {
        self.adj[x] >> y & 1 == 1
    }

    #[inline]
    pub fn toggle(&mut self, x: usize, y: usize) {
        self.adj[x] ^= 1 << y;
        self.adj[y] ^= 1 << x;
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        if self.has(x, y) != on {
            self.toggle(x, y);
        }
    }

    #[inline]
    pub fn degree(&self, x: usize) -> usize {
        self.adj[x].count_ones() as usize
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn is_even(&self) -> bool {
        self.adj.iter().all(|a| a.count_ones() % 2 == 0)
    }

    pub fn support(&self) -> u64 {
        self.adj.iter().enumerate().filter(|(_, a)| **a != 0).fold(0, |m, (i, _)| m | 1 << i)
    }

    /// Vertex sets of the connected components that carry at least one edge.
    pub fn components(&self) -> Vec<u64> {
        let mut left = self.support();
        let mut out = Vec::new();
        while left != 0 {
            let s = left.trailing_zeros() as usize;
            let mut comp = 1u64 << s;
            let mut frontier = comp;
            while frontier != 0 {
                let x = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                let fresh = self.adj[x] & !comp;
                comp |= fresh;
                frontier |= fresh;
            }
            left &= !comp;
            out.push(comp);
        }
        out
    }

    pub fn pure_count(&self, frame: &Frame) -> usize {
        let hm = frame.high_mask();
        (0..self.adj.len())
            .filter(|&x| frame.high(x))
            .map(|x| (self.adj[x] & hm).count_ones() as usize)
            .sum::<usize>()
            / 2
    }
}

pub(crate) fn cycle_edges(c: &[u8]) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..c.len()).map(move |i| (c[i] as usize, c[(i + 1) % c.len()] as usize))
}

pub(crate) fn cycle_pure(frame: &Frame, c: &[u8]) -> usize {
    cycle_edges(c).filter(|&(x, y)| frame.pure(x, y)).count()
}

/// Which of the two twin edges at a vertex a unit occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    A,
    B,
}

#[derive(Debug, Clone, Copy)]
enum UnitKind {
    /// The cycle meets exactly one of the two switched vertices.
    Whole,
    /// The part of a cycle through both switched vertices that runs forward from
    /// `alpha` to `beta` (0) or from `beta` to `alpha` (1).
    Half(u8),
}

#[derive(Debug, Clone, Copy)]
struct Unit {
    cycle: usize,
    kind: UnitKind,
    ends: [(usize, Side); 2],
}

/// Result of tracing an (alpha, beta)-switch without applying it.
#[derive(Debug, Clone)]
pub(crate) struct SwitchPlan {
    pub alpha: usize,
    pub beta: usize,
    pub origin: usize,
    pub terminus: usize,
    units: Vec<Unit>,
}

impl SwitchPlan {
    /// Whether the switch rewrites any cycle with index below `k`.
    pub fn touches_below(&self, k: usize) -> bool {
        self.units.iter().any(|u| u.cycle < k)
    }
}

/// A packing under construction: cycles plus the owner of every edge.
#[derive(Debug, Clone)]
pub(crate) struct State {
    pub frame: Frame,
    pub cycles: Vec<Vec<u8>>,
    owner: Vec<u32>,
    pub leave: Bits,
}

impl State {
    pub fn new(frame: Frame) -> State {
        assert!(frame.n <= MAX_VERTICES);
        let n = frame.n;
        let mut leave = Bits::empty(n);
        for x in 0..n {
            leave.adj[x] = frame.neighbours(x);
        }
        State { frame, cycles: Vec::new(), owner: vec![FREE; n * n], leave }
    }

    #[inline]
    pub fn owner(&self, x: usize, y: usize) -> u32 {
        self.owner[x * self.frame.n + y]
    }

    #[inline]
    fn set_owner(&mut self, x: usize, y: usize, o: u32) {
        let n = self.frame.n;
        self.owner[x * n + y] = o;
        self.owner[y * n + x] = o;
    }

    /// Whether every edge of `c` is a frame edge currently in the leave.
    pub fn fits(&self, c: &[u8]) -> bool {
        if c.len() < 3 {
            return false;
        }
        let mut seen = 0u64;
        for &v in c {
            if (v as usize) >= self.frame.n || seen >> v & 1 == 1 {
                return false;
            }
            seen |= 1 << v;
        }
        cycle_edges(c).all(|(x, y)| self.leave.has(x, y))
    }

    pub fn push(&mut self, c: Vec<u8>) -> usize {
        debug_assert!(self.fits(&c), "cycle {:?} does not fit", c);
        let id = self.cycles.len() as u32;
        for (x, y) in cycle_edges(&c) {
            self.leave.toggle(x, y);
            self.set_owner(x, y, id);
        }
        self.cycles.push(c);
        id as usize
    }

    pub fn try_push(&mut self, c: Vec<u8>) -> bool {
        if self.fits(&c) {
            self.push(c);
            true
        } else {
            false
        }
    }

    /// Remove a cycle; the last cycle takes its index.
    pub fn remove(&mut self, idx: usize) -> Vec<u8> {
        let c = self.cycles.swap_remove(idx);
        for (x, y) in cycle_edges(&c) {
            self.leave.toggle(x, y);
            self.set_owner(x, y, FREE);
        }
        if idx < self.cycles.len() {
            let moved = self.cycles[idx].clone();
            for (x, y) in cycle_edges(&moved) {
                self.set_owner(x, y, idx as u32);
            }
        }
        c
    }

    /// Leave neighbourhood symmetric difference used by the (a, b)-switch.
    pub fn switch_set(&self, a: usize, b: usize) -> u64 {
        (self.leave.adj[a] ^ self.leave.adj[b]) & !(1 << a) & !(1 << b)
    }

    fn units(&self, a: usize, b: usize) -> Vec<Unit> {
        let mut touched: Vec<usize> = Vec::new();
        for z in 0..self.frame.n {
            for &s in &[a, b] {
                if self.frame.adjacent(s, z) {
                    let o = self.owner(s, z);
                    if o != FREE && !touched.contains(&(o as usize)) {
                        touched.push(o as usize);
                    }
                }
            }
        }
        let mut units = Vec::new();
        for ci in touched {
            let c = &self.cycles[ci];
            let l = c.len();
            let pa = c.iter().position(|&v| v as usize == a);
            let pb = c.iter().position(|&v| v as usize == b);
            match (pa, pb) {
                (Some(p), None) | (None, Some(p)) => {
                    let side = if pa.is_some() { Side::A } else { Side::B };
                    let prev = c[(p + l - 1) % l] as usize;
                    let next = c[(p + 1) % l] as usize;
                    units.push(Unit { cycle: ci, kind: UnitKind::Whole, ends: [(prev, side), (next, side)] });
                }
                (Some(pa), Some(pb)) => {
                    // forward from alpha to beta
                    if (pa + 1) % l != pb {
                        let a1 = c[(pa + 1) % l] as usize;
                        let b1 = c[(pb + l - 1) % l] as usize;
                        units.push(Unit { cycle: ci, kind: UnitKind::Half(0), ends: [(a1, Side::A), (b1, Side::B)] });
                    }
                    // forward from beta to alpha
                    if (pb + 1) % l != pa {
                        let b1 = c[(pb + 1) % l] as usize;
                        let a1 = c[(pa + l - 1) % l] as usize;
                        units.push(Unit { cycle: ci, kind: UnitKind::Half(1), ends: [(b1, Side::B), (a1, Side::A)] });
                    }
                }
                (None, None) => unreachable!(),
            }
        }
        units
    }

    /// Trace the switch started at `origin`; `None` if `origin` is not switchable.
    pub fn plan_switch(&self, a: usize, b: usize, origin: usize) -> Option<SwitchPlan> {
        if !self.frame.twins(a, b) || self.switch_set(a, b) >> origin & 1 == 0 {
            return None;
        }
        let units = self.units(a, b);
        let slot = |z: usize, s: Side| -> Option<(usize, usize)> {
            units.iter().enumerate().find_map(|(ui, u)| {
                u.ends.iter().position(|&(ez, es)| ez == z && es == s).map(|e| (ui, e))
            })
        };
        let start_side = if self.leave.has(a, origin) { Side::B } else { Side::A };
        let mut chosen = Vec::new();
        let (mut ui, mut e) = slot(origin, start_side).expect("owned slot at origin");
        loop {
            chosen.push(units[ui]);
            let (z, s) = units[ui].ends[1 - e];
            let other = if s == Side::A { Side::B } else { Side::A };
            match slot(z, other) {
                None => {
                    return Some(SwitchPlan { alpha: a, beta: b, origin, terminus: z, units: chosen });
                }
                Some((nu, ne)) => {
                    ui = nu;
                    e = ne;
                }
            }
            debug_assert!(chosen.len() <= units.len());
        }
    }

    /// Terminus of the switch started at `origin` (cheap preview).
    pub fn terminus(&self, a: usize, b: usize, origin: usize) -> Option<usize> {
        self.plan_switch(a, b, origin).map(|p| p.terminus)
    }

    pub fn apply(&mut self, plan: &SwitchPlan) {
        let (a, b) = (plan.alpha as u8, plan.beta as u8);
        let mut by_cycle: Vec<(usize, bool, [bool; 2])> = Vec::new();
        for u in &plan.units {
            let entry = match by_cycle.iter().position(|e| e.0 == u.cycle) {
                Some(p) => p,
                None => {
                    by_cycle.push((u.cycle, false, [false; 2]));
                    by_cycle.len() - 1
                }
            };
            match u.kind {
                UnitKind::Whole => by_cycle[entry].1 = true,
                UnitKind::Half(h) => by_cycle[entry].2[h as usize] = true,
            }
        }
        let mut rebuilt = Vec::with_capacity(by_cycle.len());
        for &(ci, whole, halves) in &by_cycle {
            let old = self.cycles[ci].clone();
            for (x, y) in cycle_edges(&old) {
                self.leave.toggle(x, y);
                self.set_owner(x, y, FREE);
            }
            let mut c = old;
            let swap = |c: &mut Vec<u8>| {
                for v in c.iter_mut() {
                    if *v == a {
                        *v = b;
                    } else if *v == b {
                        *v = a;
                    }
                }
            };
            if whole || (halves[0] && halves[1]) {
                swap(&mut c);
            } else {
                let l = c.len();
                let pa = c.iter().position(|&v| v == a).unwrap();
                let pb = c.iter().position(|&v| v == b).unwrap();
                let (from, to) = if halves[0] { (pa, pb) } else { (pb, pa) };
                // reverse the open segment strictly between `from` and `to`
                let mut idx = Vec::new();
                let mut i = (from + 1) % l;
                while i != to {
                    idx.push(i);
                    i = (i + 1) % l;
                }
                let vals: Vec<u8> = idx.iter().map(|&i| c[i]).collect();
                for (k, &i) in idx.iter().enumerate() {
                    c[i] = vals[vals.len() - 1 - k];
                }
            }
            rebuilt.push((ci, c));
        }
        for (ci, c) in rebuilt {
            for (x, y) in cycle_edges(&c) {
                debug_assert!(self.leave.has(x, y), "switch produced overlapping edge {}-{}", x, y);
                self.leave.toggle(x, y);
                self.set_owner(x, y, ci as u32);
            }
            self.cycles[ci] = c;
        }
    }

    /// Leave after a planned switch, without applying it.
    pub fn preview(&self, plan: &SwitchPlan) -> Bits {
        let mut l = self.leave.clone();
        for &(s, z) in &[(plan.alpha, plan.origin), (plan.alpha, plan.terminus), (plan.beta, plan.origin), (plan.beta, plan.terminus)] {
            l.toggle(s, z);
        }
        l
    }

    pub fn is_consistent(&self) -> bool {
        let n = self.frame.n;
        let mut cover = Bits::empty(n);
        for (ci, c) in self.cycles.iter().enumerate() {
            if c.len() < 3 {
                return false;
            }
            for (x, y) in cycle_edges(c) {
                if !self.frame.adjacent(x, y) || cover.has(x, y) || self.owner(x, y) != ci as u32 {
                    return false;
                }
                cover.toggle(x, y);
            }
        }
        (0..n).all(|x| cover.adj[x] ^ self.leave.adj[x] == self.frame.neighbours(x))
    }

    pub fn length_multiset(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cycles.iter().map(|c| c.len()).collect();
        v.sort_unstable();
        v
    }
}
