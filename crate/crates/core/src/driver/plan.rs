//! Choosing the sublist `Z` that the base decomposition builds in pieces,
//! and the refinement those pieces follow.

use serde::{Deserialize, Serialize};

use super::lists::LengthList;
use crate::base::{companion_length, BaseRequest, BaseVariant};
use crate::error::{Error, Result};

/// Fixed refinement of a single length into parts 3, 4, 5, 6.
///
/// # Panics
/// If `m < 3`.
pub fn basic_refinement(m: usize) -> Vec<usize> {
    assert!(m >= 3, "no refinement of {}", m);
    let fours = |n: usize| std::iter::repeat(4).take(n);
    match m % 4 {
        _ if m == 5 => vec![5],
        0 => fours(m / 4).collect(),
        1 => std::iter::once(3).chain(fours((m - 9) / 4)).chain([6]).collect(),
        2 => fours((m - 6) / 4).chain([6]).collect(),
        _ => std::iter::once(3).chain(fours((m - 3) / 4)).collect(),
    }
}

/// Which branch of the selection fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlanCase {
    /// Many long odd lengths, `m >= 7`.
    Case1a,
    /// Many long odd lengths, `m <= 6`.
    Case1b,
    /// Many 5s.
    Case2,
    /// Few odd lengths crossing, small `sigma`.
    Case3a,
    /// Few odd lengths crossing, large `sigma`.
    Case3b,
}

impl PlanCase {
    pub fn tag(&self) -> &'static str {
        match self {
            PlanCase::Case1a => "1a",
            PlanCase::Case1b => "1b",
            PlanCase::Case2 => "2",
            PlanCase::Case3a => "3a",
            PlanCase::Case3b => "3b",
        }
    }
}

/// `Z`, its refinement and the base request built from them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementPlan {
    pub case: PlanCase,
    /// Termination step of the selection (`"3.1"` .. `"3.5"`), when it has one.
    pub step: Option<String>,
    pub z: LengthList,
    pub n: LengthList,
    pub t: usize,
    pub m: usize,
    pub k: usize,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
    pub variant: BaseVariant,
    /// One refinement per entry of `z`, in the same order.
    pub groups: Vec<Vec<usize>>,
}

impl RefinementPlan {
    /// All refinement entries, nondecreasing.
    pub fn refinement(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.groups.iter().flatten().copied().collect();
        r.sort_unstable();
        r
    }

    pub fn base_request(&self) -> BaseRequest {
        BaseRequest {
            n: self.n.entries().to_vec(),
            a: self.a,
            b: self.b,
            c: self.c,
            d: self.d,
            t: self.t,
            k: self.k,
            m: self.m,
            variant: self.variant,
        }
    }

    /// Structural checks: each group refines its entry, odd counts agree,
    /// `Z` is well-behaved and `N + Z` is the original list.
    pub fn validate(&self, all: &LengthList) -> Result<()> {
        let breach = |s: String| Err(Error::InternalInvariantBreach(s));
        if self.groups.len() != self.z.len() {
            return breach("one refinement per entry of Z".into());
        }
        for (g, &z) in self.groups.iter().zip(self.z.entries()) {
            let odd = g.iter().filter(|&&x| x % 2 == 1).count();
            if g.iter().sum::<usize>() != z || g.iter().any(|&x| x < 3) || odd > 1 {
                return breach(format!("{:?} does not refine {}", g, z));
            }
        }
        let r = LengthList::new(self.refinement());
        if r.odd_count() != self.z.odd_count() {
            return breach("refinement changes the number of odd entries".into());
        }
        if !self.z.is_well_behaved() {
            return breach(format!("Z = {} is not well-behaved", self.z));
        }
        let mut joined = self.n.entries().to_vec();
        joined.extend_from_slice(self.z.entries());
        if LengthList::new(joined) != *all {
            return breach("N and Z do not make up the list".into());
        }
        Ok(())
    }
}

/// `Z` plus the rest, kept as multisets.
struct Split {
    z: LengthList,
    rest: LengthList,
}

impl Split {
    fn new(all: &LengthList, z: &[usize]) -> Split {
        Split { z: LengthList::new(z.to_vec()), rest: all.without(z) }
    }

    fn move_in(&mut self, x: usize) {
        let ok = self.rest.take(x);
        debug_assert!(ok, "{} not in the rest", x);
        self.z.push(x);
    }

    fn move_out(&mut self, x: usize) {
        let ok = self.z.take(x);
        debug_assert!(ok, "{} not in Z", x);
        self.rest.push(x);
    }
}

fn deficit(total: usize, z: &LengthList) -> i64 {
    total as i64 - z.even_sum() as i64
}

/// Grows `Z` with the largest admissible entry of the rest until the deficit
/// is at most `bound(rest) - 2`. Equal entries are interchangeable, so "the
/// later index" among ties is simply another copy of the same value.
fn grow(sp: &mut Split, total: usize, pick: impl Fn(&LengthList) -> Option<usize>, bound: impl Fn(&LengthList) -> Option<usize>) {
    loop {
        let t = deficit(total, &sp.z);
        match bound(&sp.rest) {
            Some(b) if t > b as i64 - 2 => {}
            _ => return,
        }
        match pick(&sp.rest) {
            Some(x) => sp.move_in(x),
            None => return,
        }
    }
}

fn counts(parts: &[usize]) -> (usize, usize, usize, usize) {
    let c = |l: usize| parts.iter().filter(|&&x| x == l).count();
    (c(3), c(4), c(5), c(6))
}

/// Basic refinement of every entry but the largest, which loses `k` first
/// (and splits as `4, 5` when that leaves 9, if `nine_split`).
fn groups_with_companion(z: &LengthList, k: usize, nine_split: bool) -> Vec<Vec<usize>> {
    let last = z.len() - 1;
    z.entries()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if i != last {
                return basic_refinement(x);
            }
            let y = x - k;
            let mut g = if nine_split && y == 9 { vec![4, 5] } else { basic_refinement(y) };
            if k > 0 {
                g.push(k);
            }
            g
        })
        .collect()
}

fn finish_plan(u: usize, w: usize, all: &LengthList, case: PlanCase, step: Option<&str>, sp: Split, t: usize, m: usize, k: usize, groups: Vec<Vec<usize>>) -> Result<RefinementPlan> {
    let variant = match case {
        PlanCase::Case1a => BaseVariant::ManyLarge,
        PlanCase::Case1b | PlanCase::Case2 => BaseVariant::ManySmall,
        PlanCase::Case3a | PlanCase::Case3b => BaseVariant::FewCrossOdds,
    };
    let mut small: Vec<usize> = groups.iter().flatten().copied().collect();
    if k > 0 {
        // the companion entry is carried separately
        let p = small.iter().rposition(|&x| x == k).expect("companion present");
        small.remove(p);
    }
    let (a, b, c, d) = counts(&small);
    if a + b + c + d != small.len() {
        return Err(Error::InternalInvariantBreach(format!("refinement {:?} has parts outside 3..=6", small)));
    }
    let plan = RefinementPlan { case, step: step.map(str::to_string), z: sp.z, n: sp.rest, t, m, k, a, b, c, d, variant, groups };
    plan.validate(all)?;
    plan.base_request()
        .check(u, w)
        .map_err(|e| Error::InternalInvariantBreach(format!("case {} plan misses the base hypotheses: {}", case.tag(), e)))?;
    Ok(plan)
}

/// Picks `Z` and its refinement so that a base decomposition applies.
///
/// Expects `u >= 5`, `w >= 10`, a non-uniform list satisfying the necessary
/// conditions with `max <= min(u, w, 3 * second largest)` and odd entries
/// summing to more than `w(w-2)/2`.
pub fn select_z(u: usize, w: usize, lengths: &[usize]) -> Result<RefinementPlan> {
    let all = LengthList::new(lengths.to_vec());
    let nu_o = all.odd_count();
    let nu_5 = all.count(5);
    let breach = |s: &str| Error::InternalInvariantBreach(s.into());
    if all.len() < 2 || u < 5 || w < 10 {
        return Err(Error::HypothesisViolated("selection needs u >= 5, w >= 10 and two entries".into()));
    }

    if nu_o - nu_5 >= w / 2 + 3 {
        // many odd entries other than 5
        let mut big: Vec<usize> = all.entries().iter().copied().filter(|&x| x % 2 == 1 && x != 5).collect();
        big.reverse();
        let zpp: Vec<usize> = big[..w / 2 + 3].to_vec();
        let total = u * w;
        let mut sp = Split::new(&all, &zpp);
        grow(&mut sp, total, |r| r.max(), |r| r.max());
        let t0 = deficit(total, &sp.z);
        if t0 < 0 {
            return Err(breach("negative deficit after growing Z"));
        }
        let in_set = |r: &LengthList, s: &[usize]| r.entries().iter().all(|x| s.contains(x));
        let (step, m) = if t0 != 2 {
            ("3.1", if t0 == 0 { 0 } else { sp.rest.max().unwrap_or(0) })
        } else if !in_set(&sp.rest, &[3, w - 1, w]) {
            let m = sp.rest.entries().iter().rev().copied().find(|&x| (4..=w - 2).contains(&x)).ok_or_else(|| breach("no middle entry"))?;
            ("3.2", m)
        } else if sp.rest.contains(3) {
            sp.move_in(3);
            ("3.3", 0)
        } else if sp.rest.contains(w) {
            let low = *zpp.iter().min().unwrap();
            sp.move_out(low);
            ("3.4", w)
        } else {
            if !sp.z.contains(w) || !sp.rest.contains(w - 1) {
                return Err(breach("step 3.5 needs a w in Z and a w - 1 outside"));
            }
            sp.move_out(w);
            sp.move_in(w - 1);
            ("3.5", w - 1)
        };
        let t = deficit(total, &sp.z);
        if t < 0 || t % 2 == 1 {
            return Err(breach("deficit of Z is not a nonnegative even number"));
        }
        let t = t as usize;
        if m >= 7 {
            let k = companion_length(t);
            let groups = groups_with_companion(&sp.z, k, true);
            return finish_plan(u, w, &all, PlanCase::Case1a, Some(step), sp, t, m, k, groups);
        }
        let groups = sp.z.entries().iter().map(|&x| basic_refinement(x)).collect();
        return finish_plan(u, w, &all, PlanCase::Case1b, Some(step), sp, t, m, 0, groups);
    }

    if nu_5 >= w && nu_o >= w + 4 {
        // many 5s
        let total = u * w;
        let mut zpp = vec![5; (3 * w).div_ceil(4)];
        let spare = all.without(&vec![5; w]);
        let mut odd: Vec<usize> = spare.entries().iter().copied().filter(|x| x % 2 == 1).collect();
        odd.reverse();
        zpp.extend(odd.iter().take(4));
        let mut sp = Split::new(&all, &zpp);
        grow(&mut sp, total, |r| r.max(), |r| r.max());
        let t0 = deficit(total, &sp.z);
        if t0 < 0 {
            return Err(breach("negative deficit after growing Z"));
        }
        let t0 = t0 as usize;
        let (step, m) = if sp.rest.max().map_or(true, |x| x <= 6) {
            ("3.1", if t0 == 0 { 0 } else { sp.rest.max().unwrap_or(0) })
        } else {
            for _ in 0..t0 / 4 {
                if !sp.rest.contains(5) {
                    return Err(breach("too few 5s left to absorb the deficit"));
                }
                sp.move_in(5);
            }
            ("3.2", if t0 % 4 == 0 { 0 } else { 5 })
        };
        let t = deficit(total, &sp.z) as usize;
        let groups = sp.z.entries().iter().map(|&x| basic_refinement(x)).collect();
        return finish_plan(u, w, &all, PlanCase::Case2, Some(step), sp, t, m, 0, groups);
    }

    // few odd entries cross the hole; one hole vertex joins K_W
    let total = (u - 1) * w;
    let binom = (w + 1) * w / 2;
    if all.sigma() <= binom {
        let mut odd: Vec<usize> = all.entries().iter().copied().filter(|x| x % 2 == 1).collect();
        odd.reverse();
        let zpp: Vec<usize> = odd.iter().take(3).copied().collect();
        let mut sp = Split::new(&all, &zpp);
        grow(&mut sp, total, |r| r.max_even(), |r| r.max_even());
        let t = deficit(total, &sp.z);
        if t < 0 {
            return Err(breach("negative deficit after growing Z"));
        }
        let t = t as usize;
        let m = match t {
            0 => 0,
            2 => sp.rest.entries().iter().rev().copied().find(|&x| (4..=w - 1).contains(&x)).ok_or_else(|| breach("no entry between 4 and w - 1"))?,
            _ => sp.rest.max().unwrap_or(0),
        };
        let k = companion_length(t);
        let groups = groups_with_companion(&sp.z, k, false);
        return finish_plan(u, w, &all, PlanCase::Case3a, None, sp, t, m, k, groups);
    }

    // six odd entries, at most one of them a 5, with the largest sum
    let mut cand: Vec<usize> = all.entries().iter().copied().filter(|&x| x % 2 == 1 && x != 5).collect();
    if all.contains(5) {
        cand.push(5);
    }
    cand.sort_unstable_by(|a, b| b.cmp(a));
    if cand.len() < 6 {
        return Err(breach("fewer than six usable odd entries"));
    }
    let zpp: Vec<usize> = cand[..6].to_vec();
    let mut sp = Split::new(&all, &zpp);
    grow(&mut sp, total, |r| r.entries().iter().rev().copied().find(|&x| x != 5), |r| r.max());
    let t = deficit(total, &sp.z);
    if t < 0 || t > sp.rest.max().unwrap_or(0) as i64 - 2 && t > 0 {
        return Err(breach("growing Z stalled"));
    }
    let t = t as usize;
    let m = if t == 0 { 0 } else { sp.rest.max().unwrap_or(0) };
    let k = companion_length(t);
    let groups = groups_with_companion(&sp.z, k, true);
    finish_plan(u, w, &all, PlanCase::Case3b, None, sp, t, m, k, groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        assert_eq!(basic_refinement(12), vec![4, 4, 4]);
        assert_eq!(basic_refinement(9), vec![3, 6]);
        assert_eq!(basic_refinement(5), vec![5]);
        assert_eq!(basic_refinement(7), vec![3, 4]);
        assert_eq!(basic_refinement(3), vec![3]);
        assert_eq!(basic_refinement(6), vec![6]);
        assert_eq!(basic_refinement(13), vec![3, 4, 6]);
        assert_eq!(basic_refinement(14), vec![4, 4, 6]);
    }

    #[test]
    fn refinements_sum_and_keep_parity() {
        for m in 3..=64 {
            let r = basic_refinement(m);
            assert_eq!(r.iter().sum::<usize>(), m);
            assert_eq!(r.iter().filter(|&&x| x % 2 == 1).count(), m % 2);
            assert!(r.iter().all(|&x| (3..=6).contains(&x)));
        }
    }
}
