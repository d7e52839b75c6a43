//! Packings with a prescribed leave, for experiments and tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::base::{companion_length, BaseRequest, BaseVariant};
use crate::error::{Error, Result};
use crate::model::{Cycle, HostGraph, Packing};
use crate::search::{assign_visits, fill_around};
use crate::state::State;

/// Covers every host edge outside `leave` by short cycles, so that the
/// returned packing's leave is exactly the union of `leave`.
pub fn packing_with_leave(host: &HostGraph, leave: &[Cycle], seed: u64) -> Result<Packing> {
    let frame = host.frame();
    let mut base = State::new(frame);
    for c in leave {
        if !c.is_valid_in(host) {
            return Err(Error::InvalidPacking(format!("{} is not a cycle of the host", c)));
        }
        if !base.try_push(c.ids(host)) {
            return Err(Error::InvalidPacking("leave cycles share an edge".into()));
        }
    }
    let rest = base.leave.edge_count();
    let pure = base.leave.pure_count(&frame);
    let low = frame.split;
    let high = frame.n - low;
    let visits = (rest - pure) / 2;
    for attempt in 0..24u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let lens = filler_lengths(rest, &mut rng);
        let Some(specs) = assign_visits(&lens, visits, low, high, &mut rng) else { continue };
        let mut st = base.clone();
        if fill_around(&mut st, &specs, &mut rng, 50_000, leave.len()) && st.leave.edge_count() == 0 {
            // drop the reserved cycles; the fill never touched them
            for i in (0..leave.len()).rev() {
                st.remove(i);
            }
            return Ok(Packing::from_state(host.clone(), &st));
        }
    }
    Err(Error::SearchExhausted("could not cover the rest of the host".into()))
}

/// Lengths 3 to 6 summing to `total`, mostly 4s and 5s.
fn filler_lengths(total: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut out = Vec::new();
    let mut left = total;
    while left > 8 {
        let l = rng.gen_range(3..=6);
        out.push(l);
        left -= l;
    }
    match left {
        0 => {}
        3..=6 => out.push(left),
        7 => out.extend([3, 4]),
        8 => out.extend([4, 4]),
        1 | 2 => {
            // borrow from the previous piece
            let last = out.pop().unwrap_or(0) + left;
            if last <= 6 {
                out.push(last);
            } else {
                out.extend([3, last - 3]);
            }
        }
        _ => unreachable!(),
    }
    out
}

/// A random list of parts in `lo..=hi` summing to `total` and containing
/// `must` (when nonzero).
fn random_parts(total: usize, lo: usize, hi: usize, must: usize, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    let mut left = total.checked_sub(must)?;
    if must > 0 {
        out.push(must);
    }
    while left > 0 {
        if left <= hi && (left >= lo) && (left < 2 * lo || rng.gen_bool(0.3)) {
            out.push(left);
            break;
        }
        let top = hi.min(left.checked_sub(lo)?);
        if top < lo {
            return None;
        }
        let x = rng.gen_range(lo..=top);
        out.push(x);
        left -= x;
    }
    out.sort_unstable();
    Some(out)
}

/// A random request satisfying the hypotheses of `variant` at `(u, w)`,
/// or `None` when `tries` draws all miss.
pub fn random_base_request(u: usize, w: usize, variant: BaseVariant, seed: u64, tries: usize) -> Option<BaseRequest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lmax = u.min(w);
    for _ in 0..tries {
        let (t, m) = match variant {
            BaseVariant::FewCrossOdds => {
                let t = 2 * rng.gen_range(0..=(w - 2).min(lmax.saturating_sub(2)) / 2);
                let m = if t == 0 { 0 } else { rng.gen_range(t + 2..=lmax.max(t + 2)) };
                (t, m)
            }
            BaseVariant::ManyLarge => {
                let t = 2 * rng.gen_range(1..=(w - 2) / 2);
                let lo = (t + 2).max(7);
                if lo > lmax {
                    continue;
                }
                (t, rng.gen_range(lo..=lmax))
            }
            BaseVariant::ManySmall => *[(0, 0), (2, 4), (2, 5), (2, 6), (4, 6)].choose(&mut rng).unwrap(),
        };
        if m > lmax {
            continue;
        }
        let k = if variant == BaseVariant::ManySmall { 0 } else { companion_length(t) };
        let (a, c) = match variant {
            BaseVariant::FewCrossOdds => {
                if rng.gen_bool(0.3) {
                    let a = rng.gen_range(0..=3);
                    (a, 3 - a)
                } else {
                    let c = rng.gen_range(0..=w / 2);
                    let a = rng.gen_range(0..=w - 2 * c);
                    (a, c)
                }
            }
            BaseVariant::ManyLarge => (rng.gen_range(w / 2 + 1..=2 * w), rng.gen_range(0..=1)),
            BaseVariant::ManySmall => {
                if rng.gen_bool(0.5) {
                    let a = rng.gen_range(w / 2..=2 * w);
                    (a, rng.gen_range((w / 2 + 3).saturating_sub(a)..=w))
                } else {
                    let c = rng.gen_range(3 * w / 4 + 1..=2 * w);
                    (rng.gen_range(0..=w / 2), c)
                }
            }
        };
        let d = if u == 5 && variant != BaseVariant::ManyLarge { 0 } else { rng.gen_range(0..=4) };
        let cap = if variant == BaseVariant::FewCrossOdds { (u - 1) * w } else { u * w };
        let used = 2 * a + 4 * c + 6 * d + k + t;
        if used > cap || (cap - used) % 4 != 0 {
            continue;
        }
        let b = (cap - used) / 4;
        let top = if variant == BaseVariant::FewCrossOdds { w * (w + 1) / 2 } else { w * (w - 1) / 2 };
        let Some(sum_n) = (top + t).checked_sub(a + c) else { continue };
        let Some(n) = random_parts(sum_n, 3, lmax, m, &mut rng) else { continue };
        let req = BaseRequest { n, a, b, c, d, t, k, m, variant };
        if req.check(u, w).is_ok() {
            return Some(req);
        }
    }
    None
}

/// A random length list inside the constructive hypotheses at `(u, w)`:
/// necessary conditions hold and the longest entry is at most
/// `min(u, w, 3 * second longest)`. A few favoured lengths dominate each
/// draw so that all planning cases get exercised.
pub fn random_feasible_lengths(u: usize, w: usize, seed: u64, tries: usize) -> Option<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lmax = u.min(w);
    if lmax < 3 {
        return None;
    }
    let total = crate::driver::host_edge_count(u, w);
    for _ in 0..tries {
        let mut weight = vec![0.0f64; lmax + 1];
        for wt in weight.iter_mut().skip(3) {
            *wt = if rng.gen_bool(0.5) { rng.gen::<f64>() } else { 0.0 };
        }
        for _ in 0..rng.gen_range(1..=3) {
            weight[rng.gen_range(3..=lmax)] += 10.0 * rng.gen::<f64>();
        }
        if weight.iter().all(|&x| x == 0.0) {
            continue;
        }
        let Some(lens) = weighted_parts(total, lmax, &weight, &mut rng) else { continue };
        if crate::driver::check_necessary(u, w, &lens).is_ok() && crate::driver::check_theorem_hypotheses(u, w, &lens).is_ok() {
            return Some(lens);
        }
    }
    None
}

fn weighted_parts(total: usize, hi: usize, weight: &[f64], rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    let mut left = total;
    while left > 0 {
        if (3..=hi).contains(&left) {
            out.push(left);
            break;
        }
        let top = hi.min(left.checked_sub(3)?);
        let mass: f64 = (3..=top).map(|l| weight[l]).sum();
        let x = if mass > 0.0 {
            let mut r = rng.gen::<f64>() * mass;
            (3..=top).find(|&l| {
                r -= weight[l];
                r <= 0.0
            })
            .unwrap_or(top)
        } else {
            rng.gen_range(3..=top)
        };
        out.push(x);
        left -= x;
    }
    out.sort_unstable();
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_host, Vertex};

    #[test]
    fn leave_is_exactly_what_was_asked() {
        let host = build_host(5, 6).unwrap();
        let c = Cycle::new(vec![Vertex::outer(0), Vertex::outer(1), Vertex::hole(0)]);
        let p = packing_with_leave(&host, &[c.clone()], 1).unwrap();
        assert_eq!(p.leave().edge_count(), 3);
        let norm = |e: &[(Vertex, Vertex)]| {
            let mut v: Vec<_> = e.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
            v.sort();
            v
        };
        let want = norm(&c.edges());
        let got = norm(p.leave().edges());
        assert_eq!(want, got);
    }

    #[test]
    fn filler_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 3..200 {
            let l = filler_lengths(t, &mut rng);
            assert_eq!(l.iter().sum::<usize>(), t);
            assert!(l.iter().all(|&x| (3..=6).contains(&x)), "{:?}", l);
        }
    }
}
