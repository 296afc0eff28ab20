//! The BS/S side of the dynamic algorithm: big items with small items on top
//! of them, organised into groups of parallel chains, followed by the
//! sequential chains of small-only bins.
//!
//! Group indices run `0..G`; index `G` stands for the sequential chains.

use std::collections::{HashMap, HashSet};

use crate::bins::Tracker;
use crate::chains::{
    chain_order_problem, chain_pull, chain_push, rank_gt, total_amount, Chain, ChainBin, ChainEnv, Piece, Scenario,
    SeqChains,
};
use crate::item::{BinId, BinIds, Item, ItemId};
use crate::size::Size;

/// Mutable context shared by every operation: item placement, the migration
/// ledger and the bin id counter.
#[derive(Clone, Debug, Default)]
pub struct Ctx {
    pub tracker: Tracker,
    pub ids: BinIds,
}

#[derive(Clone, Debug)]
pub struct Group {
    /// Stable identity; group indices shift when a group is removed.
    pub uid: u64,
    /// Physical bin holding every piece assigned to this group's buffers.
    pub buffer_bin: BinId,
    pub chains: Vec<Chain>,
}

impl Group {
    pub fn size(&self) -> usize {
        self.chains.iter().map(|c| c.len() - 1).sum()
    }

    pub fn has_smalls(&self) -> bool {
        self.chains.iter().any(|c| c.bins.iter().any(ChainBin::has_smalls))
    }

    pub fn bigs(&self) -> impl Iterator<Item = &Item> {
        self.chains.iter().flat_map(|c| c.bins.iter().filter_map(|b| b.big.as_ref()))
    }

    fn smalls(&self) -> impl Iterator<Item = &Piece> {
        self.chains.iter().flat_map(|c| c.bins.iter().flat_map(|b| b.smalls.iter()))
    }

    /// Distinct items stored (wholly or partly) in the buffer bin.
    pub fn buffer_items(&self) -> Vec<Item> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for c in &self.chains {
            for p in &c.buffer().smalls {
                if seen.insert(p.item.id) {
                    out.push(p.item.clone());
                }
            }
        }
        out
    }

    pub fn buffer_load(&self) -> Size {
        self.chains.iter().map(|c| c.buffer().small_load()).sum()
    }

    fn remove_from_buffers(&mut self, id: ItemId) -> Size {
        let mut total = Size::zero();
        for c in &mut self.chains {
            if let Some(p) = c.buffer_mut().take_item(id) {
                total += p.amount;
            }
        }
        total
    }
}

struct GroupEnv<'a> {
    siblings: &'a mut [Chain],
    tracker: &'a mut Tracker,
}

impl ChainEnv for GroupEnv<'_> {
    fn placed(&mut self, item: &Item, bin: BinId) {
        self.tracker.place(item, bin);
    }

    fn before_pull(&mut self, bin: &mut ChainBin) {
        let Some(top) = bin.top_small() else { return };
        if top.is_whole() {
            return;
        }
        let id = top.item.id;
        for c in self.siblings.iter_mut() {
            if let Some(p) = c.buffer_mut().take_item(id) {
                bin.add_piece(p);
            }
        }
    }
}

/// Counters for the recursive repair procedures.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RepairStats {
    pub gap_fills: u64,
    pub group_pushes: u64,
    pub group_pulls: u64,
    pub overflows: u64,
    /// Redistributions among first bins of a group.
    pub spreads: u64,
}

#[derive(Clone, Debug)]
pub struct GroupedBins {
    pub groups: Vec<Group>,
    pub seq: SeqChains,
    pub inv_eps: usize,
    pub stats: RepairStats,
    next_uid: u64,
}

/// Where a big item of BS sits: group, chain and bin index.
pub type BigLoc = (usize, usize, usize);

const LOOP_GUARD: usize = 1 << 16;

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

impl GroupedBins {
    pub fn new(inv_eps: usize) -> Self {
        GroupedBins {
            groups: Vec::new(),
            seq: SeqChains::new(inv_eps),
            inv_eps,
            stats: RepairStats::default(),
            next_uid: 0,
        }
    }

    /// Number of BS bins (non-buffer bins of all groups).
    pub fn bs_count(&self) -> usize {
        self.groups.iter().map(Group::size).sum()
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn bs_bins(&self) -> impl Iterator<Item = &ChainBin> {
        self.groups.iter().flat_map(|g| g.chains.iter().flat_map(|c| c.bins[..c.len() - 1].iter()))
    }

    pub fn bigs(&self) -> impl Iterator<Item = &Item> {
        self.groups.iter().flat_map(Group::bigs)
    }

    pub fn min_big(&self) -> Option<&Item> {
        self.bigs().reduce(|a, b| if rank_gt(a, b) { b } else { a })
    }

    pub fn max_big(&self) -> Option<&Item> {
        self.bigs().reduce(|a, b| if rank_gt(b, a) { b } else { a })
    }

    fn has_smalls_at(&self, g: usize) -> bool {
        if g < self.groups.len() {
            self.groups[g].has_smalls()
        } else {
            self.seq.has_smalls()
        }
    }

    /// Index of the last group (S included) holding small items.
    pub fn last_small_group(&self) -> Option<usize> {
        (0..=self.groups.len()).rev().find(|&g| self.has_smalls_at(g))
    }

    pub fn locate_big(&self, id: ItemId) -> Option<BigLoc> {
        for (g, gr) in self.groups.iter().enumerate() {
            for (c, ch) in gr.chains.iter().enumerate() {
                for (j, b) in ch.bins.iter().enumerate() {
                    if b.big.as_ref().is_some_and(|i| i.id == id) {
                        return Some((g, c, j));
                    }
                }
            }
        }
        None
    }

    pub fn contains_small(&self, id: ItemId) -> bool {
        self.seq.locate(id).is_some() || self.groups.iter().any(|g| g.smalls().any(|p| p.item.id == id))
    }

    fn group_index(&self, uid: u64) -> Option<usize> {
        self.groups.iter().position(|g| g.uid == uid)
    }

    fn is_gap(&self, g: usize, c: usize, j: usize) -> bool {
        let ch = &self.groups[g].chains[c];
        if j + 1 >= ch.len() || ch.bins[j].is_covered() {
            return false;
        }
        ch.bins[j + 1..].iter().any(ChainBin::has_smalls) || (g + 1..=self.groups.len()).any(|h| self.has_smalls_at(h))
    }

    fn with_chain<R>(
        &mut self,
        g: usize,
        c: usize,
        tracker: &mut Tracker,
        f: impl FnOnce(&mut Chain, &mut dyn ChainEnv) -> R,
    ) -> R {
        let mut chains = std::mem::take(&mut self.groups[g].chains);
        let mut chain = chains.remove(c);
        let r = {
            let mut env = GroupEnv { siblings: &mut chains, tracker };
            f(&mut chain, &mut env)
        };
        chains.insert(c, chain);
        self.groups[g].chains = chains;
        r
    }

    /// Makes the largest piece of every buffer a whole item by gathering its
    /// other pieces. Pieces never leave the buffer bin, so this is free.
    fn normalize_buffers(&mut self, g: usize) {
        loop {
            let group = &self.groups[g];
            let found = group
                .chains
                .iter()
                .enumerate()
                .find_map(|(c, ch)| ch.buffer().top_small().filter(|p| !p.is_whole()).map(|p| (c, p.item.id)));
            let Some((c, id)) = found else { return };
            let gathered = {
                let mut pieces = Vec::new();
                for (k, ch) in self.groups[g].chains.iter_mut().enumerate() {
                    if k != c {
                        if let Some(p) = ch.buffer_mut().take_item(id) {
                            pieces.push(p);
                        }
                    }
                }
                pieces
            };
            let buf = self.groups[g].chains[c].buffer_mut();
            for p in gathered {
                buf.add_piece(p);
            }
        }
    }

    // ---- small items -------------------------------------------------

    /// Group that receives a newly arriving small item.
    pub fn select_group(&self, item: &Item) -> usize {
        let n = self.groups.len();
        for g in 0..=n {
            let smaller = if g < n {
                self.groups[g].smalls().any(|p| p.item.size < item.size)
            } else {
                self.seq.bins().any(|b| b.contains_smaller_than(item))
            };
            if smaller {
                return g;
            }
        }
        match self.last_small_group() {
            None => 0,
            Some(last) if last == n => last,
            Some(last) => {
                let open = self.groups[last].chains.iter().any(|c| c.bins.iter().any(|b| !b.is_covered()));
                if open {
                    last
                } else {
                    last + 1
                }
            }
        }
    }

    pub fn insert_small(&mut self, item: Item, ctx: &mut Ctx) {
        let g = self.select_group(&item);
        self.insert_into(g, vec![item], Scenario::Arrival, ctx);
    }

    fn insert_into(&mut self, g: usize, x: Vec<Item>, scenario: Scenario, ctx: &mut Ctx) {
        if x.is_empty() {
            return;
        }
        if g >= self.groups.len() {
            self.seq.insert(x, scenario, &mut ctx.tracker, &mut ctx.ids);
            return;
        }
        let probe = x[0].clone();
        let group = &self.groups[g];
        let first_smaller = |ch: &Chain| ch.bins.iter().position(|b| b.contains_smaller_than(&probe));
        let (c, j) = match group.chains.iter().position(|ch| ch.bins.iter().any(|b| !b.has_smalls())) {
            Some(c) => {
                let ch = &group.chains[c];
                let j = match scenario {
                    Scenario::Overflow => 0,
                    Scenario::Arrival => first_smaller(ch).unwrap_or_else(|| {
                        (0..ch.len())
                            .find(|&j| !ch.bins[j].is_covered() && (j == 0 || ch.bins[j - 1].is_well_covered()))
                            .unwrap_or(ch.len() - 1)
                    }),
                };
                (c, j)
            }
            None => {
                let c = (0..group.chains.len())
                    .reduce(|a, b| {
                        let (ta, tb) = (group.chains[a].buffer().top_small(), group.chains[b].buffer().top_small());
                        match (ta, tb) {
                            (Some(pa), Some(pb)) if pa.outranks(pb) => b,
                            _ => a,
                        }
                    })
                    .expect("group has a chain");
                let ch = &group.chains[c];
                let j = match scenario {
                    Scenario::Overflow => 0,
                    Scenario::Arrival => first_smaller(ch).unwrap_or(ch.len() - 1),
                };
                (c, j)
            }
        };
        let pieces: Vec<Piece> = x.into_iter().map(Piece::whole).collect();
        let y = self.with_chain(g, c, &mut ctx.tracker, |ch, env| chain_push(ch, j, pieces, env, None));
        if y.is_empty() {
            self.normalize_buffers(g);
        } else {
            self.overflow(g, y, ctx);
        }
    }

    /// Handles items pushed out of a buffer of group `g`: swaps them against
    /// the smallest buffer items and sends those on to group `g + 1`.
    fn overflow(&mut self, g: usize, y: Vec<Piece>, ctx: &mut Ctx) {
        self.stats.overflows += 1;
        let s_y = total_amount(&y);
        let q = y.iter().map(|p| p.amount.clone()).max().expect("non-empty overflow");

        let mut cands: Vec<(Item, bool)> = Vec::new();
        let mut seen = HashSet::new();
        for p in &y {
            if seen.insert(p.item.id) {
                cands.push((p.item.clone(), true));
            }
        }
        for it in self.groups[g].buffer_items() {
            if seen.insert(it.id) {
                cands.push((it, false));
            }
        }
        cands.sort_by(|(a, ay), (b, by)| a.size.cmp(&b.size).then(by.cmp(ay)).then(a.id.cmp(&b.id)));
        let mut z: Vec<Item> = Vec::new();
        let mut s_z = Size::zero();
        for (it, _) in cands {
            if s_z >= s_y {
                break;
            }
            s_z += &it.size;
            z.push(it);
        }
        let z_ids: HashSet<ItemId> = z.iter().map(|i| i.id).collect();

        let group = &mut self.groups[g];
        let mut gaps: Vec<Size> = Vec::with_capacity(group.chains.len());
        for ch in &mut group.chains {
            let buf = ch.buffer_mut();
            let mut freed = Size::zero();
            buf.smalls.retain(|p| {
                if z_ids.contains(&p.item.id) {
                    freed += &p.amount;
                    false
                } else {
                    true
                }
            });
            gaps.push(freed);
        }
        let mut rest: Vec<Piece> = y.into_iter().filter(|p| !z_ids.contains(&p.item.id)).collect();
        rest.sort_by(|a, b| if a.outranks(b) { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater });
        let gb = group.buffer_bin;
        for p in rest {
            ctx.tracker.place(&p.item, gb);
            fill_gaps(group, &mut gaps, p);
        }
        self.normalize_buffers(g);

        z.sort_by(|a, b| if rank_gt(a, b) { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater });
        let mut acc = Size::zero();
        let mut cut = z.len();
        for (k, it) in z.iter().enumerate() {
            acc += &it.size;
            if acc >= q {
                cut = k + 1;
                break;
            }
        }
        let z2 = z.split_off(cut);
        self.insert_into(g + 1, z2, Scenario::Overflow, ctx);
        self.insert_into(g + 1, z, Scenario::Overflow, ctx);
    }

    /// Removes a departing small item. Returns false if it is not held here.
    pub fn remove_small(&mut self, id: ItemId, ctx: &mut Ctx) -> bool {
        if self.seq.remove(id, &mut ctx.tracker) {
            return true;
        }
        let mut hit: Option<(usize, usize, usize)> = None;
        let mut in_buffer_of: Option<usize> = None;
        for (g, gr) in self.groups.iter_mut().enumerate() {
            for (c, ch) in gr.chains.iter_mut().enumerate() {
                let last = ch.len() - 1;
                for (j, b) in ch.bins.iter_mut().enumerate() {
                    if b.take_item(id).is_some() {
                        if j == last {
                            in_buffer_of = Some(g);
                        } else {
                            hit = Some((g, c, j));
                        }
                    }
                }
            }
        }
        if let Some(g) = in_buffer_of {
            self.normalize_buffers(g);
            return true;
        }
        match hit {
            Some((g, c, j)) => {
                if self.is_gap(g, c, j) {
                    self.gap_fill(g, c, j, ctx);
                }
                true
            }
            None => false,
        }
    }

    fn take_largest_small(&mut self, g: usize) -> Option<Item> {
        if g >= self.groups.len() {
            return self.seq.take_largest();
        }
        let group = &self.groups[g];
        let mut best: Option<(usize, usize, &Piece)> = None;
        for (c, ch) in group.chains.iter().enumerate() {
            for (j, b) in ch.bins.iter().enumerate() {
                if let Some(p) = b.top_small() {
                    if best.as_ref().is_none_or(|(_, _, q)| p.outranks(q)) {
                        best = Some((c, j, p));
                    }
                }
            }
        }
        let (c, j, p) = best?;
        let id = p.item.id;
        if !p.is_whole() {
            let item = p.item.clone();
            self.groups[g].remove_from_buffers(id);
            return Some(item);
        }
        self.groups[g].chains[c].bins[j].take_item(id).map(|p| p.item)
    }

    /// Repairs the maximal gap bin `(g, c, j)`.
    fn gap_fill(&mut self, g: usize, c: usize, j: usize, ctx: &mut Ctx) {
        self.stats.gap_fills += 1;
        if g >= self.groups.len() {
            self.seq.repair(c, j, &mut ctx.tracker);
            return;
        }
        self.with_chain(g, c, &mut ctx.tracker, |ch, env| chain_pull(ch, j, env, None));
        self.normalize_buffers(g);
        if self.last_small_group().is_none_or(|l| l <= g) {
            return;
        }
        let bp = self.groups[g].chains[c].len() - 2;
        if self.groups[g].chains[c].bins[bp].is_well_covered() {
            return;
        }
        let next = g + 1;
        while !self.groups[g].chains[c].bins[bp].is_covered() {
            let Some(item) = self.take_largest_small(next) else { break };
            let bin = &mut self.groups[g].chains[c].bins[bp];
            ctx.tracker.place(&item, bin.id);
            bin.add_piece(Piece::whole(item));
        }
        if next >= self.groups.len() {
            self.seq.repair_all(&mut ctx.tracker);
            return;
        }
        self.normalize_buffers(next);
        self.spread_first_bins(next, ctx);
        for _ in 0..LOOP_GUARD {
            let Some((c2, j2)) = self.maximal_gap_in(next) else { return };
            self.gap_fill(next, c2, j2, ctx);
        }
        panic!("gap repair in group {next} did not terminate");
    }

    fn maximal_gap_in(&self, g: usize) -> Option<(usize, usize)> {
        let gr = &self.groups[g];
        (0..gr.chains.len())
            .find_map(|c| (0..gr.chains[c].len() - 1).rev().find(|&j| self.is_gap(g, c, j)).map(|j| (c, j)))
    }

    /// Moves small items between first bins of group `g` so that at most
    /// four of them stay uncovered.
    fn spread_first_bins(&mut self, g: usize, ctx: &mut Ctx) {
        let last = self.last_small_group() == Some(g);
        let gr = &self.groups[g];
        let fst: Vec<usize> = (0..gr.chains.len())
            .filter(|&c| !last || gr.chains[c].bins[1..].iter().any(ChainBin::has_smalls))
            .collect();
        let open = fst.iter().filter(|&&c| !gr.chains[c].bins[0].is_well_covered()).count();
        if open <= 4 {
            return;
        }
        self.stats.spreads += 1;
        let mut ranked = fst.clone();
        ranked.sort_by(|&a, &b| {
            let ma = gr.chains[a].bins[0].bottom_small().map(|p| p.item.clone());
            let mb = gr.chains[b].bins[0].bottom_small().map(|p| p.item.clone());
            match (ma, mb) {
                (Some(x), Some(y)) if rank_gt(&x, &y) => std::cmp::Ordering::Less,
                (Some(x), Some(y)) if rank_gt(&y, &x) => std::cmp::Ordering::Greater,
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                _ => a.cmp(&b),
            }
        });
        let f: Vec<usize> = ranked[..4].to_vec();
        let rest: Vec<usize> = ranked[4..].to_vec();
        for _ in 0..LOOP_GUARD {
            let chains = &self.groups[g].chains;
            let receiver = rest.iter().copied().filter(|&c| !chains[c].bins[0].is_covered()).reduce(|a, b| {
                if chains[b].bins[0].load() > chains[a].bins[0].load() {
                    b
                } else {
                    a
                }
            });
            let donor = f.iter().copied().filter(|&c| chains[c].bins[0].has_smalls()).reduce(|a, b| {
                if chains[b].bins[0].load() > chains[a].bins[0].load() {
                    b
                } else {
                    a
                }
            });
            let (Some(r), Some(d)) = (receiver, donor) else { return };
            let p = self.groups[g].chains[d].bins[0].take_top_small().expect("donor has smalls");
            let bin = &mut self.groups[g].chains[r].bins[0];
            ctx.tracker.place(&p.item, bin.id);
            bin.add_piece(p);
        }
    }

    // ---- big items -----------------------------------------------------

    fn group_insert(&mut self, big: Item, g: usize, ctx: &mut Ctx) {
        let k = self.inv_eps;
        let bin = ChainBin::with_big(ctx.ids.fresh(), big.clone());
        ctx.tracker.place(&big, bin.id);
        let (c, j) = if g >= self.groups.len() {
            let gb = ctx.ids.fresh();
            let mut buffer = ChainBin::new(gb);
            buffer.virtual_big = Some(big.size.clone());
            let uid = self.next_uid;
            self.next_uid += 1;
            self.groups.push(Group { uid, buffer_bin: gb, chains: vec![Chain { bins: vec![bin, buffer] }] });
            (0, 0)
        } else {
            let group = &mut self.groups[g];
            match group.chains.iter().position(|ch| ch.len() - 1 < k) {
                Some(c) => {
                    let ch = &mut group.chains[c];
                    let j = (0..ch.len() - 1)
                        .find(|&j| ch.bins[j].big.as_ref().is_some_and(|b| b.size < big.size))
                        .unwrap_or(ch.len() - 1);
                    ch.bins.insert(j, bin);
                    ch.refresh_virtual_big();
                    (c, j)
                }
                None => {
                    let mut buffer = ChainBin::new(group.buffer_bin);
                    buffer.virtual_big = Some(big.size.clone());
                    group.chains.push(Chain { bins: vec![bin, buffer] });
                    (group.chains.len() - 1, 0)
                }
            }
        };
        let g = g.min(self.groups.len() - 1);
        if self.is_gap(g, c, j) {
            self.gap_fill(g, c, j, ctx);
        }
    }

    /// Removes bin `(g, c, j)` (whose big item has already been taken out)
    /// and restores the parallel chain structure of the group.
    fn group_delete(&mut self, g: usize, c: usize, j: usize, ctx: &mut Ctx) {
        let k = self.inv_eps;
        let mut stash: Vec<Item> = Vec::new();
        let group = &mut self.groups[g];
        let removed = group.chains[c].bins.remove(j);
        debug_assert!(removed.big.is_none());
        stash.extend(removed.smalls.into_iter().map(|p| p.item));
        stash_buffer(group, c, &mut stash);
        let mut refill: Option<(usize, usize)> = None;
        if group.chains[c].len() == 1 {
            group.chains.remove(c);
            if group.chains.is_empty() {
                self.groups.remove(g);
            }
        } else {
            group.chains[c].refresh_virtual_big();
            let other = (0..group.chains.len()).find(|&o| o != c && group.chains[o].len() - 1 < k);
            if let Some(o) = other {
                let n = group.chains[o].len();
                let moved = group.chains[o].bins.remove(n - 2);
                stash.extend(moved.smalls.iter().map(|p| p.item.clone()));
                stash_buffer(group, o, &mut stash);
                let mut bin = moved;
                bin.smalls.clear();
                let big_size = bin.big.as_ref().expect("non-buffer bin has a big item").size.clone();
                let target = &mut group.chains[c];
                let pos = (0..target.len() - 1)
                    .find(|&p| target.bins[p].big.as_ref().is_some_and(|b| b.size < big_size))
                    .unwrap_or(target.len() - 1);
                target.bins.insert(pos, bin);
                target.refresh_virtual_big();
                let mut c = c;
                if group.chains[o].len() == 1 {
                    group.chains.remove(o);
                    if o < c {
                        c -= 1;
                    }
                } else {
                    group.chains[o].refresh_virtual_big();
                }
                refill = Some((c, pos));
            }
        }
        if let Some((c, pos)) = refill {
            if self.is_gap(g, c, pos) {
                self.gap_fill(g, c, pos, ctx);
            }
        }
        stash.sort_by(|a, b| if rank_gt(a, b) { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater });
        for it in stash {
            self.insert_small(it, ctx);
        }
    }

    fn take_big(&mut self, (g, c, j): BigLoc) -> Item {
        let bin = &mut self.groups[g].chains[c].bins[j];
        bin.big.take().expect("located bin holds a big item")
    }

    fn group_push(&mut self, g: usize, ctx: &mut Ctx) {
        self.stats.group_pushes += 1;
        let loc = self.extreme_big_in(g, false);
        let next_uid = self.groups.get(g + 1).map(|gr| gr.uid);
        let big = self.take_big(loc);
        self.group_delete(loc.0, loc.1, loc.2, ctx);
        let target = next_uid.and_then(|u| self.group_index(u)).unwrap_or(self.groups.len());
        self.group_insert(big, target, ctx);
    }

    fn group_pull(&mut self, g: usize, ctx: &mut Ctx) {
        self.stats.group_pulls += 1;
        let uid = self.groups[g].uid;
        let loc = self.extreme_big_in(g + 1, true);
        let big = self.take_big(loc);
        self.group_delete(loc.0, loc.1, loc.2, ctx);
        let target = self.group_index(uid).expect("pulling group survives");
        self.group_insert(big, target, ctx);
    }

    fn extreme_big_in(&self, g: usize, largest: bool) -> BigLoc {
        let mut best: Option<(BigLoc, &Item)> = None;
        for (c, ch) in self.groups[g].chains.iter().enumerate() {
            for (j, b) in ch.bins.iter().enumerate() {
                if let Some(it) = &b.big {
                    let better =
                        best.as_ref().is_none_or(|(_, cur)| if largest { rank_gt(it, cur) } else { rank_gt(cur, it) });
                    if better {
                        best = Some(((g, c, j), it));
                    }
                }
            }
        }
        best.expect("group has a big item").0
    }

    /// Brings every group to its target size for base `t`.
    fn rebalance(&mut self, t: usize, ctx: &mut Ctx) {
        let t = t.max(1);
        let mut g = 0;
        for _ in 0..LOOP_GUARD {
            if g >= self.groups.len() {
                return;
            }
            let cap = t << g;
            let size = self.groups[g].size();
            if size > cap {
                self.group_push(g, ctx);
            } else if size < cap && g + 1 < self.groups.len() {
                self.group_pull(g, ctx);
            } else {
                g += 1;
            }
        }
        panic!("group rebalancing did not terminate");
    }

    pub fn insert_big(&mut self, big: Item, ctx: &mut Ctx) {
        let n = self.bs_count();
        let g = match self.min_big() {
            None => self.groups.len(),
            Some(m) if big.size <= m.size => self.groups.len() - 1,
            Some(_) => self
                .groups
                .iter()
                .position(|gr| gr.bigs().any(|b| b.size < big.size))
                .expect("some group holds a smaller big item"),
        };
        self.group_insert(big, g, ctx);
        self.rebalance(ceil_div(n, self.inv_eps), ctx);
        self.rebalance(ceil_div(n + 1, self.inv_eps), ctx);
    }

    /// Takes a big item out of BS and repairs the structure.
    pub fn extract_big(&mut self, id: ItemId, ctx: &mut Ctx) -> Option<Item> {
        let loc = self.locate_big(id)?;
        let n = self.bs_count();
        let big = self.take_big(loc);
        self.group_delete(loc.0, loc.1, loc.2, ctx);
        self.rebalance(ceil_div(n, self.inv_eps), ctx);
        self.rebalance(ceil_div(n - 1, self.inv_eps), ctx);
        Some(big)
    }

    /// Swaps the big item `id` for `replacement` in place, returning it.
    pub fn replace_big(&mut self, id: ItemId, replacement: Item, ctx: &mut Ctx) -> Option<Item> {
        let (g, c, j) = self.locate_big(id)?;
        let bin = &mut self.groups[g].chains[c].bins[j];
        ctx.tracker.place(&replacement, bin.id);
        let old = bin.big.replace(replacement);
        self.groups[g].chains[c].refresh_virtual_big();
        old
    }

    /// Exchanges two big items without any repair. Only meant for fault
    /// injection in tests of the invariant checker.
    pub fn swap_bigs_unchecked(&mut self, a: ItemId, b: ItemId) -> bool {
        let (Some(la), Some(lb)) = (self.locate_big(a), self.locate_big(b)) else { return false };
        let ia = self.groups[la.0].chains[la.1].bins[la.2].big.take();
        let ib = self.groups[lb.0].chains[lb.1].bins[lb.2].big.take();
        self.groups[la.0].chains[la.1].bins[la.2].big = ib;
        self.groups[lb.0].chains[lb.1].bins[lb.2].big = ia;
        for (g, c, _) in [la, lb] {
            self.groups[g].chains[c].refresh_virtual_big();
        }
        true
    }

    // ---- reporting ---------------------------------------------------

    /// Physical bins as (id, items, load).
    pub fn physical_bins(&self) -> Vec<(BinId, Vec<ItemId>, Size)> {
        let mut out = Vec::new();
        for gr in &self.groups {
            for ch in &gr.chains {
                for b in &ch.bins[..ch.len() - 1] {
                    let ids = b.big.iter().map(|i| i.id).chain(b.smalls.iter().map(|p| p.item.id)).collect();
                    out.push((b.id, ids, b.physical_load()));
                }
            }
            let items = gr.buffer_items();
            if !items.is_empty() {
                out.push((gr.buffer_bin, items.iter().map(|i| i.id).collect(), gr.buffer_load()));
            }
        }
        for b in self.seq.bins() {
            out.push((b.id, b.smalls.iter().map(|p| p.item.id).collect(), b.physical_load()));
        }
        out
    }

    pub fn violations(&self, out: &mut Vec<(&'static str, String)>) {
        let k = self.inv_eps;
        let n = self.bs_count();
        let t = ceil_div(n, k);
        let gcount = self.groups.len();
        let max_groups = (usize::BITS - 1 - k.leading_zeros()) as usize + 2;
        if gcount > max_groups {
            out.push(("D-I9", format!("{gcount} groups exceed the limit {max_groups}")));
        }
        for (g, gr) in self.groups.iter().enumerate() {
            let size = gr.size();
            let cap = t << g;
            if size == 0 || (g + 1 < gcount && size != cap) || size > cap {
                out.push(("D-I9", format!("group {g} holds {size} bins, target {cap}")));
            }
            self.group_violations(g, out);
        }
        self.seq.violations(out);

        // Ordering across groups.
        for g in 1..gcount {
            let lo = self.groups[g - 1].bigs().map(|b| &b.size).min();
            let hi = self.groups[g].bigs().map(|b| &b.size).max();
            if let (Some(lo), Some(hi)) = (lo, hi) {
                if hi > lo {
                    out.push(("D-I11", format!("group {g} holds a bigger big item than group {}", g - 1)));
                }
            }
        }
        let mut floor: Option<Size> = None;
        for g in 0..=gcount {
            let (top, bottom): (Option<Size>, Option<Size>) = if g < gcount {
                let s = || self.groups[g].smalls().map(|p| p.item.size.clone());
                (s().max(), s().min())
            } else {
                let s = || self.seq.bins().flat_map(|b| b.smalls.iter().map(|p| p.item.size.clone()));
                (s().max(), s().min())
            };
            if let (Some(top), Some(fl)) = (&top, &floor) {
                if top > fl {
                    out.push(("D-I11", format!("group {g} holds a bigger small item than an earlier group")));
                }
            }
            if let Some(b) = bottom {
                floor = Some(floor.map_or(b.clone(), |f| f.min(b)));
            }
        }

        if let Some(last) = self.last_small_group() {
            for g in 0..last.min(gcount) {
                for (c, ch) in self.groups[g].chains.iter().enumerate() {
                    for (j, b) in ch.bins[..ch.len() - 1].iter().enumerate() {
                        if !b.is_well_covered() {
                            out.push(("D-I12", format!("bin {j} of chain {c} in group {g} is not well-covered")));
                        }
                    }
                }
            }
        }
    }

    fn group_violations(&self, g: usize, out: &mut Vec<(&'static str, String)>) {
        let k = self.inv_eps;
        let gr = &self.groups[g];
        let size = gr.size();
        if gr.chains.len() != ceil_div(size, k) {
            out.push(("D-I10", format!("group {g} has {} chains for {size} bins", gr.chains.len())));
        }
        let short = gr.chains.iter().filter(|c| c.len() - 1 < k).count();
        if short > 1 {
            out.push(("D-I10", format!("group {g} has {short} short chains")));
        }
        let mut amounts: HashMap<ItemId, (Size, Size)> = HashMap::new();
        for (c, ch) in gr.chains.iter().enumerate() {
            let len = ch.len();
            if len < 2 || len - 1 > k {
                out.push(("D-I10", format!("chain {c} of group {g} has {} non-buffer bins", len.saturating_sub(1))));
                continue;
            }
            if let Some(p) = chain_order_problem(ch) {
                out.push(("D-I10", format!("chain {c} of group {g}: {p}")));
            }
            let buf = ch.buffer();
            if buf.id != gr.buffer_bin || buf.big.is_some() {
                out.push(("D-I10", format!("chain {c} of group {g} has a malformed buffer")));
            }
            if buf.virtual_big.as_ref() != ch.bins[len - 2].big.as_ref().map(|b| &b.size) {
                out.push(("D-I10", format!("chain {c} of group {g} has a stale virtual big item")));
            }
            if buf.top_small().is_some_and(|p| !p.is_whole()) {
                out.push(("D-I10", format!("buffer of chain {c} in group {g} lacks a whole largest item")));
            }
            for p in &buf.smalls {
                let e = amounts.entry(p.item.id).or_insert_with(|| (p.item.size.clone(), Size::zero()));
                e.1 += &p.amount;
            }
            let mut phase = 0;
            for (j, b) in ch.bins.iter().enumerate() {
                if j + 1 < len {
                    if b.big.is_none() {
                        out.push(("D-I10", format!("bin {j} of chain {c} in group {g} has no big item")));
                    }
                    if b.smalls.iter().any(|p| !p.is_whole()) {
                        out.push(("D-I10", format!("bin {j} of chain {c} in group {g} holds a partial piece")));
                    }
                }
                if !b.is_at_most_well_covered() {
                    out.push(("D-I10", format!("bin {j} of chain {c} in group {g} is more than well-covered")));
                }
                let wc = b.is_well_covered();
                match phase {
                    0 if wc => {}
                    0 => phase = if b.has_smalls() { 1 } else { 2 },
                    _ if b.has_smalls() => {
                        out.push((
                            "D-I10",
                            format!("bin {j} of chain {c} in group {g} holds small items past the covered prefix"),
                        ));
                    }
                    _ => phase = 2,
                }
            }
        }
        for (id, (size, total)) in amounts {
            if size != total {
                out.push(("D-I10", format!("pieces of item {id} in group {g} sum to {total}, not {size}")));
            }
        }
    }
}

fn stash_buffer(group: &mut Group, c: usize, stash: &mut Vec<Item>) {
    let ids: Vec<Item> = group.chains[c].buffer().smalls.iter().map(|p| p.item.clone()).collect();
    for it in ids {
        group.remove_from_buffers(it.id);
        stash.push(it);
    }
}

/// Places `piece` into freed buffer space, whole where a single gap is large
/// enough, preferring buffers whose largest whole item is at least as big.
fn fill_gaps(group: &mut Group, gaps: &mut [Size], piece: Piece) {
    let fits_order = |ch: &Chain, p: &Piece| ch.buffer().top_small().is_none_or(|t| !p.outranks(t));
    let order: Vec<usize> = {
        let mut v: Vec<usize> = (0..gaps.len()).collect();
        v.sort_by_key(|&c| !fits_order(&group.chains[c], &piece));
        v
    };
    if let Some(&c) = order.iter().find(|&&c| gaps[c] >= piece.amount) {
        gaps[c] -= &piece.amount;
        group.chains[c].buffer_mut().add_piece(piece);
        return;
    }
    let mut left = piece.amount.clone();
    for &c in &order {
        if left.is_zero() {
            break;
        }
        if gaps[c].is_zero() {
            continue;
        }
        let part = Size::min_of(&gaps[c], &left).clone();
        gaps[c] -= &part;
        left -= &part;
        group.chains[c].buffer_mut().add_piece(Piece { item: piece.item.clone(), amount: part });
    }
    debug_assert!(left.is_zero(), "freed buffer space too small for the overflow");
}
