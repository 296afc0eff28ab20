use bincover_core::adversary::{gen_random, RandomSpec, SizeFamily};
use bincover_core::bins::Tracker;
use bincover_core::chains::{chain_order_problem, chain_pull, chain_push, Chain, ChainBin, Piece};
use bincover_core::harness::{parse_report, replay, report_to_csv, Algo, ReplayConfig};
use bincover_core::oracle::{greedy_cover, opt_by_subset_recursion, opt_exact, OracleLimits};
use bincover_core::stream::EventStream;
use bincover_core::{BinId, Item, ItemId, Size};
use proptest::prelude::*;

fn size_strategy(den: i64) -> impl Strategy<Value = Size> {
    (1..=den).prop_map(move |n| Size::ratio(n, den))
}

fn items_strategy(max: usize) -> impl Strategy<Value = Vec<Item>> {
    prop::collection::vec((1i64..=24, prop::sample::select(vec![12i64, 24, 25])), 0..=max).prop_map(|v| {
        v.into_iter().enumerate().map(|(k, (n, d))| Item::new(k as u64, Size::ratio(n.min(d), d))).collect()
    })
}

fn family_strategy() -> impl Strategy<Value = SizeFamily> {
    prop_oneof![
        (5u32..=60).prop_map(|d| SizeFamily::UniformGrid { denominator: d }),
        Just("bimodal-1/8".parse().unwrap()),
        Just("all-small-1/4".parse().unwrap()),
    ]
}

fn stream_strategy(departures: bool) -> impl Strategy<Value = EventStream> {
    (family_strategy(), 1usize..60, any::<u64>(), 0.0f64..0.45).prop_map(move |(family, arrivals, seed, rate)| {
        let departure_rate = if departures { rate } else { 0.0 };
        let max_live = departures.then_some(30);
        gen_random(&RandomSpec { arrivals, family, departure_rate, max_live, seed }).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn size_text_round_trips(n in 1i64..500, d in 1i64..500) {
        let s = Size::ratio(n, d);
        prop_assert_eq!(s.to_string().parse::<Size>().unwrap(), s);
    }

    #[test]
    fn oracle_matches_subset_recursion(items in items_strategy(8)) {
        let (dp, packing) = opt_exact(&items, OracleLimits::default()).unwrap();
        prop_assert_eq!(dp, opt_by_subset_recursion(&items));
        prop_assert_eq!(packing.objective, dp);
        let total: Size = items.iter().map(|i| &i.size).sum();
        prop_assert!(Size::from(dp as i64) <= total);
        prop_assert!(greedy_cover(&items).objective <= dp);
    }

    #[test]
    fn oracle_packing_is_a_partition_with_covered_bins(items in items_strategy(10)) {
        let (opt, packing) = opt_exact(&items, OracleLimits::default()).unwrap();
        let mut seen: Vec<ItemId> = packing.bins.iter().flatten().copied().collect();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), packing.bins.iter().map(Vec::len).sum::<usize>());
        let covered = packing
            .bins
            .iter()
            .filter(|b| b.iter().map(|id| &items[id.0 as usize].size).sum::<Size>() >= Size::one())
            .count();
        prop_assert!(covered >= opt);
    }

    #[test]
    fn stream_text_round_trips(stream in stream_strategy(true)) {
        let text = stream.to_text();
        prop_assert_eq!(EventStream::parse(&text).unwrap(), stream);
    }

    #[test]
    fn report_csv_round_trips(stream in stream_strategy(true), den in prop::sample::select(vec![2i64, 4])) {
        let report = replay(&stream, &ReplayConfig::new(Algo::Dynamic, Size::ratio(1, den)).with_oracle(10)).unwrap();
        let csv = report_to_csv(&report).unwrap();
        prop_assert_eq!(parse_report(&csv).unwrap(), report);
    }

    #[test]
    fn dynamic_invariants_hold_after_every_event(
        stream in stream_strategy(true),
        den in prop::sample::select(vec![2i64, 3, 4, 8]),
    ) {
        let config = ReplayConfig::new(Algo::Dynamic, Size::ratio(1, den)).checked();
        prop_assert!(replay(&stream, &config).is_ok());
    }

    #[test]
    fn static_invariants_hold_after_every_event(
        stream in stream_strategy(false),
        den in prop::sample::select(vec![2i64, 3, 5, 10]),
    ) {
        let config = ReplayConfig::new(Algo::Static, Size::ratio(1, den)).checked();
        prop_assert!(replay(&stream, &config).is_ok());
    }

    #[test]
    fn amortized_invariants_hold_after_every_event(
        stream in stream_strategy(false),
        den in prop::sample::select(vec![2i64, 4]),
    ) {
        let config = ReplayConfig::new(Algo::Amortized, Size::ratio(1, den)).checked().with_oracle(12);
        let report = replay(&stream, &config).unwrap();
        prop_assert!(report.all_ratios_ok());
    }

    #[test]
    fn dynamic_objective_is_zero_once_everything_left(stream in stream_strategy(true)) {
        let mut stream = stream;
        bincover_core::adversary::drain_all(&mut stream, 1);
        let report = replay(&stream, &ReplayConfig::new(Algo::Dynamic, Size::ratio(1, 4))).unwrap();
        prop_assert_eq!(report.rows.last().map_or(0, |r| r.alg_covered), 0);
    }

    /// Small-only chains: fill bins in decreasing order, then push one item
    /// and pull from a bin that lost an item. Both keep the chain ordered.
    #[test]
    fn push_and_pull_keep_small_chains_ordered(
        sizes in prop::collection::vec(size_strategy(40), 4..40),
        extra in 1i64..=40,
        victim in any::<prop::sample::Index>(),
    ) {
        let sizes: Vec<Size> = sizes.into_iter().map(|s| s / Size::from(4)).collect();
        let mut items: Vec<Item> = sizes.into_iter().enumerate().map(|(k, s)| Item::new(k as u64, s)).collect();
        items.sort_by(|a, b| b.size.cmp(&a.size).then(a.id.cmp(&b.id)));
        let mut bins = vec![ChainBin::new(BinId(0))];
        for it in items {
            if bins.last().unwrap().is_covered() {
                bins.push(ChainBin::new(BinId(bins.len() as u64)));
            }
            bins.last_mut().unwrap().add_piece(Piece::whole(it));
        }
        let mut chain = Chain { bins };
        prop_assert!(chain_order_problem(&chain).is_none());

        let mut tracker = Tracker::default();
        tracker.ledger.begin_event(&Size::one()).unwrap();
        let x = Item::new(1000, Size::ratio(extra, 160));
        let start = chain.bins.iter().position(|b| b.contains_smaller_than(&x)).unwrap_or(chain.len() - 1);
        let y = chain_push(&mut chain, start, vec![Piece::whole(x)], &mut tracker, None);
        if !y.is_empty() {
            let mut buffer = ChainBin::new(BinId(999));
            y.into_iter().for_each(|p| buffer.add_piece(p));
            chain.bins.push(buffer);
        }
        prop_assert!(chain_order_problem(&chain).is_none());
        for b in &chain.bins[..chain.len() - 1] {
            prop_assert!(b.is_well_covered());
        }

        let j = victim.index(chain.len());
        if let Some(id) = chain.bins[j].smalls.first().map(|p| p.item.id) {
            chain.bins[j].take_item(id);
            chain_pull(&mut chain, j, &mut tracker, None);
            prop_assert!(chain_order_problem(&chain).is_none());
        }
    }
}
