//! Stream replay with optional invariant checking and exact optima, and the
//! CSV report format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Pow, Signed, ToPrimitive};

use crate::amortized::AmortizedState;
use crate::dynamic_algo::DynamicState;
use crate::error::{Error, Result};
use crate::item::{Item, ItemId};
use crate::ledger::{EventMigration, MigrationLedger};
use crate::oracle::{opt_exact, OracleLimits};
use crate::size::Size;
use crate::static_algo::StaticState;
use crate::stream::{Event, EventStream};
use crate::violation::Violation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algo {
    Static,
    Dynamic,
    Amortized,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Static => "static",
            Algo::Dynamic => "dynamic",
            Algo::Amortized => "amortized",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(Algo::Static),
            "dynamic" => Ok(Algo::Dynamic),
            "amortized" => Ok(Algo::Amortized),
            other => Err(Error::Generator(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// The competitive guarantee checked on every row that has an exact optimum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RatioBound {
    /// opt ≤ (3/2 + ε)·alg + 3.
    Static { eps: Size },
    /// opt ≤ (3/2 + ε)·alg + log₂(1/ε) + 5.
    Dynamic { eps: Size },
    /// opt ≤ (1 + 3ε)·alg + 6μ/ε³.
    Amortized { eps: Size, mu: Size },
}

impl RatioBound {
    pub fn holds(&self, opt: usize, alg: usize) -> bool {
        let opt = Size::from(opt as i64);
        let alg = Size::from(alg as i64);
        match self {
            RatioBound::Static { eps } => opt <= (Size::ratio(3, 2) + eps) * alg + Size::from(3),
            RatioBound::Dynamic { eps } => {
                let excess = opt - (Size::ratio(3, 2) + eps) * alg - Size::from(5);
                at_most_log2(&excess, &eps.recip())
            }
            RatioBound::Amortized { eps, mu } => {
                let cube = eps * eps * eps;
                opt <= (Size::one() + Size::from(3) * eps) * alg + Size::from(6) * mu / cube
            }
        }
    }
}

/// Exact test of `value ≤ log₂(base)` for rationals, with base ≥ 1.
pub fn at_most_log2(value: &Size, base: &Size) -> bool {
    if !value.is_positive() {
        return *base >= Size::one();
    }
    // p/q ≤ log₂(a/b)  ⇔  2^p · b^q ≤ a^q
    let p = value.numer().to_u32().expect("exponent fits");
    let q = value.denom().to_u32().expect("exponent fits");
    let lhs = Pow::pow(BigInt::from(2), p) * Pow::pow(base.denom().abs(), q);
    lhs <= Pow::pow(base.numer().abs(), q)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayConfig {
    pub algo: Algo,
    pub eps: Size,
    /// Amortized only; defaults to ε³.
    pub mu: Option<Size>,
    pub check_invariants: bool,
    /// Exact optimum is computed while at most this many items are live.
    pub oracle_limit: Option<usize>,
}

impl ReplayConfig {
    pub fn new(algo: Algo, eps: Size) -> Self {
        ReplayConfig { algo, eps, mu: None, check_invariants: false, oracle_limit: None }
    }

    pub fn checked(mut self) -> Self {
        self.check_invariants = true;
        self
    }

    pub fn with_oracle(mut self, limit: usize) -> Self {
        self.oracle_limit = Some(limit);
        self
    }

    pub fn with_mu(mut self, mu: Size) -> Self {
        self.mu = Some(mu);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Arrive,
    Depart,
}

impl EventKind {
    fn as_str(self) -> &'static str {
        match self {
            EventKind::Arrive => "arrive",
            EventKind::Depart => "depart",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportRow {
    pub event_index: usize,
    pub event_kind: EventKind,
    pub item_id: ItemId,
    pub item_size: Size,
    pub alg_covered: usize,
    pub opt_exact: Option<usize>,
    /// Vacuously true on rows without an exact optimum.
    pub ratio_bound_ok: bool,
    pub moved_size: Size,
    pub event_factor: Size,
    pub amortized_factor: Size,
}

pub const REPORT_COLUMNS: [&str; 10] = [
    "event_index",
    "event_kind",
    "item_id",
    "item_size",
    "alg_covered",
    "opt_exact",
    "ratio_bound_ok",
    "moved_size",
    "event_factor",
    "amortized_factor",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn all_ratios_ok(&self) -> bool {
        self.rows.iter().all(|r| r.ratio_bound_ok)
    }

    pub fn max_event_factor(&self) -> Size {
        self.rows.iter().map(|r| r.event_factor.clone()).max().unwrap_or_else(Size::zero)
    }
}

/// One of the three algorithms behind a common event interface.
#[derive(Clone, Debug)]
pub enum Runner {
    Static(StaticState),
    Dynamic(DynamicState),
    Amortized(AmortizedState),
}

impl Runner {
    pub fn new(config: &ReplayConfig) -> Result<Self> {
        Ok(match config.algo {
            Algo::Static => Runner::Static(StaticState::new(config.eps.clone())?),
            Algo::Dynamic => Runner::Dynamic(DynamicState::new(config.eps.clone())?),
            Algo::Amortized => {
                let limits = OracleLimits { max_items_exact: config.oracle_limit.unwrap_or(16) };
                Runner::Amortized(AmortizedState::new(config.eps.clone(), config.mu.clone(), limits)?)
            }
        })
    }

    pub fn apply(&mut self, event: &Event) -> Result<EventMigration> {
        match (self, event) {
            (Runner::Static(s), Event::Arrive(it)) => s.arrive(it.clone()),
            (Runner::Dynamic(s), Event::Arrive(it)) => s.arrive(it.clone()),
            (Runner::Amortized(s), Event::Arrive(it)) => s.arrive(it.clone()),
            (Runner::Dynamic(s), Event::Depart(id)) => s.depart(*id),
            (Runner::Static(_), Event::Depart(_)) => Err(Error::DeparturesUnsupported("static")),
            (Runner::Amortized(_), Event::Depart(_)) => Err(Error::DeparturesUnsupported("amortized")),
        }
    }

    pub fn objective(&self) -> usize {
        match self {
            Runner::Static(s) => s.objective(),
            Runner::Dynamic(s) => s.objective(),
            Runner::Amortized(s) => s.objective(),
        }
    }

    pub fn ledger(&self) -> &MigrationLedger {
        match self {
            Runner::Static(s) => s.ledger(),
            Runner::Dynamic(s) => s.ledger(),
            Runner::Amortized(s) => s.ledger(),
        }
    }

    pub fn check_invariants(&self) -> Vec<Violation> {
        match self {
            Runner::Static(s) => s.check_invariants(),
            Runner::Dynamic(s) => s.check_invariants(),
            Runner::Amortized(s) => s.check_invariants(),
        }
    }

    fn bound(&self) -> RatioBound {
        match self {
            Runner::Static(s) => RatioBound::Static { eps: s.eps().clone() },
            Runner::Dynamic(s) => RatioBound::Dynamic { eps: s.eps().clone() },
            Runner::Amortized(s) => RatioBound::Amortized { eps: s.eps().clone(), mu: s.mu().clone() },
        }
    }
}

fn invariant_check(runner: &Runner, event: usize) -> Result<()> {
    let vs = runner.check_invariants();
    if vs.is_empty() {
        return Ok(());
    }
    let detail = vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
    Err(Error::Invariant { event, detail, dump: format!("{runner:#?}") })
}

pub fn replay(stream: &EventStream, config: &ReplayConfig) -> Result<Report> {
    if config.algo != Algo::Dynamic && stream.has_departures() {
        return Err(Error::DeparturesUnsupported(config.algo.name()));
    }
    stream.validate()?;
    let mut runner = Runner::new(config)?;
    let bound = runner.bound();
    let mut live: Vec<Item> = Vec::new();
    let mut rows = Vec::with_capacity(stream.len());
    for (index, event) in stream.events.iter().enumerate() {
        let (kind, item) = match event {
            Event::Arrive(it) => {
                live.push(it.clone());
                (EventKind::Arrive, it.clone())
            }
            Event::Depart(id) => {
                let pos = live.iter().position(|it| it.id == *id).ok_or(Error::UnknownItem(*id))?;
                (EventKind::Depart, live.remove(pos))
            }
        };
        let migration = runner.apply(event)?;
        if config.check_invariants {
            invariant_check(&runner, index)?;
        }
        let alg = runner.objective();
        let opt = match config.oracle_limit {
            Some(limit) if live.len() <= limit => Some(opt_exact(&live, OracleLimits { max_items_exact: limit })?.0),
            _ => None,
        };
        rows.push(ReportRow {
            event_index: index,
            event_kind: kind,
            item_id: item.id,
            item_size: item.size,
            alg_covered: alg,
            opt_exact: opt,
            ratio_bound_ok: opt.is_none_or(|o| bound.holds(o, alg)),
            moved_size: migration.moved,
            event_factor: migration.factor,
            amortized_factor: runner.ledger().amortized_factor(),
        });
    }
    Ok(Report { rows })
}

pub fn report_to_csv(report: &Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Report(e.to_string());
    w.write_record(REPORT_COLUMNS).map_err(io)?;
    for r in &report.rows {
        w.write_record([
            r.event_index.to_string(),
            r.event_kind.as_str().to_string(),
            r.item_id.to_string(),
            r.item_size.to_string(),
            r.alg_covered.to_string(),
            r.opt_exact.map(|o| o.to_string()).unwrap_or_default(),
            r.ratio_bound_ok.to_string(),
            r.moved_size.to_string(),
            r.event_factor.to_string(),
            r.amortized_factor.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

pub fn emit_report(report: &Report, path: &Path) -> std::io::Result<()> {
    let text = report_to_csv(report).map_err(std::io::Error::other)?;
    std::fs::write(path, text)
}

pub fn parse_report(text: &str) -> Result<Report> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| Error::Report(e.to_string()))?;
    if header.iter().ne(REPORT_COLUMNS) {
        return Err(Error::Report("unexpected header".into()));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Report(e.to_string()))?;
        let field = |k: usize| rec.get(k).ok_or_else(|| Error::Report(format!("missing column {}", REPORT_COLUMNS[k])));
        let num = |k: usize| -> Result<usize> {
            field(k)?.parse().map_err(|_| Error::Report(format!("bad {}", REPORT_COLUMNS[k])))
        };
        let size = |k: usize| -> Result<Size> {
            field(k)?.parse().map_err(|_| Error::Report(format!("bad {}", REPORT_COLUMNS[k])))
        };
        rows.push(ReportRow {
            event_index: num(0)?,
            event_kind: match field(1)? {
                "arrive" => EventKind::Arrive,
                "depart" => EventKind::Depart,
                other => return Err(Error::Report(format!("bad event kind {other:?}"))),
            },
            item_id: ItemId(field(2)?.parse().map_err(|_| Error::Report("bad item_id".into()))?),
            item_size: size(3)?,
            alg_covered: num(4)?,
            opt_exact: match field(5)? {
                "" => None,
                _ => Some(num(5)?),
            },
            ratio_bound_ok: field(6)?.parse().map_err(|_| Error::Report("bad ratio_bound_ok".into()))?,
            moved_size: size(7)?,
            event_factor: size(8)?,
            amortized_factor: size(9)?,
        });
    }
    Ok(Report { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{gen_random, gen_static_lb, RandomSpec, SizeFamily};

    #[test]
    fn empty_stream_gives_empty_report() {
        let r = replay(&EventStream::new(), &ReplayConfig::new(Algo::Static, Size::ratio(1, 4))).unwrap();
        assert!(r.rows.is_empty());
        assert_eq!(report_to_csv(&r).unwrap().lines().count(), 1);
    }

    #[test]
    fn static_replay_of_lower_bound_stream() {
        let s = gen_static_lb(1, &Size::one()).unwrap();
        let cfg = ReplayConfig::new(Algo::Static, Size::ratio(1, 4)).checked().with_oracle(16);
        let r = replay(&s, &cfg).unwrap();
        assert_eq!(r.rows.len(), 12);
        assert!(r.all_ratios_ok());
        assert_eq!(r.rows[5].opt_exact, Some(3));
        assert_eq!(r.rows[11].opt_exact, Some(6));
    }

    #[test]
    fn dynamic_replay_of_bimodal_stream_is_clean() {
        let spec = RandomSpec {
            arrivals: 12,
            family: SizeFamily::Bimodal { small_max: Size::ratio(1, 2) },
            departure_rate: 0.3,
            max_live: None,
            seed: 7,
        };
        let s = gen_random(&spec).unwrap();
        let r = replay(&s, &ReplayConfig::new(Algo::Dynamic, Size::half()).checked().with_oracle(16)).unwrap();
        assert_eq!(r.rows.len(), s.len());
        assert!(r.all_ratios_ok());
    }

    #[test]
    fn departures_are_rejected_by_insertion_only_algorithms() {
        let s = EventStream::parse("+ 1 1/2\n- 1\n").unwrap();
        for algo in [Algo::Static, Algo::Amortized] {
            assert_eq!(
                replay(&s, &ReplayConfig::new(algo, Size::half())).unwrap_err(),
                Error::DeparturesUnsupported(algo.name())
            );
        }
    }

    #[test]
    fn one_event_report_has_two_lines_and_round_trips() {
        let s = EventStream::parse("+ 3 3/4\n").unwrap();
        let r = replay(&s, &ReplayConfig::new(Algo::Dynamic, Size::ratio(1, 4)).with_oracle(8)).unwrap();
        let text = report_to_csv(&r).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), REPORT_COLUMNS.join(","));
        assert_eq!(parse_report(&text).unwrap(), r);
    }

    #[test]
    fn factor_column_is_moved_over_trigger() {
        let spec = RandomSpec {
            arrivals: 40,
            family: SizeFamily::UniformGrid { denominator: 20 },
            departure_rate: 0.0,
            max_live: None,
            seed: 11,
        };
        let s = gen_random(&spec).unwrap();
        let r = replay(&s, &ReplayConfig::new(Algo::Static, Size::ratio(1, 4))).unwrap();
        for row in &r.rows {
            assert_eq!(row.event_factor, &row.moved_size / &row.item_size);
        }
        assert!(r.rows.iter().any(|row| row.moved_size.is_positive()));
    }

    #[test]
    fn replays_are_deterministic() {
        let spec = RandomSpec {
            arrivals: 30,
            family: SizeFamily::UniformGrid { denominator: 12 },
            departure_rate: 0.25,
            max_live: Some(10),
            seed: 5,
        };
        let s = gen_random(&spec).unwrap();
        let cfg = ReplayConfig::new(Algo::Dynamic, Size::ratio(1, 4)).with_oracle(10);
        let a = report_to_csv(&replay(&s, &cfg).unwrap()).unwrap();
        let b = report_to_csv(&replay(&s, &cfg.clone().checked()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn log2_comparison_is_exact() {
        assert!(at_most_log2(&Size::from(2), &Size::from(4)));
        assert!(!at_most_log2(&Size::ratio(21, 10), &Size::from(4)));
        // log₂ 10 ≈ 3.3219
        assert!(at_most_log2(&Size::ratio(33, 10), &Size::from(10)));
        assert!(!at_most_log2(&Size::ratio(333, 100), &Size::from(10)));
        assert!(at_most_log2(&Size::from(-3), &Size::from(2)));
    }

    #[test]
    fn bounds_match_their_formulas() {
        let st = RatioBound::Static { eps: Size::ratio(1, 2) };
        assert!(st.holds(5, 1) && !st.holds(6, 1));
        let dy = RatioBound::Dynamic { eps: Size::ratio(1, 4) };
        // (3/2 + 1/4)·2 + 2 + 5 = 10.5
        assert!(dy.holds(10, 2) && !dy.holds(11, 2));
        let am = RatioBound::Amortized { eps: Size::ratio(1, 2), mu: Size::ratio(1, 8) };
        // (5/2)·1 + 6 = 8.5
        assert!(am.holds(8, 1) && !am.holds(9, 1));
    }

    #[test]
    fn invariant_failures_carry_a_state_dump() {
        let mut st = DynamicState::new(Size::ratio(1, 4)).unwrap();
        let sizes = [(3, 5), (4, 5), (7, 10), (1, 5), (1, 5), (1, 5), (1, 5), (1, 5), (1, 5), (13, 20)];
        for (k, (n, d)) in sizes.into_iter().enumerate() {
            st.arrive(Item::new(k as u64, Size::ratio(n, d))).unwrap();
        }
        let bigs: Vec<ItemId> = st.grouped().bigs().map(|b| b.id).collect();
        assert_eq!(bigs.len(), 2, "{st:#?}");
        assert!(st.swap_bigs_unchecked(bigs[0], bigs[1]));
        let runner = Runner::Dynamic(st);
        match invariant_check(&runner, 9) {
            Err(Error::Invariant { event, detail, dump }) => {
                assert_eq!(event, 9);
                assert!(detail.contains("D-I"), "{detail}");
                assert!(dump.contains("Dynamic"));
            }
            other => panic!("expected a violation, got {other:?}"),
        }
    }
}
