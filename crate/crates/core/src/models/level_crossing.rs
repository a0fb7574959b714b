//! The railway level crossing: sensor ordering, barriers, train schedules and
//! the maintenance-between-freights constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Event, EventSet};
use crate::program::{local, BProgram, BThreadDef, SyncStatement};

pub const FREIGHT: &str = "Freight";
pub const PASSENGER: &str = "Passenger";
pub const MAINTENANCE: &str = "Maintenance";

pub fn approaching(railway: &str) -> Event {
    Event::with_attrs("Approaching", [("railway", railway)])
}

pub fn entering(railway: &str) -> Event {
    Event::with_attrs("Entering", [("railway", railway)])
}

pub fn leaving(railway: &str) -> Event {
    Event::with_attrs("Leaving", [("railway", railway)])
}

pub fn lower() -> Event {
    Event::new("Lower")
}

pub fn raise() -> Event {
    Event::new("Raise")
}

/// Which requirement threads to emit and how to parameterize them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelCrossingConfig {
    /// Freight approaches the freight requester asks for.
    pub freight_count: u32,
    /// Approaches asked for on each maintenance line.
    pub maintenance_count: u32,
    /// Number of maintenance railways (`m`).
    pub maintenance_lines: u32,
    /// A maintenance approach is required within every `k` consecutive
    /// freight approaches; `k = 2` means between any two, `k = 1` is no
    /// constraint.
    pub freight_gap: u32,
    /// Requesters are must-finish while they still have approaches to make.
    pub must_finish: bool,
    pub include_passenger: bool,
    /// Sensor ordering and zone threads, one pair per railway.
    pub include_sensors: bool,
    /// Barrier lowering/raising and the no-entry-while-up threads.
    pub include_barriers: bool,
    /// The maintenance-between-freights constraint.
    pub include_freight_gap: bool,
}

impl Default for LevelCrossingConfig {
    fn default() -> Self {
        Self::motivating()
    }
}

impl LevelCrossingConfig {
    /// Three railways, full sensors and barriers, three must-finish
    /// approaches each for freight and maintenance, and a maintenance
    /// approach between any two freights.
    pub fn motivating() -> Self {
        LevelCrossingConfig {
            freight_count: 3,
            maintenance_count: 3,
            maintenance_lines: 1,
            freight_gap: 2,
            must_finish: true,
            include_passenger: true,
            include_sensors: true,
            include_barriers: true,
            include_freight_gap: true,
        }
    }

    /// Only the two requesters and the gap constraint, scaled by
    /// `(n, m, k)`.
    pub fn scaled(n: u32, m: u32, k: u32) -> Self {
        LevelCrossingConfig {
            freight_count: n,
            maintenance_count: n,
            maintenance_lines: m,
            freight_gap: k,
            must_finish: true,
            include_passenger: false,
            include_sensors: false,
            include_barriers: false,
            include_freight_gap: true,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.maintenance_lines < 1 {
            return Err(Error::InvalidConfig(
                "maintenance_lines must be at least 1".into(),
            ));
        }
        if self.freight_gap < 1 {
            return Err(Error::InvalidConfig(
                "freight_gap must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn maintenance_railways(&self) -> Vec<String> {
        if self.maintenance_lines == 1 {
            vec![MAINTENANCE.to_string()]
        } else {
            (1..=self.maintenance_lines)
                .map(|i| format!("{MAINTENANCE}_{i}"))
                .collect()
        }
    }

    pub fn railways(&self) -> Vec<String> {
        let mut r = vec![FREIGHT.to_string()];
        r.extend(self.maintenance_railways());
        if self.include_passenger {
            r.push(PASSENGER.to_string());
        }
        r
    }

    pub fn alphabet(&self) -> Vec<Event> {
        let mut out = vec![lower(), raise()];
        for r in self.railways() {
            out.extend([approaching(&r), entering(&r), leaving(&r)]);
        }
        out
    }
}

/// Sensor order per railway: approach, enter, leave, with no overlapping
/// passages.
pub fn sensor_order(railway: &str) -> BThreadDef {
    let (a, e, l) = (approaching(railway), entering(railway), leaving(railway));
    BThreadDef::new(
        format!("sensor_order({railway})"),
        local(&[0]),
        move |s| match s[0] {
            0 => SyncStatement::wait_for(a.clone()),
            1 => SyncStatement::request([e.clone()]).and_block(a.clone()),
            _ => SyncStatement::request([l.clone()]).and_block(a.clone()),
        },
        |s, _| local(&[(s[0] + 1) % 3]),
    )
}

/// Barriers are lowered after an approach, then raised.
pub fn barrier_cycle() -> BThreadDef {
    BThreadDef::new(
        "barrier_cycle",
        local(&[0]),
        |s| match s[0] {
            0 => SyncStatement::wait_for(EventSet::named("Approaching")),
            1 => SyncStatement::request([lower()]),
            _ => SyncStatement::request([raise()]),
        },
        |s, _| local(&[(s[0] + 1) % 3]),
    )
}

/// No train enters while the barriers are up.
pub fn no_entry_while_up() -> BThreadDef {
    BThreadDef::new(
        "no_entry_while_up",
        local(&[0]),
        |s| match s[0] {
            0 => SyncStatement::wait_for(lower()).and_block(EventSet::named("Entering")),
            _ => SyncStatement::wait_for(raise()),
        },
        |s, _| local(&[1 - s[0]]),
    )
}

/// No raising while a train of `railway` is in the zone.
pub fn no_raise_in_zone(railway: &str) -> BThreadDef {
    let (a, l) = (approaching(railway), leaving(railway));
    BThreadDef::new(
        format!("no_raise_in_zone({railway})"),
        local(&[0]),
        move |s| match s[0] {
            0 => SyncStatement::wait_for(a.clone()),
            _ => SyncStatement::wait_for(l.clone()).and_block(raise()),
        },
        |s, _| local(&[1 - s[0]]),
    )
}

/// Passenger trains may approach at any time.
pub fn passenger_looper() -> BThreadDef {
    let a = approaching(PASSENGER);
    BThreadDef::new(
        "passenger",
        local(&[0]),
        move |_| SyncStatement::request([a.clone()]),
        |s, _| s.clone(),
    )
}

/// Requests `count` approaches of `railway`, must-finish until done when
/// `must_finish` is set.
pub fn approach_requester(railway: &str, count: u32, must_finish: bool) -> BThreadDef {
    let a = approaching(railway);
    let n = count as i32;
    BThreadDef::new(
        format!("requester({railway})"),
        local(&[0]),
        move |s| {
            if s[0] < n {
                SyncStatement::request([a.clone()]).must_finish(must_finish)
            } else {
                SyncStatement::idle()
            }
        },
        |s, _| local(&[s[0] + 1]),
    )
}

/// Counts freight approaches since the last maintenance approach (on any
/// line) and blocks freight once `k − 1` are pending.
pub fn freight_gap(k: u32, maintenance: &[String]) -> BThreadDef {
    let f = approaching(FREIGHT);
    let m: Vec<Event> = maintenance.iter().map(|r| approaching(r)).collect();
    let limit = k as i32 - 1;
    let watch = EventSet::of(std::iter::once(f.clone()).chain(m.iter().cloned()));
    BThreadDef::new(
        "freight_gap",
        local(&[0]),
        move |s| {
            if limit < 1 {
                SyncStatement::idle()
            } else if s[0] == limit {
                SyncStatement::wait_for(EventSet::of(m.iter().cloned())).and_block(f.clone())
            } else {
                SyncStatement::wait_for(watch.clone())
            }
        },
        |s, e| {
            if e.attr("railway").is_some_and(|r| r.to_string() == FREIGHT) {
                local(&[s[0] + 1])
            } else {
                local(&[0])
            }
        },
    )
}

/// Over-specifying fix: within the first six passenger approaches, a
/// non-passenger train must approach between any two passenger approaches.
pub fn avoid_freight_starvation() -> BThreadDef {
    let p = approaching(PASSENGER);
    BThreadDef::new(
        "avoid_freight_starvation",
        local(&[0]),
        move |s| match s[0] {
            i if i >= 12 => SyncStatement::idle(),
            i if i % 2 == 0 => SyncStatement::wait_for(p.clone()),
            _ => SyncStatement::wait_for(EventSet::named("Approaching")).and_block(p.clone()),
        },
        |s, _| local(&[s[0] + 1]),
    )
}

/// Over-specifying fix: in each of the first three rounds every railway
/// approaches once. Local state: `[round, phase, first, second]` with
/// railways as 1-based indices into `railways`.
pub fn fix_scheduling_issues(railways: &[String]) -> BThreadDef {
    let names = railways.to_vec();
    let lookup = names.clone();
    BThreadDef::new(
        "fix_scheduling_issues",
        local(&[0, 0, 0, 0]),
        move |s| {
            if s[0] >= 3 {
                return SyncStatement::idle();
            }
            let blocked: Vec<Event> = s[2..2 + s[1] as usize]
                .iter()
                .map(|&i| approaching(&names[i as usize - 1]))
                .collect();
            SyncStatement::wait_for(EventSet::named("Approaching")).and_block(EventSet::of(blocked))
        },
        move |s, e| {
            let r = e
                .attr("railway")
                .and_then(|r| lookup.iter().position(|x| *x == r.to_string()))
                .map_or(0, |i| i as i32 + 1);
            match s[1] {
                0 => local(&[s[0], 1, r, 0]),
                1 => local(&[s[0], 2, s[2], r]),
                _ => local(&[s[0] + 1, 0, 0, 0]),
            }
        },
    )
}

pub fn level_crossing_threads(config: &LevelCrossingConfig) -> Result<Vec<BThreadDef>> {
    config.validate()?;
    let mut threads = Vec::new();
    let railways = config.railways();
    if config.include_sensors {
        threads.extend(railways.iter().map(|r| sensor_order(r)));
    }
    if config.include_barriers {
        threads.push(barrier_cycle());
        threads.push(no_entry_while_up());
    }
    if config.include_sensors {
        threads.extend(railways.iter().map(|r| no_raise_in_zone(r)));
    }
    if config.include_passenger {
        threads.push(passenger_looper());
    }
    threads.push(approach_requester(
        FREIGHT,
        config.freight_count,
        config.must_finish,
    ));
    for m in config.maintenance_railways() {
        threads.push(approach_requester(
            &m,
            config.maintenance_count,
            config.must_finish,
        ));
    }
    if config.include_freight_gap {
        threads.push(freight_gap(
            config.freight_gap,
            &config.maintenance_railways(),
        ));
    }
    Ok(threads)
}

pub fn level_crossing(config: &LevelCrossingConfig) -> Result<BProgram> {
    BProgram::new(level_crossing_threads(config)?, config.alphabet())
}

/// The level crossing plus both over-specifying fix threads.
pub fn level_crossing_with_fixes(config: &LevelCrossingConfig) -> Result<BProgram> {
    let mut threads = level_crossing_threads(config)?;
    threads.push(avoid_freight_starvation());
    threads.push(fix_scheduling_issues(&config.railways()));
    BProgram::new(threads, config.alphabet())
}
