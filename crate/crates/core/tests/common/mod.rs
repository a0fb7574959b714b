#![allow(dead_code)]

use bp_liveness::experiment::default_corpus_dir;
use bp_liveness::mdp::{
    compatible_events, RunContext, DEFAULT_EPSILON, DEFAULT_GAMMA, DEFAULT_TOL,
};
use bp_liveness::models::level_crossing::{approach_requester, LevelCrossingConfig, FREIGHT};
use bp_liveness::models::sokoban::{sokoban_from_board, LivenessMode};
use bp_liveness::patterns::lasso_is_live;
use bp_liveness::{
    enumerate_lassos, explore, value_iteration, BProgram, Event, ExploreLimits, ExploredLts,
    LabelMode, Lasso, MdpModel, QTable, Trace,
};

pub const GAMMA: f64 = DEFAULT_GAMMA;
pub const EPS: f64 = DEFAULT_EPSILON;

pub fn board(name: &str) -> String {
    std::fs::read_to_string(default_corpus_dir().join(format!("{name}.txt"))).unwrap()
}

pub fn sokoban(name: &str, mode: LivenessMode) -> BProgram {
    sokoban_from_board(&board(name), mode).unwrap()
}

/// A lone three-approach must-finish requester: a four-state chain.
pub fn requester_chain() -> BProgram {
    let cfg = LevelCrossingConfig::scaled(3, 1, 1);
    BProgram::new(vec![approach_requester(FREIGHT, 3, true)], cfg.alphabet()).unwrap()
}

pub fn lts(p: &BProgram) -> ExploredLts {
    explore(p, ExploreLimits::default()).unwrap()
}

pub fn exact_q(lts: &ExploredLts, mode: LabelMode) -> QTable {
    value_iteration(&MdpModel::new(lts, mode), GAMMA, DEFAULT_TOL, EPS)
}

pub fn railway(e: &Event) -> Option<String> {
    (e.name() == "Approaching").then(|| e.attr("railway").unwrap().to_string())
}

/// Freight/maintenance approach letters of a trace, e.g. `"FMFMF"`.
pub fn approach_word(events: &[Event]) -> String {
    events
        .iter()
        .filter_map(railway)
        .filter_map(|r| match r.as_str() {
            "Freight" => Some('F'),
            r if r.starts_with("Maintenance") => Some('M'),
            _ => None,
        })
        .collect()
}

/// At least `n` of each and a maintenance approach between every two
/// consecutive freights.
pub fn freight_gap_respected(word: &str, n: usize) -> bool {
    let f = word.matches('F').count();
    let m = word.matches('M').count();
    f >= n && m >= n && !word.contains("FF")
}

fn combined(labels: &[bool]) -> bool {
    labels.iter().any(|&b| b)
}

fn reward(prev: bool, next: bool) -> f64 {
    match (prev, next) {
        (false, true) => -1.0,
        (true, false) => 1.0,
        _ => 0.0,
    }
}

/// Combined labels at lasso positions `0..=horizon`.
pub fn lasso_labels(lts: &ExploredLts, lasso: &Lasso, horizon: usize) -> Vec<bool> {
    (0..=horizon)
        .map(|p| lts.is_hot(lasso.state_at(p)))
        .collect()
}

/// Rewards `r_0..` with `r_0` from the virtual non-must-finish predecessor.
pub fn rewards_of(labels: &[bool]) -> Vec<f64> {
    let mut prev = false;
    labels
        .iter()
        .map(|&l| {
            let r = reward(prev, l);
            prev = l;
            r
        })
        .collect()
}

/// Every prefix sum is `0` at cold and `-1` at hot positions.
pub fn prefix_sums_track_labels(labels: &[bool]) -> Result<(), String> {
    let mut sum = 0.0;
    for (t, (r, &l)) in rewards_of(labels).iter().zip(labels).enumerate() {
        sum += r;
        let want = if l { -1.0 } else { 0.0 };
        if sum != want {
            return Err(format!("prefix sum {sum} at {t}, label {l}"));
        }
    }
    Ok(())
}

/// The nonzero rewards alternate starting with `-1`.
pub fn rewards_alternate(labels: &[bool]) -> Result<(), String> {
    let mut want = -1.0;
    for r in rewards_of(labels).into_iter().filter(|&r| r != 0.0) {
        if r != want {
            return Err(format!("expected {want}, got {r}"));
        }
        want = -want;
    }
    Ok(())
}

pub fn trace_prefix_sums_track_labels(trace: &Trace) -> Result<(), String> {
    let labels: Vec<bool> = trace.labels.iter().map(|l| combined(l)).collect();
    prefix_sums_track_labels(&labels)?;
    for (t, (&c, &l)) in trace.cumulative_reward.iter().zip(&labels).enumerate() {
        if c != if l { -1.0 } else { 0.0 } {
            return Err(format!("trace reward {c} at {t}"));
        }
    }
    Ok(())
}

/// Discounted sum of rewards from lasso position `p` on, in closed form: the
/// positions before the periodic part are summed directly, the periodic tail
/// as a geometric series.
pub fn residual(lts: &ExploredLts, lasso: &Lasso, p: usize, gamma: f64) -> f64 {
    let s = lasso.stem.len();
    let c = lasso.cycle.len();
    let hot = |q: usize| lts.is_hot(lasso.state_at(q));
    let r = |q: usize| reward(hot(q), hot(q + 1));
    // positions >= start repeat with period c
    let start = p.max(s);
    let mut head = 0.0;
    for q in p..start {
        head += gamma.powi((q - p) as i32) * r(q);
    }
    let mut period = 0.0;
    for k in 0..c {
        period += gamma.powi(k as i32) * r(start + k);
    }
    head + gamma.powi((start - p) as i32) * period / (1.0 - gamma.powi(c as i32))
}

/// Combined label is 0 somewhere on the cycle.
pub fn combined_live(lts: &ExploredLts, lasso: &Lasso) -> bool {
    lasso.cycle_states.iter().any(|&s| !lts.is_hot(s))
}

/// Residual bounds on a combined-live lasso: above `-1` from cold positions,
/// above `0` from hot ones, at positions `0..stem+cycle`.
pub fn residual_bounds(lts: &ExploredLts, lasso: &Lasso, gamma: f64) -> Result<(), String> {
    for p in 0..lasso.stem.len() + lasso.cycle.len() {
        let res = residual(lts, lasso, p, gamma);
        let hot = lts.is_hot(lasso.state_at(p));
        let ok = if hot { res > 0.0 } else { res > -1.0 };
        if !ok {
            return Err(format!("residual {res} at {p} (hot {hot})"));
        }
    }
    Ok(())
}

/// Every step of the lasso passes the compatibility test, checked over the
/// first two unrollings: once past the stem the cumulative reward is periodic.
pub fn compatible_along(lts: &ExploredLts, lasso: &Lasso, q: &QTable) -> Result<(), String> {
    let horizon = lasso.stem.len() + 2 * lasso.cycle.len();
    let labels: Vec<Vec<bool>> = (0..=horizon)
        .map(|p| lts.labels(lasso.state_at(p)).to_vec())
        .collect();
    let mut ctx = RunContext::start(&labels[0], q.label_mode());
    for p in 0..horizon {
        let s = lts.state(lasso.state_at(p));
        let e = lts.event(lasso.event_at(p));
        let enabled: Vec<Event> = lts
            .edges(lasso.state_at(p))
            .iter()
            .map(|x| lts.event(x.event).clone())
            .collect();
        let k = enabled.iter().position(|x| x == e).unwrap();
        if !compatible_events(q, &ctx, &ctx.key(s), &enabled).contains(&k) {
            return Err(format!("{} not compatible at {p}", e));
        }
        ctx.advance(&labels[p + 1]);
    }
    Ok(())
}

/// Runs every reward-shaping check on all lassos within bounds; returns the number
/// of lassos checked and the violations.
pub fn shaping_suite(program: &BProgram, stem: usize, cycle: usize) -> (usize, Vec<String>) {
    let lts = lts(program);
    let q = exact_q(&lts, LabelMode::Single);
    let mut violations = Vec::new();
    let mut count = 0;
    for lasso in enumerate_lassos(&lts, stem, cycle) {
        count += 1;
        let labels = lasso_labels(&lts, &lasso, lasso.stem.len() + 2 * lasso.cycle.len());
        let mut checks = vec![
            prefix_sums_track_labels(&labels),
            rewards_alternate(&labels),
        ];
        // the single-label checks below take "live" as combined-live
        if lasso_is_live(&lts, &lasso) != combined_live(&lts, &lasso) {
            checks.push(Err("per-thread and combined liveness differ".into()));
        }
        if combined_live(&lts, &lasso) {
            checks.push(residual_bounds(&lts, &lasso, GAMMA));
            checks.push(compatible_along(&lts, &lasso, &q));
        }
        for c in checks {
            if let Err(e) = c {
                violations.push(format!("{}: {e}", lts.render_lasso(&lasso)));
            }
        }
    }
    (count, violations)
}

/// Character-grid Sokoban, independent of the library's board type. Boxes
/// are kept in identity order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    pub walls: Vec<Vec<bool>>,
    pub player: (usize, usize),
    pub boxes: Vec<(usize, usize)>,
}

impl Grid {
    pub fn parse(text: &str) -> Grid {
        let mut walls = Vec::new();
        let mut player = (0, 0);
        let mut boxes = Vec::new();
        for (r, line) in text.lines().enumerate() {
            let mut row = Vec::new();
            for (c, ch) in line.chars().enumerate() {
                row.push(ch == '#');
                match ch {
                    '@' | '+' => player = (r, c),
                    '$' | '*' => boxes.push((r, c)),
                    _ => {}
                }
            }
            walls.push(row);
        }
        Grid {
            walls,
            player,
            boxes,
        }
    }

    pub fn width(&self) -> usize {
        self.walls.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn free(&self, (r, c): (usize, usize)) -> bool {
        !self
            .walls
            .get(r)
            .and_then(|row| row.get(c))
            .copied()
            .unwrap_or(true)
    }

    /// `dir` is one of "Up", "Down", "Left", "Right".
    pub fn step(&self, dir: &str) -> Option<Grid> {
        let (dr, dc): (isize, isize) = match dir {
            "Up" => (-1, 0),
            "Down" => (1, 0),
            "Left" => (0, -1),
            "Right" => (0, 1),
            _ => panic!("bad move {dir}"),
        };
        let shift =
            |(r, c): (usize, usize)| ((r as isize + dr) as usize, (c as isize + dc) as usize);
        let next = shift(self.player);
        if !self.free(next) {
            return None;
        }
        let mut g = self.clone();
        if let Some(k) = self.boxes.iter().position(|&b| b == next) {
            let beyond = shift(next);
            if !self.free(beyond) || self.boxes.contains(&beyond) {
                return None;
            }
            g.boxes[k] = beyond;
        }
        g.player = next;
        Some(g)
    }

    /// `(player, sorted boxes)` as reading-order cell indices.
    pub fn cells(&self) -> (usize, Vec<usize>) {
        let w = self.width();
        let mut boxes: Vec<usize> = self.boxes.iter().map(|&(r, c)| r * w + c).collect();
        boxes.sort_unstable();
        (self.player.0 * w + self.player.1, boxes)
    }
}

pub const MOVES: [&str; 4] = ["Up", "Down", "Left", "Right"];
