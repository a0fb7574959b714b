//! Sokoban: board ingestion, push dynamics and the two liveness variants.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::event::{Event, EventSet};
use crate::program::{BProgram, BThreadDef, LocalState, SyncStatement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Up,
    Down,
    Left,
    Right,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Down, Move::Left, Move::Right, Move::Up];

    pub fn name(self) -> &'static str {
        match self {
            Move::Up => "Up",
            Move::Down => "Down",
            Move::Left => "Left",
            Move::Right => "Right",
        }
    }

    pub fn event(self) -> Event {
        Event::new(self.name())
    }

    pub fn from_event(e: &Event) -> Option<Move> {
        Move::ALL.into_iter().find(|m| m.name() == e.name())
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Move::Up => (-1, 0),
            Move::Down => (1, 0),
            Move::Left => (0, -1),
            Move::Right => (0, 1),
        }
    }
}

/// A parsed board. Cells are addressed as `row * width + col`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SokobanBoard {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    targets: Vec<bool>,
    boxes: Vec<usize>,
    player: usize,
}

impl SokobanBoard {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn player(&self) -> usize {
        self.player
    }

    /// Initial box cells in reading order.
    pub fn boxes(&self) -> &[usize] {
        &self.boxes
    }

    pub fn is_wall(&self, cell: usize) -> bool {
        self.walls[cell]
    }

    pub fn is_target(&self, cell: usize) -> bool {
        self.targets[cell]
    }

    pub fn cell(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.width, cell % self.width)
    }

    fn neighbour(&self, cell: usize, m: Move) -> Option<usize> {
        let (r, c) = self.coords(cell);
        let (dr, dc) = m.delta();
        let r = r.checked_add_signed(dr)?;
        let c = c.checked_add_signed(dc)?;
        (r < self.height && c < self.width).then(|| self.cell(r, c))
    }

    fn free(&self, cell: usize) -> bool {
        !self.walls[cell]
    }

    /// Applies `m` to a configuration. Walking into a wall, or pushing a box
    /// into a wall or another box, is illegal. Box order is preserved.
    pub fn apply_move(
        &self,
        player: usize,
        boxes: &[usize],
        m: Move,
    ) -> Option<(usize, Vec<usize>)> {
        let to = self.neighbour(player, m).filter(|&c| self.free(c))?;
        let mut next = boxes.to_vec();
        if let Some(i) = boxes.iter().position(|&b| b == to) {
            let beyond = self.neighbour(to, m).filter(|&c| self.free(c))?;
            if boxes.contains(&beyond) {
                return None;
            }
            next[i] = beyond;
        }
        Some((to, next))
    }

    pub fn all_on_targets(&self, boxes: &[usize]) -> bool {
        boxes.iter().all(|&b| self.targets[b])
    }

    /// Renders a configuration in the board character format.
    pub fn render_config(&self, player: usize, boxes: &[usize]) -> String {
        let mut out = String::new();
        for r in 0..self.height {
            let mut line = String::new();
            for c in 0..self.width {
                let i = self.cell(r, c);
                let ch = if self.walls[i] {
                    '#'
                } else {
                    match (i == player, boxes.contains(&i), self.targets[i]) {
                        (true, _, true) => '+',
                        (true, _, false) => '@',
                        (false, true, true) => '*',
                        (false, true, false) => '$',
                        (false, false, true) => '.',
                        (false, false, false) => ' ',
                    }
                };
                line.push(ch);
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for SokobanBoard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_config(self.player, &self.boxes))
    }
}

/// Parses `#` wall, space floor, `.` target, `$` box, `*` box on target,
/// `@` player, `+` player on target. Short rows are padded with floor.
pub fn parse_board(text: &str) -> Result<SokobanBoard> {
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let first = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .unwrap_or(lines.len());
    let last = lines
        .iter()
        .rposition(|l| !l.trim().is_empty())
        .map_or(first, |i| i + 1);
    let rows = &lines[first..last];
    let width = rows.iter().map(|l| l.chars().count()).max().unwrap_or(0);
    let height = rows.len();
    let mut walls = vec![false; width * height];
    let mut targets = vec![false; width * height];
    let mut boxes = Vec::new();
    let mut player = None;
    for (r, line) in rows.iter().enumerate() {
        for (c, ch) in line.chars().enumerate() {
            let i = r * width + c;
            let mut set_player = || {
                if player.replace(i).is_some() {
                    Err(Error::BoardParse {
                        row: first + r + 1,
                        col: c + 1,
                        msg: "more than one player".into(),
                    })
                } else {
                    Ok(())
                }
            };
            match ch {
                '#' => walls[i] = true,
                ' ' | '-' | '_' => {}
                '.' => targets[i] = true,
                '$' => boxes.push(i),
                '*' => {
                    boxes.push(i);
                    targets[i] = true;
                }
                '@' => set_player()?,
                '+' => {
                    set_player()?;
                    targets[i] = true;
                }
                other => {
                    return Err(Error::BoardParse {
                        row: first + r + 1,
                        col: c + 1,
                        msg: format!("unknown character `{other}`"),
                    })
                }
            }
        }
    }
    let player = player.ok_or_else(|| Error::InvalidBoard("no player".into()))?;
    if boxes.is_empty() {
        return Err(Error::InvalidBoard("no boxes".into()));
    }
    Ok(SokobanBoard {
        width,
        height,
        walls,
        targets,
        boxes,
        player,
    })
}

/// Parse-render identity form of a board text.
pub fn render(board: &SokobanBoard) -> String {
    board.to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LivenessMode {
    /// One thread: all boxes on targets at the same time, infinitely often.
    #[default]
    AllBoxes,
    /// One thread per box: each box on a target infinitely often.
    PerBox,
}

impl FromStr for LivenessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "all_boxes" | "single" => Ok(LivenessMode::AllBoxes),
            "per_box" | "multiple" => Ok(LivenessMode::PerBox),
            _ => Err(Error::InvalidConfig(format!("unknown liveness mode `{s}`"))),
        }
    }
}

impl fmt::Display for LivenessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LivenessMode::AllBoxes => "all_boxes",
            LivenessMode::PerBox => "per_box",
        })
    }
}

fn encode(player: usize, boxes: &[usize]) -> LocalState {
    std::iter::once(player)
        .chain(boxes.iter().copied())
        .map(|v| v as i32)
        .collect()
}

fn decode(s: &LocalState) -> (usize, Vec<usize>) {
    (s[0] as usize, s[1..].iter().map(|&v| v as usize).collect())
}

/// Requests exactly the legal moves. Boxes are kept sorted, since the
/// dynamics do not depend on box identity.
pub fn dynamics(board: Arc<SokobanBoard>) -> BThreadDef {
    let mut init = board.boxes.clone();
    init.sort_unstable();
    let b = board.clone();
    BThreadDef::new(
        "dynamics",
        encode(board.player, &init),
        move |s| {
            let (p, boxes) = decode(s);
            SyncStatement::request(
                Move::ALL
                    .into_iter()
                    .filter(|&m| b.apply_move(p, &boxes, m).is_some())
                    .map(Move::event),
            )
        },
        move |s, e| {
            let (p, boxes) = decode(s);
            match Move::from_event(e).and_then(|m| board.apply_move(p, &boxes, m)) {
                Some((p, mut boxes)) => {
                    boxes.sort_unstable();
                    encode(p, &boxes)
                }
                None => s.clone(),
            }
        },
    )
}

/// Must-finish unless `done(boxes)`; tracks the configuration by replaying
/// every move.
fn box_monitor(
    id: String,
    board: Arc<SokobanBoard>,
    sorted: bool,
    done: impl Fn(&SokobanBoard, &[usize]) -> bool + Send + Sync + 'static,
) -> BThreadDef {
    let mut init = board.boxes.clone();
    if sorted {
        init.sort_unstable();
    }
    let b = board.clone();
    BThreadDef::new(
        id,
        encode(board.player, &init),
        move |s| {
            let (_, boxes) = decode(s);
            SyncStatement::wait_for(EventSet::All).must_finish(!done(&b, &boxes))
        },
        move |s, e| {
            let (p, boxes) = decode(s);
            match Move::from_event(e).and_then(|m| board.apply_move(p, &boxes, m)) {
                Some((p, mut boxes)) => {
                    if sorted {
                        boxes.sort_unstable();
                    }
                    encode(p, &boxes)
                }
                None => s.clone(),
            }
        },
    )
}

pub fn sokoban_program(board: &SokobanBoard, mode: LivenessMode) -> Result<BProgram> {
    let board = Arc::new(board.clone());
    let mut threads = vec![dynamics(board.clone())];
    match mode {
        LivenessMode::AllBoxes => threads.push(box_monitor(
            "all_boxes_on_targets".into(),
            board.clone(),
            true,
            |b, boxes| b.all_on_targets(boxes),
        )),
        LivenessMode::PerBox => {
            for k in 0..board.boxes.len() {
                threads.push(box_monitor(
                    format!("box_on_target({k})"),
                    board.clone(),
                    false,
                    move |b, boxes| b.is_target(boxes[k]),
                ));
            }
        }
    }
    BProgram::new(threads, Move::ALL.map(Move::event))
}

pub fn sokoban_from_board(text: &str, mode: LivenessMode) -> Result<BProgram> {
    sokoban_program(&parse_board(text)?, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::{explore, ExploreLimits};
    use crate::gba::{solve, to_gba};

    const CORRIDOR: &str = "#####\n#@$.#\n#####\n";

    #[test]
    fn corridor_push_reaches_target() {
        let b = parse_board(CORRIDOR).unwrap();
        assert_eq!(b.width(), 5);
        let (p, boxes) = b.apply_move(b.player(), b.boxes(), Move::Right).unwrap();
        assert!(b.all_on_targets(&boxes));
        assert_eq!(b.render_config(p, &boxes), "#####\n# @*#\n#####\n");
        assert!(b.apply_move(p, &boxes, Move::Right).is_none());
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert!(matches!(
            parse_board("#@@#\n"),
            Err(Error::BoardParse { row: 1, col: 3, .. })
        ));
        assert!(matches!(
            parse_board("#@$x#\n"),
            Err(Error::BoardParse { row: 1, col: 4, .. })
        ));
        assert!(matches!(
            parse_board("# $ #\n"),
            Err(Error::InvalidBoard(_))
        ));
        assert!(matches!(
            parse_board("# @ #\n"),
            Err(Error::InvalidBoard(_))
        ));
    }

    #[test]
    fn render_roundtrip() {
        let text = "  ####\n###  #\n#.*$@#\n#    #\n######\n";
        let b = parse_board(text).unwrap();
        assert_eq!(render(&b), text);
        assert_eq!(parse_board(&render(&b)).unwrap(), b);
    }

    #[test]
    fn start_on_targets_is_cold() {
        let p = sokoban_from_board("#####\n#@* #\n#####\n", LivenessMode::AllBoxes).unwrap();
        assert_eq!(p.local_labels(&p.initial()), vec![false, false]);
    }

    #[test]
    fn per_box_has_one_set_per_box() {
        let p = sokoban_from_board("######\n#@$$..#\n#######\n", LivenessMode::PerBox).unwrap();
        let lts = explore(&p, ExploreLimits::default()).unwrap();
        // the dynamics thread contributes a trivially satisfied set
        assert_eq!(to_gba(&lts).set_count(), 3);
        assert_eq!(
            lts.thread_ids()[1..],
            ["box_on_target(0)", "box_on_target(1)"]
        );
    }

    #[test]
    fn corner_trap_is_losing() {
        // pushing the box up traps it in the corner row
        let text = "#####\n#   #\n# $ #\n# @.#\n#####\n";
        let p = sokoban_from_board(text, LivenessMode::AllBoxes).unwrap();
        let lts = explore(&p, ExploreLimits::default()).unwrap();
        let ws = solve(&to_gba(&lts));
        assert!(ws.init_winning());
        let up = lts.successor(0, &Move::Up.event()).unwrap();
        assert!(!ws.is_winning(up));
    }
}
