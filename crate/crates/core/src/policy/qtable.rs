use std::fmt::Write as _;

use super::{Action, MdpState, PolicyError};

const HEADER: &str = "# goee q-table v1";

/// Action values over `(K+1) x |M|` states. Unavailable actions hold
/// `-inf` and are never chosen greedily.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_exits: usize,
    num_mcs: usize,
    values: Vec<[f64; 3]>,
    visits: Vec<[u64; 3]>,
}

impl QTable {
    /// Zero-initialized table for exits `0..num_exits` (so `K = num_exits - 1`).
    pub fn new(num_exits: usize, num_mcs: usize) -> Self {
        let mut t = Self {
            num_exits,
            num_mcs,
            values: vec![[0.0; 3]; num_exits * num_mcs],
            visits: vec![[0; 3]; num_exits * num_mcs],
        };
        for mcs in 0..num_mcs {
            let s = MdpState { exit_index: num_exits - 1, mcs_index: mcs };
            let i = t.slot(s);
            t.values[i][Action::Offload.index()] = f64::NEG_INFINITY;
        }
        t
    }

    pub fn num_exits(&self) -> usize {
        self.num_exits
    }

    pub fn num_mcs(&self) -> usize {
        self.num_mcs
    }

    pub fn num_states(&self) -> usize {
        self.num_exits * self.num_mcs
    }

    pub fn last_exit(&self) -> usize {
        self.num_exits - 1
    }

    fn slot(&self, s: MdpState) -> usize {
        s.exit_index * self.num_mcs + s.mcs_index
    }

    pub fn contains(&self, s: MdpState) -> bool {
        s.exit_index < self.num_exits && s.mcs_index < self.num_mcs
    }

    pub(crate) fn check(&self, s: MdpState) -> Result<(), PolicyError> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(PolicyError::InvalidState(s))
        }
    }

    pub fn is_available(&self, s: MdpState, a: Action) -> bool {
        !(a == Action::Offload && s.exit_index == self.last_exit())
    }

    pub fn available(&self, s: MdpState) -> impl Iterator<Item = Action> + '_ {
        Action::ALL.into_iter().filter(move |&a| self.is_available(s, a))
    }

    pub fn get(&self, s: MdpState, a: Action) -> f64 {
        self.values[self.slot(s)][a.index()]
    }

    pub fn set(&mut self, s: MdpState, a: Action, v: f64) {
        let i = self.slot(s);
        self.values[i][a.index()] = v;
    }

    pub fn visits(&self, s: MdpState, a: Action) -> u64 {
        self.visits[self.slot(s)][a.index()]
    }

    pub(crate) fn bump_visits(&mut self, s: MdpState, a: Action) -> u64 {
        let i = self.slot(s);
        self.visits[i][a.index()] += 1;
        self.visits[i][a.index()]
    }

    /// Best available action; ties go to the lowest action index.
    pub fn greedy(&self, s: MdpState) -> Action {
        let row = &self.values[self.slot(s)];
        let mut best = Action::Exit;
        for a in self.available(s) {
            if row[a.index()] > row[best.index()] {
                best = a;
            }
        }
        best
    }

    pub fn max_value(&self, s: MdpState) -> f64 {
        self.available(s)
            .map(|a| self.get(s, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn states(&self) -> impl Iterator<Item = MdpState> + '_ {
        (0..self.num_exits).flat_map(move |k| {
            (0..self.num_mcs).map(move |m| MdpState { exit_index: k, mcs_index: m })
        })
    }

    /// Values of all available actions.
    pub fn finite_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.states()
            .flat_map(move |s| self.available(s).map(move |a| self.get(s, a)))
    }

    /// Text form: a header, the table shape, then one `k,mcs,action,value`
    /// row per entry in state-major order. Values use the shortest
    /// round-tripping decimal form; masked entries are written as `-inf`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\nexits={} mcs={}\nk,mcs,action,value\n", self.num_exits, self.num_mcs);
        for s in self.states() {
            for a in Action::ALL {
                let v = self.get(s, a);
                let _ = writeln!(out, "{},{},{},{}", s.exit_index, s.mcs_index, a.index(), v);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, PolicyError> {
        let err = |line: usize, msg: &str| PolicyError::Parse { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l.trim() == HEADER => {}
            _ => return Err(err(1, "missing header")),
        }
        let (ln, shape) = lines.next().ok_or_else(|| err(2, "missing shape"))?;
        let mut exits = None;
        let mut mcs = None;
        for tok in shape.split_whitespace() {
            match tok.split_once('=') {
                Some(("exits", v)) => exits = v.parse::<usize>().ok(),
                Some(("mcs", v)) => mcs = v.parse::<usize>().ok(),
                _ => return Err(err(ln, "bad shape token")),
            }
        }
        let (Some(exits), Some(mcs)) = (exits, mcs) else {
            return Err(err(ln, "shape needs exits= and mcs="));
        };
        if exits == 0 || mcs == 0 {
            return Err(err(ln, "empty table"));
        }
        match lines.next() {
            Some((_, "k,mcs,action,value")) => {}
            Some((ln, _)) => return Err(err(ln, "bad column header")),
            None => return Err(err(ln + 1, "missing column header")),
        }
        let mut table = QTable::new(exits, mcs);
        let mut seen = 0usize;
        for (ln, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(err(ln, "expected 4 fields"));
            }
            let parse = |s: &str| s.parse::<usize>().map_err(|_| err(ln, "bad integer"));
            let s = MdpState { exit_index: parse(f[0])?, mcs_index: parse(f[1])? };
            let a = Action::from_index(parse(f[2])?).ok_or_else(|| err(ln, "bad action"))?;
            let v: f64 = f[3].parse().map_err(|_| err(ln, "bad value"))?;
            if !table.contains(s) {
                return Err(err(ln, "state outside table"));
            }
            table.set(s, a, v);
            seen += 1;
        }
        if seen != exits * mcs * 3 {
            return Err(err(0, &format!("expected {} rows, found {seen}", exits * mcs * 3)));
        }
        Ok(table)
    }
}
