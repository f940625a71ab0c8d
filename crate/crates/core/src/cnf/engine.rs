use super::{Clause, CnfBuilder, Lit, Var};

const UNASSIGNED: i8 = 0;

/// A partial assignment produced by unit propagation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialAssignment {
    values: Vec<i8>,
    trail: Vec<Lit>,
}

impl PartialAssignment {
    /// `Some(true)` if `lit` is true, `Some(false)` if false, `None` if open.
    pub fn value(&self, lit: Lit) -> Option<bool> {
        match self.values.get(lit.var().index()).copied().unwrap_or(UNASSIGNED) {
            UNASSIGNED => None,
            v => Some((v > 0) != lit.is_negated()),
        }
    }

    pub fn is_true(&self, lit: Lit) -> bool {
        self.value(lit) == Some(true)
    }

    pub fn is_false(&self, lit: Lit) -> bool {
        self.value(lit) == Some(false)
    }

    /// Literals made true, in assignment order.
    pub fn trail(&self) -> &[Lit] {
        &self.trail
    }
}

/// A failed propagation: a clause whose literals are all false under the
/// trail. An assumption clashing with the trail appears as a unit clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub clause: Clause,
    pub trail: Vec<Lit>,
}

/// Result of a complete search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    /// A total assignment, indexed by [`Var::index`].
    Sat(Vec<bool>),
    Unsat,
}

/// Watched-literal propagation engine with a chronological DPLL search on
/// top. Clauses are copied in at construction time.
#[derive(Clone, Debug)]
pub struct Engine {
    clauses: Vec<Clause>,
    units: Vec<Lit>,
    has_empty: bool,
    watches: Vec<Vec<u32>>,
    values: Vec<i8>,
    trail: Vec<Lit>,
    qhead: usize,
    conflict: Clause,
}

impl Engine {
    pub fn new(db: &CnfBuilder) -> Self {
        Self::from_clauses(db.num_vars(), db.clauses())
    }

    pub fn from_clauses(num_vars: usize, input: &[Clause]) -> Self {
        let mut e = Engine {
            clauses: Vec::new(),
            units: Vec::new(),
            has_empty: false,
            watches: vec![Vec::new(); 2 * num_vars],
            values: vec![UNASSIGNED; num_vars],
            trail: Vec::new(),
            qhead: 0,
            conflict: Vec::new(),
        };
        for c in input {
            e.add_clause(c);
        }
        e
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    /// Adds a clause; the engine is reset by the next query anyway.
    pub fn add_clause(&mut self, c: &[Lit]) {
        let max = c.iter().map(|l| l.var().id() as usize).max().unwrap_or(0);
        if max > self.values.len() {
            self.values.resize(max, UNASSIGNED);
            self.watches.resize(2 * max, Vec::new());
        }
        match c.len() {
            0 => self.has_empty = true,
            1 => self.units.push(c[0]),
            _ => {
                let idx = self.clauses.len() as u32;
                self.watches[c[0].code()].push(idx);
                self.watches[c[1].code()].push(idx);
                self.clauses.push(c.to_vec());
            }
        }
    }

    fn lit_value(&self, l: Lit) -> i8 {
        let v = self.values[l.var().index()];
        if l.is_negated() {
            -v
        } else {
            v
        }
    }

    fn assign(&mut self, l: Lit) {
        self.values[l.var().index()] = if l.is_negated() { -1 } else { 1 };
        self.trail.push(l);
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let l = self.trail.pop().unwrap();
            self.values[l.var().index()] = UNASSIGNED;
        }
        self.qhead = self.qhead.min(len);
    }

    /// Assigns `l` unless already set; returns `false` on a clash.
    fn enqueue(&mut self, l: Lit) -> bool {
        match self.lit_value(l) {
            1 => true,
            -1 => false,
            _ => {
                self.assign(l);
                true
            }
        }
    }

    /// Propagates the pending queue; returns `false` on conflict.
    fn propagate_queue(&mut self) -> bool {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            let mut ok = true;
            while i < ws.len() {
                let ci = ws[i] as usize;
                i += 1;
                let clause = &mut self.clauses[ci];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                let fv = {
                    let v = self.values[first.var().index()];
                    if first.is_negated() {
                        -v
                    } else {
                        v
                    }
                };
                if fv == 1 {
                    ws[j] = ci as u32;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    let l = clause[k];
                    let v = self.values[l.var().index()];
                    let lv = if l.is_negated() { -v } else { v };
                    if lv != -1 {
                        clause.swap(1, k);
                        self.watches[clause[1].code()].push(ci as u32);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = ci as u32;
                j += 1;
                if fv == -1 {
                    ok = false;
                    self.conflict = clause.clone();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.assign(first);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if !ok {
                return false;
            }
        }
        true
    }

    /// Resets, asserts units and `assumptions`, and propagates.
    fn start(&mut self, assumptions: &[Lit]) -> bool {
        self.undo_to(0);
        if self.has_empty {
            self.conflict = Vec::new();
            return false;
        }
        for i in 0..self.units.len() {
            let u = self.units[i];
            if !self.enqueue(u) {
                self.conflict = vec![u];
                return false;
            }
        }
        for &a in assumptions {
            if a.var().index() >= self.values.len() {
                self.values.resize(a.var().index() + 1, UNASSIGNED);
                self.watches.resize(2 * (a.var().index() + 1), Vec::new());
            }
            if !self.enqueue(a) {
                self.conflict = vec![a];
                return false;
            }
        }
        self.propagate_queue()
    }

    /// Unit propagation under `assumptions`: the fixpoint, or the clause
    /// found falsified.
    pub fn propagate(&mut self, assumptions: &[Lit]) -> Result<PartialAssignment, Conflict> {
        if self.start(assumptions) {
            Ok(PartialAssignment {
                values: self.values.clone(),
                trail: self.trail.clone(),
            })
        } else {
            Err(Conflict {
                clause: self.conflict.clone(),
                trail: self.trail.clone(),
            })
        }
    }

    /// Like [`Engine::propagate`] but only reports whether a conflict arose.
    pub fn conflicts(&mut self, assumptions: &[Lit]) -> bool {
        !self.start(assumptions)
    }

    /// Complete search: chronological backtracking, branching on the lowest
    /// open variable, true first.
    pub fn solve(&mut self, assumptions: &[Lit]) -> SolveOutcome {
        if !self.start(assumptions) {
            return SolveOutcome::Unsat;
        }
        // (trail length before decision, decision literal, already flipped)
        let mut decisions: Vec<(usize, Lit, bool)> = Vec::new();
        let mut next_var = 0usize;
        loop {
            while next_var < self.values.len() && self.values[next_var] != UNASSIGNED {
                next_var += 1;
            }
            if next_var == self.values.len() {
                return SolveOutcome::Sat(self.values.iter().map(|&v| v > 0).collect());
            }
            let d = Var::new(next_var as u32 + 1).pos();
            decisions.push((self.trail.len(), d, false));
            self.assign(d);
            while !self.propagate_queue() {
                loop {
                    let Some((mark, lit, flipped)) = decisions.pop() else {
                        return SolveOutcome::Unsat;
                    };
                    self.undo_to(mark);
                    if !flipped {
                        decisions.push((mark, !lit, true));
                        self.assign(!lit);
                        break;
                    }
                }
                next_var = 0;
            }
        }
    }
}

/// One-shot unit propagation of `db` under `assumptions`.
pub fn unit_propagate(db: &CnfBuilder, assumptions: &[Lit]) -> Result<PartialAssignment, Conflict> {
    Engine::new(db).propagate(assumptions)
}
