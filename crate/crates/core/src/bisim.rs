//! Bounded weak bisimulation between typed nodes.
//!
//! The check plays the bisimulation game for a fixed number of rounds.
//! Depths are tried in increasing order so a distinguishing witness is as
//! short as possible; a truncated defender search never counts as a loss.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use serde_json::json;
use thiserror::Error;

use crate::lts::{Label, Lts, TypedNode};
use crate::syntax::Term;
use crate::typing::{check_config, Env, TypeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// A distinguishing strategy: `side` moves with `label` from the pair and
/// every weak answer of the other side loses in the attached sub-game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub left: TypedNode,
    pub right: TypedNode,
    pub side: Side,
    pub label: Label,
    pub attacker_target: TypedNode,
    /// Size of the defender's τ-closure that was searched.
    pub searched: usize,
    pub responses: Vec<(TypedNode, Rc<Witness>)>,
}

impl Witness {
    /// Rounds needed by this strategy.
    pub fn depth(&self) -> usize {
        1 + self.responses.iter().map(|(_, w)| w.depth()).max().unwrap_or(0)
    }

    /// The pair reached after the attacker's move and the given answer.
    fn after(&self, answer: &TypedNode) -> (TypedNode, TypedNode) {
        match self.side {
            Side::Left => (self.attacker_target.clone(), answer.clone()),
            Side::Right => (answer.clone(), self.attacker_target.clone()),
        }
    }

    /// The main line: this step, then the first answer's sub-strategy.
    pub fn principal(&self) -> Vec<&Witness> {
        let mut out = vec![self];
        let mut cur = self;
        while let Some((_, w)) = cur.responses.first() {
            out.push(w);
            cur = w;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    EquivalentToDepth { depth: usize, truncated: bool },
    Distinguished(Rc<Witness>),
}

impl Verdict {
    pub fn is_distinguished(&self) -> bool {
        matches!(self, Verdict::Distinguished(_))
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Verdict::EquivalentToDepth { depth, truncated } => {
                json!({"verdict": "equivalent", "depth": depth, "truncated": truncated, "witness": []})
            }
            Verdict::Distinguished(w) => {
                let steps: Vec<_> = w
                    .principal()
                    .into_iter()
                    .map(|s| {
                        json!({
                            "label": s.label.to_string(),
                            "side": s.side.to_string(),
                            "pair": [s.left.config.to_string(), s.right.config.to_string()],
                        })
                    })
                    .collect();
                json!({"verdict": "distinguished", "depth": w.depth(), "truncated": false, "witness": steps})
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BisimError {
    #[error("nodes have different environments: `{0}` and `{1}`")]
    MismatchedEnvironments(String, String),
    #[error(transparent)]
    Type(#[from] TypeError),
}

#[derive(Clone)]
enum Outcome {
    Holds { truncated: bool },
    Fails(Rc<Witness>),
}

struct Game<'a> {
    lts: &'a Lts,
    tau_budget: usize,
    memo: HashMap<(TypedNode, TypedNode, usize), Outcome>,
}

impl Game<'_> {
    fn play(&mut self, l: &TypedNode, r: &TypedNode, d: usize) -> Outcome {
        if d == 0 || l == r {
            return Outcome::Holds { truncated: false };
        }
        let key = (l.clone(), r.clone(), d);
        if let Some(o) = self.memo.get(&key) {
            return o.clone();
        }
        let o = self.rounds(l, r, d);
        self.memo.insert(key, o.clone());
        o
    }

    fn rounds(&mut self, l: &TypedNode, r: &TypedNode, d: usize) -> Outcome {
        let mut truncated = false;
        for side in [Side::Left, Side::Right] {
            let (att, def) = match side {
                Side::Left => (l, r),
                Side::Right => (r, l),
            };
            let moves = self.lts.transitions(att);
            for (label, target) in moves.iter() {
                let answers = self.lts.weak_after(def, label, self.tau_budget);
                let mut best: Option<bool> = None;
                let mut lost = Vec::new();
                for cand in &answers.nodes {
                    let (nl, nr) = match side {
                        Side::Left => (target, cand),
                        Side::Right => (cand, target),
                    };
                    match self.play(nl, nr, d - 1) {
                        Outcome::Holds { truncated: t } => {
                            best = Some(best.map_or(t, |b| b && t));
                            if !t {
                                break;
                            }
                        }
                        Outcome::Fails(w) => lost.push((cand.clone(), w)),
                    }
                }
                match best {
                    Some(t) => truncated |= t,
                    None if answers.truncated => truncated = true,
                    None => {
                        return Outcome::Fails(Rc::new(Witness {
                            left: l.clone(),
                            right: r.clone(),
                            side,
                            label: label.clone(),
                            attacker_target: target.clone(),
                            searched: self.lts.tau_closure(def, self.tau_budget).nodes.len(),
                            responses: lost,
                        }))
                    }
                }
            }
        }
        Outcome::Holds { truncated }
    }
}

/// Plays the weak bisimulation game on `n` and `m` for up to `depth`
/// rounds, answering each move with at most `tau_budget` internal steps
/// on either side of the matching action.
pub fn bisim_check(n: &TypedNode, m: &TypedNode, depth: usize, tau_budget: usize) -> Result<Verdict, BisimError> {
    bisim_check_with(&Lts::new(), n, m, depth, tau_budget)
}

/// As [`bisim_check`], reusing the transition cache of `lts`.
pub fn bisim_check_with(
    lts: &Lts,
    n: &TypedNode,
    m: &TypedNode,
    depth: usize,
    tau_budget: usize,
) -> Result<Verdict, BisimError> {
    if n.delta != m.delta || n.theta != m.theta {
        let env = |x: &TypedNode| {
            let mut s = x.to_string();
            s.truncate(s.find(" |- ").unwrap_or(s.len()));
            s
        };
        return Err(BisimError::MismatchedEnvironments(env(n), env(m)));
    }
    let mut game = Game { lts, tau_budget, memo: HashMap::new() };
    let mut truncated = false;
    for d in 1..=depth {
        match game.play(n, m, d) {
            Outcome::Fails(w) => return Ok(Verdict::Distinguished(w)),
            Outcome::Holds { truncated: t } => truncated = t,
        }
    }
    Ok(Verdict::EquivalentToDepth { depth, truncated })
}

/// Bisimilarity of plain processes under a channel environment.
pub fn bisim_closed_hopi(
    delta: &Env,
    p: &Term,
    q: &Term,
    depth: usize,
    tau_budget: usize,
) -> Result<Verdict, BisimError> {
    let env = Env::with_channels(delta.channels.clone(), Default::default());
    check_config(&env, p)?;
    check_config(&env, q)?;
    bisim_check(&TypedNode::from_env(&env, p), &TypedNode::from_env(&env, q), depth, tau_budget)
}

/// Re-checks a witness against freshly derived transitions.
pub fn replay(w: &Witness, tau_budget: usize) -> Result<(), String> {
    replay_with(&Lts::new(), w, tau_budget)
}

fn replay_with(lts: &Lts, w: &Witness, tau_budget: usize) -> Result<(), String> {
    let (att, def) = match w.side {
        Side::Left => (&w.left, &w.right),
        Side::Right => (&w.right, &w.left),
    };
    if !lts.transitions(att).iter().any(|(l, t)| *l == w.label && *t == w.attacker_target) {
        return Err(format!("{} cannot do {} from {}", w.side, w.label, att));
    }
    let answers = lts.weak_after(def, &w.label, tau_budget);
    if answers.truncated {
        return Err(format!("answers to {} from {} are truncated", w.label, def));
    }
    let covered: BTreeSet<&TypedNode> = w.responses.iter().map(|(c, _)| c).collect();
    if answers.nodes.iter().collect::<BTreeSet<_>>() != covered {
        return Err(format!("answers to {} from {} are not all refuted", w.label, def));
    }
    for (cand, sub) in &w.responses {
        let (l, r) = w.after(cand);
        if sub.left != l || sub.right != r {
            return Err(format!("sub-witness for answer {} starts at the wrong pair", cand.config));
        }
        replay_with(lts, sub, tau_budget)?;
    }
    Ok(())
}

/// Human-readable account of the main line of a witness, three lines per
/// round.
pub fn explain_witness(w: &Witness) -> String {
    let mut out = String::new();
    for step in w.principal() {
        out.push_str(&format!("pair: {} ~ {}\n", step.left.config, step.right.config));
        out.push_str(&format!("{} does {} -> {}\n", step.side, step.label, step.attacker_target.config));
        let other = step.side.other();
        if step.responses.is_empty() {
            out.push_str(&format!(
                "{other} cannot match {} (tau-closure of {} states searched)\n",
                step.label, step.searched
            ));
        } else {
            out.push_str(&format!(
                "{other} answers {} in {} ways, each refuted below (first shown)\n",
                step.label,
                step.responses.len()
            ));
        }
    }
    out
}
