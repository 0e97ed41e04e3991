//! Drone-side negotiation for access to a work area.
//!
//! The drone pokes at the collaborator from the edge of a safe distance,
//! waits for the attention sign, flies a rectangle over the area it wants,
//! then waits for Yes or No. A safety trigger wins from any state.
//!
//! Time is logical: one tick per processed event. Timer expiry arrives as a
//! `Timeout` event from whoever owns the wall clock.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::embodiment::{LightMode, PatternKind};
use crate::error::{Error, Result};
use crate::sign::SignId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DroneState {
    Idle,
    Approach,
    Poke,
    AwaitAttention,
    RequestArea,
    AwaitDecision,
    Enter,
    Withdraw,
    SafetyHold,
}

impl DroneState {
    pub const ALL: [DroneState; 9] = [
        DroneState::Idle,
        DroneState::Approach,
        DroneState::Poke,
        DroneState::AwaitAttention,
        DroneState::RequestArea,
        DroneState::AwaitDecision,
        DroneState::Enter,
        DroneState::Withdraw,
        DroneState::SafetyHold,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DroneState::Idle => "Idle",
            DroneState::Approach => "Approach",
            DroneState::Poke => "Poke",
            DroneState::AwaitAttention => "AwaitAttention",
            DroneState::RequestArea => "RequestArea",
            DroneState::AwaitDecision => "AwaitDecision",
            DroneState::Enter => "Enter",
            DroneState::Withdraw => "Withdraw",
            DroneState::SafetyHold => "SafetyHold",
        }
    }

    /// States in which the drone is flying one of the communicative
    /// patterns, so a safety stop has to cut it short.
    fn in_pattern(&self) -> bool {
        matches!(self, DroneState::Poke | DroneState::RequestArea)
    }
}

impl fmt::Display for DroneState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DroneState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DroneState::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown state {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProtocolEvent {
    ArrivedAtSafeDistance,
    /// Also signals the end of the rectangle pattern.
    PokeComplete,
    SignSeen(SignId),
    Timeout,
    AreaCleared,
    SafetyTrigger,
    Reset,
}

impl ProtocolEvent {
    /// One representative per event kind, with every built-in sign.
    pub fn representatives() -> Vec<ProtocolEvent> {
        let mut v = vec![
            ProtocolEvent::ArrivedAtSafeDistance,
            ProtocolEvent::PokeComplete,
            ProtocolEvent::Timeout,
            ProtocolEvent::AreaCleared,
            ProtocolEvent::SafetyTrigger,
            ProtocolEvent::Reset,
        ];
        v.extend(SignId::BUILTIN.iter().cloned().map(ProtocolEvent::SignSeen));
        v
    }
}

/// Script token form, e.g. `SIGN:Yes` or `TIMEOUT`.
impl fmt::Display for ProtocolEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolEvent::ArrivedAtSafeDistance => f.write_str("ARRIVED"),
            ProtocolEvent::PokeComplete => f.write_str("POKE_COMPLETE"),
            ProtocolEvent::SignSeen(s) => write!(f, "SIGN:{s}"),
            ProtocolEvent::Timeout => f.write_str("TIMEOUT"),
            ProtocolEvent::AreaCleared => f.write_str("AREA_CLEARED"),
            ProtocolEvent::SafetyTrigger => f.write_str("SAFETY"),
            ProtocolEvent::Reset => f.write_str("RESET"),
        }
    }
}

impl FromStr for ProtocolEvent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let name = name.to_ascii_uppercase().replace('-', "_");
        let ev = match (name.as_str(), arg) {
            ("SIGN" | "SIGN_SEEN" | "SIGNSEEN", Some(a)) => ProtocolEvent::SignSeen(a.parse()?),
            ("ARRIVED" | "ARRIVED_AT_SAFE_DISTANCE" | "ARRIVEDATSAFEDISTANCE", None) => {
                ProtocolEvent::ArrivedAtSafeDistance
            }
            ("POKE_COMPLETE" | "POKECOMPLETE" | "PATTERN_DONE" | "PATTERNDONE", None) => {
                ProtocolEvent::PokeComplete
            }
            ("TIMEOUT", None) => ProtocolEvent::Timeout,
            ("AREA_CLEARED" | "AREACLEARED", None) => ProtocolEvent::AreaCleared,
            ("SAFETY" | "SAFETY_TRIGGER" | "SAFETYTRIGGER", None) => ProtocolEvent::SafetyTrigger,
            ("RESET", None) => ProtocolEvent::Reset,
            _ => return Err(Error::invalid(format!("unknown event {s:?}"))),
        };
        Ok(ev)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlyTarget {
    SafeBoundary,
    Area,
    Retreat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimerLabel {
    Attention,
    Decision,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionCommand {
    FlyTo(FlyTarget),
    ExecutePattern(PatternKind),
    SetLights(LightMode),
    StartTimer(TimerLabel, f64),
    Hover,
    Abort,
}

impl fmt::Display for ActionCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionCommand::FlyTo(t) => write!(f, "FlyTo({t:?})"),
            ActionCommand::ExecutePattern(p) => write!(f, "ExecutePattern({p})"),
            ActionCommand::SetLights(l) => write!(f, "SetLights({l})"),
            ActionCommand::StartTimer(l, secs) => write!(f, "StartTimer({l:?} {secs}s)"),
            ActionCommand::Hover => f.write_str("Hover"),
            ActionCommand::Abort => f.write_str("Abort"),
        }
    }
}

impl FromStr for ActionCommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("bad action {s:?}"));
        match s {
            "Hover" => return Ok(ActionCommand::Hover),
            "Abort" => return Ok(ActionCommand::Abort),
            _ => {}
        }
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let arg = rest.strip_suffix(')').ok_or_else(bad)?;
        Ok(match name {
            "FlyTo" => ActionCommand::FlyTo(match arg {
                "SafeBoundary" => FlyTarget::SafeBoundary,
                "Area" => FlyTarget::Area,
                "Retreat" => FlyTarget::Retreat,
                _ => return Err(bad()),
            }),
            "ExecutePattern" => ActionCommand::ExecutePattern(arg.parse()?),
            "SetLights" => ActionCommand::SetLights(arg.parse()?),
            "StartTimer" => {
                let (label, secs) = arg.split_once(' ').ok_or_else(bad)?;
                let label = match label {
                    "Attention" => TimerLabel::Attention,
                    "Decision" => TimerLabel::Decision,
                    _ => return Err(bad()),
                };
                let secs = secs
                    .strip_suffix('s')
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(bad)?;
                ActionCommand::StartTimer(label, secs)
            }
            _ => return Err(bad()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub attention_timeout_s: f64,
    pub decision_timeout_s: f64,
    /// How many times an unanswered area request is retried with a fresh
    /// poke before the drone gives up.
    pub max_repokes: u32,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            attention_timeout_s: 10.0,
            decision_timeout_s: 15.0,
            max_repokes: 1,
        }
    }
}

/// Current state plus the re-poke counter for this negotiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Machine {
    pub state: DroneState,
    pub repokes: u32,
}

impl Machine {
    pub fn new() -> Machine {
        Machine::at(DroneState::Idle)
    }

    pub fn at(state: DroneState) -> Machine {
        Machine { state, repokes: 0 }
    }
}

impl Default for Machine {
    fn default() -> Self {
        Machine::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub next: Machine,
    pub actions: Vec<ActionCommand>,
    /// No transition is defined for this pair; the machine stayed put.
    pub ignored: bool,
}

fn go(state: DroneState, repokes: u32, actions: Vec<ActionCommand>) -> Step {
    Step {
        next: Machine { state, repokes },
        actions,
        ignored: false,
    }
}

fn start_poke(cfg: &ProtocolConfig) -> Vec<ActionCommand> {
    vec![
        ActionCommand::ExecutePattern(PatternKind::Poke),
        ActionCommand::StartTimer(TimerLabel::Attention, cfg.attention_timeout_s),
    ]
}

/// The transition function. Total: every pair yields a step.
pub fn step(m: Machine, event: &ProtocolEvent, cfg: &ProtocolConfig) -> Step {
    use DroneState as S;
    use ProtocolEvent as E;

    if *event == E::SafetyTrigger {
        let mut actions = Vec::with_capacity(3);
        if m.state.in_pattern() {
            actions.push(ActionCommand::Abort);
        }
        actions.push(ActionCommand::SetLights(LightMode::AllRed));
        actions.push(ActionCommand::Hover);
        return go(S::SafetyHold, m.repokes, actions);
    }

    let r = m.repokes;
    match (m.state, event) {
        (S::Idle | S::SafetyHold, E::Reset) => go(S::Idle, 0, vec![]),
        (S::Idle | S::Approach, E::ArrivedAtSafeDistance) => go(S::Poke, 0, start_poke(cfg)),
        (S::Poke, E::PokeComplete) => go(S::AwaitAttention, r, vec![]),
        (S::AwaitAttention, E::SignSeen(SignId::AttentionGained)) => go(
            S::RequestArea,
            r,
            vec![
                ActionCommand::ExecutePattern(PatternKind::Rectangle),
                ActionCommand::StartTimer(TimerLabel::Decision, cfg.decision_timeout_s),
            ],
        ),
        (S::AwaitAttention, E::Timeout) => go(
            S::Withdraw,
            r,
            vec![ActionCommand::FlyTo(FlyTarget::Retreat)],
        ),
        (S::RequestArea, E::PokeComplete) => go(S::AwaitDecision, r, vec![]),
        (S::AwaitDecision, E::SignSeen(SignId::Yes)) => {
            go(S::Enter, r, vec![ActionCommand::FlyTo(FlyTarget::Area)])
        }
        (S::AwaitDecision, E::SignSeen(SignId::No)) => go(
            S::Withdraw,
            r,
            vec![ActionCommand::FlyTo(FlyTarget::Retreat)],
        ),
        (S::AwaitDecision, E::Timeout) if r < cfg.max_repokes => {
            go(S::Poke, r + 1, start_poke(cfg))
        }
        (S::AwaitDecision, E::Timeout) => go(
            S::Withdraw,
            r,
            vec![ActionCommand::FlyTo(FlyTarget::Retreat)],
        ),
        (S::Enter | S::Withdraw, E::AreaCleared) => go(S::Idle, 0, vec![]),
        _ => Step {
            next: m,
            actions: vec![],
            ignored: true,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    /// Logical time, 1 for the first event.
    pub t: u64,
    pub from: DroneState,
    pub state: DroneState,
    pub event: ProtocolEvent,
    pub actions: Vec<ActionCommand>,
    pub ignored: bool,
}

pub const IGNORED: &str = "IGNORED";

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub records: Vec<LogRecord>,
    pub terminal: Machine,
}

impl SessionLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn terminal_state(&self) -> DroneState {
        self.terminal.state
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "state", "event", "actions"])?;
        for r in &self.records {
            let actions = if r.ignored {
                IGNORED.to_string()
            } else {
                r.actions
                    .iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            };
            w.write_record([
                r.t.to_string(),
                r.state.to_string(),
                r.event.to_string(),
                actions,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// One row of a log CSV, as read back.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: u64,
    pub state: DroneState,
    pub event: ProtocolEvent,
    pub actions: Vec<ActionCommand>,
    pub ignored: bool,
}

pub fn parse_log_csv(text: &str) -> Result<Vec<LogRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |msg: String| Error::Parse {
            what: "session log",
            line: i + 2,
            msg,
        };
        if rec.len() != 4 {
            return Err(bad("expected 4 fields".into()));
        }
        let ignored = &rec[3] == IGNORED;
        let actions = if ignored || rec[3].is_empty() {
            vec![]
        } else {
            rec[3]
                .split(';')
                .map(str::parse)
                .collect::<Result<_>>()
                .map_err(|e| bad(e.to_string()))?
        };
        rows.push(LogRow {
            t: rec[0].parse().map_err(|_| bad("bad time".into()))?,
            state: rec[1].parse().map_err(|e: Error| bad(e.to_string()))?,
            event: rec[2].parse().map_err(|e: Error| bad(e.to_string()))?,
            actions,
            ignored,
        });
    }
    Ok(rows)
}

pub fn run_session(script: &[ProtocolEvent], cfg: &ProtocolConfig) -> SessionLog {
    run_session_from(Machine::new(), script, cfg)
}

pub fn run_session_from(
    start: Machine,
    script: &[ProtocolEvent],
    cfg: &ProtocolConfig,
) -> SessionLog {
    let mut m = start;
    let mut records = Vec::with_capacity(script.len());
    for (i, ev) in script.iter().enumerate() {
        let s = step(m, ev, cfg);
        records.push(LogRecord {
            t: i as u64 + 1,
            from: m.state,
            state: s.next.state,
            event: ev.clone(),
            actions: s.actions,
            ignored: s.ignored,
        });
        m = s.next;
    }
    SessionLog {
        records,
        terminal: m,
    }
}

/// One event per line; blank lines and `#` comments are skipped.
pub fn parse_script(text: &str) -> Result<Vec<ProtocolEvent>> {
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        events.push(line.parse().map_err(|e: Error| Error::Parse {
            what: "session script",
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use DroneState as S;
    use ProtocolEvent as E;

    fn cfg() -> ProtocolConfig {
        ProtocolConfig::default()
    }

    fn sign(s: SignId) -> ProtocolEvent {
        E::SignSeen(s)
    }

    #[test]
    fn table_examples() {
        let s = step(Machine::at(S::AwaitDecision), &sign(SignId::No), &cfg());
        assert_eq!(s.next.state, S::Withdraw);
        assert_eq!(s.actions, vec![ActionCommand::FlyTo(FlyTarget::Retreat)]);

        let s = step(Machine::at(S::Enter), &E::SafetyTrigger, &cfg());
        assert_eq!(s.next.state, S::SafetyHold);
        assert_eq!(
            s.actions,
            vec![
                ActionCommand::SetLights(LightMode::AllRed),
                ActionCommand::Hover
            ]
        );

        let s = step(Machine::at(S::Idle), &sign(SignId::Yes), &cfg());
        assert_eq!(s.next.state, S::Idle);
        assert!(s.actions.is_empty() && s.ignored);

        let s = step(Machine::at(S::Approach), &E::ArrivedAtSafeDistance, &cfg());
        assert_eq!(s.next.state, S::Poke);
        assert_eq!(
            s.actions,
            vec![
                ActionCommand::ExecutePattern(PatternKind::Poke),
                ActionCommand::StartTimer(TimerLabel::Attention, 10.0)
            ]
        );
    }

    #[test]
    fn total_and_safety_dominant() {
        let mut events = E::representatives();
        events.push(sign(SignId::Other("Wave".into())));
        for st in S::ALL {
            for r in 0..3 {
                let m = Machine {
                    state: st,
                    repokes: r,
                };
                for ev in &events {
                    let s = step(m, ev, &cfg());
                    if s.ignored {
                        assert_eq!(s.next, m);
                        assert!(s.actions.is_empty());
                    }
                    let has_abort = s.actions.contains(&ActionCommand::Abort);
                    assert!(!has_abort || *ev == E::SafetyTrigger);
                }
                let s = step(m, &E::SafetyTrigger, &cfg());
                assert_eq!(s.next.state, S::SafetyHold);
                assert!(s
                    .actions
                    .contains(&ActionCommand::SetLights(LightMode::AllRed)));
                assert!(!s.ignored);
            }
        }
    }

    #[test]
    fn pattern_states_abort_first() {
        for st in [S::Poke, S::RequestArea] {
            let s = step(Machine::at(st), &E::SafetyTrigger, &cfg());
            assert_eq!(s.actions[0], ActionCommand::Abort);
        }
    }

    #[test]
    fn happy_path() {
        let script = parse_script(
            "ARRIVED\nPOKE_COMPLETE\nSIGN:AttentionGained\nPATTERN_DONE\nSIGN:YES\nAREA_CLEARED\n",
        )
        .unwrap();
        let log = run_session(&script, &cfg());
        assert_eq!(log.len(), script.len());
        let states: Vec<_> = log.records.iter().map(|r| r.state).collect();
        assert_eq!(
            states,
            vec![
                S::Poke,
                S::AwaitAttention,
                S::RequestArea,
                S::AwaitDecision,
                S::Enter,
                S::Idle
            ]
        );
        let ts: Vec<u64> = log.records.iter().map(|r| r.t).collect();
        assert_eq!(ts, (1..=6).collect::<Vec<_>>());
    }

    #[test]
    fn ignored_approach_withdraws() {
        let log = run_session(
            &[E::ArrivedAtSafeDistance, E::PokeComplete, E::Timeout],
            &cfg(),
        );
        assert_eq!(log.terminal_state(), S::Withdraw);
        let empty = run_session(&[], &cfg());
        assert!(empty.is_empty());
        assert_eq!(empty.terminal_state(), S::Idle);
    }

    #[test]
    fn single_repoke_then_withdraw() {
        let round = [
            E::PokeComplete,
            sign(SignId::AttentionGained),
            E::PokeComplete,
            E::Timeout,
        ];
        let mut script = vec![E::ArrivedAtSafeDistance];
        script.extend(round.iter().cloned());
        let log = run_session(&script, &cfg());
        assert_eq!(log.terminal_state(), S::Poke);
        assert_eq!(log.terminal.repokes, 1);
        script.extend(round.iter().cloned());
        let log = run_session(&script, &cfg());
        assert_eq!(log.terminal_state(), S::Withdraw);

        let none = ProtocolConfig {
            max_repokes: 0,
            ..cfg()
        };
        let mut short = vec![E::ArrivedAtSafeDistance];
        short.extend(round.iter().cloned());
        assert_eq!(run_session(&short, &none).terminal_state(), S::Withdraw);
    }

    #[test]
    fn safety_hold_needs_reset() {
        let log = run_session(
            &[
                E::ArrivedAtSafeDistance,
                E::SafetyTrigger,
                E::AreaCleared,
                sign(SignId::Yes),
            ],
            &cfg(),
        );
        assert_eq!(log.terminal_state(), S::SafetyHold);
        assert!(log.records[2].ignored && log.records[3].ignored);
        let log = run_session(&[E::SafetyTrigger, E::Reset], &cfg());
        assert_eq!(log.terminal_state(), S::Idle);
    }

    fn no_entry_without_yes(m: Machine, depth: usize, events: &[ProtocolEvent], count: &mut u64) {
        if depth == 0 {
            return;
        }
        for ev in events {
            if *ev == E::SignSeen(SignId::Yes) {
                // Consent given; the rest of this branch cannot violate.
                continue;
            }
            *count += 1;
            let s = step(m, ev, &cfg());
            assert_ne!(s.next.state, S::Enter, "entered without consent via {ev}");
            no_entry_without_yes(s.next, depth - 1, events, count);
        }
    }

    #[test]
    fn no_consent_no_entry_short_sequences() {
        let mut events = E::representatives();
        events.push(sign(SignId::Other("Wave".into())));
        let mut count = 0;
        no_entry_without_yes(Machine::new(), 6, &events, &mut count);
        assert!(count > 100_000);
    }

    #[test]
    fn script_parsing() {
        let s = parse_script(
            "# greeting\n\narrived\nsign: attention  # sure\nSIGN:no\nsafety_trigger\n",
        )
        .unwrap();
        assert_eq!(
            s,
            vec![
                E::ArrivedAtSafeDistance,
                sign(SignId::AttentionGained),
                sign(SignId::No),
                E::SafetyTrigger
            ]
        );
        match parse_script("ARRIVED\nJUMP\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_script("SIGN:\n").is_err());
        assert!(parse_script("TIMEOUT:5\n").is_err());
    }

    #[test]
    fn log_csv_round_trip() {
        let script = parse_script("ARRIVED\nSIGN:Yes\nPOKE_COMPLETE\nSAFETY\nRESET\n").unwrap();
        let log = run_session(&script, &cfg());
        let text = log.to_csv();
        assert!(text.starts_with("t,state,event,actions\n"));
        assert!(text.contains("IGNORED"));
        let rows = parse_log_csv(&text).unwrap();
        assert_eq!(rows.len(), log.len());
        for (row, rec) in rows.iter().zip(&log.records) {
            assert_eq!(row.t, rec.t);
            assert_eq!(row.state, rec.state);
            assert_eq!(row.event, rec.event);
            assert_eq!(row.actions, rec.actions);
            assert_eq!(row.ignored, rec.ignored);
        }
    }

    proptest! {
        #[test]
        fn identical_scripts_identical_logs(idx in prop::collection::vec(0usize..9, 0..40)) {
            let events = E::representatives();
            let script: Vec<_> = idx.iter().map(|&i| events[i].clone()).collect();
            let a = run_session(&script, &cfg());
            let b = run_session(&script, &cfg());
            prop_assert_eq!(a.to_csv(), b.to_csv());
            prop_assert_eq!(&a, &b);
            for w in a.records.windows(2) {
                prop_assert!(w[1].t > w[0].t);
                prop_assert_eq!(w[1].from, w[0].state);
            }
        }
    }
}
