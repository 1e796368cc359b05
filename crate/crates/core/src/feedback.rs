//! Audio feedback as a stream of structured events: a beep that runs while
//! the way ahead is blocked, turn hints, and on-demand speech describing
//! fused objects.

use serde::{Deserialize, Serialize};

use crate::direction::{DirectionDecision, WalkAction};
use crate::fusion::FusedObject;

pub const SEARCH_HINT: &str = "search left or right";
pub const CANNOT_MOVE_ON: &str = "cannot move on";
pub const NO_OBJECTS: &str = "no objects detected";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    BeepStart,
    BeepStop,
    TurnHint,
    Speech,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::BeepStart => "beep_start",
            Self::BeepStop => "beep_stop",
            Self::TurnHint => "turn_hint",
            Self::Speech => "speech",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub frame_index: u64,
    pub kind: EventKind,
    pub payload: String,
    pub timestamp_us: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeedbackState {
    pub beeping: bool,
    pub last: Option<WalkAction>,
}

fn event(frame_index: u64, timestamp_us: u64, kind: EventKind, payload: impl Into<String>) -> FeedbackEvent {
    FeedbackEvent {
        frame_index,
        kind,
        payload: payload.into(),
        timestamp_us,
    }
}

pub fn turn_text(gamma: f64) -> String {
    let side = if gamma < 0.0 { "left" } else { "right" };
    format!("turn {side} {:.1} degrees", gamma.abs())
}

/// Events for one direction decision.
pub fn navigation_feedback(
    decision: &DirectionDecision,
    state: &mut FeedbackState,
    frame_index: u64,
    timestamp_us: u64,
) -> Vec<FeedbackEvent> {
    let mut out = Vec::new();
    match decision.action {
        WalkAction::Blocked => {
            if !state.beeping {
                state.beeping = true;
                out.push(event(frame_index, timestamp_us, EventKind::BeepStart, "blocked"));
                out.push(event(frame_index, timestamp_us, EventKind::TurnHint, SEARCH_HINT));
            }
        }
        WalkAction::Straight | WalkAction::Turn(_) => {
            if state.beeping {
                state.beeping = false;
                out.push(event(frame_index, timestamp_us, EventKind::BeepStop, "clear"));
            }
            if let WalkAction::Turn(gamma) = decision.action {
                out.push(event(frame_index, timestamp_us, EventKind::TurnHint, turn_text(gamma)));
            }
        }
    }
    state.last = Some(decision.action);
    out
}

/// Hint for frames where no walkable ground was found. Beep state is kept.
pub fn non_ground_feedback(frame_index: u64, timestamp_us: u64) -> FeedbackEvent {
    event(frame_index, timestamp_us, EventKind::TurnHint, CANNOT_MOVE_ON)
}

pub fn describe_object(obj: &FusedObject) -> String {
    format!(
        "{}, {:.1} meters, {}",
        obj.label,
        obj.distance,
        obj.direction_bucket.as_str()
    )
}

/// One speech event per object, nearest first (ties by label).
pub fn describe_objects(objects: &[FusedObject], frame_index: u64, timestamp_us: u64) -> Vec<FeedbackEvent> {
    if objects.is_empty() {
        return vec![event(frame_index, timestamp_us, EventKind::Speech, NO_OBJECTS)];
    }
    let mut sorted: Vec<&FusedObject> = objects.iter().collect();
    sorted.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.label.cmp(&b.label)));
    sorted
        .into_iter()
        .map(|o| event(frame_index, timestamp_us, EventKind::Speech, describe_object(o)))
        .collect()
}

/// Checks that beep starts and stops alternate, beginning with a start.
pub fn beeps_alternate(events: &[FeedbackEvent]) -> bool {
    let mut beeping = false;
    for e in events {
        match e.kind {
            EventKind::BeepStart if beeping => return false,
            EventKind::BeepStop if !beeping => return false,
            EventKind::BeepStart => beeping = true,
            EventKind::BeepStop => beeping = false,
            _ => {}
        }
    }
    true
}
