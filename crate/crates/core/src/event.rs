//! Events and event sets.
//!
//! An [`Event`] is a name plus a finite, immutable attribute map. Events are
//! reference counted so that models can build them once and hand out cheap
//! clones from every synchronization statement.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Name of the event injected as a self-loop at deadlocked states.
pub const STUTTER: &str = "STUTTER";

/// Scalar attribute value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Bool(b) => write!(f, "{b}"),
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Str(s) => f.write_str(s),
        }
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Bool(v)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Str(v.to_string())
    }
}

impl From<String> for Scalar {
    fn from(v: String) -> Self {
        Scalar::Str(v)
    }
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
struct EventData {
    name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    attrs: Vec<(String, Scalar)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nd: Option<bool>,
}

/// A named value with sorted attributes and an optional engine-injected
/// non-deterministic choice bit.
///
/// Equality, hashing and ordering are structural. The ordering is the
/// canonical event order: lexicographic on name, then sorted attributes,
/// then the choice bit.
#[derive(Clone)]
pub struct Event(Arc<EventData>);

impl Event {
    pub fn new(name: impl Into<String>) -> Self {
        Event(Arc::new(EventData {
            name: name.into(),
            attrs: Vec::new(),
            nd: None,
        }))
    }

    /// Builds an event from attribute pairs. Later duplicates of a key win.
    pub fn with_attrs<K, V, I>(name: impl Into<String>, attrs: I) -> Self
    where
        K: Into<String>,
        V: Into<Scalar>,
        I: IntoIterator<Item = (K, V)>,
    {
        let mut map = std::collections::BTreeMap::new();
        for (k, v) in attrs {
            map.insert(k.into(), v.into());
        }
        Event(Arc::new(EventData {
            name: name.into(),
            attrs: map.into_iter().collect(),
            nd: None,
        }))
    }

    /// Returns a copy of this event carrying the given choice bit.
    pub fn with_nd(&self, choice: bool) -> Self {
        Event(Arc::new(EventData {
            name: self.0.name.clone(),
            attrs: self.0.attrs.clone(),
            nd: Some(choice),
        }))
    }

    /// Returns a copy with the choice bit removed.
    pub fn without_nd(&self) -> Self {
        if self.0.nd.is_none() {
            return self.clone();
        }
        Event(Arc::new(EventData {
            name: self.0.name.clone(),
            attrs: self.0.attrs.clone(),
            nd: None,
        }))
    }

    pub fn stutter() -> Self {
        Event::new(STUTTER)
    }

    pub fn is_stutter(&self) -> bool {
        self.0.name == STUTTER && self.0.attrs.is_empty()
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn attrs(&self) -> &[(String, Scalar)] {
        &self.0.attrs
    }

    pub fn attr(&self, key: &str) -> Option<&Scalar> {
        self.0
            .attrs
            .binary_search_by(|(k, _)| k.as_str().cmp(key))
            .ok()
            .map(|i| &self.0.attrs[i].1)
    }

    /// True iff the attribute `key` is the boolean `true`.
    pub fn prop(&self, key: &str) -> bool {
        matches!(self.attr(key), Some(Scalar::Bool(true)))
    }

    pub fn nd_choice(&self) -> Option<bool> {
        self.0.nd
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Event {}

impl Hash for Event {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.name)?;
        match self.0.attrs.as_slice() {
            [] => {}
            [(_, v)] => write!(f, "({v})")?,
            attrs => {
                f.write_str("(")?;
                for (i, (k, v)) in attrs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}={v}")?;
                }
                f.write_str(")")?;
            }
        }
        if let Some(nd) = self.0.nd {
            write!(f, "[nd={nd}]")?;
        }
        Ok(())
    }
}

impl Serialize for Event {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Event {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let mut data = EventData::deserialize(deserializer)?;
        data.attrs.sort();
        data.attrs.dedup_by(|a, b| a.0 == b.0);
        Ok(Event(Arc::new(data)))
    }
}

type Predicate = Arc<dyn Fn(&Event) -> bool + Send + Sync>;

/// A set of events: either explicit (enumerable) or a pure membership test.
#[derive(Clone, Default)]
pub enum EventSet {
    #[default]
    Nothing,
    All,
    Explicit(Vec<Event>),
    /// Every event with the given name, regardless of attributes.
    Named(String),
    /// Every event whose boolean attribute is `true`.
    Prop(String),
    Not(Box<EventSet>),
    And(Vec<EventSet>),
    Or(Vec<EventSet>),
    Pred(Predicate),
}

impl EventSet {
    pub fn of(events: impl IntoIterator<Item = Event>) -> Self {
        EventSet::Explicit(events.into_iter().collect())
    }

    pub fn one(event: Event) -> Self {
        EventSet::Explicit(vec![event])
    }

    pub fn named(name: impl Into<String>) -> Self {
        EventSet::Named(name.into())
    }

    pub fn prop(name: impl Into<String>) -> Self {
        EventSet::Prop(name.into())
    }

    pub fn pred(f: impl Fn(&Event) -> bool + Send + Sync + 'static) -> Self {
        EventSet::Pred(Arc::new(f))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        EventSet::Not(Box::new(self))
    }

    pub fn and(self, other: EventSet) -> Self {
        EventSet::And(vec![self, other])
    }

    pub fn or(self, other: EventSet) -> Self {
        EventSet::Or(vec![self, other])
    }

    pub fn contains(&self, e: &Event) -> bool {
        match self {
            EventSet::Nothing => false,
            EventSet::All => true,
            EventSet::Explicit(v) => v.iter().any(|x| x == e),
            EventSet::Named(n) => e.name() == n,
            EventSet::Prop(p) => e.prop(p),
            EventSet::Not(s) => !s.contains(e),
            EventSet::And(v) => v.iter().all(|s| s.contains(e)),
            EventSet::Or(v) => v.iter().any(|s| s.contains(e)),
            EventSet::Pred(f) => f(e),
        }
    }

    /// The members of an explicit set; `None` for predicate-style sets.
    pub fn enumerate(&self) -> Option<&[Event]> {
        match self {
            EventSet::Nothing => Some(&[]),
            EventSet::Explicit(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_nothing(&self) -> bool {
        match self {
            EventSet::Nothing => true,
            EventSet::Explicit(v) => v.is_empty(),
            _ => false,
        }
    }
}

impl fmt::Debug for EventSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventSet::Nothing => f.write_str("Nothing"),
            EventSet::All => f.write_str("All"),
            EventSet::Explicit(v) => f.debug_set().entries(v).finish(),
            EventSet::Named(n) => write!(f, "Named({n})"),
            EventSet::Prop(p) => write!(f, "Prop({p})"),
            EventSet::Not(s) => write!(f, "Not({s:?})"),
            EventSet::And(v) => f.debug_tuple("And").field(v).finish(),
            EventSet::Or(v) => f.debug_tuple("Or").field(v).finish(),
            EventSet::Pred(_) => f.write_str("Pred(..)"),
        }
    }
}

impl From<Event> for EventSet {
    fn from(e: Event) -> Self {
        EventSet::one(e)
    }
}
