//! Identifiers and small value types shared across the crate.

use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Identifier of a writer process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct WriterId(pub u16);

/// Identifier of a reader process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ReaderId(pub u16);

impl fmt::Display for WriterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

impl fmt::Display for ReaderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// Index of a storage object, in `1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ObjectIndex(pub u8);

impl fmt::Display for ObjectIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o{}", self.0)
    }
}

/// Label naming one written value: a (writer, sequence) pair, unique per
/// write invocation. Ordered by `(seq, writer)` so the most recent write
/// wins label comparisons regardless of which writer issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Label {
    pub writer: WriterId,
    pub seq: u32,
}

impl Label {
    pub fn new(writer: WriterId, seq: u32) -> Self {
        Label { writer, seq }
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        (self.seq, self.writer).cmp(&(other.seq, other.writer))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.writer.0, self.seq)
    }
}

/// A stored value: a non-empty byte payload, capped at [`Value::MAX_LEN`]
/// bytes to keep exhaustive checks cheap. Cloning is cheap (shared payload).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Value(alloc::sync::Arc<[u8]>);

impl Value {
    pub const MAX_LEN: usize = 64;

    pub fn new(payload: Vec<u8>) -> Result<Self, ValueError> {
        if payload.is_empty() {
            return Err(ValueError::Empty);
        }
        if payload.len() > Self::MAX_LEN {
            return Err(ValueError::TooLong(payload.len()));
        }
        Ok(Value(payload.into()))
    }

    pub fn bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueError {
    Empty,
    TooLong(usize),
}

impl fmt::Display for ValueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueError::Empty => write!(f, "value payload must be non-empty"),
            ValueError::TooLong(n) => {
                write!(f, "value payload of {n} bytes exceeds the {} byte cap", Value::MAX_LEN)
            }
        }
    }
}

impl core::error::Error for ValueError {}

/// A set of object indices, stored as a bitmask. Supports up to 16 objects,
/// far beyond the desk scale this crate targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ObjectSet(u16);

impl ObjectSet {
    pub const MAX_OBJECTS: u8 = 16;

    pub const EMPTY: ObjectSet = ObjectSet(0);

    /// The full set `{1..=n}`.
    pub fn all(n: u8) -> Self {
        debug_assert!(n <= Self::MAX_OBJECTS);
        ObjectSet(if n == 16 { u16::MAX } else { (1u16 << n) - 1 })
    }

    pub fn insert(&mut self, k: ObjectIndex) {
        debug_assert!((1..=Self::MAX_OBJECTS).contains(&k.0));
        self.0 |= 1 << (k.0 - 1);
    }

    pub fn with(mut self, k: ObjectIndex) -> Self {
        self.insert(k);
        self
    }

    pub fn remove(&mut self, k: ObjectIndex) {
        self.0 &= !(1 << (k.0 - 1));
    }

    pub fn contains(&self, k: ObjectIndex) -> bool {
        k.0 >= 1 && k.0 <= Self::MAX_OBJECTS && self.0 & (1 << (k.0 - 1)) != 0
    }

    pub fn len(&self) -> u8 {
        self.0.count_ones() as u8
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: ObjectSet) -> ObjectSet {
        ObjectSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ObjectSet) -> ObjectSet {
        ObjectSet(self.0 & other.0)
    }

    pub fn difference(self, other: ObjectSet) -> ObjectSet {
        ObjectSet(self.0 & !other.0)
    }

    pub fn is_subset(&self, other: &ObjectSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Iterate members in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = ObjectIndex> + '_ {
        let bits = self.0;
        (1..=Self::MAX_OBJECTS).filter_map(move |i| {
            if bits & (1 << (i - 1)) != 0 {
                Some(ObjectIndex(i))
            } else {
                None
            }
        })
    }

    pub fn from_indices<I: IntoIterator<Item = ObjectIndex>>(indices: I) -> Self {
        let mut s = ObjectSet::EMPTY;
        for k in indices {
            s.insert(k);
        }
        s
    }
}

impl FromIterator<ObjectIndex> for ObjectSet {
    fn from_iter<I: IntoIterator<Item = ObjectIndex>>(iter: I) -> Self {
        ObjectSet::from_indices(iter)
    }
}

impl fmt::Display for ObjectSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        let mut first = true;
        for k in self.iter() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{}", k.0)?;
            first = false;
        }
        write!(f, "]")
    }
}

#[cfg(feature = "serde")]
impl Serialize for ObjectSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter().map(|k| k.0))
    }
}

#[cfg(feature = "serde")]
impl<'de> Deserialize<'de> for ObjectSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let indices = Vec::<u8>::deserialize(deserializer)?;
        let mut s = ObjectSet::EMPTY;
        for i in indices {
            if i < 1 || i > Self::MAX_OBJECTS {
                return Err(serde::de::Error::custom("object index out of range"));
            }
            s.insert(ObjectIndex(i));
        }
        Ok(s)
    }
}
