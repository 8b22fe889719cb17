//! Capability tokens standing in for signed read requests.
//!
//! Only the trusted environment mints tokens, on behalf of a reader. A
//! faulty object may replay a token it has received but can never mint one,
//! which is all the audit-side verification relies on.

use alloc::collections::{BTreeMap, BTreeSet};

use crate::ids::{Label, ObjectIndex, ReaderId};
use crate::object::ReadRecord;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// What a token vouches for: any value, or one specific label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TokenScope {
    AnyValue,
    Specific(Label),
}

impl TokenScope {
    pub fn covers(&self, label: Label) -> bool {
        match self {
            TokenScope::AnyValue => true,
            TokenScope::Specific(scoped) => *scoped == label,
        }
    }
}

/// A minted token: reader identity, scope, and a mint-unique nonce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SignedToken {
    pub reader: ReaderId,
    pub scope: TokenScope,
    pub nonce: u32,
}

/// Mint ledger plus per-object receipt sets. Receipt is what matters for
/// verification: an object can attest a record only with a token it was
/// actually sent, scoped to the record's reader and label.
#[derive(Debug, Clone, Default)]
pub struct TokenRegistry {
    next_nonce: u32,
    minted: BTreeSet<SignedToken>,
    received: BTreeMap<ObjectIndex, BTreeSet<SignedToken>>,
}

impl TokenRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.next_nonce = 0;
        self.minted.clear();
        self.received.clear();
    }

    pub fn mint(&mut self, reader: ReaderId, scope: TokenScope) -> SignedToken {
        let token = SignedToken { reader, scope, nonce: self.next_nonce };
        self.next_nonce += 1;
        self.minted.insert(token);
        token
    }

    /// Record that `object` received `token` with a request. Receipt happens
    /// even when the object later omits its response.
    pub fn deliver(&mut self, object: ObjectIndex, token: SignedToken) {
        debug_assert!(self.minted.contains(&token), "token was never minted");
        self.received.entry(object).or_default().insert(token);
    }

    /// Whether `object` holds a token that lets it attest `record`.
    pub fn object_can_attest(&self, object: ObjectIndex, record: &ReadRecord) -> bool {
        self.received
            .get(&object)
            .map(|tokens| {
                tokens.iter().any(|t| t.reader == record.reader && t.scope.covers(record.label))
            })
            .unwrap_or(false)
    }

    pub fn minted_tokens(&self) -> impl Iterator<Item = &SignedToken> {
        self.minted.iter()
    }

    pub fn received_by(&self, object: ObjectIndex) -> impl Iterator<Item = &SignedToken> {
        self.received.get(&object).into_iter().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::WriterId;

    #[test]
    fn generic_token_covers_any_label_specific_does_not() {
        let mut reg = TokenRegistry::new();
        let l1 = Label::new(WriterId(1), 1);
        let l2 = Label::new(WriterId(1), 2);
        let generic = reg.mint(ReaderId(1), TokenScope::AnyValue);
        let specific = reg.mint(ReaderId(2), TokenScope::Specific(l1));
        reg.deliver(ObjectIndex(3), generic);
        reg.deliver(ObjectIndex(3), specific);

        let rec = |reader, label| ReadRecord { reader: ReaderId(reader), label };
        assert!(reg.object_can_attest(ObjectIndex(3), &rec(1, l1)));
        assert!(reg.object_can_attest(ObjectIndex(3), &rec(1, l2)));
        assert!(reg.object_can_attest(ObjectIndex(3), &rec(2, l1)));
        // Specific token replayed onto a different label fails.
        assert!(!reg.object_can_attest(ObjectIndex(3), &rec(2, l2)));
        // An object that never received anything can attest nothing.
        assert!(!reg.object_can_attest(ObjectIndex(1), &rec(1, l1)));
    }
}
