//! The simulated DAG and its visibility-aware tip set.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::stream::SeededStream;

pub type TxId = u32;

const NOT_A_TIP: u32 = u32::MAX;

/// Who issued a transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Issuer {
    Honest,
    Attacker,
    Observed,
}

/// One or two approved transactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parents {
    ids: [TxId; 2],
    len: u8,
}

impl Parents {
    pub fn one(a: TxId) -> Self {
        Self { ids: [a, a], len: 1 }
    }

    pub fn two(a: TxId, b: TxId) -> Self {
        assert_ne!(a, b, "parents must be distinct");
        Self { ids: [a, b], len: 2 }
    }

    pub fn as_slice(&self) -> &[TxId] {
        &self.ids[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, id: TxId) -> bool {
        self.as_slice().contains(&id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub id: TxId,
    pub issue_time: f64,
    pub reveal_time: f64,
    /// Empty only for genesis.
    pub parents: Option<Parents>,
    pub own_weight: u32,
    pub issuer: Issuer,
}

/// The DAG as seen by the network at time `now`.
///
/// A transaction is a visible tip iff it has revealed and no revealed
/// transaction approves it. Transactions are issued against the visible tip
/// set and stay private for `reveal_delay` seconds, so one tip can be
/// approved by several transactions issued inside the same window.
#[derive(Debug, Clone)]
pub struct LedgerState {
    reveal_delay: f64,
    transactions: Vec<Transaction>,
    tips: Vec<TxId>,
    tip_pos: Vec<u32>,
    covered: Vec<bool>,
    pending: VecDeque<TxId>,
    revealed: usize,
    covered_count: usize,
    now: f64,
}

impl LedgerState {
    /// A ledger holding only the genesis transaction, revealed at `t = 0`.
    pub fn with_genesis(reveal_delay: f64) -> Self {
        let genesis = Transaction {
            id: 0,
            issue_time: -reveal_delay,
            reveal_time: 0.0,
            parents: None,
            own_weight: 1,
            issuer: Issuer::Honest,
        };
        Self {
            reveal_delay,
            transactions: vec![genesis],
            tips: vec![0],
            tip_pos: vec![0],
            covered: vec![false],
            pending: VecDeque::new(),
            revealed: 1,
            covered_count: 0,
            now: 0.0,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn reveal_delay(&self) -> f64 {
        self.reveal_delay
    }

    pub fn visible_tips(&self) -> &[TxId] {
        &self.tips
    }

    pub fn tip_count(&self) -> usize {
        self.tips.len()
    }

    pub fn is_tip(&self, id: TxId) -> bool {
        self.tip_pos
            .get(id as usize)
            .is_some_and(|&p| p != NOT_A_TIP)
    }

    pub fn transaction(&self, id: TxId) -> &Transaction {
        &self.transactions[id as usize]
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    pub fn revealed_count(&self) -> usize {
        self.revealed
    }

    /// Revealed transactions approved by at least one revealed transaction.
    pub fn covered_count(&self) -> usize {
        self.covered_count
    }

    pub fn next_reveal_time(&self) -> Option<f64> {
        self.pending
            .front()
            .map(|&id| self.transactions[id as usize].reveal_time)
    }

    /// Issues a transaction at `time`; it becomes visible at
    /// `time + reveal_delay`.
    pub fn issue(&mut self, time: f64, parents: Parents, issuer: Issuer) -> TxId {
        debug_assert!(time >= self.now);
        let id = self.transactions.len() as TxId;
        debug_assert!(parents.as_slice().iter().all(|&p| p < id));
        self.transactions.push(Transaction {
            id,
            issue_time: time,
            reveal_time: time + self.reveal_delay,
            parents: Some(parents),
            own_weight: 1,
            issuer,
        });
        self.tip_pos.push(NOT_A_TIP);
        self.covered.push(false);
        self.pending.push_back(id);
        self.now = time;
        id
    }

    /// Reveals the earliest pending transaction. Reveal times are issue
    /// times shifted by a constant, so the queue is already in reveal order
    /// and ties fall to the lower id.
    pub fn reveal_next(&mut self) -> Option<TxId> {
        let id = self.pending.pop_front()?;
        let tx = &self.transactions[id as usize];
        self.now = self.now.max(tx.reveal_time);
        if let Some(parents) = tx.parents {
            for &p in parents.as_slice() {
                if !self.covered[p as usize] {
                    self.covered[p as usize] = true;
                    self.covered_count += 1;
                }
                self.remove_tip(p);
            }
        }
        self.add_tip(id);
        self.revealed += 1;
        Some(id)
    }

    /// Processes every reveal with `reveal_time <= t` and advances the clock.
    pub fn advance_to(&mut self, t: f64) {
        while self.next_reveal_time().is_some_and(|r| r <= t) {
            self.reveal_next();
        }
        self.now = self.now.max(t);
    }

    fn add_tip(&mut self, id: TxId) {
        self.tip_pos[id as usize] = self.tips.len() as u32;
        self.tips.push(id);
    }

    fn remove_tip(&mut self, id: TxId) {
        let pos = self.tip_pos[id as usize];
        if pos == NOT_A_TIP {
            return;
        }
        let last = *self.tips.last().expect("tip set holds id");
        self.tips.swap_remove(pos as usize);
        if last != id {
            self.tip_pos[last as usize] = pos;
        }
        self.tip_pos[id as usize] = NOT_A_TIP;
    }

    /// Recomputes the tip set from its definition and checks the cached
    /// structures against it. Linear in the ledger size; for tests.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let now = self.now;
        let n = self.transactions.len();
        let mut approved_by_revealed = vec![false; n];
        let mut revealed = 0;
        for tx in &self.transactions {
            if tx.reveal_time <= now {
                revealed += 1;
                if let Some(parents) = tx.parents {
                    for &p in parents.as_slice() {
                        if p >= tx.id {
                            return Err(format!("tx {} approves later tx {p}", tx.id));
                        }
                        approved_by_revealed[p as usize] = true;
                    }
                }
            }
            if (tx.reveal_time - tx.issue_time - self.reveal_delay).abs() > 1e-9 {
                return Err(format!("tx {} has inconsistent reveal time", tx.id));
            }
        }
        for tx in &self.transactions {
            let should = tx.reveal_time <= now && !approved_by_revealed[tx.id as usize];
            if should != self.is_tip(tx.id) {
                return Err(format!("tx {} tip membership {} != {should}", tx.id, !should));
            }
        }
        if revealed != self.revealed {
            return Err(format!("revealed count {} != {revealed}", self.revealed));
        }
        if self.revealed != self.tips.len() + self.covered_count {
            return Err("revealed != tips + covered".into());
        }
        if self.revealed >= 1 && self.tips.is_empty() {
            return Err("empty tip set after genesis".into());
        }
        Ok(())
    }
}

/// Picks parents for a new transaction: two distinct visible tips uniformly
/// without replacement, or the single tip when only one is visible.
pub fn tip_select(state: &LedgerState, stream: &mut SeededStream) -> Result<Parents> {
    let tips = state.visible_tips();
    match tips.len() {
        0 => Err(Error::EmptyTipSet),
        1 => Ok(Parents::one(tips[0])),
        n => {
            let i = stream.index(n);
            let mut j = stream.index(n - 1);
            if j >= i {
                j += 1;
            }
            Ok(Parents::two(tips[i], tips[j]))
        }
    }
}
