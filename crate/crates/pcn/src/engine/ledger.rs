//! Matrix-multiplication accounting.
//!
//! The complexity story of the training schedules is told in two units:
//!
//! * **MM** — one matrix multiplication performed during training updates.
//! * **SMM** — one *synchronous* round of matrix multiplications: a phase
//!   in which every multiplication is independent and could run in
//!   parallel, one per layer. A phase with k ≥ 1 independent products
//!   costs k MMs but 1 SMM.
//!
//! By convention the ledger counts only inference-phase products: the
//! per-layer predictions of a refresh phase and the transposed products of
//! a value-update phase. Weight-update outer products, feedforward
//! initialization, and evaluation passes are deliberately uncounted — the
//! published per-update costs (iPC 2 SMMs, classic PC 2T, the
//! zero-divergence schedule 2(L-1), backprop 2L-1) are exact only under
//! this reading, and the audit in [`crate::engine::count_audit`] checks
//! them exactly, not approximately.

/// What a recorded phase spent its time on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    /// Value updates (weight commits fused into the same phase ride along).
    Value,
    /// A weight-only phase; contributes no counted multiplications.
    Weight,
    /// Prediction/error refresh.
    Predict,
}

/// Running totals for one training run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepLedger {
    /// Counted (inference-phase) matrix multiplications.
    pub mm_count: u64,
    /// Synchronous phases containing at least one counted multiplication.
    pub smm_count: u64,
    /// Completed full-network weight updates.
    pub weight_updates: u64,
    /// Engine steps that moved values.
    pub inference_steps: u64,
    /// Wall time spent in value phases (fused weight work included).
    pub value_ns: u64,
    /// Wall time spent in weight-only phases.
    pub weight_ns: u64,
    /// Wall time spent in refresh phases.
    pub predict_ns: u64,
}

impl StepLedger {
    pub fn new() -> StepLedger {
        StepLedger::default()
    }

    /// Record one synchronous phase. A phase whose counted-MM total is zero
    /// (weight commits only) adds wall time but neither MMs nor an SMM.
    pub fn record_phase(&mut self, kind: PhaseKind, counted_mm: u64, ns: u64) {
        if counted_mm > 0 {
            self.mm_count += counted_mm;
            self.smm_count += 1;
        }
        match kind {
            PhaseKind::Value => self.value_ns += ns,
            PhaseKind::Weight => self.weight_ns += ns,
            PhaseKind::Predict => self.predict_ns += ns,
        }
    }

    /// Mean counted MMs per completed weight update, when any completed.
    pub fn mm_per_update(&self) -> Option<f64> {
        (self.weight_updates > 0).then(|| self.mm_count as f64 / self.weight_updates as f64)
    }

    /// Mean SMMs per completed weight update, when any completed.
    pub fn smm_per_update(&self) -> Option<f64> {
        (self.weight_updates > 0).then(|| self.smm_count as f64 / self.weight_updates as f64)
    }

    pub fn total_ns(&self) -> u64 {
        self.value_ns + self.weight_ns + self.predict_ns
    }

    pub fn reset(&mut self) {
        *self = StepLedger::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_only_phases_cost_no_smm() {
        let mut ledger = StepLedger::new();
        ledger.record_phase(PhaseKind::Value, 3, 10);
        ledger.record_phase(PhaseKind::Weight, 0, 5);
        ledger.record_phase(PhaseKind::Predict, 4, 7);
        assert_eq!(ledger.mm_count, 7);
        assert_eq!(ledger.smm_count, 2);
        assert_eq!(ledger.value_ns, 10);
        assert_eq!(ledger.weight_ns, 5);
        assert_eq!(ledger.predict_ns, 7);
        assert_eq!(ledger.total_ns(), 22);
    }

    #[test]
    fn per_update_means_need_updates() {
        let mut ledger = StepLedger::new();
        ledger.record_phase(PhaseKind::Value, 2, 0);
        assert_eq!(ledger.mm_per_update(), None);
        ledger.weight_updates = 2;
        assert_eq!(ledger.mm_per_update(), Some(1.0));
        assert_eq!(ledger.smm_per_update(), Some(0.5));
    }
}
