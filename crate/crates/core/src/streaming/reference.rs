use serde::{Deserialize, Serialize};

/// A published forward-pass time `τ(1, 10240)` for comparison in reports.
/// These describe other hardware and are never host expectations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTiming {
    pub model: &'static str,
    pub hardware: &'static str,
    pub batch_size: usize,
    pub signal_length: usize,
    pub tau_s: f64,
}

pub fn reference_timings() -> Vec<ReferenceTiming> {
    let row = |model, hardware, ms: f64| ReferenceTiming { model, hardware, batch_size: 1, signal_length: 10240, tau_s: ms / 1000.0 };
    vec![
        row("wavenet", "server-gpu", 28.0),
        row("transformer", "server-gpu", 439.0),
        row("decoder", "server-gpu", 4.0),
        row("wavenet", "edge-gpu", 467.0),
        row("transformer", "edge-gpu", 2905.0),
        row("decoder", "edge-gpu", 25.0),
    ]
}
