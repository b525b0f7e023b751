use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    /// QAM constellation size.
    pub order: u32,
    pub code_rate: f64,
    /// Information bits per symbol per subcarrier.
    pub efficiency: f64,
}

/// Modulation and coding ladder, strictly increasing in efficiency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsTable {
    pub entries: Vec<McsEntry>,
    /// Multiplier applied to `log2(1 + sinr)` before the lookup.
    pub margin: f64,
}

impl Default for McsTable {
    /// Orders {4, 16, 64, 256} x rates {1/2, 5/8, 3/4}; on equal efficiency
    /// the lower order is kept, then the ten lowest efficiencies.
    fn default() -> Self {
        let mut all: Vec<McsEntry> = [4u32, 16, 64, 256]
            .iter()
            .flat_map(|&order| {
                [0.5, 0.625, 0.75].map(|code_rate| McsEntry {
                    order,
                    code_rate,
                    efficiency: f64::from(order.ilog2()) * code_rate,
                })
            })
            .collect();
        all.sort_by(|a, b| a.efficiency.total_cmp(&b.efficiency).then(a.order.cmp(&b.order)));
        all.dedup_by(|later, kept| later.efficiency == kept.efficiency);
        all.truncate(10);
        McsTable {
            entries: all,
            margin: 1.0,
        }
    }
}

impl McsTable {
    /// Highest entry supported at `sinr` (linear).
    pub fn select(&self, sinr: f64) -> Option<&McsEntry> {
        let budget = (1.0 + sinr.max(0.0)).log2() * self.margin;
        self.entries.iter().rev().find(|e| e.efficiency <= budget)
    }
}

/// Sum over streams of the selected efficiency.
pub fn probe_throughput(per_stream_sinr: &[f64], mcs: &McsTable) -> f64 {
    per_stream_sinr
        .iter()
        .map(|&s| mcs.select(s).map_or(0.0, |e| e.efficiency))
        .sum()
}
