use crate::cost::Cost;

/// Summary of a batch of total costs from repeated runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostStats {
    pub count: usize,
    pub best: Cost,
    /// Lower median: element at index (count - 1) / 2 after sorting.
    pub median: Cost,
    pub mean_log10: f64,
    /// Sample standard deviation (n - 1 denominator) of log10 cost; 0 for a
    /// single sample.
    pub std_log10: f64,
}

/// Computes summary statistics over one or more total costs.
pub fn compute_stats(costs: &[Cost]) -> Option<CostStats> {
    if costs.is_empty() {
        return None;
    }
    let mut sorted: Vec<&Cost> = costs.iter().collect();
    sorted.sort();
    let best = sorted[0].clone();
    let median = sorted[(sorted.len() - 1) / 2].clone();
    let logs: Vec<f64> = costs.iter().map(Cost::log10).collect();
    let mean_log10 = logs.iter().sum::<f64>() / logs.len() as f64;
    let std_log10 = if logs.len() < 2 {
        0.0
    } else {
        let var = logs.iter().map(|l| (l - mean_log10).powi(2)).sum::<f64>() / (logs.len() - 1) as f64;
        var.sqrt()
    };
    Some(CostStats {
        count: costs.len(),
        best,
        median,
        mean_log10,
        std_log10,
    })
}
