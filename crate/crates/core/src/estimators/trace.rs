use nalgebra::DMatrix;

/// Default number of time-convergence checkpoints.
pub const DEFAULT_CHECKPOINTS: usize = 200;

/// An estimate evaluated on the data up to `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub time: f64,
    pub value: DMatrix<f64>,
}

/// Up to `count` log-spaced increment counts in `[1, total]`, strictly
/// increasing and always ending at `total`. Empty when `count == 0`.
pub fn checkpoint_steps(total: usize, count: usize) -> Vec<usize> {
    if count == 0 || total == 0 {
        return Vec::new();
    }
    if count == 1 {
        return vec![total];
    }
    let ln_total = (total as f64).ln();
    let mut out: Vec<usize> = (0..count)
        .map(|i| {
            let s = (ln_total * i as f64 / (count - 1) as f64).exp().round() as usize;
            s.clamp(1, total)
        })
        .collect();
    out.dedup();
    if *out.last().unwrap() != total {
        out.push(total);
    }
    out
}

/// Latest point of `trace` with time at most `time` (plus a relative slack).
pub(crate) fn lookup(trace: &[TracePoint], time: f64) -> Option<&TracePoint> {
    trace
        .iter()
        .take_while(|p| p.time <= time * (1.0 + 1e-12))
        .last()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoints_are_log_spaced_and_end_at_total() {
        let c = checkpoint_steps(1_000_000, 200);
        assert_eq!(c[0], 1);
        assert_eq!(*c.last().unwrap(), 1_000_000);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert!(c.len() <= 200);
        assert!(checkpoint_steps(10, 0).is_empty());
        assert_eq!(checkpoint_steps(5, 200), vec![1, 2, 3, 4, 5]);
        assert_eq!(checkpoint_steps(5, 1), vec![5]);
    }
}
