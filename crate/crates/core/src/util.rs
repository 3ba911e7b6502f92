use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// `floor(p * n)`, robust to binary rounding of decimal proportions
/// (`0.29 * 100` must give 29, not 28).
pub(crate) fn proportion_count(p: f64, n: usize) -> usize {
    let x = p * n as f64;
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * (n.max(1) as f64) {
        nearest as usize
    } else {
        x.floor() as usize
    }
}

pub(crate) fn read_utf8(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|_| Error::NotUtf8 { path: path.to_path_buf() })
}

/// Mean of `values` summed in sorted order, so the result does not depend on
/// input order.
pub(crate) fn stable_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Applies `f` to every item on up to `workers` threads; results keep input
/// order.
pub(crate) fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let r = f(item);
                slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|r| r.expect("every index is visited"))
        .collect()
}
