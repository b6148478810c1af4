//! Replicate fan-out. Replicate `i` always draws from `root.split(i)`, and
//! results come back in index order, so output never depends on the number
//! of workers.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::rng::RandomStream;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Runs every subsequent fan-out on the calling thread when `on` is true.
pub fn force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Evaluates `f(i, &mut root.split(i))` for `i in 0..n`.
pub fn replicate<T, F>(root: &RandomStream, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut RandomStream) -> T + Sync + Send,
{
    map_indexed(n, |i| {
        let mut s = root.split(i as u64);
        f(i, &mut s)
    })
}

/// Runs `f` on a pool with `workers` threads. One worker means the plain
/// sequential path.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers <= 1 {
        let prev = FORCE_SEQUENTIAL.swap(true, Ordering::SeqCst);
        let out = f();
        FORCE_SEQUENTIAL.store(prev, Ordering::SeqCst);
        return out;
    }
    #[cfg(feature = "parallel")]
    {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(f);
        }
    }
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved() {
        let v = map_indexed(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }

    #[test]
    fn replicate_worker_invariant() {
        let root = RandomStream::new(77);
        let a = with_workers(1, || replicate(&root, 257, |_, s| s.normal()));
        let b = with_workers(4, || replicate(&root, 257, |_, s| s.normal()));
        assert_eq!(a, b);
    }
}
