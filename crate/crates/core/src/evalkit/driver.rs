//! Bounded fan-out over instances. Results come back in input order no
//! matter which worker finished first.

/// How per-instance work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// A dedicated pool of this many threads. Needs the `parallel` feature;
    /// without it this runs sequentially.
    Parallel(usize),
}

impl Execution {
    pub fn for_parallelism(parallelism: usize) -> Self {
        if parallelism <= 1 {
            Execution::Sequential
        } else {
            Execution::Parallel(parallelism)
        }
    }
}

pub fn fan_out<T, R, F>(items: &[T], execution: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    match execution {
        Execution::Sequential => sequential(items, &f),
        Execution::Parallel(threads) => parallel(items, threads, f),
    }
}

fn sequential<T, R, F>(items: &[T], f: &F) -> Vec<R>
where
    F: Fn(usize, &T) -> R,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

#[cfg(feature = "parallel")]
fn parallel<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()),
        Err(e) => {
            log::warn!("cannot start a {threads}-thread pool ({e}); running sequentially");
            sequential(items, &f)
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, R, F>(items: &[T], _threads: usize, f: F) -> Vec<R>
where
    F: Fn(usize, &T) -> R,
{
    sequential(items, &f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..500).collect();
        let seq = fan_out(&items, Execution::Sequential, |i, x| (i as u64) * 1000 + x);
        let par = fan_out(&items, Execution::Parallel(8), |i, x| (i as u64) * 1000 + x);
        assert_eq!(seq, par);
    }
}
