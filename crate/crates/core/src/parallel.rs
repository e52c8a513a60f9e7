//! Index-ordered map over scan points, data-parallel when the `parallel`
//! feature is on.

use crate::{Error, Result};

/// Name of the environment variable capping the worker count.
pub const THREADS_ENV: &str = "XCAVITY_THREADS";

/// Whether the crate was built with the `parallel` feature.
pub const PARALLEL: bool = cfg!(feature = "parallel");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// `f(0), f(1), …, f(n-1)` collected in index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Cap the global worker pool. Has no effect without the `parallel`
/// feature or after the pool has started.
pub fn configure_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(Error::Input("thread count must be >= 1".into()));
    }
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(())
}

/// Workers available to [`Execution::Parallel`].
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Apply `XCAVITY_THREADS` if set; returns the parsed value.
pub fn configure_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("{THREADS_ENV}={v} is not a positive integer")))?;
            configure_threads(n)?;
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}
