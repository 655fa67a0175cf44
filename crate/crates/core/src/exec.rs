//! Row-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (on by default) row loops are spread over the
//! rayon pool; without it every [`Exec`] runs sequentially. Both paths produce
//! identical output.

/// How raster loops are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Calls `f(row_index, row)` for every `width`-sized row of `buf`.
    pub(crate) fn for_each_row<T, F>(self, buf: &mut [T], width: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        if width == 0 {
            return;
        }
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                buf.par_chunks_mut(width)
                    .enumerate()
                    .for_each(|(r, row)| f(r, row));
            }
            _ => buf
                .chunks_mut(width)
                .enumerate()
                .for_each(|(r, row)| f(r, row)),
        }
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map_collect<I, O, F>(self, items: &[I], f: F) -> Vec<O>
    where
        I: Sync,
        O: Send,
        F: Fn(&I) -> O + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }
}
