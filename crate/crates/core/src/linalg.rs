//! Symmetric positive-definite solves for the kernel ridge systems.

use alloc::vec::Vec;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt;
use faer::{Conj, Mat, Par};

use crate::kernel::GramMatrix;

/// First jitter tried when the caller asks for none.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter the escalation reaches before giving up.
pub const JITTER_MAX: f64 = 1e-6;

/// Cholesky factor of `K + shift * I + jitter * I`.
pub struct SpdFactor {
    // lower triangle holds L; the strict upper triangle is unused
    l: Mat<f64>,
    jitter: f64,
}

/// Factorization failed for every jitter in the schedule; carries the last one tried.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorFailure {
    pub max_jitter: f64,
}

impl core::fmt::Debug for SpdFactor {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SpdFactor")
            .field("dim", &self.dim())
            .field("jitter", &self.jitter)
            .finish()
    }
}

impl SpdFactor {
    /// Factors `gram + (shift + jitter) I`, escalating the jitter by 10x from
    /// `jitter` (or [`JITTER_START`] when zero) until it exceeds
    /// `max(JITTER_MAX, jitter)`.
    pub fn new(gram: &GramMatrix, shift: f64, jitter: f64) -> Result<Self, FactorFailure> {
        let (n, m) = gram.shape();
        assert_eq!(n, m, "SpdFactor needs a square matrix");
        Self::from_fn(n, shift, jitter, |i, j| gram.get(i, j))
    }

    /// As [`SpdFactor::new`] for the symmetric matrix with entries `entry(i, j)`.
    pub fn from_fn(
        n: usize,
        shift: f64,
        jitter: f64,
        entry: impl Fn(usize, usize) -> f64,
    ) -> Result<Self, FactorFailure> {
        let ceiling = JITTER_MAX.max(jitter);
        let mut buf = MemBuffer::new(llt::factor::cholesky_in_place_scratch::<f64>(
            n,
            Par::Seq,
            Default::default(),
        ));
        let mut jit = jitter;
        loop {
            let diag = shift + jit;
            let mut l = Mat::from_fn(n, n, |i, j| {
                if j > i {
                    0.0
                } else if i == j {
                    entry(i, i) + diag
                } else {
                    entry(i, j)
                }
            });
            let ok = llt::factor::cholesky_in_place(
                l.as_mut(),
                Default::default(),
                Par::Seq,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .is_ok();
            if ok {
                return Ok(SpdFactor { l, jitter: jit });
            }
            let next = if jit < JITTER_START { JITTER_START } else { jit * 10.0 };
            if next > ceiling * (1.0 + 1e-12) {
                return Err(FactorFailure { max_jitter: jit });
            }
            jit = next;
        }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Jitter that made the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.dim());
        let mut x = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let mut buf = MemBuffer::new(llt::solve::solve_in_place_scratch::<f64>(
            rhs.len(),
            1,
            Par::Seq,
        ));
        llt::solve::solve_in_place_with_conj(
            self.l.as_ref(),
            Conj::No,
            x.as_mut(),
            Par::Seq,
            MemStack::new(&mut buf),
        );
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }
}
