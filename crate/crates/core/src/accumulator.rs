//! Mergeable moment sums recorded along phase-space trajectories.
//!
//! Every observable the crate reports is a function of ensemble averages of
//! low-order monomials in the four phase-space variables. [`Monomials`]
//! evaluates the full monomial set at one state; [`MomentAccumulator`] sums
//! monomial *deviations* from a fixed reference profile.
//!
//! The reference shift is purely numerical: averages and variances are
//! reconstructed exactly in terms of the reference plus mean deviations, so
//! any reference yields the same statistics. Shifting by a typical
//! trajectory keeps vacuum-scale variances (order one) from drowning in the
//! square of a bright carrier amplitude (order 1e10) during summation. Raw
//! monomial sums are recoverable as `count * reference + deviation sum`.
//!
//! Merging accumulators adds their sums, so partial accumulations over
//! disjoint trajectory sets combine exactly like one pass over the union,
//! up to floating-point re-association in the last bits. Runners that need
//! bit-identical output across worker counts must merge in a fixed order;
//! see [`crate::ensemble`].

use crate::sde::PhaseSpaceState;
use num_complex::Complex64;

/// The monomial set: the four variables, all ten distinct pairwise
/// products, the quartic intensity square, and the two intensity-mirror
/// cubics needed for position/intensity statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Monomials {
    pub a: Complex64,
    pub ap: Complex64,
    pub b: Complex64,
    pub bp: Complex64,
    pub aa: Complex64,
    pub aap: Complex64,
    pub ab: Complex64,
    pub abp: Complex64,
    pub apap: Complex64,
    pub apb: Complex64,
    pub apbp: Complex64,
    pub bb: Complex64,
    pub bbp: Complex64,
    pub bpbp: Complex64,
    pub nn: Complex64,
    pub nb: Complex64,
    pub nbp: Complex64,
}

macro_rules! for_each_monomial {
    ($macro_cb:ident) => {
        $macro_cb!(a, ap, b, bp, aa, aap, ab, abp, apap, apb, apbp, bb, bbp, bpbp, nn, nb, nbp);
    };
}

impl Monomials {
    /// Evaluates every monomial at one phase-space state.
    pub fn of_state(s: &PhaseSpaceState) -> Self {
        let a = s.alpha;
        let ap = s.alpha_plus;
        let b = s.beta;
        let bp = s.beta_plus;
        let aap = a * ap;
        Self {
            a,
            ap,
            b,
            bp,
            aa: a * a,
            aap,
            ab: a * b,
            abp: a * bp,
            apap: ap * ap,
            apb: ap * b,
            apbp: ap * bp,
            bb: b * b,
            bbp: b * bp,
            bpbp: bp * bp,
            nn: aap * aap,
            nb: aap * b,
            nbp: aap * bp,
        }
    }

    /// Component-wise difference `self - other`.
    pub fn sub(&self, other: &Self) -> Self {
        let mut out = *self;
        macro_rules! sub_field {
            ($($f:ident),*) => { $( out.$f = self.$f - other.$f; )* };
        }
        for_each_monomial!(sub_field);
        out
    }

    /// Component-wise sum accumulation.
    pub fn add_assign(&mut self, other: &Self) {
        macro_rules! add_field {
            ($($f:ident),*) => { $( self.$f += other.$f; )* };
        }
        for_each_monomial!(add_field);
    }

    /// Component-wise scale.
    pub fn scale(&self, factor: f64) -> Self {
        let mut out = *self;
        macro_rules! scale_field {
            ($($f:ident),*) => { $( out.$f = self.$f * factor; )* };
        }
        for_each_monomial!(scale_field);
        out
    }

    /// Largest absolute difference over all components, for tests and
    /// consistency checks.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        macro_rules! diff_field {
            ($($f:ident),*) => { $( worst = worst.max((self.$f - other.$f).norm()); )* };
        }
        for_each_monomial!(diff_field);
        worst
    }
}

/// Sum of monomial deviations from a shared reference over a sample of
/// trajectories at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentAccumulator {
    /// Number of accumulated states.
    pub count: u64,
    /// Component-wise sums of `Monomials::of_state(state) - reference`.
    pub deviation_sum: Monomials,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one state, measured against `reference`.
    pub fn accumulate(&mut self, state: &PhaseSpaceState, reference: &Monomials) {
        let dev = Monomials::of_state(state).sub(reference);
        self.deviation_sum.add_assign(&dev);
        self.count += 1;
    }

    /// Adds an already-computed monomial deviation.
    pub fn accumulate_deviation(&mut self, deviation: &Monomials) {
        self.deviation_sum.add_assign(deviation);
        self.count += 1;
    }

    /// Combines two accumulators measured against the same reference.
    pub fn merge(&mut self, other: &Self) {
        self.deviation_sum.add_assign(&other.deviation_sum);
        self.count += other.count;
    }

    /// Mean deviation from the reference, `deviation_sum / count`.
    pub fn mean_deviation(&self) -> Option<Monomials> {
        if self.count == 0 {
            return None;
        }
        Some(self.deviation_sum.scale(1.0 / self.count as f64))
    }

    /// Mean monomial values `reference + deviation_sum / count`.
    pub fn mean(&self, reference: &Monomials) -> Option<Monomials> {
        if self.count == 0 {
            return None;
        }
        let mut out = self.deviation_sum.scale(1.0 / self.count as f64);
        macro_rules! add_ref {
            ($($f:ident),*) => { $( out.$f += reference.$f; )* };
        }
        for_each_monomial!(add_ref);
        Some(out)
    }
}
