//! Normal-ordered operator algebra for two bosonic modes.
//!
//! Operators are stored as linear combinations of normally ordered monomials
//! `adag^p a^q bdag^r b^s` with complex coefficients. Products are reduced to
//! normal order with `[a, adag] = [b, bdag] = 1`; the two modes commute. This
//! is all the machinery needed to differentiate second-order moments under a
//! quadratic Hamiltonian with linear jump operators: the adjoint master
//! equation closes on quadratic monomials plus constants, so each moment
//! derivative decomposes exactly onto the moment basis.

use std::collections::BTreeMap;

use num_complex::Complex64;

/// Normally ordered monomial `adag^p a^q bdag^r b^s`, stored as (p, q, r, s).
pub type Monomial = (u8, u8, u8, u8);

/// Identity monomial.
pub const ONE: Monomial = (0, 0, 0, 0);

/// A finite linear combination of normally ordered monomials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorSum {
    terms: BTreeMap<Monomial, Complex64>,
}

fn binomial(n: u8, k: u8) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn factorial(k: u8) -> f64 {
    (1..=k as u64).product::<u64>() as f64
}

impl OperatorSum {
    pub fn zero() -> Self {
        Self::default()
    }

    /// A single monomial with coefficient `coeff`.
    pub fn term(m: Monomial, coeff: Complex64) -> Self {
        let mut s = Self::default();
        s.add_term(m, coeff);
        s
    }

    pub fn add_term(&mut self, m: Monomial, coeff: Complex64) {
        let entry = self.terms.entry(m).or_insert(Complex64::new(0.0, 0.0));
        *entry += coeff;
        if entry.norm() == 0.0 {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&m, &c) in &other.terms {
            out.add_term(m, c);
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = Self::default();
        for (&m, &c) in &self.terms {
            out.add_term(m, factor * c);
        }
        out
    }

    /// Normal-ordered product of two sums.
    ///
    /// For each pair of monomials the inner reordering uses
    /// `a^q adag^p = sum_k k! C(q,k) C(p,k) adag^(p-k) a^(q-k)`
    /// independently per mode.
    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::default();
        for (&(p1, q1, r1, s1), &c1) in &self.terms {
            for (&(p2, q2, r2, s2), &c2) in &rhs.terms {
                let kmax_a = q1.min(p2);
                let kmax_b = s1.min(r2);
                for ka in 0..=kmax_a {
                    let ca = factorial(ka) * binomial(q1, ka) * binomial(p2, ka);
                    for kb in 0..=kmax_b {
                        let cb = factorial(kb) * binomial(s1, kb) * binomial(r2, kb);
                        let m = (p1 + p2 - ka, q1 + q2 - ka, r1 + r2 - kb, s1 + s2 - kb);
                        out.add_term(m, c1 * c2 * Complex64::new(ca * cb, 0.0));
                    }
                }
            }
        }
        out
    }

    /// Commutator `[self, rhs]`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        self.mul(rhs)
            .add(&rhs.mul(self).scale(Complex64::new(-1.0, 0.0)))
    }

    /// Hermitian conjugate: reverses each monomial (which re-normal-orders)
    /// and conjugates coefficients.
    pub fn dagger(&self) -> Self {
        let mut out = Self::default();
        for (&(p, q, r, s), &c) in &self.terms {
            // (adag^p a^q bdag^r b^s)^dag = adag^q a^p bdag^s b^r, reordered.
            let swapped = Self::term((q, p, s, r), c.conj());
            // (q, p, s, r) written directly is already normally ordered, so
            // no extra reordering is required beyond the index swap.
            out = out.add(&swapped);
        }
        out
    }

    pub fn coeff(&self, m: Monomial) -> Complex64 {
        self.terms
            .get(&m)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }
}

/// Elementary operators.
pub fn op_a() -> OperatorSum {
    OperatorSum::term((0, 1, 0, 0), Complex64::new(1.0, 0.0))
}
pub fn op_adag() -> OperatorSum {
    OperatorSum::term((1, 0, 0, 0), Complex64::new(1.0, 0.0))
}
pub fn op_b() -> OperatorSum {
    OperatorSum::term((0, 0, 0, 1), Complex64::new(1.0, 0.0))
}
pub fn op_bdag() -> OperatorSum {
    OperatorSum::term((0, 0, 1, 0), Complex64::new(1.0, 0.0))
}

/// `d<O>/dt` under the master equation
/// `rho' = i[rho, H] + kappa/2 D[a] + gamma/2 (n_th+1) D[b] + gamma/2 n_th D[bdag]`
/// expressed in adjoint (Heisenberg) form:
///
/// `d<O>/dt = i<[H, O]> + kappa/2 <2 adag O a - O adag a - adag a O> + ...`
pub fn moment_rate(
    o: &OperatorSum,
    h: &OperatorSum,
    kappa: f64,
    gamma: f64,
    n_th: f64,
) -> OperatorSum {
    let i = Complex64::new(0.0, 1.0);
    let mut rate = h.commutator(o).scale(i);

    rate = rate.add(&adjoint_dissipator(o, &op_a(), kappa));
    rate = rate.add(&adjoint_dissipator(o, &op_b(), gamma * (n_th + 1.0)));
    rate = rate.add(&adjoint_dissipator(o, &op_bdag(), gamma * n_th));
    rate
}

/// `rate/2 * <2 c^dag O c - O c^dag c - c^dag c O>` for jump operator `c`.
fn adjoint_dissipator(o: &OperatorSum, c: &OperatorSum, rate: f64) -> OperatorSum {
    if rate == 0.0 {
        return OperatorSum::zero();
    }
    let cd = c.dagger();
    let cdc = cd.mul(c);
    let two = Complex64::new(2.0, 0.0);
    let minus = Complex64::new(-1.0, 0.0);
    let sandwich = cd.mul(o).mul(c).scale(two);
    let anti = o.mul(&cdc).add(&cdc.mul(o)).scale(minus);
    sandwich.add(&anti).scale(Complex64::new(rate / 2.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn a_adag_reorders_to_number_plus_one() {
        // a adag = adag a + 1
        let prod = op_a().mul(&op_adag());
        assert_eq!(prod.coeff((1, 1, 0, 0)), c(1.0, 0.0));
        assert_eq!(prod.coeff(ONE), c(1.0, 0.0));
        assert_eq!(prod.iter().count(), 2);
    }

    #[test]
    fn modes_commute() {
        let ab = op_a().mul(&op_b());
        let ba = op_b().mul(&op_a());
        assert_eq!(ab, ba);
    }

    #[test]
    fn aa_adag_adag_reordering() {
        // a^2 adag^2 = adag^2 a^2 + 4 adag a + 2
        let a2 = op_a().mul(&op_a());
        let ad2 = op_adag().mul(&op_adag());
        let prod = a2.mul(&ad2);
        assert_eq!(prod.coeff((2, 2, 0, 0)), c(1.0, 0.0));
        assert_eq!(prod.coeff((1, 1, 0, 0)), c(4.0, 0.0));
        assert_eq!(prod.coeff(ONE), c(2.0, 0.0));
    }

    #[test]
    fn commutator_number_with_a() {
        // [adag a, a] = -a
        let n = op_adag().mul(&op_a());
        let comm = n.commutator(&op_a());
        assert_eq!(comm.coeff((0, 1, 0, 0)), c(-1.0, 0.0));
        assert_eq!(comm.iter().count(), 1);
    }

    #[test]
    fn dagger_of_ab_is_adag_bdag() {
        let ab = op_a().mul(&op_b());
        let d = ab.dagger();
        assert_eq!(d.coeff((1, 0, 1, 0)), c(1.0, 0.0));
        assert_eq!(d.iter().count(), 1);
    }

    #[test]
    fn number_decay_under_cavity_dissipation() {
        // d<adag a>/dt = -kappa <adag a> for H = 0
        let n = op_adag().mul(&op_a());
        let rate = moment_rate(&n, &OperatorSum::zero(), 0.25, 0.0, 0.0);
        assert_eq!(rate.coeff((1, 1, 0, 0)), c(-0.25, 0.0));
        assert_eq!(rate.iter().count(), 1);
    }

    #[test]
    fn thermal_pumping_of_phonon_number() {
        // d<bdag b>/dt = -gamma <bdag b> + gamma n_th for H = 0
        let n = op_bdag().mul(&op_b());
        let rate = moment_rate(&n, &OperatorSum::zero(), 0.0, 1e-3, 7.0);
        assert_abs_diff_eq!(rate.coeff((0, 0, 1, 1)).re, -1e-3, epsilon = 1e-18);
        assert_abs_diff_eq!(rate.coeff(ONE).re, 7e-3, epsilon = 1e-18);
    }

    #[test]
    fn detuning_rotates_coherence() {
        // H = -delta adag a gives d<adag b>/dt = -i delta <adag b>... with the
        // sign fixed by d<O>/dt = i<[H,O]>: [adag a, adag b] = +adag b, so
        // rate = i * (-delta) * adag b.
        let delta = 0.7;
        let h = OperatorSum::term((1, 1, 0, 0), c(-delta, 0.0));
        let o = op_adag().mul(&op_b());
        let rate = moment_rate(&o, &h, 0.0, 0.0, 0.0);
        assert_eq!(rate.coeff((1, 0, 0, 1)), c(0.0, -delta));
    }
}
