//! Canonical reduction of the factorization solution.
//!
//! With `sigma = kappa^{-1/2} [e^{kappa r} C + e^{-kappa r} D]`, channels are
//! reordered so that the first `R = rank C` rows of `C` are independent
//! (largest threshold first), and a right multiplier `T` brings the pair into
//!
//! ```text
//! C T = | I   0 |      D T = | X0  -Q0^T |
//!       | Q0  0 |            | 0    I    |
//! ```
//!
//! Everything in this module works in the reordered basis and permutes back
//! to the caller's channel order at the boundary.

use crate::error::{Error, Result};
use crate::linalg::{
    asymmetry, max_abs, rows_rank, spectral_norm, unpermute, RMatrix, RANK_TOLERANCE,
};

use super::u0::relative_det;
use super::FactorizationSpec;

/// `(R, reorder, Q0, X0)`; `reorder[a]` is the caller's channel index of
/// reordered channel `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalParametrization {
    rank: usize,
    reorder: Vec<usize>,
    q0: RMatrix,
    x0: RMatrix,
}

pub(crate) fn descending_kappa_order(spec: &FactorizationSpec) -> Vec<usize> {
    let mut order: Vec<usize> = (0..spec.n_channels()).collect();
    order.sort_by(|&a, &b| spec.kappa()[b].total_cmp(&spec.kappa()[a]));
    order
}

impl CanonicalParametrization {
    pub fn new(
        rank: usize,
        reorder: Vec<usize>,
        q0: RMatrix,
        x0: RMatrix,
        spec: &FactorizationSpec,
    ) -> Result<Self> {
        let n = spec.n_channels();
        if rank > n {
            return Err(Error::InvalidParametrization(format!(
                "rank {rank} exceeds channel count {n}"
            )));
        }
        if !crate::linalg::is_permutation(&reorder, n) {
            return Err(Error::InvalidParametrization(format!(
                "{reorder:?} is not a channel permutation"
            )));
        }
        if q0.shape() != (n - rank, rank) {
            return Err(Error::InvalidParametrization(format!(
                "Q0 must be {}x{rank}, got {}x{}",
                n - rank,
                q0.nrows(),
                q0.ncols()
            )));
        }
        if x0.shape() != (rank, rank) {
            return Err(Error::InvalidParametrization(format!(
                "X0 must be {rank}x{rank}, got {}x{}",
                x0.nrows(),
                x0.ncols()
            )));
        }
        if x0 != x0.transpose() {
            return Err(Error::InvalidParametrization("X0 must be symmetric".into()));
        }
        if q0.iter().chain(x0.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParametrization("non-finite entry in Q0 or X0".into()));
        }
        let param = Self {
            rank,
            reorder,
            q0,
            x0,
        };
        let kappa = param.reordered_kappa(spec);
        for j in 0..n - rank {
            for i in 0..rank {
                if kappa[i] < kappa[rank + j] && param.q0[(j, i)] != 0.0 {
                    return Err(Error::InvalidParametrization(format!(
                        "Q0[{j}][{i}] must vanish: kappa'_{i} < kappa''_{j}"
                    )));
                }
            }
        }
        Ok(param)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn reorder(&self) -> &[usize] {
        &self.reorder
    }

    pub fn q0(&self) -> &RMatrix {
        &self.q0
    }

    pub fn x0(&self) -> &RMatrix {
        &self.x0
    }

    pub fn reordered_kappa(&self, spec: &FactorizationSpec) -> Vec<f64> {
        self.reorder.iter().map(|&c| spec.kappa()[c]).collect()
    }

    /// Whether `q0[j][i]` may be non-zero (`kappa'_i > kappa''_j`).
    pub fn q_entry_is_free(&self, spec: &FactorizationSpec, j: usize, i: usize) -> bool {
        let kappa = self.reordered_kappa(spec);
        kappa[i] > kappa[self.rank + j]
    }

    /// Number of independent real parameters for this rank and ordering:
    /// the upper triangle of `X0` plus the free entries of `Q0`.
    pub fn parameter_count(&self, spec: &FactorizationSpec) -> usize {
        let r = self.rank;
        let free_q = (0..spec.n_channels() - r)
            .flat_map(|j| (0..r).map(move |i| (j, i)))
            .filter(|&(j, i)| self.q_entry_is_free(spec, j, i))
            .count();
        r * (r + 1) / 2 + free_q
    }

    /// Free parameters as a flat vector: free `Q0` entries row by row, then the
    /// upper triangle of `X0` row by row.
    pub fn free_parameters(&self, spec: &FactorizationSpec) -> Vec<f64> {
        let mut out = Vec::new();
        for j in 0..self.q0.nrows() {
            for i in 0..self.rank {
                if self.q_entry_is_free(spec, j, i) {
                    out.push(self.q0[(j, i)]);
                }
            }
        }
        for i in 0..self.rank {
            for j in i..self.rank {
                out.push(self.x0[(i, j)]);
            }
        }
        out
    }

    /// Inverse of [`free_parameters`](Self::free_parameters) for the same rank and ordering.
    pub fn with_free_parameters(&self, spec: &FactorizationSpec, values: &[f64]) -> Result<Self> {
        if values.len() != self.parameter_count(spec) {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(spec),
                got: values.len(),
            });
        }
        let mut it = values.iter().copied();
        let mut q0 = RMatrix::zeros(self.q0.nrows(), self.rank);
        for j in 0..q0.nrows() {
            for i in 0..self.rank {
                if self.q_entry_is_free(spec, j, i) {
                    q0[(j, i)] = it.next().unwrap();
                }
            }
        }
        let mut x0 = RMatrix::zeros(self.rank, self.rank);
        for i in 0..self.rank {
            for j in i..self.rank {
                let v = it.next().unwrap();
                x0[(i, j)] = v;
                x0[(j, i)] = v;
            }
        }
        Self::new(self.rank, self.reorder.clone(), q0, x0, spec)
    }

    /// `X(r) = e^{-kappa' r} X0 e^{-kappa' r}` and `Q(r) = e^{kappa'' r} Q0 e^{-kappa' r}`.
    fn decayed_blocks(&self, kappa: &[f64], r: f64) -> (RMatrix, RMatrix) {
        let rank = self.rank;
        let x = RMatrix::from_fn(rank, rank, |i, j| {
            self.x0[(i, j)] * (-(kappa[i] + kappa[j]) * r).exp()
        });
        let q = RMatrix::from_fn(self.q0.nrows(), rank, |j, i| {
            let q0 = self.q0[(j, i)];
            if q0 == 0.0 {
                0.0
            } else {
                q0 * ((kappa[rank + j] - kappa[i]) * r).exp()
            }
        });
        (x, q)
    }

    /// `Y(r) = I + X(r) + Q(r)^T Q(r)`; `det sigma` has the sign of `det Y`.
    pub fn y_matrix(&self, spec: &FactorizationSpec, r: f64) -> RMatrix {
        let kappa = self.reordered_kappa(spec);
        let (x, q) = self.decayed_blocks(&kappa, r);
        RMatrix::identity(self.rank, self.rank) + x + q.transpose() * q
    }

    /// Slowest exponential rate at which `U(r)` approaches `U(inf)`.
    pub fn decay_rate(&self, spec: &FactorizationSpec) -> f64 {
        let kappa = self.reordered_kappa(spec);
        let mut rate = f64::INFINITY;
        for i in 0..self.rank {
            for j in 0..self.rank {
                if self.x0[(i, j)] != 0.0 {
                    rate = rate.min(kappa[i] + kappa[j]);
                }
            }
            for j in 0..self.q0.nrows() {
                if self.q0[(j, i)] != 0.0 {
                    rate = rate.min(kappa[i] - kappa[self.rank + j]);
                }
            }
        }
        if rate.is_finite() {
            rate
        } else {
            2.0 * spec.kappa_min()
        }
    }

    /// Asymptotic superpotential `diag(+kappa', -kappa'')` in the caller's order.
    pub fn u_at_infinity(&self, spec: &FactorizationSpec) -> RMatrix {
        let kappa = self.reordered_kappa(spec);
        let n = kappa.len();
        let diag = RMatrix::from_fn(n, n, |a, b| {
            if a != b {
                0.0
            } else if a < self.rank {
                kappa[a]
            } else {
                -kappa[a]
            }
        });
        unpermute(&diag, &self.reorder)
    }

    /// Canonical factorization solution and its derivative, in caller order.
    /// Columns are scaled by `diag(e^{kappa' r}, e^{-kappa'' r})`.
    pub fn sigma(&self, spec: &FactorizationSpec, r: f64) -> (RMatrix, RMatrix) {
        let kappa = self.reordered_kappa(spec);
        let n = kappa.len();
        let rank = self.rank;
        let (x, q) = self.decayed_blocks(&kappa, r);
        let block = |sign: f64| {
            RMatrix::from_fn(n, n, |a, b| match (a < rank, b < rank) {
                (true, true) => {
                    let delta = if a == b { 1.0 } else { 0.0 };
                    delta + sign * x[(a, b)]
                }
                (true, false) => -sign * q[(b - rank, a)],
                (false, true) => q[(a - rank, b)],
                (false, false) => {
                    if a == b {
                        sign
                    } else {
                        0.0
                    }
                }
            })
        };
        let growth: Vec<f64> = (0..n)
            .map(|b| {
                if b < rank {
                    (kappa[b] * r).exp()
                } else {
                    (-kappa[b] * r).exp()
                }
            })
            .collect();
        let scale = |m: RMatrix, power: f64| {
            RMatrix::from_fn(n, n, |a, b| kappa[a].powf(power) * m[(a, b)] * growth[b])
        };
        let sigma = scale(block(1.0), -0.5);
        let sigma_prime = scale(block(-1.0), 0.5);
        let permute_rows = |m: RMatrix| {
            let mut out = RMatrix::zeros(n, n);
            for a in 0..n {
                out.set_row(self.reorder[a], &m.row(a));
            }
            out
        };
        (permute_rows(sigma), permute_rows(sigma_prime))
    }
}

/// Result of [`canonicalize`]: the canonical parametrization plus the
/// reordered blocks and the right multiplier that produces it.
#[derive(Debug, Clone, PartialEq)]
pub struct Canonicalization {
    pub param: CanonicalParametrization,
    /// `C2` with rows in the reordered channel order.
    pub c: RMatrix,
    /// `D2` with rows in the reordered channel order.
    pub d: RMatrix,
    /// Right multiplier (column permutation included): `c * t`, `d * t` are canonical.
    pub t: RMatrix,
}

/// Reduces a factorization solution given by its growth blocks `(C2, D2)` to
/// canonical form.
pub fn canonicalize(c2: &RMatrix, d2: &RMatrix, spec: &FactorizationSpec) -> Result<Canonicalization> {
    let n = spec.n_channels();
    for m in [c2, d2] {
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.nrows(),
            });
        }
    }
    let wronskian = d2.transpose() * c2 - c2.transpose() * d2;
    let defect = max_abs(&wronskian);
    if defect > 1e-10 * (max_abs(c2) * max_abs(d2)).max(1.0) {
        return Err(Error::SymmetryViolated { defect });
    }

    let scale = spectral_norm(c2);
    let all: Vec<usize> = (0..n).collect();
    let rank = rows_rank(c2, &all, scale, RANK_TOLERANCE);

    // Rows: largest threshold (largest kappa) first, keeping only rows that
    // add to the span, until the rank is reached.
    let mut selected: Vec<usize> = Vec::with_capacity(rank);
    for ch in descending_kappa_order(spec) {
        if selected.len() == rank {
            break;
        }
        let mut trial = selected.clone();
        trial.push(ch);
        if rows_rank(c2, &trial, scale, RANK_TOLERANCE) > selected.len() {
            selected = trial;
        }
    }
    if selected.len() < rank {
        return Err(Error::RankDeficientPivot { rank });
    }
    let mut reorder = selected.clone();
    reorder.extend((0..n).filter(|c| !selected.contains(c)));

    let c3 = RMatrix::from_fn(n, n, |a, b| c2[(reorder[a], b)]);
    let d3 = RMatrix::from_fn(n, n, |a, b| d2[(reorder[a], b)]);

    // Columns: first independent columns of the top R rows go to the front.
    let top = c3.rows(0, rank).transpose();
    let top_scale = spectral_norm(&top);
    let mut cols: Vec<usize> = Vec::with_capacity(rank);
    for col in 0..n {
        if cols.len() == rank {
            break;
        }
        let mut trial = cols.clone();
        trial.push(col);
        if rows_rank(&top, &trial, top_scale, RANK_TOLERANCE) > cols.len() {
            cols = trial;
        }
    }
    if cols.len() < rank {
        return Err(Error::RankDeficientPivot { rank });
    }
    let mut col_order = cols.clone();
    col_order.extend((0..n).filter(|c| !cols.contains(c)));
    let col_perm = RMatrix::from_fn(n, n, |i, b| if col_order[b] == i { 1.0 } else { 0.0 });

    let c = &c3 * &col_perm;
    let d = &d3 * &col_perm;
    let m = c.view((0, 0), (rank, rank)).into_owned();
    let m_inv = m
        .try_inverse()
        .ok_or(Error::RankDeficientPivot { rank })?;
    let p = &m_inv * c.view((0, rank), (rank, n - rank));
    let mut q0 = c.view((rank, 0), (n - rank, rank)) * &m_inv;

    let kappa: Vec<f64> = reorder.iter().map(|&ch| spec.kappa()[ch]).collect();
    for j in 0..n - rank {
        for i in 0..rank {
            if kappa[i] < kappa[rank + j] {
                q0[(j, i)] = 0.0;
            }
        }
    }

    let mut t1 = RMatrix::zeros(n, n);
    t1.view_mut((0, 0), (rank, rank)).copy_from(&m_inv);
    t1.view_mut((0, rank), (rank, n - rank)).copy_from(&p);
    for j in rank..n {
        t1[(j, j)] = -1.0;
    }

    let dt1 = &d * &t1;
    let d11 = dt1.view((0, 0), (rank, rank)).into_owned();
    let d21 = dt1.view((rank, 0), (n - rank, rank)).into_owned();
    let d22 = dt1.view((rank, rank), (n - rank, n - rank)).into_owned();
    let d22_inv = if n == rank {
        RMatrix::zeros(0, 0)
    } else {
        if relative_det(&d22).abs() < 1e-14 {
            return Err(Error::SingularD22);
        }
        d22.clone().try_inverse().ok_or(Error::SingularD22)?
    };

    let x0 = &d11 + q0.transpose() * &d21;
    let x_defect = asymmetry(&x0);
    if x_defect > 1e-8 * max_abs(&x0).max(1.0) {
        return Err(Error::SymmetryViolated { defect: x_defect });
    }
    let x0 = 0.5 * (&x0 + x0.transpose());

    let mut t2 = RMatrix::identity(n, n);
    if n > rank {
        let lower = -(&d22_inv * &d21);
        t2.view_mut((rank, 0), (n - rank, rank)).copy_from(&lower);
        t2.view_mut((rank, rank), (n - rank, n - rank)).copy_from(&d22_inv);
    }
    let t = col_perm * t1 * t2;

    let param = CanonicalParametrization::new(rank, reorder, q0, x0, spec)?;
    Ok(Canonicalization {
        param,
        c: c3,
        d: d3,
        t,
    })
}

fn scale_by_sqrt_kappa(m: &RMatrix, kappa: &[f64]) -> RMatrix {
    RMatrix::from_fn(m.nrows(), m.ncols(), |a, b| {
        (kappa[a] * kappa[b]).sqrt() * m[(a, b)]
    })
}

/// `U = -kappa + 2 kappa^{1/2} [[Y^-1, Y^-1 Q^T], [Q Y^-1, Q Y^-1 Q^T]] kappa^{1/2}`.
pub fn superpotential_canonical(
    param: &CanonicalParametrization,
    spec: &FactorizationSpec,
    r: f64,
) -> Result<RMatrix> {
    let kappa = param.reordered_kappa(spec);
    let n = kappa.len();
    let rank = param.rank;
    let (x, q) = param.decayed_blocks(&kappa, r);
    let y = RMatrix::identity(rank, rank) + x + q.transpose() * &q;
    let y_inv = if rank == 0 {
        y
    } else {
        if relative_det(&y).abs() < 1e-14 {
            return Err(Error::SingularY { radius: r });
        }
        y.try_inverse().ok_or(Error::SingularY { radius: r })?
    };
    // [I; Q] Y^-1 [I, Q^T]
    let mut stacked = RMatrix::zeros(n, rank);
    stacked.view_mut((0, 0), (rank, rank)).fill_with_identity();
    stacked.view_mut((rank, 0), (n - rank, rank)).copy_from(&q);
    let core = &stacked * y_inv * stacked.transpose();
    let mut u = 2.0 * scale_by_sqrt_kappa(&core, &kappa);
    for a in 0..n {
        u[(a, a)] -= kappa[a];
    }
    Ok(unpermute(&u, &param.reorder))
}

/// Reduced superpotential formulas available when `X0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedForm {
    /// Rank `N - 1`: `Q` is a row and
    /// `U = kappa - 2/(1 + Q Q^T) kappa^{1/2} [[Q^T Q, -Q^T], [-Q, 1]] kappa^{1/2}`.
    Row,
    /// Rank 1: `Q` is a column and
    /// `U = -kappa + 2/(1 + Q^T Q) kappa^{1/2} [[1, Q^T], [Q, Q Q^T]] kappa^{1/2}`.
    Column,
}

pub fn superpotential_closed_form(
    param: &CanonicalParametrization,
    spec: &FactorizationSpec,
    r: f64,
    form: ClosedForm,
) -> Result<RMatrix> {
    let kappa = param.reordered_kappa(spec);
    let n = kappa.len();
    let rank = param.rank;
    if param.x0.iter().any(|&v| v != 0.0) {
        return Err(Error::PreconditionViolated("closed forms need X0 = 0".into()));
    }
    let mut u = RMatrix::zeros(n, n);
    match form {
        ClosedForm::Row => {
            if n < 2 || rank != n - 1 {
                return Err(Error::PreconditionViolated(format!(
                    "row form needs rank N-1 = {}, got {rank}",
                    n.saturating_sub(1)
                )));
            }
            if kappa[..rank].windows(2).any(|w| w[0] <= w[1]) {
                return Err(Error::PreconditionViolated(
                    "row form needs kappa'_1 > ... > kappa'_{N-1}".into(),
                ));
            }
            let last = kappa[n - 1];
            let q: Vec<f64> = (0..rank)
                .map(|i| {
                    let q0 = param.q0[(0, i)];
                    if q0 == 0.0 {
                        0.0
                    } else {
                        q0 * ((last - kappa[i]) * r).exp()
                    }
                })
                .collect();
            let norm = 1.0 + q.iter().map(|v| v * v).sum::<f64>();
            let inner = RMatrix::from_fn(n, n, |a, b| match (a < rank, b < rank) {
                (true, true) => q[a] * q[b],
                (true, false) => -q[a],
                (false, true) => -q[b],
                (false, false) => 1.0,
            });
            u -= (2.0 / norm) * scale_by_sqrt_kappa(&inner, &kappa);
            for a in 0..n {
                u[(a, a)] += kappa[a];
            }
        }
        ClosedForm::Column => {
            if rank != 1 {
                return Err(Error::PreconditionViolated(format!(
                    "column form needs rank 1, got {rank}"
                )));
            }
            if kappa[1..].iter().any(|&k| k >= kappa[0]) {
                return Err(Error::PreconditionViolated(
                    "column form needs kappa_1 larger than every other kappa".into(),
                ));
            }
            // q[0] = 1 stands for the leading identity entry
            let mut q = vec![1.0];
            q.extend((1..n).map(|j| param.q0[(j - 1, 0)] * ((kappa[j] - kappa[0]) * r).exp()));
            let norm = q.iter().map(|v| v * v).sum::<f64>();
            let inner = RMatrix::from_fn(n, n, |a, b| q[a] * q[b]);
            u += (2.0 / norm) * scale_by_sqrt_kappa(&inner, &kappa);
            for a in 0..n {
                u[(a, a)] -= kappa[a];
            }
        }
    }
    Ok(unpermute(&u, &param.reorder))
}

/// Full-rank superpotential for the dyadic choice `X0 = xi0 xi0^T`, in the
/// caller's channel order:
/// `U = kappa - 2/(1 + xi^T xi) kappa^{1/2} xi xi^T kappa^{1/2}`, `xi = e^{-kappa r} xi0`.
pub fn superpotential_dyadic(spec: &FactorizationSpec, xi0: &[f64], r: f64) -> Result<RMatrix> {
    let kappa = spec.kappa();
    if xi0.len() != kappa.len() {
        return Err(Error::DimensionMismatch {
            expected: kappa.len(),
            got: xi0.len(),
        });
    }
    let xi: Vec<f64> = xi0.iter().zip(kappa).map(|(x, k)| x * (-k * r).exp()).collect();
    let norm = 1.0 + xi.iter().map(|v| v * v).sum::<f64>();
    let n = kappa.len();
    let inner = RMatrix::from_fn(n, n, |a, b| xi[a] * xi[b]);
    let mut u = -(2.0 / norm) * scale_by_sqrt_kappa(&inner, kappa);
    for a in 0..n {
        u[(a, a)] += kappa[a];
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_diag;
    use crate::scattering::ChannelSet;

    fn spec(thresholds: Vec<f64>, energy: f64) -> FactorizationSpec {
        FactorizationSpec::from_energy(ChannelSet::new(thresholds).unwrap(), energy).unwrap()
    }

    #[test]
    fn already_canonical_full_rank() {
        let s = spec(vec![10.0, 0.0, 4.0], -2.0);
        let x0 = RMatrix::from_row_slice(3, 3, &[0.3, 0.1, -0.2, 0.1, 0.5, 0.05, -0.2, 0.05, 0.1]);
        // rows already in descending-kappa order would be [0, 2, 1]
        let out = canonicalize(&RMatrix::identity(3, 3), &x0, &s).unwrap();
        assert_eq!(out.param.rank(), 3);
        assert_eq!(out.param.q0().shape(), (0, 3));
        assert_eq!(out.param.reorder(), &[0, 2, 1]);
        let back = unpermute(out.param.x0(), out.param.reorder());
        assert!(max_abs(&(back - x0)) < 1e-15);
    }

    #[test]
    fn block_form_read_backwards() {
        let s = spec(vec![10.0, 0.0], -3.0);
        let (q0, x0) = (0.7, -0.25);
        let c2 = RMatrix::from_row_slice(2, 2, &[1.0, 0.0, q0, 0.0]);
        let d2 = RMatrix::from_row_slice(2, 2, &[x0, -q0, 0.0, 1.0]);
        let out = canonicalize(&c2, &d2, &s).unwrap();
        assert_eq!(out.param.rank(), 1);
        assert_eq!(out.param.q0()[(0, 0)], q0);
        assert_eq!(out.param.x0()[(0, 0)], x0);
    }

    #[test]
    fn dependent_rows_give_rank_one() {
        let s = spec(vec![10.0, 0.0], -3.0);
        let c2 = RMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        // D2^T C2 symmetric requires d11 + d21 = d12 + d22
        let d2 = RMatrix::from_row_slice(2, 2, &[0.5, -1.5, -1.0, 1.0]);
        let out = canonicalize(&c2, &d2, &s).unwrap();
        assert_eq!(out.param.rank(), 1);
        assert!((out.param.q0()[(0, 0)] - 1.0).abs() < 1e-15);
        let ct = &out.c * &out.t;
        let dt = &out.d * &out.t;
        assert!((ct[(0, 0)] - 1.0).abs() < 1e-14 && ct[(0, 1)].abs() < 1e-14 && ct[(1, 1)].abs() < 1e-14);
        assert!((dt[(0, 1)] + out.param.q0()[(0, 0)]).abs() < 1e-14);
        assert!(dt[(1, 0)].abs() < 1e-14 && (dt[(1, 1)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn symmetry_violation_is_rejected() {
        let s = spec(vec![10.0, 0.0], -3.0);
        let c2 = RMatrix::identity(2, 2);
        let d2 = RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(canonicalize(&c2, &d2, &s), Err(Error::SymmetryViolated { .. })));
    }

    #[test]
    fn singular_d22_is_rejected() {
        let s = spec(vec![10.0, 0.0], -3.0);
        let c2 = RMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let d2 = RMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(canonicalize(&c2, &d2, &s).unwrap_err(), Error::SingularD22);
    }

    #[test]
    fn vanishing_rule_enforced_on_construction() {
        // kappa' = kappa of channel 1 (threshold 0) is smaller than kappa'' of channel 0
        let s = spec(vec![10.0, 0.0], -3.0);
        let err = CanonicalParametrization::new(
            1,
            vec![1, 0],
            RMatrix::from_element(1, 1, 0.5),
            RMatrix::zeros(1, 1),
            &s,
        );
        assert!(err.is_err());
        let ok = CanonicalParametrization::new(
            1,
            vec![1, 0],
            RMatrix::zeros(1, 1),
            RMatrix::zeros(1, 1),
            &s,
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn full_rank_zero_x_is_kappa() {
        let s = spec(vec![10.0, 0.0, 4.0], -2.0);
        let p = CanonicalParametrization::new(3, vec![0, 2, 1], RMatrix::zeros(0, 3), RMatrix::zeros(3, 3), &s)
            .unwrap();
        for r in [0.0, 1.0, 4.0] {
            let u = superpotential_canonical(&p, &s, r).unwrap();
            assert!(max_abs(&(u - s.kappa_diag())) < 1e-14);
        }
    }

    #[test]
    fn dyadic_matches_general_formula() {
        let s = spec(vec![10.0, 0.0, 4.0], -2.0);
        let xi0 = [0.8, -0.4, 1.3];
        let x_user = RMatrix::from_fn(3, 3, |a, b| xi0[a] * xi0[b]);
        let order = descending_kappa_order(&s);
        let p = CanonicalParametrization::new(
            3,
            order.clone(),
            RMatrix::zeros(0, 3),
            crate::linalg::permute(&x_user, &order),
            &s,
        )
        .unwrap();
        for i in 0..20 {
            let r = 0.15 * i as f64;
            let a = superpotential_canonical(&p, &s, r).unwrap();
            let b = superpotential_dyadic(&s, &xi0, r).unwrap();
            assert!(max_abs(&(a - b)) < 1e-13, "r = {r}");
        }
    }

    #[test]
    fn rank_one_two_channel_entries() {
        let s = spec(vec![10.0, 0.0], -3.0);
        let (k1, k2) = (s.kappa()[0], s.kappa()[1]);
        let q0 = 0.4;
        let p = CanonicalParametrization::new(1, vec![0, 1], RMatrix::from_element(1, 1, q0), RMatrix::zeros(1, 1), &s)
            .unwrap();
        for r in [0.0, 0.3, 1.7] {
            let q = q0 * ((k2 - k1) * r).exp();
            let den = 1.0 + q * q;
            let u = superpotential_closed_form(&p, &s, r, ClosedForm::Column).unwrap();
            assert!((u[(0, 0)] - (1.0 - q * q) / den * k1).abs() < 1e-14);
            assert!((u[(1, 1)] + (1.0 - q * q) / den * k2).abs() < 1e-14);
            assert!((u[(0, 1)] - 2.0 * q * (k1 * k2).sqrt() / den).abs() < 1e-14);
        }
    }

    #[test]
    fn row_form_with_zero_q_is_kappa_except_last() {
        let s = spec(vec![10.0, 4.0, 0.0], -2.0);
        let p = CanonicalParametrization::new(2, vec![0, 1, 2], RMatrix::zeros(1, 2), RMatrix::zeros(2, 2), &s)
            .unwrap();
        let u = superpotential_closed_form(&p, &s, 0.8, ClosedForm::Row).unwrap();
        let k = s.kappa();
        assert!(max_abs(&(u - real_diag(&[k[0], k[1], -k[2]]))) < 1e-14);
    }

    #[test]
    fn closed_form_preconditions() {
        let s = spec(vec![10.0, 4.0, 0.0], -2.0);
        let p = CanonicalParametrization::new(
            2,
            vec![0, 1, 2],
            RMatrix::zeros(1, 2),
            RMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.0, 0.0]),
            &s,
        )
        .unwrap();
        assert!(superpotential_closed_form(&p, &s, 0.0, ClosedForm::Row).is_err());
        let p = CanonicalParametrization::new(2, vec![0, 1, 2], RMatrix::zeros(1, 2), RMatrix::zeros(2, 2), &s)
            .unwrap();
        assert!(superpotential_closed_form(&p, &s, 0.0, ClosedForm::Column).is_err());
    }

    #[test]
    fn u_at_infinity_signs_follow_rank() {
        let s = spec(vec![10.0, 0.0, 4.0], -2.0);
        let k = s.kappa();
        let p = CanonicalParametrization::new(2, vec![0, 1, 2], RMatrix::zeros(1, 2), RMatrix::zeros(2, 2), &s)
            .unwrap();
        assert_eq!(p.u_at_infinity(&s), real_diag(&[k[0], k[1], -k[2]]));
    }

    #[test]
    fn canonical_sigma_reproduces_superpotential() {
        let s = spec(vec![10.0, 0.0, 4.0], -2.0);
        let p = CanonicalParametrization::new(
            2,
            vec![0, 1, 2],
            RMatrix::from_row_slice(1, 2, &[0.6, 0.0]),
            RMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.3, 0.0]),
            &s,
        )
        .unwrap();
        for r in [0.0, 0.5, 2.0] {
            let (sig, sig_p) = p.sigma(&s, r);
            let u = sig_p * sig.try_inverse().unwrap();
            let v = superpotential_canonical(&p, &s, r).unwrap();
            assert!(max_abs(&(u - v)) < 1e-12, "r = {r}");
        }
    }
}
