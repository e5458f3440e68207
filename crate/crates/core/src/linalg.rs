//! Fixed-size dense LU with partial pivoting, sized for loop-closure Jacobians.

pub(crate) type Mat<const N: usize> = [[f64; N]; N];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Lu<const N: usize> {
    lu: Mat<N>,
    perm: [usize; N],
}

impl<const N: usize> Lu<N> {
    /// `None` when a pivot is exactly zero.
    pub(crate) fn factor(mut a: Mat<N>) -> Option<Self> {
        let mut perm = [0usize; N];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i;
        }
        for k in 0..N {
            let mut piv = k;
            for i in k + 1..N {
                if a[i][k].abs() > a[piv][k].abs() {
                    piv = i;
                }
            }
            if a[piv][k] == 0.0 {
                return None;
            }
            a.swap(k, piv);
            perm.swap(k, piv);
            for i in k + 1..N {
                let f = a[i][k] / a[k][k];
                a[i][k] = f;
                for j in k + 1..N {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
        Some(Self { lu: a, perm })
    }

    pub(crate) fn solve(&self, b: &[f64; N]) -> [f64; N] {
        let mut x = [0.0; N];
        for i in 0..N {
            let mut s = b[self.perm[i]];
            for j in 0..i {
                s -= self.lu[i][j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..N).rev() {
            let mut s = x[i];
            for j in i + 1..N {
                s -= self.lu[i][j] * x[j];
            }
            x[i] = s / self.lu[i][i];
        }
        x
    }
}

fn norm1<const N: usize>(a: &Mat<N>) -> f64 {
    (0..N)
        .map(|j| (0..N).map(|i| a[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number `‖A‖₁‖A⁻¹‖₁`; infinite for singular matrices.
pub(crate) fn cond1<const N: usize>(a: &Mat<N>) -> f64 {
    let Some(lu) = Lu::factor(*a) else {
        return f64::INFINITY;
    };
    let mut inv = [[0.0; N]; N];
    for j in 0..N {
        let mut e = [0.0; N];
        e[j] = 1.0;
        let col = lu.solve(&e);
        for i in 0..N {
            inv[i][j] = col[i];
        }
    }
    let c = norm1(a) * norm1(&inv);
    if c.is_finite() {
        c
    } else {
        f64::INFINITY
    }
}
