use super::{AlignError, AlignMatrix, MatrixRole};

/// Scaling vectors after the last Sinkhorn update.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub iterations: usize,
}

/// `K = exp(sim / mu)`.
pub fn gibbs_kernel(sim: &AlignMatrix, mu: f64) -> AlignMatrix {
    let data = sim.as_slice().iter().map(|&s| (s / mu).exp()).collect();
    AlignMatrix::from_vec(sim.rows(), sim.cols(), data, MatrixRole::Kernel)
}

fn check_scaling(values: &[f64], iteration: usize) -> Result<(), AlignError> {
    if values.iter().all(|x| x.is_finite() && *x > 0.0) {
        Ok(())
    } else {
        Err(AlignError::Numerical { iteration })
    }
}

/// Solves the entropy-regularized transport problem between uniform unit
/// marginals by Sinkhorn scaling.
///
/// Starting from `v = 1`, each iteration sets `u = 1 / (K v)` and then
/// `v = 1 / (Kᵀ u)`. The returned plan is `diag(u) K diag(v)`; because the
/// column update comes last its columns sum to one up to rounding, while the
/// rows only reach one in the limit.
pub fn sinkhorn(
    sim: &AlignMatrix,
    mu: f64,
    iters: usize,
) -> Result<(AlignMatrix, SinkhornState), AlignError> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(AlignError::InvalidConfig(format!("mu must be positive, got {mu}")));
    }
    if iters == 0 {
        return Err(AlignError::InvalidConfig("sinkhorn needs at least one iteration".into()));
    }
    let (n, m) = (sim.rows(), sim.cols());
    if n == 0 || m == 0 {
        return Err(AlignError::Empty);
    }
    let kernel = gibbs_kernel(sim, mu);
    check_scaling(kernel.as_slice(), 0)?;

    let mut u = vec![1.0; n];
    let mut v = vec![1.0; m];
    for iteration in 1..=iters {
        for (i, ui) in u.iter_mut().enumerate() {
            let kv: f64 = kernel.row(i).iter().zip(&v).map(|(k, vj)| k * vj).sum();
            *ui = 1.0 / kv;
        }
        check_scaling(&u, iteration)?;
        let mut ktu = vec![0.0; m];
        for (i, ui) in u.iter().enumerate() {
            for (acc, k) in ktu.iter_mut().zip(kernel.row(i)) {
                *acc += k * ui;
            }
        }
        for (vj, acc) in v.iter_mut().zip(ktu) {
            *vj = 1.0 / acc;
        }
        check_scaling(&v, iteration)?;
    }

    let mut plan = AlignMatrix::zeros(n, m, MatrixRole::Plan);
    for i in 0..n {
        for j in 0..m {
            plan.set(i, j, u[i] * kernel.get(i, j) * v[j]);
        }
    }
    Ok((
        plan,
        SinkhornState {
            u,
            v,
            iterations: iters,
        },
    ))
}

/// Value of the regularized objective `Σ A·sim − mu·Σ A log A` for a plan.
pub fn entropic_objective(plan: &AlignMatrix, sim: &AlignMatrix, mu: f64) -> f64 {
    plan.as_slice()
        .iter()
        .zip(sim.as_slice())
        .map(|(&a, &s)| {
            let entropy = if a > 0.0 { a * a.ln() } else { 0.0 };
            a * s - mu * entropy
        })
        .sum()
}
