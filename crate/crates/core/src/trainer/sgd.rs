//! SGD with heavy-ball momentum and L2 weight decay.

/// `v ← momentum·v + (grad + weight_decay·param); param ← param − lr·v`
pub fn sgd_step(params: &mut [f64], grads: &[f64], velocity: &mut [f64], lr: f64, momentum: f64, weight_decay: f64) {
    assert_eq!(params.len(), grads.len(), "parameter/gradient length");
    assert_eq!(params.len(), velocity.len(), "parameter/velocity length");
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v + (g + weight_decay * *p);
        *p -= lr * *v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_sgd() {
        let mut p = [1.0, -2.0];
        let mut v = [0.0; 2];
        sgd_step(&mut p, &[0.5, 1.0], &mut v, 0.1, 0.0, 0.0);
        assert_eq!(p, [1.0 - 0.05, -2.0 - 0.1]);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = [1.0, -2.0];
        let mut v = [0.0; 2];
        sgd_step(&mut p, &[0.0, 0.0], &mut v, 0.1, 0.9, 0.0);
        assert_eq!(p, [1.0, -2.0]);
    }

    #[test]
    fn two_momentum_steps_by_hand() {
        // p0 = 1, g = 2 both steps, lr = 0.1, mu = 0.9, wd = 0.01
        // v1 = 2 + 0.01·1 = 2.01,          p1 = 1 − 0.201 = 0.799
        // v2 = 0.9·2.01 + 2 + 0.00799 = 3.81699, p2 = 0.799 − 0.381699 = 0.417301
        let mut p = [1.0];
        let mut v = [0.0];
        sgd_step(&mut p, &[2.0], &mut v, 0.1, 0.9, 0.01);
        assert!((v[0] - 2.01).abs() < 1e-15 && (p[0] - 0.799).abs() < 1e-15);
        sgd_step(&mut p, &[2.0], &mut v, 0.1, 0.9, 0.01);
        assert!((v[0] - 3.81699).abs() < 1e-14);
        assert!((p[0] - 0.417301).abs() < 1e-14);
    }
}
