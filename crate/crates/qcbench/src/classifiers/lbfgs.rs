//! Limited-memory BFGS with two-loop recursion and a strong-Wolfe line
//! search.

/// Curvature pairs with s.y below this relative threshold are skipped.
const CURVATURE_EPS: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LbfgsOptions {
    /// Number of stored curvature pairs.
    pub memory: usize,
    /// Stop when the gradient infinity norm drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            tol: 1e-5,
            max_iter: 200,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 50,
        }
    }
}

#[derive(Debug)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub line_search_failed: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `objective` (value and gradient) starting from `x0`.
pub fn lbfgs_minimize<F>(mut objective: F, x0: &[f64], options: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut value, mut grad) = objective(&x);
    assert!(value.is_finite(), "objective not finite at x0");
    let mut s_list: Vec<Vec<f64>> = Vec::new();
    let mut y_list: Vec<Vec<f64>> = Vec::new();
    let mut rho_list: Vec<f64> = Vec::new();
    let mut line_search_failed = false;
    let mut iterations = 0;

    for _ in 0..options.max_iter {
        if inf_norm(&grad) <= options.tol {
            break;
        }
        iterations += 1;

        // two-loop recursion
        let mut direction: Vec<f64> = grad.iter().map(|g| -g).collect();
        let k = s_list.len();
        let mut alphas = vec![0.0f64; k];
        for i in (0..k).rev() {
            let alpha = rho_list[i] * dot(&s_list[i], &direction);
            alphas[i] = alpha;
            for (d, y) in direction.iter_mut().zip(&y_list[i]) {
                *d -= alpha * y;
            }
        }
        if let (Some(s), Some(y)) = (s_list.last(), y_list.last()) {
            let gamma = dot(s, y) / dot(y, y);
            for d in &mut direction {
                *d *= gamma;
            }
        }
        for i in 0..k {
            let beta = rho_list[i] * dot(&y_list[i], &direction);
            for (d, s) in direction.iter_mut().zip(&s_list[i]) {
                *d += (alphas[i] - beta) * s;
            }
        }

        let mut dg = dot(&grad, &direction);
        if dg >= 0.0 {
            // not a descent direction; fall back to steepest descent
            direction = grad.iter().map(|g| -g).collect();
            dg = -dot(&grad, &grad);
        }

        match wolfe_line_search(&mut objective, &x, value, &grad, &direction, dg, options) {
            Some((step, new_value, new_x, new_grad)) => {
                let s: Vec<f64> = new_x.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
                let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if sy > CURVATURE_EPS * s_norm * y_norm {
                    if s_list.len() == options.memory {
                        s_list.remove(0);
                        y_list.remove(0);
                        rho_list.remove(0);
                    }
                    rho_list.push(1.0 / sy);
                    s_list.push(s);
                    y_list.push(y);
                }
                let _ = step;
                x = new_x;
                value = new_value;
                grad = new_grad;
            }
            None => {
                line_search_failed = true;
                break;
            }
        }
        debug_assert_eq!(x.len(), n);
    }

    let grad_inf_norm = inf_norm(&grad);
    LbfgsResult {
        converged: grad_inf_norm <= options.tol,
        x,
        value,
        grad_inf_norm,
        iterations,
        line_search_failed,
    }
}

type ProbePoint = (f64, f64, Vec<f64>, Vec<f64>);

/// Strong-Wolfe line search (bracket then zoom). Returns
/// (step, value, x, gradient) for an accepted step, or None after the
/// evaluation budget runs out.
fn wolfe_line_search<F>(
    objective: &mut F,
    x: &[f64],
    f0: f64,
    _g0: &[f64],
    direction: &[f64],
    dg0: f64,
    options: &LbfgsOptions,
) -> Option<ProbePoint>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut evals = 0usize;
    let mut probe = |alpha: f64, evals: &mut usize| -> (f64, Vec<f64>, Vec<f64>, f64) {
        *evals += 1;
        let xt: Vec<f64> = x
            .iter()
            .zip(direction)
            .map(|(xi, di)| xi + alpha * di)
            .collect();
        let (ft, gt) = objective(&xt);
        let dgt = dot(&gt, direction);
        (ft, xt, gt, dgt)
    };

    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut dg_prev = dg0;
    let mut alpha = 1.0;
    let mut best: Option<ProbePoint> = None;

    while evals < options.max_line_search {
        let (ft, xt, gt, dgt) = probe(alpha, &mut evals);
        if !ft.is_finite() || ft > f0 + options.c1 * alpha * dg0 || (best.is_some() && ft >= f_prev)
        {
            return zoom(
                objective,
                x,
                f0,
                dg0,
                direction,
                alpha_prev,
                f_prev,
                dg_prev,
                alpha,
                options,
                &mut evals,
            );
        }
        if dgt.abs() <= -options.c2 * dg0 {
            return Some((alpha, ft, xt, gt));
        }
        best = Some((alpha, ft, xt, gt));
        if dgt >= 0.0 {
            return zoom(
                objective, x, f0, dg0, direction, alpha, ft, dgt, alpha_prev, options, &mut evals,
            );
        }
        alpha_prev = alpha;
        f_prev = ft;
        dg_prev = dgt;
        alpha *= 2.0;
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn zoom<F>(
    objective: &mut F,
    x: &[f64],
    f0: f64,
    dg0: f64,
    direction: &[f64],
    mut lo: f64,
    mut f_lo: f64,
    mut dg_lo: f64,
    mut hi: f64,
    options: &LbfgsOptions,
    evals: &mut usize,
) -> Option<ProbePoint>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut best: Option<ProbePoint> = None;
    while *evals < options.max_line_search {
        let alpha = 0.5 * (lo + hi);
        if (hi - lo).abs() < 1e-16 {
            break;
        }
        *evals += 1;
        let xt: Vec<f64> = x
            .iter()
            .zip(direction)
            .map(|(xi, di)| xi + alpha * di)
            .collect();
        let (ft, gt) = objective(&xt);
        let dgt = dot(&gt, direction);
        if !ft.is_finite() || ft > f0 + options.c1 * alpha * dg0 || ft >= f_lo {
            hi = alpha;
        } else {
            if dgt.abs() <= -options.c2 * dg0 {
                return Some((alpha, ft, xt, gt));
            }
            if best
                .as_ref()
                .is_none_or(|(_, bf, _, _)| ft < *bf)
            {
                best = Some((alpha, ft, xt.clone(), gt.clone()));
            }
            if dgt * (hi - lo) >= 0.0 {
                hi = lo;
            }
            lo = alpha;
            f_lo = ft;
            dg_lo = dgt;
        }
    }
    let _ = dg_lo;
    // no point satisfying both conditions within budget; fall back to the
    // best Armijo-satisfying point seen, if any
    best
}
