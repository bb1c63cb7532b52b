/// Classical four-stage Runge–Kutta with reusable stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k: [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `y` from `t` to `t + h` under `ẏ = f(t, y)`.
    pub fn step<F>(&mut self, y: &mut [f64], t: f64, h: f64, mut f: F)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let [k1, k2, k3, k4] = &mut self.k;
        f(t, y, k1);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &self.tmp, k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        f(t + 0.5 * h, &self.tmp, k3);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + h * k3[i];
        }
        f(t + h, &self.tmp, k4);
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_order_on_harmonic_oscillator() {
        let err = |n: usize| {
            let mut rk = Rk4::new(2);
            let mut y = [1.0, 0.0];
            let h = 10.0 / n as f64;
            for i in 0..n {
                rk.step(&mut y, i as f64 * h, h, |_, y, d| {
                    d[0] = y[1];
                    d[1] = -y[0];
                });
            }
            ((y[0] - 10f64.cos()).powi(2) + (y[1] + 10f64.sin()).powi(2)).sqrt()
        };
        let r = err(200) / err(400);
        assert!((15.0..17.0).contains(&r), "{r}");
    }
}
