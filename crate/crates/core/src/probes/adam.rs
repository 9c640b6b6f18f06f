use ndarray::Array2;

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Array2<f64>,
    v: Array2<f64>,
    t: i32,
}

impl Adam {
    pub fn new(learning_rate: f64, shape: (usize, usize)) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: Array2::zeros(shape),
            v: Array2::zeros(shape),
            t: 0,
        }
    }

    pub fn steps(&self) -> usize {
        self.t as usize
    }

    pub fn step(&mut self, params: &mut Array2<f64>, grad: &Array2<f64>) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        self.m.zip_mut_with(grad, |m, &g| *m = b1 * *m + (1.0 - b1) * g);
        self.v.zip_mut_with(grad, |v, &g| *v = b2 * *v + (1.0 - b2) * g * g);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let lr = self.learning_rate;
        let eps = self.epsilon;
        ndarray::Zip::from(params)
            .and(&self.m)
            .and(&self.v)
            .for_each(|p, &m, &v| *p -= lr * (m / c1) / ((v / c2).sqrt() + eps));
    }
}
