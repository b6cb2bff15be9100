//! 3-D FFT on an `n³` grid stored x-major (`idx = (i·n + j)·n + l`), done as
//! three sweeps of 1-D transforms. Both directions are unnormalized.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Fft3 {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Fft3 {
            n,
            forward,
            inverse,
            line: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub(crate) fn forward(&mut self, data: &mut [Complex64]) {
        let fft = Arc::clone(&self.forward);
        self.run(fft.as_ref(), data);
    }

    pub(crate) fn inverse(&mut self, data: &mut [Complex64]) {
        let fft = Arc::clone(&self.inverse);
        self.run(fft.as_ref(), data);
    }

    fn run(&mut self, fft: &dyn Fft<f64>, data: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n * n);
        // z lines are contiguous
        fft.process_with_scratch(data, &mut self.scratch);
        // y lines, stride n
        for i in 0..n {
            for l in 0..n {
                let base = i * n * n + l;
                self.sweep(fft, data, base, n);
            }
        }
        // x lines, stride n²
        for j in 0..n {
            for l in 0..n {
                let base = j * n + l;
                self.sweep(fft, data, base, n * n);
            }
        }
    }

    fn sweep(&mut self, fft: &dyn Fft<f64>, data: &mut [Complex64], base: usize, stride: usize) {
        for (t, v) in self.line.iter_mut().enumerate() {
            *v = data[base + t * stride];
        }
        fft.process_with_scratch(&mut self.line, &mut self.scratch);
        for (t, v) in self.line.iter().enumerate() {
            data[base + t * stride] = *v;
        }
    }
}
