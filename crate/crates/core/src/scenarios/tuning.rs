use crate::rng::RngState;
use crate::tensor::Tensor;

pub const UNITS: usize = 10;
pub const CONDITIONS: usize = 50;
pub const COMPONENTS: usize = 4;
const COMPONENT_WIDTH: f64 = 6.25;

/// Gaussian bump `k` (0-based) evaluated at condition `c` (1-based).
fn component(k: usize, c: usize) -> f64 {
    let center = CONDITIONS as f64 * (k as f64 + 0.5) / COMPONENTS as f64;
    let d = c as f64 - center;
    (-d * d / (2.0 * COMPONENT_WIDTH * COMPONENT_WIDTH)).exp()
}

/// Units × conditions tuning curves of exact rank 4: each row mixes four
/// equally spaced Gaussian bumps with cubed uniform weights, is scaled to
/// peak at 1, and rows are ordered by center of mass.
pub fn tuning_truth(rng: &mut RngState) -> Tensor {
    let mut rows: Vec<Vec<f64>> = (0..UNITS)
        .map(|_| {
            let w: Vec<f64> = (0..COMPONENTS).map(|_| rng.uniform().powi(3)).collect();
            let curve: Vec<f64> = (1..=CONDITIONS)
                .map(|c| (0..COMPONENTS).map(|k| w[k] * component(k, c)).sum())
                .collect();
            let peak = curve.iter().copied().fold(f64::MIN, f64::max);
            curve.into_iter().map(|v| v / peak).collect()
        })
        .collect();
    let com = |row: &[f64]| {
        let total: f64 = row.iter().sum();
        row.iter()
            .enumerate()
            .map(|(i, v)| (i + 1) as f64 * v)
            .sum::<f64>()
            / total
    };
    rows.sort_by(|a, b| com(a).total_cmp(&com(b)));
    Tensor::new(vec![UNITS, CONDITIONS], rows.concat()).expect("fixed shape")
}
