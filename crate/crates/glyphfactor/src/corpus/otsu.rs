use super::image::GrayImage;

/// Otsu's global threshold: the t in [0, 255] maximizing the between-class
/// variance w0(t) * w1(t) * (mu0(t) - mu1(t))^2, where class 0 holds pixels
/// <= t and class 1 pixels > t. Ties break toward the smallest t, so a
/// constant image yields 0.
pub fn otsu_threshold(gray: &GrayImage) -> u8 {
    let mut hist = [0u64; 256];
    for &v in gray.data() {
        hist[v as usize] += 1;
    }
    let total = gray.data().len() as f64;
    let total_sum: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();

    let mut best_t = 0u8;
    let mut best_var = f64::NEG_INFINITY;
    let mut count0 = 0u64;
    let mut sum0 = 0.0f64;
    for t in 0..=255usize {
        count0 += hist[t];
        sum0 += t as f64 * hist[t] as f64;
        let count1 = gray.data().len() as u64 - count0;
        if count0 == 0 || count1 == 0 {
            // one class empty: between-class variance is 0
            if 0.0 > best_var {
                best_var = 0.0;
                best_t = t as u8;
            }
            continue;
        }
        let w0 = count0 as f64 / total;
        let w1 = count1 as f64 / total;
        let mu0 = sum0 / count0 as f64;
        let mu1 = (total_sum - sum0) / count1 as f64;
        let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if var > best_var {
            best_var = var;
            best_t = t as u8;
        }
    }
    best_t
}

/// True when every pixel has one intensity.
pub fn is_constant(gray: &GrayImage) -> bool {
    gray.data().windows(2).all(|w| w[0] == w[1])
}
