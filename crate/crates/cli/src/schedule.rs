//! Log-spaced measurement schedules.

/// Integer checkpoint times `round(10^(k / per_decade))` up to and including
/// `steps`, deduplicated and strictly increasing.
pub fn log_spaced_checkpoints(steps: u64, per_decade: u32) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    let mut k = 0u32;
    loop {
        let t = 10f64.powf(f64::from(k) / f64::from(per_decade)).round() as u64;
        if t > steps {
            break;
        }
        if out.last() != Some(&t) {
            out.push(t);
        }
        k += 1;
    }
    if out.last() != Some(&steps) {
        out.push(steps);
    }
    out
}
