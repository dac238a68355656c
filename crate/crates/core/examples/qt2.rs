fn main() {
    use solspec_core::numerics::quad::{integrate_path, detour_path};
    let path = detour_path(-4.0, 4.0, &[0.0], &[0.1], true);
    println!("path: {:?}", path.len());
    let r = integrate_path(|z| z.powi(-8), &path, 1e-11);
    println!("window: {:?}", r.map(|q| (q.value, q.error_estimate, q.evaluations)));
    // exact: F(4)-F(-4), F = y^-7/(-7)
    let exact = -2.0 * 4.0f64.powi(-7) / 7.0;
    println!("exact {exact:e}");
}
