use fastkern::nufft::*;
use num_complex::Complex64;
fn main() {
    for tol in [1e-6, 1e-9, 1e-10, 1e-12] {
        let plan = NufftPlan::uniform(1, 2, tol).unwrap();
        println!("tol={tol:e} w={} fine={:?}", plan.spread_width(), plan.fine_dims());
        let pts = ScaledPoints::new(vec![0.0, 0.3*std::f64::consts::PI/2.0, -0.8*std::f64::consts::PI/2.0, 0.99*std::f64::consts::PI/2.0], 1).unwrap();
        let mut coeffs = vec![Complex64::default(); 5];
        coeffs[2] = Complex64::new(2.5, 0.0);
        let out = nufft_type2(&pts, &coeffs, &plan).unwrap();
        for v in &out { println!("  {} err {:e}", v, (v - Complex64::new(2.5,0.0)).norm()); }
    }
}
