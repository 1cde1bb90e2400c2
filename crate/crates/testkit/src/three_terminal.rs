//! Closed-form terminal currents of three-terminal wye and delta networks
//! driven by terminal voltages `[Va, Vb, Vc]`.

use num_complex::Complex64;

/// Currents into terminals a, b, c of a wye with arms `[Za, Zb, Zc]`.
pub fn wye_currents(z: [Complex64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    let y = z.map(|zi| 1.0 / zi);
    let star = (y[0] * v[0] + y[1] * v[1] + y[2] * v[2]) / (y[0] + y[1] + y[2]);
    [0, 1, 2].map(|k| (v[k] - star) * y[k])
}

/// Currents into terminals a, b, c of a delta with sides `[Zab, Zbc, Zca]`.
pub fn delta_currents(z: [Complex64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    let i_ab = (v[0] - v[1]) / z[0];
    let i_bc = (v[1] - v[2]) / z[1];
    let i_ca = (v[2] - v[0]) / z[2];
    [i_ab - i_ca, i_bc - i_ab, i_ca - i_bc]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn currents_sum_to_zero() {
        let z = [Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0), Complex64::new(0.0, 5.0)];
        let v = [Complex64::new(3.0, 0.0), Complex64::new(-1.0, 2.0), Complex64::new(0.0, 0.0)];
        for i in [wye_currents(z, v), delta_currents(z, v)] {
            assert!(i.iter().sum::<Complex64>().norm() < 1e-12);
        }
    }
}
