//! Dense 16×16 reference model of the 4-qubit register. Qubit `q` is bit
//! `3 − q` of the basis index, so qubit 0 is the leftmost tensor factor.

#![allow(dead_code)]

use num_complex::Complex64;
use qae_core::{Circuit, Gate};
use rand::Rng;
use rand_distr::StandardNormal;

pub const N: usize = 16;

pub type Mat = Vec<Vec<Complex64>>;
type Mat2 = [[Complex64; 2]; 2];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn zeros() -> Mat {
    vec![vec![c(0.0); N]; N]
}

pub fn identity() -> Mat {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c(1.0);
    }
    m
}

pub fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = zeros();
    for i in 0..N {
        for k in 0..N {
            if a[i][k] == c(0.0) {
                continue;
            }
            for j in 0..N {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn add(a: &Mat, b: &Mat, scale: Complex64) -> Mat {
    let mut out = a.clone();
    for i in 0..N {
        for j in 0..N {
            out[i][j] += scale * b[i][j];
        }
    }
    out
}

pub fn dagger(a: &Mat) -> Mat {
    let mut out = zeros();
    for i in 0..N {
        for j in 0..N {
            out[j][i] = a[i][j].conj();
        }
    }
    out
}

pub fn apply(a: &Mat, v: &[Complex64]) -> Vec<Complex64> {
    (0..N).map(|i| (0..N).map(|j| a[i][j] * v[j]).sum()).collect()
}

pub fn basis(index: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0); N];
    v[index] = c(1.0);
    v
}

/// `|i⟩⟨j|` on the full register.
pub fn outer(i: usize, j: usize) -> Mat {
    let mut m = zeros();
    m[i][j] = c(1.0);
    m
}

/// Tensor product with `ops[q]` acting on qubit `q`.
pub fn kron4(ops: [Mat2; 4]) -> Mat {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = ops.iter().enumerate().map(|(q, op)| op[(i >> (3 - q)) & 1][(j >> (3 - q)) & 1]).product();
        }
    }
    m
}

const I2: Mat2 =
    [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];

fn m2(a: f64, b: f64, cc: f64, d: f64) -> Mat2 {
    [[c(a), c(b)], [c(cc), c(d)]]
}

fn on(q: usize, op: Mat2) -> Mat {
    let mut ops = [I2; 4];
    ops[q] = op;
    kron4(ops)
}

fn on2(a: usize, op_a: Mat2, b: usize, op_b: Mat2) -> Mat {
    let mut ops = [I2; 4];
    ops[a] = op_a;
    ops[b] = op_b;
    kron4(ops)
}

/// Planar rotation on `{|01⟩, |10⟩}` of `(a, b)`, identity on `|00⟩, |11⟩`,
/// assembled from projectors and transition operators.
pub fn rbs_matrix(a: usize, b: usize, phi: f64) -> Mat {
    let p0 = m2(1.0, 0.0, 0.0, 0.0);
    let p1 = m2(0.0, 0.0, 0.0, 1.0);
    let lower = m2(0.0, 0.0, 1.0, 0.0); // |1⟩⟨0|
    let raise = m2(0.0, 1.0, 0.0, 0.0); // |0⟩⟨1|
    let (s, co) = phi.sin_cos();
    let mut m = add(&on2(a, p0, b, p0), &on2(a, p1, b, p1), c(1.0));
    m = add(&m, &on2(a, p0, b, p1), c(co));
    m = add(&m, &on2(a, p1, b, p0), c(co));
    // |01⟩⟨10| and |10⟩⟨01|
    m = add(&m, &on2(a, raise, b, lower), c(s));
    m = add(&m, &on2(a, lower, b, raise), c(-s));
    m
}

pub fn gate_matrix(g: &Gate) -> Mat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match *g {
        Gate::X(q) => on(q, m2(0.0, 1.0, 1.0, 0.0)),
        Gate::Z(q) => on(q, m2(1.0, 0.0, 0.0, -1.0)),
        Gate::H(q) => on(q, m2(h, h, h, -h)),
        Gate::Ry(q, t) => {
            let (s, co) = (t / 2.0).sin_cos();
            on(q, m2(co, -s, s, co))
        }
        Gate::Cz(a, b) => add(&identity(), &on2(a, m2(0.0, 0.0, 0.0, 1.0), b, m2(0.0, 0.0, 0.0, 1.0)), c(-2.0)),
        Gate::Rbs(a, b, phi) => rbs_matrix(a, b, phi),
    }
}

pub fn circuit_matrix(circuit: &Circuit) -> Mat {
    circuit.gates().iter().fold(identity(), |acc, g| mul(&gate_matrix(g), &acc))
}

/// Largest entrywise gap after removing the best global phase.
pub fn phase_distance(a: &Mat, b: &Mat) -> f64 {
    let overlap: Complex64 =
        (0..N).flat_map(|i| (0..N).map(move |j| (i, j))).map(|(i, j)| b[i][j].conj() * a[i][j]).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { c(1.0) };
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            worst = worst.max((a[i][j] - phase * b[i][j]).norm());
        }
    }
    worst
}

pub fn max_distance(a: &Mat, b: &Mat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            worst = worst.max((a[i][j] - b[i][j]).norm());
        }
    }
    worst
}

/// Haar-random real unit 4-vector from normalized Gaussians.
pub fn random_unit<R: Rng>(rng: &mut R) -> [f64; 4] {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.map(|x| x / n);
        }
    }
}

pub fn dot(x: &[f64; 4], y: &[f64; 4]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Unary loader for `v` as a matrix: the three tree rotations applied to a
/// register already holding `|1000⟩`. Angles come from `atan2` directly.
pub fn loader_matrix(v: &[f64; 4]) -> Mat {
    let top = v[2].hypot(v[3]).atan2(v[0].hypot(v[1]));
    let left = v[1].atan2(v[0]);
    let right = v[3].atan2(v[2]);
    let g = [rbs_matrix(0, 2, top), rbs_matrix(0, 1, left), rbs_matrix(2, 3, right)];
    mul(&g[2], &mul(&g[1], &g[0]))
}

/// `A = L_y† · L_x · X_0` and the textbook iterate
/// `(A·S0·A†·Sχ)^t · A` with `S0 = I − 2|0⟩⟨0|`, `Sχ = I − 2|1000⟩⟨1000|`.
pub fn reference_iterate(x: &[f64; 4], y: &[f64; 4], t: usize) -> Mat {
    let a = mul(&dagger(&loader_matrix(y)), &mul(&loader_matrix(x), &gate_matrix(&Gate::X(0))));
    let s0 = add(&identity(), &outer(0, 0), c(-2.0));
    let s_chi = add(&identity(), &outer(8, 8), c(-2.0));
    let grover = mul(&a, &mul(&s0, &mul(&dagger(&a), &s_chi)));
    let mut u = a;
    for _ in 0..t {
        u = mul(&grover, &u);
    }
    u
}

pub fn probabilities(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|z| z.norm_sqr()).collect()
}
