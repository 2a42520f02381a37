//! Brute-force reference implementation of the sphere-plate Lifshitz force
//! for gold/ethanol/gold. Shares no code with the library: its own constants,
//! table reader, trapezoid Kramers-Kronig integral, explicit Matsubara loop
//! and a fixed trapezoid grid in the axial wavevector.

#![allow(dead_code)]

use std::f64::consts::PI;

pub const KB: f64 = 1.380649e-23;
pub const HBAR: f64 = 1.054571817e-34;
pub const C: f64 = 299_792_458.0;
pub const EV: f64 = 1.602176634e-19 / 1.054571817e-34;

const GOLD: &str = include_str!("../../data/gold_im_eps.txt");

pub struct Gold {
    x: Vec<f64>,
    im: Vec<f64>,
    wp: f64,
    gamma: f64,
    crossover: f64,
}

impl Gold {
    pub fn load() -> Self {
        let mut x = Vec::new();
        let mut im = Vec::new();
        for line in GOLD.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            x.push(it.next().unwrap().parse::<f64>().unwrap() * EV);
            im.push(it.next().unwrap().parse::<f64>().unwrap());
        }
        Self {
            x,
            im,
            wp: 7.5 * EV,
            gamma: 0.061 * EV,
            crossover: 0.125 * EV,
        }
    }

    /// Im ε on the real axis.
    fn im_eps(&self, w: f64) -> f64 {
        if w < self.crossover {
            return self.wp * self.wp * self.gamma / (w * (w * w + self.gamma * self.gamma));
        }
        let n = self.x.len();
        if w >= self.x[n - 1] {
            return self.im[n - 1] * (self.x[n - 1] / w).powi(3);
        }
        if w <= self.x[0] {
            return self.im[0];
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.x[mid] <= w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = (w - self.x[lo]) / (self.x[hi] - self.x[lo]);
        self.im[lo] + t * (self.im[hi] - self.im[lo])
    }

    /// ε(iξ) = 1 + (2/π)∫ x Im ε(x)/(x² + ξ²) dx by the trapezoid rule in
    /// ln x on `points` nodes between 1e-9 eV and 1e8 eV.
    pub fn eps(&self, xi: f64, points: usize) -> f64 {
        let (a, b) = ((1e-9 * EV).ln(), (1e8 * EV).ln());
        let h = (b - a) / (points - 1) as f64;
        let mut sum = 0.0;
        for i in 0..points {
            let w = (a + i as f64 * h).exp();
            let f = w * w * self.im_eps(w) / (w * w + xi * xi);
            sum += if i == 0 || i == points - 1 {
                0.5 * f
            } else {
                f
            };
        }
        1.0 + 2.0 / PI * sum * h
    }
}

pub fn ethanol(xi: f64) -> f64 {
    1.0 + 23.84 / (1.0 + (xi / 6.60e14).powi(2)) + 0.852 / (1.0 + (xi / 1.14e16).powi(2))
}

/// ε values of gold and ethanol at ξ_m = m·ξ₁ for m = 1..=m_max.
pub struct Spectrum {
    pub xi1: f64,
    pub gold: Vec<f64>,
    pub ethanol: Vec<f64>,
}

impl Spectrum {
    pub fn new(temperature: f64, m_max: usize, kk_points: usize) -> Self {
        let g = Gold::load();
        let xi1 = 2.0 * PI * KB * temperature / HBAR;
        let mut gold = vec![f64::INFINITY];
        let mut eth = vec![ethanol(0.0)];
        for m in 1..=m_max {
            let xi = m as f64 * xi1;
            gold.push(g.eps(xi, kk_points));
            eth.push(ethanol(xi));
        }
        Self {
            xi1,
            gold,
            ethanol: eth,
        }
    }
}

/// Force in N at separation `d` (m) for radius `r` (m).
pub fn force(spec: &Spectrum, temperature: f64, r: f64, d: f64, k_points: usize) -> f64 {
    let pref = KB * temperature * r;
    // m = 0: metallic TM limit, r₁r₂ = 1, TE zero. Half weight.
    let kmax = 60.0 / (2.0 * d);
    let h = kmax / (k_points - 1) as f64;
    let mut s0 = 0.0;
    for i in 1..k_points {
        let k = i as f64 * h;
        let f = k * (-(-2.0 * k * d).exp()).ln_1p();
        s0 += if i == k_points - 1 { 0.5 * f } else { f };
    }
    let mut total = 0.5 * s0 * h;
    for m in 1..spec.gold.len() {
        let xi = m as f64 * spec.xi1;
        let (e1, e3) = (spec.gold[m], spec.ethanol[m]);
        let k3min = (e3).sqrt() * xi / C;
        if 2.0 * k3min * d > 60.0 {
            break;
        }
        // integrate over k₃ = √(k² + ε₃ξ²/c²), with k dk = k₃ dk₃
        let k3max = k3min + 60.0 / (2.0 * d);
        let h = (k3max - k3min) / (k_points - 1) as f64;
        let mut s = 0.0;
        for i in 0..k_points {
            let k3 = k3min + i as f64 * h;
            let k2 = (k3 * k3 - e3 * xi * xi / (C * C)).max(0.0);
            let k1 = (k2 + e1 * xi * xi / (C * C)).sqrt();
            let te = (k1 - k3) / (k1 + k3);
            let tm = (k1 * e3 - k3 * e1) / (k1 * e3 + k3 * e1);
            let ex = (-2.0 * k3 * d).exp();
            let f = k3 * ((1.0 - te * te * ex).ln() + (1.0 - tm * tm * ex).ln());
            s += if i == 0 || i == k_points - 1 {
                0.5 * f
            } else {
                f
            };
        }
        total += s * h;
    }
    pref * total
}

/// Highest Matsubara index that contributes at separation `d` in ethanol.
pub fn m_needed(temperature: f64, d: f64) -> usize {
    let xi1 = 2.0 * PI * KB * temperature / HBAR;
    // ε_ethanol → 1 at high frequency, so k₃min ≥ ξ/c
    (60.0 * C / (2.0 * d * xi1)).ceil() as usize + 1
}

/// Half-weighted zero-frequency term for metal plates with the ionic
/// screening wavevector `kappa` (1/m).
pub fn zero_term_screened(temperature: f64, r: f64, d: f64, kappa: f64, k_points: usize) -> f64 {
    let kmax = 60.0 / (2.0 * d);
    let h = kmax / (k_points - 1) as f64;
    let mut s = 0.0;
    for i in 1..k_points {
        let k = i as f64 * h;
        let q = (k * k + kappa * kappa).sqrt();
        let f = k * (-(-2.0 * q * d).exp()).ln_1p();
        s += if i == k_points - 1 { 0.5 * f } else { f };
    }
    0.5 * KB * temperature * r * s * h
}
