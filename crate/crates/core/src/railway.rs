//! Urban railway line with passenger dynamics as an implicit MMPS system.
//!
//! Station `j` carries the state `(a_j, d_j, ρ_j, σ_j)`: arrival and departure
//! times of the `k`-th train, passengers on board after departure, and
//! passengers left waiting on the platform. Station 1 is the terminus where
//! trains are dispatched every `tau0` and dwell `tau_d`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MmpsError, Result};
use crate::model::{Kind, MmpsSystem};
use crate::tropical::{ExtReal, TropMatrix};

const NX: usize = 4;
const NY: usize = 5;
const NZ: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RailwayParams {
    /// number of stations
    #[serde(rename = "J")]
    pub stations: usize,
    /// train capacity (passengers)
    pub rho_max: f64,
    /// fraction of passengers leaving at each station
    pub beta: f64,
    /// dispatch headway at station 1
    pub tau0: f64,
    /// running time between stations
    pub tau_r: f64,
    /// minimum headway
    #[serde(rename = "tau_H")]
    pub tau_h: f64,
    /// dwell time at station 1
    pub tau_d: f64,
    /// boarding rate
    pub b: f64,
    /// platform arrival rate
    pub e: f64,
    /// alighting rate
    pub f: f64,
}

pub fn default_params() -> RailwayParams {
    RailwayParams {
        stations: 4,
        rho_max: 150.0,
        beta: 0.5,
        tau0: 120.0,
        tau_r: 120.0,
        tau_h: 30.0,
        tau_d: 60.0,
        b: 2.0,
        e: 0.5,
        f: 2.0,
    }
}

impl Default for RailwayParams {
    fn default() -> Self {
        default_params()
    }
}

/// Constants appearing in the departure and load equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl RailwayParams {
    pub const KEYS: [&'static str; 10] = [
        "J", "rho_max", "beta", "tau0", "tau_r", "tau_H", "tau_d", "b", "e", "f",
    ];

    /// Sets one parameter by name (names as in [`RailwayParams::KEYS`]).
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "J" | "stations" => {
                if value.fract() != 0.0 || value < 0.0 || !value.is_finite() {
                    return Err(MmpsError::InvalidArgument(format!(
                        "station count must be a non-negative integer, got {value}"
                    )));
                }
                self.stations = value as usize;
            }
            "rho_max" => self.rho_max = value,
            "beta" => self.beta = value,
            "tau0" => self.tau0 = value,
            "tau_r" => self.tau_r = value,
            "tau_H" | "tau_h" => self.tau_h = value,
            "tau_d" => self.tau_d = value,
            "b" => self.b = value,
            "e" => self.e = value,
            "f" => self.f = value,
            other => {
                return Err(MmpsError::InvalidArgument(format!(
                    "unknown railway parameter '{other}' (expected one of {})",
                    Self::KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("rho_max", self.rho_max),
            ("beta", self.beta),
            ("tau0", self.tau0),
            ("tau_r", self.tau_r),
            ("tau_H", self.tau_h),
            ("tau_d", self.tau_d),
            ("b", self.b),
            ("e", self.e),
            ("f", self.f),
        ];
        for (name, v) in reals {
            if !v.is_finite() {
                return Err(MmpsError::InvalidArgument(format!("{name} = {v} is not finite")));
            }
        }
        if self.stations < 2 {
            return Err(MmpsError::InvalidArgument(format!(
                "need at least 2 stations, got {}",
                self.stations
            )));
        }
        for (name, v) in [("b", self.b), ("e", self.e), ("f", self.f)] {
            if v <= 0.0 {
                return Err(MmpsError::InvalidArgument(format!("rate {name} must be positive, got {v}")));
            }
        }
        if self.b <= self.e {
            return Err(MmpsError::InvalidArgument(format!(
                "boarding rate b = {} must exceed platform arrival rate e = {}",
                self.b, self.e
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(MmpsError::InvalidArgument(format!("beta = {} outside [0, 1]", self.beta)));
        }
        if self.rho_max < 0.0 {
            return Err(MmpsError::InvalidArgument(format!("rho_max = {} is negative", self.rho_max)));
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedConstants {
        let mu1 = self.b / (self.b - self.e);
        DerivedConstants {
            mu1,
            mu2: mu1 * self.beta / self.f,
            mu3: 1.0 / (self.b - self.e),
            gamma1: self.rho_max / self.b,
            gamma2: self.beta / self.f - (1.0 - self.beta) / self.b,
        }
    }
}

pub fn state_names(stations: usize) -> Vec<String> {
    (1..=stations)
        .flat_map(|j| [format!("a{j}"), format!("d{j}"), format!("rho{j}"), format!("sigma{j}")])
        .collect()
}

/// Assembles the block-diagonal `A`, `B`, `C` and block-bidiagonal `D`.
pub fn build_model(params: &RailwayParams) -> Result<MmpsSystem> {
    params.validate()?;
    let p = params;
    let k = p.derived();
    let nst = p.stations;
    let (n, m, q) = (NX * nst, NY * nst, NZ * nst);

    let mut a = TropMatrix::filled(n, m, ExtReal::Eps);
    let mut b = TropMatrix::filled(m, q, ExtReal::Top);
    let mut c = DMatrix::zeros(q, n);
    let mut d = DMatrix::zeros(q, n);

    for j in 0..nst {
        let (ox, oy, oz) = (NX * j, NY * j, NZ * j);
        let mut set_a = |i: usize, jj: usize, v: f64| a.set(ox + i, oy + jj, ExtReal::Fin(v));
        let mut set_b = |jj: usize, l: usize, v: f64| b.set(oy + jj, oz + l, ExtReal::Fin(v));
        if j == 0 {
            set_a(0, 0, 0.0);
            set_a(1, 2, 0.0);
            set_a(2, 3, 0.0);
            set_a(3, 4, 0.0);
            set_b(0, 0, p.tau0);
            set_b(1, 1, 0.0);
            set_b(2, 2, p.tau_d);
            set_b(3, 4, 0.0);
            set_b(4, 5, 0.0);
            // a1(k-1) feeds z1 and z2, rho1(k-1) is carried in z5
            c[(oz, ox)] = 1.0;
            c[(oz + 1, ox)] = 1.0;
            c[(oz + 4, ox + 2)] = 1.0;
            // departure and headway read the current arrival
            d[(oz + 2, ox)] = 1.0;
            d[(oz + 3, ox)] = 1.0;
        } else {
            set_a(0, 0, p.tau_r);
            set_a(0, 1, p.tau_h);
            set_a(1, 2, 0.0);
            set_a(2, 3, 0.0);
            set_a(3, 4, 0.0);
            set_b(0, 0, 0.0);
            set_b(1, 1, 0.0);
            set_b(2, 2, 0.0);
            set_b(2, 3, k.gamma1);
            set_b(3, 4, 0.0);
            set_b(4, 5, 0.0);

            c[(oz + 1, ox + 1)] = 1.0;
            c[(oz + 2, ox + 1)] = 1.0 - k.mu1;
            c[(oz + 2, ox + 3)] = k.mu3;
            c[(oz + 5, ox + 1)] = -p.e;
            c[(oz + 5, ox + 3)] = 1.0;

            d[(oz + 2, ox)] = k.mu1;
            d[(oz + 3, ox)] = 1.0;
            d[(oz + 4, ox)] = -p.b;
            d[(oz + 4, ox + 1)] = p.b;
            d[(oz + 5, ox)] = p.b;
            d[(oz + 5, ox + 1)] = p.e - p.b;

            // coupling to the previous station's current state
            let px = ox - NX;
            d[(oz, px + 1)] = 1.0;
            d[(oz + 2, px + 2)] = k.mu2;
            d[(oz + 3, px + 2)] = k.gamma2;
            d[(oz + 4, px + 2)] = 1.0 - p.beta - p.b * p.beta / p.f;
            d[(oz + 5, px + 2)] = p.b * p.beta / p.f;
        }
    }

    let per_station = |ks: &[Kind]| -> Vec<Kind> { (0..nst).flat_map(|_| ks.iter().copied()).collect() };
    use Kind::{Quantity as Q, Temporal as T};
    let sys = MmpsSystem::new(
        a,
        b,
        c,
        d,
        per_station(&[T, T, Q, Q]),
        per_station(&[T, T, T, Q, Q]),
        per_station(&[T, T, T, T, Q, Q]),
    )?
    .with_state_names(state_names(nst))?;
    Ok(sys)
}
