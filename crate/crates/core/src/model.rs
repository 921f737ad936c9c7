//! Mass-spring-damper model of an electromagnetic soft actuator network.
//!
//! Every actuator is a pair of coil masses joined by an intra-actuator
//! linkage `(k1, c1)`. Consecutive actuators in a column are joined by an
//! inter-actuator linkage `(k2, c2)`, and both ends of a column are anchored
//! to the fixed frame through `(k2, c2)`. Columns are mechanically
//! independent. A single force input per actuator drives both of its masses,
//! and the external disturbance enters through the same channels.
//!
//! States are ordered as all positions followed by all velocities; masses are
//! numbered column by column.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::kv::{ConfigError, KvFile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("force-voltage map has zero slope")]
    InvalidMap,
}

/// Physical constants of one actuator and its linkages (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsaParams {
    /// Mass of one coil, kg.
    pub m: f64,
    /// Intra-actuator stiffness, N/m.
    pub k1: f64,
    /// Intra-actuator damping, N·s/m.
    pub c1: f64,
    /// Inter-actuator stiffness, N/m.
    pub k2: f64,
    /// Inter-actuator damping, N·s/m.
    pub c2: f64,
}

impl Default for EsaParams {
    /// Measured silicone-linkage actuator: one stiffness and one damping
    /// value shared by both linkages.
    fn default() -> Self {
        Self {
            m: 2.94e-3,
            k1: 0.343,
            c1: 1.75e-16,
            k2: 0.343,
            c2: 1.75e-16,
        }
    }
}

impl EsaParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [self.m, self.k1, self.c1, self.k2, self.c2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParams("non-finite value".into()));
        }
        if self.m <= 0.0 {
            return Err(ModelError::InvalidParams(format!("mass {} must be positive", self.m)));
        }
        if self.k1 < 0.0 || self.k2 < 0.0 || self.c1 < 0.0 || self.c2 < 0.0 {
            return Err(ModelError::InvalidParams(
                "stiffness and damping must be nonnegative".into(),
            ));
        }
        if self.k1 == 0.0 && self.k2 == 0.0 {
            return Err(ModelError::InvalidParams("k1 and k2 cannot both be zero".into()));
        }
        Ok(())
    }
}

/// Grid layout: `columns` independent serial chains of
/// `actuators_per_column` actuators each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkTopology {
    pub columns: usize,
    pub actuators_per_column: usize,
}

impl Default for NetworkTopology {
    fn default() -> Self {
        Self {
            columns: 2,
            actuators_per_column: 4,
        }
    }
}

impl NetworkTopology {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.columns == 0 || self.actuators_per_column == 0 {
            return Err(ModelError::InvalidTopology(format!(
                "{} columns x {} actuators",
                self.columns, self.actuators_per_column
            )));
        }
        Ok(())
    }

    pub fn n_actuators(&self) -> usize {
        self.columns * self.actuators_per_column
    }

    pub fn n_masses(&self) -> usize {
        2 * self.n_actuators()
    }

    pub fn n_states(&self) -> usize {
        4 * self.n_actuators()
    }
}

/// `x' = A x + Bu u + Bd d`, `p = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub bu: DMatrix<f64>,
    pub bd: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpace {
    pub fn n_x(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_u(&self) -> usize {
        self.bu.ncols()
    }
    pub fn n_d(&self) -> usize {
        self.bd.ncols()
    }
    pub fn n_p(&self) -> usize {
        self.c.nrows()
    }

    /// Checks that all matrix shapes agree and every entry is finite.
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n_x();
        let ok = self.a.ncols() == n
            && self.bu.nrows() == n
            && self.bd.nrows() == n
            && self.c.ncols() == n
            && self.d.nrows() == self.c.nrows()
            && self.d.ncols() == self.bu.ncols();
        if !ok {
            return Err(ModelError::InvalidTopology("inconsistent state-space shapes".into()));
        }
        let finite = [&self.a, &self.bu, &self.bd, &self.c, &self.d]
            .iter()
            .all(|m| m.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(ModelError::InvalidParams("non-finite state-space entry".into()));
        }
        Ok(())
    }
}

/// Affine force-voltage characteristic of one actuator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceVoltageMap {
    /// N/V
    pub slope: f64,
    /// N
    pub offset: f64,
}

impl Default for ForceVoltageMap {
    fn default() -> Self {
        Self {
            slope: 0.0146,
            offset: -0.0088,
        }
    }
}

impl ForceVoltageMap {
    pub fn force_from_voltage(&self, volts: f64) -> f64 {
        self.slope * volts + self.offset
    }

    pub fn voltage_from_force(&self, newtons: f64) -> Result<f64, ModelError> {
        if self.slope == 0.0 || !self.slope.is_finite() {
            return Err(ModelError::InvalidMap);
        }
        Ok((newtons - self.offset) / self.slope)
    }
}

/// Second-order description `M x'' + Cd x' + K x = E (u + d)` with a scalar
/// coil mass.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalNetwork {
    pub mass: f64,
    pub stiffness: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    /// `n_masses x n_actuators`, one column per actuator hitting both coils.
    pub input_map: DMatrix<f64>,
}

impl MechanicalNetwork {
    pub fn n_masses(&self) -> usize {
        self.stiffness.nrows()
    }

    /// First-order form with unit performance weights.
    pub fn state_space(&self) -> StateSpace {
        let nm = self.n_masses();
        let na = self.input_map.ncols();
        let nx = 2 * nm;
        let inv_m = 1.0 / self.mass;
        let mut a = DMatrix::zeros(nx, nx);
        for i in 0..nm {
            a[(i, nm + i)] = 1.0;
            for j in 0..nm {
                a[(nm + i, j)] = -self.stiffness[(i, j)] * inv_m;
                a[(nm + i, nm + j)] = -self.damping[(i, j)] * inv_m;
            }
        }
        let mut bu = DMatrix::zeros(nx, na);
        for i in 0..nm {
            for j in 0..na {
                bu[(nm + i, j)] = self.input_map[(i, j)] * inv_m;
            }
        }
        let bd = bu.clone();
        let mut c = DMatrix::zeros(nm, nx);
        for i in 0..nm {
            c[(i, i)] = 1.0;
        }
        let mut d = DMatrix::zeros(nm, na);
        for i in 0..na.min(nm) {
            d[(i, i)] = 1.0;
        }
        StateSpace { a, bu, bd, c, d }
    }

    /// Kinetic plus elastic energy of state `x = [positions; velocities]`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let nm = self.n_masses();
        let (pos, vel) = x.split_at(nm);
        let kinetic: f64 = vel.iter().map(|v| v * v).sum::<f64>() * 0.5 * self.mass;
        let mut elastic = 0.0;
        for i in 0..nm {
            for j in 0..nm {
                elastic += pos[i] * self.stiffness[(i, j)] * pos[j];
            }
        }
        kinetic + 0.5 * elastic
    }
}

/// Adds a two-terminal element of value `v` between masses `i` and `j`;
/// `None` stands for the fixed frame.
fn stamp(mat: &mut DMatrix<f64>, i: Option<usize>, j: Option<usize>, v: f64) {
    if let Some(i) = i {
        mat[(i, i)] += v;
    }
    if let Some(j) = j {
        mat[(j, j)] += v;
    }
    if let (Some(i), Some(j)) = (i, j) {
        mat[(i, j)] -= v;
        mat[(j, i)] -= v;
    }
}

pub fn mechanical_network(
    params: &EsaParams,
    topo: &NetworkTopology,
) -> Result<MechanicalNetwork, ModelError> {
    params.validate()?;
    topo.validate()?;
    let nm = topo.n_masses();
    let na = topo.n_actuators();
    let per_col = 2 * topo.actuators_per_column;
    let mut stiffness = DMatrix::zeros(nm, nm);
    let mut damping = DMatrix::zeros(nm, nm);
    let mut input_map = DMatrix::zeros(nm, na);
    for col in 0..topo.columns {
        let base = col * per_col;
        // Anchors at both ends of the column.
        stamp(&mut stiffness, Some(base), None, params.k2);
        stamp(&mut damping, Some(base), None, params.c2);
        stamp(&mut stiffness, Some(base + per_col - 1), None, params.k2);
        stamp(&mut damping, Some(base + per_col - 1), None, params.c2);
        for act in 0..topo.actuators_per_column {
            let lo = base + 2 * act;
            stamp(&mut stiffness, Some(lo), Some(lo + 1), params.k1);
            stamp(&mut damping, Some(lo), Some(lo + 1), params.c1);
            if act + 1 < topo.actuators_per_column {
                stamp(&mut stiffness, Some(lo + 1), Some(lo + 2), params.k2);
                stamp(&mut damping, Some(lo + 1), Some(lo + 2), params.c2);
            }
            let u = col * topo.actuators_per_column + act;
            input_map[(lo, u)] = 1.0;
            input_map[(lo + 1, u)] = 1.0;
        }
    }
    Ok(MechanicalNetwork {
        mass: params.m,
        stiffness,
        damping,
        input_map,
    })
}

/// One serial chain of `n_actuators` actuators with unit performance
/// weights: `C = [I 0]`, `D = [I; 0]`.
pub fn build_chain(params: &EsaParams, n_actuators: usize) -> Result<StateSpace, ModelError> {
    if n_actuators == 0 {
        return Err(ModelError::InvalidTopology("a chain needs at least one actuator".into()));
    }
    let topo = NetworkTopology {
        columns: 1,
        actuators_per_column: n_actuators,
    };
    Ok(mechanical_network(params, &topo)?.state_space())
}

/// Full network with `C = [c_weight I_{2N}  0]` on positions and
/// `D = [d_weight I_N; 0]`.
pub fn build_network(
    params: &EsaParams,
    topo: &NetworkTopology,
    c_weight: f64,
    d_weight: f64,
) -> Result<StateSpace, ModelError> {
    if !c_weight.is_finite() || !d_weight.is_finite() {
        return Err(ModelError::InvalidParams("non-finite output weight".into()));
    }
    let mut ss = mechanical_network(params, topo)?.state_space();
    ss.c *= c_weight;
    ss.d *= d_weight;
    Ok(ss)
}

/// Contents of a model configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub params: EsaParams,
    pub topology: NetworkTopology,
    pub c_weight: f64,
    pub d_weight: f64,
    pub force_map: ForceVoltageMap,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            params: EsaParams::default(),
            topology: NetworkTopology::default(),
            c_weight: 0.1,
            d_weight: 0.01,
            force_map: ForceVoltageMap::default(),
        }
    }
}

const MODEL_KEYS: &[&str] = &[
    "m",
    "k1",
    "c1",
    "k2",
    "c2",
    "columns",
    "actuators_per_column",
    "c_weight",
    "d_weight",
    "fv_slope",
    "fv_offset",
];

impl ModelConfig {
    /// Parses a model file; missing keys keep their default values.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let kv = KvFile::parse(text, MODEL_KEYS)?;
        let d = Self::default();
        let cfg = Self {
            params: EsaParams {
                m: kv.get_or("m", d.params.m)?,
                k1: kv.get_or("k1", d.params.k1)?,
                c1: kv.get_or("c1", d.params.c1)?,
                k2: kv.get_or("k2", d.params.k2)?,
                c2: kv.get_or("c2", d.params.c2)?,
            },
            topology: NetworkTopology {
                columns: kv.get_or("columns", d.topology.columns)?,
                actuators_per_column: kv
                    .get_or("actuators_per_column", d.topology.actuators_per_column)?,
            },
            c_weight: kv.get_or("c_weight", d.c_weight)?,
            d_weight: kv.get_or("d_weight", d.d_weight)?,
            force_map: ForceVoltageMap {
                slope: kv.get_or("fv_slope", d.force_map.slope)?,
                offset: kv.get_or("fv_offset", d.force_map.offset)?,
            },
        };
        cfg.params
            .validate()
            .and_then(|_| cfg.topology.validate())
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(cfg.force_map.slope > 0.0) {
            return Err(ConfigError::Invalid("fv_slope must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn to_kv_string(&self) -> String {
        format!(
            "m = {:?}\nk1 = {:?}\nc1 = {:?}\nk2 = {:?}\nc2 = {:?}\ncolumns = {}\nactuators_per_column = {}\nc_weight = {:?}\nd_weight = {:?}\nfv_slope = {:?}\nfv_offset = {:?}\n",
            self.params.m,
            self.params.k1,
            self.params.c1,
            self.params.k2,
            self.params.c2,
            self.topology.columns,
            self.topology.actuators_per_column,
            self.c_weight,
            self.d_weight,
            self.force_map.slope,
            self.force_map.offset,
        )
    }

    pub fn state_space(&self) -> Result<StateSpace, ModelError> {
        build_network(&self.params, &self.topology, self.c_weight, self.d_weight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params(c: f64) -> EsaParams {
        EsaParams {
            m: 1.0,
            k1: 1.0,
            c1: c,
            k2: 1.0,
            c2: c,
        }
    }

    #[test]
    fn force_voltage_examples() {
        let map = ForceVoltageMap::default();
        assert!((map.force_from_voltage(0.0) + 0.0088).abs() < 1e-15);
        assert!((map.force_from_voltage(12.0) - 0.1664).abs() < 1e-12);
        assert!(map.force_from_voltage(0.0088 / 0.0146).abs() < 1e-15);
        assert!(map.voltage_from_force(-0.0088).unwrap().abs() < 1e-12);
        assert!((map.voltage_from_force(0.1664).unwrap() - 12.0).abs() < 1e-12);
        assert!((map.voltage_from_force(0.0).unwrap() - 0.60274).abs() < 1e-5);
        let bad = ForceVoltageMap {
            slope: 0.0,
            offset: 1.0,
        };
        assert_eq!(bad.voltage_from_force(1.0), Err(ModelError::InvalidMap));
    }

    #[test]
    fn chain_rows_match_first_mass_equation() {
        let p = EsaParams {
            m: 2.0,
            k1: 3.0,
            c1: 0.5,
            k2: 7.0,
            c2: 0.25,
        };
        let ss = build_chain(&p, 2).unwrap();
        assert_eq!(ss.n_x(), 8);
        // velocity-derivative row of mass 1 is row 4
        assert_eq!(ss.a[(4, 0)], -(p.k1 + p.k2) / p.m);
        assert_eq!(ss.a[(4, 4)], -(p.c1 + p.c2) / p.m);
        assert_eq!(ss.a[(4, 1)], p.k1 / p.m);
        assert_eq!(ss.a[(4, 5)], p.c1 / p.m);
        assert_eq!(ss.bu[(4, 0)], 1.0 / p.m);
        assert_eq!(ss.bu[(5, 0)], 1.0 / p.m);
        assert_eq!(ss.bu, ss.bd);
    }

    #[test]
    fn undamped_chain_has_zero_velocity_block() {
        let ss = build_chain(&unit_params(0.0), 3).unwrap();
        let n = 6;
        assert!(ss.a.view((n, n), (n, n)).iter().all(|&v| v == 0.0));
        // top rows are [0 I]
        for i in 0..n {
            for j in 0..2 * n {
                let expect = if j == n + i { 1.0 } else { 0.0 };
                assert_eq!(ss.a[(i, j)], expect);
            }
        }
    }

    #[test]
    fn undamped_eigenvalues_are_imaginary() {
        let ss = build_chain(&unit_params(0.0), 2).unwrap();
        let eig = ss.a.clone().complex_eigenvalues();
        for l in eig.iter() {
            assert!(l.re.abs() < 1e-9, "{l}");
            assert!(l.im.abs() > 1e-3);
        }
    }

    #[test]
    fn network_dimensions_and_weights() {
        let ss = build_network(&EsaParams::default(), &NetworkTopology::default(), 0.1, 0.01).unwrap();
        assert_eq!((ss.n_x(), ss.n_u(), ss.n_d(), ss.n_p()), (32, 8, 8, 16));
        assert_eq!(ss.d.ncols(), 8);
        for i in 0..16 {
            for j in 0..32 {
                assert_eq!(ss.c[(i, j)], if i == j { 0.1 } else { 0.0 });
            }
            for j in 0..8 {
                assert_eq!(ss.d[(i, j)], if i == j { 0.01 } else { 0.0 });
            }
        }
    }

    #[test]
    fn single_column_reproduces_chain() {
        let p = EsaParams::default();
        let topo = NetworkTopology {
            columns: 1,
            actuators_per_column: 1,
        };
        let net = build_network(&p, &topo, 1.0, 1.0).unwrap();
        assert_eq!(net.a.shape(), (4, 4));
        assert_eq!(net, build_chain(&p, 1).unwrap());
    }

    #[test]
    fn columns_are_decoupled() {
        let ss = build_network(&EsaParams::default(), &NetworkTopology::default(), 1.0, 1.0).unwrap();
        // stiffness rows of column 0 masses never touch column 1 positions
        for i in 0..8 {
            for j in 8..16 {
                assert_eq!(ss.a[(16 + i, j)], 0.0);
            }
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(build_chain(&EsaParams::default(), 0).is_err());
        let mut p = EsaParams::default();
        p.k1 = 0.0;
        p.k2 = 0.0;
        assert!(p.validate().is_err());
        p = EsaParams::default();
        p.m = 0.0;
        assert!(p.validate().is_err());
        let topo = NetworkTopology {
            columns: 0,
            actuators_per_column: 3,
        };
        assert!(build_network(&EsaParams::default(), &topo, 1.0, 1.0).is_err());
    }

    #[test]
    fn config_round_trip_and_unknown_keys() {
        let cfg = ModelConfig::default();
        let back = ModelConfig::parse(&cfg.to_kv_string()).unwrap();
        assert_eq!(cfg, back);
        assert!(ModelConfig::parse("mass = 1").is_err());
        let small = ModelConfig::parse("columns = 1\nactuators_per_column = 2\n").unwrap();
        assert_eq!(small.topology.n_actuators(), 2);
        assert!(ModelConfig::parse("m = -1").is_err());
    }
}
