//! Python bindings: exposes the game type, the value operators, Sybil
//! attacks, audits, the prior LP, CFMM games, and the auction mechanisms
//! as a `mevr_py` extension module.
//!
//! Build the shared object with
//! `cargo build -p mevr-python --release --features extension-module`
//! and copy `libmevr_py.so` to `mevr_py.so` somewhere on `sys.path`.

use mevr_core::auction::{self, AuctionInstance, MechanismId};
use mevr_core::cfmm::{self, Pool, PoolKind, TokenGraph};
use mevr_core::checks;
use mevr_core::game::{coalition_of, members, Coalition, Game};
use mevr_core::ops::{
    self, AttackFamily, AxiomId, OperatorId, SampleConfig, SearchConfig,
};
use mevr_core::prior::{self, PriorModel};
use mevr_core::sybil;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;
use std::collections::BTreeMap;

fn value_error(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// Recursively converts a JSON value into native Python objects.
fn json_to_py<'py>(py: Python<'py>, value: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match value {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py_report<'py, T: serde::Serialize>(py: Python<'py>, report: &T) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(report)
        .map_err(|e| PyRuntimeError::new_err(format!("report serialization failed: {e}")))?;
    json_to_py(py, &value)
}

fn coalition_from_players(players: &[usize]) -> PyResult<Coalition> {
    for &p in players {
        if p == 0 || p > mevr_core::game::MAX_PLAYERS {
            return Err(value_error(format!("player {p} out of range")));
        }
    }
    Ok(coalition_of(players))
}

fn parse_op(name: &str) -> PyResult<OperatorId> {
    OperatorId::parse(name)
        .ok_or_else(|| value_error(format!("unknown operator {name:?}")))
}

/// A transferable-utility cooperative game over players `1..=n`, stored
/// densely by coalition bitmask (player `i` is bit `i-1`).
#[pyclass(name = "Game", module = "mevr_py", skip_from_py_object)]
#[derive(Clone)]
struct PyGame {
    inner: Game,
}

#[pymethods]
impl PyGame {
    /// Game(n, values, monotone=False): `values` in bitmask order with
    /// index 0 the empty coalition.
    #[new]
    #[pyo3(signature = (n, values, monotone = false))]
    fn new(n: usize, values: Vec<f64>, monotone: bool) -> PyResult<Self> {
        Ok(PyGame { inner: Game::new(n, values, monotone).map_err(value_error)? })
    }

    /// The unanimity game worth 1 exactly on coalitions containing `members`.
    #[staticmethod]
    fn unanimity(n: usize, members: Vec<usize>) -> PyResult<Self> {
        let r = coalition_from_players(&members)?;
        Ok(PyGame { inner: Game::unanimity(n, r).map_err(value_error)? })
    }

    /// The additive game with the given singleton worths.
    #[staticmethod]
    fn additive(worths: Vec<f64>) -> PyResult<Self> {
        Ok(PyGame { inner: Game::additive(&worths).map_err(value_error)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyGame { inner: serde_json::from_str(text).map_err(value_error)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn grand_value(&self) -> f64 {
        self.inner.grand_value()
    }

    /// Worth of a coalition given as a list of players.
    fn value(&self, coalition: Vec<usize>) -> PyResult<f64> {
        let mask = coalition_from_players(&coalition)?;
        if mask & !self.inner.full() != 0 {
            return Err(value_error("coalition exceeds the player set"));
        }
        Ok(self.inner.value(mask))
    }

    /// `v(S ∪ {i}) − v(S)` for `i` outside `S`.
    fn marginal(&self, player: usize, coalition: Vec<usize>) -> PyResult<f64> {
        let mask = coalition_from_players(&coalition)?;
        self.inner.marginal(player, mask).map_err(value_error)
    }

    /// Structural classification (additivity, monotonicity, null players,
    /// interchangeable pairs, scaled-unanimity detection).
    fn profile<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py_report(py, &self.inner.profile())
    }

    fn is_monotone(&self) -> bool {
        self.inner.is_monotone()
    }

    fn scale(&self, factor: f64) -> PyResult<Self> {
        Ok(PyGame { inner: self.inner.scale(factor).map_err(value_error)? })
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyfunction]
fn shapley(game: &PyGame) -> PyResult<Vec<f64>> {
    Ok(ops::shapley(&game.inner).map_err(value_error)?.0)
}

#[pyfunction]
fn shapley_permutation_oracle(game: &PyGame) -> PyResult<Vec<f64>> {
    Ok(ops::shapley_permutation_oracle(&game.inner).map_err(value_error)?.0)
}

#[pyfunction]
fn banzhaf(game: &PyGame) -> PyResult<Vec<f64>> {
    Ok(ops::banzhaf(&game.inner).map_err(value_error)?.0)
}

#[pyfunction]
fn banzhaf_welfare(game: &PyGame) -> PyResult<f64> {
    ops::banzhaf_welfare_formula(&game.inner).map_err(value_error)
}

#[pyfunction]
fn theta(game: &PyGame) -> PyResult<Vec<f64>> {
    Ok(ops::theta(&game.inner).map_err(value_error)?.0)
}

#[pyfunction]
#[pyo3(signature = (game, k_max = 6))]
fn psi<'py>(py: Python<'py>, game: &PyGame, k_max: usize) -> PyResult<Bound<'py, PyAny>> {
    let report = ops::psi(&game.inner, &SearchConfig::with_k_max(k_max)).map_err(value_error)?;
    to_py_report(py, &report)
}

#[pyfunction]
#[pyo3(signature = (game, k_max = 6))]
fn psi_bar<'py>(py: Python<'py>, game: &PyGame, k_max: usize) -> PyResult<Bound<'py, PyAny>> {
    let report = ops::psi_bar(&game.inner, &SearchConfig::with_k_max(k_max)).map_err(value_error)?;
    to_py_report(py, &report)
}

#[pyfunction]
fn pro_rata(shares: Vec<f64>, total_value: f64) -> PyResult<Vec<f64>> {
    Ok(ops::pro_rata(&shares, total_value).map_err(value_error)?.0)
}

/// Returns the extended game and the attacker's identity list.
#[pyfunction]
fn copy_extension(game: &PyGame, player: usize, k: usize) -> PyResult<(PyGame, Vec<usize>)> {
    let ext = sybil::copy_extension(&game.inner, player, k).map_err(value_error)?;
    Ok((PyGame { inner: ext.extended().clone() }, ext.attacker_identities()))
}

#[pyfunction]
fn split_extension(game: &PyGame, player: usize, k: usize) -> PyResult<(PyGame, Vec<usize>)> {
    let ext = sybil::split_extension(&game.inner, player, k).map_err(value_error)?;
    Ok((PyGame { inner: ext.extended().clone() }, ext.attacker_identities()))
}

/// Merges `players` into one fresh identity (the highest index of the
/// returned game); used for both the reduced and the collusion game.
#[pyfunction]
fn merge_players(game: &PyGame, players: Vec<usize>) -> PyResult<(PyGame, usize)> {
    let mask = coalition_from_players(&players)?;
    let merged = sybil::reduced_game(&game.inner, mask).map_err(value_error)?;
    Ok((PyGame { inner: merged.game().clone() }, merged.merged_player()))
}

#[pyfunction]
#[pyo3(signature = (game, player, operator = "shapley", family = "mixed", k_max = 6))]
fn optimal_sybil_strategy<'py>(
    py: Python<'py>,
    game: &PyGame,
    player: usize,
    operator: &str,
    family: &str,
    k_max: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let op = parse_op(operator)?;
    let family = AttackFamily::parse(family)
        .ok_or_else(|| value_error(format!("unknown family {family:?}")))?;
    let report = ops::optimal_sybil_strategy(
        &game.inner,
        player,
        op,
        family,
        k_max,
        &SearchConfig::with_k_max(k_max),
    )
    .map_err(value_error)?;
    to_py_report(py, &report)
}

#[pyfunction]
#[pyo3(signature = (operator, axioms = None, light = false, seed = 1729, k_max = 3))]
fn audit_operator<'py>(
    py: Python<'py>,
    operator: &str,
    axioms: Option<Vec<String>>,
    light: bool,
    seed: u64,
    k_max: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let op = parse_op(operator)?;
    let axioms: Vec<AxiomId> = match axioms {
        None => AxiomId::ALL.to_vec(),
        Some(codes) => codes
            .iter()
            .map(|c| AxiomId::parse(c).ok_or_else(|| value_error(format!("unknown axiom {c:?}"))))
            .collect::<PyResult<_>>()?,
    };
    let mut sample = if light || matches!(op, OperatorId::Psi | OperatorId::PsiBar) {
        SampleConfig::light()
    } else {
        SampleConfig::default()
    };
    sample.seed = seed;
    sample.sybil_k_max = k_max.max(1);
    let results = ops::audit(op, &axioms, &sample, &SearchConfig::with_k_max(k_max.max(1)))
        .map_err(value_error)?;
    to_py_report(py, &results)
}

#[pyfunction]
#[pyo3(signature = (k_max = 2))]
fn trilemma<'py>(py: Python<'py>, k_max: usize) -> PyResult<Bound<'py, PyAny>> {
    let report = ops::trilemma_demo(&SearchConfig::with_k_max(k_max.max(1))).map_err(value_error)?;
    to_py_report(py, &report)
}

/// Solves the prior-optimal rebate LP for `p = {count: mass}`.
#[pyfunction]
#[pyo3(signature = (p, y_max = None))]
fn solve_prior_lp<'py>(
    py: Python<'py>,
    p: BTreeMap<usize, f64>,
    y_max: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let prior = PriorModel::new(p, y_max).map_err(value_error)?;
    let policy = prior::solve_prior_optimal(&prior).map_err(value_error)?;
    let body = serde_json::json!({
        "n_max": prior.n_max(),
        "y_max": prior.y_max(),
        "prior_free_welfare": prior.prior_free_welfare(),
        "policy": policy,
    });
    json_to_py(py, &body)
}

#[pyfunction]
fn prior_free_bound(n: usize) -> PyResult<f64> {
    if n == 0 {
        return Err(value_error("player count must be positive"));
    }
    Ok(prior::prior_free_bound(n))
}

#[pyfunction]
#[pyo3(signature = (support, steps, y_max = None))]
fn sweep_priors<'py>(
    py: Python<'py>,
    support: Vec<usize>,
    steps: usize,
    y_max: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let table = prior::sweep_priors(&support, steps, y_max).map_err(value_error)?;
    to_py_report(py, &table)
}

/// Arbitrage profit of a two-asset pool against reference prices.
/// `kind` is "cp" or a geometric weight in (0, 1).
#[pyfunction]
#[pyo3(signature = (reserves, prices, weight = None))]
fn arb_profit(reserves: (f64, f64), prices: (f64, f64), weight: Option<f64>) -> PyResult<f64> {
    let kind = match weight {
        None => PoolKind::ConstantProduct,
        Some(w) => PoolKind::WeightedGeometric(w),
    };
    let pool = Pool::new(("A".into(), "B".into()), reserves, kind, 1).map_err(value_error)?;
    let inst = cfmm::ArbInstance::new(pool, prices).map_err(value_error)?;
    Ok(cfmm::arb(&inst).profit)
}

/// The single-pool liquidity game for share holders of a constant-product
/// (or weighted) pool.
#[pyfunction]
#[pyo3(signature = (shares, reserves, prices, weight = None))]
fn lp_game(
    shares: Vec<f64>,
    reserves: (f64, f64),
    prices: (f64, f64),
    weight: Option<f64>,
) -> PyResult<PyGame> {
    let kind = match weight {
        None => PoolKind::ConstantProduct,
        Some(w) => PoolKind::WeightedGeometric(w),
    };
    let pool = Pool::new(("A".into(), "B".into()), reserves, kind, 1).map_err(value_error)?;
    Ok(PyGame { inner: cfmm::lp_game(&shares, &pool, prices).map_err(value_error)? })
}

/// Owner game of a token graph given as JSON; returns (game, owners).
#[pyfunction]
#[pyo3(signature = (graph_json, max_cycle_len = 4))]
fn graph_game(graph_json: &str, max_cycle_len: usize) -> PyResult<(PyGame, Vec<usize>)> {
    let graph: TokenGraph = serde_json::from_str(graph_json).map_err(value_error)?;
    let gg = cfmm::graph_game(&graph, max_cycle_len).map_err(value_error)?;
    Ok((PyGame { inner: gg.game }, gg.owners))
}

#[pyfunction]
#[pyo3(signature = (graph_json, max_cycle_len = 4))]
fn cyclic_arb<'py>(
    py: Python<'py>,
    graph_json: &str,
    max_cycle_len: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let graph: TokenGraph = serde_json::from_str(graph_json).map_err(value_error)?;
    let best = cfmm::cyclic_arb(&graph, max_cycle_len).map_err(value_error)?;
    to_py_report(py, &best)
}

#[pyfunction]
#[pyo3(signature = (graph_json, pool_index, operator = "shapley", max_cycle_len = 4))]
fn token_split_attack<'py>(
    py: Python<'py>,
    graph_json: &str,
    pool_index: usize,
    operator: &str,
    max_cycle_len: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let graph: TokenGraph = serde_json::from_str(graph_json).map_err(value_error)?;
    let report = cfmm::token_split_attack(
        &graph,
        pool_index,
        parse_op(operator)?,
        max_cycle_len,
        &SearchConfig::default(),
    )
    .map_err(value_error)?;
    to_py_report(py, &report)
}

/// Runs an auction mechanism ("myerson", "mev_max" or "tau") on an
/// instance given as JSON.
#[pyfunction]
#[pyo3(signature = (instance_json, mechanism = "myerson", operator = "theta"))]
fn run_auction<'py>(
    py: Python<'py>,
    instance_json: &str,
    mechanism: &str,
    operator: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let inst: AuctionInstance = serde_json::from_str(instance_json).map_err(value_error)?;
    let outcome = if mechanism.eq_ignore_ascii_case("tau") {
        auction::tau_mechanism(&inst, parse_op(operator)?, &SearchConfig::default())
            .map_err(value_error)?
    } else {
        let mech = MechanismId::parse(mechanism)
            .ok_or_else(|| value_error(format!("unknown mechanism {mechanism:?}")))?;
        auction::allocate(&inst, mech).map_err(value_error)?
    };
    to_py_report(py, &outcome)
}

#[pyfunction]
#[pyo3(signature = (mechanism, trials = 1000, seed = 42))]
fn truthfulness_probe<'py>(
    py: Python<'py>,
    mechanism: &str,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let mech = MechanismId::parse(mechanism)
        .ok_or_else(|| value_error(format!("unknown mechanism {mechanism:?}")))?;
    let report = auction::truthfulness_probe(mech, trials, seed).map_err(value_error)?;
    to_py_report(py, &report)
}

#[pyfunction]
#[pyo3(signature = (epsilon = 0.1, seed = 42))]
fn sybil_split_scenario<'py>(py: Python<'py>, epsilon: f64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let report = auction::sybil_split_scenario(epsilon, seed).map_err(value_error)?;
    to_py_report(py, &report)
}

#[pyfunction]
#[pyo3(signature = (value = 1.0))]
fn negative_result_scenario<'py>(py: Python<'py>, value: f64) -> PyResult<Bound<'py, PyAny>> {
    let report = auction::negative_result_scenario(value).map_err(value_error)?;
    to_py_report(py, &report)
}

/// Runs the built-in reference regression suite; returns a list of
/// (id, name, passed, detail) dicts.
#[pyfunction]
fn reference_checks<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    to_py_report(py, &checks::run_all())
}

/// Players of a coalition bitmask, for convenience when reading reports.
#[pyfunction]
fn coalition_members(mask: u32) -> Vec<usize> {
    members(mask).collect()
}

#[pymodule]
fn mevr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGame>()?;
    m.add_function(wrap_pyfunction!(shapley, m)?)?;
    m.add_function(wrap_pyfunction!(shapley_permutation_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(banzhaf, m)?)?;
    m.add_function(wrap_pyfunction!(banzhaf_welfare, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(psi_bar, m)?)?;
    m.add_function(wrap_pyfunction!(pro_rata, m)?)?;
    m.add_function(wrap_pyfunction!(copy_extension, m)?)?;
    m.add_function(wrap_pyfunction!(split_extension, m)?)?;
    m.add_function(wrap_pyfunction!(merge_players, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_sybil_strategy, m)?)?;
    m.add_function(wrap_pyfunction!(audit_operator, m)?)?;
    m.add_function(wrap_pyfunction!(trilemma, m)?)?;
    m.add_function(wrap_pyfunction!(solve_prior_lp, m)?)?;
    m.add_function(wrap_pyfunction!(prior_free_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_priors, m)?)?;
    m.add_function(wrap_pyfunction!(arb_profit, m)?)?;
    m.add_function(wrap_pyfunction!(lp_game, m)?)?;
    m.add_function(wrap_pyfunction!(graph_game, m)?)?;
    m.add_function(wrap_pyfunction!(cyclic_arb, m)?)?;
    m.add_function(wrap_pyfunction!(token_split_attack, m)?)?;
    m.add_function(wrap_pyfunction!(run_auction, m)?)?;
    m.add_function(wrap_pyfunction!(truthfulness_probe, m)?)?;
    m.add_function(wrap_pyfunction!(sybil_split_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(negative_result_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(reference_checks, m)?)?;
    m.add_function(wrap_pyfunction!(coalition_members, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_computes_through_the_bindings() {
        Python::initialize();
        Python::attach(|py| {
            let game = PyGame::new(3, vec![0.0, 1.0, 1.0, 4.0, 1.0, 2.0, 4.0, 5.0], true).unwrap();
            let beta = banzhaf(&game).unwrap();
            assert_eq!(beta, vec![1.5, 2.5, 1.5]);
            let report = psi_bar(py, &game, 2).unwrap();
            let welfare: f64 = report.get_item("welfare").unwrap().extract().unwrap();
            assert!(welfare <= 5.0 + 1e-9);
        });
    }
}
