"""Tests for the zigzag chain and fluxon sweeps."""
import logging
import math
from typing import List

import numpy as np
import pytest

from fluxknit import gates
from fluxknit.chain import ChainConfig, ChainState, new_chain, register_index, t_pi
from fluxknit.statevec import SeededStream, reduced_density_matrix
from fluxknit.tests.utils import chain_product, dense_operator, random_qubit
from fluxknit.typing import QubitIndex

log = logging.getLogger(__name__)


def data_positions(num_data: int) -> List[int]:
    return [QubitIndex.data(k).position for k in range(1, num_data + 1)]


def test_layout_positions() -> None:
    """d1, s1, d2, s2, ... interleave from position 0."""
    assert [QubitIndex.data(k).position for k in (1, 2, 3)] == [0, 2, 4]
    assert [QubitIndex.switch(k).position for k in (1, 2)] == [1, 3]
    assert str(QubitIndex.parse('S2')) == 's2'
    with pytest.raises(ValueError):
        QubitIndex.parse('q1')


def test_new_chain_product_states() -> None:
    chain = new_chain(ChainConfig(2))
    assert chain.register.num_qubits == 3 and chain.register.amps[0] == 1

    chain = new_chain(ChainConfig(3), data={1: 1})
    assert chain.register.amps[1] == 1, "d1 is the least-significant bit"

    chain = new_chain(ChainConfig(3), switches={1: 'plus'})
    nonzero = [i for i, a in enumerate(chain.register.amps) if abs(a) > 1e-12]
    assert nonzero == [0, 2], f"expected |0> and |s1=1>, got {nonzero}"
    assert abs(chain.register.norm_squared() - 1.0) < 1e-12


def test_new_chain_rejects_bad_labels() -> None:
    with pytest.raises(ValueError):
        new_chain(ChainConfig(2), data={3: 0})
    with pytest.raises(ValueError):
        new_chain(ChainConfig(2), switches={2: 'zero'})
    with pytest.raises(ValueError):
        new_chain(ChainConfig(2), data={1: 2})


def test_chain_config_validation() -> None:
    with pytest.raises(ValueError):
        ChainConfig(1)
    with pytest.raises(ValueError, match="register cap"):
        ChainConfig(13)
    with pytest.raises(ValueError):
        ChainConfig(3, switch_enabled=[True])
    config = ChainConfig(12)
    assert config.num_qubits == 23 and config.switch_enabled == [True] * 11


def test_t_pi() -> None:
    assert abs(t_pi(ChainConfig(2)) - math.pi / math.sqrt(2)) < 1e-15
    assert abs(t_pi(ChainConfig(2)) - 2.2214) < 1e-4
    assert abs(t_pi(ChainConfig(2, coupling_g=math.pi)) - 1 / math.sqrt(2)) < 1e-15
    for g in (0.0, -1.0):
        with pytest.raises(ValueError):
            t_pi(ChainConfig(2, coupling_g=g))


def test_sweep_with_switch_off_state() -> None:
    """N=2, s1=|0>, data |01> (d2 set) becomes -|10> (d1 set)."""
    chain = new_chain(ChainConfig(2), data={2: 1})
    chain.fluxon_sweep('ltr')
    assert chain.switches_decoupled()
    amps = chain.data_amplitudes()
    assert np.allclose(amps, [0, -1, 0, 0]), f"got {amps}"


def test_sweep_with_switch_on_state() -> None:
    """N=2, s1=|1>, data |11> is left alone."""
    chain = new_chain(ChainConfig(2), data={1: 1, 2: 1}, switches={1: 'one'})
    chain.fluxon_sweep('ltr')
    assert abs(chain.register.amps[register_index(2, 0b11, 0b1)] - 1) < 1e-12


@pytest.mark.parametrize("direction", ['ltr', 'rtl'])
def test_sweep_matches_dense_product(direction: str, generator: np.random.Generator) -> None:
    """With every switch in |0> a sweep is the ordered product of U0 on data pairs."""
    for n in (3, 4):
        data = [random_qubit(generator) for _ in range(n)]
        chain = new_chain(ChainConfig(n), data={k + 1: list(v) for k, v in enumerate(data)})
        chain.fluxon_sweep(direction)  # type: ignore[arg-type]

        pos = data_positions(n)
        blocks = list(range(n - 1)) if direction == 'ltr' else list(range(n - 2, -1, -1))
        expected = chain_product(n, data)
        for b in blocks:
            expected = dense_operator(gates.u0().matrix, [pos[b], pos[b + 1]], 2 * n - 1) @ expected
        assert np.allclose(chain.register.amps, expected, atol=1e-12), f"{direction} sweep on N={n}"
        assert chain.switches_decoupled()


def test_round_trip_matches_dense_product(generator: np.random.Generator) -> None:
    n = 3
    data = [random_qubit(generator) for _ in range(n)]
    chain = new_chain(ChainConfig(n), data={k + 1: list(v) for k, v in enumerate(data)})
    chain.fluxon_sweep('ltr').fluxon_sweep('rtl')

    u0 = gates.u0().matrix
    expected = chain_product(n, data)
    for a, b in [(0, 2), (2, 4), (2, 4), (0, 2)]:
        expected = dense_operator(u0, [a, b], 5) @ expected
    assert np.allclose(chain.register.amps, expected, atol=1e-12)


def test_disabled_switch_leaves_its_block_alone(generator: np.random.Generator) -> None:
    """s1 biased off on N=3: the d1 marginal survives an LTR sweep."""
    d1 = random_qubit(generator)
    chain = new_chain(ChainConfig(3), data={1: list(d1), 2: 1})
    before = reduced_density_matrix(chain.register, 0)
    chain.set_switch(1, False).fluxon_sweep('ltr')
    assert np.allclose(reduced_density_matrix(chain.register, 0), before, atol=1e-12)


def test_all_switches_off_sweep_is_identity(generator: np.random.Generator) -> None:
    data = {k: list(random_qubit(generator)) for k in (1, 2, 3)}
    chain = new_chain(ChainConfig(3, switch_enabled=[False, False]), data=data)
    before = chain.register.amps.copy()
    chain.fluxon_sweep('ltr').fluxon_sweep('rtl')
    assert np.array_equal(chain.register.amps, before)


@pytest.mark.parametrize("direction", ['ltr', 'rtl'])
def test_switches_decouple_after_any_sweep(direction: str, generator: np.random.Generator) -> None:
    for n in range(2, 7):
        data = {k: list(random_qubit(generator)) for k in range(1, n + 1)}
        chain = new_chain(ChainConfig(n), data=data)
        chain.apply_single_layer({QubitIndex.data(k): gates.random_unitary(generator) for k in range(1, n + 1)})
        chain.fluxon_sweep(direction)  # type: ignore[arg-type]
        assert chain.switches_zero_probability() > 1 - 1e-10, f"N={n} {direction}"


def test_prepare_switch() -> None:
    chain = new_chain(ChainConfig(2))
    before = chain.register.amps.copy()
    chain.prepare_switch(1, 'zero')
    assert np.allclose(chain.register.amps, before)

    chain.prepare_switch(1, 'plus')
    outcome, prob, _ = chain.measure_switch(1, SeededStream(0), 'x')
    assert outcome == '+' and abs(prob - 1) < 1e-12

    with pytest.raises(ValueError):
        chain.prepare_switch(1, 'minus')  # type: ignore[arg-type]
    with pytest.raises(ValueError):
        chain.prepare_switch(2, 'zero')


def test_prepare_entangled_switch_fails() -> None:
    """A |+> switch driving d1=|+>, d2=|0> ends up entangled with the data."""
    chain = new_chain(ChainConfig(2), data={1: [1, 1]}, switches={1: 'plus'})
    chain.fluxon_sweep('ltr')
    assert not chain.switches_decoupled()
    with pytest.raises(ValueError, match="entangled"):
        chain.prepare_switch(1, 'zero')


def test_single_layers() -> None:
    chain = new_chain(ChainConfig(3))
    chain.apply_single_layer({QubitIndex.data(k): gates.hadamard() for k in (1, 2, 3)})
    assert np.allclose(chain.data_amplitudes(), np.full(8, 1 / math.sqrt(8)))

    chain = new_chain(ChainConfig(3))
    before = chain.register.amps.copy()
    chain.apply_single_layer({'d1': gates.identity(), 'd2': None})
    assert np.array_equal(chain.register.amps, before)

    chain.apply_single_layer({'d1': gates.pauli('x')})
    assert chain.register.amps[1] == 1

    with pytest.raises(ValueError):
        chain.apply_single_layer({'d4': gates.pauli('x')})


def test_measure_switch_examples() -> None:
    chain = new_chain(ChainConfig(2), switches={1: 'plus'})
    outcome, prob, chain = chain.measure_switch(1, SeededStream(3), 'x')
    assert (outcome, round(prob, 12)) == ('+', 1.0)

    zeros = 0
    for seed in range(200):
        fresh = new_chain(ChainConfig(2), switches={1: 'plus'})
        outcome, prob, _ = fresh.measure_switch(1, SeededStream(seed), 'z')
        assert abs(prob - 0.5) < 1e-12
        zeros += outcome == '0'
    assert 60 <= zeros <= 140


def test_set_switch_range() -> None:
    chain = new_chain(ChainConfig(3))
    with pytest.raises(ValueError):
        chain.set_switch(3, True)
    with pytest.raises(ValueError):
        chain.block_order('up')  # type: ignore[arg-type]
    assert chain.block_order('rtl') == [2, 1]


def test_copy_is_independent() -> None:
    chain = new_chain(ChainConfig(3))
    twin = chain.copy()
    twin.set_switch(1, False).apply_single_layer({'d1': gates.pauli('x')})
    assert chain.config.switch_enabled == [True, True]
    assert chain.register.amps[0] == 1
    with pytest.raises(ValueError):
        ChainState(ChainConfig(2), twin.register)


def test_register_index() -> None:
    assert register_index(3, 0b101) == 0b10001
    assert register_index(3, 0, 0b10) == 0b01000
