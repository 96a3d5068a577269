import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asnsim.dynamics import AgentState, consensus_step
from asnsim.errors import ConfigError, ProtocolError
from asnsim.graph import DirectedGraph, complete_graph
from asnsim.msr import MsrConfig, trim, wmsr_step, wmsr_update


def test_trim_example():
    keep = trim(0.0, [(1, -10.0), (2, 1.0), (3, 2.0), (4, 10.0)], 1)
    assert sorted(keep) == [2, 3]


def test_trim_removes_only_strict_extremes():
    # values equal to own are never removed
    assert sorted(trim(1.0, [(1, 1.0), (2, 1.0), (3, 5.0)], 2)) == [1, 2]


def test_trim_ties_drop_higher_id_first():
    assert trim(0.0, [(1, 3.0), (2, 3.0), (3, 1.0)], 1) == [1, 3]


def test_trim_fewer_than_f_on_one_side():
    assert trim(0.0, [(1, -1.0), (2, 4.0), (3, 5.0), (4, 6.0)], 2) == [2]


def test_no_survivors_keeps_own_value():
    out = wmsr_update(np.array([0.0]), [1, 2], [1.0, 1.0], [np.array([5.0]), np.array([-5.0])], 1, 0.1)
    np.testing.assert_array_equal(out, [0.0])


def test_all_equal_is_fixed_point():
    out = wmsr_update(np.array([2.0, 2.0]), [1, 2, 3], [1.0] * 3, [np.array([2.0, 2.0])] * 3, 1, 0.3)
    np.testing.assert_array_equal(out, [2.0, 2.0])


def test_survivors_rescaled_to_full_weight():
    out = wmsr_update(np.array([0.0]), [1, 2, 3], [1.0, 1.0, 1.0],
                      [np.array([1.0]), np.array([2.0]), np.array([9.0])], 1, 0.1)
    # 9 dropped; survivors 1 and 2 share total weight 3
    np.testing.assert_allclose(out, [0.1 * 1.5 * (1.0 + 2.0)])


def test_coordinates_trimmed_independently():
    vals = [np.array([9.0, 1.0]), np.array([1.0, 9.0])]
    out = wmsr_update(np.array([0.0, 0.0]), [1, 2], [1.0, 1.0], vals, 1, 0.1)
    np.testing.assert_allclose(out, [0.2, 0.2])


def states_of(values):
    return {v: AgentState.initial(v, x) for v, x in values.items()}


def test_f_zero_is_plain_consensus():
    g = DirectedGraph(range(1, 5), {(1, 2): 1.0, (2, 3): 0.5, (3, 4): 2.0, (4, 1): 1.0, (1, 3): 1.0})
    s = states_of({1: [0.3, 1.0], 2: [-2.0, 0.0], 3: [4.0, 4.0], 4: [1.0, -1.0]})
    received = {(i, j): s[j].x + 0.01 * j for j, i in g.edges}
    a = wmsr_step(s, g, received, MsrConfig(0, 0.2))
    b = consensus_step(s, g, 0.2, received)
    for v in g.nodes:
        np.testing.assert_array_equal(a[v].x, b[v].x)


def test_missing_value_is_protocol_error():
    g = complete_graph([1, 2])
    s = states_of({1: [0.0], 2: [1.0]})
    with pytest.raises(ProtocolError):
        wmsr_step(s, g, {}, MsrConfig(1, 0.1), k=3)


def test_negative_f_rejected():
    with pytest.raises(ConfigError):
        MsrConfig(-1, 0.1)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(-10, 10),
    st.lists(st.floats(-10, 10), min_size=1, max_size=7),
    st.integers(0, 3),
    st.floats(0.01, 0.99),
)
def test_update_is_convex_in_survivors(own, vals, F, frac):
    senders = list(range(1, len(vals) + 1))
    eps = frac / len(vals)
    out = wmsr_update(np.array([own]), senders, [1.0] * len(vals), [np.array([v]) for v in vals], F, eps)[0]
    keep = trim(own, list(zip(senders, vals)), F)
    pool = [own] + [vals[j - 1] for j in keep]
    assert min(pool) - 1e-9 <= out <= max(pool) + 1e-9
