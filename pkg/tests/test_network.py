import numpy as np
import pytest

from qbnsl import (
    BayesianNetwork,
    Dag,
    NetworkError,
    load_bn,
    save_bn,
    shipped_network,
)


def tiny_bn():
    dag = Dag.from_arcs(2, [(0, 1)])
    return BayesianNetwork(
        names=("Rain", "Wet"),
        states=(("no", "yes"), ("dry", "wet")),
        dag=dag,
        cpts=(
            np.array([[0.7, 0.3]]),
            np.array([[0.9, 0.1], [0.2, 0.8]]),  # rows: Rain=no, Rain=yes
        ),
        title="tiny",
    )


def test_shipped_network_structure():
    bn = shipped_network()
    assert bn.names == ("Pollution", "Smoker", "Cancer", "Xray", "Dyspnoea")
    name = {n: i for i, n in enumerate(bn.names)}
    want = {
        (name["Pollution"], name["Cancer"]),
        (name["Smoker"], name["Cancer"]),
        (name["Cancer"], name["Xray"]),
        (name["Cancer"], name["Dyspnoea"]),
    }
    assert set(bn.dag.arcs()) == want
    for cpt in bn.cpts:
        assert np.allclose(cpt.sum(axis=1), 1.0, atol=1e-6)


def test_yaml_round_trip(tmp_path):
    bn = tiny_bn()
    path = tmp_path / "bn.yaml"
    save_bn(bn, path)
    back = load_bn(path)
    assert back.names == bn.names
    assert back.states == bn.states
    assert back.dag == bn.dag
    for a, b in zip(back.cpts, bn.cpts):
        assert np.allclose(a, b, atol=1e-12)


def test_row_sum_validation():
    with pytest.raises(NetworkError):
        BayesianNetwork(
            names=("A", "B"),
            states=(("0", "1"), ("0", "1")),
            dag=Dag.from_arcs(2, [(0, 1)]),
            cpts=(np.array([[0.7, 0.3]]), np.array([[0.9, 0.2], [0.2, 0.8]])),
            title="bad",
        )


def test_forward_sample_is_seeded_and_matches_cpt_marginals():
    bn = tiny_bn()
    a = bn.forward_sample(5000, seed=(3, 1))
    b = bn.forward_sample(5000, seed=(3, 1))
    assert np.array_equal(a.values, b.values)
    c = bn.forward_sample(5000, seed=(3, 2))
    assert not np.array_equal(a.values, c.values)

    # root marginal within 3 sigma of its CPT row
    p_rain = a.values[:, 0].mean()
    sigma = np.sqrt(0.3 * 0.7 / 5000)
    assert abs(p_rain - 0.3) < 3 * sigma
    # conditional of the child given each parent state
    wet_given_rain = a.values[a.values[:, 0] == 1, 1].mean()
    assert abs(wet_given_rain - 0.8) < 5 * np.sqrt(0.8 * 0.2 / 1000)


def test_subnetwork_requires_ancestral_closure():
    bn = shipped_network()
    sub = bn.subnetwork(["Pollution", "Smoker", "Cancer"])
    assert sub.names == ("Pollution", "Smoker", "Cancer")
    assert set(sub.dag.arcs()) == {(0, 2), (1, 2)}
    with pytest.raises(NetworkError):
        bn.subnetwork(["Cancer", "Xray"])  # Cancer's parents dropped
    with pytest.raises(NetworkError):
        bn.subnetwork(["Xray"])


def test_subnetwork_keeps_cpts():
    bn = shipped_network()
    sub = bn.subnetwork(["Pollution", "Smoker", "Cancer", "Xray"])
    i_full = bn.names.index("Cancer")
    i_sub = sub.names.index("Cancer")
    assert np.array_equal(bn.cpts[i_full], sub.cpts[i_sub])


def test_load_rejects_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_bn(tmp_path / "absent.yaml")
