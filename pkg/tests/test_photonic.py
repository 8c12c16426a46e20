import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdelay import bell
from qdelay import delayed_choice as dc
from qdelay import photonic as ph
from qdelay import qstate as qs
from qdelay.delayed_choice import ExperimentParams

TARGET = ExperimentParams(np.pi / 4, np.pi / 2)


def _random_network(rng, n_modes=4, n_elements=12):
    els = []
    for _ in range(n_elements):
        if rng.random() < 0.5:
            a, b = rng.choice(n_modes, 2, replace=False)
            els.append(ph.Coupler(int(a), int(b), float(rng.random())))
        else:
            els.append(ph.PhaseShifter(int(rng.integers(n_modes)), float(rng.uniform(-np.pi, np.pi))))
    return ph.ModeNetwork(n_modes, els)


def test_empty_network_is_identity():
    assert np.array_equal(ph.transfer_matrix(ph.ModeNetwork(3)), np.eye(3))


def test_balanced_coupler_block():
    u = ph.transfer_matrix(ph.ModeNetwork(2, [ph.Coupler(0, 1, 0.5)]))
    assert np.allclose(np.abs(u), 1 / np.sqrt(2), atol=1e-15)


@pytest.mark.parametrize("theta, heater", [(ph.W_PHASE_4, 1), (ph.W_PHASE_7, 0)])
def test_mzi_realises_w(theta, heater):
    u = ph.transfer_matrix(ph.ModeNetwork(2, ph.mzi(0, 1, theta, heater)))
    assert qs.gate_fidelity(u, qs.W) == pytest.approx(1.0, abs=1e-12)


def test_w_is_the_cos_squared_beamsplitter():
    assert qs.W[0, 0] ** 2 == pytest.approx(np.cos(np.pi / 8) ** 2)
    assert np.allclose(qs.W @ qs.Z @ qs.W, qs.H, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_random_networks_are_unitary(seed):
    u = ph.transfer_matrix(_random_network(np.random.default_rng(seed), 5))
    assert np.allclose(u.conj().T @ u, np.eye(5), atol=1e-12)


def test_hong_ou_mandel_dip():
    net = ph.ModeNetwork(2, [ph.Coupler(0, 1, 0.5)])
    out = ph.evolve_two_photon(ph.TwoPhotonState.occupied(2, 0, 1), ph.transfer_matrix(net))
    assert abs(out.amplitude(0, 1)) ** 2 <= 1e-12
    assert abs(out.amplitude(0, 0)) ** 2 == pytest.approx(0.5)
    assert abs(out.amplitude(1, 1)) ** 2 == pytest.approx(0.5)


def test_third_coupler_coincidence():
    net = ph.ModeNetwork(2, [ph.Coupler(0, 1, 1 / 3)])
    out = ph.evolve_two_photon(ph.TwoPhotonState.occupied(2, 0, 1), ph.transfer_matrix(net))
    assert abs(out.amplitude(0, 1)) ** 2 == pytest.approx(1 / 9, abs=1e-12)


def test_identity_evolution():
    s = ph.TwoPhotonState.occupied(4, 1, 1)
    assert np.allclose(ph.evolve_two_photon(s, np.eye(4)).amps, s.amps)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_permanent_route_matches_tensor_route(seed):
    rng = np.random.default_rng(seed)
    u = ph.transfer_matrix(_random_network(rng))
    n = len(ph.basis_pairs(4))
    amps = rng.normal(size=n) + 1j * rng.normal(size=n)
    s = ph.TwoPhotonState(4, amps / np.linalg.norm(amps))
    a = ph.evolve_two_photon(s, u)
    b = ph.evolve_two_photon_tensor(s, u)
    assert np.max(np.abs(a.amps - b.amps)) <= 1e-10
    assert a.norm() == pytest.approx(1.0, abs=1e-12)


def test_evolution_rejects_wrong_shape():
    with pytest.raises(ph.NetworkError):
        ph.evolve_two_photon(ph.TwoPhotonState.occupied(3, 0, 1), np.eye(4))


def test_cz_network_on_logical_eleven():
    net = ph.ModeNetwork(6, ph.cz_elements())
    m = ph.post_selected_map(net)
    assert abs(m[3, 3]) ** 2 == pytest.approx(1 / 9, abs=1e-12)
    assert qs.gate_fidelity(m * 3, qs.CZ) == pytest.approx(1.0, abs=1e-12)


def test_in_rail_state_succeeds_with_certainty():
    psi = qs.random_state(np.random.default_rng(3))
    state, mass = ph.post_select(ph.encode(psi))
    assert mass == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(state, psi, atol=1e-12)


def test_post_selection_error_on_miswired_network():
    # reflectivity 0 swaps both input photons into auxiliary modes
    net = ph.ModeNetwork(6, [ph.Coupler(0, 4, 0.0), ph.Coupler(2, 5, 0.0)])
    with pytest.raises(ph.PostSelectionError):
        ph.run_chip(net)


def test_ch_block_fidelity_and_uniform_success():
    fid, success = ph.ch_block_report()
    assert fid > 1 - 1e-10
    assert np.allclose(success, 1 / 9, atol=1e-10)


def test_ch_block_degrades_under_w_phase_error():
    fid, _ = ph.ch_block_report(0.1)
    assert fid < 1 - 1e-3


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(0, np.pi / 2), phi=st.floats(-np.pi / 2, 3 * np.pi / 2))
def test_chip_prepares_global_state(alpha, phi):
    p = ExperimentParams(alpha, phi)
    psi, success = ph.photonic_global_state(p)
    assert abs(np.vdot(psi, dc.global_state_closed_form(p))) == pytest.approx(1.0, abs=1e-10)
    assert success == pytest.approx(1 / 9, abs=1e-10)


def test_chip_reproduces_intensity_surface():
    alpha, phi = dc.scan_grid(9, 9)
    chip = np.array([[ph.photonic_intensity(ExperimentParams(a, f)) for f in phi] for a in alpha])
    assert np.max(np.abs(chip - dc.intensity_closed_form(alpha[:, None], phi[None, :]))) <= 1e-10


def test_chip_reaches_tsirelson_at_target():
    assert ph.photonic_chsh(TARGET) == pytest.approx(2 * np.sqrt(2), abs=1e-9)


def _chip_observable(elements):
    u = ph.post_selected_map(ph.ModeNetwork(6, elements))
    return u.conj().T @ np.kron(qs.Z, qs.Z) @ u


@pytest.mark.parametrize("label, index", [("A1", 0), ("A2", 1)])
def test_alice_stage_measures_setting(label, index):
    target = bell.chsh_settings().alice[index]
    assert np.allclose(_chip_observable(ph.alice_elements(label)), np.kron(target, qs.Z), atol=1e-12)


@pytest.mark.parametrize("label, index", [("B1", 0), ("B2", 1)])
def test_bob_stage_measures_setting(label, index):
    target = bell.chsh_settings().bob[index]
    assert np.allclose(_chip_observable(ph.bob_elements(label)), np.kron(qs.Z, target), atol=1e-12)


def test_unknown_setting_label():
    with pytest.raises(ValueError):
        ph.alice_elements("A3")
    with pytest.raises(ValueError):
        ph.bob_elements("b1")


def test_json_round_trip(tmp_path):
    net = ph.build_chip(TARGET, "A2", "B1")
    again = ph.ModeNetwork.from_json(net.to_json())
    assert again == net
    path = tmp_path / "chip.json"
    net.save(path)
    assert ph.ModeNetwork.load(path) == net
    doc = json.loads(net.to_json())
    assert doc["format"] == ph.FORMAT_NAME and doc["n_modes"] == 6
    assert net.find("ps5").theta == pytest.approx(np.pi / 4)


@pytest.mark.parametrize(
    "doc",
    [
        {"n_modes": 2, "elements": [{"type": "coupler", "modes": [0, 2], "reflectivity": 0.5}]},
        {"n_modes": 2, "elements": [{"type": "coupler", "modes": [0, 0], "reflectivity": 0.5}]},
        {"n_modes": 2, "elements": [{"type": "coupler", "modes": [0, 1], "reflectivity": 1.5}]},
        {"n_modes": 2, "elements": [{"type": "mirror", "mode": 0}]},
        {"n_modes": 2, "elements": [{"type": "phase", "theta": 0.1}]},
        {"format": "other", "n_modes": 2, "elements": []},
        {"n_modes": 2, "version": 99, "elements": []},
    ],
)
def test_malformed_documents_rejected(doc):
    with pytest.raises(ph.NetworkError):
        ph.ModeNetwork.from_dict(doc)
