"""Named invariant checks, run by ``qdelay verify``."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import bell, counting, photonic
from . import delayed_choice as dc
from . import qstate as qs

TARGET = dc.ExperimentParams(np.pi / 4, np.pi / 2)
REPORTED_S = 2.45


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return asdict(self)


def _result(name: str, passed, detail: str) -> CheckResult:
    return CheckResult(name, bool(passed), detail)


def check_intensity_routes() -> CheckResult:
    alpha, phi = dc.scan_grid(64, 64)
    try:
        surf = dc.intensity_surface(alpha, phi)
    except dc.RouteMismatch as exc:
        return _result("intensity_routes", False, str(exc))
    particle_row = np.max(np.abs(surf.i0[0] - 0.5))
    wave_row = np.max(np.abs(surf.i0[-1] - np.cos(phi / 2) ** 2))
    ok = surf.max_route_error <= 1e-12 and particle_row <= 1e-12 and wave_row <= 1e-12
    return _result(
        "intensity_routes",
        ok,
        f"max route error {surf.max_route_error:.2e}, alpha=0 row {particle_row:.2e}, "
        f"alpha=pi/2 row {wave_row:.2e}",
    )


def check_tsirelson_point() -> CheckResult:
    s = bell.chsh_value(dc.global_state(TARGET))
    return _result("tsirelson_point", abs(s - bell.TSIRELSON) <= 1e-10, f"S = {s!r}")


def check_surface_maximum() -> CheckResult:
    surf = bell.chsh_surface(*dc.scan_grid())
    a, f, s = surf.argmax()
    ok = abs(a - np.pi / 4) < 1e-12 and abs(f - np.pi / 2) < 1e-12 and abs(s - bell.TSIRELSON) < 1e-10
    return _result("chsh_surface_maximum", ok, f"max S = {s:.12f} at alpha={a:.6f}, phi={f:.6f}")


def check_lhv_bound(n_settings: int = 100, seed: int = 11) -> CheckResult:
    rng = np.random.default_rng(seed)
    values = [bell.lhv_maximum(bell.random_settings(rng)).value for _ in range(n_settings)]
    ok = all(v == 2.0 for v in values) and len(bell.deterministic_strategies()) == 16
    return _result("lhv_bound", ok, f"max over {n_settings} settings: {max(values)!r}")


def check_mixture_loophole() -> CheckResult:
    alpha, phi = dc.scan_grid()
    worst_s, worst_i = -np.inf, 0.0
    for a in alpha:
        for f in phi:
            p = dc.ExperimentParams(a, f)
            worst_s = max(worst_s, bell.classical_mixture_s(p))
            worst_i = max(worst_i, abs(bell.mixture_intensity(p) - dc.intensity_closed_form(a, f)))
    ok = worst_s <= 2 + 1e-10 and worst_i <= 1e-12
    return _result("mixture_loophole", ok, f"max mixture S {worst_s:.6f}, intensity error {worst_i:.2e}")


def check_ch_decomposition() -> CheckResult:
    composed = qs.on_system(qs.W) @ qs.CZ @ qs.on_system(qs.W)
    err = np.max(np.abs(qs.align_global_phase(composed, qs.CH) - qs.CH))
    return _result("ch_decomposition", err <= 1e-12, f"max elementwise error {err:.2e}")


def check_chip_ch_fidelity(w_phase_error: float = 0.0) -> CheckResult:
    fid, _ = photonic.ch_block_report(w_phase_error)
    return _result("chip_ch_fidelity", fid > 1 - 1e-10, f"fidelity {fid!r}")


def check_cz_success(w_phase_error: float = 0.0) -> CheckResult:
    _, success = photonic.ch_block_report(w_phase_error)
    err = np.max(np.abs(success - 1 / 9))
    return _result("cz_success_probability", err <= 1e-10, f"per-input success {np.round(success, 12).tolist()}")


def check_hom_dip() -> CheckResult:
    net = photonic.ModeNetwork(2, (photonic.Coupler(0, 1, 0.5),))
    out = photonic.evolve_two_photon(photonic.TwoPhotonState.occupied(2, 0, 1), photonic.transfer_matrix(net))
    p = abs(out.amplitude(0, 1)) ** 2
    return _result("hom_dip", p <= 1e-12, f"coincidence probability {p:.2e}")


def check_photonic_route(w_phase_error: float = 0.0, steps: int = 9) -> CheckResult:
    alpha, phi = dc.scan_grid(steps, steps)
    logical = bell.chsh_surface(alpha, phi).s
    chip = np.array(
        [[photonic.photonic_chsh(dc.ExperimentParams(a, f), w_phase_error) for f in phi] for a in alpha]
    )
    err = float(np.max(np.abs(chip - logical)))
    return _result("photonic_chsh_route", err <= 1e-8, f"max |S_chip - S_logical| = {err:.2e}")


def check_werner_calibration() -> CheckResult:
    psi = dc.global_state(TARGET)
    s1 = counting.chsh_from_probabilities(counting.setting_probabilities(psi))
    rng = np.random.default_rng(3)
    lin = max(
        abs(counting.chsh_from_probabilities(
            counting.setting_probabilities(counting.NoiseModel(v).apply(psi))) - v * s1)
        for v in rng.uniform(0, 1, 20)
    )
    v = counting.visibility_for(REPORTED_S)
    s_v = bell.chsh_value_density(counting.NoiseModel(v).apply(psi))
    ok = lin <= 1e-10 and abs(s_v - REPORTED_S) <= 1e-10
    return _result("werner_calibration", ok, f"V = {v:.6f} gives S = {s_v:.12f}; linearity error {lin:.2e}")


def check_tsirelson_ceiling(trials: int = 2000, seed: int = 5) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = max(
        abs(bell.chsh_value(qs.random_state(rng), bell.random_settings(rng))) for _ in range(trials)
    )
    return _result("tsirelson_ceiling", worst <= bell.TSIRELSON + 1e-9, f"max |S| over {trials} trials {worst:.6f}")


def run_all(w_phase_error: float = 0.0) -> list[CheckResult]:
    return [
        check_intensity_routes(),
        check_tsirelson_point(),
        check_surface_maximum(),
        check_lhv_bound(),
        check_mixture_loophole(),
        check_ch_decomposition(),
        check_chip_ch_fidelity(w_phase_error),
        check_cz_success(w_phase_error),
        check_hom_dip(),
        check_photonic_route(w_phase_error),
        check_werner_calibration(),
        check_tsirelson_ceiling(),
    ]
