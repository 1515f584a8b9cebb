"""Memristor crossbar and stochastic-MTJ device models.

Units: conductance in uS, voltage in V, current in uA (uS * V), resistance in
ohm, time in seconds except drift ages, which are in hours.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import optimize

from .errors import ComplianceError, ContractError, ProgrammingError
from .ising import SpinState, sigmoid

HW_MAX_ROWS = 32
HW_MAX_COLS = 64
V_READ_MAX = 1.0
DRIFT_ONSET_HOURS = 1e-3

# Resistance-area product and electrical diameter of the measured junctions.
_RA_OHM_UM2 = 6.7
_ECD_UM = 0.036
DEFAULT_R_P = round(_RA_OHM_UM2 / (math.pi * (_ECD_UM / 2) ** 2), -2)  # 6600 ohm


@dataclass(frozen=True, eq=False)
class CrossbarArray:
    """A rows x cols conductance array with per-column drive polarity.

    ``target`` holds the requested levels, ``conductance`` what the cells
    actually read back. ``offset`` is the accumulated retention drift
    relative to the programmed value.
    """

    target: np.ndarray
    conductance: np.ndarray
    column_polarity: np.ndarray
    hardware_faithful: bool = True
    age_hours: float = 0.0
    programmed: np.ndarray | None = None
    pulses: np.ndarray | None = None
    failed: np.ndarray | None = None

    def __post_init__(self):
        target = np.asarray(self.target, dtype=np.float64)
        g = np.asarray(self.conductance, dtype=np.float64)
        pol = np.asarray(self.column_polarity, dtype=np.int8).reshape(-1)
        if target.ndim != 2 or g.shape != target.shape:
            raise ContractError("target and conductance must be matching 2-D arrays")
        if pol.size != target.shape[1] or not np.isin(pol, (-1, 1)).all():
            raise ContractError("column_polarity needs one +-1 entry per column")
        if np.any(target < 0) or np.any(g < 0):
            raise ContractError("conductances must be nonnegative")
        if self.hardware_faithful and (target.shape[0] > HW_MAX_ROWS or target.shape[1] > HW_MAX_COLS):
            raise ContractError(
                f"{target.shape[0]}x{target.shape[1]} exceeds the {HW_MAX_ROWS}x{HW_MAX_COLS} physical array"
            )
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "conductance", g)
        object.__setattr__(self, "column_polarity", pol)
        if self.programmed is None:
            object.__setattr__(self, "programmed", g.copy())

    @classmethod
    def blank(cls, targets, column_polarity, hardware_faithful: bool = True) -> "CrossbarArray":
        targets = np.asarray(targets, dtype=np.float64)
        return cls(targets, np.zeros_like(targets), column_polarity, hardware_faithful)

    @classmethod
    def ideal(cls, targets, column_polarity, hardware_faithful: bool = False) -> "CrossbarArray":
        """Every cell exactly at its target."""
        targets = np.asarray(targets, dtype=np.float64)
        return cls(targets, targets.copy(), column_polarity, hardware_faithful)

    @property
    def shape(self) -> tuple[int, int]:
        return self.target.shape

    @property
    def drift_offset(self) -> np.ndarray:
        return self.conductance - self.programmed


@dataclass(frozen=True)
class ProgramVerifyConfig:
    tolerance: float = 3.0
    max_pulses: int = 200
    per_pulse_noise_sigma: float = 1.0
    settle_check: bool = True
    # fraction of the remaining excess removed by a nominal RESET pulse
    reset_gain: float = 0.45
    # freshly SET cells start this far above the target
    set_overshoot: float = 40.0
    settle_sigma: float = 0.3

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ContractError("tolerance must be positive")
        if self.max_pulses < 1:
            raise ContractError("max_pulses must be >= 1")


def program_and_verify(
    array: CrossbarArray,
    targets,
    config: ProgramVerifyConfig,
    rng: np.random.Generator,
    allow_degraded: bool = False,
) -> CrossbarArray:
    """Program every nonzero target with RESET pulses until the read-back verifies.

    Each cell starts from a SET (high-conductance) state; each RESET pulse
    removes a noisy fraction of the excess conductance. A cell that
    undershoots the window is SET again. With ``settle_check`` a delayed
    re-read follows each verify success and can send the cell back into the
    loop.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != array.shape:
        raise ContractError(f"targets {targets.shape} do not match array {array.shape}")
    if np.any(targets < 0):
        raise ContractError("targets must be nonnegative")

    tol = config.tolerance
    flat_t = targets.ravel()
    g = np.zeros_like(flat_t)
    pulses = np.zeros(flat_t.size, dtype=np.int64)
    active = np.flatnonzero(flat_t > 0)
    g[active] = flat_t[active] + config.set_overshoot * (1.0 + 0.25 * rng.random(active.size))
    done = np.zeros(flat_t.size, dtype=bool)
    done[flat_t == 0] = True

    for _ in range(config.max_pulses):
        idx = np.flatnonzero(~done)
        if idx.size == 0:
            break
        excess = g[idx] - flat_t[idx]
        under = excess < -tol
        step = config.reset_gain * excess + rng.normal(0.0, config.per_pulse_noise_sigma, idx.size)
        new = np.where(
            under,
            flat_t[idx] + config.set_overshoot * (1.0 + 0.25 * rng.random(idx.size)),
            np.maximum(g[idx] - np.maximum(step, 0.0), 0.0),
        )
        g[idx] = new
        pulses[idx] += 1
        ok = np.abs(g[idx] - flat_t[idx]) <= tol
        if config.settle_check and ok.any():
            hit = idx[ok]
            g[hit] = np.maximum(g[hit] + rng.normal(0.0, config.settle_sigma, hit.size), 0.0)
            ok = np.abs(g[idx] - flat_t[idx]) <= tol
        done[idx[ok]] = True

    failed = ~done.reshape(targets.shape)
    if failed.any() and not allow_degraded:
        coords = [tuple(int(x) for x in c) for c in np.argwhere(failed)]
        raise ProgrammingError(f"{len(coords)} cells failed to verify after {config.max_pulses} pulses", coords)
    g = g.reshape(targets.shape)
    return replace(
        array,
        target=targets,
        conductance=g,
        programmed=g.copy(),
        age_hours=0.0,
        pulses=pulses.reshape(targets.shape),
        failed=failed,
    )


def mac_current(
    array: CrossbarArray,
    drive_voltages,
    noise_fraction: float = 0.0,
    rng: np.random.Generator | None = None,
    rows=None,
    v_read_max: float = V_READ_MAX,
) -> np.ndarray:
    """Kirchhoff row currents I_i = sum_j g_ij v_j in uA.

    With ``noise_fraction`` > 0, each read adds Gaussian noise whose sigma is
    that fraction of the row's full-scale current sum_j g_ij |v_j|.
    """
    v = np.asarray(drive_voltages, dtype=np.float64)
    if v.shape != (array.shape[1],):
        raise ContractError(f"expected {array.shape[1]} drive voltages, got {v.shape}")
    if np.any(np.abs(v) > v_read_max):
        raise ContractError(f"drive voltage exceeds {v_read_max} V")
    g = array.conductance if rows is None else array.conductance[np.atleast_1d(rows)]
    current = g @ v
    if noise_fraction > 0:
        if rng is None:
            raise ContractError("noisy MAC reads need an rng")
        current = current + rng.normal(0.0, 1.0, current.shape) * (noise_fraction * (g @ np.abs(v)))
    return current


def spin_drive_voltages(
    state: SpinState,
    column_polarity,
    v_read: float,
    bias_polarity: int | None = None,
) -> np.ndarray:
    """Column drive voltages for a spin state.

    Column j is driven at polarity_j * s_j * V_read, so a negative-coupling
    column maps s=+1 to -V_read (and s=0 to 0 V in the 0/1 domain). The
    optional bias column is held at bias_polarity * V_read.
    """
    pol = np.asarray(column_polarity, dtype=np.int8).reshape(-1)
    n = len(state)
    expected = n + (bias_polarity is not None)
    if pol.size != expected:
        raise ContractError(f"polarity has {pol.size} entries, expected {expected}")
    if not np.isin(pol, (-1, 1)).all():
        raise ContractError("column polarity must be uniform +1 or -1 per column")
    drive = pol[:n] * state.values.astype(np.float64) * v_read
    if bias_polarity is None:
        return drive
    if int(pol[n]) != bias_polarity:
        raise ContractError("bias polarity disagrees with the column polarity vector")
    return np.append(drive, bias_polarity * v_read)


@dataclass(frozen=True)
class SmtjDevice:
    """Superparamagnetic MTJ in series with a resistor, read as a p-bit."""

    K: float = 58.9  # 1/V; 5%-95% over ~100 mV
    v_half: float = 0.575
    r_p: float = DEFAULT_R_P
    r_ap: float = 2 * DEFAULT_R_P
    r_series: float = 1000.0
    v_compliance: float = 1.0
    rate_scale: float = 1e8
    v_rest: float = 0.0
    read_noise_ohm: float = 0.0

    def __post_init__(self):
        if self.K <= 0:
            raise ContractError("K must be positive")
        if not self.r_ap > self.r_p > 0:
            raise ContractError("need R_AP > R_P > 0")
        if self.v_compliance <= self.v_half:
            raise ContractError("compliance voltage must exceed V_half")
        if self.rate_scale <= 0:
            raise ContractError("rate_scale must be positive")

    @property
    def r_mean(self) -> float:
        return 0.5 * (self.r_ap + self.r_p)

    @property
    def r_alpha(self) -> float:
        """Current-to-voltage conversion constant in ohm."""
        return 2.0 * (self.r_mean + self.r_series)


def smtj_probability(device: SmtjDevice, v_mtj: float) -> float:
    """Saturated antiparallel-state probability at drive voltage v_mtj."""
    if np.any(np.asarray(v_mtj) > device.v_compliance):
        raise ComplianceError(f"V_mtj={v_mtj} V exceeds compliance {device.v_compliance} V")
    return sigmoid(device.K * (np.asarray(v_mtj, dtype=np.float64) - device.v_half))


def mac_to_vmtj(i_mac_ua: float, device: SmtjDevice) -> tuple[float, bool]:
    """V_mtj = V_half + I_MAC * R_alpha, clamped at compliance. Returns (volts, clamped)."""
    v = device.v_half + i_mac_ua * 1e-6 * device.r_alpha
    if v > device.v_compliance:
        return device.v_compliance, True
    return v, False


def telegraph_rates(device: SmtjDevice, v_mtj: float) -> tuple[float, float]:
    """(P->AP, AP->P) switching rates whose stationary AP occupancy is the sigmoid."""
    x = 0.5 * device.K * (v_mtj - device.v_half)
    x = min(max(x, -350.0), 350.0)
    return device.rate_scale * math.exp(x), device.rate_scale * math.exp(-x)


def ap_probability(device: SmtjDevice, v_mtj: float, pulse_width: float | None = None) -> float:
    """AP occupancy at the end of a pulse of the given width.

    The junction starts the pulse in equilibrium with the rest voltage and
    relaxes toward the sigmoid with rate sum 2*rate_scale*cosh(K(V-V_half)/2).
    ``pulse_width=None`` means a saturating pulse.
    """
    p_inf = smtj_probability(device, v_mtj)
    if pulse_width is None:
        return float(p_inf)
    if pulse_width <= 0:
        raise ContractError("pulse_width must be positive")
    up, down = telegraph_rates(device, v_mtj)
    p0 = float(sigmoid(device.K * (device.v_rest - device.v_half)))
    return float(p_inf + (p0 - p_inf) * math.exp(-(up + down) * pulse_width))


def smtj_sample(
    device: SmtjDevice,
    v_mtj: float,
    pulse_width: float | None,
    rng: np.random.Generator,
) -> bool:
    """Single-point readout at pulse end; True means the AP (high-resistance) state."""
    p = ap_probability(device, v_mtj, pulse_width)
    ap = rng.random() < p
    r = device.r_ap if ap else device.r_p
    if device.read_noise_ohm > 0:
        r += rng.normal(0.0, device.read_noise_ohm)
    return r > device.r_mean


def smtj_frequencies(device, voltages, pulse_width, n_pulses, rng) -> np.ndarray:
    """AP fraction over n_pulses independent pulses at each voltage."""
    out = np.empty(len(voltages))
    for k, v in enumerate(voltages):
        p = ap_probability(device, v, pulse_width)
        out[k] = rng.binomial(n_pulses, p) / n_pulses
    return out


def fit_sigmoid(voltages, frequencies, n_pulses: int) -> tuple[float, float]:
    """Binomial maximum-likelihood fit of (K, V_half) to AP frequencies."""
    v = np.asarray(voltages, dtype=np.float64)
    k_ap = np.round(np.asarray(frequencies) * n_pulses)

    def nll(params):
        K, v_half = params
        z = K * (v - v_half)
        # log sigma(z) = -logaddexp(0, -z)
        return float(np.sum(k_ap * np.logaddexp(0, -z) + (n_pulses - k_ap) * np.logaddexp(0, z)))

    mid = v[np.argmin(np.abs(np.asarray(frequencies) - 0.5))]
    span = max(v.max() - v.min(), 1e-3)
    res = optimize.minimize(nll, x0=[8.0 / span, mid], method="Nelder-Mead",
                            options={"xatol": 1e-7, "fatol": 1e-9, "maxiter": 4000})
    return float(res.x[0]), float(res.x[1])


@dataclass(frozen=True)
class DeviceSpread:
    """Die-to-die variability drawn per SMTJ instance."""

    K_rel: float = 0.0
    v_half_abs: float = 0.0
    rate_rel: float = 0.0


def sample_device(base: SmtjDevice, spread: DeviceSpread, rng: np.random.Generator) -> SmtjDevice:
    K = base.K * max(1.0 + spread.K_rel * rng.standard_normal(), 0.1)
    v_half = base.v_half + spread.v_half_abs * rng.standard_normal()
    rate = base.rate_scale * math.exp(spread.rate_rel * rng.standard_normal())
    v_half = min(v_half, base.v_compliance - 1e-3)
    return replace(base, K=K, v_half=v_half, rate_scale=rate)


@dataclass(frozen=True)
class DriftModel:
    sigma_per_decade: float = 1.5
    bound: float = 15.0

    def __post_init__(self):
        if self.bound < 0 or self.sigma_per_decade < 0:
            raise ContractError("drift parameters must be nonnegative")


def _decades(hours: float) -> float:
    return max(0.0, math.log10(hours / DRIFT_ONSET_HOURS)) if hours > 0 else 0.0


def apply_drift(
    array: CrossbarArray,
    elapsed_hours: float,
    model: DriftModel,
    rng: np.random.Generator,
) -> CrossbarArray:
    """Age the array: a log-time Gaussian walk on every programmed cell.

    The walk variance accumulated between ages t0 and t1 is
    sigma_per_decade^2 * (decades(t1) - decades(t0)), with decades counted
    from 1e-3 h. The total offset from the programmed value is clamped to
    +-bound and conductances never go negative.
    """
    if elapsed_hours < 0:
        raise ContractError("elapsed_hours must be nonnegative")
    t0 = array.age_hours
    t1 = t0 + elapsed_hours
    dvar = model.sigma_per_decade ** 2 * (_decades(t1) - _decades(t0))
    if dvar <= 0:
        return replace(array, age_hours=t1)
    live = array.programmed > 0
    offset = array.drift_offset + np.where(live, rng.normal(0.0, math.sqrt(dvar), array.shape), 0.0)
    offset = np.clip(offset, -model.bound, model.bound)
    g = np.maximum(array.programmed + offset, 0.0)
    return replace(array, conductance=g, age_hours=t1)


def format_csv_value(x: float) -> str:
    return f"{x:.5e}"


def conductance_to_csv(matrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(matrix, dtype=np.float64):
        w.writerow(format_csv_value(x) for x in row)
    return buf.getvalue()


def save_conductance_csv(path, matrix) -> None:
    Path(path).write_text(conductance_to_csv(matrix))


def load_conductance_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        return np.array([[float(x) for x in row] for row in csv.reader(fh) if row])


__all__ = [
    "CrossbarArray", "ProgramVerifyConfig", "SmtjDevice", "DeviceSpread", "DriftModel",
    "program_and_verify", "mac_current", "spin_drive_voltages", "smtj_probability",
    "mac_to_vmtj", "ap_probability", "smtj_sample", "smtj_frequencies", "fit_sigmoid",
    "sample_device", "apply_drift", "save_conductance_csv", "load_conductance_csv",
    "telegraph_rates",
]
